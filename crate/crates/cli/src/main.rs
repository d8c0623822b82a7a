fn main() {
    std::process::exit(bpsurv_cli::run(std::env::args_os()));
}
