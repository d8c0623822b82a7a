use std::path::Path;
use std::process::{Command, Output};

fn bpsurv(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_bpsurv")).args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

const QUICK_BAYES: &[&str] = &["--chains", "2", "--iter", "200", "--steps-per-iter", "20"];

#[test]
fn larynx_ml_report() {
    let o = bpsurv(&["fit", "--fixture", "larynx", "--model", "ph", "--approach", "mle"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let out = stdout(&o);
    assert!(out.contains("Bernstein Polynomial based Proportional Hazards model"));
    assert!(out.contains("n= 90, number of events= 50"));
    assert!(out.contains("Likelihood ratio test= 19.6 on 4 df"), "{out}");
    assert!(out.contains("Wald test            = 22.6 on 4 df"), "{out}");
    assert!(out.contains("stage4"));
}

#[test]
fn priors_with_mle_warn_and_continue() {
    let o = bpsurv(&["fit", "--fixture", "larynx", "--approach", "mle", "--prior-preset", "prior2"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stderr(&o).contains("Priors are ignored due to mle approach."));
}

#[test]
fn usage_errors_exit_64() {
    assert_eq!(bpsurv(&["fit", "--fixture", "larynx", "--degree", "0"]).status.code(), Some(64));
    assert_eq!(bpsurv(&["fit", "--fixture", "larynx", "--model", "cox"]).status.code(), Some(64));
    assert_eq!(bpsurv(&["fit"]).status.code(), Some(64));
    assert_eq!(bpsurv(&["frobnicate"]).status.code(), Some(64));
    assert_eq!(
        bpsurv(&["fit", "--fixture", "larynx", "--approach", "mle", "--level", "1.5"]).status.code(),
        Some(64)
    );
    assert_eq!(bpsurv(&["fit", "--fixture", "larynx", "--prior-beta", "cauchy(0,1)"]).status.code(), Some(64));
    assert_eq!(bpsurv(&["fit", "--fixture", "larynx", "--model", "waft", "--approach", "bayes"]).status.code(), Some(64));
    assert_eq!(bpsurv(&["--help"]).status.code(), Some(0));
}

#[test]
fn data_errors_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(bpsurv(&["fit", "--fixture", "nope"]).status.code(), Some(2));
    assert_eq!(
        bpsurv(&["fit", "--fixture", "larynx", "--covariates", "weight", "--approach", "mle"]).status.code(),
        Some(2)
    );
    let bad = dir.path().join("bad.csv");
    std::fs::write(&bad, "time,status,x\n1.0,1,0.5\n-2.0,0,0.1\n").unwrap();
    let o = bpsurv(&["fit", "--data", bad.to_str().unwrap(), "--covariates", "x", "--approach", "mle"]);
    assert_eq!(o.status.code(), Some(2), "{}", stderr(&o));
    let missing = dir.path().join("missing.csv");
    assert_eq!(bpsurv(&["fit", "--data", missing.to_str().unwrap()]).status.code(), Some(2));
}

#[test]
fn no_events_is_a_data_error() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("censored.csv");
    std::fs::write(&path, "time,status,x\n1,0,0.5\n2,0,0.1\n3,0,0.9\n").unwrap();
    let o = bpsurv(&["fit", "--data", path.to_str().unwrap(), "--covariates", "x", "--approach", "mle"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn json_mirror_carries_full_precision() {
    let o = bpsurv(&["fit", "--fixture", "larynx", "--approach", "mle", "--format", "json"]);
    assert_eq!(o.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    let lr = v["lr_test"]["statistic"].as_f64().unwrap();
    assert!((lr - 19.6).abs() < 0.05);
    assert_eq!(v["lr_test"]["df"], 4);
    assert_eq!(v["n"], 90);
    let coefs = v["coefficients"].as_array().unwrap();
    assert_eq!(coefs.len(), 4);
    assert_eq!(coefs[3]["name"], "stage4");
    let text = stdout(&bpsurv(&["fit", "--fixture", "larynx", "--approach", "mle"]));
    let shown = format!("{:.4}", coefs[3]["coef"].as_f64().unwrap());
    assert!(text.contains(&shown));
}

#[test]
fn csv_report_has_a_row_per_coefficient() {
    let o = bpsurv(&["fit", "--fixture", "larynx", "--approach", "mle", "--format", "csv"]);
    let out = stdout(&o);
    let mut lines = out.lines();
    assert_eq!(lines.next().unwrap(), "name,coef,exp_coef,se,z,p_value,lower,upper");
    assert_eq!(lines.count(), 4);
}

fn save_fit(dir: &Path, extra: &[&str]) -> String {
    let path = dir.join("fit.json").to_str().unwrap().to_string();
    let mut args = vec!["fit", "--fixture", "larynx", "--save", &path];
    args.extend_from_slice(extra);
    let o = bpsurv(&args);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    path
}

fn stage_profiles(dir: &Path) -> String {
    let path = dir.join("profiles.csv");
    std::fs::write(&path, "age,stage\n77,1\n77,2\n77,3\n77,4\n").unwrap();
    path.to_str().unwrap().to_string()
}

fn curves(csv_text: &str) -> Vec<Vec<f64>> {
    let mut r = csv::Reader::from_reader(csv_text.as_bytes());
    r.records().map(|rec| rec.unwrap().iter().map(|c| c.parse().unwrap()).collect()).collect()
}

#[test]
fn survcurves_from_a_saved_ml_fit() {
    let dir = tempfile::tempdir().unwrap();
    let fit = save_fit(dir.path(), &["--approach", "mle"]);
    let profiles = stage_profiles(dir.path());
    let o = bpsurv(&["survcurve", "--load", &fit, "--newdata", &profiles, "--grid", "25"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let out = stdout(&o);
    assert!(out.starts_with("time,profile_id,survival\n"));
    let rows = curves(&out);
    assert_eq!(rows.len(), 100);
    for profile in rows.chunks(25) {
        assert_eq!(profile[0][0], 0.0);
        assert_eq!(profile[0][2], 1.0);
        assert!(profile.windows(2).all(|w| w[1][2] <= w[0][2]));
    }
    // Stage IV carries the largest hazard.
    assert!(rows[99][2] < rows[24][2]);
}

#[test]
fn bayesian_survcurves_have_bands() {
    let dir = tempfile::tempdir().unwrap();
    let mut extra = vec!["--approach", "bayes"];
    extra.extend_from_slice(QUICK_BAYES);
    let fit = save_fit(dir.path(), &extra);
    let profiles = stage_profiles(dir.path());
    let o = bpsurv(&["survcurve", "--load", &fit, "--newdata", &profiles, "--times", "0,2,4"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let out = stdout(&o);
    assert!(out.starts_with("time,profile_id,survival,hpd_lo,hpd_hi\n"));
    for row in curves(&out) {
        assert!(row[3] <= row[2] + 1e-12 && row[2] <= row[4] + 1e-12, "{row:?}");
        if row[0] == 0.0 {
            assert_eq!(row[2], 1.0);
        }
    }
}

#[test]
fn survcurve_profile_mismatch_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let fit = save_fit(dir.path(), &["--approach", "mle"]);
    let bad = dir.path().join("bad.csv");
    std::fs::write(&bad, "age\n77\n").unwrap();
    let o = bpsurv(&["survcurve", "--load", &fit, "--newdata", bad.to_str().unwrap(), "--times", "1"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn residual_table_columns() {
    let o = bpsurv(&["residuals", "--fixture", "larynx", "--model", "waft"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let out = stdout(&o);
    assert!(out.starts_with("residual,status,km,exp_neg_r\n"));
    let rows = curves(&out);
    assert_eq!(rows.len(), 90);
    assert!(rows.windows(2).all(|w| w[0][0] <= w[1][0]));
}

#[test]
fn all_censored_residuals_have_flat_kaplan_meier() {
    let dir = tempfile::tempdir().unwrap();
    let fit = save_fit(dir.path(), &["--approach", "mle"]);
    let path = dir.path().join("censored.csv");
    std::fs::write(&path, "time,delta,age,stage\n1.5,0,60,1\n3.2,0,70,2\n0.7,0,55,3\n4.1,0,80,4\n").unwrap();
    let o = bpsurv(&["residuals", "--load", &fit, "--data", path.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let rows = curves(&stdout(&o));
    assert_eq!(rows.len(), 4);
    assert!(rows.iter().all(|r| r[2] == 1.0));
}

#[test]
fn seeded_bayes_fits_are_bit_identical_across_threads() {
    let run = |threads: &str| {
        let mut args = vec!["--threads", threads, "fit", "--fixture", "larynx", "--format", "json", "--seed", "7"];
        args.extend_from_slice(QUICK_BAYES);
        let o = bpsurv(&args);
        assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
        o.stdout
    };
    let a = run("1");
    assert_eq!(a, run("1"));
    assert_eq!(a, run("2"));
    let env = Command::new(env!("CARGO_BIN_EXE_bpsurv"))
        .env("BPSURV_THREADS", "2")
        .args(["fit", "--fixture", "larynx", "--format", "json", "--seed", "7"])
        .args(QUICK_BAYES)
        .output()
        .unwrap();
    assert_eq!(a, env.stdout);
}

#[test]
fn draws_file_has_a_row_per_kept_draw() {
    let dir = tempfile::tempdir().unwrap();
    let draws = dir.path().join("draws.csv");
    let mut args = vec!["fit", "--fixture", "larynx", "--draws", draws.to_str().unwrap()];
    args.extend_from_slice(QUICK_BAYES);
    assert_eq!(bpsurv(&args).status.code(), Some(0));
    let text = std::fs::read_to_string(draws).unwrap();
    let mut lines = text.lines();
    assert!(lines.next().unwrap().starts_with("chain,iteration,age,stage2,stage3,stage4,gamma1"));
    assert_eq!(lines.count(), 2 * 100);
}

fn scenario(dir: &Path) -> String {
    let path = dir.join("scenario.toml");
    std::fs::write(
        &path,
        r#"
replications = 10
seed = 3

[generator]
family = "waft"
beta = [2.0, -1.0]
shape = 2.0
baseline_scale = 1.0
censor_scale = 1.4
censor_shape = 2.0
n = 100
covariates = [{ law = "normal", mean = 0.0, sd = 1.0 }, { law = "bernoulli", p = 0.5 }]

[[plans]]
label = "waft"
model = "waft"
approach = "mle"
"#,
    )
    .unwrap();
    path.to_str().unwrap().to_string()
}

#[test]
fn simulate_writes_reproducible_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let scen = scenario(dir.path());
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    for out in [&a, &b] {
        let o = bpsurv(&["simulate", "--scenario", &scen, "--out", out.to_str().unwrap()]);
        assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
        assert!(stdout(&o).contains("10 of 10 replications valid"));
    }
    for file in ["replications.csv", "report.json", "censoring.csv"] {
        assert_eq!(std::fs::read(a.join(file)).unwrap(), std::fs::read(b.join(file)).unwrap(), "{file}");
    }
    let report: serde_json::Value = serde_json::from_slice(&std::fs::read(a.join("report.json")).unwrap()).unwrap();
    let coefs = report["reports"][0]["coefficients"].as_array().unwrap();
    assert!(coefs.iter().all(|c| c["est"].as_f64().unwrap().is_finite()));
}

#[test]
fn bad_scenarios_exit_64() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.toml");
    std::fs::write(&path, "replications = \"many\"\n").unwrap();
    let out = dir.path().join("out");
    let o = bpsurv(&["simulate", "--scenario", path.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(64));
    let scen = scenario(dir.path());
    let o = bpsurv(&["simulate", "--scenario", &scen, "--out", out.to_str().unwrap(), "--replications", "0"]);
    assert_eq!(o.status.code(), Some(64));
}
