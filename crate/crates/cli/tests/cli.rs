use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn bvae(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_bvae"))
        .current_dir(dir)
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

#[test]
fn gen_data_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    for out in ["a.csv", "b.csv"] {
        let o = bvae(d, &["gen-data", "--kind", "linear", "--n", "300", "--seed", "1", "--out", out]);
        assert!(o.status.success(), "{o:?}");
    }
    let a = fs::read_to_string(d.join("a.csv")).unwrap();
    assert_eq!(a, fs::read_to_string(d.join("b.csv")).unwrap());
    assert_eq!(a.lines().count(), 302);

    let o = bvae(d, &["gen-data", "--kind", "nonlinear", "--n", "10", "--out-dir", "nl"]);
    assert!(o.status.success());
    let meta = fs::read_to_string(d.join("nl/data.csv")).unwrap();
    assert!(meta.starts_with("# kind=nonlinear seed=0 n=10 layers="));
}

#[test]
fn invalid_kind_fails() {
    let dir = tempfile::tempdir().unwrap();
    let o = bvae(dir.path(), &["gen-data", "--kind", "cubic"]);
    assert!(!o.status.success());
    assert!(!dir.path().join("out").exists());
}

#[test]
fn train_analyze_baseline_pipeline() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    assert!(bvae(d, &["gen-data", "--n", "600", "--seed", "2", "--out", "data.csv"]).status.success());
    fs::write(d.join("run.cfg"), "# small run\nhidden=16\nlog_every=20\n").unwrap();
    let o = bvae(
        d,
        &["train", "--data", "data.csv", "--config", "run.cfg", "--latents", "3", "--iters", "100", "--out-dir", "run"],
    );
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let trace = fs::read_to_string(d.join("run/trace.csv")).unwrap();
    assert!(trace.starts_with("iter,beta,recon,kl_total,kl_0,kl_1,kl_2\n"));
    assert_eq!(trace.lines().count(), 1 + 5 + 1);
    let ck = fs::read_to_string(d.join("run/checkpoint.txt")).unwrap();
    assert!(ck.contains("latent_dim=3 hidden=16 ") && ck.contains("total_iters=100 seed=0 log_every=20"));

    let o = bvae(d, &["analyze", "--checkpoint", "run/checkpoint.txt", "--data", "data.csv", "--out-dir", "an"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(stdout(&o).contains("active_count="));
    for f in ["report.txt", "grid_latents_y.csv", "scatter_latents_ica.svg"] {
        assert!(d.join("an").join(f).is_file(), "{f}");
    }

    let o = bvae(d, &["baseline", "--data", "data.csv", "--out-dir", "bl"]);
    assert!(o.status.success());
    assert!(stdout(&o).contains("ica_max_abs_r: 0.99"), "{}", stdout(&o));
}

#[test]
fn zero_learning_rate_leaves_initial_checkpoint() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    assert!(bvae(d, &["gen-data", "--n", "300", "--out", "data.csv"]).status.success());
    for (iters, out) in [("1", "one"), ("40", "forty")] {
        let o = bvae(d, &["train", "--data", "data.csv", "--lr", "0", "--iters", iters, "--out-dir", out]);
        assert!(o.status.success());
    }
    let strip = |p: &str| {
        let t = fs::read_to_string(d.join(p)).unwrap();
        t.lines().filter(|l| !l.starts_with("config ")).collect::<Vec<_>>().join("\n")
    };
    assert_eq!(strip("one/checkpoint.txt"), strip("forty/checkpoint.txt"));
}

#[test]
fn divergence_exits_nonzero_with_partial_trace() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    assert!(bvae(d, &["gen-data", "--n", "300", "--out", "data.csv"]).status.success());
    let o = bvae(d, &["train", "--data", "data.csv", "--lr", "1e100", "--log-every", "1", "--out-dir", "div"]);
    assert!(!o.status.success());
    assert!(String::from_utf8_lossy(&o.stderr).contains("diverged"));
    assert_eq!(fs::read_to_string(d.join("div/trace.csv")).unwrap().lines().count(), 2);
}

#[test]
fn missing_inputs_and_bad_config_fail() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    assert!(!bvae(d, &["analyze", "--checkpoint", "x", "--data", "y"]).status.success());
    assert!(!bvae(d, &["train"]).status.success());
    fs::write(d.join("bad.cfg"), "lr=fast\n").unwrap();
    assert!(bvae(d, &["gen-data", "--n", "50", "--out", "data.csv"]).status.success());
    let o = bvae(d, &["train", "--data", "data.csv", "--config", "bad.cfg"]);
    assert!(!o.status.success());
    assert!(String::from_utf8_lossy(&o.stderr).contains("bad.cfg:1"), "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn reproduce_twice_is_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let args = |out: &'static str| {
        vec!["reproduce", "--n", "300", "--linear-iters", "30", "--nonlinear-iters", "30", "--seed", "4", "--out-dir", out]
    };
    let a = bvae(d, &args("a"));
    let b = bvae(d, &args("b"));
    assert!(a.status.success() && b.status.success(), "{}", String::from_utf8_lossy(&a.stderr));
    let sa = fs::read(d.join("a/summary.csv")).unwrap();
    assert_eq!(sa, fs::read(d.join("b/summary.csv")).unwrap());
    assert_eq!(stdout(&a), stdout(&b));
    assert!(String::from_utf8_lossy(&sa).starts_with("run,dataset,latents,active,pca_likeness,ica_likeness,psnr_test\n"));
}
