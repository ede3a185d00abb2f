use std::path::Path;
use std::process::{Command, Output};

use flipflop::io::{dmat, dten, obs, svd_files};
use flipflop_core::generate::{gen_completion_instance, gen_type1};
use flipflop_core::{DenseMatrix, DenseTensor};

fn flipflop(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_flipflop")).args(args).output().unwrap()
}

fn rows(out: &Output) -> Vec<Vec<String>> {
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = String::from_utf8(out.stdout.clone()).unwrap();
    text.lines().map(|l| l.split(',').map(String::from).collect()).collect()
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

#[test]
fn svd_files_match_the_table() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("a.dmat");
    dmat::save(&input, &gen_type1(90, 70, 40, 2)).unwrap();
    let prefix = dir.path().join("res");
    let out =
        flipflop(&["--seed", "4", "svd", "--input", p(&input), "--k", "6", "--l-offset", "4", "--save", p(&prefix)]);
    let table = rows(&out);
    assert_eq!(table[0][..4], ["kind", "method", "k", "status"]);
    assert_eq!(table[1][..4], ["svd-accuracy", "flipflop", "6", "ok"]);

    let (svd, meta) = svd_files::load(&prefix).unwrap();
    assert_eq!(svd.u.shape(), (90, 6));
    assert_eq!(svd.v.shape(), (70, 6));
    let printed: Vec<f64> = table[1][8].split(';').map(|s| s.parse().unwrap()).collect();
    assert_eq!(printed, svd.sigma);
    assert_eq!(meta.get_str("l"), Some("10"));
    assert_eq!(meta.get_str("seed"), Some("4"));
}

#[test]
fn tensor_outputs_reconstruct() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("x.dten");
    let x = DenseTensor::from_fn(&[6, 5, 4], |i| (i[0] + 2 * i[1]) as f64 * (1.0 + i[2] as f64));
    dten::save(&input, &x).unwrap();
    let prefix = dir.path().join("t");
    let out = flipflop(&[
        "tensor",
        "--input",
        p(&input),
        "--ranks",
        "2,2,1",
        "--order",
        "2,0,1",
        "--method",
        "exact",
        "--save",
        p(&prefix),
    ]);
    let table = rows(&out);
    let err: f64 = table[1][4].parse().unwrap();
    assert!(err <= 1e-12, "{err}");

    let mut t = dten::load(&dir.path().join("t.core.dten")).unwrap();
    assert_eq!(t.dims(), &[2, 2, 1]);
    for n in 0..3 {
        let u = dmat::load(&dir.path().join(format!("t.U{n}.dmat"))).unwrap();
        t = t.nmode_product(&u, n).unwrap();
    }
    assert!(t.sub(&x).unwrap().norm_fro() <= 1e-10 * x.norm_fro());
}

#[test]
fn completion_from_files() {
    let dir = tempfile::tempdir().unwrap();
    let (_, train, test) = gen_completion_instance(40, 30, 2, 0.6, 3).unwrap();
    let (train_path, test_path) = (dir.path().join("train.txt"), dir.path().join("test.txt"));
    obs::save_triplets(&train_path, &train).unwrap();
    obs::save_triplets(&test_path, &test).unwrap();
    let trace = dir.path().join("trace.tsv");
    let out = flipflop(&[
        "--format",
        "tsv",
        "complete",
        "--input",
        p(&train_path),
        "--shape",
        "40,30",
        "--test",
        p(&test_path),
        "--r-min",
        "-5",
        "--r-max",
        "5",
        "--trace",
        p(&trace),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = String::from_utf8(out.stdout).unwrap();
    let fields: Vec<&str> = text.lines().nth(1).unwrap().split('\t').collect();
    assert_eq!(fields[0], "completion");
    assert!(fields[4].parse::<f64>().unwrap() <= 1e-3);
    assert!(String::from_utf8_lossy(&out.stderr).starts_with("nmae="));
    let trace = std::fs::read_to_string(trace).unwrap();
    assert!(trace.starts_with("iter\tresidual\tmu\tsv\trank"));
    assert_eq!(trace.lines().count() as u64 - 1, fields[6].parse::<u64>().unwrap());
}

#[test]
fn bench_reads_config_and_writes_file() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.cfg");
    std::fs::write(
        &cfg,
        "# small accuracy sweep\nkind = svd-accuracy\nm = 60\nn = 50\ns = 30\nks = 4, 8\nmethods = exact,flipflop\n",
    )
    .unwrap();
    let out_path = dir.path().join("out.csv");
    let out = flipflop(&["--config", p(&cfg), "--seed", "3", "--out", p(&out_path), "bench"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = std::fs::read_to_string(out_path).unwrap();
    let methods: Vec<&str> = text.lines().skip(1).map(|l| l.split(',').nth(1).unwrap()).collect();
    assert_eq!(methods, ["exact", "exact", "flipflop", "flipflop"]);
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.cfg");
    std::fs::write(&cfg, "kind = rpca\ncolour = blue\n").unwrap();
    assert_eq!(flipflop(&["--config", p(&cfg), "bench"]).status.code(), Some(2));
    assert_eq!(flipflop(&["svd", "--input", p(&dir.path().join("missing.dmat")), "--k", "2"]).status.code(), Some(2));
    assert_eq!(flipflop(&["svd", "--k", "2"]).status.code(), Some(2));

    let nan = dir.path().join("nan.csv");
    let mut a = DenseMatrix::from_fn(20, 20, |i, j| (i * j) as f64);
    a[(3, 4)] = f64::NAN;
    flipflop::io::save_matrix(&nan, &a).unwrap();
    let out = flipflop(&["svd", "--input", p(&nan), "--k", "2"]);
    assert_eq!(out.status.code(), Some(3), "{}", String::from_utf8_lossy(&out.stderr));
}
