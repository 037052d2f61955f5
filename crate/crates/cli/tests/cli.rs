use std::path::Path;
use std::process::{Command, Output};

const TINY: &[&str] = &[
    "data.clips=3",
    "data.frames=4",
    "data.width=16",
    "data.height=16",
    "data.sprites=1",
    "lafc.base_channels=4",
    "lafc.edge_channels=4",
    "lafc_train.iterations=2",
    "fgt.channels=8",
    "fgt.heads=2",
    "fgt_train.iterations=2",
    "sweep.numbers=[1, 3]",
    "sweep.seeds=[0]",
    "sweep.val_clips=1",
];

fn fgt(args: &[&str]) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_fgt"));
    cmd.env("RUST_LOG", "warn").args(args);
    for s in TINY {
        cmd.args(["--set", s]);
    }
    cmd.output().expect("run fgt")
}

fn ok(args: &[&str]) -> serde_json::Value {
    let out = fgt(args);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).expect("json summary")
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn end_to_end_on_a_tiny_dataset() {
    let dir = tempfile::tempdir().unwrap();
    let root = dir.path();
    let data = root.join("data");
    let summary = ok(&["gen-data", "--out", s(&data)]);
    assert_eq!(summary["clips"].as_array().unwrap().len(), 3);

    let (lafc, fgt_ck) = (root.join("lafc.ckpt"), root.join("fgt.ckpt"));
    ok(&["train-lafc", "--data", s(&data), "--out", s(&lafc), "--log", s(&root.join("lafc.csv"))]);
    ok(&["train-fgt", "--data", s(&data), "--out", s(&fgt_ck)]);
    assert!(std::fs::read_to_string(root.join("lafc.csv")).unwrap().starts_with("iteration"));

    let clip = data.join("clip_000");
    let out = root.join("out");
    let inp = ok(&["inpaint", "--input", s(&clip), "--fgt", s(&fgt_ck), "--lafc", s(&lafc), "--out", s(&out)]);
    assert_eq!(inp["frames"], 4);
    assert_eq!(inp["stages"].as_array().unwrap().len(), 3);

    // same inputs, same bytes
    let again = root.join("again");
    ok(&["inpaint", "--input", s(&clip), "--fgt", s(&fgt_ck), "--lafc", s(&lafc), "--out", s(&again)]);
    for i in 0..4 {
        let name = format!("frames/{i:05}.png");
        assert_eq!(std::fs::read(out.join(&name)).unwrap(), std::fs::read(again.join(&name)).unwrap());
    }

    let eval = ok(&["evaluate", "--pred", s(&out), "--gt", s(&clip), "--csv", s(&root.join("eval.csv"))]);
    assert!(eval["psnr_full"].as_f64().unwrap() > eval["psnr_hole"].as_f64().unwrap());

    let sweep = ok(&["sweep", "--data", s(&data), "--out", s(&root.join("sweep.csv"))]);
    assert_eq!(sweep.as_array().unwrap().len(), 2);
}

#[test]
fn errors_name_the_stage_and_exit_nonzero() {
    let dir = tempfile::tempdir().unwrap();
    let out = fgt(&["inpaint", "--input", s(&dir.path().join("missing")), "--fgt", "x.ckpt", "--out", s(dir.path())]);
    assert!(!out.status.success());
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("error: [input]"), "{err}");

    let out = fgt(&["gen-data", "--out", s(dir.path()), "--set", "fgt.zones=\"wide\""]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("[config]"));
}
