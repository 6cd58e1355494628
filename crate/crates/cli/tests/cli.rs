use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use finfom::domain::{FinMaterial, GRID_FREQUENCIES, GRID_PITCHES, GRID_SPOS, GRID_STROKES};

fn finfom(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_finfom"))
        .current_dir(dir)
        .env_remove("FINFOM_SEED")
        .env("FINFOM_LOG", "warn")
        .args(args)
        .output()
        .expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exited normally")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn attainable_by_hand() -> usize {
    let mut n = 0;
    for f in GRID_FREQUENCIES {
        for s in GRID_STROKES {
            for p in GRID_PITCHES {
                n += GRID_SPOS.len() * usize::from(s < 97.0 - 30.0 * f && p < 75.0 - 26.0 * f);
            }
        }
    }
    n
}

#[test]
fn help_exits_zero() {
    let dir = tempfile::tempdir().unwrap();
    let o = finfom(dir.path(), &["--help"]);
    assert_eq!(code(&o), 0);
    for sub in [
        "gen-data", "train", "sweep", "contour", "trends", "select", "bench",
    ] {
        assert!(stdout(&o).contains(sub), "{sub} missing from usage");
    }
    assert_eq!(code(&finfom(dir.path(), &["select", "--help"])), 0);
}

#[test]
fn gen_data_writes_one_file_per_material_deterministically() {
    let dir = tempfile::tempdir().unwrap();
    let o = finfom(dir.path(), &["gen-data"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let expected = attainable_by_hand();
    assert_eq!(expected, 556);
    for m in FinMaterial::ALL {
        assert!(stdout(&o).contains(&format!("{m}: {expected} attainable gaits")));
    }
    let first: Vec<Vec<u8>> = FinMaterial::ALL
        .iter()
        .map(|m| fs::read(dir.path().join(format!("out/data/{m}.csv"))).unwrap())
        .collect();
    assert_eq!(code(&finfom(dir.path(), &["gen-data"])), 0);
    for (m, bytes) in FinMaterial::ALL.iter().zip(&first) {
        assert_eq!(
            &fs::read(dir.path().join(format!("out/data/{m}.csv"))).unwrap(),
            bytes
        );
    }
}

#[test]
fn unwritable_output_is_an_io_error() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("blocker"), "").unwrap();
    let o = finfom(
        dir.path(),
        &[
            "--out-dir",
            "blocker/out",
            "--material",
            "rigid",
            "gen-data",
        ],
    );
    assert_eq!(code(&o), 4, "{}", stderr(&o));
}

#[test]
fn bad_config_is_an_input_error() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("run.toml"), "velocity = \"fast\"\n").unwrap();
    assert_eq!(
        code(&finfom(dir.path(), &["--config", "run.toml", "gen-data"])),
        2
    );
    assert_eq!(
        code(&finfom(
            dir.path(),
            &["--config", "missing.toml", "gen-data"]
        )),
        2
    );
    assert_eq!(
        code(&finfom(dir.path(), &["--material", "steel", "gen-data"])),
        2
    );
}

#[test]
fn config_and_env_select_materials_and_paths() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(
        dir.path().join("run.toml"),
        "materials = [\"pdms_1_20\"]\n[paths]\ndata_dir = \"trials\"\n",
    )
    .unwrap();
    let o = finfom(dir.path(), &["--config", "run.toml", "gen-data"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert!(dir.path().join("trials/pdms_1_20.csv").exists());
    assert!(!dir.path().join("trials/rigid.csv").exists());

    let o = Command::new(env!("CARGO_BIN_EXE_finfom"))
        .current_dir(dir.path())
        .env("FINFOM_LOG", "warn")
        .env("FINFOM_MATERIALS", "rigid")
        .env("FINFOM_DATA_DIR", "env_trials")
        .arg("gen-data")
        .output()
        .unwrap();
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert!(dir.path().join("env_trials/rigid.csv").exists());
}

#[test]
fn bench_without_models_is_missing_model() {
    let dir = tempfile::tempdir().unwrap();
    let o = finfom(dir.path(), &["bench"]);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("no trained models"));
}

#[test]
fn train_all_kinds_writes_eight_models_reproducibly() {
    let dir = tempfile::tempdir().unwrap();
    let m = ["--material", "rigid"];
    assert_eq!(
        code(&finfom(dir.path(), &[&m[..], &["gen-data"]].concat())),
        0
    );
    let o = finfom(dir.path(), &[&m[..], &["train", "--epochs", "2"]].concat());
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let models = dir.path().join("out/models");
    let mut names: Vec<String> = fs::read_dir(&models)
        .unwrap()
        .map(|e| e.unwrap().file_name().into_string().unwrap())
        .collect();
    names.sort();
    assert_eq!(names.len(), 8, "{names:?}");

    let eval = fs::read_to_string(dir.path().join("out/eval/rigid.csv")).unwrap();
    assert_eq!(eval.lines().count(), 9);

    let before: Vec<Vec<u8>> = names
        .iter()
        .map(|n| fs::read(models.join(n)).unwrap())
        .collect();
    let eval_before = eval.clone();
    assert_eq!(
        code(&finfom(
            dir.path(),
            &[&m[..], &["train", "--epochs", "2"]].concat()
        )),
        0
    );
    for (n, b) in names.iter().zip(&before) {
        assert_eq!(
            &fs::read(models.join(n)).unwrap(),
            b,
            "{n} changed on rerun"
        );
    }
    assert_eq!(
        fs::read_to_string(dir.path().join("out/eval/rigid.csv")).unwrap(),
        eval_before
    );

    let o = finfom(dir.path(), &[&m[..], &["bench"]].concat());
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert_eq!(stdout(&o).lines().count(), 9);
}

#[test]
fn sweep_contour_trends_and_select() {
    let dir = tempfile::tempdir().unwrap();
    let run = |args: &[&str]| {
        finfom(
            dir.path(),
            &[&["--material", "pdms_1_10"][..], args].concat(),
        )
    };
    assert_eq!(code(&run(&["gen-data"])), 0);
    assert_eq!(
        code(&run(&["select", "--mode", "max-efficiency"])),
        2,
        "select before sweep"
    );
    assert_eq!(code(&run(&["train", "--kind", "quartic"])), 0);
    let o = run(&["sweep"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert!(stdout(&o).contains("297297 attainable points"));

    let o = run(&["contour", "--freq", "2", "--spo", "0"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert!(stdout(&o).contains("37 stroke x 23 pitch"));
    let slice =
        fs::read_to_string(dir.path().join("out/contour/pdms_1_10_quartic_f2_spo0.csv")).unwrap();
    assert_eq!(slice.lines().count(), 1 + 56 * 56);
    assert_eq!(code(&run(&["contour", "--freq", "1.9", "--spo", "0"])), 2);
    assert_eq!(code(&run(&["contour", "--freq", "2", "--spo", "3"])), 2);

    assert_eq!(code(&run(&["trends"])), 0);
    let by_f = fs::read_to_string(
        dir.path()
            .join("out/trends/pdms_1_10_quartic_frequency.csv"),
    )
    .unwrap();
    let by_spo =
        fs::read_to_string(dir.path().join("out/trends/pdms_1_10_quartic_spo.csv")).unwrap();
    assert_eq!(by_f.lines().count(), 1 + 11);
    assert_eq!(by_spo.lines().count(), 1 + 13);

    let optimum: serde_json::Value = serde_json::from_str(
        &fs::read_to_string(dir.path().join("out/sweep/pdms_1_10_quartic_optimum.json")).unwrap(),
    )
    .unwrap();
    let o = run(&["select", "--mode", "max-efficiency"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let sel: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(sel[0]["selections"][0]["gait"], optimum["gait"]);
    assert_eq!(sel[0]["selections"][0]["report"], optimum["report"]);
    assert_eq!(sel[0]["grid_hash"], optimum["grid_hash"]);
    assert_eq!(sel[0]["models"], optimum["models"]);

    let o = run(&["select", "--target-thrust", "99"]);
    assert_eq!(code(&o), 3);
    assert!(stderr(&o).contains("nearest achievable thrust"));

    let o = run(&[
        "select",
        "--target-thrust",
        "1.0",
        "--tolerance",
        "0.05",
        "--top",
        "3",
    ]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let sel: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    let picks = sel[0]["selections"].as_array().unwrap();
    assert_eq!(picks.len(), 3);
    for p in picks {
        assert!((p["report"]["mean_force_n"].as_f64().unwrap() - 1.0).abs() <= 0.05);
    }

    assert_eq!(code(&run(&["select", "--mode", "meet-thrust"])), 2);
    assert_eq!(
        code(&run(&["select", "--target-thrust", "1", "--weight", "2"])),
        2
    );
}
