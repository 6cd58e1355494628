use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use finfom::dataio::{
    build_dataset, load_trials, synth_trials, write_trials, Dataset, PlantConfig,
};
use finfom::domain::{attainable_test_grid, FinMaterial, CYCLE_STEPS};
use finfom::selector::{run_query, SelectionMode, SelectionQuery};
use finfom::surrogate::{
    evaluate, fit_kind, load_model, measure_throughput, save_model, ModelKind, SurrogateModel,
    Target,
};
use finfom::sweep::{
    contour_slice, global_optimum, read_grid, run_sweep, trend_by_frequency, trend_by_spo,
    write_grid, write_slice, write_trend, SweepGrid, REFERENCE_POINT_COUNT,
};
use serde::Serialize;

use crate::config::RunConfig;
use crate::error::CliError;

/// Minimum sustained single-threaded predictions per second.
pub const MIN_THROUGHPUT: f64 = 100.0;

fn ensure_dir(dir: &Path) -> Result<(), CliError> {
    fs::create_dir_all(dir).map_err(|e| CliError::io(dir.display(), e))
}

fn write_text(path: &Path, text: &str) -> Result<(), CliError> {
    fs::write(path, text).map_err(|e| CliError::io(path.display(), e))
}

fn json<T: Serialize>(v: &T) -> String {
    serde_json::to_string_pretty(v).expect("plain data serializes")
}

fn plant_config(cfg: &RunConfig) -> Result<PlantConfig, CliError> {
    let mut plant = match &cfg.plant {
        Some(path) => {
            let text = fs::read_to_string(path)
                .map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
            PlantConfig::from_json(&text)
                .map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?
        }
        None => PlantConfig::default(),
    };
    plant.rng_seed = cfg.seed;
    Ok(plant)
}

pub fn trial_path(cfg: &RunConfig, m: FinMaterial) -> PathBuf {
    cfg.data_dir().join(format!("{m}.csv"))
}

pub fn model_path(cfg: &RunConfig, m: FinMaterial, target: Target, kind: ModelKind) -> PathBuf {
    cfg.model_dir().join(format!("{m}_{target}_{kind}.model"))
}

pub fn grid_path(cfg: &RunConfig, m: FinMaterial, kind: ModelKind) -> PathBuf {
    cfg.out_dir.join("sweep").join(format!("{m}_{kind}.csv"))
}

pub fn gen_data(cfg: &RunConfig) -> Result<(), CliError> {
    let plant = plant_config(cfg)?;
    let gaits = attainable_test_grid();
    ensure_dir(&cfg.data_dir())?;
    for &m in &cfg.materials {
        let trials = synth_trials(m, &gaits, &plant)?;
        let path = trial_path(cfg, m);
        write_trials(&path, &trials)?;
        println!(
            "{m}: {} attainable gaits -> {}",
            trials.len(),
            path.display()
        );
    }
    Ok(())
}

fn load_dataset(cfg: &RunConfig, m: FinMaterial) -> Result<Dataset, CliError> {
    let path = trial_path(cfg, m);
    if !path.exists() {
        return Err(CliError::Input(format!(
            "{} not found; run `finfom gen-data` first",
            path.display()
        )));
    }
    Ok(build_dataset(&load_trials(&path)?, CYCLE_STEPS)?)
}

fn runtime_class(per_second: f64) -> &'static str {
    if per_second >= 10_000.0 {
        ">=10k/s"
    } else if per_second >= MIN_THROUGHPUT {
        ">=100/s"
    } else {
        "<100/s"
    }
}

pub fn train(cfg: &RunConfig, kinds: &[ModelKind], all_gaits: bool) -> Result<(), CliError> {
    ensure_dir(&cfg.model_dir())?;
    let eval_dir = cfg.out_dir.join("eval");
    ensure_dir(&eval_dir)?;
    for &m in &cfg.materials {
        let data = load_dataset(cfg, m)?;
        let (train, holdout) = if all_gaits {
            (data.clone(), data.clone())
        } else {
            data.interior_split()
        };
        let holdout_gaits = holdout.gaits();
        let set = if all_gaits { "training" } else { "holdout" };
        println!(
            "{m}: {} training gaits, {} {set} gaits",
            train.len(),
            holdout_gaits.len()
        );
        println!(
            "{:<8} {:<7} {:>12} {:>10} {:>8}",
            "kind", "target", "mae", "class", "train_s"
        );
        let mut table = String::from("kind,target,mae,unit,evaluated_on,param_count\n");
        for &target in &cfg.targets {
            for &kind in kinds {
                let t0 = Instant::now();
                let model = fit_kind(kind, &train, target, cfg.seed, cfg.epochs)?;
                let secs = t0.elapsed().as_secs_f64();
                let report = evaluate(&model, &data, &holdout_gaits)?;
                save_model(&model, model_path(cfg, m, target, kind))?;
                println!(
                    "{:<8} {:<7} {:>12.6} {:>10} {:>8.1}",
                    kind.to_string(),
                    target.to_string(),
                    report.mean_absolute_error,
                    runtime_class(report.forward_passes_per_second),
                    secs
                );
                table += &format!(
                    "{kind},{target},{},{},{set},{}\n",
                    report.mean_absolute_error,
                    target.unit(),
                    model.params.len()
                );
            }
        }
        write_text(&eval_dir.join(format!("{m}.csv")), &table)?;
    }
    Ok(())
}

fn load_pair(
    cfg: &RunConfig,
    m: FinMaterial,
    kind: ModelKind,
) -> Result<(SurrogateModel, SurrogateModel), CliError> {
    let load = |target| {
        let path = model_path(cfg, m, target, kind);
        if !path.exists() {
            return Err(CliError::Input(format!(
                "missing model {}; run `finfom train --kind {kind}` first",
                path.display()
            )));
        }
        Ok(load_model(&path)?)
    };
    Ok((load(Target::Thrust)?, load(Target::Power)?))
}

#[derive(Serialize)]
struct OptimumRecord<'a> {
    material: FinMaterial,
    kind: ModelKind,
    gait: finfom::domain::GaitParams,
    report: &'a finfom::fom::FomReport,
    models: &'a [String],
    grid_hash: String,
}

pub fn sweep(cfg: &RunConfig, kind: ModelKind) -> Result<(), CliError> {
    for &m in &cfg.materials {
        let (thrust, power) = load_pair(cfg, m, kind)?;
        let grid = run_sweep(&thrust, &power, m, cfg.velocity)?;
        let path = grid_path(cfg, m, kind);
        ensure_dir(path.parent().expect("grid path has a parent"))?;
        write_grid(&grid, &path)?;
        let (gait, report) = global_optimum(&grid)?;
        let record = OptimumRecord {
            material: m,
            kind,
            gait,
            report: &report,
            models: &grid.models,
            grid_hash: grid.content_hash(),
        };
        write_text(
            &path.with_file_name(format!("{m}_{kind}_optimum.json")),
            &json(&record),
        )?;
        println!(
            "{m}: {} attainable points (reference {REFERENCE_POINT_COUNT}) -> {}",
            grid.attainable_count(),
            path.display()
        );
        println!(
            "  optimum {gait}: eta {:.6}, thrust {:.6} N, power {:.6} W",
            report.eta, report.mean_force, report.mean_power
        );
    }
    Ok(())
}

fn load_grid(cfg: &RunConfig, m: FinMaterial, kind: ModelKind) -> Result<SweepGrid, CliError> {
    let path = grid_path(cfg, m, kind);
    if !path.exists() {
        return Err(CliError::Input(format!(
            "{} not found; run `finfom sweep --kind {kind}` first",
            path.display()
        )));
    }
    Ok(read_grid(&path)?)
}

pub fn contour(cfg: &RunConfig, kind: ModelKind, freq: f64, spo: f64) -> Result<(), CliError> {
    let dir = cfg.out_dir.join("contour");
    ensure_dir(&dir)?;
    for &m in &cfg.materials {
        let grid = load_grid(cfg, m, kind)?;
        let slice = contour_slice(&grid, freq, spo)?;
        let path = dir.join(format!(
            "{m}_{kind}_f{}_spo{}.csv",
            slice.frequency, slice.spo
        ));
        write_slice(&slice, &path)?;
        let (s, p) = slice.unmasked_extent();
        println!(
            "{m}: {s} stroke x {p} pitch levels attainable -> {}",
            path.display()
        );
    }
    Ok(())
}

pub fn trends(cfg: &RunConfig, kind: ModelKind) -> Result<(), CliError> {
    let dir = cfg.out_dir.join("trends");
    ensure_dir(&dir)?;
    for &m in &cfg.materials {
        let grid = load_grid(cfg, m, kind)?;
        let by_f = trend_by_frequency(&grid);
        let by_spo = trend_by_spo(&grid);
        write_trend(
            &by_f,
            "frequency_hz",
            &dir.join(format!("{m}_{kind}_frequency.csv")),
        )?;
        write_trend(&by_spo, "spo_deg", &dir.join(format!("{m}_{kind}_spo.csv")))?;
        println!(
            "{m}: {} frequency rows, {} spo rows -> {}",
            by_f.len(),
            by_spo.len(),
            dir.display()
        );
    }
    Ok(())
}

pub fn select(
    cfg: &RunConfig,
    kind: ModelKind,
    mode: SelectionMode,
    weight: f64,
    velocity: f64,
    top: usize,
) -> Result<(), CliError> {
    let mut results = Vec::new();
    for &m in &cfg.materials {
        let grid = load_grid(cfg, m, kind)?;
        let query = SelectionQuery {
            material: m,
            mode,
            velocity,
            efficiency_weight: weight,
        };
        results.push(run_query(&query, &grid, top)?);
    }
    let mut out = std::io::stdout().lock();
    writeln!(out, "{}", json(&results)).map_err(|e| CliError::io("stdout", e))
}

pub fn bench(cfg: &RunConfig) -> Result<(), CliError> {
    let gaits = attainable_test_grid();
    let mut found = 0;
    let mut slow = Vec::new();
    println!(
        "{:<10} {:<7} {:<8} {:>14}",
        "material", "target", "kind", "passes_per_s"
    );
    for &m in &cfg.materials {
        for &target in &cfg.targets {
            for kind in ModelKind::ALL {
                let path = model_path(cfg, m, target, kind);
                if !path.exists() {
                    continue;
                }
                found += 1;
                let model = load_model(&path)?;
                let rate = measure_throughput(&model, &gaits)?;
                println!(
                    "{:<10} {:<7} {:<8} {:>14.0}",
                    m.to_string(),
                    target.to_string(),
                    kind.to_string(),
                    rate
                );
                if rate < MIN_THROUGHPUT {
                    slow.push(format!("{m}/{target}/{kind}: {rate:.0}/s"));
                }
            }
        }
    }
    if found == 0 {
        return Err(CliError::Input(format!(
            "no trained models in {}",
            cfg.model_dir().display()
        )));
    }
    if !slow.is_empty() {
        return Err(CliError::Benchmark(format!(
            "below {MIN_THROUGHPUT}/s: {}",
            slow.join(", ")
        )));
    }
    Ok(())
}
