//! Dense evaluation of thrust, power and efficiency over the attainable gait
//! grid, with contour slices, trend tables and CSV export.

use std::cmp::Ordering;
use std::fs::File;
use std::io::{BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::dataio::{plant_mean_power, plant_mean_thrust, PlantConfig};
use crate::domain::{is_attainable, FinMaterial, GaitParams};
use crate::fom::{fom, FomError, FomReport};
use crate::surrogate::{ModelError, Predictor, Target};

pub const GRID_SCHEMA_VERSION: u32 = 1;
/// Interpolation count reported for the reference study, logged for comparison.
pub const REFERENCE_POINT_COUNT: usize = 435_600;
pub const GRID_CSV_HEADER: [&str; 7] = [
    "frequency_hz",
    "spo_deg",
    "stroke_deg",
    "pitch_deg",
    "thrust_n",
    "power_w",
    "eta",
];

const AXIS_TOL: f64 = 1e-9;

#[derive(Debug, Error)]
pub enum SweepError {
    #[error("({frequency} Hz, {spo} deg) is not on the grid axes")]
    OffAxisQuery { frequency: f64, spo: f64 },
    #[error("grid has no evaluated points")]
    EmptyGrid,
    #[error("reference velocity must be finite and non-negative, got {0}")]
    InvalidVelocity(f64),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{path}: {reason}")]
    Format { path: PathBuf, reason: String },
}

impl SweepError {
    fn io(path: &Path, source: std::io::Error) -> Self {
        SweepError::Io {
            path: path.to_path_buf(),
            source,
        }
    }

    fn format(path: &Path, reason: impl Into<String>) -> Self {
        SweepError::Format {
            path: path.to_path_buf(),
            reason: reason.into(),
        }
    }
}

fn linspace(start: f64, step: f64, n: usize) -> Vec<f64> {
    (0..n).map(|i| start + step * i as f64).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepAxes {
    pub frequencies: Vec<f64>,
    pub spos: Vec<f64>,
    pub strokes: Vec<f64>,
    pub pitches: Vec<f64>,
}

impl SweepAxes {
    /// Stroke and pitch 0..55 deg by 1, frequency 0.75..2 Hz by 0.125, SPO
    /// -22.5..45 deg by 5.625.
    pub fn standard() -> Self {
        Self {
            frequencies: linspace(0.75, 0.125, 11),
            spos: linspace(-22.5, 5.625, 13),
            strokes: linspace(0.0, 1.0, 56),
            pitches: linspace(0.0, 1.0, 56),
        }
    }

    pub fn raw_len(&self) -> usize {
        self.frequencies.len() * self.spos.len() * self.strokes.len() * self.pitches.len()
    }

    fn slab_len(&self) -> usize {
        self.spos.len() * self.strokes.len() * self.pitches.len()
    }

    /// Gait at flat index `i` (frequency-major, then SPO, stroke, pitch).
    pub fn gait_at(&self, i: usize) -> GaitParams {
        let np = self.pitches.len();
        let ns = self.strokes.len();
        let no = self.spos.len();
        let p = i % np;
        let s = (i / np) % ns;
        let o = (i / (np * ns)) % no;
        let f = i / (np * ns * no);
        GaitParams::new(
            self.frequencies[f],
            self.strokes[s],
            self.pitches[p],
            self.spos[o],
        )
    }

    fn position(axis: &[f64], v: f64) -> Option<usize> {
        axis.iter().position(|a| (a - v).abs() <= AXIS_TOL)
    }

    pub fn index_of(&self, g: &GaitParams) -> Option<usize> {
        let f = Self::position(&self.frequencies, g.frequency)?;
        let o = Self::position(&self.spos, g.stroke_pitch_offset)?;
        let s = Self::position(&self.strokes, g.stroke_amplitude)?;
        let p = Self::position(&self.pitches, g.pitch_amplitude)?;
        Some(((f * self.spos.len() + o) * self.strokes.len() + s) * self.pitches.len() + p)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PointValues {
    pub thrust: f64,
    pub power: f64,
    /// Absent when the predicted power is not positive.
    pub eta: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepGrid {
    pub material: FinMaterial,
    pub velocity: f64,
    pub axes: SweepAxes,
    /// One entry per raw axis combination; `None` where the gait is not attainable.
    pub values: Vec<Option<PointValues>>,
    /// Provenance of the thrust and power predictors.
    pub models: Vec<String>,
}

impl SweepGrid {
    pub fn attainable_count(&self) -> usize {
        self.values.iter().filter(|v| v.is_some()).count()
    }

    /// Every evaluated point in storage order.
    pub fn points(&self) -> impl Iterator<Item = (GaitParams, &PointValues)> + '_ {
        self.values
            .iter()
            .enumerate()
            .filter_map(|(i, v)| v.as_ref().map(|v| (self.axes.gait_at(i), v)))
    }

    pub fn get(&self, g: &GaitParams) -> Option<&PointValues> {
        self.axes.index_of(g).and_then(|i| self.values[i].as_ref())
    }

    /// SHA-256 over material, velocity, axes and every stored value.
    pub fn content_hash(&self) -> String {
        let mut h = Sha256::new();
        h.update(self.material.to_string().as_bytes());
        h.update(self.velocity.to_le_bytes());
        for axis in [
            &self.axes.frequencies,
            &self.axes.spos,
            &self.axes.strokes,
            &self.axes.pitches,
        ] {
            h.update((axis.len() as u64).to_le_bytes());
            axis.iter().for_each(|x| h.update(x.to_le_bytes()));
        }
        for v in &self.values {
            match v {
                None => h.update([0u8]),
                Some(v) => {
                    h.update([1u8]);
                    h.update(v.thrust.to_le_bytes());
                    h.update(v.power.to_le_bytes());
                    h.update(v.eta.unwrap_or(f64::NAN).to_le_bytes());
                }
            }
        }
        hex::encode(h.finalize())
    }
}

/// Noise-free plant as a predictor of one target.
#[derive(Debug, Clone)]
pub struct PlantTruth {
    pub material: FinMaterial,
    pub target: Target,
    pub config: PlantConfig,
}

impl PlantTruth {
    pub fn new(material: FinMaterial, target: Target, config: &PlantConfig) -> Self {
        Self {
            material,
            target,
            config: config.noise_free(),
        }
    }
}

impl Predictor for PlantTruth {
    fn predict_mean(&self, gait: &GaitParams) -> Result<f64, ModelError> {
        if !is_attainable(gait) {
            return Err(ModelError::UnattainableGait(*gait));
        }
        Ok(match self.target {
            Target::Thrust => plant_mean_thrust(self.material, gait, &self.config),
            Target::Power => plant_mean_power(self.material, gait, &self.config),
        })
    }

    fn provenance(&self) -> String {
        let digest = Sha256::digest(self.config.to_json().as_bytes());
        format!(
            "plant:{}:{}:{}",
            self.material,
            self.target,
            hex::encode(&digest[..8])
        )
    }
}

fn evaluate_point(
    thrust: &dyn Predictor,
    power: &dyn Predictor,
    g: &GaitParams,
    velocity: f64,
) -> Result<Option<PointValues>, ModelError> {
    if !is_attainable(g) {
        return Ok(None);
    }
    let t = thrust.predict_mean(g)?;
    let p = power.predict_mean(g)?;
    let eta = match fom(t, p, velocity) {
        Ok(e) => Some(e),
        Err(FomError::ZeroPower(_)) => None,
        Err(e) => panic!("sweep velocity was validated: {e}"),
    };
    Ok(Some(PointValues {
        thrust: t,
        power: p,
        eta,
    }))
}

fn sweep_impl(
    thrust: &dyn Predictor,
    power: &dyn Predictor,
    material: FinMaterial,
    velocity: f64,
    axes: SweepAxes,
    parallel: bool,
) -> Result<SweepGrid, SweepError> {
    if !(velocity.is_finite() && velocity >= 0.0) {
        return Err(SweepError::InvalidVelocity(velocity));
    }
    let mut values = vec![None; axes.raw_len()];
    let slab = axes.slab_len().max(1);
    let fill = |(k, chunk): (usize, &mut [Option<PointValues>])| -> Result<(), ModelError> {
        for (j, slot) in chunk.iter_mut().enumerate() {
            *slot = evaluate_point(thrust, power, &axes.gait_at(k * slab + j), velocity)?;
        }
        Ok(())
    };
    if parallel {
        values.par_chunks_mut(slab).enumerate().try_for_each(fill)?;
    } else {
        values.chunks_mut(slab).enumerate().try_for_each(fill)?;
    }
    let grid = SweepGrid {
        material,
        velocity,
        axes,
        values,
        models: vec![thrust.provenance(), power.provenance()],
    };
    log::info!(
        "sweep {material}: {} attainable of {} raw points (reference study: {REFERENCE_POINT_COUNT})",
        grid.attainable_count(),
        grid.axes.raw_len()
    );
    Ok(grid)
}

/// Evaluates both predictors and the efficiency at every attainable point of
/// the standard grid, in parallel over frequency slabs.
pub fn run_sweep(
    thrust: &dyn Predictor,
    power: &dyn Predictor,
    material: FinMaterial,
    velocity: f64,
) -> Result<SweepGrid, SweepError> {
    sweep_impl(
        thrust,
        power,
        material,
        velocity,
        SweepAxes::standard(),
        true,
    )
}

/// [`run_sweep`] over custom axes, optionally single-threaded.
pub fn run_sweep_on(
    thrust: &dyn Predictor,
    power: &dyn Predictor,
    material: FinMaterial,
    velocity: f64,
    axes: SweepAxes,
    parallel: bool,
) -> Result<SweepGrid, SweepError> {
    sweep_impl(thrust, power, material, velocity, axes, parallel)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ContourSlice {
    pub frequency: f64,
    pub spo: f64,
    pub strokes: Vec<f64>,
    pub pitches: Vec<f64>,
    /// Stroke-major cells; `None` where the gait is not attainable.
    pub cells: Vec<Option<PointValues>>,
}

impl ContourSlice {
    pub fn cell(&self, stroke_idx: usize, pitch_idx: usize) -> Option<&PointValues> {
        self.cells[stroke_idx * self.pitches.len() + pitch_idx].as_ref()
    }

    /// Number of distinct stroke and pitch levels with at least one value.
    pub fn unmasked_extent(&self) -> (usize, usize) {
        let np = self.pitches.len();
        let strokes = (0..self.strokes.len())
            .filter(|&s| (0..np).any(|p| self.cell(s, p).is_some()))
            .count();
        let pitches = (0..np)
            .filter(|&p| (0..self.strokes.len()).any(|s| self.cell(s, p).is_some()))
            .count();
        (strokes, pitches)
    }
}

/// The stroke x pitch plane at one frequency and SPO.
pub fn contour_slice(
    grid: &SweepGrid,
    frequency: f64,
    spo: f64,
) -> Result<ContourSlice, SweepError> {
    let off_axis = || SweepError::OffAxisQuery { frequency, spo };
    let f = SweepAxes::position(&grid.axes.frequencies, frequency).ok_or_else(off_axis)?;
    let o = SweepAxes::position(&grid.axes.spos, spo).ok_or_else(off_axis)?;
    let plane = grid.axes.strokes.len() * grid.axes.pitches.len();
    let start = (f * grid.axes.spos.len() + o) * plane;
    Ok(ContourSlice {
        frequency: grid.axes.frequencies[f],
        spo: grid.axes.spos[o],
        strokes: grid.axes.strokes.clone(),
        pitches: grid.axes.pitches.clone(),
        cells: grid.values[start..start + plane].to_vec(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrendRow {
    pub value: f64,
    pub max_eta: Option<f64>,
    pub mean_eta: Option<f64>,
    pub count: usize,
}

fn trend(grid: &SweepGrid, levels: &[f64], key: impl Fn(&GaitParams) -> f64) -> Vec<TrendRow> {
    let mut rows: Vec<(f64, f64, usize)> = vec![(f64::NEG_INFINITY, 0.0, 0); levels.len()];
    for (g, v) in grid.points() {
        let Some(eta) = v.eta else { continue };
        let Some(i) = SweepAxes::position(levels, key(&g)) else {
            continue;
        };
        let r = &mut rows[i];
        r.0 = r.0.max(eta);
        r.1 += eta;
        r.2 += 1;
    }
    levels
        .iter()
        .zip(rows)
        .map(|(&value, (max, sum, count))| TrendRow {
            value,
            max_eta: (count > 0).then_some(max),
            mean_eta: (count > 0).then(|| sum / count as f64),
            count,
        })
        .collect()
}

/// Max and mean efficiency per frequency, ascending.
pub fn trend_by_frequency(grid: &SweepGrid) -> Vec<TrendRow> {
    trend(grid, &grid.axes.frequencies, |g| g.frequency)
}

/// Max and mean efficiency per SPO, ascending.
pub fn trend_by_spo(grid: &SweepGrid) -> Vec<TrendRow> {
    trend(grid, &grid.axes.spos, |g| g.stroke_pitch_offset)
}

/// Preference order between scored candidates: higher efficiency, then lower
/// power, then the lexicographically smaller gait.
pub fn better_point(a: (&GaitParams, f64, f64), b: (&GaitParams, f64, f64)) -> bool {
    let (ga, eta_a, pa) = a;
    let (gb, eta_b, pb) = b;
    match eta_a.total_cmp(&eta_b) {
        Ordering::Greater => true,
        Ordering::Less => false,
        Ordering::Equal => match pa.total_cmp(&pb) {
            Ordering::Less => true,
            Ordering::Greater => false,
            Ordering::Equal => ga.lex_cmp(gb) == Ordering::Less,
        },
    }
}

/// The most efficient point of the grid.
pub fn global_optimum(grid: &SweepGrid) -> Result<(GaitParams, FomReport), SweepError> {
    let mut best: Option<(GaitParams, PointValues, f64)> = None;
    for (g, v) in grid.points() {
        let Some(eta) = v.eta else { continue };
        let take = match &best {
            None => true,
            Some((bg, bv, be)) => better_point((&g, eta, v.power), (bg, *be, bv.power)),
        };
        if take {
            best = Some((g, *v, eta));
        }
    }
    let (g, v, eta) = best.ok_or(SweepError::EmptyGrid)?;
    Ok((g, point_report(&v, eta, grid.velocity)))
}

pub(crate) fn point_report(v: &PointValues, eta: f64, velocity: f64) -> FomReport {
    FomReport {
        eta,
        eta_thrust: eta,
        eta_lift: None,
        eta_side: None,
        eta_stroke_actuator: None,
        eta_pitch_actuator: None,
        mean_force: v.thrust,
        mean_power: v.power,
        reference_velocity: velocity,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridSidecar {
    pub schema_version: u32,
    pub material: FinMaterial,
    pub velocity_mps: f64,
    pub axes: SweepAxes,
    pub raw_count: usize,
    pub attainable_count: usize,
    pub reference_count: usize,
    pub models: Vec<String>,
}

/// Sidecar path for a grid CSV: same stem, `.json` extension.
pub fn sidecar_path(csv_path: &Path) -> PathBuf {
    csv_path.with_extension("json")
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

fn create(path: &Path) -> Result<BufWriter<File>, SweepError> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| SweepError::io(path, e))
}

/// Writes the grid as CSV (attainable points only, storage order, shortest
/// round-trip float formatting) plus its JSON sidecar.
pub fn write_grid(grid: &SweepGrid, csv_path: &Path) -> Result<(), SweepError> {
    let mut w = create(csv_path)?;
    let io = |e| SweepError::io(csv_path, e);
    writeln!(w, "{}", GRID_CSV_HEADER.join(",")).map_err(io)?;
    for (g, v) in grid.points() {
        writeln!(
            w,
            "{},{},{},{},{},{},{}",
            g.frequency,
            g.stroke_pitch_offset,
            g.stroke_amplitude,
            g.pitch_amplitude,
            v.thrust,
            v.power,
            fmt_opt(v.eta)
        )
        .map_err(io)?;
    }
    w.flush().map_err(io)?;

    let side = GridSidecar {
        schema_version: GRID_SCHEMA_VERSION,
        material: grid.material,
        velocity_mps: grid.velocity,
        axes: grid.axes.clone(),
        raw_count: grid.axes.raw_len(),
        attainable_count: grid.attainable_count(),
        reference_count: REFERENCE_POINT_COUNT,
        models: grid.models.clone(),
    };
    let sp = sidecar_path(csv_path);
    let text = serde_json::to_string_pretty(&side).expect("sidecar serializes");
    std::fs::write(&sp, text).map_err(|e| SweepError::io(&sp, e))
}

fn parse_f64(path: &Path, line: usize, field: &str) -> Result<f64, SweepError> {
    field
        .parse()
        .map_err(|_| SweepError::format(path, format!("line {line}: bad number `{field}`")))
}

/// Reads a grid written by [`write_grid`].
pub fn read_grid(csv_path: &Path) -> Result<SweepGrid, SweepError> {
    let sp = sidecar_path(csv_path);
    let side_text = std::fs::read_to_string(&sp).map_err(|e| SweepError::io(&sp, e))?;
    let side: GridSidecar =
        serde_json::from_str(&side_text).map_err(|e| SweepError::format(&sp, e.to_string()))?;
    if side.schema_version != GRID_SCHEMA_VERSION {
        return Err(SweepError::format(
            &sp,
            format!("unsupported schema version {}", side.schema_version),
        ));
    }
    let mut text = String::new();
    File::open(csv_path)
        .and_then(|mut f| f.read_to_string(&mut text))
        .map_err(|e| SweepError::io(csv_path, e))?;
    let mut lines = text.lines();
    if lines.next() != Some(GRID_CSV_HEADER.join(",").as_str()) {
        return Err(SweepError::format(csv_path, "missing or wrong header"));
    }
    let mut values = vec![None; side.axes.raw_len()];
    for (k, line) in lines.enumerate() {
        let n = k + 2;
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != GRID_CSV_HEADER.len() {
            return Err(SweepError::format(
                csv_path,
                format!("line {n}: expected 7 fields"),
            ));
        }
        let num = |i: usize| parse_f64(csv_path, n, fields[i]);
        let g = GaitParams::new(num(0)?, num(2)?, num(3)?, num(1)?);
        let idx = side.axes.index_of(&g).ok_or_else(|| {
            SweepError::format(csv_path, format!("line {n}: gait off the grid axes"))
        })?;
        let eta = if fields[6].is_empty() {
            None
        } else {
            Some(num(6)?)
        };
        values[idx] = Some(PointValues {
            thrust: num(4)?,
            power: num(5)?,
            eta,
        });
    }
    Ok(SweepGrid {
        material: side.material,
        velocity: side.velocity_mps,
        axes: side.axes,
        values,
        models: side.models,
    })
}

/// Long-format slice CSV; unattainable cells have empty value fields.
pub fn write_slice(slice: &ContourSlice, path: &Path) -> Result<(), SweepError> {
    let mut w = create(path)?;
    let io = |e| SweepError::io(path, e);
    writeln!(w, "{}", GRID_CSV_HEADER.join(",")).map_err(io)?;
    for (si, s) in slice.strokes.iter().enumerate() {
        for (pi, p) in slice.pitches.iter().enumerate() {
            let (t, pw, e) = match slice.cell(si, pi) {
                Some(v) => (v.thrust.to_string(), v.power.to_string(), fmt_opt(v.eta)),
                None => Default::default(),
            };
            writeln!(w, "{},{},{s},{p},{t},{pw},{e}", slice.frequency, slice.spo).map_err(io)?;
        }
    }
    w.flush().map_err(io)
}

/// Trend table CSV with a leading key column named `key`.
pub fn write_trend(rows: &[TrendRow], key: &str, path: &Path) -> Result<(), SweepError> {
    let mut w = create(path)?;
    let io = |e| SweepError::io(path, e);
    writeln!(w, "{key},max_eta,mean_eta,count").map_err(io)?;
    for r in rows {
        writeln!(
            w,
            "{},{},{},{}",
            r.value,
            fmt_opt(r.max_eta),
            fmt_opt(r.mean_eta),
            r.count
        )
        .map_err(io)?;
    }
    w.flush().map_err(io)
}
