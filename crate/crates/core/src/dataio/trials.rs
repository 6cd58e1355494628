use std::fs::File;
use std::io::{BufWriter, Read, Write};
use std::path::Path;

use indexmap::IndexMap;
use serde::{Deserialize, Serialize};

use super::DataError;
use crate::domain::{is_attainable, CycleSeries, FinMaterial, GaitParams};

/// Flap cycles recorded per gait by the collection protocol.
pub const PROTOCOL_CYCLES: usize = 10;

pub const TRIAL_CSV_HEADER: [&str; 14] = [
    "material_id",
    "frequency_hz",
    "stroke_amp_deg",
    "pitch_amp_deg",
    "spo_deg",
    "sample_index",
    "stroke_angle_deg",
    "pitch_angle_deg",
    "thrust_n",
    "lift_n",
    "side_n",
    "current_stroke_a",
    "current_pitch_a",
    "voltage_v",
];

/// One run of a gait: `n_cycles` back-to-back flap cycles of raw samples.
///
/// `samples` holds every channel over all cycles, so each array has length
/// `n_cycles * samples_per_cycle`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub material: FinMaterial,
    pub gait: GaitParams,
    /// Samples per second.
    pub sample_rate: f64,
    pub n_cycles: usize,
    pub samples: CycleSeries,
}

impl TrialRecord {
    pub fn samples_per_cycle(&self) -> usize {
        self.samples.n_steps() / self.n_cycles.max(1)
    }
}

/// Shortest scientific form that parses back to the same value.
fn fmt_float(x: f64) -> String {
    format!("{x:e}")
}

/// Writes trials in the trial CSV layout (one header line, then samples).
pub fn write_trials_to<W: Write>(out: W, trials: &[TrialRecord]) -> std::io::Result<()> {
    let mut w = BufWriter::new(out);
    writeln!(w, "{}", TRIAL_CSV_HEADER.join(","))?;
    for t in trials {
        let s = &t.samples;
        let key = format!(
            "{},{},{},{},{}",
            t.material.id(),
            fmt_float(t.gait.frequency),
            fmt_float(t.gait.stroke_amplitude),
            fmt_float(t.gait.pitch_amplitude),
            fmt_float(t.gait.stroke_pitch_offset)
        );
        for k in 0..s.n_steps() {
            writeln!(
                w,
                "{key},{k},{},{},{},{},{},{},{},{}",
                fmt_float(s.stroke_angle[k]),
                fmt_float(s.pitch_angle[k]),
                fmt_float(s.thrust[k]),
                fmt_float(s.lift[k]),
                fmt_float(s.side_force[k]),
                fmt_float(s.stroke_current[k]),
                fmt_float(s.pitch_current[k]),
                fmt_float(s.voltage),
            )?;
        }
    }
    w.flush()
}

pub fn write_trials(path: &Path, trials: &[TrialRecord]) -> Result<(), DataError> {
    let file = File::create(path).map_err(|e| DataError::io(path, e))?;
    write_trials_to(file, trials).map_err(|e| DataError::io(path, e))
}

pub fn load_trials(path: &Path) -> Result<Vec<TrialRecord>, DataError> {
    let file = File::open(path).map_err(|e| DataError::io(path, e))?;
    read_trials(file)
}

#[derive(Default)]
struct Group {
    first_line: u64,
    samples: Vec<[f64; 8]>,
}

/// Parses trial CSV text. Rows are grouped by (material, gait) in order of
/// first appearance; sample order inside a group is time order.
pub fn read_trials<R: Read>(input: R) -> Result<Vec<TrialRecord>, DataError> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .from_reader(input);
    let mut groups: IndexMap<(FinMaterial, [u64; 4]), Group> = IndexMap::new();
    let mut record = csv::StringRecord::new();
    let mut header_seen = false;

    loop {
        let more = reader
            .read_record(&mut record)
            .map_err(|e| DataError::MalformedRow {
                line: e.position().map_or(0, |p| p.line()),
                reason: e.to_string(),
            })?;
        if !more {
            break;
        }
        let line = record.position().map_or(0, |p| p.line());
        if !header_seen {
            header_seen = true;
            if record
                .iter()
                .map(str::trim)
                .ne(TRIAL_CSV_HEADER.iter().copied())
            {
                return Err(DataError::MalformedRow {
                    line,
                    reason: "unexpected header".into(),
                });
            }
            continue;
        }
        if record.len() != TRIAL_CSV_HEADER.len() {
            return Err(DataError::MalformedRow {
                line,
                reason: format!(
                    "expected {} columns, found {}",
                    TRIAL_CSV_HEADER.len(),
                    record.len()
                ),
            });
        }
        let material: FinMaterial =
            record[0]
                .parse()
                .map_err(|e: crate::domain::DomainError| DataError::MalformedRow {
                    line,
                    reason: e.to_string(),
                })?;
        let num = |i: usize| -> Result<f64, DataError> {
            let v: f64 = record[i]
                .trim()
                .parse()
                .map_err(|_| DataError::MalformedRow {
                    line,
                    reason: format!(
                        "column {} is not a number: `{}`",
                        TRIAL_CSV_HEADER[i], &record[i]
                    ),
                })?;
            if v.is_finite() {
                Ok(v)
            } else {
                Err(DataError::MalformedRow {
                    line,
                    reason: format!("column {} is not finite", TRIAL_CSV_HEADER[i]),
                })
            }
        };
        let gait = GaitParams::new(num(1)?, num(2)?, num(3)?, num(4)?);
        if !is_attainable(&gait) {
            return Err(DataError::UnattainableGait(gait));
        }
        let index: usize = record[5]
            .trim()
            .parse()
            .map_err(|_| DataError::MalformedRow {
                line,
                reason: format!("sample_index is not an integer: `{}`", &record[5]),
            })?;
        let mut row = [0.0; 8];
        for (j, slot) in row.iter_mut().enumerate() {
            *slot = num(6 + j)?;
        }
        let key = (
            material,
            [
                gait.frequency.to_bits(),
                gait.stroke_amplitude.to_bits(),
                gait.pitch_amplitude.to_bits(),
                gait.stroke_pitch_offset.to_bits(),
            ],
        );
        let group = groups.entry(key).or_insert_with(|| Group {
            first_line: line,
            samples: Vec::new(),
        });
        if index != group.samples.len() {
            return Err(DataError::InconsistentGroup {
                material,
                gait,
                reason: format!(
                    "line {line}: sample_index {index} out of sequence (expected {})",
                    group.samples.len()
                ),
            });
        }
        group.samples.push(row);
    }

    groups
        .into_iter()
        .map(|((material, bits), group)| {
            let gait = GaitParams::new(
                f64::from_bits(bits[0]),
                f64::from_bits(bits[1]),
                f64::from_bits(bits[2]),
                f64::from_bits(bits[3]),
            );
            assemble(material, gait, group)
        })
        .collect()
}

fn assemble(
    material: FinMaterial,
    gait: GaitParams,
    group: Group,
) -> Result<TrialRecord, DataError> {
    let inconsistent = |reason: String| DataError::InconsistentGroup {
        material,
        gait,
        reason,
    };
    let n = group.samples.len();
    if n == 0 || n % PROTOCOL_CYCLES != 0 {
        return Err(inconsistent(format!(
            "group starting at line {} has {n} samples, not a multiple of {PROTOCOL_CYCLES} cycles",
            group.first_line
        )));
    }
    let voltage = group.samples[0][7];
    if group.samples.iter().any(|r| r[7] != voltage) {
        return Err(inconsistent("voltage varies within the group".into()));
    }
    let column = |j: usize| group.samples.iter().map(|r| r[j]).collect::<Vec<_>>();
    let samples = CycleSeries {
        stroke_angle: column(0),
        pitch_angle: column(1),
        thrust: column(2),
        lift: column(3),
        side_force: column(4),
        stroke_current: column(5),
        pitch_current: column(6),
        voltage,
    };
    samples
        .validate()
        .map_err(|e| inconsistent(e.to_string()))?;
    let samples_per_cycle = n / PROTOCOL_CYCLES;
    Ok(TrialRecord {
        material,
        gait,
        sample_rate: samples_per_cycle as f64 * gait.frequency,
        n_cycles: PROTOCOL_CYCLES,
        samples,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny_trial(material: FinMaterial, gait: GaitParams, spc: usize) -> TrialRecord {
        let n = spc * PROTOCOL_CYCLES;
        let ramp = |scale: f64| {
            (0..n)
                .map(|k| scale * k as f64 / n as f64)
                .collect::<Vec<_>>()
        };
        TrialRecord {
            material,
            gait,
            sample_rate: spc as f64 * gait.frequency,
            n_cycles: PROTOCOL_CYCLES,
            samples: CycleSeries {
                stroke_angle: ramp(30.0),
                pitch_angle: ramp(-20.0),
                thrust: ramp(1.0 / 3.0),
                lift: ramp(0.1),
                side_force: ramp(-0.05),
                stroke_current: ramp(0.7),
                pitch_current: ramp(0.2),
                voltage: 4.98,
            },
        }
    }

    fn to_string(trials: &[TrialRecord]) -> String {
        let mut buf = Vec::new();
        write_trials_to(&mut buf, trials).unwrap();
        String::from_utf8(buf).unwrap()
    }

    #[test]
    fn two_gait_file_gives_two_records() {
        let trials = vec![
            tiny_trial(FinMaterial::Rigid, GaitParams::new(1.0, 25.0, 15.0, 0.0), 4),
            tiny_trial(
                FinMaterial::Pdms1to10,
                GaitParams::new(2.0, 32.5, 15.0, -22.5),
                4,
            ),
        ];
        let loaded = read_trials(to_string(&trials).as_bytes()).unwrap();
        assert_eq!(loaded.len(), 2);
        assert_eq!(loaded[0].gait, trials[0].gait);
        assert_eq!(loaded[1].material, FinMaterial::Pdms1to10);
        assert_eq!(loaded[1].samples.n_steps(), 40);
        assert_eq!(loaded[1].sample_rate, 8.0);
    }

    #[test]
    fn empty_input_is_empty_list() {
        assert!(read_trials(&b""[..]).unwrap().is_empty());
        let header_only = format!("{}\n", TRIAL_CSV_HEADER.join(","));
        assert!(read_trials(header_only.as_bytes()).unwrap().is_empty());
    }

    #[test]
    fn unattainable_row_is_rejected() {
        let text = format!(
            "{}\nrigid,2.0,40,10,0,0,0,0,0,0,0,0.1,0.1,4.98\n",
            TRIAL_CSV_HEADER.join(",")
        );
        assert!(matches!(
            read_trials(text.as_bytes()),
            Err(DataError::UnattainableGait(_))
        ));
    }

    #[test]
    fn malformed_rows_report_their_line() {
        let mut text = to_string(&[tiny_trial(
            FinMaterial::Rigid,
            GaitParams::new(1.0, 25.0, 15.0, 0.0),
            4,
        )]);
        text.push_str("rigid,1.0,25,15,0,40,oops,0,0,0,0,0.1,0.1,4.98\n");
        match read_trials(text.as_bytes()) {
            Err(DataError::MalformedRow { line, .. }) => assert_eq!(line, 42),
            other => panic!("unexpected {other:?}"),
        }
        let short = format!("{}\nrigid,1.0,25\n", TRIAL_CSV_HEADER.join(","));
        assert!(matches!(
            read_trials(short.as_bytes()),
            Err(DataError::MalformedRow { line: 2, .. })
        ));
        assert!(matches!(
            read_trials(&b"a,b,c\n"[..]),
            Err(DataError::MalformedRow { line: 1, .. })
        ));
    }

    #[test]
    fn partial_cycles_are_inconsistent() {
        let text = to_string(&[tiny_trial(
            FinMaterial::Rigid,
            GaitParams::new(1.0, 25.0, 15.0, 0.0),
            4,
        )]);
        let mut lines: Vec<&str> = text.lines().collect();
        lines.pop();
        let text = lines.join("\n");
        assert!(matches!(
            read_trials(text.as_bytes()),
            Err(DataError::InconsistentGroup { .. })
        ));
    }

    #[test]
    fn rewrite_is_byte_identical() {
        let text = to_string(&[
            tiny_trial(
                FinMaterial::Pdms1to20,
                GaitParams::new(1.25, 40.0, 38.0, 45.0),
                6,
            ),
            tiny_trial(
                FinMaterial::Rigid,
                GaitParams::new(0.75, 55.0, 55.0, -22.5),
                6,
            ),
        ]);
        let once = read_trials(text.as_bytes()).unwrap();
        let again = to_string(&once);
        assert_eq!(text, again);
        assert_eq!(read_trials(again.as_bytes()).unwrap(), once);
    }
}
