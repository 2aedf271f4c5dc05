//! Diagnostics computed from a finished run's `run.json` and `samples.csv`.
//! Everything here is a pure function of those two files (and the data the
//! echoed config points at), so `diagnose` reproduces its output exactly.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use mint_core::diagnostics::{
    hitting_time, ks_against_grid, mode_occupancy, mode_ratio, ring_table_from_counts, test_accuracy,
};
use mint_core::models::Generative;
use mint_core::{Dataset, ParameterVector, Posterior};

use crate::data::{read_samples, SampleRows};
use crate::error::{Error, Result};
use crate::experiment::{RunRecord, SAMPLES_FILE};
use crate::workload::{load_workload, Workload};

pub const DIAGNOSTICS_FILE: &str = "diagnostics.json";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Diagnostics {
    pub sampler: String,
    pub samples: usize,
    pub target_temperature: f64,
    pub acceptance_rate: f64,
    /// Mean length of accepted moves between consecutive stored states.
    pub mean_accepted_step: Option<f64>,
    pub mode_radius: Option<f64>,
    /// Visits near the first mode of `mode_pair` over visits near the
    /// second; absent without a mode catalogue or when the second is never visited.
    pub mode_ratio: Option<f64>,
    pub mode_occupancy: Option<ModeOccupancy>,
    /// Iteration at which each catalogued mode was first within the radius.
    pub hitting_iterations: Option<Vec<Option<u64>>>,
    pub ring_table: Option<RingTableRecord>,
    pub test_accuracy: Option<f64>,
    /// Only for one-dimensional parameters.
    pub ks_distance: Option<f64>,
    pub evaluations_total: u64,
    pub evaluations_per_sample: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModeOccupancy {
    pub modes: Vec<Vec<f64>>,
    pub fractions: Vec<f64>,
    pub unassigned: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RingTableRecord {
    pub temperatures: Vec<f64>,
    pub batch_sizes: Vec<usize>,
    pub percentages: Vec<Vec<f64>>,
}

fn mean_accepted_step(rows: &SampleRows) -> Option<f64> {
    let (mut sum, mut count) = (0.0, 0usize);
    for i in 1..rows.len() {
        if rows.accepted[i] && rows.iterations[i] == rows.iterations[i - 1] + 1 {
            sum += mint_core::math::distance(&rows.samples[i], &rows.samples[i - 1]);
            count += 1;
        }
    }
    (count > 0).then(|| sum / count as f64)
}

/// KS distance between the samples and the tempered posterior evaluated on a
/// grid spanning ten sample ranges either side.
fn ks_distance<M: mint_core::Model>(
    model: &M,
    data: &Dataset<M::Point>,
    samples: &[ParameterVector],
    temperature: f64,
    points: usize,
) -> Result<f64> {
    let xs: Vec<f64> = samples.iter().map(|s| s[0]).collect();
    let lo = xs.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let range = if hi > lo { hi - lo } else { 1.0 };
    let (a, b) = (lo - 10.0 * range, hi + 10.0 * range);
    let grid: Vec<f64> = (0..points).map(|i| a + (b - a) * i as f64 / (points - 1) as f64).collect();
    let mut posterior = Posterior::new(model, data);
    let logd = grid
        .iter()
        .map(|x| posterior.log_posterior_tempered(&[*x], temperature))
        .collect::<mint_core::Result<Vec<_>>>()?;
    Ok(ks_against_grid(&xs, &grid, &logd)?)
}

struct ModeStats {
    radius: Option<f64>,
    ratio: Option<f64>,
    occupancy: Option<ModeOccupancy>,
    hitting: Option<Vec<Option<u64>>>,
}

fn mode_stats<G: Generative>(model: &G, record: &RunRecord, rows: &SampleRows) -> Result<ModeStats> {
    let d = &record.config.diagnostics;
    let radius = d.mode_radius;
    let modes = match record.config.theta_star() {
        Some(star) if star.len() == record.dim => model.true_modes(&ParameterVector::new(star.to_vec())?)?,
        _ => Vec::new(),
    };
    if modes.is_empty() || rows.is_empty() {
        return Ok(ModeStats {
            radius,
            ratio: None,
            occupancy: None,
            hitting: None,
        });
    }
    let r = radius.expect("resolved with the config");
    let ratio = match (modes.get(d.mode_pair[0]), modes.get(d.mode_pair[1])) {
        (Some(a), Some(b)) => Some(mode_ratio(&rows.samples, a, b, r)).filter(|v| v.is_finite()),
        _ => None,
    };
    let occ = mode_occupancy(&rows.samples, &modes, d.assign_radius);
    let hitting = modes
        .iter()
        .map(|m| hitting_time(&rows.samples, m, r).map(|i| rows.iterations[i]))
        .collect();
    Ok(ModeStats {
        radius,
        ratio,
        occupancy: Some(ModeOccupancy {
            modes: modes.iter().map(|m| m.to_vec()).collect(),
            fractions: occ.fractions,
            unassigned: occ.unassigned,
        }),
        hitting: Some(hitting),
    })
}

pub fn compute(record: &RunRecord, rows: &SampleRows) -> Result<Diagnostics> {
    let workload = load_workload(&record.config)?;
    let d = &record.config.diagnostics;
    let (modes, ks, accuracy) = match &workload {
        Workload::Scalar { model, data } => {
            let ks = (record.dim == 1 && !rows.is_empty())
                .then(|| ks_distance(model, data, &rows.samples, record.target_temperature, d.ks_grid_points))
                .transpose()?;
            (mode_stats(model, record, rows)?, ks, None)
        }
        Workload::Logistic { model, test, .. } => {
            let accuracy = match test {
                Some(test) if !rows.is_empty() => Some(test_accuracy(model, &rows.samples, test, d.test_thin)),
                _ => None,
            };
            (mode_stats(model, record, rows)?, None, accuracy)
        }
    };
    let ring_table = record.mintee.as_ref().map(|m| {
        let t = ring_table_from_counts(&m.ring_counts, m.temperatures.clone(), m.batch_sizes.clone());
        RingTableRecord {
            temperatures: t.temperatures,
            batch_sizes: t.batch_sizes,
            percentages: t.percentages,
        }
    });
    Ok(Diagnostics {
        sampler: record.config.sampler.name().to_string(),
        samples: rows.len(),
        target_temperature: record.target_temperature,
        acceptance_rate: if record.proposals == 0 {
            0.0
        } else {
            record.acceptances as f64 / record.proposals as f64
        },
        mean_accepted_step: mean_accepted_step(rows),
        mode_radius: modes.radius,
        mode_ratio: modes.ratio,
        mode_occupancy: modes.occupancy,
        hitting_iterations: modes.hitting,
        ring_table,
        test_accuracy: accuracy,
        ks_distance: ks,
        evaluations_total: record.evaluations_total,
        evaluations_per_sample: record.evaluations_total as f64 / rows.len().max(1) as f64,
    })
}

fn opt(v: Option<f64>) -> String {
    v.map_or_else(String::new, |x| x.to_string())
}

fn write_file(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

fn write_tables(dir: &Path, d: &Diagnostics) -> Result<()> {
    write_file(
        &dir.join("acceptance.csv"),
        &format!(
            "acceptance_rate,mean_accepted_step,evaluations_per_sample\n{},{},{}\n",
            d.acceptance_rate,
            opt(d.mean_accepted_step),
            d.evaluations_per_sample
        ),
    )?;
    if let Some(occ) = &d.mode_occupancy {
        let mut s = String::from("mode,fraction\n");
        for (j, f) in occ.fractions.iter().enumerate() {
            writeln!(s, "{j},{f}").unwrap();
        }
        writeln!(s, "unassigned,{}", occ.unassigned).unwrap();
        write_file(&dir.join("mode_occupancy.csv"), &s)?;
    }
    if let Some(hits) = &d.hitting_iterations {
        let mut s = String::from("mode,iteration\n");
        for (j, h) in hits.iter().enumerate() {
            writeln!(s, "{j},{}", h.map_or_else(String::new, |i| i.to_string())).unwrap();
        }
        write_file(&dir.join("hitting_times.csv"), &s)?;
    }
    if let Some(t) = &d.ring_table {
        let rings = t.percentages.first().map_or(0, Vec::len);
        let mut s = String::from("chain,temperature,batch_size");
        for j in 0..rings {
            write!(s, ",ring_{j}").unwrap();
        }
        s.push('\n');
        for (k, row) in t.percentages.iter().enumerate() {
            write!(s, "{k},{},{}", t.temperatures[k], t.batch_sizes[k]).unwrap();
            for p in row {
                write!(s, ",{p}").unwrap();
            }
            s.push('\n');
        }
        write_file(&dir.join("ring_table.csv"), &s)?;
    }
    Ok(())
}

/// Recomputes and writes `diagnostics.json` and the per-diagnostic CSVs.
pub fn diagnose(dir: &Path) -> Result<Diagnostics> {
    let record = RunRecord::load(dir)?;
    let rows = read_samples(&dir.join(SAMPLES_FILE))?;
    let d = compute(&record, &rows)?;
    let text = serde_json::to_string_pretty(&d).expect("diagnostics serialise");
    write_file(&dir.join(DIAGNOSTICS_FILE), &(text + "\n"))?;
    write_tables(dir, &d)?;
    Ok(d)
}
