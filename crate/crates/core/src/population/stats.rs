//! Summary statistics over a generated or survived population, shaped like
//! the collated measurement table (mean / st. dev. / range per column) for
//! direct comparison.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::model::{Error, Morphology, Mvl, Result};

/// Mean, sample standard deviation (n−1; zero when n < 2) and range.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryStats {
    pub n: usize,
    pub mean: f64,
    pub sd: f64,
    pub min: f64,
    pub max: f64,
}

impl SummaryStats {
    pub fn from_values(values: &[f64]) -> Option<SummaryStats> {
        if values.is_empty() {
            return None;
        }
        let n = values.len();
        let mean = values.iter().sum::<f64>() / n as f64;
        let sd = if n < 2 {
            0.0
        } else {
            (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt()
        };
        let min = values.iter().copied().fold(f64::INFINITY, f64::min);
        let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        Some(SummaryStats { n, mean, sd, min, max })
    }
}

/// Population report: morphology tallies, diameter and internal-count
/// statistics split the way the measurements were (T1a/1b/2 pooled, T3
/// separate), and a histogram of recursion depths.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PopulationStats {
    pub total: usize,
    pub morphology_counts: BTreeMap<String, usize>,
    pub morphology_frequencies: BTreeMap<String, f64>,
    /// Pooled T1a/T1b/T2 outer diameters (µm).
    pub diameter: Option<SummaryStats>,
    /// T3 maximal dimensions (µm).
    pub t3_diameter: Option<SummaryStats>,
    /// Direct internal liposome counts of non-T3 MVLs.
    pub internal_count: Option<SummaryStats>,
    /// T3 internal counts, reported separately (unvalidated in the data).
    pub t3_internal_count: Option<SummaryStats>,
    /// Recursion depth of each MVL tree -> number of MVLs.
    pub depth_histogram: BTreeMap<u32, usize>,
}

/// Compute the report. Errors on an empty population.
pub fn population_stats(population: &[Mvl]) -> Result<PopulationStats> {
    if population.is_empty() {
        return Err(Error::InvalidArgument(
            "population_stats needs a nonempty population".into(),
        ));
    }
    let mut morphology_counts: BTreeMap<String, usize> = BTreeMap::new();
    let mut depth_histogram: BTreeMap<u32, usize> = BTreeMap::new();
    let mut diameters = Vec::new();
    let mut t3_diameters = Vec::new();
    let mut counts = Vec::new();
    let mut t3_counts = Vec::new();

    for mvl in population {
        *morphology_counts.entry(mvl.morphology.name().into()).or_default() += 1;
        *depth_histogram.entry(mvl.root.max_depth()).or_default() += 1;
        if mvl.morphology == Morphology::T3 {
            t3_diameters.push(mvl.root.diameter);
            t3_counts.push(mvl.internal_count() as f64);
        } else {
            diameters.push(mvl.root.diameter);
            counts.push(mvl.internal_count() as f64);
        }
    }

    let total = population.len();
    let morphology_frequencies = morphology_counts
        .iter()
        .map(|(k, v)| (k.clone(), *v as f64 / total as f64))
        .collect();

    Ok(PopulationStats {
        total,
        morphology_counts,
        morphology_frequencies,
        diameter: SummaryStats::from_values(&diameters),
        t3_diameter: SummaryStats::from_values(&t3_diameters),
        internal_count: SummaryStats::from_values(&counts),
        t3_internal_count: SummaryStats::from_values(&t3_counts),
        depth_histogram,
    })
}

impl PopulationStats {
    /// Aligned-column text table mirroring the measurement table's rows.
    pub fn text_table(&self) -> String {
        fn cell(s: Option<&SummaryStats>, f: impl Fn(&SummaryStats) -> String) -> String {
            s.map(f).unwrap_or_else(|| "-".into())
        }
        let cols = [&self.diameter, &self.t3_diameter, &self.internal_count];
        let headers = ["Size, T1a/1b/2", "Size, T3", "Internal count"];
        let mean_row: Vec<String> =
            cols.iter().map(|c| cell(c.as_ref(), |s| format!("{:.2}", s.mean))).collect();
        let sd_row: Vec<String> =
            cols.iter().map(|c| cell(c.as_ref(), |s| format!("{:.2}", s.sd))).collect();
        let range_row: Vec<String> = cols
            .iter()
            .map(|c| cell(c.as_ref(), |s| format!("{:.2}-{:.2}", s.min, s.max)))
            .collect();

        let mut out = String::new();
        out.push_str(&format!("Population: {} MVLs\n", self.total));
        out.push_str("Morphologies:");
        for (name, count) in &self.morphology_counts {
            let freq = self.morphology_frequencies.get(name).copied().unwrap_or(0.0);
            out.push_str(&format!(" {name} {count} ({freq:.3})"));
        }
        out.push('\n');
        out.push_str("Depths:");
        for (depth, count) in &self.depth_histogram {
            out.push_str(&format!(" depth {depth}: {count}"));
        }
        out.push('\n');
        out.push('\n');
        out.push_str(&format!(
            "{:<10}{:>16}{:>16}{:>16}\n",
            "", headers[0], headers[1], headers[2]
        ));
        out.push_str(&format!(
            "{:<10}{:>16}{:>16}{:>16}\n",
            "Mean", mean_row[0], mean_row[1], mean_row[2]
        ));
        out.push_str(&format!(
            "{:<10}{:>16}{:>16}{:>16}\n",
            "St. Dev.", sd_row[0], sd_row[1], sd_row[2]
        ));
        out.push_str(&format!(
            "{:<10}{:>16}{:>16}{:>16}\n",
            "Range", range_row[0], range_row[1], range_row[2]
        ));
        out
    }
}
