use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Concentric detector rings: outer radii and the per-ring deviation value
/// used when averaging.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real", deny_unknown_fields)]
pub struct DetectorRings<T> {
    pub outer_radii: [T; 4],
    pub midpoints: [T; 4],
}

impl<T: Real> Default for DetectorRings<T> {
    fn default() -> Self {
        Self {
            outer_radii: [1.0, 5.0, 10.0, 20.0].map(T::lit),
            midpoints: [0.5, 3.0, 7.5, 15.0].map(T::lit),
        }
    }
}

impl<T: Real> DetectorRings<T> {
    pub fn validate(&self) -> Result<()> {
        let r = &self.outer_radii;
        if r[0] != T::one() {
            return Err(Error::InvalidParams("innermost ring radius must be 1 mm".into()));
        }
        if r.windows(2).any(|w| !(w[0] < w[1])) || !r[3].is_finite() {
            return Err(Error::InvalidParams("ring radii must strictly increase".into()));
        }
        if self.midpoints.iter().any(|m| !m.is_finite()) {
            return Err(Error::InvalidParams("ring midpoints must be finite".into()));
        }
        Ok(())
    }

    /// Deviation charged to an insertion outside every ring.
    pub fn miss_value(&self) -> T {
        self.outer_radii[3]
    }
}

/// Ring index `1..=4`, or outside the detector.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Hit {
    Ring(u8),
    Miss,
}

/// Smallest ring whose outer radius strictly exceeds `|offset|`.
pub fn classify_insertion<T: Real>(offset: [T; 2], rings: &DetectorRings<T>) -> Hit {
    let r = offset[0].hypot(offset[1]);
    rings
        .outer_radii
        .iter()
        .position(|&outer| r < outer)
        .map_or(Hit::Miss, |j| Hit::Ring(j as u8 + 1))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct RingCounts {
    pub ring_counts: [u64; 4],
    #[serde(default)]
    pub misses: u64,
}

impl RingCounts {
    pub fn total(&self) -> u64 {
        self.ring_counts.iter().sum::<u64>() + self.misses
    }

    pub fn tally<I: IntoIterator<Item = Hit>>(hits: I) -> Self {
        let mut c = Self::default();
        for h in hits {
            match h {
                Hit::Ring(j @ 1..=4) => c.ring_counts[j as usize - 1] += 1,
                _ => c.misses += 1,
            }
        }
        c
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct AccuracyReport<T> {
    #[serde(flatten)]
    pub counts: RingCounts,
    pub high_accuracy_rate_pct: T,
    pub average_deviation_mm: T,
}

/// Rate and midpoint-model average deviation from ring counts.
pub fn summarize_counts<T: Real>(counts: &RingCounts, rings: &DetectorRings<T>) -> Result<AccuracyReport<T>> {
    let total = counts.total();
    if total == 0 {
        return Err(Error::EmptyResults);
    }
    let n = T::lit(total as f64);
    let mut sum = rings.miss_value() * T::lit(counts.misses as f64);
    for (c, m) in counts.ring_counts.iter().zip(rings.midpoints) {
        sum += m * T::lit(*c as f64);
    }
    Ok(AccuracyReport {
        counts: *counts,
        high_accuracy_rate_pct: T::lit(100.0) * T::lit(counts.ring_counts[0] as f64) / n,
        average_deviation_mm: sum / n,
    })
}

pub fn summarize<T: Real>(hits: &[Hit], rings: &DetectorRings<T>) -> Result<AccuracyReport<T>> {
    summarize_counts(&RingCounts::tally(hits.iter().copied()), rings)
}

/// `report - reference` per field.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct ReportDiff<T> {
    pub ring_deltas: [i64; 4],
    pub miss_delta: i64,
    pub rate_delta_pct: T,
    pub deviation_delta_mm: T,
}

pub fn compare_report<T: Real>(
    report: &AccuracyReport<T>,
    reference: &RingCounts,
    rings: &DetectorRings<T>,
) -> Result<ReportDiff<T>> {
    let (a, b) = (report.counts.total(), reference.total());
    if a != b {
        return Err(Error::CountMismatch {
            report: a as usize,
            reference: b as usize,
        });
    }
    let theirs = summarize_counts(reference, rings)?;
    let mut ring_deltas = [0i64; 4];
    for (d, (x, y)) in ring_deltas
        .iter_mut()
        .zip(report.counts.ring_counts.iter().zip(reference.ring_counts))
    {
        *d = *x as i64 - y as i64;
    }
    Ok(ReportDiff {
        ring_deltas,
        miss_delta: report.counts.misses as i64 - reference.misses as i64,
        rate_delta_pct: report.high_accuracy_rate_pct - theirs.high_accuracy_rate_pct,
        deviation_delta_mm: report.average_deviation_mm - theirs.average_deviation_mm,
    })
}
