//! R² computation, per-group median aggregation, and the reporting
//! conventions: negative values clip to -1 in emitted heatmaps, constant
//! targets produce missing (empty) cells rather than zeros.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Coefficient of determination 1 - SS_res/SS_tot. Returns `None` when the
/// target is constant (SS_tot = 0) or the result is non-finite — the
/// "missing" marker.
pub fn r_squared(pred: &[f64], target: &[f64]) -> Result<Option<f64>> {
    if pred.len() != target.len() {
        return Err(Error::ShapeMismatch(format!(
            "pred has {} entries, target has {}",
            pred.len(),
            target.len()
        )));
    }
    if pred.len() < 2 {
        return Err(Error::ShapeMismatch("need at least 2 samples for R^2".into()));
    }
    let n = target.len() as f64;
    let mean = target.iter().sum::<f64>() / n;
    let ss_tot: f64 = target.iter().map(|t| (t - mean).powi(2)).sum();
    if ss_tot == 0.0 {
        return Ok(None);
    }
    let ss_res: f64 = pred
        .iter()
        .zip(target)
        .map(|(p, t)| (p - t).powi(2))
        .sum();
    let r2 = 1.0 - ss_res / ss_tot;
    Ok(r2.is_finite().then_some(r2))
}

/// Median of the finite entries; `None` when all are missing. Even counts
/// average the two middle values.
pub fn median_of_finite(values: &[Option<f64>]) -> Option<f64> {
    let mut finite: Vec<f64> = values.iter().flatten().copied().collect();
    if finite.is_empty() {
        return None;
    }
    finite.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = finite.len();
    Some(if n % 2 == 1 {
        finite[n / 2]
    } else {
        (finite[n / 2 - 1] + finite[n / 2]) / 2.0
    })
}

/// Reporting clip: negative values saturate at -1. Raw values stay in the
/// report; only emitted heatmaps are clipped.
pub fn clip_for_report(r2: f64) -> f64 {
    r2.max(-1.0)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EvalEntry {
    pub mix: String,
    pub ratio: f64,
    pub dataset: String,
    pub group: String,
    /// Raw per-dimension R², `None` marking missing dimensions.
    pub per_dim: Vec<Option<f64>>,
    pub median: Option<f64>,
    /// True when the median exists and lies below the -1 reporting clip.
    pub clipped: bool,
    /// True when every dimension is missing.
    pub missing: bool,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct EvalReport {
    pub entries: Vec<EvalEntry>,
}

impl EvalReport {
    pub fn push_group(
        &mut self,
        mix: impl Into<String>,
        ratio: f64,
        dataset: impl Into<String>,
        group: impl Into<String>,
        per_dim: Vec<Option<f64>>,
    ) {
        let median = median_of_finite(&per_dim);
        self.entries.push(EvalEntry {
            mix: mix.into(),
            ratio,
            dataset: dataset.into(),
            group: group.into(),
            missing: median.is_none(),
            clipped: median.map_or(false, |m| m < -1.0),
            median,
            per_dim,
        });
    }

    pub fn groups(&self) -> Vec<String> {
        let mut seen = Vec::new();
        for e in &self.entries {
            if !seen.contains(&e.group) {
                seen.push(e.group.clone());
            }
        }
        seen
    }
}

fn row_label(e: &EvalEntry) -> String {
    if e.ratio == 1.0 {
        e.mix.clone()
    } else {
        format!("{}@{}", e.mix, e.ratio)
    }
}

/// Heatmap-ready CSV for one P/SE group: rows are pretraining mixes, columns
/// eval datasets, cells the clipped median R² (empty string for missing).
/// Row/column order follows first appearance in the report.
pub fn emit_heatmap(report: &EvalReport, group: &str) -> Result<String> {
    let entries: Vec<&EvalEntry> = report.entries.iter().filter(|e| e.group == group).collect();
    if entries.is_empty() {
        return Err(Error::UnknownGroup(group.to_string()));
    }
    let mut rows: Vec<String> = Vec::new();
    let mut cols: Vec<String> = Vec::new();
    for e in &entries {
        let r = row_label(e);
        if !rows.contains(&r) {
            rows.push(r);
        }
        if !cols.contains(&e.dataset) {
            cols.push(e.dataset.clone());
        }
    }
    let mut out = String::new();
    out.push_str("mix");
    for c in &cols {
        out.push(',');
        out.push_str(c);
    }
    out.push('\n');
    for r in &rows {
        out.push_str(r);
        for c in &cols {
            out.push(',');
            let cell = entries
                .iter()
                .find(|e| &row_label(e) == r && &e.dataset == c)
                .and_then(|e| e.median);
            if let Some(m) = cell {
                out.push_str(&clip_for_report(m).to_string());
            }
        }
        out.push('\n');
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn r2_perfect_fit() {
        let t = [1.0, 2.0, 3.0];
        assert_eq!(r_squared(&t, &t).unwrap(), Some(1.0));
    }

    #[test]
    fn r2_mean_predictor_is_zero() {
        let t = [0.0, 1.0, 2.0, 7.0];
        let mean = t.iter().sum::<f64>() / 4.0;
        let p = [mean; 4];
        assert_eq!(r_squared(&p, &t).unwrap(), Some(0.0));
    }

    #[test]
    fn r2_reversed_example() {
        let t = [0.0, 1.0, 2.0];
        let p = [2.0, 1.0, 0.0];
        assert_abs_diff_eq!(r_squared(&p, &t).unwrap().unwrap(), -3.0, epsilon = 1e-12);
    }

    #[test]
    fn r2_constant_target_is_missing() {
        let t = [5.0, 5.0, 5.0];
        let p = [1.0, 2.0, 3.0];
        assert_eq!(r_squared(&p, &t).unwrap(), None);
    }

    #[test]
    fn r2_length_mismatch_errors() {
        assert!(r_squared(&[1.0], &[1.0, 2.0]).is_err());
    }

    #[test]
    fn r2_affine_invariance() {
        let t = [0.3, -1.0, 2.5, 0.0];
        let p = [0.1, -0.8, 2.0, 0.4];
        let base = r_squared(&p, &t).unwrap().unwrap();
        let (a, b) = (3.7, -1.2);
        let tp: Vec<f64> = t.iter().map(|x| a * x + b).collect();
        let pp: Vec<f64> = p.iter().map(|x| a * x + b).collect();
        let scaled = r_squared(&pp, &tp).unwrap().unwrap();
        assert_abs_diff_eq!(base, scaled, epsilon = 1e-12);
    }

    #[test]
    fn median_aggregation() {
        assert_eq!(
            median_of_finite(&[Some(0.2), Some(0.4), Some(0.9)]),
            Some(0.4)
        );
        assert_eq!(median_of_finite(&[None, None]), None);
        assert_abs_diff_eq!(
            median_of_finite(&[Some(0.5), None, Some(0.7)]).unwrap(),
            0.6,
            epsilon = 1e-12
        );
    }

    #[test]
    fn median_between_min_and_max() {
        let dims = [Some(-0.3), Some(0.1), Some(0.9), None, Some(0.4)];
        let m = median_of_finite(&dims).unwrap();
        assert!((-0.3..=0.9).contains(&m));
    }

    #[test]
    fn clip_examples() {
        assert_eq!(clip_for_report(-3.0), -1.0);
        assert_eq!(clip_for_report(0.85), 0.85);
        assert_eq!(clip_for_report(-1.0), -1.0);
        // Idempotent and monotone.
        assert_eq!(clip_for_report(clip_for_report(-7.0)), -1.0);
        assert!(clip_for_report(-2.0) <= clip_for_report(-0.5));
    }

    fn sample_report() -> EvalReport {
        let mut report = EvalReport::default();
        for mix in ["a/plain", "b/plain"] {
            for ds in ["x", "y", "z"] {
                let dims = if ds == "z" {
                    vec![None, None]
                } else {
                    vec![Some(0.5), Some(-4.0)]
                };
                report.push_group(mix, 1.0, ds, "LapPE", dims);
            }
        }
        report
    }

    #[test]
    fn heatmap_shape_and_missing_cells() {
        let report = sample_report();
        let csv = emit_heatmap(&report, "LapPE").unwrap();
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines.len(), 3); // header + 2 mixes
        assert_eq!(lines[0], "mix,x,y,z");
        // Missing cell is empty, not 0.
        assert!(lines[1].ends_with(','));
        assert!(emit_heatmap(&report, "nope").is_err());
    }

    #[test]
    fn heatmap_values_round_trip() {
        let report = sample_report();
        let csv = emit_heatmap(&report, "LapPE").unwrap();
        let cell = csv.lines().nth(1).unwrap().split(',').nth(1).unwrap();
        let parsed: f64 = cell.parse().unwrap();
        // Median of (0.5, -4.0) = -1.75, clipped to -1.
        assert_abs_diff_eq!(parsed, -1.0, epsilon = 1e-9);
    }
}
