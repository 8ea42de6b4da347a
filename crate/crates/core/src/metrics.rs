//! Dice scores, prevalence, area-plots and their continuity statistic.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::volume::MaskVolume;

/// `2|A ∩ B| / (|A| + |B|)`; two empty masks agree perfectly (1.0).
pub fn dice_score(pred: &MaskVolume, truth: &MaskVolume) -> Result<f64> {
    let (inter, p, t) = overlap_counts(pred, truth)?;
    Ok(dice_from_counts(inter, p, t))
}

fn dice_from_counts(inter: usize, pred: usize, truth: usize) -> f64 {
    if pred + truth == 0 {
        1.0
    } else {
        2.0 * inter as f64 / (pred + truth) as f64
    }
}

fn overlap_counts(pred: &MaskVolume, truth: &MaskVolume) -> Result<(usize, usize, usize)> {
    pred.geometry().ensure_same(&truth.geometry(), "prediction and truth differ")?;
    let mut counts = (0, 0, 0);
    for (&a, &b) in pred.voxels().iter().zip(truth.voxels()) {
        let (a, b) = (a != 0, b != 0);
        counts.0 += usize::from(a && b);
        counts.1 += usize::from(a);
        counts.2 += usize::from(b);
    }
    Ok(counts)
}

/// Unweighted mean of per-scan dice scores.
pub fn dataset_dice(pairs: &[(&MaskVolume, &MaskVolume)]) -> Result<f64> {
    if pairs.is_empty() {
        return Err(Error::invalid("dataset dice needs at least one scan"));
    }
    let mut sum = 0.0;
    for (pred, truth) in pairs {
        sum += dice_score(pred, truth)?;
    }
    Ok(sum / pairs.len() as f64)
}

/// Dice over all voxels of all scans pooled together.
pub fn pooled_dice(pairs: &[(&MaskVolume, &MaskVolume)]) -> Result<f64> {
    if pairs.is_empty() {
        return Err(Error::invalid("pooled dice needs at least one scan"));
    }
    let (mut inter, mut p, mut t) = (0, 0, 0);
    for (pred, truth) in pairs {
        let c = overlap_counts(pred, truth)?;
        inter += c.0;
        p += c.1;
        t += c.2;
    }
    Ok(dice_from_counts(inter, p, t))
}

/// Fraction of slices holding at least one positive voxel.
pub fn prevalence(masks: &[&MaskVolume]) -> Result<f64> {
    if masks.is_empty() {
        return Err(Error::invalid("prevalence needs at least one mask"));
    }
    let (mut positive, mut total) = (0usize, 0usize);
    for m in masks {
        for z in 0..m.depth() {
            positive += usize::from(m.slice(z).iter().any(|&v| v != 0));
        }
        total += m.depth();
    }
    Ok(positive as f64 / total as f64)
}

/// Per-slice mask area relative to the slice area, raw and max-normalized.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AreaPlot {
    pub scan_id: String,
    pub ratios: Vec<f64>,
    pub normalized: Vec<f64>,
}

impl AreaPlot {
    /// Builds the plot from raw ratios; an all-zero sequence normalizes to zeros.
    pub fn from_ratios(scan_id: impl Into<String>, ratios: Vec<f64>) -> Self {
        let max = ratios.iter().copied().fold(0.0, f64::max);
        let normalized = if max > 0.0 {
            ratios.iter().map(|r| r / max).collect()
        } else {
            vec![0.0; ratios.len()]
        };
        AreaPlot {
            scan_id: scan_id.into(),
            ratios,
            normalized,
        }
    }

    pub fn len(&self) -> usize {
        self.ratios.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ratios.is_empty()
    }
}

pub fn area_plot(mask: &MaskVolume) -> AreaPlot {
    let area = mask.geometry().slice_len() as f64;
    let ratios = (0..mask.depth())
        .map(|z| mask.slice(z).iter().filter(|&&v| v != 0).count() as f64 / area)
        .collect();
    AreaPlot::from_ratios(mask.scan_id.clone(), ratios)
}

/// Total variation of the normalized curve: `Σ |n[i+1] - n[i]|`.
pub fn continuity_tv(plot: &AreaPlot) -> Result<f64> {
    if plot.normalized.len() < 2 {
        return Err(Error::invalid(format!(
            "continuity needs at least 2 slices, plot has {}",
            plot.normalized.len()
        )));
    }
    Ok(plot.normalized.windows(2).map(|w| (w[1] - w[0]).abs()).sum())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScanEvaluation {
    pub scan_id: String,
    pub dice: f64,
    pub truth_tv: Option<f64>,
    pub pred_tv: Option<f64>,
}

/// Aggregated evaluation of a set of predictions.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub scans: Vec<ScanEvaluation>,
    /// Unweighted per-scan mean; the canonical dataset score.
    pub mean_dice: f64,
    pub pooled_dice: f64,
    /// Slice prevalence of the ground truth.
    pub prevalence: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub timing: Option<serde_json::Value>,
}

pub fn evaluate(pairs: &[(&MaskVolume, &MaskVolume)]) -> Result<EvalReport> {
    let scans = pairs
        .iter()
        .map(|(pred, truth)| {
            Ok(ScanEvaluation {
                scan_id: truth.scan_id.clone(),
                dice: dice_score(pred, truth)?,
                truth_tv: continuity_tv(&area_plot(truth)).ok(),
                pred_tv: continuity_tv(&area_plot(pred)).ok(),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let truths: Vec<&MaskVolume> = pairs.iter().map(|(_, t)| *t).collect();
    Ok(EvalReport {
        mean_dice: dataset_dice(pairs)?,
        pooled_dice: pooled_dice(pairs)?,
        prevalence: prevalence(&truths)?,
        scans,
        timing: None,
    })
}

/// Renders named dice scores as a two-column table, percentages rounded
/// to whole numbers: `| Model | Dice Score |`.
pub fn render_dice_table(rows: &[(&str, f64)]) -> String {
    let mut out = String::from("| Model | Dice Score |\n|---|---|\n");
    for (name, dice) in rows {
        out.push_str(&format!("| {name} | {:.0}% |\n", dice * 100.0));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::volume::{resize, Geometry};
    use proptest::prelude::*;

    fn mask(w: usize, h: usize, d: usize, v: Vec<u8>) -> MaskVolume {
        MaskVolume::new("m", Geometry::new(w, h, d).unwrap(), v).unwrap()
    }

    #[test]
    fn dice_examples() {
        let a = mask(2, 2, 2, vec![1, 1, 0, 0, 1, 0, 0, 0]);
        assert_eq!(dice_score(&a, &a).unwrap(), 1.0);
        let b = mask(2, 2, 2, vec![0, 0, 1, 1, 0, 1, 0, 0]);
        assert_eq!(dice_score(&a, &b).unwrap(), 0.0);
        let pred = mask(2, 2, 2, vec![1, 1, 0, 0, 0, 0, 0, 0]);
        let truth = mask(2, 2, 2, vec![1, 1, 1, 1, 0, 0, 0, 0]);
        assert!((dice_score(&pred, &truth).unwrap() - 2.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn empty_vs_empty_is_perfect() {
        let e = mask(2, 1, 1, vec![0, 0]);
        assert_eq!(dice_score(&e, &e).unwrap(), 1.0);
    }

    #[test]
    fn dice_geometry_mismatch() {
        let a = mask(2, 1, 1, vec![0, 0]);
        let b = mask(1, 2, 1, vec![0, 0]);
        assert!(matches!(dice_score(&a, &b), Err(Error::GeometryMismatch(_))));
    }

    #[test]
    fn dataset_dice_is_unweighted_mean() {
        let a = mask(1, 1, 1, vec![1]);
        let z = mask(1, 1, 1, vec![0]);
        assert_eq!(dataset_dice(&[(&a, &a)]).unwrap(), 1.0);
        assert_eq!(dataset_dice(&[(&a, &a), (&a, &z)]).unwrap(), 0.5);
        assert!(dataset_dice(&[]).is_err());
    }

    #[test]
    fn pooled_differs_from_mean_when_sizes_differ() {
        let big = mask(4, 1, 1, vec![1, 1, 1, 1]);
        let small_p = mask(1, 1, 1, vec![0]);
        let small_t = mask(1, 1, 1, vec![1]);
        assert_eq!(dataset_dice(&[(&big, &big), (&small_p, &small_t)]).unwrap(), 0.5);
        assert!((pooled_dice(&[(&big, &big), (&small_p, &small_t)]).unwrap() - 8.0 / 9.0).abs() < 1e-15);
    }

    #[test]
    fn dice_table_layout() {
        let table = render_dice_table(&[("2D Model", 0.73), ("3D Model", 0.79)]);
        assert_eq!(
            table,
            "| Model | Dice Score |\n|---|---|\n| 2D Model | 73% |\n| 3D Model | 79% |\n"
        );
    }

    #[test]
    fn area_plot_examples() {
        let empty = mask(2, 2, 3, vec![0; 12]);
        let p = area_plot(&empty);
        assert_eq!(p.ratios, vec![0.0; 3]);
        assert_eq!(p.normalized, vec![0.0; 3]);

        let uniform = mask(2, 1, 3, vec![1, 0, 0, 1, 1, 0]);
        assert_eq!(area_plot(&uniform).normalized, vec![1.0; 3]);
    }

    #[test]
    fn area_plot_hand_counted_512() {
        let n = 512 * 512;
        let counts = [0usize, 131072, 262144, 65536];
        let mut voxels = vec![0u8; 4 * n];
        for (z, &c) in counts.iter().enumerate() {
            voxels[z * n..z * n + c].fill(1);
        }
        let p = area_plot(&mask(512, 512, 4, voxels));
        assert_eq!(p.ratios, vec![0.0, 0.5, 1.0, 0.25]);
        assert_eq!(p.normalized, vec![0.0, 0.5, 1.0, 0.25]);
    }

    #[test]
    fn continuity_examples() {
        let plot = |v: Vec<f64>| AreaPlot::from_ratios("p", v);
        assert_eq!(continuity_tv(&plot(vec![0.3; 5])).unwrap(), 0.0);
        assert_eq!(continuity_tv(&plot(vec![0.0, 1.0, 0.0, 1.0])).unwrap(), 3.0);
        assert_eq!(continuity_tv(&plot(vec![0.0, 0.5, 1.0])).unwrap(), 1.0);
        assert!(continuity_tv(&plot(vec![1.0])).is_err());
    }

    #[test]
    fn prevalence_examples() {
        let none = mask(1, 1, 4, vec![0; 4]);
        assert_eq!(prevalence(&[&none]).unwrap(), 0.0);
        let all = mask(1, 1, 3, vec![1; 3]);
        assert_eq!(prevalence(&[&all]).unwrap(), 1.0);
        let mut v = vec![0u8; 10];
        v[3] = 1;
        v[7] = 1;
        assert_eq!(prevalence(&[&mask(1, 1, 10, v)]).unwrap(), 0.2);
        assert!(prevalence(&[]).is_err());
    }

    proptest! {
        #[test]
        fn dice_symmetric(bits in proptest::collection::vec(0u8..=1, 1..64), other in proptest::collection::vec(0u8..=1, 64)) {
            let n = bits.len();
            let a = mask(n, 1, 1, bits);
            let b = mask(n, 1, 1, other[..n].to_vec());
            prop_assert_eq!(dice_score(&a, &b).unwrap(), dice_score(&b, &a).unwrap());
        }

        #[test]
        fn normalization_is_scale_free(w in 2usize..6, h in 2usize..6, d in 1usize..5, seed in any::<u64>()) {
            let g = Geometry::new(w, h, d).unwrap();
            let m = MaskVolume::new("m", g, (0..g.len()).map(|i| ((seed >> (i % 64)) & 1) as u8).collect()).unwrap();
            let up = resize(&m, 2 * w, 2 * h).unwrap();
            prop_assert_eq!(area_plot(&m).normalized, area_plot(&up).normalized);
        }

        #[test]
        fn tv_reversal_invariant(v in proptest::collection::vec(0.0f64..1.0, 2..40)) {
            let fwd = AreaPlot::from_ratios("p", v.clone());
            let rev = AreaPlot::from_ratios("p", v.into_iter().rev().collect());
            prop_assert!((continuity_tv(&fwd).unwrap() - continuity_tv(&rev).unwrap()).abs() < 1e-12);
        }

        #[test]
        fn normalized_peak_is_one(v in proptest::collection::vec(0.0f64..1.0, 1..40)) {
            let p = AreaPlot::from_ratios("p", v);
            let max = p.normalized.iter().copied().fold(0.0, f64::max);
            if p.ratios.iter().any(|&r| r > 0.0) {
                prop_assert_eq!(max, 1.0);
            } else {
                prop_assert_eq!(max, 0.0);
            }
        }
    }
}
