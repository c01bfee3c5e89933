//! Exposure planning: pick mask offsets and exposure times whose accumulated
//! patterns reproduce a target, up to a uniform pedestal.
//!
//! Planning solves min ||M w - I|| with w >= 0 over the mean-corrected
//! ensemble matrix, drops zero weights, rescales the surviving weights to
//! exposure times, and predicts the pedestal the accumulated exposure will
//! carry. A desired pedestal can be enforced instead by restoring the column
//! means and offsetting the target before solving.

use crate::ensemble::IlluminationEnsemble;
use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::matrix::ColMatrix;
use crate::metrics::{self, Snr};
use crate::nnls;

/// Zero-mean, contrast-normalized target: `values` average to zero and peak at
/// |value| = 1, so weights and pedestal are in comparable contrast units.
#[derive(Debug, Clone, PartialEq)]
pub struct TargetPattern {
    pub window_width: usize,
    pub window_height: usize,
    /// Vectorized (row-major) zero-mean values with max |value| = 1.
    pub values: Vec<f64>,
    /// Peak absolute value of the mean-corrected raw pattern; the factor that
    /// was divided out during normalization. Zero for an all-zero target.
    pub contrast_scale: f64,
    /// Pedestal to enforce during planning, in contrast units.
    pub requested_pedestal: Option<f64>,
}

impl TargetPattern {
    /// Mean-correct and contrast-normalize a raw pattern.
    pub fn from_grid(raw: &Grid) -> Result<Self> {
        if raw.is_empty() {
            return Err(Error::validation("target: pattern is empty"));
        }
        let mean = raw.mean();
        let centered: Vec<f64> = raw.values().iter().map(|v| v - mean).collect();
        let peak = centered.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let values = if peak > 0.0 { centered.iter().map(|v| v / peak).collect() } else { centered };
        Ok(TargetPattern {
            window_width: raw.width(),
            window_height: raw.height(),
            values,
            contrast_scale: peak,
            requested_pedestal: None,
        })
    }

    pub fn with_pedestal(mut self, pedestal: f64) -> Result<Self> {
        if !(pedestal >= 0.0) {
            return Err(Error::validation(format!("pedestal: must be nonnegative, got {pedestal}")));
        }
        self.requested_pedestal = Some(pedestal);
        Ok(self)
    }

    pub fn is_zero(&self) -> bool {
        self.values.iter().all(|&v| v == 0.0)
    }
}

/// How nonnegative weights become exposure times.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ScalingMode {
    /// Scale so the brightest predicted pixel reaches `margin * max_count`,
    /// keeping the detector inside its saturation budget.
    DetectorMargin { max_count: f64, margin: f64 },
    /// Scale so exposure times sum to a predetermined total.
    FixedIntegratedMs { total_ms: f64 },
}

/// One exposure: which pattern, where the mask sits, and for how long.
#[derive(Debug, Clone, PartialEq)]
pub struct PlanEntry {
    pub pattern_index: usize,
    pub offset: (i64, i64),
    pub weight: f64,
    pub exposure_ms: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExposureStats {
    pub mean_ms: f64,
    pub std_ms: f64,
    pub min_ms: f64,
    pub max_ms: f64,
}

/// A solved exposure schedule with its quality predictions.
#[derive(Debug, Clone, PartialEq)]
pub struct ExposurePlan {
    /// Selected exposures in execution order.
    pub entries: Vec<PlanEntry>,
    pub scaling: ScalingMode,
    /// Mean exposure the plan deposits, in contrast units: the weighted sum
    /// of the selected pattern means.
    pub predicted_pedestal: f64,
    pub residual_norm: f64,
    /// Score of the noiseless prediction M w against the target.
    pub predicted_snr: Snr,
}

impl ExposurePlan {
    pub fn selected_count(&self) -> usize {
        self.entries.len()
    }

    pub fn total_weight(&self) -> f64 {
        self.entries.iter().map(|e| e.weight).sum()
    }

    pub fn total_exposure_ms(&self) -> f64 {
        self.entries.iter().map(|e| e.exposure_ms).sum()
    }

    /// Milliseconds of exposure per unit weight (the rescaling factor applied
    /// by the scaling mode), recovered from the entries.
    pub fn exposure_scale_ms(&self) -> f64 {
        if self.entries.is_empty() {
            0.0
        } else {
            self.total_exposure_ms() / self.total_weight()
        }
    }

    pub fn exposure_stats(&self) -> ExposureStats {
        if self.entries.is_empty() {
            return ExposureStats { mean_ms: 0.0, std_ms: 0.0, min_ms: 0.0, max_ms: 0.0 };
        }
        let n = self.entries.len() as f64;
        let mean = self.total_exposure_ms() / n;
        let var = self.entries.iter().map(|e| (e.exposure_ms - mean).powi(2)).sum::<f64>() / n;
        ExposureStats {
            mean_ms: mean,
            std_ms: var.sqrt(),
            min_ms: self.entries.iter().map(|e| e.exposure_ms).fold(f64::INFINITY, f64::min),
            max_ms: self.entries.iter().map(|e| e.exposure_ms).fold(f64::NEG_INFINITY, f64::max),
        }
    }

    /// Order-insensitive fingerprint used to tie simulation results back to
    /// the plan that produced them.
    pub fn fingerprint(&self) -> u64 {
        use crate::rng::mix64;
        let mut acc = mix64(self.entries.len() as u64);
        for e in &self.entries {
            acc = mix64(acc ^ e.pattern_index as u64);
            acc = mix64(acc ^ e.offset.0 as u64);
            acc = mix64(acc ^ e.offset.1 as u64);
            acc = mix64(acc ^ e.weight.to_bits());
            acc = mix64(acc ^ e.exposure_ms.to_bits());
        }
        acc
    }
}

/// Restore the column means and offset the target, producing the problem
/// whose solution lands on the requested pedestal.
pub fn enforce_pedestal(
    ensemble: &IlluminationEnsemble,
    target: &TargetPattern,
    pedestal: f64,
) -> Result<(ColMatrix, Vec<f64>)> {
    if !(pedestal >= 0.0) {
        return Err(Error::validation(format!("pedestal: must be nonnegative, got {pedestal}")));
    }
    let rows = ensemble.matrix.rows();
    let mut matrix = ensemble.matrix.clone();
    for (k, &mean) in ensemble.pattern_means.iter().enumerate() {
        for v in matrix.col_mut(k) {
            *v += mean;
        }
    }
    let shifted: Vec<f64> = target.values.iter().map(|v| v + pedestal).collect();
    debug_assert_eq!(shifted.len(), rows);
    Ok((matrix, shifted))
}

/// Solve the planning problem for a target over an ensemble.
///
/// Uses the pedestal-enforcing formulation when the target requests one.
/// Weights are rescaled to exposure times per `scaling`; zero-weight patterns
/// are dropped. An all-zero target yields an empty plan.
pub fn make_plan(
    ensemble: &IlluminationEnsemble,
    target: &TargetPattern,
    scaling: ScalingMode,
    tol: f64,
    max_iter: usize,
) -> Result<ExposurePlan> {
    if target.window_width != ensemble.geometry.window_width
        || target.window_height != ensemble.geometry.window_height
    {
        return Err(Error::validation(format!(
            "target: window {}x{} does not match ensemble window {}x{}",
            target.window_width,
            target.window_height,
            ensemble.geometry.window_width,
            ensemble.geometry.window_height
        )));
    }
    match scaling {
        ScalingMode::DetectorMargin { max_count, margin } => {
            if !(max_count > 0.0) {
                return Err(Error::validation(format!("maxCount: must be positive, got {max_count}")));
            }
            if !(margin > 0.0 && margin < 1.0) {
                return Err(Error::validation(format!("margin: must be in (0, 1), got {margin}")));
            }
        }
        ScalingMode::FixedIntegratedMs { total_ms } => {
            if !(total_ms > 0.0) {
                return Err(Error::validation(format!("total: must be positive, got {total_ms}")));
            }
        }
    }

    if target.is_zero() && target.requested_pedestal.is_none() {
        return Ok(ExposurePlan {
            entries: Vec::new(),
            scaling,
            predicted_pedestal: 0.0,
            residual_norm: 0.0,
            predicted_snr: Snr::Unbounded,
        });
    }

    let solution = match target.requested_pedestal {
        Some(pedestal) => {
            let (matrix, shifted) = enforce_pedestal(ensemble, target, pedestal)?;
            nnls::solve_nnls(&matrix, &shifted, tol, max_iter)?
        }
        None => nnls::solve_nnls(&ensemble.matrix, &target.values, tol, max_iter)?,
    };

    let selected: Vec<usize> = (0..solution.weights.len()).filter(|&k| solution.weights[k] > 0.0).collect();
    if selected.is_empty() {
        return Err(Error::Planning("target orthogonal to ensemble span".to_string()));
    }

    // exposure pedestal in contrast units: weighted sum of selected pattern means
    let predicted_pedestal: f64 =
        selected.iter().map(|&k| solution.weights[k] * ensemble.pattern_means[k]).sum();

    // physical per-pixel accumulation (pattern means restored) sets the scale
    let prediction_corrected = ensemble.matrix.matvec(&solution.weights);
    let peak_physical = prediction_corrected
        .iter()
        .map(|v| v + predicted_pedestal)
        .fold(f64::NEG_INFINITY, f64::max);
    let total_weight: f64 = selected.iter().map(|&k| solution.weights[k]).sum();
    let scale_ms = match scaling {
        ScalingMode::DetectorMargin { max_count, margin } => {
            if !(peak_physical > 0.0) {
                return Err(Error::Planning("predicted exposure is nonpositive everywhere".to_string()));
            }
            margin * max_count / peak_physical
        }
        ScalingMode::FixedIntegratedMs { total_ms } => total_ms / total_weight,
    };

    let entries: Vec<PlanEntry> = selected
        .iter()
        .map(|&k| PlanEntry {
            pattern_index: k,
            offset: ensemble.geometry.offsets[k],
            weight: solution.weights[k],
            exposure_ms: solution.weights[k] * scale_ms,
        })
        .collect();

    // score the noiseless prediction against the target
    let prediction_grid = match target.requested_pedestal {
        Some(pedestal) => {
            let (matrix, _) = enforce_pedestal(ensemble, target, pedestal)?;
            Grid::from_vec(target.window_width, target.window_height, matrix.matvec(&solution.weights))?
        }
        None => Grid::from_vec(target.window_width, target.window_height, prediction_corrected)?,
    };
    let predicted_snr = metrics::score_projection(&prediction_grid, target)?.snr;

    Ok(ExposurePlan {
        entries,
        scaling,
        predicted_pedestal,
        residual_norm: solution.residual_norm,
        predicted_snr,
    })
}

/// Total stage travel of a plan's offsets in execution order, measured in
/// pixels of Euclidean distance and including the leg from the stage origin
/// to the first entry.
pub fn path_length(entries: &[PlanEntry]) -> f64 {
    let mut total = 0.0;
    let mut prev = (0.0, 0.0);
    for e in entries {
        let p = (e.offset.0 as f64, e.offset.1 as f64);
        total += ((p.0 - prev.0).powi(2) + (p.1 - prev.1).powi(2)).sqrt();
        prev = p;
    }
    total
}

/// Reorder entries to cut stage travel: nearest-neighbor chain starting from
/// the entry closest to the origin. Falls back to the incoming order in the
/// rare case the heuristic does not improve on it, so the result never
/// travels farther than the input. Weights and times are untouched.
pub fn order_exposures(plan: &ExposurePlan) -> ExposurePlan {
    if plan.entries.len() <= 1 {
        return plan.clone();
    }
    let n = plan.entries.len();
    let mut remaining: Vec<usize> = (0..n).collect();
    let mut ordered = Vec::with_capacity(n);
    let mut cursor = (0.0f64, 0.0f64);
    while !remaining.is_empty() {
        let (pos, _) = remaining
            .iter()
            .enumerate()
            .map(|(pos, &i)| {
                let o = plan.entries[i].offset;
                let d = ((o.0 as f64 - cursor.0).powi(2) + (o.1 as f64 - cursor.1).powi(2)).sqrt();
                (pos, d)
            })
            .min_by(|a, b| a.1.total_cmp(&b.1))
            .expect("nonempty");
        let i = remaining.remove(pos);
        cursor = (plan.entries[i].offset.0 as f64, plan.entries[i].offset.1 as f64);
        ordered.push(plan.entries[i].clone());
    }
    if path_length(&ordered) <= path_length(&plan.entries) {
        ExposurePlan { entries: ordered, ..plan.clone() }
    } else {
        plan.clone()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ensemble::{capture_ensemble, BeamModel, WindowGeometry};
    use crate::mask::{generate_mask, MaskClass, MaskField, MaskSpec};

    fn small_ensemble(seed: u64) -> IlluminationEnsemble {
        let spec = MaskSpec {
            class: MaskClass::RandomBinary,
            width: 24,
            height: 24,
            feature_size_px: 1,
            transmission_low: 0.08,
            transmission_high: 1.0,
            seed,
        };
        let mask = generate_mask(&spec).unwrap();
        let geom = WindowGeometry::raster(&mask, 4, 4, 1);
        capture_ensemble(&mask, &geom, &BeamModel::default()).unwrap()
    }

    fn target_from_column(ensemble: &IlluminationEnsemble, k: usize) -> TargetPattern {
        let col = ensemble.matrix.col(k);
        let peak = col.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        TargetPattern {
            window_width: ensemble.geometry.window_width,
            window_height: ensemble.geometry.window_height,
            values: col.iter().map(|v| v / peak).collect(),
            contrast_scale: peak,
            requested_pedestal: None,
        }
    }

    #[test]
    fn recovers_single_basis_column() {
        let ens = small_ensemble(3);
        let target = target_from_column(&ens, 17);
        let plan = make_plan(&ens, &target, ScalingMode::FixedIntegratedMs { total_ms: 100.0 }, 1e-10, 10_000)
            .unwrap();
        assert!(plan.residual_norm < 1e-9, "residual {}", plan.residual_norm);
        assert_eq!(plan.entries.len(), 1);
        assert_eq!(plan.entries[0].pattern_index, 17);
        assert_eq!(plan.entries[0].offset, ens.geometry.offsets[17]);
        assert!((plan.entries[0].exposure_ms - 100.0).abs() < 1e-9);
        assert_eq!(plan.predicted_snr, Snr::Unbounded);
    }

    #[test]
    fn planning_is_deterministic() {
        let ens = small_ensemble(5);
        let mut raw = Grid::zeros(4, 4);
        raw.set(1, 1, 1.0);
        raw.set(2, 2, 1.0);
        let target = TargetPattern::from_grid(&raw).unwrap();
        let mode = ScalingMode::DetectorMargin { max_count: 1000.0, margin: 0.8 };
        let a = make_plan(&ens, &target, mode, 1e-10, 10_000).unwrap();
        let b = make_plan(&ens, &target, mode, 1e-10, 10_000).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn zero_target_yields_empty_plan() {
        let ens = small_ensemble(6);
        let target = TargetPattern::from_grid(&Grid::zeros(4, 4)).unwrap();
        let plan =
            make_plan(&ens, &target, ScalingMode::FixedIntegratedMs { total_ms: 10.0 }, 1e-10, 1000).unwrap();
        assert!(plan.entries.is_empty());
        assert_eq!(plan.residual_norm, 0.0);
        assert_eq!(plan.predicted_pedestal, 0.0);
    }

    #[test]
    fn pedestal_identity_on_noiseless_prediction() {
        let ens = small_ensemble(7);
        let mut raw = Grid::zeros(4, 4);
        for (i, v) in [0.9, -0.4, 0.2, 0.7, -0.8, 0.1].iter().enumerate() {
            raw.set(i % 4, i / 4, *v);
        }
        let target = TargetPattern::from_grid(&raw).unwrap();
        let plan =
            make_plan(&ens, &target, ScalingMode::FixedIntegratedMs { total_ms: 50.0 }, 1e-10, 10_000).unwrap();
        // restore means: predicted physical pattern = M w + sum_k w_k mean_k
        let mut weights = vec![0.0; ens.matrix.cols()];
        for e in &plan.entries {
            weights[e.pattern_index] = e.weight;
        }
        let with_means: Vec<f64> = ens
            .matrix
            .matvec(&weights)
            .iter()
            .map(|v| v + plan.predicted_pedestal)
            .collect();
        let mean = with_means.iter().sum::<f64>() / with_means.len() as f64;
        assert!(
            (mean - plan.predicted_pedestal).abs() <= 1e-9 * plan.predicted_pedestal.abs(),
            "mean {mean} vs pedestal {}",
            plan.predicted_pedestal
        );
        // and the pedestal equals N' * mean(w_k * pattern_mean_k) by construction
        let n_sel = plan.entries.len() as f64;
        let joint_mean: f64 = plan
            .entries
            .iter()
            .map(|e| e.weight * ens.pattern_means[e.pattern_index])
            .sum::<f64>()
            / n_sel;
        assert!((plan.predicted_pedestal - n_sel * joint_mean).abs() <= 1e-12 * plan.predicted_pedestal);
    }

    #[test]
    fn detector_margin_caps_peak_count() {
        let ens = small_ensemble(8);
        let mut raw = Grid::zeros(4, 4);
        raw.set(0, 0, 1.0);
        raw.set(3, 3, -1.0);
        let target = TargetPattern::from_grid(&raw).unwrap();
        let plan = make_plan(
            &ens,
            &target,
            ScalingMode::DetectorMargin { max_count: 2000.0, margin: 0.75 },
            1e-10,
            10_000,
        )
        .unwrap();
        let mut weights = vec![0.0; ens.matrix.cols()];
        for e in &plan.entries {
            weights[e.pattern_index] = e.weight;
        }
        let scale = plan.exposure_scale_ms();
        let peak = ens
            .matrix
            .matvec(&weights)
            .iter()
            .map(|v| (v + plan.predicted_pedestal) * scale)
            .fold(f64::NEG_INFINITY, f64::max);
        assert!((peak - 1500.0).abs() < 1e-6, "peak predicted count {peak}");
    }

    #[test]
    fn enforce_pedestal_examples() {
        let ens = small_ensemble(9);
        let raw = Grid::from_fn(4, 4, |x, y| if (x + y) % 2 == 0 { 1.0 } else { -1.0 });
        let target = TargetPattern::from_grid(&raw).unwrap();

        // pedestal 0.5 shifts the right-hand side elementwise
        let (_, shifted) = enforce_pedestal(&ens, &target, 0.5).unwrap();
        for (s, v) in shifted.iter().zip(&target.values) {
            assert_eq!(*s, v + 0.5);
        }
        // negative pedestal rejected
        assert!(enforce_pedestal(&ens, &target, -0.1).is_err());

        // zero pedestal on an ensemble with zero means leaves the problem unchanged
        let mut zero_mean = ens.clone();
        zero_mean.pattern_means = vec![0.0; zero_mean.pattern_means.len()];
        let (m, rhs) = enforce_pedestal(&zero_mean, &target, 0.0).unwrap();
        assert_eq!(m, zero_mean.matrix);
        assert_eq!(rhs, target.values);
    }

    #[test]
    fn uniform_ensemble_meets_enforced_pedestal_exactly() {
        // columns all equal to a constant c after un-mean-correcting
        let mask = MaskField {
            width: 12,
            height: 12,
            pixel_pitch_um: 55.0,
            values: Grid::filled(12, 12, 0.5),
            spec: None,
        };
        let geom = WindowGeometry::new(3, 3, vec![(0, 0), (4, 4), (8, 8)]);
        let ens = capture_ensemble(&mask, &geom, &BeamModel::default()).unwrap();
        let target = TargetPattern::from_grid(&Grid::zeros(3, 3)).unwrap().with_pedestal(2.5).unwrap();
        let plan =
            make_plan(&ens, &target, ScalingMode::FixedIntegratedMs { total_ms: 30.0 }, 1e-10, 1000).unwrap();
        assert!(plan.residual_norm < 1e-9, "residual {}", plan.residual_norm);
        // verify by direct multiplication: the un-mean-corrected prediction is
        // uniform at the requested pedestal
        let (m, _) = enforce_pedestal(&ens, &target, 2.5).unwrap();
        let mut weights = vec![0.0; ens.matrix.cols()];
        for e in &plan.entries {
            weights[e.pattern_index] = e.weight;
        }
        for v in m.matvec(&weights) {
            assert!((v - 2.5).abs() < 1e-9);
        }
        assert!((plan.predicted_pedestal - 2.5).abs() < 1e-9);
    }

    #[test]
    fn ordering_single_entry_unchanged() {
        let plan = ExposurePlan {
            entries: vec![PlanEntry { pattern_index: 0, offset: (5, 5), weight: 1.0, exposure_ms: 2.0 }],
            scaling: ScalingMode::FixedIntegratedMs { total_ms: 2.0 },
            predicted_pedestal: 0.5,
            residual_norm: 0.0,
            predicted_snr: Snr::Unbounded,
        };
        assert_eq!(order_exposures(&plan), plan);
    }

    #[test]
    fn ordering_collinear_offsets() {
        let entry = |k: usize, x: i64| PlanEntry {
            pattern_index: k,
            offset: (x, 0),
            weight: 1.0,
            exposure_ms: 1.0,
        };
        let plan = ExposurePlan {
            entries: vec![entry(0, 0), entry(1, 10), entry(2, 1)],
            scaling: ScalingMode::FixedIntegratedMs { total_ms: 3.0 },
            predicted_pedestal: 0.5,
            residual_norm: 0.0,
            predicted_snr: Snr::Unbounded,
        };
        let ordered = order_exposures(&plan);
        let xs: Vec<i64> = ordered.entries.iter().map(|e| e.offset.0).collect();
        assert_eq!(xs, vec![0, 1, 10]);
    }

    #[test]
    fn ordering_never_lengthens_path() {
        use crate::rng::CounterRng;
        let mut rng = CounterRng::from_stream(40, 0x77);
        for _ in 0..20 {
            let entries: Vec<PlanEntry> = (0..20)
                .map(|k| PlanEntry {
                    pattern_index: k,
                    offset: (rng.next_below(100) as i64, rng.next_below(100) as i64),
                    weight: 1.0,
                    exposure_ms: 1.0,
                })
                .collect();
            let plan = ExposurePlan {
                entries,
                scaling: ScalingMode::FixedIntegratedMs { total_ms: 20.0 },
                predicted_pedestal: 0.1,
                residual_norm: 0.0,
                predicted_snr: Snr::Unbounded,
            };
            let ordered = order_exposures(&plan);
            assert!(path_length(&ordered.entries) <= path_length(&plan.entries) + 1e-12);
            assert_eq!(ordered.entries.len(), plan.entries.len());
        }
    }

    #[test]
    fn nearest_neighbor_close_to_optimal_at_n8() {
        use crate::rng::CounterRng;
        // exhaustive-permutation oracle at n = 8
        fn permutations(n: usize) -> Vec<Vec<usize>> {
            let mut out = Vec::new();
            let mut idx: Vec<usize> = (0..n).collect();
            fn heap(k: usize, idx: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
                if k == 1 {
                    out.push(idx.clone());
                    return;
                }
                for i in 0..k {
                    heap(k - 1, idx, out);
                    if k % 2 == 0 {
                        idx.swap(i, k - 1);
                    } else {
                        idx.swap(0, k - 1);
                    }
                }
            }
            heap(n, &mut idx, &mut out);
            out
        }

        let mut rng = CounterRng::from_stream(8, 0x88);
        for _round in 0..3 {
            let entries: Vec<PlanEntry> = (0..8)
                .map(|k| PlanEntry {
                    pattern_index: k,
                    offset: (rng.next_below(101) as i64 - 50, rng.next_below(101) as i64 - 50),
                    weight: 1.0,
                    exposure_ms: 1.0,
                })
                .collect();
            let plan = ExposurePlan {
                entries: entries.clone(),
                scaling: ScalingMode::FixedIntegratedMs { total_ms: 8.0 },
                predicted_pedestal: 0.1,
                residual_norm: 0.0,
                predicted_snr: Snr::Unbounded,
            };
            let ordered = order_exposures(&plan);
            let best = permutations(8)
                .into_iter()
                .map(|p| {
                    let perm: Vec<PlanEntry> = p.iter().map(|&i| entries[i].clone()).collect();
                    path_length(&perm)
                })
                .fold(f64::INFINITY, f64::min);
            let ratio = path_length(&ordered.entries) / best;
            assert!(ratio <= 1.5, "nearest-neighbor path {ratio:.3}x optimal");
        }
    }

    #[test]
    fn mismatched_window_rejected() {
        let ens = small_ensemble(11);
        let target = TargetPattern::from_grid(&Grid::filled(5, 5, 1.0));
        // 5x5 target over a 4x4 ensemble window: from_grid succeeds (flat
        // pattern normalizes to zero), make_plan must reject the dims
        let target = target.unwrap();
        assert!(matches!(
            make_plan(&ens, &target, ScalingMode::FixedIntegratedMs { total_ms: 1.0 }, 1e-10, 10),
            Err(Error::Validation(_))
        ));
    }
}
