//! Nonnegative least squares by the Lawson-Hanson active-set method.
//!
//! Minimizes ||A w - b|| subject to w >= 0. Columns enter the passive set one
//! at a time by largest dual value (ties broken toward the lowest index) and
//! leave it through the usual feasibility line search. The unconstrained
//! subproblem on the passive set is solved through an incrementally updated
//! Cholesky factor of the passive Gram matrix, with iterative refinement
//! against the true residual to keep the gradient on the passive set near
//! zero. Downdates use Givens rotations, so removals cost O(k^2) instead of a
//! refactorization.
//!
//! All tolerances are relative to the problem scale `S = max_k ||a_k|| ||b||`,
//! the largest gradient magnitude possible at w = 0.

use std::collections::HashSet;

use crate::error::{Error, Result};
use crate::matrix::{dot, norm2, ColMatrix};

/// Default relative optimality tolerance.
pub const DEFAULT_TOL: f64 = 1e-10;

/// Default iteration cap for a problem with `cols` columns.
pub fn default_max_iter(cols: usize) -> usize {
    10 * cols.max(1)
}

/// Solver output. `residual_trace` holds ||b - A w|| after each completed
/// outer iteration, starting from ||b|| at w = 0; it is non-increasing up to
/// rounding.
#[derive(Debug, Clone)]
pub struct NnlsSolution {
    pub weights: Vec<f64>,
    pub residual_norm: f64,
    pub iterations: usize,
    pub residual_trace: Vec<f64>,
}

/// First-order optimality quantities for a candidate solution, computed
/// directly from the problem data (independent of the solver's internal
/// factorization).
#[derive(Debug, Clone, Copy)]
pub struct KktReport {
    /// All weights nonnegative.
    pub feasible: bool,
    /// min over zero-weight columns of g_k, where g = A^T (A w - b).
    /// Optimal solutions have this >= -tol * scale.
    pub min_zero_gradient: f64,
    /// max over positive-weight columns of |g_k|. Optimal solutions have this
    /// <= tol * scale.
    pub max_active_gradient: f64,
    /// Problem scale S the tolerances are relative to.
    pub scale: f64,
}

impl KktReport {
    pub fn satisfied(&self, tol: f64) -> bool {
        let bound = tol * self.scale;
        self.feasible && self.min_zero_gradient >= -bound && self.max_active_gradient <= bound
    }
}

/// Evaluate the KKT conditions of `weights` for min ||A w - b||, w >= 0.
pub fn kkt_report(matrix: &ColMatrix, target: &[f64], weights: &[f64]) -> KktReport {
    assert_eq!(matrix.rows(), target.len());
    assert_eq!(matrix.cols(), weights.len());
    let prediction = matrix.matvec(weights);
    let residual: Vec<f64> = prediction.iter().zip(target).map(|(p, t)| p - t).collect();
    let gradient = matrix.matvec_t(&residual);
    let mut min_zero = f64::INFINITY;
    let mut max_active = 0.0f64;
    for (k, (&g, &w)) in gradient.iter().zip(weights).enumerate() {
        if w > 0.0 {
            max_active = max_active.max(g.abs());
        } else {
            min_zero = min_zero.min(g);
        }
        let _ = k;
    }
    if min_zero == f64::INFINITY {
        min_zero = 0.0;
    }
    let max_col_norm = (0..matrix.cols()).map(|k| norm2(matrix.col(k))).fold(0.0f64, f64::max);
    KktReport {
        feasible: weights.iter().all(|&w| w >= 0.0),
        min_zero_gradient: min_zero,
        max_active_gradient: max_active,
        scale: max_col_norm * norm2(target),
    }
}

/// Incrementally maintained Cholesky factor R of the passive Gram matrix,
/// stored as columns of the upper triangle: `cols[j][i] = R[i][j]`, i <= j.
struct PassiveFactor {
    cols: Vec<Vec<f64>>,
}

impl PassiveFactor {
    fn new() -> Self {
        PassiveFactor { cols: Vec::new() }
    }

    fn len(&self) -> usize {
        self.cols.len()
    }

    /// Forward solve R^T y = c.
    fn solve_lower(&self, c: &[f64]) -> Vec<f64> {
        let k = self.len();
        let mut y = vec![0.0; k];
        for i in 0..k {
            let mut acc = c[i];
            for j in 0..i {
                acc -= self.cols[i][j] * y[j];
            }
            y[i] = acc / self.cols[i][i];
        }
        y
    }

    /// Back solve R z = y.
    fn solve_upper(&self, y: &[f64]) -> Vec<f64> {
        let k = self.len();
        let mut z = vec![0.0; k];
        for i in (0..k).rev() {
            let mut acc = y[i];
            for j in i + 1..k {
                acc -= self.cols[j][i] * z[j];
            }
            z[i] = acc / self.cols[i][i];
        }
        z
    }

    /// Try to append a column with Gram cross products `u` against the current
    /// passive columns and squared norm `norm_sq`. Fails when the new column
    /// is numerically dependent on the passive set.
    fn try_push(&mut self, u: &[f64], norm_sq: f64) -> bool {
        let r = self.solve_lower(u);
        let rho_sq = norm_sq - dot(&r, &r);
        if !(rho_sq > norm_sq * 1e-13) {
            return false;
        }
        let mut col = r;
        col.push(rho_sq.sqrt());
        self.cols.push(col);
        true
    }

    /// Remove passive column `idx`, re-triangularizing with Givens rotations.
    fn remove(&mut self, idx: usize) {
        self.cols.remove(idx);
        let k = self.len();
        for j in idx..k {
            // zero the subdiagonal element in column j (rows j and j+1)
            let a = self.cols[j][j];
            let b = self.cols[j][j + 1];
            let (c, s) = givens(a, b);
            self.cols[j][j] = c * a + s * b;
            self.cols[j].truncate(j + 1);
            for col in self.cols.iter_mut().skip(j + 1) {
                let vj = col[j];
                let vj1 = col[j + 1];
                col[j] = c * vj + s * vj1;
                col[j + 1] = -s * vj + c * vj1;
            }
        }
    }
}

fn givens(a: f64, b: f64) -> (f64, f64) {
    let r = a.hypot(b);
    if r == 0.0 {
        (1.0, 0.0)
    } else {
        (a / r, b / r)
    }
}

struct Workspace<'a> {
    matrix: &'a ColMatrix,
    target: &'a [f64],
    passive: Vec<usize>,
    factor: PassiveFactor,
    /// Cached A_P^T b aligned with `passive`.
    atb: Vec<f64>,
}

impl<'a> Workspace<'a> {
    fn prediction(&self, z: &[f64]) -> Vec<f64> {
        let mut p = vec![0.0; self.matrix.rows()];
        for (&col, &zi) in self.passive.iter().zip(z) {
            if zi != 0.0 {
                for (pi, &a) in p.iter_mut().zip(self.matrix.col(col)) {
                    *pi += a * zi;
                }
            }
        }
        p
    }

    /// Solve the unconstrained least squares on the passive set with two
    /// rounds of refinement against the true residual.
    fn ls_solve(&self) -> Vec<f64> {
        let mut z = self.factor.solve_upper(&self.factor.solve_lower(&self.atb));
        for _ in 0..2 {
            let pred = self.prediction(&z);
            let corr: Vec<f64> = self
                .passive
                .iter()
                .map(|&col| {
                    let a = self.matrix.col(col);
                    a.iter().zip(pred.iter().zip(self.target)).map(|(&ai, (&pi, &ti))| ai * (ti - pi)).sum()
                })
                .collect();
            let delta = self.factor.solve_upper(&self.factor.solve_lower(&corr));
            for (zi, di) in z.iter_mut().zip(&delta) {
                *zi += di;
            }
        }
        z
    }

    fn try_add(&mut self, col: usize, col_norm_sq: f64) -> bool {
        let a = self.matrix.col(col);
        let u: Vec<f64> = self.passive.iter().map(|&p| dot(self.matrix.col(p), a)).collect();
        if !self.factor.try_push(&u, col_norm_sq) {
            return false;
        }
        self.passive.push(col);
        self.atb.push(dot(a, self.target));
        true
    }

    fn remove(&mut self, idx: usize) {
        self.passive.remove(idx);
        self.atb.remove(idx);
        self.factor.remove(idx);
    }
}

/// Solve min ||A w - b|| subject to w >= 0.
///
/// `tol` is relative to the problem scale (see module docs); iteration counts
/// every least-squares subproblem solved. On hitting `max_iter` the error
/// carries the best feasible iterate found so far.
pub fn solve_nnls(matrix: &ColMatrix, target: &[f64], tol: f64, max_iter: usize) -> Result<NnlsSolution> {
    if matrix.rows() != target.len() {
        return Err(Error::validation(format!(
            "target: length {} does not match matrix rows {}",
            target.len(),
            matrix.rows()
        )));
    }
    if matrix.rows() == 0 || matrix.cols() == 0 {
        return Err(Error::validation("matrix: must have at least one row and one column"));
    }
    if !(tol > 0.0) {
        return Err(Error::validation(format!("tol: must be positive, got {tol}")));
    }

    let n = matrix.cols();
    let col_norms_sq: Vec<f64> = (0..n).map(|k| dot(matrix.col(k), matrix.col(k))).collect();
    let target_norm = norm2(target);
    let scale = col_norms_sq.iter().fold(0.0f64, |m, &v| m.max(v)).sqrt() * target_norm;
    let threshold = tol * scale;

    let mut x = vec![0.0f64; n];
    let mut trace = vec![target_norm];
    let mut iterations = 0usize;

    if scale == 0.0 {
        return Ok(NnlsSolution { weights: x, residual_norm: target_norm, iterations, residual_trace: trace });
    }

    let mut ws = Workspace { matrix, target, passive: Vec::new(), factor: PassiveFactor::new(), atb: Vec::new() };
    // Columns that failed to enter usefully since the last change to x.
    let mut rejected: HashSet<usize> = HashSet::new();

    'outer: loop {
        // dual value for free columns: a_k . (b - A x)
        let passive_x: Vec<f64> = ws.passive.iter().map(|&k| x[k]).collect();
        let pred = ws.prediction(&passive_x);
        let residual: Vec<f64> = target.iter().zip(&pred).map(|(t, p)| t - p).collect();

        let mut best: Option<(usize, f64)> = None;
        for k in 0..n {
            if x[k] > 0.0 || rejected.contains(&k) {
                continue;
            }
            let dual = dot(matrix.col(k), &residual);
            if dual > threshold && best.map_or(true, |(_, d)| dual > d) {
                best = Some((k, dual));
            }
        }
        let Some((entering, _)) = best else {
            break;
        };

        if !ws.try_add(entering, col_norms_sq[entering]) {
            rejected.insert(entering);
            continue;
        }

        // inner feasibility loop
        loop {
            iterations += 1;
            if iterations > max_iter {
                let weights = x.clone();
                let residual_norm = residual_norm_of(matrix, target, &weights);
                return Err(Error::IterationCap { weights, residual_norm });
            }

            let z = ws.ls_solve();
            if z.iter().all(|&v| v > 0.0) {
                for (&col, &zi) in ws.passive.iter().zip(&z) {
                    x[col] = zi;
                }
                rejected.clear();
                break;
            }

            // line search toward z, stopping at the first variable to hit zero
            let mut alpha = f64::INFINITY;
            for (i, &zi) in z.iter().enumerate() {
                if zi <= 0.0 {
                    let xi = x[ws.passive[i]];
                    let step = xi / (xi - zi);
                    if step < alpha {
                        alpha = step;
                    }
                }
            }

            if alpha == 0.0 && ws.passive.last() == Some(&entering) && z.last().is_some_and(|&v| v <= 0.0) {
                // the entering column is immediately blocked: numerical
                // degeneracy; drop it and bar it until x changes
                ws.remove(ws.passive.len() - 1);
                rejected.insert(entering);
                continue 'outer;
            }

            for (i, &zi) in z.iter().enumerate() {
                let col = ws.passive[i];
                x[col] += alpha * (zi - x[col]);
            }

            let floor = 1e-14 * x.iter().fold(0.0f64, |m, &v| m.max(v));
            let mut to_remove: Vec<usize> = (0..ws.passive.len())
                .filter(|&i| z[i] <= 0.0 && x[ws.passive[i]] <= floor)
                .collect();
            if to_remove.is_empty() {
                // guard against stalling: drop the tightest blocker
                let i = (0..ws.passive.len())
                    .filter(|&i| z[i] <= 0.0)
                    .min_by(|&a, &b| x[ws.passive[a]].total_cmp(&x[ws.passive[b]]))
                    .expect("some z <= 0 in infeasible inner step");
                to_remove.push(i);
            }
            for &i in to_remove.iter().rev() {
                x[ws.passive[i]] = 0.0;
                ws.remove(i);
            }
            rejected.clear();
        }

        trace.push(residual_norm_of(matrix, target, &x));
    }

    let residual_norm = residual_norm_of(matrix, target, &x);
    Ok(NnlsSolution { weights: x, residual_norm, iterations, residual_trace: trace })
}

fn residual_norm_of(matrix: &ColMatrix, target: &[f64], weights: &[f64]) -> f64 {
    let pred = matrix.matvec(weights);
    pred.iter().zip(target).map(|(p, t)| (p - t) * (p - t)).sum::<f64>().sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn solve(cols: &[Vec<f64>], b: &[f64]) -> NnlsSolution {
        let m = ColMatrix::from_columns(b.len(), cols).unwrap();
        solve_nnls(&m, b, DEFAULT_TOL, default_max_iter(cols.len())).unwrap()
    }

    #[test]
    fn identity_recovers_feasible_target() {
        let sol = solve(&[vec![1.0, 0.0], vec![0.0, 1.0]], &[1.0, 0.0]);
        assert!((sol.weights[0] - 1.0).abs() < 1e-12);
        assert_eq!(sol.weights[1], 0.0);
        assert!(sol.residual_norm < 1e-12);
    }

    #[test]
    fn boundary_solution_when_column_points_away() {
        // A = (-1), b = (1): optimum is w = 0 with gradient >= 0
        let sol = solve(&[vec![-1.0]], &[1.0]);
        assert_eq!(sol.weights, vec![0.0]);
        assert!((sol.residual_norm - 1.0).abs() < 1e-12);
        let m = ColMatrix::from_columns(1, &[vec![-1.0]]).unwrap();
        let report = kkt_report(&m, &[1.0], &sol.weights);
        assert!(report.satisfied(DEFAULT_TOL));
        assert!(report.min_zero_gradient >= 0.0);
    }

    #[test]
    fn zero_target_returns_zero_weights() {
        let sol = solve(&[vec![1.0, 2.0], vec![3.0, -1.0]], &[0.0, 0.0]);
        assert_eq!(sol.weights, vec![0.0, 0.0]);
        assert_eq!(sol.residual_norm, 0.0);
    }

    #[test]
    fn overdetermined_system_satisfies_kkt() {
        let cols = vec![
            vec![1.0, 0.5, -0.2, 0.0],
            vec![0.3, -1.0, 0.8, 0.1],
            vec![-0.5, 0.2, 0.4, 0.9],
        ];
        let b = vec![0.7, -0.3, 0.5, 0.2];
        let m = ColMatrix::from_columns(4, &cols).unwrap();
        let sol = solve_nnls(&m, &b, DEFAULT_TOL, 100).unwrap();
        let report = kkt_report(&m, &b, &sol.weights);
        assert!(report.satisfied(1e-8), "{report:?}");
    }

    #[test]
    fn trace_is_monotone_nonincreasing() {
        let cols = vec![
            vec![0.9, 0.1, -0.3, 0.2, 0.5],
            vec![-0.2, 0.7, 0.4, -0.1, 0.3],
            vec![0.1, -0.5, 0.8, 0.6, -0.4],
            vec![0.4, 0.4, -0.6, 0.3, 0.2],
        ];
        let b = vec![1.0, 0.5, 0.25, -0.3, 0.8];
        let m = ColMatrix::from_columns(5, &cols).unwrap();
        let sol = solve_nnls(&m, &b, DEFAULT_TOL, 100).unwrap();
        for pair in sol.residual_trace.windows(2) {
            assert!(pair[1] <= pair[0] + 1e-12 * sol.residual_trace[0]);
        }
        assert!((sol.residual_trace.last().unwrap() - sol.residual_norm).abs() < 1e-9);
    }

    #[test]
    fn dimension_mismatch_is_validation_error() {
        let m = ColMatrix::from_columns(2, &[vec![1.0, 0.0]]).unwrap();
        assert!(matches!(solve_nnls(&m, &[1.0, 2.0, 3.0], 1e-10, 10), Err(Error::Validation(_))));
    }

    #[test]
    fn iteration_cap_carries_feasible_iterate() {
        let cols = vec![
            vec![1.0, 0.2, 0.1],
            vec![0.2, 1.0, 0.3],
            vec![0.1, 0.3, 1.0],
        ];
        let m = ColMatrix::from_columns(3, &cols).unwrap();
        match solve_nnls(&m, &[1.0, 1.0, 1.0], 1e-12, 1) {
            Err(Error::IterationCap { weights, residual_norm }) => {
                assert!(weights.iter().all(|&w| w >= 0.0));
                assert!(residual_norm >= 0.0);
            }
            other => panic!("expected iteration cap, got {other:?}"),
        }
    }

    #[test]
    fn duplicate_columns_are_handled() {
        let col = vec![0.6, -0.8, 0.1];
        let cols = vec![col.clone(), col.clone(), col];
        let m = ColMatrix::from_columns(3, &cols).unwrap();
        let b = vec![0.6, -0.8, 0.1];
        let sol = solve_nnls(&m, &b, DEFAULT_TOL, 30).unwrap();
        assert!(sol.residual_norm < 1e-10);
        assert!(kkt_report(&m, &b, &sol.weights).satisfied(1e-8));
    }

    #[test]
    fn scale_equivariance() {
        let cols = vec![
            vec![0.9, 0.1, -0.3, 0.2],
            vec![-0.2, 0.7, 0.4, -0.1],
            vec![0.1, -0.5, 0.8, 0.6],
        ];
        let b = vec![1.0, 0.5, 0.25, -0.3];
        let m = ColMatrix::from_columns(4, &cols).unwrap();
        let base = solve_nnls(&m, &b, DEFAULT_TOL, 100).unwrap();
        let c = 3.5;
        let scaled_b: Vec<f64> = b.iter().map(|v| v * c).collect();
        let scaled = solve_nnls(&m, &scaled_b, DEFAULT_TOL, 100).unwrap();
        for (w, sw) in base.weights.iter().zip(&scaled.weights) {
            assert!((sw - c * w).abs() <= 1e-12 * (1.0 + sw.abs()));
        }
        assert!((scaled.residual_norm - c * base.residual_norm).abs() < 1e-12);
    }
}
