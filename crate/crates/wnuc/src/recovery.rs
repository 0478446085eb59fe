//! Gaussian measurements and the splitting solver for
//! min ‖h_w(Z)‖_* subject to A vec(Z) = y.
//!
//! vec is column stacking throughout.

use nalgebra::DVector;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::geometry::{make_prior_instance, SubspacePrior};
use crate::numerics::{gaussian_matrix, pseudo_inverse, svd, Matrix};
use crate::weighting::{HOperator, WeightVector};

#[derive(Debug, Clone)]
pub struct MeasurementEnsemble {
    pub m: usize,
    pub n: usize,
    /// m × n², row k is vec of the k-th sensing matrix.
    pub a: Matrix,
    pub y: DVector<f64>,
}

fn vec_of(x: &Matrix) -> DVector<f64> {
    DVector::from_column_slice(x.as_slice())
}

fn unvec(v: &DVector<f64>, n: usize) -> Matrix {
    Matrix::from_column_slice(n, n, v.as_slice())
}

/// m Gaussian measurements of X; rows are filled in order so the first m
/// rows do not depend on m.
pub fn measure(x: &Matrix, m: usize, seed: u64) -> Result<MeasurementEnsemble> {
    let n = x.nrows();
    let a = gaussian_matrix(m, n * n, seed);
    measure_with(x, a)
}

pub fn measure_with(x: &Matrix, a: Matrix) -> Result<MeasurementEnsemble> {
    let n = x.nrows();
    if x.ncols() != n {
        return Err(Error::InvalidInstance("only square matrices are supported".into()));
    }
    if a.nrows() == 0 || a.ncols() != n * n {
        return Err(Error::Config(format!("sensing matrix must be m × {} with m ≥ 1, got {:?}", n * n, a.shape())));
    }
    let y = &a * vec_of(x);
    Ok(MeasurementEnsemble { m: a.nrows(), n, a, y })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverParams {
    pub rho: f64,
    pub max_iter: usize,
    pub primal_tol: f64,
    pub dual_tol: f64,
    pub success_threshold: f64,
}

impl Default for SolverParams {
    fn default() -> Self {
        Self { rho: 1.0, max_iter: 2000, primal_tol: 1e-7, dual_tol: 1e-7, success_threshold: 1e-2 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Diagnostics {
    pub iterations: usize,
    pub converged: bool,
    pub primal_residual: f64,
    pub dual_residual: f64,
    /// ‖W_k‖_* of the feasible iterate, in the caller's scale.
    pub objective: Vec<f64>,
    pub feasibility: f64,
}

fn soft_threshold(z: &Matrix, tau: f64) -> Result<(Matrix, f64)> {
    let t = svd(z)?;
    let mut left = t.left;
    let mut nuc = 0.0;
    for (j, s) in t.singulars.iter().enumerate() {
        let v = (s - tau).max(0.0);
        nuc += v;
        left.column_mut(j).scale_mut(v);
    }
    Ok((left * t.right.transpose(), nuc))
}

fn nuclear_norm(z: &Matrix) -> Result<f64> {
    Ok(crate::numerics::singular_values(z)?.iter().sum())
}

/// min ‖W‖_* s.t. Ã vec(W) = y by alternating singular-value thresholding
/// with an exact affine projection.
fn solve_transformed(at: &Matrix, y: &DVector<f64>, n: usize, params: &SolverParams) -> Result<(Matrix, Diagnostics)> {
    if !(params.rho > 0.0 && params.primal_tol > 0.0 && params.dual_tol > 0.0) || params.max_iter == 0 {
        return Err(Error::Config("solver parameters must be positive".into()));
    }
    let pinv = pseudo_inverse(at, 1e-12)?;
    let x0 = &pinv * y;
    let w0 = unvec(&x0, n);
    // the problem is positively homogeneous in y, so solve at unit scale
    let scale = svd(&w0)?.singulars.first().copied().unwrap_or(0.0);
    if scale == 0.0 {
        let diag = Diagnostics {
            iterations: 0,
            converged: true,
            primal_residual: 0.0,
            dual_residual: 0.0,
            objective: vec![0.0],
            feasibility: 0.0,
        };
        return Ok((w0, diag));
    }
    let yb = y / scale;
    let project = |v: &DVector<f64>| -> DVector<f64> { v - &pinv * (at * v - &yb) };

    let mut rho = params.rho;
    let mut v = &x0 / scale;
    let mut u = DVector::zeros(n * n);
    let mut objective = Vec::new();
    let (mut pr, mut du) = (f64::INFINITY, f64::INFINITY);
    let mut converged = false;
    let mut iterations = 0;
    for k in 0..params.max_iter {
        iterations = k + 1;
        let (w, _) = soft_threshold(&unvec(&(&v - &u), n), 1.0 / rho)?;
        let w = vec_of(&w);
        let v_old = v;
        v = project(&(&w + &u));
        u += &w - &v;
        pr = (&w - &v).norm();
        du = rho * (&v - &v_old).norm();
        objective.push(nuclear_norm(&unvec(&v, n))? * scale);
        let eps_pri = params.primal_tol * w.norm().max(v.norm()).max(1.0);
        let eps_dual = params.dual_tol * (rho * u.norm()).max(1.0);
        if pr <= eps_pri && du <= eps_dual {
            converged = true;
            break;
        }
        if k % 10 == 9 {
            if pr > 10.0 * du {
                rho *= 2.0;
                u /= 2.0;
            } else if du > 10.0 * pr {
                rho /= 2.0;
                u *= 2.0;
            }
        }
    }
    let w = unvec(&(v * scale), n);
    let feas = (at * vec_of(&w) - y).norm() / y.norm().max(f64::MIN_POSITIVE);
    let diag =
        Diagnostics { iterations, converged, primal_residual: pr, dual_residual: du, objective, feasibility: feas };
    Ok((w, diag))
}

/// Solves the weighted program; X̂ = h_w⁻¹(W).
pub fn solve_weighted_nuclear(
    e: &MeasurementEnsemble,
    w: &WeightVector,
    u_tilde: &Matrix,
    v_tilde: &Matrix,
    params: &SolverParams,
) -> Result<(Matrix, Diagnostics)> {
    let hinv = HOperator::inverse(w, u_tilde, v_tilde);
    let at = &e.a * hinv.matrix();
    let (wm, diag) = solve_transformed(&at, &e.y, e.n, params)?;
    Ok((hinv.apply(&wm), diag))
}

pub fn solve_nuclear(e: &MeasurementEnsemble, params: &SolverParams) -> Result<(Matrix, Diagnostics)> {
    solve_transformed(&e.a, &e.y, e.n, params)
}

pub fn relative_error(x: &Matrix, x_hat: &Matrix) -> Result<f64> {
    if x.shape() != x_hat.shape() {
        return Err(Error::InvalidInstance("shape mismatch".into()));
    }
    let nx = x.norm();
    if nx == 0.0 {
        return Err(Error::Undefined("relative error of a zero matrix".into()));
    }
    Ok((x - x_hat).norm() / nx)
}

pub fn is_success(x: &Matrix, x_hat: &Matrix, threshold: f64) -> Result<bool> {
    Ok(relative_error(x, x_hat)? <= threshold)
}

/// A recovery program compared in phase experiments.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Program {
    Nuclear,
    Weighted(WeightVector),
}

#[derive(Debug, Clone, PartialEq)]
pub struct PhaseCell {
    pub m: usize,
    pub successes: usize,
    pub trials: usize,
    pub failures_numeric: usize,
    pub mean_rel_err: f64,
}

impl PhaseCell {
    pub fn rate(&self) -> f64 {
        self.successes as f64 / self.trials as f64
    }
}

/// Success counts over `trials` seeded instances for each m. Trial `k`
/// draws its instance and sensing rows from seed + k, so all programs and
/// all m see the same data.
pub fn phase_curve(
    prior: &SubspacePrior,
    programs: &[Program],
    m_grid: &[usize],
    trials: usize,
    seed: u64,
    params: &SolverParams,
) -> Result<Vec<Vec<PhaseCell>>> {
    let n = prior.n;
    if trials == 0 {
        return Err(Error::Config("trials must be ≥ 1".into()));
    }
    if m_grid.is_empty() || m_grid.windows(2).any(|w| w[0] >= w[1]) || m_grid[0] == 0 || *m_grid.last().unwrap() > n * n
    {
        return Err(Error::Config(format!("m grid must be strictly increasing within [1, {}]", n * n)));
    }
    // (program, m) → per-trial (success, rel_err or None on numeric failure)
    let per_trial: Vec<Result<Vec<Vec<Option<f64>>>>> = (0..trials)
        .into_par_iter()
        .map(|k| {
            let s = seed.wrapping_add(k as u64);
            let inst = make_prior_instance(prior, s)?;
            let x = inst.truth.matrix();
            let mmax = *m_grid.last().unwrap();
            let full = gaussian_matrix(mmax, n * n, s);
            let mut out = vec![Vec::with_capacity(m_grid.len()); programs.len()];
            for &m in m_grid {
                let e = measure_with(&x, full.rows(0, m).into_owned())?;
                for (pi, prog) in programs.iter().enumerate() {
                    let res = match prog {
                        Program::Nuclear => solve_nuclear(&e, params),
                        Program::Weighted(w) => solve_weighted_nuclear(&e, w, &inst.u_tilde, &inst.v_tilde, params),
                    };
                    out[pi].push(match res {
                        Ok((xh, _)) => Some(relative_error(&x, &xh)?),
                        Err(Error::NumericFailure(_)) => None,
                        Err(err) => return Err(err),
                    });
                }
            }
            Ok(out)
        })
        .collect();
    let per_trial: Vec<_> = per_trial.into_iter().collect::<Result<_>>()?;
    let mut table = Vec::with_capacity(programs.len());
    for pi in 0..programs.len() {
        let mut row = Vec::with_capacity(m_grid.len());
        for (mi, &m) in m_grid.iter().enumerate() {
            let mut successes = 0;
            let mut failures_numeric = 0;
            let mut err_sum = 0.0;
            let mut err_n = 0usize;
            for t in &per_trial {
                match t[pi][mi] {
                    Some(e) => {
                        if e <= params.success_threshold {
                            successes += 1;
                        }
                        err_sum += e;
                        err_n += 1;
                    }
                    None => failures_numeric += 1,
                }
            }
            let mean_rel_err = if err_n > 0 { err_sum / err_n as f64 } else { f64::NAN };
            row.push(PhaseCell { m, successes, trials, failures_numeric, mean_rel_err });
        }
        table.push(row);
    }
    Ok(table)
}

/// Smallest m at which the success rate first reaches one half, linearly
/// interpolated between grid points.
pub fn half_crossing(cells: &[PhaseCell]) -> Option<f64> {
    let mut prev: Option<&PhaseCell> = None;
    for c in cells {
        if c.rate() >= 0.5 {
            return Some(match prev {
                Some(p) if p.rate() < 0.5 => {
                    let (r0, r1) = (p.rate(), c.rate());
                    p.m as f64 + (0.5 - r0) / (r1 - r0) * (c.m - p.m) as f64
                }
                _ => c.m as f64,
            });
        }
        prev = Some(c);
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn relative_error_examples() {
        let x = Matrix::from_row_slice(2, 2, &[1.0, 2.0, 3.0, 4.0]);
        assert_eq!(relative_error(&x, &x).unwrap(), 0.0);
        assert!((relative_error(&x, &Matrix::zeros(2, 2)).unwrap() - 1.0).abs() < 1e-15);
        let e = relative_error(&x, &(&x * 1.005)).unwrap();
        assert!((e - 0.005).abs() < 1e-12);
        assert!(is_success(&x, &(&x * 1.005), 1e-2).unwrap());
        assert!(matches!(relative_error(&Matrix::zeros(2, 2), &x), Err(Error::Undefined(_))));
    }

    #[test]
    fn half_crossing_interpolates() {
        let cells: Vec<PhaseCell> = [(10, 0), (20, 2), (30, 8)]
            .iter()
            .map(|&(m, s)| PhaseCell { m, successes: s, trials: 10, failures_numeric: 0, mean_rel_err: 0.0 })
            .collect();
        let c = half_crossing(&cells).unwrap();
        assert!((c - 25.0).abs() < 1e-12);
    }

    #[test]
    fn rejects_bad_grid() {
        let p = SubspacePrior::new(4, 1, 1, vec![10.0], vec![10.0]).unwrap();
        let prm = SolverParams::default();
        assert!(phase_curve(&p, &[Program::Nuclear], &[5, 5], 1, 0, &prm).is_err());
        assert!(phase_curve(&p, &[Program::Nuclear], &[17], 1, 0, &prm).is_err());
    }
}
