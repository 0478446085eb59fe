//! Closed-form sample-complexity thresholds, transition widths and a
//! Monte-Carlo statistical-dimension estimator.
//!
//! Blocks are indexed 1..4 by the column groups of the adapted bases:
//! 1 = signal (r), 2 = signal-adjacent (r), 3 = prior excess (k = r' − r),
//! 4 = remainder (q = n − r − r').

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::geometry::{build_basis_pair, BasisPair, PriorInstance, SubspacePrior};
use crate::numerics::{gaussian_matrix, mean_and_stderr, phi, singular_values, svd, Matrix, MpParams};
use crate::optweights::gss;
use crate::weighting::{side_factors, WeightVector};

/// Scaled weights v = t·w.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScaledWeights {
    pub v1: f64,
    pub v2: f64,
    pub v3: f64,
}

impl ScaledWeights {
    pub fn new(v1: f64, v2: f64, v3: f64) -> Result<Self> {
        if !(v1 >= 0.0 && v2 >= 0.0 && v3 >= 0.0) || ![v1, v2, v3].iter().all(|v| v.is_finite()) {
            return Err(Error::InvalidWeights(format!(
                "scaled weights must be finite and non-negative, got ({v1}, {v2}, {v3})"
            )));
        }
        if v1 == 0.0 && v2 * v3 > 0.0 {
            return Err(Error::InvalidWeights("v1 = 0 leaves v4 = v2·v3/v1 undefined".into()));
        }
        Ok(Self { v1, v2, v3 })
    }

    pub fn along(w: &WeightVector, t: f64) -> Self {
        Self { v1: t * w.w1, v2: t * w.w2, v3: t * w.w3 }
    }

    pub fn v4(&self) -> f64 {
        if self.v1 == 0.0 {
            0.0
        } else {
            self.v2 * self.v3 / self.v1
        }
    }

    pub fn as_array(&self) -> [f64; 3] {
        [self.v1, self.v2, self.v3]
    }
}

/// How index i of the diagonal factors is matched across E22, C_L⁻¹, C_R⁻¹.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Pairing {
    /// Keep the principal-angle index (no re-sorting).
    #[default]
    AngleIndex,
    /// Sort each diagonal non-increasingly before pairing.
    Sorted,
}

/// Gaussian mass charged to the rows and columns of the support.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum TangentBlocks {
    /// The constant 3r², which counts the support blocks as r × r.
    #[default]
    SupportOnly,
    /// Adds the r × (n − 2r) blocks in the support rows and columns,
    /// 2r(n − 2r) more, so that Ψ at t = 0 equals n².
    Complete,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct PsiOptions {
    pub pairing: Pairing,
    pub tangent: TangentBlocks,
}

fn tangent_mass(n: usize, r: usize, tangent: TangentBlocks) -> f64 {
    let base = 3.0 * (r * r) as f64;
    match tangent {
        TangentBlocks::SupportOnly => base,
        TangentBlocks::Complete => base + 2.0 * (r * (n - 2 * r)) as f64,
    }
}

/// Block ratios α_ij = (size_i · size_j)/(n − r)².
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Alphas {
    pub a22: f64,
    pub a23: f64,
    pub a24: f64,
    pub a33: f64,
    pub a34: f64,
    pub a44: f64,
}

impl Alphas {
    pub fn new(n: usize, r: usize, r_prime: usize) -> Self {
        let d = ((n - r) * (n - r)) as f64;
        let (k, q) = (r_prime - r, n - r - r_prime);
        let a = |x: usize, y: usize| (x * y) as f64 / d;
        Self { a22: a(r, r), a23: a(r, k), a24: a(r, q), a33: a(k, k), a34: a(k, q), a44: a(q, q) }
    }

    pub fn total(&self) -> f64 {
        self.a22 + 2.0 * self.a23 + 2.0 * self.a24 + self.a33 + 2.0 * self.a34 + self.a44
    }
}

/// Aspect ratios (s1, s2, s3) of the 23, 24 and 34 blocks; 0 for empty blocks.
pub fn s_ratios(n: usize, r: usize, r_prime: usize) -> [f64; 3] {
    let (k, q) = (r_prime - r, n - r - r_prime);
    let ratio = |a: usize, b: usize| {
        if a.min(b) == 0 {
            0.0
        } else {
            a.min(b) as f64 / a.max(b) as f64
        }
    };
    [ratio(r, k), ratio(r, q), ratio(k, q)]
}

fn check_dims(n: usize, r: usize, r_prime: usize) -> Result<()> {
    if r > r_prime || r + r_prime > n || n == r {
        return Err(Error::InvalidInstance(format!("need r ≤ r', r + r' ≤ n and r < n, got n={n} r={r} r'={r_prime}")));
    }
    Ok(())
}

/// m1 ∨ m2 · Σ_{i < m1 ∧ m2} φ(coef_i / √(m1 ∨ m2), s).
fn block<F: Fn(usize) -> f64>(m1: usize, m2: usize, coef: F) -> Result<f64> {
    let (lo, hi) = (m1.min(m2), m1.max(m2));
    if lo == 0 {
        return Ok(0.0);
    }
    let p = MpParams::for_block(m1, m2)?;
    let root = (hi as f64).sqrt();
    let mut acc = 0.0;
    for i in 0..lo {
        acc += phi(coef(i) / root, &p)?;
    }
    Ok(hi as f64 * acc)
}

/// Ψ for the unweighted program, unnormalised (scale n²).
pub fn psi_nuclear(t: f64, n: usize, r: usize, r_prime: usize, opts: PsiOptions) -> Result<f64> {
    check_dims(n, r, r_prime)?;
    if !(t >= 0.0) {
        return Err(Error::Config(format!("t must be non-negative, got {t}")));
    }
    let a = Alphas::new(n, r, r_prime);
    let (k, q) = (r_prime - r, n - r - r_prime);
    let mut total = tangent_mass(n, r, opts.tangent) + t * t * r as f64;
    // each off-diagonal pair appears twice (ij and ji)
    total += block(r, r, |_| t * a.a22)?;
    total += 2.0 * block(r, k, |_| t * a.a23)?;
    total += 2.0 * block(r, q, |_| t * a.a24)?;
    total += 2.0 * block(k, q, |_| t * a.a34)?;
    total += block(k, k, |_| t * a.a33)?;
    total += block(q, q, |_| t * a.a44)?;
    Ok(total)
}

fn ordered(values: Vec<f64>, pairing: Pairing) -> Vec<f64> {
    let mut v = values;
    if pairing == Pairing::Sorted {
        v.sort_by(|a, b| b.total_cmp(a));
    }
    v
}

/// Ψ for the weighted program at scaled weights v, unnormalised.
pub fn psi_weighted(v: &ScaledWeights, p: &SubspacePrior, opts: PsiOptions) -> Result<f64> {
    let v = ScaledWeights::new(v.v1, v.v2, v.v3)?;
    let (n, r, rp) = (p.n, p.r, p.r_prime);
    check_dims(n, r, rp)?;
    let (k, q) = (rp - r, n - r - rp);
    let a = Alphas::new(n, r, rp);
    if v.v1 == 0.0 && v.v2 == 0.0 && v.v3 == 0.0 {
        return psi_nuclear(0.0, n, r, rp, opts);
    }
    let (v1, v2, v3, v4) = (v.v1, v.v2, v.v3, v.v4());
    let trig: Vec<(f64, f64, f64, f64)> = p
        .theta_u
        .iter()
        .zip(&p.theta_v)
        .map(|(tu, tv)| {
            let (su, cu) = tu.to_radians().sin_cos();
            let (sv, cv) = tv.to_radians().sin_cos();
            (su, cu, sv, cv)
        })
        .collect();

    let mut total = tangent_mass(n, r, opts.tangent);
    let mut s_diag = Vec::with_capacity(r);
    for &(su, cu, sv, cv) in &trig {
        let s = v1 * v1 * cu * cu * cv * cv
            + v2 * v2 * cu * cu * sv * sv
            + v3 * v3 * su * su * cv * cv
            + v4 * v4 * su * su * sv * sv;
        s_diag.push(s);
        total += s;
    }

    // E12/E21-type correction sums
    let pre_r = (v4 / v3 - 1.0).powi(2) * (v1 + v2).powi(2);
    let pre_l = (v3 / v1 - 1.0).powi(2) * (v1 + v3).powi(2);
    for &(su, cu, sv, cv) in &trig {
        let lu = v1 * v1 * cu * cu + v3 * v3 * su * su;
        let lv = v1 * v1 * cv * cv + v2 * v2 * sv * sv;
        if pre_r > 0.0 {
            total += pre_r * lu / lv * sv * sv * cv * cv;
        }
        if pre_l > 0.0 {
            total += pre_l * lv / lu * su * su * cu * cu;
        }
    }

    let c_l: Vec<f64> = trig.iter().map(|&(su, cu, _, _)| (v1 * v1 * cu * cu + v3 * v3 * su * su).sqrt()).collect();
    let c_r: Vec<f64> = trig.iter().map(|&(_, _, sv, cv)| (v3 * v3 * cv * cv + v4 * v4 * sv * sv).sqrt()).collect();
    let pre22 = v4 * v4 - v3 * v3 - v2 * v2 + v1 * v1;
    let e22: Vec<f64> =
        trig.iter().zip(&s_diag).map(|(&(su, cu, sv, cv), s)| (pre22 / s.sqrt() * su * cu * sv * cv).abs()).collect();
    let inv_cl = ordered(c_l.iter().map(|c| 1.0 / c).collect(), opts.pairing);
    let inv_cr = ordered(c_r.iter().map(|c| 1.0 / c).collect(), opts.pairing);
    let e22 = ordered(e22, opts.pairing);

    let p1 = MpParams::new(1.0)?;
    let root_r = (r as f64).sqrt();
    for i in 0..r {
        let arg = (e22[i] + v1 * v3 * v4 * inv_cl[i] * inv_cr[i] * a.a22) / root_r;
        total += r as f64 * phi(arg, &p1)?;
    }
    total += block(r, k, |i| v1 * v3 * inv_cl[i] * a.a23)?;
    total += block(r, q, |i| v1 * v4 * inv_cl[i] * a.a24)?;
    total += block(r, k, |i| v2 * v3 * inv_cr[i] * a.a23)?;
    total += block(r, q, |i| v3 * v4 * inv_cr[i] * a.a24)?;
    total += block(k, k, |_| v1 * a.a33)?;
    total += block(k, q, |_| v2 * a.a34)?;
    total += block(k, q, |_| v3 * a.a34)?;
    total += block(q, q, |_| v4 * a.a44)?;
    Ok(total)
}

/// Upper end of the bracket that contains the minimiser of J:
/// n(1 + (n² + 1)^{1/4} / √(√(n² + 1) − n)).
pub fn coordinate_bracket(n: usize) -> f64 {
    let nf = n as f64;
    let root = (nf * nf + 1.0).sqrt();
    // √(n²+1) − n computed without cancellation
    let gap = 1.0 / (root + nf);
    nf * (1.0 + root.sqrt() / gap.sqrt())
}

/// Outcome of a threshold computation; `m_hat` is normalised by n².
#[derive(Debug, Clone, PartialEq)]
pub struct ThresholdReport {
    pub m_hat: f64,
    pub t_star: f64,
    pub v_star: Option<[f64; 3]>,
    /// max(0, m̂ − 2/(n√(nr)·c)).
    pub error_lower: f64,
    pub c: f64,
    pub alpha: Alphas,
    pub s_ratios: [f64; 3],
}

/// Band half-width 2/(n√(nr)·c).
pub fn band_width(n: usize, r: usize, c: f64) -> f64 {
    if r == 0 || c <= 0.0 {
        return f64::INFINITY;
    }
    2.0 / (n as f64 * ((n * r) as f64).sqrt() * c)
}

/// c = min{sin θu(1), cos θu(r)} · min{sin θv(1), cos θv(r)}.
pub fn angle_constant(p: &SubspacePrior) -> f64 {
    let side = |t: &[f64]| {
        let first = t[0].to_radians().sin();
        let last = t[t.len() - 1].to_radians().cos();
        first.min(last)
    };
    side(&p.theta_u) * side(&p.theta_v)
}

const T_TOL_REL: f64 = 1e-9;
const GSS_ITERS: usize = 200;

pub fn nuclear_threshold(n: usize, r: usize, r_prime: usize, opts: PsiOptions) -> Result<ThresholdReport> {
    check_dims(n, r, r_prime)?;
    let hi = 3.0 * (n as f64).sqrt();
    let mut err = None;
    let mut f = |t: f64| match psi_nuclear(t, n, r, r_prime, opts) {
        Ok(v) => v,
        Err(e) => {
            err.get_or_insert(e);
            f64::INFINITY
        }
    };
    let t_star = gss(&mut f, 0.0, hi, T_TOL_REL * hi, GSS_ITERS);
    let val = f(t_star);
    if let Some(e) = err {
        return Err(e);
    }
    let m_hat = val / (n * n) as f64;
    Ok(ThresholdReport {
        m_hat,
        t_star,
        v_star: None,
        error_lower: (m_hat - band_width(n, r, 1.0)).max(0.0),
        c: 1.0,
        alpha: Alphas::new(n, r, r_prime),
        s_ratios: s_ratios(n, r, r_prime),
    })
}

pub fn weighted_threshold(w: &WeightVector, p: &SubspacePrior, opts: PsiOptions) -> Result<ThresholdReport> {
    let n = p.n;
    let hi = coordinate_bracket(n) / w.w1.max(w.w2).max(w.w3);
    let mut err = None;
    let mut f = |t: f64| match psi_weighted(&ScaledWeights::along(w, t), p, opts) {
        Ok(v) => v,
        Err(e) => {
            err.get_or_insert(e);
            f64::INFINITY
        }
    };
    let t_star = gss(&mut f, 0.0, hi, T_TOL_REL * hi, GSS_ITERS);
    let val = f(t_star);
    if let Some(e) = err {
        return Err(e);
    }
    let m_hat = val / (n * n) as f64;
    let c = angle_constant(p);
    let v = ScaledWeights::along(w, t_star);
    Ok(ThresholdReport {
        m_hat,
        t_star,
        v_star: Some(v.as_array()),
        error_lower: (m_hat - band_width(n, p.r, c)).max(0.0),
        c,
        alpha: Alphas::new(n, p.r, p.r_prime),
        s_ratios: s_ratios(n, p.r, p.r_prime),
    })
}

/// Measurement counts (success, failure) from δ·N ± √(8 log(4/η) N),
/// rounded outward.
pub fn transition_bounds(delta_normalized: f64, eta: f64, ambient: usize) -> Result<(usize, usize)> {
    if !(eta > 0.0 && eta < 1.0) {
        return Err(Error::Config(format!("η must lie in (0,1), got {eta}")));
    }
    let nn = ambient as f64;
    let centre = delta_normalized * nn;
    let width = (8.0 * (4.0 / eta).ln() * nn).sqrt();
    let succ = (centre + width).ceil().max(0.0) as usize;
    let fail = (centre - width).floor().max(0.0) as usize;
    Ok((succ, fail))
}

/// Which descent cone to sample.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum McProgram {
    Nuclear,
    Weighted(WeightVector),
}

#[derive(Debug, Clone, PartialEq)]
pub struct McEstimate {
    /// Mean of inf_t dist² / n² over kept draws.
    pub mean: f64,
    /// `None` when fewer than two draws were kept.
    pub std_error: Option<f64>,
    pub kept: usize,
    pub discarded: usize,
}

/// Inner solver settings for the weighted distance.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McSolverParams {
    pub rel_tol: f64,
    pub max_iter: usize,
    /// GSS tolerance on t, relative to the bracket length.
    pub t_rel_tol: f64,
}

impl Default for McSolverParams {
    fn default() -> Self {
        Self { rel_tol: 1e-8, max_iter: 5000, t_rel_tol: 1e-5 }
    }
}

/// Per-draw squared distance from G to the scaled nuclear subdifferential,
/// minimised over t.
fn nuclear_draw(g: &Matrix, pu: &Matrix, pv: &Matrix, sgn: &Matrix, r: usize) -> Result<f64> {
    let n = g.nrows();
    let id = Matrix::identity(n, n);
    let perp = (&id - pu) * g * (&id - pv);
    let pt = g - &perp;
    let sig = singular_values(&perp)?;
    let inner = pt.dot(sgn);
    let base = pt.norm_squared();
    let f = |t: f64| {
        let tail: f64 = sig.iter().map(|s| crate::numerics::shrinkage_sq(*s, t)).sum();
        base - 2.0 * t * inner + t * t * r as f64 + tail
    };
    let hi = sig.first().copied().unwrap_or(0.0).max(inner / r as f64).max(0.0) + 1.0;
    let t = gss(f, 0.0, hi, 1e-10 * hi, GSS_ITERS);
    Ok(f(t).min(f(0.0)))
}

/// Weighted distance in the adapted coordinates. With Ĝ = B_Lᵀ G B_R,
/// h_v(Y) = (1/v3) B_L Lᵀ Ỹ R B_Rᵀ where Ỹ = diag(I_r, Z) and ‖Z‖ ≤ 1
/// parametrises the subdifferential, so only the trailing block needs an
/// iterative solve: min ‖H − D_L Z D_R‖² over the spectral ball.
struct WeightedDraw<'a> {
    g_hat: &'a Matrix,
    p: &'a SubspacePrior,
    widths: [usize; 4],
    params: McSolverParams,
}

impl WeightedDraw<'_> {
    /// Returns (J_G(v), converged).
    fn value(&self, v: &ScaledWeights, warm: &mut Matrix) -> Result<(f64, bool)> {
        let (v1, v3, v4) = (v.v1, v.v3, v.v4());
        let (_, l, _, _) = side_factors(v1, v3, &self.p.theta_u, self.widths);
        let (_, rr, _, _) = side_factors(v3, v4, &self.p.theta_v, self.widths);
        let n = self.g_hat.nrows();
        let r = self.p.r;
        // fixed part (1/v3) L[:r,:]ᵀ R[:r,:]
        let e = l.rows(0, r).transpose() * rr.rows(0, r) / v3;
        let resid = self.g_hat - e;
        let h = resid.view((r, r), (n - r, n - r)).into_owned();
        let fixed = resid.norm_squared() - h.norm_squared();
        let scale = v3.sqrt();
        let dl: Vec<f64> = (r..n).map(|i| l[(i, i)] / scale).collect();
        let dr: Vec<f64> = (r..n).map(|i| rr[(i, i)] / scale).collect();
        let (obj, ok) = spectral_ball_ls(&h, &dl, &dr, warm, self.params)?;
        Ok((fixed + obj, ok))
    }
}

fn scale_rows_cols(z: &Matrix, dl: &[f64], dr: &[f64]) -> Matrix {
    Matrix::from_fn(z.nrows(), z.ncols(), |i, j| dl[i] * z[(i, j)] * dr[j])
}

fn clip_spectral(z: &Matrix) -> Result<Matrix> {
    let t = svd(z)?;
    if t.singulars.first().is_none_or(|s| *s <= 1.0) {
        return Ok(z.clone());
    }
    let mut left = t.left;
    for (j, s) in t.singulars.iter().enumerate() {
        left.column_mut(j).scale_mut(s.min(1.0));
    }
    Ok(left * t.right.transpose())
}

/// Accelerated projected gradient for min ‖H − D_L Z D_R‖²_F, ‖Z‖₂ ≤ 1.
/// Returns (objective, converged); `z` holds the warm start and the result.
fn spectral_ball_ls(h: &Matrix, dl: &[f64], dr: &[f64], z: &mut Matrix, params: McSolverParams) -> Result<(f64, bool)> {
    if h.is_empty() {
        return Ok((0.0, true));
    }
    let lmax = dl.iter().fold(0.0f64, |a, b| a.max(*b)) * dr.iter().fold(0.0f64, |a, b| a.max(*b));
    let lip = lmax * lmax;
    if lip == 0.0 {
        return Ok((h.norm_squared(), true));
    }
    let obj = |z: &Matrix| (h - scale_rows_cols(z, dl, dr)).norm_squared();
    // an interior optimum drives the objective to 0, where a purely relative
    // test never fires
    let floor = 1e-6 * h.norm_squared();
    let mut x = clip_spectral(z)?;
    let mut y = x.clone();
    let mut tk = 1.0f64;
    let mut prev = obj(&x);
    let mut restarted = false;
    for _ in 0..params.max_iter {
        let resid = h - scale_rows_cols(&y, dl, dr);
        let grad = scale_rows_cols(&resid, dl, dr);
        let x_new = clip_spectral(&(&y + grad / lip))?;
        let cur = obj(&x_new);
        if cur > prev {
            // a plain projected step that still fails to descend means x is
            // optimal up to rounding
            if restarted {
                *z = x;
                return Ok((prev, true));
            }
            tk = 1.0;
            y = x.clone();
            restarted = true;
            continue;
        }
        restarted = false;
        let t_next = 0.5 * (1.0 + (1.0 + 4.0 * tk * tk).sqrt());
        y = &x_new + (&x_new - &x) * ((tk - 1.0) / t_next);
        tk = t_next;
        let done = (prev - cur).abs() <= params.rel_tol * cur.max(floor).max(f64::MIN_POSITIVE);
        x = x_new;
        prev = cur;
        if done {
            *z = x;
            return Ok((cur, true));
        }
    }
    *z = x;
    Ok((prev, false))
}

/// Monte-Carlo estimate of δ(D)/n² with draw `k` seeded by `seed + k`.
pub fn mc_statistical_dimension(
    program: McProgram,
    inst: &PriorInstance,
    trials: usize,
    seed: u64,
    params: McSolverParams,
) -> Result<McEstimate> {
    if trials == 0 {
        return Err(Error::Config("trials must be ≥ 1".into()));
    }
    let p = &inst.prior;
    let n = p.n;
    let nn = (n * n) as f64;
    let results: Vec<Result<Option<f64>>> = match program {
        McProgram::Nuclear => {
            let pu = &inst.truth.u * inst.truth.u.transpose();
            let pv = &inst.truth.v * inst.truth.v.transpose();
            let sgn = &inst.truth.u * inst.truth.v.transpose();
            (0..trials)
                .into_par_iter()
                .map(|k| {
                    let g = gaussian_matrix(n, n, seed.wrapping_add(k as u64));
                    nuclear_draw(&g, &pu, &pv, &sgn, p.r).map(Some)
                })
                .collect()
        }
        McProgram::Weighted(w) => {
            let bp: BasisPair = build_basis_pair(&inst.truth, &inst.u_tilde, &inst.v_tilde, p)?;
            let hi = coordinate_bracket(n) / w.w1.max(w.w2).max(w.w3);
            (0..trials)
                .into_par_iter()
                .map(|k| {
                    let g = gaussian_matrix(n, n, seed.wrapping_add(k as u64));
                    let g_hat = bp.b_l.transpose() * g * &bp.b_r;
                    let draw = WeightedDraw { g_hat: &g_hat, p, widths: bp.widths, params };
                    let mut warm = Matrix::zeros(n - p.r, n - p.r);
                    let mut failure: Option<Error> = None;
                    let mut capped = false;
                    let mut f = |t: f64| -> f64 {
                        match draw.value(&ScaledWeights::along(&w, t), &mut warm) {
                            Ok((v, ok)) => {
                                capped |= !ok;
                                v
                            }
                            Err(e) => {
                                failure.get_or_insert(e);
                                f64::INFINITY
                            }
                        }
                    };
                    let t = gss(&mut f, 0.0, hi, params.t_rel_tol * hi, GSS_ITERS);
                    let val = f(t);
                    if let Some(e) = failure {
                        return Err(e);
                    }
                    Ok(if capped { None } else { Some(val) })
                })
                .collect()
        }
    };
    let mut kept = Vec::with_capacity(trials);
    let mut discarded = 0;
    for r in results {
        match r? {
            Some(v) => kept.push(v / nn),
            None => discarded += 1,
        }
    }
    if kept.is_empty() {
        return Err(Error::NumericFailure(format!("inner solver hit its iteration cap on all {discarded} draws")));
    }
    let (mean, std_error) = mean_and_stderr(&kept);
    Ok(McEstimate { mean, std_error, kept: kept.len(), discarded })
}

/// Weighted distance for a single Gaussian draw `g` at scaled weights `v`,
/// exposed for cross-checks against the original-coordinate objective.
pub fn weighted_distance_sq(
    g: &Matrix,
    bp: &BasisPair,
    p: &SubspacePrior,
    v: &ScaledWeights,
    params: McSolverParams,
) -> Result<(f64, Matrix)> {
    let n = p.n;
    let g_hat = bp.b_l.transpose() * g * &bp.b_r;
    let draw = WeightedDraw { g_hat: &g_hat, p, widths: bp.widths, params };
    let mut z = Matrix::zeros(n - p.r, n - p.r);
    let (val, ok) = draw.value(v, &mut z)?;
    if !ok {
        return Err(Error::NumericFailure("spectral-ball solver hit its iteration cap".into()));
    }
    Ok((val, z))
}
