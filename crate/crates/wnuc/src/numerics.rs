//! Numeric kernels: SVD, seeded Gaussian ensembles, Marchenko–Pastur
//! quadrature and scalar shrinkage.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use crate::error::{Error, Result};

/// Dense real matrix. Zero-sized matrices are legal and act as empty blocks.
pub type Matrix = DMatrix<f64>;

// nalgebra's bidiagonal SVD returns wrong factors for some rank-deficient
// inputs (projectors, rank-one products), so decompositions go through faer
const SVD_CHECK: f64 = 1e-9;

fn to_faer(m: &Matrix) -> faer::Mat<f64> {
    faer::Mat::from_fn(m.nrows(), m.ncols(), |i, j| m[(i, j)])
}

fn from_faer(m: faer::MatRef<'_, f64>, cols: usize) -> Matrix {
    Matrix::from_fn(m.nrows(), cols, |i, j| m[(i, j)])
}

fn check_finite(m: &Matrix) -> Result<()> {
    if m.iter().any(|x| !x.is_finite()) {
        return Err(Error::NumericFailure("svd input has non-finite entries".into()));
    }
    Ok(())
}

/// Thin SVD with singular values sorted non-increasingly.
#[derive(Debug, Clone)]
pub struct SvdTriple {
    pub left: Matrix,
    pub singulars: Vec<f64>,
    pub right: Matrix,
}

impl SvdTriple {
    pub fn reconstruct(&self) -> Matrix {
        let mut us = self.left.clone();
        for (j, s) in self.singulars.iter().enumerate() {
            us.column_mut(j).scale_mut(*s);
        }
        us * self.right.transpose()
    }
}

/// Deterministic RNG for a given seed.
pub fn rng_from_seed(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn sort_order(s: &[f64]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..s.len()).collect();
    idx.sort_by(|&a, &b| s[b].total_cmp(&s[a]));
    idx
}

pub fn svd(m: &Matrix) -> Result<SvdTriple> {
    let (rows, cols) = m.shape();
    check_finite(m)?;
    let k = rows.min(cols);
    if k == 0 {
        return Ok(SvdTriple { left: Matrix::zeros(rows, 0), singulars: Vec::new(), right: Matrix::zeros(cols, 0) });
    }
    let dec = to_faer(m).thin_svd().map_err(|e| Error::NumericFailure(format!("svd did not converge: {e:?}")))?;
    let u = from_faer(dec.U(), k);
    let v = from_faer(dec.V(), k);
    let s: Vec<f64> = dec.S().column_vector().iter().copied().collect();
    let order = sort_order(&s);
    let mut left = Matrix::zeros(rows, k);
    let mut right = Matrix::zeros(cols, k);
    let mut singulars = Vec::with_capacity(k);
    for (j, &i) in order.iter().enumerate() {
        left.set_column(j, &u.column(i));
        right.set_column(j, &v.column(i));
        singulars.push(s[i]);
    }
    let out = SvdTriple { left, singulars, right };
    if (out.reconstruct() - m).amax() > SVD_CHECK * m.amax().max(f64::MIN_POSITIVE) {
        return Err(Error::NumericFailure("svd failed its reconstruction check".into()));
    }
    Ok(out)
}

/// Singular values only, non-increasing.
pub fn singular_values(m: &Matrix) -> Result<Vec<f64>> {
    check_finite(m)?;
    if m.nrows().min(m.ncols()) == 0 {
        return Ok(Vec::new());
    }
    let mut s =
        to_faer(m).singular_values().map_err(|e| Error::NumericFailure(format!("svd did not converge: {e:?}")))?;
    s.sort_by(|a, b| b.total_cmp(a));
    Ok(s)
}

/// Moore–Penrose inverse; singular values below `rtol·σ₁` are dropped.
pub fn pseudo_inverse(m: &Matrix, rtol: f64) -> Result<Matrix> {
    let t = svd(m)?;
    let cut = rtol * t.singulars.first().copied().unwrap_or(0.0);
    let mut v = t.right;
    for (j, s) in t.singulars.iter().enumerate() {
        v.column_mut(j).scale_mut(if *s > cut { 1.0 / s } else { 0.0 });
    }
    Ok(v * t.left.transpose())
}

/// Orthonormal basis for the column space of a full-column-rank matrix.
pub fn orthonormalize(m: &Matrix) -> Matrix {
    m.clone().qr().q()
}

/// Entries i.i.d. N(0,1), filled in row-major order from `seed`.
pub fn gaussian_matrix(rows: usize, cols: usize, seed: u64) -> Matrix {
    let mut rng = rng_from_seed(seed);
    gaussian_matrix_from(&mut rng, rows, cols)
}

pub fn gaussian_matrix_from<R: Rng>(rng: &mut R, rows: usize, cols: usize) -> Matrix {
    let data: Vec<f64> = (0..rows * cols).map(|_| rng.sample(StandardNormal)).collect();
    Matrix::from_row_slice(rows, cols, &data)
}

/// Haar-distributed orthogonal matrix.
pub fn random_orthogonal<R: Rng>(rng: &mut R, n: usize) -> Matrix {
    let g = gaussian_matrix_from(rng, n, n);
    let qr = g.qr();
    let mut q = qr.q();
    let r = qr.r();
    // sign fix so the distribution is Haar rather than QR-biased
    for j in 0..n {
        if r[(j, j)] < 0.0 {
            q.column_mut(j).neg_mut();
        }
    }
    q
}

/// Aspect ratio and support edges of the Marchenko–Pastur singular-value law.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MpParams {
    pub s: f64,
    pub l_b: f64,
    pub u_b: f64,
}

impl MpParams {
    pub fn new(s: f64) -> Result<Self> {
        if !(s > 0.0 && s <= 1.0) {
            return Err(Error::Config(format!("aspect ratio {s} outside (0,1]")));
        }
        let r = s.sqrt();
        Ok(Self { s, l_b: 1.0 - r, u_b: 1.0 + r })
    }

    /// Aspect ratio of an `n1 × n2` block (either orientation).
    pub fn for_block(n1: usize, n2: usize) -> Result<Self> {
        let (lo, hi) = (n1.min(n2), n1.max(n2));
        if lo == 0 {
            return Err(Error::Config("empty block has no aspect ratio".into()));
        }
        Self::new(lo as f64 / hi as f64)
    }

    fn u_of(&self, theta: f64) -> f64 {
        self.l_b + (self.u_b - self.l_b) * theta.sin().powi(2)
    }

    fn theta_of(&self, u: f64) -> f64 {
        let x = ((u - self.l_b) / (self.u_b - self.l_b)).clamp(0.0, 1.0);
        x.sqrt().asin()
    }

    /// density(u) · du/dθ under u = l_b + (u_b − l_b) sin²θ, written so the
    /// endpoint square roots cancel analytically.
    fn weight(&self, theta: f64) -> f64 {
        let u = self.u_of(theta);
        if u <= 0.0 {
            return 0.0;
        }
        let w = self.u_b - self.l_b;
        let (sn, cs) = theta.sin_cos();
        2.0 * w * w * sn * sn * cs * cs * ((self.u_b + u) * (u + self.l_b)).sqrt() / (PI * self.s * u)
    }
}

pub fn mp_density(u: f64, p: &MpParams) -> f64 {
    if u < p.l_b || u > p.u_b || u <= 0.0 {
        return 0.0;
    }
    let v = (p.u_b * p.u_b - u * u) * (u * u - p.l_b * p.l_b);
    v.max(0.0).sqrt() / (PI * p.s * u)
}

const QUAD_TOL: f64 = 1e-9;
const QUAD_DEPTH: u32 = 48;

fn simpson_step<F: Fn(f64) -> f64>(
    f: &F,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: u32,
) -> Result<f64> {
    let m = 0.5 * (a + b);
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let flm = f(lm);
    let frm = f(rm);
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    let delta = left + right - whole;
    if delta.abs() <= 15.0 * tol {
        return Ok(left + right + delta / 15.0);
    }
    if depth == 0 {
        return Err(Error::NumericFailure(format!("adaptive Simpson did not reach tolerance on [{a}, {b}]")));
    }
    Ok(simpson_step(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1)?
        + simpson_step(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)?)
}

/// Adaptive Simpson quadrature with absolute tolerance `tol`.
pub fn adaptive_simpson<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, tol: f64) -> Result<f64> {
    if b <= a {
        return Ok(0.0);
    }
    // seed with a few panels so narrow features are not missed
    let panels = 8;
    let h = (b - a) / panels as f64;
    let mut total = 0.0;
    for k in 0..panels {
        let lo = a + h * k as f64;
        let hi = if k + 1 == panels { b } else { lo + h };
        let (fa, fb) = (f(lo), f(hi));
        let fm = f(0.5 * (lo + hi));
        let whole = (hi - lo) / 6.0 * (fa + 4.0 * fm + fb);
        total += simpson_step(&f, lo, hi, fa, fm, fb, whole, tol / panels as f64, QUAD_DEPTH)?;
    }
    Ok(total)
}

/// CDF of the Marchenko–Pastur singular-value law at `x`.
pub fn mp_cdf(x: f64, p: &MpParams) -> Result<f64> {
    if x <= p.l_b {
        return Ok(0.0);
    }
    if x >= p.u_b {
        return Ok(1.0);
    }
    let hi = p.theta_of(x);
    adaptive_simpson(|th| p.weight(th), 0.0, hi, QUAD_TOL).map(|v| v.clamp(0.0, 1.0))
}

/// φ(τ, s) = ∫ (u − τ)₊² mp_density(u) du.
pub fn phi(tau: f64, p: &MpParams) -> Result<f64> {
    if tau >= p.u_b {
        return Ok(0.0);
    }
    let lo = if tau > p.l_b { p.theta_of(tau) } else { 0.0 };
    adaptive_simpson(
        |th| {
            let d = (p.u_of(th) - tau).max(0.0);
            d * d * p.weight(th)
        },
        lo,
        PI / 2.0,
        QUAD_TOL,
    )
}

/// Closed form of φ(α, 1).
pub fn varphi(alpha: f64) -> f64 {
    if alpha <= 0.0 {
        (3.0 * PI - 16.0 * alpha + 3.0 * PI * alpha * alpha) / (3.0 * PI)
    } else if alpha < 2.0 {
        let a2 = alpha * alpha;
        (-(26.0 * alpha + a2 * alpha) * (4.0 - a2).sqrt() + 24.0 * (1.0 + a2) * (alpha / 2.0).acos()) / (12.0 * PI)
    } else {
        0.0
    }
}

/// inf over |z| ≤ a of (g − z)².
pub fn shrinkage_sq(g: f64, a: f64) -> f64 {
    let d = (g.abs() - a).max(0.0);
    d * d
}

fn check_profile(n1: usize, n2: usize, f: &[f64]) -> Result<()> {
    if n1 == 0 || n1 > n2 {
        return Err(Error::Config(format!("need 0 < n1 ≤ n2, got {n1}×{n2}")));
    }
    if f.len() != n1 {
        return Err(Error::Config(format!("profile has {} entries, expected {n1}", f.len())));
    }
    if f.iter().any(|x| *x < 0.0) || f.windows(2).any(|w| w[0] < w[1]) {
        return Err(Error::Config("profile must be non-negative and non-increasing".into()));
    }
    Ok(())
}

/// Sample mean and standard error of the per-trial values.
pub fn mean_and_stderr(xs: &[f64]) -> (f64, Option<f64>) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, None);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, Some((var / n).sqrt()))
}

/// Monte-Carlo estimate of E (1/n1) Σᵢ (σᵢ(G/√n2) − fᵢ)₊², with trial `k`
/// seeded by `seed + k`. Returns (mean, standard error).
pub fn expected_shrinkage_mc(n1: usize, n2: usize, f: &[f64], trials: usize, seed: u64) -> Result<(f64, Option<f64>)> {
    check_profile(n1, n2, f)?;
    if trials == 0 {
        return Err(Error::Config("trials must be ≥ 1".into()));
    }
    let scale = 1.0 / (n2 as f64).sqrt();
    let vals: Result<Vec<f64>> = (0..trials)
        .into_par_iter()
        .map(|k| {
            let g = gaussian_matrix(n1, n2, seed.wrapping_add(k as u64));
            let s = singular_values(&g)?;
            Ok(s.iter()
                .zip(f)
                .map(|(si, fi)| {
                    let d = (si * scale - fi).max(0.0);
                    d * d
                })
                .sum::<f64>()
                / n1 as f64)
        })
        .collect();
    Ok(mean_and_stderr(&vals?))
}

/// (1/n1) Σᵢ φ(fᵢ, n1/n2).
pub fn expected_shrinkage_mp(n1: usize, n2: usize, f: &[f64]) -> Result<f64> {
    check_profile(n1, n2, f)?;
    let p = MpParams::new(n1 as f64 / n2 as f64)?;
    let mut acc = 0.0;
    for fi in f {
        acc += phi(*fi, &p)?;
    }
    Ok(acc / n1 as f64)
}

/// Kolmogorov–Smirnov distance between a sample and the MP law.
pub fn ks_distance_mp(sample: &[f64], p: &MpParams) -> Result<f64> {
    let mut xs = sample.to_vec();
    xs.sort_by(|a, b| a.total_cmp(b));
    let n = xs.len() as f64;
    let mut d: f64 = 0.0;
    for (i, x) in xs.iter().enumerate() {
        let c = mp_cdf(*x, p)?;
        d = d.max((c - i as f64 / n).abs()).max(((i + 1) as f64 / n - c).abs());
    }
    Ok(d)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn svd_diagonal_reorders() {
        let m = Matrix::from_diagonal(&nalgebra::DVector::from_vec(vec![3.0, 1.0, 2.0]));
        let t = svd(&m).unwrap();
        assert_eq!(t.singulars.len(), 3);
        for (a, b) in t.singulars.iter().zip([3.0, 2.0, 1.0]) {
            assert!((a - b).abs() < 1e-14);
        }
    }

    #[test]
    fn svd_of_empty() {
        let t = svd(&Matrix::zeros(0, 4)).unwrap();
        assert!(t.singulars.is_empty());
        assert_eq!(t.right.shape(), (4, 0));
    }

    #[test]
    fn svd_rejects_nan() {
        let mut m = Matrix::identity(2, 2);
        m[(0, 1)] = f64::NAN;
        assert!(matches!(svd(&m), Err(Error::NumericFailure(_))));
    }

    #[test]
    fn density_at_sqrt_two() {
        let p = MpParams::new(1.0).unwrap();
        let want = 2f64.sqrt() / PI;
        assert!((mp_density(2f64.sqrt(), &p) - want).abs() < 1e-14);
        assert_eq!(mp_density(2.5, &p), 0.0);
    }

    #[test]
    fn mp_params_rejects_bad_ratio() {
        assert!(MpParams::new(0.0).is_err());
        assert!(MpParams::new(1.5).is_err());
    }

    #[test]
    fn varphi_endpoints() {
        assert!((varphi(0.0) - 1.0).abs() < 1e-15);
        assert_eq!(varphi(2.0), 0.0);
        assert_eq!(varphi(3.0), 0.0);
    }

    #[test]
    fn shrinkage_examples() {
        assert_eq!(shrinkage_sq(3.0, 1.0), 4.0);
        assert_eq!(shrinkage_sq(0.5, 1.0), 0.0);
        assert!((shrinkage_sq(-2.0, 0.5) - 2.25).abs() < 1e-15);
    }

    #[test]
    fn profile_validation() {
        assert!(expected_shrinkage_mp(3, 2, &[0.0; 3]).is_err());
        assert!(expected_shrinkage_mp(2, 4, &[0.1, 0.2]).is_err());
        assert!(expected_shrinkage_mc(2, 4, &[0.1, 0.0], 0, 1).is_err());
    }
}
