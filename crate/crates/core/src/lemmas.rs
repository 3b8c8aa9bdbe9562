//! Numerical checks of the matrix identities and large-system limits behind
//! the SINR analysis.
//!
//! Exact identities are checked draw by draw. Asymptotic statements are
//! summarized by the median deviation over independent trials at each size and
//! a least-squares slope of `ln(error)` against `ln(M)`. Trial `t` at size `M`
//! of lemma `id` draws from stream `(seed, id, M, t)`.

use std::path::Path;

use faer::{c64, Mat, MatRef};
use rand::Rng;
use rand_distr::{Distribution, Gamma, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{
    add_diagonal, frobenius_norm_sqr, general_inverse, gram, hpd_condition_number, mul, mul_by_adj, Hpd,
};
use crate::rng::{complex_normal, complex_normal_matrix, stream_rng, SimRng};

pub const LEMMA_INVERSION: u64 = 2;
pub const LEMMA_RESOLVENT: u64 = 3;
pub const LEMMA_TRACE: u64 = 4;
pub const LEMMA_RANK1: u64 = 6;
pub const LEMMA_FREE: u64 = 8;
pub const LEMMA_QUADRATIC: u64 = 9;

/// Expected slope windows for the fitted decay rates.
pub const TRACE_SLOPE_WINDOW: (f64, f64) = (-0.65, -0.35);
pub const RANK1_SLOPE_WINDOW: (f64, f64) = (-1.3, -0.7);
pub const FREE_SLOPE_WINDOW: (f64, f64) = (-1.3, -0.7);
pub const QUADRATIC_SLOPE_WINDOW: (f64, f64) = (-0.65, -0.35);

/// Tolerance for the exact identities, relative to the natural scale.
pub const EXACT_TOLERANCE: f64 = 1e-10;

const MAX_RESAMPLES: usize = 32;

fn trial_rng(seed: u64, lemma: u64, m: usize, trial: usize) -> SimRng {
    stream_rng(seed, &[lemma, m as u64, trial as u64])
}

/// Median deviation per matrix size and the fitted log-log slope.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceRecord {
    pub name: String,
    pub m_values: Vec<usize>,
    pub errors: Vec<f64>,
    pub slope: f64,
}

impl ConvergenceRecord {
    pub fn new(name: impl Into<String>, m_values: Vec<usize>, errors: Vec<f64>) -> Result<Self> {
        if m_values.len() != errors.len() || m_values.len() < 2 {
            return Err(Error::Shape(format!(
                "need at least two sizes with one error each, got {} sizes and {} errors",
                m_values.len(),
                errors.len()
            )));
        }
        if m_values.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::Domain("matrix sizes must be strictly increasing".into()));
        }
        if errors.iter().any(|e| !(*e > 0.0 && e.is_finite())) {
            return Err(Error::Numerical("convergence errors must be positive and finite".into()));
        }
        let xs: Vec<f64> = m_values.iter().map(|m| (*m as f64).ln()).collect();
        let ys: Vec<f64> = errors.iter().map(|e| e.ln()).collect();
        let slope = fit_slope(&xs, &ys);
        Ok(Self {
            name: name.into(),
            m_values,
            errors,
            slope,
        })
    }

    pub fn strictly_decreasing(&self) -> bool {
        self.errors.windows(2).all(|w| w[1] < w[0])
    }

    pub fn slope_within(&self, window: (f64, f64)) -> bool {
        self.slope >= window.0 && self.slope <= window.1
    }
}

fn fit_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    sxy / sxx
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

#[derive(Serialize)]
struct RecordRow<'a> {
    lemma: &'a str,
    m: usize,
    median_error: f64,
    slope: f64,
}

/// One row per `(record, size)`: `lemma,m,median_error,slope`.
pub fn write_records_csv(records: &[ConvergenceRecord], path: &Path) -> Result<()> {
    let io = |e: csv::Error| Error::Io {
        path: path.to_path_buf(),
        source: std::io::Error::other(e.to_string()),
    };
    let mut w = csv::Writer::from_path(path).map_err(io)?;
    for r in records {
        for (m, e) in r.m_values.iter().zip(&r.errors) {
            w.serialize(RecordRow {
                lemma: &r.name,
                m: *m,
                median_error: *e,
                slope: r.slope,
            })
            .map_err(io)?;
        }
    }
    w.flush().map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn random_hpd(m: usize, shift: f64, rng: &mut SimRng) -> Mat<c64> {
    let x = complex_normal_matrix(m, m, 1.0 / m as f64, rng);
    let mut u = gram(x.as_ref());
    add_diagonal(u.as_mut(), shift);
    u
}

fn column(v: &[c64]) -> Mat<c64> {
    Mat::from_fn(v.len(), 1, |i, _| v[i])
}

/// Largest entry of `hᴴ(U + q hhᴴ)⁻¹ − hᴴU⁻¹ / (1 + q hᴴU⁻¹h)`, relative to
/// the largest entry of the right-hand side.
///
/// Fails with [`Error::Degenerate`] when `U + q hhᴴ` is singular along `h`.
pub fn inversion_identity_deviation(u: MatRef<'_, c64>, h: &[c64], q: c64) -> Result<f64> {
    let m = u.nrows();
    if h.len() != m {
        return Err(Error::Shape(format!("vector of length {} for a {m}x{m} matrix", h.len())));
    }
    let u_inv = general_inverse(u)?;
    let hc = column(h);
    let row = crate::linalg::mul_adj(hc.as_ref(), u_inv.as_ref());
    let s: c64 = (0..m).map(|i| row[(0, i)] * h[i]).sum();
    let denom = c64::new(1.0, 0.0) + q * s;
    if denom.norm() <= 1e-8 * (1.0 + (q * s).norm()) {
        return Err(Error::Degenerate("the rank-one update is singular along h".into()));
    }
    let mut perturbed = u.to_owned();
    for j in 0..m {
        for i in 0..m {
            perturbed[(i, j)] += q * h[i] * h[j].conj();
        }
    }
    let p_inv = general_inverse(perturbed.as_ref())?;
    let lhs = crate::linalg::mul_adj(hc.as_ref(), p_inv.as_ref());
    let mut dev: f64 = 0.0;
    let mut scale: f64 = 0.0;
    for i in 0..m {
        let r = row[(0, i)] / denom;
        dev = dev.max((lhs[(0, i)] - r).norm());
        scale = scale.max(r.norm());
    }
    Ok(if dev == 0.0 { 0.0 } else { dev / scale })
}

/// One draw of the inversion identity with random Hermitian positive `U`,
/// Gaussian `h` and complex `q`, resampling singular updates.
pub fn check_matrix_inversion_identity(m: usize, seed: u64, trial: usize) -> Result<f64> {
    let mut rng = trial_rng(seed, LEMMA_INVERSION, m, trial);
    for _ in 0..MAX_RESAMPLES {
        let u = random_hpd(m, 0.1, &mut rng);
        let h: Vec<c64> = (0..m).map(|_| complex_normal(&mut rng)).collect();
        let q = complex_normal(&mut rng);
        match inversion_identity_deviation(u.as_ref(), &h, q) {
            Err(Error::Degenerate(_)) => continue,
            other => return other,
        }
    }
    Err(Error::Numerical("no admissible draw for the inversion identity".into()))
}

/// `‖U⁻¹ − V⁻¹ + U⁻¹(U − V)V⁻¹‖_F / (‖U⁻¹‖_F ‖U − V‖_F ‖V⁻¹‖_F)` for Hermitian
/// positive-definite `U`, `V` whose condition numbers stay below `cap`.
pub fn resolvent_identity_deviation(u: MatRef<'_, c64>, v: MatRef<'_, c64>, cap: f64) -> Result<f64> {
    for (name, a) in [("U", u), ("V", v)] {
        let c = hpd_condition_number(a)?;
        if c > cap {
            return Err(Error::Degenerate(format!("{name} has condition number {c:e} above {cap:e}")));
        }
    }
    let ui = Hpd::factor(u)?.inverse();
    let vi = Hpd::factor(v)?.inverse();
    let diff = u - v;
    let rhs = mul(mul(ui.as_ref(), diff.as_ref()).as_ref(), vi.as_ref());
    let resid = &ui - &vi + &rhs;
    let num = frobenius_norm_sqr(resid.as_ref()).sqrt();
    if num == 0.0 {
        return Ok(0.0);
    }
    let scale = (frobenius_norm_sqr(ui.as_ref()) * frobenius_norm_sqr(diff.as_ref()) * frobenius_norm_sqr(vi.as_ref()))
        .sqrt();
    Ok(num / scale)
}

pub fn check_resolvent_identity(m: usize, seed: u64, trial: usize) -> Result<f64> {
    let mut rng = trial_rng(seed, LEMMA_RESOLVENT, m, trial);
    for _ in 0..MAX_RESAMPLES {
        let u = random_hpd(m, 0.1, &mut rng);
        let v = random_hpd(m, 0.1, &mut rng);
        match resolvent_identity_deviation(u.as_ref(), v.as_ref(), 1e8) {
            Err(Error::Degenerate(_)) => continue,
            other => return other,
        }
    }
    Err(Error::Numerical("no admissible draw for the resolvent identity".into()))
}

/// Hermitian `Q diag(λ) Qᴴ` with `Q` a product of Householder reflections,
/// applied in `O(M)` per reflection.
#[derive(Debug, Clone)]
pub struct RotatedDiagonal {
    reflectors: Vec<Vec<c64>>,
    pub eigenvalues: Vec<f64>,
}

impl RotatedDiagonal {
    pub fn random(m: usize, reflections: usize, lo: f64, hi: f64, rng: &mut SimRng) -> Self {
        let reflectors = (0..reflections)
            .map(|_| {
                let v: Vec<c64> = (0..m).map(|_| complex_normal(rng)).collect();
                let n = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
                v.into_iter().map(|z| z / n).collect()
            })
            .collect();
        let eigenvalues = (0..m).map(|_| rng.random_range(lo..=hi)).collect();
        Self {
            reflectors,
            eigenvalues,
        }
    }

    pub fn scaled_identity(m: usize, c: f64) -> Self {
        Self {
            reflectors: Vec::new(),
            eigenvalues: vec![c; m],
        }
    }

    pub fn dim(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn trace(&self) -> f64 {
        self.eigenvalues.iter().sum()
    }

    pub fn spectral_norm(&self) -> f64 {
        self.eigenvalues.iter().fold(0.0, |a, l| a.max(l.abs()))
    }

    fn reflect(v: &[c64], z: &mut [c64]) {
        let d: c64 = v.iter().zip(z.iter()).map(|(a, b)| a.conj() * b).sum();
        for (zi, vi) in z.iter_mut().zip(v) {
            *zi -= vi * d * 2.0;
        }
    }

    pub fn apply(&self, x: &[c64]) -> Vec<c64> {
        let mut z = x.to_vec();
        for v in self.reflectors.iter().rev() {
            Self::reflect(v, &mut z);
        }
        for (zi, l) in z.iter_mut().zip(&self.eigenvalues) {
            *zi *= *l;
        }
        for v in &self.reflectors {
            Self::reflect(v, &mut z);
        }
        z
    }

    pub fn to_dense(&self) -> Mat<c64> {
        let m = self.dim();
        let mut out = Mat::<c64>::zeros(m, m);
        let mut e = vec![c64::new(0.0, 0.0); m];
        for j in 0..m {
            e[j] = c64::new(1.0, 0.0);
            let col = self.apply(&e);
            e[j] = c64::new(0.0, 0.0);
            for i in 0..m {
                out[(i, j)] = col[i];
            }
        }
        out
    }
}

fn dot(a: &[c64], b: &[c64]) -> c64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

fn scaled_gaussian(m: usize, rng: &mut SimRng) -> Vec<c64> {
    let s = 1.0 / (m as f64).sqrt();
    (0..m).map(|_| complex_normal(rng) * s).collect()
}

/// `(|xᴴAx − tr A / M|, |xᴴAw|)` for one draw of `x, w ~ CN(0, I/M)`.
pub fn trace_lemma_sample(a: &RotatedDiagonal, x: &[c64], w: &[c64]) -> (f64, f64) {
    let ax = a.apply(x);
    let m = a.dim() as f64;
    let quad = (dot(x, &ax) - c64::new(a.trace() / m, 0.0)).norm();
    let bil = dot(&ax, w).norm();
    (quad, bil)
}

fn convergence<F>(name: &str, m_values: &[usize], trials: usize, f: F) -> Result<ConvergenceRecord>
where
    F: Fn(usize, usize) -> Result<f64> + Sync,
{
    let errors = m_values
        .iter()
        .map(|&m| {
            let v: Result<Vec<f64>> = (0..trials).into_par_iter().map(|t| f(m, t)).collect();
            Ok(median(v?))
        })
        .collect::<Result<Vec<f64>>>()?;
    ConvergenceRecord::new(name, m_values.to_vec(), errors)
}

fn convergence_multi<F, const N: usize>(
    names: [&str; N],
    m_values: &[usize],
    trials: usize,
    f: F,
) -> Result<Vec<ConvergenceRecord>>
where
    F: Fn(usize, usize) -> Result<[f64; N]> + Sync,
{
    let mut errors = vec![Vec::with_capacity(m_values.len()); N];
    for &m in m_values {
        let v: Result<Vec<[f64; N]>> = (0..trials).into_par_iter().map(|t| f(m, t)).collect();
        let v = v?;
        for (i, e) in errors.iter_mut().enumerate() {
            e.push(median(v.iter().map(|s| s[i]).collect()));
        }
    }
    names
        .iter()
        .zip(errors)
        .map(|(n, e)| ConvergenceRecord::new(*n, m_values.to_vec(), e))
        .collect()
}

/// Quadratic-form and bilinear-form concentration for a random Hermitian `A`
/// with spectrum in `[0.5, 2]`.
pub fn check_trace_lemma(m_values: &[usize], trials: usize, seed: u64) -> Result<Vec<ConvergenceRecord>> {
    convergence_multi(["trace-quadratic", "trace-bilinear"], m_values, trials, |m, t| {
        let mut rng = trial_rng(seed, LEMMA_TRACE, m, t);
        let a = RotatedDiagonal::random(m, 3, 0.5, 2.0, &mut rng);
        let x = scaled_gaussian(m, &mut rng);
        let w = scaled_gaussian(m, &mut rng);
        let (q, b) = trace_lemma_sample(&a, &x, &w);
        Ok([q, b])
    })
}

/// `|tr A[(U + ζI + q hhᴴ)⁻¹ − (U + ζI)⁻¹]|`, by two independent factorizations.
pub fn rank1_trace_gap(u: MatRef<'_, c64>, a: MatRef<'_, c64>, h: &[c64], q: f64, zeta: f64) -> Result<f64> {
    if !(zeta > 0.0) {
        return Err(Error::Domain(format!("zeta must be positive, got {zeta}")));
    }
    if q < 0.0 {
        return Err(Error::Domain(format!("q must be nonnegative, got {q}")));
    }
    let m = u.nrows();
    let mut b = u.to_owned();
    add_diagonal(b.as_mut(), zeta);
    let mut bp = b.clone();
    for j in 0..m {
        for i in 0..m {
            bp[(i, j)] += h[i] * h[j].conj() * q;
        }
    }
    let bi = Hpd::factor(b.as_ref())?.inverse();
    let bpi = Hpd::factor(bp.as_ref())?.inverse();
    let mut tr = c64::new(0.0, 0.0);
    for j in 0..m {
        for i in 0..m {
            tr += a[(i, j)] * (bpi[(j, i)] - bi[(j, i)]);
        }
    }
    Ok(tr.norm())
}

/// Bound `‖A‖ / ζ` on the unnormalized trace gap.
pub fn rank1_bound(a_norm: f64, zeta: f64) -> f64 {
    a_norm / zeta
}

struct Rank1Draw {
    u: Mat<c64>,
    a: RotatedDiagonal,
    h: Vec<c64>,
    q: f64,
}

const RANK1_ZETA: f64 = 0.5;

fn rank1_draw(m: usize, rng: &mut SimRng) -> Rank1Draw {
    let x = complex_normal_matrix(m, m, 1.0 / m as f64, rng);
    Rank1Draw {
        u: gram(x.as_ref()),
        a: RotatedDiagonal::random(m, 3, 0.5, 2.0, rng),
        h: scaled_gaussian(m, rng),
        q: rng.random_range(0.1..4.0),
    }
}

/// Normalized gap `(1/M)|tr A[…]|` with Wishart `U`, Hermitian `A` with
/// spectrum in `[0.5, 2]`, `ζ = 0.5` and `q ∈ [0.1, 4]`.
pub fn check_rank1_perturbation(m_values: &[usize], trials: usize, seed: u64) -> Result<ConvergenceRecord> {
    convergence("rank1", m_values, trials, |m, t| {
        let d = rank1_draw(m, &mut trial_rng(seed, LEMMA_RANK1, m, t));
        let gap = rank1_trace_gap(d.u.as_ref(), d.a.to_dense().as_ref(), &d.h, d.q, RANK1_ZETA)?;
        Ok(gap / m as f64)
    })
}

/// Number of draws at size `m` whose trace gap exceeds `‖A‖/ζ`.
pub fn rank1_bound_violations(m: usize, draws: usize, seed: u64) -> Result<usize> {
    let v: Result<Vec<bool>> = (0..draws)
        .into_par_iter()
        .map(|t| {
            let d = rank1_draw(m, &mut trial_rng(seed ^ 0x5eed, LEMMA_RANK1, m, t));
            let gap = rank1_trace_gap(d.u.as_ref(), d.a.to_dense().as_ref(), &d.h, d.q, RANK1_ZETA)?;
            Ok(gap > rank1_bound(d.a.spectral_norm(), RANK1_ZETA))
        })
        .collect();
    Ok(v?.into_iter().filter(|b| *b).count())
}

/// `|(1/M) tr UV − (1/M) tr U · (1/M) tr V|` for diagonal `V`, given the
/// diagonal of `U`.
pub fn free_trace_gap(u_diag: &[f64], v_diag: &[c64]) -> f64 {
    let m = u_diag.len() as f64;
    let uv: c64 = u_diag.iter().zip(v_diag).map(|(u, v)| v * *u).sum();
    let tu: f64 = u_diag.iter().sum();
    let tv: c64 = v_diag.iter().sum();
    (uv / m - tv * (tu / m) / m).norm()
}

/// Uniform block phases: antennas `b·L .. (b+1)·L` share one phase.
pub fn block_phases<R: Rng + ?Sized>(m: usize, block_len: usize, rng: &mut R) -> Vec<c64> {
    let mut out = Vec::with_capacity(m);
    let mut phase = c64::new(1.0, 0.0);
    for i in 0..m {
        if i % block_len == 0 {
            phase = c64::cis(rng.random_range(0.0..std::f64::consts::TAU));
        }
        out.push(phase);
    }
    out
}

/// Sample covariance `U = WᴴW/M` with `W` of size `M/2 × M` against an
/// independent uniform block-phase diagonal `V` with `block_len` antennas per phase.
pub fn check_free_probability_traces(
    m_values: &[usize],
    trials: usize,
    block_len: usize,
    seed: u64,
) -> Result<ConvergenceRecord> {
    if block_len == 0 || m_values.iter().any(|m| m % block_len != 0) {
        return Err(Error::Domain(format!("block length {block_len} must divide every size")));
    }
    convergence("free-probability", m_values, trials, |m, t| {
        let mut rng = trial_rng(seed, LEMMA_FREE, m, t);
        // Column norms of W are independent, so diag(WᴴW) is i.i.d. Gamma(M/2, 1).
        let gamma = Gamma::new((m / 2) as f64, 1.0).map_err(|e| Error::Domain(e.to_string()))?;
        let u_diag: Vec<f64> = (0..m).map(|_| gamma.sample(&mut rng) / m as f64).collect();
        let v = block_phases(m, block_len, &mut rng);
        Ok(free_trace_gap(&u_diag, &v))
    })
}

/// Parameters of the quadratic-form extension check.
///
/// `A = HᴴH/M + αI` with `H` of size `(M/β) × M`, `U = H_uᴴH_u/M` with an
/// independent `H_u` of the same size, and `N` a block-phase diagonal whose
/// phases are `φ₀ + δ_b` with `φ₀` uniform and `δ_b ~ N(0, phase_var)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadraticSetup {
    pub beta: f64,
    pub alpha: f64,
    pub q0: f64,
    pub block_len: usize,
    pub phase_var: f64,
}

impl QuadraticSetup {
    pub fn new(q0: f64) -> Self {
        Self {
            beta: 2.0,
            alpha: 0.5,
            q0,
            block_len: 1,
            phase_var: 0.5,
        }
    }
}

/// Empirical forms and their limits for one draw.
///
/// Index 0..3 are the three phase-matrix identities
/// `xᴴNUVNᴴx`, `xᴴUVNᴴx`, `wᴴUVNᴴx`; index 3..5 are `wᴴUVw` and `xᴴUVw`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadraticSample {
    pub forms: [c64; 5],
    pub limits: [c64; 5],
    pub t1: f64,
    pub t2: f64,
    pub trace_n: c64,
}

impl QuadraticSample {
    pub fn deviations(&self) -> [f64; 5] {
        std::array::from_fn(|i| (self.forms[i] - self.limits[i]).norm())
    }
}

fn phase_matrix(m: usize, setup: &QuadraticSetup, rng: &mut SimRng) -> Result<Vec<c64>> {
    if setup.block_len == 0 || m % setup.block_len != 0 {
        return Err(Error::Domain(format!("block length {} must divide M = {m}", setup.block_len)));
    }
    let normal = Normal::new(0.0, setup.phase_var.sqrt())
        .map_err(|e| Error::Domain(format!("phase variance: {e}")))?;
    let phi0 = rng.random_range(0.0..std::f64::consts::TAU);
    let mut out = Vec::with_capacity(m);
    let mut p = c64::new(1.0, 0.0);
    for i in 0..m {
        if i % setup.block_len == 0 {
            p = c64::cis(phi0 + normal.sample(rng));
        }
        out.push(p);
    }
    Ok(out)
}

/// One draw of the quadratic-form identities with an explicit phase diagonal.
pub fn quadratic_forms_sample(
    m: usize,
    setup: &QuadraticSetup,
    n_diag: &[c64],
    rng: &mut SimRng,
) -> Result<QuadraticSample> {
    if !(0.0..=1.0).contains(&setup.q0) {
        return Err(Error::Domain(format!("q0 must lie in [0, 1], got {}", setup.q0)));
    }
    if !(setup.alpha > 0.0) || !(setup.beta >= 1.0) {
        return Err(Error::Domain("need alpha > 0 and beta >= 1".into()));
    }
    if n_diag.len() != m {
        return Err(Error::Shape(format!("phase diagonal of length {} for M = {m}", n_diag.len())));
    }
    let k = ((m as f64 / setup.beta).round() as usize).max(1);
    let mf = m as f64;
    let (q0, q1) = (setup.q0, 1.0 - setup.q0);
    let q2 = (q0 * q1).sqrt();

    let h = complex_normal_matrix(k, m, 1.0, rng);
    let hu = complex_normal_matrix(k, m, 1.0, rng);
    let x = scaled_gaussian(m, rng);
    let w = scaled_gaussian(m, rng);

    // A⁻¹ = (I − Hᴴ (HHᴴ + MαI)⁻¹ H) / α.
    let mut gm = gram(h.as_ref());
    add_diagonal(gm.as_mut(), mf * setup.alpha);
    let chol = Hpd::factor(gm.as_ref())?;
    let gm_inv = chol.inverse();
    let t1 = ((mf - k as f64) / setup.alpha + mf * crate::linalg::trace(gm_inv.as_ref()).re) / mf;

    let c = mul_by_adj(hu.as_ref(), h.as_ref());
    let gc = chol.solve(c.adjoint().to_owned().as_ref());
    let mut tr_cgc = 0.0;
    for j in 0..k {
        for i in 0..c.nrows() {
            tr_cgc += (c[(i, j)] * gc[(j, i)]).re;
        }
    }
    let t2 = (frobenius_norm_sqr(hu.as_ref()) - tr_cgc) / (setup.alpha * mf * mf);

    let y: Vec<c64> = x.iter().zip(n_diag).map(|(xi, ni)| ni.conj() * xi).collect();
    let h_hat: Vec<c64> = x.iter().zip(&w).map(|(a, b)| a * q0.sqrt() + b * q1.sqrt()).collect();
    let vecs = Mat::from_fn(m, 3, |i, j| [y[i], h_hat[i], w[i]][j]);
    let hv = mul(h.as_ref(), vecs.as_ref());
    let sol = chol.solve(hv.as_ref());
    let back = crate::linalg::mul_adj(h.as_ref(), sol.as_ref());
    let a_inv = Mat::from_fn(m, 3, |i, j| (vecs[(i, j)] - back[(i, j)]) / setup.alpha);
    let col = |j: usize| -> Vec<c64> { (0..m).map(|i| a_inv[(i, j)]).collect() };
    let (ay, ah, aw) = (col(0), col(1), col(2));
    let denom = c64::new(1.0, 0.0) + dot(&h_hat, &ah);
    let v_apply = |av: &[c64]| -> Vec<c64> {
        let c = dot(&h_hat, av) / denom;
        av.iter().zip(&ah).map(|(a, b)| a - b * c).collect()
    };
    let vy = v_apply(&ay);
    let vw = v_apply(&aw);

    let lefts = Mat::from_fn(m, 3, |i, j| [y[i], x[i], w[i]][j]);
    let rights = Mat::from_fn(m, 2, |i, j| [vy[i], vw[i]][j]);
    let hl = mul(hu.as_ref(), lefts.as_ref());
    let hr = mul(hu.as_ref(), rights.as_ref());
    let form = |l: usize, r: usize| -> c64 { (0..hl.nrows()).map(|i| hl[(i, l)].conj() * hr[(i, r)]).sum::<c64>() / mf };

    let trace_n: c64 = n_diag.iter().sum::<c64>() / mf;
    let tn_h = trace_n.conj();
    let d = 1.0 + t1;
    let forms = [form(0, 0), form(1, 0), form(2, 0), form(2, 1), form(1, 1)];
    let limits = [
        c64::new(t2 - q0 * t1 * t2 * trace_n.norm_sqr() / d, 0.0),
        tn_h * (t2 * (1.0 + q1 * t1) / d),
        tn_h * (-q2 * t1 * t2 / d),
        c64::new(t2 * (1.0 + q0 * t1) / d, 0.0),
        c64::new(-q2 * t1 * t2 / d, 0.0),
    ];
    Ok(QuadraticSample {
        forms,
        limits,
        t1,
        t2,
        trace_n,
    })
}

/// Median absolute deviation of each identity over `trials` draws at size `m`.
pub fn check_lemma9_quadratic_forms(m: usize, setup: &QuadraticSetup, trials: usize, seed: u64) -> Result<[f64; 5]> {
    let samples: Result<Vec<[f64; 5]>> = (0..trials)
        .into_par_iter()
        .map(|t| {
            let mut rng = trial_rng(seed, LEMMA_QUADRATIC, m, t);
            let n = phase_matrix(m, setup, &mut rng)?;
            Ok(quadratic_forms_sample(m, setup, &n, &mut rng)?.deviations())
        })
        .collect();
    let samples = samples?;
    Ok(std::array::from_fn(|i| median(samples.iter().map(|s| s[i]).collect())))
}

pub fn check_lemma9_convergence(
    m_values: &[usize],
    setup: &QuadraticSetup,
    trials: usize,
    seed: u64,
) -> Result<Vec<ConvergenceRecord>> {
    convergence_multi(["quadratic-nun", "quadratic-xn", "quadratic-wn"], m_values, trials, |m, t| {
        let mut rng = trial_rng(seed, LEMMA_QUADRATIC, m, t);
        let n = phase_matrix(m, setup, &mut rng)?;
        let d = quadratic_forms_sample(m, setup, &n, &mut rng)?.deviations();
        Ok([d[0], d[1], d[2]])
    })
}

/// Sizes and trial counts for a full run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuiteConfig {
    pub seed: u64,
    pub exact_size: usize,
    pub exact_draws: usize,
    pub trace_sizes: Vec<usize>,
    pub trace_trials: usize,
    pub rank1_sizes: Vec<usize>,
    pub free_sizes: Vec<usize>,
    pub quadratic_sizes: Vec<usize>,
    pub quadratic_trials: usize,
    pub trials: usize,
    pub q0: f64,
}

impl Default for SuiteConfig {
    fn default() -> Self {
        Self {
            seed: 1,
            exact_size: 64,
            exact_draws: 20,
            trace_sizes: vec![64, 128, 256, 512, 1024, 2048, 4096],
            trace_trials: 200,
            rank1_sizes: vec![32, 64, 128, 256],
            free_sizes: vec![64, 128, 256, 512, 1024, 2048, 4096],
            quadratic_sizes: vec![128, 256, 512, 1024],
            quadratic_trials: 100,
            trials: 200,
            q0: 0.9,
        }
    }
}

/// Outcome of [`run_suite`].
#[derive(Debug, Clone, PartialEq)]
pub struct SuiteReport {
    pub inversion_max_deviation: f64,
    pub resolvent_max_deviation: f64,
    pub rank1_violations: usize,
    pub records: Vec<ConvergenceRecord>,
    /// Median deviations at the largest quadratic-form size.
    pub quadratic_deviations: [f64; 5],
}

impl SuiteReport {
    pub fn window_for(name: &str) -> (f64, f64) {
        match name {
            "rank1" => RANK1_SLOPE_WINDOW,
            "free-probability" => FREE_SLOPE_WINDOW,
            n if n.starts_with("quadratic") => QUADRATIC_SLOPE_WINDOW,
            _ => TRACE_SLOPE_WINDOW,
        }
    }

    pub fn passed(&self) -> bool {
        self.inversion_max_deviation <= EXACT_TOLERANCE
            && self.resolvent_max_deviation <= EXACT_TOLERANCE
            && self.rank1_violations == 0
            && self.records.iter().all(|r| r.slope_within(Self::window_for(&r.name)))
            && self.quadratic_deviations[..3].iter().all(|d| *d <= 0.05)
    }
}

pub fn run_suite(cfg: &SuiteConfig) -> Result<SuiteReport> {
    let exact = |f: fn(usize, u64, usize) -> Result<f64>| -> Result<f64> {
        let v: Result<Vec<f64>> = (0..cfg.exact_draws)
            .into_par_iter()
            .map(|t| f(cfg.exact_size, cfg.seed, t))
            .collect();
        Ok(v?.into_iter().fold(0.0, f64::max))
    };
    let inversion_max_deviation = exact(check_matrix_inversion_identity)?;
    let resolvent_max_deviation = exact(check_resolvent_identity)?;
    let rank1_violations = rank1_bound_violations(128, 1000, cfg.seed)?;
    let mut records = check_trace_lemma(&cfg.trace_sizes, cfg.trace_trials, cfg.seed)?;
    records.push(check_rank1_perturbation(&cfg.rank1_sizes, cfg.trials, cfg.seed)?);
    records.push(check_free_probability_traces(&cfg.free_sizes, cfg.trials, 1, cfg.seed)?);
    let setup = QuadraticSetup::new(cfg.q0);
    records.extend(check_lemma9_convergence(&cfg.quadratic_sizes, &setup, cfg.quadratic_trials, cfg.seed)?);
    let largest = *cfg.quadratic_sizes.last().ok_or_else(|| Error::config("quadratic_sizes", "empty"))?;
    let quadratic_deviations = check_lemma9_quadratic_forms(largest, &setup, cfg.quadratic_trials, cfg.seed)?;
    Ok(SuiteReport {
        inversion_max_deviation,
        resolvent_max_deviation,
        rank1_violations,
        records,
        quadratic_deviations,
    })
}
