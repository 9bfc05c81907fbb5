//! Solutions of `W' = W² + C`, `W(0) = B`.
//!
//! The substitution `W = −Z·Y⁻¹` with `Y' = Z` turns the Riccati equation into
//! the linear system `Y'' = −C·Y`, `Y(0) = I`, `Y'(0) = −B`, so
//!
//! ```text
//! Y = Sₑ − Sₒ·B,   Z = −Sₑ·B − Sₒ·C,
//! Sₑ = Σ (−1)ⁿ t²ⁿ Cⁿ / (2n)!,   Sₒ = Σ (−1)ⁿ t²ⁿ⁺¹ Cⁿ / (2n+1)!.
//! ```
//!
//! `W` exists exactly as long as `Y` stays invertible.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::spectral::{
    eigh, max_abs, mode_class, solve_linear, ModeClass, SpectralError, SymmetricMatrix,
    DEFAULT_EIG_TOL, ZERO_EIG_REL,
};

/// Largest `‖C‖·t²` the power series is trusted with.
pub const SERIES_RANGE: f64 = 400.0;
pub const MAX_TERMS: usize = 500;
const BISECTION_ITERS: usize = 200;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RiccatiError {
    #[error("Y(t) is singular at t = {t}: the solution has blown up")]
    SingularY { t: f64 },
    #[error("mode {mode} blows up at t = {t_star} (requested t = {t})")]
    ModeSingular { mode: usize, t_star: f64, t: f64 },
    #[error("series out of range: ‖C‖·t² = {norm_t2:.1} > {SERIES_RANGE} and the inputs are not symmetric")]
    OutOfRange { norm_t2: f64 },
    #[error("time must be finite and non-negative, got {0}")]
    NegativeTime(f64),
    #[error("series did not reach tolerance within {MAX_TERMS} terms (bound {bound:e})")]
    Truncation { bound: f64 },
    #[error(transparent)]
    Spectral(#[from] SpectralError),
}

fn inf_norm(m: &DMatrix<f64>) -> f64 {
    m.row_iter()
        .map(|r| r.iter().map(|x| x.abs()).sum::<f64>())
        .fold(0.0, f64::max)
}

fn check_time(t: f64) -> Result<(), RiccatiError> {
    if t.is_finite() && t >= 0.0 {
        Ok(())
    } else {
        Err(RiccatiError::NegativeTime(t))
    }
}

fn check_square(b: &DMatrix<f64>, c: &DMatrix<f64>) -> Result<usize, RiccatiError> {
    for m in [b, c] {
        if m.nrows() != m.ncols() || m.nrows() == 0 {
            return Err(SpectralError::NotSquare {
                rows: m.nrows(),
                cols: m.ncols(),
            }
            .into());
        }
    }
    if b.nrows() != c.nrows() {
        return Err(SpectralError::DimensionMismatch {
            left: b.nrows(),
            right: c.nrows(),
        }
        .into());
    }
    Ok(b.nrows())
}

/// `W = −Z·Y⁻¹`, computed as `Wᵀ = Y⁻ᵀ·(−Zᵀ)`.
fn w_from_yz(y: &DMatrix<f64>, z: &DMatrix<f64>, t: f64) -> Result<DMatrix<f64>, RiccatiError> {
    match solve_linear(&y.transpose(), &(-z.transpose())) {
        Ok(wt) => Ok(wt.transpose()),
        Err(SpectralError::Singular { .. }) => Err(RiccatiError::SingularY { t }),
        Err(e) => Err(e.into()),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeriesSolution {
    pub y: DMatrix<f64>,
    pub z: DMatrix<f64>,
    pub w: DMatrix<f64>,
    pub terms_used: usize,
    /// Bound on the ∞-norm of the neglected remainder of `Y` and `Z`.
    pub truncation_error_bound: f64,
    /// Set when `t` was beyond the series range and the symmetric closed
    /// form produced the result instead.
    pub deferred: bool,
}

/// Evaluates the power series for `Y` and `Z` at `t`.
///
/// Terms are added until the last one is below `tol·(1 + |partial sum|)` and
/// the factorial tail bound certifies the remainder below the same level.
/// Past `‖C‖·t² > 400` symmetric inputs are handed to
/// [`symmetric_closed_form`]; other inputs are refused.
pub fn series_solve(
    b: &DMatrix<f64>,
    c: &DMatrix<f64>,
    t: f64,
    tol: f64,
) -> Result<SeriesSolution, RiccatiError> {
    let n = check_square(b, c)?;
    check_time(t)?;
    let nb = inf_norm(b);
    let nc = inf_norm(c);
    let x = nc * t * t;
    if x > SERIES_RANGE {
        return defer_to_closed_form(b, c, t, x);
    }

    // p = (−1)ᵏ t²ᵏ Cᵏ/(2k)!, q = p·t/(2k+1); e and o bound their norms.
    let mut p = DMatrix::<f64>::identity(n, n);
    let mut se = p.clone();
    let mut so = p.scale(t);
    let step = c.scale(-t * t);
    let mut e = 1.0_f64;
    let mut bound = f64::INFINITY;
    let mut converged = false;
    let mut k = 0;
    while k < MAX_TERMS {
        let denom = ((2 * k + 1) * (2 * k + 2)) as f64;
        p = &p * &step / denom;
        e *= x / denom;
        k += 1;
        let q = p.scale(t / (2 * k + 1) as f64);
        se += &p;
        so += &q;

        let last = max_abs(&p).max(max_abs(&q)) * (1.0 + nb + nc);
        let scale = 1.0 + max_abs(&se).max(max_abs(&so)) * (1.0 + nb + nc);
        // Tail beyond k: ratio of successive terms is at most ratio < 1.
        let ratio = x / (((2 * k + 3) * (2 * k + 4)) as f64);
        if ratio < 1.0 {
            let next_e = e * x / (((2 * k + 1) * (2 * k + 2)) as f64);
            let next_o = next_e * t / (2 * k + 3) as f64;
            let re = next_e / (1.0 - ratio);
            let ro = next_o / (1.0 - ratio);
            bound = (re + ro * nb).max(re * nb + ro * nc);
            if last < tol * scale && bound < tol * scale {
                converged = true;
                break;
            }
        }
    }
    if !converged {
        return Err(RiccatiError::Truncation { bound });
    }

    let y = &se - &so * b;
    let z = -(&se * b) - &so * c;
    let w = if t == 0.0 {
        b.clone()
    } else {
        w_from_yz(&y, &z, t)?
    };
    Ok(SeriesSolution {
        y,
        z,
        w,
        terms_used: k + 1,
        truncation_error_bound: bound,
        deferred: false,
    })
}

fn defer_to_closed_form(
    b: &DMatrix<f64>,
    c: &DMatrix<f64>,
    t: f64,
    x: f64,
) -> Result<SeriesSolution, RiccatiError> {
    let symmetric = |m: &DMatrix<f64>| max_abs(&(m - m.transpose())) <= 1e-12 * max_abs(m).max(1.0);
    if !(symmetric(b) && symmetric(c)) {
        return Err(RiccatiError::OutOfRange { norm_t2: x });
    }
    let b = SymmetricMatrix::new(b.clone())?;
    let cs = CSpectrum::from_c(&SymmetricMatrix::new(c.clone())?)?;
    let (y, z) = cs.yz(&b, t);
    let w = w_from_yz(&y, &z, t)?;
    Ok(SeriesSolution {
        y,
        z,
        w,
        terms_used: 0,
        truncation_error_bound: 0.0,
        deferred: true,
    })
}

/// Spectrum of `C` split into `a²` (positive), `−d²` (negative) and zero
/// classes. Columns of `u` follow that order: positive, negative, zero.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CSpectrum {
    pub u: DMatrix<f64>,
    pub pos: Vec<f64>,
    pub neg: Vec<f64>,
    pub zero_count: usize,
}

impl CSpectrum {
    pub fn from_c(c: &SymmetricMatrix) -> Result<Self, RiccatiError> {
        let dec = eigh(c, DEFAULT_EIG_TOL)?;
        let zero_tol = ZERO_EIG_REL * max_abs(c);
        let mut order: Vec<(ModeClass, usize)> = dec
            .eigenvalues
            .iter()
            .enumerate()
            .map(|(k, &l)| (mode_class(l, zero_tol), k))
            .collect();
        // Stable: keeps descending eigenvalue order inside each class.
        order.sort_by_key(|&(class, _)| class);
        let n = c.dim();
        let u = DMatrix::from_fn(n, n, |r, k| dec.u[(r, order[k].1)]);
        let mut out = Self {
            u,
            pos: Vec::new(),
            neg: Vec::new(),
            zero_count: 0,
        };
        for &(class, k) in &order {
            let l = dec.eigenvalues[k];
            match class {
                ModeClass::Positive => out.pos.push(l.sqrt()),
                ModeClass::Negative => out.neg.push((-l).sqrt()),
                ModeClass::Zero => out.zero_count += 1,
            }
        }
        Ok(out)
    }

    pub fn dim(&self) -> usize {
        self.u.nrows()
    }

    /// Eigenvalues of `C` in column order: `a²…, −d²…, 0…`.
    pub fn diag_c(&self) -> Vec<f64> {
        self.pos
            .iter()
            .map(|a| a * a)
            .chain(self.neg.iter().map(|d| -d * d))
            .chain(std::iter::repeat_n(0.0, self.zero_count))
            .collect()
    }

    /// The diagonal factors `D₁ = diag(cos aᵢt, cosh dⱼt, 1)`,
    /// `D₂ = diag(sin aᵢt/aᵢ, sinh dⱼt/dⱼ, t)` and
    /// `D₃ = diag(−aᵢ sin aᵢt, dⱼ sinh dⱼt, 0)`.
    pub fn d_factors(&self, t: f64) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
        let mut d1 = Vec::with_capacity(self.dim());
        let mut d2 = Vec::with_capacity(self.dim());
        let mut d3 = Vec::with_capacity(self.dim());
        for &a in &self.pos {
            let (s, c) = (a * t).sin_cos();
            d1.push(c);
            d2.push(s / a);
            d3.push(-a * s);
        }
        for &d in &self.neg {
            let (s, c) = ((d * t).sinh(), (d * t).cosh());
            d1.push(c);
            d2.push(s / d);
            d3.push(d * s);
        }
        for _ in 0..self.zero_count {
            d1.push(1.0);
            d2.push(t);
            d3.push(0.0);
        }
        (d1, d2, d3)
    }

    /// `UᵀYU` and `UᵀZU`.
    fn yz_rotated(&self, b: &SymmetricMatrix, t: f64) -> (DMatrix<f64>, DMatrix<f64>) {
        let bt = self.u.transpose() * b.as_matrix() * &self.u;
        let (d1, d2, d3) = self.d_factors(t);
        let n = self.dim();
        let delta = |i: usize, j: usize, d: &[f64]| if i == j { d[i] } else { 0.0 };
        let yt = DMatrix::from_fn(n, n, |i, j| delta(i, j, &d1) - d2[i] * bt[(i, j)]);
        let zt = DMatrix::from_fn(n, n, |i, j| delta(i, j, &d3) - d1[i] * bt[(i, j)]);
        (yt, zt)
    }

    /// `Y` and `Z` in the original basis.
    fn yz(&self, b: &SymmetricMatrix, t: f64) -> (DMatrix<f64>, DMatrix<f64>) {
        let (yt, zt) = self.yz_rotated(b, t);
        (
            &self.u * yt * self.u.transpose(),
            &self.u * zt * self.u.transpose(),
        )
    }
}

/// `W(t)` for symmetric `C` through `UᵀYU = D₁ − D₂·UᵀBU` and
/// `UᵀZU = D₃ − D₁·UᵀBU`. `B` need not commute with `C`.
pub fn symmetric_closed_form(
    b: &SymmetricMatrix,
    cs: &CSpectrum,
    t: f64,
) -> Result<DMatrix<f64>, RiccatiError> {
    check_time(t)?;
    if b.dim() != cs.dim() {
        return Err(SpectralError::DimensionMismatch {
            left: b.dim(),
            right: cs.dim(),
        }
        .into());
    }
    if t == 0.0 {
        return Ok(b.as_matrix().clone());
    }
    let (yt, zt) = cs.yz_rotated(b, t);
    let wt = w_from_yz(&yt, &zt, t)?;
    Ok(&cs.u * wt * cs.u.transpose())
}

/// `UᵀYU` with each hyperbolic row divided by `cosh(dt)`. Row scaling
/// leaves the singular set alone and keeps large `t` from overflowing.
fn y_rows_scaled(cs: &CSpectrum, bt: &DMatrix<f64>, t: f64) -> DMatrix<f64> {
    let n = cs.dim();
    let mut d1 = Vec::with_capacity(n);
    let mut d2 = Vec::with_capacity(n);
    for &a in &cs.pos {
        let (s, c) = (a * t).sin_cos();
        d1.push(c);
        d2.push(s / a);
    }
    for &d in &cs.neg {
        d1.push(1.0);
        d2.push((d * t).tanh() / d);
    }
    for _ in 0..cs.zero_count {
        d1.push(1.0);
        d2.push(t);
    }
    DMatrix::from_fn(
        n,
        n,
        |i, j| if i == j { d1[i] } else { 0.0 } - d2[i] * bt[(i, j)],
    )
}

/// Relative size of a singular `Y` at which a touch counts as blow-up.
const TOUCH_TOL: f64 = 1e-9;

/// First time in `(0, horizon]` at which `Y` turns singular, which is where
/// the solution through `W(0) = B` ceases to exist. Works for any symmetric
/// `B`, commuting with `C` or not. Sign changes of `det Y` are bisected;
/// local minima of the smallest singular value are refined by golden
/// section to catch even-multiplicity touches.
pub fn first_singular_time(
    b: &SymmetricMatrix,
    cs: &CSpectrum,
    horizon: f64,
) -> Result<Option<f64>, RiccatiError> {
    check_time(horizon)?;
    if b.dim() != cs.dim() {
        return Err(SpectralError::DimensionMismatch {
            left: b.dim(),
            right: cs.dim(),
        }
        .into());
    }
    if horizon == 0.0 || b.dim() == 0 {
        return Ok(None);
    }
    let bt = cs.u.transpose() * b.as_matrix() * &cs.u;
    let y = |t: f64| y_rows_scaled(cs, &bt, t);
    let det = |t: f64| y(t).determinant();
    let rel_smin = |t: f64| {
        let sv = y(t).singular_values();
        sv.min() / sv.max().max(1.0)
    };
    let freq = cs.pos.iter().chain(&cs.neg).fold(0.0_f64, |m, &x| m.max(x))
        + max_abs(&bt) * b.dim() as f64
        + 1.0;
    let steps = ((horizon * freq * 64.0).ceil() as usize).clamp(256, 200_000);
    let h = horizon / steps as f64;

    let bisect = |mut lo: f64, mut hi: f64| {
        let d_lo = det(lo).signum();
        for _ in 0..BISECTION_ITERS {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if det(mid).signum() == d_lo {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    };
    let golden = |mut lo: f64, mut hi: f64| {
        let r = 0.5 * (5f64.sqrt() - 1.0);
        let (mut x1, mut x2) = (hi - r * (hi - lo), lo + r * (hi - lo));
        let (mut f1, mut f2) = (rel_smin(x1), rel_smin(x2));
        for _ in 0..BISECTION_ITERS {
            if hi - lo <= 1e-15 * hi {
                break;
            }
            if f1 <= f2 {
                hi = x2;
                (x2, f2) = (x1, f1);
                x1 = hi - r * (hi - lo);
                f1 = rel_smin(x1);
            } else {
                lo = x1;
                (x1, f1) = (x2, f2);
                x2 = lo + r * (hi - lo);
                f2 = rel_smin(x2);
            }
        }
        if f1 <= f2 {
            (x1, f1)
        } else {
            (x2, f2)
        }
    };

    let mut prev_det = det(0.0);
    let mut sig = [rel_smin(0.0), rel_smin(0.0)];
    for k in 1..=steps {
        let t = if k == steps { horizon } else { k as f64 * h };
        let d = det(t);
        let s = rel_smin(t);
        if k >= 2 && sig[1] <= sig[0] && sig[1] <= s {
            let (tm, fm) = golden(t - 2.0 * h, t);
            if fm <= TOUCH_TOL {
                return Ok(Some(tm));
            }
        }
        if d == 0.0 || d.signum() != prev_det.signum() {
            return Ok(Some(if d == 0.0 { t } else { bisect(t - h, t) }));
        }
        if k == steps && s <= TOUCH_TOL {
            return Ok(Some(t));
        }
        prev_det = d;
        sig = [sig[1], s];
    }
    Ok(None)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BlowupCase {
    Trig,
    Hyperbolic,
    Rational,
    None,
}

/// One diagonal mode of the commuting solution.
#[derive(Debug, Clone, Copy, PartialEq)]
enum Mode {
    /// `c = a²`, `b = λ`.
    Trig { a: f64, lambda: f64 },
    /// `c = −d²`, `b = μ`.
    Hyperbolic { d: f64, mu: f64 },
    /// `c = 0`, `b = δ`.
    Rational { delta: f64 },
}

impl Mode {
    fn classify(b: f64, c: f64, zero_tol: f64) -> Self {
        match mode_class(c, zero_tol) {
            ModeClass::Positive => Mode::Trig {
                a: c.sqrt(),
                lambda: b,
            },
            ModeClass::Negative => Mode::Hyperbolic {
                d: (-c).sqrt(),
                mu: b,
            },
            ModeClass::Zero => Mode::Rational { delta: b },
        }
    }

    fn case(self) -> BlowupCase {
        match self {
            Mode::Trig { .. } => BlowupCase::Trig,
            Mode::Hyperbolic { .. } => BlowupCase::Hyperbolic,
            Mode::Rational { .. } => BlowupCase::Rational,
        }
    }

    fn value(self, t: f64) -> f64 {
        match self {
            Mode::Trig { a, lambda } => {
                let (s, c) = (a * t).sin_cos();
                (a * s + lambda * c) / (c - lambda / a * s)
            }
            Mode::Hyperbolic { d, mu } => {
                // Divided through by cosh(dt) so large t does not overflow.
                let th = (d * t).tanh();
                -(d * th - mu) / (1.0 - mu / d * th)
            }
            Mode::Rational { delta } => delta / (1.0 - t * delta),
        }
    }

    fn t_star(self) -> Option<f64> {
        match self {
            Mode::Trig { a, lambda } => {
                let den = |t: f64| (a * t).cos() - lambda / a * (a * t).sin();
                let (mut lo, mut hi) = (0.0, std::f64::consts::PI / a);
                for _ in 0..BISECTION_ITERS {
                    let mid = 0.5 * (lo + hi);
                    if mid <= lo || mid >= hi {
                        break;
                    }
                    if den(mid) > 0.0 {
                        lo = mid;
                    } else {
                        hi = mid;
                    }
                }
                Some(0.5 * (lo + hi))
            }
            Mode::Hyperbolic { d, mu } => (mu > d).then(|| (d / mu).atanh() / d),
            Mode::Rational { delta } => (delta > 0.0).then(|| 1.0 / delta),
        }
    }

    /// Value of the mode as `t → ∞` for modes that never blow up,
    /// evaluated from the formula in `e = exp(−2dt)` at `dt = 50`.
    fn limit(self) -> Option<f64> {
        match self {
            Mode::Trig { .. } => None,
            Mode::Hyperbolic { d, mu } if mu <= d => {
                let e = (-100.0f64).exp();
                let num = (mu - d) + e * (d + mu);
                let den = (1.0 - mu / d) + e * (1.0 + mu / d);
                Some(num / den)
            }
            Mode::Hyperbolic { .. } => None,
            Mode::Rational { delta } if delta <= 0.0 => Some(0.0),
            Mode::Rational { .. } => None,
        }
    }
}

fn modes(diag_b: &[f64], diag_c: &[f64]) -> Vec<Mode> {
    let scale = diag_c.iter().fold(0.0_f64, |m, x| m.max(x.abs()));
    let zero_tol = ZERO_EIG_REL * scale;
    diag_b
        .iter()
        .zip(diag_c)
        .map(|(&b, &c)| Mode::classify(b, c, zero_tol))
        .collect()
}

/// `W(t) = u·diag(fᵢ(t))·uᵀ` for commuting `B` and `C` given in a common
/// eigenbasis. Each `fᵢ` is the scalar solution of its mode.
pub fn commuting_closed_form(
    diag_b: &[f64],
    diag_c: &[f64],
    u: &DMatrix<f64>,
    t: f64,
) -> Result<DMatrix<f64>, RiccatiError> {
    check_time(t)?;
    let n = diag_b.len();
    if diag_c.len() != n || u.nrows() != n || u.ncols() != n {
        return Err(SpectralError::DimensionMismatch {
            left: n,
            right: diag_c.len().max(u.nrows()),
        }
        .into());
    }
    let mut f = Vec::with_capacity(n);
    for (i, mode) in modes(diag_b, diag_c).into_iter().enumerate() {
        if let Some(t_star) = mode.t_star() {
            if t >= t_star {
                return Err(RiccatiError::ModeSingular { mode: i, t_star, t });
            }
        }
        f.push(if t == 0.0 { diag_b[i] } else { mode.value(t) });
    }
    Ok(u * DMatrix::from_diagonal(&DVector::from_vec(f)) * u.transpose())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModePrediction {
    pub case: BlowupCase,
    pub blows_up: bool,
    pub t_star: f64,
    /// Limit as `t → ∞` for modes that stay bounded.
    pub finite_limit: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlowupPrediction {
    pub blows_up: bool,
    /// `+∞` when no mode blows up.
    pub t_star: f64,
    pub case: BlowupCase,
    pub mode_index: Option<usize>,
    pub modes: Vec<ModePrediction>,
}

/// Blow-up time of every mode and the earliest over all of them. Ties go
/// to the lowest mode index.
pub fn predict_blowup(diag_b: &[f64], diag_c: &[f64]) -> BlowupPrediction {
    let table: Vec<ModePrediction> = modes(diag_b, diag_c)
        .into_iter()
        .map(|mode| {
            let t_star = mode.t_star();
            ModePrediction {
                case: mode.case(),
                blows_up: t_star.is_some(),
                t_star: t_star.unwrap_or(f64::INFINITY),
                finite_limit: mode.limit(),
            }
        })
        .collect();
    let mut first: Option<usize> = None;
    for (i, m) in table.iter().enumerate() {
        if m.blows_up && first.is_none_or(|f| m.t_star < table[f].t_star) {
            first = Some(i);
        }
    }
    match first {
        Some(i) => BlowupPrediction {
            blows_up: true,
            t_star: table[i].t_star,
            case: table[i].case,
            mode_index: Some(i),
            modes: table,
        },
        None => BlowupPrediction {
            blows_up: false,
            t_star: f64::INFINITY,
            case: BlowupCase::None,
            mode_index: None,
            modes: table,
        },
    }
}

/// `C` together with the rank check on `C + W₀² = v₀v₀ᵀ`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelC {
    pub c: SymmetricMatrix,
    /// Largest singular value of `C + W₀²` once the `v₀` direction is
    /// projected out.
    pub rank_residual: f64,
    pub rank_one: bool,
}

/// `C = v₀v₀ᵀ − W₀W₀ᵀ`, the conserved quantity of the symmetric dynamics.
pub fn model_c(v0: &DVector<f64>, w0: &SymmetricMatrix) -> Result<ModelC, RiccatiError> {
    let n = w0.dim();
    if v0.len() != n {
        return Err(SpectralError::DimensionMismatch {
            left: v0.len(),
            right: n,
        }
        .into());
    }
    let w = w0.as_matrix();
    let w2 = w * w.transpose();
    let c = SymmetricMatrix::new(v0 * v0.transpose() - &w2)?;

    let m = c.as_matrix() + &w2;
    let norm_sq = v0.norm_squared();
    let mut p = DMatrix::<f64>::identity(n, n);
    if norm_sq > 0.0 {
        p -= v0 * v0.transpose() / norm_sq;
    }
    let deflated = SymmetricMatrix::new(&p * m * &p)?;
    let rank_residual = eigh(&deflated, DEFAULT_EIG_TOL)?
        .eigenvalues
        .iter()
        .fold(0.0_f64, |acc, l| acc.max(l.abs()));
    // Cancellation in C + W₀² leaves rounding of order ε·‖W₀‖².
    let floor = 1e-10 * norm_sq + 64.0 * f64::EPSILON * n as f64 * max_abs(&w2);
    Ok(ModelC {
        c,
        rank_residual,
        rank_one: rank_residual <= floor,
    })
}
