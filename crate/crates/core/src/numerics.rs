//! Scalar and planar numerical kernels: bracketing, golden-section
//! maximization, bisection and a damped Newton solver for 2-D systems.

use crate::error::{Error, Result};

/// Tolerances and limits shared by the search routines.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SearchConfig {
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub max_iter: usize,
    /// Geometric factor used when expanding a bracket.
    pub bracket_growth: f64,
    /// First probe point of a bracket expansion, in Watts.
    pub bracket_seed: f64,
}

impl Default for SearchConfig {
    fn default() -> Self {
        Self {
            rel_tol: 1e-12,
            abs_tol: 1e-10,
            max_iter: 200,
            bracket_growth: 2.0,
            bracket_seed: 1.0,
        }
    }
}

impl SearchConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.rel_tol > 0.0) {
            return Err(Error::invalid("rel_tol", "must be > 0"));
        }
        if !(self.abs_tol > 0.0) {
            return Err(Error::invalid("abs_tol", "must be > 0"));
        }
        if self.max_iter < 1 {
            return Err(Error::invalid("max_iter", "must be >= 1"));
        }
        if !(self.bracket_growth > 1.0) {
            return Err(Error::invalid("bracket_growth", "must be > 1"));
        }
        if !(self.bracket_seed > 0.0) {
            return Err(Error::invalid("bracket_seed", "must be > 0"));
        }
        Ok(())
    }

    fn tol_at(&self, x: f64) -> f64 {
        self.abs_tol.max(self.rel_tol * x.abs())
    }
}

fn eval<F: Fn(f64) -> f64>(f: &F, x: f64) -> Result<f64> {
    let y = f(x);
    if y.is_finite() {
        Ok(y)
    } else {
        Err(Error::NonFinite { x })
    }
}

// 1/phi and 1/phi^2
const INV_PHI: f64 = 0.618_033_988_749_894_9;
const INV_PHI2: f64 = 0.381_966_011_250_105_1;

/// Golden-section search for the maximum of a unimodal `f` on `[lo, hi]`.
///
/// The returned point is never worse than either endpoint, so monotone
/// functions yield the better boundary.
pub fn maximize_unimodal<F: Fn(f64) -> f64>(f: F, lo: f64, hi: f64, cfg: &SearchConfig) -> Result<(f64, f64)> {
    if !(lo <= hi) {
        return Err(Error::invalid("interval", format!("lo = {lo} must not exceed hi = {hi}")));
    }
    let f_lo = eval(&f, lo)?;
    let f_hi = eval(&f, hi)?;

    let (mut a, mut b) = (lo, hi);
    let mut c = a + INV_PHI2 * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let mut fc = eval(&f, c)?;
    let mut fd = eval(&f, d)?;
    for _ in 0..cfg.max_iter {
        if b - a <= cfg.tol_at(0.5 * (a + b)) {
            break;
        }
        if fc >= fd {
            b = d;
            d = c;
            fd = fc;
            c = a + INV_PHI2 * (b - a);
            fc = eval(&f, c)?;
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INV_PHI * (b - a);
            fd = eval(&f, d)?;
        }
    }
    let (mut x, mut fx) = if fc >= fd { (c, fc) } else { (d, fd) };
    if f_lo > fx {
        x = lo;
        fx = f_lo;
    }
    if f_hi > fx {
        x = hi;
        fx = f_hi;
    }
    Ok((x, fx))
}

/// Brackets the interior maximum of a function that rises from `0+` and
/// eventually falls, by geometric expansion from `cfg.bracket_seed`.
///
/// The returned `(lo, hi)` contains a point whose value beats both ends.
pub fn bracket_above<F: Fn(f64) -> f64>(f: F, cfg: &SearchConfig) -> Result<(f64, f64)> {
    let g = cfg.bracket_growth;
    let mut mid = cfg.bracket_seed;
    let mut f_mid = eval(&f, mid)?;
    let up = mid * g;
    let f_up = eval(&f, up)?;
    if f_up > f_mid {
        let mut lo = mid;
        mid = up;
        f_mid = f_up;
        for _ in 0..cfg.max_iter {
            let next = mid * g;
            let f_next = eval(&f, next)?;
            if f_next < f_mid {
                return Ok((lo, next));
            }
            lo = mid;
            mid = next;
            f_mid = f_next;
        }
    } else {
        let mut hi = up;
        for _ in 0..cfg.max_iter {
            let next = mid / g;
            let f_next = eval(&f, next)?;
            if f_next < f_mid {
                return Ok((next, hi));
            }
            hi = mid;
            mid = next;
            f_mid = f_next;
        }
    }
    Err(Error::BracketFailure {
        iterations: cfg.max_iter,
    })
}

/// Bisection on a sign change of `f` over `[lo, hi]`.
pub fn bisect_root<F: Fn(f64) -> f64>(f: F, lo: f64, hi: f64, cfg: &SearchConfig) -> Result<f64> {
    let (mut a, mut b) = if lo <= hi { (lo, hi) } else { (hi, lo) };
    let mut fa = eval(&f, a)?;
    let fb = eval(&f, b)?;
    if fa == 0.0 {
        return Ok(a);
    }
    if fb == 0.0 {
        return Ok(b);
    }
    if fa.signum() == fb.signum() {
        return Err(Error::RootNotBracketed {
            lo: a,
            hi: b,
            f_lo: fa,
            f_hi: fb,
        });
    }
    for _ in 0..cfg.max_iter {
        let m = 0.5 * (a + b);
        if m <= a || m >= b || b - a <= cfg.tol_at(m) {
            break;
        }
        let fm = eval(&f, m)?;
        if fm == 0.0 {
            return Ok(m);
        }
        if fm.signum() == fa.signum() {
            a = m;
            fa = fm;
        } else {
            b = m;
        }
    }
    Ok(0.5 * (a + b))
}

/// Maximizes an energy-efficiency style objective over `(0, inf)`.
///
/// `stationarity` must share the sign of `f'`; when supplied it refines the
/// golden-section estimate by bisection inside the bracket.
pub(crate) fn argmax_positive<F, S>(f: F, stationarity: Option<S>, cfg: &SearchConfig) -> Result<f64>
where
    F: Fn(f64) -> f64,
    S: Fn(f64) -> f64,
{
    let (lo, hi) = bracket_above(&f, cfg)?;
    let (x, fx) = maximize_unimodal(&f, lo, hi, cfg)?;
    let Some(s) = stationarity else {
        return Ok(x);
    };
    match bisect_root(s, lo, hi, cfg) {
        Ok(r) if eval(&f, r)? >= fx - 1e-14 * fx.abs().max(1.0) => Ok(r),
        _ => Ok(x),
    }
}

/// Radius (max-norm) under which two roots are considered the same.
pub const ROOT_DEDUP_RADIUS: f64 = 1e-6;
/// Largest residual max-norm accepted for a converged root.
pub const ROOT_ACCEPT_RESIDUAL: f64 = 1e-8;

fn norm_inf(v: [f64; 2]) -> f64 {
    v[0].abs().max(v[1].abs())
}

/// Damped Newton iterations with forward-difference Jacobians from every
/// seed. Returns the distinct converged roots; seeds that fail to converge
/// are dropped.
pub fn solve_stationary_2d<R>(residual: R, seeds: &[[f64; 2]], cfg: &SearchConfig) -> Vec<[f64; 2]>
where
    R: Fn([f64; 2]) -> [f64; 2],
{
    let mut roots: Vec<[f64; 2]> = Vec::new();
    for &seed in seeds {
        let Some(root) = newton_2d(&residual, seed, cfg) else {
            continue;
        };
        if !roots.iter().any(|r| norm_inf([r[0] - root[0], r[1] - root[1]]) < ROOT_DEDUP_RADIUS) {
            roots.push(root);
        }
    }
    roots
}

fn finite2(v: [f64; 2]) -> bool {
    v[0].is_finite() && v[1].is_finite()
}

fn newton_2d<R>(residual: &R, seed: [f64; 2], cfg: &SearchConfig) -> Option<[f64; 2]>
where
    R: Fn([f64; 2]) -> [f64; 2],
{
    let sqrt_eps = f64::EPSILON.sqrt();
    let mut x = seed;
    let mut r = residual(x);
    if !finite2(r) {
        return None;
    }
    for _ in 0..cfg.max_iter {
        if norm_inf(r) <= 1e-14 {
            break;
        }
        let mut jac = [[0.0; 2]; 2];
        for j in 0..2 {
            let h = sqrt_eps * x[j].abs().max(1.0);
            let mut xp = x;
            xp[j] += h;
            let rp = residual(xp);
            if !finite2(rp) {
                return None;
            }
            jac[0][j] = (rp[0] - r[0]) / h;
            jac[1][j] = (rp[1] - r[1]) / h;
        }
        let det = jac[0][0] * jac[1][1] - jac[0][1] * jac[1][0];
        if !det.is_finite() || det == 0.0 {
            break;
        }
        let dx = [
            -(jac[1][1] * r[0] - jac[0][1] * r[1]) / det,
            -(-jac[1][0] * r[0] + jac[0][0] * r[1]) / det,
        ];
        let r_norm = norm_inf(r);
        let mut t = 1.0;
        let mut accepted = None;
        while t > 1e-8 {
            let xn = [x[0] + t * dx[0], x[1] + t * dx[1]];
            let rn = residual(xn);
            if finite2(rn) && norm_inf(rn) < r_norm {
                accepted = Some((xn, rn));
                break;
            }
            t *= 0.5;
        }
        let Some((xn, rn)) = accepted else {
            break;
        };
        let step = norm_inf([xn[0] - x[0], xn[1] - x[1]]);
        x = xn;
        r = rn;
        if step <= 4.0 * f64::EPSILON * norm_inf(x).max(1.0) {
            break;
        }
    }
    (norm_inf(r) <= ROOT_ACCEPT_RESIDUAL).then_some(x)
}
