//! Mixed transmission: time sharing between direct-link and relay-assisted
//! transmission under a joint budget
//! `theta * P_A + (1 - theta) * P_B = P_0`.
//!
//! The optimum traces the upper concave envelope of `max(C_D, C_R)`. Where
//! the envelope leaves the curves it runs along a common tangent, so the
//! whole solution reduces to finding common tangents `(a, b)` with
//! `a` on `C_D` and `b` on `C_R`:
//!
//! ```text
//! C_D'(a) = C_R'(b)
//! C_D'(a) (a - b) = C_D(a) - C_R(b)
//! ```
//!
//! Zero, one or two tangents give the three structural cases.

use std::fmt;

use crate::dlt::DltSolver;
use crate::error::{Error, Result};
use crate::model::{ChannelGains, CircuitModel, ModeAllocation};
use crate::numerics::{solve_stationary_2d, SearchConfig};
use crate::rat_dl::RatDlSolver;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum MixedCase {
    /// `C_D` dominates; never use the relay.
    Case1,
    /// Relay at low budgets, direct link at high budgets.
    Case2,
    /// Direct link, then relay, then direct link again.
    Case3,
}

impl MixedCase {
    pub fn label(&self) -> &'static str {
        match self {
            MixedCase::Case1 => "CASE1",
            MixedCase::Case2 => "CASE2",
            MixedCase::Case3 => "CASE3",
        }
    }
}

impl fmt::Display for MixedCase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

/// A common tangent touching `C_D` at `a` and `C_R` at `b`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tangent {
    pub a: f64,
    pub b: f64,
}

impl Tangent {
    pub fn slope(&self, dlt: &DltSolver) -> f64 {
        dlt.derivative(self.a)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TangentStructure {
    pub case: MixedCase,
    /// Empty for `Case1`; `(t2, t1)` for `Case2`; `(t3, t4), (t6, t5)` for `Case3`.
    pub tangents: Vec<Tangent>,
    /// Upper end of the search window used to find the tangents.
    pub p_max: f64,
}

/// Which pure mode, if any, the mixed optimum reduces to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Winner {
    Dlt,
    RatDl,
    Mixed,
}

impl Winner {
    pub fn label(&self) -> &'static str {
        match self {
            Winner::Dlt => "DLT",
            Winner::RatDl => "RAT_DL",
            Winner::Mixed => "MT",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MixedSolution {
    pub p_0: f64,
    pub p_a_star: f64,
    pub p_b_star: f64,
    pub theta_star: f64,
    pub throughput: f64,
    pub case: MixedCase,
    pub relay_admissible: bool,
    /// Direct-link policy used during the `theta` share of slots.
    pub dlt_alloc: ModeAllocation,
    /// Relay policy used during the remaining share.
    pub rat_alloc: ModeAllocation,
}

impl MixedSolution {
    pub fn winner(&self) -> Winner {
        if self.theta_star >= 1.0 {
            Winner::Dlt
        } else if self.theta_star <= 0.0 {
            Winner::RatDl
        } else {
            Winner::Mixed
        }
    }
}

/// Upper hull of the points `(xs[i], ys[i])`, `xs` strictly increasing.
pub fn upper_concave_envelope(xs: &[f64], ys: &[f64]) -> Vec<(f64, f64)> {
    let mut hull: Vec<(f64, f64)> = Vec::with_capacity(xs.len());
    for (&x, &y) in xs.iter().zip(ys) {
        while hull.len() >= 2 {
            let (x1, y1) = hull[hull.len() - 2];
            let (x2, y2) = hull[hull.len() - 1];
            // drop the middle point when it lies on or below the chord
            if (y2 - y1) * (x - x1) <= (y - y1) * (x2 - x1) {
                hull.pop();
            } else {
                break;
            }
        }
        hull.push((x, y));
    }
    hull
}

/// Piecewise-linear evaluation of a hull; clamps outside its span.
pub fn eval_hull(hull: &[(f64, f64)], x: f64) -> f64 {
    let i = hull.partition_point(|p| p.0 < x);
    if i == 0 {
        return hull[0].1;
    }
    if i == hull.len() {
        return hull[hull.len() - 1].1;
    }
    let (x0, y0) = hull[i - 1];
    let (x1, y1) = hull[i];
    y0 + (y1 - y0) * (x - x0) / (x1 - x0)
}

/// Grid envelope of `max(C_D, C_R)` on a log-spaced grid over `(0, p_max]`.
fn grid_envelope(dlt: &DltSolver, rat: &RatDlSolver, p_max: f64, n: usize) -> Vec<(f64, f64)> {
    let lo: f64 = 1e-6;
    let r = (p_max / lo).ln() / (n - 1) as f64;
    let mut xs = vec![0.0];
    xs.extend((0..n).map(|i| lo * (r * i as f64).exp()));
    let ys: Vec<f64> = xs.iter().map(|&x| dlt.throughput(x).max(rat.throughput(x))).collect();
    upper_concave_envelope(&xs, &ys)
}

/// Search window large enough that both curves are in their logarithmic
/// regime with `C_D` above `C_R` and pulling away.
pub fn default_p_max(dlt: &DltSolver, rat: &RatDlSolver) -> f64 {
    let cm = rat.circuit();
    let base = 4.0 * (dlt.p_ee1() + cm.alpha_d + rat.p_ee2() + rat.p_ee3() + 2.0 * cm.alpha_r);
    let mut p = base / 4.0;
    while p < 1e12 && !(dlt.throughput(p) > rat.throughput(p) && dlt.derivative(p) >= rat.derivative(p)) {
        p *= 2.0;
    }
    base.max(4.0 * p)
}

fn tangents_from_roots(mut roots: Vec<[f64; 2]>, p_max: f64) -> Result<TangentStructure> {
    roots.retain(|r| (r[0] - r[1]).abs() > 1e-6);
    roots.sort_by(|x, y| x[0].total_cmp(&y[0]));
    let tangents: Vec<Tangent> = roots.iter().map(|r| Tangent { a: r[0], b: r[1] }).collect();
    let case = match tangents.as_slice() {
        [] => MixedCase::Case1,
        [t] => {
            if t.b >= t.a {
                return Err(Error::Inconsistency(format!(
                    "single tangent with relay point {} not below direct point {}",
                    t.b, t.a
                )));
            }
            MixedCase::Case2
        }
        [t1, t2] => {
            if !(t1.a < t1.b && t1.b < t2.b && t2.b < t2.a) {
                return Err(Error::Inconsistency(format!(
                    "two tangents out of order: ({}, {}), ({}, {})",
                    t1.a, t1.b, t2.a, t2.b
                )));
            }
            MixedCase::Case3
        }
        more => {
            return Err(Error::Inconsistency(format!("{} common tangents found, expected at most 2", more.len())));
        }
    };
    Ok(TangentStructure { case, tangents, p_max })
}

/// Point where a concave curve has slope `s`, for `s` below its initial slope.
fn point_with_slope<D: Fn(f64) -> f64>(deriv: D, s: f64) -> f64 {
    let mut hi = 1.0;
    while deriv(hi) > s && hi < 1e15 {
        hi *= 2.0;
    }
    let mut lo = 0.0;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if deriv(mid) > s {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Seeds from a scan over the common slope. A line of slope `s` touches
/// both curves exactly when their intercepts `C(x_s) - s x_s` coincide, so
/// sign changes of the intercept gap bracket every tangent, including
/// those the lattice misses where both curves are still linear.
fn slope_scan_seeds(dlt: &DltSolver, rat: &RatDlSolver, p_max: f64) -> Vec<[f64; 2]> {
    let s_hi = dlt.ee_max().min(rat.derivative(0.0)) * (1.0 - 1e-9);
    let s_lo = dlt.derivative(p_max).min(rat.derivative(p_max));
    if !(s_lo > 0.0 && s_lo < s_hi) {
        return Vec::new();
    }
    let touch = |s: f64| {
        let a = point_with_slope(|x| dlt.derivative(x), s);
        let b = point_with_slope(|x| rat.derivative(x), s);
        let gap = (dlt.throughput(a) - s * a) - (rat.throughput(b) - s * b);
        (a, b, gap)
    };
    let n = 400;
    let ratio = (s_hi / s_lo).ln();
    let mut seeds = Vec::new();
    let mut prev: Option<(f64, f64)> = None;
    for i in 0..=n {
        let s = s_lo * (ratio * i as f64 / n as f64).exp();
        let (_, _, gap) = touch(s);
        if let Some((s_prev, gap_prev)) = prev {
            if (gap > 0.0) != (gap_prev > 0.0) {
                let (mut lo, mut hi) = (s_prev, s);
                for _ in 0..100 {
                    let mid = 0.5 * (lo + hi);
                    if (touch(mid).2 > 0.0) == (gap_prev > 0.0) {
                        lo = mid;
                    } else {
                        hi = mid;
                    }
                }
                let (a, b, _) = touch(0.5 * (lo + hi));
                seeds.push([a, b]);
            }
        }
        prev = Some((s, gap));
    }
    seeds
}

fn find_tangents(dlt: &DltSolver, rat: &RatDlSolver, p_max: f64, cfg: &SearchConfig) -> Result<TangentStructure> {
    let residual = |x: [f64; 2]| {
        let (a, b) = (x[0], x[1]);
        if !(a > 0.0 && b > 0.0) {
            return [f64::NAN, f64::NAN];
        }
        let slope = dlt.derivative(a);
        [
            slope - rat.derivative(b),
            slope * (a - b) - (dlt.throughput(a) - rat.throughput(b)),
        ]
    };
    let lo: f64 = 1e-3;
    let axis: Vec<f64> = (0..8).map(|i| lo * (p_max / lo).powf(i as f64 / 7.0)).collect();
    let mut seeds: Vec<[f64; 2]> = axis.iter().flat_map(|&a| axis.iter().map(move |&b| [a, b])).collect();
    seeds.extend(slope_scan_seeds(dlt, rat, p_max));
    let roots = solve_stationary_2d(residual, &seeds, cfg);
    tangents_from_roots(roots, p_max)
}

/// Mixed-transmission solver for one channel/circuit pair. Construction
/// finds the tangent structure and checks it against a grid envelope.
#[derive(Debug, Clone)]
pub struct MixedSolver {
    dlt: DltSolver,
    rat: Option<RatDlSolver>,
    structure: TangentStructure,
}

impl MixedSolver {
    pub fn new(g: &ChannelGains, cm: &CircuitModel) -> Result<Self> {
        let dlt = DltSolver::new(g, cm)?;
        if !g.relay_admissible() {
            return Ok(Self {
                dlt,
                rat: None,
                structure: TangentStructure {
                    case: MixedCase::Case1,
                    tangents: Vec::new(),
                    p_max: 0.0,
                },
            });
        }
        let rat = RatDlSolver::new(g, cm)?;
        let p_max = default_p_max(&dlt, &rat);
        Self::from_parts(dlt, rat, p_max)
    }

    pub fn with_p_max(g: &ChannelGains, cm: &CircuitModel, p_max: f64) -> Result<Self> {
        let dlt = DltSolver::new(g, cm)?;
        let rat = RatDlSolver::new(g, cm)?;
        Self::from_parts(dlt, rat, p_max)
    }

    fn from_parts(dlt: DltSolver, rat: RatDlSolver, p_max: f64) -> Result<Self> {
        if !(p_max > 0.0) || !p_max.is_finite() {
            return Err(Error::invalid("p_max", format!("must be finite and > 0, got {p_max}")));
        }
        let structure = find_tangents(&dlt, &rat, p_max, &SearchConfig::default())?;
        let solver = Self {
            dlt,
            rat: Some(rat),
            structure,
        };
        solver.validate()?;
        Ok(solver)
    }

    /// Compares the tangent-based throughput with the grid envelope.
    fn validate(&self) -> Result<()> {
        let Some(rat) = &self.rat else {
            return Ok(());
        };
        let p_max = self.structure.p_max;
        let hull = grid_envelope(&self.dlt, rat, p_max, 6000);
        for i in 1..=256 {
            let p = p_max * i as f64 / 256.0;
            let mine = self.throughput(p);
            let grid = eval_hull(&hull, p);
            if (mine - grid).abs() > 1e-3 {
                return Err(Error::Inconsistency(format!(
                    "{} structure gives {mine} at P_0 = {p}, grid envelope gives {grid}",
                    self.structure.case
                )));
            }
        }
        Ok(())
    }

    pub fn structure(&self) -> &TangentStructure {
        &self.structure
    }

    pub fn case(&self) -> MixedCase {
        self.structure.case
    }

    pub fn relay_admissible(&self) -> bool {
        self.rat.is_some()
    }

    pub fn dlt(&self) -> &DltSolver {
        &self.dlt
    }

    pub fn rat(&self) -> Option<&RatDlSolver> {
        self.rat.as_ref()
    }

    /// Budget split `(P_A, P_B, theta)` for `p_0`.
    fn split(&self, p_0: f64) -> (f64, f64, f64) {
        const DLT: f64 = 1.0;
        const RAT: f64 = 0.0;
        if p_0 == 0.0 || self.rat.is_none() {
            return (p_0, 0.0, DLT);
        }
        let mix = |t: &Tangent| (t.a, t.b, (p_0 - t.b) / (t.a - t.b));
        match (self.structure.case, self.structure.tangents.as_slice()) {
            (MixedCase::Case2, [t]) => {
                if p_0 >= t.a {
                    (p_0, 0.0, DLT)
                } else if p_0 <= t.b {
                    (0.0, p_0, RAT)
                } else {
                    mix(t)
                }
            }
            (MixedCase::Case3, [lo, hi]) => {
                if p_0 <= lo.a || p_0 >= hi.a {
                    (p_0, 0.0, DLT)
                } else if p_0 >= lo.b && p_0 <= hi.b {
                    (0.0, p_0, RAT)
                } else if p_0 < lo.b {
                    mix(lo)
                } else {
                    mix(hi)
                }
            }
            _ => (p_0, 0.0, DLT),
        }
    }

    /// Average throughput `C_M(P_0)`.
    pub fn throughput(&self, p_0: f64) -> f64 {
        if p_0 < 0.0 {
            return f64::NAN;
        }
        let (p_a, p_b, theta) = self.split(p_0);
        let rat = |p: f64| self.rat.as_ref().map_or(0.0, |r| r.throughput(p));
        if theta >= 1.0 {
            self.dlt.throughput(p_a)
        } else if theta <= 0.0 {
            rat(p_b)
        } else {
            theta * self.dlt.throughput(p_a) + (1.0 - theta) * rat(p_b)
        }
    }

    pub fn solve(&self, p_0: f64) -> Result<MixedSolution> {
        if !(p_0 >= 0.0) || !p_0.is_finite() {
            return Err(Error::invalid("P_0", format!("budget must be finite and >= 0, got {p_0}")));
        }
        let (p_a, p_b, theta) = self.split(p_0);
        let dlt_alloc = if theta > 0.0 {
            self.dlt.solve(p_a)?.alloc
        } else {
            ModeAllocation::silent()
        };
        let rat_alloc = match &self.rat {
            Some(r) if theta < 1.0 => r.solve(p_b)?.alloc,
            _ => ModeAllocation::silent(),
        };
        let throughput = if theta >= 1.0 {
            dlt_alloc.throughput
        } else if theta <= 0.0 {
            rat_alloc.throughput
        } else {
            theta * dlt_alloc.throughput + (1.0 - theta) * rat_alloc.throughput
        };
        Ok(MixedSolution {
            p_0,
            p_a_star: p_a,
            p_b_star: p_b,
            theta_star: theta,
            throughput,
            case: self.structure.case,
            relay_admissible: self.rat.is_some(),
            dlt_alloc,
            rat_alloc,
        })
    }
}

pub fn classify_and_tangents(g: &ChannelGains, cm: &CircuitModel, p_max: f64) -> Result<TangentStructure> {
    g.require_relay_admissible()?;
    Ok(MixedSolver::with_p_max(g, cm, p_max)?.structure)
}

pub fn solve_mixed(p_0: f64, g: &ChannelGains, cm: &CircuitModel) -> Result<MixedSolution> {
    MixedSolver::new(g, cm)?.solve(p_0)
}

pub fn c_m(p_0: f64, g: &ChannelGains, cm: &CircuitModel) -> Result<f64> {
    Ok(solve_mixed(p_0, g, cm)?.throughput)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn reference_setup() -> (ChannelGains, CircuitModel) {
        (
            ChannelGains::new(1.0, 10.0, 3.0).unwrap(),
            CircuitModel::from_aggregates(0.2, 0.24, 0.18).unwrap(),
        )
    }

    #[test]
    fn hull_of_simple_points() {
        let xs = [0.0, 1.0, 2.0, 3.0];
        let ys = [0.0, 0.5, 2.0, 2.1];
        let hull = upper_concave_envelope(&xs, &ys);
        assert_eq!(hull, vec![(0.0, 0.0), (2.0, 2.0), (3.0, 2.1)]);
        assert!((eval_hull(&hull, 1.0) - 1.0).abs() < 1e-15);
        assert_eq!(eval_hull(&hull, 5.0), 2.1);
    }

    #[test]
    fn reference_setup_has_single_tangent() {
        let (g, cm) = reference_setup();
        let m = MixedSolver::new(&g, &cm).unwrap();
        assert_eq!(m.case(), MixedCase::Case2);
        let t = m.structure().tangents[0];
        assert!(t.b < t.a);
        let dlt = m.dlt();
        let rat = m.rat().unwrap();
        assert!((dlt.derivative(t.a) - rat.derivative(t.b)).abs() < 1e-6);
        let chord = (dlt.throughput(t.a) - rat.throughput(t.b)) / (t.a - t.b);
        assert!((chord - dlt.derivative(t.a)).abs() < 1e-6);
        assert!(t.a < m.structure().p_max);
    }

    #[test]
    fn low_budget_is_pure_relay() {
        let (g, cm) = reference_setup();
        let s = solve_mixed(0.5, &g, &cm).unwrap();
        assert_eq!(s.theta_star, 0.0);
        assert_eq!(s.winner(), Winner::RatDl);
        let cd = crate::dlt::c_d(0.5, &g, &cm).unwrap();
        assert!((s.throughput - cd - 0.3).abs() < 0.1);
        let s = solve_mixed(0.0, &g, &cm).unwrap();
        assert_eq!((s.throughput, s.theta_star), (0.0, 1.0));
        let s = solve_mixed(1024.0, &g, &cm).unwrap();
        assert_eq!(s.winner(), Winner::Dlt);
    }

    #[test]
    fn dominant_direct_link_is_case1() {
        let g = ChannelGains::new(1.0, 2.05, 0.5).unwrap();
        let cm = CircuitModel::from_aggregates(0.1, 1.5, 1.4).unwrap();
        let m = MixedSolver::new(&g, &cm).unwrap();
        let rat = m.rat().unwrap();
        for i in 1..=400 {
            let p = i as f64 * 0.1;
            assert!(m.dlt().throughput(p) >= rat.throughput(p));
        }
        assert_eq!(m.case(), MixedCase::Case1);
        assert!(m.structure().tangents.is_empty());
    }

    #[test]
    fn strong_relay_link_with_costly_relay_is_case3() {
        let g = ChannelGains::new(1.65, 6.95, 7.87).unwrap();
        let cm = CircuitModel::from_aggregates(0.098, 0.483, 0.483).unwrap();
        let m = MixedSolver::new(&g, &cm).unwrap();
        assert_eq!(m.case(), MixedCase::Case3);
        let [lo, hi] = m.structure().tangents[..] else { panic!() };
        assert!(lo.a < lo.b && lo.b < hi.b && hi.b < hi.a);
        let winners: Vec<Winner> = [0.3, 0.5 * (lo.a + lo.b), 0.5 * (lo.b + hi.b), 0.5 * (hi.b + hi.a), 2.0 * hi.a]
            .iter()
            .map(|&p| m.solve(p).unwrap().winner())
            .collect();
        use Winner::*;
        assert_eq!(winners, vec![Dlt, Mixed, RatDl, Mixed, Dlt]);
    }

    #[test]
    fn inadmissible_relay_falls_back_to_direct_link() {
        let g = ChannelGains::new(1.0, 1.0, 3.0).unwrap();
        let cm = CircuitModel::from_aggregates(0.2, 0.24, 0.18).unwrap();
        let s = solve_mixed(1.0, &g, &cm).unwrap();
        assert!(!s.relay_admissible);
        assert_eq!(s.theta_star, 1.0);
        assert!((s.throughput - crate::dlt::c_d(1.0, &g, &cm).unwrap()).abs() < 1e-15);
        assert!(matches!(classify_and_tangents(&g, &cm, 10.0), Err(Error::RelayInadmissible { .. })));
    }

    #[test]
    fn case_survives_unit_rescaling() {
        // scaling powers by k and gains by 1/k leaves every rate unchanged
        let (g, cm) = reference_setup();
        let k = 3.0;
        let g2 = ChannelGains::new(g.h_sd / k, g.h_sr / k, g.h_rd / k).unwrap();
        let cm2 = CircuitModel::from_aggregates(cm.alpha_d * k, cm.alpha_r * k, cm.alpha_e * k).unwrap();
        let m1 = MixedSolver::new(&g, &cm).unwrap();
        let m2 = MixedSolver::new(&g2, &cm2).unwrap();
        assert_eq!(m1.case(), m2.case());
        let (t1, t2) = (m1.structure().tangents[0], m2.structure().tangents[0]);
        assert!((t2.a / k - t1.a).abs() < 1e-6 && (t2.b / k - t1.b).abs() < 1e-6);
    }

    #[test]
    fn linear_on_tangent_segment() {
        let (g, cm) = reference_setup();
        let m = MixedSolver::new(&g, &cm).unwrap();
        let t = m.structure().tangents[0];
        let ys: Vec<f64> = (0..50).map(|i| m.throughput(t.b + (t.a - t.b) * (i as f64 + 0.5) / 50.0)).collect();
        for w in ys.windows(3) {
            assert!((w[2] - 2.0 * w[1] + w[0]).abs() <= 1e-9);
        }
    }

    #[test]
    fn out_of_order_roots_are_reported() {
        let err = tangents_from_roots(vec![[1.0, 2.0]], 10.0).unwrap_err();
        assert!(matches!(err, Error::Inconsistency(_)));
        let err = tangents_from_roots(vec![[1.0, 0.5], [3.0, 2.0]], 10.0).unwrap_err();
        assert!(matches!(err, Error::Inconsistency(_)));
        let err = tangents_from_roots(vec![[1.0, 0.5], [3.0, 2.0], [5.0, 4.0]], 10.0).unwrap_err();
        assert!(matches!(err, Error::Inconsistency(_)));
        let ok = tangents_from_roots(vec![[8.0, 5.0], [1.0, 2.0], [4.0, 4.0 + 1e-9]], 10.0).unwrap();
        assert_eq!(ok.case, MixedCase::Case3);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]
        #[test]
        fn split_is_budget_feasible_and_dominant(
            h_sd in 0.5f64..2.0,
            ratio in 2.0f64..10.0,
            h_rd in 0.5f64..10.0,
            a_d in 0.05f64..0.5,
            a_r in 0.05f64..0.5,
            p_0 in 0.0f64..3.0,
        ) {
            let g = ChannelGains::new(h_sd, h_sd * ratio, h_rd).unwrap();
            let cm = CircuitModel::from_aggregates(a_d, a_r, a_r).unwrap();
            let m = MixedSolver::new(&g, &cm).unwrap();
            let s = m.solve(p_0).unwrap();
            let spent = s.theta_star * s.p_a_star + (1.0 - s.theta_star) * s.p_b_star;
            prop_assert!((spent - p_0).abs() < 1e-9);
            prop_assert!((0.0..=1.0).contains(&s.theta_star));
            let floor = m.dlt().throughput(p_0).max(m.rat().unwrap().throughput(p_0));
            prop_assert!(s.throughput >= floor - 1e-9);
        }
    }
}
