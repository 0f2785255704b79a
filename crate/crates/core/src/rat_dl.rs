//! Relay-assisted transmission with direct link.
//!
//! In an active slot the source broadcasts in the first half and the relay
//! forwards in the second; source and relay are therefore on in the same
//! fraction of slots. The optimum is one of four candidates, depending on
//! which of two constraints binds:
//!
//! * the duty-cycle constraint `P_S + P_R >= 2 P_B - 2 alpha_r` (`prob <= 1`),
//! * the decoding constraint `P_R <= P_S (h_sr - h_sd) / (h_rd (1 + P_S h_sd))`
//!   (the relay never outpaces what it could decode).
//!
//! | case | duty cycle | decoding | point                         |
//! |------|------------|----------|-------------------------------|
//! | 1    | slack      | slack    | `(P_ee2, P_ee3)`, on-off      |
//! | 2    | slack      | tight    | `(P_ee4, limit(P_ee4))`, on-off |
//! | 3    | tight      | slack    | `(F, G)`, constant            |
//! | 4    | tight      | tight    | `(V, 2 P_B - 2 alpha_r - V)`  |

use std::f64::consts::LN_2;
use std::fmt;

use crate::error::{Error, Result};
use crate::model::{cap, cap_slope, df_rate, ChannelGains, CircuitModel, Mode, ModeAllocation};
use crate::numerics::{argmax_positive, SearchConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum RatDlCase {
    EeInterior,
    DecodeBinding,
    PowerBinding,
    BothBinding,
}

impl RatDlCase {
    pub const ALL: [RatDlCase; 4] = [
        RatDlCase::EeInterior,
        RatDlCase::DecodeBinding,
        RatDlCase::PowerBinding,
        RatDlCase::BothBinding,
    ];

    pub fn label(&self) -> &'static str {
        match self {
            RatDlCase::EeInterior => "CASE1_EE_INTERIOR",
            RatDlCase::DecodeBinding => "CASE2_DECODE_BINDING",
            RatDlCase::PowerBinding => "CASE3_POWER_BINDING",
            RatDlCase::BothBinding => "CASE4_BOTH_BINDING",
        }
    }

    fn index(&self) -> usize {
        *self as usize
    }
}

impl fmt::Display for RatDlCase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RatDlSolution {
    pub case: RatDlCase,
    pub p_s: f64,
    pub p_r: f64,
    pub prob: f64,
    pub throughput: f64,
    pub p_ee2: f64,
    pub p_ee3: f64,
    pub p_ee4: f64,
    pub u: f64,
    /// Positive root of the both-binding quadratic; `None` when `P_B < alpha_r`.
    pub v: Option<f64>,
    pub alloc: ModeAllocation,
}

/// One of the four structural candidates evaluated at a given budget.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Candidate {
    pub case: RatDlCase,
    pub p_s: f64,
    pub p_r: f64,
    pub throughput: f64,
    pub feasible: bool,
}

/// Membership of a budget in the condition sets that pick the case.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Conditions {
    /// `P_ee2 + P_ee3 > 2 P_B - 2 alpha_r`
    pub s1: bool,
    /// `(P_ee2, P_ee3)` satisfies the decoding constraint strictly.
    pub s2: bool,
    /// `P_ee4 + limit(P_ee4) > 2 P_B - 2 alpha_r`
    pub s3: bool,
    /// `(F, G)` satisfies the decoding constraint strictly.
    pub s4: bool,
}

impl Conditions {
    pub fn case(&self) -> RatDlCase {
        if self.s1 && self.s2 {
            RatDlCase::EeInterior
        } else if !self.s2 && self.s3 {
            RatDlCase::DecodeBinding
        } else if !self.s1 && self.s2 && self.s4 {
            RatDlCase::PowerBinding
        } else {
            RatDlCase::BothBinding
        }
    }
}

/// First-order conditions at `(P_ee2, P_ee3)`.
///
/// Each residual is `slope_i * (P_ee2 + P_ee3 + 2 alpha_r) - rate_sum`; it
/// vanishes for an active link and is `<= 0` for a link clamped at zero.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Stationarity {
    pub source: f64,
    pub relay: f64,
    pub source_active: bool,
    pub relay_active: bool,
}

impl Stationarity {
    pub fn max_violation(&self) -> f64 {
        let part = |r: f64, active: bool| if active { r.abs() } else { r.max(0.0) };
        part(self.source, self.source_active).max(part(self.relay, self.relay_active))
    }
}

/// A budget at which the solved case changes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Breakpoint {
    pub p_b: f64,
    pub before: RatDlCase,
    pub after: RatDlCase,
}

/// RAT-DL solver with the budget-independent efficiency points precomputed.
#[derive(Debug, Clone, Copy)]
pub struct RatDlSolver {
    g: ChannelGains,
    cm: CircuitModel,
    p_ee2: f64,
    p_ee3: f64,
    ee_interior: f64,
    p_ee4: f64,
    ee_decode: f64,
}

impl RatDlSolver {
    pub fn new(g: &ChannelGains, cm: &CircuitModel) -> Result<Self> {
        Self::with_config(g, cm, &SearchConfig::default())
    }

    pub fn with_config(g: &ChannelGains, cm: &CircuitModel, cfg: &SearchConfig) -> Result<Self> {
        g.require_relay_admissible()?;
        if !(g.h_sd > 0.0) {
            return Err(Error::DegenerateChannel("h_sd must be > 0 for relay-assisted transmission"));
        }
        if !(g.h_rd > 0.0) {
            return Err(Error::DegenerateChannel("h_rd must be > 0 for relay-assisted transmission"));
        }
        if !(cm.alpha_r > 0.0) {
            return Err(Error::ZeroCircuitPower("alpha_r"));
        }
        let (p_ee2, p_ee3) = interior_point(g, cm.alpha_r, cfg)?;
        let ee_interior = (cap(p_ee2 * g.h_sd) + cap(p_ee3 * g.h_rd)) / (p_ee2 + p_ee3 + 2.0 * cm.alpha_r);
        let p_ee4 = decode_point(g, cm.alpha_r, cfg)?;
        let mut solver = Self {
            g: *g,
            cm: *cm,
            p_ee2,
            p_ee3,
            ee_interior,
            p_ee4,
            ee_decode: 0.0,
        };
        solver.ee_decode = solver.decode_objective(p_ee4, 0.0);
        Ok(solver)
    }

    pub fn gains(&self) -> &ChannelGains {
        &self.g
    }

    pub fn circuit(&self) -> &CircuitModel {
        &self.cm
    }

    pub fn p_ee2(&self) -> f64 {
        self.p_ee2
    }

    pub fn p_ee3(&self) -> f64 {
        self.p_ee3
    }

    pub fn p_ee4(&self) -> f64 {
        self.p_ee4
    }

    /// Peak efficiency of the unconstrained on-off point.
    pub fn ee_interior(&self) -> f64 {
        self.ee_interior
    }

    /// Peak efficiency along the decoding boundary.
    pub fn ee_decode(&self) -> f64 {
        self.ee_decode
    }

    /// Largest relay power the relay can still decode-and-forward for.
    pub fn decode_limit(&self, p_s: f64) -> f64 {
        let g = &self.g;
        p_s * (g.h_sr - g.h_sd) / (g.h_rd * (1.0 + p_s * g.h_sd))
    }

    pub fn u(&self, p_b: f64) -> f64 {
        u_value(&self.g, self.cm.alpha_r, p_b)
    }

    pub fn v_root(&self, p_b: f64) -> Result<f64> {
        v_value(&self.g, self.cm.alpha_r, p_b)
    }

    /// Decoding-boundary objective written with `U`; independent of `P_B`
    /// because `U + 2 h_sd h_rd P_B` is.
    pub fn decode_objective(&self, p_s: f64, p_b: f64) -> f64 {
        let g = &self.g;
        let num = (1.0 + p_s * g.h_sd) * g.h_rd * cap(p_s * g.h_sr);
        let lin = self.u(p_b) + 2.0 * g.h_sd * g.h_rd * p_b;
        let den = g.h_sd * g.h_rd * p_s * p_s + lin * p_s + 2.0 * self.cm.alpha_r * g.h_rd;
        num / den
    }

    pub fn stationarity(&self) -> Stationarity {
        let g = &self.g;
        let total = self.p_ee2 + self.p_ee3 + 2.0 * self.cm.alpha_r;
        let rate = cap(self.p_ee2 * g.h_sd) + cap(self.p_ee3 * g.h_rd);
        Stationarity {
            source: cap_slope(g.h_sd, self.p_ee2) * total - rate,
            relay: cap_slope(g.h_rd, self.p_ee3) * total - rate,
            source_active: self.p_ee2 > 0.0,
            relay_active: self.p_ee3 > 0.0,
        }
    }

    /// Constant-transmission point on the duty-cycle line, clamped to the
    /// non-negative quadrant.
    fn power_line_point(&self, p_b: f64) -> (f64, f64) {
        let g = &self.g;
        let c = 2.0 * (p_b - self.cm.alpha_r);
        let f = (g.h_sd - g.h_rd) / (2.0 * g.h_sd * g.h_rd) + p_b - self.cm.alpha_r;
        let f = f.clamp(0.0, c.max(0.0));
        (f, (c - f).max(0.0))
    }

    pub fn conditions(&self, p_b: f64) -> Conditions {
        let c = 2.0 * (p_b - self.cm.alpha_r);
        let (f, gg) = self.power_line_point(p_b);
        Conditions {
            s1: self.p_ee2 + self.p_ee3 > c,
            s2: self.p_ee3 < self.decode_limit(self.p_ee2),
            s3: self.p_ee4 + self.decode_limit(self.p_ee4) > c,
            s4: gg < self.decode_limit(f),
        }
    }

    pub fn case_by_conditions(&self, p_b: f64) -> RatDlCase {
        self.conditions(p_b).case()
    }

    fn on_off_throughput(&self, p_s: f64, p_r: f64, p_b: f64) -> f64 {
        let prob = (2.0 * p_b / (p_s + p_r + 2.0 * self.cm.alpha_r)).min(1.0);
        prob * df_rate(p_s, p_r, &self.g)
    }

    /// All four candidates at budget `p_b`. Candidates that do not exist
    /// (constant transmission below `alpha_r`) are marked infeasible.
    pub fn candidates(&self, p_b: f64) -> [Candidate; 4] {
        let g = &self.g;
        let c = 2.0 * (p_b - self.cm.alpha_r);
        let tol = 1e-12;

        let c1 = Candidate {
            case: RatDlCase::EeInterior,
            p_s: self.p_ee2,
            p_r: self.p_ee3,
            throughput: self.ee_interior * p_b,
            feasible: self.p_ee2 + self.p_ee3 >= c - tol && self.p_ee3 <= self.decode_limit(self.p_ee2) + tol,
        };
        let pr4 = self.decode_limit(self.p_ee4);
        let c2 = Candidate {
            case: RatDlCase::DecodeBinding,
            p_s: self.p_ee4,
            p_r: pr4,
            throughput: self.ee_decode * p_b,
            feasible: self.p_ee4 + pr4 >= c - tol,
        };
        let (c3, c4) = if c >= 0.0 {
            let (f, gg) = self.power_line_point(p_b);
            let c3 = Candidate {
                case: RatDlCase::PowerBinding,
                p_s: f,
                p_r: gg,
                throughput: 0.5 * cap(f * g.h_sd) + 0.5 * cap(gg * g.h_rd),
                feasible: gg <= self.decode_limit(f) + tol,
            };
            let v = v_value(g, self.cm.alpha_r, p_b).unwrap_or(0.0);
            let pr = c - v;
            let c4 = Candidate {
                case: RatDlCase::BothBinding,
                p_s: v,
                p_r: pr.max(0.0),
                throughput: 0.5 * cap(v * g.h_sr),
                feasible: pr >= -tol,
            };
            (c3, c4)
        } else {
            let none = |case| Candidate {
                case,
                p_s: 0.0,
                p_r: 0.0,
                throughput: 0.0,
                feasible: false,
            };
            (none(RatDlCase::PowerBinding), none(RatDlCase::BothBinding))
        };
        [c1, c2, c3, c4]
    }

    /// Picks the case from the condition sets, then confirms against the
    /// best feasible candidate. On boundaries where the two disagree by more
    /// than rounding the better candidate wins.
    fn select(&self, p_b: f64) -> Candidate {
        let cands = self.candidates(p_b);
        let chosen = cands[self.case_by_conditions(p_b).index()];
        let best = cands
            .iter()
            .filter(|c| c.feasible)
            .fold(None::<Candidate>, |acc, c| match acc {
                Some(a) if a.throughput >= c.throughput => Some(a),
                _ => Some(*c),
            });
        match best {
            Some(b) if !chosen.feasible || b.throughput > chosen.throughput + 1e-12 * chosen.throughput.abs().max(1.0) => b,
            _ => chosen,
        }
    }

    pub fn solve(&self, p_b: f64) -> Result<RatDlSolution> {
        if !(p_b >= 0.0) || !p_b.is_finite() {
            return Err(Error::invalid("P_B", format!("budget must be finite and >= 0, got {p_b}")));
        }
        let cand = self.select(p_b);
        let prob = (2.0 * p_b / (cand.p_s + cand.p_r + 2.0 * self.cm.alpha_r)).min(1.0);
        let mut alloc = ModeAllocation::new(Mode::RatDl, cand.p_s, cand.p_r, prob, &self.g, &self.cm);
        if alloc.mode != Mode::Silent {
            alloc.throughput = cand.throughput;
        }
        Ok(RatDlSolution {
            case: cand.case,
            p_s: cand.p_s,
            p_r: cand.p_r,
            prob: alloc.prob,
            throughput: alloc.throughput,
            p_ee2: self.p_ee2,
            p_ee3: self.p_ee3,
            p_ee4: self.p_ee4,
            u: self.u(p_b),
            v: v_value(&self.g, self.cm.alpha_r, p_b).ok(),
            alloc,
        })
    }

    /// Average throughput `C_R(P_B)`; `NaN` for negative budgets.
    pub fn throughput(&self, p_b: f64) -> f64 {
        if p_b < 0.0 {
            return f64::NAN;
        }
        self.select(p_b).throughput
    }

    /// Throughput of the on-off policy `(p_s, p_r)` with the duty cycle set
    /// by the budget; used for cross-checks.
    pub fn policy_throughput(&self, p_s: f64, p_r: f64, p_b: f64) -> f64 {
        self.on_off_throughput(p_s, p_r, p_b)
    }

    /// `dC_R/dP_B`, analytic on every branch.
    pub fn derivative(&self, p_b: f64) -> f64 {
        if p_b < 0.0 {
            return f64::NAN;
        }
        let g = &self.g;
        let cand = self.select(p_b);
        match cand.case {
            RatDlCase::EeInterior => self.ee_interior,
            RatDlCase::DecodeBinding => self.ee_decode,
            RatDlCase::PowerBinding => {
                let c = 2.0 * (p_b - self.cm.alpha_r);
                if cand.p_s <= 0.0 {
                    cap_slope(g.h_rd, c)
                } else if cand.p_r <= 0.0 {
                    cap_slope(g.h_sd, c)
                } else {
                    0.5 * (cap_slope(g.h_sd, cand.p_s) + cap_slope(g.h_rd, cand.p_r))
                }
            }
            RatDlCase::BothBinding => {
                let v = cand.p_s;
                let u = self.u(p_b);
                let a = g.h_sd * g.h_rd;
                let dv = (2.0 * a * v + 2.0 * g.h_rd) / (2.0 * a * v + u);
                0.5 * cap_slope(g.h_sr, v) * dv
            }
        }
    }

    /// Budgets in `(0, p_max]` where the solved case changes, located by a
    /// scan of `samples` points followed by bisection on the case label.
    pub fn breakpoints(&self, p_max: f64, samples: usize) -> Vec<Breakpoint> {
        let n = samples.max(2);
        let case_at = |p: f64| self.select(p).case;
        let mut out = Vec::new();
        let mut prev_p = p_max / n as f64 * 1e-3;
        let mut prev_case = case_at(prev_p);
        for i in 1..=n {
            let p = p_max * i as f64 / n as f64;
            let case = case_at(p);
            if case != prev_case {
                let (mut lo, mut hi) = (prev_p, p);
                while hi - lo > 1e-14 * hi.max(1.0) {
                    let mid = 0.5 * (lo + hi);
                    if mid <= lo || mid >= hi {
                        break;
                    }
                    if case_at(mid) == prev_case {
                        lo = mid;
                    } else {
                        hi = mid;
                    }
                }
                out.push(Breakpoint {
                    p_b: 0.5 * (lo + hi),
                    before: prev_case,
                    after: case,
                });
            }
            prev_p = p;
            prev_case = case;
        }
        out
    }
}

/// `U = h_sr + h_rd - h_sd + 2 alpha_r h_sd h_rd - 2 h_sd h_rd P_B`.
fn u_value(g: &ChannelGains, alpha_r: f64, p_b: f64) -> f64 {
    g.h_sr + g.h_rd - g.h_sd + 2.0 * alpha_r * g.h_sd * g.h_rd - 2.0 * g.h_sd * g.h_rd * p_b
}

/// Positive root of `h_sd h_rd V^2 + U V - 2 (P_B - alpha_r) h_rd = 0`.
fn v_value(g: &ChannelGains, alpha_r: f64, p_b: f64) -> Result<f64> {
    if p_b < alpha_r {
        return Err(Error::Infeasible(format!(
            "both-binding point needs P_B >= alpha_r ({p_b} < {alpha_r})"
        )));
    }
    let a = g.h_sd * g.h_rd;
    let k = 2.0 * (p_b - alpha_r) * g.h_rd;
    let u = u_value(g, alpha_r, p_b);
    let disc = (u * u + 4.0 * a * k).sqrt();
    // avoid cancellation when U > 0
    Ok(if u >= 0.0 { 2.0 * k / (u + disc) } else { (disc - u) / (2.0 * a) })
}

/// Joint maximizer of `(C(P_S h_sd) + C(P_R h_rd)) / (P_S + P_R + 2 alpha_r)`.
///
/// Equal marginal rates at the optimum make `1/h_sd + P_S = 1/h_rd + P_R`,
/// a common water level `L`; a link whose floor `1/h` lies above `L` stays
/// off. The search runs over the level only.
fn interior_point(g: &ChannelGains, alpha_r: f64, cfg: &SearchConfig) -> Result<(f64, f64)> {
    let (fs, fr) = (1.0 / g.h_sd, 1.0 / g.h_rd);
    let base = fs.min(fr);
    let split = move |x: f64| {
        let level = base + x;
        ((level - fs).max(0.0), (level - fr).max(0.0))
    };
    let ee = |x: f64| {
        let (ps, pr) = split(x);
        (cap(ps * g.h_sd) + cap(pr * g.h_rd)) / (ps + pr + 2.0 * alpha_r)
    };
    // sign of d ee / d level
    let grad = |x: f64| {
        let (ps, pr) = split(x);
        let level = base + x;
        (ps + pr + 2.0 * alpha_r) / (level * LN_2) - cap(ps * g.h_sd) - cap(pr * g.h_rd)
    };
    let x = argmax_positive(ee, Some(grad), cfg)?;
    Ok(split(x))
}

/// Maximizer of the efficiency along the decoding boundary.
fn decode_point(g: &ChannelGains, alpha_r: f64, cfg: &SearchConfig) -> Result<f64> {
    let limit = |p: f64| p * (g.h_sr - g.h_sd) / (g.h_rd * (1.0 + p * g.h_sd));
    let limit_slope = |p: f64| (g.h_sr - g.h_sd) / (g.h_rd * (1.0 + p * g.h_sd).powi(2));
    // on the boundary the broadcast and the combined cut carry the same rate
    let ee = |p: f64| cap(p * g.h_sr) / (p + limit(p) + 2.0 * alpha_r);
    let grad = |p: f64| cap_slope(g.h_sr, p) * (p + limit(p) + 2.0 * alpha_r) - cap(p * g.h_sr) * (1.0 + limit_slope(p));
    argmax_positive(ee, Some(grad), cfg)
}

/// Energy-efficient point of the unconstrained on-off problem.
pub fn p_ee2_p_ee3(g: &ChannelGains, cm: &CircuitModel) -> Result<(f64, f64)> {
    let s = RatDlSolver::new(g, cm)?;
    Ok((s.p_ee2, s.p_ee3))
}

/// Energy-efficient source power along the decoding boundary. `P_B` enters
/// only through `U`, and cancels.
pub fn p_ee4(p_b: f64, g: &ChannelGains, cm: &CircuitModel) -> Result<f64> {
    let s = RatDlSolver::new(g, cm)?;
    let cfg = SearchConfig::default();
    let f = |p: f64| s.decode_objective(p, p_b);
    argmax_positive(f, None::<fn(f64) -> f64>, &cfg)
}

pub fn u(p_b: f64, g: &ChannelGains, cm: &CircuitModel) -> f64 {
    u_value(g, cm.alpha_r, p_b)
}

pub fn v_root(p_b: f64, g: &ChannelGains, cm: &CircuitModel) -> Result<f64> {
    v_value(g, cm.alpha_r, p_b)
}

pub fn solve_rat_dl(p_b: f64, g: &ChannelGains, cm: &CircuitModel) -> Result<RatDlSolution> {
    RatDlSolver::new(g, cm)?.solve(p_b)
}

pub fn c_r(p_b: f64, g: &ChannelGains, cm: &CircuitModel) -> Result<f64> {
    Ok(solve_rat_dl(p_b, g, cm)?.throughput)
}

pub fn c_r_prime(p_b: f64, g: &ChannelGains, cm: &CircuitModel) -> Result<f64> {
    if !(p_b >= 0.0) {
        return Err(Error::invalid("P_B", format!("budget must be >= 0, got {p_b}")));
    }
    Ok(RatDlSolver::new(g, cm)?.derivative(p_b))
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

    fn grid_max_2d<F: Fn(f64, f64) -> f64>(f: F, lo: [f64; 2], hi: [f64; 2], n: usize) -> (f64, f64, f64) {
        let mut best = (f64::NEG_INFINITY, 0.0, 0.0);
        for i in 0..=n {
            for j in 0..=n {
                let x = lo[0] + (hi[0] - lo[0]) * i as f64 / n as f64;
                let y = lo[1] + (hi[1] - lo[1]) * j as f64 / n as f64;
                let v = f(x, y);
                if v > best.0 {
                    best = (v, x, y);
                }
            }
        }
        best
    }

    #[test]
    fn interior_point_relation() {
        let g = ChannelGains::new(1.0, 10.0, 3.0).unwrap();
        let cm = CircuitModel::from_aggregates(0.2, 0.24, 0.18).unwrap();
        let (p2, p3) = p_ee2_p_ee3(&g, &cm).unwrap();
        assert!((p3 - (p2 + 1.0 - 1.0 / 3.0)).abs() < 1e-12 || (p3 == 0.0 && p2 < 2.0 / 3.0));
        assert!(p2 > 0.0 && p3 > 0.0);

        let g = ChannelGains::new(1.5, 4.0, 1.5).unwrap();
        let (p2, p3) = p_ee2_p_ee3(&g, &cm).unwrap();
        assert!((p2 - p3).abs() < 1e-12);
    }

    #[test]
    fn interior_point_matches_grid() {
        let (g, _) = reference_setup();
        let cm = CircuitModel::from_aggregates(0.2, 0.24, 0.18).unwrap();
        let f = |ps: f64, pr: f64| (cap(ps * g.h_sd) + cap(pr * g.h_rd)) / (ps + pr + 2.0 * cm.alpha_r);
        let (_, x, y) = grid_max_2d(f, [0.0, 0.0], [10.0, 10.0], 400);
        let step = 10.0 / 400.0;
        let (_, x, y) = grid_max_2d(f, [(x - step).max(0.0), (y - step).max(0.0)], [x + step, y + step], 400);
        let step = 2.0 * step / 400.0;
        let (best, _, _) = grid_max_2d(f, [(x - step).max(0.0), (y - step).max(0.0)], [x + step, y + step], 400);
        let s = RatDlSolver::new(&g, &cm).unwrap();
        assert!((s.ee_interior() - best).abs() < 1e-4);
        assert!(s.ee_interior() >= best - 1e-12);
        let st = s.stationarity();
        assert!(st.max_violation() < 1e-6, "{st:?}");
        let marg = g.h_sd / (1.0 + s.p_ee2() * g.h_sd) - g.h_rd / (1.0 + s.p_ee3() * g.h_rd);
        assert!(marg.abs() < 1e-6);
    }

    #[test]
    fn weak_relay_link_clamps_relay_power() {
        // 1/h_rd - 1/h_sd = 1.5 forces P_ee3 = 0 unless P_ee2 is large
        let g = ChannelGains::new(2.0, 20.0, 0.5).unwrap();
        let cm = CircuitModel::from_aggregates(0.2, 0.05, 0.05).unwrap();
        let s = RatDlSolver::new(&g, &cm).unwrap();
        assert_eq!(s.p_ee3(), 0.0);
        let st = s.stationarity();
        assert!(!st.relay_active && st.relay <= 0.0);
        assert!(st.max_violation() < 1e-6);
    }

    #[test]
    fn u_and_v_examples() {
        let (g, cm) = reference_setup();
        assert!((u(0.5, &g, &cm) - 10.44).abs() < 1e-12);
        let s = RatDlSolver::new(&g, &cm).unwrap();
        let v = s.v_root(0.5).unwrap();
        let residual = g.h_sd * g.h_rd * v * v + s.u(0.5) * v - 2.0 * (0.5 - cm.alpha_r) * g.h_rd;
        assert!(residual.abs() < 1e-9);
        assert!(v >= 0.0);

        assert_eq!(s.v_root(cm.alpha_r).unwrap(), 0.0);
        assert!(matches!(s.v_root(0.1), Err(Error::Infeasible(_))));

        let g = ChannelGains::new(1.0, 2.0, 1.0).unwrap();
        let cm = CircuitModel::from_aggregates(0.2, 0.25, 0.2).unwrap();
        assert_eq!(u(1.25, &g, &cm), 0.0);
        assert!((v_root(1.25, &g, &cm).unwrap() - 2f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn p_ee4_local_max_and_scan() {
        let (g, cm) = reference_setup();
        let s = RatDlSolver::new(&g, &cm).unwrap();
        let p4 = p_ee4(0.5, &g, &cm).unwrap();
        assert!((p4 - s.p_ee4()).abs() < 1e-6);
        let f = |p: f64| s.decode_objective(p, 0.5);
        assert!(f(p4) >= f(0.5 * p4) && f(p4) >= f(2.0 * p4));
        let mut best = (0.0, 0.0);
        for i in 1..=200_000 {
            let p = i as f64 * 1e-5;
            if f(p) > best.1 {
                best = (p, f(p));
            }
        }
        assert!((best.0 - s.p_ee4()).abs() < 2e-5);
        // the U-form objective agrees with the direct boundary efficiency
        for &p in &[0.1, 0.27, 1.0, 4.0] {
            let direct = cap(p * g.h_sr) / (p + s.decode_limit(p) + 2.0 * cm.alpha_r);
            assert!((f(p) - direct).abs() < 1e-14);
            assert!((s.decode_objective(p, 3.0) - direct).abs() < 1e-14);
        }
    }

    #[test]
    fn low_budget_gap_over_direct_link() {
        let (g, cm) = reference_setup();
        let cr = c_r(0.5, &g, &cm).unwrap();
        let cd = crate::dlt::c_d(0.5, &g, &cm).unwrap();
        assert!((cr - cd - 0.3).abs() < 0.1, "gap {}", cr - cd);
    }

    #[test]
    fn zero_budget_is_silent() {
        let (g, cm) = reference_setup();
        let s = solve_rat_dl(0.0, &g, &cm).unwrap();
        assert_eq!(s.throughput, 0.0);
        assert_eq!(s.prob, 0.0);
        assert_eq!(s.alloc.mode, Mode::Silent);
    }

    #[test]
    fn rejects_inadmissible_relay() {
        let g = ChannelGains::new(1.0, 1.5, 3.0).unwrap();
        let cm = CircuitModel::from_aggregates(0.2, 0.24, 0.18).unwrap();
        assert!(matches!(solve_rat_dl(1.0, &g, &cm), Err(Error::RelayInadmissible { .. })));
    }

    #[test]
    fn solution_invariants_along_budget() {
        let (g, cm) = reference_setup();
        let s = RatDlSolver::new(&g, &cm).unwrap();
        for i in 1..=300 {
            let p_b = i as f64 * 0.02;
            let sol = s.solve(p_b).unwrap();
            // duty cycle spends exactly the budget
            let spent = sol.prob * (0.5 * sol.p_s + 0.5 * sol.p_r + cm.alpha_r);
            assert!((spent - p_b).abs() < 1e-9, "p_b={p_b}");
            assert!((sol.alloc.avg_power - p_b).abs() < 1e-9);
            let broadcast = cap(sol.p_s * g.h_sr);
            let combined = cap(sol.p_s * g.h_sd) + cap(sol.p_r * g.h_rd);
            assert!(broadcast >= combined - 1e-9);
            if matches!(sol.case, RatDlCase::DecodeBinding | RatDlCase::BothBinding) {
                assert!((sol.p_r - s.decode_limit(sol.p_s)).abs() < 1e-9);
                assert!((broadcast - combined).abs() < 1e-6);
            }
            if matches!(sol.case, RatDlCase::PowerBinding | RatDlCase::BothBinding) {
                assert!((sol.p_s + sol.p_r - 2.0 * (p_b - cm.alpha_r)).abs() < 1e-9);
            }
            // the condition sets and the candidate argmax agree
            let by_cond = s.case_by_conditions(p_b);
            let cands = s.candidates(p_b);
            let best = cands.iter().filter(|c| c.feasible).map(|c| c.throughput).fold(f64::MIN, f64::max);
            assert!(cands[by_cond.index()].feasible);
            assert!((cands[by_cond.index()].throughput - best).abs() < 1e-9);
            assert!((sol.throughput - sol.prob * df_rate(sol.p_s, sol.p_r, &g)).abs() < 1e-9);
        }
    }

    #[test]
    fn derivative_matches_finite_difference() {
        let (g, cm) = reference_setup();
        let s = RatDlSolver::new(&g, &cm).unwrap();
        for i in 1..60 {
            let p = i as f64 * 0.1 + 0.013;
            let h = 1e-6 * p.max(1.0);
            let fd = (s.throughput(p + h) - s.throughput(p - h)) / (2.0 * h);
            assert!((fd - s.derivative(p)).abs() < 1e-5, "p={p} fd={fd} an={}", s.derivative(p));
        }
    }

    #[test]
    fn breakpoints_are_smooth() {
        let (g, cm) = reference_setup();
        let s = RatDlSolver::new(&g, &cm).unwrap();
        let bps = s.breakpoints(5.0, 2000);
        assert!(!bps.is_empty());
        for bp in bps {
            let p = bp.p_b;
            let h = 1e-5;
            let left = s.throughput(p - 1e-12);
            let right = s.throughput(p + 1e-12);
            assert!((left - right).abs() < 1e-8);
            let dl = (s.throughput(p) - s.throughput(p - h)) / h;
            let dr = (s.throughput(p + h) - s.throughput(p)) / h;
            assert!((dl - dr).abs() < 1e-3, "{bp:?} {dl} {dr}");
        }
    }

    #[test]
    fn concave_on_grid() {
        let (g, cm) = reference_setup();
        let s = RatDlSolver::new(&g, &cm).unwrap();
        let ys: Vec<f64> = (0..200).map(|i| s.throughput(3.0 * i as f64 / 199.0)).collect();
        for w in ys.windows(3) {
            assert!(w[2] - 2.0 * w[1] + w[0] <= 1e-8);
        }
    }

    #[test]
    fn multiplexing_gain_is_half() {
        let (g, cm) = reference_setup();
        let s = RatDlSolver::new(&g, &cm).unwrap();
        let slope = s.throughput(2048.0) - s.throughput(1024.0);
        assert!((slope - 0.5).abs() < 0.01, "{slope}");
    }

    proptest! {
        #[test]
        fn condition_sets_pick_the_best_candidate(
            h_sd in 0.5f64..2.0,
            ratio in 2.0f64..10.0,
            h_rd in 0.5f64..10.0,
            a in 0.05f64..0.5,
            p_b in 0.0f64..6.0,
        ) {
            let g = ChannelGains::new(h_sd, ratio * h_sd, h_rd).unwrap();
            let cm = CircuitModel::from_aggregates(0.2, a, a).unwrap();
            let s = RatDlSolver::new(&g, &cm).unwrap();
            let sol = s.solve(p_b).unwrap();
            prop_assert!((sol.alloc.avg_power - p_b).abs() < 1e-9);
            prop_assert!(sol.prob <= 1.0 && sol.p_s >= 0.0 && sol.p_r >= 0.0);
            let best = s
                .candidates(p_b)
                .iter()
                .filter(|c| c.feasible)
                .map(|c| c.throughput)
                .fold(0.0, f64::max);
            prop_assert!((sol.throughput - best).abs() < 1e-9);
        }
    }
}
