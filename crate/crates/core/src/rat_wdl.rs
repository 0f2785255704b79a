//! Relay-assisted transmission without a direct link: a plain two-hop
//! chain. Both hops carry the same rate at the optimum, so the relay power
//! is pinned to `p_r = (h_sr / h_rd) p_s`.

use crate::error::{Error, Result};
use crate::model::{cap, cap_slope, ChannelGains, CircuitModel, Mode, ModeAllocation};
use crate::numerics::{argmax_positive, SearchConfig};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RatWdlSolution {
    pub p_ee5: f64,
    pub p_s: f64,
    pub p_r: f64,
    pub prob: f64,
    pub throughput: f64,
    pub alloc: ModeAllocation,
}

#[derive(Debug, Clone, Copy)]
pub struct RatWdlSolver {
    g: ChannelGains,
    cm: CircuitModel,
    p_ee5: f64,
    ee_max: f64,
}

impl RatWdlSolver {
    pub fn new(g: &ChannelGains, cm: &CircuitModel) -> Result<Self> {
        Self::with_config(g, cm, &SearchConfig::default())
    }

    pub fn with_config(g: &ChannelGains, cm: &CircuitModel, cfg: &SearchConfig) -> Result<Self> {
        if !(g.h_sr > 0.0) || !(g.h_rd > 0.0) {
            return Err(Error::DegenerateChannel("h_sr and h_rd must be > 0 for two-hop transmission"));
        }
        if !(cm.alpha_e > 0.0) {
            return Err(Error::ZeroCircuitPower("alpha_e"));
        }
        let (hs, hr, a) = (g.h_sr, g.h_rd, cm.alpha_e);
        let ee = |p: f64| hr * cap(p * hs) / ((hs + hr) * p + 2.0 * hr * a);
        let grad = |p: f64| cap_slope(hs, p) * ((hs + hr) * p + 2.0 * hr * a) - cap(p * hs) * (hs + hr);
        let p_ee5 = argmax_positive(ee, Some(grad), cfg)?;
        Ok(Self {
            g: *g,
            cm: *cm,
            p_ee5,
            ee_max: ee(p_ee5),
        })
    }

    pub fn p_ee5(&self) -> f64 {
        self.p_ee5
    }

    /// Throughput per watt of budget on the on-off branch.
    pub fn ee_max(&self) -> f64 {
        self.ee_max
    }

    /// Budget above which both nodes transmit in every slot.
    pub fn breakpoint(&self) -> f64 {
        (self.g.h_sr + self.g.h_rd) / (2.0 * self.g.h_rd) * self.p_ee5 + self.cm.alpha_e
    }

    fn constant_power(&self, p_c: f64) -> f64 {
        2.0 * self.g.h_rd * (p_c - self.cm.alpha_e) / (self.g.h_sr + self.g.h_rd)
    }

    pub fn solve(&self, p_c: f64) -> Result<RatWdlSolution> {
        if !(p_c >= 0.0) || !p_c.is_finite() {
            return Err(Error::invalid("P_C", format!("budget must be finite and >= 0, got {p_c}")));
        }
        let p_s = self.p_ee5.max(self.constant_power(p_c));
        let p_r = self.g.h_sr / self.g.h_rd * p_s;
        let prob = (2.0 * p_c / (p_s + p_r + 2.0 * self.cm.alpha_e)).min(1.0);
        let mut alloc = ModeAllocation::new(Mode::RatWdl, p_s, p_r, prob, &self.g, &self.cm);
        if alloc.mode != Mode::Silent {
            alloc.throughput = self.throughput(p_c);
        }
        Ok(RatWdlSolution {
            p_ee5: self.p_ee5,
            p_s: alloc.p_s,
            p_r: alloc.p_r,
            prob: alloc.prob,
            throughput: alloc.throughput,
            alloc,
        })
    }

    /// Average throughput `C_E(P_C)`; `NaN` for negative budgets.
    pub fn throughput(&self, p_c: f64) -> f64 {
        if p_c < 0.0 {
            f64::NAN
        } else if p_c <= self.breakpoint() {
            self.ee_max * p_c
        } else {
            0.5 * cap(self.constant_power(p_c) * self.g.h_sr)
        }
    }

    pub fn derivative(&self, p_c: f64) -> f64 {
        if p_c < 0.0 {
            f64::NAN
        } else if p_c <= self.breakpoint() {
            self.ee_max
        } else {
            let k = 2.0 * self.g.h_rd / (self.g.h_sr + self.g.h_rd);
            0.5 * k * cap_slope(self.g.h_sr, self.constant_power(p_c))
        }
    }
}

pub fn p_ee5(g: &ChannelGains, cm: &CircuitModel) -> Result<f64> {
    Ok(RatWdlSolver::new(g, cm)?.p_ee5)
}

pub fn solve_rat_wdl(p_c: f64, g: &ChannelGains, cm: &CircuitModel) -> Result<RatWdlSolution> {
    RatWdlSolver::new(g, cm)?.solve(p_c)
}

pub fn c_e(p_c: f64, g: &ChannelGains, cm: &CircuitModel) -> Result<f64> {
    Ok(solve_rat_wdl(p_c, g, cm)?.throughput)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dlt::DltSolver;
    use proptest::prelude::*;

    fn setup() -> (ChannelGains, CircuitModel) {
        (
            ChannelGains::new(1.0, 10.0, 3.0).unwrap(),
            CircuitModel::from_aggregates(0.2, 0.24, 0.18).unwrap(),
        )
    }

    #[test]
    fn symmetric_hops_reduce_to_direct_link() {
        let h = 2.5;
        let g = ChannelGains::new(h, h, h).unwrap();
        let cm = CircuitModel::from_aggregates(0.3, 0.4, 0.3).unwrap();
        let direct = DltSolver::new(&g, &cm).unwrap();
        assert!((p_ee5(&g, &cm).unwrap() - direct.p_ee1()).abs() < 1e-9);
    }

    #[test]
    fn p_ee5_matches_scan() {
        let (g, cm) = setup();
        let s = RatWdlSolver::new(&g, &cm).unwrap();
        let f = |p: f64| g.h_rd * cap(p * g.h_sr) / ((g.h_sr + g.h_rd) * p + 2.0 * g.h_rd * cm.alpha_e);
        let (mut arg, mut best) = (0.0, 0.0);
        for i in 1..=100_000 {
            let p = i as f64 * 2e-5;
            if f(p) > best {
                best = f(p);
                arg = p;
            }
        }
        assert!((s.p_ee5() - arg).abs() < 4e-5);
        let p = s.p_ee5();
        assert!(f(p) >= f(p * 0.99) && f(p) >= f(p * 1.01));
    }

    #[test]
    fn solve_examples() {
        let (g, cm) = setup();
        let s = RatWdlSolver::new(&g, &cm).unwrap();
        assert_eq!(s.solve(0.0).unwrap().throughput, 0.0);
        let ee = s.throughput(0.01) / 0.01;
        for k in 1..=10 {
            let p = s.breakpoint() * k as f64 / 10.0;
            assert!((s.throughput(p) / p - ee).abs() < 1e-12);
        }
        let p = 1024.0;
        let asym = 0.5 * (2.0 * g.h_sr * g.h_rd * (p - cm.alpha_e) / (g.h_sr + g.h_rd)).log2();
        assert!((s.throughput(p) - asym).abs() < 1e-3);
        assert!(solve_rat_wdl(-0.5, &g, &cm).is_err());
    }

    #[test]
    fn continuous_at_breakpoint() {
        let (g, cm) = setup();
        let s = RatWdlSolver::new(&g, &cm).unwrap();
        let bp = s.breakpoint();
        let on_off = s.ee_max() * bp;
        let constant = 0.5 * cap(s.constant_power(bp) * g.h_sr);
        assert!((on_off - constant).abs() < 1e-9);
        assert!((s.derivative(bp) - s.derivative(bp + 1e-9)).abs() < 1e-6);
    }

    #[test]
    fn lower_circuit_power_never_hurts() {
        let (g, cm) = setup();
        let heavier = CircuitModel::from_aggregates(cm.alpha_d, cm.alpha_r, cm.alpha_r).unwrap();
        for i in 1..=40 {
            let p = 0.1 * i as f64;
            assert!(c_e(p, &g, &cm).unwrap() >= c_e(p, &g, &heavier).unwrap());
        }
    }

    #[test]
    fn rejects_degenerate_inputs() {
        let g = ChannelGains::new(1.0, 0.0, 3.0).unwrap();
        let cm = CircuitModel::from_aggregates(0.2, 0.24, 0.18).unwrap();
        assert!(matches!(p_ee5(&g, &cm), Err(Error::DegenerateChannel(_))));
        let g = ChannelGains::new(1.0, 10.0, 3.0).unwrap();
        let cm = CircuitModel::from_aggregates(0.2, 0.24, 0.0).unwrap();
        assert!(matches!(p_ee5(&g, &cm), Err(Error::ZeroCircuitPower(_))));
    }

    proptest! {
        #[test]
        fn allocation_invariants(
            h_sr in 0.5f64..20.0,
            h_rd in 0.5f64..10.0,
            a in 0.05f64..0.5,
            p_c in 0.0f64..10.0,
        ) {
            let g = ChannelGains::new(1.0, h_sr, h_rd).unwrap();
            let cm = CircuitModel::from_aggregates(0.2, a + 0.05, a).unwrap();
            let sol = solve_rat_wdl(p_c, &g, &cm).unwrap();
            if p_c > 0.0 {
                prop_assert!((sol.p_r - h_sr / h_rd * sol.p_s).abs() <= 1e-12 * sol.p_r.max(1.0));
                prop_assert!((cap(sol.p_s * h_sr) - cap(sol.p_r * h_rd)).abs() < 1e-9);
                let prob = (2.0 * p_c / (sol.p_s + sol.p_r + 2.0 * a)).min(1.0);
                prop_assert!((sol.prob - prob).abs() < 1e-12);
                prop_assert!((sol.alloc.avg_power - p_c).abs() < 1e-9);
            }
        }
    }
}
