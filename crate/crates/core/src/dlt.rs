//! Direct-link transmission: the source talks to the destination on its
//! own and the relay sleeps.
//!
//! With a budget below `P_ee1 + alpha_d` the optimal policy is on-off at
//! the energy-efficient power `P_ee1`; above it the source transmits in
//! every slot with `P_A - alpha_d`.

use crate::error::{Error, Result};
use crate::model::{cap, cap_slope, ChannelGains, CircuitModel, Mode, ModeAllocation};
use crate::numerics::{argmax_positive, SearchConfig};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DltSolution {
    pub p_ee1: f64,
    pub alloc: ModeAllocation,
    /// Energy efficiency at `p_ee1`, in b/s/Hz/W.
    pub ee_max: f64,
}

/// Direct-link solver with `P_ee1` precomputed for one channel/circuit pair.
#[derive(Debug, Clone, Copy)]
pub struct DltSolver {
    g: ChannelGains,
    cm: CircuitModel,
    p_ee1: f64,
    ee_max: f64,
}

impl DltSolver {
    pub fn new(g: &ChannelGains, cm: &CircuitModel) -> Result<Self> {
        Self::with_config(g, cm, &SearchConfig::default())
    }

    pub fn with_config(g: &ChannelGains, cm: &CircuitModel, cfg: &SearchConfig) -> Result<Self> {
        let p_ee1 = compute_p_ee1(g.h_sd, cm.alpha_d, cfg)?;
        Ok(Self {
            g: *g,
            cm: *cm,
            p_ee1,
            ee_max: cap(p_ee1 * g.h_sd) / (p_ee1 + cm.alpha_d),
        })
    }

    pub fn p_ee1(&self) -> f64 {
        self.p_ee1
    }

    pub fn ee_max(&self) -> f64 {
        self.ee_max
    }

    /// Budget where on-off transmission turns into constant transmission.
    pub fn breakpoint(&self) -> f64 {
        self.p_ee1 + self.cm.alpha_d
    }

    pub fn solve(&self, p_a: f64) -> Result<DltSolution> {
        if !(p_a >= 0.0) || !p_a.is_finite() {
            return Err(Error::invalid("P_A", format!("budget must be finite and >= 0, got {p_a}")));
        }
        let alloc = if p_a == 0.0 {
            ModeAllocation::silent()
        } else {
            let p_s = self.p_ee1.max(p_a - self.cm.alpha_d);
            let prob = (p_a / (p_s + self.cm.alpha_d)).min(1.0);
            let mut alloc = ModeAllocation::new(Mode::Dlt, p_s, 0.0, prob, &self.g, &self.cm);
            alloc.throughput = self.throughput(p_a);
            alloc
        };
        Ok(DltSolution {
            p_ee1: self.p_ee1,
            alloc,
            ee_max: self.ee_max,
        })
    }

    /// Average throughput `C_D(P_A)`; `NaN` for negative budgets.
    pub fn throughput(&self, p_a: f64) -> f64 {
        if p_a < 0.0 {
            f64::NAN
        } else if p_a <= self.breakpoint() {
            self.ee_max * p_a
        } else {
            cap((p_a - self.cm.alpha_d) * self.g.h_sd)
        }
    }

    /// `dC_D/dP_A` (right derivative at 0).
    pub fn derivative(&self, p_a: f64) -> f64 {
        if p_a < 0.0 {
            f64::NAN
        } else if p_a <= self.breakpoint() {
            self.ee_max
        } else {
            cap_slope(self.g.h_sd, p_a - self.cm.alpha_d)
        }
    }

    /// Residual of the first-order condition at `P_ee1`: the constant-power
    /// slope equals the peak energy efficiency.
    pub fn stationarity_residual(&self) -> f64 {
        cap_slope(self.g.h_sd, self.p_ee1) - self.ee_max
    }
}

fn compute_p_ee1(h_sd: f64, alpha_d: f64, cfg: &SearchConfig) -> Result<f64> {
    if !(h_sd > 0.0) {
        return Err(Error::DegenerateChannel("h_sd must be > 0 for direct-link transmission"));
    }
    if !(alpha_d > 0.0) {
        return Err(Error::ZeroCircuitPower("alpha_d"));
    }
    let ee = |p: f64| cap(p * h_sd) / (p + alpha_d);
    let grad = |p: f64| cap_slope(h_sd, p) * (p + alpha_d) - cap(p * h_sd);
    argmax_positive(ee, Some(grad), cfg)
}

/// Energy-efficient source power of the direct link.
pub fn p_ee1(g: &ChannelGains, cm: &CircuitModel) -> Result<f64> {
    compute_p_ee1(g.h_sd, cm.alpha_d, &SearchConfig::default())
}

pub fn solve_dlt(p_a: f64, g: &ChannelGains, cm: &CircuitModel) -> Result<DltSolution> {
    DltSolver::new(g, cm)?.solve(p_a)
}

pub fn c_d(p_a: f64, g: &ChannelGains, cm: &CircuitModel) -> Result<f64> {
    Ok(solve_dlt(p_a, g, cm)?.alloc.throughput)
}

pub fn c_d_prime(p_a: f64, g: &ChannelGains, cm: &CircuitModel) -> Result<f64> {
    if !(p_a >= 0.0) {
        return Err(Error::invalid("P_A", format!("budget must be >= 0, got {p_a}")));
    }
    Ok(DltSolver::new(g, cm)?.derivative(p_a))
}
