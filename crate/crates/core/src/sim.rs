//! Slotted Monte-Carlo execution of stationary policies.
//!
//! Each slot is either active, using the allocation's powers and earning
//! its per-slot rate, or asleep with zero rate and zero power. Long-run
//! averages of rate and power converge to the analytic throughput and
//! budget.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::mixed::MixedSolution;
use crate::model::{ChannelGains, CircuitModel, Mode, ModeAllocation};
use crate::rat_dl::v_root;

/// Name of the generator behind every report, with its seeding scheme.
pub const RNG_ALGORITHM: &str = "ChaCha8Rng/seed_from_u64";

/// How active slots are picked.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Schedule {
    /// Every slot is active independently with the transmission probability.
    #[default]
    Bernoulli,
    /// Deterministic pattern activating exactly `floor(k p)` of the first `k` slots.
    DutyCycle,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimReport {
    pub n_slots: u64,
    pub empirical_throughput: f64,
    pub empirical_avg_power: f64,
    pub analytic_throughput: f64,
    pub analytic_avg_power: f64,
    /// Standard error of the slot-rate mean.
    pub throughput_std_err: f64,
    /// Standard error of the slot-power mean.
    pub power_std_err: f64,
    pub budget: f64,
    pub rng_seed: u64,
    pub rng_algorithm: &'static str,
    pub schedule: Schedule,
}

impl SimReport {
    /// Throughput gap in standard errors; zero when both gap and error vanish.
    pub fn throughput_z(&self) -> f64 {
        z_score(self.empirical_throughput - self.analytic_throughput, self.throughput_std_err)
    }

    pub fn power_z(&self) -> f64 {
        z_score(self.empirical_avg_power - self.analytic_avg_power, self.power_std_err)
    }

    /// Average power stays within the budget up to three standard errors.
    pub fn within_budget(&self) -> bool {
        self.empirical_avg_power <= self.budget + 3.0 * self.power_std_err + 1e-12 * self.budget.max(1.0)
    }
}

fn z_score(gap: f64, se: f64) -> f64 {
    if se > 0.0 {
        gap / se
    } else if gap.abs() <= 1e-12 {
        0.0
    } else {
        f64::INFINITY.copysign(gap)
    }
}

/// Running mean and variance.
#[derive(Default)]
struct Moments {
    n: u64,
    mean: f64,
    m2: f64,
}

impl Moments {
    fn push(&mut self, x: f64) {
        self.n += 1;
        let d = x - self.mean;
        self.mean += d / self.n as f64;
        self.m2 += d * (x - self.mean);
    }

    fn std_err(&self) -> f64 {
        if self.n < 2 {
            return 0.0;
        }
        (self.m2 / (self.n - 1) as f64 / self.n as f64).sqrt()
    }
}

/// Activation pattern for one policy.
struct Activator {
    prob: f64,
    schedule: Schedule,
    k: u64,
}

impl Activator {
    fn new(prob: f64, schedule: Schedule) -> Self {
        Self { prob, schedule, k: 0 }
    }

    fn next<R: Rng>(&mut self, rng: &mut R) -> bool {
        let on = match self.schedule {
            Schedule::Bernoulli => self.prob >= 1.0 || (self.prob > 0.0 && rng.gen::<f64>() < self.prob),
            Schedule::DutyCycle => {
                let before = (self.k as f64 * self.prob).floor();
                let after = ((self.k + 1) as f64 * self.prob).floor();
                after > before
            }
        };
        self.k += 1;
        on
    }
}

fn check_slots(n_slots: u64) -> Result<()> {
    if n_slots == 0 {
        return Err(Error::invalid("n_slots", "must be >= 1"));
    }
    Ok(())
}

pub fn simulate(alloc: &ModeAllocation, g: &ChannelGains, cm: &CircuitModel, n_slots: u64, seed: u64) -> Result<SimReport> {
    simulate_with(alloc, g, cm, n_slots, seed, Schedule::Bernoulli)
}

pub fn simulate_with(
    alloc: &ModeAllocation,
    g: &ChannelGains,
    cm: &CircuitModel,
    n_slots: u64,
    seed: u64,
    schedule: Schedule,
) -> Result<SimReport> {
    check_slots(n_slots)?;
    if !(0.0..=1.0).contains(&alloc.prob) {
        return Err(Error::invalid("prob", format!("must lie in [0, 1], got {}", alloc.prob)));
    }
    let rate = alloc.slot_rate(g);
    let power = alloc.slot_power(cm);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut act = Activator::new(alloc.prob, schedule);
    let (mut r, mut p) = (Moments::default(), Moments::default());
    for _ in 0..n_slots {
        let on = alloc.mode != Mode::Silent && act.next(&mut rng);
        r.push(if on { rate } else { 0.0 });
        p.push(if on { power } else { 0.0 });
    }
    Ok(SimReport {
        n_slots,
        empirical_throughput: r.mean,
        empirical_avg_power: p.mean,
        analytic_throughput: alloc.throughput,
        analytic_avg_power: alloc.avg_power,
        throughput_std_err: r.std_err(),
        power_std_err: p.std_err(),
        budget: alloc.avg_power,
        rng_seed: seed,
        rng_algorithm: RNG_ALGORITHM,
        schedule,
    })
}

/// Runs a mixed policy: each slot first picks the direct link with
/// probability `theta`, then follows that mode's on-off policy.
pub fn simulate_mixed(
    sol: &MixedSolution,
    g: &ChannelGains,
    cm: &CircuitModel,
    n_slots: u64,
    seed: u64,
    schedule: Schedule,
) -> Result<SimReport> {
    check_slots(n_slots)?;
    let parts = [sol.dlt_alloc, sol.rat_alloc];
    let rates = parts.map(|a| a.slot_rate(g));
    let powers = parts.map(|a| a.slot_power(cm));
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut chooser = Activator::new(sol.theta_star, schedule);
    let mut acts = parts.map(|a| Activator::new(a.prob, schedule));
    let (mut r, mut p) = (Moments::default(), Moments::default());
    for _ in 0..n_slots {
        let i = if chooser.next(&mut rng) { 0 } else { 1 };
        let on = parts[i].mode != Mode::Silent && acts[i].next(&mut rng);
        r.push(if on { rates[i] } else { 0.0 });
        p.push(if on { powers[i] } else { 0.0 });
    }
    let theta = sol.theta_star;
    Ok(SimReport {
        n_slots,
        empirical_throughput: r.mean,
        empirical_avg_power: p.mean,
        analytic_throughput: sol.throughput,
        analytic_avg_power: theta * parts[0].avg_power + (1.0 - theta) * parts[1].avg_power,
        throughput_std_err: r.std_err(),
        power_std_err: p.std_err(),
        budget: sol.p_0,
        rng_seed: seed,
        rng_algorithm: RNG_ALGORITHM,
        schedule,
    })
}

/// Independent runs for several seeds, in parallel, in seed order.
pub fn simulate_seeds(
    alloc: &ModeAllocation,
    g: &ChannelGains,
    cm: &CircuitModel,
    n_slots: u64,
    seeds: &[u64],
) -> Result<Vec<SimReport>> {
    seeds.par_iter().map(|&s| simulate(alloc, g, cm, n_slots, s)).collect()
}

/// Constant direct-link transmission with all power above the circuit cost.
pub fn baseline_cdlt(p_0: f64, g: &ChannelGains, cm: &CircuitModel) -> ModeAllocation {
    if p_0 > cm.alpha_d {
        ModeAllocation::new(Mode::Dlt, p_0 - cm.alpha_d, 0.0, 1.0, g, cm)
    } else {
        ModeAllocation::silent()
    }
}

/// Constant relay-assisted transmission on the point where both the
/// power and the decoding constraint bind.
pub fn baseline_crat_dl(p_0: f64, g: &ChannelGains, cm: &CircuitModel) -> Result<ModeAllocation> {
    g.require_relay_admissible()?;
    if p_0 <= cm.alpha_r {
        return Ok(ModeAllocation::silent());
    }
    let v = v_root(p_0, g, cm)?;
    let p_r = (2.0 * (p_0 - cm.alpha_r) - v).max(0.0);
    Ok(ModeAllocation::new(Mode::RatDl, v, p_r, 1.0, g, cm))
}
