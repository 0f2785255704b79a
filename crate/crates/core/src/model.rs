//! Channel and power-consumption model of the three-node relay channel.
//!
//! All powers are in Watts and all channel gains are linear power gains with
//! unit noise variance at every receiver. Rates are in b/s/Hz.

use std::f64::consts::LN_2;
use std::fmt;

use crate::error::{Error, Result};

/// AWGN capacity `log2(1 + x)`.
pub fn capacity(x: f64) -> Result<f64> {
    if !(1.0 + x > 0.0) {
        return Err(Error::CapacityDomain(x));
    }
    Ok(cap(x))
}

/// Unchecked `log2(1 + x)`; callers guarantee `x >= 0`.
#[inline]
pub(crate) fn cap(x: f64) -> f64 {
    x.ln_1p() / LN_2
}

/// Derivative of `log2(1 + g x)` with respect to `x`.
#[inline]
pub(crate) fn cap_slope(g: f64, x: f64) -> f64 {
    g / (LN_2 * (1.0 + g * x))
}

/// Linear power gains of the source-destination, source-relay and
/// relay-destination links.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChannelGains {
    pub h_sd: f64,
    pub h_sr: f64,
    pub h_rd: f64,
}

impl ChannelGains {
    pub fn new(h_sd: f64, h_sr: f64, h_rd: f64) -> Result<Self> {
        for (name, v) in [("h_sd", h_sd), ("h_sr", h_sr), ("h_rd", h_rd)] {
            if !v.is_finite() || v < 0.0 {
                return Err(Error::invalid(name, format!("gain must be finite and >= 0, got {v}")));
            }
        }
        Ok(Self { h_sd, h_sr, h_rd })
    }

    /// Gains given in dB, converted with `10^(x/10)`.
    pub fn from_db(h_sd_db: f64, h_sr_db: f64, h_rd_db: f64) -> Result<Self> {
        Self::new(db_to_linear(h_sd_db), db_to_linear(h_sr_db), db_to_linear(h_rd_db))
    }

    /// Decode-and-forward only beats the direct link when `h_sr >= 2 h_sd`.
    pub fn relay_admissible(&self) -> bool {
        self.h_sr >= 2.0 * self.h_sd
    }

    pub(crate) fn require_relay_admissible(&self) -> Result<()> {
        if self.relay_admissible() {
            Ok(())
        } else {
            Err(Error::RelayInadmissible {
                h_sr: self.h_sr,
                h_sd: self.h_sd,
            })
        }
    }
}

pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

/// Per-node circuit powers consumed in the active mode.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CircuitPowers {
    /// Transmit circuitry at the source.
    pub p_ct_s: f64,
    /// Receive circuitry at the relay.
    pub p_cr_r: f64,
    /// Transmit circuitry at the relay.
    pub p_ct_r: f64,
    /// Receive circuitry at the destination.
    pub p_cr_d: f64,
}

/// Active-mode circuit power aggregates for each transmission mode.
///
/// `alpha_d` is charged by direct-link slots, `alpha_r` by relay slots that
/// keep the destination listening in both phases, and `alpha_e` by relay
/// slots without a direct link.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CircuitModel {
    pub alpha_d: f64,
    pub alpha_r: f64,
    pub alpha_e: f64,
    raw: Option<CircuitPowers>,
}

impl CircuitModel {
    /// Aggregates given directly (no per-node breakdown).
    pub fn from_aggregates(alpha_d: f64, alpha_r: f64, alpha_e: f64) -> Result<Self> {
        for (name, v) in [("alpha_d", alpha_d), ("alpha_r", alpha_r), ("alpha_e", alpha_e)] {
            if !v.is_finite() || v < 0.0 {
                return Err(Error::invalid(name, format!("circuit power must be finite and >= 0, got {v}")));
            }
        }
        Ok(Self {
            alpha_d,
            alpha_r,
            alpha_e,
            raw: None,
        })
    }

    pub fn raw(&self) -> Option<CircuitPowers> {
        self.raw
    }

    /// Recomputes the aggregates from the stored per-node powers, if any.
    pub fn rederive(&self) -> Result<Self> {
        match self.raw {
            Some(raw) => derive_aggregates(raw),
            None => Ok(*self),
        }
    }
}

/// Builds the mode aggregates from per-node circuit powers.
///
/// The relay aggregate halves each phase: the first phase keeps the source
/// transmitter and both receivers on, the second the relay transmitter and
/// the destination receiver.
pub fn derive_aggregates(raw: CircuitPowers) -> Result<CircuitModel> {
    let CircuitPowers {
        p_ct_s,
        p_cr_r,
        p_ct_r,
        p_cr_d,
    } = raw;
    for (name, v) in [("p_ct_s", p_ct_s), ("p_cr_r", p_cr_r), ("p_ct_r", p_ct_r), ("p_cr_d", p_cr_d)] {
        if !v.is_finite() || v < 0.0 {
            return Err(Error::invalid(name, format!("circuit power must be finite and >= 0, got {v}")));
        }
    }
    let alpha_d = p_ct_s + p_cr_d;
    let alpha_r = 0.5 * (p_ct_s + p_cr_r + p_cr_d) + 0.5 * (p_ct_r + p_cr_d);
    let alpha_e = alpha_r - 0.5 * p_cr_d;
    Ok(CircuitModel {
        alpha_d,
        alpha_r,
        alpha_e,
        raw: Some(raw),
    })
}

/// Half-duplex decode-and-forward rate for one slot.
pub fn df_rate(p_s: f64, p_r: f64, g: &ChannelGains) -> f64 {
    0.5 * cap(p_s * g.h_sr).min(cap(p_s * g.h_sd) + cap(p_r * g.h_rd))
}

/// Two-hop rate when the destination ignores the source.
pub fn two_hop_rate(p_s: f64, p_r: f64, g: &ChannelGains) -> f64 {
    0.5 * cap(p_s * g.h_sr).min(cap(p_r * g.h_rd))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Mode {
    Dlt,
    RatDl,
    RatWdl,
    Silent,
}

impl Mode {
    pub fn label(&self) -> &'static str {
        match self {
            Mode::Dlt => "DLT",
            Mode::RatDl => "RAT_DL",
            Mode::RatWdl => "RAT_WDL",
            Mode::Silent => "SILENT",
        }
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

/// A stationary on-off policy: in a `prob` fraction of slots transmit with
/// `(p_s, p_r)` in `mode`, stay asleep otherwise.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModeAllocation {
    pub mode: Mode,
    pub p_s: f64,
    pub p_r: f64,
    pub prob: f64,
    pub throughput: f64,
    pub avg_power: f64,
}

impl ModeAllocation {
    pub fn silent() -> Self {
        Self {
            mode: Mode::Silent,
            p_s: 0.0,
            p_r: 0.0,
            prob: 0.0,
            throughput: 0.0,
            avg_power: 0.0,
        }
    }

    /// Builds an allocation and fills in throughput and average power.
    pub fn new(mode: Mode, p_s: f64, p_r: f64, prob: f64, g: &ChannelGains, cm: &CircuitModel) -> Self {
        if mode == Mode::Silent || prob <= 0.0 {
            return Self::silent();
        }
        let p_r = if mode == Mode::Dlt { 0.0 } else { p_r };
        let mut alloc = Self {
            mode,
            p_s,
            p_r,
            prob,
            throughput: 0.0,
            avg_power: 0.0,
        };
        alloc.throughput = prob * alloc.slot_rate(g);
        alloc.avg_power = prob * alloc.slot_power(cm);
        alloc
    }

    /// Rate achieved in an active slot.
    pub fn slot_rate(&self, g: &ChannelGains) -> f64 {
        match self.mode {
            Mode::Dlt => cap(self.p_s * g.h_sd),
            Mode::RatDl => df_rate(self.p_s, self.p_r, g),
            Mode::RatWdl => two_hop_rate(self.p_s, self.p_r, g),
            Mode::Silent => 0.0,
        }
    }

    /// Total power drawn in an active slot, circuits included.
    pub fn slot_power(&self, cm: &CircuitModel) -> f64 {
        match self.mode {
            Mode::Dlt => self.p_s + cm.alpha_d,
            Mode::RatDl => 0.5 * (self.p_s + self.p_r) + cm.alpha_r,
            Mode::RatWdl => 0.5 * (self.p_s + self.p_r) + cm.alpha_e,
            Mode::Silent => 0.0,
        }
    }
}
