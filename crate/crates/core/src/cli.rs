//! Command-line front end: scenario files, sweeps, region maps and
//! simulation runs, all emitted as CSV.
//!
//! Scenario files are flat `key = value` text with `#` comments:
//!
//! ```text
//! h_sd = 1
//! h_sr = 10
//! h_rd = 3
//! alpha_d = 0.2      # or p_ct_s, p_cr_r, p_ct_r, p_cr_d
//! alpha_r = 0.24
//! alpha_e = 0.18
//! p0 = 1
//! sweep.variable = P0
//! sweep.from = 0.1
//! sweep.to = 2
//! sweep.steps = 50
//! modes = DLT,RAT_DL,RAT_WDL,MT,CDLT,CRAT_DL
//! ```

use std::fmt::{self, Write as _};
use std::path::PathBuf;
use std::str::FromStr;

use clap::{Parser, Subcommand};
use rayon::prelude::*;

use crate::dlt::DltSolver;
use crate::error::{Error, Result};
use crate::mixed::MixedSolver;
use crate::model::{db_to_linear, derive_aggregates, ChannelGains, CircuitModel, CircuitPowers, ModeAllocation};
use crate::rat_dl::RatDlSolver;
use crate::rat_wdl::RatWdlSolver;
use crate::sim::{baseline_cdlt, baseline_crat_dl, simulate_mixed, simulate_with, Schedule, SimReport};

pub const SWEEP_HEADER: &str = "variable,value,mode,p_s,p_r,prob,theta,throughput,case_label";
pub const REGION_HEADER: &str = "h_sr,h_rd,winner,theta,throughput";
pub const SIM_HEADER: &str = "mode,n_slots,seed,rng_algorithm,schedule,budget,\
empirical_throughput,analytic_throughput,throughput_std_err,\
empirical_avg_power,analytic_avg_power,power_std_err";

/// Schemes that can be requested on the command line.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Scheme {
    Dlt,
    RatDl,
    RatWdl,
    Mt,
    Cdlt,
    CratDl,
    Silent,
}

impl Scheme {
    pub const ALL: [Scheme; 6] = [Scheme::Dlt, Scheme::RatDl, Scheme::RatWdl, Scheme::Mt, Scheme::Cdlt, Scheme::CratDl];

    pub fn label(&self) -> &'static str {
        match self {
            Scheme::Dlt => "DLT",
            Scheme::RatDl => "RAT_DL",
            Scheme::RatWdl => "RAT_WDL",
            Scheme::Mt => "MT",
            Scheme::Cdlt => "CDLT",
            Scheme::CratDl => "CRAT_DL",
            Scheme::Silent => "SILENT",
        }
    }

    fn uses_relay(&self) -> bool {
        matches!(self, Scheme::RatDl | Scheme::Mt | Scheme::CratDl)
    }
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for Scheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let norm = s.trim().to_ascii_uppercase().replace('-', "_");
        Scheme::ALL
            .into_iter()
            .chain([Scheme::Silent])
            .find(|m| m.label() == norm)
            .ok_or_else(|| Error::invalid("modes", format!("unknown mode `{s}`")))
    }
}

fn parse_modes(s: &str) -> Result<Vec<Scheme>> {
    let modes = s
        .split(',')
        .filter(|t| !t.trim().is_empty())
        .map(Scheme::from_str)
        .collect::<Result<Vec<_>>>()?;
    if modes.is_empty() {
        return Err(Error::invalid("modes", "at least one mode is required"));
    }
    Ok(modes)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepVar {
    P0,
    HSr,
    HRd,
    AlphaD,
    AlphaR,
}

impl SweepVar {
    pub fn label(&self) -> &'static str {
        match self {
            SweepVar::P0 => "P0",
            SweepVar::HSr => "h_sr",
            SweepVar::HRd => "h_rd",
            SweepVar::AlphaD => "alpha_d",
            SweepVar::AlphaR => "alpha_r",
        }
    }

    fn is_gain(&self) -> bool {
        matches!(self, SweepVar::HSr | SweepVar::HRd)
    }
}

impl FromStr for SweepVar {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        [SweepVar::P0, SweepVar::HSr, SweepVar::HRd, SweepVar::AlphaD, SweepVar::AlphaR]
            .into_iter()
            .find(|v| v.label().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| Error::invalid("sweep.variable", format!("expected one of P0, h_sr, h_rd, alpha_d, alpha_r, got `{s}`")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepSpec {
    pub variable: SweepVar,
    pub from: f64,
    pub to: f64,
    pub steps: usize,
}

impl SweepSpec {
    pub fn values(&self) -> Vec<f64> {
        let n = self.steps;
        (0..n).map(|i| self.from + (self.to - self.from) * i as f64 / (n - 1) as f64).collect()
    }
}

/// A grid axis `from..=to` with `steps` points.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Axis {
    pub from: f64,
    pub to: f64,
    pub steps: usize,
}

impl Axis {
    pub fn values(&self) -> Vec<f64> {
        if self.steps == 1 {
            return vec![self.from];
        }
        let n = self.steps;
        (0..n).map(|i| self.from + (self.to - self.from) * i as f64 / (n - 1) as f64).collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub gains: ChannelGains,
    pub circuit: CircuitModel,
    pub p0: f64,
    pub sweep: SweepSpec,
    pub region_h_sr: Axis,
    pub region_h_rd: Axis,
    pub modes: Vec<Scheme>,
    pub sim_mode: Scheme,
    pub seed: u64,
    pub slots: u64,
}

impl Default for Scenario {
    fn default() -> Self {
        Self {
            gains: ChannelGains::new(1.0, 10.0, 3.0).unwrap(),
            circuit: CircuitModel::from_aggregates(0.2, 0.24, 0.18).unwrap(),
            p0: 1.0,
            sweep: SweepSpec {
                variable: SweepVar::P0,
                from: 0.1,
                to: 2.0,
                steps: 50,
            },
            region_h_sr: Axis { from: 2.0, to: 10.0, steps: 30 },
            region_h_rd: Axis { from: 0.5, to: 10.0, steps: 30 },
            modes: Scheme::ALL.to_vec(),
            sim_mode: Scheme::RatDl,
            seed: 42,
            slots: 1_000_000,
        }
    }
}

const KEYS: &[&str] = &[
    "h_sd",
    "h_sr",
    "h_rd",
    "p_ct_s",
    "p_cr_r",
    "p_ct_r",
    "p_cr_d",
    "alpha_d",
    "alpha_r",
    "alpha_e",
    "p0",
    "sweep.variable",
    "sweep.from",
    "sweep.to",
    "sweep.steps",
    "region.h_sr_from",
    "region.h_sr_to",
    "region.h_sr_steps",
    "region.h_rd_from",
    "region.h_rd_to",
    "region.h_rd_steps",
    "modes",
    "sim.mode",
    "seed",
    "slots",
];

const RAW_KEYS: [&str; 4] = ["p_ct_s", "p_cr_r", "p_ct_r", "p_cr_d"];
const GAIN_KEYS: [&str; 9] = [
    "h_sd",
    "h_sr",
    "h_rd",
    "region.h_sr_from",
    "region.h_sr_to",
    "region.h_rd_from",
    "region.h_rd_to",
    "sweep.from",
    "sweep.to",
];

/// One `key = value` assignment and the line it came from (0 for overrides).
#[derive(Debug, Clone)]
struct Entry {
    key: String,
    value: String,
    line: usize,
}

fn config_err(line: usize, reason: impl Into<String>) -> Error {
    let reason = reason.into();
    if line == 0 {
        Error::invalid("command line", reason)
    } else {
        Error::Config { line, reason }
    }
}

fn parse_lines(text: &str) -> Result<Vec<Entry>> {
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let Some((k, v)) = line.split_once('=') else {
            return Err(config_err(i + 1, format!("expected `key = value`, got `{line}`")));
        };
        out.push(Entry {
            key: k.trim().to_string(),
            value: v.trim().to_string(),
            line: i + 1,
        });
    }
    Ok(out)
}

fn override_entry(kv: &str) -> Result<Entry> {
    let Some((k, v)) = kv.split_once('=') else {
        return Err(config_err(0, format!("expected KEY=VALUE, got `{kv}`")));
    };
    Ok(Entry {
        key: k.trim().to_string(),
        value: v.trim().to_string(),
        line: 0,
    })
}

/// Builds a scenario from entries applied in order over the defaults.
/// With `db` set, gain-valued keys are read in dB.
fn build_scenario(entries: &[Entry], db: bool) -> Result<Scenario> {
    let mut last: Vec<(&str, &Entry)> = Vec::new();
    for e in entries {
        let Some(&key) = KEYS.iter().find(|k| **k == e.key) else {
            return Err(config_err(e.line, format!("unknown key `{}`", e.key)));
        };
        last.retain(|(k, _)| *k != key);
        last.push((key, e));
    }
    let get = |k: &str| last.iter().find(|(key, _)| *key == k).map(|(_, e)| *e);
    let num = |k: &str| -> Result<Option<f64>> {
        let Some(e) = get(k) else { return Ok(None) };
        let v: f64 = e
            .value
            .parse()
            .map_err(|_| config_err(e.line, format!("`{k}` must be a number, got `{}`", e.value)))?;
        if !v.is_finite() {
            return Err(config_err(e.line, format!("`{k}` must be finite")));
        }
        let sweep_gain = k.starts_with("sweep.") && matches!(get("sweep.variable").map(|e| e.value.parse::<SweepVar>()), Some(Ok(v)) if v.is_gain());
        let is_gain = GAIN_KEYS.contains(&k) && (!k.starts_with("sweep.") || sweep_gain);
        Ok(Some(if db && is_gain { db_to_linear(v) } else { v }))
    };
    let int = |k: &str| -> Result<Option<u64>> {
        let Some(e) = get(k) else { return Ok(None) };
        e.value
            .parse()
            .map(Some)
            .map_err(|_| config_err(e.line, format!("`{k}` must be a non-negative integer, got `{}`", e.value)))
    };
    let line_of = |k: &str| get(k).map_or(0, |e| e.line);

    let mut s = Scenario::default();
    let h_sd = num("h_sd")?.unwrap_or(s.gains.h_sd);
    let h_sr = num("h_sr")?.unwrap_or(s.gains.h_sr);
    let h_rd = num("h_rd")?.unwrap_or(s.gains.h_rd);
    s.gains = ChannelGains::new(h_sd, h_sr, h_rd)?;

    let raw_given: Vec<&str> = RAW_KEYS.iter().copied().filter(|k| get(k).is_some()).collect();
    if !raw_given.is_empty() {
        if let Some(k) = ["alpha_d", "alpha_r", "alpha_e"].into_iter().find(|k| get(k).is_some()) {
            return Err(config_err(line_of(k), format!("`{k}` conflicts with per-node circuit powers")));
        }
        if let Some(k) = RAW_KEYS.iter().find(|k| get(k).is_none()) {
            return Err(config_err(line_of(raw_given[0]), format!("per-node circuit powers need `{k}` as well")));
        }
        let v = |k| num(k).map(|x| x.unwrap());
        s.circuit = derive_aggregates(CircuitPowers {
            p_ct_s: v("p_ct_s")?,
            p_cr_r: v("p_cr_r")?,
            p_ct_r: v("p_ct_r")?,
            p_cr_d: v("p_cr_d")?,
        })?;
    } else {
        let a_d = num("alpha_d")?.unwrap_or(s.circuit.alpha_d);
        let a_r = num("alpha_r")?;
        let a_e = match (num("alpha_e")?, a_r) {
            (Some(e), _) => e,
            (None, Some(r)) => r,
            (None, None) => s.circuit.alpha_e,
        };
        s.circuit = CircuitModel::from_aggregates(a_d, a_r.unwrap_or(s.circuit.alpha_r), a_e)?;
    }

    if let Some(p) = num("p0")? {
        if p < 0.0 {
            return Err(config_err(line_of("p0"), "`p0` must be >= 0"));
        }
        s.p0 = p;
    }
    if let Some(e) = get("sweep.variable") {
        s.sweep.variable = e.value.parse().map_err(|err: Error| config_err(e.line, err.to_string()))?;
    }
    s.sweep.from = num("sweep.from")?.unwrap_or(s.sweep.from);
    s.sweep.to = num("sweep.to")?.unwrap_or(s.sweep.to);
    s.sweep.steps = int("sweep.steps")?.map_or(s.sweep.steps, |v| v as usize);
    if !(s.sweep.from < s.sweep.to) {
        return Err(config_err(line_of("sweep.to").max(line_of("sweep.from")), "`sweep.from` must be < `sweep.to`"));
    }
    if s.sweep.steps < 2 {
        return Err(config_err(line_of("sweep.steps"), "`sweep.steps` must be >= 2"));
    }

    for (axis, name) in [(&mut s.region_h_sr, "h_sr"), (&mut s.region_h_rd, "h_rd")] {
        let from_key = format!("region.{name}_from");
        let to_key = format!("region.{name}_to");
        let steps_key = format!("region.{name}_steps");
        axis.from = num(&from_key)?.unwrap_or(axis.from);
        axis.to = num(&to_key)?.unwrap_or(axis.to);
        axis.steps = int(&steps_key)?.map_or(axis.steps, |v| v as usize);
        if !(axis.from > 0.0 && axis.to >= axis.from) {
            return Err(config_err(line_of(&to_key).max(line_of(&from_key)), format!("region bounds for {name} must be positive and ordered")));
        }
        if axis.steps < 1 {
            return Err(config_err(line_of(&steps_key), format!("`{steps_key}` must be >= 1")));
        }
    }

    if let Some(e) = get("modes") {
        s.modes = parse_modes(&e.value).map_err(|err| config_err(e.line, err.to_string()))?;
    }
    if let Some(e) = get("sim.mode") {
        s.sim_mode = e.value.parse().map_err(|err: Error| config_err(e.line, err.to_string()))?;
    }
    s.seed = int("seed")?.unwrap_or(s.seed);
    s.slots = int("slots")?.unwrap_or(s.slots);
    if s.slots == 0 {
        return Err(config_err(line_of("slots"), "`slots` must be >= 1"));
    }
    Ok(s)
}

pub fn parse_scenario(text: &str, db: bool) -> Result<Scenario> {
    build_scenario(&parse_lines(text)?, db)
}

/// Scenario as config text; gains are always written in linear units.
pub fn dump_config(s: &Scenario) -> String {
    let mut out = String::new();
    let g = &s.gains;
    let _ = writeln!(out, "h_sd = {}\nh_sr = {}\nh_rd = {}", g.h_sd, g.h_sr, g.h_rd);
    match s.circuit.raw() {
        Some(r) => {
            let _ = writeln!(
                out,
                "p_ct_s = {}\np_cr_r = {}\np_ct_r = {}\np_cr_d = {}",
                r.p_ct_s, r.p_cr_r, r.p_ct_r, r.p_cr_d
            );
        }
        None => {
            let c = &s.circuit;
            let _ = writeln!(out, "alpha_d = {}\nalpha_r = {}\nalpha_e = {}", c.alpha_d, c.alpha_r, c.alpha_e);
        }
    }
    let _ = writeln!(out, "p0 = {}", s.p0);
    let sw = &s.sweep;
    let _ = writeln!(
        out,
        "sweep.variable = {}\nsweep.from = {}\nsweep.to = {}\nsweep.steps = {}",
        sw.variable.label(),
        sw.from,
        sw.to,
        sw.steps
    );
    for (axis, name) in [(&s.region_h_sr, "h_sr"), (&s.region_h_rd, "h_rd")] {
        let _ = writeln!(
            out,
            "region.{name}_from = {}\nregion.{name}_to = {}\nregion.{name}_steps = {}",
            axis.from, axis.to, axis.steps
        );
    }
    let modes: Vec<&str> = s.modes.iter().map(|m| m.label()).collect();
    let _ = writeln!(out, "modes = {}", modes.join(","));
    let _ = writeln!(out, "sim.mode = {}\nseed = {}\nslots = {}", s.sim_mode, s.seed, s.slots);
    out
}

/// `printf("%.12g")`-style rendering.
pub fn format_number(x: f64) -> String {
    const P: i32 = 12;
    if x == 0.0 {
        return "0".to_string();
    }
    if !x.is_finite() {
        return format!("{x}");
    }
    let sci = format!("{:.*e}", (P - 1) as usize, x);
    let (mantissa, exp) = sci.split_once('e').unwrap();
    let exp: i32 = exp.parse().unwrap();
    let trim = |s: &str| {
        if s.contains('.') {
            s.trim_end_matches('0').trim_end_matches('.').to_string()
        } else {
            s.to_string()
        }
    };
    if exp < -4 || exp >= P {
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{}e{sign}{:02}", trim(mantissa), exp.abs())
    } else {
        trim(&format!("{:.*}", (P - 1 - exp) as usize, x))
    }
}

fn cell(x: Option<f64>) -> String {
    x.map(format_number).unwrap_or_default()
}

/// One CSV row of a sweep or a solve.
#[derive(Debug, Clone, PartialEq)]
pub struct Row {
    pub variable: &'static str,
    pub value: f64,
    pub mode: Scheme,
    pub p_s: Option<f64>,
    pub p_r: Option<f64>,
    pub prob: Option<f64>,
    pub theta: Option<f64>,
    pub throughput: Option<f64>,
    pub case_label: Option<String>,
}

impl Row {
    pub fn to_csv(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{},{}",
            self.variable,
            format_number(self.value),
            self.mode,
            cell(self.p_s),
            cell(self.p_r),
            cell(self.prob),
            cell(self.theta),
            cell(self.throughput),
            self.case_label.as_deref().unwrap_or("")
        )
    }

    fn empty(variable: &'static str, value: f64, mode: Scheme) -> Self {
        Self {
            variable,
            value,
            mode,
            p_s: None,
            p_r: None,
            prob: None,
            theta: None,
            throughput: None,
            case_label: None,
        }
    }

    fn with_alloc(mut self, a: &ModeAllocation, relay: bool) -> Self {
        self.p_s = Some(a.p_s);
        self.p_r = relay.then_some(a.p_r);
        self.prob = Some(a.prob);
        self.throughput = Some(a.throughput);
        self
    }
}

/// Solvers for one channel/circuit pair, built for the requested modes.
struct Solvers {
    g: ChannelGains,
    cm: CircuitModel,
    dlt: Option<DltSolver>,
    rat: Option<RatDlSolver>,
    wdl: Option<RatWdlSolver>,
    mixed: Option<MixedSolver>,
}

impl Solvers {
    fn new(g: &ChannelGains, cm: &CircuitModel, modes: &[Scheme]) -> Result<Self> {
        let want = |m: Scheme| modes.contains(&m);
        let admissible = g.relay_admissible();
        Ok(Self {
            g: *g,
            cm: *cm,
            dlt: if want(Scheme::Dlt) { Some(DltSolver::new(g, cm)?) } else { None },
            rat: if want(Scheme::RatDl) && admissible { Some(RatDlSolver::new(g, cm)?) } else { None },
            wdl: if want(Scheme::RatWdl) { Some(RatWdlSolver::new(g, cm)?) } else { None },
            mixed: if want(Scheme::Mt) { Some(MixedSolver::new(g, cm)?) } else { None },
        })
    }

    fn row(&self, variable: &'static str, value: f64, mode: Scheme, p0: f64) -> Result<Row> {
        let base = Row::empty(variable, value, mode);
        let admissible = self.g.relay_admissible();
        let inadmissible = || Row {
            case_label: Some("INADMISSIBLE".into()),
            ..Row::empty(variable, value, mode)
        };
        Ok(match mode {
            Scheme::Dlt => base.with_alloc(&self.dlt.as_ref().unwrap().solve(p0)?.alloc, false),
            Scheme::RatDl => match &self.rat {
                Some(r) => {
                    let sol = r.solve(p0)?;
                    Row {
                        case_label: Some(sol.case.label().into()),
                        ..base.with_alloc(&sol.alloc, true)
                    }
                }
                None => inadmissible(),
            },
            Scheme::RatWdl => base.with_alloc(&self.wdl.as_ref().unwrap().solve(p0)?.alloc, true),
            Scheme::Mt => {
                let sol = self.mixed.as_ref().unwrap().solve(p0)?;
                let mut row = if sol.theta_star >= 1.0 {
                    base.with_alloc(&sol.dlt_alloc, false)
                } else if sol.theta_star <= 0.0 {
                    base.with_alloc(&sol.rat_alloc, true)
                } else {
                    base
                };
                row.theta = Some(sol.theta_star);
                row.throughput = Some(sol.throughput);
                row.case_label = Some(sol.case.label().into());
                row
            }
            Scheme::Cdlt => base.with_alloc(&baseline_cdlt(p0, &self.g, &self.cm), false),
            Scheme::CratDl => {
                if admissible {
                    base.with_alloc(&baseline_crat_dl(p0, &self.g, &self.cm)?, true)
                } else {
                    inadmissible()
                }
            }
            Scheme::Silent => base.with_alloc(&ModeAllocation::silent(), true),
        })
    }
}

fn warn_inadmissible(g: &ChannelGains, modes: &[Scheme]) {
    if !g.relay_admissible() && modes.iter().any(|m| m.uses_relay()) {
        eprintln!(
            "warning: h_sr = {} < 2 h_sd = {}; relay-assisted modes are inadmissible and MT reduces to DLT",
            g.h_sr,
            2.0 * g.h_sd
        );
    }
}

/// Scenario with the swept variable set to `value`; returns the budget too.
fn at_point(s: &Scenario, value: f64) -> Result<(ChannelGains, CircuitModel, f64)> {
    let mut g = s.gains;
    let mut cm = s.circuit;
    let mut p0 = s.p0;
    match s.sweep.variable {
        SweepVar::P0 => p0 = value,
        SweepVar::HSr => g = ChannelGains::new(g.h_sd, value, g.h_rd)?,
        SweepVar::HRd => g = ChannelGains::new(g.h_sd, g.h_sr, value)?,
        SweepVar::AlphaD => cm = CircuitModel::from_aggregates(value, cm.alpha_r, cm.alpha_e)?,
        // keep the gap between the two relay aggregates
        SweepVar::AlphaR => {
            let alpha_e = (cm.alpha_e + value - cm.alpha_r).max(0.0);
            cm = CircuitModel::from_aggregates(cm.alpha_d, value, alpha_e)?
        }
    }
    if p0 < 0.0 {
        return Err(Error::invalid("P0", format!("budget must be >= 0, got {p0}")));
    }
    Ok((g, cm, p0))
}

pub fn solve_rows(s: &Scenario) -> Result<Vec<Row>> {
    warn_inadmissible(&s.gains, &s.modes);
    let solvers = Solvers::new(&s.gains, &s.circuit, &s.modes)?;
    s.modes.iter().map(|&m| solvers.row("P0", s.p0, m, s.p0)).collect()
}

pub fn sweep_rows(s: &Scenario) -> Result<Vec<Row>> {
    let var = s.sweep.variable;
    let values = s.sweep.values();
    let shared = if var == SweepVar::P0 {
        warn_inadmissible(&s.gains, &s.modes);
        Some(Solvers::new(&s.gains, &s.circuit, &s.modes)?)
    } else {
        None
    };
    let chunks: Vec<Vec<Row>> = values
        .par_iter()
        .map(|&v| {
            let (g, cm, p0) = at_point(s, v)?;
            let local;
            let solvers = match &shared {
                Some(x) => x,
                None => {
                    local = Solvers::new(&g, &cm, &s.modes)?;
                    &local
                }
            };
            s.modes.iter().map(|&m| solvers.row(var.label(), v, m, p0)).collect()
        })
        .collect::<Result<_>>()?;
    Ok(chunks.into_iter().flatten().collect())
}

#[derive(Debug, Clone, PartialEq)]
pub struct RegionCell {
    pub h_sr: f64,
    pub h_rd: f64,
    pub winner: &'static str,
    pub theta: f64,
    pub throughput: f64,
}

impl RegionCell {
    pub fn to_csv(&self) -> String {
        format!(
            "{},{},{},{},{}",
            format_number(self.h_sr),
            format_number(self.h_rd),
            self.winner,
            format_number(self.theta),
            format_number(self.throughput)
        )
    }
}

/// Mixed-transmission winner on the `(h_sr, h_rd)` grid, `h_sr` outermost.
pub fn region_cells(s: &Scenario) -> Result<Vec<RegionCell>> {
    let cells: Vec<(f64, f64)> = s
        .region_h_sr
        .values()
        .into_iter()
        .flat_map(|a| s.region_h_rd.values().into_iter().map(move |b| (a, b)))
        .collect();
    cells
        .par_iter()
        .map(|&(h_sr, h_rd)| {
            let g = ChannelGains::new(s.gains.h_sd, h_sr, h_rd)?;
            let sol = MixedSolver::new(&g, &s.circuit)?.solve(s.p0)?;
            Ok(RegionCell {
                h_sr,
                h_rd,
                winner: sol.winner().label(),
                theta: sol.theta_star,
                throughput: sol.throughput,
            })
        })
        .collect()
}

pub fn simulate_scenario(s: &Scenario, schedule: Schedule) -> Result<SimReport> {
    let (g, cm, p0) = (&s.gains, &s.circuit, s.p0);
    let alloc = match s.sim_mode {
        Scheme::Mt => {
            warn_inadmissible(g, &[Scheme::Mt]);
            let sol = MixedSolver::new(g, cm)?.solve(p0)?;
            return simulate_mixed(&sol, g, cm, s.slots, s.seed, schedule);
        }
        Scheme::Dlt => DltSolver::new(g, cm)?.solve(p0)?.alloc,
        Scheme::RatDl => RatDlSolver::new(g, cm)?.solve(p0)?.alloc,
        Scheme::RatWdl => RatWdlSolver::new(g, cm)?.solve(p0)?.alloc,
        Scheme::Cdlt => baseline_cdlt(p0, g, cm),
        Scheme::CratDl => baseline_crat_dl(p0, g, cm)?,
        Scheme::Silent => ModeAllocation::silent(),
    };
    simulate_with(&alloc, g, cm, s.slots, s.seed, schedule)
}

pub fn sim_csv_row(mode: Scheme, r: &SimReport) -> String {
    let schedule = match r.schedule {
        Schedule::Bernoulli => "bernoulli",
        Schedule::DutyCycle => "duty_cycle",
    };
    format!(
        "{},{},{},{},{},{},{},{},{},{},{},{}",
        mode,
        r.n_slots,
        r.rng_seed,
        r.rng_algorithm,
        schedule,
        format_number(r.budget),
        format_number(r.empirical_throughput),
        format_number(r.analytic_throughput),
        format_number(r.throughput_std_err),
        format_number(r.empirical_avg_power),
        format_number(r.analytic_avg_power),
        format_number(r.power_std_err)
    )
}

#[derive(Debug, Parser)]
#[command(name = "df-relay", version, about = "Throughput-optimal power allocation for a decode-and-forward relay channel")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,

    /// Scenario file (`key = value` lines, `#` comments).
    #[arg(long, global = true, value_name = "PATH")]
    pub config: Option<PathBuf>,

    /// Write CSV here instead of stdout.
    #[arg(long, global = true, value_name = "PATH")]
    pub out: Option<PathBuf>,

    /// Comma-separated subset of DLT,RAT_DL,RAT_WDL,MT,CDLT,CRAT_DL.
    #[arg(long, global = true, value_name = "LIST")]
    pub modes: Option<String>,

    #[arg(long, global = true)]
    pub seed: Option<u64>,

    #[arg(long, global = true)]
    pub slots: Option<u64>,

    /// Budget `P_0` in watts.
    #[arg(long, global = true)]
    pub p0: Option<f64>,

    /// Read gains as dB.
    #[arg(long, global = true)]
    pub db: bool,

    /// Deterministic duty cycling instead of Bernoulli slots.
    #[arg(long, global = true)]
    pub duty_cycle: bool,

    /// Print the resolved scenario as config text and exit.
    #[arg(long, global = true)]
    pub dump_config: bool,

    /// Override one config key; repeatable.
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    pub set: Vec<String>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Optimal allocation of every requested mode at one budget.
    Solve,
    /// Throughput curves over one swept variable.
    Sweep,
    /// Mixed-transmission winner over an (h_sr, h_rd) grid.
    Region,
    /// Monte-Carlo run of one mode's optimal policy.
    Simulate {
        /// Mode to simulate (defaults to `sim.mode`).
        #[arg(long)]
        mode: Option<String>,
    },
}

pub fn resolve_scenario(cli: &Cli) -> Result<Scenario> {
    let mut entries = match &cli.config {
        Some(path) => parse_lines(&std::fs::read_to_string(path)?)?,
        None => Vec::new(),
    };
    for kv in &cli.set {
        entries.push(override_entry(kv)?);
    }
    let mut flag = |key: &str, value: String| {
        entries.push(Entry {
            key: key.into(),
            value,
            line: 0,
        })
    };
    if let Some(m) = &cli.modes {
        flag("modes", m.clone());
    }
    if let Some(v) = cli.seed {
        flag("seed", v.to_string());
    }
    if let Some(v) = cli.slots {
        flag("slots", v.to_string());
    }
    if let Some(v) = cli.p0 {
        flag("p0", v.to_string());
    }
    if let Command::Simulate { mode: Some(m) } = &cli.command {
        flag("sim.mode", m.clone());
    }
    build_scenario(&entries, cli.db)
}

/// Runs a parsed command line and returns the text for the output sink.
pub fn execute(cli: &Cli) -> Result<String> {
    let s = resolve_scenario(cli)?;
    if cli.dump_config {
        return Ok(dump_config(&s));
    }
    let mut out = String::new();
    match &cli.command {
        Command::Solve => {
            let rows = solve_rows(&s)?;
            for r in &rows {
                eprintln!(
                    "{:>7}: p_s={} p_r={} prob={} theta={} throughput={} {}",
                    r.mode.label(),
                    cell(r.p_s),
                    cell(r.p_r),
                    cell(r.prob),
                    cell(r.theta),
                    cell(r.throughput),
                    r.case_label.as_deref().unwrap_or("")
                );
            }
            out.push_str(SWEEP_HEADER);
            out.push('\n');
            for r in rows {
                out.push_str(&r.to_csv());
                out.push('\n');
            }
        }
        Command::Sweep => {
            out.push_str(SWEEP_HEADER);
            out.push('\n');
            for r in sweep_rows(&s)? {
                out.push_str(&r.to_csv());
                out.push('\n');
            }
        }
        Command::Region => {
            if s.region_h_sr.from < 2.0 * s.gains.h_sd {
                eprintln!("note: cells with h_sr < 2 h_sd are DLT by admissibility");
            }
            out.push_str(REGION_HEADER);
            out.push('\n');
            for c in region_cells(&s)? {
                out.push_str(&c.to_csv());
                out.push('\n');
            }
        }
        Command::Simulate { .. } => {
            let schedule = if cli.duty_cycle { Schedule::DutyCycle } else { Schedule::Bernoulli };
            let r = simulate_scenario(&s, schedule)?;
            out.push_str(SIM_HEADER);
            out.push('\n');
            out.push_str(&sim_csv_row(s.sim_mode, &r));
            out.push('\n');
        }
    }
    Ok(out)
}

/// Entry point for the binary; returns the process exit code.
pub fn run(cli: &Cli) -> i32 {
    let result = execute(cli).and_then(|text| match &cli.out {
        Some(path) => std::fs::write(path, text).map_err(|e| {
            eprintln!("error: cannot write {}", path.display());
            Error::from(e)
        }),
        None => {
            use std::io::Write;
            let mut stdout = std::io::stdout().lock();
            stdout.write_all(text.as_bytes()).map_err(Error::from)
        }
    });
    match result {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn number_format_matches_printf_g() {
        let cases = [
            (0.0, "0"),
            (1.0, "1"),
            (0.5, "0.5"),
            (1.0 / 3.0, "0.333333333333"),
            (2.0f64.sqrt() * 1e6, "1414213.56237"),
            (1e-5, "1e-05"),
            (1.5e-7, "1.5e-07"),
            (123456789012.0, "123456789012"),
            (1234567890123.0, "1.23456789012e+12"),
            (-2.25, "-2.25"),
            (9.9999999999996, "10"),
            (0.0001, "0.0001"),
        ];
        for (x, want) in cases {
            assert_eq!(format_number(x), want, "{x}");
        }
    }

    #[test]
    fn parses_config_and_round_trips() {
        let text = "# reference setup\nh_sd = 1\nh_sr = 10   # strong\nh_rd = 3\n\
                    alpha_d = 0.2\nalpha_r = 0.24\nalpha_e = 0.18\nmodes = DLT, MT\n";
        let s = parse_scenario(text, false).unwrap();
        assert_eq!(s.modes, vec![Scheme::Dlt, Scheme::Mt]);
        assert_eq!(parse_scenario(&dump_config(&s), false).unwrap(), s);

        let raw = "p_ct_s = 0.1\np_cr_r = 0.05\np_ct_r = 0.1\np_cr_d = 0.1\nsweep.variable = h_rd\n";
        let s = parse_scenario(raw, false).unwrap();
        assert!((s.circuit.alpha_d - 0.2).abs() < 1e-15);
        assert!((s.circuit.alpha_r - 0.225).abs() < 1e-15);
        assert!((s.circuit.alpha_e - 0.175).abs() < 1e-15);
        assert_eq!(parse_scenario(&dump_config(&s), false).unwrap(), s);
    }

    #[test]
    fn db_gains_are_stored_linear() {
        let s = parse_scenario("h_sd = 0\nh_sr = 10\nh_rd = 3\n", true).unwrap();
        assert!((s.gains.h_sd - 1.0).abs() < 1e-15 && (s.gains.h_sr - 10.0).abs() < 1e-12);
        let dumped = dump_config(&s);
        assert!(dumped.contains("h_sr = 10"));
        assert_eq!(parse_scenario(&dumped, false).unwrap(), s);
    }

    #[test]
    fn config_errors_name_the_field() {
        let err = parse_scenario("h_sd = 1\nbogus = 3\n", false).unwrap_err();
        assert!(matches!(err, Error::Config { line: 2, .. }));
        assert!(err.to_string().contains("bogus"));
        let err = parse_scenario("h_sr = -1\n", false).unwrap_err();
        assert!(err.to_string().contains("h_sr"));
        assert_eq!(err.exit_code(), 2);
        let err = parse_scenario("sweep.steps = 1\n", false).unwrap_err();
        assert!(err.to_string().contains("sweep.steps"));
        let err = parse_scenario("p_ct_s = 1\nalpha_d = 0.2\n", false).unwrap_err();
        assert!(err.to_string().contains("alpha_d"));
        assert!(parse_scenario("modes = DLT,XYZ\n", false).is_err());
        assert!(parse_scenario("h_sd 1\n", false).is_err());
    }

    #[test]
    fn solve_rows_at_low_budget() {
        let s = Scenario {
            p0: 0.5,
            ..Scenario::default()
        };
        let rows = solve_rows(&s).unwrap();
        let mt = rows.iter().find(|r| r.mode == Scheme::Mt).unwrap();
        let rat = rows.iter().find(|r| r.mode == Scheme::RatDl).unwrap();
        assert_eq!(mt.theta, Some(0.0));
        assert_eq!(mt.p_s, rat.p_s);
        assert_eq!(mt.throughput, rat.throughput);

        let zero = Scenario {
            p0: 0.0,
            ..Scenario::default()
        };
        for r in solve_rows(&zero).unwrap() {
            assert_eq!(r.throughput, Some(0.0), "{:?}", r.mode);
        }
    }

    #[test]
    fn inadmissible_relay_rows() {
        let s = Scenario {
            gains: ChannelGains::new(1.0, 1.0, 3.0).unwrap(),
            ..Scenario::default()
        };
        let rows = solve_rows(&s).unwrap();
        let mt = rows.iter().find(|r| r.mode == Scheme::Mt).unwrap();
        let dlt = rows.iter().find(|r| r.mode == Scheme::Dlt).unwrap();
        assert_eq!(mt.throughput, dlt.throughput);
        assert_eq!(mt.theta, Some(1.0));
        let rat = rows.iter().find(|r| r.mode == Scheme::RatDl).unwrap();
        assert_eq!(rat.case_label.as_deref(), Some("INADMISSIBLE"));
    }

    #[test]
    fn alpha_d_sweep_hurts_direct_link() {
        let mut s = Scenario {
            p0: 0.3,
            modes: vec![Scheme::Dlt],
            ..Scenario::default()
        };
        s.sweep = SweepSpec {
            variable: SweepVar::AlphaD,
            from: 0.05,
            to: 0.5,
            steps: 10,
        };
        let t: Vec<f64> = sweep_rows(&s).unwrap().iter().map(|r| r.throughput.unwrap()).collect();
        assert!(t.windows(2).all(|w| w[1] < w[0]));
    }

    #[test]
    fn minimal_sweep_row_count() {
        let mut s = Scenario::default();
        s.sweep.steps = 2;
        assert_eq!(sweep_rows(&s).unwrap().len(), 2 * s.modes.len());
    }
}
