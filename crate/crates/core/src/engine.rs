//! Jump-adapted Euler scheme with big-jump de-compensation, localization by a
//! state cap, patching at immigration jumps, and shared-noise coupling.
//!
//! One stepping core advances a *family* of states driven by identical noise:
//! a family of one is an ordinary path, two is a coupled pair, more gives the
//! continuous-dependence curves.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::measures::{MeasureKind, TailSampler};
use crate::model::{Coef, Model, TermKind};
use crate::samplers::{big_jump_schedule, Channel, JumpChannel, JumpEvent, RandomStream, StableLaw};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CapPolicy {
    Stop,
    Extend,
}

fn default_true() -> bool {
    true
}

fn default_one() -> u32 {
    1
}

fn default_doublings() -> u32 {
    20
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SimulationConfig {
    /// Maximal Euler step.
    pub dt: f64,
    pub horizon: f64,
    pub paths: usize,
    /// Big-jump cutoff for infinite measures.
    pub epsilon: f64,
    /// Localization level; thinning envelopes are taken over [0, m_cap].
    pub m_cap: f64,
    pub seed: u64,
    pub cap_policy: CapPolicy,
    #[serde(default = "default_doublings")]
    pub max_doublings: u32,
    /// Drive compensated stable terms by exact stable increments instead of
    /// truncated big jumps.
    #[serde(default = "default_true")]
    pub exact_stable: bool,
    /// Number of Brownian draws summed per Euler step (coarse/fine coupling).
    #[serde(default = "default_one")]
    pub brownian_substeps: u32,
}

impl Default for SimulationConfig {
    fn default() -> Self {
        SimulationConfig {
            dt: 1e-3,
            horizon: 1.0,
            paths: 1000,
            epsilon: 1e-2,
            m_cap: 100.0,
            seed: 0,
            cap_policy: CapPolicy::Extend,
            max_doublings: 20,
            exact_stable: true,
            brownian_substeps: 1,
        }
    }
}

impl SimulationConfig {
    pub fn validate(&self, x0: &[f64]) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidConfig(m));
        if !(self.dt > 0.0) || !self.dt.is_finite() {
            return bad(format!("config.dt = {} must be positive", self.dt));
        }
        if !(self.horizon >= 0.0) || !self.horizon.is_finite() {
            return bad(format!("config.horizon = {} must be non-negative", self.horizon));
        }
        if !(self.epsilon > 0.0) {
            return bad(format!("config.epsilon = {} must be positive", self.epsilon));
        }
        if self.paths == 0 {
            return bad("config.paths must be at least 1".into());
        }
        if self.brownian_substeps == 0 {
            return bad("config.brownian_substeps must be at least 1".into());
        }
        for &x in x0 {
            if !(x >= 0.0) || !x.is_finite() {
                return bad(format!("initial state {x} must be non-negative"));
            }
            if !(self.m_cap > x) {
                return bad(format!("config.m_cap = {} must exceed the initial state {x}", self.m_cap));
            }
        }
        Ok(())
    }
}

/// Which states a run keeps.
#[derive(Debug, Clone, PartialEq)]
pub enum Recording {
    /// Every grid point and every accepted jump.
    Full,
    /// Only the given observation times (plus time 0).
    Times(Vec<f64>),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum ExitFlag {
    Completed,
    HitCap { time: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimPath {
    pub times: Vec<f64>,
    pub states: Vec<f64>,
    /// Left limits x(t-) at the recorded times.
    pub left: Vec<f64>,
    pub jumps: Vec<JumpEvent>,
    pub exit_flag: ExitFlag,
    /// Euler substeps that undershot the image of 0 and were floored there.
    pub clamp_count: u64,
    /// Running maximum of the state over the whole run.
    pub max_state: f64,
    /// Number of cap doublings under the extend policy.
    pub cap_doublings: u32,
}

impl SimPath {
    /// Càdlàg value at `t`: the state at the last recorded time ≤ t.
    pub fn state_at(&self, t: f64) -> f64 {
        let i = self.times.partition_point(|&s| s <= t);
        self.states[i.saturating_sub(1)]
    }

    pub fn final_state(&self) -> f64 {
        *self.states.last().expect("path has at least one state")
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CoupledPaths {
    pub low: SimPath,
    pub high: SimPath,
    pub root_seed: u64,
    pub path_id: u64,
    /// Steps after which the Euler map reversed the order of the pair.
    pub step_flips: u64,
}

impl CoupledPaths {
    /// Recorded times where `low > high + tol`.
    pub fn violations(&self, tol: f64) -> usize {
        self.low.states.iter().zip(&self.high.states).filter(|(l, h)| **l > **h + tol).count()
    }
}

/// A drift contribution `weight · factor(x)`.
#[derive(Debug, Clone)]
enum Factor {
    Coef(Coef),
    State,
}

impl Factor {
    #[inline]
    fn eval(&self, x: f64) -> f64 {
        match self {
            Factor::Coef(c) => c.eval(x),
            Factor::State => x,
        }
    }
}

#[derive(Debug, Clone)]
struct Source {
    term: usize,
    mass: f64,
    marks: TailSampler,
    /// Thinning coefficient and its envelope, if the term is thinned.
    thin: Option<Coef>,
    envelope: f64,
    floor: f64,
    /// Lower end of the simulated mark range.
    lo: f64,
}

impl Source {
    fn rate(&self) -> f64 {
        self.mass * self.envelope
    }
}

#[derive(Debug, Clone, Default)]
struct Group {
    sources: Vec<Source>,
    cumulative: Vec<f64>,
    total: f64,
}

impl Group {
    fn redominate(&mut self, cap: f64) {
        for s in &mut self.sources {
            if let Some(c) = &s.thin {
                s.envelope = c.running_sup(cap).max(0.0);
            }
        }
        self.cumulative.clear();
        let mut acc = 0.0;
        for s in &self.sources {
            acc += s.rate();
            self.cumulative.push(acc);
        }
        self.total = acc;
    }

    fn pick(&self, u: f64) -> usize {
        let target = u * self.total;
        self.cumulative.partition_point(|&c| c <= target).min(self.sources.len() - 1)
    }
}

/// Model and config compiled into the quantities the stepping loop needs.
#[derive(Debug, Clone)]
pub struct Scheme {
    model: Model,
    cfg: SimulationConfig,
    drift: Vec<(Factor, f64)>,
    exact: Vec<(usize, StableLaw)>,
    groups: [Group; 2],
    /// Variance rate bound of the dropped small compensated jumps.
    truncation_variance_rate: f64,
    drift_at_zero: f64,
}

impl Scheme {
    pub fn new(model: &Model, cfg: &SimulationConfig) -> Result<Scheme> {
        cfg.validate(&[])?;
        let mut drift = Vec::new();
        let mut exact = Vec::new();
        let mut groups = [Group::default(), Group::default()];
        let mut trunc = 0.0;
        for (i, term) in model.terms.iter().enumerate() {
            if cfg.exact_stable {
                if let Some((_, alpha)) = term.exact_stable() {
                    exact.push((i, StableLaw::new(alpha, 1.0)?));
                    continue;
                }
            }
            let m = &term.measure;
            // Finite measures are simulated jump by jump; infinite ones above ε.
            let eps = if matches!(m.kind(), MeasureKind::CompoundPoisson { .. }) { 0.0 } else { cfg.epsilon };
            let floor = term.z_floor();
            let lo = eps.max(floor);
            let factor = match &term.kind {
                TermKind::Thinned(h) => Factor::Coef(h.coef.clone()),
                TermKind::Scaled(phi) => Factor::Coef(phi.clone()),
                TermKind::Proportional => Factor::State,
            };
            let sign = if matches!(term.kind, TermKind::Proportional) { -1.0 } else { 1.0 };
            if term.compensated() {
                let above = m.first_moment_between(lo, f64::INFINITY)?;
                if above != 0.0 {
                    drift.push((factor.clone(), -sign * above));
                }
                if eps > floor {
                    let var = m.integrate(|z| z * z, floor, eps)?;
                    let scale = match &term.kind {
                        TermKind::Thinned(h) => h.coef.running_sup(cfg.m_cap),
                        TermKind::Scaled(phi) => phi.running_sup(cfg.m_cap).powi(2),
                        TermKind::Proportional => cfg.m_cap * cfg.m_cap,
                    };
                    trunc += var * scale;
                }
            } else if eps > floor {
                let below = m.first_moment_between(floor, eps)?;
                if below != 0.0 {
                    drift.push((factor.clone(), sign * below));
                }
            }
            let mass = m.tail_mass(lo);
            if mass > 0.0 {
                let thin = match &term.kind {
                    TermKind::Thinned(h) => Some(h.coef.clone()),
                    _ => None,
                };
                let g = if term.compensated() { 0 } else { 1 };
                groups[g].sources.push(Source {
                    term: i,
                    mass,
                    marks: m.tail_sampler(lo)?,
                    thin,
                    envelope: 1.0,
                    floor,
                    lo,
                });
            }
        }
        for g in &mut groups {
            g.redominate(cfg.m_cap);
        }
        let mut scheme = Scheme {
            model: model.clone(),
            cfg: cfg.clone(),
            drift,
            exact,
            groups,
            truncation_variance_rate: trunc,
            drift_at_zero: 0.0,
        };
        scheme.drift_at_zero = scheme.effective_drift(0.0);
        Ok(scheme)
    }

    /// Whether some compensated stable term is driven by exact stable increments.
    pub fn uses_exact_stable(&self) -> bool {
        !self.exact.is_empty()
    }

    pub fn model(&self) -> &Model {
        &self.model
    }

    pub fn config(&self) -> &SimulationConfig {
        &self.cfg
    }

    /// Upper bound on the variance rate of the discarded small-jump martingale
    /// over [0, m_cap]; multiply by time for the variance budget.
    pub fn truncation_variance_rate(&self) -> f64 {
        self.truncation_variance_rate
    }

    /// Effective drift b(x) minus big-jump compensators plus folded small immigration.
    #[inline]
    pub fn effective_drift(&self, x: f64) -> f64 {
        let mut d = self.model.drift.eval(x);
        for (f, w) in &self.drift {
            d += w * f.eval(x);
        }
        d
    }
}

struct Streams {
    brownian: RandomStream,
    stable: RandomStream,
    jumps: [RandomStream; 2],
    thinning: RandomStream,
}

impl Streams {
    fn new(seed: u64, path_id: u64) -> Self {
        Streams {
            brownian: RandomStream::new(seed, path_id, Channel::Brownian),
            stable: RandomStream::new(seed, path_id, Channel::Stable),
            jumps: [
                RandomStream::new(seed, path_id, Channel::Jumps0),
                RandomStream::new(seed, path_id, Channel::Jumps1),
            ],
            thinning: RandomStream::new(seed, path_id, Channel::Thinning),
        }
    }
}

struct Member {
    x: f64,
    times_len: usize,
    states: Vec<f64>,
    left: Vec<f64>,
    jumps: Vec<JumpEvent>,
    clamps: u64,
    max_state: f64,
}

/// Resumable stepping state for one family.
struct Runner<'s> {
    scheme: &'s Scheme,
    groups: [Group; 2],
    streams: Streams,
    t: f64,
    /// Index of the next regular grid point.
    k: u64,
    next_event: [f64; 2],
    cap: f64,
    doublings: u32,
    exit: ExitFlag,
    members: Vec<Member>,
    times: Vec<f64>,
    full: bool,
    obs: Vec<f64>,
    obs_next: usize,
    flips: u64,
    stable_buf: Vec<f64>,
}

impl<'s> Runner<'s> {
    fn new(scheme: &'s Scheme, x0: &[f64], path_id: u64, recording: &Recording) -> Result<Self> {
        scheme.cfg.validate(x0)?;
        let (full, mut obs) = match recording {
            Recording::Full => (true, Vec::new()),
            Recording::Times(ts) => (false, ts.clone()),
        };
        obs.retain(|&t| t > 0.0 && t <= scheme.cfg.horizon);
        obs.sort_by(f64::total_cmp);
        obs.dedup();
        let mut r = Runner {
            scheme,
            groups: scheme.groups.clone(),
            streams: Streams::new(scheme.cfg.seed, path_id),
            t: 0.0,
            k: 1,
            next_event: [f64::INFINITY; 2],
            cap: scheme.cfg.m_cap,
            doublings: 0,
            exit: ExitFlag::Completed,
            members: x0
                .iter()
                .map(|&x| Member {
                    x,
                    times_len: 0,
                    states: Vec::new(),
                    left: Vec::new(),
                    jumps: Vec::new(),
                    clamps: 0,
                    max_state: x,
                })
                .collect(),
            times: Vec::new(),
            full,
            obs,
            obs_next: 0,
            flips: 0,
            stable_buf: vec![0.0; scheme.exact.len()],
        };
        r.record(None);
        for g in 0..2 {
            r.draw_clock(g);
        }
        Ok(r)
    }

    fn draw_clock(&mut self, g: usize) {
        let total = self.groups[g].total;
        self.next_event[g] = if total > 0.0 { self.t + self.streams.jumps[g].exponential(total) } else { f64::INFINITY };
    }

    fn record(&mut self, left: Option<&[f64]>) {
        self.times.push(self.t);
        for (i, m) in self.members.iter_mut().enumerate() {
            m.states.push(m.x);
            m.left.push(left.map_or(m.x, |l| l[i]));
            m.times_len += 1;
        }
    }

    fn grid_time(&self) -> f64 {
        self.k as f64 * self.scheme.cfg.dt
    }

    fn stopped(&self) -> bool {
        !matches!(self.exit, ExitFlag::Completed)
    }

    /// Re-establish `x ≤ cap` for every member; false if the path must stop.
    fn enforce_cap(&mut self) -> bool {
        let top = self.members.iter().map(|m| m.x).fold(0.0, f64::max);
        if top <= self.cap {
            return true;
        }
        if self.scheme.cfg.cap_policy == CapPolicy::Stop {
            self.exit = ExitFlag::HitCap { time: self.t };
            return false;
        }
        while top > self.cap {
            if self.doublings >= self.scheme.cfg.max_doublings {
                self.exit = ExitFlag::HitCap { time: self.t };
                return false;
            }
            self.cap *= 2.0;
            self.doublings += 1;
        }
        for g in 0..2 {
            self.groups[g].redominate(self.cap);
            if self.next_event[g].is_finite() || self.groups[g].total > 0.0 {
                self.draw_clock(g);
            }
        }
        true
    }

    fn euler(&mut self, h: f64) {
        let s = self.scheme;
        let n = s.cfg.brownian_substeps;
        let db = if n == 1 {
            self.streams.brownian.brownian_increment(h)
        } else {
            let sub = h / n as f64;
            (0..n).map(|_| self.streams.brownian.brownian_increment(sub)).sum()
        };
        for (j, (_, law)) in s.exact.iter().enumerate() {
            self.stable_buf[j] = law.sample(&mut self.streams.stable, h);
        }
        // Floor at the image of 0 under the step (σ(0) = 0 and the stable
        // coefficients vanish at 0). Near 0 the map x ↦ x + σ(x)ΔB dips below
        // that image; flooring there keeps each path's update non-decreasing in x.
        let floor = (s.drift_at_zero * h).max(0.0);
        let check_order = self.members.len() >= 2;
        let mut prev = f64::NEG_INFINITY;
        let mut prev_before = f64::NEG_INFINITY;
        for m in &mut self.members {
            let x = m.x;
            let mut nx = x + s.model.sigma.eval(x) * db + s.effective_drift(x) * h;
            for (j, (ti, _)) in s.exact.iter().enumerate() {
                nx += s.model.terms[*ti].stable_coefficient(x) * self.stable_buf[j];
            }
            if nx < floor {
                nx = floor;
                m.clamps += 1;
            }
            if check_order {
                if x >= prev_before && nx < prev {
                    self.flips += 1;
                }
                prev_before = x;
                prev = nx;
            }
            m.x = nx;
            if nx > m.max_state {
                m.max_state = nx;
            }
        }
    }

    /// Process the event of group `g` at the current time. Returns whether any
    /// member jumped.
    fn event(&mut self, g: usize, scheduled: Option<(usize, f64)>) -> Result<bool> {
        let group = &self.groups[g];
        let (src, z) = match scheduled {
            Some(pair) => pair,
            None => {
                let src = group.pick(self.streams.jumps[g].uniform());
                let z = group.sources[src].marks.mark(self.streams.jumps[g].uniform());
                (src, z)
            }
        };
        let source = &group.sources[src];
        let term = &self.scheme.model.terms[source.term];
        let u = if source.thin.is_some() { self.streams.thinning.uniform() } else { 0.0 };
        let channel = if g == 0 { JumpChannel::N0 } else { JumpChannel::N1 };
        let mut any = false;
        for m in &mut self.members {
            let accept = match &source.thin {
                Some(c) => {
                    let rate = c.eval(m.x);
                    if rate > source.envelope * (1.0 + 1e-12) {
                        return Err(Error::RateExceedsDominator { rate, dominator: source.envelope });
                    }
                    z > source.floor && u * source.envelope < rate
                }
                None => true,
            };
            if !accept {
                continue;
            }
            let size = term.jump(m.x, z);
            if size == 0.0 {
                continue;
            }
            m.x = (m.x + size).max(0.0);
            if m.x > m.max_state {
                m.max_state = m.x;
            }
            any = true;
            if self.full {
                m.jumps.push(JumpEvent { time: self.t, size, channel, compensated: g == 0 });
            }
        }
        Ok(any)
    }

    /// Advance to `t_end`, optionally with the N1 clock switched off.
    fn advance_to(&mut self, t_end: f64, n1_live: bool) -> Result<()> {
        let dt = self.scheme.cfg.dt;
        let tiny = 1e-12 * dt;
        while !self.stopped() && self.t < t_end {
            let grid = self.grid_time();
            let obs = self.obs.get(self.obs_next).copied().unwrap_or(f64::INFINITY);
            let ev1 = if n1_live { self.next_event[1] } else { f64::INFINITY };
            let target = grid.min(obs).min(self.next_event[0]).min(ev1).min(t_end);
            let h = target - self.t;
            if h > 0.0 {
                self.euler(h);
            }
            self.t = target;
            let mut is_grid = false;
            if (grid - target).abs() <= tiny {
                self.k += 1;
                is_grid = true;
            }
            let mut is_obs = false;
            while self.obs_next < self.obs.len() && self.obs[self.obs_next] <= target + tiny {
                self.obs_next += 1;
                is_obs = true;
            }
            if !self.enforce_cap() {
                self.record(None);
                break;
            }
            let left: Vec<f64> = if self.full { self.members.iter().map(|m| m.x).collect() } else { Vec::new() };
            let mut jumped = false;
            for g in 0..2 {
                if g == 1 && !n1_live {
                    continue;
                }
                if self.next_event[g] <= target {
                    jumped |= self.event(g, None)?;
                    self.draw_clock(g);
                    if !self.enforce_cap() {
                        break;
                    }
                }
            }
            let at_end = target >= self.scheme.cfg.horizon;
            if self.full {
                if is_grid || is_obs || jumped || at_end || self.stopped() {
                    self.record(Some(&left));
                }
            } else if is_obs || self.stopped() {
                self.record(None);
            }
        }
        Ok(())
    }

    /// Apply a pre-scheduled immigration event at the current time.
    fn apply_scheduled(&mut self, source: usize, z: f64) -> Result<()> {
        let left: Vec<f64> = self.members.iter().map(|m| m.x).collect();
        let jumped = self.event(1, Some((source, z)))?;
        if !self.enforce_cap() {
            self.record(None);
            return Ok(());
        }
        if jumped && self.full {
            // The Euler step ending at S_k already recorded x(S_k-) unless it
            // coincided with a grid point; replace that record by the patched state.
            if self.times.last() == Some(&self.t) {
                for (i, m) in self.members.iter_mut().enumerate() {
                    *m.states.last_mut().unwrap() = m.x;
                    *m.left.last_mut().unwrap() = left[i];
                }
            } else {
                self.record(Some(&left));
            }
        } else if jumped && !self.full && self.times.last() == Some(&self.t) {
            for m in &mut self.members {
                *m.states.last_mut().unwrap() = m.x;
            }
        }
        Ok(())
    }

    fn finish(self) -> (Vec<SimPath>, u64) {
        let times = self.times;
        let exit = self.exit;
        let doublings = self.doublings;
        let paths = self
            .members
            .into_iter()
            .map(|m| SimPath {
                times: times.clone(),
                states: m.states,
                left: m.left,
                jumps: m.jumps,
                exit_flag: exit,
                clamp_count: m.clamps,
                max_state: m.max_state,
                cap_doublings: doublings,
            })
            .collect();
        (paths, self.flips)
    }
}

/// Simulate a family of states driven by identical noise.
pub fn simulate_family(scheme: &Scheme, x0: &[f64], path_id: u64, recording: &Recording) -> Result<(Vec<SimPath>, u64)> {
    let mut r = Runner::new(scheme, x0, path_id, recording)?;
    r.advance_to(scheme.cfg.horizon, true)?;
    Ok(r.finish())
}

pub fn simulate_path(model: &Model, cfg: &SimulationConfig, x0: f64, path_id: u64) -> Result<SimPath> {
    let scheme = Scheme::new(model, cfg)?;
    simulate_path_with(&scheme, x0, path_id, &Recording::Full)
}

pub fn simulate_path_with(scheme: &Scheme, x0: f64, path_id: u64, recording: &Recording) -> Result<SimPath> {
    let (mut paths, _) = simulate_family(scheme, &[x0], path_id, recording)?;
    Ok(paths.pop().unwrap())
}

/// Shared-noise pair for the comparison property.
pub fn simulate_coupled(model: &Model, cfg: &SimulationConfig, x0_low: f64, x0_high: f64, path_id: u64) -> Result<CoupledPaths> {
    let scheme = Scheme::new(model, cfg)?;
    simulate_coupled_with(&scheme, x0_low, x0_high, path_id, &Recording::Full)
}

pub fn simulate_coupled_with(
    scheme: &Scheme,
    x0_low: f64,
    x0_high: f64,
    path_id: u64,
    recording: &Recording,
) -> Result<CoupledPaths> {
    if !scheme.model.monotone {
        return Err(Error::MonotonicityUnverified);
    }
    if x0_low > x0_high {
        return Err(Error::InvalidConfig(format!("coupled start needs x0_low <= x0_high (got {x0_low} > {x0_high})")));
    }
    let (mut paths, flips) = simulate_family(scheme, &[x0_low, x0_high], path_id, recording)?;
    let high = paths.pop().unwrap();
    let low = paths.pop().unwrap();
    Ok(CoupledPaths { low, high, root_seed: scheme.cfg.seed, path_id, step_flips: flips })
}

/// Solve between the jump times of the finite immigration part and restart from
/// the post-jump state at each of them.
pub fn simulate_patched(model: &Model, cfg: &SimulationConfig, x0: f64, path_id: u64) -> Result<SimPath> {
    let scheme = Scheme::new(model, cfg)?;
    simulate_patched_with(&scheme, x0, path_id, &Recording::Full)
}

pub fn simulate_patched_with(scheme: &Scheme, x0: f64, path_id: u64, recording: &Recording) -> Result<SimPath> {
    let mut r = Runner::new(scheme, &[x0], path_id, recording)?;
    // Pre-draw the immigration schedule, one source at a time, on its own stream.
    let mut stream = RandomStream::new(scheme.cfg.seed, path_id, Channel::Jumps1);
    let mut schedule: Vec<(usize, JumpEvent)> = Vec::new();
    for (si, src) in scheme.groups[1].sources.iter().enumerate() {
        let m = &scheme.model.terms[src.term].measure;
        let events = big_jump_schedule(&mut stream, m, src.lo, scheme.cfg.horizon, src.rate())?;
        schedule.extend(events.into_iter().map(|e| (si, e)));
    }
    schedule.sort_by(|a, b| a.1.time.total_cmp(&b.1.time));
    for (si, ev) in &schedule {
        r.advance_to(ev.time, false)?;
        if r.stopped() {
            break;
        }
        r.apply_scheduled(*si, ev.size)?;
    }
    r.advance_to(scheme.cfg.horizon, false)?;
    let (mut paths, _) = r.finish();
    Ok(paths.pop().unwrap())
}

/// Run `f` on every path of the configured ensemble in parallel, returning the
/// results ordered by path id. Paths are simulated and consumed one at a time,
/// so memory stays bounded by the result type.
pub fn map_paths<R, F>(scheme: &Scheme, x0: f64, recording: &Recording, threads: usize, f: F) -> Result<Vec<R>>
where
    R: Send,
    F: Fn(u64, SimPath) -> R + Sync,
{
    map_ids(scheme.cfg.paths, threads, |id| simulate_path_with(scheme, x0, id, recording).map(|p| f(id, p)))
}

/// Ordered parallel map over path ids `0..n`.
pub fn map_ids<R, F>(n: usize, threads: usize, f: F) -> Result<Vec<R>>
where
    R: Send,
    F: Fn(u64) -> Result<R> + Sync,
{
    let run = || (0..n as u64).into_par_iter().map(&f).collect::<Result<Vec<R>>>();
    if threads == 0 {
        return run();
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| Error::InvalidConfig(format!("thread pool: {e}")))?;
    pool.install(run)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MomentSummary {
    pub n: usize,
    pub mean: f64,
    pub second: f64,
    pub var: f64,
    pub se_mean: f64,
    pub se_second: f64,
}

impl MomentSummary {
    pub fn from_values(values: &[f64]) -> MomentSummary {
        let n = values.len();
        let nf = n as f64;
        let mean = values.iter().sum::<f64>() / nf;
        let second = values.iter().map(|v| v * v).sum::<f64>() / nf;
        let (var, var2) = if n > 1 {
            let v = values.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (nf - 1.0);
            let v2 = values.iter().map(|x| (x * x - second).powi(2)).sum::<f64>() / (nf - 1.0);
            (v, v2)
        } else {
            (0.0, 0.0)
        };
        MomentSummary { n, mean, second, var, se_mean: (var / nf).sqrt(), se_second: (var2 / nf).sqrt() }
    }
}

/// Sample mean and second moment of x(t) with standard errors.
pub fn moment_summary(paths: &[SimPath], t: f64) -> MomentSummary {
    let values: Vec<f64> = paths.iter().map(|p| p.state_at(t)).collect();
    MomentSummary::from_values(&values)
}
