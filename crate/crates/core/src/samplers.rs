//! Reproducible random streams and the increments the engine consumes.
//!
//! Every `(root_seed, path_id, channel)` triple owns its own ChaCha8 stream: the
//! triple is written verbatim into the 256-bit key, so the mapping is injective
//! and no channel can perturb another.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp1, StandardNormal};
use serde::{Deserialize, Serialize};
use statrs::function::gamma::gamma;

use crate::error::{Error, Result};
use crate::measures::{JumpMeasure, Role, TailSampler};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Channel {
    Brownian,
    Jumps0,
    Jumps1,
    Thinning,
    /// Exact stable increments of compensated power-law noise.
    Stable,
}

impl Channel {
    fn tag(self) -> u64 {
        match self {
            Channel::Brownian => 1,
            Channel::Jumps0 => 2,
            Channel::Jumps1 => 3,
            Channel::Thinning => 4,
            Channel::Stable => 5,
        }
    }
}

const DOMAIN: u64 = 0x6e6e_6a75_6d70_0001;

#[derive(Debug, Clone)]
pub struct RandomStream {
    root_seed: u64,
    path_id: u64,
    channel: Channel,
    rng: ChaCha8Rng,
}

impl RandomStream {
    pub fn new(root_seed: u64, path_id: u64, channel: Channel) -> Self {
        let mut key = [0u8; 32];
        key[0..8].copy_from_slice(&root_seed.to_le_bytes());
        key[8..16].copy_from_slice(&path_id.to_le_bytes());
        key[16..24].copy_from_slice(&channel.tag().to_le_bytes());
        key[24..32].copy_from_slice(&DOMAIN.to_le_bytes());
        RandomStream { root_seed, path_id, channel, rng: ChaCha8Rng::from_seed(key) }
    }

    pub fn root_seed(&self) -> u64 {
        self.root_seed
    }

    pub fn path_id(&self) -> u64 {
        self.path_id
    }

    pub fn channel(&self) -> Channel {
        self.channel
    }

    /// Uniform on the open interval (0, 1).
    pub fn uniform(&mut self) -> f64 {
        loop {
            let u: f64 = self.rng.random();
            if u > 0.0 {
                return u;
            }
        }
    }

    pub fn standard_normal(&mut self) -> f64 {
        StandardNormal.sample(&mut self.rng)
    }

    pub fn exponential(&mut self, rate: f64) -> f64 {
        let e: f64 = Exp1.sample(&mut self.rng);
        e / rate
    }

    /// N(0, dt) increment.
    pub fn brownian_increment(&mut self, dt: f64) -> f64 {
        debug_assert!(dt > 0.0);
        dt.sqrt() * self.standard_normal()
    }

    /// Increment over `dt` of the centered spectrally positive stable process
    /// with Lévy measure `c z^{-1-α} dz`.
    pub fn stable_increment(&mut self, alpha: f64, c: f64, dt: f64) -> Result<f64> {
        let law = StableLaw::new(alpha, c)?;
        Ok(law.sample(self, dt))
    }
}

/// Totally skewed (β = 1) stable law, drawn by Chambers–Mallows–Stuck and
/// scaled so that its Lévy measure is `c z^{-1-α} dz` with zero mean.
#[derive(Debug, Clone, Copy)]
pub struct StableLaw {
    alpha: f64,
    inv_alpha: f64,
    shift: f64,
    skew_scale: f64,
    unit_scale: f64,
}

impl StableLaw {
    pub fn new(alpha: f64, c: f64) -> Result<Self> {
        if !(alpha > 1.0 && alpha < 2.0) {
            return Err(Error::InvalidAlpha(alpha));
        }
        if !(c > 0.0) {
            return Err(Error::InvalidMeasure(format!("stable intensity c = {c} must be positive")));
        }
        let half = PI * alpha / 2.0;
        // ST-parametrization scale: γ^α = -c Γ(-α) cos(πα/2), with Γ(-α) = Γ(2-α)/(α(α-1)).
        let gamma_neg = gamma(2.0 - alpha) / (alpha * (alpha - 1.0));
        let scale = (-c * gamma_neg * half.cos()).powf(1.0 / alpha);
        Ok(StableLaw {
            alpha,
            inv_alpha: 1.0 / alpha,
            shift: half.tan().atan() / alpha,
            skew_scale: (1.0 / half.cos().abs()).powf(1.0 / alpha),
            unit_scale: scale,
        })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    /// log E[e^{-λ X_dt}] = dt · c λ^α Γ(2-α)/(α(α-1)).
    pub fn laplace_exponent(alpha: f64, c: f64, lambda: f64) -> f64 {
        c * lambda.powf(alpha) * gamma(2.0 - alpha) / (alpha * (alpha - 1.0))
    }

    pub fn sample(&self, s: &mut RandomStream, dt: f64) -> f64 {
        let v = PI * (s.uniform() - 0.5);
        let w: f64 = Exp1.sample(&mut s.rng);
        let a = self.alpha;
        let arg = a * (v + self.shift);
        let x = self.skew_scale * arg.sin() / v.cos().powf(self.inv_alpha)
            * ((v - arg).cos() / w).powf((1.0 - a) / a);
        self.unit_scale * dt.powf(self.inv_alpha) * x
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum JumpChannel {
    N0,
    N1,
}

/// A scheduled or applied jump.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct JumpEvent {
    pub time: f64,
    pub size: f64,
    pub channel: JumpChannel,
    pub compensated: bool,
}

/// Poisson event times at `dominating_rate` on `[0, horizon]`, each carrying a
/// mark from the normalized restriction of `m` to `(ε, ∞)`.
pub fn big_jump_schedule(
    s: &mut RandomStream,
    m: &JumpMeasure,
    eps: f64,
    horizon: f64,
    dominating_rate: f64,
) -> Result<Vec<JumpEvent>> {
    if horizon <= 0.0 {
        return Ok(Vec::new());
    }
    let marks: TailSampler = m.tail_sampler(eps)?;
    let compensated = m.role() == Role::Compensated;
    let channel = if compensated { JumpChannel::N0 } else { JumpChannel::N1 };
    let mut out = Vec::new();
    if dominating_rate <= 0.0 {
        return Ok(out);
    }
    let mut t = 0.0;
    loop {
        t += s.exponential(dominating_rate);
        if t > horizon {
            break;
        }
        let z = marks.mark(s.uniform());
        out.push(JumpEvent { time: t, size: z, channel, compensated });
    }
    Ok(out)
}

/// Accept a dominating event with probability `state_rate / dominating_state_rate`.
pub fn thinning_accept(s: &mut RandomStream, state_rate: f64, dominating_state_rate: f64) -> Result<bool> {
    if state_rate > dominating_state_rate {
        return Err(Error::RateExceedsDominator { rate: state_rate, dominator: dominating_state_rate });
    }
    let u = s.uniform();
    Ok(u * dominating_state_rate < state_rate)
}
