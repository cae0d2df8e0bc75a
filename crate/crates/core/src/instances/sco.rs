use super::{InstanceError, Point};
use crate::rng::Rng;
use rand::Rng as _;
use rand_distr::{Beta, Distribution, LogNormal, Normal};
use serde::{Deserialize, Serialize};
use std::str::FromStr;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScoVariant {
    Cts,
    Oas,
    Ftr,
    Wpf,
}

impl FromStr for ScoVariant {
    type Err = InstanceError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "cts" => Ok(Self::Cts),
            "oas" => Ok(Self::Oas),
            "ftr" => Ok(Self::Ftr),
            "wpf" => Ok(Self::Wpf),
            other => Err(InstanceError::UnknownTag { kind: "SCO variant", tag: other.into() }),
        }
    }
}

/// Generation parameters. Values not fixed by the benchmark tables are
/// chosen here and copied into every instance so runs stay self-describing.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScoParams {
    pub lognormal_mu: f64,
    pub lognormal_sigma: f64,
    pub horizon: usize,
    pub cts_penalty: f64,
    pub cts_clusters: usize,
    pub cts_dim: usize,
    pub cts_noise: f64,
    pub oas_correlation: f64,
    pub ftr_recovery: f64,
    pub ftr_travel_cost: f64,
    pub wpf_intercept: f64,
    pub wpf_slope: f64,
    pub wpf_noise: f64,
    pub wpf_fatigue_growth: f64,
    pub wpf_budget_fraction: f64,
}

impl Default for ScoParams {
    fn default() -> Self {
        ScoParams {
            lognormal_mu: 0.0,
            lognormal_sigma: 0.5,
            horizon: 20,
            cts_penalty: 1.0,
            cts_clusters: 5,
            cts_dim: 8,
            cts_noise: 0.3,
            oas_correlation: 0.05,
            ftr_recovery: 0.3,
            ftr_travel_cost: 1.0,
            wpf_intercept: 0.5,
            wpf_slope: 1.0,
            wpf_noise: 0.5,
            wpf_fatigue_growth: 0.05,
            wpf_budget_fraction: 0.25,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "variant", rename_all = "snake_case")]
pub enum ScoPayload {
    Cts { qualities: Vec<f64>, topics: Vec<Vec<f64>>, penalty: f64, horizon: usize },
    Oas { base_values: Vec<f64>, fatigue_rates: Vec<f64>, horizon: usize },
    Ftr { locations: Vec<Point>, popularities: Vec<f64>, recovery: f64, travel_cost: f64, horizon: usize, start: Point },
    Wpf { values: Vec<f64>, base_times: Vec<f64>, fatigue_growth: f64, budget: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoInstance {
    pub payload: ScoPayload,
    pub params: ScoParams,
}

impl ScoInstance {
    pub fn variant(&self) -> ScoVariant {
        match self.payload {
            ScoPayload::Cts { .. } => ScoVariant::Cts,
            ScoPayload::Oas { .. } => ScoVariant::Oas,
            ScoPayload::Ftr { .. } => ScoVariant::Ftr,
            ScoPayload::Wpf { .. } => ScoVariant::Wpf,
        }
    }

    pub fn n(&self) -> usize {
        match &self.payload {
            ScoPayload::Cts { qualities, .. } => qualities.len(),
            ScoPayload::Oas { base_values, .. } => base_values.len(),
            ScoPayload::Ftr { popularities, .. } => popularities.len(),
            ScoPayload::Wpf { values, .. } => values.len(),
        }
    }

    /// Step limit: the horizon, or `n` for WPF whose episodes end on budget.
    pub fn horizon(&self) -> usize {
        match &self.payload {
            ScoPayload::Cts { horizon, qualities, .. } => (*horizon).min(qualities.len()),
            ScoPayload::Oas { horizon, .. } | ScoPayload::Ftr { horizon, .. } => *horizon,
            ScoPayload::Wpf { values, .. } => values.len(),
        }
    }
}

pub fn gen_sco(variant: ScoVariant, n: usize, rng: &mut Rng) -> Result<ScoInstance, InstanceError> {
    gen_sco_with(variant, n, &ScoParams::default(), rng)
}

fn unit(v: Vec<f64>) -> Vec<f64> {
    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    v.into_iter().map(|x| x / norm).collect()
}

/// Draw order per variant:
/// * CTS: n qualities (log-normal); cluster centers (dim draws of N(0,1)
///   each, normalized); then per talk a cluster index followed by dim noise
///   draws N(0, cts_noise), normalized.
/// * OAS: n base values (log-normal); n Beta(2,5) draws. Fatigue is
///   `beta + oas_correlation·z` with `z` the standardized base value,
///   clipped to [0.02, 0.9].
/// * FTR: n locations (x then y, U[0,1)); n popularities (log-normal).
///   The truck starts at (0.5, 0.5).
/// * WPF: n base times U[0.5,3.0); then per order |N(0, wpf_noise)| and a
///   scale U[0.6,1.6). Value is `(a + b·w + noise)·scale`, clipped below at 0.1.
///   Budget is `wpf_budget_fraction · Σ w`.
pub fn gen_sco_with(variant: ScoVariant, n: usize, params: &ScoParams, rng: &mut Rng) -> Result<ScoInstance, InstanceError> {
    if n == 0 {
        return Err(InstanceError::TooSmall { what: "gen_sco", min: 1, n });
    }
    let lognormal = LogNormal::new(params.lognormal_mu, params.lognormal_sigma)
        .map_err(|e| InstanceError::Document(e.to_string()))?;
    let payload = match variant {
        ScoVariant::Cts => {
            let qualities: Vec<f64> = (0..n).map(|_| lognormal.sample(rng)).collect();
            let std = Normal::new(0.0, 1.0).unwrap();
            let centers: Vec<Vec<f64>> = (0..params.cts_clusters)
                .map(|_| unit((0..params.cts_dim).map(|_| std.sample(rng)).collect()))
                .collect();
            let noise = Normal::new(0.0, params.cts_noise).unwrap();
            let topics = (0..n)
                .map(|_| {
                    let c = &centers[rng.random_range(0..centers.len())];
                    unit(c.iter().map(|x| x + noise.sample(rng)).collect())
                })
                .collect();
            ScoPayload::Cts { qualities, topics, penalty: params.cts_penalty, horizon: params.horizon }
        }
        ScoVariant::Oas => {
            let base_values: Vec<f64> = (0..n).map(|_| lognormal.sample(rng)).collect();
            let beta = Beta::new(2.0, 5.0).unwrap();
            let raw: Vec<f64> = (0..n).map(|_| beta.sample(rng)).collect();
            let mean = base_values.iter().sum::<f64>() / n as f64;
            let var = base_values.iter().map(|b| (b - mean).powi(2)).sum::<f64>() / n as f64;
            let sd = if var > 0.0 { var.sqrt() } else { 1.0 };
            let fatigue_rates = raw
                .iter()
                .zip(&base_values)
                .map(|(r, b)| (r + params.oas_correlation * (b - mean) / sd).clamp(0.02, 0.9))
                .collect();
            ScoPayload::Oas { base_values, fatigue_rates, horizon: params.horizon }
        }
        ScoVariant::Ftr => {
            let locations = (0..n)
                .map(|_| {
                    let x: f64 = rng.random();
                    let y: f64 = rng.random();
                    [x, y]
                })
                .collect();
            let popularities = (0..n).map(|_| lognormal.sample(rng)).collect();
            ScoPayload::Ftr {
                locations,
                popularities,
                recovery: params.ftr_recovery,
                travel_cost: params.ftr_travel_cost,
                horizon: params.horizon,
                start: [0.5, 0.5],
            }
        }
        ScoVariant::Wpf => {
            let base_times: Vec<f64> = (0..n).map(|_| rng.random_range(0.5..3.0)).collect();
            let noise = Normal::new(0.0, params.wpf_noise).unwrap();
            let values = base_times
                .iter()
                .map(|w| {
                    let e: f64 = noise.sample(rng);
                    let scale = rng.random_range(0.6..1.6);
                    ((params.wpf_intercept + params.wpf_slope * w + e.abs()) * scale).max(0.1)
                })
                .collect();
            let budget = params.wpf_budget_fraction * base_times.iter().sum::<f64>();
            ScoPayload::Wpf { values, base_times, fatigue_growth: params.wpf_fatigue_growth, budget }
        }
    };
    Ok(ScoInstance { payload, params: params.clone() })
}

/// Decision-process state, shared by all variants; fields a variant does not
/// use stay at their initial values.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoState {
    /// 1-based index of the next step.
    pub step: usize,
    /// Items not yet taken (CTS talks, WPF orders).
    pub available: Vec<bool>,
    pub previous: Option<usize>,
    /// OAS display counts.
    pub counts: Vec<u32>,
    /// FTR step of the most recent visit per location.
    pub last_visit: Vec<Option<usize>>,
    pub position: Point,
    /// WPF remaining time budget.
    pub budget: f64,
}

impl ScoState {
    pub fn initial(inst: &ScoInstance) -> Self {
        let n = inst.n();
        let (position, budget) = match &inst.payload {
            ScoPayload::Ftr { start, .. } => (*start, 0.0),
            ScoPayload::Wpf { budget, .. } => ([0.0, 0.0], *budget),
            _ => ([0.0, 0.0], 0.0),
        };
        ScoState {
            step: 1,
            available: vec![true; n],
            previous: None,
            counts: vec![0; n],
            last_visit: vec![None; n],
            position,
            budget,
        }
    }

    /// WPF fatigue multiplier `1 + μ(t−1)`.
    pub fn fatigue(&self, inst: &ScoInstance) -> f64 {
        match &inst.payload {
            ScoPayload::Wpf { fatigue_growth, .. } => 1.0 + fatigue_growth * (self.step - 1) as f64,
            _ => 1.0,
        }
    }

    /// Steps since the last visit of each location, `+∞` if never visited.
    pub fn steps_since_visit(&self) -> Vec<f64> {
        self.last_visit
            .iter()
            .map(|v| v.map_or(f64::INFINITY, |s| (self.step - s) as f64))
            .collect()
    }

    /// Feasible action set at the current step; empty once terminal.
    pub fn feasible(&self, inst: &ScoInstance) -> Vec<usize> {
        let n = inst.n();
        match &inst.payload {
            ScoPayload::Cts { .. } => {
                if self.step > inst.horizon() {
                    return Vec::new();
                }
                (0..n).filter(|&i| self.available[i]).collect()
            }
            ScoPayload::Oas { horizon, .. } | ScoPayload::Ftr { horizon, .. } => {
                if self.step > *horizon {
                    Vec::new()
                } else {
                    (0..n).collect()
                }
            }
            ScoPayload::Wpf { base_times, .. } => {
                let m = self.fatigue(inst);
                (0..n).filter(|&i| self.available[i] && base_times[i] * m <= self.budget).collect()
            }
        }
    }

    pub fn is_terminal(&self, inst: &ScoInstance) -> bool {
        self.feasible(inst).is_empty()
    }
}

/// Apply `action` and return the successor state and the step reward.
pub fn sco_step(inst: &ScoInstance, state: &ScoState, action: usize) -> Result<(ScoState, f64), InstanceError> {
    if !state.feasible(inst).contains(&action) {
        return Err(InstanceError::InfeasibleAction { action, step: state.step });
    }
    let mut next = state.clone();
    let reward = match &inst.payload {
        ScoPayload::Cts { qualities, topics, penalty, .. } => {
            let q = qualities[action];
            next.available[action] = false;
            match state.previous {
                None => q,
                Some(prev) => {
                    let dot: f64 = topics[action].iter().zip(&topics[prev]).map(|(a, b)| a * b).sum();
                    q - penalty * dot.max(0.0)
                }
            }
        }
        ScoPayload::Oas { base_values, fatigue_rates, .. } => {
            let c = state.counts[action];
            next.counts[action] += 1;
            base_values[action] * (1.0 - fatigue_rates[action]).powi(c as i32)
        }
        ScoPayload::Ftr { locations, popularities, recovery, travel_cost, .. } => {
            let delta = state.last_visit[action].map_or(f64::INFINITY, |s| (state.step - s) as f64);
            let recovered = 1.0 - (-recovery * delta).exp();
            let l = locations[action];
            let travel = ((l[0] - state.position[0]).powi(2) + (l[1] - state.position[1]).powi(2)).sqrt();
            next.last_visit[action] = Some(state.step);
            next.position = l;
            popularities[action] * recovered - travel_cost * travel
        }
        ScoPayload::Wpf { values, base_times, .. } => {
            next.available[action] = false;
            next.budget -= base_times[action] * state.fatigue(inst);
            values[action]
        }
    };
    next.previous = Some(action);
    next.step += 1;
    Ok((next, reward))
}

/// Total reward of an action sequence; stops with an error on the first
/// infeasible action.
pub fn sco_rollout(inst: &ScoInstance, actions: &[usize]) -> Result<f64, InstanceError> {
    let mut state = ScoState::initial(inst);
    let mut total = 0.0;
    for &a in actions {
        let (next, r) = sco_step(inst, &state, a)?;
        total += r;
        state = next;
    }
    Ok(total)
}
