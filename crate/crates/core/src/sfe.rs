//! Single-agent search built from a non-selection move (drop a batch of
//! selected features) and a selection move (re-add features once the mask
//! would otherwise be empty), with greedy accept-if-not-worse.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fitness::{FitnessEvaluator, FitnessValue};
use crate::mask::FeatureMask;
use crate::trace::SearchTrace;

/// How many draws the non-selection move makes per step.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum UnPolicy {
    /// `ceil(ur * nvar)` with `ur` following the linear schedule.
    LinearSchedule,
    /// `floor(rand * nvar / k)` with `k` uniform in `1..=rf_n`, redrawn
    /// every step.
    RandomFraction { rf_n: usize },
}

/// Denominator of the rate schedule's progress term.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum UrDenominator {
    /// `(max_fes - fes) / max_fes`: a straight line from `ur_max` to `ur_min`.
    #[default]
    MaxFes,
    /// `(max_fes - fes) / fes`, clamped into `[ur_min, ur_max]`.
    Fes,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SfeParams {
    pub ur_max: f64,
    pub ur_min: f64,
    pub sn: usize,
    pub un_policy: UnPolicy,
    pub ur_denominator: UrDenominator,
}

impl Default for SfeParams {
    fn default() -> Self {
        Self {
            ur_max: 0.3,
            ur_min: 0.001,
            sn: 1,
            un_policy: UnPolicy::LinearSchedule,
            ur_denominator: UrDenominator::MaxFes,
        }
    }
}

impl SfeParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.ur_min > 0.0 && self.ur_min <= self.ur_max && self.ur_max <= 1.0) {
            return Err(Error::InvalidParam(format!(
                "need 0 < ur_min <= ur_max <= 1, got ur_min={} ur_max={}",
                self.ur_min, self.ur_max
            )));
        }
        if self.sn == 0 {
            return Err(Error::InvalidParam("sn must be at least 1".into()));
        }
        if let UnPolicy::RandomFraction { rf_n: 0 } = self.un_policy {
            return Err(Error::InvalidParam("rf_n must be at least 1".into()));
        }
        Ok(())
    }
}

/// Number of non-selection draws for this step, never less than 1.
pub fn compute_un<R: Rng + ?Sized>(params: &SfeParams, ur: f64, nvar: usize, rng: &mut R) -> usize {
    match params.un_policy {
        UnPolicy::LinearSchedule => ((ur * nvar as f64).ceil() as usize).max(1),
        UnPolicy::RandomFraction { rf_n } => {
            let rand01: f64 = rng.gen();
            let k = rng.gen_range(1..=rf_n);
            random_fraction_un(rand01, k, nvar)
        }
    }
}

fn random_fraction_un(rand01: f64, k: usize, nvar: usize) -> usize {
    ((rand01 * nvar as f64 / k as f64).floor() as usize).max(1)
}

/// Non-selection rate after `fes` of `max_fes` evaluations.
pub fn ur_schedule(params: &SfeParams, fes: usize, max_fes: usize) -> Result<f64> {
    if max_fes == 0 {
        return Err(Error::InvalidParam("max_fes must be positive".into()));
    }
    if fes > max_fes {
        return Err(Error::InvalidParam(format!(
            "fes {fes} exceeds max_fes {max_fes}"
        )));
    }
    let span = params.ur_max - params.ur_min;
    let remaining = (max_fes - fes) as f64;
    let ur = match params.ur_denominator {
        UrDenominator::MaxFes => span * (remaining / max_fes as f64) + params.ur_min,
        UrDenominator::Fes if fes == 0 => params.ur_max,
        UrDenominator::Fes => span * (remaining / fes as f64) + params.ur_min,
    };
    Ok(ur.clamp(params.ur_min, params.ur_max))
}

/// Clears `un` selected features, drawn uniformly with replacement from the
/// selected positions. Repeated draws collapse, so fewer than `un` bits may
/// change.
pub fn non_selection<R: Rng + ?Sized>(
    x: &FeatureMask,
    un: usize,
    rng: &mut R,
) -> Result<FeatureMask> {
    let n = x.selected_count();
    if n == 0 {
        return Err(Error::EmptyMask);
    }
    let draws: Vec<usize> = (0..un).map(|_| rng.gen_range(0..n)).collect();
    non_selection_with_draws(x, &draws)
}

/// Non-selection with explicit draws: each draw is a 0-based offset into the
/// ascending list of selected positions.
pub fn non_selection_with_draws(x: &FeatureMask, draws: &[usize]) -> Result<FeatureMask> {
    apply_draws(x, &x.selected_indices(), draws, false).ok_or(Error::EmptyMask)
}

/// Sets `sn` unselected features, drawn uniformly with replacement from the
/// unselected positions.
pub fn selection<R: Rng + ?Sized>(x: &FeatureMask, sn: usize, rng: &mut R) -> Result<FeatureMask> {
    let n = x.unselected_count();
    if n == 0 {
        return Err(Error::FullMask);
    }
    let draws: Vec<usize> = (0..sn).map(|_| rng.gen_range(0..n)).collect();
    selection_with_draws(x, &draws)
}

/// Selection with explicit draws: 0-based offsets into the ascending list of
/// unselected positions.
pub fn selection_with_draws(x: &FeatureMask, draws: &[usize]) -> Result<FeatureMask> {
    apply_draws(x, &x.unselected_indices(), draws, true).ok_or(Error::FullMask)
}

fn apply_draws(x: &FeatureMask, index: &[usize], draws: &[usize], on: bool) -> Option<FeatureMask> {
    if index.is_empty() {
        return None;
    }
    let mut out = x.clone();
    for &d in draws {
        out.set(index[d.min(index.len() - 1)], on);
    }
    Some(out)
}

/// Stepwise SFE run. [`sfe_search`] drives it to budget exhaustion; the
/// hybrid drives it one step at a time to watch for stagnation.
#[derive(Debug)]
pub struct SfeSearch {
    params: SfeParams,
    rng: ChaCha8Rng,
    incumbent: FeatureMask,
    fitness: FitnessValue,
    ur: f64,
    start_used: usize,
    max_fes: usize,
    trace: SearchTrace,
}

impl SfeSearch {
    /// Draws the initial mask (fair coin per bit, redrawn if empty) and
    /// evaluates it.
    pub fn start(ev: &mut FitnessEvaluator, params: &SfeParams, seed: u64) -> Result<Self> {
        params.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let start_used = ev.used();
        let max_fes = ev.remaining_budget();
        if max_fes == 0 {
            return Err(Error::BudgetExhausted {
                budget: ev.budget(),
            });
        }
        let incumbent = FeatureMask::random(ev.n_features(), &mut rng);
        let fitness = ev.evaluate(&incumbent)?;
        let mut trace = SearchTrace::empty(incumbent.clone());
        trace.push(fitness, &incumbent);
        let mut search = Self {
            params: *params,
            rng,
            incumbent,
            fitness,
            ur: params.ur_max,
            start_used,
            max_fes,
            trace,
        };
        search.update_rate(ev)?;
        Ok(search)
    }

    fn update_rate(&mut self, ev: &FitnessEvaluator) -> Result<()> {
        self.ur = ur_schedule(&self.params, ev.used() - self.start_used, self.max_fes)?;
        Ok(())
    }

    /// One move plus evaluation. Returns `false` without doing anything once
    /// the budget is spent.
    pub fn step(&mut self, ev: &mut FitnessEvaluator) -> Result<bool> {
        if ev.is_exhausted() {
            return Ok(false);
        }
        let nvar = self.incumbent.len();
        let un = compute_un(&self.params, self.ur, nvar, &mut self.rng);
        let mut candidate = non_selection(&self.incumbent, un, &mut self.rng)?;
        if candidate.none_selected() {
            // A full single-feature mask has nothing left to select; it is
            // re-evaluated unchanged.
            candidate = if self.incumbent.all_selected() {
                self.incumbent.clone()
            } else {
                selection(&self.incumbent, self.params.sn, &mut self.rng)?
            };
        }
        let fit = ev.evaluate(&candidate)?;
        if fit >= self.fitness {
            self.incumbent = candidate;
            self.fitness = fit;
        }
        self.trace.push(self.fitness, &self.incumbent);
        self.update_rate(ev)?;
        Ok(true)
    }

    pub fn incumbent(&self) -> &FeatureMask {
        &self.incumbent
    }

    pub fn fitness(&self) -> FitnessValue {
        self.fitness
    }

    pub fn rate(&self) -> f64 {
        self.ur
    }

    pub fn trace(&self) -> &SearchTrace {
        &self.trace
    }

    pub fn into_trace(self) -> SearchTrace {
        self.trace
    }
}

/// Runs SFE until the evaluator's budget is spent.
pub fn sfe_search(ev: &mut FitnessEvaluator, params: &SfeParams, seed: u64) -> Result<SearchTrace> {
    let mut search = SfeSearch::start(ev, params, seed)?;
    while search.step(ev)? {}
    Ok(search.into_trace())
}
