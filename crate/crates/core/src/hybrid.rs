//! SFE followed by a continuation search in the reduced feature space.
//!
//! SFE runs until its best fitness has not moved for `stagnation_window`
//! evaluations (checked only past `warmup_fes`). The unselected features are
//! then dropped from the dataset and the remaining budget goes to a
//! [`ContinuationEngine`], seeded with the all-ones mask of the reduced space
//! (which is exactly SFE's incumbent).

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::bpso::{pso_search, PsoParams};
use crate::error::{Error, Result};
use crate::fitness::{FitnessEvaluator, FitnessValue};
use crate::mask::FeatureMask;
use crate::sfe::{SfeParams, SfeSearch};
use crate::trace::{SearchTrace, TraceRecord};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct HybridParams {
    pub warmup_fes: usize,
    pub stagnation_window: usize,
    pub sfe: SfeParams,
    pub pso: PsoParams,
}

impl Default for HybridParams {
    fn default() -> Self {
        Self {
            warmup_fes: 2000,
            stagnation_window: 1000,
            sfe: SfeParams::default(),
            pso: PsoParams::default(),
        }
    }
}

impl HybridParams {
    pub fn validate(&self) -> Result<()> {
        if self.stagnation_window == 0 || self.warmup_fes <= self.stagnation_window {
            return Err(Error::InvalidParam(format!(
                "need warmup_fes > stagnation_window >= 1, got {} and {}",
                self.warmup_fes, self.stagnation_window
            )));
        }
        self.sfe.validate()?;
        self.pso.validate()
    }
}

/// True once `fes` is past the warm-up and the best fitness recorded at
/// `fes` equals the one recorded `stagnation_window` evaluations earlier.
pub fn stagnation_check(trace: &SearchTrace, fes: usize, params: &HybridParams) -> bool {
    if fes <= params.warmup_fes || fes <= params.stagnation_window {
        return false;
    }
    match (
        trace.best_at(fes),
        trace.best_at(fes - params.stagnation_window),
    ) {
        (Some(now), Some(then)) => now == then,
        _ => false,
    }
}

/// Search procedure that continues from SFE's result in the reduced space.
///
/// `ev` covers only the reduced columns and holds exactly the budget left
/// over; `seed_mask` is the all-ones mask of that space. The returned trace
/// must contain one record per evaluation charged to `ev`.
pub trait ContinuationEngine: Send + Sync {
    fn name(&self) -> &str;

    /// Smallest budget the engine can do useful work with.
    fn min_budget(&self) -> usize {
        1
    }

    fn continue_search(
        &self,
        ev: &mut FitnessEvaluator,
        seed_mask: &FeatureMask,
        seed: u64,
    ) -> Result<SearchTrace>;
}

/// BPSO with particle 0 placed on the seed mask.
#[derive(Clone, Debug, Default)]
pub struct PsoEngine {
    pub params: PsoParams,
}

impl ContinuationEngine for PsoEngine {
    fn name(&self) -> &str {
        "pso"
    }

    fn min_budget(&self) -> usize {
        self.params.np
    }

    fn continue_search(
        &self,
        ev: &mut FitnessEvaluator,
        seed_mask: &FeatureMask,
        seed: u64,
    ) -> Result<SearchTrace> {
        pso_search(ev, &self.params, Some(seed_mask), seed)
    }
}

/// Returns the seed mask without evaluating anything.
#[derive(Clone, Copy, Debug, Default)]
pub struct IdentityEngine;

impl ContinuationEngine for IdentityEngine {
    fn name(&self) -> &str {
        "identity"
    }

    fn continue_search(
        &self,
        _ev: &mut FitnessEvaluator,
        seed_mask: &FeatureMask,
        _seed: u64,
    ) -> Result<SearchTrace> {
        Ok(SearchTrace::empty(seed_mask.clone()))
    }
}

/// Single-bit-flip hill climber with random restarts. The current point
/// moves on ties; the reported best only on strict improvement.
#[derive(Clone, Copy, Debug)]
pub struct HillClimbEngine {
    /// Steps without strict improvement before restarting from a random mask.
    pub patience: usize,
}

impl Default for HillClimbEngine {
    fn default() -> Self {
        Self { patience: 200 }
    }
}

impl ContinuationEngine for HillClimbEngine {
    fn name(&self) -> &str {
        "hillclimb"
    }

    fn continue_search(
        &self,
        ev: &mut FitnessEvaluator,
        seed_mask: &FeatureMask,
        seed: u64,
    ) -> Result<SearchTrace> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut trace = SearchTrace::empty(seed_mask.clone());
        if ev.is_exhausted() {
            return Ok(trace);
        }
        let mut current = seed_mask.clone();
        let mut current_fit = ev.evaluate(&current)?;
        let mut best = current.clone();
        let mut best_fit = current_fit;
        trace.push(best_fit, &best);
        let mut stale = 0;
        while !ev.is_exhausted() {
            let restart = stale >= self.patience.max(1);
            let candidate = if restart {
                stale = 0;
                FeatureMask::random(current.len(), &mut rng)
            } else {
                let mut c = current.clone();
                let j = rng.gen_range(0..c.len());
                c.set(j, !c.get(j));
                if c.none_selected() {
                    stale += 1;
                    continue;
                }
                c
            };
            let fit = ev.evaluate(&candidate)?;
            if fit > best_fit {
                best = candidate.clone();
                best_fit = fit;
                stale = 0;
            } else {
                stale += 1;
            }
            if restart || fit >= current_fit {
                current = candidate;
                current_fit = fit;
            }
            trace.push(best_fit, &best);
        }
        Ok(trace)
    }
}

/// Where SFE handed over to the continuation engine.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Handoff {
    /// Evaluations spent by SFE, including the initial one.
    pub fes: usize,
    /// SFE's incumbent, in original feature indices.
    pub mask: FeatureMask,
    pub fitness: FitnessValue,
    /// Evaluations spent by the engine.
    pub engine_fes: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct HybridOutcome {
    /// Combined trace; the final mask is in original feature indices.
    pub trace: SearchTrace,
    pub handoff: Option<Handoff>,
}

/// SFE-PSO: the hybrid with a BPSO continuation.
pub fn sfe_pso_search(
    ev: &mut FitnessEvaluator,
    params: &HybridParams,
    seed: u64,
) -> Result<HybridOutcome> {
    let engine = PsoEngine { params: params.pso };
    sfe_ec_search(ev, &engine, params, seed)
}

/// Seed for the continuation engine, derived from the run seed so that the
/// SFE phase consumes an identical random stream with or without a handoff.
fn continuation_seed(seed: u64) -> u64 {
    let mut z = seed.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// SFE with a pluggable continuation engine.
pub fn sfe_ec_search(
    ev: &mut FitnessEvaluator,
    engine: &dyn ContinuationEngine,
    params: &HybridParams,
    seed: u64,
) -> Result<HybridOutcome> {
    params.validate()?;
    let mut sfe = SfeSearch::start(ev, &params.sfe, seed)?;
    loop {
        let fes = sfe.trace().len();
        if stagnation_check(sfe.trace(), fes, params)
            && ev.remaining_budget() >= engine.min_budget()
        {
            return hand_off(ev, engine, sfe, seed);
        }
        if !sfe.step(ev)? {
            break;
        }
    }
    Ok(HybridOutcome {
        trace: sfe.into_trace(),
        handoff: None,
    })
}

fn hand_off(
    ev: &mut FitnessEvaluator,
    engine: &dyn ContinuationEngine,
    sfe: SfeSearch,
    seed: u64,
) -> Result<HybridOutcome> {
    let mask = sfe.incumbent().clone();
    let fitness = sfe.fitness();
    let mut trace = sfe.into_trace();
    let fes = trace.len();
    let original_len = mask.len();

    let mut child = ev.reduced(&mask)?;
    let reduced_dims = child.n_features();
    let seed_mask = FeatureMask::ones(reduced_dims);
    let engine_trace = engine.continue_search(&mut child, &seed_mask, continuation_seed(seed))?;

    let violation = |msg: String| Error::EngineContract {
        engine: engine.name().to_string(),
        msg,
    };
    if engine_trace.len() != child.used() {
        return Err(violation(format!(
            "trace has {} records but {} evaluations were charged",
            engine_trace.len(),
            child.used()
        )));
    }
    if engine_trace.final_mask().len() != reduced_dims {
        return Err(violation(format!(
            "result mask has {} bits, reduced space has {reduced_dims}",
            engine_trace.final_mask().len()
        )));
    }
    if !engine_trace.is_monotone() {
        return Err(violation("best-fitness series decreases".into()));
    }
    ev.absorb(&child)?;

    let reduced = child.dataset();
    let records = trace.records_mut();
    let mut adopted = None;
    for r in engine_trace.records() {
        let (best, selected) = if r.best >= fitness {
            (r.best, r.selected)
        } else {
            (fitness, mask.selected_count())
        };
        records.push(TraceRecord {
            fes: fes + r.fes,
            best,
            selected,
        });
        adopted = Some(r.best >= fitness);
    }
    if adopted == Some(true) && engine_trace.final_fitness() >= fitness {
        let lifted = reduced.lift_mask(engine_trace.final_mask(), original_len)?;
        trace.set_result(lifted, engine_trace.final_fitness());
    } else {
        trace.set_result(mask.clone(), fitness);
    }

    Ok(HybridOutcome {
        trace,
        handoff: Some(Handoff {
            fes,
            mask,
            fitness,
            engine_fes: child.used(),
        }),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn trace_of(values: &[f64]) -> SearchTrace {
        let mut t = SearchTrace::empty(FeatureMask::ones(1));
        let m = FeatureMask::ones(1);
        for &v in values {
            t.push(FitnessValue::new(v).unwrap(), &m);
        }
        t
    }

    #[test]
    fn stagnation_rules() {
        let params = HybridParams::default();
        let mut values = vec![50.0; 2500];
        assert!(stagnation_check(&trace_of(&values), 2500, &params));
        assert!(!stagnation_check(&trace_of(&values), 1500, &params));
        assert!(!stagnation_check(&trace_of(&values), 2000, &params));
        assert!(stagnation_check(&trace_of(&values), 2001, &params));
        for v in values.iter_mut().skip(1999) {
            *v = 60.0;
        }
        assert!(!stagnation_check(&trace_of(&values), 2500, &params));
    }

    #[test]
    fn hybrid_params_validation() {
        assert!(HybridParams::default().validate().is_ok());
        let bad = HybridParams {
            warmup_fes: 100,
            stagnation_window: 100,
            ..HybridParams::default()
        };
        assert!(bad.validate().is_err());
    }

    #[test]
    fn continuation_seed_differs_from_run_seed() {
        assert_ne!(continuation_seed(0), 0);
        assert_ne!(continuation_seed(1), continuation_seed(2));
    }
}
