//! Binary particle swarm optimisation with a sigmoid transfer function.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fitness::{FitnessEvaluator, FitnessValue};
use crate::mask::FeatureMask;
use crate::trace::SearchTrace;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PsoParams {
    /// Swarm size.
    pub np: usize,
    /// Inertia weight.
    pub w: f64,
    pub c1: f64,
    pub c2: f64,
    /// Velocities are clamped into `[-v_clamp, v_clamp]`.
    pub v_clamp: f64,
}

impl Default for PsoParams {
    fn default() -> Self {
        Self {
            np: 20,
            w: 1.0,
            c1: 2.0,
            c2: 1.5,
            v_clamp: 6.0,
        }
    }
}

impl PsoParams {
    pub fn validate(&self) -> Result<()> {
        if self.np < 2 {
            return Err(Error::InvalidParam("np must be at least 2".into()));
        }
        if self.w < 0.0 || self.c1 < 0.0 || self.c2 < 0.0 {
            return Err(Error::InvalidParam("w, c1, c2 must be non-negative".into()));
        }
        if self.v_clamp.is_nan() || self.v_clamp <= 0.0 {
            return Err(Error::InvalidParam("v_clamp must be positive".into()));
        }
        Ok(())
    }
}

pub fn sigmoid(v: f64) -> f64 {
    1.0 / (1.0 + (-v).exp())
}

fn bit(b: bool) -> f64 {
    if b {
        1.0
    } else {
        0.0
    }
}

/// Velocity update for one dimension with explicit `r1`, `r2`.
pub fn velocity_step(
    v: f64,
    x: bool,
    pbest: bool,
    gbest: bool,
    params: &PsoParams,
    r1: f64,
    r2: f64,
) -> f64 {
    let x = bit(x);
    let raw = params.w * v + params.c1 * r1 * (bit(pbest) - x) + params.c2 * r2 * (bit(gbest) - x);
    raw.clamp(-params.v_clamp, params.v_clamp)
}

/// Velocity update drawing fresh `r1, r2 ~ U[0, 1)`.
pub fn velocity_update<R: Rng + ?Sized>(
    v: f64,
    x: bool,
    pbest: bool,
    gbest: bool,
    params: &PsoParams,
    rng: &mut R,
) -> f64 {
    let r1 = rng.gen::<f64>();
    let r2 = rng.gen::<f64>();
    velocity_step(v, x, pbest, gbest, params, r1, r2)
}

/// Samples a bit that is 1 with probability `sigmoid(v)`.
pub fn position_update<R: Rng + ?Sized>(v: f64, rng: &mut R) -> bool {
    rng.gen::<f64>() <= sigmoid(v)
}

#[derive(Clone, Debug, PartialEq)]
pub struct Particle {
    pub position: FeatureMask,
    pub velocity: Vec<f64>,
    pub fitness: FitnessValue,
    pub pbest: FeatureMask,
    pub pbest_fitness: FitnessValue,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Swarm {
    pub particles: Vec<Particle>,
    pub gbest: FeatureMask,
    pub gbest_fitness: FitnessValue,
}

fn repair<R: Rng + ?Sized>(mask: &mut FeatureMask, rng: &mut R) {
    if mask.none_selected() {
        let j = rng.gen_range(0..mask.len());
        mask.set(j, true);
    }
}

/// Stepwise BPSO run that exposes the swarm between generations.
#[derive(Debug)]
pub struct PsoSearch {
    params: PsoParams,
    rng: ChaCha8Rng,
    swarm: Swarm,
    trace: SearchTrace,
}

impl PsoSearch {
    /// Random positions and velocities in `[-1, 1]`; particle 0 takes `init`
    /// when given. The whole initial wave is evaluated.
    pub fn start(
        ev: &mut FitnessEvaluator,
        params: &PsoParams,
        init: Option<&FeatureMask>,
        seed: u64,
    ) -> Result<Self> {
        params.validate()?;
        let d = ev.n_features();
        if let Some(m) = init {
            if m.len() != d {
                return Err(Error::MaskLength {
                    expected: d,
                    got: m.len(),
                });
            }
            if m.none_selected() {
                return Err(Error::EmptyMask);
            }
        }
        if ev.remaining_budget() < params.np {
            return Err(Error::InvalidParam(format!(
                "budget {} is smaller than the swarm size {}",
                ev.remaining_budget(),
                params.np
            )));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);

        let mut starts = Vec::with_capacity(params.np);
        for _ in 0..params.np {
            let position = FeatureMask::random(d, &mut rng);
            let velocity: Vec<f64> = (0..d).map(|_| rng.gen_range(-1.0..=1.0)).collect();
            starts.push((position, velocity));
        }
        if let Some(m) = init {
            starts[0].0 = m.clone();
        }

        let mut trace = SearchTrace::empty(starts[0].0.clone());
        let mut particles: Vec<Particle> = Vec::with_capacity(params.np);
        let mut best: Option<(usize, FitnessValue)> = None;
        for (i, (position, velocity)) in starts.into_iter().enumerate() {
            let fitness = ev.evaluate(&position)?;
            if best.is_none_or(|(_, b)| fitness > b) {
                best = Some((i, fitness));
            }
            let (bi, bf) = best.expect("set above");
            let incumbent = if bi == i {
                &position
            } else {
                &particles[bi].position
            };
            trace.push(bf, incumbent);
            particles.push(Particle {
                pbest: position.clone(),
                pbest_fitness: fitness,
                position,
                velocity,
                fitness,
            });
        }
        let (bi, bf) = best.expect("np >= 2");
        let swarm = Swarm {
            gbest: particles[bi].position.clone(),
            gbest_fitness: bf,
            particles,
        };
        Ok(Self {
            params: *params,
            rng,
            swarm,
            trace,
        })
    }

    /// Moves every particle, then evaluates the whole swarm. Returns `false`
    /// without doing anything if less than one full generation of budget
    /// remains.
    pub fn generation(&mut self, ev: &mut FitnessEvaluator) -> Result<bool> {
        if ev.remaining_budget() < self.params.np {
            return Ok(false);
        }
        let gbest = self.swarm.gbest.clone();
        for p in &mut self.swarm.particles {
            for j in 0..p.velocity.len() {
                let v = velocity_update(
                    p.velocity[j],
                    p.position.get(j),
                    p.pbest.get(j),
                    gbest.get(j),
                    &self.params,
                    &mut self.rng,
                );
                p.velocity[j] = v;
                let b = position_update(v, &mut self.rng);
                p.position.set(j, b);
            }
            repair(&mut p.position, &mut self.rng);
        }
        for p in &mut self.swarm.particles {
            p.fitness = ev.evaluate(&p.position)?;
            if p.fitness > p.pbest_fitness {
                p.pbest = p.position.clone();
                p.pbest_fitness = p.fitness;
            }
            if p.fitness > self.swarm.gbest_fitness {
                self.swarm.gbest = p.position.clone();
                self.swarm.gbest_fitness = p.fitness;
            }
            self.trace.push(self.swarm.gbest_fitness, &self.swarm.gbest);
        }
        Ok(true)
    }

    pub fn swarm(&self) -> &Swarm {
        &self.swarm
    }

    pub fn trace(&self) -> &SearchTrace {
        &self.trace
    }

    pub fn into_trace(self) -> SearchTrace {
        self.trace
    }
}

/// Runs BPSO over whole generations until less than `np` evaluations remain.
pub fn pso_search(
    ev: &mut FitnessEvaluator,
    params: &PsoParams,
    init: Option<&FeatureMask>,
    seed: u64,
) -> Result<SearchTrace> {
    let mut search = PsoSearch::start(ev, params, init, seed)?;
    while search.generation(ev)? {}
    Ok(search.into_trace())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn no_pull_when_bits_agree() {
        let p = PsoParams::default();
        assert_eq!(velocity_step(0.0, true, true, true, &p, 0.7, 0.2), 0.0);
        assert_eq!(velocity_step(0.0, false, false, false, &p, 1.0, 1.0), 0.0);
    }

    #[test]
    fn full_pull_is_c1_plus_c2() {
        let p = PsoParams::default();
        assert_eq!(velocity_step(0.0, false, true, true, &p, 1.0, 1.0), 3.5);
    }

    #[test]
    fn clamp_applies() {
        let p = PsoParams::default();
        assert_eq!(velocity_step(10.0, true, true, true, &p, 0.0, 0.0), 6.0);
        assert_eq!(velocity_step(-10.0, true, true, true, &p, 0.0, 0.0), -6.0);
    }

    #[test]
    fn sigmoid_values() {
        assert_eq!(sigmoid(0.0), 0.5);
        let hi = 1.0 / (1.0 + (-6.0f64).exp());
        assert!((sigmoid(6.0) - hi).abs() < 1e-15);
        assert!((hi - 0.997_527_376).abs() < 1e-9);
        assert!((sigmoid(-6.0) - (1.0 - hi)).abs() < 1e-12);
    }

    #[test]
    fn position_frequency_at_zero_velocity() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let n = 100_000;
        let ones = (0..n).filter(|_| position_update(0.0, &mut rng)).count();
        assert!((ones as f64 / n as f64 - 0.5).abs() < 0.01);

        let ones = (0..n).filter(|_| position_update(6.0, &mut rng)).count();
        assert!((ones as f64 / n as f64 - sigmoid(6.0)).abs() < 0.002);
        let ones = (0..n).filter(|_| position_update(-6.0, &mut rng)).count();
        assert!((ones as f64 / n as f64 - sigmoid(-6.0)).abs() < 0.002);
    }

    #[test]
    fn params_validation() {
        assert!(PsoParams::default().validate().is_ok());
        let p = PsoParams {
            np: 1,
            ..PsoParams::default()
        };
        assert!(p.validate().is_err());
        let p = PsoParams {
            v_clamp: 0.0,
            ..PsoParams::default()
        };
        assert!(p.validate().is_err());
    }
}
