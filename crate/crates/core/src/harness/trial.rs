use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::config::{ExperimentConfig, PolicySpec};
use super::seeds::splitmix64;
use crate::error::Result;
use crate::obs::WorldState;
use crate::policy::{Action, Policy, StepDecision};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrialOutcome {
    pub policy: String,
    pub c: f64,
    /// Stopping time; the horizon when censored.
    pub tau: usize,
    pub declared: usize,
    pub m_star: usize,
    pub correct: bool,
    /// Steps on which cells were probed.
    pub samples_taken: usize,
    /// Steps skipped without probing.
    pub idle_steps: usize,
    pub censored: bool,
    pub clamp_events: usize,
    pub seed: u64,
}

/// One search from a fresh world. The seed alone fixes the anomalous cell,
/// the world streams and the policy's own randomness, so two policies run
/// with the same seed face identical observation streams.
pub fn run_trial(
    config: &ExperimentConfig,
    spec: &PolicySpec,
    c: f64,
    seed: u64,
) -> Result<TrialOutcome> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let m_star = rng.random_range(0..config.cells);
    let world_seed = splitmix64(seed ^ 0x5752_4c44);
    let policy_seed = splitmix64(seed ^ 0x504f_4c59);

    let mut world = WorldState::new(
        config.cells,
        m_star,
        config.normal.clone(),
        config.anomalous.clone(),
        config.dynamics(),
        world_seed,
    )?;
    let mut policy = Policy::new(
        spec.policy_config(config.cells, config.probes, c),
        config.policy_model(spec),
        policy_seed,
    )?;

    let mut t = 0;
    let declared = loop {
        t += 1;
        let observations = match policy.pending() {
            Action::Probe(cells) => world.observe(cells)?,
            Action::Skip => Vec::new(),
        };
        let decision = policy.step(&observations, world.revealed())?;
        world.advance();
        match decision {
            StepDecision::Stop { declared } => break Some(declared),
            StepDecision::Continue(_) if t >= config.horizon => break None,
            StepDecision::Continue(_) => {}
        }
    };

    let state = policy.state();
    let (declared, censored) = match declared {
        Some(d) => (d, false),
        None => (policy.leader(), true),
    };
    Ok(TrialOutcome {
        policy: spec.label().to_string(),
        c,
        tau: t,
        declared,
        m_star,
        correct: declared == m_star,
        samples_taken: state.samples,
        idle_steps: state.idle,
        censored,
        clamp_events: state.clamp_events,
        seed,
    })
}
