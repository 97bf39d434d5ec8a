//! Sequential search policies.
//!
//! Every policy keeps one sum of LLRs per cell, probes cells, and stops as
//! soon as the gap between the two largest sums reaches `−ln c`, declaring
//! the leader. They differ in how a sample's LLR is formed and in how the
//! probe set is chosen:
//!
//! | kind          | LLR law                         | selection               |
//! |---------------|---------------------------------|-------------------------|
//! | `Adhm`        | `g̃_r`, `r` = filtered belief    | top `K` sums            |
//! | `AdhmP`       | as `Adhm`                       | top `K`, or skip a step |
//! | `Dgf`         | static `ĝ`                      | top `K` sums            |
//! | `Chernoff`    | static `ĝ`                      | leader + random others  |
//! | `AdhmOracle`  | `g̃_{P_d}`, `d` revealed         | top `K` sums            |
//!
//! Cells are indexed from 0.

mod belief;
mod llr;
mod select;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::analysis::OraclePalette;
use crate::error::{Result, SearchError};
use crate::obs::{DistributionSpec, HmmParams, Law, Observation};
use crate::scalar::Scalar;

pub use belief::{belief_update_observed, belief_update_transition_only};
pub use llr::{clamp_llr, llr, static_llr, DEFAULT_LLR_CLAMP};
pub use select::{leader_gap, randomized_select, select_top_k, stopping_decision};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PolicyKind {
    Adhm,
    AdhmP,
    Dgf,
    Chernoff,
    AdhmOracle,
}

impl PolicyKind {
    pub fn label(self) -> &'static str {
        match self {
            Self::Adhm => "ADHM",
            Self::AdhmP => "ADHM-P",
            Self::Dgf => "DGF",
            Self::Chernoff => "Chernoff",
            Self::AdhmOracle => "ADHM-Oracle",
        }
    }
}

/// Anomalous law assumed by the i.i.d. baselines.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BaselineLlrMode {
    /// Marginal law of the anomalous stream.
    #[default]
    StationaryMixture,
    RawG,
}

/// Which observations drive the belief of the belief-tracking policies.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BeliefSource {
    /// One shared belief, filtered from the highest-ranked probed cell.
    #[default]
    TopCell,
    /// One belief per cell, each filtered from that cell's own samples.
    PerCell,
}

#[derive(Clone, Debug, PartialEq)]
pub struct PolicyConfig<T> {
    pub kind: PolicyKind,
    pub cells: usize,
    pub probes: usize,
    /// Cost per observation, `0 < c < 1`.
    pub cost: T,
    /// Scheduling threshold on `1 − P⁰` (`AdhmP`).
    pub p_th: T,
    /// Cost per idle time step (`AdhmP`).
    pub gamma: T,
    pub baseline_llr_mode: BaselineLlrMode,
    pub belief_source: BeliefSource,
    pub llr_clamp: T,
    /// Exploration probability of the randomized baseline when `K = 1`.
    pub explore: T,
}

impl<T: Scalar> PolicyConfig<T> {
    pub fn new(kind: PolicyKind, cells: usize, probes: usize, cost: T) -> Self {
        Self {
            kind,
            cells,
            probes,
            cost,
            p_th: T::zero(),
            gamma: T::zero(),
            baseline_llr_mode: BaselineLlrMode::default(),
            belief_source: BeliefSource::default(),
            llr_clamp: T::lit(DEFAULT_LLR_CLAMP),
            explore: T::zero(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.cells < 2 {
            return Err(SearchError::invalid(
                "cells",
                format!("at least two cells are needed to compare sums, got {}", self.cells),
            ));
        }
        if self.probes == 0 || self.probes > self.cells {
            return Err(SearchError::invalid(
                "probes",
                format!("must lie in 1..={}, got {}", self.cells, self.probes),
            ));
        }
        if !(self.cost > T::zero() && self.cost < T::one()) {
            return Err(SearchError::invalid(
                "cost",
                format!("must lie strictly inside (0, 1), got {}", self.cost),
            ));
        }
        if !(self.p_th >= T::zero() && self.p_th <= T::one()) {
            return Err(SearchError::invalid("p_th", format!("must lie in [0, 1], got {}", self.p_th)));
        }
        if !(self.gamma >= T::zero() && self.gamma.is_finite()) {
            return Err(SearchError::invalid("gamma", format!("must be >= 0, got {}", self.gamma)));
        }
        if !(self.llr_clamp > T::zero()) {
            return Err(SearchError::invalid(
                "llr_clamp",
                format!("must be > 0, got {}", self.llr_clamp),
            ));
        }
        if !(self.explore >= T::zero() && self.explore <= T::one()) {
            return Err(SearchError::invalid(
                "explore",
                format!("must lie in [0, 1], got {}", self.explore),
            ));
        }
        Ok(())
    }

    /// Stopping threshold `−ln c`.
    pub fn threshold(&self) -> T {
        -self.cost.ln()
    }
}

/// What the policy knows about the observation model.
#[derive(Clone, Debug, PartialEq)]
pub struct PolicyModel<T> {
    pub f: DistributionSpec<T>,
    pub g: DistributionSpec<T>,
    pub hmm: HmmParams<T>,
    /// Belief levels revealed by the oracle (`AdhmOracle` only).
    pub palette: Option<OraclePalette<T>>,
    /// Static anomalous law of the i.i.d. baselines.
    pub baseline: Law<T>,
}

impl<T: Scalar> PolicyModel<T> {
    /// Baseline law under `mode`: the marginal of the anomalous stream (the
    /// palette marginal when a palette is given, the stationary HMM mixture
    /// otherwise), or `g` itself.
    pub fn new(
        f: DistributionSpec<T>,
        g: DistributionSpec<T>,
        hmm: HmmParams<T>,
        palette: Option<OraclePalette<T>>,
        mode: BaselineLlrMode,
    ) -> Self {
        let baseline = match (mode, &palette) {
            (BaselineLlrMode::RawG, _) => Law::Base(g.clone()),
            (BaselineLlrMode::StationaryMixture, Some(p)) => p.marginal_law(&f, &g),
            (BaselineLlrMode::StationaryMixture, None) => {
                Law::anomalous(hmm.stationary_p0(), &f, &g)
            }
        };
        Self {
            f,
            g,
            hmm,
            palette,
            baseline,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Action {
    Probe(Vec<usize>),
    Skip,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum StepDecision {
    Continue(Action),
    Stop { declared: usize },
}

impl StepDecision {
    pub fn is_stopped(&self) -> bool {
        matches!(self, Self::Stop { .. })
    }

    pub fn declared(&self) -> Option<usize> {
        match self {
            Self::Stop { declared } => Some(*declared),
            Self::Continue(_) => None,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct PolicyState<T> {
    /// Sum of LLRs per cell.
    pub sums: Vec<T>,
    /// Shared belief that the anomalous chain is in state 0.
    pub belief_p0: T,
    /// Per-cell beliefs (`BeliefSource::PerCell` only).
    pub cell_beliefs: Vec<T>,
    /// Number of completed time steps.
    pub n: usize,
    /// Consecutive skipped steps (`AdhmP`).
    pub delay_counter: usize,
    /// Steps on which cells were probed.
    pub samples: usize,
    /// Steps skipped.
    pub idle: usize,
    pub clamp_events: usize,
}

impl<T: Scalar> PolicyState<T> {
    pub fn initial(cells: usize, prior_p0: T) -> Self {
        Self {
            sums: vec![T::zero(); cells],
            belief_p0: prior_p0,
            cell_beliefs: vec![prior_p0; cells],
            n: 0,
            delay_counter: 0,
            samples: 0,
            idle: 0,
            clamp_events: 0,
        }
    }
}

/// A running search: state plus the action awaiting its observations.
#[derive(Clone, Debug)]
pub struct Policy<T> {
    config: PolicyConfig<T>,
    model: PolicyModel<T>,
    state: PolicyState<T>,
    pending: Action,
    threshold: T,
    rng: ChaCha8Rng,
}

impl<T: Scalar> Policy<T> {
    pub fn new(config: PolicyConfig<T>, model: PolicyModel<T>, seed: u64) -> Result<Self> {
        let prior = model.hmm.stationary_p0();
        let state = PolicyState::initial(config.cells, prior);
        Self::from_state(config, model, state, seed)
    }

    /// Resume from an arbitrary state; the next action is chosen from it.
    pub fn from_state(
        config: PolicyConfig<T>,
        model: PolicyModel<T>,
        state: PolicyState<T>,
        seed: u64,
    ) -> Result<Self> {
        config.validate()?;
        if state.sums.len() != config.cells || state.cell_beliefs.len() != config.cells {
            return Err(SearchError::ContractViolation(format!(
                "state holds {} sums for {} cells",
                state.sums.len(),
                config.cells
            )));
        }
        if config.kind == PolicyKind::AdhmOracle {
            match &model.palette {
                Some(p) => p.validate().map_err(|e| e.within("palette"))?,
                None => {
                    return Err(SearchError::invalid(
                        "palette",
                        "the oracle policy needs a belief palette",
                    ))
                }
            }
        }
        let threshold = config.threshold();
        let mut policy = Self {
            config,
            model,
            state,
            pending: Action::Skip,
            threshold,
            rng: ChaCha8Rng::seed_from_u64(seed),
        };
        policy.pending = policy.next_action();
        Ok(policy)
    }

    pub fn config(&self) -> &PolicyConfig<T> {
        &self.config
    }

    pub fn model(&self) -> &PolicyModel<T> {
        &self.model
    }

    pub fn state(&self) -> &PolicyState<T> {
        &self.state
    }

    /// Action for the current time step.
    pub fn pending(&self) -> &Action {
        &self.pending
    }

    /// Current leader of the sums.
    pub fn leader(&self) -> usize {
        leader_gap(&self.state.sums).0
    }

    /// Consume the observations produced by the pending action (empty for a
    /// skipped step) and decide. `revealed` is the oracle's palette index
    /// for this step, required by `AdhmOracle` and ignored otherwise.
    pub fn step(
        &mut self,
        observations: &[Observation<T>],
        revealed: Option<usize>,
    ) -> Result<StepDecision> {
        self.check_observations(observations)?;
        match self.config.kind {
            PolicyKind::Adhm => self.adhm_step(observations),
            PolicyKind::AdhmP => self.adhm_p_step(observations),
            PolicyKind::Dgf => self.dgf_step(observations),
            PolicyKind::Chernoff => self.chernoff_step(observations),
            PolicyKind::AdhmOracle => self.adhm_oracle_step(observations, revealed),
        }
    }

    fn check_observations(&self, observations: &[Observation<T>]) -> Result<()> {
        let matches = match &self.pending {
            Action::Skip => observations.is_empty(),
            Action::Probe(cells) => {
                cells.len() == observations.len()
                    && cells.iter().zip(observations).all(|(c, (m, _))| c == m)
            }
        };
        if matches {
            Ok(())
        } else {
            let got: Vec<usize> = observations.iter().map(|(m, _)| *m).collect();
            Err(SearchError::ContractViolation(format!(
                "observations for cells {got:?} do not match pending action {:?}",
                self.pending
            )))
        }
    }

    fn add_llr(&mut self, cell: usize, value: T) {
        let (v, clamped) = clamp_llr(value, self.config.llr_clamp);
        if clamped {
            self.state.clamp_events += 1;
        }
        self.state.sums[cell] = self.state.sums[cell] + v;
    }

    /// LLRs under the belief-`r` mixture; `r` per cell.
    fn ingest_mixture(&mut self, observations: &[Observation<T>], level: impl Fn(&Self, usize) -> T) -> Result<()> {
        for &(m, y) in observations {
            let r = level(self, m);
            let value = llr(&self.model.f, &self.model.g, r, y)?;
            self.add_llr(m, value);
        }
        Ok(())
    }

    fn ingest_static(&mut self, observations: &[Observation<T>]) -> Result<()> {
        for &(m, y) in observations {
            let value = static_llr(&self.model.baseline, &self.model.f, y)?;
            self.add_llr(m, value);
        }
        Ok(())
    }

    fn filter_beliefs(&mut self, observations: &[Observation<T>]) -> Result<()> {
        let hmm = self.model.hmm;
        match self.config.belief_source {
            BeliefSource::TopCell => {
                if let Some(&(_, y)) = observations.first() {
                    self.state.belief_p0 = belief_update_observed(
                        &hmm,
                        self.state.belief_p0,
                        &self.model.f,
                        &self.model.g,
                        y,
                    )?;
                } else {
                    self.state.belief_p0 = belief_update_transition_only(&hmm, self.state.belief_p0);
                }
            }
            BeliefSource::PerCell => {
                let mut observed = vec![None; self.config.cells];
                for &(m, y) in observations {
                    observed[m] = Some(y);
                }
                for (m, y) in observed.into_iter().enumerate() {
                    let p = self.state.cell_beliefs[m];
                    self.state.cell_beliefs[m] = match y {
                        Some(y) => belief_update_observed(&hmm, p, &self.model.f, &self.model.g, y)?,
                        None => belief_update_transition_only(&hmm, p),
                    };
                }
                self.state.belief_p0 = self.state.cell_beliefs[self.leader()];
            }
        }
        Ok(())
    }

    fn belief_for(&self, cell: usize) -> T {
        match self.config.belief_source {
            BeliefSource::TopCell => self.state.belief_p0,
            BeliefSource::PerCell => self.state.cell_beliefs[cell],
        }
    }

    fn account(&mut self, observations: &[Observation<T>]) {
        self.state.n += 1;
        if observations.is_empty() {
            self.state.idle += 1;
        } else {
            self.state.samples += 1;
        }
    }

    /// Stop test, then (if continuing) the next action.
    fn conclude(&mut self) -> StepDecision {
        if let Some(declared) = stopping_decision(&self.state.sums, self.threshold) {
            return StepDecision::Stop { declared };
        }
        self.pending = self.next_action();
        StepDecision::Continue(self.pending.clone())
    }

    fn next_action(&mut self) -> Action {
        let k = self.config.probes;
        match self.config.kind {
            PolicyKind::Adhm | PolicyKind::Dgf | PolicyKind::AdhmOracle => {
                Action::Probe(select_top_k(&self.state.sums, k))
            }
            PolicyKind::Chernoff => Action::Probe(randomized_select(
                &self.state.sums,
                k,
                self.config.explore,
                &mut self.rng,
            )),
            PolicyKind::AdhmP => {
                let p0 = self.belief_for(self.leader());
                let informative = T::one() - p0 > self.config.p_th;
                let overdue =
                    T::from_usize_lossy(self.state.delay_counter) * self.config.gamma > self.config.cost;
                if informative || overdue {
                    self.state.delay_counter = 0;
                    Action::Probe(select_top_k(&self.state.sums, k))
                } else {
                    self.state.delay_counter += 1;
                    Action::Skip
                }
            }
        }
    }

    fn adhm_step(&mut self, observations: &[Observation<T>]) -> Result<StepDecision> {
        self.ingest_mixture(observations, |p, m| p.belief_for(m))?;
        self.account(observations);
        self.filter_beliefs(observations)?;
        Ok(self.conclude())
    }

    fn adhm_p_step(&mut self, observations: &[Observation<T>]) -> Result<StepDecision> {
        // a skipped step leaves the sums untouched; the stop test still runs
        self.adhm_step(observations)
    }

    fn dgf_step(&mut self, observations: &[Observation<T>]) -> Result<StepDecision> {
        self.ingest_static(observations)?;
        self.account(observations);
        Ok(self.conclude())
    }

    fn chernoff_step(&mut self, observations: &[Observation<T>]) -> Result<StepDecision> {
        self.dgf_step(observations)
    }

    fn adhm_oracle_step(
        &mut self,
        observations: &[Observation<T>],
        revealed: Option<usize>,
    ) -> Result<StepDecision> {
        let palette = self.model.palette.as_ref().expect("validated at construction");
        let d = revealed.ok_or_else(|| {
            SearchError::ContractViolation("oracle policy stepped without a revealed index".into())
        })?;
        let level = *palette.levels.get(d).ok_or_else(|| {
            SearchError::invalid(
                "revealed",
                format!("index {d} out of range for a palette of {}", palette.len()),
            )
        })?;
        self.ingest_mixture(observations, |_, _| level)?;
        self.account(observations);
        Ok(self.conclude())
    }
}

#[cfg(test)]
mod tests;
