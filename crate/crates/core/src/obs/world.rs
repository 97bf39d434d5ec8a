//! Ground-truth simulator: one anomalous cell among `cells`, whose
//! observations are driven either by the hidden Markov chain or by an oracle
//! palette of mixture laws drawn i.i.d. per step.
//!
//! The hidden process and the observation noise use separate ChaCha streams,
//! so the hidden-state path depends only on the seed and never on which cells
//! a policy probes.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::distribution::{DistributionSpec, Law};
use super::hmm::{hmm_step, HiddenState, HmmParams};
use crate::analysis::OraclePalette;
use crate::error::{Result, SearchError};
use crate::scalar::Scalar;

const STATE_STREAM: u64 = 1;
const OBS_STREAM: u64 = 2;

#[derive(Clone, Debug, PartialEq)]
pub enum Dynamics<T> {
    Hmm(HmmParams<T>),
    Oracle(OraclePalette<T>),
}

/// One observation: `(cell, value)`.
pub type Observation<T> = (usize, T);

#[derive(Clone, Debug)]
pub struct WorldState<T> {
    m_star: usize,
    cells: usize,
    f: DistributionSpec<T>,
    g: DistributionSpec<T>,
    dynamics: Dynamics<T>,
    hidden: HiddenState,
    revealed: usize,
    t: usize,
    state_rng: ChaCha8Rng,
    obs_rng: ChaCha8Rng,
}

impl<T: Scalar> WorldState<T> {
    /// The initial hidden state is drawn from the stationary law; in oracle
    /// mode the first palette index is drawn instead.
    pub fn new(
        cells: usize,
        m_star: usize,
        f: DistributionSpec<T>,
        g: DistributionSpec<T>,
        dynamics: Dynamics<T>,
        seed: u64,
    ) -> Result<Self> {
        if m_star >= cells {
            return Err(SearchError::invalid(
                "m_star",
                format!("cell {m_star} out of range for {cells} cells"),
            ));
        }
        let mut state_rng = ChaCha8Rng::seed_from_u64(seed);
        state_rng.set_stream(STATE_STREAM);
        let mut obs_rng = ChaCha8Rng::seed_from_u64(seed);
        obs_rng.set_stream(OBS_STREAM);

        let (hidden, revealed) = match &dynamics {
            Dynamics::Hmm(p) => (p.stationary_state(&mut state_rng), 0),
            Dynamics::Oracle(palette) => {
                let (d, _) = oracle_world_step(palette, &f, &g, &mut state_rng);
                (HiddenState::Normal, d)
            }
        };
        Ok(Self {
            m_star,
            cells,
            f,
            g,
            dynamics,
            hidden,
            revealed,
            t: 0,
            state_rng,
            obs_rng,
        })
    }

    pub fn m_star(&self) -> usize {
        self.m_star
    }

    pub fn time(&self) -> usize {
        self.t
    }

    /// Current hidden state of the anomalous cell (meaningful in HMM mode).
    pub fn hidden_state(&self) -> HiddenState {
        self.hidden
    }

    /// Palette index in force at the current step (oracle mode only).
    pub fn revealed(&self) -> Option<usize> {
        match self.dynamics {
            Dynamics::Oracle(_) => Some(self.revealed),
            Dynamics::Hmm(_) => None,
        }
    }

    /// Observations of the probed cells at the current time step, in probe
    /// order. Does not advance time.
    pub fn observe(&mut self, probed: &[usize]) -> Result<Vec<Observation<T>>> {
        if probed.is_empty() {
            return Err(SearchError::ContractViolation("empty probe set".into()));
        }
        let mut seen = vec![false; self.cells];
        for &m in probed {
            if m >= self.cells {
                return Err(SearchError::ContractViolation(format!(
                    "probed cell {m} out of range for {} cells",
                    self.cells
                )));
            }
            if std::mem::replace(&mut seen[m], true) {
                return Err(SearchError::ContractViolation(format!("cell {m} probed twice")));
            }
        }
        let mut out = Vec::with_capacity(probed.len());
        for &m in probed {
            let y = if m != self.m_star {
                self.f.sample(&mut self.obs_rng)
            } else {
                match &self.dynamics {
                    Dynamics::Hmm(_) => match self.hidden {
                        HiddenState::Normal => self.f.sample(&mut self.obs_rng),
                        HiddenState::Abnormal => self.g.sample(&mut self.obs_rng),
                    },
                    Dynamics::Oracle(palette) => {
                        Law::anomalous(palette.levels[self.revealed], &self.f, &self.g)
                            .sample(&mut self.obs_rng)
                    }
                }
            };
            out.push((m, y));
        }
        Ok(out)
    }

    /// Move to the next time step: exactly one chain transition (or one
    /// fresh palette draw), whether or not anything was probed.
    pub fn advance(&mut self) {
        match &self.dynamics {
            Dynamics::Hmm(p) => self.hidden = hmm_step(p, self.hidden, &mut self.state_rng),
            Dynamics::Oracle(palette) => {
                self.revealed = oracle_world_step(palette, &self.f, &self.g, &mut self.state_rng).0;
            }
        }
        self.t += 1;
    }
}

/// Draw the palette index for one step and the anomalous law it induces.
pub fn oracle_world_step<T: Scalar, R: Rng + ?Sized>(
    palette: &OraclePalette<T>,
    f: &DistributionSpec<T>,
    g: &DistributionSpec<T>,
    rng: &mut R,
) -> (usize, Law<T>) {
    let d = palette.draw(rng);
    (d, Law::anomalous(palette.levels[d], f, g))
}
