//! Eve's tunable parameters and the per-stage probabilities they induce for a
//! given protocol.

use serde::{Deserialize, Serialize};

use crate::error::{ensure, Error, Result};
use crate::photonics::{holevo_binary, vacuum_search_success, MeanPhotonNumber, ProtocolParams};
use crate::soft_filter::{sf1_probs, sf2_probs, SFOutcomeProbs};

/// The five attack parameters: SF1 trial count, SF2 run cap, and the three
/// output intensities.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AttackParams {
    pub t_sf1: u32,
    pub t_sf2: u32,
    pub mu_b: MeanPhotonNumber,
    pub mu_e1: MeanPhotonNumber,
    pub mu_e2: MeanPhotonNumber,
}

impl AttackParams {
    pub fn new(
        t_sf1: u32,
        t_sf2: u32,
        mu_b: MeanPhotonNumber,
        mu_e1: MeanPhotonNumber,
        mu_e2: MeanPhotonNumber,
    ) -> Result<Self> {
        ensure(t_sf2 >= 1, || "t_sf2 must be at least 1".to_string())?;
        ensure(!mu_b.is_infinite(), || "mu_b must be finite".to_string())?;
        Ok(Self {
            t_sf1,
            t_sf2,
            mu_b,
            mu_e1,
            mu_e2,
        })
    }

    /// Convenience constructor from plain floats (`f64::INFINITY` allowed for
    /// Eve's intensities).
    pub fn from_values(t_sf1: u32, t_sf2: u32, mu_b: f64, mu_e1: f64, mu_e2: f64) -> Result<Self> {
        Self::new(
            t_sf1,
            t_sf2,
            MeanPhotonNumber::finite(mu_b)?,
            MeanPhotonNumber::new(mu_e1)?,
            MeanPhotonNumber::new(mu_e2)?,
        )
    }

    /// The USD-like shape: both Eve intensities infinite and a single SF2
    /// trial.
    pub fn usd_like(t_sf1: u32, mu_b: MeanPhotonNumber) -> Result<Self> {
        Self::new(t_sf1, 1, mu_b, MeanPhotonNumber::INFINITE, MeanPhotonNumber::INFINITE)
    }

    pub fn is_usd_like(&self) -> bool {
        self.t_sf2 == 1 && self.mu_e1.is_infinite() && self.mu_e2.is_infinite()
    }

    pub fn check_feasible(&self, protocol: &ProtocolParams) -> Result<()> {
        protocol.validate()?;
        ensure(self.t_sf2 >= 1, || "t_sf2 must be at least 1".to_string())?;
        let mu_a = protocol.mu_a;
        for (name, mu_e) in [("mu_e1", self.mu_e1), ("mu_e2", self.mu_e2)] {
            if self.mu_b + mu_e < mu_a {
                return Err(Error::Infeasible(format!(
                    "mu_b + {name} = {} is below mu_a = {mu_a}",
                    self.mu_b + mu_e
                )));
            }
        }
        Ok(())
    }
}

/// Everything the attack state machine needs to know about one
/// `(protocol, attack)` pair.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StageModel {
    pub t_sf1: u32,
    pub t_sf2: u32,
    /// Vacuum-search success on an information state.
    pub search_success: f64,
    pub sf1: SFOutcomeProbs,
    pub sf2: SFOutcomeProbs,
    /// Closing vacuum-search success on an information state after SF2.
    pub closing_success: f64,
    pub chi1: f64,
    pub chi2: f64,
    pub f: f64,
    pub mu_b: MeanPhotonNumber,
}

impl StageModel {
    pub fn resolve(protocol: &ProtocolParams, attack: &AttackParams) -> Result<Self> {
        attack.check_feasible(protocol)?;
        let mu_a = protocol.mu_a;
        // SF1 is never applied when t_sf1 = 0, so its probabilities are not
        // required to exist.
        let sf1 = if attack.t_sf1 > 0 {
            sf1_probs(mu_a, attack.mu_b, attack.mu_e1)?
        } else {
            SFOutcomeProbs {
                p_info: 1.0,
                q_control: 1.0,
            }
        };
        let sf2 = sf2_probs(mu_a, attack.mu_b, attack.mu_e2)?;
        Ok(Self {
            t_sf1: attack.t_sf1,
            t_sf2: attack.t_sf2,
            search_success: vacuum_search_success(mu_a),
            sf1,
            sf2,
            closing_success: vacuum_search_success(attack.mu_b + attack.mu_e2),
            chi1: holevo_binary(attack.mu_e1),
            chi2: holevo_binary(attack.mu_e2),
            f: protocol.f,
            mu_b: attack.mu_b,
        })
    }

    /// Model used for scripted replays, where only the information values
    /// matter; every probability is a placeholder.
    pub fn scripted(attack: &AttackParams) -> Self {
        let half = SFOutcomeProbs {
            p_info: 0.5,
            q_control: 0.5,
        };
        Self {
            t_sf1: attack.t_sf1,
            t_sf2: attack.t_sf2,
            search_success: 0.5,
            sf1: half,
            sf2: half,
            closing_success: 0.5,
            chi1: holevo_binary(attack.mu_e1),
            chi2: holevo_binary(attack.mu_e2),
            f: 0.0,
            mu_b: attack.mu_b,
        }
    }
}
