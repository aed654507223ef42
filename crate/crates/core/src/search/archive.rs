use serde::{Deserialize, Serialize};

use super::candidate::CandidateKtm;
use super::pareto::{dominates, Dominance};

/// All-time non-dominated set of valid candidates.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ParetoArchive {
    pub members: Vec<CandidateKtm>,
}

impl ParetoArchive {
    /// Offers a candidate; returns whether it was admitted. Penalized
    /// candidates and repeats of an archived snippet are ignored.
    pub fn offer(&mut self, c: &CandidateKtm, mode: Dominance) -> bool {
        if !c.is_valid() || self.members.iter().any(|m| m.snippet.id == c.snippet.id) {
            return false;
        }
        if self.members.iter().any(|m| dominates(m.objectives(), c.objectives(), mode)) {
            return false;
        }
        self.members.retain(|m| !dominates(c.objectives(), m.objectives(), mode));
        self.members.push(c.clone());
        true
    }

    /// True when no archived pair is in a dominance relation.
    pub fn is_sound(&self, mode: Dominance) -> bool {
        self.members.iter().all(|a| {
            self.members
                .iter()
                .all(|b| !dominates(a.objectives(), b.objectives(), mode))
        })
    }
}
