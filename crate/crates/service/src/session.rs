use cogprior_core::money::Money;
use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Condition {
    Feedback,
    NoFeedback,
}

impl Condition {
    /// Block code used in target CSVs.
    pub fn block(self) -> u32 {
        match self {
            Condition::NoFeedback => 1,
            Condition::Feedback => 2,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Choice {
    A,
    B,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Left,
    Right,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Active,
    Complete,
    Excluded,
}

/// One problem assigned to a session.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Assignment {
    pub problem_id: String,
    pub condition: Condition,
    /// Side of the screen on which gamble A is shown.
    pub a_side: Side,
    pub trials_done: u32,
    #[serde(skip)]
    pub(crate) pool_index: usize,
}

impl Assignment {
    pub fn side_of(&self, choice: Choice) -> Side {
        match (choice, self.a_side) {
            (Choice::A, s) => s,
            (Choice::B, Side::Left) => Side::Right,
            (Choice::B, Side::Right) => Side::Left,
        }
    }

    pub fn choice_at(&self, side: Side) -> Choice {
        if side == self.a_side {
            Choice::A
        } else {
            Choice::B
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub session_id: String,
    pub problem_id: String,
    /// 1-based position within the session.
    pub trial_index: u32,
    /// 1-based position within the problem.
    pub problem_trial: u32,
    pub condition: Condition,
    pub choice: Choice,
    pub side: Side,
    pub payoff_obtained: Money,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub payoff_forgone: Option<Money>,
    /// Milliseconds since the Unix epoch.
    pub timestamp_ms: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Session {
    pub session_id: String,
    pub participant_id: String,
    pub assignments: Vec<Assignment>,
    pub cumulative_reward: Money,
    pub status: Status,
    pub trials: Vec<TrialRecord>,
}

impl Session {
    pub fn total_trials(&self, per_problem: u32) -> u32 {
        self.assignments.len() as u32 * per_problem
    }

    pub fn trials_done(&self) -> u32 {
        self.trials.len() as u32
    }

    /// Index of the assignment the next trial belongs to.
    pub fn current(&self, per_problem: u32) -> Option<usize> {
        self.assignments
            .iter()
            .position(|a| a.trials_done < per_problem)
    }

    /// Largest share of trials chosen on one side of the screen.
    pub fn same_side_fraction(&self) -> f64 {
        if self.trials.is_empty() {
            return 0.0;
        }
        let left = self.trials.iter().filter(|t| t.side == Side::Left).count();
        let right = self.trials.len() - left;
        left.max(right) as f64 / self.trials.len() as f64
    }
}
