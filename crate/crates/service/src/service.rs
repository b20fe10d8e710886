use std::collections::HashMap;
use std::fs::{File, OpenOptions};
use std::io::{BufWriter, Write};
use std::path::PathBuf;
use std::time::{SystemTime, UNIX_EPOCH};

use cogprior_core::gamble::{OutcomeDistribution, Problem};
use cogprior_core::io::{save_targets, TargetRecord};
use cogprior_core::money::Money;
use cogprior_core::seed::{derive_seed, derived_rng, rng_from_seed, Rng};
use rand::seq::SliceRandom;
use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::error::ServiceError;
use crate::session::{Assignment, Choice, Condition, Session, Side, Status, TrialRecord};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ServiceConfig {
    pub seed: u64,
    pub feedback_problems: usize,
    pub no_feedback_problems: usize,
    pub trials_per_problem: u32,
    /// A session whose same-side share exceeds this is excluded.
    pub exclusion_threshold: f64,
    /// Append-only JSON-lines event log.
    pub log_path: Option<PathBuf>,
    /// Target CSV rewritten after every finalization.
    pub export_path: Option<PathBuf>,
}

impl Default for ServiceConfig {
    fn default() -> Self {
        ServiceConfig {
            seed: 0,
            feedback_problems: 16,
            no_feedback_problems: 4,
            trials_per_problem: 5,
            exclusion_threshold: 0.8,
            log_path: None,
            export_path: None,
        }
    }
}

impl ServiceConfig {
    pub fn problems_per_session(&self) -> usize {
        self.feedback_problems + self.no_feedback_problems
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OutcomeView {
    pub payoff: Money,
    /// Absent when the option is ambiguous.
    pub probability: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OptionView {
    pub outcomes: Vec<OutcomeView>,
    pub ambiguous: bool,
}

impl OptionView {
    fn new(d: &OutcomeDistribution, ambiguous: bool) -> Self {
        OptionView {
            outcomes: d
                .outcomes()
                .iter()
                .rev()
                .map(|o| OutcomeView {
                    payoff: o.payoff,
                    probability: (!ambiguous).then_some(o.probability),
                })
                .collect(),
            ambiguous,
        }
    }
}

/// What the participant sees on the next trial.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrialView {
    pub session_id: String,
    pub problem_id: String,
    pub condition: Condition,
    /// 1-based trial number within the session.
    pub trial_index: u32,
    pub total_trials: u32,
    pub problem_trial: u32,
    pub left: OptionView,
    pub right: OptionView,
    pub cumulative_reward: Money,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NextTrial {
    pub session_id: String,
    pub status: Status,
    pub trials_remaining: u32,
    pub trial: Option<TrialView>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ChoiceRequest {
    pub problem_id: String,
    #[serde(default)]
    pub choice: Option<Choice>,
    #[serde(default)]
    pub side: Option<Side>,
    /// Session trial number the client believes it is answering. A repeat of
    /// an already recorded trial returns the recorded outcome.
    #[serde(default)]
    pub trial_index: Option<u32>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrialOutcome {
    pub trial_index: u32,
    pub problem_id: String,
    pub choice: Choice,
    pub side: Side,
    pub payoff_obtained: Money,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub payoff_forgone: Option<Money>,
    pub cumulative_reward: Money,
    pub problem_exhausted: bool,
    pub trials_remaining: u32,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SessionSummary {
    pub session_id: String,
    pub participant_id: String,
    pub status: Status,
    pub total_trials: u32,
    pub trials_done: u32,
    pub cumulative_reward: Money,
    pub same_side_fraction: f64,
    pub assignments: Vec<Assignment>,
}

#[derive(Serialize)]
#[serde(tag = "event", rename_all = "snake_case")]
enum LogEvent<'a> {
    SessionCreated {
        session_id: &'a str,
        participant_id: &'a str,
        assignments: &'a [Assignment],
    },
    Trial(&'a TrialRecord),
    Finalized {
        session_id: &'a str,
        status: Status,
        same_side_fraction: f64,
    },
}

/// Experiment state: the problem pool, live sessions and their records.
pub struct ExperimentService {
    cfg: ServiceConfig,
    pool: Vec<Problem>,
    coverage: Vec<u32>,
    sessions: HashMap<String, Session>,
    rngs: HashMap<String, Rng>,
    rng: Rng,
    log: Option<BufWriter<File>>,
}

fn now_ms() -> u64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_millis() as u64)
        .unwrap_or(0)
}

impl ExperimentService {
    pub fn new(pool: Vec<Problem>, cfg: ServiceConfig) -> Result<Self, ServiceError> {
        if pool.is_empty() {
            return Err(ServiceError::EmptyPool);
        }
        if pool.len() < cfg.problems_per_session() {
            return Err(ServiceError::PoolTooSmall {
                have: pool.len(),
                need: cfg.problems_per_session(),
            });
        }
        if cfg.trials_per_problem == 0 || cfg.problems_per_session() == 0 {
            return Err(ServiceError::BadRequest("sessions need problems and trials".into()));
        }
        let log = match &cfg.log_path {
            Some(path) => Some(BufWriter::new(
                OpenOptions::new()
                    .create(true)
                    .append(true)
                    .open(path)
                    .map_err(|e| ServiceError::io(path, e))?,
            )),
            None => None,
        };
        Ok(ExperimentService {
            coverage: vec![0; pool.len()],
            rng: rng_from_seed(derive_seed(cfg.seed, "assignment")),
            cfg,
            pool,
            sessions: HashMap::new(),
            rngs: HashMap::new(),
            log,
        })
    }

    pub fn config(&self) -> &ServiceConfig {
        &self.cfg
    }

    pub fn pool(&self) -> &[Problem] {
        &self.pool
    }

    pub fn coverage(&self) -> &[u32] {
        &self.coverage
    }

    pub fn session(&self, id: &str) -> Result<&Session, ServiceError> {
        self.sessions
            .get(id)
            .ok_or_else(|| ServiceError::UnknownSession(id.to_string()))
    }

    fn append<T: Serialize>(&mut self, event: &T) -> Result<(), ServiceError> {
        if let Some(w) = self.log.as_mut() {
            let path = self.cfg.log_path.clone().unwrap_or_default();
            serde_json::to_writer(&mut *w, event).map_err(|e| ServiceError::io(&path, e.into()))?;
            w.write_all(b"\n").map_err(|e| ServiceError::io(&path, e))?;
            w.flush().map_err(|e| ServiceError::io(&path, e))?;
        }
        Ok(())
    }

    pub fn summary(&self, id: &str) -> Result<SessionSummary, ServiceError> {
        let s = self.session(id)?;
        Ok(SessionSummary {
            session_id: s.session_id.clone(),
            participant_id: s.participant_id.clone(),
            status: s.status,
            total_trials: s.total_trials(self.cfg.trials_per_problem),
            trials_done: s.trials_done(),
            cumulative_reward: s.cumulative_reward,
            same_side_fraction: s.same_side_fraction(),
            assignments: s.assignments.clone(),
        })
    }

    /// Assigns the least-covered problems (ties broken at random), picks
    /// which of them get feedback, randomizes sides and interleaves.
    pub fn create_session(&mut self, participant_id: &str) -> Result<SessionSummary, ServiceError> {
        let id = loop {
            let candidate = format!("{:016x}", self.rng.random::<u64>());
            if !self.sessions.contains_key(&candidate) {
                break candidate;
            }
        };
        let mut order: Vec<usize> = (0..self.pool.len()).collect();
        order.shuffle(&mut self.rng);
        order.sort_by_key(|&i| self.coverage[i]);
        let chosen = &order[..self.cfg.problems_per_session()];
        let mut assignments: Vec<Assignment> = chosen
            .iter()
            .enumerate()
            .map(|(k, &i)| Assignment {
                problem_id: self.pool[i].id().to_string(),
                condition: if k < self.cfg.feedback_problems {
                    Condition::Feedback
                } else {
                    Condition::NoFeedback
                },
                a_side: if self.rng.random::<bool>() { Side::Left } else { Side::Right },
                trials_done: 0,
                pool_index: i,
            })
            .collect();
        assignments.shuffle(&mut self.rng);
        for a in &assignments {
            self.coverage[a.pool_index] += 1;
        }
        let session = Session {
            session_id: id.clone(),
            participant_id: participant_id.to_string(),
            assignments,
            cumulative_reward: Money::ZERO,
            status: Status::Active,
            trials: Vec::new(),
        };
        self.append(&LogEvent::SessionCreated {
            session_id: &session.session_id,
            participant_id: &session.participant_id,
            assignments: &session.assignments,
        })?;
        self.rngs.insert(id.clone(), derived_rng(self.cfg.seed, &id));
        self.sessions.insert(id.clone(), session);
        self.summary(&id)
    }

    pub fn next_trial(&self, id: &str) -> Result<NextTrial, ServiceError> {
        let s = self.session(id)?;
        let per = self.cfg.trials_per_problem;
        let remaining = s.total_trials(per) - s.trials_done();
        let trial = match (s.status, s.current(per)) {
            (Status::Active, Some(k)) => {
                let a = &s.assignments[k];
                let p = &self.pool[a.pool_index];
                let view_a = OptionView::new(p.dist_a(), false);
                let view_b = OptionView::new(p.dist_b(), p.amb());
                let (left, right) = match a.a_side {
                    Side::Left => (view_a, view_b),
                    Side::Right => (view_b, view_a),
                };
                Some(TrialView {
                    session_id: s.session_id.clone(),
                    problem_id: a.problem_id.clone(),
                    condition: a.condition,
                    trial_index: s.trials_done() + 1,
                    total_trials: s.total_trials(per),
                    problem_trial: a.trials_done + 1,
                    left,
                    right,
                    cumulative_reward: s.cumulative_reward,
                })
            }
            _ => None,
        };
        Ok(NextTrial {
            session_id: s.session_id.clone(),
            status: s.status,
            trials_remaining: remaining,
            trial,
        })
    }

    pub fn submit_choice(&mut self, id: &str, req: &ChoiceRequest) -> Result<TrialOutcome, ServiceError> {
        let per = self.cfg.trials_per_problem;
        let s = self.session(id)?;
        if let Some(t) = req.trial_index {
            if let Some(done) = s.trials.get((t as usize).wrapping_sub(1)) {
                if done.problem_id != req.problem_id {
                    return Err(ServiceError::BadRequest(format!(
                        "trial {t} was recorded for problem {}",
                        done.problem_id
                    )));
                }
                return Ok(outcome_of(s, done, per));
            }
            if t != s.trials_done() + 1 {
                return Err(ServiceError::BadRequest(format!(
                    "trial {t} is out of sequence; next is {}",
                    s.trials_done() + 1
                )));
            }
        }
        if s.status != Status::Active {
            return Err(ServiceError::SessionClosed(id.to_string()));
        }
        let Some(k) = s.current(per) else {
            return Err(ServiceError::TrialsExhausted(req.problem_id.clone()));
        };
        let a = &s.assignments[k];
        if a.problem_id != req.problem_id {
            return match s.assignments.iter().find(|x| x.problem_id == req.problem_id) {
                Some(x) if x.trials_done >= per => Err(ServiceError::TrialsExhausted(req.problem_id.clone())),
                Some(_) => Err(ServiceError::OutOfOrder {
                    expected: a.problem_id.clone(),
                    got: req.problem_id.clone(),
                }),
                None => Err(ServiceError::UnknownProblem(req.problem_id.clone())),
            };
        }
        let (choice, side) = match (req.choice, req.side) {
            (Some(c), None) => (c, a.side_of(c)),
            (None, Some(sd)) => (a.choice_at(sd), sd),
            (Some(c), Some(sd)) if a.side_of(c) == sd => (c, sd),
            (Some(_), Some(_)) => {
                return Err(ServiceError::BadRequest("choice and side disagree".into()));
            }
            (None, None) => return Err(ServiceError::BadRequest("choice or side is required".into())),
        };
        let condition = a.condition;
        let pool_index = a.pool_index;
        let rng = self.rngs.get_mut(id).expect("every session has a stream");
        let (xa, xb) = self.pool[pool_index].sample_joint(rng);
        let (obtained, forgone) = match choice {
            Choice::A => (xa, xb),
            Choice::B => (xb, xa),
        };
        let s = self.sessions.get_mut(id).expect("checked above");
        let a = &mut s.assignments[k];
        a.trials_done += 1;
        let record = TrialRecord {
            session_id: s.session_id.clone(),
            problem_id: a.problem_id.clone(),
            trial_index: s.trials.len() as u32 + 1,
            problem_trial: a.trials_done,
            condition,
            choice,
            side,
            payoff_obtained: obtained,
            payoff_forgone: (condition == Condition::Feedback).then_some(forgone),
            timestamp_ms: now_ms(),
        };
        s.cumulative_reward += obtained;
        s.trials.push(record.clone());
        let out = outcome_of(s, &record, per);
        self.append(&LogEvent::Trial(&record))?;
        Ok(out)
    }

    /// Applies the same-side exclusion rule once all trials are in.
    /// Repeated calls return the stored status.
    pub fn finalize(&mut self, id: &str) -> Result<SessionSummary, ServiceError> {
        let per = self.cfg.trials_per_problem;
        let threshold = self.cfg.exclusion_threshold;
        let s = self
            .sessions
            .get_mut(id)
            .ok_or_else(|| ServiceError::UnknownSession(id.to_string()))?;
        if s.status != Status::Active {
            return self.summary(id);
        }
        let remaining = s.total_trials(per) - s.trials_done();
        if remaining > 0 {
            return Err(ServiceError::Incomplete { remaining });
        }
        let frac = s.same_side_fraction();
        s.status = if frac > threshold {
            Status::Excluded
        } else {
            Status::Complete
        };
        let status = s.status;
        self.append(&LogEvent::Finalized {
            session_id: id,
            status,
            same_side_fraction: frac,
        })?;
        if let Some(path) = self.cfg.export_path.clone() {
            save_targets(&path, &self.aggregate(None)).map_err(|e| ServiceError::Export(e.to_string()))?;
        }
        log::info!("session {id} finalized as {status:?} (same side {frac:.2})");
        self.summary(id)
    }

    /// Participant-mean A rates per (problem, condition) over complete
    /// sessions, in pool order with the no-feedback block first.
    pub fn aggregate(&self, problems: Option<&[String]>) -> Vec<TargetRecord> {
        let per = self.cfg.trials_per_problem;
        let mut acc: HashMap<(usize, Condition), (f64, u32)> = HashMap::new();
        for s in self.sessions.values().filter(|s| s.status == Status::Complete) {
            for a in &s.assignments {
                if a.trials_done == 0 {
                    continue;
                }
                let chose_a = s
                    .trials
                    .iter()
                    .filter(|t| t.problem_id == a.problem_id && t.choice == Choice::A)
                    .count();
                let e = acc.entry((a.pool_index, a.condition)).or_insert((0.0, 0));
                e.0 += chose_a as f64 / f64::from(a.trials_done.min(per));
                e.1 += 1;
            }
        }
        let mut keys: Vec<(usize, Condition)> = acc.keys().copied().collect();
        keys.sort_by_key(|(i, c)| (*i, c.block()));
        keys.into_iter()
            .filter(|(i, _)| problems.is_none_or(|f| f.iter().any(|id| id == self.pool[*i].id())))
            .map(|key| {
                let (sum, n) = acc[&key];
                TargetRecord {
                    problem_id: self.pool[key.0].id().to_string(),
                    block: key.1.block(),
                    feedback: key.1 == Condition::Feedback,
                    n,
                    a_rate: sum / f64::from(n),
                }
            })
            .collect()
    }
}

fn outcome_of(s: &Session, r: &TrialRecord, per: u32) -> TrialOutcome {
    let reward: Money = s.trials[..r.trial_index as usize]
        .iter()
        .map(|t| t.payoff_obtained)
        .sum();
    TrialOutcome {
        trial_index: r.trial_index,
        problem_id: r.problem_id.clone(),
        choice: r.choice,
        side: r.side,
        payoff_obtained: r.payoff_obtained,
        payoff_forgone: r.payoff_forgone,
        cumulative_reward: reward,
        problem_exhausted: r.problem_trial >= per,
        trials_remaining: s.total_trials(per) - r.trial_index,
    }
}
