//! Random sampling of CPC15/CPC18-style problem spaces.

use std::collections::{HashSet, VecDeque};

use rand::seq::IndexedRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::gamble::{Correlation, Gamble, GambleError, LotShape, Problem, ProblemKey, Schema};
use crate::money::Money;
use crate::seed::{config_hash, rng_from_seed};

/// Attempts tracked when deciding that a space is too constrained.
pub const REJECTION_WINDOW: usize = 10_000;
/// Maximum tolerated rejection rate over the window.
pub const MAX_REJECTION_RATE: f64 = 0.999;

#[derive(Debug, Error)]
pub enum SpaceError {
    #[error("invalid space configuration: {0}")]
    InvalidConfig(String),
    #[error(
        "problem space too constrained: {accepted} accepted in the last {window} attempts \
         ({total_accepted} of {requested} generated after {attempts} attempts)"
    )]
    Exhausted {
        accepted: usize,
        window: usize,
        total_accepted: usize,
        requested: usize,
        attempts: u64,
    },
    #[error(transparent)]
    Gamble(#[from] GambleError),
}

/// Sampling distributions for one problem space.
///
/// Payoffs are whole money units drawn uniformly from
/// `[payoff_min, payoff_max]`; `H` is the larger of two draws and `L` the
/// smaller.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SpaceConfig {
    pub schema: Schema,
    pub payoff_min: i64,
    pub payoff_max: i64,
    pub probability_grid: Vec<f64>,
    pub lot_num_min: u32,
    pub lot_num_max: u32,
    /// Probability that gamble B's probabilities are hidden.
    pub ambiguity_rate: f64,
    /// Rates of correlation -1, 0, +1.
    pub corr_rates: [f64; 3],
    pub id_prefix: String,
}

fn default_grid() -> Vec<f64> {
    let mut grid = vec![0.01];
    grid.extend((1..=19).map(|i| i as f64 * 0.05));
    grid.push(0.99);
    grid.push(1.0);
    // Snap to two decimals so grid values print cleanly.
    grid.iter().map(|p| (p * 100.0).round() / 100.0).collect()
}

impl Default for SpaceConfig {
    fn default() -> Self {
        SpaceConfig::cpc15()
    }
}

impl SpaceConfig {
    pub fn cpc15() -> Self {
        SpaceConfig {
            schema: Schema::Cpc15,
            payoff_min: -50,
            payoff_max: 120,
            probability_grid: default_grid(),
            lot_num_min: 1,
            lot_num_max: 9,
            ambiguity_rate: 0.2,
            corr_rates: [0.1, 0.8, 0.1],
            id_prefix: "synth15-".to_string(),
        }
    }

    pub fn cpc18() -> Self {
        SpaceConfig {
            schema: Schema::Cpc18,
            id_prefix: "synth18-".to_string(),
            ..SpaceConfig::cpc15()
        }
    }

    pub fn for_schema(schema: Schema) -> Self {
        match schema {
            Schema::Cpc15 => SpaceConfig::cpc15(),
            Schema::Cpc18 => SpaceConfig::cpc18(),
        }
    }

    pub fn validate(&self) -> Result<(), SpaceError> {
        let bad = |msg: &str| Err(SpaceError::InvalidConfig(msg.to_string()));
        if self.payoff_min > self.payoff_max {
            return bad("payoff range is empty");
        }
        if self.probability_grid.is_empty() {
            return bad("probability grid is empty");
        }
        if self
            .probability_grid
            .iter()
            .any(|p| !(p.is_finite() && *p > 0.0 && *p <= 1.0))
        {
            return bad("probability grid values must lie in (0, 1]");
        }
        if self.lot_num_min == 0 || self.lot_num_min > self.lot_num_max {
            return bad("lot_num range must be a non-empty interval of positive integers");
        }
        if self.lot_num_max > crate::gamble::MAX_LOT_NUM {
            return bad("lot_num_max exceeds the supported lottery length");
        }
        if !(0.0..=1.0).contains(&self.ambiguity_rate) {
            return bad("ambiguity_rate must be a probability");
        }
        if self.corr_rates.iter().any(|r| !(0.0..=1.0).contains(r))
            || (self.corr_rates.iter().sum::<f64>() - 1.0).abs() > 1e-9
        {
            return bad("corr_rates must be probabilities summing to 1");
        }
        Ok(())
    }

    fn payoff<R: Rng + ?Sized>(&self, rng: &mut R) -> Money {
        Money::from_units(rng.random_range(self.payoff_min..=self.payoff_max))
    }

    fn probability<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        *self
            .probability_grid
            .choose(rng)
            .expect("validated grid is non-empty")
    }

    fn gamble<R: Rng + ?Sized>(&self, rng: &mut R, with_lottery: bool) -> Result<Gamble, GambleError> {
        let (x, y) = (self.payoff(rng), self.payoff(rng));
        let (high, low) = if x >= y { (x, y) } else { (y, x) };
        let p_high = self.probability(rng);
        let (lot_num, lot_shape) = if with_lottery {
            let n = rng.random_range(self.lot_num_min..=self.lot_num_max);
            if n > 1 {
                let shape = *LotShape::ALL_LOTTERIES.choose(rng).expect("non-empty");
                (n, shape)
            } else {
                (1, LotShape::None)
            }
        } else {
            (1, LotShape::None)
        };
        Gamble::new(high, p_high, low, lot_num, lot_shape)
    }

    fn correlation<R: Rng + ?Sized>(&self, rng: &mut R) -> Correlation {
        let u: f64 = rng.random();
        if u < self.corr_rates[0] {
            Correlation::Negative
        } else if u < self.corr_rates[0] + self.corr_rates[1] {
            Correlation::Zero
        } else {
            Correlation::Positive
        }
    }
}

/// Draws one problem (with an empty id). Degenerate problems are not filtered here.
pub fn sample_problem<R: Rng + ?Sized>(cfg: &SpaceConfig, rng: &mut R) -> Result<Problem, SpaceError> {
    let a = cfg.gamble(rng, cfg.schema == Schema::Cpc18)?;
    let b = cfg.gamble(rng, true)?;
    let corr = cfg.correlation(rng);
    let amb = rng.random::<f64>() < cfg.ambiguity_rate;
    Ok(Problem::new(String::new(), a, b, corr, amb, cfg.schema)?)
}

/// How a generated set came to be.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub seed: u64,
    pub config: SpaceConfig,
    pub config_hash: String,
    pub count: usize,
    pub attempts: u64,
    pub rejected_degenerate: u64,
    pub rejected_duplicate: u64,
    pub rejected_excluded: u64,
    pub excluded_sets: usize,
}

/// An ordered, duplicate-free collection of non-degenerate problems.
#[derive(Clone, Debug)]
pub struct ProblemSet {
    pub problems: Vec<Problem>,
    pub schema: Schema,
    pub provenance: Option<Provenance>,
}

impl ProblemSet {
    /// Wraps loaded problems without provenance.
    pub fn from_problems(schema: Schema, problems: Vec<Problem>) -> Self {
        ProblemSet {
            problems,
            schema,
            provenance: None,
        }
    }

    pub fn len(&self) -> usize {
        self.problems.len()
    }

    pub fn is_empty(&self) -> bool {
        self.problems.is_empty()
    }

    pub fn keys(&self) -> HashSet<ProblemKey> {
        self.problems.iter().map(Problem::key).collect()
    }

    pub fn get(&self, id: &str) -> Option<&Problem> {
        self.problems.iter().find(|p| p.id() == id)
    }
}

/// Rejection-samples exactly `count` unique, non-degenerate problems that do
/// not appear in any of `exclusions`.
pub fn generate_set(
    cfg: &SpaceConfig,
    count: usize,
    exclusions: &[&ProblemSet],
    seed: u64,
) -> Result<ProblemSet, SpaceError> {
    cfg.validate()?;
    if count == 0 {
        return Err(SpaceError::InvalidConfig("count must be at least 1".into()));
    }
    let excluded: HashSet<ProblemKey> = exclusions.iter().flat_map(|s| s.keys()).collect();
    let mut seen: HashSet<ProblemKey> = HashSet::with_capacity(count);
    let mut problems = Vec::with_capacity(count);
    let mut rng = rng_from_seed(seed);

    let mut window: VecDeque<bool> = VecDeque::with_capacity(REJECTION_WINDOW);
    let mut window_accepted = 0usize;
    let (mut attempts, mut degenerate, mut duplicate, mut excluded_hits) = (0u64, 0u64, 0u64, 0u64);

    while problems.len() < count {
        attempts += 1;
        let p = sample_problem(cfg, &mut rng)?;
        let accepted = if p.is_degenerate() {
            degenerate += 1;
            false
        } else {
            let key = p.key();
            if excluded.contains(&key) {
                excluded_hits += 1;
                false
            } else if !seen.insert(key) {
                duplicate += 1;
                false
            } else {
                let id = format!("{}{:06}", cfg.id_prefix, problems.len() + 1);
                problems.push(p.with_id(id));
                true
            }
        };

        window.push_back(accepted);
        window_accepted += usize::from(accepted);
        if window.len() > REJECTION_WINDOW {
            let old = window.pop_front().unwrap_or(false);
            window_accepted -= usize::from(old);
        }
        if window.len() == REJECTION_WINDOW
            && (window_accepted as f64) < (1.0 - MAX_REJECTION_RATE) * REJECTION_WINDOW as f64
        {
            return Err(SpaceError::Exhausted {
                accepted: window_accepted,
                window: REJECTION_WINDOW,
                total_accepted: problems.len(),
                requested: count,
                attempts,
            });
        }
    }

    let provenance = Provenance {
        seed,
        config: cfg.clone(),
        config_hash: config_hash(cfg),
        count,
        attempts,
        rejected_degenerate: degenerate,
        rejected_duplicate: duplicate,
        rejected_excluded: excluded_hits,
        excluded_sets: exclusions.len(),
    };
    log::info!(
        "generated {count} problems in {attempts} attempts ({degenerate} degenerate, {duplicate} duplicate, {excluded_hits} excluded)"
    );
    Ok(ProblemSet {
        problems,
        schema: cfg.schema,
        provenance: Some(provenance),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seed::rng_from_seed;

    #[test]
    fn default_grid_values() {
        let g = default_grid();
        assert_eq!(g.len(), 22);
        assert_eq!(g[0], 0.01);
        assert_eq!(g[1], 0.05);
        assert_eq!(g[2], 0.1);
        assert_eq!(g[19], 0.95);
        assert_eq!(g[20], 0.99);
        assert_eq!(g[21], 1.0);
    }

    #[test]
    fn cpc15_gamble_a_has_no_lottery() {
        let cfg = SpaceConfig::cpc15();
        let mut rng = rng_from_seed(11);
        for _ in 0..2000 {
            let p = sample_problem(&cfg, &mut rng).unwrap();
            assert_eq!(p.gamble_a().lot_shape, LotShape::None);
            assert_eq!(p.gamble_a().lot_num, 1);
        }
    }

    #[test]
    fn cpc18_sometimes_has_lottery_on_a() {
        let cfg = SpaceConfig::cpc18();
        let mut rng = rng_from_seed(11);
        let with_lottery = (0..500)
            .filter(|_| sample_problem(&cfg, &mut rng).unwrap().gamble_a().has_lottery())
            .count();
        assert!(with_lottery > 0);
    }

    #[test]
    fn sampling_is_deterministic() {
        let cfg = SpaceConfig::cpc18();
        let a = sample_problem(&cfg, &mut rng_from_seed(5)).unwrap();
        let b = sample_problem(&cfg, &mut rng_from_seed(5)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn sampler_can_emit_degenerate_problems() {
        // A one-point space only yields identical gambles.
        let cfg = SpaceConfig {
            payoff_min: 3,
            payoff_max: 3,
            probability_grid: vec![1.0],
            lot_num_max: 1,
            ..SpaceConfig::cpc15()
        };
        let p = sample_problem(&cfg, &mut rng_from_seed(1)).unwrap();
        assert!(p.is_degenerate());
    }

    #[test]
    fn constrained_space_fails_with_diagnostic() {
        let cfg = SpaceConfig {
            payoff_min: 0,
            payoff_max: 1,
            probability_grid: vec![0.5],
            lot_num_max: 1,
            ambiguity_rate: 0.0,
            corr_rates: [0.0, 1.0, 0.0],
            ..SpaceConfig::cpc15()
        };
        let err = generate_set(&cfg, 50, &[], 1).unwrap_err();
        assert!(matches!(err, SpaceError::Exhausted { .. }), "{err}");
    }

    #[test]
    fn config_validation() {
        let mut cfg = SpaceConfig::cpc15();
        cfg.corr_rates = [0.5, 0.5, 0.5];
        assert!(cfg.validate().is_err());
        let mut cfg = SpaceConfig::cpc15();
        cfg.probability_grid = vec![0.0];
        assert!(cfg.validate().is_err());
        assert!(generate_set(&SpaceConfig::cpc15(), 0, &[], 1).is_err());
    }

    #[test]
    fn generated_set_is_unique_and_clean() {
        let set = generate_set(&SpaceConfig::cpc15(), 2000, &[], 9).unwrap();
        assert_eq!(set.len(), 2000);
        assert_eq!(set.keys().len(), 2000);
        assert!(set.problems.iter().all(|p| !p.is_degenerate()));
        assert_eq!(set.problems[0].id(), "synth15-000001");
        let prov = set.provenance.unwrap();
        assert_eq!(prov.count, 2000);
        assert!(prov.attempts >= 2000);
    }
}
