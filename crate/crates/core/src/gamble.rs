//! Gambles, lotteries and two-gamble choice problems.
//!
//! A [`Gamble`] is the CPC parameterization `(H, pH, L, LotNum, LotShape)`:
//! with probability `1 - pH` it pays `L`, otherwise it pays the outcome of a
//! lottery anchored on `H`. [`Gamble::expand`] turns that into an explicit,
//! canonical [`OutcomeDistribution`].

use std::cmp::Ordering;
use std::collections::BTreeMap;

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::money::Money;

/// Tolerance for probability sums and distribution equality.
pub const PROB_TOLERANCE: f64 = 1e-9;

/// Lotteries longer than this would overflow the skewed payoff ladder.
pub const MAX_LOT_NUM: u32 = 30;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GambleError {
    #[error("probability {0} outside its valid range")]
    InvalidProbability(f64),
    #[error("probabilities sum to {0}, expected 1")]
    ProbabilitySum(f64),
    #[error("distribution has no outcomes")]
    Empty,
    #[error("lot_num {lot_num} is invalid for lottery shape {shape:?}")]
    InvalidLottery { lot_num: u32, shape: LotShape },
    #[error("CPC15 problems require a lottery-free gamble A")]
    Cpc15LotteryOnA,
    #[error("unknown lottery shape code {0}")]
    UnknownShapeCode(i64),
    #[error("unknown correlation code {0}")]
    UnknownCorrelationCode(i64),
}

/// Shape of the lottery branch of a gamble.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum LotShape {
    None,
    Symm,
    RSkew,
    LSkew,
}

impl LotShape {
    pub const ALL_LOTTERIES: [LotShape; 3] = [LotShape::Symm, LotShape::RSkew, LotShape::LSkew];

    /// CSV / feature code: 0=None, 1=Symm, 2=RSkew, 3=LSkew.
    pub fn code(self) -> u8 {
        match self {
            LotShape::None => 0,
            LotShape::Symm => 1,
            LotShape::RSkew => 2,
            LotShape::LSkew => 3,
        }
    }

    pub fn from_code(code: i64) -> Result<Self, GambleError> {
        match code {
            0 => Ok(LotShape::None),
            1 => Ok(LotShape::Symm),
            2 => Ok(LotShape::RSkew),
            3 => Ok(LotShape::LSkew),
            other => Err(GambleError::UnknownShapeCode(other)),
        }
    }
}

/// Forced correlation between the two gambles' payoffs within a trial.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Correlation {
    Negative,
    Zero,
    Positive,
}

impl Correlation {
    pub fn code(self) -> i8 {
        match self {
            Correlation::Negative => -1,
            Correlation::Zero => 0,
            Correlation::Positive => 1,
        }
    }

    pub fn from_code(code: i64) -> Result<Self, GambleError> {
        match code {
            -1 => Ok(Correlation::Negative),
            0 => Ok(Correlation::Zero),
            1 => Ok(Correlation::Positive),
            other => Err(GambleError::UnknownCorrelationCode(other)),
        }
    }
}

/// Which competition's problem layout a problem follows.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Schema {
    Cpc15,
    Cpc18,
}

impl std::str::FromStr for Schema {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "cpc15" => Ok(Schema::Cpc15),
            "cpc18" => Ok(Schema::Cpc18),
            other => Err(format!("unknown schema `{other}` (expected cpc15 or cpc18)")),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Outcome {
    pub payoff: Money,
    pub probability: f64,
}

/// A finite payoff distribution, sorted by payoff with duplicates merged.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OutcomeDistribution {
    outcomes: Vec<Outcome>,
}

/// Result of comparing two distributions quantile by quantile.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Dominance {
    /// First pays at least as much at every quantile and strictly more at some.
    First,
    Second,
    /// Identical quantile functions.
    Equal,
    Neither,
}

impl OutcomeDistribution {
    /// Builds a distribution, merging duplicate payoffs.
    pub fn new<I>(outcomes: I) -> Result<Self, GambleError>
    where
        I: IntoIterator<Item = (Money, f64)>,
    {
        let mut merged: BTreeMap<Money, f64> = BTreeMap::new();
        for (payoff, p) in outcomes {
            if !p.is_finite() || p <= 0.0 || p > 1.0 + PROB_TOLERANCE {
                return Err(GambleError::InvalidProbability(p));
            }
            *merged.entry(payoff).or_insert(0.0) += p;
        }
        if merged.is_empty() {
            return Err(GambleError::Empty);
        }
        let total: f64 = merged.values().sum();
        if (total - 1.0).abs() > PROB_TOLERANCE {
            return Err(GambleError::ProbabilitySum(total));
        }
        Ok(OutcomeDistribution {
            outcomes: merged
                .into_iter()
                .map(|(payoff, probability)| Outcome {
                    payoff,
                    probability: probability.min(1.0),
                })
                .collect(),
        })
    }

    pub fn certain(payoff: Money) -> Self {
        OutcomeDistribution {
            outcomes: vec![Outcome {
                payoff,
                probability: 1.0,
            }],
        }
    }

    pub fn outcomes(&self) -> &[Outcome] {
        &self.outcomes
    }

    pub fn len(&self) -> usize {
        self.outcomes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.outcomes.is_empty()
    }

    pub fn expected_value(&self) -> f64 {
        self.outcomes
            .iter()
            .map(|o| o.probability * o.payoff.as_f64())
            .sum()
    }

    pub fn variance(&self) -> f64 {
        if self.outcomes.len() == 1 {
            return 0.0;
        }
        let mean = self.expected_value();
        self.outcomes
            .iter()
            .map(|o| o.probability * (o.payoff.as_f64() - mean).powi(2))
            .sum()
    }

    /// True when the distribution is a single sure payoff.
    pub fn is_certain(&self) -> bool {
        self.outcomes.len() == 1
    }

    pub fn min_payoff(&self) -> Money {
        self.outcomes[0].payoff
    }

    pub fn max_payoff(&self) -> Money {
        self.outcomes[self.outcomes.len() - 1].payoff
    }

    /// Inverse CDF at `u` in `[0, 1]`.
    pub fn quantile(&self, u: f64) -> Money {
        let mut cum = 0.0;
        for o in &self.outcomes {
            cum += o.probability;
            if u < cum {
                return o.payoff;
            }
        }
        self.max_payoff()
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Money {
        self.quantile(rng.random::<f64>())
    }

    /// Equality of payoffs and probabilities (within [`PROB_TOLERANCE`]).
    pub fn approx_eq(&self, other: &OutcomeDistribution) -> bool {
        self.outcomes.len() == other.outcomes.len()
            && self
                .outcomes
                .iter()
                .zip(&other.outcomes)
                .all(|(a, b)| {
                    a.payoff == b.payoff && (a.probability - b.probability).abs() <= PROB_TOLERANCE
                })
    }

    /// Hashable canonical form: cents plus probabilities quantized to 1e-12.
    pub fn canonical_key(&self) -> Vec<(i64, i64)> {
        self.outcomes
            .iter()
            .map(|o| (o.payoff.cents(), (o.probability * 1e12).round() as i64))
            .collect()
    }

    /// Compares quantile functions over the union of both CDF breakpoints.
    pub fn dominance(&self, other: &OutcomeDistribution) -> Dominance {
        let mut cuts = vec![0.0, 1.0];
        for d in [self, other] {
            let mut cum = 0.0;
            for o in &d.outcomes {
                cum += o.probability;
                cuts.push(cum.min(1.0));
            }
        }
        cuts.sort_by(|a, b| a.partial_cmp(b).unwrap_or(Ordering::Equal));
        cuts.dedup_by(|a, b| (*a - *b).abs() <= PROB_TOLERANCE);

        let (mut ge, mut le) = (true, true);
        let (mut strict_gt, mut strict_lt) = (false, false);
        for w in cuts.windows(2) {
            let mid = 0.5 * (w[0] + w[1]);
            match self.quantile(mid).cmp(&other.quantile(mid)) {
                Ordering::Greater => {
                    le = false;
                    strict_gt = true;
                }
                Ordering::Less => {
                    ge = false;
                    strict_lt = true;
                }
                Ordering::Equal => {}
            }
        }
        match (ge, le, strict_gt, strict_lt) {
            (true, true, _, _) => Dominance::Equal,
            (true, false, true, _) => Dominance::First,
            (false, true, _, true) => Dominance::Second,
            _ => Dominance::Neither,
        }
    }
}

/// Free-function form of [`OutcomeDistribution::expected_value`].
pub fn expected_value(d: &OutcomeDistribution) -> f64 {
    d.expected_value()
}

/// One risky option in CPC parameterization.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Gamble {
    pub high: Money,
    pub p_high: f64,
    pub low: Money,
    pub lot_num: u32,
    pub lot_shape: LotShape,
}

impl Gamble {
    pub fn new(
        high: Money,
        p_high: f64,
        low: Money,
        lot_num: u32,
        lot_shape: LotShape,
    ) -> Result<Self, GambleError> {
        let g = Gamble {
            high,
            p_high,
            low,
            lot_num,
            lot_shape,
        };
        g.validate()?;
        Ok(g)
    }

    /// A two-outcome gamble without a lottery.
    pub fn simple(high: Money, p_high: f64, low: Money) -> Result<Self, GambleError> {
        Gamble::new(high, p_high, low, 1, LotShape::None)
    }

    pub fn sure(payoff: Money) -> Self {
        Gamble {
            high: payoff,
            p_high: 1.0,
            low: payoff,
            lot_num: 1,
            lot_shape: LotShape::None,
        }
    }

    pub fn validate(&self) -> Result<(), GambleError> {
        if !(0.0..=1.0).contains(&self.p_high) {
            return Err(GambleError::InvalidProbability(self.p_high));
        }
        let bad_lottery = self.lot_num == 0
            || self.lot_num > MAX_LOT_NUM
            || (self.lot_shape == LotShape::None && self.lot_num != 1);
        if bad_lottery {
            return Err(GambleError::InvalidLottery {
                lot_num: self.lot_num,
                shape: self.lot_shape,
            });
        }
        Ok(())
    }

    pub fn has_lottery(&self) -> bool {
        self.lot_shape != LotShape::None
    }

    /// The lottery branch as `(payoff, conditional probability)` pairs.
    ///
    /// - `Symm`: payoffs `H-(k-1)+2i`, `i = 0..k`, Binomial(k-1, 1/2) weights,
    ///   so the branch mean is exactly `H`.
    /// - `RSkew`: payoffs `H-1+2^i`, `i = 1..=k`, weights `2^-i` renormalized.
    /// - `LSkew`: payoffs `H+1-2^i` with the same weights.
    pub fn lottery(&self) -> Vec<(Money, f64)> {
        let k = self.lot_num as i64;
        match self.lot_shape {
            LotShape::None => vec![(self.high, 1.0)],
            LotShape::Symm => {
                let n = (k - 1) as u32;
                let scale = 0.5f64.powi(n as i32);
                let mut coeff = 1.0f64;
                (0..k)
                    .map(|i| {
                        let payoff = self.high + Money::from_units(2 * i - (k - 1));
                        let w = coeff * scale;
                        coeff = coeff * (n as f64 - i as f64) / (i as f64 + 1.0);
                        (payoff, w)
                    })
                    .collect()
            }
            LotShape::RSkew | LotShape::LSkew => {
                let norm = 1.0 - 0.5f64.powi(k as i32);
                (1..=k)
                    .map(|i| {
                        let step = Money::from_units((1i64 << i) - 1);
                        let payoff = if self.lot_shape == LotShape::RSkew {
                            self.high + step
                        } else {
                            self.high - step
                        };
                        (payoff, 0.5f64.powi(i as i32) / norm)
                    })
                    .collect()
            }
        }
    }

    pub fn expand(&self) -> Result<OutcomeDistribution, GambleError> {
        self.validate()?;
        let mut outcomes: Vec<(Money, f64)> = Vec::with_capacity(self.lot_num as usize + 1);
        if self.p_high > 0.0 {
            outcomes.extend(
                self.lottery()
                    .into_iter()
                    .map(|(x, w)| (x, w * self.p_high))
                    .filter(|(_, p)| *p > 0.0),
            );
        }
        if self.p_high < 1.0 {
            outcomes.push((self.low, 1.0 - self.p_high));
        }
        OutcomeDistribution::new(outcomes)
    }
}

/// A choice between gamble A and gamble B.
///
/// Expanded distributions are computed once at construction.
#[derive(Clone, Debug, PartialEq)]
pub struct Problem {
    id: String,
    gamble_a: Gamble,
    gamble_b: Gamble,
    corr: Correlation,
    amb: bool,
    schema: Schema,
    dist_a: OutcomeDistribution,
    dist_b: OutcomeDistribution,
}

/// Hashable identity of a problem's content (ignores id and schema).
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct ProblemKey {
    a: Vec<(i64, i64)>,
    b: Vec<(i64, i64)>,
    corr: i8,
    amb: bool,
}

impl Problem {
    pub fn new(
        id: impl Into<String>,
        gamble_a: Gamble,
        gamble_b: Gamble,
        corr: Correlation,
        amb: bool,
        schema: Schema,
    ) -> Result<Self, GambleError> {
        if schema == Schema::Cpc15 && (gamble_a.has_lottery() || gamble_a.lot_num != 1) {
            return Err(GambleError::Cpc15LotteryOnA);
        }
        let dist_a = gamble_a.expand()?;
        let dist_b = gamble_b.expand()?;
        Ok(Problem {
            id: id.into(),
            gamble_a,
            gamble_b,
            corr,
            amb,
            schema,
            dist_a,
            dist_b,
        })
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn gamble_a(&self) -> &Gamble {
        &self.gamble_a
    }

    pub fn gamble_b(&self) -> &Gamble {
        &self.gamble_b
    }

    pub fn corr(&self) -> Correlation {
        self.corr
    }

    pub fn amb(&self) -> bool {
        self.amb
    }

    pub fn schema(&self) -> Schema {
        self.schema
    }

    pub fn dist_a(&self) -> &OutcomeDistribution {
        &self.dist_a
    }

    pub fn dist_b(&self) -> &OutcomeDistribution {
        &self.dist_b
    }

    pub fn with_id(mut self, id: impl Into<String>) -> Self {
        self.id = id.into();
        self
    }

    pub fn key(&self) -> ProblemKey {
        ProblemKey {
            a: self.dist_a.canonical_key(),
            b: self.dist_b.canonical_key(),
            corr: self.corr.code(),
            amb: self.amb,
        }
    }

    /// The same problem with A and B exchanged (as a CPC18 problem, since B may
    /// carry a lottery).
    pub fn swapped(&self) -> Problem {
        Problem {
            id: format!("{}-swapped", self.id),
            gamble_a: self.gamble_b.clone(),
            gamble_b: self.gamble_a.clone(),
            corr: self.corr,
            amb: self.amb,
            schema: Schema::Cpc18,
            dist_a: self.dist_b.clone(),
            dist_b: self.dist_a.clone(),
        }
    }

    /// Draws one joint `(payoff_a, payoff_b)` realization.
    ///
    /// Correlation is a quantile coupling: `+1` feeds one uniform quantile to
    /// both inverse CDFs, `-1` feeds `u` and `1 - u`, `0` draws independently.
    pub fn sample_joint<R: Rng + ?Sized>(&self, rng: &mut R) -> (Money, Money) {
        let u: f64 = rng.random();
        let v = match self.corr {
            Correlation::Positive => u,
            Correlation::Negative => 1.0 - u,
            Correlation::Zero => rng.random(),
        };
        (self.dist_a.quantile(u), self.dist_b.quantile(v))
    }

    /// Same distribution for both gambles, or a riskless gamble under forced
    /// correlation.
    pub fn is_degenerate(&self) -> bool {
        if self.dist_a.approx_eq(&self.dist_b) {
            return true;
        }
        let riskless = self.dist_a.is_certain() || self.dist_b.is_certain();
        riskless && self.corr != Correlation::Zero
    }
}
