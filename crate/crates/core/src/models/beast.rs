//! Monte-Carlo BEAST (Best Estimate And Sampling Tools).
//!
//! Each virtual agent prefers A iff
//! `(BEV_A - BEV_B) + (ST_A - ST_B) + e > 0`, where `BEV` is the expected
//! value, `ST` is the mean of `kappa` mental samples each produced by one
//! sampling tool, and `e ~ N(0, sigma)`. The choice rate is the fraction of
//! agents preferring A.
//!
//! Tools:
//! - `Unbiased` draws from the described distribution, or in feedback blocks
//!   (with probability `feedback_reliance[block]`) from the agent's simulated
//!   experience.
//! - `Uniform` treats every distinct outcome as equally likely.
//! - `Pessimism` takes each gamble's worst outcome.
//! - `Sign` is an unbiased draw reduced to `scale * sign(payoff)`.
//!
//! All quantile-based draws use one uniform shared across both gambles, so
//! agents compare outcomes at the same luck level; this is what makes the
//! tools sensitive to regret.

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::gamble::{Dominance, OutcomeDistribution, Problem};

use super::{BlockRate, BlockSpec, Prediction};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Tool {
    Unbiased,
    Uniform,
    Pessimism,
    Sign,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum BeastVariant {
    Beast15,
    /// Subjective-dominance variant; always applies `dominance_forced`.
    Beast18,
}

impl std::str::FromStr for BeastVariant {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "beast15" => Ok(BeastVariant::Beast15),
            "beast18" => Ok(BeastVariant::Beast18),
            other => Err(format!("unknown BEAST variant `{other}`")),
        }
    }
}

/// Calibrated noise scale; see `default_sigma_calibration` in the tests.
pub const DEFAULT_SIGMA: f64 = 7.5;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BeastParams {
    pub n_agents: u32,
    /// Standard deviation of the error term, in money units.
    pub sigma: f64,
    /// Each agent takes `kappa ~ Uniform{1..=kappa_max}` mental samples.
    pub kappa_max: u32,
    /// Probabilities of Unbiased, Uniform, Pessimism, Sign.
    pub tool_weights: [f64; 4],
    /// Per-block probability (block 1 first) that the unbiased tool samples
    /// from experience; the last entry covers later blocks.
    pub feedback_reliance: Vec<f64>,
    pub payoff_sign_scale: f64,
    pub dominance_forced: bool,
    /// Trials observed per block when building an agent's experience.
    pub trials_per_block: u32,
}

impl Default for BeastParams {
    fn default() -> Self {
        BeastParams {
            n_agents: 4000,
            sigma: DEFAULT_SIGMA,
            kappa_max: 3,
            tool_weights: [0.25; 4],
            feedback_reliance: vec![0.2, 0.6],
            payoff_sign_scale: 10.0,
            dominance_forced: false,
            trials_per_block: 5,
        }
    }
}

impl BeastParams {
    pub fn validate(&self) -> Result<(), String> {
        if self.n_agents == 0 {
            return Err("n_agents must be at least 1".into());
        }
        if !(self.sigma >= 0.0) {
            return Err("sigma must be non-negative".into());
        }
        if self.kappa_max == 0 {
            return Err("kappa_max must be at least 1".into());
        }
        if self.tool_weights.iter().any(|w| !(*w >= 0.0))
            || (self.tool_weights.iter().sum::<f64>() - 1.0).abs() > 1e-9
        {
            return Err("tool_weights must be non-negative and sum to 1".into());
        }
        if self.feedback_reliance.is_empty()
            || self.feedback_reliance.iter().any(|r| !(0.0..=1.0).contains(r))
        {
            return Err("feedback_reliance must be a non-empty list of probabilities".into());
        }
        if self.trials_per_block == 0 {
            return Err("trials_per_block must be at least 1".into());
        }
        Ok(())
    }

    fn reliance(&self, block: u32) -> f64 {
        let idx = (block.max(1) - 1) as usize;
        *self
            .feedback_reliance
            .get(idx)
            .or(self.feedback_reliance.last())
            .unwrap_or(&0.0)
    }
}

/// Flattened distribution for the inner loop.
#[derive(Clone, Debug)]
struct Table {
    payoffs: Vec<f64>,
    cum: Vec<f64>,
    mean: f64,
}

impl Table {
    fn from_dist(d: &OutcomeDistribution) -> Self {
        Table::from_pairs(d.outcomes().iter().map(|o| (o.payoff.as_f64(), o.probability)))
    }

    fn from_pairs(pairs: impl Iterator<Item = (f64, f64)>) -> Self {
        let mut payoffs = Vec::new();
        let mut cum = Vec::new();
        let (mut c, mut mean) = (0.0, 0.0);
        for (x, p) in pairs {
            c += p;
            mean += x * p;
            payoffs.push(x);
            cum.push(c);
        }
        Table { payoffs, cum, mean }
    }

    /// Ambiguity estimate: half weight spread uniformly over the distinct
    /// outcomes, half on the worst outcome.
    fn ambiguous_estimate(d: &OutcomeDistribution) -> Self {
        let n = d.len() as f64;
        Table::from_pairs(d.outcomes().iter().enumerate().map(|(i, o)| {
            let p = 0.5 / n + if i == 0 { 0.5 } else { 0.0 };
            (o.payoff.as_f64(), p)
        }))
    }

    #[inline]
    fn quantile(&self, u: f64) -> f64 {
        for (x, c) in self.payoffs.iter().zip(&self.cum) {
            if u < *c {
                return *x;
            }
        }
        self.payoffs[self.payoffs.len() - 1]
    }

    #[inline]
    fn uniform_pick(&self, u: f64) -> f64 {
        let n = self.payoffs.len();
        self.payoffs[((u * n as f64) as usize).min(n - 1)]
    }

    fn worst(&self) -> f64 {
        self.payoffs[0]
    }
}

struct Prepared {
    a: Table,
    b: Table,
    /// What an agent believes about B when it is ambiguous and unobserved.
    b_described: Table,
    amb: bool,
    corr: crate::gamble::Correlation,
    dominance: Dominance,
}

impl Prepared {
    fn new(p: &Problem) -> Self {
        let b = Table::from_dist(p.dist_b());
        Prepared {
            a: Table::from_dist(p.dist_a()),
            b_described: if p.amb() {
                Table::ambiguous_estimate(p.dist_b())
            } else {
                b.clone()
            },
            b,
            amb: p.amb(),
            corr: p.corr(),
            dominance: p.dist_a().dominance(p.dist_b()),
        }
    }

    #[inline]
    fn joint<R: Rng + ?Sized>(&self, rng: &mut R) -> (f64, f64) {
        use crate::gamble::Correlation::*;
        let u: f64 = rng.random();
        let v = match self.corr {
            Positive => u,
            Negative => 1.0 - u,
            Zero => rng.random(),
        };
        (self.a.quantile(u), self.b.quantile(v))
    }
}

/// Simulates one block; returns the fraction of agents preferring A.
fn simulate_block<R: Rng + ?Sized>(
    prep: &Prepared,
    params: &BeastParams,
    block: BlockSpec,
    rng: &mut R,
    history: &mut Vec<(f64, f64)>,
) -> f64 {
    let w = &params.tool_weights;
    let cuts = [w[0], w[0] + w[1], w[0] + w[1] + w[2]];
    let reliance = if block.feedback {
        params.reliance(block.block)
    } else {
        0.0
    };
    let needs_history = block.feedback && (prep.amb || reliance > 0.0);
    let history_len = (params.trials_per_block * block.block.max(1)) as usize;

    let mut chose_a = 0u64;
    for _ in 0..params.n_agents {
        history.clear();
        if needs_history {
            history.extend((0..history_len).map(|_| prep.joint(rng)));
        }
        let bev_b = if prep.amb {
            if block.feedback {
                history.iter().map(|h| h.1).sum::<f64>() / history.len() as f64
            } else {
                prep.b_described.mean
            }
        } else {
            prep.b.mean
        };
        let bev = prep.a.mean - bev_b;

        let kappa = rng.random_range(1..=params.kappa_max);
        let mut st = 0.0;
        for _ in 0..kappa {
            let t: f64 = rng.random();
            let u: f64 = rng.random();
            let tool = if t < cuts[0] {
                Tool::Unbiased
            } else if t < cuts[1] {
                Tool::Uniform
            } else if t < cuts[2] {
                Tool::Pessimism
            } else {
                Tool::Sign
            };
            let (xa, xb) = match tool {
                Tool::Uniform => (prep.a.uniform_pick(u), prep.b.uniform_pick(u)),
                Tool::Pessimism => (prep.a.worst(), prep.b.worst()),
                Tool::Unbiased | Tool::Sign => {
                    let from_experience = needs_history
                        && (prep.amb || (reliance > 0.0 && rng.random::<f64>() < reliance));
                    let (xa, xb) = if from_experience {
                        history[((u * history.len() as f64) as usize).min(history.len() - 1)]
                    } else {
                        (prep.a.quantile(u), prep.b_described.quantile(u))
                    };
                    if tool == Tool::Sign {
                        let s = params.payoff_sign_scale;
                        (s * sign(xa), s * sign(xb))
                    } else {
                        (xa, xb)
                    }
                }
            };
            st += xa - xb;
        }
        st /= f64::from(kappa);

        let e: f64 = if params.sigma > 0.0 {
            params.sigma * { let z: f64 = rng.sample(StandardNormal); z }
        } else {
            0.0
        };
        let total = bev + st + e;
        let prefers_a = if total > 0.0 {
            true
        } else if total < 0.0 {
            false
        } else {
            rng.random::<bool>()
        };
        chose_a += u64::from(prefers_a);
    }
    chose_a as f64 / f64::from(params.n_agents)
}

fn sign(x: f64) -> f64 {
    if x > 0.0 {
        1.0
    } else if x < 0.0 {
        -1.0
    } else {
        0.0
    }
}

/// Simulated choice-A rates for each requested block.
pub fn beast_rate<R: Rng + ?Sized>(
    p: &Problem,
    variant: BeastVariant,
    params: &BeastParams,
    blocks: &[BlockSpec],
    rng: &mut R,
) -> Prediction {
    let prep = Prepared::new(p);
    let forced = params.dominance_forced || variant == BeastVariant::Beast18;
    let forced_rate = if forced && !prep.amb {
        match prep.dominance {
            Dominance::First => Some(1.0),
            Dominance::Second => Some(0.0),
            Dominance::Equal | Dominance::Neither => None,
        }
    } else {
        None
    };
    let mut history = Vec::new();
    let blocks = blocks
        .iter()
        .map(|&b| BlockRate {
            block: b.block,
            feedback: b.feedback,
            a_rate: forced_rate
                .unwrap_or_else(|| simulate_block(&prep, params, b, rng, &mut history)),
        })
        .collect();
    Prediction {
        problem_id: p.id().to_string(),
        blocks,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gamble::{Correlation, Gamble, Schema};
    use crate::money::Money;
    use crate::seed::rng_from_seed;

    fn m(x: i64) -> Money {
        Money::from_units(x)
    }

    fn problem(a: Gamble, b: Gamble) -> Problem {
        Problem::new("t", a, b, Correlation::Zero, false, Schema::Cpc18).unwrap()
    }

    fn intro() -> Problem {
        problem(
            Gamble::simple(m(100), 0.5, m(-100)).unwrap(),
            Gamble::sure(Money::ZERO),
        )
    }

    fn rate(p: &Problem, params: &BeastParams, seed: u64) -> f64 {
        let pred = beast_rate(
            p,
            BeastVariant::Beast15,
            params,
            &[BlockSpec::new(1, false)],
            &mut rng_from_seed(seed),
        );
        pred.blocks[0].a_rate
    }

    #[test]
    fn default_sigma_calibration() {
        // The frozen sigma must put the risky +-100 coin in [0.30, 0.45] and
        // keep a sure 10-vs-0 choice at or above 0.95.
        let params = BeastParams {
            n_agents: 20_000,
            ..BeastParams::default()
        };
        let r = rate(&intro(), &params, 1);
        assert!((0.30..=0.45).contains(&r), "intro rate {r}");
        let dominant = problem(Gamble::sure(m(10)), Gamble::sure(Money::ZERO));
        let r = rate(&dominant, &params, 2);
        assert!(r >= 0.95, "dominant rate {r}");
    }

    #[test]
    fn identical_gambles_are_a_coin_flip() {
        let g = Gamble::new(m(20), 0.4, m(-5), 3, crate::gamble::LotShape::Symm).unwrap();
        let p = problem(g.clone(), g);
        let params = BeastParams::default();
        let r = rate(&p, &params, 3);
        let se = (0.25 / f64::from(params.n_agents)).sqrt();
        assert!((r - 0.5).abs() <= 3.0 * se, "rate {r}");
    }

    #[test]
    fn zero_noise_ties_are_broken_at_random() {
        let g = Gamble::sure(m(4));
        let p = problem(g.clone(), g);
        let params = BeastParams {
            sigma: 0.0,
            ..BeastParams::default()
        };
        let r = rate(&p, &params, 4);
        assert!((r - 0.5).abs() < 0.03, "rate {r}");
    }

    #[test]
    fn dominance_forcing() {
        let p = problem(Gamble::sure(m(10)), Gamble::sure(Money::ZERO));
        let pred = beast_rate(
            &p,
            BeastVariant::Beast18,
            &BeastParams::default(),
            &BlockSpec::two_block(),
            &mut rng_from_seed(0),
        );
        assert!(pred.blocks.iter().all(|b| b.a_rate == 1.0));
        let swapped = p.swapped();
        let pred = beast_rate(
            &swapped,
            BeastVariant::Beast15,
            &BeastParams {
                dominance_forced: true,
                ..BeastParams::default()
            },
            &BlockSpec::two_block(),
            &mut rng_from_seed(0),
        );
        assert!(pred.blocks.iter().all(|b| b.a_rate == 0.0));
    }

    #[test]
    fn huge_noise_drives_rates_to_half() {
        let p = problem(Gamble::sure(m(10)), Gamble::sure(Money::ZERO));
        let params = BeastParams {
            sigma: 1e7,
            ..BeastParams::default()
        };
        let r = rate(&p, &params, 5);
        assert!((r - 0.5).abs() < 0.03, "rate {r}");
    }

    #[test]
    fn ambiguity_and_feedback_paths_stay_in_range() {
        let a = Gamble::simple(m(30), 0.3, m(2)).unwrap();
        let b = Gamble::new(m(20), 0.6, m(-10), 5, crate::gamble::LotShape::RSkew).unwrap();
        let p = Problem::new("amb", a, b, Correlation::Negative, true, Schema::Cpc18).unwrap();
        let pred = beast_rate(
            &p,
            BeastVariant::Beast15,
            &BeastParams::default(),
            &BlockSpec::cpc_five_block(),
            &mut rng_from_seed(6),
        );
        assert_eq!(pred.blocks.len(), 5);
        assert!(pred.blocks.iter().all(|b| (0.0..=1.0).contains(&b.a_rate)));
    }

    #[test]
    fn param_validation() {
        let mut p = BeastParams::default();
        p.tool_weights = [0.5, 0.5, 0.5, 0.0];
        assert!(p.validate().is_err());
        let mut p = BeastParams::default();
        p.n_agents = 0;
        assert!(p.validate().is_err());
        assert!(BeastParams::default().validate().is_ok());
    }
}
