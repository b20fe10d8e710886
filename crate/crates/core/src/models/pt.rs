//! Prospect theory valuation with the Tversky–Kahneman weighting function.

use serde::{Deserialize, Serialize};

use crate::gamble::{OutcomeDistribution, Problem};

use super::choice_rate;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PtParams {
    /// Curvature for gains.
    pub alpha: f64,
    /// Curvature for losses.
    pub beta: f64,
    /// Loss aversion.
    pub lambda: f64,
    /// Probability weighting exponent.
    pub gamma: f64,
}

impl Default for PtParams {
    /// The 1992 cumulative prospect theory estimates.
    fn default() -> Self {
        PtParams {
            alpha: 0.88,
            beta: 0.88,
            lambda: 2.25,
            gamma: 0.61,
        }
    }
}

impl PtParams {
    pub const IDENTITY: PtParams = PtParams {
        alpha: 1.0,
        beta: 1.0,
        lambda: 1.0,
        gamma: 1.0,
    };

    pub fn validate(&self) -> Result<(), String> {
        let all = [self.alpha, self.beta, self.lambda, self.gamma];
        if all.iter().all(|v| v.is_finite() && *v > 0.0) {
            Ok(())
        } else {
            Err(format!("prospect theory parameters must be positive: {self:?}"))
        }
    }

    pub fn value(&self, x: f64) -> f64 {
        if x >= 0.0 {
            x.powf(self.alpha)
        } else {
            -self.lambda * (-x).powf(self.beta)
        }
    }

    pub fn weight(&self, p: f64) -> f64 {
        if self.gamma == 1.0 {
            return p;
        }
        let pg = p.powf(self.gamma);
        pg / (pg + (1.0 - p).powf(self.gamma)).powf(1.0 / self.gamma)
    }
}

/// `V = sum_i w(p_i) v(x_i)`.
pub fn pt_value(d: &OutcomeDistribution, params: &PtParams) -> f64 {
    d.outcomes()
        .iter()
        .map(|o| params.weight(o.probability) * params.value(o.payoff.as_f64()))
        .sum()
}

/// Logistic choice on the prospect-theory value difference.
pub fn pt_rate(p: &Problem, params: &PtParams, temperature: f64) -> f64 {
    choice_rate(
        pt_value(p.dist_a(), params) - pt_value(p.dist_b(), params),
        temperature,
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::money::Money;

    fn dist(pairs: &[(i64, f64)]) -> OutcomeDistribution {
        OutcomeDistribution::new(pairs.iter().map(|&(x, p)| (Money::from_units(x), p))).unwrap()
    }

    #[test]
    fn sure_zero_is_worth_zero() {
        for params in [PtParams::default(), PtParams::IDENTITY] {
            assert_eq!(pt_value(&dist(&[(0, 1.0)]), &params), 0.0);
        }
    }

    #[test]
    fn identity_params_reduce_to_expected_value() {
        let d = dist(&[(20, 0.25), (4, 0.5), (-7, 0.25)]);
        assert!((pt_value(&d, &PtParams::IDENTITY) - d.expected_value()).abs() < 1e-12);
    }

    #[test]
    fn loss_aversion_makes_fair_coin_negative() {
        let d = dist(&[(100, 0.5), (-100, 0.5)]);
        let v = pt_value(&d, &PtParams::default());
        // Direct evaluation: w(.5) * 100^.88 * (1 - 2.25).
        let w = PtParams::default().weight(0.5);
        let expected = w * 100f64.powf(0.88) * (1.0 - 2.25);
        assert!((v - expected).abs() < 1e-9);
        assert!(v < 0.0);
    }
}
