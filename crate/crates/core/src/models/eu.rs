use crate::gamble::Problem;

use super::choice_rate;

/// Expected-value chooser with a logistic choice rule (identity utility).
pub fn eu_rate(p: &Problem, temperature: f64) -> f64 {
    choice_rate(p.dist_a().expected_value() - p.dist_b().expected_value(), temperature)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gamble::{Correlation, Gamble, OutcomeDistribution, Problem, Schema};
    use crate::money::Money;

    fn pair(a: Gamble, b: Gamble) -> Problem {
        Problem::new("t", a, b, Correlation::Zero, false, Schema::Cpc18).unwrap()
    }

    #[test]
    fn equal_expected_values_split_evenly() {
        let p = pair(
            Gamble::simple(Money::from_units(100), 0.5, Money::from_units(-100)).unwrap(),
            Gamble::sure(Money::ZERO),
        );
        for t in [0.0, 0.1, 1.0, 50.0] {
            assert_eq!(eu_rate(&p, t), 0.5);
        }
    }

    #[test]
    fn dominant_sure_thing() {
        let p = pair(Gamble::sure(Money::from_units(10)), Gamble::sure(Money::ZERO));
        assert_eq!(eu_rate(&p, 0.0), 1.0);
        assert!(eu_rate(&p, 1e-3) > 0.999_999);
    }

    #[test]
    fn tie_at_ev_eight() {
        // B = {(20, .25), (4, .75)} as H=20, pH=.25, L=4.
        let b = Gamble::simple(Money::from_units(20), 0.25, Money::from_units(4)).unwrap();
        let expected = OutcomeDistribution::new(vec![
            (Money::from_units(20), 0.25),
            (Money::from_units(4), 0.75),
        ])
        .unwrap();
        assert_eq!(b.expand().unwrap(), expected);
        let p = pair(Gamble::sure(Money::from_units(8)), b);
        assert_eq!(eu_rate(&p, 0.0), 0.5);
    }
}
