use serde::{Deserialize, Serialize};

/// Per-unit S-shaped rectified linear activation.
///
/// ```text
/// y = t_right + a_right (x - t_right)   x >= t_right
/// y = x                                 t_left < x < t_right
/// y = t_left + a_left (x - t_left)      x <= t_left
/// ```
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Srelu {
    pub t_left: f64,
    pub a_left: f64,
    pub t_right: f64,
    pub a_right: f64,
}

/// Partial derivatives of one SReLU evaluation.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct SreluGrad {
    pub dx: f64,
    /// With respect to `[t_left, a_left, t_right, a_right]`.
    pub dparams: [f64; 4],
}

impl Default for Srelu {
    /// ReLU-like start with the right segment pushed out of reach.
    fn default() -> Self {
        Srelu {
            t_left: 0.0,
            a_left: 0.0,
            t_right: 1e3,
            a_right: 1.0,
        }
    }
}

impl Srelu {
    #[inline]
    pub fn apply(&self, x: f64) -> f64 {
        if x >= self.t_right {
            self.t_right + self.a_right * (x - self.t_right)
        } else if x > self.t_left {
            x
        } else {
            self.t_left + self.a_left * (x - self.t_left)
        }
    }

    #[inline]
    pub fn grad(&self, x: f64) -> SreluGrad {
        if x >= self.t_right {
            SreluGrad {
                dx: self.a_right,
                dparams: [0.0, 0.0, 1.0 - self.a_right, x - self.t_right],
            }
        } else if x > self.t_left {
            SreluGrad {
                dx: 1.0,
                dparams: [0.0; 4],
            }
        } else {
            SreluGrad {
                dx: self.a_left,
                dparams: [1.0 - self.a_left, x - self.t_left, 0.0, 0.0],
            }
        }
    }

    pub fn to_array(self) -> [f64; 4] {
        [self.t_left, self.a_left, self.t_right, self.a_right]
    }

    pub fn from_array(a: [f64; 4]) -> Self {
        Srelu {
            t_left: a[0],
            a_left: a[1],
            t_right: a[2],
            a_right: a[3],
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const UNIT: Srelu = Srelu {
        t_left: -0.5,
        a_left: 0.2,
        t_right: 0.8,
        a_right: 1.7,
    };

    #[test]
    fn identity_between_thresholds() {
        for x in [-0.4, 0.0, 0.3, 0.79] {
            assert_eq!(UNIT.apply(x), x);
        }
    }

    #[test]
    fn relu_specialization() {
        let relu = Srelu::default();
        assert_eq!(relu.apply(-5.0), 0.0);
        assert_eq!(relu.apply(2.5), 2.5);
    }

    #[test]
    fn gradients_match_central_differences() {
        let h = 1e-6;
        for x in [-2.0, -0.9, -0.1, 0.4, 1.3, 3.0] {
            let g = UNIT.grad(x);
            let num_dx = (UNIT.apply(x + h) - UNIT.apply(x - h)) / (2.0 * h);
            assert_rel(g.dx, num_dx);
            for k in 0..4 {
                let mut plus = UNIT.to_array();
                let mut minus = UNIT.to_array();
                plus[k] += h;
                minus[k] -= h;
                let num = (Srelu::from_array(plus).apply(x) - Srelu::from_array(minus).apply(x))
                    / (2.0 * h);
                assert_rel(g.dparams[k], num);
            }
        }
    }

    fn assert_rel(analytic: f64, numeric: f64) {
        let scale = analytic.abs().max(numeric.abs());
        if scale < 1e-9 {
            return;
        }
        assert!(
            (analytic - numeric).abs() / scale < 1e-6,
            "analytic {analytic} vs numeric {numeric}"
        );
    }
}
