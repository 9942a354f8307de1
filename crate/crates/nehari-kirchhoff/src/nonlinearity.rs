//! Homogeneous model nonlinearity `f(x,u) = w(x) |u|^{q-2} u` with primitive
//! `F(x,u) = w(x) |u|^q / q`, so that the Euler identity `q F = u f` holds
//! exactly and `|F| <= gamma |u|^q` with `gamma = sup|w| + 1`.

use crate::problem::{ValidatedConfig, WeightSpec};

#[derive(Debug, Clone, PartialEq)]
pub struct NonlinearitySpec {
    pub q: f64,
    pub w_weight: WeightSpec,
    pub gamma: f64,
    domain: (f64, f64),
}

impl NonlinearitySpec {
    pub fn from_config(cfg: &ValidatedConfig) -> Self {
        NonlinearitySpec {
            q: cfg.q,
            w_weight: cfg.w_weight.clone(),
            gamma: cfg.gamma,
            domain: cfg.domain,
        }
    }

    #[inline]
    pub fn w(&self, x: f64) -> f64 {
        self.w_weight.eval(x, self.domain.0, self.domain.1)
    }

    /// f(x, u) = w(x) |u|^{q-2} u.
    #[inline]
    pub fn f_eval(&self, x: f64, u: f64) -> f64 {
        if u == 0.0 {
            return 0.0;
        }
        self.w(x) * u.abs().powf(self.q - 2.0) * u
    }

    /// F(x, u) = w(x) |u|^q / q.
    #[inline]
    pub fn f_primitive(&self, x: f64, u: f64) -> f64 {
        if u == 0.0 {
            return 0.0;
        }
        self.w(x) * u.abs().powf(self.q) / self.q
    }
}
