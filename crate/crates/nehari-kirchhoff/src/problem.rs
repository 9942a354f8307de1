//! Problem configuration: scalar parameters, domain, weights, validation.
//!
//! Configurations are ingested from a plain-text file with one `key = value`
//! per line (`#` starts a comment, arrays are comma-separated literals) and
//! validated into a [`ValidatedConfig`] that carries the derived exponents
//! `p*_s = np/(n - ps)` and `p' = p/(p-1)` together with `|Omega|` and the
//! growth constant `gamma = sup|w| + 1`.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::mesh::Mesh1d;
use crate::quadrature::{DiagonalTreatment, QuadratureScheme};
use crate::{Error, Result};

/// Sampled weight: either a named analytic preset or inline nodal values
/// (interpreted piecewise-linearly on whatever mesh the run uses).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum WeightSpec {
    /// Constant value.
    Const(f64),
    /// Smooth compact bump `amp * max(0, 1 - ((x-center)/width)^2)^2`.
    Bump { amp: f64, center: f64, width: f64 },
    /// Sign flip: `amp` for `x <= split`, `-amp` for `x > split`.
    SignFlip { amp: f64, split: f64 },
    /// Inline nodal samples over the domain (uniform, endpoints included).
    Nodal(Vec<f64>),
}

impl WeightSpec {
    /// Evaluate at a point of the domain `[lo, hi]`.
    pub fn eval(&self, x: f64, lo: f64, hi: f64) -> f64 {
        match self {
            WeightSpec::Const(v) => *v,
            WeightSpec::Bump { amp, center, width } => {
                let r = (x - center) / width;
                let b = (1.0 - r * r).max(0.0);
                amp * b * b
            }
            WeightSpec::SignFlip { amp, split } => {
                if x <= *split {
                    *amp
                } else {
                    -*amp
                }
            }
            WeightSpec::Nodal(vals) => {
                if vals.is_empty() {
                    return 0.0;
                }
                if vals.len() < 2 || x <= lo {
                    return vals[0];
                }
                if x >= hi {
                    return vals[vals.len() - 1];
                }
                let h = (hi - lo) / (vals.len() - 1) as f64;
                let cell = (((x - lo) / h) as usize).min(vals.len() - 2);
                let t = (x - (lo + h * cell as f64)) / h;
                vals[cell] * (1.0 - t) + vals[cell + 1] * t
            }
        }
    }

    /// Supremum of |w| over the domain.
    pub fn sup_abs(&self) -> f64 {
        match self {
            WeightSpec::Const(v) => v.abs(),
            WeightSpec::Bump { amp, .. } => amp.abs(),
            WeightSpec::SignFlip { amp, .. } => amp.abs(),
            WeightSpec::Nodal(vals) => vals.iter().fold(0.0, |m, v| m.max(v.abs())),
        }
    }

    /// Infimum over the domain (exact for presets, nodal minimum otherwise).
    pub fn min_value(&self) -> f64 {
        match self {
            WeightSpec::Const(v) => *v,
            WeightSpec::Bump { amp, .. } => amp.min(0.0),
            WeightSpec::SignFlip { amp, .. } => -amp.abs(),
            WeightSpec::Nodal(vals) => vals.iter().fold(f64::INFINITY, |m, &v| m.min(v)),
        }
    }
}

/// All scalar parameters of the problem plus domain and weights.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProblemConfig {
    /// Spatial dimension (only 1 is supported by the quadrature backend).
    pub n: usize,
    pub p: f64,
    /// Fractional order in (0, 1).
    pub s: f64,
    /// Singular exponent in (0, 1).
    pub alpha: f64,
    /// Kirchhoff exponent, > 1.
    pub theta: f64,
    pub a: f64,
    pub b: f64,
    pub lambda: f64,
    /// Nonlinearity order, p*theta < q <= p*_s.
    pub q: f64,
    /// Interval bounds of Omega.
    pub domain: (f64, f64),
    /// Nonnegative singular weight c(x).
    pub c_weight: WeightSpec,
    /// Sign-changing nonlinearity weight w(x).
    pub w_weight: WeightSpec,
    pub quad: QuadratureScheme,
    /// Force the L^infinity norm of c in every threshold display instead of
    /// the display's own stated norm.
    pub harmonize_norms: bool,
}

impl Default for ProblemConfig {
    fn default() -> Self {
        ProblemConfig {
            n: 1,
            p: 2.0,
            s: 0.4,
            alpha: 0.5,
            theta: 1.5,
            a: 1.0,
            b: 1.0,
            lambda: 0.1,
            q: 4.0,
            domain: (-1.0, 1.0),
            c_weight: WeightSpec::Const(1.0),
            w_weight: WeightSpec::Const(1.0),
            quad: QuadratureScheme::default(),
            harmonize_norms: false,
        }
    }
}

/// A validated configuration with derived quantities attached.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidatedConfig {
    cfg: ProblemConfig,
    /// Critical Sobolev exponent n p / (n - p s).
    pub p_star: f64,
    /// Conjugate exponent p / (p - 1).
    pub p_prime: f64,
    /// |Omega|.
    pub omega_measure: f64,
    /// Growth constant, sup|w| + 1.
    pub gamma: f64,
}

impl std::ops::Deref for ValidatedConfig {
    type Target = ProblemConfig;
    fn deref(&self) -> &ProblemConfig {
        &self.cfg
    }
}

impl ValidatedConfig {
    pub fn into_inner(self) -> ProblemConfig {
        self.cfg
    }

    /// c(x) at a point of the domain.
    pub fn c_at(&self, x: f64) -> f64 {
        self.cfg
            .c_weight
            .eval(x, self.cfg.domain.0, self.cfg.domain.1)
    }

    /// w(x) at a point of the domain.
    pub fn w_at(&self, x: f64) -> f64 {
        self.cfg
            .w_weight
            .eval(x, self.cfg.domain.0, self.cfg.domain.1)
    }

    /// Revalidate with a different lambda.
    pub fn with_lambda(&self, lambda: f64) -> Result<ValidatedConfig> {
        let mut cfg = self.cfg.clone();
        cfg.lambda = lambda;
        validate_config(cfg)
    }

    /// Revalidate with different (q, b), used to switch to the critical case.
    pub fn with_q_b(&self, q: f64, b: f64) -> Result<ValidatedConfig> {
        let mut cfg = self.cfg.clone();
        cfg.q = q;
        cfg.b = b;
        validate_config(cfg)
    }

    /// Whether q sits at the critical exponent.
    pub fn is_critical(&self) -> bool {
        (self.q - self.p_star).abs() <= 1e-9 * self.p_star
    }

    pub fn default_mesh(&self, n_nodes: usize) -> Mesh1d {
        Mesh1d::new(self.domain.0, self.domain.1, n_nodes)
    }
}

/// Check every hypothesis on the parameters and attach derived quantities.
pub fn validate_config(cfg: ProblemConfig) -> Result<ValidatedConfig> {
    if cfg.n != 1 {
        return Err(Error::DimensionViolated(format!(
            "only n = 1 is supported by the quadrature backend, got n = {}",
            cfg.n
        )));
    }
    let n = cfg.n as f64;
    if cfg.p <= 1.0 {
        return Err(Error::ExponentChainViolated(format!(
            "need p > 1, got p = {}",
            cfg.p
        )));
    }
    if !(cfg.s > 0.0 && cfg.s < 1.0) {
        return Err(Error::ExponentChainViolated(format!(
            "need s in (0,1), got s = {}",
            cfg.s
        )));
    }
    if !(cfg.alpha > 0.0 && cfg.alpha < 1.0) {
        return Err(Error::ExponentChainViolated(format!(
            "need alpha in (0,1), got alpha = {}",
            cfg.alpha
        )));
    }
    if cfg.theta <= 1.0 {
        return Err(Error::ExponentChainViolated(format!(
            "need theta > 1, got theta = {}",
            cfg.theta
        )));
    }
    if cfg.a <= 0.0 || cfg.b <= 0.0 {
        return Err(Error::ExponentChainViolated(format!(
            "need a > 0 and b > 0, got a = {}, b = {}",
            cfg.a, cfg.b
        )));
    }
    if cfg.lambda <= 0.0 {
        return Err(Error::ExponentChainViolated(format!(
            "need lambda > 0, got lambda = {}",
            cfg.lambda
        )));
    }
    if n <= cfg.p * cfg.s {
        return Err(Error::DimensionViolated(format!(
            "need n > p*s, got n = {n}, p*s = {}",
            cfg.p * cfg.s
        )));
    }
    let p_star = n * cfg.p / (n - cfg.p * cfg.s);
    let ptheta = cfg.p * cfg.theta;
    if !(cfg.q > ptheta) {
        return Err(Error::ExponentChainViolated(format!(
            "need q > p*theta, got q = {}, p*theta = {ptheta}",
            cfg.q
        )));
    }
    if cfg.q > p_star + 1e-12 * p_star {
        return Err(Error::ExponentChainViolated(format!(
            "need q <= p*_s, got q = {}, p*_s = {p_star}",
            cfg.q
        )));
    }
    if cfg.domain.1 <= cfg.domain.0 {
        return Err(Error::ConfigParse(format!(
            "empty domain ({}, {})",
            cfg.domain.0, cfg.domain.1
        )));
    }
    let c_min = cfg.c_weight.min_value();
    if c_min < 0.0 {
        return Err(Error::NegativeWeight(format!(
            "c(x) must be nonnegative, minimum sample is {c_min}"
        )));
    }
    if cfg.quad.gauss_points_per_cell < 1 {
        return Err(Error::ConfigParse("quad.gauss must be >= 1".into()));
    }
    let p_prime = cfg.p / (cfg.p - 1.0);
    let omega_measure = cfg.domain.1 - cfg.domain.0;
    let gamma = cfg.w_weight.sup_abs() + 1.0;
    Ok(ValidatedConfig {
        cfg,
        p_star,
        p_prime,
        omega_measure,
        gamma,
    })
}

fn parse_f64(key: &str, v: &str) -> Result<f64> {
    v.trim()
        .parse::<f64>()
        .map_err(|_| Error::ConfigParse(format!("key `{key}`: cannot parse `{v}` as a number")))
}

fn parse_weight(key: &str, v: &str) -> Result<WeightSpec> {
    let mut parts = v.split_whitespace();
    let kind = parts
        .next()
        .ok_or_else(|| Error::ConfigParse(format!("key `{key}`: empty weight spec")))?;
    let rest: Vec<&str> = parts.collect();
    let nums = |expect: usize| -> Result<Vec<f64>> {
        // preset parameters may be space- or comma-separated
        let joined = rest.join(" ");
        let vals: Vec<f64> = joined
            .split(|c: char| c == ',' || c.is_whitespace())
            .filter(|t| !t.is_empty())
            .map(|t| parse_f64(key, t))
            .collect::<Result<_>>()?;
        if vals.len() != expect {
            return Err(Error::ConfigParse(format!(
                "key `{key}`: `{kind}` takes {expect} parameter(s), got {}",
                vals.len()
            )));
        }
        Ok(vals)
    };
    match kind {
        "const" => {
            let v = nums(1)?;
            Ok(WeightSpec::Const(v[0]))
        }
        "bump" => {
            let v = nums(3)?;
            Ok(WeightSpec::Bump {
                amp: v[0],
                center: v[1],
                width: v[2],
            })
        }
        "signflip" => {
            let v = nums(2)?;
            Ok(WeightSpec::SignFlip {
                amp: v[0],
                split: v[1],
            })
        }
        "nodal" => {
            let joined = rest.join(" ");
            let vals: Vec<f64> = joined
                .split(|c: char| c == ',' || c.is_whitespace())
                .filter(|t| !t.is_empty())
                .map(|t| parse_f64(key, t))
                .collect::<Result<_>>()?;
            if vals.len() < 2 {
                return Err(Error::ConfigParse(format!(
                    "key `{key}`: nodal weight needs at least 2 samples"
                )));
            }
            Ok(WeightSpec::Nodal(vals))
        }
        other => Err(Error::ConfigParse(format!(
            "key `{key}`: unknown weight preset `{other}` (expected const|bump|signflip|nodal)"
        ))),
    }
}

/// Parse the plain-text `key = value` config format and validate.
pub fn parse_config(text: &str) -> Result<ValidatedConfig> {
    let mut map: BTreeMap<String, String> = BTreeMap::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = match raw.find('#') {
            Some(i) => &raw[..i],
            None => raw,
        }
        .trim();
        if line.is_empty() {
            continue;
        }
        let Some((k, v)) = line.split_once('=') else {
            return Err(Error::ConfigParse(format!(
                "line {}: expected `key = value`, got `{line}`",
                lineno + 1
            )));
        };
        map.insert(k.trim().to_string(), v.trim().to_string());
    }

    let mut cfg = ProblemConfig::default();
    for (k, v) in &map {
        match k.as_str() {
            "n" => {
                cfg.n = v.parse::<usize>().map_err(|_| {
                    Error::ConfigParse(format!("key `n`: cannot parse `{v}` as an integer"))
                })?
            }
            "p" => cfg.p = parse_f64(k, v)?,
            "s" => cfg.s = parse_f64(k, v)?,
            "alpha" => cfg.alpha = parse_f64(k, v)?,
            "theta" => cfg.theta = parse_f64(k, v)?,
            "a" => cfg.a = parse_f64(k, v)?,
            "b" => cfg.b = parse_f64(k, v)?,
            "lambda" => cfg.lambda = parse_f64(k, v)?,
            "q" => cfg.q = parse_f64(k, v)?,
            "domain" => {
                let parts: Vec<f64> = v
                    .split(',')
                    .map(|t| parse_f64(k, t))
                    .collect::<Result<_>>()?;
                if parts.len() != 2 {
                    return Err(Error::ConfigParse(
                        "key `domain`: expected two comma-separated bounds".into(),
                    ));
                }
                cfg.domain = (parts[0], parts[1]);
            }
            "c" => cfg.c_weight = parse_weight(k, v)?,
            "w" => cfg.w_weight = parse_weight(k, v)?,
            "quad.gauss" => {
                cfg.quad.gauss_points_per_cell = v.parse::<usize>().map_err(|_| {
                    Error::ConfigParse(format!("key `quad.gauss`: cannot parse `{v}`"))
                })?
            }
            "quad.diagonal" => {
                cfg.quad.diagonal_treatment = match v.as_str() {
                    "analytic-linear" => DiagonalTreatment::AnalyticLinear,
                    "offset" => DiagonalTreatment::Offset,
                    other => {
                        return Err(Error::ConfigParse(format!(
                            "key `quad.diagonal`: unknown treatment `{other}`"
                        )))
                    }
                }
            }
            "quad.exterior" => {
                cfg.quad.exterior_correction = v.parse::<bool>().map_err(|_| {
                    Error::ConfigParse(format!("key `quad.exterior`: cannot parse `{v}` as bool"))
                })?
            }
            "thresholds.harmonize_norms" => {
                cfg.harmonize_norms = v.parse::<bool>().map_err(|_| {
                    Error::ConfigParse(format!(
                        "key `thresholds.harmonize_norms`: cannot parse `{v}` as bool"
                    ))
                })?
            }
            other => {
                return Err(Error::ConfigParse(format!("unknown config key `{other}`")));
            }
        }
    }
    validate_config(cfg)
}

/// Read and parse a config file.
pub fn load_config(path: &std::path::Path) -> Result<ValidatedConfig> {
    let text =
        std::fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    parse_config(&text)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn desk() -> ProblemConfig {
        ProblemConfig::default()
    }

    #[test]
    fn desk_config_accepted_with_derived_exponents() {
        let v = validate_config(desk()).unwrap();
        assert!((v.p_star - 10.0).abs() < 1e-12);
        assert!((v.p_prime - 2.0).abs() < 1e-12);
        assert!((v.omega_measure - 2.0).abs() < 1e-12);
        assert!((v.gamma - 2.0).abs() < 1e-12);
    }

    #[test]
    fn dimension_violation() {
        let mut cfg = desk();
        cfg.s = 0.6; // p*s = 1.2 > 1 = n
        match validate_config(cfg) {
            Err(Error::DimensionViolated(_)) => {}
            other => panic!("expected DimensionViolated, got {other:?}"),
        }
    }

    #[test]
    fn exponent_chain_violation() {
        let mut cfg = desk();
        cfg.q = 2.5; // below p*theta = 3
        match validate_config(cfg) {
            Err(Error::ExponentChainViolated(_)) => {}
            other => panic!("expected ExponentChainViolated, got {other:?}"),
        }
        let mut cfg = desk();
        cfg.q = 10.5; // above p*_s = 10
        assert!(matches!(
            validate_config(cfg),
            Err(Error::ExponentChainViolated(_))
        ));
    }

    #[test]
    fn negative_weight_rejected() {
        let mut cfg = desk();
        cfg.c_weight = WeightSpec::Nodal(vec![0.0, 1.0, -0.2, 1.0, 0.0]);
        assert!(matches!(
            validate_config(cfg),
            Err(Error::NegativeWeight(_))
        ));
    }

    #[test]
    fn chain_holds_on_every_validated_config() {
        let v = validate_config(desk()).unwrap();
        assert!(v.alpha < 1.0);
        assert!(1.0 < v.p * v.theta);
        assert!(v.p * v.theta < v.q);
        assert!(v.q <= v.p_star);
    }

    #[test]
    fn parse_round_trip() {
        let text = "\
# desk-scale configuration
n = 1
p = 2
s = 0.4
alpha = 0.5
theta = 1.5
a = 1
b = 1
lambda = 0.01
q = 4
domain = -1, 1
c = const 1
w = signflip 1 0.25
quad.gauss = 4
quad.diagonal = analytic-linear
quad.exterior = true
thresholds.harmonize_norms = false
";
        let v = parse_config(text).unwrap();
        assert_eq!(v.quad.gauss_points_per_cell, 4);
        assert_eq!(
            v.w_weight,
            WeightSpec::SignFlip {
                amp: 1.0,
                split: 0.25
            }
        );
        assert!((v.w_at(0.0) - 1.0).abs() < 1e-15);
        assert!((v.w_at(0.5) + 1.0).abs() < 1e-15);
    }

    #[test]
    fn unknown_key_rejected() {
        assert!(matches!(
            parse_config("frobnicate = 3"),
            Err(Error::ConfigParse(_))
        ));
    }

    #[test]
    fn nodal_weight_parse() {
        let v = parse_config("c = nodal 0, 0.5, 1, 0.5, 0").unwrap();
        assert_eq!(v.c_weight, WeightSpec::Nodal(vec![0.0, 0.5, 1.0, 0.5, 0.0]));
        assert!((v.c_at(0.0) - 1.0).abs() < 1e-15);
    }
}
