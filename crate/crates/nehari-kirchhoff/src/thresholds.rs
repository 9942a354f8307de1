//! Closed-form admissibility constants and the discrete Sobolev constant.
//!
//! Each display is evaluated verbatim with its own stated norm of the weight
//! c: the lambda* display uses the sup norm, the lambda**, eta0 and
//! coercivity displays use the L^{q'} norm (q' the conjugate of q). Setting
//! `thresholds.harmonize_norms` forces the sup norm everywhere. The critical
//! threshold lambda*** is pinned to the exact balance point of the two terms
//! of the level c_lambda, so `c_level(lambda***) = 0` identically.
//!
//! The Sobolev constant is estimated from above: projected-gradient descent
//! on the Rayleigh quotient over mesh functions, seeded by the best member
//! of the truncated extremal family; the estimate is the smaller of the two.

use serde::{Deserialize, Serialize};

use crate::extremal;
use crate::mesh::{DiscreteFunction, Mesh1d};
use crate::problem::ValidatedConfig;
use crate::quadrature::{self, gauss_unit, tree_sum};
use crate::solver::Workspace;
use crate::Result;

/// The computed constant bundle.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Thresholds {
    pub lambda_star: f64,
    pub lambda_dstar: f64,
    pub lambda_tstar: f64,
    pub eta0: f64,
    pub eta_lambda: f64,
    pub c_level: f64,
    #[serde(rename = "S_p")]
    pub s_p: f64,
    #[serde(rename = "coercivity_C")]
    pub coercivity_c: f64,
    pub s_m: f64,
    pub omega_measure: f64,
}

/// sup |c| over the domain.
pub fn c_inf(cfg: &ValidatedConfig) -> f64 {
    cfg.c_weight.sup_abs()
}

/// L^{q'} norm of c with q' = q/(q-1), by composite Gauss on a fixed fine
/// grid (independent of the run mesh).
pub fn c_lq_prime(cfg: &ValidatedConfig) -> f64 {
    if cfg.harmonize_norms {
        return c_inf(cfg);
    }
    let qp = cfg.q / (cfg.q - 1.0);
    let (lo, hi) = cfg.domain;
    let cells = 2048usize;
    let h = (hi - lo) / cells as f64;
    let (gx, gw) = gauss_unit(4);
    let per_cell: Vec<f64> = (0..cells)
        .map(|i| {
            let x0 = lo + h * i as f64;
            gx.iter()
                .zip(&gw)
                .map(|(&x, &w)| {
                    let c = cfg.c_at(x0 + h * x).abs();
                    w * h * if c == 0.0 { 0.0 } else { c.powf(qp) }
                })
                .sum()
        })
        .collect();
    tree_sum(&per_cell).powf(1.0 / qp)
}

/// Admissibility threshold below which every X+ ray carries both roots.
pub fn lambda_star(cfg: &ValidatedConfig, s_p: f64) -> f64 {
    let (p, q, al) = (cfg.p, cfg.q, cfg.alpha);
    let ps = cfg.p_star;
    let om = cfg.omega_measure;
    om.powf(-(ps - p) * (q + al - 1.0) / (ps * (p + al - 1.0)))
        * s_p.powf(q / p)
        // the S^{(1-alpha)/p} factor carries the opposite sign here than in
        // eta0 below; each display is evaluated with its own stated sign
        * (c_inf(cfg) * s_p.powf((1.0 - al) / p)).powf((p - q) / (p + al - 1.0))
        * (cfg.a * (q - p) / (q + al - 1.0)).powf((q + al - 1.0) / (p + al - 1.0))
        * ((p + al - 1.0) / (cfg.gamma * q * (q - p)))
}

/// Threshold below which the degenerate Nehari class reduces to {0}.
pub fn lambda_dstar(cfg: &ValidatedConfig, s_p: f64) -> f64 {
    let (p, q, al, th) = (cfg.p, cfg.q, cfg.alpha, cfg.theta);
    let pt = p * th;
    let ps = cfg.p_star;
    let om = cfg.omega_measure;
    let d2 = pt + p + 2.0 * al - 2.0;
    let e1 = (q + al - 1.0) / d2;
    let num = (4.0 * cfg.a * cfg.b / ((q + al - 1.0) * (q + al - 1.0))).powf(e1)
        * ((p + al - 1.0) * (pt + al - 1.0)).sqrt()
        * s_p.powf((th + 1.0) * (q + al - 1.0) / d2)
        * om.powf(-(q + al - 1.0) * (2.0 * ps - pt - p) / (ps * d2));
    let den = ((q - p) * (q - pt)).powf(-0.5 * (2.0 * q - pt - p) / d2)
        * q
        * cfg.gamma
        * c_lq_prime(cfg).powf((2.0 * q - pt - p) / d2);
    num / den
}

/// Norm gap: every plus-branch member sits below eta0 and every
/// minus-branch member above eta_lambda (for lambda below lambda**).
pub fn eta_bounds(cfg: &ValidatedConfig, s_p: f64, lambda: f64) -> (f64, f64) {
    let (p, q, al, th) = (cfg.p, cfg.q, cfg.alpha, cfg.theta);
    let pt = p * th;
    let ps = cfg.p_star;
    let om = cfg.omega_measure;
    let d2 = pt + p + 2.0 * al - 2.0;
    // S enters with the negative (embedding-direction) exponent, unlike the
    // lambda* and coercivity displays
    let eta0 = ((q + al - 1.0)
        * c_lq_prime(cfg)
        * s_p.powf(-(1.0 - al) / p)
        * om.powf((ps + al - 1.0) / ps)
        / (2.0 * (cfg.a * cfg.b * (q - p) * (q - pt)).sqrt()))
    .powf(2.0 / d2);
    let eta_lambda = (2.0 * (cfg.a * cfg.b * (p + al - 1.0) * (pt + al - 1.0)).sqrt()
        / (lambda * q * (q + al - 1.0) * s_p.powf(-q / p) * om.powf((ps - q) / ps)))
    .powf(2.0 / (2.0 * q - pt - p));
    (eta0, eta_lambda)
}

// the two pieces of the compactness level
fn c_level_first_term(cfg: &ValidatedConfig, s_p: f64, lambda: f64) -> f64 {
    let n = cfg.n as f64;
    let (p, s) = (cfg.p, cfg.s);
    let ps = cfg.p_star;
    (s / n)
        * s_p.powf(n / (s * p))
        * cfg.a.powf(n / (s * p))
        * cfg.gamma.powf(-n / (s * ps))
        * (ps * lambda).powf(-n / (s * ps))
}

fn c_level_second_term(cfg: &ValidatedConfig, s_p: f64) -> f64 {
    let (p, al, th) = (cfg.p, cfg.alpha, cfg.theta);
    let pt = p * th;
    let ps = cfg.p_star;
    let om = cfg.omega_measure;
    (((ps + al - 1.0) / ps) * c_inf(cfg) * om.powf((ps + al - 1.0) / ps) * s_p.powf((al - 1.0) / p))
        .powf(pt / (pt + al - 1.0))
        * (cfg.b * (ps - pt) / (ps * pt)).powf((al - 1.0) / (pt + al - 1.0))
        * (al / (1.0 - al))
}

/// The compactness level of the critical regime; positive iff lambda is below
/// [`lambda_tstar`].
pub fn c_level(cfg: &ValidatedConfig, s_p: f64, lambda: f64) -> f64 {
    c_level_first_term(cfg, s_p, lambda) - c_level_second_term(cfg, s_p)
}

/// The lambda at which the two c_level terms balance exactly.
pub fn lambda_tstar(cfg: &ValidatedConfig, s_p: f64) -> f64 {
    let n = cfg.n as f64;
    let (p, s) = (cfg.p, cfg.s);
    let ps = cfg.p_star;
    let xi = c_level_second_term(cfg, s_p);
    let base =
        (s / n) * s_p.powf(n / (s * p)) * cfg.a.powf(n / (s * p)) * cfg.gamma.powf(-n / (s * ps));
    (base / xi).powf(s * ps / n) / ps
}

/// Coercivity: the lower bound C (< 0) of the energy on the manifold and the
/// argmin s_m of `h(s) = a (1/p - 1/(p theta)) s^{p/(1-alpha)} - K s`.
pub fn coercivity_bound(cfg: &ValidatedConfig, s_p: f64) -> (f64, f64) {
    let (p, al, th) = (cfg.p, cfg.alpha, cfg.theta);
    let pt = p * th;
    let ps = cfg.p_star;
    let om = cfg.omega_measure;
    let kcoef = c_lq_prime(cfg)
        * (1.0 / (1.0 - al) - 1.0 / pt)
        * om.powf((ps + al - 1.0) / ps)
        * s_p.powf((1.0 - al) / p);
    let acoef = cfg.a * (1.0 / p - 1.0 / pt);
    let s_m = (kcoef * (1.0 - al) / (acoef * p)).powf((1.0 - al) / (p + al - 1.0));
    let c = coercivity_h(cfg, s_p, s_m);
    (c, s_m)
}

/// h(s) itself, exposed for the numeric-minimization oracle.
pub fn coercivity_h(cfg: &ValidatedConfig, s_p: f64, s: f64) -> f64 {
    let (p, al, th) = (cfg.p, cfg.alpha, cfg.theta);
    let pt = p * th;
    let ps = cfg.p_star;
    let om = cfg.omega_measure;
    let kcoef = c_lq_prime(cfg)
        * (1.0 / (1.0 - al) - 1.0 / pt)
        * om.powf((ps + al - 1.0) / ps)
        * s_p.powf((1.0 - al) / p);
    let acoef = cfg.a * (1.0 / p - 1.0 / pt);
    acoef * s.powf(p / (1.0 - al)) - kcoef * s
}

/// Rayleigh quotient `||u||^p / ||u||_{p*}^p` of a mesh function.
pub fn rayleigh_quotient(u: &DiscreteFunction, cfg: &ValidatedConfig) -> Result<f64> {
    let g = quadrature::gagliardo_p(u, cfg)?;
    let mass = quadrature::lp_norm_p(u, cfg.p_star, cfg);
    Ok(g / mass.powf(cfg.p / cfg.p_star))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SobolevEstimate {
    #[serde(rename = "S_p")]
    pub s_p: f64,
    pub family_best: f64,
    pub descent: f64,
    pub iterations: usize,
}

const SOBOLEV_FAMILY_EPS: [f64; 6] = [0.4, 0.3, 0.2, 0.15, 0.1, 0.07];

/// Upper estimate of the fractional Sobolev constant
/// `S_p = inf ||u||^p / ||u||_{p*}^p` over mesh functions.
pub fn sobolev_constant(cfg: &ValidatedConfig, mesh: Mesh1d) -> Result<SobolevEstimate> {
    assert!(mesh.n_nodes >= 33, "sobolev estimate needs >= 33 nodes");
    let center = 0.5 * (cfg.domain.0 + cfg.domain.1);
    let delta = 0.25 * 0.5 * cfg.omega_measure;
    let mut family_best = f64::INFINITY;
    let mut seed: Option<DiscreteFunction> = None;
    for &eps in SOBOLEV_FAMILY_EPS.iter() {
        let u = extremal::cutoff_family_at(center, eps, delta, mesh, cfg)?;
        let q = rayleigh_quotient(&u, cfg)?;
        if q < family_best {
            family_best = q;
            seed = Some(u);
        }
    }
    let ws = Workspace::new(cfg.clone(), mesh)?;
    let mut u = seed.expect("family nonempty");
    // normalize the p*-mass to 1 so the quotient is the seminorm itself
    let normalize = |v: &DiscreteFunction| -> DiscreteFunction {
        let mass = quadrature::lp_norm_p(v, cfg.p_star, cfg);
        v.scale(mass.powf(-1.0 / cfg.p_star))
    };
    u = normalize(&u);
    let mut quotient = ws.norm_p(&u)?;
    let max_iters = if cfg.p == 2.0 { 400 } else { 120 };
    let mut step = 0.1;
    let mut iterations = 0;
    for _ in 0..max_iters {
        iterations += 1;
        let grad_g = ws.norm_gradient(&u)?;
        // gradient of the p*-mass term of the quotient
        let e = cfg.p_star - 2.0;
        let grad_mass = quadrature::load_vector(&u, 6, false, |_, ux| {
            if ux == 0.0 {
                0.0
            } else {
                cfg.p_star * ux.abs().powf(e) * ux
            }
        });
        let scale = cfg.p / cfg.p_star;
        let dir: Vec<f64> = grad_g
            .iter()
            .zip(&grad_mass)
            .map(|(&g, &m)| -(g - quotient * scale * m))
            .collect();
        let dnorm = dir.iter().fold(0.0f64, |a, &d| a.max(d.abs()));
        if dnorm == 0.0 {
            break;
        }
        let mut improved = false;
        let mut t = step / dnorm;
        for _ in 0..40 {
            let cand = normalize(&DiscreteFunction::new(
                mesh,
                u.values
                    .iter()
                    .zip(&dir)
                    .enumerate()
                    .map(|(i, (&v, &d))| {
                        if i == 0 || i == mesh.n_nodes - 1 {
                            0.0
                        } else {
                            v + t * d
                        }
                    })
                    .collect(),
            ));
            let q = ws.norm_p(&cand)?;
            if q < quotient {
                u = cand;
                quotient = q;
                step = (step * 1.5).min(1.0);
                improved = true;
                break;
            }
            t *= 0.5;
        }
        if !improved {
            break;
        }
    }
    // certify the descent result through the generic path
    let descent = rayleigh_quotient(&u, cfg)?;
    Ok(SobolevEstimate {
        s_p: descent.min(family_best),
        family_best,
        descent,
        iterations,
    })
}

/// Compute the whole bundle at the config's lambda.
pub fn compute(cfg: &ValidatedConfig, s_p: f64) -> Thresholds {
    let (eta0, eta_lambda) = eta_bounds(cfg, s_p, cfg.lambda);
    let (coercivity_c, s_m) = coercivity_bound(cfg, s_p);
    Thresholds {
        lambda_star: lambda_star(cfg, s_p),
        lambda_dstar: lambda_dstar(cfg, s_p),
        lambda_tstar: lambda_tstar(cfg, s_p),
        eta0,
        eta_lambda,
        c_level: c_level(cfg, s_p, cfg.lambda),
        s_p,
        coercivity_c,
        s_m,
        omega_measure: cfg.omega_measure,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problem::{validate_config, ProblemConfig};

    fn desk() -> ValidatedConfig {
        validate_config(ProblemConfig::default()).unwrap()
    }

    fn desk_critical() -> ValidatedConfig {
        let mut cfg = ProblemConfig::default();
        cfg.q = 10.0;
        cfg.b = 1e-3;
        validate_config(cfg).unwrap()
    }

    // Separately-coded expression tree for the lambda* display (log-space),
    // kept independent of the production formula.
    fn lambda_star_alt(cfg: &ValidatedConfig, s_p: f64) -> f64 {
        let (p, q, al) = (cfg.p, cfg.q, cfg.alpha);
        let ps = cfg.p_star;
        let mut ln = 0.0;
        ln += (-(ps - p) * (q + al - 1.0) / (ps * (p + al - 1.0))) * cfg.omega_measure.ln();
        ln += (q / p) * s_p.ln();
        ln += ((p - q) / (p + al - 1.0)) * (c_inf(cfg).ln() + ((1.0 - al) / p) * s_p.ln());
        ln +=
            ((q + al - 1.0) / (p + al - 1.0)) * ((cfg.a).ln() + (q - p).ln() - (q + al - 1.0).ln());
        ln += (p + al - 1.0).ln() - (cfg.gamma * q * (q - p)).ln();
        ln.exp()
    }

    #[test]
    fn lambda_star_dual_implementation() {
        for s_p in [0.7, 1.3, 2.9] {
            let cfg = desk();
            let a = lambda_star(&cfg, s_p);
            let b = lambda_star_alt(&cfg, s_p);
            assert!((a - b).abs() <= 1e-14 * a.abs(), "a={a} b={b}");
        }
    }

    // Independent algebraic route to lambda**: the level at which the
    // mean-inequality bound on phi''(1) changes sign when the norm sits at
    // eta0. Cross-validates both the lambda** and eta0 displays.
    #[test]
    fn lambda_dstar_matches_derivation_route() {
        for s_p in [0.8, 1.9, 4.3] {
            let cfg = desk();
            let (p, q, al, th) = (cfg.p, cfg.q, cfg.alpha, cfg.theta);
            let pt = p * th;
            let ps = cfg.p_star;
            let om = cfg.omega_measure;
            let (eta0, _) = eta_bounds(&cfg, s_p, 1.0);
            let route = 2.0
                * (cfg.a * cfg.b * (p + al - 1.0) * (pt + al - 1.0)).sqrt()
                * s_p.powf(q / p)
                * om.powf(-(ps - q) / ps)
                / (q * (q + al - 1.0) * cfg.gamma)
                * eta0.powf(-0.5 * (2.0 * q - pt - p));
            let display = lambda_dstar(&cfg, s_p);
            assert!(
                (route - display).abs() <= 1e-12 * display,
                "s_p={s_p}: route={route} display={display}"
            );
        }
    }

    #[test]
    fn lambda_star_scales_with_a() {
        let cfg = desk();
        let s_p = 2.0;
        let base = lambda_star(&cfg, s_p);
        let mut raw = ProblemConfig::default();
        raw.a = 2.0;
        let doubled = lambda_star(&validate_config(raw).unwrap(), s_p);
        let expect = 2f64.powf((cfg.q + cfg.alpha - 1.0) / (cfg.p + cfg.alpha - 1.0)) * base;
        assert!((doubled - expect).abs() <= 1e-12 * expect);
    }

    #[test]
    fn all_thresholds_positive_and_finite() {
        for cfg in [desk(), desk_critical()] {
            let th = compute(&cfg, 2.0);
            for v in [
                th.lambda_star,
                th.lambda_dstar,
                th.lambda_tstar,
                th.eta0,
                th.eta_lambda,
                th.s_m,
                th.omega_measure,
            ] {
                assert!(v.is_finite() && v > 0.0, "{th:?}");
            }
            assert!(th.coercivity_c < 0.0);
        }
    }

    #[test]
    fn eta_lambda_scaling_and_eta0_independence() {
        let cfg = desk();
        let s_p = 2.0;
        let (eta0_a, el_a) = eta_bounds(&cfg, s_p, 0.01);
        let (eta0_b, el_b) = eta_bounds(&cfg, s_p, 0.005);
        assert_eq!(eta0_a, eta0_b);
        // halving lambda multiplies eta_lambda by 2^{2/(2q - p theta - p)}
        let factor = 2f64.powf(2.0 / (2.0 * cfg.q - cfg.p * cfg.theta - cfg.p));
        assert!((el_b - factor * el_a).abs() <= 1e-12 * el_b);
    }

    #[test]
    fn gap_structure_below_lambda_dstar() {
        let cfg = desk();
        let s_p = 2.0;
        let ld = lambda_dstar(&cfg, s_p);
        let (eta0, eta_lambda) = eta_bounds(&cfg, s_p, 0.5 * ld);
        assert!(eta0 < eta_lambda, "eta0={eta0} eta_lambda={eta_lambda}");
    }

    #[test]
    fn c_level_vanishes_at_lambda_tstar() {
        for cfg in [desk(), desk_critical()] {
            let s_p = 1.7;
            let lt = lambda_tstar(&cfg, s_p);
            let scale = c_level_second_term(&cfg, s_p);
            assert!(c_level(&cfg, s_p, lt).abs() <= 1e-10 * scale);
            assert!(c_level(&cfg, s_p, 0.5 * lt) > 0.0);
            assert!(c_level(&cfg, s_p, 2.0 * lt) < 0.0);
        }
    }

    #[test]
    fn c_level_monotone_in_lambda_and_b() {
        let cfg = desk_critical();
        let s_p = 2.0;
        assert!(c_level(&cfg, s_p, 0.01) > c_level(&cfg, s_p, 0.02));
        // the b factor enters as (b const)^{(alpha-1)/(p theta + alpha - 1)}
        // with a negative exponent, so shrinking b grows the negative term
        // and lowers the level (checked here as evaluated; the balance point
        // lambda*** shrinks along with it)
        let mut prev = f64::INFINITY;
        for b in [1.0, 0.1, 0.01] {
            let bcfg = cfg.with_q_b(cfg.q, b).unwrap();
            let c = c_level(&bcfg, s_p, 0.01);
            assert!(c < prev, "b={b}: {c} vs {prev}");
            prev = c;
            // c_level stays positive below its own balance point
            let lt = lambda_tstar(&bcfg, s_p);
            assert!(c_level(&bcfg, s_p, 0.5 * lt) > 0.0);
        }
    }

    #[test]
    fn coercivity_minimum_matches_golden_section() {
        let cfg = desk();
        let s_p = 2.0;
        let (c, s_m) = coercivity_bound(&cfg, s_p);
        assert!(c < 0.0);
        // golden-section search on h over (0, 10 s_m)
        let golden = 0.5 * (5f64.sqrt() - 1.0);
        let (mut lo, mut hi) = (1e-12, 10.0 * s_m);
        for _ in 0..200 {
            let x1 = hi - golden * (hi - lo);
            let x2 = lo + golden * (hi - lo);
            if coercivity_h(&cfg, s_p, x1) < coercivity_h(&cfg, s_p, x2) {
                hi = x2;
            } else {
                lo = x1;
            }
        }
        let s_num = 0.5 * (lo + hi);
        assert!((s_num - s_m).abs() <= 1e-6 * s_m, "s_num={s_num} s_m={s_m}");
        assert!((coercivity_h(&cfg, s_p, s_num) - c).abs() <= 1e-6 * c.abs());
    }

    #[test]
    fn harmonized_norms_force_sup_everywhere() {
        // with a non-constant c the two norms differ; harmonizing swaps the
        // L^{q'} norm for the sup in the displays that use it
        let mut raw = ProblemConfig::default();
        raw.c_weight = crate::problem::WeightSpec::Bump {
            amp: 2.0,
            center: 0.0,
            width: 0.8,
        };
        let plain = validate_config(raw.clone()).unwrap();
        raw.harmonize_norms = true;
        let harmonized = validate_config(raw).unwrap();
        assert!(c_lq_prime(&plain) < c_inf(&plain));
        assert_eq!(c_lq_prime(&harmonized), c_inf(&harmonized));
        let s_p = 2.0;
        // lambda* only uses the sup norm, so it is unaffected
        assert_eq!(lambda_star(&plain, s_p), lambda_star(&harmonized, s_p));
        // eta0 and lambda** move with the norm choice
        let (eta0_plain, _) = eta_bounds(&plain, s_p, 0.01);
        let (eta0_harm, _) = eta_bounds(&harmonized, s_p, 0.01);
        assert!(eta0_plain < eta0_harm);
        assert!(lambda_dstar(&plain, s_p) != lambda_dstar(&harmonized, s_p));
    }

    #[test]
    fn quotient_scale_invariance() {
        let cfg = desk();
        let mesh = Mesh1d::new(-1.0, 1.0, 65);
        let u = DiscreteFunction::sample_zero_boundary(mesh, |x| (1.0 - x * x).max(0.0));
        let q1 = rayleigh_quotient(&u, &cfg).unwrap();
        let q7 = rayleigh_quotient(&u.scale(7.0), &cfg).unwrap();
        assert!((q1 - q7).abs() <= 1e-12 * q1);
    }

    #[test]
    fn sobolev_estimate_bounds_random_quotients() {
        use rand::{Rng, SeedableRng};
        use rand_chacha::ChaCha8Rng;
        let cfg = desk();
        let mesh = Mesh1d::new(-1.0, 1.0, 65);
        let est = sobolev_constant(&cfg, mesh).unwrap();
        assert!(est.s_p > 0.0 && est.s_p.is_finite());
        assert!(est.s_p <= est.family_best + 1e-12);
        let mut rng = ChaCha8Rng::seed_from_u64(77);
        for _ in 0..100 {
            let mut vals: Vec<f64> = (0..mesh.n_nodes)
                .map(|_| rng.gen_range(-1.0..1.0))
                .collect();
            vals[0] = 0.0;
            vals[mesh.n_nodes - 1] = 0.0;
            let u = DiscreteFunction::new(mesh, vals);
            let q = rayleigh_quotient(&u, &cfg).unwrap();
            assert!(
                est.s_p <= q + 1e-9 * q,
                "estimate {} above sample {q}",
                est.s_p
            );
        }
    }

    #[test]
    fn family_quotient_decreases_with_epsilon() {
        let cfg = desk();
        let mesh = Mesh1d::new(-1.0, 1.0, 257);
        let mut prev = f64::INFINITY;
        for eps in [0.4, 0.2, 0.1] {
            let u = extremal::cutoff_family(eps, 0.25, mesh, &cfg).unwrap();
            let q = rayleigh_quotient(&u, &cfg).unwrap();
            assert!(q < prev, "eps={eps}: {q} vs {prev}");
            prev = q;
        }
    }
}
