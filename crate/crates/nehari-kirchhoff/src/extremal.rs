//! Critical-case machinery: the extremal family
//! `u_eps(x) = eps^{-(n-ps)/p} (1 + |x/eps|^{p'})^{-(n-ps)/p}`, the smooth
//! cutoff sigma, the truncated family `u_{eps,sigma} = sigma u_eps`, numeric
//! fits of the truncation orders, and the upper-envelope function T(t) used
//! to bound the minus-branch level in the critical regime.

use serde::{Deserialize, Serialize};

use crate::mesh::{DiscreteFunction, Mesh1d};
use crate::problem::ValidatedConfig;
use crate::quadrature::{self, gauss_unit};
use crate::{Error, Result};

/// Peak-normalized Talenti-type profile, scale eps, centered at 0.
pub fn u_epsilon(x: f64, eps: f64, cfg: &ValidatedConfig) -> f64 {
    assert!(eps > 0.0, "u_epsilon needs eps > 0");
    let e = (cfg.n as f64 - cfg.p * cfg.s) / cfg.p;
    let r = x.abs() / eps;
    eps.powf(-e) * (1.0 + r.powf(cfg.p_prime)).powf(-e)
}

/// Cutoff ramp: 1 on |x| <= delta/2, 0 on |x| >= delta, cubic smoothstep on
/// the annulus between.
pub fn cutoff_sigma(x: f64, delta: f64) -> f64 {
    let r = x.abs();
    if r <= 0.5 * delta {
        1.0
    } else if r >= delta {
        0.0
    } else {
        let t = (delta - r) / (0.5 * delta);
        t * t * (3.0 - 2.0 * t)
    }
}

/// Default cutoff radius: a quarter of the domain half-width.
pub fn default_delta(cfg: &ValidatedConfig) -> f64 {
    0.25 * 0.5 * cfg.omega_measure
}

/// Cutoff radius used by the order fits: nearly the whole half-width, so
/// that the eps/delta separation needed by the truncation expansion is as
/// large as the mesh allows.
pub fn fit_delta(cfg: &ValidatedConfig) -> f64 {
    0.95 * 0.5 * cfg.omega_measure
}

/// Canonical eps grid for the order fits at 513-node resolution.
pub const FIT_EPS_GRID: [f64; 5] = [0.032, 0.024, 0.018, 0.0135, 0.01];

/// Nodal sampling of `sigma u_eps` centered at 0.
pub fn cutoff_family(
    eps: f64,
    delta: f64,
    mesh: Mesh1d,
    cfg: &ValidatedConfig,
) -> Result<DiscreteFunction> {
    cutoff_family_at(0.0, eps, delta, mesh, cfg)
}

/// Same family shifted to an arbitrary center.
pub fn cutoff_family_at(
    center: f64,
    eps: f64,
    delta: f64,
    mesh: Mesh1d,
    cfg: &ValidatedConfig,
) -> Result<DiscreteFunction> {
    let (lo, hi) = cfg.domain;
    if !(center - delta > lo && center + delta < hi) {
        return Err(Error::CutoffExceedsDomain);
    }
    Ok(DiscreteFunction::sample_zero_boundary(mesh, |x| {
        cutoff_sigma(x - center, delta) * u_epsilon(x - center, eps, cfg)
    }))
}

/// Quantities whose eps-order can be fitted on the truncated family.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum EpsQuantity {
    /// `||u_{eps,sigma}||_p^p`, expected order (n - ps)/(p - 1), limit 0.
    LpP,
    /// Deficit of `\int |u_{eps,sigma}|^{p*}` from the full-line mass of the
    /// untruncated profile, expected order n/(p - 1).
    PstarMass,
    /// `||u_{eps,sigma}||^p`, measured against the finest-eps value.
    Seminorm,
    /// Rayleigh quotient, measured against the finest-eps value.
    Quotient,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpsOrderFit {
    pub slope: f64,
    /// (eps, quantity value) samples.
    pub values: Vec<(f64, f64)>,
    /// (eps, deficit) points that entered the log-log fit.
    pub fitted: Vec<(f64, f64)>,
}

/// Full-line p*-mass of the untruncated profile; independent of eps by
/// scaling, so it serves as the truncation-deficit reference.
pub fn pstar_mass_limit(cfg: &ValidatedConfig) -> f64 {
    // integrand (1 + x^{p'})^{-(n-ps) p*/p} decays like x^{-n p'}
    let e = (cfg.n as f64 - cfg.p * cfg.s) / cfg.p * cfg.p_star;
    let f = |x: f64| (1.0 + x.powf(cfg.p_prime)).powf(-e);
    let (gx, gw) = gauss_unit(8);
    let mut acc = 0.0;
    // panels [0,1], then geometric to 1e6
    let mut a = 0.0f64;
    let mut b = 1.0f64;
    while a < 1e6 {
        for (&x, &w) in gx.iter().zip(&gw) {
            acc += w * (b - a) * f(a + (b - a) * x);
        }
        a = b;
        b *= 2.0;
    }
    // analytic tail beyond the last panel
    let kappa = cfg.p_prime * e;
    acc += a.powf(1.0 - kappa) / (kappa - 1.0);
    2.0 * acc
}

fn least_squares_slope(points: &[(f64, f64)]) -> f64 {
    let m = points.len() as f64;
    let sx: f64 = points.iter().map(|p| p.0).sum();
    let sy: f64 = points.iter().map(|p| p.1).sum();
    let sxx: f64 = points.iter().map(|p| p.0 * p.0).sum();
    let sxy: f64 = points.iter().map(|p| p.0 * p.1).sum();
    (m * sxy - sx * sy) / (m * sxx - sx * sx)
}

/// Fit the eps-order of a family quantity on a decreasing eps grid.
pub fn epsilon_order_fit(
    quantity: EpsQuantity,
    eps_grid: &[f64],
    mesh: Mesh1d,
    cfg: &ValidatedConfig,
) -> Result<EpsOrderFit> {
    if eps_grid.len() < 4 {
        return Err(Error::InsufficientGrid {
            need: 4,
            got: eps_grid.len(),
        });
    }
    if eps_grid.windows(2).any(|w| w[1] >= w[0]) {
        return Err(Error::InsufficientGrid { need: 4, got: 0 });
    }
    let delta = fit_delta(cfg);
    let mut values = Vec::with_capacity(eps_grid.len());
    for &eps in eps_grid {
        let u = cutoff_family(eps, delta, mesh, cfg)?;
        let v = match quantity {
            EpsQuantity::LpP => quadrature::lp_norm_p(&u, cfg.p, cfg),
            EpsQuantity::PstarMass => quadrature::lp_norm_p(&u, cfg.p_star, cfg),
            EpsQuantity::Seminorm => quadrature::gagliardo_p(&u, cfg)?,
            EpsQuantity::Quotient => crate::thresholds::rayleigh_quotient(&u, cfg)?,
        };
        values.push((eps, v));
    }
    let fitted: Vec<(f64, f64)> = match quantity {
        // limit 0: fit the raw values
        EpsQuantity::LpP => values.iter().map(|&(e, v)| (e, v.abs())).collect(),
        // eps-independent full-line mass as the limit
        EpsQuantity::PstarMass => {
            let limit = pstar_mass_limit(cfg);
            values
                .iter()
                .map(|&(e, v)| (e, (limit - v).abs()))
                .collect()
        }
        // finest grid point as the extrapolated limit
        EpsQuantity::Seminorm | EpsQuantity::Quotient => {
            let v_fin = values.last().unwrap().1;
            values[..values.len() - 1]
                .iter()
                .map(|&(e, v)| (e, (v - v_fin).abs()))
                .collect()
        }
    };
    let logs: Vec<(f64, f64)> = fitted
        .iter()
        .filter(|&&(_, d)| d > 0.0)
        .map(|&(e, d)| (e.ln(), d.ln()))
        .collect();
    if logs.len() < 3 {
        return Err(Error::InsufficientGrid {
            need: 3,
            got: logs.len(),
        });
    }
    Ok(EpsOrderFit {
        slope: least_squares_slope(&logs),
        values,
        fitted,
    })
}

/// The power-split inequality `(c + d)^theta <= c^theta
/// + C(theta)(c^theta + d^theta) + theta c^{theta-1} d` with the explicit
/// choice `C(theta) = 2^theta`, checked on random nonnegative pairs.
pub fn power_split_inequality_holds(theta: f64, c_theta: f64, samples: usize, seed: u64) -> bool {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..samples {
        let c: f64 = 10f64.powf(rng.gen_range(-3.0..3.0));
        let d: f64 = 10f64.powf(rng.gen_range(-3.0..3.0));
        let lhs = (c + d).powf(theta);
        let rhs = c.powf(theta)
            + c_theta * (c.powf(theta) + d.powf(theta))
            + theta * c.powf(theta - 1.0) * d;
        if lhs > rhs * (1.0 + 1e-12) {
            return false;
        }
    }
    true
}

/// Upper envelope
/// `T(t) = t^p/p (a ||u_es||^p + ||u_es||_p^p) + b D_theta t^{p theta}
///  ||u_es||^{p theta} - lambda t^{p*} \int F(u_es)
///  - lambda C7' t^{p*-1} \int f(u_es)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TProfile {
    pub coeff_p: f64,
    pub coeff_ptheta: f64,
    pub coeff_pstar: f64,
    pub coeff_pstar_m1: f64,
    pub p: f64,
    pub ptheta: f64,
    pub pstar: f64,
    /// Fitted coefficient of the first-order nonlinearity term.
    pub c7: f64,
    /// Power-split constant, 2^theta.
    pub d_theta: f64,
    /// Interior maximizer and value, found by bracket doubling.
    pub sup_t: f64,
    pub sup_value: f64,
}

impl TProfile {
    pub fn eval(&self, t: f64) -> f64 {
        t.powf(self.p) / self.p * self.coeff_p + t.powf(self.ptheta) * self.coeff_ptheta
            - t.powf(self.pstar) * self.coeff_pstar
            - t.powf(self.pstar - 1.0) * self.coeff_pstar_m1
    }

    pub fn deriv(&self, t: f64) -> f64 {
        t.powf(self.p - 1.0) * self.coeff_p
            + self.ptheta * t.powf(self.ptheta - 1.0) * self.coeff_ptheta
            - self.pstar * t.powf(self.pstar - 1.0) * self.coeff_pstar
            - (self.pstar - 1.0) * t.powf(self.pstar - 2.0) * self.coeff_pstar_m1
    }
}

/// Build the envelope for a base solution and family scale eps. Requires a
/// critical configuration with the cutoff centered in the positive region.
pub fn t_profile(u0: &DiscreteFunction, eps: f64, cfg: &ValidatedConfig) -> Result<TProfile> {
    let delta = default_delta(cfg);
    let u_es = cutoff_family(eps, delta, u0.mesh, cfg)?;
    let d_es = quadrature::f_primitive_integral(&u_es, cfg);
    if d_es <= 0.0 {
        return Err(Error::WrongSignWeight(format!(
            "envelope needs \\int F(u_eps_sigma) > 0, got {d_es:e}"
        )));
    }
    let g = quadrature::gagliardo_p(&u_es, cfg)?;
    let lp_p = quadrature::lp_norm_p(&u_es, cfg.p, cfg);
    let ones = DiscreteFunction::new(u0.mesh, vec![1.0; u0.mesh.n_nodes]);
    let f_total = quadrature::f_integral_against(&u_es, &ones, cfg);
    let f_against_u0 = quadrature::f_integral_against(&u_es, u0, cfg);
    let d_theta = 2f64.powf(cfg.theta);

    // fit C7 as the largest constant keeping the first-order lower bound
    // valid on the sampled path
    let base_f = quadrature::f_primitive_integral(u0, cfg);
    let mut c7 = f64::INFINITY;
    for i in 0..50 {
        let r = 10f64.powf(-1.0 + 2.0 * i as f64 / 49.0);
        let shifted = u0.axpy(r, &u_es);
        let lhs = quadrature::f_primitive_integral(&shifted, cfg)
            - base_f
            - (2.0 * r / cfg.p) * quadrature::f_integral_against(u0, &u_es, cfg);
        let denom = r.powf(cfg.p_star - 1.0) * f_against_u0;
        if denom > 0.0 {
            c7 = c7.min((lhs - r.powf(cfg.p_star) * d_es) / denom);
        }
    }
    if !c7.is_finite() || c7 < 0.0 {
        c7 = 0.0;
    }

    let lambda = cfg.lambda;
    let mut profile = TProfile {
        coeff_p: cfg.a * g + lp_p,
        coeff_ptheta: cfg.b * d_theta * g.powf(cfg.theta),
        coeff_pstar: lambda * d_es,
        coeff_pstar_m1: lambda * c7 * f_total,
        p: cfg.p,
        ptheta: cfg.p * cfg.theta,
        pstar: cfg.p_star,
        c7,
        d_theta,
        sup_t: 0.0,
        sup_value: 0.0,
    };

    // bracket the interior maximizer: double until T turns negative
    let mut hi = 1.0;
    let mut tries = 0;
    while profile.eval(hi) > 0.0 || profile.deriv(hi) > 0.0 {
        hi *= 2.0;
        tries += 1;
        if tries > 200 {
            return Err(Error::NoRootBracket("envelope does not decay".into()));
        }
    }
    // golden section on (0, hi)
    let golden = 0.5 * (5f64.sqrt() - 1.0);
    let (mut lo, mut up) = (1e-12, hi);
    for _ in 0..300 {
        let x1 = up - golden * (up - lo);
        let x2 = lo + golden * (up - lo);
        if profile.eval(x1) > profile.eval(x2) {
            up = x2;
        } else {
            lo = x1;
        }
    }
    profile.sup_t = 0.5 * (lo + up);
    profile.sup_value = profile.eval(profile.sup_t);
    Ok(profile)
}

/// The eps-dependent threshold of the critical minus-branch argument,
/// exposed as a function of the fitted expansion constants.
pub fn lambda_qqstar(
    eps: f64,
    m: f64,
    c_ppp: f64,
    c5_pp: f64,
    cfg: &ValidatedConfig,
    s_p: f64,
) -> f64 {
    let n = cfg.n as f64;
    let (p, al, th) = (cfg.p, cfg.alpha, cfg.theta);
    let pt = p * th;
    let ps = cfg.p_star;
    let om = cfg.omega_measure;
    let xi_b_free = (((ps + al - 1.0) / ps)
        * crate::thresholds::c_inf(cfg)
        * om.powf((ps + al - 1.0) / ps)
        * s_p.powf((al - 1.0) / p))
    .powf(pt / (pt + al - 1.0))
        * ((ps - pt) / (ps * pt)).powf((al - 1.0) / (pt + al - 1.0))
        * (al / (1.0 - al));
    (c_ppp / c5_pp) * eps.powf((n - p * cfg.s) / ((p - 1.0) * p))
        + (1.0 / c5_pp)
            * eps.powf(-(n - p * cfg.s) / p + m * (al - 1.0) / (pt + al - 1.0))
            * xi_b_free
}
