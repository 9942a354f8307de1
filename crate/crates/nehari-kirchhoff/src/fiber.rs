//! Fiber-map calculus on energy rays `t -> J(t u)`.
//!
//! The ray through a fixed function is determined by four scalars,
//!
//! ```text
//! A = a ||u||^p + ||u||_p^p,   B = ||u||^{p theta},
//! C = \int c (u+)^{1-alpha},   D = \int F(x, u+),
//! ```
//!
//! giving
//!
//! ```text
//! phi(t) = t^p/p A + b t^{p theta}/(p theta) B
//!          - t^{1-alpha}/(1-alpha) C - lambda t^q D.
//! ```
//!
//! `t u` lies on the Nehari set exactly when `psi(t) = lambda q D` with
//! `psi(t) = t^{p-q} A + b t^{p theta - q} B - t^{1-alpha-q} C`, and the sign
//! of `psi'` at the root separates the plus branch (local minimum of phi)
//! from the minus branch (local maximum past the psi-maximizer).

use serde::{Deserialize, Serialize};

use crate::mesh::DiscreteFunction;
use crate::problem::ValidatedConfig;
use crate::quadrature;
use crate::{Error, Result};

/// The four scalars that determine the fiber map of a fixed function.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FiberProfile {
    /// a ||u||^p + ||u||_p^p.
    pub energy_p: f64,
    /// ||u||^{p theta}.
    pub energy_ptheta: f64,
    /// \int c (u+)^{1-alpha}.
    pub singular: f64,
    /// \int F(x, u+).
    pub nonlinear: f64,
    /// Cached ||u||^p (the seminorm part alone).
    pub seminorm_p: f64,
}

impl FiberProfile {
    pub fn is_zero(&self) -> bool {
        self.energy_p == 0.0
    }

    /// Magnitude used to scale manifold tolerances.
    pub fn tol_scale(&self, cfg: &ValidatedConfig) -> f64 {
        self.energy_p
            + cfg.b * self.energy_ptheta
            + self.singular
            + cfg.lambda * cfg.q * self.nonlinear.abs()
    }
}

/// Nehari membership of a function at t = 1.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum NehariClass {
    Plus,
    Minus,
    Zero,
    Off,
}

/// Roots of the ray equation `psi(t) = lambda q D`.
///
/// For profiles with `D > 0` both roots exist below the admissible lambda
/// threshold and straddle the psi-maximizer; for `D <= 0` the single root
/// (which lands on the plus branch) is stored in `t1` and
/// `t2` is `None`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NehariRoots {
    pub t1: f64,
    pub t2: Option<f64>,
    /// Closed-form critical point of k.
    pub t_m: f64,
    /// Root of k, i.e. the global maximizer of psi.
    pub t_max: f64,
}

/// Compute the profile of a conforming function via the quadrature module.
pub fn fiber_profile(u: &DiscreteFunction, cfg: &ValidatedConfig) -> Result<FiberProfile> {
    let seminorm_p = quadrature::gagliardo_p(u, cfg)?;
    Ok(profile_from_parts(
        seminorm_p,
        quadrature::lp_norm_p(u, cfg.p, cfg),
        quadrature::singular_integral(u, cfg),
        quadrature::f_primitive_integral(u, cfg),
        cfg,
    ))
}

/// Assemble a profile from the four raw integrals.
pub fn profile_from_parts(
    seminorm_p: f64,
    lp_p: f64,
    singular: f64,
    nonlinear: f64,
    cfg: &ValidatedConfig,
) -> FiberProfile {
    FiberProfile {
        energy_p: cfg.a * seminorm_p + lp_p,
        energy_ptheta: seminorm_p.powf(cfg.theta),
        singular,
        nonlinear,
        seminorm_p,
    }
}

/// phi(t) = t^p/p A + b t^{p theta}/(p theta) B - t^{1-a}/(1-a) C - l t^q D.
pub fn phi(pr: &FiberProfile, cfg: &ValidatedConfig, lambda: f64, t: f64) -> f64 {
    let p = cfg.p;
    let pt = cfg.p * cfg.theta;
    let oma = 1.0 - cfg.alpha;
    t.powf(p) / p * pr.energy_p + cfg.b * t.powf(pt) / pt * pr.energy_ptheta
        - t.powf(oma) / oma * pr.singular
        - lambda * t.powf(cfg.q) * pr.nonlinear
}

/// Exact first derivative of phi; needs t > 0 because of the t^{-alpha} term.
pub fn phi_prime(pr: &FiberProfile, cfg: &ValidatedConfig, lambda: f64, t: f64) -> Result<f64> {
    if t <= 0.0 {
        return Err(Error::NonpositiveT(t));
    }
    let p = cfg.p;
    let pt = cfg.p * cfg.theta;
    Ok(
        t.powf(p - 1.0) * pr.energy_p + cfg.b * t.powf(pt - 1.0) * pr.energy_ptheta
            - t.powf(-cfg.alpha) * pr.singular
            - lambda * cfg.q * t.powf(cfg.q - 1.0) * pr.nonlinear,
    )
}

/// Exact second derivative of phi. The leading term carries the full
/// coefficient A (including the factor a), and the singular term contributes
/// `+alpha t^{-alpha-1} C`.
pub fn phi_dprime(pr: &FiberProfile, cfg: &ValidatedConfig, lambda: f64, t: f64) -> Result<f64> {
    if t <= 0.0 {
        return Err(Error::NonpositiveT(t));
    }
    let p = cfg.p;
    let pt = cfg.p * cfg.theta;
    Ok((p - 1.0) * t.powf(p - 2.0) * pr.energy_p
        + cfg.b * (pt - 1.0) * t.powf(pt - 2.0) * pr.energy_ptheta
        + cfg.alpha * t.powf(-cfg.alpha - 1.0) * pr.singular
        - lambda * cfg.q * (cfg.q - 1.0) * t.powf(cfg.q - 2.0) * pr.nonlinear)
}

/// psi(t) = t^{p-q} A + b t^{p theta - q} B - t^{1-alpha-q} C.
pub fn psi(pr: &FiberProfile, cfg: &ValidatedConfig, t: f64) -> f64 {
    let p = cfg.p;
    let pt = cfg.p * cfg.theta;
    let q = cfg.q;
    t.powf(p - q) * pr.energy_p + cfg.b * t.powf(pt - q) * pr.energy_ptheta
        - t.powf(1.0 - cfg.alpha - q) * pr.singular
}

/// psi'(t) = t^{p theta - q - 1} k(t).
pub fn psi_prime(pr: &FiberProfile, cfg: &ValidatedConfig, t: f64) -> f64 {
    let p = cfg.p;
    let pt = cfg.p * cfg.theta;
    let q = cfg.q;
    (p - q) * t.powf(p - q - 1.0) * pr.energy_p
        + cfg.b * (pt - q) * t.powf(pt - q - 1.0) * pr.energy_ptheta
        - (1.0 - cfg.alpha - q) * t.powf(-cfg.alpha - q) * pr.singular
}

/// k(t) = (p-q) t^{p - p theta} A + b (p theta - q) B
///        - (1 - alpha - q) t^{1 - alpha - p theta} C.
pub fn k_fn(pr: &FiberProfile, cfg: &ValidatedConfig, t: f64) -> f64 {
    let p = cfg.p;
    let pt = cfg.p * cfg.theta;
    let q = cfg.q;
    (p - q) * t.powf(p - pt) * pr.energy_p + cfg.b * (pt - q) * pr.energy_ptheta
        - (1.0 - cfg.alpha - q) * t.powf(1.0 - cfg.alpha - pt) * pr.singular
}

pub fn k_prime(pr: &FiberProfile, cfg: &ValidatedConfig, t: f64) -> f64 {
    let p = cfg.p;
    let pt = cfg.p * cfg.theta;
    let q = cfg.q;
    (p - q) * (p - pt) * t.powf(p - pt - 1.0) * pr.energy_p
        - (1.0 - cfg.alpha - q) * (1.0 - cfg.alpha - pt) * t.powf(-cfg.alpha - pt) * pr.singular
}

/// Closed-form critical point of k:
/// `[(p theta + alpha - 1)(q + alpha - 1) C / ((p theta - p)(q - p) A)]^{1/(p + alpha - 1)}`.
pub fn t_m_closed(pr: &FiberProfile, cfg: &ValidatedConfig) -> Result<f64> {
    if pr.energy_p <= 0.0 || pr.singular <= 0.0 {
        return Err(Error::DegenerateProfile(format!(
            "t_m needs A > 0 and C > 0, got A = {}, C = {}",
            pr.energy_p, pr.singular
        )));
    }
    let p = cfg.p;
    let pt = cfg.p * cfg.theta;
    let q = cfg.q;
    let al = cfg.alpha;
    let num = (pt + al - 1.0) * (q + al - 1.0) * pr.singular;
    let den = (pt - p) * (q - p) * pr.energy_p;
    Ok((num / den).powf(1.0 / (p + al - 1.0)))
}

/// psi with the Kirchhoff term dropped: `t^{p-q} A - t^{1-alpha-q} C`.
pub fn psi_bar(pr: &FiberProfile, cfg: &ValidatedConfig, t: f64) -> f64 {
    t.powf(cfg.p - cfg.q) * pr.energy_p - t.powf(1.0 - cfg.alpha - cfg.q) * pr.singular
}

/// Closed form of `max_{t>0} psi_bar(t)`:
/// `A^{(q+a-1)/(p+a-1)} C^{(p-q)/(p+a-1)}
///  ((q-p)/(q+a-1))^{(q+a-1)/(p+a-1)} (p+a-1)/(q-p)`.
pub fn psi_bar_max_closed(pr: &FiberProfile, cfg: &ValidatedConfig) -> Result<f64> {
    if pr.energy_p <= 0.0 || pr.singular <= 0.0 {
        return Err(Error::DegenerateProfile(
            "psi_bar max needs A > 0 and C > 0".into(),
        ));
    }
    let p = cfg.p;
    let q = cfg.q;
    let al = cfg.alpha;
    let e1 = (q + al - 1.0) / (p + al - 1.0);
    let e2 = (p - q) / (p + al - 1.0);
    Ok(pr.energy_p.powf(e1)
        * pr.singular.powf(e2)
        * ((q - p) / (q + al - 1.0)).powf(e1)
        * ((p + al - 1.0) / (q - p)))
}

const BISECT_MAX_ITERS: usize = 200;
const BISECT_REL_WIDTH: f64 = 1e-12;

/// Bisection on a bracketing interval; `f(lo)` and `f(hi)` must have
/// opposite signs.
fn bisect(mut lo: f64, mut hi: f64, f: impl Fn(f64) -> f64) -> f64 {
    let mut flo = f(lo);
    for _ in 0..BISECT_MAX_ITERS {
        if (hi - lo) <= BISECT_REL_WIDTH * hi {
            break;
        }
        let mid = 0.5 * (lo + hi);
        let fm = f(mid);
        if fm == 0.0 {
            return mid;
        }
        if (fm > 0.0) == (flo > 0.0) {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Locate the maximizer of psi (root of k), seeded by the closed-form t_m.
pub fn t_max_root(pr: &FiberProfile, cfg: &ValidatedConfig) -> Result<f64> {
    let t_m = t_m_closed(pr, cfg)?;
    // k > 0 near 0 and k(t_m) < 0 (k decreases to its minimum past the root
    // and tends to the negative Kirchhoff limit)
    let mut lo = t_m * 1e-6;
    let mut tries = 0;
    while k_fn(pr, cfg, lo) <= 0.0 && tries < 8 {
        lo *= 1e-3;
        tries += 1;
    }
    let mut hi = t_m;
    if k_fn(pr, cfg, hi) >= 0.0 {
        // fall back to the wide bracket
        hi = t_m * 1e6;
        if k_fn(pr, cfg, hi) >= 0.0 {
            return Err(Error::NoRootBracket(
                "k does not change sign on (t_m 1e-6, t_m 1e6)".into(),
            ));
        }
    }
    Ok(bisect(lo, hi, |t| k_fn(pr, cfg, t)))
}

/// Roots of `psi(t) = lambda q D` for a fixed profile.
pub fn nehari_roots(pr: &FiberProfile, cfg: &ValidatedConfig, lambda: f64) -> Result<NehariRoots> {
    if pr.is_zero() {
        return Err(Error::DegenerateProfile("zero function has no ray".into()));
    }
    if pr.singular <= 0.0 {
        return Err(Error::DegenerateProfile(
            "ray analysis needs the singular well C > 0".into(),
        ));
    }
    let target = lambda * cfg.q * pr.nonlinear;
    let t_m = t_m_closed(pr, cfg)?;
    let t_max = t_max_root(pr, cfg)?;
    let psi_max = psi(pr, cfg, t_max);

    // ascending root: psi goes to -infinity as t -> 0+, so bracket downward
    let find_ascending = |hi: f64| -> Result<f64> {
        let mut lo = hi * 0.5;
        let mut tries = 0;
        while psi(pr, cfg, lo) >= target {
            lo *= 0.5;
            tries += 1;
            if tries > 2000 {
                return Err(Error::NoRootBracket("no ascending bracket".into()));
            }
        }
        Ok(bisect(lo, hi, |t| psi(pr, cfg, t) - target))
    };

    if pr.nonlinear > 0.0 {
        if psi_max < target {
            return Err(Error::NoRootBracket(format!(
                "psi max {psi_max:e} below lambda q D = {target:e}; lambda too large"
            )));
        }
        let t1 = find_ascending(t_max)?;
        // descending root: psi decays to 0+ past the maximizer while the
        // target stays positive
        let mut hi = t_max * 2.0;
        let mut tries = 0;
        while psi(pr, cfg, hi) > target {
            hi *= 2.0;
            tries += 1;
            if tries > 2000 {
                return Err(Error::NoRootBracket("no descending bracket".into()));
            }
        }
        let t2 = bisect(t_max, hi, |t| psi(pr, cfg, t) - target);
        if !(psi_prime(pr, cfg, t1) > 0.0 && psi_prime(pr, cfg, t2) < 0.0) {
            return Err(Error::NoRootBracket(
                "root sign pattern (+,-) of psi' not met".into(),
            ));
        }
        Ok(NehariRoots {
            t1,
            t2: Some(t2),
            t_m,
            t_max,
        })
    } else {
        // X- ray: one root on the ascending part for any lambda > 0
        let t3 = find_ascending(t_max)?;
        if !(psi_prime(pr, cfg, t3) > 0.0) {
            return Err(Error::NoRootBracket("psi'(t3) <= 0".into()));
        }
        Ok(NehariRoots {
            t1: t3,
            t2: None,
            t_m,
            t_max,
        })
    }
}

/// Nehari membership of u itself (t = 1), with profile-scaled tolerance
/// bands. The zero function is `Zero` by convention.
pub fn classify(u: &DiscreteFunction, cfg: &ValidatedConfig, lambda: f64) -> Result<NehariClass> {
    let pr = fiber_profile(u, cfg)?;
    Ok(classify_profile(&pr, cfg, lambda))
}

pub fn classify_profile(pr: &FiberProfile, cfg: &ValidatedConfig, lambda: f64) -> NehariClass {
    if pr.is_zero() {
        return NehariClass::Zero;
    }
    let tol = 1e-9 * pr.tol_scale(cfg);
    let d1 = phi_prime(pr, cfg, lambda, 1.0).expect("t = 1");
    if d1.abs() > tol {
        return NehariClass::Off;
    }
    let d2 = phi_dprime(pr, cfg, lambda, 1.0).expect("t = 1");
    if d2 > tol {
        NehariClass::Plus
    } else if d2 < -tol {
        NehariClass::Minus
    } else {
        NehariClass::Zero
    }
}

/// Scale u onto the requested branch of its ray.
pub fn project(
    u: &DiscreteFunction,
    cfg: &ValidatedConfig,
    lambda: f64,
    branch: crate::solver::Branch,
) -> Result<DiscreteFunction> {
    let pr = fiber_profile(u, cfg)?;
    let t = project_scale(&pr, cfg, lambda, branch)?;
    Ok(u.scale(t))
}

/// The scaling factor alone (reusable when the profile is already known).
pub fn project_scale(
    pr: &FiberProfile,
    cfg: &ValidatedConfig,
    lambda: f64,
    branch: crate::solver::Branch,
) -> Result<f64> {
    let roots = nehari_roots(pr, cfg, lambda)?;
    match branch {
        crate::solver::Branch::Plus => Ok(roots.t1),
        crate::solver::Branch::Minus => roots
            .t2
            .ok_or_else(|| Error::NoRootBracket("ray has no minus-branch root (D <= 0)".into())),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::Mesh1d;
    use crate::problem::{validate_config, ProblemConfig, WeightSpec};
    use crate::solver::Branch;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn desk() -> ValidatedConfig {
        validate_config(ProblemConfig::default()).unwrap()
    }

    fn desk_lambda(lambda: f64) -> ValidatedConfig {
        let mut cfg = ProblemConfig::default();
        cfg.lambda = lambda;
        validate_config(cfg).unwrap()
    }

    fn profile(a: f64, b: f64, c: f64, d: f64) -> FiberProfile {
        FiberProfile {
            energy_p: a,
            energy_ptheta: b,
            singular: c,
            nonlinear: d,
            seminorm_p: a,
        }
    }

    fn random_admissible(rng: &mut ChaCha8Rng) -> FiberProfile {
        profile(
            rng.gen_range(0.1..5.0),
            rng.gen_range(0.1..5.0),
            rng.gen_range(0.1..5.0),
            rng.gen_range(-2.0..2.0),
        )
    }

    fn bump(mesh: Mesh1d) -> DiscreteFunction {
        DiscreteFunction::sample_zero_boundary(mesh, |x| {
            let r = (1.0 - x * x).max(0.0);
            r * r
        })
    }

    #[test]
    fn zero_profile() {
        let cfg = desk();
        let u = DiscreteFunction::zeros(Mesh1d::new(-1.0, 1.0, 17));
        let pr = fiber_profile(&u, &cfg).unwrap();
        assert_eq!(
            (pr.energy_p, pr.energy_ptheta, pr.singular, pr.nonlinear),
            (0.0, 0.0, 0.0, 0.0)
        );
        assert_eq!(classify(&u, &cfg, 0.1).unwrap(), NehariClass::Zero);
    }

    #[test]
    fn two_term_phi_value() {
        // C = D = 0, A = B = 1, p = 2, theta = 1.5, b = 1, t = 1:
        // phi = 1/2 + 1/3
        let cfg = desk();
        let pr = profile(1.0, 1.0, 0.0, 0.0);
        let v = phi(&pr, &cfg, 1.0, 1.0);
        assert!((v - (0.5 + 1.0 / 3.0)).abs() < 1e-15);
    }

    #[test]
    fn energy_equals_phi_at_one() {
        let cfg = desk_lambda(0.05);
        let u = bump(Mesh1d::new(-1.0, 1.0, 33));
        let pr = fiber_profile(&u, &cfg).unwrap();
        // J(u) assembled directly from its four integrals
        let j = quadrature::gagliardo_p(&u, &cfg)
            .map(|g| {
                cfg.a * g / cfg.p
                    + quadrature::lp_norm_p(&u, cfg.p, &cfg) / cfg.p
                    + cfg.b * g.powf(cfg.theta) / (cfg.p * cfg.theta)
                    - quadrature::singular_integral(&u, &cfg) / (1.0 - cfg.alpha)
                    - cfg.lambda * quadrature::f_primitive_integral(&u, &cfg)
            })
            .unwrap();
        let v = phi(&pr, &cfg, cfg.lambda, 1.0);
        assert!((j - v).abs() <= 1e-12 * j.abs().max(1.0));
    }

    #[test]
    fn derivatives_match_central_differences() {
        let cfg = desk();
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let h = 1e-5;
        for _ in 0..50 {
            let pr = random_admissible(&mut rng);
            let lambda = rng.gen_range(0.01..1.0);
            let t = rng.gen_range(0.2..3.0);
            let d1 = phi_prime(&pr, &cfg, lambda, t).unwrap();
            let fd1 = (phi(&pr, &cfg, lambda, t + h) - phi(&pr, &cfg, lambda, t - h)) / (2.0 * h);
            let scale = 1.0 + phi(&pr, &cfg, lambda, t).abs();
            assert!((d1 - fd1).abs() <= 1e-6 * scale, "d1={d1} fd={fd1}");
            let d2 = phi_dprime(&pr, &cfg, lambda, t).unwrap();
            let fd2 = (phi_prime(&pr, &cfg, lambda, t + h).unwrap()
                - phi_prime(&pr, &cfg, lambda, t - h).unwrap())
                / (2.0 * h);
            assert!(
                (d2 - fd2).abs() <= 1e-5 * (1.0 + d2.abs()),
                "d2={d2} fd={fd2}"
            );
        }
    }

    #[test]
    fn nonpositive_t_rejected() {
        let cfg = desk();
        let pr = profile(1.0, 1.0, 1.0, 1.0);
        assert!(matches!(
            phi_prime(&pr, &cfg, 1.0, 0.0),
            Err(Error::NonpositiveT(_))
        ));
        assert!(matches!(
            phi_dprime(&pr, &cfg, 1.0, -1.0),
            Err(Error::NonpositiveT(_))
        ));
    }

    #[test]
    fn singular_term_dominates_near_zero() {
        // phi < 0 for tiny t when C > 0
        let cfg = desk();
        let pr = profile(1.0, 1.0, 1.0, 1.0);
        assert!(phi(&pr, &cfg, 1.0, 1e-6) < 0.0);
    }

    #[test]
    fn nehari_identity() {
        // t^{1-q} phi'(t) = psi(t) - lambda q D
        let cfg = desk();
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        for _ in 0..100 {
            let pr = random_admissible(&mut rng);
            let lambda = rng.gen_range(0.01..1.0);
            let t = rng.gen_range(0.1..5.0);
            let lhs = phi_prime(&pr, &cfg, lambda, t).unwrap() * t.powf(1.0 - cfg.q);
            let rhs = psi(&pr, &cfg, t) - lambda * cfg.q * pr.nonlinear;
            assert!(
                (lhs - rhs).abs() <= 1e-10 * lhs.abs().max(rhs.abs()).max(1e-12),
                "lhs={lhs} rhs={rhs}"
            );
        }
    }

    #[test]
    fn psi_limits() {
        let cfg = desk();
        let pr = profile(1.0, 1.0, 1.0, 0.0);
        assert!(psi(&pr, &cfg, 1e-8) < -1e10);
        // psi -> 0 from above at infinity; the Kirchhoff term decays slowest
        // (t^{p theta - q} = t^{-1} at desk exponents, so |psi(1e8)| ~ 1e-8)
        let tail = psi(&pr, &cfg, 1e8);
        assert!(tail.abs() < 2e-8, "tail={tail}");
        assert!(tail > 0.0);
        // monotone decay along the tail
        assert!(psi(&pr, &cfg, 1e4).abs() > tail.abs());
    }

    #[test]
    fn t_m_matches_numeric_k_prime_root() {
        let cfg = desk();
        let mut rng = ChaCha8Rng::seed_from_u64(29);
        for _ in 0..50 {
            let pr = random_admissible(&mut rng);
            let tm = t_m_closed(&pr, &cfg).unwrap();
            // bisection on k' around the closed form
            let mut lo = tm * 1e-3;
            let mut hi = tm * 1e3;
            assert!(k_prime(&pr, &cfg, lo) < 0.0 && k_prime(&pr, &cfg, hi) > 0.0);
            for _ in 0..200 {
                let mid = 0.5 * (lo + hi);
                if k_prime(&pr, &cfg, mid) < 0.0 {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            let numeric = 0.5 * (lo + hi);
            assert!(
                (numeric - tm).abs() <= 1e-8 * tm,
                "numeric={numeric} closed={tm}"
            );
        }
    }

    #[test]
    fn degenerate_profile_rejected() {
        let cfg = desk();
        assert!(matches!(
            t_m_closed(&profile(0.0, 1.0, 1.0, 1.0), &cfg),
            Err(Error::DegenerateProfile(_))
        ));
        assert!(matches!(
            t_m_closed(&profile(1.0, 1.0, 0.0, 1.0), &cfg),
            Err(Error::DegenerateProfile(_))
        ));
    }

    #[test]
    fn psi_bar_max_closed_form_matches_grid() {
        let cfg = desk();
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        for _ in 0..20 {
            let pr = random_admissible(&mut rng);
            let closed = psi_bar_max_closed(&pr, &cfg).unwrap();
            // numeric max on a log grid refined around the best point
            let mut best = f64::NEG_INFINITY;
            let mut best_t = 1.0;
            for i in 0..4000 {
                let t = 10f64.powf(-4.0 + 8.0 * i as f64 / 3999.0);
                let v = psi_bar(&pr, &cfg, t);
                if v > best {
                    best = v;
                    best_t = t;
                }
            }
            for i in 0..4000 {
                let t = best_t * (0.99 + 0.02 * i as f64 / 3999.0);
                best = best.max(psi_bar(&pr, &cfg, t));
            }
            assert!(
                (best - closed).abs() <= 1e-8 * closed.abs(),
                "grid={best} closed={closed}"
            );
        }
    }

    #[test]
    fn two_roots_straddle_t_max() {
        let cfg = desk();
        let mesh = Mesh1d::new(-1.0, 1.0, 65);
        let u = bump(mesh);
        let pr = fiber_profile(&u, &cfg).unwrap();
        // pick a lambda comfortably below the ray's own critical level
        let t_max = t_max_root(&pr, &cfg).unwrap();
        let lambda_crit = psi(&pr, &cfg, t_max) / (cfg.q * pr.nonlinear);
        let lambda = 0.5 * lambda_crit;
        let roots = nehari_roots(&pr, &cfg, lambda).unwrap();
        let t2 = roots.t2.unwrap();
        assert!(0.0 < roots.t1 && roots.t1 < roots.t_max && roots.t_max < t2);
        assert!(psi_prime(&pr, &cfg, roots.t1) > 0.0);
        assert!(psi_prime(&pr, &cfg, t2) < 0.0);
        // slightly above the critical level the bracket must fail
        assert!(matches!(
            nehari_roots(&pr, &cfg, 1.01 * lambda_crit),
            Err(Error::NoRootBracket(_))
        ));
    }

    #[test]
    fn x_minus_ray_has_single_ascending_root() {
        // sign-flipped weight makes \int F < 0 for a bump in the negative
        // region
        let mut raw = ProblemConfig::default();
        raw.w_weight = WeightSpec::SignFlip {
            amp: 1.0,
            split: -0.5,
        };
        let cfg = validate_config(raw).unwrap();
        let mesh = Mesh1d::new(-1.0, 1.0, 65);
        let u = DiscreteFunction::sample_zero_boundary(mesh, |x| {
            let r = (1.0 - 4.0 * x * x).max(0.0); // supported on (-1/2, 1/2)
            r * r
        });
        let pr = fiber_profile(&u, &cfg).unwrap();
        assert!(pr.nonlinear < 0.0, "D = {}", pr.nonlinear);
        for lambda in [0.01, 1.0, 100.0] {
            let roots = nehari_roots(&pr, &cfg, lambda).unwrap();
            assert!(roots.t2.is_none());
            assert!(psi_prime(&pr, &cfg, roots.t1) > 0.0);
            // t3 lands on the plus branch
            let v = u.scale(roots.t1);
            assert_eq!(classify(&v, &cfg, lambda).unwrap(), NehariClass::Plus);
        }
    }

    #[test]
    fn manifold_second_derivative_identity() {
        // phi''(t) = t^{q-1} psi'(t) at any root of psi(t) = lambda q D
        let cfg = desk();
        let mut rng = ChaCha8Rng::seed_from_u64(37);
        let mut checked = 0;
        while checked < 50 {
            let pr = {
                let mut p = random_admissible(&mut rng);
                p.nonlinear = rng.gen_range(0.01..1.0);
                p
            };
            let t_max = t_max_root(&pr, &cfg).unwrap();
            let lambda = 0.5 * psi(&pr, &cfg, t_max) / (cfg.q * pr.nonlinear);
            if lambda <= 0.0 {
                continue;
            }
            let roots = nehari_roots(&pr, &cfg, lambda).unwrap();
            for t in [roots.t1, roots.t2.unwrap()] {
                let lhs = phi_dprime(&pr, &cfg, lambda, t).unwrap();
                let rhs = t.powf(cfg.q - 1.0) * psi_prime(&pr, &cfg, t);
                assert!(
                    (lhs - rhs).abs() <= 1e-8 * (1.0 + lhs.abs()),
                    "lhs={lhs} rhs={rhs}"
                );
            }
            checked += 1;
        }
    }

    #[test]
    fn projection_classification_round_trip() {
        let cfg = desk_lambda(0.002);
        let mesh = Mesh1d::new(-1.0, 1.0, 65);
        let u = bump(mesh);
        let up = project(&u, &cfg, cfg.lambda, Branch::Plus).unwrap();
        assert_eq!(classify(&up, &cfg, cfg.lambda).unwrap(), NehariClass::Plus);
        let um = project(&u, &cfg, cfg.lambda, Branch::Minus).unwrap();
        assert_eq!(classify(&um, &cfg, cfg.lambda).unwrap(), NehariClass::Minus);
        // scaling off the manifold is detected
        assert_eq!(
            classify(&up.scale(2.0), &cfg, cfg.lambda).unwrap(),
            NehariClass::Off
        );
        assert_eq!(
            classify(&up.scale(0.5), &cfg, cfg.lambda).unwrap(),
            NehariClass::Off
        );
        // idempotency: re-projecting lands at t = 1
        let pr = fiber_profile(&up, &cfg).unwrap();
        let roots = nehari_roots(&pr, &cfg, cfg.lambda).unwrap();
        assert!((roots.t1 - 1.0).abs() <= 1e-8);
        let prm = fiber_profile(&um, &cfg).unwrap();
        let rootsm = nehari_roots(&prm, &cfg, cfg.lambda).unwrap();
        assert!((rootsm.t2.unwrap() - 1.0).abs() <= 1e-8);
    }

    #[test]
    fn projection_grid_extremality() {
        let cfg = desk_lambda(0.002);
        let mesh = Mesh1d::new(-1.0, 1.0, 65);
        let u = bump(mesh);
        let pr = fiber_profile(&u, &cfg).unwrap();
        let roots = nehari_roots(&pr, &cfg, cfg.lambda).unwrap();
        let t1 = roots.t1;
        let t2 = roots.t2.unwrap();
        let phi1 = phi(&pr, &cfg, cfg.lambda, t1);
        for i in 1..=100 {
            let t = t1 / 10.0 + (t1 - t1 / 10.0) * i as f64 / 100.0;
            assert!(phi(&pr, &cfg, cfg.lambda, t) >= phi1 - 1e-10);
        }
        let phi2 = phi(&pr, &cfg, cfg.lambda, t2);
        for i in 0..=100 {
            let t = roots.t_max + (10.0 * t2 - roots.t_max) * i as f64 / 100.0;
            assert!(phi(&pr, &cfg, cfg.lambda, t) <= phi2 + 1e-10);
        }
    }
}
