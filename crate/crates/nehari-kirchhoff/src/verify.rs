//! Seeded property suites aggregating every module's invariants, plus the
//! dense brute-force quadrature oracles they check against. The table output
//! is fully determined by (config, seed, mesh), independent of worker count,
//! so runs can be compared bitwise.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::fiber::{self, NehariClass};
use crate::mesh::{DiscreteFunction, Mesh1d};
use crate::nonlinearity::NonlinearitySpec;
use crate::problem::{validate_config, ValidatedConfig, WeightSpec};
use crate::quadrature;
use crate::solver::{self, Branch, SolverOptions};
use crate::thresholds;
use crate::{extremal, Result};

/// Brute-force reference quadrature, kept independent of the production
/// assembly (dense midpoint double sums on a refined grid).
pub mod oracle {
    use super::*;

    fn midpoints(mesh: &Mesh1d, refine: usize) -> (Vec<f64>, f64) {
        let m = mesh.n_cells() * refine;
        let hf = mesh.measure() / m as f64;
        let xs = (0..m).map(|i| mesh.lo + (i as f64 + 0.5) * hf).collect();
        (xs, hf)
    }

    /// Interior double integral with pairs inside the same coarse cell
    /// excluded, plus the midpoint exterior correction. Compare against
    /// `gagliardo_parts(u).cross + .exterior`.
    pub fn gagliardo_p_oracle(u: &DiscreteFunction, cfg: &ValidatedConfig, refine: usize) -> f64 {
        weak_pairing_oracle(u, u, cfg, refine)
    }

    pub fn weak_pairing_oracle(
        u: &DiscreteFunction,
        v: &DiscreteFunction,
        cfg: &ValidatedConfig,
        refine: usize,
    ) -> f64 {
        let (xs, hf) = midpoints(&u.mesh, refine);
        let m = xs.len();
        let p = cfg.p;
        let ps = cfg.p * cfg.s;
        let uv: Vec<f64> = xs.iter().map(|&x| u.eval(x)).collect();
        let vv: Vec<f64> = xs.iter().map(|&x| v.eval(x)).collect();
        let mut acc = 0.0;
        for i in 0..m {
            for j in 0..m {
                if i / refine == j / refine {
                    continue;
                }
                let du = uv[i] - uv[j];
                if du == 0.0 {
                    continue;
                }
                let dv = vv[i] - vv[j];
                let dist = (xs[i] - xs[j]).abs();
                acc += du.abs().powf(p - 2.0) * du * dv * hf * hf * dist.powf(-1.0 - ps);
            }
        }
        if cfg.quad.exterior_correction {
            for i in 0..m {
                if uv[i] == 0.0 {
                    continue;
                }
                let rho = quadrature::exterior_density(xs[i], cfg).expect("midpoint interior");
                acc += 2.0 * uv[i].abs().powf(p - 2.0) * uv[i] * vv[i] * rho * hf;
            }
        }
        acc
    }

    pub fn lp_norm_oracle(u: &DiscreteFunction, r: f64, refine: usize) -> f64 {
        let (xs, hf) = midpoints(&u.mesh, refine);
        xs.iter()
            .map(|&x| {
                let ux = u.eval(x).abs();
                if ux == 0.0 {
                    0.0
                } else {
                    ux.powf(r) * hf
                }
            })
            .sum()
    }

    pub fn singular_oracle(u: &DiscreteFunction, cfg: &ValidatedConfig, refine: usize) -> f64 {
        let (xs, hf) = midpoints(&u.mesh, refine);
        xs.iter()
            .map(|&x| {
                let up = u.eval(x).max(0.0);
                if up == 0.0 {
                    0.0
                } else {
                    cfg.c_at(x) * up.powf(1.0 - cfg.alpha) * hf
                }
            })
            .sum()
    }

    pub fn f_primitive_oracle(u: &DiscreteFunction, cfg: &ValidatedConfig, refine: usize) -> f64 {
        let (xs, hf) = midpoints(&u.mesh, refine);
        xs.iter()
            .map(|&x| {
                let up = u.eval(x).max(0.0);
                if up == 0.0 {
                    0.0
                } else {
                    cfg.w_at(x) * up.powf(cfg.q) / cfg.q * hf
                }
            })
            .sum()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CheckOutcome {
    pub name: &'static str,
    pub passed: bool,
    pub checks: usize,
    /// Worst margin observed (meaning depends on the check; smaller is
    /// tighter unless noted).
    pub worst: f64,
    pub note: String,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct VerifyReport {
    pub outcomes: Vec<CheckOutcome>,
}

impl VerifyReport {
    pub fn all_passed(&self) -> bool {
        self.outcomes.iter().all(|o| o.passed)
    }

    pub fn render_table(&self) -> String {
        let mut out = String::new();
        out.push_str("status  check                           checks  worst-margin   note\n");
        for o in &self.outcomes {
            out.push_str(&format!(
                "{}  {:<30}  {:>6}  {:>13.6e}  {}\n",
                if o.passed { "PASS  " } else { "FAIL  " },
                o.name,
                o.checks,
                o.worst,
                o.note
            ));
        }
        out
    }
}

fn random_conforming(mesh: Mesh1d, rng: &mut ChaCha8Rng) -> DiscreteFunction {
    let mut vals: Vec<f64> = (0..mesh.n_nodes)
        .map(|_| rng.gen_range(-1.0..1.0))
        .collect();
    vals[0] = 0.0;
    let last = mesh.n_nodes - 1;
    vals[last] = 0.0;
    DiscreteFunction::new(mesh, vals)
}

fn random_bump(cfg: &ValidatedConfig, mesh: Mesh1d, rng: &mut ChaCha8Rng) -> DiscreteFunction {
    let (lo, hi) = cfg.domain;
    let half = 0.5 * (hi - lo);
    let center = 0.5 * (lo + hi) + rng.gen_range(-0.4..0.4) * half;
    let width = rng.gen_range(0.2..0.6) * half;
    let amp = rng.gen_range(0.5..2.0);
    DiscreteFunction::sample_zero_boundary(mesh, |x| {
        let r = (x - center) / width;
        amp * (1.0 - r * r).max(0.0).powi(2)
    })
}

fn hat9(cfg: &ValidatedConfig) -> DiscreteFunction {
    let mesh = Mesh1d::new(cfg.domain.0, cfg.domain.1, 9);
    let mut vals = vec![0.0; 9];
    vals[4] = 1.0;
    DiscreteFunction::new(mesh, vals)
}

struct Suite {
    rng: ChaCha8Rng,
    outcomes: Vec<CheckOutcome>,
}

impl Suite {
    fn record(
        &mut self,
        name: &'static str,
        passed: bool,
        checks: usize,
        worst: f64,
        note: String,
    ) {
        self.outcomes.push(CheckOutcome {
            name,
            passed,
            checks,
            worst,
            note,
        });
    }
}

fn check_core(s: &mut Suite, cfg: &ValidatedConfig) {
    // exponent chain as pure arithmetic
    let chain = cfg.alpha < 1.0
        && 1.0 < cfg.p * cfg.theta
        && cfg.p * cfg.theta < cfg.q
        && cfg.q <= cfg.p_star * (1.0 + 1e-12);
    s.record(
        "core-exponent-chain",
        chain,
        4,
        0.0,
        "alpha < 1 < p theta < q <= p*_s".into(),
    );

    let sp = NonlinearitySpec::from_config(cfg);
    let mut worst = 0.0f64;
    let mut ok = true;
    for _ in 0..1000 {
        let x = s.rng.gen_range(cfg.domain.0..cfg.domain.1);
        let u = s.rng.gen_range(-5.0..5.0);
        let lhs = sp.q * sp.f_primitive(x, u);
        let rhs = u * sp.f_eval(x, u);
        let rel = (lhs - rhs).abs() / lhs.abs().max(rhs.abs()).max(1e-300);
        worst = worst.max(rel);
        ok &= rel <= 1e-12;
    }
    s.record("core-euler-identity", ok, 1000, worst, "q F = u f".into());

    let mut worst_h = 0.0f64;
    let mut ok_h = true;
    for _ in 0..200 {
        let x = s.rng.gen_range(cfg.domain.0..cfg.domain.1);
        let u = s.rng.gen_range(-3.0..3.0);
        for t in [0.5, 2.0, 10.0] {
            let lhs = sp.f_primitive(x, t * u);
            let rhs = t.powf(sp.q) * sp.f_primitive(x, u);
            let rel = (lhs - rhs).abs() / lhs.abs().max(rhs.abs()).max(1e-300);
            worst_h = worst_h.max(rel);
            ok_h &= rel <= 1e-12;
        }
    }
    s.record(
        "core-homogeneity",
        ok_h,
        600,
        worst_h,
        "F(t u) = t^q F(u)".into(),
    );

    let mesh = Mesh1d::new(cfg.domain.0, cfg.domain.1, 17);
    let mut ok_s = true;
    let mut worst_s = f64::NEG_INFINITY;
    for _ in 0..100 {
        let u = random_conforming(mesh, &mut s.rng);
        let um = u.negative_part();
        let up = u.positive_part();
        for i in 0..mesh.n_nodes {
            for j in 0..mesh.n_nodes {
                let du = u.values[i] - u.values[j];
                let dm = um.values[i] - um.values[j];
                let dp = up.values[i] - up.values[j];
                let g1 = du * dm + dm * dm; // <= 0 required
                let g2 = du * dp - du * du; // <= 0 required
                worst_s = worst_s.max(g1).max(g2);
                ok_s &= g1 <= 1e-15 && g2 <= 1e-15;
            }
        }
    }
    s.record(
        "core-sign-split",
        ok_s,
        100 * 17 * 17,
        worst_s,
        "pairwise u+/u- inequalities".into(),
    );
}

fn check_quadrature(s: &mut Suite, cfg: &ValidatedConfig) {
    let mesh = Mesh1d::new(cfg.domain.0, cfg.domain.1, 33);
    let u = random_bump(cfg, mesh, &mut s.rng);
    let mut worst = 0.0f64;
    let mut ok = true;
    {
        let g1 = quadrature::gagliardo_p(&u, cfg).unwrap();
        let g3 = quadrature::gagliardo_p(&u.scale(3.0), cfg).unwrap();
        let rel = (g3 - 3f64.powf(cfg.p) * g1).abs() / g3.abs().max(1e-300);
        worst = worst.max(rel);
        ok &= rel <= 1e-10;
        let l1 = quadrature::lp_norm_p(&u, cfg.q, cfg);
        let l2 = quadrature::lp_norm_p(&u.scale(2.0), cfg.q, cfg);
        let rel = (l2 - 2f64.powf(cfg.q) * l1).abs() / l2.abs().max(1e-300);
        worst = worst.max(rel);
        ok &= rel <= 1e-10;
        let s1 = quadrature::singular_integral(&u, cfg);
        let s4 = quadrature::singular_integral(&u.scale(4.0), cfg);
        let rel = (s4 - 4f64.powf(1.0 - cfg.alpha) * s1).abs() / s4.abs().max(1e-300);
        worst = worst.max(rel);
        ok &= rel <= 1e-10;
        let f1 = quadrature::f_primitive_integral(&u, cfg);
        let f2 = quadrature::f_primitive_integral(&u.scale(2.0), cfg);
        let rel = (f2 - 2f64.powf(cfg.q) * f1).abs() / f2.abs().max(1e-300);
        worst = worst.max(rel);
        ok &= rel <= 1e-10;
    }
    s.record(
        "quad-homogeneity",
        ok,
        4,
        worst,
        "t^p, t^r, t^{1-a}, t^q scalings".into(),
    );

    // oracle equivalence on the 9-node hat; the midpoint reference needs
    // 40x sub-sampling to be a fair 1% yardstick for integrands up to
    // power q (the acceptance gate pins 10x at its own q = 4 config)
    let hat = hat9(cfg);
    let refine = 40;
    let mut worst_o = 0.0f64;
    let mut ok_o = true;
    {
        let parts = quadrature::gagliardo_parts(&hat, cfg).unwrap();
        let orc = oracle::gagliardo_p_oracle(&hat, cfg, refine);
        let rel = ((parts.cross + parts.exterior) - orc).abs() / orc.abs();
        worst_o = worst_o.max(rel);
        ok_o &= rel <= 0.01;
        // fixed second slot for the pairing check (cancellation-free)
        let v =
            DiscreteFunction::sample_zero_boundary(hat.mesh, |x| (1.0 - x * x).max(0.0).powi(2));
        let pair = quadrature::weak_pairing_parts(&hat, &v, cfg).unwrap();
        let orc = oracle::weak_pairing_oracle(&hat, &v, cfg, refine);
        let rel = ((pair.cross + pair.exterior) - orc).abs() / orc.abs().max(1e-12);
        worst_o = worst_o.max(rel);
        ok_o &= rel <= 0.01;
        for (mine, orc) in [
            (
                quadrature::lp_norm_p(&hat, cfg.p, cfg),
                oracle::lp_norm_oracle(&hat, cfg.p, refine),
            ),
            (
                quadrature::singular_integral(&hat, cfg),
                oracle::singular_oracle(&hat, cfg, refine),
            ),
            (
                quadrature::f_primitive_integral(&hat, cfg),
                oracle::f_primitive_oracle(&hat, cfg, refine),
            ),
        ] {
            let rel = (mine - orc).abs() / orc.abs().max(1e-12);
            worst_o = worst_o.max(rel);
            ok_o &= rel <= 0.01;
        }
    }
    s.record(
        "quad-oracle-equivalence",
        ok_o,
        5,
        worst_o,
        "dense 40x midpoint oracle, 1%".into(),
    );

    // pairing/norm identity and p=2 symmetry
    let mut ok_p = true;
    let mut worst_p = 0.0f64;
    for _ in 0..5 {
        let a = random_conforming(mesh, &mut s.rng);
        let b = random_conforming(mesh, &mut s.rng);
        let norm = quadrature::gagliardo_p(&a, cfg).unwrap();
        let pair = quadrature::weak_pairing(&a, &a, cfg).unwrap();
        ok_p &= norm == pair;
        let l = quadrature::weak_pairing(&a, &b, cfg).unwrap();
        if cfg.p == 2.0 {
            let r = quadrature::weak_pairing(&b, &a, cfg).unwrap();
            let rel = (l - r).abs() / l.abs().max(1.0);
            worst_p = worst_p.max(rel);
            ok_p &= rel <= 1e-12;
        }
    }
    s.record(
        "quad-pairing-norm",
        ok_p,
        10,
        worst_p,
        "<u,u> = ||u||^p, symmetry at p=2".into(),
    );

    // refinement consistency on a smooth profile
    let profile = |x: f64| {
        let t = (x - cfg.domain.0) / cfg.omega_measure;
        (std::f64::consts::PI * t).sin().powi(2)
    };
    let reference = {
        let fine = DiscreteFunction::sample_zero_boundary(
            Mesh1d::new(cfg.domain.0, cfg.domain.1, 513),
            profile,
        );
        quadrature::gagliardo_p(&fine, cfg).unwrap()
    };
    let mut pts = Vec::new();
    for n in [17usize, 33, 65, 129] {
        let u = DiscreteFunction::sample_zero_boundary(
            Mesh1d::new(cfg.domain.0, cfg.domain.1, n),
            profile,
        );
        let v = quadrature::gagliardo_p(&u, cfg).unwrap();
        let h = cfg.omega_measure / (n - 1) as f64;
        pts.push((h.ln(), (v - reference).abs().max(1e-300).ln()));
    }
    let m = pts.len() as f64;
    let sx: f64 = pts.iter().map(|p| p.0).sum();
    let sy: f64 = pts.iter().map(|p| p.1).sum();
    let sxx: f64 = pts.iter().map(|p| p.0 * p.0).sum();
    let sxy: f64 = pts.iter().map(|p| p.0 * p.1).sum();
    let slope = (m * sxy - sx * sy) / (m * sxx - sx * sx);
    s.record(
        "quad-refinement-order",
        slope >= 0.9,
        4,
        slope,
        "observed order over 4 refinements".into(),
    );
}

fn random_profile(s: &mut Suite) -> fiber::FiberProfile {
    fiber::FiberProfile {
        energy_p: s.rng.gen_range(0.1..5.0),
        energy_ptheta: s.rng.gen_range(0.1..5.0),
        singular: s.rng.gen_range(0.1..5.0),
        nonlinear: s.rng.gen_range(-2.0..2.0),
        seminorm_p: 1.0,
    }
}

fn check_fiber(s: &mut Suite, cfg: &ValidatedConfig, s_p: f64) {
    // derivative consistency
    let mut ok = true;
    let mut worst = 0.0f64;
    let h = 1e-5;
    for _ in 0..50 {
        let pr = random_profile(s);
        let lambda = s.rng.gen_range(0.01..1.0);
        let t = s.rng.gen_range(0.2..3.0);
        let d1 = fiber::phi_prime(&pr, cfg, lambda, t).unwrap();
        let fd =
            (fiber::phi(&pr, cfg, lambda, t + h) - fiber::phi(&pr, cfg, lambda, t - h)) / (2.0 * h);
        let err = (d1 - fd).abs() / (1.0 + fiber::phi(&pr, cfg, lambda, t).abs());
        worst = worst.max(err);
        ok &= err <= 1e-6;
    }
    s.record(
        "fiber-derivatives",
        ok,
        50,
        worst,
        "phi' vs central differences".into(),
    );

    // closed-form t_m against the numeric k' root
    let mut ok_tm = true;
    let mut worst_tm = 0.0f64;
    for _ in 0..50 {
        let pr = random_profile(s);
        let tm = fiber::t_m_closed(&pr, cfg).unwrap();
        let (mut lo, mut hi) = (tm * 1e-3, tm * 1e3);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if fiber::k_prime(&pr, cfg, mid) < 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let rel = (0.5 * (lo + hi) - tm).abs() / tm;
        worst_tm = worst_tm.max(rel);
        ok_tm &= rel <= 1e-8;
    }
    s.record(
        "fiber-tm-closed-form",
        ok_tm,
        50,
        worst_tm,
        "k' root vs display".into(),
    );

    // psi-bar maximum closed form
    let mut ok_pb = true;
    let mut worst_pb = 0.0f64;
    for _ in 0..20 {
        let pr = random_profile(s);
        let closed = fiber::psi_bar_max_closed(&pr, cfg).unwrap();
        let mut best = f64::NEG_INFINITY;
        let mut best_t = 1.0;
        for i in 0..4000 {
            let t = 10f64.powf(-4.0 + 8.0 * i as f64 / 3999.0);
            let v = fiber::psi_bar(&pr, cfg, t);
            if v > best {
                best = v;
                best_t = t;
            }
        }
        for i in 0..4000 {
            let t = best_t * (0.99 + 0.02 * i as f64 / 3999.0);
            best = best.max(fiber::psi_bar(&pr, cfg, t));
        }
        let rel = (best - closed).abs() / closed.abs();
        worst_pb = worst_pb.max(rel);
        ok_pb &= rel <= 1e-8;
    }
    s.record(
        "fiber-psibar-max",
        ok_pb,
        20,
        worst_pb,
        "grid max vs closed form".into(),
    );

    // two-root structure at 0.9 lambda*, single root on X- rays
    let mesh = Mesh1d::new(cfg.domain.0, cfg.domain.1, 65);
    let lam = 0.9 * thresholds::lambda_star(cfg, s_p);
    let mut ok_r = true;
    let mut worst_r = f64::INFINITY;
    let mut count = 0;
    for _ in 0..20 {
        let u = random_bump(cfg, mesh, &mut s.rng);
        let pr = fiber::fiber_profile(&u, cfg).unwrap();
        if pr.nonlinear <= 0.0 {
            continue;
        }
        count += 1;
        match fiber::nehari_roots(&pr, cfg, lam) {
            Ok(r) => {
                let t2 = r.t2.unwrap_or(f64::NAN);
                let ordered = r.t1 > 0.0 && r.t1 < r.t_max && r.t_max < t2;
                let signs =
                    fiber::psi_prime(&pr, cfg, r.t1) > 0.0 && fiber::psi_prime(&pr, cfg, t2) < 0.0;
                ok_r &= ordered && signs;
                worst_r = worst_r.min(t2 - r.t1);
                // manifold identity at both roots
                for t in [r.t1, t2] {
                    let lhs = fiber::phi_dprime(&pr, cfg, lam, t).unwrap();
                    let rhs = t.powf(cfg.q - 1.0) * fiber::psi_prime(&pr, cfg, t);
                    ok_r &= (lhs - rhs).abs() <= 1e-8 * (1.0 + lhs.abs());
                }
            }
            Err(_) => ok_r = false,
        }
    }
    // X- rays through a sign-flipped weight variant
    let mut raw = (**cfg).clone();
    raw.w_weight = WeightSpec::SignFlip {
        amp: 1.0,
        split: cfg.domain.0 + 0.25 * cfg.omega_measure,
    };
    if let Ok(cfg_neg) = validate_config(raw) {
        for _ in 0..5 {
            let u = {
                let c = cfg.domain.1 - 0.3 * cfg.omega_measure;
                let w = 0.1 * cfg.omega_measure;
                DiscreteFunction::sample_zero_boundary(mesh, |x| {
                    let r = (x - c) / w;
                    (1.0 - r * r).max(0.0).powi(2)
                })
            };
            let pr = fiber::fiber_profile(&u, &cfg_neg).unwrap();
            if pr.nonlinear >= 0.0 {
                continue;
            }
            count += 1;
            match fiber::nehari_roots(&pr, &cfg_neg, lam) {
                Ok(r) => {
                    ok_r &= r.t2.is_none() && fiber::psi_prime(&pr, &cfg_neg, r.t1) > 0.0;
                }
                Err(_) => ok_r = false,
            }
        }
    }
    s.record(
        "fiber-root-structure",
        ok_r && count >= 20,
        count,
        worst_r,
        "t1 < t_max < t2 at 0.9 lambda*; single t3 on X-".into(),
    );

    // classification detects scaling off the manifold
    let u = random_bump(cfg, mesh, &mut s.rng);
    let lam_c = 0.5 * lam;
    let mut ok_c = true;
    if let Ok(proj) = fiber::project(&u, cfg, lam_c, Branch::Plus) {
        ok_c &= fiber::classify(&proj, cfg, lam_c).unwrap() == NehariClass::Plus;
        for t in [0.5, 2.0] {
            ok_c &= fiber::classify(&proj.scale(t), cfg, lam_c).unwrap() == NehariClass::Off;
        }
    } else {
        ok_c = false;
    }
    s.record(
        "fiber-scale-detection",
        ok_c,
        3,
        0.0,
        "classify(t u) = Off for t != 1".into(),
    );
}

fn check_thresholds(s: &mut Suite, cfg: &ValidatedConfig, s_p: f64) {
    let th = thresholds::compute(cfg, s_p);
    let th2 = thresholds::compute(cfg, s_p);
    let mut ok = th == th2; // bitwise reproducible
    for v in [
        th.lambda_star,
        th.lambda_dstar,
        th.lambda_tstar,
        th.eta0,
        th.eta_lambda,
        th.s_m,
    ] {
        ok &= v.is_finite() && v > 0.0;
    }
    ok &= th.coercivity_c < 0.0;
    s.record(
        "thresholds-positive",
        ok,
        8,
        0.0,
        "positive, finite, reproducible".into(),
    );

    // gap structure on random admissible configs
    let mut ok_g = true;
    let mut worst_g = f64::INFINITY;
    let mut tried = 0;
    while tried < 20 {
        let mut raw = (**cfg).clone();
        raw.p = s.rng.gen_range(1.6..2.4);
        raw.s = s.rng.gen_range(0.25..0.45);
        raw.theta = s.rng.gen_range(1.2..1.8);
        raw.alpha = s.rng.gen_range(0.2..0.8);
        raw.a = s.rng.gen_range(0.5..2.0);
        raw.b = s.rng.gen_range(0.5..2.0);
        let pt = raw.p * raw.theta;
        let pstar = raw.p / (1.0 - raw.p * raw.s);
        if pstar <= pt + 0.2 || raw.p * raw.s >= 1.0 {
            continue;
        }
        raw.q = pt + s.rng.gen_range(0.2..(pstar - pt).min(3.0));
        let Ok(rcfg) = validate_config(raw) else {
            continue;
        };
        tried += 1;
        let ld = thresholds::lambda_dstar(&rcfg, s_p);
        let (eta0, eta_l) = thresholds::eta_bounds(&rcfg, s_p, 0.5 * ld);
        worst_g = worst_g.min(eta_l - eta0);
        ok_g &= eta0 < eta_l;
    }
    s.record(
        "thresholds-gap",
        ok_g,
        tried,
        worst_g,
        "eta0 < eta_lambda below lambda**".into(),
    );

    // monotonicity in lambda
    let mut ok_m = true;
    ok_m &= thresholds::lambda_star(cfg, s_p) == th.lambda_star;
    let (e0a, ela) = thresholds::eta_bounds(cfg, s_p, 0.01);
    let (e0b, elb) = thresholds::eta_bounds(cfg, s_p, 0.02);
    ok_m &= e0a == e0b && ela > elb;
    ok_m &= thresholds::c_level(cfg, s_p, 0.01) > thresholds::c_level(cfg, s_p, 0.02);
    let lt = thresholds::lambda_tstar(cfg, s_p);
    let balance = thresholds::c_level(cfg, s_p, lt).abs();
    ok_m &= balance <= 1e-10 * th.s_m.max(1.0).max(th.eta_lambda);
    s.record(
        "thresholds-monotone",
        ok_m,
        5,
        balance,
        "lambda-free constants, decreasing levels".into(),
    );

    // coercivity: golden-section recovery and sampled lower bound
    let (c, s_m) = thresholds::coercivity_bound(cfg, s_p);
    let golden = 0.5 * (5f64.sqrt() - 1.0);
    let (mut lo, mut hi) = (1e-12, 10.0 * s_m);
    for _ in 0..200 {
        let x1 = hi - golden * (hi - lo);
        let x2 = lo + golden * (hi - lo);
        if thresholds::coercivity_h(cfg, s_p, x1) < thresholds::coercivity_h(cfg, s_p, x2) {
            hi = x2;
        } else {
            lo = x1;
        }
    }
    let s_num = 0.5 * (lo + hi);
    let mut ok_c = (s_num - s_m).abs() <= 1e-6 * s_m && c < 0.0;
    ok_c &= (thresholds::coercivity_h(cfg, s_p, s_num) - c).abs() <= 1e-6 * c.abs();
    let mut worst_c = f64::INFINITY;
    let mut note = "h minimum; J >= C on manifold samples";
    if cfg.w_weight.min_value() >= 0.0 {
        let mesh = Mesh1d::new(cfg.domain.0, cfg.domain.1, 65);
        let lam = 0.9 * th.lambda_star.min(th.lambda_dstar);
        let lcfg = cfg.with_lambda(lam).unwrap();
        let mut done = 0;
        while done < 50 {
            let u = random_bump(cfg, mesh, &mut s.rng);
            let pr = fiber::fiber_profile(&u, &lcfg).unwrap();
            let Ok(roots) = fiber::nehari_roots(&pr, &lcfg, lam) else {
                continue;
            };
            for t in [Some(roots.t1), roots.t2].into_iter().flatten() {
                let j = fiber::phi(&pr, &lcfg, lam, t);
                worst_c = worst_c.min(j - c);
                ok_c &= j >= c - 1e-8;
                done += 1;
            }
        }
    } else {
        // the manifold lower bound only applies to nonnegative weights
        worst_c = 0.0;
        note = "h minimum; J >= C sampling skipped (sign-changing w)";
    }
    s.record("thresholds-coercivity", ok_c, 52, worst_c, note.into());

    // cross-module norm gap at 0.9 min(lambda*, lambda**)
    let lam = 0.9 * th.lambda_star.min(th.lambda_dstar);
    let lcfg = cfg.with_lambda(lam).unwrap();
    let (eta0, eta_l) = thresholds::eta_bounds(cfg, s_p, lam);
    let mesh = Mesh1d::new(cfg.domain.0, cfg.domain.1, 65);
    let mut ok_x = eta0 < eta_l;
    let mut worst_x = f64::INFINITY;
    let mut done = 0;
    while done < 20 {
        let u = random_bump(cfg, mesh, &mut s.rng);
        let pr = fiber::fiber_profile(&u, &lcfg).unwrap();
        if pr.nonlinear <= 0.0 {
            continue;
        }
        let Ok(roots) = fiber::nehari_roots(&pr, &lcfg, lam) else {
            ok_x = false;
            break;
        };
        let norm_plus = (roots.t1.powf(cfg.p) * pr.seminorm_p).powf(1.0 / cfg.p);
        let norm_minus = (roots.t2.unwrap().powf(cfg.p) * pr.seminorm_p).powf(1.0 / cfg.p);
        worst_x = worst_x.min(eta0 - norm_plus).min(norm_minus - eta_l);
        ok_x &= norm_plus < eta0 && norm_minus > eta_l;
        done += 1;
    }
    s.record(
        "thresholds-norm-gap",
        ok_x,
        done,
        worst_x,
        "projected norms straddle (eta0, eta_lambda)".into(),
    );
}

fn check_extremal(s: &mut Suite, cfg: &ValidatedConfig, mesh_n: usize) {
    let mesh = Mesh1d::new(cfg.domain.0, cfg.domain.1, mesh_n.max(257));
    let delta = extremal::default_delta(cfg);
    let mut ok = true;
    // positivity, monotonicity, truncation plateau
    for eps in [1.0, 0.3, 0.1] {
        let mut prev = f64::INFINITY;
        for i in 0..60 {
            let v = extremal::u_epsilon(i as f64 * 0.02, eps, cfg);
            ok &= v > 0.0 && v <= prev;
            prev = v;
        }
    }
    let eps = 0.25 * delta;
    if let Ok(u) = extremal::cutoff_family(eps, delta, mesh, cfg) {
        for i in 0..mesh.n_nodes {
            let x = mesh.node(i);
            if x.abs() <= 0.5 * delta {
                ok &= u.values[i] == extremal::u_epsilon(x, eps, cfg);
            }
            if x.abs() >= delta {
                ok &= u.values[i] == 0.0;
            }
        }
    } else {
        ok = false;
    }
    ok &= extremal::power_split_inequality_holds(cfg.theta, 2f64.powf(cfg.theta), 2000, 99);
    s.record(
        "extremal-family",
        ok,
        180,
        0.0,
        "positivity, plateau, power-split".into(),
    );

    // quotient decreases over the canonical eps triple
    let mut ok_q = true;
    let mut prev = f64::INFINITY;
    for eps in [0.4, 0.2, 0.1] {
        if let Ok(u) = extremal::cutoff_family(eps, delta, mesh, cfg) {
            let q = thresholds::rayleigh_quotient(&u, cfg).unwrap();
            ok_q &= q < prev;
            prev = q;
        } else {
            ok_q = false;
        }
    }
    s.record(
        "extremal-quotient-monotone",
        ok_q,
        3,
        prev,
        "Rayleigh quotient decreasing in eps".into(),
    );

    // fitted truncation orders; the canonical grid needs 513-node
    // resolution. Decaying deficits with positive slopes are required
    // everywhere; the factor-2 band is additionally enforced whenever the
    // grid sits inside the config's asymptotic window (half-grid slopes
    // agreeing), which holds at the anchor exponents.
    let fit_mesh = Mesh1d::new(cfg.domain.0, cfg.domain.1, mesh.n_nodes.max(513));
    let grid = extremal::FIT_EPS_GRID;
    let target_lp = (cfg.n as f64 - cfg.p * cfg.s) / (cfg.p - 1.0);
    let target_mass = cfg.n as f64 / (cfg.p - 1.0);
    let fit_lp = extremal::epsilon_order_fit(extremal::EpsQuantity::LpP, &grid, fit_mesh, cfg);
    let fit_mass =
        extremal::epsilon_order_fit(extremal::EpsQuantity::PstarMass, &grid, fit_mesh, cfg);
    let (mut ok_f, mut worst_f) = (true, 0.0f64);
    let mut note = String::new();
    match (fit_lp, fit_mass) {
        (Ok(a), Ok(b)) => {
            let half_slopes = |fit: &extremal::EpsOrderFit| -> (f64, f64) {
                let logs: Vec<(f64, f64)> = fit
                    .fitted
                    .iter()
                    .filter(|&&(_, d)| d > 0.0)
                    .map(|&(e, d)| (e.ln(), d.ln()))
                    .collect();
                let slope2 = |pts: &[(f64, f64)]| -> f64 {
                    (pts[pts.len() - 1].1 - pts[0].1) / (pts[pts.len() - 1].0 - pts[0].0)
                };
                let mid = logs.len() / 2;
                (slope2(&logs[..=mid]), slope2(&logs[mid..]))
            };
            for (fit, target, name) in [(&a, target_lp, "lp"), (&b, target_mass, "mass")] {
                ok_f &= fit.slope > 0.0;
                ok_f &= fit.fitted.iter().all(|&(_, d)| d > 0.0);
                let (s1, s2) = half_slopes(fit);
                let stable = (s1 - s2).abs() <= 0.5 * (0.5 * (s1 + s2)).abs();
                let in_band = fit.slope >= 0.5 * target && fit.slope <= 2.0 * target;
                if stable {
                    ok_f &= in_band;
                }
                worst_f = worst_f.max(fit.slope / target);
                note.push_str(&format!(
                    "{name} {:.3}/{target:.3}{}; ",
                    fit.slope,
                    if !stable {
                        " (window unresolved)"
                    } else if in_band {
                        " in band"
                    } else {
                        " OUT OF BAND"
                    }
                ));
            }
        }
        _ => ok_f = false,
    }
    s.record("extremal-eps-orders", ok_f, 2, worst_f, note);
}

fn check_solver(s: &mut Suite, cfg: &ValidatedConfig, mesh_n: usize, s_p: f64) {
    let mesh = Mesh1d::new(cfg.domain.0, cfg.domain.1, mesh_n);
    let th = thresholds::compute(cfg, s_p);
    let lam = 0.5 * th.lambda_star.min(th.lambda_dstar);
    let Ok(lcfg) = cfg.with_lambda(lam) else {
        s.record(
            "solver-two-solutions",
            false,
            0,
            0.0,
            "lambda rescale failed".into(),
        );
        return;
    };
    let opts = SolverOptions::default();
    match solver::two_solutions(&lcfg, mesh, &opts) {
        Ok(rep) => {
            let mut ok = rep.plus.energy < 0.0;
            ok &= rep.plus.nehari_class == NehariClass::Plus;
            ok &= rep.minus.nehari_class == NehariClass::Minus;
            ok &= rep.plus.solution.values.iter().all(|&v| v >= 0.0);
            ok &= rep.minus.solution.values.iter().all(|&v| v >= 0.0);
            ok &= rep.plus.residual <= 1e-6 * rep.plus.residual_scale;
            ok &= rep.minus.residual <= 1e-6 * rep.minus.residual_scale;
            // branch sign inequality on both solutions
            for (r, positive) in [(&rep.plus, true), (&rep.minus, false)] {
                let pr = fiber::fiber_profile(&r.solution, &lcfg).unwrap();
                let expr = (lcfg.p + lcfg.alpha - 1.0) * pr.energy_p
                    + lcfg.b * (lcfg.p * lcfg.theta + lcfg.alpha - 1.0) * pr.energy_ptheta
                    - lam * lcfg.q * (lcfg.q + lcfg.alpha - 1.0) * pr.nonlinear;
                ok &= if positive { expr > 0.0 } else { expr < 0.0 };
            }
            // norm gap
            ok &= rep.plus.norm_x < rep.thresholds.eta0;
            ok &= rep.minus.norm_x > rep.thresholds.eta_lambda;
            // monotone accepted-energy trace within each stage
            for r in [&rep.plus, &rep.minus] {
                let mut prev = f64::INFINITY;
                for rec in &r.trace {
                    ok &= rec.energy <= prev + 1e-9 * (1.0 + prev.abs());
                    prev = rec.energy;
                }
            }
            // energy stability under mesh refinement
            let fine = rep.plus.solution.refine();
            let e_fine = fiber::phi(
                &fiber::fiber_profile(&fine, &lcfg).unwrap(),
                &lcfg,
                lam,
                1.0,
            );
            let drift = (e_fine - rep.plus.energy).abs() / rep.plus.energy.abs();
            ok &= drift < 0.05;
            s.record(
                "solver-two-solutions",
                ok,
                12,
                rep.norm_separation,
                format!(
                    "m+ = {:.6e}, m- = {:.6e}, refine drift {:.3e}",
                    rep.plus.energy, rep.minus.energy, drift
                ),
            );
        }
        Err(e) => s.record("solver-two-solutions", false, 0, 0.0, format!("{e}")),
    }
}

fn check_solver_critical(s: &mut Suite, cfg: &ValidatedConfig, mesh_n: usize, s_p: f64) {
    // critical configuration derived from the run config: q at the critical
    // exponent, small Kirchhoff coefficient, lambda at half the balance point
    let Ok(base) = cfg.with_q_b(cfg.p_star, 1e-3) else {
        s.record(
            "solver-critical-regime",
            false,
            0,
            0.0,
            "critical rescale failed".into(),
        );
        return;
    };
    let lam = 0.5 * thresholds::lambda_tstar(&base, s_p);
    let Ok(ccfg) = base.with_lambda(lam) else {
        s.record(
            "solver-critical-regime",
            false,
            0,
            0.0,
            "lambda rescale failed".into(),
        );
        return;
    };
    let mesh = Mesh1d::new(cfg.domain.0, cfg.domain.1, mesh_n);
    let c_level = thresholds::c_level(&ccfg, s_p, lam);
    let opts = SolverOptions::default();
    let ws = match solver::Workspace::new(ccfg.clone(), mesh) {
        Ok(w) => w,
        Err(e) => {
            s.record("solver-critical-regime", false, 0, 0.0, format!("{e}"));
            return;
        }
    };
    let bump = solver::positive_bump(&ccfg, mesh);
    match solver::minimize_branch_on(&ws, Branch::Plus, &bump, &opts) {
        Ok(plus) => {
            let ok = plus.energy < 0.0 && c_level > 0.0;
            // the minus branch and its level-vs-c_lambda margin are reported,
            // not asserted here: the existence argument does not guarantee
            // this particular descent finds the minimizer, and in the
            // homogeneous model the minus level sits above c_lambda (the
            // acceptance suite asserts that margin and reports it red)
            let note = match solver::critical_minus_init(&ws, &plus.solution)
                .and_then(|init| solver::minimize_branch_on(&ws, Branch::Minus, &init, &opts))
            {
                Ok(minus) => format!(
                    "m+ = {:.6e}; m- = {:.6e}, c_lambda = {:.6e}, margin {}",
                    plus.energy,
                    minus.energy,
                    c_level,
                    if minus.energy < c_level {
                        "holds"
                    } else {
                        "violated"
                    }
                ),
                Err(e) => format!(
                    "m+ = {:.6e}; minus descent soft-fail: {e} (c_lambda = {:.6e})",
                    plus.energy, c_level
                ),
            };
            s.record("solver-critical-regime", ok, 2, c_level, note);
        }
        Err(e) => s.record(
            "solver-critical-regime",
            false,
            0,
            0.0,
            format!("plus branch: {e}"),
        ),
    }
}

fn check_reproducibility(s: &mut Suite, cfg: &ValidatedConfig) {
    let mesh = Mesh1d::new(cfg.domain.0, cfg.domain.1, 65);
    let u = DiscreteFunction::sample_zero_boundary(mesh, |x| {
        let t = (x - cfg.domain.0) / cfg.omega_measure;
        (std::f64::consts::PI * t).sin().powi(2)
    });
    let reference = quadrature::gagliardo_p(&u, cfg).unwrap();
    let mut ok = true;
    for threads in [1usize, 2, 8] {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap();
        let v = pool.install(|| quadrature::gagliardo_p(&u, cfg).unwrap());
        ok &= v.to_bits() == reference.to_bits();
    }
    s.record(
        "determinism-worker-count",
        ok,
        3,
        reference,
        "bitwise equal for 1/2/8 workers".into(),
    );
}

/// Run every suite; `mesh_n` controls the solver/extremal meshes.
pub fn run_all(cfg: &ValidatedConfig, mesh_n: usize, seed: u64) -> Result<VerifyReport> {
    let mut s = Suite {
        rng: ChaCha8Rng::seed_from_u64(seed),
        outcomes: Vec::new(),
    };
    let sob =
        thresholds::sobolev_constant(cfg, Mesh1d::new(cfg.domain.0, cfg.domain.1, mesh_n.max(65)))?;
    check_core(&mut s, cfg);
    check_quadrature(&mut s, cfg);
    check_fiber(&mut s, cfg, sob.s_p);
    check_thresholds(&mut s, cfg, sob.s_p);
    check_extremal(&mut s, cfg, mesh_n);
    check_solver(&mut s, cfg, mesh_n, sob.s_p);
    check_solver_critical(&mut s, cfg, mesh_n, sob.s_p);
    check_reproducibility(&mut s, cfg);
    Ok(VerifyReport {
        outcomes: s.outcomes,
    })
}
