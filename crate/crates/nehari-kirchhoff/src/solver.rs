//! Constrained minimization on the two Nehari branches.
//!
//! One descent iteration: assemble the nodal weak-form residual (the
//! discrete gradient of the energy), precondition it by the diagonal of the
//! p = 2 nonlocal stiffness, backtrack along
//! `t -> J(project(clip(u + t d)))`, and tighten the stage tolerance on a
//! 1/k schedule. Iterates are clipped to the nonnegative cone before every
//! re-projection, so the returned solutions are nonnegative nodewise.
//! Certification at the end re-evaluates the energy, class and residual
//! through the plain quadrature path (no cached operators).

use serde::{Deserialize, Serialize};

use crate::fiber::{self, FiberProfile, NehariClass};
use crate::mesh::{DiscreteFunction, Mesh1d};
use crate::problem::ValidatedConfig;
use crate::quadrature;
use crate::thresholds::{self, Thresholds};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Branch {
    Plus,
    Minus,
}

impl Branch {
    pub fn as_str(&self) -> &'static str {
        match self {
            Branch::Plus => "plus",
            Branch::Minus => "minus",
        }
    }

    fn expected_class(&self) -> NehariClass {
        match self {
            Branch::Plus => NehariClass::Plus,
            Branch::Minus => NehariClass::Minus,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolverOptions {
    /// Initial Ekeland stage tolerance (relative residual).
    pub tol0: f64,
    /// Final relative residual target.
    pub tol_final: f64,
    /// Smallest admissible line-search step.
    pub step_min: f64,
    pub max_iters: usize,
    /// Floor applied to (u+)^{-alpha} on interior nodes.
    pub eps_sing: f64,
    /// Halve the floor twice and re-converge, reporting the energy drift.
    pub continuation: bool,
    /// Reject steps sending the energy below this level (quadrature-failure
    /// guard from the coercivity bound); only set on nonnegative-weight
    /// configs.
    pub coercivity_floor: Option<f64>,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions {
            tol0: 1e-2,
            tol_final: 1e-6,
            step_min: 1e-14,
            max_iters: 40_000,
            eps_sing: 1e-8,
            continuation: true,
            coercivity_floor: None,
        }
    }
}

/// Ekeland-style stage tolerance, mirroring the 1/n perturbation rate of the
/// minimizing sequence.
pub fn ekeland_schedule(tol0: f64, k: usize) -> f64 {
    assert!(k >= 1, "stage index starts at 1");
    tol0 / k as f64
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    pub iter: usize,
    pub energy: f64,
    /// Relative (scaled) residual.
    pub residual: f64,
    pub step: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveReport {
    pub branch: Branch,
    pub solution: DiscreteFunction,
    /// Certified energy J(u).
    pub energy: f64,
    /// Certified dual-norm residual (absolute).
    pub residual: f64,
    /// Scale against which the residual tolerance is applied.
    pub residual_scale: f64,
    pub nehari_class: NehariClass,
    /// Branch-level estimate (m+ or m-): the certified energy.
    pub m_value: f64,
    pub iterations: usize,
    pub trace: Vec<IterationRecord>,
    /// Energy drift across the singular-floor continuation stages.
    pub floor_sensitivity: f64,
    /// X-norm of the solution.
    pub norm_x: f64,
}

/// Dual-norm residual of the discrete weak form.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResidualReport {
    /// max_k |R_k| / ||hat_k||_X over interior nodes.
    pub dual_max: f64,
    /// Profile magnitude used for the relative test.
    pub scale: f64,
    /// Raw nodal residual entries (the discrete gradient of J).
    pub nodal: Vec<f64>,
}

/// Cached operators for one (config, mesh): the p = 2 stiffness (which is
/// the exact energy operator when p = 2), its diagonal as preconditioner,
/// and the hat-function X-norms for the dual residual.
pub struct Workspace {
    pub cfg: ValidatedConfig,
    pub mesh: Mesh1d,
    matrix: Option<Vec<f64>>,
    precond: Vec<f64>,
    hat_norms_x: Vec<f64>,
}

impl Workspace {
    pub fn new(cfg: ValidatedConfig, mesh: Mesh1d) -> Result<Self> {
        let k2 = quadrature::stiffness_p2(mesh, &cfg);
        let n = mesh.n_nodes;
        let precond: Vec<f64> = (0..n)
            .map(|i| k2[i * n + i].max(f64::MIN_POSITIVE))
            .collect();
        let hat_norms_x = quadrature::hat_norms_p(mesh, &cfg)
            .iter()
            .map(|&v| if v > 0.0 { v.powf(1.0 / cfg.p) } else { 0.0 })
            .collect();
        let matrix = if cfg.p == 2.0 { Some(k2) } else { None };
        Ok(Workspace {
            cfg,
            mesh,
            matrix,
            precond,
            hat_norms_x,
        })
    }

    fn matvec(&self, k_mat: &[f64], u: &[f64]) -> Vec<f64> {
        let n = self.mesh.n_nodes;
        let mut out = vec![0.0; n];
        for (r, o) in out.iter_mut().enumerate() {
            let row = &k_mat[r * n..(r + 1) * n];
            *o = row.iter().zip(u).map(|(a, b)| a * b).sum();
        }
        out
    }

    /// ||u||^p through the cached operator when available.
    pub fn norm_p(&self, u: &DiscreteFunction) -> Result<f64> {
        u.check_conforming()?;
        match &self.matrix {
            Some(k_mat) => {
                let ku = self.matvec(k_mat, &u.values);
                Ok(u.values.iter().zip(&ku).map(|(a, b)| a * b).sum())
            }
            None => quadrature::gagliardo_p(u, &self.cfg),
        }
    }

    /// Nodal gradient of ||u||^p (zero on the boundary entries).
    pub fn norm_gradient(&self, u: &DiscreteFunction) -> Result<Vec<f64>> {
        u.check_conforming()?;
        match &self.matrix {
            Some(k_mat) => {
                let mut g = self.matvec(k_mat, &u.values);
                for v in g.iter_mut() {
                    *v *= 2.0;
                }
                g[0] = 0.0;
                let n = self.mesh.n_nodes;
                g[n - 1] = 0.0;
                Ok(g)
            }
            None => quadrature::gagliardo_gradient(u, &self.cfg),
        }
    }

    pub fn profile(&self, u: &DiscreteFunction) -> Result<FiberProfile> {
        let seminorm = self.norm_p(u)?;
        Ok(self.profile_with_norm(u, seminorm))
    }

    fn profile_with_norm(&self, u: &DiscreteFunction, seminorm_p: f64) -> FiberProfile {
        fiber::profile_from_parts(
            seminorm_p,
            quadrature::lp_norm_p(u, self.cfg.p, &self.cfg),
            quadrature::singular_integral(u, &self.cfg),
            quadrature::f_primitive_integral(u, &self.cfg),
            &self.cfg,
        )
    }

    pub fn energy(&self, u: &DiscreteFunction, lambda: f64) -> Result<f64> {
        let pr = self.profile(u)?;
        Ok(fiber::phi(&pr, &self.cfg, lambda, 1.0))
    }

    /// Nodal weak-form residual; `norm_gradient` result may be passed in to
    /// avoid recomputing it.
    fn residual_vec(
        &self,
        u: &DiscreteFunction,
        norm_p: f64,
        grad_semi: &[f64],
        lambda: f64,
        floor: Option<f64>,
    ) -> Result<Vec<f64>> {
        let cfg = &self.cfg;
        let m_kirchhoff = cfg.a + cfg.b * norm_p.powf(cfg.theta - 1.0);
        let load_lp = quadrature::load_lp_power(u, cfg);
        let load_sing = quadrature::load_singular(u, cfg, floor)?;
        let load_f = quadrature::load_nonlinearity(u, cfg);
        let n = self.mesh.n_nodes;
        let mut r = vec![0.0; n];
        for k in 1..n - 1 {
            r[k] =
                m_kirchhoff / cfg.p * grad_semi[k] + load_lp[k] - load_sing[k] - lambda * load_f[k];
        }
        Ok(r)
    }

    fn dual_norm(&self, r: &[f64]) -> f64 {
        let n = self.mesh.n_nodes;
        let mut worst = 0.0f64;
        for k in 1..n - 1 {
            if self.hat_norms_x[k] > 0.0 {
                worst = worst.max(r[k].abs() / self.hat_norms_x[k]);
            }
        }
        worst
    }
}

/// Standalone weak-form residual through the plain quadrature path.
pub fn weak_residual(
    u: &DiscreteFunction,
    cfg: &ValidatedConfig,
    floor: Option<f64>,
) -> Result<ResidualReport> {
    let norm_p = quadrature::gagliardo_p(u, cfg)?;
    let grad = quadrature::gagliardo_gradient(u, cfg)?;
    let m_kirchhoff = cfg.a + cfg.b * norm_p.powf(cfg.theta - 1.0);
    let load_lp = quadrature::load_lp_power(u, cfg);
    let load_sing = quadrature::load_singular(u, cfg, floor)?;
    let load_f = quadrature::load_nonlinearity(u, cfg);
    let hat_x: Vec<f64> = quadrature::hat_norms_p(u.mesh, cfg)
        .iter()
        .map(|&v| if v > 0.0 { v.powf(1.0 / cfg.p) } else { 0.0 })
        .collect();
    let n = u.mesh.n_nodes;
    let mut nodal = vec![0.0; n];
    let mut dual_max = 0.0f64;
    for k in 1..n - 1 {
        nodal[k] =
            m_kirchhoff / cfg.p * grad[k] + load_lp[k] - load_sing[k] - cfg.lambda * load_f[k];
        if hat_x[k] > 0.0 {
            dual_max = dual_max.max(nodal[k].abs() / hat_x[k]);
        }
    }
    let pr = fiber::profile_from_parts(
        norm_p,
        quadrature::lp_norm_p(u, cfg.p, cfg),
        quadrature::singular_integral(u, cfg),
        quadrature::f_primitive_integral(u, cfg),
        cfg,
    );
    Ok(ResidualReport {
        dual_max,
        scale: pr.tol_scale(cfg),
        nodal,
    })
}

/// Smooth positive bump seated where the nonlinearity weight is positive
/// (so the ray carries both roots), biased toward the domain midpoint.
pub fn positive_bump(cfg: &ValidatedConfig, mesh: Mesh1d) -> DiscreteFunction {
    let (lo, hi) = cfg.domain;
    let mid = 0.5 * (lo + hi);
    let mut best = (f64::NEG_INFINITY, mid);
    for i in 1..mesh.n_nodes - 1 {
        let x = mesh.node(i);
        let score = cfg.w_at(x) - 1e-9 * (x - mid).abs();
        if score > best.0 {
            best = (score, x);
        }
    }
    let center = best.1;
    let mut limit = (center - lo).min(hi - center);
    for i in 0..mesh.n_nodes {
        let x = mesh.node(i);
        if cfg.w_at(x) <= 0.0 {
            limit = limit.min((x - center).abs());
        }
    }
    let width = (0.8 * limit).max(2.0 * mesh.h());
    DiscreteFunction::sample_zero_boundary(mesh, |x| {
        let r = (x - center) / width;
        let b = (1.0 - r * r).max(0.0);
        b * b
    })
}

struct StepOutcome {
    next: DiscreteFunction,
    energy: f64,
}

// one trial of the projected line search
fn try_step(
    ws: &Workspace,
    u: &DiscreteFunction,
    dir: &[f64],
    t: f64,
    lambda: f64,
    branch: Branch,
    norm_u: f64,
    ku: Option<&[f64]>,
    kd: Option<&[f64]>,
    d_ku: f64,
    d_kd: f64,
) -> Result<StepOutcome> {
    let n = ws.mesh.n_nodes;
    let mut clipped = false;
    let mut vals = Vec::with_capacity(n);
    for k in 0..n {
        let v = u.values[k] + t * dir[k];
        if v < 0.0 {
            clipped = true;
            vals.push(0.0);
        } else {
            vals.push(v);
        }
    }
    let w = DiscreteFunction::new(ws.mesh, vals);
    let norm_w = if !clipped && ku.is_some() && kd.is_some() {
        // quadratic expansion along the unclipped segment
        norm_u + 2.0 * t * d_ku + t * t * d_kd
    } else {
        ws.norm_p(&w)?
    };
    if norm_w <= 0.0 {
        return Err(Error::DegenerateProfile(
            "step annihilated the iterate".into(),
        ));
    }
    let pr = ws.profile_with_norm(&w, norm_w);
    let root = fiber::project_scale(&pr, &ws.cfg, lambda, branch)?;
    let energy = fiber::phi(&pr, &ws.cfg, lambda, root);
    Ok(StepOutcome {
        next: w.scale(root),
        energy,
    })
}

const ARMIJO_C1: f64 = 1e-4;

fn descend(
    ws: &Workspace,
    u: &mut DiscreteFunction,
    branch: Branch,
    floor: f64,
    opts: &SolverOptions,
    trace: &mut Vec<IterationRecord>,
    iters: &mut usize,
) -> Result<()> {
    let cfg = &ws.cfg;
    let lambda = cfg.lambda;
    let mut stage = 1usize;
    let mut t_prev = 1.0;
    loop {
        if *iters >= opts.max_iters {
            return Err(Error::Stalled(format!(
                "iteration cap {} reached on branch {}",
                opts.max_iters,
                branch.as_str()
            )));
        }
        *iters += 1;

        let norm_u = ws.norm_p(u)?;
        let grad_semi = ws.norm_gradient(u)?;
        let pr = ws.profile_with_norm(u, norm_u);
        let scale = pr.tol_scale(cfg).max(f64::MIN_POSITIVE);
        let rvec = ws.residual_vec(u, norm_u, &grad_semi, lambda, Some(floor))?;
        let res_rel = ws.dual_norm(&rvec) / scale;
        let energy = fiber::phi(&pr, cfg, lambda, 1.0);
        trace.push(IterationRecord {
            iter: *iters,
            energy,
            residual: res_rel,
            step: t_prev,
        });

        // advance the schedule past every tolerance the iterate already
        // satisfies; converged once the final tolerance is met
        loop {
            let tol_stage = ekeland_schedule(opts.tol0, stage).max(opts.tol_final);
            if res_rel > tol_stage {
                break;
            }
            if tol_stage <= opts.tol_final {
                return Ok(());
            }
            stage += 1;
        }

        let n = ws.mesh.n_nodes;
        let mut dir = vec![0.0; n];
        let mut slope = 0.0;
        for k in 1..n - 1 {
            dir[k] = -rvec[k] / ws.precond[k];
            slope += rvec[k] * dir[k];
        }
        if slope >= 0.0 {
            return Err(Error::Stalled(
                "search direction is not a descent direction".into(),
            ));
        }

        // quadratic-expansion ingredients for the p = 2 fast path
        let (ku, kd, d_ku, d_kd) = match &ws.matrix {
            Some(k_mat) => {
                let ku = ws.matvec(k_mat, &u.values);
                let kd = ws.matvec(k_mat, &dir);
                let d_ku: f64 = dir.iter().zip(&ku).map(|(a, b)| a * b).sum();
                let d_kd: f64 = dir.iter().zip(&kd).map(|(a, b)| a * b).sum();
                (Some(ku), Some(kd), d_ku, d_kd)
            }
            None => (None, None, 0.0, 0.0),
        };

        let mut t = (t_prev * 2.0).clamp(opts.step_min, 1e6);
        let mut accepted = None;
        while t >= opts.step_min {
            let trial = try_step(
                ws,
                u,
                &dir,
                t,
                lambda,
                branch,
                norm_u,
                ku.as_deref(),
                kd.as_deref(),
                d_ku,
                d_kd,
            );
            if let Ok(out) = trial {
                let floor_ok = opts
                    .coercivity_floor
                    .map(|c| out.energy >= c - 1.0)
                    .unwrap_or(true);
                if floor_ok && out.energy <= energy + ARMIJO_C1 * t * slope {
                    accepted = Some((out, t));
                    break;
                }
            }
            t *= 0.5;
        }
        match accepted {
            Some((out, t_used)) => {
                *u = out.next;
                t_prev = t_used;
            }
            None => {
                return if res_rel <= opts.tol_final {
                    Ok(())
                } else {
                    Err(Error::Stalled(format!(
                        "line search exhausted at relative residual {res_rel:e}"
                    )))
                };
            }
        }
    }
}

/// Locate the branch minimizer from an initial guess.
pub fn minimize_branch(
    cfg: &ValidatedConfig,
    branch: Branch,
    init: &DiscreteFunction,
    opts: &SolverOptions,
) -> Result<SolveReport> {
    let ws = Workspace::new(cfg.clone(), init.mesh)?;
    minimize_branch_on(&ws, branch, init, opts)
}

/// Same, reusing a prebuilt workspace.
pub fn minimize_branch_on(
    ws: &Workspace,
    branch: Branch,
    init: &DiscreteFunction,
    opts: &SolverOptions,
) -> Result<SolveReport> {
    let cfg = &ws.cfg;
    let lambda = cfg.lambda;
    let mut u = {
        let w = init.clipped_nonnegative();
        let pr = ws.profile(&w)?;
        let t = fiber::project_scale(&pr, cfg, lambda, branch)
            .map_err(|e| Error::ProjectionLost(format!("initial projection failed: {e}")))?;
        w.scale(t)
    };

    let floors = if opts.continuation {
        vec![opts.eps_sing, 0.5 * opts.eps_sing, 0.25 * opts.eps_sing]
    } else {
        vec![opts.eps_sing]
    };
    let mut trace = Vec::new();
    let mut iters = 0usize;
    let mut stage_energies = Vec::new();
    for &floor in &floors {
        descend(ws, &mut u, branch, floor, opts, &mut trace, &mut iters)?;
        stage_energies.push(ws.energy(&u, lambda)?);
    }
    let floor_sensitivity = match (stage_energies.first(), stage_energies.last()) {
        (Some(a), Some(b)) => (a - b).abs(),
        _ => 0.0,
    };

    // certification through the plain quadrature path
    let pr = fiber::fiber_profile(&u, cfg)?;
    let energy = fiber::phi(&pr, cfg, lambda, 1.0);
    let residual = weak_residual(&u, cfg, Some(*floors.last().unwrap()))?;
    let class = fiber::classify_profile(&pr, cfg, lambda);
    if class != branch.expected_class() {
        return Err(Error::Stalled(format!(
            "converged iterate classifies as {class:?}, expected {:?}",
            branch.expected_class()
        )));
    }
    if branch == Branch::Plus && energy >= 0.0 {
        return Err(Error::Stalled(format!(
            "plus-branch energy {energy:e} is not negative"
        )));
    }
    if u.values.iter().any(|&v| v < 0.0) {
        return Err(Error::Stalled(
            "negative nodal value survived clipping".into(),
        ));
    }
    Ok(SolveReport {
        branch,
        norm_x: pr.seminorm_p.powf(1.0 / cfg.p),
        solution: u,
        energy,
        residual: residual.dual_max,
        residual_scale: residual.scale,
        nehari_class: class,
        m_value: energy,
        iterations: iters,
        trace,
        floor_sensitivity,
    })
}

/// Minus-branch initialization for the critical case: walk the path
/// `u0 + t l0 u_{eps,sigma}` from the region where projections scale up
/// (containing the plus branch) to the region where they scale down, and
/// return the crossing point.
pub fn critical_minus_init(ws: &Workspace, u0: &DiscreteFunction) -> Result<DiscreteFunction> {
    let cfg = &ws.cfg;
    let lambda = cfg.lambda;
    let delta = crate::extremal::default_delta(cfg);
    let eps = 0.25 * delta;
    let u_es = crate::extremal::cutoff_family(eps, delta, ws.mesh, cfg)?;
    // positive gap: t2(w/||w||) above ||w|| (the U1 side)
    let u2_gap = |w: &DiscreteFunction| -> Result<f64> {
        let norm_x = ws.norm_p(w)?.powf(1.0 / cfg.p);
        if norm_x == 0.0 {
            return Err(Error::DegenerateProfile("zero path point".into()));
        }
        let v = w.scale(1.0 / norm_x);
        let pr = ws.profile(&v)?;
        let roots = fiber::nehari_roots(&pr, cfg, lambda)?;
        let t2 = roots
            .t2
            .ok_or_else(|| Error::NoRootBracket("path ray lost its minus root".into()))?;
        Ok(t2 - norm_x)
    };
    let mut l0 = 1.0;
    let mut tries = 0;
    while u2_gap(&u0.axpy(l0, &u_es))? > 0.0 {
        l0 *= 2.0;
        tries += 1;
        if tries > 60 {
            return Err(Error::NoRootBracket("path never leaves U1".into()));
        }
    }
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        match u2_gap(&u0.axpy(mid * l0, &u_es)) {
            Ok(g) if g > 0.0 => lo = mid,
            Ok(_) => hi = mid,
            Err(_) => lo = mid,
        }
    }
    Ok(u0.axpy(hi * l0, &u_es))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TwoSolutionsReport {
    pub plus: SolveReport,
    pub minus: SolveReport,
    /// X-norm of the difference of the two solutions.
    pub norm_separation: f64,
    /// Half the gap width (eta_lambda - eta0)/2 the separation must exceed.
    pub separation_required: f64,
    /// Critical case only: c_level - m^- (positive means the minus level
    /// sits below the compactness threshold).
    pub c_level_margin: Option<f64>,
    pub thresholds: Thresholds,
}

/// Run both branches from the documented initializations and certify
/// distinctness.
pub fn two_solutions(
    cfg: &ValidatedConfig,
    mesh: Mesh1d,
    opts: &SolverOptions,
) -> Result<TwoSolutionsReport> {
    let ws = Workspace::new(cfg.clone(), mesh)?;
    let sob = thresholds::sobolev_constant(cfg, mesh)?;
    let th = thresholds::compute(cfg, sob.s_p);
    let lambda = cfg.lambda;
    let critical = cfg.is_critical();
    let cap = if critical {
        th.lambda_tstar
    } else {
        th.lambda_star.min(th.lambda_dstar)
    };
    if lambda >= cap {
        return Err(Error::ThresholdExceeded {
            lambda,
            threshold: cap,
        });
    }
    let mut opts = *opts;
    if cfg.w_weight.min_value() >= 0.0 {
        opts.coercivity_floor = Some(th.coercivity_c);
    }

    let bump = positive_bump(cfg, mesh);
    let plus = minimize_branch_on(&ws, Branch::Plus, &bump, &opts)?;

    let minus_init = if critical {
        critical_minus_init(&ws, &plus.solution)?
    } else {
        let nb = ws.norm_p(&bump)?.powf(1.0 / cfg.p);
        bump.scale(2.0 * th.eta_lambda / nb)
    };
    let minus = minimize_branch_on(&ws, Branch::Minus, &minus_init, &opts)?;

    let diff = plus.solution.axpy(-1.0, &minus.solution);
    let norm_separation = quadrature::gagliardo_p(&diff, cfg)?.powf(1.0 / cfg.p);
    let separation_required = 0.5 * (th.eta_lambda - th.eta0);
    if norm_separation <= separation_required {
        return Err(Error::DistinctnessViolated {
            separation: norm_separation,
            required: separation_required,
        });
    }
    let c_level_margin = critical.then(|| th.c_level - minus.energy);
    Ok(TwoSolutionsReport {
        plus,
        minus,
        norm_separation,
        separation_required,
        c_level_margin,
        thresholds: th,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problem::{validate_config, ProblemConfig};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn desk_lambda(lambda: f64) -> ValidatedConfig {
        let mut cfg = ProblemConfig::default();
        cfg.lambda = lambda;
        validate_config(cfg).unwrap()
    }

    #[test]
    fn ekeland_schedule_shape() {
        assert_eq!(ekeland_schedule(1e-2, 1), 1e-2);
        assert_eq!(ekeland_schedule(1e-2, 10), 1e-3);
        let mut prev = f64::INFINITY;
        for k in 1..50 {
            let t = ekeland_schedule(1.0, k);
            assert!(t < prev);
            prev = t;
        }
    }

    #[test]
    fn residual_matches_directional_derivative() {
        let cfg = desk_lambda(0.01);
        let mesh = Mesh1d::new(-1.0, 1.0, 33);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..20 {
            // strictly positive interior iterate and a conforming direction
            let u = DiscreteFunction::new(
                mesh,
                (0..mesh.n_nodes)
                    .map(|i| {
                        if i == 0 || i == mesh.n_nodes - 1 {
                            0.0
                        } else {
                            rng.gen_range(0.3..1.0)
                        }
                    })
                    .collect(),
            );
            let phi_dir = DiscreteFunction::new(
                mesh,
                (0..mesh.n_nodes)
                    .map(|i| {
                        if i == 0 || i == mesh.n_nodes - 1 {
                            0.0
                        } else {
                            rng.gen_range(-1.0..1.0)
                        }
                    })
                    .collect(),
            );
            let report = weak_residual(&u, &cfg, None).unwrap();
            let pairing: f64 = report
                .nodal
                .iter()
                .zip(&phi_dir.values)
                .map(|(a, b)| a * b)
                .sum();
            let h = 1e-5;
            let ws = Workspace::new(cfg.clone(), mesh).unwrap();
            let jp = ws.energy(&u.axpy(h, &phi_dir), cfg.lambda).unwrap();
            let jm = ws.energy(&u.axpy(-h, &phi_dir), cfg.lambda).unwrap();
            let fd = (jp - jm) / (2.0 * h);
            assert!(
                (pairing - fd).abs() <= 1e-5 * (1.0 + fd.abs()),
                "pairing={pairing} fd={fd}"
            );
        }
    }

    #[test]
    fn workspace_norm_agrees_with_generic() {
        let cfg = desk_lambda(0.01);
        let mesh = Mesh1d::new(-1.0, 1.0, 33);
        let ws = Workspace::new(cfg.clone(), mesh).unwrap();
        let u = positive_bump(&cfg, mesh);
        let fast = ws.norm_p(&u).unwrap();
        let generic = quadrature::gagliardo_p(&u, &cfg).unwrap();
        assert!((fast - generic).abs() <= 1e-11 * generic);
    }

    #[test]
    fn raw_bump_residual_is_far_from_zero() {
        // un-converged iterates carry a residual orders of magnitude above
        // the certification tolerance
        let cfg = desk_lambda(0.01);
        let mesh = Mesh1d::new(-1.0, 1.0, 65);
        let bump = positive_bump(&cfg, mesh);
        let raw = weak_residual(&bump, &cfg, Some(1e-8)).unwrap();
        assert!(
            raw.dual_max >= 1e-2 * raw.scale,
            "raw {:.3e}",
            raw.dual_max / raw.scale
        );
        let proj = crate::fiber::project(&bump, &cfg, cfg.lambda, Branch::Plus).unwrap();
        let on_manifold = weak_residual(&proj, &cfg, Some(1e-8)).unwrap();
        assert!(on_manifold.dual_max >= 1e-2 * on_manifold.scale);
    }

    #[test]
    fn projection_lost_above_ray_critical_level() {
        // above the ray's own critical level psi(t_max)/(q D) the two-root
        // structure is gone and the initial projection must fail loudly
        let base = desk_lambda(0.01);
        let mesh = Mesh1d::new(-1.0, 1.0, 65);
        let bump = positive_bump(&base, mesh);
        let pr = crate::fiber::fiber_profile(&bump, &base).unwrap();
        let t_max = crate::fiber::t_max_root(&pr, &base).unwrap();
        let lam_crit = crate::fiber::psi(&pr, &base, t_max) / (base.q * pr.nonlinear);
        let cfg = base.with_lambda(2.0 * lam_crit).unwrap();
        match minimize_branch(&cfg, Branch::Plus, &bump, &SolverOptions::default()) {
            Err(Error::ProjectionLost(_)) => {}
            other => panic!("expected ProjectionLost, got {other:?}"),
        }
    }

    #[test]
    fn minus_branch_converges_above_the_gap() {
        let base = desk_lambda(0.01);
        let mesh = Mesh1d::new(-1.0, 1.0, 65);
        let sob = crate::thresholds::sobolev_constant(&base, mesh).unwrap();
        let lam = 0.5
            * crate::thresholds::lambda_star(&base, sob.s_p)
                .min(crate::thresholds::lambda_dstar(&base, sob.s_p));
        let cfg = base.with_lambda(lam).unwrap();
        let (_, eta_lambda) = crate::thresholds::eta_bounds(&cfg, sob.s_p, lam);
        let ws = Workspace::new(cfg.clone(), mesh).unwrap();
        let bump = positive_bump(&cfg, mesh);
        let nb = ws.norm_p(&bump).unwrap().powf(1.0 / cfg.p);
        let init = bump.scale(2.0 * eta_lambda / nb);
        let rep = minimize_branch_on(&ws, Branch::Minus, &init, &SolverOptions::default()).unwrap();
        assert_eq!(rep.nehari_class, NehariClass::Minus);
        assert!(
            rep.norm_x > eta_lambda,
            "norm {} vs eta_lambda {eta_lambda}",
            rep.norm_x
        );
        assert!(rep.residual <= 1e-6 * rep.residual_scale);
    }

    #[test]
    fn generic_p_path_solves_both_branches() {
        // p != 2 disables the cached stiffness entirely
        let mut raw = ProblemConfig::default();
        raw.p = 1.8;
        raw.s = 0.45; // ps = 0.81 < 1, p*_s = 9.47...
        let base = validate_config(raw).unwrap();
        assert!(base.q > base.p * base.theta && base.q < base.p_star);
        let mesh = Mesh1d::new(-1.0, 1.0, 65);
        let sob = crate::thresholds::sobolev_constant(&base, mesh).unwrap();
        let lam = 0.5
            * crate::thresholds::lambda_star(&base, sob.s_p)
                .min(crate::thresholds::lambda_dstar(&base, sob.s_p));
        let cfg = base.with_lambda(lam).unwrap();
        let rep = two_solutions(&cfg, mesh, &SolverOptions::default()).unwrap();
        assert!(rep.plus.energy < 0.0);
        assert_eq!(rep.plus.nehari_class, NehariClass::Plus);
        assert_eq!(rep.minus.nehari_class, NehariClass::Minus);
        assert!(rep.plus.residual <= 1e-6 * rep.plus.residual_scale);
        assert!(rep.minus.residual <= 1e-6 * rep.minus.residual_scale);
        assert!(rep.norm_separation > rep.separation_required);
    }

    #[test]
    fn offset_diagonal_treatment_full_run() {
        // the non-default singular-cell treatment must stay usable end to
        // end: profile consistency and a plus-branch solve
        let mut raw = ProblemConfig::default();
        raw.quad.diagonal_treatment = crate::quadrature::DiagonalTreatment::Offset;
        let base = validate_config(raw).unwrap();
        let mesh = Mesh1d::new(-1.0, 1.0, 65);
        let sob = crate::thresholds::sobolev_constant(&base, mesh).unwrap();
        let lam = 0.5 * crate::thresholds::lambda_star(&base, sob.s_p);
        let cfg = base.with_lambda(lam).unwrap();
        let bump = positive_bump(&cfg, mesh);
        let rep = minimize_branch(&cfg, Branch::Plus, &bump, &SolverOptions::default()).unwrap();
        assert!(rep.energy < 0.0);
        assert!(rep.residual <= 1e-6 * rep.residual_scale);
    }

    #[test]
    fn two_solutions_rejects_over_threshold_lambda() {
        let base = desk_lambda(1.0e3);
        let mesh = Mesh1d::new(-1.0, 1.0, 65);
        match two_solutions(&base, mesh, &SolverOptions::default()) {
            Err(Error::ThresholdExceeded { .. }) => {}
            other => panic!("expected ThresholdExceeded, got {other:?}"),
        }
    }

    #[test]
    fn bump_lands_in_positive_region() {
        let mut raw = ProblemConfig::default();
        raw.w_weight = crate::problem::WeightSpec::SignFlip {
            amp: 1.0,
            split: -0.3,
        };
        let cfg = validate_config(raw).unwrap();
        let mesh = Mesh1d::new(-1.0, 1.0, 65);
        let bump = positive_bump(&cfg, mesh);
        let d = quadrature::f_primitive_integral(&bump, &cfg);
        assert!(d > 0.0, "bump must sit in the positive region, D = {d}");
    }
}
