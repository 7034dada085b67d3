//! Executes one configured action and writes its exports.

use std::fs;
use std::path::Path;
use std::sync::Arc;

use inflap::criteria::{evaluate, small_diameter_barriers};
use inflap::domain::{build_domain, GridDomain};
use inflap::field::{BoundaryTrace, ScalarField};
use inflap::fmt::json_num;
use inflap::radial::{
    build_profile_with, exact_family, family_residual, zeta, zeta_bounds, MonotoneRhs1D, RadialProfile, VERTEX_LAYER,
};
use inflap::rhs::{rhs_range, RhsSpec};
use inflap::solver::{perron_solve, probe_nonexistence, solve_dirichlet, solve_dirichlet_from, SolveReport, Status};
use inflap::verify::{check_apriori, check_harnack, check_oscillation, harnack_tolerance, CheckResult, CheckStatus};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Map, Value};

use crate::config::{Action, Boundary, RunConfig};
use crate::CliError;

pub const EXIT_OK: i32 = 0;
pub const EXIT_ERROR: i32 = 1;
pub const EXIT_CHECK_FAILED: i32 = 2;
pub const EXIT_DIVERGED: i32 = 3;

struct Exports {
    report: Map<String, Value>,
    field: Option<ScalarField>,
    profile: Option<RadialProfile>,
    code: i32,
}

impl Exports {
    fn new(action: Action) -> Exports {
        let mut report = Map::new();
        report.insert("action".into(), serde_json::to_value(action).expect("plain enum"));
        Exports { report, field: None, profile: None, code: EXIT_OK }
    }

    fn put(&mut self, key: &str, v: Value) {
        self.report.insert(key.into(), v);
    }
}

fn boundary(cfg: &RunConfig, d: &GridDomain) -> Result<BoundaryTrace, CliError> {
    Ok(match &cfg.problem.boundary {
        Boundary::Constant(c) => BoundaryTrace::constant(d, *c)?,
        Boundary::Expression(text) => {
            let e = RhsSpec::parse(text)?;
            BoundaryTrace::from_fn(d, |x| e.eval(x, 0.0))?
        }
    })
}

fn solve_code(rep: &SolveReport) -> i32 {
    match rep.status {
        Status::Converged => EXIT_OK,
        Status::DivergedPastAlarm => EXIT_DIVERGED,
        Status::MaxSweepsReached => EXIT_CHECK_FAILED,
    }
}

fn domain_json(d: &GridDomain) -> Value {
    let r = d.radii();
    json!({
        "h": json_num(d.h()),
        "dims": d.dims(),
        "interior_nodes": d.interior().len(),
        "boundary_nodes": d.boundary().len(),
        "in_radius": json_num(r.in_radius),
        "out_radius": json_num(r.out_radius),
        "diameter": json_num(d.diameter()),
    })
}

/// Runs `action` and writes the report and any CSV exports under `out`.
pub fn run(cfg: &RunConfig, action: Action, out: &Path) -> Result<i32, CliError> {
    let d = build_domain(&cfg.problem.domain, cfg.h)?;
    let f = RhsSpec::parse(&cfg.problem.rhs)?;
    let b = boundary(cfg, &d)?;
    let opts = cfg.solve_options();
    let mut ex = Exports::new(action);
    ex.put("domain", domain_json(&d));
    ex.put("rhs", Value::String(cfg.problem.rhs.clone()));

    match action {
        Action::Solve => {
            let (u, rep) = solve_dirichlet(&d, &f, &b, &opts)?;
            ex.code = solve_code(&rep);
            ex.put("solve", rep.to_json());
            ex.field = Some(u);
        }
        Action::Perron => {
            let (sub, sup) = small_diameter_barriers(&f, &d, &b, &cfg.criteria)?;
            let (u, rep) = perron_solve(&f, &b, &sub, &sup, &opts)?;
            ex.code = solve_code(&rep);
            ex.put("solve", rep.to_json());
            ex.field = Some(u);
        }
        Action::Probe => {
            if opts.alarm_bound.is_none() {
                return Err(CliError::Config("probe needs solve.alarm_bound".into()));
            }
            let rep = probe_nonexistence(&d, &f, &b, &opts)?;
            ex.code = solve_code(&rep);
            ex.put("probe", rep.to_json());
        }
        Action::Radial => radial(cfg, &b, &mut ex)?,
        Action::Family => {
            let (u, p) = exact_family(cfg.family.gamma, cfg.family.k, &d)?;
            let residual = family_residual(&u, cfg.family.gamma, cfg.family.k, &cfg.scheme)?;
            ex.put(
                "family",
                json!({
                    "gamma": json_num(cfg.family.gamma),
                    "k": cfg.family.k,
                    "a": json_num(p.a()),
                    "sup_norm": json_num(u.sup_abs()),
                    "residual_off_shells": json_num(residual),
                }),
            );
            ex.field = Some(u);
            ex.profile = Some(p);
        }
        Action::Criteria => {
            let rep = evaluate(&f, &d, &b, &cfg.criteria)?;
            ex.put("criteria", rep.to_json());
        }
        Action::Verify => verify(cfg, &d, &f, &b, &mut ex)?,
    }
    write_exports(cfg, out, &ex)?;
    Ok(ex.code)
}

fn radial(cfg: &RunConfig, b: &BoundaryTrace, ex: &mut Exports) -> Result<(), CliError> {
    let rc = &cfg.radial;
    let ell = rc.ell.unwrap_or(b.lo());
    let m = MonotoneRhs1D::parse(&cfg.problem.rhs, ell)?;
    let p = build_profile_with(&m, rc.a, rc.prefactor, rc.nodes)?;
    let z = zeta(&m, rc.a, rc.prefactor)?;
    let (lo, hi) = zeta_bounds(&m, rc.a, ell)?;
    let scale = rc.prefactor.value();
    ex.put(
        "radial",
        json!({
            "ell": json_num(ell),
            "a": json_num(rc.a),
            "prefactor": rc.prefactor,
            "radius": json_num(p.radius()),
            "zeta": json_num(z),
            "zeta_bounds": [json_num(scale * lo), json_num(scale * hi)],
            "max_ode_residual": json_num(p.max_ode_residual(&m, VERTEX_LAYER.min(rc.nodes / 4))),
            "decreasing": p.is_decreasing(),
            "concave": p.is_concave(),
        }),
    );
    ex.profile = Some(p);
    Ok(())
}

fn verify(cfg: &RunConfig, d: &Arc<GridDomain>, f: &RhsSpec, b: &BoundaryTrace, ex: &mut Exports) -> Result<(), CliError> {
    let opts = cfg.solve_options();
    let (u, rep) = solve_dirichlet(d, f, b, &opts)?;
    ex.put("solve", rep.to_json());
    if !rep.converged() {
        ex.code = solve_code(&rep);
        ex.field = Some(u);
        return Ok(());
    }
    let mut checks: Vec<CheckResult> = Vec::new();
    let tol = 10.0 * rep.tol;

    let crit = evaluate(f, d, b, &cfg.criteria)?;
    if let Some(bx) = crit.apriori_box {
        checks.push(check_apriori(&u, bx, tol + d.h().cbrt() * (1.0 + u.sup_abs()))?);
    }

    if f.traits(d)?.nondecreasing() {
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        let (lo, hi) = (b.lo() - 1.0, b.hi() + 1.0);
        // Same data on both runs, so the boundary difference is zero.
        let zero = BoundaryTrace::constant(d, 0.0)?;
        for _ in 0..cfg.verify.restarts {
            let vals = (0..d.len()).map(|_| rng.gen_range(lo..=hi)).collect();
            let init = ScalarField::from_values(d, vals)?;
            let (v, rv) = solve_dirichlet_from(f, b, &init, &opts)?;
            if rv.converged() {
                let mut c = check_oscillation(&u, &v, &zero, tol)?;
                c.name = "uniqueness_restart".into();
                checks.push(c);
            }
        }
    }

    if !f.depends_on_t() && u.min() >= 0.0 {
        let h_plus = rhs_range(f, d, 0.0, 0.0)?.hi.max(0.0);
        let z = d.nearest(&d.radii().in_center);
        for &r in &cfg.verify.harnack_radii {
            if d.dist_to_boundary(z) >= 2.0 * r {
                checks.push(check_harnack(&u, h_plus, z, r, harnack_tolerance(rep.tol, d.h(), u.sup_abs()))?);
            }
        }
    }

    let failed = checks.iter().any(|c| c.status == CheckStatus::Checked && !c.passed);
    if failed {
        ex.code = EXIT_CHECK_FAILED;
    }
    ex.put("checks", Value::Array(checks.iter().map(CheckResult::to_json).collect()));
    ex.put("all_passed", Value::Bool(!failed));
    ex.field = Some(u);
    Ok(())
}

fn write_exports(cfg: &RunConfig, out: &Path, ex: &Exports) -> Result<(), CliError> {
    fs::create_dir_all(out)?;
    let mut report = ex.report.clone();
    report.insert("exit_code".into(), ex.code.into());
    if let Some(u) = &ex.field {
        fs::write(out.join(&cfg.output.field), u.to_csv())?;
        report.insert("field_csv".into(), Value::String(cfg.output.field.clone()));
    }
    if let Some(p) = &ex.profile {
        fs::write(out.join(&cfg.output.profile), p.to_csv())?;
        report.insert("profile_csv".into(), Value::String(cfg.output.profile.clone()));
    }
    let text = serde_json::to_string_pretty(&Value::Object(report)).expect("serialisable report");
    fs::write(out.join(&cfg.output.report), text + "\n")?;
    Ok(())
}
