//! Run drivers behind the `kpmsym` subcommands: full runs, the discrete and
//! continuous conservation checks, the scheme-equivalence check and
//! refinement studies.

use std::fs;
use std::path::PathBuf;
use std::time::Instant;

use crate::diagnostics::{
    continuous_study, convergence_order, crest_line, error_norms, mass_integral, point_peak,
    ContinuousStudy, PeakSample, RunReport, CONTINUOUS_STEPS,
};
use crate::equation::{Component, EquationParams, NCOMP};
use crate::error::{Error, Result};
use crate::grid::{Field, GridSpec, Plane};

use crate::io::{snapshot_name, snapshot_csv, Manifest, RunConfig, ScenarioName, SchemeKind, TimeFactorChoice};
use crate::preissman::{
    random_tangent_data, relative_msym_residual, solve_global, solve_tangent, BoxStepper,
    SolveMethod, SolverOptions,
};
use crate::reduced::{sample_boundary_plane, startup, Reduced45Stepper, StartupMode, ThreeLevelState};
use crate::solutions::{
    adjudicate_conventions, sample_initial_states, sample_states, ConventionVerdicts, Domain, LineSolitonParams,
    LumpParams, ProbeLattice, Scenario, ScenarioKind,
};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Threshold of the discrete conservation and base-solve checks.
pub const CONSERVATION_TOL: f64 = 1e-10;
/// Threshold of the scheme-equivalence check.
pub const EQUIVALENCE_TOL: f64 = 1e-8;
/// Minimum combined order of the continuous conservation study.
pub const CONTINUOUS_MIN_ORDER: f64 = 1.5;

/// Expected order of the refinement study and its tolerance.
pub const ORDER_TARGET: f64 = 2.0;
pub const ORDER_TOL: f64 = 0.3;

/// Time between peak-tracking samples.
const TRACK_INTERVAL: f64 = 0.1;
/// Two-soliton tracks are taken only while the free crests are this far apart.
const TWO_SOLITON_MIN_GAP: f64 = 3.0;
/// Pre-collision window for the two-soliton velocity fit.
const PRE_COLLISION_END: f64 = 0.5;

/// Equation parameters for `cfg`: the configured σ, the time coefficient
/// either fixed or taken from the oracle, and nonlinear coefficient 3.
pub fn resolve_params(cfg: &RunConfig, verdicts: &ConventionVerdicts) -> Result<EquationParams> {
    let tf = match cfg.time_factor {
        TimeFactorChoice::Fixed(v) => v,
        TimeFactorChoice::Auto => verdicts.time_factor.ok_or_else(|| Error::Constraint {
            key: "time_factor".into(),
            message: "the residual oracle did not certify a unique time coefficient".into(),
        })?,
    };
    EquationParams::new(cfg.sigma, tf, 3.0)
}

pub fn scenario_for(cfg: &RunConfig, params: EquationParams) -> Result<Scenario> {
    Ok(build_scenario(cfg.scenario, params, cfg.domain)?.with_two_soliton_boundary(cfg.two_soliton_boundary))
}

pub fn build_scenario(name: ScenarioName, params: EquationParams, domain: Domain) -> Result<Scenario> {
    let kind = match name {
        ScenarioName::LineSoliton => ScenarioKind::LineSoliton(LineSolitonParams::reference()),
        ScenarioName::TwoSoliton => ScenarioKind::TwoSoliton(crate::solutions::reference_two_soliton()),
        ScenarioName::Lump => ScenarioKind::Lump(LumpParams::reference()),
        ScenarioName::Zero => ScenarioKind::Zero,
    };
    Scenario::new(kind, params, domain)
}

fn solver_options(cfg: &RunConfig, method: SolveMethod) -> SolverOptions {
    SolverOptions {
        tol_residual: cfg.tol,
        max_iters: cfg.max_iters,
        method,
        fd_jacobian_step: None,
    }
}

/// Everything a run produces, before anything is written.
#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub manifest: Manifest,
    pub report: RunReport,
    pub grid: GridSpec,
    /// `(step, plane)` for every snapshot, in step order.
    pub snapshots: Vec<(usize, Plane)>,
    pub final_u: Plane,
}

/// Time loop of either scheme, calling `observe(k, u_k)` on every level.
fn march(
    cfg: &RunConfig,
    scenario: &Scenario,
    grid: &GridSpec,
    mut observe: impl FnMut(usize, &Plane) -> Result<()>,
) -> Result<(usize, f64)> {
    let mut max_iters = 0;
    let mut max_res = 0.0_f64;
    match cfg.scheme {
        SchemeKind::Reduced45 => {
            let opts = solver_options(cfg, SolveMethod::FixedPoint);
            let mode = if scenario.has_exact_solution() {
                StartupMode::ExactTwoPlanes
            } else {
                StartupMode::PreissmanOneStep
            };
            let newton = solver_options(cfg, SolveMethod::Newton);
            let mut state = startup(scenario, grid, mode, &newton)?;
            observe(0, &state.u_prev)?;
            observe(1, &state.u_curr)?;
            let mut stepper = Reduced45Stepper::new(grid, &scenario.params, &opts)?;
            for k in 1..grid.nt - 1 {
                let boundary = sample_boundary_plane(scenario, grid, k + 1)?;
                let (next, rep) = stepper.step(&state, &boundary)?;
                max_iters = max_iters.max(rep.iterations);
                max_res = max_res.max(rep.residual);
                observe(k + 1, &next)?;
                state = ThreeLevelState::new(state.u_curr, next, k + 1)?;
            }
        }
        SchemeKind::Preissman => {
            let opts = solver_options(cfg, SolveMethod::Newton);
            let mut stepper = BoxStepper::new(grid, &scenario.params, &opts)?;
            let mut z = sample_initial_states(scenario, grid)?.values().to_vec();
            let u_of = |z: &[f64]| {
                let c = Component::U.index();
                Plane::from_fn(grid.nx, grid.ny, |i, j| z[(j * grid.nx + i) * NCOMP + c])
            };
            observe(0, &u_of(&z))?;
            for k in 0..grid.nt - 1 {
                let b = sample_states(scenario, &grid.level(k + 1))?;
                let (z1, rep) = stepper.step(&z, b.values(), k + 1)?;
                max_iters = max_iters.max(rep.iterations);
                max_res = max_res.max(rep.residual);
                z = z1;
                observe(k + 1, &u_of(&z))?;
            }
        }
    }
    Ok((max_iters, max_res))
}

/// Crest windows `(id, lo, hi)` for the two-soliton run at time `t`, split at
/// the midpoint between the freely propagating crests at mid-height. `None`
/// while the crests are too close to separate.
fn two_soliton_windows(scenario: &Scenario, list: &[LineSolitonParams], t: f64) -> Option<Vec<(usize, f64, f64)>> {
    let y_mid = 0.5 * (scenario.domain.y0 + scenario.domain.y1);
    let tt = t / scenario.params.time_factor;
    let xs: Vec<f64> = list
        .iter()
        .map(|p| p.crest_x(y_mid, tt, scenario.params.sigma))
        .collect();
    if xs.len() != 2 || (xs[0] - xs[1]).abs() < TWO_SOLITON_MIN_GAP {
        return None;
    }
    let mid = 0.5 * (xs[0] + xs[1]);
    let reach = 4.0 * TWO_SOLITON_MIN_GAP;
    let (left, right) = if xs[0] < xs[1] { (0, 1) } else { (1, 0) };
    Some(vec![(left, mid - reach, mid), (right, mid, mid + reach)])
}

/// Least-squares slope of `x` against `t`.
fn fitted_velocity(samples: &[(f64, f64)]) -> f64 {
    let n = samples.len() as f64;
    if samples.len() < 2 {
        return f64::NAN;
    }
    let mt = samples.iter().map(|s| s.0).sum::<f64>() / n;
    let mx = samples.iter().map(|s| s.1).sum::<f64>() / n;
    let stx: f64 = samples.iter().map(|s| (s.0 - mt) * (s.1 - mx)).sum();
    let stt: f64 = samples.iter().map(|s| (s.0 - mt) * (s.0 - mt)).sum();
    stx / stt
}

fn track(scenario: &Scenario, grid: &GridSpec, t: f64, u: &Plane, out: &mut Vec<PeakSample>) {
    match &scenario.kind {
        ScenarioKind::LineSoliton(_) => {
            if let Ok(c) = crest_line(u, grid, None) {
                out.push(PeakSample {
                    t,
                    object: 0,
                    x: c.intercept,
                    y: grid.y0,
                    slope: c.slope,
                    amplitude: c.amplitude,
                });
            }
        }
        ScenarioKind::TwoSoliton(list) => {
            let y_mid = 0.5 * (scenario.domain.y0 + scenario.domain.y1);
            for (id, lo, hi) in two_soliton_windows(scenario, list, t).unwrap_or_default() {
                if let Ok(c) = crest_line(u, grid, Some((lo, hi))) {
                    out.push(PeakSample {
                        t,
                        object: id,
                        x: c.intercept + c.slope * y_mid,
                        y: y_mid,
                        slope: c.slope,
                        amplitude: c.amplitude,
                    });
                }
            }
        }
        ScenarioKind::Lump(_) => {
            if let Ok(p) = point_peak(u, grid) {
                out.push(PeakSample {
                    t,
                    object: 0,
                    x: p.x,
                    y: p.y,
                    slope: 0.0,
                    amplitude: p.amplitude,
                });
            }
        }
        ScenarioKind::Manufactured | ScenarioKind::Zero => {}
    }
}

fn record_verdicts(m: &mut Manifest, v: &ConventionVerdicts) {
    let opt = |x: Option<String>| x.unwrap_or_else(|| "ambiguous".into());
    m.set("oracle.time_factor", opt(v.time_factor.map(|x| x.to_string())));
    m.set(
        "oracle.lump_denominator_power",
        opt(v.lump_denominator_power.map(|x| x.to_string())),
    );
    m.set("oracle.unambiguous", v.unambiguous());
    for (name, s) in [
        ("line_soliton_tf1", &v.line_soliton_tf1),
        ("line_soliton_tf2", &v.line_soliton_tf2),
        ("lump_squared", &v.lump_squared),
        ("lump_unsquared", &v.lump_unsquared),
    ] {
        m.set(format!("oracle.{name}.verdict"), s.verdict.name());
        for (i, r) in s.residuals.iter().enumerate() {
            m.set(format!("oracle.{name}.residual.{i}"), r);
        }
        for (i, o) in s.orders.iter().enumerate() {
            m.set(format!("oracle.{name}.order.{i}"), o);
        }
    }
}

/// Runs a configuration in memory: oracle adjudication, startup, time loop,
/// diagnostics at snapshots and at every tracking interval.
pub fn simulate(cfg: &RunConfig) -> Result<RunOutcome> {
    cfg.validate()?;
    let clock = Instant::now();
    let verdicts = adjudicate_conventions(cfg.sigma)?;
    let params = resolve_params(cfg, &verdicts)?;
    let scenario = scenario_for(cfg, params)?;
    let grid = cfg.grid()?;
    grid.require(5, 3, 3, "a run")?;

    let mut m = Manifest::new();
    m.set("version", VERSION);
    for (k, v) in cfg.echo() {
        m.set(format!("config.{k}"), v);
    }
    record_verdicts(&mut m, &verdicts);
    m.set("params.time_factor", params.time_factor);
    m.set("params.sigma", params.sigma);
    m.set("params.nonlin_coeff", params.nonlin_coeff);
    m.set("grid.nx", grid.nx);
    m.set("grid.ny", grid.ny);
    m.set("grid.nt", grid.nt);

    let last = grid.nt - 1;
    let stride = ((TRACK_INTERVAL / grid.dt).round() as usize).max(1);
    let exact = scenario.has_exact_solution();
    let mut report = RunReport::default();
    let mut snapshots = Vec::new();
    let mut final_u = Plane::zeros(grid.nx, grid.ny);
    let mut mass0 = 0.0;
    let (max_iters, max_res) = march(cfg, &scenario, &grid, |k, u| {
        let t = grid.t(k);
        if k % stride == 0 || k == last {
            track(&scenario, &grid, t, u, &mut report.peak_tracks);
        }
        if k % cfg.snapshot_every == 0 || k == last {
            let key = format!("snapshot.{k:06}");
            m.set(format!("{key}.t"), t);
            let mass = mass_integral(u, &grid);
            m.set(format!("{key}.mass"), mass);
            if k == 0 {
                mass0 = mass;
            }
            if exact {
                let (l2, linf) = error_norms(u, &scenario, &grid, k)?;
                m.set(format!("{key}.l2"), l2);
                m.set(format!("{key}.linf"), linf);
            }
            snapshots.push((k, u.clone()));
        }
        if k == last {
            final_u = u.clone();
        }
        Ok(())
    })?;

    m.set("solver.max_iterations", max_iters);
    m.set("solver.max_residual", max_res);
    let t_final = grid.t(last);
    m.set("final.t", t_final);
    let mass1 = mass_integral(&final_u, &grid);
    m.set("mass.initial", mass0);
    m.set("mass.final", mass1);
    m.set(
        "mass.relative_drift",
        if mass0 != 0.0 { (mass1 - mass0).abs() / mass0.abs() } else { (mass1 - mass0).abs() },
    );
    if exact {
        let (l2, linf) = error_norms(&final_u, &scenario, &grid, last)?;
        report.l2_error = l2;
        report.linf_error = linf;
        m.set("final.l2", l2);
        m.set("final.linf", linf);
    }
    let finals: Vec<&PeakSample> = report
        .peak_tracks
        .iter()
        .filter(|p| p.t == t_final)
        .collect();
    match scenario.kind {
        ScenarioKind::LineSoliton(_) => {
            if let Some(p) = finals.first() {
                m.set("final.crest_intercept", p.x);
                m.set("final.crest_slope", p.slope);
                m.set("final.amplitude", p.amplitude);
            }
        }
        ScenarioKind::Lump(_) => {
            if let Some(p) = finals.first() {
                m.set("final.peak_x", p.x);
                m.set("final.peak_y", p.y);
                m.set("final.amplitude", p.amplitude);
            }
        }
        ScenarioKind::TwoSoliton(ref list) => {
            for id in 0..list.len() {
                let pre: Vec<(f64, f64)> = report
                    .peak_tracks
                    .iter()
                    .filter(|p| p.object == id && p.t <= PRE_COLLISION_END + 1e-9)
                    .map(|p| (p.t, p.x))
                    .collect();
                let v = fitted_velocity(&pre);
                m.set(format!("two_soliton.{}.velocity", id + 1), v);
                if let Some(p) = finals.iter().find(|p| p.object == id) {
                    m.set(format!("two_soliton.{}.final_amplitude", id + 1), p.amplitude);
                    m.set(format!("two_soliton.{}.final_intercept", id + 1), p.x);
                }
            }
        }
        _ => {}
    }
    report
        .conservation_residuals
        .push(("mass.relative_drift".into(), m.get_f64("mass.relative_drift").unwrap_or(f64::NAN)));
    report.validate()?;
    m.set("wall_clock_s", clock.elapsed().as_secs_f64());
    Ok(RunOutcome {
        manifest: m,
        report,
        grid,
        snapshots,
        final_u,
    })
}

/// Keys that legitimately differ between identical runs.
pub const NONDETERMINISTIC_KEYS: [&str; 1] = ["wall_clock_s"];

/// [`simulate`] and write the snapshots and `manifest.txt` to `out_dir`.
pub fn run(cfg: &RunConfig) -> Result<RunOutcome> {
    let out = simulate(cfg)?;
    write_outputs(&cfg.out_dir, &out)?;
    Ok(out)
}

pub fn write_outputs(dir: &PathBuf, out: &RunOutcome) -> Result<()> {
    fs::create_dir_all(dir)?;
    for (k, u) in &out.snapshots {
        fs::write(dir.join(snapshot_name(*k)), snapshot_csv(u, &out.grid)?)?;
    }
    out.manifest.write(&dir.join("manifest.txt"))
}

/// Small grid centred on `(xc, yc)`.
fn local_grid(xc: f64, yc: f64, dx: f64, dy: f64, dt: f64, nx: usize, ny: usize, nt: usize) -> Result<GridSpec> {
    GridSpec::new(
        xc - 0.5 * (nx - 1) as f64 * dx,
        yc - 0.5 * (ny - 1) as f64 * dy,
        0.0,
        dx,
        dy,
        dt,
        nx,
        ny,
        nt,
    )
}

/// Verification grid of the conservation check: 8 x 4 nodes, 4 levels
/// around the line-soliton crest.
pub fn conservation_grid() -> Result<GridSpec> {
    local_grid(6.0, 0.375, 0.25, 0.25, 0.05, 8, 4, 4)
}

#[derive(Debug, Clone)]
pub struct ConservationReport {
    pub base_residual: f64,
    /// `(seed_a, seed_b, relative residual)`.
    pub pairs: Vec<(u64, u64, f64)>,
    pub tangent_residual: f64,
    /// Same tangent in both slots.
    pub identical: f64,
    /// Secant "tangents" about a perturbed, non-solution base.
    pub control: f64,
    pub continuous: ContinuousStudy,
    pub continuous_order: f64,
    pub passed: bool,
}

impl ConservationReport {
    pub fn max_pair(&self) -> f64 {
        self.pairs.iter().fold(0.0_f64, |m, p| m.max(p.2))
    }

    pub fn manifest(&self) -> Manifest {
        let mut m = Manifest::new();
        m.set("conservation.base_residual", self.base_residual);
        for (a, b, r) in &self.pairs {
            m.set(format!("conservation.pair.{a}.{b}"), r);
        }
        m.set("conservation.max_pair", self.max_pair());
        m.set("conservation.tangent_solve_residual", self.tangent_residual);
        m.set("conservation.identical", self.identical);
        m.set("conservation.control", self.control);
        for (h, r) in self.continuous.steps.iter().zip(&self.continuous.residuals) {
            m.set(format!("continuous.residual.h{h}"), r);
        }
        for (i, o) in self.continuous.orders.iter().enumerate() {
            m.set(format!("continuous.order.{i}"), o);
        }
        m.set("continuous.combined_order", self.continuous_order);
        m.set("continuous.identical", self.continuous.identical);
        for (h, r) in self.continuous.steps.iter().zip(&self.continuous.control_residuals) {
            m.set(format!("continuous.control.h{h}"), r);
        }
        m.set("passed", self.passed);
        m
    }
}

/// Number of seeded tangent pairs in the conservation check.
pub const CONSERVATION_PAIRS: u64 = 5;

/// Solves the box scheme for a line-soliton base on [`conservation_grid`],
/// solves seeded tangent pairs about it, and evaluates the discrete
/// conservation law; then runs the continuous study about the same soliton.
pub fn verify_conservation(cfg: &RunConfig) -> Result<ConservationReport> {
    let verdicts = adjudicate_conventions(cfg.sigma)?;
    let params = resolve_params(cfg, &verdicts)?;
    let grid = conservation_grid()?;
    let domain = Domain {
        x0: grid.x0,
        x1: grid.x(grid.nx - 1),
        y0: grid.y0,
        y1: grid.y(grid.ny - 1),
        t_end: grid.t(grid.nt - 1),
    };
    let scenario = build_scenario(ScenarioName::LineSoliton, params, domain)?;
    let opts = solver_options(cfg, SolveMethod::Newton);
    let data = sample_states(&scenario, &grid)?;
    let base = solve_global(&data, &data, &params, &opts)?;

    let mut pairs = Vec::new();
    let mut tangent_residual = 0.0_f64;
    let mut first = None;
    for n in 0..CONSERVATION_PAIRS {
        let (sa, sb) = (cfg.seed + 2 * n, cfg.seed + 2 * n + 1);
        let ta = solve_tangent(&base.field, &random_tangent_data(&grid, sa), &params)?;
        let tb = solve_tangent(&base.field, &random_tangent_data(&grid, sb), &params)?;
        tangent_residual = tangent_residual.max(ta.max_residual).max(tb.max_residual);
        pairs.push((sa, sb, relative_msym_residual(&ta.field, &tb.field, &params)?));
        if first.is_none() {
            first = Some(ta.field);
        }
    }
    let ta = first.expect("at least one pair");
    let identical = relative_msym_residual(&ta, &ta, &params)?;
    let control = perturbed_base_control(&data, &base.field, &params, &opts, cfg.seed)?;

    let probe = ProbeLattice::around(6.0, 0.0, 0.0);
    let continuous = continuous_study(&scenario, &probe, &CONTINUOUS_STEPS)?;
    let (r0, r1) = (continuous.residuals[0], *continuous.residuals.last().unwrap());
    let (h0, h1) = (continuous.steps[0], *continuous.steps.last().unwrap());
    let continuous_order = (r0 / r1).ln() / (h0 / h1).ln();
    let control_flat = continuous
        .control_residuals
        .last()
        .zip(continuous.control_residuals.first())
        .map(|(l, f)| *l > 0.5 * f)
        .unwrap_or(false);

    let passed = base.max_residual <= CONSERVATION_TOL
        && pairs.iter().all(|p| p.2 <= CONSERVATION_TOL)
        && identical == 0.0
        && control > CONSERVATION_TOL
        && continuous_order >= CONTINUOUS_MIN_ORDER
        && continuous.identical == 0.0
        && control_flat;
    Ok(ConservationReport {
        base_residual: base.max_residual,
        pairs,
        tangent_residual,
        identical,
        control,
        continuous,
        continuous_order,
        passed,
    })
}

/// Conservation residual of difference quotients taken against a base that
/// does not solve the scheme: `(S(data + εa) − P)/ε` with `P` the solved
/// base plus an O(1e−2) perturbation on the later levels.
fn perturbed_base_control(
    data: &Field,
    base: &Field,
    params: &EquationParams,
    opts: &SolverOptions,
    seed: u64,
) -> Result<f64> {
    let grid = *data.grid();
    let level = grid.nodes_per_level() * NCOMP;
    let noise = random_tangent_data(&grid, seed.wrapping_add(1000));
    let mut perturbed = base.clone();
    for (idx, v) in perturbed.values_mut().iter_mut().enumerate().skip(level) {
        *v += 1e-2 * noise.values()[idx];
    }
    let eps = 1e-6;
    let secant = |s: u64| -> Result<Field> {
        let dir = random_tangent_data(&grid, s);
        let shifted: Vec<f64> = data
            .values()
            .iter()
            .zip(dir.values())
            .map(|(a, b)| a + eps * b)
            .collect();
        let shifted = Field::from_values(grid, NCOMP, shifted)?;
        let sol = solve_global(&shifted, &shifted, params, opts)?;
        let q: Vec<f64> = sol
            .field
            .values()
            .iter()
            .zip(perturbed.values())
            .map(|(a, b)| (a - b) / eps)
            .collect();
        Field::from_values(grid, NCOMP, q)
    };
    let a = secant(seed.wrapping_add(2000))?;
    let b = secant(seed.wrapping_add(3000))?;
    relative_msym_residual(&a, &b, params)
}

#[derive(Debug, Clone)]
pub struct EquivalenceReport {
    pub line_soliton: f64,
    pub lump: f64,
    pub zero: f64,
    /// Different boundary data for the two schemes.
    pub mismatch_control: f64,
    pub passed: bool,
}

impl EquivalenceReport {
    pub fn manifest(&self) -> Manifest {
        let mut m = Manifest::new();
        m.set("equivalence.line_soliton", self.line_soliton);
        m.set("equivalence.lump", self.lump);
        m.set("equivalence.zero", self.zero);
        m.set("equivalence.mismatch_control", self.mismatch_control);
        m.set("passed", self.passed);
        m
    }
}

/// Max `|u_45 − u_box|` over levels 2 and 3 of a 12 x 6 grid: the box scheme
/// takes three slabs from the lifted closed form; the reduced scheme starts
/// from the box levels 0 and 1 and takes two steps with band data from
/// `band_source`.
pub fn equivalence_difference(
    scenario: &Scenario,
    band_source: &Scenario,
    grid: &GridSpec,
    opts: &SolverOptions,
) -> Result<f64> {
    let data = sample_states(scenario, grid)?;
    let boxed = solve_global(&data, &data, &scenario.params, opts)?;
    let u = Component::U.index();
    let planes: Vec<Plane> = (0..grid.nt).map(|k| boxed.field.plane(k, u)).collect();
    let mut stepper = Reduced45Stepper::new(grid, &scenario.params, opts)?;
    let mut state = ThreeLevelState::new(planes[0].clone(), planes[1].clone(), 1)?;
    let mut worst = 0.0_f64;
    for k in 1..grid.nt - 1 {
        let band = sample_boundary_plane(band_source, grid, k + 1)?;
        let (next, _) = stepper.step(&state, &band)?;
        worst = worst.max(next.max_abs_diff(&planes[k + 1]));
        state = ThreeLevelState::new(state.u_curr, next, k + 1)?;
    }
    Ok(worst)
}

pub fn equivalence_grids() -> Result<(GridSpec, GridSpec)> {
    Ok((
        local_grid(6.0, 0.5, 0.25, 0.2, 0.02, 12, 6, 4)?,
        local_grid(10.0, 10.0, 0.25, 0.25, 0.02, 12, 6, 4)?,
    ))
}

pub fn verify_equivalence(cfg: &RunConfig) -> Result<EquivalenceReport> {
    let verdicts = adjudicate_conventions(cfg.sigma)?;
    let params = resolve_params(cfg, &verdicts)?;
    let opts = solver_options(cfg, SolveMethod::Newton);
    let (gl, gm) = equivalence_grids()?;
    let dom = |g: &GridSpec| Domain {
        x0: g.x0,
        x1: g.x(g.nx - 1),
        y0: g.y0,
        y1: g.y(g.ny - 1),
        t_end: g.t(g.nt - 1),
    };
    let line = build_scenario(ScenarioName::LineSoliton, params, dom(&gl))?;
    let lump = build_scenario(ScenarioName::Lump, params, dom(&gm))?;
    let zero = build_scenario(ScenarioName::Zero, params, dom(&gl))?;
    let mut shifted = LineSolitonParams::reference();
    shifted.x_offset += 0.5;
    let wrong = Scenario::new(ScenarioKind::LineSoliton(shifted), params, dom(&gl))?;

    let line_soliton = equivalence_difference(&line, &line, &gl, &opts)?;
    let lump_d = equivalence_difference(&lump, &lump, &gm, &opts)?;
    let zero_d = equivalence_difference(&zero, &zero, &gl, &opts)?;
    let mismatch_control = equivalence_difference(&line, &wrong, &gl, &opts)?;
    let passed = line_soliton <= EQUIVALENCE_TOL
        && lump_d <= EQUIVALENCE_TOL
        && zero_d == 0.0
        && mismatch_control > EQUIVALENCE_TOL;
    Ok(EquivalenceReport {
        line_soliton,
        lump: lump_d,
        zero: zero_d,
        mismatch_control,
        passed,
    })
}

/// Errors and pairwise orders of a refinement study. Orders are NaN when
/// either error is zero.
#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceTable {
    pub dx: Vec<f64>,
    pub errors: Vec<f64>,
    pub orders: Vec<f64>,
}

impl ConvergenceTable {
    pub fn manifest(&self) -> Manifest {
        let mut m = Manifest::new();
        for (i, (h, e)) in self.dx.iter().zip(&self.errors).enumerate() {
            m.set(format!("convergence.level.{i}.dx"), h);
            m.set(format!("convergence.level.{i}.linf"), e);
        }
        for (i, o) in self.orders.iter().enumerate() {
            m.set(format!("convergence.order.{i}"), o);
        }
        m
    }
}

/// Runs `runner` at `levels` successive halvings of `dx`, `dy`, `dt` and
/// returns the errors it reports with their pairwise orders.
pub fn convergence_study(
    cfg: &RunConfig,
    levels: usize,
    runner: &dyn Fn(&RunConfig) -> Result<f64>,
) -> Result<ConvergenceTable> {
    if levels < 2 {
        return Err(Error::Usage(format!(
            "a convergence study needs at least 2 levels, got {levels}"
        )));
    }
    let mut dx = Vec::new();
    let mut errors = Vec::new();
    for l in 0..levels {
        let mut c = cfg.clone();
        let s = 0.5_f64.powi(l as i32);
        c.dx *= s;
        c.dy *= s;
        c.dt *= s;
        c.snapshot_every = usize::MAX;
        c.validate()?;
        dx.push(c.dx);
        errors.push(runner(&c)?);
    }
    let orders = errors
        .windows(2)
        .map(|w| convergence_order(w[0], w[1]).unwrap_or(f64::NAN))
        .collect();
    Ok(ConvergenceTable { dx, errors, orders })
}

/// Final max-norm error of a simulated run.
pub fn final_linf_error(cfg: &RunConfig) -> Result<f64> {
    let out = simulate(cfg)?;
    out.manifest
        .get_f64("final.linf")
        .ok_or_else(|| Error::NoExactSolution(format!("scenario {}", cfg.scenario.as_str())))
}
