use kp_msym::diagnostics::{crest_line, point_peak};
use kp_msym::driver::{
    convergence_study, simulate, verify_conservation, verify_equivalence, write_outputs,
    NONDETERMINISTIC_KEYS,
};
use kp_msym::equation::EquationParams;
use kp_msym::error::Error;
use kp_msym::grid::GridSpec;
use kp_msym::io::{RunConfig, ScenarioName};
use kp_msym::preissman::{
    random_tangent_data, relative_msym_residual, scheme_residual, solve_global, solve_tangent,
    SolverOptions,
};
use kp_msym::reduced::{sample_boundary_plane, startup, StartupMode};
use kp_msym::solutions::{
    line_soliton_u, sample_states, sample_u_plane, Domain, LineSolitonParams, Scenario, ScenarioKind,
};

fn params() -> EquationParams {
    EquationParams::new(-3.0, 1.0, 3.0).unwrap()
}

fn domain_of(g: &GridSpec) -> Domain {
    Domain {
        x0: g.x0,
        x1: g.x(g.nx - 1),
        y0: g.y0,
        y1: g.y(g.ny - 1),
        t_end: g.t(g.nt - 1),
    }
}

fn conservation_on(kind: ScenarioKind, g: GridSpec) -> (f64, f64) {
    let s = Scenario::new(kind, params(), domain_of(&g)).unwrap();
    let data = sample_states(&s, &g).unwrap();
    let base = solve_global(&data, &data, &s.params, &SolverOptions::default()).unwrap();
    let a = solve_tangent(&base.field, &random_tangent_data(&g, 11), &s.params).unwrap();
    let b = solve_tangent(&base.field, &random_tangent_data(&g, 12), &s.params).unwrap();
    (base.max_residual, relative_msym_residual(&a.field, &b.field, &s.params).unwrap())
}

#[test]
fn discrete_conservation_holds_for_every_scenario() {
    let line = GridSpec::new(4.25, 0.0, 0.0, 0.25, 0.25, 0.05, 8, 4, 4).unwrap();
    let lump = GridSpec::new(9.0, 9.6, 0.0, 0.25, 0.25, 0.05, 8, 4, 4).unwrap();
    let two = GridSpec::new(9.5, 0.6, 1.2, 0.25, 0.25, 0.05, 8, 4, 4).unwrap();
    let cases = [
        ("line", ScenarioKind::LineSoliton(LineSolitonParams::reference()), line),
        ("lump", ScenarioKind::Lump(kp_msym::solutions::LumpParams::reference()), lump),
        ("two", ScenarioKind::TwoSoliton(kp_msym::solutions::reference_two_soliton()), two),
    ];
    for (name, kind, g) in cases {
        let (base, rel) = conservation_on(kind, g);
        assert!(base <= 1e-10, "{name}: base residual {base}");
        assert!(rel <= 1e-10, "{name}: conservation residual {rel}");
    }
}

#[test]
fn box_scheme_is_second_order_consistent() {
    // residual of the exactly sampled line soliton under simultaneous halving
    let s = Scenario::line_soliton_reference();
    let p = EquationParams::new(-3.0, 1.0, 3.0).unwrap();
    let s = Scenario::new(s.kind, p, s.domain).unwrap();
    let res = |h: f64| {
        let g = GridSpec::new(5.0, 0.0, 0.0, h, h, 0.25 * h, 9, 5, 3).unwrap();
        let z = sample_states(&s, &g).unwrap();
        scheme_residual(&z, &p).unwrap().max_abs()
    };
    let (r0, r1, r2) = (res(0.2), res(0.1), res(0.05));
    let o1 = (r0 / r1).log2();
    let o2 = (r1 / r2).log2();
    assert!((o1 - 2.0).abs() <= 0.3 && (o2 - 2.0).abs() <= 0.3, "{r0} {r1} {r2}: {o1} {o2}");
}

#[test]
fn solver_reports_non_convergence_with_its_residual() {
    let g = GridSpec::new(4.25, 0.0, 0.0, 0.25, 0.25, 0.05, 8, 4, 3).unwrap();
    let s = Scenario::new(ScenarioKind::LineSoliton(LineSolitonParams::reference()), params(), domain_of(&g)).unwrap();
    let data = sample_states(&s, &g).unwrap();
    let opts = SolverOptions {
        max_iters: 1,
        ..SolverOptions::default()
    };
    match solve_global(&data, &data, &s.params, &opts) {
        Err(Error::NonConvergence { iterations, residual, .. }) => {
            assert_eq!(iterations, 1);
            assert!(residual.is_finite() && residual > 1e-10);
        }
        other => panic!("expected non-convergence, got {other:?}"),
    }
    let ok = solve_global(&data, &data, &s.params, &SolverOptions::default()).unwrap();
    assert!(ok.max_residual <= 1e-10);
}

fn startup_gap(h: f64) -> f64 {
    let p = params();
    let domain = Domain {
        x0: 0.0,
        x1: 12.0,
        y0: 0.0,
        y1: 1.0,
        t_end: 0.1,
    };
    let g = domain.grid(h, h, 0.01).unwrap();
    let s = Scenario::new(ScenarioKind::LineSoliton(LineSolitonParams::reference()), p, domain).unwrap();
    let opts = SolverOptions::default();
    let exact = startup(&s, &g, StartupMode::ExactTwoPlanes, &opts).unwrap();
    let boxed = startup(&s, &g, StartupMode::PreissmanOneStep, &opts).unwrap();
    boxed.u_curr.max_abs_diff(&exact.u_curr)
}

#[test]
fn startup_modes() {
    let p = params();
    let domain = Domain {
        x0: 0.0,
        x1: 12.0,
        y0: 0.0,
        y1: 1.0,
        t_end: 0.1,
    };
    let g = domain.grid(0.25, 0.25, 0.01).unwrap();
    let s = Scenario::new(ScenarioKind::LineSoliton(LineSolitonParams::reference()), p, domain).unwrap();
    let opts = SolverOptions::default();

    let exact = startup(&s, &g, StartupMode::ExactTwoPlanes, &opts).unwrap();
    let lp = LineSolitonParams::reference();
    let v = lp.velocity(p.sigma) / p.time_factor;
    for j in 0..g.ny {
        for i in 0..g.nx {
            let shifted = line_soliton_u(g.x(i) - v * g.dt, g.y(j), 0.0, &lp, p.sigma);
            assert!((exact.u_curr.get(i, j) - shifted).abs() < 1e-13);
        }
    }

    // the box-scheme start differs from the exact plane by the spatial
    // truncation error, so halving h should cut the gap about fourfold
    let (d0, d1) = (startup_gap(0.25), startup_gap(0.125));
    assert!(d0 > 0.0 && d0 < 0.05, "{d0}");
    assert!(d0 / d1 >= 3.0, "{d0} {d1}");

    let z = Scenario::zero(p, domain);
    for mode in [StartupMode::ExactTwoPlanes, StartupMode::PreissmanOneStep] {
        let st = startup(&z, &g, mode, &opts).unwrap();
        assert_eq!(st.u_prev.max_abs(), 0.0);
        assert_eq!(st.u_curr.max_abs(), 0.0);
    }
}

#[test]
fn tracking_recovers_exact_velocities() {
    // exact samples over a unit time window; tolerance max(Δx, vΔt)
    let s = Scenario::line_soliton_reference();
    let s = Scenario::new(s.kind, params(), s.domain).unwrap();
    let g = s.domain.grid(0.2, 0.1, 0.01).unwrap();
    let v = s.velocities()[0];
    let (k0, k1) = (100, 200);
    let c0 = crest_line(&sample_u_plane(&s, &g, k0).unwrap(), &g, None).unwrap();
    let c1 = crest_line(&sample_u_plane(&s, &g, k1).unwrap(), &g, None).unwrap();
    let vt = (c1.intercept - c0.intercept) / (g.t(k1) - g.t(k0));
    assert!((vt - v).abs() <= g.dx.max(v * g.dt), "{vt} vs {v}");

    let l = Scenario::lump_reference();
    let l = Scenario::new(l.kind, params(), l.domain).unwrap();
    let g = l.domain.grid(0.1, 0.2, 0.01).unwrap();
    let v = l.velocities()[0];
    let p0 = point_peak(&sample_boundary_plane(&l, &g, 0).unwrap(), &g).unwrap();
    let p1 = point_peak(&sample_boundary_plane(&l, &g, 100).unwrap(), &g).unwrap();
    let vt = p1.x - p0.x;
    assert!((vt - v).abs() <= g.dx.max(v * g.dt), "{vt} vs {v}");
}

#[test]
fn verification_drivers_pass_with_working_controls() {
    let cfg = RunConfig::default();
    let c = verify_conservation(&cfg).unwrap();
    assert!(c.passed, "{}", c.manifest().render());
    assert_eq!(c.identical, 0.0);
    assert!(c.control > 1e-10);
    let e = verify_equivalence(&cfg).unwrap();
    assert!(e.passed, "{}", e.manifest().render());
    assert_eq!(e.zero, 0.0);
    assert!(e.mismatch_control > 1e-8);
}

#[test]
fn convergence_study_edge_cases() {
    let cfg = RunConfig::default();
    assert!(matches!(
        convergence_study(&cfg, 1, &|_| Ok(1.0)),
        Err(Error::Usage(_))
    ));
    // an "exact" solver: every level reports zero error
    let t = convergence_study(&cfg, 3, &|_| Ok(0.0)).unwrap();
    assert_eq!(t.errors, vec![0.0; 3]);
    assert!(t.orders.iter().all(|o| o.is_nan()));
    assert_eq!(t.dx, vec![0.2, 0.1, 0.05]);
    // a synthetic second-order error
    let t = convergence_study(&cfg, 3, &|c| Ok(3.0 * c.dx * c.dx)).unwrap();
    assert!(t.orders.iter().all(|o| (o - 2.0).abs() < 1e-12));
}

fn short_config(dir: &str) -> RunConfig {
    let mut cfg = RunConfig::for_scenario(ScenarioName::LineSoliton);
    cfg.domain.x1 = 12.0;
    cfg.domain.t_end = 0.2;
    cfg.snapshot_every = 10;
    cfg.out_dir = std::env::temp_dir().join(format!("kpmsym-{dir}-{}", std::process::id()));
    cfg
}

#[test]
fn identical_configs_give_identical_outputs() {
    let (a, b) = (short_config("det-a"), short_config("det-b"));
    let (ra, rb) = (simulate(&a).unwrap(), simulate(&b).unwrap());
    write_outputs(&a.out_dir, &ra).unwrap();
    write_outputs(&b.out_dir, &rb).unwrap();
    let keep = |m: &kp_msym::io::Manifest| -> Vec<(String, String)> {
        m.entries
            .iter()
            .filter(|(k, _)| !NONDETERMINISTIC_KEYS.contains(&k.as_str()) && k != "config.out_dir")
            .cloned()
            .collect()
    };
    assert_eq!(keep(&ra.manifest), keep(&rb.manifest));
    let mut names: Vec<_> = std::fs::read_dir(&a.out_dir)
        .unwrap()
        .map(|e| e.unwrap().file_name())
        .filter(|n| n.to_string_lossy().ends_with(".csv"))
        .collect();
    names.sort();
    assert_eq!(names.len(), 3);
    for n in names {
        let x = std::fs::read(a.out_dir.join(&n)).unwrap();
        let y = std::fs::read(b.out_dir.join(&n)).unwrap();
        assert_eq!(x, y, "{n:?}");
    }
    let _ = std::fs::remove_dir_all(&a.out_dir);
    let _ = std::fs::remove_dir_all(&b.out_dir);
}

#[test]
fn manifest_carries_the_run_quantities() {
    let cfg = short_config("manifest");
    let out = simulate(&cfg).unwrap();
    let m = &out.manifest;
    for key in [
        "version",
        "config.scenario",
        "oracle.time_factor",
        "oracle.lump_denominator_power",
        "oracle.unambiguous",
        "final.l2",
        "final.linf",
        "final.crest_intercept",
        "final.amplitude",
        "mass.relative_drift",
        "snapshot.000010.linf",
        "solver.max_residual",
        "wall_clock_s",
    ] {
        assert!(m.get(key).is_some(), "missing {key}");
    }
    assert_eq!(m.get("oracle.time_factor"), Some("1"));
    assert_eq!(m.get("oracle.lump_denominator_power"), Some("2"));
    assert_eq!(m.get_f64("params.time_factor"), Some(1.0));
}
