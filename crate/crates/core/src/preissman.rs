//! Box (Preissman) scheme for the ten-component system: residual, slab-wise
//! Newton solver, tangent (variational) solver and the discrete
//! multisymplectic conservation law.
//!
//! Per box with lower corner `(i, j, k)` the scheme reads
//!
//! ```text
//! (τ/Δt) M (Z_{i+½,j+½,k+1} − Z_{i+½,j+½,k}) + (1/Δx) K (Z_{i+1,j+½,k+½} − Z_{i,j+½,k+½})
//!   + (1/Δy) L (Z_{i+½,j+1,k+½} − Z_{i+½,j,k+½}) = ∇S(Z_{i+½,j+½,k+½})
//! ```
//!
//! with every half-index value the mean of the adjacent corners.
//!
//! # Boundary closure
//!
//! A time slab holds `10 (nx−1)(ny−1)` box equations for `10 nx ny` new values,
//! so the level-`k+1` values cannot all be free, and prescribing all ten
//! components on the whole boundary ring over-determines the slab. The solver
//! prescribes the subset given by [`is_prescribed`] and adds, along the bottom
//! row, the time-averaged edge relation
//! `(v_{i+1} − v_i)/Δx = (u_{i+1} + u_i)/2`. The resulting square system is
//! nonsingular on the grids exercised in the tests, and its `u` component
//! satisfies the forty-five-point scheme of [`crate::reduced`] to round-off.

use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::equation::{
    build_matrices, grad_s, hessian_s, mat_apply, Component, EquationParams, Mat10, MsymOperators,
    StateZ, NCOMP,
};
use crate::error::{Error, Result};
use crate::grid::{Axis, Field, GridSpec};
use crate::sparse::{SparseLuSolver, TripletMatrix};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolveMethod {
    Newton,
    /// Chord iteration: the Jacobian of the first iterate is factorized once
    /// per slab and reused.
    FixedPoint,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverOptions {
    pub tol_residual: f64,
    pub max_iters: usize,
    pub method: SolveMethod,
    /// When set, Jacobian columns are one-sided differences with this step
    /// instead of the analytic assembly. Meant for cross-checks on tiny grids.
    pub fd_jacobian_step: Option<f64>,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            tol_residual: 1e-10,
            max_iters: 50,
            method: SolveMethod::Newton,
            fd_jacobian_step: None,
        }
    }
}

impl SolverOptions {
    pub fn validate(&self) -> Result<()> {
        if !(self.tol_residual > 0.0) {
            return Err(Error::InvalidParameter {
                name: "tol_residual",
                reason: "must be positive".into(),
            });
        }
        if self.max_iters == 0 {
            return Err(Error::InvalidParameter {
                name: "max_iters",
                reason: "must be at least 1".into(),
            });
        }
        if let Some(h) = self.fd_jacobian_step {
            if !(h > 0.0 && h.is_finite()) {
                return Err(Error::InvalidParameter {
                    name: "fd_jacobian_step",
                    reason: "must be positive".into(),
                });
            }
        }
        Ok(())
    }
}

/// Averages a field over the `2^|axes|` corners adjacent to each half-index point.
pub fn box_average(field: &Field, axes: &[Axis]) -> Result<Field> {
    let g = field.grid();
    let sg = g.staggered(axes)?;
    let ax = axes.contains(&Axis::X) as usize;
    let ay = axes.contains(&Axis::Y) as usize;
    let at = axes.contains(&Axis::T) as usize;
    let count = ((1 + ax) * (1 + ay) * (1 + at)) as f64;
    let nc = field.ncomp();
    let mut out = Field::zeros(sg, nc);
    for k in 0..sg.nt {
        for j in 0..sg.ny {
            for i in 0..sg.nx {
                for c in 0..nc {
                    let mut s = 0.0;
                    for dk in 0..=at {
                        for dj in 0..=ay {
                            for di in 0..=ax {
                                s += field.get(i + di, j + dj, k + dk, c);
                            }
                        }
                    }
                    out.set(i, j, k, c, s / count);
                }
            }
        }
    }
    Ok(out)
}

/// Per-box residual of the scheme. The result lives on the staggered grid of
/// box centres and is indexed by each box's lower corner.
pub type BoxResidual = Field;

/// Tangent solutions share the layout of ten-component fields.
pub type TangentField = Field;

#[derive(Debug, Clone, Copy)]
struct SlabGeom {
    nx: usize,
    ny: usize,
    dx: f64,
    dy: f64,
    dt: f64,
    tau: f64,
}

impl SlabGeom {
    fn new(g: &GridSpec, params: &EquationParams) -> Self {
        Self {
            nx: g.nx,
            ny: g.ny,
            dx: g.dx,
            dy: g.dy,
            dt: g.dt,
            tau: params.tau(),
        }
    }

    #[inline]
    fn at(&self, level: &[f64], i: usize, j: usize) -> StateZ {
        let o = (j * self.nx + i) * NCOMP;
        StateZ::from_slice(&level[o..o + NCOMP])
    }
}

/// Face and centre averages of one box.
struct BoxAverages {
    t0: StateZ,
    t1: StateZ,
    xl: StateZ,
    xr: StateZ,
    yb: StateZ,
    yt: StateZ,
    mid: StateZ,
}

fn box_averages(g: &SlabGeom, z0: &[f64], z1: &[f64], i: usize, j: usize) -> BoxAverages {
    // c[dt][dj][di]
    let c = [
        [
            [g.at(z0, i, j), g.at(z0, i + 1, j)],
            [g.at(z0, i, j + 1), g.at(z0, i + 1, j + 1)],
        ],
        [
            [g.at(z1, i, j), g.at(z1, i + 1, j)],
            [g.at(z1, i, j + 1), g.at(z1, i + 1, j + 1)],
        ],
    ];
    let mut a = BoxAverages {
        t0: StateZ::zero(),
        t1: StateZ::zero(),
        xl: StateZ::zero(),
        xr: StateZ::zero(),
        yb: StateZ::zero(),
        yt: StateZ::zero(),
        mid: StateZ::zero(),
    };
    for n in 0..NCOMP {
        let v = |dt: usize, dj: usize, di: usize| c[dt][dj][di].0[n];
        a.t0.0[n] = 0.25 * (v(0, 0, 0) + v(0, 0, 1) + v(0, 1, 0) + v(0, 1, 1));
        a.t1.0[n] = 0.25 * (v(1, 0, 0) + v(1, 0, 1) + v(1, 1, 0) + v(1, 1, 1));
        a.xl.0[n] = 0.25 * (v(0, 0, 0) + v(0, 1, 0) + v(1, 0, 0) + v(1, 1, 0));
        a.xr.0[n] = 0.25 * (v(0, 0, 1) + v(0, 1, 1) + v(1, 0, 1) + v(1, 1, 1));
        a.yb.0[n] = 0.25 * (v(0, 0, 0) + v(0, 0, 1) + v(1, 0, 0) + v(1, 0, 1));
        a.yt.0[n] = 0.25 * (v(0, 1, 0) + v(0, 1, 1) + v(1, 1, 0) + v(1, 1, 1));
        a.mid.0[n] = 0.125
            * (v(0, 0, 0)
                + v(0, 0, 1)
                + v(0, 1, 0)
                + v(0, 1, 1)
                + v(1, 0, 0)
                + v(1, 0, 1)
                + v(1, 1, 0)
                + v(1, 1, 1));
    }
    a
}

/// Difference part `(τ/Δt) M δ_t + (1/Δx) K δ_x + (1/Δy) L δ_y` of one box.
fn difference_terms(g: &SlabGeom, ops: &MsymOperators, a: &BoxAverages) -> StateZ {
    (g.tau / g.dt) * mat_apply(&ops.m, &(a.t1 - a.t0))
        + (1.0 / g.dx) * mat_apply(&ops.k, &(a.xr - a.xl))
        + (1.0 / g.dy) * mat_apply(&ops.l, &(a.yt - a.yb))
}

/// Residual of every box in the field.
pub fn scheme_residual(zfield: &Field, params: &EquationParams) -> Result<BoxResidual> {
    let g = zfield.grid();
    g.require(2, 2, 2, "scheme_residual")?;
    check_state_field(zfield)?;
    let sg = g.staggered(&[Axis::X, Axis::Y, Axis::T])?;
    let geom = SlabGeom::new(g, params);
    let ops = build_matrices();
    let level = g.nodes_per_level() * NCOMP;
    let mut out = Field::zeros(sg, NCOMP);
    for k in 0..sg.nt {
        let z0 = &zfield.values()[k * level..(k + 1) * level];
        let z1 = &zfield.values()[(k + 1) * level..(k + 2) * level];
        for j in 0..sg.ny {
            for i in 0..sg.nx {
                let a = box_averages(&geom, z0, z1, i, j);
                let r = difference_terms(&geom, &ops, &a) - grad_s(&a.mid, params);
                out.set_state(i, j, k, r);
            }
        }
    }
    Ok(out)
}

fn check_state_field(f: &Field) -> Result<()> {
    if f.ncomp() != NCOMP {
        return Err(Error::GridMismatch(format!(
            "expected a {NCOMP}-component field, got {}",
            f.ncomp()
        )));
    }
    Ok(())
}

/// Whether component `c` at spatial node `(i, j)` of a new time level is taken
/// from the boundary data rather than solved for.
pub fn is_prescribed(i: usize, j: usize, c: Component, nx: usize, ny: usize) -> bool {
    use Component::*;
    let left = i == 0;
    let bottom = j == 0;
    match c {
        U => i < 2 || i + 2 >= nx || bottom || j + 1 == ny,
        V | Pxy => left,
        Phi | P | Pxt | W => left || bottom,
        Px | Pxx | Pxxx => bottom || (left && j <= 1),
    }
}

/// Residual of the bottom-row edge relation between boxes `i` and `i+1`.
fn edge_residual(g: &SlabGeom, z0: &[f64], z1: &[f64], i: usize) -> f64 {
    let v = Component::V.index();
    let u = Component::U.index();
    let at = |lvl: &[f64], ii: usize, c: usize| lvl[ii * NCOMP + c];
    let vr = 0.5 * (at(z0, i + 1, v) + at(z1, i + 1, v));
    let vl = 0.5 * (at(z0, i, v) + at(z1, i, v));
    let ur = 0.5 * (at(z0, i + 1, u) + at(z1, i + 1, u));
    let ul = 0.5 * (at(z0, i, u) + at(z1, i, u));
    (vr - vl) / g.dx - 0.5 * (ur + ul)
}

/// How the right-hand side of a slab is evaluated.
#[derive(Clone, Copy)]
enum Rhs<'a> {
    /// `∇S` at the box centre of the unknown level pair.
    Nonlinear,
    /// `Hess S(base centre) · dZ centre`, for the variational equation.
    Linearized { base0: &'a [f64], base1: &'a [f64] },
}

/// One time slab `k → k+1`: the unknown map and residual/Jacobian assembly.
struct Slab {
    geom: SlabGeom,
    params: EquationParams,
    ops: MsymOperators,
    unknown_of: Vec<Option<usize>>,
    free: Vec<usize>,
}

impl Slab {
    fn new(grid: &GridSpec, params: &EquationParams) -> Result<Self> {
        grid.require(5, 3, 2, "the box-scheme slab solver")?;
        let (nx, ny) = (grid.nx, grid.ny);
        let mut unknown_of = vec![None; nx * ny * NCOMP];
        let mut free = Vec::new();
        for j in 0..ny {
            for i in 0..nx {
                for c in Component::ALL {
                    if !is_prescribed(i, j, c, nx, ny) {
                        let slot = (j * nx + i) * NCOMP + c.index();
                        unknown_of[slot] = Some(free.len());
                        free.push(slot);
                    }
                }
            }
        }
        let equations = NCOMP * (nx - 1) * (ny - 1) + (nx - 1);
        if equations != free.len() {
            return Err(Error::GridTooSmall(format!(
                "slab has {equations} equations for {} unknowns",
                free.len()
            )));
        }
        Ok(Self {
            geom: SlabGeom::new(grid, params),
            params: *params,
            ops: build_matrices(),
            unknown_of,
            free,
        })
    }

    fn n(&self) -> usize {
        self.free.len()
    }

    fn residual(&self, z0: &[f64], z1: &[f64], rhs: Rhs<'_>) -> Vec<f64> {
        let g = &self.geom;
        let mut r = Vec::with_capacity(self.n());
        for j in 0..g.ny - 1 {
            for i in 0..g.nx - 1 {
                let a = box_averages(g, z0, z1, i, j);
                let lhs = difference_terms(g, &self.ops, &a);
                let src = match rhs {
                    Rhs::Nonlinear => grad_s(&a.mid, &self.params),
                    Rhs::Linearized { base0, base1 } => {
                        let b = box_averages(g, base0, base1, i, j);
                        mat_apply(&hessian_s(&b.mid, &self.params), &a.mid)
                    }
                };
                r.extend_from_slice((lhs - src).as_array());
            }
        }
        for i in 0..g.nx - 1 {
            r.push(edge_residual(g, z0, z1, i));
        }
        r
    }

    /// Analytic Jacobian with respect to the free level-`k+1` values, with the
    /// Hessian evaluated at the box centres of `(z0, z1)`.
    fn jacobian(&self, z0: &[f64], z1: &[f64]) -> TripletMatrix {
        let g = &self.geom;
        let mut jac = TripletMatrix::with_capacity(self.n(), self.n() * 16);
        let mut row = 0;
        for j in 0..g.ny - 1 {
            for i in 0..g.nx - 1 {
                let a = box_averages(g, z0, z1, i, j);
                let h = hessian_s(&a.mid, &self.params);
                for dj in 0..2 {
                    for di in 0..2 {
                        let sx = if di == 1 { 1.0 } else { -1.0 };
                        let sy = if dj == 1 { 1.0 } else { -1.0 };
                        let block = corner_block(g, &self.ops, &h, sx, sy);
                        let node = ((j + dj) * g.nx + i + di) * NCOMP;
                        for c in 0..NCOMP {
                            let Some(col) = self.unknown_of[node + c] else {
                                continue;
                            };
                            for (r, brow) in block.iter().enumerate() {
                                let v = brow[c];
                                if v != 0.0 {
                                    jac.push(row + r, col, v);
                                }
                            }
                        }
                    }
                }
                row += NCOMP;
            }
        }
        let v = Component::V.index();
        let u = Component::U.index();
        for i in 0..g.nx - 1 {
            for (ii, sign) in [(i, -1.0), (i + 1, 1.0)] {
                if let Some(col) = self.unknown_of[ii * NCOMP + v] {
                    jac.push(row, col, sign * 0.5 / g.dx);
                }
                if let Some(col) = self.unknown_of[ii * NCOMP + u] {
                    jac.push(row, col, -0.25);
                }
            }
            row += 1;
        }
        jac
    }

    /// Forward-difference Jacobian, same pattern as [`Slab::jacobian`] plus any
    /// extra nonzeros the differences reveal.
    fn fd_jacobian(&self, z0: &[f64], z1: &[f64], h: f64) -> TripletMatrix {
        let r0 = self.residual(z0, z1, Rhs::Nonlinear);
        let mut jac = TripletMatrix::new(self.n());
        let mut zp = z1.to_vec();
        for (col, &slot) in self.free.iter().enumerate() {
            let keep = zp[slot];
            zp[slot] = keep + h;
            let rp = self.residual(z0, &zp, Rhs::Nonlinear);
            zp[slot] = keep;
            for (row, (a, b)) in rp.iter().zip(&r0).enumerate() {
                let d = (a - b) / h;
                if d != 0.0 {
                    jac.push(row, col, d);
                }
            }
        }
        jac
    }
}

/// Derivative of one box's equations with respect to one top-level corner.
fn corner_block(g: &SlabGeom, ops: &MsymOperators, h: &Mat10, sx: f64, sy: f64) -> Mat10 {
    let mut b = [[0.0; NCOMP]; NCOMP];
    for r in 0..NCOMP {
        for c in 0..NCOMP {
            b[r][c] = 0.25 * g.tau / g.dt * ops.m[r][c]
                + 0.25 * sx / g.dx * ops.k[r][c]
                + 0.25 * sy / g.dy * ops.l[r][c]
                - 0.125 * h[r][c];
        }
    }
    b
}

fn max_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0_f64, |m, x| m.max(x.abs()))
}

/// Result of [`solve_global`].
#[derive(Debug, Clone)]
pub struct PreissmanSolution {
    pub field: Field,
    /// Largest final slab residual (box equations and edge relations).
    pub max_residual: f64,
    /// Iterations used per slab.
    pub iterations: Vec<usize>,
}

/// Copies level `k` of `src` into a fresh vector.
fn level_of(f: &Field, k: usize) -> &[f64] {
    let n = f.grid().nodes_per_level() * NCOMP;
    &f.values()[k * n..(k + 1) * n]
}

fn impose(slab: &Slab, z1: &mut [f64], data: &[f64]) {
    for (slot, val) in z1.iter_mut().enumerate() {
        if slab.unknown_of[slot].is_none() {
            *val = data[slot];
        }
    }
}

fn check_same_grid(a: &GridSpec, b: &GridSpec) -> Result<()> {
    if a.nx != b.nx || a.ny != b.ny {
        return Err(Error::GridMismatch(format!(
            "spatial sizes {}x{} and {}x{} differ",
            a.nx, a.ny, b.nx, b.ny
        )));
    }
    Ok(())
}

/// One-slab box-scheme solver for runs that keep only the current level.
/// Levels are flat `[(j·nx + i)·10 + c]` vectors.
pub struct BoxStepper {
    slab: Slab,
    opts: SolverOptions,
    lu: SparseLuSolver,
}

/// Outcome of one [`BoxStepper::step`].
#[derive(Debug, Clone, Copy)]
pub struct SlabReport {
    pub iterations: usize,
    pub residual: f64,
}

impl BoxStepper {
    /// `grid` supplies the spatial lattice and `dt`; its `nt` is not used.
    pub fn new(grid: &GridSpec, params: &EquationParams, opts: &SolverOptions) -> Result<Self> {
        opts.validate()?;
        params.validate()?;
        let mut g = *grid;
        g.nt = g.nt.max(2);
        Ok(Self {
            slab: Slab::new(&g, params)?,
            opts: *opts,
            lu: SparseLuSolver::new(),
        })
    }

    pub fn level_len(&self) -> usize {
        self.slab.geom.nx * self.slab.geom.ny * NCOMP
    }

    /// Solves for level `level` from the previous level `z0`; prescribed
    /// entries come from `boundary`, the rest start from `z0`.
    pub fn step(&mut self, z0: &[f64], boundary: &[f64], level: usize) -> Result<(Vec<f64>, SlabReport)> {
        let n = self.level_len();
        if z0.len() != n || boundary.len() != n {
            return Err(Error::GridMismatch(format!(
                "level vectors of length {} and {} for a slab of {n}",
                z0.len(),
                boundary.len()
            )));
        }
        let mut z1 = z0.to_vec();
        impose(&self.slab, &mut z1, boundary);
        let (iterations, residual) =
            newton_slab(&self.slab, z0, &mut z1, &self.opts, &mut self.lu, level)?;
        Ok((z1, SlabReport { iterations, residual }))
    }
}

/// Solves the box scheme slab by slab.
///
/// `initial` supplies level 0 (its first time level is used). `boundary` spans
/// the whole space-time grid and supplies the prescribed values of every later
/// level; its remaining entries are ignored. Each slab starts its iteration
/// from the previous level.
pub fn solve_global(
    initial: &Field,
    boundary: &Field,
    params: &EquationParams,
    opts: &SolverOptions,
) -> Result<PreissmanSolution> {
    check_state_field(initial)?;
    check_state_field(boundary)?;
    let grid = *boundary.grid();
    check_same_grid(initial.grid(), &grid)?;
    grid.require(5, 3, 2, "solve_global")?;
    let mut stepper = BoxStepper::new(&grid, params, opts)?;
    let level_len = stepper.level_len();
    let mut out = Field::zeros(grid, NCOMP);
    out.values_mut()[..level_len].copy_from_slice(level_of(initial, 0));
    let mut iterations = Vec::with_capacity(grid.nt - 1);
    let mut worst = 0.0_f64;
    for k in 0..grid.nt - 1 {
        let z0 = level_of(&out, k).to_vec();
        let (z1, rep) = stepper.step(&z0, level_of(boundary, k + 1), k + 1)?;
        iterations.push(rep.iterations);
        worst = worst.max(rep.residual);
        out.values_mut()[(k + 1) * level_len..(k + 2) * level_len].copy_from_slice(&z1);
    }
    if out.values().iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("solve_global"));
    }
    Ok(PreissmanSolution {
        field: out,
        max_residual: worst,
        iterations,
    })
}

fn newton_slab(
    slab: &Slab,
    z0: &[f64],
    z1: &mut [f64],
    opts: &SolverOptions,
    lu: &mut SparseLuSolver,
    level: usize,
) -> Result<(usize, f64)> {
    let mut r = slab.residual(z0, z1, Rhs::Nonlinear);
    let mut res = max_abs(&r);
    if res <= opts.tol_residual {
        return Ok((0, res));
    }
    let mut frozen = None;
    for it in 1..=opts.max_iters {
        let build = || match opts.fd_jacobian_step {
            Some(h) => slab.fd_jacobian(z0, z1, h),
            None => slab.jacobian(z0, z1),
        };
        let delta = match opts.method {
            SolveMethod::Newton => lu.solve(&build(), &r),
            SolveMethod::FixedPoint => {
                if frozen.is_none() {
                    frozen = Some(lu.factorize(&build()).map_err(|detail| Error::Singular {
                        level,
                        detail,
                    })?);
                }
                frozen.as_ref().unwrap().solve(&r)
            }
        }
        .map_err(|detail| Error::Singular { level, detail })?;
        for (d, &slot) in delta.iter().zip(&slab.free) {
            z1[slot] -= d;
        }
        r = slab.residual(z0, z1, Rhs::Nonlinear);
        res = max_abs(&r);
        if !res.is_finite() {
            return Err(Error::NonFinite("slab residual"));
        }
        if res <= opts.tol_residual {
            return Ok((it, res));
        }
    }
    Err(Error::NonConvergence {
        level,
        iterations: opts.max_iters,
        residual: res,
    })
}

/// Result of [`solve_tangent`].
#[derive(Debug, Clone)]
pub struct TangentSolution {
    pub field: TangentField,
    /// Largest residual of the linearized slab equations.
    pub max_residual: f64,
}

/// Solves the box scheme linearized about `base`. Initial and prescribed
/// values come from `data` under the same rule as [`solve_global`].
pub fn solve_tangent(
    base: &Field,
    data: &Field,
    params: &EquationParams,
) -> Result<TangentSolution> {
    check_state_field(base)?;
    check_state_field(data)?;
    let grid = *base.grid();
    check_same_grid(data.grid(), &grid)?;
    if data.grid().nt != grid.nt {
        return Err(Error::GridMismatch("tangent data and base differ in nt".into()));
    }
    let slab = Slab::new(&grid, params)?;
    let level_len = grid.nodes_per_level() * NCOMP;
    let mut out = Field::zeros(grid, NCOMP);
    out.values_mut()[..level_len].copy_from_slice(level_of(data, 0));
    let mut lu = SparseLuSolver::new();
    let mut worst = 0.0_f64;
    for k in 0..grid.nt - 1 {
        let b0 = level_of(base, k);
        let b1 = level_of(base, k + 1);
        let rhs = Rhs::Linearized {
            base0: b0,
            base1: b1,
        };
        let d0 = level_of(&out, k).to_vec();
        let mut d1 = vec![0.0; level_len];
        impose(&slab, &mut d1, level_of(data, k + 1));
        let fact = lu
            .factorize(&slab.jacobian(b0, b1))
            .map_err(|detail| Error::Singular { level: k + 1, detail })?;
        let mut r = slab.residual(&d0, &d1, rhs);
        let mut res = max_abs(&r);
        // one solve plus a couple of refinement sweeps
        for _ in 0..3 {
            let delta = fact
                .solve(&r)
                .map_err(|detail| Error::Singular { level: k + 1, detail })?;
            for (d, &slot) in delta.iter().zip(&slab.free) {
                d1[slot] -= d;
            }
            let r_new = slab.residual(&d0, &d1, rhs);
            let res_new = max_abs(&r_new);
            let improved = res_new < 0.5 * res;
            r = r_new;
            res = res_new;
            if !improved {
                break;
            }
        }
        worst = worst.max(res);
        out.values_mut()[(k + 1) * level_len..(k + 2) * level_len].copy_from_slice(&d1);
    }
    Ok(TangentSolution {
        field: out,
        max_residual: worst,
    })
}

#[inline]
fn wedge(a: &StateZ, b: &StateZ, p: Component, q: Component) -> f64 {
    a[p] * b[q] - b[p] * a[q]
}

/// Per-box discrete divergence of the three bilinear forms evaluated on the
/// tangent pair `(u, v)`:
///
/// ```text
/// (τ/Δt) δ_t[dv∧dp^xt] + (1/Δy) δ_y[dv∧dp^xy]
///   + (1/Δx) δ_x[dφ∧dp^x + dv∧dp^xx + du∧dp^xxx]
/// ```
///
/// with each form evaluated on face-averaged tangent values.
pub fn discrete_msym_residual(u: &TangentField, v: &TangentField, params: &EquationParams) -> Result<Field> {
    use Component::*;
    check_state_field(u)?;
    u.check_same_shape(v)?;
    let g = *u.grid();
    g.require(2, 2, 2, "discrete_msym_residual")?;
    let sg = g.staggered(&[Axis::X, Axis::Y, Axis::T])?;
    let geom = SlabGeom::new(&g, params);
    let level = g.nodes_per_level() * NCOMP;
    let mut out = Field::zeros(sg, 1);
    for k in 0..sg.nt {
        let (u0, u1) = (
            &u.values()[k * level..(k + 1) * level],
            &u.values()[(k + 1) * level..(k + 2) * level],
        );
        let (v0, v1) = (
            &v.values()[k * level..(k + 1) * level],
            &v.values()[(k + 1) * level..(k + 2) * level],
        );
        for j in 0..sg.ny {
            for i in 0..sg.nx {
                let a = box_averages(&geom, u0, u1, i, j);
                let b = box_averages(&geom, v0, v1, i, j);
                let om_t = |x: &StateZ, y: &StateZ| wedge(x, y, V, Pxt);
                let om_y = |x: &StateZ, y: &StateZ| wedge(x, y, V, Pxy);
                let om_x = |x: &StateZ, y: &StateZ| {
                    wedge(x, y, Phi, Px) + wedge(x, y, V, Pxx) + wedge(x, y, U, Pxxx)
                };
                let r = geom.tau / geom.dt * (om_t(&a.t1, &b.t1) - om_t(&a.t0, &b.t0))
                    + (om_y(&a.yt, &b.yt) - om_y(&a.yb, &b.yb)) / geom.dy
                    + (om_x(&a.xr, &b.xr) - om_x(&a.xl, &b.xl)) / geom.dx;
                out.set(i, j, k, 0, r);
            }
        }
    }
    Ok(out)
}

/// Max per-box conservation residual divided by `max|U| · max|V|`.
pub fn relative_msym_residual(u: &TangentField, v: &TangentField, params: &EquationParams) -> Result<f64> {
    let r = discrete_msym_residual(u, v, params)?;
    let scale = u.max_abs() * v.max_abs();
    if scale == 0.0 {
        return Ok(r.max_abs());
    }
    Ok(r.max_abs() / scale)
}

/// Seeded smooth tangent data: each component is a random quadratic
/// polynomial in the normalized grid indices, coefficients uniform in [−1, 1].
pub fn random_tangent_data(grid: &GridSpec, seed: u64) -> Field {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut coef = [[0.0_f64; 10]; NCOMP];
    for row in coef.iter_mut() {
        for c in row.iter_mut() {
            *c = rng.random_range(-1.0..1.0);
        }
    }
    let norm = |n: usize, i: usize| if n > 1 { i as f64 / (n - 1) as f64 } else { 0.0 };
    let mut out = Field::zeros(*grid, NCOMP);
    for k in 0..grid.nt {
        for j in 0..grid.ny {
            for i in 0..grid.nx {
                let (a, b, c) = (norm(grid.nx, i), norm(grid.ny, j), norm(grid.nt, k));
                let basis = [1.0, a, b, c, a * a, b * b, c * c, a * b, a * c, b * c];
                for (comp, row) in coef.iter().enumerate() {
                    let val: f64 = row.iter().zip(basis).map(|(w, e)| w * e).sum();
                    out.set(i, j, k, comp, val);
                }
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid(nx: usize, ny: usize, nt: usize) -> GridSpec {
        GridSpec::new(0.0, 0.0, 0.0, 0.3, 0.2, 0.05, nx, ny, nt).unwrap()
    }

    #[test]
    fn box_average_examples() {
        let g = grid(5, 3, 3);
        let c = Field::scalar_from_fn(g, |_, _, _| 2.5);
        let a = box_average(&c, &[Axis::X, Axis::T]).unwrap();
        assert!(a.values().iter().all(|&v| v == 2.5));

        let ramp = Field::scalar_from_fn(g, |x, _, _| x / 0.3);
        let a = box_average(&ramp, &[Axis::X]).unwrap();
        for i in 0..4 {
            assert!((a.get(i, 0, 0, 0) - (i as f64 + 0.5)).abs() < 1e-12);
        }

        let g2 = grid(2, 2, 2);
        let mut f = Field::zeros(g2, 1);
        let mut n = 1.0;
        for k in 0..2 {
            for j in 0..2 {
                for i in 0..2 {
                    f.set(i, j, k, 0, n);
                    n += 1.0;
                }
            }
        }
        let a = box_average(&f, &[Axis::X, Axis::Y, Axis::T]).unwrap();
        assert_eq!(a.values(), &[4.5]);
        assert!(box_average(&Field::zeros(grid(1, 3, 3), 1), &[Axis::X]).is_err());
    }

    #[test]
    fn boundary_rule_is_square() {
        for (nx, ny) in [(5, 3), (8, 4), (12, 6), (20, 7)] {
            let g = grid(nx, ny, 2);
            assert!(Slab::new(&g, &EquationParams::default()).is_ok(), "{nx}x{ny}");
        }
    }

    #[test]
    fn analytic_jacobian_matches_differences() {
        let g = grid(6, 4, 2);
        let p = EquationParams::default();
        let slab = Slab::new(&g, &p).unwrap();
        let data = random_tangent_data(&g, 7);
        let z0 = level_of(&data, 0).to_vec();
        let z1 = level_of(&data, 1).to_vec();
        let a = slab.jacobian(&z0, &z1);
        let b = slab.fd_jacobian(&z0, &z1, 1e-7);
        let n = slab.n();
        let mut x = vec![0.0; n];
        for (q, v) in x.iter_mut().enumerate() {
            *v = ((q * 37 % 11) as f64 - 5.0) / 5.0;
        }
        let ya = a.mul_vec(&x);
        let yb = b.mul_vec(&x);
        for (p, q) in ya.iter().zip(&yb) {
            assert!((p - q).abs() < 1e-5 * (1.0 + p.abs()), "{p} vs {q}");
        }
    }

    #[test]
    fn wedge_terms_vanish_on_equal_arguments() {
        let g = grid(5, 3, 3);
        let u = random_tangent_data(&g, 3);
        let r = discrete_msym_residual(&u, &u, &EquationParams::default()).unwrap();
        assert!(r.values().iter().all(|&v| v == 0.0));
    }
}
