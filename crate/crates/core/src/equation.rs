//! Equation conventions, the ten-component multisymplectic state, the
//! structure matrices `M`, `K`, `L`, the Hamiltonian `S` and the Legendre lift.
//!
//! The system solved throughout the crate is
//!
//! ```text
//! τ M Z_t + K Z_x + L Z_y = ∇S(Z),    τ = time_factor / 2,
//! ```
//!
//! which for `time_factor = 2` is the system with unit `M` coefficient and for
//! `time_factor = 1` corresponds to the scalar equation
//! `(u_t + 2c u u_x + u_xxx)_x + σ u_yy = 0` (with `c = nonlin_coeff`).

use std::ops::{Add, Index, IndexMut, Mul, Sub};

use crate::error::{Error, Result};
use crate::grid::{Field, GridSpec};

pub const NCOMP: usize = 10;

/// Component order of [`StateZ`]. Every matrix, residual and field uses it.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Component {
    Phi = 0,
    V = 1,
    U = 2,
    W = 3,
    P = 4,
    Px = 5,
    Pxx = 6,
    Pxy = 7,
    Pxt = 8,
    Pxxx = 9,
}

impl Component {
    pub const ALL: [Component; NCOMP] = [
        Component::Phi,
        Component::V,
        Component::U,
        Component::W,
        Component::P,
        Component::Px,
        Component::Pxx,
        Component::Pxy,
        Component::Pxt,
        Component::Pxxx,
    ];

    #[inline]
    pub const fn index(self) -> usize {
        self as usize
    }

    pub const fn name(self) -> &'static str {
        match self {
            Component::Phi => "phi",
            Component::V => "v",
            Component::U => "u",
            Component::W => "w",
            Component::P => "p",
            Component::Px => "px",
            Component::Pxx => "pxx",
            Component::Pxy => "pxy",
            Component::Pxt => "pxt",
            Component::Pxxx => "pxxx",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EquationParams {
    pub sigma: f64,
    pub time_factor: f64,
    pub nonlin_coeff: f64,
}

impl Default for EquationParams {
    /// KPI with the unit time coefficient under which the closed-form
    /// solutions in [`crate::solutions`] are exact.
    fn default() -> Self {
        Self {
            sigma: -3.0,
            time_factor: 1.0,
            nonlin_coeff: 3.0,
        }
    }
}

impl EquationParams {
    pub fn new(sigma: f64, time_factor: f64, nonlin_coeff: f64) -> Result<Self> {
        let p = Self {
            sigma,
            time_factor,
            nonlin_coeff,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !self.sigma.is_finite() || self.sigma == 0.0 {
            return Err(Error::InvalidParameter {
                name: "sigma",
                reason: format!("must be finite and nonzero, got {}", self.sigma),
            });
        }
        if self.time_factor != 1.0 && self.time_factor != 2.0 {
            return Err(Error::InvalidParameter {
                name: "time_factor",
                reason: format!("must be 1 or 2, got {}", self.time_factor),
            });
        }
        if !(self.nonlin_coeff > 0.0 && self.nonlin_coeff.is_finite()) {
            return Err(Error::InvalidParameter {
                name: "nonlin_coeff",
                reason: format!("must be positive, got {}", self.nonlin_coeff),
            });
        }
        Ok(())
    }

    /// Coefficient multiplying `M Z_t`.
    #[inline]
    pub fn tau(&self) -> f64 {
        0.5 * self.time_factor
    }
}

/// The ten-component state `(φ, v, u, w, p, p^x, p^xx, p^xy, p^xt, p^xxx)`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct StateZ(pub [f64; NCOMP]);

impl StateZ {
    pub const LEN: usize = NCOMP;

    pub const fn zero() -> Self {
        StateZ([0.0; NCOMP])
    }

    pub fn from_slice(s: &[f64]) -> Self {
        let mut z = [0.0; NCOMP];
        z.copy_from_slice(&s[..NCOMP]);
        StateZ(z)
    }

    pub fn as_array(&self) -> &[f64; NCOMP] {
        &self.0
    }

    pub fn dot(&self, other: &StateZ) -> f64 {
        self.0.iter().zip(&other.0).map(|(a, b)| a * b).sum()
    }

    pub fn max_abs(&self) -> f64 {
        self.0.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|v| v.is_finite())
    }
}

impl Index<Component> for StateZ {
    type Output = f64;
    #[inline]
    fn index(&self, c: Component) -> &f64 {
        &self.0[c.index()]
    }
}

impl IndexMut<Component> for StateZ {
    #[inline]
    fn index_mut(&mut self, c: Component) -> &mut f64 {
        &mut self.0[c.index()]
    }
}

impl Add for StateZ {
    type Output = StateZ;
    fn add(mut self, rhs: StateZ) -> StateZ {
        for (a, b) in self.0.iter_mut().zip(rhs.0) {
            *a += b;
        }
        self
    }
}

impl Sub for StateZ {
    type Output = StateZ;
    fn sub(mut self, rhs: StateZ) -> StateZ {
        for (a, b) in self.0.iter_mut().zip(rhs.0) {
            *a -= b;
        }
        self
    }
}

impl Mul<StateZ> for f64 {
    type Output = StateZ;
    fn mul(self, mut rhs: StateZ) -> StateZ {
        for a in rhs.0.iter_mut() {
            *a *= self;
        }
        rhs
    }
}

pub type Mat10 = [[f64; NCOMP]; NCOMP];

/// Applies a dense 10x10 matrix to a state.
pub fn mat_apply(m: &Mat10, z: &StateZ) -> StateZ {
    let mut out = StateZ::zero();
    for (r, row) in m.iter().enumerate() {
        out.0[r] = row.iter().zip(&z.0).map(|(a, b)| a * b).sum();
    }
    out
}

/// The constant skew-symmetric structure matrices.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MsymOperators {
    pub m: Mat10,
    pub k: Mat10,
    pub l: Mat10,
}

impl MsymOperators {
    /// Nonzero entries `(row, col, value)` of a structure matrix.
    pub fn nonzeros(mat: &Mat10) -> Vec<(usize, usize, f64)> {
        let mut out = Vec::new();
        for (r, row) in mat.iter().enumerate() {
            for (c, &v) in row.iter().enumerate() {
                if v != 0.0 {
                    out.push((r, c, v));
                }
            }
        }
        out
    }
}

pub fn build_matrices() -> MsymOperators {
    use Component::*;
    let mut m = [[0.0; NCOMP]; NCOMP];
    let mut k = [[0.0; NCOMP]; NCOMP];
    let mut l = [[0.0; NCOMP]; NCOMP];
    let pair = |mat: &mut Mat10, a: Component, b: Component| {
        mat[a.index()][b.index()] = 1.0;
        mat[b.index()][a.index()] = -1.0;
    };
    pair(&mut m, V, Pxt);
    pair(&mut k, Phi, Px);
    pair(&mut k, V, Pxx);
    pair(&mut k, U, Pxxx);
    pair(&mut l, V, Pxy);
    MsymOperators { m, k, l }
}

/// `S(Z) = u p + ½(p^xxx)² + (σ/2)w² + (c/3)u³ − p^x v − p^xx u − p^xt p − p^xy w`.
pub fn hamiltonian_s(z: &StateZ, params: &EquationParams) -> f64 {
    use Component::*;
    let c = params.nonlin_coeff;
    z[U] * z[P] + 0.5 * z[Pxxx] * z[Pxxx] + 0.5 * params.sigma * z[W] * z[W]
        + c / 3.0 * z[U] * z[U] * z[U]
        - z[Px] * z[V]
        - z[Pxx] * z[U]
        - z[Pxt] * z[P]
        - z[Pxy] * z[W]
}

pub fn grad_s(z: &StateZ, params: &EquationParams) -> StateZ {
    use Component::*;
    let mut g = StateZ::zero();
    g[V] = -z[Px];
    g[U] = z[P] + params.nonlin_coeff * z[U] * z[U] - z[Pxx];
    g[W] = params.sigma * z[W] - z[Pxy];
    g[P] = z[U] - z[Pxt];
    g[Px] = -z[V];
    g[Pxx] = -z[U];
    g[Pxy] = -z[W];
    g[Pxt] = -z[P];
    g[Pxxx] = z[Pxxx];
    g
}

/// Exact Hessian of `S`; only the `(u, u)` entry depends on the state.
pub fn hessian_s(z: &StateZ, params: &EquationParams) -> Mat10 {
    use Component::*;
    let mut h = [[0.0; NCOMP]; NCOMP];
    let mut sym = |a: Component, b: Component, v: f64| {
        h[a.index()][b.index()] = v;
        h[b.index()][a.index()] = v;
    };
    sym(U, U, 2.0 * params.nonlin_coeff * z[U]);
    sym(U, P, 1.0);
    sym(U, Pxx, -1.0);
    sym(Pxxx, Pxxx, 1.0);
    sym(W, W, params.sigma);
    sym(V, Px, -1.0);
    sym(W, Pxy, -1.0);
    sym(P, Pxt, -1.0);
    h
}

/// A scalar potential `φ` and the partial derivatives the lift consumes.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct PotentialJet {
    pub phi: f64,
    pub x: f64,
    pub xx: f64,
    pub xxx: f64,
    pub xxxx: f64,
    pub xxxxx: f64,
    pub xy: f64,
    pub xyy: f64,
    pub xt: f64,
    pub xxt: f64,
}

impl PotentialJet {
    pub fn scale(&self, s: f64) -> Self {
        Self {
            phi: s * self.phi,
            x: s * self.x,
            xx: s * self.xx,
            xxx: s * self.xxx,
            xxxx: s * self.xxxx,
            xxxxx: s * self.xxxxx,
            xy: s * self.xy,
            xyy: s * self.xyy,
            xt: s * self.xt,
            xxt: s * self.xxt,
        }
    }

    pub fn add(&self, o: &Self) -> Self {
        Self {
            phi: self.phi + o.phi,
            x: self.x + o.x,
            xx: self.xx + o.xx,
            xxx: self.xxx + o.xxx,
            xxxx: self.xxxx + o.xxxx,
            xxxxx: self.xxxxx + o.xxxxx,
            xy: self.xy + o.xy,
            xyy: self.xyy + o.xyy,
            xt: self.xt + o.xt,
            xxt: self.xxt + o.xxt,
        }
    }
}

/// Pointwise provider of a potential and its derivatives.
pub trait PotentialSampler {
    fn jet(&self, x: f64, y: f64, t: f64) -> Result<PotentialJet>;
}

impl<F> PotentialSampler for F
where
    F: Fn(f64, f64, f64) -> Result<PotentialJet>,
{
    fn jet(&self, x: f64, y: f64, t: f64) -> Result<PotentialJet> {
        self(x, y, t)
    }
}

/// Central-difference weights for the `order`-th derivative on offsets
/// `-half..=half` (unit spacing), by solving the Vandermonde moment system.
pub fn central_weights(order: usize, half: usize) -> Vec<f64> {
    let n = 2 * half + 1;
    assert!(order < n, "stencil too narrow for derivative order");
    // a[r][c] = offset_c^r / r!, rhs = e_order
    let offsets: Vec<f64> = (0..n).map(|c| c as f64 - half as f64).collect();
    let mut a = vec![vec![0.0; n + 1]; n];
    let mut fact = 1.0;
    for (r, row) in a.iter_mut().enumerate() {
        if r > 0 {
            fact *= r as f64;
        }
        for c in 0..n {
            row[c] = offsets[c].powi(r as i32) / fact;
        }
        row[n] = if r == order { 1.0 } else { 0.0 };
    }
    for col in 0..n {
        let piv = (col..n)
            .max_by(|&p, &q| a[p][col].abs().total_cmp(&a[q][col].abs()))
            .unwrap();
        a.swap(col, piv);
        for r in 0..n {
            if r != col {
                let f = a[r][col] / a[col][col];
                if f != 0.0 {
                    for c in col..=n {
                        a[r][c] -= f * a[col][c];
                    }
                }
            }
        }
    }
    (0..n).map(|r| a[r][n] / a[r][r]).collect()
}

/// Potential sampler that differentiates a scalar closure numerically.
///
/// Uses fourth-order central stencils with step `h` in every direction
/// (5 points for first and second derivatives, 7 for third and fourth, 9 for
/// the fifth). Mixed derivatives are tensor products. The default step
/// `1e-2` balances truncation (`O(h^4)`) against round-off for unit-scale
/// potentials.
pub struct FdPotentialSampler<F> {
    f: F,
    h: f64,
}

impl<F: Fn(f64, f64, f64) -> f64> FdPotentialSampler<F> {
    pub const DEFAULT_STEP: f64 = 1e-2;

    pub fn new(f: F) -> Self {
        Self {
            f,
            h: Self::DEFAULT_STEP,
        }
    }

    pub fn with_step(f: F, h: f64) -> Result<Self> {
        if !(h > 0.0 && h.is_finite()) {
            return Err(Error::InvalidParameter {
                name: "h",
                reason: format!("finite-difference step must be positive, got {h}"),
            });
        }
        Ok(Self { f, h })
    }

    fn weights(order: usize) -> (usize, Vec<f64>) {
        let half = match order {
            0 => 0,
            1 | 2 => 2,
            3 | 4 => 3,
            _ => 4,
        };
        (half, central_weights(order, half))
    }

    /// Mixed derivative of orders `(ox, oy, ot)`.
    fn deriv(&self, x: f64, y: f64, t: f64, ox: usize, oy: usize, ot: usize) -> f64 {
        let h = self.h;
        let (hx, wx) = Self::weights(ox);
        let (hy, wy) = Self::weights(oy);
        let (ht, wt) = Self::weights(ot);
        let mut acc = 0.0;
        for (a, wa) in wx.iter().enumerate() {
            for (b, wb) in wy.iter().enumerate() {
                for (c, wc) in wt.iter().enumerate() {
                    let w = wa * wb * wc;
                    if w == 0.0 {
                        continue;
                    }
                    let xs = x + (a as f64 - hx as f64) * h;
                    let ys = y + (b as f64 - hy as f64) * h;
                    let ts = t + (c as f64 - ht as f64) * h;
                    acc += w * (self.f)(xs, ys, ts);
                }
            }
        }
        acc / h.powi((ox + oy + ot) as i32)
    }
}

impl<F: Fn(f64, f64, f64) -> f64> PotentialSampler for FdPotentialSampler<F> {
    fn jet(&self, x: f64, y: f64, t: f64) -> Result<PotentialJet> {
        let j = PotentialJet {
            phi: (self.f)(x, y, t),
            x: self.deriv(x, y, t, 1, 0, 0),
            xx: self.deriv(x, y, t, 2, 0, 0),
            xxx: self.deriv(x, y, t, 3, 0, 0),
            xxxx: self.deriv(x, y, t, 4, 0, 0),
            xxxxx: self.deriv(x, y, t, 5, 0, 0),
            xy: self.deriv(x, y, t, 1, 1, 0),
            xyy: self.deriv(x, y, t, 1, 2, 0),
            xt: self.deriv(x, y, t, 1, 0, 1),
            xxt: self.deriv(x, y, t, 2, 0, 1),
        };
        if !j.xxxxx.is_finite() || !j.phi.is_finite() || !j.xxt.is_finite() {
            return Err(Error::NonFinite("potential sampler"));
        }
        Ok(j)
    }
}

/// Legendre lift of one potential jet.
pub fn lift_jet(j: &PotentialJet, params: &EquationParams) -> StateZ {
    use Component::*;
    let a = params.time_factor;
    let c = params.nonlin_coeff;
    let tau = params.tau();
    let mut z = StateZ::zero();
    z[Phi] = j.phi;
    z[V] = j.x;
    z[U] = j.xx;
    z[W] = j.xy;
    z[P] = tau * j.xt;
    z[Px] = -(a * j.xxt + 2.0 * c * j.xx * j.xxx + params.sigma * j.xyy + j.xxxxx);
    z[Pxx] = tau * j.xt + c * j.xx * j.xx + j.xxxx;
    z[Pxy] = params.sigma * j.xy;
    z[Pxt] = j.xx;
    z[Pxxx] = -j.xxx;
    z
}

/// State-valued sampler produced by [`lift_from_potential`].
pub struct LiftedSampler<S> {
    sampler: S,
    params: EquationParams,
}

impl<S: PotentialSampler> LiftedSampler<S> {
    pub fn state(&self, x: f64, y: f64, t: f64) -> Result<StateZ> {
        Ok(lift_jet(&self.sampler.jet(x, y, t)?, &self.params))
    }

    /// Samples the lifted state at every node of `grid`.
    pub fn sample(&self, grid: &GridSpec) -> Result<Field> {
        let mut out = Field::zeros(*grid, NCOMP);
        for k in 0..grid.nt {
            for j in 0..grid.ny {
                for i in 0..grid.nx {
                    out.set_state(i, j, k, self.state(grid.x(i), grid.y(j), grid.t(k))?);
                }
            }
        }
        Ok(out)
    }

    pub fn params(&self) -> &EquationParams {
        &self.params
    }
}

/// The lifted momenta are
/// `p = τφ_xt`, `p^x = −(aφ_xxt + 2cφ_xxφ_xxx + σφ_xyy + φ_xxxxx)`,
/// `p^xx = τφ_xt + cφ_xx² + φ_xxxx`, `p^xy = σφ_xy`, `p^xt = φ_xx`,
/// `p^xxx = −φ_xxx`, with `a = time_factor`, `τ = a/2`, `c = nonlin_coeff`.
pub fn lift_from_potential<S: PotentialSampler>(
    sampler: S,
    params: &EquationParams,
) -> LiftedSampler<S> {
    LiftedSampler {
        sampler,
        params: *params,
    }
}

/// Output of [`continuous_residual`]: residuals at interior nodes, zeros and a
/// `false` flag on the boundary.
#[derive(Debug, Clone)]
pub struct ContinuousResidual {
    pub residual: Field,
    pub interior: Vec<bool>,
}

impl ContinuousResidual {
    pub fn max_abs_interior(&self) -> f64 {
        self.residual.max_abs()
    }
}

/// Residual of `τ M Z_t + K Z_x + L Z_y − ∇S(Z)` with second-order centred
/// differences in all three directions.
pub fn continuous_residual(zfield: &Field, params: &EquationParams) -> Result<ContinuousResidual> {
    let g = *zfield.grid();
    g.require(3, 3, 3, "continuous_residual")?;
    if zfield.ncomp() != NCOMP {
        return Err(Error::GridMismatch("continuous_residual needs a 10-component field".into()));
    }
    let ops = build_matrices();
    let tau = params.tau();
    let mut res = Field::zeros(g, NCOMP);
    let mut interior = vec![false; g.node_count()];
    for k in 1..g.nt - 1 {
        for j in 1..g.ny - 1 {
            for i in 1..g.nx - 1 {
                let zt = (0.5 / g.dt) * (zfield.state(i, j, k + 1) - zfield.state(i, j, k - 1));
                let zx = (0.5 / g.dx) * (zfield.state(i + 1, j, k) - zfield.state(i - 1, j, k));
                let zy = (0.5 / g.dy) * (zfield.state(i, j + 1, k) - zfield.state(i, j - 1, k));
                let r = tau * mat_apply(&ops.m, &zt) + mat_apply(&ops.k, &zx) + mat_apply(&ops.l, &zy)
                    - grad_s(&zfield.state(i, j, k), params);
                res.set_state(i, j, k, r);
                interior[(k * g.ny + j) * g.nx + i] = true;
            }
        }
    }
    Ok(ContinuousResidual {
        residual: res,
        interior,
    })
}
