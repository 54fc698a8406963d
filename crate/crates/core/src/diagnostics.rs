//! Error norms, peak tracking, drift monitors, the continuous
//! multisymplectic conservation check, and convergence orders.

use crate::equation::{central_weights, EquationParams};
use crate::error::{Error, Result};
use crate::grid::{GridSpec, Plane};
use crate::solutions::{ProbeLattice, Scenario, ScenarioKind};

/// Trapezoid weight of node `i` out of `n` along one axis.
#[inline]
fn trap(i: usize, n: usize, h: f64) -> f64 {
    if n == 1 {
        1.0
    } else if i == 0 || i + 1 == n {
        0.5 * h
    } else {
        h
    }
}

/// Discrete L² (trapezoid-weighted) and max-norm of `u − exact` on level `k`.
pub fn error_norms(u: &Plane, scenario: &Scenario, grid: &GridSpec, k: usize) -> Result<(f64, f64)> {
    if u.nx != grid.nx || u.ny != grid.ny {
        return Err(Error::GridMismatch("plane does not match the grid".into()));
    }
    let t = grid.t(k);
    let mut l2 = 0.0;
    let mut linf = 0.0_f64;
    for j in 0..grid.ny {
        for i in 0..grid.nx {
            let e = u.get(i, j) - scenario.exact_u(grid.x(i), grid.y(j), t)?;
            l2 += trap(i, grid.nx, grid.dx) * trap(j, grid.ny, grid.dy) * e * e;
            linf = linf.max(e.abs());
        }
    }
    Ok((l2.sqrt(), linf))
}

/// Trapezoid integral of `u` over the spatial rectangle.
pub fn mass_integral(u: &Plane, grid: &GridSpec) -> f64 {
    let mut s = 0.0;
    for j in 0..u.ny {
        for i in 0..u.nx {
            s += trap(i, u.nx, grid.dx) * trap(j, u.ny, grid.dy) * u.get(i, j);
        }
    }
    s
}

/// `log₂(e_h / e_{h/2})`.
pub fn convergence_order(e_coarse: f64, e_fine: f64) -> Result<f64> {
    if !(e_coarse > 0.0 && e_fine > 0.0) || !e_coarse.is_finite() || !e_fine.is_finite() {
        return Err(Error::InvalidParameter {
            name: "errors",
            reason: format!("orders need positive errors, got {e_coarse:e} and {e_fine:e}"),
        });
    }
    Ok((e_coarse / e_fine).log2())
}

/// Located maximum of a localized structure.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PointPeak {
    pub x: f64,
    pub y: f64,
    pub amplitude: f64,
    /// False when the quadratic fit was rejected and the grid argmax returned.
    pub refined: bool,
}

/// Crest of a line wave: `x = intercept + slope·y`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CrestLine {
    pub intercept: f64,
    pub slope: f64,
    /// Mean of the refined per-row maxima.
    pub amplitude: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PeakMode {
    CrestLine,
    PointPeak,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Peak {
    Crest(CrestLine),
    Point(PointPeak),
}

/// Dispatches on `mode`; the whole plane is searched.
pub fn peak_track(u: &Plane, grid: &GridSpec, mode: PeakMode) -> Result<Peak> {
    Ok(match mode {
        PeakMode::CrestLine => Peak::Crest(crest_line(u, grid, None)?),
        PeakMode::PointPeak => Peak::Point(point_peak(u, grid)?),
    })
}

fn index_window(grid: &GridSpec, window: Option<(f64, f64)>) -> (usize, usize) {
    match window {
        None => (0, grid.nx - 1),
        Some((a, b)) => {
            let lo = ((a - grid.x0) / grid.dx).ceil().max(0.0) as usize;
            let hi = (((b - grid.x0) / grid.dx).floor().max(0.0) as usize).min(grid.nx - 1);
            (lo, hi)
        }
    }
}

/// Vertex of the parabola through three equally spaced samples, as
/// `(offset in steps, value)`.
fn parabola_vertex(fm: f64, f0: f64, fp: f64) -> (f64, f64) {
    let curv = fm - 2.0 * f0 + fp;
    if curv >= 0.0 {
        return (0.0, f0);
    }
    let s = 0.5 * (fm - fp) / curv;
    (s, f0 - 0.125 * (fm - fp) * (fm - fp) / curv)
}

/// Per-row argmax in x (restricted to `window` when given), refined by a
/// three-point parabola, then a least-squares line through the row maxima.
pub fn crest_line(u: &Plane, grid: &GridSpec, window: Option<(f64, f64)>) -> Result<CrestLine> {
    if u.nx != grid.nx || u.ny != grid.ny {
        return Err(Error::GridMismatch("plane does not match the grid".into()));
    }
    let (lo, hi) = index_window(grid, window);
    if hi < lo + 2 {
        return Err(Error::UntrackablePeak);
    }
    let mut pts = Vec::with_capacity(u.ny);
    for j in 0..u.ny {
        let mut best = lo;
        for i in lo..=hi {
            if u.get(i, j) > u.get(best, j) {
                best = i;
            }
        }
        if best == lo || best == hi {
            return Err(Error::UntrackablePeak);
        }
        let (s, amp) = parabola_vertex(u.get(best - 1, j), u.get(best, j), u.get(best + 1, j));
        pts.push((grid.y(j), grid.x(best) + s * grid.dx, amp));
    }
    let n = pts.len() as f64;
    let amplitude = pts.iter().map(|p| p.2).sum::<f64>() / n;
    if pts.len() == 1 {
        return Ok(CrestLine {
            intercept: pts[0].1,
            slope: 0.0,
            amplitude,
        });
    }
    let my = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let mx = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - my) * (p.1 - mx)).sum();
    let syy: f64 = pts.iter().map(|p| (p.0 - my) * (p.0 - my)).sum();
    let slope = sxy / syy;
    Ok(CrestLine {
        intercept: mx - slope * my,
        slope,
        amplitude,
    })
}

/// Grid argmax refined by a least-squares quadratic over its 3×3
/// neighbourhood. Falls back to the argmax itself when the fit is poor, not
/// concave, or puts the vertex outside the neighbourhood.
pub fn point_peak(u: &Plane, grid: &GridSpec) -> Result<PointPeak> {
    if u.nx != grid.nx || u.ny != grid.ny {
        return Err(Error::GridMismatch("plane does not match the grid".into()));
    }
    let (mut bi, mut bj) = (0, 0);
    for j in 0..u.ny {
        for i in 0..u.nx {
            if u.get(i, j) > u.get(bi, bj) {
                bi = i;
                bj = j;
            }
        }
    }
    if bi == 0 || bj == 0 || bi + 1 == u.nx || bj + 1 == u.ny {
        return Err(Error::UntrackablePeak);
    }
    let fallback = PointPeak {
        x: grid.x(bi),
        y: grid.y(bj),
        amplitude: u.get(bi, bj),
        refined: false,
    };
    let mut f = [[0.0; 3]; 3];
    for (b, row) in f.iter_mut().enumerate() {
        for (a, v) in row.iter_mut().enumerate() {
            *v = u.get(bi + a - 1, bj + b - 1);
        }
    }
    // f ≈ c0 + b s + c t + d s² + e t² + g s t over s, t ∈ {−1, 0, 1}
    let (mut sum, mut bs, mut ct, mut ds, mut et, mut g) = (0.0, 0.0, 0.0, 0.0, 0.0, 0.0);
    for (tb, row) in f.iter().enumerate() {
        for (sa, &v) in row.iter().enumerate() {
            let s = sa as f64 - 1.0;
            let t = tb as f64 - 1.0;
            sum += v;
            bs += s * v;
            ct += t * v;
            ds += (3.0 * s * s - 2.0) * v;
            et += (3.0 * t * t - 2.0) * v;
            g += s * t * v;
        }
    }
    let (b, c, d, e, g) = (bs / 6.0, ct / 6.0, ds / 6.0, et / 6.0, g / 4.0);
    let c0 = sum / 9.0 - 2.0 / 3.0 * (d + e);
    let model = |s: f64, t: f64| c0 + b * s + c * t + d * s * s + e * t * t + g * s * t;
    let mut misfit = 0.0_f64;
    for (tb, row) in f.iter().enumerate() {
        for (sa, &v) in row.iter().enumerate() {
            misfit = misfit.max((model(sa as f64 - 1.0, tb as f64 - 1.0) - v).abs());
        }
    }
    let det = 4.0 * d * e - g * g;
    if misfit > 0.1 * fallback.amplitude.abs() || d >= 0.0 || det <= 0.0 {
        return Ok(fallback);
    }
    let s = (-2.0 * e * b + g * c) / det;
    let t = (-2.0 * d * c + g * b) / det;
    if s.abs() > 1.0 || t.abs() > 1.0 {
        return Ok(fallback);
    }
    Ok(PointPeak {
        x: grid.x(bi) + s * grid.dx,
        y: grid.y(bj) + t * grid.dy,
        amplitude: model(s, t),
        refined: true,
    })
}

/// Jet of a scalar tangent field in the fixed order
/// `V, V_x, V_xx, V_xy, V_xt, V_xxx, V_xyy, V_xxt, V_xxxx, V_xxxxx`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct JetVector10(pub [f64; 10]);

impl JetVector10 {
    pub const V: usize = 0;
    pub const X: usize = 1;
    pub const XX: usize = 2;
    pub const XY: usize = 3;
    pub const XT: usize = 4;
    pub const XXX: usize = 5;
    pub const XYY: usize = 6;
    pub const XXT: usize = 7;
    pub const XXXX: usize = 8;
    pub const XXXXX: usize = 9;

    /// Finite-difference jet of `f` at `(x, y, t)` with step `h`: seven-point
    /// central stencils in x, three-point in y and t, tensor products for
    /// the mixed terms.
    pub fn from_fn(f: &dyn Fn(f64, f64, f64) -> f64, x: f64, y: f64, t: f64, h: f64) -> Self {
        let wx: Vec<Vec<f64>> = (0..=5).map(|n| central_weights(n, 3)).collect();
        let w1 = [-0.5, 0.0, 0.5];
        let w2 = [1.0, -2.0, 1.0];
        let dx = |n: usize, yy: f64, tt: f64| -> f64 {
            let s: f64 = wx[n]
                .iter()
                .enumerate()
                .filter(|(_, w)| **w != 0.0)
                .map(|(a, w)| w * f(x + (a as f64 - 3.0) * h, yy, tt))
                .sum();
            s / h.powi(n as i32)
        };
        let along = |w: &[f64; 3], n: i32, g: &dyn Fn(f64) -> f64| -> f64 {
            let s: f64 = w
                .iter()
                .enumerate()
                .filter(|(_, w)| **w != 0.0)
                .map(|(a, w)| w * g((a as f64 - 1.0) * h))
                .sum();
            s / h.powi(n)
        };
        let mut j = [0.0; 10];
        j[Self::V] = f(x, y, t);
        j[Self::X] = dx(1, y, t);
        j[Self::XX] = dx(2, y, t);
        j[Self::XXX] = dx(3, y, t);
        j[Self::XXXX] = dx(4, y, t);
        j[Self::XXXXX] = dx(5, y, t);
        j[Self::XY] = along(&w1, 1, &|s| dx(1, y + s, t));
        j[Self::XYY] = along(&w2, 2, &|s| dx(1, y + s, t));
        j[Self::XT] = along(&w1, 1, &|s| dx(1, y, t + s));
        j[Self::XXT] = along(&w1, 1, &|s| dx(2, y, t + s));
        JetVector10(j)
    }
}

/// Base quantities the momentum functionals depend on.
#[derive(Debug, Clone, Copy)]
struct BaseJet {
    phi_xx: f64,
    phi_xxx: f64,
}

/// Linearized momenta `(p^x, p^xx, p^xxx, p^xy)` of a tangent jet.
fn momenta(v: &JetVector10, base: BaseJet, p: &EquationParams) -> [f64; 4] {
    use JetVector10 as J;
    let e = &v.0;
    let c2 = 2.0 * p.nonlin_coeff;
    let px = -(p.time_factor * e[J::XXT]
        + c2 * base.phi_xxx * e[J::XX]
        + c2 * base.phi_xx * e[J::XXX]
        + p.sigma * e[J::XYY]
        + e[J::XXXXX]);
    let pxx = p.tau() * e[J::XT] + c2 * base.phi_xx * e[J::XX] + e[J::XXXX];
    let pxxx = -e[J::XXX];
    let pxy = p.sigma * e[J::XY];
    [px, pxx, pxxx, pxy]
}

/// The three bilinear forms `(ω_t, ω_x, ω_y)` on a pair of tangent jets.
pub fn msym_forms(
    a: &JetVector10,
    b: &JetVector10,
    phi_xx: f64,
    phi_xxx: f64,
    params: &EquationParams,
) -> [f64; 3] {
    use JetVector10 as J;
    let base = BaseJet { phi_xx, phi_xxx };
    let ma = momenta(a, base, params);
    let mb = momenta(b, base, params);
    let (ea, eb) = (&a.0, &b.0);
    let w = |la: f64, lb: f64, ra: f64, rb: f64| la * rb - lb * ra;
    let om_t = params.tau() * w(ea[J::X], eb[J::X], ea[J::XX], eb[J::XX]);
    let om_x = w(ea[J::V], eb[J::V], ma[0], mb[0])
        + w(ea[J::X], eb[J::X], ma[1], mb[1])
        + w(ea[J::XX], eb[J::XX], ma[2], mb[2]);
    let om_y = w(ea[J::X], eb[J::X], ma[3], mb[3]);
    [om_t, om_x, om_y]
}

/// Max over the probe lattice of `|∂_t ω_t + ∂_x ω_x + ∂_y ω_y|` for the
/// tangent potentials `a`, `b` about `base`. Jets and the divergence both use
/// step `h`; the base enters through its analytic `φ_xx`, `φ_xxx`.
pub fn continuous_msym_check(
    base: &Scenario,
    a: &dyn Fn(f64, f64, f64) -> f64,
    b: &dyn Fn(f64, f64, f64) -> f64,
    probe: &ProbeLattice,
    h: f64,
) -> Result<f64> {
    if !(h > 0.0 && h.is_finite()) || probe.points_per_axis == 0 {
        return Err(Error::GridTooSmall(
            "continuous check needs a positive step and a nonempty probe lattice".into(),
        ));
    }
    let p = &base.params;
    let forms = |x: f64, y: f64, t: f64| -> Result<[f64; 3]> {
        let bj = base.potential_jet(x, y, t)?;
        let ja = JetVector10::from_fn(a, x, y, t, h);
        let jb = JetVector10::from_fn(b, x, y, t, h);
        Ok(msym_forms(&ja, &jb, bj.xx, bj.xxx, p))
    };
    let mut worst = 0.0_f64;
    for (x, y, t) in probe.coords() {
        let dt = (forms(x, y, t + h)?[0] - forms(x, y, t - h)?[0]) / (2.0 * h);
        let dx = (forms(x + h, y, t)?[1] - forms(x - h, y, t)?[1]) / (2.0 * h);
        let dy = (forms(x, y + h, t)?[2] - forms(x, y - h, t)?[2]) / (2.0 * h);
        let r = dt + dx + dy;
        if !r.is_finite() {
            return Err(Error::NonFinite("continuous conservation residual"));
        }
        worst = worst.max(r.abs());
    }
    Ok(worst)
}

/// Parameter of the line-soliton family to differentiate.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FamilyParam {
    Offset,
    Wavenumber,
}

/// Central ε-difference of the line-soliton potential with respect to one
/// family parameter. Evaluation failures surface as NaN.
pub fn line_soliton_tangent(
    base: &Scenario,
    param: FamilyParam,
    eps: f64,
) -> Result<impl Fn(f64, f64, f64) -> f64> {
    let ScenarioKind::LineSoliton(p0) = base.kind else {
        return Err(Error::InvalidParameter {
            name: "scenario",
            reason: "family tangents are defined for the line soliton".into(),
        });
    };
    let shifted = |s: f64| -> Result<Scenario> {
        let mut p = p0;
        match param {
            FamilyParam::Offset => p.x_offset += s,
            FamilyParam::Wavenumber => p.k += s,
        }
        Scenario::new(ScenarioKind::LineSoliton(p), base.params, base.domain)
    };
    let plus = shifted(eps)?;
    let minus = shifted(-eps)?;
    Ok(move |x: f64, y: f64, t: f64| match (
        plus.potential_jet(x, y, t),
        minus.potential_jet(x, y, t),
    ) {
        (Ok(a), Ok(b)) => (a.phi - b.phi) / (2.0 * eps),
        _ => f64::NAN,
    })
}

/// Steps used by the continuous refinement study (ε tied to h).
pub const CONTINUOUS_STEPS: [f64; 3] = [0.05, 0.025, 0.0125];

/// Residuals and pairwise orders of the continuous check under joint
/// `(h, ε)` refinement, for the offset/wavenumber tangent pair of the line
/// soliton and for the offset tangent against a non-solution control.
#[derive(Debug, Clone, PartialEq)]
pub struct ContinuousStudy {
    pub steps: Vec<f64>,
    pub residuals: Vec<f64>,
    pub orders: Vec<f64>,
    pub control_residuals: Vec<f64>,
    /// Residual for identical tangents at the finest step.
    pub identical: f64,
}

pub fn continuous_study(base: &Scenario, probe: &ProbeLattice, steps: &[f64]) -> Result<ContinuousStudy> {
    let control = |x: f64, y: f64, t: f64| (1.3 * x + 0.7 * y - 0.4 * t).sin();
    let mut residuals = Vec::new();
    let mut control_residuals = Vec::new();
    let mut identical = 0.0;
    for &h in steps {
        let a = line_soliton_tangent(base, FamilyParam::Offset, h)?;
        let b = line_soliton_tangent(base, FamilyParam::Wavenumber, h)?;
        residuals.push(continuous_msym_check(base, &a, &b, probe, h)?);
        control_residuals.push(continuous_msym_check(base, &a, &control, probe, h)?);
        identical = continuous_msym_check(base, &a, &a, probe, h)?;
    }
    let orders = residuals
        .windows(2)
        .map(|w| convergence_order(w[0], w[1]).unwrap_or(f64::NAN))
        .collect();
    Ok(ContinuousStudy {
        steps: steps.to_vec(),
        residuals,
        orders,
        control_residuals,
        identical,
    })
}

/// One tracked sample. For crest lines `(x, y)` is a point on the crest and
/// `slope` is `dx/dy`; point peaks have slope 0.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PeakSample {
    pub t: f64,
    /// Index of the tracked object within the scenario.
    pub object: usize,
    pub x: f64,
    pub y: f64,
    pub slope: f64,
    pub amplitude: f64,
}

/// Diagnostics gathered over one run.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct RunReport {
    pub l2_error: f64,
    pub linf_error: f64,
    pub peak_tracks: Vec<PeakSample>,
    pub conservation_residuals: Vec<(String, f64)>,
    pub convergence_orders: Vec<(String, f64)>,
}

impl RunReport {
    pub fn validate(&self) -> Result<()> {
        let finite = self.l2_error.is_finite()
            && self.linf_error.is_finite()
            && self.peak_tracks.iter().all(|p| {
                p.t.is_finite()
                    && p.x.is_finite()
                    && p.y.is_finite()
                    && p.slope.is_finite()
                    && p.amplitude.is_finite()
            })
            && self.conservation_residuals.iter().all(|(_, v)| v.is_finite());
        if !finite {
            return Err(Error::NonFinite("run report"));
        }
        if self.peak_tracks.windows(2).any(|w| w[1].t < w[0].t) {
            return Err(Error::InvalidParameter {
                name: "peak_tracks",
                reason: "times must be monotone".into(),
            });
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::solutions::{Domain, LumpParams};

    fn unit_grid(n: usize) -> GridSpec {
        let h = 1.0 / (n - 1) as f64;
        GridSpec::new(0.0, 0.0, 0.0, h, h, 1.0, n, n, 1).unwrap()
    }

    #[test]
    fn mass_integral_examples() {
        for n in [2, 5, 11] {
            let g = unit_grid(n);
            assert_eq!(mass_integral(&Plane::zeros(n, n), &g), 0.0);
            let one = Plane::from_fn(n, n, |_, _| 1.0);
            assert!((mass_integral(&one, &g) - 1.0).abs() < 1e-14);
            let x = Plane::sample(&g, |x, _| x);
            assert!((mass_integral(&x, &g) - 0.5).abs() < 1e-14);
        }
    }

    #[test]
    fn order_examples() {
        assert!((convergence_order(4e-4, 1e-4).unwrap() - 2.0).abs() < 1e-12);
        assert!((convergence_order(1e-3, 5e-4).unwrap() - 1.0).abs() < 1e-12);
        assert!(convergence_order(0.0, 1e-3).is_err());
        assert!(convergence_order(1e-3, -1.0).is_err());
    }

    #[test]
    fn error_norms_of_exact_and_shifted_samples() {
        let sc = Scenario::line_soliton_reference();
        let g = GridSpec::new(0.0, 0.0, 0.0, 0.5, 0.25, 0.1, 81, 9, 1).unwrap();
        let exact = Plane::sample(&g, |x, y| sc.exact_u(x, y, 0.0).unwrap());
        assert_eq!(error_norms(&exact, &sc, &g, 0).unwrap(), (0.0, 0.0));
        let shifted = Plane::from_fn(g.nx, g.ny, |i, j| exact.get(i, j) + 1e-3);
        let (l2, linf) = error_norms(&shifted, &sc, &g, 0).unwrap();
        assert!((linf - 1e-3).abs() < 1e-15);
        assert!((l2 - 1e-3 * (40.0_f64 * 2.0).sqrt()).abs() < 1e-12);
    }

    #[test]
    fn single_spike_falls_back_to_argmax() {
        let g = unit_grid(7);
        let mut u = Plane::zeros(7, 7);
        u.set(3, 2, 5.0);
        let p = point_peak(&u, &g).unwrap();
        assert!(!p.refined);
        assert_eq!((p.x, p.y, p.amplitude), (g.x(3), g.y(2), 5.0));
    }

    #[test]
    fn quadratic_peak_is_recovered_exactly() {
        let g = GridSpec::new(0.0, 0.0, 0.0, 0.1, 0.2, 1.0, 30, 20, 1).unwrap();
        let u = Plane::sample(&g, |x, y| 3.0 - (x - 1.234).powi(2) - 0.5 * (y - 2.05).powi(2) + 0.1 * (x - 1.234) * (y - 2.05));
        let p = point_peak(&u, &g).unwrap();
        assert!(p.refined);
        assert!((p.x - 1.234).abs() < 1e-10 && (p.y - 2.05).abs() < 1e-10);
        assert!((p.amplitude - 3.0).abs() < 1e-10);
    }

    #[test]
    fn exact_lump_peak() {
        let sc = Scenario::lump_reference();
        let g = sc.domain.grid(0.1, 0.2, 0.01).unwrap();
        let u = Plane::sample(&g, |x, y| sc.exact_u(x, y, 0.5).unwrap());
        let p = point_peak(&u, &g).unwrap();
        assert!((p.x - 11.5).abs() < 1e-2, "{p:?}");
        assert!((p.y - 10.0).abs() < 1e-2);
        assert!((p.amplitude - 4.0).abs() < 0.05);
        let _ = LumpParams::reference();
    }

    #[test]
    fn exact_line_soliton_crest() {
        let sc = Scenario::line_soliton_reference();
        let g = sc.domain.grid(0.2, 0.1, 0.01).unwrap();
        let u = Plane::sample(&g, |x, y| sc.exact_u(x, y, 0.0).unwrap());
        let c = crest_line(&u, &g, None).unwrap();
        assert!((c.intercept - 6.0).abs() < 2e-2, "{c:?}");
        assert!((c.slope - std::f64::consts::FRAC_1_SQRT_2).abs() < 2e-2);
        assert!((c.amplitude - 2.0).abs() < 2e-2);
        // a window that cuts the crest off is rejected
        assert_eq!(crest_line(&u, &g, Some((0.0, 5.0))), Err(Error::UntrackablePeak));
    }

    #[test]
    fn identical_tangents_give_zero_forms() {
        let sc = Scenario::line_soliton_reference();
        let a = line_soliton_tangent(&sc, FamilyParam::Offset, 1e-3).unwrap();
        let r = continuous_msym_check(&sc, &a, &a, &ProbeLattice::around(6.0, 0.5, 0.0), 0.05).unwrap();
        assert_eq!(r, 0.0);
    }

    #[test]
    fn forms_are_antisymmetric() {
        let p = EquationParams::default();
        let a = JetVector10([0.3, -1.0, 2.0, 0.5, 0.1, -0.7, 1.1, 0.2, -0.4, 0.9]);
        let b = JetVector10([1.5, 0.2, -0.3, 0.8, -1.2, 0.6, 0.05, -0.9, 0.3, 0.4]);
        let ab = msym_forms(&a, &b, 0.7, -0.2, &p);
        let ba = msym_forms(&b, &a, 0.7, -0.2, &p);
        for k in 0..3 {
            assert_eq!(ab[k], -ba[k]);
        }
        assert_eq!(msym_forms(&a, &a, 0.7, -0.2, &p), [0.0; 3]);
    }

    #[test]
    fn family_tangent_needs_line_soliton() {
        let sc = Scenario::zero(
            EquationParams::default(),
            Domain {
                x0: 0.0,
                x1: 1.0,
                y0: 0.0,
                y1: 1.0,
                t_end: 1.0,
            },
        );
        assert!(line_soliton_tangent(&sc, FamilyParam::Offset, 1e-3).is_err());
    }
}
