//! Wigner-BGK kinetic model for the spin-resolved electron gas.
//!
//! The scaled system is
//!
//! ```text
//! ∂t w0 = −p·∇w0 − εα ∇⊥·w⃗ + Θ_ε[V] w0            + (g0 − w0)/τ
//! ∂t w⃗  = −p·∇w⃗ − εα ∇⊥w0 + Θ_ε[V] w⃗ + 2α p⊥×w⃗  + (g⃗ − w⃗)/τ
//! ```
//!
//! with `∇⊥ = (∂2, −∂1, 0)` and `p⊥ = (p2, −p1, 0)`. Time stepping is a
//! symmetric splitting `A B C D C B A`: free transport (A), force (B), Rashba
//! coupling and precession (C), BGK relaxation (D).

use ndarray::{Array2, Array4, Zip};
use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::grid::{moments, Grid, PotentialField, SpinDensityField, WignerField};
use crate::moyal::{ThetaOperator, ThetaPropagator};

/// Default `C` in the advection bound `dt ≤ C·min(Δx)/pmax`.
pub const DEFAULT_ADVECTION_CFL: f64 = 0.5;

/// Nondimensional model constants. `tau = ∞` switches collisions off.
#[derive(Clone, Debug, PartialEq)]
pub struct ModelParams {
    pub epsilon: f64,
    pub alpha: f64,
    pub tau: f64,
    pub potential: PotentialField,
}

impl ModelParams {
    pub fn new(epsilon: f64, alpha: f64, tau: f64, potential: PotentialField) -> Result<Self> {
        let p = Self { epsilon, alpha, tau, potential };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.epsilon > 0.0 && self.epsilon.is_finite()) {
            return Err(Error::invalid(format!("ε must be positive, got {}", self.epsilon)));
        }
        if !(self.alpha >= 0.0 && self.alpha.is_finite()) {
            return Err(Error::invalid(format!("α must be non-negative, got {}", self.alpha)));
        }
        if !(self.tau > 0.0) {
            return Err(Error::invalid(format!("τ must be positive, got {}", self.tau)));
        }
        Ok(())
    }

    pub fn is_collisionless(&self) -> bool {
        self.tau.is_infinite()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct KineticState {
    pub w: WignerField,
    pub t: f64,
    pub step: usize,
}

impl KineticState {
    pub fn new(w: WignerField) -> Self {
        Self { w, t: 0.0, step: 0 }
    }
}

/// `g_k(x, p) = M(p) n_k(x)` with the Maxwellian normalized to unit discrete
/// mass, so that `moments(g) = n` up to rounding.
pub fn equilibrium_semiclassical(grid: &Grid, n: &SpinDensityField) -> Result<WignerField> {
    for c in n.comps() {
        grid.check_shape2(c)?;
    }
    let m = grid.discrete_maxwellian();
    let comps = n.comps().each_ref().map(|nk| {
        let mut out = Array4::zeros(grid.shape4());
        Zip::indexed(&mut out).par_for_each(|(i, j, a, b), v| *v = nk[[i, j]] * m[[a, b]]);
        out
    });
    WignerField::from_components(comps)
}

/// The transport operator `T` for fixed parameters, with the force term
/// precomputed.
#[derive(Clone, Debug)]
pub struct TransportOperator {
    grid: Grid,
    epsilon: f64,
    alpha: f64,
    theta: ThetaOperator,
}

impl TransportOperator {
    pub fn new(grid: &Grid, params: &ModelParams) -> Result<Self> {
        params.validate()?;
        Ok(Self {
            grid: grid.clone(),
            epsilon: params.epsilon,
            alpha: params.alpha,
            theta: ThetaOperator::odd(grid, &params.potential, params.epsilon)?,
        })
    }

    pub fn apply(&self, w: &WignerField) -> Result<WignerField> {
        let g = &self.grid;
        for c in w.comps() {
            g.check_shape4(c)?;
        }
        let ea = self.epsilon * self.alpha;
        let two_a = 2.0 * self.alpha;
        let d: Vec<[Array4<f64>; 2]> = w
            .comps()
            .iter()
            .map(|c| [g.x_derivative(c, 0, 1), g.x_derivative(c, 1, 1)])
            .collect();
        let [c0, c1, c2, c3] = w.comps();
        let (t0, t1) = self.theta.apply_pair(c0, c1)?;
        let (t2, t3) = self.theta.apply_pair(c2, c3)?;
        let mut out = [t0, t1, t2, t3];
        let (p1, p2) = (g.p1(), g.p2());
        let [_, w1, w2, w3] = w.comps();

        let [o0, o1, o2, o3] = &mut out;
        Zip::indexed(o0)
            .and(&d[0][0])
            .and(&d[0][1])
            .and(&d[1][1])
            .and(&d[2][0])
            .par_for_each(|(_, _, a, b), o, d01, d02, d12, d21| {
                *o += -(p1[a] * d01 + p2[b] * d02) - ea * (d12 - d21);
            });
        Zip::indexed(o1)
            .and(&d[1][0])
            .and(&d[1][1])
            .and(&d[0][1])
            .and(w3)
            .par_for_each(|(_, _, a, b), o, dx1, dx2, d02, w3| {
                *o += -(p1[a] * dx1 + p2[b] * dx2) - ea * d02 - two_a * p1[a] * w3;
            });
        Zip::indexed(o2)
            .and(&d[2][0])
            .and(&d[2][1])
            .and(&d[0][0])
            .and(w3)
            .par_for_each(|(_, _, a, b), o, dx1, dx2, d01, w3| {
                *o += -(p1[a] * dx1 + p2[b] * dx2) + ea * d01 - two_a * p2[b] * w3;
            });
        Zip::indexed(o3)
            .and(&d[3][0])
            .and(&d[3][1])
            .and(w1)
            .and(w2)
            .par_for_each(|(_, _, a, b), o, dx1, dx2, w1, w2| {
                *o += -(p1[a] * dx1 + p2[b] * dx2) + two_a * (p2[b] * w2 + p1[a] * w1);
            });
        WignerField::from_components(out)
    }
}

/// `T w`: the full collisionless right-hand side.
pub fn transport_apply(grid: &Grid, w: &WignerField, params: &ModelParams) -> Result<WignerField> {
    TransportOperator::new(grid, params)?.apply(w)
}

/// Largest step allowed by the advection bound.
pub fn advection_bound(grid: &Grid, cfl: f64) -> f64 {
    let s = grid.spec();
    cfl * s.dx1().min(s.dx2()) / s.pmax
}

/// Precomputed substeps for a fixed `dt`.
#[derive(Clone, Debug)]
pub struct KineticStepper {
    grid: Grid,
    params: ModelParams,
    dt: f64,
    /// `exp(−i k_j p_j dt/2)` per axis, indexed `[k, p]`.
    advection: [Array2<C64>; 2],
    force: Option<ThetaPropagator>,
    maxwellian: Array2<f64>,
}

impl KineticStepper {
    pub fn new(grid: &Grid, params: &ModelParams, dt: f64) -> Result<Self> {
        Self::with_cfl(grid, params, dt, DEFAULT_ADVECTION_CFL)
    }

    pub fn with_cfl(grid: &Grid, params: &ModelParams, dt: f64, cfl: f64) -> Result<Self> {
        params.validate()?;
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(Error::invalid(format!("dt must be positive, got {dt}")));
        }
        if !(cfl > 0.0) {
            return Err(Error::invalid(format!("CFL constant must be positive, got {cfl}")));
        }
        let bound = advection_bound(grid, cfl);
        if dt > bound {
            return Err(Error::StabilityViolation { dt, bound });
        }
        let force = if params.potential.is_constant() {
            None
        } else {
            Some(ThetaOperator::odd(grid, &params.potential, params.epsilon)?.propagator(0.5 * dt)?)
        };
        let advection = [0, 1].map(|axis| advection_phases(grid, axis, 0.5 * dt));
        Ok(Self {
            grid: grid.clone(),
            params: params.clone(),
            dt,
            advection,
            force,
            maxwellian: grid.discrete_maxwellian(),
        })
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn params(&self) -> &ModelParams {
        &self.params
    }

    /// One symmetric step `A B C D C' B A`.
    pub fn step(&self, state: &mut KineticState) -> Result<()> {
        for c in state.w.comps() {
            self.grid.check_shape4(c)?;
        }
        let h = self.dt;
        self.free_transport(&mut state.w, &self.advection);
        self.force(&mut state.w)?;
        self.rashba(&mut state.w, 0.5 * h, false);
        self.relax(&mut state.w, h)?;
        self.rashba(&mut state.w, 0.5 * h, true);
        self.force(&mut state.w)?;
        self.free_transport(&mut state.w, &self.advection);
        state.t += h;
        state.step += 1;
        if !state.w.is_finite() {
            return Err(Error::NonFinite { field: "w", step: state.step, time: state.t });
        }
        Ok(())
    }

    /// Substep A: exact shift `w(x − p h, p)` in the x-transform domain.
    pub fn free_transport(&self, w: &mut WignerField, phases: &[Array2<C64>; 2]) {
        for c in w.comps_mut() {
            let mut hat = self.x_spectrum(c);
            Zip::indexed(&mut hat).par_for_each(|(i, j, a, b), v| {
                *v *= phases[0][[i, a]] * phases[1][[j, b]];
            });
            *c = self.x_inverse(hat);
        }
    }

    /// Substep A for an arbitrary duration.
    pub fn free_transport_for(&self, w: &mut WignerField, h: f64) {
        let phases = [0, 1].map(|axis| advection_phases(&self.grid, axis, h));
        self.free_transport(w, &phases);
    }

    fn force(&self, w: &mut WignerField) -> Result<()> {
        if let Some(prop) = &self.force {
            let [c0, c1, c2, c3] = w.comps_mut();
            prop.apply_pair_in_place(c0, c1)?;
            prop.apply_pair_in_place(c2, c3)?;
        }
        Ok(())
    }

    /// Substep C. The coupling `−εα∇⊥` uses one explicit midpoint step in the
    /// x-transform domain; the precession is an exact rotation. `reversed`
    /// swaps their order for the second half of the symmetric step.
    pub fn rashba(&self, w: &mut WignerField, h: f64, reversed: bool) {
        if reversed {
            self.precess(w, h);
            self.couple(w, h);
        } else {
            self.couple(w, h);
            self.precess(w, h);
        }
    }

    fn couple(&self, w: &mut WignerField, h: f64) {
        let ea = self.params.epsilon * self.params.alpha;
        if ea == 0.0 {
            return;
        }
        let k = [0, 1].map(|axis| {
            let mut k = self.grid.kx(axis).to_vec();
            let nyq = k.len() / 2;
            k[nyq] = 0.0;
            k
        });
        let comps = w.comps_mut();
        let mut h0 = self.x_spectrum(&comps[0]);
        let mut h1 = self.x_spectrum(&comps[1]);
        let mut h2 = self.x_spectrum(&comps[2]);
        let ci = C64::new(0.0, -ea);
        Zip::indexed(&mut h0).and(&mut h1).and(&mut h2).par_for_each(|(i, j, _, _), y0, y1, y2| {
            let (k1, k2) = (k[0][i], k[1][j]);
            let rhs = |y: [C64; 3]| [ci * (k2 * y[1] - k1 * y[2]), ci * k2 * y[0], -ci * k1 * y[0]];
            let y = [*y0, *y1, *y2];
            let l = rhs(y);
            let mid = [y[0] + 0.5 * h * l[0], y[1] + 0.5 * h * l[1], y[2] + 0.5 * h * l[2]];
            let lm = rhs(mid);
            *y0 += h * lm[0];
            *y1 += h * lm[1];
            *y2 += h * lm[2];
        });
        comps[0] = self.x_inverse(h0);
        comps[1] = self.x_inverse(h1);
        comps[2] = self.x_inverse(h2);
    }

    /// Exact rotation of `w⃗` about `p⊥/|p|` by the angle `2α|p|h`.
    pub fn precess(&self, w: &mut WignerField, h: f64) {
        let alpha = self.params.alpha;
        if alpha == 0.0 {
            return;
        }
        let (p1, p2) = (self.grid.p1(), self.grid.p2());
        let [_, w1, w2, w3] = w.comps_mut();
        Zip::indexed(w1).and(w2).and(w3).par_for_each(|(_, _, a, b), x, y, z| {
            let (axis, angle) = precession(p1[a], p2[b], alpha, h);
            let v = rotate([*x, *y, *z], axis, angle);
            (*x, *y, *z) = (v[0], v[1], v[2]);
        });
    }

    /// Substep D: `w ← g(n) + (w − g(n)) e^{−h/τ}` with `n = moments(w)`.
    pub fn relax(&self, w: &mut WignerField, h: f64) -> Result<()> {
        if self.params.is_collisionless() {
            return Ok(());
        }
        let n = moments(w, &self.grid)?;
        let decay = (-h / self.params.tau).exp();
        let m = &self.maxwellian;
        for (c, nk) in w.comps_mut().iter_mut().zip(n.comps()) {
            Zip::indexed(c).par_for_each(|(i, j, a, b), v| {
                let g = nk[[i, j]] * m[[a, b]];
                *v = g + (*v - g) * decay;
            });
        }
        Ok(())
    }

    fn x_spectrum(&self, c: &Array4<f64>) -> Array4<C64> {
        self.grid
            .forward(c.as_standard_layout().into_owned().into_dyn(), &[0, 1])
            .into_dimensionality()
            .expect("4D")
    }

    fn x_inverse(&self, hat: Array4<C64>) -> Array4<f64> {
        self.grid.inverse_real(hat.into_dyn(), &[0, 1]).into_dimensionality().expect("4D")
    }
}

/// `exp(−i k p h)` with the Nyquist wavenumber treated as zero.
fn advection_phases(grid: &Grid, axis: usize, h: f64) -> Array2<C64> {
    let k = grid.kx(axis);
    let p = if axis == 0 { grid.p1() } else { grid.p2() };
    let nyq = k.len() / 2;
    Array2::from_shape_fn((k.len(), p.len()), |(i, a)| {
        if i == nyq {
            C64::from(1.0)
        } else {
            C64::from_polar(1.0, -k[i] * p[a] * h)
        }
    })
}

/// Unit rotation axis and angle for the precession at momentum `p`.
pub fn precession(p1: f64, p2: f64, alpha: f64, h: f64) -> ([f64; 3], f64) {
    let norm = p1.hypot(p2);
    if norm == 0.0 {
        return ([0.0, 0.0, 1.0], 0.0);
    }
    ([p2 / norm, -p1 / norm, 0.0], 2.0 * alpha * norm * h)
}

/// Rodrigues rotation of `v` about the unit vector `n`.
pub fn rotate(v: [f64; 3], n: [f64; 3], angle: f64) -> [f64; 3] {
    let (s, c) = angle.sin_cos();
    let nxv = crate::pauli::cross(&n, &v);
    let ndv = crate::pauli::dot(&n, &v);
    std::array::from_fn(|k| v[k] * c + nxv[k] * s + n[k] * ndv * (1.0 - c))
}

/// One kinetic step with default settings.
pub fn kinetic_step(grid: &Grid, state: &KineticState, params: &ModelParams, dt: f64) -> Result<KineticState> {
    let stepper = KineticStepper::new(grid, params, dt)?;
    let mut next = state.clone();
    stepper.step(&mut next)?;
    Ok(next)
}

/// Per-step scalar diagnostics.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct KineticDiagnostics {
    pub step: usize,
    pub t: f64,
    pub mass: f64,
    pub total_spin: [f64; 3],
    pub max_spin_ratio: f64,
}

impl KineticDiagnostics {
    pub fn of(grid: &Grid, state: &KineticState, n: &SpinDensityField) -> Self {
        Self {
            step: state.step,
            t: state.t,
            mass: n.total_charge(grid),
            total_spin: n.total_spin(grid),
            max_spin_ratio: n.max_spin_ratio(),
        }
    }
}

pub enum KineticInitial {
    Density(SpinDensityField),
    Wigner(WignerField),
}

#[derive(Clone, Debug)]
pub struct KineticRun {
    pub snapshots: Vec<(f64, SpinDensityField)>,
    pub diagnostics: Vec<KineticDiagnostics>,
    pub final_state: KineticState,
}

impl KineticRun {
    /// `|m(t_end) − m(0)| / |m(0)|`.
    pub fn relative_mass_drift(&self) -> f64 {
        let first = self.diagnostics.first().map_or(0.0, |d| d.mass);
        let last = self.diagnostics.last().map_or(0.0, |d| d.mass);
        (last - first).abs() / first.abs()
    }
}

/// Step count and step size that land exactly on `t_end` without exceeding
/// `dt_max`.
pub fn uniform_steps(t_end: f64, dt_max: f64) -> (usize, f64) {
    let steps = (t_end / dt_max - 1e-9).ceil().max(1.0) as usize;
    (steps, t_end / steps as f64)
}

/// Integrates to `t_end` with steps no larger than `dt`, recording densities
/// every `output_every` steps and at the end. `observer` sees every step.
pub fn run_kinetic(
    grid: &Grid,
    initial: KineticInitial,
    params: &ModelParams,
    t_end: f64,
    dt: f64,
    output_every: usize,
    observer: &mut dyn FnMut(&KineticDiagnostics),
) -> Result<KineticRun> {
    if !(t_end > 0.0 && t_end.is_finite()) {
        return Err(Error::invalid(format!("t_end must be positive, got {t_end}")));
    }
    let (steps, dt) = uniform_steps(t_end, dt);
    let stepper = KineticStepper::new(grid, params, dt)?;
    let w = match initial {
        KineticInitial::Density(n) => equilibrium_semiclassical(grid, &n)?,
        KineticInitial::Wigner(w) => w,
    };
    let mut state = KineticState::new(w);
    let every = output_every.max(1);
    let mut snapshots = Vec::new();
    let mut diagnostics = Vec::with_capacity(steps + 1);
    let record = |state: &KineticState, snaps: &mut Vec<_>, diags: &mut Vec<_>, keep: bool| -> Result<KineticDiagnostics> {
        let n = moments(&state.w, grid)?;
        let d = KineticDiagnostics::of(grid, state, &n);
        diags.push(d);
        if keep {
            snaps.push((state.t, n));
        }
        Ok(d)
    };
    observer(&record(&state, &mut snapshots, &mut diagnostics, true)?);
    for s in 1..=steps {
        stepper.step(&mut state)?;
        if s == steps {
            state.t = t_end;
        }
        let keep = s % every == 0 || s == steps;
        observer(&record(&state, &mut snapshots, &mut diagnostics, keep)?);
    }
    Ok(KineticRun { snapshots, diagnostics, final_state: state })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{momentum_moment, FourierMode, GridSpec, PotentialKind};
    fn grid(n: usize, m: usize) -> Grid {
        Grid::new(GridSpec { nx1: n, nx2: n, np1: m, np2: m, ..GridSpec::default() }).unwrap()
    }

    fn params(g: &Grid, epsilon: f64, alpha: f64, tau: f64) -> ModelParams {
        ModelParams::new(epsilon, alpha, tau, PotentialField::zero(g)).unwrap()
    }

    fn smooth_density(g: &Grid) -> SpinDensityField {
        SpinDensityField::from_fn(g, |x| {
            [
                2.0 + 0.5 * x[0].cos() + 0.3 * x[1].sin(),
                0.4 * (x[0] + x[1]).sin(),
                0.3 * x[1].cos(),
                0.2 + 0.1 * x[0].sin(),
            ]
        })
    }

    #[test]
    fn parameter_validation() {
        let g = grid(8, 8);
        let v = PotentialField::zero(&g);
        assert!(ModelParams::new(0.0, 1.0, 1.0, v.clone()).is_err());
        assert!(ModelParams::new(0.1, -1.0, 1.0, v.clone()).is_err());
        assert!(ModelParams::new(0.1, 1.0, 0.0, v.clone()).is_err());
        assert!(ModelParams::new(0.1, 1.0, f64::INFINITY, v).unwrap().is_collisionless());
    }

    #[test]
    fn equilibrium_moments_recover_density() {
        let g = grid(8, 32);
        let n = smooth_density(&g);
        let w = equilibrium_semiclassical(&g, &n).unwrap();
        assert!(moments(&w, &g).unwrap().max_abs_diff(&n) < 1e-13 * n.max_abs());
        let uniform = SpinDensityField::uniform(&g, 1.0, [0.0; 3]);
        let w = equilibrium_semiclassical(&g, &uniform).unwrap();
        assert_eq!(w.spin(0).iter().fold(0.0f64, |m, v| m.max(v.abs())), 0.0);
    }

    #[test]
    fn transport_of_uniform_maxwellian_has_zero_moments() {
        let g = grid(8, 32);
        let n = SpinDensityField::uniform(&g, 1.0, [0.2, -0.1, 0.3]);
        let w = equilibrium_semiclassical(&g, &n).unwrap();
        let tw = transport_apply(&g, &w, &params(&g, 0.3, 1.5, 1.0)).unwrap();
        assert!(moments(&tw, &g).unwrap().max_abs() < 1e-13);
    }

    #[test]
    fn transport_moments_of_equilibrium_are_rashba_gradients() {
        let g = grid(16, 32);
        let n = smooth_density(&g);
        let (eps, alpha) = (0.1, 1.0);
        let w = equilibrium_semiclassical(&g, &n).unwrap();
        let tw = transport_apply(&g, &w, &params(&g, eps, alpha, 1.0)).unwrap();
        let m = moments(&tw, &g).unwrap();
        let d = |k: usize, axis: usize| g.x_derivative2(&n.comps()[k], axis, 1);
        let expected = [
            (d(1, 1) - d(2, 0)) * (-eps * alpha),
            d(0, 1) * (-eps * alpha),
            d(0, 0) * (eps * alpha),
            Array2::zeros(g.shape2()),
        ];
        for k in 0..4 {
            let err = (&m.comps()[k] - &expected[k]).iter().fold(0.0f64, |a, v| a.max(v.abs()));
            assert!(err < 1e-12, "component {k}: {err}");
        }
    }

    #[test]
    fn homogeneous_equilibrium_is_a_fixed_point() {
        let g = grid(8, 32);
        let p = params(&g, 0.1, 0.0, 0.5);
        let w = equilibrium_semiclassical(&g, &SpinDensityField::uniform(&g, 1.3, [0.0; 3])).unwrap();
        let mut state = KineticState::new(w.clone());
        let stepper = KineticStepper::new(&g, &p, 0.01).unwrap();
        for _ in 0..5 {
            stepper.step(&mut state).unwrap();
            assert!(state.w.max_abs_diff(&w) < 1e-12);
        }
    }

    #[test]
    fn free_streaming_matches_shifted_initial_condition() {
        let g = grid(16, 16);
        let p = params(&g, 0.1, 0.0, f64::INFINITY);
        let f0 = |x: [f64; 2], p: [f64; 2]| {
            (-(p[0] * p[0] + p[1] * p[1]) / 2.0).exp() * (1.0 + 0.4 * (x[0] + 2.0 * x[1]).cos() + 0.2 * (3.0 * x[0]).sin())
        };
        let w = WignerField::from_fn(&g, |x, p| [f0(x, p), 0.0, 0.0, 0.0]);
        let mut state = KineticState::new(w);
        let stepper = KineticStepper::new(&g, &p, 0.02).unwrap();
        for _ in 0..10 {
            stepper.step(&mut state).unwrap();
        }
        let t = state.t;
        let exact = g.phase_space_fn(|x, p| f0([x[0] - p[0] * t, x[1] - p[1] * t], p));
        let err = (state.w.charge() - &exact).iter().fold(0.0f64, |a, v| a.max(v.abs()));
        assert!(err < 1e-12, "{err}");
    }

    #[test]
    fn advection_substep_is_reversible() {
        let g = grid(16, 16);
        let p = params(&g, 0.1, 1.0, 1.0);
        let stepper = KineticStepper::new(&g, &p, 0.01).unwrap();
        let w0 = equilibrium_semiclassical(&g, &smooth_density(&g)).unwrap();
        let mut w = w0.clone();
        stepper.free_transport_for(&mut w, 0.01);
        stepper.free_transport_for(&mut w, -0.01);
        assert!(w.max_abs_diff(&w0) < 1e-12);
    }

    #[test]
    fn precession_preserves_length_and_has_expected_angle() {
        let g = grid(8, 16);
        let (alpha, dt) = (1.3, 0.01);
        let p = params(&g, 0.1, alpha, 1.0);
        let stepper = KineticStepper::new(&g, &p, dt).unwrap();
        let w0 = WignerField::from_fn(&g, |x, p| {
            let m = (-(p[0] * p[0] + p[1] * p[1]) / 4.0).exp();
            [m, m * (0.3 + x[0].sin()), m * 0.5 * p[1], m * (0.2 - x[1].cos())]
        });
        let mut w = w0.clone();
        stepper.precess(&mut w, dt);
        let len = |w: &WignerField| {
            let mut l = w.spin(0).mapv(|v| v * v);
            l += &w.spin(1).mapv(|v| v * v);
            l += &w.spin(2).mapv(|v| v * v);
            l.mapv(f64::sqrt)
        };
        let d = (&len(&w) - &len(&w0)).iter().fold(0.0f64, |a, v| a.max(v.abs()));
        assert!(d < 1e-12);

        let (axis, angle) = precession(1.0, 0.0, alpha, dt);
        assert_eq!(axis, [0.0, -1.0, 0.0]);
        assert!((angle - 2.0 * alpha * dt).abs() < 1e-15);
        // rotating (1,0,0) about −e2 by θ gives (cos θ, 0, sin θ)
        let v = rotate([1.0, 0.0, 0.0], axis, angle);
        assert!((v[0] - angle.cos()).abs() < 1e-15 && v[1].abs() < 1e-15 && (v[2] - angle.sin()).abs() < 1e-15);
        // infinitesimal generator 2α p⊥ × v
        let small = 1e-7;
        let (ax, an) = precession(0.4, -0.7, alpha, small);
        let v0 = [0.2, 0.5, -0.3];
        let v1 = rotate(v0, ax, an);
        let gen = crate::pauli::cross(&[-0.7, -0.4, 0.0], &v0);
        for k in 0..3 {
            assert!(((v1[k] - v0[k]) / small - 2.0 * alpha * gen[k]).abs() < 1e-6);
        }
    }

    #[test]
    fn bgk_substep_preserves_all_densities() {
        let g = grid(8, 32);
        let p = params(&g, 0.1, 1.0, 0.3);
        let stepper = KineticStepper::new(&g, &p, 0.01).unwrap();
        let mut w = WignerField::from_fn(&g, |x, p| {
            let m = (-(p[0] * p[0] + p[1] * p[1]) / 2.0).exp();
            let s = m * (1.0 + 0.5 * p[0] + 0.3 * p[0] * p[1]);
            [s * (2.0 + x[0].sin()), s * 0.3, -0.2 * s * x[1].cos(), 0.1 * s]
        });
        let before = moments(&w, &g).unwrap();
        stepper.relax(&mut w, 0.5).unwrap();
        let after = moments(&w, &g).unwrap();
        assert!(after.max_abs_diff(&before) < 1e-12 * before.max_abs());
        // the first moment decays at the relaxation rate
        let j0 = momentum_moment(&w, &g, 0).unwrap();
        assert!(j0.max_abs() > 0.0);
    }

    #[test]
    fn stability_bound_is_enforced() {
        let g = grid(8, 16);
        let p = params(&g, 0.1, 1.0, 1.0);
        let bound = advection_bound(&g, DEFAULT_ADVECTION_CFL);
        assert!(matches!(KineticStepper::new(&g, &p, 1.01 * bound), Err(Error::StabilityViolation { .. })));
        assert!(KineticStepper::new(&g, &p, bound).is_ok());
    }

    #[test]
    fn full_run_conserves_mass() {
        let g = grid(16, 32);
        let v = PotentialField::new(
            &g,
            PotentialKind::Fourier { modes: vec![FourierMode { m: [1, 1], amplitude: 0.5, phase: 0.0 }] },
        )
        .unwrap();
        let p = ModelParams::new(0.2, 1.0, 0.5, v).unwrap();
        let mut seen = 0;
        let run = run_kinetic(&g, KineticInitial::Density(smooth_density(&g)), &p, 0.2, 0.02, 5, &mut |_| seen += 1)
            .unwrap();
        assert_eq!(seen, 11);
        assert_eq!(run.snapshots.len(), 3);
        assert_eq!(run.final_state.t, 0.2);
        assert!(run.relative_mass_drift() < 1e-12, "{}", run.relative_mass_drift());
    }

    #[test]
    fn uniform_spin_decays_with_collisions() {
        let g = grid(8, 32);
        let p = params(&g, 0.1, 1.0, 0.1);
        let n = SpinDensityField::uniform(&g, 1.0, [0.6, 0.0, 0.0]);
        let run = run_kinetic(&g, KineticInitial::Density(n), &p, 0.5, 0.02, 100, &mut |_| {}).unwrap();
        let d0 = run.diagnostics.first().unwrap();
        let d1 = run.diagnostics.last().unwrap();
        assert!(d1.total_spin[0] < d0.total_spin[0]);
        assert!((d1.mass - d0.mass).abs() < 1e-12 * d0.mass);
        // expected drift-diffusion decay rate 4α²τ
        let rate = -(d1.total_spin[0] / d0.total_spin[0]).ln() / 0.5;
        assert!((rate - 0.4).abs() < 0.1, "{rate}");
    }
}
