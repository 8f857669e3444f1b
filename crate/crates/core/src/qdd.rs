//! Semiclassical spin drift-diffusion model.
//!
//! ```text
//! ∂t n0 = κ ∂j(∂j n0 + n0 ∂jV)
//! ∂t n⃗  = κ { ∂j[∂j n⃗ + n⃗ ∂jV − 4α A_j(n⃗)] − 2α ∇⊥V × n⃗ − 4α² B(n⃗) }
//! ```
//!
//! with `A_1(n⃗) = (−n3, 0, n1)`, `A_2(n⃗) = (0, −n3, n2)` and
//! `B(n⃗) = (n1, n2, 2n3)`.

use ndarray::{Array2, Zip};

use crate::error::{Error, Result};
use crate::grid::{Grid, PotentialField, PotentialKind, SpinDensityField};
use crate::pauli::{cross, PauliCoefficients, PhysicalDensity};

/// Default `C` in the bound `dt ≤ C·min(Δx)²/κ`.
pub const DEFAULT_DIFFUSION_CFL: f64 = 0.1;

/// `A_j(n⃗)` for `axis = j − 1 ∈ {0, 1}`, pointwise.
pub fn coupling_a(axis: usize, nvec: [f64; 3]) -> [f64; 3] {
    match axis {
        0 => [-nvec[2], 0.0, nvec[0]],
        1 => [0.0, -nvec[2], nvec[1]],
        _ => panic!("axis {axis} out of range"),
    }
}

/// `B(n⃗)`, pointwise.
pub fn coupling_b(nvec: [f64; 3]) -> [f64; 3] {
    [nvec[0], nvec[1], 2.0 * nvec[2]]
}

/// `A_j` applied to a spin field.
pub fn coupling_a_field(axis: usize, spin: &[Array2<f64>; 3]) -> [Array2<f64>; 3] {
    match axis {
        0 => [-&spin[2], Array2::zeros(spin[0].raw_dim()), spin[0].clone()],
        1 => [Array2::zeros(spin[0].raw_dim()), -&spin[2], spin[1].clone()],
        _ => panic!("axis {axis} out of range"),
    }
}

/// `B` applied to a spin field.
pub fn coupling_b_field(spin: &[Array2<f64>; 3]) -> [Array2<f64>; 3] {
    [spin[0].clone(), spin[1].clone(), &spin[2] * 2.0]
}

/// `−2α ∇⊥V × n⃗` with `∇⊥V = (∂2V, −∂1V, 0)`.
pub fn spin_torque(grad_v: &[Array2<f64>; 2], spin: &[Array2<f64>; 3], alpha: f64) -> [Array2<f64>; 3] {
    let shape = spin[0].raw_dim();
    let mut out: [Array2<f64>; 3] = std::array::from_fn(|_| Array2::zeros(shape));
    for ((i, j), &g1) in grad_v[0].indexed_iter() {
        let g2 = grad_v[1][[i, j]];
        let n = [spin[0][[i, j]], spin[1][[i, j]], spin[2][[i, j]]];
        let t = cross(&[g2, -g1, 0.0], &n);
        for k in 0..3 {
            out[k][[i, j]] = -2.0 * alpha * t[k];
        }
    }
    out
}

#[derive(Clone, Debug, PartialEq)]
pub struct QddParams {
    pub alpha: f64,
    /// Overall prefactor of the right-hand side.
    pub kappa: f64,
    pub potential: PotentialField,
}

impl QddParams {
    pub fn new(alpha: f64, kappa: f64, potential: PotentialField) -> Result<Self> {
        let p = Self { alpha, kappa, potential };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.alpha >= 0.0 && self.alpha.is_finite()) {
            return Err(Error::invalid(format!("α must be non-negative, got {}", self.alpha)));
        }
        if !(self.kappa > 0.0 && self.kappa.is_finite()) {
            return Err(Error::invalid(format!("κ must be positive, got {}", self.kappa)));
        }
        if let PotentialKind::Quadratic { .. } = self.potential.kind() {
            return Err(Error::invalid("drift-diffusion needs a potential with periodic gradient"));
        }
        Ok(())
    }
}

/// The drift-diffusion right-hand side for fixed parameters.
#[derive(Clone, Debug)]
pub struct QddOperator {
    grid: Grid,
    alpha: f64,
    kappa: f64,
    grad_v: Option<[Array2<f64>; 2]>,
}

impl QddOperator {
    pub fn new(grid: &Grid, params: &QddParams) -> Result<Self> {
        params.validate()?;
        let grad_v = if params.potential.is_constant() {
            None
        } else {
            Some(params.potential.gradient(grid)?)
        };
        Ok(Self { grid: grid.clone(), alpha: params.alpha, kappa: params.kappa, grad_v })
    }

    pub fn apply(&self, n: &SpinDensityField) -> Result<SpinDensityField> {
        let g = &self.grid;
        for c in n.comps() {
            g.check_shape2(c)?;
        }
        let a = self.alpha;
        let comps = n.comps();
        let spin: [Array2<f64>; 3] = std::array::from_fn(|k| comps[k + 1].clone());
        let couplings = [coupling_a_field(0, &spin), coupling_a_field(1, &spin)];

        let mut out: [Array2<f64>; 4] = std::array::from_fn(|k| {
            let mut div = Array2::zeros(g.shape2());
            for j in 0..2 {
                let mut flux = g.x_derivative2(&comps[k], j, 1);
                if let Some(gv) = &self.grad_v {
                    flux += &(&comps[k] * &gv[j]);
                }
                if k > 0 && a != 0.0 {
                    flux.scaled_add(-4.0 * a, &couplings[j][k - 1]);
                }
                div += &g.x_derivative2(&flux, j, 1);
            }
            div
        });

        if a != 0.0 {
            let b = coupling_b_field(&spin);
            for k in 0..3 {
                out[k + 1].scaled_add(-4.0 * a * a, &b[k]);
            }
            if let Some(gv) = &self.grad_v {
                let t = spin_torque(gv, &spin, a);
                for k in 0..3 {
                    out[k + 1] += &t[k];
                }
            }
        }
        if self.kappa != 1.0 {
            for c in &mut out {
                c.mapv_inplace(|v| v * self.kappa);
            }
        }
        SpinDensityField::from_components(out)
    }

    /// Largest stable RK4 step for the given `C`.
    pub fn stability_bound(&self, cfl: f64) -> f64 {
        let s = self.grid.spec();
        cfl * s.dx1().min(s.dx2()).powi(2) / self.kappa
    }
}

/// `∂t n` of the drift-diffusion system.
pub fn qdd_rhs(grid: &Grid, n: &SpinDensityField, params: &QddParams) -> Result<SpinDensityField> {
    QddOperator::new(grid, params)?.apply(n)
}

/// The leading-order `⟨T T g⟩`: the drift-diffusion right-hand side with
/// `κ = 1`.
pub fn bk_tt_semiclassical(grid: &Grid, n: &SpinDensityField, alpha: f64, potential: &PotentialField) -> Result<SpinDensityField> {
    qdd_rhs(grid, n, &QddParams::new(alpha, 1.0, potential.clone())?)
}

#[derive(Clone, Debug, PartialEq)]
pub struct QddState {
    pub n: SpinDensityField,
    pub t: f64,
    pub step: usize,
}

impl QddState {
    pub fn new(n: SpinDensityField) -> Self {
        Self { n, t: 0.0, step: 0 }
    }
}

/// Classical RK4 with a fixed step.
#[derive(Clone, Debug)]
pub struct QddStepper {
    op: QddOperator,
    dt: f64,
}

fn axpy(base: &SpinDensityField, h: f64, k: &SpinDensityField) -> SpinDensityField {
    let comps = std::array::from_fn(|c| {
        let mut v = base.comps()[c].clone();
        v.scaled_add(h, &k.comps()[c]);
        v
    });
    SpinDensityField::from_components(comps).expect("matching shapes")
}

impl QddStepper {
    pub fn new(grid: &Grid, params: &QddParams, dt: f64) -> Result<Self> {
        Self::with_cfl(grid, params, dt, DEFAULT_DIFFUSION_CFL)
    }

    pub fn with_cfl(grid: &Grid, params: &QddParams, dt: f64, cfl: f64) -> Result<Self> {
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(Error::invalid(format!("dt must be positive, got {dt}")));
        }
        if !(cfl > 0.0) {
            return Err(Error::invalid(format!("CFL constant must be positive, got {cfl}")));
        }
        let op = QddOperator::new(grid, params)?;
        let bound = op.stability_bound(cfl);
        if dt > bound {
            return Err(Error::StabilityViolation { dt, bound });
        }
        Ok(Self { op, dt })
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn step(&self, state: &mut QddState) -> Result<()> {
        let h = self.dt;
        let n = &state.n;
        let k1 = self.op.apply(n)?;
        let k2 = self.op.apply(&axpy(n, 0.5 * h, &k1))?;
        let k3 = self.op.apply(&axpy(n, 0.5 * h, &k2))?;
        let k4 = self.op.apply(&axpy(n, h, &k3))?;
        let comps = std::array::from_fn(|c| {
            let mut v = n.comps()[c].clone();
            Zip::from(&mut v)
                .and(&k1.comps()[c])
                .and(&k2.comps()[c])
                .and(&k3.comps()[c])
                .and(&k4.comps()[c])
                .for_each(|v, a, b, c, d| *v += h / 6.0 * (a + 2.0 * b + 2.0 * c + d));
            v
        });
        state.n = SpinDensityField::from_components(comps)?;
        state.t += h;
        state.step += 1;
        if !state.n.is_finite() {
            return Err(Error::NonFinite { field: "n", step: state.step, time: state.t });
        }
        Ok(())
    }
}

/// One RK4 step with the default stability constant.
pub fn qdd_step(grid: &Grid, state: &QddState, params: &QddParams, dt: f64) -> Result<QddState> {
    let mut next = state.clone();
    QddStepper::new(grid, params, dt)?.step(&mut next)?;
    Ok(next)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct QddDiagnostics {
    pub step: usize,
    pub t: f64,
    pub total_charge: f64,
    pub total_spin: [f64; 3],
    /// `‖∫n⃗ dx‖`.
    pub spin_norm: f64,
    pub max_spin_ratio: f64,
}

impl QddDiagnostics {
    pub fn of(grid: &Grid, state: &QddState) -> Self {
        let s = state.n.total_spin(grid);
        Self {
            step: state.step,
            t: state.t,
            total_charge: state.n.total_charge(grid),
            total_spin: s,
            spin_norm: crate::pauli::norm3(&s),
            max_spin_ratio: state.n.max_spin_ratio(),
        }
    }
}

#[derive(Clone, Debug)]
pub struct QddRun {
    pub snapshots: Vec<(f64, SpinDensityField)>,
    pub diagnostics: Vec<QddDiagnostics>,
    pub final_state: QddState,
}

/// Integrates to `t_end` with steps no larger than `dt`, recording densities
/// every `output_every` steps and at the end.
pub fn run_qdd(
    grid: &Grid,
    initial: SpinDensityField,
    params: &QddParams,
    t_end: f64,
    dt: f64,
    output_every: usize,
    observer: &mut dyn FnMut(&QddDiagnostics),
) -> Result<QddRun> {
    run_qdd_with_cfl(grid, initial, params, t_end, dt, output_every, DEFAULT_DIFFUSION_CFL, observer)
}

#[allow(clippy::too_many_arguments)]
pub fn run_qdd_with_cfl(
    grid: &Grid,
    initial: SpinDensityField,
    params: &QddParams,
    t_end: f64,
    dt: f64,
    output_every: usize,
    cfl: f64,
    observer: &mut dyn FnMut(&QddDiagnostics),
) -> Result<QddRun> {
    if !(t_end > 0.0 && t_end.is_finite()) {
        return Err(Error::invalid(format!("t_end must be positive, got {t_end}")));
    }
    for c in initial.comps() {
        grid.check_shape2(c)?;
    }
    let (steps, dt) = crate::kinetic::uniform_steps(t_end, dt);
    let stepper = QddStepper::with_cfl(grid, params, dt, cfl)?;
    let mut state = QddState::new(initial);
    let every = output_every.max(1);
    let mut snapshots = vec![(0.0, state.n.clone())];
    let mut diagnostics = vec![QddDiagnostics::of(grid, &state)];
    observer(&diagnostics[0]);
    for s in 1..=steps {
        stepper.step(&mut state)?;
        if s == steps {
            state.t = t_end;
        }
        let d = QddDiagnostics::of(grid, &state);
        observer(&d);
        diagnostics.push(d);
        if s % every == 0 || s == steps {
            snapshots.push((state.t, state.n.clone()));
        }
    }
    Ok(QddRun { snapshots, diagnostics, final_state: state })
}

/// Lagrange multipliers `a = a0 σ0 + a⃗·σ⃗` on the position grid.
#[derive(Clone, Debug, PartialEq)]
pub struct MultiplierField {
    pub a0: Array2<f64>,
    pub avec: [Array2<f64>; 3],
}

impl MultiplierField {
    /// Leading-order multipliers `a = log(n)` pointwise, so that `n = exp(a)`.
    pub fn leading_order(n: &SpinDensityField) -> Result<Self> {
        let shape = n.comps()[0].raw_dim();
        let mut a0 = Array2::zeros(shape);
        let mut avec: [Array2<f64>; 3] = std::array::from_fn(|_| Array2::zeros(shape));
        for ((i, j), v) in a0.indexed_iter_mut() {
            let (n0, nv) = n.at(i, j);
            let log = PauliCoefficients::log(&PhysicalDensity::new(n0, nv)?)?;
            let (l0, lv) = log.real_parts();
            *v = l0;
            for k in 0..3 {
                avec[k][[i, j]] = lv[k];
            }
        }
        Ok(Self { a0, avec })
    }

    /// `exp(a)` pointwise.
    pub fn density(&self) -> Result<SpinDensityField> {
        let shape = self.a0.raw_dim();
        let mut comps: [Array2<f64>; 4] = std::array::from_fn(|_| Array2::zeros(shape));
        for ((i, j), &a0) in self.a0.indexed_iter() {
            let a = PauliCoefficients::real(a0, std::array::from_fn(|k| self.avec[k][[i, j]]));
            let (e0, ev) = a.exp()?.real_parts();
            comps[0][[i, j]] = e0;
            for k in 0..3 {
                comps[k + 1][[i, j]] = ev[k];
            }
        }
        SpinDensityField::from_components(comps)
    }
}

/// Spin part `2ε⁻¹ a⃗×n⃗` of the equilibrium current `⟨T g⟩`; the charge part
/// vanishes.
pub fn residual_current(a: &MultiplierField, n: &SpinDensityField, epsilon: f64) -> Result<[Array2<f64>; 3]> {
    if !(epsilon > 0.0 && epsilon.is_finite()) {
        return Err(Error::invalid(format!("ε must be positive, got {epsilon}")));
    }
    if a.a0.shape() != n.shape() {
        return Err(Error::ShapeMismatch { expected: n.shape().to_vec(), found: a.a0.shape().to_vec() });
    }
    let shape = a.a0.raw_dim();
    let mut out: [Array2<f64>; 3] = std::array::from_fn(|_| Array2::zeros(shape));
    let scale = 2.0 / epsilon;
    for i in 0..shape[0] {
        for j in 0..shape[1] {
            let av = std::array::from_fn(|k| a.avec[k][[i, j]]);
            let (_, nv) = n.at(i, j);
            let c = cross(&av, &nv);
            for k in 0..3 {
                out[k][[i, j]] = scale * c[k];
            }
        }
    }
    Ok(out)
}
