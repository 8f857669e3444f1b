use std::fmt::Write as _;

use ndarray::Array2;
use rayon::prelude::*;

use super::{max_abs2, relative, ConvergenceReport, Verdict};
use crate::error::{Error, Result};
use crate::grid::{moments, Grid, PotentialField, SpinDensityField};
use crate::kinetic::{advection_bound, equilibrium_semiclassical, run_kinetic, KineticInitial, ModelParams, TransportOperator};
use crate::qdd::{bk_tt_semiclassical, run_qdd, QddOperator, QddParams, DEFAULT_DIFFUSION_CFL};

/// Required accuracy of `⟨T g⟩` against its closed form.
pub const CLOSED_FORM_TOLERANCE: f64 = 1e-7;

fn check_sweep(name: &str, values: &[f64]) -> Result<()> {
    if values.len() < 3 {
        return Err(Error::invalid(format!("{name} sweep needs at least three values")));
    }
    if values.iter().any(|v| !(*v > 0.0 && v.is_finite())) {
        return Err(Error::invalid(format!("{name} values must be positive and finite")));
    }
    if values.windows(2).any(|w| w[1] >= w[0]) {
        return Err(Error::invalid(format!("{name} values must be strictly decreasing")));
    }
    Ok(())
}

/// One kinetic-versus-drift-diffusion comparison.
#[derive(Clone, Debug)]
pub struct DiffusionRow {
    pub tau: f64,
    pub kinetic_dt: f64,
    pub discrepancy: f64,
    pub kinetic_mass_drift: f64,
    pub kinetic: SpinDensityField,
    pub qdd: SpinDensityField,
}

#[derive(Clone, Debug)]
pub struct DiffusionStudy {
    pub t_probe: f64,
    pub rows: Vec<DiffusionRow>,
    pub report: ConvergenceReport,
}

impl DiffusionStudy {
    pub fn to_csv(&self) -> String {
        let mut s = self.report.to_csv();
        writeln!(s, "# t_probe: {}", self.t_probe).unwrap();
        writeln!(s, "tau,kinetic_dt,discrepancy,kinetic_mass_drift").unwrap();
        for r in &self.rows {
            writeln!(s, "{:?},{:?},{:e},{:e}", r.tau, r.kinetic_dt, r.discrepancy, r.kinetic_mass_drift).unwrap();
        }
        s
    }
}

/// Kinetic step for relaxation time `tau`: resolves `τ` and respects the
/// advection bound.
pub fn kinetic_dt(grid: &Grid, tau: f64) -> f64 {
    (0.25 * tau).min(advection_bound(grid, crate::kinetic::DEFAULT_ADVECTION_CFL))
}

/// Runs the kinetic model for each `τ` and the drift-diffusion model with
/// `κ = τ` from the same densities, and fits the order in `τ` of their
/// relative L2 discrepancy at `t_probe`. Passes iff the order is at least
/// `min_order`.
pub fn diffusion_limit_study(
    grid: &Grid,
    initial: &SpinDensityField,
    base: &ModelParams,
    taus: &[f64],
    t_probe: f64,
    min_order: f64,
) -> Result<DiffusionStudy> {
    check_sweep("τ", taus)?;
    if !(t_probe > 0.0) {
        return Err(Error::invalid(format!("t_probe must be positive, got {t_probe}")));
    }
    let rows: Vec<DiffusionRow> = taus
        .par_iter()
        .map(|&tau| -> Result<DiffusionRow> {
            let params = ModelParams { tau, ..base.clone() };
            let dt = kinetic_dt(grid, tau);
            let kin = run_kinetic(grid, KineticInitial::Density(initial.clone()), &params, t_probe, dt, usize::MAX, &mut |_| {})?;
            let qp = QddParams::new(base.alpha, tau, base.potential.clone())?;
            let qdt = 0.5 * QddOperator::new(grid, &qp)?.stability_bound(DEFAULT_DIFFUSION_CFL);
            let qdd = run_qdd(grid, initial.clone(), &qp, t_probe, qdt, usize::MAX, &mut |_| {})?;
            let k = moments(&kin.final_state.w, grid)?;
            let q = qdd.final_state.n;
            Ok(DiffusionRow {
                tau,
                kinetic_dt: dt,
                discrepancy: k.l2_distance(&q, grid) / q.l2_norm(grid),
                kinetic_mass_drift: kin.relative_mass_drift(),
                kinetic: k,
                qdd: q,
            })
        })
        .collect::<Result<_>>()?;
    let report = ConvergenceReport::new(
        "diffusion_limit",
        "tau",
        rows.iter().map(|r| r.tau).collect(),
        rows.iter().map(|r| r.discrepancy).collect(),
        (min_order, f64::INFINITY),
    )?;
    Ok(DiffusionStudy { t_probe, rows, report })
}

/// Spin decay of a uniform state in the kinetic model.
#[derive(Clone, Debug, PartialEq)]
pub struct SpinDecayReport {
    pub tau: f64,
    pub measured: [f64; 3],
    /// `(4α²τ, 4α²τ, 8α²τ)`.
    pub expected: [f64; 3],
}

impl SpinDecayReport {
    pub fn max_relative_error(&self) -> f64 {
        (0..3)
            .map(|k| (self.measured[k] / self.expected[k] - 1.0).abs())
            .fold(0.0, f64::max)
    }
}

/// Exponential decay rates of `∫n⃗` for a uniform kinetic state, measured
/// between `t_probe/2` and `t_probe` so the initial layer is skipped.
pub fn uniform_spin_decay(grid: &Grid, base: &ModelParams, tau: f64, t_probe: f64) -> Result<SpinDecayReport> {
    let params = ModelParams { tau, ..base.clone() };
    let n = SpinDensityField::uniform(grid, 1.0, [0.3, 0.2, 0.4]);
    let dt = kinetic_dt(grid, tau);
    let (steps, _) = crate::kinetic::uniform_steps(t_probe, dt);
    let half = steps / 2;
    let run = run_kinetic(grid, KineticInitial::Density(n), &params, t_probe, dt, usize::MAX, &mut |_| {})?;
    let (a, b) = (&run.diagnostics[half], run.diagnostics.last().expect("at least one step"));
    let measured = std::array::from_fn(|k| -(b.total_spin[k] / a.total_spin[k]).ln() / (b.t - a.t));
    let r = 4.0 * base.alpha * base.alpha * tau;
    Ok(SpinDecayReport { tau, measured, expected: [r, r, 2.0 * r] })
}

#[derive(Clone, Debug)]
pub struct SemiclassicalReport {
    pub epsilons: Vec<f64>,
    /// `‖⟨T g⟩ − (−εα(∇⊥·n⃗, ∇⊥n0))‖∞` relative to the closed form.
    pub closed_form_errors: Vec<f64>,
    /// Scaling of `‖⟨T g⟩‖` in `ε`; expected order 1.
    pub first_order: ConvergenceReport,
    /// Relative L2 deviation of `⟨T T g⟩` from the drift-diffusion form.
    pub relative_deviation: Vec<f64>,
    /// Scaling of that deviation; expected order at least 1.
    pub second_order: ConvergenceReport,
}

impl SemiclassicalReport {
    pub fn passed(&self) -> bool {
        self.closed_form_errors.iter().all(|e| *e < CLOSED_FORM_TOLERANCE)
            && self.first_order.verdict == Verdict::Pass
            && self.second_order.verdict == Verdict::Pass
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::new();
        writeln!(s, "# study: semiclassical_consistency").unwrap();
        writeln!(s, "# first_order: {} (R² {}) {}", self.first_order.order, self.first_order.r_squared, self.first_order.verdict.as_str()).unwrap();
        writeln!(s, "# second_order: {} (R² {}) {}", self.second_order.order, self.second_order.r_squared, self.second_order.verdict.as_str()).unwrap();
        writeln!(s, "epsilon,tg_norm,tg_closed_form_error,ttg_deviation,ttg_relative_deviation").unwrap();
        for i in 0..self.epsilons.len() {
            writeln!(
                s,
                "{:?},{:e},{:e},{:e},{:e}",
                self.epsilons[i],
                self.first_order.errors[i],
                self.closed_form_errors[i],
                self.second_order.errors[i],
                self.relative_deviation[i]
            )
            .unwrap();
        }
        s
    }

    pub fn summary(&self) -> String {
        format!(
            "semiclassical consistency: {}\n  ⟨Tg⟩ closed form max rel. error {:.3e}\n  {}\n  {}",
            if self.passed() { "pass" } else { "FAIL" },
            self.closed_form_errors.iter().copied().fold(0.0, f64::max),
            self.first_order.summary().replace('\n', "\n  "),
            self.second_order.summary().replace('\n', "\n  "),
        )
    }
}

/// `−εα(∇⊥·n⃗, ∇⊥n0)`, the exact `⟨T g⟩` for `g = M n`.
pub fn tg_closed_form(grid: &Grid, n: &SpinDensityField, epsilon: f64, alpha: f64) -> SpinDensityField {
    let d = |k: usize, axis: usize| grid.x_derivative2(&n.comps()[k], axis, 1);
    let ea = -epsilon * alpha;
    SpinDensityField::from_components([
        (d(1, 1) - d(2, 0)) * ea,
        d(0, 1) * ea,
        d(0, 0) * (-ea),
        Array2::zeros(grid.shape2()),
    ])
    .expect("matching shapes")
}

/// Measures `⟨T g⟩` and `⟨T T g⟩` for `g = equilibrium_semiclassical(n)`
/// across a decreasing `ε` sweep.
pub fn semiclassical_consistency(
    grid: &Grid,
    n: &SpinDensityField,
    alpha: f64,
    potential: &PotentialField,
    epsilons: &[f64],
) -> Result<SemiclassicalReport> {
    check_sweep("ε", epsilons)?;
    let g = equilibrium_semiclassical(grid, n)?;
    let reference = bk_tt_semiclassical(grid, n, alpha, potential)?;
    let ref_norm = reference.l2_norm(grid);
    let mut tg_norms = Vec::new();
    let mut closed = Vec::new();
    let mut dev = Vec::new();
    let mut rel = Vec::new();
    for &eps in epsilons {
        let params = ModelParams::new(eps, alpha, 1.0, potential.clone())?;
        let t = TransportOperator::new(grid, &params)?;
        let tg = t.apply(&g)?;
        let tg_n = moments(&tg, grid)?;
        let exact = tg_closed_form(grid, n, eps, alpha);
        let scale = exact.comps().iter().map(max_abs2).fold(0.0, f64::max);
        closed.push(relative(tg_n.max_abs_diff(&exact), scale));
        tg_norms.push(tg_n.l2_norm(grid));
        let ttg = moments(&t.apply(&tg)?, grid)?;
        let d = ttg.l2_distance(&reference, grid);
        dev.push(d);
        rel.push(relative(d, ref_norm));
    }
    let first_order = ConvergenceReport::new("tg_scaling", "epsilon", epsilons.to_vec(), tg_norms, (0.9, 1.1))?;
    let second_order = ConvergenceReport::new("ttg_deviation", "epsilon", epsilons.to_vec(), dev, (1.0, f64::INFINITY))?;
    Ok(SemiclassicalReport {
        epsilons: epsilons.to_vec(),
        closed_form_errors: closed,
        first_order,
        relative_deviation: rel,
        second_order,
    })
}
