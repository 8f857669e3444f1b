//! `validate:<suite>` runners. Each writes its own report CSV plus a
//! `checks.csv` with one pass/fail row per check.

use std::f64::consts::PI;

use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use rashba_core::grid::{moments, Grid, PotentialField, SpinDensityField, WignerField};
use rashba_core::kinetic::{run_kinetic, KineticInitial, KineticStepper, ModelParams};
use rashba_core::moyal::{moyal_bracket_truncated, moyal_product_truncated, moyal_term, poisson_bracket, Monomial, SymbolField};
use rashba_core::pauli::{cross, PauliCoefficients};
use rashba_core::qdd::{qdd_rhs, residual_current, run_qdd, MultiplierField, QddParams};
use rashba_core::validation::{
    check_aux_formula, check_moment_identities, diffusion_limit_study, random_band_limited, random_wigner,
    semiclassical_consistency, uniform_spin_decay, IdentityConfig, TestFunction, Verdict,
};
use rashba_core::C64;

use super::precondition;
use crate::output::{num, Output};
use crate::registry::{RunError, Runner, Status};
use crate::scenario::{periodic_gaussian, PotentialSpec, Scenario};

/// Accumulates named checks and writes them as `checks.csv`.
struct Checks {
    rows: Vec<(String, f64, String, bool)>,
}

impl Checks {
    fn new() -> Self {
        Self { rows: Vec::new() }
    }

    /// `value < limit`.
    fn below(&mut self, name: &str, value: f64, limit: f64) {
        self.rows.push((name.into(), value, format!("< {limit:e}"), value < limit));
    }

    fn holds(&mut self, name: &str, value: f64, condition: &str, pass: bool) {
        self.rows.push((name.into(), value, condition.into(), pass));
    }

    fn finish(self, out: &mut Output) -> Result<Status, RunError> {
        let mut csv = out.csv("checks.csv", "check,value,condition,pass")?;
        for (name, value, cond, pass) in &self.rows {
            csv.row(&[name.clone(), format!("{value:e}"), cond.clone(), pass.to_string()])?;
            out.note(format!("{} {name}: {value:.3e} ({cond})", if *pass { "PASS" } else { "FAIL" }));
        }
        csv.flush()?;
        Ok(if self.rows.iter().all(|r| r.3) { Status::Passed } else { Status::Failed })
    }
}

fn model_params(s: &Scenario, grid: &Grid) -> Result<ModelParams, RunError> {
    let v = precondition(s.build_potential(grid))?;
    precondition(ModelParams::new(s.params.epsilon, s.params.alpha, s.params.tau, v))
}

fn list(v: &[f64]) -> String {
    v.iter().map(|x| format!("{x:.3e}")).collect::<Vec<_>>().join(" ")
}

type Mat = [[C64; 2]; 2];

fn to_mat(c0: C64, c: [C64; 3]) -> Mat {
    let i = C64::i();
    [[c0 + c[2], c[0] - i * c[1]], [c[0] + i * c[1], c0 - c[2]]]
}

fn mat_mul(a: &Mat, b: &Mat) -> Mat {
    std::array::from_fn(|r| std::array::from_fn(|c| a[r][0] * b[0][c] + a[r][1] * b[1][c]))
}

fn mat_max(a: &Mat) -> f64 {
    a.iter().flatten().fold(0.0, |m, v| m.max(v.norm()))
}

fn mat_sub(a: &Mat, b: &Mat) -> Mat {
    std::array::from_fn(|r| std::array::from_fn(|c| a[r][c] - b[r][c]))
}

pub struct PauliSuite;

impl Runner for PauliSuite {
    fn name(&self) -> &'static str {
        "validate:pauli"
    }

    fn about(&self) -> &'static str {
        "Pauli product, commutator and trace against explicit 2×2 matrices"
    }

    fn run(&self, s: &Scenario, out: &mut Output) -> Result<Status, RunError> {
        let mut rng = ChaCha8Rng::seed_from_u64(s.seed);
        let mut csv = out.csv("pauli.csv", "pair,product_error,commutator_error,trace_error")?;
        let mut worst = [0.0f64; 3];
        for pair in 0..s.validate.trials {
            let mut c = || C64::new(rng.random_range(-3.0..3.0), rng.random_range(-3.0..3.0));
            let (a0, av) = (c(), [c(), c(), c()]);
            let (b0, bv) = (c(), [c(), c(), c()]);
            let (a, b) = (PauliCoefficients::new(a0, av), PauliCoefficients::new(b0, bv));
            let (ma, mb) = (to_mat(a0, av), to_mat(b0, bv));
            let (ab, ba) = (mat_mul(&ma, &mb), mat_mul(&mb, &ma));
            let p = a.product(&b);
            let q = a.commutator(&b);
            let comm = mat_sub(&ab, &ba);
            let errs = [
                mat_max(&mat_sub(&to_mat(p.c0, p.cvec), &ab)) / mat_max(&ab),
                mat_max(&mat_sub(&to_mat(q.c0, q.cvec), &comm)) / (mat_max(&ma) * mat_max(&mb)),
                (a.trace() - (ma[0][0] + ma[1][1])).norm() / (ma[0][0] + ma[1][1]).norm().max(1.0),
            ];
            for k in 0..3 {
                worst[k] = worst[k].max(errs[k]);
            }
            csv.row(&[pair.to_string(), format!("{:e}", errs[0]), format!("{:e}", errs[1]), format!("{:e}", errs[2])])?;
        }
        csv.flush()?;
        let mut checks = Checks::new();
        let tol = s.validate.tolerance;
        checks.below("product relative error", worst[0], tol);
        checks.below("commutator relative error", worst[1], tol);
        checks.below("trace relative error", worst[2], tol);
        checks.finish(out)
    }
}

pub struct IdentitiesSuite;

impl Runner for IdentitiesSuite {
    fn name(&self) -> &'static str {
        "validate:identities"
    }

    fn about(&self) -> &'static str {
        "moment identities of Θ and Θ⁺ over random trials"
    }

    fn run(&self, s: &Scenario, out: &mut Output) -> Result<Status, RunError> {
        let grid = precondition(s.build_grid())?;
        let mut config = IdentityConfig::random(s.params.epsilon, s.validate.trials, s.seed);
        config.tolerance = s.validate.tolerance;
        if s.potential != PotentialSpec::Zero {
            config.function = TestFunction::Fixed(precondition(s.build_potential(&grid))?);
        }
        let report = out.time("identities", |_| check_moment_identities(&grid, &config))?;
        out.write_text("identities.csv", &report.to_csv())?;
        let worst = |f: fn(&rashba_core::validation::IdentityTrial) -> f64| report.trials.iter().map(f).fold(0.0, f64::max);
        let mut checks = Checks::new();
        checks.below("⟨Θw⟩ = 0", worst(|t| t.theta_mass), config.tolerance);
        checks.below("⟨pΘw⟩ = −∇f⟨w⟩", worst(|t| t.theta_momentum), config.tolerance);
        checks.below("⟨Θ⁺w⟩ = 2f⟨w⟩", worst(|t| t.theta_plus), config.tolerance);
        for d in &report.diagnostics {
            out.note(format!("diagnostic: {d}"));
        }
        checks.finish(out)
    }
}

pub struct AuxSuite;

impl Runner for AuxSuite {
    fn name(&self) -> &'static str {
        "validate:aux"
    }

    fn about(&self) -> &'static str {
        "⟨T w⟩ against its moment formula for random band-limited states"
    }

    fn run(&self, s: &Scenario, out: &mut Output) -> Result<Status, RunError> {
        let grid = precondition(s.build_grid())?;
        let fixed = model_params(s, &grid)?;
        let random_potential = s.potential == PotentialSpec::Zero;
        let mut rng = ChaCha8Rng::seed_from_u64(s.seed);
        let mut csv = out.csv("aux.csv", "state,error_n0,error_n1,error_n2,error_n3")?;
        let mut worst = 0.0f64;
        for state in 0..s.validate.trials {
            let params = if random_potential {
                ModelParams { potential: random_band_limited(&grid, &mut rng, 0.5)?, ..fixed.clone() }
            } else {
                fixed.clone()
            };
            let w = random_wigner(&grid, &mut rng)?;
            let r = check_aux_formula(&grid, &w, &params, s.validate.tolerance)?;
            worst = worst.max(r.max_error());
            let mut row = vec![state.to_string()];
            row.extend(r.errors.iter().map(|e| format!("{e:e}")));
            csv.row(&row)?;
        }
        csv.flush()?;
        let mut checks = Checks::new();
        checks.below("⟨Tw⟩ vs moment formula", worst, s.validate.tolerance);
        checks.finish(out)
    }
}

pub struct ResidualSuite;

impl Runner for ResidualSuite {
    fn name(&self) -> &'static str {
        "validate:residual"
    }

    fn about(&self) -> &'static str {
        "equilibrium residual current: zero for a = log n, 2ε⁻¹ a⃗×n⃗ for hand-set a⃗"
    }

    fn run(&self, s: &Scenario, out: &mut Output) -> Result<Status, RunError> {
        let grid = precondition(s.build_grid())?;
        let n = precondition(s.build_initial(&grid))?;
        let eps = s.params.epsilon;
        let lead = precondition(MultiplierField::leading_order(&n))?;
        let r = residual_current(&lead, &n, eps)?;
        let parallel = r.iter().map(|c| c.iter().fold(0.0f64, |m, v| m.max(v.abs()))).fold(0.0, f64::max);

        let a = s.validate.multiplier;
        let hand = MultiplierField { a0: Array2::zeros(grid.shape2()), avec: a.map(|v| Array2::from_elem(grid.shape2(), v)) };
        let r = residual_current(&hand, &n, eps)?;
        let mut mismatch = 0.0f64;
        for ((i, j), _) in n.charge().indexed_iter() {
            let (_, nv) = n.at(i, j);
            let c = cross(&a, &nv);
            for k in 0..3 {
                mismatch = mismatch.max((r[k][[i, j]] - 2.0 / eps * c[k]).abs());
            }
        }
        out.write_text(
            "residual.csv",
            &format!("case,max_abs\nleading_order,{parallel:e}\nhand_set_minus_exact,{mismatch:e}\n"),
        )?;
        let mut checks = Checks::new();
        checks.below("leading-order residual current", parallel, s.validate.tolerance);
        checks.holds("hand-set residual minus 2ε⁻¹ a⃗×n⃗", mismatch, "== 0", mismatch == 0.0);
        checks.finish(out)
    }
}

pub struct SemiclassicalSuite;

impl Runner for SemiclassicalSuite {
    fn name(&self) -> &'static str {
        "validate:semiclassical"
    }

    fn about(&self) -> &'static str {
        "⟨Tg⟩ closed form and O(ε) scaling, ⟨TTg⟩ against the drift-diffusion operator"
    }

    fn run(&self, s: &Scenario, out: &mut Output) -> Result<Status, RunError> {
        let grid = precondition(s.build_grid())?;
        let n = precondition(s.build_initial(&grid))?;
        let v = precondition(s.build_potential(&grid))?;
        let r = out.time("sweep", |_| semiclassical_consistency(&grid, &n, s.params.alpha, &v, &s.validate.epsilons))?;
        out.write_text("semiclassical.csv", &r.to_csv())?;
        let mut checks = Checks::new();
        let closed = r.closed_form_errors.iter().copied().fold(0.0, f64::max);
        checks.below("⟨Tg⟩ closed-form relative error", closed, s.validate.tolerance);
        checks.holds("⟨Tg⟩ order in ε", r.first_order.order, "in [0.9, 1.1], R² ≥ 0.95", r.first_order.verdict == Verdict::Pass);
        checks.holds("⟨TTg⟩ deviation order in ε", r.second_order.order, "≥ 1, R² ≥ 0.95", r.second_order.verdict == Verdict::Pass);
        let last = *r.relative_deviation.last().expect("non-empty sweep");
        checks.below("⟨TTg⟩ relative deviation at smallest ε", last, s.validate.max_relative_deviation);
        checks.finish(out)
    }
}

/// Relative tolerance of the uniform spin decay rates.
const DECAY_RATE_TOLERANCE: f64 = 5e-3;
/// Residual bound for the Boltzmann steady state.
const STEADY_STATE_TOLERANCE: f64 = 1e-8;

pub struct QddSuite;

impl Runner for QddSuite {
    fn name(&self) -> &'static str {
        "validate:qdd"
    }

    fn about(&self) -> &'static str {
        "drift-diffusion regressions: heat kernel, uniform spin decay, Boltzmann steady state"
    }

    fn run(&self, s: &Scenario, out: &mut Output) -> Result<Status, RunError> {
        let grid = precondition(s.build_grid())?;
        let spec = *grid.spec();
        let (kappa, alpha) = (s.params.kappa, s.params.alpha);
        let dt = s.params.qdd_dt.unwrap_or(spec.dt);
        let t = s.output.t_end;
        let l = [spec.lx1, spec.lx2];
        let c = [0.5 * l[0], 0.5 * l[1]];
        let var0 = 0.09;

        let flat = precondition(QddParams::new(0.0, kappa, PotentialField::zero(&grid)))?;
        let bump = SpinDensityField::from_fn(&grid, |x| [periodic_gaussian(x, c, var0, l), 0.0, 0.0, 0.0]);
        let run = run_qdd(&grid, bump, &flat, t, dt, usize::MAX, &mut |_| {})?;
        let exact = grid.position_fn(|x| periodic_gaussian(x, c, var0 + 2.0 * kappa * t, l));
        let heat = grid.l2_norm(&(run.final_state.n.charge() - &exact)) / grid.l2_norm(&exact);

        let s0 = [0.3, -0.2, 0.4];
        let spin = precondition(QddParams::new(alpha, kappa, PotentialField::zero(&grid)))?;
        let run = run_qdd(&grid, SpinDensityField::uniform(&grid, 1.0, s0), &spin, t, dt, usize::MAX, &mut |_| {})?;
        let (_, sv) = run.final_state.n.at(0, 0);
        let expected = [4.0, 4.0, 8.0].map(|r| r * alpha * alpha * kappa);
        let measured: [f64; 3] = std::array::from_fn(|k| -(sv[k] / s0[k]).ln() / t);
        let decay = (0..3).map(|k| (measured[k] / expected[k] - 1.0).abs()).fold(0.0, f64::max);

        let v = precondition(s.build_potential(&grid))?;
        let zeros = || Array2::zeros(grid.shape2());
        let boltzmann = SpinDensityField::from_components([v.values().mapv(|x| (-x).exp()), zeros(), zeros(), zeros()])?;
        let p = precondition(QddParams::new(alpha, kappa, v))?;
        let steady = qdd_rhs(&grid, &boltzmann, &p)?.max_abs() / boltzmann.max_abs();

        out.write_text(
            "qdd_regressions.csv",
            &format!(
                "quantity,value\nheat_kernel_l2_error,{heat:e}\nmeasured_rates,{} {} {}\nexpected_rates,{} {} {}\nsteady_state_residual,{steady:e}\n",
                num(measured[0]), num(measured[1]), num(measured[2]), num(expected[0]), num(expected[1]), num(expected[2])
            ),
        )?;
        let mut checks = Checks::new();
        checks.below(&format!("heat-kernel relative L2 error at t = {t}"), heat, s.validate.tolerance);
        if alpha > 0.0 {
            checks.below("uniform spin decay rate relative error", decay, DECAY_RATE_TOLERANCE);
        }
        checks.below("Boltzmann steady-state residual", steady, STEADY_STATE_TOLERANCE);
        checks.finish(out)
    }
}

const MASS_DRIFT_TOLERANCE: f64 = 1e-10;
const SUBSTEP_TOLERANCE: f64 = 1e-12;

fn spin_length(w: &WignerField) -> ndarray::Array4<f64> {
    let mut l = w.spin(0).mapv(|v| v * v);
    l += &w.spin(1).mapv(|v| v * v);
    l += &w.spin(2).mapv(|v| v * v);
    l.mapv(f64::sqrt)
}

pub struct ConservationSuite;

impl Runner for ConservationSuite {
    fn name(&self) -> &'static str {
        "validate:conservation"
    }

    fn about(&self) -> &'static str {
        "kinetic mass conservation, BGK moment preservation, pointwise |w⃗| under precession"
    }

    fn run(&self, s: &Scenario, out: &mut Output) -> Result<Status, RunError> {
        let grid = precondition(s.build_grid())?;
        let params = model_params(s, &grid)?;
        let n = precondition(s.build_initial(&grid))?;
        let dt = s.grid.dt;
        let stepper = precondition(KineticStepper::new(&grid, &params, dt))?;
        let t_end = s.output.t_end;
        let run = out.time("kinetic", |_| run_kinetic(&grid, KineticInitial::Density(n), &params, t_end, dt, usize::MAX, &mut |_| {}))?;
        let drift = run.relative_mass_drift() / t_end;

        let mut w = WignerField::from_fn(&grid, |x, p| {
            let m = (-(p[0] * p[0] + p[1] * p[1]) / 2.0).exp();
            let s = m * (1.0 + 0.5 * p[0] + 0.3 * p[0] * p[1]);
            [s * (2.0 + x[0].sin()), s * 0.3, -0.2 * s * x[1].cos(), 0.1 * s * p[1]]
        });
        let before = moments(&w, &grid)?;
        stepper.relax(&mut w, dt)?;
        let bgk = moments(&w, &grid)?.max_abs_diff(&before) / before.max_abs();
        let len0 = spin_length(&w);
        stepper.precess(&mut w, dt);
        let prec = (&spin_length(&w) - &len0).iter().fold(0.0f64, |m, d| m.max(d.abs()));

        out.write_text(
            "conservation.csv",
            &format!("quantity,value\nmass_drift_per_unit_time,{drift:e}\nbgk_density_change,{bgk:e}\nprecession_spin_length_change,{prec:e}\n"),
        )?;
        let mut checks = Checks::new();
        checks.below("relative mass drift per unit time", drift, MASS_DRIFT_TOLERANCE);
        checks.below("BGK substep density change", bgk, SUBSTEP_TOLERANCE);
        checks.below("precession |w⃗| change", prec, SUBSTEP_TOLERANCE);
        checks.finish(out)
    }
}

pub struct DiffusionSuite;

impl Runner for DiffusionSuite {
    fn name(&self) -> &'static str {
        "validate:diffusion"
    }

    fn about(&self) -> &'static str {
        "kinetic vs drift-diffusion density discrepancy over a τ sweep, fitted order in τ"
    }

    fn run(&self, s: &Scenario, out: &mut Output) -> Result<Status, RunError> {
        let grid = precondition(s.build_grid())?;
        let params = model_params(s, &grid)?;
        let n = precondition(s.build_initial(&grid))?;
        let t = s.output.t_end;
        let study = out.time("sweep", |_| {
            diffusion_limit_study(&grid, &n, &params, &s.validate.taus, t, s.validate.min_order)
        })?;
        out.write_text("diffusion.csv", &study.to_csv())?;
        for (i, row) in study.rows.iter().enumerate() {
            out.density_snapshot(&format!("kinetic_tau{i}"), &row.kinetic, *grid.spec(), t)?;
            out.density_snapshot(&format!("qdd_tau{i}"), &row.qdd, *grid.spec(), t)?;
        }
        let r = &study.report;
        out.note(format!("discrepancies: {}", list(&r.errors)));
        let mut checks = Checks::new();
        checks.holds(
            "discrepancy order in τ",
            r.order,
            &format!("≥ {}, R² ≥ 0.95 (R² = {:.4})", s.validate.min_order, r.r_squared),
            r.verdict == Verdict::Pass,
        );
        checks.finish(out)
    }
}

pub struct SpinDecaySuite;

impl Runner for SpinDecaySuite {
    fn name(&self) -> &'static str {
        "validate:spin-decay"
    }

    fn about(&self) -> &'static str {
        "kinetic uniform spin decay rates approaching the drift-diffusion rates as τ shrinks"
    }

    fn run(&self, s: &Scenario, out: &mut Output) -> Result<Status, RunError> {
        let grid = precondition(s.build_grid())?;
        let params = model_params(s, &grid)?;
        let mut csv = out.csv(
            "spin_decay.csv",
            "tau,measured_1,measured_2,measured_3,expected_1,expected_2,expected_3,max_relative_error",
        )?;
        let mut errors = Vec::new();
        for &tau in &s.validate.taus {
            let r = uniform_spin_decay(&grid, &params, tau, s.output.t_end)?;
            let mut row = vec![num(tau)];
            row.extend(r.measured.iter().chain(&r.expected).map(|v| num(*v)));
            row.push(format!("{:e}", r.max_relative_error()));
            csv.row(&row)?;
            errors.push(r.max_relative_error());
        }
        csv.flush()?;
        out.note(format!("relative rate errors: {}", list(&errors)));
        let shrinking = errors.windows(2).all(|w| w[1] < w[0]);
        let mut checks = Checks::new();
        checks.holds("rate error at smallest τ", *errors.last().expect("τ sweep"), "decreasing with τ", shrinking);
        checks.finish(out)
    }
}

pub struct MoyalSuite;

impl Runner for MoyalSuite {
    fn name(&self) -> &'static str {
        "validate:moyal"
    }

    fn about(&self) -> &'static str {
        "truncated Moyal product: #₀ pointwise, #₁ = (i/2) Poisson bracket, bracket antisymmetry"
    }

    fn run(&self, s: &Scenario, out: &mut Output) -> Result<Status, RunError> {
        let g = precondition(s.build_grid())?;
        let eps = s.params.epsilon;
        let bump = |x: [f64; 2], p: [f64; 2]| {
            let m = (-(p[0] * p[0] + p[1] * p[1]) / 2.0).exp() / (2.0 * PI);
            m * (1.0 + 0.3 * x[0].cos() + 0.2 * (x[1] - 0.4).sin()) * (1.0 + 0.25 * p[0] - 0.1 * p[0] * p[1])
        };
        let a = SymbolField::Polynomial(vec![
            Monomial { powers: [2, 0], coeff: g.position_fn(|x| 1.0 + 0.2 * x[1].sin()).mapv(C64::from) },
            Monomial { powers: [0, 1], coeff: g.position_fn(|x| x[0].cos()).mapv(C64::from) },
        ]);
        let b = SymbolField::sampled_real(&g.phase_space_fn(bump));
        let max_norm = |it: &ndarray::Array4<C64>| it.iter().fold(0.0f64, |m, v| m.max(v.norm()));

        let direct = a.values(&g)? * b.values(&g)?;
        let e0 = match moyal_product_truncated(&g, &a, &b, 0, eps)? {
            SymbolField::Sampled(p0) => max_norm(&(&p0 - &direct)),
            _ => f64::INFINITY,
        };
        let pb = poisson_bracket(&g, &a, &b)?;
        let t1 = moyal_term(&g, &a, &b, 1)?;
        let e1 = max_norm(&(&t1 - &pb.mapv(|v| C64::new(0.0, 0.5) * v))) / max_norm(&pb);
        let mut antisym = true;
        for k in 0..=rashba_core::moyal::MAX_MOYAL_ORDER {
            let ab = moyal_bracket_truncated(&g, &a, &b, k, eps)?;
            let ba = moyal_bracket_truncated(&g, &b, &a, k, eps)?;
            antisym &= match (ab, ba) {
                (SymbolField::Sampled(x), SymbolField::Sampled(y)) => x == -y,
                _ => false,
            };
        }
        let scale = max_norm(&direct);
        out.write_text(
            "moyal.csv",
            &format!("quantity,value\norder0_error,{e0:e}\norder0_scale,{scale:e}\norder1_relative_error,{e1:e}\nbracket_antisymmetric,{antisym}\n"),
        )?;
        let mut checks = Checks::new();
        checks.below("#₀ minus pointwise product, relative", e0 / scale, 1e-14);
        checks.below("#₁ minus (i/2){·,·}, relative", e1, 1e-9);
        checks.holds("bracket antisymmetry", if antisym { 0.0 } else { 1.0 }, "exact", antisym);
        checks.finish(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn matrix_oracle_matches_pauli_basis() {
        let one = C64::new(1.0, 0.0);
        let z = C64::default();
        let s1 = to_mat(z, [one, z, z]);
        let s2 = to_mat(z, [z, one, z]);
        let s3 = to_mat(z, [z, z, one]);
        let i = C64::i();
        // σ1σ2 = iσ3
        let prod = mat_mul(&s1, &s2);
        let expected = s3.map(|r| r.map(|v| i * v));
        assert_eq!(mat_max(&mat_sub(&prod, &expected)), 0.0);
    }

    #[test]
    fn failing_check_fails_the_suite() {
        let s = crate::scenario::parse_str("model = \"validate:pauli\"\n", "t", &[]).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let mut out = Output::create(dir.path(), &s).unwrap();
        let mut c = Checks::new();
        c.below("fine", 1.0, 2.0);
        c.below("broken", 3.0, 2.0);
        assert_eq!(c.finish(&mut out).unwrap(), Status::Failed);
        let text = std::fs::read_to_string(dir.path().join("checks.csv")).unwrap();
        assert_eq!(text.lines().count(), 3);
        assert!(text.contains("broken,3e0,< 2e0,false"));
    }
}
