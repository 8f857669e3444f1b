use std::fmt::Write as _;

use ndarray::Array2;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::{max_abs2, random_band_limited, random_wigner, relative};
use crate::error::{Error, Result};
use crate::grid::{moments, momentum_moment, Grid, PotentialField, PotentialKind, WignerField};
use crate::kinetic::{ModelParams, TransportOperator};
use crate::moyal::ThetaOperator;

/// The position function fed to `Θ` and `Θ⁺`.
#[derive(Clone, Debug)]
pub enum TestFunction {
    /// A fresh band-limited random function per trial.
    RandomBandLimited,
    Fixed(PotentialField),
}

#[derive(Clone, Debug)]
pub struct IdentityConfig {
    pub epsilon: f64,
    pub trials: usize,
    pub seed: u64,
    pub tolerance: f64,
    pub function: TestFunction,
}

impl IdentityConfig {
    pub fn random(epsilon: f64, trials: usize, seed: u64) -> Self {
        Self { epsilon, trials, seed, tolerance: 1e-7, function: TestFunction::RandomBandLimited }
    }
}

/// Largest relative error of each identity over all components and axes.
#[derive(Clone, Debug, PartialEq)]
pub struct IdentityTrial {
    pub trial: usize,
    /// `⟨Θ_ε[f] w⟩ = 0`
    pub theta_mass: f64,
    /// `⟨p_j Θ_ε[f] w⟩ = −∂_j f ⟨w⟩`
    pub theta_momentum: f64,
    /// `⟨Θ⁺_ε[f] w⟩ = 2 f ⟨w⟩`
    pub theta_plus: f64,
}

impl IdentityTrial {
    pub fn max_error(&self) -> f64 {
        self.theta_mass.max(self.theta_momentum).max(self.theta_plus)
    }
}

#[derive(Clone, Debug)]
pub struct IdentityReport {
    pub epsilon: f64,
    pub seed: u64,
    pub tolerance: f64,
    pub trials: Vec<IdentityTrial>,
    pub diagnostics: Vec<String>,
}

impl IdentityReport {
    pub fn max_error(&self) -> f64 {
        self.trials.iter().map(IdentityTrial::max_error).fold(0.0, f64::max)
    }

    pub fn passed(&self) -> bool {
        self.trials.iter().all(|t| t.max_error() < self.tolerance)
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::new();
        writeln!(s, "# study: moment_identities").unwrap();
        writeln!(s, "# seed: {}", self.seed).unwrap();
        writeln!(s, "# epsilon: {}", self.epsilon).unwrap();
        writeln!(s, "# tolerance: {}", self.tolerance).unwrap();
        for d in &self.diagnostics {
            writeln!(s, "# diagnostic: {d}").unwrap();
        }
        writeln!(s, "trial,theta_mass,theta_momentum,theta_plus,pass").unwrap();
        for t in &self.trials {
            writeln!(
                s,
                "{},{:e},{:e},{:e},{}",
                t.trial,
                t.theta_mass,
                t.theta_momentum,
                t.theta_plus,
                t.max_error() < self.tolerance
            )
            .unwrap();
        }
        s
    }

    pub fn summary(&self) -> String {
        let worst = |f: fn(&IdentityTrial) -> f64| self.trials.iter().map(f).fold(0.0, f64::max);
        let mut s = format!(
            "moment identities, ε = {}, {} trials, seed {}: {}\n  ⟨Θw⟩ = 0            max rel. error {:.3e}\n  ⟨pΘw⟩ = −∇f⟨w⟩      max rel. error {:.3e}\n  ⟨Θ⁺w⟩ = 2f⟨w⟩       max rel. error {:.3e}",
            self.epsilon,
            self.trials.len(),
            self.seed,
            if self.passed() { "pass" } else { "FAIL" },
            worst(|t| t.theta_mass),
            worst(|t| t.theta_momentum),
            worst(|t| t.theta_plus),
        );
        for d in &self.diagnostics {
            write!(s, "\n  diagnostic: {d}").unwrap();
        }
        s
    }
}

/// Modes a periodic grid cannot represent faithfully.
fn aliasing_diagnostic(grid: &Grid, f: &PotentialField) -> Option<String> {
    let PotentialKind::Fourier { modes } = f.kind() else {
        return None;
    };
    let s = grid.spec();
    let bad: Vec<String> = modes
        .iter()
        .filter(|m| 2 * m.m[0].unsigned_abs() as usize >= s.nx1 || 2 * m.m[1].unsigned_abs() as usize >= s.nx2)
        .map(|m| format!("{:?}", m.m))
        .collect();
    (!bad.is_empty()).then(|| {
        format!(
            "test function has modes {} at or beyond the position Nyquist index ({}, {})",
            bad.join(" "),
            s.nx1 / 2,
            s.nx2 / 2
        )
    })
}

/// `max_k max_x ∫|w_k| dp`.
fn abs_moment_scale(w: &WignerField, grid: &Grid) -> f64 {
    let block = grid.spec().np1 * grid.spec().np2;
    w.comps()
        .iter()
        .map(|c| {
            c.as_standard_layout()
                .as_slice()
                .expect("standard layout")
                .par_chunks(block)
                .map(|b| b.iter().map(|v| v.abs()).sum::<f64>())
                .reduce(|| 0.0, f64::max)
        })
        .fold(0.0, f64::max)
        * grid.p_cell()
}

fn one_trial(grid: &Grid, f: &PotentialField, w: &WignerField, epsilon: f64, trial: usize) -> Result<IdentityTrial> {
    let (odd, even) = ThetaOperator::pair(grid, f, epsilon)?;
    let (theta, plus) = odd.apply_field_with(&even, w)?;

    let n = moments(w, grid)?;
    let n_abs = abs_moment_scale(w, grid);
    // the identities compare with the exact gradient when one is known
    let grad = match f.analytic_gradient_field(grid) {
        Some(g) if f.is_periodic() => g,
        _ => f.gradient(grid)?,
    };
    let grad_scale = max_abs2(&grad[0]).max(max_abs2(&grad[1]));
    let f_scale = max_abs2(f.values());

    let mass = moments(&theta, grid)?;
    let plus_n = moments(&plus, grid)?;
    let first = [momentum_moment(&theta, grid, 0)?, momentum_moment(&theta, grid, 1)?];
    let mut out = IdentityTrial { trial, theta_mass: 0.0, theta_momentum: 0.0, theta_plus: 0.0 };
    for k in 0..4 {
        let nk = &n.comps()[k];
        out.theta_mass = out
            .theta_mass
            .max(relative(max_abs2(&mass.comps()[k]), grad_scale * n_abs));
        for j in 0..2 {
            let rhs: Array2<f64> = -&grad[j] * nk;
            let diff = max_abs2(&(&first[j].comps()[k] - &rhs));
            out.theta_momentum = out
                .theta_momentum
                .max(relative(diff, max_abs2(&rhs).max(grad_scale * n_abs)));
        }
        let rhs: Array2<f64> = f.values() * nk * 2.0;
        let diff = max_abs2(&(&plus_n.comps()[k] - &rhs));
        out.theta_plus = out
            .theta_plus
            .max(relative(diff, max_abs2(&rhs).max(2.0 * f_scale * n_abs)));
    }
    Ok(out)
}

/// Checks `⟨Θ_ε[f]w⟩ = 0`, `⟨p_jΘ_ε[f]w⟩ = −∂_jf⟨w⟩` and
/// `⟨Θ⁺_ε[f]w⟩ = 2f⟨w⟩` on seeded random inputs.
pub fn check_moment_identities(grid: &Grid, config: &IdentityConfig) -> Result<IdentityReport> {
    if config.trials == 0 {
        return Err(Error::invalid("identity checks need at least one trial"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut trials = Vec::with_capacity(config.trials);
    let mut diagnostics = Vec::new();
    for trial in 0..config.trials {
        let f = match &config.function {
            TestFunction::RandomBandLimited => random_band_limited(grid, &mut rng, 1.0)?,
            TestFunction::Fixed(f) => f.clone(),
        };
        let w = random_wigner(grid, &mut rng)?;
        let t = one_trial(grid, &f, &w, config.epsilon, trial)?;
        if t.max_error() >= config.tolerance {
            let mut msg = format!("trial {trial}: max relative error {:.3e} ≥ {:e}", t.max_error(), config.tolerance);
            if let Some(a) = aliasing_diagnostic(grid, &f) {
                write!(msg, "; {a}").unwrap();
            }
            diagnostics.push(msg);
        }
        trials.push(t);
    }
    Ok(IdentityReport { epsilon: config.epsilon, seed: config.seed, tolerance: config.tolerance, trials, diagnostics })
}

#[derive(Clone, Debug, PartialEq)]
pub struct AuxReport {
    /// Error per Pauli component, relative to the largest entry of either
    /// side over all four components.
    pub errors: [f64; 4],
    pub tolerance: f64,
}

impl AuxReport {
    pub fn max_error(&self) -> f64 {
        self.errors.iter().copied().fold(0.0, f64::max)
    }

    pub fn passed(&self) -> bool {
        self.max_error() < self.tolerance
    }
}

/// Compares `⟨T w⟩` with its moment form
///
/// ```text
/// charge: −∂j⟨pj w0⟩ − εα ∇⊥·⟨w⃗⟩
/// spin:   −∂j⟨pj w⃗⟩ − εα ∇⊥⟨w0⟩ + 2α ⟨p⊥ × w⃗⟩
/// ```
pub fn check_aux_formula(grid: &Grid, w: &WignerField, params: &ModelParams, tolerance: f64) -> Result<AuxReport> {
    let lhs = moments(&TransportOperator::new(grid, params)?.apply(w)?, grid)?;
    let n = moments(w, grid)?;
    let j = [momentum_moment(w, grid, 0)?, momentum_moment(w, grid, 1)?];
    let d = |f: &Array2<f64>, axis: usize| grid.x_derivative2(f, axis, 1);
    let ea = params.epsilon * params.alpha;
    let a2 = 2.0 * params.alpha;
    let flux = |k: usize| -(d(&j[0].comps()[k], 0) + d(&j[1].comps()[k], 1));
    let nc = n.comps();
    let (j1, j2) = (j[0].comps(), j[1].comps());
    let rhs = [
        flux(0) - (d(&nc[1], 1) - d(&nc[2], 0)) * ea,
        flux(1) - d(&nc[0], 1) * ea - &j1[3] * a2,
        flux(2) + d(&nc[0], 0) * ea - &j2[3] * a2,
        flux(3) + (&j2[2] + &j1[1]) * a2,
    ];
    let scale = (0..4).map(|k| max_abs2(&rhs[k]).max(max_abs2(&lhs.comps()[k]))).fold(0.0, f64::max);
    let errors = std::array::from_fn(|k| relative(max_abs2(&(&lhs.comps()[k] - &rhs[k])), scale));
    Ok(AuxReport { errors, tolerance })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{FourierMode, GridSpec, SpinDensityField};
    use crate::kinetic::equilibrium_semiclassical;
    use std::f64::consts::PI;

    fn grid() -> Grid {
        Grid::new(GridSpec { nx1: 16, nx2: 16, np1: 32, np2: 32, pmax: 8.0, ..GridSpec::default() }).unwrap()
    }

    #[test]
    fn constant_function_is_exact() {
        let g = grid();
        let mut cfg = IdentityConfig::random(0.1, 2, 3);
        cfg.function = TestFunction::Fixed(PotentialField::new(&g, PotentialKind::Constant { value: 0.7 }).unwrap());
        let r = check_moment_identities(&g, &cfg).unwrap();
        assert!(r.max_error() < 1e-14, "{}", r.summary());
    }

    #[test]
    fn random_band_limited_inputs_pass() {
        let g = grid();
        let r = check_moment_identities(&g, &IdentityConfig::random(0.1, 2, 11)).unwrap();
        assert!(r.passed(), "{}", r.summary());
        assert!(r.to_csv().lines().count() > 6);
    }

    #[test]
    fn aliased_function_is_reported() {
        let g = grid();
        let mut cfg = IdentityConfig::random(0.1, 1, 5);
        cfg.function = TestFunction::Fixed(
            PotentialField::new(
                &g,
                PotentialKind::Fourier { modes: vec![FourierMode { m: [8, 0], amplitude: 1.0, phase: PI / 4.0 }] },
            )
            .unwrap(),
        );
        let r = check_moment_identities(&g, &cfg).unwrap();
        assert!(!r.passed());
        assert!(r.diagnostics[0].contains("Nyquist"), "{:?}", r.diagnostics);
    }

    #[test]
    fn aux_formula_holds() {
        let g = grid();
        let v = PotentialField::new(
            &g,
            PotentialKind::Fourier { modes: vec![FourierMode { m: [1, 1], amplitude: 0.4, phase: 0.1 }] },
        )
        .unwrap();
        let params = ModelParams::new(0.2, 1.3, 1.0, v).unwrap();
        let n = SpinDensityField::from_fn(&g, |x| [2.0 + x[0].sin(), 0.3 * x[1].cos(), 0.1, -0.2 * (x[0] - x[1]).sin()]);
        let eq = equilibrium_semiclassical(&g, &n).unwrap();
        let r = check_aux_formula(&g, &eq, &params, 1e-7).unwrap();
        assert!(r.passed(), "{r:?}");

        let odd = WignerField::from_fn(&g, |x, p| {
            let m = (-(p[0] * p[0] + p[1] * p[1]) / 2.0).exp();
            let s = m * (p[0] + 0.5 * p[1]) * (1.0 + 0.3 * x[0].cos());
            [s, 0.4 * s, -0.2 * s, s * x[1].sin()]
        });
        let r = check_aux_formula(&g, &odd, &params, 1e-7).unwrap();
        assert!(r.passed(), "{r:?}");

        let zero = check_aux_formula(&g, &WignerField::zeros(&g), &params, 1e-7).unwrap();
        assert_eq!(zero.max_error(), 0.0);
    }
}
