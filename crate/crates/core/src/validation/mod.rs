//! Oracles and convergence studies that tie the two models together.

mod identities;
mod studies;

pub use identities::{
    check_aux_formula, check_moment_identities, AuxReport, IdentityConfig, IdentityReport, IdentityTrial, TestFunction,
};
pub use studies::{
    diffusion_limit_study, semiclassical_consistency, uniform_spin_decay, DiffusionStudy, SemiclassicalReport,
    SpinDecayReport,
};

use std::f64::consts::PI;
use std::fmt::Write as _;

use ndarray::Array2;
use rayon::prelude::*;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::grid::{FourierMode, Grid, PotentialField, PotentialKind, WignerField};

/// Minimum coefficient of determination for a fitted order to count.
pub const MIN_R_SQUARED: f64 = 0.95;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Verdict {
    Pass,
    Fail,
    Inconclusive,
}

impl Verdict {
    pub fn as_str(&self) -> &'static str {
        match self {
            Verdict::Pass => "pass",
            Verdict::Fail => "fail",
            Verdict::Inconclusive => "inconclusive",
        }
    }

    pub fn passed(&self) -> bool {
        *self == Verdict::Pass
    }
}

/// Least-squares slope of `log e` against `log h`, with its `R²`.
pub fn fit_order(params: &[f64], errors: &[f64]) -> Result<(f64, f64)> {
    if params.len() != errors.len() || params.len() < 3 {
        return Err(Error::invalid("an order fit needs at least three (parameter, error) pairs"));
    }
    if params.iter().chain(errors).any(|v| !(v.is_finite() && *v > 0.0)) {
        return Err(Error::invalid("order fits need positive finite parameters and errors"));
    }
    let x: Vec<f64> = params.iter().map(|v| v.ln()).collect();
    let y: Vec<f64> = errors.iter().map(|v| v.ln()).collect();
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    let sxy: f64 = x.iter().zip(&y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let syy: f64 = y.iter().map(|b| (b - my).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::invalid("order fits need distinct parameter values"));
    }
    let slope = sxy / sxx;
    let r2 = if syy == 0.0 { 1.0 } else { (sxy * sxy) / (sxx * syy) };
    Ok((slope, r2))
}

/// Errors against a swept parameter, with the fitted order checked against
/// a band `[lo, hi]`.
#[derive(Clone, Debug, PartialEq)]
pub struct ConvergenceReport {
    pub name: String,
    pub parameter: String,
    pub values: Vec<f64>,
    pub errors: Vec<f64>,
    pub order: f64,
    pub r_squared: f64,
    pub band: (f64, f64),
    pub verdict: Verdict,
    pub note: String,
}

impl ConvergenceReport {
    pub fn new(name: &str, parameter: &str, values: Vec<f64>, errors: Vec<f64>, band: (f64, f64)) -> Result<Self> {
        let fit = fit_order(&values, &errors);
        let (order, r_squared, verdict, note) = match fit {
            Ok((order, r2)) if r2 < MIN_R_SQUARED => (order, r2, Verdict::Inconclusive, format!("R² = {r2:.4} below {MIN_R_SQUARED}")),
            Ok((order, r2)) if order >= band.0 && order <= band.1 => (order, r2, Verdict::Pass, String::new()),
            Ok((order, r2)) => (order, r2, Verdict::Fail, format!("order {order:.3} outside [{}, {}]", band.0, band.1)),
            Err(_) if values.len() < 3 => return Err(Error::invalid(format!("{name}: need at least three {parameter} values"))),
            Err(e) => (f64::NAN, f64::NAN, Verdict::Fail, e.to_string()),
        };
        Ok(Self {
            name: name.to_string(),
            parameter: parameter.to_string(),
            values,
            errors,
            order,
            r_squared,
            band,
            verdict,
            note,
        })
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::new();
        writeln!(s, "# study: {}", self.name).unwrap();
        writeln!(s, "# band: [{}, {}]", self.band.0, self.band.1).unwrap();
        writeln!(s, "# fitted_order: {}", self.order).unwrap();
        writeln!(s, "# r_squared: {}", self.r_squared).unwrap();
        writeln!(s, "# verdict: {}", self.verdict.as_str()).unwrap();
        writeln!(s, "{},error", self.parameter).unwrap();
        for (v, e) in self.values.iter().zip(&self.errors) {
            writeln!(s, "{v:?},{e:?}").unwrap();
        }
        s
    }

    pub fn summary(&self) -> String {
        let mut s = format!(
            "{}: order {:.3} in {} (R² = {:.4}, band [{}, {}]) -> {}",
            self.name,
            self.order,
            self.parameter,
            self.r_squared,
            self.band.0,
            self.band.1,
            self.verdict.as_str()
        );
        if !self.note.is_empty() {
            write!(s, " ({})", self.note).unwrap();
        }
        for (v, e) in self.values.iter().zip(&self.errors) {
            write!(s, "\n  {} = {v:<8} error = {e:.6e}", self.parameter).unwrap();
        }
        s
    }
}

/// Random Fourier potential using only modes with `|m_i| ≤ N_i/8`.
pub fn random_band_limited(grid: &Grid, rng: &mut ChaCha8Rng, scale: f64) -> Result<PotentialField> {
    let s = grid.spec();
    let (b1, b2) = ((s.nx1 / 8) as i64, (s.nx2 / 8) as i64);
    let mut modes = Vec::new();
    for m1 in -b1..=b1 {
        for m2 in 0..=b2 {
            if m2 == 0 && m1 <= 0 {
                continue;
            }
            let decay = 1.0 + (m1 * m1 + m2 * m2) as f64;
            modes.push(FourierMode {
                m: [m1, m2],
                amplitude: scale * rng.random_range(-1.0..1.0) / decay,
                phase: rng.random_range(0.0..2.0 * PI),
            });
        }
    }
    PotentialField::new(grid, PotentialKind::Fourier { modes })
}

/// Maxwellian-weighted random Wigner field: each component is
/// `M(p) Σ_q c_q(x) q(p)` over `q ∈ {1, p1, p2, p1² − 1, p1 p2, p2² − 1}` with
/// band-limited coefficients, plus a positive charge background.
pub fn random_wigner(grid: &Grid, rng: &mut ChaCha8Rng) -> Result<WignerField> {
    let m = grid.maxwellian();
    let (p1, p2) = (grid.p1(), grid.p2());
    let basis: [fn(f64, f64) -> f64; 6] = [
        |_, _| 1.0,
        |a, _| a,
        |_, b| b,
        |a, _| a * a - 1.0,
        |a, b| a * b,
        |_, b| b * b - 1.0,
    ];
    let weighted: Vec<Vec<f64>> = basis
        .iter()
        .map(|q| Array2::from_shape_fn(m.raw_dim(), |(a, b)| m[[a, b]] * q(p1[a], p2[b])).into_raw_vec_and_offset().0)
        .collect();
    let block = m.len();
    let mut comps = Vec::with_capacity(4);
    for k in 0..4 {
        let coeffs: Vec<Array2<f64>> = (0..basis.len())
            .map(|q| {
                let f = random_band_limited(grid, rng, if q == 0 { 0.5 } else { 0.2 })?;
                let mut v = f.values().clone();
                if k == 0 && q == 0 {
                    v += 2.0;
                }
                Ok(v)
            })
            .collect::<Result<_>>()?;
        let n2 = grid.spec().nx2;
        let mut out = ndarray::Array4::zeros(grid.shape4());
        out.as_slice_mut()
            .expect("fresh array")
            .par_chunks_mut(block)
            .enumerate()
            .for_each(|(ix, dst)| {
                let (i, j) = (ix / n2, ix % n2);
                let c: [f64; 6] = std::array::from_fn(|q| coeffs[q][[i, j]]);
                let n = dst.len();
                let q: [&[f64]; 6] = std::array::from_fn(|k| &weighted[k][..n]);
                for e in 0..n {
                    dst[e] = c[0] * q[0][e] + c[1] * q[1][e] + c[2] * q[2][e] + c[3] * q[3][e] + c[4] * q[4][e] + c[5] * q[5][e];
                }
            });
        comps.push(out);
    }
    let comps: [_; 4] = comps.try_into().expect("four components");
    WignerField::from_components(comps)
}

pub(crate) fn max_abs2(a: &Array2<f64>) -> f64 {
    a.iter().fold(0.0f64, |m, v| m.max(v.abs()))
}

/// `‖lhs − rhs‖∞ / scale`, or the absolute error when the scale vanishes.
pub(crate) fn relative(diff: f64, scale: f64) -> f64 {
    if scale > 0.0 {
        diff / scale
    } else {
        diff
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::GridSpec;
    use rand::SeedableRng;

    #[test]
    fn exact_power_law_fits() {
        let h = [0.2, 0.1, 0.05];
        let e: Vec<f64> = h.iter().map(|v| 3.0 * v * v).collect();
        let (q, r2) = fit_order(&h, &e).unwrap();
        assert!((q - 2.0).abs() < 1e-12 && (r2 - 1.0).abs() < 1e-12);
        assert!(fit_order(&h[..2], &e[..2]).is_err());
        assert!(fit_order(&h, &[1.0, 0.0, 1.0]).is_err());
    }

    #[test]
    fn verdicts() {
        let h = vec![0.2, 0.1, 0.05];
        let r = ConvergenceReport::new("t", "h", h.clone(), vec![0.4, 0.2, 0.1], (0.8, f64::INFINITY)).unwrap();
        assert_eq!(r.verdict, Verdict::Pass);
        let r = ConvergenceReport::new("t", "h", h.clone(), vec![0.4, 0.4, 0.4], (0.8, f64::INFINITY)).unwrap();
        assert_eq!(r.verdict, Verdict::Fail);
        let r = ConvergenceReport::new("t", "h", h.clone(), vec![0.4, 0.05, 0.3], (0.8, f64::INFINITY)).unwrap();
        assert_eq!(r.verdict, Verdict::Inconclusive);
        assert!(r.to_csv().contains("verdict: inconclusive"));
        assert!(ConvergenceReport::new("t", "h", vec![1.0, 2.0], vec![1.0, 2.0], (0.0, 1.0)).is_err());
    }

    #[test]
    fn random_inputs_are_reproducible_and_band_limited() {
        let g = Grid::new(GridSpec { nx1: 16, nx2: 16, np1: 8, np2: 8, ..GridSpec::default() }).unwrap();
        let mut a = ChaCha8Rng::seed_from_u64(7);
        let mut b = ChaCha8Rng::seed_from_u64(7);
        let fa = random_band_limited(&g, &mut a, 1.0).unwrap();
        let fb = random_band_limited(&g, &mut b, 1.0).unwrap();
        assert_eq!(fa, fb);
        let PotentialKind::Fourier { modes } = fa.kind() else { panic!() };
        assert!(modes.iter().all(|m| m.m[0].abs() <= 2 && m.m[1].abs() <= 2));
        assert_eq!(random_wigner(&g, &mut a).unwrap(), random_wigner(&g, &mut b).unwrap());
    }
}
