//! External potentials (and other position-only multipliers) on the grid.
//!
//! Every potential carries its grid samples plus an analytic descriptor.
//! Periodic kinds are represented by their samples; the affine and quadratic
//! kinds are not periodic and are only evaluated through their formulas,
//! which is enough wherever only `∇V` or shifted differences of `V` enter.

use std::f64::consts::PI;

use ndarray::{Array2, Array4};
use num_complex::Complex64 as C64;
use rayon::prelude::*;

use super::Grid;
use crate::error::{Error, Result};

/// Images summed on each side when periodizing a Gaussian bump.
const GAUSSIAN_IMAGES: i64 = 2;

/// One term `amplitude · cos(k·x + phase)` with `k_i = 2π m_i / L_i`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FourierMode {
    pub m: [i64; 2],
    pub amplitude: f64,
    pub phase: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub enum PotentialKind {
    Constant { value: f64 },
    /// `V = e·x`.
    Linear { field: [f64; 2] },
    /// `V = ½ Σ c_i (x_i − x0_i)²`.
    Quadratic { curvature: [f64; 2], center: [f64; 2] },
    /// Periodized `A exp(−|x − c|²/(2σ²))`.
    Gaussian { amplitude: f64, center: [f64; 2], width: f64 },
    Fourier { modes: Vec<FourierMode> },
    /// Samples only; must be periodic.
    Tabulated,
}

/// How two shifted copies `f(x − εη/2)` and `f(x + εη/2)` are combined.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ShiftCombination {
    /// `f(x − εη/2) − f(x + εη/2)`
    Difference,
    /// `f(x − εη/2) + f(x + εη/2)`
    Sum,
}

#[derive(Clone, Debug, PartialEq)]
pub struct PotentialField {
    kind: PotentialKind,
    values: Array2<f64>,
    lengths: [f64; 2],
}

impl PotentialField {
    pub fn new(grid: &Grid, kind: PotentialKind) -> Result<Self> {
        let lengths = [grid.spec().lx1, grid.spec().lx2];
        match &kind {
            PotentialKind::Tabulated => {
                return Err(Error::invalid("tabulated potentials are built with PotentialField::tabulated"))
            }
            PotentialKind::Gaussian { width, .. } if !(*width > 0.0) => {
                return Err(Error::invalid(format!("gaussian width must be positive, got {width}")))
            }
            _ => {}
        }
        let mut field = Self {
            kind,
            values: Array2::zeros(grid.shape2()),
            lengths,
        };
        field.values = grid.position_fn(|x| field.analytic_value(x).expect("analytic kind"));
        Ok(field)
    }

    pub fn zero(grid: &Grid) -> Self {
        Self::new(grid, PotentialKind::Constant { value: 0.0 }).expect("constant potential")
    }

    pub fn tabulated(grid: &Grid, values: Array2<f64>) -> Result<Self> {
        grid.check_shape2(&values)?;
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("tabulated potential contains non-finite values"));
        }
        Ok(Self {
            kind: PotentialKind::Tabulated,
            values: values.as_standard_layout().into_owned(),
            lengths: [grid.spec().lx1, grid.spec().lx2],
        })
    }

    pub fn kind(&self) -> &PotentialKind {
        &self.kind
    }

    pub fn values(&self) -> &Array2<f64> {
        &self.values
    }

    pub fn is_periodic(&self) -> bool {
        !matches!(self.kind, PotentialKind::Linear { .. } | PotentialKind::Quadratic { .. })
    }

    /// True when the potential exerts no force anywhere.
    pub fn is_constant(&self) -> bool {
        match &self.kind {
            PotentialKind::Constant { .. } => true,
            PotentialKind::Linear { field } => field == &[0.0, 0.0],
            PotentialKind::Quadratic { curvature, .. } => curvature == &[0.0, 0.0],
            PotentialKind::Gaussian { amplitude, .. } => *amplitude == 0.0,
            PotentialKind::Fourier { modes } => {
                modes.iter().all(|m| m.amplitude == 0.0 || m.m == [0, 0])
            }
            PotentialKind::Tabulated => {
                let first = self.values[[0, 0]];
                self.values.iter().all(|v| *v == first)
            }
        }
    }

    fn wavevector(&self, m: [i64; 2]) -> [f64; 2] {
        [
            2.0 * PI * m[0] as f64 / self.lengths[0],
            2.0 * PI * m[1] as f64 / self.lengths[1],
        ]
    }

    /// Closed-form value, if the kind has one.
    pub fn analytic_value(&self, x: [f64; 2]) -> Option<f64> {
        Some(match &self.kind {
            PotentialKind::Constant { value } => *value,
            PotentialKind::Linear { field } => field[0] * x[0] + field[1] * x[1],
            PotentialKind::Quadratic { curvature, center } => {
                0.5 * (curvature[0] * (x[0] - center[0]).powi(2)
                    + curvature[1] * (x[1] - center[1]).powi(2))
            }
            PotentialKind::Gaussian { amplitude, center, width } => {
                amplitude * self.gaussian_sums(x, *center, *width).0
            }
            PotentialKind::Fourier { modes } => modes
                .iter()
                .map(|m| {
                    let k = self.wavevector(m.m);
                    m.amplitude * (k[0] * x[0] + k[1] * x[1] + m.phase).cos()
                })
                .sum(),
            PotentialKind::Tabulated => return None,
        })
    }

    /// Closed-form gradient, if the kind has one.
    pub fn analytic_gradient(&self, x: [f64; 2]) -> Option<[f64; 2]> {
        Some(match &self.kind {
            PotentialKind::Constant { .. } => [0.0, 0.0],
            PotentialKind::Linear { field } => *field,
            PotentialKind::Quadratic { curvature, center } => [
                curvature[0] * (x[0] - center[0]),
                curvature[1] * (x[1] - center[1]),
            ],
            PotentialKind::Gaussian { amplitude, center, width } => {
                let (_, moment) = self.gaussian_sums(x, *center, *width);
                let scale = -amplitude / (width * width);
                [scale * moment[0], scale * moment[1]]
            }
            PotentialKind::Fourier { modes } => {
                let mut g = [0.0, 0.0];
                for m in modes {
                    let k = self.wavevector(m.m);
                    let s = -m.amplitude * (k[0] * x[0] + k[1] * x[1] + m.phase).sin();
                    g[0] += s * k[0];
                    g[1] += s * k[1];
                }
                g
            }
            PotentialKind::Tabulated => return None,
        })
    }

    /// `(Σ g, Σ d g)` over periodic images, with `d = x − c − image shift`
    /// and `g = exp(−|d|²/(2σ²))`.
    fn gaussian_sums(&self, x: [f64; 2], center: [f64; 2], width: f64) -> (f64, [f64; 2]) {
        let mut total = 0.0;
        let mut moment = [0.0, 0.0];
        for a in -GAUSSIAN_IMAGES..=GAUSSIAN_IMAGES {
            for b in -GAUSSIAN_IMAGES..=GAUSSIAN_IMAGES {
                let d = [
                    x[0] - center[0] - a as f64 * self.lengths[0],
                    x[1] - center[1] - b as f64 * self.lengths[1],
                ];
                let g = (-(d[0] * d[0] + d[1] * d[1]) / (2.0 * width * width)).exp();
                total += g;
                moment[0] += d[0] * g;
                moment[1] += d[1] * g;
            }
        }
        (total, moment)
    }

    /// `∇V` on the grid: analytic for the non-periodic kinds, spectral from
    /// the samples otherwise.
    pub fn gradient(&self, grid: &Grid) -> Result<[Array2<f64>; 2]> {
        grid.check_shape2(&self.values)?;
        if self.is_periodic() {
            Ok([0, 1].map(|axis| grid.x_derivative2(&self.values, axis, 1)))
        } else {
            Ok([0, 1].map(|axis| {
                grid.position_fn(|x| self.analytic_gradient(x).expect("analytic kind")[axis])
            }))
        }
    }

    /// Closed-form gradient sampled on the grid, if available.
    pub fn analytic_gradient_field(&self, grid: &Grid) -> Option<[Array2<f64>; 2]> {
        self.analytic_gradient([0.0, 0.0])?;
        Some([0, 1].map(|axis| grid.position_fn(|x| self.analytic_gradient(x).unwrap()[axis])))
    }

    /// `f(x − εη/2) ∓ f(x + εη/2)` on `[x1, x2, η1, η2]` with `η` in FFT
    /// order. Periodic kinds are shifted spectrally from their samples.
    pub fn shifted_combination(
        &self,
        grid: &Grid,
        epsilon: f64,
        combination: ShiftCombination,
    ) -> Result<Array4<f64>> {
        let (difference, sum) = self.shifted_pair(grid, epsilon)?;
        Ok(match combination {
            ShiftCombination::Difference => difference,
            ShiftCombination::Sum => sum,
        })
    }

    /// Both shift combinations at once, `(difference, sum)`.
    pub fn shifted_pair(&self, grid: &Grid, epsilon: f64) -> Result<(Array4<f64>, Array4<f64>)> {
        grid.check_shape2(&self.values)?;
        let [n1, n2, m1, m2] = grid.shape4();
        let eta1 = grid.eta(0);
        let eta2 = grid.eta(1);
        let half = 0.5 * epsilon;
        let mut diff = Array4::zeros((n1, n2, m1, m2));
        let mut sum = Array4::zeros((n1, n2, m1, m2));

        match &self.kind {
            PotentialKind::Constant { value } => sum.fill(2.0 * value),
            PotentialKind::Linear { .. } | PotentialKind::Quadratic { .. } => {
                let d = diff.as_slice_mut().expect("fresh array");
                let s = sum.as_slice_mut().expect("fresh array");
                d.par_chunks_mut(m1 * m2)
                    .zip(s.par_chunks_mut(m1 * m2))
                    .enumerate()
                    .for_each(|(ix, (db, sb))| {
                        let x = [grid.x1()[ix / n2], grid.x2()[ix % n2]];
                        for je in 0..m1 * m2 {
                            let sh = [half * eta1[je / m2], half * eta2[je % m2]];
                            let minus = self.analytic_value([x[0] - sh[0], x[1] - sh[1]]).unwrap();
                            let plus = self.analytic_value([x[0] + sh[0], x[1] + sh[1]]).unwrap();
                            db[je] = minus - plus;
                            sb[je] = minus + plus;
                        }
                    });
            }
            _ => {
                let mut hat: Array2<C64> = grid
                    .forward(self.values.clone().into_dyn(), &[0, 1])
                    .into_dimensionality()
                    .expect("2D");
                // a shifted Nyquist mode has no real interpolant
                for ((i, j), v) in hat.indexed_iter_mut() {
                    if 2 * i == n1 || 2 * j == n2 {
                        *v = C64::default();
                    }
                }
                let hat = hat.as_slice().expect("standard layout");
                let (kx1, kx2) = (grid.kx(0), grid.kx(1));
                let plane = n1 * n2;
                let scratch_len = grid.plans.block_scratch_len(n1, n2);
                // The sum is the real part and the difference the imaginary
                // part of a single inverse transform per η point.
                let mut planes = vec![C64::default(); plane * m1 * m2];
                planes.par_chunks_mut(plane).enumerate().for_each_init(
                    || (vec![C64::default(); plane], vec![C64::default(); scratch_len]),
                    |(tile, scratch), (je, out)| {
                        let sh = [half * eta1[je / m2], half * eta2[je % m2]];
                        let e2: Vec<C64> = kx2.iter().map(|k| C64::from_polar(1.0, k * sh[1])).collect();
                        for i in 0..n1 {
                            let e1 = C64::from_polar(1.0, kx1[i] * sh[0]);
                            for j in 0..n2 {
                                let z = e1 * e2[j];
                                out[i * n2 + j] = hat[i * n2 + j] * (2.0 * (z.re + z.im));
                            }
                        }
                        grid.plans.fft2_block(out, n1, n2, true, tile, scratch);
                    },
                );
                let d = diff.as_slice_mut().expect("fresh array");
                let s = sum.as_slice_mut().expect("fresh array");
                d.par_chunks_mut(m1 * m2)
                    .zip(s.par_chunks_mut(m1 * m2))
                    .enumerate()
                    .for_each(|(ix, (db, sb))| {
                        for je in 0..m1 * m2 {
                            let v = planes[je * plane + ix];
                            db[je] = v.im;
                            sb[je] = v.re;
                        }
                    });
            }
        }
        Ok((diff, sum))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::GridSpec;

    fn grid() -> Grid {
        Grid::new(GridSpec {
            nx1: 16,
            nx2: 16,
            np1: 8,
            np2: 8,
            ..GridSpec::default()
        })
        .unwrap()
    }

    #[test]
    fn fourier_shift_matches_analytic() {
        let g = grid();
        let v = PotentialField::new(
            &g,
            PotentialKind::Fourier {
                modes: vec![
                    FourierMode { m: [1, 2], amplitude: 0.7, phase: 0.3 },
                    FourierMode { m: [-3, 1], amplitude: -0.2, phase: 1.1 },
                ],
            },
        )
        .unwrap();
        let eps = 0.37;
        for comb in [ShiftCombination::Difference, ShiftCombination::Sum] {
            let s = v.shifted_combination(&g, eps, comb).unwrap();
            for ((i, j, a, b), val) in s.indexed_iter() {
                let x = [g.x1()[i], g.x2()[j]];
                let sh = [0.5 * eps * g.eta(0)[a], 0.5 * eps * g.eta(1)[b]];
                let minus = v.analytic_value([x[0] - sh[0], x[1] - sh[1]]).unwrap();
                let plus = v.analytic_value([x[0] + sh[0], x[1] + sh[1]]).unwrap();
                let expect = match comb {
                    ShiftCombination::Difference => minus - plus,
                    ShiftCombination::Sum => minus + plus,
                };
                assert!((val - expect).abs() < 1e-12, "{val} vs {expect}");
            }
        }
    }

    #[test]
    fn periodized_gaussian_gradient() {
        let g = Grid::new(GridSpec { nx1: 64, nx2: 64, np1: 8, np2: 8, ..GridSpec::default() }).unwrap();
        let v = PotentialField::new(
            &g,
            PotentialKind::Gaussian { amplitude: 1.3, center: [1.0, 5.5], width: 0.6 },
        )
        .unwrap();
        let spectral = v.gradient(&g).unwrap();
        let exact = v.analytic_gradient_field(&g).unwrap();
        for axis in 0..2 {
            let err = (&spectral[axis] - &exact[axis]).iter().fold(0.0f64, |m, e| m.max(e.abs()));
            assert!(err < 1e-10, "axis {axis}: {err}");
        }
    }

    #[test]
    fn periodicity_flags() {
        let g = grid();
        assert!(PotentialField::zero(&g).is_periodic());
        assert!(PotentialField::zero(&g).is_constant());
        let lin = PotentialField::new(&g, PotentialKind::Linear { field: [1.0, 0.0] }).unwrap();
        assert!(!lin.is_periodic());
        assert!(!lin.is_constant());
        assert!(PotentialField::new(&g, PotentialKind::Gaussian { amplitude: 1.0, center: [0.0; 2], width: 0.0 }).is_err());
        assert!(PotentialField::tabulated(&g, Array2::zeros((3, 3))).is_err());
    }

    #[test]
    fn linear_difference_is_exact() {
        let g = grid();
        let e = [0.4, -1.5];
        let v = PotentialField::new(&g, PotentialKind::Linear { field: e }).unwrap();
        let eps = 0.2;
        let s = v.shifted_combination(&g, eps, ShiftCombination::Difference).unwrap();
        for ((_, _, a, b), val) in s.indexed_iter() {
            let expect = -eps * (e[0] * g.eta(0)[a] + e[1] * g.eta(1)[b]);
            assert!((val - expect).abs() < 1e-12);
        }
    }
}
