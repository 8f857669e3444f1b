//! Phase-space discretization: a periodic 2D position grid, a truncated 2D
//! momentum grid, spectral differentiation and momentum quadrature.
//!
//! Positions are `x_i = i·Lx/Nx` on `[0, Lx)`. Momenta are cell midpoints
//! `p_j = −pmax + (j + ½)·Δp` on `[−pmax, pmax]`, so the grid is symmetric
//! about `p = 0` and moments use the midpoint rule. For transforms the
//! momentum box is treated as periodic; all states used with it decay like a
//! Maxwellian well before the cutoff.

pub(crate) mod fft;
pub mod potential;
pub mod snapshot;

use std::f64::consts::PI;
use std::sync::Arc;

use ndarray::{Array2, Array4, ArrayD, Zip};
use num_complex::Complex64 as C64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use fft::PlanSet;

pub use potential::{FourierMode, PotentialField, PotentialKind};

pub const MIN_RESOLUTION: usize = 8;
pub const MIN_PMAX: f64 = 5.0;

/// The discretization contract shared by all solvers.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GridSpec {
    pub lx1: f64,
    pub lx2: f64,
    pub nx1: usize,
    pub nx2: usize,
    pub pmax: f64,
    pub np1: usize,
    pub np2: usize,
    pub dt: f64,
}

impl Default for GridSpec {
    fn default() -> Self {
        Self {
            lx1: 2.0 * PI,
            lx2: 2.0 * PI,
            nx1: 32,
            nx2: 32,
            pmax: 6.0,
            np1: 48,
            np2: 48,
            dt: 1e-3,
        }
    }
}

impl GridSpec {
    pub fn validate(&self) -> Result<()> {
        for (name, n) in [("nx1", self.nx1), ("nx2", self.nx2), ("np1", self.np1), ("np2", self.np2)] {
            if n < MIN_RESOLUTION || n % 2 != 0 {
                return Err(Error::invalid(format!(
                    "{name} = {n}: resolutions must be even and at least {MIN_RESOLUTION}"
                )));
            }
        }
        for (name, l) in [("lx1", self.lx1), ("lx2", self.lx2)] {
            if !(l > 0.0 && l.is_finite()) {
                return Err(Error::invalid(format!("{name} must be positive, got {l}")));
            }
        }
        if !(self.pmax >= MIN_PMAX && self.pmax.is_finite()) {
            return Err(Error::invalid(format!(
                "pmax must be at least {MIN_PMAX}, got {}",
                self.pmax
            )));
        }
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(Error::invalid(format!("dt must be positive, got {}", self.dt)));
        }
        Ok(())
    }

    pub fn dx1(&self) -> f64 {
        self.lx1 / self.nx1 as f64
    }

    pub fn dx2(&self) -> f64 {
        self.lx2 / self.nx2 as f64
    }

    pub fn dp1(&self) -> f64 {
        2.0 * self.pmax / self.np1 as f64
    }

    pub fn dp2(&self) -> f64 {
        2.0 * self.pmax / self.np2 as f64
    }

    pub fn shape2(&self) -> [usize; 2] {
        [self.nx1, self.nx2]
    }

    pub fn shape4(&self) -> [usize; 4] {
        [self.nx1, self.nx2, self.np1, self.np2]
    }
}

/// A validated [`GridSpec`] with coordinates, wavenumbers and cached FFT
/// plans. Cloning is cheap; the plans are shared.
#[derive(Clone)]
pub struct Grid {
    spec: GridSpec,
    x1: Vec<f64>,
    x2: Vec<f64>,
    p1: Vec<f64>,
    p2: Vec<f64>,
    kx1: Vec<f64>,
    kx2: Vec<f64>,
    eta1: Vec<f64>,
    eta2: Vec<f64>,
    plans: Arc<PlanSet>,
}

impl std::fmt::Debug for Grid {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Grid").field("spec", &self.spec).finish()
    }
}

impl Grid {
    pub fn new(spec: GridSpec) -> Result<Self> {
        spec.validate()?;
        let x = |n: usize, l: f64| (0..n).map(|i| i as f64 * l / n as f64).collect::<Vec<_>>();
        let p = |n: usize| {
            let dp = 2.0 * spec.pmax / n as f64;
            (0..n)
                .map(|j| -spec.pmax + (j as f64 + 0.5) * dp)
                .collect::<Vec<_>>()
        };
        Ok(Self {
            x1: x(spec.nx1, spec.lx1),
            x2: x(spec.nx2, spec.lx2),
            p1: p(spec.np1),
            p2: p(spec.np2),
            kx1: fft::wavenumbers(spec.nx1, spec.lx1),
            kx2: fft::wavenumbers(spec.nx2, spec.lx2),
            eta1: fft::wavenumbers(spec.np1, 2.0 * spec.pmax),
            eta2: fft::wavenumbers(spec.np2, 2.0 * spec.pmax),
            plans: Arc::new(PlanSet::new(&[spec.nx1, spec.nx2, spec.np1, spec.np2])),
            spec,
        })
    }

    pub fn spec(&self) -> &GridSpec {
        &self.spec
    }

    pub fn x1(&self) -> &[f64] {
        &self.x1
    }

    pub fn x2(&self) -> &[f64] {
        &self.x2
    }

    pub fn p1(&self) -> &[f64] {
        &self.p1
    }

    pub fn p2(&self) -> &[f64] {
        &self.p2
    }

    /// Position wavenumbers along axis 0 or 1, FFT order, Nyquist included.
    pub fn kx(&self, axis: usize) -> &[f64] {
        match axis {
            0 => &self.kx1,
            1 => &self.kx2,
            _ => panic!("position axis {axis} out of range"),
        }
    }

    /// Variables dual to `p1`, `p2`, FFT order, Nyquist included.
    pub fn eta(&self, axis: usize) -> &[f64] {
        match axis {
            0 => &self.eta1,
            1 => &self.eta2,
            _ => panic!("momentum axis {axis} out of range"),
        }
    }

    pub fn shape2(&self) -> [usize; 2] {
        self.spec.shape2()
    }

    pub fn shape4(&self) -> [usize; 4] {
        self.spec.shape4()
    }

    /// `Δp1 Δp2`.
    pub fn p_cell(&self) -> f64 {
        self.spec.dp1() * self.spec.dp2()
    }

    /// `Δx1 Δx2`.
    pub fn x_cell(&self) -> f64 {
        self.spec.dx1() * self.spec.dx2()
    }

    /// `(1/2π) e^{−|p|²/2}` sampled on the momentum grid.
    pub fn maxwellian(&self) -> Array2<f64> {
        Array2::from_shape_fn((self.spec.np1, self.spec.np2), |(i, j)| {
            let p2 = self.p1[i] * self.p1[i] + self.p2[j] * self.p2[j];
            (-0.5 * p2).exp() / (2.0 * PI)
        })
    }

    /// The sampled Maxwellian rescaled to unit discrete mass, so that
    /// `moments` of `M·n` return `n` to rounding error.
    pub fn discrete_maxwellian(&self) -> Array2<f64> {
        let mut m = self.maxwellian();
        let mass = m.sum() * self.p_cell();
        m.mapv_inplace(|v| v / mass);
        m
    }

    /// `Σ f Δx1 Δx2`.
    pub fn integrate_x(&self, f: &Array2<f64>) -> f64 {
        f.iter().sum::<f64>() * self.x_cell()
    }

    /// Quadrature-weighted L2 norm over the position grid.
    pub fn l2_norm(&self, f: &Array2<f64>) -> f64 {
        (f.iter().map(|v| v * v).sum::<f64>() * self.x_cell()).sqrt()
    }

    pub(crate) fn check_shape2(&self, f: &Array2<f64>) -> Result<()> {
        check_shape(&self.shape2(), f.shape())
    }

    pub(crate) fn check_shape4(&self, f: &Array4<f64>) -> Result<()> {
        check_shape(&self.shape4(), f.shape())
    }

    /// Forward transform of a real array along the given axes. `axes` index
    /// into the array, which must be 2D (position) or 4D (phase space).
    pub(crate) fn forward(&self, f: ArrayD<f64>, axes: &[usize]) -> ArrayD<C64> {
        let mut data = f.mapv(|v| C64::new(v, 0.0));
        self.transform_in_place(&mut data, axes, false);
        data
    }

    pub(crate) fn transform_in_place(&self, data: &mut ArrayD<C64>, axes: &[usize], inverse: bool) {
        let shape = data.shape().to_vec();
        let slice = data
            .as_slice_mut()
            .expect("transform buffers are in standard layout");
        let nd = shape.len();
        if nd >= 2 && axes.len() == 2 && axes.contains(&(nd - 2)) && axes.contains(&(nd - 1)) {
            self.plans.transform_trailing_2d(slice, shape[nd - 2], shape[nd - 1], inverse);
            return;
        }
        for &axis in axes {
            self.plans.transform(slice, &shape, axis, inverse);
        }
    }

    /// Applies `op` to the momentum spectrum of `a + i b` one position point
    /// at a time, then stores the real and imaginary parts of the inverse
    /// back into `a` and `b`. `op` receives the flat position index and the
    /// spectrum in η2-major order (see [`Grid::to_spectral_layout`]).
    pub(crate) fn momentum_filter_pair<F>(&self, a: &mut Array4<f64>, b: &mut Array4<f64>, op: F)
    where
        F: Fn(usize, &mut [C64]) + Sync,
    {
        let (rows, cols) = (self.spec.np1, self.spec.np2);
        let block = rows * cols;
        let scratch_len = self.plans.block_scratch_len(rows, cols);
        let a = a.as_slice_mut().expect("standard layout");
        let b = b.as_slice_mut().expect("standard layout");
        a.par_chunks_mut(block)
            .zip(b.par_chunks_mut(block))
            .enumerate()
            .for_each_init(
                || (vec![C64::default(); block], vec![C64::default(); block], vec![C64::default(); scratch_len]),
                |(buf, spec, scratch), (ix, (ab, bb))| {
                    for ((z, x), y) in buf.iter_mut().zip(ab.iter()).zip(bb.iter()) {
                        *z = C64::new(*x, *y);
                    }
                    self.plans.forward_to_transposed(buf, spec, rows, cols, scratch);
                    op(ix, spec);
                    self.plans.inverse_from_transposed(spec, buf, rows, cols, scratch);
                    for ((z, x), y) in buf.iter().zip(ab.iter_mut()).zip(bb.iter_mut()) {
                        *x = z.re;
                        *y = z.im;
                    }
                },
            );
    }

    /// Like [`Grid::momentum_filter_pair`] for two operators sharing one
    /// forward transform. `op` receives the operator index (0 or 1); the
    /// images are returned as `[(a, b) under op 0, (a, b) under op 1]`.
    pub(crate) fn momentum_filter_two<F>(&self, a: &Array4<f64>, b: &Array4<f64>, op: F) -> [(Array4<f64>, Array4<f64>); 2]
    where
        F: Fn(usize, usize, &mut [C64]) + Sync,
    {
        let (rows, cols) = (self.spec.np1, self.spec.np2);
        let block = rows * cols;
        let scratch_len = self.plans.block_scratch_len(rows, cols);
        let (a, b) = (a.as_standard_layout(), b.as_standard_layout());
        let mut out: [Array4<f64>; 4] = std::array::from_fn(|_| Array4::zeros(a.raw_dim()));
        {
            let [o0, o1, o2, o3] = &mut out;
            fn slice(o: &mut Array4<f64>, block: usize) -> rayon::slice::ChunksMut<'_, f64> {
                o.as_slice_mut().expect("fresh array").par_chunks_mut(block)
            }
            a.as_slice()
                .expect("standard layout")
                .par_chunks(block)
                .zip(b.as_slice().expect("standard layout").par_chunks(block))
                .zip(slice(o0, block).zip(slice(o1, block)))
                .zip(slice(o2, block).zip(slice(o3, block)))
                .enumerate()
                .for_each_init(
                    || {
                        let z = vec![C64::default(); block];
                        (z.clone(), z.clone(), z, vec![C64::default(); scratch_len])
                    },
                    |(hat, spec, buf, scratch), (ix, (((ab, bb), first), second))| {
                        for ((z, x), y) in buf.iter_mut().zip(ab).zip(bb) {
                            *z = C64::new(*x, *y);
                        }
                        self.plans.forward_to_transposed(buf, hat, rows, cols, scratch);
                        for (which, (ra, rb)) in [first, second].into_iter().enumerate() {
                            spec.copy_from_slice(hat);
                            op(which, ix, spec);
                            self.plans.inverse_from_transposed(spec, buf, rows, cols, scratch);
                            for ((z, x), y) in buf.iter().zip(ra.iter_mut()).zip(rb.iter_mut()) {
                                *x = z.re;
                                *y = z.im;
                            }
                        }
                    },
                );
        }
        let [o0, o1, o2, o3] = out;
        [(o0, o1), (o2, o3)]
    }

    /// Reorders each `np1 × np2` momentum block of `m` to η2-major order,
    /// the layout the momentum filters hand to their operators.
    pub(crate) fn to_spectral_layout(&self, m: &mut Array4<f64>) {
        let (rows, cols) = (self.spec.np1, self.spec.np2);
        m.as_slice_mut()
            .expect("standard layout")
            .par_chunks_mut(rows * cols)
            .for_each_init(
                || vec![0.0; rows * cols],
                |tmp, block| {
                    tmp.copy_from_slice(block);
                    for r in 0..rows {
                        for c in 0..cols {
                            block[c * rows + r] = tmp[r * cols + c];
                        }
                    }
                },
            );
    }

    /// Inverse transform along `axes`, keeping the real part.
    pub(crate) fn inverse_real(&self, mut data: ArrayD<C64>, axes: &[usize]) -> ArrayD<f64> {
        self.transform_in_place(&mut data, axes, true);
        data.mapv(|v| v.re)
    }

    pub(crate) fn scale_axis(&self, data: &mut ArrayD<C64>, axis: usize, factors: &[C64]) {
        let shape = data.shape().to_vec();
        fft::scale_along_axis(
            data.as_slice_mut().expect("standard layout"),
            &shape,
            axis,
            factors,
        );
    }

    /// Wavenumbers for array axis `axis` of an array with `ndim` dimensions.
    fn axis_wavenumbers(&self, ndim: usize, axis: usize) -> &[f64] {
        match (ndim, axis) {
            (2, a) | (4, a) if a < 2 => self.kx(a),
            (4, a) if a < 4 => self.eta(a - 2),
            _ => panic!("axis {axis} invalid for a {ndim}-dimensional field"),
        }
    }

    /// `(i k)^order` along an axis; odd orders vanish at the Nyquist mode.
    pub(crate) fn derivative_factors(&self, ndim: usize, axis: usize, order: u32) -> Vec<C64> {
        let k = self.axis_wavenumbers(ndim, axis);
        let nyq = fft::nyquist(k.len());
        k.iter()
            .enumerate()
            .map(|(m, &km)| {
                if order % 2 == 1 && m == nyq {
                    C64::default()
                } else {
                    C64::new(0.0, km).powu(order)
                }
            })
            .collect()
    }

    fn spectral_derivative(&self, f: ArrayD<f64>, axis: usize, order: u32) -> ArrayD<f64> {
        if order == 0 {
            return f;
        }
        let ndim = f.ndim();
        let factors = self.derivative_factors(ndim, axis, order);
        let mut hat = self.forward(f, &[axis]);
        self.scale_axis(&mut hat, axis, &factors);
        self.inverse_real(hat, &[axis])
    }

    /// Spectral `∂^order/∂x_axis^order` of a position field.
    pub fn x_derivative2(&self, f: &Array2<f64>, axis: usize, order: u32) -> Array2<f64> {
        assert!(axis < 2);
        let d = self.spectral_derivative(f.as_standard_layout().into_owned().into_dyn(), axis, order);
        d.into_dimensionality().expect("2D")
    }

    /// Spectral `∂^order/∂x_axis^order` of a phase-space field.
    pub fn x_derivative(&self, f: &Array4<f64>, axis: usize, order: u32) -> Array4<f64> {
        assert!(axis < 2);
        let d = self.spectral_derivative(f.as_standard_layout().into_owned().into_dyn(), axis, order);
        d.into_dimensionality().expect("4D")
    }

    /// Spectral `∂^order/∂p_axis^order` of a phase-space field, treating the
    /// momentum box as periodic.
    pub fn p_derivative(&self, f: &Array4<f64>, axis: usize, order: u32) -> Array4<f64> {
        assert!(axis < 2);
        let d = self.spectral_derivative(
            f.as_standard_layout().into_owned().into_dyn(),
            axis + 2,
            order,
        );
        d.into_dimensionality().expect("4D")
    }

    /// Builds a phase-space array from `f(x, p)`.
    pub fn phase_space_fn(&self, f: impl Fn([f64; 2], [f64; 2]) -> f64 + Sync) -> Array4<f64> {
        let [n1, n2, m1, m2] = self.shape4();
        let mut out = Array4::zeros((n1, n2, m1, m2));
        out.as_slice_mut()
            .expect("fresh array")
            .par_chunks_mut(m1 * m2)
            .enumerate()
            .for_each(|(ix, block)| {
                let x = [self.x1[ix / n2], self.x2[ix % n2]];
                for (jp, v) in block.iter_mut().enumerate() {
                    *v = f(x, [self.p1[jp / m2], self.p2[jp % m2]]);
                }
            });
        out
    }

    /// Builds a position array from `f(x)`.
    pub fn position_fn(&self, f: impl Fn([f64; 2]) -> f64) -> Array2<f64> {
        Array2::from_shape_fn((self.spec.nx1, self.spec.nx2), |(i, j)| f([self.x1[i], self.x2[j]]))
    }
}

fn check_shape(expected: &[usize], found: &[usize]) -> Result<()> {
    if expected != found {
        return Err(Error::ShapeMismatch {
            expected: expected.to_vec(),
            found: found.to_vec(),
        });
    }
    Ok(())
}

/// Pauli components `(w0, w1, w2, w3)` of a matrix-valued Wigner function on
/// the phase-space grid.
#[derive(Clone, Debug, PartialEq)]
pub struct WignerField {
    comps: [Array4<f64>; 4],
}

impl WignerField {
    pub fn zeros(grid: &Grid) -> Self {
        let shape = grid.shape4();
        Self {
            comps: std::array::from_fn(|_| Array4::zeros(shape)),
        }
    }

    pub fn from_components(comps: [Array4<f64>; 4]) -> Result<Self> {
        let shape = comps[0].shape().to_vec();
        for c in &comps[1..] {
            check_shape(&shape, c.shape())?;
        }
        Ok(Self {
            comps: comps.map(|c| c.as_standard_layout().into_owned()),
        })
    }

    /// Samples `f(x, p) -> [w0, w1, w2, w3]`.
    pub fn from_fn(grid: &Grid, f: impl Fn([f64; 2], [f64; 2]) -> [f64; 4] + Sync) -> Self {
        Self {
            comps: std::array::from_fn(|k| grid.phase_space_fn(|x, p| f(x, p)[k])),
        }
    }

    pub fn charge(&self) -> &Array4<f64> {
        &self.comps[0]
    }

    /// Spin component `k ∈ {0, 1, 2}` (i.e. `w_{k+1}`).
    pub fn spin(&self, k: usize) -> &Array4<f64> {
        &self.comps[k + 1]
    }

    pub fn comps(&self) -> &[Array4<f64>; 4] {
        &self.comps
    }

    pub fn comps_mut(&mut self) -> &mut [Array4<f64>; 4] {
        &mut self.comps
    }

    pub fn into_comps(self) -> [Array4<f64>; 4] {
        self.comps
    }

    pub fn shape(&self) -> &[usize] {
        self.comps[0].shape()
    }

    pub fn is_finite(&self) -> bool {
        self.comps.iter().all(|c| c.iter().all(|v| v.is_finite()))
    }

    /// `max |a − b|` over all components.
    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        self.comps
            .iter()
            .zip(&other.comps)
            .map(|(a, b)| {
                Zip::from(a)
                    .and(b)
                    .fold(0.0f64, |m, x, y| m.max((x - y).abs()))
            })
            .fold(0.0, f64::max)
    }

    pub fn max_abs(&self) -> f64 {
        self.comps
            .iter()
            .flat_map(|c| c.iter())
            .fold(0.0f64, |m, v| m.max(v.abs()))
    }
}

/// Charge density `n0` and spin density `n⃗` on the position grid.
#[derive(Clone, Debug, PartialEq)]
pub struct SpinDensityField {
    comps: [Array2<f64>; 4],
}

impl SpinDensityField {
    pub fn zeros(grid: &Grid) -> Self {
        let shape = grid.shape2();
        Self {
            comps: std::array::from_fn(|_| Array2::zeros(shape)),
        }
    }

    pub fn uniform(grid: &Grid, n0: f64, nvec: [f64; 3]) -> Self {
        let shape = grid.shape2();
        let vals = [n0, nvec[0], nvec[1], nvec[2]];
        Self {
            comps: vals.map(|v| Array2::from_elem(shape, v)),
        }
    }

    pub fn from_components(comps: [Array2<f64>; 4]) -> Result<Self> {
        let shape = comps[0].shape().to_vec();
        for c in &comps[1..] {
            check_shape(&shape, c.shape())?;
        }
        Ok(Self {
            comps: comps.map(|c| c.as_standard_layout().into_owned()),
        })
    }

    pub fn from_fn(grid: &Grid, f: impl Fn([f64; 2]) -> [f64; 4]) -> Self {
        Self {
            comps: std::array::from_fn(|k| grid.position_fn(|x| f(x)[k])),
        }
    }

    pub fn charge(&self) -> &Array2<f64> {
        &self.comps[0]
    }

    pub fn spin(&self, k: usize) -> &Array2<f64> {
        &self.comps[k + 1]
    }

    pub fn comps(&self) -> &[Array2<f64>; 4] {
        &self.comps
    }

    pub fn comps_mut(&mut self) -> &mut [Array2<f64>; 4] {
        &mut self.comps
    }

    pub fn into_comps(self) -> [Array2<f64>; 4] {
        self.comps
    }

    pub fn shape(&self) -> &[usize] {
        self.comps[0].shape()
    }

    pub fn is_finite(&self) -> bool {
        self.comps.iter().all(|c| c.iter().all(|v| v.is_finite()))
    }

    /// `(n0, n⃗)` at grid point `(i, j)`.
    pub fn at(&self, i: usize, j: usize) -> (f64, [f64; 3]) {
        (
            self.comps[0][[i, j]],
            [self.comps[1][[i, j]], self.comps[2][[i, j]], self.comps[3][[i, j]]],
        )
    }

    pub fn total_charge(&self, grid: &Grid) -> f64 {
        grid.integrate_x(&self.comps[0])
    }

    pub fn total_spin(&self, grid: &Grid) -> [f64; 3] {
        std::array::from_fn(|k| grid.integrate_x(&self.comps[k + 1]))
    }

    /// `max |n⃗|/n0`; values above one flag non-physical points.
    pub fn max_spin_ratio(&self) -> f64 {
        let mut worst = 0.0f64;
        Zip::from(&self.comps[0])
            .and(&self.comps[1])
            .and(&self.comps[2])
            .and(&self.comps[3])
            .for_each(|n0, a, b, c| {
                let r = (a * a + b * b + c * c).sqrt();
                let ratio = if *n0 > 0.0 { r / n0 } else if r > 0.0 { f64::INFINITY } else { 0.0 };
                worst = worst.max(ratio);
            });
        worst
    }

    /// Number of grid points with `|n⃗| > n0` (or `n0 < 0`).
    pub fn physicality_violations(&self) -> usize {
        let mut count = 0;
        Zip::from(&self.comps[0])
            .and(&self.comps[1])
            .and(&self.comps[2])
            .and(&self.comps[3])
            .for_each(|n0, a, b, c| {
                if *n0 < 0.0 || (a * a + b * b + c * c).sqrt() > *n0 {
                    count += 1;
                }
            });
        count
    }

    /// Quadrature L2 norm of `self − other`, all four components together.
    pub fn l2_distance(&self, other: &Self, grid: &Grid) -> f64 {
        self.comps
            .iter()
            .zip(&other.comps)
            .map(|(a, b)| grid.l2_norm(&(a - b)).powi(2))
            .sum::<f64>()
            .sqrt()
    }

    pub fn l2_norm(&self, grid: &Grid) -> f64 {
        self.comps.iter().map(|a| grid.l2_norm(a).powi(2)).sum::<f64>().sqrt()
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        self.comps
            .iter()
            .zip(&other.comps)
            .map(|(a, b)| Zip::from(a).and(b).fold(0.0f64, |m, x, y| m.max((x - y).abs())))
            .fold(0.0, f64::max)
    }

    pub fn max_abs(&self) -> f64 {
        self.comps
            .iter()
            .flat_map(|c| c.iter())
            .fold(0.0f64, |m, v| m.max(v.abs()))
    }
}

/// `⟨weight · w_k⟩` for each component, reducing each momentum block in order.
fn weighted_moments(w: &WignerField, grid: &Grid, weight: &Array2<f64>) -> Result<SpinDensityField> {
    for c in w.comps() {
        grid.check_shape4(c)?;
    }
    let [n1, n2, m1, m2] = grid.shape4();
    let cell = grid.p_cell();
    let weight = weight.as_slice().expect("standard layout");
    let comps = w.comps().each_ref().map(|c| {
        let data = c.as_slice().expect("standard layout");
        let sums: Vec<f64> = data
            .par_chunks(m1 * m2)
            .map(|block| block.iter().zip(weight).map(|(v, q)| v * q).sum::<f64>() * cell)
            .collect();
        Array2::from_shape_vec((n1, n2), sums).expect("one sum per position")
    });
    SpinDensityField::from_components(comps)
}

/// Densities `n_k(x) = Σ_p w_k(x, p) Δp1 Δp2`.
pub fn moments(w: &WignerField, grid: &Grid) -> Result<SpinDensityField> {
    let ones = Array2::ones((grid.spec.np1, grid.spec.np2));
    weighted_moments(w, grid, &ones)
}

/// First momentum moments `⟨p_j w_k⟩`, `axis ∈ {0, 1}`.
pub fn momentum_moment(w: &WignerField, grid: &Grid, axis: usize) -> Result<SpinDensityField> {
    if axis > 1 {
        return Err(Error::invalid(format!("momentum axis must be 0 or 1, got {axis}")));
    }
    let weight = Array2::from_shape_fn((grid.spec.np1, grid.spec.np2), |(i, j)| {
        if axis == 0 {
            grid.p1[i]
        } else {
            grid.p2[j]
        }
    });
    weighted_moments(w, grid, &weight)
}
