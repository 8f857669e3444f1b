//! Pseudo-differential operators on phase space.
//!
//! `Θ_ε[V]` and `Θ⁺_ε[f]` act on the momentum dependence of a symbol. With
//! `η` dual to `p` they are multiplications in the `p`-transform domain:
//!
//! ```text
//! Θ_ε[V]  : (1/iε) [V(x − εη/2) − V(x + εη/2)]
//! Θ⁺_ε[f] :        [f(x − εη/2) + f(x + εη/2)]
//! ```
//!
//! The truncated Moyal product is only used to cross-check these operators
//! and the bracket structure at small `ε`.

use ndarray::{Array2, Array4, ArrayD, Zip};
use num_complex::Complex64 as C64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::grid::potential::ShiftCombination;
use crate::grid::{Grid, PotentialField, WignerField};

/// Highest truncation order accepted by the Moyal product.
pub const MAX_MOYAL_ORDER: u32 = 3;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Parity {
    /// `Θ_ε`: odd shift combination with the `1/iε` prefactor.
    Odd,
    /// `Θ⁺_ε`: even shift combination, no prefactor.
    Even,
}

fn check_epsilon(epsilon: f64) -> Result<()> {
    if !(epsilon > 0.0 && epsilon.is_finite()) {
        return Err(Error::invalid(format!("ε must be positive, got {epsilon}")));
    }
    Ok(())
}

/// Θ or Θ⁺ for a fixed potential, `ε` and grid, with the transform-domain
/// multiplier precomputed.
#[derive(Clone, Debug)]
pub struct ThetaOperator {
    grid: Grid,
    parity: Parity,
    epsilon: f64,
    /// Real multiplier `m`; the operator multiplies by `−i m` (odd) or `m`
    /// (even). Each momentum block is stored η2-major. `None` is the zero
    /// operator.
    multiplier: Option<Array4<f64>>,
}

impl ThetaOperator {
    /// `Θ_ε[V]`.
    pub fn odd(grid: &Grid, potential: &PotentialField, epsilon: f64) -> Result<Self> {
        Self::new(grid, potential, epsilon, Parity::Odd)
    }

    /// `Θ⁺_ε[f]`.
    pub fn even(grid: &Grid, f: &PotentialField, epsilon: f64) -> Result<Self> {
        Self::new(grid, f, epsilon, Parity::Even)
    }

    pub fn new(grid: &Grid, potential: &PotentialField, epsilon: f64, parity: Parity) -> Result<Self> {
        check_epsilon(epsilon)?;
        if parity == Parity::Odd && potential.is_constant() {
            return Ok(Self { grid: grid.clone(), parity, epsilon, multiplier: None });
        }
        let combination = match parity {
            Parity::Odd => ShiftCombination::Difference,
            Parity::Even => ShiftCombination::Sum,
        };
        let m = potential.shifted_combination(grid, epsilon, combination)?;
        Ok(Self::from_shifts(grid, epsilon, parity, m))
    }

    /// `(Θ_ε[f], Θ⁺_ε[f])` from a single pass over the shifts.
    pub fn pair(grid: &Grid, f: &PotentialField, epsilon: f64) -> Result<(Self, Self)> {
        check_epsilon(epsilon)?;
        let (difference, sum) = f.shifted_pair(grid, epsilon)?;
        let odd = if f.is_constant() {
            Self { grid: grid.clone(), parity: Parity::Odd, epsilon, multiplier: None }
        } else {
            Self::from_shifts(grid, epsilon, Parity::Odd, difference)
        };
        Ok((odd, Self::from_shifts(grid, epsilon, Parity::Even, sum)))
    }

    fn from_shifts(grid: &Grid, epsilon: f64, parity: Parity, mut m: Array4<f64>) -> Self {
        let [_, _, m1, m2] = grid.shape4();
        let (q1, q2) = (m1 / 2, m2 / 2);
        let inv = 1.0 / epsilon;
        m.as_slice_mut()
            .expect("fresh array")
            .par_chunks_mut(m1 * m2)
            .for_each(|block| match parity {
                Parity::Odd => {
                    for (je, v) in block.iter_mut().enumerate() {
                        // the Nyquist rows have no partner at −η
                        *v = if je / m2 == q1 || je % m2 == q2 { 0.0 } else { *v * inv };
                    }
                }
                Parity::Even => {
                    // Nyquist rows are averaged with their mirror so the
                    // operator maps real fields to real fields
                    for j in 1..q2 {
                        let (a, b) = (q1 * m2 + j, q1 * m2 + m2 - j);
                        let avg = 0.5 * (block[a] + block[b]);
                        block[a] = avg;
                        block[b] = avg;
                    }
                    for i in 1..q1 {
                        let (a, b) = (i * m2 + q2, (m1 - i) * m2 + q2);
                        let avg = 0.5 * (block[a] + block[b]);
                        block[a] = avg;
                        block[b] = avg;
                    }
                }
            });
        grid.to_spectral_layout(&mut m);
        Self { grid: grid.clone(), parity, epsilon, multiplier: Some(m) }
    }

    pub fn parity(&self) -> Parity {
        self.parity
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn is_zero(&self) -> bool {
        self.multiplier.is_none()
    }

    fn factor(&self, m: f64) -> C64 {
        match self.parity {
            Parity::Odd => C64::new(0.0, -m),
            Parity::Even => C64::new(m, 0.0),
        }
    }

    /// `(Θ a, Θ b)`. Both images come from one transform of `a + i b`,
    /// since the operator is a real Fourier multiplier.
    pub fn apply_pair(&self, a: &Array4<f64>, b: &Array4<f64>) -> Result<(Array4<f64>, Array4<f64>)> {
        self.grid.check_shape4(a)?;
        self.grid.check_shape4(b)?;
        let Some(m) = &self.multiplier else {
            return Ok((Array4::zeros(self.grid.shape4()), Array4::zeros(self.grid.shape4())));
        };
        let (mut ra, mut rb) = (a.as_standard_layout().into_owned(), b.as_standard_layout().into_owned());
        let m = m.as_slice().expect("standard layout");
        let block = self.grid.spec().np1 * self.grid.spec().np2;
        self.grid.momentum_filter_pair(&mut ra, &mut rb, |ix, spec| {
            for (v, &mv) in spec.iter_mut().zip(&m[ix * block..(ix + 1) * block]) {
                *v *= self.factor(mv);
            }
        });
        Ok((ra, rb))
    }

    /// `(self w, other w)` for two operators on the same grid, sharing the
    /// forward transforms of `w`.
    pub fn apply_field_with(&self, other: &ThetaOperator, w: &WignerField) -> Result<(WignerField, WignerField)> {
        if self.grid.spec() != other.grid.spec() {
            return Err(Error::invalid("operators are defined on different grids"));
        }
        let (Some(m0), Some(m1)) = (&self.multiplier, &other.multiplier) else {
            return Ok((self.apply_field(w)?, other.apply_field(w)?));
        };
        let (m0, m1) = (m0.as_slice().expect("standard layout"), m1.as_slice().expect("standard layout"));
        let block = self.grid.spec().np1 * self.grid.spec().np2;
        let filter = |which: usize, ix: usize, spec: &mut [C64]| {
            let (op, m) = if which == 0 { (self, m0) } else { (other, m1) };
            for (v, &mv) in spec.iter_mut().zip(&m[ix * block..(ix + 1) * block]) {
                *v *= op.factor(mv);
            }
        };
        let [c0, c1, c2, c3] = w.comps();
        for c in w.comps() {
            self.grid.check_shape4(c)?;
        }
        let [(s0, s1), (o0, o1)] = self.grid.momentum_filter_two(c0, c1, filter);
        let [(s2, s3), (o2, o3)] = self.grid.momentum_filter_two(c2, c3, filter);
        Ok((WignerField::from_components([s0, s1, s2, s3])?, WignerField::from_components([o0, o1, o2, o3])?))
    }

    pub fn apply(&self, a: &Array4<f64>) -> Result<Array4<f64>> {
        Ok(self.apply_pair(a, &Array4::zeros(self.grid.shape4()))?.0)
    }

    /// Componentwise application to a Wigner field.
    pub fn apply_field(&self, w: &WignerField) -> Result<WignerField> {
        let [c0, c1, c2, c3] = w.comps();
        let (o0, o1) = self.apply_pair(c0, c1)?;
        let (o2, o3) = self.apply_pair(c2, c3)?;
        WignerField::from_components([o0, o1, o2, o3])
    }

    /// Exact flow `exp(h Θ)` of the odd operator, as a transform-domain
    /// phase.
    pub fn propagator(&self, h: f64) -> Result<ThetaPropagator> {
        if self.parity != Parity::Odd {
            return Err(Error::invalid("only Θ generates a unitary flow"));
        }
        let phase = self.multiplier.as_ref().map(|m| {
            let mut out = Array4::<C64>::zeros(m.raw_dim());
            Zip::from(&mut out)
                .and(m)
                .par_for_each(|o, &mv| *o = C64::from_polar(1.0, -h * mv));
            out
        });
        Ok(ThetaPropagator { grid: self.grid.clone(), h, phase })
    }
}

/// `exp(h Θ_ε[V])` for a fixed step `h`.
#[derive(Clone, Debug)]
pub struct ThetaPropagator {
    grid: Grid,
    h: f64,
    phase: Option<Array4<C64>>,
}

impl ThetaPropagator {
    pub fn step(&self) -> f64 {
        self.h
    }

    pub fn apply_in_place(&self, a: &mut Array4<f64>) -> Result<()> {
        let mut spare = Array4::zeros(self.grid.shape4());
        self.apply_pair_in_place(a, &mut spare)
    }

    /// Advances two components with one transform of `a + i b`.
    pub fn apply_pair_in_place(&self, a: &mut Array4<f64>, b: &mut Array4<f64>) -> Result<()> {
        self.grid.check_shape4(a)?;
        self.grid.check_shape4(b)?;
        let Some(phase) = &self.phase else {
            return Ok(());
        };
        if !(a.is_standard_layout() && b.is_standard_layout()) {
            *a = a.as_standard_layout().into_owned();
            *b = b.as_standard_layout().into_owned();
        }
        let phase = phase.as_slice().expect("standard layout");
        let block = self.grid.spec().np1 * self.grid.spec().np2;
        self.grid.momentum_filter_pair(a, b, |ix, spec| {
            for (v, p) in spec.iter_mut().zip(&phase[ix * block..(ix + 1) * block]) {
                *v *= p;
            }
        });
        Ok(())
    }
}

/// `Θ_ε[V] w`, componentwise.
pub fn theta_apply(grid: &Grid, potential: &PotentialField, w: &WignerField, epsilon: f64) -> Result<WignerField> {
    ThetaOperator::odd(grid, potential, epsilon)?.apply_field(w)
}

/// `Θ⁺_ε[f] w`, componentwise. Position-only multipliers such as Lagrange
/// multiplier components enter through [`PotentialField::tabulated`].
pub fn theta_plus_apply(grid: &Grid, f: &PotentialField, w: &WignerField, epsilon: f64) -> Result<WignerField> {
    ThetaOperator::even(grid, f, epsilon)?.apply_field(w)
}

/// One term `c(x) p1^a p2^b` of a symbol polynomial in momentum.
#[derive(Clone, Debug, PartialEq)]
pub struct Monomial {
    pub powers: [u32; 2],
    pub coeff: Array2<C64>,
}

/// A scalar phase-space symbol `a(x, p)`.
///
/// Symbols polynomial in `p` are differentiated exactly in `p`; sampled
/// symbols are differentiated spectrally in all four directions, which
/// assumes they decay at the momentum cutoff.
#[derive(Clone, Debug, PartialEq)]
pub enum SymbolField {
    Polynomial(Vec<Monomial>),
    Sampled(Array4<C64>),
}

fn falling(n: u32, k: u32) -> f64 {
    (0..k).map(|i| (n - i) as f64).product()
}

fn factorial(n: u32) -> f64 {
    (1..=n).map(f64::from).product()
}

/// Complex spectral derivative along `axis` of a 2D or 4D array.
fn spectral_derivative_c(grid: &Grid, data: ArrayD<C64>, axis: usize, order: u32) -> ArrayD<C64> {
    if order == 0 {
        return data;
    }
    let mut data = data.as_standard_layout().into_owned();
    let factors = grid.derivative_factors(data.ndim(), axis, order);
    grid.transform_in_place(&mut data, &[axis], false);
    grid.scale_axis(&mut data, axis, &factors);
    grid.transform_in_place(&mut data, &[axis], true);
    data
}

impl SymbolField {
    /// A position-only symbol.
    pub fn position(f: &Array2<f64>) -> Self {
        SymbolField::Polynomial(vec![Monomial { powers: [0, 0], coeff: f.mapv(C64::from) }])
    }

    pub fn sampled_real(a: &Array4<f64>) -> Self {
        SymbolField::Sampled(a.mapv(C64::from))
    }

    /// `p1^a p2^b` with unit coefficient.
    pub fn momentum_monomial(grid: &Grid, powers: [u32; 2]) -> Self {
        SymbolField::Polynomial(vec![Monomial { powers, coeff: Array2::from_elem(grid.shape2(), C64::from(1.0)) }])
    }

    /// `|p|²/2`.
    pub fn kinetic_energy(grid: &Grid) -> Self {
        let half = Array2::from_elem(grid.shape2(), C64::from(0.5));
        SymbolField::Polynomial(vec![
            Monomial { powers: [2, 0], coeff: half.clone() },
            Monomial { powers: [0, 2], coeff: half },
        ])
    }

    /// `∂x^dx ∂p^dp a` sampled on the grid.
    pub fn derivative(&self, grid: &Grid, dx: [u32; 2], dp: [u32; 2]) -> Result<Array4<C64>> {
        let [n1, n2, m1, m2] = grid.shape4();
        match self {
            SymbolField::Sampled(a) => {
                if a.shape() != [n1, n2, m1, m2] {
                    return Err(Error::ShapeMismatch { expected: grid.shape4().to_vec(), found: a.shape().to_vec() });
                }
                let mut d = a.clone().into_dyn();
                for (axis, order) in [(0, dx[0]), (1, dx[1]), (2, dp[0]), (3, dp[1])] {
                    d = spectral_derivative_c(grid, d, axis, order);
                }
                Ok(d.into_dimensionality().expect("4D"))
            }
            SymbolField::Polynomial(terms) => {
                let mut out = Array4::<C64>::zeros((n1, n2, m1, m2));
                for t in terms {
                    if t.coeff.shape() != [n1, n2] {
                        return Err(Error::ShapeMismatch {
                            expected: grid.shape2().to_vec(),
                            found: t.coeff.shape().to_vec(),
                        });
                    }
                    if t.powers[0] < dp[0] || t.powers[1] < dp[1] {
                        continue;
                    }
                    let scale = falling(t.powers[0], dp[0]) * falling(t.powers[1], dp[1]);
                    let e = [t.powers[0] - dp[0], t.powers[1] - dp[1]];
                    let mut c = t.coeff.clone().into_dyn();
                    for axis in 0..2 {
                        c = spectral_derivative_c(grid, c, axis, dx[axis]);
                    }
                    let poly = Array2::from_shape_fn((m1, m2), |(i, j)| {
                        scale * grid.p1()[i].powi(e[0] as i32) * grid.p2()[j].powi(e[1] as i32)
                    });
                    Zip::indexed(&mut out).par_for_each(|(i, j, a, b), v| {
                        *v += c[[i, j]] * poly[[a, b]];
                    });
                }
                Ok(out)
            }
        }
    }

    pub fn values(&self, grid: &Grid) -> Result<Array4<C64>> {
        self.derivative(grid, [0, 0], [0, 0])
    }
}

/// `a #_k b` for a single order `k`.
pub fn moyal_term(grid: &Grid, a: &SymbolField, b: &SymbolField, k: u32) -> Result<Array4<C64>> {
    let mut acc = Array4::<C64>::zeros(grid.shape4());
    // multi-indices α = (a1, a2), β = (b1, b2) with |α| + |β| = k
    for a1 in 0..=k {
        for a2 in 0..=k - a1 {
            for b1 in 0..=k - a1 - a2 {
                let b2 = k - a1 - a2 - b1;
                let alpha = [a1, a2];
                let beta = [b1, b2];
                let sign = if (a1 + a2) % 2 == 0 { 1.0 } else { -1.0 };
                let weight = sign / (factorial(a1) * factorial(a2) * factorial(b1) * factorial(b2));
                let da = a.derivative(grid, alpha, beta)?;
                let db = b.derivative(grid, beta, alpha)?;
                Zip::from(&mut acc).and(&da).and(&db).par_for_each(|s, x, y| *s += x * y * weight);
            }
        }
    }
    let prefactor = C64::new(0.0, 2.0).powu(k).inv();
    acc.mapv_inplace(|v| v * prefactor);
    Ok(acc)
}

/// `Σ_{k ≤ K} ε^k a #_k b`.
pub fn moyal_product_truncated(
    grid: &Grid,
    a: &SymbolField,
    b: &SymbolField,
    order: u32,
    epsilon: f64,
) -> Result<SymbolField> {
    if order > MAX_MOYAL_ORDER {
        return Err(Error::invalid(format!("Moyal order {order} exceeds {MAX_MOYAL_ORDER}")));
    }
    let mut total = Array4::<C64>::zeros(grid.shape4());
    for k in 0..=order {
        let term = moyal_term(grid, a, b, k)?;
        let scale = epsilon.powi(k as i32);
        Zip::from(&mut total).and(&term).par_for_each(|t, v| *t += v * scale);
    }
    Ok(SymbolField::Sampled(total))
}

/// `a#b − b#a`, truncated at order `K`.
pub fn moyal_bracket_truncated(
    grid: &Grid,
    a: &SymbolField,
    b: &SymbolField,
    order: u32,
    epsilon: f64,
) -> Result<SymbolField> {
    let SymbolField::Sampled(ab) = moyal_product_truncated(grid, a, b, order, epsilon)? else {
        unreachable!("products are sampled")
    };
    let SymbolField::Sampled(ba) = moyal_product_truncated(grid, b, a, order, epsilon)? else {
        unreachable!("products are sampled")
    };
    Ok(SymbolField::Sampled(ab - ba))
}

/// `∂x a · ∂p b − ∂p a · ∂x b`.
pub fn poisson_bracket(grid: &Grid, a: &SymbolField, b: &SymbolField) -> Result<Array4<C64>> {
    let mut out = Array4::<C64>::zeros(grid.shape4());
    for j in 0..2 {
        let mut e = [0, 0];
        e[j] = 1;
        let ax = a.derivative(grid, e, [0, 0])?;
        let bp = b.derivative(grid, [0, 0], e)?;
        let ap = a.derivative(grid, [0, 0], e)?;
        let bx = b.derivative(grid, e, [0, 0])?;
        Zip::from(&mut out)
            .and(&ax)
            .and(&bp)
            .and(&ap)
            .and(&bx)
            .par_for_each(|o, ax, bp, ap, bx| *o += ax * bp - ap * bx);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{moments, momentum_moment, FourierMode, GridSpec, PotentialKind};
    use std::f64::consts::PI;

    fn grid(n: usize, m: usize, pmax: f64) -> Grid {
        Grid::new(GridSpec { nx1: n, nx2: n, np1: m, np2: m, pmax, ..GridSpec::default() }).unwrap()
    }

    fn bump(x: [f64; 2], p: [f64; 2]) -> f64 {
        let m = (-(p[0] * p[0] + p[1] * p[1]) / 2.0).exp() / (2.0 * PI);
        m * (1.0 + 0.3 * x[0].cos() + 0.2 * (x[1] - 0.4).sin()) * (1.0 + 0.25 * p[0] - 0.1 * p[0] * p[1])
    }

    fn fourier(g: &Grid) -> PotentialField {
        PotentialField::new(
            g,
            PotentialKind::Fourier {
                modes: vec![
                    FourierMode { m: [1, 0], amplitude: 0.8, phase: 0.2 },
                    FourierMode { m: [1, 2], amplitude: -0.3, phase: 1.0 },
                ],
            },
        )
        .unwrap()
    }

    fn max_abs(a: &Array4<f64>) -> f64 {
        a.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    #[test]
    fn rejects_nonpositive_epsilon() {
        let g = grid(8, 16, 6.0);
        let v = PotentialField::zero(&g);
        assert!(ThetaOperator::odd(&g, &v, 0.0).is_err());
        assert!(ThetaOperator::even(&g, &v, -1.0).is_err());
        assert!(ThetaOperator::odd(&g, &v, f64::NAN).is_err());
    }

    #[test]
    fn constant_potential_gives_zero_and_twice_identity() {
        let g = grid(8, 16, 6.0);
        let v = PotentialField::new(&g, PotentialKind::Constant { value: 1.7 }).unwrap();
        let a = g.phase_space_fn(bump);
        assert_eq!(max_abs(&ThetaOperator::odd(&g, &v, 0.3).unwrap().apply(&a).unwrap()), 0.0);
        let plus = ThetaOperator::even(&g, &v, 0.3).unwrap().apply(&a).unwrap();
        let diff = &plus - &(&a * 3.4);
        assert!(max_abs(&diff) < 1e-13);
    }

    #[test]
    fn linear_potential_is_exact_force_term() {
        let g = grid(8, 32, 7.0);
        let e = [0.7, -1.3];
        let v = PotentialField::new(&g, PotentialKind::Linear { field: e }).unwrap();
        let a = g.phase_space_fn(bump);
        let expected = &g.p_derivative(&a, 0, 1) * e[0] + &g.p_derivative(&a, 1, 1) * e[1];
        for eps in [0.05, 0.5, 2.0] {
            let got = ThetaOperator::odd(&g, &v, eps).unwrap().apply(&a).unwrap();
            assert!(max_abs(&(&got - &expected)) < 1e-11 * max_abs(&expected), "ε = {eps}");
        }
    }

    #[test]
    fn theta_moment_identities() {
        let g = grid(16, 64, 7.0);
        let v = fourier(&g);
        let w = WignerField::from_fn(&g, |x, p| {
            let b = bump(x, p);
            [b, 0.5 * b, -0.2 * b, 0.1 * b]
        });
        let n = moments(&w, &g).unwrap();
        let grad = v.gradient(&g).unwrap();
        let tw = theta_apply(&g, &v, &w, 0.1).unwrap();
        assert!(moments(&tw, &g).unwrap().max_abs() < 1e-12);
        for j in 0..2 {
            let m = momentum_moment(&tw, &g, j).unwrap();
            for k in 0..4 {
                let expected = -&grad[j] * n.comps()[k].clone();
                let err = (&m.comps()[k] - &expected).iter().fold(0.0f64, |a, v| a.max(v.abs()));
                assert!(err < 1e-9, "j={j} k={k} err={err}");
            }
        }
        let plus = theta_plus_apply(&g, &v, &w, 0.1).unwrap();
        let pn = moments(&plus, &g).unwrap();
        for k in 0..4 {
            let expected = v.values() * 2.0 * &n.comps()[k];
            assert!((&pn.comps()[k] - &expected).iter().all(|d| d.abs() < 1e-12));
        }
    }

    #[test]
    fn theta_output_is_real_for_real_input() {
        let g = grid(8, 16, 6.0);
        let v = fourier(&g);
        let a = g.phase_space_fn(bump);
        let op = ThetaOperator::odd(&g, &v, 0.4).unwrap();
        let hat = g.forward(a.clone().into_dyn(), &[2, 3]);
        let Some(m) = &op.multiplier else { panic!() };
        let np1 = g.spec().np1;
        let mut prod = hat.clone();
        for ((i, j, r, c), v) in prod.view_mut().into_dimensionality::<ndarray::Ix4>().unwrap().indexed_iter_mut() {
            let block = m.slice(ndarray::s![i, j, .., ..]);
            let flat = block.as_slice().unwrap();
            *v *= op.factor(flat[c * np1 + r]);
        }
        g.transform_in_place(&mut prod, &[2, 3], true);
        let imag = prod.iter().fold(0.0f64, |acc, v| acc.max(v.im.abs()));
        assert!(imag < 1e-14, "imaginary residue {imag}");
    }

    #[test]
    fn paired_application_does_not_mix_components() {
        let g = grid(8, 16, 6.0);
        let v = fourier(&g);
        let a = g.phase_space_fn(bump);
        let b = g.phase_space_fn(|x, p| bump([x[1], x[0]], [p[1], -p[0]]) * (1.0 + p[1]));
        for op in [ThetaOperator::odd(&g, &v, 0.3).unwrap(), ThetaOperator::even(&g, &v, 0.3).unwrap()] {
            let (ta, tb) = op.apply_pair(&a, &b).unwrap();
            assert!(max_abs(&(&ta - &op.apply(&a).unwrap())) < 1e-13);
            assert!(max_abs(&(&tb - &op.apply(&b).unwrap())) < 1e-13);
        }
    }

    #[test]
    fn shared_transform_matches_separate_application() {
        let g = grid(8, 16, 6.0);
        let v = fourier(&g);
        let w = WignerField::from_fn(&g, |x, p| {
            let b = bump(x, p);
            [b, 0.5 * b * p[0], -b * x[1].cos(), 0.2 * b]
        });
        let (odd, even) = ThetaOperator::pair(&g, &v, 0.3).unwrap();
        let (t, e) = odd.apply_field_with(&even, &w).unwrap();
        assert!(t.max_abs_diff(&odd.apply_field(&w).unwrap()) < 1e-13);
        assert!(e.max_abs_diff(&even.apply_field(&w).unwrap()) < 1e-13);
    }

    #[test]
    fn theta_plus_converges_at_second_order() {
        let g = grid(16, 48, 7.0);
        let f = fourier(&g);
        let a = g.phase_space_fn(bump);
        let lead = &a * &f.values().clone().insert_axis(ndarray::Axis(2)).insert_axis(ndarray::Axis(3)) * 2.0;
        let errs: Vec<f64> = [0.1, 0.05, 0.025]
            .iter()
            .map(|&eps| {
                let plus = ThetaOperator::even(&g, &f, eps).unwrap().apply(&a).unwrap();
                (&plus - &lead).iter().map(|v| v * v).sum::<f64>().sqrt()
            })
            .collect();
        for pair in errs.windows(2) {
            let order = (pair[0] / pair[1]).log2();
            assert!((1.9..=2.1).contains(&order), "order {order}");
        }
    }

    #[test]
    fn propagator_matches_small_step_and_composes() {
        let g = grid(8, 32, 7.0);
        let v = fourier(&g);
        let a = g.phase_space_fn(bump);
        let op = ThetaOperator::odd(&g, &v, 0.2).unwrap();
        let mut full = a.clone();
        op.propagator(0.02).unwrap().apply_in_place(&mut full).unwrap();
        let mut halves = a.clone();
        let half = op.propagator(0.01).unwrap();
        half.apply_in_place(&mut halves).unwrap();
        half.apply_in_place(&mut halves).unwrap();
        assert!(max_abs(&(&full - &halves)) < 1e-14);
        let euler = &a + &(op.apply(&a).unwrap() * 0.02);
        assert!(max_abs(&(&full - &euler)) < 1e-3 * max_abs(&a));
        let l2 = |x: &Array4<f64>| x.iter().map(|v| v * v).sum::<f64>();
        assert!((l2(&full) / l2(&a) - 1.0).abs() < 1e-12);
        assert!(ThetaOperator::even(&g, &v, 0.2).unwrap().propagator(0.1).is_err());
    }

    #[test]
    fn moyal_order_zero_is_pointwise_product() {
        let g = grid(8, 16, 6.0);
        let a = SymbolField::sampled_real(&g.phase_space_fn(bump));
        let b = SymbolField::sampled_real(&g.phase_space_fn(|x, p| (x[0] + p[1]).sin() * (-p[0] * p[0]).exp()));
        let SymbolField::Sampled(prod) = moyal_product_truncated(&g, &a, &b, 0, 0.3).unwrap() else { panic!() };
        let direct = a.values(&g).unwrap() * b.values(&g).unwrap();
        assert_eq!(prod, direct);
        assert!(moyal_product_truncated(&g, &a, &b, 4, 0.3).is_err());
    }

    #[test]
    fn position_only_symbols_commute_at_every_order() {
        let g = grid(16, 8, 6.0);
        let f = g.position_fn(|x| x[0].sin() + 0.3 * x[1].cos());
        let h = g.position_fn(|x| (x[0] - x[1]).cos());
        let a = SymbolField::position(&f);
        let b = SymbolField::position(&h);
        let SymbolField::Sampled(prod) = moyal_product_truncated(&g, &a, &b, 3, 0.7).unwrap() else { panic!() };
        let direct = a.values(&g).unwrap() * b.values(&g).unwrap();
        assert!(prod.iter().zip(&direct).all(|(x, y)| (x - y).norm() < 1e-14));
    }

    #[test]
    fn first_order_term_against_hand_computation() {
        let g = grid(64, 8, 6.0);
        let s = 0.4;
        let gauss = |x: f64| (-(x - PI).powi(2) / (2.0 * s * s)).exp();
        let b = SymbolField::position(&g.position_fn(|x| gauss(x[0])));
        let a = SymbolField::momentum_monomial(&g, [1, 0]);
        let t1 = moyal_term(&g, &a, &b, 1).unwrap();
        for ((i, _, _, _), v) in t1.indexed_iter() {
            let x = g.x1()[i];
            let db = -(x - PI) / (s * s) * gauss(x);
            let expected = C64::new(0.0, 0.5) * (-db);
            assert!((v - expected).norm() < 1e-9);
        }
    }

    #[test]
    fn first_order_bracket_is_poisson_bracket() {
        let g = grid(16, 48, 9.0);
        let a = SymbolField::Polynomial(vec![
            Monomial { powers: [2, 0], coeff: g.position_fn(|x| 1.0 + 0.2 * x[1].sin()).mapv(C64::from) },
            Monomial { powers: [0, 1], coeff: g.position_fn(|x| x[0].cos()).mapv(C64::from) },
        ]);
        let b = SymbolField::sampled_real(&g.phase_space_fn(bump));
        let eps = 0.3;
        let SymbolField::Sampled(br) = moyal_bracket_truncated(&g, &a, &b, 1, eps).unwrap() else { panic!() };
        let pb = poisson_bracket(&g, &a, &b).unwrap();
        let scale = pb.iter().fold(0.0f64, |m, v| m.max(v.norm()));
        for (x, y) in br.iter().zip(&pb) {
            assert!((x - C64::new(0.0, eps) * y).norm() < 1e-9 * scale);
        }
    }

    #[test]
    fn bracket_antisymmetry_is_exact() {
        let g = grid(8, 16, 6.0);
        let a = SymbolField::sampled_real(&g.phase_space_fn(bump));
        let b = SymbolField::kinetic_energy(&g);
        for k in 0..=3 {
            let SymbolField::Sampled(ab) = moyal_bracket_truncated(&g, &a, &b, k, 0.2).unwrap() else { panic!() };
            let SymbolField::Sampled(ba) = moyal_bracket_truncated(&g, &b, &a, k, 0.2).unwrap() else { panic!() };
            assert_eq!(ab, -ba);
            let SymbolField::Sampled(aa) = moyal_bracket_truncated(&g, &a, &a, k, 0.2).unwrap() else { panic!() };
            assert!(aa.iter().all(|v| *v == C64::default()));
        }
    }

    #[test]
    fn kinetic_energy_commutes_with_momentum_functions() {
        let g = grid(8, 16, 6.0);
        let h0 = SymbolField::kinetic_energy(&g);
        let f = SymbolField::sampled_real(&g.phase_space_fn(|_, p| (-(p[0] * p[0] + 2.0 * p[1] * p[1])).exp()));
        for b in [&h0, &f] {
            let SymbolField::Sampled(br) = moyal_bracket_truncated(&g, &h0, b, 1, 0.5).unwrap() else { panic!() };
            assert!(br.iter().all(|v| v.norm() < 1e-14));
        }
    }

    #[test]
    fn bracket_reproduces_force_term_at_small_epsilon() {
        let g = grid(16, 48, 7.0);
        let v = fourier(&g);
        let a = g.phase_space_fn(bump);
        let errs: Vec<f64> = [0.1, 0.05]
            .iter()
            .map(|&eps| {
                let theta = ThetaOperator::odd(&g, &v, eps).unwrap().apply(&a).unwrap();
                let SymbolField::Sampled(br) = moyal_bracket_truncated(
                    &g,
                    &SymbolField::position(v.values()),
                    &SymbolField::sampled_real(&a),
                    1,
                    eps,
                )
                .unwrap() else {
                    panic!()
                };
                let scaled = br.mapv(|z| (z / C64::new(0.0, eps)).re);
                max_abs(&(&theta - &scaled))
            })
            .collect();
        let order = (errs[0] / errs[1]).log2();
        assert!(order > 1.8, "order {order}, errors {errs:?}");
    }
}
