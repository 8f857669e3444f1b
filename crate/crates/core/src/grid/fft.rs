//! Batched 1D transforms along one axis of a C-contiguous array.

use std::collections::HashMap;
use std::sync::Arc;

use ndarray::{ArrayViewMut3, Axis};
use num_complex::Complex64 as C64;
use rayon::prelude::*;
use rustfft::{Fft, FftPlanner};

/// Columns gathered per tile when the transformed axis is strided.
const TILE: usize = 32;
/// Contiguous transforms handed to rustfft per call.
const BATCH: usize = 64;

/// Forward/inverse plans for a fixed set of lengths, shared read-only.
pub(crate) struct PlanSet {
    forward: HashMap<usize, Arc<dyn Fft<f64>>>,
    inverse: HashMap<usize, Arc<dyn Fft<f64>>>,
}

impl PlanSet {
    pub(crate) fn new(lengths: &[usize]) -> Self {
        let mut planner = FftPlanner::new();
        let mut forward = HashMap::new();
        let mut inverse = HashMap::new();
        for &n in lengths {
            forward.entry(n).or_insert_with(|| planner.plan_fft_forward(n));
            inverse.entry(n).or_insert_with(|| planner.plan_fft_inverse(n));
        }
        Self { forward, inverse }
    }

    fn plan(&self, n: usize, inverse: bool) -> &Arc<dyn Fft<f64>> {
        let map = if inverse { &self.inverse } else { &self.forward };
        map.get(&n)
            .unwrap_or_else(|| panic!("no FFT plan of length {n}"))
    }

    /// Transform `data` (shape `shape`, C order) along `axis`. The inverse is
    /// normalized by `1/n`.
    pub(crate) fn transform(&self, data: &mut [C64], shape: &[usize], axis: usize, inverse: bool) {
        let n = shape[axis];
        let outer: usize = shape[..axis].iter().product();
        let inner: usize = shape[axis + 1..].iter().product();
        debug_assert_eq!(data.len(), outer * n * inner);
        let plan = self.plan(n, inverse);

        if inner == 1 {
            data.par_chunks_mut(n * BATCH).for_each_init(
                || vec![C64::default(); plan.get_inplace_scratch_len()],
                |scratch, chunk| plan.process_with_scratch(chunk, scratch),
            );
        } else {
            let mut view = ArrayViewMut3::from_shape((outer, n, inner), data)
                .expect("contiguous buffer matches shape");
            view.axis_chunks_iter_mut(Axis(2), TILE)
                .into_par_iter()
                .for_each_init(
                    || {
                        (
                            vec![C64::default(); n * TILE],
                            vec![C64::default(); plan.get_inplace_scratch_len()],
                        )
                    },
                    |(buf, scratch), mut tile| {
                        let width = tile.len_of(Axis(2));
                        let lanes = &mut buf[..n * width];
                        for mut block in tile.outer_iter_mut() {
                            for (i, row) in block.outer_iter().enumerate() {
                                for (c, v) in row.iter().enumerate() {
                                    lanes[c * n + i] = *v;
                                }
                            }
                            plan.process_with_scratch(lanes, scratch);
                            for (i, mut row) in block.outer_iter_mut().enumerate() {
                                for (c, v) in row.iter_mut().enumerate() {
                                    *v = lanes[c * n + i];
                                }
                            }
                        }
                    },
                );
        }

        if inverse {
            let scale = 1.0 / n as f64;
            data.par_iter_mut().for_each(|v| *v *= scale);
        }
    }
}

impl PlanSet {
    /// Scratch length needed by [`PlanSet::fft2_block`].
    pub(crate) fn block_scratch_len(&self, rows: usize, cols: usize) -> usize {
        [false, true]
            .iter()
            .flat_map(|&inv| [self.plan(rows, inv), self.plan(cols, inv)])
            .map(|p| p.get_inplace_scratch_len())
            .max()
            .unwrap_or(0)
    }

    /// 2D transform of one C-ordered `rows × cols` block: a row pass, then a
    /// column pass on a transposed copy in `tile`.
    pub(crate) fn fft2_block(
        &self,
        b: &mut [C64],
        rows: usize,
        cols: usize,
        inverse: bool,
        tile: &mut [C64],
        scratch: &mut [C64],
    ) {
        if inverse {
            transpose(b, tile, rows, cols);
            self.inverse_from_transposed(tile, b, rows, cols, scratch);
        } else {
            self.forward_to_transposed(b, tile, rows, cols, scratch);
            transpose(tile, b, cols, rows);
        }
    }

    /// Forward 2D transform of the C-ordered block `b`, leaving the spectrum
    /// in `tile` in column-major order (index `c·rows + r`). `b` is clobbered.
    pub(crate) fn forward_to_transposed(
        &self,
        b: &mut [C64],
        tile: &mut [C64],
        rows: usize,
        cols: usize,
        scratch: &mut [C64],
    ) {
        self.plan(cols, false).process_with_scratch(b, scratch);
        transpose(b, tile, rows, cols);
        self.plan(rows, false).process_with_scratch(tile, scratch);
    }

    /// Normalized inverse of [`PlanSet::forward_to_transposed`]: reads the
    /// column-major spectrum in `tile` and writes the C-ordered block to `b`.
    /// `tile` is clobbered.
    pub(crate) fn inverse_from_transposed(
        &self,
        tile: &mut [C64],
        b: &mut [C64],
        rows: usize,
        cols: usize,
        scratch: &mut [C64],
    ) {
        self.plan(rows, true).process_with_scratch(tile, scratch);
        let scale = 1.0 / (rows * cols) as f64;
        tile.iter_mut().for_each(|v| *v *= scale);
        transpose(tile, b, cols, rows);
        self.plan(cols, true).process_with_scratch(b, scratch);
    }

    /// 2D transform over the last two axes of a C-contiguous buffer made of
    /// `rows × cols` blocks.
    pub(crate) fn transform_trailing_2d(&self, data: &mut [C64], rows: usize, cols: usize, inverse: bool) {
        let block = rows * cols;
        debug_assert_eq!(data.len() % block, 0);
        let scratch_len = self.block_scratch_len(rows, cols);
        data.par_chunks_mut(block).for_each_init(
            || (vec![C64::default(); block], vec![C64::default(); scratch_len]),
            |(tile, scratch), b| self.fft2_block(b, rows, cols, inverse, tile, scratch),
        );
    }
}

/// Writes the transpose of the C-ordered `rows × cols` matrix `src` into
/// `dst`, in small tiles so power-of-two strides stay cache friendly.
pub(crate) fn transpose(src: &[C64], dst: &mut [C64], rows: usize, cols: usize) {
    const T: usize = 8;
    for r0 in (0..rows).step_by(T) {
        for c0 in (0..cols).step_by(T) {
            for r in r0..(r0 + T).min(rows) {
                for c in c0..(c0 + T).min(cols) {
                    dst[c * rows + r] = src[r * cols + c];
                }
            }
        }
    }
}

/// Multiply every element by `factors[i]`, where `i` is its index along `axis`.
pub(crate) fn scale_along_axis(data: &mut [C64], shape: &[usize], axis: usize, factors: &[C64]) {
    let n = shape[axis];
    let inner: usize = shape[axis + 1..].iter().product();
    debug_assert_eq!(factors.len(), n);
    data.par_chunks_mut(n * inner).for_each(|block| {
        for (i, row) in block.chunks_mut(inner).enumerate() {
            let f = factors[i];
            row.iter_mut().for_each(|v| *v *= f);
        }
    });
}

/// Angular wavenumbers of an `n`-point periodic grid of length `period`, in
/// FFT order. The Nyquist entry is kept.
pub(crate) fn wavenumbers(n: usize, period: f64) -> Vec<f64> {
    let base = 2.0 * std::f64::consts::PI / period;
    (0..n)
        .map(|m| {
            let signed = if m < n / 2 { m as i64 } else { m as i64 - n as i64 };
            base * signed as f64
        })
        .collect()
}

/// Index of the Nyquist mode for even `n`.
pub(crate) fn nyquist(n: usize) -> usize {
    n / 2
}
