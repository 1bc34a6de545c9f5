// SPDX-License-Identifier: Apache-2.0

use std::collections::BTreeSet;

use crate::frontend::Affine;

use super::scalarize::ScalarizedKernel;
use super::TransformError;

/// Access pattern of one input array: a box of `shape` elements whose
/// corner follows `anchor` and moves by `stride` per innermost iteration.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct WindowSpec {
    pub array: String,
    pub shape: Vec<i64>,
    pub stride: Vec<i64>,
    /// Corner of the window as a function of the loop indices.
    pub anchor: Vec<Affine>,
    /// Offsets inside the window that are actually read, per load.
    pub taps: Vec<(String, Vec<i64>)>,
    pub extents: Vec<usize>,
    pub data_width: u32,
    pub bus_width: u32,
}

impl WindowSpec {
    /// Elements reused between consecutive innermost iterations.
    pub fn overlap(&self) -> i64 {
        match (self.shape.last(), self.stride.last()) {
            (Some(w), Some(s)) => (w - s).max(0) * self.shape[..self.shape.len() - 1].iter().product::<i64>(),
            _ => 0,
        }
    }

    pub fn elements_per_word(&self) -> u32 {
        self.bus_width / self.data_width
    }

    pub fn size(&self) -> i64 {
        self.shape.iter().product()
    }

    pub fn row_major(&self, idx: &[i64]) -> i64 {
        let mut flat = 0;
        for (d, &i) in idx.iter().enumerate() {
            flat = flat * self.extents[d] as i64 + i;
        }
        flat
    }

    /// Flattened address of every element read at one iteration.
    pub fn addresses(&self, sk: &ScalarizedKernel, iteration: &[i64]) -> BTreeSet<i64> {
        let corner: Vec<i64> = self.anchor.iter().map(|a| sk.loop_spec.eval(a, iteration)).collect();
        self.taps
            .iter()
            .map(|(_, off)| {
                let idx: Vec<i64> = corner.iter().zip(off).map(|(c, o)| c + o).collect();
                self.row_major(&idx)
            })
            .collect()
    }
}

/// Derive the window of `array` from its loads.
pub fn detect_window(sk: &ScalarizedKernel, array: &str, bus_width: u32) -> Result<WindowSpec, TransformError> {
    let decl = sk
        .arrays
        .iter()
        .find(|a| a.name == array)
        .ok_or_else(|| TransformError::Config(format!("no array named '{array}'")))?;
    let loads: Vec<_> = sk.loads_of(array).collect();
    if loads.is_empty() {
        return Err(TransformError::Config(format!("array '{array}' is never read")));
    }
    let data_width = decl.element.width as u32;
    if bus_width == 0 || bus_width % 8 != 0 {
        return Err(TransformError::Config(format!(
            "bus width {bus_width} is not a positive multiple of 8"
        )));
    }
    if data_width > bus_width {
        return Err(TransformError::Config(format!(
            "element width {data_width} of '{array}' exceeds the bus width {bus_width}"
        )));
    }
    let rank = decl.extents.len();
    let mut shape = Vec::with_capacity(rank);
    let mut stride = Vec::with_capacity(rank);
    let mut anchor = Vec::with_capacity(rank);
    let mut base = Vec::with_capacity(rank);
    let inner = sk.loop_spec.innermost();
    for d in 0..rank {
        let first = &loads[0].offset[d];
        if loads.iter().any(|l| l.offset[d].coeffs != first.coeffs) {
            return Err(TransformError::NonUniformPattern { array: array.to_string() });
        }
        let lo = loads.iter().map(|l| l.offset[d].constant).min().unwrap();
        let hi = loads.iter().map(|l| l.offset[d].constant).max().unwrap();
        shape.push(hi - lo + 1);
        stride.push(inner.map_or(0, |i| i.step * first.coeff(&i.name)));
        anchor.push(Affine {
            coeffs: first.coeffs.clone(),
            constant: lo,
        });
        base.push(lo);
    }
    let taps = loads
        .iter()
        .map(|l| {
            let off = l.offset.iter().zip(&base).map(|(a, b)| a.constant - b).collect();
            (l.scalar.clone(), off)
        })
        .collect();
    Ok(WindowSpec {
        array: array.to_string(),
        shape,
        stride,
        anchor,
        taps,
        extents: decl.extents.clone(),
        data_width,
        bus_width,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frontend::{check_restrictions, inline_calls, parse};
    use crate::transforms::{fold_constants, scalar_replace, unroll, DEFAULT_UNROLL_LIMIT};

    fn window(src: &str, array: &str) -> Result<WindowSpec, TransformError> {
        let ast = inline_calls(&check_restrictions(&parse(src).unwrap()).unwrap()).unwrap();
        let ast = unroll(&fold_constants(&ast).unwrap(), &[], DEFAULT_UNROLL_LIMIT).unwrap();
        detect_window(&scalar_replace(&ast).unwrap(), array, 32)
    }

    #[test]
    fn fir_window() {
        let w = window(
            "void fir(int A[21], int C[17]) { for (int i = 0; i < 17; i++) { C[i] = A[i] + A[i+1] + A[i+2] + A[i+3] + A[i+4]; } }",
            "A",
        )
        .unwrap();
        assert_eq!((w.shape[0], w.stride[0], w.overlap()), (5, 1, 4));
        assert_eq!(w.elements_per_word(), 1);
    }

    #[test]
    fn single_element() {
        let w = window("void k(int8_t A[8], int C[8]) { for (int i = 0; i < 8; i++) C[i] = A[i]; }", "A").unwrap();
        assert_eq!((w.shape[0], w.stride[0], w.overlap()), (1, 1, 0));
        assert_eq!(w.elements_per_word(), 4);
    }

    #[test]
    fn strided_pairs() {
        let w = window(
            "void k(int A[16], int C[8]) { for (int i = 0; i < 8; i++) C[i] = A[2*i] + A[2*i+1]; }",
            "A",
        )
        .unwrap();
        assert_eq!((w.shape[0], w.stride[0], w.overlap()), (2, 2, 0));
    }

    #[test]
    fn differing_coefficients_rejected() {
        let r = window(
            "void k(int A[16], int C[8]) { for (int i = 0; i < 8; i++) C[i] = A[i] + A[2*i]; }",
            "A",
        );
        assert!(matches!(r, Err(TransformError::NonUniformPattern { .. })));
    }
}
