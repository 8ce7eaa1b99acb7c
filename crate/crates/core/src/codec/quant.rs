//! Uniform symmetric quantizer with a per-matrix max-abs scale.

use crate::error::{invalid, Result};
use crate::linalg::{IQMatrix, C64};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct QuantizerSpec {
    bits_per_component: u32,
}

impl QuantizerSpec {
    pub fn new(bits_per_component: u32) -> Result<Self> {
        if !(2..=16).contains(&bits_per_component) {
            return Err(invalid(format!("{bits_per_component} bits per component outside 2..=16")));
        }
        Ok(Self { bits_per_component })
    }

    /// 15 bits per real component, 30 per complex sample.
    pub fn table1() -> Self {
        Self { bits_per_component: 15 }
    }

    pub fn bits_per_component(&self) -> u32 {
        self.bits_per_component
    }

    pub fn bits_per_sample(&self) -> u32 {
        2 * self.bits_per_component
    }

    pub fn max_code(&self) -> i32 {
        (1 << (self.bits_per_component - 1)) - 1
    }
}

/// Integer codes of one matrix, real then imaginary part per sample, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct QuantizedMatrix {
    pub rows: usize,
    pub cols: usize,
    pub spec: QuantizerSpec,
    /// Full-scale value; carried on the wire as `f32`.
    pub scale: f32,
    pub codes: Vec<i32>,
}

impl QuantizedMatrix {
    pub fn step(&self) -> f64 {
        self.scale as f64 / self.spec.max_code() as f64
    }

    pub fn component_count(&self) -> usize {
        2 * self.rows * self.cols
    }
}

/// Smallest `f32` not below `x` (for `x ≥ 0`).
fn f32_at_least(x: f64) -> f32 {
    let s = x as f32;
    if (s as f64) < x {
        s.next_up()
    } else {
        s
    }
}

pub fn quantize(m: &IQMatrix, spec: QuantizerSpec) -> Result<QuantizedMatrix> {
    m.ensure_finite()?;
    let scale = f32_at_least(m.max_abs_component());
    let max_code = spec.max_code();
    let codes = if scale == 0.0 {
        vec![0; 2 * m.data().len()]
    } else {
        let inv_step = max_code as f64 / scale as f64;
        m.data()
            .iter()
            .flat_map(|z| [z.re, z.im])
            .map(|v| ((v * inv_step).round() as i32).clamp(-max_code, max_code))
            .collect()
    };
    Ok(QuantizedMatrix {
        rows: m.rows(),
        cols: m.cols(),
        spec,
        scale,
        codes,
    })
}

pub fn dequantize(q: &QuantizedMatrix) -> IQMatrix {
    let step = q.step();
    let data: Vec<C64> = q
        .codes
        .chunks_exact(2)
        .map(|c| C64::new(c[0] as f64 * step, c[1] as f64 * step))
        .collect();
    IQMatrix::from_vec(q.rows, q.cols, data).expect("quantized shape is valid")
}
