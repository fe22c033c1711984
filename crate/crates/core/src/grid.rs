//! Scalar fields on `R^n`: the [`Field`] trait and its lattice-backed
//! implementation [`GridField`].

use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

/// Default lattice cap, overridable through `CKL_CELL_BUDGET`.
pub const DEFAULT_CELL_BUDGET: u64 = 200_000_000;

pub fn cell_budget() -> u64 {
    std::env::var("CKL_CELL_BUDGET")
        .ok()
        .and_then(|s| s.trim().parse::<f64>().ok())
        .filter(|v| *v >= 1.0)
        .map(|v| v as u64)
        .unwrap_or(DEFAULT_CELL_BUDGET)
}

/// Axis-aligned box `[lo, hi]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoxN {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
}

impl BoxN {
    pub fn new(lo: Vec<f64>, hi: Vec<f64>) -> Result<Self> {
        if lo.len() != hi.len() || lo.is_empty() {
            return Err(invalid("box corners must have equal, positive length"));
        }
        if lo.iter().zip(&hi).any(|(a, b)| !(a < b)) {
            return Err(invalid("box must have lo < hi in every coordinate"));
        }
        Ok(BoxN { lo, hi })
    }

    pub fn dim(&self) -> usize {
        self.lo.len()
    }

    pub fn volume(&self) -> f64 {
        self.lo.iter().zip(&self.hi).map(|(a, b)| b - a).product()
    }

    pub fn contains(&self, p: &[f64]) -> bool {
        p.iter().zip(self.lo.iter().zip(&self.hi)).all(|(v, (a, b))| *v >= *a && *v <= *b)
    }

    pub fn contains_box(&self, other: &BoxN) -> bool {
        self.contains(&other.lo) && self.contains(&other.hi)
    }
}

/// A function on `R^n`. Maximal operators only ever call [`Field::value`];
/// norms default to the box-restricted lattice sum but analytic fields may
/// override [`Field::lp_norm`] with something exact.
pub trait Field: Sync {
    fn dim(&self) -> usize;
    fn value(&self, p: &[f64]) -> f64;

    /// `‖f‖_{L^p}`; `None` when the field cannot compute it on its own.
    fn lp_norm(&self, _p: f64) -> Option<f64> {
        None
    }
}

/// A field that is constant on a box and zero outside.
#[derive(Clone, Debug)]
pub struct ConstantField {
    pub value: f64,
    pub support: BoxN,
}

impl Field for ConstantField {
    fn dim(&self) -> usize {
        self.support.dim()
    }
    fn value(&self, p: &[f64]) -> f64 {
        if self.support.contains(p) {
            self.value
        } else {
            0.0
        }
    }
    fn lp_norm(&self, p: f64) -> Option<f64> {
        Some(if p.is_infinite() {
            self.value.abs()
        } else {
            self.value.abs() * self.support.volume().powf(1.0 / p)
        })
    }
}

/// Wraps a closure as a field.
pub struct FnField<F: Fn(&[f64]) -> f64 + Sync> {
    pub dim: usize,
    pub f: F,
}

impl<F: Fn(&[f64]) -> f64 + Sync> Field for FnField<F> {
    fn dim(&self) -> usize {
        self.dim
    }
    fn value(&self, p: &[f64]) -> f64 {
        (self.f)(p)
    }
}

/// Cell values type stored in a [`GridField`].
pub trait Cell: Copy + Default + Send + Sync + PartialOrd + 'static {
    fn to_f64(self) -> f64;
}

impl Cell for u32 {
    fn to_f64(self) -> f64 {
        self as f64
    }
}

impl Cell for f64 {
    fn to_f64(self) -> f64 {
        self
    }
}

/// Values at the centres of the cells of a uniform lattice of spacing `h`
/// covering `bbox`, stored row-major (first axis slowest).
#[derive(Clone, Debug, PartialEq)]
pub struct GridField<T: Cell> {
    pub bbox: BoxN,
    pub h: f64,
    pub shape: Vec<usize>,
    pub values: Vec<T>,
}

impl<T: Cell> GridField<T> {
    /// Allocates a zero field, enforcing the cell budget.
    pub fn zeros(bbox: BoxN, h: f64) -> Result<Self> {
        if !(h > 0.0) {
            return Err(invalid("grid spacing must be positive"));
        }
        let shape: Vec<usize> = bbox
            .lo
            .iter()
            .zip(&bbox.hi)
            .map(|(a, b)| (((b - a) / h) - 1e-9).ceil().max(1.0) as usize)
            .collect();
        let cells: u128 = shape.iter().map(|&s| s as u128).product();
        let budget = cell_budget();
        if cells > budget as u128 {
            return Err(Error::Budget { cells, budget });
        }
        Ok(GridField { bbox, h, values: vec![T::default(); cells as usize], shape })
    }

    pub fn dim(&self) -> usize {
        self.shape.len()
    }

    pub fn cell_volume(&self) -> f64 {
        self.h.powi(self.dim() as i32)
    }

    /// Row-major strides.
    pub fn strides(&self) -> Vec<usize> {
        let mut s = vec![1; self.dim()];
        for k in (0..self.dim().saturating_sub(1)).rev() {
            s[k] = s[k + 1] * self.shape[k + 1];
        }
        s
    }

    pub fn center(&self, axis: usize, i: usize) -> f64 {
        self.bbox.lo[axis] + (i as f64 + 0.5) * self.h
    }

    pub fn center_of(&self, flat: usize) -> Vec<f64> {
        let mut rem = flat;
        let mut p = vec![0.0; self.dim()];
        for k in (0..self.dim()).rev() {
            p[k] = self.center(k, rem % self.shape[k]);
            rem /= self.shape[k];
        }
        p
    }

    /// Index of the cell containing `p`, if inside the lattice.
    pub fn cell_of(&self, p: &[f64]) -> Option<usize> {
        let mut flat = 0;
        for k in 0..self.dim() {
            let f = ((p[k] - self.bbox.lo[k]) / self.h).floor();
            if f < 0.0 || f >= self.shape[k] as f64 {
                return None;
            }
            flat = flat * self.shape[k] + f as usize;
        }
        Some(flat)
    }

    pub fn get(&self, p: &[f64]) -> T {
        self.cell_of(p).map(|i| self.values[i]).unwrap_or_default()
    }

    /// `hⁿ · #{cells with value > 0}`.
    pub fn union_measure(&self) -> f64 {
        let zero = T::default();
        self.values.iter().filter(|v| **v > zero).count() as f64 * self.cell_volume()
    }

    /// `(hⁿ Σ |v|^p)^{1/p}`, or the maximum for `p = ∞`.
    pub fn lp(&self, p: f64) -> f64 {
        if p.is_infinite() {
            return self.values.iter().map(|v| v.to_f64().abs()).fold(0.0, f64::max);
        }
        let s: f64 = self.values.iter().map(|v| v.to_f64().abs().powf(p)).sum();
        (self.cell_volume() * s).powf(1.0 / p)
    }

    pub fn max_value(&self) -> f64 {
        self.lp(f64::INFINITY)
    }

    /// Fills every cell by evaluating `f` at its centre.
    pub fn fill(&mut self, f: impl Fn(&[f64]) -> T + Sync + Send) {
        let row = *self.shape.last().unwrap();
        let this = &*self;
        let centres: Vec<Vec<T>> = crate::exec::map_indexed(this.values.len() / row, |r| {
            (0..row).map(|c| f(&this.center_of(r * row + c))).collect()
        });
        self.values = centres.into_iter().flatten().collect();
    }

    /// CSV with one row per nonzero cell: centre coordinates then value.
    pub fn write_nonzero_csv(&self, w: &mut impl Write) -> Result<()> {
        let names: Vec<String> = (0..self.dim()).map(|k| format!("c{k}")).collect();
        writeln!(w, "{},value", names.join(","))?;
        let zero = T::default();
        for (i, v) in self.values.iter().enumerate() {
            if *v > zero {
                let c = self.center_of(i);
                let cs: Vec<String> = c.iter().map(|x| format!("{x:.9}")).collect();
                writeln!(w, "{},{}", cs.join(","), v.to_f64())?;
            }
        }
        Ok(())
    }
}

impl<T: Cell> Field for GridField<T> {
    fn dim(&self) -> usize {
        self.shape.len()
    }
    fn value(&self, p: &[f64]) -> f64 {
        self.get(p).to_f64()
    }
    fn lp_norm(&self, p: f64) -> Option<f64> {
        Some(self.lp(p))
    }
}

const MAGIC: &[u8; 8] = b"CKLGRID1";

impl GridField<u32> {
    /// Binary layout: magic, `n` (u64), `lo`, `hi`, `h` (f64), `shape` (u64),
    /// then row-major u32 counts, all little-endian.
    pub fn write_binary(&self, w: &mut impl Write) -> Result<()> {
        w.write_all(MAGIC)?;
        w.write_all(&(self.dim() as u64).to_le_bytes())?;
        for v in self.bbox.lo.iter().chain(&self.bbox.hi).chain(std::iter::once(&self.h)) {
            w.write_all(&v.to_le_bytes())?;
        }
        for s in &self.shape {
            w.write_all(&(*s as u64).to_le_bytes())?;
        }
        for v in &self.values {
            w.write_all(&v.to_le_bytes())?;
        }
        Ok(())
    }

    pub fn read_binary(r: &mut impl Read) -> Result<Self> {
        let mut magic = [0u8; 8];
        r.read_exact(&mut magic)?;
        if &magic != MAGIC {
            return Err(invalid("not a grid field file"));
        }
        let mut b8 = [0u8; 8];
        let mut next_u64 = |r: &mut dyn Read| -> Result<u64> {
            r.read_exact(&mut b8)?;
            Ok(u64::from_le_bytes(b8))
        };
        let n = next_u64(r)? as usize;
        if n == 0 || n > 8 {
            return Err(invalid("bad grid dimension"));
        }
        let mut floats = Vec::with_capacity(2 * n + 1);
        for _ in 0..2 * n + 1 {
            floats.push(f64::from_bits(next_u64(r)?));
        }
        let shape: Vec<usize> = (0..n).map(|_| next_u64(r).map(|v| v as usize)).collect::<Result<_>>()?;
        let cells: usize = shape.iter().product();
        let mut bytes = vec![0u8; cells * 4];
        r.read_exact(&mut bytes)?;
        let values = bytes.chunks_exact(4).map(|c| u32::from_le_bytes([c[0], c[1], c[2], c[3]])).collect();
        Ok(GridField {
            bbox: BoxN::new(floats[..n].to_vec(), floats[n..2 * n].to_vec())?,
            h: floats[2 * n],
            shape,
            values,
        })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
        self.write_binary(&mut f)?;
        f.flush()?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::read_binary(&mut std::io::BufReader::new(std::fs::File::open(path)?))
    }
}
