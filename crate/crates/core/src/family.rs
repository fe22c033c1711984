//! Finite families of analytic functions of one variable, evaluated as
//! truncated power series, with Wronskian and Taylor-rank dependence tests.

use std::sync::Arc;

use nalgebra::DMatrix;

use crate::error::{invalid, Result};
use crate::linalg;
use crate::taylor::{Taylor, MAX_LEN};

/// Produces the jets of all members at `s` with `len` coefficients.
pub type JetFn = Arc<dyn Fn(f64, usize) -> Result<Vec<Taylor>> + Send + Sync>;

#[derive(Clone)]
pub struct FunctionFamily {
    labels: Vec<String>,
    jets: JetFn,
}

impl std::fmt::Debug for FunctionFamily {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("FunctionFamily").field("labels", &self.labels).finish()
    }
}

impl FunctionFamily {
    pub fn new(labels: Vec<String>, jets: JetFn) -> Self {
        FunctionFamily { labels, jets }
    }

    /// A family whose members are given as functions of the identity jet.
    pub fn from_members<F>(members: Vec<(String, F)>) -> Self
    where
        F: Fn(Taylor) -> Taylor + Send + Sync + 'static,
    {
        let (labels, fs): (Vec<String>, Vec<F>) = members.into_iter().unzip();
        FunctionFamily {
            labels,
            jets: Arc::new(move |s, len| {
                let t = Taylor::variable(s, len);
                Ok(fs.iter().map(|f| f(t)).collect())
            }),
        }
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn jets(&self, s: f64, len: usize) -> Result<Vec<Taylor>> {
        if !(1..=MAX_LEN).contains(&len) {
            return Err(invalid(format!("jet length {len} outside 1..={MAX_LEN}")));
        }
        let out = (self.jets)(s, len)?;
        debug_assert_eq!(out.len(), self.len());
        Ok(out)
    }

    pub fn values(&self, t: f64) -> Result<Vec<f64>> {
        Ok(self.jets(t, 1)?.iter().map(Taylor::value).collect())
    }

    /// `out[j][k] = g_j^(k)(s)` for `k ≤ order`.
    pub fn derivatives(&self, s: f64, order: usize) -> Result<Vec<Vec<f64>>> {
        Ok(self.jets(s, order + 1)?.iter().map(|j| (0..=order).map(|k| j.derivative(k)).collect()).collect())
    }

    /// The `(d+1) × m` matrix `b_{ij} = g_j^(i)(s) / i!`.
    pub fn taylor_matrix(&self, s: f64, d: usize) -> Result<DMatrix<f64>> {
        let jets = self.jets(s, d + 1)?;
        Ok(DMatrix::from_fn(d + 1, self.len(), |i, j| jets[j].coeff(i)))
    }

    /// Appends the members of `other`, which must accept the same jets.
    pub fn concat(&self, other: &FunctionFamily) -> FunctionFamily {
        let (a, b) = (self.jets.clone(), other.jets.clone());
        let mut labels = self.labels.clone();
        labels.extend(other.labels.iter().cloned());
        FunctionFamily {
            labels,
            jets: Arc::new(move |s, len| {
                let mut v = a(s, len)?;
                v.extend(b(s, len)?);
                Ok(v)
            }),
        }
    }

    /// The sub-family of the listed members.
    pub fn select(&self, idx: &[usize]) -> FunctionFamily {
        let jets = self.jets.clone();
        let keep = idx.to_vec();
        FunctionFamily {
            labels: idx.iter().map(|&i| self.labels[i].clone()).collect(),
            jets: Arc::new(move |s, len| {
                let v = jets(s, len)?;
                Ok(keep.iter().map(|&i| v[i]).collect())
            }),
        }
    }
}

fn derivative_matrix(fam: &FunctionFamily, t: f64) -> Result<DMatrix<f64>> {
    let m = fam.len();
    let d = fam.derivatives(t, m.saturating_sub(1))?;
    Ok(DMatrix::from_fn(m, m, |i, j| d[j][i]))
}

/// `det [g_j^(i)(t)]_{0 ≤ i < m}`.
pub fn wronskian(fam: &FunctionFamily, t: f64) -> Result<f64> {
    if fam.is_empty() {
        return Ok(1.0);
    }
    Ok(derivative_matrix(fam, t)?.determinant())
}

/// The Wronskian divided by the Hadamard bound (product of column norms),
/// a scale-free number in `[0, 1]`.
pub fn wronskian_relative(fam: &FunctionFamily, t: f64) -> Result<f64> {
    if fam.is_empty() {
        return Ok(1.0);
    }
    let w = derivative_matrix(fam, t)?;
    let bound: f64 = w.column_iter().map(|c| c.norm()).product();
    Ok(if bound > 0.0 { (w.determinant() / bound).abs() } else { 0.0 })
}

/// Numerical rank of the Taylor coefficient matrix at `s` truncated at degree `d`.
pub fn taylor_rank(fam: &FunctionFamily, s: f64, d: usize, tol: f64) -> Result<usize> {
    Ok(linalg::numerical_rank(&fam.taylor_matrix(s, d)?, tol))
}

/// Largest relative gap between the jet derivatives of order `1..=order` and
/// Richardson-extrapolated central differences of the next lower order.
pub fn finite_difference_gap(fam: &FunctionFamily, s: f64, order: usize, h: f64) -> Result<f64> {
    let exact = fam.derivatives(s, order)?;
    let mut worst: f64 = 0.0;
    for k in 1..=order {
        let lower = |x: f64| -> Result<Vec<f64>> { Ok(fam.derivatives(x, k - 1)?.into_iter().map(|d| d[k - 1]).collect()) };
        let d = |h: f64| -> Result<Vec<f64>> {
            let (p, m) = (lower(s + h)?, lower(s - h)?);
            Ok(p.iter().zip(&m).map(|(a, b)| (a - b) / (2.0 * h)).collect())
        };
        let (full, half) = (d(h)?, d(h / 2.0)?);
        for j in 0..fam.len() {
            let fd = (4.0 * half[j] - full[j]) / 3.0;
            let scale = exact[j][k].abs().max(1.0);
            worst = worst.max((fd - exact[j][k]).abs() / scale);
        }
    }
    Ok(worst)
}

/// Basis functions used to assemble seeded analytic families.
pub const BASIS: [&str; 10] = ["1", "t", "t^2", "t^3", "sin t", "cos t", "exp t", "exp(-t)", "sin 2t", "1/(2-t)"];

pub fn basis_jet(k: usize, t: Taylor) -> Taylor {
    match k {
        0 => Taylor::constant(1.0, t.len()),
        1 => t,
        2 => t * t,
        3 => t * t * t,
        4 => t.sin(),
        5 => t.cos(),
        6 => t.exp(),
        7 => (-t).exp(),
        8 => (t * 2.0).sin(),
        9 => (-t).add_scalar(2.0).recip(),
        _ => panic!("basis index {k} out of range"),
    }
}

/// A seeded family of `m` random combinations of basis functions. When
/// `dependent` is set the combinations draw on only `m − 1` basis functions,
/// so the members are linearly dependent.
pub fn seeded_family(seed: u64, m: usize, dependent: bool) -> FunctionFamily {
    use rand::seq::SliceRandom;
    use rand::Rng;
    let mut rng = crate::sampling::rng(seed);
    let mut idx: Vec<usize> = (0..BASIS.len()).collect();
    idx.shuffle(&mut rng);
    let k = if dependent { m - 1 } else { m };
    let chosen: Vec<usize> = idx[..k].to_vec();
    let mix: Vec<Vec<f64>> = loop {
        let mix: Vec<Vec<f64>> = (0..m).map(|_| (0..k).map(|_| rng.random_range(-1.0..1.0)).collect()).collect();
        let rank = linalg::numerical_rank(&DMatrix::from_fn(m, k, |i, j| mix[i][j]), 1e-3);
        if rank == k {
            break mix;
        }
    };
    let labels = (0..m).map(|i| format!("g{i}")).collect();
    FunctionFamily::new(
        labels,
        Arc::new(move |s, len| {
            let t = Taylor::variable(s, len);
            let basis: Vec<Taylor> = chosen.iter().map(|&b| basis_jet(b, t)).collect();
            Ok(mix
                .iter()
                .map(|row| {
                    row.iter().zip(&basis).fold(Taylor::constant(0.0, len), |acc, (&c, b)| acc + *b * c)
                })
                .collect())
        }),
    )
}
