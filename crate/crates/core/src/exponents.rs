//! Closed-form exponent tables for the universal maximal and oscillatory estimates.

use serde::Serialize;

use crate::error::{invalid, Result};

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ExponentTable {
    pub n: usize,
    pub p_crit: f64,
    pub q_crit: f64,
    pub d_crit: usize,
    pub m_crit: usize,
}

pub fn exponent_table(n: usize) -> Result<ExponentTable> {
    if n < 2 {
        return Err(invalid(format!("exponent tables need n >= 2, got {n}")));
    }
    let nf = n as f64;
    let d_crit = if n % 2 == 1 { (n + 1) / 2 } else { (n + 2) / 2 };
    Ok(ExponentTable {
        n,
        p_crit: (nf + 1.0) / 2.0,
        q_crit: 2.0 * (nf + 1.0) / (nf - 1.0),
        d_crit,
        m_crit: n - d_crit,
    })
}

/// Hölder conjugate `p / (p - 1)`, with `1' = ∞` and `∞' = 1`.
pub fn conjugate(p: f64) -> f64 {
    if p == 1.0 {
        f64::INFINITY
    } else if p.is_infinite() {
        1.0
    } else {
        p / (p - 1.0)
    }
}

impl ExponentTable {
    fn nf(&self) -> f64 {
        self.n as f64
    }

    pub fn beta(&self, p: f64) -> f64 {
        if p <= self.p_crit {
            self.nf() / p - 1.0
        } else {
            (self.nf() - 1.0) / (2.0 * p)
        }
    }

    pub fn s(&self, p: f64) -> f64 {
        if p <= self.p_crit {
            (self.nf() - 1.0) * conjugate(p)
        } else {
            2.0 * p
        }
    }

    pub fn alpha_h(&self, q: f64) -> f64 {
        if q <= self.q_crit {
            0.5 - (self.nf() + 1.0) / 2.0 * (0.5 - 1.0 / q)
        } else {
            0.0
        }
    }

    pub fn alpha_ls(&self, q: f64) -> f64 {
        self.alpha_h(q) + (self.nf() - 1.0) * (0.5 - 1.0 / q)
    }
}
