//! Truncated univariate Taylor series (forward-mode jets).
//!
//! `Taylor` stores `c[k] = f^(k)(s) / k!` for `k < len`. Arithmetic
//! propagates the truncated series exactly, so evaluating an analytic
//! expression on `Taylor::variable(s, len)` yields its derivatives at `s`
//! without finite differences.

use std::ops::{Add, AddAssign, Div, Mul, MulAssign, Neg, Sub, SubAssign};

/// Maximum number of stored coefficients.
pub const MAX_LEN: usize = 32;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Taylor {
    c: [f64; MAX_LEN],
    len: usize,
}

impl Taylor {
    pub fn constant(v: f64, len: usize) -> Self {
        assert!((1..=MAX_LEN).contains(&len), "taylor length {len} out of range");
        let mut c = [0.0; MAX_LEN];
        c[0] = v;
        Taylor { c, len }
    }

    /// The identity function expanded at `s`.
    pub fn variable(s: f64, len: usize) -> Self {
        let mut t = Self::constant(s, len);
        if len > 1 {
            t.c[1] = 1.0;
        }
        t
    }

    pub fn from_coeffs(coeffs: &[f64]) -> Self {
        let mut t = Self::constant(0.0, coeffs.len());
        t.c[..coeffs.len()].copy_from_slice(coeffs);
        t
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn value(&self) -> f64 {
        self.c[0]
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.c[..self.len]
    }

    pub fn coeff(&self, k: usize) -> f64 {
        if k < self.len {
            self.c[k]
        } else {
            0.0
        }
    }

    /// `f^(k)(s)`.
    pub fn derivative(&self, k: usize) -> f64 {
        self.coeff(k) * factorial(k)
    }

    /// Evaluates the truncated polynomial at `s + h`.
    pub fn eval_offset(&self, h: f64) -> f64 {
        self.coeffs().iter().rev().fold(0.0, |acc, &c| acc * h + c)
    }

    fn zeroed(len: usize) -> Self {
        Taylor { c: [0.0; MAX_LEN], len }
    }

    pub fn scale(mut self, k: f64) -> Self {
        for c in &mut self.c[..self.len] {
            *c *= k;
        }
        self
    }

    pub fn add_scalar(mut self, k: f64) -> Self {
        self.c[0] += k;
        self
    }

    pub fn recip(&self) -> Self {
        let a0 = self.c[0];
        let mut b = Self::zeroed(self.len);
        b.c[0] = 1.0 / a0;
        for k in 1..self.len {
            let mut acc = 0.0;
            for j in 1..=k {
                acc += self.c[j] * b.c[k - j];
            }
            b.c[k] = -acc / a0;
        }
        b
    }

    pub fn ln(&self) -> Self {
        let a0 = self.c[0];
        let mut l = Self::zeroed(self.len);
        l.c[0] = a0.ln();
        for k in 1..self.len {
            let mut acc = 0.0;
            for j in 1..k {
                acc += j as f64 * l.c[j] * self.c[k - j];
            }
            l.c[k] = (self.c[k] - acc / k as f64) / a0;
        }
        l
    }

    pub fn exp(&self) -> Self {
        let mut e = Self::zeroed(self.len);
        e.c[0] = self.c[0].exp();
        for k in 1..self.len {
            let mut acc = 0.0;
            for j in 1..=k {
                acc += j as f64 * self.c[j] * e.c[k - j];
            }
            e.c[k] = acc / k as f64;
        }
        e
    }

    /// Returns `(sin self, cos self)`.
    pub fn sin_cos(&self) -> (Self, Self) {
        let mut s = Self::zeroed(self.len);
        let mut c = Self::zeroed(self.len);
        s.c[0] = self.c[0].sin();
        c.c[0] = self.c[0].cos();
        for k in 1..self.len {
            let (mut as_, mut ac) = (0.0, 0.0);
            for j in 1..=k {
                let ja = j as f64 * self.c[j];
                as_ += ja * c.c[k - j];
                ac += ja * s.c[k - j];
            }
            s.c[k] = as_ / k as f64;
            c.c[k] = -ac / k as f64;
        }
        (s, c)
    }

    pub fn sin(&self) -> Self {
        self.sin_cos().0
    }

    pub fn cos(&self) -> Self {
        self.sin_cos().1
    }

    pub fn powi(&self, n: u32) -> Self {
        let mut out = Self::constant(1.0, self.len);
        let mut base = *self;
        let mut e = n;
        while e > 0 {
            if e & 1 == 1 {
                out = out * base;
            }
            base = base * base;
            e >>= 1;
        }
        out
    }
}

pub fn factorial(k: usize) -> f64 {
    (1..=k).fold(1.0, |acc, i| acc * i as f64)
}

impl Add for Taylor {
    type Output = Taylor;
    fn add(self, rhs: Taylor) -> Taylor {
        let len = self.len.min(rhs.len);
        let mut out = Taylor::zeroed(len);
        for k in 0..len {
            out.c[k] = self.c[k] + rhs.c[k];
        }
        out
    }
}

impl Sub for Taylor {
    type Output = Taylor;
    fn sub(self, rhs: Taylor) -> Taylor {
        let len = self.len.min(rhs.len);
        let mut out = Taylor::zeroed(len);
        for k in 0..len {
            out.c[k] = self.c[k] - rhs.c[k];
        }
        out
    }
}

impl Mul for Taylor {
    type Output = Taylor;
    fn mul(self, rhs: Taylor) -> Taylor {
        let len = self.len.min(rhs.len);
        let mut out = Taylor::zeroed(len);
        for k in 0..len {
            let mut acc = 0.0;
            for j in 0..=k {
                acc += self.c[j] * rhs.c[k - j];
            }
            out.c[k] = acc;
        }
        out
    }
}

impl Div for Taylor {
    type Output = Taylor;
    fn div(self, rhs: Taylor) -> Taylor {
        self * rhs.recip()
    }
}

impl Neg for Taylor {
    type Output = Taylor;
    fn neg(self) -> Taylor {
        self.scale(-1.0)
    }
}

impl Mul<f64> for Taylor {
    type Output = Taylor;
    fn mul(self, rhs: f64) -> Taylor {
        self.scale(rhs)
    }
}

impl Add<f64> for Taylor {
    type Output = Taylor;
    fn add(self, rhs: f64) -> Taylor {
        self.add_scalar(rhs)
    }
}

impl Sub<f64> for Taylor {
    type Output = Taylor;
    fn sub(self, rhs: f64) -> Taylor {
        self.add_scalar(-rhs)
    }
}

impl AddAssign for Taylor {
    fn add_assign(&mut self, rhs: Taylor) {
        *self = *self + rhs;
    }
}

impl SubAssign for Taylor {
    fn sub_assign(&mut self, rhs: Taylor) {
        *self = *self - rhs;
    }
}

impl MulAssign for Taylor {
    fn mul_assign(&mut self, rhs: Taylor) {
        *self = *self * rhs;
    }
}
