//! Sparse multivariate polynomials and dense univariate polynomials.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::taylor::Taylor;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Term {
    pub exps: Vec<u32>,
    pub coef: f64,
}

/// A polynomial in `vars` real variables, stored as a list of monomials.
///
/// The JSON form is `{"vars": n, "terms": [{"exps": [..], "coef": f}]}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MultiPoly {
    pub vars: usize,
    pub terms: Vec<Term>,
}

impl MultiPoly {
    pub fn new(vars: usize, terms: Vec<(Vec<u32>, f64)>) -> Result<Self> {
        let p = MultiPoly {
            vars,
            terms: terms.into_iter().map(|(exps, coef)| Term { exps, coef }).collect(),
        };
        p.validate()?;
        Ok(p.simplified())
    }

    pub fn zero(vars: usize) -> Self {
        MultiPoly { vars, terms: Vec::new() }
    }

    /// The coordinate function `x_i`.
    pub fn var(vars: usize, i: usize) -> Self {
        let mut exps = vec![0; vars];
        exps[i] = 1;
        MultiPoly { vars, terms: vec![Term { exps, coef: 1.0 }] }
    }

    pub fn constant(vars: usize, c: f64) -> Self {
        MultiPoly { vars, terms: vec![Term { exps: vec![0; vars], coef: c }] }.simplified()
    }

    pub fn validate(&self) -> Result<()> {
        for t in &self.terms {
            if t.exps.len() != self.vars {
                return Err(invalid(format!(
                    "term has {} exponents but polynomial has {} variables",
                    t.exps.len(),
                    self.vars
                )));
            }
            if !t.coef.is_finite() {
                return Err(invalid("non-finite polynomial coefficient"));
            }
        }
        Ok(())
    }

    /// Merges equal monomials, drops zeros and sorts terms.
    pub fn simplified(mut self) -> Self {
        self.terms.sort_by(|a, b| a.exps.cmp(&b.exps));
        let mut out: Vec<Term> = Vec::with_capacity(self.terms.len());
        for t in self.terms {
            match out.last_mut() {
                Some(last) if last.exps == t.exps => last.coef += t.coef,
                _ => out.push(t),
            }
        }
        out.retain(|t| t.coef != 0.0);
        self.terms = out;
        self
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn degree(&self) -> u32 {
        self.terms.iter().map(|t| t.exps.iter().sum::<u32>()).max().unwrap_or(0)
    }

    pub fn degree_in(&self, i: usize) -> u32 {
        self.terms.iter().map(|t| t.exps[i]).max().unwrap_or(0)
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        debug_assert_eq!(x.len(), self.vars);
        self.terms
            .iter()
            .map(|t| {
                t.exps
                    .iter()
                    .zip(x)
                    .fold(t.coef, |acc, (&e, &xi)| acc * xi.powi(e as i32))
            })
            .sum()
    }

    pub fn eval_taylor(&self, x: &[Taylor]) -> Taylor {
        let len = x.iter().map(Taylor::len).min().unwrap_or(1);
        let mut acc = Taylor::constant(0.0, len);
        for t in &self.terms {
            let mut m = Taylor::constant(t.coef, len);
            for (&e, xi) in t.exps.iter().zip(x) {
                if e > 0 {
                    m = m * xi.powi(e);
                }
            }
            acc += m;
        }
        acc
    }

    pub fn partial(&self, i: usize) -> Self {
        let terms = self
            .terms
            .iter()
            .filter(|t| t.exps[i] > 0)
            .map(|t| {
                let mut exps = t.exps.clone();
                exps[i] -= 1;
                Term { exps, coef: t.coef * t.exps[i] as f64 }
            })
            .collect();
        MultiPoly { vars: self.vars, terms }.simplified()
    }

    pub fn gradient(&self) -> Vec<MultiPoly> {
        (0..self.vars).map(|i| self.partial(i)).collect()
    }

    pub fn scale(&self, c: f64) -> Self {
        MultiPoly {
            vars: self.vars,
            terms: self.terms.iter().map(|t| Term { exps: t.exps.clone(), coef: t.coef * c }).collect(),
        }
        .simplified()
    }

    pub fn add(&self, other: &MultiPoly) -> Self {
        assert_eq!(self.vars, other.vars);
        let mut terms = self.terms.clone();
        terms.extend(other.terms.iter().cloned());
        MultiPoly { vars: self.vars, terms }.simplified()
    }

    pub fn mul(&self, other: &MultiPoly) -> Self {
        assert_eq!(self.vars, other.vars);
        let mut terms = Vec::with_capacity(self.terms.len() * other.terms.len());
        for a in &self.terms {
            for b in &other.terms {
                let exps = a.exps.iter().zip(&b.exps).map(|(x, y)| x + y).collect();
                terms.push(Term { exps, coef: a.coef * b.coef });
            }
        }
        MultiPoly { vars: self.vars, terms }.simplified()
    }

    /// Reorders variables: variable `i` of the result is variable `perm[i]` of `self`.
    pub fn permute_vars(&self, perm: &[usize]) -> Self {
        assert_eq!(perm.len(), self.vars);
        let terms = self
            .terms
            .iter()
            .map(|t| Term { exps: perm.iter().map(|&j| t.exps[j]).collect(), coef: t.coef })
            .collect();
        MultiPoly { vars: self.vars, terms }.simplified()
    }

    /// Substitutes fixed values for every variable except `keep`, giving a
    /// univariate polynomial in that variable.
    pub fn restrict_to(&self, keep: usize, at: &[f64]) -> UniPoly {
        let mut coeffs = vec![0.0; self.degree_in(keep) as usize + 1];
        for t in &self.terms {
            let mut c = t.coef;
            for (j, &e) in t.exps.iter().enumerate() {
                if j != keep {
                    c *= at[j].powi(e as i32);
                }
            }
            coeffs[t.exps[keep] as usize] += c;
        }
        UniPoly::new(coeffs)
    }
}

/// Dense univariate polynomial with ascending coefficients.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct UniPoly {
    pub coeffs: Vec<f64>,
}

impl UniPoly {
    pub fn new(mut coeffs: Vec<f64>) -> Self {
        while coeffs.len() > 1 && *coeffs.last().unwrap() == 0.0 {
            coeffs.pop();
        }
        if coeffs.is_empty() {
            coeffs.push(0.0);
        }
        UniPoly { coeffs }
    }

    pub fn monomial(k: usize, c: f64) -> Self {
        let mut v = vec![0.0; k + 1];
        v[k] = c;
        UniPoly::new(v)
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(|&c| c == 0.0)
    }

    pub fn eval(&self, t: f64) -> f64 {
        self.coeffs.iter().rev().fold(0.0, |acc, &c| acc * t + c)
    }

    pub fn derivative(&self) -> Self {
        if self.coeffs.len() == 1 {
            return UniPoly::new(vec![0.0]);
        }
        UniPoly::new(
            self.coeffs
                .iter()
                .enumerate()
                .skip(1)
                .map(|(k, &c)| c * k as f64)
                .collect(),
        )
    }

    pub fn nth_derivative(&self, k: usize) -> Self {
        (0..k).fold(self.clone(), |p, _| p.derivative())
    }

    pub fn add_constant(&self, c: f64) -> Self {
        let mut v = self.coeffs.clone();
        v[0] += c;
        UniPoly::new(v)
    }

    /// All real roots in `[a, b]`, sorted, found by splitting the interval at
    /// the roots of the derivative and bisecting each monotone piece.
    pub fn roots_in(&self, a: f64, b: f64) -> Vec<f64> {
        if self.is_zero() || a > b {
            return Vec::new();
        }
        match self.degree() {
            0 => Vec::new(),
            1 => {
                let r = -self.coeffs[0] / self.coeffs[1];
                if (a..=b).contains(&r) {
                    vec![r]
                } else {
                    Vec::new()
                }
            }
            _ => {
                let mut knots = vec![a];
                knots.extend(self.derivative().roots_in(a, b));
                knots.push(b);
                let mut roots: Vec<f64> = Vec::new();
                for w in knots.windows(2) {
                    let (lo, hi) = (w[0], w[1]);
                    let (flo, fhi) = (self.eval(lo), self.eval(hi));
                    let r = if flo == 0.0 {
                        Some(lo)
                    } else if fhi == 0.0 {
                        Some(hi)
                    } else if flo.signum() != fhi.signum() {
                        Some(bisect(|t| self.eval(t), lo, hi, flo))
                    } else {
                        None
                    };
                    if let Some(r) = r {
                        if roots.last().is_none_or(|&last| r - last > 1e-14 * (1.0 + r.abs())) {
                            roots.push(r);
                        }
                    }
                }
                roots
            }
        }
    }

    /// Exact Lebesgue measure of `{t ∈ [a, b] : |P(t)| < σ}`.
    pub fn sublevel_measure(&self, sigma: f64, a: f64, b: f64) -> f64 {
        let mut knots = vec![a, b];
        knots.extend(self.add_constant(-sigma).roots_in(a, b));
        knots.extend(self.add_constant(sigma).roots_in(a, b));
        knots.sort_by(f64::total_cmp);
        knots
            .windows(2)
            .filter(|w| w[1] > w[0] && self.eval(0.5 * (w[0] + w[1])).abs() < sigma)
            .map(|w| w[1] - w[0])
            .sum()
    }

    /// Minimum of `|P|` over `[a, b]`.
    pub fn min_abs_on(&self, a: f64, b: f64) -> f64 {
        if !self.roots_in(a, b).is_empty() {
            return 0.0;
        }
        let mut cands = vec![a, b];
        cands.extend(self.derivative().roots_in(a, b));
        cands.iter().map(|&t| self.eval(t).abs()).fold(f64::INFINITY, f64::min)
    }
}

/// Bisection on a bracketing interval; `flo = f(lo)` must differ in sign from `f(hi)`.
pub fn bisect(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64, mut flo: f64) -> f64 {
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let fm = f(mid);
        if fm == 0.0 {
            return mid;
        }
        if fm.signum() == flo.signum() {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn json_roundtrip_and_eval() {
        let src = r#"{"vars": 2, "terms": [{"exps": [2, 0], "coef": 1.0}, {"exps": [0, 1], "coef": -3.0}]}"#;
        let p: MultiPoly = serde_json::from_str(src).unwrap();
        assert_eq!(p.eval(&[2.0, 1.0]), 1.0);
        let back: MultiPoly = serde_json::from_str(&serde_json::to_string(&p).unwrap()).unwrap();
        assert_eq!(back, p);
        assert!(serde_json::from_str::<MultiPoly>(r#"{"vars": 1, "terms": [], "x": 0}"#).is_err());
    }

    #[test]
    fn partials_and_taylor_eval() {
        let p = MultiPoly::new(2, vec![(vec![3, 1], 2.0), (vec![0, 2], 1.0)]).unwrap();
        let dx = p.partial(0);
        assert_eq!(dx.eval(&[1.0, 2.0]), 12.0);
        let s = Taylor::variable(0.5, 4);
        let y = Taylor::constant(2.0, 4);
        let v = p.eval_taylor(&[s, y]);
        assert_relative_eq!(v.value(), p.eval(&[0.5, 2.0]));
        assert_relative_eq!(v.derivative(1), dx.eval(&[0.5, 2.0]));
    }

    #[test]
    fn roots_and_sublevel_measure() {
        // (t - 0.2)(t + 0.5)(t - 0.9) = t^3 - 0.6 t^2 - 0.37 t + 0.09
        let p = UniPoly::new(vec![0.09, -0.37, -0.6, 1.0]);
        let r = p.roots_in(-1.0, 1.0);
        assert_eq!(r.len(), 3);
        for (got, want) in r.iter().zip([-0.5, 0.2, 0.9]) {
            assert!((got - want).abs() < 1e-13);
        }
        let sq = UniPoly::monomial(2, 1.0);
        assert_relative_eq!(sq.sublevel_measure(0.01, -1.0, 1.0), 0.2, epsilon = 1e-13);
        assert_eq!(UniPoly::new(vec![1.0]).sublevel_measure(0.5, -1.0, 1.0), 0.0);
        assert_relative_eq!(UniPoly::new(vec![0.0, 1.0, -3.0]).min_abs_on(0.5, 1.0), 0.25);
    }
}
