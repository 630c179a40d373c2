use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One monomial `coef * prod_k x_k^{exp_k}` over the joint strategy vector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Term {
    #[serde(rename = "coef")]
    pub coefficient: f64,
    #[serde(rename = "exp")]
    pub exponents: Vec<u32>,
}

/// Multivariate polynomial cost over the full joint variable.
///
/// Partial derivatives follow the power rule exactly, so every gradient and
/// Hessian downstream is free of differentiation error. Terms are kept in a
/// canonical order (sorted exponent vectors, merged duplicates) so equality
/// and serialization are deterministic.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct PolynomialCost {
    terms: Vec<Term>,
}

impl PolynomialCost {
    /// Build from `(coefficient, exponent vector)` pairs. All exponent
    /// vectors must share one length (the joint dimension).
    pub fn from_terms(terms: Vec<(f64, Vec<u32>)>) -> Result<Self> {
        let poly = Self::collect(terms.into_iter().map(|(c, e)| Term {
            coefficient: c,
            exponents: e,
        }))?;
        Ok(poly)
    }

    /// The zero polynomial in `num_vars` variables.
    pub fn zero(num_vars: usize) -> Self {
        let _ = num_vars;
        PolynomialCost { terms: Vec::new() }
    }

    fn collect(terms: impl Iterator<Item = Term>) -> Result<Self> {
        let mut merged: BTreeMap<Vec<u32>, f64> = BTreeMap::new();
        let mut nvars: Option<usize> = None;
        for t in terms {
            match nvars {
                None => nvars = Some(t.exponents.len()),
                Some(n) if n != t.exponents.len() => {
                    return Err(Error::DimensionMismatch(format!(
                        "exponent vector of length {} in a polynomial over {} variables",
                        t.exponents.len(),
                        n
                    )));
                }
                _ => {}
            }
            if t.coefficient != 0.0 {
                *merged.entry(t.exponents).or_insert(0.0) += t.coefficient;
            }
        }
        let terms = merged
            .into_iter()
            .filter(|&(_, c)| c != 0.0)
            .map(|(exponents, coefficient)| Term {
                coefficient,
                exponents,
            })
            .collect();
        Ok(PolynomialCost { terms })
    }

    pub fn terms(&self) -> &[Term] {
        &self.terms
    }

    /// Number of variables, if the polynomial has any term. The zero
    /// polynomial conforms to any dimension.
    pub fn num_vars(&self) -> Option<usize> {
        self.terms.first().map(|t| t.exponents.len())
    }

    pub fn conforms_to(&self, num_vars: usize) -> bool {
        self.num_vars().is_none_or(|n| n == num_vars)
    }

    /// Evaluate at `x`.
    pub fn eval(&self, x: &[f64]) -> f64 {
        self.terms
            .iter()
            .map(|t| {
                let mut v = t.coefficient;
                for (k, &e) in t.exponents.iter().enumerate() {
                    if e > 0 {
                        v *= x[k].powi(e as i32);
                    }
                }
                v
            })
            .sum()
    }

    /// Exact partial derivative with respect to variable `var` (power rule).
    pub fn partial(&self, var: usize) -> Self {
        let terms = self.terms.iter().filter_map(|t| {
            let e = *t.exponents.get(var)?;
            if e == 0 {
                return None;
            }
            let mut exps = t.exponents.clone();
            exps[var] = e - 1;
            Some(Term {
                coefficient: t.coefficient * f64::from(e),
                exponents: exps,
            })
        });
        Self::collect(terms).expect("derivative of a well-formed polynomial")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn eval_and_merge() {
        // 2*x0^2 + 3*x0*x1, with a duplicate term merged in.
        let p = PolynomialCost::from_terms(vec![
            (1.0, vec![2, 0]),
            (1.0, vec![2, 0]),
            (3.0, vec![1, 1]),
        ])
        .unwrap();
        assert_eq!(p.terms().len(), 2);
        assert_eq!(p.eval(&[2.0, 1.0]), 8.0 + 6.0);
    }

    #[test]
    fn constant_terms_at_zero_profile() {
        let p = PolynomialCost::from_terms(vec![
            (4.0, vec![0, 0]),
            (-1.5, vec![0, 0]),
            (7.0, vec![1, 2]),
        ])
        .unwrap();
        // At the origin, only constant terms survive.
        assert_eq!(p.eval(&[0.0, 0.0]), 2.5);
    }

    #[test]
    fn power_rule_is_exact() {
        // d/dx0 (x0^3 x1) = 3 x0^2 x1
        let p = PolynomialCost::from_terms(vec![(1.0, vec![3, 1])]).unwrap();
        let d = p.partial(0);
        assert_eq!(d.terms().len(), 1);
        assert_eq!(d.terms()[0].coefficient, 3.0);
        assert_eq!(d.terms()[0].exponents, vec![2, 1]);
        // Differentiating away a variable drops the term.
        assert!(p.partial(1).partial(1).terms().is_empty());
    }

    #[test]
    fn mixed_lengths_rejected() {
        let p = PolynomialCost::from_terms(vec![(1.0, vec![1, 0]), (1.0, vec![1, 0, 0])]);
        assert!(p.is_err());
    }

    #[test]
    fn serde_round_trip_matches_wire_shape() {
        let p = PolynomialCost::from_terms(vec![(0.5, vec![2, 0]), (1.0, vec![1, 1])]).unwrap();
        let json = serde_json::to_string(&p).unwrap();
        assert_eq!(json, r#"[{"coef":1.0,"exp":[1,1]},{"coef":0.5,"exp":[2,0]}]"#);
        let back: PolynomialCost = serde_json::from_str(&json).unwrap();
        assert_eq!(back, p);
    }
}
