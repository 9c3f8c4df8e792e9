//! Exact rational arithmetic layer.
//!
//! The structure polynomial of a profile and everything derived from it
//! (derivative tables, boundary values, root-count certificates) is built
//! over arbitrary-precision rationals and only cast to f64 at the final
//! evaluation step, so the float layer inherits coefficients that are exact
//! up to one rounding each.

use num_bigint::BigInt;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};

/// Arbitrary-precision rational scalar.
pub type Rational = num_rational::BigRational;

/// Convenience constructor for small rationals.
pub fn rational(num: i64, den: i64) -> Rational {
    Rational::new(BigInt::from(num), BigInt::from(den))
}

/// k! as a big integer.
pub fn factorial(k: u32) -> BigInt {
    (1..=k).fold(BigInt::one(), |acc, i| acc * BigInt::from(i))
}

/// Binomial coefficient as a big integer.
pub fn binomial(n: u32, k: u32) -> BigInt {
    num_integer::binomial(BigInt::from(n), BigInt::from(k))
}

/// Dense univariate polynomial with rational coefficients, lowest degree
/// first. The zero polynomial is stored as a single zero coefficient.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RationalPoly {
    coeffs: Vec<Rational>,
}

impl RationalPoly {
    pub fn new(coeffs: Vec<Rational>) -> Self {
        let mut p = RationalPoly { coeffs };
        p.normalize();
        p
    }

    pub fn zero() -> Self {
        RationalPoly {
            coeffs: vec![Rational::zero()],
        }
    }

    pub fn constant(c: Rational) -> Self {
        RationalPoly { coeffs: vec![c] }
    }

    fn normalize(&mut self) {
        while self.coeffs.len() > 1 && self.coeffs.last().is_some_and(|c| c.is_zero()) {
            self.coeffs.pop();
        }
        if self.coeffs.is_empty() {
            self.coeffs.push(Rational::zero());
        }
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.len() == 1 && self.coeffs[0].is_zero()
    }

    /// Degree of the stored representation; the zero polynomial reports 0.
    pub fn degree(&self) -> usize {
        self.coeffs.len() - 1
    }

    /// Coefficient of x^k, zero beyond the stored degree.
    pub fn coeff(&self, k: usize) -> Rational {
        self.coeffs.get(k).cloned().unwrap_or_else(Rational::zero)
    }

    pub fn coeffs(&self) -> &[Rational] {
        &self.coeffs
    }

    pub fn add(&self, other: &RationalPoly) -> RationalPoly {
        let len = self.coeffs.len().max(other.coeffs.len());
        let coeffs = (0..len).map(|k| self.coeff(k) + other.coeff(k)).collect();
        RationalPoly::new(coeffs)
    }

    pub fn sub(&self, other: &RationalPoly) -> RationalPoly {
        let len = self.coeffs.len().max(other.coeffs.len());
        let coeffs = (0..len).map(|k| self.coeff(k) - other.coeff(k)).collect();
        RationalPoly::new(coeffs)
    }

    pub fn scaled(&self, c: &Rational) -> RationalPoly {
        RationalPoly::new(self.coeffs.iter().map(|a| a * c).collect())
    }

    pub fn mul(&self, other: &RationalPoly) -> RationalPoly {
        if self.is_zero() || other.is_zero() {
            return RationalPoly::zero();
        }
        let mut coeffs = vec![Rational::zero(); self.coeffs.len() + other.coeffs.len() - 1];
        for (i, a) in self.coeffs.iter().enumerate() {
            if a.is_zero() {
                continue;
            }
            for (j, b) in other.coeffs.iter().enumerate() {
                coeffs[i + j] += a * b;
            }
        }
        RationalPoly::new(coeffs)
    }

    /// Multiply by x^k.
    pub fn shifted_up(&self, k: usize) -> RationalPoly {
        if self.is_zero() {
            return RationalPoly::zero();
        }
        let mut coeffs = vec![Rational::zero(); k];
        coeffs.extend(self.coeffs.iter().cloned());
        RationalPoly::new(coeffs)
    }

    pub fn derivative(&self) -> RationalPoly {
        if self.coeffs.len() == 1 {
            return RationalPoly::zero();
        }
        let coeffs = self
            .coeffs
            .iter()
            .enumerate()
            .skip(1)
            .map(|(k, c)| c * Rational::from_integer(BigInt::from(k)))
            .collect();
        RationalPoly::new(coeffs)
    }

    /// Successive derivatives [p, p', ..., p^(deg)]; deg + 1 entries, the
    /// last one constant.
    pub fn derivative_table(&self) -> Vec<RationalPoly> {
        let mut table = vec![self.clone()];
        while table.last().unwrap().degree() > 0 {
            table.push(table.last().unwrap().derivative());
        }
        table
    }

    pub fn eval(&self, x: &Rational) -> Rational {
        let mut acc = Rational::zero();
        for c in self.coeffs.iter().rev() {
            acc = acc * x + c;
        }
        acc
    }

    /// Coefficients cast to f64, one rounding each.
    pub fn coeffs_f64(&self) -> Vec<f64> {
        self.coeffs
            .iter()
            .map(|c| c.to_f64().expect("rational coefficient out of f64 range"))
            .collect()
    }

    pub fn eval_f64(&self, x: f64) -> f64 {
        let mut acc = 0.0;
        for c in self.coeffs_f64().into_iter().rev() {
            acc = acc * x + c;
        }
        acc
    }
}

/// Evaluate a float-coefficient polynomial (lowest degree first) by Horner.
pub fn horner(coeffs: &[f64], x: f64) -> f64 {
    let mut acc = 0.0;
    for c in coeffs.iter().rev() {
        acc = acc * x + c;
    }
    acc
}

/// Bundle geometry: base dimension d, fiber rank n, Einstein constant tau of
/// the base, twisting parameter eps of the line bundle.
#[derive(Debug, Clone, PartialEq)]
pub struct Geometry {
    pub d: u32,
    pub n: u32,
    pub tau: Rational,
    pub eps: Rational,
}

impl Geometry {
    pub fn new(d: u32, n: u32, tau: Rational, eps: Rational) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidGeometry(
                "fiber rank n must be at least 1".into(),
            ));
        }
        // (d + n)! must stay representable in f64 for the float layer.
        if d > 80 || n > 80 {
            return Err(Error::InvalidGeometry(format!(
                "dimensions d = {d}, n = {n} exceed the supported range (at most 80 each)"
            )));
        }
        if eps.is_negative() {
            return Err(Error::InvalidGeometry(format!(
                "twisting parameter eps must be nonnegative, got {eps}"
            )));
        }
        Ok(Geometry { d, n, tau, eps })
    }

    /// Build from float inputs; the floats are taken at their exact binary
    /// values.
    pub fn from_f64(d: u32, n: u32, tau: f64, eps: f64) -> Result<Self> {
        let tau = Rational::from_float(tau)
            .ok_or_else(|| Error::InvalidGeometry(format!("tau must be finite, got {tau}")))?;
        let eps = Rational::from_float(eps)
            .ok_or_else(|| Error::InvalidGeometry(format!("eps must be finite, got {eps}")))?;
        Geometry::new(d, n, tau, eps)
    }

    /// lambda = tau - n * eps; its sign separates the shrinking, steady, and
    /// expanding regimes.
    pub fn lambda(&self) -> Rational {
        &self.tau - Rational::from_integer(BigInt::from(self.n)) * &self.eps
    }

    pub fn tau_f64(&self) -> f64 {
        self.tau.to_f64().expect("tau out of f64 range")
    }

    pub fn eps_f64(&self) -> f64 {
        self.eps.to_f64().expect("eps out of f64 range")
    }

    pub fn lambda_f64(&self) -> f64 {
        self.lambda().to_f64().expect("lambda out of f64 range")
    }

    /// Structure polynomial
    /// h(phi) = tau (1 + eps phi)^d phi^n - n (1 + eps phi)^(d+1) phi^(n-1).
    pub fn build_h(&self) -> RationalPoly {
        let linear = RationalPoly::new(vec![Rational::one(), self.eps.clone()]);
        let mut pow_d = RationalPoly::constant(Rational::one());
        for _ in 0..self.d {
            pow_d = pow_d.mul(&linear);
        }
        let pow_d1 = pow_d.mul(&linear);
        let n_rat = Rational::from_integer(BigInt::from(self.n));
        let first = pow_d.scaled(&self.tau).shifted_up(self.n as usize);
        let second = pow_d1.scaled(&n_rat).shifted_up(self.n as usize - 1);
        first.sub(&second)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn r(n: i64) -> Rational {
        rational(n, 1)
    }

    #[test]
    fn structure_polynomial_small_cases() {
        // d=1, n=1, tau=2, eps=1: h = (1+phi)(phi-1) = phi^2 - 1.
        let g = Geometry::new(1, 1, r(2), r(1)).unwrap();
        assert_eq!(g.build_h(), RationalPoly::new(vec![r(-1), r(0), r(1)]));

        // d=1, n=1, tau=2, eps=0: h = 2 phi - 1.
        let g = Geometry::new(1, 1, r(2), r(0)).unwrap();
        assert_eq!(g.build_h(), RationalPoly::new(vec![r(-1), r(2)]));

        // d=2, n=2, tau=3, eps=1: h = (1+phi)^2 phi (phi-2)
        //                           = phi^4 - 3 phi^2 - 2 phi.
        let g = Geometry::new(2, 2, r(3), r(1)).unwrap();
        assert_eq!(
            g.build_h(),
            RationalPoly::new(vec![r(0), r(-2), r(-3), r(0), r(1)])
        );
    }

    #[test]
    fn structure_polynomial_degree_and_leading() {
        // eps > 0 and lambda != 0: degree d + n with leading coeff eps^d lambda.
        let g = Geometry::new(3, 2, rational(5, 2), rational(1, 2)).unwrap();
        let h = g.build_h();
        assert_eq!(h.degree(), 5);
        // eps^d lambda = (1/8) * (5/2 - 1) = 3/16.
        assert_eq!(h.coeff(5), rational(3, 16));
        // Coefficient of phi^(n-1) is -n.
        assert_eq!(h.coeff(1), r(-2));
    }

    #[test]
    fn derivative_table_of_quadratic() {
        let p = RationalPoly::new(vec![r(-1), r(0), r(1)]);
        let table = p.derivative_table();
        assert_eq!(table.len(), 3);
        assert_eq!(table[1], RationalPoly::new(vec![r(0), r(2)]));
        assert_eq!(table[2], RationalPoly::constant(r(2)));
    }

    #[test]
    fn zero_polynomial_behavior() {
        let z = RationalPoly::zero();
        assert!(z.is_zero());
        assert_eq!(z.degree(), 0);
        assert_eq!(z.derivative(), RationalPoly::zero());
        assert_eq!(z.shifted_up(3), RationalPoly::zero());
        let p = RationalPoly::new(vec![r(1), r(2)]);
        assert_eq!(z.mul(&p), RationalPoly::zero());
        assert_eq!(p.sub(&p), RationalPoly::zero());
    }

    #[test]
    fn eval_matches_f64_cast() {
        let g = Geometry::new(2, 2, r(3), r(1)).unwrap();
        let h = g.build_h();
        // h(1) = (2)^2 * 1 * (-1) = -4.
        assert_eq!(h.eval(&r(1)), r(-4));
        assert_eq!(h.eval_f64(1.0), -4.0);
        // h(2) = 9 * 2 * 0 = 0.
        assert_eq!(h.eval(&r(2)), r(0));
    }

    #[test]
    fn geometry_validation() {
        assert!(matches!(
            Geometry::new(1, 0, r(1), r(0)),
            Err(Error::InvalidGeometry(_))
        ));
        assert!(matches!(
            Geometry::new(1, 1, r(1), r(-1)),
            Err(Error::InvalidGeometry(_))
        ));
        assert!(matches!(
            Geometry::from_f64(1, 1, f64::NAN, 0.0),
            Err(Error::InvalidGeometry(_))
        ));
    }

    #[test]
    fn lambda_sign_cases() {
        let shrink = Geometry::new(1, 1, r(2), r(1)).unwrap();
        assert_eq!(shrink.lambda(), r(1));
        let steady = Geometry::new(1, 2, r(2), r(1)).unwrap();
        assert_eq!(steady.lambda(), r(0));
        let expand = Geometry::new(1, 3, r(2), r(1)).unwrap();
        assert_eq!(expand.lambda(), r(-1));
    }

    #[test]
    fn factorial_and_binomial() {
        assert_eq!(factorial(0), BigInt::from(1));
        assert_eq!(factorial(5), BigInt::from(120));
        assert_eq!(binomial(6, 2), BigInt::from(15));
        assert_eq!(binomial(3, 5), BigInt::from(0));
    }
}
