use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{spectral_radius, Mat};

/// Monic, stable denominator `a(q) = q^{d_a} + a_{d_a-1} q^{d_a-1} + ... + a_0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Denominator {
    /// Ascending coefficients `[a_0, ..., a_{d_a-1}, 1]`.
    coeffs: Vec<f64>,
}

impl Denominator {
    pub fn new(coeffs: Vec<f64>) -> Result<Self> {
        let Some(&lead) = coeffs.last() else {
            return Err(Error::InvalidParameter { field: "denominator", reason: "empty coefficient list".into() });
        };
        if coeffs.len() < 2 {
            return Err(Error::InvalidParameter { field: "denominator", reason: "degree must be >= 1".into() });
        }
        if lead != 1.0 {
            return Err(Error::InvalidParameter {
                field: "denominator",
                reason: format!("must be monic, leading coefficient is {lead}"),
            });
        }
        if coeffs.iter().any(|c| !c.is_finite()) {
            return Err(Error::InvalidParameter { field: "denominator", reason: "non-finite coefficient".into() });
        }
        let a = Self { coeffs };
        let modulus = a.max_root_modulus();
        if modulus >= 1.0 {
            return Err(Error::UnstableDenominator { modulus });
        }
        Ok(a)
    }

    /// `q^{degree}`: all poles at the origin, a pure delay.
    pub fn deadbeat(degree: usize) -> Self {
        let mut coeffs = vec![0.0; degree + 1];
        coeffs[degree] = 1.0;
        Self { coeffs }
    }

    /// `(q - pole)^degree` for a pole in `[0, 1)`.
    pub fn repeated_pole(pole: f64, degree: usize) -> Result<Self> {
        if !(0.0..1.0).contains(&pole) {
            return Err(Error::InvalidParameter { field: "pole", reason: format!("must lie in [0, 1), got {pole}") });
        }
        let mut coeffs = vec![1.0];
        for _ in 0..degree {
            // multiply by (q - pole)
            let mut next = vec![0.0; coeffs.len() + 1];
            for (i, c) in coeffs.iter().enumerate() {
                next[i + 1] += c;
                next[i] -= pole * c;
            }
            coeffs = next;
        }
        Self::new(coeffs)
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    /// `a(1)`, the DC value of the denominator.
    pub fn at_one(&self) -> f64 {
        self.coeffs.iter().sum()
    }

    pub fn max_root_modulus(&self) -> f64 {
        let n = self.degree();
        if self.coeffs[..n].iter().all(|&c| c == 0.0) {
            return 0.0;
        }
        // companion matrix
        let mut comp = Mat::zeros(n, n);
        for j in 0..n {
            comp[(0, j)] = -self.coeffs[n - 1 - j];
        }
        for i in 1..n {
            comp[(i, i - 1)] = 1.0;
        }
        spectral_radius(&comp)
    }

    /// Unit impulse response `l(0..=len)` of `1 / a(q)`.
    pub fn impulse_response(&self, len: usize) -> Vec<f64> {
        let d_a = self.degree();
        let mut out = vec![0.0; len + 1];
        for n in 0..=len {
            let mut v = if n == d_a { 1.0 } else { 0.0 };
            for j in 0..d_a {
                if let Some(k) = (n + j).checked_sub(d_a) {
                    v -= self.coeffs[j] * out[k];
                }
            }
            out[n] = v;
        }
        out
    }
}

/// Free-function form of [`Denominator::impulse_response`].
pub fn impulse_response(a: &Denominator, len: usize) -> Vec<f64> {
    a.impulse_response(len)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unit_delay() {
        let l = Denominator::deadbeat(1).impulse_response(5);
        assert_eq!(l, vec![0.0, 1.0, 0.0, 0.0, 0.0, 0.0]);
    }

    #[test]
    fn first_order_pole() {
        let a = Denominator::new(vec![-0.5, 1.0]).unwrap();
        let l = a.impulse_response(30);
        // oracle: scalar recursion l(k+1) = 0.5 l(k) + delta(k)
        let mut state = 0.0;
        for (k, v) in l.iter().enumerate() {
            assert!((v - state).abs() < 1e-15, "k = {k}");
            state = 0.5 * state + if k == 0 { 1.0 } else { 0.0 };
        }
        assert_eq!(l[0], 0.0);
        assert!((l[4] - 0.125).abs() < 1e-15);
    }

    #[test]
    fn eleven_step_delay() {
        let l = Denominator::deadbeat(11).impulse_response(20);
        for (k, v) in l.iter().enumerate() {
            assert_eq!(*v, if k == 11 { 1.0 } else { 0.0 });
        }
    }

    #[test]
    fn repeated_pole_coefficients() {
        let a = Denominator::repeated_pole(0.5, 2).unwrap();
        assert_eq!(a.coeffs(), &[0.25, -1.0, 1.0]);
        assert!((a.max_root_modulus() - 0.5).abs() < 1e-6);
        assert!((a.at_one() - 0.25).abs() < 1e-15);
    }

    #[test]
    fn rejects_unstable_and_non_monic() {
        match Denominator::new(vec![-1.2, 1.0]) {
            Err(Error::UnstableDenominator { modulus }) => assert!((modulus - 1.2).abs() < 1e-12),
            other => panic!("unexpected {other:?}"),
        }
        assert!(Denominator::new(vec![0.1, 2.0]).is_err());
        assert!(Denominator::repeated_pole(1.0, 3).is_err());
    }
}
