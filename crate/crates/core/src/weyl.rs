//! Weyl function of a string with a Neumann right end, its continued
//! fraction and its partial-fraction (spectral) data.
//!
//! `W(z) = v(1; z) / v_x(1; z)` for the left-normalised solution `v`. With
//! lengths `l_j` and masses `m_j` it unfolds as
//!
//! ```text
//! W(z) = l_N + 1/(-z m_N + 1/(l_{N-1} + ... + 1/(-z m_1 + 1/(l_0 + 1/h))))
//!      = W_inf + sum_i a_i / (z_i - z)
//! ```

use crate::error::{Error, Result};
use crate::poly::Poly;
use crate::scalar::Scalar;
use crate::string::{
    eigenvalues, propagate, terminal_polynomials, Boundary, BoundaryConditions, DiscreteString,
};

/// Only the Neumann right end has a Weyl function here.
pub fn require_weyl_family<T: Scalar>(bc: &BoundaryConditions<T>) -> Result<()> {
    if !bc.right.is_neumann() {
        return Err(Error::UnsupportedBoundary(
            "Weyl function and inversion need a Neumann right end",
        ));
    }
    if bc.left.is_neumann() {
        return Err(Error::DegenerateBc(
            "Neumann-Neumann: zero is an eigenvalue and W(0) is a pole",
        ));
    }
    Ok(())
}

/// `B1(z) / A1(z)`.
pub fn weyl_eval<T: Scalar>(string: &DiscreteString<T>, left: &Boundary<T>, z: &T) -> Result<T> {
    let sol = propagate(string, left, &-z.clone());
    if sol.a1.is_zero() {
        return Err(Error::PoleAtZ);
    }
    Ok(sol.b1 / sol.a1)
}

/// `W(0)`, fixed by the left boundary alone: `(h + 1)/h`, or `1` for a
/// Dirichlet end.
pub fn weyl_at_zero<T: Scalar>(left: &Boundary<T>) -> Result<T> {
    match left.reciprocal() {
        Some(r) => Ok(T::one() + r),
        None => Err(Error::DegenerateBc("W(0) is a pole for a Neumann left end")),
    }
}

/// Continued-fraction coefficients read off from the geometry, top down.
#[derive(Clone, Debug, PartialEq)]
pub struct ContinuedFraction<T> {
    /// `l_N`
    pub last_length: T,
    /// `m_N, m_{N-1}, ..., m_1`
    pub masses: Vec<T>,
    /// `l_{N-1}, ..., l_0`
    pub lengths: Vec<T>,
    /// `1/h` (zero for a Dirichlet left end)
    pub tail: T,
}

impl<T: Scalar> ContinuedFraction<T> {
    /// Evaluates bottom up at spectral parameter `z`.
    pub fn eval(&self, z: &T) -> Result<T> {
        let mut t = self.tail.clone();
        for (l, m) in self.lengths.iter().rev().zip(self.masses.iter().rev()) {
            let inner = l.clone() + t;
            if inner.is_zero() {
                return Err(Error::PoleAtZ);
            }
            let denom = -z.clone() * m.clone() + T::one() / inner;
            if denom.is_zero() {
                return Err(Error::PoleAtZ);
            }
            t = T::one() / denom;
        }
        Ok(self.last_length.clone() + t)
    }

    pub fn len(&self) -> usize {
        self.masses.len()
    }

    pub fn is_empty(&self) -> bool {
        self.masses.is_empty()
    }
}

pub fn cf_expand<T: Scalar>(
    string: &DiscreteString<T>,
    left: &Boundary<T>,
) -> Result<ContinuedFraction<T>> {
    let tail = left
        .reciprocal()
        .ok_or(Error::DegenerateBc("continued fraction needs h > 0"))?;
    let mut lengths = string.lengths();
    let last_length = lengths.pop().expect("at least one interval");
    lengths.reverse();
    let masses = string.masses().iter().rev().cloned().collect();
    Ok(ContinuedFraction {
        last_length,
        masses,
        lengths,
        tail,
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct SpectralData<T> {
    pub eigenvalues: Vec<T>,
    pub residues: Vec<T>,
    pub w_infinity: T,
    pub left: Boundary<T>,
}

impl<T: Scalar> SpectralData<T> {
    /// `W_inf + sum a_i / (z_i - z)`
    pub fn eval(&self, z: &T) -> Result<T> {
        let mut w = self.w_infinity.clone();
        for (zi, a) in self.eigenvalues.iter().zip(&self.residues) {
            let d = zi.clone() - z.clone();
            if d.is_zero() {
                return Err(Error::PoleAtZ);
            }
            w = w + a.clone() / d;
        }
        Ok(w)
    }

    /// `W(0) = W_inf + sum a_i / z_i`
    pub fn value_at_zero(&self) -> Result<T> {
        self.eval(&T::zero())
    }

    /// Difference between the value at zero and what the left end dictates.
    pub fn zero_defect(&self) -> Result<T> {
        Ok(self.value_at_zero()? - weyl_at_zero(&self.left)?)
    }

    pub fn len(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn is_empty(&self) -> bool {
        self.eigenvalues.is_empty()
    }
}

/// Eigenvalues, residues `a_i = B1 / (dA1/dlambda)` at `lambda = -z_i`, and
/// `W_inf = lim W`.
pub fn partial_fractions<T: Scalar>(
    string: &DiscreteString<T>,
    bc: &BoundaryConditions<T>,
) -> Result<SpectralData<T>> {
    require_weyl_family(bc)?;
    let (a1, b1) = terminal_polynomials(string, &bc.left);
    let eigenvalues = eigenvalues(string, bc)?;
    Ok(spectral_data_from(&a1, &b1, eigenvalues, bc.left.clone()))
}

pub(crate) fn spectral_data_from<T: Scalar>(
    a1: &Poly<T>,
    b1: &Poly<T>,
    eigenvalues: Vec<T>,
    left: Boundary<T>,
) -> SpectralData<T> {
    let da1 = a1.derivative();
    let residues = eigenvalues
        .iter()
        .map(|z| {
            let lambda = -z.clone();
            b1.eval(&lambda) / da1.eval(&lambda)
        })
        .collect();
    let w_infinity = b1.leading() / a1.leading();
    SpectralData {
        eigenvalues,
        residues,
        w_infinity,
        left,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::Rational;

    fn q(n: i64, d: i64) -> Rational {
        Rational::ratio(n, d)
    }

    fn single() -> DiscreteString<Rational> {
        DiscreteString::new(vec![q(1, 2)], vec![q(1, 1)]).unwrap()
    }

    #[test]
    fn weyl_eval_examples() {
        let h1 = Boundary::Robin(q(1, 1));
        assert_eq!(weyl_eval(&single(), &h1, &q(0, 1)).unwrap(), q(2, 1));
        let empty = DiscreteString::empty();
        for z in [q(0, 1), q(5, 1), q(-3, 7)] {
            assert_eq!(weyl_eval(&empty, &h1, &z).unwrap(), q(2, 1));
        }
        assert_eq!(weyl_eval(&single(), &h1, &q(2, 3)), Err(Error::PoleAtZ));
        // far out along the real axis W approaches l_N = 1/2
        let far = weyl_eval(&single(), &h1, &q(1_000_000, 1)).unwrap();
        assert!((far - q(1, 2)).abs() < q(1, 100_000));
    }

    #[test]
    fn cf_expand_examples() {
        let cf = cf_expand(&single(), &Boundary::Robin(q(1, 1))).unwrap();
        assert_eq!(cf.last_length, q(1, 2));
        assert_eq!(cf.masses, vec![q(1, 1)]);
        assert_eq!(cf.lengths, vec![q(1, 2)]);
        assert_eq!(cf.tail, q(1, 1));
        let cf = cf_expand(&single(), &Boundary::Dirichlet).unwrap();
        assert_eq!(cf.tail, q(0, 1));
        let cf = cf_expand(&DiscreteString::empty(), &Boundary::Robin(q(2, 1))).unwrap();
        assert_eq!(
            (cf.last_length.clone(), cf.tail.clone()),
            (q(1, 1), q(1, 2))
        );
        assert!(cf.is_empty());
        assert!(cf_expand(&single(), &Boundary::neumann()).is_err());
    }

    #[test]
    fn cf_matches_weyl_eval() {
        let s = DiscreteString::new(
            vec![q(1, 5), q(1, 2), q(3, 4)],
            vec![q(2, 1), q(1, 3), q(5, 2)],
        )
        .unwrap();
        for left in [Boundary::Robin(q(3, 2)), Boundary::Dirichlet] {
            let cf = cf_expand(&s, &left).unwrap();
            for z in [q(0, 1), q(1, 7), q(-2, 1), q(11, 3)] {
                assert_eq!(cf.eval(&z).unwrap(), weyl_eval(&s, &left, &z).unwrap());
            }
        }
    }

    #[test]
    fn partial_fraction_example() {
        let bc = BoundaryConditions::robin_neumann(q(1, 1)).unwrap();
        let sd = partial_fractions(&single(), &bc).unwrap();
        assert_eq!(sd.eigenvalues, vec![q(2, 3)]);
        assert_eq!(sd.residues, vec![q(1, 1)]);
        assert_eq!(sd.w_infinity, q(1, 2));
        assert_eq!(sd.value_at_zero().unwrap(), q(2, 1));

        let empty = partial_fractions(&DiscreteString::empty(), &bc).unwrap();
        assert!(empty.is_empty());
        assert_eq!(empty.eval(&q(9, 1)).unwrap(), q(2, 1));
    }

    #[test]
    fn dirichlet_left_value_at_zero() {
        let bc = BoundaryConditions::dirichlet_neumann();
        let s = DiscreteString::new(vec![q(1, 3), q(2, 3)], vec![q(1, 1), q(1, 1)]).unwrap();
        let sd = partial_fractions(&s, &bc).unwrap();
        assert!(sd.zero_defect().unwrap().abs() < q(1, 1_000_000_000_000));
        assert!(sd.residues.iter().all(|a| *a > q(0, 1)));
        assert_eq!(
            weyl_eval(&s, &Boundary::Dirichlet, &q(0, 1)).unwrap(),
            q(1, 1)
        );
    }

    #[test]
    fn rejects_other_families() {
        let bc = BoundaryConditions::dirichlet_dirichlet();
        assert!(matches!(
            partial_fractions(&single(), &bc),
            Err(Error::UnsupportedBoundary(_))
        ));
        let nn = BoundaryConditions::new(Boundary::neumann(), Boundary::neumann()).unwrap();
        assert!(matches!(
            partial_fractions(&single(), &nn),
            Err(Error::DegenerateBc(_))
        ));
    }
}
