//! Exact solution of the flow through the spectral data.
//!
//! Under the flow the eigenvalues stay put and the Weyl residues evolve as
//! `a_i(t) = a_i(0) exp(2 beta(z_i) t)`. The string at time `t` is recovered
//! by expanding the proper part `R(lambda) = sum_i a_i / (lambda + z_i)` of
//! the Weyl function into a Stieltjes continued fraction
//!
//! ```text
//! R = 1/(lambda m_N + 1/(l_{N-1} + 1/(lambda m_{N-1} + ... + 1/(lambda m_1 + 1/(l_0 + 1/h)))))
//! ```
//!
//! and placing the masses at the partial sums of the lengths.

use crate::error::{Error, Result};
use crate::fields::{beta, build_fields, BetaFunction, FlowSpec};
use crate::poly::Poly;
use crate::scalar::Scalar;
use crate::string::{
    eigenvalues, terminal_polynomials, transfer_polynomials, BoundaryConditions, DiscreteString,
};
use crate::weyl::{require_weyl_family, spectral_data_from, ContinuedFraction, SpectralData};

/// Spectral data with residues advanced to time `t`.
#[derive(Clone, Debug, PartialEq)]
pub struct EvolvedMeasure<T> {
    pub t: T,
    pub data: SpectralData<T>,
    /// `beta(z_i)`
    pub beta_values: Vec<T>,
}

pub fn evolve_measure<T: Scalar>(
    data: &SpectralData<T>,
    beta: &BetaFunction<T>,
    t: &T,
) -> Result<EvolvedMeasure<T>> {
    let beta_values = data
        .eigenvalues
        .iter()
        .map(|z| beta.eval(z))
        .collect::<Result<Vec<_>>>()?;
    let residues = data
        .residues
        .iter()
        .zip(&beta_values)
        .map(|(a, b)| {
            if t.is_zero() {
                a.clone()
            } else {
                a.clone() * (T::from_i64(2) * b.clone() * t.clone()).exp()
            }
        })
        .collect();
    Ok(EvolvedMeasure {
        t: t.clone(),
        data: SpectralData {
            residues,
            ..data.clone()
        },
        beta_values,
    })
}

/// `R(lambda)` as `(numerator, denominator)` over the common denominator
/// `prod_i (lambda + z_i)`.
pub fn proper_part<T: Scalar>(eigenvalues: &[T], residues: &[T]) -> (Poly<T>, Poly<T>) {
    let den = Poly::from_shifted_roots(eigenvalues);
    let num = residues
        .iter()
        .enumerate()
        .fold(Poly::zero(), |acc, (i, a)| {
            let others: Vec<T> = eigenvalues
                .iter()
                .enumerate()
                .filter(|(k, _)| *k != i)
                .map(|(_, z)| z.clone())
                .collect();
            &acc + &Poly::from_shifted_roots(&others).scale(a)
        });
    (num, den)
}

/// `R(lambda) = q_N / p_N` read from the propagated solution.
pub fn proper_part_of_string<T: Scalar>(
    string: &DiscreteString<T>,
    bc: &BoundaryConditions<T>,
) -> (Poly<T>, Poly<T>) {
    let (slopes, values) = transfer_polynomials(string, &bc.left);
    let n = string.len();
    (values[n].clone(), slopes[n].clone())
}

/// `R(lambda)` assembled bottom up from continued-fraction coefficients.
pub fn proper_part_of_cf<T: Scalar>(cf: &ContinuedFraction<T>) -> (Poly<T>, Poly<T>) {
    let n = cf.masses.len();
    if n == 0 {
        return (Poly::zero(), Poly::constant(T::one()));
    }
    // running value num/den, starting from l_0 + 1/h
    let mut num = Poly::constant(cf.lengths[n - 1].clone() + cf.tail.clone());
    let mut den = Poly::constant(T::one());
    for k in 1..=n {
        // 1/(lambda m_k + den/num) = num/(lambda m_k num + den)
        let next_den = &num.scale(&cf.masses[n - k]).shift_up(1) + &den;
        den = next_den;
        if k < n {
            // l_k + num/den
            num = &num + &den.scale(&cf.lengths[n - 1 - k]);
        }
    }
    (num, den)
}

/// Continued-fraction coefficients without the geometric end terms.
#[derive(Clone, Debug, PartialEq)]
pub struct CfCoefficients<T> {
    /// `m_N, ..., m_1`
    pub masses: Vec<T>,
    /// `l_{N-1}, ..., l_0`
    pub lengths: Vec<T>,
}

fn stieltjes_check<T: Scalar>(name: &str, k: usize, v: &T) -> Result<()> {
    if *v > T::zero() {
        Ok(())
    } else {
        Err(Error::NotAStieltjesFraction(format!(
            "{name} at level {k} is {:e}, not positive",
            v.to_f64()
        )))
    }
}

/// Expands `num/den` into the continued fraction by alternating polynomial
/// division; `tail = 1/h` is removed from the terminal constant.
pub fn euclidean_cf<T: Scalar>(
    num: &Poly<T>,
    den: &Poly<T>,
    tail: &T,
) -> Result<CfCoefficients<T>> {
    let mut masses = Vec::new();
    let mut lengths = Vec::new();
    if num.is_zero() {
        return match den.degree() {
            Some(0) => Ok(CfCoefficients { masses, lengths }),
            _ => Err(Error::NotAStieltjesFraction(
                "zero numerator over a nonconstant denominator".into(),
            )),
        };
    }
    let (mut num, mut den) = (num.clone(), den.clone());
    let mut level = den.degree().unwrap_or(0);
    loop {
        let dn = num.degree().expect("nonzero numerator");
        if den.degree() != Some(dn + 1) {
            return Err(Error::NotAStieltjesFraction(format!(
                "degree pattern broken at level {level}"
            )));
        }
        let m = den.leading() / num.leading();
        stieltjes_check("mass", level, &m)?;
        masses.push(m.clone());
        // the top coefficient cancels by construction
        let p = (&den - &num.scale(&m).shift_up(1)).truncate(dn + 1);
        if p.degree() != Some(dn) {
            return Err(Error::NotAStieltjesFraction(format!(
                "degenerate remainder at level {level}"
            )));
        }
        if dn == 0 {
            let l0 = num.leading() / p.leading() - tail.clone();
            stieltjes_check("length", 0, &l0)?;
            lengths.push(l0);
            break;
        }
        let l = num.leading() / p.leading();
        stieltjes_check("length", level - 1, &l)?;
        lengths.push(l.clone());
        num = (&num - &p.scale(&l)).truncate(dn);
        den = p;
        level -= 1;
        if num.is_zero() {
            return Err(Error::NotAStieltjesFraction(format!(
                "remainder vanished at level {level}"
            )));
        }
    }
    Ok(CfCoefficients { masses, lengths })
}

/// Places the masses at the partial sums of `l_0, ..., l_{N-1}`; the last
/// length is whatever remains of the unit interval.
pub fn reassemble<T: Scalar>(cf: &CfCoefficients<T>) -> Result<DiscreteString<T>> {
    let lengths: Vec<T> = cf.lengths.iter().rev().cloned().collect();
    let total = lengths.iter().cloned().fold(T::zero(), |a, b| a + b);
    if total >= T::one() {
        return Err(Error::LengthOverflow(total.to_f64()));
    }
    let masses = cf.masses.iter().rev().cloned().collect();
    DiscreteString::from_lengths(&lengths, masses)
}

/// A reconstructed string with the Weyl data it was rebuilt from; the
/// constant `w_infinity` is set to the reconstructed last length.
#[derive(Clone, Debug, PartialEq)]
pub struct ExactState<T> {
    pub t: T,
    pub string: DiscreteString<T>,
    pub measure: SpectralData<T>,
}

/// Spectral data and `beta` of an initial string, ready to be advanced to
/// any time.
#[derive(Clone, Debug)]
pub struct InverseProblem<T> {
    pub string0: DiscreteString<T>,
    pub bc: BoundaryConditions<T>,
    pub data: SpectralData<T>,
    pub beta: BetaFunction<T>,
}

impl<T: Scalar> InverseProblem<T> {
    pub fn new(
        string0: &DiscreteString<T>,
        bc: &BoundaryConditions<T>,
        spec: &FlowSpec<T>,
    ) -> Result<Self> {
        require_weyl_family(bc)?;
        let (a1, b1) = terminal_polynomials(string0, &bc.left);
        let ev = eigenvalues(string0, bc)?;
        let data = spectral_data_from(&a1, &b1, ev, bc.left.clone());
        let fields = build_fields(string0, bc, spec)?;
        Ok(Self {
            string0: string0.clone(),
            bc: bc.clone(),
            data,
            beta: beta(&fields, bc),
        })
    }

    fn tail(&self) -> T {
        self.bc.left.reciprocal().expect("Weyl family has h > 0")
    }

    /// The string at time `t`. At `t = 0` the expansion runs on the exact
    /// Weyl function of the initial string, so the result reproduces it
    /// exactly on the rational backend.
    pub fn state_at(&self, t: &T) -> Result<ExactState<T>> {
        let (string, measure) = if t.is_zero() {
            let (num, den) = proper_part_of_string(&self.string0, &self.bc);
            let cf = euclidean_cf(&num, &den, &self.tail())?;
            (reassemble(&cf)?, self.data.clone())
        } else {
            let evolved = evolve_measure(&self.data, &self.beta, t)?;
            let (num, den) = proper_part(&evolved.data.eigenvalues, &evolved.data.residues);
            let cf = euclidean_cf(&num, &den, &self.tail())?;
            (reassemble(&cf)?, evolved.data)
        };
        let last_length = string.lengths().pop().expect("at least one interval");
        Ok(ExactState {
            t: t.clone(),
            string,
            measure: SpectralData {
                w_infinity: last_length,
                ..measure
            },
        })
    }
}

/// The string at time `t` of the flow `spec`, by inverse spectral transform.
pub fn exact_state<T: Scalar>(
    string0: &DiscreteString<T>,
    bc: &BoundaryConditions<T>,
    spec: &FlowSpec<T>,
    t: &T,
) -> Result<DiscreteString<T>> {
    Ok(InverseProblem::new(string0, bc, spec)?.state_at(t)?.string)
}
