//! Change of variables `x = 1/2 + tanh(zeta/2)/2` taking the string on
//! `(0, 1)` to the real line.
//!
//! Fields transform as `u(zeta) = 4 cosh^2(zeta/2) b(x(zeta))` and a point
//! mass `m_j` at `x_j` becomes a point mass `m_j x'(zeta_j)` at `zeta_j`
//! (the push-forward of `m_j delta_{x_j}` under the weight `x'^2` of a smooth
//! density). Since `4 cosh^2(zeta/2) x'(zeta) = 1`, jumps of `b_x` carry over
//! unchanged.

use std::ops::{Add, Mul};

use crate::error::{Error, Result};
use crate::fields::FieldSet;
use crate::piecewise::{PiecewisePoly, Side};
use crate::string::DiscreteString;

pub fn map_point(x: f64) -> Result<f64> {
    if !(x > 0.0 && x < 1.0) {
        return Err(Error::DomainError(x));
    }
    Ok(2.0 * (2.0 * x - 1.0).atanh())
}

pub fn inverse_point(zeta: f64) -> f64 {
    0.5 + 0.5 * (0.5 * zeta).tanh()
}

/// Value and first three derivatives of a function of `zeta`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Jet(pub [f64; 4]);

impl Jet {
    pub fn value(&self) -> f64 {
        self.0[0]
    }

    pub fn d(&self, order: usize) -> f64 {
        self.0[order]
    }

    /// `x(zeta)` and its derivatives.
    pub fn position(zeta: f64) -> Self {
        let t = (0.5 * zeta).tanh();
        let s = 1.0 - t * t;
        Jet([
            0.5 + 0.5 * t,
            0.25 * s,
            -0.25 * t * s,
            -0.125 * s * (1.0 - 3.0 * t * t),
        ])
    }

    /// `4 cosh^2(zeta/2) = 2 (1 + cosh zeta)` and its derivatives.
    pub fn weight(zeta: f64) -> Self {
        let (sh, ch) = (zeta.sinh(), zeta.cosh());
        Jet([2.0 * (1.0 + ch), 2.0 * sh, 2.0 * ch, 2.0 * sh])
    }

    /// `f(inner(zeta))` given `f` and its first three derivatives at
    /// `inner(zeta)`.
    pub fn compose(outer: [f64; 4], inner: &Jet) -> Self {
        let [_, i1, i2, i3] = inner.0;
        let [f0, f1, f2, f3] = outer;
        Jet([
            f0,
            f1 * i1,
            f2 * i1 * i1 + f1 * i2,
            f3 * i1 * i1 * i1 + 3.0 * f2 * i1 * i2 + f1 * i3,
        ])
    }
}

impl Mul for Jet {
    type Output = Jet;

    fn mul(self, rhs: Jet) -> Jet {
        let (a, b) = (self.0, rhs.0);
        Jet([
            a[0] * b[0],
            a[1] * b[0] + a[0] * b[1],
            a[2] * b[0] + 2.0 * a[1] * b[1] + a[0] * b[2],
            a[3] * b[0] + 3.0 * a[2] * b[1] + 3.0 * a[1] * b[2] + a[0] * b[3],
        ])
    }
}

impl Add for Jet {
    type Output = Jet;

    fn add(self, rhs: Jet) -> Jet {
        Jet(std::array::from_fn(|i| self.0[i] + rhs.0[i]))
    }
}

/// `u = 4 cosh^2(zeta/2) b(x(zeta))` with one-sided derivatives on `side`.
pub fn transform_field(b: &PiecewisePoly<f64>, zeta: f64, side: Side) -> Jet {
    let x = Jet::position(zeta);
    let derivs = std::array::from_fn(|k| b.derivative_at(k, &x.value(), side));
    Jet::weight(zeta) * Jet::compose(derivs, &x)
}

/// As [`transform_field`] but continuing segment `segment` of `b`, which
/// gives one-sided limits at a mass even when `x(zeta_j)` rounds off the
/// breakpoint.
pub fn transform_segment(b: &PiecewisePoly<f64>, segment: usize, zeta: f64) -> Jet {
    let x = Jet::position(zeta);
    let poly = &b.segments()[segment];
    let derivs = std::array::from_fn(|k| poly.nth_derivative(k).eval(&x.value()));
    Jet::weight(zeta) * Jet::compose(derivs, &x)
}

#[derive(Clone, Debug, PartialEq)]
pub struct LineState {
    pub zeta: Vec<f64>,
    pub masses: Vec<f64>,
    pub fields: FieldSet<f64>,
}

pub fn map_state(string: &DiscreteString<f64>, fields: &FieldSet<f64>) -> Result<LineState> {
    let zeta = string
        .positions()
        .iter()
        .map(|x| map_point(*x))
        .collect::<Result<Vec<_>>>()?;
    let masses = zeta
        .iter()
        .zip(string.masses())
        .map(|(z, m)| m * Jet::position(*z).d(1))
        .collect();
    Ok(LineState {
        zeta,
        masses,
        fields: fields.clone(),
    })
}

impl LineState {
    /// `u0 = 4 cosh^2(zeta/2) b0`
    pub fn u0(&self, zeta: f64, side: Side) -> Jet {
        transform_field(&self.fields.b0, zeta, side)
    }

    /// Transformed residue field of pole `k`.
    pub fn u_pole(&self, k: usize, zeta: f64, side: Side) -> Jet {
        transform_field(&self.fields.poles[k].field, zeta, side)
    }

    /// Residuals of the line jump conditions for the limit flow at each mass:
    /// `-[u0_zeta]/2 - m_j u_{-1}` and `-[u0_zetazeta]/2 - m_j <u_{-1,zeta}>`.
    pub fn residuals(&self) -> Vec<(f64, f64)> {
        self.zeta
            .iter()
            .zip(&self.masses)
            .enumerate()
            .map(|(j, (&z, &m))| {
                let b0 = &self.fields.b0;
                let pole = &self.fields.poles[0].field;
                let (l, r) = (transform_segment(b0, j, z), transform_segment(b0, j + 1, z));
                let (pl, pr) = (
                    transform_segment(pole, j, z),
                    transform_segment(pole, j + 1, z),
                );
                let r1 = -0.5 * (r.d(1) - l.d(1)) - m * 0.5 * (pl.value() + pr.value());
                let r2 = -0.5 * (r.d(2) - l.d(2)) - m * 0.5 * (pl.d(1) + pr.d(1));
                (r1, r2)
            })
            .collect()
    }
}
