//! Deformation fields `b(x; z) = b0(x) + sum_k b_k(x) / (z + eps_k)`, the
//! constant `beta(z)` and the boundary diagnostics.
//!
//! All fields are built from `omega(x; lambda) = phi(x; lambda) psi(x;
//! lambda)`, the product of the left- and right-normalised solutions, which is
//! piecewise quadratic in `x` with breakpoints at the masses.

use crate::error::{Error, Result};
use crate::piecewise::{PiecewisePoly, Side};
use crate::poly::Poly;
use crate::scalar::{convert, Scalar};
use crate::string::{
    char_poly, greens_function, propagate, propagate_right, Boundary, BoundaryConditions,
    DiscreteString,
};

/// Which member of the family of isospectral flows to follow.
#[derive(Clone, Debug, PartialEq)]
pub enum FlowSpec<T> {
    /// The `eps -> 0` limit, with a `1/z` pole. Rescaling divides every field
    /// by `W(c0, c0_hat)`, turning `b_{-1}` into `G(x, x)`.
    Limit { rescaled: bool },
    /// One pole at `z = -epsilon`.
    SinglePole { epsilon: T, rescaled: bool },
    /// Poles at `z = -eps_k` with weights `mu_k`; `mu0` weights `omega(.; 0)`.
    MultiPole {
        mu0: T,
        poles: Vec<(T, T)>,
        rescaled: bool,
    },
    /// Neumann-Neumann substitute built on the kernel `-|x - y|/2`:
    /// `b_{-1} = 1/2`, `b0 = -sum_j |x - x_j| m_j / 2`.
    TranslationInvariant,
}

impl<T: Scalar> FlowSpec<T> {
    pub fn limit() -> Self {
        Self::Limit { rescaled: true }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            Self::SinglePole { epsilon, .. } if *epsilon <= T::zero() => {
                Err(Error::InvalidFlow("pole offset epsilon must be positive"))
            }
            Self::MultiPole { poles, .. } => {
                if poles.is_empty() {
                    return Err(Error::InvalidFlow(
                        "multi-pole flow needs at least one pole",
                    ));
                }
                for (i, (eps, _)) in poles.iter().enumerate() {
                    if *eps <= T::zero() {
                        return Err(Error::InvalidFlow("pole offset epsilon must be positive"));
                    }
                    if poles[..i].iter().any(|(other, _)| other == eps) {
                        return Err(Error::InvalidFlow("pole offsets must be distinct"));
                    }
                }
                Ok(())
            }
            _ => Ok(()),
        }
    }

    pub fn is_rescaled(&self) -> bool {
        match self {
            Self::Limit { rescaled }
            | Self::SinglePole { rescaled, .. }
            | Self::MultiPole { rescaled, .. } => *rescaled,
            Self::TranslationInvariant => false,
        }
    }

    pub fn convert<U: Scalar>(&self) -> FlowSpec<U> {
        match self {
            Self::Limit { rescaled } => FlowSpec::Limit {
                rescaled: *rescaled,
            },
            Self::SinglePole { epsilon, rescaled } => FlowSpec::SinglePole {
                epsilon: convert(epsilon),
                rescaled: *rescaled,
            },
            Self::MultiPole {
                mu0,
                poles,
                rescaled,
            } => FlowSpec::MultiPole {
                mu0: convert(mu0),
                poles: poles
                    .iter()
                    .map(|(e, m)| (convert(e), convert(m)))
                    .collect(),
                rescaled: *rescaled,
            },
            Self::TranslationInvariant => FlowSpec::TranslationInvariant,
        }
    }
}

/// Segment `k` of a solution that is linear on every interval, given its
/// slope and its value at the left end `x_k` of the interval.
fn linear_piece<T: Scalar>(slope: &T, value: &T, x_k: &T) -> Poly<T> {
    Poly::linear(value.clone() - slope.clone() * x_k.clone(), slope.clone())
}

/// `phi(.; lambda)`, equal to `c0` left of the first mass.
pub fn left_solution<T: Scalar>(
    string: &DiscreteString<T>,
    left: &Boundary<T>,
    lambda: &T,
) -> PiecewisePoly<T> {
    let bps = string.breakpoints();
    let sol = propagate(string, left, lambda);
    let segments = (0..=string.len())
        .map(|k| linear_piece(&sol.slopes[k], &sol.values[k], &bps[k]))
        .collect();
    PiecewisePoly::new(bps, segments)
}

/// `psi(.; lambda)`, equal to `c0_hat` right of the last mass.
pub fn right_solution<T: Scalar>(
    string: &DiscreteString<T>,
    right: &Boundary<T>,
    lambda: &T,
) -> PiecewisePoly<T> {
    let bps = string.breakpoints();
    let sol = propagate_right(string, right, lambda);
    let segments = (0..=string.len())
        .map(|k| linear_piece(&sol.slopes[k], &sol.values[k], &bps[k]))
        .collect();
    PiecewisePoly::new(bps, segments)
}

/// `omega(.; lambda) = phi psi`.
pub fn omega<T: Scalar>(
    string: &DiscreteString<T>,
    bc: &BoundaryConditions<T>,
    lambda: &T,
) -> PiecewisePoly<T> {
    left_solution(string, &bc.left, lambda).mul(&right_solution(string, &bc.right, lambda))
}

/// The residue `b_k` at the pole `z = -epsilon` (`epsilon = 0` for the limit
/// flow).
#[derive(Clone, Debug, PartialEq)]
pub struct PoleField<T> {
    pub epsilon: T,
    pub field: PiecewisePoly<T>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct FieldSet<T> {
    pub b0: PiecewisePoly<T>,
    pub poles: Vec<PoleField<T>>,
    /// Constant factor already applied to every field.
    pub scale: T,
}

impl<T: Scalar> FieldSet<T> {
    /// The full field at spectral parameter `z`.
    pub fn at(&self, z: &T) -> Result<PiecewisePoly<T>> {
        let mut b = self.b0.clone();
        for pole in &self.poles {
            let d = z.clone() + pole.epsilon.clone();
            if d.is_zero() {
                return Err(Error::PoleAtZ);
            }
            b = b.add(&pole.field.scale(&(T::one() / d)));
        }
        Ok(b)
    }

    /// `b0` followed by every pole field.
    pub fn components(&self) -> impl Iterator<Item = &PiecewisePoly<T>> {
        std::iter::once(&self.b0).chain(self.poles.iter().map(|p| &p.field))
    }
}

/// `c1(x) = sum_{x_j < x} m_j (x - x_j) c0(x_j)` segment by segment.
fn first_order_left<T: Scalar>(string: &DiscreteString<T>, c0: &Poly<T>) -> Vec<Poly<T>> {
    let (x, m) = (string.positions(), string.masses());
    let mut acc = Poly::zero();
    let mut out = vec![acc.clone()];
    for j in 0..string.len() {
        let w = m[j].clone() * c0.eval(&x[j]);
        acc = &acc + &Poly::linear(-(w.clone() * x[j].clone()), w);
        out.push(acc.clone());
    }
    out
}

/// `c1_hat(x) = sum_{x_j > x} m_j (x_j - x) c0_hat(x_j)` segment by segment.
fn first_order_right<T: Scalar>(string: &DiscreteString<T>, c0_hat: &Poly<T>) -> Vec<Poly<T>> {
    let (x, m) = (string.positions(), string.masses());
    let n = string.len();
    let mut out = vec![Poly::zero(); n + 1];
    for k in (0..n).rev() {
        let w = m[k].clone() * c0_hat.eval(&x[k]);
        out[k] = &out[k + 1] + &Poly::linear(w.clone() * x[k].clone(), -w);
    }
    out
}

/// `1 / W(c0, c0_hat)`; Neumann-Neumann ends have no such normalisation.
pub fn rescale_factor<T: Scalar>(bc: &BoundaryConditions<T>) -> Result<T> {
    let w = bc.wronskian();
    if w.is_zero() {
        return Err(Error::DegenerateBc(
            "rescaling needs W(c0, c0_hat) != 0 (Neumann-Neumann ends)",
        ));
    }
    Ok(-(T::one() / w))
}

pub fn build_fields<T: Scalar>(
    string: &DiscreteString<T>,
    bc: &BoundaryConditions<T>,
    spec: &FlowSpec<T>,
) -> Result<FieldSet<T>> {
    spec.validate()?;
    let bps = string.breakpoints();
    let n = string.len();
    let (b0, poles) = match spec {
        FlowSpec::Limit { .. } => {
            let c0 = bc.left.left_seed();
            let c0_hat = bc.right.right_seed();
            let c1 = first_order_left(string, &c0);
            let c1_hat = first_order_right(string, &c0_hat);
            let b0 = (0..=n)
                .map(|k| -&(&(&c0 * &c1_hat[k]) + &(&c1[k] * &c0_hat)))
                .collect();
            let b_minus = vec![&c0 * &c0_hat; n + 1];
            (
                PiecewisePoly::new(bps.clone(), b0),
                vec![PoleField {
                    epsilon: T::zero(),
                    field: PiecewisePoly::new(bps, b_minus),
                }],
            )
        }
        FlowSpec::SinglePole { epsilon, .. } => {
            let w0 = omega(string, bc, &T::zero());
            let we = omega(string, bc, epsilon);
            let b0 = w0.sub(&we).scale(&(T::one() / epsilon.clone()));
            (
                b0,
                vec![PoleField {
                    epsilon: epsilon.clone(),
                    field: we,
                }],
            )
        }
        FlowSpec::MultiPole { mu0, poles, .. } => {
            let w0 = omega(string, bc, &T::zero()).scale(mu0);
            let mut b0 = PiecewisePoly::zero_on(&bps);
            let mut fields = Vec::with_capacity(poles.len());
            for (eps, mu) in poles {
                let wk = omega(string, bc, eps).scale(mu);
                b0 = b0.add(&w0.sub(&wk).scale(&(T::one() / eps.clone())));
                fields.push(PoleField {
                    epsilon: eps.clone(),
                    field: wk,
                });
            }
            (b0, fields)
        }
        FlowSpec::TranslationInvariant => {
            if !bc.is_neumann_neumann() {
                return Err(Error::UnsupportedBoundary(
                    "the translation invariant flow needs Neumann ends",
                ));
            }
            let (x, m) = (string.positions(), string.masses());
            // sum_j |x - x_j| m_j on segment k: masses left of it count +, right -
            let b0 = (0..=n)
                .map(|k| {
                    (0..n).fold(Poly::zero(), |acc, j| {
                        let sign = if j < k { T::one() } else { -T::one() };
                        let w = m[j].clone() * sign;
                        &acc + &Poly::linear(-(w.clone() * x[j].clone()), w)
                    })
                })
                .map(|p| p.scale(&-T::ratio(1, 2)))
                .collect();
            let b_minus = vec![Poly::constant(T::ratio(1, 2)); n + 1];
            (
                PiecewisePoly::new(bps.clone(), b0),
                vec![PoleField {
                    epsilon: T::zero(),
                    field: PiecewisePoly::new(bps, b_minus),
                }],
            )
        }
    };
    let scale = if spec.is_rescaled() {
        rescale_factor(bc)?
    } else {
        T::one()
    };
    let fs = FieldSet {
        b0: b0.scale(&scale),
        poles: poles
            .into_iter()
            .map(|p| PoleField {
                epsilon: p.epsilon,
                field: p.field.scale(&scale),
            })
            .collect(),
        scale,
    };
    Ok(fs)
}

/// The left endpoint functional that defines `beta`: `b_x(0)/2 - h b(0)`,
/// or `-b_x(0)/2` at a Dirichlet end.
pub fn left_functional<T: Scalar>(b: &PiecewisePoly<T>, left: &Boundary<T>) -> T {
    match left {
        Boundary::Robin(h) => b.at_left_end(1).half() - h.clone() * b.at_left_end(0),
        Boundary::Dirichlet => -b.at_left_end(1).half(),
    }
}

/// The right endpoint functional equal to `K beta`: `b_x(1)/2 + H b(1)`, or
/// `-b_x(1)/2` at a Dirichlet end.
pub fn right_functional<T: Scalar>(b: &PiecewisePoly<T>, right: &Boundary<T>) -> T {
    match right {
        Boundary::Robin(h) => b.at_right_end(1).half() + h.clone() * b.at_right_end(0),
        Boundary::Dirichlet => -b.at_right_end(1).half(),
    }
}

/// `beta(z) = constant + sum_k coefficient_k / (z + eps_k)`.
#[derive(Clone, Debug, PartialEq)]
pub struct BetaFunction<T> {
    pub constant: T,
    pub poles: Vec<(T, T)>,
}

impl<T: Scalar> BetaFunction<T> {
    pub fn eval(&self, z: &T) -> Result<T> {
        let mut v = self.constant.clone();
        for (eps, c) in &self.poles {
            let d = z.clone() + eps.clone();
            if d.is_zero() {
                return Err(Error::PoleAtZ);
            }
            v = v + c.clone() / d;
        }
        Ok(v)
    }

    /// Largest coefficient difference to another beta with the same poles.
    pub fn distance(&self, other: &Self) -> T {
        let mut worst = (self.constant.clone() - other.constant.clone()).abs();
        for ((_, a), (_, b)) in self.poles.iter().zip(&other.poles) {
            let d = (a.clone() - b.clone()).abs();
            if d > worst {
                worst = d;
            }
        }
        worst
    }
}

/// `beta` from the fields through the left endpoint functional.
pub fn beta<T: Scalar>(fields: &FieldSet<T>, bc: &BoundaryConditions<T>) -> BetaFunction<T> {
    BetaFunction {
        constant: left_functional(&fields.b0, &bc.left),
        poles: fields
            .poles
            .iter()
            .map(|p| (p.epsilon.clone(), left_functional(&p.field, &bc.left)))
            .collect(),
    }
}

/// `beta` in closed form from the characteristic polynomial `Delta(lambda) =
/// D(-lambda)` alone, using that the left functional of `omega(.; lambda)` is
/// `-Delta(lambda)/2`.
pub fn beta_closed_form<T: Scalar>(
    string: &DiscreteString<T>,
    bc: &BoundaryConditions<T>,
    spec: &FlowSpec<T>,
) -> Result<BetaFunction<T>> {
    spec.validate()?;
    let delta = char_poly(string, bc);
    let d = |l: &T| delta.eval(l);
    let half = T::ratio(1, 2);
    let zero = T::zero();
    let scale = if spec.is_rescaled() {
        rescale_factor(bc)?
    } else {
        T::one()
    };
    let beta = match spec {
        FlowSpec::Limit { .. } => BetaFunction {
            constant: half.clone() * delta.coeff(1),
            poles: vec![(zero.clone(), -(half * d(&zero)))],
        },
        FlowSpec::SinglePole { epsilon, .. } => BetaFunction {
            constant: half.clone() * (d(epsilon) - d(&zero)) / epsilon.clone(),
            poles: vec![(epsilon.clone(), -(half * d(epsilon)))],
        },
        FlowSpec::MultiPole { mu0, poles, .. } => {
            let mut constant = T::zero();
            let mut out = Vec::new();
            for (eps, mu) in poles {
                constant = constant
                    + half.clone() * (mu.clone() * d(eps) - mu0.clone() * d(&zero)) / eps.clone();
                out.push((eps.clone(), -(half.clone() * mu.clone() * d(eps))));
            }
            BetaFunction {
                constant,
                poles: out,
            }
        }
        FlowSpec::TranslationInvariant => BetaFunction {
            constant: string.total_mass() * T::ratio(1, 4),
            poles: vec![(zero, T::zero())],
        },
    };
    Ok(BetaFunction {
        constant: beta.constant * scale.clone(),
        poles: beta
            .poles
            .into_iter()
            .map(|(e, c)| (e, c * scale.clone()))
            .collect(),
    })
}

/// `sum_j G(x_j, x_j) m_j / 2 + 1/(2z)`: the rescaled limit-flow `beta`
/// written with the Green's function.
pub fn beta_limit_green<T: Scalar>(
    string: &DiscreteString<T>,
    bc: &BoundaryConditions<T>,
) -> Result<BetaFunction<T>> {
    let mut integral = T::zero();
    for (x, m) in string.positions().iter().zip(string.masses()) {
        integral = integral + greens_function(bc, x, x)? * m.clone();
    }
    Ok(BetaFunction {
        constant: integral.half(),
        poles: vec![(T::zero(), T::ratio(1, 2))],
    })
}

/// Boundary residuals `(left, right)` of one field: `b''/2 - h b' + h^2 b`
/// at `0`, `b''/2 + H b' + H^2 b` at `1`, or `b` itself at a Dirichlet end.
pub fn bc_residual<T: Scalar>(b: &PiecewisePoly<T>, bc: &BoundaryConditions<T>) -> (T, T) {
    let left = match &bc.left {
        Boundary::Robin(h) => {
            b.at_left_end(2).half() - h.clone() * b.at_left_end(1)
                + h.clone() * h.clone() * b.at_left_end(0)
        }
        Boundary::Dirichlet => b.at_left_end(0),
    };
    let right = match &bc.right {
        Boundary::Robin(h) => {
            b.at_right_end(2).half()
                + h.clone() * b.at_right_end(1)
                + h.clone() * h.clone() * b.at_right_end(0)
        }
        Boundary::Dirichlet => b.at_right_end(0),
    };
    (left, right)
}

/// Residuals for `b0` followed by every pole field.
pub fn bc_residuals<T: Scalar>(fields: &FieldSet<T>, bc: &BoundaryConditions<T>) -> Vec<(T, T)> {
    fields.components().map(|b| bc_residual(b, bc)).collect()
}

/// `K(z)`, defined by `K beta = right functional of b(z)`; identically `-1`
/// for a consistent flow.
pub fn k_diagnostic<T: Scalar>(
    fields: &FieldSet<T>,
    bc: &BoundaryConditions<T>,
    z: &T,
) -> Result<T> {
    let b = fields.at(z)?;
    let beta = beta(fields, bc).eval(z)?;
    if beta.is_zero() {
        return Err(Error::BetaZero);
    }
    Ok(right_functional(&b, &bc.right) / beta)
}

/// The endpoint expressions of `omega(.; lambda)`; each is `None` where its
/// boundary parameter makes it undefined. They satisfy
/// `e1 = -e2 = -e3 = e4`, and `left_link = -Delta(lambda)/2`.
#[derive(Clone, Debug, PartialEq)]
pub struct EndpointIdentities<T> {
    /// `omega'(0)/2 - omega''(0)/(2h)`, for `h > 0`
    pub e1: Option<T>,
    /// `omega'(0)/2 - h omega(0)`, for finite `h`
    pub e2: Option<T>,
    /// `omega'(1)/2 + omega''(1)/(2H)`, for `H > 0`
    pub e3: Option<T>,
    /// `omega'(1)/2 + H omega(1)`, for finite `H`
    pub e4: Option<T>,
    /// Left functional of `omega`
    pub left_link: T,
    /// `Delta(lambda) = D(-lambda)`
    pub delta: T,
}

pub fn endpoint_identities<T: Scalar>(
    string: &DiscreteString<T>,
    bc: &BoundaryConditions<T>,
    lambda: &T,
) -> EndpointIdentities<T> {
    let w = omega(string, bc, lambda);
    let (w0, w0x, w0xx) = (w.at_left_end(0), w.at_left_end(1), w.at_left_end(2));
    let (w1, w1x, w1xx) = (w.at_right_end(0), w.at_right_end(1), w.at_right_end(2));
    let e1 = bc.left.reciprocal().map(|r| w0x.half() - w0xx.half() * r);
    let e2 = match &bc.left {
        Boundary::Robin(h) => Some(w0x.half() - h.clone() * w0.clone()),
        Boundary::Dirichlet => None,
    };
    let e3 = bc.right.reciprocal().map(|r| w1x.half() + w1xx.half() * r);
    let e4 = match &bc.right {
        Boundary::Robin(h) => Some(w1x.half() + h.clone() * w1),
        Boundary::Dirichlet => None,
    };
    EndpointIdentities {
        e1,
        e2,
        e3,
        e4,
        left_link: left_functional(&w, &bc.left),
        delta: char_poly(string, bc).eval(lambda),
    }
}

/// Entries `(a, c, d)` of the deformation matrix at a point `x` off the
/// support: `a = -b_x/2 + beta`, `c = -b_xx/2`, `d = b_x/2 + beta`.
pub fn zs_matrix_entries<T: Scalar>(
    fields: &FieldSet<T>,
    bc: &BoundaryConditions<T>,
    z: &T,
    x: &T,
) -> Result<(T, T, T)> {
    let b = fields.at(z)?;
    let beta = beta(fields, bc).eval(z)?;
    let bx = b.derivative_at(1, x, Side::Right);
    let bxx = b.derivative_at(2, x, Side::Right);
    Ok((-bx.half() + beta.clone(), -bxx.half(), bx.half() + beta))
}

#[cfg(test)]
mod tests {
    use num_traits::Zero;

    use super::*;
    use crate::scalar::Rational;

    fn q(n: i64, d: i64) -> Rational {
        Rational::ratio(n, d)
    }

    fn single() -> DiscreteString<Rational> {
        DiscreteString::new(vec![q(1, 2)], vec![q(1, 1)]).unwrap()
    }

    fn pair() -> DiscreteString<Rational> {
        DiscreteString::new(vec![q(1, 3), q(2, 3)], vec![q(1, 1), q(1, 1)]).unwrap()
    }

    fn dd() -> BoundaryConditions<Rational> {
        BoundaryConditions::dirichlet_dirichlet()
    }

    fn rn1() -> BoundaryConditions<Rational> {
        BoundaryConditions::robin_neumann(q(1, 1)).unwrap()
    }

    #[test]
    fn omega_examples() {
        let w = omega(&pair(), &dd(), &q(0, 1));
        for x in [q(1, 7), q(1, 2), q(9, 10)] {
            assert_eq!(w.eval(&x), x.clone() * (q(1, 1) - x));
        }
        for eps in [q(0, 1), q(1, 10), q(7, 1)] {
            assert_eq!(omega(&single(), &dd(), &eps).eval(&q(1, 2)), q(1, 4));
        }
        let w = omega(&single(), &rn1(), &q(0, 1));
        assert_eq!(w.eval(&q(3, 4)), q(7, 4));
        assert_eq!(w.continuity_defect(), q(0, 1));
    }

    #[test]
    fn dd_limit_fields() {
        let f = build_fields(&single(), &dd(), &FlowSpec::limit()).unwrap();
        let bm = &f.poles[0].field;
        let b0 = &f.b0;
        for x in [q(1, 5), q(1, 2), q(4, 5)] {
            assert_eq!(bm.eval(&x), -(x.clone() * (q(1, 1) - x.clone())));
        }
        assert_eq!(b0.eval(&q(1, 5)), (q(1, 2) - q(1, 5)) * q(1, 5) * q(1, 2));
        assert_eq!(b0.eval(&q(4, 5)), (q(4, 5) - q(1, 2)) * q(1, 5) * q(1, 2));
        assert_eq!(b0.eval(&q(1, 2)), q(0, 1));
        assert_eq!(f.scale, q(-1, 1));
    }

    #[test]
    fn dn_limit_b_minus() {
        let bc = BoundaryConditions::dirichlet_neumann();
        let f = build_fields(&pair(), &bc, &FlowSpec::limit()).unwrap();
        for x in [q(1, 5), q(1, 2), q(4, 5)] {
            assert_eq!(f.poles[0].field.eval(&x), -x);
        }
    }

    #[test]
    fn single_pole_b0_vanishes_at_centre() {
        for eps in [q(1, 10), q(3, 1)] {
            let spec = FlowSpec::SinglePole {
                epsilon: eps,
                rescaled: false,
            };
            let f = build_fields(&single(), &dd(), &spec).unwrap();
            assert_eq!(f.b0.eval(&q(1, 2)), q(0, 1));
        }
    }

    #[test]
    fn beta_examples() {
        let f = build_fields(&single(), &dd(), &FlowSpec::limit()).unwrap();
        let b = beta(&f, &dd());
        assert_eq!(b.constant, q(-1, 8));
        assert_eq!(b.poles, vec![(q(0, 1), q(1, 2))]);

        let f = build_fields(&single(), &rn1(), &FlowSpec::limit()).unwrap();
        let b = beta(&f, &rn1());
        assert_eq!(b.constant, q(-3, 4));
        assert_eq!(b.eval(&q(2, 3)).unwrap(), q(0, 1));

        let eps = q(1, 3);
        let spec = FlowSpec::SinglePole {
            epsilon: eps.clone(),
            rescaled: false,
        };
        let f = build_fields(&single(), &dd(), &spec).unwrap();
        let b = beta(&f, &dd());
        let expected_pole = -(q(1, 1) + eps.clone() / q(4, 1)) / q(2, 1);
        assert_eq!(b.constant, q(1, 8));
        assert_eq!(b.poles, vec![(eps, expected_pole)]);
    }

    #[test]
    fn beta_matches_closed_forms() {
        let s = DiscreteString::new(
            vec![q(1, 5), q(1, 2), q(3, 4)],
            vec![q(2, 1), q(1, 3), q(5, 2)],
        )
        .unwrap();
        let bcs = [
            dd(),
            rn1(),
            BoundaryConditions::dirichlet_neumann(),
            BoundaryConditions::new(Boundary::Robin(q(1, 2)), Boundary::Robin(q(3, 1))).unwrap(),
            BoundaryConditions::new(Boundary::Robin(q(2, 1)), Boundary::Dirichlet).unwrap(),
        ];
        let specs = [
            FlowSpec::limit(),
            FlowSpec::Limit { rescaled: false },
            FlowSpec::SinglePole {
                epsilon: q(1, 4),
                rescaled: false,
            },
            FlowSpec::SinglePole {
                epsilon: q(2, 1),
                rescaled: true,
            },
            FlowSpec::MultiPole {
                mu0: q(3, 2),
                poles: vec![(q(1, 2), q(1, 1)), (q(5, 1), q(2, 3))],
                rescaled: false,
            },
        ];
        for bc in &bcs {
            for spec in &specs {
                let f = build_fields(&s, bc, spec).unwrap();
                assert_eq!(beta(&f, bc), beta_closed_form(&s, bc, spec).unwrap());
            }
            let f = build_fields(&s, bc, &FlowSpec::limit()).unwrap();
            assert_eq!(beta(&f, bc), beta_limit_green(&s, bc).unwrap());
        }
    }

    #[test]
    fn boundary_residuals() {
        let f = build_fields(&pair(), &dd(), &FlowSpec::limit()).unwrap();
        assert!(bc_residuals(&f, &dd())
            .iter()
            .all(|(l, r)| l.is_zero() && r.is_zero()));
        let f = build_fields(&single(), &rn1(), &FlowSpec::limit()).unwrap();
        assert_eq!(f.poles[0].field.eval(&q(1, 4)), -(q(1, 4) + q(1, 1)));
        assert!(bc_residuals(&f, &rn1())
            .iter()
            .all(|(l, r)| l.is_zero() && r.is_zero()));

        let bad = f.poles[0].field.add_poly(&Poly::linear(q(0, 1), q(1, 100)));
        assert_ne!(bc_residual(&bad, &rn1()).0, q(0, 1));
    }

    #[test]
    fn k_is_minus_one() {
        let f = build_fields(&single(), &dd(), &FlowSpec::limit()).unwrap();
        assert_eq!(k_diagnostic(&f, &dd(), &q(1, 1)).unwrap(), q(-1, 1));
        let f = build_fields(&single(), &rn1(), &FlowSpec::limit()).unwrap();
        assert_eq!(k_diagnostic(&f, &rn1(), &q(2, 1)).unwrap(), q(-1, 1));
        assert_eq!(k_diagnostic(&f, &rn1(), &q(2, 3)), Err(Error::BetaZero));
    }

    #[test]
    fn endpoint_identity_chain() {
        let bc =
            BoundaryConditions::new(Boundary::Robin(q(1, 2)), Boundary::Robin(q(3, 1))).unwrap();
        let e = endpoint_identities(&pair(), &bc, &q(5, 2));
        let (e1, e2, e3, e4) = (e.e1.unwrap(), e.e2.unwrap(), e.e3.unwrap(), e.e4.unwrap());
        assert_eq!(e1, -e2.clone());
        assert_eq!(e1, -e3);
        assert_eq!(e1, e4);
        assert_eq!(e2.clone(), e.left_link);
        assert_eq!(e2, -e.delta.half());
    }

    #[test]
    fn translation_invariant_flow() {
        let nn = BoundaryConditions::new(Boundary::neumann(), Boundary::neumann()).unwrap();
        let f = build_fields(&pair(), &nn, &FlowSpec::TranslationInvariant).unwrap();
        // -(|1/2 - 1/3| + |1/2 - 2/3|)/2
        assert_eq!(f.b0.eval(&q(1, 2)), q(-1, 6));
        assert_eq!(beta(&f, &nn).constant, q(1, 2));
        assert_eq!(k_diagnostic(&f, &nn, &q(3, 1)).unwrap(), q(-1, 1));
        assert!(build_fields(&pair(), &dd(), &FlowSpec::TranslationInvariant).is_err());
        assert!(build_fields(&pair(), &nn, &FlowSpec::limit()).is_err());
    }

    #[test]
    fn zs_entries_trace() {
        let f = build_fields(&pair(), &dd(), &FlowSpec::limit()).unwrap();
        let z = q(7, 3);
        let bt = beta(&f, &dd()).eval(&z).unwrap();
        let (a, _, d) = zs_matrix_entries(&f, &dd(), &z, &q(1, 2)).unwrap();
        assert_eq!(a + d, bt * q(2, 1));
    }

    #[test]
    fn invalid_specs() {
        let spec = FlowSpec::SinglePole {
            epsilon: q(0, 1),
            rescaled: false,
        };
        assert!(build_fields(&single(), &dd(), &spec).is_err());
        let spec = FlowSpec::MultiPole {
            mu0: q(1, 1),
            poles: vec![(q(1, 1), q(1, 1)), (q(1, 1), q(2, 1))],
            rescaled: false,
        };
        assert!(build_fields(&single(), &dd(), &spec).is_err());
    }
}
