//! The isospectral flow of positions and masses, its conserved quantities and
//! an adaptive Runge-Kutta integrator.
//!
//! With `b0` the regular part of the deformation field, the flow reads
//! `dx_j/dt = -b0(x_j)` and `dm_j/dt = m_j <b0_x>(x_j)`. The fields depend on
//! the current string and are rebuilt at every evaluation.

use crate::error::{Error, Result};
use crate::fields::{build_fields, FieldSet, FlowSpec};
use crate::scalar::Scalar;
use crate::string::{
    greens_function, translation_invariant_kernel, tuple_sums, BoundaryConditions, DiscreteString,
};

#[derive(Clone, Debug, PartialEq)]
pub struct FlowState<T> {
    pub t: T,
    pub string: DiscreteString<T>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct FlowRhs<T> {
    pub dx: Vec<T>,
    pub dm: Vec<T>,
}

pub fn rhs_from_fields<T: Scalar>(string: &DiscreteString<T>, fields: &FieldSet<T>) -> FlowRhs<T> {
    let b0 = &fields.b0;
    let dx = string.positions().iter().map(|x| -b0.eval(x)).collect();
    let dm = string
        .masses()
        .iter()
        .enumerate()
        .map(|(j, m)| m.clone() * b0.average(1, j + 1))
        .collect();
    FlowRhs { dx, dm }
}

pub fn flow_rhs<T: Scalar>(
    string: &DiscreteString<T>,
    bc: &BoundaryConditions<T>,
    spec: &FlowSpec<T>,
) -> Result<FlowRhs<T>> {
    let fields = build_fields(string, bc, spec)?;
    Ok(rhs_from_fields(string, &fields))
}

/// The conserved sums `I_1, ..., I_N`. The rescaled form uses the Green's
/// function as end kernel (the translation-invariant kernel for
/// Neumann-Neumann ends); the unrescaled form uses `c0(x) c0_hat(y)`, which
/// makes `I_n` the coefficients of the characteristic polynomial.
pub fn invariants<T: Scalar>(
    string: &DiscreteString<T>,
    bc: &BoundaryConditions<T>,
    rescaled: bool,
) -> Result<Vec<T>> {
    let x = string.positions();
    if !rescaled {
        let c0 = bc.left.left_seed();
        let c0_hat = bc.right.right_seed();
        return Ok(tuple_sums(string, |a, b| {
            c0.eval(&x[a]) * c0_hat.eval(&x[b])
        }));
    }
    if bc.is_neumann_neumann() {
        return Ok(tuple_sums(string, |a, b| {
            translation_invariant_kernel(&x[a], &x[b])
        }));
    }
    // the kernel can only fail for Neumann-Neumann ends, excluded above
    greens_function(bc, &T::zero(), &T::zero())?;
    Ok(tuple_sums(string, |a, b| {
        greens_function(bc, &x[a], &x[b]).expect("checked boundary conditions")
    }))
}

/// Invariants in the convention matching a flow.
pub fn invariants_for<T: Scalar>(
    string: &DiscreteString<T>,
    bc: &BoundaryConditions<T>,
    spec: &FlowSpec<T>,
) -> Result<Vec<T>> {
    let rescaled = spec.is_rescaled() || matches!(spec, FlowSpec::TranslationInvariant);
    invariants(string, bc, rescaled)
}

/// Residuals of the jump conditions at each mass for the field `b(z)`:
/// `z m x' + [b_x]/2 + z m b` and `z m' - [b_xx]/2 - z m <b_x>`.
pub fn lax_residuals<T: Scalar>(
    string: &DiscreteString<T>,
    fields: &FieldSet<T>,
    z: &T,
) -> Result<Vec<(T, T)>> {
    let rhs = rhs_from_fields(string, fields);
    let b = fields.at(z)?;
    Ok(string
        .positions()
        .iter()
        .zip(string.masses())
        .enumerate()
        .map(|(j, (x, m))| {
            let k = j + 1;
            let zm = z.clone() * m.clone();
            let r1 = zm.clone() * rhs.dx[j].clone() + b.jump(1, k).half() + zm.clone() * b.eval(x);
            let r2 = z.clone() * rhs.dm[j].clone() - b.jump(2, k).half() - zm * b.average(1, k);
            (r1, r2)
        })
        .collect())
}

/// Why an integration stopped early.
#[derive(Clone, Debug, PartialEq, thiserror::Error)]
pub enum BreakdownKind {
    #[error("position {index} left the ordered configuration")]
    OrderingViolation { index: usize },
    #[error("mass {index} is no longer positive")]
    MassCollapse { index: usize },
    #[error("step size fell below the minimum")]
    StepUnderflow,
}

#[derive(Clone, Debug, PartialEq, thiserror::Error)]
#[error("flow breakdown at t = {}: {kind}", last_good.t)]
pub struct Breakdown {
    pub kind: BreakdownKind,
    pub last_good: FlowState<f64>,
    /// Samples recorded before the breakdown, ending with `last_good`.
    pub trajectory: Vec<FlowState<f64>>,
}

#[derive(Clone, Debug, PartialEq, thiserror::Error)]
pub enum IntegrateError {
    #[error(transparent)]
    Breakdown(Box<Breakdown>),
    #[error(transparent)]
    Setup(#[from] Error),
}

#[derive(Clone, Debug, PartialEq)]
pub struct IntegratorOptions {
    /// Initial step.
    pub dt: f64,
    /// Relative local error allowed per step.
    pub tolerance: f64,
    /// Record every `stride`-th accepted step (the last step is always kept).
    pub stride: usize,
    pub min_dt: f64,
    pub max_steps: usize,
}

impl Default for IntegratorOptions {
    fn default() -> Self {
        Self {
            dt: 1e-3,
            tolerance: 1e-10,
            stride: 1,
            min_dt: 1e-13,
            max_steps: 10_000_000,
        }
    }
}

fn classify(string_x: &[f64], masses: &[f64]) -> Option<BreakdownKind> {
    let mut previous = 0.0;
    for (index, &x) in string_x.iter().enumerate() {
        if !x.is_finite() || x <= previous {
            return Some(BreakdownKind::OrderingViolation { index });
        }
        previous = x;
    }
    if previous >= 1.0 && !string_x.is_empty() {
        return Some(BreakdownKind::OrderingViolation {
            index: string_x.len() - 1,
        });
    }
    masses
        .iter()
        .position(|m| !m.is_finite() || *m <= 0.0)
        .map(|index| BreakdownKind::MassCollapse { index })
}

struct System<'a> {
    n: usize,
    bc: &'a BoundaryConditions<f64>,
    spec: &'a FlowSpec<f64>,
}

impl System<'_> {
    fn unpack(&self, y: &[f64]) -> std::result::Result<DiscreteString<f64>, BreakdownKind> {
        let (x, m) = y.split_at(self.n);
        if let Some(kind) = classify(x, m) {
            return Err(kind);
        }
        Ok(DiscreteString::new(x.to_vec(), m.to_vec()).expect("classified as valid"))
    }

    fn eval(&self, y: &[f64]) -> std::result::Result<Vec<f64>, StageFailure> {
        let string = self.unpack(y).map_err(StageFailure::Invalid)?;
        let rhs = flow_rhs(&string, self.bc, self.spec).map_err(StageFailure::Setup)?;
        let mut out = rhs.dx;
        out.extend(rhs.dm);
        if out.iter().any(|v| !v.is_finite()) {
            return Err(StageFailure::Invalid(BreakdownKind::StepUnderflow));
        }
        Ok(out)
    }

    fn rk4(&self, y: &[f64], h: f64) -> std::result::Result<Vec<f64>, StageFailure> {
        let axpy = |a: &[f64], s: f64, k: &[f64]| -> Vec<f64> {
            a.iter().zip(k).map(|(a, k)| a + s * k).collect()
        };
        let k1 = self.eval(y)?;
        let k2 = self.eval(&axpy(y, 0.5 * h, &k1))?;
        let k3 = self.eval(&axpy(y, 0.5 * h, &k2))?;
        let k4 = self.eval(&axpy(y, h, &k3))?;
        Ok(y.iter()
            .enumerate()
            .map(|(i, yi)| yi + h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]))
            .collect())
    }
}

enum StageFailure {
    Invalid(BreakdownKind),
    Setup(Error),
}

/// Integrates from `t = 0` to `t_end` with classical RK4, step doubling for
/// the local error and per-stage field rebuilds. Returns the recorded
/// samples, starting with the initial state and ending at `t_end`.
pub fn integrate(
    string0: &DiscreteString<f64>,
    bc: &BoundaryConditions<f64>,
    spec: &FlowSpec<f64>,
    t_end: f64,
    options: &IntegratorOptions,
) -> std::result::Result<Vec<FlowState<f64>>, IntegrateError> {
    spec.validate()?;
    build_fields(string0, bc, spec)?;
    if options.dt.is_nan()
        || options.dt <= 0.0
        || t_end.is_nan()
        || t_end < 0.0
        || options.stride == 0
    {
        return Err(Error::InvalidFlow("need dt > 0, t_end >= 0 and stride >= 1").into());
    }
    let n = string0.len();
    let system = System { n, bc, spec };
    let mut y: Vec<f64> = string0
        .positions()
        .iter()
        .chain(string0.masses())
        .copied()
        .collect();
    let mut t = 0.0;
    let mut h = options.dt;
    let mut accepted = 0usize;
    let mut last_failure = BreakdownKind::StepUnderflow;
    let mut samples = vec![FlowState {
        t,
        string: string0.clone(),
    }];
    let breakdown = |kind, samples: &Vec<FlowState<f64>>, t: f64, y: &[f64]| {
        let last_good = FlowState {
            t,
            string: system.unpack(y).expect("accepted states are valid"),
        };
        let mut trajectory = samples.clone();
        if trajectory.last().map(|s| s.t) != Some(t) {
            trajectory.push(last_good.clone());
        }
        IntegrateError::Breakdown(Box::new(Breakdown {
            kind,
            last_good,
            trajectory,
        }))
    };

    while t < t_end {
        if accepted >= options.max_steps {
            return Err(breakdown(BreakdownKind::StepUnderflow, &samples, t, &y));
        }
        let step = h.min(t_end - t);
        if step < options.min_dt * t.abs().max(1.0) && t_end - t > step {
            return Err(breakdown(last_failure, &samples, t, &y));
        }
        let attempt = system.rk4(&y, step).and_then(|full| {
            let mid = system.rk4(&y, 0.5 * step)?;
            let fine = system.rk4(&mid, 0.5 * step)?;
            Ok((full, fine))
        });
        let (full, fine) = match attempt {
            Ok(pair) => pair,
            Err(StageFailure::Setup(e)) => return Err(e.into()),
            Err(StageFailure::Invalid(kind)) => {
                last_failure = kind;
                h = 0.5 * step;
                if h < options.min_dt * t.abs().max(1.0) {
                    return Err(breakdown(last_failure, &samples, t, &y));
                }
                continue;
            }
        };
        let err = full
            .iter()
            .zip(&fine)
            .map(|(a, b)| (a - b).abs() / b.abs().max(f64::MIN_POSITIVE))
            .fold(0.0, f64::max);
        if err <= options.tolerance {
            let candidate: Vec<f64> = fine
                .iter()
                .zip(&full)
                .map(|(f, c)| f + (f - c) / 15.0)
                .collect();
            if let Err(kind) = system.unpack(&candidate) {
                last_failure = kind;
                h = 0.5 * step;
                if h < options.min_dt * t.abs().max(1.0) {
                    return Err(breakdown(last_failure, &samples, t, &y));
                }
                continue;
            }
            y = candidate;
            t = if t_end - t <= step { t_end } else { t + step };
            accepted += 1;
            if accepted.is_multiple_of(options.stride) || t >= t_end {
                samples.push(FlowState {
                    t,
                    string: system.unpack(&y).expect("validated above"),
                });
            }
            let grow = if err > 0.0 {
                0.9 * (options.tolerance / err).powf(0.2)
            } else {
                2.0
            };
            h = step * grow.clamp(0.2, 2.0);
        } else {
            let shrink = 0.9 * (options.tolerance / err).powf(0.2);
            h = step * shrink.clamp(0.1, 0.9);
        }
    }
    Ok(samples)
}

/// Largest relative componentwise difference, with a unit floor on the scale
/// of each reference value below `floor`.
pub fn relative_drift(reference: &[f64], value: &[f64], floor: f64) -> f64 {
    reference
        .iter()
        .zip(value)
        .map(|(r, v)| (r - v).abs() / r.abs().max(floor))
        .fold(0.0, f64::max)
}
