//! The property suite behind `isostring verify`.

use isostring::fields::{
    bc_residuals, beta, beta_closed_form, build_fields, k_diagnostic, FieldSet,
};
use isostring::flow::{invariants_for, lax_residuals, relative_drift};
use isostring::inverse::{euclidean_cf, proper_part_of_cf, reassemble};
use isostring::liouville::map_state;
use isostring::string::char_poly_transfer;
use isostring::weyl::require_weyl_family;
use isostring::{
    cf_expand, char_poly, eigenvalues, integrate, partial_fractions, Error, FlowSpec, FlowState,
    IntegrateError, InverseProblem, Scalar,
};
use serde_json::Value;

use crate::commands::Context;
use crate::config::Scenario;
use crate::error::CliError;
use crate::report::{backend_name, Report};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Status {
    Pass,
    Fail,
    Skipped,
}

impl Status {
    fn label(self) -> &'static str {
        match self {
            Self::Pass => "pass",
            Self::Fail => "fail",
            Self::Skipped => "skipped",
        }
    }
}

pub struct Outcome {
    pub name: &'static str,
    pub status: Status,
    pub detail: String,
}

fn check(name: &'static str, ok: bool, detail: String) -> Outcome {
    let status = if ok { Status::Pass } else { Status::Fail };
    Outcome {
        name,
        status,
        detail,
    }
}

fn skip(name: &'static str, reason: &str) -> Outcome {
    Outcome {
        name,
        status: Status::Skipped,
        detail: reason.to_string(),
    }
}

fn errored(name: &'static str, e: impl std::fmt::Display) -> Outcome {
    check(name, false, e.to_string())
}

/// Absolute size in `f64`.
fn mag<T: Scalar>(v: &T) -> f64 {
    v.to_f64().abs()
}

/// Exact zero on the rational backend, below `tol` otherwise.
fn vanishes<T: Scalar>(v: &T, tol: f64) -> bool {
    if T::EXACT {
        v.is_zero()
    } else {
        mag(v) <= tol
    }
}

struct Suite<'a, T> {
    s: Scenario<T>,
    fields: FieldSet<T>,
    zs: Vec<T>,
    tol: f64,
    ctx: &'a Context,
}

impl<T: Scalar> Suite<'_, T> {
    fn characteristic_polynomial(&self) -> Outcome {
        let name = "characteristic_polynomial";
        let additive = char_poly(&self.s.string, &self.s.bc);
        let transfer = char_poly_transfer(&self.s.string, &self.s.bc);
        let n = additive.coeffs().len().max(transfer.coeffs().len());
        let worst = (0..n)
            .map(|k| mag(&(additive.coeff(k) - transfer.coeff(k))))
            .fold(0.0, f64::max);
        let agree = if T::EXACT {
            additive == transfer
        } else {
            worst <= self.tol
        };
        let constant = additive.coeff(0) == self.s.bc.wronskian()
            || vanishes(&(additive.coeff(0) - self.s.bc.wronskian()), self.tol);
        check(
            name,
            agree && constant,
            format!("tuple sums vs transfer products differ by {worst:.2e}; constant term is the Wronskian: {constant}"),
        )
    }

    fn spectrum(&self) -> Outcome {
        let name = "simple_positive_spectrum";
        let ev = match eigenvalues(&self.s.string, &self.s.bc) {
            Ok(ev) => ev,
            Err(e) => return errored(name, e),
        };
        let nn = self.s.bc.is_neumann_neumann();
        let positive = ev.iter().enumerate().all(|(i, z)| {
            if nn && i == 0 {
                z.is_zero()
            } else {
                *z > T::zero()
            }
        });
        let increasing = ev.windows(2).all(|w| w[0] < w[1]);
        let p = char_poly(&self.s.string, &self.s.bc);
        // relative to the size of the terms, so large eigenvalues are fair
        let root_tol = if T::EXACT { 1e-40 } else { self.tol };
        let worst = ev
            .iter()
            .map(|z| {
                let lambda = -z.clone();
                let scale: f64 = p
                    .coeffs()
                    .iter()
                    .enumerate()
                    .map(|(k, c)| mag(c) * mag(&lambda).powi(k as i32))
                    .sum();
                mag(&p.eval(&lambda)) / scale.max(f64::MIN_POSITIVE)
            })
            .fold(0.0, f64::max);
        check(
            name,
            ev.len() == self.s.string.len() && positive && increasing && worst <= root_tol,
            format!(
                "{} eigenvalues, largest relative root residual {worst:.2e}",
                ev.len()
            ),
        )
    }

    fn boundary_conditions(&self) -> Outcome {
        let res = bc_residuals(&self.fields, &self.s.bc);
        let worst = res
            .iter()
            .map(|(a, b)| mag(a).max(mag(b)))
            .fold(0.0, f64::max);
        let ok = res
            .iter()
            .all(|(a, b)| vanishes(a, self.tol) && vanishes(b, self.tol));
        check(
            "boundary_conditions",
            ok,
            format!(
                "{} fields, largest endpoint residual {worst:.2e}",
                res.len()
            ),
        )
    }

    fn k_identity(&self) -> Outcome {
        let name = "k_identity";
        if matches!(self.s.spec, FlowSpec::TranslationInvariant) {
            return skip(
                name,
                "no K normalisation for the translation-invariant flow",
            );
        }
        let mut worst = 0.0f64;
        let mut ok = true;
        let mut used = 0;
        for z in &self.zs {
            match k_diagnostic(&self.fields, &self.s.bc, z) {
                Ok(k) => {
                    let d = k + T::one();
                    worst = worst.max(mag(&d));
                    ok &= vanishes(&d, self.tol);
                    used += 1;
                }
                Err(Error::BetaZero | Error::PoleAtZ) => {}
                Err(e) => return errored(name, e),
            }
        }
        if used == 0 {
            return skip(name, "beta vanishes at every sampled z");
        }
        check(
            name,
            ok,
            format!("{used} samples, largest |K + 1| = {worst:.2e}"),
        )
    }

    fn beta_closed_form(&self) -> Outcome {
        let name = "beta_closed_form";
        let direct = beta(&self.fields, &self.s.bc);
        match beta_closed_form(&self.s.string, &self.s.bc, &self.s.spec) {
            Ok(closed) => {
                let d = direct.distance(&closed);
                check(
                    name,
                    vanishes(&d, self.tol),
                    format!("largest coefficient difference {:.2e}", mag(&d)),
                )
            }
            Err(e) => errored(name, e),
        }
    }

    fn lax_residuals(&self) -> Outcome {
        let name = "lax_jump_residuals";
        let mut worst = 0.0f64;
        let mut ok = true;
        for z in &self.zs {
            match lax_residuals(&self.s.string, &self.fields, z) {
                Ok(res) => {
                    for (a, b) in res {
                        worst = worst.max(mag(&a)).max(mag(&b));
                        ok &= vanishes(&a, self.tol) && vanishes(&b, self.tol);
                    }
                }
                Err(Error::PoleAtZ) => {}
                Err(e) => return errored(name, e),
            }
        }
        check(
            name,
            ok,
            format!("{} z samples, largest residual {worst:.2e}", self.zs.len()),
        )
    }

    fn trajectory(&self) -> Result<(Vec<FlowState<f64>>, Option<String>), Outcome> {
        let string = self
            .s
            .string
            .convert()
            .map_err(|e| errored("integration", e))?;
        let bc = self.s.bc.convert();
        let options = self.ctx.config.integrator_options();
        match integrate(
            &string,
            &bc,
            &self.s.spec.convert(),
            self.ctx.config.run.t_end,
            &options,
        ) {
            Ok(t) => Ok((t, None)),
            Err(IntegrateError::Breakdown(b)) => {
                let note = b.to_string();
                Ok((b.trajectory, Some(note)))
            }
            Err(IntegrateError::Setup(e)) => Err(errored("integration", e)),
        }
    }

    fn conservation(&self, traj: &[FlowState<f64>], note: &Option<String>) -> [Outcome; 2] {
        let bc = self.s.bc.convert();
        let spec = self.s.spec.convert();
        let alarm = self.ctx.config.run.drift_alarm;
        let first = &traj[0].string;
        let (ev0, inv0) = match (eigenvalues(first, &bc), invariants_for(first, &bc, &spec)) {
            (Ok(a), Ok(b)) => (a, b),
            (Err(e), _) | (_, Err(e)) => {
                return [errored("isospectrality", &e), errored("invariants", &e)]
            }
        };
        let (mut worst_ev, mut worst_inv) = (0.0f64, 0.0f64);
        for state in traj {
            match (
                eigenvalues(&state.string, &bc),
                invariants_for(&state.string, &bc, &spec),
            ) {
                (Ok(ev), Ok(inv)) => {
                    worst_ev = worst_ev.max(relative_drift(&ev0, &ev, 1e-300));
                    worst_inv = worst_inv.max(relative_drift(&inv0, &inv, 1e-300));
                }
                (Err(e), _) | (_, Err(e)) => {
                    return [errored("isospectrality", &e), errored("invariants", &e)]
                }
            }
        }
        let horizon = format!(
            "to t = {}{}",
            traj.last().expect("nonempty").t,
            note.as_ref().map(|n| format!(" ({n})")).unwrap_or_default()
        );
        [
            check(
                "isospectrality",
                worst_ev < alarm,
                format!("largest relative eigenvalue drift {worst_ev:.2e} {horizon}"),
            ),
            check(
                "invariants",
                worst_inv < alarm,
                format!("largest relative invariant drift {worst_inv:.2e} {horizon}"),
            ),
        ]
    }

    fn weyl_checks(&self, traj: &[FlowState<f64>]) -> Vec<Outcome> {
        let names = [
            "continued_fraction_roundtrip",
            "weyl_value_at_zero",
            "integration_vs_inversion",
        ];
        if let Err(e) = require_weyl_family(&self.s.bc) {
            return names.iter().map(|n| skip(n, &e.to_string())).collect();
        }
        let mut out = Vec::new();

        let roundtrip = cf_expand(&self.s.string, &self.s.bc.left).and_then(|cf| {
            let (num, den) = proper_part_of_cf(&cf);
            reassemble(&euclidean_cf(&num, &den, &cf.tail)?)
        });
        out.push(match roundtrip {
            Ok(back) => {
                let (a, b) = (self.s.string.convert::<f64>(), back.convert::<f64>());
                let d = match (a, b) {
                    (Ok(a), Ok(b)) => relative_drift(a.positions(), b.positions(), 1.0)
                        .max(relative_drift(a.masses(), b.masses(), 1.0)),
                    _ => f64::INFINITY,
                };
                let ok = if T::EXACT {
                    back == self.s.string
                } else {
                    d <= self.tol
                };
                check(
                    names[0],
                    ok,
                    format!("largest coordinate difference {d:.2e}"),
                )
            }
            Err(e) => errored(names[0], e),
        });

        let last = traj.last().expect("nonempty");
        let problem = match InverseProblem::new(&self.s.string, &self.s.bc, &self.s.spec) {
            Ok(p) => p,
            Err(e) => {
                out.push(errored(names[1], &e));
                out.push(errored(names[2], &e));
                return out;
            }
        };
        let t_last = T::from_f64(last.t).expect("finite time");
        let states = [T::zero(), t_last].map(|t| problem.state_at(&t));

        let zero_tol: f64 = if T::EXACT { 1e-40 } else { self.tol };
        let defects: Result<Vec<f64>, Error> = std::iter::once(
            partial_fractions(&self.s.string, &self.s.bc)
                .and_then(|d| d.zero_defect())
                .map(|d| mag(&d)),
        )
        .chain(states.iter().map(|s| match s {
            Ok(s) => s.measure.zero_defect().map(|d| mag(&d)),
            Err(e) => Err(e.clone()),
        }))
        .collect();
        out.push(match defects {
            Ok(d) => {
                let worst = d.iter().copied().fold(0.0, f64::max);
                check(
                    names[1],
                    worst <= zero_tol,
                    format!("largest |W(0) - W0| over initial, reconstructed and evolved data {worst:.2e}"),
                )
            }
            Err(e) => errored(names[1], e),
        });

        out.push(match &states[1] {
            Ok(exact) => match exact.string.convert::<f64>() {
                Ok(exact) => {
                    let d = relative_drift(exact.positions(), last.string.positions(), 1.0)
                        .max(relative_drift(exact.masses(), last.string.masses(), 1.0));
                    check(
                        names[2],
                        d <= self.ctx.config.run.agreement,
                        format!("largest coordinate difference {d:.2e} at t = {}", last.t),
                    )
                }
                Err(e) => errored(names[2], e),
            },
            Err(e) => errored(names[2], e),
        });
        out
    }

    fn liouville(&self) -> Outcome {
        let name = "liouville_jump_residuals";
        if !matches!(self.s.spec, FlowSpec::Limit { .. }) {
            return skip(name, "only defined for the limit flow");
        }
        let result = self.s.string.convert::<f64>().and_then(|s| {
            let f = build_fields(&s, &self.s.bc.convert(), &self.s.spec.convert())?;
            map_state(&s, &f)
        });
        match result {
            Ok(line) => {
                let worst = line
                    .residuals()
                    .iter()
                    .map(|(a, b)| a.abs().max(b.abs()))
                    .fold(0.0, f64::max);
                check(
                    name,
                    worst <= self.ctx.config.run.residual_tolerance,
                    format!("largest residual {worst:.2e}"),
                )
            }
            Err(e) => errored(name, e),
        }
    }
}

pub fn run<T: Scalar>(ctx: &Context) -> Result<Vec<Outcome>, CliError> {
    let s = ctx.config.scenario::<T>()?;
    let fields = build_fields(&s.string, &s.bc, &s.spec)?;
    let suite = Suite {
        zs: ctx.config.z_samples(),
        tol: ctx.config.run.residual_tolerance,
        s,
        fields,
        ctx,
    };
    let mut out = vec![
        suite.characteristic_polynomial(),
        suite.spectrum(),
        suite.boundary_conditions(),
        suite.k_identity(),
        suite.beta_closed_form(),
        suite.lax_residuals(),
    ];
    match suite.trajectory() {
        Ok((traj, note)) => {
            out.extend(suite.conservation(&traj, &note));
            out.extend(suite.weyl_checks(&traj));
        }
        Err(failure) => out.push(failure),
    }
    out.push(suite.liouville());
    Ok(out)
}

pub fn verify<T: Scalar>(ctx: &Context) -> Result<(), CliError> {
    let outcomes = run::<T>(ctx)?;
    let mut r = Report::document("verify", backend_name::<T>());
    let props: Vec<Value> = outcomes
        .iter()
        .map(|o| {
            eprintln!("{:<8} {}: {}", o.status.label(), o.name, o.detail);
            serde_json::json!({"name": o.name, "status": o.status.label(), "detail": o.detail})
        })
        .collect();
    let failed = outcomes.iter().filter(|o| o.status == Status::Fail).count();
    r.value("passed", (failed == 0).into());
    r.value("properties", props.into());
    crate::report::emit_json(&r.finish(), ctx.out.as_deref(), "verify.json")?;
    if failed > 0 {
        return Err(CliError::VerifyFailed {
            failed,
            total: outcomes.len(),
        });
    }
    Ok(())
}
