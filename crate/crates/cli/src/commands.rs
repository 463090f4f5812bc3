use std::path::PathBuf;

use isostring::fields::{beta, build_fields, BetaFunction};
use isostring::flow::invariants_for;
use isostring::liouville::map_state;
use isostring::scalar::convert;
use isostring::weyl::weyl_at_zero;
use isostring::{
    cf_expand, char_poly, eigenvalues, integrate, partial_fractions, FlowSpec, IntegrateError,
    InverseProblem, Rational, Scalar, Side,
};
use serde_json::Value;

use crate::config::ScenarioConfig;
use crate::error::CliError;
use crate::report::{backend_name, emit_json, time_convention, write_trajectory, Report};

/// Everything a subcommand needs besides the backend.
pub struct Context {
    pub config: ScenarioConfig,
    pub out: Option<PathBuf>,
    /// Times given with `--t`.
    pub times: Vec<Rational>,
}

impl Context {
    fn emit(&self, value: &Value, name: &str) -> Result<(), CliError> {
        emit_json(value, self.out.as_deref(), name)
    }
}

fn beta_report<T: Scalar>(b: &BetaFunction<T>) -> Value {
    let mut r = Report::object();
    r.scalar("constant", &b.constant);
    let (eps, coef): (Vec<T>, Vec<T>) = b.poles.iter().cloned().unzip();
    r.list("pole_epsilons", &eps)
        .list("pole_coefficients", &coef);
    r.finish()
}

pub fn spectrum<T: Scalar>(ctx: &Context) -> Result<(), CliError> {
    let s = ctx.config.scenario::<T>()?;
    let mut r = Report::document("spectrum", backend_name::<T>());
    r.value("n", s.string.len().into());
    r.list("eigenvalues", &eigenvalues(&s.string, &s.bc)?);
    r.list("char_poly", char_poly(&s.string, &s.bc).coeffs());
    r.scalar("wronskian", &s.bc.wronskian());
    r.value("time_convention", time_convention(&s.spec).into());
    r.list("invariants", &invariants_for(&s.string, &s.bc, &s.spec)?);
    ctx.emit(&r.finish(), "spectrum.json")
}

pub fn weyl<T: Scalar>(ctx: &Context) -> Result<(), CliError> {
    let s = ctx.config.scenario::<T>()?;
    let data = partial_fractions(&s.string, &s.bc)?;
    let cf = cf_expand(&s.string, &s.bc.left)?;
    let mut coefficients = Report::object();
    coefficients
        .scalar("last_length", &cf.last_length)
        .list("masses_top_down", &cf.masses)
        .list("lengths_top_down", &cf.lengths)
        .scalar("tail", &cf.tail);
    let mut r = Report::document("weyl", backend_name::<T>());
    r.value("continued_fraction", coefficients.finish());
    r.list("eigenvalues", &data.eigenvalues)
        .list("residues", &data.residues)
        .scalar("w_infinity", &data.w_infinity)
        .scalar("w_at_zero", &weyl_at_zero(&s.bc.left)?);
    ctx.emit(&r.finish(), "weyl.json")
}

pub fn fields<T: Scalar>(ctx: &Context) -> Result<(), CliError> {
    let s = ctx.config.scenario::<T>()?;
    let f = build_fields(&s.string, &s.bc, &s.spec)?;
    let n = ctx.config.run.grid - 1;
    let grid: Vec<T> = (0..=n).map(|k| T::ratio(k as i64, n as i64)).collect();
    let sample =
        |b: &isostring::PiecewisePoly<T>| grid.iter().map(|x| b.eval(x)).collect::<Vec<_>>();
    let poles: Vec<Value> = f
        .poles
        .iter()
        .map(|p| {
            let mut r = Report::object();
            r.scalar("epsilon", &p.epsilon)
                .list("values", &sample(&p.field));
            r.finish()
        })
        .collect();
    let mut r = Report::document("fields", backend_name::<T>());
    r.value("time_convention", time_convention(&s.spec).into());
    r.scalar("scale", &f.scale);
    r.list("x", &grid).list("b0", &sample(&f.b0));
    r.value("poles", poles.into());
    r.value("beta", beta_report(&beta(&f, &s.bc)));
    ctx.emit(&r.finish(), "fields.json")
}

/// Integrates on the float backend and writes the CSV trajectory. On a
/// breakdown the rows up to the last good state are still written.
pub fn evolve(ctx: &Context) -> Result<(), CliError> {
    let s = ctx.config.scenario::<f64>()?;
    let t_end = match ctx.times.last() {
        Some(t) => t.to_f64(),
        None => ctx.config.run.t_end,
    };
    if !(t_end.is_finite() && t_end > 0.0) {
        return Err(CliError::Usage(format!(
            "--t: end time must be positive, got {t_end}"
        )));
    }
    eprintln!("time convention: {}", time_convention(&s.spec));
    let (states, failure) = match integrate(
        &s.string,
        &s.bc,
        &s.spec,
        t_end,
        &ctx.config.integrator_options(),
    ) {
        Ok(states) => (states, None),
        Err(IntegrateError::Breakdown(b)) => {
            let message = b.to_string();
            (b.trajectory, Some(CliError::Breakdown(message)))
        }
        Err(IntegrateError::Setup(e)) => return Err(e.into()),
    };
    let n = s.string.len();
    match &ctx.out {
        Some(dir) => {
            std::fs::create_dir_all(dir)?;
            let file = std::fs::File::create(dir.join("trajectory.csv"))?;
            write_trajectory(file, &states, n, &s.bc, &s.spec)?;
        }
        None => write_trajectory(std::io::stdout().lock(), &states, n, &s.bc, &s.spec)?,
    }
    failure.map_or(Ok(()), Err)
}

pub fn invert<T: Scalar>(ctx: &Context) -> Result<(), CliError> {
    let s = ctx.config.scenario::<T>()?;
    let times: Vec<T> = if !ctx.times.is_empty() {
        ctx.times.iter().map(convert).collect()
    } else if !ctx.config.run.times.is_empty() {
        ctx.config.run.times.iter().map(|t| convert(&t.0)).collect()
    } else {
        vec![T::from_f64(ctx.config.run.t_end).expect("validated finite")]
    };
    let problem = InverseProblem::new(&s.string, &s.bc, &s.spec)?;
    let mut states = Vec::new();
    let mut failure = None;
    for t in &times {
        match problem.state_at(t) {
            Ok(state) => {
                let mut r = Report::object();
                r.scalar("t", &state.t)
                    .list("positions", state.string.positions())
                    .list("masses", state.string.masses())
                    .list("residues", &state.measure.residues)
                    .scalar("w_at_zero_defect", &state.measure.zero_defect()?);
                states.push(r.finish());
            }
            Err(e) => {
                failure = Some(CliError::from(e));
                break;
            }
        }
    }
    let mut r = Report::document("invert", backend_name::<T>());
    r.value("time_convention", time_convention(&s.spec).into());
    r.list("eigenvalues", &problem.data.eigenvalues);
    r.value("beta", beta_report(&problem.beta));
    r.value("states", states.into());
    if let Some(e) = &failure {
        r.value("error", e.to_string().into());
    }
    ctx.emit(&r.finish(), "invert.json")?;
    failure.map_or(Ok(()), Err)
}

pub fn liouville(ctx: &Context) -> Result<(), CliError> {
    let s = ctx.config.scenario::<f64>()?;
    let f = build_fields(&s.string, &s.bc, &s.spec)?;
    let line = map_state(&s.string, &f)?;
    let (range, n) = (ctx.config.run.zeta_range, ctx.config.run.grid - 1);
    let zeta: Vec<f64> = (0..=n)
        .map(|k| -range + 2.0 * range * k as f64 / n as f64)
        .collect();
    let u0: Vec<f64> = zeta
        .iter()
        .map(|z| line.u0(*z, Side::Right).value())
        .collect();
    let poles: Vec<Value> = (0..line.fields.poles.len())
        .map(|k| {
            zeta.iter()
                .map(|z| line.u_pole(k, *z, Side::Right).value())
                .collect()
        })
        .collect();
    let mut r = Report::document("liouville", "float");
    r.list("mass_positions", &line.zeta)
        .list("masses", &line.masses)
        .list("zeta", &zeta)
        .list("u0", &u0);
    r.value("u_poles", poles.into());
    if matches!(s.spec, FlowSpec::Limit { .. }) {
        let residuals: Vec<Value> = line
            .residuals()
            .into_iter()
            .map(|(a, b)| vec![a, b].into())
            .collect();
        r.value("jump_residuals", residuals.into());
    }
    ctx.emit(&r.finish(), "liouville.json")
}
