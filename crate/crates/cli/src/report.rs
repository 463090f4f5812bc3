//! JSON documents and the trajectory CSV.

use std::io::Write;
use std::path::Path;

use isostring::flow::invariants_for;
use isostring::{eigenvalues, BoundaryConditions, FlowSpec, FlowState, Scalar};
use serde_json::{Map, Value};

use crate::error::CliError;

pub const SCHEMA_VERSION: u32 = 1;

/// A JSON object whose numbers are written as doubles, with the exact
/// rational values collected under `"exact"` on the rational backend.
pub struct Report {
    body: Map<String, Value>,
    exact: Map<String, Value>,
}

impl Report {
    pub fn document(command: &str, backend: &str) -> Self {
        let mut r = Self::object();
        r.value("schema_version", SCHEMA_VERSION.into());
        r.value("command", command.into());
        r.value("backend", backend.into());
        r
    }

    pub fn object() -> Self {
        Self {
            body: Map::new(),
            exact: Map::new(),
        }
    }

    pub fn value(&mut self, key: &str, v: Value) -> &mut Self {
        self.body.insert(key.into(), v);
        self
    }

    pub fn scalar<T: Scalar>(&mut self, key: &str, v: &T) -> &mut Self {
        self.body.insert(key.into(), v.to_f64().into());
        if T::EXACT {
            self.exact
                .insert(key.into(), v.to_rational().to_string().into());
        }
        self
    }

    pub fn list<T: Scalar>(&mut self, key: &str, v: &[T]) -> &mut Self {
        self.body
            .insert(key.into(), v.iter().map(|x| x.to_f64()).collect());
        if T::EXACT {
            self.exact.insert(
                key.into(),
                v.iter().map(|x| x.to_rational().to_string()).collect(),
            );
        }
        self
    }

    pub fn finish(mut self) -> Value {
        if !self.exact.is_empty() {
            self.body.insert("exact".into(), Value::Object(self.exact));
        }
        Value::Object(self.body)
    }
}

pub fn backend_name<T: Scalar>() -> &'static str {
    if T::EXACT {
        "rational"
    } else {
        "float"
    }
}

pub fn time_convention<T: Scalar>(spec: &FlowSpec<T>) -> &'static str {
    if spec.is_rescaled() {
        "rescaled"
    } else {
        "unrescaled"
    }
}

/// Writes `value` to `<out>/<name>` or, without an output directory, to
/// standard output.
pub fn emit_json(value: &Value, out: Option<&Path>, name: &str) -> Result<(), CliError> {
    let text = serde_json::to_string_pretty(value).expect("JSON values always serialise");
    match out {
        Some(dir) => {
            std::fs::create_dir_all(dir)?;
            std::fs::write(dir.join(name), text + "\n")?;
        }
        None => println!("{text}"),
    }
    Ok(())
}

pub fn csv_header(n: usize) -> Vec<String> {
    let mut h = vec!["t".to_string()];
    for prefix in ["x", "m", "z", "I"] {
        h.extend((1..=n).map(|i| format!("{prefix}{i}")));
    }
    h
}

/// One row per state: time, positions, masses, eigenvalues and invariants,
/// each with 17 significant digits.
pub fn write_trajectory<W: Write>(
    sink: W,
    states: &[FlowState<f64>],
    n: usize,
    bc: &BoundaryConditions<f64>,
    spec: &FlowSpec<f64>,
) -> Result<(), CliError> {
    let mut w = csv::Writer::from_writer(sink);
    w.write_record(csv_header(n))?;
    for state in states {
        let s = &state.string;
        let ev = eigenvalues(s, bc)?;
        let inv = invariants_for(s, bc, spec)?;
        let row = std::iter::once(&state.t)
            .chain(s.positions())
            .chain(s.masses())
            .chain(&ev)
            .chain(&inv)
            .map(|v| format!("{v:.16e}"));
        w.write_record(row)?;
    }
    w.flush()?;
    Ok(())
}
