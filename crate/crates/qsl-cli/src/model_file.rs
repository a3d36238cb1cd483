//! Model-file ingestion. The on-disk format is a single JSON object:
//!
//! ```json
//! {
//!   "kind": "isotropic",
//!   "gamma": 1.0,
//!   "n_qubits": 1,
//!   "bloch": [0.0, 0.0, 1.0],
//!   "hamiltonian": [[[0,0],[1,0]],[[1,0],[0,0]]],
//!   "gamma_op": ...,
//!   "jumps": [...],
//!   "initial_state": "plus"
//! }
//! ```
//!
//! Complex entries are `[re, im]` pairs; matrices are arrays of rows.
//! `initial_state` is either a named state or an explicit matrix. Which
//! fields are required or forbidden depends on `kind` and is enforced by
//! the model loader; this module only handles shape and syntax.

use std::fs;
use std::path::Path;

use serde_json::Value;

use qsl_core::linalg::{C64, CMatrix};
use qsl_core::models::{InitialStateSpec, ModelKind, ModelSpec};
use qsl_core::quantum::BlochState;
use qsl_core::{Error, Result};

const KNOWN_FIELDS: [&str; 8] = [
    "kind",
    "gamma",
    "n_qubits",
    "bloch",
    "hamiltonian",
    "gamma_op",
    "jumps",
    "initial_state",
];

pub fn parse_model_file(path: &Path, strict: bool) -> Result<ModelSpec> {
    let text = fs::read_to_string(path)
        .map_err(|e| Error::Model(format!("{}: {e}", path.display())))?;
    let value: Value = serde_json::from_str(&text)
        .map_err(|e| Error::Model(format!("{}: {e}", path.display())))?;
    parse_model_value(&value, strict)
}

pub fn parse_model_value(value: &Value, strict: bool) -> Result<ModelSpec> {
    let obj = value
        .as_object()
        .ok_or_else(|| Error::Model("model file must be a JSON object".into()))?;

    if strict {
        for key in obj.keys() {
            if !KNOWN_FIELDS.contains(&key.as_str()) {
                return Err(Error::Model(format!("unknown field '{key}'")));
            }
        }
    }

    let kind_name = obj
        .get("kind")
        .and_then(Value::as_str)
        .ok_or_else(|| Error::Model("missing or non-string field 'kind'".into()))?;
    let mut spec = ModelSpec::new(ModelKind::parse(kind_name)?);

    if let Some(v) = obj.get("gamma") {
        spec.gamma = Some(number_at(v, "gamma")?);
    }
    if let Some(v) = obj.get("n_qubits") {
        let n = v
            .as_u64()
            .ok_or_else(|| Error::Model("'n_qubits' must be a nonnegative integer".into()))?;
        spec.n_qubits = Some(n as usize);
    }
    if let Some(v) = obj.get("bloch") {
        let arr = v
            .as_array()
            .filter(|a| a.len() == 3)
            .ok_or_else(|| Error::Model("'bloch' must be an array of 3 numbers".into()))?;
        let r1 = number_at(&arr[0], "bloch[0]")?;
        let r2 = number_at(&arr[1], "bloch[1]")?;
        let r3 = number_at(&arr[2], "bloch[2]")?;
        spec.bloch = Some(BlochState::new(r1, r2, r3)?);
    }
    if let Some(v) = obj.get("hamiltonian") {
        spec.hamiltonian = Some(matrix_at(v, "hamiltonian")?);
    }
    if let Some(v) = obj.get("gamma_op") {
        spec.gamma_op = Some(matrix_at(v, "gamma_op")?);
    }
    if let Some(v) = obj.get("jumps") {
        let arr = v
            .as_array()
            .ok_or_else(|| Error::Model("'jumps' must be an array of matrices".into()))?;
        spec.jumps = arr
            .iter()
            .enumerate()
            .map(|(k, m)| matrix_at(m, &format!("jumps[{k}]")))
            .collect::<Result<Vec<_>>>()?;
    }
    if let Some(v) = obj.get("initial_state") {
        spec.initial_state = match v {
            Value::String(name) => InitialStateSpec::Named(name.clone()),
            Value::Array(_) => InitialStateSpec::Matrix(matrix_at(v, "initial_state")?),
            _ => {
                return Err(Error::Model(
                    "'initial_state' must be a state name or a matrix".into(),
                ))
            }
        };
    }
    Ok(spec)
}

fn number_at(v: &Value, context: &str) -> Result<f64> {
    v.as_f64()
        .filter(|x| x.is_finite())
        .ok_or_else(|| Error::Model(format!("'{context}' must be a finite number")))
}

fn complex_at(v: &Value, context: &str) -> Result<C64> {
    let pair = v
        .as_array()
        .filter(|a| a.len() == 2)
        .ok_or_else(|| Error::Model(format!("'{context}' must be an [re, im] pair")))?;
    Ok(C64::new(
        number_at(&pair[0], context)?,
        number_at(&pair[1], context)?,
    ))
}

fn matrix_at(v: &Value, context: &str) -> Result<CMatrix> {
    let rows = v
        .as_array()
        .filter(|a| !a.is_empty())
        .ok_or_else(|| Error::Model(format!("'{context}' must be a nonempty array of rows")))?;
    let width = rows[0].as_array().map(|r| r.len()).unwrap_or(0);
    if width == 0 {
        return Err(Error::Model(format!(
            "'{context}[0]' must be a nonempty array of [re, im] pairs"
        )));
    }
    let mut data = Vec::with_capacity(rows.len() * width);
    for (i, row) in rows.iter().enumerate() {
        let cells = row
            .as_array()
            .filter(|r| r.len() == width)
            .ok_or_else(|| {
                Error::Model(format!(
                    "'{context}[{i}]' must be an array of {width} entries"
                ))
            })?;
        for (j, cell) in cells.iter().enumerate() {
            data.push(complex_at(cell, &format!("{context}[{i}][{j}]"))?);
        }
    }
    CMatrix::new(rows.len(), width, data)
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    #[test]
    fn parses_an_isotropic_spec() {
        let spec = parse_model_value(
            &json!({"kind": "isotropic", "gamma": 1.0, "bloch": [0.0, 0.0, 1.0]}),
            true,
        )
        .unwrap();
        assert_eq!(spec.kind, ModelKind::Isotropic);
        assert_eq!(spec.gamma, Some(1.0));
        assert!((spec.bloch.unwrap().r3 - 1.0).abs() < 1e-15);
    }

    #[test]
    fn parses_nested_complex_matrices() {
        let spec = parse_model_value(
            &json!({
                "kind": "custom",
                "hamiltonian": [[[0.0, 0.0], [1.0, 0.0]], [[1.0, 0.0], [0.0, 0.0]]],
                "jumps": [[[[0.0, 0.0], [0.5, -0.5]], [[0.0, 0.0], [0.0, 0.0]]]]
            }),
            true,
        )
        .unwrap();
        let h = spec.hamiltonian.unwrap();
        assert_eq!(h.get(0, 1), C64::new(1.0, 0.0));
        assert_eq!(spec.jumps.len(), 1);
        assert_eq!(spec.jumps[0].get(0, 1), C64::new(0.5, -0.5));
    }

    #[test]
    fn strict_mode_rejects_unknown_fields_and_lax_mode_ignores_them() {
        let v = json!({"kind": "isotropic", "gamma": 1.0, "bloch": [0, 0, 1], "comment": "hi"});
        let err = parse_model_value(&v, true).unwrap_err();
        assert!(err.to_string().contains("comment"), "{err}");
        assert!(err.is_validation());
        assert!(parse_model_value(&v, false).is_ok());
    }

    #[test]
    fn shape_errors_carry_field_context() {
        let err = parse_model_value(
            &json!({"kind": "custom", "hamiltonian": [[[0.0, 0.0]], [[0.0, 0.0], [1.0, 0.0]]]}),
            false,
        )
        .unwrap_err();
        assert!(err.to_string().contains("hamiltonian[1]"), "{err}");

        let err = parse_model_value(
            &json!({"kind": "custom", "hamiltonian": [[[0.0], [1.0, 0.0]]]}),
            false,
        )
        .unwrap_err();
        assert!(err.to_string().contains("hamiltonian[0][0]"), "{err}");
    }

    #[test]
    fn bloch_norm_violations_surface_as_validation_errors() {
        let err = parse_model_value(
            &json!({"kind": "isotropic", "gamma": 1.0, "bloch": [1.0, 1.0, 1.0]}),
            true,
        )
        .unwrap_err();
        assert!(err.is_validation());
    }
}
