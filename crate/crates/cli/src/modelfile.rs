//! JSON model files: parsing with key-path errors, and emission of built-in
//! scenarios in the same format.

use serde_json::{json, Map, Value};

use histories_core::linalg::{c64, C64, ComplexMatrix};
use histories_core::model::{ProjectorFamily, QuantumModel, StateOperator, StateVector, Step, TimeGrid};

use crate::error::CliError;

/// A parsed model file. `rho_final` is converted to the Heisenberg picture
/// at `t₀`; `psi_final` stays at the last grid time.
#[derive(Clone, Debug)]
pub struct ModelFile {
    pub model: QuantumModel,
    pub rho_final: Option<ComplexMatrix>,
    pub psi_final: Option<StateVector>,
}

fn parse_err(path: &str, msg: impl std::fmt::Display) -> CliError {
    CliError::Parse(format!("{path}: {msg}"))
}

fn invariant(path: &str, e: histories_core::Error) -> CliError {
    CliError::Invariant(format!("{path}: {e}"))
}

fn get<'a>(obj: &'a Map<String, Value>, key: &str) -> Option<&'a Value> {
    obj.get(key).filter(|v| !v.is_null())
}

fn as_object<'a>(v: &'a Value, path: &str) -> Result<&'a Map<String, Value>, CliError> {
    v.as_object().ok_or_else(|| parse_err(path, "expected an object"))
}

fn as_array<'a>(v: &'a Value, path: &str) -> Result<&'a Vec<Value>, CliError> {
    v.as_array().ok_or_else(|| parse_err(path, "expected an array"))
}

fn as_f64(v: &Value, path: &str) -> Result<f64, CliError> {
    v.as_f64()
        .filter(|x| x.is_finite())
        .ok_or_else(|| parse_err(path, "expected a finite number"))
}

fn as_usize(v: &Value, path: &str) -> Result<usize, CliError> {
    v.as_u64()
        .map(|x| x as usize)
        .ok_or_else(|| parse_err(path, "expected a nonnegative integer"))
}

/// `[re, im]`, or a bare number for a real entry.
fn parse_complex(v: &Value, path: &str) -> Result<C64, CliError> {
    if v.is_number() {
        return Ok(c64(as_f64(v, path)?, 0.0));
    }
    let pair = as_array(v, path)?;
    if pair.len() != 2 {
        return Err(parse_err(path, "complex numbers are [re, im] pairs"));
    }
    Ok(c64(as_f64(&pair[0], &format!("{path}[0]"))?, as_f64(&pair[1], &format!("{path}[1]"))?))
}

fn parse_vector(v: &Value, path: &str, dim: usize) -> Result<Vec<C64>, CliError> {
    let items = as_array(v, path)?;
    if items.len() != dim {
        return Err(parse_err(path, format!("expected {dim} entries, found {}", items.len())));
    }
    items
        .iter()
        .enumerate()
        .map(|(i, z)| parse_complex(z, &format!("{path}[{i}]")))
        .collect()
}

fn parse_matrix(v: &Value, path: &str, dim: usize) -> Result<ComplexMatrix, CliError> {
    let rows = as_array(v, path)?;
    if rows.len() != dim {
        return Err(parse_err(path, format!("expected {dim} rows, found {}", rows.len())));
    }
    let rows = rows
        .iter()
        .enumerate()
        .map(|(i, r)| parse_vector(r, &format!("{path}[{i}]"), dim))
        .collect::<Result<Vec<_>, _>>()?;
    ComplexMatrix::from_rows(&rows).map_err(|e| invariant(path, e))
}

/// A vector is an array of `[re, im]` pairs (or numbers); a matrix is an
/// array of such arrays.
fn is_matrix(v: &Value) -> bool {
    v.as_array()
        .and_then(|rows| rows.first())
        .and_then(Value::as_array)
        .and_then(|row| row.first())
        .is_some_and(Value::is_array)
}

/// `pure:<k>` selects basis vector `k`; with factors, `pure:<i>,<j>,…`
/// gives one index per factor.
fn parse_basis_expr(expr: &str, path: &str, dim: usize, factors: Option<&[usize]>) -> Result<usize, CliError> {
    let parts: Vec<&str> = expr.split(',').map(str::trim).collect();
    let idx = parts
        .iter()
        .map(|p| p.parse::<usize>().map_err(|_| parse_err(path, format!("bad basis index {p:?}"))))
        .collect::<Result<Vec<_>, _>>()?;
    let k = match (idx.as_slice(), factors) {
        ([k], _) => *k,
        (many, Some(f)) if many.len() == f.len() => {
            let mut k = 0;
            for (i, (&x, &d)) in many.iter().zip(f).enumerate() {
                if x >= d {
                    return Err(parse_err(path, format!("index {x} out of range for factor {i} of size {d}")));
                }
                k = k * d + x;
            }
            k
        }
        _ => return Err(parse_err(path, "expected one index, or one per declared factor")),
    };
    if k >= dim {
        return Err(parse_err(path, format!("basis index {k} out of range for dimension {dim}")));
    }
    Ok(k)
}

fn parse_state(v: &Value, path: &str, dim: usize, factors: Option<&[usize]>) -> Result<StateOperator, CliError> {
    if let Some(s) = v.as_str() {
        let expr = s
            .strip_prefix("pure:")
            .ok_or_else(|| parse_err(path, "named states have the form \"pure:<basis-expr>\""))?;
        return Ok(StateOperator::pure(StateVector::basis(dim, parse_basis_expr(expr, path, dim, factors)?)));
    }
    if is_matrix(v) {
        StateOperator::new(parse_matrix(v, path, dim)?).map_err(|e| invariant(path, e))
    } else {
        let psi = StateVector::new(parse_vector(v, path, dim)?).map_err(|e| invariant(path, e))?;
        Ok(StateOperator::pure(psi))
    }
}

fn parse_projector(v: &Value, path: &str, dim: usize) -> Result<(String, ComplexMatrix), CliError> {
    let obj = as_object(v, path)?;
    let label = get(obj, "label")
        .and_then(Value::as_str)
        .ok_or_else(|| parse_err(&format!("{path}.label"), "expected a string"))?
        .to_string();
    let matrix = match (get(obj, "matrix"), get(obj, "basis_indices")) {
        (Some(m), None) => parse_matrix(m, &format!("{path}.matrix"), dim)?,
        (None, Some(b)) => {
            let bpath = format!("{path}.basis_indices");
            let idx = as_array(b, &bpath)?
                .iter()
                .enumerate()
                .map(|(i, x)| as_usize(x, &format!("{bpath}[{i}]")))
                .collect::<Result<Vec<_>, _>>()?;
            let mut diag = vec![c64(0.0, 0.0); dim];
            for &k in &idx {
                if k >= dim {
                    return Err(parse_err(&bpath, format!("index {k} out of range for dimension {dim}")));
                }
                diag[k] = c64(1.0, 0.0);
            }
            ComplexMatrix::diagonal(&diag)
        }
        _ => return Err(parse_err(path, "give exactly one of \"matrix\" or \"basis_indices\"")),
    };
    Ok((label, matrix))
}

fn parse_family(v: &Value, path: &str, dim: usize) -> Result<ProjectorFamily, CliError> {
    let obj = as_object(v, path)?;
    let ti_path = format!("{path}.time_index");
    let ti = as_usize(get(obj, "time_index").ok_or_else(|| parse_err(&ti_path, "missing"))?, &ti_path)?;
    let ppath = format!("{path}.projectors");
    let members = as_array(get(obj, "projectors").ok_or_else(|| parse_err(&ppath, "missing"))?, &ppath)?
        .iter()
        .enumerate()
        .map(|(i, p)| parse_projector(p, &format!("{ppath}[{i}]"), dim))
        .collect::<Result<Vec<_>, _>>()?;
    ProjectorFamily::new(ti, members).map_err(|e| invariant(path, e))
}

fn parse_step(v: &Value, path: &str, dim: usize) -> Result<Step, CliError> {
    let obj = as_object(v, path)?;
    match (get(obj, "unitary"), get(obj, "generator")) {
        (Some(u), None) => Ok(Step::Unitary(parse_matrix(u, &format!("{path}.unitary"), dim)?)),
        (None, Some(h)) => {
            let hpath = format!("{path}.generator");
            let h = parse_matrix(h, &hpath, dim)?;
            let deviation = h.hermiticity_deviation();
            if deviation > histories_core::model::STATE_TOL {
                return Err(invariant(&hpath, histories_core::Error::NotHermitian { deviation }));
            }
            Ok(Step::Generator(h))
        }
        _ => Err(parse_err(path, "give exactly one of \"unitary\" or \"generator\"")),
    }
}

/// Parses and validates a model file.
pub fn parse_model_file(text: &str) -> Result<ModelFile, CliError> {
    let root: Value = serde_json::from_str(text)
        .map_err(|e| CliError::Parse(format!("line {}, column {}: {e}", e.line(), e.column())))?;
    let obj = as_object(&root, "$")?;

    let factors = match get(obj, "factors") {
        Some(f) => Some(
            as_array(f, "factors")?
                .iter()
                .enumerate()
                .map(|(i, x)| as_usize(x, &format!("factors[{i}]")))
                .collect::<Result<Vec<_>, _>>()?,
        ),
        None => None,
    };
    let dim = match (get(obj, "dim"), &factors) {
        (Some(d), f) => {
            let d = as_usize(d, "dim")?;
            if let Some(f) = f {
                if f.iter().product::<usize>() != d {
                    return Err(parse_err("factors", format!("{f:?} do not multiply to dim = {d}")));
                }
            }
            d
        }
        (None, Some(f)) => f.iter().product(),
        (None, None) => return Err(parse_err("$", "one of \"dim\" or \"factors\" is required")),
    };
    if dim == 0 {
        return Err(parse_err("dim", "must be positive"));
    }

    let state = parse_state(
        get(obj, "initial_state").ok_or_else(|| parse_err("initial_state", "missing"))?,
        "initial_state",
        dim,
        factors.as_deref(),
    )?;
    let times = as_array(get(obj, "grid").ok_or_else(|| parse_err("grid", "missing"))?, "grid")?
        .iter()
        .enumerate()
        .map(|(i, t)| as_f64(t, &format!("grid[{i}]")))
        .collect::<Result<Vec<_>, _>>()?;
    let steps = match get(obj, "steps") {
        Some(s) => as_array(s, "steps")?
            .iter()
            .enumerate()
            .map(|(i, st)| parse_step(st, &format!("steps[{i}]"), dim))
            .collect::<Result<Vec<_>, _>>()?,
        None => vec![Step::Unitary(ComplexMatrix::identity(dim)); times.len().saturating_sub(1)],
    };
    let grid = TimeGrid::new(times, steps).map_err(|e| invariant("grid", e))?;
    let families = match get(obj, "families") {
        Some(f) => as_array(f, "families")?
            .iter()
            .enumerate()
            .map(|(i, fam)| parse_family(fam, &format!("families[{i}]"), dim))
            .collect::<Result<Vec<_>, _>>()?,
        None => Vec::new(),
    };

    let mut model = QuantumModel::new(state, grid, families).map_err(|e| invariant("families", e))?;
    if let Some(c) = get(obj, "conjugation_basis") {
        let basis = parse_matrix(c, "conjugation_basis", dim)?;
        model = model.with_conjugation_basis(basis).map_err(|e| invariant("conjugation_basis", e))?;
    }
    if let Some(f) = factors {
        model = model.with_factors(f).map_err(|e| invariant("factors", e))?;
    }

    let w = model
        .cumulative(model.grid().last_index())
        .map_err(|e| invariant("grid", e))?
        .clone();
    let rho_final = match get(obj, "rho_final") {
        Some(r) => {
            let r = parse_matrix(r, "rho_final", dim)?;
            histories_core::engine::validate_final_operator(&r).map_err(|e| invariant("rho_final", e))?;
            Some(w.adjoint().matmul(&r).and_then(|x| x.matmul(&w)).map_err(|e| invariant("rho_final", e))?)
        }
        None => None,
    };
    let psi_final = match get(obj, "psi_final") {
        Some(p) => Some(StateVector::new(parse_vector(p, "psi_final", dim)?).map_err(|e| invariant("psi_final", e))?),
        None => None,
    };
    Ok(ModelFile {
        model,
        rho_final,
        psi_final,
    })
}

pub fn complex_json(z: C64) -> Value {
    json!([z.re, z.im])
}

pub fn vector_json(v: &[C64]) -> Value {
    Value::Array(v.iter().copied().map(complex_json).collect())
}

pub fn matrix_json(m: &ComplexMatrix) -> Value {
    Value::Array((0..m.rows()).map(|i| vector_json(m.row(i))).collect())
}

/// The model as a model file that parses back to the same model.
pub fn emit_model_file(model: &QuantumModel, psi_final: Option<&StateVector>) -> Value {
    let mut obj = Map::new();
    match model.factors() {
        Some(f) => obj.insert("factors".into(), json!(f)),
        None => obj.insert("dim".into(), json!(model.dim())),
    };
    let state = model.initial_state();
    let state_json = match state.vector() {
        Some(v) => vector_json(v.amplitudes()),
        None => matrix_json(state.matrix()),
    };
    obj.insert("initial_state".into(), state_json);
    if *model.conjugation_basis() != ComplexMatrix::identity(model.dim()) {
        obj.insert("conjugation_basis".into(), matrix_json(model.conjugation_basis()));
    }
    obj.insert("grid".into(), json!(model.grid().times()));
    obj.insert(
        "steps".into(),
        Value::Array(model.grid().steps().iter().map(|u| json!({ "unitary": matrix_json(u) })).collect()),
    );
    obj.insert(
        "families".into(),
        Value::Array(
            model
                .families()
                .iter()
                .map(|fam| {
                    json!({
                        "time_index": fam.time_index(),
                        "projectors": fam
                            .members()
                            .iter()
                            .map(|p| json!({ "label": p.label, "matrix": matrix_json(&p.matrix) }))
                            .collect::<Vec<_>>(),
                    })
                })
                .collect(),
        ),
    );
    if let Some(psi) = psi_final {
        obj.insert("psi_final".into(), vector_json(psi.amplitudes()));
    }
    Value::Object(obj)
}
