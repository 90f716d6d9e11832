//! One function per subcommand. Each builds a JSON report, writes it and
//! returns the exit code.

use std::fs;
use std::io::{self, Write};
use std::path::Path;
use std::time::Instant;

use log::info;
use serde_json::{json, Map, Value};

use histories_core::engine::{
    both_conditions_theorem_check, candidate_probability_backwards, check_decoherence, check_two_state,
    normalization, page_symmetric_cosmology_check, Classification, DecoherenceReport, Direction, PageOutcome,
    Strength, TolerancePolicy,
};
use histories_core::linalg::ComplexMatrix;
use histories_core::model::{QuantumModel, StateOperator, StateVector};
use histories_core::records::{construct_records, pure_state, strong_decoherence_iff_orthogonality};
use histories_core::scenarios::{
    abl_table, analyze_recoherence, build_scenario, fidelity_with, recoherence_scenario, reverse_collapse_chain,
    SCENARIOS,
};

use crate::error::{CliError, EXIT_DECOHERENT, EXIT_INVARIANT, EXIT_NOT_DECOHERENT};
use crate::modelfile::{emit_model_file, matrix_json, parse_model_file};
use crate::report::{combine, decoherence_json, exit_code, history_labels, labelled_table, tolerance_json};
use crate::{DirectionArgs, InputArgs, OutputArgs, StrengthArg};

/// A model with its optional final data and a description of its source.
struct Loaded {
    model: QuantumModel,
    rho_final: Option<ComplexMatrix>,
    psi_final: Option<StateVector>,
    source: Value,
    seed: Option<u64>,
}

fn load(input: &InputArgs) -> Result<Loaded, CliError> {
    match (&input.model, &input.scenario) {
        (Some(path), None) => {
            if !input.params.is_empty() {
                return Err(CliError::Parse("scenario parameters need --scenario".into()));
            }
            let text = fs::read_to_string(path).map_err(|e| match e.kind() {
                io::ErrorKind::NotFound => CliError::NoInput(format!("{}: file not found", path.display())),
                _ => CliError::Io(format!("{}: {e}", path.display())),
            })?;
            let file = parse_model_file(&text)?;
            info!("loaded {} (dimension {})", path.display(), file.model.dim());
            Ok(Loaded {
                model: file.model,
                rho_final: file.rho_final,
                psi_final: file.psi_final,
                source: json!({ "model": path.display().to_string() }),
                seed: input.seed,
            })
        }
        (None, Some(name)) => {
            let s = build_scenario(name, &input.params, input.seed)?;
            info!("built scenario {name} (dimension {})", s.model.dim());
            Ok(Loaded {
                model: s.model,
                rho_final: None,
                psi_final: s.psi_final,
                source: json!({ "scenario": name, "params": input.params }),
                seed: s.seed,
            })
        }
        _ => Err(CliError::NoInput("give --model <path> or --scenario <name>".into())),
    }
}

fn write_output(value: &Value, out: Option<&Path>) -> Result<(), CliError> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| CliError::Io(e.to_string()))?;
    text.push('\n');
    match out {
        Some(path) => fs::write(path, text).map_err(|e| CliError::Io(format!("{}: {e}", path.display()))),
        None => io::stdout()
            .write_all(text.as_bytes())
            .map_err(|e| CliError::Io(e.to_string())),
    }
}

/// Adds the shared header fields and writes the report.
fn finish(
    name: &str,
    mut command: Map<String, Value>,
    mut body: Map<String, Value>,
    loaded: &Loaded,
    output: &OutputArgs,
    start: Instant,
) -> Result<(), CliError> {
    command.insert("name".into(), json!(name));
    body.insert("command".into(), Value::Object(command));
    body.insert("input".into(), loaded.source.clone());
    body.insert("seed".into(), json!(loaded.seed));
    body.insert("tolerance".into(), tolerance_json(output.tolerance()?));
    if output.timing {
        body.insert("timing_ms".into(), json!(start.elapsed().as_secs_f64() * 1e3));
    }
    write_output(&Value::Object(body), output.out.as_deref())
}

fn strength(s: StrengthArg) -> Strength {
    match s {
        StrengthArg::Weak => Strength::Weak,
        StrengthArg::Strong => Strength::Strong,
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Mode {
    Forwards,
    Backwards,
    Both,
    TwoState,
}

impl Mode {
    fn from_args(d: DirectionArgs) -> Self {
        if d.backwards {
            Mode::Backwards
        } else if d.both {
            Mode::Both
        } else if d.two_state {
            Mode::TwoState
        } else {
            Mode::Forwards
        }
    }

    fn name(self) -> &'static str {
        match self {
            Mode::Forwards => "forwards",
            Mode::Backwards => "backwards",
            Mode::Both => "both",
            Mode::TwoState => "two_state",
        }
    }
}

fn require_rho_final(loaded: &Loaded) -> Result<&ComplexMatrix, CliError> {
    loaded
        .rho_final
        .as_ref()
        .ok_or_else(|| CliError::NoInput("two-state functionals need rho_final in the model file".into()))
}

type SectionReports = Vec<(&'static str, DecoherenceReport)>;

/// The reports for `mode`, keyed by section name, and the combined classification.
fn run_checks(
    loaded: &Loaded,
    mode: Mode,
    s: Strength,
    tol: TolerancePolicy,
) -> Result<(SectionReports, Classification), CliError> {
    let m = &loaded.model;
    let reports = match mode {
        Mode::Forwards => vec![("forwards", check_decoherence(m, Direction::Forwards, s, tol)?)],
        Mode::Backwards => vec![("backwards", check_decoherence(m, Direction::Backwards, s, tol)?)],
        Mode::Both => vec![
            ("forwards", check_decoherence(m, Direction::Forwards, s, tol)?),
            ("backwards", check_decoherence(m, Direction::Backwards, s, tol)?),
        ],
        Mode::TwoState => {
            let rho_f = require_rho_final(loaded)?;
            vec![("two_state", check_two_state(m, m.initial_state(), rho_f, s, tol)?)]
        }
    };
    let classification = combine(&reports.iter().map(|(_, r)| r.classification).collect::<Vec<_>>());
    Ok((reports, classification))
}

pub fn check(input: &InputArgs, d: DirectionArgs, s: StrengthArg, output: &OutputArgs) -> Result<u8, CliError> {
    let start = Instant::now();
    let loaded = load(input)?;
    let tol = output.tolerance()?;
    let mode = Mode::from_args(d);
    let (reports, classification) = run_checks(&loaded, mode, strength(s), tol)?;
    let mut body = Map::new();
    for (key, r) in &reports {
        body.insert((*key).into(), decoherence_json(r));
    }
    if mode == Mode::Both {
        let t = both_conditions_theorem_check(&loaded.model, tol)?;
        body.insert(
            "both_conditions".into(),
            json!({
                "applicable": t.applicable,
                "holds": t.holds,
                "max_difference": t.max_difference,
                "trace_forms": labelled_table(&t.labels, &t.trace_forms, "re_tr_l_rho"),
            }),
        );
    }
    if mode == Mode::TwoState {
        let n = normalization(loaded.model.initial_state(), require_rho_final(&loaded)?)?;
        body.insert("normalization".into(), json!(n));
    }
    body.insert("classification".into(), json!(classification.to_string()));
    let mut command = Map::new();
    command.insert("direction".into(), json!(mode.name()));
    command.insert("strength".into(), json!(format!("{s:?}").to_lowercase()));
    finish("check", command, body, &loaded, output, start)?;
    Ok(exit_code(classification))
}

pub fn probs(input: &InputArgs, d: DirectionArgs, output: &OutputArgs) -> Result<u8, CliError> {
    let start = Instant::now();
    let loaded = load(input)?;
    let tol = output.tolerance()?;
    let mode = Mode::from_args(d);
    let (reports, classification) = run_checks(&loaded, mode, Strength::Weak, tol)?;
    let mut body = Map::new();
    for (key, r) in &reports {
        body.insert(
            (*key).into(),
            json!({
                "classification": r.classification.to_string(),
                "candidate_probabilities": labelled_table(&r.labels, &r.diagonal, "p"),
                "probabilities": r.probabilities.as_ref().map(|p| labelled_table(&r.labels, p, "p")),
            }),
        );
    }
    body.insert("classification".into(), json!(classification.to_string()));
    let mut command = Map::new();
    command.insert("direction".into(), json!(mode.name()));
    finish("probs", command, body, &loaded, output, start)?;
    Ok(exit_code(classification))
}

pub fn abl(input: &InputArgs, output: &OutputArgs) -> Result<u8, CliError> {
    let start = Instant::now();
    let loaded = load(input)?;
    let psi_f = loaded
        .psi_final
        .as_ref()
        .ok_or_else(|| CliError::NoInput("abl needs psi_final (model file key or spin-post scenario)".into()))?;
    let psi_i = pure_state(&loaded.model)?;
    let table = abl_table(&psi_i, psi_f, &loaded.model)?;
    let histories: Vec<_> = table.iter().map(|(h, _)| h.clone()).collect();
    let values: Vec<f64> = table.iter().map(|(_, p)| *p).collect();
    let mut body = Map::new();
    body.insert(
        "probabilities".into(),
        labelled_table(&history_labels(&loaded.model, &histories), &values, "p"),
    );
    body.insert("sum".into(), json!(values.iter().sum::<f64>()));
    finish("abl", Map::new(), body, &loaded, output, start)?;
    Ok(EXIT_DECOHERENT)
}

pub fn records(input: &InputArgs, time_index: Option<usize>, output: &OutputArgs) -> Result<u8, CliError> {
    let start = Instant::now();
    let loaded = load(input)?;
    let tol = output.tolerance()?;
    let model = &loaded.model;
    let psi = pure_state(model)?;
    let iff = strong_decoherence_iff_orthogonality(model, &psi, tol)?;
    let ti = time_index.unwrap_or(model.grid().last_index());
    let rec = construct_records(model, &psi, ti, tol)?;
    let entries: Vec<Value> = rec
        .histories
        .iter()
        .enumerate()
        .map(|(i, _)| {
            json!({
                "history": rec.labels[i],
                "record": rec.record_label(i),
                "probability": rec.probabilities[i],
                "projector": matrix_json(&rec.projections[i]),
            })
        })
        .collect();
    let truncations: Vec<Value> = iff
        .truncations
        .iter()
        .map(|t| {
            json!({
                "families": t.families,
                "max_overlap_ratio": t.max_overlap_ratio,
                "orthogonal": t.orthogonal,
                "strong": t.strong.to_string(),
                "agree": t.agree,
            })
        })
        .collect();
    let mut body = Map::new();
    body.insert("time_index".into(), json!(ti));
    body.insert("records".into(), Value::Array(entries));
    body.insert(
        "correlation".into(),
        json!({
            "rows": rec.labels.iter().map(|l| l.join(",")).collect::<Vec<_>>(),
            "matrix": rec.correlation,
            "max_error": rec.correlation_error,
        }),
    );
    body.insert("perfectly_correlated".into(), json!(rec.is_perfectly_correlated()));
    body.insert("orthogonality".into(), json!({ "agree": iff.agree, "truncations": truncations }));
    body.insert("residual_rank_trace".into(), json!(rec.residual.trace()?.re));
    let mut command = Map::new();
    command.insert("time_index".into(), json!(ti));
    finish("records", command, body, &loaded, output, start)?;
    Ok(if rec.is_perfectly_correlated() {
        EXIT_DECOHERENT
    } else {
        EXIT_NOT_DECOHERENT
    })
}

pub fn reverse(input: &InputArgs, output: &OutputArgs) -> Result<u8, CliError> {
    let start = Instant::now();
    let loaded = load(input)?;
    let model = &loaded.model;
    let last = model.grid().last_index();
    let (final_state, from) = match &loaded.psi_final {
        Some(psi) => (StateOperator::pure(psi.clone()), "psi_final"),
        None => (model.evolve_state(last)?, "evolved initial state"),
    };
    let trajectories = reverse_collapse_chain(model, &final_state)?;
    let reference = model.initial_state().pure_vector();
    let mut rows = Vec::with_capacity(trajectories.len());
    let mut max_difference: f64 = 0.0;
    for t in &trajectories {
        let fidelity = match (t.final_state(), &reference) {
            (Some(s), Some(r)) => Some(fidelity_with(s, r)?),
            _ => None,
        };
        let backwards = if loaded.psi_final.is_none() {
            let p = candidate_probability_backwards(model, &t.history)?;
            max_difference = max_difference.max((p - t.probability).abs());
            Some(p)
        } else {
            None
        };
        rows.push((
            t.labels.clone(),
            json!({
                "history": t.labels,
                "probability": t.probability,
                "step_probabilities": t.step_probabilities,
                "fidelity_with_initial_state": fidelity,
                "backwards_candidate": backwards,
            }),
        ));
    }
    rows.sort_by(|a, b| a.0.cmp(&b.0));
    let mut body = Map::new();
    body.insert("final_state".into(), json!(from));
    body.insert("trajectories".into(), Value::Array(rows.into_iter().map(|(_, v)| v).collect()));
    body.insert(
        "sum".into(),
        json!(trajectories.iter().map(|t| t.probability).sum::<f64>()),
    );
    if loaded.psi_final.is_none() {
        body.insert("max_difference_from_backwards".into(), json!(max_difference));
    }
    finish("reverse", Map::new(), body, &loaded, output, start)?;
    Ok(EXIT_DECOHERENT)
}

pub fn recohere(input: &InputArgs, output: &OutputArgs) -> Result<u8, CliError> {
    let start = Instant::now();
    let loaded = load(input)?;
    let tol = output.tolerance()?;
    let times = loaded.model.grid().times();
    let (model, analysis, mirrored_here) = if times[times.len() - 1] <= 0.0 {
        let s = recoherence_scenario(&loaded.model, tol)?;
        (s.model, s.analysis, true)
    } else {
        let a = analyze_recoherence(&loaded.model, tol)?;
        (loaded.model.clone(), a, false)
    };
    let rows: Vec<Value> = analysis
        .purity
        .iter()
        .map(|p| {
            let interference = analysis.interference.iter().find(|q| q.index == p.index).map(|q| q.value);
            json!([p.index, p.time, p.value, interference])
        })
        .collect();
    let mut body = Map::new();
    body.insert("mirrored".into(), json!(mirrored_here));
    body.insert("grid".into(), json!(model.grid().times()));
    body.insert(
        "curve".into(),
        json!({ "columns": ["index", "time", "purity", "interference"], "rows": rows }),
    );
    body.insert("forwards".into(), json!(analysis.forwards.classification.to_string()));
    body.insert("backwards".into(), json!(analysis.backwards.classification.to_string()));
    body.insert(
        "reversed_backwards".into(),
        json!(analysis.reversed_backwards.classification.to_string()),
    );
    body.insert("mirror_error".into(), json!(analysis.mirror_error));
    body.insert("equivalent".into(), json!(analysis.equivalent));
    finish("recohere", Map::new(), body, &loaded, output, start)?;
    Ok(if analysis.equivalent {
        EXIT_DECOHERENT
    } else {
        EXIT_NOT_DECOHERENT
    })
}

pub fn page(input: &InputArgs, output: &OutputArgs) -> Result<u8, CliError> {
    let start = Instant::now();
    let loaded = load(input)?;
    let tol = output.tolerance()?;
    let model = &loaded.model;
    let (rho_f, source) = match &loaded.rho_final {
        Some(r) => (r.clone(), "model file"),
        None => (ComplexMatrix::identity(model.dim()), "identity"),
    };
    let r = page_symmetric_cosmology_check(model.initial_state(), &rho_f, model, tol)?;
    let code = match r.outcome {
        PageOutcome::Agree => EXIT_DECOHERENT,
        PageOutcome::Disagree => EXIT_NOT_DECOHERENT,
        PageOutcome::PreconditionFailed => EXIT_INVARIANT,
        PageOutcome::NotDecoherent => {
            let cs: Vec<Classification> = [&r.star, &r.doublestar]
                .into_iter()
                .flatten()
                .map(|x| x.classification)
                .collect();
            exit_code(combine(&cs))
        }
    };
    let mut body = Map::new();
    body.insert("rho_final".into(), json!(source));
    body.insert("outcome".into(), json!(format!("{:?}", r.outcome)));
    body.insert("failed_preconditions".into(), json!(r.failed_preconditions));
    body.insert("original".into(), r.star.as_ref().map_or(Value::Null, decoherence_json));
    body.insert("reversed".into(), r.doublestar.as_ref().map_or(Value::Null, decoherence_json));
    body.insert("max_difference".into(), json!(r.max_difference));
    finish("page", Map::new(), body, &loaded, output, start)?;
    Ok(code)
}

pub fn scenario_list(out: Option<&Path>) -> Result<u8, CliError> {
    let list: Vec<Value> = SCENARIOS
        .iter()
        .map(|s| json!({ "name": s.name, "summary": s.summary, "params": s.params }))
        .collect();
    write_output(&Value::Array(list), out)?;
    Ok(EXIT_DECOHERENT)
}

pub fn scenario_emit(name: &str, params: &[String], seed: Option<u64>, out: Option<&Path>) -> Result<u8, CliError> {
    let s = build_scenario(name, params, seed)?;
    write_output(&emit_model_file(&s.model, s.psi_final.as_ref()), out)?;
    Ok(EXIT_DECOHERENT)
}
