//! The estimator report: JSON written by `estimate`, read back by `reconstruct`.

use rwre::estimator::{
    classify_r_t_empirical, recurrence_diagnostic, same_site_successions, EmpiricalClassification, EstimatorState,
};
use rwre::{GroupElement, JumpSet, MultiIndex, Trajectory};
use serde_json::{json, Map, Value};

use crate::error::CliError;

fn history_json(n: &MultiIndex) -> Value {
    Value::Object(n.iter().map(|(g, k)| (g.to_string(), json!(k))).collect())
}

fn per_jump(jumps: &JumpSet, values: &[f64]) -> Value {
    Value::Object(jumps.iter().zip(values).map(|(g, v)| (g.to_string(), json!(v))).collect())
}

fn jump_list(set: &JumpSet) -> Value {
    Value::Array(set.iter().map(|g| json!(g.to_string())).collect())
}

pub fn classification_json(c: &EmpiricalClassification) -> Value {
    let evidence: Map<String, Value> = c.evidence.iter().map(|(g, n)| (g.to_string(), json!(n))).collect();
    json!({ "R": jump_list(&c.r), "T": jump_list(&c.t), "evidence": evidence })
}

pub fn estimate_report(traj: &Trajectory, state: &EstimatorState, min_count: usize) -> Value {
    let alphabet = state.alphabet();
    let histories: Vec<Value> = state
        .observed_histories(min_count)
        .iter()
        .map(|n| {
            let v = state.empirical_v::<f64>(n).expect("observed");
            json!({
                "history": history_json(n),
                "count": v.count,
                "V": per_jump(alphabet, &v.probs),
                "se": per_jump(alphabet, &v.standard_errors()),
            })
        })
        .collect();

    let rec = recurrence_diagnostic(traj);
    let succ = same_site_successions(traj);
    let mut successions = Map::new();
    for g in alphabet {
        for h in alphabet {
            let n = succ.get(&(g.clone(), h.clone())).copied().unwrap_or(0);
            successions.insert(format!("{g}->{h}"), json!(n));
        }
    }

    json!({
        "dim": traj.dim(),
        "source_length": state.source_length(),
        "min_count": min_count,
        "alphabet": jump_list(alphabet),
        "histories": histories,
        "classification": classification_json(&classify_r_t_empirical(traj)),
        "recurrence": {
            "revisit_fraction": rec.revisit_fraction,
            "max_visits": rec.max_visits,
            "distinct_sites": rec.distinct_sites,
        },
        "successions": successions,
    })
}

/// What `reconstruct` needs from a report.
#[derive(Clone, Debug, PartialEq)]
pub struct ParsedReport {
    pub alphabet: JumpSet,
    /// (history, stream length, V aligned with `alphabet`)
    pub histories: Vec<(MultiIndex, u64, Vec<f64>)>,
    pub r: JumpSet,
    pub t: JumpSet,
}

fn invalid(m: impl Into<String>) -> CliError {
    CliError::Validation(format!("report: {}", m.into()))
}

fn parse_jump(v: &Value) -> Result<GroupElement, CliError> {
    v.as_str().ok_or_else(|| invalid("jump must be a string"))?.parse().map_err(invalid)
}

fn parse_set(v: Option<&Value>) -> Result<JumpSet, CliError> {
    let items = v.and_then(Value::as_array).ok_or_else(|| invalid("expected a list of jumps"))?;
    JumpSet::new(items.iter().map(parse_jump).collect::<Result<Vec<_>, _>>()?).map_err(|e| invalid(e.to_string()))
}

pub fn parse_report(text: &str) -> Result<ParsedReport, CliError> {
    let root: Value = serde_json::from_str(text).map_err(|e| invalid(e.to_string()))?;
    let alphabet = parse_set(root.get("alphabet"))?;
    let class = root.get("classification").ok_or_else(|| invalid("missing classification"))?;
    let r = parse_set(class.get("R"))?;
    let t = parse_set(class.get("T"))?;
    let records = root.get("histories").and_then(Value::as_array).ok_or_else(|| invalid("missing histories"))?;
    let mut histories = Vec::with_capacity(records.len());
    for rec in records {
        let counts = rec.get("history").and_then(Value::as_object).ok_or_else(|| invalid("history must be an object"))?;
        let mut n = MultiIndex::new();
        for (g, k) in counts {
            let g: GroupElement = g.parse().map_err(invalid)?;
            let k = k.as_u64().and_then(|k| u32::try_from(k).ok()).ok_or_else(|| invalid("bad history count"))?;
            n.add(&g, k);
        }
        let count = rec.get("count").and_then(Value::as_u64).ok_or_else(|| invalid("missing count"))?;
        let v = rec.get("V").and_then(Value::as_object).ok_or_else(|| invalid("missing V"))?;
        let probs = alphabet
            .iter()
            .map(|g| v.get(&g.to_string()).and_then(Value::as_f64).ok_or_else(|| invalid(format!("V lacks {g}"))))
            .collect::<Result<Vec<_>, _>>()?;
        histories.push((n, count, probs));
    }
    Ok(ParsedReport { alphabet, histories, r, t })
}
