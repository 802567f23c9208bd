//! JSON file formats.
//!
//! Instance:
//! `{"format":1,"k":3,"l":4,"vertices":[{"id":0,"altruist":true}],"arcs":[{"from":0,"to":1,"w":1.0}]}`
//!
//! Solution:
//! `{"format":1,"objective":..,"upper_bound":..,"gap":..,"status":"OptimalLP",
//!   "timings":{..},"chosen":[{"kind":"chain","vertices":[..],"weight":..}]}`

use std::collections::BTreeMap;
use std::path::Path;

use serde_json::{json, Value};

use super::{CompatArc, CompatibilityInstance, KepSolution, SolveStatus, VertexId};
use crate::error::{KepError, Result};
use crate::jsonio::{
    as_array, as_bool, as_f64, as_object, as_uint, check_format, field, parse_json, read_text,
    write_text, FORMAT_VERSION,
};
use crate::exchange::{Exchange, ExchangeKind};

pub fn instance_to_json(inst: &CompatibilityInstance) -> String {
    let vertices: Vec<Value> = inst
        .vertices()
        .map(|v| json!({"id": v.0, "altruist": inst.is_altruist(v)}))
        .collect();
    let arcs: Vec<Value> = inst
        .arcs()
        .iter()
        .map(|a| json!({"from": a.from.0, "to": a.to.0, "w": a.weight}))
        .collect();
    let doc = json!({
        "format": FORMAT_VERSION,
        "k": inst.max_cycle(),
        "l": inst.max_chain(),
        "vertices": vertices,
        "arcs": arcs,
    });
    serde_json::to_string_pretty(&doc).expect("serializable")
}

pub fn instance_from_json(text: &str) -> Result<CompatibilityInstance> {
    let doc = parse_json(text)?;
    let obj = as_object(&doc, "<root>")?;
    check_format(obj)?;
    let k = as_uint(field(obj, "k", "")?, "k")? as usize;
    let l = as_uint(field(obj, "l", "")?, "l")? as usize;
    let vertices = as_array(field(obj, "vertices", "")?, "vertices")?;
    let mut altruist: Vec<Option<bool>> = vec![None; vertices.len()];
    for (i, v) in vertices.iter().enumerate() {
        let path = format!("vertices[{i}].");
        let vo = as_object(v, &format!("vertices[{i}]"))?;
        let id = as_uint(field(vo, "id", &path)?, &format!("{path}id"))? as usize;
        let alt = as_bool(field(vo, "altruist", &path)?, &format!("{path}altruist"))?;
        if id >= altruist.len() {
            return Err(KepError::Validation(format!(
                "vertex id {id} is not dense (expected ids 0..{})",
                altruist.len()
            )));
        }
        if altruist[id].replace(alt).is_some() {
            return Err(KepError::Validation(format!("duplicate vertex id {id}")));
        }
    }
    let altruist: Vec<bool> = altruist.into_iter().map(|a| a.unwrap_or(false)).collect();
    let arcs_v = as_array(field(obj, "arcs", "")?, "arcs")?;
    let mut arcs = Vec::with_capacity(arcs_v.len());
    for (i, a) in arcs_v.iter().enumerate() {
        let path = format!("arcs[{i}].");
        let ao = as_object(a, &format!("arcs[{i}]"))?;
        let from = as_uint(field(ao, "from", &path)?, &format!("{path}from"))?;
        let to = as_uint(field(ao, "to", &path)?, &format!("{path}to"))?;
        let w = as_f64(field(ao, "w", &path)?, &format!("{path}w"))?;
        arcs.push(CompatArc {
            from: VertexId(from as u32),
            to: VertexId(to as u32),
            weight: w,
        });
    }
    CompatibilityInstance::new(altruist, arcs, k, l)
}

pub fn load_instance(path: impl AsRef<Path>) -> Result<CompatibilityInstance> {
    instance_from_json(&read_text(path.as_ref())?)
}

pub fn save_instance(inst: &CompatibilityInstance, path: impl AsRef<Path>) -> Result<()> {
    write_text(path.as_ref(), &instance_to_json(inst))
}

pub fn solution_to_json(sol: &KepSolution) -> String {
    let chosen: Vec<Value> = sol
        .chosen
        .iter()
        .map(|e| {
            let kind = match e.kind() {
                ExchangeKind::Cycle => "cycle",
                ExchangeKind::Chain => "chain",
            };
            let vs: Vec<u32> = e.vertices().iter().map(|v| v.0).collect();
            json!({"kind": kind, "vertices": vs, "weight": e.weight()})
        })
        .collect();
    let doc = json!({
        "format": FORMAT_VERSION,
        "objective": sol.objective,
        "upper_bound": sol.upper_bound,
        "gap": sol.gap,
        "status": sol.status.to_string(),
        "timings": sol.timings,
        "chosen": chosen,
    });
    serde_json::to_string_pretty(&doc).expect("serializable")
}

/// Reads a solution file, re-validating every exchange against `inst`.
pub fn solution_from_json(inst: &CompatibilityInstance, text: &str) -> Result<KepSolution> {
    let doc = parse_json(text)?;
    let obj = as_object(&doc, "<root>")?;
    check_format(obj)?;
    let upper_bound = as_f64(field(obj, "upper_bound", "")?, "upper_bound")?;
    let status = match field(obj, "status", "")?.as_str() {
        Some("OptimalLP") => SolveStatus::OptimalLP,
        Some("UpperBoundOnly") => SolveStatus::UpperBoundOnly,
        Some("TimeLimit") => SolveStatus::TimeLimit,
        _ => return Err(KepError::parse("status", "unknown status")),
    };
    let mut timings = BTreeMap::new();
    if let Some(t) = obj.get("timings") {
        for (k, v) in as_object(t, "timings")? {
            timings.insert(k.clone(), as_f64(v, &format!("timings.{k}"))?);
        }
    }
    let mut chosen = Vec::new();
    for (i, e) in as_array(field(obj, "chosen", "")?, "chosen")?.iter().enumerate() {
        let path = format!("chosen[{i}].");
        let eo = as_object(e, &format!("chosen[{i}]"))?;
        let vs: Vec<VertexId> = as_array(field(eo, "vertices", &path)?, &format!("{path}vertices"))?
            .iter()
            .map(|v| as_uint(v, &format!("{path}vertices")).map(|x| VertexId(x as u32)))
            .collect::<Result<_>>()?;
        let ex = match field(eo, "kind", &path)?.as_str() {
            Some("cycle") => Exchange::cycle(inst, &vs)?,
            Some("chain") => Exchange::chain(inst, &vs)?,
            _ => return Err(KepError::parse(format!("{path}kind"), "expected cycle or chain")),
        };
        chosen.push(ex);
    }
    KepSolution::new(chosen, upper_bound, status, timings)
}

pub fn save_solution(sol: &KepSolution, path: impl AsRef<Path>) -> Result<()> {
    write_text(path.as_ref(), &solution_to_json(sol))
}

pub fn load_solution(inst: &CompatibilityInstance, path: impl AsRef<Path>) -> Result<KepSolution> {
    solution_from_json(inst, &read_text(path.as_ref())?)
}
