//! EMPPLC instance files:
//! `{"format":1,"l":4,"num_vertices":7,"source_arcs":[{"to":0,"c":0.0}],"arcs":[{"from":0,"to":2,"c":-1.0}]}`.
//! `num_vertices` is optional; without it the vertex count is one more than
//! the largest id mentioned. An optional `"duals"` array carries the dual
//! values the costs were built from (used by dual-guided ng-sets).

use std::path::Path;

use serde_json::{json, Value};

use crate::error::{KepError, Result};
use crate::graph::{DualVector, PricingGraph};
use crate::jsonio::{
    as_array, as_f64, as_object, as_uint, check_format, field, parse_json, read_text, write_text,
    FORMAT_VERSION,
};

/// Serializes the alive part of a pricing graph.
pub fn empplc_to_json(g: &PricingGraph) -> String {
    empplc_to_json_with_duals(g, None)
}

pub fn empplc_to_json_with_duals(g: &PricingGraph, duals: Option<&DualVector>) -> String {
    let s = g.source();
    let source_arcs: Vec<Value> = g
        .out_arcs(s)
        .map(|a| json!({"to": a.to, "c": a.cost}))
        .collect();
    let arcs: Vec<Value> = (0..g.num_vertices())
        .flat_map(|u| g.out_arcs(u))
        .map(|a| json!({"from": a.from, "to": a.to, "c": a.cost}))
        .collect();
    let mut doc = json!({
        "format": FORMAT_VERSION,
        "l": g.max_len(),
        "num_vertices": g.num_vertices(),
        "source_arcs": source_arcs,
        "arcs": arcs,
    });
    if let Some(d) = duals {
        doc["duals"] = json!(d.as_slice());
    }
    serde_json::to_string_pretty(&doc).expect("serializable")
}

pub fn empplc_from_json(text: &str) -> Result<PricingGraph> {
    empplc_from_json_with_duals(text).map(|(g, _)| g)
}

pub fn empplc_from_json_with_duals(text: &str) -> Result<(PricingGraph, Option<DualVector>)> {
    let doc = parse_json(text)?;
    let obj = as_object(&doc, "<root>")?;
    check_format(obj)?;
    let l = as_uint(field(obj, "l", "")?, "l")? as usize;
    let mut max_id = None::<usize>;
    let mut source_arcs = Vec::new();
    for (i, a) in as_array(field(obj, "source_arcs", "")?, "source_arcs")?
        .iter()
        .enumerate()
    {
        let path = format!("source_arcs[{i}].");
        let ao = as_object(a, &format!("source_arcs[{i}]"))?;
        let to = as_uint(field(ao, "to", &path)?, &format!("{path}to"))? as usize;
        let c = as_f64(field(ao, "c", &path)?, &format!("{path}c"))?;
        max_id = max_id.max(Some(to));
        source_arcs.push((to, c));
    }
    let mut arcs = Vec::new();
    for (i, a) in as_array(field(obj, "arcs", "")?, "arcs")?.iter().enumerate() {
        let path = format!("arcs[{i}].");
        let ao = as_object(a, &format!("arcs[{i}]"))?;
        let from = as_uint(field(ao, "from", &path)?, &format!("{path}from"))? as usize;
        let to = as_uint(field(ao, "to", &path)?, &format!("{path}to"))? as usize;
        let c = as_f64(field(ao, "c", &path)?, &format!("{path}c"))?;
        max_id = max_id.max(Some(from.max(to)));
        arcs.push((from, to, c));
    }
    let inferred = max_id.map_or(0, |m| m + 1);
    let n = match obj.get("num_vertices") {
        Some(v) => {
            let n = as_uint(v, "num_vertices")? as usize;
            if n < inferred {
                return Err(KepError::parse(
                    "num_vertices",
                    format!("{n} is smaller than the largest vertex id + 1 ({inferred})"),
                ));
            }
            n
        }
        None => inferred,
    };
    let duals = match obj.get("duals") {
        None => None,
        Some(v) => {
            let items = as_array(v, "duals")?;
            if items.len() != n {
                return Err(KepError::parse(
                    "duals",
                    format!("{} entries for {n} vertices", items.len()),
                ));
            }
            let alpha = items
                .iter()
                .enumerate()
                .map(|(i, x)| as_f64(x, &format!("duals[{i}]")))
                .collect::<Result<Vec<f64>>>()?;
            Some(DualVector::new(alpha))
        }
    };
    Ok((PricingGraph::from_arcs(n, &source_arcs, &arcs, l)?, duals))
}

pub fn load_empplc(path: impl AsRef<Path>) -> Result<PricingGraph> {
    empplc_from_json(&read_text(path.as_ref())?)
}

pub fn load_empplc_with_duals(path: impl AsRef<Path>) -> Result<(PricingGraph, Option<DualVector>)> {
    empplc_from_json_with_duals(&read_text(path.as_ref())?)
}

pub fn save_empplc(g: &PricingGraph, path: impl AsRef<Path>) -> Result<()> {
    write_text(path.as_ref(), &empplc_to_json(g))
}

pub fn save_empplc_with_duals(
    g: &PricingGraph,
    duals: Option<&DualVector>,
    path: impl AsRef<Path>,
) -> Result<()> {
    write_text(path.as_ref(), &empplc_to_json_with_duals(g, duals))
}

/// Dual values read back from costs, assuming unit arc weights: source arcs
/// give `alpha_u` directly, other arcs give `c_uv + 1`.
pub fn estimate_duals(g: &PricingGraph) -> DualVector {
    let mut alpha = vec![0.0f64; g.num_vertices()];
    for a in g.arcs().iter().enumerate().filter(|(k, _)| g.is_arc_alive(*k)).map(|(_, a)| a) {
        let est = if a.from == g.source() { a.cost } else { a.cost + 1.0 };
        alpha[a.to] = alpha[a.to].max(est);
    }
    DualVector::new(alpha)
}
