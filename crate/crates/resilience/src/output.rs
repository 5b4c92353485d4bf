//! Deterministic data files: the measures CSV, the attractors JSON document,
//! the oracle convergence CSV, and optional accumulator dumps.

use std::io::Write;

use serde::Serialize;

use crate::attractors::{AttractorStore, Label};
use crate::continuation::ContinuationResult;
use crate::nonlocal::BasinAccumulator;

/// Formats a value with 9 significant digits; `inf` and `na` are spelled
/// out. Locale-independent by construction.
pub fn fmt_value(v: f64) -> String {
    if v.is_nan() {
        "na".to_string()
    } else if v.is_infinite() {
        if v > 0.0 { "inf".to_string() } else { "-inf".to_string() }
    } else {
        format!("{v:.8e}")
    }
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map_or_else(|| "na".to_string(), fmt_value)
}

/// The thirteen per-attractor measure columns of the continuation CSV.
pub const MEASURE_NAMES: [&str; 13] = [
    "t_R",
    "R0",
    "rho_max",
    "t_max",
    "s_min",
    "s_max",
    "S",
    "med_tau",
    "med_beta",
    "S_ft",
    "lyapunov_max",
    "summary",
    "unresolved_fraction",
];

/// Renders a continuation result as `param,attractor_id,measure,value` rows,
/// sorted by (param, attractor_id, measure). Id 0 carries the divergence
/// weight; its undefined measures serialize as `na`.
pub fn measures_csv(result: &ContinuationResult) -> String {
    let mut rows: Vec<(f64, u32, &str, String)> = Vec::new();
    for (k, step) in result.steps.iter().enumerate() {
        let param = result.curve.leading_value(k);
        let unresolved = fmt_value(step.unresolved_fraction);
        let mut emit = |id: u32, name: &'static str, value: String| rows.push((param, id, name, value));

        emit(0, "S", fmt_value(step.divergence_weight));
        emit(0, "S_ft", fmt_value(step.divergence_weight_finite_time));
        for name in ["t_R", "R0", "rho_max", "t_max", "s_min", "s_max", "med_tau", "med_beta", "lyapunov_max", "summary"] {
            emit(0, name, "na".to_string());
        }
        emit(0, "unresolved_fraction", unresolved.clone());

        for (&id, m) in &step.measures {
            let local = m.local.as_ref();
            emit(id, "t_R", fmt_opt(local.map(|l| l.return_time)));
            emit(id, "R0", fmt_opt(local.map(|l| l.reactivity)));
            emit(id, "rho_max", fmt_opt(local.map(|l| l.max_amplification)));
            emit(id, "t_max", fmt_opt(local.map(|l| l.max_amplification_time)));
            let nl = m.nonlocal.as_ref();
            emit(id, "s_min", fmt_opt(nl.map(|n| n.min_critical_shock)));
            emit(id, "s_max", fmt_opt(nl.and_then(|n| n.max_noncritical_shock)));
            emit(id, "S", fmt_opt(nl.map(|n| n.basin_stability)));
            emit(id, "med_tau", fmt_opt(nl.and_then(|n| n.median_tau)));
            emit(id, "med_beta", fmt_opt(nl.and_then(|n| n.median_pace)));
            emit(id, "S_ft", fmt_opt(nl.map(|n| n.finite_time_basin_stability)));
            emit(id, "lyapunov_max", fmt_value(m.lyapunov_max));
            emit(id, "summary", fmt_value(m.summary));
            emit(id, "unresolved_fraction", unresolved.clone());
        }
    }
    rows.sort_by(|a, b| {
        a.0.partial_cmp(&b.0)
            .expect("parameter values are ordered")
            .then(a.1.cmp(&b.1))
            .then(a.2.cmp(b.2))
    });
    let mut out = String::from("param,attractor_id,measure,value\n");
    for (p, id, m, v) in rows {
        out.push_str(&format!("{},{},{},{}\n", fmt_value(p), id, m, v));
    }
    out
}

#[derive(Serialize)]
struct AttractorDoc<'a> {
    system: &'a str,
    parameters: std::collections::BTreeMap<&'a str, f64>,
    attractors: Vec<AttractorEntry>,
}

#[derive(Serialize)]
struct AttractorEntry {
    id: u32,
    points: Vec<Vec<f64>>,
}

/// One JSON document with each attractor's id and point cloud.
pub fn attractors_json(
    system: &str,
    param_names: &[&str],
    params: &[f64],
    store: &AttractorStore,
) -> String {
    let doc = AttractorDoc {
        system,
        parameters: param_names.iter().copied().zip(params.iter().copied()).collect(),
        attractors: store
            .iter()
            .map(|a| AttractorEntry { id: a.id, points: a.points.clone() })
            .collect(),
    };
    serde_json::to_string_pretty(&doc).expect("serializable document")
}

/// Columnar accumulator dump, one row per initial condition:
/// `ic..., label, tau, d_1..d_J, weight`.
pub fn write_accumulator(w: &mut impl Write, acc: &BasinAccumulator) -> std::io::Result<()> {
    let dim = acc.ics.first().map_or(0, |x| x.len());
    let mut header: Vec<String> = (1..=dim).map(|i| format!("ic_{i}")).collect();
    header.push("label".into());
    header.push("tau".into());
    for id in &acc.ids {
        header.push(format!("d_{id}"));
    }
    header.push("weight".into());
    writeln!(w, "{}", header.join(","))?;
    for i in 0..acc.len() {
        let mut row: Vec<String> = acc.ics[i].iter().map(|&v| fmt_value(v)).collect();
        row.push(match acc.labels[i] {
            Label::To(j) => j.to_string(),
            Label::Diverged => "0".to_string(),
            Label::Unresolved => "na".to_string(),
        });
        row.push(fmt_value(acc.taus[i]));
        for c in 0..acc.ids.len() {
            row.push(fmt_value(acc.dist(i, c)));
        }
        row.push(fmt_value(acc.weights[i]));
        writeln!(w, "{}", row.join(","))?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn formatting_has_nine_significant_digits() {
        assert_eq!(fmt_value(0.19635), "1.96350000e-1");
        assert_eq!(fmt_value(-2.0), "-2.00000000e0");
        assert_eq!(fmt_value(f64::INFINITY), "inf");
        assert_eq!(fmt_value(f64::NAN), "na");
    }

    #[test]
    fn attractors_json_is_deterministic() {
        let grid = crate::grid::Grid::new(&[(-1.0, 1.0, 10), (-1.0, 1.0, 10)]);
        let mut store = AttractorStore::new(&grid);
        store.insert_new(vec![vec![0.0, 0.25]], &grid);
        let a = attractors_json("oracle", &["a"], &[1.0], &store);
        let b = attractors_json("oracle", &["a"], &[1.0], &store);
        assert_eq!(a, b);
        let v: serde_json::Value = serde_json::from_str(&a).unwrap();
        assert_eq!(v["attractors"][0]["id"], 1);
        assert_eq!(v["attractors"][0]["points"][0][1], 0.25);
    }
}
