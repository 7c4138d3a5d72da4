use clap::ValueEnum;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::{CliError, Report, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Json,
    Csv,
    Table,
}

/// Renders `report` in `format`. JSON carries everything and is the only
/// format `replay` accepts; CSV and table views show the result only.
pub fn render(report: &Report, format: Format) -> Result<String> {
    match format {
        Format::Json => {
            let mut s = serde_json::to_string_pretty(report).expect("reports serialize");
            s.push('\n');
            Ok(s)
        }
        Format::Csv => csv_text(report),
        Format::Table => Ok(table_text(report)),
    }
}

fn cell(v: &Value) -> String {
    match v {
        Value::Null => String::new(),
        Value::String(s) => s.clone(),
        other => other.to_string(),
    }
}

/// Leaf values keyed by their dotted path.
pub(crate) fn flatten(prefix: &str, v: &Value, out: &mut Vec<(String, String)>) {
    let key = |k: &str| {
        if prefix.is_empty() {
            k.to_string()
        } else {
            format!("{prefix}.{k}")
        }
    };
    match v {
        Value::Object(m) if !m.is_empty() => m.iter().for_each(|(k, x)| flatten(&key(k), x, out)),
        Value::Array(a) if !a.is_empty() => a.iter().enumerate().for_each(|(i, x)| flatten(&key(&i.to_string()), x, out)),
        other => out.push((prefix.to_string(), cell(other))),
    }
}

fn csv_text(report: &Report) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let err = |e: csv::Error| CliError::Usage(format!("csv: {e}"));
    let r = &report.result;
    match report.command.as_str() {
        "osrb-sim" => {
            w.write_record(["n", "seed", "tv_joint", "sw_error_prob"]).map_err(err)?;
            for s in r["reports"].as_array().into_iter().flatten() {
                w.write_record(["n", "seed", "tv_joint", "sw_error_prob"].map(|k| cell(&s[k])))
                    .map_err(err)?;
            }
        }
        "casestudy-bec-bsc" => {
            let cols = [
                "p",
                "zone",
                "outer_lhs",
                "outer_rhs",
                "outer_verdict",
                "degrading_verdict",
                "search_value",
                "search_verdict",
            ];
            w.write_record(cols).map_err(err)?;
            for s in r["points"].as_array().into_iter().flatten() {
                w.write_record(cols.map(|k| cell(&s[k]))).map_err(err)?;
            }
        }
        _ => {
            w.write_record(["key", "value"]).map_err(err)?;
            let mut rows = Vec::new();
            flatten("", r, &mut rows);
            for (k, v) in rows {
                w.write_record([k, v]).map_err(err)?;
            }
        }
    }
    let bytes = w.into_inner().map_err(|e| CliError::Usage(format!("csv: {e}")))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

fn table_text(report: &Report) -> String {
    let mut rows = Vec::new();
    flatten("", &report.result, &mut rows);
    let width = rows.iter().map(|(k, _)| k.len()).max().unwrap_or(0).max(3);
    let mut s = format!("{} (seed {})\n", report.command, report.seed);
    for (k, v) in rows {
        s.push_str(&format!("{k:<width$}  {v}\n"));
    }
    s
}
