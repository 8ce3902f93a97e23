//! Report rendering. Text tables print metrics at 8 decimals. Machine-readable
//! blocks hold `key = value` lines between `[report]` and `[/report]`, with
//! floats in shortest round-trip form so they parse back to identical values.

use std::fmt::Write as _;

use crate::metrics::EvaluationReport;

use super::CliError;

pub const BLOCK_OPEN: &str = "[report]";
pub const BLOCK_CLOSE: &str = "[/report]";

/// Cross-validation results as read back from a report block.
#[derive(Debug, Clone, PartialEq)]
pub struct ParsedReport {
    pub folds: Vec<EvaluationReport>,
    pub pooled: EvaluationReport,
}

pub fn fmt8(v: f64) -> String {
    format!("{v:.8}")
}

pub fn eval_table(folds: &[EvaluationReport], pooled: &EvaluationReport) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "{:<8} {:>6}  {:>12}  {:>12}  {:>12}", "fold", "n", "RMSE", "MAE", "R");
    let mut row = |name: &str, r: &EvaluationReport| {
        let _ = writeln!(s, "{:<8} {:>6}  {:>12}  {:>12}  {:>12}", name, r.n, fmt8(r.rmse), fmt8(r.mae), r.pearson_display());
    };
    for (i, f) in folds.iter().enumerate() {
        row(&(i + 1).to_string(), f);
    }
    row("pooled", pooled);
    s
}

fn push_eval(out: &mut Vec<(String, String)>, prefix: &str, r: &EvaluationReport) {
    out.push((format!("{prefix}.n"), r.n.to_string()));
    out.push((format!("{prefix}.rmse"), r.rmse.to_string()));
    out.push((format!("{prefix}.mae"), r.mae.to_string()));
    out.push((format!("{prefix}.pearson_r"), r.pearson_r.map_or("n/a".to_string(), |v| v.to_string())));
}

pub fn eval_entries(folds: &[EvaluationReport], pooled: &EvaluationReport) -> Vec<(String, String)> {
    let mut out = vec![("folds".to_string(), folds.len().to_string())];
    for (i, f) in folds.iter().enumerate() {
        push_eval(&mut out, &format!("fold.{}", i + 1), f);
    }
    push_eval(&mut out, "pooled", pooled);
    out
}

pub fn write_block(entries: &[(String, String)]) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "{BLOCK_OPEN}");
    for (k, v) in entries {
        let _ = writeln!(s, "{k} = {v}");
    }
    let _ = writeln!(s, "{BLOCK_CLOSE}");
    s
}

/// Entries of the first report block in `text`.
pub fn parse_block(text: &str) -> Result<Vec<(String, String)>, CliError> {
    let bad = |m: String| CliError::Config(format!("report block: {m}"));
    let mut lines = text.lines().skip_while(|l| l.trim() != BLOCK_OPEN);
    if lines.next().is_none() {
        return Err(bad("no `[report]` line".into()));
    }
    let mut out = Vec::new();
    for line in lines {
        let line = line.trim();
        if line == BLOCK_CLOSE {
            return Ok(out);
        }
        let (k, v) = line.split_once(" = ").ok_or_else(|| bad(format!("malformed line `{line}`")))?;
        out.push((k.to_string(), v.to_string()));
    }
    Err(bad("missing `[/report]`".into()))
}

/// Reads the fold and pooled metrics out of a crossval report block.
pub fn parse_eval_report(text: &str) -> Result<ParsedReport, CliError> {
    let entries = parse_block(text)?;
    let bad = |m: String| CliError::Config(format!("report block: {m}"));
    let get = |k: &str| -> Result<&str, CliError> {
        entries.iter().find(|(key, _)| key == k).map(|(_, v)| v.as_str()).ok_or_else(|| bad(format!("missing `{k}`")))
    };
    let real = |k: &str| -> Result<f64, CliError> {
        let v = get(k)?;
        v.parse().map_err(|_| bad(format!("`{k}` = `{v}` is not a number")))
    };
    let eval = |p: &str| -> Result<EvaluationReport, CliError> {
        let n_key = format!("{p}.n");
        let n = get(&n_key)?.parse().map_err(|_| bad(format!("bad `{n_key}`")))?;
        let r_key = format!("{p}.pearson_r");
        let pearson_r = match get(&r_key)? {
            "n/a" => None,
            _ => Some(real(&r_key)?),
        };
        Ok(EvaluationReport { rmse: real(&format!("{p}.rmse"))?, mae: real(&format!("{p}.mae"))?, pearson_r, n })
    };
    let k: usize = get("folds")?.parse().map_err(|_| bad("bad `folds`".into()))?;
    if k > entries.len() {
        return Err(bad("fold count exceeds block size".into()));
    }
    let folds = (1..=k).map(|i| eval(&format!("fold.{i}"))).collect::<Result<_, _>>()?;
    Ok(ParsedReport { folds, pooled: eval("pooled")? })
}
