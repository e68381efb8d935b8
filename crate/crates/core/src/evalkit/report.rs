use std::fmt::Write as _;
use std::io::{Read, Write};

use super::{EvalError, EvalRecord, Predictors, RegressionResult, StepAction};

const RESULT_COLUMNS: [&str; 9] =
    ["composition", "dataset", "model", "entropy_bits", "n_tokens", "n_types", "improbable", "monophonic", "repetition"];

/// One row per record, in the given order.
pub fn write_results_csv(records: &[EvalRecord], out: impl Write) -> Result<(), EvalError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(RESULT_COLUMNS)?;
    for r in records {
        let p = &r.predictors;
        w.write_record([
            r.composition.clone(),
            r.dataset.clone(),
            r.model.clone(),
            r.entropy.to_string(),
            p.n_tokens.to_string(),
            p.n_types.to_string(),
            p.improbable.to_string(),
            p.monophonic.to_string(),
            p.repetition.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_results_csv(input: impl Read) -> Result<Vec<EvalRecord>, EvalError> {
    let mut reader = csv::Reader::from_reader(input);
    if reader.headers()?.iter().ne(RESULT_COLUMNS) {
        return Err(EvalError::Syntax { line: 1, message: format!("expected columns {}", RESULT_COLUMNS.join(",")) });
    }
    let mut out = Vec::new();
    for (n, rec) in reader.records().enumerate() {
        let rec = rec?;
        let line = n + 2;
        let num = |k: usize| rec[k].parse::<f64>().map_err(|_| EvalError::Syntax { line, message: format!("bad {}", RESULT_COLUMNS[k]) });
        let int = |k: usize| rec[k].parse::<usize>().map_err(|_| EvalError::Syntax { line, message: format!("bad {}", RESULT_COLUMNS[k]) });
        out.push(EvalRecord {
            composition: rec[0].to_string(),
            dataset: rec[1].to_string(),
            model: rec[2].to_string(),
            entropy: num(3)?,
            predictors: Predictors { n_tokens: int(4)?, n_types: int(5)?, improbable: num(6)?, monophonic: num(7)?, repetition: num(8)? },
        });
    }
    Ok(out)
}

/// Mean cross-entropy of one model over compositions with its interval.
#[derive(Debug, Clone, PartialEq)]
pub struct SummaryRow {
    pub model: String,
    /// Dataset label, or `all` for the whole corpus.
    pub dataset: String,
    pub compositions: usize,
    pub mean: f64,
    pub ci_low: f64,
    pub ci_high: f64,
}

/// Columns `model,dataset,compositions,mean_entropy_bits,ci_low,ci_high`. Values are
/// rounded to six decimals; the results CSV keeps full precision.
pub fn write_summary_csv(rows: &[SummaryRow], out: impl Write) -> Result<(), EvalError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["model", "dataset", "compositions", "mean_entropy_bits", "ci_low", "ci_high"])?;
    for r in rows {
        w.write_record([
            r.model.clone(),
            r.dataset.clone(),
            r.compositions.to_string(),
            format!("{:.6}", r.mean),
            format!("{:.6}", r.ci_low),
            format!("{:.6}", r.ci_high),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Plain-text table of the final model (predictor, standardized beta,
/// cumulative R² when it entered), followed by the full step log.
/// `header` lines are printed first, each prefixed with `# `.
pub fn format_regression_report(result: &RegressionResult, outcome: &str, header: &[String]) -> String {
    let mut out = String::new();
    for h in header {
        let _ = writeln!(out, "# {h}");
    }
    let _ = writeln!(out, "Stepwise regression of {outcome} (N = {})", result.n);
    let _ = writeln!(out, "criterion: {}", result.criterion);
    let _ = writeln!(out, "predictors and outcome z-scored; betas from the final model\n");
    let _ = writeln!(out, "{:<14} {:>10} {:>10} {:>12}", "predictor", "beta", "p", "R2 at entry");
    for (name, beta, p) in &result.betas {
        let r2 = result
            .steps
            .iter()
            .rev()
            .find(|s| s.action == StepAction::Entered && &s.predictor == name)
            .map_or(f64::NAN, |s| s.r_squared);
        let _ = writeln!(out, "{name:<14} {beta:>10.4} {p:>10.4} {r2:>12.4}");
    }
    if result.betas.is_empty() {
        let _ = writeln!(out, "(no predictor selected)");
    }
    let _ = writeln!(out, "\nfinal R2 = {:.6}\n\nsteps:", result.r_squared);
    for (i, s) in result.steps.iter().enumerate() {
        let verb = match s.action {
            StepAction::Entered => "enter",
            StepAction::Removed => "remove",
        };
        let _ = writeln!(out, "{:>3}  {verb:<6} {:<14} R2 = {:.6}", i + 1, s.predictor, s.r_squared);
    }
    for w in &result.warnings {
        let _ = writeln!(out, "warning: {w}");
    }
    out
}
