//! Per-token probability traces, shared by every model family.
//!
//! CSV columns: `composition,index,token,p,neg_log2_p`.

use std::io::{Read, Write};

use crate::encoder::TokenId;

use super::{cross_entropy, information_content, EvalError};

#[derive(Debug, Clone, PartialEq)]
pub struct TraceRow {
    pub composition: String,
    pub index: usize,
    pub token: TokenId,
    pub p: f64,
}

pub fn write_trace(rows: &[TraceRow], out: impl Write) -> Result<(), EvalError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["composition", "index", "token", "p", "neg_log2_p"])?;
    for r in rows {
        w.write_record([
            r.composition.as_str(),
            &r.index.to_string(),
            &r.token.to_string(),
            &r.p.to_string(),
            &information_content(r.p).to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Reads a trace; the `neg_log2_p` column is ignored in favour of `p`.
pub fn read_trace(input: impl Read) -> Result<Vec<TraceRow>, EvalError> {
    let mut reader = csv::Reader::from_reader(input);
    let headers = reader.headers()?.clone();
    let col = |name: &str| {
        headers.iter().position(|h| h == name).ok_or_else(|| EvalError::Syntax { line: 1, message: format!("missing column {name:?}") })
    };
    let (c, i, t, p) = (col("composition")?, col("index")?, col("token")?, col("p")?);
    let mut rows = Vec::new();
    for (n, rec) in reader.records().enumerate() {
        let rec = rec?;
        let line = n + 2;
        let field = |k: usize| rec.get(k).ok_or_else(|| EvalError::Syntax { line, message: "short record".into() });
        let bad = |what: &str| EvalError::Syntax { line, message: format!("bad {what}") };
        rows.push(TraceRow {
            composition: field(c)?.to_string(),
            index: field(i)?.parse().map_err(|_| bad("index"))?,
            token: field(t)?.parse().map_err(|_| bad("token"))?,
            p: field(p)?.parse().map_err(|_| bad("probability"))?,
        });
    }
    Ok(rows)
}

/// Cross-entropy and token count per composition, in order of first appearance.
pub fn entropy_by_composition(rows: &[TraceRow]) -> Result<Vec<(String, f64, usize)>, EvalError> {
    let mut order: Vec<&str> = Vec::new();
    let mut probs: std::collections::HashMap<&str, Vec<f64>> = std::collections::HashMap::new();
    for r in rows {
        let entry = probs.entry(&r.composition).or_insert_with(|| {
            order.push(&r.composition);
            Vec::new()
        });
        entry.push(r.p);
    }
    order
        .into_iter()
        .map(|c| {
            let p = &probs[c];
            Ok((c.to_string(), cross_entropy(p)?, p.len()))
        })
        .collect()
}
