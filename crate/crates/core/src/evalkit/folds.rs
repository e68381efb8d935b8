use std::collections::{BTreeMap, HashSet};
use std::io::{Read, Write};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::EvalError;

/// Assignment of each composition to one of `k` folds.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FoldPlan {
    pub k: usize,
    /// `(composition, dataset, fold)` in input order.
    pub entries: Vec<(String, String, usize)>,
}

impl FoldPlan {
    pub fn fold_of(&self, composition: &str) -> Option<usize> {
        self.entries.iter().find(|e| e.0 == composition).map(|e| e.2)
    }

    /// Compositions in `fold`, in input order.
    pub fn members(&self, fold: usize) -> Vec<&str> {
        self.entries.iter().filter(|e| e.2 == fold).map(|e| e.0.as_str()).collect()
    }

    pub fn fold_sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.k];
        for e in &self.entries {
            sizes[e.2] += 1;
        }
        sizes
    }
}

/// Stratified assignment: datasets are taken in name order, each dataset's
/// compositions are sorted by id and shuffled with a generator seeded from
/// `seed`, then dealt round-robin. Each dataset starts dealing where the
/// previous one stopped, so overall fold sizes stay balanced too.
pub fn make_folds(items: &[(String, String)], k: usize, seed: u64) -> Result<FoldPlan, EvalError> {
    if k == 0 {
        return Err(EvalError::ZeroFolds);
    }
    let mut seen = HashSet::new();
    let mut by_dataset: BTreeMap<&str, Vec<&str>> = BTreeMap::new();
    for (comp, dataset) in items {
        if !seen.insert(comp.as_str()) {
            return Err(EvalError::DuplicateComposition(comp.clone()));
        }
        by_dataset.entry(dataset).or_default().push(comp);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut fold_of: BTreeMap<&str, usize> = BTreeMap::new();
    let mut dealt = 0usize;
    for (dataset, comps) in &mut by_dataset {
        if comps.len() < k {
            log::warn!("dataset {dataset:?} has {} compositions for {k} folds; some folds get none of it", comps.len());
        }
        comps.sort_unstable();
        comps.shuffle(&mut rng);
        let start = dealt % k;
        for (i, c) in comps.iter().enumerate() {
            fold_of.insert(c, (start + i) % k);
        }
        dealt += comps.len();
    }
    let entries = items.iter().map(|(c, d)| (c.clone(), d.clone(), fold_of[c.as_str()])).collect();
    Ok(FoldPlan { k, entries })
}

/// CSV with columns `composition,dataset,fold`; `k` goes in a leading
/// `# k=<n>` line.
pub fn write_fold_plan(plan: &FoldPlan, mut out: impl Write) -> Result<(), EvalError> {
    writeln!(out, "# k={}", plan.k)?;
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["composition", "dataset", "fold"])?;
    for (c, d, f) in &plan.entries {
        w.write_record([c.as_str(), d.as_str(), &f.to_string()])?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_fold_plan(mut input: impl Read) -> Result<FoldPlan, EvalError> {
    let mut text = String::new();
    input.read_to_string(&mut text)?;
    let (first, rest) = text.split_once('\n').unwrap_or((&text, ""));
    let k: usize = first
        .strip_prefix("# k=")
        .and_then(|v| v.trim().parse().ok())
        .ok_or_else(|| EvalError::Syntax { line: 1, message: "expected \"# k=<folds>\"".into() })?;
    if k == 0 {
        return Err(EvalError::ZeroFolds);
    }
    let mut entries = Vec::new();
    let mut seen = HashSet::new();
    for (i, rec) in csv::Reader::from_reader(rest.as_bytes()).records().enumerate() {
        let rec = rec?;
        let line = i + 3;
        if rec.len() != 3 {
            return Err(EvalError::Syntax { line, message: "expected 3 fields".into() });
        }
        let fold: usize = rec[2].parse().map_err(|_| EvalError::Syntax { line, message: format!("bad fold {:?}", &rec[2]) })?;
        if fold >= k {
            return Err(EvalError::FoldOutOfRange { fold, k });
        }
        if !seen.insert(rec[0].to_string()) {
            return Err(EvalError::DuplicateComposition(rec[0].to_string()));
        }
        entries.push((rec[0].to_string(), rec[1].to_string(), fold));
    }
    Ok(FoldPlan { k, entries })
}
