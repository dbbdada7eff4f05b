//! Violation injection with ground truth: each injection mutates one cell
//! so that exactly one declared constraint fails at a known locus.

use std::collections::{BTreeMap, BTreeSet};

use rand::seq::{IndexedRandom, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use simguard_core::{Locus, ValidationReport};

use crate::corpus::{ids, variable_columns, Corpus, GenFile, LEVEL_MAX};
use crate::BenchError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum InjectionKind {
    /// Text in a real column.
    WrongType,
    /// A real above its upper bound.
    OutOfRange,
    /// A category token outside the enumeration (or the referenced file).
    EnumToken,
    /// A code that fails the code pattern.
    BadCode,
    /// A missing code on a `cat_a` row.
    MissingConditional,
    /// Probabilities that no longer sum to one.
    SumBreak,
    /// A level above the (possibly config-bound) maximum.
    LevelTooHigh,
}

impl InjectionKind {
    pub const ALL: [InjectionKind; 7] = [
        InjectionKind::WrongType,
        InjectionKind::OutOfRange,
        InjectionKind::EnumToken,
        InjectionKind::BadCode,
        InjectionKind::MissingConditional,
        InjectionKind::SumBreak,
        InjectionKind::LevelTooHigh,
    ];

    /// Lowest complexity at which the kind is detectable.
    pub fn min_complexity(self) -> u8 {
        match self {
            InjectionKind::WrongType => 1,
            InjectionKind::OutOfRange | InjectionKind::LevelTooHigh => 2,
            InjectionKind::EnumToken => 3,
            InjectionKind::BadCode => 5,
            InjectionKind::MissingConditional => 6,
            InjectionKind::SumBreak => 7,
        }
    }

    fn column(self, vars: &[String], rng: &mut ChaCha8Rng) -> Option<String> {
        let pick = |prefix: &str, rng: &mut ChaCha8Rng| {
            let cands: Vec<&String> = vars.iter().filter(|v| v.starts_with(prefix)).collect();
            cands.choose(rng).map(|s| s.to_string())
        };
        match self {
            InjectionKind::WrongType | InjectionKind::OutOfRange => pick("x_", rng),
            InjectionKind::LevelTooHigh => pick("level_", rng),
            InjectionKind::EnumToken => Some("category".into()),
            InjectionKind::BadCode | InjectionKind::MissingConditional => Some("code".into()),
            InjectionKind::SumBreak => Some("p0".into()),
        }
    }

    /// The constraint the kind violates at complexity `d`.
    pub fn constraint_id(self, column: &str, d: u8) -> String {
        match self {
            InjectionKind::WrongType | InjectionKind::OutOfRange => ids::column(column),
            InjectionKind::LevelTooHigh if d >= 8 => ids::LEVELS.into(),
            InjectionKind::LevelTooHigh => ids::column(column),
            InjectionKind::EnumToken if d >= 10 => ids::CATEGORY_FK.into(),
            InjectionKind::EnumToken => ids::CATEGORY.into(),
            InjectionKind::BadCode => ids::CODE.into(),
            InjectionKind::MissingConditional => ids::CODE_WHEN.into(),
            InjectionKind::SumBreak => ids::P_SUM.into(),
        }
    }
}

/// One planned mutation and the violation it must produce.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Injection {
    pub file: String,
    pub row: usize,
    pub column: String,
    pub kind: InjectionKind,
    pub constraint_id: String,
    /// Where the violation is reported: the cell, or the row for sums.
    pub locus: Locus,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct InjectionPlan {
    pub count: usize,
    pub kinds: Vec<InjectionKind>,
    pub ground_truth: Vec<Injection>,
}

/// Kinds detectable in `corpus` (depends on complexity and on which
/// variable columns exist).
pub fn available_kinds(corpus: &Corpus) -> Vec<InjectionKind> {
    let vars = variable_columns(corpus.params.columns);
    InjectionKind::ALL
        .into_iter()
        .filter(|k| k.min_complexity() <= corpus.params.complexity)
        .filter(|k| match k {
            InjectionKind::LevelTooHigh => vars.iter().any(|v| v.starts_with("level_")),
            InjectionKind::WrongType | InjectionKind::OutOfRange => vars.iter().any(|v| v.starts_with("x_")),
            _ => true,
        })
        .collect()
}

/// Plans `count` injections on distinct rows, drawing kinds from `kinds`
/// (all available kinds when empty).
pub fn plan_injections(
    corpus: &Corpus,
    count: usize,
    kinds: &[InjectionKind],
    seed: u64,
) -> Result<InjectionPlan, BenchError> {
    let available = available_kinds(corpus);
    let kinds: Vec<InjectionKind> = if kinds.is_empty() {
        available.clone()
    } else {
        if let Some(k) = kinds.iter().find(|k| !available.contains(k)) {
            return Err(BenchError::InvalidParams(format!(
                "{k:?} is not detectable at complexity {}",
                corpus.params.complexity
            )));
        }
        kinds.to_vec()
    };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let vars = variable_columns(corpus.params.columns);
    let mut slots: Vec<(String, usize, bool)> = Vec::new();
    for (path, f) in corpus.data_files() {
        let (header, rows) = f.as_table().expect("data files are tables");
        let cat = header.iter().position(|h| h == "category").expect("category column");
        for (r, row) in rows.iter().enumerate() {
            slots.push((path.clone(), r, row[cat] == "cat_a"));
        }
    }
    if count > slots.len() {
        return Err(BenchError::InvalidParams(format!(
            "{count} injections requested but only {} rows exist",
            slots.len()
        )));
    }
    if count > 0 && kinds.is_empty() {
        return Err(BenchError::InvalidParams("no injection kind is available".into()));
    }
    slots.shuffle(&mut rng);
    let mut ground_truth = Vec::with_capacity(count);
    let mut taken = BTreeSet::new();
    for _ in 0..count {
        let kind = kinds[rng.random_range(0..kinds.len())];
        let pos = if kind == InjectionKind::MissingConditional {
            slots.iter().position(|s| s.2 && !taken.contains(&(s.0.clone(), s.1)))
        } else {
            slots.iter().position(|s| !taken.contains(&(s.0.clone(), s.1)))
        };
        let (kind, pos) = match pos {
            Some(p) => (kind, p),
            // No `cat_a` row left; fall back to a kind any row accepts.
            None => {
                let other = kinds.iter().copied().find(|k| *k != InjectionKind::MissingConditional).ok_or_else(|| {
                    BenchError::InvalidParams("not enough cat_a rows for conditional injections".into())
                })?;
                let p = slots
                    .iter()
                    .position(|s| !taken.contains(&(s.0.clone(), s.1)))
                    .expect("count <= rows");
                (other, p)
            }
        };
        let (file, row, _) = slots[pos].clone();
        taken.insert((file.clone(), row));
        let column = kind.column(&vars, &mut rng).expect("kind is available");
        let locus = if kind == InjectionKind::SumBreak {
            Locus::Row { row }
        } else {
            Locus::cell(row, column.clone())
        };
        ground_truth.push(Injection {
            constraint_id: kind.constraint_id(&column, corpus.params.complexity),
            file,
            row,
            column,
            kind,
            locus,
        });
    }
    ground_truth.sort_by(|a, b| (&a.file, a.row).cmp(&(&b.file, b.row)));
    Ok(InjectionPlan {
        count,
        kinds,
        ground_truth,
    })
}

fn mutate(value: &str, kind: InjectionKind, serial: usize) -> String {
    match kind {
        InjectionKind::WrongType => format!("bad{serial}"),
        InjectionKind::OutOfRange => "1000.5".into(),
        InjectionKind::EnumToken => format!("zz_{serial}"),
        InjectionKind::BadCode => format!("bad code {serial}"),
        InjectionKind::MissingConditional => String::new(),
        InjectionKind::LevelTooHigh => (LEVEL_MAX + 1).to_string(),
        InjectionKind::SumBreak => {
            let v: f64 = value.parse().unwrap_or(0.0);
            let shifted = if v <= 0.75 { v + 0.25 } else { v - 0.25 };
            format!("{shifted}")
        }
    }
}

/// Applies `plan` to a copy of `corpus`.
pub fn inject_violations(corpus: &Corpus, plan: &InjectionPlan) -> Result<Corpus, BenchError> {
    let mut seen = BTreeSet::new();
    for inj in &plan.ground_truth {
        if !seen.insert((&inj.file, inj.row, &inj.column)) {
            return Err(BenchError::LocusConflict {
                file: inj.file.clone(),
                row: inj.row,
                column: inj.column.clone(),
            });
        }
    }
    let mut out = corpus.clone();
    for (serial, inj) in plan.ground_truth.iter().enumerate() {
        let bad_locus = || BenchError::InvalidParams(format!("{}:{}:{} is not in the corpus", inj.file, inj.row, inj.column));
        let Some(GenFile::Table { header, rows }) = out.files.get_mut(&inj.file) else {
            return Err(bad_locus());
        };
        let c = header.iter().position(|h| *h == inj.column).ok_or_else(bad_locus)?;
        let cell = rows.get_mut(inj.row).and_then(|r| r.get_mut(c)).ok_or_else(bad_locus)?;
        *cell = mutate(cell, inj.kind, serial);
    }
    Ok(out)
}

/// Agreement between reported error violations and ground truth.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Detection {
    pub true_positives: usize,
    pub false_positives: usize,
    pub false_negatives: usize,
}

impl Detection {
    /// 1.0 when nothing was reported.
    pub fn precision(&self) -> f64 {
        let reported = self.true_positives + self.false_positives;
        if reported == 0 {
            1.0
        } else {
            self.true_positives as f64 / reported as f64
        }
    }

    /// 1.0 when nothing was injected.
    pub fn recall(&self) -> f64 {
        let truth = self.true_positives + self.false_negatives;
        if truth == 0 {
            1.0
        } else {
            self.true_positives as f64 / truth as f64
        }
    }

    pub fn exact(&self) -> bool {
        self.false_positives == 0 && self.false_negatives == 0
    }
}

/// Compares (file, constraint, locus) triples of error violations with the
/// plan's ground truth.
pub fn score(report: &ValidationReport, plan: &InjectionPlan) -> Detection {
    let reported: BTreeMap<(String, String, Locus), usize> =
        report.errors().fold(BTreeMap::new(), |mut m, v| {
            *m.entry((v.file.clone(), v.constraint_id.clone(), v.locus.clone())).or_insert(0) += 1;
            m
        });
    let truth: BTreeSet<(String, String, Locus)> = plan
        .ground_truth
        .iter()
        .map(|i| (i.file.clone(), i.constraint_id.clone(), i.locus.clone()))
        .collect();
    let true_positives = truth.iter().filter(|t| reported.contains_key(*t)).count();
    let reported_total: usize = reported.values().sum();
    Detection {
        true_positives,
        false_positives: reported_total - true_positives,
        false_negatives: truth.len() - true_positives,
    }
}
