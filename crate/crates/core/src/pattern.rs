//! The verification-pattern taxonomy: every check is labelled
//! `<sources>.<template>.<target>`, e.g. `1.A.i` or `14.C.ii`.
//!
//! * Sources: `1` the target file itself, `2` other input files, `3`
//!   external reference tables, `4` the simulation configuration. Several
//!   sources print as ascending concatenated digits.
//! * Template: `A` static, `B` parameters modified by criteria, `C`
//!   conditionally applied, `BC` both.
//! * Target: `i` one column, `ii` fixed columns, `iii` dynamic columns,
//!   `v` whole file, `vi` syntax, `vii` nesting structure, `viii` schema
//!   adherence. There is no `iv`.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

use crate::spec::{ColumnSelector, ConstraintDecl, ConstraintKind, GuardSpec, ParamValue, RowPairParams, Then};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PatternError {
    #[error("bad source component `{0}`: digits 1-4, ascending, no repeats")]
    BadSource(String),
    #[error("bad template component `{0}`: expected A, B, C or BC")]
    BadTemplate(String),
    #[error("bad target component `{0}`: expected i, ii, iii, v, vi, vii or viii")]
    BadTarget(String),
    #[error("pattern code `{0}` must have three dot-separated components")]
    Shape(String),
}

/// Non-empty set of sources, stored as a bitmask over 1..=4.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct SourceSet(u8);

impl SourceSet {
    pub const TARGET_FILE: u8 = 1;
    pub const OTHER_INPUTS: u8 = 2;
    pub const REFERENCE: u8 = 3;
    pub const CONFIG: u8 = 4;

    /// Builds a set from source numbers; `None` when empty or out of range.
    pub fn from_sources(sources: &[u8]) -> Option<Self> {
        let mut bits = 0u8;
        for &s in sources {
            if !(1..=4).contains(&s) {
                return None;
            }
            bits |= 1 << (s - 1);
        }
        (bits != 0).then_some(Self(bits))
    }

    pub fn contains(&self, source: u8) -> bool {
        (1..=4).contains(&source) && self.0 & (1 << (source - 1)) != 0
    }

    pub fn iter(&self) -> impl Iterator<Item = u8> + '_ {
        (1..=4u8).filter(|s| self.contains(*s))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Template {
    A,
    B,
    C,
    BC,
}

impl Template {
    pub const ALL: [Template; 4] = [Template::A, Template::B, Template::C, Template::BC];

    fn as_str(self) -> &'static str {
        match self {
            Template::A => "A",
            Template::B => "B",
            Template::C => "C",
            Template::BC => "BC",
        }
    }

    /// The template after wrapping in a conditional gate.
    pub fn gated(self) -> Template {
        match self {
            Template::A | Template::C => Template::C,
            Template::B | Template::BC => Template::BC,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Target {
    SingleColumn,
    FixedColumns,
    DynamicColumns,
    WholeFile,
    Syntax,
    Nesting,
    Schema,
}

impl Target {
    pub const ALL: [Target; 7] = [
        Target::SingleColumn,
        Target::FixedColumns,
        Target::DynamicColumns,
        Target::WholeFile,
        Target::Syntax,
        Target::Nesting,
        Target::Schema,
    ];

    fn as_str(self) -> &'static str {
        match self {
            Target::SingleColumn => "i",
            Target::FixedColumns => "ii",
            Target::DynamicColumns => "iii",
            Target::WholeFile => "v",
            Target::Syntax => "vi",
            Target::Nesting => "vii",
            Target::Schema => "viii",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct PatternCode {
    pub sources: SourceSet,
    pub template: Template,
    pub target: Target,
}

impl PatternCode {
    pub fn new(sources: SourceSet, template: Template, target: Target) -> Self {
        Self {
            sources,
            template,
            target,
        }
    }
}

impl fmt::Display for PatternCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for s in self.sources.iter() {
            write!(f, "{s}")?;
        }
        write!(f, ".{}.{}", self.template.as_str(), self.target.as_str())
    }
}

impl FromStr for PatternCode {
    type Err = PatternError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        parse_code(s)
    }
}

/// Parses `<sources>.<template>.<target>`.
pub fn parse_code(text: &str) -> Result<PatternCode, PatternError> {
    let text = text.trim();
    let parts: Vec<&str> = text.split('.').collect();
    let [src, tpl, tgt] = parts.as_slice() else {
        return Err(PatternError::Shape(text.to_string()));
    };

    let mut prev = 0u8;
    let mut digits = Vec::new();
    for c in src.chars() {
        let d = c
            .to_digit(10)
            .filter(|d| (1..=4).contains(d))
            .ok_or_else(|| PatternError::BadSource(src.to_string()))? as u8;
        if d <= prev {
            return Err(PatternError::BadSource(src.to_string()));
        }
        prev = d;
        digits.push(d);
    }
    let sources = SourceSet::from_sources(&digits).ok_or_else(|| PatternError::BadSource(src.to_string()))?;

    let template = Template::ALL
        .into_iter()
        .find(|t| t.as_str() == *tpl)
        .ok_or_else(|| PatternError::BadTemplate(tpl.to_string()))?;
    let target = Target::ALL
        .into_iter()
        .find(|t| t.as_str() == *tgt)
        .ok_or_else(|| PatternError::BadTarget(tgt.to_string()))?;

    Ok(PatternCode::new(sources, template, target))
}

/// All single-source codes: 4 sources x 4 templates x 7 targets.
pub fn enumerate_single_source_codes() -> Vec<PatternCode> {
    let mut out = Vec::with_capacity(112);
    for s in 1..=4u8 {
        for template in Template::ALL {
            for target in Target::ALL {
                out.push(PatternCode::new(
                    SourceSet::from_sources(&[s]).expect("1..=4"),
                    template,
                    target,
                ));
            }
        }
    }
    out
}

impl Serialize for PatternCode {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for PatternCode {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        parse_code(&s).map_err(serde::de::Error::custom)
    }
}

/// Result of classifying a constraint.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Classification {
    Pattern(PatternCode),
    /// Checks over zero or many files (file counts); they sit outside
    /// the taxonomy and carry no code.
    FileSet,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("constraint kind `{0}` has no pattern mapping")]
pub struct Unclassifiable(pub String);

#[derive(Default)]
struct Uses {
    own_content: bool,
    sibling: bool,
    reference: bool,
    config: bool,
}

impl Uses {
    fn param(&mut self, v: &ParamValue) {
        match v {
            ParamValue::Config { .. } => self.config = true,
            ParamValue::Reference { .. } => self.reference = true,
            ParamValue::Number(_) | ParamValue::Text(_) => {}
        }
    }

    fn sources(&self) -> SourceSet {
        let mut s = Vec::new();
        let external = self.sibling || self.reference || self.config;
        if self.own_content || !external {
            s.push(SourceSet::TARGET_FILE);
        }
        if self.sibling {
            s.push(SourceSet::OTHER_INPUTS);
        }
        if self.reference {
            s.push(SourceSet::REFERENCE);
        }
        if self.config {
            s.push(SourceSet::CONFIG);
        }
        SourceSet::from_sources(&s).expect("non-empty")
    }
}

/// Derives the pattern code of a constraint from what its parameters read.
///
/// Source 1 is present when the template draws on the target file's own
/// content (uniqueness, row relations, row-conditional rules) or when no
/// other source is involved.
pub fn classify(decl: &ConstraintDecl, _spec: &GuardSpec) -> Result<Classification, Unclassifiable> {
    let mut uses = Uses::default();
    match kind_shape(&decl.kind, &mut uses)? {
        None => Ok(Classification::FileSet),
        Some((template, target)) => Ok(Classification::Pattern(PatternCode::new(
            uses.sources(),
            template,
            target,
        ))),
    }
}

/// The explicit code when declared, otherwise the derived one.
pub fn effective_pattern(decl: &ConstraintDecl, spec: &GuardSpec) -> Result<Option<PatternCode>, Unclassifiable> {
    if let Some(p) = decl.pattern {
        return Ok(Some(p));
    }
    Ok(match classify(decl, spec)? {
        Classification::Pattern(p) => Some(p),
        Classification::FileSet => None,
    })
}

fn columns_target(n: usize) -> Target {
    if n <= 1 {
        Target::SingleColumn
    } else {
        Target::FixedColumns
    }
}

fn selector_target(sel: &ColumnSelector) -> Target {
    match sel {
        ColumnSelector::Columns(cols) => columns_target(cols.len()),
        _ => Target::DynamicColumns,
    }
}

fn column_params_uses(p: &crate::spec::ColumnParams, uses: &mut Uses) {
    for b in [&p.ge, &p.gt, &p.le, &p.lt].into_iter().flatten() {
        uses.param(b);
    }
    if p.in_reference.is_some() {
        uses.reference = true;
    }
    if p.unique {
        uses.own_content = true;
    }
}

fn kind_shape(kind: &ConstraintKind, uses: &mut Uses) -> Result<Option<(Template, Target)>, Unclassifiable> {
    use ConstraintKind as K;
    let shape = match kind {
        K::Column(p) => {
            column_params_uses(p, uses);
            (Template::A, Target::SingleColumn)
        }
        K::ColumnsPresent(p) => (Template::A, columns_target(p.columns.len())),
        K::Conditional(p) => {
            uses.own_content = true;
            let mut cols: Vec<&str> = p.when.predicates().iter().map(|w| w.column.as_str()).collect();
            match &p.then {
                Then::Predicate(pred) => cols.push(&pred.column),
                Then::Check(c) => {
                    column_params_uses(c, uses);
                    cols.extend(c.column.as_deref());
                }
            }
            cols.extend(p.on_columns.iter().map(String::as_str));
            cols.sort_unstable();
            cols.dedup();
            (Template::B, columns_target(cols.len()))
        }
        K::Stepwise(p) => {
            uses.param(&p.min);
            uses.param(&p.max);
            (Template::A, Target::SingleColumn)
        }
        K::DynamicColumns(p) => {
            column_params_uses(&p.template, uses);
            (Template::A, selector_target(&p.selector))
        }
        K::Summation(p) => {
            uses.param(&p.target);
            (Template::A, selector_target(&p.columns))
        }
        K::RowPairs(p) => {
            uses.own_content = true;
            let n = match p {
                RowPairParams::DistinctFields(c) | RowPairParams::OrderedFields(c) => c.len(),
                RowPairParams::UniqueRows { columns, .. } => columns.len(),
            };
            (Template::A, columns_target(n))
        }
        K::RowCount(_) => (Template::A, Target::WholeFile),
        K::FirstValueApplies(p) => {
            uses.own_content = true;
            let mut cols = vec![p.column.as_str()];
            if let Some(w) = &p.when {
                cols.extend(w.predicates().iter().map(|x| x.column.as_str()));
            }
            cols.sort_unstable();
            cols.dedup();
            let template = if p.when.is_some() { Template::B } else { Template::A };
            (template, columns_target(cols.len()))
        }
        K::ForeignKey(p) => {
            uses.sibling = true;
            (Template::A, columns_target(p.columns.len()))
        }
        K::Connectivity(_) => {
            uses.sibling = true;
            (Template::A, Target::SingleColumn)
        }
        K::ConfigGate(p) => {
            uses.config = true;
            match kind_shape(&p.constraint, uses)? {
                Some((template, target)) => (template.gated(), target),
                None => return Err(Unclassifiable("config_gate(file_count)".into())),
            }
        }
        K::TemporalWindow(p) => {
            uses.param(&p.not_before);
            (Template::A, Target::SingleColumn)
        }
        K::DocumentNesting(_) => (Template::A, Target::Nesting),
        K::DocumentSchema(_) => (Template::A, Target::Schema),
        K::Syntax(_) => (Template::A, Target::Syntax),
        K::FileCount(_) => return Ok(None),
    };
    Ok(Some(shape))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_exemplar_codes() {
        let c = parse_code("1.A.i").unwrap();
        assert_eq!(c.sources.iter().collect::<Vec<_>>(), vec![1]);
        assert_eq!(c.template, Template::A);
        assert_eq!(c.target, Target::SingleColumn);

        let c = parse_code("4.C.ii").unwrap();
        assert_eq!(c.sources.iter().collect::<Vec<_>>(), vec![4]);
        assert_eq!(c.template, Template::C);
        assert_eq!(c.target, Target::FixedColumns);

        let c = parse_code("14.A.ii").unwrap();
        assert_eq!(c.sources.iter().collect::<Vec<_>>(), vec![1, 4]);
        assert_eq!(c.to_string(), "14.A.ii");
    }

    #[test]
    fn rejects_bad_codes() {
        assert_eq!(parse_code("1.A.iv"), Err(PatternError::BadTarget("iv".into())));
        assert!(matches!(parse_code("41.A.i"), Err(PatternError::BadSource(_))));
        assert!(matches!(parse_code("11.A.i"), Err(PatternError::BadSource(_))));
        assert!(matches!(parse_code("5.A.i"), Err(PatternError::BadSource(_))));
        assert!(matches!(parse_code(".A.i"), Err(PatternError::BadSource(_))));
        assert!(matches!(parse_code("1.D.i"), Err(PatternError::BadTemplate(_))));
        assert!(matches!(parse_code("1.CB.i"), Err(PatternError::BadTemplate(_))));
        assert!(matches!(parse_code("1.A"), Err(PatternError::Shape(_))));
    }

    #[test]
    fn enumeration() {
        let codes = enumerate_single_source_codes();
        assert_eq!(codes.len(), 112);
        assert!(codes.len() >= 72);
        let printed: Vec<String> = codes.iter().map(|c| c.to_string()).collect();
        assert!(printed.contains(&"1.A.i".to_string()));
        assert!(printed.contains(&"4.BC.viii".to_string()));
        assert!(printed.iter().all(|p| !p.ends_with(".iv")));
        for c in &codes {
            assert_eq!(parse_code(&c.to_string()).unwrap(), *c);
        }
    }
}
