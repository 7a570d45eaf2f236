//! Production-rule grammars: the rule types, the form-specification tree,
//! the grammar DSL parser/printer and grammar validation.
//!
//! A rule maps a named, parameterised function onto the forms that express
//! it: postures on body articulators, sequenced in time, with overlays
//! anchored to the edges of other items.

use std::fmt;
use std::sync::OnceLock;

use indexmap::IndexMap;
use num_rational::Ratio;
use thiserror::Error;

use crate::diag::{Diagnostic, Severity, Site};

mod parser;
mod printer;
mod validate;

pub use parser::parse_grammar;

/// Header of the built-in variadic chronological-sequence rule.
pub const SEQ_HEADER: &str = "seq";
/// Minimum number of arguments `seq` accepts.
pub const SEQ_MIN_ARGS: usize = 2;

/// The closed registry of body channels a form can occupy.
///
/// `Meta` is reserved for ellipsis placeholder blocks and may not appear in
/// user grammars.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Articulator {
    RightHand,
    LeftHand,
    Eyebrows,
    Chin,
    Lips,
    Head,
    Gaze,
    Meta,
}

/// Every articulator, in canonical track order.
pub const ARTICULATORS: [Articulator; 8] = [
    Articulator::RightHand,
    Articulator::LeftHand,
    Articulator::Eyebrows,
    Articulator::Chin,
    Articulator::Lips,
    Articulator::Head,
    Articulator::Gaze,
    Articulator::Meta,
];

impl Articulator {
    pub fn name(self) -> &'static str {
        match self {
            Articulator::RightHand => "right_hand",
            Articulator::LeftHand => "left_hand",
            Articulator::Eyebrows => "eyebrows",
            Articulator::Chin => "chin",
            Articulator::Lips => "lips",
            Articulator::Head => "head",
            Articulator::Gaze => "gaze",
            Articulator::Meta => "meta",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        ARTICULATORS.iter().copied().find(|a| a.name() == name)
    }

    /// Reserved channels cannot be used by user grammars.
    pub fn is_reserved(self) -> bool {
        matches!(self, Articulator::Meta)
    }
}

impl fmt::Display for Articulator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Symbolic duration class of a posture; bound to milliseconds only when a
/// score is evaluated, so grammars stay device-independent.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DurationClass {
    Sign,
    Hold,
}

impl DurationClass {
    pub fn name(self) -> &'static str {
        match self {
            DurationClass::Sign => "sign",
            DurationClass::Hold => "hold",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        match name {
            "sign" => Some(DurationClass::Sign),
            "hold" => Some(DurationClass::Hold),
            _ => None,
        }
    }
}

impl fmt::Display for DurationClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Multiplier applied to the default transition duration for one gap.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TransitionSpec {
    pub factor: Ratio<u64>,
}

impl TransitionSpec {
    /// Builds a factor `num/den`, reduced. Both parts must be positive.
    pub fn new(num: u64, den: u64) -> Option<Self> {
        if num == 0 || den == 0 {
            return None;
        }
        Some(TransitionSpec { factor: Ratio::new(num, den) })
    }
}

impl Default for TransitionSpec {
    fn default() -> Self {
        TransitionSpec { factor: Ratio::from_integer(1) }
    }
}

impl fmt::Display for TransitionSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if *self.factor.denom() == 1 {
            write!(f, "{}", self.factor.numer())
        } else {
            write!(f, "{}/{}", self.factor.numer(), self.factor.denom())
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AnchorEdge {
    Start,
    End,
}

impl AnchorEdge {
    pub fn name(self) -> &'static str {
        match self {
            AnchorEdge::Start => "start",
            AnchorEdge::End => "end",
        }
    }
}

/// What an overlay endpoint latches onto: a timeline item of the enclosing
/// sequence, by position or by the name of the parameter a slot carries.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum AnchorRef {
    Item(usize),
    Param(String),
}

impl fmt::Display for AnchorRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AnchorRef::Item(i) => write!(f, "{i}"),
            AnchorRef::Param(p) => f.write_str(p),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Anchor {
    pub reference: AnchorRef,
    pub edge: AnchorEdge,
}

impl fmt::Display for Anchor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}({})", self.edge.name(), self.reference)
    }
}

/// The form-specification tree making up a rule's right-hand side.
///
/// `Seq` items keep their written order. Overlay items float over the
/// timeline: they do not take part in the gap arithmetic, so a `Seq` carries
/// exactly one transition per gap between consecutive *non-overlay* items.
#[derive(Debug, Clone, PartialEq)]
pub enum FormSpec {
    Seq { items: Vec<FormSpec>, transitions: Vec<TransitionSpec> },
    Slot { param: String },
    Posture { articulator: Articulator, state: String, class: DurationClass },
    Overlay { articulator: Articulator, state: String, start: Anchor, end: Anchor },
}

impl FormSpec {
    pub fn is_overlay(&self) -> bool {
        matches!(self, FormSpec::Overlay { .. })
    }

    /// Number of timeline (non-overlay) items of a `Seq`; 0 for other nodes.
    pub fn timeline_len(&self) -> usize {
        match self {
            FormSpec::Seq { items, .. } => items.iter().filter(|i| !i.is_overlay()).count(),
            _ => 0,
        }
    }

    /// True if the subtree contains at least one posture or slot.
    pub fn has_timeline_material(&self) -> bool {
        match self {
            FormSpec::Seq { items, .. } => items.iter().any(FormSpec::has_timeline_material),
            FormSpec::Slot { .. } | FormSpec::Posture { .. } => true,
            FormSpec::Overlay { .. } => false,
        }
    }

    /// True if the subtree holds a slot for `param`.
    pub fn binds_param(&self, param: &str) -> bool {
        match self {
            FormSpec::Seq { items, .. } => items.iter().any(|i| i.binds_param(param)),
            FormSpec::Slot { param: p } => p == param,
            _ => false,
        }
    }
}

/// A named, parameterised production rule.
///
/// `line` records where the rule was declared in its source file (0 for
/// rules built in code) and is ignored by equality.
#[derive(Debug, Clone)]
pub struct Rule {
    pub header: String,
    pub params: Vec<String>,
    pub rhs: FormSpec,
    /// True only for the built-in `seq` rule.
    pub variadic: bool,
    pub line: usize,
}

impl PartialEq for Rule {
    fn eq(&self, other: &Self) -> bool {
        self.header == other.header
            && self.params == other.params
            && self.rhs == other.rhs
            && self.variadic == other.variadic
    }
}

impl Rule {
    pub fn new(header: impl Into<String>, params: Vec<String>, rhs: FormSpec) -> Self {
        Rule { header: header.into(), params, rhs, variadic: false, line: 0 }
    }
}

fn seq_rule() -> &'static Rule {
    static SEQ: OnceLock<Rule> = OnceLock::new();
    SEQ.get_or_init(|| Rule {
        header: SEQ_HEADER.to_owned(),
        params: Vec::new(),
        rhs: FormSpec::Seq { items: Vec::new(), transitions: Vec::new() },
        variadic: true,
        line: 0,
    })
}

/// Identifier syntax shared by rule headers, parameters and expression
/// headers: a letter followed by letters, digits or `-`.
pub fn is_identifier(s: &str) -> bool {
    let mut chars = s.chars();
    match chars.next() {
        Some(c) if c.is_ascii_alphabetic() => {}
        _ => return false,
    }
    chars.all(|c| c.is_ascii_alphanumeric() || c == '-')
}

/// A set of production rules plus the built-in `seq`.
#[derive(Debug, Clone, PartialEq)]
pub struct Grammar {
    rules: IndexMap<String, Rule>,
    pub source_name: String,
}

impl Grammar {
    pub fn new(source_name: impl Into<String>) -> Self {
        Grammar { rules: IndexMap::new(), source_name: source_name.into() }
    }

    /// Adds a rule, rejecting duplicate headers and attempts to redefine the
    /// built-in `seq`.
    pub fn add_rule(&mut self, rule: Rule) -> Result<(), GrammarError> {
        if rule.header == SEQ_HEADER {
            return Err(GrammarError::ReservedHeader { line: rule.line });
        }
        if self.rules.contains_key(&rule.header) {
            return Err(GrammarError::DuplicateHeader { line: rule.line, header: rule.header });
        }
        self.rules.insert(rule.header.clone(), rule);
        Ok(())
    }

    /// User-defined rules in definition order (excludes the built-in `seq`).
    pub fn rules(&self) -> impl Iterator<Item = &Rule> {
        self.rules.values()
    }

    pub fn len(&self) -> usize {
        self.rules.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rules.is_empty()
    }

    /// Looks a header up, including the built-in `seq`.
    pub fn get(&self, header: &str) -> Option<&Rule> {
        if header == SEQ_HEADER {
            return Some(seq_rule());
        }
        self.rules.get(header)
    }

    /// Like [`Grammar::get`] but the failure carries a nearest-match
    /// suggestion.
    pub fn lookup(&self, header: &str) -> Result<&Rule, UnknownHeader> {
        self.get(header).ok_or_else(|| UnknownHeader {
            header: header.to_owned(),
            suggestion: self.nearest_header(header),
        })
    }

    fn nearest_header(&self, header: &str) -> Option<String> {
        self.rules
            .keys()
            .map(String::as_str)
            .chain(std::iter::once(SEQ_HEADER))
            .map(|h| (edit_distance(header, h), h))
            .min()
            .filter(|(d, _)| *d <= 3)
            .map(|(_, h)| h.to_owned())
    }

    /// Checks every structural invariant and returns the findings ordered by
    /// rule header, then by position inside the rule. Empty means clean.
    pub fn validate(&self) -> Vec<Diagnostic> {
        validate::validate(self)
    }

    /// Renders the grammar back to DSL text; reparsing the result yields a
    /// structurally equal grammar.
    pub fn to_text(&self) -> String {
        printer::print_grammar(self)
    }
}

fn edit_distance(a: &str, b: &str) -> usize {
    let a: Vec<char> = a.chars().collect();
    let b: Vec<char> = b.chars().collect();
    let mut prev: Vec<usize> = (0..=b.len()).collect();
    let mut cur = vec![0; b.len() + 1];
    for i in 1..=a.len() {
        cur[0] = i;
        for j in 1..=b.len() {
            let sub = prev[j - 1] + usize::from(a[i - 1] != b[j - 1]);
            cur[j] = sub.min(prev[j] + 1).min(cur[j - 1] + 1);
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    prev[b.len()]
}

/// Failure to look a rule header up.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub struct UnknownHeader {
    pub header: String,
    pub suggestion: Option<String>,
}

impl fmt::Display for UnknownHeader {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "unknown rule header `{}`", self.header)?;
        if let Some(s) = &self.suggestion {
            write!(f, " (did you mean `{s}`?)")?;
        }
        Ok(())
    }
}

/// Errors raised while parsing or assembling a grammar.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GrammarError {
    #[error("line {line}:{column}: {message}")]
    Syntax { line: usize, column: usize, message: String },
    #[error("line {line}: duplicate rule header `{header}`")]
    DuplicateHeader { line: usize, header: String },
    #[error("line {line}: `seq` is the built-in chronological sequence and cannot be redefined")]
    ReservedHeader { line: usize },
    #[error("line {line}:{column}: unknown articulator `{name}`")]
    UnknownArticulator { line: usize, column: usize, name: String },
    #[error("line {line}:{column}: articulator `meta` is reserved for ellipsis placeholders")]
    ReservedArticulator { line: usize, column: usize },
    #[error("line {line}: unresolved parameter `{param}` in rule `{header}`")]
    UnresolvedParam { line: usize, header: String, param: String },
    #[error("line {line}: overlay anchor `{anchor}` does not resolve in rule `{header}`")]
    UnresolvedAnchor { line: usize, header: String, anchor: String },
    #[error("line {line}: rule `{header}` has no posture or slot for overlays to anchor to")]
    NoTimelineMaterial { line: usize, header: String },
}

pub(crate) fn sort_diagnostics(diags: &mut [Diagnostic]) {
    diags.sort_by(|a, b| {
        let key = |d: &Diagnostic| match &d.site {
            Site::Rule { header, ord, .. } => (header.clone(), *ord),
            Site::Node { path } => (path.to_string(), 0),
        };
        key(a).cmp(&key(b)).then_with(|| a.message.cmp(&b.message))
    });
}

pub(crate) fn severity_rank(s: Severity) -> u8 {
    match s {
        Severity::Warning => 0,
        Severity::Error => 1,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn articulator_registry_round_trips() {
        for a in ARTICULATORS {
            assert_eq!(Articulator::from_name(a.name()), Some(a));
        }
        assert_eq!(Articulator::from_name("nose"), None);
    }

    #[test]
    fn transition_factor_reduces() {
        let t = TransitionSpec::new(2, 6).unwrap();
        assert_eq!(t.factor, Ratio::new(1, 3));
        assert_eq!(t.to_string(), "1/3");
        assert_eq!(TransitionSpec::new(4, 2).unwrap().to_string(), "2");
        assert!(TransitionSpec::new(0, 3).is_none());
        assert!(TransitionSpec::new(1, 0).is_none());
    }

    #[test]
    fn identifier_charset() {
        assert!(is_identifier("side-info"));
        assert!(is_identifier("Indonesia"));
        assert!(is_identifier("heavy-rain2"));
        assert!(!is_identifier(""));
        assert!(!is_identifier("2fast"));
        assert!(!is_identifier("with space"));
        assert!(!is_identifier("-dash"));
    }

    #[test]
    fn lookup_knows_builtin_seq() {
        let g = Grammar::new("empty");
        let seq = g.lookup(SEQ_HEADER).unwrap();
        assert!(seq.variadic);
        assert!(g.lookup("sequ").unwrap_err().suggestion.as_deref() == Some("seq"));
    }

    #[test]
    fn add_rule_rejects_duplicates_and_seq() {
        let leaf = FormSpec::Posture {
            articulator: Articulator::RightHand,
            state: "x".into(),
            class: DurationClass::Sign,
        };
        let mut g = Grammar::new("test");
        g.add_rule(Rule::new("a", vec![], leaf.clone())).unwrap();
        assert!(matches!(
            g.add_rule(Rule::new("a", vec![], leaf.clone())),
            Err(GrammarError::DuplicateHeader { .. })
        ));
        assert!(matches!(
            g.add_rule(Rule::new("seq", vec![], leaf)),
            Err(GrammarError::ReservedHeader { .. })
        ));
    }

    #[test]
    fn edit_distance_basics() {
        assert_eq!(edit_distance("house", "house"), 0);
        assert_eq!(edit_distance("hose", "house"), 1);
        assert_eq!(edit_distance("", "abc"), 3);
    }
}
