//! Line-oriented parser for the grammar DSL.
//!
//! ```text
//! # comment
//! rule side-info(X, Y):
//!   slot X
//!   transition factor 1/3
//!   slot Y
//!   overlay eyebrows "raise" from end(X) to end(Y)
//!
//! rule house(): posture right_hand "house" sign
//! ```
//!
//! A rule body is a block of statements; `seq:` opens a nested block one
//! indent level deeper. Transition lines set the factor for the gap that
//! follows them. The parser wraps every rule body in a top-level `Seq` node,
//! so printed grammars reparse to the identical structure.

use super::{
    Anchor, AnchorEdge, AnchorRef, Articulator, DurationClass, FormSpec, Grammar, GrammarError,
    Rule, TransitionSpec, is_identifier,
};

pub fn parse_grammar(text: &str, source_name: &str) -> Result<Grammar, GrammarError> {
    let lines = scan_lines(text)?;
    let mut grammar = Grammar::new(source_name);
    let mut idx = 0;
    while idx < lines.len() {
        let line = &lines[idx];
        if line.indent != 0 {
            return Err(syntax(line.number, line.indent + 1, "expected `rule` at the start of a line"));
        }
        let (rule, consumed) = parse_rule(&lines[idx..])?;
        grammar.add_rule(rule)?;
        idx += consumed;
    }
    Ok(grammar)
}

struct Line {
    number: usize,
    indent: usize,
    tokens: Vec<Token>,
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Word(String),
    Number(u64),
    Quoted(String),
    LParen,
    RParen,
    Comma,
    Colon,
    Slash,
}

#[derive(Debug, Clone)]
struct Token {
    tok: Tok,
    column: usize,
}

fn syntax(line: usize, column: usize, message: impl Into<String>) -> GrammarError {
    GrammarError::Syntax { line, column, message: message.into() }
}

fn scan_lines(text: &str) -> Result<Vec<Line>, GrammarError> {
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let number = i + 1;
        let mut indent = 0;
        for c in raw.chars() {
            match c {
                ' ' => indent += 1,
                '\t' => return Err(syntax(number, indent + 1, "tabs are not allowed in indentation")),
                _ => break,
            }
        }
        let tokens = scan_tokens(raw, number)?;
        if tokens.is_empty() {
            continue;
        }
        out.push(Line { number, indent, tokens });
    }
    Ok(out)
}

fn scan_tokens(raw: &str, line: usize) -> Result<Vec<Token>, GrammarError> {
    let chars: Vec<char> = raw.chars().collect();
    let mut tokens = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let column = i + 1;
        let c = chars[i];
        match c {
            '#' => break,
            c if c.is_whitespace() => i += 1,
            '(' => {
                tokens.push(Token { tok: Tok::LParen, column });
                i += 1;
            }
            ')' => {
                tokens.push(Token { tok: Tok::RParen, column });
                i += 1;
            }
            ',' => {
                tokens.push(Token { tok: Tok::Comma, column });
                i += 1;
            }
            ':' => {
                tokens.push(Token { tok: Tok::Colon, column });
                i += 1;
            }
            '/' => {
                tokens.push(Token { tok: Tok::Slash, column });
                i += 1;
            }
            '"' => {
                let start = i + 1;
                let mut j = start;
                while j < chars.len() && chars[j] != '"' {
                    j += 1;
                }
                if j == chars.len() {
                    return Err(syntax(line, column, "unterminated string"));
                }
                let s: String = chars[start..j].iter().collect();
                tokens.push(Token { tok: Tok::Quoted(s), column });
                i = j + 1;
            }
            c if c.is_ascii_digit() => {
                let mut j = i;
                while j < chars.len() && chars[j].is_ascii_digit() {
                    j += 1;
                }
                let s: String = chars[i..j].iter().collect();
                let n = s
                    .parse::<u64>()
                    .map_err(|_| syntax(line, column, format!("number `{s}` is out of range")))?;
                tokens.push(Token { tok: Tok::Number(n), column });
                i = j;
            }
            c if c.is_ascii_alphabetic() => {
                let mut j = i;
                while j < chars.len() && (chars[j].is_ascii_alphanumeric() || chars[j] == '-') {
                    j += 1;
                }
                let s: String = chars[i..j].iter().collect();
                tokens.push(Token { tok: Tok::Word(s), column });
                i = j;
            }
            other => return Err(syntax(line, column, format!("unexpected character `{other}`"))),
        }
    }
    Ok(tokens)
}

/// Cursor over the tokens of one line.
struct LineCursor<'a> {
    line: &'a Line,
    pos: usize,
}

impl<'a> LineCursor<'a> {
    fn new(line: &'a Line) -> Self {
        LineCursor { line, pos: 0 }
    }

    fn peek(&self) -> Option<&Tok> {
        self.line.tokens.get(self.pos).map(|t| &t.tok)
    }

    fn column(&self) -> usize {
        self.line
            .tokens
            .get(self.pos)
            .map(|t| t.column)
            .unwrap_or_else(|| self.line.tokens.last().map(|t| t.column + 1).unwrap_or(1))
    }

    fn next(&mut self) -> Option<&Token> {
        let t = self.line.tokens.get(self.pos);
        self.pos += 1;
        t
    }

    fn error(&self, expected: &str) -> GrammarError {
        let found = match self.line.tokens.get(self.pos) {
            Some(t) => format!("{:?}", t.tok),
            None => "end of line".to_owned(),
        };
        syntax(self.line.number, self.column(), format!("expected {expected}, found {found}"))
    }

    fn expect_word(&mut self, word: &str) -> Result<(), GrammarError> {
        match self.peek() {
            Some(Tok::Word(w)) if w == word => {
                self.pos += 1;
                Ok(())
            }
            _ => Err(self.error(&format!("`{word}`"))),
        }
    }

    fn expect(&mut self, tok: Tok, what: &str) -> Result<(), GrammarError> {
        match self.peek() {
            Some(t) if *t == tok => {
                self.pos += 1;
                Ok(())
            }
            _ => Err(self.error(what)),
        }
    }

    fn identifier(&mut self, what: &str) -> Result<String, GrammarError> {
        let (number, column) = (self.line.number, self.column());
        match self.peek() {
            Some(Tok::Word(w)) => {
                if !is_identifier(w) {
                    return Err(syntax(number, column, format!("`{w}` is not a valid {what}")));
                }
                let w = w.clone();
                self.pos += 1;
                Ok(w)
            }
            _ => Err(self.error(what)),
        }
    }

    fn articulator(&mut self) -> Result<Articulator, GrammarError> {
        let (number, column) = (self.line.number, self.column());
        match self.peek() {
            Some(Tok::Word(w)) => {
                let art = Articulator::from_name(w).ok_or_else(|| {
                    GrammarError::UnknownArticulator { line: number, column, name: w.clone() }
                })?;
                if art.is_reserved() {
                    return Err(GrammarError::ReservedArticulator { line: number, column });
                }
                self.pos += 1;
                Ok(art)
            }
            _ => Err(self.error("an articulator name")),
        }
    }

    fn quoted(&mut self, what: &str) -> Result<String, GrammarError> {
        let (number, column) = (self.line.number, self.column());
        match self.peek() {
            Some(Tok::Quoted(s)) => {
                if s.is_empty() {
                    return Err(syntax(number, column, format!("empty {what}")));
                }
                let s = s.clone();
                self.pos += 1;
                Ok(s)
            }
            _ => Err(self.error(&format!("a quoted {what}"))),
        }
    }

    fn end(&self) -> Result<(), GrammarError> {
        if self.pos == self.line.tokens.len() {
            Ok(())
        } else {
            Err(self.error("end of line"))
        }
    }
}

enum Stmt {
    Item(FormSpec),
    Transition(TransitionSpec),
}

/// Parses one rule starting at `lines[0]`; returns it with the number of
/// lines consumed.
fn parse_rule(lines: &[Line]) -> Result<(Rule, usize), GrammarError> {
    let head = &lines[0];
    let mut cur = LineCursor::new(head);
    cur.expect_word("rule")?;
    let header = cur.identifier("rule header")?;
    cur.expect(Tok::LParen, "`(`")?;
    let mut params = Vec::new();
    if cur.peek() != Some(&Tok::RParen) {
        loop {
            let p = cur.identifier("parameter name")?;
            if params.contains(&p) {
                return Err(syntax(head.number, cur.column(), format!("duplicate parameter `{p}`")));
            }
            params.push(p);
            match cur.peek() {
                Some(Tok::Comma) => {
                    cur.next();
                }
                Some(Tok::RParen) => break,
                _ => return Err(cur.error("`,` or `)`")),
            }
        }
    }
    cur.expect(Tok::RParen, "`)`")?;
    cur.expect(Tok::Colon, "`:`")?;

    let mut overlay_lines: Vec<usize> = Vec::new();
    let (items, transitions, consumed) = if cur.peek().is_some() {
        // Inline single-statement body after the colon.
        let stmt = parse_statement(&mut cur, &params, &mut overlay_lines)?;
        cur.end()?;
        match stmt {
            Stmt::Item(item) => (vec![item], Vec::new(), 1),
            Stmt::Transition(_) => {
                return Err(syntax(head.number, 1, "a rule body cannot be a lone transition"));
            }
        }
    } else {
        let mut end = 1;
        while end < lines.len() && lines[end].indent > 0 {
            end += 1;
        }
        if end == 1 {
            return Err(syntax(head.number, 1, format!("rule `{header}` has an empty body")));
        }
        let (items, transitions) = parse_block(&lines[1..end], &params, &mut overlay_lines)?;
        (items, transitions, end)
    };

    let rhs = FormSpec::Seq { items, transitions };
    check_rule_shape(&header, &params, &rhs, head.number, &overlay_lines)?;
    Ok((Rule { header, params, rhs, variadic: false, line: head.number }, consumed))
}

/// Parses a block of statements sharing one indent level. Deeper lines
/// belong to the `seq:` statement that precedes them.
fn parse_block(
    lines: &[Line],
    params: &[String],
    overlay_lines: &mut Vec<usize>,
) -> Result<(Vec<FormSpec>, Vec<TransitionSpec>), GrammarError> {
    let level = lines[0].indent;
    let mut items = Vec::new();
    let mut transitions = Vec::new();
    let mut pending: Option<(TransitionSpec, usize)> = None;
    let mut timeline_seen = false;

    let mut idx = 0;
    while idx < lines.len() {
        let line = &lines[idx];
        if line.indent < level {
            return Err(syntax(line.number, line.indent + 1, "inconsistent indentation"));
        }
        if line.indent > level {
            return Err(syntax(line.number, line.indent + 1, "unexpected indentation"));
        }

        let mut cur = LineCursor::new(line);
        if cur.peek() == Some(&Tok::Word("seq".to_owned())) {
            cur.next();
            cur.expect(Tok::Colon, "`:` after `seq`")?;
            cur.end()?;
            let mut end = idx + 1;
            while end < lines.len() && lines[end].indent > level {
                end += 1;
            }
            if end == idx + 1 {
                return Err(syntax(line.number, 1, "`seq:` has no items"));
            }
            let (sub_items, sub_transitions) =
                parse_block(&lines[idx + 1..end], params, overlay_lines)?;
            let node = FormSpec::Seq { items: sub_items, transitions: sub_transitions };
            if timeline_seen {
                transitions.push(pending.take().map(|(t, _)| t).unwrap_or_default());
            }
            timeline_seen = true;
            items.push(node);
            idx = end;
            continue;
        }

        let stmt = parse_statement(&mut cur, params, overlay_lines)?;
        cur.end()?;
        match stmt {
            Stmt::Transition(t) => {
                if !timeline_seen {
                    return Err(syntax(line.number, 1, "transition precedes the first item"));
                }
                if pending.is_some() {
                    return Err(syntax(line.number, 1, "two transitions for the same gap"));
                }
                pending = Some((t, line.number));
            }
            Stmt::Item(item) => {
                let overlay = item.is_overlay();
                if !overlay {
                    if timeline_seen {
                        transitions.push(pending.take().map(|(t, _)| t).unwrap_or_default());
                    }
                    timeline_seen = true;
                }
                items.push(item);
            }
        }
        idx += 1;
    }

    if let Some((_, number)) = pending {
        return Err(syntax(number, 1, "transition is not followed by an item"));
    }
    Ok((items, transitions))
}

fn parse_statement(
    cur: &mut LineCursor<'_>,
    params: &[String],
    overlay_lines: &mut Vec<usize>,
) -> Result<Stmt, GrammarError> {
    let number = cur.line.number;
    match cur.peek() {
        Some(Tok::Word(w)) => match w.as_str() {
            "slot" => {
                cur.next();
                let param = cur.identifier("parameter name")?;
                if !params.iter().any(|p| *p == param) {
                    return Err(GrammarError::UnresolvedParam {
                        line: number,
                        header: header.to_owned(),
                        param,
                    });
                }
                Ok(Stmt::Item(FormSpec::Slot { param }))
            }
            "posture" => {
                cur.next();
                let articulator = cur.articulator()?;
                let state = cur.quoted("state label")?;
                let class_col = cur.column();
                let class_word = cur.identifier("duration class")?;
                let class = DurationClass::from_name(&class_word).ok_or_else(|| {
                    syntax(number, class_col, format!("expected `sign` or `hold`, found `{class_word}`"))
                })?;
                Ok(Stmt::Item(FormSpec::Posture { articulator, state, class }))
            }
            "overlay" => {
                cur.next();
                let articulator = cur.articulator()?;
                let state = cur.quoted("state label")?;
                cur.expect_word("from")?;
                let start = parse_anchor(cur)?;
                cur.expect_word("to")?;
                let end = parse_anchor(cur)?;
                overlay_lines.push(number);
                Ok(Stmt::Item(FormSpec::Overlay { articulator, state, start, end }))
            }
            "transition" => {
                cur.next();
                cur.expect_word("factor")?;
                let col = cur.column();
                let num = match cur.next().map(|t| t.tok.clone()) {
                    Some(Tok::Number(n)) => n,
                    _ => return Err(syntax(number, col, "expected a number after `factor`")),
                };
                let den = if cur.peek() == Some(&Tok::Slash) {
                    cur.next();
                    let col = cur.column();
                    match cur.next().map(|t| t.tok.clone()) {
                        Some(Tok::Number(n)) => n,
                        _ => return Err(syntax(number, col, "expected a denominator after `/`")),
                    }
                } else {
                    1
                };
                let spec = TransitionSpec::new(num, den)
                    .ok_or_else(|| syntax(number, col, "transition factor must be positive"))?;
                Ok(Stmt::Transition(spec))
            }
            other => Err(syntax(
                cur.line.number,
                cur.column(),
                format!("expected `slot`, `posture`, `overlay`, `transition` or `seq:`, found `{other}`"),
            )),
        },
        _ => Err(cur.error("a statement")),
    }
}

fn parse_anchor(cur: &mut LineCursor<'_>) -> Result<Anchor, GrammarError> {
    let number = cur.line.number;
    let col = cur.column();
    let edge_word = cur.identifier("`start` or `end`")?;
    let edge = match edge_word.as_str() {
        "start" => AnchorEdge::Start,
        "end" => AnchorEdge::End,
        other => return Err(syntax(number, col, format!("expected `start` or `end`, found `{other}`"))),
    };
    cur.expect(Tok::LParen, "`(`")?;
    let reference = match cur.peek().cloned() {
        Some(Tok::Number(n)) => {
            cur.next();
            AnchorRef::Item(n as usize)
        }
        Some(Tok::Word(_)) => AnchorRef::Param(cur.identifier("anchor reference")?),
        _ => return Err(cur.error("an item index or parameter name")),
    };
    cur.expect(Tok::RParen, "`)`")?;
    Ok(Anchor { reference, edge })
}

/// Post-parse shape checks that need the whole rule: anchor resolution,
/// unresolved-parameter context, and the at-least-one-timeline-node rule.
fn check_rule_shape(
    header: &str,
    params: &[String],
    rhs: &FormSpec,
    rule_line: usize,
    overlay_lines: &[usize],
) -> Result<(), GrammarError> {
    if !rhs.has_timeline_material() {
        return Err(GrammarError::NoTimelineMaterial { line: rule_line, header: header.to_owned() });
    }
    let _ = params;
    let mut overlay_idx = 0;
    check_anchors(header, rhs, overlay_lines, &mut overlay_idx)
}

fn check_anchors(
    header: &str,
    spec: &FormSpec,
    overlay_lines: &[usize],
    overlay_idx: &mut usize,
) -> Result<(), GrammarError> {
    if let FormSpec::Seq { items, .. } = spec {
        let timeline: Vec<&FormSpec> = items.iter().filter(|i| !i.is_overlay()).collect();
        for item in items {
            match item {
                FormSpec::Overlay { start, end, .. } => {
                    let line = overlay_lines.get(*overlay_idx).copied().unwrap_or(0);
                    *overlay_idx += 1;
                    for anchor in [start, end] {
                        let ok = match &anchor.reference {
                            AnchorRef::Item(i) => *i < timeline.len(),
                            AnchorRef::Param(p) => items.iter().any(|it| it.binds_param(p)),
                        };
                        if !ok {
                            return Err(GrammarError::UnresolvedAnchor {
                                line,
                                header: header.to_owned(),
                                anchor: anchor.to_string(),
                            });
                        }
                    }
                }
                FormSpec::Seq { .. } => check_anchors(header, item, overlay_lines, overlay_idx)?,
                _ => {}
            }
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_rational::Ratio;

    fn parse(text: &str) -> Grammar {
        parse_grammar(text, "test").expect("grammar should parse")
    }

    #[test]
    fn minimal_rule() {
        let g = parse(r#"rule house(): posture right_hand "house" sign"#);
        assert_eq!(g.len(), 1);
        let rule = g.get("house").unwrap();
        assert!(rule.params.is_empty());
        assert_eq!(
            rule.rhs,
            FormSpec::Seq {
                items: vec![FormSpec::Posture {
                    articulator: Articulator::RightHand,
                    state: "house".into(),
                    class: DurationClass::Sign,
                }],
                transitions: vec![],
            }
        );
    }

    #[test]
    fn side_info_structure() {
        let g = parse(
            "rule side-info(X, Y):\n  slot X\n  transition factor 1/3\n  slot Y\n  overlay eyebrows \"raise\" from end(X) to end(Y)\n",
        );
        let rule = g.get("side-info").unwrap();
        assert_eq!(rule.params, vec!["X".to_owned(), "Y".to_owned()]);
        let FormSpec::Seq { items, transitions } = &rule.rhs else { panic!("expected seq rhs") };
        assert_eq!(items.len(), 3);
        assert_eq!(items[0], FormSpec::Slot { param: "X".into() });
        assert_eq!(items[1], FormSpec::Slot { param: "Y".into() });
        assert!(items[2].is_overlay());
        assert_eq!(transitions.len(), 1);
        assert_eq!(transitions[0].factor, Ratio::new(1, 3));
        let FormSpec::Overlay { articulator, state, start, end } = &items[2] else { unreachable!() };
        assert_eq!(*articulator, Articulator::Eyebrows);
        assert_eq!(state, "raise");
        assert_eq!(start, &Anchor { reference: AnchorRef::Param("X".into()), edge: AnchorEdge::End });
        assert_eq!(end, &Anchor { reference: AnchorRef::Param("Y".into()), edge: AnchorEdge::End });
    }

    #[test]
    fn unresolved_parameter_is_an_error() {
        let err = parse_grammar("rule bad(X): slot Y", "test").unwrap_err();
        assert!(matches!(err, GrammarError::UnresolvedParam { ref param, .. } if param == "Y"), "{err}");
    }

    #[test]
    fn duplicate_header_is_an_error() {
        let text = "rule a(): posture lips \"x\" sign\nrule a(): posture lips \"y\" sign\n";
        let err = parse_grammar(text, "test").unwrap_err();
        assert!(matches!(err, GrammarError::DuplicateHeader { line: 2, ref header } if header == "a"));
    }

    #[test]
    fn unknown_and_reserved_articulators() {
        let err = parse_grammar("rule a(): posture nose \"x\" sign", "test").unwrap_err();
        assert!(matches!(err, GrammarError::UnknownArticulator { ref name, .. } if name == "nose"));
        let err = parse_grammar("rule a(): posture meta \"x\" sign", "test").unwrap_err();
        assert!(matches!(err, GrammarError::ReservedArticulator { .. }));
    }

    #[test]
    fn transition_placement_errors() {
        let err = parse_grammar("rule a(X):\n  transition factor 2\n  slot X\n", "t").unwrap_err();
        assert!(err.to_string().contains("precedes the first item"), "{err}");
        let err = parse_grammar("rule a(X):\n  slot X\n  transition factor 2\n", "t").unwrap_err();
        assert!(err.to_string().contains("not followed by an item"), "{err}");
        let err = parse_grammar(
            "rule a(X, Y):\n  slot X\n  transition factor 2\n  transition factor 3\n  slot Y\n",
            "t",
        )
        .unwrap_err();
        assert!(err.to_string().contains("two transitions"), "{err}");
    }

    #[test]
    fn overlay_anchor_must_resolve() {
        let err = parse_grammar(
            "rule a(X):\n  slot X\n  overlay eyebrows \"r\" from end(X) to end(Z)\n",
            "t",
        )
        .unwrap_err();
        assert!(
            matches!(err, GrammarError::UnresolvedAnchor { ref anchor, .. } if anchor == "end(Z)"),
            "{err}"
        );
        let err = parse_grammar(
            "rule a(X):\n  slot X\n  overlay eyebrows \"r\" from start(0) to end(3)\n",
            "t",
        )
        .unwrap_err();
        assert!(matches!(err, GrammarError::UnresolvedAnchor { .. }), "{err}");
    }

    #[test]
    fn overlay_needs_timeline_material() {
        let err = parse_grammar(
            "rule a(X):\n  overlay eyebrows \"r\" from start(0) to end(0)\n",
            "t",
        )
        .unwrap_err();
        assert!(matches!(err, GrammarError::NoTimelineMaterial { .. }), "{err}");
    }

    #[test]
    fn nested_seq_blocks_group_items() {
        let g = parse(
            "rule pair(A, B):\n  seq:\n    slot A\n    slot B\n  posture lips \"tight\" hold\n",
        );
        let rule = g.get("pair").unwrap();
        let FormSpec::Seq { items, transitions } = &rule.rhs else { panic!() };
        assert_eq!(items.len(), 2);
        assert_eq!(transitions.len(), 1);
        assert_eq!(transitions[0], TransitionSpec::default());
        assert!(matches!(&items[0], FormSpec::Seq { items, .. } if items.len() == 2));
    }

    #[test]
    fn item_index_anchors_resolve_against_timeline_positions() {
        let g = parse(
            "rule a(X, Y):\n  slot X\n  overlay gaze \"g\" from start(0) to end(1)\n  slot Y\n",
        );
        let rule = g.get("a").unwrap();
        let FormSpec::Seq { items, .. } = &rule.rhs else { panic!() };
        assert_eq!(items.len(), 3);
        assert!(items[1].is_overlay());
    }

    #[test]
    fn comments_and_blank_lines_are_ignored() {
        let g = parse(
            "# heading\n\nrule a():  # trailing comment\n  posture lips \"x\" sign\n  # commented out line\n",
        );
        assert_eq!(g.len(), 1);
    }

    #[test]
    fn syntax_errors_carry_positions() {
        let err = parse_grammar("rule a() posture lips \"x\" sign", "t").unwrap_err();
        let GrammarError::Syntax { line, column, message } = err else { panic!("{err}") };
        assert_eq!(line, 1);
        assert!(column > 1);
        assert!(message.contains("expected `:`"), "{message}");
    }

    #[test]
    fn empty_body_rejected() {
        let err = parse_grammar("rule a():\nrule b(): posture lips \"x\" sign", "t").unwrap_err();
        assert!(err.to_string().contains("empty body"), "{err}");
    }
}
