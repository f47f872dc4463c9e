//! The `.bnet` network-definition format plus DOT, JSON and TSV writers.
//!
//! ```text
//! # two-point trait, five-point questions
//! var F   : 0 1 @trait
//! var Q11 : 1 2 3 4 5 @question
//!
//! prior F = [ 50 50 ]
//! cpt Q11 | F = [
//!   50 30 10  5  5 ;
//!    2  3  5 40 50
//! ]
//! ```
//!
//! * `#` starts a comment that runs to the end of the line.
//! * `var <name> : <state> <state> ...` declares a variable. States are bare
//!   words or double-quoted strings (`\"` and `\\` escape inside quotes). An
//!   optional trailing `@trait` or `@question` sets the role. A declaration
//!   ends at the end of its line.
//! * `cpt <child> [| <parent> [, <parent>]*] = [ <row> ; <row> ; ... ]` gives
//!   one row per parent configuration, enumerated row-major with the last
//!   parent varying fastest. Each row is a whitespace-separated list of
//!   nonnegative decimals and is normalized on load, so percentages work.
//!   A trailing `;` before `]` is allowed.
//! * `prior <name> = [ ... ]` is the same as `cpt <name> = [ ... ]`.
//! * Brackets may span lines. Variables must be declared before any table
//!   mentions them.
//!
//! Bare words are any run of characters other than whitespace and
//! `: | , = [ ] ; # @ "`. Input is UTF-8; LF and CRLF line ends both work.

use std::collections::BTreeMap;

use serde_json::{Map, Number, Value};

use crate::error::{Error, ParseError};
use crate::factor::Factor;
use crate::inference::QueryResult;
use crate::model::{build_network, is_bare_word, Cpt, Network, Role, Variable};
use crate::scalar::Scalar;
use crate::scoring::TraitScore;
use crate::simulate::SampleSet;

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Word(String),
    Quoted(String),
    Colon,
    Pipe,
    Comma,
    Equals,
    Open,
    Close,
    Semi,
    At,
    Newline,
    Eof,
}

impl Tok {
    fn describe(&self) -> String {
        match self {
            Tok::Word(w) => format!("'{w}'"),
            Tok::Quoted(q) => format!("\"{q}\""),
            Tok::Colon => "':'".into(),
            Tok::Pipe => "'|'".into(),
            Tok::Comma => "','".into(),
            Tok::Equals => "'='".into(),
            Tok::Open => "'['".into(),
            Tok::Close => "']'".into(),
            Tok::Semi => "';'".into(),
            Tok::At => "'@'".into(),
            Tok::Newline => "end of line".into(),
            Tok::Eof => "end of input".into(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
struct Pos {
    line: usize,
    column: usize,
}

#[derive(Debug, Clone)]
struct Token {
    tok: Tok,
    pos: Pos,
}

struct Lexer<'a> {
    chars: std::iter::Peekable<std::str::Chars<'a>>,
    line: usize,
    column: usize,
}

impl<'a> Lexer<'a> {
    fn new(text: &'a str) -> Self {
        Lexer {
            chars: text.chars().peekable(),
            line: 1,
            column: 1,
        }
    }

    fn bump(&mut self) -> Option<char> {
        let c = self.chars.next()?;
        if c == '\n' {
            self.line += 1;
            self.column = 1;
        } else {
            self.column += 1;
        }
        Some(c)
    }

    fn tokens(mut self) -> Result<Vec<Token>, (Pos, String)> {
        let mut out = Vec::new();
        loop {
            let pos = Pos {
                line: self.line,
                column: self.column,
            };
            let Some(&c) = self.chars.peek() else {
                out.push(Token { tok: Tok::Eof, pos });
                return Ok(out);
            };
            let tok = match c {
                '\n' => {
                    self.bump();
                    Tok::Newline
                }
                c if c.is_whitespace() => {
                    self.bump();
                    continue;
                }
                '#' => {
                    while self.chars.peek().is_some_and(|&c| c != '\n') {
                        self.bump();
                    }
                    continue;
                }
                '"' => {
                    self.bump();
                    Tok::Quoted(self.quoted(pos)?)
                }
                ':' | '|' | ',' | '=' | '[' | ']' | ';' | '@' => {
                    self.bump();
                    match c {
                        ':' => Tok::Colon,
                        '|' => Tok::Pipe,
                        ',' => Tok::Comma,
                        '=' => Tok::Equals,
                        '[' => Tok::Open,
                        ']' => Tok::Close,
                        ';' => Tok::Semi,
                        _ => Tok::At,
                    }
                }
                _ => {
                    let mut word = String::new();
                    while let Some(&c) = self.chars.peek() {
                        if c.is_whitespace() || crate::model::RESERVED_CHARS.contains(&c) {
                            break;
                        }
                        word.push(c);
                        self.bump();
                    }
                    Tok::Word(word)
                }
            };
            out.push(Token { tok, pos });
        }
    }

    fn quoted(&mut self, start: Pos) -> Result<String, (Pos, String)> {
        let mut text = String::new();
        loop {
            let here = Pos {
                line: self.line,
                column: self.column,
            };
            match self.bump() {
                None | Some('\n') => return Err((start, "unterminated quoted string".into())),
                Some('"') => return Ok(text),
                Some('\\') => match self.bump() {
                    Some(c @ ('"' | '\\')) => text.push(c),
                    _ => {
                        return Err((
                            here,
                            "unsupported escape; only \\\" and \\\\ are allowed".into(),
                        ))
                    }
                },
                Some(c) => text.push(c),
            }
        }
    }
}

struct Parser<'a, T> {
    lines: Vec<&'a str>,
    tokens: Vec<Token>,
    at: usize,
    variables: Vec<Variable>,
    declared: BTreeMap<String, Pos>,
    cpts: Vec<Cpt<T>>,
    tables: BTreeMap<String, Pos>,
}

type Step<V> = Result<V, ParseError>;

impl<'a, T: Scalar> Parser<'a, T> {
    fn error(&self, pos: Pos, message: impl Into<String>) -> ParseError {
        ParseError {
            line: pos.line,
            column: pos.column,
            message: message.into(),
            snippet: self
                .lines
                .get(pos.line - 1)
                .map(|l| l.trim_end_matches('\r').to_string())
                .unwrap_or_default(),
        }
    }

    fn peek(&self) -> &Token {
        &self.tokens[self.at]
    }

    fn next(&mut self) -> Token {
        let token = self.tokens[self.at].clone();
        if self.at + 1 < self.tokens.len() {
            self.at += 1;
        }
        token
    }

    fn expect(&mut self, want: Tok, what: &str) -> Step<Token> {
        let token = self.next();
        if token.tok == want {
            Ok(token)
        } else {
            Err(self.error(
                token.pos,
                format!("expected {what}, found {}", token.tok.describe()),
            ))
        }
    }

    fn expect_end_of_statement(&mut self) -> Step<()> {
        let token = self.next();
        match token.tok {
            Tok::Newline | Tok::Eof => Ok(()),
            other => Err(self.error(
                token.pos,
                format!("expected end of line, found {}", other.describe()),
            )),
        }
    }

    fn skip_newlines(&mut self) {
        while self.peek().tok == Tok::Newline {
            self.next();
        }
    }

    fn name(&mut self, what: &str) -> Step<(String, Pos)> {
        let token = self.next();
        match token.tok {
            Tok::Word(w) => Ok((w, token.pos)),
            other => Err(self.error(
                token.pos,
                format!("expected {what}, found {}", other.describe()),
            )),
        }
    }

    fn declared_variable(&mut self, what: &str) -> Step<(String, Pos)> {
        let (name, pos) = self.name(what)?;
        if !self.declared.contains_key(&name) {
            return Err(self.error(pos, format!("undeclared variable '{name}'")));
        }
        Ok((name, pos))
    }

    fn run(mut self) -> Step<Network<T>> {
        loop {
            self.skip_newlines();
            let token = self.next();
            match &token.tok {
                Tok::Eof => break,
                Tok::Word(w) if w == "var" => self.var_statement()?,
                Tok::Word(w) if w == "cpt" => self.cpt_statement(token.pos, false)?,
                Tok::Word(w) if w == "prior" => self.cpt_statement(token.pos, true)?,
                other => {
                    return Err(self.error(
                        token.pos,
                        format!(
                            "unknown token {}; expected 'var', 'cpt' or 'prior'",
                            other.describe()
                        ),
                    ))
                }
            }
        }
        if self.variables.is_empty() {
            return Err(self.error(Pos { line: 1, column: 1 }, "no variables declared"));
        }
        for var in &self.variables {
            if !self.tables.contains_key(var.name()) {
                let pos = self.declared[var.name()];
                return Err(self.error(
                    pos,
                    format!(
                        "variable '{}' has no table; add a 'cpt' or 'prior' statement",
                        var.name()
                    ),
                ));
            }
        }
        let tables = std::mem::take(&mut self.tables);
        build_network(
            std::mem::take(&mut self.variables),
            std::mem::take(&mut self.cpts),
        )
        .map_err(|err| {
            let pos = match &err {
                Error::Cycle(cycle) => cycle.first().and_then(|v| tables.get(v)).copied(),
                _ => None,
            };
            self.error(pos.unwrap_or(Pos { line: 1, column: 1 }), err.to_string())
        })
    }

    fn var_statement(&mut self) -> Step<()> {
        let (name, name_pos) = self.name("a variable name")?;
        if self.declared.contains_key(&name) {
            return Err(self.error(name_pos, format!("variable '{name}' is declared twice")));
        }
        self.expect(Tok::Colon, "':' after the variable name")?;
        let mut states: Vec<(String, Pos)> = Vec::new();
        let mut role = Role::Unspecified;
        loop {
            let token = self.peek().clone();
            match token.tok {
                Tok::Word(s) | Tok::Quoted(s) => {
                    self.next();
                    if s.is_empty() {
                        return Err(self.error(token.pos, "state labels cannot be empty"));
                    }
                    if states.iter().any(|(existing, _)| *existing == s) {
                        return Err(self.error(
                            token.pos,
                            format!("state '{s}' of '{name}' is listed twice"),
                        ));
                    }
                    states.push((s, token.pos));
                }
                Tok::At => {
                    self.next();
                    let (tag, pos) = self.name("a role after '@'")?;
                    role = match tag.as_str() {
                        "trait" => Role::Trait,
                        "question" => Role::Question,
                        _ => {
                            return Err(self.error(
                                pos,
                                format!("unknown role '{tag}'; expected 'trait' or 'question'"),
                            ))
                        }
                    };
                    break;
                }
                _ => break,
            }
        }
        if states.len() < 2 {
            return Err(self.error(
                name_pos,
                format!(
                    "variable '{name}' needs at least two states, found {}",
                    states.len()
                ),
            ));
        }
        self.expect_end_of_statement()?;
        let variable = Variable::new(name.clone(), states.into_iter().map(|(s, _)| s), role)
            .map_err(|e| self.error(name_pos, e.to_string()))?;
        self.declared.insert(name, name_pos);
        self.variables.push(variable);
        Ok(())
    }

    fn cardinality(&self, name: &str) -> usize {
        self.variables
            .iter()
            .find(|v| v.name() == name)
            .map(Variable::cardinality)
            .expect("declared variable")
    }

    fn cpt_statement(&mut self, keyword: Pos, prior: bool) -> Step<()> {
        let (child, child_pos) = self.declared_variable("the table's variable name")?;
        if self.tables.contains_key(&child) {
            return Err(self.error(child_pos, format!("variable '{child}' already has a table")));
        }
        let mut parents: Vec<String> = Vec::new();
        if !prior && self.peek().tok == Tok::Pipe {
            self.next();
            loop {
                let (parent, pos) = self.declared_variable("a parent variable name")?;
                if parents.contains(&parent) {
                    return Err(self.error(pos, format!("parent '{parent}' is listed twice")));
                }
                parents.push(parent);
                if self.peek().tok != Tok::Comma {
                    break;
                }
                self.next();
            }
        }
        self.expect(Tok::Equals, "'='")?;
        let open = self.expect(Tok::Open, "'[' to start the table")?;

        let child_card = self.cardinality(&child);
        let expected_rows: usize = parents.iter().map(|p| self.cardinality(p)).product();
        let mut rows: Vec<Vec<T>> = Vec::new();
        let mut row: Vec<T> = Vec::new();
        let mut row_start: Option<Pos> = None;
        loop {
            let token = self.next();
            match token.tok {
                Tok::Newline => {}
                Tok::Word(w) => {
                    row_start.get_or_insert(token.pos);
                    let value = T::parse_decimal(&w).ok_or_else(|| {
                        let msg = if w.starts_with('-') {
                            format!("probabilities cannot be negative, found '{w}'")
                        } else {
                            format!("expected a nonnegative number, found '{w}'")
                        };
                        self.error(token.pos, msg)
                    })?;
                    row.push(value);
                }
                Tok::Semi | Tok::Close => {
                    let closing = token.tok == Tok::Close;
                    if row.is_empty() {
                        if !(closing && !rows.is_empty()) {
                            return Err(self.error(token.pos, "empty row"));
                        }
                    } else {
                        let start = row_start.take().unwrap_or(token.pos);
                        self.check_row(&child, rows.len() + 1, &row, child_card, start)?;
                        rows.push(std::mem::take(&mut row));
                    }
                    if closing {
                        break;
                    }
                }
                Tok::Eof => {
                    return Err(self.error(open.pos, "unclosed '[': table never ends"));
                }
                other => {
                    return Err(self.error(
                        token.pos,
                        format!("unexpected {} inside a table", other.describe()),
                    ))
                }
            }
        }
        if rows.len() != expected_rows {
            return Err(self.error(
                open.pos,
                format!(
                    "table for '{child}' needs {expected_rows} row(s), one per parent configuration, found {}",
                    rows.len()
                ),
            ));
        }
        self.expect_end_of_statement()?;
        self.tables.insert(child.clone(), keyword);
        self.cpts.push(Cpt::new(child, parents, rows));
        Ok(())
    }

    fn check_row(
        &self,
        child: &str,
        number: usize,
        row: &[T],
        card: usize,
        start: Pos,
    ) -> Step<()> {
        if row.len() != card {
            return Err(self.error(
                start,
                format!(
                    "row {number} of '{child}' has {} entries, expected {card}",
                    row.len()
                ),
            ));
        }
        if T::sum_of(row.iter()).is_zero() {
            return Err(self.error(start, format!("row {number} of '{child}' is all zeros")));
        }
        Ok(())
    }
}

/// Reads a network from `.bnet` text.
pub fn parse_network<T: Scalar>(text: &str) -> Result<Network<T>, ParseError> {
    let text = text.strip_prefix('\u{feff}').unwrap_or(text);
    let lines: Vec<&str> = text.split('\n').collect();
    let tokens = Lexer::new(text)
        .tokens()
        .map_err(|(pos, message)| ParseError {
            line: pos.line,
            column: pos.column,
            message,
            snippet: lines
                .get(pos.line - 1)
                .map(|l| l.trim_end_matches('\r').to_string())
                .unwrap_or_default(),
        })?;
    Parser {
        lines,
        tokens,
        at: 0,
        variables: Vec::new(),
        declared: BTreeMap::new(),
        cpts: Vec::new(),
        tables: BTreeMap::new(),
    }
    .run()
}

fn quote_if_needed(label: &str) -> String {
    if is_bare_word(label) {
        label.to_string()
    } else {
        let escaped = label.replace('\\', "\\\\").replace('"', "\\\"");
        format!("\"{escaped}\"")
    }
}

fn join_row<T: Scalar>(row: &[T]) -> String {
    row.iter()
        .map(Scalar::to_decimal_string)
        .collect::<Vec<_>>()
        .join(" ")
}

/// Canonical `.bnet` text: declarations then tables, both in topological
/// order, numbers in their shortest round-trip form.
pub fn serialize_network<T: Scalar>(network: &Network<T>) -> String {
    let order = network.topological_order();
    let mut out = String::new();
    for name in &order {
        let var = network.variable(name).expect("ordered variable exists");
        out.push_str("var ");
        out.push_str(name);
        out.push_str(" :");
        for state in var.states() {
            out.push(' ');
            out.push_str(&quote_if_needed(state));
        }
        match var.role() {
            Role::Trait => out.push_str(" @trait"),
            Role::Question => out.push_str(" @question"),
            Role::Unspecified => {}
        }
        out.push('\n');
    }
    for name in &order {
        let cpt = network.cpt(name).expect("every variable has a table");
        out.push('\n');
        if cpt.parents().is_empty() {
            out.push_str(&format!("prior {name} = [ {} ]\n", join_row(cpt.row(0))));
            continue;
        }
        out.push_str(&format!("cpt {name} | {} = [\n", cpt.parents().join(", ")));
        let rows = cpt.rows();
        for (i, row) in rows.iter().enumerate() {
            out.push_str("  ");
            out.push_str(&join_row(row));
            out.push_str(if i + 1 < rows.len() { " ;\n" } else { "\n" });
        }
        out.push_str("]\n");
    }
    out
}

fn dot_id(name: &str) -> String {
    format!("\"{}\"", name.replace('\\', "\\\\").replace('"', "\\\""))
}

/// Graphviz rendering of the network: traits as ellipses, questions as
/// boxes, anything else as a circle.
pub fn export_dot<T: Scalar>(network: &Network<T>) -> String {
    let mut out = String::from("digraph network {\n");
    for name in network.topological_order() {
        let var = network.variable(name).expect("ordered variable exists");
        let shape = match var.role() {
            Role::Trait => "ellipse",
            Role::Question => "box",
            Role::Unspecified => "circle",
        };
        out.push_str(&format!(
            "  {} [label={}, shape={}];\n",
            dot_id(name),
            dot_id(name),
            shape
        ));
    }
    let position: BTreeMap<&str, usize> = network
        .topological_order()
        .into_iter()
        .enumerate()
        .map(|(i, n)| (n, i))
        .collect();
    let mut edges = network.edges();
    edges.sort_by_key(|(parent, child)| (position[parent], *child));
    for (parent, child) in edges {
        out.push_str(&format!("  {} -> {};\n", dot_id(parent), dot_id(child)));
    }
    out.push_str("}\n");
    out
}

fn number(value: f64) -> Value {
    Number::from_f64(value)
        .map(Value::Number)
        .unwrap_or(Value::Null)
}

fn result_value<T: Scalar>(result: &QueryResult<T>) -> Value {
    let mut marginals = Map::new();
    for m in result.marginals() {
        let dist: Map<String, Value> = m
            .iter()
            .map(|(s, p)| (s.to_string(), number(p.to_f64())))
            .collect();
        marginals.insert(m.variable().to_string(), Value::Object(dist));
    }
    let mut root = Map::new();
    root.insert(
        "evidence_probability".into(),
        number(result.evidence_probability().to_f64()),
    );
    root.insert("marginals".into(), Value::Object(marginals));
    Value::Object(root)
}

/// `{"evidence_probability": p, "marginals": {var: {state: p, ...}, ...}}`,
/// variables in query order and states in declaration order.
pub fn export_result_json<T: Scalar>(result: &QueryResult<T>) -> String {
    serde_json::to_string_pretty(&result_value(result)).expect("JSON values serialize")
}

/// Trait summary as JSON.
pub fn export_trait_score_json<T: Scalar>(score: &TraitScore<T>) -> String {
    let posterior: Map<String, Value> = score
        .states
        .iter()
        .zip(&score.posterior)
        .map(|(s, p)| (s.clone(), number(p.to_f64())))
        .collect();
    let thresholds: Vec<Value> = score
        .thresholds
        .iter()
        .map(|t| {
            let mut m = Map::new();
            m.insert("threshold".into(), Value::String(t.threshold.to_string()));
            m.insert("probability".into(), number(t.probability.to_f64()));
            Value::Object(m)
        })
        .collect();
    let mut root = Map::new();
    root.insert("variable".into(), Value::String(score.variable.clone()));
    root.insert("posterior".into(), Value::Object(posterior));
    root.insert("map_state".into(), Value::String(score.map_state.clone()));
    root.insert(
        "expected_level".into(),
        score
            .expected_level
            .as_ref()
            .map_or(Value::Null, |v| number(v.to_f64())),
    );
    root.insert("thresholds".into(), Value::Array(thresholds));
    serde_json::to_string_pretty(&Value::Object(root)).expect("JSON values serialize")
}

/// Joint table as JSON: the scope and one entry per configuration in
/// row-major order.
pub fn export_joint_json<T: Scalar>(joint: &Factor<T>) -> String {
    let scope: Vec<Value> = joint
        .scope()
        .iter()
        .map(|v| Value::String(v.name().to_string()))
        .collect();
    let rows: Vec<Value> = joint_rows(joint)
        .into_iter()
        .map(|(states, p)| {
            let mut m = Map::new();
            m.insert(
                "states".into(),
                Value::Array(states.into_iter().map(Value::String).collect()),
            );
            m.insert("probability".into(), number(p));
            Value::Object(m)
        })
        .collect();
    let mut root = Map::new();
    root.insert("scope".into(), Value::Array(scope));
    root.insert("entries".into(), Value::Array(rows));
    serde_json::to_string_pretty(&Value::Object(root)).expect("JSON values serialize")
}

/// Every configuration of a factor with its value, row-major.
pub fn joint_rows<T: Scalar>(joint: &Factor<T>) -> Vec<(Vec<String>, f64)> {
    let scope = joint.scope();
    let mut counter = vec![0usize; scope.len()];
    let mut out = Vec::with_capacity(joint.values().len());
    for value in joint.values() {
        let labels = counter
            .iter()
            .zip(scope)
            .map(|(&s, v)| v.states()[s].clone())
            .collect();
        out.push((labels, value.to_f64()));
        for i in (0..counter.len()).rev() {
            counter[i] += 1;
            if counter[i] < scope[i].cardinality() {
                break;
            }
            counter[i] = 0;
        }
    }
    out
}

/// Tab-separated samples: a `# seed=<seed>` line, a header with the variable
/// names followed by `weight`, then one line per sample. Labels containing
/// tabs or newlines are not representable and are written as-is.
pub fn export_samples_tsv(samples: &SampleSet) -> String {
    let mut out = format!("# seed={}\n", samples.seed());
    out.push_str(&samples.columns().join("\t"));
    out.push_str("\tweight\n");
    for (i, w) in samples.weights().iter().enumerate() {
        for label in samples.row_labels(i) {
            out.push_str(label);
            out.push('\t');
        }
        out.push_str(&format!("{w}\n"));
    }
    out
}

/// Fixed-point display rounding, half away from zero.
///
/// A relative allowance of 1e-9 absorbs binary representation error, so a
/// computed 0.165 (stored as 0.16499999999999998) shows as `0.17` at two
/// places, as its exact decimal value would.
pub fn format_fixed(value: f64, decimals: usize) -> String {
    if !value.is_finite() {
        return format!("{value}");
    }
    let scaled = value.abs() * 10f64.powi(decimals as i32);
    let rounded = (scaled * (1.0 + 1e-9) + 0.5).floor();
    if decimals > 15 || rounded >= 9.0e15 {
        return format!("{value:.decimals$}");
    }
    let rounded = rounded as u64;
    let unit = 10u64.pow(decimals as u32);
    let sign = if value < 0.0 && rounded != 0 { "-" } else { "" };
    if decimals == 0 {
        format!("{sign}{rounded}")
    } else {
        format!(
            "{sign}{}.{:0width$}",
            rounded / unit,
            rounded % unit,
            width = decimals
        )
    }
}
