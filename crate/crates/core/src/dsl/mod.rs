//! Text format for circuits (`.rfc` files).
//!
//! ```text
//! circuit selmem {
//!   input I1; input I2; control sel;
//!   clock c1 free; clock c2 period 4 offset 1; clock c3 edges [0, 5];
//!   ff M1 clock c1 from {I1};
//!   ff M2 clock c2 from {I2};
//!   output select sel { {M1}, {M2} };
//! }
//! ```
//!
//! Flip-flops may also use `select`. Keywords are reserved; identifiers are
//! ASCII letters, digits and underscores starting with a letter. `//` starts
//! a line comment.

mod lexer;

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt::{self, Write};

use crate::model::{Circuit, Clock, ClockRef, FlipFlop, Selector, Source, SourceSet};
use lexer::Token;

const KEYWORDS: &[&str] = &[
    "circuit", "input", "control", "clock", "period", "offset", "edges", "free", "ff", "from",
    "output", "select",
];

/// Byte range in the source text.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Span {
    pub start: usize,
    pub end: usize,
}

impl Span {
    pub fn new(start: usize, end: usize) -> Self {
        Self { start, end }
    }

    /// 1-based line and column of the span start.
    pub fn line_col(&self, text: &str) -> (usize, usize) {
        let before = &text[..self.start.min(text.len())];
        let line = before.matches('\n').count() + 1;
        let col = before.rsplit('\n').next().map_or(0, |l| l.chars().count()) + 1;
        (line, col)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ParseErrorKind {
    Lexical,
    Syntax,
    UnknownIdentifier,
    DuplicateName,
    SelectorArity,
    ClockRedefinition,
    Invalid,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ParseError {
    pub kind: ParseErrorKind,
    pub span: Span,
    pub message: String,
}

impl ParseError {
    pub(crate) fn new(kind: ParseErrorKind, span: Span, message: impl Into<String>) -> Self {
        Self {
            kind,
            span,
            message: message.into(),
        }
    }

    /// `line:col: message` against the text the error came from.
    pub fn render(&self, text: &str) -> String {
        let (line, col) = self.span.line_col(text);
        format!("{line}:{col}: {}", self.message)
    }
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} (bytes {}..{})",
            self.message, self.span.start, self.span.end
        )
    }
}

impl core::error::Error for ParseError {}

#[derive(Debug)]
struct Name {
    text: String,
    span: Span,
}

#[derive(Debug)]
enum ClockSpec {
    Periodic { period: usize, offset: usize },
    Edges(BTreeSet<usize>),
    Free,
}

#[derive(Debug)]
enum SelectorSpec {
    From(Vec<Name>),
    Select {
        control: Name,
        alternatives: Vec<Vec<Name>>,
    },
}

#[derive(Debug)]
enum Item {
    Input(Name),
    Control(Name),
    Clock {
        name: Name,
        spec: ClockSpec,
        span: Span,
    },
    Ff {
        name: Name,
        clock: Name,
        input: SelectorSpec,
    },
    Output {
        span: Span,
        input: SelectorSpec,
    },
}

struct Parser<'a> {
    tokens: Vec<(Token, Span)>,
    pos: usize,
    text: &'a str,
}

impl Parser<'_> {
    fn eof_span(&self) -> Span {
        Span::new(self.text.len(), self.text.len())
    }

    fn peek(&self) -> Option<&(Token, Span)> {
        self.tokens.get(self.pos)
    }

    fn unexpected(&self, expected: &str) -> ParseError {
        match self.peek() {
            Some((tok, span)) => ParseError::new(
                ParseErrorKind::Syntax,
                *span,
                format!("expected {expected}, found {}", tok.describe()),
            ),
            None => ParseError::new(
                ParseErrorKind::Syntax,
                self.eof_span(),
                format!("expected {expected}, found end of input"),
            ),
        }
    }

    fn expect(&mut self, token: Token) -> Result<Span, ParseError> {
        match self.peek() {
            Some((t, span)) if *t == token => {
                let span = *span;
                self.pos += 1;
                Ok(span)
            }
            _ => Err(self.unexpected(&token.describe())),
        }
    }

    fn keyword(&mut self, word: &str) -> Result<Span, ParseError> {
        match self.peek() {
            Some((Token::Ident(s), span)) if s == word => {
                let span = *span;
                self.pos += 1;
                Ok(span)
            }
            _ => Err(self.unexpected(&format!("`{word}`"))),
        }
    }

    fn at_keyword(&self, word: &str) -> bool {
        matches!(self.peek(), Some((Token::Ident(s), _)) if s == word)
    }

    fn ident(&mut self) -> Result<Name, ParseError> {
        match self.peek() {
            Some((Token::Ident(s), span)) => {
                if KEYWORDS.contains(&s.as_str()) {
                    return Err(ParseError::new(
                        ParseErrorKind::Syntax,
                        *span,
                        format!("`{s}` is a reserved keyword"),
                    ));
                }
                let name = Name {
                    text: s.clone(),
                    span: *span,
                };
                self.pos += 1;
                Ok(name)
            }
            _ => Err(self.unexpected("an identifier")),
        }
    }

    fn int(&mut self) -> Result<(usize, Span), ParseError> {
        match self.peek() {
            Some((Token::Int(n), span)) => {
                let out = (*n, *span);
                self.pos += 1;
                Ok(out)
            }
            _ => Err(self.unexpected("an integer")),
        }
    }

    fn source_set(&mut self) -> Result<Vec<Name>, ParseError> {
        self.expect(Token::LBrace)?;
        let mut names = Vec::new();
        if self.expect(Token::RBrace).is_ok() {
            return Ok(names);
        }
        loop {
            names.push(self.ident()?);
            if self.expect(Token::Comma).is_err() {
                self.expect(Token::RBrace)?;
                return Ok(names);
            }
        }
    }

    fn selector(&mut self) -> Result<SelectorSpec, ParseError> {
        if self.at_keyword("from") {
            self.pos += 1;
            return Ok(SelectorSpec::From(self.source_set()?));
        }
        if self.at_keyword("select") {
            self.pos += 1;
            let control = self.ident()?;
            self.expect(Token::LBrace)?;
            let mut alternatives = Vec::new();
            loop {
                alternatives.push(self.source_set()?);
                if self.expect(Token::Comma).is_err() {
                    self.expect(Token::RBrace)?;
                    break;
                }
            }
            return Ok(SelectorSpec::Select {
                control,
                alternatives,
            });
        }
        Err(self.unexpected("`from` or `select`"))
    }

    fn clock_spec(&mut self) -> Result<ClockSpec, ParseError> {
        if self.at_keyword("period") {
            self.pos += 1;
            let (period, _) = self.int()?;
            self.keyword("offset")?;
            let (offset, _) = self.int()?;
            Ok(ClockSpec::Periodic { period, offset })
        } else if self.at_keyword("edges") {
            self.pos += 1;
            self.expect(Token::LBracket)?;
            let mut edges = BTreeSet::new();
            if self.expect(Token::RBracket).is_ok() {
                return Ok(ClockSpec::Edges(edges));
            }
            loop {
                edges.insert(self.int()?.0);
                if self.expect(Token::Comma).is_err() {
                    self.expect(Token::RBracket)?;
                    return Ok(ClockSpec::Edges(edges));
                }
            }
        } else if self.at_keyword("free") {
            self.pos += 1;
            Ok(ClockSpec::Free)
        } else {
            Err(self.unexpected("`period`, `edges` or `free`"))
        }
    }

    fn item(&mut self) -> Result<Item, ParseError> {
        let start = self.peek().map_or(self.eof_span(), |(_, s)| *s);
        let item = if self.at_keyword("input") {
            self.pos += 1;
            Item::Input(self.ident()?)
        } else if self.at_keyword("control") {
            self.pos += 1;
            Item::Control(self.ident()?)
        } else if self.at_keyword("clock") {
            self.pos += 1;
            let name = self.ident()?;
            let spec = self.clock_spec()?;
            let end = self.tokens[self.pos - 1].1;
            Item::Clock {
                name,
                spec,
                span: Span::new(start.start, end.end),
            }
        } else if self.at_keyword("ff") {
            self.pos += 1;
            let name = self.ident()?;
            self.keyword("clock")?;
            let clock = self.ident()?;
            let input = self.selector()?;
            Item::Ff { name, clock, input }
        } else if self.at_keyword("output") {
            self.pos += 1;
            let input = self.selector()?;
            Item::Output { span: start, input }
        } else {
            return Err(self.unexpected("`input`, `control`, `clock`, `ff`, `output` or `}`"));
        };
        self.expect(Token::Semi)?;
        Ok(item)
    }
}

/// Parses and validates one circuit.
pub fn parse(text: &str) -> Result<Circuit, ParseError> {
    let mut p = Parser {
        tokens: lexer::tokenize(text)?,
        pos: 0,
        text,
    };
    p.keyword("circuit")?;
    let name = p.ident()?;
    p.expect(Token::LBrace)?;
    let mut items = Vec::new();
    let close = loop {
        if let Some((Token::RBrace, span)) = p.peek() {
            let span = *span;
            p.pos += 1;
            break span;
        }
        items.push(p.item()?);
    };
    if p.peek().is_some() {
        return Err(p.unexpected("end of input"));
    }
    build(name, items, close)
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Kind {
    Data(usize),
    Control(usize),
    Clock(usize),
    Ff(usize),
}

fn build(name: Name, items: Vec<Item>, close: Span) -> Result<Circuit, ParseError> {
    let mut symbols: BTreeMap<String, Kind> = BTreeMap::new();
    let mut circuit = Circuit {
        name: name.text,
        data_ports: Vec::new(),
        control_ports: Vec::new(),
        clocks: Vec::new(),
        ffs: Vec::new(),
        output: Selector::fixed([]),
    };
    let mut declare = |n: &Name, kind: Kind| -> Result<(), ParseError> {
        match symbols.get(&n.text) {
            Some(Kind::Clock(_)) if matches!(kind, Kind::Clock(_)) => Err(ParseError::new(
                ParseErrorKind::ClockRedefinition,
                n.span,
                format!("clock {} is defined twice", n.text),
            )),
            Some(_) => Err(ParseError::new(
                ParseErrorKind::DuplicateName,
                n.span,
                format!("duplicate name {}", n.text),
            )),
            None => {
                symbols.insert(n.text.clone(), kind);
                Ok(())
            }
        }
    };

    // declarations first so that references may point forward
    let mut ff_items = Vec::new();
    let mut output = None;
    for item in items {
        match item {
            Item::Input(n) => {
                declare(&n, Kind::Data(circuit.data_ports.len()))?;
                circuit.data_ports.push(n.text);
            }
            Item::Control(n) => {
                declare(&n, Kind::Control(circuit.control_ports.len()))?;
                circuit.control_ports.push(n.text);
            }
            Item::Clock { name, spec, span } => {
                declare(&name, Kind::Clock(circuit.clocks.len()))?;
                let kind = match spec {
                    ClockSpec::Periodic { period, offset } => {
                        if period == 0 || offset >= period {
                            return Err(ParseError::new(
                                ParseErrorKind::Invalid,
                                span,
                                format!("clock {} needs period > 0 and offset < period", name.text),
                            ));
                        }
                        ClockRef::Periodic { period, offset }
                    }
                    ClockSpec::Edges(edges) => ClockRef::Edges(edges),
                    ClockSpec::Free => ClockRef::Free,
                };
                circuit.clocks.push(Clock {
                    name: name.text,
                    kind,
                });
            }
            Item::Ff { name, clock, input } => {
                declare(&name, Kind::Ff(ff_items.len()))?;
                ff_items.push((name, clock, input));
            }
            Item::Output { span, input } => {
                if output.is_some() {
                    return Err(ParseError::new(
                        ParseErrorKind::Invalid,
                        span,
                        "only one output is allowed",
                    ));
                }
                output = Some((span, input));
            }
        }
    }
    if circuit.data_ports.is_empty() {
        return Err(ParseError::new(
            ParseErrorKind::Invalid,
            name.span,
            "a circuit needs at least one data input",
        ));
    }
    let Some((output_span, output_spec)) = output else {
        return Err(ParseError::new(
            ParseErrorKind::Invalid,
            close,
            "missing output",
        ));
    };

    let lookup = |n: &Name| {
        symbols.get(&n.text).copied().ok_or_else(|| {
            ParseError::new(
                ParseErrorKind::UnknownIdentifier,
                n.span,
                format!("unknown identifier {}", n.text),
            )
        })
    };
    let source_set = |names: &[Name]| -> Result<SourceSet, ParseError> {
        names
            .iter()
            .map(|n| match lookup(n)? {
                Kind::Data(p) => Ok(Source::Data(p)),
                Kind::Ff(f) => Ok(Source::Ff(f)),
                _ => Err(ParseError::new(
                    ParseErrorKind::Invalid,
                    n.span,
                    format!("{} is not a data input or flip-flop", n.text),
                )),
            })
            .collect()
    };
    let mut arities: BTreeMap<usize, usize> = BTreeMap::new();
    let mut selector = |spec: &SelectorSpec| -> Result<Selector, ParseError> {
        match spec {
            SelectorSpec::From(names) => Ok(Selector::fixed(source_set(names)?)),
            SelectorSpec::Select {
                control,
                alternatives,
            } => {
                let Kind::Control(c) = lookup(control)? else {
                    return Err(ParseError::new(
                        ParseErrorKind::Invalid,
                        control.span,
                        format!("{} is not a control input", control.text),
                    ));
                };
                let arity = *arities.entry(c).or_insert(alternatives.len());
                if arity != alternatives.len() {
                    return Err(ParseError::new(
                        ParseErrorKind::SelectorArity,
                        control.span,
                        format!(
                            "control {} selects among {arity} alternatives elsewhere, {} here",
                            control.text,
                            alternatives.len()
                        ),
                    ));
                }
                let alternatives = alternatives
                    .iter()
                    .map(|a| source_set(a))
                    .collect::<Result<Vec<_>, _>>()?;
                Ok(Selector::select(c, alternatives))
            }
        }
    };
    for (name, clock, input) in &ff_items {
        let Kind::Clock(clock) = lookup(clock)? else {
            return Err(ParseError::new(
                ParseErrorKind::Invalid,
                clock.span,
                format!("{} is not a clock", clock.text),
            ));
        };
        circuit.ffs.push(FlipFlop {
            name: name.text.clone(),
            clock,
            data_input: selector(input)?,
        });
    }
    circuit.output = selector(&output_spec)?;
    circuit
        .validate()
        .map_err(|e| ParseError::new(ParseErrorKind::Invalid, output_span, e.to_string()))?;
    Ok(circuit)
}

fn write_set(out: &mut String, circuit: &Circuit, set: &SourceSet) {
    out.push('{');
    for (i, s) in set.iter().enumerate() {
        if i > 0 {
            out.push_str(", ");
        }
        out.push_str(circuit.source_name(*s));
    }
    out.push('}');
}

fn write_selector(out: &mut String, circuit: &Circuit, selector: &Selector) {
    match selector.control {
        None => {
            out.push_str("from ");
            write_set(out, circuit, &selector.alternatives[0]);
        }
        Some(c) => {
            let _ = write!(out, "select {} {{ ", circuit.control_ports[c]);
            for (i, alt) in selector.alternatives.iter().enumerate() {
                if i > 0 {
                    out.push_str(", ");
                }
                write_set(out, circuit, alt);
            }
            out.push_str(" }");
        }
    }
}

/// Pretty-prints a circuit; `parse(&emit(c)) == Ok(c)` for valid circuits.
pub fn emit(circuit: &Circuit) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "circuit {} {{", circuit.name);
    for p in &circuit.data_ports {
        let _ = writeln!(out, "  input {p};");
    }
    for p in &circuit.control_ports {
        let _ = writeln!(out, "  control {p};");
    }
    for clock in &circuit.clocks {
        let _ = match &clock.kind {
            ClockRef::Periodic { period, offset } => writeln!(
                out,
                "  clock {} period {period} offset {offset};",
                clock.name
            ),
            ClockRef::Edges(edges) => {
                let list: Vec<String> = edges.iter().map(|e| e.to_string()).collect();
                writeln!(out, "  clock {} edges [{}];", clock.name, list.join(", "))
            }
            ClockRef::Free => writeln!(out, "  clock {} free;", clock.name),
        };
    }
    for ff in &circuit.ffs {
        let _ = write!(
            out,
            "  ff {} clock {} ",
            ff.name, circuit.clocks[ff.clock].name
        );
        write_selector(&mut out, circuit, &ff.data_input);
        out.push_str(";\n");
    }
    out.push_str("  output ");
    write_selector(&mut out, circuit, &circuit.output);
    out.push_str(";\n}\n");
    out
}
