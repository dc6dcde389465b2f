//! OpenQASM 2.0 subset: one quantum register, at most one classical register,
//! gates `x`, `sx`, `rz`, `cx`, `barrier`, `measure` (and `id`, which is
//! dropped on import).

use std::fmt::Write as _;

use crate::circuit::{Circuit, Gate};
use crate::error::{Error, Result};

const HEADER: &str = "OPENQASM 2.0;\ninclude \"qelib1.inc\";\n";

/// Serializes a native circuit. Output is byte-deterministic.
pub fn qasm_export(circuit: &Circuit) -> Result<String> {
    let mut out = String::from(HEADER);
    writeln!(out, "qreg q[{}];", circuit.n_qubits()).unwrap();
    let clbits = circuit
        .gates()
        .iter()
        .filter_map(|g| match g {
            Gate::Measure { clbit, .. } => Some(clbit + 1),
            _ => None,
        })
        .max();
    if let Some(size) = clbits {
        writeln!(out, "creg c[{size}];").unwrap();
    }
    for gate in circuit.gates() {
        match gate {
            Gate::X(q) => writeln!(out, "x q[{q}];").unwrap(),
            Gate::Sx(q) => writeln!(out, "sx q[{q}];").unwrap(),
            Gate::Rz(q, t) => writeln!(out, "rz({}) q[{q}];", format_angle(*t)).unwrap(),
            Gate::Cx { control, target } => writeln!(out, "cx q[{control}],q[{target}];").unwrap(),
            Gate::Barrier(qs) => {
                let args: Vec<String> = qs.iter().map(|q| format!("q[{q}]")).collect();
                writeln!(out, "barrier {};", args.join(",")).unwrap();
            }
            Gate::Measure { qubit, clbit } => writeln!(out, "measure q[{qubit}] -> c[{clbit}];").unwrap(),
            Gate::Su4 { .. } | Gate::Swap(..) => {
                return Err(Error::Unsupported(format!(
                    "{} cannot be exported; decompose to native gates first",
                    gate.kind()
                )));
            }
        }
    }
    Ok(out)
}

/// Prints multiples of π/4 symbolically when the symbolic form parses back to
/// the identical value, otherwise 17 significant digits.
pub fn format_angle(theta: f64) -> String {
    if theta == 0.0 {
        return "0".to_string();
    }
    let k = (theta / std::f64::consts::FRAC_PI_4).round();
    if k != 0.0 && k.abs() <= 8.0 {
        let sym = symbolic_quarter_pi(k as i64);
        if eval_angle_str(&sym).map(f64::to_bits) == Some(theta.to_bits()) {
            return sym;
        }
    }
    format!("{theta:.16e}")
}

fn symbolic_quarter_pi(k: i64) -> String {
    let sign = if k < 0 { "-" } else { "" };
    let k = k.abs();
    // reduce k/4
    let (num, den) = match k {
        4 => (1, 1),
        8 => (2, 1),
        2 => (1, 2),
        6 => (3, 2),
        _ => (k, 4),
    };
    let numer = if num == 1 { "pi".to_string() } else { format!("{num}*pi") };
    if den == 1 {
        format!("{sign}{numer}")
    } else {
        format!("{sign}{numer}/{den}")
    }
}

fn eval_angle_str(s: &str) -> Option<f64> {
    let tokens = tokenize(s).ok()?;
    let mut p = ExprParser { tokens: &tokens, pos: 0 };
    let v = p.expr().ok()?;
    (p.pos == tokens.len()).then_some(v)
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Ident(String),
    Int(u64),
    Real(f64),
    Str(String),
    Sym(&'static str),
}

#[derive(Debug, Clone)]
struct Token {
    tok: Tok,
    line: usize,
    col: usize,
}

fn parse_err(line: usize, column: usize, message: impl Into<String>) -> Error {
    Error::Qasm {
        line,
        column,
        message: message.into(),
    }
}

fn tokenize(text: &str) -> Result<Vec<Token>> {
    let mut tokens = Vec::new();
    for (li, line) in text.lines().enumerate() {
        let line_no = li + 1;
        let chars: Vec<char> = line.chars().collect();
        let mut i = 0;
        while i < chars.len() {
            let ch = chars[i];
            let col = i + 1;
            if ch.is_whitespace() {
                i += 1;
                continue;
            }
            if ch == '/' && chars.get(i + 1) == Some(&'/') {
                break;
            }
            if ch.is_ascii_alphabetic() || ch == '_' {
                let start = i;
                while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_') {
                    i += 1;
                }
                tokens.push(Token {
                    tok: Tok::Ident(chars[start..i].iter().collect()),
                    line: line_no,
                    col,
                });
                continue;
            }
            if ch.is_ascii_digit() || (ch == '.' && chars.get(i + 1).is_some_and(|c| c.is_ascii_digit())) {
                let start = i;
                let mut is_real = false;
                while i < chars.len() && chars[i].is_ascii_digit() {
                    i += 1;
                }
                if i < chars.len() && chars[i] == '.' {
                    is_real = true;
                    i += 1;
                    while i < chars.len() && chars[i].is_ascii_digit() {
                        i += 1;
                    }
                }
                if i < chars.len() && (chars[i] == 'e' || chars[i] == 'E') {
                    let mut j = i + 1;
                    if j < chars.len() && (chars[j] == '+' || chars[j] == '-') {
                        j += 1;
                    }
                    if j < chars.len() && chars[j].is_ascii_digit() {
                        is_real = true;
                        i = j;
                        while i < chars.len() && chars[i].is_ascii_digit() {
                            i += 1;
                        }
                    }
                }
                let lit: String = chars[start..i].iter().collect();
                let tok = if is_real {
                    Tok::Real(
                        lit.parse()
                            .map_err(|_| parse_err(line_no, col, format!("malformed number `{lit}`")))?,
                    )
                } else {
                    Tok::Int(
                        lit.parse()
                            .map_err(|_| parse_err(line_no, col, format!("malformed integer `{lit}`")))?,
                    )
                };
                tokens.push(Token { tok, line: line_no, col });
                continue;
            }
            if ch == '"' {
                let start = i + 1;
                let mut j = start;
                while j < chars.len() && chars[j] != '"' {
                    j += 1;
                }
                if j == chars.len() {
                    return Err(parse_err(line_no, col, "unterminated string"));
                }
                tokens.push(Token {
                    tok: Tok::Str(chars[start..j].iter().collect()),
                    line: line_no,
                    col,
                });
                i = j + 1;
                continue;
            }
            if ch == '-' && chars.get(i + 1) == Some(&'>') {
                tokens.push(Token {
                    tok: Tok::Sym("->"),
                    line: line_no,
                    col,
                });
                i += 2;
                continue;
            }
            let sym = match ch {
                ';' => ";",
                ',' => ",",
                '(' => "(",
                ')' => ")",
                '[' => "[",
                ']' => "]",
                '+' => "+",
                '-' => "-",
                '*' => "*",
                '/' => "/",
                _ => return Err(parse_err(line_no, col, format!("unexpected character `{ch}`"))),
            };
            tokens.push(Token {
                tok: Tok::Sym(sym),
                line: line_no,
                col,
            });
            i += 1;
        }
    }
    Ok(tokens)
}

struct ExprParser<'a> {
    tokens: &'a [Token],
    pos: usize,
}

impl ExprParser<'_> {
    fn peek(&self) -> Option<&Token> {
        self.tokens.get(self.pos)
    }

    fn here(&self) -> (usize, usize) {
        self.peek()
            .or_else(|| self.tokens.last())
            .map(|t| (t.line, t.col))
            .unwrap_or((1, 1))
    }

    fn is_sym(&self, s: &str) -> bool {
        matches!(self.peek(), Some(Token { tok: Tok::Sym(x), .. }) if *x == s)
    }

    fn expr(&mut self) -> Result<f64> {
        let mut acc = self.term()?;
        loop {
            if self.is_sym("+") {
                self.pos += 1;
                acc += self.term()?;
            } else if self.is_sym("-") {
                self.pos += 1;
                acc -= self.term()?;
            } else {
                return Ok(acc);
            }
        }
    }

    fn term(&mut self) -> Result<f64> {
        let mut acc = self.unary()?;
        loop {
            if self.is_sym("*") {
                self.pos += 1;
                acc *= self.unary()?;
            } else if self.is_sym("/") {
                self.pos += 1;
                acc /= self.unary()?;
            } else {
                return Ok(acc);
            }
        }
    }

    fn unary(&mut self) -> Result<f64> {
        if self.is_sym("-") {
            self.pos += 1;
            return Ok(-self.unary()?);
        }
        if self.is_sym("+") {
            self.pos += 1;
            return self.unary();
        }
        self.atom()
    }

    fn atom(&mut self) -> Result<f64> {
        let (line, col) = self.here();
        let Some(tok) = self.peek().cloned() else {
            return Err(parse_err(line, col, "malformed angle: unexpected end of input"));
        };
        self.pos += 1;
        match tok.tok {
            Tok::Int(v) => Ok(v as f64),
            Tok::Real(v) => Ok(v),
            Tok::Ident(ref name) if name == "pi" => Ok(std::f64::consts::PI),
            Tok::Sym("(") => {
                let v = self.expr()?;
                if !self.is_sym(")") {
                    let (l, c) = self.here();
                    return Err(parse_err(l, c, "malformed angle: expected `)`"));
                }
                self.pos += 1;
                Ok(v)
            }
            other => Err(parse_err(line, col, format!("malformed angle near {other:?}"))),
        }
    }
}

struct Parser {
    tokens: Vec<Token>,
    pos: usize,
    qreg: Option<(String, usize)>,
    creg: Option<(String, usize)>,
    circuit: Option<Circuit>,
}

impl Parser {
    fn peek(&self) -> Option<&Token> {
        self.tokens.get(self.pos)
    }

    fn here(&self) -> (usize, usize) {
        self.peek()
            .or_else(|| self.tokens.last())
            .map(|t| (t.line, t.col))
            .unwrap_or((1, 1))
    }

    fn next(&mut self) -> Result<Token> {
        let (line, col) = self.here();
        let t = self
            .tokens
            .get(self.pos)
            .cloned()
            .ok_or_else(|| parse_err(line, col, "unexpected end of input"))?;
        self.pos += 1;
        Ok(t)
    }

    fn expect_sym(&mut self, s: &'static str) -> Result<()> {
        let t = self.next()?;
        match t.tok {
            Tok::Sym(x) if x == s => Ok(()),
            other => Err(parse_err(t.line, t.col, format!("expected `{s}`, found {other:?}"))),
        }
    }

    fn expect_ident(&mut self) -> Result<Token> {
        let t = self.next()?;
        match t.tok {
            Tok::Ident(_) => Ok(t),
            ref other => Err(parse_err(t.line, t.col, format!("expected identifier, found {other:?}"))),
        }
    }

    fn expect_int(&mut self) -> Result<(usize, usize, usize)> {
        let t = self.next()?;
        match t.tok {
            Tok::Int(v) => Ok((v as usize, t.line, t.col)),
            other => Err(parse_err(t.line, t.col, format!("expected integer, found {other:?}"))),
        }
    }

    fn is_sym(&self, s: &str) -> bool {
        matches!(self.peek(), Some(Token { tok: Tok::Sym(x), .. }) if *x == s)
    }

    fn circuit_mut(&mut self, line: usize, col: usize) -> Result<&mut Circuit> {
        self.circuit
            .as_mut()
            .ok_or_else(|| parse_err(line, col, "gate before qreg declaration"))
    }

    /// `name[index]` resolved against the named register.
    fn indexed(&mut self, quantum: bool) -> Result<usize> {
        let name_tok = self.expect_ident()?;
        let Tok::Ident(name) = name_tok.tok else { unreachable!() };
        let reg = if quantum { &self.qreg } else { &self.creg };
        let Some((reg_name, size)) = reg.clone() else {
            let what = if quantum { "qreg" } else { "creg" };
            return Err(parse_err(name_tok.line, name_tok.col, format!("no {what} declared")));
        };
        if name != reg_name {
            return Err(parse_err(
                name_tok.line,
                name_tok.col,
                format!("unknown register `{name}`"),
            ));
        }
        self.expect_sym("[")?;
        let (idx, line, col) = self.expect_int()?;
        self.expect_sym("]")?;
        if idx >= size {
            return Err(parse_err(
                line,
                col,
                format!("index {idx} out of range for register `{name}` of size {size}"),
            ));
        }
        Ok(idx)
    }

    fn statement(&mut self) -> Result<()> {
        let head = self.expect_ident()?;
        let Tok::Ident(word) = head.tok.clone() else { unreachable!() };
        let (line, col) = (head.line, head.col);
        match word.as_str() {
            "OPENQASM" => {
                let t = self.next()?;
                let ok = matches!(t.tok, Tok::Real(v) if v == 2.0);
                if !ok {
                    return Err(parse_err(t.line, t.col, "only OPENQASM 2.0 is supported"));
                }
                self.expect_sym(";")
            }
            "include" => {
                let t = self.next()?;
                if !matches!(t.tok, Tok::Str(_)) {
                    return Err(parse_err(t.line, t.col, "expected include file name"));
                }
                self.expect_sym(";")
            }
            "qreg" | "creg" => {
                let name_tok = self.expect_ident()?;
                let Tok::Ident(name) = name_tok.tok else { unreachable!() };
                self.expect_sym("[")?;
                let (size, _, _) = self.expect_int()?;
                self.expect_sym("]")?;
                self.expect_sym(";")?;
                if word == "qreg" {
                    if self.qreg.is_some() {
                        return Err(parse_err(line, col, "only one qreg is supported"));
                    }
                    self.qreg = Some((name, size));
                    self.circuit = Some(Circuit::new(size));
                } else {
                    if self.creg.is_some() {
                        return Err(parse_err(line, col, "only one creg is supported"));
                    }
                    self.creg = Some((name, size));
                }
                Ok(())
            }
            "x" | "sx" | "id" => {
                let q = self.indexed(true)?;
                self.expect_sym(";")?;
                let gate = match word.as_str() {
                    "x" => Some(Gate::X(q)),
                    "sx" => Some(Gate::Sx(q)),
                    _ => None,
                };
                if let Some(g) = gate {
                    self.circuit_mut(line, col)?
                        .push(g)
                        .map_err(|e| parse_err(line, col, e.to_string()))?;
                }
                Ok(())
            }
            "rz" => {
                self.expect_sym("(")?;
                let mut ep = ExprParser {
                    tokens: &self.tokens,
                    pos: self.pos,
                };
                let theta = ep.expr()?;
                self.pos = ep.pos;
                self.expect_sym(")")?;
                if !theta.is_finite() {
                    return Err(parse_err(line, col, "malformed angle: not finite"));
                }
                let q = self.indexed(true)?;
                self.expect_sym(";")?;
                self.circuit_mut(line, col)?
                    .push(Gate::Rz(q, theta))
                    .map_err(|e| parse_err(line, col, e.to_string()))
            }
            "cx" => {
                let a = self.indexed(true)?;
                self.expect_sym(",")?;
                let b = self.indexed(true)?;
                self.expect_sym(";")?;
                self.circuit_mut(line, col)?
                    .push(Gate::cx(a, b))
                    .map_err(|e| parse_err(line, col, e.to_string()))
            }
            "barrier" => {
                let mut qs = Vec::new();
                loop {
                    // bare register name means every qubit
                    let whole = matches!(
                        (self.tokens.get(self.pos), self.tokens.get(self.pos + 1)),
                        (Some(Token { tok: Tok::Ident(_), .. }), Some(Token { tok: Tok::Sym(s), .. })) if *s != "["
                    );
                    if whole {
                        let name_tok = self.expect_ident()?;
                        let Tok::Ident(name) = name_tok.tok else { unreachable!() };
                        match &self.qreg {
                            Some((reg, size)) if *reg == name => qs.extend(0..*size),
                            _ => {
                                return Err(parse_err(
                                    name_tok.line,
                                    name_tok.col,
                                    format!("unknown register `{name}`"),
                                ))
                            }
                        }
                    } else {
                        qs.push(self.indexed(true)?);
                    }
                    if self.is_sym(",") {
                        self.pos += 1;
                    } else {
                        break;
                    }
                }
                self.expect_sym(";")?;
                self.circuit_mut(line, col)?
                    .push(Gate::Barrier(qs))
                    .map_err(|e| parse_err(line, col, e.to_string()))
            }
            "measure" => {
                let q = self.indexed(true)?;
                self.expect_sym("->")?;
                let cbit = self.indexed(false)?;
                self.expect_sym(";")?;
                self.circuit_mut(line, col)?
                    .push(Gate::Measure { qubit: q, clbit: cbit })
                    .map_err(|e| parse_err(line, col, e.to_string()))
            }
            other => Err(parse_err(line, col, format!("unsupported gate `{other}`"))),
        }
    }
}

/// Parses a document in the supported subset.
pub fn qasm_import(text: &str) -> Result<Circuit> {
    let tokens = tokenize(text)?;
    let mut parser = Parser {
        tokens,
        pos: 0,
        qreg: None,
        creg: None,
        circuit: None,
    };
    while parser.pos < parser.tokens.len() {
        parser.statement()?;
    }
    parser
        .circuit
        .ok_or_else(|| parse_err(1, 1, "document declares no qreg"))
}
