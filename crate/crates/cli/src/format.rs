//! Plain-text system files.
//!
//! ```text
//! # comment
//! kind plant
//! block A 2 2
//!   -1 5
//!    0 -2
//! end
//! block B 2 1
//!   0
//!   1
//! end
//! ...
//! ```
//!
//! Kinds and their blocks:
//! - `plant`: `A`, `B`, `C` and optionally `D` (zero when absent);
//! - `controller`: `DK` and optionally `AK`, `BK`, `CK` (a static gain when absent);
//! - `closed-loop`: `A`, with an optional `plant-states N` line selecting the
//!   leading `N` states as plant states (all states when absent).

use std::fmt;

use kreiss_core::matcore::RealMatrix;
use kreiss_core::sysmodel::{Controller, ProjectionJ, StateSpace};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParseError {
    pub line: usize,
    pub col: usize,
    pub message: String,
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "line {}, column {}: {}", self.line, self.col, self.message)
    }
}

impl std::error::Error for ParseError {}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Kind {
    Plant,
    Controller,
    ClosedLoop,
}

impl Kind {
    pub fn name(self) -> &'static str {
        match self {
            Kind::Plant => "plant",
            Kind::Controller => "controller",
            Kind::ClosedLoop => "closed-loop",
        }
    }

    fn parse(s: &str) -> Option<Kind> {
        match s {
            "plant" => Some(Kind::Plant),
            "controller" => Some(Kind::Controller),
            "closed-loop" => Some(Kind::ClosedLoop),
            _ => None,
        }
    }

    fn blocks(self) -> &'static [&'static str] {
        match self {
            Kind::Plant => &["A", "B", "C", "D"],
            Kind::Controller => &["AK", "BK", "CK", "DK"],
            Kind::ClosedLoop => &["A"],
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum SystemFile {
    Plant(StateSpace),
    Controller(Controller),
    ClosedLoop { a: RealMatrix, plant_states: usize },
}

struct Token<'a> {
    text: &'a str,
    col: usize,
}

fn tokens(line: &str) -> Vec<Token<'_>> {
    let content = line.split('#').next().unwrap_or("");
    let mut out = Vec::new();
    let mut start = None;
    for (i, ch) in content.char_indices() {
        if ch.is_whitespace() {
            if let Some(s) = start.take() {
                out.push(Token {
                    text: &content[s..i],
                    col: content[..s].chars().count() + 1,
                });
            }
        } else if start.is_none() {
            start = Some(i);
        }
    }
    if let Some(s) = start {
        out.push(Token {
            text: &content[s..],
            col: content[..s].chars().count() + 1,
        });
    }
    out
}

fn err(line: usize, col: usize, message: impl Into<String>) -> ParseError {
    ParseError {
        line,
        col,
        message: message.into(),
    }
}

fn parse_usize(t: &Token, line: usize, what: &str) -> Result<usize, ParseError> {
    t.text
        .parse()
        .map_err(|_| err(line, t.col, format!("expected {what}, found `{}`", t.text)))
}

struct Block {
    name: String,
    matrix: RealMatrix,
    line: usize,
}

impl SystemFile {
    pub fn kind(&self) -> Kind {
        match self {
            SystemFile::Plant(_) => Kind::Plant,
            SystemFile::Controller(_) => Kind::Controller,
            SystemFile::ClosedLoop { .. } => Kind::ClosedLoop,
        }
    }

    pub fn parse(text: &str) -> Result<SystemFile, ParseError> {
        let mut kind: Option<(Kind, usize)> = None;
        let mut plant_states: Option<(usize, usize)> = None;
        let mut blocks: Vec<Block> = Vec::new();
        let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l));
        let mut last_line;

        while let Some((ln, line)) = lines.next() {
            last_line = ln;
            let toks = tokens(line);
            let Some(head) = toks.first() else { continue };
            match head.text {
                "kind" => {
                    if kind.is_some() {
                        return Err(err(ln, head.col, "duplicate `kind` line"));
                    }
                    let t = toks.get(1).ok_or_else(|| err(ln, head.col + 4, "missing kind name"))?;
                    let k = Kind::parse(t.text).ok_or_else(|| {
                        err(ln, t.col, format!("unknown kind `{}` (plant, controller, closed-loop)", t.text))
                    })?;
                    if let Some(extra) = toks.get(2) {
                        return Err(err(ln, extra.col, "unexpected token after kind"));
                    }
                    kind = Some((k, ln));
                }
                "plant-states" => {
                    if plant_states.is_some() {
                        return Err(err(ln, head.col, "duplicate `plant-states` line"));
                    }
                    let t = toks.get(1).ok_or_else(|| err(ln, head.col + 12, "missing state count"))?;
                    plant_states = Some((parse_usize(t, ln, "a state count")?, ln));
                    if let Some(extra) = toks.get(2) {
                        return Err(err(ln, extra.col, "unexpected token after state count"));
                    }
                }
                "block" => {
                    if toks.len() != 4 {
                        let col = toks.get(4).map_or(head.col, |t| t.col);
                        return Err(err(ln, col, "expected `block NAME ROWS COLS`"));
                    }
                    let name = toks[1].text.to_string();
                    if blocks.iter().any(|b| b.name == name) {
                        return Err(err(ln, toks[1].col, format!("duplicate block `{name}`")));
                    }
                    let rows = parse_usize(&toks[2], ln, "a row count")?;
                    let cols = parse_usize(&toks[3], ln, "a column count")?;
                    let mut m = RealMatrix::zeros(rows, cols);
                    let mut r = 0;
                    loop {
                        let Some((bl, body)) = lines.next() else {
                            return Err(err(last_line + 1, 1, format!("block `{name}` is not closed by `end`")));
                        };
                        last_line = bl;
                        let row = tokens(body);
                        let Some(first) = row.first() else { continue };
                        if first.text == "end" {
                            if let Some(extra) = row.get(1) {
                                return Err(err(bl, extra.col, "unexpected token after `end`"));
                            }
                            if r != rows {
                                return Err(err(
                                    bl,
                                    first.col,
                                    format!("block `{name}` declares {rows} rows but has {r}"),
                                ));
                            }
                            break;
                        }
                        if r == rows {
                            return Err(err(bl, first.col, format!("block `{name}` has more than {rows} rows")));
                        }
                        if row.len() != cols {
                            let col = row.get(cols).map_or(first.col, |t| t.col);
                            return Err(err(
                                bl,
                                col,
                                format!("row {} of block `{name}` has {} entries, expected {cols}", r + 1, row.len()),
                            ));
                        }
                        for (c, t) in row.iter().enumerate() {
                            let v: f64 = t
                                .text
                                .parse()
                                .map_err(|_| err(bl, t.col, format!("invalid number `{}`", t.text)))?;
                            if !v.is_finite() {
                                return Err(err(bl, t.col, format!("non-finite entry `{}`", t.text)));
                            }
                            m[(r, c)] = v;
                        }
                        r += 1;
                    }
                    blocks.push(Block {
                        name,
                        matrix: m,
                        line: ln,
                    });
                }
                other => {
                    return Err(err(ln, head.col, format!("unexpected `{other}` (expected kind, plant-states or block)")));
                }
            }
        }

        let (kind, kind_line) = kind.ok_or_else(|| err(1, 1, "missing `kind` line"))?;
        for b in &blocks {
            if !kind.blocks().contains(&b.name.as_str()) {
                return Err(err(
                    b.line,
                    7,
                    format!("block `{}` is not allowed in a {} file (allowed: {})", b.name, kind.name(), kind.blocks().join(", ")),
                ));
            }
        }
        if let Some((_, ln)) = plant_states {
            if kind != Kind::ClosedLoop {
                return Err(err(ln, 1, "`plant-states` is only allowed in closed-loop files"));
            }
        }
        let take = |name: &str| blocks.iter().find(|b| b.name == name);
        let require = |name: &str| -> Result<&Block, ParseError> {
            take(name).ok_or_else(|| err(kind_line, 1, format!("{} file lacks block `{name}`", kind.name())))
        };
        let check = |cond: bool, b: &Block, msg: String| -> Result<(), ParseError> {
            if cond {
                Ok(())
            } else {
                Err(err(b.line, 1, msg))
            }
        };

        match kind {
            Kind::Plant => {
                let a = require("A")?;
                let b = require("B")?;
                let c = require("C")?;
                let n = a.matrix.nrows();
                check(a.matrix.is_square(), a, format!("A is {}x{}, not square", n, a.matrix.ncols()))?;
                check(b.matrix.nrows() == n, b, format!("B has {} rows, A has {n}", b.matrix.nrows()))?;
                check(c.matrix.ncols() == n, c, format!("C has {} columns, A has {n}", c.matrix.ncols()))?;
                let (p, m) = (c.matrix.nrows(), b.matrix.ncols());
                let d = match take("D") {
                    Some(d) => {
                        check(
                            d.matrix.shape() == (p, m),
                            d,
                            format!("D is {}x{}, expected {p}x{m}", d.matrix.nrows(), d.matrix.ncols()),
                        )?;
                        d.matrix.clone()
                    }
                    None => RealMatrix::zeros(p, m),
                };
                let sys = StateSpace::new(a.matrix.clone(), b.matrix.clone(), c.matrix.clone(), d)
                    .map_err(|e| err(a.line, 1, e.to_string()))?;
                Ok(SystemFile::Plant(sys))
            }
            Kind::Controller => {
                let d = require("DK")?;
                let (m, p) = d.matrix.shape();
                let nk = take("AK").map_or(0, |b| b.matrix.nrows());
                let get = |name: &str, shape: (usize, usize)| -> Result<RealMatrix, ParseError> {
                    match take(name) {
                        Some(b) => {
                            check(
                                b.matrix.shape() == shape,
                                b,
                                format!(
                                    "{name} is {}x{}, expected {}x{}",
                                    b.matrix.nrows(),
                                    b.matrix.ncols(),
                                    shape.0,
                                    shape.1
                                ),
                            )?;
                            Ok(b.matrix.clone())
                        }
                        None if shape.0 * shape.1 == 0 => Ok(RealMatrix::zeros(shape.0, shape.1)),
                        None => Err(err(kind_line, 1, format!("controller of order {nk} lacks block `{name}`"))),
                    }
                };
                let ak = get("AK", (nk, nk))?;
                let bk = get("BK", (nk, p))?;
                let ck = get("CK", (m, nk))?;
                let k = Controller::dynamic(ak, bk, ck, d.matrix.clone()).map_err(|e| err(d.line, 1, e.to_string()))?;
                Ok(SystemFile::Controller(k))
            }
            Kind::ClosedLoop => {
                let a = require("A")?;
                let n = a.matrix.nrows();
                check(a.matrix.is_square(), a, format!("A is {}x{}, not square", n, a.matrix.ncols()))?;
                let plant_states = match plant_states {
                    Some((ps, ln)) if ps > n => {
                        return Err(err(ln, 14, format!("plant-states {ps} exceeds the {n} states of A")));
                    }
                    Some((ps, _)) => ps,
                    None => n,
                };
                Ok(SystemFile::ClosedLoop {
                    a: a.matrix.clone(),
                    plant_states,
                })
            }
        }
    }

    pub fn serialize(&self) -> String {
        let mut s = format!("kind {}\n", self.kind().name());
        match self {
            SystemFile::Plant(sys) => {
                write_block(&mut s, "A", sys.a());
                write_block(&mut s, "B", sys.b());
                write_block(&mut s, "C", sys.c());
                write_block(&mut s, "D", sys.d());
            }
            SystemFile::Controller(k) => {
                write_block(&mut s, "AK", &k.a_k());
                write_block(&mut s, "BK", &k.b_k());
                write_block(&mut s, "CK", &k.c_k());
                write_block(&mut s, "DK", &k.d_k());
            }
            SystemFile::ClosedLoop { a, plant_states } => {
                s.push_str(&format!("plant-states {plant_states}\n"));
                write_block(&mut s, "A", a);
            }
        }
        s
    }

    /// State matrix and plant-state selector; plants are taken open loop.
    pub fn state_matrix(&self) -> Option<(RealMatrix, ProjectionJ)> {
        match self {
            SystemFile::Plant(sys) => Some((sys.a().clone(), ProjectionJ::identity(sys.nstates()))),
            SystemFile::Controller(_) => None,
            SystemFile::ClosedLoop { a, plant_states } => {
                Some((a.clone(), ProjectionJ::new(*plant_states, a.nrows() - plant_states)))
            }
        }
    }
}

/// Empty blocks are left out; their shapes follow from the others.
fn write_block(s: &mut String, name: &str, m: &RealMatrix) {
    if m.is_empty() {
        return;
    }
    s.push_str(&format!("block {name} {} {}\n", m.nrows(), m.ncols()));
    for i in 0..m.nrows() {
        let row: Vec<String> = (0..m.ncols()).map(|j| format!("{}", m[(i, j)])).collect();
        s.push_str("  ");
        s.push_str(&row.join(" "));
        s.push('\n');
    }
    s.push_str("end\n");
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::dmatrix;

    const PLANT: &str = "\
# a small plant
kind plant
block A 2 2
  -1 5   # upper row
  0 -2
end

block B 2 1
  0
  1
end
block C 1 2
  1 0
end
";

    #[test]
    fn parses_plant_with_comments_and_default_d() {
        let f = SystemFile::parse(PLANT).unwrap();
        let SystemFile::Plant(sys) = &f else { panic!("kind") };
        assert_eq!(sys.a(), &dmatrix![-1.0, 5.0; 0.0, -2.0]);
        assert_eq!(sys.d(), &RealMatrix::zeros(1, 1));
        assert_eq!(SystemFile::parse(&f.serialize()).unwrap(), f);
    }

    #[test]
    fn static_controller_needs_only_dk() {
        let f = SystemFile::parse("kind controller\nblock DK 1 2\n 3 -4.5e-2\nend\n").unwrap();
        let SystemFile::Controller(k) = &f else { panic!("kind") };
        assert_eq!(k.order(), 0);
        assert_eq!(k.d_k(), dmatrix![3.0, -0.045]);
        assert_eq!(SystemFile::parse(&f.serialize()).unwrap(), f);
    }

    #[test]
    fn closed_loop_plant_states() {
        let f = SystemFile::parse("kind closed-loop\nplant-states 1\nblock A 2 2\n-1 1\n0 -2\nend\n").unwrap();
        let (a, j) = f.state_matrix().unwrap();
        assert_eq!(a.nrows(), 2);
        assert_eq!(j, ProjectionJ::new(1, 1));
    }

    fn error_at(text: &str) -> (usize, usize) {
        let e = SystemFile::parse(text).unwrap_err();
        (e.line, e.col)
    }

    #[test]
    fn diagnostics_point_at_the_offending_token() {
        assert_eq!(error_at("kind plant\nblock A 1 1\n  1.0 2.0\nend\n"), (3, 7));
        assert_eq!(error_at("kind plant\nblock A 1 1\n  x\nend\n"), (3, 3));
        assert_eq!(error_at("kind plant\nblock A 2 2\n 1 2\nend\n"), (4, 1));
        assert_eq!(error_at("kind plnt\n"), (1, 6));
        assert_eq!(error_at("kind plant\nblock A 1 1\n 1\n"), (4, 1));
        assert_eq!(error_at("kind plant\nfoo\n"), (2, 1));
        assert_eq!(error_at("kind plant\nblock A two 1\n"), (2, 9));
        assert_eq!(error_at("kind plant\nblock A 1 1\n inf\nend\n"), (3, 2));
        let e = SystemFile::parse("kind plant\nblock A 1 1\n-1\nend\nblock B 2 1\n1\n1\nend\nblock C 1 1\n1\nend\n").unwrap_err();
        assert_eq!(e.line, 5);
        assert!(e.message.contains("B has 2 rows"), "{}", e.message);
        assert!(SystemFile::parse("kind plant\nblock A 1 1\n-1\nend\n").unwrap_err().message.contains("lacks block `B`"));
        assert!(SystemFile::parse("# nothing\n").unwrap_err().message.contains("missing `kind`"));
    }
}
