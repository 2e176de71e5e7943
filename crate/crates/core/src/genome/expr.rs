use std::fmt::{self, Write as _};

use serde::{Serialize, Serializer};

use super::{is_identifier, FunctionSymbol};
use crate::{Error, Result};

/// A decoded expression.
///
/// Arithmetic operators render infix and fully parenthesised, e.g.
/// `((a + b) * d)`; the remaining functions render as calls, e.g.
/// `POW(a, b)` or `SQRT(a)`. [`ExpressionTree::parse_infix`] reads either
/// form back.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum ExpressionTree {
    Terminal(String),
    Function(FunctionSymbol, Vec<ExpressionTree>),
}

impl ExpressionTree {
    pub fn infix(&self) -> String {
        self.to_string()
    }

    pub fn depth(&self) -> usize {
        match self {
            ExpressionTree::Terminal(_) => 1,
            ExpressionTree::Function(_, children) => {
                1 + children.iter().map(Self::depth).max().unwrap_or(0)
            }
        }
    }

    /// Number of nodes.
    pub fn size(&self) -> usize {
        match self {
            ExpressionTree::Terminal(_) => 1,
            ExpressionTree::Function(_, children) => {
                1 + children.iter().map(Self::size).sum::<usize>()
            }
        }
    }

    pub fn parse_infix(input: &str) -> Result<Self> {
        let mut parser = Parser {
            src: input.as_bytes(),
            pos: 0,
        };
        let tree = parser.expr()?;
        parser.skip_ws();
        if parser.pos != parser.src.len() {
            return Err(parser.error("trailing input"));
        }
        Ok(tree)
    }
}

impl fmt::Display for ExpressionTree {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ExpressionTree::Terminal(name) => f.write_str(name),
            ExpressionTree::Function(symbol, children) if symbol.is_operator() => {
                write!(f, "({} {symbol} {})", children[0], children[1])
            }
            ExpressionTree::Function(symbol, children) => {
                write!(f, "{symbol}(")?;
                for (i, child) in children.iter().enumerate() {
                    if i > 0 {
                        f.write_str(", ")?;
                    }
                    write!(f, "{child}")?;
                }
                f.write_str(")")
            }
        }
    }
}

impl Serialize for ExpressionTree {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.serialize_str(&self.infix())
    }
}

struct Parser<'a> {
    src: &'a [u8],
    pos: usize,
}

impl Parser<'_> {
    fn error(&self, message: &str) -> Error {
        Error::Parse {
            line: 1,
            message: format!("{message} at column {}", self.pos + 1),
        }
    }

    fn skip_ws(&mut self) {
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn expect(&mut self, byte: u8) -> Result<()> {
        self.skip_ws();
        if self.src.get(self.pos) == Some(&byte) {
            self.pos += 1;
            Ok(())
        } else {
            Err(self.error(&format!("expected `{}`", byte as char)))
        }
    }

    fn word(&mut self) -> &str {
        let start = self.pos;
        while self.pos < self.src.len()
            && (self.src[self.pos].is_ascii_alphanumeric() || self.src[self.pos] == b'_')
        {
            self.pos += 1;
        }
        std::str::from_utf8(&self.src[start..self.pos]).unwrap_or_default()
    }

    fn expr(&mut self) -> Result<ExpressionTree> {
        self.skip_ws();
        match self.src.get(self.pos) {
            Some(b'(') => {
                self.pos += 1;
                let lhs = self.expr()?;
                self.skip_ws();
                let symbol = self
                    .src
                    .get(self.pos)
                    .and_then(|&b| FunctionSymbol::from_symbol(&(b as char).to_string()))
                    .filter(|s| s.is_operator())
                    .ok_or_else(|| self.error("expected an operator"))?;
                self.pos += 1;
                let rhs = self.expr()?;
                self.expect(b')')?;
                Ok(ExpressionTree::Function(symbol, vec![lhs, rhs]))
            }
            Some(_) => {
                let word = self.word().to_owned();
                if !is_identifier(&word) {
                    return Err(self.error("expected an identifier"));
                }
                match FunctionSymbol::from_symbol(&word) {
                    Some(symbol) => {
                        self.expect(b'(')?;
                        let mut children = vec![self.expr()?];
                        for _ in 1..symbol.arity() {
                            self.expect(b',')?;
                            children.push(self.expr()?);
                        }
                        self.expect(b')')?;
                        Ok(ExpressionTree::Function(symbol, children))
                    }
                    None => Ok(ExpressionTree::Terminal(word)),
                }
            }
            None => Err(self.error("unexpected end of input")),
        }
    }
}

fn escape_label(label: &str) -> String {
    label.replace('\\', "\\\\").replace('"', "\\\"")
}

/// Renders a tree as a Graphviz `digraph`. Nodes are numbered in preorder.
pub fn export_dot(tree: &ExpressionTree) -> String {
    fn visit(tree: &ExpressionTree, next: &mut usize, nodes: &mut String, edges: &mut String) -> usize {
        let id = *next;
        *next += 1;
        let label = match tree {
            ExpressionTree::Terminal(name) => name.as_str(),
            ExpressionTree::Function(symbol, _) => symbol.symbol(),
        };
        let _ = writeln!(nodes, "  n{id} [label=\"{}\"];", escape_label(label));
        if let ExpressionTree::Function(_, children) = tree {
            for child in children {
                let child_id = visit(child, next, nodes, edges);
                let _ = writeln!(edges, "  n{id} -> n{child_id};");
            }
        }
        id
    }

    let mut nodes = String::new();
    let mut edges = String::new();
    visit(tree, &mut 0, &mut nodes, &mut edges);
    format!("digraph expression {{\n  node [shape=circle];\n{nodes}{edges}}}\n")
}
