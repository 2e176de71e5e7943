//! `N: symbol operands` text form of a chromosome.
//!
//! ```text
//! # comments and blank lines are ignored
//! 1: a
//! 2: b
//! 3: + 1, 2
//! ```
//!
//! Positions are 1-based and must be consecutive. A line whose symbol is a
//! function name lists its operand positions separated by commas; any other
//! symbol is a terminal name.

use std::fmt::Write as _;

use super::{Chromosome, FunctionSymbol, Gene, PrimitiveSet};
use crate::{Error, Result};

pub(super) fn render(chromosome: &Chromosome, primitives: &PrimitiveSet) -> String {
    let mut out = String::new();
    for (pos, gene) in chromosome.genes().iter().enumerate() {
        let _ = match gene {
            Gene::Terminal(index) => {
                let name = primitives
                    .terminals()
                    .get(*index)
                    .cloned()
                    .unwrap_or_else(|| format!("#{index}"));
                writeln!(out, "{}: {name}", pos + 1)
            }
            Gene::Function { symbol, operands } => {
                let ops = operands
                    .iter()
                    .map(|op| (op + 1).to_string())
                    .collect::<Vec<_>>()
                    .join(", ");
                writeln!(out, "{}: {symbol} {ops}", pos + 1)
            }
        };
    }
    out
}

enum RawGene<'a> {
    Terminal(&'a str),
    Function(FunctionSymbol, Vec<usize>),
}

fn parse_lines(input: &str) -> Result<Vec<RawGene<'_>>> {
    let mut genes = Vec::new();
    for (lineno, line) in input.lines().enumerate() {
        let line_no = lineno + 1;
        let err = |message: String| Error::Parse { line: line_no, message };
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (position, body) = line
            .split_once(':')
            .ok_or_else(|| err("expected `N: symbol`".into()))?;
        let position: usize = position
            .trim()
            .parse()
            .map_err(|_| err(format!("bad gene position `{}`", position.trim())))?;
        if position != genes.len() + 1 {
            return Err(err(format!(
                "gene position {position} out of sequence, expected {}",
                genes.len() + 1
            )));
        }
        let body = body.trim();
        let (symbol, rest) = body.split_once(char::is_whitespace).unwrap_or((body, ""));
        if symbol.is_empty() {
            return Err(err("missing symbol".into()));
        }
        match FunctionSymbol::from_symbol(symbol) {
            Some(function) => {
                let operands = rest
                    .split(',')
                    .map(str::trim)
                    .filter(|s| !s.is_empty())
                    .map(|s| match s.parse::<usize>() {
                        Ok(p) if p >= 1 => Ok(p - 1),
                        _ => Err(err(format!("bad operand position `{s}`"))),
                    })
                    .collect::<Result<Vec<_>>>()?;
                genes.push(RawGene::Function(function, operands));
            }
            None => {
                if !rest.trim().is_empty() {
                    return Err(err(format!("terminal `{symbol}` takes no operands")));
                }
                genes.push(RawGene::Terminal(symbol));
            }
        }
    }
    if genes.is_empty() {
        return Err(Error::Parse {
            line: 0,
            message: "no genes".into(),
        });
    }
    Ok(genes)
}

fn resolve(raw: Vec<RawGene<'_>>, primitives: &PrimitiveSet) -> Result<Chromosome> {
    let genes = raw
        .into_iter()
        .enumerate()
        .map(|(pos, g)| match g {
            RawGene::Terminal(name) => primitives
                .terminal_index(name)
                .map(Gene::Terminal)
                .ok_or_else(|| Error::Parse {
                    line: pos + 1,
                    message: format!("unknown terminal `{name}`"),
                }),
            RawGene::Function(symbol, operands) => Ok(Gene::Function { symbol, operands }),
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Chromosome::from_genes(genes))
}

pub(super) fn parse(input: &str, primitives: &PrimitiveSet) -> Result<Chromosome> {
    resolve(parse_lines(input)?, primitives)
}

/// Parses a chromosome without a known primitive set. Terminals are taken in
/// order of first appearance; the function set is the full eight symbols.
pub fn parse_with_inferred_terminals(input: &str) -> Result<(Chromosome, PrimitiveSet)> {
    let raw = parse_lines(input)?;
    let mut names: Vec<String> = Vec::new();
    for gene in &raw {
        if let RawGene::Terminal(name) = gene {
            if !names.iter().any(|n| n == name) {
                names.push((*name).to_owned());
            }
        }
    }
    let primitives = PrimitiveSet::with_all_functions(names)?;
    let chromosome = resolve(raw, &primitives)?;
    Ok((chromosome, primitives))
}

#[cfg(test)]
mod tests {
    use super::super::tests::worked_example;
    use super::*;

    #[test]
    fn renders_worked_example() {
        let (c, set) = worked_example();
        assert_eq!(
            c.to_text(&set),
            "1: a\n2: b\n3: + 1, 2\n4: c\n5: d\n6: + 4, 5\n7: * 3, 5\n8: + 2, 6\n"
        );
        assert_eq!(Chromosome::parse_text(&c.to_text(&set), &set).unwrap(), c);
    }

    #[test]
    fn infers_terminals() {
        let (c, set) = parse_with_inferred_terminals("1: x\n# note\n2: SQRT 1\n3: y\n4: POWER 2, 3\n").unwrap();
        assert_eq!(set.terminals(), ["x", "y"]);
        assert!(c.validate(&set).is_ok());
        assert_eq!(c.decode(3, &set).unwrap().infix(), "POW(SQRT(x), y)");
    }

    #[test]
    fn rejects_malformed_lines() {
        for bad in ["", "1 a", "2: a", "1: a\n3: b", "1: a\n2: + 0, 1", "1: a 3", "1:"] {
            assert!(parse_with_inferred_terminals(bad).is_err(), "{bad:?}");
        }
        let (_, set) = worked_example();
        assert!(Chromosome::parse_text("1: z", &set).is_err());
    }

    #[test]
    fn parsed_forward_pointer_survives_to_validation() {
        let (c, set) = parse_with_inferred_terminals("1: a\n2: + 3, 1\n3: b\n").unwrap();
        assert!(!c.validate(&set).is_ok());
    }
}
