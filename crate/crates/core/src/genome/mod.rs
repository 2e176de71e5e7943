//! Linear MEP chromosomes.
//!
//! Genes are stored in a flat vector. A function gene refers to its operands
//! by position and every operand position is strictly smaller than the gene's
//! own, so the reference graph is a DAG and a single forward pass computes
//! the value of every encoded expression.

mod expr;
mod text;

use std::collections::HashMap;
use std::fmt;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::fitness::{apply_function, ProtectedArithmetic};
use crate::{Error, Result};

pub use expr::{export_dot, ExpressionTree};
pub use text::parse_with_inferred_terminals;

/// Functions available to evolution.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum FunctionSymbol {
    Sub,
    Add,
    Mul,
    Div,
    Pow,
    Exp,
    Log,
    Sqrt,
}

impl FunctionSymbol {
    /// The full function set in its canonical order.
    pub const ALL: [FunctionSymbol; 8] = [
        FunctionSymbol::Sub,
        FunctionSymbol::Add,
        FunctionSymbol::Mul,
        FunctionSymbol::Div,
        FunctionSymbol::Pow,
        FunctionSymbol::Exp,
        FunctionSymbol::Log,
        FunctionSymbol::Sqrt,
    ];

    pub fn arity(self) -> usize {
        match self {
            FunctionSymbol::Sub
            | FunctionSymbol::Add
            | FunctionSymbol::Mul
            | FunctionSymbol::Div
            | FunctionSymbol::Pow => 2,
            FunctionSymbol::Exp | FunctionSymbol::Log | FunctionSymbol::Sqrt => 1,
        }
    }

    pub fn symbol(self) -> &'static str {
        match self {
            FunctionSymbol::Sub => "-",
            FunctionSymbol::Add => "+",
            FunctionSymbol::Mul => "*",
            FunctionSymbol::Div => "/",
            FunctionSymbol::Pow => "POW",
            FunctionSymbol::Exp => "EXP",
            FunctionSymbol::Log => "LOG",
            FunctionSymbol::Sqrt => "SQRT",
        }
    }

    /// Parses a symbol; `POWER` is accepted as an alias of `POW`.
    pub fn from_symbol(s: &str) -> Option<Self> {
        Some(match s {
            "-" => FunctionSymbol::Sub,
            "+" => FunctionSymbol::Add,
            "*" => FunctionSymbol::Mul,
            "/" => FunctionSymbol::Div,
            "POW" | "POWER" => FunctionSymbol::Pow,
            "EXP" => FunctionSymbol::Exp,
            "LOG" => FunctionSymbol::Log,
            "SQRT" => FunctionSymbol::Sqrt,
            _ => return None,
        })
    }

    /// True for the four arithmetic operators rendered infix.
    pub fn is_operator(self) -> bool {
        matches!(
            self,
            FunctionSymbol::Sub | FunctionSymbol::Add | FunctionSymbol::Mul | FunctionSymbol::Div
        )
    }
}

impl fmt::Display for FunctionSymbol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.symbol())
    }
}

/// Terminals and functions a chromosome may use.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PrimitiveSet {
    terminals: Vec<String>,
    functions: Vec<FunctionSymbol>,
}

pub(crate) fn is_identifier(name: &str) -> bool {
    let mut chars = name.chars();
    match chars.next() {
        Some(c) if c.is_ascii_alphabetic() || c == '_' => {}
        _ => return false,
    }
    chars.all(|c| c.is_ascii_alphanumeric() || c == '_')
}

impl PrimitiveSet {
    pub fn new(terminals: Vec<String>, functions: Vec<FunctionSymbol>) -> Result<Self> {
        if terminals.is_empty() {
            return Err(Error::input("primitive set needs at least one terminal"));
        }
        for (i, name) in terminals.iter().enumerate() {
            if !is_identifier(name) {
                return Err(Error::input(format!(
                    "terminal name `{name}` is not an identifier ([A-Za-z_][A-Za-z0-9_]*)"
                )));
            }
            if FunctionSymbol::from_symbol(name).is_some() {
                return Err(Error::input(format!(
                    "terminal name `{name}` collides with a function symbol"
                )));
            }
            if terminals[..i].contains(name) {
                return Err(Error::input(format!("duplicate terminal `{name}`")));
            }
        }
        for (i, f) in functions.iter().enumerate() {
            if functions[..i].contains(f) {
                return Err(Error::input(format!("duplicate function `{f}`")));
            }
        }
        Ok(PrimitiveSet {
            terminals,
            functions,
        })
    }

    /// Terminals plus the full eight-symbol function set.
    pub fn with_all_functions(terminals: Vec<String>) -> Result<Self> {
        Self::new(terminals, FunctionSymbol::ALL.to_vec())
    }

    pub fn terminals(&self) -> &[String] {
        &self.terminals
    }

    pub fn functions(&self) -> &[FunctionSymbol] {
        &self.functions
    }

    pub fn terminal_index(&self, name: &str) -> Option<usize> {
        self.terminals.iter().position(|t| t == name)
    }

    /// Largest arity in the function set, 0 when there are no functions.
    pub fn max_arity(&self) -> usize {
        self.functions.iter().map(|f| f.arity()).max().unwrap_or(0)
    }

    pub(crate) fn random_terminal<R: Rng + ?Sized>(&self, rng: &mut R) -> Gene {
        Gene::Terminal(rng.gen_range(0..self.terminals.len()))
    }

    /// Draws a fresh gene for `position`: a function with probability
    /// `p_func` (never at position 0), otherwise a terminal.
    pub(crate) fn random_gene<R: Rng + ?Sized>(
        &self,
        position: usize,
        p_func: f64,
        rng: &mut R,
    ) -> Gene {
        if position == 0 || self.functions.is_empty() || !rng.gen_bool(p_func) {
            return self.random_terminal(rng);
        }
        let symbol = self.functions[rng.gen_range(0..self.functions.len())];
        let operands = (0..symbol.arity())
            .map(|_| rng.gen_range(0..position))
            .collect();
        Gene::Function { symbol, operands }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Gene {
    /// Index into the primitive set's terminal list.
    Terminal(usize),
    Function {
        symbol: FunctionSymbol,
        /// Positions of earlier genes.
        operands: Vec<usize>,
    },
}

impl Gene {
    pub fn is_terminal(&self) -> bool {
        matches!(self, Gene::Terminal(_))
    }

    /// 1 for a terminal, 1 + arity for a function.
    pub fn symbol_count(&self) -> usize {
        match self {
            Gene::Terminal(_) => 1,
            Gene::Function { operands, .. } => 1 + operands.len(),
        }
    }
}

/// Upper bound on the symbols in a chromosome of `num_genes` genes whose
/// functions take at most `max_arity` arguments.
pub fn capacity(max_arity: usize, num_genes: usize) -> usize {
    (max_arity + 1) * num_genes.saturating_sub(1) + 1
}

/// A single invariant violation found by [`Chromosome::validate`].
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub enum Violation {
    Empty,
    FirstGeneNotTerminal,
    SelfPointer { gene: usize },
    ForwardPointer { gene: usize, operand: usize },
    ArityMismatch { gene: usize, symbol: FunctionSymbol, expected: usize, found: usize },
    UnknownFunction { gene: usize, symbol: FunctionSymbol },
    UnknownTerminal { gene: usize, index: usize },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::Empty => write!(f, "chromosome has no genes"),
            Violation::FirstGeneNotTerminal => write!(f, "gene 1 must be a terminal"),
            Violation::SelfPointer { gene } => write!(f, "gene {} points at itself", gene + 1),
            Violation::ForwardPointer { gene, operand } => write!(
                f,
                "gene {} points forward to gene {}",
                gene + 1,
                operand + 1
            ),
            Violation::ArityMismatch { gene, symbol, expected, found } => write!(
                f,
                "gene {} applies {symbol} to {found} operands, expected {expected}",
                gene + 1
            ),
            Violation::UnknownFunction { gene, symbol } => {
                write!(f, "gene {} uses {symbol}, which is not in the function set", gene + 1)
            }
            Violation::UnknownTerminal { gene, index } => {
                write!(f, "gene {} uses unknown terminal #{index}", gene + 1)
            }
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_ok(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn into_result(self) -> Result<()> {
        if self.is_ok() {
            return Ok(());
        }
        let msg = self
            .violations
            .iter()
            .map(ToString::to_string)
            .collect::<Vec<_>>()
            .join("; ");
        Err(Error::InvalidChromosome(msg))
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Chromosome {
    genes: Vec<Gene>,
}

impl Chromosome {
    /// Wraps a gene list without checking it; see [`Chromosome::validate`].
    pub fn from_genes(genes: Vec<Gene>) -> Self {
        Chromosome { genes }
    }

    pub fn random<R: Rng + ?Sized>(
        primitives: &PrimitiveSet,
        num_genes: usize,
        p_func: f64,
        rng: &mut R,
    ) -> Self {
        let genes = (0..num_genes.max(1))
            .map(|i| primitives.random_gene(i, p_func, rng))
            .collect();
        Chromosome { genes }
    }

    pub fn genes(&self) -> &[Gene] {
        &self.genes
    }

    pub(crate) fn genes_mut(&mut self) -> &mut [Gene] {
        &mut self.genes
    }

    pub fn len(&self) -> usize {
        self.genes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.genes.is_empty()
    }

    pub fn symbol_count(&self) -> usize {
        self.genes.iter().map(Gene::symbol_count).sum()
    }

    pub fn validate(&self, primitives: &PrimitiveSet) -> ValidationReport {
        let mut violations = Vec::new();
        if self.genes.is_empty() {
            violations.push(Violation::Empty);
        }
        if matches!(self.genes.first(), Some(Gene::Function { .. })) {
            violations.push(Violation::FirstGeneNotTerminal);
        }
        for (pos, gene) in self.genes.iter().enumerate() {
            match gene {
                Gene::Terminal(index) => {
                    if *index >= primitives.terminals.len() {
                        violations.push(Violation::UnknownTerminal { gene: pos, index: *index });
                    }
                }
                Gene::Function { symbol, operands } => {
                    if !primitives.functions.contains(symbol) {
                        violations.push(Violation::UnknownFunction { gene: pos, symbol: *symbol });
                    }
                    if operands.len() != symbol.arity() {
                        violations.push(Violation::ArityMismatch {
                            gene: pos,
                            symbol: *symbol,
                            expected: symbol.arity(),
                            found: operands.len(),
                        });
                    }
                    if operands.contains(&pos) {
                        violations.push(Violation::SelfPointer { gene: pos });
                    }
                    for &operand in operands.iter().filter(|&&op| op > pos) {
                        violations.push(Violation::ForwardPointer { gene: pos, operand });
                    }
                }
            }
        }
        ValidationReport { violations }
    }

    /// Computes the value of every encoded expression in one forward pass.
    ///
    /// `case[i]` is the value bound to terminal `i`.
    pub fn evaluate_all(&self, case: &[f64], arithmetic: &ProtectedArithmetic) -> Result<Vec<f64>> {
        let mut out = Vec::with_capacity(self.genes.len());
        self.evaluate_into(case, arithmetic, &mut out)?;
        Ok(out)
    }

    /// As [`Chromosome::evaluate_all`], reusing `out` as the value buffer.
    pub fn evaluate_into(
        &self,
        case: &[f64],
        arithmetic: &ProtectedArithmetic,
        out: &mut Vec<f64>,
    ) -> Result<()> {
        out.clear();
        let mut args = [0.0; 2];
        for (pos, gene) in self.genes.iter().enumerate() {
            let value = match gene {
                Gene::Terminal(index) => *case
                    .get(*index)
                    .ok_or_else(|| Error::UnboundVariable(format!("terminal #{index}")))?,
                Gene::Function { symbol, operands } => {
                    if operands.len() > args.len() {
                        return Err(Error::InvalidChromosome(format!(
                            "gene {} has {} operands",
                            pos + 1,
                            operands.len()
                        )));
                    }
                    for (slot, &op) in args.iter_mut().zip(operands) {
                        if op >= pos {
                            return Err(Error::InvalidChromosome(format!(
                                "gene {} points at gene {}",
                                pos + 1,
                                op + 1
                            )));
                        }
                        *slot = out[op];
                    }
                    apply_function(*symbol, &args[..operands.len()], arithmetic)?
                }
            };
            out.push(value);
        }
        Ok(())
    }

    /// Evaluates with variables bound by name.
    pub fn evaluate_named(
        &self,
        primitives: &PrimitiveSet,
        bindings: &HashMap<String, f64>,
        arithmetic: &ProtectedArithmetic,
    ) -> Result<Vec<f64>> {
        let case = primitives
            .terminals
            .iter()
            .map(|name| {
                bindings
                    .get(name)
                    .copied()
                    .ok_or_else(|| Error::UnboundVariable(name.clone()))
            })
            .collect::<Result<Vec<_>>>()?;
        self.evaluate_all(&case, arithmetic)
    }

    /// Builds the expression tree rooted at `gene_index` (0-based).
    pub fn decode(&self, gene_index: usize, primitives: &PrimitiveSet) -> Result<ExpressionTree> {
        if gene_index >= self.genes.len() {
            return Err(Error::input(format!(
                "gene index {gene_index} out of range for a {}-gene chromosome",
                self.genes.len()
            )));
        }
        self.decode_at(gene_index, primitives)
    }

    fn decode_at(&self, pos: usize, primitives: &PrimitiveSet) -> Result<ExpressionTree> {
        match &self.genes[pos] {
            Gene::Terminal(index) => primitives
                .terminals
                .get(*index)
                .map(|name| ExpressionTree::Terminal(name.clone()))
                .ok_or_else(|| Error::UnboundVariable(format!("terminal #{index}"))),
            Gene::Function { symbol, operands } => {
                let children = operands
                    .iter()
                    .map(|&op| {
                        if op >= pos {
                            Err(Error::InvalidChromosome(format!(
                                "gene {} points at gene {}",
                                pos + 1,
                                op + 1
                            )))
                        } else {
                            self.decode_at(op, primitives)
                        }
                    })
                    .collect::<Result<Vec<_>>>()?;
                Ok(ExpressionTree::Function(*symbol, children))
            }
        }
    }

    /// Decodes every gene; the result has exactly `len()` expressions.
    pub fn decode_all(&self, primitives: &PrimitiveSet) -> Result<Vec<ExpressionTree>> {
        (0..self.genes.len()).map(|i| self.decode(i, primitives)).collect()
    }

    /// Line-oriented text form, one gene per line with 1-based positions:
    /// `3: + 1, 2`.
    pub fn to_text(&self, primitives: &PrimitiveSet) -> String {
        text::render(self, primitives)
    }

    pub fn parse_text(input: &str, primitives: &PrimitiveSet) -> Result<Self> {
        text::parse(input, primitives)
    }
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;
    use crate::rng::rng_from_seed;

    /// The eight-gene chromosome over F = {+, *} and T = {a, b, c, d}.
    pub(crate) fn worked_example() -> (Chromosome, PrimitiveSet) {
        let set = PrimitiveSet::new(
            ["a", "b", "c", "d"].map(String::from).to_vec(),
            vec![FunctionSymbol::Add, FunctionSymbol::Mul],
        )
        .unwrap();
        let add = |x: usize, y: usize| Gene::Function {
            symbol: FunctionSymbol::Add,
            operands: vec![x, y],
        };
        let genes = vec![
            Gene::Terminal(0),
            Gene::Terminal(1),
            add(0, 1),
            Gene::Terminal(2),
            Gene::Terminal(3),
            add(3, 4),
            Gene::Function {
                symbol: FunctionSymbol::Mul,
                operands: vec![2, 4],
            },
            add(1, 5),
        ];
        (Chromosome::from_genes(genes), set)
    }

    fn table_set() -> PrimitiveSet {
        PrimitiveSet::with_all_functions(
            ["KSLOC", "AdjFP", "Duration"].map(String::from).to_vec(),
        )
        .unwrap()
    }

    #[test]
    fn capacity_matches_formula() {
        assert_eq!(capacity(2, 8), 22);
        assert_eq!(capacity(2, 1), 1);
        assert_eq!(capacity(1, 5), 9);
    }

    #[test]
    fn worked_example_is_valid_and_within_capacity() {
        let (c, set) = worked_example();
        assert!(c.validate(&set).is_ok());
        assert!(c.symbol_count() <= capacity(set.max_arity(), c.len()));
        assert_eq!(c.symbol_count(), 4 + 4 * 3);
    }

    #[test]
    fn worked_example_values() {
        let (c, _) = worked_example();
        let v = c
            .evaluate_all(&[1.0, 2.0, 3.0, 4.0], &ProtectedArithmetic::default())
            .unwrap();
        assert_eq!(v, vec![1.0, 2.0, 3.0, 3.0, 4.0, 7.0, 12.0, 9.0]);
    }

    #[test]
    fn worked_example_decodes() {
        let (c, set) = worked_example();
        let infix: Vec<String> = c
            .decode_all(&set)
            .unwrap()
            .iter()
            .map(ExpressionTree::infix)
            .collect();
        assert_eq!(
            infix,
            [
                "a",
                "b",
                "(a + b)",
                "c",
                "d",
                "(c + d)",
                "((a + b) * d)",
                "(b + (c + d))"
            ]
        );
    }

    #[test]
    fn decode_out_of_range_is_input_error() {
        let (c, set) = worked_example();
        assert!(matches!(c.decode(8, &set), Err(Error::Input(_))));
    }

    #[test]
    fn single_gene_chromosome() {
        let set = PrimitiveSet::new(vec!["a".into()], vec![FunctionSymbol::Add]).unwrap();
        for seed in 0..20 {
            let c = Chromosome::random(&set, 1, 0.5, &mut rng_from_seed(seed));
            assert_eq!(c.genes(), &[Gene::Terminal(0)]);
        }
        let c = Chromosome::from_genes(vec![Gene::Terminal(0)]);
        let v = c.evaluate_all(&[5.0], &ProtectedArithmetic::default()).unwrap();
        assert_eq!(v, vec![5.0]);
    }

    #[test]
    fn random_chromosome_is_valid_and_deterministic() {
        let set = table_set();
        let a = Chromosome::random(&set, 8, 0.5, &mut rng_from_seed(42));
        let b = Chromosome::random(&set, 8, 0.5, &mut rng_from_seed(42));
        assert!(a.validate(&set).is_ok());
        assert_eq!(a, b);
        assert_eq!(a.len(), 8);
    }

    #[test]
    fn first_gene_function_reports_both_violations() {
        let set = table_set();
        let c = Chromosome::from_genes(vec![Gene::Function {
            symbol: FunctionSymbol::Add,
            operands: vec![0, 0],
        }]);
        let report = c.validate(&set);
        assert!(report.violations.contains(&Violation::FirstGeneNotTerminal));
        assert!(report.violations.contains(&Violation::SelfPointer { gene: 0 }));
        assert!(report.into_result().is_err());
    }

    #[test]
    fn forward_pointer_reported() {
        let (mut c, set) = worked_example();
        c.genes_mut()[3] = Gene::Function {
            symbol: FunctionSymbol::Add,
            operands: vec![4, 1],
        };
        let report = c.validate(&set);
        assert_eq!(
            report.violations,
            vec![Violation::ForwardPointer { gene: 3, operand: 4 }]
        );
    }

    #[test]
    fn arity_and_unknown_symbol_reported() {
        let (mut c, set) = worked_example();
        c.genes_mut()[2] = Gene::Function {
            symbol: FunctionSymbol::Sqrt,
            operands: vec![0, 1],
        };
        c.genes_mut()[1] = Gene::Terminal(9);
        let v = c.validate(&set).violations;
        assert!(v.contains(&Violation::UnknownFunction { gene: 2, symbol: FunctionSymbol::Sqrt }));
        assert!(v.contains(&Violation::ArityMismatch {
            gene: 2,
            symbol: FunctionSymbol::Sqrt,
            expected: 1,
            found: 2
        }));
        assert!(v.contains(&Violation::UnknownTerminal { gene: 1, index: 9 }));
    }

    #[test]
    fn evaluate_named_reports_unbound_variable() {
        let (c, set) = worked_example();
        let bindings: HashMap<String, f64> =
            [("a", 1.0), ("b", 2.0), ("c", 3.0)].map(|(k, v)| (k.to_string(), v)).into();
        let err = c
            .evaluate_named(&set, &bindings, &ProtectedArithmetic::default())
            .unwrap_err();
        assert!(matches!(err, Error::UnboundVariable(ref n) if n == "d"));
        assert!(matches!(
            c.evaluate_all(&[1.0, 2.0], &ProtectedArithmetic::default()),
            Err(Error::UnboundVariable(_))
        ));
    }

    #[test]
    fn primitive_set_rejects_bad_names() {
        assert!(PrimitiveSet::new(vec![], vec![]).is_err());
        assert!(PrimitiveSet::new(vec!["a".into(), "a".into()], vec![]).is_err());
        assert!(PrimitiveSet::new(vec!["EXP".into()], vec![]).is_err());
        assert!(PrimitiveSet::new(vec!["adj fp".into()], vec![]).is_err());
        assert!(
            PrimitiveSet::new(vec!["a".into()], vec![FunctionSymbol::Add, FunctionSymbol::Add])
                .is_err()
        );
    }

    #[test]
    fn power_alias() {
        assert_eq!(FunctionSymbol::from_symbol("POWER"), Some(FunctionSymbol::Pow));
        assert_eq!(FunctionSymbol::from_symbol("pow"), None);
    }
}
