//! Protected arithmetic and fitness measures.
//!
//! An expression's fitness is its error over every fitness case, and a
//! chromosome's fitness is the lowest fitness among the expressions it
//! encodes. Lower is better.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::datasets::Dataset;
use crate::genome::{Chromosome, FunctionSymbol};
use crate::{Error, Result};

/// Domain guards that make every function total on finite inputs.
///
/// * `x / y` returns `x` when `|y| < epsilon`.
/// * `LOG(x)` is `ln(max(|x|, epsilon))`.
/// * `SQRT(x)` is `sqrt(|x|)`.
/// * `POW(x, y)` with negative `x` and non-integer `y` uses `|x|`.
/// * Every result is clamped to `[-overflow_cap, overflow_cap]`; NaN maps
///   to 0.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProtectedArithmetic {
    pub epsilon: f64,
    pub overflow_cap: f64,
}

impl Default for ProtectedArithmetic {
    fn default() -> Self {
        ProtectedArithmetic {
            epsilon: 1e-9,
            overflow_cap: 1e12,
        }
    }
}

impl ProtectedArithmetic {
    pub fn validate(&self) -> Result<()> {
        if !(self.epsilon > 0.0 && self.epsilon.is_finite()) {
            return Err(Error::input("epsilon must be a positive finite number"));
        }
        if !(self.overflow_cap > 0.0 && self.overflow_cap.is_finite()) {
            return Err(Error::input("overflow_cap must be a positive finite number"));
        }
        Ok(())
    }

    #[inline]
    fn guard(&self, value: f64) -> f64 {
        if value.is_nan() {
            0.0
        } else {
            value.clamp(-self.overflow_cap, self.overflow_cap)
        }
    }
}

/// Applies `symbol` to `args` under the protection rules of `arithmetic`.
pub fn apply_function(
    symbol: FunctionSymbol,
    args: &[f64],
    arithmetic: &ProtectedArithmetic,
) -> Result<f64> {
    if args.len() != symbol.arity() {
        return Err(Error::input(format!(
            "{symbol} takes {} argument(s), got {}",
            symbol.arity(),
            args.len()
        )));
    }
    let raw = match symbol {
        FunctionSymbol::Sub => args[0] - args[1],
        FunctionSymbol::Add => args[0] + args[1],
        FunctionSymbol::Mul => args[0] * args[1],
        FunctionSymbol::Div => {
            if args[1].abs() < arithmetic.epsilon {
                args[0]
            } else {
                args[0] / args[1]
            }
        }
        FunctionSymbol::Pow => {
            let (base, exponent) = (args[0], args[1]);
            if base < 0.0 && exponent.fract() != 0.0 {
                base.abs().powf(exponent)
            } else {
                base.powf(exponent)
            }
        }
        FunctionSymbol::Exp => args[0].exp(),
        FunctionSymbol::Log => args[0].abs().max(arithmetic.epsilon).ln(),
        FunctionSymbol::Sqrt => args[0].abs().sqrt(),
    };
    Ok(arithmetic.guard(raw))
}

/// Error measure over a set of fitness cases.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Metric {
    /// Sum of absolute errors.
    SumAbsError,
    /// Mean magnitude of relative error.
    #[default]
    Mmre,
}

impl Metric {
    pub fn name(self) -> &'static str {
        match self {
            Metric::SumAbsError => "sum_abs_error",
            Metric::Mmre => "mmre",
        }
    }
}

impl fmt::Display for Metric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Metric {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "sum_abs_error" => Ok(Metric::SumAbsError),
            "mmre" => Ok(Metric::Mmre),
            other => Err(Error::input(format!(
                "unknown metric `{other}` (expected sum_abs_error or mmre)"
            ))),
        }
    }
}

/// Error of one expression's outputs against the targets. Sums run
/// left to right over case index.
pub fn expression_fitness(outputs: &[f64], targets: &[f64], metric: Metric) -> Result<f64> {
    if outputs.len() != targets.len() {
        return Err(Error::input(format!(
            "{} outputs for {} targets",
            outputs.len(),
            targets.len()
        )));
    }
    if outputs.is_empty() {
        return Err(Error::input("no fitness cases"));
    }
    match metric {
        Metric::SumAbsError => Ok(outputs
            .iter()
            .zip(targets)
            .fold(0.0, |acc, (o, w)| acc + (o - w).abs())),
        Metric::Mmre => {
            if let Some(w) = targets.iter().find(|&&w| !(w > 0.0)) {
                return Err(Error::input(format!("mmre needs positive targets, found {w}")));
            }
            let sum = outputs
                .iter()
                .zip(targets)
                .fold(0.0, |acc, (o, w)| acc + (o - w).abs() / w);
            Ok(sum / outputs.len() as f64)
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FitnessReport {
    pub per_gene_fitness: Vec<f64>,
    /// Lowest index among the genes attaining the minimum.
    pub best_gene_index: usize,
    pub chromosome_fitness: f64,
    pub metric: Metric,
}

/// Index and value of the minimum, lowest index on ties.
pub(crate) fn argmin(values: &[f64]) -> Option<(usize, f64)> {
    values.iter().copied().enumerate().fold(None, |best, (i, v)| match best {
        Some((_, b)) if b <= v => best,
        _ => Some((i, v)),
    })
}

/// Scores chromosomes against a dataset.
///
/// Checks the dataset once and caches its targets for repeated evaluation.
#[derive(Clone, Debug)]
pub struct Evaluator<'a> {
    dataset: &'a Dataset,
    metric: Metric,
    arithmetic: ProtectedArithmetic,
    targets: Vec<f64>,
}

impl<'a> Evaluator<'a> {
    pub fn new(dataset: &'a Dataset, metric: Metric, arithmetic: ProtectedArithmetic) -> Result<Self> {
        dataset.ensure_complete()?;
        arithmetic.validate()?;
        let targets = dataset.efforts();
        if targets.is_empty() {
            return Err(Error::input(format!("dataset `{}` has no cases", dataset.name())));
        }
        if metric == Metric::Mmre {
            expression_fitness(&targets, &targets, metric)?;
        }
        Ok(Evaluator {
            dataset,
            metric,
            arithmetic,
            targets,
        })
    }

    pub fn metric(&self) -> Metric {
        self.metric
    }

    pub fn arithmetic(&self) -> &ProtectedArithmetic {
        &self.arithmetic
    }

    pub fn evaluate(&self, chromosome: &Chromosome) -> Result<FitnessReport> {
        let genes = chromosome.len();
        let cases = self.targets.len();
        // Gene-major so each gene's outputs form a contiguous slice.
        let mut outputs = vec![0.0; genes * cases];
        let mut values = Vec::with_capacity(genes);
        for (k, case) in self.dataset.cases().iter().enumerate() {
            chromosome.evaluate_into(&case.features, &self.arithmetic, &mut values)?;
            for (g, v) in values.iter().enumerate() {
                outputs[g * cases + k] = *v;
            }
        }
        let per_gene_fitness = outputs
            .chunks_exact(cases.max(1))
            .map(|column| expression_fitness(column, &self.targets, self.metric))
            .collect::<Result<Vec<_>>>()?;
        let (best_gene_index, chromosome_fitness) = argmin(&per_gene_fitness)
            .ok_or_else(|| Error::input("chromosome has no genes"))?;
        Ok(FitnessReport {
            per_gene_fitness,
            best_gene_index,
            chromosome_fitness,
            metric: self.metric,
        })
    }
}

/// Per-gene fitness of every expression in `chromosome` and the minimum.
pub fn chromosome_fitness(
    chromosome: &Chromosome,
    dataset: &Dataset,
    metric: Metric,
    arithmetic: &ProtectedArithmetic,
) -> Result<FitnessReport> {
    Evaluator::new(dataset, metric, *arithmetic)?.evaluate(chromosome)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::datasets::Case;
    use crate::genome::tests::worked_example;
    use crate::genome::{Gene, PrimitiveSet};
    use proptest::prelude::*;

    const A: ProtectedArithmetic = ProtectedArithmetic {
        epsilon: 1e-9,
        overflow_cap: 1e12,
    };

    fn dataset(features: &[&str], rows: &[(&[f64], f64)]) -> Dataset {
        let cases = rows
            .iter()
            .enumerate()
            .map(|(i, (f, e))| Case {
                source_row: i + 1,
                features: f.to_vec(),
                effort: *e,
            })
            .collect();
        Dataset::from_cases(
            "t",
            features.iter().map(|s| s.to_string()).collect(),
            "effort",
            cases,
        )
        .unwrap()
    }

    #[test]
    fn apply_function_examples() {
        assert_eq!(apply_function(FunctionSymbol::Add, &[1.0, 2.0], &A).unwrap(), 3.0);
        assert_eq!(apply_function(FunctionSymbol::Div, &[5.0, 0.0], &A).unwrap(), 5.0);
        assert_eq!(apply_function(FunctionSymbol::Sqrt, &[-4.0], &A).unwrap(), 2.0);
        assert_eq!(apply_function(FunctionSymbol::Log, &[0.0], &A).unwrap(), 1e-9f64.ln());
        assert_eq!(apply_function(FunctionSymbol::Log, &[-std::f64::consts::E], &A).unwrap(), 1.0);
        assert_eq!(apply_function(FunctionSymbol::Exp, &[1000.0], &A).unwrap(), 1e12);
        assert_eq!(apply_function(FunctionSymbol::Pow, &[-8.0, 1.0 / 3.0], &A).unwrap(), 2.0);
        assert_eq!(apply_function(FunctionSymbol::Pow, &[-2.0, 3.0], &A).unwrap(), -8.0);
        assert_eq!(apply_function(FunctionSymbol::Pow, &[0.0, -1.0], &A).unwrap(), 1e12);
        assert_eq!(apply_function(FunctionSymbol::Mul, &[-1e300, 1e300], &A).unwrap(), -1e12);
    }

    #[test]
    fn arity_mismatch_is_error() {
        assert!(apply_function(FunctionSymbol::Add, &[1.0], &A).is_err());
        assert!(apply_function(FunctionSymbol::Exp, &[1.0, 2.0], &A).is_err());
    }

    #[test]
    fn expression_fitness_examples() {
        assert_eq!(expression_fitness(&[3.0, 4.0], &[3.0, 5.0], Metric::SumAbsError).unwrap(), 1.0);
        assert_eq!(expression_fitness(&[7.0, 9.0], &[7.0, 9.0], Metric::SumAbsError).unwrap(), 0.0);
        assert_eq!(expression_fitness(&[7.0, 9.0], &[7.0, 9.0], Metric::Mmre).unwrap(), 0.0);
        assert_eq!(expression_fitness(&[100.0, 200.0], &[100.0, 100.0], Metric::Mmre).unwrap(), 0.5);
    }

    #[test]
    fn expression_fitness_errors() {
        assert!(expression_fitness(&[1.0], &[0.0], Metric::Mmre).is_err());
        assert!(expression_fitness(&[1.0], &[-2.0], Metric::Mmre).is_err());
        assert!(expression_fitness(&[1.0], &[1.0, 2.0], Metric::SumAbsError).is_err());
        assert!(expression_fitness(&[], &[], Metric::SumAbsError).is_err());
        // Zero targets are fine for the absolute error.
        assert_eq!(expression_fitness(&[1.0], &[0.0], Metric::SumAbsError).unwrap(), 1.0);
    }

    #[test]
    fn metric_names_round_trip() {
        for m in [Metric::SumAbsError, Metric::Mmre] {
            assert_eq!(m.name().parse::<Metric>().unwrap(), m);
            assert_eq!(serde_json::to_string(&m).unwrap(), format!("\"{m}\""));
        }
        assert!("mse".parse::<Metric>().is_err());
    }

    #[test]
    fn worked_example_two_case_fitness() {
        let (c, _) = worked_example();
        let ds = dataset(
            &["a", "b", "c", "d"],
            &[(&[1.0, 2.0, 3.0, 4.0], 3.0), (&[2.0, 2.0, 0.0, 0.0], 4.0)],
        );
        let report = chromosome_fitness(&c, &ds, Metric::SumAbsError, &A).unwrap();
        // Hand evaluation: case 1 outputs [1,2,3,3,4,7,12,9], case 2 [2,2,4,0,0,0,0,2].
        assert_eq!(report.per_gene_fitness, vec![4.0, 3.0, 0.0, 4.0, 5.0, 8.0, 13.0, 8.0]);
        assert_eq!(report.chromosome_fitness, 0.0);
        assert_eq!(report.best_gene_index, 2);
    }

    #[test]
    fn exact_gene_and_tie_break() {
        // Genes 0 and 2 both reproduce the target; the lower index wins.
        let set = PrimitiveSet::with_all_functions(vec!["a".into(), "b".into()]).unwrap();
        let c = Chromosome::from_genes(vec![
            Gene::Terminal(0),
            Gene::Terminal(1),
            Gene::Function {
                symbol: FunctionSymbol::Mul,
                operands: vec![0, 0],
            },
        ]);
        assert!(c.validate(&set).is_ok());
        let ds = dataset(&["a", "b"], &[(&[1.0, 3.0], 1.0), (&[1.0, 5.0], 1.0)]);
        let r = chromosome_fitness(&c, &ds, Metric::Mmre, &A).unwrap();
        assert_eq!(r.chromosome_fitness, 0.0);
        assert_eq!(r.best_gene_index, 0);
    }

    #[test]
    fn single_terminal_matching_target() {
        let c = Chromosome::from_genes(vec![Gene::Terminal(0)]);
        let ds = dataset(&["a"], &[(&[2.0], 2.0), (&[9.5], 9.5)]);
        for m in [Metric::SumAbsError, Metric::Mmre] {
            assert_eq!(chromosome_fitness(&c, &ds, m, &A).unwrap().chromosome_fitness, 0.0);
        }
    }

    #[test]
    fn unbound_terminal_propagates() {
        let c = Chromosome::from_genes(vec![Gene::Terminal(3)]);
        let ds = dataset(&["a"], &[(&[2.0], 2.0)]);
        assert!(matches!(
            chromosome_fitness(&c, &ds, Metric::Mmre, &A),
            Err(Error::UnboundVariable(_))
        ));
    }

    #[test]
    fn argmin_prefers_lowest_index() {
        assert_eq!(argmin(&[3.0, 1.0, 1.0]), Some((1, 1.0)));
        assert_eq!(argmin(&[]), None);
    }

    #[test]
    fn adding_exact_case_rescales_mmre_only_by_n() {
        let o = [3.0, 7.0, 1.5];
        let w = [2.0, 8.0, 1.0];
        let sae = expression_fitness(&o, &w, Metric::SumAbsError).unwrap();
        let mmre = expression_fitness(&o, &w, Metric::Mmre).unwrap();
        let o2 = [3.0, 7.0, 1.5, 4.0];
        let w2 = [2.0, 8.0, 1.0, 4.0];
        assert_eq!(expression_fitness(&o2, &w2, Metric::SumAbsError).unwrap(), sae);
        let mmre2 = expression_fitness(&o2, &w2, Metric::Mmre).unwrap();
        assert!((mmre2 - mmre * 3.0 / 4.0).abs() < 1e-15);
    }

    proptest! {
        #[test]
        fn metric_scaling(
            pairs in prop::collection::vec((0.01f64..1e4, 0.01f64..1e4), 1..30),
            c in 0.01f64..100.0,
        ) {
            let (o, w): (Vec<f64>, Vec<f64>) = pairs.into_iter().unzip();
            let co: Vec<f64> = o.iter().map(|x| c * x).collect();
            let cw: Vec<f64> = w.iter().map(|x| c * x).collect();
            let m1 = expression_fitness(&o, &w, Metric::Mmre).unwrap();
            let m2 = expression_fitness(&co, &cw, Metric::Mmre).unwrap();
            prop_assert!((m1 - m2).abs() <= 1e-12 * m1.max(1.0));
            let s1 = expression_fitness(&o, &w, Metric::SumAbsError).unwrap();
            let s2 = expression_fitness(&co, &cw, Metric::SumAbsError).unwrap();
            prop_assert!((c * s1 - s2).abs() <= 1e-9 * s2.max(1.0));
        }

        #[test]
        fn zero_iff_equal(w in prop::collection::vec(0.01f64..1e4, 1..20), bump in 0usize..20) {
            prop_assert_eq!(expression_fitness(&w, &w, Metric::Mmre).unwrap(), 0.0);
            let mut o = w.clone();
            let i = bump % o.len();
            o[i] += 1.0;
            prop_assert!(expression_fitness(&o, &w, Metric::Mmre).unwrap() > 0.0);
            prop_assert!(expression_fitness(&o, &w, Metric::SumAbsError).unwrap() > 0.0);
        }
    }
}
