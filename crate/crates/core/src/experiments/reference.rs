//! Published results on the six benchmark datasets and comparison against
//! them. All values are under the MMRE metric.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ReferenceRow {
    /// Built-in schema name.
    pub dataset: &'static str,
    pub title: &'static str,
    /// Tree-based genetic programming fitness, the comparison target.
    pub gp_fitness: f64,
    /// Published MEP fitness; an aspiration, not an oracle.
    pub mep_fitness: f64,
    pub mep_generation: usize,
}

pub const REFERENCE: [ReferenceRow; 6] = [
    ReferenceRow { dataset: "albrecht", title: "Albrecht & Gaffney", gp_fitness: 0.548, mep_fitness: 0.33910, mep_generation: 56 },
    ReferenceRow { dataset: "bailey_basili", title: "Bailey & Basili", gp_fitness: 0.269, mep_fitness: 0.14200, mep_generation: 45 },
    ReferenceRow { dataset: "desharnais", title: "Desharnais", gp_fitness: 0.623, mep_fitness: 0.38951, mep_generation: 67 },
    ReferenceRow { dataset: "heiat", title: "Heiat & Heiat", gp_fitness: 0.087, mep_fitness: 0.08570, mep_generation: 100 },
    ReferenceRow { dataset: "kemerer", title: "Kemerer", gp_fitness: 0.584, mep_fitness: 0.36854, mep_generation: 200 },
    ReferenceRow { dataset: "miyazaki", title: "Miyazaki", gp_fitness: 0.506, mep_fitness: 0.32420, mep_generation: 200 },
];

/// Hex SHA-256 over one `dataset,gp,mep,generation` line per row.
pub fn reference_checksum(rows: &[ReferenceRow]) -> String {
    let mut text = String::new();
    for r in rows {
        writeln!(text, "{},{},{},{}", r.dataset, r.gp_fitness, r.mep_fitness, r.mep_generation).unwrap();
    }
    Sha256::digest(text.as_bytes()).iter().map(|b| format!("{b:02x}")).collect()
}

/// A measured result for one dataset.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Measured {
    pub dataset: String,
    pub fitness: f64,
    pub generation_of_best: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Outcome {
    Win,
    Tie,
    Loss,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ComparisonRow {
    pub dataset: String,
    pub reference_fitness: f64,
    pub measured_fitness: f64,
    pub generation_of_best: usize,
    /// Lower fitness wins; equality is a tie.
    pub outcome: Outcome,
    pub published_mep_fitness: f64,
    pub published_mep_generation: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Comparison {
    /// In reference-table order.
    pub rows: Vec<ComparisonRow>,
    pub wins: usize,
    pub ties: usize,
    pub losses: usize,
    /// Reference datasets with no measured result.
    pub missing: Vec<String>,
    pub warnings: Vec<String>,
}

impl Comparison {
    pub fn to_csv(&self) -> String {
        let mut out = String::from(
            "dataset,reference_fitness,measured_fitness,generation_of_best,outcome,published_mep_fitness,published_mep_generation\n",
        );
        for r in &self.rows {
            let outcome = match r.outcome {
                Outcome::Win => "win",
                Outcome::Tie => "tie",
                Outcome::Loss => "loss",
            };
            writeln!(
                out,
                "{},{},{},{},{},{},{}",
                r.dataset,
                r.reference_fitness,
                r.measured_fitness,
                r.generation_of_best,
                outcome,
                r.published_mep_fitness,
                r.published_mep_generation
            )
            .unwrap();
        }
        out
    }
}

/// Compares measured results with `reference`. A measured dataset that is
/// not in the table is an error; a table dataset without a measurement is
/// reported in `missing`.
pub fn compare_with_reference(measured: &[Measured], reference: &[ReferenceRow]) -> Result<Comparison> {
    for m in measured {
        if !reference.iter().any(|r| r.dataset == m.dataset) {
            let known: Vec<&str> = reference.iter().map(|r| r.dataset).collect();
            return Err(Error::input(format!(
                "dataset `{}` has no reference value (known: {})",
                m.dataset,
                known.join(", ")
            )));
        }
        if measured.iter().filter(|o| o.dataset == m.dataset).count() > 1 {
            return Err(Error::input(format!("dataset `{}` measured more than once", m.dataset)));
        }
    }
    let mut comparison = Comparison {
        rows: Vec::new(),
        wins: 0,
        ties: 0,
        losses: 0,
        missing: Vec::new(),
        warnings: Vec::new(),
    };
    for r in reference {
        let Some(m) = measured.iter().find(|m| m.dataset == r.dataset) else {
            comparison.missing.push(r.dataset.to_string());
            comparison.warnings.push(format!("no result for `{}`; row omitted", r.dataset));
            continue;
        };
        let outcome = if m.fitness < r.gp_fitness {
            comparison.wins += 1;
            Outcome::Win
        } else if m.fitness == r.gp_fitness {
            comparison.ties += 1;
            Outcome::Tie
        } else {
            comparison.losses += 1;
            Outcome::Loss
        };
        comparison.rows.push(ComparisonRow {
            dataset: r.dataset.to_string(),
            reference_fitness: r.gp_fitness,
            measured_fitness: m.fitness,
            generation_of_best: m.generation_of_best,
            outcome,
            published_mep_fitness: r.mep_fitness,
            published_mep_generation: r.mep_generation,
        });
    }
    Ok(comparison)
}
