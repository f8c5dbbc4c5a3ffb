use serde::Serialize;

use super::web::{enumerate_web, strides, WebElement};
use crate::ast::{Type, Variable};

/// Dense nonnegative matrix indexed by the web of a set of free variables
/// (rows) and the web of a type (columns).
#[derive(Clone, Debug, PartialEq)]
pub struct WeightedRelation {
    rows: Vec<Variable>,
    ty: Type,
    n_rows: usize,
    n_cols: usize,
    entries: Vec<f64>,
}

impl WeightedRelation {
    /// `rows` must be sorted by name without duplicates.
    pub fn new(rows: Vec<Variable>, ty: Type, entries: Vec<f64>) -> Self {
        let n_rows = rows.iter().map(|v| v.web_size()).product();
        let n_cols = ty.web_size().expect("web size overflow");
        assert_eq!(entries.len(), n_rows * n_cols, "relation shape");
        debug_assert!(rows.windows(2).all(|w| w[0].name() < w[1].name()));
        WeightedRelation {
            rows,
            ty,
            n_rows,
            n_cols,
            entries,
        }
    }

    pub fn rows(&self) -> &[Variable] {
        &self.rows
    }

    pub fn ty(&self) -> &Type {
        &self.ty
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn n_cols(&self) -> usize {
        self.n_cols
    }

    pub fn entries(&self) -> &[f64] {
        &self.entries
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.entries[row * self.n_cols + col]
    }

    pub fn row(&self, row: usize) -> &[f64] {
        &self.entries[row * self.n_cols..(row + 1) * self.n_cols]
    }

    pub fn row_radices(&self) -> Vec<usize> {
        self.rows.iter().map(|v| v.web_size()).collect()
    }

    pub fn row_strides(&self) -> Vec<usize> {
        strides(&self.row_radices())
    }

    /// Sum of all entries of the single row of a closed relation.
    pub fn total_mass(&self) -> f64 {
        self.entries.iter().sum()
    }

    /// Largest absolute entrywise difference, or `None` when the shapes or
    /// variable sets differ.
    pub fn max_abs_diff(&self, other: &WeightedRelation) -> Option<f64> {
        if self.rows != other.rows || self.ty != other.ty {
            return None;
        }
        Some(
            self.entries
                .iter()
                .zip(&other.entries)
                .map(|(a, b)| (a - b).abs())
                .fold(0.0, f64::max),
        )
    }

    /// Output distribution of a closed relation, paired with web elements.
    pub fn distribution(&self) -> Option<Vec<(WebElement, f64)>> {
        if self.n_rows != 1 {
            return None;
        }
        Some(enumerate_web(&self.ty).into_iter().zip(self.entries.iter().copied()).collect())
    }

    pub fn to_json(&self) -> RelationJson {
        RelationJson {
            rows: self.rows.iter().map(|v| v.name().to_string()).collect(),
            row_types: self.rows.iter().map(|v| v.ty().to_string()).collect(),
            ty: self.ty.to_string(),
            columns: enumerate_web(&self.ty).iter().map(|e| e.to_string()).collect(),
            entries: self.entries.chunks(self.n_cols).map(|c| c.to_vec()).collect(),
        }
    }
}

#[derive(Debug, Serialize)]
pub struct RelationJson {
    pub rows: Vec<String>,
    pub row_types: Vec<String>,
    #[serde(rename = "type")]
    pub ty: String,
    pub columns: Vec<String>,
    pub entries: Vec<Vec<f64>>,
}
