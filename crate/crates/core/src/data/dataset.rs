use std::collections::HashMap;

use crate::error::{Error, Result};
use crate::nn::Matrix;

/// Feature rows keyed by entity id, with optional class labels.
#[derive(Debug, Clone)]
pub struct Dataset {
    features: Matrix,
    labels: Option<Vec<usize>>,
    entity_ids: Vec<usize>,
    row_of: HashMap<usize, usize>,
}

impl Dataset {
    pub fn new(
        features: Matrix,
        labels: Option<Vec<usize>>,
        entity_ids: Vec<usize>,
    ) -> Result<Self> {
        if entity_ids.len() != features.rows() {
            return Err(Error::dim(
                "Dataset::new",
                features.rows(),
                entity_ids.len(),
            ));
        }
        if let Some(l) = &labels {
            if l.len() != features.rows() {
                return Err(Error::dim("Dataset::new labels", features.rows(), l.len()));
            }
        }
        let mut row_of = HashMap::with_capacity(entity_ids.len());
        for (row, &id) in entity_ids.iter().enumerate() {
            if row_of.insert(id, row).is_some() {
                return Err(Error::Config(format!("duplicate entity id {id}")));
            }
        }
        Ok(Self {
            features,
            labels,
            entity_ids,
            row_of,
        })
    }

    /// Entities numbered `0..n` in row order.
    pub fn with_sequential_ids(features: Matrix, labels: Option<Vec<usize>>) -> Result<Self> {
        let ids = (0..features.rows()).collect();
        Self::new(features, labels, ids)
    }

    pub fn len(&self) -> usize {
        self.features.rows()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn dim(&self) -> usize {
        self.features.cols()
    }

    pub fn features(&self) -> &Matrix {
        &self.features
    }

    pub fn labels(&self) -> Option<&[usize]> {
        self.labels.as_deref()
    }

    pub fn entity_ids(&self) -> &[usize] {
        &self.entity_ids
    }

    pub fn row_of(&self, id: usize) -> Option<usize> {
        self.row_of.get(&id).copied()
    }

    pub fn rows_for(&self, ids: &[usize]) -> Result<Vec<usize>> {
        ids.iter()
            .map(|&id| {
                self.row_of(id)
                    .ok_or_else(|| Error::Config(format!("entity {id} not in dataset")))
            })
            .collect()
    }

    pub fn gather_rows(&self, rows: &[usize]) -> Result<Matrix> {
        self.features.select_rows(rows)
    }

    pub fn labels_at(&self, rows: &[usize]) -> Result<Vec<usize>> {
        let labels = self
            .labels
            .as_ref()
            .ok_or_else(|| Error::Config("dataset has no labels".into()))?;
        Ok(rows.iter().map(|&r| labels[r]).collect())
    }

    /// Subset by entity id, in the given order.
    pub fn select_ids(&self, ids: &[usize]) -> Result<Dataset> {
        let rows = self.rows_for(ids)?;
        let labels = match &self.labels {
            Some(_) => Some(self.labels_at(&rows)?),
            None => None,
        };
        Dataset::new(self.features.select_rows(&rows)?, labels, ids.to_vec())
    }

    /// Same entities restricted to a set of feature columns; labels dropped.
    pub fn select_features(&self, columns: &[usize]) -> Result<Dataset> {
        Ok(Dataset {
            features: self.features.select_columns(columns)?,
            labels: None,
            entity_ids: self.entity_ids.clone(),
            row_of: self.row_of.clone(),
        })
    }

    pub fn without_labels(mut self) -> Dataset {
        self.labels = None;
        self
    }

    /// Largest label + 1, or 0 when unlabeled.
    pub fn class_count(&self) -> usize {
        self.labels
            .as_ref()
            .and_then(|l| l.iter().max())
            .map_or(0, |m| m + 1)
    }
}
