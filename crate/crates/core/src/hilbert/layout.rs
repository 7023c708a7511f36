use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Factor {
    pub label: String,
    pub dim: usize,
}

/// Ordered tensor-product structure of a composite space. The first factor is
/// the most significant index in the flattened storage order.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "Vec<Factor>", into = "Vec<Factor>")]
pub struct SpaceLayout {
    factors: Vec<Factor>,
}

impl SpaceLayout {
    pub fn new<I, S>(factors: I) -> Result<Self>
    where
        I: IntoIterator<Item = (S, usize)>,
        S: Into<String>,
    {
        let factors = factors
            .into_iter()
            .map(|(label, dim)| Factor { label: label.into(), dim })
            .collect::<Vec<_>>();
        Self::try_from(factors)
    }

    pub fn single(label: &str, dim: usize) -> Result<Self> {
        Self::new([(label, dim)])
    }

    pub fn factors(&self) -> &[Factor] {
        &self.factors
    }

    pub fn total_dim(&self) -> usize {
        self.factors.iter().map(|f| f.dim).product()
    }

    pub fn position(&self, label: &str) -> Result<usize> {
        self.factors
            .iter()
            .position(|f| f.label == label)
            .ok_or_else(|| Error::Layout(format!("no factor labelled {label:?}")))
    }

    pub fn dim_of(&self, label: &str) -> Result<usize> {
        Ok(self.factors[self.position(label)?].dim)
    }

    pub fn contains(&self, label: &str) -> bool {
        self.factors.iter().any(|f| f.label == label)
    }

    /// Tensor-product layout `self ⊗ other`.
    pub fn concat(&self, other: &SpaceLayout) -> Result<Self> {
        let mut factors = self.factors.clone();
        factors.extend(other.factors.iter().cloned());
        Self::try_from(factors)
    }

    /// Dimensions before, of, and after the factor at `pos` in storage order.
    pub(crate) fn split_at(&self, pos: usize) -> (usize, usize, usize) {
        let left = self.factors[..pos].iter().map(|f| f.dim).product();
        let right = self.factors[pos + 1..].iter().map(|f| f.dim).product();
        (left, self.factors[pos].dim, right)
    }

    /// Flattened index of a basis state given one index per factor.
    pub fn flat_index(&self, indices: &[usize]) -> Result<usize> {
        if indices.len() != self.factors.len() {
            return Err(Error::Layout(format!(
                "expected {} indices, got {}",
                self.factors.len(),
                indices.len()
            )));
        }
        let mut flat = 0;
        for (f, &i) in self.factors.iter().zip(indices) {
            if i >= f.dim {
                return Err(Error::Layout(format!(
                    "index {i} out of range for factor {:?} of dimension {}",
                    f.label, f.dim
                )));
            }
            flat = flat * f.dim + i;
        }
        Ok(flat)
    }
}

impl TryFrom<Vec<Factor>> for SpaceLayout {
    type Error = Error;

    fn try_from(factors: Vec<Factor>) -> Result<Self> {
        if factors.is_empty() {
            return Err(Error::Layout("layout needs at least one factor".into()));
        }
        for (i, f) in factors.iter().enumerate() {
            if f.dim < 2 {
                return Err(Error::InvalidDimension { what: "factor", dim: f.dim });
            }
            if factors[..i].iter().any(|g| g.label == f.label) {
                return Err(Error::Layout(format!("duplicate factor label {:?}", f.label)));
            }
        }
        Ok(Self { factors })
    }
}

impl From<SpaceLayout> for Vec<Factor> {
    fn from(layout: SpaceLayout) -> Self {
        layout.factors
    }
}
