use crate::error::{Error, Result};

/// `N` tokens in `R^d` paired with `N` positions in `R^{d_c}`.
///
/// All tokens share one length and all positions share one length. An empty
/// batch has no recorded dimensions.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct PositionedTokenBatch {
    tokens: Vec<Vec<f64>>,
    positions: Vec<Vec<f64>>,
}

fn check_uniform(rows: &[Vec<f64>], what: &'static str) -> Result<()> {
    if let Some(first) = rows.first() {
        for (index, row) in rows.iter().enumerate() {
            if row.len() != first.len() {
                return Err(Error::RaggedBatch {
                    index,
                    what,
                    expected: first.len(),
                    found: row.len(),
                });
            }
            if row.iter().any(|x| !x.is_finite()) {
                return Err(Error::NonFinite(what));
            }
        }
    }
    Ok(())
}

impl PositionedTokenBatch {
    pub fn new(tokens: Vec<Vec<f64>>, positions: Vec<Vec<f64>>) -> Result<Self> {
        if tokens.len() != positions.len() {
            return Err(Error::DimensionMismatch {
                what: "position count",
                expected: tokens.len(),
                found: positions.len(),
            });
        }
        check_uniform(&tokens, "token")?;
        check_uniform(&positions, "position")?;
        Ok(Self { tokens, positions })
    }

    pub fn empty() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn tokens(&self) -> &[Vec<f64>] {
        &self.tokens
    }

    pub fn positions(&self) -> &[Vec<f64>] {
        &self.positions
    }

    pub fn token_dim(&self) -> Option<usize> {
        self.tokens.first().map(Vec::len)
    }

    pub fn coord_dim(&self) -> Option<usize> {
        self.positions.first().map(Vec::len)
    }

    pub fn into_parts(self) -> (Vec<Vec<f64>>, Vec<Vec<f64>>) {
        (self.tokens, self.positions)
    }

    /// Same positions, tokens multiplied by `factor`.
    pub fn scale_tokens(&self, factor: f64) -> Self {
        Self {
            tokens: self
                .tokens
                .iter()
                .map(|t| t.iter().map(|x| x * factor).collect())
                .collect(),
            positions: self.positions.clone(),
        }
    }

    /// Same tokens, positions passed through `f`.
    pub fn map_positions(&self, f: impl Fn(&[f64]) -> Vec<f64>) -> Result<Self> {
        Self::new(self.tokens.clone(), self.positions.iter().map(|p| f(p)).collect())
    }
}
