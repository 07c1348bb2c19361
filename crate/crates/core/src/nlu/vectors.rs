use std::collections::HashMap;
use std::path::Path;

use crate::scalar::Scalar;

use super::NluError;

/// Word vectors of one fixed dimension, looked up case-insensitively.
#[derive(Debug, Clone, PartialEq)]
pub struct WordVectorTable<T> {
    dim: usize,
    vectors: HashMap<String, Vec<T>>,
}

impl<T: Scalar> WordVectorTable<T> {
    pub fn new(dim: usize) -> Self {
        WordVectorTable { dim, vectors: HashMap::new() }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }

    pub fn insert(&mut self, token: &str, vector: Vec<T>) -> Result<(), NluError> {
        if vector.len() != self.dim {
            return Err(NluError::Dimension { expected: self.dim, found: vector.len() });
        }
        self.vectors.insert(token.to_lowercase(), vector);
        Ok(())
    }

    pub fn get(&self, token: &str) -> Option<&[T]> {
        self.vectors.get(&token.to_lowercase()).map(Vec::as_slice)
    }

    /// Parses the plain text format: one token per line followed by its
    /// whitespace separated components. Blank lines are skipped. The
    /// dimension is taken from the first entry.
    pub fn from_text(text: &str) -> Result<Self, NluError> {
        let mut table: Option<Self> = None;
        for (n, line) in text.lines().enumerate() {
            let line_no = n + 1;
            let mut parts = line.split_whitespace();
            let Some(token) = parts.next() else { continue };
            let vector = parts
                .map(|p| {
                    p.parse::<f64>().ok().filter(|v| v.is_finite()).and_then(T::from_f64).ok_or_else(|| {
                        NluError::VectorFormat { line: line_no, message: format!("bad component '{p}'") }
                    })
                })
                .collect::<Result<Vec<T>, _>>()?;
            if vector.is_empty() {
                return Err(NluError::VectorFormat {
                    line: line_no,
                    message: format!("token '{token}' has no components"),
                });
            }
            let t = table.get_or_insert_with(|| Self::new(vector.len()));
            if vector.len() != t.dim {
                return Err(NluError::VectorFormat {
                    line: line_no,
                    message: format!("expected {} components, found {}", t.dim, vector.len()),
                });
            }
            t.vectors.insert(token.to_lowercase(), vector);
        }
        table.ok_or(NluError::VectorFormat { line: 0, message: "no vectors".into() })
    }

    pub fn load(path: &Path) -> Result<Self, NluError> {
        let text = std::fs::read_to_string(path).map_err(|e| NluError::Io(format!("{}: {e}", path.display())))?;
        Self::from_text(&text)
    }
}
