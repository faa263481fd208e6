use crate::{Error, Result, Scalar};

/// A point of a `d`-dimensional real state space, `d >= 1`.
///
/// Every stored coordinate is finite; NaN and infinities are rejected at
/// construction so that density code never has to re-check.
#[derive(Debug, Clone, PartialEq)]
pub struct Point<F: Scalar> {
    coords: Vec<F>,
}

impl<F: Scalar> Point<F> {
    pub fn new(coords: Vec<F>) -> Result<Self> {
        if coords.is_empty() {
            return Err(Error::invalid("a point needs at least one coordinate"));
        }
        if let Some(c) = coords.iter().find(|c| !c.is_finite()) {
            return Err(Error::invalid(format!("non-finite coordinate {c}")));
        }
        Ok(Point { coords })
    }

    pub fn dim(&self) -> usize {
        self.coords.len()
    }

    pub fn coords(&self) -> &[F] {
        &self.coords
    }

    /// Coordinate by 0-based position.
    pub fn coord(&self, i: usize) -> F {
        self.coords[i]
    }

    /// Copy of this point with the 0-based coordinate `i` replaced by `z`.
    ///
    /// `z` must be finite; samplers screen proposals before calling this.
    pub fn with_coord(&self, i: usize, z: F) -> Result<Self> {
        if i >= self.coords.len() {
            return Err(Error::invalid(format!(
                "coordinate index {i} out of range for dimension {}",
                self.coords.len()
            )));
        }
        if !z.is_finite() {
            return Err(Error::invalid(format!("non-finite coordinate {z}")));
        }
        let mut coords = self.coords.clone();
        coords[i] = z;
        Ok(Point { coords })
    }

    pub fn into_coords(self) -> Vec<F> {
        self.coords
    }
}

impl<F: Scalar> From<Point<F>> for Vec<F> {
    fn from(p: Point<F>) -> Self {
        p.coords
    }
}

/// Convenience constructor used throughout the tests.
#[cfg(test)]
pub(crate) fn point<F: Scalar>(coords: &[F]) -> Point<F> {
    Point::new(coords.to_vec()).expect("finite, nonempty coordinates")
}
