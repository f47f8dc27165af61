use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Boundary {
    /// Last point is one spacing short of `upper`; `upper` wraps onto `lower`.
    Periodic,
    /// Both endpoints are grid points; the field is pinned to zero there.
    Dirichlet,
}

impl fmt::Display for Boundary {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Boundary::Periodic => f.write_str("periodic"),
            Boundary::Dirichlet => f.write_str("dirichlet"),
        }
    }
}

impl std::str::FromStr for Boundary {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "periodic" => Ok(Boundary::Periodic),
            "dirichlet" => Ok(Boundary::Dirichlet),
            other => Err(Error::InvalidArgument(format!("unknown boundary `{other}`"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Axis {
    pub points: usize,
    pub lower: f64,
    pub upper: f64,
}

/// Uniform rectangular grid over configuration space, row-major with the
/// last axis varying fastest.
#[derive(Clone, Debug, PartialEq)]
pub struct SpatialGrid {
    axes: Vec<Axis>,
    spacing: Vec<f64>,
    strides: Vec<usize>,
    boundary: Boundary,
    len: usize,
}

impl SpatialGrid {
    pub fn new(axes: Vec<Axis>, boundary: Boundary) -> Result<Self> {
        if axes.is_empty() {
            return Err(Error::InvalidArgument("grid needs at least one axis".into()));
        }
        let mut spacing = Vec::with_capacity(axes.len());
        for (i, ax) in axes.iter().enumerate() {
            let min_points = match boundary {
                Boundary::Periodic => 1,
                Boundary::Dirichlet => 3,
            };
            if ax.points < min_points {
                return Err(Error::InvalidArgument(format!(
                    "axis {i}: {} points is too few for a {boundary} grid",
                    ax.points
                )));
            }
            if !(ax.lower.is_finite() && ax.upper.is_finite() && ax.upper > ax.lower) {
                return Err(Error::InvalidArgument(format!(
                    "axis {i}: bounds [{}, {}] are not an increasing finite interval",
                    ax.lower, ax.upper
                )));
            }
            let h = match boundary {
                Boundary::Periodic => (ax.upper - ax.lower) / ax.points as f64,
                Boundary::Dirichlet => (ax.upper - ax.lower) / (ax.points - 1) as f64,
            };
            spacing.push(h);
        }
        let mut strides = vec![1; axes.len()];
        for i in (0..axes.len() - 1).rev() {
            strides[i] = strides[i + 1] * axes[i + 1].points;
        }
        let len = axes.iter().map(|a| a.points).product();
        Ok(Self {
            axes,
            spacing,
            strides,
            boundary,
            len,
        })
    }

    /// Same bounds and point count on every axis.
    pub fn cube(dim: usize, points: usize, lower: f64, upper: f64, boundary: Boundary) -> Result<Self> {
        let axes = (0..dim)
            .map(|_| Axis {
                points,
                lower,
                upper,
            })
            .collect();
        Self::new(axes, boundary)
    }

    pub fn total_dim(&self) -> usize {
        self.axes.len()
    }

    pub fn axes(&self) -> &[Axis] {
        &self.axes
    }

    pub fn axis(&self, i: usize) -> &Axis {
        &self.axes[i]
    }

    pub fn spacing(&self, axis: usize) -> f64 {
        self.spacing[axis]
    }

    pub fn spacings(&self) -> &[f64] {
        &self.spacing
    }

    pub fn min_spacing(&self) -> f64 {
        self.spacing.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn boundary(&self) -> Boundary {
        self.boundary
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn stride(&self, axis: usize) -> usize {
        self.strides[axis]
    }

    /// Volume element of one grid cell (product of spacings).
    pub fn cell_volume(&self) -> f64 {
        self.spacing.iter().product()
    }

    pub fn coordinate(&self, axis: usize, index: usize) -> f64 {
        self.axes[axis].lower + index as f64 * self.spacing[axis]
    }

    /// Coordinates along one axis.
    pub fn axis_coordinates(&self, axis: usize) -> Vec<f64> {
        (0..self.axes[axis].points)
            .map(|i| self.coordinate(axis, i))
            .collect()
    }

    pub fn multi_index(&self, flat: usize) -> Vec<usize> {
        let mut out = vec![0; self.axes.len()];
        self.multi_index_into(flat, &mut out);
        out
    }

    pub fn multi_index_into(&self, mut flat: usize, out: &mut [usize]) {
        for (i, s) in self.strides.iter().enumerate() {
            out[i] = flat / s;
            flat %= s;
        }
    }

    pub fn flat_index(&self, idx: &[usize]) -> usize {
        idx.iter().zip(&self.strides).map(|(i, s)| i * s).sum()
    }

    /// Configuration point of a flat index.
    pub fn point(&self, flat: usize) -> Vec<f64> {
        let idx = self.multi_index(flat);
        idx.iter()
            .enumerate()
            .map(|(a, &i)| self.coordinate(a, i))
            .collect()
    }

    /// True when the flat index sits on a Dirichlet face of any of `axes`.
    pub fn on_boundary(&self, flat: usize, axes: &[usize]) -> bool {
        if self.boundary == Boundary::Periodic {
            return false;
        }
        axes.iter().any(|&a| {
            let i = (flat / self.strides[a]) % self.axes[a].points;
            i == 0 || i + 1 == self.axes[a].points
        })
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.len() == self.axes.len()
            && x.iter()
                .zip(&self.axes)
                .all(|(&v, ax)| v >= ax.lower && v <= ax.upper)
    }

    pub(crate) fn check_same(&self, other: &SpatialGrid) -> Result<()> {
        if self == other {
            Ok(())
        } else {
            Err(Error::GridMismatch(format!(
                "{} points {:?} vs {} points {:?}",
                self.len,
                self.axes.iter().map(|a| a.points).collect::<Vec<_>>(),
                other.len,
                other.axes.iter().map(|a| a.points).collect::<Vec<_>>()
            )))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn spacing_follows_boundary_convention() {
        let p = SpatialGrid::cube(1, 8, 0.0, 8.0, Boundary::Periodic).unwrap();
        assert_eq!(p.spacing(0), 1.0);
        let d = SpatialGrid::cube(1, 9, 0.0, 8.0, Boundary::Dirichlet).unwrap();
        assert_eq!(d.spacing(0), 1.0);
        assert_eq!(d.coordinate(0, 8), 8.0);
    }

    #[test]
    fn flat_and_multi_index_agree() {
        let g = SpatialGrid::new(
            vec![
                Axis { points: 3, lower: 0.0, upper: 1.0 },
                Axis { points: 4, lower: 0.0, upper: 1.0 },
                Axis { points: 5, lower: 0.0, upper: 1.0 },
            ],
            Boundary::Periodic,
        )
        .unwrap();
        assert_eq!(g.len(), 60);
        for flat in 0..g.len() {
            assert_eq!(g.flat_index(&g.multi_index(flat)), flat);
        }
        assert_eq!(g.multi_index(1), vec![0, 0, 1]);
    }

    #[test]
    fn rejects_degenerate_axes() {
        assert!(SpatialGrid::cube(1, 2, 0.0, 1.0, Boundary::Dirichlet).is_err());
        assert!(SpatialGrid::cube(1, 8, 1.0, 1.0, Boundary::Periodic).is_err());
        assert!(SpatialGrid::new(vec![], Boundary::Periodic).is_err());
    }

    #[test]
    fn dirichlet_faces() {
        let g = SpatialGrid::cube(2, 4, 0.0, 1.0, Boundary::Dirichlet).unwrap();
        assert!(g.on_boundary(g.flat_index(&[0, 2]), &[0, 1]));
        assert!(!g.on_boundary(g.flat_index(&[0, 2]), &[1]));
        assert!(!g.on_boundary(g.flat_index(&[1, 2]), &[0, 1]));
    }
}
