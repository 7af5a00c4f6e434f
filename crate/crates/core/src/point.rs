//! Points on flat tori and the wrap-aware distance used by every built-in system.
//!
//! A point is a fixed-arity tuple of reals normalized into `[0, 1)`. The circle
//! is the one-dimensional torus with the arc metric `min(|x - y|, 1 - |x - y|)`;
//! the two-torus uses the Euclidean norm of the per-coordinate wrapped offsets.

use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::metric::Metric;

/// Largest supported point arity.
pub const MAX_DIM: usize = 2;

/// Reduce a real into `[0, 1)`.
#[inline]
pub fn wrap_unit(x: f64) -> f64 {
    let r = x.rem_euclid(1.0);
    // rem_euclid rounds tiny negatives up to exactly 1.0
    if r >= 1.0 {
        0.0
    } else {
        r
    }
}

#[inline]
fn wrapped_offset(a: f64, b: f64) -> f64 {
    let d = (a - b).abs();
    if d > 0.5 {
        1.0 - d
    } else {
        d
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Point {
    coords: [f64; MAX_DIM],
    dim: u8,
}

impl Point {
    pub fn circle(x: f64) -> Self {
        Point {
            coords: [wrap_unit(x), 0.0],
            dim: 1,
        }
    }

    pub fn torus(x: f64, y: f64) -> Self {
        Point {
            coords: [wrap_unit(x), wrap_unit(y)],
            dim: 2,
        }
    }

    /// Builds a point from raw coordinates, wrapping each into `[0, 1)`.
    pub fn from_coords(coords: &[f64]) -> Option<Self> {
        match coords {
            [x] if x.is_finite() => Some(Point::circle(*x)),
            [x, y] if x.is_finite() && y.is_finite() => Some(Point::torus(*x, *y)),
            _ => None,
        }
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim as usize
    }

    #[inline]
    pub fn coords(&self) -> &[f64] {
        &self.coords[..self.dim as usize]
    }

    #[inline]
    pub fn x(&self) -> f64 {
        self.coords[0]
    }

    #[inline]
    pub fn y(&self) -> f64 {
        self.coords[1]
    }
}

impl std::fmt::Display for Point {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str("(")?;
        for (k, c) in self.coords().iter().enumerate() {
            if k > 0 {
                f.write_str(", ")?;
            }
            write!(f, "{c}")?;
        }
        f.write_str(")")
    }
}

impl Serialize for Point {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        self.coords().serialize(s)
    }
}

impl<'de> Deserialize<'de> for Point {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let raw = Vec::<f64>::deserialize(d)?;
        let p = Point::from_coords(&raw)
            .ok_or_else(|| D::Error::custom(format!("point must have 1 or 2 finite coordinates, got {raw:?}")))?;
        if p.coords() != raw.as_slice() {
            return Err(D::Error::custom(format!("point coordinates {raw:?} are not normalized into [0, 1)")));
        }
        Ok(p)
    }
}

/// Flat torus distance. Panics if the arities differ.
#[inline]
pub fn torus_distance(a: &Point, b: &Point) -> f64 {
    assert_eq!(a.dim, b.dim, "points of different arity");
    match a.dim {
        1 => wrapped_offset(a.coords[0], b.coords[0]),
        _ => wrapped_offset(a.coords[0], b.coords[0]).hypot(wrapped_offset(a.coords[1], b.coords[1])),
    }
}

/// Proximity used to identify analytically computed points.
pub const POINT_MERGE_TOLERANCE: f64 = 1e-12;

/// An indexed set of torus points, viewed as a finite metric space.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct PointCloud {
    pub points: Vec<Point>,
}

impl PointCloud {
    pub fn new(points: Vec<Point>) -> Self {
        PointCloud { points }
    }

    pub fn point(&self, i: usize) -> &Point {
        &self.points[i]
    }

    /// Index of the nearest point to `p` and its distance; ties go to the lowest index.
    pub fn nearest(&self, p: &Point) -> Option<(usize, f64)> {
        let mut best: Option<(usize, f64)> = None;
        for (i, c) in self.points.iter().enumerate() {
            let d = torus_distance(p, c);
            if best.is_none_or(|(_, bd)| d < bd) {
                best = Some((i, d));
            }
        }
        best
    }
}

impl Metric for PointCloud {
    fn len(&self) -> usize {
        self.points.len()
    }

    fn dist(&self, i: usize, j: usize) -> f64 {
        torus_distance(&self.points[i], &self.points[j])
    }
}
