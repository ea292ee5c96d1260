//! Synthetic regression and point-in-shape classification tasks.

use std::f64::consts::PI;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{Dataset, Task, DEFAULT_TRAIN_FRACTION};
use crate::{Error, Matrix, Result};

/// `(cos(2πx) + 1) / 2`: one period of the cosine squeezed into the sigmoid range.
pub fn cosine_target(x: f64) -> f64 {
    ((2.0 * PI * x).cos() + 1.0) / 2.0
}

/// `n` points with `x` uniform in `[0, 1)` and target [`cosine_target`]`(x)`.
pub fn gen_cosine(n: usize, seed: u64) -> Result<Dataset> {
    if n < 2 {
        return Err(Error::InvalidArgument(format!("cosine dataset needs n >= 2, got {n}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let xs: Vec<f64> = (0..n).map(|_| rng.random::<f64>()).collect();
    let ys: Vec<f64> = xs.iter().map(|&x| cosine_target(x)).collect();
    Dataset::with_leading_train(
        "cosine",
        Matrix::new(n, 1, xs)?,
        Matrix::new(n, 1, ys)?,
        Task::Regression,
        DEFAULT_TRAIN_FRACTION,
        seed,
    )
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ShapeKind {
    Diamond,
    RandomPolygon,
}

impl ShapeKind {
    pub fn name(self) -> &'static str {
        match self {
            ShapeKind::Diamond => "diamond",
            ShapeKind::RandomPolygon => "random-shape",
        }
    }
}

impl FromStr for ShapeKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "diamond" => Ok(ShapeKind::Diamond),
            "random-shape" | "random_shape" | "random_polygon" | "random-polygon" => {
                Ok(ShapeKind::RandomPolygon)
            }
            other => Err(Error::InvalidArgument(format!("unknown shape {other:?}"))),
        }
    }
}

/// Target layout for the binary inside/outside label.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ShapeEncoding {
    /// `[outside, inside]` one-hot.
    #[default]
    TwoClass,
    /// Classes 0 (outside) and 1 (inside) one-hot in a 10-slot vector.
    TenSlot,
}

impl ShapeEncoding {
    pub fn width(self) -> usize {
        match self {
            ShapeEncoding::TwoClass => 2,
            ShapeEncoding::TenSlot => 10,
        }
    }
}

/// A region of the unit square.
#[derive(Debug, Clone, PartialEq)]
pub enum Shape {
    /// `|x - 0.5| + |y - 0.5| <= 0.25`.
    Diamond,
    /// Closed polygon, vertices in order.
    Polygon(Vec<[f64; 2]>),
}

impl Shape {
    /// Seeded star-convex polygon around the square's center.
    pub fn random_polygon(seed: u64) -> Shape {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(1);
        let vertices = rng.random_range(7..=12);
        let step = 2.0 * PI / vertices as f64;
        let pts = (0..vertices)
            .map(|k| {
                let angle = step * (k as f64 + rng.random_range(-0.3..0.3));
                let radius = rng.random_range(0.15..0.42);
                [0.5 + radius * angle.cos(), 0.5 + radius * angle.sin()]
            })
            .collect();
        Shape::Polygon(pts)
    }

    pub fn contains(&self, x: f64, y: f64) -> bool {
        match self {
            Shape::Diamond => (x - 0.5).abs() + (y - 0.5).abs() <= 0.25,
            Shape::Polygon(pts) => {
                // even-odd ray cast towards +x
                let mut inside = false;
                let n = pts.len();
                for a in 0..n {
                    let [xa, ya] = pts[a];
                    let [xb, yb] = pts[(a + n - 1) % n];
                    if (ya > y) != (yb > y) && x < (xb - xa) * (y - ya) / (yb - ya) + xa {
                        inside = !inside;
                    }
                }
                inside
            }
        }
    }
}

/// `n` points uniform in the unit square labelled by membership in the shape.
pub fn gen_shape(kind: ShapeKind, n: usize, seed: u64, encoding: ShapeEncoding) -> Result<Dataset> {
    if n < 2 {
        return Err(Error::InvalidArgument(format!("shape dataset needs n >= 2, got {n}")));
    }
    let shape = match kind {
        ShapeKind::Diamond => Shape::Diamond,
        ShapeKind::RandomPolygon => Shape::random_polygon(seed),
    };
    let width = encoding.width();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut xs = Vec::with_capacity(2 * n);
    let mut ys = vec![0.0; width * n];
    for r in 0..n {
        let (x, y) = (rng.random::<f64>(), rng.random::<f64>());
        xs.extend([x, y]);
        let class = usize::from(shape.contains(x, y));
        ys[r * width + class] = 1.0;
    }
    Dataset::with_leading_train(
        kind.name(),
        Matrix::new(n, 2, xs)?,
        Matrix::new(n, width, ys)?,
        Task::Classification,
        DEFAULT_TRAIN_FRACTION,
        seed,
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cosine_reference_points() {
        assert_eq!(cosine_target(0.0), 1.0);
        assert!((cosine_target(0.25) - 0.5).abs() < 1e-15);
        assert_eq!(cosine_target(0.5), 0.0);
    }

    #[test]
    fn cosine_targets_invert_back_to_cos() {
        let ds = gen_cosine(500, 4).unwrap();
        for r in 0..ds.len() {
            let x = ds.inputs().row(r)[0];
            let t = ds.targets().row(r)[0];
            assert!((0.0..=1.0).contains(&t));
            assert!((2.0 * t - 1.0 - (2.0 * PI * x).cos()).abs() < 1e-12);
        }
        assert!(gen_cosine(1, 0).is_err());
        assert_eq!(gen_cosine(500, 4).unwrap().id(), ds.id());
    }

    #[test]
    fn diamond_membership() {
        let d = Shape::Diamond;
        assert!(d.contains(0.5, 0.5));
        assert!(!d.contains(0.0, 0.0));
        assert!(d.contains(0.5, 0.75));
        assert!(!d.contains(0.5, 0.7500001));
    }

    #[test]
    fn polygon_contains_center_and_not_corners() {
        for seed in 0..20 {
            let p = Shape::random_polygon(seed);
            assert!(p.contains(0.5, 0.5), "seed {seed}");
            for (x, y) in [(0.0, 0.0), (1.0, 0.0), (0.0, 1.0), (0.99, 0.99)] {
                assert!(!p.contains(x, y), "seed {seed}");
            }
        }
        let square = Shape::Polygon(vec![[0.25, 0.25], [0.75, 0.25], [0.75, 0.75], [0.25, 0.75]]);
        assert!(square.contains(0.3, 0.7));
        assert!(!square.contains(0.8, 0.5));
    }

    #[test]
    fn labels_are_pure_functions_of_coordinates() {
        for kind in [ShapeKind::Diamond, ShapeKind::RandomPolygon] {
            let ds = gen_shape(kind, 300, 11, ShapeEncoding::TwoClass).unwrap();
            let shape = match kind {
                ShapeKind::Diamond => Shape::Diamond,
                ShapeKind::RandomPolygon => Shape::random_polygon(11),
            };
            for r in 0..ds.len() {
                let p = ds.inputs().row(r);
                let inside = ds.targets().row(r)[1] == 1.0;
                assert_eq!(inside, shape.contains(p[0], p[1]));
            }
        }
    }

    #[test]
    fn ten_slot_encoding() {
        let ds = gen_shape(ShapeKind::Diamond, 50, 2, ShapeEncoding::TenSlot).unwrap();
        assert_eq!(ds.output_dim(), 10);
        for r in 0..ds.len() {
            let row = ds.targets().row(r);
            assert!(row[2..].iter().all(|&v| v == 0.0));
            assert_eq!(row[0] + row[1], 1.0);
        }
        assert!("hexagon".parse::<ShapeKind>().is_err());
    }
}
