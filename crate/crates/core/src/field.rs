//! Pointwise complex-valued functions on R^n.
//!
//! Operators in this crate evaluate their argument at arbitrary real
//! points (dilations read far outside any fixed grid), so functions are
//! carried as callables rather than sample arrays. A tensor-product
//! variant is kept explicit: separable kernels act on it one axis at a
//! time, which is both exact and fast.

use crate::gridfn::GridFunction;
use num_complex::Complex64;
use std::sync::Arc;

pub type Point1 = Arc<dyn Fn(f64) -> Complex64 + Send + Sync>;
pub type PointN = Arc<dyn Fn(&[f64]) -> Complex64 + Send + Sync>;

#[derive(Clone)]
pub enum FieldFn {
    General { dim: usize, eval: PointN },
    Tensor(Vec<Point1>),
}

impl FieldFn {
    pub fn general<F>(dim: usize, f: F) -> Self
    where
        F: Fn(&[f64]) -> Complex64 + Send + Sync + 'static,
    {
        FieldFn::General {
            dim,
            eval: Arc::new(f),
        }
    }

    pub fn scalar<F>(f: F) -> Self
    where
        F: Fn(f64) -> Complex64 + Send + Sync + 'static,
    {
        FieldFn::Tensor(vec![Arc::new(f)])
    }

    /// Real-valued 1-d convenience constructor.
    pub fn scalar_real<F>(f: F) -> Self
    where
        F: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        FieldFn::scalar(move |x| Complex64::new(f(x), 0.0))
    }

    pub fn tensor(factors: Vec<Point1>) -> Self {
        FieldFn::Tensor(factors)
    }

    /// Tensor power of a single 1-d factor.
    pub fn tensor_power(factor: Point1, n: usize) -> Self {
        FieldFn::Tensor((0..n).map(|_| factor.clone()).collect())
    }

    pub fn zero(dim: usize) -> Self {
        FieldFn::general(dim, |_| Complex64::new(0.0, 0.0))
    }

    pub fn dim(&self) -> usize {
        match self {
            FieldFn::General { dim, .. } => *dim,
            FieldFn::Tensor(fs) => fs.len(),
        }
    }

    pub fn eval(&self, x: &[f64]) -> Complex64 {
        match self {
            FieldFn::General { eval, .. } => eval(x),
            FieldFn::Tensor(fs) => {
                debug_assert_eq!(fs.len(), x.len());
                let mut acc = Complex64::new(1.0, 0.0);
                for (f, &xi) in fs.iter().zip(x) {
                    acc *= f(xi);
                }
                acc
            }
        }
    }

    pub fn factors(&self) -> Option<&[Point1]> {
        match self {
            FieldFn::Tensor(fs) => Some(fs),
            FieldFn::General { .. } => None,
        }
    }

    /// Pointwise linear combination a*f + b*g.
    pub fn combine(a: Complex64, f: &FieldFn, b: Complex64, g: &FieldFn) -> Self {
        assert_eq!(f.dim(), g.dim());
        let f = f.clone();
        let g = g.clone();
        FieldFn::general(f.dim(), move |x| a * f.eval(x) + b * g.eval(x))
    }

    /// Multilinear interpolant of grid data with zero extension outside
    /// the grid box. Fallback for data-defined inputs; closed-form
    /// callables should be preferred wherever available.
    pub fn interpolant(g: &GridFunction) -> Self {
        let g = g.clone();
        let dim = g.spec().dim();
        FieldFn::general(dim, move |x| g.interpolate(x))
    }
}
