use crate::geometry::Point;

/// A smooth real field with an analytic gradient.
pub trait ScalarField: Sync {
    fn value(&self, p: Point) -> f64;
    fn gradient(&self, p: Point) -> [f64; 2];
}

impl<F: ScalarField + ?Sized> ScalarField for &F {
    fn value(&self, p: Point) -> f64 {
        (**self).value(p)
    }
    fn gradient(&self, p: Point) -> [f64; 2] {
        (**self).gradient(p)
    }
}

/// The constant function 1.
#[derive(Debug, Clone, Copy, Default)]
pub struct One;

impl ScalarField for One {
    fn value(&self, _: Point) -> f64 {
        1.0
    }
    fn gradient(&self, _: Point) -> [f64; 2] {
        [0.0, 0.0]
    }
}
