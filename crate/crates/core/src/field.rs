/// A pure function of `(t, point)` with `point = (x_1, .., x_{N-1}, y)`.
pub trait SpaceTimeField: Sync {
    fn value(&self, t: f64, point: &[f64]) -> f64;
}

impl<F: Fn(f64, &[f64]) -> f64 + Sync> SpaceTimeField for F {
    fn value(&self, t: f64, point: &[f64]) -> f64 {
        self(t, point)
    }
}

/// Constant state, e.g. `0` or `1` boundary data.
#[derive(Debug, Clone, Copy)]
pub struct Constant(pub f64);

impl SpaceTimeField for Constant {
    fn value(&self, _t: f64, _point: &[f64]) -> f64 {
        self.0
    }
}
