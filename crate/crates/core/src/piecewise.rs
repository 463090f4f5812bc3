//! Continuous piecewise polynomials with breakpoints at the mass positions.
//!
//! Segment `i` covers `[breakpoints[i], breakpoints[i + 1]]` and is stored as
//! a polynomial in the global coordinate `x`. Derivatives at breakpoints are
//! always taken one-sidedly from the adjacent segment, so jumps and averages
//! are exact on the rational backend.

use crate::poly::Poly;
use crate::scalar::Scalar;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Side {
    Left,
    Right,
}

#[derive(Clone, Debug, PartialEq)]
pub struct PiecewisePoly<T> {
    breakpoints: Vec<T>,
    segments: Vec<Poly<T>>,
}

impl<T: Scalar> PiecewisePoly<T> {
    /// # Panics
    ///
    /// If there is not exactly one segment per pair of adjacent breakpoints.
    pub fn new(breakpoints: Vec<T>, segments: Vec<Poly<T>>) -> Self {
        assert!(
            breakpoints.len() == segments.len() + 1,
            "expected {} segments for {} breakpoints",
            breakpoints.len().saturating_sub(1),
            breakpoints.len()
        );
        Self {
            breakpoints,
            segments,
        }
    }

    pub fn zero_on(breakpoints: &[T]) -> Self {
        Self::new(
            breakpoints.to_vec(),
            vec![Poly::zero(); breakpoints.len() - 1],
        )
    }

    pub fn breakpoints(&self) -> &[T] {
        &self.breakpoints
    }

    pub fn segments(&self) -> &[Poly<T>] {
        &self.segments
    }

    /// Index of the segment containing `x`, right-continuous at interior
    /// breakpoints and clamped at the ends.
    pub fn locate(&self, x: &T) -> usize {
        let last = self.segments.len() - 1;
        let idx = self.breakpoints[1..].partition_point(|b| b <= x);
        idx.min(last)
    }

    pub fn eval(&self, x: &T) -> T {
        self.segments[self.locate(x)].eval(x)
    }

    /// `order`-th derivative at `x`; away from breakpoints the side is
    /// irrelevant.
    pub fn derivative_at(&self, order: usize, x: &T, side: Side) -> T {
        let mut idx = self.locate(x);
        if side == Side::Left && idx > 0 && self.breakpoints[idx] == *x {
            idx -= 1;
        }
        self.segments[idx].nth_derivative(order).eval(x)
    }

    /// One-sided derivative at breakpoint `k` (`0` and the last index are the
    /// interval ends, where only the inward side exists).
    pub fn one_sided(&self, order: usize, k: usize, side: Side) -> T {
        let last = self.segments.len();
        let seg = match side {
            Side::Left if k > 0 => k - 1,
            Side::Right if k < last => k,
            Side::Left => 0,
            Side::Right => last - 1,
        };
        self.segments[seg]
            .nth_derivative(order)
            .eval(&self.breakpoints[k])
    }

    /// `[f^(order)](x_k) = right limit - left limit` at breakpoint `k`.
    pub fn jump(&self, order: usize, k: usize) -> T {
        self.one_sided(order, k, Side::Right) - self.one_sided(order, k, Side::Left)
    }

    /// `<f^(order)>(x_k)`, the mean of the one-sided limits.
    pub fn average(&self, order: usize, k: usize) -> T {
        (self.one_sided(order, k, Side::Right) + self.one_sided(order, k, Side::Left)).half()
    }

    /// `order`-th derivative at `x = 0`.
    pub fn at_left_end(&self, order: usize) -> T {
        self.one_sided(order, 0, Side::Right)
    }

    /// `order`-th derivative at `x = 1`.
    pub fn at_right_end(&self, order: usize) -> T {
        self.one_sided(order, self.segments.len(), Side::Left)
    }

    pub fn derivative(&self) -> Self {
        Self::new(
            self.breakpoints.clone(),
            self.segments.iter().map(Poly::derivative).collect(),
        )
    }

    pub fn scale(&self, s: &T) -> Self {
        Self::new(
            self.breakpoints.clone(),
            self.segments.iter().map(|p| p.scale(s)).collect(),
        )
    }

    fn zip_with(&self, other: &Self, f: impl Fn(&Poly<T>, &Poly<T>) -> Poly<T>) -> Self {
        assert_eq!(
            self.breakpoints.len(),
            other.breakpoints.len(),
            "breakpoint sets differ"
        );
        Self::new(
            self.breakpoints.clone(),
            self.segments
                .iter()
                .zip(&other.segments)
                .map(|(a, b)| f(a, b))
                .collect(),
        )
    }

    pub fn add(&self, other: &Self) -> Self {
        self.zip_with(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.zip_with(other, |a, b| a - b)
    }

    pub fn mul(&self, other: &Self) -> Self {
        self.zip_with(other, |a, b| a * b)
    }

    /// Adds a single global polynomial to every segment.
    pub fn add_poly(&self, p: &Poly<T>) -> Self {
        Self::new(
            self.breakpoints.clone(),
            self.segments.iter().map(|s| s + p).collect(),
        )
    }

    /// Largest degree over all segments.
    pub fn max_degree(&self) -> Option<usize> {
        self.segments.iter().filter_map(Poly::degree).max()
    }

    /// Largest `|[f]|` over interior breakpoints; zero for continuous data.
    pub fn continuity_defect(&self) -> T {
        (1..self.segments.len())
            .map(|k| self.jump(0, k).abs())
            .fold(T::zero(), |a, b| if b > a { b } else { a })
    }

    /// Converts to another backend.
    pub fn convert<U: Scalar>(&self) -> PiecewisePoly<U> {
        PiecewisePoly::new(
            self.breakpoints
                .iter()
                .map(crate::scalar::convert)
                .collect(),
            self.segments
                .iter()
                .map(|p| Poly::new(p.coeffs().iter().map(crate::scalar::convert).collect()))
                .collect(),
        )
    }
}
