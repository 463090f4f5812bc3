//! The discrete string and its forward spectral problem.
//!
//! A string is a finite set of point masses `m_j` at positions
//! `0 < x_1 < ... < x_N < 1`. The eigenvalue problem is `-v'' = z rho v` with
//! `v'(0) - h v(0) = 0` and `v'(1) + H v(1) = 0`; between masses `v` is linear
//! and at `x_j` its slope jumps by `-z m_j v(x_j)`.
//!
//! Solutions are propagated at the parameter `lambda = -z` (so `phi'' =
//! lambda rho phi`), normalised on the massless end intervals by
//! `c0(x) = h x + 1` (or `x` for a Dirichlet left end) and
//! `c0_hat(x) = H (1 - x) + 1` (or `1 - x` for a Dirichlet right end).

use crate::error::{Error, Result};
use crate::poly::Poly;
use crate::scalar::Scalar;

#[derive(Clone, Debug, PartialEq)]
pub struct DiscreteString<T> {
    positions: Vec<T>,
    masses: Vec<T>,
}

impl<T: Scalar> DiscreteString<T> {
    pub fn new(positions: Vec<T>, masses: Vec<T>) -> Result<Self> {
        if positions.len() != masses.len() {
            return Err(Error::LengthMismatch {
                positions: positions.len(),
                masses: masses.len(),
            });
        }
        let mut previous = T::zero();
        for (index, x) in positions.iter().enumerate() {
            if *x <= previous {
                return Err(Error::OrderingViolation { index });
            }
            previous = x.clone();
        }
        if previous >= T::one() && !positions.is_empty() {
            return Err(Error::OrderingViolation {
                index: positions.len() - 1,
            });
        }
        if let Some(index) = masses.iter().position(|m| *m <= T::zero()) {
            return Err(Error::NonPositiveMass { index });
        }
        Ok(Self { positions, masses })
    }

    pub fn empty() -> Self {
        Self {
            positions: Vec::new(),
            masses: Vec::new(),
        }
    }

    /// Builds a string from the interior lengths `l_0, ..., l_{N-1}`; the last
    /// length is whatever remains of the unit interval.
    pub fn from_lengths(lengths: &[T], masses: Vec<T>) -> Result<Self> {
        let mut x = T::zero();
        let positions = lengths
            .iter()
            .map(|l| {
                x = x.clone() + l.clone();
                x.clone()
            })
            .collect();
        Self::new(positions, masses)
    }

    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    pub fn positions(&self) -> &[T] {
        &self.positions
    }

    pub fn masses(&self) -> &[T] {
        &self.masses
    }

    /// `l_0 = x_1`, `l_j = x_{j+1} - x_j`, `l_N = 1 - x_N`.
    pub fn lengths(&self) -> Vec<T> {
        let bps = self.breakpoints();
        bps.windows(2)
            .map(|w| w[1].clone() - w[0].clone())
            .collect()
    }

    /// `[0, x_1, ..., x_N, 1]`
    pub fn breakpoints(&self) -> Vec<T> {
        let mut bps = Vec::with_capacity(self.len() + 2);
        bps.push(T::zero());
        bps.extend(self.positions.iter().cloned());
        bps.push(T::one());
        bps
    }

    pub fn total_mass(&self) -> T {
        self.masses.iter().cloned().fold(T::zero(), |a, b| a + b)
    }

    /// Converts to another backend and re-validates (rounding can merge
    /// nearly coincident masses).
    pub fn convert<U: Scalar>(&self) -> Result<DiscreteString<U>> {
        DiscreteString::new(
            self.positions.iter().map(crate::scalar::convert).collect(),
            self.masses.iter().map(crate::scalar::convert).collect(),
        )
    }
}

/// One end of the string: Robin with a finite parameter (`0` is Neumann) or
/// Dirichlet (the infinite parameter).
#[derive(Clone, Debug, PartialEq)]
pub enum Boundary<T> {
    Robin(T),
    Dirichlet,
}

impl<T: Scalar> Boundary<T> {
    pub fn robin(h: T) -> Result<Self> {
        if h < T::zero() {
            return Err(Error::NegativeBoundaryParameter);
        }
        Ok(Self::Robin(h))
    }

    pub fn neumann() -> Self {
        Self::Robin(T::zero())
    }

    pub fn is_dirichlet(&self) -> bool {
        matches!(self, Self::Dirichlet)
    }

    pub fn is_neumann(&self) -> bool {
        matches!(self, Self::Robin(h) if h.is_zero())
    }

    /// `1/h`, with `1/inf = 0`; `None` for Neumann.
    pub fn reciprocal(&self) -> Option<T> {
        match self {
            Self::Robin(h) if h.is_zero() => None,
            Self::Robin(h) => Some(T::one() / h.clone()),
            Self::Dirichlet => Some(T::zero()),
        }
    }

    /// `c0`, the zero-parameter solution on the left end interval.
    pub fn left_seed(&self) -> Poly<T> {
        match self {
            Self::Robin(h) => Poly::linear(T::one(), h.clone()),
            Self::Dirichlet => Poly::linear(T::zero(), T::one()),
        }
    }

    /// `c0_hat`, the zero-parameter solution on the right end interval.
    pub fn right_seed(&self) -> Poly<T> {
        match self {
            Self::Robin(h) => Poly::linear(h.clone() + T::one(), -h.clone()),
            Self::Dirichlet => Poly::linear(T::one(), -T::one()),
        }
    }

    pub fn convert<U: Scalar>(&self) -> Boundary<U> {
        match self {
            Self::Robin(h) => Boundary::Robin(crate::scalar::convert(h)),
            Self::Dirichlet => Boundary::Dirichlet,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct BoundaryConditions<T> {
    pub left: Boundary<T>,
    pub right: Boundary<T>,
}

impl<T: Scalar> BoundaryConditions<T> {
    pub fn new(left: Boundary<T>, right: Boundary<T>) -> Result<Self> {
        for b in [&left, &right] {
            if let Boundary::Robin(h) = b {
                if *h < T::zero() {
                    return Err(Error::NegativeBoundaryParameter);
                }
            }
        }
        Ok(Self { left, right })
    }

    pub fn dirichlet_dirichlet() -> Self {
        Self {
            left: Boundary::Dirichlet,
            right: Boundary::Dirichlet,
        }
    }

    pub fn dirichlet_neumann() -> Self {
        Self {
            left: Boundary::Dirichlet,
            right: Boundary::neumann(),
        }
    }

    /// Robin parameter `h` on the left, Neumann on the right.
    pub fn robin_neumann(h: T) -> Result<Self> {
        Self::new(Boundary::robin(h)?, Boundary::neumann())
    }

    /// Zero is an eigenvalue and `W(c0_hat, c0) = 0`.
    pub fn is_neumann_neumann(&self) -> bool {
        self.left.is_neumann() && self.right.is_neumann()
    }

    /// `W(c0_hat, c0) = c0_hat c0' - c0_hat' c0`, the constant term of the
    /// characteristic polynomial (`h + H + hH` for finite parameters).
    pub fn wronskian(&self) -> T {
        let c0 = self.left.left_seed();
        let c0_hat = self.right.right_seed();
        let zero = T::zero();
        c0_hat.eval(&zero) * c0.derivative().eval(&zero)
            - c0_hat.derivative().eval(&zero) * c0.eval(&zero)
    }

    pub fn convert<U: Scalar>(&self) -> BoundaryConditions<U> {
        BoundaryConditions {
            left: self.left.convert(),
            right: self.right.convert(),
        }
    }
}

/// The left-normalised solution: on `I_j = (x_j, x_{j+1})` it equals
/// `p_j (x - x_j) + q_j` (with `x_0 = 0`); on the last interval it is
/// `A1 (x - 1) + B1`.
#[derive(Clone, Debug, PartialEq)]
pub struct PropagatedSolution<T> {
    pub slopes: Vec<T>,
    pub values: Vec<T>,
    pub a1: T,
    pub b1: T,
}

/// Propagates from `x = 0` at parameter `lambda` with slope jumps
/// `p_{j+1} - p_j = lambda m_{j+1} q_{j+1}`.
pub fn propagate<T: Scalar>(
    string: &DiscreteString<T>,
    left: &Boundary<T>,
    lambda: &T,
) -> PropagatedSolution<T> {
    let lengths = string.lengths();
    let n = string.len();
    let (p0, q0) = match left {
        Boundary::Robin(h) => (h.clone(), T::one()),
        Boundary::Dirichlet => (T::one(), T::zero()),
    };
    let mut slopes = Vec::with_capacity(n + 1);
    let mut values = Vec::with_capacity(n + 1);
    slopes.push(p0);
    values.push(q0);
    for j in 0..n {
        let q_next = slopes[j].clone() * lengths[j].clone() + values[j].clone();
        let p_next =
            slopes[j].clone() + lambda.clone() * string.masses()[j].clone() * q_next.clone();
        slopes.push(p_next);
        values.push(q_next);
    }
    let a1 = slopes[n].clone();
    let b1 = slopes[n].clone() * lengths[n].clone() + values[n].clone();
    PropagatedSolution {
        slopes,
        values,
        a1,
        b1,
    }
}

/// The right-normalised solution `psi`: on `I_j` it equals
/// `slopes[j] (x - x_j) + values[j]`, and `psi = c0_hat` on `I_N`.
#[derive(Clone, Debug, PartialEq)]
pub struct RightSolution<T> {
    pub slopes: Vec<T>,
    pub values: Vec<T>,
}

/// Propagates from `x = 1` towards `x = 0` at parameter `lambda`.
pub fn propagate_right<T: Scalar>(
    string: &DiscreteString<T>,
    right: &Boundary<T>,
    lambda: &T,
) -> RightSolution<T> {
    let lengths = string.lengths();
    let n = string.len();
    let (slope_n, end_value) = match right {
        Boundary::Robin(h) => (-h.clone(), T::one()),
        Boundary::Dirichlet => (-T::one(), T::zero()),
    };
    let mut slopes = vec![T::zero(); n + 1];
    let mut values = vec![T::zero(); n + 1];
    values[n] = end_value - slope_n.clone() * lengths[n].clone();
    slopes[n] = slope_n;
    for j in (1..=n).rev() {
        // psi(x_j) = values[j]; the slope to the left of x_j
        let s =
            slopes[j].clone() - lambda.clone() * string.masses()[j - 1].clone() * values[j].clone();
        values[j - 1] = values[j].clone() - s.clone() * lengths[j - 1].clone();
        slopes[j - 1] = s;
    }
    RightSolution { slopes, values }
}

/// Slopes and values of the left-normalised solution as polynomials in
/// `lambda`.
pub fn transfer_polynomials<T: Scalar>(
    string: &DiscreteString<T>,
    left: &Boundary<T>,
) -> (Vec<Poly<T>>, Vec<Poly<T>>) {
    let lengths = string.lengths();
    let (p0, q0) = match left {
        Boundary::Robin(h) => (h.clone(), T::one()),
        Boundary::Dirichlet => (T::one(), T::zero()),
    };
    let mut slopes = vec![Poly::constant(p0)];
    let mut values = vec![Poly::constant(q0)];
    for j in 0..string.len() {
        let q_next = &slopes[j].scale(&lengths[j]) + &values[j];
        let p_next = &slopes[j] + &q_next.scale(&string.masses()[j]).shift_up(1);
        slopes.push(p_next);
        values.push(q_next);
    }
    (slopes, values)
}

/// `(A1(lambda), B1(lambda))`.
pub fn terminal_polynomials<T: Scalar>(
    string: &DiscreteString<T>,
    left: &Boundary<T>,
) -> (Poly<T>, Poly<T>) {
    let (slopes, values) = transfer_polynomials(string, left);
    let n = string.len();
    let l_n = string.lengths()[n].clone();
    let a1 = slopes[n].clone();
    let b1 = &a1.scale(&l_n) + &values[n];
    (a1, b1)
}

/// `D(-lambda) = W(c0_hat, phi)` evaluated at `x = 1` from a left
/// propagation.
pub fn characteristic_value<T: Scalar>(
    string: &DiscreteString<T>,
    bc: &BoundaryConditions<T>,
    lambda: &T,
) -> T {
    let sol = propagate(string, &bc.left, lambda);
    let c0_hat = bc.right.right_seed();
    let one = T::one();
    c0_hat.eval(&one) * sol.a1 - c0_hat.derivative().eval(&one) * sol.b1
}

/// `D(-lambda) = W(psi, c0)` evaluated at `x = 0` from a right propagation.
pub fn characteristic_value_right<T: Scalar>(
    string: &DiscreteString<T>,
    bc: &BoundaryConditions<T>,
    lambda: &T,
) -> T {
    let psi = propagate_right(string, &bc.right, lambda);
    let c0 = bc.left.left_seed();
    let zero = T::zero();
    psi.values[0].clone() * c0.derivative().eval(&zero) - psi.slopes[0].clone() * c0.eval(&zero)
}

/// Sums over increasing index tuples `i_1 < ... < i_n` of
/// `m_{i_1}...m_{i_n} (x_{i_n} - x_{i_{n-1}})...(x_{i_2} - x_{i_1})
/// kernel(i_1, i_n)`, for `n = 1..=N`.
pub(crate) fn tuple_sums<T: Scalar>(
    string: &DiscreteString<T>,
    kernel: impl Fn(usize, usize) -> T,
) -> Vec<T> {
    let n = string.len();
    let x = string.positions();
    let m = string.masses();
    let mut sums = vec![T::zero(); n];
    for start in 0..n {
        // chain[j]: weight of tuples beginning at `start` and ending at `j`
        let mut chain = vec![T::zero(); n];
        chain[start] = m[start].clone();
        sums[0] = sums[0].clone() + kernel(start, start) * m[start].clone();
        for len in 2..=(n - start) {
            let mut next = vec![T::zero(); n];
            for j in (start + len - 1)..n {
                let acc = (start..j).fold(T::zero(), |acc, i| {
                    acc + chain[i].clone() * (x[j].clone() - x[i].clone())
                });
                next[j] = acc * m[j].clone();
            }
            chain = next;
            for (j, c) in chain.iter().enumerate().skip(start + len - 1) {
                sums[len - 1] = sums[len - 1].clone() + kernel(start, j) * c.clone();
            }
        }
    }
    sums
}

/// The characteristic polynomial `D(-lambda)` in `lambda`, from the additive
/// representation over increasing mass tuples with `c0(x_{i_1})
/// c0_hat(x_{i_n})` end factors.
pub fn char_poly<T: Scalar>(string: &DiscreteString<T>, bc: &BoundaryConditions<T>) -> Poly<T> {
    let c0 = bc.left.left_seed();
    let c0_hat = bc.right.right_seed();
    let x = string.positions();
    let sums = tuple_sums(string, |a, b| c0.eval(&x[a]) * c0_hat.eval(&x[b]));
    let mut coeffs = Vec::with_capacity(sums.len() + 1);
    coeffs.push(bc.wronskian());
    coeffs.extend(sums);
    Poly::new(coeffs)
}

/// `D(-lambda)` from the propagated terminal data; agrees with [`char_poly`].
pub fn char_poly_transfer<T: Scalar>(
    string: &DiscreteString<T>,
    bc: &BoundaryConditions<T>,
) -> Poly<T> {
    let (a1, b1) = terminal_polynomials(string, &bc.left);
    let c0_hat = bc.right.right_seed();
    let one = T::one();
    &a1.scale(&c0_hat.eval(&one)) - &b1.scale(&c0_hat.derivative().eval(&one))
}

/// The mass-weighted stiffness pencil `K - z M` of the string, a symmetric
/// tridiagonal matrix whose inertia counts eigenvalues below `z`.
struct Pencil<T> {
    diag: Vec<T>,
    off: Vec<T>,
    masses: Vec<T>,
}

impl<T: Scalar> Pencil<T> {
    fn new(string: &DiscreteString<T>, bc: &BoundaryConditions<T>) -> Self {
        let l = string.lengths();
        let n = string.len();
        let end_stiffness = |b: &Boundary<T>, len: &T| match b {
            Boundary::Robin(h) => h.clone() / (T::one() + h.clone() * len.clone()),
            Boundary::Dirichlet => T::one() / len.clone(),
        };
        let diag = (0..n)
            .map(|j| {
                let left = if j == 0 {
                    end_stiffness(&bc.left, &l[0])
                } else {
                    T::one() / l[j].clone()
                };
                let right = if j + 1 == n {
                    end_stiffness(&bc.right, &l[n])
                } else {
                    T::one() / l[j + 1].clone()
                };
                left + right
            })
            .collect();
        let off = (1..n).map(|j| -(T::one() / l[j].clone())).collect();
        Self {
            diag,
            off,
            masses: string.masses().to_vec(),
        }
    }

    /// Number of eigenvalues strictly below `z`; `None` on an exactly zero
    /// pivot with exact arithmetic.
    fn count_below(&self, z: &T) -> Option<usize> {
        let mut count = 0;
        let mut pivot = T::zero();
        for j in 0..self.diag.len() {
            let mut d = self.diag[j].clone() - z.clone() * self.masses[j].clone();
            if j > 0 {
                let o = self.off[j - 1].clone();
                d = d - o.clone() * o / pivot;
            }
            if d.is_zero() {
                if T::EXACT {
                    return None;
                }
                // z sits on an eigenvalue to working precision
                d = -T::from_f64(f64::MIN_POSITIVE).expect("finite");
            }
            if d < T::zero() {
                count += 1;
            }
            pivot = d;
        }
        Some(count)
    }

    /// Gershgorin bound on the spectrum of `M^{-1} K`.
    fn upper_bound(&self) -> T {
        let n = self.diag.len();
        let bound = (0..n)
            .map(|j| {
                let mut row = self.diag[j].abs();
                if j > 0 {
                    row = row + self.off[j - 1].abs();
                }
                if j + 1 < n {
                    row = row + self.off[j].abs();
                }
                row / self.masses[j].clone()
            })
            .fold(T::one(), |a, b| if b > a { b } else { a });
        // a power of two keeps bisection points dyadic
        let mut top = T::one();
        while top <= bound {
            top = top * T::from_i64(2);
        }
        top
    }

    fn split(&self, lo: &T, hi: &T) -> Option<(T, usize)> {
        const FRACTIONS: [(i64, i64); 5] = [(1, 2), (3, 7), (4, 7), (5, 13), (8, 13)];
        FRACTIONS.iter().find_map(|&(a, b)| {
            let mid = lo.clone() + (hi.clone() - lo.clone()) * T::ratio(a, b);
            self.count_below(&mid).map(|c| (mid, c))
        })
    }
}

/// The eigenvalues `0 <= z_1 < ... < z_N`, by sign-count bisection on the
/// stiffness pencil. Exact rational roots are detected and returned exactly
/// on the rational backend; otherwise roots are resolved to working
/// precision.
pub fn eigenvalues<T: Scalar>(
    string: &DiscreteString<T>,
    bc: &BoundaryConditions<T>,
) -> Result<Vec<T>> {
    let n = string.len();
    if n == 0 {
        return Ok(Vec::new());
    }
    let pencil = Pencil::new(string, bc);
    let char_poly = char_poly(string, bc);
    // every sign count taken so far, to seed later brackets
    let mut samples: Vec<(T, usize)> = vec![(-T::one(), 0), (pencil.upper_bound(), n)];
    let mut roots = Vec::with_capacity(n);
    for k in 0..n {
        let (mut lo, mut count_lo) = samples
            .iter()
            .filter(|(_, c)| *c <= k)
            .max_by(|a, b| a.0.partial_cmp(&b.0).expect("ordered"))
            .cloned()
            .expect("lower sentinel");
        let (mut hi, mut count_hi) = samples
            .iter()
            .filter(|(_, c)| *c > k)
            .min_by(|a, b| a.0.partial_cmp(&b.0).expect("ordered"))
            .cloned()
            .expect("upper sentinel");
        let mut iterations = 0usize;
        let root = loop {
            let isolated = count_lo == k && count_hi == k + 1;
            if isolated && iterations.is_multiple_of(4) {
                if let Some(s) = T::simplest_between(&lo, &hi) {
                    if char_poly.eval(&-s.clone()).is_zero() {
                        break s;
                    }
                }
            }
            if T::EXACT && isolated && narrow(&lo, &hi) {
                if let Some(r) = newton_polish(&char_poly, &lo, &hi) {
                    break r;
                }
            }
            if T::bracket_converged(&lo, &hi) {
                if count_hi - count_lo > 1 {
                    return Err(Error::DegenerateSpectrum { index: k });
                }
                break (lo.clone() + hi.clone()).half().settle();
            }
            let (mid, count) = pencil
                .split(&lo, &hi)
                .ok_or(Error::DegenerateSpectrum { index: k })?;
            samples.push((mid.clone(), count));
            if count <= k {
                lo = mid;
                count_lo = count;
            } else {
                hi = mid;
                count_hi = count;
            }
            iterations += 1;
            if iterations > 20_000 {
                return Err(Error::DegenerateSpectrum { index: k });
            }
        };
        roots.push(root);
    }
    Ok(roots)
}

/// Relative bracket width below `2^-48`.
fn narrow<T: Scalar>(lo: &T, hi: &T) -> bool {
    let scale = if hi.abs() > lo.abs() {
        hi.abs()
    } else {
        lo.abs()
    };
    (hi.clone() - lo.clone()) * T::from_i64(1 << 48) <= scale
}

/// Refines the single root of `D(z)` inside an isolating bracket by Newton
/// steps rounded to working precision, and certifies it by a sign change
/// across a tiny interval. `None` sends the caller back to bisection.
fn newton_polish<T: Scalar>(char_poly: &Poly<T>, lo: &T, hi: &T) -> Option<T> {
    let f = char_poly.reflect();
    let df = f.derivative();
    let mut s = (lo.clone() + hi.clone()).half().settle();
    let scale = s.abs();
    let tiny = T::from_rational(&crate::scalar::pow2(
        -(crate::scalar::HIGH_PRECISION_BITS as i64) - 4,
    ));
    for _ in 0..16 {
        let slope = df.eval(&s);
        if slope.is_zero() {
            return None;
        }
        let step = f.eval(&s) / slope;
        s = (s - step.clone()).settle();
        if s < *lo || s > *hi {
            return None;
        }
        if step.abs() <= scale.clone() * tiny.clone() {
            break;
        }
    }
    let delta = scale * tiny * T::from_i64(16);
    let (a, b) = (s.clone() - delta.clone(), s.clone() + delta);
    if let Some(r) = T::simplest_between(&a, &b) {
        if f.eval(&r).is_zero() {
            return Some(r);
        }
    }
    let (fa, fb) = (f.eval(&a), f.eval(&b));
    (fa.signum_i8() * fb.signum_i8() <= 0).then_some(s)
}

/// Green's function of `D_x^2` with the string's boundary conditions:
/// `G(x, y) = c0(min) c0_hat(max) / W(c0, c0_hat)`, which is nonpositive.
pub fn greens_function<T: Scalar>(bc: &BoundaryConditions<T>, x: &T, y: &T) -> Result<T> {
    if bc.is_neumann_neumann() {
        return Err(Error::DegenerateBc(
            "Neumann-Neumann has no Green's function; use the translation invariant kernel",
        ));
    }
    let (lo, hi) = if x <= y { (x, y) } else { (y, x) };
    let w = -bc.wronskian();
    Ok(bc.left.left_seed().eval(lo) * bc.right.right_seed().eval(hi) / w)
}

/// `-|x - y| / 2`, the substitute kernel for Neumann-Neumann ends.
pub fn translation_invariant_kernel<T: Scalar>(x: &T, y: &T) -> T {
    -(x.clone() - y.clone()).abs().half()
}
