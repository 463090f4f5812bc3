#![allow(dead_code)]

use isostring::scalar::{convert, Rational};
use isostring::{Boundary, BoundaryConditions, DiscreteString, Scalar};
use proptest::prelude::*;
use rand::Rng;

pub fn q(n: i64, d: i64) -> Rational {
    Rational::ratio(n, d)
}

pub fn to_f64_string(s: &DiscreteString<Rational>) -> DiscreteString<f64> {
    s.convert().expect("well separated masses")
}

pub fn to_f64_bc(bc: &BoundaryConditions<Rational>) -> BoundaryConditions<f64> {
    bc.convert()
}

/// Distinct grid positions `k/den` and masses `p/r`.
pub fn random_string(rng: &mut impl Rng, n: usize) -> DiscreteString<Rational> {
    let den: i64 = rng.gen_range((n as i64 + 2).max(8)..=64);
    let mut ks = std::collections::BTreeSet::new();
    while ks.len() < n {
        ks.insert(rng.gen_range(1..den));
    }
    let positions = ks.into_iter().map(|k| q(k, den)).collect();
    let masses = (0..n)
        .map(|_| q(rng.gen_range(1..=12), rng.gen_range(1..=6)))
        .collect();
    DiscreteString::new(positions, masses).unwrap()
}

pub fn random_boundary(rng: &mut impl Rng) -> Boundary<Rational> {
    match rng.gen_range(0..4) {
        0 => Boundary::Dirichlet,
        1 => Boundary::neumann(),
        _ => Boundary::Robin(q(rng.gen_range(1..=9), rng.gen_range(1..=4))),
    }
}

/// Any pair except Neumann-Neumann.
pub fn random_bc(rng: &mut impl Rng) -> BoundaryConditions<Rational> {
    loop {
        let bc = BoundaryConditions::new(random_boundary(rng), random_boundary(rng)).unwrap();
        if !bc.is_neumann_neumann() {
            return bc;
        }
    }
}

/// Left end with `h` in `(0, inf]`, Neumann right end.
pub fn random_weyl_bc(rng: &mut impl Rng) -> BoundaryConditions<Rational> {
    let left = if rng.gen_bool(0.3) {
        Boundary::Dirichlet
    } else {
        Boundary::Robin(q(rng.gen_range(1..=9), rng.gen_range(1..=4)))
    };
    BoundaryConditions::new(left, Boundary::neumann()).unwrap()
}

pub fn string_strategy(max_n: usize) -> impl Strategy<Value = DiscreteString<Rational>> {
    (1..=max_n)
        .prop_flat_map(|n| {
            let den = (n as i64 + 2).max(8)..=64i64;
            (Just(n), den)
        })
        .prop_flat_map(|(n, den)| {
            (
                Just(den),
                prop::collection::btree_set(1..den, n),
                prop::collection::vec((1i64..=12, 1i64..=6), n),
            )
        })
        .prop_map(|(den, ks, ms)| {
            DiscreteString::new(
                ks.into_iter().map(|k| q(k, den)).collect(),
                ms.into_iter().map(|(a, b)| q(a, b)).collect(),
            )
            .unwrap()
        })
}

pub fn boundary_strategy() -> impl Strategy<Value = Boundary<Rational>> {
    prop_oneof![
        Just(Boundary::Dirichlet),
        Just(Boundary::neumann()),
        (1i64..=9, 1i64..=4).prop_map(|(a, b)| Boundary::Robin(q(a, b))),
    ]
}

pub fn bc_strategy() -> impl Strategy<Value = BoundaryConditions<Rational>> {
    (boundary_strategy(), boundary_strategy())
        .prop_map(|(l, r)| BoundaryConditions::new(l, r).unwrap())
        .prop_filter("Neumann-Neumann", |bc| !bc.is_neumann_neumann())
}

pub fn weyl_bc_strategy() -> impl Strategy<Value = BoundaryConditions<Rational>> {
    prop_oneof![
        Just(Boundary::Dirichlet),
        (1i64..=9, 1i64..=4).prop_map(|(a, b)| Boundary::Robin(q(a, b))),
    ]
    .prop_map(|l| BoundaryConditions::new(l, Boundary::neumann()).unwrap())
}

pub fn z_strategy() -> impl Strategy<Value = Rational> {
    (1i64..=400, 1i64..=7).prop_map(|(a, b)| q(a, b))
}

// ---------------------------------------------------------------------------
// Independent oracles, written directly from the Green's function.

fn seeds(bc: &BoundaryConditions<Rational>) -> (Rational, Rational, Rational, Rational) {
    // c0 = a + b x, c0_hat = c + d x
    let (a, b) = match &bc.left {
        Boundary::Robin(h) => (q(1, 1), h.clone()),
        Boundary::Dirichlet => (q(0, 1), q(1, 1)),
    };
    let (c, d) = match &bc.right {
        Boundary::Robin(h) => (h.clone() + q(1, 1), -h.clone()),
        Boundary::Dirichlet => (q(1, 1), q(-1, 1)),
    };
    (a, b, c, d)
}

/// `G(x, y)` from its defining properties: `c0(min) c0_hat(max) / W`.
pub fn green(bc: &BoundaryConditions<Rational>, x: &Rational, y: &Rational) -> Rational {
    let (a, b, c, d) = seeds(bc);
    let w = a.clone() * d.clone() - b.clone() * c.clone();
    let (lo, hi) = if x <= y { (x, y) } else { (y, x) };
    (a + b * lo.clone()) * (c + d * hi.clone()) / w
}

/// `d/dx G(x, y)` for `x != y`.
pub fn green_dx(bc: &BoundaryConditions<Rational>, x: &Rational, y: &Rational) -> Rational {
    let (a, b, c, d) = seeds(bc);
    let w = a.clone() * d.clone() - b.clone() * c.clone();
    if x < y {
        b * (c + d * y.clone()) / w
    } else {
        (a + b * y.clone()) * d / w
    }
}

/// `-sum_j |x - x_j| G(x, x_j) m_j`, the rescaled limit `b0`.
pub fn limit_b0_oracle(
    s: &DiscreteString<Rational>,
    bc: &BoundaryConditions<Rational>,
    x: &Rational,
) -> Rational {
    s.positions()
        .iter()
        .zip(s.masses())
        .fold(q(0, 1), |acc, (xj, mj)| {
            acc - (x.clone() - xj.clone()).abs() * green(bc, x, xj) * mj.clone()
        })
}

/// Explicit double-sum form of the rescaled limit flow.
pub fn limit_rhs_oracle(
    s: &DiscreteString<Rational>,
    bc: &BoundaryConditions<Rational>,
) -> (Vec<Rational>, Vec<Rational>) {
    let (x, m) = (s.positions(), s.masses());
    let n = s.len();
    let mut dx = vec![q(0, 1); n];
    let mut dm = vec![q(0, 1); n];
    for i in 0..n {
        for j in 0..n {
            if i == j {
                continue;
            }
            let gap = x[i].clone() - x[j].clone();
            let sgn = if gap > q(0, 1) { q(1, 1) } else { q(-1, 1) };
            let g = green(bc, &x[i], &x[j]);
            dx[i] = dx[i].clone() + gap.abs() * g.clone() * m[j].clone();
            dm[i] = dm[i].clone()
                - m[i].clone() * (sgn * g + gap.abs() * green_dx(bc, &x[i], &x[j])) * m[j].clone();
        }
    }
    (dx, dm)
}

/// Determinant of the tridiagonal stiffness pencil `K - z M`, normalised
/// to `1` at `z = 0`, built from the string's mass-spring picture.
pub fn pencil_determinant_ratio(
    s: &DiscreteString<Rational>,
    bc: &BoundaryConditions<Rational>,
    z: &Rational,
) -> Rational {
    let l = s.lengths();
    let n = s.len();
    let end = |b: &Boundary<Rational>, len: &Rational| match b {
        Boundary::Robin(h) => h.clone() / (q(1, 1) + h.clone() * len.clone()),
        Boundary::Dirichlet => q(1, 1) / len.clone(),
    };
    let det = |z: &Rational| {
        // continuant recurrence
        let (mut prev, mut cur) = (q(1, 1), q(1, 1));
        for j in 0..n {
            let left = if j == 0 {
                end(&bc.left, &l[0])
            } else {
                q(1, 1) / l[j].clone()
            };
            let right = if j + 1 == n {
                end(&bc.right, &l[n])
            } else {
                q(1, 1) / l[j + 1].clone()
            };
            let d = left + right - z.clone() * s.masses()[j].clone();
            let next = if j == 0 {
                d
            } else {
                let o = q(1, 1) / l[j].clone();
                d * cur.clone() - o.clone() * o * prev.clone()
            };
            prev = cur;
            cur = next;
        }
        cur
    };
    det(z) / det(&q(0, 1))
}

pub fn as_f64(v: &Rational) -> f64 {
    convert::<Rational, f64>(v)
}

pub fn f64_vec(v: &[Rational]) -> Vec<f64> {
    v.iter().map(as_f64).collect()
}
