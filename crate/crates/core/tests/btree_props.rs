use std::collections::BTreeSet;

use buildings_core::btree::{
    ball_size, boundary_transitivity_check, build_tree_ball, cone_check, cone_vs_ultrametric,
    is_integral_unimodular, iwasawa_check, iwasawa_decompose, mat_eq, mat_mul, random_sl2,
    ray_to_end, BoundaryPoint, LatticeVertex,
};
use buildings_core::localfield::{Field, FieldSpec, Valuation};
use proptest::prelude::*;
use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn field(s: &str) -> Field {
    Field::new(s.parse::<FieldSpec>().unwrap()).unwrap()
}

/// Subgroup of `(Z/p^r)^2` generated by `gens`, as a membership bitmap.
fn span(p: u64, r: u32, gens: &[(u64, u64)]) -> Vec<bool> {
    let m = p.pow(r);
    let mut member = vec![false; (m * m) as usize];
    member[0] = true;
    let mut frontier = vec![(0u64, 0u64)];
    while let Some((x, y)) = frontier.pop() {
        for &(gx, gy) in gens {
            let z = ((x + gx) % m, (y + gy) % m);
            let idx = (z.0 * m + z.1) as usize;
            if !member[idx] {
                member[idx] = true;
                frontier.push(z);
            }
        }
    }
    member
}

/// Kernels of all surjections `(Z/p^r)^2 -> Z/p^d`, `d <= r`: exactly the
/// lattices between `p^r L_0` and `L_0` with cyclic quotient.
fn cocyclic_subgroups(p: u64, r: u32) -> BTreeSet<Vec<bool>> {
    let m = p.pow(r);
    let mut out = BTreeSet::new();
    for d in 0..=r {
        let n = p.pow(d);
        for alpha in 0..n {
            for beta in 0..n {
                if d > 0 && alpha % p == 0 && beta % p == 0 {
                    continue;
                }
                let kernel: Vec<bool> = (0..m * m)
                    .map(|i| (alpha * (i / m) + beta * (i % m)) % n == 0)
                    .collect();
                out.insert(kernel);
            }
        }
    }
    out
}

/// The vertex's lattice scaled into `L_0 = Z_p^2` and primitive there,
/// reduced mod `p^r`.
fn vertex_subgroup(p: u64, r: u32, v: &LatticeVertex) -> Vec<bool> {
    let low = v.digits().first().map_or(0, |&(e, _)| e);
    let s = -(0.min(v.level()).min(low));
    let m = p.pow(r) as i128;
    let pw = |e: i64| -> u64 {
        if e >= i64::from(r) {
            0
        } else {
            (p as i128).pow(e as u32).rem_euclid(m) as u64
        }
    };
    let b: u64 = v
        .digits()
        .iter()
        .map(|&(e, d)| u64::from(d) * pw(e + s) % p.pow(r))
        .sum::<u64>()
        % p.pow(r);
    span(p, r, &[(pw(v.level() + s), 0), (b, pw(s))])
}

#[test]
fn ball_matches_lattice_enumeration() {
    for (spec, p) in [("Qp:p=2,prec=6", 2u64), ("Qp:p=3,prec=6", 3)] {
        let f = field(spec);
        for r in 0..=4 {
            let ball = build_tree_ball(&f, r).unwrap();
            let oracle = cocyclic_subgroups(p, r);
            assert_eq!(ball.len(), oracle.len(), "{spec} r={r}");
            assert_eq!(ball.len() as u64, ball_size(p, r));
            let mapped: BTreeSet<Vec<bool>> = ball
                .vertices
                .iter()
                .map(|v| vertex_subgroup(p, r, v))
                .collect();
            assert_eq!(mapped, oracle, "{spec} r={r}");
            // edges join vertices one level apart
            for &(i, j) in &ball.edges {
                let (a, b) = (&ball.vertices[i], &ball.vertices[j]);
                assert_eq!(a.distance(b), 1);
                assert_eq!(a.depth().abs_diff(b.depth()), 1);
            }
            assert!(ball.is_tree());
        }
    }
    for (spec, q) in [
        ("Laurent:q=2,prec=5", 2u64),
        ("Laurent:q=3,prec=5", 3),
        ("Laurent:q=4,prec=4", 4),
    ] {
        for r in 0..=4 {
            assert_eq!(
                build_tree_ball(&field(spec), r).unwrap().len() as u64,
                ball_size(q, r)
            );
        }
    }
}

/// An end of `Q_p` given by a primitive integer vector mod `p^r`.
fn end_vector(f: &Field, p: u64, r: u32, x: &BoundaryPoint) -> (u64, u64) {
    let m = p.pow(r);
    let int = |e: &buildings_core::localfield::FieldElement| -> u64 {
        if f.is_zero(e) {
            return 0;
        }
        f.digits(e, 0, i64::from(r))
            .unwrap()
            .iter()
            .rev()
            .fold(0u64, |acc, &d| (acc * p + u64::from(d)) % m)
    };
    match x {
        BoundaryPoint::Affine(a) => (int(a), 1),
        BoundaryPoint::Polar(a) => (1, int(a)),
    }
}

#[test]
fn rays_match_lattice_chains() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for (spec, p) in [("Qp:p=2,prec=8", 2u64), ("Qp:p=3,prec=8", 3)] {
        let f = field(spec);
        let depth = 4;
        for n in 0..60 {
            let x = match n % 3 {
                0 => BoundaryPoint::Affine(f.random_integral(&mut rng, 5)),
                1 => BoundaryPoint::Polar(f.random_nonzero(&mut rng, 1, 5)),
                _ => BoundaryPoint::Polar(f.zero()),
            };
            let ray = ray_to_end(&f, &x, depth).unwrap();
            let (u1, u2) = end_vector(&f, p, depth, &x);
            for (k, v) in ray.iter().enumerate() {
                assert_eq!(v.depth(), k as u64);
                let pk = p.pow(k as u32) % p.pow(depth);
                let chain = span(p, depth, &[(u1, u2), (pk, 0), (0, pk)]);
                assert_eq!(vertex_subgroup(p, depth, v), chain, "{spec} {x:?} k={k}");
            }
        }
    }
}

/// Agreement from the lattice chains alone: the largest `k` with
/// `O u + p^k O^2 = O v + p^k O^2`. The calibrated offset is 0.
#[test]
fn cone_offset_calibrated_by_brute_force() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for (spec, p) in [("Qp:p=2,prec=8", 2u64), ("Qp:p=3,prec=8", 3)] {
        let f = field(spec);
        let depth = 5;
        for _ in 0..200 {
            let x = BoundaryPoint::Affine(f.random_integral(&mut rng, 3));
            let y = match rng.next_u32() % 3 {
                0 => BoundaryPoint::Polar(f.random_nonzero(&mut rng, 1, 3)),
                _ => BoundaryPoint::Affine(f.random_integral(&mut rng, 3)),
            };
            let (u, v) = (end_vector(&f, p, depth, &x), end_vector(&f, p, depth, &y));
            let brute = (0..=depth)
                .take_while(|&k| {
                    let pk = p.pow(k) % p.pow(depth);
                    span(p, depth, &[u, (pk, 0), (0, pk)]) == span(p, depth, &[v, (pk, 0), (0, pk)])
                })
                .last()
                .unwrap();
            let c = cone_vs_ultrametric(&f, &x, &y, depth).unwrap();
            assert_eq!(c.agreement, brute, "{spec} {x:?} {y:?}");
            let expected = match c.valuation_distance {
                Valuation::Finite(d) => (d.max(0) as u32).min(depth),
                Valuation::Infinity => depth,
            };
            assert_eq!(c.agreement, expected);
            assert!(c.consistent);
        }
    }
    let f = field("Qp:p=2,prec=8");
    let zero = BoundaryPoint::Affine(f.zero());
    for m in 1..=4 {
        let y = BoundaryPoint::Affine(f.monomial(1, m));
        assert_eq!(
            cone_vs_ultrametric(&f, &zero, &y, 6).unwrap().agreement,
            m as u32
        );
    }
}

#[test]
fn boundary_orbits_and_class_counts() {
    for spec in [
        "Qp:p=2,prec=6",
        "Qp:p=3,prec=6",
        "Qp:p=5,prec=6",
        "Laurent:q=2,prec=6",
        "Laurent:q=3,prec=6",
        "Laurent:q=5,prec=6",
    ] {
        let f = field(spec);
        let q = u64::from(f.residue_size());
        for depth in 1..=4u32 {
            let r = boundary_transitivity_check(&f, depth).unwrap();
            // |P^1(Z/q^D)| from primitive vectors over units
            let m = q.pow(depth);
            let primitive = m * m - (m / q) * (m / q);
            let units = m - m / q;
            assert_eq!(r.classes as u64, primitive / units, "{spec} D={depth}");
            assert_eq!(r.orbits, 1, "{spec} D={depth}");
            assert!(r.passed());
        }
    }
}

#[test]
fn iwasawa_thousand_samples() {
    for spec in ["Qp:p=5,prec=8", "Qp:p=2,prec=10", "Laurent:q=3,prec=8"] {
        let f = field(spec);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let r = iwasawa_check(&f, 1000, &mut rng).unwrap();
        assert!(
            r.passed(),
            "{spec}: {:?}",
            &r.failures[..r.failures.len().min(3)]
        );
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn iwasawa_multiplies_back(seed in any::<u64>(), i in 0usize..3) {
        let f = field(["Qp:p=5,prec=8", "Qp:p=3,prec=6", "Laurent:q=2,prec=8"][i]);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let g = random_sl2(&f, &mut rng, 3).unwrap();
        let r = iwasawa_decompose(&f, &g).unwrap();
        prop_assert!(mat_eq(&f, &mat_mul(&f, &r.k, &r.b), &g));
        prop_assert!(is_integral_unimodular(&f, &r.k));
        prop_assert!(f.is_zero(&r.b[1][0]));
    }

    #[test]
    fn ball_degree_law(i in 0usize..4, r in 1u32..4) {
        let f = field(["Qp:p=2,prec=6", "Qp:p=3,prec=6", "Laurent:q=4,prec=4", "Laurent:q=5,prec=4"][i]);
        let q = f.residue_size() as usize;
        let ball = build_tree_ball(&f, r).unwrap();
        prop_assert!(ball.is_tree());
        for (v, d) in ball.vertices.iter().zip(ball.degrees()) {
            prop_assert_eq!(d, if v.depth() < u64::from(r) { q + 1 } else { 1 });
        }
    }

    #[test]
    fn distinct_ends_share_finite_prefixes(seed in any::<u64>(), i in 0usize..3) {
        let f = field(["Qp:p=2,prec=10", "Qp:p=5,prec=8", "Laurent:q=3,prec=8"][i]);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let r = cone_check(&f, 6, 20, &mut rng).unwrap();
        prop_assert!(r.passed(), "{:?}", r.failures);
    }

    #[test]
    fn rays_are_geodesics(seed in any::<u64>()) {
        let f = field("Laurent:q=3,prec=8");
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let x = BoundaryPoint::Polar(f.random_nonzero(&mut rng, 1, 4));
        let ray = ray_to_end(&f, &x, 7).unwrap();
        for (k, v) in ray.iter().enumerate() {
            prop_assert_eq!(v.depth(), k as u64);
            if k > 0 {
                prop_assert_eq!(v.distance(&ray[k - 1]), 1);
            }
        }
    }
}
