use buildings_core::localfield::{Field, FieldElement, FieldError, FieldSpec, Valuation};
use buildings_core::projline::{Generator, ProjLine, ProjLineError, ProjPoint};
use proptest::prelude::*;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

const SPECS: &[&str] = &[
    "F7",
    "Fq:q=4",
    "Fq:q=9",
    "Qp:p=5,prec=8",
    "Qp:p=2,prec=10",
    "Laurent:q=3,prec=8",
    "Laurent:q=2,prec=8",
    "Laurent:q=4,prec=6",
];

fn field(i: usize) -> Field {
    Field::new(SPECS[i % SPECS.len()].parse::<FieldSpec>().unwrap()).unwrap()
}

fn sample(f: &Field, seed: u64, n: usize) -> Vec<FieldElement> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|k| {
            if k % 5 == 4 {
                f.zero()
            } else {
                f.random_nonzero(&mut rng, -3, 3)
            }
        })
        .collect()
}

proptest! {
    #[test]
    fn ultrametric(i in 0usize..8, seed in any::<u64>()) {
        let f = field(i);
        let xs = sample(&f, seed, 2);
        let (a, b) = (&xs[0], &xs[1]);
        let s = f.add(a, b);
        let (va, vb) = (f.valuation(a), f.valuation(b));
        prop_assert!(f.valuation(&s) >= va.min(vb));
        if va != vb {
            prop_assert_eq!(f.valuation(&s), va.min(vb));
        }
        let p = f.mul(a, b);
        if let (Valuation::Finite(x), Valuation::Finite(y)) = (va, vb) {
            prop_assert_eq!(f.valuation(&p), Valuation::Finite(x + y));
        }
    }

    #[test]
    fn inverse_round_trip(i in 0usize..8, seed in any::<u64>()) {
        let f = field(i);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a = f.random_nonzero(&mut rng, -5, 5);
        let b = f.inv(&a).unwrap();
        prop_assert!(f.eq_to_precision(&f.mul(&a, &b), &f.one()));
        prop_assert_eq!(f.relative_precision(&b), f.relative_precision(&a));
    }

    #[test]
    fn residue_is_a_ring_map(i in 0usize..8, seed in any::<u64>()) {
        let f = field(i);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a = f.random_integral(&mut rng, 3);
        let b = f.random_integral(&mut rng, 3);
        let k = f.residue_field();
        let (ra, rb) = (f.residue(&a).unwrap(), f.residue(&b).unwrap());
        prop_assert_eq!(f.residue(&f.add(&a, &b)).unwrap(), k.add(ra, rb));
        prop_assert_eq!(f.residue(&f.mul(&a, &b)).unwrap(), k.mul(ra, rb));
    }

    #[test]
    fn frobenius_is_additive(i in 0usize..8, seed in any::<u64>()) {
        let f = field(i);
        prop_assume!(f.characteristic() > 0);
        let xs = sample(&f, seed, 2);
        let lhs = f.frobenius(&f.add(&xs[0], &xs[1])).unwrap();
        let rhs = f.add(&f.frobenius(&xs[0]).unwrap(), &f.frobenius(&xs[1]).unwrap());
        prop_assert!(f.eq_to_precision(&lhs, &rhs));
    }

    #[test]
    fn hua_matches_product(i in 0usize..8, seed in any::<u64>()) {
        let f = field(i);
        let l = ProjLine::new(f.clone());
        let xs = sample(&f, seed, 2);
        let xy = f.mul(&xs[0], &xs[1]);
        let want = f.mul(&xy, &xs[0]);
        let got = l.hua_triple_product(&ProjPoint::Finite(xs[0].clone()), &ProjPoint::Finite(xs[1].clone()));
        if got == ProjPoint::Infinity {
            // all digits cancelled: only possible when xy is very large
            let prec = f.precision().expect("finite fields are exact") as i64;
            prop_assert!(f.valuation(&xy).finite().unwrap() <= 1 - prec);
        } else {
            prop_assert!(l.same_point(&got, &ProjPoint::Finite(want)));
        }
    }

    #[test]
    fn hua_edge_cases(i in 0usize..8, seed in any::<u64>()) {
        let f = field(i);
        let l = ProjLine::new(f.clone());
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let x = f.random_nonzero(&mut rng, -3, 3);
        let y = f.neg(&f.inv(&x).unwrap());
        let got = l.hua_triple_product(&ProjPoint::Finite(x.clone()), &ProjPoint::Finite(y));
        prop_assert!(l.same_point(&got, &ProjPoint::Finite(f.neg(&x))));
        let got = l.hua_triple_product(&ProjPoint::Finite(x), &ProjPoint::Finite(f.zero()));
        prop_assert!(l.same_point(&got, &ProjPoint::Finite(f.zero())));
    }

    #[test]
    fn recovered_multiplication(i in 0usize..8, seed in any::<u64>()) {
        let f = field(i);
        let l = ProjLine::new(f.clone());
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let x = f.random_nonzero(&mut rng, -1, 1);
        let y = f.random_nonzero(&mut rng, -1, 1);
        let got = l.recover_multiplication(&x, &y).unwrap();
        let want = f.mul(&x, &y);
        prop_assert!(f.eq_to_precision(&got, &want));
        prop_assert!(!f.is_zero(&got));
    }

    /// Far from valuation 0 digits may run out, but a returned value is
    /// never wrong.
    #[test]
    fn recovery_never_lies(i in 0usize..8, seed in any::<u64>()) {
        let f = field(i);
        let l = ProjLine::new(f.clone());
        let xs = sample(&f, seed, 2);
        match l.recover_multiplication(&xs[0], &xs[1]) {
            Ok(got) => prop_assert!(f.eq_to_precision(&got, &f.mul(&xs[0], &xs[1]))),
            Err(e) => prop_assert_eq!(e, ProjLineError::Field(FieldError::PrecisionExhausted)),
        }
    }

    #[test]
    fn squaring_is_lipschitz(i in 0usize..8, seed in any::<u64>()) {
        let f = field(i);
        prop_assume!(f.precision().is_some());
        let l = ProjLine::new(f.clone());
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let x = f.random_integral(&mut rng, 2);
        let h = f.random_nonzero(&mut rng, 1, 4);
        let x2 = f.add(&x, &h);
        let sq = |a: &FieldElement| l.recover_square(&ProjPoint::Finite(a.clone()));
        let d = f.sub(sq(&x).finite().unwrap(), sq(&x2).finite().unwrap());
        prop_assert!(f.valuation(&d) >= f.valuation(&h));
    }

    #[test]
    fn generator_relations(i in 0usize..8, seed in any::<u64>()) {
        let f = field(i);
        let l = ProjLine::new(f.clone());
        let xs = sample(&f, seed, 4);
        let mut points: Vec<ProjPoint> = xs[2..].iter().cloned().map(ProjPoint::Finite).collect();
        points.push(ProjPoint::Infinity);
        points.push(ProjPoint::Finite(f.zero()));
        let (a, b) = (xs[0].clone(), xs[1].clone());
        for p in &points {
            let twice = l.pl_apply(&[Generator::Invert, Generator::Invert], p);
            prop_assert!(l.same_point(&twice, p));
            let ab = l.pl_apply(&[Generator::Translate(a.clone()), Generator::Translate(b.clone())], p);
            let sum = l.pl_apply(&[Generator::Translate(f.add(&a, &b))], p);
            prop_assert!(l.same_point(&ab, &sum));
        }
    }
}
