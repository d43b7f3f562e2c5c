//! One line per acceptance criterion; exits nonzero if any fails.

use std::collections::BTreeSet;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::process::Command;
use std::time::{Duration, Instant};

use buildings::checks;
use buildings::suite::{
    BOUNDARY_FIELDS, CATALOG, FILTRATION_FIELDS, FILTRATION_WINDOW, HUA_FIELDS,
};
use buildings_core::btree::{ball_size, build_tree_ball, cone_check, iwasawa_check};
use buildings_core::chambers::ChamberComplex;
use buildings_core::localfield::Field;
use buildings_core::moufang::{check_moufang, filtration_indices, RootGroupSystem};
use buildings_core::projline::edge_case_pairs;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde_json::Value;

type Verdict = Result<String, String>;

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

fn geometry(spec: &str) -> ChamberComplex {
    checks::geometry(spec).unwrap()
}

fn field(spec: &str) -> Field {
    checks::field(spec).unwrap()
}

fn within(start: Instant, limit: Duration) -> Result<(), String> {
    ensure(start.elapsed() < limit, || {
        format!("took {:?}, limit {limit:?}", start.elapsed())
    })
}

/// Projective points of `F_p^m`, first nonzero entry 1.
fn normalized_points(p: u32, m: usize) -> Vec<Vec<u32>> {
    (1..p.pow(m as u32))
        .map(|code| {
            (0..m)
                .map(|k| (code / p.pow(k as u32)) % p)
                .collect::<Vec<u32>>()
        })
        .filter(|v| v.iter().find(|&&x| x != 0) == Some(&1))
        .collect()
}

/// Incident point-line pairs of PG(2,p).
fn plane_flags(p: u32) -> usize {
    let pts = normalized_points(p, 3);
    pts.iter()
        .flat_map(|x| pts.iter().map(move |l| (x, l)))
        .filter(|(x, l)| x.iter().zip(l.iter()).map(|(a, b)| a * b).sum::<u32>() % p == 0)
        .count()
}

/// Flags of W(p) from ordered orthogonal pairs of distinct points.
fn symplectic_flags(p: u32) -> usize {
    let pts = normalized_points(p, 4);
    let form = |u: &[u32], v: &[u32]| {
        (u[0] * v[3] + p * p - u[3] * v[0] + u[1] * v[2] + p * p - u[2] * v[1]) % p
    };
    let pairs = pts
        .iter()
        .flat_map(|u| pts.iter().map(move |v| (u, v)))
        .filter(|(u, v)| u != v && form(u, v) == 0)
        .count();
    let q = p as usize;
    pairs / ((q + 1) * q) * (q + 1)
}

fn criterion_1() -> Verdict {
    let start = Instant::now();
    let totals = [plane_flags(2), plane_flags(3), symplectic_flags(2)];
    ensure(totals == [21, 52, 45], || {
        format!("flag oracle gave {totals:?}")
    })?;
    let mut cells = 0;
    let mut round_trips = 0;
    for ((spec, q), total) in CATALOG.iter().zip(totals) {
        let cx = geometry(spec);
        ensure(cx.len() == total, || {
            format!("{spec}: {} chambers, oracle {total}", cx.len())
        })?;
        let cox = cx.coxeter();
        for base in cx.chambers() {
            let sizes = cx.cell_sizes(base);
            for w in cox.elements() {
                let want = q.pow(cox.length(w));
                ensure(sizes[w.id() as usize] == want, || {
                    format!(
                        "{spec} base {base}: |C_w| = {} for w = {:?}, want {want}",
                        sizes[w.id() as usize],
                        cox.word(w)
                    )
                })?;
                cells += 1;
            }
            let mut covered = 1;
            for w in cox.elements().skip(1) {
                let word: Vec<usize> = cox.word(w).iter().map(|&s| usize::from(s)).collect();
                let coords = cx
                    .schubert_coordinates(base, w, &word)
                    .map_err(|e| e.to_string())?;
                let check = coords.verify().map_err(|e| e.to_string())?;
                ensure(check.passed(), || {
                    format!("{spec} base {base} {word:?}: {check:?}")
                })?;
                for c in cx.schubert_cell(base, w).members {
                    let tuple = coords
                        .coordinates(c)
                        .map_err(|e| e.to_string())?
                        .ok_or("chamber without coordinates")?;
                    ensure(
                        coords.chamber(&tuple).map_err(|e| e.to_string())? == c,
                        || format!("{spec} base {base}: chamber {c} does not round-trip"),
                    )?;
                }
                covered += check.cell_size;
            }
            ensure(covered == cx.len(), || {
                format!("{spec} base {base}: coordinates cover {covered}")
            })?;
            round_trips += covered;
        }
    }
    within(start, Duration::from_secs(10))?;
    Ok(format!(
        "totals 21/52/45 match flag enumeration; {cells} cells equal q^l(w); {round_trips} chamber round-trips from every base in {:.1?}",
        start.elapsed()
    ))
}

fn criterion_2() -> Verdict {
    let start = Instant::now();
    let mut summary = Vec::new();
    for (k, spec) in HUA_FIELDS.iter().enumerate() {
        let f = field(spec);
        // the forced cases must include products 0 and -1
        let x = f.one();
        let forced = edge_case_pairs(&f, &[x]);
        let minus_one = f.neg(&f.one());
        ensure(forced.iter().any(|(a, b)| f.is_zero(&f.mul(a, b))), || {
            format!("{spec}: no xy = 0 case")
        })?;
        ensure(
            forced
                .iter()
                .any(|(a, b)| f.eq_to_precision(&f.mul(a, b), &minus_one)),
            || format!("{spec}: no xy = -1 case"),
        )?;
        let mut rng = ChaCha8Rng::seed_from_u64(100 + k as u64);
        let outcomes = checks::hua_recovery(spec, 1000, &mut rng).map_err(|e| e.to_string())?;
        let recovered = &outcomes[0];
        ensure(recovered.passed, || {
            format!("{spec}: {}", recovered.witness)
        })?;
        let checked = recovered.witness["checked"].as_u64().unwrap();
        ensure(checked >= 1000, || format!("{spec}: only {checked} pairs"))?;
        summary.push(format!("{spec} {checked}"));
    }
    within(start, Duration::from_secs(10))?;
    Ok(format!(
        "recovered xy equals native xy on {} pairs in {:.1?}",
        summary.join(", "),
        start.elapsed()
    ))
}

fn criterion_3() -> Verdict {
    let mut out = Vec::new();
    for (spec, q) in CATALOG {
        let r = check_moufang(&geometry(spec)).map_err(|e| e.to_string())?;
        ensure(r.passed(), || format!("{spec}: {:?}", r.failures))?;
        let orders: Vec<usize> = r.group_orders.keys().copied().collect();
        let orbits: Vec<usize> = r.orbit_counts.keys().copied().collect();
        ensure(orders == [q] && orbits == [q], || {
            format!("{spec}: |U| {orders:?}, apartments {orbits:?}, q = {q}")
        })?;
        out.push(format!("{spec} {} roots", r.roots_checked));
    }
    Ok(format!(
        "simply transitive with |U| = q: {}",
        out.join(", ")
    ))
}

fn criterion_4() -> Verdict {
    let mut ranges = 0;
    for (spec, _) in CATALOG {
        let cx = geometry(spec);
        let sys = RootGroupSystem::new(&cx).map_err(|e| e.to_string())?;
        let r = sys.check_commutators().map_err(|e| e.to_string())?;
        let n = sys.n();
        // U_i..U_{i+j} for every start i mod 2n and 0 <= j <= n - 3
        ensure(r.stabilizers.len() == 2 * n * (n - 2), || {
            format!("{spec}: only {} ranges", r.stabilizers.len())
        })?;
        for s in &r.stabilizers {
            ensure(s.equal && s.product_order == s.stabilizer_order, || {
                format!("{spec}: {s:?}")
            })?;
        }
        ensure(r.passed(), || format!("{spec}: {:?}", r.failures))?;
        ranges += r.stabilizers.len();
    }
    Ok(format!(
        "{ranges} index ranges: product group equals pointwise stabilizer"
    ))
}

fn criterion_5() -> Verdict {
    let mut checked = 0;
    for spec in ["PG2:q=2", "PG2:q=3"] {
        let cx = geometry(spec);
        let r = RootGroupSystem::new(&cx)
            .and_then(|s| s.check_mu_formula())
            .map_err(|e| e.to_string())?;
        ensure(r.unique && r.formula_holds && r.passed(), || {
            format!("{spec}: {r:?}")
        })?;
        checked += r.checked;
    }
    Ok(format!(
        "{checked} nontrivial u: unique mu, product formula holds"
    ))
}

fn criterion_6() -> Verdict {
    let (from, to) = FILTRATION_WINDOW;
    let mut levels = 0;
    for spec in FILTRATION_FIELDS {
        let f = field(spec);
        let q = f.residue_size() as usize;
        let r = filtration_indices(&f, from, to).map_err(|e| e.to_string())?;
        ensure(r.len() == (to - from) as usize, || {
            format!("{spec}: {} levels", r.len())
        })?;
        for l in &r {
            ensure(l.index == q && l.nested, || {
                format!("{spec}: {l:?}, q = {q}")
            })?;
        }
        levels += r.len();
    }
    Ok(format!("{levels} levels k in [{from}, {to}) have index q"))
}

fn criterion_7() -> Verdict {
    let f = field("Qp:p=5,prec=8");
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let r = iwasawa_check(&f, 1000, &mut rng).map_err(|e| e.to_string())?;
    ensure(r.passed() && r.samples == 1000, || {
        format!("Q5: {:?}", &r.failures[..r.failures.len().min(3)])
    })?;
    let mut orbits = 0;
    for spec in BOUNDARY_FIELDS {
        for depth in 1..=4 {
            let o = checks::boundary_outcome(spec, depth).map_err(|e| e.to_string())?;
            ensure(o.passed && o.witness["orbits"] == 1, || {
                format!("{}", o.witness)
            })?;
            orbits += 1;
        }
    }
    Ok(format!(
        "1000 Q5 samples decompose exactly; one orbit in all {orbits} (field, depth) cases"
    ))
}

/// Lattices between `p^r L` and `L` with cyclic quotient, as kernels of
/// surjections `(Z/p^r)^2 -> Z/p^d`.
fn lattice_count(p: u64, r: u32) -> usize {
    let m = p.pow(r);
    let mut out = BTreeSet::new();
    for d in 0..=r {
        let n = p.pow(d);
        for a in 0..n {
            for b in 0..n {
                if d > 0 && a % p == 0 && b % p == 0 {
                    continue;
                }
                let kernel: Vec<bool> = (0..m * m)
                    .map(|i| (a * (i / m) + b * (i % m)) % n == 0)
                    .collect();
                out.insert(kernel);
            }
        }
    }
    out.len()
}

fn criterion_8() -> Verdict {
    for (spec, q) in [
        ("Qp:p=2,prec=6", 2u64),
        ("Qp:p=3,prec=6", 3),
        ("Laurent:q=2,prec=6", 2),
        ("Laurent:q=3,prec=6", 3),
    ] {
        let f = field(spec);
        for r in 0..=4 {
            let ball = build_tree_ball(&f, r).map_err(|e| e.to_string())?;
            let closed = if r == 0 {
                1
            } else {
                1 + (q + 1) * (q.pow(r) - 1) / (q - 1)
            };
            let oracle = lattice_count(q, r) as u64;
            ensure(
                ball.len() as u64 == closed && oracle == closed && ball_size(q, r) == closed,
                || {
                    format!(
                        "{spec} r={r}: ball {}, enumeration {oracle}, formula {closed}",
                        ball.len()
                    )
                },
            )?;
            ensure(ball.is_tree(), || format!("{spec} r={r}: not a tree"))?;
        }
    }
    let mut pairs = 0;
    for (k, spec) in ["Qp:p=2,prec=10", "Qp:p=5,prec=8", "Laurent:q=3,prec=8"]
        .iter()
        .enumerate()
    {
        let mut rng = ChaCha8Rng::seed_from_u64(80 + k as u64);
        let r = cone_check(&field(spec), 6, 1000, &mut rng).map_err(|e| e.to_string())?;
        ensure(r.passed(), || {
            format!("{spec}: {:?}", &r.failures[..r.failures.len().min(3)])
        })?;
        pairs += r.pairs;
    }
    Ok(format!("ball sizes match enumeration for q in {{2, 3}}, r <= 4; {pairs} end pairs agree with offset 0"))
}

fn run_all_report() -> Result<Value, String> {
    let out = Command::new(env!("CARGO_BIN_EXE_buildings"))
        .args(["all", "--profile", "quick", "--seed", "1", "--json-only"])
        .output()
        .map_err(|e| e.to_string())?;
    let mut v: Value = serde_json::from_slice(&out.stdout).map_err(|e| e.to_string())?;
    ensure(out.status.code() == Some(0), || {
        format!("exit {:?}: {}", out.status.code(), v["failures"])
    })?;
    v.as_object_mut().unwrap().remove("wall_time_ms");
    Ok(v)
}

fn criterion_9() -> Verdict {
    let start = Instant::now();
    let a = run_all_report()?;
    let first = start.elapsed();
    within(start, Duration::from_secs(60))?;
    let start = Instant::now();
    let b = run_all_report()?;
    within(start, Duration::from_secs(60))?;
    ensure(a == b, || "reports differ between runs".into())?;
    let checks = a["checks_run"].as_u64().unwrap_or(0);
    ensure(checks > 0 && a["checks_failed"] == 0, || {
        format!("{checks} checks, failed {}", a["checks_failed"])
    })?;
    Ok(format!(
        "{checks} checks, identical reports, {first:.1?} and {:.1?}",
        start.elapsed()
    ))
}

fn main() {
    let criteria: [(&str, fn() -> Verdict); 9] = [
        ("schubert cells and coordinates", criterion_1),
        ("hua recovery", criterion_2),
        ("moufang root groups", criterion_3),
        ("product groups are stabilizers", criterion_4),
        ("mu formula", criterion_5),
        ("filtration indices", criterion_6),
        ("iwasawa and boundary", criterion_7),
        ("tree geometry", criterion_8),
        ("determinism", criterion_9),
    ];
    let mut failed = 0;
    for (k, (name, f)) in criteria.iter().enumerate() {
        let verdict = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|_| Err("panicked".into()));
        match verdict {
            Ok(msg) => println!("criterion {} [{name}]: PASS ({msg})", k + 1),
            Err(msg) => {
                failed += 1;
                println!("criterion {} [{name}]: FAIL ({msg})", k + 1);
            }
        }
    }
    println!(
        "acceptance: {} passed, {failed} failed",
        criteria.len() - failed
    );
    if failed > 0 {
        std::process::exit(1);
    }
}
