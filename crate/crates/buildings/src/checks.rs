//! Verification routines shared by the subcommands and the `all` suite.
//! Each returns named outcomes whose detail doubles as a replay witness.

use buildings_core::btree::{
    ball_size, boundary_transitivity_check, build_tree_ball, cone_check, iwasawa_check,
};
use buildings_core::chambers::{ChamberComplex, GeometrySpec};
use buildings_core::coxeter::CoxeterSystem;
use buildings_core::localfield::{Field, FieldElement, FieldSpec, Valuation};
use buildings_core::moufang::{check_moufang, filtration_indices, RootGroupSystem};
use buildings_core::projline::{edge_case_pairs, ProjLine, ProjPoint};
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};

use crate::report::CheckOutcome;

const MAX_WITNESSES: usize = 10;

pub type Outcome = CheckOutcome;

fn outcome(id: impl Into<String>, passed: bool, witness: Value) -> Outcome {
    CheckOutcome {
        id: id.into(),
        passed,
        witness,
    }
}

pub fn field(spec: &str) -> anyhow::Result<Field> {
    Ok(Field::new(spec.parse::<FieldSpec>()?)?)
}

pub fn geometry(spec: &str) -> anyhow::Result<ChamberComplex> {
    Ok(ChamberComplex::build(spec.parse::<GeometrySpec>()?)?)
}

pub fn valuation_json(v: Valuation) -> Value {
    match v {
        Valuation::Finite(k) => json!(k),
        Valuation::Infinity => json!("inf"),
    }
}

pub fn word_string(word: &[u8]) -> String {
    if word.is_empty() {
        "e".into()
    } else {
        word.iter()
            .map(|s| s.to_string())
            .collect::<Vec<_>>()
            .join(",")
    }
}

pub fn coxeter_checks(sys: &CoxeterSystem) -> Vec<Outcome> {
    let id = sys.identity();
    let involutions = (0..sys.rank()).all(|s| sys.mul_gen(sys.generator(s), s) == id);
    let mut parity = Vec::new();
    for w in sys.elements() {
        for s in 0..sys.rank() {
            let (a, b) = (sys.length(w), sys.length(sys.mul_gen(w, s)));
            if a.abs_diff(b) != 1 && parity.len() < MAX_WITNESSES {
                parity.push(json!({"w": word_string(sys.word(w)), "s": s}));
            }
        }
    }
    let poincare: u64 = sys.poincare_polynomial().iter().sum();
    let top = sys.elements().map(|w| sys.length(w)).max().unwrap_or(0);
    vec![
        outcome("generators_are_involutions", involutions, json!({})),
        outcome(
            "length_changes_by_one",
            parity.is_empty(),
            json!({"witnesses": parity}),
        ),
        outcome(
            "poincare_sums_to_order",
            poincare == sys.order() as u64,
            json!({"sum": poincare, "order": sys.order()}),
        ),
        outcome(
            "longest_is_unique_of_max_length",
            sys.length(sys.longest()) == top
                && sys.elements().filter(|&w| sys.length(w) == top).count() == 1,
            json!({"longest_length": sys.length(sys.longest())}),
        ),
    ]
}

/// Cell sizes against `q^l(w)` from the given bases, and the coordinate
/// bijection for every nontrivial `w` from the first base.
pub fn schubert_checks(label: &str, cx: &ChamberComplex, q: usize, bases: &[u32]) -> Vec<Outcome> {
    let cox = cx.coxeter();
    let mut bad_cells = Vec::new();
    for &base in bases {
        let sizes = cx.cell_sizes(base);
        for w in cox.elements() {
            let want = q.pow(cox.length(w));
            if sizes[w.id() as usize] != want && bad_cells.len() < MAX_WITNESSES {
                bad_cells.push(json!({"base": base, "w": word_string(cox.word(w)), "size": sizes[w.id() as usize], "want": want}));
            }
        }
    }
    let mut bad_coords = Vec::new();
    let mut round_trips = 0usize;
    let base = bases[0];
    for w in cox.elements().skip(1) {
        let direction: Vec<usize> = cox.word(w).iter().map(|&s| s as usize).collect();
        let result = cx
            .schubert_coordinates(base, w, &direction)
            .and_then(|c| c.verify());
        match result {
            Ok(check) if check.passed() => round_trips += check.cell_size,
            Ok(check) => {
                bad_coords.push(json!({"w": word_string(cox.word(w)), "failures": check.failures}))
            }
            Err(e) => {
                bad_coords.push(json!({"w": word_string(cox.word(w)), "error": e.to_string()}))
            }
        }
    }
    vec![
        outcome(
            format!("{label}.cells"),
            bad_cells.is_empty(),
            json!({"bases": bases.len(), "witnesses": bad_cells}),
        ),
        outcome(
            format!("{label}.coordinates"),
            bad_coords.is_empty() && round_trips + 1 == cx.len(),
            json!({"round_trips": round_trips + 1, "chambers": cx.len(), "witnesses": bad_coords}),
        ),
    ]
}

fn sample(field: &Field, rng: &mut ChaCha8Rng, k: usize) -> FieldElement {
    if k % 10 == 9 {
        field.zero()
    } else {
        field.random_nonzero(rng, -1, 1)
    }
}

/// Recovered multiplication and Hua's identity against native arithmetic on
/// `samples` random pairs plus the forced edge cases.
pub fn hua_recovery(
    spec: &str,
    samples: usize,
    rng: &mut ChaCha8Rng,
) -> anyhow::Result<Vec<Outcome>> {
    let f = field(spec)?;
    let line = ProjLine::new(f.clone());
    let mut pairs: Vec<(FieldElement, FieldElement)> = (0..samples)
        .map(|k| (sample(&f, rng, k), sample(&f, rng, k + 3)))
        .collect();
    let seeds: Vec<FieldElement> = pairs
        .iter()
        .take(5)
        .map(|p| p.0.clone())
        .filter(|x| !f.is_zero(x))
        .collect();
    pairs.extend(edge_case_pairs(&f, &seeds));
    let fmt = |x: &FieldElement| f.format_element(x);
    let mut mult_failures = Vec::new();
    let mut hua_failures = Vec::new();
    for (x, y) in &pairs {
        let want = f.mul(x, y);
        match line.recover_multiplication(x, y) {
            Ok(got) if f.eq_to_precision(&got, &want) => {}
            Ok(got) => mult_failures
                .push(json!({"x": fmt(x), "y": fmt(y), "got": fmt(&got), "want": fmt(&want)})),
            Err(e) => mult_failures.push(json!({"x": fmt(x), "y": fmt(y), "error": e.to_string()})),
        }
        let xyx = f.mul(&want, x);
        let got =
            line.hua_triple_product(&ProjPoint::Finite(x.clone()), &ProjPoint::Finite(y.clone()));
        if !line.same_point(&got, &ProjPoint::Finite(xyx.clone())) {
            hua_failures.push(json!({"x": fmt(x), "y": fmt(y), "got": line.format_point(&got), "want": fmt(&xyx)}));
        }
    }
    let checked = pairs.len();
    let trim = |mut v: Vec<Value>| {
        v.truncate(MAX_WITNESSES);
        v
    };
    Ok(vec![
        outcome(
            format!("{spec}.recover_multiplication"),
            mult_failures.is_empty(),
            json!({"field": spec, "checked": checked, "failed": mult_failures.len(), "failures": trim(mult_failures)}),
        ),
        outcome(
            format!("{spec}.hua_triple_product"),
            hua_failures.is_empty(),
            json!({"field": spec, "checked": checked, "failed": hua_failures.len(), "failures": trim(hua_failures)}),
        ),
    ])
}

pub fn moufang_checks(label: &str, cx: &ChamberComplex) -> Vec<Outcome> {
    let q = cx.panel(cx.panel_containing(0, 0)).len() - 1;
    match check_moufang(cx) {
        Ok(r) => {
            let orders: Vec<usize> = r.group_orders.keys().copied().collect();
            let counts: Vec<usize> = r.orbit_counts.keys().copied().collect();
            vec![outcome(
                format!("{label}.moufang"),
                r.passed() && orders == [q] && counts == [q],
                json!({
                    "roots_checked": r.roots_checked,
                    "orbit_counts": r.orbit_counts.iter().map(|(k, v)| (k.to_string(), json!(v))).collect::<serde_json::Map<_, _>>(),
                    "group_orders": r.group_orders.iter().map(|(k, v)| (k.to_string(), json!(v))).collect::<serde_json::Map<_, _>>(),
                    "q": q,
                    "failures": r.failures.iter().take(MAX_WITNESSES).collect::<Vec<_>>(),
                }),
            )]
        }
        Err(e) => vec![outcome(
            format!("{label}.moufang"),
            false,
            json!({"error": e.to_string()}),
        )],
    }
}

pub fn mu_checks(label: &str, cx: &ChamberComplex) -> Vec<Outcome> {
    let r = RootGroupSystem::new(cx).and_then(|sys| sys.check_mu_formula());
    match r {
        Ok(r) => vec![
            outcome(
                format!("{label}.mu_unique"),
                r.unique && r.checked > 0,
                json!({"checked": r.checked}),
            ),
            outcome(
                format!("{label}.mu_formula"),
                r.passed() && r.formula_holds,
                json!({"checked": r.checked, "failures": r.failures}),
            ),
        ],
        Err(e) => vec![outcome(
            format!("{label}.mu"),
            false,
            json!({"error": e.to_string()}),
        )],
    }
}

pub fn commutator_checks(label: &str, cx: &ChamberComplex) -> Vec<Outcome> {
    let sys = match RootGroupSystem::new(cx) {
        Ok(s) => s,
        Err(e) => {
            return vec![outcome(
                format!("{label}.root_groups"),
                false,
                json!({"error": e.to_string()}),
            )]
        }
    };
    let mut out = Vec::new();
    match sys.check_commutators() {
        Ok(r) => {
            let stabilizers: Vec<Value> = r
                .stabilizers
                .iter()
                .map(|c| json!({"i": c.i, "j": c.j, "product_order": c.product_order, "stabilizer_order": c.stabilizer_order, "equal": c.equal}))
                .collect();
            let commutators: Vec<Value> = r
                .commutators
                .iter()
                .map(|c| json!({"i": c.i, "j": c.j, "commutators": c.commutators, "target_order": c.target_order, "contained": c.contained}))
                .collect();
            out.push(outcome(
                format!("{label}.product_equals_stabilizer"),
                !r.stabilizers.is_empty() && r.stabilizers.iter().all(|c| c.equal),
                json!({"ranges": stabilizers}),
            ));
            out.push(outcome(
                format!("{label}.commutator_containment"),
                r.commutators.iter().all(|c| c.contained),
                json!({"pairs": commutators}),
            ));
        }
        Err(e) => out.push(outcome(
            format!("{label}.commutators"),
            false,
            json!({"error": e.to_string()}),
        )),
    }
    if sys.n() == 4 {
        match sys.fit_quadrangle_identity() {
            Ok(fit) => out.push(outcome(
                format!("{label}.quadrangle_identity"),
                fit.identity_holds,
                json!({
                    "fitted": fit.fitted.iter().map(|&(u, s, t)| json!({"u": u, "x2": s, "q(u)": t})).collect::<Vec<_>>(),
                    "failures": fit.failures,
                }),
            )),
            Err(e) => out.push(outcome(format!("{label}.quadrangle_identity"), false, json!({"error": e.to_string()}))),
        }
    }
    out
}

pub fn filtration_check(spec: &str, from: i64, to: i64) -> anyhow::Result<Outcome> {
    let f = field(spec)?;
    let q = f.residue_size() as usize;
    let levels = filtration_indices(&f, from, to)?;
    let passed = levels.iter().all(|l| l.index == q && l.nested);
    Ok(outcome(
        format!("{spec}.filtration"),
        passed,
        json!({
            "field": spec,
            "q": q,
            "indices": levels.iter().map(|l| json!({"k": l.k, "index": l.index, "nested": l.nested})).collect::<Vec<_>>(),
        }),
    ))
}

pub fn iwasawa_outcome(
    spec: &str,
    samples: usize,
    rng: &mut ChaCha8Rng,
) -> anyhow::Result<Outcome> {
    let f = field(spec)?;
    let r = iwasawa_check(&f, samples, rng)?;
    Ok(outcome(
        format!("{spec}.iwasawa"),
        r.passed(),
        json!({"field": spec, "samples": r.samples, "failed": r.failures.len(), "failures": r.failures.iter().take(MAX_WITNESSES).collect::<Vec<_>>()}),
    ))
}

pub fn boundary_outcome(spec: &str, depth: u32) -> anyhow::Result<Outcome> {
    let f = field(spec)?;
    let r = boundary_transitivity_check(&f, depth)?;
    Ok(outcome(
        format!("{spec}.boundary_depth_{depth}"),
        r.passed(),
        json!({
            "field": spec,
            "depth": depth,
            "classes": r.classes,
            "expected_classes": r.expected_classes,
            "orbits": r.orbits,
            "generators": r.generators,
            "identity_fixes_all": r.identity_fixes_all,
        }),
    ))
}

pub fn ball_outcome(spec: &str, radius: u32) -> anyhow::Result<Outcome> {
    let f = field(spec)?;
    let ball = build_tree_ball(&f, radius)?;
    let q = f.residue_size() as usize;
    let degrees = ball.degrees();
    let degree_law = ball.vertices.iter().zip(&degrees).all(|(v, &d)| {
        let want = match (radius, v.depth() < u64::from(radius)) {
            (0, _) => 0,
            (_, true) => q + 1,
            (_, false) => 1,
        };
        d == want
    });
    let want = ball_size(q as u64, radius);
    Ok(outcome(
        format!("{spec}.ball_radius_{radius}"),
        ball.len() as u64 == want && ball.is_tree() && degree_law,
        json!({
            "field": spec,
            "radius": radius,
            "vertices": ball.len(),
            "expected": want,
            "edges": ball.edges.len(),
            "is_tree": ball.is_tree(),
            "degree_law": degree_law,
        }),
    ))
}

pub fn cone_outcome(
    spec: &str,
    depth: u32,
    samples: usize,
    rng: &mut ChaCha8Rng,
) -> anyhow::Result<Outcome> {
    let f = field(spec)?;
    let r = cone_check(&f, depth, samples, rng)?;
    Ok(outcome(
        format!("{spec}.cone_vs_ultrametric"),
        r.passed(),
        json!({"field": spec, "depth": depth, "pairs": r.pairs, "offset": 0, "failures": r.failures.iter().take(MAX_WITNESSES).collect::<Vec<_>>()}),
    ))
}
