//! The `all` suite: criteria 1-8 as independent check groups.

use std::thread;

use serde_json::json;

use crate::checks::{self, Outcome};
use crate::cli::{Context, Profile};
use crate::report::{CheckOutcome, RunReport};

pub const CATALOG: [(&str, usize); 3] = [("PG2:q=2", 2), ("PG2:q=3", 3), ("W:q=2", 2)];
pub const CHAMBER_TOTALS: [(&str, usize); 3] = [("PG2:q=2", 21), ("PG2:q=3", 52), ("W:q=2", 45)];
pub const HUA_FIELDS: [&str; 4] = ["F7", "F4", "Qp:p=5,prec=8", "Laurent:q=3,prec=8"];
pub const FILTRATION_FIELDS: [&str; 3] = ["Qp:p=2,prec=8", "Qp:p=5,prec=8", "Laurent:q=3,prec=8"];
pub const FILTRATION_WINDOW: (i64, i64) = (-4, 5);
pub const BOUNDARY_FIELDS: [&str; 6] = [
    "Qp:p=2,prec=6",
    "Qp:p=3,prec=6",
    "Qp:p=5,prec=6",
    "Laurent:q=2,prec=6",
    "Laurent:q=3,prec=6",
    "Laurent:q=5,prec=6",
];
pub const BALL_FIELDS: [&str; 2] = ["Qp:p=2,prec=6", "Qp:p=3,prec=6"];
pub const CONE_FIELDS: [&str; 3] = ["Qp:p=2,prec=10", "Qp:p=5,prec=8", "Laurent:q=3,prec=8"];

fn prefixed(k: usize, outcomes: Vec<Outcome>) -> Vec<Outcome> {
    outcomes
        .into_iter()
        .map(|mut c| {
            c.id = format!("c{k}.{}", c.id);
            c
        })
        .collect()
}

fn or_error(id: String, r: anyhow::Result<Outcome>) -> Outcome {
    r.unwrap_or_else(|e| CheckOutcome {
        id,
        passed: false,
        witness: json!({"error": format!("{e:#}")}),
    })
}

fn schubert(ctx: &Context) -> Vec<Outcome> {
    let mut out = Vec::new();
    for ((spec, q), (_, total)) in CATALOG.iter().zip(CHAMBER_TOTALS) {
        let cx = match checks::geometry(spec) {
            Ok(cx) => cx,
            Err(e) => {
                out.push(or_error(format!("{spec}.build"), Err(e)));
                continue;
            }
        };
        out.push(CheckOutcome {
            id: format!("{spec}.chambers"),
            passed: cx.len() == total,
            witness: json!({"geometry": spec, "chambers": cx.len(), "want": total}),
        });
        let bases: Vec<u32> = match ctx.profile {
            Profile::Quick => vec![0, cx.len() as u32 / 2],
            Profile::Full => cx.chambers().collect(),
        };
        out.extend(checks::schubert_checks(spec, &cx, *q, &bases));
    }
    out
}

fn hua(ctx: &Context) -> Vec<Outcome> {
    let mut out = Vec::new();
    for (k, spec) in HUA_FIELDS.iter().enumerate() {
        let mut rng = ctx.rng(20 + k as u64);
        match checks::hua_recovery(spec, ctx.profile.samples(), &mut rng) {
            Ok(v) => out.extend(v),
            Err(e) => out.push(or_error(format!("{spec}.recover_multiplication"), Err(e))),
        }
    }
    out
}

fn per_geometry(
    specs: &[&str],
    f: fn(&str, &buildings_core::chambers::ChamberComplex) -> Vec<Outcome>,
) -> Vec<Outcome> {
    let mut out = Vec::new();
    for spec in specs {
        match checks::geometry(spec) {
            Ok(cx) => out.extend(f(spec, &cx)),
            Err(e) => out.push(or_error(format!("{spec}.build"), Err(e))),
        }
    }
    out
}

fn filtration() -> Vec<Outcome> {
    let (from, to) = FILTRATION_WINDOW;
    FILTRATION_FIELDS
        .iter()
        .map(|spec| {
            or_error(
                format!("{spec}.filtration"),
                checks::filtration_check(spec, from, to),
            )
        })
        .collect()
}

fn iwasawa(ctx: &Context) -> Vec<Outcome> {
    let mut rng = ctx.rng(70);
    let spec = "Qp:p=5,prec=8";
    let mut out = vec![or_error(
        format!("{spec}.iwasawa"),
        checks::iwasawa_outcome(spec, ctx.profile.samples(), &mut rng),
    )];
    for spec in BOUNDARY_FIELDS {
        for depth in 1..=4 {
            out.push(or_error(
                format!("{spec}.boundary_depth_{depth}"),
                checks::boundary_outcome(spec, depth),
            ));
        }
    }
    out
}

fn tree(ctx: &Context) -> Vec<Outcome> {
    let mut out = Vec::new();
    for spec in BALL_FIELDS {
        for r in 0..=4 {
            out.push(or_error(
                format!("{spec}.ball_radius_{r}"),
                checks::ball_outcome(spec, r),
            ));
        }
    }
    for (k, spec) in CONE_FIELDS.iter().enumerate() {
        let mut rng = ctx.rng(80 + k as u64);
        out.push(or_error(
            format!("{spec}.cone_vs_ultrametric"),
            checks::cone_outcome(spec, 6, ctx.profile.samples(), &mut rng),
        ));
    }
    out
}

/// Runs criteria 1-8 concurrently and appends their checks in criterion order.
pub fn run_all(ctx: &Context, report: &mut RunReport) {
    let groups: Vec<Vec<Outcome>> = thread::scope(|s| {
        let handles = vec![
            s.spawn(|| schubert(ctx)),
            s.spawn(|| hua(ctx)),
            s.spawn(|| per_geometry(&CATALOG.map(|c| c.0), checks::moufang_checks)),
            s.spawn(|| per_geometry(&CATALOG.map(|c| c.0), checks::commutator_checks)),
            s.spawn(|| per_geometry(&["PG2:q=2", "PG2:q=3"], checks::mu_checks)),
            s.spawn(filtration),
            s.spawn(|| iwasawa(ctx)),
            s.spawn(|| tree(ctx)),
        ];
        handles
            .into_iter()
            .map(|h| h.join().expect("criterion thread panicked"))
            .collect()
    });
    report.detail(
        "profile",
        json!(match ctx.profile {
            Profile::Quick => "quick",
            Profile::Full => "full",
        }),
    );
    report.detail("samples", json!(ctx.profile.samples()));
    for (k, group) in groups.into_iter().enumerate() {
        let outcomes = prefixed(k + 1, group);
        let passed = outcomes.iter().all(|c| c.passed);
        report.detail(
            format!("criterion_{}", k + 1),
            json!({"checks": outcomes.len(), "passed": passed}),
        );
        for c in outcomes {
            report.push(c);
        }
    }
}
