use anyhow::{anyhow, bail, Context as _};
use buildings_core::btree::build_tree_ball;
use buildings_core::coxeter::{CoxeterMatrix, CoxeterSystem, DEFAULT_ELEMENT_BOUND};
use buildings_core::localfield::{frobenius_index_check, FieldKind};
use buildings_core::projline::ProjLine;
use serde_json::{json, Map, Value};

use crate::checks::{self, valuation_json, word_string};
use crate::cli::{BtCmd, BuildingCmd, Command, Context, FieldCmd, MoufangCmd, Op, ProjlineCmd};
use crate::dot::tree_to_dot;
use crate::report::RunReport;
use crate::suite;

/// Runs one subcommand into `report`. An error means the input itself was
/// unusable and maps to exit code 2.
pub fn dispatch(cmd: &Command, ctx: &Context, report: &mut RunReport) -> anyhow::Result<()> {
    match cmd {
        Command::Coxeter { matrix, poincare } => coxeter(matrix, *poincare, report),
        Command::Field(c) => field(c, ctx, report),
        Command::Projline(c) => projline(c, ctx, report),
        Command::Building(c) => building(c, report),
        Command::Moufang(c) => moufang(c, report),
        Command::Bt(c) => bt(c, ctx, report),
        Command::All => {
            suite::run_all(ctx, report);
            Ok(())
        }
    }
}

fn coxeter(path: &std::path::Path, poincare: bool, report: &mut RunReport) -> anyhow::Result<()> {
    let text =
        std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let matrix: CoxeterMatrix = text.parse()?;
    let sys = CoxeterSystem::build(matrix, DEFAULT_ELEMENT_BOUND)?;
    report.detail("order", json!(sys.order()));
    report.detail("longest_length", json!(sys.length(sys.longest())));
    report.detail("longest_word", json!(word_string(sys.word(sys.longest()))));
    if poincare {
        report.detail("poincare", json!(sys.poincare_polynomial()));
    }
    for c in checks::coxeter_checks(&sys) {
        report.push(c);
    }
    Ok(())
}

fn field(cmd: &FieldCmd, ctx: &Context, report: &mut RunReport) -> anyhow::Result<()> {
    match cmd {
        FieldCmd::Classify { field } => {
            let f = checks::field(field)?;
            let c = f.classify();
            report.detail(
                "classification",
                json!({
                    "field": f.spec().to_string(),
                    "tag": c.tag.name(),
                    "characteristic": c.characteristic,
                    "residue_size": c.residue_size,
                    "local": c.local,
                    "precision": f.precision(),
                }),
            );
            report.check("classified", true, json!({"field": field}));
        }
        FieldCmd::Eval { field, op, a, b } => {
            let f = checks::field(field)?;
            let x = f.parse_element(a)?;
            let y = match (op, b) {
                (Op::Add | Op::Sub | Op::Mul | Op::Div, Some(b)) => Some(f.parse_element(b)?),
                (Op::Add | Op::Sub | Op::Mul | Op::Div, None) => bail!("--op {op:?} needs --b"),
                _ => None,
            };
            let y = || y.clone().expect("binary op has b");
            let result = match op {
                Op::Add => Ok(f.add(&x, &y())),
                Op::Sub => Ok(f.sub(&x, &y())),
                Op::Mul => Ok(f.mul(&x, &y())),
                Op::Div => f.div(&x, &y()),
                Op::Neg => Ok(f.neg(&x)),
                Op::Inv => f.inv(&x),
                Op::Val => Ok(x.clone()),
            };
            let witness =
                json!({"field": field, "op": format!("{op:?}").to_lowercase(), "a": a, "b": b});
            match result {
                Ok(r) => {
                    if *op == Op::Val {
                        report.detail("valuation", valuation_json(f.valuation(&r)));
                    } else {
                        report.detail("result", json!(f.format_element(&r)));
                        report.detail("valuation", valuation_json(f.valuation(&r)));
                    }
                    report.detail("absolute_precision", json!(f.absolute_precision(&r)));
                    report.check("evaluated", true, witness);
                }
                Err(e) => {
                    let mut w = witness;
                    w["error"] = json!(e.to_string());
                    report.check("evaluated", false, w);
                }
            }
        }
        FieldCmd::Frobenius { field, samples } => {
            let f = checks::field(field)?;
            if f.kind() != FieldKind::Laurent {
                bail!("frobenius needs a Laurent series field, got {field}");
            }
            let mut rng = ctx.rng(0);
            let r = frobenius_index_check(&f, ctx.samples(*samples), &mut rng)?;
            report.check(
                "frobenius_basis",
                r.passed(),
                json!({"field": field, "degree": r.degree, "checked": r.checked, "failures": r.failures}),
            );
            report.detail("degree", json!(r.degree));
            report.detail("checked", json!(r.checked));
        }
    }
    Ok(())
}

fn projline(cmd: &ProjlineCmd, ctx: &Context, report: &mut RunReport) -> anyhow::Result<()> {
    match cmd {
        ProjlineCmd::Hua { field, x, y } => {
            let f = checks::field(field)?;
            let line = ProjLine::new(f.clone());
            let (px, py) = (line.parse_point(x)?, line.parse_point(y)?);
            let hua = line.hua_triple_product(&px, &py);
            report.detail("hua", json!(line.format_point(&hua)));
            let native = match (px.finite(), py.finite()) {
                (Some(a), Some(b)) => Some(f.mul(&f.mul(a, b), a)),
                _ => None,
            };
            let witness = json!({"field": field, "x": x, "y": y, "hua": line.format_point(&hua)});
            if let Some(n) = native {
                let agree = line.same_point(&hua, &line.point(n.clone()));
                report.detail("native", json!(f.format_element(&n)));
                report.check("hua_matches_xyx", agree, witness);
            } else {
                report.check("hua_evaluated", true, witness);
            }
        }
        ProjlineCmd::Recover { field, samples } => {
            let mut rng = ctx.rng(0);
            let outcomes = checks::hua_recovery(field, ctx.samples(*samples), &mut rng)?;
            let first = &outcomes[0].witness;
            report.detail("checked", first["checked"].clone());
            report.detail("failures", first["failures"].clone());
            for c in outcomes {
                report.push(c);
            }
        }
    }
    Ok(())
}

fn building(cmd: &BuildingCmd, report: &mut RunReport) -> anyhow::Result<()> {
    match cmd {
        BuildingCmd::Verify { geometry } => {
            let cx = checks::geometry(geometry)?;
            report.detail("chambers", json!(cx.len()));
            let r = cx.verify_building_axioms();
            let mut axioms = Map::new();
            for a in r.checks() {
                let w = json!({"geometry": geometry, "checked": a.checked, "failed": a.failed, "witnesses": a.witnesses});
                axioms.insert(a.name.to_string(), w.clone());
                report.check(a.name, a.passed(), w);
            }
            report.detail("axiom_report", Value::Object(axioms));
        }
        BuildingCmd::Cells { geometry, base } => {
            let cx = checks::geometry(geometry)?;
            check_base(&cx, *base)?;
            let q = cx.panel(cx.panel_containing(0, 0)).len() - 1;
            let cox = cx.coxeter();
            let sizes = cx.cell_sizes(*base);
            let mut cells = Map::new();
            let mut bad = Vec::new();
            for w in cox.elements() {
                let size = sizes[w.id() as usize];
                cells.insert(word_string(cox.word(w)), json!(size));
                if size != q.pow(cox.length(w)) {
                    bad.push(json!({"w": word_string(cox.word(w)), "size": size}));
                }
            }
            report.detail("chambers", json!(cx.len()));
            report.detail("cells", Value::Object(cells));
            report.check(
                "cells_are_q_powers",
                bad.is_empty(),
                json!({"geometry": geometry, "base": base, "q": q, "witnesses": bad}),
            );
            report.check(
                "cells_partition",
                sizes.iter().sum::<usize>() == cx.len(),
                json!({"geometry": geometry, "base": base}),
            );
        }
        BuildingCmd::Coords {
            geometry,
            base,
            word,
        } => {
            let cx = checks::geometry(geometry)?;
            check_base(&cx, *base)?;
            let cox = cx.coxeter();
            let words: Vec<Vec<usize>> = match word {
                Some(s) => vec![parse_word(s, cox.rank())?],
                None => cox
                    .elements()
                    .skip(1)
                    .map(|w| cox.word(w).iter().map(|&s| usize::from(s)).collect())
                    .collect(),
            };
            let mut shapes = Map::new();
            for word in words {
                let w = cox.reduce_word(&word)?;
                let label = word_string(&word.iter().map(|&s| s as u8).collect::<Vec<_>>());
                let witness = json!({"geometry": geometry, "base": base, "word": label});
                match cx.schubert_coordinates(*base, w, &word).and_then(|c| {
                    let shape = c.domain_shape();
                    c.verify().map(|v| (shape, v))
                }) {
                    Ok((shape, v)) => {
                        shapes.insert(
                            label.clone(),
                            json!({"domain_shape": shape, "cell_size": v.cell_size, "image_size": v.image_size}),
                        );
                        let mut w = witness;
                        w["failures"] = json!(v.failures);
                        report.check(format!("coords.{label}"), v.passed(), w);
                    }
                    Err(e) => {
                        let mut w = witness;
                        w["error"] = json!(e.to_string());
                        report.check(format!("coords.{label}"), false, w);
                    }
                }
            }
            report.detail("chambers", json!(cx.len()));
            report.detail("coordinates", Value::Object(shapes));
        }
    }
    Ok(())
}

fn check_base(cx: &buildings_core::chambers::ChamberComplex, base: u32) -> anyhow::Result<()> {
    if base as usize >= cx.len() {
        bail!(
            "base chamber {base} out of range (complex has {} chambers)",
            cx.len()
        );
    }
    Ok(())
}

fn parse_word(s: &str, rank: usize) -> anyhow::Result<Vec<usize>> {
    let letters: Vec<&str> = if s.contains(',') {
        s.split(',').map(str::trim).collect()
    } else {
        s.split("").filter(|t| !t.is_empty()).collect()
    };
    letters
        .into_iter()
        .map(|t| {
            let k: usize = t
                .parse()
                .map_err(|_| anyhow!("bad letter {t:?} in word {s:?}"))?;
            if k >= rank {
                bail!("letter {k} out of range for rank {rank}");
            }
            Ok(k)
        })
        .collect()
}

fn moufang(cmd: &MoufangCmd, report: &mut RunReport) -> anyhow::Result<()> {
    match cmd {
        MoufangCmd::Check {
            geometry,
            mu,
            commutators,
        } => {
            let cx = checks::geometry(geometry)?;
            if cx.rank() != 2 {
                bail!(
                    "root groups need a rank 2 geometry, {geometry} has rank {}",
                    cx.rank()
                );
            }
            let label = "moufang";
            let outcomes = checks::moufang_checks(label, &cx);
            for key in ["roots_checked", "orbit_counts", "group_orders"] {
                if let Some(v) = outcomes[0].witness.get(key) {
                    report.detail(key, v.clone());
                }
            }
            outcomes.into_iter().for_each(|c| report.push(c));
            if *mu {
                let outcomes = checks::mu_checks(label, &cx);
                let unique = outcomes
                    .iter()
                    .any(|c| c.id.ends_with("mu_unique") && c.passed);
                report.detail("mu_unique", json!(unique));
                outcomes.into_iter().for_each(|c| report.push(c));
            }
            if *commutators {
                let outcomes = checks::commutator_checks(label, &cx);
                let containments: Map<String, Value> = outcomes
                    .iter()
                    .map(|c| (c.id.clone(), c.witness.clone()))
                    .collect();
                report.detail("containments", Value::Object(containments));
                outcomes.into_iter().for_each(|c| report.push(c));
            }
        }
        MoufangCmd::Filtration { field, from, to } => {
            if from > to {
                bail!("--from {from} exceeds --to {to}");
            }
            let c = checks::filtration_check(field, *from, *to)?;
            report.detail("indices", c.witness["indices"].clone());
            report.push(c);
        }
    }
    Ok(())
}

fn bt(cmd: &BtCmd, ctx: &Context, report: &mut RunReport) -> anyhow::Result<()> {
    match cmd {
        BtCmd::Tree { field, radius, dot } => {
            let c = checks::ball_outcome(field, *radius)?;
            report.push(c);
            if let Some(path) = dot {
                let ball = build_tree_ball(&checks::field(field)?, *radius)?;
                std::fs::write(path, tree_to_dot(&ball))
                    .with_context(|| format!("writing {}", path.display()))?;
                report.detail("dot", json!(path.display().to_string()));
            }
        }
        BtCmd::Iwasawa { field, samples } => {
            let mut rng = ctx.rng(0);
            report.push(checks::iwasawa_outcome(
                field,
                ctx.samples(*samples),
                &mut rng,
            )?);
        }
        BtCmd::Boundary { field, depth } => report.push(checks::boundary_outcome(field, *depth)?),
        BtCmd::Cone {
            field,
            depth,
            samples,
        } => {
            let mut rng = ctx.rng(0);
            report.push(checks::cone_outcome(
                field,
                *depth,
                ctx.samples(*samples),
                &mut rng,
            )?);
        }
    }
    Ok(())
}
