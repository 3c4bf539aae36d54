//! Command dispatch: every command maps a parsed system to a JSON payload
//! plus a plain-text rendering.

use pdekit::ckdata::{ck_data, CkForm};
use pdekit::error::PdeError;
use pdekit::inversesys::{generating_sections, modular_render, render_table, section_basis, var_labels};
use pdekit::involution::{complete_to_involution, hilbert_function, Caps, InvolutiveSystem, JanetBoard};
use pdekit::jetspace::{jets_up_to, JetVar};
use pdekit::modanalysis::{
    adjoint_system, codimension, element_codimension, purity_report_of, relative_localization, torsion_submodule,
    Certainty, FiltrationStatus,
};
use pdekit::pdesys::{Equation, System};
use pdekit::sequences::{derivative_reduction, janet_sequence, spencer_bundle_dims, spencer_form, SpencerForm};
use pdekit::symbolcalc::{delta_cohomology, symbol};
use serde_json::{json, Value};

use crate::parse::{parse_expression, ParseError};

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Command {
    Complete,
    Characters,
    Symbol { r: u32 },
    Delta { s: usize, level: u32 },
    Janet,
    SpencerForm,
    Ck,
    Sections { order: u32, generators: bool },
    Adjoint,
    Torsion,
    Cd { element: Option<String> },
    Localize { codim: usize },
    Purity,
    Report,
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Complete => "complete",
            Command::Characters => "characters",
            Command::Symbol { .. } => "symbol",
            Command::Delta { .. } => "delta",
            Command::Janet => "janet",
            Command::SpencerForm => "spencer-form",
            Command::Ck => "ck",
            Command::Sections { .. } => "sections",
            Command::Adjoint => "adjoint",
            Command::Torsion => "torsion",
            Command::Cd { .. } => "cd",
            Command::Localize { .. } => "localize",
            Command::Purity => "purity",
            Command::Report => "report",
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum CommandError {
    #[error(transparent)]
    Analysis(#[from] PdeError),
    #[error(transparent)]
    Parse(#[from] ParseError),
}

pub struct Outcome {
    pub payload: Value,
    pub text: Vec<String>,
    pub log: Vec<String>,
}

fn coeff_names(s: &System) -> Vec<String> {
    s.field.coeff_names(&s.var_names)
}

fn render_rows(s: &System, rows: &[Equation]) -> Vec<String> {
    let c = coeff_names(s);
    rows.iter().map(|e| e.render(&s.unknown_names, &c)).collect()
}

fn render_jets(s: &System, jets: &[JetVar]) -> Vec<String> {
    jets.iter().map(|j| j.render(&s.unknown_names)).collect()
}

fn board_json(b: &JanetBoard, s: &System) -> Value {
    let rows: Vec<Value> = b
        .rows
        .iter()
        .zip(b.render_rows())
        .map(|(r, cols)| {
            json!({
                "principal": r.principal.render(&s.unknown_names),
                "class": r.class.map(|c| c + 1),
                "multiplicative": cols,
            })
        })
        .collect();
    json!({ "rows": rows, "beta": b.beta })
}

fn change_json(inv: &InvolutiveSystem) -> Value {
    let rows: Vec<Vec<String>> = inv.change.integer_rows();
    json!({ "identity": inv.change.is_identity(), "steps": inv.change.steps, "matrix": rows })
}

fn complete(s: &System, caps: &Caps) -> Result<InvolutiveSystem, PdeError> {
    complete_to_involution(s, caps)
}

fn log_lines(inv: &InvolutiveSystem) -> Vec<String> {
    inv.log.iter().map(|l| format!("order {}: {}", l.order, l.action)).collect()
}

fn spencer_json(sf: &SpencerForm, s: &System) -> Value {
    let names: Vec<String> = (1..=sf.unknowns.len()).map(|k| format!("z{}", k)).collect();
    let legend: Vec<String> =
        sf.unknowns.iter().zip(&names).map(|(j, z)| format!("{} = {}", z, j.render(&s.unknown_names))).collect();
    let c = coeff_names(s);
    let rows: Vec<String> = sf.solved.rows().map(|e| e.render(&names, &c)).collect();
    let alpha = pdekit::involution::characters(&pdekit::involution::janet_board(&sf.solved)).alpha;
    json!({ "legend": legend, "equations": rows, "alpha": alpha })
}

fn status_name(s: FiltrationStatus) -> &'static str {
    match s {
        FiltrationStatus::Zero => "zero",
        FiltrationStatus::EqualsM => "equals-M",
        FiltrationStatus::EqualsNext => "equals-next",
        FiltrationStatus::StrictlyBetween => "strictly-between",
    }
}

pub fn run(cmd: &Command, s: &System, caps: &Caps) -> Result<Outcome, CommandError> {
    let inv = complete(s, caps)?;
    let sys = inv.system().clone();
    let log = log_lines(&inv);
    let c = coeff_names(&sys);
    let (payload, text) = match cmd {
        Command::Complete => {
            let eqs = render_rows(&sys, &sys.equations);
            let mut text = vec![format!("order {}, {} equations", inv.q(), eqs.len())];
            if !inv.change.is_identity() {
                text.push(format!("coordinate change: {}", inv.change.steps.join(", ")));
            }
            for (e, b) in inv.board.rows.iter().zip(inv.board.render_rows()) {
                let row = sys.equations.get(e.eq).map(|x| x.render(&sys.unknown_names, &c)).unwrap_or_default();
                text.push(format!("{} = 0   [{}]", row, b));
            }
            (
                json!({
                    "order": inv.q(),
                    "equations": eqs,
                    "board": board_json(&inv.board, &sys),
                    "coordinate_change": change_json(&inv),
                    "alpha": inv.characters.alpha,
                    "parametric": render_jets(&sys, &inv.solved.parametric),
                }),
                text,
            )
        }
        Command::Characters => {
            let a = &inv.characters.alpha;
            let text = vec![
                format!("q = {}", inv.q()),
                format!("alpha = ({})", a.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(", ")),
                format!("beta = ({})", inv.characters.beta.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(", ")),
            ];
            let dims: Vec<usize> = (0..4).map(|r| hilbert_function(&inv, r)).collect();
            (json!({ "order": inv.q(), "alpha": a, "beta": inv.characters.beta, "dim_r": dims }), text)
        }
        Command::Symbol { r } => {
            let g = symbol(&inv.solved, *r);
            let basis: Vec<String> = g
                .basis
                .iter()
                .map(|v| render_rows(&sys, &[Equation::new(v.clone())]).remove(0))
                .collect();
            let text = vec![format!("dim g_{} = {}", inv.q() + r, g.dim())];
            (json!({ "level": g.level, "dim": g.dim(), "parametric": render_jets(&sys, &g.parametric), "basis": basis }), text)
        }
        Command::Delta { s: deg, level } => {
            let d = delta_cohomology(&inv.solved, *deg, *level);
            let text = vec![format!("s = {}, level = {}: Z = {}, B = {}, H = {}", d.s, d.level, d.z, d.b, d.h)];
            (serde_json::to_value(&d).expect("plain data"), text)
        }
        Command::Janet => {
            let js = janet_sequence(&inv)?;
            let mut dims = vec![inv.m()];
            dims.extend(&js.fiber_dims);
            let dims_s: Vec<String> = dims.iter().map(|d| d.to_string()).collect();
            let mut text = vec![format!("F: {}, euler {}", dims_s.join(" "), js.euler)];
            let ops: Vec<Vec<String>> = (0..js.operators.len()).map(|k| js.render_operator(k, &sys.unknown_names, &c)).collect();
            for (k, rows) in ops.iter().enumerate() {
                text.push(format!("D{}:", k + 1));
                text.extend(rows.iter().map(|r| format!("  {}", r)));
            }
            let boards: Vec<Value> = js.boards.iter().map(|b| json!({ "rows": b.render_rows(), "beta": b.beta })).collect();
            (
                json!({
                    "fiber_dims": dims,
                    "euler": js.euler,
                    "compositions_vanish": js.compositions_vanish,
                    "names_preserved": js.names_preserved,
                    "operators": ops,
                    "boards": boards,
                }),
                text,
            )
        }
        Command::SpencerForm => {
            let full = spencer_form(&inv)?;
            let reduced = derivative_reduction(&inv)?;
            let fj = spencer_json(&full, &sys);
            let rj = spencer_json(&reduced, &sys);
            let mut text = vec![format!("spencer form: {} unknowns", full.unknowns.len())];
            for l in rj["legend"].as_array().into_iter().flatten() {
                text.push(format!("  {}", l.as_str().unwrap_or("")));
            }
            for e in rj["equations"].as_array().into_iter().flatten() {
                text.push(format!("  {} = 0", e.as_str().unwrap_or("")));
            }
            text.push(format!("reduced alpha = {}", rj["alpha"]));
            (json!({ "full": fj, "reduced": rj, "bundle_dims": spencer_bundle_dims(&inv) }), text)
        }
        Command::Ck => {
            let ck = ck_data(&inv)?;
            let rendered = ck.render("f");
            let text = vec![format!("{{{}}}", rendered.join(", "))];
            (
                json!({
                    "form": match ck.form { CkForm::FirstOrder => "first-order", CkForm::Characters => "characters" },
                    "data": rendered,
                    "series_counts": ck.series_counts(),
                }),
                text,
            )
        }
        Command::Sections { order, generators } => {
            let q = inv.q();
            if *order < q {
                return Err(PdeError::Precondition(format!("--order {} is below the system order {}", order, q)).into());
            }
            let basis = section_basis(&inv.solved, order - q);
            let header = render_jets(&sys, &jets_up_to(sys.n, sys.m, *order));
            let table = render_table(&basis.sections, &c);
            let mut text = vec![header.join(" ")];
            text.extend(table.iter().cloned());
            let mut payload = json!({
                "truncation": order,
                "jets": header,
                "parametric": render_jets(&sys, &basis.parametric),
                "table": table,
            });
            if *generators {
                let g = generating_sections(&inv.solved, order - q)?;
                let labels = var_labels(&sys.var_names);
                let eqs: Vec<String> = g.generators.iter().map(|f| modular_render(&f.truncate(*order), &labels, &c)).collect();
                let cert: Vec<Value> = g
                    .certificate
                    .iter()
                    .map(|l| json!({ "truncation": l.truncation, "dim": l.dim, "shifts": l.shifts.len() }))
                    .collect();
                text.push(format!("{} generator(s), certified for truncations {}..{}", eqs.len(), q, order));
                text.extend(eqs.iter().map(|e| format!("  {}", e)));
                payload["generators"] = json!({
                    "count": eqs.len(),
                    "modular_equations": eqs,
                    "seeds": render_jets(&sys, &g.seeds),
                    "certificate": cert,
                });
            }
            (payload, text)
        }
        Command::Adjoint => {
            let ad = adjoint_system(s);
            let rows = render_rows(&ad, &ad.equations);
            let adinv = complete(&ad, caps)?;
            let text = rows.iter().map(|r| format!("{} = 0", r)).collect();
            (json!({ "unknowns": ad.unknown_names, "equations": rows, "alpha": adinv.characters.alpha }), text)
        }
        Command::Torsion => {
            let t = torsion_submodule(s, &inv)?;
            let gens = render_rows(s, &t.generators);
            let mut text = vec![if t.torsion_free { "torsion-free".to_string() } else { "torsion generators:".to_string() }];
            text.extend(gens.iter().map(|g| format!("  {}", g)));
            let u: Vec<String> = (1..=t.parametrization.source).map(|k| format!("u{}", k)).collect();
            let cs = coeff_names(s);
            (
                json!({
                    "torsion_free": t.torsion_free,
                    "generators": gens,
                    "parametrization": t.parametrization.rows.iter().map(|r| r.render(&u, &cs)).collect::<Vec<_>>(),
                    "stabilized": t.stabilized,
                }),
                text,
            )
        }
        Command::Cd { element } => match element {
            None => {
                let cd = codimension(&inv);
                (json!({ "cd": cd, "alpha": inv.characters.alpha }), vec![format!("cd(M) = {}", cd)])
            }
            Some(expr) => {
                let z = parse_expression(expr, s)?;
                let rep = element_codimension(&inv, &z, caps)?;
                let w = &rep.annihilator;
                let ann = render_rows(w, &w.equations);
                let mut text = vec![format!("cd(Dz) = {}", rep.cd)];
                text.extend(ann.iter().map(|a| format!("  {} = 0", a)));
                (json!({ "cd": rep.cd, "annihilator": ann, "stabilized": rep.stabilized }), text)
            }
        },
        Command::Localize { codim } => {
            let loc = relative_localization(&inv, *codim, caps)?;
            let ls = loc.completed.system();
            let rows = render_rows(ls, &ls.equations);
            let par = render_jets(ls, &loc.completed.solved.parametric);
            let k = sys.n - codim;
            let params = if k == 1 { "chi1".to_string() } else { format!("chi1..chi{}", k) };
            let mut text = vec![format!("localized over Q({}), dim = {}", params, loc.dim)];
            text.extend(rows.iter().map(|r| format!("  {} = 0", r)));
            text.push(format!("par = {{{}}}", par.join(", ")));
            (json!({ "vars": ls.var_names, "equations": rows, "dim": loc.dim, "parametric": par }), text)
        }
        Command::Purity => {
            let p = purity_report_of(&inv, caps)?;
            let witness = p.witness.as_ref().map(|w| w.render(&sys.unknown_names, &c));
            let levels: Vec<Value> = p
                .levels
                .iter()
                .map(|l| {
                    json!({
                        "s": l.s,
                        "status": status_name(l.status),
                        "certified": l.certainty == Certainty::Certified,
                    })
                })
                .collect();
            let probes: Vec<Value> = p
                .probes
                .iter()
                .map(|(e, cd)| json!({ "element": e.render(&sys.unknown_names, &c), "cd": cd }))
                .collect();
            let mut text = vec![format!("cd = {}, {}", p.cd, if p.pure { "pure" } else { "not pure" }), p.chain.clone()];
            if let Some(w) = &witness {
                text.push(format!("witness: {}", w));
            }
            (
                json!({
                    "cd": p.cd,
                    "pure": p.pure,
                    "method": p.method,
                    "witness": witness,
                    "chain": p.chain,
                    "levels": levels,
                    "gaps": p.gaps,
                    "probes": probes,
                }),
                text,
            )
        }
        Command::Report => {
            let ck = ck_data(&inv).map(|d| d.render("f")).ok();
            let js = janet_sequence(&inv).ok();
            let cd = codimension(&inv);
            let purity = purity_report_of(&inv, caps).ok();
            let mut dims = vec![inv.m()];
            if let Some(js) = &js {
                dims.extend(&js.fiber_dims);
            }
            let text = vec![
                format!("order {}, alpha {:?}, cd {}", inv.q(), inv.characters.alpha, cd),
                format!("F: {:?}", dims),
            ];
            (
                json!({
                    "order": inv.q(),
                    "equations": render_rows(&sys, &sys.equations),
                    "coordinate_change": change_json(&inv),
                    "alpha": inv.characters.alpha,
                    "beta": inv.characters.beta,
                    "dim_r": (0..3).map(|r| hilbert_function(&inv, r)).collect::<Vec<_>>(),
                    "ck": ck,
                    "janet_dims": js.as_ref().map(|_| dims.clone()),
                    "euler": js.as_ref().map(|j| j.euler),
                    "spencer_bundle_dims": spencer_bundle_dims(&inv),
                    "cd": cd,
                    "purity_chain": purity.as_ref().map(|p| p.chain.clone()),
                    "pure": purity.as_ref().map(|p| p.pure),
                }),
                text,
            )
        }
    };
    Ok(Outcome { payload, text, log })
}
