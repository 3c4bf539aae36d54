mod common;

use common::*;
use pdekit::exactalg::{MultiPoly, Scalar};
use pdekit::involution::{complete_to_involution, Caps};
use pdekit::inversesys::{
    certify_generators, generating_sections, is_formal_solution, modular_render, section_basis, span_dimension,
    spencer_apply, spencer_shift, subsystem_intersect, subsystem_sum, var_labels, Section, SectionBasis,
};
use pdekit::jetspace::{JetVar, MultiIndex};
use pdekit::modanalysis::relative_localization;
use pdekit::pdesys::{saturate, Equation, Field};

fn x_poly(coeffs: &[i64]) -> Scalar {
    let terms = coeffs.iter().enumerate().map(|(k, &c)| (vec![k as u32], pdekit::exactalg::rat(c)));
    Scalar::from_poly(MultiPoly::from_terms(1, terms))
}

fn indicator<'a>(b: &'a SectionBasis, j: &JetVar) -> &'a Section {
    let k = b.parametric.iter().position(|p| p == j).expect("parametric jet");
    &b.sections[k]
}

fn in_span(span: &[Section], f: &Section) -> bool {
    let mut all = span.to_vec();
    let before = span_dimension(&all);
    all.push(f.clone());
    span_dimension(&all) == before
}

#[test]
fn airy_sections_match_table() {
    let s = saturate(&airy());
    let b = section_basis(&s, 4);
    assert_eq!(b.truncation, 6);
    let (f1, f2) = (indicator(&b, &jet(0, &[0])), indicator(&b, &jet(0, &[1])));
    let want1 = [x_poly(&[1]), x_poly(&[0]), x_poly(&[0, 1]), x_poly(&[1]), x_poly(&[0, 0, 1]), x_poly(&[0, 4]), x_poly(&[4, 0, 0, 1])];
    let want2 = [x_poly(&[0]), x_poly(&[1]), x_poly(&[0]), x_poly(&[0, 1]), x_poly(&[2]), x_poly(&[0, 0, 1]), x_poly(&[0, 6])];
    for k in 0..=6u32 {
        assert_eq!(f1.get(&jet(0, &[k])), want1[k as usize], "f' at order {}", k);
        assert_eq!(f2.get(&jet(0, &[k])), want2[k as usize], "f'' at order {}", k);
    }
    let x = Scalar::var(0, 1);
    assert_eq!(spencer_apply(f1, 0).unwrap(), f2.truncate(5).scale(&-x));
    assert_eq!(spencer_apply(f2, 0).unwrap(), f1.truncate(5).scale(&Scalar::from_int(-1)));
    assert!(!is_formal_solution(f1).unwrap());
    assert!(!is_formal_solution(f2).unwrap());
}

#[test]
fn airy_sections_orthogonal_to_prolongations() {
    let s = saturate(&airy());
    let b = section_basis(&s, 4);
    let p = pdekit::pdesys::prolong(&s.base, 4);
    for f in &b.sections {
        for e in &p.equations {
            assert!(f.contract(e).is_zero());
        }
    }
}

#[test]
fn airy_single_generator() {
    let s = saturate(&airy());
    let g = generating_sections(&s, 4).unwrap();
    assert_eq!(g.generators.len(), 1);
    assert_eq!(g.certificate.len(), 5);
    assert!(g.certificate.iter().all(|l| l.dim == 2));
}

#[test]
fn constant_first_order_sections_and_generator() {
    let s = saturate(&first_order_triple());
    let r_max = 3;
    let b = section_basis(&s, 2 * r_max);
    let (g, g1, g2) = (indicator(&b, &jet(0, &[0])), indicator(&b, &jet(1, &[0])), indicator(&b, &jet(2, &[0])));
    let minus = Scalar::from_int(-1);
    // table rows
    for (f, want) in [(g, [1, 0, 0, 0, 1, 0, 1, 0, 0]), (g1, [0, 1, 0, 1, 0, 0, 0, 1, 0]), (g2, [0, 0, 1, 0, 0, 0, 0, 0, 0])] {
        let got: Vec<Scalar> = (0..3u32).flat_map(|o| (0..3).map(move |k| (k, o))).map(|(k, o)| f.get(&jet(k, &[o]))).collect();
        assert_eq!(got, want.iter().map(|&v| Scalar::from_int(v)).collect::<Vec<_>>());
    }
    let t = g.truncation - 1;
    assert_eq!(spencer_apply(g, 0).unwrap(), g1.truncate(t).scale(&minus));
    assert_eq!(spencer_apply(g1, 0).unwrap(), g.truncate(t).scale(&minus));
    assert!(spencer_apply(g2, 0).unwrap().is_zero());

    let h = g.add_scaled(&minus, g2);
    let dh = spencer_apply(&h, 0).unwrap();
    let d2h = spencer_apply(&dh, 0).unwrap();
    assert_eq!(d2h, g.truncate(d2h.truncation));
    assert_eq!(dh, g1.truncate(dh.truncation).scale(&minus));
    assert_eq!(d2h.add_scaled(&minus, &h), g2.truncate(d2h.truncation));
    assert!(certify_generators(&s, &[h.clone()], r_max).is_ok());

    let found = generating_sections(&s, r_max).unwrap();
    assert_eq!(found.generators.len(), 1);
    let k = &found.generators[0];
    let plus = g.add_scaled(&Scalar::one(), g2);
    assert!(*k == h.truncate(k.truncation) || *k == plus.truncate(k.truncation));
    let dk = spencer_apply(k, 0).unwrap();
    let d2k = spencer_apply(&dk, 0).unwrap();
    assert_eq!(d2k, g.truncate(d2k.truncation));
    assert_eq!(dk, g1.truncate(dk.truncation).scale(&minus));
}

fn chi(i: usize, k: usize) -> Scalar {
    Scalar::var(i, k)
}

#[test]
fn macaulay_localized_system() {
    let caps = Caps::default();
    let inv = complete_to_involution(&localized_finite(), &caps).unwrap();
    assert_eq!(inv.characters.alpha[1], 9);
    let loc = relative_localization(&inv, 2, &caps).unwrap();
    assert_eq!(loc.dim, 9);
    assert_eq!(loc.system.field, Field::Params(2));
    let (c1, c2) = (chi(0, 2), chi(1, 2));
    let one = Scalar::one();
    let e = |pairs: Vec<(JetVar, Scalar)>| Equation::from_pairs(pairs);
    let want = vec![
        e(vec![(jet(0, &[0, 4]), one.clone())]),
        e(vec![(jet(0, &[1, 3]), one.clone())]),
        e(vec![(jet(0, &[2, 2]), one.clone()), (jet(0, &[3, 0]), -(&(&c1 * &c1) / &c2))]),
        e(vec![(jet(0, &[3, 1]), one.clone())]),
        e(vec![(jet(0, &[4, 0]), one.clone())]),
        e(vec![(jet(0, &[0, 3]), one.clone()), (jet(0, &[3, 0]), -(&(&(&c1 * &c1) * &c1) / &(&(&c2 * &c2) * &c2)))]),
    ];
    let got: Vec<Equation> = loc.completed.solved.rows().cloned().collect();
    assert!(same_row_space(&got, &want));
    let s = &loc.completed.solved;
    let par: Vec<JetVar> = s.parametric.clone();
    assert_eq!(par.len(), 9);
    assert!(par.iter().all(|j| j.order() <= 3));
}

#[test]
fn macaulay_generator_and_shifts() {
    let caps = Caps::default();
    let inv = complete_to_involution(&localized_finite(), &caps).unwrap();
    let loc = relative_localization(&inv, 2, &caps).unwrap();
    let s = &loc.completed.solved;
    let labels = var_labels(&loc.system.var_names);
    assert_eq!(labels, vec![3, 4]);
    let coeffs = names("chi", 2);
    let b = section_basis(s, 3);
    let e = indicator(&b, &jet(0, &[3, 0]));
    assert_eq!(modular_render(e, &labels, &coeffs), "chi2^3*a^333 + chi1^3*a^444 + chi1^2*chi2^2*a^3344 = 0");
    let t = s.q();
    let mut shifts = Vec::new();
    for nu in MultiIndex::up_to_order(2, 3) {
        shifts.push(spencer_shift(e, &nu).unwrap().truncate(t));
    }
    assert_eq!(span_dimension(&shifts), 9);
    let extra: [(&[u32], &str); 8] = [
        (&[1, 2], "a^344 = 0"),
        (&[2, 1], "a^334 = 0"),
        (&[0, 2], "a^44 = 0"),
        (&[1, 1], "a^34 = 0"),
        (&[2, 0], "a^33 = 0"),
        (&[0, 1], "a^4 = 0"),
        (&[1, 0], "a^3 = 0"),
        (&[0, 0], "a = 0"),
    ];
    for (idx, text) in extra {
        let f = indicator(&b, &jet(0, idx));
        assert_eq!(modular_render(f, &labels, &coeffs), text);
        assert!(in_span(&shifts, &f.truncate(t)), "{} not reached", text);
    }
    let found = generating_sections(s, 3).unwrap();
    assert_eq!(found.generators.len(), 1);
}

#[test]
fn two_component_localized_system() {
    let caps = Caps::default();
    let inv = complete_to_involution(&two_components(), &caps).unwrap();
    let loc = relative_localization(&inv, 2, &caps).unwrap();
    assert_eq!(loc.dim, 3);
    let r = &loc.completed.solved;
    let c = chi(0, 1);
    let one = Scalar::one();
    let e = |pairs: Vec<(JetVar, Scalar)>| Equation::from_pairs(pairs);
    let want = vec![
        e(vec![(jet(0, &[0, 2]), one.clone())]),
        e(vec![(jet(0, &[1, 1]), one.clone()), (jet(0, &[0, 1]), -&c)]),
        e(vec![(jet(0, &[2, 0]), one.clone()), (jet(0, &[1, 0]), -&c)]),
    ];
    assert!(same_row_space(&r.rows().cloned().collect::<Vec<_>>(), &want));

    let base = loc.completed.system();
    let r1 = saturate(&base.with_equations(
        vec![e(vec![(jet(0, &[0, 2]), one.clone())]), e(vec![(jet(0, &[1, 0]), one.clone()), (jet(0, &[0, 0]), -&c)])],
        0,
    ));
    let r2 = saturate(&base.with_equations(vec![e(vec![(jet(0, &[0, 1]), one.clone())]), e(vec![(jet(0, &[1, 0]), one.clone())])], 0));
    let t = 4;
    assert_eq!(section_basis(&r1, t - r1.q()).sections.len(), 2);
    assert_eq!(section_basis(&r2, t - r2.q()).sections.len(), 1);
    assert_eq!(subsystem_intersect(&r1, &r2, t).unwrap().dim, 0);
    let sum = subsystem_sum(&r1, &r2, t).unwrap();
    assert_eq!(sum.dim, 3);
    let full = section_basis(r, t - r.q()).sections;
    assert!(full.iter().all(|f| in_span(&sum.sections, f)));
    assert!(sum.sections.iter().all(|f| in_span(&full, f)));
}

#[test]
fn two_component_single_generator() {
    let caps = Caps::default();
    let inv = complete_to_involution(&two_components(), &caps).unwrap();
    let loc = relative_localization(&inv, 2, &caps).unwrap();
    let r = &loc.completed.solved;
    let b = section_basis(r, 4);
    let (f1, f2, f3) = (indicator(&b, &jet(0, &[0, 0])), indicator(&b, &jet(0, &[1, 0])), indicator(&b, &jet(0, &[0, 1])));
    let c = chi(0, 1);
    let one = Scalar::one();
    let f = f2.add_scaled(&one, f3);
    let t = f.truncation - 1;
    let lhs = spencer_apply(&f, 0).unwrap().add_scaled(&c, &f);
    assert_eq!(lhs, f1.truncate(t).scale(&Scalar::from_int(-1)));
    let rhs = f1.add_scaled(&c, f2).scale(&Scalar::from_int(-1)).truncate(t);
    assert_eq!(spencer_apply(&f, 1).unwrap(), rhs);
    assert!(certify_generators(r, &[f.clone()], 2).is_ok());
    let found = generating_sections(r, 2).unwrap();
    assert_eq!(found.generators.len(), 1);
}
