#![allow(dead_code)]

pub mod invariants;

use pdekit::exactalg::Scalar;
use pdekit::jetspace::{JetVar, MultiIndex};
use pdekit::pdesys::{Equation, Field, System};

/// "y2[0,1] - 3*y1[1,0] + 1/2*y1[0,0]": signs are separate tokens, rational
/// coefficients only.
pub fn lin(unknowns: &[&str], text: &str) -> Equation {
    let mut pairs = Vec::new();
    let mut sign = 1i64;
    for tok in text.split_whitespace() {
        match tok {
            "+" => sign = 1,
            "-" => sign = -1,
            t => {
                let (coef, jet) = match t.split_once('*') {
                    Some((c, j)) => (c, j),
                    None => ("1", t),
                };
                let c = match coef.split_once('/') {
                    Some((a, b)) => Scalar::from_ratio(a.parse().unwrap(), b.parse().unwrap()),
                    None => Scalar::from_int(coef.parse().unwrap()),
                };
                let open = jet.find('[').unwrap();
                let k = unknowns.iter().position(|u| *u == &jet[..open]).unwrap();
                let idx: Vec<u32> = jet[open + 1..jet.len() - 1].split(',').map(|d| d.trim().parse().unwrap()).collect();
                pairs.push((JetVar::new(k, MultiIndex(idx)), &c * &Scalar::from_int(sign)));
                sign = 1;
            }
        }
    }
    Equation::from_pairs(pairs)
}

pub fn sys(n: usize, unknowns: &[&str], rows: &[&str]) -> System {
    let eqs = rows.iter().map(|r| lin(unknowns, r)).collect();
    let mut s = System::new(n, unknowns.len(), Field::Q, eqs);
    s.unknown_names = unknowns.iter().map(|u| u.to_string()).collect();
    s
}

pub fn jet(k: usize, idx: &[u32]) -> JetVar {
    JetVar::new(k, MultiIndex(idx.to_vec()))
}

pub fn finite_type() -> System {
    sys(3, &["y"], &["y[0,0,2]", "y[0,1,1] - y[2,0,0]", "y[0,2,0]"])
}

pub fn primary_ideal() -> System {
    sys(3, &["y"], &["y[2,0,0]", "y[1,0,1] - y[0,1,0]"])
}

pub fn spencer_pair() -> System {
    sys(2, &["y1", "y2"], &["y2[0,1] - y2[1,0]", "y1[0,1]", "y1[1,0]"])
}

/// Third unknown with parameter a (a = 0 or 1).
pub fn spencer_triple(a: i64) -> System {
    let row = if a == 0 { "y2[0,1] - y2[1,0]".to_string() } else { format!("y2[0,1] - y2[1,0] - {}*y3[0,0]", a) };
    sys(2, &["y1", "y2", "y3"], &[row.as_str(), "y1[0,1]", "y1[1,0]"])
}

pub fn monomial_pair() -> System {
    sys(2, &["y"], &["y[3,4]", "y[5,2]"])
}

pub fn four_variables() -> System {
    sys(4, &["y"], &["y[1,0,1,0]", "y[1,0,0,1]", "y[0,1,1,0]", "y[0,1,0,1]"])
}

pub fn variable_coefficients() -> System {
    let x2 = Scalar::var(1, 2);
    let e1 = Equation::from_pairs([(jet(0, &[0, 3]), Scalar::one()), (jet(0, &[0, 1]), x2)]);
    let e2 = lin(&["y"], "y[3,0] + y[0,1] - y[0,0]");
    System::new(2, 1, Field::QX, vec![e1, e2])
}

pub fn airy() -> System {
    let x = Scalar::var(0, 1);
    let e = Equation::from_pairs([(jet(0, &[2]), Scalar::one()), (jet(0, &[0]), -&x)]);
    let mut s = System::new(1, 1, Field::QX, vec![e]);
    s.var_names = vec!["x".into()];
    s
}

pub fn pair_polynomial() -> System {
    sys(1, &["y1", "y2"], &["y1[2]", "y2[1]"])
}

pub fn pair_exponential() -> System {
    sys(1, &["y1", "y2"], &["y1[2] - y1[0]", "y2[1]"])
}

/// The involutive first-order system in z = (y1, y1_x, y2).
pub fn first_order_triple() -> System {
    sys(1, &["z1", "z2", "z3"], &["z1[1] - z2[0]", "z2[1] - z1[0]", "z3[1]"])
}

pub fn torsion_pair() -> System {
    sys(3, &["y1", "y2", "y3"], &["y3[0,0,2] - y1[1,0,0]", "y3[0,1,1] - y2[1,0,0] - y3[0,0,0]"])
}

pub fn filtration_gap() -> System {
    sys(3, &["y"], &["y[0,0,2]", "y[0,1,1]", "y[1,0,1]"])
}

pub fn primary_codim2() -> System {
    sys(3, &["y"], &["y[0,0,2]", "y[0,1,1]", "y[0,2,0]", "y[1,0,1] - y[0,1,0]"])
}

pub fn embedded_codim2() -> System {
    sys(3, &["y"], &["y[0,0,2]", "y[0,1,1]", "y[0,2,0]", "y[1,0,1]"])
}

pub fn localized_finite() -> System {
    sys(
        4,
        &["y"],
        &[
            "y[0,1,2,2] - y[2,0,3,0]",
            "y[0,2,0,3] - y[1,0,2,2]",
            "y[0,0,0,4]",
            "y[0,0,1,3]",
            "y[0,0,3,1]",
            "y[0,0,4,0]",
        ],
    )
}

pub fn two_components() -> System {
    sys(3, &["y"], &["y[0,0,2]", "y[0,1,1] - y[1,0,1]", "y[0,2,0] - y[1,1,0]"])
}

pub fn divergence(n: usize) -> System {
    let names: Vec<String> = (1..=n).map(|k| format!("y{}", k)).collect();
    let refs: Vec<&str> = names.iter().map(|s| s.as_str()).collect();
    let row = (0..n)
        .map(|i| {
            let mut idx = vec![0; n];
            idx[i] = 1;
            format!("{}[{}]", names[i], idx.iter().map(|d| d.to_string()).collect::<Vec<_>>().join(","))
        })
        .collect::<Vec<_>>()
        .join(" + ");
    sys(n, &refs, &[row.as_str()])
}

pub fn same_row_space(a: &[Equation], b: &[Equation]) -> bool {
    use pdekit::exactalg::Echelon;
    let mut ea: Echelon<JetVar> = Echelon::new();
    for e in a {
        ea.insert(e.terms.clone());
    }
    let mut eb: Echelon<JetVar> = Echelon::new();
    for e in b {
        eb.insert(e.terms.clone());
    }
    ea.rank() == eb.rank() && b.iter().all(|e| ea.contains(&e.terms))
}

pub fn names(prefix: &str, k: usize) -> Vec<String> {
    (1..=k).map(|i| format!("{}{}", prefix, i)).collect()
}
