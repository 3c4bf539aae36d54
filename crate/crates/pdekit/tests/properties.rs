mod common;

use common::invariants::{check_adjoint, check_all, random_system, small_caps};
use common::*;
use pdekit::involution::Caps;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

proptest! {
    #![proptest_config(ProptestConfig { cases: 200, ..ProptestConfig::default() })]

    #[test]
    fn random_systems_satisfy_invariants(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let s = random_system(&mut rng, true);
        let caps = small_caps(&s);
        if let Err(e) = check_all(&s, &caps) {
            return Err(TestCaseError::fail(format!("{}: {:?}", e, s.render_equations())));
        }
    }

    #[test]
    fn double_adjoint_is_identity(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let s = random_system(&mut rng, true);
        prop_assert!(check_adjoint(&s).is_ok());
    }
}

#[test]
fn named_systems_satisfy_invariants() {
    let all = [
        finite_type(),
        primary_ideal(),
        spencer_pair(),
        spencer_triple(0),
        spencer_triple(1),
        four_variables(),
        variable_coefficients(),
        airy(),
        pair_polynomial(),
        pair_exponential(),
        first_order_triple(),
        torsion_pair(),
        filtration_gap(),
        primary_codim2(),
        embedded_codim2(),
        two_components(),
        divergence(2),
        divergence(3),
    ];
    for s in all {
        let got = check_all(&s, &Caps::default()).unwrap_or_else(|e| panic!("{}: {:?}", e, s.render_equations()));
        assert!(got.is_some(), "{:?} did not complete", s.render_equations());
    }
}
