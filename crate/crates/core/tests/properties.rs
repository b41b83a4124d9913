use proptest::prelude::*;

use sfgswap::analytic::{linear_swap_fidelity, sfg_swap_figures};
use sfgswap::fock::{Complex64, MixedEnsemble, ModeSet, PureState};
use sfgswap::optics::{self, condition_joint, detect, loss, DetectorModel, Outcome};
use sfgswap::optimize::{diqkd_rate, required_sfg_efficiency, LinkScenario};
use sfgswap::sfg::{sfg_evolve, SfgParams};

const TOL: f64 = 1e-12;

fn modes3() -> ModeSet {
    ModeSet::new(["x", "y", "z"], 4, 4).unwrap()
}

/// Random states on three modes with at most `max_total` photons.
fn state3(max_total: u8) -> impl Strategy<Value = PureState> {
    prop::collection::vec(
        (
            (0..=max_total, 0..=max_total, 0..=max_total),
            -1.0..1.0f64,
            -1.0..1.0f64,
        ),
        1..8,
    )
    .prop_map(move |terms| {
        let m = modes3();
        let comps = terms.into_iter().filter_map(|((a, b, c), re, im)| {
            (a + b + c <= max_total).then_some((vec![a, b, c], Complex64::new(re, im)))
        });
        PureState::from_amplitudes(&m, comps).unwrap()
    })
    .prop_filter("nonzero", |s| s.norm_sqr() > 1e-6)
    .prop_map(|s| s.normalized().unwrap())
}

fn sfg_modes() -> ModeSet {
    ModeSet::new(["b_e", "b_l", "c_e", "c_l", "k_e", "k_l"], 6, 8).unwrap()
}

/// Random states of the SFG modes with at most `max_total` photons; the
/// total cutoff leaves room for every κ photon to split in two.
fn sfg_state(max_total: u8) -> impl Strategy<Value = PureState> {
    prop::collection::vec(
        (
            prop::collection::vec(0..=2u8, 6),
            -1.0..1.0f64,
            -1.0..1.0f64,
        ),
        1..8,
    )
    .prop_map(move |terms| {
        let m = sfg_modes();
        let comps = terms.into_iter().filter_map(|(n, re, im)| {
            (n.iter().map(|&x| x as u32).sum::<u32>() <= max_total as u32)
                .then(|| (n, Complex64::new(re, im)))
        });
        PureState::from_amplitudes(&m, comps).unwrap()
    })
    .prop_filter("nonzero", |s| s.norm_sqr() > 1e-6)
    .prop_map(|s| s.normalized().unwrap())
}

fn ensemble3() -> impl Strategy<Value = MixedEnsemble> {
    prop::collection::vec((0.01..1.0f64, state3(3)), 1..4).prop_map(|branches| {
        let mut rho = MixedEnsemble::empty(&modes3());
        let total: f64 = branches.iter().map(|(w, _)| w).sum();
        for (w, s) in branches {
            rho.push(w / total, s).unwrap();
        }
        rho
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn ladder_operators_are_adjoint(psi in state3(3), phi in state3(3), mode in 0..3usize) {
        let label = ["x", "y", "z"][mode];
        let lhs = psi.create(label).unwrap().inner(&phi).unwrap();
        let rhs = psi.inner(&phi.annihilate(label).unwrap()).unwrap();
        prop_assert!((lhs - rhs).norm() < TOL);
    }

    #[test]
    fn commutator_is_identity_with_headroom(psi in state3(3), mode in 0..3usize) {
        let label = ["x", "y", "z"][mode];
        let ac = psi.create(label).unwrap().annihilate(label).unwrap();
        let ca = psi.annihilate(label).unwrap().create(label).unwrap();
        let diff = ac.add(&ca.scaled(Complex64::new(-1.0, 0.0))).unwrap();
        let residual = diff.add(&psi.scaled(Complex64::new(-1.0, 0.0))).unwrap();
        prop_assert!(residual.norm_sqr().sqrt() < TOL);
    }

    #[test]
    fn beamsplitter_is_unitary(
        psi in state3(4),
        phi in state3(4),
        t in 0.0..=1.0f64,
        phase in -3.2..3.2f64,
    ) {
        let u_psi = optics::beamsplitter(&psi, "x", "y", t, phase).unwrap();
        let u_phi = optics::beamsplitter(&phi, "x", "y", t, phase).unwrap();
        prop_assert!(u_psi.truncation().is_zero());
        prop_assert!((u_psi.norm_sqr() - 1.0).abs() < TOL);
        let before = psi.inner(&phi).unwrap();
        let after = u_psi.inner(&u_phi).unwrap();
        prop_assert!((before - after).norm() < TOL);
    }

    #[test]
    fn loss_composes(rho in ensemble3(), a in 0.0..=1.0f64, b in 0.0..=1.0f64) {
        let twice = loss(&loss(&rho, "x", a).unwrap(), "x", b).unwrap();
        let once = loss(&rho, "x", a * b).unwrap();
        prop_assert!(twice.max_density_difference(&once).unwrap() < TOL);
        prop_assert!((twice.trace() - rho.trace()).abs() < TOL);
    }

    #[test]
    fn detection_outcomes_sum_to_one(rho in ensemble3(), eta in 0.0..=1.0f64) {
        let d = DetectorModel::threshold(eta).unwrap();
        let click = detect(&rho, "y", d, Outcome::Click).unwrap().probability;
        let none = detect(&rho, "y", d, Outcome::NoClick).unwrap().probability;
        prop_assert!((click + none - 1.0).abs() < TOL);
        let pnr = DetectorModel::number_resolving(eta).unwrap();
        let total: f64 = (0..=4)
            .map(|n| detect(&rho, "y", pnr, Outcome::Count(n)).unwrap().probability)
            .sum();
        prop_assert!((total - 1.0).abs() < TOL);
    }

    #[test]
    fn sequential_conditioning_matches_joint(rho in ensemble3(), e1 in 0.1..=1.0f64, e2 in 0.1..=1.0f64) {
        let d1 = DetectorModel::threshold(e1).unwrap();
        let d2 = DetectorModel::threshold(e2).unwrap();
        let joint = condition_joint(&rho, &[("x", d1, Outcome::Click), ("z", d2, Outcome::NoClick)]).unwrap();
        let first = detect(&rho, "x", d1, Outcome::Click).unwrap();
        let seq = if first.probability > 0.0 {
            first.probability * detect(&first.state, "z", d2, Outcome::NoClick).unwrap().probability
        } else {
            0.0
        };
        prop_assert!((joint.probability - seq).abs() < TOL);
    }

    #[test]
    fn branch_trace_preserves_trace(rho in ensemble3()) {
        let traced = rho.branch_trace(&["y"]).unwrap();
        prop_assert!((traced.trace() - rho.trace()).abs() < TOL);
        traced.validate().unwrap();
    }

    #[test]
    fn fidelity_is_a_probability(rho in ensemble3(), target in state3(3)) {
        let f = rho.fidelity(&target).unwrap();
        prop_assert!((0.0..=1.0).contains(&f));
    }

    #[test]
    fn sfg_conserves_numbers_and_norm(psi in sfg_state(4), g in 0.0..1.6f64) {
        let out = sfg_evolve(&psi, &SfgParams::with_coupling(g)).unwrap();
        prop_assert!(out.truncation().is_zero());
        prop_assert!((out.norm_sqr() - 1.0).abs() < TOL);
        for (x, k) in [("b_e", "k_e"), ("c_e", "k_e"), ("b_l", "k_l"), ("c_l", "k_l")] {
            let before = psi.number_expectation(x).unwrap() + psi.number_expectation(k).unwrap();
            let after = out.number_expectation(x).unwrap() + out.number_expectation(k).unwrap();
            prop_assert!((before - after).abs() < TOL);
        }
    }

    #[test]
    fn sfg_preserves_inner_products(psi in sfg_state(4), phi in sfg_state(4), g in 0.0..1.6f64) {
        let p = SfgParams::with_coupling(g);
        let a = sfg_evolve(&psi, &p).unwrap();
        let b = sfg_evolve(&phi, &p).unwrap();
        prop_assert!((a.inner(&b).unwrap() - psi.inner(&phi).unwrap()).norm() < TOL);
    }

    #[test]
    fn linear_swap_fidelity_bounded_by_half(p_ab in 1e-4..0.2f64, p_cd in 1e-4..0.2f64) {
        prop_assert!(linear_swap_fidelity(p_ab, p_cd) <= 0.5 + 1e-15);
    }

    #[test]
    fn required_efficiency_inverts_figures(
        target in 1e-15..1e-9f64,
        f_min in 0.5..0.99f64,
        eta_c in 0.1..=1.0f64,
        eta_d in 0.1..=1.0f64,
    ) {
        let r = required_sfg_efficiency(target, f_min, eta_c, eta_d).unwrap();
        let (_, back) = sfg_swap_figures(r.p, eta_c, eta_c * eta_d, r.eta_sfg_min);
        prop_assert!((back - target).abs() / target < 1e-9);
    }

    #[test]
    fn link_rate_is_linear_and_monotone(k in 0.1..10.0f64, d in 0.0..50.0f64) {
        let base = LinkScenario { distance_km: d, ..LinkScenario::reference() };
        let r = diqkd_rate(&base, None).unwrap().heralds_per_min;
        let scaled_rep = LinkScenario { rep_rate: base.rep_rate * k, ..base.clone() };
        prop_assert!((diqkd_rate(&scaled_rep, None).unwrap().heralds_per_min - k * r).abs() <= 1e-12 * k * r);
        let scaled_eta = LinkScenario { eta_sfg: base.eta_sfg * k.min(1.0), ..base.clone() };
        let expect = k.min(1.0) * r;
        prop_assert!((diqkd_rate(&scaled_eta, None).unwrap().heralds_per_min - expect).abs() <= 1e-12 * r);
        let further = LinkScenario { distance_km: d + 1.0, ..base };
        prop_assert!(diqkd_rate(&further, None).unwrap().heralds_per_min < r);
    }
}

#[test]
fn energy_selection_leaves_non_coincident_states_alone() {
    let m = sfg_modes();
    let psi = PureState::from_amplitudes(
        &m,
        [
            (vec![1, 0, 0, 1, 0, 0], Complex64::new(0.6, 0.0)),
            (vec![2, 1, 0, 0, 0, 0], Complex64::new(0.0, 0.8)),
        ],
    )
    .unwrap();
    let out = sfg_evolve(&psi, &SfgParams::with_coupling(0.9)).unwrap();
    assert!((out.inner(&psi).unwrap() - Complex64::new(1.0, 0.0)).norm() < TOL);
}
