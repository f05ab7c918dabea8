//! Oracle tests for twirling theory: exhaustive group averages against
//! closed-form decay coefficients, the subspace-weight parametrization and
//! its two-branch inversion, fidelity conversions, and the interleaved
//! difference bounds. All closed forms were derived by hand and frozen
//! before the library code existed.

use approx::assert_abs_diff_eq;
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;

use rbsim_core::clifford::{GateSetGroup, GroupKind};
use rbsim_core::error::Error;
use rbsim_core::linalg::{haar_state, max_abs_diff_real, projector};
use rbsim_core::liouville::{compose, vectorize, Ptm};
use rbsim_core::noise::{random_cptp_kraus, tensor, NoiseModel, ToyCrosstalkParams};
use rbsim_core::twirl::{
    alpha_from_epsilon, avg_fidelity_to_depol, delta_alpha, depol_to_avg_fidelity,
    depol_to_error_rate, epsilon_bound, epsilon_from_alpha, exhaustive_twirl,
    experiment2_twirl_coefficients, fixed_weight_channel, interleaved_estimate,
    projector_decompose, r_depol_entry, single_qubit_rescale, AlphaSet, IrrepDecomposition,
};

fn toy_params() -> ToyCrosstalkParams {
    let p01 = 0.40;
    let p11 = 0.03;
    let p21 = 0.02;
    let p02 = 0.38;
    let p12 = 0.05;
    let p22 = 0.04;
    let p_corr = 1.0 - (p01 + p11 + p21 + p02 + p12 + p22);
    ToyCrosstalkParams {
        eps1: true,
        eps2: true,
        p01,
        p11,
        p21,
        p02,
        p12,
        p22,
        p_corr,
    }
}

#[test]
fn subspace_layout_for_product_group() {
    let dec = IrrepDecomposition::for_group(GroupKind::C1xC1).unwrap();
    let subs = dec.subspaces();
    assert_eq!(subs.len(), 4);
    assert_eq!(subs[0].label, "W0");
    assert_eq!(subs[0].members, vec![0]);
    // W1 carries qubit-1 support, W2 qubit-0 support, W3 both.
    assert_eq!(subs[1].members, vec![4, 8, 12]);
    assert_eq!(subs[1].support.as_deref(), Some(&[1][..]));
    assert_eq!(subs[2].members, vec![1, 2, 3]);
    assert_eq!(subs[2].support.as_deref(), Some(&[0][..]));
    assert_eq!(subs[3].dim(), 9);
    // The projectors resolve the identity.
    let total = subs
        .iter()
        .enumerate()
        .fold(nalgebra::DMatrix::zeros(16, 16), |acc, (j, _)| {
            acc + dec.projector(j).mat
        });
    assert_abs_diff_eq!(
        max_abs_diff_real(&total, &nalgebra::DMatrix::identity(16, 16)),
        0.0,
        epsilon = 1e-15
    );
}

#[test]
fn two_qubit_group_twirl_is_depolarizing() {
    let group = GateSetGroup::generate(GroupKind::C2).unwrap();
    let mut rng = ChaCha12Rng::seed_from_u64(17);
    let kraus = random_cptp_kraus(2, 3, &mut rng);
    let noise = NoiseModel::RawKraus { operators: kraus }.compile().unwrap();
    let twirled = exhaustive_twirl(&noise, &group);
    let p = (noise.mat.trace() - 1.0) / 15.0;
    for i in 0..16 {
        for j in 0..16 {
            let expected = if i != j {
                0.0
            } else if i == 0 {
                1.0
            } else {
                p
            };
            assert_abs_diff_eq!(twirled.mat[(i, j)], expected, epsilon = 1e-9);
        }
    }
    let dec = IrrepDecomposition::for_group(GroupKind::C2).unwrap();
    let alphas = projector_decompose(&twirled, &dec).unwrap();
    assert_abs_diff_eq!(alphas.get("W1").unwrap(), p, epsilon = 1e-10);
}

#[test]
fn twirl_preserves_average_fidelity() {
    // Monte Carlo over Haar states: the twirled channel must have the same
    // average fidelity as the original, here compared at 3 standard errors.
    let group = GateSetGroup::generate(GroupKind::C1).unwrap();
    let mut rng = ChaCha12Rng::seed_from_u64(23);
    let kraus = random_cptp_kraus(1, 3, &mut rng);
    let noise = NoiseModel::RawKraus { operators: kraus }.compile().unwrap();
    let twirled = exhaustive_twirl(&noise, &group);
    let p = twirled.mat[(1, 1)];
    let exact = depol_to_avg_fidelity(p, 2);

    let samples = 100_000usize;
    let mut sum = 0.0;
    let mut sum_sq = 0.0;
    for _ in 0..samples {
        let psi = haar_state(2, &mut rng);
        let v = vectorize(&projector(&psi)).unwrap();
        let f = rbsim_core::liouville::expectation(&v, &noise.apply(&v));
        sum += f;
        sum_sq += f * f;
    }
    let mean = sum / samples as f64;
    let var = (sum_sq / samples as f64 - mean * mean).max(0.0);
    let stderr = (var / samples as f64).sqrt();
    assert!(
        (mean - exact).abs() < 3.0 * stderr.max(1e-12),
        "MC fidelity {mean} vs twirled {exact} (stderr {stderr})"
    );
}

#[test]
fn untwirled_channel_is_not_group_covariant() {
    let noise = NoiseModel::ToyCrosstalk(toy_params()).compile().unwrap();
    let dec = IrrepDecomposition::for_group(GroupKind::C1xC1).unwrap();
    let err = projector_decompose(&noise, &dec).unwrap_err();
    assert!(matches!(err, Error::NotGroupCovariant { .. }));
}

#[test]
fn one_sided_twirl_leaves_a_projector_residual() {
    // Twirling over the one-sided group produces a covariant channel that
    // is still not a combination of the support projectors: the group acts
    // with multiplicity and the scalar picture must be refused.
    let noise = NoiseModel::ToyCrosstalk(toy_params()).compile().unwrap();
    let group = GateSetGroup::generate(GroupKind::IxC1).unwrap();
    let twirled = exhaustive_twirl(&noise, &group);
    let dec = IrrepDecomposition::for_group(GroupKind::IxC1).unwrap();
    let err = projector_decompose(&twirled, &dec).unwrap_err();
    assert!(matches!(err, Error::ProjectorResidual { .. }));
}

#[test]
fn one_sided_twirl_coefficient_tables_match_group_average() {
    // The direct coefficient formula must reproduce the exhaustive average
    // over the group acting on qubit 1 alone.
    let noise = NoiseModel::ToyCrosstalk(toy_params()).compile().unwrap();
    let coeffs = experiment2_twirl_coefficients(&noise).unwrap();
    let group = GateSetGroup::generate(GroupKind::IxC1).unwrap();
    let averaged = exhaustive_twirl(&noise, &group);
    assert_abs_diff_eq!(
        max_abs_diff_real(&coeffs.twirled_ptm().mat, &averaged.mat),
        0.0,
        epsilon = 1e-12
    );
}

#[test]
fn one_sided_coefficients_closed_forms() {
    // Second block only: alpha0[3][3] = p02 + p12 - p22 + p_corr and
    // alpha1[0][0] = (1/3)((1 - 2 p_corr) + 2 (p02 - p12 + p22)).
    let params = ToyCrosstalkParams {
        eps1: false,
        eps2: true,
        p01: 0.0,
        p11: 0.0,
        p21: 0.0,
        p02: 0.82,
        p12: 0.07,
        p22: 0.06,
        p_corr: 0.05,
    };
    let noise = NoiseModel::ToyCrosstalk(params).compile().unwrap();
    let coeffs = experiment2_twirl_coefficients(&noise).unwrap();
    assert_abs_diff_eq!(
        coeffs.alpha0[(3, 3)],
        params.p02 + params.p12 - params.p22 + params.p_corr,
        epsilon = 1e-14
    );
    assert_abs_diff_eq!(
        coeffs.alpha1[(0, 0)],
        ((1.0 - 2.0 * params.p_corr) + 2.0 * (params.p02 - params.p12 + params.p22)) / 3.0,
        epsilon = 1e-14
    );
}

#[test]
fn toy_channel_subspace_rates() {
    // Exhaustive twirl over the product group recovers the closed-form
    // rates alpha_1 = (1/3)(1 + 2(c1 - 2 p_corr)) and cyclic variants,
    // with c1 = 1 - 2(p12 + p21) and c2 = 1 - 2(p11 + p22).
    let params = toy_params();
    let noise = NoiseModel::ToyCrosstalk(params).compile().unwrap();
    let group = GateSetGroup::generate(GroupKind::C1xC1).unwrap();
    let twirled = exhaustive_twirl(&noise, &group);
    let dec = IrrepDecomposition::for_group(GroupKind::C1xC1).unwrap();
    let alphas = projector_decompose(&twirled, &dec).unwrap();

    let c1 = 1.0 - 2.0 * (params.p12 + params.p21);
    let c2 = 1.0 - 2.0 * (params.p11 + params.p22);
    let c3 = 2.0 * (params.p01 + params.p02 + params.p_corr) - 1.0;
    let a1 = (1.0 + 2.0 * (c1 - 2.0 * params.p_corr)) / 3.0;
    let a2 = (1.0 + 2.0 * (c2 - 2.0 * params.p_corr)) / 3.0;
    let a3 = (1.0 + 2.0 * (c1 + c2 + 2.0 * c3 - 4.0 * params.p_corr)) / 9.0;
    assert_abs_diff_eq!(alphas.get("W0").unwrap(), 1.0, epsilon = 1e-12);
    assert_abs_diff_eq!(alphas.get("W1").unwrap(), a1, epsilon = 1e-12);
    assert_abs_diff_eq!(alphas.get("W2").unwrap(), a2, epsilon = 1e-12);
    assert_abs_diff_eq!(alphas.get("W3").unwrap(), a3, epsilon = 1e-12);
}

#[test]
fn reference_channel_entries() {
    let dec = IrrepDecomposition::for_group(GroupKind::C1xC1).unwrap();
    let subs = dec.subspaces();
    // Depolarizing W3: -1/5 on the single-qubit subspaces, 1/5 inside W3.
    assert_abs_diff_eq!(
        r_depol_entry(2, &subs[3], subs[1].members[0]).unwrap(),
        -0.2,
        epsilon = 1e-15
    );
    assert_abs_diff_eq!(
        r_depol_entry(2, &subs[3], subs[2].members[2]).unwrap(),
        -0.2,
        epsilon = 1e-15
    );
    assert_abs_diff_eq!(
        r_depol_entry(2, &subs[3], subs[3].members[4]).unwrap(),
        0.2,
        epsilon = 1e-15
    );
    // Depolarizing W1: kills W1 itself, leaves the identity untouched.
    assert_abs_diff_eq!(
        r_depol_entry(2, &subs[1], subs[1].members[1]).unwrap(),
        0.0,
        epsilon = 1e-15
    );
    assert_abs_diff_eq!(r_depol_entry(2, &subs[1], 0).unwrap(), 1.0, epsilon = 1e-15);
    // Any reference channel is the identity on the trivial subspace.
    assert_abs_diff_eq!(r_depol_entry(2, &subs[0], 5).unwrap(), 1.0, epsilon = 1e-15);
}

#[test]
fn epsilon_bounds_by_dimension() {
    assert_abs_diff_eq!(epsilon_bound(3), 4.0 / 3.0, epsilon = 1e-15);
    assert_abs_diff_eq!(epsilon_bound(9), 10.0 / 9.0, epsilon = 1e-15);
}

#[test]
fn alpha_from_epsilon_closed_forms() {
    // alpha_1 = (1 - eps1)(1 - 6 eps3 / 5), alpha_2 likewise, and
    // alpha_3 = (1 - eps1)(1 - eps2)(1 - 4 eps3 / 5).
    let dec = IrrepDecomposition::for_group(GroupKind::C1xC1).unwrap();
    let (e1, e2, e3) = (0.07, 0.11, 0.05);
    let alphas = alpha_from_epsilon(&dec, &[e1, e2, e3]).unwrap();
    assert_abs_diff_eq!(
        alphas.get("W1").unwrap(),
        (1.0 - e1) * (1.0 - 6.0 * e3 / 5.0),
        epsilon = 1e-14
    );
    assert_abs_diff_eq!(
        alphas.get("W2").unwrap(),
        (1.0 - e2) * (1.0 - 6.0 * e3 / 5.0),
        epsilon = 1e-14
    );
    assert_abs_diff_eq!(
        alphas.get("W3").unwrap(),
        (1.0 - e1) * (1.0 - e2) * (1.0 - 4.0 * e3 / 5.0),
        epsilon = 1e-14
    );
}

#[test]
fn alpha_from_epsilon_matches_composed_channels() {
    // Weights realized as actual composed Pauli channels, twirl-decomposed:
    // the parametrization must agree with the compiled composition.
    let dec = IrrepDecomposition::for_group(GroupKind::C1xC1).unwrap();
    let subs = dec.subspaces();
    let eps = [0.12, 0.04, 0.09];
    let mut channel = Ptm::identity(2);
    for (s, &e) in subs[1..].iter().zip(&eps) {
        let factor = fixed_weight_channel(2, s, e).unwrap().compile().unwrap();
        channel = compose(&factor, &channel);
    }
    let alphas = projector_decompose(&channel, &dec).unwrap();
    let predicted = alpha_from_epsilon(&dec, &eps).unwrap();
    for label in ["W0", "W1", "W2", "W3"] {
        assert_abs_diff_eq!(
            alphas.get(label).unwrap(),
            predicted.get(label).unwrap(),
            epsilon = 1e-10
        );
    }
}

#[test]
fn epsilon_inversion_round_trip() {
    let dec = IrrepDecomposition::for_group(GroupKind::C1xC1).unwrap();
    let eps = [0.3, 0.2, 0.4];
    let alphas = alpha_from_epsilon(&dec, &eps).unwrap();
    let recovered = epsilon_from_alpha(&dec, &alphas).unwrap();
    for (got, want) in recovered.values.iter().zip(&eps) {
        assert_abs_diff_eq!(*got, *want, epsilon = 1e-9);
    }
}

#[test]
fn epsilon_inversion_has_a_double_preimage_corner() {
    // (1.2, 1.2, 1.0) and (0.88, 0.88, 5/9) map to the same rates
    // (0.04, 0.04, 0.008); the inversion must flag the ambiguity and pick
    // the branch continuous with zero noise (smaller weight).
    let dec = IrrepDecomposition::for_group(GroupKind::C1xC1).unwrap();
    let a = alpha_from_epsilon(&dec, &[1.2, 1.2, 1.0]).unwrap();
    let b = alpha_from_epsilon(&dec, &[0.88, 0.88, 5.0 / 9.0]).unwrap();
    for label in ["W1", "W2", "W3"] {
        assert_abs_diff_eq!(
            a.get(label).unwrap(),
            b.get(label).unwrap(),
            epsilon = 1e-12
        );
    }
    assert_abs_diff_eq!(a.get("W1").unwrap(), 0.04, epsilon = 1e-12);
    assert_abs_diff_eq!(a.get("W3").unwrap(), 0.008, epsilon = 1e-12);
    let inverted = epsilon_from_alpha(&dec, &a).unwrap();
    assert!(inverted.root_ambiguous);
    assert_abs_diff_eq!(inverted.values[0], 0.88, epsilon = 1e-9);
    assert_abs_diff_eq!(inverted.values[1], 0.88, epsilon = 1e-9);
    assert_abs_diff_eq!(inverted.values[2], 5.0 / 9.0, epsilon = 1e-9);
}

#[test]
fn tensor_noise_has_no_correlated_weight() {
    let a = NoiseModel::Depolarizing { n: 1, p: 0.98 };
    let b = NoiseModel::Depolarizing { n: 1, p: 0.96 };
    let noise = tensor(&a, &b).unwrap();
    let dec = IrrepDecomposition::for_group(GroupKind::C1xC1).unwrap();
    let alphas = projector_decompose(&noise, &dec).unwrap();
    // Qubit-1 subspace decays with the qubit-1 parameter and conversely.
    assert_abs_diff_eq!(alphas.get("W1").unwrap(), 0.96, epsilon = 1e-12);
    assert_abs_diff_eq!(alphas.get("W2").unwrap(), 0.98, epsilon = 1e-12);
    assert_abs_diff_eq!(delta_alpha(&alphas).unwrap(), 0.0, epsilon = 1e-12);
    let eps = epsilon_from_alpha(&dec, &alphas).unwrap();
    assert_abs_diff_eq!(eps.values[0], 0.04, epsilon = 1e-9);
    assert_abs_diff_eq!(eps.values[1], 0.02, epsilon = 1e-9);
    assert_abs_diff_eq!(eps.values[2], 0.0, epsilon = 1e-9);
    assert!(!eps.root_ambiguous);
}

#[test]
fn correlated_weight_shows_up_in_delta_alpha() {
    let dec = IrrepDecomposition::for_group(GroupKind::C1xC1).unwrap();
    let alphas = alpha_from_epsilon(&dec, &[0.02, 0.03, 0.1]).unwrap();
    let delta = delta_alpha(&alphas).unwrap();
    assert!(delta.abs() > 1e-3, "correlated weight must separate alpha_3");
    // And the inversion recovers the correlated weight itself.
    let eps = epsilon_from_alpha(&dec, &alphas).unwrap();
    assert_abs_diff_eq!(eps.values[2], 0.1, epsilon = 1e-9);
}

#[test]
fn nonpositive_rates_are_rejected() {
    let dec = IrrepDecomposition::for_group(GroupKind::C1xC1).unwrap();
    let alphas = AlphaSet {
        labels: vec!["W0".into(), "W1".into(), "W2".into(), "W3".into()],
        values: vec![1.0, 0.9, -0.1, 0.5],
    };
    assert!(matches!(
        epsilon_from_alpha(&dec, &alphas),
        Err(Error::NonPositiveAlpha { .. })
    ));
}

#[test]
fn fidelity_conversions() {
    assert_abs_diff_eq!(depol_to_avg_fidelity(0.98, 2), 0.99, epsilon = 1e-15);
    assert_abs_diff_eq!(avg_fidelity_to_depol(0.99, 2), 0.98, epsilon = 1e-12);
    assert_abs_diff_eq!(depol_to_error_rate(0.98, 2), 0.01, epsilon = 1e-15);
    assert_abs_diff_eq!(depol_to_error_rate(0.98, 4), 0.015, epsilon = 1e-15);
    // Rescaling spreads the Clifford-level infidelity over 1.875 rotations.
    assert_abs_diff_eq!(
        single_qubit_rescale(0.99),
        1.0 - 0.01 / 1.875,
        epsilon = 1e-15
    );
}

#[test]
fn interleaved_estimate_values_and_bounds() {
    let est = interleaved_estimate(0.99, 0.9603, 2).unwrap();
    assert_abs_diff_eq!(est.r_est, 0.015, epsilon = 1e-12);
    assert_abs_diff_eq!(est.bound_simple, 0.015, epsilon = 1e-12);
    let refined = 2.0 * 3.0 * 0.01 / (0.99 * 4.0)
        + 4.0 * (0.01_f64).sqrt() * (3.0_f64).sqrt() / 0.99;
    assert_abs_diff_eq!(est.bound_refined, refined, epsilon = 1e-12);
    assert_abs_diff_eq!(est.bound, est.bound_simple.min(est.bound_refined), epsilon = 1e-15);
    assert!(interleaved_estimate(0.0, 0.5, 2).is_err());
}
