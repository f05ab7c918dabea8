//! Built-in verification suite.
//!
//! Fast structural checks over the group tables, the twirling map, the
//! rotation-word table and the subspace-weight inversion, runnable from
//! the installed binary with no input files. The check cores take their
//! inputs as parameters so the test suite can verify they actually detect
//! mutations (a wrong generator set, a perturbed decay rate) rather than
//! passing vacuously.

use rbsim_core::clifford::{
    average_rotations_per_c1, c1_unitary, closure_from_generators, cnot_matrix,
    hadamard_matrix, phase_matrix, CliffordElement, GateSetGroup, GroupKind,
};
use rbsim_core::fit::{fit, DecayModel};
use rbsim_core::linalg::{c, ComplexMatrix};
use rbsim_core::noise::NoiseModel;
use rbsim_core::protocols::{run_standard_rb, Protocol, RbConfig, SequenceMode};
use rbsim_core::twirl::{
    alpha_from_epsilon, epsilon_from_alpha, exhaustive_twirl, r_depol_entry,
    IrrepDecomposition,
};

/// Closure size guard, above the largest expected order.
const CLOSURE_LIMIT: usize = 20_000;

/// Name and outcome of one check; `Ok` carries the pass detail line.
pub struct CheckReport {
    pub name: &'static str,
    pub outcome: Result<String, String>,
}

/// Runs every check in a fixed order.
pub fn run_all() -> Vec<CheckReport> {
    vec![
        CheckReport {
            name: "group-orders",
            outcome: group_orders_check(),
        },
        CheckReport {
            name: "twirl-depolarizing",
            outcome: twirl_depolarizing_check(),
        },
        CheckReport {
            name: "decomposition-words",
            outcome: decomposition_words_check(),
        },
        CheckReport {
            name: "weight-round-trip",
            outcome: weight_round_trip_check(0.0),
        },
        CheckReport {
            name: "reference-decay",
            outcome: reference_decay_check(),
        },
    ]
}

/// The Hadamard and phase gates, which generate the one-qubit gate set.
pub fn one_qubit_generators() -> Vec<CliffordElement> {
    [hadamard_matrix(), phase_matrix()]
        .iter()
        .map(|u| CliffordElement::from_unitary(u).expect("generator is Clifford"))
        .collect()
}

/// Per-qubit Hadamard and phase gates plus the controlled-NOT, which
/// generate the two-qubit gate set.
pub fn two_qubit_generators() -> Vec<CliffordElement> {
    let identity = CliffordElement::identity(1);
    let h = CliffordElement::from_unitary(&hadamard_matrix()).expect("generator is Clifford");
    let s = CliffordElement::from_unitary(&phase_matrix()).expect("generator is Clifford");
    let cnot = CliffordElement::from_unitary(&cnot_matrix()).expect("generator is Clifford");
    vec![
        h.tensor(&identity),
        identity.tensor(&h),
        s.tensor(&identity),
        identity.tensor(&s),
        cnot,
    ]
}

/// Closes a generator set and compares the resulting order.
pub fn closure_order_check(
    generators: &[CliffordElement],
    expected: usize,
) -> Result<String, String> {
    let elements = closure_from_generators(generators, CLOSURE_LIMIT)
        .map_err(|e| format!("closure failed: {e}"))?;
    if elements.len() == expected {
        Ok(format!("closure order {expected}"))
    } else {
        Err(format!(
            "closure produced {} elements, expected {expected}",
            elements.len()
        ))
    }
}

fn group_orders_check() -> Result<String, String> {
    let one = closure_order_check(&one_qubit_generators(), 24)?;
    let two = closure_order_check(&two_qubit_generators(), 11_520)?;
    Ok(format!("one-qubit {one}, two-qubit {two}"))
}

/// Twirling a non-Pauli channel over the one-qubit group must leave a
/// depolarizing channel: diagonal with one uniform rate.
fn twirl_depolarizing_check() -> Result<String, String> {
    let gamma: f64 = 0.3;
    let damping = NoiseModel::RawKraus {
        operators: vec![
            ComplexMatrix::from_row_slice(
                2,
                2,
                &[c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c((1.0 - gamma).sqrt(), 0.0)],
            ),
            ComplexMatrix::from_row_slice(
                2,
                2,
                &[c(0.0, 0.0), c(gamma.sqrt(), 0.0), c(0.0, 0.0), c(0.0, 0.0)],
            ),
        ],
    };
    let noise = damping.compile().map_err(|e| e.to_string())?;
    let group = GateSetGroup::generate(GroupKind::C1).map_err(|e| e.to_string())?;
    let twirled = exhaustive_twirl(&noise, &group);
    let p = (twirled.mat.trace() - 1.0) / 3.0;
    let mut defect = 0.0f64;
    for i in 0..4 {
        for j in 0..4 {
            let want = match (i, j) {
                (0, 0) => 1.0,
                _ if i == j => p,
                _ => 0.0,
            };
            defect = defect.max((twirled.mat[(i, j)] - want).abs());
        }
    }
    if defect < 1e-10 {
        Ok(format!("depolarizing defect {defect:.2e}"))
    } else {
        Err(format!("twirl deviates from depolarizing by {defect:.2e}"))
    }
}

/// Every rotation word must reproduce a distinct group element, and the
/// average word length must equal the documented 1.875 rotations.
fn decomposition_words_check() -> Result<String, String> {
    let group = GateSetGroup::generate(GroupKind::C1).map_err(|e| e.to_string())?;
    let mut seen = Vec::new();
    for index in 1..=24 {
        let unitary = c1_unitary(index).map_err(|e| e.to_string())?;
        let element = CliffordElement::from_unitary(&unitary)
            .map_err(|e| format!("word {index} is not Clifford: {e}"))?;
        let id = group
            .id_of(&element)
            .ok_or_else(|| format!("word {index} leaves the group"))?;
        if seen.contains(&id) {
            return Err(format!("word {index} duplicates element {id}"));
        }
        seen.push(id);
    }
    let average = average_rotations_per_c1();
    if (average - 1.875).abs() > 1e-15 {
        return Err(format!("average rotation count {average}, expected 1.875"));
    }
    Ok("24 distinct words, average 1.875 rotations".into())
}

/// Round-trips subspace weights through the per-subspace decay rates on a
/// weight grid, with reference-channel spot values pinned.
///
/// `alpha_perturbation` is added to every decay rate before inversion;
/// zero must round-trip to 1e-9 while a perturbation of 1e-3 must be
/// detected, which is what the mutation tests assert.
pub fn weight_round_trip_check(alpha_perturbation: f64) -> Result<String, String> {
    let dec = IrrepDecomposition::for_group(GroupKind::C1xC1).map_err(|e| e.to_string())?;
    let w3 = dec
        .subspaces()
        .iter()
        .find(|s| s.label == "W3")
        .ok_or("decomposition lacks subspace W3")?;
    let spot_low = r_depol_entry(2, w3, 4).map_err(|e| e.to_string())?;
    let spot_high = r_depol_entry(2, w3, 5).map_err(|e| e.to_string())?;
    if (spot_low + 0.2).abs() > 1e-15 || (spot_high - 0.2).abs() > 1e-15 {
        return Err(format!(
            "reference-channel spot values ({spot_low}, {spot_high}), expected (-0.2, 0.2)"
        ));
    }
    let grid = [0.04, 0.12, 0.28];
    let mut worst = 0.0f64;
    for &e1 in &grid {
        for &e2 in &grid {
            for &e3 in &grid {
                let mut alphas =
                    alpha_from_epsilon(&dec, &[e1, e2, e3]).map_err(|e| e.to_string())?;
                for value in &mut alphas.values {
                    *value += alpha_perturbation;
                }
                let eps = epsilon_from_alpha(&dec, &alphas).map_err(|e| e.to_string())?;
                for (recovered, original) in eps.values.iter().zip([e1, e2, e3]) {
                    worst = worst.max((recovered - original).abs());
                }
            }
        }
    }
    if worst < 1e-9 {
        Ok(format!("worst recovered weight error {worst:.2e}"))
    } else {
        Err(format!("weight round trip off by {worst:.2e}"))
    }
}

/// An analytic depolarizing run must fit back to its decay parameter.
fn reference_decay_check() -> Result<String, String> {
    let mut config = RbConfig::new(
        Protocol::Standard,
        GroupKind::C1,
        (1..=8).collect(),
        1,
        7,
    );
    config.sequence_mode = SequenceMode::Averaged;
    config.noise = NoiseModel::Depolarizing { n: 1, p: 0.98 };
    let dataset = run_standard_rb(&config).map_err(|e| e.to_string())?;
    let series = dataset.series("survival");
    let result = fit(DecayModel::SingleExp, &series, None).map_err(|e| e.to_string())?;
    if !result.converged {
        return Err("reference decay fit did not converge".into());
    }
    let p = result.value_of("p").expect("model has a rate slot");
    if (p - 0.98).abs() < 1e-6 {
        Ok(format!("recovered p = {p:.8}"))
    } else {
        Err(format!("recovered p = {p}, expected 0.98"))
    }
}
