//! Randomized invariants across modules.

use proptest::prelude::*;

use realmask::estimate::{decode_error, decode_real_state, CorrelationMatrix};
use realmask::masker::{masker_matrix, mask_state};
use realmask::measure::{
    apply_depolarizing, counts_from_csv, counts_to_csv, poisson_resample, sample_counts, PauliSetting, Setting,
};
use realmask::optics::{masking_layout, optical_masker_output, simulate_preparation, solve_prep_angles, OpticalLayout, Pol};
use realmask::qcore::{purity, qubit_reductions, trace_distance, DensityMatrix, Pauli, StateVector, C64};
use realmask::walk::{masking_schedule, walk_masker_output};

fn real_amplitudes() -> impl Strategy<Value = [f64; 4]> {
    prop::array::uniform4(-1.0..1.0f64)
        .prop_filter("nonzero", |v| v.iter().map(|x| x * x).sum::<f64>() > 1e-3)
        .prop_map(|v| {
            let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
            v.map(|x| x / n)
        })
}

fn distribution() -> impl Strategy<Value = [f64; 4]> {
    prop::array::uniform4(0.0..1.0f64)
        .prop_filter("nonzero", |v| v.iter().sum::<f64>() > 1e-3)
        .prop_map(|v| {
            let s: f64 = v.iter().sum();
            v.map(|x| x / s)
        })
}

fn pauli() -> impl Strategy<Value = Pauli> {
    prop::sample::select(Pauli::ALL.to_vec())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn masked_real_states_have_maximally_mixed_marginals(a in real_amplitudes()) {
        let rho = StateVector::from_real(&a).unwrap().projector();
        let (ra, rb) = qubit_reductions(&mask_state(&rho).unwrap()).unwrap();
        let half = DensityMatrix::maximally_mixed(2);
        prop_assert!(trace_distance(&ra, &half).unwrap() < 1e-12);
        prop_assert!(trace_distance(&rb, &half).unwrap() < 1e-12);
    }

    #[test]
    fn walk_and_optics_reproduce_the_masker(a in real_amplitudes()) {
        let psi = StateVector::from_real(&a).unwrap();
        let m = masker_matrix().apply(&psi).unwrap();
        let w = walk_masker_output(&psi, &masking_schedule()).unwrap();
        let o = optical_masker_output(&a, &masking_layout().unwrap()).unwrap();
        prop_assert!(1.0 - m.overlap(&w) < 1e-12);
        prop_assert!(1.0 - m.overlap(&o) < 1e-12);
    }

    #[test]
    fn preparation_hits_target_amplitudes(a in real_amplitudes()) {
        let st = simulate_preparation(&solve_prep_angles(&a).unwrap(), None).unwrap();
        for (k, p) in [-3, -1, 1, 3].into_iter().enumerate() {
            prop_assert!((st.amplitude(p, Pol::V) - C64::from(a[k])).norm() < 1e-10);
        }
        prop_assert!((st.norm_squared() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn decoding_inverts_masking(a in real_amplitudes(), p in 0.0..1.0f64) {
        let rho = apply_depolarizing(&StateVector::from_real(&a).unwrap().projector(), p).unwrap();
        let t = CorrelationMatrix::exact(&mask_state(&rho).unwrap()).unwrap();
        prop_assert!(decode_error(&decode_real_state(&t).unwrap(), &rho).unwrap() < 1e-12);
    }

    #[test]
    fn depolarizing_only_lowers_purity(a in real_amplitudes(), p in 0.0..1.0f64) {
        let pure = StateVector::from_real(&a).unwrap().projector();
        let noisy = apply_depolarizing(&pure, p).unwrap();
        prop_assert!(purity(&noisy) <= purity(&pure) + 1e-12);
        prop_assert!(purity(&noisy) >= 0.25 - 1e-12);
    }

    #[test]
    fn sampled_counts_are_deterministic_and_complete(
        probs in distribution(), shots in 0u64..20_000, seed in any::<u64>(), x in pauli(), y in pauli()
    ) {
        let setting = Setting::Pair(PauliSetting { first: x, second: y });
        let a = sample_counts(&probs, shots, seed, setting).unwrap();
        let b = sample_counts(&probs, shots, seed, setting).unwrap();
        prop_assert_eq!(&a.counts, &b.counts);
        prop_assert_eq!(a.counts.iter().sum::<u64>(), shots);
        for (c, p) in a.counts.iter().zip(probs) {
            if p == 0.0 {
                prop_assert_eq!(*c, 0);
            }
        }
    }

    #[test]
    fn poisson_resampling_keeps_empty_outcomes_empty(probs in distribution(), seed in any::<u64>()) {
        let probs = [probs[0] + probs[1], 0.0, probs[2] + probs[3], 0.0];
        let setting = Setting::Pair(PauliSetting { first: Pauli::Z, second: Pauli::Z });
        let table = sample_counts(&probs, 1000, seed, setting).unwrap();
        let r = poisson_resample(&table, seed ^ 1);
        prop_assert_eq!(r.counts[1], 0);
        prop_assert_eq!(r.counts[3], 0);
    }

    #[test]
    fn counts_csv_round_trips(probs in distribution(), shots in 1u64..5000, seed in any::<u64>(), x in pauli()) {
        let tables = vec![
            sample_counts(&probs, shots, seed, Setting::Pair(PauliSetting { first: x, second: Pauli::Y })).unwrap(),
            sample_counts(&[probs[0] + probs[1], probs[2] + probs[3]], shots, seed, Setting::Local(realmask::qcore::Subsystem::B, x)).unwrap(),
        ];
        let back = counts_from_csv(&counts_to_csv(&tables).unwrap()).unwrap();
        prop_assert_eq!(back, tables);
    }
}

#[test]
fn optical_layout_text_is_stable() {
    let text = masking_layout().unwrap().to_text();
    let again = OpticalLayout::from_text(&text).unwrap().to_text();
    assert_eq!(text, again);
}
