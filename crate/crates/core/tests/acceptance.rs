//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! nonzero if any criterion fails.

use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use realmask::estimate::{decode_error, decode_real_state, qsv_operator, qsv_run, CorrelationMatrix};
use realmask::experiment::{run_equivalence, run_fig3, run_fig4, run_fig5, ExperimentConfig, ExperimentKind};
use realmask::masker::{build_hr_d4, canonical_bell, check_concurrence_relation, magic_basis, mask_state};
use realmask::measure::{apply_depolarizing, sub_seed};
use realmask::optics::{phase_prep_angles, simulate_preparation, solve_prep_angles, PathPolState, Pol};
use realmask::qcore::{
    identity, kron, max_abs_diff, qubit_reductions, random, trace_distance, DensityMatrix, StateVector, C64,
};
use realmask::walk::masking_schedule;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        (v[n / 2 - 1] + v[n / 2]) / 2.0
    }
}

fn rng(tag: &str) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(sub_seed(2024, tag, 0))
}

fn equivalence() -> Outcome {
    let start = Instant::now();
    let cfg = ExperimentConfig::defaults(ExperimentKind::VerifyEquivalence);
    let rep = run_equivalence(&cfg, &masking_schedule()).expect("equivalence run");
    let secs = start.elapsed().as_secs_f64();
    outcome(
        rep.max_infidelity <= 1e-10 && secs < 5.0,
        format!("max pairwise infidelity {:.2e} over {} inputs in {secs:.2}s", rep.max_infidelity, rep.inputs),
    )
}

fn masking_exactness() -> Outcome {
    let mut r = rng("masking");
    let half = DensityMatrix::maximally_mixed(2);
    let mut worst: f64 = 0.0;
    for _ in 0..1000 {
        let out = mask_state(&random::real_density(4, &mut r)).unwrap();
        let (a, b) = qubit_reductions(&out).unwrap();
        worst = worst.max(trace_distance(&a, &half).unwrap()).max(trace_distance(&b, &half).unwrap());
    }
    outcome(worst < 1e-12, format!("max trace distance to I/2 {worst:.2e}"))
}

fn concurrence_relation() -> Outcome {
    let mut r = rng("concurrence");
    let mut worst: f64 = 0.0;
    for _ in 0..1000 {
        let (c, ir) = check_concurrence_relation(&random::pure_state(4, &mut r)).unwrap();
        worst = worst.max((c - (1.0 - ir * ir).max(0.0).sqrt()).abs());
    }
    outcome(worst < 1e-10, format!("max |C - sqrt(1 - I_R^2)| {worst:.2e}"))
}

fn decode_round_trip() -> Outcome {
    let mut r = rng("decode");
    let mut worst: f64 = 0.0;
    for _ in 0..1000 {
        let rho = random::real_density(4, &mut r);
        let t = CorrelationMatrix::exact(&mask_state(&rho).unwrap()).unwrap();
        worst = worst.max(decode_error(&decode_real_state(&t).unwrap(), &rho).unwrap());
    }
    outcome(worst < 1e-12, format!("max trace distance {worst:.2e}"))
}

fn identities() -> Outcome {
    let hr = build_hr_d4();
    let anti = hr.anticommutator_deviation();
    let basis = magic_basis();
    let mut ortho: f64 = 0.0;
    for (j, a) in basis.iter().enumerate() {
        for (k, b) in basis.iter().enumerate() {
            let target = if j == k { 1.0 } else { 0.0 };
            ortho = ortho.max((a.inner(b) - C64::from(target)).norm());
        }
    }
    let mut omega: f64 = 0.0;
    for u in hr.with_identity() {
        let psi = StateVector::new((kron(&u, &identity(2)) * canonical_bell().amplitudes()).iter().copied().collect())
            .unwrap();
        let p = psi.projector().into_matrix();
        let expected = &p + (identity(4) - &p) * C64::from(1.0 / 3.0);
        omega = omega.max(max_abs_diff(&qsv_operator(&u), &expected));
    }
    outcome(
        anti < 1e-12 && ortho < 1e-12 && omega < 1e-12,
        format!("anticommutator {anti:.1e}, orthonormality {ortho:.1e}, verification operator {omega:.1e}"),
    )
}

fn preparation_solvers() -> Outcome {
    let mut r = rng("prep");
    let mut worst: f64 = 0.0;
    for _ in 0..1000 {
        let v = random::real_unit_vector(4, &mut r);
        let st = simulate_preparation(&solve_prep_angles(&[v[0], v[1], v[2], v[3]]).unwrap(), None).unwrap();
        for (k, p) in [-3, -1, 1, 3].into_iter().enumerate() {
            worst = worst.max((st.amplitude(p, Pol::V) - C64::from(v[k])).norm());
        }
    }
    let mut phase_worst: f64 = 0.0;
    for phi in [0.0, 30.0, 45.0, 60.0, 90.0f64].map(f64::to_radians) {
        let (angles, q1) = phase_prep_angles(phi);
        let st = simulate_preparation(&angles, Some(q1)).unwrap();
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let target = PathPolState::new([(-3, Pol::V, C64::from(s)), (-1, Pol::V, C64::from_polar(s, phi))]).unwrap();
        phase_worst = phase_worst.max(1.0 - st.overlap(&target));
    }
    outcome(
        worst < 1e-10 && phase_worst < 1e-12,
        format!("max amplitude error {worst:.1e}; max phase-pipeline infidelity {phase_worst:.1e}"),
    )
}

const SEEDS_FIG3: u64 = 50;

fn fig3_runs() -> Vec<realmask::experiment::Fig3Output> {
    (0..SEEDS_FIG3)
        .map(|seed| run_fig3(&ExperimentConfig { seed, ..ExperimentConfig::defaults(ExperimentKind::Fig3) }).unwrap())
        .collect()
}

fn fig3_fidelities(runs: &[realmask::experiment::Fig3Output], secs_single: f64) -> Outcome {
    let min = runs.iter().flat_map(|r| r.rows.iter().map(|x| x.fidelity)).fold(f64::INFINITY, f64::min);
    let medians: Vec<f64> = (0..4).map(|p| median(runs.iter().map(|r| r.rows[p].fidelity).collect())).collect();
    let in_band = medians.iter().all(|m| (0.985..=0.998).contains(m));
    outcome(
        min >= 0.98 && in_band && secs_single < 60.0,
        format!(
            "min fidelity {min:.4}, per-probe medians [{}] over {SEEDS_FIG3} seeds, single run {secs_single:.2}s",
            medians.iter().map(|m| format!("{m:.4}")).collect::<Vec<_>>().join(", ")
        ),
    )
}

fn fig3_purities(runs: &[realmask::experiment::Fig3Output]) -> Outcome {
    let first = &runs[0];
    let first_ok = first
        .rows
        .iter()
        .all(|r| (0.48..=0.53).contains(&r.purity_avg) && r.purity_avg_std > 0.0 && r.purity_avg_std.is_finite());
    let good_runs = runs.iter().filter(|r| r.rows.iter().all(|x| (0.48..=0.53).contains(&x.purity_a) && (0.48..=0.53).contains(&x.purity_b))).count();
    let frac = good_runs as f64 / runs.len() as f64;
    outcome(
        first_ok && frac >= 0.95,
        format!(
            "seed 0 averages [{}] (bootstrap std [{}]); both reductions in band in {:.0}% of runs",
            first.rows.iter().map(|r| format!("{:.4}", r.purity_avg)).collect::<Vec<_>>().join(", "),
            first.rows.iter().map(|r| format!("{:.4}", r.purity_avg_std)).collect::<Vec<_>>().join(", "),
            100.0 * frac
        ),
    )
}

fn fig4_decoding() -> Outcome {
    let fids: Vec<f64> = (0..100u64)
        .into_par_iter()
        .map(|seed| {
            let cfg = ExperimentConfig { seed, ..ExperimentConfig::defaults(ExperimentKind::Fig4) };
            run_fig4(&cfg).unwrap().reports[0].estimate
        })
        .collect();
    let med = median(fids.clone());
    let (lo, hi) = (fids.iter().copied().fold(f64::INFINITY, f64::min), fids.iter().copied().fold(0.0, f64::max));
    outcome((0.980..=0.995).contains(&med), format!("median decoding fidelity {med:.4} over 100 seeds (range {lo:.4}..{hi:.4})"))
}

fn fig5_curve() -> Outcome {
    let results: Vec<(bool, f64)> = (0..50u64)
        .into_par_iter()
        .map(|seed| {
            let cfg = ExperimentConfig { seed, noise_p: 0.0, ..ExperimentConfig::defaults(ExperimentKind::Fig5) };
            let out = run_fig5(&cfg).unwrap();
            let worst = out.rows.iter().map(|r| (r.concurrence_est - r.theory_cos).abs()).fold(0.0, f64::max);
            (worst < 0.03, worst)
        })
        .collect();
    let frac = results.iter().filter(|r| r.0).count() as f64 / results.len() as f64;
    let worst = results.iter().map(|r| r.1).fold(0.0, f64::max);
    outcome(frac >= 0.95, format!("{:.0}% of 50 runs within 0.03 at every grid point (worst deviation {worst:.4})", 100.0 * frac))
}

fn coverage() -> Outcome {
    let bell = canonical_bell().projector();
    let mut parts = Vec::new();
    let mut pass = true;
    for eps in [0.005, 0.01, 0.02] {
        // Depolarizing weight q gives infidelity 3q/4.
        let rho = apply_depolarizing(&bell, 4.0 * eps / 3.0).unwrap();
        let covered = (0..1000u64)
            .into_par_iter()
            .filter(|&t| {
                let r = qsv_run(&rho, 0, 5000, sub_seed(77, "coverage", t)).unwrap();
                r.ci_low <= eps && eps <= r.ci_high
            })
            .count();
        let frac = covered as f64 / 1000.0;
        pass &= frac >= 0.92;
        parts.push(format!("eps={eps}: {:.1}%", 100.0 * frac));
    }
    outcome(pass, parts.join(", "))
}

fn main() {
    let mut results: Vec<(&str, Outcome)> = Vec::new();
    results.push(("walk/masker/optics equivalence", equivalence()));
    results.push(("masking exactness", masking_exactness()));
    results.push(("concurrence-imaginarity relation", concurrence_relation()));
    results.push(("correlation decoding round trip", decode_round_trip()));
    results.push(("Hurwitz-Radon, magic basis and verification-operator identities", identities()));
    results.push(("preparation angle solvers", preparation_solvers()));

    let start = Instant::now();
    let _ = run_fig3(&ExperimentConfig::defaults(ExperimentKind::Fig3)).unwrap();
    let single = start.elapsed().as_secs_f64();
    let runs = fig3_runs();
    results.push(("masked-probe verification fidelities", fig3_fidelities(&runs, single)));
    results.push(("masked-probe reduced purities", fig3_purities(&runs)));
    results.push(("correlation decoding of probe 4", fig4_decoding()));
    results.push(("concurrence versus phase curve", fig5_curve()));
    results.push(("Agresti-Coull coverage", coverage()));

    let mut failed = 0;
    for (i, (name, o)) in results.iter().enumerate() {
        println!("criterion {:>2} {} — {name}: {}", i + 1, if o.pass { "PASS" } else { "FAIL" }, o.detail);
        failed += usize::from(!o.pass);
    }
    println!("{} of {} criteria passed", results.len() - failed, results.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
