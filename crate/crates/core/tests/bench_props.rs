use std::path::PathBuf;

use proptest::prelude::*;

use sysid::bench::{match_poles, run_scenario, FreqUnit, Sampling, Scenario};
use sysid::cli::{load_config, scenarios};
use sysid::estimators::Method;
use sysid::model::{NoiseModel, Pole, SignalSpec, SnrKind};
use sysid::pipeline::MethodConfig;

fn cost(e: &Pole, t: &Pole) -> f64 {
    (e.alpha - t.alpha).abs() / t.alpha.abs().max(1e-6) + (e.f - t.f).abs() / t.f.abs().max(1e-6)
}

fn permutations(n: usize) -> Vec<Vec<usize>> {
    if n == 0 {
        return vec![Vec::new()];
    }
    let mut out = Vec::new();
    for p in permutations(n - 1) {
        for pos in 0..=p.len() {
            let mut q = p.clone();
            q.insert(pos, n - 1);
            out.push(q);
        }
    }
    out
}

fn brute_force_cost(est: &[Pole], truth: &[Pole]) -> f64 {
    permutations(truth.len())
        .iter()
        .map(|perm| {
            perm.iter()
                .enumerate()
                .map(|(t, &e)| cost(&est[e], &truth[t]))
                .sum::<f64>()
        })
        .fold(f64::INFINITY, f64::min)
}

fn poles(n: usize) -> impl Strategy<Value = Vec<Pole>> {
    prop::collection::vec((0.001f64..0.5, 0.01f64..0.5), n)
        .prop_map(|v| v.into_iter().map(|(a, f)| Pole::new(a, f)).collect())
}

proptest! {
    #[test]
    fn matching_is_minimum_cost((truth, est) in (1usize..=6).prop_flat_map(|n| (poles(n), poles(n)))) {
        let assignment = match_poles(&est, &truth).unwrap();
        let mut seen = assignment.clone();
        seen.sort_unstable();
        prop_assert_eq!(seen, (0..truth.len()).collect::<Vec<_>>());
        let got: f64 = assignment.iter().enumerate().map(|(t, &e)| cost(&est[e], &truth[t])).sum();
        let best = brute_force_cost(&est, &truth);
        prop_assert!(got <= best * (1.0 + 1e-12) + 1e-12, "{got} vs {best}");
    }

    #[test]
    fn small_perturbations_keep_identity(
        (truth, shuffle, jitter) in (1usize..=6).prop_flat_map(|n| (
            poles(n),
            Just((0..n).collect::<Vec<usize>>()).prop_shuffle(),
            prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), n),
        ))
    ) {
        // frequencies spread apart so a shift below half their spacing is unambiguous
        let truth: Vec<Pole> = truth.iter().enumerate().map(|(i, p)| Pole::new(p.alpha, 0.05 + 0.07 * i as f64)).collect();
        let est: Vec<Pole> = shuffle
            .iter()
            .map(|&t| {
                let (da, df) = jitter[t];
                Pole::new(truth[t].alpha * (1.0 + 0.01 * da), truth[t].f + 0.01 * df)
            })
            .collect();
        let assignment = match_poles(&est, &truth).unwrap();
        for (t, &e) in assignment.iter().enumerate() {
            prop_assert_eq!(shuffle[e], t);
        }
    }
}

#[test]
fn matching_rejects_length_mismatch() {
    assert!(match_poles(&[Pole::new(0.1, 0.1)], &[]).is_err());
}

fn noiseless_scenario(n_trials: usize) -> Scenario {
    Scenario {
        signal: SignalSpec::example2(),
        sampling: Sampling::Uniform {
            step: 5.6,
            count: 50,
        },
        noise: NoiseModel::WhiteGaussian,
        snr_db: f64::INFINITY,
        snr_kind: SnrKind::Average,
        methods: vec![
            MethodConfig::new(Method::PtMle, 20, 4),
            MethodConfig::new(Method::Alm, 20, 4),
            MethodConfig::new(Method::Mp, 16, 4),
        ],
        n_trials,
        base_seed: 9,
        freq_unit: FreqUnit::Radians,
    }
}

#[test]
fn noiseless_scenario_is_unbiased_with_zero_variance() {
    let report = run_scenario(&noiseless_scenario(4)).unwrap();
    assert_eq!(report.rows.len(), 12);
    for row in &report.rows {
        assert_eq!(row.n_valid, 4, "{row:?}");
        assert!(row.bias < 1e-6 * row.truth.abs(), "{row:?}");
        assert!(row.variance < 1e-12, "{row:?}");
    }
}

#[test]
fn report_independent_of_thread_count() {
    let mut sc = noiseless_scenario(24);
    sc.snr_db = 5.0;
    let one = rayon::ThreadPoolBuilder::new()
        .num_threads(1)
        .build()
        .unwrap();
    let many = rayon::ThreadPoolBuilder::new()
        .num_threads(4)
        .build()
        .unwrap();
    let a = one.install(|| run_scenario(&sc)).unwrap();
    let b = many.install(|| run_scenario(&sc)).unwrap();
    let c = run_scenario(&sc).unwrap();
    assert_eq!(a, b);
    assert_eq!(a, c);
}

#[test]
fn example2_report_layout() {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../configs/example2.cfg");
    let mut cfg = load_config(&path).unwrap();
    cfg.bench.as_mut().unwrap().n_trials = 5;
    let scs = scenarios(&cfg, None).unwrap();
    assert_eq!(scs.len(), 1);
    let report = run_scenario(&scs[0]).unwrap();
    assert_eq!(report.rows.len(), 12);
    for method in ["PT-MLE", "ALM", "MP"] {
        for param in ["alpha_1", "f_1", "alpha_2", "f_2"] {
            let row = report
                .row(method, param)
                .unwrap_or_else(|| panic!("{method} {param}"));
            assert_eq!(row.n_valid + row.n_failed, 5);
        }
    }
    let f1 = report.row("MP", "f_1").unwrap();
    assert!((f1.truth - 0.08).abs() < 1e-12, "radian truth {}", f1.truth);
}
