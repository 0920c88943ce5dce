//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any criterion fails.

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::process::ExitCode;
use std::time::Instant;

use intrinsic_core::catalog;
use intrinsic_core::certificate::{certify, Verdict};
use intrinsic_core::delay::{extend_point, lift_lipschitz, lift_map, max_delay_lipschitz, DelayDistribution};
use intrinsic_core::lipschitz::{lipschitz_linear, verify_lipschitz, LipschitzMatrix};
use intrinsic_core::matrix::{Matrix, SparseMatrix};
use intrinsic_core::models::{
    build_cgn, build_lifted_linear, constant_history, Activation, CgnSpec,
    LinearDelayedSpec,
};
use intrinsic_core::network::{NetworkMap, StateVector};
use intrinsic_core::spectral::{
    jsr_bruteforce, jsr_upper_bound_ri, ri_closure, spectral_radius_exact, spectral_radius_power, MatrixSet,
    PowerOptions,
};
use intrinsic_core::switched::{
    contraction_estimate, simulate_instance, simulate_instance_with, DelaySchedule, SimulationOptions,
    SwitchSchedule, SwitchedSet, TauSchedule,
};
use proptest::prelude::*;
use proptest::test_runner::{Config, TestCaseError, TestRunner};

type Outcome = Result<String, String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn sv(x: &[f64]) -> StateVector {
    StateVector::from_slice(x).unwrap()
}

fn rho(a: &LipschitzMatrix) -> f64 {
    spectral_radius_power(a.entries(), &PowerOptions::default()).unwrap()
}

fn rho_tol(a: &LipschitzMatrix, tol: f64) -> f64 {
    spectral_radius_power(a.entries(), &PowerOptions::with_tol(tol)).unwrap()
}

fn singleton(spec: &CgnSpec) -> SwitchedSet {
    let net = build_cgn(spec).unwrap();
    SwitchedSet::new(vec![net.map], vec![net.lipschitz]).unwrap()
}

fn linear_set(ms: &[&Matrix]) -> SwitchedSet {
    let maps = ms.iter().enumerate().map(|(i, m)| NetworkMap::linear((*m).clone(), format!("m{i}")).unwrap()).collect();
    let lips = ms.iter().map(|m| lipschitz_linear(m).unwrap()).collect();
    SwitchedSet::new(maps, lips).unwrap()
}

fn close(label: &str, got: f64, want: f64, tol: f64) -> Result<String, String> {
    ensure((got - want).abs() <= tol, || format!("{label}: got {got:.6}, want {want} ± {tol}"))?;
    Ok(format!("{label}={got:.4}"))
}

fn spectral_regressions() -> Outcome {
    let tol = 1e-3;
    let mut seen = Vec::new();
    seen.push(close("sensitive", rho(&build_cgn(&catalog::cgn_delay_sensitive()).unwrap().lipschitz), 1.35, tol)?);
    seen.push(close("robust", rho(&build_cgn(&catalog::cgn_delay_robust()).unwrap().lipschitz), 0.95, tol)?);
    seen.push(close("lifted", rho(&build_lifted_linear(&catalog::lifted_linear_robust()).unwrap().lipschitz), 0.822, tol)?);
    seen.push(close("marginal", rho(&build_lifted_linear(&catalog::lifted_linear_marginal()).unwrap().lipschitz), 1.0, tol)?);

    let rows = catalog::switched_linear_rows().lipschitz_set().unwrap();
    let mut radii: Vec<f64> = rows.members().iter().map(|m| rho(&lipschitz_linear(m).unwrap())).collect();
    radii.sort_by(f64::total_cmp);
    radii.dedup_by(|a, b| (*a - *b).abs() < 1e-12);
    ensure(radii.len() == 2, || format!("row-switched radii {radii:?}"))?;
    // Reference values with two decimals carry ±0.005 of rounding, which
    // swamps 1e-3; they are matched at the precision they are quoted with.
    close("rows-min", radii[0], 0.39, 0.005)?;
    close("rows-max", radii[1], 0.59, 0.005)?;
    seen.push(format!("rows={{{:.4},{:.4}}} (two-decimal references)", radii[0], radii[1]));

    let control = ri_closure(&catalog::switched_control().lipschitz_set().unwrap()).unwrap();
    let mut radii: Vec<f64> = control.members().iter().map(|m| rho(&lipschitz_linear(m).unwrap())).collect();
    radii.sort_by(f64::total_cmp);
    let mut want = [0.9097, 0.9106, 0.9104, 0.9099];
    want.sort_by(f64::total_cmp);
    ensure(radii.len() == 4, || format!("control closure has {} members", radii.len()))?;
    for (g, w) in radii.iter().zip(want) {
        close("control", *g, w, tol)?;
    }
    seen.push(format!("control={:.4?}", radii));

    let (g, h) = catalog::switched_cgn_pair(true);
    let pair = MatrixSet::new(vec![
        build_cgn(&g).unwrap().lipschitz.to_dense(),
        build_cgn(&h).unwrap().lipschitz.to_dense(),
    ])
    .unwrap();
    seen.push(close("pair-jsr", jsr_upper_bound_ri(&pair, 1e-10).unwrap().upper, 0.95, tol)?);
    Ok(seen.join(" "))
}

fn fixed_point_reproduction() -> Outcome {
    let set = singleton(&catalog::cgn_delay_robust());
    let x_star = catalog::ROBUST_FIXED_POINT;
    let printed = [-0.386, 1.595];
    ensure(x_star.iter().zip(printed).all(|(a, b)| (a - b).abs() < 1e-3), || "fixed point drifted".into())?;
    let mut out = Vec::new();
    for (name, delays) in [
        ("undelayed", DelaySchedule::none(2)),
        ("constant", DelaySchedule::constant(catalog::constant_delays())),
        ("periodic", catalog::periodic_delays()),
        ("uniform", catalog::uniform_delays(catalog::UNIFORM_DELAY_SEED)),
    ] {
        let opts = SimulationOptions { reference: Some(printed.to_vec()), ..Default::default() };
        let start = extend_point(&sv(&[0.0, 0.0]), delays.bound());
        let t = simulate_instance_with(&set, &SwitchSchedule::Constant(0), &delays, &start, 500, &opts).unwrap();
        let gap = t.terminal_gap().unwrap();
        ensure(gap < 1e-2, || format!("{name}: terminal gap {gap:.3e}"))?;
        out.push(format!("{name}={gap:.1e}"));
    }
    Ok(out.join(" "))
}

fn destabilisation() -> Outcome {
    let set = singleton(&catalog::cgn_delay_sensitive());
    let opts = SimulationOptions { reference: Some(vec![0.0, 0.0]), ..Default::default() };
    let plain = DelaySchedule::none(2);
    let t = simulate_instance_with(&set, &SwitchSchedule::Constant(0), &plain, &extend_point(&sv(&[1.0, 1.0]), 0), 500, &opts)
        .unwrap();
    let settled = t.gaps[500];
    ensure(settled < 1e-3, || format!("undelayed gap {settled:.3e} at step 500"))?;
    let delayed = DelaySchedule::constant(catalog::constant_delays());
    let t = simulate_instance_with(&set, &SwitchSchedule::Constant(0), &delayed, &extend_point(&sv(&[1.0, 1.0]), 3), 500, &opts)
        .unwrap();
    let low = t.gaps[200..=500].iter().copied().fold(f64::INFINITY, f64::min);
    ensure(low > 0.1, || format!("delayed gap fell to {low:.3e}"))?;
    Ok(format!("undelayed gap {settled:.1e}, delayed gap ≥ {low:.3} on [200,500]"))
}

fn switched_divergence() -> Outcome {
    let eps = 0.1;
    let (p, q) = catalog::jordan_pair(eps);
    let set = linear_set(&[&p, &q]);
    let d = DelaySchedule::none(2);
    let x0 = extend_point(&sv(&[1.0, 1.0]), 0);
    let t = simulate_instance(&set, &SwitchSchedule::Cycle(vec![0, 1]), &d, &x0, 5000).unwrap();
    let at = t.diverged_at.ok_or("alternating instance did not diverge")?;
    for (name, i) in [("P", 0), ("Q", 1)] {
        let opts = SimulationOptions { reference: Some(vec![0.0, 0.0]), ..Default::default() };
        let t = simulate_instance_with(&set, &SwitchSchedule::Constant(i), &d, &x0, 5000, &opts).unwrap();
        let gap = t.terminal_gap().unwrap();
        ensure(gap < 1e-12, || format!("{name} alone ends at gap {gap:.3e}"))?;
    }
    let b = jsr_bruteforce(&MatrixSet::new(vec![p.abs(), q.abs()]).unwrap(), 2).unwrap();
    let rho_u = 0.5 * (1.0 + 2.0 * eps * eps + (1.0 + 4.0 * eps * eps).sqrt());
    ensure(b.lower > 1.0, || format!("depth-2 lower bound {}", b.lower))?;
    close("lower", b.lower, rho_u.sqrt(), 1e-9)?;
    Ok(format!("diverged at step {at}; P, Q alone → 0; depth-2 lower {:.6}", b.lower))
}

fn switched_contraction() -> Outcome {
    let (g, h) = catalog::switched_cgn_pair(true);
    let (g, h) = (build_cgn(&g).unwrap(), build_cgn(&h).unwrap());
    let set = SwitchedSet::new(vec![g.map, h.map], vec![g.lipschitz, h.lipschitz]).unwrap();
    let d = DelaySchedule::none(2);
    let est = contraction_estimate(
        &set,
        &SwitchSchedule::Cycle(vec![0, 0, 0, 1, 1, 1]),
        &d,
        &extend_point(&sv(&[2.0, 3.0]), 0),
        &extend_point(&sv(&[-2.0, -3.0]), 0),
        1000,
    )
    .unwrap();
    let hit = est.gaps.iter().position(|&g| g < 1e-6).ok_or("gap never fell below 1e-6")?;
    let rate = est.rate.ok_or("no resolvable tail")?;
    ensure(rate <= 0.97, || format!("fitted rate {rate:.4}"))?;
    Ok(format!("gap < 1e-6 at step {hit}, fitted rate {rate:.4}"))
}

fn nonneg_matrix(n: impl Strategy<Value = usize>) -> impl Strategy<Value = Matrix> {
    n.prop_flat_map(|n| {
        proptest::collection::vec(prop_oneof![1 => Just(0.0), 3 => 0.0..1.0f64], n * n)
            .prop_map(move |v| Matrix::from_vec(n, n, v).unwrap())
    })
}

fn run(cases: u32, seed_name: &str, test: impl Fn(&mut TestRunner) -> Result<(), String>) -> Result<(), String> {
    let mut runner = TestRunner::new_with_rng(
        Config { cases, failure_persistence: None, ..Config::default() },
        proptest::test_runner::TestRng::from_seed(
            proptest::test_runner::RngAlgorithm::ChaCha,
            &{
                let mut s = [0u8; 32];
                for (i, b) in seed_name.bytes().enumerate() {
                    s[i % 32] ^= b;
                }
                s
            },
        ),
    );
    test(&mut runner).map_err(|e| format!("{seed_name}: {e}"))
}

fn ring_buffer(a: &Matrix, b: &Matrix, tau: &TauSchedule, x0: &[f64], steps: usize) -> Vec<Vec<f64>> {
    let n = x0.len();
    let mut xs = vec![x0.to_vec()];
    for k in 0..steps {
        let back = k as isize - tau.at(k) as isize;
        let delayed = if back < 0 { x0.to_vec() } else { xs[back as usize].clone() };
        let cur = &xs[k];
        let next: Vec<f64> = (0..n)
            .map(|i| (0..n).map(|j| a.get(i, j) * cur[j] + b.get(i, j) * delayed[j]).sum())
            .collect();
        xs.push(next);
    }
    xs
}

fn oracle_equivalence() -> Outcome {
    run(1000, "power-vs-exact", |r| {
        r.run(&nonneg_matrix(1usize..=6), |m| {
            let exact = spectral_radius_exact(&m).unwrap();
            let power = spectral_radius_power(&m.to_sparse(), &PowerOptions::default()).unwrap();
            prop_assert!((exact - power).abs() <= 1e-6 * exact.max(1.0), "exact {} power {}", exact, power);
            Ok(())
        })
        .map_err(|e| e.to_string())
    })?;

    let instance = (1usize..=3, 1usize..=6).prop_flat_map(|(n, l)| {
        (
            proptest::collection::vec(-0.6..0.6f64, n * n),
            proptest::collection::vec(-0.6..0.6f64, n * n),
            proptest::collection::vec(1..=l, 1..8),
            proptest::collection::vec(-2.0..2.0f64, n),
            Just((n, l)),
        )
    });
    run(1000, "lifted-vs-ring-buffer", |r| {
        r.run(&instance, |(a, b, cycle, x0, (n, l))| {
            let (a, b) = (Matrix::from_vec(n, n, a).unwrap(), Matrix::from_vec(n, n, b).unwrap());
            let tau = TauSchedule::Cycle(cycle);
            let spec = LinearDelayedSpec::new(a.clone(), b.clone(), l, tau.clone()).unwrap();
            let lifted = build_lifted_linear(&spec).unwrap();
            let set = SwitchedSet::new(vec![lifted.map], vec![lifted.lipschitz]).unwrap();
            let start = constant_history(&sv(&x0), l);
            let unbounded = SimulationOptions { divergence_bound: f64::INFINITY, reference: None };
            let traj =
                simulate_instance_with(&set, &SwitchSchedule::Constant(0), &lifted.schedule, &start, 100, &unbounded).unwrap();
            prop_assert_eq!(traj.states.len(), 101);
            let reference = ring_buffer(&a, &b, &tau, &x0, 100);
            for (k, want) in reference.iter().enumerate() {
                let got = &traj.states[k].current()[..n];
                for (g, w) in got.iter().zip(want) {
                    prop_assert!((g - w).abs() <= 1e-9 * w.abs().max(1.0), "step {}: {} vs {}", k, g, w);
                }
            }
            Ok(())
        })
        .map_err(|e| e.to_string())
    })?;

    let lifted_case = (2usize..=4, 0usize..=3).prop_flat_map(|(n, l)| {
        (
            proptest::collection::vec(-1.0..1.0f64, n * n),
            0.05..1.0f64,
            proptest::collection::vec(-1.0..1.0f64, n),
            proptest::collection::vec(0..=l, n * n),
            any::<u64>(),
            Just((n, l)),
        )
    });
    run(100, "lifted-lipschitz-validity", |r| {
        r.run(&lifted_case, |(w, eps, c, d, seed, (n, l))| {
            let spec = CgnSpec::new(Matrix::from_vec(n, n, w).unwrap(), eps, Activation::Tanh, c).unwrap();
            let net = build_cgn(&spec).unwrap();
            let delays = DelayDistribution::new(n, l, d).unwrap();
            let fd = lift_map(&net.map, &delays).unwrap().as_network_map();
            let ad = lift_lipschitz(&net.lipschitz, &delays).unwrap();
            let bx = vec![(-3.0, 3.0); n * (l + 1)];
            let report = verify_lipschitz(&fd, &ad, 400, &bx, seed).unwrap();
            prop_assert!(report.passed, "margin {}", report.worst_margin);
            Ok(())
        })
        .map_err(|e| e.to_string())
    })?;
    Ok("power≡exact (1000), lifted≡ring buffer (1000), lifted Lipschitz valid (100)".into())
}

fn scaled_to(m: &Matrix, target: f64) -> Option<LipschitzMatrix> {
    let r = spectral_radius_exact(m).ok()?;
    if r < 1e-3 {
        return None;
    }
    LipschitzMatrix::user_supplied(&m.scale(target / r)).ok()
}

fn delay_case(target: impl Strategy<Value = f64>) -> impl Strategy<Value = (Matrix, f64, usize, Vec<usize>, Vec<usize>)> {
    ((2usize..=5, 1usize..=4), target).prop_flat_map(|((n, l), t)| {
        (
            nonneg_matrix(Just(n)),
            Just(t),
            Just(l),
            proptest::collection::vec(0..=l, n * n),
            proptest::collection::vec(0..=l, n * n),
        )
    })
}

fn certificate_invariants() -> Outcome {
    let power_tol = 1e-8;
    let slack = 1e-6;
    run(500, "trichotomy", |r| {
        let target = prop_oneof![0.05..0.99f64, 1.01..2.0f64];
        r.run(&delay_case(target), |(m, t, l, d, _)| {
            let Some(a) = scaled_to(&m, t) else { return Err(TestCaseError::reject("degenerate")) };
            let ad = lift_lipschitz(&a, &DelayDistribution::new(a.dim(), l, d).unwrap()).unwrap();
            let (ra, rd) = (rho_tol(&a, power_tol), rho_tol(&ad, power_tol));
            prop_assert_eq!(ra > 1.0, rd > 1.0, "ρ(A) = {}, ρ(A_D) = {}", ra, rd);
            Ok(())
        })
        .map_err(|e| e.to_string())
    })?;
    run(500, "ordering", |r| {
        r.run(&delay_case(0.05..0.99f64), |(m, t, l, d, _)| {
            let Some(a) = scaled_to(&m, t) else { return Err(TestCaseError::reject("degenerate")) };
            let ad = lift_lipschitz(&a, &DelayDistribution::new(a.dim(), l, d).unwrap()).unwrap();
            let al = max_delay_lipschitz(&a, l).unwrap();
            let (ra, rd, rl) = (rho_tol(&a, power_tol), rho_tol(&ad, power_tol), rho_tol(&al, power_tol));
            prop_assert!(ra <= rd + slack && rd <= rl + slack && rl < 1.0, "{} {} {}", ra, rd, rl);
            Ok(())
        })
        .map_err(|e| e.to_string())
    })?;
    run(500, "delay-monotonicity", |r| {
        r.run(&delay_case(0.05..0.99f64), |(m, t, l, d, e)| {
            let Some(a) = scaled_to(&m, t) else { return Err(TestCaseError::reject("degenerate")) };
            let n = a.dim();
            let hat: Vec<usize> = d.iter().zip(&e).map(|(x, y)| *x.max(y)).collect();
            let (d, hat) = (DelayDistribution::new(n, l, d).unwrap(), DelayDistribution::new(n, l, hat).unwrap());
            prop_assert!(d.entrywise_le(&hat));
            let lo = rho_tol(&lift_lipschitz(&a, &d).unwrap(), power_tol);
            let hi = rho_tol(&lift_lipschitz(&a, &hat).unwrap(), power_tol);
            prop_assert!(lo <= hi + slack, "{} > {}", lo, hi);
            Ok(())
        })
        .map_err(|e| e.to_string())
    })?;
    let small_set = (2usize..=3, 1usize..=3).prop_flat_map(|(n, k)| {
        proptest::collection::vec(
            proptest::collection::vec(prop_oneof![Just(0.0), Just(0.25), Just(0.5), 0.0..1.0f64], n * n)
                .prop_map(move |v| Matrix::from_vec(n, n, v).unwrap()),
            k,
        )
    });
    run(500, "closure-idempotence", |r| {
        r.run(&small_set, |members| {
            let once = ri_closure(&MatrixSet::new(members).unwrap()).unwrap();
            let twice = ri_closure(&once).unwrap();
            prop_assert_eq!(once.len(), twice.len());
            prop_assert!(twice.members().iter().all(|m| once.contains(m)));
            Ok(())
        })
        .map_err(|e| e.to_string())
    })?;
    run(500, "bruteforce-below-closure", |r| {
        r.run(&(small_set.clone(), 1usize..=4), |(members, depth)| {
            let set = MatrixSet::new(members).unwrap();
            let lower = jsr_bruteforce(&set, depth).unwrap().lower;
            let upper = jsr_upper_bound_ri(&set, power_tol).unwrap().upper;
            prop_assert!(lower <= upper * (1.0 + slack) + slack, "{} > {}", lower, upper);
            Ok(())
        })
        .map_err(|e| e.to_string())
    })?;
    Ok("trichotomy, ordering, monotonicity, idempotence, brute force ≤ closure (500 each)".into())
}

/// Random sparse nonnegative `n×n` matrix with about `per_row` entries per
/// row and row sums spread over `[0.5, 0.9]`.
fn random_sparse(n: usize, per_row: usize, seed: u64) -> SparseMatrix {
    let mut state = seed;
    let mut next = move || {
        state ^= state << 13;
        state ^= state >> 7;
        state ^= state << 17;
        state
    };
    let mut triplets = Vec::with_capacity(n * per_row);
    for i in 0..n {
        let weights: Vec<(usize, f64)> =
            (0..per_row).map(|_| ((next() % n as u64) as usize, (next() % 1000 + 1) as f64)).collect();
        let total: f64 = weights.iter().map(|w| w.1).sum();
        let row_sum = 0.5 + 0.4 * (next() % 1001) as f64 / 1000.0;
        for (j, w) in weights {
            triplets.push((i, j, row_sum * w / total));
        }
    }
    SparseMatrix::from_triplets(n, n, &triplets).unwrap()
}

fn scaling_sanity() -> Outcome {
    let a = LipschitzMatrix::new(random_sparse(1000, 10, 0x5eed), intrinsic_core::Provenance::UserSupplied).unwrap();
    let start = Instant::now();
    let cert = certify(&a, Some(50), 1e-8, &PowerOptions::default()).unwrap();
    let elapsed = start.elapsed();
    ensure(cert.verdict == Verdict::Stable, || format!("verdict {}", cert.verdict))?;
    ensure(elapsed.as_secs_f64() < 10.0, || format!("took {elapsed:?}"))?;
    let rate = cert.convergence_rate.unwrap();
    let predicted = cert.rho.powf(1.0 / 51.0);
    ensure((rate - predicted).abs() < 1e-6, || format!("ρ(A_L) {rate} vs ρ(A)^(1/51) {predicted}"))?;
    Ok(format!("n=1000, nnz={}, L=50: ρ(A)={:.4}, ρ(A_L)={:.6} in {:.2?}", a.entries().nnz(), cert.rho, rate, elapsed))
}

fn main() -> ExitCode {
    let criteria: [(&str, fn() -> Outcome); 8] = [
        ("spectral-radius regressions", spectral_regressions),
        ("fixed-point reproduction", fixed_point_reproduction),
        ("destabilisation by constant delays", destabilisation),
        ("switched divergence", switched_divergence),
        ("switched contraction", switched_contraction),
        ("oracle equivalence", oracle_equivalence),
        ("certificate invariants", certificate_invariants),
        ("scaling sanity", scaling_sanity),
    ];
    // Keep panics from interleaving with the report.
    std::panic::set_hook(Box::new(|_| {}));
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let outcome = catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|p| {
            let msg = p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "panic".into());
            Err(format!("panicked: {msg}"))
        });
        match outcome {
            Ok(detail) => println!("criterion {}: PASS  {name}: {detail}", i + 1),
            Err(detail) => {
                failed += 1;
                println!("criterion {}: FAIL  {name}: {detail}", i + 1);
            }
        }
    }
    println!("acceptance: {} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
