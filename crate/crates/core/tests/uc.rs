use knnuc::cases;
use knnuc::ptdf::compute_ptdf;
use knnuc::scenario::generate_profile;
use knnuc::system::{default_hourly_profile, Bus, Line};
use knnuc::uc::{max_flow_violation, TransmissionMode, DISPATCH_TOL};
use knnuc::{brute_force_uc, solve_opf, solve_uc, DemandMatrix, Error, PowerSystem, SolverConfig, UcSolution};
use proptest::prelude::*;

fn exact() -> SolverConfig {
    SolverConfig {
        mip_gap: 0.0,
        ..SolverConfig::default()
    }
}

fn check_invariants(sys: &PowerSystem, demand: &DemandMatrix, sol: &UcSolution, flow_tol: f64) {
    for (g, gen) in sys.generators().iter().enumerate() {
        for t in 0..sys.horizon() {
            let on = if sol.commitment.is_on(g, t) { 1.0 } else { 0.0 };
            let p = sol.dispatch[g][t];
            assert!(p >= on * gen.p_min - DISPATCH_TOL && p <= on * gen.p_max + DISPATCH_TOL);
        }
    }
    for t in 0..sys.horizon() {
        let supplied: f64 = sol.dispatch.iter().map(|r| r[t]).sum();
        assert!((supplied - demand.hourly_total(t)).abs() <= DISPATCH_TOL);
    }
    if sys.n_lines() > 0 {
        let ptdf = compute_ptdf(sys, 0).unwrap();
        assert!(max_flow_violation(sys, &ptdf, demand, &sol.dispatch) <= flow_tol);
    }
}

#[test]
fn tiny_instances_match_brute_force() {
    let mut solved = 0;
    for seed in 0..50u64 {
        let n_gens = 1 + (seed % 3) as usize;
        let horizon = 1 + (seed / 3 % 4) as usize;
        let sys = cases::random_single_bus(seed, n_gens, horizon);
        let demand = generate_profile(&sys, seed).unwrap();
        match (brute_force_uc(&sys, &demand), solve_uc(&sys, &demand, &exact())) {
            (Ok(bf), Ok(uc)) => {
                let tol = 1e-6 * bf.objective.abs().max(1.0);
                assert!((bf.objective - uc.objective).abs() <= tol, "seed {seed}: {} vs {}", bf.objective, uc.objective);
                check_invariants(&sys, &demand, &uc, 1e-6);
                solved += 1;
            }
            (Err(Error::Infeasible(_)), Err(Error::Infeasible(_))) => {}
            (bf, uc) => panic!("seed {seed}: brute force {bf:?}, solver {uc:?}"),
        }
    }
    assert!(solved >= 25, "only {solved} feasible instances");
}

#[test]
fn three_units_three_hours_match_brute_force() {
    let sys = cases::single_bus_three_units(3);
    let mut solved = 0;
    for seed in 0..8 {
        let demand = generate_profile(&sys, seed).unwrap();
        match (brute_force_uc(&sys, &demand), solve_uc(&sys, &demand, &exact())) {
            (Ok(bf), Ok(uc)) => {
                assert!((bf.objective - uc.objective).abs() <= 1e-6 * bf.objective);
                solved += 1;
            }
            (Err(Error::Infeasible(_)), Err(Error::Infeasible(_))) => {}
            (bf, uc) => panic!("seed {seed}: brute force {bf:?}, solver {uc:?}"),
        }
    }
    assert!(solved >= 6, "only {solved} feasible instances");
}

/// Triangle with the cheap unit at bus 0 and all load at bus 2.
fn congested_triangle() -> PowerSystem {
    let buses = vec![
        Bus { id: 0, nominal_load_share: 0.0 },
        Bus { id: 1, nominal_load_share: 0.0 },
        Bus { id: 2, nominal_load_share: 1.0 },
    ];
    let gens = vec![
        cases::simple_generator(0, 0, 0.0, 300.0, 10.0),
        cases::simple_generator(1, 1, 0.0, 300.0, 50.0),
    ];
    let line = |id, from_bus, to_bus, flow_limit| Line { id, from_bus, to_bus, reactance: 0.1, flow_limit };
    let lines = vec![line(0, 0, 1, 500.0), line(1, 0, 2, 100.0), line(2, 1, 2, 500.0)];
    let (m, s) = default_hourly_profile(1);
    PowerSystem::new("triangle", buses, gens, lines, m, s, 1).unwrap()
}

#[test]
fn congestion_adds_rows_and_matches_full_model() {
    let sys = congested_triangle();
    let demand = DemandMatrix::from_factors(200.0, vec![0.0, 0.0, 1.0], vec![1.0]).unwrap();
    let lazy = solve_uc(&sys, &demand, &exact()).unwrap();
    let full = solve_uc(
        &sys,
        &demand,
        &SolverConfig {
            transmission: TransmissionMode::Full,
            ..exact()
        },
    )
    .unwrap();
    let unconstrained = 200.0 * 10.0;
    assert!(lazy.objective > unconstrained + 1.0);
    assert!((lazy.objective - full.objective).abs() <= 1e-6 * full.objective);
    assert!(lazy.added_line_constraints >= 1);
    assert!(lazy.lazy_rounds >= 2);
    check_invariants(&sys, &demand, &lazy, 1e-6);
}

#[test]
fn uncongested_network_needs_one_round() {
    let sys = cases::five_bus();
    let demand = DemandMatrix::from_factors(120.0, vec![0.0, 0.2, 0.3, 0.3, 0.2], vec![1.0; 24]).unwrap();
    let sol = solve_uc(&sys, &demand, &exact()).unwrap();
    assert_eq!(sol.lazy_rounds, 1);
    assert_eq!(sol.added_line_constraints, 0);
}

#[test]
fn five_bus_lazy_equals_full() {
    let sys = cases::five_bus();
    let full_cfg = SolverConfig {
        transmission: TransmissionMode::Full,
        ..exact()
    };
    for seed in 0..3 {
        let demand = generate_profile(&sys, seed).unwrap();
        let lazy = solve_uc(&sys, &demand, &exact()).unwrap();
        let full = solve_uc(&sys, &demand, &full_cfg).unwrap();
        assert!(lazy.added_line_constraints > 0, "seed {seed} is not congested");
        assert!((lazy.objective - full.objective).abs() <= 1e-6 * full.objective);
        check_invariants(&sys, &demand, &lazy, 1e-4);
    }
}

#[test]
fn replay_reproduces_objective_within_gap() {
    let cfg = SolverConfig::default();
    for seed in 0..50u64 {
        let sys = cases::random_single_bus(1000 + seed, 3, 4);
        let demand = generate_profile(&sys, seed).unwrap();
        let Ok(uc) = solve_uc(&sys, &demand, &cfg) else { continue };
        assert!(uc.mip_gap_achieved <= cfg.mip_gap);
        let opf = solve_opf(&sys, &demand, &uc.commitment, &cfg).unwrap();
        assert!(opf.feasible);
        assert!((opf.objective - uc.objective).abs() <= cfg.mip_gap * uc.objective + 1e-9);
    }
}

#[test]
fn round_limit_is_a_partial_result() {
    let sys = congested_triangle();
    let demand = DemandMatrix::from_factors(200.0, vec![0.0, 0.0, 1.0], vec![1.0]).unwrap();
    let cfg = SolverConfig {
        max_lazy_rounds: 1,
        ..exact()
    };
    match solve_uc(&sys, &demand, &cfg) {
        Err(Error::Partial(p)) => {
            assert!(p.incumbent.is_some());
            assert!(p.reason.contains("round"));
        }
        other => panic!("unexpected {other:?}"),
    }
}

#[test]
fn line_infeasibility_names_lines() {
    // a radial feeder that cannot carry the load
    let buses = vec![
        Bus { id: 0, nominal_load_share: 0.0 },
        Bus { id: 1, nominal_load_share: 1.0 },
    ];
    let gens = vec![cases::simple_generator(0, 0, 0.0, 300.0, 10.0)];
    let lines = vec![Line { id: 0, from_bus: 0, to_bus: 1, reactance: 0.1, flow_limit: 50.0 }];
    let (m, s) = default_hourly_profile(1);
    let sys = PowerSystem::new("feeder", buses, gens, lines, m, s, 1).unwrap();
    let demand = DemandMatrix::from_factors(100.0, vec![0.0, 1.0], vec![1.0]).unwrap();
    match solve_uc(&sys, &demand, &exact()) {
        Err(Error::Infeasible(knnuc::InfeasibilityCause::LineSet { lines })) => assert_eq!(lines, vec![0]),
        other => panic!("unexpected {other:?}"),
    }
}

#[test]
fn brute_force_never_beaten_by_fixed_commitments() {
    let sys = cases::random_single_bus(77, 2, 3);
    let demand = generate_profile(&sys, 77).unwrap();
    let bf = brute_force_uc(&sys, &demand).unwrap();
    for mask in 0u32..64 {
        let c = knnuc::CommitmentSchedule::from_fn(2, 3, |g, t| mask >> (g * 3 + t) & 1 == 1);
        if let Ok(opf) = solve_opf(&sys, &demand, &c, &exact()) {
            if opf.feasible {
                assert!(opf.objective >= bf.objective - 1e-6 * bf.objective);
            }
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn round_objectives_never_decrease(seed in 0u64..1000) {
        let sys = cases::five_bus();
        let demand = generate_profile(&sys, seed).unwrap();
        let sol = solve_uc(&sys, &demand, &exact()).unwrap();
        prop_assert_eq!(sol.round_objectives.len(), sol.lazy_rounds);
        for w in sol.round_objectives.windows(2) {
            prop_assert!(w[1] >= w[0] - 1e-9 * w[0].abs());
        }
    }

    #[test]
    fn fixed_commitment_feasibility_is_deterministic(seed in 0u64..1000) {
        let sys = cases::five_bus();
        let demand = generate_profile(&sys, seed).unwrap();
        let other = generate_profile(&sys, seed + 1).unwrap();
        let donor = solve_uc(&sys, &other, &SolverConfig::default()).unwrap();
        let a = solve_opf(&sys, &demand, &donor.commitment, &SolverConfig::default()).unwrap();
        let b = solve_opf(&sys, &demand, &donor.commitment, &SolverConfig::default()).unwrap();
        prop_assert_eq!(a.feasible, b.feasible);
        prop_assert!(a.solve_seconds > 0.0);
    }
}
