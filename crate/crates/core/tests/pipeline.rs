use crystal_core::{
    anchored_candidates, finite_type_gap, gen_ideal_crystal, gen_perturbed_lattice, gen_poisson,
    generate, max_ball_count, recover_crystal, verify_exact_period, GeneratorKind, GeneratorSpec,
    Point, RecoveryConfig, Stage, Verdict, WindowedSet, TOL_EXACT,
};

fn default_crystal(radius: f64) -> GeneratorSpec {
    GeneratorSpec {
        radius,
        seed: 0,
        kind: GeneratorKind::Crystal {
            basis: vec![Point::from([1.0, 0.0]), Point::from([0.2, 1.1])],
            residues: vec![Point::from([0.0, 0.0]), Point::from([0.31, 0.4])],
        },
    }
}

fn gap(set: &WindowedSet) -> f64 {
    let d = crystal_core::denseness_radius(set, set.radius() / 10.0).unwrap();
    finite_type_gap(set, d).map_or(0.0, |r| r.gap)
}

#[test]
fn generated_crystal_is_recovered() {
    let set = generate(&default_crystal(60.0)).unwrap();
    let verdict = recover_crystal(&set, &RecoveryConfig::default()).unwrap();
    let c = verdict.crystal().expect("crystal");
    let d = &c.decomposition;
    assert!(d.is_verified());
    let ratio = 1.1 / d.lattice.det().abs();
    assert!(
        (ratio - ratio.round()).abs() <= 1e-6 * ratio,
        "det ratio {ratio}"
    );
    assert_eq!(d.residues.len() as f64 * ratio.round(), 2.0);
}

#[test]
fn fibonacci_chain_has_no_periods() {
    let set = generate(&GeneratorSpec::fibonacci(360.0)).unwrap();
    assert!(set.len() >= 500, "{} points", set.len());
    let verdict = recover_crystal(&set, &RecoveryConfig::default()).unwrap();
    let e = verdict.evidence().expect("no crystal");
    assert_eq!(e.stage, Stage::PeriodVerification);
    assert!(e.periods.is_empty());
    for t in anchored_candidates(&set, 0.1, 1e-3, set.radius() / 2.0).unwrap() {
        assert!(
            !verify_exact_period(&set, &t, TOL_EXACT)
                .unwrap()
                .is_verified(),
            "{t}"
        );
    }
}

#[test]
fn fibonacci_gap_stays_positive() {
    for r in [50.0, 100.0, 200.0] {
        let g = gap(&generate(&GeneratorSpec::fibonacci(r)).unwrap());
        assert!(g > 0.5, "gap {g} at R = {r}");
    }
}

#[test]
fn poisson_windows_are_not_crystals() {
    for seed in 0..20 {
        let set = gen_poisson(1.0, 2, 50.0, seed).unwrap();
        match recover_crystal(&set, &RecoveryConfig::default()).unwrap() {
            Verdict::NoCrystal(e) => assert!(
                matches!(e.stage, Stage::FiniteTypeGap | Stage::PeriodVerification)
                    && e.periods.is_empty(),
                "seed {seed}: {:?} with {} periods",
                e.stage,
                e.periods.len()
            ),
            Verdict::Crystal(_) => panic!("seed {seed} recovered a crystal"),
        }
    }
}

#[test]
fn poisson_point_count_is_pinned() {
    let set = gen_poisson(1.0, 2, 50.0, 7).unwrap();
    assert_eq!(set.len(), POISSON_COUNT);
}

const POISSON_COUNT: usize = 7785;

#[test]
fn poisson_candidates_are_never_periods() {
    let set = gen_poisson(1.0, 2, 50.0, 3).unwrap();
    let candidates = anchored_candidates(&set, 0.1, 1e-3, 25.0).unwrap();
    let (few, many) = (
        anchored_candidates(&set, 0.1, 1e-3, 6.0).unwrap().len(),
        anchored_candidates(&set, 0.1, 1e-3, 12.0).unwrap().len(),
    );
    assert!(many as f64 > 3.0 * few as f64, "{few} then {many}");
    for t in candidates {
        assert!(!verify_exact_period(&set, &t, TOL_EXACT)
            .unwrap()
            .is_verified());
    }
}

#[test]
fn irrational_perturbation_loses_finite_type() {
    let set = gen_perturbed_lattice(
        &[Point::from([1.0])],
        0.1,
        &[std::f64::consts::SQRT_2],
        200.0,
    )
    .unwrap();
    assert!(gap(&set) < 0.01);
    assert!(!recover_crystal(&set, &RecoveryConfig::default())
        .unwrap()
        .is_crystal());
    // near-lattice translations remain good almost periods
    for n in 1..=5 {
        let tau = Point::from([n as f64]);
        assert!(crystal_core::is_almost_period(&set, &tau, 0.4)
            .unwrap()
            .is_accepted());
    }
}

#[test]
fn rational_perturbation_is_a_crystal_of_period_three() {
    let set = gen_perturbed_lattice(&[Point::from([1.0])], 0.1, &[1.0 / 3.0], 120.0).unwrap();
    let verdict = recover_crystal(&set, &RecoveryConfig::default()).unwrap();
    let c = verdict.crystal().expect("crystal");
    assert!((c.decomposition.lattice.det().abs() - 3.0).abs() <= 1e-6);
    assert_eq!(c.decomposition.residues.len(), 3);
}

#[test]
fn generated_windows_have_bounded_density() {
    let sets = [
        generate(&default_crystal(20.0)).unwrap(),
        generate(&GeneratorSpec::fibonacci(100.0)).unwrap(),
        gen_perturbed_lattice(
            &[Point::from([1.0])],
            0.1,
            &[std::f64::consts::SQRT_2],
            100.0,
        )
        .unwrap(),
    ];
    for set in &sets {
        let s = set.min_separation().unwrap();
        let bound = (1.0 + 2.0 / s).powi(set.dim() as i32);
        let count = max_ball_count(set, 1.0);
        assert!(
            count > 0 && count as f64 <= bound,
            "{}: {count} > {bound}",
            set.label()
        );
    }
}

#[test]
fn translated_crystal_recovers_the_same_lattice() {
    // the window stays centred at the origin, so translating the pattern
    // means translating the residues
    let basis = [Point::from([1.0, 0.0]), Point::from([0.2, 1.1])];
    let residues = [Point::from([0.0, 0.0]), Point::from([0.31, 0.4])];
    let shift = Point::from([0.173, -0.291]);
    let moved: Vec<Point> = residues.iter().map(|f| f + &shift).collect();
    let config = RecoveryConfig::default();
    let a = recover_crystal(
        &gen_ideal_crystal(&basis, &residues, 20.0).unwrap(),
        &config,
    )
    .unwrap();
    let b = recover_crystal(&gen_ideal_crystal(&basis, &moved, 20.0).unwrap(), &config).unwrap();
    let (la, lb) = (
        &a.crystal().unwrap().decomposition,
        &b.crystal().unwrap().decomposition,
    );
    assert!((la.lattice.det().abs() - lb.lattice.det().abs()).abs() <= 1e-9);
    assert!(la.lattice.is_sublattice_of(&lb.lattice) && lb.lattice.is_sublattice_of(&la.lattice));
    for f in &la.residues {
        let g = f + &shift;
        assert!(
            lb.residues
                .iter()
                .any(|h| la.lattice.distance(&(&g - h)) <= 1e-6),
            "residue {f} has no shifted partner"
        );
    }
}
