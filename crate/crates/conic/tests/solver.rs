use regmomsos_conic::{
    solve, ConeBlock, ConeSpec, ConicProgram, SolveStatus, SolverSettings,
};

fn spec(blocks: Vec<ConeBlock>) -> ConeSpec {
    let mut c = ConeSpec::new();
    for b in blocks {
        c.push(b);
    }
    c
}

/// min x s.t. x >= 1, formulated with a free variable and a nonnegative slack:
/// x - s = 1.
#[test]
fn lp_min_x_subject_to_x_ge_one() {
    let prog = ConicProgram::new(
        vec![1.0, 0.0],
        vec![(0, 0, 1.0), (0, 1, -1.0)],
        vec![1.0],
        spec(vec![ConeBlock::Free(1), ConeBlock::NonNeg(1)]),
    )
    .unwrap();
    let sol = solve(&prog, &SolverSettings::default()).unwrap();
    assert_eq!(sol.status, SolveStatus::Optimal);
    assert!((sol.primal_obj - 1.0).abs() < 1e-7, "{}", sol.primal_obj);
    assert!((sol.x[0] - 1.0).abs() < 1e-6);
}

/// min t s.t. t >= ||(3, 4)||: expects t = 5.
#[test]
fn soc_norm_of_3_4() {
    let prog = ConicProgram::new(
        vec![1.0, 0.0, 0.0],
        vec![(0, 1, 1.0), (1, 2, 1.0)],
        vec![3.0, 4.0],
        spec(vec![ConeBlock::SecondOrder(3)]),
    )
    .unwrap();
    let sol = solve(&prog, &SolverSettings::default()).unwrap();
    assert_eq!(sol.status, SolveStatus::Optimal);
    assert!((sol.primal_obj - 5.0).abs() < 1e-7, "{}", sol.primal_obj);
}

/// min trace(X) s.t. X_11 = 1, X PSD 2x2: optimum 1 at X = diag(1, 0).
#[test]
fn sdp_trace_with_fixed_corner() {
    // svec layout for side 2: (0,0), (0,1)*sqrt2, (1,1).
    let prog = ConicProgram::new(
        vec![1.0, 0.0, 1.0],
        vec![(0, 0, 1.0)],
        vec![1.0],
        spec(vec![ConeBlock::Psd(2)]),
    )
    .unwrap();
    let sol = solve(&prog, &SolverSettings::default()).unwrap();
    assert_eq!(sol.status, SolveStatus::Optimal);
    assert!((sol.primal_obj - 1.0).abs() < 1e-7, "{}", sol.primal_obj);
    assert!((sol.x[0] - 1.0).abs() < 1e-6);
    assert!(sol.x[2].abs() < 1e-6);
    // KKT: dual slack s = c - A'y must be PSD and complementary to X.
    let y = sol.y_dual[0];
    let s = [1.0 - y, 0.0, 1.0];
    let comp: f64 = sol.x.iter().zip(&s).map(|(a, b)| a * b).sum();
    assert!(comp.abs() < 1e-6, "complementarity {comp}");
}

/// Mixed-cone problem with a PSD block coupled to a SOC bound.
/// min <I, X> s.t. X_12' entry equals 0.7 and ||(X_11, X_22)|| <= t with t = 2.
#[test]
fn mixed_soc_psd() {
    // Variables: (t, u1, u2) SOC(3), svec(X) PSD(2).
    let rt2 = std::f64::consts::SQRT_2;
    let prog = ConicProgram::new(
        vec![0.0, 0.0, 0.0, 1.0, 0.0, 1.0],
        vec![
            (0, 4, 1.0),           // sqrt2 * X_12 = 0.7 * sqrt2
            (1, 0, 1.0),           // t = 2
            (2, 1, 1.0), (2, 3, -1.0), // u1 = X_11
            (3, 2, 1.0), (3, 5, -1.0), // u2 = X_22
        ],
        vec![0.7 * rt2, 2.0, 0.0, 0.0],
        spec(vec![ConeBlock::SecondOrder(3), ConeBlock::Psd(2)]),
    )
    .unwrap();
    let sol = solve(&prog, &SolverSettings::default()).unwrap();
    assert_eq!(sol.status, SolveStatus::Optimal);
    // X_11 = X_22 = a with a^2 >= X_12^2 => min trace = 2*0.7 = 1.4.
    assert!((sol.primal_obj - 1.4).abs() < 1e-6, "{}", sol.primal_obj);
}

#[test]
fn primal_infeasible_detected() {
    // x >= 1 and x <= 0 with x free: rows x - s1 = 1, x + s2 = 0.
    let prog = ConicProgram::new(
        vec![0.0, 0.0, 0.0],
        vec![(0, 0, 1.0), (0, 1, -1.0), (1, 0, 1.0), (1, 2, 1.0)],
        vec![1.0, 0.0],
        spec(vec![ConeBlock::Free(1), ConeBlock::NonNeg(2)]),
    )
    .unwrap();
    let sol = solve(&prog, &SolverSettings::default()).unwrap();
    assert_eq!(sol.status, SolveStatus::PrimalInfeasible);
}

#[test]
fn dual_infeasible_detected() {
    // min -x s.t. x - s = 1 (x free, s >= 0): unbounded below.
    let prog = ConicProgram::new(
        vec![-1.0, 0.0],
        vec![(0, 0, 1.0), (0, 1, -1.0)],
        vec![1.0],
        spec(vec![ConeBlock::Free(1), ConeBlock::NonNeg(1)]),
    )
    .unwrap();
    let sol = solve(&prog, &SolverSettings::default()).unwrap();
    assert_eq!(sol.status, SolveStatus::DualInfeasible);
}

#[test]
fn deterministic_repeat_solves_bitwise_equal() {
    let prog = ConicProgram::new(
        vec![1.0, 0.0, 1.0],
        vec![(0, 0, 1.0), (0, 1, 0.3)],
        vec![1.0],
        spec(vec![ConeBlock::Psd(2)]),
    )
    .unwrap();
    let a = solve(&prog, &SolverSettings::default()).unwrap();
    let b = solve(&prog, &SolverSettings::default()).unwrap();
    assert_eq!(a.iterations, b.iterations);
    for (u, v) in a.x.iter().zip(&b.x) {
        assert_eq!(u.to_bits(), v.to_bits());
    }
    for (u, v) in a.y_dual.iter().zip(&b.y_dual) {
        assert_eq!(u.to_bits(), v.to_bits());
    }
}

/// Weak duality and complementarity at the returned optimum.
#[test]
fn optimal_complementarity() {
    let prog = ConicProgram::new(
        vec![2.0, 1.0, 0.5, 1.5],
        vec![(0, 0, 1.0), (0, 1, 1.0), (1, 2, 1.0), (1, 3, 1.0)],
        vec![1.0, 2.0],
        spec(vec![ConeBlock::NonNeg(4)]),
    )
    .unwrap();
    let settings = SolverSettings::default();
    let sol = solve(&prog, &settings).unwrap();
    assert_eq!(sol.status, SolveStatus::Optimal);
    let xs: f64 = sol.x.iter().zip(&sol.s).map(|(a, b)| a * b).sum();
    let bound = 10.0 * settings.gap_tol * (1.0 + sol.primal_obj.abs() + sol.dual_obj.abs());
    assert!(xs.abs() <= bound, "complementarity {xs} vs {bound}");
    assert!(sol.primal_obj + 1e-9 >= sol.dual_obj);
}
