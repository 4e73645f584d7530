//! Generates a random feasible mixed-cone program, solves it, and writes the
//! problem dump plus the attained objective to files given on the command
//! line. Used for cross-validation against external conic solvers.

use regmomsos_conic::{solve, ConeBlock, ConeSpec, ConicProgram, SolverSettings};

fn main() {
    let args: Vec<String> = std::env::args().collect();
    let dump_path = args.get(1).map(String::as_str).unwrap_or("/tmp/prog.conicdump");
    let seed: u64 = args.get(2).and_then(|s| s.parse().ok()).unwrap_or(42);

    let mut state = seed.wrapping_mul(0x9e3779b97f4a7c15).wrapping_add(1);
    let mut rnd = move || {
        state ^= state << 13;
        state ^= state >> 7;
        state ^= state << 17;
        (state >> 11) as f64 / (1u64 << 53) as f64 - 0.5
    };

    let mut cone = ConeSpec::new();
    cone.push(ConeBlock::Free(2));
    cone.push(ConeBlock::NonNeg(3));
    cone.push(ConeBlock::SecondOrder(4));
    cone.push(ConeBlock::Psd(4));
    let n = cone.total_dim();
    let m = 7;

    // Random constraint matrix.
    let mut triplets = Vec::new();
    for r in 0..m {
        for c in 0..n {
            let v = rnd();
            if v.abs() > 0.2 {
                triplets.push((r, c, v));
            }
        }
    }

    // Interior primal point and interior dual slack make the program solvable
    // with strong duality.
    let interior = |rnd: &mut dyn FnMut() -> f64| {
        let mut x = vec![0.0; n];
        // free
        x[0] = rnd();
        x[1] = rnd();
        // nonneg
        for i in 2..5 {
            x[i] = 0.5 + rnd().abs();
        }
        // soc
        let u: Vec<f64> = (0..3).map(|_| rnd()).collect();
        let nu = u.iter().map(|v| v * v).sum::<f64>().sqrt();
        x[5] = nu + 0.3 + rnd().abs();
        x[6..9].copy_from_slice(&u);
        // psd: M M' + 0.3 I
        let side = 4;
        let mut g = vec![0.0; side * side];
        for v in g.iter_mut() {
            *v = rnd();
        }
        let mut mm = vec![0.0; side * side];
        for i in 0..side {
            for j in 0..side {
                let mut acc = if i == j { 0.3 } else { 0.0 };
                for k in 0..side {
                    acc += g[i * side + k] * g[j * side + k];
                }
                mm[i * side + j] = acc;
            }
        }
        let sv = regmomsos_conic::svec(&mm, side);
        x[9..9 + sv.len()].copy_from_slice(&sv);
        x
    };
    let x0 = interior(&mut rnd);
    let mut s0 = interior(&mut rnd);
    s0[0] = 0.0;
    s0[1] = 0.0;
    let y0: Vec<f64> = (0..m).map(|_| rnd()).collect();

    let mut b = vec![0.0; m];
    for &(r, c, v) in &triplets {
        b[r] += v * x0[c];
    }
    let mut c_vec = s0.clone();
    for &(r, c, v) in &triplets {
        c_vec[c] += v * y0[r];
    }

    let prog = ConicProgram::new(c_vec, triplets, b, cone).unwrap();
    std::fs::write(dump_path, prog.dump()).unwrap();

    let sol = solve(&prog, &SolverSettings::default()).unwrap();
    println!(
        "status={} primal={:.10e} dual={:.10e} iters={}",
        sol.status, sol.primal_obj, sol.dual_obj, sol.iterations
    );
}
