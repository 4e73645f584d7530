use regmomsos_core::bench;
use regmomsos_core::momentsos::{assemble, recover_certificate, verify_certificate, Mode};
use regmomsos_conic::{solve, SolverSettings};
fn main() {
    let d: usize = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(5);
    let eps: f64 = std::env::args().nth(2).and_then(|s| s.parse().ok()).unwrap_or(1.0);
    let inst = bench::origin();
    let asm = assemble(&inst, d, Mode::Regularized { eps }).unwrap();
    let mut settings = SolverSettings::default();
    if let Ok(t) = std::env::var("TOL") { let t: f64 = t.parse().unwrap(); settings.gap_tol = t; settings.feas_tol = t; }
    let sol = solve(&asm.program, &settings).unwrap();
    println!("status={} pobj={:.8e} dobj={:.8e} gap={:.2e} pres={:.2e} dres={:.2e} iters={}",
        sol.status, sol.primal_obj, sol.dual_obj, sol.rel_gap, sol.primal_res, sol.dual_res, sol.iterations);
    let cert = recover_certificate(&inst, &asm, &sol).unwrap();
    println!("v={:+.8e} ||r||={:.6e} soc_dual_t={:?}", cert.v, cert.residual_norm, cert.soc_dual_t);
    let rep = verify_certificate(&inst, &asm, &cert, None, 1e-6).unwrap();
    println!("identity={:.3e} mineig={:+.3e} pass={}", rep.identity_residual, rep.gram_min_eig, rep.pass);
    // dual feasibility residual of the conic solution, per block of columns
    let prog = &asm.program;
    let n = prog.num_vars();
    let mut aty = vec![0.0; n];
    for &(r, c, v) in &prog.a_triplets { aty[c] += v * sol.y_dual[r]; }
    let mut worst = (0usize, 0.0f64);
    for i in 0..n {
        let res = (prog.c[i] - aty[i] - sol.s[i]).abs();
        if res > worst.1 { worst = (i, res); }
    }
    println!("max dual feas residual: col {} = {:.3e}", worst.0, worst.1);

    // Identity residual computed from the assembly triplets directly.
    let lay = &asm.layout;
    let ops = &asm.operators;
    let ny = lay.ny;
    let mut resid = vec![0.0; ny];
    for (i, _alpha) in ops.indices.iter().enumerate() {
        resid[i] = ops.objective[i];
    }
    resid[0] -= cert.v;
    for (i, _alpha) in ops.indices.iter().enumerate() {
        resid[i] -= sol.s[lay.y_col0 + i];
    }
    for (j, blk) in ops.blocks.iter().enumerate() {
        let (col0, side) = lay.psd_cols[j];
        let _ = side;
        for &(sv, yi, coef) in &blk.entries {
            resid[yi] -= coef * sol.s[col0 + sv];
        }
    }
    let norm: f64 = resid.iter().map(|v| v * v).sum::<f64>().sqrt();
    println!("assembly-level identity residual: {:.3e}", norm);
}

// quick assembly-level identity check appended as a second main pass
