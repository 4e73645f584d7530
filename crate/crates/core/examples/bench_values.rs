//! Prints benchmark values for comparison during development.

use regmomsos_core::bench;
use regmomsos_core::driver::{run, RunOptions, Schedule};

fn main() {
    let which = std::env::args().nth(1).unwrap_or_else(|| "origin".into());
    let opts = RunOptions {
        jobs: 2,
        ..Default::default()
    };
    match which.as_str() {
        "origin" => {
            let inst = bench::origin();
            let levels: Vec<usize> = (2..=10).collect();
            let res = run(&inst, &levels, &Schedule::FixedGrid(vec![1.0]), &opts).unwrap();
            for r in &res.records {
                println!(
                    "d={} v*/eps={:.5} bound={:?} status={}",
                    r.d,
                    r.dual_value / r.epsilon.unwrap(),
                    r.certified_bound,
                    r.status
                );
            }
            let res = run(&inst, &[2, 3, 4, 5, 6], &Schedule::Penalized, &opts).unwrap();
            for r in &res.records {
                println!(
                    "pen d={} p*={:+.3e} v*={:+.5e} t*={:.5e} c2d={:.5}",
                    r.d,
                    r.certified_bound.unwrap(),
                    r.dual_value,
                    r.residual_norm,
                    r.c2d.unwrap()
                );
            }
        }
        "stengle" => {
            let inst = bench::stengle();
            let res = run(&inst, &[3, 4, 5], &Schedule::Penalized, &opts).unwrap();
            for r in &res.records {
                println!(
                    "d={} p*={:+.6e} v*={:+.6e} t*={:.6e} c2d={:.5} wall={}ms status={}",
                    r.d,
                    r.certified_bound.unwrap(),
                    r.dual_value,
                    r.residual_norm,
                    r.c2d.unwrap(),
                    r.wall_ms,
                    r.status
                );
            }
        }
        "prestel" => {
            let inst = bench::prestel();
            let res = run(&inst, &[1, 2, 3], &Schedule::Penalized, &opts).unwrap();
            for r in &res.records {
                println!(
                    "d={} p*={:+.6e} v*={:+.6e} t*={:.6e} c2d^2={:.1} wall={}ms status={}",
                    r.d,
                    r.certified_bound.unwrap(),
                    r.dual_value,
                    r.residual_norm,
                    r.c2d.unwrap().powi(2),
                    r.wall_ms,
                    r.status
                );
            }
        }
        "motzkin" => {
            let inst = bench::motzkin();
            let grid = vec![1.0, 1e-1, 1e-2, 1e-3, 1e-4, 1e-5, 1e-6];
            for d in [3usize, 4, 5] {
                let res = run(&inst, &[d], &Schedule::FixedGrid(grid.clone()), &opts).unwrap();
                print!("d={d}: ");
                for r in &res.records {
                    print!("{:+.5e} ", r.dual_value);
                }
                let wall: u64 = res.records.iter().map(|r| r.wall_ms).sum();
                println!();
                for r in &res.records {
                    print!("  [{}] ", r.status);
                }
                println!("wall={wall}ms");
                if let Some(f) = &res.fit {
                    println!(
                        "  free fit: kappa={:.5} exponent={:.4}",
                        f.prefactor, f.exponent
                    );
                }
            }
        }
        other => eprintln!("unknown benchmark {other}"),
    }
}
