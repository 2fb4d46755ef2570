// scratch: pipeline exploration on the acceptance configurations
use nodalflow::config::{RunConfig, SeedConfig};
use nodalflow::grid::RadialDomain;
use nodalflow::pipeline::run_solve;
use nodalflow::system::ProblemSpec;

fn explore(label: &str, p: usize, b: usize, r: usize, pt: Vec<usize>, qt: Vec<usize>, beta: f64, m: usize) {
    let spec = ProblemSpec::new(beta, p, b, r, pt, qt, RadialDomain::ball(1.0, 3).unwrap()).unwrap();
    let mut config = RunConfig::new(spec, m);
    config.seed = SeedConfig::Uniform { k_micro: 1, amplitude: 1.0, sharpness: 0.9, calibrate: true };
    config.flow.t_max = 100.0;
    let t0 = std::time::Instant::now();
    match run_solve(&config) {
        Ok(run) => {
            let counts = run.summary.nodal.node_counts();
            let cm: Vec<String> = run.summary.comparisons.pairs.iter()
                .map(|pr| format!("n(u{}-u{})={}", pr.i+1, pr.j+1, pr.difference_nodes)).collect();
            let hard = run.summary.checks.all_hard_passed();
            let fails: Vec<&str> = run.summary.checks.failures().filter(|f| f.hard).map(|f| f.name.as_str()).collect();
            println!("{label}: lambda*={:.6} res={:.2e} E={:.4} counts={counts:?} {} hard_ok={hard} fails={fails:?} [{:.1}s]",
                run.summary.lambda_star.unwrap(), run.summary.residual_norm, run.summary.energy,
                cm.join(" "), t0.elapsed().as_secs_f64());
        }
        Err(e) => println!("{label}: ERROR {e} [{:.1}s]", t0.elapsed().as_secs_f64()),
    }
}

#[test]
fn dbg_explore_pipeline() {
    explore("N1 scalar", 2, 0, 1, vec![], vec![0], -1.0, 256);
    explore("N2 p2 b-1", 2, 1, 0, vec![0], vec![], -1.0, 256);
    explore("N2 p2 b-2", 2, 1, 0, vec![0], vec![], -2.0, 256);
    explore("N2 p2 b-4", 2, 1, 0, vec![0], vec![], -4.0, 256);
    explore("N3 caseB b-2", 3, 1, 0, vec![0], vec![], -2.0, 256);
    explore("N3 caseA b-2", 2, 1, 1, vec![0], vec![0], -2.0, 256);
    explore("crit8 P1Q0 b-2", 2, 1, 1, vec![1], vec![0], -2.0, 256);
}
