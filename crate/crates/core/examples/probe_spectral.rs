use esn_observer::topology::*;
use std::time::Instant;

fn weighted(kind: TopologyKind, n: usize, d: f64, seed: u64) -> WeightedMatrix {
    let spec = TopologySpec::new(kind, n, d, 0.1);
    assign_weights(&build_skeleton(&spec, seed).unwrap(), seed).unwrap()
}

fn main() {
    println!("-- dense fallback timing --");
    for n in [400usize, 800, 1200, 2000] {
        let w = weighted(TopologyKind::ErdosRenyi, n, 20.0, 1);
        let t = Instant::now();
        let d = dense_spectral_radius(&w).unwrap();
        println!("  schur n={n}: {:?} (rho={d:.4})", t.elapsed());
    }
    println!("-- all four topologies at n=400 defaults, 20 seeds each --");
    for kind in TopologyKind::ALL {
        let mut conv = 0; let mut worst: f64 = 0.0; let mut mv = 0usize;
        for seed in 0..20u64 {
            let w = weighted(kind, 400, 20.0, seed);
            let r = power_iteration(&w);
            if r.converged {
                conv += 1;
                mv = mv.max(r.matvecs);
                let d = dense_spectral_radius(&w).unwrap();
                worst = worst.max(((r.estimate - d)/d).abs());
            }
        }
        println!("  {kind:16} converged {conv}/20 worst_rel={worst:.2e} max_mv={mv}");
    }
}
