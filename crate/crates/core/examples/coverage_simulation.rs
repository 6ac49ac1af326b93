//! Monte Carlo checks of the CLT: coverage of the 95% region and the
//! √n decay of the estimation error.

use frechet::estimator::EstimateOptions;
use frechet::geometry::NumericDerivatives;
use frechet::simulate::{mc_consistency, mc_coverage, mc_type1, Distribution, Sampler};
use frechet::spaces::{SpdSpace, SphereSpace};

fn main() -> frechet::Result<()> {
    let opts = EstimateOptions::default();
    let cap = Sampler::new(
        Distribution::SphereCap {
            center: vec![0.0, 0.0, 1.0],
            radius: 0.5,
        },
        42,
    )?;
    let sphere = SphereSpace::intrinsic(3);
    for n in [10, 50, 400] {
        let r = mc_coverage(&NumericDerivatives(sphere), &cap, n, 1000, 0.05, &opts)?;
        println!("S² coverage at n = {n:>3}: {:.3} ± {:.3}", r.estimate, r.std_error);
    }
    for row in mc_consistency(&sphere, &cap, &[50, 500, 5000], 100, &opts)? {
        println!("median error at n = {:>4}: {:.2e}", row.n, row.median_error);
    }

    let spd = Sampler::new(
        Distribution::SpdLogNormal {
            mean_log: vec![vec![0.2, 0.0, 0.0], vec![0.0, 0.0, 0.1], vec![0.0, 0.1, -0.2]],
            scale: 0.3,
        },
        42,
    )?;
    let r = mc_type1(&SpdSpace::log_euclidean(3), &spd, 100, 100, 1000, 0.05, false, &opts)?;
    println!(
        "SPD(3) two-sample type-I error: {:.3} ± {:.3} (df {})",
        r.estimate,
        r.std_error,
        r.dof.unwrap()
    );
    Ok(())
}
