//! Intrinsic (Karcher) and extrinsic (projected) means on S², with the CLT
//! confidence region in normal coordinates.

use frechet::estimator::{confidence_statistic, fit, EstimateOptions};
use frechet::geometry::{Point, Space};
use frechet::inference::chi2_quantile;
use frechet::simulate::{Distribution, Sampler};
use frechet::spaces::SphereSpace;

fn main() -> frechet::Result<()> {
    let center = vec![0.0, 0.6, 0.8];
    let opts = EstimateOptions::default();
    for radius in [0.1, 0.6, 1.2] {
        let sampler = Sampler::new(
            Distribution::SphereCap {
                center: center.clone(),
                radius,
            },
            11,
        )?;
        let sample = sampler.draw(300)?;
        let intrinsic = SphereSpace::intrinsic(3);
        let a = fit(&intrinsic, &sample, &opts)?;
        let b = fit(&SphereSpace::extrinsic(3), &sample, &opts)?;
        let gap = intrinsic.distance(&a.mean, &b.mean)?;
        println!(
            "cap radius {radius}: {} Karcher steps, intrinsic vs extrinsic gap {gap:.2e}",
            a.iterations
        );

        let truth = Point::sphere_normalized(nalgebra::DVector::from_vec(center.clone()))?;
        let x = intrinsic.chart_at(&a.mean)?.forward(&truth)?;
        let stat = confidence_statistic(&a, &x)?;
        println!(
            "  statistic for the cap center {stat:.3} (95% cut-off {:.3})",
            chi2_quantile(0.95, 2)
        );
    }
    Ok(())
}
