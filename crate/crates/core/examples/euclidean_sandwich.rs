//! Mean, sandwich covariance and a confidence-region check in R³.
//!
//! In Euclidean space the sandwich `Λ⁻¹CΛ⁻¹` is exactly the (1/n) sample
//! covariance, which this example prints side by side.

use frechet::estimator::{confidence_region_contains, fit, EstimateOptions};
use frechet::simulate::{Distribution, Sampler};
use frechet::spaces::EuclideanSpace;
use nalgebra::{DMatrix, DVector};

fn main() -> frechet::Result<()> {
    let sampler = Sampler::new(
        Distribution::EuclideanGaussian {
            mean: vec![1.0, 0.0, -1.0],
            cov: vec![vec![1.0, 0.3, 0.0], vec![0.3, 0.5, 0.1], vec![0.0, 0.1, 0.2]],
        },
        7,
    )?;
    let sample = sampler.draw(500)?;
    let space = EuclideanSpace::new(3);
    let f = fit(&space, &sample, &EstimateOptions::default())?;
    let cov = f.covariance.as_ref().expect("fit computes the sandwich");

    let vs: Vec<DVector<f64>> = sample.iter().map(|p| p.as_vector().unwrap().clone()).collect();
    let mean = vs.iter().fold(DVector::zeros(3), |a, v| a + v) / vs.len() as f64;
    let direct = vs
        .iter()
        .fold(DMatrix::zeros(3, 3), |a, v| a + (v - &mean) * (v - &mean).transpose())
        / vs.len() as f64;

    println!("mean        {:.4}", f.chart_coords.transpose());
    println!("Λ (should be 2I){:.4}", cov.lambda_n);
    println!("sandwich{:.5}", cov.asym_cov);
    println!("sample covariance{:.5}", direct);

    let truth = DVector::from_column_slice(&[1.0, 0.0, -1.0]);
    let far = DVector::from_column_slice(&[1.5, 0.0, -1.0]);
    println!("95% region contains the true mean: {}", confidence_region_contains(&f, &truth, 0.05)?);
    println!("95% region contains (1.5, 0, -1):  {}", confidence_region_contains(&f, &far, 0.05)?);
    Ok(())
}
