//! The three regimes of the open-book mean: sticky on the spine, on a
//! leaf, and the boundary case where it lands on the spine about half the
//! time.

use frechet::simulate::{boundary_law_test, mc_stickiness, Distribution, Height, LeafLaw, Sampler};
use frechet::spaces::{openbook_classify, openbook_moments, OpenBookSpace};

fn law(probs: &[f64], height: Height) -> Distribution {
    Distribution::OpenBook {
        spine_dim: 2,
        leaves: probs.iter().map(|&prob| LeafLaw { prob, height }).collect(),
        spine_prob: 0.0,
        spine_mean: None,
        spine_sd: 1.0,
    }
}

fn main() -> frechet::Result<()> {
    let space = OpenBookSpace::new(3, 2);
    let one = Height::Constant { value: 1.0 };
    let exp = Height::Exponential { rate: 1.0 };
    let cases = [
        ("all m_k < 0", law(&[1.0 / 3.0; 3], one), 100),
        ("m_1 = 0.2", law(&[0.6, 0.2, 0.2], one), 100),
        ("m_1 = 0", law(&[0.5, 0.25, 0.25], exp), 400),
    ];
    for (name, d, n) in cases {
        let sampler = Sampler::new(d, 5)?;
        println!("{name}: population folded means {:?}", sampler.folded_means().unwrap());

        let one_sample = sampler.draw(n)?;
        let m = openbook_moments(&space, &one_sample)?;
        println!("  one sample: m_k,n = {:.3?} → {:?}", m.folded_means, openbook_classify(&m));

        let report = mc_stickiness(&space, &sampler, n, 1000)?;
        println!(
            "  over {} replications: spine {:.3}, leaves {:.3?}",
            report.reps,
            report.stratum_fractions.as_ref().unwrap()[0],
            &report.stratum_fractions.as_ref().unwrap()[1..]
        );
        if name == "m_1 = 0" {
            let ks = boundary_law_test(&report, &sampler, n, 1)?;
            println!("  √n·x⁰ on leaf 1 vs half-normal: D = {:.4}, p = {:.3}", ks.statistic, ks.p_value);
        }
    }
    Ok(())
}
