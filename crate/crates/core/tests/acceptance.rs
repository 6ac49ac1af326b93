//! Acceptance run: one line per criterion, nonzero exit if any fails.
//!
//! Oracles are computed independently of the library where possible:
//! nalgebra's own eigensolver for matrix functions, closed-form and
//! quadrature chi-square tails, and a brute-force Benjamini–Hochberg.

use std::process::Command;
use std::time::{Duration, Instant};

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use frechet::estimator::{fit, EstimateOptions};
use frechet::geometry::{frechet_value, NumericDerivatives, Point, Space};
use frechet::inference::{bh_fdr, chi2_quantile, chi2_sf, two_sample_statistic};
use frechet::simulate::{
    boundary_law_test, mc_consistency, mc_coverage, mc_stickiness, mc_type1, Distribution,
    Height, LeafLaw, Sampler,
};
use frechet::spaces::{
    openbook_distance, openbook_frechet_mean, openbook_moments, spd_expm, spd_logm,
    EuclideanSpace, OpenBookSpace, SpdSpace, SphereSpace,
};

const SEED: u64 = 42;

struct Outcome {
    pass: bool,
    detail: String,
}

fn gauss(rng: &mut ChaCha8Rng) -> f64 {
    rng.sample(StandardNormal)
}

fn random_vec(rng: &mut ChaCha8Rng, n: usize) -> DVector<f64> {
    DVector::from_fn(n, |_, _| gauss(rng))
}

fn random_mat(rng: &mut ChaCha8Rng, n: usize) -> DMatrix<f64> {
    DMatrix::from_fn(n, n, |_, _| gauss(rng))
}

fn random_spd(rng: &mut ChaCha8Rng, n: usize) -> DMatrix<f64> {
    let g = random_mat(rng, n) * 0.6;
    &g * g.transpose() + DMatrix::identity(n, n) * 0.2
}

/// Spectral function of a symmetric matrix through nalgebra's eigensolver.
fn oracle_fn(a: &DMatrix<f64>, f: impl Fn(f64) -> f64) -> DMatrix<f64> {
    let e = a.clone().symmetric_eigen();
    let d = DMatrix::from_diagonal(&e.eigenvalues.map(f));
    &e.eigenvectors * d * e.eigenvectors.transpose()
}

/// Diagonal entries, then `√2 ×` upper off-diagonals row by row.
fn oracle_vech(a: &DMatrix<f64>) -> DVector<f64> {
    let p = a.nrows();
    let mut v: Vec<f64> = (0..p).map(|i| a[(i, i)]).collect();
    for i in 0..p {
        for j in i + 1..p {
            v.push(std::f64::consts::SQRT_2 * a[(i, j)]);
        }
    }
    DVector::from_vec(v)
}

/// Mean and `1/n` covariance.
fn moments(vs: &[DVector<f64>]) -> (DVector<f64>, DMatrix<f64>) {
    let n = vs.len() as f64;
    let d = vs[0].len();
    let mean = vs.iter().fold(DVector::zeros(d), |acc, v| acc + v) / n;
    let cov = vs
        .iter()
        .fold(DMatrix::zeros(d, d), |acc, v| acc + (v - &mean) * (v - &mean).transpose())
        / n;
    (mean, cov)
}

fn rel_frobenius(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    (a - b).norm() / b.norm().max(f64::MIN_POSITIVE)
}

fn within_time(elapsed: Duration, limit_secs: u64) -> bool {
    elapsed <= Duration::from_secs(limit_secs)
}

fn criterion_1() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let space = EuclideanSpace::new(6);
    let (mut worst_mean, mut worst_cov) = (0.0f64, 0.0f64);
    for _ in 0..100 {
        let l = random_mat(&mut rng, 6);
        let shift = random_vec(&mut rng, 6) * 3.0;
        let vs: Vec<DVector<f64>> = (0..50).map(|_| &shift + &l * random_vec(&mut rng, 6)).collect();
        let pts: Vec<Point> = vs.iter().map(|v| Point::euclidean(v.clone()).unwrap()).collect();
        let f = fit(&space, &pts, &EstimateOptions::default()).unwrap();
        let (mean, cov) = moments(&vs);
        worst_mean = worst_mean.max((f.mean.as_vector().unwrap() - &mean).amax());
        worst_cov = worst_cov.max(rel_frobenius(&f.covariance.unwrap().asym_cov, &cov));
    }
    let elapsed = start.elapsed();
    Outcome {
        pass: worst_mean <= 1e-12 && worst_cov <= 1e-8 && within_time(elapsed, 5),
        detail: format!(
            "max |mean err| {worst_mean:.2e} (≤1e-12), max rel cov err {worst_cov:.2e} (≤1e-8), {elapsed:.2?} (<5s)"
        ),
    }
}

fn criterion_2() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(SEED + 1);
    let space = SpdSpace::log_euclidean(3);
    let (mut worst_mean, mut worst_cov) = (0.0f64, 0.0f64);
    for _ in 0..100 {
        let mats: Vec<DMatrix<f64>> = (0..40).map(|_| random_spd(&mut rng, 3)).collect();
        let pts: Vec<Point> = mats.iter().map(|a| Point::spd(a.clone()).unwrap()).collect();
        let f = fit(&space, &pts, &EstimateOptions::default()).unwrap();
        let logs: Vec<DVector<f64>> = mats.iter().map(|a| oracle_vech(&oracle_fn(a, f64::ln))).collect();
        let (_, cov) = moments(&logs);
        let mean_log = mats
            .iter()
            .fold(DMatrix::zeros(3, 3), |acc, a| acc + oracle_fn(a, f64::ln))
            / mats.len() as f64;
        let expected = oracle_fn(&mean_log, f64::exp);
        worst_mean = worst_mean.max((f.mean.as_matrix().unwrap() - &expected).amax());
        worst_cov = worst_cov.max(rel_frobenius(&f.covariance.unwrap().asym_cov, &cov));
    }
    let elapsed = start.elapsed();
    Outcome {
        pass: worst_mean <= 1e-10 && worst_cov <= 1e-8 && within_time(elapsed, 10),
        detail: format!(
            "max |mean err| {worst_mean:.2e} (≤1e-10), max rel cov err {worst_cov:.2e} (≤1e-8), {elapsed:.2?} (<10s)"
        ),
    }
}

fn in_band(x: f64, lo: f64, hi: f64) -> bool {
    (lo..=hi).contains(&x)
}

fn criterion_3() -> Outcome {
    let start = Instant::now();
    let opts = EstimateOptions::default();
    let euclid = Sampler::new(
        Distribution::EuclideanGaussian {
            mean: vec![1.0, -2.0, 0.5],
            cov: vec![vec![2.0, 0.5, 0.0], vec![0.5, 1.0, 0.3], vec![0.0, 0.3, 0.5]],
        },
        SEED,
    )
    .unwrap();
    let a = mc_coverage(&EuclideanSpace::new(3), &euclid, 200, 2000, 0.05, &opts).unwrap();

    let spd = Sampler::new(
        Distribution::SpdLogNormal {
            mean_log: vec![vec![0.5, 0.1, 0.0], vec![0.1, -0.2, 0.2], vec![0.0, 0.2, 0.0]],
            scale: 0.3,
        },
        SEED,
    )
    .unwrap();
    let b = mc_coverage(&SpdSpace::log_euclidean(3), &spd, 200, 2000, 0.05, &opts).unwrap();

    let cap = Sampler::new(
        Distribution::SphereCap {
            center: vec![0.0, 0.6, 0.8],
            radius: 0.5,
        },
        SEED,
    )
    .unwrap();
    let c = mc_coverage(
        &NumericDerivatives(SphereSpace::intrinsic(3)),
        &cap,
        400,
        2000,
        0.05,
        &opts,
    )
    .unwrap();
    let elapsed = start.elapsed();
    let ok = |r: &frechet::simulate::McReport| in_band(r.estimate, 0.935, 0.965);
    Outcome {
        pass: ok(&a) && ok(&b) && ok(&c) && within_time(elapsed, 300),
        detail: format!(
            "coverage R³ {:.4}, SPD(3) {:.4}, S² numeric {:.4} (each in [0.935, 0.965]; failures {}/{}/{}), {elapsed:.2?} (<300s)",
            a.estimate, b.estimate, c.estimate, a.failures, b.failures, c.failures
        ),
    }
}

fn book(spine_dim: usize, probs: &[f64], height: Height) -> Distribution {
    Distribution::OpenBook {
        spine_dim,
        leaves: probs.iter().map(|&prob| LeafLaw { prob, height }).collect(),
        spine_prob: 0.0,
        spine_mean: None,
        spine_sd: 1.0,
    }
}

fn boundary_sampler() -> Sampler {
    let d = book(2, &[0.5, 0.25, 0.25], Height::Exponential { rate: 1.0 });
    Sampler::new(d, SEED).unwrap()
}

fn criterion_4() -> Outcome {
    let start = Instant::now();
    let space = OpenBookSpace::new(3, 2);
    let third = 1.0 / 3.0;
    let spine = Sampler::new(book(2, &[third, third, third], Height::Constant { value: 1.0 }), SEED)
        .unwrap();
    let leaf = Sampler::new(book(2, &[0.6, 0.2, 0.2], Height::Constant { value: 1.0 }), SEED).unwrap();
    let boundary = boundary_sampler();
    let a = mc_stickiness(&space, &spine, 100, 500).unwrap();
    let b = mc_stickiness(&space, &leaf, 100, 500).unwrap();
    let c = mc_stickiness(&space, &boundary, 400, 2000).unwrap();
    let spine_a = a.stratum_fractions.as_ref().unwrap()[0];
    let leaf_b = b.stratum_fractions.as_ref().unwrap()[1];
    let spine_c = c.stratum_fractions.as_ref().unwrap()[0];
    let elapsed = start.elapsed();
    Outcome {
        pass: spine_a >= 0.99
            && leaf_b >= 0.95
            && (spine_c - 0.5).abs() <= 0.04
            && within_time(elapsed, 120),
        detail: format!(
            "m<0: spine {spine_a:.4} (≥0.99); m₁=0.2: leaf 1 {leaf_b:.4} (≥0.95); m₁=0: spine {spine_c:.4} (0.5±0.04), {elapsed:.2?} (<120s)"
        ),
    }
}

fn criterion_5() -> Outcome {
    let space = OpenBookSpace::new(3, 2);
    let sampler = boundary_sampler();
    let report = mc_stickiness(&space, &sampler, 400, 2000).unwrap();
    let ks = boundary_law_test(&report, &sampler, 400, 1).unwrap();
    Outcome {
        pass: ks.p_value >= 0.01,
        detail: format!(
            "KS D = {:.4} on {} leaf-1 replications vs half-normal(σ² = {}), p = {:.4} (≥0.01)",
            ks.statistic,
            ks.n,
            sampler.folded_variance(1).unwrap(),
            ks.p_value
        ),
    }
}

fn criterion_6() -> Outcome {
    let sampler = Sampler::new(
        Distribution::SpdLogNormal {
            mean_log: vec![vec![0.3, 0.1, 0.0], vec![0.1, 0.0, -0.1], vec![0.0, -0.1, -0.3]],
            scale: 0.25,
        },
        SEED,
    )
    .unwrap();
    let r = mc_type1(
        &SpdSpace::log_euclidean(3),
        &sampler,
        100,
        100,
        2000,
        0.05,
        false,
        &EstimateOptions::default(),
    )
    .unwrap();
    Outcome {
        pass: in_band(r.estimate, 0.035, 0.065) && r.dof == Some(6),
        detail: format!(
            "rejection rate {:.4} ± {:.4} (in [0.035, 0.065]), df {:?} (= 6), failures {}",
            r.estimate, r.std_error, r.dof, r.failures
        ),
    }
}

fn criterion_7() -> Outcome {
    let opts = EstimateOptions::default();
    let grid = [50, 500, 5000];
    let reps = 200;
    let cases: Vec<(&str, Box<dyn Space>, Distribution)> = vec![
        (
            "R³",
            Box::new(EuclideanSpace::new(3)),
            Distribution::EuclideanGaussian {
                mean: vec![0.0, 1.0, 2.0],
                cov: vec![vec![1.0, 0.2, 0.0], vec![0.2, 1.0, 0.0], vec![0.0, 0.0, 0.5]],
            },
        ),
        (
            "S² intrinsic",
            Box::new(SphereSpace::intrinsic(3)),
            Distribution::SphereCap {
                center: vec![1.0, 0.0, 0.0],
                radius: 0.8,
            },
        ),
        (
            "S² extrinsic",
            Box::new(SphereSpace::extrinsic(3)),
            Distribution::SphereCap {
                center: vec![0.0, 0.0, 1.0],
                radius: 0.8,
            },
        ),
        (
            "SPD(3) log-Euclidean",
            Box::new(SpdSpace::log_euclidean(3)),
            Distribution::SpdLogNormal {
                mean_log: vec![vec![0.2, 0.0, 0.1], vec![0.0, 0.0, 0.0], vec![0.1, 0.0, -0.2]],
                scale: 0.3,
            },
        ),
        (
            "open book (leaf mean)",
            Box::new(OpenBookSpace::new(3, 2)),
            book(2, &[0.6, 0.2, 0.2], Height::Exponential { rate: 1.0 }),
        ),
    ];
    let mut pass = true;
    let mut parts = Vec::new();
    for (name, space, d) in cases {
        let sampler = Sampler::new(d, SEED).unwrap();
        let rows = mc_consistency(&*space, &sampler, &grid, reps, &opts).unwrap();
        let m: Vec<f64> = rows.iter().map(|r| r.median_error).collect();
        let ratio = m[2] / m[1];
        let ok = m[0] > m[1] && m[1] > m[2] && in_band(ratio, 0.2, 0.5);
        pass &= ok;
        parts.push(format!(
            "{name}: {:.2e} > {:.2e} > {:.2e}, ratio {ratio:.3}{}",
            m[0],
            m[1],
            m[2],
            if ok { "" } else { " ✗" }
        ));
    }
    Outcome {
        pass,
        detail: format!("{} (ratio in [0.2, 0.5])", parts.join("; ")),
    }
}

/// `P(χ²₁ > x) = 2 ∫_{√x}^∞ φ(t) dt` by composite Simpson.
fn chi2_1_sf_quadrature(x: f64) -> f64 {
    let a = x.sqrt();
    let b = a + 40.0;
    let n = 200_000;
    let h = (b - a) / n as f64;
    let phi = |t: f64| (-0.5 * t * t).exp() / (2.0 * std::f64::consts::PI).sqrt();
    let mut s = phi(a) + phi(b);
    for i in 1..n {
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        s += w * phi(a + i as f64 * h);
    }
    2.0 * s * h / 3.0
}

/// Rejection set by the counting form: `R = max{k : #{pᵢ ≤ kα/m} ≥ k}`.
fn bh_brute_force(p: &[f64], alpha: f64) -> Vec<bool> {
    let m = p.len();
    let mut r = 0;
    for k in 1..=m {
        let t = k as f64 * alpha / m as f64;
        if p.iter().filter(|&&x| x <= t).count() >= k {
            r = k;
        }
    }
    let t = r as f64 * alpha / m as f64;
    p.iter().map(|&x| r > 0 && x <= t).collect()
}

fn criterion_8() -> Outcome {
    let mut notes = Vec::new();
    let mut pass = true;

    let mut worst = 0.0f64;
    for i in 0..200 {
        let x = 0.05 * i as f64;
        worst = worst.max((chi2_sf(x, 2) - (-x / 2.0).exp()).abs());
        if x > 0.0 {
            worst = worst.max((chi2_sf(x, 1) - chi2_1_sf_quadrature(x)).abs());
        }
        let h = x / 2.0;
        worst = worst.max((chi2_sf(x, 6) - (-h).exp() * (1.0 + h + h * h / 2.0)).abs());
    }
    pass &= worst <= 1e-10;
    notes.push(format!("closed-form max err {worst:.1e} (≤1e-10)"));

    let p = chi2_sf(12.5916, 6);
    let q = chi2_quantile(0.95, 6);
    pass &= (p - 0.05).abs() <= 1e-4 && (q - 12.5916).abs() <= 1e-4;
    notes.push(format!("sf(12.5916; 6) = {p:.6}, q₀.₉₅ = {q:.6}"));

    let mut rng = ChaCha8Rng::seed_from_u64(SEED + 8);
    let mut mismatches = 0;
    for trial in 0..1000 {
        let m = rng.random_range(1..=20);
        let pv: Vec<f64> = (0..m)
            .map(|_| {
                let u: f64 = rng.random::<f64>().powi(3);
                if trial % 3 == 0 {
                    (u * 100.0).round() / 100.0
                } else {
                    u
                }
            })
            .collect();
        let alpha = [0.01, 0.05, 0.1, 0.2][trial % 4];
        if bh_fdr(&pv, alpha).unwrap().rejected != bh_brute_force(&pv, alpha) {
            mismatches += 1;
        }
    }
    pass &= mismatches == 0;
    notes.push(format!("BH mismatches {mismatches}/1000"));

    let mut worst_rel = 0.0f64;
    for _ in 0..100 {
        let s = 6;
        let xs: Vec<DVector<f64>> = (0..25).map(|_| random_vec(&mut rng, s)).collect();
        let ys: Vec<DVector<f64>> = (0..30).map(|_| random_vec(&mut rng, s) * 1.3).collect();
        let a = random_mat(&mut rng, s) + DMatrix::identity(s, s) * 2.0;
        let b = random_vec(&mut rng, s);
        let map = |v: &DVector<f64>| &a * v + &b;
        let t0 = two_sample_statistic(&xs, &ys).unwrap().statistic;
        let xt: Vec<_> = xs.iter().map(map).collect();
        let yt: Vec<_> = ys.iter().map(map).collect();
        let t1 = two_sample_statistic(&xt, &yt).unwrap().statistic;
        worst_rel = worst_rel.max((t0 - t1).abs() / t0.abs().max(1.0));
    }
    pass &= worst_rel <= 1e-8;
    notes.push(format!("affine invariance err {worst_rel:.1e} (≤1e-8)"));

    Outcome {
        pass,
        detail: notes.join("; "),
    }
}

fn random_book_point(rng: &mut ChaCha8Rng, leaves: usize, spine_dim: usize) -> Point {
    let mut coords = random_vec(rng, spine_dim + 1);
    let leaf = if rng.random::<f64>() < 0.05 {
        coords[0] = 0.0;
        0
    } else {
        coords[0] = coords[0].abs() + 1e-3;
        rng.random_range(1..=leaves)
    };
    Point::open_book(leaf, coords).unwrap()
}

fn criterion_9() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED + 9);
    let mut notes = Vec::new();

    let mut worst = 0.0f64;
    for _ in 0..1000 {
        let a = random_spd(&mut rng, 3);
        worst = worst.max((spd_expm(&spd_logm(&a).unwrap()).unwrap() - &a).amax());
        let g = random_mat(&mut rng, 3);
        let b = (&g + g.transpose()) * 0.5;
        worst = worst.max((spd_logm(&spd_expm(&b).unwrap()).unwrap() - &b).amax());
    }
    let roundtrip = worst <= 1e-10;
    notes.push(format!("expm/logm round trip {worst:.1e} (≤1e-10)"));

    let mut multi = 0;
    for _ in 0..10_000 {
        let leaves = rng.random_range(2..=6);
        let spine_dim = rng.random_range(0..=3);
        let space = OpenBookSpace::new(leaves, spine_dim);
        let n = rng.random_range(1..=30);
        let sample: Vec<Point> = (0..n).map(|_| random_book_point(&mut rng, leaves, spine_dim)).collect();
        let m = openbook_moments(&space, &sample).unwrap();
        if m.folded_means.iter().filter(|&&x| x > 0.0).count() > 1 {
            multi += 1;
        }
    }
    notes.push(format!("samples with >1 positive m_k: {multi}"));

    let mut beaten = 0;
    for _ in 0..1000 {
        let leaves = rng.random_range(2..=5);
        let spine_dim = rng.random_range(0..=2);
        let space = OpenBookSpace::new(leaves, spine_dim);
        let n = rng.random_range(1..=25);
        let sample: Vec<Point> = (0..n).map(|_| random_book_point(&mut rng, leaves, spine_dim)).collect();
        let mean = openbook_frechet_mean(&space, &sample).unwrap();
        let fm = frechet_value(&space, &sample, None, &mean).unwrap();
        for _ in 0..100 {
            let c = random_book_point(&mut rng, leaves, spine_dim);
            if frechet_value(&space, &sample, None, &c).unwrap() < fm - 1e-12 * fm.max(1.0) {
                beaten += 1;
            }
        }
    }
    notes.push(format!("candidates beating the mean: {beaten}"));

    let mut triangle = 0;
    for _ in 0..10_000 {
        let leaves = rng.random_range(2..=5);
        let spine_dim = rng.random_range(0..=3);
        let [a, b, c] = [0; 3].map(|_| random_book_point(&mut rng, leaves, spine_dim));
        let (a, b, c) = (a.as_book().unwrap(), b.as_book().unwrap(), c.as_book().unwrap());
        if openbook_distance(a, c) > openbook_distance(a, b) + openbook_distance(b, c) + 1e-12 {
            triangle += 1;
        }
    }
    notes.push(format!("triangle violations: {triangle}"));

    Outcome {
        pass: roundtrip && multi == 0 && beaten == 0 && triangle == 0,
        detail: notes.join("; "),
    }
}

fn run_cli(args: &[&str]) -> i32 {
    Command::new(env!("CARGO_BIN_EXE_frechet"))
        .args(args)
        .status()
        .expect("run frechet")
        .code()
        .unwrap_or(-1)
}

fn criterion_10() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let path = |name: &str| dir.path().join(name).to_string_lossy().into_owned();
    let effect: Vec<usize> = (10..=20).collect();
    let mut pass = true;
    let mut notes = Vec::new();

    for round in 0..2 {
        let data = path(&format!("fiber{round}.csv"));
        let code = run_cli(&[
            "gen-fiber", "--group-sizes", "28,18", "--sites", "75", "--effect-sites", "10-20",
            "--effect-size", "2.0", "--seed", "2024", "--output", &data,
        ]);
        pass &= code == 0;
        for metric in ["euclidean", "log-euclidean"] {
            let out = path(&format!("{metric}{round}.csv"));
            let summary = path(&format!("{metric}{round}.json"));
            let code = run_cli(&[
                "fiber", &data, "--metric", metric, "--alpha", "0.05", "--output", &out,
                "--summary", &summary,
            ]);
            pass &= code == 0;
            if round == 0 {
                let text = std::fs::read_to_string(&out).unwrap();
                let rejected: Vec<usize> = text
                    .lines()
                    .skip(1)
                    .filter(|l| l.split(',').nth(5) == Some("true"))
                    .map(|l| l.split(',').next().unwrap().parse().unwrap())
                    .collect();
                let hits = rejected.iter().filter(|s| effect.contains(s)).count();
                let false_hits = rejected.len() - hits;
                let ok = hits * 10 >= effect.len() * 8 && false_hits <= 2;
                pass &= ok;
                notes.push(format!(
                    "{metric}: BH rejects {hits}/{} effect sites (≥80%), {false_hits} null sites (≤2)",
                    effect.len()
                ));
            }
        }
    }
    let same = |a: &str, b: &str| std::fs::read(path(a)).unwrap() == std::fs::read(path(b)).unwrap();
    let identical = same("fiber0.csv", "fiber1.csv")
        && ["euclidean", "log-euclidean"].iter().all(|m| {
            same(&format!("{m}0.csv"), &format!("{m}1.csv"))
                && same(&format!("{m}0.json"), &format!("{m}1.json"))
        });
    pass &= identical;
    notes.push(format!("repeat runs byte-identical: {identical}"));
    Outcome {
        pass,
        detail: notes.join("; "),
    }
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 10] = [
        ("1 Euclidean oracle", criterion_1),
        ("2 SPD reduction", criterion_2),
        ("3 CLT coverage", criterion_3),
        ("4 stickiness trichotomy", criterion_4),
        ("5 boundary half-normal law", criterion_5),
        ("6 type-I error", criterion_6),
        ("7 consistency decay", criterion_7),
        ("8 inference oracles", criterion_8),
        ("9 geometry kernel", criterion_9),
        ("10 fiber pipeline", criterion_10),
    ];
    let mut failed = 0;
    for (name, run) in criteria {
        let o = run();
        if !o.pass {
            failed += 1;
        }
        println!("[{}] {name}: {}", if o.pass { "PASS" } else { "FAIL" }, o.detail);
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
