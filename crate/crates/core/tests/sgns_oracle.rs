//! Skip-gram pieces against finite differences and sampling frequencies.

use event2vec::baseline::{pair_loss_and_gradient, NegativeSampler};
use event2vec::seed;
use rand::Rng;

const EPS: f64 = 1e-5;
const TOL: f64 = 1e-4;

fn rel(a: f64, n: f64) -> f64 {
    (a - n).abs() / a.abs().max(n.abs()).max(1e-6)
}

#[test]
fn pair_gradient_matches_finite_differences() {
    let mut rng = seed::rng(21);
    for _ in 0..20 {
        let d = rng.gen_range(2..=8);
        let k = rng.gen_range(1..=5);
        let mut vecs: Vec<Vec<f64>> = (0..k + 2).map(|_| (0..d).map(|_| rng.gen_range(-1.0..1.0)).collect()).collect();
        let loss = |v: &[Vec<f64>]| {
            let negs: Vec<&[f64]> = v[2..].iter().map(Vec::as_slice).collect();
            pair_loss_and_gradient(&v[0], &v[1], &negs).loss
        };
        let negs: Vec<&[f64]> = vecs[2..].iter().map(Vec::as_slice).collect();
        let g = pair_loss_and_gradient(&vecs[0], &vecs[1], &negs);
        let mut analytic = vec![g.center, g.context];
        analytic.extend(g.negatives);
        for r in 0..vecs.len() {
            for c in 0..d {
                let orig = vecs[r][c];
                vecs[r][c] = orig + EPS;
                let up = loss(&vecs);
                vecs[r][c] = orig - EPS;
                let down = loss(&vecs);
                vecs[r][c] = orig;
                let numeric = (up - down) / (2.0 * EPS);
                let err = rel(analytic[r][c], numeric);
                assert!(err <= TOL, "row {r} col {c}: {} vs {numeric} ({err:e})", analytic[r][c]);
            }
        }
    }
}

#[test]
fn sampler_frequencies_within_three_sigma() {
    let counts = [50u64, 1, 7, 300, 0, 20];
    let sampler = NegativeSampler::new(&counts, 0.75).unwrap();
    let draws = 1_000_000;
    let mut hits = [0usize; 6];
    let mut rng = seed::rng(22);
    for _ in 0..draws {
        hits[sampler.sample(&mut rng)] += 1;
    }
    let total: f64 = counts.iter().map(|&c| (c as f64).powf(0.75)).sum();
    for (i, &c) in counts.iter().enumerate() {
        let p = (c as f64).powf(0.75) / total;
        let mean = p * draws as f64;
        let sigma = (draws as f64 * p * (1.0 - p)).sqrt();
        assert!(
            (hits[i] as f64 - mean).abs() <= 3.0 * sigma,
            "id {i}: {} draws, expected {mean:.0} ± {:.0}",
            hits[i],
            3.0 * sigma
        );
    }
    assert_eq!(hits[4], 0);
}
