//! Additivity curve, analogies, silhouette, nearest neighbours and PCA.

use std::collections::BTreeMap;

use nalgebra::{DMatrix, SymmetricEigen};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::dataset::Vocabulary;
use crate::error::{Error, Result};
use crate::geometry::{self, Geometry};
use crate::model::{self, ModelParams};
use crate::seed;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdditivityCurve {
    pub lengths: Vec<usize>,
    pub mean_cosine: Vec<f64>,
    pub num_trials: usize,
    pub seed: u64,
}

impl AdditivityCurve {
    pub fn at(&self, length: usize) -> Option<f64> {
        self.lengths.iter().position(|&l| l == length).map(|i| self.mean_cosine[i])
    }
}

/// Cosine between the clipped final state and the unclipped embedding sum
/// of uniformly random sequences, averaged per length.
pub fn additivity_curve(params: &ModelParams, lengths: &[usize], num_trials: usize, seed: u64) -> Result<AdditivityCurve> {
    if params.geometry.is_hyperbolic() {
        return Err(Error::Unsupported(
            "additivity curve compares against a Euclidean vector sum; the model is hyperbolic".into(),
        ));
    }
    if lengths.is_empty() || lengths.contains(&0) {
        return Err(Error::usage("lengths must be a nonempty list of positive integers"));
    }
    if num_trials == 0 {
        return Err(Error::usage("num_trials must be positive"));
    }
    let v = params.vocab_size();
    let mut rng = seed::rng(seed);
    let mut mean_cosine = Vec::with_capacity(lengths.len());
    for &len in lengths {
        let mut total = 0.0;
        for _ in 0..num_trials {
            let seq: Vec<usize> = (0..len).map(|_| rng.gen_range(0..v)).collect();
            let traj = model::forward(params, &seq, None)?;
            let mut ideal = vec![0.0; params.dim()];
            for &s in &seq {
                for (a, b) in ideal.iter_mut().zip(params.embedding(s)) {
                    *a += b;
                }
            }
            total += geometry::cosine(traj.last(), &ideal).clamp(-1.0, 1.0);
        }
        mean_cosine.push(total / num_trials as f64);
    }
    Ok(AdditivityCurve {
        lengths: lengths.to_vec(),
        mean_cosine,
        num_trials,
        seed,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Ranked {
    pub event: String,
    pub score: f64,
}

/// `cosine` for Euclidean models, `neg_poincare` (negative distance) on the ball.
fn score_name(g: &Geometry) -> &'static str {
    if g.is_hyperbolic() {
        "neg_poincare"
    } else {
        "cosine"
    }
}

fn similarity(g: &Geometry, x: &[f64], y: &[f64]) -> f64 {
    match g {
        Geometry::Hyperbolic { c } => -geometry::poincare_distance_unchecked(x, y, *c),
        Geometry::Euclidean { .. } => geometry::cosine(x, y),
    }
}

/// Every vocabulary entry ranked by similarity to `target`, best first;
/// ties keep vocabulary order.
fn rank(params: &ModelParams, vocab: &Vocabulary, target: &[f64], skip: &[usize], k: usize) -> Vec<Ranked> {
    let mut scored: Vec<(usize, f64)> = (0..params.vocab_size())
        .filter(|i| !skip.contains(i))
        .map(|i| (i, similarity(&params.geometry, target, params.embedding(i))))
        .collect();
    scored.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
    scored
        .into_iter()
        .take(k)
        .map(|(i, score)| Ranked {
            event: vocab.name(i).to_string(),
            score,
        })
        .collect()
}

fn check_vocab(params: &ModelParams, vocab: &Vocabulary) -> Result<()> {
    if params.vocab_size() != vocab.len() {
        return Err(Error::Data(format!(
            "vocabulary has {} entries but the model has {}",
            vocab.len(),
            params.vocab_size()
        )));
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnalogyResult {
    pub query: [String; 3],
    pub metric: String,
    pub ranked: Vec<Ranked>,
    pub excluded: Vec<String>,
}

/// Top-k answers to `a − b + c`. On the ball the target is `(a ⊕ −b) ⊕ c`.
pub fn analogy(
    params: &ModelParams,
    vocab: &Vocabulary,
    a: &str,
    b: &str,
    c: &str,
    k: usize,
    exclude_queries: bool,
) -> Result<AnalogyResult> {
    check_vocab(params, vocab)?;
    let ids = [vocab.lookup(a)?, vocab.lookup(b)?, vocab.lookup(c)?];
    let [ea, eb, ec] = ids.map(|i| params.embedding(i));
    let target = match params.geometry {
        Geometry::Hyperbolic { c: curv } => {
            let left = geometry::mobius_add(ea, &geometry::negate(eb), curv)?;
            geometry::mobius_add(&left, ec, curv)?
        }
        Geometry::Euclidean { .. } => ea.iter().zip(eb).zip(ec).map(|((x, y), z)| x - y + z).collect(),
    };
    let mut skip: Vec<usize> = if exclude_queries { ids.to_vec() } else { vec![] };
    skip.dedup();
    Ok(AnalogyResult {
        query: [a, b, c].map(String::from),
        metric: score_name(&params.geometry).into(),
        ranked: rank(params, vocab, &target, &skip, k),
        excluded: skip.iter().map(|&i| vocab.name(i).to_string()).collect(),
    })
}

/// Top-k entries closest to `event`, excluding itself.
pub fn nearest_neighbors(params: &ModelParams, vocab: &Vocabulary, event: &str, k: usize) -> Result<Vec<Ranked>> {
    check_vocab(params, vocab)?;
    let id = vocab.lookup(event)?;
    Ok(rank(params, vocab, params.embedding(id), &[id], k))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase", tag = "name")]
pub enum Metric {
    Cosine,
    Euclidean,
    Poincare { c: f64 },
}

impl Metric {
    pub fn name(&self) -> &'static str {
        match self {
            Metric::Cosine => "cosine",
            Metric::Euclidean => "euclidean",
            Metric::Poincare { .. } => "poincare",
        }
    }

    pub fn distance(&self, x: &[f64], y: &[f64]) -> f64 {
        match self {
            Metric::Cosine => 1.0 - geometry::cosine(x, y),
            Metric::Euclidean => x.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt(),
            Metric::Poincare { c } => geometry::poincare_distance_unchecked(x, y, *c),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SilhouetteReport {
    pub overall: f64,
    pub per_cluster: BTreeMap<String, f64>,
    pub n_points: usize,
    pub metric: String,
}

/// Mean silhouette coefficient. A point alone in its cluster scores 0.
pub fn silhouette<L: AsRef<str>>(points: &[Vec<f64>], labels: &[L], metric: Metric) -> Result<SilhouetteReport> {
    let n = points.len();
    if labels.len() != n {
        return Err(Error::Usage(format!("{n} points but {} labels", labels.len())));
    }
    if n < 4 {
        return Err(Error::Usage(format!("silhouette needs at least 4 points, got {n}")));
    }
    if let Metric::Poincare { c } = metric {
        if points.iter().any(|p| !geometry::in_ball(p, c)) {
            return Err(Error::Domain("poincare metric needs every point inside the ball".into()));
        }
    }
    let mut names: Vec<&str> = labels.iter().map(AsRef::as_ref).collect();
    names.sort_unstable();
    names.dedup();
    if names.len() < 2 {
        return Err(Error::usage("silhouette needs at least 2 distinct labels"));
    }
    let cluster: Vec<usize> = labels
        .iter()
        .map(|l| names.binary_search(&l.as_ref()).expect("label present"))
        .collect();
    let mut sizes = vec![0usize; names.len()];
    for &k in &cluster {
        sizes[k] += 1;
    }
    for (name, &size) in names.iter().zip(&sizes) {
        if size == 1 {
            log::warn!("cluster {name:?} has a single point; its silhouette is taken as 0");
        }
    }

    let mut scores = vec![0.0; n];
    let mut sums = vec![0.0; names.len()];
    for i in 0..n {
        sums.iter_mut().for_each(|s| *s = 0.0);
        for j in 0..n {
            if j != i {
                sums[cluster[j]] += metric.distance(&points[i], &points[j]);
            }
        }
        let own = cluster[i];
        if sizes[own] < 2 {
            continue;
        }
        let a = sums[own] / (sizes[own] - 1) as f64;
        let b = (0..names.len())
            .filter(|&k| k != own)
            .map(|k| sums[k] / sizes[k] as f64)
            .fold(f64::INFINITY, f64::min);
        let denom = a.max(b);
        scores[i] = if denom > 0.0 { (b - a) / denom } else { 0.0 };
    }

    let mut per_cluster = BTreeMap::new();
    for (k, name) in names.iter().enumerate() {
        let (sum, count) = scores
            .iter()
            .zip(&cluster)
            .filter(|(_, &c)| c == k)
            .fold((0.0, 0usize), |(s, m), (v, _)| (s + v, m + 1));
        per_cluster.insert(name.to_string(), sum / count as f64);
    }
    Ok(SilhouetteReport {
        overall: scores.iter().sum::<f64>() / n as f64,
        per_cluster,
        n_points: n,
        metric: metric.name().into(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Projection {
    pub points: Vec<Vec<f64>>,
    pub explained_variance_ratio: Vec<f64>,
}

/// Mean-centred projection onto the top `out_dim` principal directions.
pub fn pca_project(points: &[Vec<f64>], out_dim: usize) -> Result<Projection> {
    if !(out_dim == 2 || out_dim == 3) {
        return Err(Error::Usage(format!("out_dim must be 2 or 3, got {out_dim}")));
    }
    let n = points.len();
    if n <= out_dim {
        return Err(Error::Usage(format!("pca needs more than {out_dim} points, got {n}")));
    }
    let d = points[0].len();
    if points.iter().any(|p| p.len() != d) {
        return Err(Error::usage("points have different dimensions"));
    }
    let x = DMatrix::from_fn(n, d, |i, j| points[i][j]);
    let mean = x.row_mean();
    let centred = DMatrix::from_fn(n, d, |i, j| x[(i, j)] - mean[j]);
    let cov = centred.transpose() * &centred / (n - 1) as f64;
    let eig = SymmetricEigen::new(cov);
    let mut order: Vec<usize> = (0..d).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]).then(a.cmp(&b)));
    let total: f64 = eig.eigenvalues.iter().map(|v| v.max(0.0)).sum();

    let mut ratios = Vec::with_capacity(out_dim);
    let mut basis = DMatrix::zeros(d, out_dim);
    for (k, &idx) in order.iter().take(out_dim).enumerate() {
        let lambda = eig.eigenvalues[idx].max(0.0);
        ratios.push(if total > 0.0 { lambda / total } else { 0.0 });
        let mut v = eig.eigenvectors.column(idx).into_owned();
        // Sign convention: largest-magnitude component positive.
        let pivot = v.iter().copied().fold(0.0f64, |m, c| if c.abs() > m.abs() { c } else { m });
        if pivot < 0.0 {
            v.neg_mut();
        }
        basis.set_column(k, &v);
    }
    // Fewer input dimensions than requested leave zero columns.
    let projected = &centred * basis;
    Ok(Projection {
        points: (0..n)
            .map(|i| projected.row(i).iter().copied().collect())
            .collect(),
        explained_variance_ratio: ratios,
    })
}

/// `x,y[,z],label` rows with a header.
pub fn projection_csv<L: AsRef<str>>(projection: &Projection, labels: &[L]) -> String {
    let dim = projection.explained_variance_ratio.len();
    let mut out = String::from(if dim == 3 { "x,y,z,label\n" } else { "x,y,label\n" });
    for (p, label) in projection.points.iter().zip(labels) {
        for v in p {
            out.push_str(&format!("{v},"));
        }
        let label = label.as_ref();
        if label.contains([',', '"', '\n']) {
            out.push_str(&format!("\"{}\"\n", label.replace('"', "\"\"")));
        } else {
            out.push_str(label);
            out.push('\n');
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matrix::Matrix;

    fn euclid(rows: &[Vec<f64>], max_norm: f64) -> (ModelParams, Vocabulary) {
        let mut p = ModelParams::zeros(rows.len(), rows[0].len(), Geometry::Euclidean { max_norm });
        p.embeddings = Matrix::from_rows(rows).unwrap();
        let vocab = Vocabulary::new((0..rows.len()).map(|i| format!("e{i}"))).unwrap();
        (p, vocab)
    }

    #[test]
    fn additivity_without_clipping_is_one() {
        let (p, _) = euclid(&[vec![1.0, 0.5], vec![-0.2, 0.3], vec![0.4, -0.9]], 1e12);
        let curve = additivity_curve(&p, &[1, 5, 50], 20, 1).unwrap();
        for c in &curve.mean_cosine {
            assert!((c - 1.0).abs() < 1e-12);
        }
        let (p, _) = euclid(&[vec![1.0, 0.5], vec![-0.2, 0.3]], 0.5);
        assert!((additivity_curve(&p, &[1], 10, 0).unwrap().mean_cosine[0] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn additivity_rejects_hyperbolic() {
        let p = ModelParams::zeros(2, 2, Geometry::Hyperbolic { c: 1.0 });
        assert!(matches!(additivity_curve(&p, &[3], 1, 0), Err(Error::Unsupported(_))));
    }

    #[test]
    fn analogy_reduces_to_a() {
        let (p, vocab) = euclid(&[vec![1.0, 0.2], vec![0.3, -1.0], vec![-0.5, 0.5]], 10.0);
        let r = analogy(&p, &vocab, "e0", "e1", "e1", 3, false).unwrap();
        assert_eq!(r.ranked[0].event, "e0");
        assert!((r.ranked[0].score - 1.0).abs() < 1e-12);
        let r = analogy(&p, &vocab, "e0", "e1", "e1", 3, true).unwrap();
        assert_eq!(r.ranked.len(), 1);
        assert_eq!(r.ranked[0].event, "e2");
        assert!(analogy(&p, &vocab, "e9", "e1", "e1", 3, true).is_err());
    }

    #[test]
    fn hyperbolic_analogy_uses_distance() {
        let mut p = ModelParams::zeros(3, 2, Geometry::Hyperbolic { c: 1.0 });
        p.embeddings = Matrix::from_rows(&[vec![0.3, 0.1], vec![-0.2, 0.4], vec![0.0, -0.5]]).unwrap();
        let vocab = Vocabulary::new(["a", "b", "c"]).unwrap();
        // (a ⊕ −a) ⊕ c = c
        let r = analogy(&p, &vocab, "a", "a", "c", 3, false).unwrap();
        assert_eq!(r.metric, "neg_poincare");
        assert_eq!(r.ranked[0].event, "c");
        assert!(r.ranked[0].score.abs() < 1e-6);
        assert!(r.ranked.windows(2).all(|w| w[0].score >= w[1].score));
    }

    #[test]
    fn neighbors_basic() {
        let (p, vocab) = euclid(&[vec![1.0, 0.0], vec![2.0, 0.0], vec![0.0, 1.0], vec![-1.0, 0.1]], 10.0);
        assert!(nearest_neighbors(&p, &vocab, "e0", 0).unwrap().is_empty());
        let r = nearest_neighbors(&p, &vocab, "e0", 10).unwrap();
        assert_eq!(r.len(), 3);
        assert_eq!(r[0].event, "e1");
        assert!((r[0].score - 1.0).abs() < 1e-12);
        assert!(r.windows(2).all(|w| w[0].score >= w[1].score));
    }

    #[test]
    fn silhouette_two_clusters() {
        let pts = vec![vec![0.0], vec![0.1], vec![10.0], vec![10.1]];
        let r = silhouette(&pts, &["a", "a", "b", "b"], Metric::Euclidean).unwrap();
        // per point: a = 0.1; b = 10.05, 9.95, 9.95, 10.05
        let oracle = [(10.05 - 0.1) / 10.05, (9.95 - 0.1) / 9.95, (9.95 - 0.1) / 9.95, (10.05 - 0.1) / 10.05];
        let expected = oracle.iter().sum::<f64>() / 4.0;
        assert!((r.overall - expected).abs() < 1e-12);
        assert!((r.overall - 0.990).abs() < 1e-3);
        assert_eq!(r.per_cluster.len(), 2);
    }

    #[test]
    fn silhouette_degenerate_cases() {
        let pts = vec![vec![1.0, 1.0]; 4];
        let r = silhouette(&pts, &["a", "a", "b", "b"], Metric::Cosine).unwrap();
        assert_eq!(r.overall, 0.0);
        assert!(silhouette(&pts, &["a", "a", "a", "a"], Metric::Cosine).is_err());
        assert!(silhouette(&pts[..3], &["a", "b", "b"], Metric::Cosine).is_err());
        let pts = vec![vec![0.0], vec![0.1], vec![0.2], vec![5.0]];
        let r = silhouette(&pts, &["a", "a", "a", "b"], Metric::Euclidean).unwrap();
        assert_eq!(r.per_cluster["b"], 0.0);
    }

    #[test]
    fn pca_plane_and_line() {
        let pts: Vec<Vec<f64>> = (0..20)
            .map(|i| {
                let (u, v) = ((i as f64).sin(), (i as f64 * 0.7).cos());
                let mut p = vec![0.0; 10];
                p[1] = u + v;
                p[4] = u - 2.0 * v;
                p[7] = 3.0;
                p
            })
            .collect();
        let proj = pca_project(&pts, 2).unwrap();
        assert!((proj.explained_variance_ratio.iter().sum::<f64>() - 1.0).abs() < 1e-9);
        for k in 0..2 {
            let m: f64 = proj.points.iter().map(|p| p[k]).sum::<f64>() / 20.0;
            assert!(m.abs() < 1e-12);
        }
        let line = vec![vec![0.0, 0.0, 0.0], vec![1.0, 2.0, 3.0], vec![2.0, 4.0, 6.0], vec![4.0, 8.0, 12.0]];
        let proj = pca_project(&line, 3).unwrap();
        assert!((proj.explained_variance_ratio[0] - 1.0).abs() < 1e-9);
        assert!(proj.explained_variance_ratio.windows(2).all(|w| w[0] >= w[1]));
        assert!(pca_project(&line[..2], 2).is_err());
    }

    #[test]
    fn csv_layout() {
        let proj = Projection {
            points: vec![vec![1.0, 2.0]],
            explained_variance_ratio: vec![0.5, 0.5],
        };
        assert_eq!(projection_csv(&proj, &["a,b"]), "x,y,label\n1,2,\"a,b\"\n");
    }
}
