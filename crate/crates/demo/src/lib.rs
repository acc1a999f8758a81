//! wasm-bindgen surface for the static page in `web/`.
//!
//! Every export returns a JSON string; the page parses it. The plain
//! functions below the exports do the work so they can be tested natively.

use serde::Serialize;
use wasm_bindgen::prelude::*;

use event2vec::eval::{self, AdditivityCurve, AnalogyResult};
use event2vec::lifepath::{self, TransitionGraph};
use event2vec::trainer::{self, TrainOptions};
use event2vec::{geometry, Geometry, ModelParams, Result, TrainConfig, Vocabulary};

fn js<T: Serialize>(r: Result<T>) -> std::result::Result<String, JsError> {
    let v = r.map_err(|e| JsError::new(&e.to_string()))?;
    serde_json::to_string(&v).map_err(|e| JsError::new(&e.to_string()))
}

#[derive(Debug, Serialize, PartialEq)]
pub struct MobiusView {
    pub sum: Vec<f64>,
    pub euclidean_sum: Vec<f64>,
    pub distance_from_origin: f64,
    pub distance_x_y: f64,
}

pub fn mobius_view(x: &[f64], y: &[f64], c: f64) -> Result<MobiusView> {
    let sum = geometry::mobius_add(x, y, c)?;
    let zero = vec![0.0; x.len()];
    Ok(MobiusView {
        distance_from_origin: geometry::poincare_distance(&zero, &sum, c)?,
        distance_x_y: geometry::poincare_distance(x, y, c)?,
        euclidean_sum: x.iter().zip(y).map(|(a, b)| a + b).collect(),
        sum,
    })
}

/// Two 2-d points in the ball: their Möbius sum, plain sum and distances.
#[wasm_bindgen(js_name = mobiusExplore)]
pub fn mobius_explore(x: Vec<f64>, y: Vec<f64>, c: f64) -> std::result::Result<String, JsError> {
    js(mobius_view(&x, &y, c))
}

#[derive(Debug, Serialize)]
pub struct ScatterPoint {
    pub event: String,
    pub x: f64,
    pub y: f64,
}

#[derive(Debug, Serialize)]
pub struct TrainSummary {
    pub events: Vec<String>,
    pub losses: Vec<f64>,
    pub points: Vec<ScatterPoint>,
    pub explained_variance_ratio: Vec<f64>,
}

pub struct Trained {
    params: ModelParams,
    vocab: Vocabulary,
    summary: TrainSummary,
}

pub fn train_life(sequences: usize, dim: usize, epochs: usize, seed: u64, hyperbolic: bool) -> Result<Trained> {
    let graph = TransitionGraph::default_graph();
    let ds = lifepath::generate_dataset(&graph, sequences, seed)?;
    let cfg = TrainConfig {
        epochs,
        dim,
        seed,
        geometry: if hyperbolic {
            Geometry::Hyperbolic { c: 1.0 }
        } else {
            Geometry::Euclidean { max_norm: 10.0 }
        },
        ..TrainConfig::default()
    };
    let out = trainer::train_with(&ds, &cfg, TrainOptions::default())?;
    let rows: Vec<Vec<f64>> = (0..ds.vocab.len()).map(|i| out.params.embedding(i).to_vec()).collect();
    // PCA runs in the tangent space for ball embeddings.
    let rows = match out.params.geometry {
        Geometry::Hyperbolic { c } => rows.iter().map(|r| geometry::log_map_origin(r, c)).collect::<Result<_>>()?,
        Geometry::Euclidean { .. } => rows,
    };
    let proj = eval::pca_project(&rows, 2)?;
    let events: Vec<String> = (0..ds.vocab.len()).map(|i| ds.vocab.name(i).to_string()).collect();
    let summary = TrainSummary {
        losses: out.log.records.iter().map(|r| r.mean_total).collect(),
        points: events
            .iter()
            .zip(&proj.points)
            .map(|(e, p)| ScatterPoint {
                event: e.clone(),
                x: p[0],
                y: p[1],
            })
            .collect(),
        explained_variance_ratio: proj.explained_variance_ratio,
        events,
    };
    Ok(Trained {
        params: out.params,
        vocab: ds.vocab,
        summary,
    })
}

impl Trained {
    pub fn summary(&self) -> &TrainSummary {
        &self.summary
    }

    pub fn analogy(&self, a: &str, b: &str, c: &str, k: usize) -> Result<AnalogyResult> {
        eval::analogy(&self.params, &self.vocab, a, b, c, k, true)
    }

    pub fn additivity(&self, seed: u64) -> Result<AdditivityCurve> {
        eval::additivity_curve(&self.params, &[1, 2, 5, 10, 25, 50, 100], 50, seed)
    }
}

#[wasm_bindgen]
pub struct DemoModel {
    inner: Trained,
}

#[wasm_bindgen]
impl DemoModel {
    /// Generates life-path sequences and trains on them, single-threaded.
    #[wasm_bindgen(constructor)]
    pub fn new(sequences: usize, dim: usize, epochs: usize, seed: u32, hyperbolic: bool) -> std::result::Result<DemoModel, JsError> {
        train_life(sequences, dim, epochs, seed as u64, hyperbolic)
            .map(|inner| DemoModel { inner })
            .map_err(|e| JsError::new(&e.to_string()))
    }

    /// Event names, per-epoch losses and the 2-d PCA scatter.
    pub fn summary(&self) -> std::result::Result<String, JsError> {
        serde_json::to_string(self.inner.summary()).map_err(|e| JsError::new(&e.to_string()))
    }

    pub fn analogy(&self, a: &str, b: &str, c: &str, k: usize) -> std::result::Result<String, JsError> {
        js(self.inner.analogy(a, b, c, k))
    }

    pub fn additivity(&self, seed: u32) -> std::result::Result<String, JsError> {
        js(self.inner.additivity(seed as u64))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mobius_view_near_origin_is_almost_euclidean() {
        let v = mobius_view(&[0.001, 0.0], &[0.0, 0.002], 1.0).unwrap();
        for (a, b) in v.sum.iter().zip(&v.euclidean_sum) {
            assert!((a - b).abs() < 1e-8);
        }
        assert!(mobius_view(&[1.2, 0.0], &[0.0, 0.0], 1.0).is_err());
    }

    #[test]
    fn small_training_run_feeds_all_panels() {
        let t = train_life(200, 8, 3, 1, false).unwrap();
        let s = t.summary();
        assert_eq!(s.losses.len(), 3);
        assert_eq!(s.points.len(), s.events.len());
        assert_eq!(t.analogy("marriage", "engagement", "parenthood", 3).unwrap().ranked.len(), 3);
        assert_eq!(t.additivity(0).unwrap().lengths.len(), 7);
    }

    #[test]
    fn hyperbolic_run_has_no_additivity_curve() {
        let t = train_life(100, 4, 1, 2, true).unwrap();
        assert!(t.additivity(0).is_err());
        assert!(t.summary().points.iter().all(|p| p.x.is_finite() && p.y.is_finite()));
    }
}
