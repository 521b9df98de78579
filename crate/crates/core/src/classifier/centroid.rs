use ndarray::{Array2, Axis};

use super::{ClassProbabilities, FeatureVector, Standardizer};
use crate::error::{Error, Result};
use crate::label::{Letter, N_CLASSES};

pub const DEFAULT_TEMPERATURE: f64 = 1.0;

/// Nearest-centroid classifier with softmax over negative scaled distances.
#[derive(Debug, Clone, PartialEq)]
pub struct CentroidModel {
    /// One row per class, in standardized feature space.
    pub centroids: Array2<f64>,
    pub standardizer: Standardizer,
    pub temperature: f64,
    pub pool_factor: usize,
}

impl CentroidModel {
    pub fn dim(&self) -> usize {
        self.centroids.ncols()
    }

    pub(crate) fn predict(&self, x: &[f64]) -> ClassProbabilities {
        let z = self.standardizer.apply(x);
        let mut logits = [0.0; N_CLASSES];
        for (logit, c) in logits.iter_mut().zip(self.centroids.axis_iter(Axis(0))) {
            let d2: f64 = c.iter().zip(z.iter()).map(|(a, b)| (a - b) * (a - b)).sum();
            *logit = -self.temperature * d2.sqrt();
        }
        ClassProbabilities::softmax(&logits)
    }
}

/// Every letter must have at least one training example.
pub fn fit_centroid(train: &[(&FeatureVector, Letter)], temperature: f64) -> Result<CentroidModel> {
    let Some((first, _)) = train.first() else {
        return Err(Error::InvalidArgument("no training examples".into()));
    };
    let dim = first.dim();
    let pool_factor = first.pool_factor;
    if let Some((fv, _)) = train.iter().find(|(fv, _)| fv.dim() != dim) {
        return Err(Error::DimensionMismatch { expected: dim, got: fv.dim() });
    }

    let standardizer = Standardizer::fit(train.iter().map(|(fv, _)| fv.x.as_slice()), dim);
    let mut sums = Array2::<f64>::zeros((N_CLASSES, dim));
    let mut counts = [0usize; N_CLASSES];
    for (fv, label) in train {
        let mut row = sums.row_mut(label.index());
        row += &standardizer.apply(&fv.x);
        counts[label.index()] += 1;
    }
    let missing: Vec<String> = Letter::all()
        .filter(|l| counts[l.index()] == 0)
        .map(|l| l.to_string())
        .collect();
    if !missing.is_empty() {
        return Err(Error::MissingClasses(missing.join(",")));
    }
    for (mut row, &n) in sums.axis_iter_mut(Axis(0)).zip(&counts) {
        row /= n as f64;
    }
    Ok(CentroidModel {
        centroids: sums,
        standardizer,
        temperature,
        pool_factor,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::classifier::predict_label;

    fn fv(x: Vec<f64>) -> FeatureVector {
        FeatureVector { x, pool_factor: 5 }
    }

    fn one_per_class() -> Vec<(FeatureVector, Letter)> {
        Letter::all()
            .map(|l| {
                let i = l.index() as f64;
                (fv(vec![i, (i * 0.7).sin() * 10.0, (i * i) % 7.0]), l)
            })
            .collect()
    }

    #[test]
    fn training_examples_predict_themselves() {
        let data = one_per_class();
        let refs: Vec<_> = data.iter().map(|(f, l)| (f, *l)).collect();
        let m = fit_centroid(&refs, 1.0).unwrap();
        for (f, l) in &data {
            let p = m.predict(&f.x);
            assert_eq!(predict_label(&p), *l);
            let top = p[*l];
            assert!(p.as_array().iter().enumerate().all(|(i, &q)| i == l.index() || q < top));
        }
    }

    #[test]
    fn identical_examples_tie_to_lower_class() {
        let mut data = one_per_class();
        data[4].0 = data[2].0.clone();
        let refs: Vec<_> = data.iter().map(|(f, l)| (f, *l)).collect();
        let m = fit_centroid(&refs, 1.0).unwrap();
        assert_eq!(m.centroids.row(2), m.centroids.row(4));
        let p = m.predict(&data[4].0.x);
        assert_eq!(p.as_array()[2], p.as_array()[4]);
        assert_eq!(predict_label(&p).index(), 2);
    }

    #[test]
    fn missing_classes_are_listed() {
        let data = one_per_class();
        let refs: Vec<_> = data.iter().filter(|(_, l)| l.index() % 5 != 0).map(|(f, l)| (f, *l)).collect();
        let err = fit_centroid(&refs, 1.0).unwrap_err().to_string();
        assert!(err.contains("A,F,K,P,U,Z"), "{err}");
        assert!(fit_centroid(&[], 1.0).is_err());
    }

    #[test]
    fn invariant_to_example_order() {
        let mut data = one_per_class();
        data.extend(one_per_class().into_iter().map(|(mut f, l)| {
            f.x[1] += 0.25;
            (f, l)
        }));
        let refs: Vec<_> = data.iter().map(|(f, l)| (f, *l)).collect();
        let a = fit_centroid(&refs, 1.0).unwrap();
        let mut rev = refs.clone();
        rev.reverse();
        let b = fit_centroid(&rev, 1.0).unwrap();
        let probe = [3.3, -2.0, 4.0];
        for (x, y) in a.predict(&probe).as_array().iter().zip(b.predict(&probe).as_array()) {
            assert!((x - y).abs() < 1e-12);
        }
    }
}
