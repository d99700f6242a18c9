use nalgebra::{DMatrix, DVector, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::synthesis::FeatureVector;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScatterPoint {
    pub label: String,
    pub pc: [f64; 2],
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FeatureScatter {
    pub points: Vec<ScatterPoint>,
    /// Variance fractions of the two components.
    pub explained: [f64; 2],
    pub components: [Vec<f64>; 2],
    pub mean: Vec<f64>,
}

impl FeatureScatter {
    pub fn centroid(&self, label: &str) -> Option<[f64; 2]> {
        let pts: Vec<&[f64; 2]> = self.points.iter().filter(|p| p.label == label).map(|p| &p.pc).collect();
        if pts.is_empty() {
            return None;
        }
        let n = pts.len() as f64;
        Some([
            pts.iter().map(|p| p[0]).sum::<f64>() / n,
            pts.iter().map(|p| p[1]).sum::<f64>() / n,
        ])
    }

    pub fn centroid_distance(&self, a: &str, b: &str) -> Option<f64> {
        let (ca, cb) = (self.centroid(a)?, self.centroid(b)?);
        Some(((ca[0] - cb[0]).powi(2) + (ca[1] - cb[1]).powi(2)).sqrt())
    }
}

/// Projects every vector onto the top two principal components of the
/// union of all groups. Each component's first nonzero loading is positive.
pub fn pca_scatter(groups: &[(String, Vec<FeatureVector>)]) -> Result<FeatureScatter> {
    let rows: Vec<(&str, &FeatureVector)> = groups
        .iter()
        .flat_map(|(label, vs)| vs.iter().map(move |v| (label.as_str(), v)))
        .collect();
    let n = rows.len();
    if n < 3 {
        return Err(Error::invalid(format!("PCA needs at least 3 samples, got {n}")));
    }
    let d = rows[0].1.len();
    if d == 0 || rows.iter().any(|(_, v)| v.len() != d) {
        return Err(Error::invalid("feature vectors must share one non-zero length"));
    }
    let mut x = DMatrix::from_fn(n, d, |i, j| rows[i].1.values()[j]);
    let mean: Vec<f64> = (0..d).map(|j| x.column(j).sum() / n as f64).collect();
    for (j, m) in mean.iter().enumerate() {
        x.column_mut(j).add_scalar_mut(-m);
    }
    let total: f64 = x.iter().map(|v| v * v).sum();
    if total <= f64::EPSILON * n as f64 {
        return Err(Error::DegenerateData("features have zero total variance".into()));
    }
    // Eigenvectors of X^T X; via the n x n Gram matrix when that is smaller.
    let (values, vectors) = if n < d {
        let eig = SymmetricEigen::new(&x * x.transpose());
        let order = descending(&eig.eigenvalues);
        let comps: Vec<DVector<f64>> = order
            .iter()
            .take(2)
            .map(|&i| {
                let v = x.transpose() * eig.eigenvectors.column(i);
                let norm = v.norm();
                if norm > 0.0 {
                    v / norm
                } else {
                    v
                }
            })
            .collect();
        (
            order
                .iter()
                .take(2)
                .map(|&i| eig.eigenvalues[i].max(0.0))
                .collect::<Vec<_>>(),
            comps,
        )
    } else {
        let eig = SymmetricEigen::new(x.transpose() * &x);
        let order = descending(&eig.eigenvalues);
        let comps = order
            .iter()
            .take(2)
            .map(|&i| eig.eigenvectors.column(i).into_owned())
            .collect();
        (
            order
                .iter()
                .take(2)
                .map(|&i| eig.eigenvalues[i].max(0.0))
                .collect::<Vec<_>>(),
            comps,
        )
    };
    let mut components: Vec<Vec<f64>> = Vec::with_capacity(2);
    for (k, v) in vectors.into_iter().enumerate() {
        let mut v: Vec<f64> = v.iter().copied().collect();
        if values.get(k).is_none_or(|&l| l <= total * 1e-15) || v.iter().all(|c| *c == 0.0) {
            // no variance left: any unit vector orthogonal to the first
            v = orthogonal_unit(components.first().map(Vec::as_slice), d);
        }
        let scale = v.iter().map(|c| c.abs()).fold(0.0, f64::max);
        if let Some(first) = v.iter().find(|c| c.abs() > 1e-12 * scale) {
            if *first < 0.0 {
                v.iter_mut().for_each(|c| *c = -*c);
            }
        }
        components.push(v);
    }
    while components.len() < 2 {
        components.push(orthogonal_unit(components.first().map(Vec::as_slice), d));
    }
    let explained = [
        values.first().copied().unwrap_or(0.0) / total,
        values.get(1).copied().unwrap_or(0.0) / total,
    ]
    .map(|f| f.clamp(0.0, 1.0));
    let points = rows
        .iter()
        .enumerate()
        .map(|(i, (label, _))| {
            let r = x.row(i);
            let proj = |c: &[f64]| r.iter().zip(c).map(|(a, b)| a * b).sum::<f64>();
            ScatterPoint {
                label: label.to_string(),
                pc: [proj(&components[0]), proj(&components[1])],
            }
        })
        .collect();
    let [c0, c1]: [Vec<f64>; 2] = components.try_into().expect("two components");
    Ok(FeatureScatter {
        points,
        explained,
        components: [c0, c1],
        mean,
    })
}

fn descending(values: &DVector<f64>) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..values.len()).collect();
    idx.sort_by(|&a, &b| values[b].total_cmp(&values[a]).then(a.cmp(&b)));
    idx
}

/// Unit basis vector least aligned with `other`, made orthogonal to it.
fn orthogonal_unit(other: Option<&[f64]>, d: usize) -> Vec<f64> {
    let Some(o) = other else {
        let mut e = vec![0.0; d];
        e[0] = 1.0;
        return e;
    };
    let j = (0..d).min_by(|&a, &b| o[a].abs().total_cmp(&o[b].abs())).unwrap_or(0);
    let mut e: Vec<f64> = o.iter().map(|c| -c * o[j]).collect();
    e[j] += 1.0;
    let norm = e.iter().map(|c| c * c).sum::<f64>().sqrt();
    e.iter_mut().for_each(|c| *c /= norm);
    e
}
