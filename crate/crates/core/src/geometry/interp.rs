use nalgebra::{Matrix3, Rotation3};
use serde::{Deserialize, Serialize};

use super::pose::Pose;
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum InterpolationMode {
    /// Shortest-arc rotation, linear translation.
    #[default]
    Geodesic,
    /// Entry-wise blend of the transforms, rotation projected back onto SO(3).
    Linear,
}

/// Pose at parameter `t` between the training pose (`t = 0`) and the novel
/// pose (`t = 1`), i.e. `T = t T_novel + (1 - t) T_train` in linear mode.
pub fn interpolate_pose(novel: &Pose, train: &Pose, t: f64, mode: InterpolationMode) -> Result<Pose> {
    if !(0.0..=1.0).contains(&t) {
        return Err(Error::invalid(format!("interpolation parameter {t} outside [0, 1]")));
    }
    if t == 0.0 {
        return Ok(*train);
    }
    if t == 1.0 {
        return Ok(*novel);
    }
    let translation = novel.translation() * t + train.translation() * (1.0 - t);
    let rotation = match mode {
        InterpolationMode::Geodesic => {
            let relative = Rotation3::from_matrix_unchecked(train.rotation().transpose() * novel.rotation());
            let step = Rotation3::from_scaled_axis(relative.scaled_axis() * t);
            train.rotation() * step.matrix()
        }
        InterpolationMode::Linear => nearest_rotation(&(novel.rotation() * t + train.rotation() * (1.0 - t)))?,
    };
    Pose::new(rotation, translation)
}

/// Orthonormal polar factor `U V^T` of `m`, with the last singular direction
/// flipped if needed so the result is a proper rotation.
pub fn nearest_rotation(m: &Matrix3<f64>) -> Result<Matrix3<f64>> {
    let svd = m.svd(true, true);
    let (Some(mut u), Some(v_t)) = (svd.u, svd.v_t) else {
        return Err(Error::DegenerateData("SVD did not converge".into()));
    };
    if (u * v_t).determinant() < 0.0 {
        // flip the direction of the smallest singular value
        let smallest = svd
            .singular_values
            .iter()
            .enumerate()
            .min_by(|a, b| a.1.total_cmp(b.1))
            .map(|(i, _)| i)
            .unwrap_or(2);
        let col = -u.column(smallest);
        u.set_column(smallest, &col);
    }
    Ok(u * v_t)
}
