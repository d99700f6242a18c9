use std::fmt;
use std::sync::Arc;

use nalgebra::{Unit, Vector3};
use rand_distr::{Distribution, Normal, UnitSphere};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{DepthMap, Grid, ImageRGB, Pose};
use crate::rng::{derive_seed, rng_from_seed};

/// What the pipeline sees of one novel-view frame. `depth` and `camera` are
/// simulator ground truth; providers decide how much of it to use.
#[derive(Clone, Debug)]
pub struct Observation {
    pub image: ImageRGB,
    pub depth: DepthMap,
    pub camera: Pose,
    pub step: u64,
    /// Gripper position in world coordinates, known from proprioception.
    pub gripper: Option<Vector3<f64>>,
}

pub trait DepthProvider: Send + Sync {
    fn name(&self) -> &str;
    fn depth(&self, obs: &Observation) -> Result<DepthMap>;
}

/// Estimates the camera-to-world pose of the novel camera.
pub trait PoseProvider: Send + Sync {
    fn name(&self) -> &str;
    fn pose(&self, obs: &Observation) -> Result<Pose>;
}

const DEPTH_STREAM: u64 = 0xDE97;
const POSE_STREAM: u64 = 0x9053;

#[derive(Clone, Default)]
pub enum DepthSource {
    #[default]
    GroundTruth,
    /// Multiplicative Gaussian noise with relative standard deviation `sigma`.
    Noisy {
        sigma: f64,
        seed: u64,
    },
    External(Arc<dyn DepthProvider>),
}

#[derive(Clone, Default)]
pub enum PoseSource {
    #[default]
    GroundTruth,
    /// Axis-angle rotation noise (radians) and Gaussian translation noise (metres).
    Noisy {
        sigma_rot: f64,
        sigma_trans: f64,
        seed: u64,
    },
    External(Arc<dyn PoseProvider>),
}

impl fmt::Debug for DepthSource {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::GroundTruth => write!(f, "GroundTruth"),
            Self::Noisy { sigma, seed } => write!(f, "Noisy {{ sigma: {sigma}, seed: {seed} }}"),
            Self::External(p) => write!(f, "External({})", p.name()),
        }
    }
}

impl fmt::Debug for PoseSource {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::GroundTruth => write!(f, "GroundTruth"),
            Self::Noisy {
                sigma_rot,
                sigma_trans,
                seed,
            } => {
                write!(
                    f,
                    "Noisy {{ sigma_rot: {sigma_rot}, sigma_trans: {sigma_trans}, seed: {seed} }}"
                )
            }
            Self::External(p) => write!(f, "External({})", p.name()),
        }
    }
}

fn normal(sigma: f64, provider: &str) -> Result<Normal<f64>> {
    Normal::new(0.0, sigma).map_err(|e| Error::Provider {
        provider: provider.into(),
        message: format!("bad noise level {sigma}: {e}"),
    })
}

impl DepthSource {
    pub fn name(&self) -> &str {
        match self {
            Self::GroundTruth => "ground-truth",
            Self::Noisy { .. } => "noisy",
            Self::External(p) => p.name(),
        }
    }

    pub fn depth(&self, obs: &Observation) -> Result<DepthMap> {
        let out = match self {
            Self::GroundTruth => return Ok(obs.depth.clone()),
            Self::Noisy { sigma, .. } if *sigma == 0.0 => return Ok(obs.depth.clone()),
            Self::Noisy { sigma, seed } => {
                let dist = normal(*sigma, self.name())?;
                let mut rng = rng_from_seed(derive_seed(derive_seed(*seed, DEPTH_STREAM), obs.step));
                let values = obs.depth.values();
                let valid = obs.depth.validity();
                let noisy = Grid::from_fn(values.width(), values.height(), |x, y| {
                    let n: f64 = dist.sample(&mut rng);
                    if *valid.get(x, y) {
                        (*values.get(x, y) as f64 * (1.0 + n)) as f32
                    } else {
                        0.0
                    }
                });
                DepthMap::from_values(noisy)
            }
            Self::External(p) => p.depth(obs).map_err(|e| wrap(p.name(), e))?,
        };
        if out.width() != obs.image.width() || out.height() != obs.image.height() {
            return Err(Error::Provider {
                provider: self.name().into(),
                message: format!(
                    "depth map is {}x{}, image is {}x{}",
                    out.width(),
                    out.height(),
                    obs.image.width(),
                    obs.image.height()
                ),
            });
        }
        Ok(out)
    }
}

impl PoseSource {
    pub fn name(&self) -> &str {
        match self {
            Self::GroundTruth => "ground-truth",
            Self::Noisy { .. } => "noisy",
            Self::External(p) => p.name(),
        }
    }

    pub fn pose(&self, obs: &Observation) -> Result<Pose> {
        match self {
            Self::GroundTruth => Ok(obs.camera),
            Self::Noisy {
                sigma_rot, sigma_trans, ..
            } if *sigma_rot == 0.0 && *sigma_trans == 0.0 => Ok(obs.camera),
            Self::Noisy {
                sigma_rot,
                sigma_trans,
                seed,
            } => {
                let mut rng = rng_from_seed(derive_seed(derive_seed(*seed, POSE_STREAM), obs.step));
                let axis: [f64; 3] = UnitSphere.sample(&mut rng);
                let angle = normal(*sigma_rot, self.name())?.sample(&mut rng);
                let tn = normal(*sigma_trans, self.name())?;
                let dt = Vector3::from_fn(|_, _| tn.sample(&mut rng));
                let r = nalgebra::Rotation3::from_axis_angle(&Unit::new_normalize(Vector3::from(axis)), angle);
                Pose::new(obs.camera.rotation() * r.matrix(), obs.camera.translation() + dt)
            }
            // Pose values are validated on construction.
            Self::External(p) => p.pose(obs).map_err(|e| wrap(p.name(), e)),
        }
    }
}

fn wrap(provider: &str, e: Error) -> Error {
    match e {
        Error::Provider { .. } => e,
        other => Error::Provider {
            provider: provider.into(),
            message: other.to_string(),
        },
    }
}

/// Serializable provider choice; external providers are attached in code.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ProviderConfig {
    /// `ground-truth` or `noisy`.
    pub kind: ProviderKind,
    pub sigma_depth: f64,
    pub sigma_rot: f64,
    pub sigma_trans: f64,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ProviderKind {
    #[default]
    GroundTruth,
    Noisy,
}

impl ProviderConfig {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("sigma_depth", self.sigma_depth),
            ("sigma_rot", self.sigma_rot),
            ("sigma_trans", self.sigma_trans),
        ] {
            if !(v.is_finite() && v >= 0.0) {
                return Err(Error::invalid(format!(
                    "{name} must be finite and non-negative, got {v}"
                )));
            }
        }
        Ok(())
    }

    /// Sources for one episode; noise streams are keyed by `seed`.
    pub fn sources(&self, seed: u64) -> (DepthSource, PoseSource) {
        match self.kind {
            ProviderKind::GroundTruth => (DepthSource::GroundTruth, PoseSource::GroundTruth),
            ProviderKind::Noisy => (
                DepthSource::Noisy {
                    sigma: self.sigma_depth,
                    seed,
                },
                PoseSource::Noisy {
                    sigma_rot: self.sigma_rot,
                    sigma_trans: self.sigma_trans,
                    seed,
                },
            ),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn obs() -> Observation {
        Observation {
            image: ImageRGB::filled(8, 6, [0.5; 3]),
            depth: DepthMap::from_values(Grid::from_fn(
                8,
                6,
                |x, y| if x == 0 { 0.0 } else { 1.0 + 0.1 * y as f32 },
            )),
            camera: Pose::from_axis_angle(&Vector3::z(), 0.3, Vector3::new(0.1, 0.2, 0.3)),
            step: 4,
            gripper: None,
        }
    }

    #[test]
    fn zero_noise_is_ground_truth() {
        let o = obs();
        let d = DepthSource::Noisy { sigma: 0.0, seed: 9 };
        assert_eq!(d.depth(&o).unwrap(), o.depth);
        let p = PoseSource::Noisy {
            sigma_rot: 0.0,
            sigma_trans: 0.0,
            seed: 9,
        };
        assert_eq!(p.pose(&o).unwrap(), o.camera);
    }

    #[test]
    fn noise_is_seeded_and_keeps_invalid_pixels() {
        let o = obs();
        let d = DepthSource::Noisy { sigma: 0.05, seed: 1 };
        let a = d.depth(&o).unwrap();
        assert_eq!(a, d.depth(&o).unwrap());
        assert_ne!(a, o.depth);
        for y in 0..6 {
            assert_eq!(a.at(0, y), None);
        }
        let p = PoseSource::Noisy {
            sigma_rot: 0.01,
            sigma_trans: 0.01,
            seed: 1,
        };
        let q = p.pose(&o).unwrap();
        assert_eq!(q, p.pose(&o).unwrap());
        assert!(q.rotation_angle_to(&o.camera) > 0.0);
    }

    struct Broken;

    impl DepthProvider for Broken {
        fn name(&self) -> &str {
            "broken-estimator"
        }
        fn depth(&self, _: &Observation) -> Result<DepthMap> {
            Ok(DepthMap::invalid(3, 3))
        }
    }

    #[test]
    fn external_output_is_validated_and_named() {
        let err = DepthSource::External(Arc::new(Broken)).depth(&obs()).unwrap_err();
        assert!(err.to_string().contains("broken-estimator"), "{err}");
    }
}
