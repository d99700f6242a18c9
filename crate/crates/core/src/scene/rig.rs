use nalgebra::{Matrix3, Rotation3, Vector3};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{CameraIntrinsics, Pose};

/// Fixed training camera plus the orbit used to generate novel views.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CameraRig {
    canonical: Pose,
    orbit_center: Vector3<f64>,
    orbit_radius: f64,
    intrinsics: CameraIntrinsics,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RigConfig {
    pub orbit_center: [f64; 3],
    pub orbit_radius: f64,
    /// Camera elevation above the table, degrees.
    pub elevation_deg: f64,
    pub image_size: usize,
    pub focal_px: f64,
}

impl Default for RigConfig {
    fn default() -> Self {
        Self {
            orbit_center: [0.0, 0.0, 0.0],
            orbit_radius: 0.65,
            elevation_deg: 55.0,
            image_size: 128,
            focal_px: 110.0,
        }
    }
}

impl CameraRig {
    pub fn new(canonical: Pose, orbit_center: Vector3<f64>, intrinsics: CameraIntrinsics) -> Result<Self> {
        let to_center = orbit_center - canonical.translation();
        let radius = to_center.norm();
        if radius < 1e-9 {
            return Err(Error::invalid("camera sits on the orbit center"));
        }
        // distance from the orbit center to the optical axis line
        let axis = canonical.optical_axis();
        let along = to_center.dot(&axis);
        let miss = (to_center - axis * along).norm();
        if miss > 1e-6 || along <= 0.0 {
            return Err(Error::invalid(format!(
                "canonical optical axis misses the orbit center by {miss:e} m"
            )));
        }
        Ok(Self {
            canonical,
            orbit_center,
            orbit_radius: radius,
            intrinsics,
        })
    }

    /// Front camera (on the -y side) looking down at the orbit center.
    pub fn from_config(cfg: &RigConfig) -> Result<Self> {
        let center = Vector3::from(cfg.orbit_center);
        let e = cfg.elevation_deg.to_radians();
        if !(e > 0.0 && e < std::f64::consts::FRAC_PI_2) {
            return Err(Error::invalid("elevation must lie strictly between 0 and 90 degrees"));
        }
        if !(cfg.orbit_radius > 0.0) {
            return Err(Error::invalid("orbit radius must be positive"));
        }
        let eye = center + Vector3::new(0.0, -e.cos(), e.sin()) * cfg.orbit_radius;
        let canonical = Pose::look_at(&eye, &center, &Vector3::z())?;
        let k = CameraIntrinsics::square(cfg.image_size, cfg.focal_px)?;
        Self::new(canonical, center, k)
    }

    pub fn canonical(&self) -> &Pose {
        &self.canonical
    }

    pub fn orbit_center(&self) -> &Vector3<f64> {
        &self.orbit_center
    }

    pub fn orbit_radius(&self) -> f64 {
        self.orbit_radius
    }

    pub fn intrinsics(&self) -> &CameraIntrinsics {
        &self.intrinsics
    }

    /// Canonical pose rotated by `theta_deg` about the vertical axis through
    /// the orbit center (counter-clockwise seen from above).
    pub fn camera_at_angle(&self, theta_deg: f64) -> Result<Pose> {
        if !(theta_deg > -180.0 && theta_deg <= 180.0) {
            return Err(Error::invalid(format!("view angle {theta_deg} outside (-180, 180]")));
        }
        if theta_deg == 0.0 {
            return Ok(self.canonical);
        }
        let rz: Matrix3<f64> = *Rotation3::from_axis_angle(&Vector3::z_axis(), theta_deg.to_radians()).matrix();
        let eye = self.orbit_center + rz * (self.canonical.translation() - self.orbit_center);
        Pose::new(rz * self.canonical.rotation(), eye)
    }
}

/// Relative transform taking camera-frame points of `from` into camera-frame
/// points of `to` (both camera-to-world).
pub fn relative_pose(from: &Pose, to: &Pose) -> Pose {
    to.inverse().compose(from)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_angle_is_canonical() {
        let rig = CameraRig::from_config(&RigConfig::default()).unwrap();
        assert_eq!(rig.camera_at_angle(0.0).unwrap(), *rig.canonical());
    }

    #[test]
    fn orbit_keeps_radius_and_look_at() {
        let rig = CameraRig::from_config(&RigConfig::default()).unwrap();
        for theta in [-45.0, -30.0, 30.0, 45.0, 180.0, -179.0] {
            let p = rig.camera_at_angle(theta).unwrap();
            let d = (p.translation() - rig.orbit_center()).norm();
            assert!((d - rig.orbit_radius()).abs() < 1e-9);
            let dir = (rig.orbit_center() - p.translation()).normalize();
            assert!((dir - p.optical_axis()).norm() < 1e-9);
        }
    }

    #[test]
    fn opposite_angles_mirror_across_canonical_plane() {
        let rig = CameraRig::from_config(&RigConfig::default()).unwrap();
        let a = rig.camera_at_angle(45.0).unwrap();
        let b = rig.camera_at_angle(-45.0).unwrap();
        let (ta, tb) = (a.translation(), b.translation());
        assert!((ta.x + tb.x).abs() < 1e-12 && (ta.y - tb.y).abs() < 1e-12 && (ta.z - tb.z).abs() < 1e-12);
        let (fa, fb) = (a.optical_axis(), b.optical_axis());
        assert!((fa.x + fb.x).abs() < 1e-12 && (fa.y - fb.y).abs() < 1e-12 && (fa.z - fb.z).abs() < 1e-12);
        assert!(ta.x > 0.0, "positive angles swing the camera towards +x");
    }

    #[test]
    fn rejects_out_of_range_angles() {
        let rig = CameraRig::from_config(&RigConfig::default()).unwrap();
        assert!(rig.camera_at_angle(-180.0).is_err());
        assert!(rig.camera_at_angle(180.5).is_err());
        assert!(rig.camera_at_angle(f64::NAN).is_err());
    }

    #[test]
    fn rig_requires_axis_through_center() {
        let rig = CameraRig::from_config(&RigConfig::default()).unwrap();
        let off = Vector3::new(0.01, 0.0, 0.0);
        assert!(CameraRig::new(*rig.canonical(), rig.orbit_center() + off, *rig.intrinsics()).is_err());
    }

    #[test]
    fn relative_pose_maps_between_camera_frames() {
        let rig = CameraRig::from_config(&RigConfig::default()).unwrap();
        let novel = rig.camera_at_angle(30.0).unwrap();
        let rel = relative_pose(&novel, rig.canonical());
        let p_novel = nalgebra::Vector3::new(0.1, -0.05, 0.7);
        let world = novel.apply(&p_novel);
        let p_canon = rig.canonical().inverse().apply(&world);
        assert!((rel.apply(&p_novel) - p_canon).norm() < 1e-12);
    }
}
