//! Synthetic labeled landmark streams from a rigid 3D head template.
//!
//! Each subject looks at the six regions in round-robin glances. During a
//! glance the head turns by `kappa` times the region's gaze direction (the
//! rest of the shift is eye movement, which leaves no trace in the
//! landmarks), plus a fixed per-subject pose offset and per-frame jitter.
//! The rotated template is projected orthographically into an 800x600 image.

use std::collections::BTreeMap;

use rand::Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dataset::{Dataset, DatasetError, SubjectStream};
use crate::rng::stream_rng;
use crate::types::{GazeRegion, LandmarkFrame, Point2, N_LANDMARKS};

#[derive(Debug, Error)]
pub enum SynthError {
    #[error("invalid generator config: {0}")]
    Config(String),
    #[error(transparent)]
    Dataset(#[from] DatasetError),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenConfig {
    pub n_subjects: usize,
    pub frames_per_glance: usize,
    pub glances_per_region: usize,
    /// Mean gaze direction per region as `(yaw_deg, pitch_deg)`.
    pub region_pose: BTreeMap<GazeRegion, (f64, f64)>,
    /// Fraction of the gaze shift carried out by the head.
    pub head_coupling_kappa: f64,
    pub subject_offset_sigma_deg: f64,
    /// Per-frame head pose jitter around the glance pose.
    pub pose_jitter_deg: f64,
    pub noise_sigma_px: f64,
    pub camera_scale_px: f64,
    pub seed: u64,
}

impl Default for GenConfig {
    fn default() -> Self {
        GenConfig {
            n_subjects: 12,
            frames_per_glance: 100,
            glances_per_region: 4,
            region_pose: default_region_pose(),
            head_coupling_kappa: 0.5,
            subject_offset_sigma_deg: 20.0,
            pose_jitter_deg: 2.0,
            noise_sigma_px: 1.0,
            camera_scale_px: 80.0,
            seed: 0,
        }
    }
}

/// Left-hand-drive cabin with the camera to the right of the driver.
pub fn default_region_pose() -> BTreeMap<GazeRegion, (f64, f64)> {
    BTreeMap::from([
        (GazeRegion::Road, (0.0, 0.0)),
        (GazeRegion::CenterStack, (-20.0, -15.0)),
        (GazeRegion::InstrumentCluster, (0.0, -12.0)),
        (GazeRegion::RearviewMirror, (15.0, 8.0)),
        (GazeRegion::Left, (35.0, 0.0)),
        (GazeRegion::Right, (-35.0, -5.0)),
    ])
}

impl GenConfig {
    pub fn validate(&self) -> Result<(), SynthError> {
        let bad = |m: &str| Err(SynthError::Config(m.to_string()));
        if self.n_subjects == 0 || self.frames_per_glance == 0 || self.glances_per_region == 0 {
            return bad("subject, glance and frame counts must be positive");
        }
        if GazeRegion::ALL.iter().any(|r| !self.region_pose.contains_key(r)) {
            return bad("region_pose must cover all six regions");
        }
        if self.region_pose[&GazeRegion::Road] != (0.0, 0.0) {
            return bad("road pose must be (0, 0)");
        }
        if self.region_pose.values().any(|(y, p)| !(y.is_finite() && p.is_finite())) {
            return bad("region poses must be finite");
        }
        if !(0.0..=1.0).contains(&self.head_coupling_kappa) {
            return bad("kappa must lie in [0, 1]");
        }
        for s in [self.subject_offset_sigma_deg, self.pose_jitter_deg, self.noise_sigma_px] {
            if !(s.is_finite() && s >= 0.0) {
                return bad("sigmas must be finite and non-negative");
            }
        }
        if !(self.camera_scale_px.is_finite() && self.camera_scale_px > 0.0) {
            return bad("camera scale must be positive");
        }
        Ok(())
    }

    pub fn frames_per_subject(&self) -> usize {
        6 * self.glances_per_region * self.frames_per_glance
    }
}

/// 3D point in template coordinates: x right (image), y up, z toward camera.
pub type Point3 = [f64; 3];

/// Positions of the 68-point markup with the eye contours (36-47) removed.
/// Entries with `None` are filled by mirroring their partner.
const TEMPLATE68: [(usize, Option<Point3>); 68] = {
    let mut t: [(usize, Option<Point3>); 68] = [(0, None); 68];
    // Jaw, image-left half then chin.
    t[0] = (16, Some([-1.00, 0.25, -0.55]));
    t[1] = (15, Some([-0.98, 0.02, -0.50]));
    t[2] = (14, Some([-0.94, -0.22, -0.44]));
    t[3] = (13, Some([-0.87, -0.45, -0.36]));
    t[4] = (12, Some([-0.76, -0.67, -0.26]));
    t[5] = (11, Some([-0.60, -0.86, -0.14]));
    t[6] = (10, Some([-0.42, -1.01, -0.02]));
    t[7] = (9, Some([-0.22, -1.11, 0.08]));
    t[8] = (8, Some([0.00, -1.15, 0.12]));
    // Eyebrows.
    t[17] = (26, Some([-0.82, 0.55, 0.18]));
    t[18] = (25, Some([-0.68, 0.66, 0.27]));
    t[19] = (24, Some([-0.50, 0.70, 0.34]));
    t[20] = (23, Some([-0.33, 0.68, 0.39]));
    t[21] = (22, Some([-0.15, 0.62, 0.42]));
    // Nose bridge and tip.
    t[27] = (27, Some([0.00, 0.45, 0.48]));
    t[28] = (28, Some([0.00, 0.30, 0.58]));
    t[29] = (29, Some([0.00, 0.15, 0.68]));
    t[30] = (30, Some([0.00, 0.00, 0.82]));
    // Nostrils.
    t[31] = (35, Some([-0.20, -0.12, 0.50]));
    t[32] = (34, Some([-0.10, -0.15, 0.57]));
    t[33] = (33, Some([0.00, -0.17, 0.62]));
    // Outer lip.
    t[48] = (54, Some([-0.40, -0.55, 0.36]));
    t[49] = (53, Some([-0.25, -0.46, 0.48]));
    t[50] = (52, Some([-0.10, -0.42, 0.55]));
    t[51] = (51, Some([0.00, -0.44, 0.57]));
    t[57] = (57, Some([0.00, -0.73, 0.51]));
    t[58] = (56, Some([-0.12, -0.70, 0.49]));
    t[59] = (55, Some([-0.27, -0.65, 0.44]));
    // Inner lip.
    t[60] = (64, Some([-0.32, -0.55, 0.42]));
    t[61] = (63, Some([-0.11, -0.51, 0.52]));
    t[62] = (62, Some([0.00, -0.51, 0.54]));
    t[66] = (66, Some([0.00, -0.60, 0.52]));
    t[67] = (65, Some([-0.11, -0.59, 0.50]));
    // Mirror partners.
    let mut i = 0;
    while i < 68 {
        if let (m, Some(_)) = t[i] {
            if m != i {
                t[m] = (i, None);
            }
        }
        i += 1;
    }
    t
};

/// Position in the 56-point scheme of a 68-point markup index, if kept.
pub fn index_from_68(i68: usize) -> Option<usize> {
    match i68 {
        0..=35 => Some(i68),
        36..=47 => None,
        48..=67 => Some(i68 - 12),
        _ => None,
    }
}

/// 68-point markup index of a 56-point landmark.
pub fn index_to_68(i56: usize) -> usize {
    if i56 < 36 {
        i56
    } else {
        i56 + 12
    }
}

/// Permutation of the 56 landmarks under the left-right mirror.
pub fn mirror_permutation() -> [usize; N_LANDMARKS] {
    let mut perm = [0; N_LANDMARKS];
    for (i56, p) in perm.iter_mut().enumerate() {
        let partner = TEMPLATE68[index_to_68(i56)].0;
        *p = index_from_68(partner).expect("partners are never eye points");
    }
    perm
}

/// Bilaterally symmetric mean-face template with its centroid at the origin.
pub fn canonical_head() -> [Point3; N_LANDMARKS] {
    let mut raw = [[0.0; 3]; N_LANDMARKS];
    for (i56, slot) in raw.iter_mut().enumerate() {
        let i68 = index_to_68(i56);
        *slot = match TEMPLATE68[i68] {
            (_, Some(p)) => p,
            (partner, None) => {
                let p = TEMPLATE68[partner].1.expect("partner holds coordinates");
                [-p[0], p[1], p[2]]
            }
        };
    }
    // Symmetry already puts the x centroid at zero.
    let n = N_LANDMARKS as f64;
    let cy = raw.iter().map(|p| p[1]).sum::<f64>() / n;
    let cz = raw.iter().map(|p| p[2]).sum::<f64>() / n;
    for p in &mut raw {
        p[1] -= cy;
        p[2] -= cz;
    }
    raw
}

/// Rotate by yaw about the vertical axis, then pitch about the horizontal
/// axis (right-handed, degrees), and drop depth.
pub fn project(head: &[Point3; N_LANDMARKS], yaw_deg: f64, pitch_deg: f64) -> [Point2; N_LANDMARKS] {
    let (sy, cy) = yaw_deg.to_radians().sin_cos();
    let (sp, cp) = pitch_deg.to_radians().sin_cos();
    let mut out = [Point2::default(); N_LANDMARKS];
    for (o, p) in out.iter_mut().zip(head) {
        let x1 = cy * p[0] + sy * p[2];
        let z1 = -sy * p[0] + cy * p[2];
        let y2 = cp * p[1] - sp * z1;
        *o = Point2::new(x1, y2);
    }
    out
}

/// Generate the labeled dataset. Every subject draws from its own RNG
/// stream, so the output does not depend on the worker count.
pub fn generate(config: &GenConfig) -> Result<Dataset, SynthError> {
    config.validate()?;
    let head = canonical_head();
    let subjects: Vec<SubjectStream> = (0..config.n_subjects)
        .into_par_iter()
        .map(|s| generate_subject(config, &head, s))
        .collect();
    Ok(Dataset::from_frames(subjects.into_iter().flat_map(|s| s.frames))?)
}

pub fn subject_name(index: usize) -> String {
    format!("s{index:03}")
}

fn generate_subject(config: &GenConfig, head: &[Point3; N_LANDMARKS], index: usize) -> SubjectStream {
    let mut rng = stream_rng(config.seed, index as u64);
    let std_normal = Normal::new(0.0, 1.0).expect("unit normal");
    let offset_yaw = config.subject_offset_sigma_deg * std_normal.sample(&mut rng);
    let offset_pitch = config.subject_offset_sigma_deg * std_normal.sample(&mut rng);
    let center_x = 400.0 + rng.gen_range(-60.0..60.0);
    let center_y = 300.0 + rng.gen_range(-40.0..40.0);
    let scale = config.camera_scale_px * rng.gen_range(0.85..1.15);

    let id = subject_name(index);
    let mut frames = Vec::with_capacity(config.frames_per_subject());
    let mut frame_index = 0u64;
    for glance in 0..6 * config.glances_per_region {
        let region = GazeRegion::ALL[glance % 6];
        let (yaw, pitch) = config.region_pose[&region];
        let base_yaw = config.head_coupling_kappa * yaw + offset_yaw;
        let base_pitch = config.head_coupling_kappa * pitch + offset_pitch;
        for _ in 0..config.frames_per_glance {
            let y = base_yaw + config.pose_jitter_deg * std_normal.sample(&mut rng);
            let p = base_pitch + config.pose_jitter_deg * std_normal.sample(&mut rng);
            let projected = project(head, y, p);
            let pts: Vec<Point2> = projected
                .iter()
                .map(|q| {
                    let nx = config.noise_sigma_px * std_normal.sample(&mut rng);
                    let ny = config.noise_sigma_px * std_normal.sample(&mut rng);
                    // Image y grows downward.
                    Point2::new(center_x + scale * q.x + nx, center_y - scale * q.y + ny)
                })
                .collect();
            frames.push(
                LandmarkFrame::new(id.clone(), frame_index, pts, Some(region))
                    .expect("generated landmarks are finite"),
            );
            frame_index += 1;
        }
    }
    SubjectStream { subject_id: id, frames }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::types::RegionScheme;

    #[test]
    fn template_is_mirror_symmetric() {
        let head = canonical_head();
        let perm = mirror_permutation();
        for i in 0..N_LANDMARKS {
            let j = perm[i];
            assert_eq!(perm[j], i);
            assert_eq!(head[j], [-head[i][0], head[i][1], head[i][2]]);
        }
        // Every kept point has a partner; the mirror permutes the set.
        let mut seen = perm.to_vec();
        seen.sort();
        assert_eq!(seen, (0..N_LANDMARKS).collect::<Vec<_>>());
    }

    #[test]
    fn template_centroid_and_nose_tip() {
        let head = canonical_head();
        for axis in 0..3 {
            let c: f64 = head.iter().map(|p| p[axis]).sum::<f64>() / N_LANDMARKS as f64;
            assert!(c.abs() < 1e-12, "axis {axis} centroid {c}");
        }
        let tip = index_from_68(30).unwrap();
        for (i, p) in head.iter().enumerate() {
            if i != tip {
                assert!(p[2] < head[tip][2]);
            }
        }
    }

    #[test]
    fn index_maps_skip_eyes() {
        assert_eq!(index_from_68(35), Some(35));
        assert_eq!(index_from_68(40), None);
        assert_eq!(index_from_68(48), Some(36));
        assert_eq!(index_from_68(67), Some(55));
        for i in 0..N_LANDMARKS {
            assert_eq!(index_from_68(index_to_68(i)), Some(i));
        }
    }

    #[test]
    fn deterministic_and_balanced() {
        let cfg = GenConfig { n_subjects: 2, frames_per_glance: 5, glances_per_region: 2, seed: 7, ..GenConfig::default() };
        let a = generate(&cfg).unwrap();
        assert_eq!(a, generate(&cfg).unwrap());
        for s in a.subjects() {
            let ds = Dataset::from_frames(s.frames.clone()).unwrap();
            assert_eq!(ds.class_counts(RegionScheme::SixClass), vec![10; 6]);
        }
        let other = generate(&GenConfig { seed: 8, ..cfg }).unwrap();
        assert_ne!(a, other);
    }

    #[test]
    fn validation() {
        let mut cfg = GenConfig::default();
        cfg.region_pose.insert(GazeRegion::Road, (1.0, 0.0));
        assert!(generate(&cfg).is_err());
        let cfg = GenConfig { head_coupling_kappa: 1.5, ..GenConfig::default() };
        assert!(cfg.validate().is_err());
        let cfg = GenConfig { noise_sigma_px: -1.0, ..GenConfig::default() };
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn zero_yaw_projection_is_template() {
        let head = canonical_head();
        let p = project(&head, 0.0, 0.0);
        for (a, b) in p.iter().zip(&head) {
            assert_eq!((a.x, a.y), (b[0], b[1]));
        }
        // Positive yaw moves the nose tip toward +x.
        let tip = index_from_68(30).unwrap();
        assert!(project(&head, 20.0, 0.0)[tip].x > 0.0);
    }
}
