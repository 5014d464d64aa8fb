//! Landmark-frame datasets: the line-oriented frame format and class-balanced
//! test-set construction.
//!
//! Frame format, one frame per line, fields separated by single spaces:
//!
//! ```text
//! # gazeregion-frames v1
//! <subject_id> <frame_index> <label_code|-> x0 y0 x1 y1 ... x55 y55
//! ```
//!
//! `label_code` is the region code 0-5 or `-` for unlabeled frames. Lines
//! starting with `#` are comments; a `# gazeregion-frames vN` line declares
//! the format version.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;

use rand::seq::SliceRandom;
use thiserror::Error;

use crate::rng::stream_rng;
use crate::types::{GazeRegion, LandmarkFrame, Point2, RegionScheme, TypeError, N_LANDMARKS};

pub const FRAME_FORMAT_VERSION: u32 = 1;
const HEADER_TAG: &str = "gazeregion-frames";

#[derive(Debug, Error)]
pub enum DatasetError {
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("unsupported frame format version {0}")]
    Version(u32),
    #[error("duplicate frame {frame_index} for subject {subject:?}")]
    Duplicate { subject: String, frame_index: u64 },
    #[error("class {0:?} has no labeled frames")]
    EmptyClass(&'static str),
    #[error("subject {subject:?} frame {frame_index} is unlabeled")]
    Unlabeled { subject: String, frame_index: u64 },
}

/// Frames of one subject, sorted by frame index.
#[derive(Debug, Clone, PartialEq)]
pub struct SubjectStream {
    pub subject_id: String,
    pub frames: Vec<LandmarkFrame>,
}

impl SubjectStream {
    pub fn len(&self) -> usize {
        self.frames.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }
}

/// Frames grouped by subject. Subjects are ordered by id, frames by index.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Dataset {
    subjects: Vec<SubjectStream>,
}

impl Dataset {
    /// Groups, sorts and checks frames for duplicate `(subject, frame_index)`.
    pub fn from_frames(frames: impl IntoIterator<Item = LandmarkFrame>) -> Result<Self, DatasetError> {
        let mut groups: BTreeMap<String, Vec<LandmarkFrame>> = BTreeMap::new();
        for f in frames {
            groups.entry(f.subject_id.clone()).or_default().push(f);
        }
        let mut subjects = Vec::with_capacity(groups.len());
        for (subject_id, mut frames) in groups {
            frames.sort_by_key(|f| f.frame_index);
            if let Some(w) = frames.windows(2).find(|w| w[0].frame_index == w[1].frame_index) {
                return Err(DatasetError::Duplicate { subject: subject_id, frame_index: w[0].frame_index });
            }
            subjects.push(SubjectStream { subject_id, frames });
        }
        Ok(Dataset { subjects })
    }

    pub fn subjects(&self) -> &[SubjectStream] {
        &self.subjects
    }

    pub fn subject(&self, id: &str) -> Option<&SubjectStream> {
        self.subjects
            .binary_search_by(|s| s.subject_id.as_str().cmp(id))
            .ok()
            .map(|i| &self.subjects[i])
    }

    pub fn frames(&self) -> impl Iterator<Item = &LandmarkFrame> {
        self.subjects.iter().flat_map(|s| s.frames.iter())
    }

    pub fn n_frames(&self) -> usize {
        self.subjects.iter().map(|s| s.len()).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.subjects.is_empty()
    }

    /// Per-class frame counts under `scheme`; unlabeled frames are ignored.
    pub fn class_counts(&self, scheme: RegionScheme) -> Vec<usize> {
        let mut counts = vec![0; scheme.n_classes()];
        for f in self.frames() {
            if let Some(r) = f.label {
                counts[scheme.class_of(r)] += 1;
            }
        }
        counts
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, DatasetError> {
        let file = std::fs::File::open(path)?;
        Self::read(BufReader::new(file))
    }

    pub fn read(reader: impl Read) -> Result<Self, DatasetError> {
        let mut frames = Vec::new();
        for (i, line) in BufReader::new(reader).lines().enumerate() {
            let line = line?;
            let lineno = i + 1;
            if let Some(comment) = line.strip_prefix('#') {
                let mut words = comment.split_whitespace();
                if words.next() == Some(HEADER_TAG) {
                    let v = words
                        .next()
                        .and_then(|w| w.strip_prefix('v'))
                        .and_then(|w| w.parse::<u32>().ok())
                        .ok_or_else(|| DatasetError::Parse { line: lineno, msg: "malformed version header".into() })?;
                    if v != FRAME_FORMAT_VERSION {
                        return Err(DatasetError::Version(v));
                    }
                }
                continue;
            }
            if line.trim().is_empty() {
                continue;
            }
            frames.push(parse_line(&line).map_err(|msg| DatasetError::Parse { line: lineno, msg })?);
        }
        Self::from_frames(frames)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<(), DatasetError> {
        let mut file = std::io::BufWriter::new(std::fs::File::create(path)?);
        self.write(&mut file)?;
        file.flush()?;
        Ok(())
    }

    pub fn write(&self, mut w: impl Write) -> Result<(), DatasetError> {
        writeln!(w, "# {HEADER_TAG} v{FRAME_FORMAT_VERSION}")?;
        let mut line = String::new();
        for f in self.frames() {
            line.clear();
            format_line(&mut line, f);
            w.write_all(line.as_bytes())?;
        }
        Ok(())
    }
}

fn parse_line(line: &str) -> Result<LandmarkFrame, String> {
    let fields: Vec<&str> = line.split(' ').collect();
    let expected = 3 + 2 * N_LANDMARKS;
    if fields.len() != expected {
        return Err(format!("expected {expected} fields, got {}", fields.len()));
    }
    let subject = fields[0];
    if subject.is_empty() {
        return Err("empty subject id".into());
    }
    let frame_index: u64 = fields[1]
        .parse()
        .map_err(|_| format!("bad frame index {:?}", fields[1]))?;
    let label = match fields[2] {
        "-" => None,
        code => {
            let c: u8 = code.parse().map_err(|_| format!("bad label code {code:?}"))?;
            Some(GazeRegion::from_code(c).ok_or_else(|| TypeError::UnknownRegion(code.into()).to_string())?)
        }
    };
    let mut pts = Vec::with_capacity(N_LANDMARKS);
    for pair in fields[3..].chunks_exact(2) {
        let x: f64 = pair[0].parse().map_err(|_| format!("bad coordinate {:?}", pair[0]))?;
        let y: f64 = pair[1].parse().map_err(|_| format!("bad coordinate {:?}", pair[1]))?;
        pts.push(Point2::new(x, y));
    }
    LandmarkFrame::new(subject, frame_index, pts, label).map_err(|e| e.to_string())
}

fn format_line(out: &mut String, f: &LandmarkFrame) {
    let label = f.label.map(|r| r.code().to_string()).unwrap_or_else(|| "-".into());
    let _ = write!(out, "{} {} {}", f.subject_id, f.frame_index, label);
    for p in f.landmarks() {
        let _ = write!(out, " {} {}", p.x, p.y);
    }
    out.push('\n');
}

/// `(subject position, start, end)` of one run.
type Run = (usize, usize, usize);

/// Maximal runs of consecutive frames sharing one class under `scheme`,
/// as `(subject position, start, end)` with `end` exclusive.
fn class_runs(
    dataset: &Dataset,
    scheme: RegionScheme,
) -> Result<Vec<Vec<Run>>, DatasetError> {
    let mut runs = vec![Vec::new(); scheme.n_classes()];
    for (si, s) in dataset.subjects().iter().enumerate() {
        let classes = s
            .frames
            .iter()
            .map(|f| {
                f.label.map(|r| scheme.class_of(r)).ok_or_else(|| DatasetError::Unlabeled {
                    subject: f.subject_id.clone(),
                    frame_index: f.frame_index,
                })
            })
            .collect::<Result<Vec<_>, _>>()?;
        let mut start = 0;
        for i in 1..=classes.len() {
            if i == classes.len() || classes[i] != classes[start] {
                runs[classes[start]].push((si, start, i));
                start = i;
            }
        }
    }
    Ok(runs)
}

/// Equal-count test set: every class is cut to the smallest class count by
/// drawing whole glance episodes (runs of one class) in a seeded random
/// order and truncating the last one. Frame order within subjects is kept.
pub fn balanced_test_set(dataset: &Dataset, scheme: RegionScheme, seed: u64) -> Result<Dataset, DatasetError> {
    let runs = class_runs(dataset, scheme)?;
    let counts: Vec<usize> = runs
        .iter()
        .map(|rs| rs.iter().map(|&(_, a, b)| b - a).sum())
        .collect();
    if let Some(c) = counts.iter().position(|&c| c == 0) {
        return Err(DatasetError::EmptyClass(scheme.class_name(c)));
    }
    let target = *counts.iter().min().expect("at least one class");

    let mut keep: Vec<Vec<bool>> = dataset.subjects().iter().map(|s| vec![false; s.len()]).collect();
    for (class, mut class_runs) in runs.into_iter().enumerate() {
        let mut rng = stream_rng(seed, class as u64);
        class_runs.shuffle(&mut rng);
        let mut remaining = target;
        for (si, a, b) in class_runs {
            if remaining == 0 {
                break;
            }
            let take = (b - a).min(remaining);
            keep[si][a..a + take].iter_mut().for_each(|k| *k = true);
            remaining -= take;
        }
    }

    let mut subjects = Vec::new();
    for (s, k) in dataset.subjects().iter().zip(keep) {
        let frames: Vec<_> = s.frames.iter().zip(k).filter(|(_, k)| *k).map(|(f, _)| f.clone()).collect();
        if !frames.is_empty() {
            subjects.push(SubjectStream { subject_id: s.subject_id.clone(), frames });
        }
    }
    Ok(Dataset { subjects })
}
