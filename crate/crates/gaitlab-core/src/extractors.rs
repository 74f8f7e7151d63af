use alloc::boxed::Box;
use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use nalgebra::{DMatrix, DVector, Vector3};
use rand::seq::SliceRandom;
use rand_chacha::ChaCha8Rng;

use crate::dtw::WarpSpec;
use crate::error::{Error, Result};
use crate::sample::{GaitSample, LabeledDataset, Modality};
use crate::template::{GaitTemplate, TemplateData, TemplateDistance};

/// Maps logical body-part names used by the geometric methods to actual
/// joint names of a skeleton. Each joint is the distal end of the bone it
/// is named after.
#[derive(Debug, Clone, PartialEq)]
pub struct JointMap {
    entries: BTreeMap<String, String>,
}

pub const LOGICAL_JOINTS: &[&str] = &[
    "root",
    "head",
    "neck",
    "left_hip",
    "right_hip",
    "left_knee",
    "right_knee",
    "left_ankle",
    "right_ankle",
    "left_foot",
    "right_foot",
    "left_shoulder",
    "right_shoulder",
    "left_elbow",
    "right_elbow",
    "left_wrist",
    "right_wrist",
];

impl JointMap {
    pub fn from_pairs<I, K, V>(pairs: I) -> Self
    where
        I: IntoIterator<Item = (K, V)>,
        K: Into<String>,
        V: Into<String>,
    {
        JointMap {
            entries: pairs
                .into_iter()
                .map(|(k, v)| (k.into(), v.into()))
                .collect(),
        }
    }

    /// Default mapping for the standard 31-joint CMU skeleton.
    pub fn cmu_default() -> Self {
        JointMap::from_pairs([
            ("root", "root"),
            ("head", "head"),
            ("neck", "lowerneck"),
            ("left_hip", "lhipjoint"),
            ("right_hip", "rhipjoint"),
            ("left_knee", "lfemur"),
            ("right_knee", "rfemur"),
            ("left_ankle", "ltibia"),
            ("right_ankle", "rtibia"),
            ("left_foot", "lfoot"),
            ("right_foot", "rfoot"),
            ("left_shoulder", "lclavicle"),
            ("right_shoulder", "rclavicle"),
            ("left_elbow", "lhumerus"),
            ("right_elbow", "rhumerus"),
            ("left_wrist", "lradius"),
            ("right_wrist", "rradius"),
        ])
    }

    pub fn joint_name(&self, logical: &str) -> Result<&str> {
        self.entries
            .get(logical)
            .map(String::as_str)
            .ok_or_else(|| Error::MissingJoint(logical.to_string()))
    }

    pub fn entries(&self) -> impl Iterator<Item = (&str, &str)> {
        self.entries.iter().map(|(k, v)| (k.as_str(), v.as_str()))
    }

    /// Resolves a logical joint to its column index in a dataset's joint
    /// order.
    fn resolve(&self, logical: &str, joint_names: &[String]) -> Result<usize> {
        let name = self.joint_name(logical)?;
        joint_names
            .iter()
            .position(|n| n == name)
            .ok_or_else(|| Error::MissingJoint(format!("{logical} -> {name}")))
    }
}

fn joint_position(channels: &DMatrix<f64>, frame: usize, joint: usize) -> Vector3<f64> {
    Vector3::new(
        channels[(frame, 3 * joint)],
        channels[(frame, 3 * joint + 1)],
        channels[(frame, 3 * joint + 2)],
    )
}

/// Angle in [0, pi] between two vectors; errors when either vector has
/// (near-)zero length so no NaN can escape.
fn angle_between(
    u: Vector3<f64>,
    v: Vector3<f64>,
    frame: usize,
    segment: &'static str,
) -> Result<f64> {
    let (nu, nv) = (u.norm(), v.norm());
    if nu < 1e-12 || nv < 1e-12 {
        return Err(Error::ZeroLengthSegment { frame, segment });
    }
    let cos = (u.dot(&v) / (nu * nv)).clamp(-1.0, 1.0);
    Ok(libm::acos(cos))
}

fn mean(values: &[f64]) -> f64 {
    values.iter().sum::<f64>() / values.len() as f64
}

fn population_std(values: &[f64]) -> f64 {
    let m = mean(values);
    let var = values.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / values.len() as f64;
    libm::sqrt(var)
}

fn max(values: &[f64]) -> f64 {
    values.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
}

fn require_jc(sample: &GaitSample) -> Result<()> {
    if sample.modality() != Modality::JointCoordinates {
        return Err(Error::InvalidArgument(
            "this extractor requires joint-coordinate samples".into(),
        ));
    }
    Ok(())
}

/// A feature map paired with its distance function and template
/// dimensionality.
pub trait Extractor {
    fn name(&self) -> &'static str;
    fn distance(&self) -> TemplateDistance;
    /// Template dimensionality: the number of scalars per template.
    fn template_dim(&self) -> usize;
    fn extract(&self, sample: &GaitSample) -> Result<TemplateData>;

    fn extract_template(&self, sample: &GaitSample) -> Result<GaitTemplate> {
        Ok(GaitTemplate {
            data: self.extract(sample)?,
            label: Some(sample.subject().to_string()),
            sequence: Some(sample.sequence().to_string()),
        })
    }
}

/// Identity feature map over the raw channels, compared by DTW with L2
/// local cost.
pub struct RawExtractor {
    dims: usize,
}

impl RawExtractor {
    pub fn new(dataset: &LabeledDataset) -> Self {
        RawExtractor {
            dims: dataset.dimension(),
        }
    }
}

impl Extractor for RawExtractor {
    fn name(&self) -> &'static str {
        "raw"
    }

    fn distance(&self) -> TemplateDistance {
        TemplateDistance::Dtw(WarpSpec::l2())
    }

    fn template_dim(&self) -> usize {
        self.dims
    }

    fn extract(&self, sample: &GaitSample) -> Result<TemplateData> {
        Ok(TemplateData::Sequence(sample.channels().clone()))
    }
}

struct LegJoints {
    hip: usize,
    knee: usize,
    ankle: usize,
    foot: usize,
}

fn resolve_leg(map: &JointMap, joints: &[String], side: &str) -> Result<LegJoints> {
    Ok(LegJoints {
        hip: map.resolve(&format!("{side}_hip"), joints)?,
        knee: map.resolve(&format!("{side}_knee"), joints)?,
        ankle: map.resolve(&format!("{side}_ankle"), joints)?,
        foot: map.resolve(&format!("{side}_foot"), joints)?,
    })
}

/// Mean areas over the cycle of the two lower-limb triangles
/// (hip, knee, foot), one value per side.
pub struct AlisExtractor {
    left: LegJoints,
    right: LegJoints,
}

impl AlisExtractor {
    pub fn new(map: &JointMap, dataset: &LabeledDataset) -> Result<Self> {
        let joints = dataset
            .joint_names()
            .ok_or_else(|| Error::MissingJoint("dataset carries no joint names".into()))?;
        Ok(AlisExtractor {
            left: resolve_leg(map, joints, "left")?,
            right: resolve_leg(map, joints, "right")?,
        })
    }

    fn triangle_areas(leg: &LegJoints, sample: &GaitSample) -> Vec<f64> {
        (0..sample.frames())
            .map(|t| {
                let hip = joint_position(sample.channels(), t, leg.hip);
                let knee = joint_position(sample.channels(), t, leg.knee);
                let foot = joint_position(sample.channels(), t, leg.foot);
                0.5 * (knee - hip).cross(&(foot - hip)).norm()
            })
            .collect()
    }
}

impl Extractor for AlisExtractor {
    fn name(&self) -> &'static str {
        "alis"
    }

    fn distance(&self) -> TemplateDistance {
        TemplateDistance::L1
    }

    fn template_dim(&self) -> usize {
        2
    }

    fn extract(&self, sample: &GaitSample) -> Result<TemplateData> {
        require_jc(sample)?;
        let left = Self::triangle_areas(&self.left, sample);
        let right = Self::triangle_areas(&self.right, sample);
        Ok(TemplateData::Vector(DVector::from_vec(alloc::vec![
            mean(&left),
            mean(&right),
        ])))
    }
}

/// Mean, standard deviation and maximum over the cycle of three lower-limb
/// angle signals per leg: thigh against the downward vertical, shin
/// against the thigh, and foot against the forward axis.
pub struct BallaExtractor {
    left: LegJoints,
    right: LegJoints,
}

impl BallaExtractor {
    pub fn new(map: &JointMap, dataset: &LabeledDataset) -> Result<Self> {
        let joints = dataset
            .joint_names()
            .ok_or_else(|| Error::MissingJoint("dataset carries no joint names".into()))?;
        Ok(BallaExtractor {
            left: resolve_leg(map, joints, "left")?,
            right: resolve_leg(map, joints, "right")?,
        })
    }

    fn leg_signals(leg: &LegJoints, sample: &GaitSample) -> Result<[Vec<f64>; 3]> {
        let down = Vector3::new(0.0, -1.0, 0.0);
        let forward = Vector3::new(0.0, 0.0, 1.0);
        let frames = sample.frames();
        let mut thigh_y = Vec::with_capacity(frames);
        let mut shin_thigh = Vec::with_capacity(frames);
        let mut foot_z = Vec::with_capacity(frames);
        for t in 0..frames {
            let hip = joint_position(sample.channels(), t, leg.hip);
            let knee = joint_position(sample.channels(), t, leg.knee);
            let ankle = joint_position(sample.channels(), t, leg.ankle);
            let foot = joint_position(sample.channels(), t, leg.foot);
            let thigh = knee - hip;
            let shin = ankle - knee;
            let foot_seg = foot - ankle;
            thigh_y.push(angle_between(thigh, down, t, "upper leg")?);
            shin_thigh.push(angle_between(shin, thigh, t, "lower leg")?);
            foot_z.push(angle_between(foot_seg, forward, t, "foot")?);
        }
        Ok([thigh_y, shin_thigh, foot_z])
    }
}

impl Extractor for BallaExtractor {
    fn name(&self) -> &'static str {
        "balla"
    }

    fn distance(&self) -> TemplateDistance {
        TemplateDistance::L1
    }

    fn template_dim(&self) -> usize {
        18
    }

    fn extract(&self, sample: &GaitSample) -> Result<TemplateData> {
        require_jc(sample)?;
        let mut out = Vec::with_capacity(18);
        for leg in [&self.left, &self.right] {
            for signal in Self::leg_signals(leg, sample)? {
                out.push(mean(&signal));
                out.push(population_std(&signal));
                out.push(max(&signal));
            }
        }
        Ok(TemplateData::Vector(DVector::from_vec(out)))
    }
}

/// Static body proportions plus step length and speed, 13 scalars:
/// height, leg length, torso, both lower legs, both thighs, both upper
/// arms, both forearms, step length and speed.
pub struct PreisjExtractor {
    left: LegJoints,
    right: LegJoints,
    head: usize,
    neck: usize,
    root: usize,
    shoulder_l: usize,
    shoulder_r: usize,
    elbow_l: usize,
    elbow_r: usize,
    wrist_l: usize,
    wrist_r: usize,
}

impl PreisjExtractor {
    pub fn new(map: &JointMap, dataset: &LabeledDataset) -> Result<Self> {
        let joints = dataset
            .joint_names()
            .ok_or_else(|| Error::MissingJoint("dataset carries no joint names".into()))?;
        Ok(PreisjExtractor {
            left: resolve_leg(map, joints, "left")?,
            right: resolve_leg(map, joints, "right")?,
            head: map.resolve("head", joints)?,
            neck: map.resolve("neck", joints)?,
            root: map.resolve("root", joints)?,
            shoulder_l: map.resolve("left_shoulder", joints)?,
            shoulder_r: map.resolve("right_shoulder", joints)?,
            elbow_l: map.resolve("left_elbow", joints)?,
            elbow_r: map.resolve("right_elbow", joints)?,
            wrist_l: map.resolve("left_wrist", joints)?,
            wrist_r: map.resolve("right_wrist", joints)?,
        })
    }

    fn mean_segment(&self, sample: &GaitSample, a: usize, b: usize) -> f64 {
        let values: Vec<f64> = (0..sample.frames())
            .map(|t| {
                (joint_position(sample.channels(), t, a)
                    - joint_position(sample.channels(), t, b))
                .norm()
            })
            .collect();
        mean(&values)
    }
}

impl Extractor for PreisjExtractor {
    fn name(&self) -> &'static str {
        "preisj"
    }

    fn distance(&self) -> TemplateDistance {
        TemplateDistance::L1
    }

    fn template_dim(&self) -> usize {
        13
    }

    fn extract(&self, sample: &GaitSample) -> Result<TemplateData> {
        require_jc(sample)?;
        let frames = sample.frames();

        // Height: head above the lower foot, averaged over the cycle.
        let heights: Vec<f64> = (0..frames)
            .map(|t| {
                let head_y = sample.channels()[(t, 3 * self.head + 1)];
                let foot_y = sample.channels()[(t, 3 * self.left.foot + 1)]
                    .min(sample.channels()[(t, 3 * self.right.foot + 1)]);
                head_y - foot_y
            })
            .collect();
        let height = mean(&heights);

        let thigh_l = self.mean_segment(sample, self.left.hip, self.left.knee);
        let thigh_r = self.mean_segment(sample, self.right.hip, self.right.knee);
        let lower_l = self.mean_segment(sample, self.left.knee, self.left.ankle);
        let lower_r = self.mean_segment(sample, self.right.knee, self.right.ankle);
        let leg_length = 0.5 * ((thigh_l + lower_l) + (thigh_r + lower_r));
        let torso = self.mean_segment(sample, self.root, self.neck);
        let upper_arm_l = self.mean_segment(sample, self.shoulder_l, self.elbow_l);
        let upper_arm_r = self.mean_segment(sample, self.shoulder_r, self.elbow_r);
        let forearm_l = self.mean_segment(sample, self.elbow_l, self.wrist_l);
        let forearm_r = self.mean_segment(sample, self.elbow_r, self.wrist_r);

        // Step length: maximum distance between the feet over the cycle.
        let feet: Vec<f64> = (0..frames)
            .map(|t| {
                (joint_position(sample.channels(), t, self.left.foot)
                    - joint_position(sample.channels(), t, self.right.foot))
                .norm()
            })
            .collect();
        let step_length = max(&feet);

        // One gait cycle spans two steps; speed is stride over duration.
        let stride_length = 2.0 * step_length;
        let speed = stride_length / sample.duration_s();

        Ok(TemplateData::Vector(DVector::from_vec(alloc::vec![
            height,
            leg_length,
            torso,
            lower_l,
            lower_r,
            thigh_l,
            thigh_r,
            upper_arm_l,
            upper_arm_r,
            forearm_l,
            forearm_r,
            step_length,
            speed,
        ])))
    }
}

/// The no-features baseline: ignores templates entirely and ranks gallery
/// classes uniformly at random. Deterministic given its RNG.
pub struct RandomClassifier {
    rng: ChaCha8Rng,
}

impl RandomClassifier {
    pub fn new(rng: ChaCha8Rng) -> Self {
        RandomClassifier { rng }
    }

    /// Uniformly random ranking of `class_count` class indices.
    pub fn rank(&mut self, class_count: usize) -> Vec<usize> {
        let mut order: Vec<usize> = (0..class_count).collect();
        order.shuffle(&mut self.rng);
        order
    }

    /// Uniformly random class choice.
    pub fn classify(&mut self, class_count: usize) -> usize {
        self.rank(class_count)[0]
    }
}

/// Methods from the survey that the registry knows by name but whose
/// definitions live in their original papers.
pub const STUB_METHODS: &[&str] = &[
    "ahmedf",
    "ahmedm",
    "anderssonvo",
    "dikovskib",
    "jiangs",
    "krzeszowskit",
    "kwolekb",
    "nareshkumarms",
    "sedmidubskyj",
    "sinhaa",
];

pub const IMPLEMENTED_METHODS: &[&str] = &["raw", "alis", "balla", "preisj"];

/// Creates extractors by name, bound to a dataset's joint layout.
pub struct ExtractorRegistry {
    joint_map: JointMap,
}

impl ExtractorRegistry {
    pub fn new(joint_map: JointMap) -> Self {
        ExtractorRegistry { joint_map }
    }

    pub fn with_cmu_defaults() -> Self {
        ExtractorRegistry::new(JointMap::cmu_default())
    }

    pub fn joint_map(&self) -> &JointMap {
        &self.joint_map
    }

    pub fn instantiate(
        &self,
        name: &str,
        dataset: &LabeledDataset,
    ) -> Result<Box<dyn Extractor>> {
        match name.to_ascii_lowercase().as_str() {
            "raw" => Ok(Box::new(RawExtractor::new(dataset))),
            "alis" => Ok(Box::new(AlisExtractor::new(&self.joint_map, dataset)?)),
            "balla" => Ok(Box::new(BallaExtractor::new(&self.joint_map, dataset)?)),
            "preisj" => Ok(Box::new(PreisjExtractor::new(&self.joint_map, dataset)?)),
            other if STUB_METHODS.contains(&other) => {
                Err(Error::NotImplemented(other.to_string()))
            }
            other => Err(Error::InvalidArgument(format!(
                "unknown extraction method `{other}`"
            ))),
        }
    }
}
