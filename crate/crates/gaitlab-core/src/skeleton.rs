use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use crate::error::{Error, Result};

/// One degree-of-freedom channel of a bone, in ASF notation.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Dof {
    Rx,
    Ry,
    Rz,
    Tx,
    Ty,
    Tz,
}

impl Dof {
    pub fn parse(token: &str) -> Option<Dof> {
        match token.to_ascii_lowercase().as_str() {
            "rx" => Some(Dof::Rx),
            "ry" => Some(Dof::Ry),
            "rz" => Some(Dof::Rz),
            "tx" => Some(Dof::Tx),
            "ty" => Some(Dof::Ty),
            "tz" => Some(Dof::Tz),
            _ => None,
        }
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            Dof::Rx => "rx",
            Dof::Ry => "ry",
            Dof::Rz => "rz",
            Dof::Tx => "tx",
            Dof::Ty => "ty",
            Dof::Tz => "tz",
        }
    }

    pub fn is_rotation(&self) -> bool {
        matches!(self, Dof::Rx | Dof::Ry | Dof::Rz)
    }

    /// Rotation axis for rotational dofs, translation axis index otherwise.
    pub fn axis(&self) -> RotAxis {
        match self {
            Dof::Rx | Dof::Tx => RotAxis::X,
            Dof::Ry | Dof::Ty => RotAxis::Y,
            Dof::Rz | Dof::Tz => RotAxis::Z,
        }
    }
}

/// Coordinate axis, used for Euler rotation ordering.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RotAxis {
    X,
    Y,
    Z,
}

impl RotAxis {
    pub fn index(&self) -> usize {
        match self {
            RotAxis::X => 0,
            RotAxis::Y => 1,
            RotAxis::Z => 2,
        }
    }
}

/// Unit the source file declared its angles in. All angles held by core
/// types are already converted to radians; this tag is provenance only.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AngleUnit {
    Degrees,
    Radians,
}

/// One bone of an articulated skeleton. The root is modeled as a bone with
/// no parent, zero direction and zero length; its distal joint is the root
/// joint itself.
#[derive(Debug, Clone, PartialEq)]
pub struct Bone {
    pub name: String,
    pub parent: Option<String>,
    /// Unit vector from the proximal to the distal joint, in the rest pose.
    pub direction: [f64; 3],
    /// Bone length in skeleton length units.
    pub length: f64,
    /// Euler angles (radians) of the bone's local axis system.
    pub axis: [f64; 3],
    /// Order in which the axis angles apply; first entry is applied first.
    pub axis_order: [RotAxis; 3],
    /// Motion channels this bone reads from a frame, in declared order.
    pub dofs: Vec<Dof>,
}

impl Bone {
    pub fn is_root(&self) -> bool {
        self.parent.is_none()
    }
}

const DIRECTION_NORM_TOLERANCE: f64 = 1e-6;

/// An articulated skeleton: a bone tree rooted at a single root joint.
///
/// Bones are held in a canonical traversal order (root first, then
/// depth-first in declaration order), which also fixes the joint order of
/// every [`crate::motion::JointCoordinateSequence`] derived from it.
#[derive(Debug, Clone, PartialEq)]
pub struct Skeleton {
    bones: Vec<Bone>,
    parent_index: Vec<Option<usize>>,
    index: BTreeMap<String, usize>,
    angle_unit: AngleUnit,
}

impl Skeleton {
    pub fn new(bones: Vec<Bone>, angle_unit: AngleUnit) -> Result<Self> {
        if bones.is_empty() {
            return Err(Error::InvalidArgument("skeleton has no bones".into()));
        }
        let mut roots = bones.iter().filter(|b| b.is_root());
        let root = roots
            .next()
            .ok_or_else(|| Error::InvalidArgument("skeleton has no root bone".into()))?;
        if roots.next().is_some() {
            return Err(Error::InvalidArgument("skeleton has more than one root".into()));
        }

        let mut by_name: BTreeMap<&str, usize> = BTreeMap::new();
        for (i, bone) in bones.iter().enumerate() {
            if by_name.insert(bone.name.as_str(), i).is_some() {
                return Err(Error::InvalidArgument(format!(
                    "duplicate bone name `{}`",
                    bone.name
                )));
            }
        }
        for bone in &bones {
            if let Some(parent) = &bone.parent {
                if !by_name.contains_key(parent.as_str()) {
                    return Err(Error::UnknownBone(format!(
                        "{parent} (parent of `{}`)",
                        bone.name
                    )));
                }
            }
            if !bone.is_root() {
                let norm = libm::sqrt(
                    bone.direction.iter().map(|d| d * d).sum::<f64>(),
                );
                if (norm - 1.0).abs() > DIRECTION_NORM_TOLERANCE {
                    return Err(Error::InvalidArgument(format!(
                        "bone `{}` direction has norm {norm}, expected a unit vector",
                        bone.name
                    )));
                }
                if bone.length < 0.0 {
                    return Err(Error::InvalidArgument(format!(
                        "bone `{}` has negative length {}",
                        bone.name, bone.length
                    )));
                }
            }
        }

        // Children per bone, in declaration order.
        let mut children: Vec<Vec<usize>> = alloc::vec![Vec::new(); bones.len()];
        for (i, bone) in bones.iter().enumerate() {
            if let Some(parent) = &bone.parent {
                children[by_name[parent.as_str()]].push(i);
            }
        }

        // Depth-first reorder from the root; anything unreachable means the
        // bone graph is not a tree.
        let root_idx = by_name[root.name.as_str()];
        let mut order = Vec::with_capacity(bones.len());
        let mut stack = alloc::vec![root_idx];
        let mut visited = alloc::vec![false; bones.len()];
        while let Some(i) = stack.pop() {
            if visited[i] {
                return Err(Error::InvalidArgument(format!(
                    "bone hierarchy contains a cycle through `{}`",
                    bones[i].name
                )));
            }
            visited[i] = true;
            order.push(i);
            for &child in children[i].iter().rev() {
                stack.push(child);
            }
        }
        if order.len() != bones.len() {
            let orphan = bones
                .iter()
                .enumerate()
                .find(|(i, _)| !visited[*i])
                .map(|(_, b)| b.name.clone())
                .unwrap_or_default();
            return Err(Error::InvalidArgument(format!(
                "bone `{orphan}` is not reachable from the root"
            )));
        }

        let bones: Vec<Bone> = order.iter().map(|&i| bones[i].clone()).collect();
        let mut index = BTreeMap::new();
        for (i, bone) in bones.iter().enumerate() {
            index.insert(bone.name.clone(), i);
        }
        let parent_index = bones
            .iter()
            .map(|b| b.parent.as_ref().map(|p| index[p]))
            .collect();
        Ok(Skeleton {
            bones,
            parent_index,
            index,
            angle_unit,
        })
    }

    pub fn bones(&self) -> &[Bone] {
        &self.bones
    }

    pub fn root(&self) -> &Bone {
        &self.bones[0]
    }

    pub fn bone_index(&self, name: &str) -> Result<usize> {
        self.index
            .get(name)
            .copied()
            .ok_or_else(|| Error::UnknownBone(name.to_string()))
    }

    pub fn parent_index(&self, bone: usize) -> Option<usize> {
        self.parent_index[bone]
    }

    /// One joint per bone: the bone's distal end (the root joint for the root).
    pub fn joint_count(&self) -> usize {
        self.bones.len()
    }

    pub fn joint_names(&self) -> Vec<String> {
        self.bones.iter().map(|b| b.name.clone()).collect()
    }

    pub fn angle_unit(&self) -> AngleUnit {
        self.angle_unit
    }

    /// Total number of motion channels across all bones.
    pub fn channel_count(&self) -> usize {
        self.bones.iter().map(|b| b.dofs.len()).sum()
    }
}

/// Averages bone lengths across skeletons that share structure, producing
/// the shared skeleton substituted for every subject so that per-subject
/// bone lengths cannot act as an identifier.
pub fn prototypical_skeleton(skeletons: &[Skeleton]) -> Result<Skeleton> {
    let first = skeletons
        .first()
        .ok_or_else(|| Error::InvalidArgument("no skeletons to average".into()))?;
    const AXIS_TOLERANCE: f64 = 1e-9;
    for other in &skeletons[1..] {
        if other.bones.len() != first.bones.len() {
            return Err(Error::IncompatibleSkeletons(format!(
                "bone counts differ: {} vs {}",
                first.bones.len(),
                other.bones.len()
            )));
        }
        for (a, b) in first.bones.iter().zip(other.bones.iter()) {
            if a.name != b.name || a.parent != b.parent {
                return Err(Error::IncompatibleSkeletons(format!(
                    "hierarchy differs at bone `{}` vs `{}`",
                    a.name, b.name
                )));
            }
            if a.dofs != b.dofs || a.axis_order != b.axis_order {
                return Err(Error::IncompatibleSkeletons(format!(
                    "dof or axis order differs at bone `{}`",
                    a.name
                )));
            }
            let dir_diff = a
                .direction
                .iter()
                .zip(&b.direction)
                .map(|(x, y)| (x - y).abs())
                .fold(0.0f64, f64::max);
            let axis_diff = a
                .axis
                .iter()
                .zip(&b.axis)
                .map(|(x, y)| (x - y).abs())
                .fold(0.0f64, f64::max);
            if dir_diff > AXIS_TOLERANCE || axis_diff > AXIS_TOLERANCE {
                return Err(Error::IncompatibleSkeletons(format!(
                    "direction or axis values differ at bone `{}`",
                    a.name
                )));
            }
        }
    }

    let mut bones = first.bones.clone();
    let n = skeletons.len() as f64;
    for (i, bone) in bones.iter_mut().enumerate() {
        bone.length = skeletons.iter().map(|s| s.bones[i].length).sum::<f64>() / n;
    }
    Skeleton::new(bones, first.angle_unit)
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    pub(crate) fn simple_bone(name: &str, parent: Option<&str>, dofs: &[Dof]) -> Bone {
        Bone {
            name: name.into(),
            parent: parent.map(|p| p.into()),
            direction: if parent.is_some() {
                [0.0, 1.0, 0.0]
            } else {
                [0.0, 0.0, 0.0]
            },
            length: if parent.is_some() { 1.0 } else { 0.0 },
            axis: [0.0; 3],
            axis_order: [RotAxis::X, RotAxis::Y, RotAxis::Z],
            dofs: dofs.to_vec(),
        }
    }

    #[test]
    fn builds_two_bone_tree() {
        let sk = Skeleton::new(
            vec![
                simple_bone("root", None, &[Dof::Tx, Dof::Ty, Dof::Tz, Dof::Rx, Dof::Ry, Dof::Rz]),
                simple_bone("spine", Some("root"), &[Dof::Rx]),
            ],
            AngleUnit::Degrees,
        )
        .unwrap();
        assert_eq!(sk.joint_count(), 2);
        assert_eq!(sk.channel_count(), 7);
        assert_eq!(sk.root().name, "root");
    }

    #[test]
    fn rejects_unknown_parent() {
        let err = Skeleton::new(
            vec![
                simple_bone("root", None, &[]),
                simple_bone("leg", Some("hip"), &[Dof::Rx]),
            ],
            AngleUnit::Degrees,
        )
        .unwrap_err();
        assert!(matches!(err, Error::UnknownBone(ref n) if n.contains("hip") && n.contains("leg")));
    }

    #[test]
    fn rejects_two_roots_and_non_unit_direction() {
        let err = Skeleton::new(
            vec![simple_bone("a", None, &[]), simple_bone("b", None, &[])],
            AngleUnit::Degrees,
        )
        .unwrap_err();
        assert!(matches!(err, Error::InvalidArgument(_)));

        let mut bad = simple_bone("leg", Some("root"), &[]);
        bad.direction = [0.0, 0.5, 0.0];
        let err = Skeleton::new(
            vec![simple_bone("root", None, &[]), bad],
            AngleUnit::Degrees,
        )
        .unwrap_err();
        assert!(matches!(err, Error::InvalidArgument(_)));
    }

    #[test]
    fn canonical_order_is_depth_first() {
        let sk = Skeleton::new(
            vec![
                simple_bone("lfoot", Some("lleg"), &[]),
                simple_bone("root", None, &[]),
                simple_bone("rleg", Some("root"), &[]),
                simple_bone("lleg", Some("root"), &[]),
            ],
            AngleUnit::Degrees,
        )
        .unwrap();
        let names: Vec<_> = sk.bones().iter().map(|b| b.name.as_str()).collect();
        assert_eq!(names, ["root", "rleg", "lleg", "lfoot"]);
    }

    #[test]
    fn prototype_averages_lengths() {
        let mk = |len: f64| {
            let mut bones = vec![
                simple_bone("root", None, &[]),
                simple_bone("leg", Some("root"), &[Dof::Rx]),
            ];
            bones[1].length = len;
            Skeleton::new(bones, AngleUnit::Degrees).unwrap()
        };
        let proto = prototypical_skeleton(&[mk(2.0), mk(4.0)]).unwrap();
        assert_eq!(proto.bones()[1].length, 3.0);

        // Idempotent on identical skeletons.
        let proto2 = prototypical_skeleton(&[mk(2.0), mk(2.0)]).unwrap();
        assert_eq!(proto2, mk(2.0));
    }

    #[test]
    fn prototype_mean_matches_summation_oracle() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        let lengths: Vec<f64> = (0..10).map(|_| rng.gen_range(0.5..5.0)).collect();
        let skeletons: Vec<Skeleton> = lengths
            .iter()
            .map(|&len| {
                let mut bones = vec![
                    simple_bone("root", None, &[]),
                    simple_bone("leg", Some("root"), &[Dof::Rx]),
                ];
                bones[1].length = len;
                Skeleton::new(bones, AngleUnit::Degrees).unwrap()
            })
            .collect();
        let proto = prototypical_skeleton(&skeletons).unwrap();
        let mut acc = 0.0;
        for len in &lengths {
            acc += len;
        }
        assert!((proto.bones()[1].length - acc / 10.0).abs() < 1e-12);
    }

    #[test]
    fn prototype_rejects_differing_hierarchy() {
        let a = Skeleton::new(
            vec![simple_bone("root", None, &[]), simple_bone("leg", Some("root"), &[])],
            AngleUnit::Degrees,
        )
        .unwrap();
        let b = Skeleton::new(
            vec![simple_bone("root", None, &[]), simple_bone("arm", Some("root"), &[])],
            AngleUnit::Degrees,
        )
        .unwrap();
        assert!(matches!(
            prototypical_skeleton(&[a, b]),
            Err(Error::IncompatibleSkeletons(_))
        ));
    }
}
