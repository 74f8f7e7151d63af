use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use nalgebra::{DMatrix, Matrix3, Vector3};

use crate::error::{Error, Result};
use crate::skeleton::{Dof, RotAxis, Skeleton};

/// Identifies one motion channel: a bone and one of its dofs.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ChannelId {
    pub bone: String,
    pub dof: Dof,
}

/// Raw per-frame bone motion values bound to a skeleton's channel layout.
///
/// Rotational values are radians, translational values skeleton length
/// units. Channels run over bones in the skeleton's canonical order, each
/// bone contributing its declared dofs in declared order.
#[derive(Debug, Clone, PartialEq)]
pub struct BoneRotationSequence {
    channels: DMatrix<f64>,
    layout: Vec<ChannelId>,
    root_bone: String,
    frame_rate: f64,
}

impl BoneRotationSequence {
    pub fn new(skeleton: &Skeleton, channels: DMatrix<f64>, frame_rate: f64) -> Result<Self> {
        let layout = Self::layout_for(skeleton);
        if channels.nrows() == 0 {
            return Err(Error::InvalidArgument("motion has no frames".into()));
        }
        if channels.ncols() != layout.len() {
            return Err(Error::ShapeMismatch {
                expected: format!("{} channels", layout.len()),
                actual: format!("{} channels", channels.ncols()),
                context: "bone rotation sequence",
            });
        }
        if frame_rate.is_nan() || frame_rate <= 0.0 {
            return Err(Error::InvalidArgument(format!(
                "frame rate must be positive, got {frame_rate}"
            )));
        }
        Ok(BoneRotationSequence {
            channels,
            layout,
            root_bone: skeleton.root().name.clone(),
            frame_rate,
        })
    }

    pub fn layout_for(skeleton: &Skeleton) -> Vec<ChannelId> {
        skeleton
            .bones()
            .iter()
            .flat_map(|b| {
                b.dofs.iter().map(|&dof| ChannelId {
                    bone: b.name.clone(),
                    dof,
                })
            })
            .collect()
    }

    pub fn frames(&self) -> usize {
        self.channels.nrows()
    }

    pub fn channels(&self) -> &DMatrix<f64> {
        &self.channels
    }

    pub fn layout(&self) -> &[ChannelId] {
        &self.layout
    }

    pub fn frame_rate(&self) -> f64 {
        self.frame_rate
    }

    pub fn root_bone(&self) -> &str {
        &self.root_bone
    }

    /// The rotational channels only: the raw bone-rotation (BR) form.
    pub fn rotation_channels(&self) -> (DMatrix<f64>, Vec<ChannelId>) {
        let cols: Vec<usize> = self
            .layout
            .iter()
            .enumerate()
            .filter(|(_, id)| id.dof.is_rotation())
            .map(|(i, _)| i)
            .collect();
        let mut out = DMatrix::zeros(self.frames(), cols.len());
        for (k, &c) in cols.iter().enumerate() {
            out.set_column(k, &self.channels.column(c));
        }
        let layout = cols.iter().map(|&c| self.layout[c].clone()).collect();
        (out, layout)
    }
}

/// Zeroes every root channel in every frame, fixing the walker at the
/// origin with a canonical heading. All other channels are untouched.
pub fn normalize_root(motion: &BoneRotationSequence) -> BoneRotationSequence {
    let mut out = motion.clone();
    for (c, id) in motion.layout.iter().enumerate() {
        if id.bone == motion.root_bone {
            out.channels.column_mut(c).fill(0.0);
        }
    }
    out
}

/// 3D joint positions over time, one triple per joint per frame.
///
/// Joint order follows the skeleton traversal order; joint `j` occupies
/// columns `3j..3j+3` of the position matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct JointCoordinateSequence {
    positions: DMatrix<f64>,
    joint_names: Vec<String>,
    frame_rate: f64,
}

impl JointCoordinateSequence {
    pub fn new(positions: DMatrix<f64>, joint_names: Vec<String>, frame_rate: f64) -> Result<Self> {
        if positions.ncols() != 3 * joint_names.len() {
            return Err(Error::ShapeMismatch {
                expected: format!("{} columns", 3 * joint_names.len()),
                actual: format!("{} columns", positions.ncols()),
                context: "joint coordinate sequence",
            });
        }
        if positions.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument(
                "joint coordinates contain non-finite values".into(),
            ));
        }
        Ok(JointCoordinateSequence {
            positions,
            joint_names,
            frame_rate,
        })
    }

    pub fn frames(&self) -> usize {
        self.positions.nrows()
    }

    pub fn joint_count(&self) -> usize {
        self.joint_names.len()
    }

    pub fn joint_names(&self) -> &[String] {
        &self.joint_names
    }

    pub fn positions(&self) -> &DMatrix<f64> {
        &self.positions
    }

    pub fn frame_rate(&self) -> f64 {
        self.frame_rate
    }

    pub fn position(&self, frame: usize, joint: usize) -> Vector3<f64> {
        Vector3::new(
            self.positions[(frame, 3 * joint)],
            self.positions[(frame, 3 * joint + 1)],
            self.positions[(frame, 3 * joint + 2)],
        )
    }
}

/// Right-handed rotation about X by `a` radians, column-vector convention.
pub fn rot_x(a: f64) -> Matrix3<f64> {
    let (s, c) = (libm::sin(a), libm::cos(a));
    Matrix3::new(1.0, 0.0, 0.0, 0.0, c, -s, 0.0, s, c)
}

pub fn rot_y(a: f64) -> Matrix3<f64> {
    let (s, c) = (libm::sin(a), libm::cos(a));
    Matrix3::new(c, 0.0, s, 0.0, 1.0, 0.0, -s, 0.0, c)
}

pub fn rot_z(a: f64) -> Matrix3<f64> {
    let (s, c) = (libm::sin(a), libm::cos(a));
    Matrix3::new(c, -s, 0.0, s, c, 0.0, 0.0, 0.0, 1.0)
}

/// Composes Euler rotations so that the first listed rotation is applied
/// first to a column vector: `R = R_n ... R_2 R_1`.
pub fn euler_rotation(steps: &[(RotAxis, f64)]) -> Matrix3<f64> {
    let mut r = Matrix3::identity();
    for &(axis, angle) in steps {
        let step = match axis {
            RotAxis::X => rot_x(angle),
            RotAxis::Y => rot_y(angle),
            RotAxis::Z => rot_z(angle),
        };
        r = step * r;
    }
    r
}

/// Poses the skeleton for every frame of a motion, producing joint
/// positions.
///
/// Per bone, the frame's dof angles rotate the bone inside its local axis
/// system, the result is accumulated down the parent chain, and the distal
/// joint lands at `parent_position + accumulated_rotation * (length * direction)`.
/// The root's translation dofs place the root joint directly.
pub fn forward_kinematics(
    skeleton: &Skeleton,
    motion: &BoneRotationSequence,
) -> Result<JointCoordinateSequence> {
    let expected = BoneRotationSequence::layout_for(skeleton);
    if motion.layout() != expected.as_slice() {
        // Find the first point of disagreement for the error message.
        for (have, want) in motion.layout().iter().zip(expected.iter()) {
            if have.bone != want.bone {
                return Err(Error::UnknownBone(have.bone.clone()));
            }
            if have.dof != want.dof {
                return Err(Error::DofMismatch {
                    bone: have.bone.clone(),
                    expected: skeleton
                        .bones()
                        .iter()
                        .find(|b| b.name == want.bone)
                        .map(|b| b.dofs.len())
                        .unwrap_or(0),
                    actual: motion
                        .layout()
                        .iter()
                        .filter(|c| c.bone == have.bone)
                        .count(),
                });
            }
        }
        return Err(Error::ShapeMismatch {
            expected: format!("{} channels", expected.len()),
            actual: format!("{} channels", motion.layout().len()),
            context: "forward kinematics",
        });
    }

    // Channel offsets per bone, in canonical order.
    let mut offsets = Vec::with_capacity(skeleton.bones().len());
    let mut off = 0usize;
    for bone in skeleton.bones() {
        offsets.push(off);
        off += bone.dofs.len();
    }

    // Precompute each bone's axis rotation and its inverse.
    let axes: Vec<(Matrix3<f64>, Matrix3<f64>)> = skeleton
        .bones()
        .iter()
        .map(|b| {
            let steps: Vec<(RotAxis, f64)> = b
                .axis_order
                .iter()
                .zip(b.axis.iter())
                .map(|(&ax, &angle)| (ax, angle))
                .collect();
            let c = euler_rotation(&steps);
            let c_inv = c.transpose();
            (c, c_inv)
        })
        .collect();

    let frames = motion.frames();
    let joints = skeleton.joint_count();
    let mut positions = DMatrix::zeros(frames, 3 * joints);
    let mut global_rot: Vec<Matrix3<f64>> = alloc::vec![Matrix3::identity(); joints];
    let mut global_pos: Vec<Vector3<f64>> = alloc::vec![Vector3::zeros(); joints];

    for t in 0..frames {
        for (b, bone) in skeleton.bones().iter().enumerate() {
            let values = motion
                .channels()
                .view((t, offsets[b]), (1, bone.dofs.len()));
            let mut rot_steps: Vec<(RotAxis, f64)> = Vec::new();
            let mut translation = Vector3::zeros();
            for (k, dof) in bone.dofs.iter().enumerate() {
                let v = values[(0, k)];
                if dof.is_rotation() {
                    rot_steps.push((dof.axis(), v));
                } else {
                    translation[dof.axis().index()] = v;
                }
            }
            let local_motion = euler_rotation(&rot_steps);
            let (c, c_inv) = &axes[b];
            let local = c * local_motion * c_inv;
            match skeleton.parent_index(b) {
                None => {
                    global_rot[b] = local;
                    global_pos[b] = translation;
                }
                Some(p) => {
                    global_rot[b] = global_rot[p] * local;
                    let dir = Vector3::new(bone.direction[0], bone.direction[1], bone.direction[2]);
                    global_pos[b] = global_pos[p] + global_rot[b] * (dir * bone.length);
                }
            }
            for k in 0..3 {
                positions[(t, 3 * b + k)] = global_pos[b][k];
            }
        }
    }

    JointCoordinateSequence::new(positions, skeleton.joint_names(), motion.frame_rate())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::skeleton::{AngleUnit, Bone};
    use alloc::string::ToString;
    use alloc::vec;

    fn bone(name: &str, parent: Option<&str>, direction: [f64; 3], length: f64, dofs: &[Dof]) -> Bone {
        Bone {
            name: name.into(),
            parent: parent.map(|p| p.into()),
            direction,
            length,
            axis: [0.0; 3],
            axis_order: [RotAxis::X, RotAxis::Y, RotAxis::Z],
            dofs: dofs.to_vec(),
        }
    }

    fn root_bone() -> Bone {
        bone(
            "root",
            None,
            [0.0; 3],
            0.0,
            &[Dof::Tx, Dof::Ty, Dof::Tz, Dof::Rx, Dof::Ry, Dof::Rz],
        )
    }

    #[test]
    fn single_bone_rest_pose() {
        let sk = Skeleton::new(
            vec![root_bone(), bone("spine", Some("root"), [0.0, 1.0, 0.0], 2.0, &[Dof::Rx])],
            AngleUnit::Degrees,
        )
        .unwrap();
        let channels = DMatrix::zeros(3, 7);
        let motion = BoneRotationSequence::new(&sk, channels, 120.0).unwrap();
        let jc = forward_kinematics(&sk, &motion).unwrap();
        for t in 0..3 {
            assert_eq!(jc.position(t, 0), Vector3::zeros());
            let p = jc.position(t, 1);
            assert!((p - Vector3::new(0.0, 2.0, 0.0)).norm() < 1e-12);
        }
    }

    /// Hand oracle: composes the rotation matrices explicitly, outside the
    /// FK accumulation path.
    #[test]
    fn two_bone_chain_matches_hand_rotation() {
        let sk = Skeleton::new(
            vec![
                root_bone(),
                bone("upper", Some("root"), [0.0, 1.0, 0.0], 1.0, &[Dof::Rz]),
                bone("lower", Some("upper"), [0.0, 1.0, 0.0], 1.0, &[Dof::Rz]),
            ],
            AngleUnit::Degrees,
        )
        .unwrap();
        let quarter = core::f64::consts::FRAC_PI_2;
        let mut channels = DMatrix::zeros(1, 8);
        channels[(0, 7)] = quarter; // lower bone rz
        let motion = BoneRotationSequence::new(&sk, channels, 120.0).unwrap();
        let jc = forward_kinematics(&sk, &motion).unwrap();

        // Hand composition: end = [0,1,0] + Rz(pi/2) * [0,1,0].
        let (s, c) = (libm::sin(quarter), libm::cos(quarter));
        let hand = [0.0 + (c * 0.0 - s * 1.0), 1.0 + (s * 0.0 + c * 1.0), 0.0];
        let p = jc.position(0, 2);
        assert!((p.x - hand[0]).abs() < 1e-12, "{} vs {}", p.x, hand[0]);
        assert!((p.y - hand[1]).abs() < 1e-12);
        assert!((p.z - hand[2]).abs() < 1e-12);
        // Right-handed convention: the end lands at (-1, 1, 0).
        assert!((p - Vector3::new(-1.0, 1.0, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn normalize_root_zeroes_only_root_channels() {
        let sk = Skeleton::new(
            vec![root_bone(), bone("spine", Some("root"), [0.0, 1.0, 0.0], 1.0, &[Dof::Rx])],
            AngleUnit::Degrees,
        )
        .unwrap();
        let channels = DMatrix::from_row_slice(1, 7, &[3.1, 0.2, -5.0, 10.0, 0.0, 4.0, 0.7]);
        let motion = BoneRotationSequence::new(&sk, channels, 120.0).unwrap();
        let normalized = normalize_root(&motion);
        for c in 0..6 {
            assert_eq!(normalized.channels()[(0, c)], 0.0);
        }
        assert_eq!(normalized.channels()[(0, 6)], 0.7);

        // Idempotent.
        let again = normalize_root(&normalized);
        assert_eq!(again, normalized);
    }

    #[test]
    fn root_stays_at_origin_after_normalization() {
        let sk = Skeleton::new(
            vec![root_bone(), bone("spine", Some("root"), [0.0, 1.0, 0.0], 1.0, &[Dof::Rx, Dof::Ry])],
            AngleUnit::Degrees,
        )
        .unwrap();
        let channels = DMatrix::from_row_slice(
            2,
            8,
            &[
                1.0, 2.0, 3.0, 0.4, 0.5, 0.6, 0.7, 0.8, //
                -1.0, 0.5, 2.0, 0.1, 0.2, 0.3, 0.4, 0.5,
            ],
        );
        let motion = normalize_root(&BoneRotationSequence::new(&sk, channels, 120.0).unwrap());
        let jc = forward_kinematics(&sk, &motion).unwrap();
        for t in 0..2 {
            assert_eq!(jc.position(t, 0), Vector3::zeros());
        }
    }

    /// Recomputes FK by explicitly pre-multiplying the parent chain per
    /// bone; a different association order over the same rotations.
    #[test]
    fn rotation_composition_is_associative() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        let mut b1 = bone("a", Some("root"), [0.0, 1.0, 0.0], 1.3, &[Dof::Rx, Dof::Ry, Dof::Rz]);
        b1.axis = [0.3, -0.2, 0.9];
        let mut b2 = bone("b", Some("a"), [1.0, 0.0, 0.0], 0.8, &[Dof::Rz, Dof::Rx]);
        b2.axis = [-0.5, 0.1, 0.25];
        let mut b3 = bone("c", Some("b"), [0.0, 0.0, 1.0], 2.1, &[Dof::Ry]);
        b3.axis = [0.05, 0.4, -0.3];
        let sk = Skeleton::new(vec![root_bone(), b1, b2, b3], AngleUnit::Radians).unwrap();

        let frames = 4;
        let mut channels = DMatrix::zeros(frames, 12);
        for t in 0..frames {
            for c in 6..12 {
                channels[(t, c)] = rng.gen_range(-1.5..1.5);
            }
        }
        let motion = BoneRotationSequence::new(&sk, channels, 120.0).unwrap();
        let jc = forward_kinematics(&sk, &motion).unwrap();

        // Oracle: for each bone, walk the chain from the root and fold the
        // local transforms left-to-right.
        let mut offsets = vec![0usize; sk.bones().len()];
        let mut off = 0;
        for (i, b) in sk.bones().iter().enumerate() {
            offsets[i] = off;
            off += b.dofs.len();
        }
        for t in 0..frames {
            for target in 0..sk.bones().len() {
                // Collect chain root..=target.
                let mut chain = vec![target];
                let mut cur = target;
                while let Some(p) = sk.parent_index(cur) {
                    chain.push(p);
                    cur = p;
                }
                chain.reverse();
                let mut pos = Vector3::zeros();
                let mut rot = Matrix3::identity();
                for &b in &chain {
                    let bn = &sk.bones()[b];
                    let steps: Vec<(RotAxis, f64)> = bn
                        .axis_order
                        .iter()
                        .zip(bn.axis.iter())
                        .map(|(&ax, &a)| (ax, a))
                        .collect();
                    let c = euler_rotation(&steps);
                    let mut rot_steps = Vec::new();
                    for (k, dof) in bn.dofs.iter().enumerate() {
                        let v = motion.channels()[(t, offsets[b] + k)];
                        if dof.is_rotation() {
                            rot_steps.push((dof.axis(), v));
                        }
                    }
                    let local = c * euler_rotation(&rot_steps) * c.transpose();
                    rot *= local;
                    let dir = Vector3::new(bn.direction[0], bn.direction[1], bn.direction[2]);
                    pos += rot * (dir * bn.length);
                }
                let got = jc.position(t, target);
                assert!((got - pos).norm() < 1e-9, "bone {target} frame {t}");
            }
        }
    }

    #[test]
    fn fk_rejects_foreign_layout() {
        let sk_a = Skeleton::new(
            vec![root_bone(), bone("spine", Some("root"), [0.0, 1.0, 0.0], 1.0, &[Dof::Rx])],
            AngleUnit::Degrees,
        )
        .unwrap();
        let sk_b = Skeleton::new(
            vec![root_bone(), bone("tail", Some("root"), [0.0, 1.0, 0.0], 1.0, &[Dof::Rx])],
            AngleUnit::Degrees,
        )
        .unwrap();
        let motion = BoneRotationSequence::new(&sk_a, DMatrix::zeros(1, 7), 120.0).unwrap();
        let err = forward_kinematics(&sk_b, &motion).unwrap_err();
        assert_eq!(err, Error::UnknownBone("spine".to_string()));
    }
}
