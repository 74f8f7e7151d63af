//! Parser for AMC motion files: per-frame blocks of bone dof values.

use std::collections::HashMap;

use gaitlab_core::{AngleUnit, BoneRotationSequence, Skeleton};
use nalgebra::DMatrix;

use crate::error::ParseError;

/// Parses AMC text against a skeleton. Frame blocks must be numbered
/// contiguously from 1; every bone with declared dofs must supply exactly
/// its dof count in every frame. Rotational values are converted to
/// radians according to the file's `:DEGREES`/`:RADIANS` header, falling
/// back to the skeleton's unit.
pub fn parse_amc(
    text: &str,
    skeleton: &Skeleton,
    frame_rate: f64,
) -> Result<BoneRotationSequence, ParseError> {
    struct Frame {
        number: usize,
        line: usize,
        values: HashMap<String, Vec<f64>>,
    }

    let mut unit = skeleton.angle_unit();
    let mut frames: Vec<Frame> = Vec::new();
    let mut current: Option<Frame> = None;

    for (i, raw) in text.lines().enumerate() {
        let line_no = i + 1;
        let line = match raw.find('#') {
            Some(k) => &raw[..k],
            None => raw,
        }
        .trim();
        if line.is_empty() {
            continue;
        }
        if line.starts_with(':') {
            match line.to_ascii_uppercase().as_str() {
                ":DEGREES" => unit = AngleUnit::Degrees,
                ":RADIANS" => unit = AngleUnit::Radians,
                _ => {}
            }
            continue;
        }
        if let Ok(frame_no) = line.parse::<usize>() {
            if let Some(done) = current.take() {
                frames.push(done);
            }
            let expected = frames.last().map(|f| f.number + 1).unwrap_or(1);
            if frame_no != expected {
                return Err(ParseError::syntax(
                    line_no,
                    format!("missing frame {expected}"),
                ));
            }
            current = Some(Frame {
                number: frame_no,
                line: line_no,
                values: HashMap::new(),
            });
            continue;
        }
        let Some(frame) = current.as_mut() else {
            return Err(ParseError::syntax(
                line_no,
                "bone values before the first frame number",
            ));
        };
        let mut tokens = line.split_whitespace();
        let bone = tokens.next().unwrap_or("").to_string();
        let parsed: Result<Vec<f64>, _> = tokens
            .map(|t| {
                t.parse::<f64>()
                    .map_err(|_| ParseError::syntax(line_no, format!("expected a number, got `{t}`")))
            })
            .collect();
        frame.values.insert(bone, parsed?);
    }
    if let Some(done) = current.take() {
        frames.push(done);
    }
    if frames.is_empty() {
        return Err(ParseError::syntax(0, "AMC file contains no frames"));
    }

    let layout = BoneRotationSequence::layout_for(skeleton);
    let mut channels = DMatrix::zeros(frames.len(), layout.len());
    for (row, frame) in frames.iter().enumerate() {
        // Reject bone names the skeleton does not declare.
        for bone in frame.values.keys() {
            if skeleton.bone_index(bone).is_err() {
                return Err(ParseError::syntax(
                    frame.line,
                    format!("frame {}: unknown bone `{bone}`", frame.number),
                ));
            }
        }
        let mut col = 0usize;
        for bone in skeleton.bones() {
            if bone.dofs.is_empty() {
                continue;
            }
            let Some(supplied) = frame.values.get(&bone.name) else {
                return Err(ParseError::syntax(
                    frame.line,
                    format!(
                        "frame {}: missing values for bone `{}`",
                        frame.number, bone.name
                    ),
                ));
            };
            if supplied.len() != bone.dofs.len() {
                return Err(ParseError::syntax(
                    frame.line,
                    format!(
                        "frame {}: bone `{}` expects {} values, got {}",
                        frame.number,
                        bone.name,
                        bone.dofs.len(),
                        supplied.len()
                    ),
                ));
            }
            for (k, dof) in bone.dofs.iter().enumerate() {
                let mut v = supplied[k];
                if dof.is_rotation() && unit == AngleUnit::Degrees {
                    v = v.to_radians();
                }
                channels[(row, col + k)] = v;
            }
            col += bone.dofs.len();
        }
    }
    Ok(BoneRotationSequence::new(skeleton, channels, frame_rate)?)
}
