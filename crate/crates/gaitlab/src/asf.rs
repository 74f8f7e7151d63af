//! Parser for the ASF skeleton format as distributed with the CMU MoCap
//! database, plus a structural writer for round-trip checks.

use gaitlab_core::{AngleUnit, Bone, Dof, RotAxis, Skeleton};

use crate::error::ParseError;

struct Lines<'a> {
    lines: Vec<(usize, &'a str)>,
    pos: usize,
}

impl<'a> Lines<'a> {
    fn new(text: &'a str) -> Self {
        let lines = text
            .lines()
            .enumerate()
            .map(|(i, raw)| {
                let without_comment = match raw.find('#') {
                    Some(k) => &raw[..k],
                    None => raw,
                };
                (i + 1, without_comment.trim())
            })
            .filter(|(_, l)| !l.is_empty())
            .collect();
        Lines { lines, pos: 0 }
    }

    fn peek(&self) -> Option<(usize, &'a str)> {
        self.lines.get(self.pos).copied()
    }

    fn next(&mut self) -> Option<(usize, &'a str)> {
        let item = self.peek();
        if item.is_some() {
            self.pos += 1;
        }
        item
    }
}

fn parse_axis_order(token: &str, line: usize) -> Result<[RotAxis; 3], ParseError> {
    let mut out = [RotAxis::X; 3];
    if token.len() != 3 {
        return Err(ParseError::syntax(line, format!("bad axis order `{token}`")));
    }
    for (i, ch) in token.chars().enumerate() {
        out[i] = match ch.to_ascii_uppercase() {
            'X' => RotAxis::X,
            'Y' => RotAxis::Y,
            'Z' => RotAxis::Z,
            other => {
                return Err(ParseError::syntax(line, format!("bad axis letter `{other}`")))
            }
        };
    }
    Ok(out)
}

fn parse_floats(tokens: &[&str], line: usize) -> Result<Vec<f64>, ParseError> {
    tokens
        .iter()
        .map(|t| {
            t.parse::<f64>()
                .map_err(|_| ParseError::syntax(line, format!("expected a number, got `{t}`")))
        })
        .collect()
}

struct RawBone {
    name: String,
    direction: [f64; 3],
    length: f64,
    axis: [f64; 3],
    axis_order: [RotAxis; 3],
    dofs: Vec<Dof>,
    line: usize,
}

impl RawBone {
    fn empty() -> Self {
        RawBone {
            name: String::new(),
            direction: [0.0; 3],
            length: 0.0,
            axis: [0.0; 3],
            axis_order: [RotAxis::X, RotAxis::Y, RotAxis::Z],
            dofs: Vec::new(),
            line: 0,
        }
    }
}

/// Parses ASF text into a skeleton. Requires the `:root`, `:bonedata` and
/// `:hierarchy` sections; `:units` fixes the angle unit (degrees when
/// absent). All angles are converted to radians.
pub fn parse_asf(text: &str) -> Result<Skeleton, ParseError> {
    let mut lines = Lines::new(text);
    let mut angle_unit = AngleUnit::Degrees;
    let mut root: Option<Bone> = None;
    let mut raw_bones: Vec<RawBone> = Vec::new();
    let mut parents: Vec<(String, String, usize)> = Vec::new(); // (child, parent, line)
    let mut seen_root = false;
    let mut seen_bonedata = false;
    let mut seen_hierarchy = false;

    while let Some((line, content)) = lines.next() {
        if !content.starts_with(':') {
            continue;
        }
        let section = content.split_whitespace().next().unwrap_or("");
        match section {
            ":units" => {
                while let Some((uline, ucontent)) = lines.peek() {
                    if ucontent.starts_with(':') {
                        break;
                    }
                    lines.next();
                    let mut tokens = ucontent.split_whitespace();
                    if tokens.next() == Some("angle") {
                        angle_unit = match tokens.next() {
                            Some("deg") => AngleUnit::Degrees,
                            Some("rad") => AngleUnit::Radians,
                            other => {
                                return Err(ParseError::syntax(
                                    uline,
                                    format!("unknown angle unit {other:?}"),
                                ))
                            }
                        };
                    }
                }
            }
            ":root" => {
                seen_root = true;
                let mut order: Vec<Dof> = Vec::new();
                let mut axis_order = [RotAxis::X, RotAxis::Y, RotAxis::Z];
                let mut orientation = [0.0f64; 3];
                while let Some((rline, rcontent)) = lines.peek() {
                    if rcontent.starts_with(':') {
                        break;
                    }
                    lines.next();
                    let tokens: Vec<&str> = rcontent.split_whitespace().collect();
                    match tokens.first().copied() {
                        Some("order") => {
                            order = tokens[1..]
                                .iter()
                                .map(|t| {
                                    Dof::parse(t).ok_or_else(|| {
                                        ParseError::syntax(rline, format!("unknown dof `{t}`"))
                                    })
                                })
                                .collect::<Result<_, _>>()?;
                        }
                        Some("axis") => {
                            axis_order = parse_axis_order(tokens.get(1).copied().unwrap_or(""), rline)?;
                        }
                        Some("orientation") => {
                            let v = parse_floats(&tokens[1..], rline)?;
                            if v.len() != 3 {
                                return Err(ParseError::syntax(rline, "orientation needs 3 values"));
                            }
                            orientation = [v[0], v[1], v[2]];
                        }
                        Some("position") | None => {}
                        Some(_) => {}
                    }
                }
                root = Some(Bone {
                    name: "root".to_string(),
                    parent: None,
                    direction: [0.0; 3],
                    length: 0.0,
                    axis: orientation,
                    axis_order,
                    dofs: order,
                });
            }
            ":bonedata" => {
                seen_bonedata = true;
                while let Some((bline, bcontent)) = lines.peek() {
                    if bcontent.starts_with(':') {
                        break;
                    }
                    lines.next();
                    if bcontent != "begin" {
                        return Err(ParseError::syntax(
                            bline,
                            format!("expected `begin`, got `{bcontent}`"),
                        ));
                    }
                    raw_bones.push(parse_bone_block(&mut lines, bline)?);
                }
            }
            ":hierarchy" => {
                seen_hierarchy = true;
                let Some((hline, begin)) = lines.next() else {
                    return Err(ParseError::syntax(line, "unterminated :hierarchy"));
                };
                if begin != "begin" {
                    return Err(ParseError::syntax(hline, "expected `begin`"));
                }
                loop {
                    let Some((pline, pcontent)) = lines.next() else {
                        return Err(ParseError::syntax(hline, "unterminated hierarchy block"));
                    };
                    if pcontent == "end" {
                        break;
                    }
                    let mut tokens = pcontent.split_whitespace();
                    let parent = tokens.next().unwrap_or("");
                    for child in tokens {
                        parents.push((child.to_string(), parent.to_string(), pline));
                    }
                }
            }
            _ => {}
        }
    }

    if !seen_root {
        return Err(ParseError::syntax(0, "missing :root section"));
    }
    if !seen_bonedata {
        return Err(ParseError::syntax(0, "missing :bonedata section"));
    }
    if !seen_hierarchy {
        return Err(ParseError::syntax(0, "missing :hierarchy section"));
    }

    let to_radians = |angles: [f64; 3]| match angle_unit {
        AngleUnit::Degrees => angles.map(f64::to_radians),
        AngleUnit::Radians => angles,
    };

    let mut root = root.expect("root parsed");
    root.axis = to_radians(root.axis);
    let mut bones = vec![root];
    for raw in raw_bones {
        let parent = parents
            .iter()
            .find(|(child, _, _)| *child == raw.name)
            .map(|(_, parent, _)| parent.clone());
        let parent = match parent {
            Some(p) => p,
            None => {
                return Err(ParseError::syntax(
                    raw.line,
                    format!("bone `{}` does not appear in the hierarchy", raw.name),
                ))
            }
        };
        bones.push(Bone {
            name: raw.name,
            parent: Some(parent),
            direction: raw.direction,
            length: raw.length,
            axis: to_radians(raw.axis),
            axis_order: raw.axis_order,
            dofs: raw.dofs,
        });
    }
    // Hierarchy entries must reference known bones.
    for (child, parent, pline) in &parents {
        if !bones.iter().any(|b| b.name == *child) {
            return Err(ParseError::syntax(
                *pline,
                format!("hierarchy references unknown bone `{child}`"),
            ));
        }
        if parent != "root" && !bones.iter().any(|b| b.name == *parent) {
            return Err(ParseError::syntax(
                *pline,
                format!("hierarchy references unknown parent `{parent}` of `{child}`"),
            ));
        }
    }
    Ok(Skeleton::new(bones, angle_unit)?)
}

fn parse_bone_block(lines: &mut Lines, begin_line: usize) -> Result<RawBone, ParseError> {
    let mut bone = RawBone::empty();
    loop {
        let Some((line, content)) = lines.next() else {
            return Err(ParseError::syntax(begin_line, "unterminated bone block"));
        };
        if content == "end" {
            break;
        }
        let tokens: Vec<&str> = content.split_whitespace().collect();
        match tokens.first().copied() {
            Some("id") => {}
            Some("name") => {
                bone.name = tokens
                    .get(1)
                    .ok_or_else(|| ParseError::syntax(line, "name needs a value"))?
                    .to_string();
                bone.line = line;
            }
            Some("direction") => {
                let v = parse_floats(&tokens[1..], line)?;
                if v.len() != 3 {
                    return Err(ParseError::syntax(line, "direction needs 3 values"));
                }
                bone.direction = [v[0], v[1], v[2]];
            }
            Some("length") => {
                bone.length = parse_floats(&tokens[1..], line)?
                    .first()
                    .copied()
                    .ok_or_else(|| ParseError::syntax(line, "length needs a value"))?;
            }
            Some("axis") => {
                if tokens.len() < 5 {
                    return Err(ParseError::syntax(line, "axis needs 3 angles and an order"));
                }
                let v = parse_floats(&tokens[1..4], line)?;
                bone.axis = [v[0], v[1], v[2]];
                bone.axis_order = parse_axis_order(tokens[4], line)?;
            }
            Some("dof") => {
                bone.dofs = tokens[1..]
                    .iter()
                    .map(|t| {
                        Dof::parse(t)
                            .ok_or_else(|| ParseError::syntax(line, format!("unknown dof `{t}`")))
                    })
                    .collect::<Result<_, _>>()?;
            }
            Some("limits") => {
                // Limits can continue over following lines, one
                // parenthesized pair per line.
                while let Some((_, next)) = lines.peek() {
                    if next.starts_with('(') {
                        lines.next();
                    } else {
                        break;
                    }
                }
            }
            Some(other) => {
                return Err(ParseError::syntax(
                    line,
                    format!("unknown bone field `{other}`"),
                ));
            }
            None => {}
        }
    }
    if bone.name.is_empty() {
        return Err(ParseError::syntax(begin_line, "bone block without a name"));
    }
    Ok(bone)
}

/// Writes a skeleton back to ASF text. Meant for structural round-trip
/// checks, not for byte-level fidelity with CMU files.
pub fn write_asf(skeleton: &Skeleton) -> String {
    use std::fmt::Write;
    let unit = skeleton.angle_unit();
    let from_radians = |v: f64| match unit {
        AngleUnit::Degrees => v.to_degrees(),
        AngleUnit::Radians => v,
    };
    let order_str = |order: &[RotAxis; 3]| {
        order
            .iter()
            .map(|a| match a {
                RotAxis::X => 'X',
                RotAxis::Y => 'Y',
                RotAxis::Z => 'Z',
            })
            .collect::<String>()
    };

    let mut out = String::new();
    out.push_str(":version 1.10\n:name gaitlab\n:units\n");
    writeln!(
        out,
        "  angle {}",
        match unit {
            AngleUnit::Degrees => "deg",
            AngleUnit::Radians => "rad",
        }
    )
    .unwrap();
    let root = skeleton.root();
    out.push_str(":root\n");
    write!(out, "  order").unwrap();
    for dof in &root.dofs {
        write!(out, " {}", dof.as_str().to_uppercase()).unwrap();
    }
    out.push('\n');
    writeln!(out, "  axis {}", order_str(&root.axis_order)).unwrap();
    out.push_str("  position 0 0 0\n");
    writeln!(
        out,
        "  orientation {} {} {}",
        from_radians(root.axis[0]),
        from_radians(root.axis[1]),
        from_radians(root.axis[2])
    )
    .unwrap();
    out.push_str(":bonedata\n");
    for (id, bone) in skeleton.bones().iter().enumerate().skip(1) {
        out.push_str("  begin\n");
        writeln!(out, "    id {id}").unwrap();
        writeln!(out, "    name {}", bone.name).unwrap();
        writeln!(
            out,
            "    direction {} {} {}",
            bone.direction[0], bone.direction[1], bone.direction[2]
        )
        .unwrap();
        writeln!(out, "    length {}", bone.length).unwrap();
        writeln!(
            out,
            "    axis {} {} {} {}",
            from_radians(bone.axis[0]),
            from_radians(bone.axis[1]),
            from_radians(bone.axis[2]),
            order_str(&bone.axis_order)
        )
        .unwrap();
        if !bone.dofs.is_empty() {
            write!(out, "    dof").unwrap();
            for dof in &bone.dofs {
                write!(out, " {}", dof.as_str()).unwrap();
            }
            out.push('\n');
        }
        out.push_str("  end\n");
    }
    out.push_str(":hierarchy\n  begin\n");
    for (i, bone) in skeleton.bones().iter().enumerate() {
        let children: Vec<&str> = skeleton
            .bones()
            .iter()
            .enumerate()
            .filter(|(j, b)| {
                *j != i && skeleton.parent_index(*j) == Some(i) && b.parent.is_some()
            })
            .map(|(_, b)| b.name.as_str())
            .collect();
        if !children.is_empty() {
            write!(out, "    {}", bone.name).unwrap();
            for child in children {
                write!(out, " {child}").unwrap();
            }
            out.push('\n');
        }
    }
    out.push_str("  end\n");
    out
}
