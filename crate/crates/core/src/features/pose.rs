//! Upper-body pose frames and their similarity-invariant quad encoding.
//!
//! A quad maps four joints into a local coordinate system: the first joint
//! becomes the origin and the second lands on `[1,1,1]`. The residual degree
//! of freedom (rotation about that axis) is pinned by the third joint (or the
//! fourth when the third sits on the axis), which makes the 6-vector fully
//! invariant to translation, rotation, and uniform scaling of the input.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gwr::MaskedVector;

/// Upper-body joints in canonical storage order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Joint {
    Head,
    Neck,
    TorsoCenter,
    LeftShoulder,
    RightShoulder,
    LeftElbow,
    RightElbow,
    LeftHand,
    RightHand,
}

pub const JOINTS: [Joint; 9] = [
    Joint::Head,
    Joint::Neck,
    Joint::TorsoCenter,
    Joint::LeftShoulder,
    Joint::RightShoulder,
    Joint::LeftElbow,
    Joint::RightElbow,
    Joint::LeftHand,
    Joint::RightHand,
];

impl Joint {
    pub fn index(self) -> usize {
        self as usize
    }

    /// The joint taking this one's role in a left/right mirrored body.
    pub fn mirrored(self) -> Joint {
        match self {
            Joint::LeftShoulder => Joint::RightShoulder,
            Joint::RightShoulder => Joint::LeftShoulder,
            Joint::LeftElbow => Joint::RightElbow,
            Joint::RightElbow => Joint::LeftElbow,
            Joint::LeftHand => Joint::RightHand,
            Joint::RightHand => Joint::LeftHand,
            other => other,
        }
    }
}

/// One tracked skeleton frame: 3D joint positions plus validity flags.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PoseFrame {
    /// Timestamp index within the sequence.
    pub t: usize,
    /// Positions in meters, canonical joint order.
    pub positions: [[f64; 3]; 9],
    pub valid: [bool; 9],
}

impl PoseFrame {
    /// Position of a joint, or `None` when the tracker lost it.
    pub fn position(&self, joint: Joint) -> Option<[f64; 3]> {
        let i = joint.index();
        self.valid[i].then_some(self.positions[i])
    }

    /// Mirrors the frame: x negated, left/right joint roles swapped.
    pub fn mirrored(&self) -> PoseFrame {
        let mut positions = [[0.0; 3]; 9];
        let mut valid = [false; 9];
        for joint in JOINTS {
            let src = joint.mirrored().index();
            let p = self.positions[src];
            positions[joint.index()] = [-p[0], p[1], p[2]];
            valid[joint.index()] = self.valid[src];
        }
        PoseFrame {
            t: self.t,
            positions,
            valid,
        }
    }
}

/// Similarity-invariant encoding of a joint quadruple.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadFeature {
    pub values: [f64; 6],
}

const SQRT3: f64 = 1.732_050_807_568_877_2;
// Target frame: axis [1,1,1]/sqrt(3), reference direction from the x axis.
const F1: [f64; 3] = [1.0 / SQRT3, 1.0 / SQRT3, 1.0 / SQRT3];
const F2: [f64; 3] = [
    0.816_496_580_927_726,
    -0.408_248_290_463_863,
    -0.408_248_290_463_863,
];
const F3: [f64; 3] = [0.0, std::f64::consts::FRAC_1_SQRT_2, -std::f64::consts::FRAC_1_SQRT_2];

fn sub(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

fn scale(a: [f64; 3], s: f64) -> [f64; 3] {
    [a[0] * s, a[1] * s, a[2] * s]
}

fn dot(a: [f64; 3], b: [f64; 3]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

fn cross(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

fn norm(a: [f64; 3]) -> f64 {
    dot(a, a).sqrt()
}

/// Component of `p` perpendicular to the unit vector `axis`.
fn perp(p: [f64; 3], axis: [f64; 3]) -> [f64; 3] {
    sub(p, scale(axis, dot(p, axis)))
}

fn fallback_reference(axis: [f64; 3]) -> [f64; 3] {
    let base = if axis[0].abs() < 0.9 {
        [1.0, 0.0, 0.0]
    } else {
        [0.0, 1.0, 0.0]
    };
    let a = perp(base, axis);
    scale(a, 1.0 / norm(a))
}

/// Encodes four joints as a 6-vector in the local frame anchored at `j1`
/// with `j2` mapped onto `[1,1,1]`.
///
/// Errors when `j1` and `j2` coincide.
pub fn skeletal_quad(
    j1: [f64; 3],
    j2: [f64; 3],
    j3: [f64; 3],
    j4: [f64; 3],
) -> Result<QuadFeature> {
    let axis = sub(j2, j1);
    let len = norm(axis);
    if len < 1e-12 {
        return Err(Error::DegenerateQuad);
    }
    let e1 = scale(axis, 1.0 / len);
    let s = SQRT3 / len;
    let p3 = scale(sub(j3, j1), s);
    let p4 = scale(sub(j4, j1), s);

    // Azimuth reference: the off-axis part of j3, falling back to j4 and
    // finally to a fixed direction when both lie on the axis.
    let a3 = perp(p3, e1);
    let a4 = perp(p4, e1);
    let e2 = if norm(a3) > 1e-12 {
        scale(a3, 1.0 / norm(a3))
    } else if norm(a4) > 1e-12 {
        scale(a4, 1.0 / norm(a4))
    } else {
        fallback_reference(e1)
    };
    let e3 = cross(e1, e2);

    let express = |p: [f64; 3]| -> [f64; 3] {
        let c = [dot(p, e1), dot(p, e2), dot(p, e3)];
        [
            c[0] * F1[0] + c[1] * F2[0] + c[2] * F3[0],
            c[0] * F1[1] + c[1] * F2[1] + c[2] * F3[1],
            c[0] * F1[2] + c[1] * F2[2] + c[2] * F3[2],
        ]
    };
    let q3 = express(p3);
    let q4 = express(p4);
    Ok(QuadFeature {
        values: [q3[0], q3[1], q3[2], q4[0], q4[1], q4[2]],
    })
}

pub const POSE_FEATURE_DIM: usize = 12;

/// Encodes a frame as two quads: `[torso, neck, left hand, left elbow]` in
/// components 0-5 and `[torso, neck, right hand, right elbow]` in 6-11.
///
/// Components of a quad that cannot be built (missing hand or elbow) are
/// masked rather than zero-filled; a missing neck or torso masks the whole
/// feature so the frame can be skipped downstream.
pub fn pose_feature(frame: &PoseFrame) -> MaskedVector {
    let mut values = vec![0.0; POSE_FEATURE_DIM];
    let mut mask = vec![false; POSE_FEATURE_DIM];
    let anchors = (frame.position(Joint::TorsoCenter), frame.position(Joint::Neck));
    if let (Some(torso), Some(neck)) = anchors {
        let sides = [
            (0, Joint::LeftHand, Joint::LeftElbow),
            (6, Joint::RightHand, Joint::RightElbow),
        ];
        for (offset, hand, elbow) in sides {
            if let (Some(h), Some(e)) = (frame.position(hand), frame.position(elbow)) {
                if let Ok(q) = skeletal_quad(torso, neck, h, e) {
                    values[offset..offset + 6].copy_from_slice(&q.values);
                    mask[offset..offset + 6].fill(true);
                }
            }
        }
    }
    MaskedVector::with_mask(values, mask)
}
