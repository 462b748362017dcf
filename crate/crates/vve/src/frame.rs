use std::f64::consts::{PI, TAU};

/// Wrap to `(-pi, pi]`.
pub fn wrap_angle(a: f64) -> f64 {
    let w = a - TAU * ((a + PI) / TAU).floor();
    if w <= -PI {
        w + TAU
    } else {
        w
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Pose {
    pub x: f64,
    pub y: f64,
    pub psi: f64,
}

/// Rigid map from a source frame to a target frame: a point at
/// `source_origin` lands on `target_origin` and headings turn by `rotation`.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct FrameAnchor {
    pub source_origin: [f64; 2],
    pub rotation: f64,
    pub target_origin: [f64; 2],
}

impl FrameAnchor {
    pub fn new(source_origin: [f64; 2], rotation: f64, target_origin: [f64; 2]) -> Self {
        Self { source_origin, rotation: wrap_angle(rotation), target_origin }
    }

    pub fn transform(&self, p: Pose) -> Pose {
        let (s, c) = self.rotation.sin_cos();
        let (dx, dy) = (p.x - self.source_origin[0], p.y - self.source_origin[1]);
        Pose {
            x: self.target_origin[0] + c * dx - s * dy,
            y: self.target_origin[1] + s * dx + c * dy,
            psi: wrap_angle(p.psi + self.rotation),
        }
    }

    pub fn inverse(&self) -> Self {
        Self { source_origin: self.target_origin, rotation: wrap_angle(-self.rotation), target_origin: self.source_origin }
    }
}
