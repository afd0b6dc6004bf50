//! The one-parameter family of segment-supported permutons.
//!
//! For a parameter `a` in `[0,1]` the support consists of the slope `±1`
//! segments of the unit square cut out by `x + y` in `{a/2, 1-a/2, 1+a/2,
//! 2-a/2}` and `y - x` in `{-a/2, a/2, 1-a/2, a/2-1}`. Mass is distributed
//! uniformly along the support: every segment carries mass proportional to
//! its length. Away from finitely many breakpoints each vertical line meets
//! the support in exactly four points, which is what makes the marginals
//! uniform.

use crate::error::{Error, Result};

/// One maximal segment of the support: `y = slope * x + offset` for
/// `x` in `[x0, x1]`, carrying `mass` of the total measure.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Segment {
    pub slope: f64,
    pub offset: f64,
    pub x0: f64,
    pub x1: f64,
    pub mass: f64,
}

#[derive(Clone, Debug)]
pub struct SegmentPermuton {
    alpha: f64,
    segments: Vec<Segment>,
    /// Cumulative mass, aligned with `segments`.
    cumulative: Vec<f64>,
}

impl SegmentPermuton {
    /// Builds the permuton for the given parameter.
    ///
    /// At `a = 0` and `a = 1` some of the eight lines coincide; coincident
    /// segments are merged and their masses added, and zero-length pieces
    /// (corner points) are dropped.
    pub fn new(alpha: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&alpha) || !alpha.is_finite() {
            return Err(Error::Range(format!(
                "segment permuton parameter must lie in [0,1], got {alpha}"
            )));
        }
        let half = alpha / 2.0;
        // (slope, offset): y = -x + c for the anti-diagonal family,
        // y = x + c for the diagonal family.
        let lines = [
            (-1.0, half),
            (-1.0, 1.0 - half),
            (-1.0, 1.0 + half),
            (-1.0, 2.0 - half),
            (1.0, -half),
            (1.0, half),
            (1.0, 1.0 - half),
            (1.0, half - 1.0),
        ];
        let mut segments: Vec<Segment> = Vec::new();
        for (slope, offset) in lines {
            // Clip y = slope x + offset to the unit square.
            let (x0, x1) = if slope > 0.0 {
                ((-offset).max(0.0), (1.0 - offset).min(1.0))
            } else {
                ((offset - 1.0).max(0.0), offset.min(1.0))
            };
            if x1 - x0 <= 0.0 {
                continue;
            }
            if let Some(existing) = segments
                .iter_mut()
                .find(|s| s.slope == slope && s.offset == offset)
            {
                existing.mass += x1 - x0;
            } else {
                segments.push(Segment {
                    slope,
                    offset,
                    x0,
                    x1,
                    mass: x1 - x0,
                });
            }
        }
        let total: f64 = segments.iter().map(|s| s.mass).sum();
        let mut cumulative = Vec::with_capacity(segments.len());
        let mut acc = 0.0;
        for s in &mut segments {
            s.mass /= total;
            acc += s.mass;
            cumulative.push(acc);
        }
        if let Some(last) = cumulative.last_mut() {
            *last = 1.0;
        }
        Ok(Self {
            alpha,
            segments,
            cumulative,
        })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn segments(&self) -> &[Segment] {
        &self.segments
    }

    pub fn total_mass(&self) -> f64 {
        self.segments.iter().map(|s| s.mass).sum()
    }

    /// Maps `(u, v)` uniform on the unit square to a point of the measure:
    /// `u` picks the segment by mass, `v` the position along it.
    pub(crate) fn point_from_uniforms(&self, u: f64, v: f64) -> (f64, f64) {
        let idx = self
            .cumulative
            .partition_point(|&c| c < u)
            .min(self.segments.len() - 1);
        let s = &self.segments[idx];
        let x = s.x0 + v * (s.x1 - s.x0);
        (x, s.slope * x + s.offset)
    }
}
