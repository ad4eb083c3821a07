//! Parametric and file-backed domain descriptions.

use super::{bitmap, DiscreteDomain, Point};
use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};
use std::path::PathBuf;

/// A primitive open set.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "shape", rename_all = "kebab-case")]
pub enum Shape {
    /// Open axis-parallel rectangle.
    Rect { min: [f64; 2], max: [f64; 2] },
    Disk { center: [f64; 2], radius: f64 },
    Annulus { center: [f64; 2], inner: f64, outer: f64 },
}

impl Shape {
    pub fn contains(&self, x: f64, y: f64) -> bool {
        match self {
            Shape::Rect { min, max } => x > min[0] && x < max[0] && y > min[1] && y < max[1],
            Shape::Disk { center, radius } => {
                (x - center[0]).powi(2) + (y - center[1]).powi(2) < radius * radius
            }
            Shape::Annulus { center, inner, outer } => {
                let r2 = (x - center[0]).powi(2) + (y - center[1]).powi(2);
                r2 > inner * inner && r2 < outer * outer
            }
        }
    }

    pub fn bbox(&self) -> ([f64; 2], [f64; 2]) {
        match self {
            Shape::Rect { min, max } => (*min, *max),
            Shape::Disk { center, radius } | Shape::Annulus { center, outer: radius, .. } => (
                [center[0] - radius, center[1] - radius],
                [center[0] + radius, center[1] + radius],
            ),
        }
    }

    fn validate(&self) -> Result<()> {
        let ok = match self {
            Shape::Rect { min, max } => min[0] < max[0] && min[1] < max[1],
            Shape::Disk { radius, .. } => *radius > 0.0,
            Shape::Annulus { inner, outer, .. } => *inner >= 0.0 && inner < outer,
        };
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidParameter(format!("degenerate shape {self:?}")))
        }
    }
}

/// Description of a bounded open set, serialisable as TOML.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum DomainSpec {
    /// Axis-parallel rectangle (squares included).
    Square {
        min: [f64; 2],
        max: [f64; 2],
        #[serde(default)]
        prune: bool,
    },
    Disk {
        center: [f64; 2],
        radius: f64,
        #[serde(default)]
        prune: bool,
    },
    Annulus {
        center: [f64; 2],
        inner: f64,
        outer: f64,
        #[serde(default)]
        prune: bool,
    },
    /// Union of primitive shapes.
    CustomUnion {
        parts: Vec<Shape>,
        #[serde(default)]
        prune: bool,
    },
    /// Planar union times an interval.
    Product3d {
        parts: Vec<Shape>,
        z: [f64; 2],
        #[serde(default)]
        prune: bool,
    },
    /// Greyscale image, pixel value >= 128 meaning inside.
    BitmapFile {
        path: PathBuf,
        sidecar: PathBuf,
        #[serde(default)]
        prune: bool,
    },
}

impl DomainSpec {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Parse(e.to_string()))
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("spec serialises")
    }

    pub fn unit_square() -> Self {
        DomainSpec::Square {
            min: [0.0, 0.0],
            max: [1.0, 1.0],
            prune: false,
        }
    }

    pub fn disk(center: [f64; 2], radius: f64) -> Self {
        DomainSpec::Disk {
            center,
            radius,
            prune: false,
        }
    }

    /// Two disks joined by a horizontal neck of the given width.
    pub fn dumbbell(radius: f64, separation: f64, neck: f64) -> Self {
        let c = separation / 2.0;
        DomainSpec::CustomUnion {
            parts: vec![
                Shape::Disk {
                    center: [-c, 0.0],
                    radius,
                },
                Shape::Disk {
                    center: [c, 0.0],
                    radius,
                },
                Shape::Rect {
                    min: [-c, -neck / 2.0],
                    max: [c, neck / 2.0],
                },
            ],
            prune: false,
        }
    }

    fn prune(&self) -> bool {
        match self {
            DomainSpec::Square { prune, .. }
            | DomainSpec::Disk { prune, .. }
            | DomainSpec::Annulus { prune, .. }
            | DomainSpec::CustomUnion { prune, .. }
            | DomainSpec::Product3d { prune, .. }
            | DomainSpec::BitmapFile { prune, .. } => *prune,
        }
    }

    fn planar_parts(&self) -> Option<Vec<Shape>> {
        match self {
            DomainSpec::Square { min, max, .. } => Some(vec![Shape::Rect { min: *min, max: *max }]),
            DomainSpec::Disk { center, radius, .. } => Some(vec![Shape::Disk {
                center: *center,
                radius: *radius,
            }]),
            DomainSpec::Annulus {
                center, inner, outer, ..
            } => Some(vec![Shape::Annulus {
                center: *center,
                inner: *inner,
                outer: *outer,
            }]),
            DomainSpec::CustomUnion { parts, .. } | DomainSpec::Product3d { parts, .. } => {
                Some(parts.clone())
            }
            DomainSpec::BitmapFile { .. } => None,
        }
    }

    /// Point membership for parametric kinds.
    pub fn contains(&self, p: &Point) -> Option<bool> {
        let parts = self.planar_parts()?;
        let inside = parts.iter().any(|s| s.contains(p[0], p[1]));
        Some(match self {
            DomainSpec::Product3d { z, .. } => inside && p[2] > z[0] && p[2] < z[1],
            _ => inside,
        })
    }
}

fn union_bbox(parts: &[Shape]) -> ([f64; 2], [f64; 2]) {
    let mut lo = [f64::INFINITY; 2];
    let mut hi = [f64::NEG_INFINITY; 2];
    for s in parts {
        let (a, b) = s.bbox();
        for k in 0..2 {
            lo[k] = lo[k].min(a[k]);
            hi[k] = hi[k].max(b[k]);
        }
    }
    (lo, hi)
}

/// Samples a domain description on a grid of spacing `h`.
pub fn build_domain(spec: &DomainSpec, h: f64) -> Result<DiscreteDomain> {
    if !(h > 0.0 && h.is_finite()) {
        return Err(Error::InvalidParameter(format!("spacing {h} must be positive")));
    }
    if let DomainSpec::BitmapFile { path, sidecar, prune } = spec {
        let side = bitmap::BitmapSidecar::load(sidecar)?;
        if (side.spacing - h).abs() > 1e-12 * h {
            return Err(Error::InvalidParameter(format!(
                "bitmap spacing {} differs from requested {h}",
                side.spacing
            )));
        }
        return bitmap::load_bitmap(path, &side, *prune);
    }
    let parts = spec.planar_parts().expect("parametric");
    if parts.is_empty() {
        return Err(Error::EmptyDomain);
    }
    for s in &parts {
        s.validate()?;
    }
    let (lo, hi) = union_bbox(&parts);
    let (dim, zr) = match spec {
        DomainSpec::Product3d { z, .. } => {
            if z[0] >= z[1] {
                return Err(Error::InvalidParameter("empty z interval".into()));
            }
            (3, Some(*z))
        }
        _ => (2, None),
    };
    let nx = ((hi[0] - lo[0]) / h).ceil() as usize;
    let ny = ((hi[1] - lo[1]) / h).ceil() as usize;
    let nz = zr.map_or(1, |z| ((z[1] - z[0]) / h).ceil() as usize);
    let cells = nx as u128 * ny as u128 * nz as u128;
    if cells > 400_000_000 {
        return Err(Error::InvalidParameter(format!("{cells} cells exceeds the grid budget")));
    }
    let mut plane = vec![false; nx * ny];
    for j in 0..ny {
        let y = lo[1] + (j as f64 + 0.5) * h;
        for i in 0..nx {
            let x = lo[0] + (i as f64 + 0.5) * h;
            plane[i + nx * j] = parts.iter().any(|s| s.contains(x, y));
        }
    }
    let origin = [lo[0], lo[1], zr.map_or(0.0, |z| z[0])];
    let mask = if let Some(z) = zr {
        let mut m = Vec::with_capacity(nx * ny * nz);
        for k in 0..nz {
            let zc = z[0] + (k as f64 + 0.5) * h;
            let inside = zc > z[0] && zc < z[1];
            m.extend(plane.iter().map(|&b| b && inside));
        }
        m
    } else {
        plane
    };
    DiscreteDomain::from_mask(dim, [nx, ny, nz], origin, h, &mask, spec.prune())
}
