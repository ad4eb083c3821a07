//! Discretized domains: occupancy grids, boundary distance, path graph.
//!
//! A cell with integer coordinates `c` covers `origin + c*h .. origin + (c+1)*h`
//! and is sampled at its centre. Every domain is surrounded by at least one
//! ring of unoccupied cells, so neighbour arithmetic on occupied cells never
//! leaves the grid.

mod bitmap;
pub mod edt;
mod regions;
pub mod search;
mod spec;

pub use bitmap::{load_bitmap, write_pgm, BitmapSidecar};
pub use regions::{hausdorff_distance, inner_ball, CellSet, InnerRegion};
pub use spec::{build_domain, DomainSpec, Shape};

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

/// A point in the plane or in space. Planar domains ignore the last entry.
pub type Point = [f64; 3];

/// Convenience constructor for planar points.
pub fn pt2(x: f64, y: f64) -> Point {
    [x, y, 0.0]
}

pub fn pt3(x: f64, y: f64, z: f64) -> Point {
    [x, y, z]
}

pub(crate) fn euclid(a: &Point, b: &Point) -> f64 {
    ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2) + (a[2] - b[2]).powi(2)).sqrt()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    pub dim: usize,
    /// Cell counts per axis; the third entry is 1 for planar grids.
    pub shape: [usize; 3],
    /// Lower corner of cell `(0, 0, 0)`.
    pub origin: [f64; 3],
    pub spacing: f64,
}

impl Grid {
    pub fn len(&self) -> usize {
        self.shape[0] * self.shape[1] * self.shape[2]
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn strides(&self) -> [usize; 3] {
        [1, self.shape[0], self.shape[0] * self.shape[1]]
    }

    #[inline]
    pub fn coords(&self, idx: usize) -> [i64; 3] {
        let nx = self.shape[0];
        let ny = self.shape[1];
        [
            (idx % nx) as i64,
            ((idx / nx) % ny) as i64,
            (idx / (nx * ny)) as i64,
        ]
    }

    #[inline]
    pub fn index(&self, c: [i64; 3]) -> Option<usize> {
        for a in 0..3 {
            if c[a] < 0 || c[a] >= self.shape[a] as i64 {
                return None;
            }
        }
        Some(c[0] as usize + self.shape[0] * (c[1] as usize + self.shape[1] * c[2] as usize))
    }

    #[inline]
    pub fn center(&self, idx: usize) -> Point {
        let c = self.coords(idx);
        let mut p = [0.0; 3];
        for a in 0..self.dim {
            p[a] = self.origin[a] + (c[a] as f64 + 0.5) * self.spacing;
        }
        p
    }

    /// Integer coordinates of the cell whose half-open box contains `p`.
    pub fn cell_of(&self, p: &Point) -> [i64; 3] {
        let mut c = [0i64; 3];
        for a in 0..self.dim {
            c[a] = ((p[a] - self.origin[a]) / self.spacing).floor() as i64;
        }
        c
    }
}

/// One step of the path graph.
#[derive(Clone, Debug)]
pub struct Move {
    pub offset: [i64; 3],
    pub delta: isize,
    /// Euclidean step length in units of the spacing.
    pub length: f64,
    /// Cells that must be occupied for the step to be legal, relative to the
    /// start cell. Empty for axis steps.
    pub via: Vec<isize>,
}

fn build_moves(grid: &Grid) -> Vec<Move> {
    let s = grid.strides();
    let zr: &[i64] = if grid.dim == 3 { &[-1, 0, 1] } else { &[0] };
    let mut moves = Vec::new();
    for &dz in zr {
        for dy in -1i64..=1 {
            for dx in -1i64..=1 {
                let o = [dx, dy, dz];
                if o == [0, 0, 0] {
                    continue;
                }
                let delta = dx as isize + dy as isize * s[1] as isize + dz as isize * s[2] as isize;
                let nz = o.iter().filter(|v| **v != 0).count();
                let mut via = Vec::new();
                if nz > 1 {
                    // every cell of the bounding box of the step, except both ends
                    let ranges: Vec<Vec<i64>> =
                        o.iter().map(|&v| if v == 0 { vec![0] } else { vec![0, v] }).collect();
                    for &a in &ranges[0] {
                        for &b in &ranges[1] {
                            for &c in &ranges[2] {
                                let w = [a, b, c];
                                if w == [0, 0, 0] || w == o {
                                    continue;
                                }
                                via.push(
                                    a as isize + b as isize * s[1] as isize + c as isize * s[2] as isize,
                                );
                            }
                        }
                    }
                }
                moves.push(Move {
                    offset: o,
                    delta,
                    length: (nz as f64).sqrt(),
                    via,
                });
            }
        }
    }
    moves
}

/// An open set sampled on a grid, with its boundary distance field.
#[derive(Clone, Debug)]
pub struct DiscreteDomain {
    grid: Grid,
    occupied: Vec<bool>,
    dist: Vec<f64>,
    inv_dist: Vec<f64>,
    anchor: [i64; 3],
    moves: Vec<Move>,
    face_deltas: Vec<isize>,
    occupied_count: usize,
}

impl DiscreteDomain {
    /// Builds a domain from a mask sampled on `shape` cells whose lower
    /// corner is `origin`. One unoccupied ring is added around the mask, and
    /// the dyadic anchor is placed at `origin`.
    pub fn from_mask(
        dim: usize,
        shape: [usize; 3],
        origin: [f64; 3],
        spacing: f64,
        mask: &[bool],
        prune: bool,
    ) -> Result<Self> {
        if dim != 2 && dim != 3 {
            return Err(Error::InvalidParameter(format!("dimension {dim} not supported")));
        }
        if !(spacing > 0.0 && spacing.is_finite()) {
            return Err(Error::InvalidParameter(format!("spacing {spacing} must be positive")));
        }
        let pad = [1usize, 1, if dim == 3 { 1 } else { 0 }];
        let shape_in = [shape[0], shape[1], if dim == 3 { shape[2] } else { 1 }];
        assert_eq!(mask.len(), shape_in[0] * shape_in[1] * shape_in[2]);
        let full = [
            shape_in[0] + 2 * pad[0],
            shape_in[1] + 2 * pad[1],
            shape_in[2] + 2 * pad[2],
        ];
        let mut gorigin = origin;
        for a in 0..3 {
            gorigin[a] = if a < dim { origin[a] - pad[a] as f64 * spacing } else { 0.0 };
        }
        let grid = Grid {
            dim,
            shape: full,
            origin: gorigin,
            spacing,
        };
        let mut occupied = vec![false; grid.len()];
        for k in 0..shape_in[2] {
            for j in 0..shape_in[1] {
                for i in 0..shape_in[0] {
                    let src = i + shape_in[0] * (j + shape_in[1] * k);
                    if mask[src] {
                        let dst = grid
                            .index([(i + pad[0]) as i64, (j + pad[1]) as i64, (k + pad[2]) as i64])
                            .expect("padded index");
                        occupied[dst] = true;
                    }
                }
            }
        }
        let anchor = [pad[0] as i64, pad[1] as i64, pad[2] as i64];
        Self::from_padded(grid, occupied, anchor, prune)
    }

    fn from_padded(grid: Grid, mut occupied: Vec<bool>, anchor: [i64; 3], prune: bool) -> Result<Self> {
        let moves = build_moves(&grid);
        let s = grid.strides();
        let mut face_deltas = vec![1isize, -1, s[1] as isize, -(s[1] as isize)];
        if grid.dim == 3 {
            face_deltas.push(s[2] as isize);
            face_deltas.push(-(s[2] as isize));
        }
        let (labels, sizes) = face_components(&occupied, &face_deltas);
        if sizes.is_empty() {
            return Err(Error::EmptyDomain);
        }
        if sizes.len() > 1 {
            if !prune {
                return Err(Error::Disconnected { components: sizes.len() });
            }
            // keep the largest component; ties go to the lowest label
            let mut best = 0usize;
            for (l, &sz) in sizes.iter().enumerate() {
                if sz > sizes[best] {
                    best = l;
                }
            }
            for (i, occ) in occupied.iter_mut().enumerate() {
                if *occ && labels[i] != best as u32 {
                    *occ = false;
                }
            }
        }
        let complement: Vec<bool> = occupied.iter().map(|o| !o).collect();
        let sq = edt::squared_edt(grid.shape, grid.dim, &complement);
        let h = grid.spacing;
        let mut dist = vec![0.0; grid.len()];
        let mut inv_dist = vec![0.0; grid.len()];
        let mut occupied_count = 0;
        for i in 0..grid.len() {
            if occupied[i] {
                occupied_count += 1;
                let d = (sq[i].sqrt() - 0.5) * h;
                dist[i] = d;
                inv_dist[i] = 1.0 / d;
            }
        }
        Ok(DiscreteDomain {
            grid,
            occupied,
            dist,
            inv_dist,
            anchor,
            moves,
            face_deltas,
            occupied_count,
        })
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn dim(&self) -> usize {
        self.grid.dim
    }

    pub fn spacing(&self) -> f64 {
        self.grid.spacing
    }

    pub fn len(&self) -> usize {
        self.grid.len()
    }

    pub fn is_empty(&self) -> bool {
        self.occupied_count == 0
    }

    pub fn occupied_count(&self) -> usize {
        self.occupied_count
    }

    #[inline]
    pub fn is_occupied(&self, idx: usize) -> bool {
        self.occupied[idx]
    }

    pub fn occupancy(&self) -> &[bool] {
        &self.occupied
    }

    /// Distance from the cell centre to the boundary; zero outside.
    #[inline]
    pub fn boundary_distance(&self, idx: usize) -> f64 {
        self.dist[idx]
    }

    pub fn boundary_distances(&self) -> &[f64] {
        &self.dist
    }

    #[inline]
    pub(crate) fn inv_distance(&self, idx: usize) -> f64 {
        self.inv_dist[idx]
    }

    /// Cell coordinates of the bounding-box origin, used to anchor dyadic cubes.
    pub fn anchor(&self) -> [i64; 3] {
        self.anchor
    }

    pub fn moves(&self) -> &[Move] {
        &self.moves
    }

    pub(crate) fn face_deltas(&self) -> &[isize] {
        &self.face_deltas
    }

    pub fn center(&self, idx: usize) -> Point {
        self.grid.center(idx)
    }

    /// Iterator over occupied cell indices in increasing order.
    pub fn cells(&self) -> impl Iterator<Item = usize> + '_ {
        self.occupied
            .iter()
            .enumerate()
            .filter_map(|(i, &o)| if o { Some(i) } else { None })
    }

    /// True if the step `m` from occupied cell `u` lands on an occupied
    /// cell without cutting a corner.
    #[inline]
    pub fn step_allowed(&self, u: usize, m: &Move) -> bool {
        let v = (u as isize + m.delta) as usize;
        if !self.occupied[v] {
            return false;
        }
        m.via.iter().all(|&d| self.occupied[(u as isize + d) as usize])
    }

    /// Occupied cells reachable from `u` in one legal step, with step length.
    pub fn neighbors(&self, u: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let h = self.grid.spacing;
        self.moves.iter().filter_map(move |m| {
            if self.step_allowed(u, m) {
                Some(((u as isize + m.delta) as usize, m.length * h))
            } else {
                None
            }
        })
    }

    /// All cells touching `u` (sharing a face, edge or corner), occupied or not.
    pub fn touching(&self, u: usize) -> impl Iterator<Item = usize> + '_ {
        self.moves.iter().map(move |m| (u as isize + m.delta) as usize)
    }

    /// Snaps a point to the occupied cell containing it, or to the nearest
    /// occupied cell centre within one cell diagonal.
    pub fn locate(&self, p: &Point) -> Result<usize> {
        let c = self.grid.cell_of(p);
        if let Some(i) = self.grid.index(c) {
            if self.occupied[i] {
                return Ok(i);
            }
        }
        let h = self.grid.spacing;
        let reach = h * (self.dim() as f64).sqrt();
        let zr = if self.dim() == 3 { 2 } else { 0 };
        let mut best: Option<(f64, usize)> = None;
        for dz in -zr..=zr {
            for dy in -2i64..=2 {
                for dx in -2i64..=2 {
                    let q = [c[0] + dx, c[1] + dy, c[2] + dz];
                    if let Some(i) = self.grid.index(q) {
                        if !self.occupied[i] {
                            continue;
                        }
                        let d = euclid(&self.center(i), p);
                        if d <= reach && best.map_or(true, |(bd, bi)| d < bd || (d == bd && i < bi)) {
                            best = Some((d, i));
                        }
                    }
                }
            }
        }
        best.map(|(_, i)| i).ok_or(Error::PointOutside {
            x: p[0],
            y: p[1],
            z: p[2],
        })
    }

    /// Boundary distance at a point (value of the containing cell).
    pub fn distance_at(&self, p: &Point) -> Result<f64> {
        Ok(self.dist[self.locate(p)?])
    }

    /// Largest boundary distance over the domain.
    pub fn max_boundary_distance(&self) -> f64 {
        self.dist.iter().copied().fold(0.0, f64::max)
    }

    /// Returns a copy restricted to the given occupied cells. Used for
    /// subdomains such as the core component. The new domain keeps the grid
    /// and anchor; its boundary distance is recomputed.
    pub fn restrict(&self, keep: &[bool], prune: bool) -> Result<Self> {
        let occ: Vec<bool> = self.occupied.iter().zip(keep).map(|(a, b)| *a && *b).collect();
        Self::from_padded(self.grid.clone(), occ, self.anchor, prune)
    }
}

/// Face-connected components. Returns per-cell labels (u32::MAX for
/// unoccupied) and component sizes, labelled in order of first cell.
fn face_components(occupied: &[bool], deltas: &[isize]) -> (Vec<u32>, Vec<usize>) {
    let mut labels = vec![u32::MAX; occupied.len()];
    let mut sizes = Vec::new();
    let mut stack = Vec::new();
    for start in 0..occupied.len() {
        if !occupied[start] || labels[start] != u32::MAX {
            continue;
        }
        let l = sizes.len() as u32;
        labels[start] = l;
        stack.push(start);
        let mut count = 0usize;
        while let Some(u) = stack.pop() {
            count += 1;
            for &d in deltas {
                let v = (u as isize + d) as usize;
                if occupied[v] && labels[v] == u32::MAX {
                    labels[v] = l;
                    stack.push(v);
                }
            }
        }
        sizes.push(count);
    }
    (labels, sizes)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn square(n: usize) -> DiscreteDomain {
        let mask = vec![true; n * n];
        DiscreteDomain::from_mask(2, [n, n, 1], [0.0; 3], 1.0 / n as f64, &mask, false).unwrap()
    }

    #[test]
    fn boundary_distance_matches_brute_force() {
        let n = 12;
        let mut mask = vec![true; n * n];
        // carve a notch
        for j in 3..6 {
            for i in 0..7 {
                mask[i + n * j] = false;
            }
        }
        let d = DiscreteDomain::from_mask(2, [n, n, 1], [0.0; 3], 0.125, &mask, true).unwrap();
        let h = d.spacing();
        for u in d.cells() {
            let pu = d.center(u);
            let mut best = f64::INFINITY;
            for v in 0..d.len() {
                if !d.is_occupied(v) {
                    best = best.min(euclid(&pu, &d.center(v)));
                }
            }
            assert_eq!(d.boundary_distance(u), best - h / 2.0);
        }
    }

    #[test]
    fn square_center_distance() {
        let d = square(64);
        let i = d.locate(&pt2(0.5 - 1e-9, 0.5 - 1e-9)).unwrap();
        let v = d.boundary_distance(i);
        assert!((v - 0.5).abs() <= d.spacing(), "{v}");
        assert_eq!(d.occupied_count(), 64 * 64);
    }

    #[test]
    fn distance_is_one_lipschitz() {
        let d = square(20);
        for u in d.cells() {
            for (v, len) in d.neighbors(u) {
                assert!((d.boundary_distance(u) - d.boundary_distance(v)).abs() <= len + 1e-15);
            }
        }
    }

    #[test]
    fn no_corner_cutting() {
        // two cells touching only diagonally are disconnected
        let mask = vec![true, false, false, true];
        let r = DiscreteDomain::from_mask(2, [2, 2, 1], [0.0; 3], 0.5, &mask, false);
        assert!(matches!(r, Err(Error::Disconnected { components: 2 })));
    }

    #[test]
    fn moves_respect_walls() {
        let n = 5;
        let mut mask = vec![true; n * n];
        mask[2 + n * 2] = false;
        let d = DiscreteDomain::from_mask(2, [n, n, 1], [0.0; 3], 0.2, &mask, false).unwrap();
        let g = d.grid();
        // the hole sits at padded (3,3); the step (2,3)->(3,2) would cut its corner
        let u = g.index([2, 3, 0]).unwrap();
        let blocked = g.index([3, 2, 0]).unwrap();
        assert!(d.neighbors(u).all(|(v, _)| v != blocked));
        let open = g.index([1, 2, 0]).unwrap();
        assert!(d.neighbors(u).any(|(v, _)| v == open));
    }

    #[test]
    fn empty_mask_errors() {
        let r = DiscreteDomain::from_mask(2, [3, 3, 1], [0.0; 3], 0.1, &[false; 9], false);
        assert!(matches!(r, Err(Error::EmptyDomain)));
    }

    #[test]
    fn prune_keeps_largest() {
        let mut mask = vec![false; 10];
        mask[0] = true;
        for m in mask.iter_mut().skip(3).take(5) {
            *m = true;
        }
        let d = DiscreteDomain::from_mask(2, [10, 1, 1], [0.0; 3], 0.1, &mask, true).unwrap();
        assert_eq!(d.occupied_count(), 5);
    }

    #[test]
    fn locate_snaps_to_nearby_cell() {
        let d = square(8);
        assert!(d.locate(&pt2(1.0 + 0.05, 0.5)).is_ok());
        assert!(matches!(d.locate(&pt2(3.0, 3.0)), Err(Error::PointOutside { .. })));
    }
}
