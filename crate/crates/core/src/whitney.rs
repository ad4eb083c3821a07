//! Dyadic Whitney decompositions.
//!
//! Cubes are anchored at the bounding-box origin of the domain and live on
//! the cell grid, which must have spacing `2^-L`. A cube of level `k` has
//! side `2^-k`, i.e. `2^(L-k)` cells, and is accepted when it is maximal
//! among dyadic cubes with `side <= dist(Q, boundary)`. The distance of a
//! cube is the minimum boundary distance over its cell centres, reduced by
//! a safety margin of one cell diagonal.

use crate::domain::{CellSet, DiscreteDomain, Point};
use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};
use std::io::Write;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct DyadicCube {
    pub level: i32,
    /// Integer corner in units of the side, relative to the anchor.
    pub corner: [i64; 3],
}

impl DyadicCube {
    pub fn side(&self) -> f64 {
        (-self.level as f64).exp2()
    }

    pub fn parent(&self) -> DyadicCube {
        DyadicCube {
            level: self.level - 1,
            corner: [
                self.corner[0].div_euclid(2),
                self.corner[1].div_euclid(2),
                self.corner[2].div_euclid(2),
            ],
        }
    }
}

/// Grid level `L` such that `h = 2^-L`, if the spacing is dyadic.
pub fn dyadic_level(h: f64) -> Option<i32> {
    let l = -h.log2();
    let r = l.round();
    if (r - l).abs() < 1e-12 && (-r).exp2() == h {
        Some(r as i32)
    } else {
        None
    }
}

pub const NO_CUBE: u32 = u32::MAX;

#[derive(Clone, Debug)]
pub struct WhitneyDecomposition {
    cubes: Vec<DyadicCube>,
    dist: Vec<f64>,
    neighbors: Vec<Vec<u32>>,
    touches_residual: Vec<bool>,
    owner: Vec<u32>,
    residual: CellSet,
    max_level: i32,
    grid_level: i32,
    anchor: [i64; 3],
    dim: usize,
    spacing: f64,
    origin: [f64; 3],
}

impl WhitneyDecomposition {
    pub fn cubes(&self) -> &[DyadicCube] {
        &self.cubes
    }

    pub fn len(&self) -> usize {
        self.cubes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cubes.is_empty()
    }

    pub fn cube(&self, i: usize) -> DyadicCube {
        self.cubes[i]
    }

    pub fn side(&self, i: usize) -> f64 {
        self.cubes[i].side()
    }

    pub fn diam(&self, i: usize) -> f64 {
        self.side(i) * (self.dim as f64).sqrt()
    }

    /// Minimum boundary distance over the cube's cell centres.
    pub fn distance(&self, i: usize) -> f64 {
        self.dist[i]
    }

    pub fn neighbors(&self, i: usize) -> &[u32] {
        &self.neighbors[i]
    }

    /// Whether some cell touching the cube is occupied but uncovered.
    pub fn touches_residual(&self, i: usize) -> bool {
        self.touches_residual[i]
    }

    pub fn owner(&self, cell: usize) -> Option<usize> {
        let o = self.owner[cell];
        (o != NO_CUBE).then_some(o as usize)
    }

    pub fn owners(&self) -> &[u32] {
        &self.owner
    }

    pub fn residual(&self) -> &CellSet {
        &self.residual
    }

    pub fn max_level(&self) -> i32 {
        self.max_level
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn spacing(&self) -> f64 {
        self.spacing
    }

    /// Side of a cube in cells.
    pub fn side_cells(&self, level: i32) -> i64 {
        1i64 << (self.grid_level - level)
    }

    /// Lower cell coordinates and side (in cells) of cube `i`.
    pub fn cell_box(&self, i: usize) -> ([i64; 3], i64) {
        cube_box(&self.cubes[i], self.grid_level, self.anchor, self.dim)
    }

    pub fn center(&self, i: usize) -> Point {
        let c = &self.cubes[i];
        let s = c.side();
        let mut p = [0.0; 3];
        for a in 0..self.dim {
            p[a] = self.origin[a] + (c.corner[a] as f64 + 0.5) * s;
        }
        p
    }

    /// The `2^n` cells adjacent to the centre of cube `i`.
    pub fn central_cells(&self, dom: &DiscreteDomain, i: usize) -> Vec<usize> {
        let (lo, s) = self.cell_box(i);
        let half = s / 2;
        let zr: &[i64] = if self.dim == 3 { &[-1, 0] } else { &[0] };
        let mut out = Vec::new();
        for &dz in zr {
            for dy in [-1i64, 0] {
                for dx in [-1i64, 0] {
                    let c = [
                        lo[0] + half + dx,
                        lo[1] + half + dy,
                        if self.dim == 3 { lo[2] + half + dz } else { 0 },
                    ];
                    out.push(dom.grid().index(c).expect("cube inside grid"));
                }
            }
        }
        out
    }

    /// Cell indices of cube `i`.
    pub fn cells_of<'a>(&'a self, dom: &'a DiscreteDomain, i: usize) -> impl Iterator<Item = usize> + 'a {
        let (lo, s) = self.cell_box(i);
        let g = dom.grid();
        let zs = if self.dim == 3 { s } else { 1 };
        let strides = g.strides();
        let base = g.index(lo).expect("cube inside grid");
        (0..zs).flat_map(move |k| {
            (0..s).flat_map(move |j| {
                let row = base + k as usize * strides[2] + j as usize * strides[1];
                row..row + s as usize
            })
        })
    }

    /// Undirected edges `(i, j)` with `i < j`, in lexicographic order.
    pub fn edges(&self) -> Vec<(usize, usize)> {
        let mut e = Vec::new();
        for (i, ns) in self.neighbors.iter().enumerate() {
            for &j in ns {
                if (j as usize) > i {
                    e.push((i, j as usize));
                }
            }
        }
        e
    }

    /// Index of a cube in the decomposition.
    pub fn find(&self, q: &DyadicCube) -> Option<usize> {
        self.cubes.binary_search(q).ok()
    }

    /// Plain text export, one cube per line: `level corner... side dist`.
    pub fn export<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "# dim {} spacing {} max_level {}", self.dim, self.spacing, self.max_level)?;
        for (i, c) in self.cubes.iter().enumerate() {
            write!(w, "{}", c.level)?;
            for a in 0..self.dim {
                write!(w, " {}", c.corner[a])?;
            }
            writeln!(w, " {} {}", c.side(), self.dist[i])?;
        }
        Ok(())
    }
}

fn cube_box(c: &DyadicCube, grid_level: i32, anchor: [i64; 3], dim: usize) -> ([i64; 3], i64) {
    let s = 1i64 << (grid_level - c.level);
    let mut lo = [0i64; 3];
    for a in 0..dim {
        lo[a] = anchor[a] + c.corner[a] * s;
    }
    (lo, s)
}

/// Visits every cell of the one-cell shell around a box (2-D or 3-D).
fn for_each_shell_cell<F: FnMut([i64; 3])>(lo: [i64; 3], s: i64, dim: usize, mut f: F) {
    let (z0, z1) = if dim == 3 { (lo[2] - 1, lo[2] + s) } else { (0, 0) };
    for z in z0..=z1 {
        let z_in = dim == 2 || (z >= lo[2] && z < lo[2] + s);
        for y in lo[1] - 1..=lo[1] + s {
            let y_in = y >= lo[1] && y < lo[1] + s;
            if z_in && y_in {
                f([lo[0] - 1, y, z]);
                f([lo[0] + s, y, z]);
            } else {
                for x in lo[0] - 1..=lo[0] + s {
                    f([x, y, z]);
                }
            }
        }
    }
}

/// Min-pyramid of the boundary distance field anchored at `anchor`.
struct Pyramid {
    levels: Vec<(Vec<f64>, [usize; 3])>,
}

impl Pyramid {
    fn build(dom: &DiscreteDomain, anchor: [i64; 3]) -> Self {
        let g = dom.grid();
        let dim = g.dim;
        let mut dims = [1usize; 3];
        for a in 0..dim {
            dims[a] = (g.shape[a] as i64 - anchor[a]) as usize;
        }
        let mut base = vec![0.0; dims[0] * dims[1] * dims[2]];
        for k in 0..dims[2] {
            for j in 0..dims[1] {
                for i in 0..dims[0] {
                    let c = [anchor[0] + i as i64, anchor[1] + j as i64, anchor[2] + k as i64];
                    let idx = g.index(c).expect("inside grid");
                    base[i + dims[0] * (j + dims[1] * k)] = dom.boundary_distance(idx);
                }
            }
        }
        let mut levels = vec![(base, dims)];
        while levels.last().unwrap().1.iter().any(|&d| d > 1) {
            let (prev, pd) = levels.last().unwrap();
            let mut nd = [1usize; 3];
            for a in 0..dim {
                nd[a] = pd[a].div_ceil(2);
            }
            let mut next = vec![f64::INFINITY; nd[0] * nd[1] * nd[2]];
            let zmax = if dim == 3 { 2 } else { 1 };
            for k in 0..nd[2] {
                for j in 0..nd[1] {
                    for i in 0..nd[0] {
                        let mut m = f64::INFINITY;
                        for dz in 0..zmax {
                            for dy in 0..2 {
                                for dx in 0..2 {
                                    let (ci, cj, ck) = (2 * i + dx, 2 * j + dy, 2 * k + dz);
                                    let v = if ci < pd[0] && cj < pd[1] && ck < pd[2] {
                                        prev[ci + pd[0] * (cj + pd[1] * ck)]
                                    } else {
                                        0.0
                                    };
                                    m = m.min(v);
                                }
                            }
                        }
                        next[i + nd[0] * (j + nd[1] * k)] = m;
                    }
                }
            }
            levels.push((next, nd));
        }
        Pyramid { levels }
    }

    fn top(&self) -> usize {
        self.levels.len() - 1
    }

    fn value(&self, t: usize, m: [i64; 3]) -> f64 {
        if t >= self.levels.len() {
            return 0.0;
        }
        let (v, d) = &self.levels[t];
        if (0..3).any(|a| m[a] < 0 || m[a] >= d[a] as i64) {
            return 0.0;
        }
        v[m[0] as usize + d[0] * (m[1] as usize + d[1] * m[2] as usize)]
    }
}

/// Builds the Whitney decomposition up to the finest level `max_level`
/// (smallest side `2^-max_level`, at least two cells).
pub fn whitney_decompose(dom: &DiscreteDomain, max_level: i32) -> Result<WhitneyDecomposition> {
    let h = dom.spacing();
    let grid_level = dyadic_level(h).ok_or_else(|| {
        Error::InvalidParameter(format!("spacing {h} is not a power of two; dyadic cubes need h = 2^-L"))
    })?;
    if max_level > grid_level - 1 {
        return Err(Error::ResolutionTooCoarse(format!(
            "max_level {max_level} needs cubes of at least two cells; spacing allows at most {}",
            grid_level - 1
        )));
    }
    let dim = dom.dim();
    let anchor = dom.anchor();
    let pyr = Pyramid::build(dom, anchor);
    let t_min = (grid_level - max_level) as usize;
    let top = pyr.top();
    let margin = h * (dim as f64).sqrt();
    let sat = |t: usize, m: [i64; 3]| {
        let d = pyr.value(t, m);
        let side = (t as f64).exp2() * h;
        d > 0.0 && side <= d - margin
    };
    let mut cubes = Vec::new();
    for t in t_min..=top {
        let (_, d) = &pyr.levels[t];
        for k in 0..d[2] as i64 {
            for j in 0..d[1] as i64 {
                for i in 0..d[0] as i64 {
                    let m = [i, j, k];
                    if sat(t, m) && !sat(t + 1, [i.div_euclid(2), j.div_euclid(2), k.div_euclid(2)]) {
                        cubes.push(DyadicCube {
                            level: grid_level - t as i32,
                            corner: if dim == 3 { m } else { [i, j, 0] },
                        });
                    }
                }
            }
        }
    }
    if cubes.is_empty() {
        return Err(Error::ResolutionTooCoarse(
            "no dyadic cube satisfies side <= dist(Q, boundary)".into(),
        ));
    }
    cubes.sort();
    let g = dom.grid();
    let mut owner = vec![NO_CUBE; g.len()];
    let mut dist = Vec::with_capacity(cubes.len());
    for (ci, c) in cubes.iter().enumerate() {
        let (lo, s) = cube_box(c, grid_level, anchor, dim);
        let t = (grid_level - c.level) as usize;
        dist.push(pyr.value(t, c.corner));
        let zs = if dim == 3 { s } else { 1 };
        for k in 0..zs {
            for j in 0..s {
                let row = g.index([lo[0], lo[1] + j, lo[2] + k]).expect("inside grid");
                for o in &mut owner[row..row + s as usize] {
                    *o = ci as u32;
                }
            }
        }
    }
    let mut neighbors = Vec::with_capacity(cubes.len());
    let mut touches_residual = Vec::with_capacity(cubes.len());
    for (ci, c) in cubes.iter().enumerate() {
        let (lo, s) = cube_box(c, grid_level, anchor, dim);
        let mut ns = Vec::new();
        let mut touch = false;
        for_each_shell_cell(lo, s, dim, |p| {
            let idx = g.index(p).expect("shell inside padded grid");
            let o = owner[idx];
            if o != NO_CUBE {
                if o as usize != ci {
                    ns.push(o);
                }
            } else if dom.is_occupied(idx) {
                touch = true;
            }
        });
        ns.sort_unstable();
        ns.dedup();
        neighbors.push(ns);
        touches_residual.push(touch);
    }
    let residual: CellSet = dom.cells().filter(|&c| owner[c] == NO_CUBE).collect();
    let mut origin = [0.0; 3];
    for a in 0..dim {
        origin[a] = g.origin[a] + anchor[a] as f64 * h;
    }
    Ok(WhitneyDecomposition {
        cubes,
        dist,
        neighbors,
        touches_residual,
        owner,
        residual,
        max_level,
        grid_level,
        anchor,
        dim,
        spacing: h,
        origin,
    })
}

/// Adjacency of the decomposition: cubes whose closures intersect.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CubeGraph {
    pub nodes: usize,
    pub edges: Vec<(usize, usize)>,
}

pub fn cube_graph(dec: &WhitneyDecomposition) -> CubeGraph {
    CubeGraph {
        nodes: dec.len(),
        edges: dec.edges(),
    }
}

/// Outcome of one invariant check.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub violations: usize,
    pub first_counterexample: Option<String>,
}

impl Check {
    pub(crate) fn new(name: &str) -> Self {
        Check {
            name: name.to_string(),
            passed: true,
            violations: 0,
            first_counterexample: None,
        }
    }

    pub(crate) fn fail(&mut self, msg: impl FnOnce() -> String) {
        self.passed = false;
        self.violations += 1;
        if self.first_counterexample.is_none() {
            self.first_counterexample = Some(msg());
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WhitneyReport {
    pub cubes: usize,
    pub residual_cells: usize,
    pub disjoint: Check,
    pub distance: Check,
    pub adjacency: Check,
    pub coverage: Check,
}

impl WhitneyReport {
    pub fn passed(&self) -> bool {
        self.disjoint.passed && self.distance.passed && self.adjacency.passed && self.coverage.passed
    }
}

/// Re-derives the Whitney properties from the domain and the cube list
/// alone: disjoint interiors, `side <= dist <= 4 sqrt(n) side` (within a
/// band of one cell diagonal), side ratio at most 4 for touching cubes,
/// and that uncovered cells are closer to the boundary than the finest
/// cube size allows.
pub fn validate_whitney(dec: &WhitneyDecomposition, dom: &DiscreteDomain) -> WhitneyReport {
    let g = dom.grid();
    let dim = dom.dim();
    let h = dom.spacing();
    let rn = (dim as f64).sqrt();
    let tol = h * rn;
    let mut disjoint = Check::new("disjoint interiors");
    let mut distance = Check::new("side <= dist <= 4 sqrt(n) side");
    let mut adjacency = Check::new("touching cubes have side ratio <= 4");
    let mut coverage = Check::new("uncovered cells are near the boundary");
    let mut paint = vec![NO_CUBE; g.len()];
    for i in 0..dec.len() {
        let ell = dec.side(i);
        let mut dmin = f64::INFINITY;
        for c in dec.cells_of(dom, i) {
            if !dom.is_occupied(c) {
                disjoint.fail(|| format!("cube {:?} contains an exterior cell", dec.cube(i)));
            }
            if paint[c] != NO_CUBE {
                let j = paint[c] as usize;
                disjoint.fail(|| format!("cubes {:?} and {:?} overlap", dec.cube(j), dec.cube(i)));
            }
            paint[c] = i as u32;
            dmin = dmin.min(dom.boundary_distance(c));
        }
        if dmin < ell - tol || dmin > 4.0 * rn * ell + tol {
            distance.fail(|| format!("cube {:?}: side {ell}, dist {dmin}", dec.cube(i)));
        }
    }
    // touching pairs found through the painted grid, then checked with
    // integer closure arithmetic
    let closure_meets = |a: &DyadicCube, b: &DyadicCube| {
        let (la, sa) = cube_box(a, dec.grid_level, dec.anchor, dim);
        let (lb, sb) = cube_box(b, dec.grid_level, dec.anchor, dim);
        (0..dim).all(|k| la[k] <= lb[k] + sb && lb[k] <= la[k] + sa)
    };
    for i in 0..dec.len() {
        let (lo, s) = dec.cell_box(i);
        let mut seen = Vec::new();
        for_each_shell_cell(lo, s, dim, |p| {
            if let Some(idx) = g.index(p) {
                let j = paint[idx];
                if j != NO_CUBE && j as usize != i {
                    seen.push(j);
                }
            }
        });
        seen.sort_unstable();
        seen.dedup();
        let a = dec.cube(i);
        for &j in &seen {
            let b = dec.cube(j as usize);
            if !closure_meets(&a, &b) {
                adjacency.fail(|| format!("shell neighbour {b:?} of {a:?} does not touch"));
            }
            if (a.level - b.level).abs() > 2 {
                adjacency.fail(|| format!("{a:?} touches {b:?}"));
            }
        }
        if seen.iter().copied().ne(dec.neighbors(i).iter().copied()) {
            adjacency.fail(|| format!("stored neighbours of {a:?} differ from the geometry"));
        }
    }
    let lf = (-dec.max_level() as f64).exp2();
    let bound = (1.0 + rn) * lf + 2.0 * tol;
    for c in dom.cells() {
        if paint[c] == NO_CUBE && dom.boundary_distance(c) > bound {
            coverage.fail(|| format!("cell {c} uncovered at distance {}", dom.boundary_distance(c)));
        }
    }
    if dec.residual().iter().any(|c| paint[c] != NO_CUBE)
        || dec.residual().len() != dom.cells().filter(|&c| paint[c] == NO_CUBE).count()
    {
        coverage.fail(|| "stored residual set disagrees with the cube list".into());
    }
    WhitneyReport {
        cubes: dec.len(),
        residual_cells: dec.residual().len(),
        disjoint,
        distance,
        adjacency,
        coverage,
    }
}
