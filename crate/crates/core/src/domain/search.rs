//! Shortest paths on the cell graph.
//!
//! Ties are broken deterministically: the heap orders by (distance, cell)
//! and a predecessor is replaced on an exact tie only by a smaller index.

use super::DiscreteDomain;
use std::cmp::Reverse;
use std::collections::BinaryHeap;

/// Edge weights of the cell graph.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Metric {
    /// Euclidean step length.
    Inner,
    /// Step length times the trapezoid average of `1/d` at both ends.
    Quasihyperbolic,
}

#[inline]
fn key(d: f64) -> u64 {
    debug_assert!(d >= 0.0);
    d.to_bits()
}

#[inline]
fn from_key(k: u64) -> f64 {
    f64::from_bits(k)
}

const NONE: u32 = u32::MAX;

/// Reusable Dijkstra state. Resetting between runs is O(1) thanks to
/// generation stamps.
#[derive(Clone, Debug)]
pub struct Search {
    dist: Vec<f64>,
    pred: Vec<u32>,
    seen: Vec<u32>,
    done: Vec<u32>,
    gen: u32,
    heap: BinaryHeap<Reverse<(u64, u32)>>,
    order: Vec<u32>,
}

impl Search {
    pub fn new(len: usize) -> Self {
        Search {
            dist: vec![0.0; len],
            pred: vec![NONE; len],
            seen: vec![0; len],
            done: vec![0; len],
            gen: 0,
            heap: BinaryHeap::new(),
            order: Vec::new(),
        }
    }

    pub fn for_domain(dom: &DiscreteDomain) -> Self {
        Self::new(dom.len())
    }

    fn bump(&mut self) {
        if self.gen == u32::MAX {
            self.seen.iter_mut().for_each(|s| *s = 0);
            self.done.iter_mut().for_each(|s| *s = 0);
            self.gen = 0;
        }
        self.gen += 1;
        self.heap.clear();
        self.order.clear();
    }

    /// Unrestricted run. See [`Search::run_within`].
    pub fn run(
        &mut self,
        dom: &DiscreteDomain,
        metric: Metric,
        sources: &[(usize, f64)],
        limit: f64,
        targets: &[usize],
    ) {
        self.run_within(dom, metric, sources, limit, targets, |_| true)
    }

    /// Multi-source Dijkstra. Each source carries a non-negative initial
    /// value. Cells whose value would exceed `limit` are never settled.
    /// The run stops once every target is settled (all cells when
    /// `targets` is empty). Only cells with `allow(cell)` are entered.
    pub fn run_within<F: Fn(usize) -> bool>(
        &mut self,
        dom: &DiscreteDomain,
        metric: Metric,
        sources: &[(usize, f64)],
        limit: f64,
        targets: &[usize],
        allow: F,
    ) {
        self.run_pruned(dom, metric, sources, limit, targets, |v, _| allow(v))
    }

    /// Like [`Search::run_within`], but `allow` also sees the tentative
    /// value, so callers can prune with an admissible lower bound.
    pub fn run_pruned<F: Fn(usize, f64) -> bool>(
        &mut self,
        dom: &DiscreteDomain,
        metric: Metric,
        sources: &[(usize, f64)],
        limit: f64,
        targets: &[usize],
        allow: F,
    ) {
        self.bump();
        let g = self.gen;
        for &(s, d0) in sources {
            if !dom.is_occupied(s) || d0 > limit || !allow(s, d0) {
                continue;
            }
            if self.seen[s] != g || d0 < self.dist[s] {
                self.seen[s] = g;
                self.dist[s] = d0;
                self.pred[s] = NONE;
                self.heap.push(Reverse((key(d0), s as u32)));
            }
        }
        let mut remaining = 0usize;
        // mark targets with a sentinel in `pred`-free way: count distinct
        let mut tmarks: Vec<usize> = targets.to_vec();
        tmarks.sort_unstable();
        tmarks.dedup();
        remaining += tmarks.len();
        let stop_on_targets = !tmarks.is_empty();
        let h = dom.spacing();
        let moves = dom.moves();
        while let Some(Reverse((k, u32u))) = self.heap.pop() {
            let u = u32u as usize;
            if self.done[u] == g {
                continue;
            }
            let du = from_key(k);
            if du > self.dist[u] {
                continue;
            }
            self.done[u] = g;
            self.order.push(u32u);
            if stop_on_targets && tmarks.binary_search(&u).is_ok() {
                remaining -= 1;
                if remaining == 0 {
                    break;
                }
            }
            let inv_u = dom.inv_distance(u);
            for m in moves {
                if !dom.step_allowed(u, m) {
                    continue;
                }
                let v = (u as isize + m.delta) as usize;
                if self.done[v] == g {
                    continue;
                }
                let w = match metric {
                    Metric::Inner => m.length * h,
                    Metric::Quasihyperbolic => m.length * h * 0.5 * (inv_u + dom.inv_distance(v)),
                };
                let nd = du + w;
                if nd > limit || !allow(v, nd) {
                    continue;
                }
                if self.seen[v] != g {
                    self.seen[v] = g;
                    self.dist[v] = nd;
                    self.pred[v] = u32u;
                    self.heap.push(Reverse((key(nd), v as u32)));
                } else if nd < self.dist[v] {
                    self.dist[v] = nd;
                    self.pred[v] = u32u;
                    self.heap.push(Reverse((key(nd), v as u32)));
                } else if nd == self.dist[v] && u32u < self.pred[v] {
                    self.pred[v] = u32u;
                }
            }
        }
    }

    /// Final distance of a settled cell.
    #[inline]
    pub fn distance(&self, v: usize) -> Option<f64> {
        if self.done[v] == self.gen {
            Some(self.dist[v])
        } else {
            None
        }
    }

    #[inline]
    pub fn is_settled(&self, v: usize) -> bool {
        self.done[v] == self.gen
    }

    /// Settled cells in settle order (non-decreasing distance).
    pub fn settled(&self) -> &[u32] {
        &self.order
    }

    /// Cell sequence from a source to `v`, or empty if `v` was not settled.
    pub fn path(&self, v: usize) -> Vec<usize> {
        if !self.is_settled(v) {
            return Vec::new();
        }
        let mut out = vec![v];
        let mut c = v;
        while self.pred[c] != NONE {
            c = self.pred[c] as usize;
            out.push(c);
        }
        out.reverse();
        out
    }
}

/// Maximum over paths from `from` to `to` of the minimum of `value` along
/// the path, both ends included (widest-path search).
pub fn bottleneck<F: Fn(usize) -> f64>(dom: &DiscreteDomain, value: F, from: usize, to: usize) -> f64 {
    let n = dom.len();
    let mut best = vec![f64::NEG_INFINITY; n];
    let mut done = vec![false; n];
    let mut heap: BinaryHeap<(u64, Reverse<u32>)> = BinaryHeap::new();
    let v0 = value(from);
    best[from] = v0;
    heap.push((key_signed(v0), Reverse(from as u32)));
    while let Some((k, Reverse(u32u))) = heap.pop() {
        let u = u32u as usize;
        if done[u] {
            continue;
        }
        let bu = from_key_signed(k);
        done[u] = true;
        if u == to {
            return bu;
        }
        for m in dom.moves() {
            if !dom.step_allowed(u, m) {
                continue;
            }
            let v = (u as isize + m.delta) as usize;
            if done[v] {
                continue;
            }
            let nb = bu.min(value(v));
            if nb > best[v] {
                best[v] = nb;
                heap.push((key_signed(nb), Reverse(v as u32)));
            }
        }
    }
    f64::NEG_INFINITY
}

// order-preserving map from f64 (any sign) to u64
#[inline]
fn key_signed(d: f64) -> u64 {
    let b = d.to_bits();
    if b >> 63 == 1 {
        !b
    } else {
        b | (1 << 63)
    }
}

#[inline]
fn from_key_signed(k: u64) -> f64 {
    if k >> 63 == 1 {
        f64::from_bits(k & !(1 << 63))
    } else {
        f64::from_bits(!k)
    }
}

/// True if `to` can be reached from `from` through cells with `open(cell)`.
pub fn reachable<F: Fn(usize) -> bool>(dom: &DiscreteDomain, from: usize, to: usize, open: F) -> bool {
    if !open(from) || !open(to) {
        return false;
    }
    let mut seen = vec![false; dom.len()];
    let mut stack = vec![from];
    seen[from] = true;
    while let Some(u) = stack.pop() {
        if u == to {
            return true;
        }
        for &d in dom.face_deltas() {
            let v = (u as isize + d) as usize;
            if !seen[v] && dom.is_occupied(v) && open(v) {
                seen[v] = true;
                stack.push(v);
            }
        }
    }
    false
}
