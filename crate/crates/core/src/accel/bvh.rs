//! Binary BVH with a binned SAH build.

use glam::Vec3;
use thiserror::Error;

use crate::math::Aabb;

pub const BINS: usize = 16;
pub const MAX_LEAF: usize = 4;
const TRAVERSAL_COST: f32 = 1.0;

#[derive(Debug, Error, Clone, Copy, PartialEq, Eq)]
pub enum BuildError {
    #[error("cannot build a BVH over zero primitives")]
    EmptyInput,
    #[error("primitive {0} has a non-finite bounding box")]
    NonFinite(usize),
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BvhNode {
    pub bounds: Aabb,
    /// Leaf: first index into `order`. Interior: left child.
    pub a: u32,
    /// Interior: right child. Unused for leaves.
    pub b: u32,
    /// Primitive count; zero for interior nodes.
    pub count: u32,
}

impl BvhNode {
    #[inline]
    pub fn is_leaf(&self) -> bool {
        self.count > 0
    }
}

#[derive(Clone, Debug)]
pub struct Bvh {
    pub nodes: Vec<BvhNode>,
    /// Leaf ranges index this permutation of the input primitives.
    pub order: Vec<u32>,
}

#[derive(Clone, Copy)]
struct Bin {
    bounds: Aabb,
    count: u32,
}

const EMPTY_BIN: Bin = Bin { bounds: Aabb::EMPTY, count: 0 };

fn centroid_bounds(prims: &[Aabb], idx: &[u32]) -> Aabb {
    idx.iter().fold(Aabb::EMPTY, |b, &i| b.grow(prims[i as usize].center()))
}

/// Best split of `idx` as `(axis, bin boundary, cost)`.
fn best_split(prims: &[Aabb], idx: &[u32], cb: &Aabb) -> Option<(usize, usize, f32)> {
    let mut best: Option<(usize, usize, f32)> = None;
    for axis in 0..3 {
        let lo = cb.min[axis];
        let extent = cb.max[axis] - lo;
        if !(extent > 0.0) {
            continue;
        }
        let scale = BINS as f32 / extent;
        let mut bins = [EMPTY_BIN; BINS];
        for &i in idx {
            let p = &prims[i as usize];
            let k = (((p.center()[axis] - lo) * scale) as usize).min(BINS - 1);
            bins[k].bounds = bins[k].bounds.union(*p);
            bins[k].count += 1;
        }
        let mut right_area = [0f32; BINS];
        let mut right_count = [0u32; BINS];
        let (mut acc, mut n) = (Aabb::EMPTY, 0);
        for k in (1..BINS).rev() {
            acc = acc.union(bins[k].bounds);
            n += bins[k].count;
            right_area[k] = acc.surface_area();
            right_count[k] = n;
        }
        let (mut acc, mut n) = (Aabb::EMPTY, 0);
        for k in 1..BINS {
            acc = acc.union(bins[k - 1].bounds);
            n += bins[k - 1].count;
            if n == 0 || right_count[k] == 0 {
                continue;
            }
            let cost = acc.surface_area() * n as f32 + right_area[k] * right_count[k] as f32;
            if best.map_or(true, |b| cost < b.2) {
                best = Some((axis, k, cost));
            }
        }
    }
    best
}

pub fn build_bvh(prims: &[Aabb]) -> Result<Bvh, BuildError> {
    if prims.is_empty() {
        return Err(BuildError::EmptyInput);
    }
    if let Some(i) = prims.iter().position(|b| !(b.min.is_finite() && b.max.is_finite())) {
        return Err(BuildError::NonFinite(i));
    }
    let mut order: Vec<u32> = (0..prims.len() as u32).collect();
    let mut nodes = Vec::with_capacity(2 * prims.len() / MAX_LEAF + 1);
    nodes.push(BvhNode { bounds: Aabb::EMPTY, a: 0, b: 0, count: 0 });
    // (node, start, end)
    let mut stack = vec![(0usize, 0usize, prims.len())];
    while let Some((node, start, end)) = stack.pop() {
        let idx = &mut order[start..end];
        let bounds = idx.iter().fold(Aabb::EMPTY, |b, &i| b.union(prims[i as usize]));
        let n = idx.len();
        let leaf = BvhNode { bounds, a: start as u32, b: 0, count: n as u32 };
        if n == 1 {
            nodes[node] = leaf;
            continue;
        }
        let cb = centroid_bounds(prims, idx);
        let split = best_split(prims, idx, &cb);
        let mid = match split {
            Some((axis, k, cost)) => {
                let area = bounds.surface_area();
                let split_cost = TRAVERSAL_COST + if area > 0.0 { cost / area } else { n as f32 };
                if n <= MAX_LEAF && split_cost >= n as f32 {
                    nodes[node] = leaf;
                    continue;
                }
                let lo = cb.min[axis];
                let scale = BINS as f32 / (cb.max[axis] - lo);
                let bin_of = |i: u32| (((prims[i as usize].center()[axis] - lo) * scale) as usize).min(BINS - 1);
                let mut m = 0;
                for j in 0..n {
                    if bin_of(idx[j]) < k {
                        idx.swap(j, m);
                        m += 1;
                    }
                }
                m
            }
            None => {
                // all centroids coincide
                if n <= MAX_LEAF {
                    nodes[node] = leaf;
                    continue;
                }
                n / 2
            }
        };
        let left = nodes.len();
        nodes.push(leaf);
        nodes.push(leaf);
        nodes[node] = BvhNode { bounds, a: left as u32, b: left as u32 + 1, count: 0 };
        stack.push((left + 1, start + mid, end));
        stack.push((left, start, start + mid));
    }
    Ok(Bvh { nodes, order })
}

/// Per-axis slab data for a ray.
#[derive(Clone, Copy, Debug)]
pub struct RaySlab {
    pub origin: Vec3,
    pub inv_dir: Vec3,
}

impl RaySlab {
    #[inline]
    pub fn new(origin: Vec3, dir: Vec3) -> Self {
        // zero components become tiny ones so `0 · ∞` never yields NaN
        let d = dir.to_array().map(|c| if c == 0.0 { 1e-30f32.copysign(c) } else { c });
        Self { origin, inv_dir: Vec3::from_array(d).recip() }
    }
}

/// Slack applied to the far slab distance so boxes touched by a rounding
/// error are still entered.
const FAR_SLACK: f32 = 1.0 + 2.0 * (3.0 * f32::EPSILON * 0.5) / (1.0 - 3.0 * f32::EPSILON * 0.5);

/// Relative slack on the pruning limit. A primitive whose hit ties the
/// current best may sit on its box boundary, where the slab entry can round
/// past the kernel's `t`.
const LIMIT_SLACK: f32 = 1.0 + 1e-5;

#[inline(always)]
fn fmin(a: f32, b: f32) -> f32 {
    if a < b {
        a
    } else {
        b
    }
}

#[inline(always)]
fn fmax(a: f32, b: f32) -> f32 {
    if a > b {
        a
    } else {
        b
    }
}

/// Entry distance into `b` along the ray, if it overlaps `[tmin, tmax]`.
#[inline]
pub fn slab_entry(b: &Aabb, r: &RaySlab, tmin: f32, tmax: f32) -> Option<f32> {
    let tx0 = (b.min.x - r.origin.x) * r.inv_dir.x;
    let tx1 = (b.max.x - r.origin.x) * r.inv_dir.x;
    let ty0 = (b.min.y - r.origin.y) * r.inv_dir.y;
    let ty1 = (b.max.y - r.origin.y) * r.inv_dir.y;
    let tz0 = (b.min.z - r.origin.z) * r.inv_dir.z;
    let tz1 = (b.max.z - r.origin.z) * r.inv_dir.z;
    let tn = fmax(fmax(fmin(tx0, tx1), fmin(ty0, ty1)), fmax(fmin(tz0, tz1), tmin));
    let tf = fmin(fmin(fmax(tx0, tx1), fmax(ty0, ty1)), fmax(tz0, tz1)) * FAR_SLACK;
    (tn <= fmin(tf, tmax)).then_some(tn)
}

impl Bvh {
    pub fn root_bounds(&self) -> Aabb {
        self.nodes[0].bounds
    }

    pub fn leaf_count(&self) -> usize {
        self.nodes.iter().filter(|n| n.is_leaf()).count()
    }

    pub fn depth(&self) -> usize {
        let mut best = 0;
        let mut stack = vec![(0u32, 1usize)];
        while let Some((n, d)) = stack.pop() {
            best = best.max(d);
            let node = &self.nodes[n as usize];
            if !node.is_leaf() {
                stack.push((node.a, d + 1));
                stack.push((node.b, d + 1));
            }
        }
        best
    }

    /// Visits leaves whose boxes the ray enters no later than `*limit`,
    /// nearer children first. `leaf` receives the primitive indices of one
    /// leaf, may lower `*limit`, and returns `true` to stop early. Returns the
    /// number of nodes visited.
    #[inline]
    pub fn traverse(
        &self,
        slab: &RaySlab,
        tmin: f32,
        limit: &mut f32,
        mut leaf: impl FnMut(&[u32], &mut f32) -> bool,
    ) -> u64 {
        let mut visited = 0u64;
        let mut stack = [0u32; 64];
        let mut sp = 0usize;
        let mut spill: Vec<u32> = Vec::new();
        if slab_entry(&self.nodes[0].bounds, slab, tmin, *limit * LIMIT_SLACK).is_none() {
            return 1;
        }
        let mut current = 0u32;
        loop {
            visited += 1;
            let node = &self.nodes[current as usize];
            if node.is_leaf() {
                let range = node.a as usize..(node.a + node.count) as usize;
                if leaf(&self.order[range], limit) {
                    return visited;
                }
            } else {
                let tl = slab_entry(&self.nodes[node.a as usize].bounds, slab, tmin, *limit * LIMIT_SLACK);
                let tr = slab_entry(&self.nodes[node.b as usize].bounds, slab, tmin, *limit * LIMIT_SLACK);
                match (tl, tr) {
                    (Some(a), Some(b)) => {
                        let (near, far) = if a <= b { (node.a, node.b) } else { (node.b, node.a) };
                        if sp < stack.len() {
                            stack[sp] = far;
                            sp += 1;
                        } else {
                            spill.push(far);
                        }
                        current = near;
                        continue;
                    }
                    (Some(_), None) => {
                        current = node.a;
                        continue;
                    }
                    (None, Some(_)) => {
                        current = node.b;
                        continue;
                    }
                    (None, None) => {}
                }
            }
            // pop, re-checking boxes against the possibly lowered limit
            loop {
                let n = if let Some(n) = spill.pop() {
                    n
                } else if sp > 0 {
                    sp -= 1;
                    stack[sp]
                } else {
                    return visited;
                };
                if slab_entry(&self.nodes[n as usize].bounds, slab, tmin, *limit * LIMIT_SLACK).is_some() {
                    current = n;
                    break;
                }
            }
        }
    }
}
