//! Axis-aligned bounding volume hierarchy over arbitrary primitives.
//!
//! The tree only stores boxes and a primitive permutation; callers keep the
//! primitive data and drive traversal themselves, so one structure serves
//! triangle distance queries, ray casts, the silhouette edge set and the
//! Robin coefficient bounds.

use glam::DVec3;

const LEAF_SIZE: usize = 4;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Aabb {
    pub min: DVec3,
    pub max: DVec3,
}

impl Aabb {
    pub const EMPTY: Aabb = Aabb {
        min: DVec3::splat(f64::INFINITY),
        max: DVec3::splat(f64::NEG_INFINITY),
    };

    pub fn from_points<'a>(points: impl IntoIterator<Item = &'a DVec3>) -> Self {
        points.into_iter().fold(Self::EMPTY, |b, p| b.grow(*p))
    }

    pub fn grow(self, p: DVec3) -> Self {
        Aabb {
            min: self.min.min(p),
            max: self.max.max(p),
        }
    }

    pub fn union(self, other: Aabb) -> Self {
        Aabb {
            min: self.min.min(other.min),
            max: self.max.max(other.max),
        }
    }

    pub fn center(&self) -> DVec3 {
        0.5 * (self.min + self.max)
    }

    pub fn extent(&self) -> DVec3 {
        self.max - self.min
    }

    pub fn diagonal(&self) -> f64 {
        self.extent().length()
    }

    pub fn contains(&self, p: DVec3) -> bool {
        p.cmpge(self.min).all() && p.cmple(self.max).all()
    }

    /// Squared distance from `p` to the box (zero inside).
    pub fn distance_squared(&self, p: DVec3) -> f64 {
        let d = (self.min - p).max(p - self.max).max(DVec3::ZERO);
        d.length_squared()
    }

    /// Distance from `p` to the farthest point of the box.
    pub fn max_distance(&self, p: DVec3) -> f64 {
        let d = (p - self.min).abs().max((p - self.max).abs());
        d.length()
    }

    /// Slab test. Returns the parametric entry distance if the ray overlaps the
    /// box within `[t_min, t_max]`.
    pub fn intersect_ray(&self, origin: DVec3, inv_dir: DVec3, t_min: f64, t_max: f64) -> Option<f64> {
        let t0 = (self.min - origin) * inv_dir;
        let t1 = (self.max - origin) * inv_dir;
        let lo = t0.min(t1);
        let hi = t0.max(t1);
        // NaN from 0 * inf lands in max_element/min_element as the other operand.
        let enter = lo.max_element().max(t_min);
        let exit = hi.min_element().min(t_max);
        (enter <= exit).then_some(enter)
    }
}

#[derive(Clone, Copy, Debug)]
pub struct BvhNode {
    pub bounds: Aabb,
    /// Leaf: first index into the primitive order. Interior: index of the
    /// second child (the first child is always the next node).
    pub offset: u32,
    /// Number of primitives for leaves, zero for interior nodes.
    pub count: u32,
}

impl BvhNode {
    pub fn is_leaf(&self) -> bool {
        self.count > 0
    }
}

#[derive(Clone, Debug)]
pub struct Bvh {
    nodes: Vec<BvhNode>,
    order: Vec<u32>,
    /// Position of each primitive in `order`.
    slot: Vec<u32>,
}

impl Bvh {
    /// Builds a tree from per-primitive boxes with a median split along the
    /// widest centroid axis.
    pub fn build(boxes: &[Aabb]) -> Self {
        let mut order: Vec<u32> = (0..boxes.len() as u32).collect();
        let centroids: Vec<DVec3> = boxes.iter().map(Aabb::center).collect();
        let mut nodes = Vec::with_capacity(2 * boxes.len() / LEAF_SIZE + 1);
        if !boxes.is_empty() {
            build_recursive(boxes, &centroids, &mut order, 0, &mut nodes);
        }
        let mut slot = vec![0; order.len()];
        for (k, &p) in order.iter().enumerate() {
            slot[p as usize] = k as u32;
        }
        Bvh { nodes, order, slot }
    }

    /// True if `primitive` lies below `node_index`.
    pub fn subtree_contains(&self, node_index: usize, primitive: u32) -> bool {
        let (start, end) = self.subtree_range(node_index);
        (start..end).contains(&(self.slot[primitive as usize] as usize))
    }

    pub fn nodes(&self) -> &[BvhNode] {
        &self.nodes
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Primitive indices held by a leaf.
    pub fn leaf_primitives(&self, node: &BvhNode) -> &[u32] {
        &self.order[node.offset as usize..(node.offset + node.count) as usize]
    }

    /// All primitives below `node_index`, in tree order.
    pub fn subtree_primitives(&self, node_index: usize) -> &[u32] {
        let (start, end) = self.subtree_range(node_index);
        &self.order[start..end]
    }

    fn subtree_range(&self, node_index: usize) -> (usize, usize) {
        let node = &self.nodes[node_index];
        if node.is_leaf() {
            let s = node.offset as usize;
            return (s, s + node.count as usize);
        }
        let (start, _) = self.subtree_range(node_index + 1);
        let (_, end) = self.subtree_range(node.offset as usize);
        (start, end)
    }

    /// Computes one value per node from the primitives it contains.
    pub fn per_node<T>(&self, mut f: impl FnMut(&[u32]) -> T) -> Vec<T> {
        (0..self.nodes.len())
            .map(|i| f(self.subtree_primitives(i)))
            .collect()
    }
}

fn build_recursive(
    boxes: &[Aabb],
    centroids: &[DVec3],
    order: &mut [u32],
    offset: usize,
    nodes: &mut Vec<BvhNode>,
) -> usize {
    let bounds = order
        .iter()
        .fold(Aabb::EMPTY, |b, &i| b.union(boxes[i as usize]));
    let index = nodes.len();
    if order.len() <= LEAF_SIZE {
        nodes.push(BvhNode {
            bounds,
            offset: offset as u32,
            count: order.len() as u32,
        });
        return index;
    }

    let cbounds = Aabb::from_points(order.iter().map(|&i| &centroids[i as usize]));
    let ext = cbounds.extent();
    let axis = if ext.x >= ext.y && ext.x >= ext.z {
        0
    } else if ext.y >= ext.z {
        1
    } else {
        2
    };
    let mid = order.len() / 2;
    order.select_nth_unstable_by(mid, |&a, &b| {
        centroids[a as usize][axis]
            .total_cmp(&centroids[b as usize][axis])
            .then(a.cmp(&b))
    });

    nodes.push(BvhNode {
        bounds,
        offset: 0,
        count: 0,
    });
    let (left, right) = order.split_at_mut(mid);
    build_recursive(boxes, centroids, left, offset, nodes);
    let right_index = build_recursive(boxes, centroids, right, offset + mid, nodes);
    nodes[index].offset = right_index as u32;
    index
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit_boxes(n: usize) -> Vec<Aabb> {
        (0..n)
            .map(|i| {
                let p = DVec3::new(i as f64, (i * 7 % 5) as f64, (i * 3 % 11) as f64);
                Aabb {
                    min: p,
                    max: p + DVec3::ONE,
                }
            })
            .collect()
    }

    #[test]
    fn every_primitive_appears_once() {
        let boxes = unit_boxes(37);
        let bvh = Bvh::build(&boxes);
        let mut seen: Vec<u32> = bvh.subtree_primitives(0).to_vec();
        seen.sort();
        assert_eq!(seen, (0..37).collect::<Vec<_>>());
    }

    #[test]
    fn node_bounds_contain_children() {
        let boxes = unit_boxes(50);
        let bvh = Bvh::build(&boxes);
        for (i, node) in bvh.nodes().iter().enumerate() {
            for &p in bvh.subtree_primitives(i) {
                let b = boxes[p as usize];
                assert!(node.bounds.contains(b.min) && node.bounds.contains(b.max));
            }
        }
    }

    #[test]
    fn box_distance_and_slab() {
        let b = Aabb {
            min: DVec3::ZERO,
            max: DVec3::ONE,
        };
        assert_eq!(b.distance_squared(DVec3::new(0.5, 0.5, 0.5)), 0.0);
        assert!((b.distance_squared(DVec3::new(2.0, 0.5, 0.5)) - 1.0).abs() < 1e-15);
        assert!((b.max_distance(DVec3::ZERO) - 3f64.sqrt()).abs() < 1e-15);
        let o = DVec3::new(-1.0, 0.5, 0.5);
        let d = DVec3::X;
        assert_eq!(b.intersect_ray(o, d.recip(), 0.0, 10.0), Some(1.0));
        assert_eq!(b.intersect_ray(o, d.recip(), 0.0, 0.5), None);
    }
}
