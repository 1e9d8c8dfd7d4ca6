use super::mesh::TriangleMesh;
use super::triangle::{closest_point_on_triangle, Feature};
use crate::{Error, Result, Vec3};

const MAX_LEAF: usize = 4;
const BINS: usize = 16;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Aabb {
    pub min: Vec3,
    pub max: Vec3,
}

impl Aabb {
    pub fn empty() -> Self {
        Self {
            min: Vec3::repeat(f64::INFINITY),
            max: Vec3::repeat(f64::NEG_INFINITY),
        }
    }

    pub fn from_points(points: &[Vec3]) -> Self {
        let mut b = Self::empty();
        for p in points {
            b.grow_point(p);
        }
        b
    }

    pub fn grow_point(&mut self, p: &Vec3) {
        self.min = self.min.inf(p);
        self.max = self.max.sup(p);
    }

    pub fn grow(&mut self, other: &Aabb) {
        self.min = self.min.inf(&other.min);
        self.max = self.max.sup(&other.max);
    }

    pub fn contains(&self, other: &Aabb) -> bool {
        (0..3).all(|k| self.min[k] <= other.min[k] && other.max[k] <= self.max[k])
    }

    pub fn is_empty(&self) -> bool {
        (0..3).any(|k| self.min[k] > self.max[k])
    }

    pub fn extent(&self) -> Vec3 {
        self.max - self.min
    }

    pub fn center(&self) -> Vec3 {
        0.5 * (self.min + self.max)
    }

    pub fn surface_area(&self) -> f64 {
        if self.is_empty() {
            return 0.0;
        }
        let e = self.extent();
        2.0 * (e.x * e.y + e.y * e.z + e.z * e.x)
    }

    /// Squared distance from `p` to the box (zero inside).
    pub fn distance_squared(&self, p: &Vec3) -> f64 {
        let mut d2 = 0.0;
        for k in 0..3 {
            let v = if p[k] < self.min[k] {
                self.min[k] - p[k]
            } else if p[k] > self.max[k] {
                p[k] - self.max[k]
            } else {
                0.0
            };
            d2 += v * v;
        }
        d2
    }
}

/// Interior nodes have `count == 0` and children at `first` and `first + 1`;
/// leaves cover `order[first..first + count]`.
#[derive(Debug, Clone, Copy)]
pub struct BvhNode {
    pub aabb: Aabb,
    pub first: u32,
    pub count: u32,
}

impl BvhNode {
    pub fn is_leaf(&self) -> bool {
        self.count > 0
    }
}

/// Bounding volume hierarchy over the triangles of one mesh, built with
/// binned SAH splits and at most four triangles per leaf.
#[derive(Debug, Clone)]
pub struct Bvh {
    nodes: Vec<BvhNode>,
    order: Vec<u32>,
}

#[derive(Debug, Clone, Copy)]
pub struct ClosestHit {
    pub point: Vec3,
    pub distance: f64,
    pub triangle: usize,
    pub barycentric: [f64; 3],
    pub feature: Feature,
}

impl Bvh {
    pub fn build(mesh: &TriangleMesh) -> Result<Self> {
        let n = mesh.triangle_count();
        if n == 0 {
            return Err(Error::EmptyMesh);
        }
        let bounds: Vec<Aabb> = (0..n).map(|t| Aabb::from_points(&mesh.corners(t))).collect();
        let centroids: Vec<Vec3> = bounds.iter().map(Aabb::center).collect();
        let mut order: Vec<u32> = (0..n as u32).collect();
        let mut nodes = Vec::with_capacity(2 * n / MAX_LEAF + 1);

        nodes.push(BvhNode {
            aabb: Aabb::empty(),
            first: 0,
            count: 0,
        });
        let mut stack = vec![(0usize, 0usize, n)];
        while let Some((idx, start, end)) = stack.pop() {
            let mut aabb = Aabb::empty();
            let mut cbox = Aabb::empty();
            for &t in &order[start..end] {
                aabb.grow(&bounds[t as usize]);
                cbox.grow_point(&centroids[t as usize]);
            }
            let count = end - start;
            if count <= MAX_LEAF {
                nodes[idx] = BvhNode {
                    aabb,
                    first: start as u32,
                    count: count as u32,
                };
                continue;
            }

            let mid = sah_partition(&mut order[start..end], &bounds, &centroids, &cbox)
                .map(|m| start + m)
                .unwrap_or_else(|| {
                    // coincident centroids: split by position in the order
                    start + count / 2
                });

            let left = nodes.len();
            let placeholder = BvhNode {
                aabb: Aabb::empty(),
                first: 0,
                count: 0,
            };
            nodes.push(placeholder);
            nodes.push(placeholder);
            nodes[idx] = BvhNode {
                aabb,
                first: left as u32,
                count: 0,
            };
            stack.push((left + 1, mid, end));
            stack.push((left, start, mid));
        }

        Ok(Self { nodes, order })
    }

    pub fn nodes(&self) -> &[BvhNode] {
        &self.nodes
    }

    /// Triangle indices in leaf order.
    pub fn order(&self) -> &[u32] {
        &self.order
    }

    pub fn root_aabb(&self) -> Aabb {
        self.nodes[0].aabb
    }

    pub fn leaf_triangles(&self, node: &BvhNode) -> &[u32] {
        &self.order[node.first as usize..(node.first + node.count) as usize]
    }

    pub fn size_bytes(&self) -> usize {
        self.nodes.len() * std::mem::size_of::<BvhNode>() + self.order.len() * 4
    }

    pub fn closest_point(&self, mesh: &TriangleMesh, q: &Vec3) -> ClosestHit {
        let mut best = ClosestHit {
            point: Vec3::zeros(),
            distance: f64::INFINITY,
            triangle: usize::MAX,
            barycentric: [0.0; 3],
            feature: Feature::Face,
        };
        let mut best_d2 = f64::INFINITY;
        let mut stack: Vec<u32> = Vec::with_capacity(64);
        stack.push(0);

        while let Some(i) = stack.pop() {
            let node = &self.nodes[i as usize];
            if node.aabb.distance_squared(q) >= best_d2 {
                continue;
            }
            if node.is_leaf() {
                for &t in self.leaf_triangles(node) {
                    let [a, b, c] = mesh.corners(t as usize);
                    let tp = closest_point_on_triangle(q, &a, &b, &c);
                    let d2 = (q - tp.point).norm_squared();
                    if d2 < best_d2 {
                        best_d2 = d2;
                        best = ClosestHit {
                            point: tp.point,
                            distance: 0.0,
                            triangle: t as usize,
                            barycentric: tp.barycentric,
                            feature: tp.feature,
                        };
                    }
                }
            } else {
                let (l, r) = (node.first, node.first + 1);
                let dl = self.nodes[l as usize].aabb.distance_squared(q);
                let dr = self.nodes[r as usize].aabb.distance_squared(q);
                if dl <= dr {
                    stack.push(r);
                    stack.push(l);
                } else {
                    stack.push(l);
                    stack.push(r);
                }
            }
        }
        best.distance = (q - best.point).norm();
        best
    }
}

/// Partitions `order` at the cheapest binned SAH plane; returns the split
/// offset, or `None` when no plane separates the centroids.
fn sah_partition(
    order: &mut [u32],
    bounds: &[Aabb],
    centroids: &[Vec3],
    cbox: &Aabb,
) -> Option<usize> {
    let extent = cbox.extent();
    let mut best: Option<(f64, usize, usize)> = None;

    for axis in 0..3 {
        if extent[axis] <= 0.0 {
            continue;
        }
        let scale = BINS as f64 / extent[axis];
        let bin_of = |t: u32| -> usize {
            (((centroids[t as usize][axis] - cbox.min[axis]) * scale) as usize).min(BINS - 1)
        };

        let mut bin_box = [Aabb::empty(); BINS];
        let mut bin_count = [0usize; BINS];
        for &t in order.iter() {
            let b = bin_of(t);
            bin_box[b].grow(&bounds[t as usize]);
            bin_count[b] += 1;
        }

        let mut right_area = [0.0; BINS];
        let mut right_count = [0usize; BINS];
        let mut acc = Aabb::empty();
        let mut cnt = 0;
        for b in (1..BINS).rev() {
            acc.grow(&bin_box[b]);
            cnt += bin_count[b];
            right_area[b] = acc.surface_area();
            right_count[b] = cnt;
        }

        let mut acc = Aabb::empty();
        let mut cnt = 0;
        for split in 1..BINS {
            acc.grow(&bin_box[split - 1]);
            cnt += bin_count[split - 1];
            if cnt == 0 || right_count[split] == 0 {
                continue;
            }
            let cost = acc.surface_area() * cnt as f64 + right_area[split] * right_count[split] as f64;
            if best.is_none_or(|(c, _, _)| cost < c) {
                best = Some((cost, axis, split));
            }
        }
    }

    let (_, axis, split) = best?;
    let scale = BINS as f64 / extent[axis];
    let mut mid = 0;
    for i in 0..order.len() {
        let t = order[i];
        let b = (((centroids[t as usize][axis] - cbox.min[axis]) * scale) as usize).min(BINS - 1);
        if b < split {
            order.swap(i, mid);
            mid += 1;
        }
    }
    Some(mid)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::shapes;

    fn single_triangle() -> TriangleMesh {
        TriangleMesh::new(
            vec![
                Vec3::new(0.0, 0.0, 0.0),
                Vec3::new(1.0, 0.0, 0.0),
                Vec3::new(0.0, 1.0, 0.0),
            ],
            vec![[0, 1, 2]],
        )
        .unwrap()
    }

    #[test]
    fn one_triangle_is_a_single_leaf() {
        let bvh = Bvh::build(&single_triangle()).unwrap();
        assert_eq!(bvh.nodes().len(), 1);
        assert!(bvh.nodes()[0].is_leaf());
    }

    #[test]
    fn cube_nodes_inside_root() {
        let cube = shapes::cube(Vec3::zeros(), 1.0);
        let bvh = Bvh::build(&cube).unwrap();
        let root = bvh.root_aabb();
        assert!(bvh.nodes().iter().all(|n| root.contains(&n.aabb)));
        assert!(bvh.nodes().iter().filter(|n| n.is_leaf()).all(|n| n.count <= 4));
    }

    #[test]
    fn single_triangle_queries() {
        let mesh = single_triangle();
        let bvh = Bvh::build(&mesh).unwrap();
        let hit = bvh.closest_point(&mesh, &Vec3::new(0.25, 0.25, 1.0));
        assert!((hit.point - Vec3::new(0.25, 0.25, 0.0)).norm() < 1e-15);
        assert!((hit.distance - 1.0).abs() < 1e-15);
        let hit = bvh.closest_point(&mesh, &Vec3::new(2.0, 0.0, 0.0));
        assert_eq!(hit.point, Vec3::new(1.0, 0.0, 0.0));
        assert!((hit.distance - 1.0).abs() < 1e-15);
    }

    #[test]
    fn sphere_distance_along_axis() {
        let s = shapes::icosphere(3, 1.0);
        let bvh = Bvh::build(&s).unwrap();
        let hit = bvh.closest_point(&s, &Vec3::new(2.0, 0.0, 0.0));
        assert!((hit.distance - 1.0).abs() < 5e-3);
    }
}
