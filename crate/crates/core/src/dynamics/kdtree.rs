//! Exact nearest-neighbour search over delay vectors, excluding temporal
//! neighbours.

/// Points stored row-major with a fixed dimension.
pub struct KdTree<'a> {
    points: &'a [f64],
    dim: usize,
    /// Point indices, permuted so every node covers a contiguous range.
    order: Vec<usize>,
    nodes: Vec<Node>,
}

enum Node {
    Leaf {
        start: usize,
        end: usize,
    },
    Split {
        axis: usize,
        value: f64,
        left: usize,
        right: usize,
    },
}

const LEAF_SIZE: usize = 12;

impl<'a> KdTree<'a> {
    pub fn new(points: &'a [f64], dim: usize) -> Self {
        assert!(dim > 0 && points.len().is_multiple_of(dim));
        let n = points.len() / dim;
        let mut tree = Self {
            points,
            dim,
            order: (0..n).collect(),
            nodes: Vec::with_capacity(2 * n / LEAF_SIZE + 1),
        };
        if n > 0 {
            tree.build(0, n);
        }
        tree
    }

    fn coord(&self, i: usize, axis: usize) -> f64 {
        self.points[i * self.dim + axis]
    }

    fn build(&mut self, start: usize, end: usize) -> usize {
        let id = self.nodes.len();
        if end - start <= LEAF_SIZE {
            self.nodes.push(Node::Leaf { start, end });
            return id;
        }
        // split on the axis of largest spread
        let mut axis = 0;
        let mut best = -1.0;
        for a in 0..self.dim {
            let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
            for &i in &self.order[start..end] {
                let v = self.coord(i, a);
                lo = lo.min(v);
                hi = hi.max(v);
            }
            if hi - lo > best {
                best = hi - lo;
                axis = a;
            }
        }
        if best <= 0.0 {
            self.nodes.push(Node::Leaf { start, end });
            return id;
        }
        let mid = (start + end) / 2;
        let (points, dim) = (self.points, self.dim);
        self.order[start..end].select_nth_unstable_by(mid - start, |&x, &y| {
            points[x * dim + axis].total_cmp(&points[y * dim + axis])
        });
        let value = self.coord(self.order[mid], axis);
        self.nodes.push(Node::Leaf { start, end });
        let left = self.build(start, mid);
        let right = self.build(mid, end);
        self.nodes[id] = Node::Split {
            axis,
            value,
            left,
            right,
        };
        id
    }

    fn dist2(&self, i: usize, q: &[f64]) -> f64 {
        let p = &self.points[i * self.dim..(i + 1) * self.dim];
        p.iter().zip(q).map(|(a, b)| (a - b) * (a - b)).sum()
    }

    /// Nearest stored point to point `query` whose index differs by more
    /// than `exclude` (Theiler window). Returns (index, squared distance).
    pub fn nearest_excluding(&self, query: usize, exclude: usize) -> Option<(usize, f64)> {
        if self.nodes.is_empty() {
            return None;
        }
        let q = &self.points[query * self.dim..(query + 1) * self.dim];
        let mut best = (usize::MAX, f64::INFINITY);
        self.search(0, q, query, exclude, &mut best);
        (best.0 != usize::MAX).then_some(best)
    }

    fn search(&self, node: usize, q: &[f64], query: usize, exclude: usize, best: &mut (usize, f64)) {
        match self.nodes[node] {
            Node::Leaf { start, end } => {
                for &i in &self.order[start..end] {
                    if i.abs_diff(query) <= exclude {
                        continue;
                    }
                    let d = self.dist2(i, q);
                    if d < best.1 || (d == best.1 && i < best.0) {
                        *best = (i, d);
                    }
                }
            }
            Node::Split {
                axis,
                value,
                left,
                right,
            } => {
                let diff = q[axis] - value;
                let (near, far) = if diff < 0.0 { (left, right) } else { (right, left) };
                self.search(near, q, query, exclude, best);
                if diff * diff <= best.1 {
                    self.search(far, q, query, exclude, best);
                }
            }
        }
    }
}

/// Brute-force reference for [`KdTree::nearest_excluding`].
pub fn nearest_brute_force(points: &[f64], dim: usize, query: usize, exclude: usize) -> Option<(usize, f64)> {
    let q = &points[query * dim..(query + 1) * dim];
    let mut best = (usize::MAX, f64::INFINITY);
    for i in 0..points.len() / dim {
        if i.abs_diff(query) <= exclude {
            continue;
        }
        let d: f64 = points[i * dim..(i + 1) * dim]
            .iter()
            .zip(q)
            .map(|(a, b)| (a - b) * (a - b))
            .sum();
        if d < best.1 {
            best = (i, d);
        }
    }
    (best.0 != usize::MAX).then_some(best)
}
