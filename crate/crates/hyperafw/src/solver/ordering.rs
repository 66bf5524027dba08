//! Fill-reducing ordering by geometric nested dissection.
//!
//! Nodes are split at the coordinate median along the longer side of their
//! bounding box; nodes of the lower half adjacent to the upper half form the
//! separator, which is numbered after both halves.

use crate::mesh::Point;

const LEAF_SIZE: usize = 48;

/// Node adjacency in CSR form.
pub struct Graph {
    pub ptr: Vec<usize>,
    pub adj: Vec<usize>,
}

impl Graph {
    pub fn from_elements<'a, I>(n: usize, elements: I) -> Graph
    where
        I: IntoIterator<Item = &'a [usize]>,
    {
        let mut lists: Vec<Vec<usize>> = vec![Vec::new(); n];
        for e in elements {
            for &i in e {
                for &j in e {
                    if i != j {
                        lists[i].push(j);
                    }
                }
            }
        }
        let mut ptr = vec![0];
        let mut adj = Vec::new();
        for l in lists.iter_mut() {
            l.sort_unstable();
            l.dedup();
            adj.extend_from_slice(l);
            ptr.push(adj.len());
        }
        Graph { ptr, adj }
    }

    pub fn neighbors(&self, i: usize) -> &[usize] {
        &self.adj[self.ptr[i]..self.ptr[i + 1]]
    }
}

/// Returns the nodes in elimination order.
pub fn nested_dissection(coords: &[Point], graph: &Graph) -> Vec<usize> {
    let mut nodes: Vec<usize> = (0..coords.len()).collect();
    let mut side = vec![0u8; coords.len()];
    let mut out = Vec::with_capacity(coords.len());
    dissect(&mut nodes, coords, graph, &mut side, &mut out);
    out
}

fn dissect(nodes: &mut [usize], coords: &[Point], graph: &Graph, side: &mut [u8], out: &mut Vec<usize>) {
    if nodes.len() <= LEAF_SIZE {
        out.extend_from_slice(nodes);
        return;
    }
    let (mut lo, mut hi) = (Point::repeat(f64::INFINITY), Point::repeat(f64::NEG_INFINITY));
    for &i in nodes.iter() {
        lo = lo.inf(&coords[i]);
        hi = hi.sup(&coords[i]);
    }
    let axis = if hi.x - lo.x >= hi.y - lo.y { 0 } else { 1 };
    nodes.sort_unstable_by(|&a, &b| coords[a][axis].total_cmp(&coords[b][axis]).then(a.cmp(&b)));
    let mid = nodes.len() / 2;
    for &i in &nodes[..mid] {
        side[i] = 1;
    }
    for &i in &nodes[mid..] {
        side[i] = 2;
    }
    let mut left = Vec::with_capacity(mid);
    let mut sep = Vec::new();
    for &i in &nodes[..mid] {
        if graph.neighbors(i).iter().any(|&j| side[j] == 2) {
            sep.push(i);
        } else {
            left.push(i);
        }
    }
    let mut right: Vec<usize> = nodes[mid..].to_vec();
    for &i in nodes.iter() {
        side[i] = 0;
    }
    if left.is_empty() || right.is_empty() {
        out.extend_from_slice(nodes);
        return;
    }
    dissect(&mut left, coords, graph, side, out);
    dissect(&mut right, coords, graph, side, out);
    out.extend_from_slice(&sep);
}

////////////////////////////////////////////////////////////////////////////////
