use crate::domain::grid::UniformGrid;
use crate::domain::lgl::LglRule;
use crate::error::{Error, Result};

/// Regular periodic partition of the box into `prod M_d` rectangular elements,
/// each carrying the same tensor LGL grid.
#[derive(Debug, Clone)]
pub struct Partition {
    lengths: Vec<f64>,
    elements_per_dim: Vec<usize>,
    rule: LglRule,
}

/// One rectangular element with its mapped tensor LGL grid.
#[derive(Debug, Clone)]
pub struct Element {
    pub id: usize,
    pub index: [usize; 3],
    pub lower: [f64; 3],
    pub upper: [f64; 3],
    dim: usize,
    /// Mapped 1D node coordinates per dimension.
    pub nodes: Vec<Vec<f64>>,
    /// Mapped 1D weights per dimension (reference weights times `h/2`).
    pub weights: Vec<Vec<f64>>,
}

impl Partition {
    /// `lgl_points` is the number of LGL nodes per dimension (order + 1).
    pub fn new(
        grid: &UniformGrid,
        elements_per_dim: Vec<usize>,
        lgl_points: usize,
    ) -> Result<Self> {
        Self::with_lengths(grid.lengths().to_vec(), elements_per_dim, lgl_points)
    }

    pub fn with_lengths(
        lengths: Vec<f64>,
        elements_per_dim: Vec<usize>,
        lgl_points: usize,
    ) -> Result<Self> {
        if elements_per_dim.len() != lengths.len() {
            return Err(Error::SizeMismatch {
                expected: lengths.len(),
                got: elements_per_dim.len(),
            });
        }
        if elements_per_dim.contains(&0) {
            return Err(Error::Domain(
                "at least one element per dimension is required".into(),
            ));
        }
        if lgl_points < 2 {
            return Err(Error::InvalidOrder(lgl_points.saturating_sub(1)));
        }
        let rule = LglRule::new(lgl_points - 1)?;
        Ok(Self {
            lengths,
            elements_per_dim,
            rule,
        })
    }

    pub fn dim(&self) -> usize {
        self.lengths.len()
    }

    pub fn lengths(&self) -> &[f64] {
        &self.lengths
    }

    pub fn elements_per_dim(&self) -> &[usize] {
        &self.elements_per_dim
    }

    pub fn num_elements(&self) -> usize {
        self.elements_per_dim.iter().product()
    }

    pub fn rule(&self) -> &LglRule {
        &self.rule
    }

    /// LGL nodes per dimension on each element.
    pub fn lgl_points(&self) -> usize {
        self.rule.len()
    }

    /// Tensor LGL nodes per element.
    pub fn nodes_per_element(&self) -> usize {
        self.lgl_points().pow(self.dim() as u32)
    }

    pub fn element_size(&self, d: usize) -> f64 {
        self.lengths[d] / self.elements_per_dim[d] as f64
    }

    pub fn element_id(&self, index: &[usize]) -> usize {
        let mut id = 0;
        for d in (0..self.dim()).rev() {
            id = id * self.elements_per_dim[d] + index[d];
        }
        id
    }

    pub fn element_index(&self, mut id: usize) -> [usize; 3] {
        let mut idx = [0; 3];
        for d in 0..self.dim() {
            idx[d] = id % self.elements_per_dim[d];
            id /= self.elements_per_dim[d];
        }
        idx
    }

    /// Periodic neighbor across the face normal to `d`, in direction `step` (+1 or -1).
    pub fn neighbor(&self, id: usize, d: usize, step: isize) -> usize {
        let mut idx = self.element_index(id);
        let m = self.elements_per_dim[d] as isize;
        idx[d] = ((idx[d] as isize + step).rem_euclid(m)) as usize;
        self.element_id(&idx)
    }

    pub fn element(&self, id: usize) -> Element {
        let index = self.element_index(id);
        let dim = self.dim();
        let mut lower = [0.0; 3];
        let mut upper = [0.0; 3];
        let mut nodes = Vec::with_capacity(dim);
        let mut weights = Vec::with_capacity(dim);
        for d in 0..dim {
            let h = self.element_size(d);
            lower[d] = index[d] as f64 * h;
            upper[d] = lower[d] + h;
            let mid = 0.5 * (lower[d] + upper[d]);
            nodes.push(
                self.rule
                    .nodes()
                    .iter()
                    .map(|&t| mid + 0.5 * h * t)
                    .collect::<Vec<_>>(),
            );
            weights.push(
                self.rule
                    .weights()
                    .iter()
                    .map(|&w| 0.5 * h * w)
                    .collect::<Vec<_>>(),
            );
        }
        // pin endpoints exactly
        for d in 0..dim {
            let last = nodes[d].len() - 1;
            nodes[d][0] = lower[d];
            nodes[d][last] = upper[d];
        }
        Element {
            id,
            index,
            lower,
            upper,
            dim,
            nodes,
            weights,
        }
    }

    pub fn elements(&self) -> Vec<Element> {
        (0..self.num_elements())
            .map(|id| self.element(id))
            .collect()
    }

    /// Global per-dimension LGL coordinates: element nodes concatenated in
    /// element order (shared endpoints appear twice).
    pub fn global_lgl_coords(&self, d: usize) -> Vec<f64> {
        let p = self.lgl_points();
        let h = self.element_size(d);
        let mut out = Vec::with_capacity(p * self.elements_per_dim[d]);
        for e in 0..self.elements_per_dim[d] {
            let lo = e as f64 * h;
            for (j, &t) in self.rule.nodes().iter().enumerate() {
                let x = if j == 0 {
                    lo
                } else if j == p - 1 {
                    lo + h
                } else {
                    lo + 0.5 * h * (t + 1.0)
                };
                out.push(x);
            }
        }
        out
    }
}

impl Element {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn points_per_dim(&self) -> usize {
        self.nodes[0].len()
    }

    pub fn num_nodes(&self) -> usize {
        self.points_per_dim().pow(self.dim as u32)
    }

    pub fn size(&self, d: usize) -> f64 {
        self.upper[d] - self.lower[d]
    }

    pub fn volume(&self) -> f64 {
        (0..self.dim).map(|d| self.size(d)).product()
    }

    /// Boundary measure (perimeter / surface area; 2 in 1D).
    pub fn surface(&self) -> f64 {
        (0..self.dim)
            .map(|d| {
                2.0 * (0..self.dim)
                    .filter(|&k| k != d)
                    .map(|k| self.size(k))
                    .product::<f64>()
            })
            .sum()
    }

    pub fn node_multi_index(&self, mut flat: usize) -> [usize; 3] {
        let p = self.points_per_dim();
        let mut idx = [0; 3];
        for slot in idx.iter_mut().take(self.dim) {
            *slot = flat % p;
            flat /= p;
        }
        idx
    }

    pub fn node_flat_index(&self, idx: &[usize]) -> usize {
        let p = self.points_per_dim();
        let mut flat = 0;
        for d in (0..self.dim).rev() {
            flat = flat * p + idx[d];
        }
        flat
    }

    pub fn node(&self, flat: usize) -> [f64; 3] {
        let idx = self.node_multi_index(flat);
        let mut x = [0.0; 3];
        for d in 0..self.dim {
            x[d] = self.nodes[d][idx[d]];
        }
        x
    }

    /// Tensor quadrature weights, one per node.
    pub fn tensor_weights(&self) -> Vec<f64> {
        (0..self.num_nodes())
            .map(|flat| {
                let idx = self.node_multi_index(flat);
                (0..self.dim).map(|d| self.weights[d][idx[d]]).product()
            })
            .collect()
    }

    /// Node indices on the face normal to `d` (`upper` selects the high end),
    /// ordered by the tangential multi-index, with matching face weights.
    pub fn face(&self, d: usize, upper: bool) -> (Vec<usize>, Vec<f64>) {
        let p = self.points_per_dim();
        let fixed = if upper { p - 1 } else { 0 };
        let tangential: Vec<usize> = (0..self.dim).filter(|&k| k != d).collect();
        let count = p.pow(tangential.len() as u32);
        let mut nodes = Vec::with_capacity(count);
        let mut weights = Vec::with_capacity(count);
        for t in 0..count {
            let mut idx = [0; 3];
            idx[d] = fixed;
            let mut rem = t;
            let mut w = 1.0;
            for &k in &tangential {
                idx[k] = rem % p;
                rem /= p;
                w *= self.weights[k][idx[k]];
            }
            nodes.push(self.node_flat_index(&idx));
            weights.push(w);
        }
        (nodes, weights)
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        (0..self.dim).all(|d| x[d] >= self.lower[d] && x[d] <= self.upper[d])
    }
}
