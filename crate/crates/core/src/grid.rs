//! Box domains and the uniform tensor grids used to discretize them.

use serde::{Deserialize, Serialize};

use crate::error::{input, Result};

/// Fractional cell offsets closer than this to a node are snapped onto it.
/// Keeps points that lie on a grid line (up to rounding) from picking up the
/// neighbouring line in an interpolation stencil.
const SNAP: f64 = 1e-9;

/// An axis-aligned box `[a_1, b_1] x ... x [a_n, b_n]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoxDomain {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

impl BoxDomain {
    pub fn new(lower: Vec<f64>, upper: Vec<f64>) -> Result<Self> {
        if lower.is_empty() || lower.len() > 3 || lower.len() != upper.len() {
            return input(format!(
                "box needs 1 to 3 axes with matching bounds, got {} lower / {} upper",
                lower.len(),
                upper.len()
            ));
        }
        for (axis, (a, b)) in lower.iter().zip(&upper).enumerate() {
            if !(a.is_finite() && b.is_finite() && a < b) {
                return input(format!("axis {axis}: need finite a < b, got [{a}, {b}]"));
            }
        }
        Ok(Self { lower, upper })
    }

    pub fn unit(dim: usize) -> Self {
        Self {
            lower: vec![0.0; dim],
            upper: vec![1.0; dim],
        }
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    pub fn extent(&self, axis: usize) -> f64 {
        self.upper[axis] - self.lower[axis]
    }

    pub fn volume(&self) -> f64 {
        (0..self.dim()).map(|k| self.extent(k)).product()
    }

    /// Membership with a relative slack of `rel_tol` times each extent.
    pub fn contains(&self, x: &[f64], rel_tol: f64) -> bool {
        x.len() == self.dim()
            && x.iter().enumerate().all(|(k, &xi)| {
                let slack = rel_tol * self.extent(k);
                xi >= self.lower[k] - slack && xi <= self.upper[k] + slack
            })
    }

    /// True when `other` lies inside `self` (up to rounding).
    pub fn encloses(&self, other: &BoxDomain) -> bool {
        other.dim() == self.dim()
            && self.contains(&other.lower, 1e-12)
            && self.contains(&other.upper, 1e-12)
    }
}

/// Uniform tensor grid on a box, nodes in row-major order (last axis fastest).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoxGrid {
    domain: BoxDomain,
    counts: Vec<usize>,
}

/// Multilinear interpolation weights: up to `2^n` nodes, zero weights dropped.
#[derive(Debug, Clone, Copy)]
pub struct Stencil {
    entries: [(usize, f64); 8],
    len: usize,
}

impl Stencil {
    pub fn entries(&self) -> &[(usize, f64)] {
        &self.entries[..self.len]
    }

    /// Interpolate nodal values; `+inf` on any node with positive weight wins.
    pub fn apply(&self, values: &[f64]) -> f64 {
        self.entries().iter().map(|&(i, w)| w * values[i]).sum()
    }
}

impl BoxGrid {
    pub fn new(lower: Vec<f64>, upper: Vec<f64>, counts: Vec<usize>) -> Result<Self> {
        let domain = BoxDomain::new(lower, upper)?;
        Self::on(domain, counts)
    }

    pub fn on(domain: BoxDomain, counts: Vec<usize>) -> Result<Self> {
        if counts.len() != domain.dim() {
            return input(format!(
                "grid has {} axes but {} sample counts",
                domain.dim(),
                counts.len()
            ));
        }
        if let Some(&m) = counts.iter().find(|&&m| m < 2) {
            return input(format!("each axis needs at least 2 nodes, got {m}"));
        }
        Ok(Self { domain, counts })
    }

    /// `m x m` grid on the unit square.
    pub fn unit_square(m: usize) -> Self {
        Self::on(BoxDomain::unit(2), vec![m, m]).expect("m >= 2")
    }

    pub fn domain(&self) -> &BoxDomain {
        &self.domain
    }

    pub fn dim(&self) -> usize {
        self.counts.len()
    }

    pub fn counts(&self) -> &[usize] {
        &self.counts
    }

    pub fn lower(&self) -> &[f64] {
        &self.domain.lower
    }

    pub fn upper(&self) -> &[f64] {
        &self.domain.upper
    }

    /// Number of nodes.
    pub fn len(&self) -> usize {
        self.counts.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn spacing(&self, axis: usize) -> f64 {
        self.domain.extent(axis) / (self.counts[axis] - 1) as f64
    }

    pub fn min_spacing(&self) -> f64 {
        (0..self.dim())
            .map(|k| self.spacing(k))
            .fold(f64::INFINITY, f64::min)
    }

    pub fn cell_volume(&self) -> f64 {
        (0..self.dim()).map(|k| self.spacing(k)).product()
    }

    /// Coordinate of node `j` on `axis`. Computed as `a + (b-a) j/(m-1)` so
    /// that nodes which are exactly representable (e.g. the midpoint of a
    /// symmetric box) come out exact.
    pub fn coordinate(&self, axis: usize, j: usize) -> f64 {
        let m = self.counts[axis];
        let (a, b) = (self.domain.lower[axis], self.domain.upper[axis]);
        if j + 1 == m {
            b
        } else {
            a + (b - a) * j as f64 / (m - 1) as f64
        }
    }

    pub fn coordinates(&self, axis: usize) -> Vec<f64> {
        (0..self.counts[axis])
            .map(|j| self.coordinate(axis, j))
            .collect()
    }

    pub fn strides(&self) -> Vec<usize> {
        let n = self.dim();
        let mut strides = vec![1; n];
        for k in (0..n - 1).rev() {
            strides[k] = strides[k + 1] * self.counts[k + 1];
        }
        strides
    }

    pub fn multi_index(&self, mut index: usize) -> Vec<usize> {
        let mut out = vec![0; self.dim()];
        for k in (0..self.dim()).rev() {
            out[k] = index % self.counts[k];
            index /= self.counts[k];
        }
        out
    }

    pub fn linear_index(&self, multi: &[usize]) -> usize {
        multi
            .iter()
            .zip(&self.counts)
            .fold(0, |acc, (&j, &m)| acc * m + j)
    }

    pub fn node(&self, index: usize) -> Vec<f64> {
        let mut x = vec![0.0; self.dim()];
        self.node_into(index, &mut x);
        x
    }

    pub fn node_into(&self, mut index: usize, x: &mut [f64]) {
        for k in (0..self.dim()).rev() {
            let j = index % self.counts[k];
            index /= self.counts[k];
            x[k] = self.coordinate(k, j);
        }
    }

    /// All node coordinates, flattened (`dim` entries per node).
    pub fn node_table(&self) -> Vec<f64> {
        let n = self.dim();
        let mut out = vec![0.0; n * self.len()];
        for (i, chunk) in out.chunks_mut(n).enumerate() {
            self.node_into(i, chunk);
        }
        out
    }

    /// Tensor-product trapezoid weights. They sum to the box volume.
    pub fn trapezoid_weights(&self) -> Vec<f64> {
        let per_axis: Vec<Vec<f64>> = (0..self.dim())
            .map(|k| {
                let h = self.spacing(k);
                let m = self.counts[k];
                (0..m)
                    .map(|j| if j == 0 || j + 1 == m { 0.5 * h } else { h })
                    .collect()
            })
            .collect();
        (0..self.len())
            .map(|i| {
                self.multi_index(i)
                    .iter()
                    .enumerate()
                    .map(|(k, &j)| per_axis[k][j])
                    .product()
            })
            .collect()
    }

    /// The grid with every cell bisected along every axis (`2m - 1` nodes).
    pub fn refined(&self) -> BoxGrid {
        BoxGrid {
            domain: self.domain.clone(),
            counts: self.counts.iter().map(|m| 2 * m - 1).collect(),
        }
    }

    pub fn is_refinement_of(&self, coarse: &BoxGrid) -> bool {
        self.domain == coarse.domain
            && self
                .counts
                .iter()
                .zip(&coarse.counts)
                .all(|(&f, &c)| f == 2 * c - 1)
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        self.domain.contains(x, 1e-9)
    }

    /// Multilinear interpolation stencil at `x`, or `None` outside the box.
    pub fn stencil(&self, x: &[f64]) -> Option<Stencil> {
        if !self.contains(x) {
            return None;
        }
        let strides = self.strides();
        let mut entries = [(0usize, 0.0f64); 8];
        entries[0] = (0, 1.0);
        let mut len = 1;
        for k in 0..self.dim() {
            let m = self.counts[k];
            let s = ((x[k] - self.domain.lower[k]) / self.spacing(k)).clamp(0.0, (m - 1) as f64);
            let mut j = s.floor() as usize;
            let mut frac = s - j as f64;
            if frac > 1.0 - SNAP {
                j += 1;
                frac = 0.0;
            } else if frac < SNAP {
                frac = 0.0;
            }
            let j = j.min(m - 1);
            if frac == 0.0 {
                for e in entries.iter_mut().take(len) {
                    e.0 += j * strides[k];
                }
            } else {
                for t in 0..len {
                    let (idx, w) = entries[t];
                    entries[t] = (idx + j * strides[k], w * (1.0 - frac));
                    entries[t + len] = (idx + (j + 1) * strides[k], w * frac);
                }
                len *= 2;
            }
        }
        Some(Stencil { entries, len })
    }
}
