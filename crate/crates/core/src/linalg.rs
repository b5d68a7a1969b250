//! Banded Cholesky factorisation used to apply Riesz-map preconditioners.

use crate::mesh::MeshDomain;

/// Symmetric positive definite matrix in lower band storage:
/// `band[i * (bw + 1) + k]` holds entry `(i, i - k)`.
#[derive(Debug, Clone)]
pub(crate) struct BandMatrix {
    n: usize,
    bw: usize,
    band: Vec<f64>,
}

impl BandMatrix {
    pub(crate) fn zeros(n: usize, bw: usize) -> Self {
        Self { n, bw, band: vec![0.0; n * (bw + 1)] }
    }

    #[inline]
    fn idx(&self, i: usize, k: usize) -> usize {
        i * (self.bw + 1) + k
    }

    /// Adds `v` to entry `(i, j)`; the mirrored entry is implied.
    #[inline]
    pub(crate) fn add(&mut self, i: usize, j: usize, v: f64) {
        let (r, c) = if i >= j { (i, j) } else { (j, i) };
        debug_assert!(r - c <= self.bw);
        let k = self.idx(r, r - c);
        self.band[k] += v;
    }

    /// `x^T A x`.
    pub(crate) fn quadratic_form(&self, x: &[f64]) -> f64 {
        let mut acc = 0.0;
        for i in 0..self.n {
            let row = &self.band[self.idx(i, 0)..self.idx(i, 0) + self.bw + 1];
            acc += row[0] * x[i] * x[i];
            for (k, a) in row.iter().enumerate().skip(1).take(i.min(self.bw)) {
                acc += 2.0 * a * x[i] * x[i - k];
            }
        }
        acc
    }

    #[cfg(test)]
    pub(crate) fn get(&self, i: usize, j: usize) -> f64 {
        let (r, c) = if i >= j { (i, j) } else { (j, i) };
        if r - c > self.bw {
            0.0
        } else {
            self.band[self.idx(r, r - c)]
        }
    }

    /// In-place Cholesky. Returns `None` if a pivot is not positive.
    pub(crate) fn factor(mut self) -> Option<BandCholesky> {
        let (n, bw) = (self.n, self.bw);
        for i in 0..n {
            let j0 = i.saturating_sub(bw);
            for j in j0..=i {
                let mut s = self.band[self.idx(i, i - j)];
                let k0 = j0.max(j.saturating_sub(bw));
                for k in k0..j {
                    s -= self.band[self.idx(i, i - k)] * self.band[self.idx(j, j - k)];
                }
                if j == i {
                    if !(s > 0.0) || !s.is_finite() {
                        return None;
                    }
                    let id = self.idx(i, 0);
                    self.band[id] = s.sqrt();
                } else {
                    let d = self.band[self.idx(j, 0)];
                    let id = self.idx(i, i - j);
                    self.band[id] = s / d;
                }
            }
        }
        Some(BandCholesky { l: self })
    }
}

#[derive(Debug, Clone)]
pub(crate) struct BandCholesky {
    l: BandMatrix,
}

impl BandCholesky {
    pub(crate) fn solve(&self, rhs: &[f64]) -> Vec<f64> {
        let l = &self.l;
        let (n, bw) = (l.n, l.bw);
        let mut y = rhs.to_vec();
        for i in 0..n {
            let mut s = y[i];
            for k in i.saturating_sub(bw)..i {
                s -= l.band[l.idx(i, i - k)] * y[k];
            }
            y[i] = s / l.band[l.idx(i, 0)];
        }
        for i in (0..n).rev() {
            let mut s = y[i];
            for k in (i + 1)..n.min(i + bw + 1) {
                s -= l.band[l.idx(k, k - i)] * y[k];
            }
            y[i] = s / l.band[l.idx(i, 0)];
        }
        y
    }
}

/// Weighted stiffness plus lumped mass, `sum_T w_T (grad phi_i, grad phi_j)_T + m_i delta_ij`,
/// used as the metric of preconditioned descent.
#[derive(Debug, Clone)]
pub(crate) struct Preconditioner {
    matrix: BandMatrix,
    chol: BandCholesky,
}

impl Preconditioner {
    pub(crate) fn assemble(mesh: &MeshDomain, cell_weights: &[f64], mass: &[f64]) -> Self {
        let mut a = BandMatrix::zeros(mesh.num_nodes(), mesh.half_bandwidth());
        for (t, cell) in mesh.cells().iter().enumerate() {
            let g = &mesh.cell_gradients()[t];
            let w = cell_weights[t] * mesh.cell_areas()[t];
            for i in 0..3 {
                for j in 0..=i {
                    let v = w * (g[i][0] * g[j][0] + g[i][1] * g[j][1]);
                    if i == j {
                        a.add(cell[i], cell[i], v);
                    } else {
                        a.add(cell[i], cell[j], v);
                    }
                }
            }
        }
        for (i, &m) in mass.iter().enumerate() {
            a.add(i, i, m);
        }
        let chol = a.clone().factor().expect("preconditioner must be positive definite");
        Self { matrix: a, chol }
    }

    /// H^1 Riesz map on the mesh: unit stiffness plus lumped mass.
    pub(crate) fn sobolev(mesh: &MeshDomain) -> Self {
        Self::assemble(mesh, &vec![1.0; mesh.num_cells()], mesh.node_weights())
    }

    pub(crate) fn apply_inverse(&self, g: &[f64]) -> Vec<f64> {
        self.chol.solve(g)
    }

    /// `x^T P x`.
    pub(crate) fn quadratic_form(&self, x: &[f64]) -> f64 {
        self.matrix.quadratic_form(x)
    }

    /// `x^T P y`.
    pub(crate) fn inner(&self, x: &[f64], y: &[f64]) -> f64 {
        let s: Vec<f64> = x.iter().zip(y).map(|(a, b)| a + b).collect();
        let d: Vec<f64> = x.iter().zip(y).map(|(a, b)| a - b).collect();
        0.25 * (self.quadratic_form(&s) - self.quadratic_form(&d))
    }
}
