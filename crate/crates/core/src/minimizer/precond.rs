use alloc::vec;
use alloc::vec::Vec;

use crate::function_spaces::TriangulatedDomain;
use crate::math;

const NONE: u32 = u32::MAX;

/// The stiffness matrix `Σ_T |T| w_T ∇λ_i·∇λ_j` on interior vertices, with a
/// fixed sparsity pattern and per-triangle slots for reassembly.
#[derive(Clone, Debug)]
pub(crate) struct Stiffness {
    /// Interior index of each vertex, `NONE` on the boundary.
    index: Vec<u32>,
    interior: Vec<usize>,
    row_start: Vec<usize>,
    cols: Vec<u32>,
    values: Vec<f64>,
    slots: Vec<[u32; 9]>,
    diag_slot: Vec<usize>,
}

impl Stiffness {
    pub(crate) fn new(domain: &TriangulatedDomain) -> Self {
        let nv = domain.num_vertices();
        let mut index = vec![NONE; nv];
        let interior: Vec<usize> = domain.interior_vertices().collect();
        for (k, v) in interior.iter().enumerate() {
            index[*v] = k as u32;
        }
        let mut pairs: Vec<(u32, u32)> = Vec::new();
        for tri in domain.triangles() {
            for a in tri {
                for b in tri {
                    if index[*a] != NONE && index[*b] != NONE {
                        pairs.push((index[*a], index[*b]));
                    }
                }
            }
        }
        pairs.sort_unstable();
        pairs.dedup();
        let n = interior.len();
        let mut row_start = vec![0usize; n + 1];
        for (r, _) in &pairs {
            row_start[*r as usize + 1] += 1;
        }
        for i in 0..n {
            row_start[i + 1] += row_start[i];
        }
        let cols: Vec<u32> = pairs.iter().map(|p| p.1).collect();
        let find = |r: u32, c: u32| -> u32 {
            let row = &cols[row_start[r as usize]..row_start[r as usize + 1]];
            (row_start[r as usize] + row.binary_search(&c).expect("pattern entry")) as u32
        };
        let slots = domain
            .triangles()
            .iter()
            .map(|tri| {
                let mut s = [NONE; 9];
                for (i, a) in tri.iter().enumerate() {
                    for (j, b) in tri.iter().enumerate() {
                        if index[*a] != NONE && index[*b] != NONE {
                            s[3 * i + j] = find(index[*a], index[*b]);
                        }
                    }
                }
                s
            })
            .collect();
        let diag_slot = (0..n as u32).map(|r| find(r, r) as usize).collect();
        let values = vec![0.0; cols.len()];
        Stiffness {
            index,
            interior,
            row_start,
            cols,
            values,
            slots,
            diag_slot,
        }
    }

    pub(crate) fn assemble(&mut self, domain: &TriangulatedDomain, weights: &[f64]) {
        self.values.iter_mut().for_each(|v| *v = 0.0);
        for (k, s) in self.slots.iter().enumerate() {
            let g = domain.shape_gradients(k);
            let w = domain.areas()[k] * weights[k];
            for i in 0..3 {
                for j in 0..3 {
                    let slot = s[3 * i + j];
                    if slot != NONE {
                        self.values[slot as usize] += w * (g[i][0] * g[j][0] + g[i][1] * g[j][1]);
                    }
                }
            }
        }
    }

    fn apply(&self, x: &[f64], out: &mut [f64]) {
        for (r, o) in out.iter_mut().enumerate() {
            let mut acc = 0.0;
            for k in self.row_start[r]..self.row_start[r + 1] {
                acc += self.values[k] * x[self.cols[k] as usize];
            }
            *o = acc;
        }
    }

    /// Approximately solves `K x = b` for vertex vectors `b` by Jacobi
    /// preconditioned conjugate gradients started at zero, so the result is
    /// `x = −K⁻¹(−b)` restricted to a Krylov space and `b·x > 0` for `b ≠ 0`.
    pub(crate) fn solve(&self, b: &[f64], rtol: f64, max_iter: usize) -> Vec<f64> {
        let n = self.interior.len();
        let rhs: Vec<f64> = self.interior.iter().map(|v| b[*v]).collect();
        let inv_d: Vec<f64> = self
            .diag_slot
            .iter()
            .map(|s| {
                let d = self.values[*s];
                if d > 0.0 { 1.0 / d } else { 1.0 }
            })
            .collect();
        let mut x = vec![0.0; n];
        let mut r = rhs.clone();
        let mut z: Vec<f64> = r.iter().zip(&inv_d).map(|(r, d)| r * d).collect();
        let mut p = z.clone();
        let mut rz = dot(&r, &z);
        let stop = rtol * math::sqrt(dot(&rhs, &rhs));
        let mut kp = vec![0.0; n];
        for _ in 0..max_iter {
            if math::sqrt(dot(&r, &r)) <= stop {
                break;
            }
            self.apply(&p, &mut kp);
            let pkp = dot(&p, &kp);
            if !(pkp > 0.0) {
                break;
            }
            let alpha = rz / pkp;
            for i in 0..n {
                x[i] += alpha * p[i];
                r[i] -= alpha * kp[i];
            }
            for i in 0..n {
                z[i] = r[i] * inv_d[i];
            }
            let rz_new = dot(&r, &z);
            let beta = rz_new / rz;
            rz = rz_new;
            for i in 0..n {
                p[i] = z[i] + beta * p[i];
            }
        }
        let mut out = vec![0.0; self.index.len()];
        for (k, v) in self.interior.iter().enumerate() {
            out[*v] = x[k];
        }
        out
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}
