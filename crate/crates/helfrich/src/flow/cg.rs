//! Conjugate gradients for the semi-implicit update
//! `(M + dt·α·L M⁻¹ L) x = rhs` with lumped mass M (mixed vertex areas) and
//! cotangent stiffness L. The operator is symmetric positive definite for
//! any sign pattern of the cotangent weights.

use crate::surface::Geometry;

pub struct BilaplacianSystem<'a> {
    geom: &'a Geometry,
    pub dt_alpha: f64,
    scratch1: Vec<f64>,
    scratch2: Vec<f64>,
    /// Jacobi preconditioner diagonal.
    diag: Vec<f64>,
}

impl<'a> BilaplacianSystem<'a> {
    pub fn new(geom: &'a Geometry, dt_alpha: f64) -> Self {
        let nv = geom.mixed_area.len();
        let topo = &geom.topology;
        // diag(L M⁻¹ L)_i = L_ii²/A_i + Σ_{j≠i} w_ij²/A_j.
        let mut diag = vec![0.0; nv];
        for i in 0..nv {
            let mut row_sum = 0.0;
            let mut off = 0.0;
            for idx in topo.offsets[i]..topo.offsets[i + 1] {
                let w = geom.stiffness[idx];
                row_sum += w;
                let j = topo.cols[idx];
                off += w * w / geom.mixed_area[j];
            }
            diag[i] =
                geom.mixed_area[i] + dt_alpha * (row_sum * row_sum / geom.mixed_area[i] + off);
        }
        Self {
            geom,
            dt_alpha,
            scratch1: vec![0.0; nv],
            scratch2: vec![0.0; nv],
            diag,
        }
    }

    pub fn apply(&mut self, x: &[f64], out: &mut [f64]) {
        self.geom.stiffness_apply(x, &mut self.scratch1);
        for (s, a) in self.scratch1.iter_mut().zip(&self.geom.mixed_area) {
            *s /= *a;
        }
        let s1 = std::mem::take(&mut self.scratch1);
        self.geom.stiffness_apply(&s1, &mut self.scratch2);
        self.scratch1 = s1;
        for i in 0..x.len() {
            out[i] = self.geom.mixed_area[i] * x[i] + self.dt_alpha * self.scratch2[i];
        }
    }

    /// Preconditioned CG; returns the iteration count or `None` when the
    /// relative residual target was not reached.
    pub fn solve(
        &mut self,
        rhs: &[f64],
        x: &mut [f64],
        rel_tol: f64,
        max_iter: usize,
    ) -> Option<usize> {
        let n = rhs.len();
        let mut r = vec![0.0; n];
        let mut ax = vec![0.0; n];
        self.apply(x, &mut ax);
        for i in 0..n {
            r[i] = rhs[i] - ax[i];
        }
        let norm_b = rhs.iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm_b == 0.0 {
            x.fill(0.0);
            return Some(0);
        }
        let target = rel_tol * norm_b;

        let mut z: Vec<f64> = r.iter().zip(&self.diag).map(|(r, d)| r / d).collect();
        let mut p = z.clone();
        let mut rz = r.iter().zip(&z).map(|(a, b)| a * b).sum::<f64>();
        let mut ap = vec![0.0; n];
        for it in 0..max_iter {
            let res = r.iter().map(|v| v * v).sum::<f64>().sqrt();
            if res <= target {
                return Some(it);
            }
            self.apply(&p, &mut ap);
            let pap = p.iter().zip(&ap).map(|(a, b)| a * b).sum::<f64>();
            if pap <= 0.0 {
                return None;
            }
            let alpha = rz / pap;
            for i in 0..n {
                x[i] += alpha * p[i];
                r[i] -= alpha * ap[i];
            }
            for i in 0..n {
                z[i] = r[i] / self.diag[i];
            }
            let rz_new = r.iter().zip(&z).map(|(a, b)| a * b).sum::<f64>();
            let beta = rz_new / rz;
            rz = rz_new;
            for i in 0..n {
                p[i] = z[i] + beta * p[i];
            }
        }
        let res = r.iter().map(|v| v * v).sum::<f64>().sqrt();
        if res <= target {
            Some(max_iter)
        } else {
            None
        }
    }
}
