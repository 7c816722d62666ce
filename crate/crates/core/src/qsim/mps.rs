//! Matrix product state in mixed canonical form.
//!
//! Site `j` holds two matrices `A_j[s]` (left bond × right bond), one per
//! physical index. Sites left of `center` are left-canonical and sites right of
//! it are right-canonical, so the norm lives entirely in the center tensor.
//! Two-site gates first move the center onto the left site, contract the pair,
//! apply the gate and split it again with a truncated SVD.

use nalgebra::DMatrix;
use num_complex::Complex64;

use super::{Mat2, Mat4, Pauli, PauliString};

type CMat = DMatrix<Complex64>;

#[derive(Debug, Clone)]
pub struct MpsState {
    sites: Vec<[CMat; 2]>,
    center: usize,
    max_bond: usize,
    truncation_tol: f64,
    /// Accumulated discarded weight from truncations.
    discarded: f64,
}

fn zeros(r: usize, c: usize) -> CMat {
    CMat::zeros(r, c)
}

impl MpsState {
    pub fn product(amps: &[[Complex64; 2]], max_bond: usize, truncation_tol: f64) -> Self {
        let sites = amps
            .iter()
            .map(|a| [CMat::from_element(1, 1, a[0]), CMat::from_element(1, 1, a[1])])
            .collect();
        Self { sites, center: 0, max_bond: max_bond.max(1), truncation_tol, discarded: 0.0 }
    }

    pub fn qubit_count(&self) -> usize {
        self.sites.len()
    }

    pub fn max_bond_dimension(&self) -> usize {
        self.sites.iter().map(|s| s[0].ncols()).max().unwrap_or(1)
    }

    pub fn discarded_weight(&self) -> f64 {
        self.discarded
    }

    pub fn norm_sqr(&self) -> f64 {
        let a = &self.sites[self.center];
        a[0].norm_squared() + a[1].norm_squared()
    }

    pub fn apply_single(&mut self, site: usize, m: &Mat2) {
        let [a0, a1] = &self.sites[site];
        let n0 = a0 * m[0][0] + a1 * m[0][1];
        let n1 = a0 * m[1][0] + a1 * m[1][1];
        self.sites[site] = [n0, n1];
    }

    fn move_right(&mut self) {
        let c = self.center;
        let (l, r) = (self.sites[c][0].nrows(), self.sites[c][0].ncols());
        let mut stacked = zeros(2 * l, r);
        for s in 0..2 {
            stacked.view_mut((s * l, 0), (l, r)).copy_from(&self.sites[c][s]);
        }
        let qr = stacked.qr();
        let (q, rmat) = (qr.q(), qr.r());
        let k = q.ncols();
        self.sites[c] = [q.view((0, 0), (l, k)).into_owned(), q.view((l, 0), (l, k)).into_owned()];
        let next = &self.sites[c + 1];
        self.sites[c + 1] = [&rmat * &next[0], &rmat * &next[1]];
        self.center += 1;
    }

    fn move_left(&mut self) {
        let c = self.center;
        let (l, r) = (self.sites[c][0].nrows(), self.sites[c][0].ncols());
        let mut wide = zeros(l, 2 * r);
        for s in 0..2 {
            wide.view_mut((0, s * r), (l, r)).copy_from(&self.sites[c][s]);
        }
        // wide = R† Q† via QR of its adjoint
        let qr = wide.adjoint().qr();
        let (q, rmat) = (qr.q(), qr.r());
        let qa = q.adjoint();
        let ra = rmat.adjoint();
        let k = qa.nrows();
        self.sites[c] = [qa.view((0, 0), (k, r)).into_owned(), qa.view((0, r), (k, r)).into_owned()];
        let prev = &self.sites[c - 1];
        self.sites[c - 1] = [&prev[0] * &ra, &prev[1] * &ra];
        self.center -= 1;
    }

    fn move_center(&mut self, target: usize) {
        while self.center < target {
            self.move_right();
        }
        while self.center > target {
            self.move_left();
        }
    }

    /// Applies `m` (local index `2·s_j + s_{j+1}`) on sites `(j, j+1)`.
    pub fn apply_two(&mut self, j: usize, m: &Mat4) {
        self.move_center(j);
        let (l, r) = (self.sites[j][0].nrows(), self.sites[j + 1][0].ncols());
        let blocks: Vec<CMat> = (0..4)
            .map(|idx| &self.sites[j][idx / 2] * &self.sites[j + 1][idx % 2])
            .collect();
        let mut theta = zeros(2 * l, 2 * r);
        for (a, row) in m.iter().enumerate() {
            let mut acc = zeros(l, r);
            for (b, coef) in row.iter().enumerate() {
                if *coef != Complex64::new(0.0, 0.0) {
                    acc += &blocks[b] * *coef;
                }
            }
            theta.view_mut(((a / 2) * l, (a % 2) * r), (l, r)).copy_from(&acc);
        }

        let svd = theta.svd(true, true);
        let u = svd.u.expect("requested U");
        let vt = svd.v_t.expect("requested V^T");
        let sv = svd.singular_values;
        let mut order: Vec<usize> = (0..sv.len()).collect();
        order.sort_by(|&a, &b| sv[b].total_cmp(&sv[a]));
        let total: f64 = sv.iter().map(|s| s * s).sum();
        // singular vectors below the numerical rank are not reliably
        // orthonormal; dropping them keeps the canonical form intact
        let rank_floor = sv.iter().copied().fold(0.0, f64::max) * (2 * l.max(r)) as f64 * f64::EPSILON;
        let cutoff = self.truncation_tol.max(rank_floor);
        let mut keep: Vec<usize> = order
            .into_iter()
            .filter(|&i| sv[i] > cutoff)
            .take(self.max_bond)
            .collect();
        if keep.is_empty() {
            keep.push((0..sv.len()).max_by(|&a, &b| sv[a].total_cmp(&sv[b])).unwrap_or(0));
        }
        let kept: f64 = keep.iter().map(|&i| sv[i] * sv[i]).sum();
        self.discarded += (total - kept).max(0.0);
        let renorm = if kept > 0.0 { (total / kept).sqrt() } else { 1.0 };
        let k = keep.len();

        let mut left = [zeros(l, k), zeros(l, k)];
        let mut right = [zeros(k, r), zeros(k, r)];
        for (col, &i) in keep.iter().enumerate() {
            let weight = Complex64::new(sv[i] * renorm, 0.0);
            for s in 0..2 {
                for a in 0..l {
                    left[s][(a, col)] = u[(s * l + a, i)];
                }
                for b in 0..r {
                    right[s][(col, b)] = vt[(i, s * r + b)] * weight;
                }
            }
        }
        self.sites[j] = left;
        self.sites[j + 1] = right;
        self.center = j + 1;
    }

    fn op_left_step(env: &CMat, site: &[CMat; 2], op: Pauli) -> CMat {
        let m = op.matrix();
        let r = site[0].ncols();
        let mut out = zeros(r, r);
        for s in 0..2 {
            for sp in 0..2 {
                if m[s][sp] != Complex64::new(0.0, 0.0) {
                    out += site[s].adjoint() * env * &site[sp] * m[s][sp];
                }
            }
        }
        out
    }

    /// Exact `⟨ψ|P|ψ⟩`, divided by the norm.
    pub fn expectation(&self, pauli: &PauliString) -> f64 {
        let lo = pauli.min_site().min(self.center);
        let hi = pauli.max_site().max(self.center);
        let dim = self.sites[lo][0].nrows();
        let mut env = CMat::identity(dim, dim);
        for j in lo..=hi {
            env = Self::op_left_step(&env, &self.sites[j], pauli.at(j));
        }
        env.trace().re / self.norm_sqr()
    }

    pub fn single_site_expectations(&self) -> Vec<[f64; 3]> {
        let n = self.sites.len();
        let norm = self.norm_sqr();
        // left environments for sites right of the center, right ones for sites left of it
        let mut left_env: Vec<Option<CMat>> = vec![None; n];
        let mut env = CMat::identity(self.sites[self.center][0].nrows(), self.sites[self.center][0].nrows());
        for j in self.center..n {
            left_env[j] = Some(env.clone());
            env = Self::op_left_step(&env, &self.sites[j], Pauli::I);
        }
        let mut right_env: Vec<Option<CMat>> = vec![None; n];
        let dim = self.sites[self.center][0].ncols();
        let mut env = CMat::identity(dim, dim);
        for j in (0..=self.center).rev() {
            right_env[j] = Some(env.clone());
            let site = &self.sites[j];
            env = &site[0] * &env * site[0].adjoint() + &site[1] * &env * site[1].adjoint();
        }
        (0..n)
            .map(|j| {
                let site = &self.sites[j];
                let (ldim, rdim) = (site[0].nrows(), site[0].ncols());
                let lenv = left_env[j].clone().unwrap_or_else(|| CMat::identity(ldim, ldim));
                let renv = right_env[j].clone().unwrap_or_else(|| CMat::identity(rdim, rdim));
                // rho[s][s'] = tr(A[s]† L A[s'] R)
                let mut rho = [[Complex64::new(0.0, 0.0); 2]; 2];
                for (s, row) in rho.iter_mut().enumerate() {
                    for (sp, v) in row.iter_mut().enumerate() {
                        *v = (site[s].adjoint() * &lenv * &site[sp] * &renv).trace() / norm;
                    }
                }
                // rho here is ⟨s|·|s'⟩ weights of conj(ψ_s) ψ_s'
                let x = rho[0][1] + rho[1][0];
                let y = Complex64::new(0.0, -1.0) * rho[0][1] + Complex64::new(0.0, 1.0) * rho[1][0];
                [x.re, y.re, (rho[0][0] - rho[1][1]).re]
            })
            .collect()
    }

    /// Contracts to a full amplitude vector; qubit `q` at bit `q`.
    pub fn to_amplitudes(&self) -> Vec<Complex64> {
        let n = self.sites.len();
        let mut out = Vec::with_capacity(1 << n);
        for idx in 0..(1usize << n) {
            let mut acc = self.sites[0][idx & 1].clone();
            for q in 1..n {
                acc = &acc * &self.sites[q][(idx >> q) & 1];
            }
            out.push(acc[(0, 0)]);
        }
        out
    }
}
