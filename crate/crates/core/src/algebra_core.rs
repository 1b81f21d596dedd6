//! R-matrix, monodromy matrix, twisted transfer matrices and the Hamiltonian.
//!
//! States live in `C^{2^N}`. Site `n` (1-based) is bit `N - n` of the basis
//! index, so site 1 is the most significant factor of the tensor product.
//! Bit value 0 is the first basis vector of a site (spin up), bit value 1 the
//! second. The monodromy matrix is `R_{0N}(λ-ξ_N) ... R_{01}(λ-ξ_1)` with
//! site 1 rightmost.

use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::sov_states::SovIndex;
use crate::C;
use faer::Mat;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Largest chain handled by the dense routines.
pub const MAX_SITES: usize = 12;

/// A 2x2 complex matrix, row major.
pub type Mat2 = [[C; 2]; 2];

pub const fn c(re: f64, im: f64) -> C {
    C::new(re, im)
}

pub const ZERO: C = c(0.0, 0.0);
pub const ONE: C = c(1.0, 0.0);

pub fn mat2_mul(x: &Mat2, y: &Mat2) -> Mat2 {
    let mut out = [[ZERO; 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            out[i][j] = x[i][0] * y[0][j] + x[i][1] * y[1][j];
        }
    }
    out
}

pub fn mat2_det(x: &Mat2) -> C {
    x[0][0] * x[1][1] - x[0][1] * x[1][0]
}

/// Adjugate, `adj(X) X = det(X) Id`.
pub fn mat2_adj(x: &Mat2) -> Mat2 {
    [[x[1][1], -x[0][1]], [-x[1][0], x[0][0]]]
}

pub fn mat2_inv(x: &Mat2) -> Result<Mat2> {
    let det = mat2_det(x);
    if det.norm() < 1e-300 {
        return Err(Error::Singular("2x2 matrix".into()));
    }
    let adj = mat2_adj(x);
    Ok([[adj[0][0] / det, adj[0][1] / det], [adj[1][0] / det, adj[1][1] / det]])
}

pub fn mat2_transpose(x: &Mat2) -> Mat2 {
    [[x[0][0], x[1][0]], [x[0][1], x[1][1]]]
}

/// Elementary matrix `E^{e1,e2}` with indices in `{1,2}`.
pub fn elementary(e1: u8, e2: u8) -> Mat2 {
    let mut m = [[ZERO; 2]; 2];
    m[(e1 - 1) as usize][(e2 - 1) as usize] = ONE;
    m
}

pub const IDENTITY2: Mat2 = [[ONE, ZERO], [ZERO, ONE]];
pub const SIGMA_X: Mat2 = [[ZERO, ONE], [ONE, ZERO]];

/// Chain length, quantum parameter and inhomogeneities.
#[derive(Clone, Debug, PartialEq)]
pub struct ChainParams {
    pub n: usize,
    pub eta: C,
    pub xi: Vec<C>,
    generic: bool,
}

/// First pair `(a, b)` with `ξ_a - ξ_b ∈ {-η, 0, η}` up to `tol`.
pub fn genericity_violation(eta: C, xi: &[C], tol: f64) -> Option<(usize, usize)> {
    for a in 0..xi.len() {
        for b in 0..xi.len() {
            if a == b {
                continue;
            }
            for h in [-1.0, 0.0, 1.0] {
                if (xi[a] - xi[b] - eta * h).norm() < tol {
                    return Some((a, b));
                }
            }
        }
    }
    None
}

impl ChainParams {
    /// Validated generic chain.
    pub fn new(eta: C, xi: Vec<C>) -> Result<Self> {
        let p = Self::unchecked(eta, xi)?;
        let tol = 1e-6 * eta.norm();
        if let Some((a, b)) = genericity_violation(eta, &p.xi, tol) {
            return Err(Error::InvalidParams(format!(
                "inhomogeneities {} and {} are not generic",
                a + 1,
                b + 1
            )));
        }
        Ok(Self { generic: true, ..p })
    }

    fn unchecked(eta: C, xi: Vec<C>) -> Result<Self> {
        let n = xi.len();
        if n == 0 {
            return Err(Error::InvalidParams("empty chain".into()));
        }
        if n > MAX_SITES {
            return Err(Error::Dimension(n, MAX_SITES));
        }
        if eta.norm() == 0.0 || !eta.is_finite() {
            return Err(Error::InvalidParams("eta must be finite and nonzero".into()));
        }
        if xi.iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidParams("non-finite inhomogeneity".into()));
        }
        Ok(Self { n, eta, xi, generic: false })
    }

    /// Homogeneous chain, `ξ_n = η/2`. Not usable for SoV constructions.
    pub fn homogeneous(n: usize, eta: C) -> Result<Self> {
        Self::unchecked(eta, vec![eta / 2.0; n])
    }

    /// `ξ_n = η/2 + x_n` with real offsets.
    pub fn with_offsets(eta: C, offsets: &[f64]) -> Result<Self> {
        Self::new(eta, offsets.iter().map(|&x| eta / 2.0 + x).collect())
    }

    /// `ξ_n = η/2 + x_n` with `x_n` uniform in `[-band, band]`.
    pub fn random(n: usize, eta: C, band: f64, seed: u64) -> Result<Self> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let offsets: Vec<f64> = (0..n).map(|_| rng.random_range(-band..=band)).collect();
        Self::with_offsets(eta, &offsets)
    }

    /// Offsets `(k - (n-1)/2) spacing` plus uniform jitter in `[-jitter, jitter]`.
    pub fn spread(n: usize, eta: C, spacing: f64, jitter: f64, seed: u64) -> Result<Self> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mid = (n as f64 - 1.0) / 2.0;
        let offsets: Vec<f64> = (0..n)
            .map(|k| (k as f64 - mid) * spacing + rng.random_range(-jitter..=jitter))
            .collect();
        Self::with_offsets(eta, &offsets)
    }

    pub fn dim(&self) -> usize {
        1usize << self.n
    }

    pub fn is_generic(&self) -> bool {
        self.generic
    }

    pub fn require_generic(&self) -> Result<()> {
        if self.generic {
            Ok(())
        } else {
            Err(Error::InvalidParams("generic inhomogeneities required".into()))
        }
    }

    /// Real offsets `x_n = ξ_n - η/2`, if they are real.
    pub fn real_offsets(&self) -> Option<Vec<f64>> {
        let tol = 1e-12 * (1.0 + self.eta.norm());
        self.xi
            .iter()
            .map(|x| {
                let o = x - self.eta / 2.0;
                (o.im.abs() <= tol).then_some(o.re)
            })
            .collect()
    }

    pub fn a(&self, lambda: C) -> C {
        self.xi.iter().map(|x| lambda - x + self.eta).product()
    }

    pub fn d(&self, lambda: C) -> C {
        self.xi.iter().map(|x| lambda - x).product()
    }

    /// `ξ_n^{(h_n)} = ξ_n - h_n η` for the SoV index encoded in `mask`
    /// (bit `n-1` is `h_n`).
    pub fn xi_h(&self, mask: usize) -> Vec<C> {
        self.xi
            .iter()
            .enumerate()
            .map(|(k, &x)| if mask >> k & 1 == 1 { x - self.eta } else { x })
            .collect()
    }

    pub fn d_mask(&self, mask: usize, lambda: C) -> C {
        self.xi_h(mask).iter().map(|x| lambda - x).product()
    }
}

pub fn eval_a(params: &ChainParams, lambda: C) -> C {
    params.a(lambda)
}

pub fn eval_d(params: &ChainParams, lambda: C) -> C {
    params.d(lambda)
}

pub fn eval_d_h(params: &ChainParams, h: &SovIndex, lambda: C) -> C {
    params.d_mask(h.mask(), lambda)
}

/// Twist matrix `K = [[a, b], [c, d]]` with an ordered pair of eigenvalues.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Twist {
    pub a: C,
    pub b: C,
    pub c: C,
    pub d: C,
    pub k1: C,
    pub k2: C,
}

fn eigenvalues2(a: C, b: C, c: C, d: C) -> (C, C) {
    let half = (a + d) / 2.0;
    let disc = (half * half - (a * d - b * c)).sqrt();
    (half + disc, half - disc)
}

impl Twist {
    /// `k1` is the eigenvalue with the larger real part (then imaginary part).
    pub fn new(a: C, b: C, c: C, d: C) -> Result<Self> {
        let (e1, e2) = eigenvalues2(a, b, c, d);
        let first = if (e1.re - e2.re).abs() > 1e-12 {
            e1.re > e2.re
        } else {
            e1.im >= e2.im
        };
        let k1 = if first { e1 } else { e2 };
        Self::with_k1(a, b, c, d, k1)
    }

    /// Uses the given eigenvalue as `k1`.
    pub fn with_k1(a: C, b: C, c: C, d: C, k1: C) -> Result<Self> {
        let det = a * d - b * c;
        let scale = 1.0 + a.norm() + b.norm() + c.norm() + d.norm();
        if det.norm() < 1e-12 * scale * scale {
            return Err(Error::InvalidTwist("singular twist matrix".into()));
        }
        if (k1 * k1 - k1 * (a + d) + det).norm() > 1e-9 * scale * scale {
            return Err(Error::InvalidTwist("k1 is not an eigenvalue".into()));
        }
        Ok(Self { a, b, c, d, k1, k2: det / k1 })
    }

    pub fn from_matrix(k: &Mat2) -> Result<Self> {
        Self::new(k[0][0], k[0][1], k[1][0], k[1][1])
    }

    pub fn identity() -> Self {
        Self { a: ONE, b: ZERO, c: ZERO, d: ONE, k1: ONE, k2: ONE }
    }

    pub fn sigma_x() -> Self {
        Self { a: ZERO, b: ONE, c: ONE, d: ZERO, k1: ONE, k2: -ONE }
    }

    /// Upper triangular twist `[[k1, b], [0, k2]]`.
    pub fn triangular(k1: C, k2: C, b: C) -> Result<Self> {
        Self::with_k1(k1, b, ZERO, k2, k1)
    }

    /// `P diag(e^{iφ1}, e^{iφ2}) P^{-1}` with random `P`, both off-diagonal
    /// entries bounded away from zero.
    pub fn random_unitary_eigen(seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        loop {
            let mut draw = || c(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
            let p: Mat2 = [[draw(), draw()], [draw(), draw()]];
            let phi1: f64 = rng.random_range(0.0..std::f64::consts::TAU);
            let phi2: f64 = rng.random_range(0.0..std::f64::consts::TAU);
            let Ok(pinv) = mat2_inv(&p) else { continue };
            if mat2_det(&p).norm() < 0.2 {
                continue;
            }
            let k1 = C::from_polar(1.0, phi1);
            let k2 = C::from_polar(1.0, phi2);
            if (k1 - k2).norm() < 0.3 {
                continue;
            }
            let k = mat2_mul(&mat2_mul(&p, &[[k1, ZERO], [ZERO, k2]]), &pinv);
            if k[0][1].norm() < 0.1 || k[1][0].norm() < 0.1 {
                continue;
            }
            if let Ok(t) = Self::with_k1(k[0][0], k[0][1], k[1][0], k[1][1], k1) {
                return t;
            }
        }
    }

    pub fn matrix(&self) -> Mat2 {
        [[self.a, self.b], [self.c, self.d]]
    }

    pub fn det(&self) -> C {
        self.a * self.d - self.b * self.c
    }

    pub fn trace(&self) -> C {
        self.a + self.d
    }

    /// `μ = k2 / k1`.
    pub fn mu(&self) -> C {
        self.k2 / self.k1
    }

    /// Same matrix with the roles of `k1` and `k2` exchanged.
    pub fn swapped(&self) -> Self {
        Self { k1: self.k2, k2: self.k1, ..*self }
    }

    pub fn sov_applicable(&self) -> bool {
        self.b.norm() > 1e-12 * (1.0 + self.a.norm() + self.d.norm())
    }

    pub fn require_sov(&self) -> Result<()> {
        if self.sov_applicable() {
            Ok(())
        } else {
            Err(Error::SovInapplicable(
                "b = 0; the C-based construction is not implemented".into(),
            ))
        }
    }

    /// `α` with `μ = e^{iπα}`, `-1 < α <= 1`, when `|μ| = 1`.
    pub fn alpha(&self) -> Option<f64> {
        let mu = self.mu();
        if (mu.norm() - 1.0).abs() > 1e-9 {
            return None;
        }
        let mut alpha = mu.arg() / std::f64::consts::PI;
        if alpha <= -1.0 + 1e-14 {
            alpha += 2.0;
        }
        Some(alpha)
    }

    pub fn is_physical(&self) -> bool {
        self.alpha().is_some()
    }

    /// `γ^{-1} K γ`, keeping the eigenvalue order.
    pub fn conjugated(&self, gamma: &Mat2) -> Result<Self> {
        let k = mat2_mul(&mat2_mul(&mat2_inv(gamma)?, &self.matrix()), gamma);
        Self::with_k1(k[0][0], k[0][1], k[1][0], k[1][1], self.k1)
    }

    /// Columns are eigenvectors for `k2` and `k1`, in that order, so that
    /// `K = P diag(k2, k1) P^{-1}`.
    pub fn eigenbasis(&self) -> Result<Mat2> {
        let vec_for = |k: C| -> [C; 2] {
            if self.b.norm() > 1e-12 {
                [self.b, k - self.a]
            } else if self.c.norm() > 1e-12 {
                [k - self.d, self.c]
            } else if (k - self.a).norm() < (k - self.d).norm() {
                [ONE, ZERO]
            } else {
                [ZERO, ONE]
            }
        };
        let v2 = vec_for(self.k2);
        let v1 = vec_for(self.k1);
        let p = [[v2[0], v1[0]], [v2[1], v1[1]]];
        if mat2_det(&p).norm() < 1e-12 {
            return Err(Error::InvalidTwist("twist is not diagonalizable".into()));
        }
        Ok(p)
    }
}

/// The 4x4 matrix `λ + η P` in the basis `11, 12, 21, 22`.
pub fn build_r_matrix(eta: C, lambda: C) -> [[C; 4]; 4] {
    let mut r = [[ZERO; 4]; 4];
    r[0][0] = lambda + eta;
    r[3][3] = lambda + eta;
    r[1][1] = lambda;
    r[2][2] = lambda;
    r[1][2] = eta;
    r[2][1] = eta;
    r
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Entry {
    A,
    B,
    C,
    D,
}

impl Entry {
    pub fn indices(self) -> (usize, usize) {
        match self {
            Entry::A => (0, 0),
            Entry::B => (0, 1),
            Entry::C => (1, 0),
            Entry::D => (1, 1),
        }
    }

    pub fn from_indices(i: usize, j: usize) -> Self {
        match (i, j) {
            (0, 0) => Entry::A,
            (0, 1) => Entry::B,
            (1, 0) => Entry::C,
            _ => Entry::D,
        }
    }
}

fn site_bit(n_sites: usize, site: usize) -> usize {
    1usize << (n_sites - site)
}

/// In-place action of `R_{0,site}(mu)` on an auxiliary-coupled vector.
fn apply_r(eta: C, mu: C, bit: usize, u0: &mut [C], u1: &mut [C]) {
    let diag = mu + eta;
    for i in 0..u0.len() {
        if i & bit != 0 {
            continue;
        }
        let j = i | bit;
        let (a0i, a0j, a1i, a1j) = (u0[i], u0[j], u1[i], u1[j]);
        u0[i] = diag * a0i;
        u1[j] = diag * a1j;
        u1[i] = mu * a1i + eta * a0j;
        u0[j] = mu * a0j + eta * a1i;
    }
}

/// `(T_{1b} v, T_{2b} v)` for the untwisted monodromy at `λ`.
pub fn column_pass(params: &ChainParams, lambda: C, b: usize, v: &[C]) -> [Vec<C>; 2] {
    let zero = vec![ZERO; v.len()];
    let mut u = if b == 0 { [v.to_vec(), zero] } else { [zero, v.to_vec()] };
    for site in 1..=params.n {
        let [u0, u1] = &mut u;
        apply_r(params.eta, lambda - params.xi[site - 1], site_bit(params.n, site), u0, u1);
    }
    u
}

/// `(Σ_c w_c φ T_{c1}, Σ_c w_c φ T_{c2})` for a covector `φ`.
pub fn row_pass(params: &ChainParams, lambda: C, w: [C; 2], phi: &[C]) -> [Vec<C>; 2] {
    let mut u = [
        phi.iter().map(|&x| w[0] * x).collect::<Vec<_>>(),
        phi.iter().map(|&x| w[1] * x).collect::<Vec<_>>(),
    ];
    for site in (1..=params.n).rev() {
        let [u0, u1] = &mut u;
        apply_r(params.eta, lambda - params.xi[site - 1], site_bit(params.n, site), u0, u1);
    }
    u
}

/// `(K T(λ))_{entry} v`.
pub fn apply_entry(params: &ChainParams, k: &Mat2, lambda: C, entry: Entry, v: &[C]) -> Vec<C> {
    let (i, j) = entry.indices();
    let [t0, t1] = column_pass(params, lambda, j, v);
    t0.iter().zip(&t1).map(|(&x, &y)| k[i][0] * x + k[i][1] * y).collect()
}

/// `φ (K T(λ))_{entry}`.
pub fn apply_entry_left(
    params: &ChainParams,
    k: &Mat2,
    lambda: C,
    entry: Entry,
    phi: &[C],
) -> Vec<C> {
    let (i, j) = entry.indices();
    let mut out = row_pass(params, lambda, k[i], phi);
    std::mem::take(&mut out[j])
}

/// `tr_0[K T(λ)] v`.
pub fn apply_transfer(params: &ChainParams, k: &Mat2, lambda: C, v: &[C]) -> Vec<C> {
    let mut out = apply_entry(params, k, lambda, Entry::A, v);
    let dd = apply_entry(params, k, lambda, Entry::D, v);
    out.iter_mut().zip(&dd).for_each(|(x, y)| *x += y);
    out
}

/// `φ tr_0[K T(λ)]`.
pub fn apply_transfer_left(params: &ChainParams, k: &Mat2, lambda: C, phi: &[C]) -> Vec<C> {
    let mut out = apply_entry_left(params, k, lambda, Entry::A, phi);
    let dd = apply_entry_left(params, k, lambda, Entry::D, phi);
    out.iter_mut().zip(&dd).for_each(|(x, y)| *x += y);
    out
}

/// Applies the one-site matrix `x` at `site`.
pub fn apply_local(n_sites: usize, site: usize, x: &Mat2, v: &[C]) -> Vec<C> {
    let bit = site_bit(n_sites, site);
    let mut out = vec![ZERO; v.len()];
    for i in 0..v.len() {
        if i & bit != 0 {
            continue;
        }
        let j = i | bit;
        out[i] = x[0][0] * v[i] + x[0][1] * v[j];
        out[j] = x[1][0] * v[i] + x[1][1] * v[j];
    }
    out
}

/// Applies `g^{⊗N}`.
pub fn apply_product_gate(n_sites: usize, g: &Mat2, v: &[C]) -> Vec<C> {
    (1..=n_sites).fold(v.to_vec(), |acc, site| apply_local(n_sites, site, g, &acc))
}

pub fn basis_vector(dim: usize, i: usize) -> Vec<C> {
    let mut v = vec![ZERO; dim];
    v[i] = ONE;
    v
}

/// Dense matrix whose columns are `f(e_j)`.
pub fn dense_from_columns<F>(dim: usize, exec: Execution, f: F) -> Mat<C>
where
    F: Fn(&[C]) -> Vec<C> + Sync + Send,
{
    let cols = exec.map(dim, |j| f(&basis_vector(dim, j)));
    Mat::from_fn(dim, dim, |i, j| cols[j][i])
}

/// Untwisted monodromy entry as a dense operator.
pub fn monodromy_entry(
    params: &ChainParams,
    which: Entry,
    lambda: C,
    exec: Execution,
) -> Mat<C> {
    twisted_entry(params, &IDENTITY2, which, lambda, exec)
}

/// Entry of `K T(λ)` as a dense operator.
pub fn twisted_entry(
    params: &ChainParams,
    k: &Mat2,
    which: Entry,
    lambda: C,
    exec: Execution,
) -> Mat<C> {
    dense_from_columns(params.dim(), exec, |v| apply_entry(params, k, lambda, which, v))
}

/// `tr_0[K_0 T_0(λ)]` as a dense operator.
pub fn transfer_matrix(params: &ChainParams, twist: &Twist, lambda: C, exec: Execution) -> Mat<C> {
    let k = twist.matrix();
    dense_from_columns(params.dim(), exec, |v| apply_transfer(params, &k, lambda, v))
}

pub fn frobenius(m: &Mat<C>) -> f64 {
    m.norm_l2()
}

pub fn commutator_norm(x: &Mat<C>, y: &Mat<C>) -> f64 {
    (x * y - y * x).norm_l2()
}

/// Max Frobenius residual of both quantum-determinant identities.
pub fn quantum_determinant_residual(params: &ChainParams, lambda: C, exec: Execution) -> f64 {
    let ent = |e, l| monodromy_entry(params, e, l, exec);
    let (a0, b0, c0, d0) = (ent(Entry::A, lambda), ent(Entry::B, lambda), ent(Entry::C, lambda), ent(Entry::D, lambda));
    let mu = lambda - params.eta;
    let (a1, b1, c1, d1) = (ent(Entry::A, mu), ent(Entry::B, mu), ent(Entry::C, mu), ent(Entry::D, mu));
    let qdet = params.a(lambda) * params.d(mu);
    let id = Mat::<C>::identity(params.dim(), params.dim());
    let scaled = Mat::<C>::from_fn(params.dim(), params.dim(), |i, j| id[(i, j)] * qdet);
    let r1 = (&a0 * &d1 - &b0 * &c1 - &scaled).norm_l2();
    let r2 = (&d0 * &a1 - &c0 * &b1 - &scaled).norm_l2();
    r1.max(r2)
}

/// Dense real matrix of the σ^x-twisted Heisenberg Hamiltonian.
pub fn hamiltonian_antiperiodic_real(n: usize) -> Result<Mat<f64>> {
    if !(2..=MAX_SITES).contains(&n) {
        return Err(Error::InvalidParams(format!("chain length {n} out of range")));
    }
    let dim = 1usize << n;
    let mut h = Mat::<f64>::zeros(dim, dim);
    let bit = |site: usize| site_bit(n, site);
    for i in 0..dim {
        for s in 1..n {
            let (b1, b2) = (bit(s), bit(s + 1));
            if (i & b1 != 0) != (i & b2 != 0) {
                h[(i, i)] -= 2.0;
                h[(i ^ b1 ^ b2, i)] += 2.0;
            }
        }
        let (bn, b1) = (bit(n), bit(1));
        let j = i ^ b1;
        if (j & bn != 0) != (j & b1 != 0) {
            h[(i, i)] -= 2.0;
            h[(j ^ bn ^ b1 ^ b1, i)] += 2.0;
        }
    }
    Ok(h)
}

pub fn hamiltonian_antiperiodic(n: usize) -> Result<Mat<C>> {
    let h = hamiltonian_antiperiodic_real(n)?;
    Ok(Mat::from_fn(h.nrows(), h.ncols(), |i, j| c(h[(i, j)], 0.0)))
}

/// Lowest eigenvalue of the σ^x-twisted Hamiltonian.
pub fn ground_energy_antiperiodic(n: usize) -> Result<f64> {
    let h = hamiltonian_antiperiodic_real(n)?;
    let ev = h
        .self_adjoint_eigenvalues(faer::Side::Lower)
        .map_err(|e| Error::NoConvergence(format!("{e:?}")))?;
    Ok(ev[0])
}

/// `2η 𝒯(λ)^{-1} 𝒯'(λ) - 2N` at `λ = η/2`, with a five-point derivative.
pub fn hamiltonian_from_transfer(params: &ChainParams, twist: &Twist, exec: Execution) -> Result<Mat<C>> {
    let l0 = params.eta / 2.0;
    let h = 1e-3;
    let t = |s: f64| transfer_matrix(params, twist, l0 + s, exec);
    let (tm2, tm1, tp1, tp2) = (t(-2.0 * h), t(-h), t(h), t(2.0 * h));
    let dim = params.dim();
    let deriv = Mat::<C>::from_fn(dim, dim, |i, j| {
        (tm2[(i, j)] - tp2[(i, j)] + (tp1[(i, j)] - tm1[(i, j)]) * 8.0) / (12.0 * h)
    });
    let t0 = t(0.0);
    let sol = crate::linalg::solve(&t0, &deriv)?;
    Ok(Mat::from_fn(dim, dim, |i, j| {
        let shift = if i == j { c(2.0 * params.n as f64, 0.0) } else { ZERO };
        sol[(i, j)] * params.eta * 2.0 - shift
    }))
}

/// `S^x = Σ σ^x_n`.
pub fn sx_operator(n: usize) -> Mat<C> {
    let dim = 1usize << n;
    dense_from_columns(dim, Execution::Sequential, |v| {
        let mut out = vec![ZERO; dim];
        for site in 1..=n {
            apply_local(n, site, &SIGMA_X, v).iter().zip(out.iter_mut()).for_each(|(x, o)| *o += x);
        }
        out
    })
}

/// `Γ^x = ⊗ σ^x_n`.
pub fn gamma_x_operator(n: usize) -> Mat<C> {
    dense_from_columns(1usize << n, Execution::Sequential, |v| apply_product_gate(n, &SIGMA_X, v))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params3() -> ChainParams {
        ChainParams::random(3, c(0.0, -1.0), 0.3, 7).unwrap()
    }

    #[test]
    fn r_matrix_entries() {
        let eta = c(0.0, -1.0);
        let r = build_r_matrix(eta, ZERO);
        assert_eq!(r[0][0], eta);
        assert_eq!(r[3][3], eta);
        assert_eq!(r[1][2], eta);
        assert_eq!(r[1][1], ZERO);
        let r = build_r_matrix(eta, -eta);
        assert_eq!(r[0][0], ZERO);
        assert_eq!(r[1][1], -eta);
        assert_eq!(r[2][1], eta);
    }

    #[test]
    fn r_matrix_unitarity() {
        let eta = c(0.3, -0.8);
        let l = c(0.7, 0.2);
        let r1 = build_r_matrix(eta, l);
        let r2 = build_r_matrix(eta, -l);
        for i in 0..4 {
            for j in 0..4 {
                let s: C = (0..4).map(|k| r1[i][k] * r2[k][j]).sum();
                let want = if i == j { eta * eta - l * l } else { ZERO };
                assert!((s - want).norm() < 1e-14);
            }
        }
    }

    #[test]
    fn single_site_entries() {
        let p = ChainParams::new(c(0.0, -1.0), vec![c(0.2, -0.5)]).unwrap();
        let l = c(0.9, 0.4);
        let a = monodromy_entry(&p, Entry::A, l, Execution::Sequential);
        assert!((a[(0, 0)] - (l - p.xi[0] + p.eta)).norm() < 1e-14);
        assert!((a[(1, 1)] - (l - p.xi[0])).norm() < 1e-14);
        for l in [c(0.0, 0.0), c(3.0, 1.0)] {
            let b = monodromy_entry(&p, Entry::B, l, Execution::Sequential);
            assert!((b[(1, 0)] - p.eta).norm() < 1e-14);
            assert!(b[(0, 1)].norm() + b[(0, 0)].norm() + b[(1, 1)].norm() < 1e-14);
        }
    }

    #[test]
    fn single_site_antiperiodic_transfer() {
        let p = ChainParams::new(c(0.0, -1.0), vec![c(0.1, -0.5)]).unwrap();
        let t = transfer_matrix(&p, &Twist::sigma_x(), c(0.37, 0.2), Execution::Sequential);
        assert!((t[(0, 1)] - p.eta).norm() < 1e-14);
        assert!((t[(1, 0)] - p.eta).norm() < 1e-14);
        assert!(t[(0, 0)].norm() + t[(1, 1)].norm() < 1e-14);
    }

    #[test]
    fn a_and_d_zeros() {
        let p = params3();
        assert!(eval_d(&p, p.xi[0]).norm() < 1e-15);
        assert!(eval_a(&p, p.xi[0] - p.eta).norm() < 1e-15);
        let h = SovIndex::zeros(3);
        assert_eq!(eval_d_h(&p, &h, c(0.4, 0.1)), eval_d(&p, c(0.4, 0.1)));
    }

    #[test]
    fn left_pass_is_transpose_of_right_pass() {
        let p = params3();
        let k = Twist::random_unitary_eigen(3).matrix();
        let l = c(0.2, 0.6);
        for e in [Entry::A, Entry::B, Entry::C, Entry::D] {
            let m = twisted_entry(&p, &k, e, l, Execution::Sequential);
            let phi: Vec<C> = (0..8).map(|i| c(i as f64 * 0.3 - 1.0, 0.1 * i as f64)).collect();
            let left = apply_entry_left(&p, &k, l, e, &phi);
            for j in 0..8 {
                let want: C = (0..8).map(|i| phi[i] * m[(i, j)]).sum();
                assert!((left[j] - want).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn quantum_determinant_vanishes_at_shifted_inhomogeneity() {
        let p = params3();
        let r = quantum_determinant_residual(&p, c(0.3, 0.7), Execution::Sequential);
        assert!(r < 1e-10);
        let l = p.xi[0] + p.eta;
        let ent = |e| monodromy_entry(&p, e, l, Execution::Sequential);
        let ent1 = |e| monodromy_entry(&p, e, l - p.eta, Execution::Sequential);
        let m = &ent(Entry::A) * &ent1(Entry::D) - &ent(Entry::B) * &ent1(Entry::C);
        assert!(m.norm_l2() < 1e-12);
    }

    #[test]
    fn quantum_determinant_at_inhomogeneity() {
        let p = params3();
        let l = p.xi[0];
        let ent = |e, x| monodromy_entry(&p, e, x, Execution::Sequential);
        let m = &ent(Entry::A, l) * &ent(Entry::D, l - p.eta) - &ent(Entry::B, l) * &ent(Entry::C, l - p.eta);
        let q = p.a(l) * p.d(l - p.eta);
        assert!(q.norm() > 1e-3);
        for i in 0..8 {
            for j in 0..8 {
                let want = if i == j { q } else { ZERO };
                assert!((m[(i, j)] - want).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn hamiltonian_trace_and_symmetry() {
        for n in 2..=5 {
            let h = hamiltonian_antiperiodic_real(n).unwrap();
            let tr: f64 = (0..h.nrows()).map(|i| h[(i, i)]).sum();
            assert_eq!(tr, -(n as f64) * (1u64 << n) as f64);
            let asym = Mat::<f64>::from_fn(h.nrows(), h.ncols(), |i, j| h[(i, j)] - h[(j, i)]);
            assert_eq!(asym.norm_l2(), 0.0);
        }
    }

    #[test]
    fn twist_eigenvalues() {
        let t = Twist::random_unitary_eigen(11);
        assert!((t.k1 * t.k2 - t.det()).norm() < 1e-12);
        assert!((t.k1 + t.k2 - t.trace()).norm() < 1e-12);
        assert!((t.mu().norm() - 1.0).abs() < 1e-12);
        let sx = Twist::sigma_x();
        assert_eq!(sx.alpha(), Some(1.0));
        let auto = Twist::new(ZERO, ONE, ONE, ZERO).unwrap();
        assert_eq!(auto.k1, ONE);
        let p = t.eigenbasis().unwrap();
        let pinv = mat2_inv(&p).unwrap();
        let back = mat2_mul(&mat2_mul(&p, &[[t.k2, ZERO], [ZERO, t.k1]]), &pinv);
        for i in 0..2 {
            for j in 0..2 {
                assert!((back[i][j] - t.matrix()[i][j]).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn genericity_rejected() {
        let eta = c(0.0, -1.0);
        assert!(ChainParams::new(eta, vec![c(0.1, 0.0), c(0.1, 0.0) + eta]).is_err());
        assert!(ChainParams::homogeneous(4, eta).unwrap().require_generic().is_err());
    }
}
