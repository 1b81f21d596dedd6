//! SoV bases, separate states and overlaps by direct SoV summation.

use crate::algebra_core::{apply_entry, apply_entry_left, basis_vector, ChainParams, Entry, Twist, ONE, ZERO};
use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::linalg;
use crate::spectrum::{tau_from_q, QFunction};
use crate::C;

/// Binary word `h = (h_1, ..., h_N)`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct SovIndex {
    h: Vec<u8>,
}

impl SovIndex {
    pub fn new(h: Vec<u8>) -> Result<Self> {
        if h.iter().any(|&x| x > 1) {
            return Err(Error::Input("SoV index entries must be 0 or 1".into()));
        }
        Ok(Self { h })
    }

    pub fn zeros(n: usize) -> Self {
        Self { h: vec![0; n] }
    }

    /// `h_n` is bit `n - 1` of `mask`.
    pub fn from_mask(n: usize, mask: usize) -> Self {
        Self { h: (0..n).map(|k| (mask >> k & 1) as u8).collect() }
    }

    pub fn mask(&self) -> usize {
        self.h.iter().enumerate().map(|(k, &x)| (x as usize) << k).sum()
    }

    pub fn entries(&self) -> &[u8] {
        &self.h
    }

    pub fn len(&self) -> usize {
        self.h.len()
    }

    pub fn is_empty(&self) -> bool {
        self.h.is_empty()
    }

    pub fn complement(&self) -> Self {
        Self { h: self.h.iter().map(|x| 1 - x).collect() }
    }

    pub fn weight(&self) -> usize {
        self.h.iter().map(|&x| x as usize).sum()
    }
}

/// `∏_{i<j} (x_j - x_i)`.
pub fn vandermonde(xs: &[C]) -> C {
    let mut v = ONE;
    for i in 0..xs.len() {
        for j in i + 1..xs.len() {
            v *= xs[j] - xs[i];
        }
    }
    v
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Side {
    Left,
    Right,
}

/// The `2^N` SoV basis vectors of one side, indexed by mask.
#[derive(Clone, Debug)]
pub struct SovBasis {
    pub side: Side,
    pub vectors: Vec<Vec<C>>,
}

impl SovBasis {
    pub fn get(&self, h: &SovIndex) -> &[C] {
        &self.vectors[h.mask()]
    }

    /// `Σ_h c(h) v_h`.
    pub fn combine<F>(&self, coeff: F, exec: Execution) -> Vec<C>
    where
        F: Fn(usize) -> C + Sync + Send,
    {
        let dim = self.vectors[0].len();
        let cs = exec.map(self.vectors.len(), &coeff);
        exec.map(dim, |i| {
            let terms: Vec<C> = self.vectors.iter().zip(&cs).map(|(v, c)| c * v[i]).collect();
            crate::exec::pairwise_sum(&terms)
        })
    }
}

fn masks_by_weight(n: usize) -> Vec<Vec<usize>> {
    let mut levels = vec![Vec::new(); n + 1];
    for mask in 0..1usize << n {
        levels[mask.count_ones() as usize].push(mask);
    }
    levels
}

/// Left or right SoV basis for a twist with `b ≠ 0`.
pub fn sov_basis(params: &ChainParams, twist: &Twist, side: Side, exec: Execution) -> Result<SovBasis> {
    params.require_generic()?;
    twist.require_sov()?;
    let n = params.n;
    let dim = params.dim();
    let k = twist.matrix();
    let norm = |site: usize| twist.k1 * params.d(params.xi[site] - params.eta);
    let levels = masks_by_weight(n);
    let mut vectors: Vec<Vec<C>> = vec![Vec::new(); 1 << n];
    match side {
        Side::Left => {
            vectors[0] = basis_vector(dim, 0);
            for level in levels.iter().skip(1) {
                let built = exec.map(level.len(), |i| {
                    let mask = level[i];
                    let site = mask.trailing_zeros() as usize;
                    let prev = &vectors[mask & !(1 << site)];
                    let v = apply_entry_left(params, &k, params.xi[site], Entry::A, prev);
                    linalg::scale(&v, norm(site).inv())
                });
                for (i, v) in built.into_iter().enumerate() {
                    vectors[level[i]] = v;
                }
            }
        }
        Side::Right => {
            let full = (1usize << n) - 1;
            vectors[full] = basis_vector(dim, dim - 1);
            for level in levels.iter().rev().skip(1) {
                let built = exec.map(level.len(), |i| {
                    let mask = level[i];
                    let site = (!mask & full).trailing_zeros() as usize;
                    let prev = &vectors[mask | (1 << site)];
                    let v = apply_entry(params, &k, params.xi[site] - params.eta, Entry::A, prev);
                    linalg::scale(&v, norm(site).inv())
                });
                for (i, v) in built.into_iter().enumerate() {
                    vectors[level[i]] = v;
                }
            }
            let nn = vectors[0][0] * vandermonde(&params.xi);
            if nn.norm() < 1e-300 {
                return Err(Error::Singular("right SoV basis normalization vanishes".into()));
            }
            let inv = nn.inv();
            for v in vectors.iter_mut() {
                v.iter_mut().for_each(|x| *x *= inv);
            }
        }
    }
    Ok(SovBasis { side, vectors })
}

/// Both bases at once.
#[derive(Clone, Debug)]
pub struct SovBases {
    pub left: SovBasis,
    pub right: SovBasis,
}

impl SovBases {
    pub fn new(params: &ChainParams, twist: &Twist, exec: Execution) -> Result<Self> {
        Ok(Self {
            left: sov_basis(params, twist, Side::Left, exec)?,
            right: sov_basis(params, twist, Side::Right, exec)?,
        })
    }
}

/// `∏_n f(ξ_n^{(h_n)})` for `h` encoded in `mask`.
fn product_over_sites(params: &ChainParams, mask: usize, f: &dyn Fn(C) -> C) -> C {
    params.xi_h(mask).into_iter().map(f).product()
}

/// Coefficient of `⟨h|` in the left separate state of `f`.
pub fn left_coefficient(params: &ChainParams, mask: usize, f: &dyn Fn(C) -> C) -> C {
    product_over_sites(params, mask, f) * vandermonde(&params.xi_h(mask))
}

/// Coefficient of `|h⟩` in the right separate state of `f`.
pub fn right_coefficient(params: &ChainParams, twist: &Twist, mask: usize, f: &dyn Fn(C) -> C) -> C {
    let full = (1usize << params.n) - 1;
    let ratio = -twist.k2 / twist.k1;
    product_over_sites(params, mask, f)
        * ratio.powi(mask.count_ones() as i32)
        * vandermonde(&params.xi_h(full & !mask))
}

/// A realized separate state.
#[derive(Clone, Debug)]
pub struct SeparateState {
    pub side: Side,
    pub vector: Vec<C>,
}

/// Separate state built from an arbitrary function of one variable, usually
/// a polynomial.
pub fn separate_state_fn(
    params: &ChainParams,
    twist: &Twist,
    basis: &SovBasis,
    f: &(dyn Fn(C) -> C + Sync),
    exec: Execution,
) -> SeparateState {
    let vector = match basis.side {
        Side::Left => basis.combine(|mask| left_coefficient(params, mask, f), exec),
        Side::Right => basis.combine(|mask| right_coefficient(params, twist, mask, f), exec),
    };
    SeparateState { side: basis.side, vector }
}

pub fn separate_state(
    params: &ChainParams,
    twist: &Twist,
    basis: &SovBasis,
    q: &QFunction,
    exec: Execution,
) -> SeparateState {
    separate_state_fn(params, twist, basis, &|x| q.eval(x), exec)
}

/// `Σ_h ∏_n [f1 f2 (-k2/k1)^{h_n}](ξ_n^{(h_n)}) V(ξ^{(1-h)})`.
pub fn sov_overlap_direct_fn(
    params: &ChainParams,
    twist: &Twist,
    f1: &(dyn Fn(C) -> C + Sync),
    f2: &(dyn Fn(C) -> C + Sync),
    exec: Execution,
) -> C {
    exec.sum(1 << params.n, |mask| right_coefficient(params, twist, mask, &|x| f1(x) * f2(x)))
}

pub fn sov_overlap_direct(
    params: &ChainParams,
    twist: &Twist,
    q_left: &QFunction,
    q_right: &QFunction,
    exec: Execution,
) -> C {
    sov_overlap_direct_fn(params, twist, &|x| q_left.eval(x), &|x| q_right.eval(x), exec)
}

/// Sample points for eigenvalue residuals.
pub fn residual_points(params: &ChainParams) -> Vec<C> {
    let c0 = params.xi.iter().sum::<C>() / params.n as f64;
    (0..10)
        .map(|k| c0 + C::from_polar(0.6 + 0.1 * k as f64, 0.7 + 2.3 * k as f64))
        .collect()
}

/// `max_λ ‖𝒯(λ)v - τ(λ)v‖ / (‖v‖ max(1, |τ(λ)|))` for the right separate
/// state of `q`.
pub fn eigenstate_residual(
    params: &ChainParams,
    twist: &Twist,
    basis: &SovBasis,
    q: &QFunction,
    exec: Execution,
) -> Result<f64> {
    let state = separate_state(params, twist, basis, q, exec);
    let nv = linalg::norm(&state.vector);
    if nv < 1e-300 {
        return Err(Error::Degenerate("zero-norm separate state".into()));
    }
    let k = twist.matrix();
    let pts = residual_points(params);
    let res = exec.map(pts.len(), |i| {
        let x = pts[i];
        let tau = tau_from_q(params, twist, q, x);
        let tv = match state.side {
            Side::Right => crate::algebra_core::apply_transfer(params, &k, x, &state.vector),
            Side::Left => crate::algebra_core::apply_transfer_left(params, &k, x, &state.vector),
        };
        let r: f64 = tv
            .iter()
            .zip(&state.vector)
            .map(|(a, b)| (a - tau * b).norm_sqr())
            .sum::<f64>()
            .sqrt();
        r / (nv * tau.norm().max(1.0))
    });
    Ok(res.into_iter().fold(0.0, f64::max))
}

/// Reference state for the generalized Bethe form.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Reference {
    /// Separate state of the constant polynomial; use the roots of `Q`.
    One,
    /// Alternative reference; use the roots of the dual polynomial `Q̂`.
    OneAlt,
}

/// Reference state on the given side.
pub fn reference_state(params: &ChainParams, twist: &Twist, basis: &SovBasis, which: Reference, exec: Execution) -> Vec<C> {
    let full = (1usize << params.n) - 1;
    let coeff = |mask: usize| -> C {
        let w = mask.count_ones() as i32;
        match (basis.side, which) {
            (Side::Left, Reference::One) => vandermonde(&params.xi_h(mask)),
            (Side::Right, Reference::One) => {
                (-twist.k2 / twist.k1).powi(w) * vandermonde(&params.xi_h(full & !mask))
            }
            (Side::Left, Reference::OneAlt) => {
                (twist.k1 / twist.k2).powi(w) * vandermonde(&params.xi_h(mask))
            }
            (Side::Right, Reference::OneAlt) => {
                C::new(if w % 2 == 0 { 1.0 } else { -1.0 }, 0.0) * vandermonde(&params.xi_h(full & !mask))
            }
        }
    };
    basis.combine(coeff, exec)
}

/// `⟨ref|∏B^{(K)}(q_k)` or `∏B^{(K)}(q_k)|ref⟩`.
pub fn generalized_bethe_state(
    params: &ChainParams,
    twist: &Twist,
    basis: &SovBasis,
    roots: &[C],
    which: Reference,
    exec: Execution,
) -> Vec<C> {
    let k = twist.matrix();
    let mut v = reference_state(params, twist, basis, which, exec);
    for &z in roots {
        v = match basis.side {
            Side::Left => apply_entry_left(params, &k, z, Entry::B, &v),
            Side::Right => apply_entry(params, &k, z, Entry::B, &v),
        };
    }
    v
}

/// `b^R (-1)^{RN}`, the constant relating the Bethe form to the separate state.
pub fn bethe_state_constant(params: &ChainParams, twist: &Twist, r: usize) -> C {
    let sign = if (r * params.n).is_multiple_of(2) { 1.0 } else { -1.0 };
    twist.b.powi(r as i32) * sign
}

/// Largest `|⟨h|k⟩ V(ξ^{(h)}) - δ_{hk}|`.
pub fn orthogonality_defect(params: &ChainParams, bases: &SovBases, exec: Execution) -> f64 {
    let dim = bases.left.vectors.len();
    exec.map(dim, |h| {
        let vh = vandermonde(&params.xi_h(h));
        (0..dim)
            .map(|k| {
                let s = linalg::pair(&bases.left.vectors[h], &bases.right.vectors[k]) * vh;
                let want = if h == k { ONE } else { ZERO };
                (s - want).norm()
            })
            .fold(0.0, f64::max)
    })
    .into_iter()
    .fold(0.0, f64::max)
}
