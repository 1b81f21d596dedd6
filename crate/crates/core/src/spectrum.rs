//! Transfer-matrix spectrum, Baxter polynomials and Bethe equations.

use crate::algebra_core::{
    apply_entry, apply_entry_left, apply_product_gate, apply_transfer, basis_vector, mat2_inv,
    mat2_transpose, transfer_matrix, ChainParams, Entry, Twist, IDENTITY2, ZERO,
};
use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::linalg;
use crate::poly;
use crate::slavnov::frak_a;
use crate::C;
use faer::Mat;
use std::f64::consts::PI;

/// Monic polynomial stored both as roots and ascending coefficients.
#[derive(Clone, Debug, PartialEq)]
pub struct QFunction {
    roots: Vec<C>,
    coeffs: Vec<C>,
}

impl QFunction {
    pub fn from_roots(roots: Vec<C>) -> Self {
        let coeffs = poly::coeffs_from_roots(&roots);
        Self { roots, coeffs }
    }

    pub fn one() -> Self {
        Self::from_roots(Vec::new())
    }

    pub fn degree(&self) -> usize {
        self.roots.len()
    }

    pub fn roots(&self) -> &[C] {
        &self.roots
    }

    pub fn coeffs(&self) -> &[C] {
        &self.coeffs
    }

    pub fn eval(&self, x: C) -> C {
        poly::eval_roots(&self.roots, x)
    }

    /// `Q'(x)/Q(x)`.
    pub fn dlog(&self, x: C) -> C {
        self.roots.iter().map(|r| (x - r).inv()).sum()
    }

    /// Relative mismatch between the root and coefficient forms.
    pub fn consistency(&self) -> f64 {
        let probe = [C::new(0.31, 0.17), C::new(-0.7, 0.4), C::new(1.3, -0.9)];
        probe
            .iter()
            .map(|&x| {
                let a = self.eval(x);
                let b = poly::eval_coeffs(&self.coeffs, x);
                (a - b).norm() / a.norm().max(1e-300)
            })
            .fold(0.0, f64::max)
    }

    /// Copy with root `k` moved by `delta`.
    pub fn perturbed(&self, k: usize, delta: C) -> Self {
        let mut r = self.roots.clone();
        r[k] += delta;
        Self::from_roots(r)
    }

    pub fn root_sum(&self) -> C {
        self.roots.iter().sum()
    }
}

/// Eigenvalue polynomial of the transfer matrix, ascending coefficients.
#[derive(Clone, Debug, PartialEq)]
pub struct TauPoly {
    pub coeffs: Vec<C>,
}

impl TauPoly {
    pub fn eval(&self, x: C) -> C {
        poly::eval_coeffs(&self.coeffs, x)
    }

    pub fn degree(&self) -> usize {
        let scale = self.coeffs.iter().map(|c| c.norm()).fold(0.0, f64::max);
        (0..self.coeffs.len())
            .rev()
            .find(|&k| self.coeffs[k].norm() > 1e-10 * scale.max(1e-300))
            .unwrap_or(0)
    }

    pub fn neg(&self) -> Self {
        Self { coeffs: self.coeffs.iter().map(|c| -c).collect() }
    }

    /// `τ` read off the TQ relation from `Q`.
    pub fn from_q(params: &ChainParams, twist: &Twist, q: &QFunction) -> Self {
        let center = mean(&params.xi);
        let nodes = poly::circle_nodes(params.n + 1, center, 1.0);
        let vals: Vec<C> = nodes.iter().map(|&x| tau_from_q(params, twist, q, x)).collect();
        Self { coeffs: poly::interpolate_on_circle(&vals, center, 1.0) }
    }
}

fn mean(xs: &[C]) -> C {
    xs.iter().sum::<C>() / xs.len() as f64
}

/// `(k2 a(λ) Q(λ-η) + k1 d(λ) Q(λ+η)) / Q(λ)`.
pub fn tau_from_q(params: &ChainParams, twist: &Twist, q: &QFunction, lambda: C) -> C {
    let eta = params.eta;
    (twist.k2 * params.a(lambda) * q.eval(lambda - eta)
        + twist.k1 * params.d(lambda) * q.eval(lambda + eta))
        / q.eval(lambda)
}

/// One eigenvalue with its right and left eigenvectors, normalized so that
/// `left · right = 1`.
#[derive(Clone, Debug)]
pub struct Eigenpair {
    pub tau: TauPoly,
    pub right: Vec<C>,
    pub left: Vec<C>,
    pub warning: Option<String>,
}

/// Reference point for the dense eigendecomposition.
pub const LAMBDA_STAR: C = C::new(0.37, 0.113);

/// Full eigendecomposition of the twisted transfer matrix.
pub fn diagonalize_transfer(
    params: &ChainParams,
    twist: &Twist,
    exec: Execution,
) -> Result<Vec<Eigenpair>> {
    let t = transfer_matrix(params, twist, LAMBDA_STAR, exec);
    let dim = params.dim();
    let eig = t
        .eigen()
        .map_err(|e| Error::NoConvergence(format!("eigendecomposition: {e:?}")))?;
    let u = eig.U().to_owned();
    let s: Vec<C> = (0..dim).map(|i| eig.S()[i]).collect();
    let uinv = linalg::solve(&u, &Mat::<C>::identity(dim, dim))?;
    let scale = s.iter().map(|x| x.norm()).fold(0.0, f64::max).max(1e-300);
    let center = mean(&params.xi);
    let nodes = poly::circle_nodes(params.n + 1, center, 1.0);
    let k = twist.matrix();
    let pairs = exec.map(dim, |i| {
        let right: Vec<C> = (0..dim).map(|r| u[(r, i)]).collect();
        let left: Vec<C> = (0..dim).map(|c| uinv[(i, c)]).collect();
        let norm = linalg::pair(&left, &right);
        let vals: Vec<C> = nodes
            .iter()
            .map(|&x| linalg::pair(&left, &apply_transfer(params, &k, x, &right)) / norm)
            .collect();
        let gap = s
            .iter()
            .enumerate()
            .filter(|&(j, _)| j != i)
            .map(|(_, x)| (x - s[i]).norm())
            .fold(f64::INFINITY, f64::min);
        let warning = (gap < 1e-8 * scale)
            .then(|| format!("near-degenerate eigenvalue, gap {gap:.3e}"));
        Eigenpair {
            tau: TauPoly { coeffs: poly::interpolate_on_circle(&vals, center, 1.0) },
            right,
            left,
            warning,
        }
    });
    Ok(pairs)
}

fn tq_column(params: &ChainParams, twist: &Twist, tau: &TauPoly, x: C, j: i32) -> (C, f64) {
    let eta = params.eta;
    let t1 = tau.eval(x) * x.powi(j);
    let t2 = twist.k2 * params.a(x) * (x - eta).powi(j);
    let t3 = twist.k1 * params.d(x) * (x + eta).powi(j);
    (t1 - t2 - t3, t1.norm() + t2.norm() + t3.norm())
}

/// Sample points for the TQ and Wronskian systems.
fn sample_points(params: &ChainParams, count: usize) -> Vec<C> {
    poly::circle_nodes(count, mean(&params.xi) + C::new(0.1, 0.05), 0.9)
}

/// Minimal-degree monic `Q` solving the TQ relation for `τ`.
pub fn q_from_tau(params: &ChainParams, twist: &Twist, tau: &TauPoly) -> Result<QFunction> {
    let n = params.n;
    let pts = sample_points(params, 2 * n + 4);
    for r in 0..=n {
        let mut m = Mat::<C>::zeros(pts.len(), r + 1);
        let mut scales = vec![1.0; r + 1];
        for j in 0..=r {
            let col: Vec<(C, f64)> = pts.iter().map(|&x| tq_column(params, twist, tau, x, j as i32)).collect();
            scales[j] = col.iter().map(|c| c.1).fold(0.0, f64::max).max(1e-300);
            for (i, (v, _)) in col.iter().enumerate() {
                m[(i, j)] = v / scales[j];
            }
        }
        let (s, v) = linalg::smallest_right_singular(&m)?;
        let smin = s[r];
        if smin >= 1e-8 {
            continue;
        }
        if r > 0 && s[r - 1] <= 1e-4 {
            return Err(Error::Degenerate(format!("TQ nullspace of dimension > 1 at degree {r}")));
        }
        if v[r].norm() < 1e-10 {
            continue;
        }
        let lead = v[r] / scales[r];
        let coeffs: Vec<C> = v.iter().zip(&scales).map(|(c, s)| c / s / lead).collect();
        let roots = poly::roots_of(&coeffs)?;
        let q = QFunction::from_roots(roots);
        return Ok(polish_roots(params, twist, &q).unwrap_or(q));
    }
    Err(Error::NoNullspace(n))
}

/// `F_j = log(-𝔞(q_j)/μ)`.
fn log_bethe(params: &ChainParams, twist: &Twist, roots: &[C]) -> Option<Vec<C>> {
    let q = QFunction::from_roots(roots.to_vec());
    roots
        .iter()
        .map(|&r| {
            let v = frak_a(params, &q, r).ok()? / (-twist.mu());
            v.is_finite().then(|| v.ln())
        })
        .collect()
}

fn max_norm(v: &[C]) -> f64 {
    v.iter().map(|x| x.norm()).fold(0.0, f64::max)
}

/// Newton refinement of the Bethe roots; only improving steps are taken.
pub fn polish_roots(params: &ChainParams, twist: &Twist, q: &QFunction) -> Result<QFunction> {
    let eta = params.eta;
    let mut roots = q.roots().to_vec();
    let r = roots.len();
    if r == 0 {
        return Ok(q.clone());
    }
    let mut f = log_bethe(params, twist, &roots).ok_or_else(|| Error::Pole("Bethe root at a pole".into()))?;
    for _ in 0..30 {
        let res = max_norm(&f);
        if res < 1e-15 {
            break;
        }
        let jac = Mat::<C>::from_fn(r, r, |j, k| {
            let qj = roots[j];
            if j == k {
                let mut v: C = params.xi.iter().map(|x| (qj - x).inv() - (qj - x + eta).inv()).sum();
                for (l, &ql) in roots.iter().enumerate() {
                    if l != j {
                        v += (qj + eta - ql).inv() - (qj - eta - ql).inv();
                    }
                }
                v
            } else {
                -(qj + eta - roots[k]).inv() + (qj - eta - roots[k]).inv()
            }
        });
        let Ok(step) = linalg::solve_vec(&jac, &f) else { break };
        let mut accepted = false;
        let mut t = 1.0;
        for _ in 0..10 {
            let trial: Vec<C> = roots.iter().zip(&step).map(|(x, s)| x - s * t).collect();
            if let Some(ft) = log_bethe(params, twist, &trial) {
                if max_norm(&ft) < res {
                    roots = trial;
                    f = ft;
                    accepted = true;
                    break;
                }
            }
            t *= 0.5;
        }
        if !accepted {
            break;
        }
    }
    Ok(QFunction::from_roots(roots))
}

/// `max_j |-𝔞(q_j)/μ - 1|`.
pub fn bethe_residual(params: &ChainParams, twist: &Twist, q: &QFunction) -> Result<f64> {
    let mut worst: f64 = 0.0;
    for &r in q.roots() {
        let v = frak_a(params, q, r)? / (-twist.mu());
        worst = worst.max((v - 1.0).norm());
    }
    Ok(worst)
}

/// Relative TQ residual at `count` points on a circle.
pub fn tq_residual(params: &ChainParams, twist: &Twist, tau: &TauPoly, q: &QFunction, count: usize) -> f64 {
    let eta = params.eta;
    poly::circle_nodes(count, mean(&params.xi) - C::new(0.2, 0.1), 1.7)
        .iter()
        .map(|&x| {
            let t1 = tau.eval(x) * q.eval(x);
            let t2 = twist.k2 * params.a(x) * q.eval(x - eta);
            let t3 = twist.k1 * params.d(x) * q.eval(x + eta);
            (t1 - t2 - t3).norm() / (t1.norm() + t2.norm() + t3.norm()).max(1e-300)
        })
        .fold(0.0, f64::max)
}

/// Dual polynomial `Q̂` of degree `N - R` from the Wronskian relation.
pub fn dual_q(params: &ChainParams, twist: &Twist, q: &QFunction) -> Result<QFunction> {
    let (k1, k2) = (twist.k1, twist.k2);
    if (k1 - k2).norm() < 1e-10 * k1.norm() {
        return Err(Error::InvalidTwist("dual Q requires k1 != k2".into()));
    }
    let n = params.n;
    let deg = n
        .checked_sub(q.degree())
        .ok_or(Error::NoNullspace(n))?;
    let eta = params.eta;
    let pts = sample_points(params, 2 * n + 4);
    let mut m = Mat::<C>::zeros(pts.len(), deg + 1);
    let mut rhs = vec![ZERO; pts.len()];
    for (i, &x) in pts.iter().enumerate() {
        let (qm, q0) = (q.eval(x - eta), q.eval(x));
        for j in 0..=deg {
            m[(i, j)] = k2 * x.powi(j as i32) * qm - k1 * q0 * (x - eta).powi(j as i32);
        }
        rhs[i] = (k2 - k1) * params.d(x);
    }
    let coeffs = linalg::lstsq(&m, &rhs)?;
    if (coeffs[deg] - 1.0).norm() > 1e-6 {
        return Err(Error::NoNullspace(deg));
    }
    let monic: Vec<C> = coeffs.iter().map(|c| c / coeffs[deg]).collect();
    let qh = QFunction::from_roots(poly::roots_of(&monic)?);
    let polished = polish_roots(params, &twist.swapped(), &qh).unwrap_or(qh);
    if wronskian_residual(params, twist, q, &polished) > 1e-6 {
        return Err(Error::NoNullspace(deg));
    }
    Ok(polished)
}

/// Relative residual of `k2 Q̂(λ)Q(λ-η) - k1 Q(λ)Q̂(λ-η) = (k2-k1) d(λ)`.
pub fn wronskian_residual(params: &ChainParams, twist: &Twist, q: &QFunction, qhat: &QFunction) -> f64 {
    let eta = params.eta;
    poly::circle_nodes(50, mean(&params.xi) + C::new(0.3, -0.2), 1.4)
        .iter()
        .map(|&x| {
            let t1 = twist.k2 * qhat.eval(x) * q.eval(x - eta);
            let t2 = twist.k1 * q.eval(x) * qhat.eval(x - eta);
            let t3 = (twist.k2 - twist.k1) * params.d(x);
            (t1 - t2 - t3).norm() / (t1.norm() + t2.norm() + t3.norm()).max(1e-300)
        })
        .fold(0.0, f64::max)
}

/// Residual of the root sum rule implied by the Wronskian relation.
pub fn sum_rule_residual(params: &ChainParams, twist: &Twist, q: &QFunction, qhat: &QFunction) -> f64 {
    let (k1, k2) = (twist.k1, twist.k2);
    let shift = params.eta * (k2 * q.degree() as f64 - k1 * qhat.degree() as f64) / (k2 - k1);
    let xi_sum: C = params.xi.iter().sum();
    (q.root_sum() + qhat.root_sum() + shift - xi_sum).norm()
}

/// `ε(λ) = -2/(λ² + 1/4)` summed over the roots.
pub fn energy_from_roots(q: &QFunction) -> Result<f64> {
    let mut e = ZERO;
    for &r in q.roots() {
        let den = r * r + 0.25;
        if den.norm() < 1e-12 {
            return Err(Error::Pole(format!("root {r} at ±i/2")));
        }
        e += -2.0 / den;
    }
    Ok(e.re)
}

pub fn p(lambda: f64) -> f64 {
    2.0 * (2.0 * lambda).atan()
}

pub fn p_prime(lambda: f64) -> f64 {
    1.0 / (lambda * lambda + 0.25)
}

pub fn theta(lambda: f64) -> f64 {
    -2.0 * lambda.atan()
}

pub fn theta_prime(lambda: f64) -> f64 {
    -2.0 / (lambda * lambda + 1.0)
}

/// Counting function of a set of real roots at `η = -i`, with real site
/// offsets `x_n = ξ_n - η/2`.
#[derive(Clone, Debug)]
pub struct CountingFunction {
    pub offsets: Vec<f64>,
    pub roots: Vec<f64>,
}

impl CountingFunction {
    pub fn new(params: &ChainParams, q: &QFunction) -> Result<Self> {
        let offsets = params
            .real_offsets()
            .ok_or_else(|| Error::InvalidParams("counting function needs Im ξ_n = Im η/2".into()))?;
        if let Some(r) = q.roots().iter().find(|r| r.im.abs() >= 1.0) {
            return Err(Error::Input(format!("root {r} outside the principal-branch strip")));
        }
        Ok(Self { offsets, roots: q.roots().iter().map(|r| r.re).collect() })
    }

    fn nf(&self) -> f64 {
        self.offsets.len() as f64
    }

    pub fn p_tot(&self, lambda: f64) -> f64 {
        self.offsets.iter().map(|x| p(lambda - x)).sum::<f64>() / self.nf()
    }

    pub fn p_tot_prime(&self, lambda: f64) -> f64 {
        self.offsets.iter().map(|x| p_prime(lambda - x)).sum::<f64>() / self.nf()
    }

    pub fn value(&self, lambda: f64) -> f64 {
        self.p_tot(lambda) + self.roots.iter().map(|r| theta(lambda - r)).sum::<f64>() / self.nf()
    }

    pub fn derivative(&self, lambda: f64) -> f64 {
        self.p_tot_prime(lambda) + self.roots.iter().map(|r| theta_prime(lambda - r)).sum::<f64>() / self.nf()
    }

    /// Grid points where the derivative is not positive.
    pub fn monotonicity_violations(&self, lo: f64, hi: f64, points: usize) -> Vec<f64> {
        (0..points)
            .map(|k| lo + (hi - lo) * k as f64 / (points - 1).max(1) as f64)
            .filter(|&x| self.derivative(x) <= 0.0)
            .collect()
    }
}

/// Integers `n_j` of the logarithmic Bethe equations.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct QuantumNumbers {
    pub n: Vec<i64>,
}

impl QuantumNumbers {
    pub fn consecutive(start: i64, count: usize) -> Self {
        Self { n: (0..count as i64).map(|j| start + j).collect() }
    }

    pub fn sector(&self) -> usize {
        self.n.len()
    }

    pub fn validate(&self) -> Result<()> {
        if self.n.windows(2).all(|w| w[0] < w[1]) {
            Ok(())
        } else {
            Err(Error::Input("quantum numbers must be strictly increasing".into()))
        }
    }
}

/// Consecutive quantum numbers centered on zero for `R = N/2`.
pub fn ground_state_numbers(n_sites: usize, twist: &Twist) -> Result<QuantumNumbers> {
    let alpha = twist
        .alpha()
        .ok_or_else(|| Error::InvalidTwist("|μ| must be 1".into()))?;
    let start = (1.0 + alpha / 2.0).round() as i64;
    Ok(QuantumNumbers::consecutive(start, n_sites / 2))
}

/// Right-hand side of the logarithmic Bethe equation for `n_j`.
pub fn newton_target(n_sites: usize, sector: usize, alpha: f64, nj: i64) -> f64 {
    let (nf, rf) = (n_sites as f64, sector as f64);
    (2.0 * nj as f64 - nf + rf - 1.0 - alpha) * PI / nf
}

fn invert_p_tot(cf: &CountingFunction, target: f64) -> Result<f64> {
    if target.abs() >= PI {
        return Err(Error::Input(format!("target {target} outside (-π, π)")));
    }
    let (mut lo, mut hi) = (-1.0, 1.0);
    while cf.p_tot(lo) > target {
        lo *= 2.0;
    }
    while cf.p_tot(hi) < target {
        hi *= 2.0;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if cf.p_tot(mid) < target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Real Bethe roots from the logarithmic Bethe equations by damped Newton.
pub fn solve_bethe_newton(params: &ChainParams, twist: &Twist, qn: &QuantumNumbers) -> Result<QFunction> {
    qn.validate()?;
    if (params.eta - C::new(0.0, -1.0)).norm() > 1e-14 {
        return Err(Error::InvalidParams("the Newton path uses η = -i".into()));
    }
    let alpha = twist
        .alpha()
        .ok_or_else(|| Error::InvalidTwist("|μ| must be 1".into()))?;
    let r = qn.sector();
    let mut cf = CountingFunction::new(params, &QFunction::one())?;
    let targets: Vec<f64> = qn.n.iter().map(|&nj| newton_target(params.n, r, alpha, nj)).collect();
    let mut lam = targets.iter().map(|&t| invert_p_tot(&cf, t)).collect::<Result<Vec<_>>>()?;
    let nf = params.n as f64;
    let resid = |cf: &mut CountingFunction, lam: &[f64]| -> Vec<f64> {
        cf.roots = lam.to_vec();
        lam.iter().zip(&targets).map(|(&l, t)| cf.value(l) - t).collect()
    };
    let maxabs = |v: &[f64]| v.iter().fold(0.0f64, |a, x| a.max(x.abs()));
    let mut f = resid(&mut cf, &lam);
    let mut converged = maxabs(&f) <= 1e-12;
    for _ in 0..200 {
        if converged {
            break;
        }
        let jac = Mat::<C>::from_fn(r, r, |j, k| {
            let v = if j == k {
                cf.p_tot_prime(lam[j])
                    + (0..r).filter(|&l| l != j).map(|l| theta_prime(lam[j] - lam[l])).sum::<f64>() / nf
            } else {
                -theta_prime(lam[j] - lam[k]) / nf
            };
            C::new(v, 0.0)
        });
        let rhs: Vec<C> = f.iter().map(|&x| C::new(x, 0.0)).collect();
        let step: Vec<f64> = linalg::solve_vec(&jac, &rhs)?.iter().map(|s| s.re).collect();
        let res = maxabs(&f);
        let mut t = 1.0;
        let mut improved = false;
        for _ in 0..30 {
            let trial: Vec<f64> = lam.iter().zip(&step).map(|(l, s)| l - t * s).collect();
            let ft = resid(&mut cf, &trial);
            if maxabs(&ft) < res {
                lam = trial;
                f = ft;
                improved = true;
                break;
            }
            t *= 0.5;
        }
        if !improved {
            cf.roots = lam.clone();
            break;
        }
        converged = maxabs(&f) <= 1e-12;
    }
    if !converged {
        return Err(Error::NoConvergence(format!("log Bethe residual {:.3e}", maxabs(&f))));
    }
    let mut sorted = lam.clone();
    sorted.sort_by(f64::total_cmp);
    if sorted.windows(2).any(|w| w[1] - w[0] < 1e-10) {
        return Err(Error::Degenerate("coinciding Bethe roots".into()));
    }
    Ok(QFunction::from_roots(lam.iter().map(|&x| C::new(x, 0.0)).collect()))
}

/// Ground state of a chain with `|μ| = 1`.
pub fn ground_state(params: &ChainParams, twist: &Twist) -> Result<QFunction> {
    let qn = ground_state_numbers(params.n, twist)?;
    let q = solve_bethe_newton(params, twist, &qn)?;
    polish_roots(params, twist, &q)
}

/// Transfer-matrix eigenvectors by the algebraic Bethe ansatz in the
/// eigenbasis of the twist: `(left, right)` with
/// `left = ⟨↑|∏C(q) G^{-1}`, `right = G ∏B(q)|↑⟩`, `G = P^{⊗N}`.
pub fn aba_eigenvectors(params: &ChainParams, twist: &Twist, q: &QFunction) -> Result<(Vec<C>, Vec<C>)> {
    let p = twist.eigenbasis()?;
    let pinv_t = mat2_transpose(&mat2_inv(&p)?);
    let up = basis_vector(params.dim(), 0);
    let mut right = up.clone();
    let mut left = up;
    for &z in q.roots() {
        right = apply_entry(params, &IDENTITY2, z, Entry::B, &right);
        left = apply_entry_left(params, &IDENTITY2, z, Entry::C, &left);
    }
    Ok((apply_product_gate(params.n, &pinv_t, &left), apply_product_gate(params.n, &p, &right)))
}

/// `‖𝒯(λ)v - τ(λ)v‖ / (‖v‖ max(1, |τ(λ)|))`, maximized over a few points.
pub fn vector_eigen_residual(params: &ChainParams, twist: &Twist, tau: &TauPoly, v: &[C], left: bool) -> f64 {
    let k = twist.matrix();
    let nv = linalg::norm(v).max(1e-300);
    sample_points(params, 7)
        .iter()
        .map(|&x| {
            let tv = if left {
                crate::algebra_core::apply_transfer_left(params, &k, x, v)
            } else {
                apply_transfer(params, &k, x, v)
            };
            let t = tau.eval(x);
            let r: f64 = tv.iter().zip(v).map(|(a, b)| (a - t * b).norm_sqr()).sum::<f64>().sqrt();
            r / (nv * t.norm().max(1.0))
        })
        .fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra_core::{c, ONE};

    fn one_site() -> ChainParams {
        ChainParams::new(c(0.0, -1.0), vec![c(0.15, -0.5)]).unwrap()
    }

    #[test]
    fn one_site_spectrum() {
        let p = one_site();
        let sp = diagonalize_transfer(&p, &Twist::sigma_x(), Execution::Sequential).unwrap();
        assert_eq!(sp.len(), 2);
        let mut consts: Vec<C> = sp.iter().map(|e| e.tau.eval(c(0.4, 0.9))).collect();
        consts.sort_by(|a, b| a.im.total_cmp(&b.im));
        assert!((consts[0] - p.eta).norm() < 1e-12);
        assert!((consts[1] + p.eta).norm() < 1e-12);
    }

    #[test]
    fn one_site_q_functions() {
        let p = one_site();
        let tw = Twist::sigma_x();
        let minus = TauPoly { coeffs: vec![-p.eta] };
        assert_eq!(q_from_tau(&p, &tw, &minus).unwrap().degree(), 0);
        let plus = TauPoly { coeffs: vec![p.eta] };
        let q = q_from_tau(&p, &tw, &plus).unwrap();
        assert_eq!(q.degree(), 1);
        assert!((q.roots()[0] - (p.xi[0] - p.eta / 2.0)).norm() < 1e-12);
        assert!(bethe_residual(&p, &tw, &q).unwrap() < 1e-14);
        let qh = dual_q(&p, &tw, &QFunction::one()).unwrap();
        assert!((qh.roots()[0] - (p.xi[0] - p.eta / 2.0)).norm() < 1e-12);
    }

    #[test]
    fn energy_values() {
        assert_eq!(energy_from_roots(&QFunction::one()).unwrap(), 0.0);
        let e = energy_from_roots(&QFunction::from_roots(vec![ZERO])).unwrap();
        assert!((e + 8.0).abs() < 1e-15);
        assert_eq!(p_prime(0.0), 4.0);
        assert_eq!(theta_prime(0.0), -2.0);
    }

    #[test]
    fn perturbed_root_is_off_shell() {
        let p = ChainParams::random(4, c(0.0, -1.0), 0.3, 2).unwrap();
        let tw = Twist::sigma_x();
        let sp = diagonalize_transfer(&p, &tw, Execution::Sequential).unwrap();
        let q = sp
            .iter()
            .filter_map(|e| q_from_tau(&p, &tw, &e.tau).ok())
            .find(|q| q.degree() == 2)
            .unwrap();
        assert!(bethe_residual(&p, &tw, &q).unwrap() < 1e-8);
        assert!(bethe_residual(&p, &tw, &q.perturbed(0, c(0.1, 0.0))).unwrap() > 1e-3);
    }

    #[test]
    fn spectrum_pairs_under_negation() {
        let p = ChainParams::random(3, c(0.0, -1.0), 0.3, 5).unwrap();
        let tw = Twist::sigma_x();
        let sp = diagonalize_transfer(&p, &tw, Execution::Sequential).unwrap();
        let x = c(0.2, 0.3);
        for e in &sp {
            let v = e.tau.eval(x);
            assert!(sp.iter().any(|f| (f.tau.eval(x) + v).norm() < 1e-9 * v.norm().max(1.0)));
        }
    }

    #[test]
    fn newton_ground_state_symmetric_pair() {
        let p = ChainParams::homogeneous(6, c(0.0, -1.0)).unwrap();
        let tw = Twist::sigma_x();
        let a = solve_bethe_newton(&p, &tw, &QuantumNumbers::consecutive(1, 3)).unwrap();
        let b = solve_bethe_newton(&p, &tw, &QuantumNumbers::consecutive(2, 3)).unwrap();
        let (sa, sb) = (a.root_sum().re, b.root_sum().re);
        assert!(sa * sb < 0.0);
        assert!((sa + sb).abs() < 1e-10);
        assert!((energy_from_roots(&a).unwrap() - energy_from_roots(&b).unwrap()).abs() < 1e-10);
    }

    #[test]
    fn counting_function_odd_and_limit() {
        let cf = CountingFunction { offsets: vec![0.0; 8], roots: vec![-0.7, -0.1, 0.1, 0.7] };
        for x in [0.3, 1.1, 2.5] {
            assert!((cf.value(x) + cf.value(-x)).abs() < 1e-14);
        }
        let lim = (8.0 - 4.0) * PI / 8.0;
        assert!((cf.value(1e9) - lim).abs() < 1e-6);
    }

    #[test]
    fn twist_identity_has_no_dual() {
        let p = one_site();
        assert!(dual_q(&p, &Twist::identity(), &QFunction::one()).is_err());
        let _ = ONE;
    }
}
