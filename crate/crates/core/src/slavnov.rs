//! Determinant formulas for ratios of scalar products `⟨Q̄|Q⟩/⟨Q|Q⟩`.

use crate::algebra_core::{ChainParams, Twist, ONE, ZERO};
use crate::error::{Error, Result};
use crate::linalg;
use crate::sov_states::vandermonde;
use crate::spectrum::QFunction;
use crate::thermo::{density_rho, density_rho_tot};
use crate::C;
use faer::Mat;

pub fn kernel_t(eta: C, lambda: C) -> C {
    eta / (lambda * (lambda + eta))
}

pub fn kernel_k(eta: C, lambda: C) -> C {
    2.0 * eta / ((lambda + eta) * (lambda - eta))
}

fn pole_tol(params: &ChainParams) -> f64 {
    1e-10 * params.eta.norm()
}

/// `𝔞_Q(λ) = d(λ)/a(λ) · Q(λ+η)/Q(λ-η)`.
pub fn frak_a(params: &ChainParams, q: &QFunction, lambda: C) -> Result<C> {
    let eta = params.eta;
    let tol = pole_tol(params);
    if params.xi.iter().any(|x| (lambda - x + eta).norm() < tol)
        || q.roots().iter().any(|r| (lambda - eta - r).norm() < tol)
    {
        return Err(Error::Pole(format!("𝔞 has a pole at {lambda}")));
    }
    Ok(params.d(lambda) / params.a(lambda) * q.eval(lambda + eta) / q.eval(lambda - eta))
}

/// `𝔞'_Q(λ)/𝔞_Q(λ)`.
pub fn dlog_frak_a(params: &ChainParams, q: &QFunction, lambda: C) -> C {
    let eta = params.eta;
    params
        .xi
        .iter()
        .map(|x| (lambda - x).inv() - (lambda - x + eta).inv())
        .sum::<C>()
        + q.dlog(lambda + eta)
        - q.dlog(lambda - eta)
}

/// `Q̄` given by kept roots of `Q` and inserted points.
#[derive(Clone, Debug, PartialEq)]
pub struct BarQSpec {
    pub kept: Vec<usize>,
    pub inserted: Vec<C>,
}

impl BarQSpec {
    pub fn same(q: &QFunction) -> Self {
        Self { kept: (0..q.degree()).collect(), inserted: Vec::new() }
    }

    /// Inserts the inhomogeneities with the given 0-based indices.
    pub fn with_inhomogeneities(params: &ChainParams, kept: Vec<usize>, sites: &[usize]) -> Self {
        Self { kept, inserted: sites.iter().map(|&k| params.xi[k]).collect() }
    }

    pub fn degree(&self) -> usize {
        self.kept.len() + self.inserted.len()
    }

    pub fn roots(&self, q: &QFunction) -> Vec<C> {
        self.kept.iter().map(|&i| q.roots()[i]).chain(self.inserted.iter().copied()).collect()
    }

    pub fn polynomial(&self, q: &QFunction) -> QFunction {
        QFunction::from_roots(self.roots(q))
    }

    fn validate(&self, q: &QFunction) -> Result<()> {
        let mut seen = vec![false; q.degree()];
        for &i in &self.kept {
            if i >= q.degree() || seen[i] {
                return Err(Error::Input(format!("invalid kept root index {i}")));
            }
            seen[i] = true;
        }
        Ok(())
    }
}

fn sign(parity: usize) -> f64 {
    if parity.is_multiple_of(2) {
        1.0
    } else {
        -1.0
    }
}

fn slavnov_factor(params: &ChainParams, mu: C, q: &QFunction, z: C) -> C {
    mu * params.a(z) * q.roots().iter().map(|r| r - z + params.eta).product::<C>()
}

/// `⟨Q̄|Q⟩/⟨Q|Q⟩` for on-shell `Q` by the generalized Slavnov determinant.
pub fn slavnov_ratio(params: &ChainParams, twist: &Twist, q: &QFunction, bar: &BarQSpec) -> Result<C> {
    bar.validate(q)?;
    let r = q.degree();
    let rb = bar.degree();
    if rb < r {
        return Ok(ZERO);
    }
    let eta = params.eta;
    let mu = twist.mu();
    let roots = q.roots();
    let tol = pole_tol(params);
    let n_mat = Mat::<C>::from_fn(r, r, |j, k| {
        let diag = if j == k { dlog_frak_a(params, q, roots[j]) } else { ZERO };
        diag + kernel_k(eta, roots[j] - roots[k])
    });
    let mut cols: Vec<Vec<C>> = Vec::with_capacity(rb);
    for &i in &bar.kept {
        let qi = roots[i];
        let col = (0..rb)
            .map(|j| {
                if j < r {
                    let diag = if j == i { dlog_frak_a(params, q, qi) } else { ZERO };
                    diag + kernel_k(eta, roots[j] - qi)
                } else {
                    let p = (j - r) as i32;
                    qi.powi(p) + (qi + eta).powi(p)
                }
            })
            .collect();
        cols.push(col);
    }
    for &z in &bar.inserted {
        if roots.iter().any(|&qj| (qj - z).norm() < tol || (qj - z + eta).norm() < tol || (z - qj + eta).norm() < tol) {
            return Err(Error::Pole(format!("inserted point {z} hits a kernel pole")));
        }
        let aa = frak_a(params, q, z)? / mu;
        let col = (0..rb)
            .map(|j| {
                if j < r {
                    kernel_t(eta, roots[j] - z) - aa * kernel_t(eta, z - roots[j])
                } else {
                    let p = (j - r) as i32;
                    z.powi(p) - aa * (z + eta).powi(p)
                }
            })
            .collect();
        cols.push(col);
    }
    let top = Mat::<C>::from_fn(r, rb, |j, k| cols[k][j]);
    let solved = if r > 0 { linalg::solve(&n_mat, &top)? } else { top };
    let s = Mat::<C>::from_fn(rb, rb, |j, k| if j < r { solved[(j, k)] } else { cols[k][j] });
    let ratio = linalg::det(&s);

    let dd = rb - r;
    let qb = bar.roots(q);
    let mut pre = C::new(sign(params.n * dd) * sign(dd * (dd + 1) / 2), 0.0);
    pre *= (ONE - mu).powi(-(dd as i32));
    for &z in &qb {
        pre *= slavnov_factor(params, mu, q, z);
    }
    for &z in roots {
        pre /= slavnov_factor(params, mu, q, z);
    }
    let rev = |v: &[C]| v.iter().rev().copied().collect::<Vec<_>>();
    pre *= vandermonde(&rev(roots)) / vandermonde(&rev(&qb));
    let out = pre * ratio;
    if !out.is_finite() {
        return Err(Error::Singular("Slavnov ratio is not finite".into()));
    }
    Ok(out)
}

/// Large-`N` form of the balanced ratio at `η = -i` for a state whose roots
/// fill the real axis. `kept` lists `σ_1..σ_R` (0-based), the first `R'` of
/// which are kept; `sites` lists `π_1..π_{m'}`.
pub fn sp_ratio_thermo(params: &ChainParams, q: &QFunction, kept: &[usize], sites: &[usize]) -> Result<C> {
    let r = q.degree();
    let m = sites.len();
    let rp = r
        .checked_sub(m)
        .filter(|&rp| kept.len() == r && rp + m == r)
        .ok_or_else(|| Error::Input("sp_ratio_thermo needs a full permutation and R' + m' = R".into()))?;
    let eta = params.eta;
    let roots = q.roots();
    let qs = |j: usize| roots[kept[j]];
    let xs = |k: usize| params.xi[sites[k]];
    let mut pre = ONE;
    for j in 0..m {
        let (z, y) = (xs(j), qs(rp + j));
        let num = params.a(z) * roots.iter().map(|qk| qk - z + eta).product::<C>();
        let den = params.a(y) * roots.iter().map(|qk| qk - y + eta).product::<C>();
        pre *= num / den;
        for i in 0..rp {
            pre *= (qs(i) - y) / (qs(i) - z);
        }
    }
    for i in 0..m {
        for j in i + 1..m {
            pre *= (qs(rp + i) - qs(rp + j)) / (xs(i) - xs(j));
        }
    }
    let nf = params.n as f64;
    let mat = Mat::<C>::from_fn(m, m, |j, k| {
        let y = qs(rp + j);
        let arg = (y - xs(k) + eta / 2.0).re;
        C::new(density_rho(arg) / (nf * density_rho_tot(params, y.re)), 0.0)
    });
    Ok(pre * linalg::det(&mat))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra_core::c;
    use crate::exec::Execution;
    use crate::sov_states::sov_overlap_direct;
    use crate::spectrum::{diagonalize_transfer, q_from_tau};

    #[test]
    fn kernel_identity() {
        let eta = c(0.0, -1.0);
        for l in [c(0.3, 0.2), c(-1.1, 0.7)] {
            assert!((kernel_k(eta, l) - kernel_t(eta, l) - kernel_t(eta, -l)).norm() < 1e-14);
        }
    }

    #[test]
    fn frak_a_at_inhomogeneity() {
        let p = ChainParams::random(3, c(0.0, -1.0), 0.3, 1).unwrap();
        let q = QFunction::from_roots(vec![c(0.2, 0.0)]);
        assert_eq!(frak_a(&p, &q, p.xi[1]).unwrap(), ZERO);
        assert!(frak_a(&p, &q, c(0.2, 0.0) + p.eta).is_err());
    }

    #[test]
    fn ratio_matches_direct_sum() {
        let p = ChainParams::random(4, c(0.0, -1.0), 0.3, 6).unwrap();
        for tw in [Twist::sigma_x(), Twist::random_unitary_eigen(6)] {
            for e in diagonalize_transfer(&p, &tw, Execution::Sequential).unwrap() {
                let q = q_from_tau(&p, &tw, &e.tau).unwrap();
                let nn = sov_overlap_direct(&p, &tw, &q, &q, Execution::Sequential);
                let r = q.degree();
                let bars = [
                    BarQSpec::same(&q),
                    BarQSpec { kept: (0..r.saturating_sub(1)).collect(), inserted: vec![p.xi[0], c(0.77, 0.31)] },
                    BarQSpec { kept: (1..r).collect(), inserted: vec![p.xi[2]] },
                ];
                for bar in bars {
                    let s = slavnov_ratio(&p, &tw, &q, &bar).unwrap();
                    let d = sov_overlap_direct(&p, &tw, &bar.polynomial(&q), &q, Execution::Sequential) / nn;
                    if bar.degree() < r {
                        assert_eq!(s, ZERO);
                        assert!(d.norm() < 1e-9);
                    } else {
                        assert!((s - d).norm() < 1e-8 * d.norm(), "{s} vs {d}");
                    }
                }
            }
        }
    }

    #[test]
    fn empty_thermo_ratio() {
        let p = ChainParams::homogeneous(4, c(0.0, -1.0)).unwrap();
        let q = QFunction::from_roots(vec![c(0.3, 0.0), c(-0.3, 0.0)]);
        assert_eq!(sp_ratio_thermo(&p, &q, &[1, 0], &[]).unwrap(), ONE);
    }
}
