//! Ground-state densities and multiple-integral block formulas in the
//! thermodynamic limit, at `η = -i`.

use crate::algebra_core::ChainParams;
use crate::blocks_finite::EpsTuple;
use crate::error::{Error, Result};
use crate::exec::{pairwise_sum, Execution};
use crate::linalg;
use crate::spectrum::{p_prime, theta_prime};
use crate::C;
use faer::Mat;
use gauss_quad::legendre::GaussLegendre;
use std::f64::consts::PI;
use std::num::NonZeroUsize;

const I: C = C::new(0.0, 1.0);

/// `ρ(λ) = 1/(2 cosh πλ)`.
pub fn density_rho(lambda: f64) -> f64 {
    0.5 / (PI * lambda).cosh()
}

/// `(1/N) Σ_n ρ(λ - ξ_n + η/2)`, real part of the shifted argument.
pub fn density_rho_tot(params: &ChainParams, lambda: f64) -> f64 {
    params
        .xi
        .iter()
        .map(|x| density_rho((C::new(lambda, 0.0) - x + params.eta / 2.0).re))
        .sum::<f64>()
        / params.n as f64
}

/// Composite Gauss–Legendre rule on `[-L, L]`.
#[derive(Clone, Debug, PartialEq)]
pub struct QuadratureConfig {
    pub half_width: f64,
    pub panels: usize,
    pub nodes_per_panel: usize,
    pub estimate_error: bool,
}

impl QuadratureConfig {
    /// Defaults by block length.
    pub fn for_m(m: usize) -> Self {
        match m {
            0..=2 => Self { half_width: 20.0, panels: 80, nodes_per_panel: 8, estimate_error: true },
            3 => Self { half_width: 10.0, panels: 40, nodes_per_panel: 6, estimate_error: false },
            _ => Self { half_width: 10.0, panels: 32, nodes_per_panel: 4, estimate_error: false },
        }
    }

    pub fn total_nodes(&self) -> usize {
        self.panels * self.nodes_per_panel
    }

    pub fn validate(&self) -> Result<()> {
        if self.half_width < 10.0 || self.total_nodes() < 64 || self.nodes_per_panel == 0 {
            return Err(Error::Input("quadrature needs L >= 10 and at least 64 nodes".into()));
        }
        Ok(())
    }

    /// Nodes and weights on `[-L, L]`.
    pub fn rule(&self) -> Vec<(f64, f64)> {
        let gl = GaussLegendre::new(NonZeroUsize::new(self.nodes_per_panel).expect("nonzero"));
        let base: Vec<(f64, f64)> = gl.as_node_weight_pairs().to_vec();
        let h = 2.0 * self.half_width / self.panels as f64;
        let mut out = Vec::with_capacity(self.total_nodes());
        for k in 0..self.panels {
            let mid = -self.half_width + (k as f64 + 0.5) * h;
            for &(x, w) in &base {
                out.push((mid + 0.5 * h * x, 0.5 * h * w));
            }
        }
        out
    }

    fn widened(&self) -> Self {
        let h = 2.0 * self.half_width / self.panels as f64;
        let extra = 2 * (self.panels / 4).max(1);
        Self { half_width: self.half_width + extra as f64 * h / 2.0, panels: self.panels + extra, ..self.clone() }
    }

    fn refined(&self) -> Self {
        Self { nodes_per_panel: self.nodes_per_panel + 4, ..self.clone() }
    }
}

/// Quadrature value with an error estimate.
#[derive(Clone, Debug, PartialEq)]
pub struct ThermoBlockResult {
    pub value: C,
    pub error: f64,
    pub eps: EpsTuple,
    pub m: usize,
}

/// `∫_{[-L,L]^m} f` on the tensor rule, parallel over the outer node.
fn integrate<F>(cfg: &QuadratureConfig, m: usize, f: F, exec: Execution) -> C
where
    F: Fn(&[f64]) -> C + Sync + Send,
{
    let rule = cfg.rule();
    let n = rule.len();
    let inner_count = n.pow(m as u32 - 1);
    let partial = exec.map(n, |i0| {
        let mut x = vec![0.0; m];
        x[0] = rule[i0].0;
        let vals: Vec<C> = (0..inner_count)
            .map(|mut idx| {
                let mut w = rule[i0].1;
                for d in 1..m {
                    let (xn, wn) = rule[idx % n];
                    idx /= n;
                    x[d] = xn;
                    w *= wn;
                }
                f(&x) * w
            })
            .collect();
        pairwise_sum(&vals)
    });
    pairwise_sum(&partial)
}

/// `sinh π(u)/(u - i)` with the removable point `u = i` handled by a series.
fn pair_factor(u: C) -> C {
    let w = u - I;
    if w.norm() < 1e-6 {
        let pw = PI * w;
        return -PI * (1.0 + pw * pw / 6.0);
    }
    (PI * u).sinh() / w
}

/// Integration variables `(λ_1..λ_m)` in terms of `(j, shifted)` labels.
fn variable_order(eps: &EpsTuple) -> Vec<(usize, bool)> {
    let sets = eps.sets();
    let mut out: Vec<(usize, bool)> = sets.alpha_plus.iter().rev().map(|&j| (j, true)).collect();
    out.extend(sets.alpha_minus.iter().map(|&j| (j, false)));
    out
}

fn with_error<F>(cfg: &QuadratureConfig, eps: &EpsTuple, eval: F) -> Result<ThermoBlockResult>
where
    F: Fn(&QuadratureConfig) -> C,
{
    cfg.validate()?;
    let m = eps.m();
    if !eps.is_balanced() {
        return Ok(ThermoBlockResult { value: C::new(0.0, 0.0), error: 0.0, eps: eps.clone(), m });
    }
    let value = eval(cfg);
    let error = if cfg.estimate_error {
        (eval(&cfg.widened()) - value).norm().max((eval(&cfg.refined()) - value).norm())
    } else {
        f64::NAN
    };
    Ok(ThermoBlockResult { value, error, eps: eps.clone(), m })
}

/// Homogeneous multiple-integral block.
pub fn block_thermo_hom(eps: &EpsTuple, cfg: &QuadratureConfig, exec: Execution) -> Result<ThermoBlockResult> {
    let m = eps.m();
    let sets = eps.sets();
    let order = variable_order(eps);
    let sign_s = if sets.s.is_multiple_of(2) { 1.0 } else { -1.0 };
    let pre = sign_s * (-PI).powi((m * (m + 1) / 2) as i32) / (2.0 * PI).powi(m as i32);
    let mi = m as i32;
    let integrand = |x: &[f64]| -> C {
        let lam: Vec<C> = x
            .iter()
            .zip(&order)
            .map(|(&xv, &(_, shifted))| if shifted { C::new(xv, -1.0) } else { C::new(xv, 0.0) })
            .collect();
        let mut v = C::new(pre, 0.0);
        for a in 0..m {
            for b in 0..a {
                v *= pair_factor(lam[a] - lam[b]);
            }
        }
        for (a, &(j, shifted)) in order.iter().enumerate() {
            let ch = (PI * x[a]).cosh();
            let cosh_m = if shifted { (-ch).powi(mi) } else { ch.powi(mi) };
            let ji = j as i32;
            let poly = if shifted {
                (lam[a] + 1.5 * I).powi(ji - 1) * (lam[a] + 0.5 * I).powi(mi - ji)
            } else {
                (lam[a] - 0.5 * I).powi(ji - 1) * (lam[a] + 0.5 * I).powi(mi - ji)
            };
            v *= poly / cosh_m;
        }
        v
    };
    with_error(cfg, eps, |c| integrate(c, m, integrand, exec))
}

/// Inhomogeneous multiple-integral block with parameters `ξ_1..ξ_m`, each
/// close to `-i/2`.
pub fn block_thermo_inhom(eps: &EpsTuple, xi: &[C], cfg: &QuadratureConfig, exec: Execution) -> Result<ThermoBlockResult> {
    let m = eps.m();
    if xi.len() != m {
        return Err(Error::Input("one inhomogeneity per site required".into()));
    }
    for k in 0..m {
        if (xi[k].im + 0.5).abs() > 0.25 {
            return Err(Error::Input("inhomogeneities must lie near Im = -1/2".into()));
        }
        for l in k + 1..m {
            if (xi[k] - xi[l]).norm() < 1e-12 {
                return Err(Error::Input("inhomogeneities must be distinct".into()));
            }
        }
    }
    let order = variable_order(eps);
    let mut pre = C::new(1.0, 0.0);
    for k in 0..m {
        for l in k + 1..m {
            let d = xi[k] - xi[l];
            pre *= (PI * d).sinh() / d;
        }
    }
    for &(_, shifted) in &order {
        pre *= if shifted { 1.0 / (2.0 * I) } else { I / 2.0 };
    }
    let integrand = |x: &[f64]| -> C {
        let lam: Vec<C> = x
            .iter()
            .zip(&order)
            .map(|(&xv, &(_, shifted))| if shifted { C::new(xv, -1.0) } else { C::new(xv, 0.0) })
            .collect();
        let mut v = pre;
        for a in 0..m {
            for b in 0..a {
                v *= pair_factor(lam[a] - lam[b]);
            }
            for xk in xi {
                v /= (PI * (lam[a] - xk)).sinh();
            }
        }
        for (a, &(j, shifted)) in order.iter().enumerate() {
            let mu = lam[a];
            for (k, xk) in xi.iter().enumerate() {
                let kk = k + 1;
                if kk < j {
                    v *= if shifted { mu - xk + I } else { mu - xk - I };
                } else if kk > j {
                    v *= mu - xk;
                }
            }
        }
        v
    };
    with_error(cfg, eps, |c| integrate(c, m, integrand, exec))
}

/// `max_λ |2πρ_tot(λ) - ∫θ'(λ-μ)ρ_tot(μ)dμ - p'_tot(λ)|` over a grid on
/// `[-5, 5]`.
pub fn lieb_equation_residual(params: &ChainParams, cfg: &QuadratureConfig, exec: Execution) -> Result<f64> {
    cfg.validate()?;
    let offsets: Vec<f64> = params
        .xi
        .iter()
        .map(|x| (x - params.eta / 2.0).re)
        .collect();
    let nf = params.n as f64;
    let rule = cfg.rule();
    let grid: Vec<f64> = (0..41).map(|k| -5.0 + 0.25 * k as f64).collect();
    let res = exec.map(grid.len(), |g| {
        let l = grid[g];
        let terms: Vec<f64> = rule
            .iter()
            .map(|&(mu, w)| w * theta_prime(l - mu) * density_rho_tot(params, mu))
            .collect();
        let integral = crate::exec::pairwise_sum_real(&terms);
        let ptot = offsets.iter().map(|x| p_prime(l - x)).sum::<f64>() / nf;
        (2.0 * PI * density_rho_tot(params, l) - integral - ptot).abs()
    });
    Ok(res.into_iter().fold(0.0, f64::max))
}

/// `∫ρ` on the configured rule.
pub fn integrate_rho(cfg: &QuadratureConfig) -> f64 {
    cfg.rule().iter().map(|&(x, w)| w * density_rho(x)).sum()
}

/// Fit of `F_N` as a polynomial in `1/N`.
#[derive(Clone, Debug, PartialEq)]
pub struct Extrapolation {
    pub estimate: C,
    pub slope: C,
    pub degree: usize,
    /// Largest deviation of the intercepts of linear leave-one-out fits
    /// from `estimate`.
    pub loo_spread: f64,
    pub monotone: bool,
    pub report: String,
}

fn fit(data: &[(usize, C)], degree: usize) -> Result<Vec<C>> {
    let a = Mat::<C>::from_fn(data.len(), degree + 1, |i, k| C::new((1.0 / data[i].0 as f64).powi(k as i32), 0.0));
    let b: Vec<C> = data.iter().map(|d| d.1).collect();
    linalg::lstsq(&a, &b)
}

/// Polynomial-in-`1/N` extrapolation with a leave-one-out stability report.
pub fn extrapolate_blocks(data: &[(usize, C)], degree: Option<usize>) -> Result<Extrapolation> {
    if data.len() < 3 {
        return Err(Error::Input("at least three sizes are needed".into()));
    }
    let mut sorted = data.to_vec();
    sorted.sort_by_key(|d| d.0);
    if sorted.windows(2).any(|w| w[0].0 == w[1].0) || sorted[0].0 == 0 {
        return Err(Error::Input("sizes must be distinct and positive".into()));
    }
    let degree = degree.unwrap_or(2).min(sorted.len() - 1);
    let coeffs = fit(&sorted, degree)?;
    let estimate = coeffs[0];
    let slope = coeffs.get(1).copied().unwrap_or_default();
    let mut loo_spread: f64 = 0.0;
    for skip in 0..sorted.len() {
        let rest: Vec<(usize, C)> = sorted.iter().enumerate().filter(|&(i, _)| i != skip).map(|(_, d)| *d).collect();
        let c = fit(&rest, 1.min(rest.len() - 1))?;
        loo_spread = loo_spread.max((c[0] - estimate).norm());
    }
    let diffs: Vec<f64> = sorted.windows(2).map(|w| (w[1].1 - w[0].1).re).collect();
    let monotone = diffs.iter().all(|&d| d >= 0.0) || diffs.iter().all(|&d| d <= 0.0);
    let report = format!(
        "degree {degree} fit over N = {:?}; leave-one-out spread {loo_spread:.3e}{}",
        sorted.iter().map(|d| d.0).collect::<Vec<_>>(),
        if monotone { "" } else { "; non-monotone data" }
    );
    Ok(Extrapolation { estimate, slope, degree, loo_spread, monotone, report })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra_core::c;

    #[test]
    fn density_values() {
        assert_eq!(density_rho(0.0), 0.5);
        let cfg = QuadratureConfig { half_width: 15.0, ..QuadratureConfig::for_m(1) };
        assert!((integrate_rho(&cfg) - 0.5).abs() < 1e-10);
        let p = ChainParams::homogeneous(4, c(0.0, -1.0)).unwrap();
        for x in [0.0, 0.7, -2.1] {
            assert!((density_rho_tot(&p, x) - density_rho(x)).abs() < 1e-15);
        }
    }

    #[test]
    fn lieb_residual_homogeneous() {
        let p = ChainParams::homogeneous(4, c(0.0, -1.0)).unwrap();
        let cfg = QuadratureConfig { half_width: 20.0, panels: 256, nodes_per_panel: 8, estimate_error: false };
        assert!(lieb_equation_residual(&p, &cfg, Execution::Parallel).unwrap() < 1e-8);
    }

    #[test]
    fn one_site_blocks() {
        let cfg = QuadratureConfig::for_m(1);
        let e11 = block_thermo_hom(&EpsTuple::parse("11").unwrap(), &cfg, Execution::Sequential).unwrap();
        assert!((e11.value - 0.5).norm() < 1e-8);
        let e22 = block_thermo_hom(&EpsTuple::parse("22").unwrap(), &cfg, Execution::Sequential).unwrap();
        assert!((e22.value - 0.5).norm() < 1e-8);
        let e12 = block_thermo_hom(&EpsTuple::parse("12").unwrap(), &cfg, Execution::Sequential).unwrap();
        assert_eq!(e12.value, C::new(0.0, 0.0));
    }

    #[test]
    fn inhomogeneous_one_site() {
        let cfg = QuadratureConfig::for_m(1);
        let v = block_thermo_inhom(&EpsTuple::parse("11").unwrap(), &[c(1e-9, -0.5)], &cfg, Execution::Sequential).unwrap();
        assert!((v.value - 0.5).norm() < 1e-7);
    }

    #[test]
    fn ordering_for_two_sites() {
        assert_eq!(variable_order(&EpsTuple::parse("1122").unwrap()), vec![(2, true), (1, false)]);
        assert_eq!(variable_order(&EpsTuple::parse("2222").unwrap()), vec![(2, true), (1, true)]);
        assert_eq!(variable_order(&EpsTuple::parse("1111").unwrap()), vec![(1, false), (2, false)]);
    }

    #[test]
    fn extrapolation_exact_cases() {
        let constant: Vec<(usize, C)> = [6, 8, 10].iter().map(|&n| (n, c(0.25, 0.0))).collect();
        let e = extrapolate_blocks(&constant, None).unwrap();
        assert!((e.estimate - 0.25).norm() < 1e-12);
        assert!(e.slope.norm() < 1e-10);
        let linear: Vec<(usize, C)> = [6, 8, 10, 12].iter().map(|&n| (n, c(0.4 + 1.3 / n as f64, 0.0))).collect();
        let e = extrapolate_blocks(&linear, Some(1)).unwrap();
        assert!((e.estimate - 0.4).norm() < 1e-10);
        assert!(extrapolate_blocks(&linear[..2], None).is_err());
    }
}
