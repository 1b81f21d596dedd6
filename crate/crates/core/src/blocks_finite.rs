//! Elementary blocks `⟨Q|∏_j E^{ε_{2j-1},ε_{2j}}_{j}|Q⟩/⟨Q|Q⟩` at finite size.
//!
//! Two independent routes are provided: a brute-force oracle on realized
//! eigenvectors, and the SoV multiple sum whose terms are Slavnov ratios.

use crate::algebra_core::{
    apply_entry_left, apply_local, apply_transfer, dense_from_columns, elementary, mat2_adj, mat2_inv, mat2_mul,
    transfer_matrix, twisted_entry, ChainParams, Entry, Mat2, Twist, ONE, ZERO,
};
use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::linalg;
use crate::slavnov::{slavnov_ratio, BarQSpec};
use crate::spectrum::{aba_eigenvectors, tau_from_q, QFunction, LAMBDA_STAR};
use crate::C;
use faer::Mat;
use std::fmt;

/// Index string `ε ∈ {1,2}^{2m}`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct EpsTuple {
    eps: Vec<u8>,
}

/// Sets and counts derived from an [`EpsTuple`]; indices are 1-based.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EpsSets {
    pub alpha_minus: Vec<usize>,
    pub alpha_plus: Vec<usize>,
    pub s: usize,
    pub s_prime: usize,
    pub m_eps: usize,
}

impl EpsTuple {
    pub fn new(eps: Vec<u8>) -> Result<Self> {
        if eps.is_empty() || !eps.len().is_multiple_of(2) {
            return Err(Error::Input("ε must have positive even length".into()));
        }
        if eps.iter().any(|&e| e != 1 && e != 2) {
            return Err(Error::Input("ε entries must be 1 or 2".into()));
        }
        Ok(Self { eps })
    }

    pub fn parse(s: &str) -> Result<Self> {
        let digits = s
            .trim()
            .chars()
            .map(|ch| match ch {
                '1' => Ok(1),
                '2' => Ok(2),
                _ => Err(Error::Input(format!("invalid ε character {ch:?}"))),
            })
            .collect::<Result<Vec<u8>>>()?;
        Self::new(digits)
    }

    pub fn entries(&self) -> &[u8] {
        &self.eps
    }

    pub fn m(&self) -> usize {
        self.eps.len() / 2
    }

    /// `(ε_{2j-1}, ε_{2j})` for `j` in `1..=m`.
    pub fn pair(&self, j: usize) -> (u8, u8) {
        (self.eps[2 * j - 2], self.eps[2 * j - 1])
    }

    pub fn sets(&self) -> EpsSets {
        eps_sets(self)
    }

    pub fn complement(&self) -> Self {
        Self { eps: self.eps.iter().map(|e| 3 - e).collect() }
    }

    pub fn is_diagonal(&self) -> bool {
        (1..=self.m()).all(|j| self.pair(j).0 == self.pair(j).1)
    }

    /// Balanced tuples, `s + s' = m`.
    pub fn is_balanced(&self) -> bool {
        let s = self.sets();
        s.s + s.s_prime == self.m()
    }

    /// All `4^m` tuples in lexicographic order.
    pub fn all(m: usize) -> Vec<Self> {
        (0..1usize << (2 * m))
            .map(|bits| Self {
                eps: (0..2 * m).map(|k| 1 + (bits >> (2 * m - 1 - k) & 1) as u8).collect(),
            })
            .collect()
    }

    /// Local operators `E^{ε_{2j-1},ε_{2j}}`.
    pub fn operators(&self) -> Vec<Mat2> {
        (1..=self.m()).map(|j| {
            let (a, b) = self.pair(j);
            elementary(a, b)
        }).collect()
    }
}

impl fmt::Display for EpsTuple {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for e in &self.eps {
            write!(f, "{e}")?;
        }
        Ok(())
    }
}

pub fn eps_sets(eps: &EpsTuple) -> EpsSets {
    let m = eps.m();
    let alpha_minus: Vec<usize> = (1..=m).filter(|&j| eps.pair(j).0 == 1).collect();
    let alpha_plus: Vec<usize> = (1..=m).filter(|&j| eps.pair(j).1 == 2).collect();
    EpsSets {
        s: alpha_minus.len(),
        s_prime: alpha_plus.len(),
        m_eps: eps.eps.iter().map(|&e| (2 - e) as usize).sum(),
        alpha_minus,
        alpha_plus,
    }
}

/// `X` at `site`, identity elsewhere.
pub fn embed_operator(n: usize, site: usize, x: &Mat2) -> Result<Mat<C>> {
    if site == 0 || site > n {
        return Err(Error::Input(format!("site {site} outside 1..={n}")));
    }
    Ok(dense_from_columns(1 << n, Execution::Sequential, |v| apply_local(n, site, x, v)))
}

/// `E^{e1,e2}` at `site`.
pub fn local_operator_embed(n: usize, site: usize, e1: u8, e2: u8) -> Result<Mat<C>> {
    if !(1..=2).contains(&e1) || !(1..=2).contains(&e2) {
        return Err(Error::Input("elementary indices must be 1 or 2".into()));
    }
    embed_operator(n, site, &elementary(e1, e2))
}

fn right_times_inverse(m: &Mat<C>, t: &Mat<C>) -> Result<Mat<C>> {
    let sol = linalg::solve(&t.transpose().to_owned(), &m.transpose().to_owned())?;
    Ok(sol.transpose().to_owned())
}

/// Both reconstructions of the local operator `X_site` from transfer
/// matrices at the inhomogeneities.
pub fn inverse_problem_operator(
    params: &ChainParams,
    twist: &Twist,
    site: usize,
    x: &Mat2,
    exec: Execution,
) -> Result<(Mat<C>, Mat<C>)> {
    params.require_generic()?;
    if site == 0 || site > params.n {
        return Err(Error::Input(format!("site {site} outside 1..={}", params.n)));
    }
    let k = twist.matrix();
    let xi = &params.xi;
    let ts: Vec<Mat<C>> = (0..site).map(|b| transfer_matrix(params, twist, xi[b], exec)).collect();
    let dim = params.dim();

    let xk = mat2_mul(x, &k);
    let mut first = dense_from_columns(dim, exec, |v| apply_transfer(params, &xk, xi[site - 1], v));
    for t in ts.iter().take(site - 1) {
        first = t * &first;
    }
    for t in &ts {
        first = right_times_inverse(&first, t)?;
    }

    let ak = mat2_mul(&mat2_adj(x), &k);
    let norm = params.a(xi[site - 1]) * params.d(xi[site - 1] - params.eta) * twist.det();
    let mut second = dense_from_columns(dim, exec, |v| {
        linalg::scale(&apply_transfer(params, &ak, xi[site - 1] - params.eta, v), norm.inv())
    });
    for t in &ts {
        second = t * &second;
    }
    for t in ts.iter().take(site - 1) {
        second = right_times_inverse(&second, t)?;
    }
    Ok((first, second))
}

/// Eigenvector pair `(left, right)` for on-shell `Q`, independent of SoV.
///
/// Up to 8 sites the null vectors of `𝒯(λ*) - τ(λ*)` are used; larger chains
/// use the algebraic Bethe ansatz in the twist eigenbasis.
pub fn oracle_states(params: &ChainParams, twist: &Twist, q: &QFunction, exec: Execution) -> Result<(Vec<C>, Vec<C>)> {
    if params.n > 8 {
        return aba_eigenvectors(params, twist, q);
    }
    let tau = tau_from_q(params, twist, q, LAMBDA_STAR);
    let t = transfer_matrix(params, twist, LAMBDA_STAR, exec);
    let dim = params.dim();
    let shifted = Mat::<C>::from_fn(dim, dim, |i, j| t[(i, j)] - if i == j { tau } else { ZERO });
    let (_, right) = linalg::smallest_right_singular(&shifted)?;
    let (_, left) = linalg::smallest_right_singular(&shifted.transpose().to_owned())?;
    Ok((left, right))
}

/// `⟨L|∏_j X_j|R⟩/⟨L|R⟩` with `X_j` acting on site `start + j`.
pub fn block_expectation(n: usize, left: &[C], right: &[C], start: usize, ops: &[Mat2]) -> Result<C> {
    if start == 0 || start + ops.len() - 1 > n {
        return Err(Error::Input("operator sites outside the chain".into()));
    }
    let mut v = right.to_vec();
    for (j, x) in ops.iter().enumerate().rev() {
        v = apply_local(n, start + j, x, &v);
    }
    let norm = linalg::pair(left, right);
    if norm.norm() < 1e-300 {
        return Err(Error::Degenerate("zero-norm state pair".into()));
    }
    Ok(linalg::pair(left, &v) / norm)
}

/// One elementary block.
#[derive(Clone, Debug)]
pub struct BlockRequest {
    pub params: ChainParams,
    pub twist: Twist,
    pub q: QFunction,
    pub eps: EpsTuple,
    pub start: usize,
}

impl BlockRequest {
    pub fn new(params: ChainParams, twist: Twist, q: QFunction, eps: EpsTuple) -> Self {
        Self { params, twist, q, eps, start: 1 }
    }

    fn validate(&self) -> Result<()> {
        if self.start == 0 || self.start + self.eps.m() - 1 > self.params.n {
            return Err(Error::Input("block does not fit in the chain".into()));
        }
        Ok(())
    }
}

/// Brute-force value of the block.
pub fn block_oracle(req: &BlockRequest, exec: Execution) -> Result<C> {
    req.validate()?;
    let (l, r) = oracle_states(&req.params, &req.twist, &req.q, exec)?;
    block_expectation(req.params.n, &l, &r, req.start, &req.eps.operators())
}

/// Block of the conjugated product `Γ O Γ^{-1}`, `Γ = γ^{⊗N}`.
pub fn block_oracle_conjugated(req: &BlockRequest, gamma: &Mat2, exec: Execution) -> Result<C> {
    req.validate()?;
    let ginv = mat2_inv(gamma)?;
    let ops: Vec<Mat2> = req.eps.operators().iter().map(|x| mat2_mul(&mat2_mul(gamma, x), &ginv)).collect();
    let (l, r) = oracle_states(&req.params, &req.twist, &req.q, exec)?;
    block_expectation(req.params.n, &l, &r, req.start, &ops)
}

/// One term of the SoV multiple sum.
#[derive(Clone, Debug)]
pub struct SumTerm {
    pub alpha_bar_minus: Vec<usize>,
    pub alpha_bar_plus: Vec<usize>,
    /// `a_j` for `j ∈ ᾱ^-` in increasing `j`, 1-based indices into `(q_1..q_R, ξ_1..ξ_m)`.
    pub a: Vec<(usize, usize)>,
    /// `a'_j` for `j ∈ ᾱ^+`.
    pub a_prime: Vec<(usize, usize)>,
    pub n_inf: usize,
    pub weight: C,
    pub bar: BarQSpec,
}

struct Enumerator<'a> {
    params: &'a ChainParams,
    twist: &'a Twist,
    roots: Vec<C>,
    r: usize,
    m: usize,
}

impl Enumerator<'_> {
    fn point(&self, k: usize) -> C {
        self.roots[k - 1]
    }

    #[allow(clippy::too_many_arguments)]
    fn rec(
        &self,
        j: usize,
        bm: &[usize],
        bp: &[usize],
        a: &mut Vec<(usize, usize)>,
        ap: &mut Vec<(usize, usize)>,
        w: C,
        visit: &mut dyn FnMut(Vec<(usize, usize)>, Vec<(usize, usize)>, C, Vec<usize>),
    ) {
        let (r, m, eta) = (self.r, self.m, self.params.eta);
        let total = r + m;
        if j > m {
            let rest: Vec<usize> = (1..=total)
                .filter(|k| !a.iter().any(|x| x.1 == *k) && !ap.iter().any(|x| x.1 == *k))
                .collect();
            visit(a.clone(), ap.clone(), w, rest);
            return;
        }
        let excluded = |set: &[(usize, usize)], bound: usize, k: usize| set.iter().any(|&(jj, v)| jj < bound && v == k);
        let big_a = |a: &[(usize, usize)], ap: &[(usize, usize)], jj: usize| -> Vec<usize> {
            (1..=total).filter(|&k| !excluded(a, jj, k) && !excluded(ap, jj, k)).collect()
        };
        let big_ap = |a: &[(usize, usize)], ap: &[(usize, usize)], jj: usize| -> Vec<usize> {
            (1..=total).filter(|&k| !excluded(ap, jj, k) && !excluded(a, jj + 1, k)).collect()
        };
        let aj = big_a(a, ap, j);
        let a_choices: Vec<Option<usize>> = if bm.contains(&j) {
            aj.iter().copied().filter(|&k| k <= r + j).map(Some).collect()
        } else {
            vec![None]
        };
        for ach in a_choices {
            let mut w2 = w;
            if let Some(k) = ach {
                a.push((j, k));
                let apj = big_ap(a, ap, j);
                let x = self.point(k);
                let num = self.twist.k1
                    * self.params.d(x)
                    * aj.iter().filter(|&&l| l < r + j).map(|&l| x - self.point(l) + eta).product::<C>();
                let den: C = apj.iter().filter(|&&l| l <= r + j).map(|&l| x - self.point(l)).product();
                w2 *= num / den;
            }
            if w2 != ZERO {
                let apj = big_ap(a, ap, j);
                let b_choices: Vec<Option<usize>> = if bp.contains(&j) {
                    apj.iter().copied().filter(|&k| k <= r + j).map(Some).collect()
                } else {
                    vec![None]
                };
                for bch in b_choices {
                    let mut w3 = w2;
                    if let Some(k) = bch {
                        ap.push((j, k));
                        let x = self.point(k);
                        let aj1 = big_a(a, ap, j + 1);
                        let num = self.twist.k2
                            * self.params.a(x)
                            * apj.iter().filter(|&&l| l < r + j).map(|&l| self.point(l) - x + eta).product::<C>();
                        let den: C = aj1.iter().filter(|&&l| l <= r + j).map(|&l| self.point(l) - x).product();
                        w3 *= num / den;
                    }
                    if w3 != ZERO {
                        self.rec(j + 1, bm, bp, a, ap, w3, visit);
                    }
                    if bch.is_some() {
                        ap.pop();
                    }
                }
            }
            if ach.is_some() {
                a.pop();
            }
        }
    }
}

fn subsets(set: &[usize]) -> Vec<Vec<usize>> {
    (0..1usize << set.len())
        .map(|bits| set.iter().enumerate().filter(|(i, _)| bits >> i & 1 == 1).map(|(_, &v)| v).collect())
        .collect()
}

/// Streams every nonzero term of the SoV sum for the block `ε` on sites
/// `1..=m` to `visit`.
pub fn for_each_sum_term(
    params: &ChainParams,
    twist: &Twist,
    q: &QFunction,
    eps: &EpsTuple,
    visit: &mut dyn FnMut(SumTerm),
) -> Result<()> {
    let m = eps.m();
    if m > params.n {
        return Err(Error::Input("block longer than the chain".into()));
    }
    let sets = eps.sets();
    let r = q.degree();
    let en = Enumerator {
        params,
        twist,
        roots: q.roots().iter().copied().chain(params.xi[..m].iter().copied()).collect(),
        r,
        m,
    };
    let (ka, kd) = (twist.a - twist.k1, twist.d - twist.k2);
    let b_pow = twist.b.powi(m as i32 - (sets.s + sets.s_prime) as i32);
    for bm in subsets(&sets.alpha_minus) {
        for bp in subsets(&sets.alpha_plus) {
            let n_inf = sets.s + sets.s_prime - bm.len() - bp.len();
            let parity = (m - bm.len() + bp.len()) * params.n;
            let sign = if parity.is_multiple_of(2) { 1.0 } else { -1.0 };
            let pref = b_pow
                * sign
                * ka.powi((sets.s - bm.len()) as i32)
                * kd.powi((sets.s_prime - bp.len()) as i32);
            if pref == ZERO {
                continue;
            }
            let mut inner = |a: Vec<(usize, usize)>, ap: Vec<(usize, usize)>, w: C, rest: Vec<usize>| {
                let bar = BarQSpec {
                    kept: rest.iter().filter(|&&k| k <= r).map(|&k| k - 1).collect(),
                    inserted: rest.iter().filter(|&&k| k > r).map(|&k| params.xi[k - r - 1]).collect(),
                };
                visit(SumTerm {
                    alpha_bar_minus: bm.clone(),
                    alpha_bar_plus: bp.clone(),
                    a,
                    a_prime: ap,
                    n_inf,
                    weight: pref * w,
                    bar,
                });
            };
            en.rec(1, &bm, &bp, &mut Vec::new(), &mut Vec::new(), ONE, &mut inner);
        }
    }
    Ok(())
}

pub fn enumerate_sum_terms(params: &ChainParams, twist: &Twist, q: &QFunction, eps: &EpsTuple) -> Result<Vec<SumTerm>> {
    let mut out = Vec::new();
    for_each_sum_term(params, twist, q, eps, &mut |t| out.push(t))?;
    Ok(out)
}

/// SoV multiple-sum value of the block on sites `1..=m`.
pub fn block_multisum(params: &ChainParams, twist: &Twist, q: &QFunction, eps: &EpsTuple, exec: Execution) -> Result<C> {
    let terms = enumerate_sum_terms(params, twist, q, eps)?;
    let values = exec.map(terms.len(), |i| {
        let t = &terms[i];
        slavnov_ratio(params, twist, q, &t.bar).map(|s| t.weight * s)
    });
    let values = values.into_iter().collect::<Result<Vec<C>>>()?;
    let mut taus = ONE;
    for k in 0..eps.m() {
        let t = tau_from_q(params, twist, q, params.xi[k]);
        if t.norm() < 1e-300 {
            return Err(Error::Singular(format!("τ(ξ_{}) = 0", k + 1)));
        }
        taus *= t;
    }
    Ok(crate::exec::pairwise_sum(&values) / taus)
}

/// A term `coeff ⟨Q̄|` with `Q̄(x) = ∏(x - num)/∏(x - den)`.
#[derive(Clone, Debug)]
pub struct ActionTerm {
    pub coeff: C,
    pub numerator: Vec<C>,
    pub denominator: Vec<C>,
    pub n_inf: usize,
}

impl ActionTerm {
    pub fn eval(&self, x: C) -> C {
        self.numerator.iter().map(|r| x - r).product::<C>() / self.denominator.iter().map(|r| x - r).product::<C>()
    }
}

const MATCH_TOL: f64 = 1e-10;

fn close(a: C, b: C) -> bool {
    (a - b).norm() < MATCH_TOL * (1.0 + b.norm())
}

#[derive(Default)]
struct Factors(Vec<(C, i32)>);

impl Factors {
    fn add(&mut self, r: C, e: i32) {
        if let Some(f) = self.0.iter_mut().find(|f| close(f.0, r)) {
            f.1 += e;
        } else {
            self.0.push((r, e));
        }
    }
}

/// `⟨Q|T̄_{ε_2,ε_1}(λ_1)…T̄_{ε_{2m},ε_{2m-1}}(λ_m)` as a combination of
/// separate covectors, at generic spectral parameters.
pub fn action_decomposition(
    params: &ChainParams,
    twist: &Twist,
    q: &QFunction,
    eps: &EpsTuple,
    lambdas: &[C],
) -> Result<Vec<ActionTerm>> {
    let m = eps.m();
    if lambdas.len() != m {
        return Err(Error::Input("one spectral parameter per site required".into()));
    }
    twist.require_sov()?;
    let mut vars = Vec::new();
    for j in 1..=m {
        let (e1, e2) = eps.pair(j);
        if e1 == 1 {
            vars.push((2 * j - 1, j, true));
        }
        if e2 == 2 {
            vars.push((2 * j, j, false));
        }
    }
    let ctx = Engine { params, twist, q, lambdas, vars };
    let mut out = Vec::new();
    ctx.rec(0, &mut Vec::new(), twist.b.powi(m as i32), &mut out)?;
    Ok(out)
}

struct Engine<'a> {
    params: &'a ChainParams,
    twist: &'a Twist,
    q: &'a QFunction,
    lambdas: &'a [C],
    vars: Vec<(usize, usize, bool)>,
}

impl Engine<'_> {
    fn rec(&self, i: usize, fixed: &mut Vec<Option<C>>, coef: C, out: &mut Vec<ActionTerm>) -> Result<()> {
        let eta = self.params.eta;
        let tw = self.twist;
        if i == self.vars.len() {
            let fin: Vec<C> = fixed.iter().flatten().copied().collect();
            let mut num: Vec<C> = self.q.roots().iter().chain(self.lambdas).copied().collect();
            let mut den = Vec::new();
            for &p in &fin {
                if let Some(pos) = num.iter().position(|&r| close(r, p)) {
                    num.remove(pos);
                } else {
                    den.push(p);
                }
            }
            let m = self.lambdas.len();
            let parity = self.params.n * m.abs_diff(fin.len());
            let sign = if parity.is_multiple_of(2) { 1.0 } else { -1.0 };
            out.push(ActionTerm { coeff: coef * sign, numerator: num, denominator: den, n_inf: fixed.len() - fin.len() });
            return Ok(());
        }
        let (k, j, odd) = self.vars[i];
        let s = if odd { 1.0 } else { -1.0 };
        let mut fs = Factors::default();
        for &x in &self.params.xi {
            fs.add(if odd { x } else { x - eta }, 1);
        }
        for &r in self.q.roots() {
            fs.add(r - eta * s, 1);
            fs.add(r, -1);
        }
        fs.add(self.lambdas[j - 1], -1);
        for &l in &self.lambdas[..j - 1] {
            fs.add(l - eta * s, 1);
            fs.add(l, -1);
        }
        let shift = if k % 2 == 0 { eta } else { -eta };
        for p in fixed.iter().flatten() {
            fs.add(*p, 1);
            fs.add(*p + shift, -1);
        }
        let fs: Vec<(C, i32)> = fs.0.into_iter().filter(|f| f.1 != 0).collect();
        let w = if odd { tw.k1 } else { tw.k2 } / tw.b;
        let winf = -(if odd { tw.k1 - tw.a } else { tw.k2 - tw.d }) / tw.b;
        if winf != ZERO {
            fixed.push(None);
            self.rec(i + 1, fixed, coef * winf, out)?;
            fixed.pop();
        }
        for (idx, &(p, e)) in fs.iter().enumerate() {
            if e >= 0 {
                continue;
            }
            if e < -1 {
                return Err(Error::Pole(format!("higher-order pole at {p}")));
            }
            let res: C = fs
                .iter()
                .enumerate()
                .filter(|&(o, _)| o != idx)
                .map(|(_, &(r, ee))| (p - r).powi(ee))
                .product();
            fixed.push(Some(p));
            self.rec(i + 1, fixed, coef * w * res, out)?;
            fixed.pop();
        }
        Ok(())
    }
}

/// `φ T̄_{e2,e1}(λ)`, with `T̄_{2,1}(λ) = B(λ+η)^{-1} A(λ+η) D(λ)`.
pub fn apply_tbar_left(params: &ChainParams, twist: &Twist, e2: u8, e1: u8, lambda: C, phi: &[C], exec: Execution) -> Result<Vec<C>> {
    let k = twist.matrix();
    match (e2, e1) {
        (1, 1) => Ok(apply_entry_left(params, &k, lambda, Entry::A, phi)),
        (1, 2) => Ok(apply_entry_left(params, &k, lambda, Entry::B, phi)),
        (2, 2) => Ok(apply_entry_left(params, &k, lambda, Entry::D, phi)),
        (2, 1) => {
            let b = twisted_entry(params, &k, Entry::B, lambda + params.eta, exec);
            let psi = linalg::solve_left_vec(&b, phi)?;
            let psi = apply_entry_left(params, &k, lambda + params.eta, Entry::A, &psi);
            Ok(apply_entry_left(params, &k, lambda, Entry::D, &psi))
        }
        _ => Err(Error::Input("T̄ indices must be 1 or 2".into())),
    }
}
