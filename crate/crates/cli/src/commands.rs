use std::time::Instant;

use qsov::algebra_core::{
    c, commutator_norm, mat2_inv, mat2_mul, quantum_determinant_residual, transfer_matrix, ChainParams, Mat2, Twist,
};
use qsov::blocks_finite::{block_multisum, block_oracle, BlockRequest, EpsTuple};
use qsov::slavnov::{slavnov_ratio, sp_ratio_thermo, BarQSpec};
use qsov::sov_states::{eigenstate_residual, orthogonality_defect, sov_overlap_direct, SovBases};
use qsov::spectrum::{
    bethe_residual, diagonalize_transfer, dual_q, energy_from_roots, ground_state, q_from_tau, sum_rule_residual,
    tq_residual, wronskian_residual, QFunction, TauPoly,
};
use qsov::thermo::{block_thermo_hom, block_thermo_inhom, extrapolate_blocks};
use qsov::{Execution, C};

use crate::config::{format_complex, RunConfig};
use crate::table::{Cell, Report};

const EXEC: Execution = Execution::Parallel;

pub type Outcome = Result<Report, qsov::Error>;

fn roots_text(q: &QFunction) -> String {
    q.roots().iter().map(|&r| format_complex(r)).collect::<Vec<_>>().join(";")
}

fn is_minus_i(eta: C) -> bool {
    (eta - c(0.0, -1.0)).norm() < 1e-14
}

/// Multisum when the SoV construction applies, brute force otherwise.
fn block_value(p: &ChainParams, tw: &Twist, q: &QFunction, eps: &EpsTuple) -> qsov::Result<C> {
    if p.is_generic() && tw.sov_applicable() {
        block_multisum(p, tw, q, eps, EXEC)
    } else {
        block_oracle(&BlockRequest::new(p.clone(), *tw, q.clone(), eps.clone()), EXEC)
    }
}

fn one_based(idx: &[usize], len: usize, what: &str) -> qsov::Result<Vec<usize>> {
    idx.iter()
        .map(|&i| {
            (1..=len)
                .contains(&i)
                .then_some(i - 1)
                .ok_or_else(|| qsov::Error::Input(format!("{what} index {i} outside 1..={len}")))
        })
        .collect()
}

pub fn spectrum(cfg: &RunConfig) -> Outcome {
    let p = cfg.chain()?;
    let tw = cfg.twist()?;
    let mut rep = Report::new(
        "spectrum",
        &["index", "R", "roots", "tq_residual", "bethe_residual", "wronskian_residual", "energy", "warning"],
    );
    for (i, e) in diagonalize_transfer(&p, &tw, EXEC)?.into_iter().enumerate() {
        match q_from_tau(&p, &tw, &e.tau) {
            Ok(q) => {
                let wr = dual_q(&p, &tw, &q).ok().map(|qh| wronskian_residual(&p, &tw, &q, &qh));
                let energy = if cfg.is_homogeneous() { energy_from_roots(&q).ok() } else { None };
                rep.push(vec![
                    i.into(),
                    q.degree().into(),
                    roots_text(&q).into(),
                    tq_residual(&p, &tw, &e.tau, &q, 2 * p.n + 4).into(),
                    bethe_residual(&p, &tw, &q).ok().into(),
                    wr.into(),
                    energy.into(),
                    e.warning.into(),
                ]);
            }
            Err(err) => rep.push(vec![
                i.into(),
                Cell::Empty,
                Cell::Empty,
                Cell::Empty,
                Cell::Empty,
                Cell::Empty,
                Cell::Empty,
                err.to_string().into(),
            ]),
        }
    }
    Ok(rep)
}

pub fn scalar_product(cfg: &RunConfig) -> Outcome {
    let tw = cfg.twist()?;
    tw.require_sov()?;
    let mut rep =
        Report::new("scalar-product", &["n", "R", "bar_degree", "slavnov", "direct", "difference", "thermo"]);
    for n in cfg.sizes_or(&[cfg.chain.n]) {
        let p = cfg.chain_with(n)?;
        let q = ground_state(&p, &tw)?;
        let r = q.degree();
        let kept = match &cfg.kept {
            Some(k) => one_based(k, r, "root")?,
            None => {
                let drop = (0..r).min_by(|&i, &j| q.roots()[i].norm().total_cmp(&q.roots()[j].norm()));
                (0..r).filter(|&i| Some(i) != drop).collect()
            }
        };
        let sites = if cfg.sites.is_empty() { vec![n / 2] } else { one_based(&cfg.sites, n, "site")? };
        let bar = BarQSpec::with_inhomogeneities(&p, kept.clone(), &sites);
        let slavnov = slavnov_ratio(&p, &tw, &q, &bar)?;
        let direct =
            sov_overlap_direct(&p, &tw, &bar.polynomial(&q), &q, EXEC) / sov_overlap_direct(&p, &tw, &q, &q, EXEC);
        let diff = (slavnov - direct).norm() / direct.norm().max(1.0);
        rep.check(format!("slavnov_vs_direct n={n}"), diff, cfg.tolerance);
        let thermo = (kept.len() + sites.len() == r && is_minus_i(p.eta))
            .then(|| {
                let mut perm = kept.clone();
                perm.extend((0..r).filter(|i| !kept.contains(i)));
                sp_ratio_thermo(&p, &q, &perm, &sites).ok()
            })
            .flatten();
        rep.push(vec![n.into(), r.into(), bar.degree().into(), slavnov.into(), direct.into(), diff.into(), thermo.into()]);
    }
    Ok(rep)
}

pub fn block_finite(cfg: &RunConfig) -> Outcome {
    let tw = cfg.twist()?;
    tw.require_sov()?;
    let tuples = cfg.eps_tuples(2)?;
    let mut rep = Report::new("block-finite", &["n", "eps", "oracle", "multisum", "difference"]);
    for n in cfg.sizes_or(&[cfg.chain.n]) {
        let p = cfg.chain_with(n)?;
        let q = ground_state(&p, &tw)?;
        for eps in &tuples {
            let oracle = block_oracle(&BlockRequest::new(p.clone(), tw, q.clone(), eps.clone()), EXEC)?;
            let sum = block_multisum(&p, &tw, &q, eps, EXEC)?;
            let diff = (oracle - sum).norm();
            rep.check(format!("multisum_vs_oracle n={n} eps={eps}"), diff, cfg.tolerance * oracle.norm().max(1.0));
            rep.push(vec![n.into(), eps.to_string().into(), oracle.into(), sum.into(), diff.into()]);
        }
    }
    Ok(rep)
}

pub fn block_thermo(cfg: &RunConfig) -> Outcome {
    let mut rep = Report::new("block-thermo", &["eps", "m", "balanced", "value", "error"]);
    let xi: Vec<C> = cfg.inhomogeneities.iter().map(|z| z.0).collect();
    for eps in cfg.eps_tuples(2)? {
        let quad = cfg.quadrature_for(eps.m())?;
        let r = if xi.is_empty() {
            block_thermo_hom(&eps, &quad, EXEC)?
        } else {
            block_thermo_inhom(&eps, &xi, &quad, EXEC)?
        };
        rep.push(vec![eps.to_string().into(), eps.m().into(), eps.is_balanced().into(), r.value.into(), r.error.into()]);
    }
    Ok(rep)
}

/// `Rot(θ) diag(e^{-iπα/2}, e^{iπα/2}) Rot(θ)^{-1}`, so that `μ = e^{iπα}`.
fn scan_twist(alpha: f64) -> qsov::Result<Twist> {
    let theta: f64 = 0.3;
    let rot: Mat2 = [[c(theta.cos(), 0.0), c(-theta.sin(), 0.0)], [c(theta.sin(), 0.0), c(theta.cos(), 0.0)]];
    let half = std::f64::consts::FRAC_PI_2 * alpha;
    let (k1, k2) = (C::from_polar(1.0, -half), C::from_polar(1.0, half));
    let k = mat2_mul(&mat2_mul(&rot, &[[k1, c(0.0, 0.0)], [c(0.0, 0.0), k2]]), &mat2_inv(&rot)?);
    Twist::with_k1(k[0][0], k[0][1], k[1][0], k[1][1], k1)
}

pub fn twist_scan(cfg: &RunConfig) -> Outcome {
    let p = cfg.chain()?;
    let tuples: Vec<Option<EpsTuple>> = if cfg.eps.is_empty() && cfg.m.is_none() {
        vec![None]
    } else {
        cfg.eps_tuples(1)?.into_iter().map(Some).collect()
    };
    let mut rep = Report::new("twist-scan", &["alpha", "mu", "R", "energy", "eps", "block"]);
    for &alpha in &cfg.alphas {
        if !(alpha > -1.0 && alpha < 1.0) {
            return Err(qsov::Error::Input(format!("alpha {alpha} outside (-1, 1)")));
        }
        let tw = scan_twist(alpha)?;
        let q = ground_state(&p, &tw)?;
        let energy = if cfg.is_homogeneous() { energy_from_roots(&q).ok() } else { None };
        for eps in &tuples {
            let block = eps.as_ref().map(|e| block_value(&p, &tw, &q, e)).transpose()?;
            rep.push(vec![
                alpha.into(),
                tw.mu().into(),
                q.degree().into(),
                energy.into(),
                eps.as_ref().map(|e| e.to_string()).into(),
                block.into(),
            ]);
        }
    }
    Ok(rep)
}

pub fn extrapolate(cfg: &RunConfig) -> Outcome {
    let tw = cfg.twist()?;
    let sizes = cfg.sizes_or(&[6, 8, 10, 12]);
    let tuples = cfg.eps_tuples(1)?;
    let states: Vec<(ChainParams, QFunction)> = sizes
        .iter()
        .map(|&n| {
            let p = cfg.chain_with(n)?;
            let q = ground_state(&p, &tw)?;
            Ok((p, q))
        })
        .collect::<qsov::Result<_>>()?;
    let mut rep = Report::new(
        "extrapolate",
        &["eps", "sizes", "values", "estimate", "slope", "degree", "loo_spread", "monotone", "thermo", "distance"],
    );
    for eps in &tuples {
        let data: Vec<(usize, C)> = states
            .iter()
            .map(|(p, q)| Ok((p.n, block_value(p, &tw, q, eps)?)))
            .collect::<qsov::Result<_>>()?;
        let ex = extrapolate_blocks(&data, cfg.degree)?;
        let thermo = if eps.m() <= 3 && is_minus_i(cfg.eta()) {
            Some(block_thermo_hom(eps, &cfg.quadrature_for(eps.m())?, EXEC)?.value)
        } else {
            None
        };
        rep.push(vec![
            eps.to_string().into(),
            sizes.iter().map(|n| n.to_string()).collect::<Vec<_>>().join(";").into(),
            data.iter().map(|d| format_complex(d.1)).collect::<Vec<_>>().join(";").into(),
            ex.estimate.into(),
            ex.slope.into(),
            ex.degree.into(),
            ex.loo_spread.into(),
            ex.monotone.into(),
            thermo.into(),
            thermo.map(|t| (t - ex.estimate).norm()).into(),
        ]);
    }
    Ok(rep)
}

struct Suite {
    rep: Report,
}

impl Suite {
    fn run(&mut self, name: &str, threshold: f64, f: impl FnOnce() -> qsov::Result<f64>) {
        let t = Instant::now();
        let res = f();
        let secs = t.elapsed().as_secs_f64();
        let (observed, note) = match res {
            Ok(v) if v.is_finite() => (v, None),
            Ok(v) => (f64::INFINITY, Some(format!("non-finite value {v}"))),
            Err(e) => (f64::INFINITY, Some(e.to_string())),
        };
        let pass = self.rep.check(name, observed, threshold);
        let shown = if observed.is_finite() { Cell::Real(observed) } else { Cell::Empty };
        self.rep.push(vec![name.into(), shown, threshold.into(), pass.into(), secs.into(), note.into()]);
    }
}

pub fn verify(cfg: &RunConfig) -> Outcome {
    let p = cfg.chain()?;
    let tw = cfg.twist()?;
    let n = p.n;
    let mut s = Suite { rep: Report::new("verify", &["check", "observed", "threshold", "pass", "seconds", "note"]) };
    s.run("transfer_commutation", 1e-10, || {
        let t1 = transfer_matrix(&p, &tw, c(0.31, -0.17), EXEC);
        let t2 = transfer_matrix(&p, &tw, c(-0.52, 0.44), EXEC);
        Ok(commutator_norm(&t1, &t2) / (t1.norm_l2() * t2.norm_l2()).max(1.0))
    });
    s.run("quantum_determinant", 1e-10, || Ok(quantum_determinant_residual(&p, c(0.3, 0.2), EXEC)));
    let bases = SovBases::new(&p, &tw, EXEC);
    s.run("sov_orthogonality", 1e-9, || Ok(orthogonality_defect(&p, bases.as_ref().map_err(Clone::clone)?, EXEC)));

    let q = match (ground_state(&p, &tw), &cfg.perturb) {
        (Ok(g), Some(d)) => {
            if d.root >= g.degree() {
                return Err(qsov::Error::Input(format!("perturbed root {} but R = {}", d.root, g.degree())));
            }
            Ok(g.perturbed(d.root, d.delta.0))
        }
        (other, _) => other,
    };
    let q = &q;
    let state = || q.as_ref().map_err(Clone::clone);
    s.run("bethe_residual", 1e-9, || bethe_residual(&p, &tw, state()?));
    s.run("tq_residual", 1e-9, || {
        let q = state()?;
        Ok(tq_residual(&p, &tw, &TauPoly::from_q(&p, &tw, q), q, 2 * n + 4))
    });
    s.run("eigenstate_residual", 1e-9, || {
        eigenstate_residual(&p, &tw, &bases.as_ref().map_err(Clone::clone)?.right, state()?, EXEC)
    });
    s.run("wronskian", 1e-9, || {
        let q = state()?;
        Ok(wronskian_residual(&p, &tw, q, &dual_q(&p, &tw, q)?))
    });
    s.run("sum_rule", 1e-9, || {
        let q = state()?;
        Ok(sum_rule_residual(&p, &tw, q, &dual_q(&p, &tw, q)?))
    });
    s.run("slavnov_vs_direct", 1e-8, || {
        let q = state()?;
        let kept: Vec<usize> = (1..q.degree()).collect();
        let bar = BarQSpec::with_inhomogeneities(&p, kept, &[0]);
        let sl = slavnov_ratio(&p, &tw, q, &bar)?;
        let d = sov_overlap_direct(&p, &tw, &bar.polynomial(q), q, EXEC) / sov_overlap_direct(&p, &tw, q, q, EXEC);
        Ok((sl - d).norm() / d.norm().max(1.0))
    });
    for eps in ["11", "12", "1122", "1212"] {
        if eps.len() / 2 > n {
            continue;
        }
        s.run(&format!("multisum_vs_oracle_{eps}"), 1e-8, || {
            let q = state()?;
            let e = EpsTuple::parse(eps)?;
            let o = block_oracle(&BlockRequest::new(p.clone(), tw, q.clone(), e.clone()), EXEC)?;
            Ok((block_multisum(&p, &tw, q, &e, EXEC)? - o).norm() / o.norm().max(1.0))
        });
    }
    s.run("thermo_one_site", 1e-8, || {
        let e = EpsTuple::parse("11")?;
        Ok((block_thermo_hom(&e, &cfg.quadrature_for(1)?, EXEC)?.value - 0.5).norm())
    });
    Ok(s.rep)
}
