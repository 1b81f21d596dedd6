use std::fmt;
use std::str::FromStr;

use qsov::algebra_core::{c, ChainParams, Twist};
use qsov::blocks_finite::EpsTuple;
use qsov::thermo::QuadratureConfig;
use qsov::C;
use serde::{Deserialize, Serialize};

/// Complex number written as `"re+imi"`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct Cx(pub C);

impl From<Cx> for String {
    fn from(z: Cx) -> String {
        format_complex(z.0)
    }
}

impl TryFrom<String> for Cx {
    type Error = String;
    fn try_from(s: String) -> Result<Self, String> {
        s.parse()
    }
}

impl FromStr for Cx {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let t: String = s.chars().filter(|ch| !ch.is_whitespace()).collect();
        let bad = || format!("cannot parse complex number {s:?}");
        let Some(body) = t.strip_suffix('i') else {
            return t.parse::<f64>().map(|re| Cx(c(re, 0.0))).map_err(|_| bad());
        };
        let bytes = body.as_bytes();
        let split = (1..bytes.len())
            .rev()
            .find(|&k| matches!(bytes[k], b'+' | b'-') && !matches!(bytes[k - 1], b'e' | b'E'));
        let (re, im) = match split {
            Some(k) => (&body[..k], &body[k..]),
            None => ("0", body),
        };
        let im = match im {
            "" | "+" => "1",
            "-" => "-1",
            x => x,
        };
        let re: f64 = re.parse().map_err(|_| bad())?;
        let im: f64 = im.parse().map_err(|_| bad())?;
        Ok(Cx(c(re, im)))
    }
}

impl fmt::Display for Cx {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&format_complex(self.0))
    }
}

/// 17 significant digits, exact zero as `0`.
pub fn format_real(x: f64) -> String {
    if x == 0.0 {
        "0".into()
    } else {
        format!("{x:.16e}")
    }
}

pub fn format_complex(z: C) -> String {
    if z.re == 0.0 && z.im == 0.0 {
        return "0".into();
    }
    let sign = if z.im.is_sign_negative() { '-' } else { '+' };
    format!("{}{}{}i", format_real(z.re), sign, format_real(z.im.abs()))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum XiSpec {
    Explicit { values: Vec<Cx> },
    Band { band: f64 },
    Spread { spacing: f64, jitter: f64 },
    Homogeneous {},
    HomogeneousPerturbed { scale: f64 },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum TwistSpec {
    Identity {},
    SigmaX {},
    Explicit { matrix: [[Cx; 2]; 2] },
    RandomUnitaryEigen { seed: Option<u64> },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ChainSpec {
    pub n: usize,
    pub eta: [f64; 2],
    pub xi: XiSpec,
}

impl Default for ChainSpec {
    fn default() -> Self {
        Self { n: 4, eta: [0.0, -1.0], xi: XiSpec::Spread { spacing: 1.0, jitter: 0.1 } }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QuadratureSpec {
    pub half_width: f64,
    pub panels: usize,
    pub nodes_per_panel: usize,
    #[serde(default)]
    pub estimate_error: bool,
}

/// Root perturbation applied to the state under test in `verify`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Perturbation {
    pub root: usize,
    pub delta: Cx,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub chain: ChainSpec,
    pub twist: TwistSpec,
    pub seed: u64,
    pub format: Format,
    pub eps: Vec<String>,
    pub m: Option<usize>,
    pub sizes: Vec<usize>,
    pub quadrature: Option<QuadratureSpec>,
    pub degree: Option<usize>,
    pub inhomogeneities: Vec<Cx>,
    pub alphas: Vec<f64>,
    pub kept: Option<Vec<usize>>,
    pub sites: Vec<usize>,
    pub perturb: Option<Perturbation>,
    pub tolerance: f64,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            chain: ChainSpec::default(),
            twist: TwistSpec::SigmaX {},
            seed: 1,
            format: Format::Csv,
            eps: Vec::new(),
            m: None,
            sizes: Vec::new(),
            quadrature: None,
            degree: None,
            inhomogeneities: Vec::new(),
            alphas: vec![-0.5, -0.25, 0.0, 0.25, 0.5],
            kept: None,
            sites: Vec::new(),
            perturb: None,
            tolerance: 1e-8,
        }
    }
}

impl RunConfig {
    pub fn eta(&self) -> C {
        c(self.chain.eta[0], self.chain.eta[1])
    }

    pub fn is_homogeneous(&self) -> bool {
        matches!(self.chain.xi, XiSpec::Homogeneous {} | XiSpec::HomogeneousPerturbed { .. })
    }

    pub fn chain_with(&self, n: usize) -> qsov::Result<ChainParams> {
        let eta = self.eta();
        let seed = self.seed.wrapping_add(n as u64);
        match &self.chain.xi {
            XiSpec::Explicit { values } => {
                if values.len() != n {
                    return Err(qsov::Error::Input(format!("{} explicit inhomogeneities for N = {n}", values.len())));
                }
                ChainParams::new(eta, values.iter().map(|z| z.0).collect())
            }
            XiSpec::Band { band } => ChainParams::random(n, eta, *band, seed),
            XiSpec::Spread { spacing, jitter } => ChainParams::spread(n, eta, *spacing, *jitter, seed),
            XiSpec::Homogeneous {} => ChainParams::homogeneous(n, eta),
            XiSpec::HomogeneousPerturbed { scale } => ChainParams::random(n, eta, *scale, seed),
        }
    }

    pub fn chain(&self) -> qsov::Result<ChainParams> {
        self.chain_with(self.chain.n)
    }

    pub fn twist(&self) -> qsov::Result<Twist> {
        match &self.twist {
            TwistSpec::Identity {} => Ok(Twist::identity()),
            TwistSpec::SigmaX {} => Ok(Twist::sigma_x()),
            TwistSpec::Explicit { matrix: [[a, b], [cc, d]] } => Twist::new(a.0, b.0, cc.0, d.0),
            TwistSpec::RandomUnitaryEigen { seed } => Ok(Twist::random_unitary_eigen(seed.unwrap_or(self.seed))),
        }
    }

    /// Requested tuples, or all tuples of length `m`.
    pub fn eps_tuples(&self, default_m: usize) -> qsov::Result<Vec<EpsTuple>> {
        if !self.eps.is_empty() {
            return self.eps.iter().map(|s| EpsTuple::parse(s)).collect();
        }
        Ok(EpsTuple::all(self.m.unwrap_or(default_m)))
    }

    pub fn sizes_or(&self, default: &[usize]) -> Vec<usize> {
        if self.sizes.is_empty() {
            default.to_vec()
        } else {
            self.sizes.clone()
        }
    }

    pub fn quadrature_for(&self, m: usize) -> qsov::Result<QuadratureConfig> {
        let cfg = match &self.quadrature {
            Some(q) => QuadratureConfig {
                half_width: q.half_width,
                panels: q.panels,
                nodes_per_panel: q.nodes_per_panel,
                estimate_error: q.estimate_error,
            },
            None => QuadratureConfig::for_m(m),
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), String> {
        if self.chain.n == 0 {
            return Err("chain.n must be positive".into());
        }
        if !self.tolerance.is_finite() || self.tolerance <= 0.0 {
            return Err("tolerance must be positive".into());
        }
        for s in &self.eps {
            EpsTuple::parse(s).map_err(|e| e.to_string())?;
        }
        if self.sizes.contains(&0) {
            return Err("sizes must be positive".into());
        }
        self.chain().map_err(|e| e.to_string())?;
        self.twist().map_err(|e| e.to_string())?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn complex_parsing() {
        let cases = [
            ("1.5", c(1.5, 0.0)),
            ("-2i", c(0.0, -2.0)),
            ("i", c(0.0, 1.0)),
            ("-i", c(0.0, -1.0)),
            ("0.3-0.5i", c(0.3, -0.5)),
            ("1e-3+2E-1i", c(1e-3, 0.2)),
            ("-1e+2-3i", c(-100.0, -3.0)),
        ];
        for (s, z) in cases {
            assert_eq!(s.parse::<Cx>().unwrap().0, z, "{s}");
        }
        assert!("1+".parse::<Cx>().is_err());
        assert!("abc".parse::<Cx>().is_err());
    }

    #[test]
    fn complex_round_trip() {
        for z in [c(0.1, -0.2), c(-1e-300, 3.0), c(0.0, 0.0), c(1.0 / 3.0, -0.0)] {
            let s = format_complex(z);
            assert_eq!(s.parse::<Cx>().unwrap().0, z, "{s}");
        }
    }

    #[test]
    fn unknown_keys_rejected() {
        assert!(serde_json::from_str::<RunConfig>(r#"{"chain": {"n": 3, "bogus": 1}}"#).is_err());
        assert!(serde_json::from_str::<RunConfig>(r#"{"twist": {"kind": "sigma_x", "extra": 2}}"#).is_err());
        assert!(serde_json::from_str::<RunConfig>(r#"{"sed": 3}"#).is_err());
    }

    #[test]
    fn config_round_trip() {
        let cfg = RunConfig {
            chain: ChainSpec { n: 3, eta: [0.0, -1.0], xi: XiSpec::Explicit { values: vec![Cx(c(0.1, -0.5)); 3] } },
            twist: TwistSpec::Explicit { matrix: [[Cx(c(1.0, 0.0)), Cx(c(0.2, 0.1))], [Cx(c(0.3, 0.0)), Cx(c(-1.0, 0.5))]] },
            eps: vec!["1122".into()],
            ..RunConfig::default()
        };
        let text = serde_json::to_string(&cfg).unwrap();
        assert_eq!(serde_json::from_str::<RunConfig>(&text).unwrap(), cfg);
    }
}
