//! Variance profiles for the three column-graded protocols and Gaussian
//! sampling of coefficient matrices.

use std::fmt;
use std::str::FromStr;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Variances at or below this value are sampled as exact zeros.
pub const VARIANCE_FLOOR: f64 = 1e-300;

/// Dyson index.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "u8", into = "u8")]
pub enum Beta {
    Real,
    Complex,
}

impl Beta {
    /// Number of real components per entry.
    pub fn components(self) -> usize {
        match self {
            Beta::Real => 1,
            Beta::Complex => 2,
        }
    }

    pub fn value(self) -> f64 {
        self.components() as f64
    }
}

impl TryFrom<u8> for Beta {
    type Error = Error;

    fn try_from(v: u8) -> Result<Self> {
        match v {
            1 => Ok(Beta::Real),
            2 => Ok(Beta::Complex),
            _ => Err(Error::domain(format!("beta must be 1 or 2, got {v}"))),
        }
    }
}

impl From<Beta> for u8 {
    fn from(b: Beta) -> u8 {
        b.components() as u8
    }
}

impl fmt::Display for Beta {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.components())
    }
}

/// Protocol family without parameters.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ProtocolKind {
    EB,
    EP,
    EE,
}

impl ProtocolKind {
    /// One-parameter member of the family; EP and EE use `a = b = p`.
    pub fn with_param(self, p: f64) -> Protocol {
        match self {
            ProtocolKind::EB => Protocol::Eb { mu: p },
            ProtocolKind::EP => Protocol::Ep { a: p, b: p },
            ProtocolKind::EE => Protocol::Ee { a: p, b: p },
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            ProtocolKind::EB => "EB",
            ProtocolKind::EP => "EP",
            ProtocolKind::EE => "EE",
        }
    }

    /// Whether larger parameter values mean more entanglement.
    pub fn increasing(self) -> bool {
        !matches!(self, ProtocolKind::EB)
    }
}

impl FromStr for ProtocolKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_uppercase().as_str() {
            "EB" => Ok(ProtocolKind::EB),
            "EP" => Ok(ProtocolKind::EP),
            "EE" => Ok(ProtocolKind::EE),
            _ => Err(Error::Config(format!("unknown protocol {s:?} (expected EB, EP or EE)"))),
        }
    }
}

impl fmt::Display for ProtocolKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Protocol {
    /// Brownian: first column variance 1, all other columns `1/(1+μ)`.
    Eb { mu: f64 },
    /// Power law across columns: `1/(1 + (k/b)(l-1)/a)`.
    Ep { a: f64, b: f64 },
    /// Exponential across columns: `exp(-k(l-1)/(ab))`.
    Ee { a: f64, b: f64 },
    Custom,
}

impl Protocol {
    pub fn kind(&self) -> Option<ProtocolKind> {
        match self {
            Protocol::Eb { .. } => Some(ProtocolKind::EB),
            Protocol::Ep { .. } => Some(ProtocolKind::EP),
            Protocol::Ee { .. } => Some(ProtocolKind::EE),
            Protocol::Custom => None,
        }
    }

    pub fn label(&self) -> &'static str {
        self.kind().map_or("custom", ProtocolKind::name)
    }

    /// Scalar sweep parameter: `μ` for EB, `√(ab)` for EP/EE (only `ab` enters the profile).
    pub fn param(&self) -> f64 {
        match *self {
            Protocol::Eb { mu } => mu,
            Protocol::Ep { a, b } | Protocol::Ee { a, b } => (a * b).sqrt(),
            Protocol::Custom => f64::NAN,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let ok = |x: f64| x.is_finite() && x > 0.0;
        match *self {
            Protocol::Eb { mu } if !ok(mu) => Err(Error::domain(format!("mu must be positive and finite, got {mu}"))),
            Protocol::Ep { a, b } | Protocol::Ee { a, b } if !(ok(a) && ok(b)) => {
                Err(Error::domain(format!("a and b must be positive and finite, got a={a}, b={b}")))
            }
            _ => Ok(()),
        }
    }
}

/// Per-component variances `h` and optional means of one ensemble point.
///
/// Both real components of a complex entry share `h[(k,l)]`.
#[derive(Clone, Debug, PartialEq)]
pub struct VarianceProfile {
    beta: Beta,
    h: DMatrix<f64>,
    means: Option<Vec<DMatrix<f64>>>,
    protocol: Protocol,
}

impl VarianceProfile {
    /// Arbitrary profile. `means`, when given, holds one matrix per real component.
    pub fn custom(h: DMatrix<f64>, means: Option<Vec<DMatrix<f64>>>, beta: Beta) -> Result<Self> {
        if h.nrows() == 0 || h.ncols() < h.nrows() {
            return Err(Error::domain(format!(
                "profile must be N x (N+nu0) with N >= 1, got {} x {}",
                h.nrows(),
                h.ncols()
            )));
        }
        if let Some(bad) = h.iter().find(|v| !(v.is_finite() && **v >= 0.0)) {
            return Err(Error::domain(format!("variances must be finite and nonnegative, found {bad}")));
        }
        if let Some(means) = &means {
            if means.len() != beta.components() {
                return Err(Error::domain(format!(
                    "expected {} mean matrices, got {}",
                    beta.components(),
                    means.len()
                )));
            }
            for m in means {
                if m.shape() != h.shape() || m.iter().any(|v| !v.is_finite()) {
                    return Err(Error::domain("mean matrices must match the variance shape and be finite"));
                }
            }
        }
        let means = means.filter(|ms| ms.iter().any(|m| m.iter().any(|&v| v != 0.0)));
        Ok(VarianceProfile { beta, h, means, protocol: Protocol::Custom })
    }

    pub fn n_rows(&self) -> usize {
        self.h.nrows()
    }

    pub fn n_cols(&self) -> usize {
        self.h.ncols()
    }

    pub fn nu0(&self) -> usize {
        self.n_cols() - self.n_rows()
    }

    pub fn beta(&self) -> Beta {
        self.beta
    }

    pub fn protocol(&self) -> Protocol {
        self.protocol
    }

    pub fn h(&self) -> &DMatrix<f64> {
        &self.h
    }

    /// Component means, `None` when all are zero.
    pub fn means(&self) -> Option<&[DMatrix<f64>]> {
        self.means.as_deref()
    }

    fn mean(&self, k: usize, l: usize, s: usize) -> f64 {
        self.means.as_ref().map_or(0.0, |m| m[s][(k, l)])
    }
}

/// Profile of one protocol point.
pub fn build_profile(protocol: Protocol, n: usize, nu0: usize, beta: Beta) -> Result<VarianceProfile> {
    if n < 2 {
        return Err(Error::domain(format!("N must be at least 2, got {n}")));
    }
    protocol.validate()?;
    let cols = n + nu0;
    let h = match protocol {
        Protocol::Eb { mu } => {
            let rest = 1.0 / (1.0 + mu);
            DMatrix::from_fn(n, cols, |_, l| if l == 0 { 1.0 } else { rest })
        }
        Protocol::Ep { a, b } => {
            DMatrix::from_fn(n, cols, |k, l| 1.0 / (1.0 + ((k + 1) as f64 / b) * (l as f64 / a)))
        }
        Protocol::Ee { a, b } => {
            let ab = a * b;
            DMatrix::from_fn(n, cols, |k, l| (-((k + 1) as f64) * l as f64 / ab).exp().max(VARIANCE_FLOOR))
        }
        Protocol::Custom => {
            return Err(Error::domain("custom profiles are built with VarianceProfile::custom"));
        }
    };
    Ok(VarianceProfile { beta, h, means: None, protocol })
}

#[derive(Clone, Debug, PartialEq)]
pub enum Entries {
    Real(DMatrix<f64>),
    Complex(DMatrix<Complex64>),
}

/// Where a coefficient matrix came from.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Source {
    Profile(Protocol),
    Stationary { gamma: f64 },
    Langevin { y: f64 },
    Explicit,
}

/// One sampled N × (N+ν₀) coefficient matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct CMatrix {
    entries: Entries,
    source: Source,
}

impl CMatrix {
    pub fn real(m: DMatrix<f64>) -> Result<Self> {
        Self::new(Entries::Real(m), Source::Explicit)
    }

    pub fn complex(m: DMatrix<Complex64>) -> Result<Self> {
        Self::new(Entries::Complex(m), Source::Explicit)
    }

    pub fn new(entries: Entries, source: Source) -> Result<Self> {
        let finite = match &entries {
            Entries::Real(m) => m.iter().all(|v| v.is_finite()),
            Entries::Complex(m) => m.iter().all(|v| v.re.is_finite() && v.im.is_finite()),
        };
        if !finite {
            return Err(Error::numerical("coefficient matrix has non-finite entries"));
        }
        Ok(CMatrix { entries, source })
    }

    pub(crate) fn from_parts(entries: Entries, source: Source) -> Self {
        CMatrix { entries, source }
    }

    pub fn entries(&self) -> &Entries {
        &self.entries
    }

    pub fn into_entries(self) -> Entries {
        self.entries
    }

    pub fn source(&self) -> Source {
        self.source
    }

    pub fn beta(&self) -> Beta {
        match self.entries {
            Entries::Real(_) => Beta::Real,
            Entries::Complex(_) => Beta::Complex,
        }
    }

    pub fn shape(&self) -> (usize, usize) {
        match &self.entries {
            Entries::Real(m) => m.shape(),
            Entries::Complex(m) => m.shape(),
        }
    }

    /// Real component `s` of entry `(k, l)`.
    pub fn component(&self, k: usize, l: usize, s: usize) -> f64 {
        match &self.entries {
            Entries::Real(m) => m[(k, l)],
            Entries::Complex(m) if s == 0 => m[(k, l)].re,
            Entries::Complex(m) => m[(k, l)].im,
        }
    }
}

fn gaussian(mean: f64, variance: f64, z: f64) -> f64 {
    if variance <= VARIANCE_FLOOR {
        mean
    } else {
        mean + variance.sqrt() * z
    }
}

/// Draw one matrix. Normals are consumed entry by entry in column-major
/// order, real part first, whether or not the variance is floored.
pub fn sample_c<R: Rng + ?Sized>(profile: &VarianceProfile, rng: &mut R) -> CMatrix {
    let (n, m) = (profile.n_rows(), profile.n_cols());
    let entries = match profile.beta {
        Beta::Real => Entries::Real(DMatrix::from_fn(n, m, |k, l| {
            gaussian(profile.mean(k, l, 0), profile.h[(k, l)], rng.sample(StandardNormal))
        })),
        Beta::Complex => Entries::Complex(DMatrix::from_fn(n, m, |k, l| {
            let h = profile.h[(k, l)];
            let re = gaussian(profile.mean(k, l, 0), h, rng.sample(StandardNormal));
            let im = gaussian(profile.mean(k, l, 1), h, rng.sample(StandardNormal));
            Complex64::new(re, im)
        })),
    };
    CMatrix::from_parts(entries, Source::Profile(profile.protocol))
}

/// I.i.d. matrix with per-component variance `variance`.
pub fn sample_iid<R: Rng + ?Sized>(n: usize, cols: usize, beta: Beta, variance: f64, rng: &mut R) -> Entries {
    let sd = variance.sqrt();
    match beta {
        Beta::Real => Entries::Real(DMatrix::from_fn(n, cols, |_, _| sd * rng.sample::<f64, _>(StandardNormal))),
        Beta::Complex => Entries::Complex(DMatrix::from_fn(n, cols, |_, _| {
            let re: f64 = rng.sample(StandardNormal);
            let im: f64 = rng.sample(StandardNormal);
            Complex64::new(sd * re, sd * im)
        })),
    }
}

/// Stationary ensemble: all components i.i.d. with variance `1/(2γ)`.
pub fn sample_stationary<R: Rng + ?Sized>(
    n: usize,
    nu0: usize,
    beta: Beta,
    gamma: f64,
    rng: &mut R,
) -> Result<CMatrix> {
    if !(gamma.is_finite() && gamma > 0.0) {
        return Err(Error::domain(format!("gamma must be positive, got {gamma}")));
    }
    if n == 0 {
        return Err(Error::domain("N must be positive"));
    }
    let entries = sample_iid(n, n + nu0, beta, 0.5 / gamma, rng);
    Ok(CMatrix::from_parts(entries, Source::Stationary { gamma }))
}

fn default_gamma() -> f64 {
    0.25
}

/// On-disk description of one protocol point.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProfileConfig {
    pub protocol: ProtocolKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mu: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub a: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub b: Option<f64>,
    #[serde(rename = "N", alias = "n")]
    pub n: usize,
    #[serde(default)]
    pub nu0: usize,
    pub beta: Beta,
    #[serde(default = "default_gamma")]
    pub gamma: f64,
    pub seed: u64,
}

impl ProfileConfig {
    pub fn from_protocol(protocol: Protocol, n: usize, nu0: usize, beta: Beta, gamma: f64, seed: u64) -> Result<Self> {
        let (kind, mu, a, b) = match protocol {
            Protocol::Eb { mu } => (ProtocolKind::EB, Some(mu), None, None),
            Protocol::Ep { a, b } => (ProtocolKind::EP, None, Some(a), Some(b)),
            Protocol::Ee { a, b } => (ProtocolKind::EE, None, Some(a), Some(b)),
            Protocol::Custom => return Err(Error::Config("custom profiles have no config form".into())),
        };
        Ok(ProfileConfig { protocol: kind, mu, a, b, n, nu0, beta, gamma, seed })
    }

    pub fn protocol(&self) -> Result<Protocol> {
        let need = |v: Option<f64>, key: &str| {
            v.ok_or_else(|| Error::Config(format!("protocol {} requires key `{key}`", self.protocol)))
        };
        let p = match self.protocol {
            ProtocolKind::EB => Protocol::Eb { mu: need(self.mu, "mu")? },
            ProtocolKind::EP => Protocol::Ep { a: need(self.a, "a")?, b: need(self.b, "b")? },
            ProtocolKind::EE => Protocol::Ee { a: need(self.a, "a")?, b: need(self.b, "b")? },
        };
        p.validate()?;
        Ok(p)
    }

    pub fn build(&self) -> Result<VarianceProfile> {
        build_profile(self.protocol()?, self.n, self.nu0, self.beta)
    }

    pub fn from_toml_str(s: &str) -> Result<Self> {
        let cfg: ProfileConfig = toml::from_str(s).map_err(|e| Error::Config(e.to_string()))?;
        if !(cfg.gamma.is_finite() && cfg.gamma > 0.0) {
            return Err(Error::Config(format!("key `gamma`: must be positive, got {}", cfg.gamma)));
        }
        cfg.protocol()?;
        Ok(cfg)
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }
}
