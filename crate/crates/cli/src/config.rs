//! Run configuration: TOML ingestion, schema validation, default
//! materialization, echo and digest.

use std::fmt;
use std::path::{Path, PathBuf};

use nilspherical::spectrum::SpectrumSlice;
use nilspherical::transform::{InvariantTestFunction, Multiplier, QuadratureSpec};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use toml::Value;

/// A configuration problem; maps to exit code 2.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfigError(pub String);

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for ConfigError {}

fn err<T>(msg: impl Into<String>) -> Result<T, ConfigError> {
    Err(ConfigError(msg.into()))
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Kind {
    Integer,
    Float,
    Str,
    Bool,
    Floats,
    Integers,
    FloatRows,
    Table(&'static [(&'static str, Kind)]),
    Tables(&'static [(&'static str, Kind)]),
}

impl Kind {
    fn describe(self) -> &'static str {
        match self {
            Kind::Integer => "a non-negative integer",
            Kind::Float => "a number",
            Kind::Str => "a string",
            Kind::Bool => "a boolean",
            Kind::Floats => "an array of numbers",
            Kind::Integers => "an array of non-negative integers",
            Kind::FloatRows => "an array of arrays of numbers",
            Kind::Table(_) => "a table",
            Kind::Tables(_) => "an array of tables",
        }
    }
}

const QUADRATURE: &[(&str, Kind)] = &[
    ("radial_order", Kind::Integer),
    ("central_order", Kind::Integer),
    ("transverse_order", Kind::Integer),
    ("lambda_min", Kind::Float),
    ("lambda_max", Kind::Float),
    ("lambda_order", Kind::Integer),
    ("r_max", Kind::Float),
    ("r_order", Kind::Integer),
    ("r_panels", Kind::Integer),
    ("alpha_tol", Kind::Float),
    ("alpha_cap", Kind::Integer),
    ("truncation", Kind::Integer),
    ("mc_samples", Kind::Integer),
];

const CATALOG: &[(&str, Kind)] = &[
    ("family", Kind::Str),
    ("coeffs", Kind::FloatRows),
    ("beta_v", Kind::Float),
    ("beta_z", Kind::Float),
    ("multiplier", Kind::Str),
];

const OUTPUT: &[(&str, Kind)] = &[("dir", Kind::Str), ("format", Kind::Str), ("record_timings", Kind::Bool)];

const POINT: &[(&str, Kind)] = &[("x", Kind::Floats), ("a", Kind::Floats)];

const SPECTRAL: &[(&str, Kind)] = &[("r", Kind::Float), ("alpha", Kind::Integers), ("lambda", Kind::Float)];

const TOP: &[(&str, Kind)] = &[
    ("n", Kind::Integer),
    ("seed", Kind::Integer),
    ("mu_hat", Kind::Floats),
    ("mult", Kind::Integers),
    ("xp_star", Kind::Floats),
    ("suite", Kind::Str),
    ("skew", Kind::Floats),
    ("quadrature", Kind::Table(QUADRATURE)),
    ("catalog", Kind::Tables(CATALOG)),
    ("output", Kind::Table(OUTPUT)),
    ("point", Kind::Table(POINT)),
    ("spectral", Kind::Table(SPECTRAL)),
];

fn matches(kind: Kind, v: &Value) -> bool {
    let is_num = |v: &Value| matches!(v, Value::Float(_) | Value::Integer(_));
    let is_nat = |v: &Value| matches!(v, Value::Integer(i) if *i >= 0);
    match (kind, v) {
        (Kind::Integer, v) => is_nat(v),
        (Kind::Float, v) => is_num(v),
        (Kind::Str, Value::String(_)) => true,
        (Kind::Bool, Value::Boolean(_)) => true,
        (Kind::Floats, Value::Array(a)) => a.iter().all(is_num),
        (Kind::Integers, Value::Array(a)) => a.iter().all(is_nat),
        (Kind::FloatRows, Value::Array(a)) => a.iter().all(|r| matches!(r, Value::Array(r) if r.iter().all(is_num))),
        (Kind::Table(_), Value::Table(_)) => true,
        (Kind::Tables(_), Value::Array(a)) => a.iter().all(|t| matches!(t, Value::Table(_))),
        _ => false,
    }
}

/// Closest known key within edit distance 3.
fn suggest(key: &str, known: &[(&'static str, Kind)]) -> Option<&'static str> {
    known
        .iter()
        .map(|(k, _)| (strsim::levenshtein(key, k), *k))
        .filter(|(d, _)| *d <= 3)
        .min_by_key(|(d, _)| *d)
        .map(|(_, k)| k)
}

fn check_table(table: &toml::Table, schema: &'static [(&'static str, Kind)], prefix: &str) -> Result<(), ConfigError> {
    for (key, value) in table {
        let path = if prefix.is_empty() { key.clone() } else { format!("{prefix}.{key}") };
        let Some((_, kind)) = schema.iter().find(|(k, _)| k == key) else {
            let hint = match suggest(key, schema) {
                Some(s) => format!("; did you mean \"{s}\"?"),
                None => String::new(),
            };
            return err(format!("unknown key \"{path}\"{hint}"));
        };
        if !matches(*kind, value) {
            return err(format!("key \"{path}\" must be {}, found {}", kind.describe(), value.type_str()));
        }
        match (kind, value) {
            (Kind::Table(inner), Value::Table(t)) => check_table(t, inner, &path)?,
            (Kind::Tables(inner), Value::Array(items)) => {
                for (i, item) in items.iter().enumerate() {
                    if let Value::Table(t) = item {
                        check_table(t, inner, &format!("{path}[{i}]"))?;
                    }
                }
            }
            _ => {}
        }
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuadratureConfig {
    pub radial_order: usize,
    pub central_order: usize,
    pub transverse_order: usize,
    pub lambda_min: f64,
    pub lambda_max: f64,
    pub lambda_order: usize,
    pub r_max: f64,
    pub r_order: usize,
    pub r_panels: usize,
    pub alpha_tol: f64,
    pub alpha_cap: usize,
    pub truncation: usize,
    pub mc_samples: usize,
}

impl Default for QuadratureConfig {
    fn default() -> Self {
        let q = QuadratureSpec::default();
        Self {
            radial_order: q.radial_order,
            central_order: q.central_order,
            transverse_order: q.transverse_order,
            lambda_min: q.lambda_min,
            lambda_max: q.lambda_max,
            lambda_order: q.lambda_order,
            r_max: q.r_max,
            r_order: q.r_order,
            r_panels: q.r_panels,
            alpha_tol: q.alpha_tol,
            alpha_cap: q.alpha_cap,
            truncation: q.truncation,
            mc_samples: q.mc_samples,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CatalogEntry {
    /// `gaussian` or `poly_gaussian`.
    pub family: String,
    /// Coefficients `c_{jk}` of `ρ^j u^{2k}`; `[[1.0]]` for a Gaussian.
    pub coeffs: Vec<Vec<f64>>,
    pub beta_v: f64,
    pub beta_z: f64,
    /// `none`, `gamma_half_plus_it`, `gamma_half_minus_it`, `t` or `gamma`.
    pub multiplier: String,
}

impl CatalogEntry {
    fn gaussian(beta_v: f64, beta_z: f64) -> Self {
        Self {
            family: "gaussian".into(),
            coeffs: vec![vec![1.0]],
            beta_v,
            beta_z,
            multiplier: "none".into(),
        }
    }

    pub fn build(&self) -> Result<InvariantTestFunction, ConfigError> {
        let base = match self.family.as_str() {
            "gaussian" => {
                if self.coeffs != vec![vec![1.0]] {
                    return err("catalog: a gaussian entry takes coeffs = [[1.0]]");
                }
                InvariantTestFunction::gaussian(self.beta_v, self.beta_z)
            }
            "poly_gaussian" => InvariantTestFunction::poly_gaussian(self.coeffs.clone(), self.beta_v, self.beta_z),
            other => return err(format!("catalog: unknown family \"{other}\" (expected gaussian or poly_gaussian)")),
        }
        .map_err(|e| ConfigError(format!("catalog: {e}")))?;
        let m = match self.multiplier.as_str() {
            "none" => return Ok(base),
            "gamma_half_plus_it" => Multiplier::GammaHalfPlusIt,
            "gamma_half_minus_it" => Multiplier::GammaHalfMinusIt,
            "t" => Multiplier::T,
            "gamma" => Multiplier::Gamma,
            other => return err(format!("catalog: unknown multiplier \"{other}\"")),
        };
        base.multiplied(m).map_err(|e| ConfigError(format!("catalog: {e}")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutputConfig {
    pub dir: String,
    /// `csv`, `json` or `both`.
    pub format: String,
    pub record_timings: bool,
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self {
            dir: "nilspherical-out".into(),
            format: "both".into(),
            record_timings: false,
        }
    }
}

/// Group element in exponential coordinates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PointConfig {
    pub x: Vec<f64>,
    pub a: Vec<f64>,
}

/// Spectrum point; `lambda = 0` selects type 2.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectralConfig {
    pub r: f64,
    pub alpha: Vec<usize>,
    pub lambda: f64,
}

/// Fully materialized configuration. Serializing it gives the echoed config.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub n: usize,
    pub seed: u64,
    pub mu_hat: Vec<f64>,
    pub mult: Vec<usize>,
    pub xp_star: Vec<f64>,
    pub suite: String,
    /// Skew coordinates for `canon`; empty to describe the slice only.
    pub skew: Vec<f64>,
    pub point: PointConfig,
    pub spectral: SpectralConfig,
    pub quadrature: QuadratureConfig,
    pub catalog: Vec<CatalogEntry>,
    pub output: OutputConfig,
}

/// A parsed configuration with the notes produced while materializing it.
#[derive(Debug, Clone)]
pub struct Loaded {
    pub config: RunConfig,
    pub warnings: Vec<String>,
}

fn get<'a>(t: &'a toml::Table, key: &str) -> Option<&'a Value> {
    t.get(key)
}

fn as_f64(v: &Value) -> f64 {
    match v {
        Value::Float(f) => *f,
        Value::Integer(i) => *i as f64,
        _ => unreachable!("schema checked"),
    }
}

fn as_usize(v: &Value, path: &str) -> Result<usize, ConfigError> {
    match v {
        Value::Integer(i) => usize::try_from(*i).map_err(|_| ConfigError(format!("key \"{path}\" is out of range"))),
        _ => unreachable!("schema checked"),
    }
}

fn floats(v: &Value) -> Vec<f64> {
    v.as_array().map(|a| a.iter().map(as_f64).collect()).unwrap_or_default()
}

fn naturals(v: &Value, path: &str) -> Result<Vec<usize>, ConfigError> {
    v.as_array().unwrap_or(&Vec::new()).iter().map(|x| as_usize(x, path)).collect()
}

fn string(v: &Value) -> String {
    v.as_str().unwrap_or_default().to_string()
}

pub fn default_catalog() -> Vec<CatalogEntry> {
    vec![
        CatalogEntry::gaussian(1.0, 1.0),
        CatalogEntry::gaussian(0.7, 1.3),
        CatalogEntry {
            family: "poly_gaussian".into(),
            coeffs: vec![vec![1.0, -0.5], vec![0.25, 0.0], vec![0.1]],
            beta_v: 1.1,
            beta_z: 0.9,
            multiplier: "none".into(),
        },
    ]
}

/// Parse TOML text; `seed_override` replaces the configured seed.
pub fn parse_config_str(text: &str, seed_override: Option<u64>) -> Result<Loaded, ConfigError> {
    let table: toml::Table = text.parse().map_err(|e: toml::de::Error| ConfigError(format!("malformed config: {}", e.message())))?;
    check_table(&table, TOP, "")?;
    let mut warnings = Vec::new();

    let n = match get(&table, "n") {
        Some(v) => as_usize(v, "n")?,
        None => return err("missing key \"n\" (a non-negative integer)"),
    };
    let seed = match (seed_override, get(&table, "seed")) {
        (Some(s), _) => s,
        (None, Some(Value::Integer(i))) => *i as u64,
        (None, _) => return err("missing key \"seed\" (a non-negative integer); the seed is mandatory"),
    };

    let mult = get(&table, "mult").map(|v| naturals(v, "mult")).transpose()?;
    let mu = get(&table, "mu_hat").map(floats);
    let (mult, mu) = match (mult, mu) {
        (None, None) => {
            let s = SpectrumSlice::default_for(n).map_err(|e| ConfigError(format!("n: {e}")))?;
            (s.blocks.mult.clone(), s.mu_hat.clone())
        }
        (Some(m), None) if m.len() == 1 => {
            let mu = vec![1.0 / (m[0].max(1) as f64).sqrt()];
            (m, mu)
        }
        (Some(_), None) => return err("key \"mu_hat\" is required when \"mult\" has more than one block"),
        (None, Some(mu)) => (vec![1; mu.len()], mu),
        (Some(m), Some(mu)) => (m, mu),
    };
    let p0: usize = mult.iter().sum();
    let xp_star = match get(&table, "xp_star").map(floats) {
        Some(x) => x,
        None if n > 2 * p0 => {
            let mut e = vec![0.0; n - 2 * p0];
            e[0] = 1.0;
            e
        }
        None => vec![],
    };
    let (slice, changed) = SpectrumSlice::normalized(n, mult, mu, xp_star).map_err(|e| ConfigError(format!("slice: {e}")))?;
    if changed {
        warnings.push(format!("mu_hat rescaled so that sum m_j mu_hat_j^2 = 1: {:?}", slice.mu_hat));
    }

    let suite = get(&table, "suite").map(string).unwrap_or_else(|| "acceptance".into());
    let skew = get(&table, "skew").map(floats).unwrap_or_default();
    if !skew.is_empty() && skew.len() != n * (n - 1) / 2 {
        return err(format!("key \"skew\" must have n(n-1)/2 = {} entries, found {}", n * (n - 1) / 2, skew.len()));
    }

    let sub = |key: &str| get(&table, key).and_then(Value::as_table).cloned().unwrap_or_default();

    let pt = sub("point");
    let point = PointConfig {
        x: pt.get("x").map(floats).unwrap_or_else(|| vec![0.0; n]),
        a: pt.get("a").map(floats).unwrap_or_else(|| vec![0.0; n * (n - 1) / 2]),
    };
    if point.x.len() != n || point.a.len() != n * (n - 1) / 2 {
        return err(format!("table \"point\" needs x of length {n} and a of length {}", n * (n - 1) / 2));
    }

    let sp = sub("spectral");
    let spectral = SpectralConfig {
        r: sp.get("r").map(as_f64).unwrap_or(0.0),
        alpha: sp.get("alpha").map(|v| naturals(v, "spectral.alpha")).transpose()?.unwrap_or_else(|| vec![0; slice.blocks.p1()]),
        lambda: sp.get("lambda").map(as_f64).unwrap_or(1.0),
    };
    if spectral.alpha.len() != slice.blocks.p1() {
        return err(format!("key \"spectral.alpha\" must have {} entries", slice.blocks.p1()));
    }

    let q = sub("quadrature");
    let mut quadrature = QuadratureConfig::default();
    for (key, v) in &q {
        let path = format!("quadrature.{key}");
        match key.as_str() {
            "radial_order" => quadrature.radial_order = as_usize(v, &path)?,
            "central_order" => quadrature.central_order = as_usize(v, &path)?,
            "transverse_order" => quadrature.transverse_order = as_usize(v, &path)?,
            "lambda_min" => quadrature.lambda_min = as_f64(v),
            "lambda_max" => quadrature.lambda_max = as_f64(v),
            "lambda_order" => quadrature.lambda_order = as_usize(v, &path)?,
            "r_max" => quadrature.r_max = as_f64(v),
            "r_order" => quadrature.r_order = as_usize(v, &path)?,
            "r_panels" => quadrature.r_panels = as_usize(v, &path)?,
            "alpha_tol" => quadrature.alpha_tol = as_f64(v),
            "alpha_cap" => quadrature.alpha_cap = as_usize(v, &path)?,
            "truncation" => quadrature.truncation = as_usize(v, &path)?,
            "mc_samples" => quadrature.mc_samples = as_usize(v, &path)?,
            _ => unreachable!("schema checked"),
        }
    }

    let catalog = match get(&table, "catalog").and_then(Value::as_array) {
        None => default_catalog(),
        Some(items) => items
            .iter()
            .map(|item| {
                let t = item.as_table().expect("schema checked");
                let family = t.get("family").map(string).unwrap_or_else(|| "gaussian".into());
                CatalogEntry {
                    coeffs: t.get("coeffs").map(|v| v.as_array().unwrap().iter().map(floats).collect()).unwrap_or_else(|| vec![vec![1.0]]),
                    beta_v: t.get("beta_v").map(as_f64).unwrap_or(1.0),
                    beta_z: t.get("beta_z").map(as_f64).unwrap_or(1.0),
                    multiplier: t.get("multiplier").map(string).unwrap_or_else(|| "none".into()),
                    family,
                }
            })
            .collect(),
    };

    let o = sub("output");
    let mut output = OutputConfig::default();
    if let Some(v) = o.get("dir") {
        output.dir = string(v);
    }
    if let Some(v) = o.get("format") {
        output.format = string(v);
    }
    if let Some(Value::Boolean(b)) = o.get("record_timings") {
        output.record_timings = *b;
    }
    if !matches!(output.format.as_str(), "csv" | "json" | "both") {
        return err(format!("key \"output.format\" must be one of csv, json, both; found \"{}\"", output.format));
    }

    let config = RunConfig {
        n,
        seed,
        mu_hat: slice.mu_hat.clone(),
        mult: slice.blocks.mult.clone(),
        xp_star: slice.xp_star.clone(),
        suite,
        skew,
        point,
        spectral,
        quadrature,
        catalog,
        output,
    };
    config.quadrature_spec().validate().map_err(|e| ConfigError(format!("quadrature: {e}")))?;
    for entry in &config.catalog {
        entry.build()?;
    }
    crate::checks::resolve_suite(&config.suite)?;
    Ok(Loaded { config, warnings })
}

pub fn parse_config(path: &Path, seed_override: Option<u64>) -> Result<Loaded, ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|e| ConfigError(format!("cannot read {}: {e}", path.display())))?;
    parse_config_str(&text, seed_override)
}

impl RunConfig {
    pub fn slice(&self) -> SpectrumSlice {
        SpectrumSlice::new(self.n, self.mult.clone(), self.mu_hat.clone(), self.xp_star.clone())
            .expect("validated when the config was parsed")
    }

    pub fn quadrature_spec(&self) -> QuadratureSpec {
        let q = &self.quadrature;
        QuadratureSpec {
            radial_order: q.radial_order,
            central_order: q.central_order,
            transverse_order: q.transverse_order,
            lambda_min: q.lambda_min,
            lambda_max: q.lambda_max,
            lambda_order: q.lambda_order,
            r_max: q.r_max,
            r_order: q.r_order,
            r_panels: q.r_panels,
            alpha_tol: q.alpha_tol,
            alpha_cap: q.alpha_cap,
            truncation: q.truncation,
            mc_samples: q.mc_samples,
            seed: self.seed,
        }
    }

    pub fn functions(&self) -> Vec<InvariantTestFunction> {
        self.catalog.iter().map(|e| e.build().expect("validated when the config was parsed")).collect()
    }

    /// TOML text that parses back to this configuration.
    pub fn echo(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    /// SHA-256 of the canonical JSON form, excluding the output settings.
    pub fn digest(&self) -> String {
        let mut v = serde_json::to_value(self).expect("config serializes");
        if let serde_json::Value::Object(map) = &mut v {
            map.remove("output");
        }
        // serde_json maps are key-sorted, so the text is canonical.
        let text = serde_json::to_string(&v).expect("json");
        let hash = Sha256::digest(text.as_bytes());
        hash.iter().map(|b| format!("{b:02x}")).collect()
    }

    pub fn out_dir(&self) -> PathBuf {
        PathBuf::from(&self.output.dir)
    }
}
