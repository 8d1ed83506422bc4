//! Experiment configuration: a small sectioned key–value file format.
//!
//! ```text
//! # comments and blank lines are skipped
//! [data]
//! price.eq = data/eq.csv
//! curve.vix = data/vix_curve.csv
//! forward_fill = true
//!
//! [experiment]
//! k = 5
//! validation = 2014-07-01..2015-09-30
//! testing = 2015-10-01..2021-12-31
//! output = runs/full
//! ```
//!
//! Every key is checked against the schema below — an unknown section or
//! key is an error, not a warning, so typos cannot silently fall back to a
//! default. Grid and window defaults follow the standard setup: `K = 5`,
//! `v₀ = v₁ = 50`, `v = 100`, windows {22, 44, 63, 126, 252}, `p ∈ {1, 1.5, 2}`
//! and a nine-point λ grid from 0.8 to 1.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use chrono::NaiveDate;

use crate::daa::CapMode;
use crate::error::{Error, Result};
use crate::ingest::CurveKind;
use crate::loss::LossFamily;
use crate::strategy::{KStar, MddMode};

/// Passive comparison portfolios.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BenchmarkKind {
    /// Constant 1/2 holding of each asset, averaged across assets.
    ConstantHalfEqual,
    /// Constant 1/2 equity plus a constant 1/6 volatility-index hedge.
    AlwaysHedged,
}

impl BenchmarkKind {
    pub fn name(self) -> &'static str {
        match self {
            BenchmarkKind::ConstantHalfEqual => "constant_half_equal",
            BenchmarkKind::AlwaysHedged => "always_hedged",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "constant_half_equal" => Ok(BenchmarkKind::ConstantHalfEqual),
            "always_hedged" => Ok(BenchmarkKind::AlwaysHedged),
            other => Err(Error::config(format!("unknown benchmark {other:?}"))),
        }
    }
}

/// Where the market data comes from: a pre-built frame file or raw CSVs.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum DataConfig {
    Frame(PathBuf),
    Raw {
        prices: BTreeMap<String, PathBuf>,
        curves: BTreeMap<CurveKind, PathBuf>,
        forward_fill: bool,
    },
}

/// The hyperparameter grid a run sweeps over.
#[derive(Debug, Clone, PartialEq)]
pub struct LossGrid {
    pub families: Vec<LossFamily>,
    pub lambdas: Vec<f64>,
    pub ps: Vec<f64>,
}

impl LossGrid {
    pub fn len(&self) -> usize {
        self.families.len() * self.lambdas.len() * self.ps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Grid points in canonical order: family, then λ ascending, then p
    /// ascending — the order tie-breaks are resolved in.
    pub fn points(&self) -> Vec<(LossFamily, f64, f64)> {
        let mut out = Vec::with_capacity(self.len());
        for &family in &self.families {
            for &lambda in &self.lambdas {
                for &p in &self.ps {
                    out.push((family, lambda, p));
                }
            }
        }
        out
    }
}

pub const DEFAULT_WINDOWS: [u32; 5] = [22, 44, 63, 126, 252];
pub const DEFAULT_LAMBDAS: [f64; 9] = [0.8, 0.85, 0.9, 0.95, 0.96, 0.97, 0.98, 0.99, 1.0];
pub const DEFAULT_PS: [f64; 3] = [1.0, 1.5, 2.0];

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub data: DataConfig,
    /// Assets to run; empty means every price column in the frame.
    pub assets: Vec<String>,
    /// Forecast horizons 1..=k_max.
    pub k_max: usize,
    pub windows: Vec<u32>,
    pub validation: (NaiveDate, NaiveDate),
    pub testing: (NaiveDate, NaiveDate),
    pub output: PathBuf,
    pub grid: LossGrid,
    /// Full loss window and its split (`v = v0 + v1`).
    pub v: usize,
    pub v0: usize,
    pub v1: usize,
    /// Adaptive methods included in the hyperparameter grid.
    pub methods: Vec<String>,
    pub mdd_mode: MddMode,
    pub benchmarks: Vec<BenchmarkKind>,
    pub daa_cap: CapMode,
    pub cas_kstar: KStar,
    pub cas_asset: Option<String>,
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text =
            std::fs::read_to_string(path).map_err(|e| Error::io(path.display().to_string(), e))?;
        Self::parse_str(&text)
    }

    pub fn parse_str(text: &str) -> Result<Self> {
        let mut b = Builder::default();
        let mut section = String::new();
        for (i, raw) in text.lines().enumerate() {
            let line_no = i + 1;
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            if let Some(name) = line.strip_prefix('[') {
                let name = name
                    .strip_suffix(']')
                    .ok_or_else(|| at(line_no, "unterminated section header"))?
                    .trim();
                if !SECTIONS.contains(&name) {
                    return Err(at(
                        line_no,
                        format!("unknown section [{name}] (expected one of {SECTIONS:?})"),
                    ));
                }
                section = name.to_string();
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| at(line_no, "expected `key = value`"))?;
            let key = key.trim();
            let value = value.trim();
            if section.is_empty() {
                return Err(at(line_no, format!("key {key:?} appears before any section")));
            }
            b.set(&section, key, value, line_no)?;
        }
        b.finish()
    }
}

const SECTIONS: [&str; 7] = [
    "data",
    "experiment",
    "loss",
    "selection",
    "strategy",
    "daa",
    "cas",
];

fn at(line: usize, msg: impl std::fmt::Display) -> Error {
    Error::config(format!("line {line}: {msg}"))
}

#[derive(Default)]
struct Builder {
    seen: BTreeMap<String, usize>,
    frame: Option<PathBuf>,
    prices: BTreeMap<String, PathBuf>,
    curves: BTreeMap<CurveKind, PathBuf>,
    forward_fill: Option<bool>,
    assets: Option<Vec<String>>,
    k_max: Option<usize>,
    windows: Option<Vec<u32>>,
    validation: Option<(NaiveDate, NaiveDate)>,
    testing: Option<(NaiveDate, NaiveDate)>,
    output: Option<PathBuf>,
    families: Option<Vec<LossFamily>>,
    lambdas: Option<Vec<f64>>,
    ps: Option<Vec<f64>>,
    v: Option<usize>,
    v0: Option<usize>,
    v1: Option<usize>,
    methods: Option<Vec<String>>,
    mdd_mode: Option<MddMode>,
    benchmarks: Option<Vec<BenchmarkKind>>,
    daa_cap: Option<CapMode>,
    cas_kstar: Option<KStar>,
    cas_asset: Option<String>,
}

impl Builder {
    fn mark(&mut self, section: &str, key: &str, line: usize) -> Result<()> {
        let full = format!("{section}.{key}");
        if let Some(prev) = self.seen.insert(full.clone(), line) {
            return Err(at(
                line,
                format!("duplicate key {full} (first set on line {prev})"),
            ));
        }
        Ok(())
    }

    fn set(&mut self, section: &str, key: &str, value: &str, line: usize) -> Result<()> {
        self.mark(section, key, line)?;
        match (section, key) {
            ("data", "frame") => self.frame = Some(PathBuf::from(value)),
            ("data", "forward_fill") => self.forward_fill = Some(parse_bool(value, line)?),
            ("data", k) if k.starts_with("price.") => {
                let asset = &k["price.".len()..];
                if asset.is_empty() {
                    return Err(at(line, "price key needs an asset name: price.<asset>"));
                }
                self.prices.insert(asset.to_string(), PathBuf::from(value));
            }
            ("data", k) if k.starts_with("curve.") => {
                let name = &k["curve.".len()..];
                let kind = CurveKind::parse(name).ok_or_else(|| {
                    at(line, format!("unknown curve {name:?} (expected vix or yield)"))
                })?;
                self.curves.insert(kind, PathBuf::from(value));
            }
            ("experiment", "assets") => {
                self.assets = Some(value.split(',').map(|s| s.trim().to_string()).collect())
            }
            ("experiment", "k") => self.k_max = Some(parse_num(value, line)?),
            ("experiment", "windows") => self.windows = Some(parse_list(value, line)?),
            ("experiment", "validation") => self.validation = Some(parse_date_range(value, line)?),
            ("experiment", "testing") => self.testing = Some(parse_date_range(value, line)?),
            ("experiment", "output") => self.output = Some(PathBuf::from(value)),
            ("loss", "families") => {
                let fams = value
                    .split(',')
                    .map(|s| {
                        let s = s.trim();
                        LossFamily::parse(s).ok_or_else(|| {
                            at(line, format!("unknown loss family {s:?} (single or multi)"))
                        })
                    })
                    .collect::<Result<Vec<_>>>()?;
                self.families = Some(fams);
            }
            ("loss", "lambda") => self.lambdas = Some(parse_list(value, line)?),
            ("loss", "p") => self.ps = Some(parse_list(value, line)?),
            ("selection", "v") => self.v = Some(parse_num(value, line)?),
            ("selection", "v0") => self.v0 = Some(parse_num(value, line)?),
            ("selection", "v1") => self.v1 = Some(parse_num(value, line)?),
            ("selection", "methods") => {
                self.methods = Some(value.split(',').map(|s| s.trim().to_string()).collect())
            }
            ("strategy", "mdd") => {
                self.mdd_mode = Some(match value {
                    "cumulative" => MddMode::CumulativeWealth,
                    "per_period" => MddMode::PerPeriod,
                    other => {
                        return Err(at(
                            line,
                            format!(
                                "unknown mdd mode {other:?} (expected \"cumulative\" or \"per_period\")"
                            ),
                        ))
                    }
                })
            }
            ("strategy", "benchmarks") => {
                let kinds = value
                    .split(',')
                    .map(|s| BenchmarkKind::parse(s.trim()).map_err(|e| at(line, e.to_string())))
                    .collect::<Result<Vec<_>>>()?;
                self.benchmarks = Some(kinds);
            }
            ("daa", "cap") => {
                self.daa_cap = Some(CapMode::parse(value).map_err(|e| at(line, e.to_string()))?)
            }
            ("cas", "kstar") => {
                self.cas_kstar = Some(KStar::parse(value).map_err(|e| at(line, e.to_string()))?)
            }
            ("cas", "asset") => self.cas_asset = Some(value.to_string()),
            (s, k) => return Err(at(line, format!("unknown key {k:?} in section [{s}]"))),
        }
        Ok(())
    }

    fn finish(self) -> Result<ExperimentConfig> {
        let data = match (self.frame, self.prices.is_empty()) {
            (Some(_), false) => {
                return Err(Error::config(
                    "[data] gives both a frame file and raw price files; pick one",
                ))
            }
            (Some(frame), true) => {
                if !self.curves.is_empty() || self.forward_fill.is_some() {
                    return Err(Error::config(
                        "[data] frame input does not take curve files or forward_fill",
                    ));
                }
                DataConfig::Frame(frame)
            }
            (None, false) => DataConfig::Raw {
                prices: self.prices,
                curves: self.curves,
                forward_fill: self.forward_fill.unwrap_or(true),
            },
            (None, true) => {
                return Err(Error::config(
                    "[data] needs either frame = <file> or price.<asset> entries",
                ))
            }
        };
        let validation = self
            .validation
            .ok_or_else(|| Error::config("[experiment] validation range is required"))?;
        let testing = self
            .testing
            .ok_or_else(|| Error::config("[experiment] testing range is required"))?;
        if testing.0 <= validation.1 {
            return Err(Error::config(format!(
                "testing starts {} but validation runs through {}; ranges must not overlap",
                testing.0, validation.1
            )));
        }
        let output = self
            .output
            .ok_or_else(|| Error::config("[experiment] output directory is required"))?;

        let k_max = self.k_max.unwrap_or(5);
        if k_max == 0 {
            return Err(Error::config("k must be at least 1"));
        }
        let mut windows = self.windows.unwrap_or_else(|| DEFAULT_WINDOWS.to_vec());
        windows.sort_unstable();
        windows.dedup();
        if windows.is_empty() || windows[0] == 0 {
            return Err(Error::config("windows must be positive and non-empty"));
        }

        let v = self.v.unwrap_or(100);
        let v0 = self.v0.unwrap_or(50);
        let v1 = self.v1.unwrap_or(50);
        if v != v0 + v1 {
            return Err(Error::config(format!(
                "loss windows must satisfy v = v0 + v1, got v={v}, v0={v0}, v1={v1}"
            )));
        }
        if v0 == 0 || v1 == 0 {
            return Err(Error::config("v0 and v1 must be positive"));
        }

        let lambdas = self.lambdas.unwrap_or_else(|| DEFAULT_LAMBDAS.to_vec());
        if lambdas.iter().any(|&l| !(0.0 < l && l <= 1.0)) {
            return Err(Error::config("lambda values must lie in (0, 1]"));
        }
        let ps = self.ps.unwrap_or_else(|| DEFAULT_PS.to_vec());
        if ps.iter().any(|&p| p <= 0.0) {
            return Err(Error::config("p values must be positive"));
        }
        let families = self
            .families
            .unwrap_or_else(|| vec![LossFamily::Single, LossFamily::Multi]);

        let methods = self
            .methods
            .unwrap_or_else(|| vec!["dms".to_string(), "ae".to_string()]);
        for m in &methods {
            if !crate::selection::METHOD_NAMES.contains(&m.as_str()) {
                return Err(Error::config(format!(
                    "unknown selection method {m:?} (expected one of {:?})",
                    crate::selection::METHOD_NAMES
                )));
            }
        }

        Ok(ExperimentConfig {
            data,
            assets: self.assets.unwrap_or_default(),
            k_max,
            windows,
            validation,
            testing,
            output,
            grid: LossGrid {
                families,
                lambdas,
                ps,
            },
            v,
            v0,
            v1,
            methods,
            mdd_mode: self.mdd_mode.unwrap_or(MddMode::CumulativeWealth),
            benchmarks: self
                .benchmarks
                .unwrap_or_else(|| vec![BenchmarkKind::ConstantHalfEqual]),
            daa_cap: self.daa_cap.unwrap_or(CapMode::Capped),
            cas_kstar: self.cas_kstar.unwrap_or(KStar::SixK),
            cas_asset: self.cas_asset,
        })
    }
}

fn parse_bool(value: &str, line: usize) -> Result<bool> {
    match value {
        "true" => Ok(true),
        "false" => Ok(false),
        other => Err(at(line, format!("expected true/false, got {other:?}"))),
    }
}

fn parse_num<T: std::str::FromStr>(value: &str, line: usize) -> Result<T> {
    value
        .parse()
        .map_err(|_| at(line, format!("could not parse number {value:?}")))
}

fn parse_list<T: std::str::FromStr>(value: &str, line: usize) -> Result<Vec<T>> {
    value
        .split(',')
        .map(|s| {
            let s = s.trim();
            s.parse()
                .map_err(|_| at(line, format!("could not parse list entry {s:?}")))
        })
        .collect()
}

fn parse_date(value: &str, line: usize) -> Result<NaiveDate> {
    NaiveDate::parse_from_str(value, "%Y-%m-%d")
        .map_err(|_| at(line, format!("expected a YYYY-MM-DD date, got {value:?}")))
}

fn parse_date_range(value: &str, line: usize) -> Result<(NaiveDate, NaiveDate)> {
    let (a, b) = value
        .split_once("..")
        .ok_or_else(|| at(line, format!("expected <start>..<end>, got {value:?}")))?;
    let start = parse_date(a.trim(), line)?;
    let end = parse_date(b.trim(), line)?;
    if start > end {
        return Err(at(line, format!("range {value:?} runs backwards")));
    }
    Ok((start, end))
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = "\
[data]
price.eq = data/eq.csv

[experiment]
validation = 2014-07-01..2015-09-30
testing = 2015-10-01..2021-12-31
output = runs/out
";

    #[test]
    fn minimal_config_gets_documented_defaults() {
        let cfg = ExperimentConfig::parse_str(MINIMAL).unwrap();
        assert_eq!(cfg.k_max, 5);
        assert_eq!(cfg.windows, DEFAULT_WINDOWS);
        assert_eq!((cfg.v, cfg.v0, cfg.v1), (100, 50, 50));
        assert_eq!(cfg.grid.lambdas, DEFAULT_LAMBDAS);
        assert_eq!(cfg.grid.ps, DEFAULT_PS);
        assert_eq!(cfg.grid.families, vec![LossFamily::Single, LossFamily::Multi]);
        assert_eq!(cfg.methods, vec!["dms", "ae"]);
        assert_eq!(cfg.mdd_mode, MddMode::CumulativeWealth);
        assert_eq!(cfg.daa_cap, CapMode::Capped);
        assert_eq!(cfg.cas_kstar, KStar::SixK);
        match &cfg.data {
            DataConfig::Raw { prices, forward_fill, .. } => {
                assert_eq!(prices.len(), 1);
                assert!(*forward_fill);
            }
            other => panic!("expected raw data config, got {other:?}"),
        }
    }

    #[test]
    fn full_config_round_trips_every_field() {
        let text = "\
# full configuration
[data]
price.eq1 = a.csv
price.eq2 = b.csv
curve.vix = v.csv
curve.yield = y.csv
forward_fill = false

[experiment]
assets = eq1, eq2
k = 3
windows = 44,22,44
validation = 2014-07-01..2015-09-30
testing = 2015-10-01..2021-12-31
output = out

[loss]
families = single
lambda = 0.9,1.0
p = 2

[selection]
v = 40
v0 = 10
v1 = 30
methods = ae

[strategy]
mdd = per_period
benchmarks = constant_half_equal, always_hedged

[daa]
cap = uncapped

[cas]
kstar = 3k
asset = eq1
";
        let cfg = ExperimentConfig::parse_str(text).unwrap();
        assert_eq!(cfg.assets, vec!["eq1", "eq2"]);
        assert_eq!(cfg.k_max, 3);
        assert_eq!(cfg.windows, vec![22, 44], "sorted and deduplicated");
        assert_eq!(cfg.grid.families, vec![LossFamily::Single]);
        assert_eq!(cfg.grid.points().len(), 2);
        assert_eq!((cfg.v, cfg.v0, cfg.v1), (40, 10, 30));
        assert_eq!(cfg.methods, vec!["ae"]);
        assert_eq!(cfg.mdd_mode, MddMode::PerPeriod);
        assert_eq!(
            cfg.benchmarks,
            vec![BenchmarkKind::ConstantHalfEqual, BenchmarkKind::AlwaysHedged]
        );
        assert_eq!(cfg.daa_cap, CapMode::Uncapped);
        assert_eq!(cfg.cas_kstar, KStar::ThreeK);
        assert_eq!(cfg.cas_asset.as_deref(), Some("eq1"));
        match &cfg.data {
            DataConfig::Raw { prices, curves, forward_fill } => {
                assert_eq!(prices.len(), 2);
                assert_eq!(curves.len(), 2);
                assert!(!*forward_fill);
            }
            other => panic!("expected raw data config, got {other:?}"),
        }
    }

    #[test]
    fn unknown_keys_and_sections_fail_loud() {
        let err = ExperimentConfig::parse_str("[data]\nprize.eq = x.csv\n").unwrap_err();
        assert!(err.to_string().contains("line 2"), "{err}");
        assert!(err.to_string().contains("unknown key"), "{err}");

        let err = ExperimentConfig::parse_str("[dta]\n").unwrap_err();
        assert!(err.to_string().contains("unknown section"), "{err}");

        let err = ExperimentConfig::parse_str("stray = 1\n").unwrap_err();
        assert!(err.to_string().contains("before any section"), "{err}");
    }

    #[test]
    fn window_split_must_add_up() {
        let text = format!("{MINIMAL}[selection]\nv = 100\nv0 = 30\nv1 = 30\n");
        let err = ExperimentConfig::parse_str(&text).unwrap_err();
        assert!(err.to_string().contains("v = v0 + v1"), "{err}");
    }

    #[test]
    fn date_ranges_are_validated() {
        let bad = MINIMAL.replace("2014-07-01..2015-09-30", "2015-09-30..2014-07-01");
        let err = ExperimentConfig::parse_str(&bad).unwrap_err();
        assert!(err.to_string().contains("backwards"), "{err}");

        let bad = MINIMAL.replace("2014-07-01", "07/01/2014");
        assert!(ExperimentConfig::parse_str(&bad).is_err());

        // Overlapping validation and testing.
        let bad = MINIMAL.replace("2015-10-01", "2015-09-30");
        let err = ExperimentConfig::parse_str(&bad).unwrap_err();
        assert!(err.to_string().contains("must not overlap"), "{err}");
    }

    #[test]
    fn duplicate_keys_are_rejected() {
        let text = format!("{MINIMAL}[selection]\nv = 100\nv = 90\n");
        let err = ExperimentConfig::parse_str(&text).unwrap_err();
        assert!(err.to_string().contains("duplicate key"), "{err}");
    }

    #[test]
    fn frame_and_raw_inputs_are_mutually_exclusive() {
        let text = "\
[data]
frame = f.csv
price.eq = x.csv

[experiment]
validation = 2014-07-01..2015-09-30
testing = 2015-10-01..2021-12-31
output = out
";
        assert!(ExperimentConfig::parse_str(text).is_err());

        let text = text.replace("price.eq = x.csv\n", "");
        let cfg = ExperimentConfig::parse_str(&text).unwrap();
        assert_eq!(cfg.data, DataConfig::Frame(PathBuf::from("f.csv")));
    }

    #[test]
    fn grid_points_follow_canonical_order() {
        let grid = LossGrid {
            families: vec![LossFamily::Single, LossFamily::Multi],
            lambdas: vec![0.9, 1.0],
            ps: vec![1.0, 2.0],
        };
        let pts = grid.points();
        assert_eq!(pts.len(), 8);
        assert_eq!(pts[0], (LossFamily::Single, 0.9, 1.0));
        assert_eq!(pts[1], (LossFamily::Single, 0.9, 2.0));
        assert_eq!(pts[2], (LossFamily::Single, 1.0, 1.0));
        assert_eq!(pts[4], (LossFamily::Multi, 0.9, 1.0));
    }

    #[test]
    fn bad_method_names_are_rejected() {
        let text = format!("{MINIMAL}[selection]\nmethods = dms, aee\n");
        let err = ExperimentConfig::parse_str(&text).unwrap_err();
        assert!(err.to_string().contains("unknown selection method"), "{err}");
    }
}
