//! Run configuration: a JSON file merged with command-line overrides.

use std::fmt;
use std::path::Path;

use floquet_core::modular::mod_inv;
use serde::{Deserialize, Serialize};

/// A configuration problem, anchored to the file position or flag it came from.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfigError {
    pub at: String,
    pub message: String,
}

impl ConfigError {
    pub fn new(at: impl Into<String>, message: impl Into<String>) -> Self {
        ConfigError { at: at.into(), message: message.into() }
    }
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.at, self.message)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LatticeKind {
    Torus,
    Planar,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase", deny_unknown_fields)]
pub enum DefectSpec {
    /// Zigzag path of odd length starting in cell `(i, j)`.
    Zigzag { i: i64, j: i64, len: usize },
    /// Line whose removed checks all have the given color.
    Removed { color: u8, len: usize },
    /// Explicit vertex list.
    Path(Vec<usize>),
}

impl DefectSpec {
    /// `i,j,len`, `zigzag:i,j,len`, `removed:color[,len]` or `path:v0,v1,…`.
    pub fn parse(text: &str) -> Result<Self, String> {
        let (kind, body) = text.split_once(':').unwrap_or(("zigzag", text));
        let nums = |s: &str| -> Result<Vec<i64>, String> {
            s.split(',').map(|t| t.trim().parse::<i64>().map_err(|_| format!("bad number {t:?}"))).collect()
        };
        let v = nums(body)?;
        match (kind, v.as_slice()) {
            ("zigzag", &[i, j, len]) if len > 0 => Ok(DefectSpec::Zigzag { i, j, len: len as usize }),
            ("removed", &[c]) if (0..3).contains(&c) => Ok(DefectSpec::Removed { color: c as u8, len: 7 }),
            ("removed", &[c, len]) if (0..3).contains(&c) && len > 0 => Ok(DefectSpec::Removed { color: c as u8, len: len as usize }),
            ("path", vs) if vs.iter().all(|&x| x >= 0) => Ok(DefectSpec::Path(vs.iter().map(|&x| x as usize).collect())),
            _ => Err(format!("cannot read defect {text:?}")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub lattice: LatticeKind,
    #[serde(rename = "L")]
    pub l: Option<usize>,
    pub rows: usize,
    pub cols: usize,
    #[serde(rename = "N")]
    pub n: u32,
    pub p_aut: Option<u32>,
    pub q_aut: Option<u32>,
    pub defects: Vec<DefectSpec>,
    /// `three-round`, `six-round`, `standard`, or `init | period` text.
    pub schedule: String,
    pub d: usize,
    pub periods: usize,
    pub p: Vec<f64>,
    pub trials: usize,
    pub seed: u64,
    pub out: Option<String>,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            lattice: LatticeKind::Torus,
            l: None,
            rows: 9,
            cols: 9,
            n: 2,
            p_aut: None,
            q_aut: None,
            defects: Vec::new(),
            schedule: "three-round".into(),
            d: 1,
            periods: 3,
            p: vec![0.001, 0.005, 0.01, 0.02, 0.05],
            trials: 1000,
            seed: 0,
            out: None,
        }
    }
}

/// Flag values; `None` leaves the file (or default) value alone.
#[derive(Debug, Default, Clone)]
pub struct Overrides {
    pub lattice: Option<LatticeKind>,
    pub l: Option<usize>,
    pub rows: Option<usize>,
    pub cols: Option<usize>,
    pub n: Option<u32>,
    pub p_aut: Option<u32>,
    pub q_aut: Option<u32>,
    pub defects: Vec<String>,
    pub removed: Option<u8>,
    pub schedule: Option<String>,
    pub d: Option<usize>,
    pub periods: Option<usize>,
    pub p: Option<String>,
    pub trials: Option<usize>,
    pub seed: Option<u64>,
    pub out: Option<String>,
}

pub fn load(path: Option<&Path>) -> Result<RunConfig, ConfigError> {
    let Some(path) = path else { return Ok(RunConfig::default()) };
    let name = path.display().to_string();
    let text = std::fs::read_to_string(path).map_err(|e| ConfigError::new(&name, e.to_string()))?;
    serde_json::from_str(&text).map_err(|e| {
        let msg = e.to_string();
        let msg = msg.split(" at line ").next().unwrap_or(&msg).to_string();
        ConfigError::new(format!("{name}:{}:{}", e.line(), e.column()), msg)
    })
}

impl RunConfig {
    pub fn apply(&mut self, o: &Overrides) -> Result<(), ConfigError> {
        macro_rules! set {
            ($($f:ident),*) => { $( if let Some(v) = o.$f.clone() { self.$f = v; } )* };
        }
        set!(lattice, rows, cols, n, schedule, d, periods, trials, seed);
        if o.l.is_some() {
            self.l = o.l;
        }
        if o.p_aut.is_some() {
            self.p_aut = o.p_aut;
        }
        if o.q_aut.is_some() {
            self.q_aut = o.q_aut;
        }
        if o.out.is_some() {
            self.out = o.out.clone();
        }
        if let Some(grid) = &o.p {
            self.p = grid
                .split(',')
                .map(|t| t.trim().parse::<f64>().map_err(|_| ConfigError::new("--p", format!("bad probability {t:?}"))))
                .collect::<Result<_, _>>()?;
        }
        if !o.defects.is_empty() || o.removed.is_some() {
            self.defects =
                o.defects.iter().map(|t| DefectSpec::parse(t).map_err(|m| ConfigError::new("--defect", m))).collect::<Result<_, _>>()?;
            if let Some(color) = o.removed {
                self.defects.push(DefectSpec::Removed { color, len: 7 });
            }
        }
        Ok(())
    }

    /// Fills derived fields and rejects anything that cannot run.
    pub fn resolve(mut self) -> Result<Self, ConfigError> {
        if self.n < 2 {
            return Err(ConfigError::new("N", format!("N must be at least 2, got {}", self.n)));
        }
        let n = self.n as u64;
        let (p, q) = match (self.p_aut, self.q_aut) {
            (Some(p), Some(q)) => (p, q),
            (Some(p), None) => {
                (p, mod_inv(p as u64 % n, n).ok_or_else(|| ConfigError::new("p_aut", format!("{p} is not a unit mod {n}")))? as u32)
            }
            (None, Some(q)) => {
                (mod_inv(q as u64 % n, n).ok_or_else(|| ConfigError::new("q_aut", format!("{q} is not a unit mod {n}")))? as u32, q)
            }
            (None, None) => (self.n - 1, self.n - 1),
        };
        if (p as u64 * q as u64) % n != 1 {
            return Err(ConfigError::new("p_aut", format!("p·q = {p}·{q} is not 1 mod {n}")));
        }
        self.p_aut = Some(p);
        self.q_aut = Some(q);
        if self.lattice == LatticeKind::Planar && (self.rows == 0 || self.cols == 0) {
            return Err(ConfigError::new("rows", "planar patch needs positive rows and cols"));
        }
        if self.l == Some(0) {
            return Err(ConfigError::new("L", "L must be positive"));
        }
        if self.d == 0 || self.periods == 0 {
            return Err(ConfigError::new("periods", "d and periods must be at least 1"));
        }
        if self.trials == 0 {
            return Err(ConfigError::new("trials", "need at least one trial"));
        }
        if let Some(bad) = self.p.iter().find(|p| !(0.0..1.0).contains(*p)) {
            return Err(ConfigError::new("p", format!("probability {bad} outside [0, 1)")));
        }
        if self.p.is_empty() {
            return Err(ConfigError::new("p", "empty probability grid"));
        }
        match self.schedule.as_str() {
            "three-round" | "six-round" | "standard" => {}
            text => {
                floquet_core::floquet::Schedule::parse(text).map_err(|e| ConfigError::new("schedule", e.to_string()))?;
            }
        }
        Ok(self)
    }
}
