//! TOML scenario files.
//!
//! One table per block: `plant`, `reference`, `filter`, `law`, `sim`,
//! `output` and optionally `compare`. Only `plant.a`, `plant.b` and
//! `reference.schedule` are required; every gain falls back to the
//! wing-rock defaults.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use ars_core::system::synthesize_baseline;
use ars_core::{
    FilterGains, LawKind, LawParams, Mat, ReferenceSchedule, Regressor, Scenario, ThetaJump, ThetaSchedule,
    UncertainPlant,
};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

/// Config that failed to parse or describes an invalid scenario.
#[derive(Debug)]
pub struct ConfigError {
    pub path: PathBuf,
    pub message: String,
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "invalid config {}: {}", self.path.display(), self.message)
    }
}

impl std::error::Error for ConfigError {}

/// A scalar, a vector or a matrix given as rows.
///
/// Where a square matrix is expected a scalar means `s·I` and a vector
/// means a diagonal; where a column is expected a vector is that column.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum MatrixValue {
    Scalar(f64),
    Vector(Vec<f64>),
    Rows(Vec<Vec<f64>>),
}

impl MatrixValue {
    fn from_rows(field: &str, rows: &[Vec<f64>]) -> Result<Mat, String> {
        let c = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != c) {
            return Err(format!("{field}: rows have different lengths"));
        }
        Mat::new(rows.len(), c, rows.concat()).map_err(|e| format!("{field}: {e}"))
    }

    /// Square `n×n` matrix.
    pub fn square(&self, field: &str, n: usize) -> Result<Mat, String> {
        let m = match self {
            MatrixValue::Scalar(s) => Mat::identity(n).scale(*s),
            MatrixValue::Vector(v) => Mat::diag(v),
            MatrixValue::Rows(r) => Self::from_rows(field, r)?,
        };
        if m.shape() != (n, n) {
            return Err(format!("{field}: expected {n}x{n}, got {}x{}", m.rows(), m.cols()));
        }
        Ok(m)
    }

    /// Matrix of any shape; a vector is a column.
    pub fn general(&self, field: &str) -> Result<Mat, String> {
        match self {
            MatrixValue::Scalar(s) => Ok(Mat::diag(&[*s])),
            MatrixValue::Vector(v) => Mat::new(v.len(), 1, v.clone()).map_err(|e| format!("{field}: {e}")),
            MatrixValue::Rows(r) => Self::from_rows(field, r),
        }
    }

    /// Matrix of a fixed shape; a vector fills a single column.
    pub fn shaped(&self, field: &str, rows: usize, cols: usize) -> Result<Mat, String> {
        let m = self.general(field)?;
        if m.shape() != (rows, cols) {
            return Err(format!(
                "{field}: expected {rows}x{cols}, got {}x{}",
                m.rows(),
                m.cols()
            ));
        }
        Ok(m)
    }

    /// Flat vector of length `len`; a scalar is broadcast.
    pub fn vector(&self, field: &str, len: usize) -> Result<Vec<f64>, String> {
        let v = match self {
            MatrixValue::Scalar(s) => vec![*s; len],
            MatrixValue::Vector(v) => v.clone(),
            MatrixValue::Rows(r) => r.concat(),
        };
        if v.len() != len {
            return Err(format!("{field}: expected {len} values, got {}", v.len()));
        }
        Ok(v)
    }
}

/// Law name checked against the known laws while parsing.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LawName(pub LawKind);

impl Serialize for LawName {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(self.0.name())
    }
}

impl<'de> Deserialize<'de> for LawName {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        LawKind::from_str(&s).map(LawName).map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub plant: PlantConfig,
    pub reference: ReferenceConfig,
    #[serde(default)]
    pub filter: FilterConfig,
    #[serde(default)]
    pub law: LawConfig,
    #[serde(default)]
    pub sim: SimConfig,
    #[serde(default)]
    pub output: OutputConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub compare: Option<CompareConfig>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlantConfig {
    pub a: MatrixValue,
    pub b: MatrixValue,
    #[serde(default = "default_regressor")]
    pub regressor: String,
    /// True parameters; zero when omitted.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub theta0: Option<MatrixValue>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub x0: Option<Vec<f64>>,
    #[serde(default)]
    pub jumps: Vec<JumpConfig>,
}

fn default_regressor() -> String {
    Regressor::WingRock.name().to_string()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct JumpConfig {
    pub t: f64,
    pub delta: MatrixValue,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReferenceConfig {
    pub schedule: Vec<StepConfig>,
    #[serde(default = "default_q_lq")]
    pub q_lq: MatrixValue,
    #[serde(default = "default_r_lq")]
    pub r_lq: MatrixValue,
    #[serde(default = "default_q")]
    pub q: MatrixValue,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub x_ref0: Option<Vec<f64>>,
}

fn default_q_lq() -> MatrixValue {
    MatrixValue::Vector(vec![2800.0, 1.0])
}

fn default_r_lq() -> MatrixValue {
    MatrixValue::Scalar(100.0)
}

fn default_q() -> MatrixValue {
    MatrixValue::Vector(vec![100.0, 10.0])
}

/// Piecewise-constant reference value starting at `t`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StepConfig {
    pub t: f64,
    pub r: MatrixValue,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FilterConfig {
    pub k: f64,
    pub l: f64,
    pub sigma: f64,
    pub s: f64,
}

impl Default for FilterConfig {
    fn default() -> Self {
        let g = FilterGains::default();
        Self {
            k: g.k,
            l: g.l,
            sigma: g.sigma,
            s: g.scale,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LawConfig {
    pub name: LawName,
    pub gamma1: MatrixValue,
    pub gamma2_0: f64,
    pub lambda1: f64,
    pub lambda2: f64,
    pub gamma2_cap: f64,
    pub sigma_mod: f64,
    pub k_l: f64,
    pub k_ll: f64,
    pub k_sw: f64,
    pub latch_rel: f64,
    pub l_m: f64,
    pub l_max: f64,
    pub vartheta: f64,
    pub l0: f64,
    pub lambda_lb: f64,
    pub lambda_ub: f64,
    pub gamma2_fe: f64,
    pub gamma2_df: f64,
    pub gamma2_el: f64,
    pub l_df: f64,
    pub l_sw: f64,
    pub eps_div: f64,
    pub eps_rank: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub theta_hat0: Option<MatrixValue>,
}

impl Default for LawConfig {
    fn default() -> Self {
        let p = LawParams::wing_rock(1);
        Self {
            name: LawName(LawKind::Proposed),
            gamma1: MatrixValue::Scalar(500.0),
            gamma2_0: p.gamma2_0,
            lambda1: p.lambda1,
            lambda2: p.lambda2,
            gamma2_cap: p.gamma2_cap,
            sigma_mod: p.sigma_mod,
            k_l: p.k_l,
            k_ll: p.k_ll,
            k_sw: p.k_sw,
            latch_rel: p.latch_rel,
            l_m: p.l_m,
            l_max: p.l_max,
            vartheta: p.vartheta,
            l0: p.l0,
            lambda_lb: p.lambda_lb,
            lambda_ub: p.lambda_ub,
            gamma2_fe: p.gamma2_fe,
            gamma2_df: p.gamma2_df,
            gamma2_el: p.gamma2_el,
            l_df: p.l_df,
            l_sw: p.l_sw,
            eps_div: p.eps_div,
            eps_rank: p.eps_rank,
            theta_hat0: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimConfig {
    pub t0: f64,
    pub t_end: f64,
    pub h: f64,
    pub decimation: usize,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            t0: 0.0,
            t_end: 24.0,
            h: 1e-4,
            decimation: 100,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputConfig {
    pub dir: PathBuf,
    /// File stem; the law name when empty.
    pub name: String,
    pub csv: bool,
    pub json: bool,
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self {
            dir: PathBuf::from("out"),
            name: String::new(),
            csv: true,
            json: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CompareConfig {
    pub laws: Vec<LawName>,
}

impl ScenarioConfig {
    pub fn parse(text: &str, path: &Path) -> Result<Self, ConfigError> {
        toml::from_str(text).map_err(|e| ConfigError {
            path: path.to_path_buf(),
            message: e.to_string(),
        })
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|e| ConfigError {
            path: path.to_path_buf(),
            message: e.to_string(),
        })?;
        Self::parse(&text, path)
    }

    #[cfg(test)]
    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config is serializable")
    }

    /// Builds and validates the scenario.
    pub fn scenario(&self) -> Result<Scenario, String> {
        let pl = &self.plant;
        let a = pl.a.general("plant.a")?;
        let n = a.rows();
        let b = pl.b.general("plant.b")?;
        let m = b.cols();
        let regressor = Regressor::from_name(&pl.regressor)
            .ok_or_else(|| format!("plant.regressor: unknown regressor `{}`", pl.regressor))?;
        let p = regressor.dim(n);
        let theta0 = match &pl.theta0 {
            Some(t) => t.shaped("plant.theta0", p, m)?,
            None => Mat::zeros(p, m),
        };
        let jumps = pl
            .jumps
            .iter()
            .enumerate()
            .map(|(i, j)| {
                Ok(ThetaJump {
                    t: j.t,
                    delta: j.delta.shaped(&format!("plant.jumps[{i}].delta"), p, m)?,
                })
            })
            .collect::<Result<Vec<_>, String>>()?;
        let sim = &self.sim;
        let theta = ThetaSchedule::new(theta0, jumps, sim.t0).map_err(|e| format!("plant.jumps: {e}"))?;
        let x0 = pl.x0.clone().unwrap_or_else(|| vec![0.0; n]);
        let plant =
            UncertainPlant::new(a.clone(), b.clone(), regressor, theta, x0).map_err(|e| format!("plant: {e}"))?;

        let rf = &self.reference;
        if rf.schedule.is_empty() {
            return Err("reference.schedule: at least one step is required".into());
        }
        let steps = rf
            .schedule
            .iter()
            .enumerate()
            .map(|(i, s)| Ok((s.t, s.r.vector(&format!("reference.schedule[{i}].r"), m)?)))
            .collect::<Result<Vec<_>, String>>()?;
        let schedule = ReferenceSchedule::new(steps).map_err(|e| format!("reference.schedule: {e}"))?;
        let q_lq = rf.q_lq.square("reference.q_lq", n)?;
        let r_lq = rf.r_lq.square("reference.r_lq", m)?;
        let q = rf.q.square("reference.q", n)?;
        let x_ref0 = rf.x_ref0.clone().unwrap_or_else(|| vec![0.0; n]);
        if x_ref0.len() != n {
            return Err(format!("reference.x_ref0: expected {n} values"));
        }
        let reference = synthesize_baseline(&a, &b, &q_lq, &r_lq, &q)
            .map_err(|e| format!("reference: {e}"))?
            .with_schedule(schedule)
            .with_initial_state(x_ref0);

        let lw = &self.law;
        let params = LawParams {
            gamma1: lw.gamma1.square("law.gamma1", p)?,
            gamma2_0: lw.gamma2_0,
            lambda1: lw.lambda1,
            lambda2: lw.lambda2,
            gamma2_cap: lw.gamma2_cap,
            sigma_mod: lw.sigma_mod,
            k_l: lw.k_l,
            k_ll: lw.k_ll,
            k_sw: lw.k_sw,
            latch_rel: lw.latch_rel,
            l_m: lw.l_m,
            l_max: lw.l_max,
            vartheta: lw.vartheta,
            l0: lw.l0,
            lambda_lb: lw.lambda_lb,
            lambda_ub: lw.lambda_ub,
            gamma2_fe: lw.gamma2_fe,
            gamma2_df: lw.gamma2_df,
            gamma2_el: lw.gamma2_el,
            l_df: lw.l_df,
            l_sw: lw.l_sw,
            eps_div: lw.eps_div,
            eps_rank: lw.eps_rank,
        };
        let theta_hat0 = match &lw.theta_hat0 {
            Some(t) => t.shaped("law.theta_hat0", p, m)?,
            None => Mat::zeros(p, m),
        };
        let f = &self.filter;
        let sc = Scenario {
            plant,
            reference,
            filter: FilterGains {
                k: f.k,
                l: f.l,
                sigma: f.sigma,
                scale: f.s,
            },
            law: lw.name.0,
            params,
            theta_hat0,
            t0: sim.t0,
            t_end: sim.t_end,
            step: sim.h,
            decimation: sim.decimation,
        };
        sc.validate().map_err(|e| e.to_string())?;
        Ok(sc)
    }

    /// Like [`Self::scenario`], tagging failures with the config path.
    pub fn scenario_at(&self, path: &Path) -> Result<Scenario, ConfigError> {
        self.scenario().map_err(|message| ConfigError {
            path: path.to_path_buf(),
            message,
        })
    }

    /// Laws for `compare`: the `[compare]` table, else every law.
    pub fn compare_laws(&self) -> Vec<LawKind> {
        match &self.compare {
            Some(c) => c.laws.iter().map(|l| l.0).collect(),
            None => LawKind::ALL.to_vec(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"
[plant]
a = [[0, 1], [0, 0]]
b = [[0], [1]]

[reference]
schedule = [{ t = 0, r = 1 }]
"#;

    fn parse(text: &str) -> Result<ScenarioConfig, ConfigError> {
        ScenarioConfig::parse(text, Path::new("test.toml"))
    }

    #[test]
    fn defaults_fill_omitted_blocks() {
        let c = parse(MINIMAL).unwrap();
        assert_eq!(c.law.lambda1, 1100.0);
        assert_eq!(c.law.lambda2, 450.0);
        assert_eq!(c.law.gamma2_0, 1.0);
        assert_eq!(c.law.gamma1, MatrixValue::Scalar(500.0));
        assert_eq!(c.law.k_sw, 50000.0);
        assert_eq!(c.law.gamma2_el, 1000.0);
        assert_eq!((c.filter.k, c.filter.l, c.filter.sigma), (10.0, 10.0, 5.0));
        let sc = c.scenario().unwrap();
        assert_eq!(sc.params.gamma1, Mat::identity(5).scale(500.0));
        assert_eq!(sc.reference.q, Mat::diag(&[100.0, 10.0]));
        assert_eq!(sc.theta_hat0, Mat::zeros(5, 1));
        assert_eq!(sc.law, LawKind::Proposed);
    }

    #[test]
    fn unknown_law_rejected_at_parse() {
        let text = format!("{MINIMAL}\n[law]\nname = \"bogus\"\n");
        let e = parse(&text).unwrap_err();
        assert!(e.message.contains("bogus"), "{e}");
    }

    #[test]
    fn missing_b_names_field() {
        let text = MINIMAL.replace("b = [[0], [1]]\n", "");
        let e = parse(&text).unwrap_err();
        assert!(e.message.contains("`b`"), "{e}");
    }

    #[test]
    fn missing_schedule_names_field() {
        let text = MINIMAL.replace("schedule = [{ t = 0, r = 1 }]\n", "");
        let e = parse(&text).unwrap_err();
        assert!(e.message.contains("schedule"), "{e}");
    }

    #[test]
    fn shape_errors_name_the_field() {
        let text = MINIMAL.replace("[reference]", "theta0 = [1, 2]\n\n[reference]");
        let e = parse(&text).unwrap().scenario().unwrap_err();
        assert!(e.contains("plant.theta0"), "{e}");
    }

    #[test]
    fn round_trip() {
        let c = parse(MINIMAL).unwrap();
        let again = parse(&c.to_toml()).unwrap();
        assert_eq!(c, again);
    }

    #[test]
    fn matrix_spec_forms() {
        assert_eq!(
            MatrixValue::Scalar(2.0).square("x", 2).unwrap(),
            Mat::identity(2).scale(2.0)
        );
        assert_eq!(
            MatrixValue::Vector(vec![1.0, 2.0]).square("x", 2).unwrap(),
            Mat::diag(&[1.0, 2.0])
        );
        assert_eq!(
            MatrixValue::Vector(vec![1.0, 2.0]).general("x").unwrap().shape(),
            (2, 1)
        );
        assert!(MatrixValue::Rows(vec![vec![1.0], vec![1.0, 2.0]]).general("x").is_err());
        assert_eq!(MatrixValue::Scalar(3.0).vector("x", 2).unwrap(), vec![3.0, 3.0]);
    }
}
