use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum LoadCase {
    LC12,
    LC21,
    LC23,
    LC51,
    #[serde(rename = "custom")]
    Custom,
}

impl fmt::Display for LoadCase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            LoadCase::LC12 => "LC12",
            LoadCase::LC21 => "LC21",
            LoadCase::LC23 => "LC23",
            LoadCase::LC51 => "LC51",
            LoadCase::Custom => "custom",
        };
        f.write_str(s)
    }
}

impl FromStr for LoadCase {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "LC12" => Ok(LoadCase::LC12),
            "LC21" => Ok(LoadCase::LC21),
            "LC23" => Ok(LoadCase::LC23),
            "LC51" => Ok(LoadCase::LC51),
            "custom" => Ok(LoadCase::Custom),
            _ => Err(Error::Config(format!("unknown load case `{s}`"))),
        }
    }
}

/// Support and water combination of a model variant.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Variant {
    ClampedDry,
    SoilWet,
}

impl Variant {
    pub fn name(self) -> &'static str {
        match self {
            Variant::ClampedDry => "clamped_dry",
            Variant::SoilWet => "soil_wet",
        }
    }
}

impl FromStr for Variant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "clamped_dry" => Ok(Variant::ClampedDry),
            "soil_wet" => Ok(Variant::SoilWet),
            _ => Err(Error::Config(format!("unknown variant `{s}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FileConfig {
    pub stations: PathBuf,
    pub py_curves: PathBuf,
    /// Prescribed yaw-bearing loads; the LC51 runner synthesizes wind loads
    /// when absent.
    pub yaw_loads: Option<PathBuf>,
}

impl Default for FileConfig {
    fn default() -> Self {
        Self {
            stations: "stations.csv".into(),
            py_curves: "py_curves.csv".into(),
            yaw_loads: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SiteConfig {
    pub swl_elevation: f64,
    pub mudline_elevation: f64,
}

impl Default for SiteConfig {
    fn default() -> Self {
        Self {
            swl_elevation: 0.0,
            mudline_elevation: -30.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DiscretizationConfig {
    pub n_elements: usize,
    /// Extra interior element boundaries; the mudline and still-water level
    /// are always boundaries.
    pub breaks: Vec<f64>,
    pub soil_nodes: usize,
    pub strips_per_body: usize,
}

impl Default for DiscretizationConfig {
    fn default() -> Self {
        Self {
            n_elements: 40,
            breaks: Vec::new(),
            soil_nodes: 61,
            strips_per_body: 4,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RnaConfig {
    pub mass: f64,
    /// Principal inertia about the centre of mass, global axes.
    pub inertia: [f64; 3],
    /// Centre of mass relative to the yaw bearing.
    pub cm_offset: [f64; 3],
}

impl Default for RnaConfig {
    fn default() -> Self {
        Self {
            mass: 676_723.0,
            inertia: [1.6e8, 1.1e8, 1.1e8],
            cm_offset: [-1.5, 0.0, 2.5],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SoilConfig {
    pub beta_s: f64,
    /// Dashpot reference frequency. Defaults to the wave peak frequency with
    /// waves, otherwise the first natural frequency.
    pub f_load: Option<f64>,
}

impl Default for SoilConfig {
    fn default() -> Self {
        Self {
            beta_s: 0.0,
            f_load: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SeaConfig {
    pub enabled: bool,
    pub significant_wave_height: f64,
    pub peak_period: f64,
    pub water_density: f64,
    pub added_mass: f64,
    pub drag: f64,
    pub n_components: usize,
    pub f_min: f64,
    pub f_max: f64,
}

impl Default for SeaConfig {
    fn default() -> Self {
        Self {
            enabled: true,
            significant_wave_height: 1.25,
            peak_period: 5.5,
            water_density: 1025.0,
            added_mass: 1.0,
            drag: 1.0,
            n_components: 400,
            f_min: 0.05,
            f_max: 1.5,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TargetConfig {
    pub mode: usize,
    pub zeta: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DampingConfig {
    pub targets: Vec<TargetConfig>,
}

impl Default for DampingConfig {
    fn default() -> Self {
        Self {
            targets: vec![TargetConfig {
                mode: 0,
                zeta: 0.01,
            }],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scheme {
    GeneralizedAlpha,
    Rk4,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StaticMethod {
    Equilibrium,
    TimeDomain,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct IntegratorConfig {
    pub scheme: Scheme,
    pub rho_inf: f64,
    pub dt: f64,
    pub newton_tol: f64,
    pub max_newton: usize,
    pub max_halvings: usize,
    pub output_rate: f64,
    pub duration: f64,
    pub transient: f64,
    pub static_method: StaticMethod,
    pub static_duration: f64,
}

impl Default for IntegratorConfig {
    fn default() -> Self {
        Self {
            scheme: Scheme::GeneralizedAlpha,
            rho_inf: 0.9,
            dt: 0.005,
            newton_tol: 1e-8,
            max_newton: 25,
            max_halvings: 8,
            output_rate: 20.0,
            duration: 3600.0,
            transient: 200.0,
            static_method: StaticMethod::Equilibrium,
            static_duration: 3000.0,
        }
    }
}

/// Synthetic yaw-bearing loads: a mean thrust plus rotor harmonics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct WindConfig {
    pub enabled: bool,
    pub mean_force: f64,
    pub mean_moment: f64,
    pub frequencies: Vec<f64>,
    pub amplitudes: Vec<f64>,
}

impl Default for WindConfig {
    fn default() -> Self {
        Self {
            enabled: true,
            mean_force: 1.0e6,
            mean_moment: 0.0,
            frequencies: vec![0.388, 0.775, 1.163],
            amplitudes: vec![3.0e4, 1.0e4, 5.0e3],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputConfig {
    pub channels: Vec<String>,
    /// Elevation of the fore-aft moment channel; defaults to the mudline.
    pub moment_elevation: Option<f64>,
    pub segment_length: usize,
    pub overlap: f64,
    pub bands: Vec<[f64; 2]>,
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self {
            channels: Vec::new(),
            moment_elevation: None,
            segment_length: 4096,
            overlap: 0.5,
            bands: vec![[0.2, 0.3], [1.0, 1.5]],
        }
    }
}

/// White-noise run for output-only identification in LC23.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct IdentificationConfig {
    pub enabled: bool,
    pub duration: f64,
    pub force_std: f64,
    pub nodes: usize,
    pub modes: usize,
    /// Half-width of each search band relative to the model frequency.
    pub band_width: f64,
    pub segment_length: usize,
}

impl Default for IdentificationConfig {
    fn default() -> Self {
        Self {
            enabled: false,
            duration: 600.0,
            force_std: 1.0e5,
            nodes: 13,
            modes: 4,
            band_width: 0.15,
            segment_length: 2048,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub case: LoadCase,
    pub seed: u64,
    /// Model variant used by the custom case.
    pub variant: Variant,
    pub files: FileConfig,
    pub site: SiteConfig,
    pub discretization: DiscretizationConfig,
    pub rna: RnaConfig,
    pub soil: SoilConfig,
    pub sea: SeaConfig,
    pub damping: DampingConfig,
    pub integrator: IntegratorConfig,
    pub wind: WindConfig,
    pub outputs: OutputConfig,
    pub identification: IdentificationConfig,
    /// Directory that relative paths resolve against.
    #[serde(skip)]
    pub base_dir: PathBuf,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            case: LoadCase::Custom,
            seed: 1,
            variant: Variant::SoilWet,
            files: FileConfig::default(),
            site: SiteConfig::default(),
            discretization: DiscretizationConfig::default(),
            rna: RnaConfig::default(),
            soil: SoilConfig::default(),
            sea: SeaConfig::default(),
            damping: DampingConfig::default(),
            integrator: IntegratorConfig::default(),
            wind: WindConfig::default(),
            outputs: OutputConfig::default(),
            identification: IdentificationConfig::default(),
            base_dir: PathBuf::from("."),
        }
    }
}

impl RunConfig {
    pub fn resolve(&self, p: &Path) -> PathBuf {
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            self.base_dir.join(p)
        }
    }

    pub fn water_depth(&self) -> f64 {
        self.site.swl_elevation - self.site.mudline_elevation
    }

    /// Checks values and that every referenced file exists.
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::Config(m.to_string()));
        if !(self.water_depth() > 0.0) {
            return bad("still-water level must lie above the mudline");
        }
        let d = &self.discretization;
        if d.n_elements == 0 || d.soil_nodes < 2 || d.strips_per_body == 0 {
            return bad("discretization counts must be positive and soil_nodes at least 2");
        }
        if !(self.rna.mass >= 0.0) || self.rna.inertia.iter().any(|i| !(*i >= 0.0)) {
            return bad("RNA mass and inertia must be non-negative");
        }
        if !(self.soil.beta_s >= 0.0) || self.soil.f_load.is_some_and(|f| !(f > 0.0)) {
            return bad("beta_s must be non-negative and f_load positive");
        }
        if self.damping.targets.len() > 2 {
            return bad("at most two damping targets");
        }
        let i = &self.integrator;
        if !(i.dt > 0.0
            && i.output_rate > 0.0
            && i.duration > 0.0
            && i.transient >= 0.0
            && i.transient < i.duration)
        {
            return bad("integrator needs dt > 0, output_rate > 0 and 0 <= transient < duration");
        }
        if !(i.rho_inf >= 0.0 && i.rho_inf <= 1.0) {
            return bad("rho_inf must lie in [0, 1]");
        }
        let ratio = 1.0 / (i.output_rate * i.dt);
        if (ratio - ratio.round()).abs() > 1e-9 * ratio || ratio.round() < 1.0 {
            return bad("output interval must be a whole multiple of dt");
        }
        if self.wind.frequencies.len() != self.wind.amplitudes.len() {
            return bad("wind frequencies and amplitudes differ in length");
        }
        let o = &self.outputs;
        if o.segment_length < 8 || !(o.overlap >= 0.0 && o.overlap < 1.0) {
            return bad("segment_length must be at least 8 and overlap in [0, 1)");
        }
        if o.bands.iter().any(|b| !(b[0] >= 0.0 && b[0] < b[1])) {
            return bad("bands need 0 <= lo < hi");
        }
        let id = &self.identification;
        if id.nodes < 2 || id.segment_length < 8 || !(id.band_width > 0.0 && id.band_width < 1.0) {
            return bad("identification needs at least two nodes and 0 < band_width < 1");
        }
        for p in self.input_files() {
            if !p.is_file() {
                return Err(Error::Config(format!("missing input file {}", p.display())));
            }
        }
        Ok(())
    }

    pub fn input_files(&self) -> Vec<PathBuf> {
        let f = &self.files;
        let mut out = vec![self.resolve(&f.stations), self.resolve(&f.py_curves)];
        out.extend(f.yaw_loads.as_ref().map(|p| self.resolve(p)));
        out
    }

    /// Canonical TOML form of the resolved configuration.
    pub fn canonical(&self) -> String {
        toml::to_string(self).expect("configuration serializes")
    }

    /// SHA-256 over the canonical configuration and the bytes of every
    /// input file, hex encoded.
    pub fn digest(&self) -> Result<String> {
        let mut h = Sha256::new();
        h.update(self.canonical().as_bytes());
        for p in self.input_files() {
            let bytes = fs::read(&p).map_err(|e| Error::io(&p, e))?;
            h.update((bytes.len() as u64).to_le_bytes());
            h.update(&bytes);
        }
        Ok(h.finalize().iter().map(|b| format!("{b:02x}")).collect())
    }
}

/// Reads a configuration file, applies `key=value` overrides (dotted keys,
/// TOML values; bare words are taken as strings) and validates the result.
pub fn parse_config(path: &Path, overrides: &[String]) -> Result<RunConfig> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let source = path.display().to_string();
    let mut cfg = parse_str(&text, &source, overrides)?;
    cfg.base_dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
    if cfg.base_dir.as_os_str().is_empty() {
        cfg.base_dir = PathBuf::from(".");
    }
    cfg.validate()?;
    Ok(cfg)
}

/// Parses configuration text without touching the file system.
pub fn parse_str(text: &str, source: &str, overrides: &[String]) -> Result<RunConfig> {
    let cfg: RunConfig = toml::from_str(text).map_err(|e| toml_error(text, source, &e))?;
    if overrides.is_empty() {
        return Ok(cfg);
    }
    let mut table: toml::Table = toml::from_str(text).map_err(|e| toml_error(text, source, &e))?;
    for o in overrides {
        apply_override(&mut table, o)?;
    }
    let merged = toml::to_string(&table).map_err(|e| Error::Config(e.to_string()))?;
    toml::from_str(&merged).map_err(|e| Error::Config(format!("after overrides: {}", e.message())))
}

fn toml_error(text: &str, source: &str, e: &toml::de::Error) -> Error {
    let line = e
        .span()
        .map(|s| text[..s.start.min(text.len())].matches('\n').count() as u64 + 1)
        .unwrap_or(0);
    Error::Parse {
        path: source.to_string(),
        line,
        message: e.message().to_string(),
    }
}

fn apply_override(table: &mut toml::Table, spec: &str) -> Result<()> {
    let (key, raw) = spec
        .split_once('=')
        .ok_or_else(|| Error::Config(format!("override `{spec}` is not key=value")))?;
    let (key, raw) = (key.trim(), raw.trim());
    let value = toml::from_str::<toml::Table>(&format!("v = {raw}"))
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| toml::Value::String(raw.to_string()));
    let parts: Vec<&str> = key.split('.').collect();
    if parts.iter().any(|p| p.is_empty()) {
        return Err(Error::Config(format!("bad override key `{key}`")));
    }
    let mut t = table;
    for p in &parts[..parts.len() - 1] {
        let entry = t
            .entry(p.to_string())
            .or_insert_with(|| toml::Value::Table(toml::Table::new()));
        t = entry
            .as_table_mut()
            .ok_or_else(|| Error::Config(format!("override `{key}`: `{p}` is not a section")))?;
    }
    t.insert(parts[parts.len() - 1].to_string(), value);
    Ok(())
}
