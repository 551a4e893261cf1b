//! Plain-text run configuration.
//!
//! ```text
//! # comment
//! input = noisy.pfm
//! gap_tolerance = 1e-5
//!
//! [filter]
//! kernel = gaussian
//! sigmas = 128, 2
//! eta = 0.2
//! ```
//!
//! Top-level keys come first; each `[filter]` header opens a new filter and
//! the keys after it belong to that filter. Unknown keys, repeated keys and
//! malformed values are errors.

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::Serialize;
use stripefree::kernels::KernelSpec;
use stripefree::noise::Marginal;
use stripefree::solver::{Prior, SolverConfig};

use crate::error::{CliError, CliResult};
use crate::image_io::ImageFormat;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Command {
    Denoise,
    Simulate,
    Bounds,
    Sweep,
}

impl fmt::Display for Command {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Command::Denoise => "denoise",
            Command::Simulate => "simulate",
            Command::Bounds => "bounds",
            Command::Sweep => "sweep",
        })
    }
}

/// Filter shape as written in the configuration.
#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "kernel", rename_all = "snake_case")]
pub enum KernelConfig {
    Dirac { amplitude: f64 },
    Gaussian { sigmas: Vec<f64>, amplitude: f64 },
    Box { half_extents: Vec<usize>, amplitude: f64 },
    PowerDecay { exponent: f64, cutoff: f64, amplitude: f64 },
    File { path: PathBuf },
}

impl KernelConfig {
    /// Parametric kernels as a core spec; `None` for file kernels.
    pub fn spec(&self) -> Option<KernelSpec<f64>> {
        Some(match self {
            KernelConfig::Dirac { amplitude } => KernelSpec::Dirac { amplitude: *amplitude },
            KernelConfig::Gaussian { sigmas, amplitude } => KernelSpec::Gaussian {
                sigmas: sigmas.clone(),
                amplitude: *amplitude,
            },
            KernelConfig::Box { half_extents, amplitude } => KernelSpec::IndicatorBox {
                half_extents: half_extents.clone(),
                amplitude: *amplitude,
            },
            KernelConfig::PowerDecay {
                exponent,
                cutoff,
                amplitude,
            } => KernelSpec::PowerDecay {
                exponent: *exponent,
                cutoff: *cutoff,
                amplitude: *amplitude,
            },
            KernelConfig::File { .. } => return None,
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FilterConfig {
    #[serde(flatten)]
    pub kernel: KernelConfig,
    pub eta: Option<f64>,
    pub alpha: Option<f64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SolverSettings {
    pub max_iterations: usize,
    pub gap_tolerance: f64,
    pub accelerate: bool,
    pub step_ratio: f64,
}

impl SolverSettings {
    pub fn to_core(self) -> SolverConfig<f64> {
        SolverConfig {
            max_iterations: self.max_iterations,
            gap_tolerance: self.gap_tolerance,
            accelerate: self.accelerate,
            step_ratio: self.step_ratio,
        }
    }
}

impl Default for SolverSettings {
    fn default() -> Self {
        let c = SolverConfig::<f64>::cli();
        Self {
            max_iterations: c.max_iterations,
            gap_tolerance: c.gap_tolerance,
            accelerate: c.accelerate,
            step_ratio: c.step_ratio,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum PhantomKind {
    /// Disc, rectangle, ramp and a smooth random texture.
    Shapes,
    /// Constant image.
    Flat,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SimulateSettings {
    pub dims: Option<Vec<usize>>,
    pub phantom: PhantomKind,
    pub texture: f64,
    #[serde(serialize_with = "serialize_marginal")]
    pub marginal: Marginal,
    /// Rescale the noise so `||b||_2` is this fraction of `||u − mean(u)||_2`.
    pub noise_fraction: Option<f64>,
}

fn serialize_marginal<S: serde::Serializer>(m: &Marginal, s: S) -> Result<S::Ok, S::Error> {
    use serde::ser::SerializeMap;
    let mut map = s.serialize_map(Some(2))?;
    match *m {
        Marginal::Gaussian { sigma } => {
            map.serialize_entry("law", "gaussian")?;
            map.serialize_entry("noise_sigma", &sigma)?;
        }
        Marginal::Uniform { half_width } => {
            map.serialize_entry("law", "uniform")?;
            map.serialize_entry("half_width", &half_width)?;
        }
        Marginal::BernoulliUniform { gamma } => {
            map.serialize_entry("law", "bernoulli_uniform")?;
            map.serialize_entry("gamma", &gamma)?;
        }
    }
    map.end()
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BoundsSettings {
    pub gammas: Vec<f64>,
    pub sigma1s: Vec<f64>,
    pub sigma2: f64,
    pub etas: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SweepSettings {
    pub alpha_min: Option<f64>,
    pub alpha_max: Option<f64>,
    /// Number of log-spaced curve points; zero skips the curve.
    pub alpha_count: usize,
    pub dichotomy_evaluations: usize,
}

/// Fully resolved settings of one run.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RunConfig {
    pub command: Command,
    pub input: Option<PathBuf>,
    pub reference: Option<PathBuf>,
    pub output: PathBuf,
    pub output_format: Option<ImageFormat>,
    pub report: Option<PathBuf>,
    pub seed: u64,
    pub multiplicative: bool,
    #[serde(serialize_with = "serialize_prior")]
    pub prior: Prior,
    pub solver: SolverSettings,
    pub filters: Vec<FilterConfig>,
    pub simulate: SimulateSettings,
    pub bounds: BoundsSettings,
    pub sweep: SweepSettings,
}

fn serialize_prior<S: serde::Serializer>(p: &Prior, s: S) -> Result<S::Ok, S::Error> {
    s.serialize_str(match p {
        Prior::L2 => "l2",
        Prior::L1 => "l1",
    })
}

impl RunConfig {
    /// Defaults for `command` with no filters.
    pub fn new(command: Command) -> Self {
        Self {
            command,
            input: None,
            reference: None,
            output: PathBuf::from("out"),
            output_format: None,
            report: None,
            seed: 0,
            multiplicative: false,
            prior: Prior::L2,
            solver: SolverSettings::default(),
            filters: Vec::new(),
            simulate: SimulateSettings {
                dims: None,
                phantom: PhantomKind::Shapes,
                texture: 0.3,
                marginal: Marginal::BernoulliUniform { gamma: 1.0 },
                noise_fraction: None,
            },
            bounds: BoundsSettings {
                gammas: vec![0.001, 0.01, 0.05, 0.1, 0.5, 1.0],
                sigma1s: vec![2.0, 8.0, 32.0, 64.0, 128.0],
                sigma2: 2.0,
                etas: vec![0.05, 0.1, 0.2, 0.3],
            },
            sweep: SweepSettings {
                alpha_min: None,
                alpha_max: None,
                alpha_count: 24,
                dichotomy_evaluations: 30,
            },
        }
    }

    pub fn load(command: Command, path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        let mut cfg = Self::parse(command, &text)?;
        let base = path.parent().unwrap_or(Path::new(""));
        cfg.resolve_paths(base);
        Ok(cfg)
    }

    /// Makes relative input paths relative to `base`.
    pub fn resolve_paths(&mut self, base: &Path) {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        for p in [&mut self.input, &mut self.reference, &mut self.report].into_iter().flatten() {
            fix(p);
        }
        fix(&mut self.output);
        for f in &mut self.filters {
            if let KernelConfig::File { path } = &mut f.kernel {
                fix(path);
            }
        }
    }

    pub fn parse(command: Command, text: &str) -> CliResult<Self> {
        let sections = split_sections(text)?;
        let mut cfg = Self::new(command);
        let mut global = sections.global;
        cfg.apply_global(&mut global)?;
        global.finish()?;
        for mut section in sections.filters {
            let filter = parse_filter(&mut section)?;
            section.finish()?;
            cfg.filters.push(filter);
        }
        cfg.validate()?;
        Ok(cfg)
    }

    fn apply_global(&mut self, s: &mut Section) -> CliResult<()> {
        if let Some(v) = s.take::<PathBuf>("input")? {
            self.input = Some(v);
        }
        if let Some(v) = s.take::<PathBuf>("reference")? {
            self.reference = Some(v);
        }
        if let Some(v) = s.take::<PathBuf>("output")? {
            self.output = v;
        }
        if let Some(v) = s.take::<ImageFormat>("output_format")? {
            self.output_format = Some(v);
        }
        if let Some(v) = s.take::<PathBuf>("report")? {
            self.report = Some(v);
        }
        if let Some(v) = s.take("seed")? {
            self.seed = v;
        }
        if let Some(v) = s.take::<Flag>("multiplicative")? {
            self.multiplicative = v.0;
        }
        if let Some(v) = s.take::<PriorName>("prior")? {
            self.prior = v.0;
        }
        if let Some(v) = s.take("max_iterations")? {
            self.solver.max_iterations = v;
        }
        if let Some(v) = s.take("gap_tolerance")? {
            self.solver.gap_tolerance = v;
        }
        if let Some(v) = s.take::<Flag>("accelerate")? {
            self.solver.accelerate = v.0;
        }
        if let Some(v) = s.take("step_ratio")? {
            self.solver.step_ratio = v;
        }
        if let Some(v) = s.take::<DimsList>("dims")? {
            self.simulate.dims = Some(v.0);
        }
        if let Some(v) = s.take::<PhantomName>("phantom")? {
            self.simulate.phantom = v.0;
        }
        if let Some(v) = s.take("texture")? {
            self.simulate.texture = v;
        }
        if let Some(v) = s.take("noise_fraction")? {
            self.simulate.noise_fraction = Some(v);
        }
        self.simulate.marginal = parse_marginal(s)?;
        if let Some(v) = s.take::<List<f64>>("gammas")? {
            self.bounds.gammas = v.0;
        }
        if let Some(v) = s.take::<List<f64>>("sigma1s")? {
            self.bounds.sigma1s = v.0;
        }
        if let Some(v) = s.take("sigma2")? {
            self.bounds.sigma2 = v;
        }
        if let Some(v) = s.take::<List<f64>>("etas")? {
            self.bounds.etas = v.0;
        }
        if let Some(v) = s.take("alpha_min")? {
            self.sweep.alpha_min = Some(v);
        }
        if let Some(v) = s.take("alpha_max")? {
            self.sweep.alpha_max = Some(v);
        }
        if let Some(v) = s.take("alpha_count")? {
            self.sweep.alpha_count = v;
        }
        if let Some(v) = s.take("dichotomy_evaluations")? {
            self.sweep.dichotomy_evaluations = v;
        }
        Ok(())
    }

    /// Checks that do not depend on the contents of input files.
    pub fn validate(&self) -> CliResult<()> {
        let bad = |m: String| Err(CliError::Config(m));
        if let Err(e) = self.solver.to_core().validate() {
            return bad(e.to_string());
        }
        for (i, f) in self.filters.iter().enumerate() {
            if f.eta.is_some() && f.alpha.is_some() {
                return bad(format!("filter {}: give either eta or alpha, not both", i + 1));
            }
            if let Some(eta) = f.eta {
                if !(eta > 0.0 && eta < 1.0) {
                    return bad(format!("filter {}: eta must lie in (0, 1), got {eta}", i + 1));
                }
            }
            if let Some(alpha) = f.alpha {
                if !(alpha > 0.0 && alpha.is_finite()) {
                    return bad(format!("filter {}: alpha must be positive, got {alpha}", i + 1));
                }
            }
            if let Some(spec) = f.kernel.spec() {
                spec.validate().map_err(|e| CliError::Config(format!("filter {}: {e}", i + 1)))?;
            }
        }
        let s = &self.simulate;
        s.marginal.validate().map_err(|e| CliError::Config(e.to_string()))?;
        if !(s.texture >= 0.0 && s.texture.is_finite()) {
            return bad(format!("texture must be nonnegative, got {}", s.texture));
        }
        if let Some(f) = s.noise_fraction {
            if !(f >= 0.0 && f.is_finite()) {
                return bad(format!("noise_fraction must be nonnegative, got {f}"));
            }
        }
        let b = &self.bounds;
        if b.gammas.iter().any(|&g| !(g > 0.0 && g <= 1.0)) {
            return bad("gammas must lie in (0, 1]".into());
        }
        if b.sigma1s.iter().chain([&b.sigma2]).any(|&s| !(s > 0.0 && s.is_finite())) {
            return bad("kernel widths must be positive".into());
        }
        if b.etas.iter().any(|&e| !(e > 0.0 && e < 1.0)) {
            return bad("etas must lie in (0, 1)".into());
        }
        let w = &self.sweep;
        for a in [w.alpha_min, w.alpha_max].into_iter().flatten() {
            if !(a > 0.0 && a.is_finite()) {
                return bad(format!("alpha range bounds must be positive, got {a}"));
            }
        }
        if let (Some(lo), Some(hi)) = (w.alpha_min, w.alpha_max) {
            if lo >= hi {
                return bad(format!("alpha_min {lo} must be below alpha_max {hi}"));
            }
        }
        if w.alpha_count == 1 {
            return bad("alpha_count must be 0 or at least 2".into());
        }
        if w.dichotomy_evaluations < 2 {
            return bad("dichotomy_evaluations must be at least 2".into());
        }
        Ok(())
    }
}

/// Keys of one section with the line each came from.
#[derive(Debug, Default)]
struct Section {
    entries: BTreeMap<String, (usize, String)>,
}

impl Section {
    fn insert(&mut self, line: usize, key: &str, value: &str) -> CliResult<()> {
        if self.entries.insert(key.to_string(), (line, value.to_string())).is_some() {
            return Err(CliError::ConfigLine {
                line,
                message: format!("key `{key}` given twice"),
            });
        }
        Ok(())
    }

    fn take<T: FromStr>(&mut self, key: &str) -> CliResult<Option<T>>
    where
        T::Err: fmt::Display,
    {
        match self.entries.remove(key) {
            None => Ok(None),
            Some((line, raw)) => raw.parse::<T>().map(Some).map_err(|e| CliError::ConfigLine {
                line,
                message: format!("bad value for `{key}`: {e}"),
            }),
        }
    }

    fn line_of(&self, key: &str) -> usize {
        self.entries.get(key).map_or(0, |e| e.0)
    }

    fn finish(self) -> CliResult<()> {
        match self.entries.into_iter().min_by_key(|(_, (line, _))| *line) {
            None => Ok(()),
            Some((key, (line, _))) => Err(CliError::ConfigLine {
                line,
                message: format!("unknown key `{key}`"),
            }),
        }
    }
}

struct Sections {
    global: Section,
    filters: Vec<Section>,
}

fn split_sections(text: &str) -> CliResult<Sections> {
    let mut out = Sections {
        global: Section::default(),
        filters: Vec::new(),
    };
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        if let Some(header) = content.strip_prefix('[') {
            let name = header.strip_suffix(']').map(str::trim);
            if name != Some("filter") {
                return Err(CliError::ConfigLine {
                    line,
                    message: format!("unknown section `{content}`"),
                });
            }
            out.filters.push(Section::default());
            continue;
        }
        let Some((key, value)) = content.split_once('=') else {
            return Err(CliError::ConfigLine {
                line,
                message: format!("expected `key = value`, found `{content}`"),
            });
        };
        let (key, value) = (key.trim(), value.trim());
        if key.is_empty() {
            return Err(CliError::ConfigLine {
                line,
                message: "empty key".into(),
            });
        }
        out.filters.last_mut().unwrap_or(&mut out.global).insert(line, key, value)?;
    }
    Ok(out)
}

fn parse_filter(s: &mut Section) -> CliResult<FilterConfig> {
    let kernel_line = s.line_of("kernel");
    let Some(kind) = s.take::<String>("kernel")? else {
        return Err(CliError::Config("every [filter] needs a `kernel` key".into()));
    };
    let amplitude = s.take("amplitude")?.unwrap_or(1.0);
    let kernel = match kind.as_str() {
        "dirac" => KernelConfig::Dirac { amplitude },
        "gaussian" => KernelConfig::Gaussian {
            sigmas: require::<List<f64>>(s, "sigmas", "gaussian")?.0,
            amplitude,
        },
        "box" => KernelConfig::Box {
            half_extents: require::<List<usize>>(s, "half_extents", "box")?.0,
            amplitude,
        },
        "power" => KernelConfig::PowerDecay {
            exponent: require(s, "exponent", "power")?,
            cutoff: s.take("cutoff")?.unwrap_or(1.0),
            amplitude,
        },
        "file" => KernelConfig::File {
            path: require(s, "path", "file")?,
        },
        other => {
            return Err(CliError::ConfigLine {
                line: kernel_line,
                message: format!("unknown kernel `{other}` (expected dirac, gaussian, box, power or file)"),
            })
        }
    };
    Ok(FilterConfig {
        kernel,
        eta: s.take("eta")?,
        alpha: s.take("alpha")?,
    })
}

fn require<T: FromStr>(s: &mut Section, key: &str, kernel: &str) -> CliResult<T>
where
    T::Err: fmt::Display,
{
    s.take(key)?
        .ok_or_else(|| CliError::Config(format!("{kernel} kernel needs `{key}`")))
}

fn parse_marginal(s: &mut Section) -> CliResult<Marginal> {
    let line = s.line_of("marginal");
    let law = s.take::<String>("marginal")?.unwrap_or_else(|| "bernoulli_uniform".into());
    let gamma = s.take::<f64>("gamma")?;
    let sigma = s.take::<f64>("noise_sigma")?;
    let half_width = s.take::<f64>("half_width")?;
    let stray = |key: &str| CliError::ConfigLine {
        line,
        message: format!("`{key}` does not apply to the {law} marginal"),
    };
    match law.as_str() {
        "bernoulli_uniform" => {
            if sigma.is_some() {
                return Err(stray("noise_sigma"));
            }
            if half_width.is_some() {
                return Err(stray("half_width"));
            }
            Ok(Marginal::BernoulliUniform {
                gamma: gamma.unwrap_or(1.0),
            })
        }
        "gaussian" => {
            if gamma.is_some() {
                return Err(stray("gamma"));
            }
            if half_width.is_some() {
                return Err(stray("half_width"));
            }
            Ok(Marginal::Gaussian {
                sigma: sigma.unwrap_or(1.0),
            })
        }
        "uniform" => {
            if gamma.is_some() {
                return Err(stray("gamma"));
            }
            if sigma.is_some() {
                return Err(stray("noise_sigma"));
            }
            Ok(Marginal::Uniform {
                half_width: half_width.unwrap_or(1.0),
            })
        }
        other => Err(CliError::ConfigLine {
            line,
            message: format!("unknown marginal `{other}` (expected bernoulli_uniform, gaussian or uniform)"),
        }),
    }
}

/// Comma-separated values.
struct List<T>(Vec<T>);

impl<T: FromStr> FromStr for List<T>
where
    T::Err: fmt::Display,
{
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let items = s
            .split(',')
            .map(|p| p.trim().parse::<T>().map_err(|e| format!("`{}`: {e}", p.trim())))
            .collect::<Result<Vec<_>, _>>()?;
        if items.is_empty() {
            return Err("empty list".into());
        }
        Ok(List(items))
    }
}

/// `64x64` or `64, 64`.
struct DimsList(Vec<usize>);

impl FromStr for DimsList {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let parts: Vec<&str> = if s.contains('x') { s.split('x').collect() } else { s.split(',').collect() };
        let extents = parts
            .iter()
            .map(|p| p.trim().parse::<usize>().map_err(|e| format!("`{}`: {e}", p.trim())))
            .collect::<Result<Vec<_>, _>>()?;
        if extents.is_empty() || extents.len() > 3 || extents.contains(&0) {
            return Err(format!("expected 1 to 3 positive extents, got `{s}`"));
        }
        Ok(DimsList(extents))
    }
}

struct Flag(bool);

impl FromStr for Flag {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "true" | "yes" | "on" | "1" => Ok(Flag(true)),
            "false" | "no" | "off" | "0" => Ok(Flag(false)),
            _ => Err(format!("expected true or false, got `{s}`")),
        }
    }
}

struct PriorName(Prior);

impl FromStr for PriorName {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "l2" => Ok(PriorName(Prior::L2)),
            "l1" => Ok(PriorName(Prior::L1)),
            _ => Err(format!("expected l1 or l2, got `{s}`")),
        }
    }
}

struct PhantomName(PhantomKind);

impl FromStr for PhantomName {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "shapes" => Ok(PhantomName(PhantomKind::Shapes)),
            "flat" => Ok(PhantomName(PhantomKind::Flat)),
            _ => Err(format!("expected shapes or flat, got `{s}`")),
        }
    }
}
