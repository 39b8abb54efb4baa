//! Flat key-value configuration with dotted sections.
//!
//! One `key = value` pair per line, `#` comments, unknown keys rejected.
//! The bare forms of the model symbols (`lambda`, `gamma`, `sigma`, `rho`,
//! `mu0`, `epsilon_mu`, `m_phases`, `zeta_p`) alias their dotted keys.
//! `auto` selects the data-derived default where one exists.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};

use crate::lowrank::AlmParams;
use crate::optics::OpticsParams;
use crate::segment::{BinarizeMethod, FusionStrategy};
use crate::synth::SynthConfig;

/// Optional default I/O locations; command-line flags take precedence.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct IoPaths {
    pub input: Option<PathBuf>,
    pub glob: Option<String>,
    pub out: Option<PathBuf>,
}

/// Everything the pipeline needs, validated before any stage runs.
#[derive(Debug, Clone, PartialEq)]
pub struct PipelineConfig {
    pub seed: u64,
    /// Worker thread cap for per-frame stages; 0 means all cores.
    pub threads: usize,
    pub alm: AlmParams,
    pub optics: OpticsParams,
    pub fusion: FusionStrategy,
    pub binarize: BinarizeMethod,
    pub min_area: usize,
    pub synth: SynthConfig,
    pub io: IoPaths,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            seed: 42,
            threads: 0,
            alm: AlmParams::default(),
            optics: OpticsParams::default(),
            fusion: FusionStrategy::MaxPositive,
            binarize: BinarizeMethod::Otsu,
            min_area: 9,
            synth: SynthConfig::default(),
            io: IoPaths::default(),
        }
    }
}

impl PipelineConfig {
    pub fn validate(&self) -> Result<()> {
        self.alm.validate()?;
        self.optics.validate()?;
        self.synth.validate()?;
        if let FusionStrategy::SinglePhase(m) = self.fusion {
            if m == 0 || m > self.optics.m_phases {
                return Err(Error::param(
                    "segment.fusion",
                    format!("phase index {m} out of range 1..={}", self.optics.m_phases),
                ));
            }
        }
        Ok(())
    }

    /// Serialize every key with its current value; reparsing reproduces the
    /// config exactly.
    pub fn dump(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "# phasecell configuration (all keys, current values)");
        let _ = writeln!(s, "seed = {}", self.seed);
        let _ = writeln!(s, "threads = {}", self.threads);
        let _ = writeln!(s, "alm.lambda = {}", opt(self.alm.lambda));
        let _ = writeln!(s, "alm.mu0 = {}", opt(self.alm.mu0));
        let _ = writeln!(s, "alm.rho = {}", self.alm.rho);
        let _ = writeln!(s, "alm.epsilon_mu = {}", self.alm.epsilon_mu);
        let _ = writeln!(s, "alm.stop_tol = {}", self.alm.stop_tol);
        let _ = writeln!(s, "alm.max_iters = {}", self.alm.max_iters);
        let _ = writeln!(s, "gfl.gamma = {}", self.alm.gfl.gamma);
        let _ = writeln!(s, "gfl.sigma = {}", opt(self.alm.gfl.sigma));
        let _ = writeln!(s, "gfl.inner_max_iters = {}", self.alm.gfl.inner_max_iters);
        let _ = writeln!(s, "gfl.inner_tol = {}", self.alm.gfl.inner_tol);
        let _ = writeln!(s, "optics.m_phases = {}", self.optics.m_phases);
        let _ = writeln!(s, "optics.zeta_p = {}", self.optics.zeta_p);
        let _ = writeln!(s, "optics.airy_outer_radius = {}", self.optics.airy_outer_radius);
        let _ = writeln!(s, "optics.airy_ring_width = {}", self.optics.airy_ring_width);
        let _ = writeln!(s, "optics.kernel_size = {}", self.optics.kernel_size);
        let _ = writeln!(s, "optics.inv_reg = {}", self.optics.inv_reg);
        let _ = writeln!(s, "segment.fusion = {}", self.fusion);
        let _ = writeln!(s, "segment.binarize = {}", self.binarize);
        let _ = writeln!(s, "segment.min_area = {}", self.min_area);
        let _ = writeln!(s, "synth.width = {}", self.synth.width);
        let _ = writeln!(s, "synth.height = {}", self.synth.height);
        let _ = writeln!(s, "synth.n_frames = {}", self.synth.n_frames);
        let _ = writeln!(s, "synth.bg_rank = {}", self.synth.bg_rank);
        let _ = writeln!(s, "synth.cell_count = {}", self.synth.cell_count);
        let _ = writeln!(s, "synth.cell_radius_min = {}", self.synth.cell_radius_range.0);
        let _ = writeln!(s, "synth.cell_radius_max = {}", self.synth.cell_radius_range.1);
        let _ = writeln!(s, "synth.cell_phase = {}", self.synth.cell_phase);
        let _ = writeln!(s, "synth.noise_sigma = {}", self.synth.noise_sigma);
        let _ = writeln!(s, "synth.noise_correlated = {}", self.synth.noise_correlated);
        if let Some(p) = &self.io.input {
            let _ = writeln!(s, "io.input = {}", p.display());
        }
        if let Some(g) = &self.io.glob {
            let _ = writeln!(s, "io.glob = {g}");
        }
        if let Some(p) = &self.io.out {
            let _ = writeln!(s, "io.out = {}", p.display());
        }
        s
    }
}

fn opt(v: Option<f64>) -> String {
    match v {
        Some(x) => x.to_string(),
        None => "auto".into(),
    }
}

/// One documented config key: default and model symbol where one exists.
pub struct KeyDoc {
    pub key: &'static str,
    pub default: &'static str,
    pub symbol: Option<&'static str>,
    pub help: &'static str,
}

/// Every recognized key, for `--help` and the README.
pub const KEY_DOCS: &[KeyDoc] = &[
    KeyDoc { key: "seed", default: "42", symbol: None, help: "root seed for all randomness" },
    KeyDoc { key: "threads", default: "0", symbol: None, help: "worker cap for per-frame stages (0 = all cores)" },
    KeyDoc { key: "alm.lambda", default: "auto", symbol: Some("lambda"), help: "sparsity trade-off; auto = 1/sqrt(max(p, n))" },
    KeyDoc { key: "alm.mu0", default: "auto", symbol: Some("mu0"), help: "initial penalty; auto = 1.25/sigma_max(A)" },
    KeyDoc { key: "alm.rho", default: "1.5", symbol: Some("rho"), help: "penalty growth factor, must exceed 1" },
    KeyDoc { key: "alm.epsilon_mu", default: "1e-3", symbol: Some("epsilon"), help: "stall threshold for growing the penalty" },
    KeyDoc { key: "alm.stop_tol", default: "1e-6", symbol: None, help: "relative residual at which the solver stops" },
    KeyDoc { key: "alm.max_iters", default: "300", symbol: None, help: "outer iteration budget" },
    KeyDoc { key: "gfl.gamma", default: "0.5", symbol: Some("gamma"), help: "fused-term strength (0 = plain l1)" },
    KeyDoc { key: "gfl.sigma", default: "auto", symbol: Some("sigma"), help: "edge-weight bandwidth; auto = median neighbor difference" },
    KeyDoc { key: "gfl.inner_max_iters", default: "200", symbol: None, help: "prox solver iteration budget" },
    KeyDoc { key: "gfl.inner_tol", default: "1e-6", symbol: None, help: "prox solver relative objective tolerance" },
    KeyDoc { key: "optics.m_phases", default: "8", symbol: Some("M"), help: "number of phase retardations in the bank" },
    KeyDoc { key: "optics.zeta_p", default: "0.8", symbol: Some("zeta_p"), help: "phase-ring amplitude attenuation, in (0, 1]" },
    KeyDoc { key: "optics.airy_outer_radius", default: "0.15", symbol: None, help: "annulus outer radius, cycles/pixel" },
    KeyDoc { key: "optics.airy_ring_width", default: "0.12", symbol: None, help: "annulus ring width, 0 < W < R" },
    KeyDoc { key: "optics.kernel_size", default: "17", symbol: None, help: "odd spatial support of the PSF kernels" },
    KeyDoc { key: "optics.inv_reg", default: "1e-2", symbol: None, help: "Tikhonov regularizer of the inverse filters" },
    KeyDoc { key: "segment.fusion", default: "max-positive", symbol: None, help: "max-positive | max-abs | single-phase:<m>" },
    KeyDoc { key: "segment.binarize", default: "otsu", symbol: None, help: "otsu | quantile:<q> | fixed:<t>" },
    KeyDoc { key: "segment.min_area", default: "9", symbol: None, help: "drop components smaller than this many pixels" },
    KeyDoc { key: "synth.width", default: "64", symbol: None, help: "generated frame width" },
    KeyDoc { key: "synth.height", default: "64", symbol: None, help: "generated frame height" },
    KeyDoc { key: "synth.n_frames", default: "20", symbol: None, help: "generated frame count" },
    KeyDoc { key: "synth.bg_rank", default: "2", symbol: None, help: "numerical rank of the background stack" },
    KeyDoc { key: "synth.cell_count", default: "6", symbol: None, help: "cells per frame" },
    KeyDoc { key: "synth.cell_radius_min", default: "2", symbol: None, help: "minimum cell semi-axis, pixels" },
    KeyDoc { key: "synth.cell_radius_max", default: "3", symbol: None, help: "maximum cell semi-axis, pixels" },
    KeyDoc { key: "synth.cell_phase", default: "0.65", symbol: Some("theta"), help: "phase retardation assigned to cells" },
    KeyDoc { key: "synth.noise_sigma", default: "0", symbol: None, help: "noise standard deviation" },
    KeyDoc { key: "synth.noise_correlated", default: "false", symbol: None, help: "rank-1 frame-correlated noise instead of white" },
    KeyDoc { key: "io.input", default: "(unset)", symbol: None, help: "default input directory" },
    KeyDoc { key: "io.glob", default: "*.pgm", symbol: None, help: "default filename pattern" },
    KeyDoc { key: "io.out", default: "(unset)", symbol: None, help: "default output location" },
];

fn resolve_alias(key: &str) -> &str {
    match key {
        "lambda" => "alm.lambda",
        "mu0" => "alm.mu0",
        "rho" => "alm.rho",
        "epsilon" | "epsilon_mu" => "alm.epsilon_mu",
        "gamma" => "gfl.gamma",
        "sigma" => "gfl.sigma",
        "m_phases" => "optics.m_phases",
        "zeta_p" => "optics.zeta_p",
        other => other,
    }
}

struct LineCtx<'a> {
    path: &'a Path,
    line: usize,
}

impl LineCtx<'_> {
    fn err(&self, msg: impl Into<String>) -> Error {
        Error::Config {
            path: self.path.to_path_buf(),
            line: self.line,
            msg: msg.into(),
        }
    }

    fn f64(&self, key: &str, value: &str) -> Result<f64> {
        value
            .parse()
            .map_err(|_| self.err(format!("{key}: expected a number, got `{value}`")))
    }

    fn auto_f64(&self, key: &str, value: &str) -> Result<Option<f64>> {
        if value == "auto" {
            Ok(None)
        } else {
            self.f64(key, value).map(Some)
        }
    }

    fn usize(&self, key: &str, value: &str) -> Result<usize> {
        value
            .parse()
            .map_err(|_| self.err(format!("{key}: expected a non-negative integer, got `{value}`")))
    }

    fn u64(&self, key: &str, value: &str) -> Result<u64> {
        value
            .parse()
            .map_err(|_| self.err(format!("{key}: expected a non-negative integer, got `{value}`")))
    }

    fn bool(&self, key: &str, value: &str) -> Result<bool> {
        match value {
            "true" => Ok(true),
            "false" => Ok(false),
            _ => Err(self.err(format!("{key}: expected true or false, got `{value}`"))),
        }
    }
}

/// Parse a config file. Absent keys keep their defaults; the result is fully
/// validated.
pub fn parse_config(path: impl AsRef<Path>) -> Result<PipelineConfig> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_config_str(&text, path)
}

/// Parse config text; `path` is only used in error messages.
pub fn parse_config_str(text: &str, path: impl AsRef<Path>) -> Result<PipelineConfig> {
    let path = path.as_ref();
    let mut cfg = PipelineConfig::default();

    for (lineno, raw) in text.lines().enumerate() {
        let ctx = LineCtx {
            path,
            line: lineno + 1,
        };
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| ctx.err(format!("expected `key = value`, got `{line}`")))?;
        let key = resolve_alias(key.trim());
        let value = value.trim();
        if value.is_empty() {
            return Err(ctx.err(format!("{key}: empty value")));
        }

        match key {
            "seed" => cfg.seed = ctx.u64(key, value)?,
            "threads" => cfg.threads = ctx.usize(key, value)?,
            "alm.lambda" => {
                let v = ctx.auto_f64(key, value)?;
                if let Some(x) = v {
                    if !(x > 0.0) {
                        return Err(ctx.err(format!("alm.lambda must be > 0 (got {x})")));
                    }
                }
                cfg.alm.lambda = v;
            }
            "alm.mu0" => {
                let v = ctx.auto_f64(key, value)?;
                if let Some(x) = v {
                    if !(x > 0.0) {
                        return Err(ctx.err(format!("alm.mu0 must be > 0 (got {x})")));
                    }
                }
                cfg.alm.mu0 = v;
            }
            "alm.rho" => {
                let v = ctx.f64(key, value)?;
                if !(v > 1.0) {
                    return Err(ctx.err(format!("rho must exceed 1 (got {v})")));
                }
                cfg.alm.rho = v;
            }
            "alm.epsilon_mu" => {
                let v = ctx.f64(key, value)?;
                if !(v > 0.0) {
                    return Err(ctx.err(format!("alm.epsilon_mu must be > 0 (got {v})")));
                }
                cfg.alm.epsilon_mu = v;
            }
            "alm.stop_tol" => {
                let v = ctx.f64(key, value)?;
                if !(v > 0.0) {
                    return Err(ctx.err(format!("alm.stop_tol must be > 0 (got {v})")));
                }
                cfg.alm.stop_tol = v;
            }
            "alm.max_iters" => {
                let v = ctx.usize(key, value)?;
                if v == 0 {
                    return Err(ctx.err("alm.max_iters must be >= 1"));
                }
                cfg.alm.max_iters = v;
            }
            "gfl.gamma" => {
                let v = ctx.f64(key, value)?;
                if !(v >= 0.0) {
                    return Err(ctx.err(format!("gfl.gamma must be >= 0 (got {v})")));
                }
                cfg.alm.gfl.gamma = v;
            }
            "gfl.sigma" => {
                let v = ctx.auto_f64(key, value)?;
                if let Some(x) = v {
                    if !(x > 0.0) {
                        return Err(ctx.err(format!("gfl.sigma must be > 0 (got {x})")));
                    }
                }
                cfg.alm.gfl.sigma = v;
            }
            "gfl.inner_max_iters" => {
                let v = ctx.usize(key, value)?;
                if v == 0 {
                    return Err(ctx.err("gfl.inner_max_iters must be >= 1"));
                }
                cfg.alm.gfl.inner_max_iters = v;
            }
            "gfl.inner_tol" => {
                let v = ctx.f64(key, value)?;
                if !(v > 0.0) {
                    return Err(ctx.err(format!("gfl.inner_tol must be > 0 (got {v})")));
                }
                cfg.alm.gfl.inner_tol = v;
            }
            "optics.m_phases" => {
                let v = ctx.usize(key, value)?;
                if v == 0 {
                    return Err(ctx.err("optics.m_phases must be >= 1"));
                }
                cfg.optics.m_phases = v;
            }
            "optics.zeta_p" => {
                let v = ctx.f64(key, value)?;
                if !(v > 0.0 && v <= 1.0) {
                    return Err(ctx.err(format!("optics.zeta_p must lie in (0, 1] (got {v})")));
                }
                cfg.optics.zeta_p = v;
            }
            "optics.airy_outer_radius" => {
                let v = ctx.f64(key, value)?;
                if !(v > 0.0) {
                    return Err(ctx.err("optics.airy_outer_radius must be > 0"));
                }
                cfg.optics.airy_outer_radius = v;
            }
            "optics.airy_ring_width" => {
                let v = ctx.f64(key, value)?;
                if !(v > 0.0) {
                    return Err(ctx.err("optics.airy_ring_width must be > 0"));
                }
                cfg.optics.airy_ring_width = v;
            }
            "optics.kernel_size" => {
                let v = ctx.usize(key, value)?;
                if v % 2 == 0 || v < 3 {
                    return Err(ctx.err(format!("optics.kernel_size must be odd and >= 3 (got {v})")));
                }
                cfg.optics.kernel_size = v;
            }
            "optics.inv_reg" => {
                let v = ctx.f64(key, value)?;
                if !(v > 0.0) {
                    return Err(ctx.err(format!("optics.inv_reg must be > 0 (got {v})")));
                }
                cfg.optics.inv_reg = v;
            }
            "segment.fusion" => {
                cfg.fusion = value
                    .parse()
                    .map_err(|e: String| ctx.err(format!("segment.fusion: {e}")))?;
            }
            "segment.binarize" => {
                cfg.binarize = value
                    .parse()
                    .map_err(|e: String| ctx.err(format!("segment.binarize: {e}")))?;
            }
            "segment.min_area" => cfg.min_area = ctx.usize(key, value)?,
            "synth.width" => cfg.synth.width = ctx.usize(key, value)?,
            "synth.height" => cfg.synth.height = ctx.usize(key, value)?,
            "synth.n_frames" => cfg.synth.n_frames = ctx.usize(key, value)?,
            "synth.bg_rank" => cfg.synth.bg_rank = ctx.usize(key, value)?,
            "synth.cell_count" => cfg.synth.cell_count = ctx.usize(key, value)?,
            "synth.cell_radius_min" => cfg.synth.cell_radius_range.0 = ctx.f64(key, value)?,
            "synth.cell_radius_max" => cfg.synth.cell_radius_range.1 = ctx.f64(key, value)?,
            "synth.cell_phase" => cfg.synth.cell_phase = ctx.f64(key, value)?,
            "synth.noise_sigma" => {
                let v = ctx.f64(key, value)?;
                if !(v >= 0.0) {
                    return Err(ctx.err(format!("synth.noise_sigma must be >= 0 (got {v})")));
                }
                cfg.synth.noise_sigma = v;
            }
            "synth.noise_correlated" => cfg.synth.noise_correlated = ctx.bool(key, value)?,
            "io.input" => cfg.io.input = Some(PathBuf::from(value)),
            "io.glob" => cfg.io.glob = Some(value.to_string()),
            "io.out" => cfg.io.out = Some(PathBuf::from(value)),
            unknown => {
                return Err(ctx.err(format!("unknown key `{unknown}`")));
            }
        }
    }

    cfg.synth.seed = cfg.seed;
    cfg.validate()?;
    Ok(cfg)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_file_gives_defaults() {
        let cfg = parse_config_str("", "test.cfg").unwrap();
        assert_eq!(cfg, PipelineConfig::default());
    }

    #[test]
    fn comments_and_blanks_are_skipped() {
        let cfg = parse_config_str("# comment\n\n  \nseed = 7\n", "t.cfg").unwrap();
        assert_eq!(cfg.seed, 7);
        assert_eq!(cfg.synth.seed, 7);
    }

    #[test]
    fn bare_rho_alias_enforces_constraint() {
        let err = parse_config_str("rho = 0.5\n", "t.cfg").unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("rho must exceed 1"), "{msg}");
        assert!(msg.contains("t.cfg:1"), "{msg}");
    }

    #[test]
    fn unknown_key_is_rejected() {
        let err = parse_config_str("alm.bogus = 1\n", "t.cfg").unwrap_err();
        assert!(err.to_string().contains("unknown key"), "{err}");
    }

    #[test]
    fn type_error_names_key() {
        let err = parse_config_str("gfl.gamma = abc\n", "t.cfg").unwrap_err();
        assert!(err.to_string().contains("gfl.gamma"), "{err}");
    }

    #[test]
    fn dump_roundtrips() {
        let mut cfg = PipelineConfig::default();
        cfg.seed = 99;
        cfg.synth.seed = 99;
        cfg.alm.lambda = Some(0.02);
        cfg.fusion = FusionStrategy::SinglePhase(3);
        cfg.binarize = BinarizeMethod::Quantile(0.9);
        cfg.io.input = Some(PathBuf::from("/data/in"));
        cfg.io.glob = Some("*.pgm".into());
        let text = cfg.dump();
        let back = parse_config_str(&text, "dump.cfg").unwrap();
        assert_eq!(back, cfg);
    }

    #[test]
    fn default_dump_roundtrips() {
        let cfg = PipelineConfig::default();
        let back = parse_config_str(&cfg.dump(), "dump.cfg").unwrap();
        assert_eq!(back, cfg);
    }

    #[test]
    fn auto_values_stay_auto() {
        let cfg = parse_config_str("alm.lambda = auto\ngfl.sigma = auto\n", "t.cfg").unwrap();
        assert!(cfg.alm.lambda.is_none());
        assert!(cfg.alm.gfl.sigma.is_none());
    }

    #[test]
    fn symbol_aliases_resolve() {
        let cfg =
            parse_config_str("lambda = 0.05\ngamma = 0.25\nm_phases = 4\nzeta_p = 0.6\n", "t.cfg")
                .unwrap();
        assert_eq!(cfg.alm.lambda, Some(0.05));
        assert_eq!(cfg.alm.gfl.gamma, 0.25);
        assert_eq!(cfg.optics.m_phases, 4);
        assert_eq!(cfg.optics.zeta_p, 0.6);
    }

    #[test]
    fn cross_field_validation_runs() {
        // ring width must stay below outer radius
        let err = parse_config_str(
            "optics.airy_outer_radius = 0.1\noptics.airy_ring_width = 0.2\n",
            "t.cfg",
        )
        .unwrap_err();
        assert!(err.to_string().contains("W < R"), "{err}");
    }

    #[test]
    fn fusion_phase_must_fit_bank() {
        let err = parse_config_str("segment.fusion = single-phase:9\n", "t.cfg").unwrap_err();
        assert!(err.to_string().contains("out of range"), "{err}");
    }

    #[test]
    fn key_docs_cover_every_parser_key() {
        // every documented key parses (sanity link between table and parser)
        for doc in KEY_DOCS {
            if doc.default == "(unset)" {
                continue;
            }
            let line = format!("{} = {}\n", doc.key, doc.default);
            parse_config_str(&line, "t.cfg")
                .unwrap_or_else(|e| panic!("{} failed: {e}", doc.key));
        }
    }
}
