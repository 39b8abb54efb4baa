//! Batch command-line surface.
//!
//! Exit codes: 0 success, 1 usage error, 2 data error, 3 numerical
//! non-convergence (the decomposition hit its iteration budget; outputs are
//! still written).

use std::ffi::OsString;
use std::path::{Path, PathBuf};
use std::sync::OnceLock;

use clap::{Args, Parser, Subcommand};

use crate::config::{parse_config, PipelineConfig, KEY_DOCS};
use crate::error::{Error, Result};
use crate::eval;
use crate::image::{
    load_mask_dir, load_sequence, save_frame, save_mask, stack, BitDepth, Frame, ImageSequence,
};
use crate::lowrank::decompose;
use crate::optics::{inverse_filter, psf_bank, IdpBank};
use crate::segment::{restore, run_pipeline};
use crate::synth::render;

const EXIT_OK: i32 = 0;
const EXIT_USAGE: i32 = 1;
const EXIT_DATA: i32 = 2;
const EXIT_NO_CONVERGENCE: i32 = 3;

fn config_reference() -> &'static str {
    static HELP: OnceLock<String> = OnceLock::new();
    HELP.get_or_init(|| {
        let mut s = String::from("Config keys (key = value per line, `#` comments):\n");
        for doc in KEY_DOCS {
            let symbol = doc
                .symbol
                .map(|sym| format!(" [{sym}]"))
                .unwrap_or_default();
            s.push_str(&format!(
                "  {:<26} default {:<12}{} {}\n",
                doc.key, doc.default, symbol, doc.help
            ));
        }
        s
    })
}

#[derive(Parser)]
#[command(
    name = "phasecell",
    version,
    about = "Cell segmentation for phase contrast microscopy sequences",
    after_help = config_reference()
)]
struct Cli {
    #[command(subcommand)]
    cmd: Command,
}

#[derive(Args)]
struct CommonIo {
    /// Input frame directory
    #[arg(long = "in")]
    input: Option<PathBuf>,
    /// Filename pattern (`*` and `?`)
    #[arg(long)]
    glob: Option<String>,
    /// Config file
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output location
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker thread cap for per-frame stages (0 = all cores)
    #[arg(long)]
    threads: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic dataset with ground truth layers
    #[command(after_help = config_reference())]
    Synth {
        #[command(flatten)]
        io: CommonIo,
    },
    /// Split a sequence into low-rank background and sparse foreground
    #[command(after_help = config_reference())]
    Decompose {
        #[command(flatten)]
        io: CommonIo,
    },
    /// Apply the inverse diffraction bank to (foreground) frames
    #[command(after_help = config_reference())]
    Restore {
        #[command(flatten)]
        io: CommonIo,
    },
    /// Full pipeline: decompose, restore, fuse, binarize, label
    #[command(after_help = config_reference())]
    Segment {
        #[command(flatten)]
        io: CommonIo,
    },
    /// Score masks against ground truth masks
    #[command(after_help = config_reference())]
    Eval {
        /// Directory of predicted masks
        #[arg(long)]
        masks: PathBuf,
        /// Directory of truth masks
        #[arg(long)]
        truth: PathBuf,
        /// Report CSV path
        #[arg(long)]
        out: PathBuf,
        /// Filename pattern
        #[arg(long)]
        glob: Option<String>,
    },
    /// Time the decompose / restore / segment stages
    #[command(after_help = config_reference())]
    Bench {
        #[command(flatten)]
        io: CommonIo,
        /// Timing repetitions
        #[arg(long, default_value_t = 3)]
        reps: usize,
    },
    /// Write each PSF and inverse kernel as an image plus a CSV of taps
    #[command(after_help = config_reference())]
    DumpBank {
        #[command(flatten)]
        io: CommonIo,
    },
}

/// Parse `argv` and run. Never panics on bad input; returns the exit code.
pub fn run(argv: Vec<OsString>) -> i32 {
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => EXIT_OK,
                _ => EXIT_USAGE,
            };
            let _ = e.print();
            return code;
        }
    };
    match dispatch(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            let mut source = std::error::Error::source(&e);
            while let Some(s) = source {
                eprintln!("  caused by: {s}");
                source = s.source();
            }
            match e {
                Error::Usage(_) => EXIT_USAGE,
                _ => EXIT_DATA,
            }
        }
    }
}

fn load_config(path: &Option<PathBuf>) -> Result<PipelineConfig> {
    match path {
        Some(p) => parse_config(p),
        None => Ok(PipelineConfig::default()),
    }
}

fn dispatch(cli: Cli) -> Result<i32> {
    match cli.cmd {
        Command::Synth { io } => with_pool(&io, |cfg, io| cmd_synth(cfg, io)),
        Command::Decompose { io } => with_pool(&io, |cfg, io| cmd_decompose(cfg, io)),
        Command::Restore { io } => with_pool(&io, |cfg, io| cmd_restore(cfg, io)),
        Command::Segment { io } => with_pool(&io, |cfg, io| cmd_segment(cfg, io)),
        Command::Eval {
            masks,
            truth,
            out,
            glob,
        } => cmd_eval(&masks, &truth, &out, glob.as_deref().unwrap_or("*.pgm")),
        Command::Bench { io, reps } => with_pool(&io, |cfg, io| cmd_bench(cfg, io, reps)),
        Command::DumpBank { io } => with_pool(&io, |cfg, io| cmd_dump_bank(cfg, io)),
    }
}

/// Resolve config + thread cap, then run the handler inside a rayon pool of
/// that size so per-frame parallelism respects `--threads`.
fn with_pool(
    io: &CommonIo,
    f: impl FnOnce(&PipelineConfig, &CommonIo) -> Result<i32> + Send,
) -> Result<i32> {
    let cfg = load_config(&io.config)?;
    let threads = io.threads.unwrap_or(cfg.threads);
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| Error::Usage(format!("cannot build thread pool: {e}")))?;
    pool.install(|| f(&cfg, io))
}

fn require_out(io: &CommonIo, cfg: &PipelineConfig) -> Result<PathBuf> {
    io.out
        .clone()
        .or_else(|| cfg.io.out.clone())
        .ok_or_else(|| Error::Usage("missing --out (or io.out in the config)".into()))
}

fn load_input_sequence(io: &CommonIo, cfg: &PipelineConfig) -> Result<ImageSequence> {
    let dir = io
        .input
        .clone()
        .or_else(|| cfg.io.input.clone())
        .ok_or_else(|| Error::Usage("missing --in (or io.input in the config)".into()))?;
    let glob = io
        .glob
        .clone()
        .or_else(|| cfg.io.glob.clone())
        .unwrap_or_else(|| "*.pgm".into());
    load_sequence(dir, &glob)
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            std::fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
        }
    }
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

fn save_frames(dir: &Path, frames: &[Frame]) -> Result<()> {
    for (k, f) in frames.iter().enumerate() {
        save_frame(f, dir.join(format!("frame_{k:04}.pgm")), BitDepth::Sixteen)?;
    }
    Ok(())
}

fn cmd_synth(cfg: &PipelineConfig, io: &CommonIo) -> Result<i32> {
    let out = require_out(io, cfg)?;
    let ds = render(&cfg.synth, &cfg.optics)?;
    save_frames(&out.join("observed"), ds.sequence.frames())?;
    save_frames(&out.join("truth_bg"), ds.background_truth.frames())?;
    save_frames(&out.join("truth_fg"), ds.foreground_truth.frames())?;
    for (k, m) in ds.masks_truth.iter().enumerate() {
        save_mask(m, out.join("truth_masks").join(format!("frame_{k:04}.pgm")))?;
    }
    let manifest = serde_json::to_string_pretty(&ds.manifest())
        .map_err(|e| Error::Decode {
            path: out.join("manifest.json"),
            msg: e.to_string(),
        })?;
    write_text(&out.join("manifest.json"), &manifest)?;
    println!(
        "wrote {} frames ({}x{}) under {}",
        ds.sequence.len(),
        ds.sequence.width(),
        ds.sequence.height(),
        out.display()
    );
    Ok(EXIT_OK)
}

fn cmd_decompose(cfg: &PipelineConfig, io: &CommonIo) -> Result<i32> {
    let out = require_out(io, cfg)?;
    let seq = load_input_sequence(io, cfg)?;
    let a = stack(&seq);
    let d = decompose(&a, seq.width(), seq.height(), &cfg.alm)?;
    let bg = crate::image::unstack(&d.background, seq.width(), seq.height())?;
    let fg = crate::image::unstack(&d.foreground, seq.width(), seq.height())?;
    save_frames(&out.join("background"), bg.frames())?;
    save_frames(&out.join("foreground"), fg.frames())?;
    write_text(&out.join("diag.csv"), &d.diagnostics_csv())?;
    println!(
        "decomposed {} frames in {} iterations (converged: {})",
        seq.len(),
        d.iterations,
        d.converged
    );
    Ok(if d.converged { EXIT_OK } else { EXIT_NO_CONVERGENCE })
}

fn cmd_restore(cfg: &PipelineConfig, io: &CommonIo) -> Result<i32> {
    let out = require_out(io, cfg)?;
    let seq = load_input_sequence(io, cfg)?;
    let bank = IdpBank::new(&cfg.optics, seq.width(), seq.height())?;
    for (k, frame) in seq.frames().iter().enumerate() {
        let rs = restore(frame, &bank)?;
        for (m, map) in rs.maps.iter().enumerate() {
            save_frame(
                map,
                out.join(format!("phase_{}", m + 1))
                    .join(format!("frame_{k:04}.pgm")),
                BitDepth::Sixteen,
            )?;
        }
    }
    println!(
        "restored {} frames through {} filters under {}",
        seq.len(),
        bank.len(),
        out.display()
    );
    Ok(EXIT_OK)
}

fn cmd_segment(cfg: &PipelineConfig, io: &CommonIo) -> Result<i32> {
    let out = require_out(io, cfg)?;
    let seq = load_input_sequence(io, cfg)?;
    let output = run_pipeline(&seq, cfg, Some(&out))?;
    let cells: usize = output.frames.iter().map(|f| f.result.cell_count).sum();
    println!(
        "segmented {} frames ({} components total) under {}",
        output.frames.len(),
        cells,
        out.display()
    );
    Ok(if output.decomposition.converged {
        EXIT_OK
    } else {
        EXIT_NO_CONVERGENCE
    })
}

fn cmd_eval(masks_dir: &Path, truth_dir: &Path, out: &Path, glob: &str) -> Result<i32> {
    let masks = load_mask_dir(masks_dir, glob)?;
    let truths = load_mask_dir(truth_dir, glob)?;
    let report = eval::evaluate(&masks, &truths)?;
    write_text(out, &report.to_csv())?;
    println!("mean ACC {:.6} over {} frames", report.mean_acc, report.rows.len());
    Ok(EXIT_OK)
}

fn cmd_bench(cfg: &PipelineConfig, io: &CommonIo, reps: usize) -> Result<i32> {
    let out = require_out(io, cfg)?;
    let seq = load_input_sequence(io, cfg)?;
    let report = eval::bench(&seq, cfg, reps)?;
    write_text(&out, &report.to_csv())?;
    for stage in &report.stages {
        println!("{}: median {:.3}s over {} reps", stage.stage, stage.median(), reps);
    }
    Ok(EXIT_OK)
}

fn normalized_image(data: &[f64], w: usize, h: usize) -> Result<Frame> {
    let lo = data.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = data.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let span = hi - lo;
    let mapped: Vec<f64> = if span > 0.0 {
        data.iter().map(|v| (v - lo) / span).collect()
    } else {
        vec![0.5; data.len()]
    };
    Frame::new(w, h, mapped)
}

fn taps_csv(data: &[f64], w: usize) -> String {
    let mut s = String::new();
    for row in data.chunks(w) {
        let line: Vec<String> = row.iter().map(|v| format!("{v:.12e}")).collect();
        s.push_str(&line.join(","));
        s.push('\n');
    }
    s
}

fn cmd_dump_bank(cfg: &PipelineConfig, io: &CommonIo) -> Result<i32> {
    let out = require_out(io, cfg)?;
    let bank = psf_bank(&cfg.optics)?;
    // spatial inverse kernels rendered on a grid a few supports wide
    let grid = (cfg.optics.kernel_size * 4) | 1;
    for (m, kernel) in bank.kernels().iter().enumerate() {
        let k = kernel.size();
        let img = normalized_image(kernel.taps(), k, k)?;
        save_frame(&img, out.join(format!("psf_{}.pgm", m + 1)), BitDepth::Eight)?;
        write_text(&out.join(format!("psf_{}.csv", m + 1)), &taps_csv(kernel.taps(), k))?;

        let inv = inverse_filter(kernel, grid, grid, cfg.optics.inv_reg)?;
        let spatial = inv.to_spatial();
        let img = normalized_image(spatial.as_slice(), spatial.width(), spatial.height())?;
        save_frame(&img, out.join(format!("idp_{}.pgm", m + 1)), BitDepth::Eight)?;
        write_text(
            &out.join(format!("idp_{}.csv", m + 1)),
            &taps_csv(spatial.as_slice(), spatial.width()),
        )?;
    }
    println!(
        "wrote {} PSF / inverse kernel pairs under {}",
        bank.len(),
        out.display()
    );
    Ok(EXIT_OK)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn args(list: &[&str]) -> Vec<OsString> {
        list.iter().map(OsString::from).collect()
    }

    #[test]
    fn no_subcommand_is_usage_error() {
        assert_eq!(run(args(&["phasecell"])), EXIT_USAGE);
    }

    #[test]
    fn unknown_subcommand_is_usage_error() {
        assert_eq!(run(args(&["phasecell", "frobnicate"])), EXIT_USAGE);
    }

    #[test]
    fn help_exits_zero() {
        assert_eq!(run(args(&["phasecell", "--help"])), EXIT_OK);
        assert_eq!(run(args(&["phasecell", "segment", "--help"])), EXIT_OK);
    }

    #[test]
    fn missing_out_is_usage_error() {
        assert_eq!(run(args(&["phasecell", "synth"])), EXIT_USAGE);
    }

    #[test]
    fn missing_input_dir_is_data_error() {
        let dir = tempfile::tempdir().unwrap();
        let out = dir.path().join("out");
        assert_eq!(
            run(args(&[
                "phasecell",
                "segment",
                "--in",
                "/nonexistent/frames",
                "--out",
                out.to_str().unwrap()
            ])),
            EXIT_DATA
        );
    }

    #[test]
    fn config_reference_lists_symbols() {
        let help = config_reference();
        for sym in ["lambda", "gamma", "sigma", "rho", "mu0", "epsilon", "M", "zeta_p"] {
            assert!(help.contains(sym), "missing symbol {sym}");
        }
    }
}
