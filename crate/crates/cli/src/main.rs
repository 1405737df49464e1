use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{CommandFactory, Parser, ValueEnum};
use hvl_core::image::{compare, Image};
use hvl_core::lights::{write_hvl_csv, RadiusMode};
use hvl_core::render::{render, RenderOptions};
use hvl_core::scene::fixtures;
use hvl_core::shading::{GatherConfig, Mode};

mod report;

use report::RunReport;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ModeArg {
    Hvl,
    HvlZh,
    Vpl,
    Vsl,
    Path,
    Direct,
}

impl ModeArg {
    fn mode(self) -> Mode {
        match self {
            ModeArg::Hvl => Mode::Hvl,
            ModeArg::HvlZh => Mode::HvlZhFast,
            ModeArg::Vpl => Mode::Vpl,
            ModeArg::Vsl => Mode::Vsl,
            ModeArg::Path => Mode::Path,
            ModeArg::Direct => Mode::Direct,
        }
    }

    fn name(self) -> &'static str {
        match self {
            ModeArg::Hvl => "hvl",
            ModeArg::HvlZh => "hvl-zh",
            ModeArg::Vpl => "vpl",
            ModeArg::Vsl => "vsl",
            ModeArg::Path => "path",
            ModeArg::Direct => "direct",
        }
    }
}

fn parse_radius(s: &str) -> Result<RadiusMode, String> {
    match s {
        "r1" => Ok(RadiusMode::R1),
        "r2" => Ok(RadiusMode::R2),
        _ => {
            let v = s.strip_prefix("fixed:").ok_or_else(|| format!("expected r1, r2 or fixed:VALUE, got `{s}`"))?;
            let r: f64 = v.parse().map_err(|_| format!("`{v}` is not a number"))?;
            if !(r.is_finite() && r > 0.0) {
                return Err(format!("fixed radius must be positive, got {r}"));
            }
            Ok(RadiusMode::Fixed(r))
        }
    }
}

fn positive_f64(s: &str) -> Result<f64, String> {
    match s.parse::<f64>() {
        Ok(v) if v.is_finite() && v > 0.0 => Ok(v),
        _ => Err(format!("expected a positive number, got `{s}`")),
    }
}

/// Renders a scene with spherical-harmonics virtual lights or one of the
/// reference estimators.
#[derive(Debug, Parser)]
#[command(name = "hvl", version, about)]
struct Args {
    /// Scene file (TOML) or built-in name (`cornell`, `plane`).
    #[arg(long)]
    scene: String,

    #[arg(long, value_enum, default_value_t = ModeArg::Hvl)]
    mode: ModeArg,

    /// Virtual lights per spot light.
    #[arg(long, default_value_t = 400, value_parser = clap::value_parser!(u32).range(1..))]
    hvl_count: u32,

    #[arg(long, default_value_t = 3, value_parser = clap::value_parser!(u32).range(1..=20))]
    bands_emission: u32,

    #[arg(long, default_value_t = 5, value_parser = clap::value_parser!(u32).range(1..=20))]
    bands_gather: u32,

    /// `r1`, `r2` or `fixed:VALUE`.
    #[arg(long, default_value = "r2", value_parser = parse_radius)]
    radius: RadiusMode,

    /// Radius scale.
    #[arg(long, default_value_t = 1.0, value_parser = positive_f64)]
    k: f64,

    /// Cone samples per virtual light (vsl mode).
    #[arg(long, default_value_t = 25, value_parser = clap::value_parser!(u32).range(1..))]
    vsl_samples: u32,

    /// Samples per pixel (path mode).
    #[arg(long, default_value_t = 256, value_parser = clap::value_parser!(u32).range(1..))]
    path_samples: u32,

    /// Count every surface along a path ray instead of the nearest one.
    #[arg(long)]
    no_path_visibility: bool,

    /// Clamp on the VPL geometric term.
    #[arg(long, value_parser = positive_f64)]
    vpl_clamp: Option<f64>,

    #[arg(long, default_value_t = 0)]
    seed: u64,

    /// Output image, `.pfm` or `.ppm`.
    #[arg(long, default_value = "out.pfm")]
    out: PathBuf,

    /// Reference image; enables the metrics in the report.
    #[arg(long)]
    reference: Option<PathBuf>,

    /// Report path; the report is always printed to stdout as well.
    #[arg(long)]
    report: Option<PathBuf>,

    #[arg(long, env = "HVL_THREADS", value_parser = clap::value_parser!(u32).range(1..))]
    threads: Option<u32>,

    /// Output the indirect buffer only.
    #[arg(long)]
    indirect_only: bool,

    /// Write the virtual lights as CSV.
    #[arg(long)]
    dump_hvls: Option<PathBuf>,

    /// Directory caching tabulated BRDF projections.
    #[arg(long)]
    brdf_cache: Option<PathBuf>,
}

fn radius_name(r: RadiusMode) -> String {
    match r {
        RadiusMode::R1 => "r1".into(),
        RadiusMode::R2 => "r2".into(),
        RadiusMode::Fixed(v) => format!("fixed:{v}"),
    }
}

fn run(args: Args) -> Result<()> {
    let scene = fixtures::resolve(&args.scene).with_context(|| format!("loading scene `{}`", args.scene))?;
    let reference = match &args.reference {
        Some(p) => Some(Image::load(p).with_context(|| format!("reading reference {}", p.display()))?),
        None => None,
    };
    let cam = scene.camera();
    if let Some(r) = &reference {
        if (r.width(), r.height()) != (cam.width, cam.height) {
            bail!(
                "reference {} is {}×{} but the render is {}×{}",
                args.reference.as_ref().unwrap().display(),
                r.width(),
                r.height(),
                cam.width,
                cam.height
            );
        }
    }

    let opts = RenderOptions {
        config: GatherConfig {
            bands_emission: args.bands_emission as usize,
            bands_gather: args.bands_gather as usize,
            mode: args.mode.mode(),
            vsl_samples: args.vsl_samples as usize,
            path_samples: args.path_samples as usize,
            vpl_clamp: args.vpl_clamp,
            path_visibility: !args.no_path_visibility,
        },
        hvl_count: args.hvl_count as usize,
        radius: args.radius,
        k: args.k,
        seed: args.seed,
        indirect_only: args.indirect_only,
        brdf_cache: args.brdf_cache.clone(),
        ..Default::default()
    };

    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = args.threads {
        builder = builder.num_threads(n as usize);
    }
    let pool = builder.build().context("starting the worker pool")?;
    let out = pool.install(|| render(&scene, &opts))?;
    for w in &out.warnings {
        eprintln!("warning: {w}");
    }

    out.image.save(&args.out).with_context(|| format!("writing {}", args.out.display()))?;
    if let Some(p) = &args.dump_hvls {
        let mut w = BufWriter::new(File::create(p).with_context(|| format!("creating {}", p.display()))?);
        write_hvl_csv(&out.hvls, &mut w).with_context(|| format!("writing {}", p.display()))?;
        w.flush().with_context(|| format!("writing {}", p.display()))?;
    }

    let metrics = reference.as_ref().map(|r| compare(&out.image, r)).transpose()?;
    let report = RunReport {
        scene: args.scene.clone(),
        mode: args.mode.name(),
        width: cam.width,
        height: cam.height,
        hvl_requested: args.hvl_count as usize,
        hvl_count: out.hvls.len(),
        bands_emission: args.bands_emission as usize,
        bands_gather: args.bands_gather as usize,
        radius: radius_name(args.radius),
        k: args.k,
        seed: args.seed,
        threads: pool.current_num_threads(),
        timings: out.timings,
        metrics,
        warnings: out.warnings.len(),
    };
    let text = report.to_string();
    if let Some(p) = &args.report {
        std::fs::write(p, &text).with_context(|| format!("writing {}", p.display()))?;
    }
    print!("{text}");
    Ok(())
}

fn main() -> ExitCode {
    let args = match Args::try_parse() {
        Ok(a) => a,
        Err(e) if e.use_stderr() => {
            let msg = e.render().to_string();
            eprint!("{msg}");
            if !msg.contains("Usage:") {
                eprintln!("\n{}", Args::command().render_usage());
            }
            return ExitCode::from(2);
        }
        Err(e) => e.exit(),
    };
    match run(args) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
