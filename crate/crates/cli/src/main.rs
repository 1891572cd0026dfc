//! Batch front-end: ingest a slice stack, run coarse+fine detection, and
//! write masks, metrics, and timing reports.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use wmi_core::config;
use wmi_core::evaluate::{self, ConstraintMode, MetricsReport};
use wmi_core::image::BinaryMask;
use wmi_core::manifest::load_stack;
use wmi_core::pgm;
use wmi_core::phantom::{self, PhantomConfig, VentricleShape};
use wmi_core::pipeline::{detect_stack, RunConfig, SliceStack, StackDetection};
use wmi_core::preprocess::segregate_background;
use wmi_core::Error;

#[derive(Parser)]
#[command(
    name = "wmidetect",
    about = "White-matter hyperintensity detection for low-resolution T1 slice stacks",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run coarse+fine detection on a stack and write per-slice masks.
    Detect {
        /// Manifest: one slice path per line, optional tab-separated truth.
        manifest: PathBuf,
        /// Output directory.
        #[arg(long)]
        out: PathBuf,
        /// Also write red-overlay PPMs.
        #[arg(long)]
        overlays: bool,
        #[command(flatten)]
        opts: CommonOpts,
    },
    /// Run detection and score it against the manifest's truth masks.
    Eval {
        manifest: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Score existing prediction masks (named like the truth files)
        /// instead of running the pipeline.
        #[arg(long)]
        pred: Option<PathBuf>,
        /// Also run the four-way constraint ablation.
        #[arg(long)]
        ablation: bool,
        /// Also sweep the minimum lesion size over off/100/150/250.
        #[arg(long)]
        min_size_sweep: bool,
        #[command(flatten)]
        opts: CommonOpts,
    },
    /// Generate a synthetic phantom stack with ground truth.
    Phantom {
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 7)]
        seed: u64,
        #[arg(long, default_value_t = 12)]
        slices: usize,
        #[arg(long, default_value_t = 96)]
        width: usize,
        #[arg(long, default_value_t = 112)]
        height: usize,
        #[arg(long, default_value_t = 0.12)]
        sigma: f64,
        /// Render the irregular multi-lobe ventricle variant.
        #[arg(long)]
        lobed: bool,
        #[arg(long, default_value_t = 5)]
        decoys: usize,
        #[arg(long)]
        no_skull: bool,
    },
    /// Time the pipeline on an in-memory phantom volume.
    Bench {
        #[arg(long, default_value_t = 192)]
        slices: usize,
        #[command(flatten)]
        opts: CommonOpts,
    },
}

/// Every config key as a flag; flags win over the config file.
#[derive(Args)]
struct CommonOpts {
    /// key=value config file.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    threads: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Skip the anisotropic-diffusion denoising step.
    #[arg(long)]
    no_diffusion: bool,
    #[arg(long)]
    diffusion_iterations: Option<usize>,
    #[arg(long)]
    diffusion_lambda: Option<f64>,
    #[arg(long)]
    diffusion_kappa: Option<f64>,
    #[arg(long)]
    mser_delta: Option<u8>,
    #[arg(long)]
    mser_min_area_frac: Option<f64>,
    #[arg(long)]
    mser_max_area_frac: Option<f64>,
    #[arg(long)]
    mser_max_variation: Option<f64>,
    #[arg(long)]
    ga_population: Option<usize>,
    #[arg(long)]
    ga_generations: Option<usize>,
    #[arg(long)]
    ga_crossover_rate: Option<f64>,
    #[arg(long)]
    ga_mutation_rate: Option<f64>,
    #[arg(long)]
    ga_elitism: Option<usize>,
    #[arg(long)]
    z_threshold: Option<f64>,
    #[arg(long)]
    dist_min: Option<f64>,
    /// Disable the size constraint (top-5% discard plus K-means split).
    #[arg(long)]
    no_size_constraint: bool,
    /// Disable the boundary-distance constraint.
    #[arg(long)]
    no_distance_constraint: bool,
    /// Drop candidate objects smaller than this many pixels (0 = off).
    #[arg(long)]
    min_lesion_size: Option<usize>,
    /// Fine-detection centroid distance tolerance.
    #[arg(long)]
    dth: Option<f64>,
    #[arg(long)]
    n_adjacent: Option<usize>,
}

impl CommonOpts {
    fn build(&self) -> Result<RunConfig, Error> {
        let mut cfg = RunConfig::default();
        if let Some(path) = &self.config {
            config::apply_file(&mut cfg, path)?;
        }
        macro_rules! set {
            ($field:ident) => {
                if let Some(v) = self.$field {
                    cfg.$field = v;
                }
            };
        }
        set!(threads);
        set!(seed);
        set!(diffusion_iterations);
        set!(diffusion_lambda);
        set!(diffusion_kappa);
        set!(mser_delta);
        set!(mser_min_area_frac);
        set!(mser_max_area_frac);
        set!(mser_max_variation);
        set!(ga_population);
        set!(ga_generations);
        set!(ga_crossover_rate);
        set!(ga_mutation_rate);
        set!(ga_elitism);
        set!(z_threshold);
        set!(dist_min);
        set!(min_lesion_size);
        set!(dth);
        set!(n_adjacent);
        if self.no_diffusion {
            cfg.diffusion = false;
        }
        if self.no_size_constraint {
            cfg.size_constraint = false;
        }
        if self.no_distance_constraint {
            cfg.distance_constraint = false;
        }
        Ok(cfg)
    }
}

fn exit_code_for(err: &Error) -> u8 {
    match err {
        Error::Io(_) | Error::Format { .. } => 2,
        Error::ShapeMismatch(..) | Error::TooSmall(..) | Error::BadLength { .. } => 3,
        Error::Config(_) => 4,
        Error::MissingGroundTruth => 5,
        _ => 1,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(exit_code_for(&err))
        }
    }
}

fn run(cli: Cli) -> Result<(), Error> {
    match cli.command {
        Command::Detect {
            manifest,
            out,
            overlays,
            opts,
        } => {
            let cfg = opts.build()?;
            let stack = load_stack(&manifest)?;
            let detection = detect_stack(&stack, &cfg)?;
            std::fs::create_dir_all(&out)?;
            write_detection(&out, &manifest, &stack, &detection, &cfg, overlays)?;
            println!(
                "detect: {} slices, {} confirmed objects, masks in {}",
                stack.slices.len(),
                detection
                    .volume
                    .per_slice
                    .iter()
                    .map(|s| s.confirmed.len())
                    .sum::<usize>(),
                out.display()
            );
            Ok(())
        }
        Command::Eval {
            manifest,
            out,
            pred,
            ablation,
            min_size_sweep,
            opts,
        } => {
            let cfg = opts.build()?;
            let stack = load_stack(&manifest)?;
            if stack.truth_lesion.is_none() {
                return Err(Error::MissingGroundTruth);
            }
            std::fs::create_dir_all(&out)?;
            let report = match &pred {
                Some(dir) => score_pred_dir(&manifest, &stack, dir)?,
                None => {
                    let detection = detect_stack(&stack, &cfg)?;
                    evaluate::score_detection(&stack, &detection)?
                }
            };
            std::fs::write(out.join("metrics.csv"), report.to_csv())?;
            if ablation {
                let mut csv = String::from("mode,sensitivity,specificity,avg_tp,avg_fp\n");
                for mode in ConstraintMode::ALL {
                    let r = evaluate::ablation_run(&stack, mode, &cfg)?;
                    csv.push_str(&ablation_row(mode.label(), &r));
                }
                std::fs::write(out.join("ablation.csv"), csv)?;
            }
            if min_size_sweep {
                let sizes = [None, Some(100), Some(150), Some(250)];
                let mut csv = String::from("min_size,sensitivity,specificity,avg_tp,avg_fp\n");
                for (size, r) in evaluate::min_size_sweep(&stack, &sizes, &cfg)? {
                    let label = size.map_or("off".to_string(), |s| s.to_string());
                    csv.push_str(&ablation_row(&label, &r));
                }
                std::fs::write(out.join("min_size_sweep.csv"), csv)?;
            }
            println!("eval: metrics written to {}", out.display());
            Ok(())
        }
        Command::Phantom {
            out,
            seed,
            slices,
            width,
            height,
            sigma,
            lobed,
            decoys,
            no_skull,
        } => {
            let mut config = PhantomConfig {
                width,
                height,
                slice_count: slices,
                rng_seed: seed,
                noise_sigma: sigma,
                ventricle_shape: if lobed {
                    VentricleShape::Lobed
                } else {
                    VentricleShape::Simple
                },
                skull_ring: !no_skull,
                decoy_count: decoys,
                ..Default::default()
            };
            // Keep only the default lesions that fit in this stack.
            config
                .lesion_specs
                .retain(|l| l.start_slice + l.span_slices <= slices);
            let stack = phantom::generate(&config)?;
            std::fs::create_dir_all(&out)?;
            let mut manifest = format!("@stack_id phantom-{seed}\n");
            for (i, slice) in stack.slices.iter().enumerate() {
                let slice_name = format!("slice_{i:03}.pgm");
                let truth_name = format!("truth_{i:03}.pgm");
                pgm::write_pgm(&out.join(&slice_name), slice)?;
                pgm::write_mask_pgm(&out.join(&truth_name), &stack.truth_lesion[i])?;
                manifest.push_str(&format!("{slice_name}\t{truth_name}\n"));
            }
            std::fs::write(out.join("manifest.txt"), manifest)?;
            println!(
                "phantom: {slices} slices ({width}x{height}), seed {seed}, written to {}",
                out.display()
            );
            Ok(())
        }
        Command::Bench { slices, opts } => {
            let cfg = opts.build()?;
            let mut config = PhantomConfig {
                slice_count: slices,
                ..Default::default()
            };
            // Spread the default lesions across however many slices we have.
            config.lesion_specs.retain(|l| l.start_slice + l.span_slices <= slices);
            let stack = SliceStack::from(&phantom::generate(&config)?);
            let detection = detect_stack(&stack, &cfg)?;
            let t = &detection.timing;
            println!("bench: {} slices, threads={}", t.slice_count, cfg.threads);
            println!("  coarse: {:8.2} ms/slice", t.coarse_ms_per_slice);
            println!("  fine:   {:8.2} ms/slice", t.fine_ms_per_slice);
            println!(
                "  total:  {:8.2} ms ({:.2} s)",
                t.total_ms,
                t.total_ms / 1000.0
            );
            Ok(())
        }
    }
}

fn ablation_row(label: &str, r: &MetricsReport) -> String {
    let fmt = |v: Option<f64>| v.map_or("NA".to_string(), |x| format!("{x:.2}"));
    format!(
        "{},{},{},{:.2},{:.2}\n",
        label,
        fmt(r.avg_sensitivity),
        fmt(r.avg_specificity),
        r.avg_true_positives,
        r.avg_false_positives
    )
}

/// Stems of the manifest's slice files, used to name the per-slice outputs.
fn slice_stems(manifest: &Path, count: usize) -> Result<Vec<String>, Error> {
    let parsed = wmi_core::manifest::parse_manifest(manifest)?;
    Ok((0..count)
        .map(|i| {
            parsed.slices[i]
                .file_stem()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_else(|| format!("slice_{i:03}"))
        })
        .collect())
}

fn write_detection(
    out: &Path,
    manifest: &Path,
    stack: &SliceStack,
    detection: &StackDetection,
    cfg: &RunConfig,
    overlays: bool,
) -> Result<(), Error> {
    let stems = slice_stems(manifest, stack.slices.len())?;
    for (i, outcome) in detection.slices.iter().enumerate() {
        let stem = &stems[i];
        pgm::write_mask_pgm(
            &out.join(format!("{stem}_candidates.pgm")),
            &outcome.candidate_mask,
        )?;
        pgm::write_mask_pgm(
            &out.join(format!("{stem}_confirmed.pgm")),
            &detection.confirmed_masks[i],
        )?;
        if overlays {
            pgm::write_overlay_ppm(
                &out.join(format!("{stem}_overlay.ppm")),
                &stack.slices[i],
                &detection.confirmed_masks[i],
            )?;
        }
    }
    std::fs::write(out.join("summary.json"), render_summary(stack, detection, cfg))?;
    std::fs::write(out.join("timing.json"), render_timing(detection, cfg))?;
    Ok(())
}

/// Deterministic run summary: everything here is reproducible byte for byte
/// for a fixed manifest, config, and seed. Wall-clock numbers go to
/// `timing.json` instead so reports stay diffable.
fn render_summary(stack: &SliceStack, detection: &StackDetection, cfg: &RunConfig) -> String {
    let mut s = String::from("{\n");
    s.push_str(&format!("  \"stack_id\": \"{}\",\n", stack.stack_id));
    s.push_str(&format!("  \"slice_count\": {},\n", stack.slices.len()));
    s.push_str(&format!("  \"seed\": {},\n", cfg.seed));
    s.push_str("  \"per_slice\": [\n");
    for (k, sv) in detection.volume.per_slice.iter().enumerate() {
        let outcome = &detection.slices[k];
        let skipped = match &outcome.skipped {
            Some(reason) => format!("\"{reason}\""),
            None => "null".to_string(),
        };
        s.push_str(&format!(
            "    {{\"index\": {}, \"skipped\": {}, \"candidates\": {}, \"confirmed\": {}, \"rejected\": {}}}{}\n",
            sv.slice_index,
            skipped,
            outcome.candidates.len(),
            sv.confirmed.len(),
            sv.rejected.len(),
            if k + 1 < detection.volume.per_slice.len() { "," } else { "" }
        ));
    }
    s.push_str("  ],\n");
    s.push_str("  \"recovered\": [\n");
    for (k, r) in detection.volume.recovered.iter().enumerate() {
        s.push_str(&format!(
            "    {{\"slice\": {}, \"x\": {:.6}, \"y\": {:.6}}}{}\n",
            r.slice_index,
            r.centroid.0,
            r.centroid.1,
            if k + 1 < detection.volume.recovered.len() { "," } else { "" }
        ));
    }
    s.push_str("  ],\n");
    let total_candidates: usize = detection.slices.iter().map(|o| o.candidates.len()).sum();
    let total_confirmed: usize = detection
        .volume
        .per_slice
        .iter()
        .map(|s| s.confirmed.len())
        .sum();
    s.push_str(&format!(
        "  \"totals\": {{\"candidates\": {}, \"confirmed\": {}}},\n",
        total_candidates, total_confirmed
    ));
    s.push_str(&format!(
        "  \"unvalidated\": {}\n}}\n",
        detection.volume.unvalidated
    ));
    s
}

fn render_timing(detection: &StackDetection, cfg: &RunConfig) -> String {
    let t = &detection.timing;
    format!(
        "{{\n  \"slice_count\": {},\n  \"threads\": {},\n  \"coarse_ms_per_slice\": {:.3},\n  \"fine_ms_per_slice\": {:.3},\n  \"total_ms\": {:.3}\n}}\n",
        t.slice_count, cfg.threads, t.coarse_ms_per_slice, t.fine_ms_per_slice, t.total_ms
    )
}

/// Scores existing prediction masks named like the truth files.
fn score_pred_dir(
    manifest: &Path,
    stack: &SliceStack,
    pred_dir: &Path,
) -> Result<MetricsReport, Error> {
    let parsed = wmi_core::manifest::parse_manifest(manifest)?;
    let truth = stack.truth_lesion.as_ref().expect("checked by caller");
    let mut rows = Vec::new();
    for (i, truth_mask) in truth.iter().enumerate() {
        let name = parsed.truths[i]
            .as_ref()
            .and_then(|p| p.file_name())
            .ok_or(Error::MissingGroundTruth)?;
        let pred: BinaryMask = pgm::read_mask_pgm(&pred_dir.join(name))?;
        let brain = segregate_background(&stack.slices[i])?.foreground;
        rows.push((i, evaluate::confusion(&pred, truth_mask, &brain)?));
    }
    Ok(MetricsReport::from_counts(rows))
}
