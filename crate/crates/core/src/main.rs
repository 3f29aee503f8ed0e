use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use cadsynth::eval::EvalOptions;
use cadsynth::pipeline::{
    convert_to_coco, convert_to_yolo, describe_instances, evaluate_files, generate, inspect, postprocess,
    raw_categories, split, threads_from_env, CliError, EvaluateInputs, GenerateOptions, PostprocessOptions, SplitSpec,
    CLASSES_FILE, COCO_ANNOTATIONS,
};

#[derive(Parser)]
#[command(name = "cadsynth", version, about = "Synthetic object-detection datasets from CAD meshes")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Coco,
    Yolo,
}

#[derive(Subcommand)]
enum Command {
    /// Build, render and annotate randomized scenes.
    Generate {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        count: Option<usize>,
        /// Output directory (default: `output.dir` of the config).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Filter instances, quarantine empty images and write COCO annotations.
    Postprocess {
        dataset: PathBuf,
        #[arg(long)]
        min_visibility: Option<f64>,
        #[arg(long)]
        min_pixels: Option<usize>,
    },
    /// COCO to YOLO labels, or a YOLO label directory back to COCO.
    Convert {
        /// Dataset directory, COCO file, or YOLO label directory (for `--format coco`).
        input: PathBuf,
        #[arg(long, value_enum, default_value = "yolo")]
        format: Format,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Image size for YOLO input, as WxH.
        #[arg(long, default_value = "640x640", value_parser = parse_size)]
        image_size: [u32; 2],
        #[arg(long, default_value = "ppm")]
        image_ext: String,
    },
    /// Seeded train/val/test split of the images currently in the dataset.
    Split {
        dataset: PathBuf,
        /// Subset sizes: train[,val[,test]].
        #[arg(long, value_delimiter = ',', conflicts_with = "fractions", required_unless_present = "fractions")]
        counts: Vec<usize>,
        #[arg(long, value_delimiter = ',')]
        fractions: Vec<f64>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Precision, recall, AP50 and AP50-95 per class.
    Evaluate {
        /// COCO file, dataset directory, or YOLO label directory with classes.txt.
        #[arg(long)]
        gt: PathBuf,
        /// COCO results file, or YOLO label directory with a confidence column.
        #[arg(long)]
        dets: PathBuf,
        #[arg(long, default_value_t = 0.25)]
        conf_threshold: f64,
        #[arg(long, default_value = "640x640", value_parser = parse_size)]
        image_size: [u32; 2],
        /// Also write the report as JSON.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Format of `--gt` when it is ambiguous; detected from the path otherwise.
        #[arg(long, value_enum)]
        format: Option<Format>,
    },
    /// Draw an image's boxes and print its per-object statistics.
    Inspect { dataset: PathBuf, image: String },
}

fn parse_size(s: &str) -> Result<[u32; 2], String> {
    let (w, h) = s.split_once(['x', 'X']).ok_or("expected WxH")?;
    let w: u32 = w.parse().map_err(|_| "invalid width")?;
    let h: u32 = h.parse().map_err(|_| "invalid height")?;
    if w == 0 || h == 0 {
        return Err("size must be positive".into());
    }
    Ok([w, h])
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Generate { config, seed, count, out } => {
            let s = generate(&GenerateOptions { config, seed, count, out, threads: threads_from_env()? })?;
            println!("generated {} images ({} objects) in {}", s.images, s.instances, s.out.display());
        }
        Command::Postprocess { dataset, min_visibility, min_pixels } => {
            let r = postprocess(&dataset, &PostprocessOptions { min_visibility, min_pixels })?;
            println!(
                "kept {} images and {} instances; removed {} instances; dropped {} images",
                r.kept_images,
                r.kept_instances,
                r.removed_instances,
                r.dropped_images.len()
            );
        }
        Command::Convert { input, format, out, image_size, image_ext } => {
            let s =
                match format {
                    Format::Yolo => {
                        let out = out.unwrap_or_else(|| {
                            if input.is_dir() {
                                input.join("labels")
                            } else {
                                PathBuf::from("labels")
                            }
                        });
                        convert_to_yolo(&input, &out)?
                    }
                    Format::Coco => {
                        let out = out.unwrap_or_else(|| input.join("coco.json"));
                        convert_to_coco(&input, &out, image_size, &image_ext)?
                    }
                };
            println!("converted {} images ({} warnings)", s.files, s.warnings.len());
        }
        Command::Split { dataset, counts, fractions, seed } => {
            let spec = if counts.is_empty() { SplitSpec::Fractions(fractions) } else { SplitSpec::Counts(counts) };
            let m = split(&dataset, &spec, seed)?;
            for s in &m.subsets {
                println!("{}: {}", s.name, s.count);
            }
        }
        Command::Evaluate { gt, dets, conf_threshold, image_size, out, format } => {
            if !(0.0..=1.0).contains(&conf_threshold) {
                return Err(CliError::Validation(format!("--conf-threshold: {conf_threshold} outside [0, 1]")));
            }
            let gt = match format {
                Some(Format::Coco) if gt.is_dir() => gt.join(COCO_ANNOTATIONS),
                Some(Format::Yolo) if !gt.join(CLASSES_FILE).is_file() => {
                    return Err(CliError::Validation(format!("--gt {}: no {CLASSES_FILE} found", gt.display())));
                }
                _ => gt,
            };
            let options = EvalOptions { conf_threshold, ..EvalOptions::default() };
            let report = evaluate_files(&EvaluateInputs { ground_truth: gt, detections: dets, image_size, options })?;
            print!("{}", report.to_text());
            if let Some(path) = out {
                let mut bytes = serde_json::to_vec_pretty(&report).expect("report serializes");
                bytes.push(b'\n');
                std::fs::write(&path, bytes).map_err(|e| CliError::io(&path, e))?;
            }
        }
        Command::Inspect { dataset, image } => {
            let s = inspect(&dataset, &image)?;
            print!("{}", describe_instances(&raw_categories(&dataset)?, &s.instances));
            println!("{} boxes drawn to {}", s.boxes, s.preview.display());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
