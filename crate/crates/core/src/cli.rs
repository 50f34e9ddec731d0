//! Command-line front end. Exit codes: 0 success, 1 usage/parse/config error, 2 empty or
//! degenerate result.

use std::ffi::OsString;
use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};

use crate::cloud::PointCloud;
use crate::config::PipelineConfig;
use crate::descriptor::GrooveSet;
use crate::error::{Error, Result};
use crate::evaluation::{overlap_rate, trajectory_deviation, EvalReport};
use crate::io::{format_index_list, load_cloud_auto, read_index_list, save_cloud, write_pcd, CloudFormat};
use crate::pipeline::{self, Detection, PipelineRun};
use crate::synth::{generate_workpiece, ReferenceCurve, Shape, WorkpieceSpec};
use crate::trajectory::{generate_trajectory, Trajectory};

#[derive(Debug, Parser)]
#[command(name = "weldgroove", version, about = "Weld groove detection and trajectory generation")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, clap::Args)]
struct Common {
    /// Pipeline configuration (`key = value` lines or JSON).
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, default_value = ".")]
    out: PathBuf,
    /// Worker thread cap (overrides the config).
    #[arg(long)]
    threads: Option<usize>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Detect the groove: writes groove.txt, variation_map.txt, diagnostics.txt, preprocessed.pcd.
    Detect {
        cloud: PathBuf,
        #[command(flatten)]
        common: Common,
    },
    /// Build a trajectory from a cloud and a groove index file.
    Trajectory {
        cloud: PathBuf,
        groove: PathBuf,
        #[command(flatten)]
        common: Common,
        /// Emit waypoints in the opposite order.
        #[arg(long)]
        reverse: bool,
    },
    /// Compare detected and true groove index files; optionally a trajectory against a reference.
    Eval {
        /// Detected index files (one per run).
        #[arg(long, required = true, num_args = 1..)]
        detected: Vec<PathBuf>,
        /// Ground-truth index files; one shared file or one per detected file.
        #[arg(long, required = true, num_args = 1..)]
        truth: Vec<PathBuf>,
        /// Trajectory JSON to compare against --reference.
        #[arg(long, requires = "reference")]
        trajectory: Option<PathBuf>,
        /// Reference curve JSON.
        #[arg(long, requires = "trajectory")]
        reference: Option<PathBuf>,
        /// Cloud the indices refer to (for the point count and index validation).
        #[arg(long)]
        cloud: Option<PathBuf>,
        #[arg(long, default_value = "eval")]
        name: String,
        /// Append a CSV row to this file.
        #[arg(long)]
        csv: Option<PathBuf>,
        /// Also write report.json here.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Generate a synthetic workpiece: cloud.pcd, truth.txt, reference.json.
    Synth {
        /// Workpiece spec as JSON; omitted keys take the defaults of its shape.
        spec: Option<PathBuf>,
        /// Shape to use when no spec file is given.
        #[arg(long, default_value = "straight-line")]
        shape: String,
        #[arg(long)]
        seed: Option<u64>,
        /// Noise sigma in meters.
        #[arg(long)]
        noise: Option<f64>,
        #[arg(long, default_value = ".")]
        out: PathBuf,
    },
    /// Detect and build the trajectory in one go, with stage timing.
    Pipeline {
        cloud: PathBuf,
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        reverse: bool,
        /// Timing repetitions.
        #[arg(long, default_value_t = 1)]
        runs: usize,
        /// Ground-truth index file for the overlap rate.
        #[arg(long)]
        truth: Option<PathBuf>,
        /// Reference curve JSON for the trajectory deviation.
        #[arg(long)]
        reference: Option<PathBuf>,
        /// Append a CSV row to this file.
        #[arg(long)]
        csv: Option<PathBuf>,
    },
}

/// Parses `args` (program name first) and runs the command, returning the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 1 } else { 0 };
        }
    };
    match execute(cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

fn exit_code(e: &Error) -> i32 {
    match e {
        Error::EmptyGroove | Error::GrooveTooShort | Error::NoDominantDirection | Error::DegenerateBenchmark => 2,
        _ => 1,
    }
}

fn write(path: &Path, contents: &str) -> Result<()> {
    fs::write(path, contents).map_err(|e| Error::io(path, e))
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

fn load_config(common: &Common) -> Result<PipelineConfig> {
    let mut config = match &common.config {
        Some(p) => PipelineConfig::load(p)?,
        None => PipelineConfig::default(),
    };
    if let Some(n) = common.threads {
        if n == 0 {
            return Err(Error::Config("--threads must be at least 1".into()));
        }
        config.threads = Some(n);
    }
    Ok(config)
}

fn prepare_out(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

fn write_detection(dir: &Path, d: &Detection) -> Result<()> {
    let pre = &d.preprocessed;
    write(&dir.join("groove.txt"), &format_index_list(&d.groove.indices))?;
    write(&dir.join("variation_map.txt"), &d.map.to_table(&pre.cloud))?;
    let diagnostics = format!("# smoothing\n{}# normals\n{}", pre.smoothing, pre.normals);
    write(&dir.join("diagnostics.txt"), &diagnostics)?;
    write(&dir.join("preprocessed.pcd"), &write_pcd(&pre.cloud))
}

fn write_trajectory(dir: &Path, t: &Trajectory) -> Result<()> {
    write(&dir.join("trajectory.txt"), &t.to_ascii())?;
    write(&dir.join("trajectory.json"), &t.to_json())
}

fn append_csv(path: &Path, report: &EvalReport) -> Result<()> {
    let fresh = !path.exists();
    let mut f = fs::OpenOptions::new()
        .create(true)
        .append(true)
        .open(path)
        .map_err(|e| Error::io(path, e))?;
    let mut text = String::new();
    if fresh {
        text.push_str(EvalReport::CSV_HEADER);
        text.push('\n');
    }
    text.push_str(&report.csv_row());
    text.push('\n');
    f.write_all(text.as_bytes()).map_err(|e| Error::io(path, e))
}

fn execute(command: Command) -> Result<i32> {
    match command {
        Command::Detect { cloud, common } => {
            let config = load_config(&common)?;
            let input = load_cloud_auto(&cloud)?;
            let detection = pipeline::detect(&input, &config)?;
            prepare_out(&common.out)?;
            write_detection(&common.out, &detection)?;
            if detection.groove.is_empty() {
                eprintln!("error: {}", Error::EmptyGroove);
                return Ok(2);
            }
            println!("{} groove points", detection.groove.len());
            Ok(0)
        }
        Command::Trajectory {
            cloud,
            groove,
            common,
            reverse,
        } => {
            let mut config = load_config(&common)?;
            config.reverse |= reverse;
            let input = load_cloud_auto(&cloud)?;
            let indices = read_index_list(&groove)?;
            for &i in &indices {
                input.check_index(i)?;
            }
            let set = GrooveSet {
                indices,
                threshold: f64::NAN,
            };
            let trajectory = pipeline::with_threads(&config, || -> Result<Trajectory> {
                let cloud = if input.has_normals() {
                    input
                } else {
                    let mut timings = Default::default();
                    pipeline::preprocess(&input, &config, &mut timings)?.cloud
                };
                generate_trajectory(&cloud, &set, &pipeline::trajectory_config(&config))
            })??;
            prepare_out(&common.out)?;
            write_trajectory(&common.out, &trajectory)?;
            println!("{} waypoints", trajectory.len());
            Ok(0)
        }
        Command::Eval {
            detected,
            truth,
            trajectory,
            reference,
            cloud,
            name,
            csv,
            out,
        } => {
            if truth.len() != 1 && truth.len() != detected.len() {
                return Err(Error::Config(format!(
                    "{} detected files but {} truth files; give one truth file or one per detected file",
                    detected.len(),
                    truth.len()
                )));
            }
            let cloud = cloud.map(load_cloud_auto).transpose()?;
            let mut report = EvalReport::new(name);
            report.point_count = cloud.as_ref().map(PointCloud::len);
            for (k, d) in detected.iter().enumerate() {
                let t = &truth[if truth.len() == 1 { 0 } else { k }];
                let (d, t) = (read_index_list(d)?, read_index_list(t)?);
                if let Some(c) = &cloud {
                    for &i in d.iter().chain(&t) {
                        c.check_index(i)?;
                    }
                }
                let o = overlap_rate(&d, &t);
                if o.vacuous {
                    log::warn!("both index sets are empty; overlap rate defined as 1");
                }
                report.push_overlap(o);
            }
            if let (Some(tp), Some(rp)) = (trajectory, reference) {
                let traj = Trajectory::from_json(&read(&tp)?)?;
                let curve = ReferenceCurve::from_json(&read(&rp)?)?;
                report.deviation = Some(trajectory_deviation(&traj, &curve));
            }
            let json = report.to_json();
            println!("{json}");
            if let Some(dir) = out {
                prepare_out(&dir)?;
                write(&dir.join("report.json"), &json)?;
            }
            if let Some(path) = csv {
                append_csv(&path, &report)?;
            }
            Ok(0)
        }
        Command::Synth {
            spec,
            shape,
            seed,
            noise,
            out,
        } => {
            let mut spec = match spec {
                Some(p) => parse_spec(&read(&p)?)?,
                None => WorkpieceSpec::default_for(shape.parse::<Shape>()?),
            };
            if let Some(s) = seed {
                spec.seed = s;
            }
            if let Some(n) = noise {
                spec.noise_sigma = n;
            }
            let w = generate_workpiece(&spec)?;
            prepare_out(&out)?;
            save_cloud(&w.labeled.cloud.clone().without_normals(), out.join("cloud.pcd"), CloudFormat::PcdAscii)?;
            write(&out.join("truth.txt"), &format_index_list(&w.labeled.truth))?;
            write(&out.join("reference.json"), &w.reference.to_json())?;
            write(
                &out.join("spec.json"),
                &serde_json::to_string_pretty(&spec).expect("spec serializes"),
            )?;
            println!("{} points, {} groove points", w.labeled.cloud.len(), w.labeled.truth.len());
            Ok(0)
        }
        Command::Pipeline {
            cloud,
            common,
            reverse,
            runs,
            truth,
            reference,
            csv,
        } => {
            if runs == 0 {
                return Err(Error::Config("--runs must be at least 1".into()));
            }
            let mut config = load_config(&common)?;
            config.reverse |= reverse;
            let input = load_cloud_auto(&cloud)?;
            let name = cloud
                .file_stem()
                .map_or_else(|| "cloud".to_string(), |s| s.to_string_lossy().into_owned());
            let mut report = EvalReport::new(name);
            report.point_count = Some(input.len());
            let mut last: Option<PipelineRun> = None;
            for _ in 0..runs {
                let run = match pipeline::run_pipeline(&input, &config) {
                    Ok(run) => run,
                    Err(Error::EmptyGroove) => {
                        // Keep the detection artifacts for inspection.
                        let detection = pipeline::detect(&input, &config)?;
                        prepare_out(&common.out)?;
                        write_detection(&common.out, &detection)?;
                        return Err(Error::EmptyGroove);
                    }
                    Err(e) => return Err(e),
                };
                report.push_run(run.timings);
                last = Some(run);
            }
            let run = last.expect("at least one run");
            if let Some(t) = truth {
                let t = read_index_list(&t)?;
                report.push_overlap(overlap_rate(&run.detection.groove.indices, &t));
            }
            if let Some(r) = reference {
                let curve = ReferenceCurve::from_json(&read(&r)?)?;
                report.deviation = Some(trajectory_deviation(&run.trajectory, &curve));
            }
            prepare_out(&common.out)?;
            write_detection(&common.out, &run.detection)?;
            write_trajectory(&common.out, &run.trajectory)?;
            write(&common.out.join("report.json"), &report.to_json())?;
            if let Some(path) = csv {
                append_csv(&path, &report)?;
            }
            println!(
                "{} groove points, {} waypoints, mean {:.3} s",
                run.detection.groove.len(),
                run.trajectory.len(),
                report.mean_runtime.map_or(0.0, |t| t.total)
            );
            Ok(0)
        }
    }
}

/// Workpiece spec JSON; keys that are absent take the defaults of the given shape.
pub fn parse_spec(text: &str) -> Result<WorkpieceSpec> {
    let value: serde_json::Value = serde_json::from_str(text).map_err(|e| Error::parse(e.line(), e.to_string()))?;
    let serde_json::Value::Object(given) = value else {
        return Err(Error::InvalidSpec("spec must be a JSON object".into()));
    };
    let shape = match given.get("shape") {
        Some(v) => serde_json::from_value::<Shape>(v.clone()).map_err(|e| Error::InvalidSpec(e.to_string()))?,
        None => Shape::StraightLine,
    };
    let mut merged = serde_json::to_value(WorkpieceSpec::default_for(shape)).expect("spec serializes");
    if let serde_json::Value::Object(base) = &mut merged {
        for (k, v) in given {
            if !base.contains_key(&k) {
                return Err(Error::InvalidSpec(format!("unknown spec key `{k}`")));
            }
            base.insert(k, v);
        }
    }
    serde_json::from_value(merged).map_err(|e| Error::InvalidSpec(e.to_string()))
}
