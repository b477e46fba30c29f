//! Subcommands of the `igarom` binary.

use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};

use igarom::fom::{sample_field, write_field, Fom, FomSolution};
use igarom::geometry::validate_geometry;
use igarom::scrbe::{ScrbeModel, ScrbeOnline, SchurSystem};

use crate::archive::sha256_hex;
use crate::config::RunConfig;
use crate::modelfile::{load_model, LoadedModel};
use crate::pipeline::{self, median, Stage, TrainOutcome, Trained, ARCHIVE_NAME};
use crate::report::{summary_text, write_csv, write_reports};
use crate::{CliError, CliResult};

#[derive(Debug, Parser)]
#[command(name = "igarom", version, about = "Reduced static-condensation models of multipatch spline problems")]
pub struct Cli {
    /// Worker threads (default: IGAROM_WORKERS, else all cores).
    #[arg(long, global = true)]
    pub workers: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args, Clone, Default)]
pub struct Common {
    /// Run configuration (TOML).
    #[arg(long, short)]
    pub config: Option<PathBuf>,
    /// Model file; overrides the one named in the configuration.
    #[arg(long, short)]
    pub model: Option<PathBuf>,
    /// Configuration override `section.key=value` (repeatable).
    #[arg(long = "set", short = 's')]
    pub overrides: Vec<String>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Check the geometry for folding over a Latin hypercube sample.
    Validate {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 100)]
        samples: usize,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Run the offline stages and write the archive and CSV curves.
    Train {
        #[command(flatten)]
        common: Common,
        /// Stop after `ports`, `eim` or `bubbles` (checkpoints are kept).
        #[arg(long)]
        stop_after: Option<Stage>,
        /// Reuse checkpoints of completed stages.
        #[arg(long)]
        resume: bool,
    },
    /// Online solves for one parameter or a file of parameters.
    Eval {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        eval: EvalArgs,
    },
    /// Full-order solve and field export.
    Fom {
        #[command(flatten)]
        common: Common,
        /// Comma or space separated parameter vector.
        #[arg(long, allow_hyphen_values = true)]
        mu: String,
        #[arg(long, default_value_t = 5)]
        lattice: usize,
        /// Field file (default: standard output).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Rewrite the CSV curves and print the summary of an archive.
    Report {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        archive: Option<PathBuf>,
        /// Directory for the CSV files (default: the output directory).
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Debug, Args, Clone, Default)]
pub struct EvalArgs {
    /// Archive (default: `<output>/rom.igarom`).
    #[arg(long)]
    pub archive: Option<PathBuf>,
    #[arg(long, allow_hyphen_values = true, conflicts_with = "mu_file")]
    pub mu: Option<String>,
    /// One parameter vector per line; `#` starts a comment.
    #[arg(long)]
    pub mu_file: Option<PathBuf>,
    /// Timed repetitions per parameter.
    #[arg(long, default_value_t = 20)]
    pub repeat: usize,
    /// Result CSV (default: standard output).
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Directory for reconstructed field files.
    #[arg(long)]
    pub fields: Option<PathBuf>,
    #[arg(long, default_value_t = 5)]
    pub lattice: usize,
    /// Also solve the FOM and report the relative X-norm error.
    #[arg(long)]
    pub compare_fom: bool,
}

impl Common {
    pub fn config(&self) -> CliResult<RunConfig> {
        let mut cfg = match &self.config {
            Some(p) => RunConfig::load(p, &self.overrides)?,
            None => RunConfig::from_toml("", &self.overrides)?,
        };
        if let Some(m) = &self.model {
            cfg.model = m.clone();
        }
        Ok(cfg)
    }
}

pub fn run(cli: Cli) -> CliResult<()> {
    match cli.command {
        Command::Validate { common, samples, seed } => validate(&common, samples, seed),
        Command::Train {
            common,
            stop_after,
            resume,
        } => train(&common, stop_after, resume).map(|_| ()),
        Command::Eval { common, eval } => self::eval(&common, &eval).map(|_| ()),
        Command::Fom {
            common,
            mu,
            lattice,
            out,
        } => fom(&common, &mu, lattice, out.as_deref()),
        Command::Report { common, archive, out } => report(&common, archive, out),
    }
}

pub fn validate(common: &Common, samples: usize, seed: Option<u64>) -> CliResult<()> {
    let cfg = common.config()?;
    let loaded = load_model(&cfg.model)?;
    let params = loaded.model.params();
    let mus = params.sample_lhs(samples.max(1), seed.unwrap_or(cfg.seeds.test));
    let report = validate_geometry(&loaded.model, &mus)?;
    println!("model {} ({} patches, {} free DOFs)", loaded.hash, loaded.model.n_patches(), loaded.model.n_free());
    for (k, (lo, hi)) in report.min_det.iter().zip(&report.max_det).enumerate() {
        println!("patch {k}: det DF in [{lo:.6e}, {hi:.6e}]");
    }
    if report.is_valid() {
        println!("valid over {} samples", mus.len());
        return Ok(());
    }
    for s in report.invalid.iter().take(10) {
        println!(
            "invalid: sample {} patch {} det {:.3e} at xi {:?} mu {:?}",
            s.sample, s.patch, s.det, s.xi, mus[s.sample]
        );
    }
    Err(CliError::Validation(format!(
        "{} invalid geometry evaluations over {} samples",
        report.invalid.len(),
        mus.len()
    )))
}

/// Trains and writes everything to the output directory.
pub fn train(common: &Common, stop_after: Option<Stage>, resume: bool) -> CliResult<Option<Trained>> {
    let cfg = common.config()?;
    let loaded = load_model(&cfg.model)?;
    std::fs::create_dir_all(&cfg.output).map_err(|e| CliError::io(&cfg.output, e))?;
    match pipeline::train(&cfg, &loaded, stop_after, resume)? {
        TrainOutcome::Stopped(s) => {
            println!("stopped after stage `{}`", s.name());
            Ok(None)
        }
        TrainOutcome::Done(t) => {
            let path = cfg.output.join(ARCHIVE_NAME);
            pipeline::to_archive(&cfg, &loaded, &t)?.write(&path)?;
            write_reports(&cfg.output, &t)?;
            print!("{}", summary_text(&t));
            println!(
                "offline: ports {:.2} s, EIM {:.2} s, bubbles {:.2} s; online median {:.3} ms",
                t.timing.ports_s, t.timing.eim_s, t.timing.bubbles_s, t.timing.online_median_ms
            );
            println!("wrote {}", path.display());
            Ok(Some(*t))
        }
    }
}

fn archive_path(cfg: &RunConfig, given: Option<PathBuf>) -> PathBuf {
    given.unwrap_or_else(|| cfg.output.join(ARCHIVE_NAME))
}

pub fn report(common: &Common, archive: Option<PathBuf>, out: Option<PathBuf>) -> CliResult<()> {
    let cfg = common.config()?;
    let a = crate::Archive::read(&archive_path(&cfg, archive))?;
    let t = pipeline::from_archive(&a)?;
    write_reports(&out.unwrap_or(cfg.output), &t)?;
    println!("model {}  tool {}", a.manifest.model_hash, a.manifest.tool);
    print!("{}", summary_text(&t));
    Ok(())
}

/// Parses one parameter vector (comma and/or whitespace separated).
pub fn parse_mu(s: &str) -> Result<Vec<f64>, String> {
    s.split(|c: char| c == ',' || c.is_whitespace())
        .filter(|t| !t.is_empty())
        .map(|t| t.parse::<f64>().map_err(|_| format!("`{t}` is not a number")))
        .collect()
}

/// A μ-file row: line number and the parsed vector or a message.
pub type MuRow = (usize, Result<Vec<f64>, String>);

pub fn read_mu_file(path: &Path) -> CliResult<Vec<MuRow>> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    Ok(text
        .lines()
        .enumerate()
        .filter_map(|(i, l)| {
            let l = l.split('#').next().unwrap_or("").trim();
            (!l.is_empty()).then(|| (i + 1, parse_mu(l)))
        })
        .collect())
}

/// Median timings in milliseconds of the online steps.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct OnlineTiming {
    pub theta_ms: f64,
    pub bubbles_ms: f64,
    pub schur_ms: f64,
    pub total_ms: f64,
}

/// Online solve repeated `reps` times on one thread, timing the EIM
/// coefficients, the patch bubble solves and the skeleton solve.
pub fn timed_online(rom: &ScrbeModel<f64>, mu: &[f64], reps: usize) -> igarom::Result<(ScrbeOnline<f64>, OnlineTiming)> {
    rom.params.check(mu)?;
    let reps = reps.max(1);
    let mut t = [Vec::with_capacity(reps), Vec::with_capacity(reps), Vec::with_capacity(reps), Vec::with_capacity(reps)];
    let mut last = None;
    for _ in 0..reps {
        let t0 = Instant::now();
        let thetas = (0..rom.patches.len())
            .map(|k| rom.eim.patch_theta(k, mu))
            .collect::<igarom::Result<Vec<_>>>()?;
        let t1 = Instant::now();
        let (parts, coefs): (Vec<_>, Vec<_>) = rom
            .patches
            .iter()
            .zip(&thetas)
            .map(|(p, (ta, tf))| p.online(ta, tf))
            .collect::<igarom::Result<Vec<_>>>()?
            .into_iter()
            .unzip();
        let t2 = Instant::now();
        let skeleton = SchurSystem::assemble(rom.n_skeleton(), &parts).solve()?;
        let t3 = Instant::now();
        for (v, (a, b)) in t.iter_mut().zip([(t0, t1), (t1, t2), (t2, t3), (t0, t3)]) {
            v.push((b - a).as_secs_f64() * 1e3);
        }
        last = Some(ScrbeOnline {
            skeleton,
            patches: coefs,
        });
    }
    let [a, b, c, d] = &mut t;
    let timing = OnlineTiming {
        theta_ms: median(a),
        bubbles_ms: median(b),
        schur_ms: median(c),
        total_ms: median(d),
    };
    Ok((last.expect("at least one repetition"), timing))
}

/// One line of `eval` output.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvalRow {
    pub row: usize,
    /// Space separated parameter vector as read.
    pub mu: String,
    pub status: String,
    pub message: String,
    pub theta_ms: f64,
    pub bubbles_ms: f64,
    pub schur_ms: f64,
    pub total_ms: f64,
    /// Seconds since the batch started, when the row finished.
    pub wall_s: f64,
    /// Relative X-norm error against the FOM (NaN unless requested).
    pub fom_error: f64,
}

fn field_text(loaded: &LoadedModel, mu: &[f64], free: &[f64], lattice: usize) -> CliResult<String> {
    if lattice < 2 {
        return Err(CliError::Usage("--lattice must be at least 2".into()));
    }
    let sol = FomSolution::from_free(&loaded.model, mu, free);
    let fields = sample_field(&loaded.model, &sol, lattice)?;
    Ok(write_field(&fields, loaded.model.dim(), lattice))
}

fn eval_row(
    ctx: &EvalContext,
    args: &EvalArgs,
    row: usize,
    mu: &[f64],
) -> CliResult<(OnlineTiming, f64)> {
    let (online, timing) = timed_online(&ctx.trained.scrbe, mu, args.repeat)?;
    let needs_field = args.fields.is_some() || args.compare_fom;
    let mut err = f64::NAN;
    if needs_field {
        let fom = ctx.fom.as_ref().expect("FOM built when fields are requested");
        let free = ctx
            .trained
            .scrbe
            .reconstruct(&online)
            .map_err(|_| CliError::Validation("archive was trained without reconstruction data".into()))?
            .free(fom);
        if let Some(dir) = &args.fields {
            let path = dir.join(format!("row{row}.field"));
            std::fs::write(&path, field_text(&ctx.loaded, mu, &free, args.lattice)?).map_err(|e| CliError::io(&path, e))?;
        }
        if args.compare_fom {
            let x = ctx.metric.as_ref().expect("metric built with the FOM");
            let u = fom.assemble(mu)?.solve()?;
            let d: Vec<f64> = u.iter().zip(&free).map(|(a, b)| a - b).collect();
            err = (x.bilinear(&d, &d) / x.bilinear(&u, &u)).sqrt();
        }
    }
    Ok((timing, err))
}

struct EvalContext {
    loaded: LoadedModel,
    trained: Trained,
    fom: Option<Fom<f64>>,
    metric: Option<igarom::numerics::CsrMatrix<f64>>,
}

/// Batch evaluation. Rows with errors are reported and the batch goes on;
/// the command fails at the end if any row failed.
pub fn eval(common: &Common, args: &EvalArgs) -> CliResult<Vec<EvalRow>> {
    let cfg = common.config()?;
    let loaded = load_model(&cfg.model)?;
    let rows: Vec<MuRow> = match (&args.mu, &args.mu_file) {
        (Some(m), None) => vec![(1, parse_mu(m))],
        (None, Some(f)) => read_mu_file(f)?,
        _ => return Err(CliError::Usage("give exactly one of --mu and --mu-file".into())),
    };
    let (_, trained) = pipeline::load_archive(&archive_path(&cfg, args.archive.clone()), &loaded)?;
    if let Some(dir) = &args.fields {
        std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    }
    let (fom, metric) = if args.fields.is_some() || args.compare_fom {
        let fom = Fom::new(loaded.model.clone(), loaded.source.clone());
        let metric = if args.compare_fom { Some(fom.metric()?) } else { None };
        (Some(fom), metric)
    } else {
        (None, None)
    };
    let ctx = EvalContext {
        loaded,
        trained,
        fom,
        metric,
    };
    let start = Instant::now();
    let mut out = Vec::with_capacity(rows.len());
    for (line, parsed) in rows {
        let text = match &parsed {
            Ok(mu) => mu.iter().map(|v| v.to_string()).collect::<Vec<_>>().join(" "),
            Err(_) => String::new(),
        };
        let result = parsed
            .map_err(CliError::Parse)
            .and_then(|mu| eval_row(&ctx, args, out.len(), &mu));
        let mut r = EvalRow {
            row: out.len(),
            mu: text,
            status: "ok".into(),
            message: String::new(),
            theta_ms: f64::NAN,
            bubbles_ms: f64::NAN,
            schur_ms: f64::NAN,
            total_ms: f64::NAN,
            wall_s: 0.0,
            fom_error: f64::NAN,
        };
        match result {
            Ok((t, err)) => {
                r.theta_ms = t.theta_ms;
                r.bubbles_ms = t.bubbles_ms;
                r.schur_ms = t.schur_ms;
                r.total_ms = t.total_ms;
                r.fom_error = err;
            }
            Err(e) => {
                log::warn!("line {line}: {e}");
                r.status = "error".into();
                r.message = format!("line {line}: {e}");
            }
        }
        r.wall_s = start.elapsed().as_secs_f64();
        out.push(r);
    }
    match &args.out {
        Some(p) => write_csv(p, &out)?,
        None => {
            let mut w = csv::Writer::from_writer(std::io::stdout());
            for r in &out {
                w.serialize(r).map_err(|e| CliError::Parse(e.to_string()))?;
            }
            w.flush().map_err(|e| CliError::io(Path::new("<stdout>"), e))?;
        }
    }
    let failed = out.iter().filter(|r| r.status != "ok").count();
    if failed > 0 {
        return Err(CliError::Validation(format!("{failed} of {} rows failed", out.len())));
    }
    Ok(out)
}

pub fn fom(common: &Common, mu: &str, lattice: usize, out: Option<&Path>) -> CliResult<()> {
    let cfg = common.config()?;
    let loaded = load_model(&cfg.model)?;
    let mu = parse_mu(mu).map_err(CliError::Usage)?;
    let fom = Fom::new(loaded.model.clone(), loaded.source.clone());
    let sol = fom.solve(&mu)?;
    let text = field_text(&loaded, &mu, &sol.free(&loaded.model), lattice)?;
    match out {
        Some(p) => {
            std::fs::write(p, &text).map_err(|e| CliError::io(p, e))?;
            println!("field sha256 {}", sha256_hex(text.as_bytes()));
        }
        None => {
            std::io::stdout()
                .write_all(text.as_bytes())
                .map_err(|e| CliError::io(Path::new("<stdout>"), e))?;
        }
    }
    Ok(())
}
