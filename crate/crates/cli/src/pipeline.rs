//! Offline stages with on-disk checkpoints: ports, EIM, bubbles, then the
//! test-set check and the final archive.

use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::sync::Arc;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use igarom::eim::{eim_error_curve, patch_train_set, train_eim_model, CoefficientKind, EimModel, EimOptions, PatchSampler};
use igarom::fom::Fom;
use igarom::rb::GreedyOptions;
use igarom::scrbe::{build_port_modes, train_scrbe, PortSpace, ScrbeModel, ScrbeOptions};

use crate::archive::{Archive, VOLATILE_SECTION};
use crate::codec::{decode_eim, decode_ports, decode_scrbe, encode_bubbles, encode_eim, encode_ports, Decoder, Encoder};
use crate::config::RunConfig;
use crate::modelfile::LoadedModel;
use crate::{CliError, CliResult, TOOL};

pub const ARCHIVE_NAME: &str = "rom.igarom";
pub const CHECKPOINT_DIR: &str = "checkpoint";

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum Stage {
    Ports,
    Eim,
    Bubbles,
}

impl Stage {
    pub const ALL: [Stage; 3] = [Stage::Ports, Stage::Eim, Stage::Bubbles];

    pub fn name(self) -> &'static str {
        match self {
            Stage::Ports => "ports",
            Stage::Eim => "eim",
            Stage::Bubbles => "bubbles",
        }
    }
}

impl FromStr for Stage {
    type Err = CliError;

    fn from_str(s: &str) -> CliResult<Self> {
        Stage::ALL
            .into_iter()
            .find(|st| st.name() == s)
            .ok_or_else(|| CliError::Usage(format!("unknown stage `{s}` (expected ports, eim or bubbles)")))
    }
}

/// Wall-clock seconds per stage and the median online solve time.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Timing {
    pub ports_s: f64,
    pub eim_s: f64,
    pub bubbles_s: f64,
    pub test_s: f64,
    pub online_median_ms: f64,
}

/// Test-set EIM error against the number of terms, `(alpha, force)` per patch.
pub type ErrorCurves = Vec<(Vec<f64>, Vec<f64>)>;

/// Everything produced by training.
#[derive(Clone)]
pub struct Trained {
    pub ports: Vec<PortSpace<f64>>,
    pub eim: Arc<EimModel<f64>>,
    pub eim_test: ErrorCurves,
    pub scrbe: ScrbeModel<f64>,
    pub test_mus: Vec<Vec<f64>>,
    /// Relative `X`-norm errors against the FOM on `test_mus`.
    pub test_errors: Vec<f64>,
    pub timing: Timing,
}

pub enum TrainOutcome {
    Stopped(Stage),
    Done(Box<Trained>),
}

fn timing_bytes(t: &Timing) -> Vec<u8> {
    toml::to_string(t).expect("timing serializes").into_bytes()
}

fn read_timing(a: &Archive) -> Timing {
    a.section(VOLATILE_SECTION)
        .and_then(|b| std::str::from_utf8(b).ok())
        .and_then(|s| toml::from_str(s).ok())
        .unwrap_or_default()
}

fn encode_eim_test(curves: &[(Vec<f64>, Vec<f64>)]) -> Vec<u8> {
    let mut e = Encoder::new();
    e.usize(curves.len());
    for (a, f) in curves {
        e.f64s(a);
        e.f64s(f);
    }
    e.finish()
}

fn decode_eim_test(bytes: &[u8]) -> CliResult<ErrorCurves> {
    let mut d = Decoder::new(bytes);
    let n = d.usize()?;
    (0..n).map(|_| Ok((d.f64s()?, d.f64s()?))).collect()
}

fn encode_test(mus: &[Vec<f64>], errors: &[f64]) -> Vec<u8> {
    let mut e = Encoder::new();
    e.vecs(mus);
    e.f64s(errors);
    e.finish()
}

fn decode_test(bytes: &[u8]) -> CliResult<(Vec<Vec<f64>>, Vec<f64>)> {
    let mut d = Decoder::new(bytes);
    Ok((d.vecs()?, d.f64s()?))
}

fn eim_options(cfg: &RunConfig) -> EimOptions {
    EimOptions {
        tol: cfg.tolerances.eim,
        max_terms: cfg.sizes.eim_max_terms,
        memory_budget: cfg.memory_budget,
    }
}

pub fn scrbe_options(cfg: &RunConfig) -> ScrbeOptions {
    ScrbeOptions {
        greedy: GreedyOptions {
            tol: cfg.tolerances.greedy,
            n_max: cfg.sizes.greedy_max,
            relative: true,
        },
        n_train: cfg.sizes.train,
        seed: cfg.seeds.bubbles,
    }
}

/// Port modes from `port_snapshots` FOM solves.
pub fn port_stage(fom: &Fom<f64>, cfg: &RunConfig) -> CliResult<Vec<PortSpace<f64>>> {
    let ports = build_port_modes(fom, cfg.sizes.port_snapshots, cfg.tolerances.pod, cfg.seeds.ports)?;
    Ok(match cfg.sizes.port_modes_max {
        0 => ports,
        n => ports.iter().map(|p| p.truncated(n)).collect(),
    })
}

/// EIM training and test-set error curves for every patch.
pub fn eim_stage(fom: &Fom<f64>, cfg: &RunConfig) -> CliResult<(EimModel<f64>, ErrorCurves)> {
    let eim = train_eim_model(fom, cfg.sizes.eim_train, cfg.seeds.eim, &eim_options(cfg))?;
    let curves = (0..fom.model().n_patches())
        .map(|k| {
            let test = patch_train_set(fom, k, cfg.sizes.eim_test, cfg.seeds.test);
            let sampler = |kind| PatchSampler {
                kind,
                quad: fom.assembler().patch(k).quadrature(),
                patch: fom.model().patch(k),
                source: fom.source(),
            };
            let p = &eim.patches[k];
            Ok((
                eim_error_curve(&p.alpha, &sampler(CoefficientKind::Diffusion), &test)?,
                eim_error_curve(&p.force, &sampler(CoefficientKind::Source), &test)?,
            ))
        })
        .collect::<CliResult<_>>()?;
    Ok((eim, curves))
}

/// Relative `X`-norm error of the reduced solution against the FOM at each
/// parameter. Needs the reconstruction data.
pub fn test_errors(fom: &Fom<f64>, rom: &ScrbeModel<f64>, mus: &[Vec<f64>]) -> CliResult<Vec<f64>> {
    let x = fom.metric()?;
    mus.par_iter()
        .map(|mu| {
            let u = fom.assemble(mu)?.solve()?;
            let r = rom.reconstruct(&rom.solve(mu)?)?.free(fom);
            let d: Vec<f64> = u.iter().zip(&r).map(|(a, b)| a - b).collect();
            Ok((x.bilinear(&d, &d) / x.bilinear(&u, &u)).sqrt())
        })
        .collect()
}

/// Median wall time in milliseconds of `reps` online solves at `mu`.
pub fn median_online_ms(rom: &ScrbeModel<f64>, mu: &[f64], reps: usize) -> CliResult<f64> {
    let mut t = Vec::with_capacity(reps);
    for _ in 0..reps.max(1) {
        let start = Instant::now();
        std::hint::black_box(rom.solve(std::hint::black_box(mu))?);
        t.push(start.elapsed().as_secs_f64() * 1e3);
    }
    Ok(median(&mut t))
}

pub fn median(v: &mut [f64]) -> f64 {
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n == 0 {
        f64::NAN
    } else if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

struct Checkpoints {
    dir: PathBuf,
    hash: String,
    key: String,
}

impl Checkpoints {
    fn path(&self, s: Stage) -> PathBuf {
        self.dir.join(format!("{}.ckpt", s.name()))
    }

    fn load(&self, s: Stage) -> CliResult<Option<Archive>> {
        let path = self.path(s);
        if !path.exists() {
            return Ok(None);
        }
        let a = Archive::read(&path)?;
        if a.manifest.model_hash != self.hash || a.manifest.config != self.key {
            return Err(CliError::Validation(format!(
                "{} was written for a different model or configuration",
                path.display()
            )));
        }
        Ok(Some(a))
    }

    fn save(&self, s: Stage, sections: Vec<(&str, Vec<u8>)>, seconds: f64) -> CliResult<()> {
        std::fs::create_dir_all(&self.dir).map_err(|e| CliError::io(&self.dir, e))?;
        let mut a = Archive::new(TOOL, &self.hash, &self.key);
        for (n, b) in sections {
            a.insert(n, b);
        }
        let t = toml::to_string(&StageTime { seconds }).expect("timing serializes");
        a.insert(VOLATILE_SECTION, t.into_bytes());
        a.write(&self.path(s))
    }
}

#[derive(Serialize, Deserialize, Default)]
#[serde(default)]
struct StageTime {
    seconds: f64,
}

fn stage_seconds(a: &Archive) -> f64 {
    a.section(VOLATILE_SECTION)
        .and_then(|b| std::str::from_utf8(b).ok())
        .and_then(|s| toml::from_str::<StageTime>(s).ok())
        .map_or(0.0, |t| t.seconds)
}

/// Runs the offline stages. With `resume`, stages whose checkpoint exists
/// are loaded instead of recomputed.
pub fn train(cfg: &RunConfig, loaded: &LoadedModel, stop_after: Option<Stage>, resume: bool) -> CliResult<TrainOutcome> {
    let fom = Fom::new(loaded.model.clone(), loaded.source.clone());
    let ck = Checkpoints {
        dir: cfg.output.join(CHECKPOINT_DIR),
        hash: loaded.hash.clone(),
        key: cfg.training_key(),
    };
    let mut timing = Timing::default();
    let cached = |s: Stage| if resume { ck.load(s) } else { Ok(None) };

    let ports = match cached(Stage::Ports)? {
        Some(a) => {
            timing.ports_s = stage_seconds(&a);
            decode_ports(a.require("ports")?)?
        }
        None => {
            let t0 = Instant::now();
            let ports = port_stage(&fom, cfg)?;
            timing.ports_s = t0.elapsed().as_secs_f64();
            ck.save(Stage::Ports, vec![("ports", encode_ports(&ports))], timing.ports_s)?;
            ports
        }
    };
    log::info!("ports: {:?} modes", ports.iter().map(PortSpace::len).collect::<Vec<_>>());
    if stop_after == Some(Stage::Ports) {
        return Ok(TrainOutcome::Stopped(Stage::Ports));
    }

    let (eim, eim_test) = match cached(Stage::Eim)? {
        Some(a) => {
            timing.eim_s = stage_seconds(&a);
            (decode_eim(a.require("eim")?)?, decode_eim_test(a.require("eim_test")?)?)
        }
        None => {
            let t0 = Instant::now();
            let (eim, curves) = eim_stage(&fom, cfg)?;
            timing.eim_s = t0.elapsed().as_secs_f64();
            ck.save(
                Stage::Eim,
                vec![("eim", encode_eim(&eim, true)?), ("eim_test", encode_eim_test(&curves))],
                timing.eim_s,
            )?;
            (eim, curves)
        }
    };
    log::info!("EIM terms (alpha, force): {:?}", eim.term_counts());
    let eim = Arc::new(eim);
    if stop_after == Some(Stage::Eim) {
        return Ok(TrainOutcome::Stopped(Stage::Eim));
    }

    let scrbe = match cached(Stage::Bubbles)? {
        Some(a) => {
            timing.bubbles_s = stage_seconds(&a);
            decode_scrbe(a.require("bubbles")?, eim.clone(), &ports)?
        }
        None => {
            let t0 = Instant::now();
            let scrbe = train_scrbe(&fom, eim.clone(), &ports, &scrbe_options(cfg))?;
            timing.bubbles_s = t0.elapsed().as_secs_f64();
            ck.save(Stage::Bubbles, vec![("bubbles", encode_bubbles(&scrbe))], timing.bubbles_s)?;
            scrbe
        }
    };
    log::info!("bubble sizes: {:?}", scrbe.basis_sizes());
    if stop_after == Some(Stage::Bubbles) {
        return Ok(TrainOutcome::Stopped(Stage::Bubbles));
    }

    let t0 = Instant::now();
    let test_mus = loaded.model.params().sample_lhs(cfg.sizes.test, cfg.seeds.test);
    let errors = test_errors(&fom, &scrbe, &test_mus)?;
    timing.test_s = t0.elapsed().as_secs_f64();
    timing.online_median_ms = median_online_ms(&scrbe, &loaded.model.params().midpoint(), 20)?;
    let mut scrbe = scrbe;
    if !cfg.store_bases {
        scrbe.strip_bases();
    }
    Ok(TrainOutcome::Done(Box::new(Trained {
        ports,
        eim,
        eim_test,
        scrbe,
        test_mus,
        test_errors: errors,
        timing,
    })))
}

/// Final archive of a trained model.
pub fn to_archive(cfg: &RunConfig, loaded: &LoadedModel, t: &Trained) -> CliResult<Archive> {
    let mut a = Archive::new(TOOL, &loaded.hash, &cfg.training_key());
    a.insert("ports", encode_ports(&t.ports));
    a.insert("eim", encode_eim(&t.eim, false)?);
    a.insert("eim_test", encode_eim_test(&t.eim_test));
    a.insert("bubbles", encode_bubbles(&t.scrbe));
    a.insert("test", encode_test(&t.test_mus, &t.test_errors));
    a.insert(VOLATILE_SECTION, timing_bytes(&t.timing));
    Ok(a)
}

pub fn from_archive(a: &Archive) -> CliResult<Trained> {
    let ports = decode_ports(a.require("ports")?)?;
    let eim = Arc::new(decode_eim(a.require("eim")?)?);
    let scrbe = decode_scrbe(a.require("bubbles")?, eim.clone(), &ports)?;
    let (test_mus, test_errors) = decode_test(a.require("test")?)?;
    Ok(Trained {
        eim_test: decode_eim_test(a.require("eim_test")?)?,
        ports,
        eim,
        scrbe,
        test_mus,
        test_errors,
        timing: read_timing(a),
    })
}

/// Loads an archive and checks that it was trained for `loaded`.
pub fn load_archive(path: &Path, loaded: &LoadedModel) -> CliResult<(Archive, Trained)> {
    let a = Archive::read(path)?;
    if a.manifest.model_hash != loaded.hash {
        return Err(CliError::Validation(format!(
            "{} was trained for a different model (hash {}, model has {})",
            path.display(),
            a.manifest.model_hash,
            loaded.hash
        )));
    }
    let t = from_archive(&a)?;
    Ok((a, t))
}
