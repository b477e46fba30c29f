//! The eight acceptance criteria, run in order with one verdict line each.

use std::f64::consts::{FRAC_1_SQRT_2, PI};
use std::path::{Path, PathBuf};
use std::process::Command;
use std::sync::Arc;

use igarom::eim::{
    affine_operator, train_eim_model, CoefficientKind, CoefficientSampler, EimBasis, EimOptions, PatchSampler,
};
use igarom::fom::{l2_error, Fom, Source};
use igarom::geometry::{
    benchmark_model, BenchmarkConfig, Face, MultipatchModel, ParameterSpace, ParameterizedPatch,
};
use igarom::numerics::{lhs_sample, CsrMatrix};
use igarom::rb::{greedy, pod, pod_size, AffineProblem, GreedyOptions};
use igarom::scrbe::{full_port_spaces, port_traces, ExactCondenser, PortSpace};
use igarom::splines::{ControlNet, GeometricMap, KnotVector, TensorBasis};
use igarom_cli::archive::Archive;
use igarom_cli::commands::{timed_online, Common};
use igarom_cli::config::RunConfig;
use igarom_cli::modelfile::{load_model, LoadedModel, ModelSpec};
use igarom_cli::pipeline::{self, TrainOutcome, Trained, ARCHIVE_NAME};

struct Verdict {
    pass: bool,
    detail: String,
}

fn verdict(pass: bool, detail: impl Into<String>) -> Verdict {
    Verdict {
        pass,
        detail: detail.into(),
    }
}

fn root() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../..")
}

fn benchmark_config() -> PathBuf {
    root().join("models/benchmark/config.toml")
}

fn x_rel(x: &CsrMatrix<f64>, u: &[f64], v: &[f64]) -> f64 {
    let d: Vec<f64> = u.iter().zip(v).map(|(a, b)| a - b).collect();
    (x.bilinear(&d, &d) / x.bilinear(u, u)).sqrt()
}

fn shifted_cube(x0: f64, degree: usize, elements: usize) -> GeometricMap<f64> {
    let m = GeometricMap::identity(2, degree, elements);
    let pts = m.net().points.iter().map(|p| [p[0] + x0, p[1], p[2]]).collect();
    m.with_points(pts).unwrap()
}

fn static_model(maps: Vec<GeometricMap<f64>>, dirichlet: Vec<Vec<Face>>) -> MultipatchModel<f64> {
    let n = maps.len();
    let patches = maps
        .into_iter()
        .zip(dirichlet)
        .map(|(m, d)| {
            let zero = vec![vec![[0.0; 3]; m.net().len()]];
            ParameterizedPatch::new(m, zero, d).unwrap()
        })
        .collect();
    let params = ParameterSpace::new(vec![0.0], vec![1.0], vec![vec![0]; n]).unwrap();
    MultipatchModel::new(patches, params).unwrap()
}

fn criterion_1() -> Verdict {
    // Partition of unity of a nonuniform cubic tensor basis.
    let kv = |k: Vec<f64>| KnotVector::new(k, 3).unwrap();
    let basis = TensorBasis::new(vec![
        kv(vec![0.0, 0.0, 0.0, 0.0, 0.2, 0.5, 0.5, 0.9, 1.0, 1.0, 1.0, 1.0]),
        kv(vec![0.0, 0.0, 0.0, 0.0, 0.3, 1.0, 1.0, 1.0, 1.0]),
        kv(vec![0.0, 0.0, 0.0, 0.0, 0.1, 0.4, 0.7, 1.0, 1.0, 1.0, 1.0]),
    ])
    .unwrap();
    let pts = lhs_sample(&[0.0; 3], &[1.0; 3], 2000, 3);
    let mut pou: f64 = 0.0;
    for xi in &pts {
        let e = basis.eval(xi).unwrap();
        pou = pou.max((e.values.iter().sum::<f64>() - 1.0).abs());
    }
    let model = benchmark_model::<f64>(&BenchmarkConfig::default()).unwrap();
    let mu = model.params().sample_lhs(1, 5).remove(0);
    let maps = model.instantiate_maps(&mu).unwrap();
    let sample = lhs_sample(&[0.02; 3], &[0.98; 3], 50, 8);
    for (map, xi) in maps.iter().flat_map(|m| sample.iter().map(move |x| (m, x))) {
        let r = map.rational_basis(xi).unwrap();
        pou = pou.max((r.values.iter().sum::<f64>() - 1.0).abs());
    }

    // Jacobians against central differences.
    let h = 1e-6;
    let mut fd_err: f64 = 0.0;
    for map in &maps {
        for xi in &sample {
            let j = map.jacobian(xi).unwrap();
            let scale = j.df.iter().flatten().fold(0.0f64, |a, v| a.max(v.abs()));
            for c in 0..3 {
                let (mut p, mut m) = (xi.clone(), xi.clone());
                p[c] += h;
                m[c] -= h;
                let (fp, fm) = (map.eval(&p).unwrap(), map.eval(&m).unwrap());
                for i in 0..3 {
                    let fd = (fp[i] - fm[i]) / (2.0 * h);
                    fd_err = fd_err.max((fd - j.df[i][c]).abs() / scale);
                }
            }
        }
    }

    // Knot insertion leaves the geometry unchanged and commutes with
    // instantiation.
    let mut ins: f64 = 0.0;
    for k in 0..model.n_patches() {
        let patch = model.patch(k);
        let refined = (0..3).fold(patch.clone(), |p, d| p.insert_knots(d, &[0.3, 0.55, 0.55]).unwrap());
        let local = model.params().local(k, &mu);
        let (a, b) = (patch.instantiate(&local).unwrap(), refined.instantiate(&local).unwrap());
        for xi in &sample {
            let (x, y) = (a.eval(xi).unwrap(), b.eval(xi).unwrap());
            ins = ins.max((0..3).map(|i| (x[i] - y[i]).abs()).fold(0.0, f64::max));
        }
    }

    // Quarter arc of the unit circle.
    let arc = GeometricMap::new(
        TensorBasis::new(vec![KnotVector::uniform(2, 1)]).unwrap(),
        ControlNet::new(vec![[1.0, 0.0, 0.0], [1.0, 1.0, 0.0], [0.0, 1.0, 0.0]], vec![1.0, FRAC_1_SQRT_2, 1.0]).unwrap(),
    )
    .unwrap();
    let mut radius: f64 = 0.0;
    for i in 0..=200 {
        let r = arc.rational_basis(&[i as f64 / 200.0]).unwrap();
        let (mut x, mut y) = (0.0, 0.0);
        for (&j, &v) in r.indices.iter().zip(&r.values) {
            x += v * arc.net().points[j][0];
            y += v * arc.net().points[j][1];
        }
        radius = radius.max(((x * x + y * y).sqrt() - 1.0).abs());
    }
    verdict(
        pou <= 1e-14 && fd_err <= 1e-6 && ins <= 1e-12 && radius <= 1e-12,
        format!("partition of unity {pou:.1e}, Jacobian vs FD {fd_err:.1e}, knot insertion {ins:.1e}, arc radius {radius:.1e}"),
    )
}

fn manufactured_rates(p: usize) -> Vec<f64> {
    let exact = |x: &[f64; 3]| (PI * x[0]).sin() * (PI * x[1]).sin();
    let f = Source::Custom(Arc::new(|x: &[f64; 3]| 2.0 * PI * PI * (PI * x[0]).sin() * (PI * x[1]).sin()));
    let errs: Vec<f64> = [4usize, 8, 16, 32]
        .iter()
        .map(|&e| {
            let model = static_model(
                vec![shifted_cube(0.0, p, e), shifted_cube(1.0, p, e)],
                vec![
                    vec![Face::new(0, 0), Face::new(1, 0), Face::new(1, 1)],
                    vec![Face::new(0, 1), Face::new(1, 0), Face::new(1, 1)],
                ],
            );
            let fom = Fom::new(model, f.clone());
            let sol = fom.solve(&[0.0]).unwrap();
            l2_error(&fom, &sol, exact).unwrap().0
        })
        .collect();
    errs.windows(2).map(|w| (w[0] / w[1]).log2()).collect()
}

/// Two `C⁰`-glued quadratic squares against one patch with a double knot.
fn glued_equivalence() -> f64 {
    let p = 2;
    let glued = static_model(vec![shifted_cube(0.0, p, 2), shifted_cube(1.0, p, 2)], vec![vec![], vec![]]);
    let kx = KnotVector::new(vec![0.0, 0.0, 0.0, 0.25, 0.5, 0.5, 0.75, 1.0, 1.0, 1.0], p).unwrap();
    let basis = TensorBasis::new(vec![kx, KnotVector::uniform(p, 2)]).unwrap();
    let n = basis.num_basis();
    let pts: Vec<_> = (0..n)
        .map(|i| {
            let m = basis.multi_index(i);
            [2.0 * basis.direction(0).greville(m[0]), basis.direction(1).greville(m[1]), 0.0]
        })
        .collect();
    let union = static_model(
        vec![GeometricMap::new(basis, ControlNet::new(pts.clone(), vec![1.0; n]).unwrap()).unwrap()],
        vec![vec![]],
    );
    let a = Fom::new(glued.clone(), Source::Constant(1.0)).assemble(&[0.0]).unwrap();
    let b = Fom::new(union, Source::Constant(1.0)).assemble(&[0.0]).unwrap();
    if a.dim() != n {
        return f64::INFINITY;
    }
    let mut perm = vec![usize::MAX; n];
    for k in 0..2 {
        for (i, q) in glued.patch(k).base_points().iter().enumerate() {
            let j = pts
                .iter()
                .position(|r| (r[0] - q[0]).abs() < 1e-12 && (r[1] - q[1]).abs() < 1e-12)
                .unwrap();
            perm[glued.dofs().global(k, i)] = j;
        }
    }
    let (da, db) = (a.matrix.to_dense(), b.matrix.to_dense());
    let mut worst: f64 = 0.0;
    for i in 0..n {
        worst = worst.max((a.rhs[i] - b.rhs[perm[i]]).abs());
        for j in 0..n {
            worst = worst.max((da[(i, j)] - db[(perm[i], perm[j])]).abs());
        }
    }
    worst
}

fn criterion_2() -> Verdict {
    let mut ok = true;
    let mut parts = Vec::new();
    for p in 1..=3 {
        let rates = manufactured_rates(p);
        ok &= rates.iter().all(|r| (r - (p + 1) as f64).abs() <= 0.3);
        let text: Vec<String> = rates.iter().map(|r| format!("{r:.2}")).collect();
        parts.push(format!("p={p} rates [{}]", text.join(", ")));
    }
    let glue = glued_equivalence();
    ok &= glue <= 1e-12;
    verdict(ok, format!("{}; glued vs single patch {glue:.1e}", parts.join(", ")))
}

/// Relative Frobenius distance on a shared sparsity pattern.
fn rel_frobenius(a: &CsrMatrix<f64>, b: &CsrMatrix<f64>) -> f64 {
    let d: f64 = a.values().iter().zip(b.values()).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt();
    d / b.frobenius_norm()
}

fn magic_exactness(basis: &EimBasis<f64>, sampler: &PatchSampler<f64>, mu: &[f64]) -> f64 {
    let g = sampler.sample(mu).unwrap();
    let scale = g.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    let at: Vec<f64> = basis.magic.iter().map(|&t| g[t]).collect();
    let ig = basis.interpolate(&basis.coefficients(&at));
    basis.magic.iter().map(|&t| (ig[t] - g[t]).abs() / scale).fold(0.0, f64::max)
}

fn criterion_3(fom: &Fom<f64>, cfg: &RunConfig, t: &Trained) -> Verdict {
    let counts = t.eim.term_counts();
    let m_alpha = counts.iter().map(|c| c.0).max().unwrap();
    let m_f = counts.iter().map(|c| c.1).max().unwrap();
    let test_max = t
        .eim_test
        .iter()
        .flat_map(|(a, f)| [a.last().copied().unwrap_or(1.0), f.last().copied().unwrap_or(1.0)])
        .fold(0.0, f64::max);
    let eps = cfg.tolerances.eim;
    let (mut exact, mut op_err): (f64, f64) = (0.0, 0.0);
    for (k, p) in t.eim.patches.iter().enumerate() {
        let pa = fom.assembler().patch(k);
        let sampler = |kind| PatchSampler {
            kind,
            quad: pa.quadrature(),
            patch: fom.model().patch(k),
            source: fom.source(),
        };
        let terms = igarom::eim::assemble_affine_terms(pa, &p.alpha, &p.force);
        for mu in fom.model().params().sample_local_lhs(k, 5, 40 + k as u64) {
            exact = exact.max(magic_exactness(&p.alpha, &sampler(CoefficientKind::Diffusion), &mu));
            exact = exact.max(magic_exactness(&p.force, &sampler(CoefficientKind::Source), &mu));
            let (ta, tf) = p.theta(&mu).unwrap();
            let a = CsrMatrix::linear_combination(&ta, &terms.a.iter().collect::<Vec<_>>()).unwrap();
            let mut f = vec![0.0; terms.f[0].len()];
            for (c, v) in tf.iter().zip(&terms.f) {
                f.iter_mut().zip(v).for_each(|(o, x)| *o += c * x);
            }
            let (da, df) = pa.assemble(&fom.model().patch(k).points(&mu), fom.source(), &mu).unwrap();
            let fe: f64 = f.iter().zip(&df).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt();
            let fn_: f64 = df.iter().map(|x| x * x).sum::<f64>().sqrt();
            op_err = op_err.max(rel_frobenius(&a, &da)).max(fe / fn_);
        }
    }
    verdict(
        exact <= 1e-13 && op_err <= 10.0 * eps && m_alpha <= 60 && m_f <= 30 && test_max <= 1e-6,
        format!(
            "M_alpha/M_f per patch {counts:?}, test max error {test_max:.1e}, magic-point exactness {exact:.1e}, \
             affine vs direct {op_err:.1e} (limit {:.0e})",
            10.0 * eps
        ),
    )
}

fn criterion_4(fom3: &Fom<f64>) -> Verdict {
    // RB on the EIM-affine 2D benchmark.
    let cfg = BenchmarkConfig {
        dim: 2,
        elements: [6, 6, 1],
        ..Default::default()
    };
    let fom = Fom::new(benchmark_model(&cfg).unwrap(), Source::Monomial { scale: 2.0 });
    let eim = train_eim_model(&fom, 100, 3, &EimOptions { tol: 1e-8, ..Default::default() }).unwrap();
    let p = AffineProblem::new(affine_operator(&fom, Arc::new(eim)), fom.metric().unwrap()).unwrap();
    let train = fom.model().params().sample_lhs(100, 21);
    let (space, trace) = greedy(&p, &train, &GreedyOptions { tol: 1e-6, ..Default::default() }).unwrap();
    let mut repro: f64 = 0.0;
    for &i in &trace.selected {
        let (ta, tf) = p.theta(&train[i]).unwrap();
        let u = p.solve(&train[i]).unwrap();
        let r = space.reconstruct(&space.solve(&ta, &tf).unwrap().coefficients);
        repro = repro.max(x_rel(&p.metric, &u, &r));
    }
    let mut riesz: f64 = 0.0;
    for mu in fom.model().params().sample_lhs(5, 17) {
        let (ta, tf) = p.theta(&mu).unwrap();
        for n in 0..=space.len() {
            let sol = space.solve_truncated(&ta, &tf, n).unwrap();
            let direct = p.dual_residual(&ta, &tf, &space.reconstruct(&sol.coefficients)).unwrap();
            riesz = riesz.max((sol.estimator - direct).abs() / direct);
        }
    }

    // POD size against the cumulative-energy oracle: port traces of the 3D
    // benchmark and a family of synthetic spectra.
    let oracle = |s: &[f64], tol: f64| {
        let total: f64 = s.iter().map(|v| v * v).sum();
        let mut acc = 0.0;
        for (n, v) in s.iter().enumerate() {
            acc += v * v;
            if 1.0 - acc / total <= tol {
                return n + 1;
            }
        }
        s.len()
    };
    let mut mismatches = 0;
    let mut cases = 0;
    let traces = port_traces(fom3, &fom3.model().params().sample_lhs(25, 1)).unwrap();
    let mu_ref = fom3.reference_mu();
    for (port, snaps) in traces.iter().enumerate() {
        let m = igarom::fom::port_mass(fom3.model(), port, &mu_ref).unwrap();
        let factor = igarom::numerics::SparseCholesky::factor(&CsrMatrix::from_dense(&m)).unwrap();
        for tol in [1e-2, 1e-4, 1e-6, 1e-8, 1e-10, 1e-12] {
            let r = pod(snaps, &factor, tol).unwrap();
            cases += 1;
            mismatches += usize::from(r.len() != oracle(&r.sigma, tol));
        }
    }
    for (i, row) in lhs_sample(&[-8.0; 10], &[0.0; 10], 500, 4).iter().enumerate() {
        let mut s: Vec<f64> = row.iter().map(|e| 10f64.powf(*e)).collect();
        s.sort_by(|a, b| b.total_cmp(a));
        let tol = 10f64.powf(-1.0 - (i % 10) as f64);
        cases += 1;
        mismatches += usize::from(pod_size(&s, tol) != oracle(&s, tol));
    }
    verdict(
        repro <= 1e-9 && riesz <= 1e-8 && mismatches == 0,
        format!(
            "N = {}, snapshot reproduction {repro:.1e}, Riesz vs direct {riesz:.1e}, POD size mismatches {mismatches}/{cases}",
            space.len()
        ),
    )
}

fn criterion_5(fom: &Fom<f64>) -> Verdict {
    let cond = ExactCondenser::new(fom, &full_port_spaces(fom)).unwrap();
    let x = fom.metric().unwrap();
    let mut worst: f64 = 0.0;
    for mu in fom.model().params().sample_lhs(5, 8) {
        let s = cond.solve(&mu).unwrap();
        let u = fom.assemble(&mu).unwrap().solve().unwrap();
        worst = worst.max(x_rel(&x, &u, &s.free(fom)));
    }
    verdict(worst <= 1e-9, format!("{} free DOFs, max relative X error {worst:.1e} over 5 parameters", fom.n_free()))
}

fn criterion_6(cfg: &RunConfig, t: &Trained) -> Verdict {
    let decades: Vec<f64> = t
        .ports
        .iter()
        .map(|p: &PortSpace<f64>| {
            let s = &p.sigma[..p.sigma.len().min(25)];
            (s[0] / s[s.len() - 1]).log10()
        })
        .collect();
    let worst = t.test_errors.iter().copied().fold(0.0, f64::max);
    let modes: Vec<usize> = t.ports.iter().map(PortSpace::len).collect();
    verdict(
        decades.iter().all(|d| *d >= 4.0) && worst <= 1e-4 && t.test_errors.len() == cfg.sizes.test,
        format!(
            "sigma decay per port {:?} decades, modes kept {modes:?}, max relative X error {worst:.1e} over {} parameters",
            decades.iter().map(|d| (d * 10.0).round() / 10.0).collect::<Vec<_>>(),
            t.test_errors.len()
        ),
    )
}

/// Trains with fixed reduced dimensions on the benchmark at `elements`.
fn fixed_size_rom(elements: [usize; 3], dir: &Path) -> (Trained, usize) {
    let spec = ModelSpec::parse(&format!(
        "[source]\nkind = \"monomial\"\nscale = 2.0\n[benchmark]\nelements = {:?}\n",
        elements
    ))
    .unwrap();
    let loaded: LoadedModel = spec.build(Path::new(".")).unwrap();
    let n = loaded.model.n_free();
    let text = format!(
        "output = {:?}\n[tolerances]\neim = 1e-14\ngreedy = 1e-14\n\
         [sizes]\neim_train = 40\ntrain = 40\nport_snapshots = 12\nport_modes_max = 3\n\
         eim_max_terms = 10\ngreedy_max = 4\neim_test = 1\ntest = 1\n",
        dir
    );
    let cfg = RunConfig::from_toml(&text, &[]).unwrap();
    match pipeline::train(&cfg, &loaded, None, false).unwrap() {
        TrainOutcome::Done(t) => (*t, n),
        TrainOutcome::Stopped(_) => unreachable!(),
    }
}

fn criterion_7() -> Verdict {
    let tmp = tempfile::tempdir().unwrap();
    let (coarse, n_coarse) = fixed_size_rom([4, 4, 4], &tmp.path().join("coarse"));
    let (fine, n_fine) = fixed_size_rom([8, 8, 4], &tmp.path().join("fine"));
    let dims = |t: &Trained| {
        (
            t.ports.iter().map(PortSpace::len).collect::<Vec<_>>(),
            t.eim.term_counts(),
            t.scrbe.basis_sizes(),
        )
    };
    let same = dims(&coarse) == dims(&fine);
    let mu = coarse.scrbe.params.midpoint();
    let (mut tc, mut tf) = (Vec::new(), Vec::new());
    for _ in 0..7 {
        tc.push(timed_online(&coarse.scrbe, &mu, 100).unwrap().1.total_ms);
        tf.push(timed_online(&fine.scrbe, &mu, 100).unwrap().1.total_ms);
    }
    let (mc, mf) = (pipeline::median(&mut tc), pipeline::median(&mut tf));
    let change = (mf - mc).abs() / mc;
    verdict(
        same && change <= 0.2,
        format!(
            "FOM {n_coarse} -> {n_fine} free DOFs at equal ROM sizes ({same}); online median {mc:.3} ms -> {mf:.3} ms, \
             change {:.1}%",
            100.0 * change
        ),
    )
}

fn criterion_8(first: &Path, config: &Path, dir: &Path) -> Verdict {
    let status = Command::new(env!("CARGO_BIN_EXE_igarom"))
        .args(["train", "-c"])
        .arg(config)
        .arg("-s")
        .arg(format!("output={:?}", dir.display().to_string()))
        .output()
        .unwrap();
    if !status.status.success() {
        return verdict(false, format!("second run failed: {}", String::from_utf8_lossy(&status.stderr)));
    }
    let a = Archive::read(&first.join(ARCHIVE_NAME)).unwrap();
    let b = Archive::read(&dir.join(ARCHIVE_NAME)).unwrap();
    let (ba, bb) = (a.deterministic_bytes().unwrap(), b.deterministic_bytes().unwrap());
    let timing_differs = a.section("timing") != b.section("timing");
    verdict(
        ba == bb,
        format!(
            "{} bytes excluding timing, identical: {}; timing sections differ: {timing_differs}",
            ba.len(),
            ba == bb
        ),
    )
}

#[test]
fn acceptance_criteria() {
    let tmp = tempfile::tempdir().unwrap();
    let config = benchmark_config();
    let run1 = tmp.path().join("run1");
    let common = Common {
        config: Some(config.clone()),
        model: None,
        overrides: vec![format!("output={:?}", run1.display().to_string())],
    };
    let cfg = common.config().unwrap();
    let loaded = load_model(&cfg.model).unwrap();
    let fom = Fom::new(loaded.model.clone(), loaded.source.clone());

    let mut results: Vec<(usize, &str, Verdict)> = Vec::new();
    let mut record = |id, name, v: Verdict| {
        println!("criterion {id} [{}] {name}: {}", if v.pass { "PASS" } else { "FAIL" }, v.detail);
        results.push((id, name, v));
    };
    record(1, "spline kernel", criterion_1());
    record(2, "FOM correctness", criterion_2());
    let trained = igarom_cli::commands::train(&common, None, false).unwrap().unwrap();
    record(3, "EIM", criterion_3(&fom, &cfg, &trained));
    record(4, "RB and greedy", criterion_4(&fom));
    record(5, "SCRBE master consistency", criterion_5(&fom));
    record(6, "port reduction", criterion_6(&cfg, &trained));
    record(7, "online scaling", criterion_7());
    record(8, "determinism", criterion_8(&run1, &config, &tmp.path().join("run2")));

    let failed: Vec<usize> = results.iter().filter(|r| !r.2.pass).map(|r| r.0).collect();
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}
