mod common;

use std::f64::consts::PI;
use std::sync::Arc;

use common::{shifted_cube, static_model};
use igarom::eim::{
    affine_operator, assemble_affine_terms, eim_error_report, eim_train, patch_train_set, train_patch,
    CoefficientKind, CoefficientSampler, EimOptions, EimStop, PatchSampler,
};
use igarom::fom::{Fom, Source};
use igarom::geometry::{benchmark_model, BenchmarkConfig, Face};
use igarom::Result;

/// `μ₁ sin(πξ) + μ₂ cos(πξ)` on a fixed grid of ξ.
struct TwoTerm {
    xi: Vec<f64>,
}

impl CoefficientSampler<f64> for TwoTerm {
    fn n_candidates(&self) -> usize {
        self.xi.len()
    }

    fn sample(&self, mu: &[f64]) -> Result<Vec<f64>> {
        Ok(self.xi.iter().map(|&x| mu[0] * (PI * x).sin() + mu[1] * (PI * x).cos()).collect())
    }
}

fn two_term() -> (TwoTerm, Vec<Vec<f64>>) {
    let xi = (0..101).map(|i| i as f64 / 100.0).collect();
    let mut train = Vec::new();
    for i in 0..5 {
        for j in 0..5 {
            train.push(vec![1.0 + i as f64 * 0.5, -1.0 + j as f64 * 0.5]);
        }
    }
    (TwoTerm { xi }, train)
}

#[test]
fn two_dimensional_family_is_exhausted_after_two_terms() {
    let (s, train) = two_term();
    let b = eim_train(&s, &train, &EimOptions { tol: 1e-16, ..Default::default() }).unwrap();
    assert_eq!(b.len(), 2);
    assert_eq!(b.stop, EimStop::Exhausted);
    assert!(*b.history.last().unwrap() <= 1e-14);
    // Unit lower triangular interpolation matrix.
    assert_eq!(b.b[(0, 0)], 1.0);
    assert_eq!(b.b[(1, 1)], 1.0);
    assert_eq!(b.b[(0, 1)], 0.0);
    assert_ne!(b.magic[0], b.magic[1]);
    for mu in [[0.3, 2.2], [-1.7, 0.4], [5.0, -3.0]] {
        let g = s.sample(&mu).unwrap();
        let at: Vec<f64> = b.magic.iter().map(|&t| g[t]).collect();
        let ig = b.interpolate(&b.coefficients(&at));
        let err = g.iter().zip(&ig).map(|(a, c)| (a - c).abs()).fold(0.0, f64::max);
        assert!(err <= 1e-13, "error {err}");
    }
    let rep = eim_error_report(&b, &s, &train).unwrap();
    assert!(rep.max <= 1e-13);
}

#[test]
fn first_basis_function_has_unit_coefficient() {
    let (s, train) = two_term();
    let b = eim_train(&s, &train, &EimOptions { tol: 1e-16, ..Default::default() }).unwrap();
    let at: Vec<f64> = b.magic.iter().map(|&t| b.phi[0][t]).collect();
    let theta = b.coefficients(&at);
    assert!((theta[0] - 1.0).abs() < 1e-15 && theta[1].abs() < 1e-15);
}

#[test]
fn constant_family_needs_one_term() {
    struct Constant;
    impl CoefficientSampler<f64> for Constant {
        fn n_candidates(&self) -> usize {
            7
        }
        fn sample(&self, _: &[f64]) -> Result<Vec<f64>> {
            Ok(vec![1.0, 2.0, -3.0, 0.5, 0.0, 1.0, 2.0])
        }
    }
    let train: Vec<Vec<f64>> = (0..10).map(|i| vec![i as f64]).collect();
    let b = eim_train(&Constant, &train, &EimOptions::default()).unwrap();
    assert_eq!(b.len(), 1);
    assert_eq!(b.magic, vec![2]);
    assert_eq!(b.history, vec![0.0]);
}

#[test]
fn disk_backed_training_matches_memory() {
    let (s, train) = two_term();
    let opts = EimOptions { tol: 1e-16, ..Default::default() };
    let a = eim_train(&s, &train, &opts).unwrap();
    let b = eim_train(&s, &train, &EimOptions { memory_budget: 0, ..opts }).unwrap();
    assert_eq!(a.magic, b.magic);
    assert_eq!(a.phi, b.phi);
}

#[test]
fn identity_geometry_needs_single_diffusion_term() {
    let model = static_model(
        vec![shifted_cube(2, 0.0, 2, 3)],
        vec![Face::all(2).collect()],
    );
    let fom = Fom::new(model, Source::Constant(1.0));
    let train = patch_train_set(&fom, 0, 10, 1);
    let p = train_patch(&fom, 0, &train, &EimOptions::default()).unwrap();
    // Δ in 2D has components (1, 0, 1); the zero off-diagonal needs no term.
    assert_eq!(p.alpha.len(), 1);
    assert_eq!(p.force.len(), 1);
    let terms = assemble_affine_terms(fom.assembler().patch(0), &p.alpha, &p.force);
    let (ta, _) = p.theta(&[0.5]).unwrap();
    let direct = fom.assemble(&[0.5]).unwrap().matrix;
    for (a, b) in terms.a[0].values().iter().zip(direct.values()) {
        assert!((ta[0] * a - b).abs() < 1e-13);
    }
}

fn rel_frobenius(a: &igarom::numerics::CsrMatrix<f64>, b: &igarom::numerics::CsrMatrix<f64>) -> f64 {
    let d: f64 = a.values().iter().zip(b.values()).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt();
    d / b.frobenius_norm()
}

/// Benchmark with the paper's tolerance and training size on a coarser mesh
/// so the full EIM pipeline stays quick.
#[test]
fn benchmark_affine_reconstruction() {
    let cfg = BenchmarkConfig { elements: [2, 2, 2], ..Default::default() };
    let fom = Fom::new(benchmark_model(&cfg).unwrap(), Source::Monomial { scale: 2.0 });
    let opts = EimOptions { tol: 1e-7, ..Default::default() };
    let mut patches = Vec::new();
    for k in 0..4 {
        let train = patch_train_set(&fom, k, 250, 11);
        let p = train_patch(&fom, k, &train, &opts).unwrap();
        assert!(p.alpha.history.windows(2).all(|w| w[1] <= w[0]));
        assert!(p.alpha.len() >= 5 && p.alpha.len() <= 100, "M_alpha = {}", p.alpha.len());
        let sampler = PatchSampler {
            kind: CoefficientKind::Diffusion,
            quad: fom.assembler().patch(k).quadrature(),
            patch: fom.model().patch(k),
            source: fom.source(),
        };
        let rep = eim_error_report(&p.alpha, &sampler, &train).unwrap();
        assert!(rep.max <= 1e-7);
        let test = fom.model().params().sample_local_lhs(k, 100, 99);
        let rep = eim_error_report(&p.alpha, &sampler, &test).unwrap();
        assert!(rep.max <= 1e-6, "test max {}", rep.max);
        patches.push(p);
    }
    let eim = Arc::new(igarom::eim::EimModel::new(&fom, patches));
    let op = affine_operator(&fom, eim);
    for mu in fom.model().params().sample_lhs(5, 5) {
        let direct = fom.assemble(&mu).unwrap();
        let (a, f) = op.assemble(&mu).unwrap();
        assert!(rel_frobenius(&a, &direct.matrix) <= 1e-6);
        let df: f64 = f.iter().zip(&direct.rhs).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt();
        let nf: f64 = direct.rhs.iter().map(|x| x * x).sum::<f64>().sqrt();
        assert!(df / nf <= 1e-6);
        assert!(a.asymmetry() <= 1e-12);
    }
}
