mod common;

use std::f64::consts::PI;
use std::sync::Arc;

use common::{all_faces, segment, shifted_cube, static_model};
use igarom::fom::{l2_error, Fom, PatchAssembler, PatchQuadrature, Source};
use igarom::geometry::{benchmark_model, BenchmarkConfig, Face};
use igarom::numerics::{Mat, SparseCholesky};
use igarom::splines::{GeometricMap, KnotVector, TensorBasis, ControlNet};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn unconstrained(map: &GeometricMap<f64>) -> PatchAssembler<f64> {
    PatchAssembler::new(PatchQuadrature::new(map), &vec![true; map.net().len()])
}

fn kron(a: &[[f64; 2]; 2], b: &[[f64; 2]; 2]) -> Mat<f64> {
    // Index i + 2j: first factor acts on the first direction.
    let mut m = Mat::zeros(4, 4);
    for i in 0..2 {
        for j in 0..2 {
            for k in 0..2 {
                for l in 0..2 {
                    m[(i + 2 * j, k + 2 * l)] = a[i][k] * b[j][l];
                }
            }
        }
    }
    m
}

const K1: [[f64; 2]; 2] = [[1.0, -1.0], [-1.0, 1.0]];
const M1: [[f64; 2]; 2] = [[1.0 / 3.0, 1.0 / 6.0], [1.0 / 6.0, 1.0 / 3.0]];

#[test]
fn bilinear_laplacian_stencil() {
    let map = GeometricMap::identity(2, 1, 1);
    let pa = unconstrained(&map);
    let (a, _) = pa.assemble(&map.net().points, &Source::Constant(1.0), &[]).unwrap();
    let d = a.to_dense();
    for i in 0..4 {
        for j in 0..4 {
            let expected = if i == j {
                2.0 / 3.0
            } else if (i ^ j) == 3 {
                -1.0 / 3.0
            } else {
                -1.0 / 6.0
            };
            assert!((d[(i, j)] - expected).abs() < 1e-14, "({i},{j}) = {}", d[(i, j)]);
        }
    }
}

#[test]
fn constant_jacobian_rescaling() {
    let map = GeometricMap::identity(2, 1, 1);
    let pts: Vec<_> = map.net().points.iter().map(|p| [2.0 * p[0], p[1], 0.0]).collect();
    let pa = unconstrained(&map);
    let (a, _) = pa.assemble(&pts, &Source::Constant(1.0), &[]).unwrap();
    // DF = diag(2, 1): ∫ (½ ∂₁∂₁ + 2 ∂₂∂₂) over the reference square.
    let kxx = kron(&K1, &M1);
    let kyy = kron(&M1, &K1);
    let d = a.to_dense();
    for i in 0..4 {
        for j in 0..4 {
            let e = 0.5 * kxx[(i, j)] + 2.0 * kyy[(i, j)];
            assert!((d[(i, j)] - e).abs() < 1e-14);
        }
    }
}

#[test]
fn unit_source_load_sums_to_area() {
    let map = GeometricMap::identity(2, 3, 3);
    let pa = unconstrained(&map);
    let (_, f) = pa.assemble(&map.net().points, &Source::Constant(1.0), &[]).unwrap();
    assert!((f.iter().sum::<f64>() - 1.0).abs() < 1e-14);
}

#[test]
fn glued_patches_equal_single_c0_patch() {
    let p = 2;
    let glued = static_model(vec![shifted_cube(2, 0.0, p, 2), shifted_cube(2, 1.0, p, 2)], vec![vec![], vec![]]);
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
    let fa = Fom::new(glued.clone(), Source::Constant(1.0));
    let fb = Fom::new(union, Source::Constant(1.0));
    let (a, b) = (fa.assemble(&[0.0]).unwrap(), fb.assemble(&[0.0]).unwrap());
    assert_eq!(a.dim(), n);
    // Match DOFs through control point coordinates.
    let mut perm = vec![usize::MAX; n];
    for k in 0..2 {
        for (i, q) in glued.patch(k).base_points().iter().enumerate() {
            let g = glued.dofs().global(k, i);
            let j = pts
                .iter()
                .position(|r| (r[0] - q[0]).abs() < 1e-12 && (r[1] - q[1]).abs() < 1e-12)
                .unwrap();
            perm[g] = j;
        }
    }
    let (da, db) = (a.matrix.to_dense(), b.matrix.to_dense());
    for i in 0..n {
        assert!((a.rhs[i] - b.rhs[perm[i]]).abs() < 1e-12);
        for j in 0..n {
            assert!((da[(i, j)] - db[(perm[i], perm[j])]).abs() < 1e-12);
        }
    }
}

#[test]
fn two_patch_bar_is_nodally_exact() {
    let model = static_model(
        vec![segment(0.0, 0.5, 1, 4), segment(0.5, 0.5, 1, 4)],
        vec![vec![Face::new(0, 0)], vec![Face::new(0, 1)]],
    );
    let fom = Fom::new(model, Source::Constant(1.0));
    let sol = fom.solve(&[0.0]).unwrap();
    let m = fom.model();
    for k in 0..2 {
        for (i, p) in m.patch(k).base_points().iter().enumerate() {
            let x = p[0];
            let u = sol.coefficients[m.dofs().global(k, i)];
            assert!((u - 0.5 * x * (1.0 - x)).abs() < 1e-12);
        }
    }
}

#[test]
fn bar_converges_quadratically_for_linears() {
    let mut errs = Vec::new();
    for &e in &[4, 8, 16] {
        let model = static_model(
            vec![segment(0.0, 0.5, 1, e), segment(0.5, 0.5, 1, e)],
            vec![vec![Face::new(0, 0)], vec![Face::new(0, 1)]],
        );
        let fom = Fom::new(model, Source::Constant(1.0));
        let sol = fom.solve(&[0.0]).unwrap();
        errs.push(l2_error(&fom, &sol, |x| 0.5 * x[0] * (1.0 - x[0])).unwrap().0);
    }
    for w in errs.windows(2) {
        let rate = (w[0] / w[1]).log2();
        assert!((rate - 2.0).abs() < 0.3, "rate {rate}");
    }
}

fn manufactured_rates(p: usize) -> Vec<f64> {
    let exact = |x: &[f64; 3]| (PI * x[0]).sin() * (PI * x[1]).sin();
    let f = Source::Custom(Arc::new(|x: &[f64; 3]| 2.0 * PI * PI * (PI * x[0]).sin() * (PI * x[1]).sin()));
    let levels = [4usize, 8, 16];
    let errs: Vec<f64> = levels
        .iter()
        .map(|&e| {
            let model = static_model(
                vec![shifted_cube(2, 0.0, p, e), shifted_cube(2, 1.0, p, e)],
                vec![
                    vec![Face::new(0, 0), Face::new(1, 0), Face::new(1, 1)],
                    vec![Face::new(0, 1), Face::new(1, 0), Face::new(1, 1)],
                ],
            );
            // u = sin(πx) sin(πy) vanishes on the boundary of [0,2]×[0,1].
            let fom = Fom::new(model, f.clone());
            let sol = fom.solve(&[0.0]).unwrap();
            l2_error(&fom, &sol, exact).unwrap().0
        })
        .collect();
    errs.windows(2).map(|w| (w[0] / w[1]).log2()).collect()
}

#[test]
fn h_convergence_rates() {
    for p in 1..=3 {
        for rate in manufactured_rates(p) {
            assert!((rate - (p + 1) as f64).abs() <= 0.3, "p = {p}: rate {rate}");
        }
    }
}

fn bench_fom() -> Fom<f64> {
    Fom::new(benchmark_model(&BenchmarkConfig::default()).unwrap(), Source::Monomial { scale: 2.0 })
}

#[test]
fn benchmark_system_properties() {
    let fom = bench_fom();
    let sys = fom.assemble(&[0.0; 8]).unwrap();
    assert_eq!(sys.dim(), fom.model().dofs().n_free());
    assert_eq!(sys.dim(), 575);
    assert!(sys.matrix.asymmetry() <= 1e-12);
    let u = sys.solve().unwrap();
    assert!(sys.relative_residual(&u) <= 1e-10);
    let sol = fom.solve(&[0.0; 8]).unwrap();
    for (g, &v) in sol.coefficients.iter().enumerate() {
        assert!(v.is_finite());
        if fom.model().dofs().is_dirichlet(g) {
            assert_eq!(v, 0.0);
        }
    }
    let max = sol.coefficients.iter().fold(0.0f64, |a, &b| a.max(b.abs()));
    assert!(max > 1e-4, "solution unexpectedly tiny: {max}");
}

#[test]
fn solution_is_continuous_in_mu() {
    let fom = bench_fom();
    let u0 = fom.solve(&[0.0; 8]).unwrap().coefficients;
    let mut prev = f64::INFINITY;
    for &h in &[1e-2, 1e-3, 1e-4] {
        let u = fom.solve(&[h; 8]).unwrap().coefficients;
        let d = u.iter().zip(&u0).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
        assert!(d < prev);
        prev = d;
    }
    assert!(prev < 1e-4);
}

#[test]
fn metric_is_energy_at_midpoint() {
    let fom = bench_fom();
    let x = fom.metric().unwrap();
    assert!(SparseCholesky::factor(&x).is_ok());
    let a = fom.assemble(&fom.reference_mu()).unwrap().matrix;
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let u: Vec<f64> = (0..x.nrows()).map(|_| rng.gen_range(-1.0..1.0)).collect();
    assert!((x.bilinear(&u, &u) - a.bilinear(&u, &u)).abs() < 1e-12 * a.bilinear(&u, &u));
}

#[test]
fn identity_metric_is_laplacian() {
    let model = static_model(vec![GeometricMap::identity(2, 2, 3)], vec![all_faces(2)]);
    let fom = Fom::new(model.clone(), Source::Constant(1.0));
    let x = fom.metric().unwrap();
    let pa = PatchAssembler::new(
        PatchQuadrature::new(model.patch(0).map()),
        &model.dofs().patch_free(0).iter().map(Option::is_some).collect::<Vec<_>>(),
    );
    let lap = pa.stiffness_with(|_, _| [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 0.0]]);
    assert_eq!(x.nnz(), lap.nnz());
    for (a, b) in x.values().iter().zip(lap.values()) {
        assert!((a - b).abs() < 1e-14);
    }
}

#[test]
fn benchmark_regression_snapshot() {
    let fom = bench_fom();
    let sol = fom.solve(&[0.0; 8]).unwrap();
    let sum: f64 = sol.coefficients.iter().sum();
    let norm = sol.coefficients.iter().map(|v| v * v).sum::<f64>().sqrt();
    assert!((sum - 1.576950525180276e1).abs() < 1e-10 * sum);
    assert!((norm - 8.601043018623007e-1).abs() < 1e-10 * norm);
}
