mod common;

use std::sync::Arc;

use common::{segment, shifted_cube, static_model};
use igarom::eim::{train_eim_model, EimOptions};
use igarom::fom::{Fom, Source};
use igarom::geometry::{benchmark_model, BenchmarkConfig, Face};
use igarom::numerics::CsrMatrix;
use igarom::scrbe::{
    build_port_modes, full_port_spaces, port_modes_from_traces, port_traces, train_scrbe, ExactCondenser,
    HarmonicExtender, PatchLayout, ScrbeOptions,
};

fn x_error(x: &CsrMatrix<f64>, u: &[f64], v: &[f64]) -> (f64, f64) {
    let d: Vec<f64> = u.iter().zip(v).map(|(a, b)| a - b).collect();
    (x.bilinear(&d, &d).sqrt(), x.bilinear(v, v).sqrt())
}

fn benchmark(elements: [usize; 3]) -> Fom<f64> {
    let cfg = BenchmarkConfig { elements, ..Default::default() };
    Fom::new(benchmark_model(&cfg).unwrap(), Source::Monomial { scale: 2.0 })
}

/// Two unit squares side by side, clamped at the far ends only.
fn two_squares(degree: usize, elements: usize) -> Fom<f64> {
    let model = static_model(
        vec![shifted_cube(2, 0.0, degree, elements), shifted_cube(2, 1.0, degree, elements)],
        vec![vec![Face::new(0, 0)], vec![Face::new(0, 1)]],
    );
    Fom::new(model, Source::Constant(1.0))
}

#[test]
fn full_condensation_reproduces_the_monolithic_solution() {
    let fom = benchmark([4, 4, 4]);
    let cond = ExactCondenser::new(&fom, &full_port_spaces(&fom)).unwrap();
    let x = fom.metric().unwrap();
    for mu in fom.model().params().sample_lhs(5, 8) {
        let s = cond.solve(&mu).unwrap();
        let u = fom.assemble(&mu).unwrap().solve().unwrap();
        let (e, n) = x_error(&x, &s.free(&fom), &u);
        assert!(e <= 1e-9 * n.max(1.0), "error {e} (norm {n})");
        assert!(s.trace_mismatch(&fom) <= 1e-12);
    }
}

#[test]
fn two_segment_bar_interface_value() {
    let model = static_model(
        vec![segment(0.0, 0.4, 2, 3), segment(0.4, 0.6, 2, 4)],
        vec![vec![Face::new(0, 0)], vec![Face::new(0, 1)]],
    );
    let fom = Fom::new(model, Source::Constant(1.0));
    let ports = full_port_spaces(&fom);
    assert_eq!(ports.len(), 1);
    assert_eq!(ports[0].n_full, 1);
    let cond = ExactCondenser::new(&fom, &ports).unwrap();
    let s = cond.solve(&[0.5]).unwrap();
    let u = fom.assemble(&[0.5]).unwrap().solve().unwrap();
    let iface = fom.model().port_dofs(0).free[0];
    // -u'' = 1 on (0, 1), u(0) = u(1) = 0.
    assert!((s.skeleton[0] - u[iface]).abs() <= 1e-10);
    assert!((u[iface] - 0.4 * 0.6 / 2.0).abs() <= 1e-12);
}

#[test]
fn schur_matrix_is_symmetric_and_local() {
    let fom = benchmark([2, 2, 2]);
    let cond = ExactCondenser::new(&fom, &full_port_spaces(&fom)).unwrap();
    let sys = cond.schur(&fom.reference_mu()).unwrap();
    let scale = sys.matrix.max_abs();
    assert!(sys.matrix.asymmetry() <= 1e-10 * scale);
    // Ports 0 and 2 share no patch in the chain.
    let n = fom.model().port_dofs(0).len();
    for i in 0..n {
        for j in 0..n {
            assert_eq!(sys.matrix[(i, 2 * n + j)], 0.0);
        }
    }
}

#[test]
fn constant_trace_extends_linearly() {
    let fom = two_squares(2, 3);
    let layout = PatchLayout::new(&fom, 0).unwrap();
    let ext = HarmonicExtender::new(fom.assembler().patch(0), layout).unwrap();
    let n = fom.model().port_dofs(0).len();
    let psi = ext.extend(0, &vec![1.0; n]);
    let pa = fom.assembler().patch(0);
    let pts = fom.model().patch(0).base_points();
    for (s, &i) in pa.slots().iter().enumerate() {
        assert!((psi[s] - pts[i][0]).abs() <= 1e-12, "slot {s}: {} vs {}", psi[s], pts[i][0]);
    }
    let r = ext.laplacian().matvec(&psi);
    for &b in &ext.layout().bubble {
        assert!(r[b].abs() <= 1e-10);
    }
    assert!(ext.extend(0, &vec![0.0; n]).iter().all(|&v| v == 0.0));
}

#[test]
fn extensions_are_discretely_harmonic() {
    let fom = benchmark([2, 2, 2]);
    let ports = build_port_modes(&fom, 6, 0.0, 2).unwrap();
    let cond = ExactCondenser::new(&fom, &ports).unwrap();
    for (k, lift) in cond.liftings().iter().enumerate() {
        let ext = HarmonicExtender::new(fom.assembler().patch(k), lift.layout.clone()).unwrap();
        for psi in &lift.psi {
            let r = ext.laplacian().matvec(psi);
            let scale = psi.iter().fold(0.0f64, |a, v| a.max(v.abs()));
            for &b in &lift.layout.bubble {
                assert!(r[b].abs() <= 1e-10 * scale.max(1.0));
            }
        }
    }
}

#[test]
fn mu_independent_interface_has_one_mode() {
    let fom = two_squares(2, 2);
    let mus: Vec<Vec<f64>> = (0..6).map(|i| vec![i as f64 / 5.0]).collect();
    let traces = port_traces(&fom, &mus).unwrap();
    let ports = port_modes_from_traces(&fom, &traces, 1e-12).unwrap();
    assert_eq!(ports[0].len(), 1);
    assert!(ports[0].sigma[1] <= 1e-12 * ports[0].sigma[0]);
}

#[test]
fn port_modes_are_trace_mass_orthonormal() {
    let fom = benchmark([2, 2, 2]);
    let ports = build_port_modes(&fom, 10, 1e-14, 4).unwrap();
    for (p, space) in ports.iter().enumerate() {
        let m = igarom::fom::port_mass(fom.model(), p, &fom.reference_mu()).unwrap();
        for (i, a) in space.modes.iter().enumerate() {
            let ma = m.matvec(a);
            for (j, b) in space.modes.iter().enumerate() {
                let g: f64 = ma.iter().zip(b).map(|(x, y)| x * y).sum();
                assert!((g - if i == j { 1.0 } else { 0.0 }).abs() <= 1e-10);
            }
        }
        assert!(space.sigma.windows(2).all(|w| w[1] <= w[0]));
        assert!(space.len() <= space.n_full);
    }
}

#[test]
fn port_truncation_does_not_increase_error() {
    let fom = benchmark([2, 2, 2]);
    let ports = build_port_modes(&fom, 25, 0.0, 6).unwrap();
    let x = fom.metric().unwrap();
    let test = fom.model().params().sample_lhs(10, 31);
    let truth: Vec<Vec<f64>> = test.iter().map(|mu| fom.assemble(mu).unwrap().solve().unwrap()).collect();
    let mut prev = f64::INFINITY;
    for n in [1, 3, 6] {
        let trunc: Vec<_> = ports.iter().map(|p| p.truncated(n)).collect();
        let cond = ExactCondenser::new(&fom, &trunc).unwrap();
        let worst = test
            .iter()
            .zip(&truth)
            .map(|(mu, u)| {
                let (e, n) = x_error(&x, &cond.solve(mu).unwrap().free(&fom), u);
                e / n
            })
            .fold(0.0, f64::max);
        assert!(worst <= prev * (1.0 + 1e-12), "{n} modes: {worst} after {prev}");
        prev = worst;
    }
}

#[test]
fn static_geometry_bubbles_are_trivial() {
    let fom = two_squares(2, 3);
    let eim = Arc::new(train_eim_model(&fom, 5, 1, &EimOptions::default()).unwrap());
    let ports = full_port_spaces(&fom);
    let opts = ScrbeOptions { n_train: 5, ..Default::default() };
    let rom = train_scrbe(&fom, eim, &ports, &opts).unwrap();
    for (modes, src) in rom.basis_sizes() {
        assert!(modes.iter().all(|&n| n <= 1));
        assert_eq!(src, 1);
    }
    let sol = rom.solve(&[0.3]).unwrap();
    let u = rom.reconstruct(&sol).unwrap().free(&fom);
    let h = fom.assemble(&[0.3]).unwrap().solve().unwrap();
    let (e, n) = x_error(&fom.metric().unwrap(), &u, &h);
    assert!(e <= 1e-10 * n);
}

#[test]
fn trained_benchmark_rom() {
    let fom = benchmark([2, 2, 2]);
    let ports = build_port_modes(&fom, 25, 1e-12, 1).unwrap();
    for p in &ports {
        assert!(p.sigma[p.sigma.len().min(25) - 1] <= 1e-4 * p.sigma[0]);
    }
    let eim = Arc::new(train_eim_model(&fom, 100, 11, &EimOptions { tol: 1e-7, ..Default::default() }).unwrap());
    let opts = ScrbeOptions { n_train: 100, ..Default::default() };
    let rom = train_scrbe(&fom, eim, &ports, &opts).unwrap();
    let x = fom.metric().unwrap();
    for mu in fom.model().params().sample_lhs(8, 77) {
        let sol = rom.solve(&mu).unwrap();
        let rec = rom.reconstruct(&sol).unwrap();
        assert!(rec.trace_mismatch(&fom) <= 1e-10);
        let h = fom.assemble(&mu).unwrap().solve().unwrap();
        let (e, n) = x_error(&x, &rec.free(&fom), &h);
        assert!(e <= 1e-4 * n, "relative error {}", e / n);
    }
    let (sys, _) = rom.schur(&fom.reference_mu()).unwrap();
    assert!(sys.matrix.asymmetry() <= 1e-10 * sys.matrix.max_abs());

    // Bubble functions vanish on ports: with û = 0 only the source bubble
    // remains and the field is zero on every port DOF.
    let mut sol = rom.solve(&fom.reference_mu()).unwrap();
    sol.skeleton.iter_mut().for_each(|v| *v = 0.0);
    let rec = rom.reconstruct(&sol).unwrap();
    for (k, field) in rec.fields.iter().enumerate() {
        let lay = rom.patches[k].basis.as_ref().unwrap().layout.clone();
        for ps in &lay.ports {
            assert!(ps.slots.iter().all(|&s| field[s] == 0.0));
        }
        assert!(lay.bubble.iter().any(|&s| field[s] != 0.0));
    }
}
