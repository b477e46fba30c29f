use std::fmt::Write;

use super::solver::{Fom, FomSolution};
use crate::geometry::MultipatchModel;
use crate::splines::{Point, MAX_DIM};
use crate::{Real, Result};

/// Value of the glued field with global coefficients `u` at `xi` in patch `k`.
pub fn eval_field<T: Real>(model: &MultipatchModel<T>, k: usize, u: &[T], xi: &[T]) -> Result<T> {
    let r = model.patch(k).map().rational_basis(xi)?;
    Ok(r.indices
        .iter()
        .zip(&r.values)
        .map(|(&i, &v)| v * u[model.dofs().global(k, i)])
        .sum())
}

/// Samples of one patch on a uniform parametric lattice.
#[derive(Clone, Debug, PartialEq)]
pub struct PatchField<T> {
    pub xi: Vec<Point<T>>,
    pub x: Vec<Point<T>>,
    pub values: Vec<T>,
}

/// Field on an `m`-point-per-direction parametric lattice of every patch,
/// with physical coordinates at the solution's parameter.
pub fn sample_field<T: Real>(model: &MultipatchModel<T>, sol: &FomSolution<T>, m: usize) -> Result<Vec<PatchField<T>>> {
    assert!(m >= 2, "lattice needs at least two points per direction");
    let dim = model.dim();
    let maps = model.instantiate_maps(&sol.mu)?;
    let count = m.pow(dim as u32);
    let step = T::one() / T::from_usize_lossy(m - 1);
    let mut out = Vec::with_capacity(model.n_patches());
    for (k, map) in maps.iter().enumerate() {
        let mut pf = PatchField {
            xi: Vec::with_capacity(count),
            x: Vec::with_capacity(count),
            values: Vec::with_capacity(count),
        };
        for mut q in 0..count {
            let mut xi = [T::zero(); MAX_DIM];
            for c in xi.iter_mut().take(dim) {
                *c = (T::from_usize_lossy(q % m) * step).min(T::one());
                q /= m;
            }
            pf.x.push(map.eval(&xi)?);
            pf.values.push(eval_field(model, k, &sol.coefficients, &xi)?);
            pf.xi.push(xi);
        }
        out.push(pf);
    }
    Ok(out)
}

/// Text export of [`sample_field`] (see `docs/formats.md`).
pub fn write_field<T: Real>(fields: &[PatchField<T>], dim: usize, m: usize) -> String {
    let mut s = String::new();
    writeln!(s, "# igarom field").unwrap();
    writeln!(s, "dim {dim}").unwrap();
    writeln!(s, "lattice {m}").unwrap();
    writeln!(s, "patches {}", fields.len()).unwrap();
    for (k, pf) in fields.iter().enumerate() {
        writeln!(s, "patch {k}").unwrap();
        for ((xi, x), v) in pf.xi.iter().zip(&pf.x).zip(&pf.values) {
            let cols: Vec<String> = xi[..dim]
                .iter()
                .chain(&x[..dim])
                .map(|c| format!("{:.12e}", c.as_f64()))
                .chain(std::iter::once(format!("{:.12e}", v.as_f64())))
                .collect();
            writeln!(s, "{}", cols.join(" ")).unwrap();
        }
    }
    s
}

/// `(‖u_h − u‖_{L²}, ‖u‖_{L²})` by the assembly quadrature.
pub fn l2_error<T: Real, F>(fom: &Fom<T>, sol: &FomSolution<T>, exact: F) -> Result<(T, T)>
where
    F: Fn(&Point<T>) -> T,
{
    let model = fom.model();
    let nets = model.instantiate(&sol.mu)?;
    let (mut err, mut norm) = (T::zero(), T::zero());
    for k in 0..model.n_patches() {
        let pa = fom.assembler().patch(k);
        let geo = pa.geometry(&nets[k], &sol.mu)?;
        let globals = model.dofs().patch_globals(k);
        for (e, el) in pa.quadrature().elements().iter().enumerate() {
            for (q, qp) in el.points.iter().enumerate() {
                let uh: T = el
                    .dofs
                    .iter()
                    .zip(&qp.values)
                    .map(|(&i, &v)| v * sol.coefficients[globals[i]])
                    .sum();
                let g = &geo[e][q];
                let w = qp.weight * g.jac.det.abs();
                let ue = exact(&g.x);
                err += (uh - ue) * (uh - ue) * w;
                norm += ue * ue * w;
            }
        }
    }
    Ok((err.sqrt(), norm.sqrt()))
}
