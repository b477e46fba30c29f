use crate::geometry::{Face, MultipatchModel};
use crate::numerics::{gauss_rule, Mat};
use crate::splines::map::jacobian_from_basis;
use crate::splines::MAX_DIM;
use crate::{Real, Result};

/// Surface measure of the face spanned by the columns `tang` of `df`.
fn surface_measure<T: Real>(df: &[[T; MAX_DIM]; MAX_DIM], tang: &[usize], dim: usize) -> T {
    match tang.len() {
        0 => T::one(),
        1 => (0..dim).map(|r| df[r][tang[0]] * df[r][tang[0]]).sum::<T>().sqrt(),
        _ => {
            let g = |a: usize, b: usize| (0..dim).map(|r| df[r][tang[a]] * df[r][tang[b]]).sum::<T>();
            (g(0, 0) * g(1, 1) - g(0, 1) * g(0, 1)).max(T::zero()).sqrt()
        }
    }
}

/// `L²(Γ_p)` mass matrix of the port's free DOFs (ordered as in
/// [`crate::geometry::PortDofs`]) on the geometry at `mu`.
pub fn port_mass<T: Real>(model: &MultipatchModel<T>, port: usize, mu: &[T]) -> Result<Mat<T>> {
    let p = &model.ports().ports[port];
    let (k, face): (usize, Face) = (p.patches[0], p.faces[0]);
    let pd = model.port_dofs(port);
    let patch = model.patch(k);
    let map = patch.map();
    let dim = map.dim();
    let pts = model.patch_points(k, mu);
    let mut pos = vec![usize::MAX; patch.num_dofs()];
    for (j, &i) in pd.local[0].iter().enumerate() {
        pos[i] = j;
    }
    let tang = face.tangential(dim);
    let fixed = if face.side == 0 { T::zero() } else { T::one() };
    let rule = gauss_rule::<T>(map.basis().degree() + 1);
    let mut m = Mat::zeros(pd.len(), pd.len());
    for el in map.basis().elements() {
        let touches = if face.side == 0 {
            el.lower[face.direction] == T::zero()
        } else {
            el.upper[face.direction] == T::one()
        };
        if !touches {
            continue;
        }
        let per_dir: Vec<Vec<(T, T)>> = tang.iter().map(|&d| rule.on_interval(el.lower[d], el.upper[d]).collect()).collect();
        let n: usize = per_dir.iter().map(Vec::len).product();
        for mut q in 0..n {
            let mut xi = [T::zero(); MAX_DIM];
            xi[face.direction] = fixed;
            let mut w = T::one();
            for (t, &d) in tang.iter().enumerate() {
                let (x, wt) = per_dir[t][q % per_dir[t].len()];
                q /= per_dir[t].len();
                xi[d] = x;
                w *= wt;
            }
            let r = map.rationalize(&map.basis().eval_on_spans(&el.spans, &xi));
            let df = jacobian_from_basis(&r, &pts, dim);
            let w = w * surface_measure(&df, &tang, dim);
            for (a, &i) in r.indices.iter().enumerate() {
                let pi = pos[i];
                if pi == usize::MAX {
                    continue;
                }
                for (b, &j) in r.indices.iter().enumerate() {
                    let pj = pos[j];
                    if pj != usize::MAX {
                        m[(pi, pj)] += w * r.values[a] * r.values[b];
                    }
                }
            }
        }
    }
    Ok(m)
}
