use super::model::MultipatchModel;
use crate::numerics::gauss_rule;
use crate::splines::map::jacobian_from_basis;
use crate::splines::{Jacobian, MAX_DIM};
use crate::{Error, Real, Result};

/// A sample whose map folds (or degenerates) somewhere in a patch.
#[derive(Clone, Debug, PartialEq)]
pub struct InvalidSample {
    pub sample: usize,
    pub patch: usize,
    pub det: f64,
    pub xi: Vec<f64>,
}

/// Determinant range of each patch over all samples and quadrature points.
#[derive(Clone, Debug, PartialEq)]
pub struct GeometryReport {
    pub min_det: Vec<f64>,
    pub max_det: Vec<f64>,
    pub invalid: Vec<InvalidSample>,
}

impl GeometryReport {
    pub fn is_valid(&self) -> bool {
        self.invalid.is_empty()
    }
}

/// Checks `det DF > 0` at the `(p+1)^d` Gauss points of every element for
/// each parameter sample. Only the first offending point per sample and
/// patch is recorded.
pub fn validate_geometry<T: Real>(model: &MultipatchModel<T>, samples: &[Vec<T>]) -> Result<GeometryReport> {
    if samples.is_empty() {
        return Err(Error::Domain("validation needs at least one parameter sample".into()));
    }
    let dim = model.dim();
    let rule = gauss_rule::<T>(model.degree() + 1);
    let mut report = GeometryReport {
        min_det: vec![f64::INFINITY; model.n_patches()],
        max_det: vec![f64::NEG_INFINITY; model.n_patches()],
        invalid: Vec::new(),
    };
    for (k, patch) in model.patches().iter().enumerate() {
        let map = patch.map();
        let mut evals = Vec::new();
        for el in map.basis().elements() {
            let per_dir: Vec<Vec<(T, T)>> = (0..dim).map(|d| rule.on_interval(el.lower[d], el.upper[d]).collect()).collect();
            let n: usize = per_dir.iter().map(Vec::len).product();
            for mut q in 0..n {
                let mut xi = [T::zero(); MAX_DIM];
                for d in 0..dim {
                    xi[d] = per_dir[d][q % per_dir[d].len()].0;
                    q /= per_dir[d].len();
                }
                let b = map.rationalize(&map.basis().eval_on_spans(&el.spans, &xi));
                evals.push((xi, b));
            }
        }
        for (s, mu) in samples.iter().enumerate() {
            model.params().check(mu)?;
            let pts = model.patch_points(k, mu);
            let mut flagged = false;
            for (xi, b) in &evals {
                let df = jacobian_from_basis(b, &pts, dim);
                let det = match Jacobian::from_df(df, dim) {
                    Ok(j) => j.det,
                    Err(d) => d,
                }
                .as_f64();
                report.min_det[k] = report.min_det[k].min(det);
                report.max_det[k] = report.max_det[k].max(det);
                if !(det > 0.0) && !flagged {
                    flagged = true;
                    report.invalid.push(InvalidSample {
                        sample: s,
                        patch: k,
                        det,
                        xi: xi[..dim].iter().map(|x| x.as_f64()).collect(),
                    });
                }
            }
        }
    }
    Ok(report)
}
