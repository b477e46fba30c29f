use super::dofs::DofMap;
use super::params::ParameterSpace;
use super::patch::{face_indices, ParameterizedPatch};
use super::ports::{detect_ports, PortTopology};
use crate::splines::{GeometricMap, Point, MAX_DIM};
use crate::{Error, Real, Result};

const DISPLACEMENT_TOLERANCE: f64 = 1e-12;

/// Free DOFs of one global port, aligned with the matching local control
/// points on both sides.
#[derive(Clone, Debug, PartialEq)]
pub struct PortDofs {
    pub free: Vec<usize>,
    /// `local[s][j]`: patch-local index of `free[j]` in `Port::patches[s]`.
    pub local: [Vec<usize>; 2],
}

impl PortDofs {
    pub fn len(&self) -> usize {
        self.free.len()
    }

    pub fn is_empty(&self) -> bool {
        self.free.is_empty()
    }
}

/// Parameterized multipatch geometry with its port topology and glued DOF
/// numbering. Immutable once built.
#[derive(Clone, Debug, PartialEq)]
pub struct MultipatchModel<T> {
    patches: Vec<ParameterizedPatch<T>>,
    params: ParameterSpace<T>,
    ports: PortTopology,
    dofs: DofMap,
    port_dofs: Vec<PortDofs>,
    bubble_dofs: Vec<Vec<usize>>,
}

impl<T: Real> MultipatchModel<T> {
    pub fn new(mut patches: Vec<ParameterizedPatch<T>>, params: ParameterSpace<T>) -> Result<Self> {
        if patches.is_empty() {
            return Err(Error::Dimension("model has no patches".into()));
        }
        if params.n_patches() != patches.len() {
            return Err(Error::Dimension(format!(
                "parameter space lists {} patches, model has {}",
                params.n_patches(),
                patches.len()
            )));
        }
        let dim = patches[0].dim();
        for (k, p) in patches.iter().enumerate() {
            if p.dim() != dim {
                return Err(Error::Dimension(format!("patch {k} has dimension {}, expected {dim}", p.dim())));
            }
            if p.n_params() != params.patch_params(k).len() {
                return Err(Error::Dimension(format!(
                    "patch {k} has {} displacement tables but {} parameters",
                    p.n_params(),
                    params.patch_params(k).len()
                )));
            }
        }
        let ports = detect_ports(&patches)?;
        for port in &ports.ports {
            for s in 0..2 {
                let (k, f) = (port.patches[s], port.faces[s]);
                if patches[k].dirichlet_faces().contains(&f) {
                    return Err(Error::Domain(format!("face {f} of patch {k} is an interface but tagged Dirichlet")));
                }
            }
            let [k, l] = port.patches;
            let ia = face_indices(patches[k].map().basis(), port.faces[0]);
            let ib = face_indices(patches[l].map().basis(), port.faces[1]);
            for j in 0..params.dim() {
                let dk = params.patch_params(k).iter().position(|&g| g == j);
                let dl = params.patch_params(l).iter().position(|&g| g == j);
                for (q, &r) in port.pairing.iter().enumerate() {
                    let va = dk.map_or([T::zero(); MAX_DIM], |t| patches[k].displacements()[t][ia[q]]);
                    let vb = dl.map_or([T::zero(); MAX_DIM], |t| patches[l].displacements()[t][ib[r]]);
                    if (0..MAX_DIM).any(|c| (va[c] - vb[c]).abs().as_f64() > DISPLACEMENT_TOLERANCE) {
                        return Err(Error::Domain(format!(
                            "parameter {j} moves interface control points of patches {k} and {l} differently"
                        )));
                    }
                }
            }
            // Remove sub-tolerance noise so glued traces agree exactly.
            let pts: Vec<Point<T>> = ia.iter().map(|&i| patches[k].base_points()[i]).collect();
            let target: Vec<usize> = port.pairing.iter().map(|&r| ib[r]).collect();
            patches[l].snap_face(&target, &pts);
        }
        let dofs = DofMap::new(&patches, &ports);
        let mut port_dofs = Vec::with_capacity(ports.len());
        let mut on_port: Vec<Vec<bool>> = patches.iter().map(|p| vec![false; p.num_dofs()]).collect();
        for port in &ports.ports {
            let [k, l] = port.patches;
            let ia = face_indices(patches[k].map().basis(), port.faces[0]);
            let ib = face_indices(patches[l].map().basis(), port.faces[1]);
            let mut pd = PortDofs {
                free: Vec::new(),
                local: [Vec::new(), Vec::new()],
            };
            for (q, &r) in port.pairing.iter().enumerate() {
                on_port[k][ia[q]] = true;
                on_port[l][ib[r]] = true;
                if let Some(f) = dofs.free(dofs.global(k, ia[q])) {
                    pd.free.push(f);
                    pd.local[0].push(ia[q]);
                    pd.local[1].push(ib[r]);
                }
            }
            port_dofs.push(pd);
        }
        let bubble_dofs = (0..patches.len())
            .map(|k| {
                let free = dofs.patch_free(k);
                (0..patches[k].num_dofs())
                    .filter(|&i| free[i].is_some() && !on_port[k][i])
                    .collect()
            })
            .collect();
        Ok(Self {
            patches,
            params,
            ports,
            dofs,
            port_dofs,
            bubble_dofs,
        })
    }

    pub fn dim(&self) -> usize {
        self.patches[0].dim()
    }

    pub fn degree(&self) -> usize {
        self.patches[0].map().basis().degree()
    }

    pub fn n_patches(&self) -> usize {
        self.patches.len()
    }

    pub fn patches(&self) -> &[ParameterizedPatch<T>] {
        &self.patches
    }

    pub fn patch(&self, k: usize) -> &ParameterizedPatch<T> {
        &self.patches[k]
    }

    pub fn params(&self) -> &ParameterSpace<T> {
        &self.params
    }

    pub fn ports(&self) -> &PortTopology {
        &self.ports
    }

    pub fn dofs(&self) -> &DofMap {
        &self.dofs
    }

    pub fn n_free(&self) -> usize {
        self.dofs.n_free()
    }

    pub fn port_dofs(&self, port: usize) -> &PortDofs {
        &self.port_dofs[port]
    }

    /// Free patch-local control points not lying on any port.
    pub fn bubble_dofs(&self, k: usize) -> &[usize] {
        &self.bubble_dofs[k]
    }

    /// Control points of every patch at global parameters `mu`.
    pub fn instantiate(&self, mu: &[T]) -> Result<Vec<Vec<Point<T>>>> {
        self.params.check(mu)?;
        Ok((0..self.n_patches()).map(|k| self.patch_points(k, mu)).collect())
    }

    /// Control points of patch `k` without the bounds check.
    pub fn patch_points(&self, k: usize, mu: &[T]) -> Vec<Point<T>> {
        self.patches[k].points(&self.params.local(k, mu))
    }

    pub fn instantiate_maps(&self, mu: &[T]) -> Result<Vec<GeometricMap<T>>> {
        self.instantiate(mu)?
            .into_iter()
            .zip(&self.patches)
            .map(|(pts, p)| p.map().with_points(pts))
            .collect()
    }
}

/// Counts of the patch-level decomposition, for reports.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ModelSummary {
    pub patches: usize,
    pub ports: usize,
    pub global_dofs: usize,
    pub free_dofs: usize,
    pub port_dofs: Vec<usize>,
    pub bubble_dofs: Vec<usize>,
}

impl<T: Real> MultipatchModel<T> {
    pub fn summary(&self) -> ModelSummary {
        ModelSummary {
            patches: self.n_patches(),
            ports: self.ports.len(),
            global_dofs: self.dofs.n_global(),
            free_dofs: self.dofs.n_free(),
            port_dofs: self.port_dofs.iter().map(PortDofs::len).collect(),
            bubble_dofs: self.bubble_dofs.iter().map(Vec::len).collect(),
        }
    }
}
