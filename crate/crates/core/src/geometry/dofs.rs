use super::patch::{face_indices, ParameterizedPatch};
use super::ports::PortTopology;
use crate::Real;

/// Glued (C⁰) numbering of all patch control points, with the Dirichlet
/// mask and the compressed numbering of the free unknowns.
#[derive(Clone, Debug, PartialEq)]
pub struct DofMap {
    local_to_global: Vec<Vec<usize>>,
    dirichlet: Vec<bool>,
    global_to_free: Vec<Option<usize>>,
    free_to_global: Vec<usize>,
}

fn find(parent: &mut [usize], mut i: usize) -> usize {
    while parent[i] != i {
        parent[i] = parent[parent[i]];
        i = parent[i];
    }
    i
}

impl DofMap {
    pub fn new<T: Real>(patches: &[ParameterizedPatch<T>], ports: &PortTopology) -> Self {
        let offsets: Vec<usize> = patches
            .iter()
            .scan(0, |acc, p| {
                let o = *acc;
                *acc += p.num_dofs();
                Some(o)
            })
            .collect();
        let total: usize = patches.iter().map(|p| p.num_dofs()).sum();
        let mut parent: Vec<usize> = (0..total).collect();
        for port in &ports.ports {
            let [k, l] = port.patches;
            let ia = face_indices(patches[k].map().basis(), port.faces[0]);
            let ib = face_indices(patches[l].map().basis(), port.faces[1]);
            for (q, &r) in port.pairing.iter().enumerate() {
                let a = find(&mut parent, offsets[k] + ia[q]);
                let b = find(&mut parent, offsets[l] + ib[r]);
                if a != b {
                    parent[a.max(b)] = a.min(b);
                }
            }
        }
        let mut root_to_global = vec![usize::MAX; total];
        let mut n_global = 0;
        let mut local_to_global = Vec::with_capacity(patches.len());
        for (k, p) in patches.iter().enumerate() {
            let mut map = Vec::with_capacity(p.num_dofs());
            for i in 0..p.num_dofs() {
                let r = find(&mut parent, offsets[k] + i);
                if root_to_global[r] == usize::MAX {
                    root_to_global[r] = n_global;
                    n_global += 1;
                }
                map.push(root_to_global[r]);
            }
            local_to_global.push(map);
        }
        let mut dirichlet = vec![false; n_global];
        for (k, p) in patches.iter().enumerate() {
            for &f in p.dirichlet_faces() {
                for i in face_indices(p.map().basis(), f) {
                    dirichlet[local_to_global[k][i]] = true;
                }
            }
        }
        let mut global_to_free = vec![None; n_global];
        let mut free_to_global = Vec::new();
        for g in 0..n_global {
            if !dirichlet[g] {
                global_to_free[g] = Some(free_to_global.len());
                free_to_global.push(g);
            }
        }
        Self {
            local_to_global,
            dirichlet,
            global_to_free,
            free_to_global,
        }
    }

    pub fn n_patches(&self) -> usize {
        self.local_to_global.len()
    }

    pub fn n_global(&self) -> usize {
        self.dirichlet.len()
    }

    /// Number of free unknowns `N_h`.
    pub fn n_free(&self) -> usize {
        self.free_to_global.len()
    }

    pub fn global(&self, patch: usize, local: usize) -> usize {
        self.local_to_global[patch][local]
    }

    pub fn patch_globals(&self, patch: usize) -> &[usize] {
        &self.local_to_global[patch]
    }

    pub fn is_dirichlet(&self, global: usize) -> bool {
        self.dirichlet[global]
    }

    pub fn dirichlet_mask(&self) -> &[bool] {
        &self.dirichlet
    }

    pub fn free(&self, global: usize) -> Option<usize> {
        self.global_to_free[global]
    }

    pub fn free_to_global(&self) -> &[usize] {
        &self.free_to_global
    }

    /// Free index of every local control point of `patch`.
    pub fn patch_free(&self, patch: usize) -> Vec<Option<usize>> {
        self.local_to_global[patch].iter().map(|&g| self.global_to_free[g]).collect()
    }

    /// Local DOFs minus global DOFs: how many were identified by gluing.
    pub fn shared_count(&self) -> usize {
        self.local_to_global.iter().map(Vec::len).sum::<usize>() - self.n_global()
    }

    /// Scatters a free-DOF vector into a full global vector (zero on the
    /// Dirichlet boundary).
    pub fn expand<T: Real>(&self, free: &[T]) -> Vec<T> {
        let mut out = vec![T::zero(); self.n_global()];
        for (f, &g) in self.free_to_global.iter().enumerate() {
            out[g] = free[f];
        }
        out
    }

    pub fn restrict<T: Real>(&self, global: &[T]) -> Vec<T> {
        self.free_to_global.iter().map(|&g| global[g]).collect()
    }
}
