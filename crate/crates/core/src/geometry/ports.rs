use super::patch::{face_indices, face_shape, Face, ParameterizedPatch};
use crate::splines::{KnotVector, MAX_DIM};
use crate::{Error, Real, Result};

pub const MATCH_TOLERANCE: f64 = 1e-10;
pub const AMBIGUITY_TOLERANCE: f64 = 1e-6;

/// How the tangential axes of one face map onto those of its partner:
/// axis `i` of the first face runs along axis `perm[i]` of the second,
/// reversed when `flip[i]` is set.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Orientation {
    pub perm: Vec<usize>,
    pub flip: Vec<bool>,
}

impl Orientation {
    fn all(m: usize) -> Vec<Self> {
        let perms: Vec<Vec<usize>> = match m {
            0 => vec![vec![]],
            1 => vec![vec![0]],
            _ => vec![vec![0, 1], vec![1, 0]],
        };
        let mut out = Vec::new();
        for perm in perms {
            for bits in 0..(1usize << m) {
                out.push(Self {
                    perm: perm.clone(),
                    flip: (0..m).map(|i| bits >> i & 1 == 1).collect(),
                });
            }
        }
        out
    }

    pub fn is_identity(&self) -> bool {
        self.perm.iter().enumerate().all(|(i, &p)| i == p) && !self.flip.iter().any(|&f| f)
    }

    /// Face-local index pairing, or `None` when the shapes do not conform.
    fn pairing(&self, shape_a: &[usize], shape_b: &[usize]) -> Option<Vec<usize>> {
        let m = shape_a.len();
        if shape_b.len() != m || (0..m).any(|i| shape_a[i] != shape_b[self.perm[i]]) {
            return None;
        }
        let count: usize = shape_a.iter().product();
        Some(
            (0..count)
                .map(|mut q| {
                    let mut b = [0usize; MAX_DIM];
                    for i in 0..m {
                        let a = q % shape_a[i];
                        q /= shape_a[i];
                        let t = self.perm[i];
                        b[t] = if self.flip[i] { shape_b[t] - 1 - a } else { a };
                    }
                    let mut idx = 0;
                    for t in (0..m).rev() {
                        idx = idx * shape_b[t] + b[t];
                    }
                    idx
                })
                .collect(),
        )
    }
}

/// Global interface `Γ_p` between two patch faces.
#[derive(Clone, Debug, PartialEq)]
pub struct Port {
    pub patches: [usize; 2],
    pub faces: [Face; 2],
    pub orientation: Orientation,
    /// For each face-local control index on the first side, the matching
    /// face-local index on the second side.
    pub pairing: Vec<usize>,
}

/// Local port `j` of a patch and the global port it belongs to.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct LocalPort {
    pub face: Face,
    pub port: usize,
    /// Position of this patch in [`Port::patches`].
    pub side: usize,
}

#[derive(Clone, Debug, PartialEq, Default)]
pub struct PortTopology {
    pub ports: Vec<Port>,
    local: Vec<Vec<LocalPort>>,
}

impl PortTopology {
    pub fn len(&self) -> usize {
        self.ports.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ports.is_empty()
    }

    /// Local ports of patch `k`, ordered by global port index.
    pub fn local_ports(&self, k: usize) -> &[LocalPort] {
        &self.local[k]
    }

    pub fn face_port(&self, k: usize, face: Face) -> Option<LocalPort> {
        self.local[k].iter().copied().find(|lp| lp.face == face)
    }
}

fn knots_match<T: Real>(a: &KnotVector<T>, b: &KnotVector<T>, reversed: bool) -> bool {
    let b = if reversed { b.reversed() } else { b.clone() };
    a.degree() == b.degree()
        && a.knots().len() == b.knots().len()
        && a.knots().iter().zip(b.knots()).all(|(&x, &y)| (x - y).abs().as_f64() <= MATCH_TOLERANCE)
}

/// Finds all matching face pairs by comparing boundary control grids and
/// weights of the base configuration.
pub fn detect_ports<T: Real>(patches: &[ParameterizedPatch<T>]) -> Result<PortTopology> {
    let mut ports = Vec::new();
    let mut used: Vec<Vec<bool>> = patches.iter().map(|p| vec![false; 2 * p.dim()]).collect();
    for k in 0..patches.len() {
        for l in k + 1..patches.len() {
            let (pa, pb) = (&patches[k], &patches[l]);
            if pa.dim() != pb.dim() {
                continue;
            }
            let dim = pa.dim();
            for fa in Face::all(dim) {
                let ia = face_indices(pa.map().basis(), fa);
                let sa = face_shape(pa.map().basis(), fa);
                let ta = fa.tangential(dim);
                for fb in Face::all(dim) {
                    let ib = face_indices(pb.map().basis(), fb);
                    let sb = face_shape(pb.map().basis(), fb);
                    let tb = fb.tangential(dim);
                    let mut best: Option<(f64, Orientation, Vec<usize>)> = None;
                    for o in Orientation::all(dim - 1) {
                        let Some(pairing) = o.pairing(&sa, &sb) else { continue };
                        let conforming = (0..dim - 1).all(|i| {
                            knots_match(
                                pa.map().basis().direction(ta[i]),
                                pb.map().basis().direction(tb[o.perm[i]]),
                                o.flip[i],
                            )
                        });
                        if !conforming {
                            continue;
                        }
                        let mut dev = 0.0f64;
                        for (q, &r) in pairing.iter().enumerate() {
                            let (i, j) = (ia[q], ib[r]);
                            let (x, y) = (pa.base_points()[i], pb.base_points()[j]);
                            for c in 0..MAX_DIM {
                                dev = dev.max((x[c] - y[c]).abs().as_f64());
                            }
                            dev = dev.max((pa.map().weights()[i] - pb.map().weights()[j]).abs().as_f64());
                        }
                        if best.as_ref().map_or(true, |b| dev < b.0) {
                            best = Some((dev, o, pairing));
                        }
                    }
                    let Some((dev, orientation, pairing)) = best else { continue };
                    if dev <= MATCH_TOLERANCE {
                        if used[k][fa.id()] || used[l][fb.id()] {
                            return Err(Error::Domain(format!(
                                "face {fa} of patch {k} or face {fb} of patch {l} matches more than one face"
                            )));
                        }
                        used[k][fa.id()] = true;
                        used[l][fb.id()] = true;
                        ports.push(Port {
                            patches: [k, l],
                            faces: [fa, fb],
                            orientation,
                            pairing,
                        });
                    } else if dev < AMBIGUITY_TOLERANCE {
                        return Err(Error::AmbiguousInterface {
                            patch_a: k,
                            face_a: fa.id(),
                            patch_b: l,
                            face_b: fb.id(),
                            deviation: dev,
                        });
                    }
                }
            }
        }
    }
    let mut local = vec![Vec::new(); patches.len()];
    for (p, port) in ports.iter().enumerate() {
        for side in 0..2 {
            local[port.patches[side]].push(LocalPort {
                face: port.faces[side],
                port: p,
                side,
            });
        }
    }
    Ok(PortTopology { ports, local })
}
