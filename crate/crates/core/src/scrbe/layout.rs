use crate::fom::Fom;
use crate::{Error, Real, Result};

/// Slots of one local port, aligned with the port's free DOFs.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PortSlots {
    pub port: usize,
    pub slots: Vec<usize>,
}

/// Partition of a patch's slots into bubble slots and port slots.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PatchLayout {
    pub n_slots: usize,
    pub bubble: Vec<usize>,
    pub ports: Vec<PortSlots>,
}

impl PatchLayout {
    pub fn new<T: Real>(fom: &Fom<T>, k: usize) -> Result<Self> {
        let model = fom.model();
        let pa = fom.assembler().patch(k);
        let slot = |i: usize| pa.slot(i).expect("free local DOF has a slot");
        let bubble: Vec<usize> = model.bubble_dofs(k).iter().map(|&i| slot(i)).collect();
        let mut owner = vec![usize::MAX; pa.n_slots()];
        let mut ports = Vec::new();
        for lp in model.ports().local_ports(k) {
            let pd = model.port_dofs(lp.port);
            let slots: Vec<usize> = pd.local[lp.side].iter().map(|&i| slot(i)).collect();
            for &s in &slots {
                if owner[s] != usize::MAX {
                    return Err(Error::Domain(format!(
                        "patch {k}: DOF shared by ports {} and {}; cross points are not supported",
                        owner[s], lp.port
                    )));
                }
                owner[s] = lp.port;
            }
            ports.push(PortSlots { port: lp.port, slots });
        }
        Ok(Self {
            n_slots: pa.n_slots(),
            bubble,
            ports,
        })
    }

    /// Embeds a bubble vector into the slots.
    pub fn embed_bubble<T: Real>(&self, b: &[T]) -> Vec<T> {
        let mut out = vec![T::zero(); self.n_slots];
        for (&s, &v) in self.bubble.iter().zip(b) {
            out[s] = v;
        }
        out
    }

    pub fn restrict_bubble<T: Real>(&self, v: &[T]) -> Vec<T> {
        self.bubble.iter().map(|&s| v[s]).collect()
    }
}

pub fn layouts<T: Real>(fom: &Fom<T>) -> Result<Vec<PatchLayout>> {
    (0..fom.model().n_patches()).map(|k| PatchLayout::new(fom, k)).collect()
}
