//! Little-endian binary encoding of the trained ROM parts.

use std::sync::Arc;

use igarom::eim::{EimBasis, EimModel, EimPatch, EimStop, MagicStencil};
use igarom::fom::Source;
use igarom::geometry::ParameterSpace;
use igarom::numerics::Mat;
use igarom::rb::{GreedyStop, GreedyTrace};
use igarom::scrbe::{ModeIndex, PatchBasis, PatchLayout, PatchRom, PatchTables, PortSlots, PortSpace, ScrbeModel};
use igarom::splines::{Point, MAX_DIM};

use crate::CliError;

#[derive(Default)]
pub struct Encoder {
    buf: Vec<u8>,
}

impl Encoder {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn finish(self) -> Vec<u8> {
        self.buf
    }

    pub fn u8(&mut self, v: u8) {
        self.buf.push(v);
    }

    pub fn u64(&mut self, v: u64) {
        self.buf.extend_from_slice(&v.to_le_bytes());
    }

    pub fn usize(&mut self, v: usize) {
        self.u64(v as u64);
    }

    pub fn f64(&mut self, v: f64) {
        self.buf.extend_from_slice(&v.to_le_bytes());
    }

    pub fn str(&mut self, s: &str) {
        self.usize(s.len());
        self.buf.extend_from_slice(s.as_bytes());
    }

    pub fn usizes(&mut self, v: &[usize]) {
        self.usize(v.len());
        v.iter().for_each(|&x| self.usize(x));
    }

    pub fn f64s(&mut self, v: &[f64]) {
        self.usize(v.len());
        v.iter().for_each(|&x| self.f64(x));
    }

    pub fn vecs(&mut self, v: &[Vec<f64>]) {
        self.usize(v.len());
        v.iter().for_each(|x| self.f64s(x));
    }

    pub fn point(&mut self, p: &Point<f64>) {
        p.iter().for_each(|&x| self.f64(x));
    }

    pub fn points(&mut self, v: &[Point<f64>]) {
        self.usize(v.len());
        v.iter().for_each(|p| self.point(p));
    }

    pub fn mat(&mut self, m: &Mat<f64>) {
        self.usize(m.rows());
        self.usize(m.cols());
        m.as_slice().iter().for_each(|&x| self.f64(x));
    }
}

pub struct Decoder<'a> {
    buf: &'a [u8],
    pos: usize,
}

type DResult<T> = std::result::Result<T, CliError>;

impl<'a> Decoder<'a> {
    pub fn new(buf: &'a [u8]) -> Self {
        Self { buf, pos: 0 }
    }

    pub fn is_done(&self) -> bool {
        self.pos == self.buf.len()
    }

    fn take(&mut self, n: usize) -> DResult<&'a [u8]> {
        if self.buf.len() - self.pos < n {
            return Err(CliError::Format("truncated section".into()));
        }
        let s = &self.buf[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    pub fn u8(&mut self) -> DResult<u8> {
        Ok(self.take(1)?[0])
    }

    pub fn u64(&mut self) -> DResult<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    pub fn usize(&mut self) -> DResult<usize> {
        usize::try_from(self.u64()?).map_err(|_| CliError::Format("length overflow".into()))
    }

    /// Length prefix, checked against the remaining bytes.
    fn len(&mut self, elem: usize) -> DResult<usize> {
        let n = self.usize()?;
        if n.saturating_mul(elem) > self.buf.len() - self.pos {
            return Err(CliError::Format("length prefix exceeds section".into()));
        }
        Ok(n)
    }

    pub fn f64(&mut self) -> DResult<f64> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    pub fn str(&mut self) -> DResult<String> {
        let n = self.len(1)?;
        String::from_utf8(self.take(n)?.to_vec()).map_err(|_| CliError::Format("invalid UTF-8".into()))
    }

    pub fn usizes(&mut self) -> DResult<Vec<usize>> {
        let n = self.len(8)?;
        (0..n).map(|_| self.usize()).collect()
    }

    pub fn f64s(&mut self) -> DResult<Vec<f64>> {
        let n = self.len(8)?;
        (0..n).map(|_| self.f64()).collect()
    }

    pub fn vecs(&mut self) -> DResult<Vec<Vec<f64>>> {
        let n = self.len(8)?;
        (0..n).map(|_| self.f64s()).collect()
    }

    pub fn point(&mut self) -> DResult<Point<f64>> {
        let mut p = [0.0; MAX_DIM];
        for v in &mut p {
            *v = self.f64()?;
        }
        Ok(p)
    }

    pub fn points(&mut self) -> DResult<Vec<Point<f64>>> {
        let n = self.len(8 * MAX_DIM)?;
        (0..n).map(|_| self.point()).collect()
    }

    pub fn mat(&mut self) -> DResult<Mat<f64>> {
        let r = self.usize()?;
        let c = self.usize()?;
        if r.saturating_mul(c).saturating_mul(8) > self.buf.len() - self.pos {
            return Err(CliError::Format("matrix exceeds section".into()));
        }
        let data = (0..r * c).map(|_| self.f64()).collect::<DResult<_>>()?;
        Ok(Mat::from_row_major(r, c, data))
    }
}

fn eim_stop_code(s: EimStop) -> u8 {
    match s {
        EimStop::Tolerance => 0,
        EimStop::MaxTerms => 1,
        EimStop::Exhausted => 2,
    }
}

fn eim_stop(c: u8) -> DResult<EimStop> {
    Ok(match c {
        0 => EimStop::Tolerance,
        1 => EimStop::MaxTerms,
        2 => EimStop::Exhausted,
        _ => return Err(CliError::Format(format!("unknown EIM stop code {c}"))),
    })
}

fn greedy_stop_code(s: GreedyStop) -> u8 {
    match s {
        GreedyStop::Tolerance => 0,
        GreedyStop::MaxSize => 1,
        GreedyStop::Exhausted => 2,
    }
}

fn greedy_stop(c: u8) -> DResult<GreedyStop> {
    Ok(match c {
        0 => GreedyStop::Tolerance,
        1 => GreedyStop::MaxSize,
        2 => GreedyStop::Exhausted,
        _ => return Err(CliError::Format(format!("unknown greedy stop code {c}"))),
    })
}

pub fn put_source(e: &mut Encoder, s: &Source<f64>) -> DResult<()> {
    match s {
        Source::Constant(c) => {
            e.u8(0);
            e.f64(*c);
        }
        Source::Monomial { scale } => {
            e.u8(1);
            e.f64(*scale);
        }
        Source::Custom(_) => return Err(CliError::Format("closure sources cannot be stored".into())),
    }
    Ok(())
}

pub fn get_source(d: &mut Decoder) -> DResult<Source<f64>> {
    Ok(match d.u8()? {
        0 => Source::Constant(d.f64()?),
        1 => Source::Monomial { scale: d.f64()? },
        c => return Err(CliError::Format(format!("unknown source code {c}"))),
    })
}

fn put_basis(e: &mut Encoder, b: &EimBasis<f64>, with_phi: bool) {
    e.usizes(&b.magic);
    e.vecs(if with_phi { &b.phi } else { &[] });
    e.mat(&b.b);
    e.f64s(&b.history);
    e.usizes(&b.chosen);
    e.u8(eim_stop_code(b.stop));
}

fn get_basis(d: &mut Decoder) -> DResult<EimBasis<f64>> {
    let magic = d.usizes()?;
    let phi = d.vecs()?;
    Ok(EimBasis {
        magic,
        phi,
        b: d.mat()?,
        history: d.f64s()?,
        chosen: d.usizes()?,
        stop: eim_stop(d.u8()?)?,
    })
}

fn put_stencil(e: &mut Encoder, s: &MagicStencil<f64>) {
    e.usize(s.component);
    e.point(&s.xi);
    e.f64s(&s.values);
    e.points(&s.grads);
    e.points(&s.base);
    e.usize(s.displacements.len());
    s.displacements.iter().for_each(|d| e.points(d));
}

fn get_stencil(d: &mut Decoder) -> DResult<MagicStencil<f64>> {
    let component = d.usize()?;
    let xi = d.point()?;
    let values = d.f64s()?;
    let grads = d.points()?;
    let base = d.points()?;
    let n = d.usize()?;
    let displacements = (0..n).map(|_| d.points()).collect::<DResult<_>>()?;
    Ok(MagicStencil {
        component,
        xi,
        values,
        grads,
        base,
        displacements,
    })
}

pub fn put_params(e: &mut Encoder, p: &ParameterSpace<f64>) {
    e.f64s(p.lower());
    e.f64s(p.upper());
    e.usize(p.n_patches());
    (0..p.n_patches()).for_each(|k| e.usizes(p.patch_params(k)));
}

pub fn get_params(d: &mut Decoder) -> DResult<ParameterSpace<f64>> {
    let lower = d.f64s()?;
    let upper = d.f64s()?;
    let n = d.usize()?;
    let pp = (0..n).map(|_| d.usizes()).collect::<DResult<_>>()?;
    Ok(ParameterSpace::new(lower, upper, pp)?)
}

/// EIM model; `with_phi` keeps the basis functions (needed to assemble
/// affine terms, not for online evaluation).
pub fn encode_eim(m: &EimModel<f64>, with_phi: bool) -> DResult<Vec<u8>> {
    let mut e = Encoder::new();
    put_params(&mut e, m.params());
    e.usize(m.patches.len());
    for p in &m.patches {
        e.usize(p.dim());
        put_source(&mut e, p.source())?;
        put_basis(&mut e, &p.alpha, with_phi);
        put_basis(&mut e, &p.force, with_phi);
        e.usize(p.alpha_stencils().len());
        p.alpha_stencils().iter().for_each(|s| put_stencil(&mut e, s));
        e.usize(p.force_stencils().len());
        p.force_stencils().iter().for_each(|s| put_stencil(&mut e, s));
    }
    Ok(e.finish())
}

pub fn decode_eim(bytes: &[u8]) -> DResult<EimModel<f64>> {
    let mut d = Decoder::new(bytes);
    let params = get_params(&mut d)?;
    let n = d.usize()?;
    let mut patches = Vec::with_capacity(n.min(1 << 16));
    for _ in 0..n {
        let dim = d.usize()?;
        let source = get_source(&mut d)?;
        let alpha = get_basis(&mut d)?;
        let force = get_basis(&mut d)?;
        let na = d.usize()?;
        let sa = (0..na).map(|_| get_stencil(&mut d)).collect::<DResult<_>>()?;
        let nf = d.usize()?;
        let sf = (0..nf).map(|_| get_stencil(&mut d)).collect::<DResult<_>>()?;
        patches.push(EimPatch::from_parts(alpha, force, sa, sf, dim, source)?);
    }
    Ok(EimModel::from_parts(patches, params)?)
}

pub fn encode_ports(ports: &[PortSpace<f64>]) -> Vec<u8> {
    let mut e = Encoder::new();
    e.usize(ports.len());
    for p in ports {
        e.usize(p.n_full);
        e.vecs(&p.modes);
        e.f64s(&p.sigma);
    }
    e.finish()
}

pub fn decode_ports(bytes: &[u8]) -> DResult<Vec<PortSpace<f64>>> {
    let mut d = Decoder::new(bytes);
    let n = d.usize()?;
    (0..n)
        .map(|_| {
            Ok(PortSpace {
                n_full: d.usize()?,
                modes: d.vecs()?,
                sigma: d.f64s()?,
            })
        })
        .collect()
}

fn put_trace(e: &mut Encoder, t: &GreedyTrace) {
    e.usizes(&t.selected);
    e.f64s(&t.history);
    e.u8(greedy_stop_code(t.stop));
}

fn get_trace(d: &mut Decoder) -> DResult<GreedyTrace> {
    Ok(GreedyTrace {
        selected: d.usizes()?,
        history: d.f64s()?,
        stop: greedy_stop(d.u8()?)?,
    })
}

fn put_layout(e: &mut Encoder, l: &PatchLayout) {
    e.usize(l.n_slots);
    e.usizes(&l.bubble);
    e.usize(l.ports.len());
    for p in &l.ports {
        e.usize(p.port);
        e.usizes(&p.slots);
    }
}

fn get_layout(d: &mut Decoder) -> DResult<PatchLayout> {
    let n_slots = d.usize()?;
    let bubble = d.usizes()?;
    let n = d.usize()?;
    let ports = (0..n)
        .map(|_| {
            Ok(PortSlots {
                port: d.usize()?,
                slots: d.usizes()?,
            })
        })
        .collect::<DResult<_>>()?;
    Ok(PatchLayout {
        n_slots,
        bubble,
        ports,
    })
}

/// Bubble spaces and Schur tables of every patch.
pub fn encode_bubbles(m: &ScrbeModel<f64>) -> Vec<u8> {
    let mut e = Encoder::new();
    e.usize(m.patches.len());
    for p in &m.patches {
        e.usizes(&p.modes);
        let t = &p.tables;
        e.usizes(&t.mode_sizes);
        e.usize(t.source_size);
        e.usize(t.a.len());
        t.a.iter().for_each(|a| e.mat(a));
        e.vecs(&t.f);
        e.usize(p.traces.len());
        p.traces.iter().for_each(|t| put_trace(&mut e, t));
        match &p.basis {
            None => e.u8(0),
            Some(b) => {
                e.u8(1);
                put_layout(&mut e, &b.layout);
                e.vecs(&b.psi);
                e.usize(b.bubbles.len());
                b.bubbles.iter().for_each(|v| e.vecs(v));
                e.vecs(&b.source);
            }
        }
    }
    e.finish()
}

pub fn decode_scrbe(bubbles: &[u8], eim: Arc<EimModel<f64>>, ports: &[PortSpace<f64>]) -> DResult<ScrbeModel<f64>> {
    let mut d = Decoder::new(bubbles);
    let n = d.usize()?;
    let mut patches = Vec::with_capacity(n.min(1 << 16));
    for _ in 0..n {
        let modes = d.usizes()?;
        let mode_sizes = d.usizes()?;
        let source_size = d.usize()?;
        let na = d.usize()?;
        let a = (0..na).map(|_| d.mat()).collect::<DResult<_>>()?;
        let f = d.vecs()?;
        let nt = d.usize()?;
        let traces = (0..nt).map(|_| get_trace(&mut d)).collect::<DResult<_>>()?;
        let basis = match d.u8()? {
            0 => None,
            _ => {
                let layout = get_layout(&mut d)?;
                let psi = d.vecs()?;
                let nb = d.usize()?;
                let bubbles = (0..nb).map(|_| d.vecs()).collect::<DResult<_>>()?;
                let source = d.vecs()?;
                Some(PatchBasis {
                    layout,
                    psi,
                    bubbles,
                    source,
                })
            }
        };
        patches.push(PatchRom {
            modes,
            tables: PatchTables {
                a,
                f,
                mode_sizes,
                source_size,
            },
            basis,
            traces,
        });
    }
    if !d.is_done() {
        return Err(CliError::Format("trailing bytes in bubble section".into()));
    }
    let sizes: Vec<usize> = ports.iter().map(PortSpace::len).collect();
    Ok(ScrbeModel {
        params: eim.params().clone(),
        eim,
        index: ModeIndex::new(&sizes),
        patches,
    })
}
