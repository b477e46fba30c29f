use std::sync::Arc;

use rayon::prelude::*;

use super::exact::{lift_port_modes, mode_index, PatchLiftings, ScrbeSolution};
use super::layout::PatchLayout;
use super::ports::PortSpace;
use super::schur::{ModeIndex, PatchContribution, SchurSystem};
use crate::eim::{assemble_affine_terms, patch_train_set, AffineCoefficients, AffineOperator, EimModel};
use crate::fom::Fom;
use crate::geometry::ParameterSpace;
use crate::numerics::{dot, CsrMatrix, Mat};
use crate::rb::{greedy_theta, AffineProblem, GreedyOptions, GreedyTrace, ReducedSpace};
use crate::{Error, Real, Result};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ScrbeOptions {
    pub greedy: GreedyOptions,
    /// Size of each patch's local training set.
    pub n_train: usize,
    pub seed: u64,
}

impl Default for ScrbeOptions {
    fn default() -> Self {
        Self {
            greedy: GreedyOptions::default(),
            n_train: 250,
            seed: 0,
        }
    }
}

/// θ of patch `k` for a bubble problem. Lifting problems have `θ_f = θ_a`.
struct PatchTheta<T> {
    eim: Arc<EimModel<T>>,
    k: usize,
    lifting: bool,
}

impl<T: Real> AffineCoefficients<T> for PatchTheta<T> {
    fn n_a(&self) -> usize {
        self.eim.patches[self.k].alpha.len()
    }

    fn n_f(&self) -> usize {
        if self.lifting {
            self.n_a()
        } else {
            self.eim.patches[self.k].force.len()
        }
    }

    fn theta(&self, mu_local: &[T]) -> Result<(Vec<T>, Vec<T>)> {
        let (ta, tf) = self.eim.patches[self.k].theta(mu_local)?;
        Ok(if self.lifting { (ta.clone(), ta) } else { (ta, tf) })
    }
}

/// Offline data of one trained bubble space.
#[derive(Clone, Debug, PartialEq)]
pub struct BubbleSpace<T> {
    /// `X`-orthonormal basis on the bubble slots.
    pub basis: Vec<Vec<T>>,
    pub trace: GreedyTrace,
}

impl<T: Real> BubbleSpace<T> {
    pub fn len(&self) -> usize {
        self.basis.len()
    }

    pub fn is_empty(&self) -> bool {
        self.basis.is_empty()
    }
}

/// Projected patch operator on the frame `W = [ψ_1, V_1, ψ_2, V_2, …, V_f]`.
#[derive(Clone, Debug, PartialEq)]
pub struct PatchTables<T> {
    /// `Wᵀ A_q W`.
    pub a: Vec<Mat<T>>,
    /// `Wᵀ f_q`.
    pub f: Vec<Vec<T>>,
    /// Bubble dimension of each lifting block (block size is `1 + N_i`).
    pub mode_sizes: Vec<usize>,
    pub source_size: usize,
}

impl<T: Real> PatchTables<T> {
    pub fn frame_len(&self) -> usize {
        self.mode_sizes.iter().map(|n| n + 1).sum::<usize>() + self.source_size
    }

    fn offsets(&self) -> (Vec<usize>, usize) {
        let mut off = Vec::with_capacity(self.mode_sizes.len());
        let mut o = 0;
        for &n in &self.mode_sizes {
            off.push(o);
            o += n + 1;
        }
        (off, o)
    }
}

/// Fields needed to reconstruct patch solutions (not needed online).
#[derive(Clone, Debug, PartialEq)]
pub struct PatchBasis<T> {
    pub layout: PatchLayout,
    pub psi: Vec<Vec<T>>,
    pub bubbles: Vec<Vec<Vec<T>>>,
    pub source: Vec<Vec<T>>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct PatchRom<T> {
    /// Skeleton index of each local lifting.
    pub modes: Vec<usize>,
    pub tables: PatchTables<T>,
    pub basis: Option<PatchBasis<T>>,
    /// Greedy traces: one per lifting, then the source bubble.
    pub traces: Vec<GreedyTrace>,
}

/// Trained reduced static-condensation model.
#[derive(Clone)]
pub struct ScrbeModel<T> {
    pub eim: Arc<EimModel<T>>,
    pub params: ParameterSpace<T>,
    pub index: ModeIndex,
    pub patches: Vec<PatchRom<T>>,
}

/// Reduced coefficients of one patch.
#[derive(Clone, Debug, PartialEq)]
pub struct PatchCoefficients<T> {
    pub bubbles: Vec<Vec<T>>,
    pub source: Vec<T>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ScrbeOnline<T> {
    pub skeleton: Vec<T>,
    pub patches: Vec<PatchCoefficients<T>>,
}

fn dense_solve<T: Real>(a: &Mat<T>, b: &[T]) -> Result<Vec<T>> {
    if b.is_empty() {
        return Ok(Vec::new());
    }
    match a.cholesky() {
        Ok(c) => Ok(c.solve(b)),
        Err(_) => Ok(a
            .lu()
            .map_err(|_| Error::SingularSystem("reduced bubble matrix is singular".into()))?
            .solve(b)),
    }
}

fn train_bubble<T: Real>(
    a_bb: &[CsrMatrix<T>],
    f_terms: Vec<Vec<T>>,
    metric: &CsrMatrix<T>,
    coefficients: Arc<dyn AffineCoefficients<T>>,
    train: &[(Vec<T>, Vec<T>)],
    opts: &GreedyOptions,
) -> Result<BubbleSpace<T>> {
    let op = AffineOperator::new(a_bb.to_vec(), f_terms, coefficients)?;
    let problem = AffineProblem::new(op, metric.clone())?;
    let (space, trace): (ReducedSpace<T>, GreedyTrace) = greedy_theta(&problem, train, opts)?;
    Ok(BubbleSpace {
        basis: space.basis,
        trace,
    })
}

fn build_tables<T: Real>(a: &[CsrMatrix<T>], f: &[Vec<T>], frame: &[Vec<T>]) -> (Vec<Mat<T>>, Vec<Vec<T>>) {
    let n = frame.len();
    let ta = a
        .par_iter()
        .map(|aq| {
            let images: Vec<Vec<T>> = frame.iter().map(|w| aq.matvec(w)).collect();
            let mut m = Mat::zeros(n, n);
            for i in 0..n {
                for j in i..n {
                    let v = dot(&frame[i], &images[j]);
                    m[(i, j)] = v;
                    m[(j, i)] = v;
                }
            }
            m
        })
        .collect();
    let tf = f.iter().map(|fq| frame.iter().map(|w| dot(w, fq)).collect()).collect();
    (ta, tf)
}

fn train_patch_rom<T: Real>(
    fom: &Fom<T>,
    eim: &Arc<EimModel<T>>,
    k: usize,
    lift: PatchLiftings<T>,
    opts: &ScrbeOptions,
) -> Result<PatchRom<T>> {
    let model = fom.model();
    let pa = fom.assembler().patch(k);
    let ep = &eim.patches[k];
    let terms = assemble_affine_terms(pa, &ep.alpha, &ep.force);
    let lay = &lift.layout;
    let b = &lay.bubble;
    let train_mu = patch_train_set(fom, k, opts.n_train, opts.seed);
    let thetas: Vec<(Vec<T>, Vec<T>)> = train_mu.iter().map(|mu| ep.theta(mu)).collect::<Result<_>>()?;
    let empty = |n: usize| BubbleSpace {
        basis: Vec::new(),
        trace: GreedyTrace {
            selected: Vec::new(),
            history: vec![0.0; n.min(1)],
            stop: crate::rb::GreedyStop::Exhausted,
        },
    };
    let (bubbles, source) = if b.is_empty() {
        (lift.psi.iter().map(|_| empty(0)).collect::<Vec<_>>(), empty(0))
    } else {
        let a_bb: Vec<CsrMatrix<T>> = terms.a.iter().map(|a| a.submatrix(b, b)).collect();
        let mu_ref = model.params().local(k, &fom.reference_mu());
        let (xk, _) = pa.assemble(&model.patch_points(k, &fom.reference_mu()), fom.source(), &mu_ref)?;
        let metric = xk.submatrix(b, b);
        let lifting: Arc<dyn AffineCoefficients<T>> = Arc::new(PatchTheta {
            eim: eim.clone(),
            k,
            lifting: true,
        });
        let lift_train: Vec<(Vec<T>, Vec<T>)> = thetas.iter().map(|(ta, _)| (ta.clone(), ta.clone())).collect();
        let bubbles = lift
            .psi
            .par_iter()
            .map(|psi| {
                let f_terms = terms
                    .a
                    .iter()
                    .map(|aq| {
                        let r = aq.matvec(psi);
                        b.iter().map(|&s| -r[s]).collect()
                    })
                    .collect();
                train_bubble(&a_bb, f_terms, &metric, lifting.clone(), &lift_train, &opts.greedy)
            })
            .collect::<Result<Vec<_>>>()?;
        let src_coef: Arc<dyn AffineCoefficients<T>> = Arc::new(PatchTheta {
            eim: eim.clone(),
            k,
            lifting: false,
        });
        let f_terms = terms.f.iter().map(|fq| lay.restrict_bubble(fq)).collect();
        let source = train_bubble(&a_bb, f_terms, &metric, src_coef, &thetas, &opts.greedy)?;
        (bubbles, source)
    };
    let mut frame = Vec::new();
    for (psi, bs) in lift.psi.iter().zip(&bubbles) {
        frame.push(psi.clone());
        frame.extend(bs.basis.iter().map(|v| lay.embed_bubble(v)));
    }
    frame.extend(source.basis.iter().map(|v| lay.embed_bubble(v)));
    let (ta, tf) = build_tables(&terms.a, &terms.f, &frame);
    let tables = PatchTables {
        a: ta,
        f: tf,
        mode_sizes: bubbles.iter().map(BubbleSpace::len).collect(),
        source_size: source.len(),
    };
    let mut traces: Vec<GreedyTrace> = bubbles.iter().map(|b| b.trace.clone()).collect();
    traces.push(source.trace.clone());
    let basis = PatchBasis {
        layout: lift.layout.clone(),
        psi: lift.psi,
        bubbles: bubbles.into_iter().map(|b| b.basis).collect(),
        source: source.basis,
    };
    Ok(PatchRom {
        modes: lift.modes,
        tables,
        basis: Some(basis),
        traces,
    })
}

/// Offline stage: liftings, bubble greedies and projected tables per patch.
pub fn train_scrbe<T: Real>(
    fom: &Fom<T>,
    eim: Arc<EimModel<T>>,
    ports: &[PortSpace<T>],
    opts: &ScrbeOptions,
) -> Result<ScrbeModel<T>> {
    let lifts = lift_port_modes(fom, ports)?;
    let patches = lifts
        .into_par_iter()
        .enumerate()
        .map(|(k, lift)| train_patch_rom(fom, &eim, k, lift, opts))
        .collect::<Result<Vec<_>>>()?;
    Ok(ScrbeModel {
        eim,
        params: fom.model().params().clone(),
        index: mode_index(ports),
        patches,
    })
}

/// Sparse coordinates of a skeleton function in the patch frame.
struct FrameVector<T> {
    start: usize,
    values: Vec<T>,
}

fn frame_bilinear<T: Real>(a: &Mat<T>, x: &FrameVector<T>, y: &FrameVector<T>) -> T {
    let mut s = T::zero();
    for (i, &xi) in x.values.iter().enumerate() {
        let row = a.row(x.start + i);
        let mut t = T::zero();
        for (j, &yj) in y.values.iter().enumerate() {
            t += row[y.start + j] * yj;
        }
        s += xi * t;
    }
    s
}

impl<T: Real> PatchRom<T> {
    /// Online bubble solves and condensed contribution of the patch.
    pub fn online(&self, theta_a: &[T], theta_f: &[T]) -> Result<(PatchContribution<T>, PatchCoefficients<T>)> {
        let t = &self.tables;
        let n = t.frame_len();
        let mut a = Mat::zeros(n, n);
        for (c, m) in theta_a.iter().zip(&t.a) {
            a.axpy(*c, m);
        }
        let mut f = vec![T::zero(); n];
        for (c, v) in theta_f.iter().zip(&t.f) {
            for (o, &x) in f.iter_mut().zip(v) {
                *o += *c * x;
            }
        }
        let block = |start: usize, len: usize| {
            let mut m = Mat::zeros(len, len);
            for i in 0..len {
                for j in 0..len {
                    m[(i, j)] = a[(start + i, start + j)];
                }
            }
            m
        };
        let (offsets, src) = t.offsets();
        let mut phis = Vec::with_capacity(offsets.len());
        let mut bubbles = Vec::with_capacity(offsets.len());
        for (&o, &nb) in offsets.iter().zip(&t.mode_sizes) {
            let rhs: Vec<T> = (0..nb).map(|i| -a[(o + 1 + i, o)]).collect();
            let c = dense_solve(&block(o + 1, nb), &rhs)?;
            let mut values = vec![T::one()];
            values.extend_from_slice(&c);
            phis.push(FrameVector { start: o, values });
            bubbles.push(c);
        }
        let ns = t.source_size;
        let source = dense_solve(&block(src, ns), &f[src..src + ns])?;
        let bf = FrameVector {
            start: src,
            values: source.clone(),
        };
        let m = phis.len();
        let mut matrix = Mat::zeros(m, m);
        for i in 0..m {
            for j in i..m {
                let v = frame_bilinear(&a, &phis[i], &phis[j]);
                matrix[(i, j)] = v;
                matrix[(j, i)] = v;
            }
        }
        let rhs = phis
            .iter()
            .map(|p| {
                let fp: T = p.values.iter().enumerate().map(|(i, &v)| v * f[p.start + i]).sum();
                fp - frame_bilinear(&a, p, &bf)
            })
            .collect();
        Ok((
            PatchContribution {
                modes: self.modes.clone(),
                matrix,
                rhs,
            },
            PatchCoefficients { bubbles, source },
        ))
    }

    /// Patch field on the slots for given skeleton and bubble coefficients.
    pub fn field(&self, skeleton: &[T], c: &PatchCoefficients<T>) -> Result<Vec<T>> {
        let basis = self
            .basis
            .as_ref()
            .ok_or_else(|| Error::Domain("model was stored without reconstruction data".into()))?;
        let lay = &basis.layout;
        let mut bubble = vec![T::zero(); lay.bubble.len()];
        let mut add = |s: T, v: &[T]| {
            for (o, &x) in bubble.iter_mut().zip(v) {
                *o += s * x;
            }
        };
        for (cs, v) in c.source.iter().zip(&basis.source) {
            add(*cs, v);
        }
        for (i, &m) in self.modes.iter().enumerate() {
            for (cb, v) in c.bubbles[i].iter().zip(&basis.bubbles[i]) {
                add(skeleton[m] * *cb, v);
            }
        }
        let mut u = lay.embed_bubble(&bubble);
        for (&m, psi) in self.modes.iter().zip(&basis.psi) {
            for (o, &x) in u.iter_mut().zip(psi) {
                *o += skeleton[m] * x;
            }
        }
        Ok(u)
    }
}

impl<T: Real> ScrbeModel<T> {
    pub fn n_skeleton(&self) -> usize {
        self.index.len()
    }

    pub fn schur(&self, mu: &[T]) -> Result<(SchurSystem<T>, Vec<PatchCoefficients<T>>)> {
        self.params.check(mu)?;
        let parts: Vec<(PatchContribution<T>, PatchCoefficients<T>)> = self
            .patches
            .par_iter()
            .enumerate()
            .map(|(k, p)| {
                let (ta, tf) = self.eim.patches[k].theta(&self.params.local(k, mu))?;
                p.online(&ta, &tf)
            })
            .collect::<Result<_>>()?;
        let (contributions, coefficients): (Vec<_>, Vec<_>) = parts.into_iter().unzip();
        Ok((SchurSystem::assemble(self.index.len(), &contributions), coefficients))
    }

    /// Online evaluation: θ, bubble solves, skeleton solve.
    pub fn solve(&self, mu: &[T]) -> Result<ScrbeOnline<T>> {
        let (sys, patches) = self.schur(mu)?;
        Ok(ScrbeOnline {
            skeleton: sys.solve()?,
            patches,
        })
    }

    pub fn reconstruct(&self, sol: &ScrbeOnline<T>) -> Result<ScrbeSolution<T>> {
        let fields = self
            .patches
            .iter()
            .zip(&sol.patches)
            .map(|(p, c)| p.field(&sol.skeleton, c))
            .collect::<Result<_>>()?;
        Ok(ScrbeSolution {
            skeleton: sol.skeleton.clone(),
            fields,
        })
    }

    /// Drops the reconstruction data, keeping only what online solves need.
    pub fn strip_bases(&mut self) {
        for p in &mut self.patches {
            p.basis = None;
        }
    }

    /// `(mode-bubble sizes, source size)` per patch.
    pub fn basis_sizes(&self) -> Vec<(Vec<usize>, usize)> {
        self.patches
            .iter()
            .map(|p| (p.tables.mode_sizes.clone(), p.tables.source_size))
            .collect()
    }
}
