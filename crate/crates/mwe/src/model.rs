//! Trainable parameters and embedding composition.
//!
//! Every word carries a `d`-dimensional center vector per role plus one
//! `s`-dimensional local vector per relation; an `s x d` transform per
//! relation lifts locals into the center space. The composed embedding
//! under relation `r` is `c + X^T u`, and relational drift `||X^T u||`
//! is kept within a configured range by rescaling.

use std::fmt;

use rand::Rng;

use crate::error::{Error, Result};
use crate::num::{dot, norm2, Scalar};

/// Head (governor/predicate) or tail (dependent/argument) side of a tuple.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Role {
    Head,
    Tail,
}

impl fmt::Display for Role {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Role::Head => write!(f, "head"),
            Role::Tail => write!(f, "tail"),
        }
    }
}

/// Dense row-major matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Mat<F> {
    rows: usize,
    cols: usize,
    data: Vec<F>,
}

impl<F: Scalar> Mat<F> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Mat {
            rows,
            cols,
            data: vec![F::zero(); rows * cols],
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, i: usize) -> &[F] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn row_mut(&mut self, i: usize) -> &mut [F] {
        &mut self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn values(&self) -> &[F] {
        &self.data
    }

    pub fn values_mut(&mut self) -> &mut [F] {
        &mut self.data
    }

    fn fill_uniform(&mut self, rng: &mut impl Rng, lo: f64, hi: f64) {
        for v in &mut self.data {
            *v = F::of(rng.random_range(lo..hi));
        }
    }
}

/// All trainable tensors of a multiplex embedding model.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelParams<F> {
    n: usize,
    m: usize,
    d: usize,
    s: usize,
    drift: F,
    scale_k: F,
    center_head: Mat<F>,
    center_tail: Mat<F>,
    local_head: Vec<Mat<F>>,
    local_tail: Vec<Mat<F>>,
    xform_head: Vec<Mat<F>>,
    xform_tail: Vec<Mat<F>>,
}

/// Number of stored values: centers, locals, and transforms, head and
/// tail variants each.
pub fn param_count(n: u64, m: u64, d: u64, s: u64) -> u64 {
    2 * n * d + 2 * n * m * s + 2 * m * s * d
}

/// Value count of a multi-prototype layout (one full vector per word and
/// relation, head and tail variants), for size comparisons.
pub fn multi_prototype_count(n: u64, m: u64, d: u64) -> u64 {
    2 * n * m * d
}

impl<F: Scalar> ModelParams<F> {
    /// All-zero model, mostly for tests and hand-built fixtures.
    pub fn zeros(n: usize, m: usize, d: usize, s: usize, drift: F, scale_k: F) -> Result<Self> {
        Self::check_dims(n, m, d, s, drift, scale_k)?;
        Ok(ModelParams {
            n,
            m,
            d,
            s,
            drift,
            scale_k,
            center_head: Mat::zeros(n, d),
            center_tail: Mat::zeros(n, d),
            local_head: (0..m).map(|_| Mat::zeros(n, s)).collect(),
            local_tail: (0..m).map(|_| Mat::zeros(n, s)).collect(),
            xform_head: (0..m).map(|_| Mat::zeros(s, d)).collect(),
            xform_tail: (0..m).map(|_| Mat::zeros(s, d)).collect(),
        })
    }

    /// Random initialization: centers uniform in `(-0.5/d, 0.5/d)`, locals
    /// zero (each word starts exactly at its center), transforms uniform in
    /// `(-1/sqrt(s*d), 1/sqrt(s*d))` so gradients reach the locals.
    pub fn init(
        n: usize,
        m: usize,
        d: usize,
        s: usize,
        drift: F,
        scale_k: F,
        rng: &mut impl Rng,
    ) -> Result<Self> {
        let mut p = Self::zeros(n, m, d, s, drift, scale_k)?;
        let c = 0.5 / d as f64;
        p.center_head.fill_uniform(rng, -c, c);
        p.center_tail.fill_uniform(rng, -c, c);
        let x = 1.0 / ((s * d) as f64).sqrt();
        for r in 0..m {
            p.xform_head[r].fill_uniform(rng, -x, x);
        }
        for r in 0..m {
            p.xform_tail[r].fill_uniform(rng, -x, x);
        }
        Ok(p)
    }

    fn check_dims(n: usize, m: usize, d: usize, s: usize, drift: F, scale_k: F) -> Result<()> {
        if n == 0 || m == 0 || d == 0 || s == 0 {
            return Err(Error::InvalidInput(
                "model dimensions must all be positive".into(),
            ));
        }
        if s > d {
            return Err(Error::InvalidInput(format!(
                "local dimension {s} exceeds center dimension {d}"
            )));
        }
        if drift <= F::zero() {
            return Err(Error::InvalidInput("drift range must be positive".into()));
        }
        if scale_k <= F::zero() || scale_k > F::one() {
            return Err(Error::InvalidInput(
                "scaling parameter must lie in (0, 1]".into(),
            ));
        }
        Ok(())
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn s(&self) -> usize {
        self.s
    }

    pub fn drift(&self) -> F {
        self.drift
    }

    pub fn scale_k(&self) -> F {
        self.scale_k
    }

    pub fn value_count(&self) -> u64 {
        param_count(self.n as u64, self.m as u64, self.d as u64, self.s as u64)
    }

    fn check_word(&self, w: usize) -> Result<()> {
        if w >= self.n {
            return Err(Error::WordIdOutOfRange { id: w, n: self.n });
        }
        Ok(())
    }

    fn check_rel(&self, r: usize) -> Result<()> {
        if r >= self.m {
            return Err(Error::RelationIdOutOfRange { id: r, m: self.m });
        }
        Ok(())
    }

    pub fn center(&self, role: Role) -> &Mat<F> {
        match role {
            Role::Head => &self.center_head,
            Role::Tail => &self.center_tail,
        }
    }

    pub fn center_mut(&mut self, role: Role) -> &mut Mat<F> {
        match role {
            Role::Head => &mut self.center_head,
            Role::Tail => &mut self.center_tail,
        }
    }

    pub fn local(&self, role: Role, r: usize) -> &Mat<F> {
        match role {
            Role::Head => &self.local_head[r],
            Role::Tail => &self.local_tail[r],
        }
    }

    pub fn local_mut(&mut self, role: Role, r: usize) -> &mut Mat<F> {
        match role {
            Role::Head => &mut self.local_head[r],
            Role::Tail => &mut self.local_tail[r],
        }
    }

    pub fn xform(&self, role: Role, r: usize) -> &Mat<F> {
        match role {
            Role::Head => &self.xform_head[r],
            Role::Tail => &self.xform_tail[r],
        }
    }

    pub fn xform_mut(&mut self, role: Role, r: usize) -> &mut Mat<F> {
        match role {
            Role::Head => &mut self.xform_head[r],
            Role::Tail => &mut self.xform_tail[r],
        }
    }

    /// Simultaneous mutable access to a relation's local matrix and
    /// transform, for updates that touch both.
    pub fn local_and_xform_mut(&mut self, role: Role, r: usize) -> (&mut Mat<F>, &mut Mat<F>) {
        match role {
            Role::Head => (&mut self.local_head[r], &mut self.xform_head[r]),
            Role::Tail => (&mut self.local_tail[r], &mut self.xform_tail[r]),
        }
    }

    pub(crate) fn check_ids(&self, w: usize, r: usize) -> Result<()> {
        self.check_word(w)?;
        self.check_rel(r)
    }

    /// Composed embedding `c + X^T u` for word `w` in `role` under relation `r`.
    pub fn compose(&self, w: usize, role: Role, r: usize) -> Result<Vec<F>> {
        self.check_word(w)?;
        self.check_rel(r)?;
        let mut out = vec![F::zero(); self.d];
        self.compose_into(w, role, r, &mut out);
        Ok(out)
    }

    /// `compose` without the allocation; ids must be in range.
    pub(crate) fn compose_into(&self, w: usize, role: Role, r: usize, out: &mut [F]) {
        debug_assert_eq!(out.len(), self.d);
        out.copy_from_slice(self.center(role).row(w));
        let local = self.local(role, r).row(w);
        let xform = self.xform(role, r);
        for (i, &ui) in local.iter().enumerate() {
            if ui == F::zero() {
                continue;
            }
            for (o, &xij) in out.iter_mut().zip(xform.row(i)) {
                *o += xij * ui;
            }
        }
    }

    /// Tuple score: dot product of the head and tail composed embeddings.
    pub fn score(&self, w_h: usize, r: usize, w_t: usize) -> Result<F> {
        let vh = self.compose(w_h, Role::Head, r)?;
        let vt = self.compose(w_t, Role::Tail, r)?;
        Ok(dot(&vh, &vt))
    }

    /// Plausibility: cosine of the composed head and tail embeddings.
    pub fn plausibility(&self, w_h: usize, r: usize, w_t: usize) -> Result<F> {
        let vh = self.compose(w_h, Role::Head, r)?;
        let vt = self.compose(w_t, Role::Tail, r)?;
        let nh = norm2(&vh);
        if nh == F::zero() {
            return Err(Error::ZeroNorm {
                word: w_h,
                role: Role::Head,
            });
        }
        let nt = norm2(&vt);
        if nt == F::zero() {
            return Err(Error::ZeroNorm {
                word: w_t,
                role: Role::Tail,
            });
        }
        Ok(dot(&vh, &vt) / (nh * nt))
    }

    /// `||X^T u||_2` for word `w` in `role` under relation `r`.
    pub fn product_norm(&self, w: usize, role: Role, r: usize) -> Result<F> {
        self.check_word(w)?;
        self.check_rel(r)?;
        let local = self.local(role, r).row(w);
        let xform = self.xform(role, r);
        let mut acc = F::zero();
        for j in 0..self.d {
            let mut vj = F::zero();
            for (i, &ui) in local.iter().enumerate() {
                vj += xform.row(i)[j] * ui;
            }
            acc += vj * vj;
        }
        Ok(acc.sqrt())
    }

    /// Caps relational drift: when `||X^T u|| > a`, both `X` and `u` are
    /// divided by `sqrt(a'/(k*a))`, leaving the product norm at `k*a`.
    /// Returns whether a rescale happened.
    pub fn project_drift(&mut self, w: usize, role: Role, r: usize) -> Result<bool> {
        let prod = self.product_norm(w, role, r)?;
        if prod <= self.drift {
            return Ok(false);
        }
        let factor = (prod / (self.scale_k * self.drift)).sqrt();
        for v in self.xform_mut(role, r).values_mut() {
            *v /= factor;
        }
        for v in self.local_mut(role, r).row_mut(w) {
            *v /= factor;
        }
        Ok(true)
    }

    /// Drift projection variant that leaves `X` alone and rescales only the
    /// word's local vector (divided by `a'/(k*a)`), so one word's overflow
    /// does not perturb every other word under the relation.
    pub fn project_drift_u_only(&mut self, w: usize, role: Role, r: usize) -> Result<bool> {
        let prod = self.product_norm(w, role, r)?;
        if prod <= self.drift {
            return Ok(false);
        }
        let factor = prod / (self.scale_k * self.drift);
        for v in self.local_mut(role, r).row_mut(w) {
            *v /= factor;
        }
        Ok(true)
    }

    /// True when every stored value is finite.
    pub fn all_finite(&self) -> bool {
        self.tensors().all(|m| m.values().iter().all(|v| v.is_finite()))
    }

    fn tensors(&self) -> impl Iterator<Item = &Mat<F>> {
        std::iter::once(&self.center_head)
            .chain(std::iter::once(&self.center_tail))
            .chain(self.local_head.iter())
            .chain(self.local_tail.iter())
            .chain(self.xform_head.iter())
            .chain(self.xform_tail.iter())
    }

    /// FNV-1a over the bit patterns of the center tensors.
    pub fn center_checksum(&self) -> u64 {
        let mut h = Fnv::new();
        h.update(&self.center_head);
        h.update(&self.center_tail);
        h.finish()
    }

    /// FNV-1a over the bit patterns of the local and transform tensors.
    pub fn relational_checksum(&self) -> u64 {
        let mut h = Fnv::new();
        for m in self.local_head.iter().chain(&self.local_tail) {
            h.update(m);
        }
        for m in self.xform_head.iter().chain(&self.xform_tail) {
            h.update(m);
        }
        h.finish()
    }
}

struct Fnv(u64);

impl Fnv {
    fn new() -> Self {
        Fnv(0xcbf2_9ce4_8422_2325)
    }

    fn update<F: Scalar>(&mut self, m: &Mat<F>) {
        for v in m.values() {
            for b in v.as_f64().to_bits().to_le_bytes() {
                self.0 ^= b as u64;
                self.0 = self.0.wrapping_mul(0x0000_0100_0000_01b3);
            }
        }
    }

    fn finish(&self) -> u64 {
        self.0
    }
}
