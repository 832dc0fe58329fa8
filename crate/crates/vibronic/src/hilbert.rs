//! Truncated tensor-product Hilbert space and the sparse operators living on
//! it.
//!
//! The electronic sector is the symmetric (maximal-spin) block `J = N/2` of
//! `N` two-level components, dimension `N + 1`; the vibrational mode is a
//! Fock space truncated at `n_max`. Basis states are `|J, M⟩ ⊗ |n⟩` with the
//! flat index
//!
//! ```text
//! idx = ((2M + 2J) / 2) * (n_max + 1) + n
//! ```
//!
//! i.e. spin-major with field-contiguous blocks, so tracing out the field is
//! a blocked sum. Spin projections are carried around as exact integer
//! twice-values `2M` to keep half-integer bookkeeping drift-free.

use nalgebra::DMatrix;
use num_complex::Complex64 as C64;

use crate::error::{Error, Result};

/// Symmetric-sector spin ⊗ truncated Fock basis.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct BasisSpec {
    n_spins: usize,
    fock_cutoff: usize,
}

impl BasisSpec {
    /// Builds the basis for `n_spins ≥ 1` components and Fock states
    /// `0..=fock_cutoff`.
    pub fn new(n_spins: usize, fock_cutoff: usize) -> Result<Self> {
        if n_spins == 0 {
            return Err(Error::EmptySpinSector);
        }
        Ok(Self { n_spins, fock_cutoff })
    }

    pub fn n_spins(&self) -> usize {
        self.n_spins
    }

    pub fn fock_cutoff(&self) -> usize {
        self.fock_cutoff
    }

    /// Twice the total spin; `2J = N` exactly.
    pub fn two_j(&self) -> i64 {
        self.n_spins as i64
    }

    pub fn j(&self) -> f64 {
        self.n_spins as f64 / 2.0
    }

    /// Spin-sector dimension `N + 1`.
    pub fn spin_dim(&self) -> usize {
        self.n_spins + 1
    }

    /// Field-sector dimension `n_max + 1`.
    pub fn field_dim(&self) -> usize {
        self.fock_cutoff + 1
    }

    pub fn dim(&self) -> usize {
        self.spin_dim() * self.field_dim()
    }

    /// Number of excitations above the lowest Dicke level for projection `2M`.
    pub fn excitations_of(&self, two_m: i64) -> Result<usize> {
        let k2 = two_m + self.two_j();
        if two_m.abs() > self.two_j() || k2 % 2 != 0 {
            return Err(Error::SpinProjectionOutOfRange { two_m, two_j: self.two_j() });
        }
        Ok((k2 / 2) as usize)
    }

    /// Flat index of `|J, M⟩ ⊗ |n⟩`; see the module docs for the layout.
    pub fn flat_index(&self, two_m: i64, n: usize) -> Result<usize> {
        let k = self.excitations_of(two_m)?;
        if n > self.fock_cutoff {
            return Err(Error::FockIndexOutOfRange { n, n_max: self.fock_cutoff });
        }
        Ok(k * self.field_dim() + n)
    }

    /// Inverse of [`flat_index`](Self::flat_index): `(2M, n)`.
    pub fn split_index(&self, idx: usize) -> (i64, usize) {
        let f = self.field_dim();
        let k = idx / f;
        (2 * k as i64 - self.two_j(), idx % f)
    }

    /// Spin levels as twice-values, `-2J, -2J + 2, ..., +2J`.
    pub fn two_m_levels(&self) -> impl Iterator<Item = i64> {
        let two_j = self.two_j();
        (0..=self.n_spins as i64).map(move |k| 2 * k - two_j)
    }
}

/// Operator kinds constructible on a [`BasisSpec`]. Field operators act on
/// the Fock factor, spin operators on the collective-spin factor; either is
/// tensored with the identity on the other factor.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum OpKind {
    Annihilate,
    Create,
    Number,
    Jz,
    Jplus,
    Jminus,
    Jx,
    /// `exp(iπ(n̂ + Ĵz + J))`, diagonal with entries ±1.
    Parity,
    Identity,
}

impl std::str::FromStr for OpKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "annihilate" => Self::Annihilate,
            "create" => Self::Create,
            "number" => Self::Number,
            "jz" => Self::Jz,
            "jplus" => Self::Jplus,
            "jminus" => Self::Jminus,
            "jx" => Self::Jx,
            "parity" => Self::Parity,
            "identity" => Self::Identity,
            other => return Err(Error::UnknownOpKind(other.to_string())),
        })
    }
}

/// Coordinate-list sparse operator with deterministic (row-major) entry
/// ordering and no explicit zeros.
#[derive(Clone, Debug)]
pub struct SparseOperator {
    dim: usize,
    entries: Vec<(u32, u32, C64)>,
    hermitian: bool,
}

impl SparseOperator {
    /// Assembles an operator from (row, col, value) triples. Duplicate
    /// positions are summed, exact zeros dropped, and the result sorted
    /// row-major. If `hermitian` is set the entries are audited against
    /// `A = A†` to 1e-12.
    pub fn from_entries(
        dim: usize,
        raw: impl IntoIterator<Item = (usize, usize, C64)>,
        hermitian: bool,
    ) -> Result<Self> {
        let mut entries: Vec<(u32, u32, C64)> = Vec::new();
        for (r, c, v) in raw {
            debug_assert!(r < dim && c < dim);
            entries.push((r as u32, c as u32, v));
        }
        entries.sort_by_key(|&(r, c, _)| (r, c));
        let mut merged: Vec<(u32, u32, C64)> = Vec::with_capacity(entries.len());
        for (r, c, v) in entries {
            match merged.last_mut() {
                Some(last) if last.0 == r && last.1 == c => last.2 += v,
                _ => merged.push((r, c, v)),
            }
        }
        merged.retain(|&(_, _, v)| v != C64::ZERO);
        let op = Self { dim, entries: merged, hermitian };
        if hermitian {
            let defect = op.hermiticity_defect();
            if defect > 1e-12 {
                return Err(Error::NotHermitian { defect });
            }
        }
        Ok(op)
    }

    pub fn identity(dim: usize) -> Self {
        let one = C64::new(1.0, 0.0);
        Self {
            dim,
            entries: (0..dim as u32).map(|i| (i, i, one)).collect(),
            hermitian: true,
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn nnz(&self) -> usize {
        self.entries.len()
    }

    pub fn entries(&self) -> &[(u32, u32, C64)] {
        &self.entries
    }

    pub fn is_hermitian_hint(&self) -> bool {
        self.hermitian
    }

    /// Max elementwise magnitude of `A - A†`.
    pub fn hermiticity_defect(&self) -> f64 {
        use std::collections::HashMap;
        let mut map: HashMap<(u32, u32), C64> = HashMap::with_capacity(self.entries.len());
        for &(r, c, v) in &self.entries {
            map.insert((r, c), v);
        }
        let mut defect = 0.0f64;
        for &(r, c, v) in &self.entries {
            let conj = map.get(&(c, r)).copied().unwrap_or(C64::ZERO);
            defect = defect.max((v - conj.conj()).norm());
        }
        defect
    }

    pub fn dense(&self) -> DMatrix<C64> {
        let mut m = DMatrix::zeros(self.dim, self.dim);
        for &(r, c, v) in &self.entries {
            m[(r as usize, c as usize)] += v;
        }
        m
    }

    pub fn dagger(&self) -> Self {
        let raw = self
            .entries
            .iter()
            .map(|&(r, c, v)| (c as usize, r as usize, v.conj()));
        Self::from_entries(self.dim, raw, self.hermitian).expect("dagger preserves hermiticity")
    }

    pub fn scaled(&self, factor: C64) -> Self {
        let herm = self.hermitian && factor.im == 0.0;
        let raw = self
            .entries
            .iter()
            .map(|&(r, c, v)| (r as usize, c as usize, factor * v));
        Self::from_entries(self.dim, raw, herm).expect("scaling by a real keeps hermiticity")
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        if self.dim != other.dim {
            return Err(Error::DimensionMismatch { expected: self.dim, got: other.dim });
        }
        let raw = self
            .entries
            .iter()
            .chain(other.entries.iter())
            .map(|&(r, c, v)| (r as usize, c as usize, v));
        Self::from_entries(self.dim, raw, self.hermitian && other.hermitian)
    }

    /// Sparse product `self * other`; the result makes no hermiticity claim.
    pub fn matmul(&self, other: &Self) -> Result<Self> {
        if self.dim != other.dim {
            return Err(Error::DimensionMismatch { expected: self.dim, got: other.dim });
        }
        use std::collections::BTreeMap;
        let mut by_row: Vec<Vec<(u32, C64)>> = vec![Vec::new(); self.dim];
        for &(r, c, v) in &other.entries {
            by_row[r as usize].push((c, v));
        }
        let mut acc: BTreeMap<(u32, u32), C64> = BTreeMap::new();
        for &(r, k, v) in &self.entries {
            for &(c, w) in &by_row[k as usize] {
                *acc.entry((r, c)).or_insert(C64::ZERO) += v * w;
            }
        }
        Self::from_entries(
            self.dim,
            acc.into_iter().map(|((r, c), v)| (r as usize, c as usize, v)),
            false,
        )
    }

    /// `y += coeff * A x` for a state vector of length `dim`.
    pub fn acc_vec(&self, coeff: C64, x: &[C64], y: &mut [C64]) {
        debug_assert_eq!(x.len(), self.dim);
        debug_assert_eq!(y.len(), self.dim);
        for &(r, c, v) in &self.entries {
            y[r as usize] += coeff * v * x[c as usize];
        }
    }

    pub fn mul_vec(&self, x: &[C64]) -> Vec<C64> {
        let mut y = vec![C64::ZERO; self.dim];
        self.acc_vec(C64::new(1.0, 0.0), x, &mut y);
        y
    }

    /// `out += coeff * A * rho` for a column-major `dim × dim` matrix stored
    /// as a flat slice.
    pub fn acc_mul_left(&self, coeff: C64, rho: &[C64], out: &mut [C64]) {
        let d = self.dim;
        debug_assert_eq!(rho.len(), d * d);
        debug_assert_eq!(out.len(), d * d);
        for j in 0..d {
            let base = j * d;
            let rcol = &rho[base..base + d];
            let ocol = &mut out[base..base + d];
            for &(r, c, v) in &self.entries {
                ocol[r as usize] += coeff * v * rcol[c as usize];
            }
        }
    }

    /// `out += coeff * rho * A`, same storage convention as
    /// [`acc_mul_left`](Self::acc_mul_left).
    pub fn acc_mul_right(&self, coeff: C64, rho: &[C64], out: &mut [C64]) {
        let d = self.dim;
        debug_assert_eq!(rho.len(), d * d);
        debug_assert_eq!(out.len(), d * d);
        for &(k, j, v) in &self.entries {
            let cv = coeff * v;
            let rbase = k as usize * d;
            let obase = j as usize * d;
            for i in 0..d {
                out[obase + i] += cv * rho[rbase + i];
            }
        }
    }

    /// `⟨ψ| A |ψ⟩`.
    pub fn expectation(&self, psi: &[C64]) -> C64 {
        debug_assert_eq!(psi.len(), self.dim);
        let mut acc = C64::ZERO;
        for &(r, c, v) in &self.entries {
            acc += psi[r as usize].conj() * v * psi[c as usize];
        }
        acc
    }

    /// `tr(A ρ)` for a column-major flat density matrix.
    pub fn trace_with(&self, rho: &[C64]) -> C64 {
        let d = self.dim;
        debug_assert_eq!(rho.len(), d * d);
        let mut acc = C64::ZERO;
        for &(r, c, v) in &self.entries {
            acc += v * rho[r as usize + c as usize * d];
        }
        acc
    }
}

fn real(x: f64) -> C64 {
    C64::new(x, 0.0)
}

/// Fock-factor matrix elements; `kind` restricted to field operators.
fn field_factor(kind: OpKind, fdim: usize) -> Vec<(usize, usize, C64)> {
    match kind {
        OpKind::Annihilate => (1..fdim).map(|n| (n - 1, n, real((n as f64).sqrt()))).collect(),
        OpKind::Create => (1..fdim).map(|n| (n, n - 1, real((n as f64).sqrt()))).collect(),
        OpKind::Number => (0..fdim).map(|n| (n, n, real(n as f64))).collect(),
        OpKind::Parity => (0..fdim)
            .map(|n| (n, n, real(if n % 2 == 0 { 1.0 } else { -1.0 })))
            .collect(),
        OpKind::Identity => (0..fdim).map(|n| (n, n, real(1.0))).collect(),
        _ => unreachable!("not a field operator"),
    }
}

/// Collective-spin matrix elements on the `J = N/2` block, indexed by
/// `k = (2M + 2J)/2`. Ladder weights come from exact integer arithmetic on
/// twice-values: `J(J+1) - M(M±1) = (2J(2J+2) - 2M(2M±2)) / 4`.
fn spin_factor(kind: OpKind, two_j: i64) -> Vec<(usize, usize, C64)> {
    let sdim = (two_j + 1) as usize;
    let two_m = |k: usize| 2 * k as i64 - two_j;
    match kind {
        OpKind::Jz => (0..sdim).map(|k| (k, k, real(two_m(k) as f64 / 2.0))).collect(),
        OpKind::Jplus => (0..sdim - 1)
            .map(|k| {
                let m2 = two_m(k);
                let w2 = two_j * (two_j + 2) - m2 * (m2 + 2);
                (k + 1, k, real((w2 as f64 / 4.0).sqrt()))
            })
            .collect(),
        OpKind::Jminus => (1..sdim)
            .map(|k| {
                let m2 = two_m(k);
                let w2 = two_j * (two_j + 2) - m2 * (m2 - 2);
                (k - 1, k, real((w2 as f64 / 4.0).sqrt()))
            })
            .collect(),
        OpKind::Jx => {
            let mut v = Vec::new();
            for (r, c, w) in spin_factor(OpKind::Jplus, two_j) {
                v.push((r, c, w * 0.5));
            }
            for (r, c, w) in spin_factor(OpKind::Jminus, two_j) {
                v.push((r, c, w * 0.5));
            }
            v
        }
        // exp(iπ(M + J)) = (-1)^k
        OpKind::Parity => (0..sdim)
            .map(|k| (k, k, real(if k % 2 == 0 { 1.0 } else { -1.0 })))
            .collect(),
        OpKind::Identity => (0..sdim).map(|k| (k, k, real(1.0))).collect(),
        _ => unreachable!("not a spin operator"),
    }
}

/// Tensor product of a spin-factor and a field-factor coordinate list,
/// lifted to the full basis.
pub(crate) fn tensor_op(
    basis: &BasisSpec,
    spin: &[(usize, usize, C64)],
    field: &[(usize, usize, C64)],
    hermitian: bool,
) -> SparseOperator {
    let f = basis.field_dim();
    let mut raw = Vec::with_capacity(spin.len() * field.len());
    for &(ks, kc, vs) in spin {
        for &(ns, nc, vf) in field {
            raw.push((ks * f + ns, kc * f + nc, vs * vf));
        }
    }
    SparseOperator::from_entries(basis.dim(), raw, hermitian)
        .expect("factor construction is exact")
}

/// Standard operator on the full spin ⊗ field space.
///
/// Matrix elements follow the textbook conventions `a|n⟩ = √n |n-1⟩`,
/// `J±|J,M⟩ = √(J(J+1) − M(M±1)) |J,M±1⟩`, `Jz|J,M⟩ = M|J,M⟩`, and the
/// parity is `exp(iπ(n̂ + Ĵz + J))`.
pub fn op_matrix(kind: OpKind, basis: &BasisSpec) -> SparseOperator {
    let two_j = basis.two_j();
    let fdim = basis.field_dim();
    let spin_id = spin_factor(OpKind::Identity, two_j);
    let field_id = field_factor(OpKind::Identity, fdim);
    match kind {
        OpKind::Annihilate | OpKind::Create => {
            tensor_op(basis, &spin_id, &field_factor(kind, fdim), false)
        }
        OpKind::Number => tensor_op(basis, &spin_id, &field_factor(kind, fdim), true),
        OpKind::Jz | OpKind::Jx => {
            tensor_op(basis, &spin_factor(kind, two_j), &field_id, true)
        }
        OpKind::Jplus | OpKind::Jminus => {
            tensor_op(basis, &spin_factor(kind, two_j), &field_id, false)
        }
        OpKind::Parity => tensor_op(
            basis,
            &spin_factor(OpKind::Parity, two_j),
            &field_factor(OpKind::Parity, fdim),
            true,
        ),
        OpKind::Identity => SparseOperator::identity(basis.dim()),
    }
}

/// Normalized state vector over a [`BasisSpec`].
#[derive(Clone, Debug)]
pub struct PureState {
    amplitudes: Vec<C64>,
    basis: BasisSpec,
}

impl PureState {
    /// Wraps an amplitude vector, requiring unit norm to 1e-9.
    pub fn new(amplitudes: Vec<C64>, basis: BasisSpec) -> Result<Self> {
        if amplitudes.len() != basis.dim() {
            return Err(Error::DimensionMismatch { expected: basis.dim(), got: amplitudes.len() });
        }
        let norm = amplitudes.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
        if (norm - 1.0).abs() > 1e-9 {
            return Err(Error::NotNormalized { norm });
        }
        Ok(Self { amplitudes, basis })
    }

    /// Trajectory-internal constructor: bypasses the norm gate so that
    /// integrator drift is reported rather than masked.
    pub(crate) fn from_raw(amplitudes: Vec<C64>, basis: BasisSpec) -> Self {
        Self { amplitudes, basis }
    }

    pub fn amplitudes(&self) -> &[C64] {
        &self.amplitudes
    }

    pub fn basis(&self) -> BasisSpec {
        self.basis
    }

    pub fn norm(&self) -> f64 {
        self.amplitudes.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn inner(&self, other: &Self) -> C64 {
        self.amplitudes
            .iter()
            .zip(&other.amplitudes)
            .map(|(a, b)| a.conj() * b)
            .sum()
    }

    /// `|ψ⟩⟨ψ|` as a dense density operator.
    pub fn projector(&self) -> DensityOp {
        let d = self.basis.dim();
        let mut m = DMatrix::zeros(d, d);
        for i in 0..d {
            for j in 0..d {
                m[(i, j)] = self.amplitudes[i] * self.amplitudes[j].conj();
            }
        }
        DensityOp::from_raw(m, self.basis)
    }
}

/// `|J, M⟩ ⊗ |n⟩` with `M` passed as the exact twice-value `2M`.
pub fn basis_state(basis: &BasisSpec, two_m: i64, n: usize) -> Result<PureState> {
    let idx = basis.flat_index(two_m, n)?;
    let mut amplitudes = vec![C64::ZERO; basis.dim()];
    amplitudes[idx] = C64::new(1.0, 0.0);
    Ok(PureState { amplitudes, basis: *basis })
}

/// Hermitian, unit-trace operator over a [`BasisSpec`].
#[derive(Clone, Debug)]
pub struct DensityOp {
    matrix: DMatrix<C64>,
    basis: BasisSpec,
}

impl DensityOp {
    /// Wraps a matrix, requiring Hermiticity to 1e-10 and unit trace to 1e-8.
    /// Positivity is not eigen-checked here; see
    /// [`min_eigenvalue`](Self::min_eigenvalue).
    pub fn new(matrix: DMatrix<C64>, basis: BasisSpec) -> Result<Self> {
        if matrix.nrows() != basis.dim() || matrix.ncols() != basis.dim() {
            return Err(Error::DimensionMismatch { expected: basis.dim(), got: matrix.nrows() });
        }
        let op = Self { matrix, basis };
        let defect = op.hermiticity_defect();
        if defect > 1e-10 {
            return Err(Error::NotHermitian { defect });
        }
        let tr = op.trace();
        if (tr.re - 1.0).abs() > 1e-8 || tr.im.abs() > 1e-8 {
            return Err(Error::NotUnitTrace { trace: tr.re });
        }
        Ok(op)
    }

    pub(crate) fn from_raw(matrix: DMatrix<C64>, basis: BasisSpec) -> Self {
        Self { matrix, basis }
    }

    pub fn matrix(&self) -> &DMatrix<C64> {
        &self.matrix
    }

    pub fn basis(&self) -> BasisSpec {
        self.basis
    }

    pub fn trace(&self) -> C64 {
        let mut acc = C64::ZERO;
        for i in 0..self.matrix.nrows() {
            acc += self.matrix[(i, i)];
        }
        acc
    }

    pub fn hermiticity_defect(&self) -> f64 {
        let n = self.matrix.nrows();
        let mut defect = 0.0f64;
        for i in 0..n {
            for j in i..n {
                defect = defect.max((self.matrix[(i, j)] - self.matrix[(j, i)].conj()).norm());
            }
        }
        defect
    }

    /// Smallest eigenvalue of the Hermitian part; the sign diagnostic for
    /// physicality.
    pub fn min_eigenvalue(&self) -> f64 {
        self.matrix
            .clone()
            .symmetric_eigenvalues()
            .iter()
            .fold(f64::INFINITY, |a, &b| a.min(b))
    }
}

/// Which factor survives a partial trace.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Subsystem {
    Spin,
    Field,
}

/// Traces out the complementary factor, returning the reduced operator in
/// the kept factor's own basis (`(N+1)`-dim spin block or `(n_max+1)`-dim
/// Fock block).
pub fn partial_trace(rho: &DensityOp, keep: Subsystem) -> DMatrix<C64> {
    let basis = rho.basis();
    let s = basis.spin_dim();
    let f = basis.field_dim();
    let m = rho.matrix();
    match keep {
        Subsystem::Spin => {
            let mut out = DMatrix::zeros(s, s);
            for k in 0..s {
                for k2 in 0..s {
                    let mut acc = C64::ZERO;
                    for n in 0..f {
                        acc += m[(k * f + n, k2 * f + n)];
                    }
                    out[(k, k2)] = acc;
                }
            }
            out
        }
        Subsystem::Field => {
            let mut out = DMatrix::zeros(f, f);
            for n in 0..f {
                for n2 in 0..f {
                    let mut acc = C64::ZERO;
                    for k in 0..s {
                        acc += m[(k * f + n, k * f + n2)];
                    }
                    out[(n, n2)] = acc;
                }
            }
            out
        }
    }
}
