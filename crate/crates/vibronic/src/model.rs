//! Physical parameters, the up-down pulse `λ(t)`, and the driven Hamiltonian
//!
//! ```text
//! H(t) = ω n̂ + ε Ĵz + (λ(t)/√N) (a† + a) · 2Ĵx
//! ```
//!
//! in units ℏ = 1 with ω setting the energy/time scale. The collective `2Ĵx`
//! is the site sum of σx over the N identically-coupled components. The ramp
//! rate `v` is the slope |dλ/dt|, so a full up-down pulse lasts
//! `2·λ_max / v`; the pulse crosses the critical coupling `√(ωε)/2` twice
//! whenever `λ_max` exceeds it.

use crate::error::{Error, Result};
use crate::hilbert::{op_matrix, tensor_op, BasisSpec, OpKind, SparseOperator};
use num_complex::Complex64 as C64;

/// Physical constants of the driven model.
#[derive(Clone, Copy, Debug)]
pub struct ModelParams {
    /// Vibrational quantum ω (sets the unit of energy; default 1).
    pub omega: f64,
    /// Excitonic splitting ε (resonant default ε = ω).
    pub epsilon: f64,
    /// Number of responding components N.
    pub n_spins: usize,
    /// Peak of the coupling ramp.
    pub lambda_max: f64,
}

impl ModelParams {
    /// Resonant parameters ε = ω = 1 for `n_spins` components.
    pub fn resonant(n_spins: usize, lambda_max: f64) -> Self {
        Self { omega: 1.0, epsilon: 1.0, n_spins, lambda_max }
    }

    /// The chlorophyll-dimer provenance point: ε/ω = 667.7/742.0 with ω = 1.
    pub fn physical_detuning(n_spins: usize, lambda_max: f64) -> Self {
        Self { omega: 1.0, epsilon: 667.7 / 742.0, n_spins, lambda_max }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_spins == 0 {
            return Err(Error::EmptySpinSector);
        }
        if !(self.omega > 0.0) {
            return Err(Error::InvalidParameter { name: "omega", value: self.omega });
        }
        if !(self.epsilon > 0.0) {
            return Err(Error::InvalidParameter { name: "epsilon", value: self.epsilon });
        }
        if !(self.lambda_max >= 0.0) {
            return Err(Error::InvalidParameter { name: "lambda_max", value: self.lambda_max });
        }
        Ok(())
    }
}

/// Ramp shapes. Only the piecewise-linear up-down form ships; the enum keeps
/// the protocol extensible.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PulseShape {
    UpDownLinear,
}

/// The coupling schedule: rise at slope `v` to `lambda_max`, descend at the
/// same slope back to zero.
#[derive(Clone, Copy, Debug)]
pub struct PulseProtocol {
    /// Ramp slope |dλ/dt| in units of ω²/ℏ.
    pub velocity: f64,
    pub lambda_max: f64,
    pub shape: PulseShape,
}

impl PulseProtocol {
    pub fn up_down_linear(velocity: f64, lambda_max: f64) -> Result<Self> {
        if !(velocity > 0.0) {
            return Err(Error::InvalidParameter { name: "velocity", value: velocity });
        }
        if !(lambda_max >= 0.0) {
            return Err(Error::InvalidParameter { name: "lambda_max", value: lambda_max });
        }
        Ok(Self { velocity, lambda_max, shape: PulseShape::UpDownLinear })
    }

    /// Time of the ramp apex, `λ_max / v`.
    pub fn apex_time(&self) -> f64 {
        self.lambda_max / self.velocity
    }

    /// Total pulse duration, `2 λ_max / v`.
    pub fn duration(&self) -> f64 {
        2.0 * self.lambda_max / self.velocity
    }
}

/// The coupling at time `t ≥ 0`: continuous, piecewise linear, zero at both
/// ends and after the pulse.
pub fn lambda_at(t: f64, protocol: &PulseProtocol) -> f64 {
    let PulseShape::UpDownLinear = protocol.shape;
    if t <= 0.0 || t >= protocol.duration() {
        return 0.0;
    }
    if t <= protocol.apex_time() {
        protocol.velocity * t
    } else {
        2.0 * protocol.lambda_max - protocol.velocity * t
    }
}

/// The Hamiltonian split into its λ-independent and λ-linear parts, so that
/// `H(t) = static_part + (λ(t) · norm_factor) · coupling_part` can be applied
/// without reassembly.
#[derive(Clone, Debug)]
pub struct HamiltonianAssembly {
    /// `ω n̂ + ε Ĵz`, diagonal.
    pub static_part: SparseOperator,
    /// `(a† + a) · 2Ĵx`, strictly off-diagonal.
    pub coupling_part: SparseOperator,
    /// `1/√N`.
    pub norm_factor: f64,
}

impl HamiltonianAssembly {
    pub fn build(params: &ModelParams, basis: &BasisSpec) -> Result<Self> {
        params.validate()?;
        if basis.n_spins() != params.n_spins {
            return Err(Error::DimensionMismatch {
                expected: params.n_spins,
                got: basis.n_spins(),
            });
        }
        let number = op_matrix(OpKind::Number, basis);
        let jz = op_matrix(OpKind::Jz, basis);
        let static_part = number
            .scaled(C64::new(params.omega, 0.0))
            .add(&jz.scaled(C64::new(params.epsilon, 0.0)))?;

        // tensor the factor matrices directly: 2Jx on spin, a† + a on field
        let spin_only = BasisSpec::new(basis.n_spins(), 0)?;
        let mut spin_2jx = Vec::new();
        for &(r, c, v) in op_matrix(OpKind::Jx, &spin_only).entries() {
            spin_2jx.push((r as usize, c as usize, v * 2.0));
        }
        let f = basis.field_dim();
        let mut field_x = Vec::new();
        for n in 1..f {
            let w = C64::new((n as f64).sqrt(), 0.0);
            field_x.push((n - 1, n, w));
            field_x.push((n, n - 1, w));
        }
        let coupling_part = tensor_op(basis, &spin_2jx, &field_x, true);

        Ok(Self {
            static_part,
            coupling_part,
            norm_factor: 1.0 / (params.n_spins as f64).sqrt(),
        })
    }

    /// Sparse `H(λ)` at a given coupling value.
    pub fn sparse_at(&self, lambda: f64) -> SparseOperator {
        self.static_part
            .add(&self.coupling_part.scaled(C64::new(lambda * self.norm_factor, 0.0)))
            .expect("parts share a dimension")
    }

    /// `y += coeff · H(λ) x`.
    pub fn acc_vec(&self, lambda: f64, coeff: C64, x: &[C64], y: &mut [C64]) {
        self.static_part.acc_vec(coeff, x, y);
        self.coupling_part
            .acc_vec(coeff * (lambda * self.norm_factor), x, y);
    }

    /// `⟨ψ| H(λ) |ψ⟩`.
    pub fn expectation(&self, lambda: f64, psi: &[C64]) -> C64 {
        self.static_part.expectation(psi)
            + self.coupling_part.expectation(psi) * (lambda * self.norm_factor)
    }

    /// `tr(H(λ) ρ)` for a column-major flat density matrix.
    pub fn trace_with(&self, lambda: f64, rho: &[C64]) -> C64 {
        self.static_part.trace_with(rho)
            + self.coupling_part.trace_with(rho) * (lambda * self.norm_factor)
    }
}

/// `H(t)` on the given basis; convenience wrapper over
/// [`HamiltonianAssembly`].
pub fn hamiltonian_at(
    t: f64,
    params: &ModelParams,
    protocol: &PulseProtocol,
    basis: &BasisSpec,
) -> Result<SparseOperator> {
    let assembly = HamiltonianAssembly::build(params, basis)?;
    Ok(assembly.sparse_at(lambda_at(t, protocol)))
}

/// Critical coupling of the resonantly reduced model, `√(ωε)/2`.
pub fn critical_coupling(params: &ModelParams) -> f64 {
    (params.omega * params.epsilon).sqrt() / 2.0
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hilbert::basis_state;
    use approx::assert_relative_eq;
    use nalgebra::DMatrix;
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn pulse_shape_values() {
        let p = PulseProtocol::up_down_linear(0.25, 1.0).unwrap();
        assert_eq!(lambda_at(0.0, &p), 0.0);
        assert_relative_eq!(lambda_at(p.apex_time(), &p), 1.0, epsilon = 1e-15);
        assert_relative_eq!(lambda_at(p.duration(), &p), 0.0, epsilon = 1e-15);
        assert_eq!(lambda_at(p.duration() + 3.0, &p), 0.0);
        // continuity across the apex
        let eps = 1e-9;
        assert!(
            (lambda_at(p.apex_time() - eps, &p) - lambda_at(p.apex_time() + eps, &p)).abs() < 1e-8
        );
        assert!(PulseProtocol::up_down_linear(0.0, 1.0).is_err());
    }

    #[test]
    fn diagonal_limit_ground_eigenvalue() {
        let params = ModelParams::resonant(3, 1.0);
        let basis = BasisSpec::new(3, 6).unwrap();
        let protocol = PulseProtocol::up_down_linear(1.0, 0.0).unwrap();
        let h = hamiltonian_at(0.0, &params, &protocol, &basis).unwrap();
        let gs = basis_state(&basis, -3, 0).unwrap();
        let e = h.expectation(gs.amplitudes());
        assert_relative_eq!(e.re, -1.5 * params.epsilon, epsilon = 1e-14);
        assert!(e.im.abs() < 1e-14);
        // off-diagonal-free at λ = 0
        assert!(h.entries().iter().all(|&(r, c, _)| r == c));
    }

    #[test]
    fn hermitian_at_random_times() {
        let params = ModelParams::physical_detuning(3, 1.0);
        let basis = BasisSpec::new(3, 10).unwrap();
        let protocol = PulseProtocol::up_down_linear(0.5, 1.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..5 {
            let t = rng.random::<f64>() * protocol.duration();
            let h = hamiltonian_at(t, &params, &protocol, &basis).unwrap();
            assert!(h.hermiticity_defect() < 1e-12);
        }
    }

    /// Independent dense construction: Kronecker products of textbook factor
    /// matrices, diagonalized to give the ground-energy oracle.
    fn dense_hamiltonian(params: &ModelParams, basis: &BasisSpec, lambda: f64) -> DMatrix<C64> {
        let s = basis.spin_dim();
        let f = basis.field_dim();
        let j = basis.j();
        let c = |x: f64| C64::new(x, 0.0);
        let mut a = DMatrix::<C64>::zeros(f, f);
        for n in 1..f {
            a[(n - 1, n)] = c((n as f64).sqrt());
        }
        let x = &a + a.adjoint();
        let num = a.adjoint() * &a;
        let mut jz = DMatrix::<C64>::zeros(s, s);
        let mut jp = DMatrix::<C64>::zeros(s, s);
        for k in 0..s {
            jz[(k, k)] = c(-j + k as f64);
        }
        for k in 0..s - 1 {
            let m = -j + k as f64;
            jp[(k + 1, k)] = c((j * (j + 1.0) - m * (m + 1.0)).sqrt());
        }
        let sx2 = &jp + jp.adjoint(); // 2 Jx
        let id_s = DMatrix::<C64>::identity(s, s);
        let id_f = DMatrix::<C64>::identity(f, f);
        id_s.kronecker(&num) * c(params.omega)
            + jz.kronecker(&id_f) * c(params.epsilon)
            + sx2.kronecker(&x) * c(lambda / (params.n_spins as f64).sqrt())
    }

    #[test]
    fn ground_energy_matches_dense_oracle() {
        let params = ModelParams::resonant(1, 1.0);
        let basis = BasisSpec::new(1, 40).unwrap();
        let assembly = HamiltonianAssembly::build(&params, &basis).unwrap();
        let ours = assembly.sparse_at(0.5).dense();
        let oracle = dense_hamiltonian(&params, &basis, 0.5);
        let e_ours = ours.symmetric_eigenvalues().min();
        let e_oracle = oracle.symmetric_eigenvalues().min();
        assert!((e_ours - e_oracle).abs() < 1e-9);
        // and the assemblies agree elementwise
        assert!((ours - oracle).map(|v| v.norm()).max() < 1e-12);
    }

    #[test]
    fn critical_coupling_values() {
        assert_relative_eq!(critical_coupling(&ModelParams::resonant(3, 1.0)), 0.5);
        let double = ModelParams { omega: 2.0, epsilon: 2.0, n_spins: 3, lambda_max: 1.0 };
        assert_relative_eq!(critical_coupling(&double), 1.0);
        let phys = ModelParams::physical_detuning(3, 1.0);
        assert_relative_eq!(critical_coupling(&phys), 0.4743, epsilon = 1e-4);
        assert_relative_eq!(
            critical_coupling(&phys),
            (667.7f64 / 742.0).sqrt() / 2.0,
            epsilon = 1e-15
        );
    }

    #[test]
    fn commutes_with_parity_at_random_times() {
        let params = ModelParams::resonant(2, 1.0);
        let basis = BasisSpec::new(2, 8).unwrap();
        let protocol = PulseProtocol::up_down_linear(0.3, 1.0).unwrap();
        let parity = op_matrix(OpKind::Parity, &basis);
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..10 {
            let t = rng.random::<f64>() * protocol.duration();
            let h = hamiltonian_at(t, &params, &protocol, &basis).unwrap();
            let comm = h.matmul(&parity).unwrap().dense() - parity.matmul(&h).unwrap().dense();
            assert!(comm.map(|v| v.norm()).max() < 1e-10);
        }
    }

    #[test]
    fn linear_in_lambda() {
        let params = ModelParams::resonant(3, 1.0);
        let basis = BasisSpec::new(3, 5).unwrap();
        let assembly = HamiltonianAssembly::build(&params, &basis).unwrap();
        let (l1, l2) = (0.7, 0.2);
        let diff = assembly.sparse_at(l1).dense() - assembly.sparse_at(l2).dense();
        let expect = assembly
            .coupling_part
            .scaled(C64::new((l1 - l2) * assembly.norm_factor, 0.0))
            .dense();
        assert!((diff - expect).map(|v| v.norm()).max() < 1e-14);
    }
}
