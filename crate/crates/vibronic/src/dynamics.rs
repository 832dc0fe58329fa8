//! Time propagation: unitary Schrödinger evolution for pure states and
//! Lindblad evolution of the density operator with a damped field mode,
//!
//! ```text
//! ρ̇ = -i[H(t), ρ] + 2κ(n̄+1) D(ρ; a) + 2κ n̄ D(ρ; a†),
//! D(ρ; A) = A ρ A† - ½{A†A, ρ}.
//! ```
//!
//! The default integrator is an embedded Dormand-Prince 5(4) pair with
//! adaptive steps. `λ(t)` is smooth between the ramp apex and the pulse end,
//! so both breakpoints are forced step boundaries and the integrator never
//! spans the slope discontinuity. A fixed-step matrix-exponential scheme
//! (midpoint coupling, Taylor-summed exponential) is kept as an independent
//! verification oracle for pure states.

use nalgebra::DMatrix;
use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::hilbert::{op_matrix, BasisSpec, DensityOp, OpKind, PureState};
use crate::model::{lambda_at, HamiltonianAssembly, ModelParams, PulseProtocol};

/// Field-mode damping channel of the master equation.
#[derive(Clone, Copy, Debug)]
pub struct LindbladParams {
    /// Damping rate κ in units of ω. κ = 0 reduces to the von Neumann
    /// equation.
    pub kappa: f64,
    /// Thermal mean occupation n̄ of the bath.
    pub nbar: f64,
}

impl LindbladParams {
    pub fn closed() -> Self {
        Self { kappa: 0.0, nbar: 0.0 }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.kappa >= 0.0) {
            return Err(Error::InvalidParameter { name: "kappa", value: self.kappa });
        }
        if !(self.nbar >= 0.0) {
            return Err(Error::InvalidParameter { name: "nbar", value: self.nbar });
        }
        Ok(())
    }
}

/// Propagation scheme selection.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Scheme {
    AdaptiveRk,
    /// Fixed-step exponential-midpoint stepping; verification runs only.
    FixedStepExpm { dt: f64 },
}

/// Integrator tolerances. `max_step` bounds the accepted step size in
/// addition to the error control.
#[derive(Clone, Copy, Debug)]
pub struct IntegratorConfig {
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub max_step: f64,
    pub scheme: Scheme,
}

impl IntegratorConfig {
    /// Defaults for pure-state runs.
    pub fn pure_default() -> Self {
        Self { rel_tol: 1e-9, abs_tol: 1e-12, max_step: f64::INFINITY, scheme: Scheme::AdaptiveRk }
    }

    /// Defaults for density-matrix runs.
    pub fn lindblad_default() -> Self {
        Self { rel_tol: 1e-7, abs_tol: 1e-10, max_step: f64::INFINITY, scheme: Scheme::AdaptiveRk }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.rel_tol > 0.0) {
            return Err(Error::InvalidParameter { name: "rel_tol", value: self.rel_tol });
        }
        if !(self.abs_tol > 0.0) {
            return Err(Error::InvalidParameter { name: "abs_tol", value: self.abs_tol });
        }
        if !(self.max_step > 0.0) {
            return Err(Error::InvalidParameter { name: "max_step", value: self.max_step });
        }
        if let Scheme::FixedStepExpm { dt } = self.scheme {
            if !(dt > 0.0) {
                return Err(Error::InvalidParameter { name: "expm_dt", value: dt });
            }
        }
        Ok(())
    }
}

/// Per-sample observables recorded along a trajectory.
#[derive(Clone, Copy, Debug)]
pub struct SampleRecord {
    pub time: f64,
    pub lambda: f64,
    /// Euclidean norm for pure states, real part of the trace for density
    /// operators.
    pub norm: f64,
    /// Re ⟨H(t)⟩.
    pub energy: f64,
    /// Re ⟨n̂⟩.
    pub field_occupation: f64,
}

/// States stored at the sample times.
#[derive(Clone, Debug)]
pub enum StateSeries {
    Pure(Vec<PureState>),
    Density(Vec<DensityOp>),
}

/// Time grid, per-time states, and per-time observables of one propagation.
#[derive(Clone, Debug)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: StateSeries,
    pub observables: Vec<SampleRecord>,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn pure_states(&self) -> Option<&[PureState]> {
        match &self.states {
            StateSeries::Pure(v) => Some(v),
            StateSeries::Density(_) => None,
        }
    }

    pub fn density_states(&self) -> Option<&[DensityOp]> {
        match &self.states {
            StateSeries::Density(v) => Some(v),
            StateSeries::Pure(_) => None,
        }
    }
}

// Dormand-Prince 5(4) tableau.
const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;
const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const B1: f64 = 35.0 / 384.0;
const B3: f64 = 500.0 / 1113.0;
const B4: f64 = 125.0 / 192.0;
const B5: f64 = -2187.0 / 6784.0;
const B6: f64 = 11.0 / 84.0;
// b - b* (5th-order minus embedded 4th-order weights)
const E1: f64 = B1 - 5179.0 / 57600.0;
const E3: f64 = B3 - 7571.0 / 16695.0;
const E4: f64 = B4 - 393.0 / 640.0;
const E5: f64 = B5 + 92097.0 / 339200.0;
const E6: f64 = B6 - 187.0 / 2100.0;
const E7: f64 = -1.0 / 40.0;

fn stage(dst: &mut [C64], y: &[C64], h: f64, parts: &[(f64, &[C64])]) {
    for i in 0..dst.len() {
        let mut acc = y[i];
        for &(a, k) in parts {
            acc += h * a * k[i];
        }
        dst[i] = acc;
    }
}

/// Adaptive Dormand-Prince propagation of a flat complex state from `t0`
/// through every time in `targets` (strictly increasing). `on_target` fires
/// at each target with the state snapped exactly onto it; steps never
/// overshoot a target, so inserting breakpoint times into `targets` pins
/// them as step boundaries.
pub(crate) fn integrate_adaptive<F, G>(
    mut rhs: F,
    t0: f64,
    y: &mut Vec<C64>,
    targets: &[f64],
    rel_tol: f64,
    abs_tol: f64,
    max_step: f64,
    mut on_target: G,
) -> Result<()>
where
    F: FnMut(f64, &[C64], &mut [C64]),
    G: FnMut(usize, f64, &[C64]) -> Result<()>,
{
    let dim = y.len();
    let mut k: Vec<Vec<C64>> = (0..7).map(|_| vec![C64::ZERO; dim]).collect();
    let mut ytmp = vec![C64::ZERO; dim];
    let mut ynew = vec![C64::ZERO; dim];
    let mut t = t0;
    let mut k1_valid = false;

    let span = targets.last().copied().unwrap_or(t0) - t0;
    let mut dt = (span.max(1e-12) * 1e-3).min(max_step);

    for (target_idx, &tt) in targets.iter().enumerate() {
        let time_eps = 1e-12 * tt.abs().max(1.0);
        while t < tt - time_eps {
            let mut h = dt.min(max_step).min(tt - t);
            loop {
                if h < 1e-13 * t.abs().max(1.0) {
                    return Err(Error::StepUnderflow { t, dt: h });
                }
                if !k1_valid {
                    rhs(t, y, &mut k[0]);
                    k1_valid = true;
                }
                {
                    let (head, tail) = k.split_at_mut(1);
                    stage(&mut ytmp, y, h, &[(A21, &head[0])]);
                    rhs(t + C2 * h, &ytmp, &mut tail[0]);
                }
                {
                    let (head, tail) = k.split_at_mut(2);
                    stage(&mut ytmp, y, h, &[(A31, &head[0]), (A32, &head[1])]);
                    rhs(t + C3 * h, &ytmp, &mut tail[0]);
                }
                {
                    let (head, tail) = k.split_at_mut(3);
                    stage(&mut ytmp, y, h, &[(A41, &head[0]), (A42, &head[1]), (A43, &head[2])]);
                    rhs(t + C4 * h, &ytmp, &mut tail[0]);
                }
                {
                    let (head, tail) = k.split_at_mut(4);
                    stage(
                        &mut ytmp,
                        y,
                        h,
                        &[(A51, &head[0]), (A52, &head[1]), (A53, &head[2]), (A54, &head[3])],
                    );
                    rhs(t + C5 * h, &ytmp, &mut tail[0]);
                }
                {
                    let (head, tail) = k.split_at_mut(5);
                    stage(
                        &mut ytmp,
                        y,
                        h,
                        &[
                            (A61, &head[0]),
                            (A62, &head[1]),
                            (A63, &head[2]),
                            (A64, &head[3]),
                            (A65, &head[4]),
                        ],
                    );
                    rhs(t + h, &ytmp, &mut tail[0]);
                }
                // 5th-order solution; its endpoint derivative is stage 7 (FSAL)
                stage(
                    &mut ynew,
                    y,
                    h,
                    &[(B1, &k[0]), (B3, &k[2]), (B4, &k[3]), (B5, &k[4]), (B6, &k[5])],
                );
                {
                    let (_, tail) = k.split_at_mut(6);
                    rhs(t + h, &ynew, &mut tail[0]);
                }
                // scaled max-norm of the embedded error estimate
                let mut enorm = 0.0f64;
                for i in 0..dim {
                    let err = h
                        * (E1 * k[0][i]
                            + E3 * k[2][i]
                            + E4 * k[3][i]
                            + E5 * k[4][i]
                            + E6 * k[5][i]
                            + E7 * k[6][i]);
                    let scale = abs_tol + rel_tol * y[i].norm().max(ynew[i].norm());
                    enorm = enorm.max(err.norm() / scale);
                }
                if enorm <= 1.0 {
                    let grow = if enorm == 0.0 {
                        5.0
                    } else {
                        (0.9 * enorm.powf(-0.2)).clamp(0.2, 5.0)
                    };
                    std::mem::swap(y, &mut ynew);
                    k.swap(0, 6); // FSAL
                    t += h;
                    dt = (h * grow).min(max_step);
                    break;
                }
                h *= (0.9 * enorm.powf(-0.2)).clamp(0.1, 0.9);
            }
        }
        t = tt;
        on_target(target_idx, t, y)?;
    }
    Ok(())
}

/// Fixed-step exponential-midpoint propagation: within each step the
/// Hamiltonian is frozen at the interval midpoint and `exp(-i h H)` applied
/// by a Taylor sum (‖H h‖ ≪ 1 for oracle-sized steps, so the sum terminates
/// at machine precision after a few terms).
fn integrate_expm<G>(
    assembly: &HamiltonianAssembly,
    protocol: &PulseProtocol,
    y: &mut Vec<C64>,
    targets: &[f64],
    dt: f64,
    mut on_target: G,
) -> Result<()>
where
    G: FnMut(usize, f64, &[C64]) -> Result<()>,
{
    let dim = y.len();
    let mut term = vec![C64::ZERO; dim];
    let mut next = vec![C64::ZERO; dim];
    let mut t = 0.0f64;
    for (target_idx, &tt) in targets.iter().enumerate() {
        let seg = tt - t;
        if seg > 0.0 {
            let steps = (seg / dt).ceil().max(1.0) as usize;
            let h = seg / steps as f64;
            for s in 0..steps {
                let tm = t + (s as f64 + 0.5) * h;
                let lambda = lambda_at(tm, protocol);
                term.copy_from_slice(y);
                for order in 1..=40 {
                    next.iter_mut().for_each(|v| *v = C64::ZERO);
                    let coeff = C64::new(0.0, -h / order as f64);
                    assembly.acc_vec(lambda, coeff, &term, &mut next);
                    std::mem::swap(&mut term, &mut next);
                    let mut tnorm = 0.0f64;
                    let mut ynorm = 0.0f64;
                    for i in 0..dim {
                        tnorm = tnorm.max(term[i].norm());
                        ynorm = ynorm.max(y[i].norm());
                    }
                    for i in 0..dim {
                        y[i] += term[i];
                    }
                    if tnorm <= 1e-18 * ynorm.max(1e-300) {
                        break;
                    }
                }
            }
            t = tt;
        }
        on_target(target_idx, t, y)?;
    }
    Ok(())
}

fn validate_sample_times(sample_times: &[f64]) -> Result<()> {
    if sample_times.is_empty() || sample_times[0] != 0.0 {
        return Err(Error::BadSampleTimes);
    }
    if sample_times.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::BadSampleTimes);
    }
    Ok(())
}

/// Merges the ramp breakpoints (apex, pulse end) into the sample times as
/// step-boundary-only targets. Returns the target times plus, for each
/// target, the sample index it serves (None for bare breakpoints).
fn merge_targets(sample_times: &[f64], protocol: &PulseProtocol) -> (Vec<f64>, Vec<Option<usize>>) {
    let last = *sample_times.last().unwrap();
    let mut targets: Vec<(f64, Option<usize>)> =
        sample_times.iter().copied().enumerate().map(|(i, t)| (t, Some(i))).collect();
    let eps = 1e-9 * last.max(1.0);
    for bp in [protocol.apex_time(), protocol.duration()] {
        if bp > eps && bp < last - eps && !sample_times.iter().any(|&t| (t - bp).abs() <= eps) {
            targets.push((bp, None));
        }
    }
    targets.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
    (targets.iter().map(|t| t.0).collect(), targets.iter().map(|t| t.1).collect())
}

/// Solves `i d|ψ⟩/dt = H(t)|ψ⟩` from the normalized initial state, sampling
/// states and observables at `sample_times` (strictly increasing, starting
/// at 0). Norm is reported, never restored, so integrator drift stays
/// visible. Sample times past the pulse end propagate freely at λ = 0.
pub fn evolve_pure(
    initial: &PureState,
    params: &ModelParams,
    protocol: &PulseProtocol,
    integ: &IntegratorConfig,
    sample_times: &[f64],
) -> Result<Trajectory> {
    integ.validate()?;
    validate_sample_times(sample_times)?;
    let basis = initial.basis();
    let assembly = HamiltonianAssembly::build(params, &basis)?;
    let norm0 = initial.norm();
    if (norm0 - 1.0).abs() > 1e-9 {
        return Err(Error::NotNormalized { norm: norm0 });
    }
    let number = op_matrix(OpKind::Number, &basis);

    let (targets, sample_of) = merge_targets(sample_times, protocol);
    let mut y: Vec<C64> = initial.amplitudes().to_vec();
    let mut times = Vec::with_capacity(sample_times.len());
    let mut states = Vec::with_capacity(sample_times.len());
    let mut observables = Vec::with_capacity(sample_times.len());

    let mut record = |t: f64, y: &[C64]| {
        let lambda = lambda_at(t, protocol);
        let norm = y.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
        let energy = assembly.expectation(lambda, y).re;
        let occ = number.expectation(y).re;
        times.push(t);
        states.push(PureState::from_raw(y.to_vec(), basis));
        observables.push(SampleRecord { time: t, lambda, norm, energy, field_occupation: occ });
    };

    match integ.scheme {
        Scheme::AdaptiveRk => {
            let minus_i = C64::new(0.0, -1.0);
            let rhs = |t: f64, y: &[C64], dy: &mut [C64]| {
                dy.iter_mut().for_each(|v| *v = C64::ZERO);
                assembly.acc_vec(lambda_at(t, protocol), minus_i, y, dy);
            };
            integrate_adaptive(
                rhs,
                0.0,
                &mut y,
                &targets,
                integ.rel_tol,
                integ.abs_tol,
                integ.max_step,
                |idx, t, y| {
                    if sample_of[idx].is_some() {
                        record(t, y);
                    }
                    Ok(())
                },
            )?;
        }
        Scheme::FixedStepExpm { dt } => {
            integrate_expm(&assembly, protocol, &mut y, &targets, dt, |idx, t, y| {
                if sample_of[idx].is_some() {
                    record(t, y);
                }
                Ok(())
            })?;
        }
    }

    Ok(Trajectory { times, states: StateSeries::Pure(states), observables })
}

/// Solves the master equation for the density operator, sampling at
/// `sample_times`. Dissipation acts on the field mode only. Positivity is
/// spot-checked on a deterministic subset of samples (every eighth, plus the
/// final one) and violations beyond -1e-6 are reported as errors.
pub fn evolve_lindblad(
    initial: &DensityOp,
    params: &ModelParams,
    protocol: &PulseProtocol,
    lind: &LindbladParams,
    integ: &IntegratorConfig,
    sample_times: &[f64],
) -> Result<Trajectory> {
    integ.validate()?;
    lind.validate()?;
    validate_sample_times(sample_times)?;
    if let Scheme::FixedStepExpm { dt } = integ.scheme {
        // superoperator exponentials are out of scope; the oracle is pure-state only
        return Err(Error::InvalidParameter { name: "expm_dt_lindblad", value: dt });
    }
    let basis = initial.basis();
    let d = basis.dim();
    let assembly = HamiltonianAssembly::build(params, &basis)?;
    let number = op_matrix(OpKind::Number, &basis);
    let lower = op_matrix(OpKind::Annihilate, &basis);
    let raise = op_matrix(OpKind::Create, &basis);
    // diagonal weights of a†a and of the truncated a a† (zero at the top level)
    let mut ada = vec![0.0f64; d];
    for &(r, c, v) in raise.matmul(&lower).unwrap().entries() {
        debug_assert_eq!(r, c);
        ada[r as usize] = v.re;
    }
    let mut aad = vec![0.0f64; d];
    for &(r, c, v) in lower.matmul(&raise).unwrap().entries() {
        debug_assert_eq!(r, c);
        aad[r as usize] = v.re;
    }

    let kappa = lind.kappa;
    let nbar = lind.nbar;
    let gain_down = 2.0 * kappa * (nbar + 1.0);
    let gain_up = 2.0 * kappa * nbar;

    let (targets, sample_of) = merge_targets(sample_times, protocol);
    let mut y: Vec<C64> = initial.matrix().as_slice().to_vec();
    let mut tmp = vec![C64::ZERO; d * d];

    let n_samples = sample_times.len();
    let check_stride = (n_samples / 8).max(1);

    let mut times = Vec::with_capacity(n_samples);
    let mut states: Vec<DensityOp> = Vec::with_capacity(n_samples);
    let mut observables = Vec::with_capacity(n_samples);

    let one = C64::new(1.0, 0.0);
    let minus_i = C64::new(0.0, -1.0);
    let plus_i = C64::new(0.0, 1.0);

    let mut rhs = move |t: f64, y: &[C64], dy: &mut [C64]| {
        dy.iter_mut().for_each(|v| *v = C64::ZERO);
        let lambda = lambda_at(t, protocol);
        let cl = lambda * assembly.norm_factor;
        assembly.static_part.acc_mul_left(minus_i, y, dy);
        assembly.static_part.acc_mul_right(plus_i, y, dy);
        assembly.coupling_part.acc_mul_left(minus_i * cl, y, dy);
        assembly.coupling_part.acc_mul_right(plus_i * cl, y, dy);
        if kappa > 0.0 {
            // a ρ a† and a† ρ a via a staging buffer
            tmp.iter_mut().for_each(|v| *v = C64::ZERO);
            lower.acc_mul_left(one, y, &mut tmp);
            raise.acc_mul_right(C64::new(gain_down, 0.0), &tmp, dy);
            tmp.iter_mut().for_each(|v| *v = C64::ZERO);
            raise.acc_mul_left(one, y, &mut tmp);
            lower.acc_mul_right(C64::new(gain_up, 0.0), &tmp, dy);
            // -½{A†A, ρ} for both channels; diagonal weights
            for j in 0..d {
                let base = j * d;
                for i in 0..d {
                    let w =
                        gain_down * 0.5 * (ada[i] + ada[j]) + gain_up * 0.5 * (aad[i] + aad[j]);
                    dy[base + i] -= w * y[base + i];
                }
            }
        }
    };

    let assembly2 = HamiltonianAssembly::build(params, &basis)?;
    let mut sample_count = 0usize;
    integrate_adaptive(
        &mut rhs,
        0.0,
        &mut y,
        &targets,
        integ.rel_tol,
        integ.abs_tol,
        integ.max_step,
        |idx, t, y| {
            if sample_of[idx].is_none() {
                return Ok(());
            }
            let lambda = lambda_at(t, protocol);
            let mut trace = C64::ZERO;
            for i in 0..d {
                trace += y[i + i * d];
            }
            let energy = assembly2.trace_with(lambda, y).re;
            let occ = number.trace_with(y).re;
            let rho = DensityOp::from_raw(DMatrix::from_column_slice(d, d, y), basis);
            let check_positivity =
                sample_count % check_stride == 0 || sample_count + 1 == n_samples;
            if check_positivity {
                let min_eig = rho.min_eigenvalue();
                if min_eig < -1e-6 {
                    return Err(Error::PositivityViolation { t, min_eig });
                }
            }
            times.push(t);
            observables.push(SampleRecord {
                time: t,
                lambda,
                norm: trace.re,
                energy,
                field_occupation: occ,
            });
            states.push(rho);
            sample_count += 1;
            Ok(())
        },
    )?;

    Ok(Trajectory { times, states: StateSeries::Density(states), observables })
}

/// `|spin⟩⟨spin| ⊗ ρ_th(n̄)` with the geometric thermal field state
/// renormalized on the truncated Fock space. Errors when the discarded
/// geometric weight exceeds 1e-6.
pub fn thermal_initial(basis: &BasisSpec, nbar: f64, spin_amplitudes: &[C64]) -> Result<DensityOp> {
    if !(nbar >= 0.0) {
        return Err(Error::InvalidParameter { name: "nbar", value: nbar });
    }
    let s = basis.spin_dim();
    let f = basis.field_dim();
    if spin_amplitudes.len() != s {
        return Err(Error::DimensionMismatch { expected: s, got: spin_amplitudes.len() });
    }
    let snorm = spin_amplitudes.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
    if (snorm - 1.0).abs() > 1e-9 {
        return Err(Error::NotNormalized { norm: snorm });
    }
    let mut weights = vec![0.0f64; f];
    if nbar == 0.0 {
        weights[0] = 1.0;
    } else {
        let q = nbar / (nbar + 1.0);
        let discarded = q.powi(f as i32);
        if discarded > 1e-6 {
            return Err(Error::CutoffTooSmall {
                n_max: basis.fock_cutoff(),
                nbar,
                weight: discarded,
            });
        }
        let mut w = 1.0;
        let mut total = 0.0;
        for item in weights.iter_mut() {
            *item = w;
            total += w;
            w *= q;
        }
        weights.iter_mut().for_each(|w| *w /= total);
    }
    let d = basis.dim();
    let mut m = DMatrix::<C64>::zeros(d, d);
    for k in 0..s {
        for k2 in 0..s {
            let sv = spin_amplitudes[k] * spin_amplitudes[k2].conj();
            for (n, &w) in weights.iter().enumerate() {
                m[(k * f + n, k2 * f + n)] = sv * w;
            }
        }
    }
    DensityOp::new(m, *basis)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hilbert::basis_state;
    use approx::assert_relative_eq;

    fn linspace(a: f64, b: f64, n: usize) -> Vec<f64> {
        (0..n).map(|i| a + (b - a) * i as f64 / (n - 1) as f64).collect()
    }

    #[test]
    fn no_pulse_keeps_populations_and_rotates_phase() {
        let params = ModelParams::resonant(3, 0.0);
        let basis = BasisSpec::new(3, 4).unwrap();
        let protocol = PulseProtocol::up_down_linear(1.0, 0.0).unwrap();
        let initial = basis_state(&basis, -3, 0).unwrap();
        let times = linspace(0.0, 3.0, 7);
        let traj =
            evolve_pure(&initial, &params, &protocol, &IntegratorConfig::pure_default(), &times)
                .unwrap();
        let states = traj.pure_states().unwrap();
        for (i, st) in states.iter().enumerate() {
            let amp = st.amplitudes()[0];
            assert_relative_eq!(amp.norm(), 1.0, epsilon = 1e-9);
            // eigenvalue -(3/2)ε, so the amplitude rotates as e^{+i(3/2)εt}
            let expect = C64::from_polar(1.0, 1.5 * times[i]);
            assert!((amp - expect).norm() < 1e-8, "t = {}", times[i]);
            for a in &st.amplitudes()[1..] {
                assert!(a.norm() < 1e-10);
            }
        }
    }

    #[test]
    fn adaptive_matches_expm_oracle() {
        let params = ModelParams::resonant(3, 1.0);
        let basis = BasisSpec::new(3, 10).unwrap();
        let protocol = PulseProtocol::up_down_linear(1.0, 1.0).unwrap();
        let initial = basis_state(&basis, -3, 0).unwrap();
        let times = vec![0.0, protocol.duration()];
        let adaptive =
            evolve_pure(&initial, &params, &protocol, &IntegratorConfig::pure_default(), &times)
                .unwrap();
        let oracle_cfg = IntegratorConfig {
            scheme: Scheme::FixedStepExpm { dt: 1e-4 },
            ..IntegratorConfig::pure_default()
        };
        let oracle = evolve_pure(&initial, &params, &protocol, &oracle_cfg, &times).unwrap();
        let a = adaptive.pure_states().unwrap().last().unwrap();
        let b = oracle.pure_states().unwrap().last().unwrap();
        let diff: f64 = a
            .amplitudes()
            .iter()
            .zip(b.amplitudes())
            .map(|(x, y)| (x - y).norm_sqr())
            .sum::<f64>()
            .sqrt();
        assert!(diff < 1e-6, "adaptive vs expm distance {diff:e}");
    }

    #[test]
    fn norm_drift_below_1e8_over_full_pulse() {
        let params = ModelParams::resonant(3, 1.0);
        let basis = BasisSpec::new(3, 20).unwrap();
        let protocol = PulseProtocol::up_down_linear(0.25, 1.0).unwrap();
        let initial = basis_state(&basis, -3, 0).unwrap();
        let times = linspace(0.0, protocol.duration(), 41);
        let traj =
            evolve_pure(&initial, &params, &protocol, &IntegratorConfig::pure_default(), &times)
                .unwrap();
        for rec in &traj.observables {
            assert!((rec.norm - 1.0).abs() < 1e-8, "norm drift {:e}", rec.norm - 1.0);
        }
    }

    #[test]
    fn parity_is_conserved() {
        let params = ModelParams::resonant(3, 1.0);
        let basis = BasisSpec::new(3, 16).unwrap();
        let protocol = PulseProtocol::up_down_linear(0.5, 1.0).unwrap();
        let initial = basis_state(&basis, -3, 0).unwrap();
        let parity = op_matrix(OpKind::Parity, &basis);
        let p0 = parity.expectation(initial.amplitudes()).re;
        let times = linspace(0.0, protocol.duration(), 21);
        let traj =
            evolve_pure(&initial, &params, &protocol, &IntegratorConfig::pure_default(), &times)
                .unwrap();
        for st in traj.pure_states().unwrap() {
            let p = parity.expectation(st.amplitudes());
            assert!((p.re - p0).abs() < 1e-7);
            assert!(p.im.abs() < 1e-9);
        }
    }

    #[test]
    fn endpoint_energies_are_real() {
        let params = ModelParams::resonant(2, 1.0);
        let basis = BasisSpec::new(2, 12).unwrap();
        let protocol = PulseProtocol::up_down_linear(0.5, 1.0).unwrap();
        let initial = basis_state(&basis, -2, 0).unwrap();
        let times = vec![0.0, protocol.duration()];
        let traj =
            evolve_pure(&initial, &params, &protocol, &IntegratorConfig::pure_default(), &times)
                .unwrap();
        let assembly = HamiltonianAssembly::build(&params, &basis).unwrap();
        for (st, rec) in traj.pure_states().unwrap().iter().zip(&traj.observables) {
            let e = assembly.expectation(rec.lambda, st.amplitudes());
            assert!(e.im.abs() < 1e-10);
        }
    }

    #[test]
    fn time_reversal_recovers_initial_state() {
        // H(t) is real symmetric and the pulse is time-symmetric, so
        // conjugating the final state and replaying the same protocol
        // undoes the evolution.
        let params = ModelParams::resonant(2, 1.0);
        let basis = BasisSpec::new(2, 12).unwrap();
        let protocol = PulseProtocol::up_down_linear(0.5, 1.0).unwrap();
        let initial = basis_state(&basis, -2, 0).unwrap();
        let times = vec![0.0, protocol.duration()];
        let cfg = IntegratorConfig::pure_default();
        let fwd = evolve_pure(&initial, &params, &protocol, &cfg, &times).unwrap();
        let last = fwd.pure_states().unwrap().last().unwrap().clone();
        let conj: Vec<C64> = last.amplitudes().iter().map(|a| a.conj()).collect();
        let norm = conj.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
        let back_start =
            PureState::new(conj.iter().map(|a| a / norm).collect(), basis).unwrap();
        let back = evolve_pure(&back_start, &params, &protocol, &cfg, &times).unwrap();
        let overlap: C64 = back
            .pure_states()
            .unwrap()
            .last()
            .unwrap()
            .amplitudes()
            .iter()
            .map(|a| a.conj())
            .zip(initial.amplitudes())
            .map(|(a, b)| a.conj() * b)
            .sum();
        assert!(
            (overlap.norm() - 1.0).abs() < 10.0 * 1e-9,
            "recovered overlap {}",
            overlap.norm()
        );
    }

    #[test]
    fn damped_cavity_occupation_decays_analytically() {
        let params = ModelParams::resonant(1, 0.0);
        let basis = BasisSpec::new(1, 6).unwrap();
        let protocol = PulseProtocol::up_down_linear(1.0, 0.0).unwrap();
        let initial = basis_state(&basis, -1, 1).unwrap().projector();
        let lind = LindbladParams { kappa: 0.25, nbar: 0.0 };
        let times = linspace(0.0, 4.0, 9);
        let traj = evolve_lindblad(
            &initial,
            &params,
            &protocol,
            &lind,
            &IntegratorConfig::lindblad_default(),
            &times,
        )
        .unwrap();
        for rec in &traj.observables {
            let expect = (-2.0 * lind.kappa * rec.time).exp();
            assert!(
                (rec.field_occupation - expect).abs() < 1e-6,
                "t = {}: {} vs {}",
                rec.time,
                rec.field_occupation,
                expect
            );
        }
    }

    #[test]
    fn closed_lindblad_matches_pure_projector() {
        let params = ModelParams::resonant(2, 1.0);
        let basis = BasisSpec::new(2, 10).unwrap();
        let protocol = PulseProtocol::up_down_linear(0.5, 1.0).unwrap();
        let initial = basis_state(&basis, -2, 0).unwrap();
        let times = linspace(0.0, protocol.duration(), 5);
        let pure =
            evolve_pure(&initial, &params, &protocol, &IntegratorConfig::pure_default(), &times)
                .unwrap();
        let mixed = evolve_lindblad(
            &initial.projector(),
            &params,
            &protocol,
            &LindbladParams::closed(),
            &IntegratorConfig::lindblad_default(),
            &times,
        )
        .unwrap();
        for (ps, ds) in pure.pure_states().unwrap().iter().zip(mixed.density_states().unwrap()) {
            let proj = ps.projector();
            let diff = (proj.matrix() - ds.matrix()).map(|v| v.norm()).max();
            assert!(diff < 1e-6, "closed-channel deviation {diff:e}");
        }
    }

    #[test]
    fn lindblad_preserves_trace_and_hermiticity() {
        let params = ModelParams::resonant(2, 1.0);
        let basis = BasisSpec::new(2, 10).unwrap();
        let protocol = PulseProtocol::up_down_linear(0.4, 1.0).unwrap();
        let initial = basis_state(&basis, -2, 0).unwrap().projector();
        let lind = LindbladParams { kappa: 0.02, nbar: 0.2 };
        let times = linspace(0.0, protocol.duration(), 9);
        let traj = evolve_lindblad(
            &initial,
            &params,
            &protocol,
            &lind,
            &IntegratorConfig::lindblad_default(),
            &times,
        )
        .unwrap();
        for (rec, rho) in traj.observables.iter().zip(traj.density_states().unwrap()) {
            assert!((rec.norm - 1.0).abs() < 1e-7, "trace drift {:e}", rec.norm - 1.0);
            assert!(rho.hermiticity_defect() < 1e-9);
            assert!(rho.min_eigenvalue() > -1e-6);
        }
    }

    #[test]
    fn trace_distance_contracts_under_dissipation() {
        let params = ModelParams::resonant(1, 0.5);
        let basis = BasisSpec::new(1, 6).unwrap();
        let protocol = PulseProtocol::up_down_linear(0.5, 0.5).unwrap();
        let lind = LindbladParams { kappa: 0.2, nbar: 0.0 };
        let cfg = IntegratorConfig::lindblad_default();
        let times = linspace(0.0, protocol.duration(), 9);
        let rho1 = basis_state(&basis, -1, 1).unwrap().projector();
        let rho2 = basis_state(&basis, 1, 0).unwrap().projector();
        let t1 = evolve_lindblad(&rho1, &params, &protocol, &lind, &cfg, &times).unwrap();
        let t2 = evolve_lindblad(&rho2, &params, &protocol, &lind, &cfg, &times).unwrap();
        let mut last = f64::INFINITY;
        for (a, b) in
            t1.density_states().unwrap().iter().zip(t2.density_states().unwrap())
        {
            let diff = a.matrix() - b.matrix();
            let dist: f64 =
                0.5 * diff.symmetric_eigenvalues().iter().map(|e| e.abs()).sum::<f64>();
            assert!(dist <= last + 1e-6, "trace distance grew: {dist} > {last}");
            last = dist;
        }
    }

    #[test]
    fn probabilities_converge_in_fock_cutoff() {
        let params = ModelParams::resonant(3, 1.0);
        let protocol = PulseProtocol::up_down_linear(0.5, 1.0).unwrap();
        let times = vec![0.0, protocol.duration()];
        let cfg = IntegratorConfig::pure_default();
        let mut finals = Vec::new();
        for n_max in [40usize, 80] {
            let basis = BasisSpec::new(3, n_max).unwrap();
            let initial = basis_state(&basis, -3, 0).unwrap();
            let traj = evolve_pure(&initial, &params, &protocol, &cfg, &times).unwrap();
            let probs = crate::measures::state_probabilities(
                traj.pure_states().unwrap().last().unwrap(),
            );
            finals.push(probs.probs().to_vec());
        }
        for (a, b) in finals[0].iter().zip(&finals[1]) {
            assert!((a - b).abs() < 1e-6, "cutoff-sensitive probability: {a} vs {b}");
        }
    }

    #[test]
    fn thermal_initial_examples() {
        let basis = BasisSpec::new(1, 60).unwrap();
        let spin = [C64::new(1.0, 0.0), C64::ZERO];

        let cold = thermal_initial(&basis, 0.0, &spin).unwrap();
        assert_relative_eq!(cold.matrix()[(0, 0)].re, 1.0, epsilon = 1e-14);

        let warm = thermal_initial(&basis, 1.0, &spin).unwrap();
        let r = warm.matrix()[(1, 1)].re / warm.matrix()[(0, 0)].re;
        assert_relative_eq!(r, 0.5, epsilon = 1e-12);

        let half = thermal_initial(&basis, 0.5, &spin).unwrap();
        // independent geometric-series oracle for ⟨n̂⟩
        let q: f64 = 0.5 / 1.5;
        let mut norm = 0.0;
        let mut mean = 0.0;
        for n in 0..=60usize {
            let w = q.powi(n as i32);
            norm += w;
            mean += n as f64 * w;
        }
        let oracle = mean / norm;
        let number = op_matrix(OpKind::Number, &basis);
        let got = number.trace_with(half.matrix().as_slice()).re;
        assert!((got - oracle).abs() < 1e-12);
        assert!((got - 0.5).abs() < 1e-6);

        // cutoff too small for a hot field
        let tiny = BasisSpec::new(1, 3).unwrap();
        assert!(matches!(
            thermal_initial(&tiny, 2.0, &spin),
            Err(Error::CutoffTooSmall { .. })
        ));
    }

    #[test]
    fn step_underflow_is_reported() {
        let params = ModelParams::resonant(1, 1.0);
        let basis = BasisSpec::new(1, 4).unwrap();
        let protocol = PulseProtocol::up_down_linear(1.0, 1.0).unwrap();
        let initial = basis_state(&basis, -1, 0).unwrap();
        let cfg = IntegratorConfig {
            rel_tol: 1e-300,
            abs_tol: 1e-300,
            ..IntegratorConfig::pure_default()
        };
        let out = evolve_pure(&initial, &params, &protocol, &cfg, &[0.0, 1.0]);
        assert!(matches!(out, Err(Error::StepUnderflow { .. })));
    }

    #[test]
    fn rejects_bad_inputs() {
        let params = ModelParams::resonant(1, 1.0);
        let basis = BasisSpec::new(1, 4).unwrap();
        let protocol = PulseProtocol::up_down_linear(1.0, 1.0).unwrap();
        let cfg = IntegratorConfig::pure_default();
        let good = basis_state(&basis, -1, 0).unwrap();
        assert!(matches!(
            evolve_pure(&good, &params, &protocol, &cfg, &[0.5, 1.0]),
            Err(Error::BadSampleTimes)
        ));
        assert!(matches!(
            evolve_pure(&good, &params, &protocol, &cfg, &[0.0, 1.0, 0.5]),
            Err(Error::BadSampleTimes)
        ));
        let bad = PureState::new(vec![C64::new(0.7, 0.0); basis.dim()], basis);
        assert!(bad.is_err());
    }
}
