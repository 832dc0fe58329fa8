//! Three-boson-mode parametric model behind the time-dependent coupling:
//!
//! ```text
//! H = ω_a a†a + χ (a†a)² + ω_b b†b + ω_c c†c + g (a†b†c² + a b c†²)
//! ```
//!
//! with `a` the vibration, `b` the collective exciton mode, and `c` the
//! driven high-energy pump mode. Every term conserves the total quantum
//! number `N̂ = a†a + b†b + c†c`, so the phase-smearing operator
//! `Π_p(θ) = e^{iN̂θ}` commutes with the evolution. Averaging the pump phase
//! with any weight `P(θ)` therefore multiplies the moment `⟨a†ᵏaˡ⟩` by the
//! Fourier factor `∫ P(θ) e^{-i(k-l)θ} dθ` — populations (`k = l`) are
//! untouched, which is what justifies replacing the pump operators by a
//! classical pulse shape. This module evaluates both sides of that identity
//! numerically.

use num_complex::Complex64 as C64;
use rayon::prelude::*;

use crate::dynamics::{integrate_adaptive, IntegratorConfig};
use crate::error::{Error, Result};
use crate::hilbert::SparseOperator;

/// Frequencies, anharmonicity, coupling, and per-mode Fock cutoffs.
#[derive(Clone, Copy, Debug)]
pub struct ThreeModeParams {
    pub omega_a: f64,
    pub omega_b: f64,
    pub omega_c: f64,
    /// Anharmonic shift χ(a†a)² on the vibration.
    pub chi: f64,
    /// Parametric coupling g.
    pub g: f64,
    /// Cutoffs (n_a, n_b, n_c).
    pub cutoffs: (usize, usize, usize),
    /// Cap on the product dimension.
    pub dim_cap: usize,
}

impl ThreeModeParams {
    /// Desk-scale defaults: resonant 2ω_c = ω_a + ω_b, weak anharmonicity,
    /// pump regime |α_c|² = 4 on cutoffs (6, 6, 12).
    pub fn desk_scale() -> Self {
        Self {
            omega_a: 1.0,
            omega_b: 1.0,
            omega_c: 1.0,
            chi: 0.05,
            g: 0.1,
            cutoffs: (6, 6, 12),
            dim_cap: 20_000,
        }
    }

    pub fn dims(&self) -> (usize, usize, usize) {
        (self.cutoffs.0 + 1, self.cutoffs.1 + 1, self.cutoffs.2 + 1)
    }

    pub fn dim(&self) -> usize {
        let (da, db, dc) = self.dims();
        da * db * dc
    }

    fn check_cap(&self) -> Result<()> {
        if self.dim() > self.dim_cap {
            return Err(Error::DimensionCapExceeded { dim: self.dim(), cap: self.dim_cap });
        }
        if self.cutoffs.0 < 1 || self.cutoffs.1 < 1 || self.cutoffs.2 < 1 {
            return Err(Error::InvalidParameter { name: "cutoffs", value: 0.0 });
        }
        Ok(())
    }

    /// Flat index with mode c fastest: `(i_a·d_b + i_b)·d_c + i_c`.
    pub fn index(&self, ia: usize, ib: usize, ic: usize) -> usize {
        let (_, db, dc) = self.dims();
        (ia * db + ib) * dc + ic
    }
}

/// Pump preparation: coherent amplitude and the phase-smearing weight.
#[derive(Clone, Debug)]
pub struct PumpPreparation {
    pub alpha_c: C64,
    pub smearing: Smearing,
}

/// Phase distribution `P(θ)`; the uniform case is discretized as 32 equal
/// phases, exact for moments with `|k − l| < 32`.
#[derive(Clone, Debug)]
pub enum Smearing {
    None,
    Uniform,
    /// Discrete weights (θ, w) with w ≥ 0 and Σw = 1.
    Custom(Vec<(f64, f64)>),
}

impl Smearing {
    fn phases(&self) -> Result<Vec<(f64, f64)>> {
        match self {
            Smearing::None => Ok(vec![(0.0, 1.0)]),
            Smearing::Uniform => {
                let m = 32usize;
                Ok((0..m)
                    .map(|j| (2.0 * std::f64::consts::PI * j as f64 / m as f64, 1.0 / m as f64))
                    .collect())
            }
            Smearing::Custom(weights) => {
                if weights.is_empty() {
                    return Err(Error::InvalidSmearing { reason: "empty weight list" });
                }
                if weights.iter().any(|&(_, w)| w < 0.0) {
                    return Err(Error::InvalidSmearing { reason: "negative weight" });
                }
                let total: f64 = weights.iter().map(|&(_, w)| w).sum();
                if (total - 1.0).abs() > 1e-9 {
                    return Err(Error::InvalidSmearing { reason: "weights do not sum to 1" });
                }
                Ok(weights.clone())
            }
        }
    }
}

/// Assembles the sparse three-mode Hamiltonian. Hermitian, and commutes with
/// [`total_number_op`] exactly (every retained entry conserves `N̂`).
pub fn build_three_mode(params: &ThreeModeParams) -> Result<SparseOperator> {
    params.check_cap()?;
    let (da, db, dc) = params.dims();
    let mut raw: Vec<(usize, usize, C64)> = Vec::new();
    for ia in 0..da {
        for ib in 0..db {
            for ic in 0..dc {
                let idx = params.index(ia, ib, ic);
                let diag = params.omega_a * ia as f64
                    + params.chi * (ia * ia) as f64
                    + params.omega_b * ib as f64
                    + params.omega_c * ic as f64;
                if diag != 0.0 {
                    raw.push((idx, idx, C64::new(diag, 0.0)));
                }
                // g a†b†c²: needs room above in a and b, two quanta in c
                if ia + 1 < da && ib + 1 < db && ic >= 2 {
                    let target = params.index(ia + 1, ib + 1, ic - 2);
                    let w = params.g
                        * ((ia + 1) as f64).sqrt()
                        * ((ib + 1) as f64).sqrt()
                        * ((ic * (ic - 1)) as f64).sqrt();
                    raw.push((target, idx, C64::new(w, 0.0)));
                    raw.push((idx, target, C64::new(w, 0.0)));
                }
            }
        }
    }
    SparseOperator::from_entries(params.dim(), raw, true)
}

/// `N̂ = a†a + b†b + c†c`, diagonal.
pub fn total_number_op(params: &ThreeModeParams) -> Result<SparseOperator> {
    params.check_cap()?;
    let (da, db, dc) = params.dims();
    let mut raw = Vec::new();
    for ia in 0..da {
        for ib in 0..db {
            for ic in 0..dc {
                let idx = params.index(ia, ib, ic);
                raw.push((idx, idx, C64::new((ia + ib + ic) as f64, 0.0)));
            }
        }
    }
    SparseOperator::from_entries(params.dim(), raw, true)
}

/// Annihilation operator of the vibration mode `a`, lifted to the product
/// space.
pub fn mode_a_annihilate(params: &ThreeModeParams) -> Result<SparseOperator> {
    params.check_cap()?;
    let (da, db, dc) = params.dims();
    let mut raw = Vec::new();
    for ia in 1..da {
        for ib in 0..db {
            for ic in 0..dc {
                raw.push((
                    params.index(ia - 1, ib, ic),
                    params.index(ia, ib, ic),
                    C64::new((ia as f64).sqrt(), 0.0),
                ));
            }
        }
    }
    SparseOperator::from_entries(params.dim(), raw, false)
}

/// Poisson weight lost to the mode-c cutoff for a coherent amplitude.
pub fn coherent_tail(alpha_c: C64, n_c: usize) -> f64 {
    let mean = alpha_c.norm_sqr();
    let mut kept = 0.0f64;
    let mut w = (-mean).exp();
    for n in 0..=n_c {
        kept += w;
        w *= mean / (n + 1) as f64;
    }
    (1.0 - kept).max(0.0)
}

/// `|0_a, 0_b, α_c⟩` truncated and renormalized; errors when the discarded
/// Poisson weight exceeds 1e-3.
fn pump_initial(params: &ThreeModeParams, alpha_c: C64) -> Result<Vec<C64>> {
    let (_, _, dc) = params.dims();
    let n_c = dc - 1;
    let tail = coherent_tail(alpha_c, n_c);
    if tail > 1e-3 {
        return Err(Error::CoherentTailTooLarge {
            n_mean: alpha_c.norm_sqr(),
            n_max: n_c,
            weight: tail,
        });
    }
    let mut psi = vec![C64::ZERO; params.dim()];
    let mut amp = C64::new((-alpha_c.norm_sqr() / 2.0).exp(), 0.0);
    for ic in 0..dc {
        psi[params.index(0, 0, ic)] = amp;
        amp *= alpha_c / ((ic + 1) as f64).sqrt();
    }
    let norm = psi.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
    psi.iter_mut().for_each(|a| *a /= norm);
    Ok(psi)
}

/// One phase member of the ensemble, evolved and sampled: returns
/// `⟨a†ᵏaˡ⟩(t)` at each requested time.
fn evolve_and_sample_moment(
    hamiltonian: &SparseOperator,
    lower: &SparseOperator,
    psi0: &[C64],
    k: usize,
    l: usize,
    times: &[f64],
    integ: &IntegratorConfig,
) -> Result<Vec<C64>> {
    let mut y = psi0.to_vec();
    let minus_i = C64::new(0.0, -1.0);
    let rhs = |_t: f64, y: &[C64], dy: &mut [C64]| {
        dy.iter_mut().for_each(|v| *v = C64::ZERO);
        hamiltonian.acc_vec(minus_i, y, dy);
    };
    let mut out = Vec::with_capacity(times.len());
    integrate_adaptive(
        rhs,
        0.0,
        &mut y,
        times,
        integ.rel_tol,
        integ.abs_tol,
        integ.max_step,
        |_idx, _t, y| {
            out.push(moment(lower, y, k, l));
            Ok(())
        },
    )?;
    Ok(out)
}

/// `⟨ψ| a†ᵏ aˡ |ψ⟩ = ⟨aᵏψ | aˡψ⟩`.
fn moment(lower: &SparseOperator, psi: &[C64], k: usize, l: usize) -> C64 {
    let bra = apply_power(lower, psi, k);
    let ket = apply_power(lower, psi, l);
    bra.iter().zip(&ket).map(|(b, v)| b.conj() * v).sum()
}

fn apply_power(op: &SparseOperator, psi: &[C64], times: usize) -> Vec<C64> {
    let mut v = psi.to_vec();
    for _ in 0..times {
        v = op.mul_vec(&v);
    }
    v
}

/// Both sides of the phase-smearing identity for one moment at one time.
#[derive(Clone, Copy, Debug)]
pub struct MomentComparison {
    pub time: f64,
    /// Mixed-state evolution: the weighted phase-ensemble average.
    pub direct: C64,
    /// Coherent-run moment times the smearing Fourier factor.
    pub factored: C64,
}

impl MomentComparison {
    pub fn difference(&self) -> f64 {
        (self.direct - self.factored).norm()
    }
}

/// Evaluates `⟨a†ᵏaˡ⟩` under the smeared pump at each sample time, both by
/// direct mixed-state evolution (phase ensemble, deterministic reduction
/// order) and by the factored coherent-run form.
pub fn smeared_moment_series(
    k: usize,
    l: usize,
    prep: &PumpPreparation,
    sample_times: &[f64],
    params: &ThreeModeParams,
    integ: &IntegratorConfig,
) -> Result<Vec<MomentComparison>> {
    if sample_times.is_empty()
        || sample_times[0] < 0.0
        || sample_times.windows(2).any(|w| w[1] <= w[0])
    {
        return Err(Error::BadSampleTimes);
    }
    let hamiltonian = build_three_mode(params)?;
    let lower = mode_a_annihilate(params)?;
    let phases = prep.smearing.phases()?;

    // reference coherent run (θ = 0)
    let psi0 = pump_initial(params, prep.alpha_c)?;
    let reference =
        evolve_and_sample_moment(&hamiltonian, &lower, &psi0, k, l, sample_times, integ)?;

    // phase ensemble, evolved independently; the weighted average is reduced
    // in phase order
    let member_moments: Vec<Result<Vec<C64>>> = phases
        .par_iter()
        .map(|&(theta, _)| {
            let rotated = pump_initial(params, prep.alpha_c * C64::from_polar(1.0, theta))?;
            evolve_and_sample_moment(&hamiltonian, &lower, &rotated, k, l, sample_times, integ)
        })
        .collect();

    let mut direct = vec![C64::ZERO; sample_times.len()];
    for (member, &(_, w)) in member_moments.into_iter().zip(&phases) {
        let member = member?;
        for (d, m) in direct.iter_mut().zip(member) {
            *d += w * m;
        }
    }

    let order = k as f64 - l as f64;
    let factor: C64 = phases
        .iter()
        .map(|&(theta, w)| C64::from_polar(w, -order * theta))
        .sum();

    Ok(sample_times
        .iter()
        .zip(reference.iter().zip(&direct))
        .map(|(&time, (&m0, &d))| MomentComparison { time, direct: d, factored: m0 * factor })
        .collect())
}

/// Single-time variant of [`smeared_moment_series`] with default pure-state
/// tolerances.
pub fn smeared_moment(
    k: usize,
    l: usize,
    prep: &PumpPreparation,
    evolve_to: f64,
    params: &ThreeModeParams,
) -> Result<MomentComparison> {
    let times = if evolve_to > 0.0 { vec![0.0, evolve_to] } else { vec![0.0] };
    let series =
        smeared_moment_series(k, l, prep, &times, params, &IntegratorConfig::pure_default())?;
    Ok(*series.last().unwrap())
}
