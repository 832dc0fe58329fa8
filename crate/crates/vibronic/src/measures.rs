//! Reported observables: Dicke-level probabilities, von Neumann entropy of
//! the electronic-vibrational bipartition, (logarithmic) negativity from the
//! partial transpose, the vibrational Wigner function in the displaced-parity
//! convention, and the closed-form Landau-Zener-Stückelberg predictor.
//!
//! Entropies are in bits (log base 2), which makes a two-term Schmidt state
//! worth exactly 1.

use nalgebra::DMatrix;
use num_complex::Complex64 as C64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::hilbert::{partial_trace, DensityOp, PureState, Subsystem};

/// Borrow of either state representation, for the observable entry points
/// that accept both.
#[derive(Clone, Copy)]
pub enum State<'a> {
    Pure(&'a PureState),
    Density(&'a DensityOp),
}

impl<'a> From<&'a PureState> for State<'a> {
    fn from(s: &'a PureState) -> Self {
        State::Pure(s)
    }
}

impl<'a> From<&'a DensityOp> for State<'a> {
    fn from(s: &'a DensityOp) -> Self {
        State::Density(s)
    }
}

/// Field-marginal probabilities over the Dicke levels `M = -J ... +J`,
/// indexed by the excitation count `k` with `M = -J + k`.
#[derive(Clone, Debug)]
pub struct ProbabilityRecord {
    two_j: i64,
    probs: Vec<f64>,
}

impl ProbabilityRecord {
    pub fn two_j(&self) -> i64 {
        self.two_j
    }

    /// Probabilities ordered from `M = -J` (k = 0) upward.
    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn prob_excitations(&self, k: usize) -> f64 {
        self.probs[k]
    }

    pub fn prob_two_m(&self, two_m: i64) -> Option<f64> {
        let k2 = two_m + self.two_j;
        if two_m.abs() > self.two_j || k2 % 2 != 0 {
            return None;
        }
        Some(self.probs[(k2 / 2) as usize])
    }

    /// Ground level `|J, -J⟩`.
    pub fn ground(&self) -> f64 {
        self.probs[0]
    }

    /// Total excited weight `1 - P(GS)` as summed over the record.
    pub fn excited_weight(&self) -> f64 {
        self.probs[1..].iter().sum()
    }

    pub fn total(&self) -> f64 {
        self.probs.iter().sum()
    }

    /// Name of the Dicke level with `k` excitations: `GS`, `W1`, `W2`, ...
    pub fn label(k: usize) -> String {
        if k == 0 {
            "GS".to_string()
        } else {
            format!("W{k}")
        }
    }
}

/// `P(M) = Σ_n |⟨J,M;n|ψ⟩|²` (or the matching diagonal sums of ρ).
pub fn state_probabilities<'a>(state: impl Into<State<'a>>) -> ProbabilityRecord {
    let state = state.into();
    let basis = match state {
        State::Pure(s) => s.basis(),
        State::Density(r) => r.basis(),
    };
    let s = basis.spin_dim();
    let f = basis.field_dim();
    let mut probs = vec![0.0f64; s];
    match state {
        State::Pure(st) => {
            let amps = st.amplitudes();
            for (k, p) in probs.iter_mut().enumerate() {
                *p = amps[k * f..(k + 1) * f].iter().map(|a| a.norm_sqr()).sum();
            }
        }
        State::Density(rho) => {
            let m = rho.matrix();
            for (k, p) in probs.iter_mut().enumerate() {
                *p = (0..f).map(|n| m[(k * f + n, k * f + n)].re).sum();
            }
        }
    }
    ProbabilityRecord { two_j: basis.two_j(), probs }
}

fn entropy_of_spectrum(eigs: impl IntoIterator<Item = f64>) -> f64 {
    let mut s = 0.0;
    for p in eigs {
        if p > 1e-15 {
            s -= p * p.log2();
        }
    }
    s
}

/// Reduced density matrix on one side of the electronic-vibrational cut.
/// Pure states reduce through their Gram matrix without forming the full
/// projector.
pub fn reduced_state<'a>(state: impl Into<State<'a>>, keep: Subsystem) -> DMatrix<C64> {
    match state.into() {
        State::Pure(st) => {
            let basis = st.basis();
            let s = basis.spin_dim();
            let f = basis.field_dim();
            let amps = st.amplitudes();
            match keep {
                Subsystem::Spin => {
                    let mut m = DMatrix::<C64>::zeros(s, s);
                    for k in 0..s {
                        for k2 in 0..=k {
                            let mut acc = C64::ZERO;
                            for n in 0..f {
                                acc += amps[k * f + n] * amps[k2 * f + n].conj();
                            }
                            m[(k, k2)] = acc;
                            m[(k2, k)] = acc.conj();
                        }
                    }
                    m
                }
                Subsystem::Field => {
                    let mut m = DMatrix::<C64>::zeros(f, f);
                    for n in 0..f {
                        for n2 in 0..=n {
                            let mut acc = C64::ZERO;
                            for k in 0..s {
                                acc += amps[k * f + n] * amps[k * f + n2].conj();
                            }
                            m[(n, n2)] = acc;
                            m[(n2, n)] = acc.conj();
                        }
                    }
                    m
                }
            }
        }
        State::Density(rho) => partial_trace(rho, keep),
    }
}

/// Von Neumann entropy (bits) of the reduced state on the chosen side of the
/// electronic-vibrational cut.
pub fn von_neumann_entropy<'a>(state: impl Into<State<'a>>, cut: Subsystem) -> f64 {
    let reduced = reduced_state(state, cut);
    entropy_of_spectrum(reduced.symmetric_eigenvalues().iter().copied())
}

/// Partial transpose of ρ over one factor, in the same flat basis layout.
pub fn partial_transpose(rho: &DensityOp, over: Subsystem) -> DMatrix<C64> {
    let basis = rho.basis();
    let s = basis.spin_dim();
    let f = basis.field_dim();
    let m = rho.matrix();
    let mut out = DMatrix::<C64>::zeros(basis.dim(), basis.dim());
    for k in 0..s {
        for k2 in 0..s {
            for n in 0..f {
                for n2 in 0..f {
                    let (row, col) = (k * f + n, k2 * f + n2);
                    let src = match over {
                        Subsystem::Spin => (k2 * f + n, k * f + n2),
                        Subsystem::Field => (k * f + n2, k2 * f + n),
                    };
                    out[(row, col)] = m[src];
                }
            }
        }
    }
    out
}

/// Negativity `N(ρ) = ½(‖ρ^Γ‖₁ − 1)`, evaluated as the summed magnitude of
/// the negative eigenvalues of the partial transpose.
pub fn negativity(rho: &DensityOp, transpose_over: Subsystem) -> f64 {
    let pt = partial_transpose(rho, transpose_over);
    pt.symmetric_eigenvalues().iter().filter(|&&e| e < 0.0).map(|e| -e).sum()
}

/// Logarithmic negativity `log₂ ‖ρ^Γ‖₁` with the transpose taken over the
/// matter (spin) subsystem.
pub fn log_negativity(rho: &DensityOp) -> f64 {
    let pt = partial_transpose(rho, Subsystem::Spin);
    let trace_norm: f64 = pt.symmetric_eigenvalues().iter().map(|e| e.abs()).sum();
    trace_norm.log2().max(0.0)
}

/// Uniform axis for the phase-space grid.
#[derive(Clone, Copy, Debug)]
pub struct AxisSpec {
    pub min: f64,
    pub max: f64,
    pub count: usize,
}

impl AxisSpec {
    pub fn symmetric(half_width: f64, count: usize) -> Self {
        Self { min: -half_width, max: half_width, count }
    }

    pub fn points(&self) -> Vec<f64> {
        if self.count == 1 {
            return vec![self.min];
        }
        (0..self.count)
            .map(|i| self.min + (self.max - self.min) * i as f64 / (self.count - 1) as f64)
            .collect()
    }
}

/// Wigner function samples over an (x, p) grid; `values[(i, j)]` belongs to
/// `(x_axis[i], p_axis[j])`.
#[derive(Clone, Debug)]
pub struct WignerGrid {
    pub x_axis: Vec<f64>,
    pub p_axis: Vec<f64>,
    pub values: DMatrix<f64>,
}

impl WignerGrid {
    pub fn min_value(&self) -> f64 {
        self.values.iter().fold(f64::INFINITY, |a, &b| a.min(b))
    }

    /// Trapezoidal mass over the grid; 1 for a well-resolved state.
    pub fn quadrature_mass(&self) -> f64 {
        let wx = trapezoid_weights(&self.x_axis);
        let wp = trapezoid_weights(&self.p_axis);
        let mut acc = 0.0;
        for i in 0..self.x_axis.len() {
            for j in 0..self.p_axis.len() {
                acc += wx[i] * wp[j] * self.values[(i, j)];
            }
        }
        acc
    }
}

fn trapezoid_weights(axis: &[f64]) -> Vec<f64> {
    let n = axis.len();
    let mut w = vec![0.0; n];
    for i in 0..n.saturating_sub(1) {
        let h = axis[i + 1] - axis[i];
        w[i] += 0.5 * h;
        w[i + 1] += 0.5 * h;
    }
    w
}

/// Wigner function of a reduced field state in the displaced-parity
/// convention, `W(α) = (2/π) tr[ρ D(α) Π D†(α)]` with the phase point
/// `α = x + ip`. The vacuum peaks at `2/π` and the total mass over dx dp
/// is 1.
///
/// Since `Π D†(α) Π = D(α)`, the trace reduces to `tr[ρ D(2α) Π]`, which is
/// contracted against the exact closed-form displacement matrix elements
/// (associated Laguerre polynomials). Truncation therefore enters only
/// through ρ itself, never through the displacement, and the evaluation is
/// stable at any grid radius. Errors if the grid radius cannot resolve the
/// cutoff (`max |α|² < n_max`).
pub fn wigner(rho_field: &DMatrix<C64>, x_axis: &AxisSpec, p_axis: &AxisSpec) -> Result<WignerGrid> {
    let f = rho_field.nrows();
    if f == 0 || rho_field.ncols() != f {
        return Err(Error::DimensionMismatch { expected: f.max(1), got: rho_field.ncols() });
    }
    let n_max = f - 1;
    let xs = x_axis.points();
    let ps = p_axis.points();
    let max_alpha_sq = xs.iter().fold(0.0f64, |a, &x| a.max(x * x))
        + ps.iter().fold(0.0f64, |a, &p| a.max(p * p));
    if max_alpha_sq < n_max as f64 {
        return Err(Error::GridTooCoarse { max_alpha_sq, n_max });
    }

    let values_rows: Vec<Vec<f64>> = xs
        .par_iter()
        .map(|&x| {
            let mut row = vec![0.0f64; ps.len()];
            for (jp, &p) in ps.iter().enumerate() {
                row[jp] = std::f64::consts::FRAC_2_PI
                    * displaced_parity_trace(rho_field, C64::new(2.0 * x, 2.0 * p));
            }
            row
        })
        .collect();

    let mut values = DMatrix::<f64>::zeros(xs.len(), ps.len());
    for (i, row) in values_rows.into_iter().enumerate() {
        for (j, v) in row.into_iter().enumerate() {
            values[(i, j)] = v;
        }
    }
    Ok(WignerGrid { x_axis: xs, p_axis: ps, values })
}

/// `tr[ρ D(β) Π]` from the closed form
/// `⟨n+a|D(β)|n⟩ = √(n!/(n+a)!) β^a e^{-|β|²/2} L_n^{(a)}(|β|²)`,
/// using Hermiticity of ρ to fold the lower triangle into the real part.
fn displaced_parity_trace(rho: &DMatrix<C64>, beta: C64) -> f64 {
    let f = rho.nrows();
    let x = beta.norm_sqr();
    let gauss = (-x / 2.0).exp();
    let mut acc = 0.0f64;
    // pref(a, n=0) = β^a / √(a!)
    let mut pref0 = C64::new(1.0, 0.0);
    for a in 0..f {
        if a > 0 {
            pref0 *= beta / (a as f64).sqrt();
        }
        // Laguerre recurrence in the degree n at fixed superscript a,
        // with pref(a, n+1) = pref(a, n) · √((n+1)/(n+1+a))
        let mut pref = pref0;
        let mut l_prev = 0.0f64;
        let mut l_cur = 1.0f64;
        let mut partial = C64::ZERO;
        for n in 0..f - a {
            let sign = if n % 2 == 0 { 1.0 } else { -1.0 };
            partial += sign * rho[(n, n + a)] * pref * (gauss * l_cur);
            let af = a as f64;
            let nf = n as f64;
            let l_next = ((2.0 * nf + 1.0 + af - x) * l_cur - (nf + af) * l_prev) / (nf + 1.0);
            l_prev = l_cur;
            l_cur = l_next;
            pref *= ((nf + 1.0) / (nf + 1.0 + af)).sqrt();
        }
        if a == 0 {
            acc += partial.re;
        } else {
            acc += 2.0 * partial.re;
        }
    }
    acc
}

/// Drops Fock levels whose collective tail population is below `tail_tol`,
/// returning the leading block. Keeps at least four levels.
pub fn trim_field_state(rho_field: &DMatrix<C64>, tail_tol: f64) -> DMatrix<C64> {
    let f = rho_field.nrows();
    let mut tail = 0.0;
    let mut keep = f;
    for n in (0..f).rev() {
        tail += rho_field[(n, n)].re.max(0.0);
        if tail > tail_tol {
            keep = n + 1;
            break;
        }
        keep = n;
    }
    let keep = keep.clamp(4.min(f), f);
    rho_field.view((0, 0), (keep, keep)).into_owned()
}

/// Two-passage Landau-Zener-Stückelberg parameters: minimum effective gap Δ
/// and ramp velocity v.
#[derive(Clone, Copy, Debug)]
pub struct LzsParams {
    pub delta: f64,
    pub velocity: f64,
}

impl LzsParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.delta > 0.0) {
            return Err(Error::InvalidParameter { name: "delta", value: self.delta });
        }
        if !(self.velocity > 0.0) {
            return Err(Error::InvalidParameter { name: "velocity", value: self.velocity });
        }
        Ok(())
    }
}

/// Diabatic single-passage probability `P = exp(-πΔ²/(2v))` (the
/// `exp(-2πΔ²/4v)` form with the constants folded together).
pub fn lzs_passage_prob(lzs: &LzsParams) -> f64 {
    (-std::f64::consts::PI * lzs.delta * lzs.delta / (2.0 * lzs.velocity)).exp()
}

/// Phase-averaged excited-manifold weight after the up-down pulse,
/// `P^e = 2P(1-P)`; peaks at exactly ½ where `P = ½`.
pub fn lzs_excited_prob(lzs: &LzsParams) -> f64 {
    let p = lzs_passage_prob(lzs);
    2.0 * p * (1.0 - p)
}

/// Smallest velocity whose peak entropy exceeds `threshold · max(curve)`,
/// interpolating linearly in log v between grid samples. The curve is
/// `(v, peak S_N)` sorted by increasing v.
pub fn estimate_vmin(curve: &[(f64, f64)], threshold: f64) -> Result<f64> {
    let max = curve.iter().map(|p| p.1).fold(f64::NEG_INFINITY, f64::max);
    if !(max > 0.0) {
        return Err(Error::WindowNotFound);
    }
    let thr = threshold * max;
    let hit = curve.iter().position(|p| p.1 >= thr).ok_or(Error::WindowNotFound)?;
    if hit == 0 {
        return Ok(curve[0].0);
    }
    let (v0, s0) = curve[hit - 1];
    let (v1, s1) = curve[hit];
    let frac = (thr - s0) / (s1 - s0);
    Ok((v0.ln() + frac * (v1.ln() - v0.ln())).exp())
}

/// Largest velocity whose peak entropy exceeds `threshold · max(curve)`;
/// the falling-edge counterpart of [`estimate_vmin`].
pub fn estimate_vmax(curve: &[(f64, f64)], threshold: f64) -> Result<f64> {
    let max = curve.iter().map(|p| p.1).fold(f64::NEG_INFINITY, f64::max);
    if !(max > 0.0) {
        return Err(Error::WindowNotFound);
    }
    let thr = threshold * max;
    let hit = curve.iter().rposition(|p| p.1 >= thr).ok_or(Error::WindowNotFound)?;
    if hit + 1 == curve.len() {
        return Ok(curve[hit].0);
    }
    let (v0, s0) = curve[hit];
    let (v1, s1) = curve[hit + 1];
    let frac = (thr - s0) / (s1 - s0);
    Ok((v0.ln() + frac * (v1.ln() - v0.ln())).exp())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hilbert::{basis_state, BasisSpec};
    use approx::assert_relative_eq;
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn bell_like(basis: &BasisSpec, k0: (i64, usize), k1: (i64, usize)) -> PureState {
        let mut amps = vec![C64::ZERO; basis.dim()];
        amps[basis.flat_index(k0.0, k0.1).unwrap()] = c(std::f64::consts::FRAC_1_SQRT_2, 0.0);
        amps[basis.flat_index(k1.0, k1.1).unwrap()] = c(std::f64::consts::FRAC_1_SQRT_2, 0.0);
        PureState::new(amps, *basis).unwrap()
    }

    #[test]
    fn probabilities_of_named_states() {
        let basis = BasisSpec::new(3, 6).unwrap();
        let w2 = basis_state(&basis, 1, 0).unwrap();
        let rec = state_probabilities(&w2);
        assert_relative_eq!(rec.prob_excitations(2), 1.0, epsilon = 1e-14);
        assert_relative_eq!(rec.ground(), 0.0);
        assert_relative_eq!(rec.total(), 1.0, epsilon = 1e-12);
        assert_eq!(ProbabilityRecord::label(0), "GS");
        assert_eq!(ProbabilityRecord::label(2), "W2");

        let sup = bell_like(&basis, (-3, 0), (-1, 1));
        let rec = state_probabilities(&sup);
        assert_relative_eq!(rec.ground(), 0.5, epsilon = 1e-12);
        assert_relative_eq!(rec.prob_excitations(1), 0.5, epsilon = 1e-12);

        // density route agrees
        let rec2 = state_probabilities(&sup.projector());
        for (a, b) in rec.probs().iter().zip(rec2.probs()) {
            assert_relative_eq!(a, b, epsilon = 1e-12);
        }
    }

    #[test]
    fn entropy_product_and_bell() {
        let basis = BasisSpec::new(2, 4).unwrap();
        let product = basis_state(&basis, 0, 3).unwrap();
        assert!(von_neumann_entropy(&product, Subsystem::Spin).abs() < 1e-12);
        assert!(von_neumann_entropy(&product, Subsystem::Field).abs() < 1e-12);

        let bell = bell_like(&basis, (-2, 0), (0, 1));
        assert_relative_eq!(von_neumann_entropy(&bell, Subsystem::Spin), 1.0, epsilon = 1e-10);
        assert_relative_eq!(von_neumann_entropy(&bell, Subsystem::Field), 1.0, epsilon = 1e-10);
    }

    #[test]
    fn entropy_cut_symmetry_on_random_pure_states() {
        let basis = BasisSpec::new(3, 5).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        for _ in 0..20 {
            let mut amps: Vec<C64> = (0..basis.dim())
                .map(|_| c(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5))
                .collect();
            let norm = amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
            amps.iter_mut().for_each(|a| *a /= norm);
            let st = PureState::new(amps, basis).unwrap();
            let ss = von_neumann_entropy(&st, Subsystem::Spin);
            let sf = von_neumann_entropy(&st, Subsystem::Field);
            assert!((ss - sf).abs() < 1e-8, "cut asymmetry: {ss} vs {sf}");
            assert!(ss >= 0.0);
            assert!(ss <= (basis.spin_dim().min(basis.field_dim()) as f64).log2() + 1e-12);
            // pure-state witnesses agree at zero
            let neg = negativity(&st.projector(), Subsystem::Spin);
            assert_eq!(neg < 1e-8, ss < 1e-8);
        }
    }

    #[test]
    fn negativity_trivials_and_bell() {
        let basis = BasisSpec::new(1, 1).unwrap();
        let product = basis_state(&basis, -1, 0).unwrap().projector();
        assert!(negativity(&product, Subsystem::Spin) < 1e-12);
        assert!(log_negativity(&product) < 1e-10);

        let bell = bell_like(&basis, (-1, 0), (1, 1)).projector();
        assert_relative_eq!(negativity(&bell, Subsystem::Spin), 0.5, epsilon = 1e-10);
        assert_relative_eq!(negativity(&bell, Subsystem::Field), 0.5, epsilon = 1e-10);
        assert_relative_eq!(log_negativity(&bell), 1.0, epsilon = 1e-10);
    }

    #[test]
    fn schmidt_negativity_identity_on_random_states() {
        // |ψ⟩ = Σ √λ_i |m_i⟩|n_i⟩ has N = ((Σ√λ)² - 1)/2
        let basis = BasisSpec::new(2, 4).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..50 {
            let k = 3usize;
            let mut lambdas: Vec<f64> = (0..k).map(|_| rng.random::<f64>() + 1e-3).collect();
            let total: f64 = lambdas.iter().sum();
            lambdas.iter_mut().for_each(|l| *l /= total);
            let mut amps = vec![C64::ZERO; basis.dim()];
            for (i, l) in lambdas.iter().enumerate() {
                let two_m = 2 * i as i64 - basis.two_j();
                let idx = basis.flat_index(two_m, i).unwrap();
                amps[idx] = c(l.sqrt(), 0.0);
            }
            let st = PureState::new(amps, basis).unwrap();
            let expect =
                (lambdas.iter().map(|l| l.sqrt()).sum::<f64>().powi(2) - 1.0) / 2.0;
            let got = negativity(&st.projector(), Subsystem::Spin);
            assert!((got - expect).abs() < 1e-8, "{got} vs {expect}");
        }
    }

    #[test]
    fn partial_transpose_sides_share_trace_norm() {
        let basis = BasisSpec::new(2, 3).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        let mut amps: Vec<C64> = (0..basis.dim())
            .map(|_| c(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5))
            .collect();
        let norm = amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
        amps.iter_mut().for_each(|a| *a /= norm);
        let rho = PureState::new(amps, basis).unwrap().projector();
        let n_spin = negativity(&rho, Subsystem::Spin);
        let n_field = negativity(&rho, Subsystem::Field);
        assert!((n_spin - n_field).abs() < 1e-10);
    }

    #[test]
    fn wigner_vacuum_and_single_photon() {
        let f = 12usize;
        let mut vac = DMatrix::<C64>::zeros(f, f);
        vac[(0, 0)] = c(1.0, 0.0);
        let axes = AxisSpec::symmetric(4.0, 81);
        let grid = wigner(&vac, &axes, &axes).unwrap();
        let center = grid.values[(40, 40)];
        assert_relative_eq!(center, std::f64::consts::FRAC_2_PI, epsilon = 1e-9);
        assert!(grid.min_value() > -1e-12);
        assert_relative_eq!(grid.quadrature_mass(), 1.0, epsilon = 1e-3);
        // Gaussian shape along the x axis, W = (2/π) e^{-2(x²+p²)}
        let x = grid.x_axis[50];
        assert_relative_eq!(
            grid.values[(50, 40)],
            std::f64::consts::FRAC_2_PI * (-2.0 * x * x).exp(),
            epsilon = 1e-8
        );

        let mut one = DMatrix::<C64>::zeros(f, f);
        one[(1, 1)] = c(1.0, 0.0);
        let grid = wigner(&one, &axes, &axes).unwrap();
        assert_relative_eq!(grid.values[(40, 40)], -std::f64::consts::FRAC_2_PI, epsilon = 1e-9);
        assert!(grid.min_value() < 0.0);
        assert_relative_eq!(grid.quadrature_mass(), 1.0, epsilon = 1e-3);
    }

    #[test]
    fn wigner_marginal_matches_position_density() {
        // mixed diag(0.6 |0⟩, 0.4 |1⟩) plus a coherence-free cross-check with
        // Hermite-function densities in the x̂ = (a+a†)/2 convention
        let f = 10usize;
        let mut rho = DMatrix::<C64>::zeros(f, f);
        rho[(0, 0)] = c(0.6, 0.0);
        rho[(1, 1)] = c(0.4, 0.0);
        let axes = AxisSpec::symmetric(4.5, 121);
        let grid = wigner(&rho, &axes, &axes).unwrap();
        let wp = trapezoid_weights(&grid.p_axis);
        for (i, &x) in grid.x_axis.iter().enumerate() {
            let marginal: f64 =
                (0..grid.p_axis.len()).map(|j| wp[j] * grid.values[(i, j)]).sum();
            let xi = std::f64::consts::SQRT_2 * x;
            let phi0 = std::f64::consts::PI.powf(-0.25) * (-xi * xi / 2.0).exp();
            let phi1 = phi0 * std::f64::consts::SQRT_2 * xi;
            let density = std::f64::consts::SQRT_2 * (0.6 * phi0 * phi0 + 0.4 * phi1 * phi1);
            assert!((marginal - density).abs() < 1e-3, "x = {x}: {marginal} vs {density}");
        }
    }

    #[test]
    fn wigner_grid_too_coarse_is_an_error() {
        let f = 30usize;
        let mut vac = DMatrix::<C64>::zeros(f, f);
        vac[(0, 0)] = c(1.0, 0.0);
        let axes = AxisSpec::symmetric(2.0, 21); // max |α|² = 8 < 29
        assert!(matches!(
            wigner(&vac, &axes, &axes),
            Err(Error::GridTooCoarse { .. })
        ));
    }

    #[test]
    fn trim_keeps_populated_block() {
        let f = 20usize;
        let mut rho = DMatrix::<C64>::zeros(f, f);
        rho[(0, 0)] = c(0.7, 0.0);
        rho[(3, 3)] = c(0.3, 0.0);
        let trimmed = trim_field_state(&rho, 1e-12);
        assert_eq!(trimmed.nrows(), 4);
        assert_relative_eq!(trimmed[(3, 3)].re, 0.3, epsilon = 1e-14);
    }

    #[test]
    fn lzs_limits_and_peak() {
        let delta = 0.5;
        assert!(lzs_excited_prob(&LzsParams { delta, velocity: 1e-6 }) < 1e-12);
        assert!(lzs_excited_prob(&LzsParams { delta, velocity: 1e9 }) < 1e-6);

        // derived: P = ½ exactly at v* = πΔ²/(2 ln 2) = π/(8 ln 2) for Δ = ½;
        // cross-checked by bisecting exp(-πΔ²/(2v)) = ½
        let v_star = std::f64::consts::PI * delta * delta / (2.0 * std::f64::consts::LN_2);
        assert_relative_eq!(v_star, std::f64::consts::PI / (8.0 * std::f64::consts::LN_2));
        let (mut lo, mut hi) = (1e-3f64, 1e3f64);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if lzs_passage_prob(&LzsParams { delta, velocity: mid }) < 0.5 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        assert_relative_eq!(v_star, 0.5 * (lo + hi), epsilon = 1e-10);
        assert_relative_eq!(v_star, 0.56654, epsilon = 1e-5);
        assert_relative_eq!(
            lzs_passage_prob(&LzsParams { delta, velocity: v_star }),
            0.5,
            epsilon = 1e-12
        );
        assert_relative_eq!(
            lzs_excited_prob(&LzsParams { delta, velocity: v_star }),
            0.5,
            epsilon = 1e-12
        );

        // bounded by ½ and unimodal over a log-spaced scan
        let mut prev = 0.0;
        let mut rising = true;
        for i in 0..200 {
            let v = 1e-3 * (10f64).powf(i as f64 * 4.0 / 199.0);
            let pe = lzs_excited_prob(&LzsParams { delta, velocity: v });
            assert!(pe <= 0.5 + 1e-12);
            if rising && pe < prev - 1e-12 {
                rising = false;
            }
            if !rising {
                assert!(pe <= prev + 1e-12, "second rise at v = {v}");
            }
            prev = pe;
        }
    }

    #[test]
    fn vmin_bracketing_and_window_not_found() {
        let curve = [(0.01, 0.0), (0.1, 0.0), (1.0, 2.0), (10.0, 2.0)];
        let vmin = estimate_vmin(&curve, 0.5).unwrap();
        assert!(vmin > 0.1 && vmin < 1.0, "vmin = {vmin}");
        let vmax = estimate_vmax(&curve, 0.5).unwrap();
        assert_relative_eq!(vmax, 10.0);

        let flat = [(0.01, 0.0), (0.1, 0.0), (1.0, 0.0)];
        assert!(matches!(estimate_vmin(&flat, 0.5), Err(Error::WindowNotFound)));
    }
}
