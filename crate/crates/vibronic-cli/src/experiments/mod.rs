//! Experiment strategies. Each experiment kind implements [`Experiment`] and
//! is registered by name; the CLI looks the strategy up at runtime from the
//! subcommand (or a config-driven caller can do the same through [`find`]).

use std::path::PathBuf;

use vibronic::dynamics::{
    evolve_lindblad, evolve_pure, thermal_initial, IntegratorConfig, LindbladParams, StateSeries,
    Trajectory,
};
use vibronic::hilbert::{basis_state, BasisSpec, PureState};
use vibronic::measures::{state_probabilities, von_neumann_entropy};
use vibronic::model::{ModelParams, PulseProtocol};
use vibronic::hilbert::Subsystem;

use crate::config::{parse_initial, InitialSpec, RawConfig};
use crate::report::{CsvBuffer, Manifest};
use crate::{CliError, CliResult};

mod entropy_map;
mod lzs;
mod open_sweep;
mod parametric;
mod ramp;
mod scaling;
mod sweep;
mod wigner;

/// One experiment kind: a named strategy over the shared configuration.
pub trait Experiment: Sync {
    fn name(&self) -> &'static str;
    fn about(&self) -> &'static str;
    fn run(&self, ctx: &mut RunContext) -> CliResult<()>;
}

/// All registered experiment strategies, in CLI listing order.
pub fn registry() -> Vec<Box<dyn Experiment>> {
    vec![
        Box::new(ramp::Ramp),
        Box::new(sweep::Sweep),
        Box::new(entropy_map::EntropyMap),
        Box::new(scaling::Scaling),
        Box::new(open_sweep::OpenSweep),
        Box::new(wigner::WignerSnapshot),
        Box::new(lzs::LzsCurve),
        Box::new(parametric::ParametricCheck),
    ]
}

pub fn find(name: &str) -> Option<Box<dyn Experiment>> {
    registry().into_iter().find(|e| e.name() == name)
}

/// Mutable run state shared with the selected experiment: configuration,
/// output directory, and the manifest being assembled.
pub struct RunContext<'a> {
    pub raw: &'a RawConfig,
    pub out_dir: PathBuf,
    pub manifest: Manifest,
}

impl<'a> RunContext<'a> {
    pub fn new(raw: &'a RawConfig, out_dir: PathBuf, kind: &str) -> Self {
        let mut manifest = Manifest::new(kind);
        manifest.echo_config(raw.entries());
        Self { raw, out_dir, manifest }
    }

    /// Writes a CSV buffer to the output directory and checksums it into the
    /// manifest.
    pub fn emit_csv(&mut self, csv: CsvBuffer) -> CliResult<()> {
        self.manifest.record_output(&csv.name, csv.bytes());
        std::fs::write(self.out_dir.join(&csv.name), csv.bytes())?;
        Ok(())
    }
}

/// Runs `f` on a dedicated pool of `workers` threads (0 = the global pool).
pub fn with_pool<T: Send>(workers: usize, f: impl FnOnce() -> T + Send) -> CliResult<T> {
    if workers == 0 {
        Ok(f())
    } else {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(workers)
            .build()
            .map_err(|e| CliError::Config(format!("worker pool: {e}")))?;
        Ok(pool.install(f))
    }
}

/// Model/pulse/integrator settings shared by the pulse-driven experiments.
#[derive(Clone, Debug)]
pub struct PulseSetup {
    pub params: ModelParams,
    pub fock_cutoff: usize,
    pub velocity: f64,
    pub initial: InitialSpec,
    pub kappa: f64,
    pub nbar: f64,
    pub samples: usize,
    pub rel_tol: Option<f64>,
    pub abs_tol: Option<f64>,
    pub audit: bool,
    pub workers: usize,
}

impl PulseSetup {
    pub fn from_config(raw: &RawConfig) -> CliResult<Self> {
        let n_spins = raw.usize_or("n_spins", 3)?;
        let params = ModelParams {
            omega: raw.f64_or("omega", 1.0)?,
            epsilon: raw.f64_or("epsilon", 1.0)?,
            n_spins,
            lambda_max: raw.f64_or("lambda_max", 1.0)?,
        };
        params.validate()?;
        let setup = Self {
            params,
            fock_cutoff: raw.usize_or("fock_cutoff", 40)?,
            velocity: raw.f64_or("velocity", 0.25)?,
            initial: parse_initial(&raw.str_or("initial", "GS"))?,
            kappa: raw.f64_or("kappa", 0.0)?,
            nbar: raw.f64_or("nbar", 0.0)?,
            samples: raw.usize_or("samples", 200)?,
            rel_tol: match raw.f64_or("rel_tol", -1.0)? {
                x if x > 0.0 => Some(x),
                _ => None,
            },
            abs_tol: match raw.f64_or("abs_tol", -1.0)? {
                x if x > 0.0 => Some(x),
                _ => None,
            },
            audit: raw.bool_or("audit", true)?,
            workers: raw.usize_or("workers", 0)?,
        };
        if setup.samples < 2 {
            return Err(CliError::Config("samples must be at least 2".into()));
        }
        Ok(setup)
    }

    pub fn basis(&self, fock_cutoff: usize) -> CliResult<BasisSpec> {
        Ok(BasisSpec::new(self.params.n_spins, fock_cutoff)?)
    }

    pub fn protocol(&self, velocity: f64) -> CliResult<PulseProtocol> {
        Ok(PulseProtocol::up_down_linear(velocity, self.params.lambda_max)?)
    }

    /// Density-matrix route is needed for thermal initial states or any
    /// nonzero damping.
    pub fn open_system(&self) -> bool {
        self.kappa > 0.0 || self.initial.needs_density()
    }

    pub fn integrator(&self, open: bool) -> IntegratorConfig {
        let mut integ = if open {
            IntegratorConfig::lindblad_default()
        } else {
            IntegratorConfig::pure_default()
        };
        if let Some(rt) = self.rel_tol {
            integ.rel_tol = rt;
        }
        if let Some(at) = self.abs_tol {
            integ.abs_tol = at;
        }
        integ
    }

    pub fn describe_integrator(&self) -> String {
        let integ = self.integrator(self.open_system());
        format!(
            "adaptive_rk rel_tol={} abs_tol={}",
            integ.rel_tol, integ.abs_tol
        )
    }

    fn initial_excitations(&self, basis: &BasisSpec) -> CliResult<PureState> {
        let (two_m, n) = match self.initial {
            InitialSpec::Excitations(k) => (2 * k as i64 - basis.two_j(), 0),
            InitialSpec::Custom { two_m, n } => (two_m, n),
            InitialSpec::Thermal { .. } => {
                return Err(CliError::Config(
                    "thermal initial state requires the density-matrix route".into(),
                ))
            }
        };
        Ok(basis_state(basis, two_m, n)?)
    }

    /// Uniform sample grid over one pulse at `velocity`, evolved on the
    /// route the configuration demands.
    pub fn evolve_at(
        &self,
        velocity: f64,
        fock_cutoff: usize,
        samples: usize,
    ) -> CliResult<Trajectory> {
        let protocol = self.protocol(velocity)?;
        let duration = protocol.duration();
        if !(duration > 0.0) {
            return Err(CliError::Config(
                "pulse has zero duration (lambda_max = 0); nothing to sample".into(),
            ));
        }
        let times: Vec<f64> = (0..samples)
            .map(|i| duration * i as f64 / (samples - 1) as f64)
            .collect();
        self.evolve_at_times(velocity, fock_cutoff, &times)
    }

    /// Evolution sampled at explicit times (strictly increasing, starting at
    /// 0); times past the pulse end continue at λ = 0.
    pub fn evolve_at_times(
        &self,
        velocity: f64,
        fock_cutoff: usize,
        times: &[f64],
    ) -> CliResult<Trajectory> {
        let basis = self.basis(fock_cutoff)?;
        let protocol = self.protocol(velocity)?;
        if self.open_system() {
            let lind = LindbladParams { kappa: self.kappa, nbar: self.nbar };
            let rho0 = match self.initial {
                InitialSpec::Thermal { nbar, spin_excitations } => {
                    let mut spin = vec![num_complex::Complex64::ZERO; basis.spin_dim()];
                    if spin_excitations >= basis.spin_dim() {
                        return Err(CliError::Config(format!(
                            "initial W{spin_excitations} needs more than {} spins",
                            self.params.n_spins
                        )));
                    }
                    spin[spin_excitations] = num_complex::Complex64::new(1.0, 0.0);
                    thermal_initial(&basis, nbar, &spin)?
                }
                _ => self.initial_excitations(&basis)?.projector(),
            };
            Ok(evolve_lindblad(
                &rho0,
                &self.params,
                &protocol,
                &lind,
                &self.integrator(true),
                times,
            )?)
        } else {
            let psi0 = self.initial_excitations(&basis)?;
            Ok(evolve_pure(
                &psi0,
                &self.params,
                &protocol,
                &self.integrator(false),
                times,
            )?)
        }
    }
}

/// Per-sample observables used by the trajectory-shaped outputs.
pub struct SampleRow {
    pub time: f64,
    pub lambda: f64,
    pub probs: Vec<f64>,
    pub entropy: f64,
    pub occupation: f64,
    pub norm: f64,
}

pub fn sample_rows(traj: &Trajectory) -> Vec<SampleRow> {
    use rayon::prelude::*;
    let indices: Vec<usize> = (0..traj.len()).collect();
    indices
        .par_iter()
        .map(|&i| {
            let rec = traj.observables[i];
            let (probs, entropy) = match &traj.states {
                StateSeries::Pure(states) => (
                    state_probabilities(&states[i]).probs().to_vec(),
                    von_neumann_entropy(&states[i], Subsystem::Spin),
                ),
                StateSeries::Density(states) => (
                    state_probabilities(&states[i]).probs().to_vec(),
                    von_neumann_entropy(&states[i], Subsystem::Spin),
                ),
            };
            SampleRow {
                time: rec.time,
                lambda: rec.lambda,
                probs,
                entropy,
                occupation: rec.field_occupation,
                norm: rec.norm,
            }
        })
        .collect()
}

/// Column labels `P_GS, P_W1, ...` for the Dicke-level probabilities.
pub fn prob_headers(n_spins: usize) -> Vec<String> {
    (0..=n_spins)
        .map(|k| format!("P_{}", vibronic::measures::ProbabilityRecord::label(k)))
        .collect()
}

/// Reruns `probs_at` at the configured cutoff and at cutoff + 10 and demands
/// agreement to 1e-6 on every compared probability; the audited subset is
/// named in the manifest.
pub fn convergence_audit(
    ctx: &mut RunContext,
    enabled: bool,
    base_cutoff: usize,
    detail: &str,
    probs_at: impl Fn(usize) -> CliResult<Vec<f64>>,
) -> CliResult<()> {
    if !enabled {
        ctx.manifest.note("audit", "disabled by config");
        return Ok(());
    }
    let base = probs_at(base_cutoff)?;
    let bumped = probs_at(base_cutoff + 10)?;
    if base.len() != bumped.len() {
        return Err(CliError::Config("audit produced mismatched observable sets".into()));
    }
    let max_delta = base
        .iter()
        .zip(&bumped)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0f64, f64::max);
    if max_delta > 1e-6 {
        ctx.manifest.note(
            "audit",
            format!(
                "FAIL max_delta={max_delta:.3e} ({detail}; fock_cutoff {base_cutoff} vs {})",
                base_cutoff + 10
            ),
        );
        Err(CliError::Audit {
            detail: format!("{detail}; fock_cutoff {base_cutoff} vs {}", base_cutoff + 10),
            max_delta,
        })
    } else {
        ctx.manifest.note(
            "audit",
            format!(
                "pass max_delta={max_delta:.3e} ({detail}; fock_cutoff {base_cutoff} vs {})",
                base_cutoff + 10
            ),
        );
        Ok(())
    }
}
