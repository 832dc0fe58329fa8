//! Negativity under field damping: one Lindblad trajectory per (N, κ) pair,
//! with both negativity columns sampled along each.

use rayon::prelude::*;

use super::{convergence_audit, Experiment, PulseSetup, RunContext};
use crate::report::{fmt_g, CsvBuffer};
use crate::{CliError, CliResult};
use vibronic::hilbert::Subsystem;
use vibronic::measures::{log_negativity, negativity, state_probabilities};

pub struct OpenSweep;

impl Experiment for OpenSweep {
    fn name(&self) -> &'static str {
        "open-sweep"
    }

    fn about(&self) -> &'static str {
        "negativity vs time for each (N, kappa) under field damping"
    }

    fn run(&self, ctx: &mut RunContext) -> CliResult<()> {
        let base_setup = PulseSetup::from_config(ctx.raw)?;
        let n_list = ctx.raw.usize_list_or("n_list", &[5, 11])?;
        let kappas = ctx.raw.f64_list_or("kappa_list", &[0.0, 0.005, 0.02])?;
        if n_list.is_empty() || kappas.is_empty() {
            return Err(CliError::Config("open-sweep needs n_list and kappa_list".into()));
        }
        if kappas.iter().any(|&k| k < 0.0) {
            return Err(CliError::Config("kappa_list entries must be non-negative".into()));
        }
        // density matrices are heavy; default to a coarser sampling here
        let samples = ctx.raw.usize_or("samples", 60)?;
        ctx.manifest.note("integrator", base_setup.describe_integrator());

        let mut csv = CsvBuffer::new(
            "negativity_vs_t.csv",
            &["t", "kappa", "n", "negativity", "log_negativity"],
        );
        for &n in &n_list {
            let mut setup = base_setup.clone();
            setup.params.n_spins = n;
            setup.samples = samples;
            ctx.manifest.note(
                &format!("basis_n{n}"),
                format!(
                    "fock_cutoff={} dim={}",
                    setup.fock_cutoff,
                    setup.basis(setup.fock_cutoff)?.dim()
                ),
            );
            for &kappa in &kappas {
                let mut run = setup.clone();
                run.kappa = kappa;
                // κ = 0 still takes the density-matrix route so every row in
                // the file answers the same equation of motion
                if !run.open_system() {
                    run.kappa = 0.0;
                    run.initial = match run.initial {
                        crate::config::InitialSpec::Excitations(k) => {
                            crate::config::InitialSpec::Thermal { nbar: 0.0, spin_excitations: k }
                        }
                        other => other,
                    };
                }
                let traj = run.evolve_at(run.velocity, run.fock_cutoff, run.samples)?;
                let states = traj.density_states().expect("density route");
                let values: Vec<(f64, f64)> = super::with_pool(run.workers, || {
                    states
                        .par_iter()
                        .map(|rho| (negativity(rho, Subsystem::Spin), log_negativity(rho)))
                        .collect()
                })?;
                for (rec, (neg, logneg)) in traj.observables.iter().zip(values) {
                    csv.row(&[
                        fmt_g(rec.time),
                        fmt_g(kappa),
                        n.to_string(),
                        fmt_g(neg),
                        fmt_g(logneg),
                    ]);
                }
            }
        }
        ctx.emit_csv(csv)?;

        // audit the heaviest run: largest N, largest κ
        let n_audit = *n_list.iter().max().unwrap();
        let kappa_audit = kappas.iter().cloned().fold(0.0f64, f64::max);
        let mut setup = base_setup.clone();
        setup.params.n_spins = n_audit;
        setup.kappa = kappa_audit;
        setup.samples = 2;
        if !setup.open_system() {
            setup.initial = crate::config::InitialSpec::Thermal { nbar: 0.0, spin_excitations: 0 };
        }
        convergence_audit(
            ctx,
            base_setup.audit,
            base_setup.fock_cutoff,
            &format!("final populations, N={n_audit} kappa={kappa_audit}"),
            |cutoff| {
                let traj = setup.evolve_at(setup.velocity, cutoff, 2)?;
                let last = traj.density_states().expect("density route").last().unwrap();
                Ok(state_probabilities(last).probs().to_vec())
            },
        )
    }
}
