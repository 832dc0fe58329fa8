//! Phase-space snapshot of the vibrational subsystem after (or during) a
//! pulse.

use super::{convergence_audit, sample_rows, Experiment, PulseSetup, RunContext};
use crate::report::{fmt_g, CsvBuffer};
use crate::{CliError, CliResult};
use vibronic::dynamics::StateSeries;
use vibronic::hilbert::Subsystem;
use vibronic::measures::{reduced_state, trim_field_state, wigner, AxisSpec};

pub struct WignerSnapshot;

impl Experiment for WignerSnapshot {
    fn name(&self) -> &'static str {
        "wigner"
    }

    fn about(&self) -> &'static str {
        "Wigner function of the reduced field state at a chosen time"
    }

    fn run(&self, ctx: &mut RunContext) -> CliResult<()> {
        let setup = PulseSetup::from_config(ctx.raw)?;
        let protocol = setup.protocol(setup.velocity)?;
        let snap_time = ctx.raw.f64_or("wigner_time", protocol.duration())?;
        if !(snap_time >= 0.0) {
            return Err(CliError::Config(format!("wigner_time {snap_time} must be >= 0")));
        }
        let tail_tol = ctx.raw.f64_or("wigner_tail_tol", 1e-12)?;
        let x_axis = AxisSpec {
            min: ctx.raw.f64_or("x_min", -4.0)?,
            max: ctx.raw.f64_or("x_max", 4.0)?,
            count: ctx.raw.usize_or("x_count", 101)?,
        };
        let p_axis = AxisSpec {
            min: ctx.raw.f64_or("p_min", -4.0)?,
            max: ctx.raw.f64_or("p_max", 4.0)?,
            count: ctx.raw.usize_or("p_count", 101)?,
        };
        ctx.manifest.note("integrator", setup.describe_integrator());
        ctx.manifest.note(
            "basis",
            format!(
                "n_spins={} fock_cutoff={} dim={}",
                setup.params.n_spins,
                setup.fock_cutoff,
                setup.basis(setup.fock_cutoff)?.dim()
            ),
        );

        let field_state_at = |cutoff: usize| -> CliResult<_> {
            // a t = 0 snapshot still propagates nothing: the first sample is
            // the initial state itself
            let times = if snap_time == 0.0 {
                vec![0.0, setup.protocol(setup.velocity)?.duration().max(1e-6)]
            } else {
                vec![0.0, snap_time]
            };
            let traj = setup.evolve_at_times(setup.velocity, cutoff, &times)?;
            let idx = if snap_time == 0.0 { 0 } else { traj.len() - 1 };
            let rho_field = match &traj.states {
                StateSeries::Pure(states) => reduced_state(&states[idx], Subsystem::Field),
                StateSeries::Density(states) => reduced_state(&states[idx], Subsystem::Field),
            };
            Ok((idx, traj, rho_field))
        };

        let (_, _, rho_field) = field_state_at(setup.fock_cutoff)?;
        let trimmed = trim_field_state(&rho_field, tail_tol);
        ctx.manifest.note(
            "field_state",
            format!(
                "t={snap_time} trimmed_fock_dim={} tail_tol={tail_tol}",
                trimmed.nrows()
            ),
        );

        let grid = super::with_pool(setup.workers, || wigner(&trimmed, &x_axis, &p_axis))??;
        ctx.manifest.note("wigner_min", fmt_g(grid.min_value()));
        ctx.manifest.note("wigner_mass", fmt_g(grid.quadrature_mass()));

        let mut csv = CsvBuffer::new("wigner_grid.csv", &["x", "p", "W"]);
        for (i, &x) in grid.x_axis.iter().enumerate() {
            for (j, &p) in grid.p_axis.iter().enumerate() {
                csv.row(&[fmt_g(x), fmt_g(p), fmt_g(grid.values[(i, j)])]);
            }
        }
        ctx.emit_csv(csv)?;

        convergence_audit(
            ctx,
            setup.audit,
            setup.fock_cutoff,
            "snapshot-state probabilities",
            |cutoff| {
                let (idx, traj, _) = field_state_at(cutoff)?;
                let rows = sample_rows(&traj);
                Ok(rows[idx].probs.clone())
            },
        )
    }
}
