//! Entropy over the full (velocity, time) grid: the raw data behind the
//! coherence-window maps.

use rayon::prelude::*;

use super::{convergence_audit, sample_rows, Experiment, PulseSetup, RunContext};
use crate::report::{fmt_g, CsvBuffer};
use crate::CliResult;

pub struct EntropyMap;

impl Experiment for EntropyMap {
    fn name(&self) -> &'static str {
        "entropy-map"
    }

    fn about(&self) -> &'static str {
        "von Neumann entropy on the full (log2 v, t) grid"
    }

    fn run(&self, ctx: &mut RunContext) -> CliResult<()> {
        let setup = PulseSetup::from_config(ctx.raw)?;
        let vs = super::sweep::default_grid(&setup, ctx.raw)?;
        let basis = setup.basis(setup.fock_cutoff)?;
        ctx.manifest.note(
            "basis",
            format!(
                "n_spins={} fock_cutoff={} dim={}",
                setup.params.n_spins,
                setup.fock_cutoff,
                basis.dim()
            ),
        );
        ctx.manifest.note("integrator", setup.describe_integrator());

        let traces: Vec<Vec<(f64, f64)>> = super::with_pool(setup.workers, || {
            vs.par_iter()
                .map(|&v| {
                    let traj = setup.evolve_at(v, setup.fock_cutoff, setup.samples)?;
                    Ok(sample_rows(&traj).iter().map(|r| (r.time, r.entropy)).collect())
                })
                .collect::<CliResult<_>>()
        })??;

        let mut csv = CsvBuffer::new("entropy_map.csv", &["log2_v", "t", "S_N"]);
        for (v, trace) in vs.iter().zip(&traces) {
            for (t, s) in trace {
                csv.row(&[fmt_g(v.log2()), fmt_g(*t), fmt_g(*s)]);
            }
        }
        ctx.emit_csv(csv)?;

        let subset: Vec<f64> = [0, vs.len() / 2, vs.len() - 1]
            .iter()
            .map(|&i| vs[i])
            .collect();
        convergence_audit(
            ctx,
            setup.audit,
            setup.fock_cutoff,
            "final probabilities at first/middle/last v",
            |cutoff| {
                let pts = super::sweep::sweep_points(&setup, &subset, cutoff)?;
                Ok(pts.iter().flat_map(|p| p.final_probs.iter().copied()).collect())
            },
        )
    }
}
