//! Single-pulse trajectory: per-time probabilities, entropy, field
//! occupation, and norm over one up-down ramp.

use super::{convergence_audit, prob_headers, sample_rows, Experiment, PulseSetup, RunContext};
use crate::report::{fmt_g, CsvBuffer};
use crate::CliResult;

pub struct Ramp;

impl Experiment for Ramp {
    fn name(&self) -> &'static str {
        "ramp"
    }

    fn about(&self) -> &'static str {
        "evolve one pulse and write the sampled trajectory"
    }

    fn run(&self, ctx: &mut RunContext) -> CliResult<()> {
        let setup = PulseSetup::from_config(ctx.raw)?;
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

        let run_at = |cutoff: usize| -> CliResult<Vec<super::SampleRow>> {
            let traj = setup.evolve_at(setup.velocity, cutoff, setup.samples)?;
            Ok(sample_rows(&traj))
        };

        let rows = super::with_pool(setup.workers, || run_at(setup.fock_cutoff))??;

        let mut header: Vec<String> = vec!["t".into(), "lambda".into()];
        header.extend(prob_headers(setup.params.n_spins));
        header.extend(["S_N".to_string(), "n_field".to_string(), "norm".to_string()]);
        let header_refs: Vec<&str> = header.iter().map(|s| s.as_str()).collect();
        let mut csv = CsvBuffer::new("trajectory.csv", &header_refs);
        for row in &rows {
            let mut fields = vec![fmt_g(row.time), fmt_g(row.lambda)];
            fields.extend(row.probs.iter().map(|p| fmt_g(*p)));
            fields.push(fmt_g(row.entropy));
            fields.push(fmt_g(row.occupation));
            fields.push(fmt_g(row.norm));
            csv.row(&fields);
        }
        ctx.emit_csv(csv)?;

        // every probability reported in the CSV is compared at cutoff + 10
        convergence_audit(
            ctx,
            setup.audit,
            setup.fock_cutoff,
            "all trajectory probabilities",
            |cutoff| {
                let rows = run_at(cutoff)?;
                Ok(rows.iter().flat_map(|r| r.probs.iter().copied()).collect())
            },
        )
    }
}
