//! Final-state probabilities as a function of ramp velocity: one row per v,
//! parallel over sweep points with index-ordered reduction.

use rayon::prelude::*;

use super::{convergence_audit, prob_headers, sample_rows, Experiment, PulseSetup, RunContext};
use crate::config::log_grid;
use crate::report::{fmt_g, CsvBuffer};
use crate::CliResult;

pub struct Sweep;

pub(super) struct SweepPoint {
    pub v: f64,
    pub final_probs: Vec<f64>,
    pub final_entropy: f64,
    pub peak_entropy: f64,
}

pub(super) fn sweep_points(
    setup: &PulseSetup,
    vs: &[f64],
    cutoff: usize,
) -> CliResult<Vec<SweepPoint>> {
    vs.par_iter()
        .map(|&v| {
            let traj = setup.evolve_at(v, cutoff, setup.samples)?;
            let rows = sample_rows(&traj);
            let last = rows.last().expect("samples >= 2");
            let peak = rows.iter().map(|r| r.entropy).fold(f64::NEG_INFINITY, f64::max);
            Ok(SweepPoint {
                v,
                final_probs: last.probs.clone(),
                final_entropy: last.entropy,
                peak_entropy: peak,
            })
        })
        .collect()
}

pub(super) fn default_grid(setup: &PulseSetup, raw: &crate::config::RawConfig) -> CliResult<Vec<f64>> {
    let _ = setup;
    let v_start = raw.f64_or("v_start", (-7.0f64).exp2())?;
    let v_end = raw.f64_or("v_end", 2.0)?;
    let v_count = raw.usize_or("v_count", 48)?;
    log_grid(v_start, v_end, v_count)
}

impl Experiment for Sweep {
    fn name(&self) -> &'static str {
        "sweep"
    }

    fn about(&self) -> &'static str {
        "final-state probabilities over a log-spaced velocity grid"
    }

    fn run(&self, ctx: &mut RunContext) -> CliResult<()> {
        let setup = PulseSetup::from_config(ctx.raw)?;
        let vs = default_grid(&setup, ctx.raw)?;
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
        ctx.manifest
            .note("v_grid", format!("{} log-spaced points in [{}, {}]", vs.len(), vs[0], vs[vs.len() - 1]));

        let points =
            super::with_pool(setup.workers, || sweep_points(&setup, &vs, setup.fock_cutoff))??;

        let mut header: Vec<String> = vec!["log2_v".into()];
        header.extend(prob_headers(setup.params.n_spins));
        header.extend(["S_final".to_string(), "S_peak".to_string()]);
        let header_refs: Vec<&str> = header.iter().map(|s| s.as_str()).collect();
        let mut csv = CsvBuffer::new("final_states.csv", &header_refs);
        for p in &points {
            let mut fields = vec![fmt_g(p.v.log2())];
            fields.extend(p.final_probs.iter().map(|x| fmt_g(*x)));
            fields.push(fmt_g(p.final_entropy));
            fields.push(fmt_g(p.peak_entropy));
            csv.row(&fields);
        }
        ctx.emit_csv(csv)?;

        // audit a deterministic subset of sweep points: first, middle, last
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
                let pts = sweep_points(&setup, &subset, cutoff)?;
                Ok(pts.iter().flat_map(|p| p.final_probs.iter().copied()).collect())
            },
        )
    }
}
