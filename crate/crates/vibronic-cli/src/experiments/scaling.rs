//! Coherence-window scaling with aggregate size: the lower velocity edge
//! v_min per N and the fitted log-log slope.
//!
//! The window curve per N is the final excited weight `1 - P(GS)` over the
//! velocity grid. Its rising edge marks the breakdown of adiabaticity (the
//! minimal-gap relation behind the 1/N scaling) and its falling edge is the
//! two-passage drop-off, which does not move with N. Trajectory-peak entropy
//! has no lower edge at all (slow ramps pass through a strongly entangled
//! apex), so it cannot express this window.

use super::{convergence_audit, Experiment, PulseSetup, RunContext};
use crate::report::{fmt_g, CsvBuffer};
use crate::{CliError, CliResult};
use vibronic::measures::{estimate_vmax, estimate_vmin};

pub struct Scaling;

/// Fock cutoff that holds the audit at the slow edge of the window for a
/// given aggregate size; the configured cutoff acts as a floor.
pub(super) fn cutoff_for(base: usize, n_spins: usize) -> usize {
    base.max(4 * n_spins + 8)
}

fn fit_log_slope(points: &[(f64, f64)]) -> f64 {
    let xs: Vec<f64> = points.iter().map(|(n, _)| n.ln()).collect();
    let ys: Vec<f64> = points.iter().map(|(_, v)| v.ln()).collect();
    let xm = xs.iter().sum::<f64>() / xs.len() as f64;
    let ym = ys.iter().sum::<f64>() / ys.len() as f64;
    let cov: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - xm) * (y - ym)).sum();
    let var: f64 = xs.iter().map(|x| (x - xm) * (x - xm)).sum();
    cov / var
}

impl Experiment for Scaling {
    fn name(&self) -> &'static str {
        "scaling"
    }

    fn about(&self) -> &'static str {
        "coherence-window lower edge v_min versus aggregate size N"
    }

    fn run(&self, ctx: &mut RunContext) -> CliResult<()> {
        let base_setup = PulseSetup::from_config(ctx.raw)?;
        let n_list = ctx.raw.usize_list_or("n_list", &[3, 5, 9, 15])?;
        if n_list.is_empty() {
            return Err(CliError::Config("n_list must not be empty".into()));
        }
        let threshold = ctx.raw.f64_or("vmin_threshold", 0.5)?;
        let vs = super::sweep::default_grid(&base_setup, ctx.raw)?;
        ctx.manifest.note("integrator", base_setup.describe_integrator());
        ctx.manifest.note(
            "window_curve",
            "final excited weight 1 - P(GS) per velocity; threshold crossing in log v",
        );

        let mut per_n: Vec<(usize, Option<f64>)> = Vec::new();
        let mut audit_target: Option<(usize, usize)> = None;
        for &n in &n_list {
            let mut setup = base_setup.clone();
            setup.params.n_spins = n;
            let cutoff = cutoff_for(base_setup.fock_cutoff, n);
            audit_target = Some((n, cutoff));
            ctx.manifest.note(
                &format!("basis_n{n}"),
                format!("fock_cutoff={cutoff} dim={}", setup.basis(cutoff)?.dim()),
            );
            let points = super::with_pool(setup.workers, || {
                super::sweep::sweep_points(&setup, &vs, cutoff)
            })??;
            let curve: Vec<(f64, f64)> = points
                .iter()
                .map(|p| (p.v, 1.0 - p.final_probs[0]))
                .collect();
            match estimate_vmin(&curve, threshold) {
                Ok(vmin) => {
                    if let Ok(vmax) = estimate_vmax(&curve, threshold) {
                        ctx.manifest.note(&format!("vmax_n{n}"), fmt_g(vmax));
                    }
                    per_n.push((n, Some(vmin)));
                }
                Err(_) => {
                    ctx.manifest.note(
                        &format!("warning_n{n}"),
                        "coherence window not found; excluded from fit",
                    );
                    per_n.push((n, None));
                }
            }
        }

        let fit_points: Vec<(f64, f64)> = per_n
            .iter()
            .filter_map(|&(n, vmin)| vmin.map(|v| (n as f64, v)))
            .collect();
        if fit_points.len() < 2 {
            return Err(CliError::Config(
                "coherence window found for fewer than two N values; no slope to fit".into(),
            ));
        }
        let slope = fit_log_slope(&fit_points);
        ctx.manifest.note("fitted_slope", fmt_g(slope));

        let mut csv = CsvBuffer::new("vmin_vs_n.csv", &["n", "v_min", "slope"]);
        for &(n, vmin) in &per_n {
            if let Some(vmin) = vmin {
                csv.row(&[n.to_string(), fmt_g(vmin), fmt_g(slope)]);
            }
        }
        ctx.emit_csv(csv)?;

        // audit the heaviest case: largest N at the slowest velocity
        let (n_audit, cutoff_audit) = audit_target.expect("n_list non-empty");
        let mut setup = base_setup.clone();
        setup.params.n_spins = n_audit;
        let v_slowest = vs[0];
        convergence_audit(
            ctx,
            base_setup.audit,
            cutoff_audit,
            &format!("final probabilities, N={n_audit} at v={v_slowest}"),
            |cutoff| {
                let pts = super::sweep::sweep_points(&setup, &[v_slowest], cutoff)?;
                Ok(pts[0].final_probs.clone())
            },
        )
    }
}
