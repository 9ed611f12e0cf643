//! The pipeline behind the command-line tool: build a state from a
//! [`RunConfig`], evolve it while recording diagnostics and snapshots, and
//! analyze a recorded series.

use crate::config::RunConfig;
use crate::diagnostics::{
    self, BlowupFit, Channel, DiagRow, DiagnosticsSeries, SingularityClass,
};
use crate::error::{Error, Result};
use crate::flow::{self, FlowState, RunOptions, StopCriteria, Termination};
use crate::grids::{self, OverlapState};
use crate::initial_data::{self, BowlProfile, FlowParams, Perturbation};
use crate::snapshot;
use std::path::Path;

/// Derived parameters plus the ready-to-run state (perturbation applied,
/// boundaries exchanged once).
pub struct BuiltRun {
    pub params: FlowParams,
    pub profile: BowlProfile,
    pub state: FlowState,
    /// Overlap mismatch right after construction; the baseline that runs are
    /// judged against.
    pub initial_mismatch: f64,
}

pub fn derive_from_config(cfg: &RunConfig) -> Result<FlowParams> {
    initial_data::derive_params(cfg.gamma, cfg.c, cfg.tau0, cfg.big_r1)
}

/// Build patches from the configuration, apply the configured perturbation,
/// and run one boundary exchange so both charts agree before stepping.
pub fn build_run(cfg: &RunConfig) -> Result<BuiltRun> {
    let params = derive_from_config(cfg)?;
    let profile = initial_data::integrate_bowl(&params, params.r1 / 2048.0)?;
    let (mut cart, mut cyl) =
        initial_data::build_patches(&params, &profile, cfg.nx, cfg.ny, cfg.nz, cfg.ntheta, cfg.z_max)?;
    match &cfg.perturbation {
        Perturbation::None => {}
        Perturbation::Near(p) => initial_data::apply_near(&mut cart, p)?,
        Perturbation::Far(p) => initial_data::apply_far(&mut cyl, p)?,
    }
    grids::exchange_boundaries(&mut cart, &mut cyl)?;
    let initial_mismatch = grids::measure_overlap_mismatch(&cart, &cyl, MISMATCH_PROBES);
    let state = FlowState::new(cart, cyl)?;
    Ok(BuiltRun {
        params,
        profile,
        state,
        initial_mismatch,
    })
}

pub const MISMATCH_PROBES: usize = 256;

pub fn stop_criteria(cfg: &RunConfig, params: &FlowParams) -> StopCriteria {
    StopCriteria {
        r_min_floor: cfg.r_min_floor.unwrap_or(1e-3 * params.r0),
        curvature_ceiling: cfg.curvature_ceiling,
        t_max: cfg.t_max,
        max_steps: cfg.max_steps,
    }
}

pub fn run_options(cfg: &RunConfig, params: &FlowParams, state: &FlowState) -> RunOptions {
    // Far-end rows start below the enveloping cylinder; their law carries the
    // squared relative deficit so they vanish at the true time T.
    let r_end = state.cyl.r(state.cyl.nz() - 1, 0);
    let deficit = (r_end / params.r0).min(1.0);
    RunOptions {
        safety: cfg.safety,
        overlap: OverlapState::default(),
        shrink_factor: 0.9,
        r_singular_floor: flow::DEFAULT_R_SINGULAR_FLOOR,
        hook_stride: cfg.series_stride.max(1),
        far_row_coef: deficit * deficit,
    }
}

/// Assemble one diagnostics row from the current state.
///
/// For far-class runs the angular mode probe sits on the fixed circle at the
/// perturbation midpoint, the pinch location for an even mode; tracking the
/// instantaneous minimum instead would hop between rows and put jumps into
/// the mode history. `z_neck` and `r_min` always report the global scan.
pub fn diag_row(state: &FlowState, dt: f64, mode_max: usize, pert: &Perturbation) -> Result<DiagRow> {
    let (tip_a, _) = diagnostics::tip_curvature(&state.cart);
    let (z_neck, r_min) = diagnostics::neck_scan(&state.cyl);
    let probe_z = match pert {
        Perturbation::Far(p) => 0.5 * (p.z_a + p.z_b),
        _ => z_neck,
    };
    let amps = diagnostics::mode_amplitudes(&state.cyl, probe_z, mode_max)?;
    let mut modes = Vec::with_capacity(2 * mode_max + 1);
    modes.push(amps[0].0);
    for m in 1..=mode_max {
        modes.push(amps[m].0);
        modes.push(amps[m].1);
    }
    let mismatch = grids::measure_overlap_mismatch(&state.cart, &state.cyl, MISMATCH_PROBES);
    Ok(DiagRow {
        t: state.t(),
        dt,
        tip_a,
        r_min,
        z_neck,
        mismatch,
        modes,
    })
}

/// Everything a finished run leaves behind.
pub struct RunArtifacts {
    pub params: FlowParams,
    pub state: FlowState,
    pub series: DiagnosticsSeries,
    pub termination: Termination,
    pub steps: u64,
    pub initial_mismatch: f64,
}

/// Run the configured pipeline in memory; `sink` (when given) receives
/// snapshots at the configured stride.
pub fn run_in_memory(cfg: &RunConfig, out_dir: Option<&Path>) -> Result<RunArtifacts> {
    let built = build_run(cfg)?;
    let params = built.params;
    let mut state = built.state;
    let stop = stop_criteria(cfg, &params);
    let opts = run_options(cfg, &params, &state);
    let mut series = DiagnosticsSeries::new(cfg.mode_max);
    let mut hook_err: Option<Error> = None;
    let mut snapshot_index = 1usize;

    if let Some(dir) = out_dir {
        snapshot::write_snapshot(&state, dir, 0)?;
    }

    let outcome = flow::run(&mut state, &stop, &opts, |s, report| {
        if hook_err.is_some() {
            return;
        }
        match diag_row(s, report.dt, cfg.mode_max, &cfg.perturbation) {
            Ok(row) => {
                if let Err(e) = series.push(row) {
                    hook_err = Some(e);
                }
            }
            Err(e) => hook_err = Some(e),
        }
        if let Some(dir) = out_dir {
            if cfg.snapshot_stride > 0 && s.step_count > 0 && s.step_count % cfg.snapshot_stride == 0 {
                if let Err(e) = snapshot::write_snapshot(s, dir, snapshot_index) {
                    hook_err = Some(e);
                } else {
                    snapshot_index += 1;
                }
            }
        }
    });
    if let Some(e) = hook_err {
        return Err(e);
    }

    // Final row, unless the loop already recorded this exact time.
    let last_t = series.rows().last().map(|r| r.t);
    if last_t != Some(state.t()) {
        let row = diag_row(&state, state.dt_last, cfg.mode_max, &cfg.perturbation)?;
        series.push(row)?;
    }

    Ok(RunArtifacts {
        params,
        state,
        series,
        termination: outcome.termination,
        steps: outcome.steps,
        initial_mismatch: built.initial_mismatch,
    })
}

/// Run the pipeline and write snapshots plus `series.csv` under `dir`.
pub fn run_to_dir(cfg: &RunConfig, dir: &Path) -> Result<RunArtifacts> {
    let artifacts = run_in_memory(cfg, Some(dir))?;
    snapshot::write_series(&artifacts.series, dir)?;
    snapshot::write_snapshot(&artifacts.state, dir, usize::MAX)?;
    Ok(artifacts)
}

/// Channel selection for analysis: near-class runs blow up at the tip,
/// far-class runs pinch at the neck, unperturbed runs collapse with the
/// enveloping cylinder (neck channel).
pub fn analysis_channel(pert: &Perturbation) -> Channel {
    match pert {
        Perturbation::Near(_) => Channel::Tip,
        _ => Channel::Neck,
    }
}

pub struct Analysis {
    pub channel: Channel,
    pub fit: BlowupFit,
    pub class: SingularityClass,
}

/// Fit and classify a recorded series using the configured channel and the
/// analytic vanishing time as the hint.
pub fn analyze_series(cfg: &RunConfig, series: &DiagnosticsSeries) -> Result<Analysis> {
    let params = derive_from_config(cfg)?;
    let channel = analysis_channel(&cfg.perturbation);
    let fit = diagnostics::fit_blowup(series, channel, params.t_vanish, None)?;
    let class = diagnostics::classify(series, &fit, channel);
    Ok(Analysis { channel, fit, class })
}
