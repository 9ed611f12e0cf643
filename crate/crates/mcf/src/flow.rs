//! The evolution itself: quasilinear right-hand sides on both charts,
//! CFL-limited forward Euler, the far-end boundary condition, and the run
//! loop that orchestrates exchange and regridding each step.

use crate::error::{Error, Result};
use crate::grids::{
    self, CartesianPatch, CylindricalPatch, ExchangeReport, OverlapState, PERIMETER_CLEARANCE_CELLS,
};
use crate::stencils::{cart_derivs, cyl_derivs};

/// Radius below which the cylindrical right-hand side refuses to evaluate.
pub const DEFAULT_R_SINGULAR_FLOOR: f64 = 1e-8;

/// The coupled pair of patches plus step bookkeeping. Both patches carry the
/// same time at every step boundary.
#[derive(Debug, Clone)]
pub struct FlowState {
    pub cart: CartesianPatch,
    pub cyl: CylindricalPatch,
    pub step_count: u64,
    pub dt_last: f64,
}

impl FlowState {
    pub fn new(cart: CartesianPatch, cyl: CylindricalPatch) -> Result<Self> {
        if cart.t() != cyl.t() {
            return Err(Error::Parameter(format!(
                "patches out of sync: cartesian t = {:e}, cylindrical t = {:e}",
                cart.t(),
                cyl.t()
            )));
        }
        Ok(FlowState {
            cart,
            cyl,
            step_count: 0,
            dt_last: 0.0,
        })
    }

    pub fn t(&self) -> f64 {
        self.cart.t()
    }
}

/// When a run stops. All members must be positive; use infinity to disable.
#[derive(Debug, Clone, Copy)]
pub struct StopCriteria {
    pub r_min_floor: f64,
    pub curvature_ceiling: f64,
    pub t_max: f64,
    pub max_steps: u64,
}

impl StopCriteria {
    pub fn validate(&self) -> Result<()> {
        if !(self.r_min_floor > 0.0) || !(self.curvature_ceiling > 0.0) || !(self.t_max > 0.0) {
            return Err(Error::Parameter(format!(
                "stop criteria must be positive: r_min_floor = {}, curvature_ceiling = {}, t_max = {}",
                self.r_min_floor, self.curvature_ceiling, self.t_max
            )));
        }
        Ok(())
    }
}

/// Knobs of the stepper that are not stop criteria.
#[derive(Debug, Clone, Copy)]
pub struct RunOptions {
    pub safety: f64,
    /// Regrid-trigger bands around the overlap center.
    pub overlap: OverlapState,
    /// Factor applied to the Cartesian side when the perimeter crowds the
    /// cylinder's near end.
    pub shrink_factor: f64,
    pub r_singular_floor: f64,
    /// Steps between diagnostic hook invocations.
    pub hook_stride: u64,
    /// Far-end row law `dr/dt = -far_row_coef / r`.
    ///
    /// With coefficient `d^2`, `d = r(z_max, 0) / r0`, the row follows the
    /// enveloping cylinder with a fixed relative deficit, `d sqrt(r0^2 - 2t)`,
    /// vanishing at the true time `T = r0^2 / 2`. The plain pointwise law
    /// (coefficient 1) run from `r < r0` would hit zero at `r^2/2 < T`, an
    /// artificial horizon that can masquerade as an early far-end pinch.
    pub far_row_coef: f64,
}

impl Default for RunOptions {
    fn default() -> Self {
        RunOptions {
            safety: 0.1,
            overlap: OverlapState::default(),
            shrink_factor: 0.9,
            r_singular_floor: DEFAULT_R_SINGULAR_FLOOR,
            hook_stride: 10,
            far_row_coef: 1.0,
        }
    }
}

/// Why [`run`] returned.
#[derive(Debug)]
pub enum Termination {
    RMinFloor,
    CurvatureCeiling,
    TMax,
    MaxSteps,
    Failed(Error),
}

impl Termination {
    pub fn name(&self) -> &'static str {
        match self {
            Termination::RMinFloor => "r_min_floor",
            Termination::CurvatureCeiling => "curvature_ceiling",
            Termination::TMax => "t_max",
            Termination::MaxSteps => "max_steps",
            Termination::Failed(_) => "error",
        }
    }
}

/// What one step did, for hooks and the run loop.
#[derive(Debug, Clone, Copy)]
pub struct StepReport {
    pub dt: f64,
    pub r_min: f64,
    pub regridded: bool,
    pub exchange: ExchangeReport,
}

/// Radius evolution rate at an interior cylindrical node.
///
/// `(1 + r_z^2) r_tt + (r^2 + r_t^2) r_zz - 2 r_t r_z r_zt - r_t^2 / r`
/// over `r_t^2 + r^2 (1 + r_z^2)`, minus `1/r`.
pub fn rhs_cylindrical(p: &CylindricalPatch, i: usize, k: usize, r_floor: f64) -> Result<f64> {
    let r = p.r(i, k % p.ntheta());
    if r <= r_floor {
        return Err(Error::SingularityReached { r_min: r, t: p.t() });
    }
    let d = cyl_derivs(p, i, k)?;
    let num = (1.0 + d.r_z * d.r_z) * d.r_theta_theta + (r * r + d.r_theta * d.r_theta) * d.r_zz
        - 2.0 * d.r_theta * d.r_z * d.r_z_theta
        - d.r_theta * d.r_theta / r;
    let den = d.r_theta * d.r_theta + r * r * (1.0 + d.r_z * d.r_z);
    Ok(num / den - 1.0 / r)
}

/// Height evolution rate at an interior Cartesian node.
///
/// `((1 + z_y^2) z_xx + (1 + z_x^2) z_yy - 2 z_x z_y z_xy)` over
/// `(1 + z_x^2 + z_y^2)`.
pub fn rhs_cartesian(p: &CartesianPatch, i: usize, k: usize) -> Result<f64> {
    let d = cart_derivs(p, i, k)?;
    let num = (1.0 + d.z_y * d.z_y) * d.z_xx + (1.0 + d.z_x * d.z_x) * d.z_yy
        - 2.0 * d.z_x * d.z_y * d.z_xy;
    let den = 1.0 + d.z_x * d.z_x + d.z_y * d.z_y;
    Ok(num / den)
}

/// CFL-limited time step:
/// `safety * min(dx^2, dy^2, dz^2, (r_min dtheta)^2)`.
pub fn cfl_dt(state: &FlowState, safety: f64) -> Result<f64> {
    if !(safety > 0.0 && safety <= 1.0) {
        return Err(Error::Parameter(format!("safety must lie in (0, 1], got {safety}")));
    }
    let r_min = state.cyl.r_min();
    if !(r_min > 0.0) {
        return Err(Error::SingularityReached {
            r_min,
            t: state.t(),
        });
    }
    let dx2 = state.cart.dx() * state.cart.dx();
    let dy2 = state.cart.dy() * state.cart.dy();
    let dz2 = state.cyl.dz() * state.cyl.dz();
    let ang = r_min * state.cyl.dtheta();
    Ok(safety * dx2.min(dy2).min(dz2).min(ang * ang))
}

/// Advance both patches by one Euler step, refresh the exchanged boundaries,
/// and regrid if the overlap drifted out of its bands.
///
/// The far-end row `z_max` evolves by the pointwise cylinder law with the
/// deficit coefficient from [`RunOptions`]: the surface is asymptotically a
/// shrinking round cylinder there, so spatial terms are negligible by
/// construction. `dt_cap` bounds the step (used to land exactly on a time
/// horizon).
pub fn step(state: &mut FlowState, opts: &RunOptions, dt_cap: f64) -> Result<StepReport> {
    let dt = cfl_dt(state, opts.safety)?.min(dt_cap);
    let t_new = state.t() + dt;

    // Cylindrical interior plus the far-end ODE row; the z_min row is
    // refreshed by the exchange below.
    let nz = state.cyl.nz();
    let nth = state.cyl.ntheta();
    let mut new_r = state.cyl.values().to_vec();
    for i in 1..nz - 1 {
        for k in 0..nth {
            let v = state.cyl.r(i, k) + dt * rhs_cylindrical(&state.cyl, i, k, opts.r_singular_floor)?;
            if !v.is_finite() {
                return Err(Error::NumericalBlowup {
                    patch: "cylindrical",
                    i,
                    k,
                    t: t_new,
                });
            }
            new_r[i * nth + k] = v;
        }
    }
    for k in 0..nth {
        let r = state.cyl.r(nz - 1, k);
        if r <= opts.r_singular_floor {
            return Err(Error::SingularityReached { r_min: r, t: state.t() });
        }
        new_r[(nz - 1) * nth + k] = r - dt * opts.far_row_coef / r;
    }

    let nx = state.cart.nx();
    let ny = state.cart.ny();
    let mut new_z = state.cart.values().to_vec();
    for i in 1..nx - 1 {
        for k in 1..ny - 1 {
            let v = state.cart.z(i, k) + dt * rhs_cartesian(&state.cart, i, k)?;
            if !v.is_finite() {
                return Err(Error::NumericalBlowup {
                    patch: "cartesian",
                    i,
                    k,
                    t: t_new,
                });
            }
            new_z[i * ny + k] = v;
        }
    }

    state.cyl.values_mut().copy_from_slice(&new_r);
    state.cart.values_mut().copy_from_slice(&new_z);
    state.cyl.set_t(t_new);
    state.cart.set_t(t_new);

    let mut exchange = grids::exchange_boundaries(&mut state.cart, &mut state.cyl)?;
    let mut regridded = false;
    if needs_regrid(&exchange, state, &opts.overlap) {
        let (new_side, new_z_min) = regrid_target(state, opts)?;
        if new_side != state.cart.side() || new_z_min != state.cyl.z_min() {
            let (cart, cyl) = grids::regrid(&state.cart, &state.cyl, new_side, new_z_min)?;
            state.cart = cart;
            state.cyl = cyl;
            exchange = grids::exchange_boundaries(&mut state.cart, &mut state.cyl)?;
            regridded = true;
        }
    }

    state.step_count += 1;
    state.dt_last = dt;
    Ok(StepReport {
        dt,
        r_min: state.cyl.r_min(),
        regridded,
        exchange,
    })
}

fn needs_regrid(report: &ExchangeReport, state: &FlowState, overlap: &OverlapState) -> bool {
    let half = 0.5 * state.cart.side();
    let lo = (0.5 - overlap.margin_fraction) * half;
    let hi = (0.5 + overlap.margin_fraction) * half;
    report.min_circle_radius < lo
        || report.max_circle_radius > hi
        || report.min_perimeter_clearance < PERIMETER_CLEARANCE_CELLS
        || half > 0.95 * grids::branch_reach(&state.cyl)
}

/// Pick the post-regrid domain: keep the `z_min` circle at half the square's
/// inradius and the square's inradius inside the radial reach of the tube's
/// tip-side branch, shrinking the square when the cylinder cannot anchor the
/// overlap that far out.
fn regrid_target(state: &FlowState, opts: &RunOptions) -> Result<(f64, f64)> {
    let cyl = &state.cyl;
    // The perimeter can only be anchored below the branch reach; keep a 20%
    // margin so edge midpoints stay rooted between regrids.
    let reach_cap = 1.6 * grids::branch_reach(cyl);
    // The circle cannot be placed below the radius it already sits at: there
    // is no surface data on the tip side of the current z_min. The square
    // may need to grow to keep that radius inside the trigger band.
    let row0_max = (0..cyl.ntheta()).map(|k| cyl.r(0, k)).fold(0.0f64, f64::max);
    let side_floor = 1.02 * row0_max / ((0.5 + opts.overlap.margin_fraction) * 0.5);
    let mut side = state.cart.side().max(side_floor).min(reach_cap);
    let probes = [0usize, cyl.ntheta() / 4, cyl.ntheta() / 2, 3 * cyl.ntheta() / 4];
    for _ in 0..60 {
        let target_radius = (0.25 * side).max(1.02 * row0_max);
        if target_radius <= (0.5 + opts.overlap.margin_fraction) * 0.5 * side {
            let mut acc = 0.0;
            let mut found = 0usize;
            for &k in &probes {
                if let Ok(z_star) = grids::axial_root(cyl, cyl.theta(k), target_radius) {
                    acc += z_star;
                    found += 1;
                }
            }
            if found == probes.len() {
                let new_z_min = acc / found as f64;
                if new_z_min < cyl.z_max() - 8.0 * cyl.dz() {
                    return Ok((side, new_z_min));
                }
            }
        }
        side *= opts.shrink_factor;
    }
    Err(Error::Config(format!(
        "regrid target not found: the cylindrical graph cannot place the overlap circle \
         (side would shrink below {side:e}; domain exhausted near z_max = {:e})",
        cyl.z_max()
    )))
}

/// Outcome of [`run`].
#[derive(Debug)]
pub struct RunOutcome {
    pub termination: Termination,
    pub steps: u64,
    pub t_final: f64,
    pub r_min_final: f64,
}

/// Iterate [`step`] until a stop criterion fires. The hook runs before the
/// first step and every `hook_stride` steps after (plus once at the end),
/// receiving the state and the last report. The curvature ceiling is checked
/// at hook cadence; the radius floor and time/step limits every step.
pub fn run(
    state: &mut FlowState,
    stop: &StopCriteria,
    opts: &RunOptions,
    mut hook: impl FnMut(&FlowState, &StepReport),
) -> RunOutcome {
    let outcome = |term: Termination, state: &FlowState| RunOutcome {
        termination: term,
        steps: state.step_count,
        t_final: state.t(),
        r_min_final: state.cyl.r_min(),
    };
    if let Err(e) = stop.validate() {
        return outcome(Termination::Failed(e), state);
    }

    let initial_report = StepReport {
        dt: 0.0,
        r_min: state.cyl.r_min(),
        regridded: false,
        exchange: ExchangeReport {
            min_circle_radius: f64::NAN,
            max_circle_radius: f64::NAN,
            min_perimeter_clearance: f64::NAN,
            fallback_nodes: 0,
        },
    };
    hook(state, &initial_report);

    let stride = opts.hook_stride.max(1);
    loop {
        if state.step_count >= stop.max_steps {
            return outcome(Termination::MaxSteps, state);
        }
        let r_min = state.cyl.r_min();
        if r_min <= stop.r_min_floor {
            return outcome(Termination::RMinFloor, state);
        }
        if state.t() >= stop.t_max * (1.0 - 1e-14) {
            return outcome(Termination::TMax, state);
        }

        let dt_cap = stop.t_max - state.t();
        let report = match step(state, opts, dt_cap) {
            Ok(r) => r,
            Err(e) => return outcome(Termination::Failed(e), state),
        };

        let at_stride = state.step_count % stride == 0;
        if at_stride {
            hook(state, &report);
            if stop.curvature_ceiling.is_finite() {
                let (tip, _) = crate::diagnostics::tip_curvature(&state.cart);
                if tip >= stop.curvature_ceiling {
                    return outcome(Termination::CurvatureCeiling, state);
                }
            }
        }
    }
}
