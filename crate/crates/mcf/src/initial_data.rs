//! Construction of the initial surfaces.
//!
//! The unperturbed surface is a translating-soliton core joined at radius
//! `r1` to an analytic tail that approaches the enveloping cylinder of radius
//! `r0`. The core solves the graph ODE `z_rr = (1 + z_r^2)(beta - z_r / r)`
//! outward from the tip; the tail and its exact inverse are closed-form.
//! Perturbations come in two classes: a near-tip height distortion on the
//! Cartesian patch and a far sinusoidal radius distortion, with even angular
//! mode, on the cylindrical patch.

use crate::error::{Error, Result};
use crate::grids::{CartesianPatch, CylindricalPatch};

/// Construction constants and the quantities derived from them.
///
/// `gamma` selects the blowup family (only the supercritical range
/// `gamma > 1/2` is supported), `c` and `tau0` fix the matching scales, and
/// `big_r1` is the rescaled matching radius. Derived: the translation speed
/// `beta`, the core/tail matching radius `r1`, the enveloping-cylinder radius
/// `r0`, and the cylinder vanishing time `t_vanish` (with `t0 = 0`).
#[derive(Debug, Clone, Copy)]
pub struct FlowParams {
    pub gamma: f64,
    pub c: f64,
    pub tau0: f64,
    pub big_r1: f64,
    pub beta: f64,
    pub r1: f64,
    pub r0: f64,
    pub t_vanish: f64,
}

/// Populate a [`FlowParams`] from the construction constants.
///
/// `big_r1` of `None` selects the default `exp(gamma * tau0 / 2)`.
pub fn derive_params(gamma: f64, c: f64, tau0: f64, big_r1: Option<f64>) -> Result<FlowParams> {
    if !(gamma > 0.5) {
        return Err(Error::Unsupported(format!(
            "gamma = {gamma}: only the supercritical range gamma > 1/2 is supported \
             (the critical case gamma = 1/2 uses a different construction)"
        )));
    }
    if !(c > 0.0) {
        return Err(Error::Parameter(format!("c must be positive, got {c}")));
    }
    if !tau0.is_finite() {
        return Err(Error::Parameter(format!("tau0 must be finite, got {tau0}")));
    }
    let big_r1 = big_r1.unwrap_or_else(|| (gamma * tau0 / 2.0).exp());
    if !(big_r1 > 0.0) {
        return Err(Error::Parameter(format!("R1 must be positive, got {big_r1}")));
    }
    let beta = (gamma - 0.5) / c * 2f64.powf(-(gamma - 0.5)) * (-(gamma + 0.5) * tau0).exp();
    let r1 = big_r1 * (-(gamma + 0.5) * tau0).exp();
    let r0 = std::f64::consts::SQRT_2 * (-tau0 / 2.0).exp();
    let t_vanish = (-tau0).exp();
    if !(r1 < r0) {
        return Err(Error::Parameter(format!(
            "matching radius r1 = {r1:e} must lie inside the enveloping cylinder r0 = {r0:e}; \
             lower R1 or raise tau0"
        )));
    }
    Ok(FlowParams {
        gamma,
        c,
        tau0,
        big_r1,
        beta,
        r1,
        r0,
        t_vanish,
    })
}

impl FlowParams {
    /// Side of the Cartesian tip patch.
    pub fn cart_side(&self) -> f64 {
        10.0 * self.r1
    }
    /// `2 exp(-tau0)`, the squared enveloping-cylinder radius.
    fn two_e(&self) -> f64 {
        2.0 * (-self.tau0).exp()
    }
}

/// Tabulated solution of the soliton core ODE on `[0, r1]`.
#[derive(Debug, Clone)]
pub struct BowlProfile {
    dr: f64,
    z: Vec<f64>,
    slope: Vec<f64>,
}

/// Integrate `z_rr = (1 + z_r^2)(beta - z_r / r)` outward from the tip with
/// `z(0) = z_r(0) = 0`, tabulating `z` and `z_r` every `dr_ode`.
///
/// The `r = 0` singular quotient is started from the series
/// `z = beta r^2 / 4 + beta^3 r^4 / 128`; classical fourth-order one-step
/// integration takes over after the first node.
pub fn integrate_bowl(params: &FlowParams, dr_ode: f64) -> Result<BowlProfile> {
    if !(dr_ode > 0.0) || dr_ode > params.r1 / 100.0 {
        return Err(Error::Parameter(format!(
            "bowl ODE step {dr_ode:e} must be positive and at most r1/100 = {:e}",
            params.r1 / 100.0
        )));
    }
    let beta = params.beta;
    let n = (params.r1 / dr_ode).ceil() as usize;
    let dr = params.r1 / n as f64;

    let series_z = |r: f64| beta * r * r / 4.0 + beta.powi(3) * r.powi(4) / 128.0;
    let series_p = |r: f64| beta * r / 2.0 + beta.powi(3) * r.powi(3) / 32.0;

    let mut z = Vec::with_capacity(n + 1);
    let mut slope = Vec::with_capacity(n + 1);
    z.push(0.0);
    slope.push(0.0);

    let rhs = |r: f64, p: f64| (1.0 + p * p) * (beta - p / r);
    let mut zi = series_z(dr);
    let mut pi = series_p(dr);
    z.push(zi);
    slope.push(pi);

    for j in 1..n {
        let r = j as f64 * dr;
        let k1z = pi;
        let k1p = rhs(r, pi);
        let k2z = pi + 0.5 * dr * k1p;
        let k2p = rhs(r + 0.5 * dr, pi + 0.5 * dr * k1p);
        let k3z = pi + 0.5 * dr * k2p;
        let k3p = rhs(r + 0.5 * dr, pi + 0.5 * dr * k2p);
        let k4z = pi + dr * k3p;
        let k4p = rhs(r + dr, pi + dr * k3p);
        zi += dr / 6.0 * (k1z + 2.0 * k2z + 2.0 * k3z + k4z);
        let p_next = pi + dr / 6.0 * (k1p + 2.0 * k2p + 2.0 * k3p + k4p);
        if !(p_next >= pi) || !p_next.is_finite() {
            return Err(Error::Geometry(format!(
                "bowl integration step too large: slope no longer monotone at r = {:e}",
                r + dr
            )));
        }
        pi = p_next;
        z.push(zi);
        slope.push(pi);
    }

    Ok(BowlProfile { dr, z, slope })
}

impl BowlProfile {
    pub fn r_end(&self) -> f64 {
        self.dr * (self.z.len() - 1) as f64
    }
    /// Core height at the matching radius.
    pub fn z_end(&self) -> f64 {
        *self.z.last().unwrap()
    }
    pub fn slope_end(&self) -> f64 {
        *self.slope.last().unwrap()
    }

    /// Height at radius `r` in `[0, r1]`, cubic interpolation of the table.
    pub fn z_at(&self, r: f64) -> Result<f64> {
        interp_cubic(&self.z, self.dr, r)
    }
    /// Slope at radius `r` in `[0, r1]`.
    pub fn slope_at(&self, r: f64) -> Result<f64> {
        interp_cubic(&self.slope, self.dr, r)
    }
}

/// Four-point Lagrange interpolation on a uniform table.
fn interp_cubic(table: &[f64], dr: f64, r: f64) -> Result<f64> {
    let n = table.len();
    let f = r / dr;
    if !(r >= 0.0) || f > (n - 1) as f64 + 1e-9 {
        return Err(Error::Domain {
            patch: "bowl profile",
            what: format!("radius {r:e} outside the tabulated range [0, {:e}]", dr * (n - 1) as f64),
        });
    }
    let j = (f.floor() as usize).min(n - 2);
    let j0 = j.saturating_sub(1).min(n - 4);
    let u = f - j0 as f64;
    let mut acc = 0.0;
    for m in 0..4 {
        let mut w = 1.0;
        for l in 0..4 {
            if l != m {
                w *= (u - l as f64) / (m as f64 - l as f64);
            }
        }
        acc += w * table[j0 + m];
    }
    Ok(acc)
}

/// Tail height at radius `r` in `[r1, r0)`, measured against the core height
/// `z_r1` at the matching radius.
pub fn tail_z(r: f64, params: &FlowParams, z_r1: f64) -> Result<f64> {
    if !(r >= params.r1) {
        return Err(Error::Domain {
            patch: "tail",
            what: format!("radius {r:e} below the matching radius r1 = {:e}", params.r1),
        });
    }
    if !(r < params.r0) {
        return Err(Error::Domain {
            patch: "tail",
            what: format!("radius {r:e} not inside the enveloping cylinder r0 = {:e}", params.r0),
        });
    }
    let e = 0.5 - params.gamma;
    let two_e = params.two_e();
    Ok(z_r1 + ((two_e - r * r).powf(e) - (two_e - params.r1 * params.r1).powf(e)) / params.c)
}

/// Tail slope `dz/dr` at radius `r` in `[r1, r0)`.
pub fn tail_slope(r: f64, params: &FlowParams) -> Result<f64> {
    if !(r >= params.r1 && r < params.r0) {
        return Err(Error::Domain {
            patch: "tail",
            what: format!("radius {r:e} outside [r1, r0) = [{:e}, {:e})", params.r1, params.r0),
        });
    }
    let two_e = params.two_e();
    Ok(2.0 * r * (params.gamma - 0.5) / params.c * (two_e - r * r).powf(-(params.gamma + 0.5)))
}

/// Exact inverse of [`tail_z`]: radius at height `z >= z_r1`.
pub fn tail_r(z: f64, params: &FlowParams, z_r1: f64) -> Result<f64> {
    if !(z >= z_r1) {
        return Err(Error::Domain {
            patch: "tail",
            what: format!("height {z:e} below the matching height {z_r1:e}"),
        });
    }
    let e = 0.5 - params.gamma;
    let two_e = params.two_e();
    let k = (two_e - params.r1 * params.r1).powf(e) + params.c * (z - z_r1);
    Ok((two_e - k.powf(1.0 / e)).sqrt())
}

/// Near-class perturbation: a height distortion supported on `r < r_m`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NearPerturbation {
    pub a0: f64,
    pub a1: f64,
    pub r_m: f64,
}

impl NearPerturbation {
    pub fn new(a0: f64, a1: f64, r_m: f64) -> Result<Self> {
        if !(r_m > 0.0) {
            return Err(Error::Parameter(format!("near support radius must be positive, got {r_m}")));
        }
        if !a0.is_finite() || !a1.is_finite() {
            return Err(Error::Parameter("near amplitudes must be finite".into()));
        }
        Ok(NearPerturbation { a0, a1, r_m })
    }
}

/// Far-class perturbation: a sinusoidal radius distortion on `(z_a, z_b)`
/// carrying angular mode `n`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FarPerturbation {
    pub a0: f64,
    pub z_a: f64,
    pub z_b: f64,
    pub n: u32,
}

impl FarPerturbation {
    pub fn new(a0: f64, z_a: f64, z_b: f64, n: u32) -> Result<Self> {
        if n % 2 != 0 || n == 0 {
            return Err(Error::Parameter(format!(
                "far mode n = {n} rejected: n must be even and positive; an odd mode moves the \
                 pinch off the axis r = 0, where the (z, theta) chart degenerates"
            )));
        }
        if !(a0 > 0.0 && a0 < 1.0) {
            return Err(Error::Parameter(format!(
                "far amplitude a0 = {a0} must lie in (0, 1) so the radius stays positive"
            )));
        }
        if !(z_a < z_b) {
            return Err(Error::Parameter(format!("far support needs z_a < z_b, got [{z_a}, {z_b}]")));
        }
        Ok(FarPerturbation { a0, z_a, z_b, n })
    }
}

/// Which perturbation, if any, a run applies to the built patches.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Perturbation {
    None,
    Near(NearPerturbation),
    Far(FarPerturbation),
}

/// Fraction of `r0` beyond which the Cartesian construction switches from
/// the tail formula to linear continuation along rays. The square's corners
/// (at radius `5 sqrt(2) r1`) can poke past `r0`, where the tail diverges;
/// those nodes only feed stencils next to the perimeter, which the exchange
/// overwrites every step.
pub const CORNER_CAP_FRACTION: f64 = 0.98;

/// Build the unperturbed patch pair.
///
/// The Cartesian patch is a square of side `10 r1`: core heights for
/// `r < r1`, tail heights for `r >= r1`, and the linear corner continuation
/// beyond `CORNER_CAP_FRACTION * r0`. The cylindrical patch carries the tail
/// radius, independent of `theta`. `z_min` defaults to the height at which
/// the tail radius equals `0.35 * (L/2)`; `z_max` defaults to the height at
/// which it equals `0.98 * r0`, or the override if given. The far-end row
/// evolves by the pointwise cylinder law, which vanishes at `r(z_max)^2 / 2`;
/// placing it at `0.98 r0` keeps that artificial horizon safely beyond the
/// pinch times the simulator is used to observe.
pub fn build_patches(
    params: &FlowParams,
    profile: &BowlProfile,
    nx: usize,
    ny: usize,
    nz: usize,
    ntheta: usize,
    z_max_override: Option<f64>,
) -> Result<(CartesianPatch, CylindricalPatch)> {
    let side = params.cart_side();
    let z_r1 = profile.z_end();
    let r_cap = CORNER_CAP_FRACTION * params.r0;
    if !(r_cap > params.r1) {
        return Err(Error::Config(format!(
            "corner cap {r_cap:e} inside the matching radius {:e}; construction impossible",
            params.r1
        )));
    }
    let z_cap = tail_z(r_cap, params, z_r1)?;
    let slope_cap = tail_slope(r_cap, params)?;

    let mut cart_err: Option<Error> = None;
    let cart = CartesianPatch::new(side, nx, ny, 0.0, |x, y| {
        let rho = x.hypot(y);
        let res = if rho < params.r1 {
            profile.z_at(rho)
        } else if rho <= r_cap {
            tail_z(rho, params, z_r1)
        } else {
            Ok(z_cap + slope_cap * (rho - r_cap))
        };
        match res {
            Ok(v) => v,
            Err(e) => {
                if cart_err.is_none() {
                    cart_err = Some(e);
                }
                f64::NAN
            }
        }
    });
    if let Some(e) = cart_err {
        return Err(e);
    }
    let cart = cart?;

    let z_min = tail_z(0.35 * (side / 2.0), params, z_r1)?;
    let z_max = match z_max_override {
        Some(v) => v,
        None => tail_z(0.98 * params.r0, params, z_r1)?,
    };
    if !(z_max > z_min) {
        return Err(Error::Config(format!(
            "cylindrical extent empty: z_min = {z_min:e}, z_max = {z_max:e}"
        )));
    }

    let mut cyl_err: Option<Error> = None;
    let cyl = CylindricalPatch::new(z_min, z_max, nz, ntheta, 0.0, |z, _| match tail_r(z, params, z_r1) {
        Ok(v) => v,
        Err(e) => {
            if cyl_err.is_none() {
                cyl_err = Some(e);
            }
            f64::NAN
        }
    });
    if let Some(e) = cyl_err {
        return Err(e);
    }
    Ok((cart, cyl?))
}

/// Apply a near-class distortion: `z += a0 (1 + a1 x y)(r^2 - r_m^2)` on
/// nodes with `r < r_m`; all other nodes untouched.
pub fn apply_near(cart: &mut CartesianPatch, p: &NearPerturbation) -> Result<()> {
    if !(p.r_m < 0.5 * cart.side()) {
        return Err(Error::Parameter(format!(
            "near support radius {:e} must be inside the half-side {:e}",
            p.r_m,
            0.5 * cart.side()
        )));
    }
    for i in 0..cart.nx() {
        for k in 0..cart.ny() {
            let x = cart.x(i);
            let y = cart.y(k);
            let r2 = x * x + y * y;
            if r2 < p.r_m * p.r_m {
                let v = cart.z(i, k) + p.a0 * (1.0 + p.a1 * x * y) * (r2 - p.r_m * p.r_m);
                cart.set_z(i, k, v);
            }
        }
    }
    Ok(())
}

/// Apply a far-class distortion: `r *= 1 - a0 F^2` with
/// `F = (1 + cos(n theta)/4) sin(pi (z - z_b)/(z_a - z_b))` on rows with
/// `z_a < z < z_b`; all other rows untouched. The result must stay positive.
pub fn apply_far(cyl: &mut CylindricalPatch, p: &FarPerturbation) -> Result<()> {
    if !(p.z_a > cyl.z_min() && p.z_b < cyl.z_max()) {
        return Err(Error::Parameter(format!(
            "far support [{:e}, {:e}] must lie inside the axial extent ({:e}, {:e})",
            p.z_a,
            p.z_b,
            cyl.z_min(),
            cyl.z_max()
        )));
    }
    for i in 0..cyl.nz() {
        let z = cyl.z(i);
        if z <= p.z_a || z >= p.z_b {
            continue;
        }
        let axial = (std::f64::consts::PI * (z - p.z_b) / (p.z_a - p.z_b)).sin();
        for k in 0..cyl.ntheta() {
            let f = (1.0 + 0.25 * (p.n as f64 * cyl.theta(k)).cos()) * axial;
            let v = cyl.r(i, k) * (1.0 - p.a0 * f * f);
            if !(v > 0.0) {
                return Err(Error::Parameter(format!(
                    "far perturbation drives the radius nonpositive at (z = {z:e}, k = {k})"
                )));
            }
            cyl.set_r(i, k, v);
        }
    }
    Ok(())
}
