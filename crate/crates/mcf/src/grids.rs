//! The two patch representations and the machinery that couples them.
//!
//! The Cartesian patch holds the tip region as a graph `z(x, y)` over a
//! square of side `L` centered at the origin. The cylindrical patch holds the
//! far region as a graph `r(z, theta)` on `[z_min, z_max] x [0, 2pi)`, with
//! the angular direction periodic. The boundary of each grid lies strictly
//! inside the other grid's interior; [`exchange_boundaries`] refreshes the
//! boundary values by bilinear interpolation combined with bracketed root
//! finding along rays (Cartesian side) or axial lines (cylindrical side).

use crate::error::{Error, Result};
use std::f64::consts::TAU;

/// Relative bracket width at which root refinement stops.
const ROOT_TOL: f64 = 1e-12;

/// Tip-region patch: heights `z[i][k]` at `(x_i, y_k)` on a square of side
/// `L` centered at the origin.
#[derive(Debug, Clone)]
pub struct CartesianPatch {
    side: f64,
    nx: usize,
    ny: usize,
    t: f64,
    z: Vec<f64>,
}

impl CartesianPatch {
    pub fn new(side: f64, nx: usize, ny: usize, t: f64, mut f: impl FnMut(f64, f64) -> f64) -> Result<Self> {
        let mut z = vec![0.0; nx.checked_mul(ny).ok_or_else(|| Error::Config("grid too large".into()))?];
        let mut patch = CartesianPatch { side, nx, ny, t, z: Vec::new() };
        patch.validate_layout()?;
        for i in 0..nx {
            for k in 0..ny {
                z[i * ny + k] = f(patch.x(i), patch.y(k));
            }
        }
        patch.z = z;
        patch.validate_values()?;
        Ok(patch)
    }

    pub fn from_values(side: f64, nx: usize, ny: usize, t: f64, z: Vec<f64>) -> Result<Self> {
        if z.len() != nx * ny {
            return Err(Error::Config(format!(
                "cartesian value count {} does not match {}x{} grid",
                z.len(),
                nx,
                ny
            )));
        }
        let patch = CartesianPatch { side, nx, ny, t, z };
        patch.validate_layout()?;
        patch.validate_values()?;
        Ok(patch)
    }

    fn validate_layout(&self) -> Result<()> {
        if self.nx < 5 || self.ny < 5 {
            return Err(Error::Config(format!(
                "cartesian grid must be at least 5x5, got {}x{}",
                self.nx, self.ny
            )));
        }
        if !(self.side > 0.0) || !self.side.is_finite() {
            return Err(Error::Config(format!("cartesian side must be positive, got {}", self.side)));
        }
        Ok(())
    }

    fn validate_values(&self) -> Result<()> {
        for (idx, &v) in self.z.iter().enumerate() {
            if !v.is_finite() {
                return Err(Error::NumericalBlowup {
                    patch: "cartesian",
                    i: idx / self.ny,
                    k: idx % self.ny,
                    t: self.t,
                });
            }
        }
        Ok(())
    }

    #[inline]
    pub fn nx(&self) -> usize {
        self.nx
    }
    #[inline]
    pub fn ny(&self) -> usize {
        self.ny
    }
    #[inline]
    pub fn side(&self) -> f64 {
        self.side
    }
    #[inline]
    pub fn t(&self) -> f64 {
        self.t
    }
    pub fn set_t(&mut self, t: f64) {
        self.t = t;
    }
    #[inline]
    pub fn dx(&self) -> f64 {
        self.side / (self.nx - 1) as f64
    }
    #[inline]
    pub fn dy(&self) -> f64 {
        self.side / (self.ny - 1) as f64
    }
    #[inline]
    pub fn x(&self, i: usize) -> f64 {
        -0.5 * self.side + i as f64 * self.dx()
    }
    #[inline]
    pub fn y(&self, k: usize) -> f64 {
        -0.5 * self.side + k as f64 * self.dy()
    }
    #[inline]
    pub fn z(&self, i: usize, k: usize) -> f64 {
        self.z[i * self.ny + k]
    }
    #[inline]
    pub fn set_z(&mut self, i: usize, k: usize, v: f64) {
        self.z[i * self.ny + k] = v;
    }
    pub fn values(&self) -> &[f64] {
        &self.z
    }
    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.z
    }

    /// Bilinear interpolation of `z` at `(x, y)`.
    ///
    /// The point must be strictly inside the square, at least one cell away
    /// from the boundary; exchange may leave the outermost ring mid-update.
    pub fn sample(&self, x: f64, y: f64) -> Result<f64> {
        let (dx, dy) = (self.dx(), self.dy());
        let half = 0.5 * self.side;
        if !(x >= -half + dx && x <= half - dx && y >= -half + dy && y <= half - dy) {
            return Err(Error::Domain {
                patch: "cartesian",
                what: format!("point ({x:e}, {y:e}) not one cell inside square of side {:e}", self.side),
            });
        }
        Ok(self.sample_inner(x, y))
    }

    /// Bilinear interpolation over the full square, boundary cells included.
    /// Callers must guarantee the boundary ring holds current data.
    pub(crate) fn sample_inner(&self, x: f64, y: f64) -> f64 {
        let fx = (x + 0.5 * self.side) / self.dx();
        let fy = (y + 0.5 * self.side) / self.dy();
        let (i0, u) = split_cell(fx, self.nx);
        let (k0, v) = split_cell(fy, self.ny);
        let z00 = self.z(i0, k0);
        let z01 = self.z(i0, k0 + 1);
        let z10 = self.z(i0 + 1, k0);
        let z11 = self.z(i0 + 1, k0 + 1);
        (1.0 - u) * ((1.0 - v) * z00 + v * z01) + u * ((1.0 - v) * z10 + v * z11)
    }
}

/// Far-region patch: radii `r[i][k]` at `(z_i, theta_k)` with `theta`
/// periodic. The axis is never inside this patch: all radii stay positive.
#[derive(Debug, Clone)]
pub struct CylindricalPatch {
    z_min: f64,
    z_max: f64,
    nz: usize,
    ntheta: usize,
    t: f64,
    r: Vec<f64>,
    cos_t: Vec<f64>,
    sin_t: Vec<f64>,
}

impl CylindricalPatch {
    pub fn new(
        z_min: f64,
        z_max: f64,
        nz: usize,
        ntheta: usize,
        t: f64,
        mut f: impl FnMut(f64, f64) -> f64,
    ) -> Result<Self> {
        let mut patch = CylindricalPatch {
            z_min,
            z_max,
            nz,
            ntheta,
            t,
            r: Vec::new(),
            cos_t: Vec::new(),
            sin_t: Vec::new(),
        };
        patch.validate_layout()?;
        patch.build_trig();
        let mut r = vec![0.0; nz * ntheta];
        for i in 0..nz {
            for k in 0..ntheta {
                r[i * ntheta + k] = f(patch.z(i), patch.theta(k));
            }
        }
        patch.r = r;
        patch.validate_values()?;
        Ok(patch)
    }

    pub fn from_values(z_min: f64, z_max: f64, nz: usize, ntheta: usize, t: f64, r: Vec<f64>) -> Result<Self> {
        if r.len() != nz * ntheta {
            return Err(Error::Config(format!(
                "cylindrical value count {} does not match {}x{} grid",
                r.len(),
                nz,
                ntheta
            )));
        }
        let mut patch = CylindricalPatch {
            z_min,
            z_max,
            nz,
            ntheta,
            t,
            r,
            cos_t: Vec::new(),
            sin_t: Vec::new(),
        };
        patch.validate_layout()?;
        patch.build_trig();
        patch.validate_values()?;
        Ok(patch)
    }

    fn validate_layout(&self) -> Result<()> {
        if self.nz < 5 {
            return Err(Error::Config(format!("cylindrical grid needs nz >= 5, got {}", self.nz)));
        }
        if self.ntheta < 4 || self.ntheta % 2 != 0 {
            return Err(Error::Config(format!(
                "cylindrical grid needs even ntheta >= 4, got {}",
                self.ntheta
            )));
        }
        if !(self.z_min < self.z_max) {
            return Err(Error::Config(format!(
                "cylindrical extent invalid: z_min = {:e}, z_max = {:e}",
                self.z_min, self.z_max
            )));
        }
        Ok(())
    }

    fn validate_values(&self) -> Result<()> {
        for (idx, &v) in self.r.iter().enumerate() {
            if !v.is_finite() {
                return Err(Error::NumericalBlowup {
                    patch: "cylindrical",
                    i: idx / self.ntheta,
                    k: idx % self.ntheta,
                    t: self.t,
                });
            }
            if v <= 0.0 {
                return Err(Error::Geometry(format!(
                    "cylindrical radius must stay positive, got {v:e} at node ({}, {})",
                    idx / self.ntheta,
                    idx % self.ntheta
                )));
            }
        }
        Ok(())
    }

    // Unit-circle direction table, mirrored across theta = 0 so that rays at
    // theta_k and theta_{N-k} are exact reflections of each other.
    fn build_trig(&mut self) {
        let n = self.ntheta;
        let half = n / 2;
        let mut cos_t = vec![0.0; n];
        let mut sin_t = vec![0.0; n];
        for k in 0..=half {
            let th = k as f64 * TAU / n as f64;
            cos_t[k] = th.cos();
            sin_t[k] = th.sin();
        }
        cos_t[half] = -1.0;
        sin_t[half] = 0.0;
        for k in half + 1..n {
            cos_t[k] = cos_t[n - k];
            sin_t[k] = -sin_t[n - k];
        }
        self.cos_t = cos_t;
        self.sin_t = sin_t;
    }

    #[inline]
    pub fn nz(&self) -> usize {
        self.nz
    }
    #[inline]
    pub fn ntheta(&self) -> usize {
        self.ntheta
    }
    #[inline]
    pub fn z_min(&self) -> f64 {
        self.z_min
    }
    #[inline]
    pub fn z_max(&self) -> f64 {
        self.z_max
    }
    #[inline]
    pub fn t(&self) -> f64 {
        self.t
    }
    pub fn set_t(&mut self, t: f64) {
        self.t = t;
    }
    #[inline]
    pub fn dz(&self) -> f64 {
        (self.z_max - self.z_min) / (self.nz - 1) as f64
    }
    #[inline]
    pub fn dtheta(&self) -> f64 {
        TAU / self.ntheta as f64
    }
    #[inline]
    pub fn z(&self, i: usize) -> f64 {
        self.z_min + i as f64 * self.dz()
    }
    #[inline]
    pub fn theta(&self, k: usize) -> f64 {
        k as f64 * self.dtheta()
    }
    /// Direction cosine of the grid angle `theta_k`, mirror-symmetric in `k`.
    #[inline]
    pub fn cos_theta(&self, k: usize) -> f64 {
        self.cos_t[k]
    }
    #[inline]
    pub fn sin_theta(&self, k: usize) -> f64 {
        self.sin_t[k]
    }
    /// Angular index arithmetic is modulo `ntheta`: there is no seam.
    #[inline]
    pub fn wrap_k(&self, k: isize) -> usize {
        k.rem_euclid(self.ntheta as isize) as usize
    }
    #[inline]
    pub fn r(&self, i: usize, k: usize) -> f64 {
        self.r[i * self.ntheta + k]
    }
    #[inline]
    pub fn set_r(&mut self, i: usize, k: usize, v: f64) {
        self.r[i * self.ntheta + k] = v;
    }
    pub fn values(&self) -> &[f64] {
        &self.r
    }
    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.r
    }

    pub fn r_min(&self) -> f64 {
        self.r.iter().cloned().fold(f64::INFINITY, f64::min)
    }

    /// Bilinear interpolation of `r` at `(z, theta)`, `theta` wrapped mod 2pi.
    ///
    /// `z` must stay one cell away from either axial end.
    pub fn sample(&self, z: f64, theta: f64) -> Result<f64> {
        let dz = self.dz();
        if !(z >= self.z_min + dz && z <= self.z_max - dz) {
            return Err(Error::Domain {
                patch: "cylindrical",
                what: format!(
                    "z = {z:e} not one cell inside [{:e}, {:e}]",
                    self.z_min, self.z_max
                ),
            });
        }
        Ok(self.sample_inner(z, theta))
    }

    /// Bilinear interpolation over the full axial extent, end rows included.
    pub(crate) fn sample_inner(&self, z: f64, theta: f64) -> f64 {
        let fz = (z - self.z_min) / self.dz();
        let (i0, u) = split_cell(fz, self.nz);
        let th = wrap_angle(theta);
        let ft = th / self.dtheta();
        let k0 = (ft as usize).min(self.ntheta - 1);
        let v = ft - k0 as f64;
        let k1 = (k0 + 1) % self.ntheta;
        let r00 = self.r(i0, k0);
        let r01 = self.r(i0, k1);
        let r10 = self.r(i0 + 1, k0);
        let r11 = self.r(i0 + 1, k1);
        (1.0 - u) * ((1.0 - v) * r00 + v * r01) + u * ((1.0 - v) * r10 + v * r11)
    }
}

/// Reduce an angle to `[0, 2pi)`. Reduction rounds once, so angles that
/// differ by exact multiples of 2pi agree to one ulp, not bitwise.
#[inline]
pub fn wrap_angle(theta: f64) -> f64 {
    let w = theta.rem_euclid(TAU);
    if w >= TAU {
        0.0
    } else {
        w
    }
}

/// Clamp a fractional grid coordinate to a valid cell and offset within it.
#[inline]
fn split_cell(f: f64, n: usize) -> (usize, f64) {
    let i = (f.floor() as isize).clamp(0, n as isize - 2) as usize;
    (i, f - i as f64)
}

/// Regrid-trigger policy state: how far the cross-grid boundary images may
/// drift from the center of the overlap before a regrid fires.
#[derive(Debug, Clone, Copy)]
pub struct OverlapState {
    /// Allowed drift of the `z_min`-circle image around `0.5 * (L/2)`,
    /// as a fraction of `L/2`. Must lie in (0, 1/2).
    pub margin_fraction: f64,
    /// Most recent overlap discrepancy, updated by the caller.
    pub last_mismatch: f64,
}

impl OverlapState {
    pub fn new(margin_fraction: f64) -> Result<Self> {
        if !(margin_fraction > 0.0 && margin_fraction < 0.5) {
            return Err(Error::Parameter(format!(
                "overlap margin fraction must lie in (0, 1/2), got {margin_fraction}"
            )));
        }
        Ok(OverlapState {
            margin_fraction,
            last_mismatch: 0.0,
        })
    }
}

impl Default for OverlapState {
    fn default() -> Self {
        OverlapState {
            margin_fraction: 0.25,
            last_mismatch: 0.0,
        }
    }
}

/// Minimum clearance, in cells, between the square perimeter's image and the
/// cylindrical patch's `z_min` end before a regrid fires.
pub const PERIMETER_CLEARANCE_CELLS: f64 = 4.0;

/// Largest radius the tip-side branch of the cylindrical graph attains,
/// minimized over angle. Columns are scanned from `z_min` up to their first
/// pronounced (5%) drop, so a forming neck bounds the reach instead of the
/// far side behind it. The square's perimeter can only be anchored at radii
/// below this.
pub fn branch_reach(cyl: &CylindricalPatch) -> f64 {
    let mut reach = f64::INFINITY;
    for k in 0..cyl.ntheta() {
        let mut peak = 0.0f64;
        for i in 0..cyl.nz() {
            let r = cyl.r(i, k);
            if r > peak {
                peak = r;
            } else if r < 0.95 * peak {
                break;
            }
        }
        reach = reach.min(peak);
    }
    reach
}

/// Radius at which the ray from the origin at angle `theta` crosses height
/// `z_target` on the Cartesian graph.
///
/// Used to transfer the cylinder's `z_min` circle onto the Cartesian patch.
/// Sampled heights along the ray must be strictly monotone across the
/// bracketing interval.
pub fn radial_root(cart: &CartesianPatch, theta: f64, z_target: f64) -> Result<f64> {
    radial_root_dir(cart, theta.cos(), theta.sin(), z_target)
}

/// [`radial_root`] with the ray direction passed explicitly so callers can
/// use the mirror-symmetric direction tables.
pub fn radial_root_dir(cart: &CartesianPatch, ct: f64, st: f64, z_target: f64) -> Result<f64> {
    let h = 0.5 * cart.dx().min(cart.dy());
    // Stay one sampling cell inside the square along this ray.
    let half = 0.5 * cart.side();
    let lim_x = if ct.abs() > 1e-300 { (half - cart.dx()) / ct.abs() } else { f64::INFINITY };
    let lim_y = if st.abs() > 1e-300 { (half - cart.dy()) / st.abs() } else { f64::INFINITY };
    let s_max = lim_x.min(lim_y);
    let eval = |s: f64| cart.sample_inner(s * ct, s * st);

    let n = (s_max / h).floor() as usize;
    let mut prev_s = 0.0;
    let mut prev_v = eval(0.0) - z_target;
    if prev_v == 0.0 {
        return Ok(0.0);
    }
    for j in 1..=n {
        let s = (j as f64) * h;
        let v = eval(s) - z_target;
        if prev_v * v <= 0.0 {
            if v == prev_v {
                return Err(Error::Geometry(format!(
                    "degenerate radial bracket at s = {s:e}: flat samples around z_target = {z_target:e}"
                )));
            }
            let s_root = refine_root(&|s| eval(s) - z_target, prev_s, prev_v, s, v, ROOT_TOL * cart.side());
            return Ok(s_root);
        }
        prev_s = s;
        prev_v = v;
    }
    Err(Error::OverlapViolation(format!(
        "no radial bracket for z_target = {z_target:e} along direction ({ct:e}, {st:e}) within s <= {s_max:e}"
    )))
}

/// Axial coordinate at which the cylindrical graph first reaches radius
/// `r_target` along the line `theta = const`, scanning from `z_min` upward.
///
/// Used to transfer the square perimeter onto the cylindrical patch. The
/// scan stops at the first pronounced local maximum of the column: the
/// overlap always lives on the tip-side monotone branch, and a crossing
/// found beyond a forming neck would silently hand the exchange (or a
/// regrid) a point on the wrong side of it.
pub fn axial_root(cyl: &CylindricalPatch, theta: f64, r_target: f64) -> Result<f64> {
    let nz = cyl.nz();
    let eval = |z: f64| cyl.sample_inner(z, theta);
    // Scan grid rows including the boundary rows: both hold current data
    // (exchange-set at z_min, far-end law at z_max), and at coarse spacing
    // the root regularly sits inside the first cell.
    let mut prev_z = cyl.z(0);
    let mut prev_v = eval(prev_z) - r_target;
    if prev_v == 0.0 {
        return Ok(prev_z);
    }
    let mut running_max = prev_v;
    for i in 1..nz {
        let z = cyl.z(i);
        let v = eval(z) - r_target;
        if prev_v * v <= 0.0 {
            if v == prev_v {
                return Err(Error::Geometry(format!(
                    "degenerate axial bracket at z = {z:e}: flat samples around r_target = {r_target:e}"
                )));
            }
            let z_root = refine_root(
                &|z| eval(z) - r_target,
                prev_z,
                prev_v,
                z,
                v,
                ROOT_TOL * (cyl.z_max() - cyl.z_min()),
            );
            return Ok(z_root);
        }
        running_max = running_max.max(v);
        if v + r_target < 0.95 * (running_max + r_target) {
            // Past the first branch's peak without a crossing.
            break;
        }
        prev_z = z;
        prev_v = v;
    }
    Err(Error::OverlapViolation(format!(
        "no axial bracket for r_target = {r_target:e} at theta = {theta:e} on the near branch"
    )))
}

/// Bracketed bisection with secant refinement. `fa`/`fb` are the already
/// evaluated endpoint values with opposite signs.
fn refine_root(f: &dyn Fn(f64) -> f64, mut a: f64, mut fa: f64, mut b: f64, mut fb: f64, tol: f64) -> f64 {
    debug_assert!(fa * fb <= 0.0);
    for _ in 0..200 {
        if (b - a).abs() <= tol {
            break;
        }
        // Secant candidate, accepted only if it lands safely inside.
        let mid = 0.5 * (a + b);
        let mut x = if fb != fa { b - fb * (b - a) / (fb - fa) } else { mid };
        let lo = a.min(b);
        let hi = a.max(b);
        let guard = 0.01 * (hi - lo);
        if !(x > lo + guard && x < hi - guard) {
            x = mid;
        }
        let fx = f(x);
        if fx == 0.0 {
            return x;
        }
        if fa * fx < 0.0 {
            b = x;
            fb = fx;
        } else {
            a = x;
            fa = fx;
        }
    }
    0.5 * (a + b)
}

/// What [`exchange_boundaries`] saw while refreshing the two boundaries.
/// The flow module turns these numbers into regrid decisions.
#[derive(Debug, Clone, Copy)]
pub struct ExchangeReport {
    /// Smallest and largest radius of the `z_min` circle's image in the
    /// Cartesian patch.
    pub min_circle_radius: f64,
    pub max_circle_radius: f64,
    /// Smallest axial clearance, in cells, between a perimeter image and
    /// `z_min`. Infinite if every perimeter node used the fallback.
    pub min_perimeter_clearance: f64,
    /// Perimeter nodes whose radius lies beyond the cylindrical graph's
    /// reach; their heights were linearly extrapolated from the interior.
    pub fallback_nodes: usize,
}

/// Refresh both patch boundaries from the other patch's interior.
///
/// The cylinder's `z_min` row is set by radial root finding in the Cartesian
/// patch; the square's perimeter is set by axial root finding in the
/// cylindrical patch. Interior values are untouched. Perimeter nodes whose
/// radius exceeds the largest radius the cylindrical graph attains (the
/// square's corners can poke outside the surface) fall back to linear
/// extrapolation along the grid line.
pub fn exchange_boundaries(cart: &mut CartesianPatch, cyl: &mut CylindricalPatch) -> Result<ExchangeReport> {
    if cart.t() != cyl.t() {
        return Err(Error::Parameter(format!(
            "patches out of sync: cartesian t = {:e}, cylindrical t = {:e}",
            cart.t(),
            cyl.t()
        )));
    }
    let mut min_rad = f64::INFINITY;
    let mut max_rad = f64::NEG_INFINITY;
    for k in 0..cyl.ntheta() {
        let s = radial_root_dir(cart, cyl.cos_theta(k), cyl.sin_theta(k), cyl.z_min())?;
        min_rad = min_rad.min(s);
        max_rad = max_rad.max(s);
        cyl.set_r(0, k, s);
    }

    let mut clearance = f64::INFINITY;
    let mut fallback = 0usize;
    let nx = cart.nx();
    let ny = cart.ny();
    let dz = cyl.dz();
    let mut set_perimeter = |cart: &mut CartesianPatch, i: usize, k: usize| -> Result<()> {
        let x = cart.x(i);
        let y = cart.y(k);
        let rho = x.hypot(y);
        let theta = y.atan2(x);
        match axial_root(cyl, theta, rho) {
            Ok(z_star) => {
                clearance = clearance.min((z_star - cyl.z_min()) / dz);
                cart.set_z(i, k, z_star);
            }
            Err(Error::OverlapViolation(_)) => {
                // Height continues along the grid line; this node is outside
                // the region the cylindrical graph can see.
                fallback += 1;
                let v = match (i, k) {
                    (0, 0) => 2.0 * cart.z(1, 1) - cart.z(2, 2),
                    (0, kk) if kk == ny - 1 => 2.0 * cart.z(1, ny - 2) - cart.z(2, ny - 3),
                    (ii, 0) if ii == nx - 1 => 2.0 * cart.z(nx - 2, 1) - cart.z(nx - 3, 2),
                    (ii, kk) if ii == nx - 1 && kk == ny - 1 => 2.0 * cart.z(nx - 2, ny - 2) - cart.z(nx - 3, ny - 3),
                    (0, kk) => 2.0 * cart.z(1, kk) - cart.z(2, kk),
                    (ii, kk) if ii == nx - 1 => 2.0 * cart.z(nx - 2, kk) - cart.z(nx - 3, kk),
                    (ii, 0) => 2.0 * cart.z(ii, 1) - cart.z(ii, 2),
                    (ii, kk) => 2.0 * cart.z(ii, kk - 1) - cart.z(ii, kk - 2),
                };
                cart.set_z(i, k, v);
            }
            Err(e) => return Err(e),
        }
        Ok(())
    };

    for i in 0..nx {
        set_perimeter(cart, i, 0)?;
        set_perimeter(cart, i, ny - 1)?;
    }
    for k in 1..ny - 1 {
        set_perimeter(cart, 0, k)?;
        set_perimeter(cart, nx - 1, k)?;
    }

    Ok(ExchangeReport {
        min_circle_radius: min_rad,
        max_circle_radius: max_rad,
        min_perimeter_clearance: clearance,
        fallback_nodes: fallback,
    })
}

/// Maximum disagreement, over probe points in the overlap annulus, between
/// the Cartesian height and the height implied by the cylindrical graph.
///
/// Probes sit on the cylindrical surface at `n_samples` points spread over
/// `(z, theta)`; each is compared against the Cartesian height at the same
/// `(x, y)`. The probe band is capped in `z` by the Cartesian rim height:
/// beyond it the tube is no longer the sheet the Cartesian graph represents
/// (a far neck's cross-section would otherwise be compared against the tip).
/// Probes whose radius falls outside the Cartesian sampling region are
/// skipped; if no probe lands, the sentinel `+inf` is returned.
pub fn measure_overlap_mismatch(cart: &CartesianPatch, cyl: &CylindricalPatch, n_samples: usize) -> f64 {
    let dz = cyl.dz();
    let rho_max = 0.5 * cart.side() - 2.0 * cart.dx().max(cart.dy());
    let rim = cart
        .sample_inner(rho_max, 0.0)
        .min(cart.sample_inner(-rho_max, 0.0))
        .min(cart.sample_inner(0.0, rho_max))
        .min(cart.sample_inner(0.0, -rho_max));
    let z_lo = cyl.z_min() + 2.0 * dz;
    let z_hi = (cyl.z_max() - 2.0 * dz).min(rim);
    if !(z_lo < z_hi) || n_samples == 0 {
        return f64::INFINITY;
    }
    let mut worst = f64::NEG_INFINITY;
    let mut hits = 0usize;
    for j in 0..n_samples {
        let u = (j as f64 + 0.5) / n_samples as f64;
        let z = z_lo + u * (z_hi - z_lo);
        // Golden-ratio angle spread decorrelates theta from z.
        let theta = wrap_angle(u * 233.0 * 2.399963229728653);
        let rho = cyl.sample_inner(z, theta);
        if !(rho > 0.0 && rho <= rho_max) {
            continue;
        }
        let x = rho * theta.cos();
        let y = rho * theta.sin();
        let z_cart = cart.sample_inner(x, y);
        worst = worst.max((z_cart - z).abs());
        hits += 1;
    }
    if hits == 0 {
        f64::INFINITY
    } else {
        worst
    }
}

/// Rebuild both patches on new domains (`new_side`, `new_z_min`), filling all
/// values by interpolation from the old pair. Grid counts and time carry
/// over. Nodes no longer covered by the old patch on the same chart are
/// obtained through the other chart's root finders.
pub fn regrid(
    cart: &CartesianPatch,
    cyl: &CylindricalPatch,
    new_side: f64,
    new_z_min: f64,
) -> Result<(CartesianPatch, CylindricalPatch)> {
    if !(new_side > 0.0) || !(new_z_min < cyl.z_max()) {
        return Err(Error::Config(format!(
            "regrid target invalid: side = {new_side:e}, z_min = {new_z_min:e}"
        )));
    }
    let nx = cart.nx();
    let ny = cart.ny();
    let half_old = 0.5 * cart.side();

    let mut new_cart = cart.clone();
    {
        let dx_new = new_side / (nx - 1) as f64;
        let dy_new = new_side / (ny - 1) as f64;
        let mut z = vec![0.0; nx * ny];
        for i in 0..nx {
            let x = -0.5 * new_side + i as f64 * dx_new;
            for k in 0..ny {
                let y = -0.5 * new_side + k as f64 * dy_new;
                let v = if x.abs() <= half_old && y.abs() <= half_old {
                    cart.sample_inner(x, y)
                } else {
                    axial_root(cyl, y.atan2(x), x.hypot(y)).map_err(|e| {
                        Error::Config(format!(
                            "regrid cannot fill cartesian node ({x:e}, {y:e}): {e}"
                        ))
                    })?
                };
                z[i * ny + k] = v;
            }
        }
        new_cart.side = new_side;
        new_cart.z = z;
        new_cart.validate_values()?;
    }

    let nz = cyl.nz();
    let ntheta = cyl.ntheta();
    let dz_new = (cyl.z_max() - new_z_min) / (nz - 1) as f64;
    let mut r = vec![0.0; nz * ntheta];
    for i in 0..nz {
        let z = new_z_min + i as f64 * dz_new;
        for k in 0..ntheta {
            let v = if z >= cyl.z_min() {
                cyl.sample_inner(z.min(cyl.z_max()), cyl.theta(k))
            } else {
                radial_root_dir(&new_cart, cyl.cos_theta(k), cyl.sin_theta(k), z).map_err(|e| {
                    Error::Config(format!("regrid cannot fill cylindrical node (z = {z:e}, k = {k}): {e}"))
                })?
            };
            r[i * ntheta + k] = v;
        }
    }
    let new_cyl = CylindricalPatch::from_values(new_z_min, cyl.z_max(), nz, ntheta, cyl.t(), r)?;
    Ok((new_cart, new_cyl))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn paraboloid_pair(spacing: f64, n: usize) -> (CartesianPatch, CylindricalPatch) {
        // z = (x^2 + y^2) / a with a = half-side, sampled on both charts.
        // Slopes are O(1) at the patch scale, the z_min circle sits at radius
        // 0.2 * half inside the square, and the cylindrical extent covers the
        // square corners with margin.
        let side = spacing * (n - 1) as f64;
        let half = 0.5 * side;
        let a = half;
        let cart = CartesianPatch::new(side, n, n, 0.0, |x, y| (x * x + y * y) / a).unwrap();
        let z_lo = (0.2 * half).powi(2) / a;
        let z_hi = 2.5 * half;
        let nz = ((z_hi - z_lo) / spacing).ceil() as usize + 1;
        let cyl = CylindricalPatch::new(z_lo, z_lo + spacing * (nz - 1) as f64, nz, 32, 0.0, |z, _| (a * z).sqrt())
            .unwrap();
        (cart, cyl)
    }

    #[test]
    fn cartesian_sample_constant_and_bilinear() {
        let p = CartesianPatch::new(2.0, 9, 9, 0.0, |_, _| 7.0).unwrap();
        assert_eq!(p.sample(0.13, -0.22).unwrap(), 7.0);

        let p = CartesianPatch::new(2.0, 9, 9, 0.0, |x, y| 2.0 * x + 3.0 * y).unwrap();
        let v = p.sample(0.1, 0.2).unwrap();
        assert!((v - 0.8).abs() < 1e-14, "bilinear exactness, got {v}");
    }

    #[test]
    fn cartesian_sample_quadratic_midcell() {
        // z = x^2 on a dx = 0.01 grid; mid-cell error is O(dx^2) <= 1e-4.
        let n = 201;
        let p = CartesianPatch::new(2.0, n, n, 0.0, |x, _| x * x).unwrap();
        let x = p.x(77) + 0.5 * p.dx();
        let v = p.sample(x, 0.0).unwrap();
        assert!((v - x * x).abs() < 1e-4, "got {v} vs {}", x * x);
    }

    #[test]
    fn cartesian_sample_domain_error() {
        let p = CartesianPatch::new(2.0, 9, 9, 0.0, |_, _| 0.0).unwrap();
        let err = p.sample(0.999, 0.0).unwrap_err();
        match err {
            Error::Domain { patch, .. } => assert_eq!(patch, "cartesian"),
            other => panic!("expected domain error, got {other}"),
        }
    }

    #[test]
    fn cylindrical_sample_constant_and_mode() {
        let p = CylindricalPatch::new(0.0, 1.0, 11, 16, 0.0, |_, _| 2.5).unwrap();
        assert_eq!(p.sample(0.5, 1.234).unwrap(), 2.5);

        let p = CylindricalPatch::new(0.0, 1.0, 11, 512, 0.0, |_, th| 1.0 + 0.1 * th.cos()).unwrap();
        let v = p.sample(0.5, std::f64::consts::PI).unwrap();
        assert!((v - 0.9).abs() < 1e-4, "got {v}");
    }

    #[test]
    fn cylindrical_sample_periodicity() {
        let p = CylindricalPatch::new(0.0, 1.0, 11, 16, 0.0, |z, th| 1.0 + 0.2 * th.sin() + z).unwrap();
        let a = p.sample(0.5, 0.3).unwrap();
        let b = p.sample(0.5, 0.3 + TAU).unwrap();
        // Angle reduction rounds once; equality holds to a couple of ulps.
        assert!((a - b).abs() <= 4.0 * f64::EPSILON * a.abs(), "{a} vs {b}");
        let c = p.sample(0.5, 0.3 - TAU).unwrap();
        assert!((a - c).abs() <= 4.0 * f64::EPSILON * a.abs());
    }

    #[test]
    fn cylindrical_rejects_axis_and_odd_ntheta() {
        assert!(CylindricalPatch::new(0.0, 1.0, 11, 16, 0.0, |_, _| 0.0).is_err());
        assert!(CylindricalPatch::new(0.0, 1.0, 11, 15, 0.0, |_, _| 1.0).is_err());
    }

    #[test]
    fn radial_root_paraboloid() {
        // Roots agree with the analytic value to the bilinear interpolation
        // bias, h^2 z_xx / (8 slope).
        let p = CartesianPatch::new(2.0, 513, 513, 0.0, |x, y| x * x + y * y).unwrap();
        let tol = p.dx() * p.dx();
        for theta in [0.0, 0.7, std::f64::consts::FRAC_PI_4] {
            let s = radial_root(&p, theta, 0.25).unwrap();
            assert!((s - 0.5).abs() < tol, "theta = {theta}: got {s}");
        }
        // Near the flat center the slope is 2s = 0.2, amplifying the bias.
        let s = radial_root(&p, std::f64::consts::FRAC_PI_4, 0.01).unwrap();
        assert!((s - 0.1).abs() < 2.0 * tol * 2.0 / (8.0 * 0.2), "got {s}");
    }

    #[test]
    fn radial_root_no_bracket_is_overlap_violation() {
        let p = CartesianPatch::new(2.0, 33, 33, 0.0, |x, y| x * x + y * y).unwrap();
        match radial_root(&p, 0.3, 5.0) {
            Err(Error::OverlapViolation(_)) => {}
            other => panic!("expected overlap violation, got {other:?}"),
        }
    }

    #[test]
    fn axial_root_cone() {
        let p = CylindricalPatch::new(0.01, 0.2, 101, 16, 0.0, |z, _| z).unwrap();
        let z = axial_root(&p, 0.0, 0.07).unwrap();
        assert!((z - 0.07).abs() < 1e-9, "got {z}");

        // Mode that vanishes at theta = pi/2.
        let p = CylindricalPatch::new(0.01, 0.2, 401, 64, 0.0, |z, th| z * (1.0 + 0.1 * th.cos())).unwrap();
        let z = axial_root(&p, std::f64::consts::FRAC_PI_2, 0.05).unwrap();
        assert!((z - 0.05).abs() < 1e-6, "got {z}");
    }

    #[test]
    fn root_finders_round_trip() {
        let cart = CartesianPatch::new(2.0, 257, 257, 0.0, |x, y| x * x + y * y).unwrap();
        for &s in &[0.2, 0.45, 0.7] {
            let theta = 0.9f64;
            let z = cart.sample(s * theta.cos(), s * theta.sin()).unwrap();
            let back = radial_root(&cart, theta, z).unwrap();
            assert!((back - s).abs() <= 1e-8 * s.max(1.0), "s = {s}, back = {back}");
        }
        let cyl = CylindricalPatch::new(0.05, 1.0, 257, 16, 0.0, |z, _| z.sqrt()).unwrap();
        for &z0 in &[0.2, 0.5, 0.9] {
            let r = cyl.sample(z0, 0.4).unwrap();
            let back = axial_root(&cyl, 0.4, r).unwrap();
            assert!((back - z0).abs() <= 1e-8 * z0.max(1.0), "z0 = {z0}, back = {back}");
        }
    }

    #[test]
    fn exchange_matches_analytic_surface() {
        // Both patches sampled from one analytic paraboloid at spacing about
        // 1e-3 of the domain scale; post-exchange boundary values must agree
        // with the surface (and its inverse) to 1e-6.
        let (mut cart, mut cyl) = paraboloid_pair(3.0e-5, 129);
        let a = 0.5 * cart.side();
        let report = exchange_boundaries(&mut cart, &mut cyl).unwrap();
        assert_eq!(report.fallback_nodes, 0);
        let exact_radius = (a * cyl.z_min()).sqrt();
        for k in 0..cyl.ntheta() {
            let r = cyl.r(0, k);
            assert!((r - exact_radius).abs() < 1e-6 * a.max(1.0), "k = {k}: {r} vs {exact_radius}");
        }
        for i in 0..cart.nx() {
            for &k in &[0usize, cart.ny() - 1] {
                let exact = (cart.x(i).powi(2) + cart.y(k).powi(2)) / a;
                assert!((cart.z(i, k) - exact).abs() < 1e-6);
            }
        }
    }

    #[test]
    fn exchange_is_idempotent_on_consistent_data() {
        let (mut cart, mut cyl) = paraboloid_pair(0.004, 65);
        exchange_boundaries(&mut cart, &mut cyl).unwrap();
        let cart_before = cart.values().to_vec();
        let cyl_before = cyl.values().to_vec();
        exchange_boundaries(&mut cart, &mut cyl).unwrap();
        for (a, b) in cart_before.iter().zip(cart.values()) {
            assert!((a - b).abs() <= 1e-12);
        }
        for (a, b) in cyl_before.iter().zip(cyl.values()) {
            assert!((a - b).abs() <= 1e-12);
        }
    }

    #[test]
    fn exchange_fixed_point_on_consistent_pairing() {
        // Fields sampled consistently from one surface are a fixed point of
        // the exchange up to interpolation error.
        let (mut cart, mut cyl) = paraboloid_pair(3.0e-5, 129);
        let cyl_row: Vec<f64> = (0..cyl.ntheta()).map(|k| cyl.r(0, k)).collect();
        exchange_boundaries(&mut cart, &mut cyl).unwrap();
        for (k, before) in cyl_row.iter().enumerate() {
            assert!((cyl.r(0, k) - before).abs() < 1e-6);
        }
    }

    #[test]
    fn mismatch_second_order_in_h() {
        let (cart_h, cyl_h) = paraboloid_pair(0.008, 65);
        let (cart_h2, cyl_h2) = paraboloid_pair(0.004, 129);
        let m_h = measure_overlap_mismatch(&cart_h, &cyl_h, 400);
        let m_h2 = measure_overlap_mismatch(&cart_h2, &cyl_h2, 400);
        assert!(m_h.is_finite() && m_h2.is_finite());
        let ratio = m_h / m_h2;
        assert!(
            ratio > 2.5 && ratio < 6.0,
            "halving h should reduce mismatch ~4x, got {ratio} ({m_h:e} -> {m_h2:e})"
        );
    }

    #[test]
    fn mismatch_detects_single_row_perturbation() {
        let (cart, mut cyl) = paraboloid_pair(0.004, 65);
        let base = measure_overlap_mismatch(&cart, &cyl, 500);
        // Pick a row whose image radius lies inside the Cartesian sampling
        // region, then perturb it so some probe necessarily sees it.
        let a = 0.5 * cart.side();
        let z_target = (0.6 * a).powi(2) / a;
        let i = ((z_target - cyl.z_min()) / cyl.dz()).round() as usize;
        let eps = 1e-3 * a;
        for k in 0..cyl.ntheta() {
            let v = cyl.r(i, k);
            cyl.set_r(i, k, v + eps);
        }
        let bumped = measure_overlap_mismatch(&cart, &cyl, 500);
        assert!(bumped > base + 0.05 * eps, "base {base:e}, bumped {bumped:e}");
    }

    #[test]
    fn regrid_identity_preserves_values() {
        let (mut cart, mut cyl) = paraboloid_pair(0.004, 65);
        exchange_boundaries(&mut cart, &mut cyl).unwrap();
        let (c2, y2) = regrid(&cart, &cyl, cart.side(), cyl.z_min()).unwrap();
        for (a, b) in cart.values().iter().zip(c2.values()) {
            assert!((a - b).abs() <= 1e-12, "{a} vs {b}");
        }
        for (a, b) in cyl.values().iter().zip(y2.values()) {
            assert!((a - b).abs() <= 1e-12, "{a} vs {b}");
        }
    }

    #[test]
    fn regrid_shrink_matches_analytic_surface() {
        let (mut cart, mut cyl) = paraboloid_pair(0.004, 65);
        let a = 0.5 * cart.side();
        exchange_boundaries(&mut cart, &mut cyl).unwrap();
        let (c2, y2) = regrid(&cart, &cyl, 0.9 * cart.side(), cyl.z_min() + 0.3 * cyl.dz()).unwrap();
        // Interpolation error bound: h^2/8 * max second derivative, with
        // headroom for the root-finding path on the new low rows.
        let tol = cart.dx() * cart.dx() * (2.0 / a);
        for i in 0..c2.nx() {
            for k in 0..c2.ny() {
                let exact = (c2.x(i).powi(2) + c2.y(k).powi(2)) / a;
                assert!((c2.z(i, k) - exact).abs() < tol, "node ({i},{k})");
            }
        }
        for i in 0..y2.nz() {
            for k in 0..y2.ntheta() {
                let z = y2.z_min() + i as f64 * y2.dz();
                let exact = (a * z).sqrt();
                assert!((y2.r(i, k) - exact).abs() < tol / (2.0 * exact / a), "node ({i},{k})");
            }
        }
    }

    #[test]
    fn regrid_preserves_constants() {
        let cart = CartesianPatch::new(1.0, 17, 17, 0.0, |_, _| 3.0).unwrap();
        let cyl = CylindricalPatch::new(2.5, 3.5, 17, 8, 0.0, |_, _| 4.0).unwrap();
        let (c2, y2) = regrid(&cart, &cyl, 0.8, 2.6).unwrap();
        assert!(c2.values().iter().all(|&v| v == 3.0));
        assert!(y2.values().iter().all(|&v| v == 4.0));
    }

    #[test]
    fn trig_tables_are_mirror_symmetric() {
        let p = CylindricalPatch::new(0.0, 1.0, 5, 64, 0.0, |_, _| 1.0).unwrap();
        let n = p.ntheta();
        for k in 1..n {
            assert_eq!(p.cos_theta(k), p.cos_theta(n - k));
            assert_eq!(p.sin_theta(k), -p.sin_theta(n - k));
        }
        assert_eq!(p.sin_theta(n / 2), 0.0);
        assert_eq!(p.cos_theta(n / 2), -1.0);
    }

    #[test]
    fn interpolation_error_halves_as_h_squared() {
        // C^4 surface: sample error drops by ~4x when both spacings halve.
        let f = |x: f64, y: f64| (3.0 * x).sin() * (2.0 * y).cos();
        let worst = |n: usize| -> f64 {
            let p = CartesianPatch::new(2.0, n, n, 0.0, f).unwrap();
            let mut w: f64 = 0.0;
            for i in 1..n - 1 {
                for k in 1..n - 1 {
                    let x = p.x(i) + 0.5 * p.dx();
                    let y = p.y(k) + 0.5 * p.dy();
                    if x.abs() < 0.9 && y.abs() < 0.9 {
                        w = w.max((p.sample(x, y).unwrap() - f(x, y)).abs());
                    }
                }
            }
            w
        };
        let e1 = worst(101);
        let e2 = worst(201);
        let ratio = e1 / e2;
        assert!(ratio > 3.5 && ratio < 4.5, "ratio {ratio}");
    }
}
