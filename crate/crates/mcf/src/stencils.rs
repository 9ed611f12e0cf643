//! Second-order centered finite differences on both patch types.
//!
//! Boundary rows and columns are never differenced: they are supplied by the
//! boundary exchange or the far-end condition, so every stencil here is the
//! plain centered one. Derivatives are computed on the fly per node; nothing
//! is stored.

use crate::error::{Error, Result};
use crate::grids::{CartesianPatch, CylindricalPatch};

/// First and second derivatives of `r(z, theta)` at one node.
#[derive(Debug, Clone, Copy)]
pub struct CylDerivs {
    pub r_z: f64,
    pub r_theta: f64,
    pub r_zz: f64,
    pub r_theta_theta: f64,
    pub r_z_theta: f64,
}

/// First and second derivatives of `z(x, y)` at one node.
#[derive(Debug, Clone, Copy)]
pub struct CartDerivs {
    pub z_x: f64,
    pub z_y: f64,
    pub z_xx: f64,
    pub z_yy: f64,
    pub z_xy: f64,
}

/// Centered differences at axial row `i`, angular column `k` (wrapped).
pub fn cyl_derivs(p: &CylindricalPatch, i: usize, k: usize) -> Result<CylDerivs> {
    if i < 1 || i > p.nz() - 2 {
        return Err(Error::Parameter(format!(
            "cyl_derivs needs an interior axial index, got i = {i} with nz = {}",
            p.nz()
        )));
    }
    let k = k % p.ntheta();
    let kp = if k + 1 == p.ntheta() { 0 } else { k + 1 };
    let km = if k == 0 { p.ntheta() - 1 } else { k - 1 };
    let dz = p.dz();
    let dth = p.dtheta();

    let c = p.r(i, k);
    let zp = p.r(i + 1, k);
    let zm = p.r(i - 1, k);
    let tp = p.r(i, kp);
    let tm = p.r(i, km);

    Ok(CylDerivs {
        r_z: (zp - zm) / (2.0 * dz),
        r_theta: (tp - tm) / (2.0 * dth),
        r_zz: (zp + zm - 2.0 * c) / (dz * dz),
        r_theta_theta: (tp + tm - 2.0 * c) / (dth * dth),
        r_z_theta: ((p.r(i + 1, kp) + p.r(i - 1, km)) - (p.r(i + 1, km) + p.r(i - 1, kp)))
            / (4.0 * dz * dth),
    })
}

/// Centered differences at interior node `(i, k)`.
pub fn cart_derivs(p: &CartesianPatch, i: usize, k: usize) -> Result<CartDerivs> {
    if i < 1 || i > p.nx() - 2 || k < 1 || k > p.ny() - 2 {
        return Err(Error::Parameter(format!(
            "cart_derivs needs an interior node, got ({i}, {k}) with grid {}x{}",
            p.nx(),
            p.ny()
        )));
    }
    let dx = p.dx();
    let dy = p.dy();

    let c = p.z(i, k);
    let xp = p.z(i + 1, k);
    let xm = p.z(i - 1, k);
    let yp = p.z(i, k + 1);
    let ym = p.z(i, k - 1);

    Ok(CartDerivs {
        z_x: (xp - xm) / (2.0 * dx),
        z_y: (yp - ym) / (2.0 * dy),
        z_xx: (xp + xm - 2.0 * c) / (dx * dx),
        z_yy: (yp + ym - 2.0 * c) / (dy * dy),
        z_xy: ((p.z(i + 1, k + 1) + p.z(i - 1, k - 1)) - (p.z(i + 1, k - 1) + p.z(i - 1, k + 1)))
            / (4.0 * dx * dy),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::TAU;

    #[test]
    fn constant_field_has_zero_derivatives() {
        let p = CylindricalPatch::new(0.0, 1.0, 9, 8, 0.0, |_, _| 5.0).unwrap();
        let d = cyl_derivs(&p, 4, 3).unwrap();
        assert_eq!(d.r_z, 0.0);
        assert_eq!(d.r_theta, 0.0);
        assert_eq!(d.r_zz, 0.0);
        assert_eq!(d.r_theta_theta, 0.0);
        assert_eq!(d.r_z_theta, 0.0);
    }

    #[test]
    fn quadratic_in_z_is_exact() {
        let p = CylindricalPatch::new(0.1, 1.1, 21, 8, 0.0, |z, _| z * z).unwrap();
        for i in 1..p.nz() - 1 {
            let d = cyl_derivs(&p, i, 0).unwrap();
            assert!((d.r_zz - 2.0).abs() < 1e-10, "i = {i}: r_zz = {}", d.r_zz);
            assert!((d.r_z - 2.0 * p.z(i)).abs() < 1e-10);
        }
    }

    #[test]
    fn mixed_derivative_exact_on_z_theta_product() {
        // r = z * theta evaluated locally away from the wrap, where theta is
        // single-valued; the mixed stencil is exact on bilinear data.
        let p = CylindricalPatch::new(0.1, 1.1, 21, 32, 0.0, |z, th| 2.0 + z * th).unwrap();
        let k = 8; // theta strictly inside (0, 2pi), neighbors unwrapped
        let d = cyl_derivs(&p, 10, k).unwrap();
        assert!((d.r_z_theta - 1.0).abs() < 1e-9, "got {}", d.r_z_theta);
    }

    #[test]
    fn angular_wrap_is_bitwise() {
        let p = CylindricalPatch::new(0.0, 1.0, 9, 16, 0.0, |z, th| 2.5 + 0.3 * th.sin() + z * th.cos()).unwrap();
        for i in 1..p.nz() - 1 {
            let a = cyl_derivs(&p, i, 0).unwrap();
            let b = cyl_derivs(&p, i, p.ntheta()).unwrap();
            assert_eq!(a.r_z.to_bits(), b.r_z.to_bits());
            assert_eq!(a.r_theta.to_bits(), b.r_theta.to_bits());
            assert_eq!(a.r_zz.to_bits(), b.r_zz.to_bits());
            assert_eq!(a.r_theta_theta.to_bits(), b.r_theta_theta.to_bits());
            assert_eq!(a.r_z_theta.to_bits(), b.r_z_theta.to_bits());
        }
    }

    #[test]
    fn boundary_row_is_an_index_error() {
        let p = CylindricalPatch::new(0.0, 1.0, 9, 8, 0.0, |_, _| 1.0).unwrap();
        assert!(cyl_derivs(&p, 0, 0).is_err());
        assert!(cyl_derivs(&p, p.nz() - 1, 0).is_err());
        let c = CartesianPatch::new(1.0, 9, 9, 0.0, |_, _| 0.0).unwrap();
        assert!(cart_derivs(&c, 0, 3).is_err());
        assert!(cart_derivs(&c, 3, 8).is_err());
    }

    #[test]
    fn linear_cartesian_field_is_exact() {
        let p = CartesianPatch::new(2.0, 17, 17, 0.0, |x, y| 1.0 + 2.0 * x + 3.0 * y).unwrap();
        let d = cart_derivs(&p, 8, 8).unwrap();
        assert!((d.z_x - 2.0).abs() < 1e-12);
        assert!((d.z_y - 3.0).abs() < 1e-12);
        assert!(d.z_xx.abs() < 1e-10);
        assert!(d.z_yy.abs() < 1e-10);
        assert!(d.z_xy.abs() < 1e-10);
    }

    #[test]
    fn mixed_stencil_exact_on_xy() {
        let p = CartesianPatch::new(2.0, 17, 17, 0.0, |x, y| x * y).unwrap();
        for i in 1..16 {
            for k in 1..16 {
                let d = cart_derivs(&p, i, k).unwrap();
                assert!((d.z_xy - 1.0).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn second_derivative_of_sine_within_taylor_bound() {
        // dx = 1e-2: |error| <= dx^2 / 12 * max|z''''| ~ 8.3e-6 < 1e-5.
        let n = 201;
        let p = CartesianPatch::new(2.0, n, n, 0.0, |x, _| x.sin()).unwrap();
        for i in 1..n - 1 {
            let d = cart_derivs(&p, i, n / 2).unwrap();
            let exact = -p.x(i).sin();
            assert!((d.z_xx - exact).abs() < 1e-5, "i = {i}");
        }
    }

    #[test]
    fn convergence_is_second_order() {
        let f = |z: f64, th: f64| 1.5 + 0.2 * (2.0 * z).sin() * (3.0 * th).cos();
        let exact_zz = |z: f64, th: f64| -0.8 * (2.0 * z).sin() * (3.0 * th).cos();
        let exact_tt = |z: f64, th: f64| -1.8 * (2.0 * z).sin() * (3.0 * th).cos();
        let worst = |nz: usize, nth: usize| -> (f64, f64) {
            let p = CylindricalPatch::new(0.0, 1.0, nz, nth, 0.0, f).unwrap();
            let mut wz: f64 = 0.0;
            let mut wt: f64 = 0.0;
            for i in 1..nz - 1 {
                for k in 0..nth {
                    let d = cyl_derivs(&p, i, k).unwrap();
                    let th = k as f64 * TAU / nth as f64;
                    wz = wz.max((d.r_zz - exact_zz(p.z(i), th)).abs());
                    wt = wt.max((d.r_theta_theta - exact_tt(p.z(i), th)).abs());
                }
            }
            (wz, wt)
        };
        let (ez1, et1) = worst(33, 16);
        let (ez2, et2) = worst(65, 32);
        let rz = ez1 / ez2;
        let rt = et1 / et2;
        assert!(rz > 3.5 && rz < 4.5, "z ratio {rz}");
        assert!(rt > 3.5 && rt < 4.5, "theta ratio {rt}");
    }
}
