//! Instrumented exploration runs; prints progress lines for tuning.
//!
//! Usage: explore <far|near> [key=value overrides...]

use mcf::config::RunConfig;
use mcf::diagnostics;
use mcf::driver;
use mcf::flow::{self, Termination};
use mcf::initial_data::{FarPerturbation, NearPerturbation, Perturbation};

fn main() {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let kind = args.first().map(String::as_str).unwrap_or("far");
    let mut cfg = RunConfig::default();
    let mut progress_stride = 5000u64;

    match kind {
        "far" => {
            cfg.nx = 65;
            cfg.ny = 65;
            cfg.nz = 129;
            cfg.ntheta = 64;
            cfg.mode_max = 6;
            cfg.perturbation = Perturbation::Far(FarPerturbation::new(0.1, 1.0, 2.2, 2).unwrap());
        }
        "near" => {
            cfg.nx = 161;
            cfg.ny = 161;
            cfg.nz = 193;
            cfg.ntheta = 64;
            cfg.mode_max = 4;
            cfg.z_max = Some(2.6);
            cfg.perturbation = Perturbation::Near(NearPerturbation::new(0.05, 20.0, 0.02).unwrap());
        }
        other => {
            eprintln!("unknown kind {other}");
            std::process::exit(1);
        }
    }
    for arg in &args[1.min(args.len())..] {
        let Some((k, v)) = arg.split_once('=') else { continue };
        match k {
            "nx" => {
                cfg.nx = v.parse().unwrap();
                cfg.ny = cfg.nx;
            }
            "nz" => cfg.nz = v.parse().unwrap(),
            "ntheta" => cfg.ntheta = v.parse().unwrap(),
            "safety" => cfg.safety = v.parse().unwrap(),
            "t_max" => cfg.t_max = v.parse().unwrap(),
            "r_min_floor" => cfg.r_min_floor = Some(v.parse().unwrap()),
            "z_max" => cfg.z_max = Some(v.parse().unwrap()),
            "a0" => {
                if let Perturbation::Far(p) = &mut cfg.perturbation {
                    *p = FarPerturbation::new(v.parse().unwrap(), p.z_a, p.z_b, p.n).unwrap();
                } else if let Perturbation::Near(p) = &mut cfg.perturbation {
                    *p = NearPerturbation::new(v.parse().unwrap(), p.a1, p.r_m).unwrap();
                }
            }
            "n" => {
                if let Perturbation::Far(p) = &mut cfg.perturbation {
                    *p = FarPerturbation::new(p.a0, p.z_a, p.z_b, v.parse().unwrap()).unwrap();
                }
            }
            "z_a" => {
                if let Perturbation::Far(p) = &mut cfg.perturbation {
                    *p = FarPerturbation::new(p.a0, v.parse().unwrap(), p.z_b, p.n).unwrap();
                }
            }
            "z_b" => {
                if let Perturbation::Far(p) = &mut cfg.perturbation {
                    *p = FarPerturbation::new(p.a0, p.z_a, v.parse().unwrap(), p.n).unwrap();
                }
            }
            "progress" => progress_stride = v.parse().unwrap(),
            other => {
                eprintln!("unknown override {other}");
                std::process::exit(1);
            }
        }
    }

    let params = driver::derive_from_config(&cfg).unwrap();
    eprintln!(
        "# params: beta={:.6e} r0={:.6e} T={:.6e} L={:.6e}",
        params.beta,
        params.r0,
        params.t_vanish,
        params.cart_side()
    );
    let built = driver::build_run(&cfg).unwrap();
    let mut state = built.state;
    eprintln!(
        "# built: z=[{:.4}, {:.4}] dz={:.4e} initial_mismatch={:.3e} far_row r={:.5e}",
        state.cyl.z_min(),
        state.cyl.z_max(),
        state.cyl.dz(),
        built.initial_mismatch,
        state.cyl.r(state.cyl.nz() - 1, 0)
    );
    let stop = driver::stop_criteria(&cfg, &params);
    let opts = driver::run_options(&cfg, &params, &state);
    eprintln!("# far_row_coef = {:.6}", opts.far_row_coef);

    println!("t,dt,r_min,z_at_min,band_r,tip_z,tip_a,side,z_min,mismatch,steps,regrids");
    let mut regrids = 0u64;
    let t0 = std::time::Instant::now();
    let band = match &cfg.perturbation {
        Perturbation::Far(p) => Some((p.z_a, p.z_b)),
        _ => None,
    };
    let mut last_print = 0u64;
    let outcome = flow::run(&mut state, &stop, &opts, |s, rep| {
        if rep.regridded {
            regrids += 1;
        }
        if s.step_count == 0 || s.step_count >= last_print + progress_stride {
            last_print = s.step_count;
            let (z_at, r_min) = diagnostics::neck_scan(&s.cyl);
            let band_r = band
                .map(|(a, b)| diagnostics::neck_scan_band(&s.cyl, a, b).1)
                .unwrap_or(f64::NAN);
            let (tip_a, _) = diagnostics::tip_curvature(&s.cart);
            let tip_z = s.cart.z(s.cart.nx() / 2, s.cart.ny() / 2);
            let mis = mcf::grids::measure_overlap_mismatch(&s.cart, &s.cyl, 128);
            println!(
                "{:.8e},{:.3e},{:.5e},{:.4},{:.5e},{:.4},{:.4e},{:.4e},{:.4},{:.3e},{},{}",
                s.t(),
                rep.dt,
                r_min,
                z_at,
                band_r,
                tip_z,
                tip_a,
                s.cart.side(),
                s.cyl.z_min(),
                mis,
                s.step_count,
                regrids
            );
        }
    });
    eprintln!(
        "# done: {} after {} steps, t_final={:.8e}, r_min={:.4e}, wall={:.1}s",
        outcome.termination.name(),
        outcome.steps,
        outcome.t_final,
        outcome.r_min_final,
        t0.elapsed().as_secs_f64()
    );
    if let Termination::Failed(e) = &outcome.termination {
        eprintln!("# error detail: {e}");
    }
}
