mod common;

use common::*;
use nalgebra::DVector;
use proptest::prelude::*;
use rand::Rng;
use tubecert::ctrl::spectral_radius;
use tubecert::tubes::{certify, check_rpi, mrpi_approx, rpi_directions, square_box_pi_exists};
use tubecert::{Conclusion, ConvexSet, TubeOptions, Zonotope};

fn disturbance(r: &mut rand_chacha::ChaCha8Rng, n: usize) -> ConvexSet {
    if r.random_bool(0.5) {
        ConvexSet::hpolytope(random_box(r, n, 0.05, 1.0))
    } else {
        let gens = r.random_range(1..4);
        let g = random_matrix(r, n, gens, 0.5);
        ConvexSet::zonotope(Zonotope::new(DVector::zeros(n), g).unwrap())
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn rpi_sets_pass_the_invariance_check(seed in any::<u64>(), n in 1usize..=3) {
        let mut r = rng(seed);
        let rho = r.random_range(0.05..0.9);
        let f = random_schur(&mut r, n, rho);
        let w = disturbance(&mut r, n);
        let set = mrpi_approx(&f, &w, 1e-3, 2000).unwrap();
        let res = check_rpi(&f, &w, &set.z, &rpi_directions(&w, &set.z)).unwrap();
        prop_assert!(res <= 1e-8, "residual {res}");
    }

    #[test]
    fn tighter_eps_never_grows_the_set(seed in any::<u64>(), n in 1usize..=2) {
        let mut r = rng(seed);
        let rho = r.random_range(0.05..0.9);
        let f = random_schur(&mut r, n, rho);
        let w = disturbance(&mut r, n);
        let eps2 = r.random_range(1e-3..1e-1);
        let eps1 = eps2 * r.random_range(0.01..1.0);
        let z1 = mrpi_approx(&f, &w, eps1, 2000).unwrap();
        let z2 = mrpi_approx(&f, &w, eps2, 2000).unwrap();
        for _ in 0..32 {
            let d = random_unit(&mut r, n);
            let slack = (eps1 + 1e-9) * d.lp_norm(1);
            prop_assert!(z1.z.support(&d).unwrap() <= z2.z.support(&d).unwrap() + slack);
        }
    }

    #[test]
    fn certified_networks_are_stable(seed in any::<u64>()) {
        let mut r = rng(seed);
        let (net, gains) = random_scenario(&mut r);
        let opts = TubeOptions::default();
        let cert = certify("random", &net, &gains, &opts).unwrap();
        let rho = spectral_radius(&net.closed_loop(&gains).unwrap()).unwrap();
        prop_assert!((cert.report.global.rho - rho).abs() <= 1e-12);
        if cert.report.conclusion == Conclusion::Certified {
            prop_assert!(rho < 1.0, "certified with rho {rho}");
            let pi = cert.report.global.product_pi_residual.unwrap();
            prop_assert!(pi <= opts.tol, "product PI residual {pi}");
            for inc in &cert.report.inclusions {
                prop_assert!(inc.holds && inc.margin > 0.0, "{inc:?}");
            }
        }
    }

    #[test]
    fn box_pi_half_widths_are_invariant(seed in any::<u64>(), m in 1usize..=5) {
        let mut r = rng(seed);
        let scale = r.random_range(0.05..0.6);
        let f = random_matrix(&mut r, m, m, scale);
        let res = square_box_pi_exists(&f, &vec![1; m]).unwrap();
        let abs = f.map(f64::abs);
        prop_assert!((res.rho_abs - spectral_radius(&abs).unwrap()).abs() <= 1e-12);
        if let Some(a) = res.half_widths {
            let a = DVector::from_vec(a);
            prop_assert!(a.iter().all(|&v| v > 0.0));
            let image = &abs * &a;
            for k in 0..m {
                prop_assert!(image[k] <= a[k] * (1.0 + 1e-9));
            }
            // Corners of the box map into the box.
            for mask in 0..(1u32 << m) {
                let corner = DVector::from_fn(m, |k, _| if mask >> k & 1 == 1 { a[k] } else { -a[k] });
                let next = &f * corner;
                prop_assert!(next.iter().zip(a.iter()).all(|(x, h)| x.abs() <= h * (1.0 + 1e-9)));
            }
        } else {
            prop_assert!(res.rho_abs >= 1.0);
        }
    }
}
