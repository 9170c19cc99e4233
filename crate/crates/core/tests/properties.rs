//! Randomized invariants.

use std::f64::consts::PI;

use adiabatic_sw::geometry::{anisotropic_deform, MacInvariants};
use adiabatic_sw::harness::fit_power_law;
use adiabatic_sw::lattice::{self, LatticeSpec, OneForm, SpinorField};
use adiabatic_sw::spinor::{self, Spinor};
use adiabatic_sw::sw::{classify_adiabatic, taubes_radius, ClassifierInput, TaubesProblem};
use adiabatic_sw::Complex64 as C;
use proptest::prelude::*;

fn unit_quaternion() -> impl Strategy<Value = [f64; 4]> {
    prop::array::uniform4(-1.0f64..1.0)
        .prop_filter("nonzero", |q| q.iter().map(|x| x * x).sum::<f64>() > 1e-3)
        .prop_map(|q| {
            let n = q.iter().map(|x| x * x).sum::<f64>().sqrt();
            q.map(|x| x / n)
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn tau_is_equivariant(q in unit_quaternion(), a in (-2.0f64..2.0, -2.0f64..2.0), b in (-2.0f64..2.0, -2.0f64..2.0)) {
        let u = spinor::quaternion(q);
        let phi = Spinor::new(C::new(a.0, a.1), C::new(b.0, b.1));
        let lhs = spinor::tau(&spinor::apply(&u, &phi));
        let rhs = spinor::matmul(&spinor::matmul(&u, &spinor::tau(&phi)), &spinor::adjoint(&u));
        prop_assert!(spinor::max_abs_diff(&lhs, &rhs) < 1e-12);
    }

    #[test]
    fn deformations_compose(lambda in -2.0f64..2.0, b in -2.0f64..2.0, sigma in -2.0f64..2.0, s in 0.1f64..10.0, t in 0.1f64..10.0) {
        let inv = MacInvariants::from_type(lambda, b, sigma, 1.0);
        let two = anisotropic_deform(&anisotropic_deform(&inv, s).unwrap(), t).unwrap();
        let one = anisotropic_deform(&inv, s * t).unwrap();
        let scale = 1.0 + s * t + 1.0 / (s * t);
        for (x, y) in [(two.lambda, one.lambda), (two.varphi, one.varphi), (two.b, one.b), (two.kappa, one.kappa), (two.scal, one.scal)] {
            prop_assert!((x - y).abs() <= 1e-10 * scale * scale, "{x} vs {y}");
        }
        prop_assert!((two.delta - s * t).abs() < 1e-12 * s * t);
    }

    #[test]
    fn taubes_radius_grows_with_eps0(mu in 0.5f64..5.0, kappa in 0.0f64..1.0, e1 in 0.0f64..1.0, e2 in 0.0f64..1.0) {
        let (lo, hi) = if e1 <= e2 { (e1, e2) } else { (e2, e1) };
        // Keep the discriminant nonnegative.
        let cap = if kappa > 0.0 { mu / (4.0 * kappa) } else { f64::INFINITY };
        let (lo, hi) = (lo.min(0.99 * cap), hi.min(0.99 * cap));
        let r = |eps0| taubes_radius(&TaubesProblem { mu, kappa, eps0 }).unwrap().r;
        let root = |eps0: f64| TaubesProblem { mu, kappa, eps0 }.root_radius();
        prop_assert!(r(lo) <= r(hi) + 1e-15);
        prop_assert!(root(lo) <= root(hi) + 1e-15);
        // The certified root is at least the linear estimate eps0 / mu.
        prop_assert!(root(hi) >= hi / mu - 1e-15);
    }

    #[test]
    fn fit_recovers_exponent(p in -3.0f64..3.0, c in 0.1f64..10.0, wobble in 0.0f64..0.01) {
        let pts: Vec<(f64, f64)> = [2.0f64, 4.0, 8.0, 16.0, 32.0]
            .iter()
            .map(|&x| (x, c * x.powf(p) * (1.0 + wobble * x.sin())))
            .collect();
        let fit = fit_power_law(&pts, None).unwrap();
        prop_assert!((fit.exponent - p).abs() < 0.02, "{} vs {p}", fit.exponent);
    }

    #[test]
    fn classifier_accepts_consistent_inputs(genus in 1i64..6, ell in -12i64..12, k in -20i64..20, torsion: bool, pullback: bool) {
        // At ell = 0 the torsion flag is determined by the degree.
        let consistent = ell != 0 || torsion == (k == 0);
        let input = if pullback {
            ClassifierInput::new(genus, ell, torsion, k)
        } else {
            ClassifierInput::not_pullback(genus, ell)
        };
        prop_assert_eq!(classify_adiabatic(&input).is_ok(), consistent || !pullback);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn dirac_is_gauge_covariant(seed in 0u64..1000, d in -2i64..=2, n in 4usize..7) {
        let lat = lattice::build_lattice(&LatticeSpec { l_degree: d, ..LatticeSpec::cube(n, 1, 2.0) }).unwrap();
        let g = lattice::reference_gauge(&lat).perturbed(&lat, &OneForm::smooth_random(&lat, seed, 1, 0.3));
        let phi = SpinorField::random(&lat, seed + 1);
        let theta: Vec<f64> = (0..lat.sites()).map(|s| 2.0 * PI * (((s as u64 * 2654435761 + seed) % 1000) as f64 / 1000.0)).collect();
        let gamma: Vec<C> = theta.iter().map(|t| C::from_polar(1.0, *t)).collect();
        let rot = |f: &SpinorField| SpinorField { n: f.n, data: f.data.iter().zip(&gamma).map(|(v, c)| v.scale(*c)).collect() };
        let lhs = lattice::apply_dirac(&lat, 2.0, &g.transform(&lat, &gamma), &rot(&phi)).unwrap();
        let rhs = rot(&lattice::apply_dirac(&lat, 2.0, &g, &phi).unwrap());
        let worst = lhs.data.iter().zip(&rhs.data).map(|(a, b)| (a.alpha - b.alpha).norm().max((a.beta - b.beta).norm())).fold(0.0, f64::max);
        prop_assert!(worst < 1e-12, "{worst}");
    }
}
