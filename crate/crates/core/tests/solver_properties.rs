use std::f64::consts::FRAC_PI_4;

use serrin_core::fem::riemannian_norm;
use serrin_core::mesh::{FourierMode, StarDomain};
use serrin_core::radial::{pohozaev_ball_check, radial_solution};
use serrin_core::verify::DomainAnalysis;
use serrin_core::Curvature;

const TOL: f64 = 1e-10;

fn ball_radius(k: Curvature) -> f64 {
    if k == Curvature::Spherical {
        FRAC_PI_4
    } else {
        1.0
    }
}

fn perturbed(k: Curvature, eps: f64) -> StarDomain {
    StarDomain::new(k, ball_radius(k), vec![FourierMode::cos(3, eps)])
}

#[test]
fn balls_match_the_radial_oracle_at_level_three() {
    for k in Curvature::ALL {
        let radius = ball_radius(k);
        let exact = radial_solution(k, 2, radius).unwrap();
        let a = DomainAnalysis::at_level(&StarDomain::ball(k, radius), 3, TOL).unwrap();

        assert!((a.stats.mean - exact.c()).abs() <= 5e-3, "K = {k}: c_mean {}", a.stats.mean);
        assert!(a.stats.std <= 5e-3);
        let c2 = exact.c() * exact.c();
        let p_dev = a.p.values.iter().map(|p| (p - c2).abs()).fold(0.0, f64::max);
        assert!(p_dev <= 5e-3, "K = {k}: |P − c²| = {p_dev}");
        assert!(a.max_principle.margin.abs() <= 5e-3);

        let oracle = pohozaev_ball_check(&exact, 64).unwrap();
        assert!(a.pohozaev.relative_residual <= 1e-2);
        assert!((a.pohozaev.lhs - oracle.lhs).abs() <= 1e-2 * oracle.lhs);
        assert!((a.pohozaev.rhs - oracle.rhs).abs() <= 1e-2 * oracle.rhs);
    }
}

#[test]
fn ball_errors_shrink_under_refinement() {
    let domain = StarDomain::ball(Curvature::Flat, 1.0);
    let l3 = DomainAnalysis::at_level(&domain, 3, TOL).unwrap();
    let l4 = DomainAnalysis::at_level(&domain, 4, TOL).unwrap();
    let (e3, e4) = (l3.radial_errors.unwrap(), l4.radial_errors.unwrap());
    assert!(e3.linf <= 5e-4);
    assert!(e4.linf <= e3.linf / 3.0, "{} vs {}", e4.linf, e3.linf);
    assert!(e4.l2 < e3.l2);
    assert!(l4.pohozaev.relative_residual <= 3e-3);

    let dev = |a: &DomainAnalysis| a.p.values.iter().map(|p| (p - 0.25).abs()).fold(0.0, f64::max);
    assert!(dev(&l4) < dev(&l3));
}

#[test]
fn solution_is_positive_inside_every_tested_domain() {
    for k in Curvature::ALL {
        for eps in [0.0, 0.1, 0.2] {
            let a = DomainAnalysis::at_level(&perturbed(k, eps), 2, TOL).unwrap();
            for (i, v) in a.solved.field.values.iter().enumerate() {
                if a.mesh.is_boundary[i] {
                    assert_eq!(*v, 0.0);
                } else {
                    assert!(*v > 0.0, "K = {k}, eps = {eps}: v = {v} at node {i}");
                }
            }
        }
    }
}

#[test]
fn p_obeys_the_weak_maximum_principle() {
    for k in Curvature::ALL {
        for eps in [0.05, 0.2] {
            let a = DomainAnalysis::at_level(&perturbed(k, eps), 3, TOL).unwrap();
            assert!(a.max_principle.margin <= 5e-3, "K = {k}, eps = {eps}: {:?}", a.max_principle);
        }
    }
}

#[test]
fn strict_branch_on_a_perturbed_flat_domain() {
    let a = DomainAnalysis::at_level(&perturbed(Curvature::Flat, 0.2), 3, TOL).unwrap();
    let mp = a.max_principle;
    assert!(mp.margin <= 5e-3);
    assert!(mp.deep_interior_max < mp.boundary_max - 1e-3, "{mp:?}");

    let ball = DomainAnalysis::at_level(&StarDomain::ball(Curvature::Flat, 1.0), 3, TOL).unwrap();
    let ball_dev = ball.p.values.iter().map(|p| (p - 0.25).abs()).fold(0.0, f64::max);
    assert!(a.p_range() > 10.0 * ball_dev);
    assert!(a.stats.std > 10.0 * ball.stats.std);
}

#[test]
fn recovered_gradient_tracks_the_radial_derivative() {
    let k = Curvature::Hyperbolic;
    let exact = radial_solution(k, 2, 1.0).unwrap();
    let mut errors = Vec::new();
    for level in [1, 2, 3] {
        let a = DomainAnalysis::at_level(&StarDomain::ball(k, 1.0), level, TOL).unwrap();
        let err = (0..a.mesh.num_nodes())
            .map(|i| {
                let g = riemannian_norm(k, a.mesh.nodes[i], a.gradients[i]);
                (g - exact.derivative(a.mesh.geodesic_radius_of(i)).abs()).abs()
            })
            .fold(0.0, f64::max);
        errors.push(err);
    }
    assert!(errors.windows(2).all(|w| w[1] < 0.7 * w[0]), "{errors:?}");
}

#[test]
fn solves_are_bit_for_bit_repeatable() {
    let domain = StarDomain::new(Curvature::Spherical, 1.0, vec![FourierMode::cos(2, 0.1), FourierMode::cos(5, -0.03)]);
    let a = DomainAnalysis::at_level(&domain, 2, TOL).unwrap();
    let b = DomainAnalysis::at_level(&domain, 2, TOL).unwrap();
    assert_eq!(a.solved, b.solved);
    assert_eq!(a.trace, b.trace);
    assert_eq!(serde_json::to_string(&a.report()).unwrap(), serde_json::to_string(&b.report()).unwrap());
}

#[test]
fn report_round_trips_through_json() {
    let a = DomainAnalysis::at_level(&perturbed(Curvature::Hyperbolic, 0.1), 1, TOL).unwrap();
    let report = a.report();
    assert!(report.linf_error.is_none());
    let value: serde_json::Value = serde_json::to_value(&report).unwrap();
    for key in ["c_mean", "c_std", "P_boundary_max", "P_interior_max", "P_min", "pohozaev_lhs", "pohozaev_rhs"] {
        assert!(value[key].as_f64().unwrap().is_finite(), "{key}");
    }
    let back: serrin_core::verify::VerifyReport = serde_json::from_value(value).unwrap();
    assert_eq!(back, report);
}
