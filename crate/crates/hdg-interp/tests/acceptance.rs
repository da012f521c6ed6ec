//! Acceptance suite: one test per criterion, each printing a PASS/FAIL line.
//!
//! Run with `cargo test --test acceptance -- --nocapture` to see the lines.

mod common;

use common::{monolithic_solve, random_vector};
use hdg_interp::degree::{DegreeConfig, Variant};
use hdg_interp::mesh::Mesh;
use hdg_interp::operators::ElementOperators;
use hdg_interp::problem::ManufacturedProblem;
use hdg_interp::projector::{ElementProjector, ReferenceElements};
use hdg_interp::solve::{check_flux_continuity, solve_steady};
use hdg_interp::stepping::{integrate, DtPolicy, TimeConfig};
use hdg_interp::study::{run_sweep, SweepConfig, SweepResult};
use hdg_interp::system::CondensedSystem;
use nalgebra::DVector;
use rand::rngs::StdRng;
use rand::SeedableRng;
use std::sync::Arc;
use std::time::Instant;

fn report(criterion: &str, pass: bool, details: &str) {
    println!(
        "acceptance {criterion}: {} — {details}",
        if pass { "PASS" } else { "FAIL" }
    );
    assert!(pass, "{criterion}: {details}");
}

fn reference_sweep(variant: Variant, k: usize, policy: DtPolicy, levels: &[usize]) -> SweepResult {
    let config = DegreeConfig::new(variant, k).unwrap();
    let sweep = SweepConfig::new(levels.to_vec(), policy, 1.0);
    let result = run_sweep(config, &sweep, &ManufacturedProblem::chaffee_infante());
    assert!(result.all_ok(), "sweep failures: {:?}", result.failures);
    result
}

fn finest_rates(result: &SweepResult) -> (f64, f64, f64) {
    let last = result.rows.last().unwrap();
    (
        last.rate_flux.unwrap(),
        last.rate_scalar.unwrap(),
        last.rate_post.unwrap(),
    )
}

#[test]
fn criterion_01_table1_variant_a_k0() {
    let started = Instant::now();
    let result = reference_sweep(Variant::A, 0, DtPolicy::MeshParam, &[2, 4, 8, 16, 32]);
    let elapsed = started.elapsed().as_secs_f64();
    let (rq, ru, rp) = finest_rates(&result);
    let last = result.rows.last().unwrap();
    let rates_ok =
        (rq - 0.98).abs() <= 0.15 && (ru - 2.00).abs() <= 0.15 && (rp - 2.00).abs() <= 0.15;
    let anchors = [(last.err_flux, 8.12e-2), (last.err_scalar, 1.56e-3), (last.err_post, 1.56e-3)];
    let magnitudes_ok = anchors
        .iter()
        .all(|(got, want)| *got <= 3.0 * want && *got >= want / 3.0);
    let factorizations_ok = result.rows.iter().all(|r| r.factorizations == 1);
    let time_ok = elapsed < 60.0;
    report(
        "criterion 1 (reference convergence history, HDG (A), k=0)",
        rates_ok && magnitudes_ok && factorizations_ok && time_ok,
        &format!(
            "rates ({rq:.2}, {ru:.2}, {rp:.2}), finest errors ({:.3e}, {:.3e}, {:.3e}), {elapsed:.1}s",
            last.err_flux, last.err_scalar, last.err_post
        ),
    );
}

#[test]
fn criterion_02_table1_variant_a_k1() {
    let started = Instant::now();
    let result = reference_sweep(Variant::A, 1, DtPolicy::MeshParamSquared, &[2, 4, 8, 16, 32]);
    let elapsed = started.elapsed().as_secs_f64();
    let (rq, ru, rp) = finest_rates(&result);
    let rates_ok =
        (rq - 2.00).abs() <= 0.15 && (ru - 3.00).abs() <= 0.15 && (rp - 3.00).abs() <= 0.15;
    let factorizations_ok = result.rows.iter().all(|r| r.factorizations == 1);
    let time_ok = elapsed < 600.0;
    report(
        "criterion 2 (reference convergence history, HDG (A), k=1, dt=h^2)",
        rates_ok && factorizations_ok && time_ok,
        &format!("rates ({rq:.2}, {ru:.2}, {rp:.2}), {elapsed:.1}s for 1024 steps at n=32"),
    );
}

#[test]
fn criterion_03_superconvergence_variant_b_k0() {
    let result = reference_sweep(Variant::B, 0, DtPolicy::MeshParam, &[2, 4, 8, 16, 32]);
    let (_, ru, rp) = finest_rates(&result);
    let ok = (rp - 2.00).abs() <= 0.15 && (ru - 1.00).abs() <= 0.15;
    report(
        "criterion 3 (HDG (B), k=0 superconvergence)",
        ok,
        &format!("scalar rate {ru:.2} (target 1.00), reconstruction rate {rp:.2} (target 2.00)"),
    );
}

#[test]
fn criterion_04_variant_c_rate_dichotomy() {
    let c1 = reference_sweep(Variant::C, 1, DtPolicy::MeshParam, &[2, 4, 8, 16, 32]);
    let (_, _, rp1) = finest_rates(&c1);
    let c2 = reference_sweep(Variant::C, 2, DtPolicy::MeshParamSquared, &[2, 4, 8, 16, 32]);
    let (_, _, rp2) = finest_rates(&c2);
    let last2 = c2.rows.last().unwrap();
    let anchor = 2.47e-7;
    let ok = (rp1 - 2.00).abs() <= 0.15
        && (rp2 - 4.00).abs() <= 0.15
        && last2.err_post <= 3.0 * anchor
        && last2.err_post >= anchor / 3.0;
    report(
        "criterion 4 (HDG (C) rate dichotomy)",
        ok,
        &format!(
            "k=1 reconstruction rate {rp1:.2} (target 2.00), k=2 rate {rp2:.2} (target 4.00), finest error {:.3e} vs 2.47e-7",
            last2.err_post
        ),
    );
}

#[test]
fn criterion_05_condensation_matches_monolithic_oracle() {
    let mut worst: f64 = 0.0;
    for k in 0..=2usize {
        for variant in [Variant::A, Variant::B, Variant::C] {
            if variant == Variant::C && k == 0 {
                continue;
            }
            let config = DegreeConfig::new(variant, k).unwrap();
            for n in [1usize, 2, 4] {
                for sigma in [0.0, 1.0] {
                    let mesh = Mesh::uniform_unit_square(n).unwrap();
                    let refs = Arc::new(ReferenceElements::new(config).unwrap());
                    let ops = ElementOperators::build_all(&mesh, &refs).unwrap();
                    let system = CondensedSystem::build(&mesh, &ops, sigma).unwrap();
                    let scalar_rhs: Vec<DVector<f64>> = ops
                        .iter()
                        .map(|op| op.source_moments(|x, y| 1.0 + (2.0 * x + y).sin()))
                        .collect();
                    let face_rhs = vec![0.0; system.n_trace_dofs()];
                    let (flux, scalar, trace) = system.solve(&mesh, &scalar_rhs, &face_rhs);
                    let (mflux, mscalar, mtrace) =
                        monolithic_solve(&mesh, &ops, sigma, &scalar_rhs, &face_rhs);
                    let mut scale: f64 = 1e-30;
                    for v in &trace {
                        scale = scale.max(v.abs());
                    }
                    for e in 0..mesh.n_elements() {
                        scale = scale.max(flux[e].amax()).max(scalar[e].amax());
                    }
                    let mut diff: f64 = 0.0;
                    for (a, b) in trace.iter().zip(&mtrace) {
                        diff = diff.max((a - b).abs());
                    }
                    for e in 0..mesh.n_elements() {
                        diff = diff.max((&flux[e] - &mflux[e]).amax());
                        diff = diff.max((&scalar[e] - &mscalar[e]).amax());
                    }
                    worst = worst.max(diff / scale);
                }
            }
        }
    }
    report(
        "criterion 5 (condensed = monolithic)",
        worst <= 1e-10,
        &format!("worst relative difference {worst:.3e} over all variant/degree/mesh/sigma"),
    );
}

#[test]
fn criterion_06_postprocessing_identity_suite() {
    let mut worst_identity: f64 = 0.0;
    let mut worst_reproduction: f64 = 0.0;
    let mut rng = StdRng::seed_from_u64(2718);
    for k in 0..=3usize {
        for variant in [Variant::A, Variant::B, Variant::C] {
            if variant == Variant::C && k == 0 {
                continue;
            }
            let config = DegreeConfig::new(variant, k).unwrap();
            let mesh = Mesh::uniform_unit_square(2).unwrap();
            let refs = Arc::new(ReferenceElements::new(config).unwrap());
            let p = ElementProjector::new(&mesh, 3, Arc::clone(&refs)).unwrap();
            let exps: Vec<(i32, i32)> = (0..=(k + 1))
                .flat_map(|d| (0..=d).map(move |b| ((d - b) as i32, b as i32)))
                .collect();
            for _ in 0..50 {
                // Scalar-projection identity on random inputs.
                let scalar = random_vector(&mut rng, refs.scalar_dim());
                let traces = [
                    random_vector(&mut rng, refs.face_dim()),
                    random_vector(&mut rng, refs.face_dim()),
                    random_vector(&mut rng, refs.face_dim()),
                ];
                let post = p.postprocess(&scalar, &traces);
                for i in 0..refs.scalar_dim() {
                    worst_identity = worst_identity.max((post[i] - scalar[i]).abs());
                }
                // Reproduction of degree-(k+1) polynomials.
                let coeffs: Vec<f64> = (0..exps.len())
                    .map(|_| rand::Rng::random_range(&mut rng, -1.0..1.0))
                    .collect();
                let poly = |x: f64, y: f64| -> f64 {
                    exps.iter()
                        .zip(&coeffs)
                        .map(|((a, b), c)| c * x.powi(*a) * y.powi(*b))
                        .sum()
                };
                let projected = p.postprocessed_projection(poly);
                for &(xr, yr) in &[(0.25, 0.25), (0.7, 0.2)] {
                    let xy = p.geometry.to_physical(xr, yr);
                    worst_reproduction = worst_reproduction
                        .max((p.eval_scalar(&projected, xy[0], xy[1]) - poly(xy[0], xy[1])).abs());
                }
            }
        }
    }
    report(
        "criterion 6 (postprocessing identities)",
        worst_identity <= 1e-11 && worst_reproduction <= 1e-11,
        &format!(
            "scalar-projection identity {worst_identity:.3e}, degree reproduction {worst_reproduction:.3e}"
        ),
    );
}

#[test]
fn criterion_07_projection_contraction() {
    let mut rng = StdRng::seed_from_u64(314);
    let mut worst_excess: f64 = 0.0;
    for k in 0..=3usize {
        for variant in [Variant::A, Variant::B, Variant::C] {
            if variant == Variant::C && k == 0 {
                continue;
            }
            let config = DegreeConfig::new(variant, k).unwrap();
            let mesh = Mesh::uniform_unit_square(2).unwrap();
            let refs = Arc::new(ReferenceElements::new(config).unwrap());
            let p = ElementProjector::new(&mesh, 1, Arc::clone(&refs)).unwrap();
            let rule = hdg_interp::quadrature::triangle_rule(2 * (k + 1) + 6).unwrap();
            for _ in 0..100 {
                let w = random_vector(&mut rng, refs.post_dim());
                let head = w.rows(0, refs.scalar_dim()).into_owned();
                let norm_of = |c: &DVector<f64>| -> f64 {
                    rule.points
                        .iter()
                        .zip(&rule.weights)
                        .map(|(pt, wq)| {
                            let xy = p.geometry.to_physical(pt[0], pt[1]);
                            let v = p.eval_scalar(c, xy[0], xy[1]);
                            wq * p.geometry.det * v * v
                        })
                        .sum::<f64>()
                        .sqrt()
                };
                worst_excess = worst_excess.max(norm_of(&head) - norm_of(&w));
            }
        }
    }
    report(
        "criterion 7 (scalar projection contraction)",
        worst_excess <= 1e-12,
        &format!("largest norm excess {worst_excess:.3e}"),
    );
}

#[test]
fn criterion_08_assemble_once() {
    let problem = ManufacturedProblem::chaffee_infante();
    let cases = [
        (Variant::A, 0usize, DtPolicy::MeshParam),
        (Variant::A, 1, DtPolicy::MeshParamSquared),
        (Variant::B, 0, DtPolicy::MeshParam),
        (Variant::B, 1, DtPolicy::MeshParamSquared),
        (Variant::C, 1, DtPolicy::MeshParam),
        (Variant::C, 2, DtPolicy::MeshParamSquared),
    ];
    let mut all_one = true;
    let mut details = String::new();
    for (variant, k, policy) in cases {
        let config = DegreeConfig::new(variant, k).unwrap();
        for n in [2usize, 4, 8] {
            let mesh = Mesh::uniform_unit_square(n).unwrap();
            let refs = Arc::new(ReferenceElements::new(config).unwrap());
            let ops = ElementOperators::build_all(&mesh, &refs).unwrap();
            let dt = policy.dt(Some(n)).unwrap();
            let time = TimeConfig::new(1.0, dt).unwrap();
            let (_, stats) = integrate(&mesh, &ops, &time, &problem).unwrap();
            if stats.factorizations != 1 {
                all_one = false;
                details.push_str(&format!(
                    "{variant:?} k={k} n={n}: {} factorizations; ",
                    stats.factorizations
                ));
            }
        }
    }
    report(
        "criterion 8 (assemble-once)",
        all_one,
        if details.is_empty() {
            "factorization counter = 1 in every integrate call"
        } else {
            &details
        },
    );
}

#[test]
fn criterion_09_temporal_order_richardson() {
    // F = 0, smooth data, fixed n=8 k=2 mesh; Richardson on dt halving.
    let config = DegreeConfig::new(Variant::A, 2).unwrap();
    let mesh = Mesh::uniform_unit_square(8).unwrap();
    let refs = Arc::new(ReferenceElements::new(config).unwrap());
    let ops = ElementOperators::build_all(&mesh, &refs).unwrap();
    let problem = ManufacturedProblem::linear_sine();
    let mut states = Vec::new();
    for dt in [0.1, 0.05, 0.025] {
        let time = TimeConfig::new(1.0, dt).unwrap();
        let (state, _) = integrate(&mesh, &ops, &time, &problem).unwrap();
        states.push(state);
    }
    let diff = |a: &hdg_interp::FieldState, b: &hdg_interp::FieldState| -> f64 {
        a.scalar
            .iter()
            .zip(&b.scalar)
            .map(|(x, y)| (x - y).norm_squared())
            .sum::<f64>()
            .sqrt()
    };
    let d01 = diff(&states[0], &states[1]);
    let d12 = diff(&states[1], &states[2]);
    let order = (d01 / d12).log2();
    report(
        "criterion 9 (temporal order)",
        (order - 2.0).abs() <= 0.2,
        &format!("Richardson estimate {order:.3} (target 2.0 +/- 0.2)"),
    );
}

#[test]
fn criterion_10_flux_continuity_residuals() {
    // Steady solves across configurations.
    let mut worst: f64 = 0.0;
    for k in 0..=2usize {
        for variant in [Variant::A, Variant::B, Variant::C] {
            if variant == Variant::C && k == 0 {
                continue;
            }
            let config = DegreeConfig::new(variant, k).unwrap();
            let mesh = Mesh::uniform_unit_square(4).unwrap();
            let refs = Arc::new(ReferenceElements::new(config).unwrap());
            let ops = ElementOperators::build_all(&mesh, &refs).unwrap();
            let system = CondensedSystem::build(&mesh, &ops, 0.0).unwrap();
            let state = solve_steady(&mesh, &ops, &system, |x, y| 1.0 + x * y).unwrap();
            let face_rhs = vec![0.0; system.n_trace_dofs()];
            let (residual, scale) = check_flux_continuity(&mesh, &ops, &system, &state, &face_rhs);
            worst = worst.max(residual / scale.max(1e-30));
        }
    }
    // Every converged time step of a nonlinear run.
    let config = DegreeConfig::new(Variant::B, 1).unwrap();
    let mesh = Mesh::uniform_unit_square(8).unwrap();
    let refs = Arc::new(ReferenceElements::new(config).unwrap());
    let ops = ElementOperators::build_all(&mesh, &refs).unwrap();
    let time = TimeConfig::new(1.0, 0.125).unwrap();
    let (_, stats) = integrate(&mesh, &ops, &time, &ManufacturedProblem::chaffee_infante()).unwrap();
    worst = worst.max(stats.max_flux_residual);
    report(
        "criterion 10 (flux continuity)",
        worst <= 1e-9,
        &format!("largest relative residual {worst:.3e}"),
    );
}
