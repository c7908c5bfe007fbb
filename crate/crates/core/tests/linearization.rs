use twoscale::dynamics::Problem;
use twoscale::grid::laplacian_neumann;
use twoscale::linearization::{linearized_apply, remainder_apply, rhs_increment, sample_admissible_perturbation};
use twoscale::{
    relax_to_equilibrium, DemagModel, DomainMask, DtPolicy, EllipsoidSpec, FieldSchedule, Grid3, Integrator, SolverConfig, Vec3,
    VectorField,
};

fn relaxed_box() -> (Problem, VectorField) {
    let g = Grid3::centered_cube(6, 1.0).unwrap();
    let mask = DomainMask::full(&g);
    let p = Problem::new(g.clone(), mask, DemagModel::fft(&g), FieldSchedule::constant(2.5, Vec3::new(0.2, 0.1, 1.0).normalize()).unwrap())
        .unwrap();
    let cfg = SolverConfig::new(1.0, 0.7, 1.0, Integrator::SemiImplicitSpectral, DtPolicy::Fixed(0.05)).unwrap();
    let r = relax_to_equilibrium(&p, &p.uniform(Vec3::z()), 0.0, 1e-10, 300.0, &cfg).unwrap();
    assert!(r.converged, "residual {}", r.residual);
    (p, r.field)
}

fn rel_defect(a: &VectorField, b: &VectorField) -> f64 {
    a.sub(b).max_norm() / a.max_norm().max(b.max_norm())
}

#[test]
fn increment_splits_into_linear_part_and_remainder_on_a_grid() {
    let (p, meq) = relaxed_box();
    for seed in 0..4 {
        let d = sample_admissible_perturbation(&p.grid, &p.mask, &meq, 0.2, seed).unwrap().delta;
        let lhs = rhs_increment(&p, 0.0, &meq, &d, 0.7).unwrap();
        let rhs = linearized_apply(&p, 0.0, &meq, &d, 0.7).unwrap().add(&remainder_apply(&p, 0.0, &meq, &d, 0.7).unwrap());
        assert!(rel_defect(&lhs, &rhs) < 1e-12, "seed {seed}: {}", rel_defect(&lhs, &rhs));
    }
}

#[test]
fn adding_the_diffusion_increment_shifts_the_split_by_exactly_that_term() {
    let (p, meq) = relaxed_box();
    let alpha = 0.7;
    let d = sample_admissible_perturbation(&p.grid, &p.mask, &meq, 0.2, 3).unwrap().delta;
    let lap = laplacian_neumann(&d, &p.grid, &p.mask).unwrap();
    let mut with_diffusion = rhs_increment(&p, 0.0, &meq, &d, alpha).unwrap();
    with_diffusion.axpy(alpha, &lap);
    let split = linearized_apply(&p, 0.0, &meq, &d, alpha).unwrap().add(&remainder_apply(&p, 0.0, &meq, &d, alpha).unwrap());
    let gap = with_diffusion.sub(&split);
    assert!(rel_defect(&gap, &lap.scale(alpha)) < 1e-12);
    assert!(lap.max_norm() > 1e-3);
}

#[test]
fn remainder_is_quadratic_on_an_ellipsoid() {
    let spec = EllipsoidSpec::new(1.0, 0.8, 0.7).unwrap();
    let g = spec.bounding_grid(8).unwrap();
    let mask = DomainMask::ellipsoid(&g, &spec).unwrap();
    let p = Problem::new(g.clone(), mask, DemagModel::fft(&g), FieldSchedule::constant(4.0, Vec3::x()).unwrap()).unwrap();
    let cfg = SolverConfig::new(1.0, 1.0, 1.0, Integrator::SemiImplicitSpectral, DtPolicy::Fixed(0.05)).unwrap();
    let meq = relax_to_equilibrium(&p, &p.uniform(Vec3::x()), 0.0, 1e-10, 300.0, &cfg).unwrap().field;
    let norm = |s: f64| {
        let d = sample_admissible_perturbation(&p.grid, &p.mask, &meq, s, 5).unwrap().delta;
        remainder_apply(&p, 0.0, &meq, &d, 1.0).unwrap().max_norm()
    };
    let slope = (norm(1e-2) / norm(1e-4)).ln() / 100f64.ln();
    assert!((slope - 2.0).abs() < 0.05, "slope {slope}");
}
