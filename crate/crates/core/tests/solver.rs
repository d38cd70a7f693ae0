use confine_core::fields::{Field, Moved, Polynomial, Term, VectorField};
use confine_core::geometry::ConvexBody;
use confine_core::monitors::{confinement_report, strictness_report, StrictnessClass};
use confine_core::solver::{
    endpoint_sensitivity, residual, solve_bvp_1d, solve_relax_2d, BoundaryData, FlowOptions,
    GridSpec, NewtonOptions, SolutionGrid,
};

const SQRT3_2: f64 = 0.8660254037844386;

fn kink_field() -> VectorField {
    VectorField::polynomial(
        Polynomial::new(
            1,
            vec![vec![
                Term {
                    coef: 1.0,
                    powers: vec![3],
                },
                Term {
                    coef: -1.0,
                    powers: vec![1],
                },
            ]],
        )
        .unwrap(),
    )
}

fn kink(n: usize) -> (SolutionGrid, f64) {
    let end = (20.0 / 2f64.sqrt()).tanh();
    let grid = GridSpec::interval(20.0, n);
    let bc = BoundaryData::interval(vec![-end], vec![end]);
    let sol = solve_bvp_1d(&kink_field(), grid, &bc, &NewtonOptions::default()).unwrap();
    let err = (0..n)
        .map(|i| (sol.values[i] - (grid.axis(i) / 2f64.sqrt()).tanh()).abs())
        .fold(0.0, f64::max);
    (sol, err)
}

#[test]
fn kink_converges_at_second_order() {
    let (coarse_sol, coarse) = kink(2001);
    let (fine_sol, fine) = kink(4001);
    assert!(coarse_sol.converged && fine_sol.converged);
    assert!(fine_sol.residual_norm <= 1e-10);
    let ratio = coarse / fine;
    assert!((3.5..=4.5).contains(&ratio), "ratio {ratio}");
    // The O(h²) error constant of the centered scheme is about 0.03 here.
    assert!(fine <= 3.5e-6, "error {fine}");
    let (_, finer) = kink(8001);
    assert!(finer <= 1e-6, "error {finer}");
}

#[test]
fn kink_is_insensitive_to_truncation() {
    let end = (20.0 / 2f64.sqrt()).tanh();
    let s = endpoint_sensitivity(
        &kink_field(),
        GridSpec::interval(20.0, 801),
        &[-end],
        &[end],
        &NewtonOptions::default(),
    )
    .unwrap();
    assert!(s <= 1e-6, "sensitivity {s}");
}

fn gp_wall(n: usize) -> SolutionGrid {
    let f = VectorField::gross_pitaevskii(1.0, 1.0, 2.0, 1.0).unwrap();
    let bc = BoundaryData::interval(vec![0.0, 1.0], vec![1.0, 0.0]);
    solve_bvp_1d(
        &f,
        GridSpec::interval(20.0, n),
        &bc,
        &NewtonOptions::default(),
    )
    .unwrap()
}

#[test]
fn gp_wall_stays_in_ellipse() {
    let sol = gp_wall(2001);
    assert!(sol.converged);
    assert!(sol.residual_norm <= 1e-10);
    let f = VectorField::gross_pitaevskii(1.0, 1.0, 2.0, 1.0).unwrap();
    assert!(residual(&sol, &f) <= 1e-10);
    let peak = sol
        .nodes()
        .map(|v| v[0] * v[0] + v[1] * v[1])
        .fold(0.0, f64::max);
    assert!(peak <= 1.0 + 1e-6);
    let body = ConvexBody::ball(2, 1.0).unwrap();
    let h = sol.grid.h();
    let report = strictness_report(&sol, &body, 10.0 * h * h).unwrap();
    let detail = report.strictness.unwrap();
    assert_eq!(detail.class, StrictnessClass::StrictlyInterior);
    assert!(detail.core_clearance > 0.0);
}

#[test]
fn newton_is_deterministic() {
    let a = gp_wall(501);
    let b = gp_wall(501);
    let bits = |s: &SolutionGrid| s.values.iter().map(|x| x.to_bits()).collect::<Vec<_>>();
    assert_eq!(bits(&a), bits(&b));
    assert_eq!(a.iterations, b.iterations);
}

#[test]
fn newton_reports_nonconvergence() {
    let f = VectorField::gross_pitaevskii(1.0, 1.0, 2.0, 1.0).unwrap();
    let bc = BoundaryData::interval(vec![0.0, 1.0], vec![1.0, 0.0]);
    let opts = NewtonOptions {
        max_iter: 1,
        ..NewtonOptions::default()
    };
    let sol = solve_bvp_1d(&f, GridSpec::interval(20.0, 401), &bc, &opts).unwrap();
    assert!(!sol.converged);
    assert!(sol.residual_norm > opts.tol);
    assert_eq!(sol.residual_norm, residual(&sol, &f));
}

#[test]
fn wall_rotates_with_state_space() {
    let f = VectorField::gross_pitaevskii(1.0, 1.0, 2.0, 1.0).unwrap();
    let t: f64 = 0.9;
    let q = vec![t.cos(), -t.sin(), t.sin(), t.cos()];
    let moved = Moved::new(f.clone(), q.clone(), vec![0.0, 0.0]);
    let grid = GridSpec::interval(15.0, 601);
    let (l, r) = ([0.0, 1.0], [1.0, 0.0]);
    let base = solve_bvp_1d(
        &f,
        grid,
        &BoundaryData::interval(l.to_vec(), r.to_vec()),
        &NewtonOptions::default(),
    )
    .unwrap();
    let bc = BoundaryData::interval(moved.to_moved(&l), moved.to_moved(&r));
    let turned = solve_bvp_1d(&moved, grid, &bc, &NewtonOptions::default()).unwrap();
    assert!(turned.converged);
    for (u, w) in base.nodes().zip(turned.nodes()) {
        let qu = moved.to_moved(u);
        assert!((qu[0] - w[0]).abs() <= 1e-9 && (qu[1] - w[1]).abs() <= 1e-9);
    }
}

fn arc_data(grid: &GridSpec, wells: [[f64; 2]; 3]) -> BoundaryData {
    BoundaryData::square_from_fn(grid, 2, |x, y| {
        let th = y.atan2(x);
        let third = std::f64::consts::PI / 3.0;
        let k = if th.abs() < third {
            0
        } else if th > 0.0 {
            1
        } else {
            2
        };
        wells[k].to_vec()
    })
}

#[test]
fn triple_junction_stays_in_triangle() {
    let wells = [[1.0, 0.0], [-0.5, SQRT3_2], [-0.5, -SQRT3_2]];
    let f = VectorField::allen_cahn(wells[0], wells[1], wells[2]).unwrap();
    let tri = ConvexBody::triangle(wells[0], wells[1], wells[2]).unwrap();
    let kappa = 1.0;
    for n in [17, 33] {
        let grid = GridSpec::square(5.0, n);
        let sol =
            solve_relax_2d(&f, grid, &arc_data(&grid, wells), &FlowOptions::default()).unwrap();
        assert!(sol.converged);
        assert!(residual(&sol, &f) <= 1e-9);
        let h = grid.h();
        let report = confinement_report(&sol, &tri, kappa * h * h).unwrap();
        assert!(report.pass, "n = {n}: max d = {}", report.extremum);
    }
}

#[test]
fn vortex_stays_in_unit_disc() {
    let f = VectorField::ginzburg_landau(vec![1.0, 1.0]).unwrap();
    let grid = GridSpec::square(10.0, 41);
    let bc = BoundaryData::square_from_fn(&grid, 2, |x, y| {
        let r = (x * x + y * y).sqrt();
        vec![x / r, y / r]
    });
    let sol = solve_relax_2d(&f, grid, &bc, &FlowOptions::default()).unwrap();
    assert!(sol.converged);
    let h = grid.h();
    let peak = sol
        .nodes()
        .map(|v| (v[0] * v[0] + v[1] * v[1]).sqrt())
        .fold(0.0, f64::max);
    assert!(peak <= 1.0 + h * h);
    // Degree-one data forces a zero near the center.
    let center = (grid.n / 2) * grid.n + grid.n / 2;
    let c = sol.value(center);
    assert!((c[0] * c[0] + c[1] * c[1]).sqrt() < 0.1);
}

#[test]
fn relaxation_is_deterministic_and_reports_nonconvergence() {
    let f = VectorField::SymmetryPair;
    let grid = GridSpec::square(3.0, 13);
    let bc = BoundaryData::square_from_fn(&grid, 2, |x, y| vec![0.2 * x, 0.1 * y]);
    let a = solve_relax_2d(&f, grid, &bc, &FlowOptions::default()).unwrap();
    let b = solve_relax_2d(&f, grid, &bc, &FlowOptions::default()).unwrap();
    assert!(a.converged);
    assert_eq!(a.values, b.values);
    let short = FlowOptions {
        max_steps: 3,
        ..FlowOptions::default()
    };
    let c = solve_relax_2d(&f, grid, &bc, &short).unwrap();
    assert!(!c.converged);
    assert_eq!(c.residual_norm, residual(&c, &f));
}

#[test]
fn mismatched_inputs_are_rejected() {
    let f = VectorField::SymmetryPair;
    let grid = GridSpec::interval(1.0, 11);
    let bc = BoundaryData::interval(vec![0.0], vec![0.0]);
    assert!(solve_bvp_1d(&f, grid, &bc, &NewtonOptions::default()).is_err());
    assert!(solve_bvp_1d(
        &f,
        GridSpec::interval(1.0, 2),
        &bc,
        &NewtonOptions::default()
    )
    .is_err());
    let nan = BoundaryData::interval(vec![f64::NAN, 0.0], vec![0.0, 0.0]);
    assert!(solve_bvp_1d(&f, grid, &nan, &NewtonOptions::default()).is_err());
    let bad = NewtonOptions {
        initial: Some(vec![0.0; 3]),
        ..NewtonOptions::default()
    };
    let ok_bc = BoundaryData::interval(vec![0.0, 0.0], vec![0.0, 0.0]);
    assert!(solve_bvp_1d(&f, grid, &ok_bc, &bad).is_err());
    assert_eq!(f.dim(), 2);
}
