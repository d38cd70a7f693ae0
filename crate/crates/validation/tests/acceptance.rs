//! Acceptance criteria, one line of output each. Exits nonzero if any fails.

use std::fs;
use std::path::Path;
use std::time::Instant;

use confine::scenario::{self, RunOptions};
use confine_core::certifier::{certify_convex_condition, CertifyOptions, Status};
use confine_core::fields::{Polynomial, Term, VectorField};
use confine_core::geometry::ConvexBody;
use confine_core::monitors::{
    confinement_report, p_function_report, p_function_threshold, strictness_report,
    symmetry_report, StrictnessClass,
};
use confine_core::solver::{
    blend_guess, residual, solve_bvp_1d, solve_relax_2d, BoundaryData, FlowOptions, GridSpec,
    NewtonOptions, SolutionGrid,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Check = Result<String, String>;
type Criterion = (&'static str, fn() -> Check);

fn ensure(ok: bool, detail: String) -> Check {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn dist(p: &[f64], q: &[f64]) -> f64 {
    p.iter()
        .zip(q)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

/// Closest point on the ellipse `(x/a)² + (y/b)² = 1` by a dense angular
/// sweep followed by bisection on the derivative of the squared distance.
fn ellipse_sweep(a: f64, b: f64, u: [f64; 2]) -> [f64; 2] {
    let d2 = |t: f64| (a * t.cos() - u[0]).powi(2) + (b * t.sin() - u[1]).powi(2);
    let slope = |t: f64| -a * t.sin() * (a * t.cos() - u[0]) + b * t.cos() * (b * t.sin() - u[1]);
    let n = 20_000;
    let step = std::f64::consts::TAU / n as f64;
    let best = (0..n)
        .map(|k| k as f64 * step)
        .min_by(|s, t| d2(*s).total_cmp(&d2(*t)))
        .unwrap();
    let (mut lo, mut hi) = (best - step, best + step);
    if slope(lo) < 0.0 && slope(hi) > 0.0 {
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if slope(mid) < 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
    } else {
        lo = best;
        hi = best;
    }
    let t = 0.5 * (lo + hi);
    [a * t.cos(), b * t.sin()]
}

fn ellipse_projection() -> Check {
    let body = ConvexBody::ellipsoid(vec![2.0, 1.0]).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut points = Vec::new();
    while points.len() < 1000 {
        let u: [f64; 2] = [rng.random_range(-6.0..6.0), rng.random_range(-6.0..6.0)];
        if (u[0] / 2.0).powi(2) + u[1] * u[1] > 1.0 {
            points.push(u);
        }
    }
    let start = Instant::now();
    let projected: Vec<Vec<f64>> = points.iter().map(|u| body.project_boundary(u)).collect();
    let secs = start.elapsed().as_secs_f64();
    let worst = points
        .iter()
        .zip(&projected)
        .map(|(u, p)| dist(p, &ellipse_sweep(2.0, 1.0, *u)))
        .fold(0.0, f64::max);
    ensure(
        worst <= 1e-8 && secs < 5.0,
        format!("max error {worst:.2e} over 1000 points in {secs:.3} s"),
    )
}

fn certifier_controls() -> Check {
    let opts = CertifyOptions::default();
    let gl = VectorField::ginzburg_landau(vec![1.0, 1.0]).unwrap();
    let ball = ConvexBody::ball(2, 1.0).unwrap();
    let pos = certify_convex_condition(&gl, &ball, 2.0, &opts).unwrap();
    let neg = certify_convex_condition(&gl.negated(), &ball, 2.0, &opts).unwrap();
    // Flipped margin (u − u/|u|)·(−(|u|² − 1)u) written out by hand.
    let w = &neg.witness;
    let r = (w[0] * w[0] + w[1] * w[1]).sqrt();
    let reeval = -(r * r - 1.0) * r * (r - 1.0);

    let mut first_pass = None;
    let mut clean = true;
    for k in 0..=50 {
        let g12 = 0.5 + 0.05 * k as f64;
        let f = VectorField::gross_pitaevskii(1.0, 1.0, g12, 1.0).unwrap();
        // a = b = μ^½ / g^¼ = 1 for these parameters.
        let c =
            certify_convex_condition(&f, &ball, 2.0, &opts.clone().with_samples(2_000)).unwrap();
        match (c.status, first_pass) {
            (Status::Pass, None) => first_pass = Some(g12),
            (Status::Pass, Some(_)) => {}
            (_, Some(_)) => clean = false,
            (_, None) => {}
        }
    }
    let flip = first_pass.unwrap_or(f64::NAN);
    ensure(
        pos.status == Status::Pass
            && pos.worst_margin > 0.0
            && neg.status == Status::Fail
            && reeval <= 0.0
            && clean
            && (flip - 1.0).abs() <= 0.05 + 1e-12,
        format!(
            "GL margin {:.3e}, flipped witness margin {reeval:.3e}, GP flips at g12 = {flip:.2}",
            pos.worst_margin
        ),
    )
}

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

fn kink(n: usize) -> SolutionGrid {
    let end = (20.0 / 2f64.sqrt()).tanh();
    let bc = BoundaryData::interval(vec![-end], vec![end]);
    solve_bvp_1d(
        &kink_field(),
        GridSpec::interval(20.0, n),
        &bc,
        &NewtonOptions::default(),
    )
    .unwrap()
}

fn kink_error(sol: &SolutionGrid) -> f64 {
    (0..sol.grid.n)
        .map(|i| (sol.values[i] - (sol.grid.axis(i) / 2f64.sqrt()).tanh()).abs())
        .fold(0.0, f64::max)
}

fn scalar_kink() -> Check {
    let coarse = kink(2001);
    let fine = kink(4001);
    let (ec, ef) = (kink_error(&coarse), kink_error(&fine));
    let ratio = ec / ef;
    ensure(
        coarse.converged && fine.converged && ef <= 1e-6 && (3.5..=4.5).contains(&ratio),
        format!("max error {ef:.3e} at N = 4001 (bound 1e-6), ratio {ratio:.3} from N = 2001"),
    )
}

fn gp_wall() -> Check {
    let f = VectorField::gross_pitaevskii(1.0, 1.0, 2.0, 1.0).unwrap();
    let bc = BoundaryData::interval(vec![1.0, 0.0], vec![0.0, 1.0]);
    let sol = solve_bvp_1d(
        &f,
        GridSpec::interval(20.0, 2001),
        &bc,
        &NewtonOptions::default(),
    )
    .unwrap();
    let res = residual(&sol, &f);
    let peak = sol
        .nodes()
        .map(|u| u[0] * u[0] + u[1] * u[1])
        .fold(0.0, f64::max);
    let ball = ConvexBody::ball(2, 1.0).unwrap();
    let h = sol.grid.h();
    let s = strictness_report(&sol, &ball, 10.0 * h * h).unwrap();
    let class = s.strictness.map(|d| d.class);
    ensure(
        sol.converged
            && res <= 1e-10
            && peak <= 1.0 + 1e-6
            && class == Some(StrictnessClass::StrictlyInterior),
        format!("residual {res:.2e}, max |u|² {peak:.12}, class {class:?}"),
    )
}

fn triple_junction() -> Check {
    let wells = [
        [1.0, 0.0],
        [-0.5, 0.8660254037844386],
        [-0.5, -0.8660254037844386],
    ];
    let f = VectorField::allen_cahn(wells[0], wells[1], wells[2]).unwrap();
    let tri = ConvexBody::triangle(wells[0], wells[1], wells[2]).unwrap();
    let kappa = 1.0;
    let mut notes = Vec::new();
    let mut ok = true;
    for n in [17, 33] {
        let grid = GridSpec::square(5.0, n);
        let bc = BoundaryData::square_from_fn(&grid, 2, |x, y| {
            let th = y.atan2(x);
            let k = if th.abs() < std::f64::consts::FRAC_PI_3 {
                0
            } else if th > 0.0 {
                1
            } else {
                2
            };
            wells[k].to_vec()
        });
        let sol = solve_relax_2d(&f, grid, &bc, &FlowOptions::default()).unwrap();
        let h = grid.h();
        let rep = confinement_report(&sol, &tri, kappa * h * h).unwrap();
        ok &= sol.converged && rep.pass;
        notes.push(format!("n = {n}: max d {:.2e}", rep.extremum));
    }
    ensure(ok, format!("κ = {kappa}, {}", notes.join(", ")))
}

fn p_function() -> Check {
    let sol = kink(4001);
    let high = p_function_report(&sol, 1.0, 1.0, 1e-8).unwrap();
    let low = p_function_report(&sol, 0.1, 1.0, 1e-8).unwrap();
    let cs: Vec<f64> = (1..=40).map(|k| 0.05 * k as f64).collect();
    let bracket = p_function_threshold(&sol, 1.0, &cs, 1e-8).unwrap();
    let bracketed = bracket.is_some_and(|(fail, pass)| {
        fail < 0.25 && pass >= 0.25 - 1e-12 && pass - fail <= 0.05 + 1e-12
    });
    ensure(
        high.extremum <= 1e-8 && low.extremum > 0.0 && bracketed,
        format!(
            "max P {:.2e} at C = 1, {:.4} at C = 0.1, threshold bracket {bracket:?}",
            high.extremum, low.extremum
        ),
    )
}

fn symmetry_collapse() -> Check {
    let grid = GridSpec::square(10.0, 41);
    let bc = BoundaryData::square_from_fn(&grid, 2, |x, y| {
        let v = (0.3 * x).sin() * (0.3 * y).cos();
        vec![v, v]
    });
    let mut init = blend_guess(&grid, &bc);
    for k in 0..grid.node_count() {
        if !grid.is_boundary(k) {
            let p = grid.coords(k);
            init[2 * k] += 0.3 * (0.2 * p[0]).cos();
            init[2 * k + 1] -= 0.3;
        }
    }
    let opts = FlowOptions {
        initial: Some(init),
        ..FlowOptions::default()
    };
    let sol = solve_relax_2d(&VectorField::SymmetryPair, grid, &bc, &opts).unwrap();
    let rep = symmetry_report(&sol, 1e-8).unwrap();
    ensure(
        sol.converged && rep.extremum <= 1e-8,
        format!(
            "max |u1 − u2| {:.2e} after {} steps",
            rep.extremum, sol.iterations
        ),
    )
}

fn geometry_suite() -> Check {
    let bodies = [
        ConvexBody::ball(2, 1.5).unwrap(),
        ConvexBody::ellipsoid(vec![2.0, 1.0]).unwrap(),
        ConvexBody::ellipsoid(vec![3.0, 1.0, 0.5]).unwrap(),
        ConvexBody::triangle(
            [1.0, 0.0],
            [-0.5, 0.8660254037844386],
            [-0.5, -0.8660254037844386],
        )
        .unwrap(),
        ConvexBody::polygon(vec![
            [0.0, 0.0],
            [2.0, 0.0],
            [3.0, 1.0],
            [1.0, 2.5],
            [-0.5, 1.0],
        ])
        .unwrap(),
    ];
    let smooth = [true, true, true, false, false];
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut point =
        |m: usize| -> Vec<f64> { (0..m).map(|_| rng.random_range(-5.0..5.0)).collect() };
    let (mut convexity, mut consistency, mut alignment) = (0usize, 0usize, 0usize);
    let (mut aligned_checked, mut samples) = (0usize, 0usize);
    for k in 0..10_000 {
        let i = k % bodies.len();
        let body = &bodies[i];
        let m = body.dim();
        let (a, b, t) = (point(m), point(m), (k as f64 + 0.5) / 10_000.0);
        let mid: Vec<f64> = (0..m).map(|j| t * a[j] + (1.0 - t) * b[j]).collect();
        if body.signed_distance(&mid)
            > t * body.signed_distance(&a) + (1.0 - t) * body.signed_distance(&b) + 1e-12
        {
            convexity += 1;
        }
        let p = body.project_boundary(&a);
        let d = body.signed_distance(&a);
        if body.signed_distance(&p).abs() > 1e-8 || (d > 0.0 && (dist(&a, &p) - d).abs() > 1e-8) {
            consistency += 1;
        }
        if smooth[i] && d > 1e-6 {
            let n = body.outward_normal(&p).unwrap();
            if (0..m).any(|j| ((a[j] - p[j]) / d - n[j]).abs() > 1e-6) {
                alignment += 1;
            }
            aligned_checked += 1;
        }
        samples += 1;
    }
    ensure(
        convexity + consistency + alignment == 0,
        format!(
            "{samples} samples, violations: convexity {convexity}, consistency {consistency}, \
             alignment {alignment} of {aligned_checked}"
        ),
    )
}

fn without_timestamp(text: &str) -> String {
    text.lines()
        .filter(|l| !l.trim_start().starts_with("\"timestamp_unix\""))
        .collect::<Vec<_>>()
        .join("\n")
}

fn determinism() -> Check {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("../confine/scenarios");
    let mut names: Vec<_> = fs::read_dir(&dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|x| x == "toml"))
        .collect();
    names.sort();
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    let mut differing = Vec::new();
    let mut files = 0;
    for path in &names {
        let scn = scenario::load(path).unwrap();
        let run = |out: &Path| {
            let opts = RunOptions {
                out_dir: Some(out.to_path_buf()),
                seed: None,
                base_dir: Some(dir.clone()),
            };
            scenario::run(&scn, &opts).unwrap().dir
        };
        let (da, db) = (run(a.path()), run(b.path()));
        for entry in fs::read_dir(&da).unwrap() {
            let file = entry.unwrap().file_name();
            let ta = fs::read_to_string(da.join(&file)).unwrap();
            let tb = fs::read_to_string(db.join(&file)).unwrap_or_default();
            files += 1;
            if without_timestamp(&ta) != without_timestamp(&tb) {
                differing.push(format!("{}/{}", scn.name, file.to_string_lossy()));
            }
        }
    }
    ensure(
        names.len() == 6 && differing.is_empty(),
        format!(
            "{} scenarios, {files} files compared, differing {differing:?}",
            names.len()
        ),
    )
}

fn main() {
    let criteria: [Criterion; 9] = [
        ("ellipse projection vs sweep oracle", ellipse_projection),
        (
            "certifier positive and negative controls",
            certifier_controls,
        ),
        ("scalar kink vs tanh", scalar_kink),
        ("Gross-Pitaevskii wall", gp_wall),
        ("triple-well junction in the triangle", triple_junction),
        ("P-function threshold", p_function),
        ("symmetry collapse", symmetry_collapse),
        ("geometry property suite", geometry_suite),
        ("scenario determinism", determinism),
    ];
    let mut failed = 0;
    for (k, (name, check)) in criteria.iter().enumerate() {
        let (tag, detail) = match check() {
            Ok(d) => ("PASS", d),
            Err(d) => {
                failed += 1;
                ("FAIL", d)
            }
        };
        println!("criterion {} {tag} {name}: {detail}", k + 1);
    }
    println!(
        "{} of {} criteria pass",
        criteria.len() - failed,
        criteria.len()
    );
    if failed > 0 {
        std::process::exit(1);
    }
}
