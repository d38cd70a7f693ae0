use confine_core::fields::{
    allen_cahn_gradient, allen_cahn_potential, gp_parameters, Field, Moved, Polynomial, Term,
    VectorField,
};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const SQRT3_2: f64 = 0.8660254037844386;

fn catalog() -> Vec<VectorField> {
    let cubic = Polynomial::new(
        2,
        vec![
            vec![
                Term {
                    coef: 1.0,
                    powers: vec![3, 0],
                },
                Term {
                    coef: -2.0,
                    powers: vec![1, 1],
                },
                Term {
                    coef: 0.5,
                    powers: vec![0, 0],
                },
            ],
            vec![
                Term {
                    coef: 1.0,
                    powers: vec![0, 3],
                },
                Term {
                    coef: -1.0,
                    powers: vec![0, 1],
                },
            ],
        ],
    )
    .unwrap();
    vec![
        VectorField::ginzburg_landau(vec![1.0, 1.0]).unwrap(),
        VectorField::ginzburg_landau(vec![2.0, 1.0]).unwrap(),
        VectorField::ginzburg_landau(vec![1.5, 0.5, 3.0]).unwrap(),
        VectorField::allen_cahn([1.0, 0.0], [-0.5, SQRT3_2], [-0.5, -SQRT3_2]).unwrap(),
        VectorField::allen_cahn([0.0, 0.0], [2.0, 0.3], [0.4, 1.7]).unwrap(),
        VectorField::gross_pitaevskii(1.0, 1.0, 2.0, 1.0).unwrap(),
        VectorField::gross_pitaevskii(2.0, 0.5, 1.7, 1.3).unwrap(),
        VectorField::SymmetryPair,
        VectorField::polynomial(cubic),
        VectorField::SymmetryPair.negated(),
    ]
}

fn central_jacobian(field: &VectorField, u: &[f64], h: f64) -> Vec<f64> {
    let m = u.len();
    let mut out = vec![0.0; m * m];
    for j in 0..m {
        let mut up = u.to_vec();
        let mut dn = u.to_vec();
        up[j] += h;
        dn[j] -= h;
        let (fp, fm) = (field.eval(&up), field.eval(&dn));
        for i in 0..m {
            out[i * m + j] = (fp[i] - fm[i]) / (2.0 * h);
        }
    }
    out
}

fn max_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

#[test]
fn jacobians_match_central_differences() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for field in catalog() {
        let m = field.dim();
        for _ in 0..1000 {
            let u: Vec<f64> = (0..m).map(|_| rng.random_range(-2.0..2.0)).collect();
            let exact = field.jacobian(&u);
            let approx = central_jacobian(&field, &u, 1e-5);
            let diff: Vec<f64> = exact.iter().zip(&approx).map(|(a, b)| a - b).collect();
            let rel = max_abs(&diff) / max_abs(&exact).max(1.0);
            assert!(rel <= 1e-5, "{field:?} at {u:?}: relative error {rel}");
        }
    }
}

#[test]
fn allen_cahn_gradient_matches_potential_differences() {
    let (a, b, c) = ([1.0, 0.0], [-0.5, SQRT3_2], [-0.5, -SQRT3_2]);
    let centroid = [0.0, 0.0];
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let h = 1e-5;
    for _ in 0..1000 {
        let r = 5.0 * rng.random::<f64>().sqrt();
        let t = rng.random_range(0.0..std::f64::consts::TAU);
        let u = [centroid[0] + r * t.cos(), centroid[1] + r * t.sin()];
        let g = allen_cahn_gradient(u, a, b, c);
        let w = |p: [f64; 2]| allen_cahn_potential(p, a, b, c);
        let fd = [
            (w([u[0] + h, u[1]]) - w([u[0] - h, u[1]])) / (2.0 * h),
            (w([u[0], u[1] + h]) - w([u[0], u[1] - h])) / (2.0 * h),
        ];
        let err = ((g[0] - fd[0]).powi(2) + (g[1] - fd[1]).powi(2)).sqrt();
        let scale = (g[0] * g[0] + g[1] * g[1]).sqrt().max(1.0);
        assert!(err / scale <= 1e-6, "u = {u:?}: {g:?} vs {fd:?}");
    }
}

#[test]
fn allen_cahn_wells_are_zeros() {
    let (a, b, c) = ([0.0, 0.0], [2.0, 0.3], [0.4, 1.7]);
    let f = VectorField::allen_cahn(a, b, c).unwrap();
    for p in [a, b, c] {
        assert_eq!(f.eval(&p), vec![0.0, 0.0]);
        assert_eq!(allen_cahn_potential(p, a, b, c), 0.0);
    }
}

#[test]
fn gp_matches_closed_form() {
    let (g11, g22, g12, mu) = (2.0, 0.5, 1.7, 1.3);
    let f = VectorField::gross_pitaevskii(g11, g22, g12, mu).unwrap();
    let p = gp_parameters(g11, g22, g12, mu).unwrap();
    let (a2, b2) = (mu / g11.sqrt(), mu / g22.sqrt());
    assert!((p.a * p.a - a2).abs() < 1e-15 && (p.b * p.b - b2).abs() < 1e-15);
    assert!(p.segregation);
    let u = [0.3, -1.1];
    let expect = [
        g11 * (u[0] * u[0] - a2) * u[0] + g12 * u[0] * u[1] * u[1],
        g22 * (u[1] * u[1] - b2) * u[1] + g12 * u[0] * u[0] * u[1],
    ];
    let got = f.eval(&u);
    assert!((got[0] - expect[0]).abs() < 1e-14 && (got[1] - expect[1]).abs() < 1e-14);
    assert!(f.eval(&[p.a, 0.0]).iter().all(|x| x.abs() < 1e-14));
    assert!(f.eval(&[0.0, p.b]).iter().all(|x| x.abs() < 1e-14));
}

#[test]
fn moved_field_conjugates_solutions() {
    let inner = VectorField::allen_cahn([1.0, 0.0], [-0.5, SQRT3_2], [-0.5, -SQRT3_2]).unwrap();
    let t: f64 = 0.7;
    let rot = vec![t.cos(), -t.sin(), t.sin(), t.cos()];
    let moved = Moved::new(inner.clone(), rot.clone(), vec![0.2, -0.4]);
    let u = [0.3, 0.9];
    let w = moved.to_moved(&u);
    let back = moved.to_original(&w);
    assert!((back[0] - u[0]).abs() < 1e-15 && (back[1] - u[1]).abs() < 1e-15);
    let f = inner.eval(&u);
    let g = moved.eval(&w);
    let rf = [rot[0] * f[0] + rot[1] * f[1], rot[2] * f[0] + rot[3] * f[1]];
    assert!((g[0] - rf[0]).abs() < 1e-13 && (g[1] - rf[1]).abs() < 1e-13);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(512))]

    #[test]
    fn gp_is_odd_in_each_component(
        g11 in 0.1f64..4.0, g22 in 0.1f64..4.0, g12 in 0.1f64..4.0, mu in 0.1f64..4.0,
        u1 in -3.0f64..3.0, u2 in -3.0f64..3.0,
    ) {
        let f = VectorField::gross_pitaevskii(g11, g22, g12, mu).unwrap();
        let base = f.eval(&[u1, u2]);
        let flip1 = f.eval(&[-u1, u2]);
        let flip2 = f.eval(&[u1, -u2]);
        prop_assert!((flip1[0] + base[0]).abs() <= 1e-14 * base[0].abs().max(1.0));
        prop_assert!((flip1[1] - base[1]).abs() <= 1e-14 * base[1].abs().max(1.0));
        prop_assert!((flip2[0] - base[0]).abs() <= 1e-14 * base[0].abs().max(1.0));
        prop_assert!((flip2[1] + base[1]).abs() <= 1e-14 * base[1].abs().max(1.0));
    }

    #[test]
    fn identity_gl_is_rotation_equivariant(t in 0.0f64..std::f64::consts::TAU, u1 in -2.0f64..2.0, u2 in -2.0f64..2.0) {
        let f = VectorField::ginzburg_landau(vec![1.0, 1.0]).unwrap();
        let (c, s) = (t.cos(), t.sin());
        let qu = [c * u1 - s * u2, s * u1 + c * u2];
        let fu = f.eval(&[u1, u2]);
        let qfu = [c * fu[0] - s * fu[1], s * fu[0] + c * fu[1]];
        let fqu = f.eval(&qu);
        prop_assert!((fqu[0] - qfu[0]).abs() <= 1e-14 * fu[0].abs().max(fu[1].abs()).max(1.0));
        prop_assert!((fqu[1] - qfu[1]).abs() <= 1e-14 * fu[0].abs().max(fu[1].abs()).max(1.0));
    }

    #[test]
    fn symmetry_pair_identity(u1 in -3.0f64..3.0, u2 in -3.0f64..3.0) {
        let f = VectorField::SymmetryPair.eval(&[u1, u2]);
        let lhs = (u1 - u2) * (f[0] - f[1]);
        let rhs = (u1 - u2).powi(2) * (2.0 + u1 * u1 + u1 * u2 + u2 * u2);
        prop_assert!((lhs - rhs).abs() <= 1e-12 * rhs.abs().max(1.0));
    }
}
