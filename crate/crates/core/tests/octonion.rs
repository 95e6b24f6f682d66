use dancing_core::cartan_engel::{dist_frame, Q5Point, Q5Tangent};
use dancing_core::linalg::{Covec3, Mat3, Vec3};
use dancing_core::octonion::*;
use dancing_core::sample;
use proptest::prelude::*;

fn mat7_norm(m: &Mat7) -> f64 {
    m.iter().flatten().map(|v| v * v).sum::<f64>().sqrt()
}

#[test]
fn conjugation_reverses_products() {
    let mut r = sample::rng(21);
    for _ in 0..50 {
        let (a, b) = (random_zorn(&mut r), random_zorn(&mut r));
        assert_eq!(zorn_conj(&zorn_conj(&a)), a);
        let lhs = zorn_conj(&zorn_mul(&a, &b));
        let rhs = zorn_mul(&zorn_conj(&b), &zorn_conj(&a));
        assert!(lhs.sub(&rhs).norm_inf() < 1e-12);
    }
}

#[test]
fn product_is_neither_commutative_nor_associative() {
    let mut r = sample::rng(22);
    let (a, b, c) = (random_zorn(&mut r), random_zorn(&mut r), random_zorn(&mut r));
    assert!(zorn_mul(&a, &b).sub(&zorn_mul(&b, &a)).norm_inf() > 1e-3);
    let l = zorn_mul(&zorn_mul(&a, &b), &c);
    let rr = zorn_mul(&a, &zorn_mul(&b, &c));
    assert!(l.sub(&rr).norm_inf() > 1e-3);
    // alternative: (aa)b = a(ab)
    let l = zorn_mul(&zorn_mul(&a, &a), &b);
    let rr = zorn_mul(&a, &zorn_mul(&a, &b));
    assert!(l.sub(&rr).norm_inf() < 1e-12);
}

#[test]
fn norm_is_multiplicative() {
    let mut r = sample::rng(23);
    for _ in 0..50 {
        let (a, b) = (random_zorn(&mut r), random_zorn(&mut r));
        let d = zorn_norm(&zorn_mul(&a, &b)) - zorn_norm(&a) * zorn_norm(&b);
        assert!(d.abs() < 1e-12);
    }
}

#[test]
fn derivations_satisfy_leibniz_and_kill_the_unit() {
    let mut r = sample::rng(24);
    for _ in 0..100 {
        let g = random_g2(&mut r);
        let (a, b) = (random_zorn(&mut r), random_zorn(&mut r));
        assert!(leibniz_residual(&g, &a, &b) < 1e-11);
        assert!(derivation_apply(&g, &ZornOctonion::one()).norm_inf() == 0.0);
    }
}

#[test]
fn derivation_matches_rho_on_imaginary_part() {
    let mut r = sample::rng(25);
    for _ in 0..20 {
        let g = random_g2(&mut r);
        let z = random_zorn(&mut r);
        let d = derivation_apply(&g, &z);
        let m = rho_matrix(&g);
        let v = z.im().to_array();
        let w: Vec<f64> = (0..7).map(|i| (0..7).map(|j| m[i][j] * v[j]).sum()).collect();
        let got = d.im().to_array();
        for i in 0..7 {
            assert!((w[i] - got[i]).abs() < 1e-12);
        }
        assert!(d.re().abs() < 1e-15);
    }
}

#[test]
fn rho_preserves_the_quadratic_form() {
    let mut r = sample::rng(26);
    for g in G2Param::basis() {
        assert!(rho_antisymmetry_residual(&g) < 1e-12);
    }
    for _ in 0..20 {
        assert!(rho_antisymmetry_residual(&random_g2(&mut r)) < 1e-12);
    }
}

#[test]
fn bracket_closes_on_the_basis() {
    let basis = G2Param::basis();
    for a in &basis {
        for b in &basis {
            let g = g2_bracket(a, b).unwrap();
            // the 7×7 commutator is reproduced exactly
            let (ra, rb) = (rho_matrix(a), rho_matrix(b));
            let (p, q) = (mat7_mul(&ra, &rb), mat7_mul(&rb, &ra));
            let mut c = [[0.0; 7]; 7];
            for i in 0..7 {
                for j in 0..7 {
                    c[i][j] = p[i][j] - q[i][j];
                }
            }
            let (_, res) = decompose_rho(&c);
            assert!(res < 1e-12);
            assert!(g.a.trace().abs() < 1e-12);
        }
    }
}

#[test]
fn mixed_bracket_lands_in_sl3() {
    let e1 = G2Param { b: Vec3::basis(0), ..Default::default() };
    let f1 = G2Param { c: Covec3::basis(0), ..Default::default() };
    let g = g2_bracket(&e1, &f1).unwrap();
    assert!(g.b.norm() + g.c.norm() < 1e-14);
    assert!(g.a.norm() > 1.0);
    // oracle: the commutator of the 7×7 matrices
    let m = {
        let (ra, rb) = (rho_matrix(&e1), rho_matrix(&f1));
        let (p, q) = (mat7_mul(&ra, &rb), mat7_mul(&rb, &ra));
        let mut c = [[0.0; 7]; 7];
        for i in 0..7 {
            for j in 0..7 {
                c[i][j] = p[i][j] - q[i][j];
            }
        }
        c
    };
    let r = rho_matrix(&g);
    let mut d = [[0.0; 7]; 7];
    for i in 0..7 {
        for j in 0..7 {
            d[i][j] = r[i][j] - m[i][j];
        }
    }
    assert!(mat7_norm(&d) < 1e-14);
}

#[test]
fn omega_vanishes_in_the_euler_direction() {
    let mut r = sample::rng(27);
    for _ in 0..20 {
        let z = random_cone_point(&mut r);
        assert!(z.form().abs() < 1e-12);
        assert!(omega_at(&z, &z).norm_inf() < 1e-12);
    }
}

#[test]
fn omega_kernel_has_rank_three_on_the_cone() {
    let z = ImOctonion { x: 0.0, q: Vec3::basis(0), p: Covec3::ZERO };
    assert_eq!(omega_kernel_dim(&z), 3);
    // the kernel is dq₁, dp₂, dp₃
    for k in [0, 4, 5] {
        let mut a = [0.0; 7];
        a[k] = 1.0;
        assert!(omega_at(&z, &ImOctonion::from_array(&a)).norm_inf() == 0.0);
    }
    let mut r = sample::rng(28);
    for _ in 0..100 {
        assert_eq!(omega_kernel_dim(&random_cone_point(&mut r)), 3);
    }
    // off the cone the kernel shrinks
    let w = ImOctonion { x: 1.0, q: Vec3::basis(0), p: Covec3::basis(1) };
    assert!(omega_kernel_dim(&w) <= 1);
}

#[test]
fn pullback_annihilates_exactly_the_distribution() {
    let mut r = sample::rng(29);
    let base = Q5Point::base();
    let (f1, f2) = dist_frame(&base).unwrap();
    for f in [f1, f2] {
        assert!(iota_pullback(&base.q, &base.p, &f.dq, &f.dp).norm_inf() < 1e-12);
    }
    for _ in 0..100 {
        let pt = Q5Point::random(&mut r);
        let (f1, f2) = dist_frame(&pt).unwrap();
        let (a, b) = (sample::uniform(&mut r, -1.0, 1.0), sample::uniform(&mut r, -1.0, 1.0));
        let v = Q5Tangent { dq: f1.dq * a + f2.dq * b, dp: f1.dp * a + f2.dp * b };
        assert!(iota_pullback(&pt.q, &pt.p, &v.dq, &v.dp).norm_inf() < 1e-12);
        // a generic tangent vector of Q⁵ is detected
        let dq = sample::vec3(&mut r);
        let dp0 = sample::covec3(&mut r);
        let dp = dp0 - pt.p * (dp0.pair(&pt.q) + pt.p.pair(&dq));
        let t = Q5Tangent { dq, dp };
        assert!(t.tangency(&pt).abs() < 1e-12);
        assert!(iota_pullback(&pt.q, &pt.p, &dq, &dp).norm_inf() > 1e-3);
    }
    // the fiber direction (q, −p) is not in the kernel
    let fib = iota_pullback(&base.q, &base.p, &base.q, &(-base.p));
    assert!(fib.x.abs() > 0.5 && fib.y.abs() > 0.5);
}

#[test]
fn sl3_acts_by_automorphisms() {
    let mut r = sample::rng(30);
    for _ in 0..50 {
        let g = sample::sl3_group(&mut r);
        assert!((g.det() - 1.0).abs() < 1e-10);
        let (a, b) = (random_zorn(&mut r), random_zorn(&mut r));
        assert!(equivariance_residual(&g, &a, &b).unwrap() < 1e-11);
    }
    // a non-unimodular scaling is not an automorphism
    let s = Mat3::identity() * 2.0;
    let (a, b) = (random_zorn(&mut r), random_zorn(&mut r));
    assert!(equivariance_residual(&s, &a, &b).unwrap() > 1e-3);
}

#[test]
fn trace_must_vanish() {
    assert!(G2Param::new(Mat3::identity(), Vec3::ZERO, Covec3::ZERO).is_err());
}

proptest! {
    #[test]
    fn leibniz_on_random_triples(seed in 0u64..10_000) {
        let mut r = sample::rng(seed);
        let g = random_g2(&mut r);
        let (a, b) = (random_zorn(&mut r), random_zorn(&mut r));
        prop_assert!(leibniz_residual(&g, &a, &b) < 1e-11);
    }

    #[test]
    fn bracket_is_antisymmetric_and_jacobi(seed in 0u64..10_000) {
        let mut r = sample::rng(seed);
        let (a, b, c) = (random_g2(&mut r), random_g2(&mut r), random_g2(&mut r));
        let ab = g2_bracket(&a, &b).unwrap();
        let ba = g2_bracket(&b, &a).unwrap();
        prop_assert!(ab.add(&ba).norm() < 1e-12);
        let j = g2_bracket(&a, &g2_bracket(&b, &c).unwrap()).unwrap()
            .add(&g2_bracket(&b, &g2_bracket(&c, &a).unwrap()).unwrap())
            .add(&g2_bracket(&c, &g2_bracket(&a, &b).unwrap()).unwrap());
        prop_assert!(j.norm() < 1e-11);
    }
}
