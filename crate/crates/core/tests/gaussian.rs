use proptest::prelude::*;
use tapfuse::{fuse, log_pdf, Gaussian2, Mat2};

fn cov(a: f64, b: f64, r: f64) -> Mat2 {
    let c = r * (a * b).sqrt();
    Mat2([[a, c], [c, b]])
}

/// Midpoint-rule integral of the product density, its first moment and
/// second central moment over a box wide enough to hold all the mass.
fn quadrature(obs: &Gaussian2, key: &Gaussian2) -> (f64, [f64; 2], [[f64; 2]; 2]) {
    let n = 700;
    let half = 40.0;
    let h = 2.0 * half / n as f64;
    let c = [(obs.mean[0] + key.mean[0]) / 2.0, (obs.mean[1] + key.mean[1]) / 2.0];
    let mut pts = Vec::with_capacity(n * n);
    for i in 0..n {
        for j in 0..n {
            let x = [c[0] - half + (i as f64 + 0.5) * h, c[1] - half + (j as f64 + 0.5) * h];
            let w = (log_pdf(obs, x).unwrap() + log_pdf(key, x).unwrap()).exp() * h * h;
            pts.push((x, w));
        }
    }
    let mass: f64 = pts.iter().map(|p| p.1).sum();
    let mut mean = [0.0; 2];
    for (x, w) in &pts {
        mean[0] += w * x[0] / mass;
        mean[1] += w * x[1] / mass;
    }
    let mut second = [[0.0; 2]; 2];
    for (x, w) in &pts {
        let d = [x[0] - mean[0], x[1] - mean[1]];
        for a in 0..2 {
            for b in 0..2 {
                second[a][b] += w * d[a] * d[b] / mass;
            }
        }
    }
    (mass, mean, second)
}

#[test]
fn fusion_matches_numerical_integration() {
    let cases = [
        (([0.0, 0.0], cov(9.0, 4.0, 0.3)), ([3.0, -2.0], cov(16.0, 12.0, -0.2))),
        (([5.0, 1.0], cov(2.0, 30.0, 0.0)), ([-4.0, 2.0], cov(20.0, 5.0, 0.6))),
        (([1.0, 1.0], cov(25.0, 25.0, 0.9)), ([1.5, 0.0], cov(7.0, 9.0, 0.1))),
    ];
    for ((m1, c1), (m2, c2)) in cases {
        let obs = Gaussian2::new(m1, c1).unwrap();
        let key = Gaussian2::new(m2, c2).unwrap();
        let f = fuse(&obs, &key).unwrap();
        let (mass, mean, second) = quadrature(&obs, &key);
        assert!((f.log_rho - mass.ln()).abs() < 1e-6, "{} vs {}", f.log_rho, mass.ln());
        for a in 0..2 {
            assert!((f.fused_mean[a] - mean[a]).abs() < 1e-6);
            for b in 0..2 {
                assert!((f.fused_cov.0[a][b] - second[a][b]).abs() < 1e-4);
            }
        }
    }
}

#[test]
fn point_observation_reduces_to_key_density() {
    let key = Gaussian2::new([2.0, -1.0], cov(12.0, 8.0, 0.4)).unwrap();
    let obs = Gaussian2::deterministic([3.5, 0.5]);
    let f = fuse(&obs, &key).unwrap();
    assert!((f.log_rho - log_pdf(&key, [3.5, 0.5]).unwrap()).abs() < 1e-12);
    assert_eq!(f.fused_mean, [3.5, 0.5]);
    assert!(f.fused_cov.is_zero());
}

#[test]
fn degenerate_sum_is_an_error() {
    let a = Gaussian2::deterministic([0.0, 0.0]);
    assert!(fuse(&a, &a).is_err());
}

fn arb_gaussian() -> impl Strategy<Value = Gaussian2> {
    (-50.0..50.0f64, -50.0..50.0f64, 0.5..60.0f64, 0.5..60.0f64, -0.95..0.95f64)
        .prop_map(|(x, y, a, b, r)| Gaussian2::new([x, y], cov(a, b, r)).unwrap())
}

proptest! {
    #[test]
    fn fusion_is_symmetric(a in arb_gaussian(), b in arb_gaussian()) {
        let ab = fuse(&a, &b).unwrap();
        let ba = fuse(&b, &a).unwrap();
        prop_assert!((ab.log_rho - ba.log_rho).abs() < 1e-10);
        for i in 0..2 {
            prop_assert!((ab.fused_mean[i] - ba.fused_mean[i]).abs() < 1e-8);
        }
        let eig = ab.fused_cov.eigenvalues();
        prop_assert!(eig[0] > 0.0 && eig[1] > 0.0);
        prop_assert!(ab.fused_cov.is_symmetric());
    }

    #[test]
    fn wider_observation_flattens_the_likelihood(a in arb_gaussian(), b in arb_gaussian(), s in 1.5..10.0f64) {
        // Widening the observation moves log rho toward the log of a flatter density,
        // so it never exceeds the log normalizer of the wider sum.
        let wide = a.with_cov(a.cov.scale(s));
        let r = fuse(&wide, &b).unwrap().log_rho;
        let peak = -(2.0 * std::f64::consts::PI).ln() - 0.5 * wide.cov.add(&b.cov).det().ln();
        prop_assert!(r <= peak + 1e-12);
    }
}
