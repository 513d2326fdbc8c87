mod common;

use common::*;
use jtvsp::{Graph, JointBasis, JointFilter, TimeBasis};
use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use proptest::prelude::*;

#[test]
fn jft_matches_dense_kronecker_product() {
    let mut r = rng(1);
    for (n, t) in [(2, 2), (3, 4), (4, 3), (4, 4)] {
        let b = random_basis(n, t, &mut r);
        let x = random_signal(n, t, &mut r);
        let dense = dense_uj(&b).adjoint() * vec_c(&complexify(&x));
        let fast = vec_c(&b.jft(&x).unwrap());
        assert!((dense - fast).camax() < 1e-12);
    }
}

#[test]
fn joint_filter_matches_dense_operator() {
    let mut r = rng(2);
    let b = random_basis(3, 4, &mut r);
    let h = random_response(&b, &mut r);
    let x = random_signal(3, 4, &mut r);
    let want = dense_joint_operator(&b, &h) * vec_r(&x);
    let got = b.filter(&JointFilter::new(h).unwrap(), &x).unwrap();
    assert!((vec_r(&got) - want).amax() < 1e-12);
}

#[test]
fn joint_laplacian_is_cartesian_product() {
    let mut r = rng(3);
    let g = random_graph(3, &mut r);
    let b = JointBasis::new(g.spectrum().unwrap(), TimeBasis::laplacian(5).unwrap());
    // L_T = I - (S + Sᵀ)/2 so that its eigenvalues are 1 - cos ω
    let t = 5;
    let lt = DMatrix::from_fn(t, t, |a, c| {
        if a == c {
            1.0
        } else if (a + 1) % t == c || (c + 1) % t == a {
            -0.5
        } else {
            0.0
        }
    });
    let lj = DMatrix::<f64>::identity(t, t).kronecker(&g.laplacian())
        + lt.kronecker(&DMatrix::identity(3, 3));
    let resp = b.joint_laplacian_response().unwrap();
    let dense = dense_joint_operator(&b, &resp);
    assert!((dense - &lj).amax() < 1e-12);

    let x = random_signal(3, t, &mut r);
    let trace = (x.transpose() * g.laplacian() * &x).trace() + (&x * &lt * x.transpose()).trace();
    assert!((b.joint_quadratic_form(&x).unwrap() - trace).abs() < 1e-10 * trace.abs());
}

#[test]
fn joint_localization_identities() {
    let mut r = rng(4);
    for _ in 0..10 {
        let b = random_basis(6, 8, &mut r);
        let h = random_response(&b, &mut r);
        let f = JointFilter::new(h.clone()).unwrap();
        let u = b.graph().eigenvectors();
        let tb = b.time();
        for (i1, t1) in [(0, 0), (2, 3), (5, 7)] {
            let loc = b.joint_localize(&f, i1, t1).unwrap();
            let base = b.joint_localize(&f, i1, 0).unwrap();
            // time translation
            for i2 in 0..6 {
                for t2 in 0..8 {
                    assert!((loc[(i2, t2)] - base[(i2, (t2 + 8 - t1) % 8)]).norm() < 1e-10);
                }
            }
            // translate rows in time, then localize on the graph
            let mut first_time = DMatrix::<Complex64>::zeros(6, 8);
            for n in 0..6 {
                let row: Vec<f64> = h.row(n).iter().copied().collect();
                let tl = tb.time_localize(&row, t1).unwrap();
                for i2 in 0..6 {
                    for t2 in 0..8 {
                        first_time[(i2, t2)] +=
                            tl[t2] / (8f64).sqrt() * u[(i1, n)] * u[(i2, n)];
                    }
                }
            }
            // localize columns on the graph, then translate in time
            let mut first_graph = DMatrix::<Complex64>::zeros(6, 8);
            for tau in 0..8 {
                let col = DVector::from_iterator(6, h.column(tau).iter().copied());
                let gl = b.graph().localize_response(&col, i1).unwrap();
                for i2 in 0..6 {
                    for t2 in 0..8 {
                        let phase = 2.0 * std::f64::consts::PI * (tau * ((t2 + 8 - t1) % 8)) as f64 / 8.0;
                        first_graph[(i2, t2)] += Complex64::from_polar(gl[i2] / 8.0, phase);
                    }
                }
            }
            assert!((&first_time - &loc).camax() < 1e-10);
            assert!((&first_graph - &loc).camax() < 1e-10);
        }
    }
}

#[test]
fn time_localization_on_ring_matches_graph_localization() {
    // On a ring the graph Fourier basis spans the DFT basis, so localizing a
    // response that is a function of the ring eigenvalue agrees in both domains.
    let t = 8;
    let ring = Graph::ring(t).unwrap().spectrum().unwrap();
    let tb = TimeBasis::laplacian(t).unwrap();
    let h = |x: f64| 1.0 / (1.0 + 2.0 * x);
    // ring Laplacian eigenvalue at ω is 2(1 - cos ω)
    let resp: Vec<f64> = tb.angular_frequencies().iter().map(|w| h(2.0 * (1.0 - w.cos()))).collect();
    for shift in [0, 3] {
        let tl = tb.time_localize(&resp, shift).unwrap();
        let gl = ring.graph_localize(h, shift).unwrap();
        for k in 0..t {
            assert!(tl[k].im.abs() < 1e-12);
            assert!((tl[k].re / (t as f64).sqrt() - gl[k]).abs() < 1e-12);
        }
    }
}

#[test]
fn filtering_on_a_ring_commutes_with_rotation() {
    let n = 7;
    let g = Graph::ring(n).unwrap().spectrum().unwrap();
    let mut r = rng(5);
    let x = DVector::from_fn(n, |_, _| rand::Rng::random::<f64>(&mut r));
    let rot = |v: &DVector<f64>| DVector::from_fn(n, |i, _| v[(i + n - 1) % n]);
    let h = |l: f64| (-l).exp() + 0.3 * l;
    let a = rot(&g.graph_filter(h, &x).unwrap());
    let b = g.graph_filter(h, &rot(&x)).unwrap();
    assert!((a - b).amax() < 1e-12);
}

#[test]
fn separable_fast_path_on_larger_grid() {
    let mut r = rng(6);
    let b = random_basis(8, 16, &mut r);
    let h1 = b.graph().sample_response(|l| 1.0 / (1.0 + l)).unwrap();
    let h2: Vec<f64> = b.time().angular_frequencies().iter().map(|w| 1.0 + 0.5 * w.cos()).collect();
    let x = random_signal(8, 16, &mut r);
    let fast = b.separable_filter(&h1, &h2, &x).unwrap();
    let general = b.filter(&JointFilter::separable(&h1, &h2).unwrap(), &x).unwrap();
    assert!(rel(&fast, &general) < 1e-10);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn jft_is_unitary_and_invertible(seed in 0u64..10_000, n in 1usize..7, t in 1usize..12) {
        let mut r = rng(seed);
        let b = random_basis(n.max(2), t, &mut r);
        let x = random_signal(n.max(2), t, &mut r);
        let c = b.jft(&x).unwrap();
        prop_assert!((c.norm() - x.norm()).abs() <= 1e-10 * x.norm());
        let back = b.ijft(&c).unwrap().map(|v| v.re);
        prop_assert!(rel(&back, &x) < 1e-10);
    }

    #[test]
    fn joint_filters_compose(seed in 0u64..10_000) {
        let mut r = rng(seed);
        let b = random_basis(5, 6, &mut r);
        let h1 = random_response(&b, &mut r);
        let h2 = random_response(&b, &mut r);
        let x = random_signal(5, 6, &mut r);
        let f1 = JointFilter::new(h1.clone()).unwrap();
        let f2 = JointFilter::new(h2.clone()).unwrap();
        let twice = b.filter(&f1, &b.filter(&f2, &x).unwrap()).unwrap();
        let once = b.filter(&JointFilter::new(h1.component_mul(&h2)).unwrap(), &x).unwrap();
        prop_assert!((twice - once).amax() < 1e-10 * (1.0 + x.amax()));
    }
}
