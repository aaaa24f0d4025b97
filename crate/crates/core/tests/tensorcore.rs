#![allow(clippy::needless_range_loop)]

use std::time::Instant;

use deepmstm::tensorcore::{concat_time_pad, conv_feature_1d, conv_temporal_2d, Tensor};
use proptest::prelude::*;
use proptest::test_runner::{Config, TestRunner};

type Grid = Vec<Vec<f64>>;

fn oracle_conv1d(x: &Grid, w: &Grid, b: &[f64]) -> Grid {
    let n = x[0].len();
    let mut out = vec![vec![0.0; n]; w.len()];
    for k in 0..w.len() {
        for t in 0..n {
            let mut s = b[k];
            for m in 0..x.len() {
                s += w[k][m] * x[m][t];
            }
            out[k][t] = s;
        }
    }
    out
}

/// `w[k][m] = [left, right]`.
fn oracle_conv2d(x: &Grid, w: &[Vec<[f64; 2]>], b: &[f64]) -> Grid {
    let n = x[0].len();
    let mut out = vec![vec![0.0; n - 1]; w.len()];
    for k in 0..w.len() {
        for t in 0..n - 1 {
            let mut s = b[k];
            for m in 0..x.len() {
                s += w[k][m][0] * x[m][t] + w[k][m][1] * x[m][t + 1];
            }
            out[k][t] = s;
        }
    }
    out
}

fn flat(g: &Grid) -> Vec<f64> {
    g.iter().flatten().copied().collect()
}

fn grid(rows: usize, cols: usize) -> impl Strategy<Value = Grid> {
    prop::collection::vec(prop::collection::vec(-10.0..10.0f64, cols), rows)
}

#[derive(Debug, Clone)]
struct Case {
    x: Vec<Grid>,
    w1: Grid,
    b1: Vec<f64>,
    w2: Vec<Vec<[f64; 2]>>,
    b2: Vec<f64>,
}

fn case() -> impl Strategy<Value = Case> {
    (1usize..4, 1usize..6, 2usize..16, 1usize..5, 1usize..5).prop_flat_map(|(b, m, n, k1, k2)| {
        (
            prop::collection::vec(grid(m, n), b),
            grid(k1, m),
            prop::collection::vec(-1.0..1.0f64, k1),
            prop::collection::vec(prop::collection::vec(prop::array::uniform2(-2.0..2.0f64), m), k2),
            prop::collection::vec(-1.0..1.0f64, k2),
        )
            .prop_map(|(x, w1, b1, w2, b2)| Case { x, w1, b1, w2, b2 })
    })
}

fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(p, q)| (p - q).abs()).fold(0.0, f64::max)
}

#[test]
fn convolutions_match_nested_loop_oracles() {
    let start = Instant::now();
    let mut runner = TestRunner::new(Config {
        cases: 1000,
        failure_persistence: None,
        ..Config::default()
    });
    let worst = std::cell::Cell::new(0.0f64);
    runner
        .run(&case(), |c| {
            let (bsz, m, n) = (c.x.len(), c.x[0].len(), c.x[0][0].len());
            let (k1, k2) = (c.w1.len(), c.w2.len());
            let input = Tensor::new(vec![bsz, m, n], c.x.iter().flat_map(flat).collect()).unwrap();
            let w1 = Tensor::new(vec![k1, m], flat(&c.w1)).unwrap();
            let b1 = Tensor::new(vec![k1], c.b1.clone()).unwrap();
            let w2 = Tensor::new(vec![k2, m, 2], c.w2.iter().flatten().flatten().copied().collect()).unwrap();
            let b2 = Tensor::new(vec![k2], c.b2.clone()).unwrap();

            let c1 = conv_feature_1d(&input, &w1, &b1).unwrap();
            let c2 = conv_temporal_2d(&input, &w2, &b2).unwrap();
            prop_assert_eq!(c1.shape(), &[bsz, k1, n][..]);
            prop_assert_eq!(c2.shape(), &[bsz, k2, n - 1][..]);

            let want1: Vec<f64> = c.x.iter().flat_map(|x| flat(&oracle_conv1d(x, &c.w1, &c.b1))).collect();
            let want2: Vec<f64> = c.x.iter().flat_map(|x| flat(&oracle_conv2d(x, &c.w2, &c.b2))).collect();
            let d = max_abs_diff(c1.data(), &want1).max(max_abs_diff(c2.data(), &want2));
            worst.set(worst.get().max(d));
            prop_assert!(d <= 1e-12, "max abs diff {d}");

            // The unbatched form agrees with the first batch entry.
            let single = Tensor::new(vec![m, n], flat(&c.x[0])).unwrap();
            let s1 = conv_feature_1d(&single, &w1, &b1).unwrap();
            prop_assert_eq!(s1.data(), &c1.data()[..k1 * n]);
            Ok(())
        })
        .unwrap();
    let elapsed = start.elapsed();
    println!("1000 cases, worst abs diff {:e}, {elapsed:?}", worst.get());
    assert!(elapsed.as_secs_f64() < 5.0, "took {elapsed:?}");
}

proptest! {
    #![proptest_config(Config { failure_persistence: None, ..Config::default() })]

    #[test]
    fn unit_difference_kernel_is_first_differencing(x in (1usize..5, 2usize..20).prop_flat_map(|(m, n)| grid(m, n))) {
        let (m, n) = (x.len(), x[0].len());
        // Kernel k reads only series k with weights (-1, 1).
        let mut w = vec![0.0; m * m * 2];
        for k in 0..m {
            w[(k * m + k) * 2] = -1.0;
            w[(k * m + k) * 2 + 1] = 1.0;
        }
        let input = Tensor::new(vec![m, n], flat(&x)).unwrap();
        let out = conv_temporal_2d(&input, &Tensor::new(vec![m, m, 2], w).unwrap(), &Tensor::zeros(&[m])).unwrap();
        for k in 0..m {
            for t in 0..n - 1 {
                let got = out.data()[k * (n - 1) + t];
                prop_assert!((got - (x[k][t + 1] - x[k][t])).abs() <= 1e-12);
            }
        }
    }

    #[test]
    fn concat_pads_the_temporal_maps(k1 in 1usize..4, k2 in 1usize..4, n in 2usize..10, seed in any::<u64>()) {
        let v = |len: usize, off: u64| (0..len).map(|i| ((seed.wrapping_add(off) as usize + i * 7) % 13) as f64).collect::<Vec<_>>();
        let c1 = Tensor::new(vec![k1, n], v(k1 * n, 0)).unwrap();
        let c2 = Tensor::new(vec![k2, n - 1], v(k2 * (n - 1), 1)).unwrap();
        let out = concat_time_pad(&c1, &c2).unwrap();
        prop_assert_eq!(out.shape(), &[k1 + k2, n][..]);
        prop_assert_eq!(&out.data()[..k1 * n], c1.data());
        for k in 0..k2 {
            let row = &out.data()[(k1 + k) * n..(k1 + k + 1) * n];
            prop_assert_eq!(&row[..n - 1], &c2.data()[k * (n - 1)..(k + 1) * (n - 1)]);
            prop_assert_eq!(row[n - 1], 0.0);
        }
    }
}
