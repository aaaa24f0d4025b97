#![allow(clippy::needless_range_loop)]

use chrono::NaiveDate;
use deepmstm::data::{DateRange, EventCalendar, SeriesFrame};
use deepmstm::layers::{Cycle, FourierSpec};
use deepmstm::model::{decompose, forward, init_params, Arm, DeepMstmParams, ModelConfig, TrendInput};
use deepmstm::tensorcore::Tensor;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

fn get<'a>(named: &'a [(String, Tensor<f64>)], name: &str) -> &'a [f64] {
    named.iter().find(|(n, _)| n == name).map(|(_, t)| t.data()).unwrap()
}

fn has(named: &[(String, Tensor<f64>)], name: &str) -> bool {
    named.iter().any(|(n, _)| n == name)
}

/// Straight loop evaluation of the whole model for one window (`M x N` rows).
fn oracle(window: &[Vec<f64>], day: i64, events: &[f64], params: &DeepMstmParams<f64>, c: &ModelConfig) -> [f64; 4] {
    let p = params.to_named();
    let rows: Vec<Vec<f64>> = if c.multivariate { window.to_vec() } else { vec![window[c.target].clone()] };
    let m = rows.len();
    let n = c.lag;

    // feature sequence, F rows by N columns
    let mut seq: Vec<Vec<f64>> = Vec::new();
    if c.trend_input == TrendInput::Raw {
        seq = rows.clone();
    } else {
        if has(&p, "conv1d.kernels") {
            let (w, b) = (get(&p, "conv1d.kernels"), get(&p, "conv1d.bias"));
            for k in 0..b.len() {
                let mut row = vec![0.0; n];
                for (t, out) in row.iter_mut().enumerate() {
                    let mut acc = b[k];
                    for (i, r) in rows.iter().enumerate() {
                        acc += w[k * m + i] * r[t];
                    }
                    *out = acc;
                }
                seq.push(row);
            }
        }
        if has(&p, "conv2d.kernels") {
            let (w, b) = (get(&p, "conv2d.kernels"), get(&p, "conv2d.bias"));
            for k in 0..b.len() {
                let mut row = vec![0.0; n];
                for t in 0..n - 1 {
                    let mut acc = b[k];
                    for (i, r) in rows.iter().enumerate() {
                        acc += w[(k * m + i) * 2] * r[t] + w[(k * m + i) * 2 + 1] * r[t + 1];
                    }
                    row[t] = acc;
                }
                seq.push(row);
            }
        }
    }

    let (wx, wh, bias) = (get(&p, "lstm.input_weights"), get(&p, "lstm.recurrent_weights"), get(&p, "lstm.bias"));
    let h_size = bias.len() / 4;
    let f = seq.len();
    let (mut h, mut cell) = (vec![0.0; h_size], vec![0.0; h_size]);
    for t in 0..n {
        let mut z = bias.to_vec();
        for (r, zr) in z.iter_mut().enumerate() {
            for j in 0..f {
                *zr += wx[r * f + j] * seq[j][t];
            }
            for j in 0..h_size {
                *zr += wh[r * h_size + j] * h[j];
            }
        }
        for j in 0..h_size {
            let i = sigmoid(z[j]);
            let fg = sigmoid(z[h_size + j]);
            let g = z[2 * h_size + j].tanh();
            let o = sigmoid(z[3 * h_size + j]);
            cell[j] = fg * cell[j] + i * g;
            h[j] = o * cell[j].tanh();
        }
    }
    let dw = get(&p, "trend_dense.weights");
    let d = get(&p, "trend_dense.bias")[0] + dw.iter().zip(&h).map(|(a, b)| a * b).sum::<f64>();

    let mut s = 0.0;
    if c.has_seasonal() {
        let mut feats = Vec::new();
        for cy in &c.fourier.cycles {
            let ang: Vec<f64> = (1..=cy.terms)
                .map(|k| 2.0 * std::f64::consts::PI * ((k as i64 * day).rem_euclid(cy.period as i64)) as f64 / cy.period as f64)
                .collect();
            feats.extend(ang.iter().map(|a| a.cos()));
            feats.extend(ang.iter().map(|a| a.sin()));
        }
        let (w1, b1) = (get(&p, "seasonal.hidden_weights"), get(&p, "seasonal.hidden_bias"));
        let (w2, b2) = (get(&p, "seasonal.output_weights"), get(&p, "seasonal.output_bias"));
        s = b2[0];
        for j in 0..b1.len() {
            let pre = b1[j] + (0..feats.len()).map(|g| w1[j * feats.len() + g] * feats[g]).sum::<f64>();
            s += w2[j] * pre.tanh();
        }
    }
    let mut e = 0.0;
    if c.has_events() {
        e = get(&p, "event.weights").iter().zip(events).map(|(a, b)| a * b).sum();
    }
    [d + s + e, d, s, e]
}

fn random_window(rng: &mut ChaCha8Rng, m: usize, n: usize) -> Vec<Vec<f64>> {
    (0..m).map(|_| (0..n).map(|_| rng.random_range(-2.0..2.0)).collect()).collect()
}

fn to_tensor(rows: &[Vec<f64>]) -> Tensor<f64> {
    Tensor::from_rows(rows).unwrap()
}

fn components(window: &[Vec<f64>], day: i64, ev: &[f64], p: &DeepMstmParams<f64>, c: &ModelConfig) -> [f64; 4] {
    let r = forward(&to_tensor(window), day, ev, p, c).unwrap();
    [r.forecast, r.trend, r.seasonal, r.event]
}

fn full_config() -> ModelConfig {
    let mut c = ModelConfig::new(3, 1, 6);
    c.conv1d_kernels = 2;
    c.conv2d_kernels = 3;
    c.hidden = 4;
    c.seasonal_hidden = 3;
    c.event_types = 2;
    c.fourier = FourierSpec {
        cycles: vec![Cycle { period: 7, terms: 2 }, Cycle { period: 30, terms: 1 }],
    };
    c
}

#[test]
fn matches_loop_oracle_for_every_variant() {
    let base = full_config();
    let mut variants: Vec<ModelConfig> = Arm::ALL.iter().map(|&a| base.with_arm(a)).collect();
    variants.push(ModelConfig {
        trend_input: TrendInput::Raw,
        ..base.clone()
    });
    variants.push(ModelConfig {
        trend_input: TrendInput::Raw,
        multivariate: false,
        fourier: FourierSpec::default(),
        event_types: 0,
        ..base.clone()
    });
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for (i, c) in variants.iter().enumerate() {
        c.validate().unwrap();
        let mut params = init_params::<f64>(c, 10 + i as u64).unwrap();
        let flat: Vec<f64> = params.flatten().iter().map(|v| v + rng.random_range(-0.3..0.3)).collect();
        params.assign_flat(&flat).unwrap();
        for _ in 0..20 {
            let w = random_window(&mut rng, c.num_series, c.lag);
            let day = rng.random_range(-50..500);
            let ev: Vec<f64> = (0..c.event_types).map(|_| f64::from(rng.random_range(0..2u8))).collect();
            let got = components(&w, day, &ev, &params, c);
            let want = oracle(&w, day, &ev, &params, c);
            for (g, o) in got.iter().zip(want) {
                assert!((g - o).abs() < 1e-12, "variant {i}: {got:?} vs {want:?}");
            }
        }
    }
}

#[test]
fn tiny_hand_computed_model() {
    let mut c = ModelConfig::new(2, 0, 3);
    c.conv1d_kernels = 1;
    c.conv2d_kernels = 1;
    c.hidden = 1;
    c.fourier = FourierSpec::default();
    let arrays = vec![
        ("conv1d.kernels".to_string(), Tensor::new(vec![1, 2], vec![1.0, 1.0]).unwrap()),
        ("conv1d.bias".to_string(), Tensor::vector(vec![0.0])),
        ("conv2d.kernels".to_string(), Tensor::new(vec![1, 2, 2], vec![-1.0, 1.0, 0.0, 0.0]).unwrap()),
        ("conv2d.bias".to_string(), Tensor::vector(vec![0.0])),
        ("lstm.input_weights".to_string(), Tensor::new(vec![4, 2], vec![0.0, 0.0, 0.0, 0.0, 1.0, 1.0, 0.0, 0.0]).unwrap()),
        ("lstm.recurrent_weights".to_string(), Tensor::zeros(&[4, 1])),
        ("lstm.bias".to_string(), Tensor::vector(vec![0.0, 0.0, 0.0, 0.0])),
        ("trend_dense.weights".to_string(), Tensor::new(vec![1, 1], vec![2.0]).unwrap()),
        ("trend_dense.bias".to_string(), Tensor::vector(vec![0.5])),
    ];
    let params = DeepMstmParams::from_named(&c, &arrays).unwrap();
    // series x1 = [1,2,4], x2 = [0,1,0]
    // c1 = [1,3,4], c2 = [1,2] padded to [1,2,0]
    // gates i = f = o = 1/2, g = tanh(c1 + c2)
    let window = vec![vec![1.0, 2.0, 4.0], vec![0.0, 1.0, 0.0]];
    let mut cell = 0.0;
    let mut h = 0.0;
    for z in [2.0f64, 5.0, 4.0] {
        cell = 0.5 * cell + 0.5 * z.tanh();
        h = 0.5 * cell.tanh();
    }
    let d = 2.0 * h + 0.5;
    let got = components(&window, 0, &[], &params, &c);
    assert!((got[1] - d).abs() < 1e-15);
    assert_eq!(got[0], got[1]);
    assert_eq!((got[2], got[3]), (0.0, 0.0));
}

#[test]
fn zero_params_give_zero() {
    let c = full_config();
    let p = DeepMstmParams::<f64>::zeros(&c);
    let w = random_window(&mut ChaCha8Rng::seed_from_u64(1), 3, 6);
    assert_eq!(components(&w, 9, &[1.0, 0.0], &p, &c), [0.0; 4]);
}

#[test]
fn event_weight_alone_sets_forecast() {
    let mut c = ModelConfig::new(1, 0, 3);
    c.event_types = 1;
    let mut p = DeepMstmParams::<f64>::zeros(&c);
    p.event.as_mut().unwrap().weights = Tensor::new(vec![1, 1], vec![5.0]).unwrap();
    let w = vec![vec![3.0, 1.0, 2.0]];
    assert_eq!(components(&w, 3, &[1.0], &p, &c), [5.0, 0.0, 0.0, 5.0]);
}

#[test]
fn event_and_seasonal_isolation() {
    let c = full_config();
    let p = init_params::<f64>(&c, 3).unwrap();
    let a = get(&p.to_named(), "event.weights").to_vec();
    let w = random_window(&mut ChaCha8Rng::seed_from_u64(2), 3, 6);
    let base = components(&w, 11, &[0.0, 0.0], &p, &c);
    let hit = components(&w, 11, &[1.0, 1.0], &p, &c);
    assert!((hit[0] - base[0] - (a[0] + a[1])).abs() < 1e-14);
    assert_eq!(hit[1], base[1]);

    let c = ModelConfig {
        event_types: 0,
        fourier: FourierSpec::single(7, 3),
        ..c
    };
    let p = init_params::<f64>(&c, 3).unwrap();
    for t in 0..7 {
        let x = components(&w, t, &[], &p, &c);
        for k in [-3, 1, 40] {
            let y = components(&w, t + 7 * k, &[], &p, &c);
            assert_eq!(x[0] - x[1], y[0] - y[1]);
        }
    }
}

#[test]
fn forecast_is_exact_sum_of_parts() {
    let c = full_config();
    let p = init_params::<f64>(&c, 8).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    for t in 0..200 {
        let w = random_window(&mut rng, 3, 6);
        let r = components(&w, t, &[1.0, f64::from(t as u8 % 2)], &p, &c);
        assert_eq!(r[0], r[1] + r[2] + r[3]);
    }
}

#[test]
fn identical_columns_can_be_swapped_in_model2() {
    let c = full_config().with_arm(Arm::Model2);
    let p = init_params::<f64>(&c, 1).unwrap();
    let mut w = random_window(&mut ChaCha8Rng::seed_from_u64(5), 3, 6);
    for row in &mut w {
        row[4] = row[1];
    }
    let mut swapped = w.clone();
    for row in &mut swapped {
        row.swap(1, 4);
    }
    assert_eq!(components(&w, 2, &[0.0, 1.0], &p, &c), components(&swapped, 2, &[0.0, 1.0], &p, &c));
}

#[test]
fn rejects_wrong_window_shape() {
    let c = full_config();
    let p = DeepMstmParams::<f64>::zeros(&c);
    let w = vec![vec![0.0; 5]; 3];
    assert!(forward(&to_tensor(&w), 0, &[0.0, 0.0], &p, &c).is_err());
}

fn month_frame() -> (SeriesFrame, EventCalendar) {
    let start = NaiveDate::from_ymd_opt(2020, 1, 1).unwrap();
    let dates: Vec<NaiveDate> = (0..120).map(|i| start + chrono::Days::new(i)).collect();
    let values = vec![(0..120).map(|i| (i as f64 * 0.3).sin()).collect()];
    let frame = SeriesFrame::new(vec!["x".into()], dates.clone(), values).unwrap();
    let cal = EventCalendar::month_starts("month_start", start, *dates.last().unwrap());
    (frame, cal)
}

#[test]
fn decompose_event_only_spikes_on_month_starts() {
    let (frame, cal) = month_frame();
    let mut c = ModelConfig::new(1, 0, 5);
    c.event_types = 1;
    let mut p = DeepMstmParams::<f64>::zeros(&c);
    p.event.as_mut().unwrap().weights = Tensor::new(vec![1, 1], vec![2.5]).unwrap();
    let range = DateRange::new(frame.dates()[10], frame.dates()[119]).unwrap();
    let dec = decompose(&frame, &range, &p, &c, Some(&cal)).unwrap();
    assert_eq!(dec.len(), 110);
    for i in 0..dec.len() {
        use chrono::Datelike;
        let want = if dec.dates[i].day() == 1 { 2.5 } else { 0.0 };
        assert_eq!(dec.event[i], want);
        assert_eq!((dec.trend[i], dec.seasonal[i]), (0.0, 0.0));
        assert_eq!(dec.forecast[i], dec.trend[i] + dec.seasonal[i] + dec.event[i]);
    }

    let zero = DeepMstmParams::<f64>::zeros(&c);
    let dec = decompose(&frame, &range, &zero, &c, Some(&cal)).unwrap();
    assert!(dec.forecast.iter().chain(&dec.trend).all(|&v| v == 0.0));
}

#[test]
fn decompose_needs_history() {
    let (frame, cal) = month_frame();
    let mut c = ModelConfig::new(1, 0, 5);
    c.event_types = 1;
    let p = DeepMstmParams::<f64>::zeros(&c);
    let range = DateRange::new(frame.dates()[4], frame.dates()[20]).unwrap();
    assert!(decompose(&frame, &range, &p, &c, Some(&cal)).is_err());
}
