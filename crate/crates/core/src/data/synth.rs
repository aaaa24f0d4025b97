//! Synthetic multivariate series with stored ground-truth components.
//!
//! Each series is `trend + seasonal + event + noise`. Trends are
//! piecewise-linear; a coupling coefficient `rho` mixes a shared latent trend
//! into every series: `trend_m(t) = rho * shared(t + lead_m) + (1 - rho) * own_m(t)`.

use std::f64::consts::PI;
use std::io::Write;

use chrono::{Datelike, NaiveDate};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

use super::csv_io::{csv_error, format_real};
use super::{EventCalendar, SeriesFrame};

/// Piecewise-linear curve.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TrendSpec {
    /// `(day, value)` knots; constant before the first and after the last.
    Knots { knots: Vec<[f64; 2]> },
    /// Knots every `spacing` days whose values follow a Gaussian random walk.
    /// With `reversion` in `(0, 1]` each step also pulls the value back
    /// towards `start` by that fraction of its current offset.
    RandomWalk {
        spacing: usize,
        step_sigma: f64,
        #[serde(default)]
        start: f64,
        #[serde(default)]
        reversion: f64,
    },
}

impl Default for TrendSpec {
    fn default() -> Self {
        TrendSpec::Knots { knots: Vec::new() }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SeasonSpec {
    pub period: u32,
    pub amplitude: f64,
    /// Radians.
    #[serde(default)]
    pub phase: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum EventRule {
    MonthStart,
    Dates { dates: Vec<NaiveDate> },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EventSpec {
    pub name: String,
    pub rule: EventRule,
    /// Effect on each series, in series order; missing entries are zero.
    pub amplitudes: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SeriesSpec {
    pub id: String,
    #[serde(default)]
    pub trend: TrendSpec,
    #[serde(default)]
    pub seasons: Vec<SeasonSpec>,
    #[serde(default)]
    pub noise_sigma: f64,
    /// Days by which this series reads the shared trend ahead (positive) or
    /// behind (negative).
    #[serde(default)]
    pub lead: i64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SynthSpec {
    pub start: NaiveDate,
    pub length: usize,
    #[serde(default)]
    pub coupling: f64,
    #[serde(default)]
    pub shared_trend: TrendSpec,
    pub series: Vec<SeriesSpec>,
    #[serde(default)]
    pub events: Vec<EventSpec>,
}

/// True components of one generated series.
#[derive(Clone, Debug, PartialEq)]
pub struct SeriesTruth {
    pub trend: Vec<f64>,
    pub seasonal: Vec<f64>,
    pub event: Vec<f64>,
    pub noise: Vec<f64>,
}

#[derive(Clone, Debug)]
pub struct SynthOutput {
    pub frame: SeriesFrame,
    pub truth: Vec<SeriesTruth>,
    pub calendar: EventCalendar,
}

impl SynthSpec {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Config(msg));
        if self.length == 0 {
            return bad("length must be positive".into());
        }
        if self.series.is_empty() {
            return bad("at least one series is required".into());
        }
        if !(0.0..=1.0).contains(&self.coupling) {
            return bad(format!("coupling must lie in [0, 1], got {}", self.coupling));
        }
        let mut trends = vec![&self.shared_trend];
        for s in &self.series {
            if !(s.noise_sigma >= 0.0 && s.noise_sigma.is_finite()) {
                return bad(format!("series {:?}: noise_sigma must be finite and >= 0", s.id));
            }
            if let Some(p) = s.seasons.iter().find(|p| p.period == 0) {
                return bad(format!("series {:?}: season period must be positive, got {p:?}", s.id));
            }
            trends.push(&s.trend);
        }
        for t in trends {
            if let TrendSpec::RandomWalk {
                spacing,
                step_sigma,
                reversion,
                ..
            } = t
            {
                if *spacing == 0 || step_sigma.is_nan() || *step_sigma < 0.0 {
                    return bad("random-walk trend needs spacing > 0 and step_sigma >= 0".into());
                }
                if !(0.0..=1.0).contains(reversion) {
                    return bad(format!("random-walk reversion must lie in [0, 1], got {reversion}"));
                }
            }
        }
        for e in &self.events {
            if e.amplitudes.len() > self.series.len() {
                return bad(format!("event {:?} lists more amplitudes than series", e.name));
            }
        }
        Ok(())
    }
}

struct Curve {
    knots: Vec<(f64, f64)>,
}

impl Curve {
    fn realize(spec: &TrendSpec, horizon: i64, rng: &mut ChaCha8Rng) -> Result<Curve> {
        let knots = match spec {
            TrendSpec::Knots { knots } => {
                let mut k: Vec<(f64, f64)> = knots.iter().map(|[x, y]| (*x, *y)).collect();
                k.sort_by(|a, b| a.0.total_cmp(&b.0));
                k
            }
            TrendSpec::RandomWalk {
                spacing,
                step_sigma,
                start,
                reversion,
            } => {
                let step = Normal::new(0.0, *step_sigma).map_err(|e| Error::Config(e.to_string()))?;
                let mut value = *start;
                let mut k = Vec::new();
                let mut x = -(*spacing as i64);
                while x <= horizon + *spacing as i64 {
                    k.push((x as f64, value));
                    value += step.sample(rng) - reversion * (value - start);
                    x += *spacing as i64;
                }
                k
            }
        };
        Ok(Curve { knots })
    }

    fn at(&self, x: f64) -> f64 {
        let k = &self.knots;
        match k.len() {
            0 => 0.0,
            _ if x <= k[0].0 => k[0].1,
            n if x >= k[n - 1].0 => k[n - 1].1,
            _ => {
                let i = k.partition_point(|p| p.0 <= x);
                let ((x0, y0), (x1, y1)) = (k[i - 1], k[i]);
                y0 + (y1 - y0) * (x - x0) / (x1 - x0)
            }
        }
    }
}

fn season_value(s: &SeasonSpec, day: i64) -> f64 {
    let p = i64::from(s.period);
    let phase = day.rem_euclid(p) as f64 / p as f64;
    s.amplitude * (2.0 * PI * phase + s.phase).sin()
}

/// Generates the series described by `spec`; identical for identical seeds.
pub fn synth_generate(spec: &SynthSpec, seed: u64) -> Result<SynthOutput> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = spec.length;
    let max_lead = spec.series.iter().map(|s| s.lead.abs()).max().unwrap_or(0);
    let horizon = n as i64 + max_lead;

    let dates: Vec<NaiveDate> = spec.start.iter_days().take(n).collect();
    if dates.len() != n {
        return Err(Error::Config("date range overflows the calendar".into()));
    }

    let mut calendar = EventCalendar::new(spec.events.iter().map(|e| e.name.clone()).collect());
    for (k, e) in spec.events.iter().enumerate() {
        match &e.rule {
            EventRule::MonthStart => dates.iter().filter(|d| d.day() == 1).for_each(|d| calendar.mark(*d, k)),
            EventRule::Dates { dates: ds } => ds.iter().for_each(|d| calendar.mark(*d, k)),
        }
    }

    let shared = Curve::realize(&spec.shared_trend, horizon, &mut rng)?;
    let own: Vec<Curve> = spec
        .series
        .iter()
        .map(|s| Curve::realize(&s.trend, horizon, &mut rng))
        .collect::<Result<_>>()?;

    let rho = spec.coupling;
    let mut truth = Vec::with_capacity(spec.series.len());
    for (m, (s, own_curve)) in spec.series.iter().zip(&own).enumerate() {
        let noise_dist = Normal::new(0.0, s.noise_sigma).map_err(|e| Error::Config(e.to_string()))?;
        let mut t = SeriesTruth {
            trend: Vec::with_capacity(n),
            seasonal: Vec::with_capacity(n),
            event: Vec::with_capacity(n),
            noise: Vec::with_capacity(n),
        };
        for (i, date) in dates.iter().enumerate() {
            let day = i as i64;
            let x = day as f64;
            t.trend.push(rho * shared.at((day + s.lead) as f64) + (1.0 - rho) * own_curve.at(x));
            t.seasonal.push(s.seasons.iter().map(|p| season_value(p, day)).sum());
            let flags = calendar.indicators(*date);
            let effect = spec
                .events
                .iter()
                .zip(flags)
                .map(|(e, f)| f * e.amplitudes.get(m).copied().unwrap_or(0.0))
                .sum();
            t.event.push(effect);
            t.noise.push(if s.noise_sigma > 0.0 { noise_dist.sample(&mut rng) } else { 0.0 });
        }
        truth.push(t);
    }

    let values = truth
        .iter()
        .map(|t| (0..n).map(|i| t.trend[i] + t.seasonal[i] + t.event[i] + t.noise[i]).collect())
        .collect();
    let ids = spec.series.iter().map(|s| s.id.clone()).collect();
    let frame = SeriesFrame::new(ids, dates, values)?;
    Ok(SynthOutput { frame, truth, calendar })
}

/// Long-format truth: `date,series,value,trend,seasonal,event,noise`.
pub fn write_truth_csv(out: &SynthOutput, writer: impl Write) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["date", "series", "value", "trend", "seasonal", "event", "noise"])
        .map_err(csv_error)?;
    for (m, t) in out.truth.iter().enumerate() {
        let id = &out.frame.series_ids()[m];
        for (i, date) in out.frame.dates().iter().enumerate() {
            w.write_record([
                date.to_string(),
                id.clone(),
                format_real(out.frame.series(m)[i]),
                format_real(t.trend[i]),
                format_real(t.seasonal[i]),
                format_real(t.event[i]),
                format_real(t.noise[i]),
            ])
            .map_err(csv_error)?;
        }
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn base(series: Vec<SeriesSpec>) -> SynthSpec {
        SynthSpec {
            start: "2018-01-01".parse().unwrap(),
            length: 60,
            coupling: 0.0,
            shared_trend: TrendSpec::default(),
            series,
            events: Vec::new(),
        }
    }

    fn plain(id: &str) -> SeriesSpec {
        SeriesSpec {
            id: id.into(),
            trend: TrendSpec::default(),
            seasons: Vec::new(),
            noise_sigma: 0.0,
            lead: 0,
        }
    }

    #[test]
    fn unit_slope_is_counting() {
        let mut s = plain("a");
        s.trend = TrendSpec::Knots {
            knots: vec![[0.0, 0.0], [59.0, 59.0]],
        };
        let out = synth_generate(&base(vec![s]), 1).unwrap();
        let expect: Vec<f64> = (0..60).map(f64::from).collect();
        assert_eq!(out.frame.series(0), expect.as_slice());
    }

    #[test]
    fn season_is_exactly_periodic() {
        let mut s = plain("a");
        s.trend = TrendSpec::Knots {
            knots: vec![[0.0, 3.0], [59.0, 20.0]],
        };
        s.seasons.push(SeasonSpec {
            period: 7,
            amplitude: 1.0,
            phase: 0.3,
        });
        let out = synth_generate(&base(vec![s]), 1).unwrap();
        let detrended: Vec<f64> = out.frame.series(0).iter().zip(&out.truth[0].trend).map(|(v, d)| v - d).collect();
        for i in 7..60 {
            assert_eq!(out.truth[0].seasonal[i], out.truth[0].seasonal[i - 7]);
            assert!((detrended[i] - detrended[i - 7]).abs() < 1e-12);
        }
    }

    #[test]
    fn full_coupling_shares_trend() {
        let mut spec = base(vec![plain("a"), plain("b")]);
        spec.coupling = 1.0;
        spec.shared_trend = TrendSpec::RandomWalk {
            spacing: 10,
            step_sigma: 1.0,
            start: 5.0,
            reversion: 0.0,
        };
        spec.series[1].trend = TrendSpec::Knots {
            knots: vec![[0.0, 100.0]],
        };
        let out = synth_generate(&spec, 9).unwrap();
        assert_eq!(out.truth[0].trend, out.truth[1].trend);
    }

    #[test]
    fn full_reversion_stays_near_start() {
        let mut spec = base(vec![plain("a")]);
        spec.coupling = 1.0;
        spec.shared_trend = TrendSpec::RandomWalk {
            spacing: 5,
            step_sigma: 1.0,
            start: 20.0,
            reversion: 1.0,
        };
        let out = synth_generate(&spec, 2).unwrap();
        // every knot is start plus a single fresh step
        assert!(out.truth[0].trend.iter().all(|v| (v - 20.0).abs() < 6.0));
        spec.shared_trend = TrendSpec::RandomWalk {
            spacing: 5,
            step_sigma: 1.0,
            start: 20.0,
            reversion: 1.5,
        };
        assert!(spec.validate().is_err());
    }

    #[test]
    fn components_add_up_and_seed_is_deterministic() {
        let mut spec = base(vec![plain("a"), plain("b")]);
        spec.coupling = 0.5;
        spec.shared_trend = TrendSpec::RandomWalk {
            spacing: 7,
            step_sigma: 2.0,
            start: 0.0,
            reversion: 0.0,
        };
        spec.series[0].noise_sigma = 0.3;
        spec.series[1].lead = 3;
        spec.events.push(EventSpec {
            name: "m".into(),
            rule: EventRule::MonthStart,
            amplitudes: vec![4.0, -1.0],
        });
        let a = synth_generate(&spec, 5).unwrap();
        let b = synth_generate(&spec, 5).unwrap();
        assert_eq!(a.frame, b.frame);
        for (m, t) in a.truth.iter().enumerate() {
            for i in 0..spec.length {
                assert_eq!(a.frame.series(m)[i], t.trend[i] + t.seasonal[i] + t.event[i] + t.noise[i]);
            }
        }
        let feb1 = a.frame.index_of("2018-02-01".parse().unwrap()).unwrap();
        assert_eq!(a.truth[0].event[feb1], 4.0);
        assert_eq!(a.truth[1].event[feb1], -1.0);
        assert_eq!(a.truth[0].event[feb1 + 1], 0.0);
    }

    #[test]
    fn invalid_spec() {
        let mut spec = base(vec![plain("a")]);
        spec.coupling = 1.5;
        assert!(synth_generate(&spec, 0).is_err());
    }
}
