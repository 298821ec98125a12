//! Synthetic plant signals with a slow global component and a fast local one.
//!
//! Each signal is `G·long_t + L·short_t + noise_t`. The long drivers are
//! smoothed mean-reverting walks shared by every signal; the short drivers
//! are white and each touches only a few signals. Per signal, the long part
//! is rescaled to `amplitude_ratio` times the short part's standard deviation
//! on the training span. Anomalies are injected into the test span only.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{check_len, Error, Result};
use crate::linalg::Matrix;
use crate::preprocess::TimeSeriesMatrix;
use crate::stats::{is_constant, mean, pearson, std_dev};
use crate::train::derive_seed;

const STREAM_MIX: u64 = 11;
const STREAM_LONG: u64 = 12;
const STREAM_SHORT: u64 = 13;
const STREAM_NOISE: u64 = 14;
const STREAM_ANOMALY: u64 = 15;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "kebab-case"))]
pub enum AnomalyKind {
    /// Constant offset of `magnitude` short-term standard deviations (signed).
    MeanShift,
    /// Linear ramp from 0 to `magnitude` over the anomaly.
    Drift,
    /// The short-term part of each affected signal is replaced by independent
    /// noise with `magnitude` times its usual standard deviation.
    CorrelationBreak,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct AnomalySpec {
    pub kind: AnomalyKind,
    pub signals: Vec<usize>,
    /// First anomalous instant, counted from the start of the test span.
    pub start: usize,
    pub duration: usize,
    pub magnitude: f64,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default))]
pub struct SyntheticSpec {
    pub m: usize,
    pub t_train: usize,
    pub t_test: usize,
    pub n_long: usize,
    pub n_short: usize,
    /// Standard deviation of the long part over that of the short part, per signal.
    pub amplitude_ratio: f64,
    /// Moving-average width of the long drivers; `None` means `(t_train + t_test) / 20`.
    pub long_smoothing: Option<usize>,
    /// Inclusive range of signals touched by each short driver.
    pub short_fanout: (usize, usize),
    /// Noise standard deviation in units of the short part's.
    pub noise: f64,
    pub anomalies: Vec<AnomalySpec>,
    pub seed: u64,
}

impl Default for SyntheticSpec {
    fn default() -> Self {
        Self {
            m: 30,
            t_train: 20_000,
            t_test: 5_000,
            n_long: 3,
            n_short: 8,
            amplitude_ratio: 5.0,
            long_smoothing: None,
            short_fanout: (3, 8),
            noise: 0.1,
            anomalies: Vec::new(),
            seed: 0,
        }
    }
}

impl SyntheticSpec {
    pub fn total_len(&self) -> usize {
        self.t_train + self.t_test
    }

    pub fn smoothing(&self) -> usize {
        self.long_smoothing.unwrap_or(self.total_len() / 20).max(1)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidParam(msg));
        if self.m == 0 || self.n_long == 0 || self.n_short == 0 {
            return bad("m, n_long and n_short must be positive".into());
        }
        if self.t_train < 2 || self.t_test == 0 {
            return bad("train span needs at least 2 instants and test span at least 1".into());
        }
        if !(self.amplitude_ratio >= 5.0) || !self.amplitude_ratio.is_finite() {
            return bad(format!("amplitude ratio must be at least 5, got {}", self.amplitude_ratio));
        }
        if !(self.noise >= 0.0) || !self.noise.is_finite() {
            return bad(format!("noise level must be finite and non-negative, got {}", self.noise));
        }
        let (lo, hi) = self.short_fanout;
        if lo == 0 || lo > hi {
            return bad(format!("short fan-out range ({lo}, {hi}) is empty"));
        }
        for (k, a) in self.anomalies.iter().enumerate() {
            if a.duration == 0 || a.start + a.duration > self.t_test {
                return bad(format!(
                    "anomaly {k} spans [{}, {}) outside the test range [0, {})",
                    a.start,
                    a.start + a.duration,
                    self.t_test
                ));
            }
            if a.signals.is_empty() || a.signals.iter().any(|&s| s >= self.m) {
                return bad(format!("anomaly {k} names signals outside 0..{}", self.m));
            }
            if !a.magnitude.is_finite() {
                return bad(format!("anomaly {k} magnitude is not finite"));
            }
        }
        Ok(())
    }

    /// `count` anomalies cycling through the three kinds, evenly spaced over
    /// the test span, each touching `n_signals` consecutive signals. Offsets
    /// are positive in the first half and negative in the second.
    pub fn with_standard_anomalies(mut self, count: usize, duration: usize, n_signals: usize) -> Self {
        let kinds = [AnomalyKind::MeanShift, AnomalyKind::Drift, AnomalyKind::CorrelationBreak];
        let gap = self.t_test / (count + 1);
        let n_signals = n_signals.clamp(1, self.m);
        self.anomalies = (0..count)
            .map(|k| {
                let kind = kinds[k % kinds.len()];
                let first = (k * 7) % self.m;
                let sign = if 2 * k < count { 1.0 } else { -1.0 };
                AnomalySpec {
                    kind,
                    signals: (0..n_signals).map(|j| (first + j) % self.m).collect(),
                    start: (gap * (k + 1)).saturating_sub(duration / 2),
                    duration,
                    magnitude: match kind {
                        AnomalyKind::MeanShift => 2.0 * sign,
                        AnomalyKind::Drift => 3.0 * sign,
                        AnomalyKind::CorrelationBreak => 1.5,
                    },
                }
            })
            .collect();
        self
    }
}

/// Generated data together with its latent pieces.
#[derive(Debug, Clone)]
pub struct SyntheticData {
    pub train: TimeSeriesMatrix,
    pub test: TimeSeriesMatrix,
    /// `(t_train + t_test) x n_long`, standardized on the train span.
    pub long_drivers: Matrix,
    /// `(t_train + t_test) x n_short`.
    pub short_drivers: Matrix,
    /// Standard deviation of one short-term unit per signal, in output units.
    pub short_scale: Vec<f64>,
}

fn normals(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| rng.sample::<f64, _>(StandardNormal)).collect()
}

/// Mean-reverting walk smoothed by a trailing moving average of width `w`.
fn long_driver(rng: &mut ChaCha8Rng, len: usize, w: usize, train_len: usize) -> Vec<f64> {
    let phi = 1.0 - 1.0 / w as f64;
    let burn = 2 * w;
    let steps = normals(rng, len + burn + w);
    let mut walk = Vec::with_capacity(steps.len());
    let mut state = 0.0;
    for e in steps {
        state = phi * state + e;
        walk.push(state);
    }
    let mut out = Vec::with_capacity(len);
    let mut acc: f64 = walk[burn..burn + w].iter().sum();
    for t in 0..len {
        out.push(acc / w as f64);
        acc += walk[burn + w + t] - walk[burn + t];
    }
    standardize(&mut out, train_len);
    out
}

fn standardize(x: &mut [f64], fit_len: usize) {
    let mu = mean(&x[..fit_len]);
    let sd = std_dev(&x[..fit_len]);
    let sd = if sd > 0.0 { sd } else { 1.0 };
    for v in x.iter_mut() {
        *v = (*v - mu) / sd;
    }
}

fn column_names(m: usize) -> Vec<String> {
    let width = format!("{}", m.saturating_sub(1)).len().max(2);
    (0..m).map(|i| format!("s{i:0width$}")).collect()
}

pub fn generate(spec: &SyntheticSpec) -> Result<(TimeSeriesMatrix, TimeSeriesMatrix)> {
    let data = generate_detailed(spec)?;
    Ok((data.train, data.test))
}

pub fn generate_detailed(spec: &SyntheticSpec) -> Result<SyntheticData> {
    spec.validate()?;
    let (m, total, tt) = (spec.m, spec.total_len(), spec.t_train);

    // Mixing: dense global loadings, sparse local ones covering every signal.
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(spec.seed, STREAM_MIX));
    let g = normals(&mut rng, m * spec.n_long);
    let mut l = vec![0.0; m * spec.n_short];
    let (lo, hi) = spec.short_fanout;
    let (lo, hi) = (lo.min(m), hi.min(m));
    for d in 0..spec.n_short {
        let k = rng.random_range(lo..=hi);
        for i in sample(&mut rng, m, k).into_vec() {
            l[i * spec.n_short + d] = rng.random_range(0.5..1.5) * if rng.random::<bool>() { 1.0 } else { -1.0 };
        }
    }
    for i in 0..m {
        if l[i * spec.n_short..(i + 1) * spec.n_short].iter().all(|&w| w == 0.0) {
            let d = rng.random_range(0..spec.n_short);
            l[i * spec.n_short + d] = rng.random_range(0.5..1.5);
        }
    }

    // Drivers, generated driver-major.
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(spec.seed, STREAM_LONG));
    let w = spec.smoothing();
    let long: Vec<Vec<f64>> = (0..spec.n_long).map(|_| long_driver(&mut rng, total, w, tt)).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(spec.seed, STREAM_SHORT));
    let short: Vec<Vec<f64>> = (0..spec.n_short).map(|_| normals(&mut rng, total)).collect();
    let mut noise_rng = ChaCha8Rng::seed_from_u64(derive_seed(spec.seed, STREAM_NOISE));

    // Per-signal components, rescaled on the train span.
    let mut signals = Vec::with_capacity(m);
    let mut short_parts = Vec::with_capacity(m);
    for i in 0..m {
        let mut lp: Vec<f64> = (0..total)
            .map(|t| (0..spec.n_long).map(|d| g[i * spec.n_long + d] * long[d][t]).sum())
            .collect();
        let mut sp: Vec<f64> = (0..total)
            .map(|t| (0..spec.n_short).map(|d| l[i * spec.n_short + d] * short[d][t]).sum())
            .collect();
        standardize(&mut sp, tt);
        standardize(&mut lp, tt);
        let noise = normals(&mut noise_rng, total);
        let x: Vec<f64> = (0..total)
            .map(|t| spec.amplitude_ratio * lp[t] + sp[t] + spec.noise * noise[t])
            .collect();
        signals.push(x);
        short_parts.push(sp);
    }

    // Anomalies on the test span.
    let mut labels = vec![0u8; spec.t_test];
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(spec.seed, STREAM_ANOMALY));
    for a in &spec.anomalies {
        labels[a.start..a.start + a.duration].fill(1);
        for &s in &a.signals {
            let fresh = normals(&mut rng, a.duration);
            for (j, t) in (tt + a.start..tt + a.start + a.duration).enumerate() {
                let delta = match a.kind {
                    AnomalyKind::MeanShift => a.magnitude,
                    AnomalyKind::Drift => a.magnitude * (j + 1) as f64 / a.duration as f64,
                    AnomalyKind::CorrelationBreak => a.magnitude * fresh[j] - short_parts[s][t],
                };
                signals[s][t] += delta;
            }
        }
    }

    // Map the train range of each signal onto [0, 1].
    let mut short_scale = Vec::with_capacity(m);
    for x in &mut signals {
        let (lo, hi) = x[..tt]
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| (a.min(v), b.max(v)));
        let span = if hi > lo { hi - lo } else { 1.0 };
        for v in x.iter_mut() {
            *v = (*v - lo) / span;
        }
        short_scale.push(1.0 / span);
    }

    let names = column_names(m);
    let to_matrix = |range: core::ops::Range<usize>| {
        let mut data = Vec::with_capacity(range.len() * m);
        for t in range.clone() {
            data.extend(signals.iter().map(|x| x[t]));
        }
        Matrix::from_vec(range.len(), m, data)
    };
    let train = TimeSeriesMatrix::new(to_matrix(0..tt)?, names.clone())?.with_sample_period(1.0);
    let test = TimeSeriesMatrix::new(to_matrix(tt..total)?, names)?
        .with_sample_period(1.0)
        .with_labels(labels)?;
    let drivers = |d: &[Vec<f64>]| {
        let mut data = Vec::with_capacity(total * d.len());
        for t in 0..total {
            data.extend(d.iter().map(|x| x[t]));
        }
        Matrix::from_vec(total, d.len(), data)
    };
    Ok(SyntheticData {
        train,
        test,
        long_drivers: drivers(&long)?,
        short_drivers: drivers(&short)?,
        short_scale,
    })
}

/// Cross-correlations between columns of `a` (rows) and columns of `b`.
#[derive(Debug, Clone, PartialEq)]
pub struct CorrelationCheck {
    pub max_abs: f64,
    /// Mean of `|rho|` over pairs where both columns vary.
    pub mean_abs: f64,
    /// `a.cols() x b.cols()`; 0 where a column is constant.
    pub matrix: Matrix,
    pub constant_a: Vec<bool>,
    pub constant_b: Vec<bool>,
}

pub fn correlation_separation_check(a: &Matrix, b: &Matrix) -> Result<CorrelationCheck> {
    check_len("correlation sample count", a.rows(), b.rows())?;
    if a.rows() < 2 {
        return Err(Error::TooShort {
            required: 2,
            actual: a.rows(),
        });
    }
    let cols_a: Vec<Vec<f64>> = (0..a.cols()).map(|c| a.column(c)).collect();
    let cols_b: Vec<Vec<f64>> = (0..b.cols()).map(|c| b.column(c)).collect();
    let constant_a: Vec<bool> = cols_a.iter().map(|c| is_constant(c)).collect();
    let constant_b: Vec<bool> = cols_b.iter().map(|c| is_constant(c)).collect();
    let mut matrix = Matrix::zeros(a.cols(), b.cols());
    let (mut max_abs, mut sum, mut n) = (0.0f64, 0.0, 0usize);
    for (i, ca) in cols_a.iter().enumerate() {
        for (j, cb) in cols_b.iter().enumerate() {
            if let Some(r) = pearson(ca, cb)? {
                matrix.set(i, j, r);
                max_abs = max_abs.max(r.abs());
                sum += r.abs();
                n += 1;
            }
        }
    }
    Ok(CorrelationCheck {
        max_abs,
        mean_abs: if n > 0 { sum / n as f64 } else { 0.0 },
        matrix,
        constant_a,
        constant_b,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eval::segments_from_labels;
    use crate::stats::autocorr;

    fn small() -> SyntheticSpec {
        SyntheticSpec {
            m: 12,
            t_train: 4000,
            t_test: 1000,
            ..SyntheticSpec::default()
        }
    }

    #[test]
    fn same_seed_same_data() {
        let spec = small().with_standard_anomalies(3, 40, 3);
        let (a, b) = generate(&spec).unwrap();
        let (c, d) = generate(&spec).unwrap();
        assert_eq!(a.values(), c.values());
        assert_eq!(b.values(), d.values());
        let other = generate(&SyntheticSpec { seed: 1, ..spec }).unwrap();
        assert_ne!(a.values(), other.0.values());
    }

    #[test]
    fn shapes_labels_and_range() {
        let spec = small().with_standard_anomalies(3, 40, 3);
        let (train, test) = generate(&spec).unwrap();
        assert_eq!((train.len(), train.dim()), (4000, 12));
        assert_eq!((test.len(), test.dim()), (1000, 12));
        assert!(train.labels().is_none());
        let segs = segments_from_labels(test.labels().unwrap());
        assert_eq!(segs.len(), 3);
        assert!(segs.iter().all(|s| s.len() == 40));
        for c in 0..12 {
            let col = train.values().column(c);
            let lo = col.iter().copied().fold(f64::INFINITY, f64::min);
            let hi = col.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            assert!(lo.abs() < 1e-12 && (hi - 1.0).abs() < 1e-12);
        }
        assert_eq!(train.column_names()[3], "s03");
    }

    #[test]
    fn rejects_out_of_range_anomaly() {
        let mut spec = small().with_standard_anomalies(1, 40, 3);
        spec.anomalies[0].start = 990;
        assert!(generate(&spec).is_err());
        let mut spec = small().with_standard_anomalies(1, 40, 3);
        spec.anomalies[0].signals = vec![12];
        assert!(generate(&spec).is_err());
        assert!(generate(&SyntheticSpec { amplitude_ratio: 4.0, ..small() }).is_err());
    }

    #[test]
    fn pure_long_component_is_smooth() {
        // Amplitude ratio huge and no noise: the short part is negligible.
        let spec = SyntheticSpec {
            amplitude_ratio: 1e9,
            noise: 0.0,
            ..small()
        };
        let (train, _) = generate(&spec).unwrap();
        for c in 0..spec.m {
            assert!(autocorr(&train.values().column(c), 1).unwrap() > 0.95);
        }
    }

    #[test]
    fn drivers_are_uncorrelated() {
        let spec = SyntheticSpec {
            t_train: 10_000,
            t_test: 2_000,
            ..small()
        };
        let data = generate_detailed(&spec).unwrap();
        let check = correlation_separation_check(&data.long_drivers, &data.short_drivers).unwrap();
        assert!(check.max_abs < 0.1, "max |rho| {}", check.max_abs);
    }

    #[test]
    fn mean_shift_moves_by_short_units() {
        let mut spec = small();
        spec.anomalies = vec![AnomalySpec {
            kind: AnomalyKind::MeanShift,
            signals: vec![0, 1, 2],
            start: 300,
            duration: 100,
            magnitude: 10.0,
        }];
        let shifted = generate_detailed(&spec).unwrap();
        let clean = generate_detailed(&SyntheticSpec {
            anomalies: vec![],
            ..spec.clone()
        })
        .unwrap();
        for s in 0..3 {
            let a = mean(&shifted.test.values().column(s)[300..400]);
            let b = mean(&clean.test.values().column(s)[300..400]);
            assert!((a - b) / clean.short_scale[s] >= 5.0);
        }
    }

    #[test]
    fn long_energy_dominates() {
        let spec = SyntheticSpec {
            noise: 0.0,
            ..small()
        };
        let data = generate_detailed(&spec).unwrap();
        // Short part has unit variance per signal, the long part ratio^2;
        // their sample cross term is small but not zero.
        let expected = spec.amplitude_ratio * spec.amplitude_ratio + 1.0;
        for c in 0..spec.m {
            let sd = std_dev(&data.train.values().column(c)) / data.short_scale[c];
            assert!((sd * sd / expected - 1.0).abs() < 0.25);
        }
    }

    #[test]
    fn separation_check_cases() {
        let x = Matrix::from_rows(&[vec![1.0, 0.0], vec![2.0, 1.0], vec![4.0, 0.0]]).unwrap();
        let c = correlation_separation_check(&x, &x).unwrap();
        assert!((c.matrix.get(0, 0) - 1.0).abs() < 1e-12);
        assert!((c.matrix.get(1, 1) - 1.0).abs() < 1e-12);
        let z = Matrix::zeros(3, 2);
        let c = correlation_separation_check(&x, &z).unwrap();
        assert_eq!(c.constant_b, vec![true, true]);
        assert_eq!((c.max_abs, c.mean_abs), (0.0, 0.0));
        assert!(correlation_separation_check(&x, &Matrix::zeros(2, 2)).is_err());
    }
}
