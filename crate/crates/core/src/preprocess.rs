//! Data preparation: column exclusion, train-fitted min-max scaling,
//! anti-aliased decimation, sliding windows and the train/validation split.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{check_len, Error, Result};
use crate::filter::{cheby1_lowpass, Sos};
use crate::linalg::Matrix;

/// `T x m` sensor readings with column names and optional ground truth.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeSeriesMatrix {
    values: Matrix,
    column_names: Vec<String>,
    labels: Option<Vec<u8>>,
    timestamps: Option<Vec<String>>,
    sample_period: Option<f64>,
}

impl TimeSeriesMatrix {
    pub fn new(values: Matrix, column_names: Vec<String>) -> Result<Self> {
        check_len("column names", values.cols(), column_names.len())?;
        if !values.is_finite() {
            return Err(Error::NonFinite("time series values"));
        }
        Ok(Self {
            values,
            column_names,
            labels: None,
            timestamps: None,
            sample_period: None,
        })
    }

    pub fn with_labels(mut self, labels: Vec<u8>) -> Result<Self> {
        check_len("labels", self.values.rows(), labels.len())?;
        if labels.iter().any(|&l| l > 1) {
            return Err(Error::InvalidParam("labels must be 0 or 1".into()));
        }
        self.labels = Some(labels);
        Ok(self)
    }

    pub fn with_timestamps(mut self, timestamps: Vec<String>) -> Result<Self> {
        check_len("timestamps", self.values.rows(), timestamps.len())?;
        self.timestamps = Some(timestamps);
        Ok(self)
    }

    pub fn with_sample_period(mut self, seconds: f64) -> Self {
        self.sample_period = Some(seconds);
        self
    }

    pub fn values(&self) -> &Matrix {
        &self.values
    }

    pub fn column_names(&self) -> &[String] {
        &self.column_names
    }

    pub fn labels(&self) -> Option<&[u8]> {
        self.labels.as_deref()
    }

    pub fn timestamps(&self) -> Option<&[String]> {
        self.timestamps.as_deref()
    }

    pub fn sample_period(&self) -> Option<f64> {
        self.sample_period
    }

    /// Number of time instants `T`.
    pub fn len(&self) -> usize {
        self.values.rows()
    }

    pub fn is_empty(&self) -> bool {
        self.values.rows() == 0
    }

    /// Number of signals `m`.
    pub fn dim(&self) -> usize {
        self.values.cols()
    }

    fn with_values(&self, values: Matrix) -> Self {
        Self {
            values,
            column_names: self.column_names.clone(),
            labels: self.labels.clone(),
            timestamps: self.timestamps.clone(),
            sample_period: self.sample_period,
        }
    }
}

/// Per-column `(min, max)` fitted on training data.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ScalingParams {
    pub min: Vec<f64>,
    pub max: Vec<f64>,
    /// Columns whose training range is zero; they scale to 0.
    pub constant: Vec<bool>,
}

impl ScalingParams {
    pub fn dim(&self) -> usize {
        self.min.len()
    }
}

pub fn fit_minmax(train: &TimeSeriesMatrix) -> Result<ScalingParams> {
    if train.is_empty() {
        return Err(Error::Empty("training matrix"));
    }
    let v = train.values();
    let mut min = v.row(0).to_vec();
    let mut max = min.clone();
    for r in 1..v.rows() {
        for (c, &x) in v.row(r).iter().enumerate() {
            min[c] = min[c].min(x);
            max[c] = max[c].max(x);
        }
    }
    let constant = min.iter().zip(&max).map(|(a, b)| a == b).collect();
    Ok(ScalingParams { min, max, constant })
}

/// `(x - min) / (max - min)` per column with the training factors.
///
/// Values are not clipped: test data outside the training range keep their
/// excursion beyond `[0, 1]`.
pub fn apply_minmax(params: &ScalingParams, data: &TimeSeriesMatrix) -> Result<TimeSeriesMatrix> {
    check_len("scaling columns", params.dim(), data.dim())?;
    let mut out = data.values().clone();
    let cols = out.cols();
    for (i, x) in out.as_mut_slice().iter_mut().enumerate() {
        let c = i % cols;
        *x = if params.constant[c] {
            0.0
        } else {
            (*x - params.min[c]) / (params.max[c] - params.min[c])
        };
    }
    Ok(data.with_values(out))
}

/// Inverse of [`apply_minmax`] for non-constant columns; constant columns map back to their value.
pub fn invert_minmax(params: &ScalingParams, scaled: &Matrix) -> Result<Matrix> {
    check_len("scaling columns", params.dim(), scaled.cols())?;
    let mut out = scaled.clone();
    let cols = out.cols();
    for (i, x) in out.as_mut_slice().iter_mut().enumerate() {
        let c = i % cols;
        *x = if params.constant[c] {
            params.min[c]
        } else {
            *x * (params.max[c] - params.min[c]) + params.min[c]
        };
    }
    Ok(out)
}

/// Drop the named columns, keeping the order of the rest.
pub fn exclude_signals(data: &TimeSeriesMatrix, names: &[String]) -> Result<TimeSeriesMatrix> {
    for n in names {
        if !data.column_names.iter().any(|c| c == n) {
            return Err(Error::UnknownColumn(n.clone()));
        }
    }
    let keep: Vec<usize> = (0..data.dim())
        .filter(|&c| !names.contains(&data.column_names[c]))
        .collect();
    let values = data.values.select_columns(&keep)?;
    Ok(TimeSeriesMatrix {
        values,
        column_names: keep.iter().map(|&c| data.column_names[c].clone()).collect(),
        labels: data.labels.clone(),
        timestamps: data.timestamps.clone(),
        sample_period: data.sample_period,
    })
}

/// Anti-aliasing filter used by [`decimate`]: order 8 Chebyshev type I,
/// 0.05 dB ripple, cutoff `0.8 / q` of Nyquist, DC gain normalized to one.
pub fn decimation_filter(q: usize) -> Result<Sos> {
    if q < 2 {
        return Err(Error::InvalidParam(format!("decimation filter needs q >= 2, got {q}")));
    }
    Ok(cheby1_lowpass(8, 0.05, 0.8 / q as f64)?.normalize_dc())
}

/// Zero-phase low-pass each column, then keep rows `0, q, 2q, ...`.
///
/// A kept row is labeled anomalous when any row in its stride `[iq, iq + q)` is.
pub fn decimate(series: &TimeSeriesMatrix, q: usize) -> Result<TimeSeriesMatrix> {
    if q == 0 {
        return Err(Error::InvalidParam("decimation rate must be positive".into()));
    }
    if q == 1 {
        return Ok(series.clone());
    }
    let sos = decimation_filter(q)?;
    let (t, m) = (series.len(), series.dim());
    let kept: Vec<usize> = (0..t).step_by(q).collect();
    let mut out = Matrix::zeros(kept.len(), m);
    for c in 0..m {
        let filtered = sos.filtfilt(&series.values.column(c))?;
        for (r, &src) in kept.iter().enumerate() {
            out.set(r, c, filtered[src]);
        }
    }
    let labels = series.labels.as_ref().map(|l| {
        kept.iter()
            .map(|&s| u8::from(l[s..(s + q).min(t)].contains(&1)))
            .collect()
    });
    let timestamps = series
        .timestamps
        .as_ref()
        .map(|ts| kept.iter().map(|&s| ts[s].clone()).collect());
    Ok(TimeSeriesMatrix {
        values: out,
        column_names: series.column_names.clone(),
        labels,
        timestamps,
        sample_period: series.sample_period.map(|p| p * q as f64),
    })
}

/// Sliding windows `W_t = {x_{t-K+1}, ..., x_t}` over a row-major matrix.
///
/// Rows are contiguous, so a window is a contiguous time-major slice: all
/// `m` signals of the oldest instant first.
#[derive(Debug, Clone, Copy)]
pub struct WindowSeries<'a> {
    data: &'a Matrix,
    len: usize,
    step: usize,
    count: usize,
}

impl<'a> WindowSeries<'a> {
    pub fn base(&self) -> &'a Matrix {
        self.data
    }

    /// Window length `K`.
    pub fn window_len(&self) -> usize {
        self.len
    }

    pub fn step(&self) -> usize {
        self.step
    }

    /// Signals per instant `m`.
    pub fn dim(&self) -> usize {
        self.data.cols()
    }

    /// Flattened window width `m * K`.
    pub fn width(&self) -> usize {
        self.len * self.data.cols()
    }

    pub fn count(&self) -> usize {
        self.count
    }

    pub fn is_empty(&self) -> bool {
        self.count == 0
    }

    /// Row index of the last instant of window `i`.
    pub fn end_instant(&self, i: usize) -> usize {
        i * self.step + self.len - 1
    }

    /// Flattened window `i`.
    pub fn window(&self, i: usize) -> &'a [f64] {
        let start = i * self.step;
        self.data.rows_slice(start, start + self.len)
    }

    /// The final instant `x_t` of window `i`.
    pub fn last_instant(&self, i: usize) -> &'a [f64] {
        self.data.row(self.end_instant(i))
    }

    pub fn iter(&self) -> impl Iterator<Item = &'a [f64]> + '_ {
        (0..self.count).map(move |i| self.window(i))
    }
}

pub fn make_windows(data: &Matrix, len: usize, step: usize) -> Result<WindowSeries<'_>> {
    if len == 0 || step == 0 {
        return Err(Error::InvalidParam("window length and step must be positive".into()));
    }
    if data.rows() < len {
        return Err(Error::TooShort {
            required: len - 1,
            actual: data.rows(),
        });
    }
    Ok(WindowSeries {
        data,
        len,
        step,
        count: (data.rows() - len) / step + 1,
    })
}

/// Window indices for training and validation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Split {
    pub train: Vec<usize>,
    pub val: Vec<usize>,
}

/// Seeded random 4:1 partition of `0..n`; `|val| = round(n / 5)`.
/// Both index lists come back sorted.
pub fn split_train_val(n: usize, seed: u64) -> Result<Split> {
    if n < 5 {
        return Err(Error::TooShort {
            required: 4,
            actual: n,
        });
    }
    let n_val = (2 * n + 5) / 10;
    let mut idx: Vec<usize> = (0..n).collect();
    idx.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let mut val = idx[..n_val].to_vec();
    let mut train = idx[n_val..].to_vec();
    val.sort_unstable();
    train.sort_unstable();
    Ok(Split { train, val })
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::string::ToString;
    use alloc::vec;
    use proptest::prelude::*;

    fn names(n: usize) -> Vec<String> {
        (0..n).map(|i| format!("s{i}")).collect()
    }

    fn series(rows: &[Vec<f64>]) -> TimeSeriesMatrix {
        let m = Matrix::from_rows(rows).unwrap();
        let n = m.cols();
        TimeSeriesMatrix::new(m, names(n)).unwrap()
    }

    #[test]
    fn rejects_nan_and_bad_labels() {
        let m = Matrix::from_rows(&[vec![1.0, f64::NAN]]).unwrap();
        assert!(TimeSeriesMatrix::new(m, names(2)).is_err());
        let s = series(&[vec![1.0], vec![2.0]]);
        assert!(s.clone().with_labels(vec![0]).is_err());
        assert!(s.with_labels(vec![0, 2]).is_err());
    }

    #[test]
    fn fit_minmax_cases() {
        let s = series(&[vec![0.0, 3.0], vec![5.0, 3.0], vec![10.0, 3.0]]);
        let p = fit_minmax(&s).unwrap();
        assert_eq!(p.min, vec![0.0, 3.0]);
        assert_eq!(p.max, vec![10.0, 3.0]);
        assert_eq!(p.constant, vec![false, true]);
        let empty = TimeSeriesMatrix::new(Matrix::zeros(0, 2), names(2)).unwrap();
        assert!(fit_minmax(&empty).is_err());
    }

    #[test]
    fn fit_minmax_matches_loop_oracle() {
        let rows: Vec<Vec<f64>> = (0..17)
            .map(|i| vec![libm::sin(i as f64 * 1.3) * 4.0, (i as f64 - 8.0) * (i as f64 - 3.0)])
            .collect();
        let p = fit_minmax(&series(&rows)).unwrap();
        for c in 0..2 {
            let mut lo = f64::INFINITY;
            let mut hi = f64::NEG_INFINITY;
            for r in &rows {
                if r[c] < lo {
                    lo = r[c];
                }
                if r[c] > hi {
                    hi = r[c];
                }
            }
            assert_eq!(p.min[c], lo);
            assert_eq!(p.max[c], hi);
        }
    }

    #[test]
    fn apply_minmax_does_not_clip() {
        let train = series(&[vec![0.0, 3.0], vec![10.0, 3.0]]);
        let p = fit_minmax(&train).unwrap();
        let test = series(&[vec![15.0, 7.0], vec![0.0, 3.0], vec![10.0, -1.0]]);
        let s = apply_minmax(&p, &test).unwrap();
        assert_eq!(s.values().as_slice(), &[1.5, 0.0, 0.0, 0.0, 1.0, 0.0]);
        assert!(apply_minmax(&p, &series(&[vec![1.0]])).is_err());
    }

    #[test]
    fn exclude_signals_cases() {
        let s = series(&[vec![1.0, 2.0, 3.0, 4.0, 5.0]]);
        assert_eq!(exclude_signals(&s, &[]).unwrap(), s);
        let e = exclude_signals(&s, &["s1".to_string(), "s3".to_string()]).unwrap();
        assert_eq!(e.dim(), 3);
        assert_eq!(e.column_names(), &["s0", "s2", "s4"]);
        assert_eq!(e.values().as_slice(), &[1.0, 3.0, 5.0]);
        assert_eq!(
            exclude_signals(&s, &["nope".to_string()]),
            Err(Error::UnknownColumn("nope".into()))
        );
    }

    #[test]
    fn decimate_identity_and_errors() {
        let rows: Vec<Vec<f64>> = (0..40).map(|i| vec![i as f64 * 0.37]).collect();
        let s = series(&rows);
        assert_eq!(decimate(&s, 1).unwrap(), s);
        assert!(decimate(&s, 0).is_err());
        assert_eq!(decimate(&s, 3).unwrap().len(), 14);
        let short = series(&rows[..27]);
        assert!(matches!(decimate(&short, 2), Err(Error::TooShort { .. })));
    }

    #[test]
    fn decimate_labels_use_stride_or() {
        let rows: Vec<Vec<f64>> = (0..60).map(|_| vec![1.0]).collect();
        let mut labels = vec![0u8; 60];
        labels[7] = 1;
        labels[59] = 1;
        let s = series(&rows).with_labels(labels).unwrap();
        let d = decimate(&s, 5).unwrap();
        let l = d.labels().unwrap();
        assert_eq!(l.len(), 12);
        assert_eq!(l.iter().filter(|&&v| v == 1).count(), 2);
        assert_eq!((l[1], l[11]), (1, 1));
    }

    #[test]
    fn windows_cases() {
        let rows: Vec<Vec<f64>> = (0..5).map(|i| vec![i as f64, 10.0 + i as f64]).collect();
        let m = Matrix::from_rows(&rows).unwrap();
        let w = make_windows(&m, 2, 1).unwrap();
        assert_eq!(w.count(), 4);
        assert_eq!(w.window(0), &[0.0, 10.0, 1.0, 11.0]);
        assert_eq!(w.last_instant(3), &[4.0, 14.0]);
        let whole = make_windows(&m, 5, 1).unwrap();
        assert_eq!(whole.count(), 1);
        assert_eq!(whole.window(0), m.as_slice());
        assert!(make_windows(&m, 6, 1).is_err());
        assert_eq!(make_windows(&m, 2, 2).unwrap().count(), 2);
    }

    #[test]
    fn split_cases() {
        let s = split_train_val(10, 3).unwrap();
        assert_eq!((s.train.len(), s.val.len()), (8, 2));
        assert_eq!(s, split_train_val(10, 3).unwrap());
        assert!(split_train_val(4, 3).is_err());
    }

    proptest! {
        #[test]
        fn window_contents_follow_index_arithmetic(t in 1usize..40, m in 1usize..4, k in 1usize..10, step in 1usize..4) {
            prop_assume!(k <= t);
            let data: Vec<f64> = (0..t * m).map(|i| i as f64).collect();
            let mat = Matrix::from_vec(t, m, data).unwrap();
            let w = make_windows(&mat, k, step).unwrap();
            prop_assert_eq!(w.count(), (t - k) / step + 1);
            for i in 0..w.count() {
                let end = i * step + k - 1;
                prop_assert_eq!(w.end_instant(i), end);
                let win = w.window(i);
                for j in 0..k {
                    for c in 0..m {
                        prop_assert_eq!(win[j * m + c], mat.get(end + 1 - k + j, c));
                    }
                }
            }
        }

        #[test]
        fn split_is_disjoint_and_covering(n in 5usize..300, seed in any::<u64>()) {
            let s = split_train_val(n, seed).unwrap();
            let mut seen = vec![0u8; n];
            for &i in s.train.iter().chain(&s.val) {
                seen[i] += 1;
            }
            prop_assert!(seen.iter().all(|&c| c == 1));
            let expected = libm::round(n as f64 / 5.0) as usize;
            prop_assert_eq!(s.val.len(), expected);
        }

        #[test]
        fn scaling_round_trips(vals in proptest::collection::vec(-1e3f64..1e3, 6..40)) {
            let rows: Vec<Vec<f64>> = vals.chunks_exact(2).map(|c| c.to_vec()).collect();
            let s = series(&rows);
            let p = fit_minmax(&s).unwrap();
            let scaled = apply_minmax(&p, &s).unwrap();
            let back = invert_minmax(&p, scaled.values()).unwrap();
            for (a, b) in back.as_slice().iter().zip(s.values().as_slice()) {
                prop_assert!((a - b).abs() <= 1e-12 * (1.0 + b.abs()));
            }
            // Refitting on scaled training data gives (0, 1) for varying columns.
            let p2 = fit_minmax(&scaled).unwrap();
            for c in 0..2 {
                if !p.constant[c] {
                    prop_assert!(p2.min[c].abs() < 1e-12 && (p2.max[c] - 1.0).abs() < 1e-12);
                }
            }
        }

        #[test]
        fn shared_factor_property(train in proptest::collection::vec(-50.0f64..50.0, 4..20),
                                  test in proptest::collection::vec(-100.0f64..100.0, 1..20)) {
            let tr = series(&train.iter().map(|&v| vec![v]).collect::<Vec<_>>());
            let te = series(&test.iter().map(|&v| vec![v]).collect::<Vec<_>>());
            let p = fit_minmax(&tr).unwrap();
            let s = apply_minmax(&p, &te).unwrap();
            for (x, y) in test.iter().zip(s.values().as_slice()) {
                let expected = if p.constant[0] { 0.0 } else { (x - p.min[0]) / (p.max[0] - p.min[0]) };
                prop_assert_eq!(*y, expected);
            }
        }
    }
}
