//! Chebyshev type I low-pass design and zero-phase second-order-section filtering.
//!
//! The design follows the usual analog prototype → frequency scaling →
//! bilinear transform path, and sections are ordered so the poles closest to
//! the unit circle come last. Zero-phase filtering pads both ends with an odd
//! extension, starts each pass from the steady-state of a step, and runs the
//! cascade forward then backward.

use alloc::format;
use alloc::vec::Vec;
use core::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Cascade of biquads `[b0, b1, b2, a0, a1, a2]` with `a0 == 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct Sos {
    pub sections: Vec<[f64; 6]>,
}

/// Analog Chebyshev type I prototype poles and gain (no zeros).
fn cheb1_prototype(order: usize, ripple_db: f64) -> (Vec<Complex64>, f64) {
    let eps = libm::sqrt(libm::pow(10.0, 0.1 * ripple_db) - 1.0);
    let n = order as f64;
    let mu = libm::asinh(1.0 / eps) / n;
    let poles: Vec<Complex64> = (0..order)
        .map(|i| {
            let m = -(n - 1.0) + 2.0 * i as f64;
            let theta = PI * m / (2.0 * n);
            -Complex64::new(mu, theta).sinh()
        })
        .collect();
    let mut gain = poles.iter().fold(Complex64::new(1.0, 0.0), |acc, p| acc * -p).re;
    if order % 2 == 0 {
        gain /= libm::sqrt(1.0 + eps * eps);
    }
    (poles, gain)
}

/// Digital Chebyshev type I low-pass of even `order`.
///
/// `cutoff` is normalized to the Nyquist frequency, `0 < cutoff < 1`.
pub fn cheby1_lowpass(order: usize, ripple_db: f64, cutoff: f64) -> Result<Sos> {
    if order == 0 || order % 2 != 0 {
        return Err(Error::InvalidParam(format!("filter order must be even and positive, got {order}")));
    }
    if !(cutoff > 0.0 && cutoff < 1.0) {
        return Err(Error::InvalidParam(format!("cutoff must lie in (0, 1), got {cutoff}")));
    }
    if !(ripple_db > 0.0) {
        return Err(Error::InvalidParam(format!("ripple must be positive, got {ripple_db}")));
    }
    let (proto, k_proto) = cheb1_prototype(order, ripple_db);

    // Pre-warp with fs = 2, then scale the prototype to the warped cutoff.
    let fs2 = 4.0;
    let warped = fs2 * libm::tan(PI * cutoff / 2.0);
    let analog: Vec<Complex64> = proto.iter().map(|p| p * warped).collect();
    let k_analog = k_proto * libm::pow(warped, order as f64);

    // Bilinear transform; every zero maps to z = -1.
    let mut poles: Vec<Complex64> = analog.iter().map(|p| (fs2 + p) / (fs2 - p)).collect();
    let denom = analog
        .iter()
        .fold(Complex64::new(1.0, 0.0), |acc, p| acc * (fs2 - p));
    let k_digital = k_analog * (Complex64::new(1.0, 0.0) / denom).re;

    // Keep one pole of each conjugate pair (the one with positive imaginary part).
    poles.retain(|p| p.im > 0.0);
    if poles.len() != order / 2 {
        return Err(Error::InvalidParam("unpaired filter poles".into()));
    }
    // Sort so poles nearest the unit circle end up in the last section.
    poles.sort_by(|a, b| {
        let da = (1.0 - a.norm()).abs();
        let db = (1.0 - b.norm()).abs();
        db.partial_cmp(&da).unwrap_or(core::cmp::Ordering::Equal)
    });
    let mut sections: Vec<[f64; 6]> = poles
        .iter()
        .map(|p| [1.0, 2.0, 1.0, 1.0, -2.0 * p.re, p.norm_sqr()])
        .collect();
    for c in &mut sections[0][..3] {
        *c *= k_digital;
    }
    Ok(Sos { sections })
}

impl Sos {
    /// Taps of the equivalent direct-form filter, used for the pad length.
    fn ntaps(&self) -> usize {
        let n = self.sections.len();
        let b2_zero = self.sections.iter().filter(|s| s[2] == 0.0).count();
        let a2_zero = self.sections.iter().filter(|s| s[5] == 0.0).count();
        2 * n + 1 - b2_zero.min(a2_zero)
    }

    /// Odd-extension pad length on each side for [`Sos::filtfilt`].
    pub fn pad_len(&self) -> usize {
        3 * self.ntaps()
    }

    /// Steady-state section states for a unit step input.
    fn step_states(&self) -> Vec<[f64; 2]> {
        let mut scale = 1.0;
        self.sections
            .iter()
            .map(|s| {
                let (b, a) = (&s[..3], &s[3..]);
                let gain = (b[0] + b[1] + b[2]) / (a[0] + a[1] + a[2]);
                let z1 = b[2] - a[2] * gain;
                let z0 = b[1] - a[1] * gain + z1;
                let zi = [scale * z0, scale * z1];
                scale *= gain;
                zi
            })
            .collect()
    }

    /// Run the cascade in place, transposed direct form II, from states `zi`.
    fn run(&self, x: &mut [f64], mut zi: Vec<[f64; 2]>) {
        for v in x.iter_mut() {
            let mut s = *v;
            for (sec, z) in self.sections.iter().zip(zi.iter_mut()) {
                let y = sec[0] * s + z[0];
                z[0] = sec[1] * s - sec[4] * y + z[1];
                z[1] = sec[2] * s - sec[5] * y;
                s = y;
            }
            *v = s;
        }
    }

    /// Causal filtering from rest.
    pub fn filter(&self, x: &[f64]) -> Vec<f64> {
        let mut y = x.to_vec();
        self.run(&mut y, alloc::vec![[0.0, 0.0]; self.sections.len()]);
        y
    }

    /// Zero-phase forward-backward filtering with odd-extension padding.
    pub fn filtfilt(&self, x: &[f64]) -> Result<Vec<f64>> {
        let pad = self.pad_len();
        if x.len() <= pad {
            return Err(Error::TooShort {
                required: pad,
                actual: x.len(),
            });
        }
        let n = x.len();
        let mut ext = Vec::with_capacity(n + 2 * pad);
        ext.extend((1..=pad).rev().map(|i| 2.0 * x[0] - x[i]));
        ext.extend_from_slice(x);
        ext.extend((1..=pad).map(|i| 2.0 * x[n - 1] - x[n - 1 - i]));

        let zi = self.step_states();
        let scaled = |v: f64| zi.iter().map(|z| [z[0] * v, z[1] * v]).collect::<Vec<_>>();

        let x0 = ext[0];
        self.run(&mut ext, scaled(x0));
        ext.reverse();
        let y0 = ext[0];
        self.run(&mut ext, scaled(y0));
        ext.reverse();
        Ok(ext[pad..pad + n].to_vec())
    }

    /// Rescale the first section so the DC gain is exactly one.
    pub fn normalize_dc(mut self) -> Self {
        let dc = self.gain_at(0.0);
        for c in &mut self.sections[0][..3] {
            *c /= dc;
        }
        self
    }

    /// Magnitude response at normalized frequency `w` (fraction of Nyquist).
    pub fn gain_at(&self, w: f64) -> f64 {
        let z = Complex64::from_polar(1.0, PI * w);
        let zinv = Complex64::new(1.0, 0.0) / z;
        self.sections
            .iter()
            .map(|s| {
                let num = s[0] + s[1] * zinv + s[2] * zinv * zinv;
                let den = s[3] + s[4] * zinv + s[5] * zinv * zinv;
                (num / den).norm()
            })
            .product()
    }
}
