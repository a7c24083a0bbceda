//! Rate–PSNR model for scalable video streams.
//!
//! A stream's on-the-wire rate as a function of its decoded PSNR `Q` is
//!
//! ```text
//! F(Q) = θ / (255²·10^(−Q/10) + α) + β
//! ```
//!
//! where `255²·10^(−Q/10)` is the end-to-end MSE. The parameters depend on
//! content, encoder and RTP loss rate and are fitted from a handful of
//! measured R-D points.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// `255²`, the squared peak value of 8-bit luma.
pub const PEAK_SQ: f64 = 255.0 * 255.0;

/// Relative slack accepted at the lower edge of the rate band before a rate
/// is declared infeasible. Absorbs round-off from SINR→rate→PSNR chains.
const BAND_EDGE_SLACK: f64 = 1e-9;

/// Minimum number of R-D points for a three-parameter fit.
pub const MIN_FIT_POINTS: usize = 6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Complexity {
    Low,
    High,
}

impl fmt::Display for Complexity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Complexity::Low => f.write_str("Low"),
            Complexity::High => f.write_str("High"),
        }
    }
}

impl FromStr for Complexity {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "Low" | "low" => Ok(Complexity::Low),
            "High" | "high" => Ok(Complexity::High),
            other => Err(Error::config(format!("unknown complexity '{other}'"))),
        }
    }
}

/// Rate–PSNR curve parameters of one encoded stream at one RTP loss rate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RdParams {
    pub stream: String,
    pub complexity: Complexity,
    /// RTP packet loss rate the parameters were measured at.
    pub p_rtp: f64,
    pub alpha: f64,
    pub beta: f64,
    pub theta: f64,
    pub q_min_db: f64,
    pub q_max_db: f64,
    pub provenance: String,
}

/// MSE corresponding to a PSNR value.
pub fn mse_of_psnr(q_db: f64) -> f64 {
    PEAK_SQ * 10f64.powf(-q_db / 10.0)
}

/// `10·log10(255²/mse)`.
pub fn psnr_from_mse(mse: f64) -> Result<f64> {
    if !(mse > 0.0) || !mse.is_finite() {
        return Err(Error::domain(format!("MSE must be positive and finite, got {mse}")));
    }
    Ok(10.0 * (PEAK_SQ / mse).log10())
}

/// End-to-end distortion of uncorrelated encoder and transmission errors.
pub fn end_to_end_distortion(d_enc: f64, d_tran: f64) -> Result<f64> {
    if !(d_enc > 0.0) {
        return Err(Error::domain(format!("encoder distortion must be positive, got {d_enc}")));
    }
    if !(d_tran >= 0.0) {
        return Err(Error::domain(format!(
            "transmission distortion must be nonnegative, got {d_tran}"
        )));
    }
    Ok(d_enc + d_tran)
}

impl RdParams {
    /// Builds parameters whose curve passes through `(q_min, rate_min)` and
    /// `(q_max, rate_max)` for a chosen `alpha`.
    #[allow(clippy::too_many_arguments)]
    pub fn from_anchors(
        stream: impl Into<String>,
        complexity: Complexity,
        p_rtp: f64,
        alpha: f64,
        (q_min_db, rate_min): (f64, f64),
        (q_max_db, rate_max): (f64, f64),
    ) -> Result<Self> {
        let x_lo = 1.0 / (mse_of_psnr(q_min_db) + alpha);
        let x_hi = 1.0 / (mse_of_psnr(q_max_db) + alpha);
        let theta = (rate_max - rate_min) / (x_hi - x_lo);
        let beta = rate_min - theta * x_lo;
        let params = RdParams {
            stream: stream.into(),
            complexity,
            p_rtp,
            alpha,
            beta,
            theta,
            q_min_db,
            q_max_db,
            provenance: format!(
                "synthetic: anchors ({q_min_db} dB, {rate_min} bit/s) and ({q_max_db} dB, {rate_max} bit/s)"
            ),
        };
        params.validate()?;
        Ok(params)
    }

    /// Checks that `F` is finite, positive and strictly increasing on the band.
    pub fn validate(&self) -> Result<()> {
        if !(self.q_min_db < self.q_max_db) {
            return Err(Error::domain(format!(
                "{}: q_min {} must be below q_max {}",
                self.stream, self.q_min_db, self.q_max_db
            )));
        }
        if !(self.theta > 0.0) || !self.theta.is_finite() {
            return Err(Error::domain(format!("{}: theta must be positive", self.stream)));
        }
        // D + α is smallest at q_max.
        if !(mse_of_psnr(self.q_max_db) + self.alpha > 0.0) {
            return Err(Error::domain(format!(
                "{}: 255²·10^(−Q/10) + α not positive on the band",
                self.stream
            )));
        }
        let r_lo = self.rate_unchecked(self.q_min_db);
        if !(r_lo > 0.0) || !self.rate_unchecked(self.q_max_db).is_finite() {
            return Err(Error::domain(format!("{}: rate not positive on the band", self.stream)));
        }
        Ok(())
    }

    fn rate_unchecked(&self, q_db: f64) -> f64 {
        self.theta / (mse_of_psnr(q_db) + self.alpha) + self.beta
    }

    /// Rate needed to deliver `q_db`. The caller must clamp into the band.
    pub fn rate_of_psnr(&self, q_db: f64) -> Result<f64> {
        let slack = 1e-9 * (self.q_max_db - self.q_min_db);
        if q_db < self.q_min_db - slack || q_db > self.q_max_db + slack || q_db.is_nan() {
            return Err(Error::OutOfBand {
                q_db,
                q_min_db: self.q_min_db,
                q_max_db: self.q_max_db,
            });
        }
        Ok(self.rate_unchecked(q_db))
    }

    /// Base-layer rate `F(q_min)`.
    pub fn min_rate(&self) -> f64 {
        self.rate_unchecked(self.q_min_db)
    }

    /// Full-quality rate `F(q_max)`.
    pub fn max_rate(&self) -> f64 {
        self.rate_unchecked(self.q_max_db)
    }

    /// Raw algebraic inverse of `F` with no band handling. Errors only where
    /// the logarithm's argument is nonpositive.
    pub fn psnr_of_rate_unclamped(&self, rate_bps: f64) -> Result<f64> {
        let excess = rate_bps - self.beta;
        if !(excess > 0.0) {
            return Err(Error::domain(format!(
                "{}: rate {rate_bps} not above beta {}",
                self.stream, self.beta
            )));
        }
        let mse = self.theta / excess - self.alpha;
        if !(mse > 0.0) {
            return Err(Error::domain(format!(
                "{}: rate {rate_bps} maps to nonpositive distortion",
                self.stream
            )));
        }
        Ok(-10.0 * mse.log10() + 20.0 * 255f64.log10())
    }

    /// Decoded PSNR at `rate_bps`. Rates above the band saturate at `q_max`.
    pub fn psnr_of_rate(&self, rate_bps: f64) -> Result<f64> {
        let r_min = self.min_rate();
        if rate_bps.is_nan() || rate_bps < r_min * (1.0 - BAND_EDGE_SLACK) {
            return Err(Error::InfeasibleRate { rate_bps, min_rate_bps: r_min });
        }
        if rate_bps >= self.max_rate() {
            return Ok(self.q_max_db);
        }
        let q = self.psnr_of_rate_unclamped(rate_bps)?;
        Ok(q.clamp(self.q_min_db, self.q_max_db))
    }
}

/// One measured operating point of an encoded stream.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RdPoint {
    pub rate_bps: f64,
    pub mse: f64,
}

impl RdPoint {
    pub fn new(rate_bps: f64, mse: f64) -> Result<Self> {
        if !(rate_bps > 0.0) || !(mse > 0.0) {
            return Err(Error::domain(format!(
                "R-D point needs positive rate and MSE, got ({rate_bps}, {mse})"
            )));
        }
        Ok(RdPoint { rate_bps, mse })
    }

    pub fn from_psnr(rate_bps: f64, psnr_db: f64) -> Result<Self> {
        Self::new(rate_bps, mse_of_psnr(psnr_db))
    }

    pub fn psnr_db(&self) -> f64 {
        10.0 * (PEAK_SQ / self.mse).log10()
    }
}

/// Result of the inner linear least-squares solve for a fixed `alpha`.
#[derive(Debug, Clone, Copy)]
struct LinearFit {
    alpha: f64,
    theta: f64,
    beta: f64,
    ssr: f64,
}

fn fit_for_alpha(points: &[RdPoint], alpha: f64) -> Option<LinearFit> {
    let n = points.len() as f64;
    let mut sx = 0.0;
    let mut sy = 0.0;
    for p in points {
        let d = p.mse + alpha;
        if !(d > 0.0) {
            return None;
        }
        sx += 1.0 / d;
        sy += p.rate_bps;
    }
    let (mx, my) = (sx / n, sy / n);
    let mut sxx = 0.0;
    let mut sxy = 0.0;
    for p in points {
        let dx = 1.0 / (p.mse + alpha) - mx;
        sxx += dx * dx;
        sxy += dx * (p.rate_bps - my);
    }
    if !(sxx > 0.0) {
        return None;
    }
    let theta = sxy / sxx;
    let beta = my - theta * mx;
    let ssr = points
        .iter()
        .map(|p| {
            let r = theta / (p.mse + alpha) + beta - p.rate_bps;
            r * r
        })
        .sum();
    Some(LinearFit { alpha, theta, beta, ssr })
}

/// Solves a 3×3 linear system by Gaussian elimination with partial pivoting.
fn solve3(mut a: [[f64; 3]; 3], mut b: [f64; 3]) -> Option<[f64; 3]> {
    for col in 0..3 {
        let piv = (col..3).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))?;
        if a[piv][col].abs() < 1e-300 {
            return None;
        }
        a.swap(col, piv);
        b.swap(col, piv);
        for row in col + 1..3 {
            let f = a[row][col] / a[col][col];
            for k in col..3 {
                a[row][k] -= f * a[col][k];
            }
            b[row] -= f * b[col];
        }
    }
    let mut x = [0.0; 3];
    for row in (0..3).rev() {
        let mut acc = b[row];
        for k in row + 1..3 {
            acc -= a[row][k] * x[k];
        }
        x[row] = acc / a[row][row];
    }
    Some(x)
}

/// Fits `(α, β, θ)` to measured points by least squares on the rate residual.
///
/// A log-spaced grid over `α` (each candidate solved exactly for `θ, β`) is
/// followed by a golden-section refinement and a few damped Gauss–Newton
/// steps on all three parameters.
pub fn fit_rd_params(
    points: &[RdPoint],
    (q_min_db, q_max_db): (f64, f64),
    stream: &str,
    complexity: Complexity,
    p_rtp: f64,
) -> Result<RdParams> {
    if points.len() < MIN_FIT_POINTS {
        return Err(Error::InsufficientData { needed: MIN_FIT_POINTS, got: points.len() });
    }
    for p in points {
        RdPoint::new(p.rate_bps, p.mse)?;
    }
    let mut rates: Vec<f64> = points.iter().map(|p| p.rate_bps).collect();
    rates.sort_by(f64::total_cmp);
    if rates.windows(2).any(|w| w[0] == w[1]) {
        return Err(Error::FitRejected("rates must be distinct".into()));
    }
    if !(q_min_db < q_max_db) {
        return Err(Error::domain("q_min must be below q_max"));
    }

    // α must keep D + α > 0 both at the points and across the quality band.
    let d_floor = points
        .iter()
        .map(|p| p.mse)
        .chain(std::iter::once(mse_of_psnr(q_max_db)))
        .fold(f64::INFINITY, f64::min);
    let d_ceil = points.iter().map(|p| p.mse).fold(0.0, f64::max);
    // Offset w = α + d_floor, searched on a log grid.
    let w_lo = d_floor * 1e-4;
    let w_hi = 20.0 * d_ceil.max(d_floor);
    const GRID: usize = 600;
    let ratio = (w_hi / w_lo).ln();
    let w_at = |i: f64| w_lo * (ratio * i / GRID as f64).exp();

    let mut best: Option<(usize, LinearFit)> = None;
    for i in 0..=GRID {
        if let Some(fit) = fit_for_alpha(points, w_at(i as f64) - d_floor) {
            if best.is_none_or(|(_, b)| fit.ssr < b.ssr) {
                best = Some((i, fit));
            }
        }
    }
    let (i_best, mut fit) =
        best.ok_or_else(|| Error::FitRejected("no admissible alpha on the search grid".into()))?;

    // Golden-section on log w within one grid step either side.
    let ssr_at = |u: f64| {
        fit_for_alpha(points, w_lo * u.exp() - d_floor).map_or(f64::INFINITY, |f| f.ssr)
    };
    let step = ratio / GRID as f64;
    let u0 = ratio * i_best as f64 / GRID as f64;
    let (mut a, mut b) = (u0 - step, u0 + step);
    let g = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - g * (b - a);
    let mut d = a + g * (b - a);
    let (mut fc, mut fd) = (ssr_at(c), ssr_at(d));
    for _ in 0..200 {
        if (b - a).abs() < 1e-15 * (1.0 + u0.abs()) {
            break;
        }
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - g * (b - a);
            fc = ssr_at(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + g * (b - a);
            fd = ssr_at(d);
        }
    }
    if let Some(f) = fit_for_alpha(points, w_lo * (0.5 * (a + b)).exp() - d_floor) {
        if f.ssr <= fit.ssr {
            fit = f;
        }
    }

    // Gauss–Newton polish; accepted only while the residual shrinks.
    let (mut alpha, mut theta, mut beta, mut ssr) = (fit.alpha, fit.theta, fit.beta, fit.ssr);
    for _ in 0..50 {
        let mut jtj = [[0.0; 3]; 3];
        let mut jtr = [0.0; 3];
        for p in points {
            let den = p.mse + alpha;
            let r = theta / den + beta - p.rate_bps;
            let jac = [-theta / (den * den), 1.0 / den, 1.0];
            for i in 0..3 {
                jtr[i] += jac[i] * r;
                for k in 0..3 {
                    jtj[i][k] += jac[i] * jac[k];
                }
            }
        }
        let Some(delta) = solve3(jtj, jtr.map(|v| -v)) else { break };
        let (na, nt, nb) = (alpha + delta[0], theta + delta[1], beta + delta[2]);
        if points.iter().any(|p| !(p.mse + na > 0.0)) || !(mse_of_psnr(q_max_db) + na > 0.0) {
            break;
        }
        let nssr: f64 = points
            .iter()
            .map(|p| {
                let r = nt / (p.mse + na) + nb - p.rate_bps;
                r * r
            })
            .sum();
        if !(nssr < ssr) {
            break;
        }
        (alpha, theta, beta, ssr) = (na, nt, nb, nssr);
    }

    let params = RdParams {
        stream: stream.to_string(),
        complexity,
        p_rtp,
        alpha,
        beta,
        theta,
        q_min_db,
        q_max_db,
        provenance: format!("fitted from {} R-D points", points.len()),
    };
    params.validate().map_err(|e| Error::FitRejected(e.to_string()))?;
    Ok(params)
}

/// A set of R-D parameter records keyed by `(stream, p_rtp)`.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct RdLibrary {
    records: Vec<RdParams>,
}

/// The shipped fixture file.
pub const DEFAULT_FIXTURES: &str = include_str!("../data/rd_fixtures.csv");

impl RdLibrary {
    pub fn new(records: Vec<RdParams>) -> Result<Self> {
        for r in &records {
            r.validate()?;
        }
        Ok(RdLibrary { records })
    }

    /// The six-sequence fixture set bundled with the crate.
    pub fn default_fixtures() -> Self {
        Self::from_csv_str(DEFAULT_FIXTURES).expect("bundled fixture file is valid")
    }

    pub fn records(&self) -> &[RdParams] {
        &self.records
    }

    /// Looks up a stream at the loss rate closest to `p_rtp`.
    pub fn get(&self, stream: &str, p_rtp: f64) -> Result<&RdParams> {
        self.records
            .iter()
            .filter(|r| r.stream == stream)
            .min_by(|a, b| (a.p_rtp - p_rtp).abs().total_cmp(&(b.p_rtp - p_rtp).abs()))
            .ok_or_else(|| Error::config(format!("stream '{stream}' not in fixture file")))
    }

    pub fn from_csv_str(text: &str) -> Result<Self> {
        Self::from_reader(text.as_bytes())
    }

    pub fn from_reader<R: std::io::Read>(rdr: R) -> Result<Self> {
        let mut reader = csv::ReaderBuilder::new().comment(Some(b'#')).trim(csv::Trim::All).from_reader(rdr);
        let records = reader.deserialize().collect::<std::result::Result<Vec<RdParams>, _>>()?;
        Self::new(records)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_reader(std::fs::File::open(path)?)
    }

    /// Writes the records as CSV. Floats use the shortest round-tripping
    /// representation, so `from_csv_str(to_csv_string())` is bit-exact.
    pub fn to_csv_string(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        for r in &self.records {
            w.serialize(r)?;
        }
        let bytes = w.into_inner().map_err(|e| Error::Io(e.into_error()))?;
        Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
    }
}
