//! Phase-space (Wigner) function of the kicked thermal state and its
//! negativity.
//!
//! Inverting the two-variable characteristic function in `k_x` analytically
//! leaves, for each position row, a one-dimensional transform:
//! `W(x, p) = N(x; 0, V_x) f_s(p - gamma x^2)`, where `f_s` has characteristic
//! function `exp(i s gamma k^3/3 - V_p k^2/2)`. Each row is one FFT of
//! `N(x) exp(i s gamma k^3/3 - V_p k^2/2 + i gamma x^2 k)`.

use std::f64::consts::PI;
use std::io::Write;

use num_complex::Complex64;
use rayon::prelude::*;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::charfunc::{Hypothesis, TwoModeCubicCF};
use crate::dist::GridSpec;
use crate::error::{Error, Result};
use crate::export::{comment, commented_csv, num};
use crate::params::NoiseParams;

/// Position rows used by sweeps; odd so that `x = 0` is a node.
pub const DEFAULT_ROWS: usize = 65;
/// Position half-width in standard deviations of the thermal input.
const X_SPAN_SD: f64 = 8.0;
/// Largest row spacing, relative to `sqrt(V_p/V_x)/|gamma|`, at which the
/// trapezoid over `x` still reproduces the momentum marginal to 1e-6.
const MARGINAL_DX: f64 = 0.09;
const MAX_ROWS: usize = 1 << 14;

/// Uniform axis `center + (j - (points-1)/2) step`; any size >= 2.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Axis {
    pub center: f64,
    pub half_width: f64,
    pub points: usize,
}

impl Axis {
    pub fn new(center: f64, half_width: f64, points: usize) -> Result<Axis> {
        if !(center.is_finite() && half_width.is_finite() && half_width > 0.0) || points < 2 {
            return Err(Error::InvalidArgument("axis needs a positive half width and at least two points".into()));
        }
        Ok(Axis { center, half_width, points })
    }

    pub fn step(&self) -> f64 {
        2.0 * self.half_width / (self.points - 1) as f64
    }

    pub fn node(&self, j: usize) -> f64 {
        self.center + (j as f64 - 0.5 * (self.points - 1) as f64) * self.step()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WignerGrids {
    pub x: Axis,
    /// Momentum grid; the same one the one-variable tabulation of the
    /// marginal would choose.
    pub p: GridSpec,
}

impl WignerGrids {
    /// `x` over `±8 sqrt(V_x)` with `rows` nodes, `p` from the marginal.
    pub fn auto(cf: &TwoModeCubicCF, rows: usize) -> Result<WignerGrids> {
        cf.validate()?;
        let x = Axis::new(0.0, X_SPAN_SD * cf.vx.sqrt(), rows)?;
        let p = GridSpec::auto(&cf.to_cubic(), NoiseParams::default())?;
        Ok(WignerGrids { x, p })
    }

    /// Enough rows that integrating over `x` resolves the momentum marginal.
    pub fn resolving_marginal(cf: &TwoModeCubicCF) -> Result<WignerGrids> {
        cf.validate()?;
        let half = X_SPAN_SD * cf.vx.sqrt();
        let rows = match marginal_max_dx(cf) {
            Some(dx) => ((2.0 * half / dx).ceil() as usize + 1) | 1,
            None => DEFAULT_ROWS,
        };
        if rows > MAX_ROWS {
            return Err(Error::GridTooLarge { needed: rows, cap: MAX_ROWS });
        }
        WignerGrids::auto(cf, rows.max(DEFAULT_ROWS))
    }
}

fn marginal_max_dx(cf: &TwoModeCubicCF) -> Option<f64> {
    (cf.gamma != 0.0).then(|| MARGINAL_DX * (cf.vp / cf.vx).sqrt() / cf.gamma.abs())
}

/// Row-major table `values[i * p.points + j] = W(x_i, p_j)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WignerTable {
    pub grids: WignerGrids,
    pub values: Vec<f64>,
    pub cf: TwoModeCubicCF,
    pub hypothesis: Hypothesis,
}

pub fn wigner_tabulate(cf: &TwoModeCubicCF, s: Hypothesis, grids: WignerGrids) -> Result<WignerTable> {
    cf.validate()?;
    let n = grids.p.points;
    let step = grids.p.step();
    let p0 = grids.p.node(0);
    let dk = 2.0 * PI / (n as f64 * step);
    let norm = dk / (2.0 * PI);
    let half = (n / 2) as f64;
    let fft = FftPlanner::<f64>::new().plan_fft_forward(n);

    // row-independent part of the spectrum, in log form
    let base: Vec<Complex64> = (0..n)
        .map(|m| {
            let k = (m as f64 - half) * dk;
            let phase = (s.s() * cf.gamma * k * k * k / 3.0 - k * p0).rem_euclid(2.0 * PI);
            Complex64::new(-0.5 * cf.vp * k * k, phase)
        })
        .collect();

    let rows: Vec<Vec<f64>> = (0..grids.x.points)
        .into_par_iter()
        .map(|i| -> Result<Vec<f64>> {
            let x = grids.x.node(i);
            let weight = (-x * x / (2.0 * cf.vx)).exp() / (2.0 * PI * cf.vx).sqrt();
            let shift = cf.gamma * x * x;
            let mut buf: Vec<Complex64> = base
                .iter()
                .enumerate()
                .map(|(m, l)| {
                    if l.re < -745.0 {
                        return Complex64::new(0.0, 0.0);
                    }
                    let k = (m as f64 - half) * dk;
                    let phase = (l.im + k * shift).rem_euclid(2.0 * PI);
                    Complex64::from_polar(l.re.exp(), phase)
                })
                .collect();
            fft.process(&mut buf);
            let row: Vec<f64> = buf
                .iter()
                .enumerate()
                .map(|(j, c)| {
                    let sign = if j % 2 == 0 { 1.0 } else { -1.0 };
                    sign * c.re * norm * weight
                })
                .collect();
            if row.iter().any(|v| !v.is_finite()) {
                return Err(Error::NonFinite("Wigner row"));
            }
            Ok(row)
        })
        .collect::<Result<_>>()?;
    Ok(WignerTable { grids, values: rows.concat(), cf: *cf, hypothesis: s })
}

fn trapezoid_weight(n: usize, j: usize) -> f64 {
    if j == 0 || j == n - 1 {
        0.5
    } else {
        1.0
    }
}

impl WignerTable {
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.grids.p.points + j]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        let n = self.grids.p.points;
        &self.values[i * n..(i + 1) * n]
    }

    fn integrate(&self, f: impl Fn(f64) -> f64) -> f64 {
        let (nx, np) = (self.grids.x.points, self.grids.p.points);
        let mut total = 0.0;
        for i in 0..nx {
            let row: f64 = self.row(i).iter().enumerate().map(|(j, &v)| trapezoid_weight(np, j) * f(v)).sum();
            total += trapezoid_weight(nx, i) * row;
        }
        total * self.grids.x.step() * self.grids.p.step()
    }

    /// Double-trapezoid integral of `W`.
    pub fn integral(&self) -> f64 {
        self.integrate(|v| v)
    }

    /// Negativity volume `int |W| - 1`, clipped at 0. Evaluated as
    /// `(int |W| - int W) / int W` so that quadrature error in the
    /// normalization cancels.
    pub fn negativity(&self) -> f64 {
        let abs = self.integrate(f64::abs);
        let total = self.integral();
        (abs - total).max(0.0) / total
    }

    pub fn min_value(&self) -> f64 {
        self.values.iter().cloned().fold(f64::INFINITY, f64::min)
    }

    /// `int W dx` at every momentum node.
    pub fn marginal_p(&self) -> Vec<f64> {
        let (nx, np) = (self.grids.x.points, self.grids.p.points);
        let dx = self.grids.x.step();
        let mut out = vec![0.0; np];
        for i in 0..nx {
            let w = trapezoid_weight(nx, i) * dx;
            for (o, v) in out.iter_mut().zip(self.row(i)) {
                *o += w * v;
            }
        }
        out
    }

    /// Whether the row spacing is fine enough for [`Self::marginal_p`] to
    /// be trusted (the shear `gamma x^2` moves by less than the momentum
    /// smoothing between rows).
    pub fn marginal_resolved(&self) -> bool {
        marginal_max_dx(&self.cf).is_none_or(|dx| self.grids.x.step() <= dx)
    }

    /// CSV triplets `x, p, W`: every `x` row, every `stride`-th momentum node.
    pub fn write_csv<W: Write>(&self, out: W, stride: usize) -> Result<()> {
        let stride = stride.max(1);
        let mut w = commented_csv(out, &self.comments())?;
        w.write_record(["x", "p", "W"])?;
        for i in 0..self.grids.x.points {
            for j in (0..self.grids.p.points).step_by(stride) {
                w.write_record([num(self.grids.x.node(i)), num(self.grids.p.node(j)), num(self.get(i, j))])?;
            }
        }
        w.flush()?;
        Ok(())
    }

    /// Plain-text grid: comment header, an `x` line with the first node, the
    /// step and the count, the same for `p`, then one line of values per
    /// `x` row.
    pub fn write_grid<W: Write>(&self, mut out: W, stride: usize) -> Result<()> {
        let stride = stride.max(1);
        for (k, v) in self.comments() {
            writeln!(out, "# {k} = {v}")?;
        }
        let rows: Vec<usize> = (0..self.grids.x.points).collect();
        let cols: Vec<usize> = (0..self.grids.p.points).step_by(stride).collect();
        let (x, p) = (self.grids.x, self.grids.p);
        writeln!(out, "x {} {} {}", num(x.node(0)), num(x.step()), rows.len())?;
        writeln!(out, "p {} {} {}", num(p.node(0)), num(p.step() * stride as f64), cols.len())?;
        for &i in &rows {
            let line: Vec<String> = cols.iter().map(|&j| num(self.get(i, j))).collect();
            writeln!(out, "{}", line.join(" "))?;
        }
        Ok(())
    }

    fn comments(&self) -> Vec<(String, String)> {
        vec![
            comment("cf", &self.cf),
            comment("hypothesis", &self.hypothesis),
            comment("grids", &self.grids),
        ]
    }
}
