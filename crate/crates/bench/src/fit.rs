//! Log-log exponent fit and per-point bound audit for scaling sweeps.

use std::fmt::Write as _;
use std::io::{self, Write};

use avgcons_core::text::sig6;
use avgcons_core::{lower_bound_value, Error, Result};

/// Ordinary least squares `y = intercept + slope * x`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinearFit {
    pub slope: f64,
    pub intercept: f64,
    pub r2: f64,
}

pub fn least_squares(xs: &[f64], ys: &[f64]) -> Result<LinearFit> {
    if xs.len() != ys.len() {
        return Err(Error::Argument(format!(
            "{} abscissae but {} ordinates",
            xs.len(),
            ys.len()
        )));
    }
    let m = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / m;
    let my = ys.iter().sum::<f64>() / m;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    if xs.len() < 2 || sxx == 0.0 {
        return Err(Error::Degenerate(
            "a fit needs at least two distinct abscissae".into(),
        ));
    }
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss_res: f64 = xs
        .iter()
        .zip(ys)
        .map(|(x, y)| (y - intercept - slope * x).powi(2))
        .sum();
    let ss_tot: f64 = ys.iter().map(|y| (y - my).powi(2)).sum();
    let r2 = if ss_tot == 0.0 { 1.0 } else { 1.0 - ss_res / ss_tot };
    Ok(LinearFit { slope, intercept, r2 })
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScalingPoint {
    pub n: usize,
    /// `None` when the horizon ran out first.
    pub t: Option<u64>,
    pub lower_bound: f64,
    /// `T >= lower_bound`; always false for unreached points.
    pub audit: bool,
    /// `T / (n^2 B ln(1/eps))`.
    pub upper_ratio: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScalingFitReport {
    pub points: Vec<ScalingPoint>,
    /// `None` when fewer than two usable points remain.
    pub fit: Option<LinearFit>,
    /// Sizes left out of the fit because `T = 0`.
    pub excluded: Vec<usize>,
    /// Largest `upper_ratio` over reached points.
    pub c_hat: Option<f64>,
}

impl ScalingFitReport {
    pub fn audit_pass(&self) -> bool {
        self.points.iter().all(|p| p.audit)
    }

    pub fn all_reached(&self) -> bool {
        self.points.iter().all(|p| p.t.is_some())
    }

    pub fn write_csv<W: Write>(&self, mut out: W) -> io::Result<()> {
        writeln!(out, "n,T,lower_bound,audit,upper_ratio")?;
        for p in &self.points {
            let t = p.t.map_or("not-reached".to_string(), |t| t.to_string());
            let ratio = p.upper_ratio.map_or(String::new(), |r| r.to_string());
            let audit = if p.audit { "pass" } else { "fail" };
            writeln!(out, "{},{t},{},{audit},{ratio}", p.n, p.lower_bound)?;
        }
        Ok(())
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let ns: Vec<String> = self.points.iter().map(|p| p.n.to_string()).collect();
        let _ = writeln!(out, "points={}", ns.join(","));
        match self.fit {
            Some(f) => {
                let _ = writeln!(out, "slope={}", sig6(f.slope));
                let _ = writeln!(out, "intercept={}", sig6(f.intercept));
                let _ = writeln!(out, "r2={}", sig6(f.r2));
            }
            None => {
                let _ = writeln!(out, "slope=none");
            }
        }
        if !self.excluded.is_empty() {
            let ex: Vec<String> = self.excluded.iter().map(|n| n.to_string()).collect();
            let _ = writeln!(out, "excluded_T0={}", ex.join(","));
        }
        let _ = writeln!(out, "C_hat={}", self.c_hat.map_or("none".into(), sig6));
        let _ = writeln!(out, "audit={}", if self.audit_pass() { "pass" } else { "fail" });
        out
    }
}

/// Audits each `(n, T)` against `(n^2/30) ln(1/eps)` and fits `ln T` on
/// `ln n` over the points with `T >= 1`.
pub fn fit_scaling(points: &[(usize, Option<u64>)], epsilon: f64, window: u64) -> Result<ScalingFitReport> {
    let scale = window as f64 * (1.0 / epsilon).ln();
    let mut rows = Vec::with_capacity(points.len());
    for &(n, t) in points {
        let lower_bound = if n >= 3 { lower_bound_value(n, epsilon)? } else { 0.0 };
        rows.push(ScalingPoint {
            n,
            t,
            lower_bound,
            audit: t.is_some_and(|t| t as f64 >= lower_bound),
            upper_ratio: t.map(|t| t as f64 / ((n * n) as f64 * scale)),
        });
    }
    rows.sort_by_key(|p| p.n);
    let excluded: Vec<usize> = rows.iter().filter(|p| p.t == Some(0)).map(|p| p.n).collect();
    let usable: Vec<(f64, f64)> = rows
        .iter()
        .filter_map(|p| p.t.filter(|&t| t >= 1).map(|t| ((p.n as f64).ln(), (t as f64).ln())))
        .collect();
    let fit = if usable.len() >= 2 {
        let (xs, ys): (Vec<f64>, Vec<f64>) = usable.into_iter().unzip();
        least_squares(&xs, &ys).ok()
    } else {
        None
    };
    let c_hat = rows
        .iter()
        .filter_map(|p| p.upper_ratio)
        .fold(None, |acc: Option<f64>, r| Some(acc.map_or(r, |a| a.max(r))));
    Ok(ScalingFitReport {
        points: rows,
        fit,
        excluded,
        c_hat,
    })
}
