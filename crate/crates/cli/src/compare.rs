//! SA versus QA comparison: crossover times and asymptotic slopes.

use std::fmt;

use anyhow::{ensure, Result};
use pspin_core::observables::{fit_loglog_slope, RESIDUAL_FLOOR};

use crate::table::Row;

/// `(t_f, residual_energy)` points, ascending in `t_f`.
#[derive(Debug, Clone, PartialEq)]
pub struct Curve {
    pub label: String,
    pub engine: String,
    pub n_spins: usize,
    pub p: u32,
    /// Bath or final SA inverse temperature; `NaN` for closed runs.
    pub beta: f64,
    pub points: Vec<(f64, f64)>,
}

impl Curve {
    pub fn new(label: impl Into<String>, n_spins: usize, p: u32, mut points: Vec<(f64, f64)>) -> Self {
        points.sort_by(|a, b| a.0.total_cmp(&b.0));
        Self {
            label: label.into(),
            engine: String::new(),
            n_spins,
            p,
            beta: f64::NAN,
            points,
        }
    }

    pub fn with_engine(mut self, engine: impl Into<String>, beta: f64) -> Self {
        self.engine = engine.into();
        self.beta = beta;
        self
    }

    fn t_range(&self) -> (f64, f64) {
        (self.points[0].0, self.points[self.points.len() - 1].0)
    }

    /// `log ε` interpolated linearly in `log t`; `None` outside the range.
    pub fn log_value_at(&self, t: f64) -> Option<f64> {
        let (lo, hi) = self.t_range();
        if t < lo * (1.0 - 1e-12) || t > hi * (1.0 + 1e-12) {
            return None;
        }
        let pos = self.points.partition_point(|(x, _)| *x < t);
        let ln = |e: f64| e.max(RESIDUAL_FLOOR).ln();
        if pos < self.points.len() && (self.points[pos].0 - t).abs() <= 1e-12 * t {
            return Some(ln(self.points[pos].1));
        }
        let pos = pos.clamp(1, self.points.len() - 1);
        let (t0, e0) = self.points[pos - 1];
        let (t1, e1) = self.points[pos];
        let w = (t.ln() - t0.ln()) / (t1.ln() - t0.ln());
        Some(ln(e0) + w * (ln(e1) - ln(e0)))
    }

    /// Log-log slope over the last decade of the curve.
    pub fn tail_slope(&self) -> Option<(f64, f64)> {
        let (_, hi) = self.t_range();
        fit_loglog_slope(&self.floored(), (hi / 10.0, hi)).ok()
    }

    fn floored(&self) -> Vec<(f64, f64)> {
        self.points.iter().map(|&(t, e)| (t, e.max(RESIDUAL_FLOOR))).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Crossover {
    /// SA drops below QA at this `t_f` and stays below to the end of the
    /// common range.
    At(f64),
    /// SA is already below QA at the first common grid point.
    BeforeRange,
    NoneInRange,
}

impl fmt::Display for Crossover {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Crossover::At(t) => write!(f, "{t:.6e}"),
            Crossover::BeforeRange => f.write_str("below QA over the whole range"),
            Crossover::NoneInRange => f.write_str("none in range"),
        }
    }
}

impl Crossover {
    pub fn time(&self) -> Option<f64> {
        match self {
            Crossover::At(t) => Some(*t),
            _ => None,
        }
    }
}

/// Start of the final stretch on which SA beats QA.
///
/// Both curves are compared on the union of their grids inside the common
/// `t_f` range, with log-linear interpolation where a grid lacks a point.
/// The crossover is the last place where `QA <= SA` turns into `SA < QA`,
/// located by linear interpolation of `log(SA/QA)` in `log t`. At small
/// `t_f` SA can sit below QA merely because it starts from a thermal state
/// rather than the maximal-energy-per-spin one; that early stretch is not
/// the crossover.
pub fn crossover(qa: &Curve, sa: &Curve) -> Result<Crossover> {
    ensure!(!qa.points.is_empty() && !sa.points.is_empty(), "empty curve");
    let (qlo, qhi) = qa.t_range();
    let (slo, shi) = sa.t_range();
    let (lo, hi) = (qlo.max(slo), qhi.min(shi));
    ensure!(lo <= hi, "curves `{}` and `{}` share no t_f range", qa.label, sa.label);

    let mut grid: Vec<f64> = qa
        .points
        .iter()
        .chain(&sa.points)
        .map(|p| p.0)
        .filter(|t| *t >= lo && *t <= hi)
        .collect();
    grid.sort_by(f64::total_cmp);
    grid.dedup_by(|a, b| (*a - *b).abs() <= 1e-12 * *b);

    let diff: Vec<f64> = grid
        .iter()
        .map(|&t| sa.log_value_at(t).unwrap() - qa.log_value_at(t).unwrap())
        .collect();
    if diff.iter().all(|d| *d < 0.0) {
        return Ok(Crossover::BeforeRange);
    }
    if *diff.last().unwrap() >= 0.0 {
        return Ok(Crossover::NoneInRange);
    }
    let i = diff.iter().rposition(|d| *d >= 0.0).unwrap();
    let (t0, t1) = (grid[i].ln(), grid[i + 1].ln());
    let (d0, d1) = (diff[i], diff[i + 1]);
    let w = d0 / (d0 - d1);
    Ok(Crossover::At((t0 + w * (t1 - t0)).exp()))
}

/// Pointwise minimum of several curves over their common grid points.
pub fn lower_envelope(label: impl Into<String>, curves: &[Curve]) -> Result<Curve> {
    ensure!(!curves.is_empty(), "no curves to combine");
    let first = &curves[0];
    let mut points = Vec::new();
    for &(t, _) in &first.points {
        let values: Option<Vec<f64>> = curves.iter().map(|c| c.log_value_at(t)).collect();
        if let Some(v) = values {
            let best = v.into_iter().fold(f64::INFINITY, f64::min);
            points.push((t, best.exp()));
        }
    }
    ensure!(!points.is_empty(), "curves share no t_f values");
    Ok(Curve::new(label, first.n_spins, first.p, points).with_engine(first.engine.clone(), first.beta))
}

/// Groups successful rows into curves, one per parameter tuple.
pub fn curves_from_rows(rows: &[Row]) -> Vec<Curve> {
    let mut curves: Vec<(String, Curve)> = Vec::new();
    for r in rows.iter().filter(|r| r.is_ok()) {
        let label = curve_label(r);
        match curves.iter_mut().find(|(l, _)| *l == label) {
            Some((_, c)) => c.points.push((r.t_f, r.residual_energy)),
            None => curves.push((
                label.clone(),
                Curve::new(label, r.n_spins, r.p, vec![(r.t_f, r.residual_energy)]).with_engine(r.engine.clone(), r.beta),
            )),
        }
    }
    curves
        .into_iter()
        .map(|(_, mut c)| {
            c.points.sort_by(|a, b| a.0.total_cmp(&b.0));
            c
        })
        .collect()
}

fn same_beta(a: f64, b: f64) -> bool {
    a == b || (a - b).abs() <= 1e-9 * a.abs().max(b.abs())
}

fn curve_label(r: &Row) -> String {
    let base = format!("{} N={} p={} gamma={}", r.engine, r.n_spins, r.p, r.gamma);
    match r.engine.as_str() {
        "lindblad" => format!(
            "{base} beta={} eta_g2={} omega_c={} lamb={}",
            r.beta,
            r.eta_g2,
            r.omega_c,
            if r.lamb_shift == Some(false) { "off" } else { "on" }
        ),
        "sa" => format!("{base} T0={} Tf={}", r.t0, r.tf),
        _ => base,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Comparison {
    pub qa: String,
    pub sa: String,
    pub crossover: Crossover,
    pub qa_slope: Option<(f64, f64)>,
    pub sa_slope: Option<(f64, f64)>,
    /// Set when the two grids differ and interpolation was needed.
    pub note: Option<String>,
}

/// Every (QA curve, SA curve) pair with matching `N` and `p`, plus one
/// pair per SA curve against the lower envelope of the open-system curves
/// sharing its `β`.
pub fn compare_report(rows: &[Row]) -> Result<Vec<Comparison>> {
    let curves = curves_from_rows(rows);
    let (sa, qa): (Vec<&Curve>, Vec<&Curve>) = curves.iter().partition(|c| c.engine == "sa");
    let mut out = Vec::new();
    for s in &sa {
        let sa_beta = s.beta;
        let matching: Vec<&Curve> = qa.iter().copied().filter(|q| q.n_spins == s.n_spins && q.p == s.p).collect();
        let mut targets: Vec<Curve> = matching.iter().map(|c| (*c).clone()).collect();
        let open: Vec<Curve> = matching
            .iter()
            .filter(|q| q.engine == "lindblad" && same_beta(q.beta, sa_beta))
            .map(|c| (*c).clone())
            .collect();
        if open.len() > 1 {
            targets.push(lower_envelope(
                format!("best lindblad N={} p={} beta={sa_beta}", s.n_spins, s.p),
                &open,
            )?);
        }
        for q in &targets {
            let same_grid = q.points.len() == s.points.len()
                && q.points.iter().zip(&s.points).all(|(a, b)| (a.0 - b.0).abs() <= 1e-12 * b.0);
            out.push(Comparison {
                qa: q.label.clone(),
                sa: s.label.clone(),
                crossover: crossover(q, s)?,
                qa_slope: q.tail_slope(),
                sa_slope: s.tail_slope(),
                note: (!same_grid).then(|| "grids differ; QA and SA interpolated log-linearly".to_string()),
            });
        }
    }
    Ok(out)
}

pub fn format_report(report: &[Comparison]) -> String {
    let slope = |s: Option<(f64, f64)>| match s {
        Some((m, e)) => format!("{m:.3} +/- {e:.3}"),
        None => "n/a".to_string(),
    };
    let mut out = String::new();
    for c in report {
        out += &format!(
            "QA [{}] vs SA [{}]: t_f* = {}; tail slopes QA {}, SA {}",
            c.qa,
            c.sa,
            c.crossover,
            slope(c.qa_slope),
            slope(c.sa_slope)
        );
        if let Some(note) = &c.note {
            out += &format!(" ({note})");
        }
        out.push('\n');
    }
    if report.is_empty() {
        out += "no QA/SA pairs with matching N and p\n";
    }
    out
}
