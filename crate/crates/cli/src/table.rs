//! Result rows and their CSV form.

use std::io::{Read, Write};

use anyhow::{bail, Context, Result};

pub const HEADER: [&str; 16] = [
    "engine",
    "n_spins",
    "p",
    "gamma",
    "t_f",
    "beta",
    "eta_g2",
    "omega_c",
    "lamb_shift",
    "T0",
    "Tf",
    "dt",
    "bin_tol",
    "residual_energy",
    "fidelity",
    "status",
];

pub const STATUS_OK: &str = "ok";

/// One anneal with its full parameter tuple. Fields an engine does not use
/// are `NaN` (`None` for `lamb_shift`).
#[derive(Debug, Clone, PartialEq)]
pub struct Row {
    pub engine: String,
    pub n_spins: usize,
    pub p: u32,
    pub gamma: f64,
    pub t_f: f64,
    pub beta: f64,
    pub eta_g2: f64,
    pub omega_c: f64,
    pub lamb_shift: Option<bool>,
    pub t0: f64,
    pub tf: f64,
    pub dt: f64,
    pub bin_tol: f64,
    pub residual_energy: f64,
    pub fidelity: f64,
    pub status: String,
}

impl Row {
    pub fn is_ok(&self) -> bool {
        self.status == STATUS_OK
    }

    fn fields(&self) -> [String; 16] {
        [
            self.engine.clone(),
            self.n_spins.to_string(),
            self.p.to_string(),
            float(self.gamma),
            float(self.t_f),
            float(self.beta),
            float(self.eta_g2),
            float(self.omega_c),
            match self.lamb_shift {
                Some(true) => "on".into(),
                Some(false) => "off".into(),
                None => "NaN".into(),
            },
            float(self.t0),
            float(self.tf),
            float(self.dt),
            float(self.bin_tol),
            float(self.residual_energy),
            float(self.fidelity),
            self.status.clone(),
        ]
    }

    fn from_record(rec: &csv::StringRecord) -> Result<Self> {
        if rec.len() != HEADER.len() {
            bail!("expected {} fields, found {}", HEADER.len(), rec.len());
        }
        let f = |i: usize| -> Result<f64> {
            rec[i]
                .parse::<f64>()
                .with_context(|| format!("column {}: `{}`", HEADER[i], &rec[i]))
        };
        Ok(Row {
            engine: rec[0].to_string(),
            n_spins: rec[1].parse().context("column n_spins")?,
            p: rec[2].parse().context("column p")?,
            gamma: f(3)?,
            t_f: f(4)?,
            beta: f(5)?,
            eta_g2: f(6)?,
            omega_c: f(7)?,
            lamb_shift: match &rec[8] {
                "on" => Some(true),
                "off" => Some(false),
                "NaN" => None,
                other => bail!("column lamb_shift: `{other}`"),
            },
            t0: f(9)?,
            tf: f(10)?,
            dt: f(11)?,
            bin_tol: f(12)?,
            residual_energy: f(13)?,
            fidelity: f(14)?,
            status: rec[15].to_string(),
        })
    }
}

/// 17 significant digits, enough to round-trip any `f64`.
pub fn float(x: f64) -> String {
    format!("{x:.16e}")
}

pub struct RowWriter<W: Write> {
    inner: csv::Writer<W>,
}

impl<W: Write> RowWriter<W> {
    pub fn new(sink: W) -> Result<Self> {
        let mut inner = csv::Writer::from_writer(sink);
        inner.write_record(HEADER)?;
        inner.flush()?;
        Ok(Self { inner })
    }

    /// Appends and flushes, so an interrupted sweep leaves every finished
    /// row on disk.
    pub fn write(&mut self, row: &Row) -> Result<()> {
        self.inner.write_record(row.fields())?;
        self.inner.flush()?;
        Ok(())
    }

    pub fn into_inner(self) -> Result<W> {
        self.inner.into_inner().map_err(|e| anyhow::anyhow!("flushing csv: {}", e.error()))
    }
}

pub fn read_rows(source: impl Read) -> Result<Vec<Row>> {
    let mut reader = csv::Reader::from_reader(source);
    let header = reader.headers()?.clone();
    if header.iter().ne(HEADER.iter().copied()) {
        bail!("unexpected header: {}", header.iter().collect::<Vec<_>>().join(","));
    }
    reader
        .records()
        .enumerate()
        .map(|(i, rec)| Row::from_record(&rec?).with_context(|| format!("row {}", i + 1)))
        .collect()
}

pub fn read_rows_from(path: &std::path::Path) -> Result<Vec<Row>> {
    let file = std::fs::File::open(path).with_context(|| format!("opening {}", path.display()))?;
    read_rows(file).with_context(|| format!("in {}", path.display()))
}
