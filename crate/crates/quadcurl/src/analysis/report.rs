use super::Errors;
use crate::{Error, Result};
use serde::{Deserialize, Serialize};
use std::fmt::Write as _;
use std::io::{Read, Write};

/// One row of a convergence study.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorRecord {
    pub level: u32,
    pub h: f64,
    pub dofs: usize,
    pub l2_u: f64,
    pub energy: f64,
    pub l2_p: f64,
    pub energy_p: f64,
    pub disc_2h: f64,
    pub disc_1h: f64,
    /// Wall time of the level in seconds. Kept out of serialized output so
    /// that repeated runs produce identical files.
    #[serde(skip)]
    pub runtime: f64,
}

impl ErrorRecord {
    pub fn new(level: u32, h: f64, dofs: usize, e: Errors) -> Self {
        ErrorRecord {
            level,
            h,
            dofs,
            l2_u: e.l2_u,
            energy: e.energy,
            l2_p: e.l2_p,
            energy_p: e.energy_p,
            disc_2h: e.disc_2h,
            disc_1h: e.disc_1h,
            runtime: 0.0,
        }
    }

    pub fn get(&self, col: Column) -> f64 {
        match col {
            Column::L2U => self.l2_u,
            Column::Energy => self.energy,
            Column::L2P => self.l2_p,
            Column::EnergyP => self.energy_p,
            Column::Disc2h => self.disc_2h,
            Column::Disc1h => self.disc_1h,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Column {
    L2U,
    Energy,
    L2P,
    EnergyP,
    Disc2h,
    Disc1h,
}

/// `log2(prev / next)`, or `None` when either error is not positive.
pub fn observed_order(prev: f64, next: f64) -> Option<f64> {
    (prev > 0.0 && next > 0.0 && prev.is_finite() && next.is_finite()).then(|| (prev / next).log2())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceReport {
    pub family: String,
    pub k: usize,
    pub solution: String,
    pub records: Vec<ErrorRecord>,
}

pub fn convergence_rates(family: &str, k: usize, solution: &str, records: Vec<ErrorRecord>) -> ConvergenceReport {
    ConvergenceReport { family: family.into(), k, solution: solution.into(), records }
}

impl ConvergenceReport {
    /// Orders between consecutive records; the first entry is always `None`.
    pub fn orders(&self, col: Column) -> Vec<Option<f64>> {
        let mut out = vec![None];
        for w in self.records.windows(2) {
            out.push(observed_order(w[0].get(col), w[1].get(col)));
        }
        out.truncate(self.records.len());
        out
    }

    /// Order between the last two records.
    pub fn final_order(&self, col: Column) -> Option<f64> {
        self.orders(col).last().copied().flatten()
    }

    /// Fixed-width table in the usual `0.dddE±xx` layout.
    pub fn table(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "# {} k={} solution={}", self.family, self.k, self.solution);
        let _ = writeln!(
            s,
            "{:>4} | {:>10} {:>6} | {:>10} {:>6} | {:>10} {:>6}",
            "Grid", "|u-u0|", "O(h^r)", "|||u-uh|||", "O(h^r)", "|p-p0|", "O(h^r)"
        );
        let cols = [Column::L2U, Column::Energy, Column::L2P];
        let orders: Vec<Vec<Option<f64>>> = cols.iter().map(|c| self.orders(*c)).collect();
        for (i, r) in self.records.iter().enumerate() {
            let _ = write!(s, "{:>4}", r.level);
            for (c, col) in cols.iter().enumerate() {
                let order = match (i, orders[c][i]) {
                    (0, _) => "0.0".to_string(),
                    (_, Some(o)) => format!("{o:.1}"),
                    (_, None) => "n/a".to_string(),
                };
                let _ = write!(s, " | {:>10} {:>6}", fortran_sci(r.get(*col)), order);
            }
            s.push('\n');
        }
        s
    }

    /// CSV with a leading `# family,k,solution` comment line.
    pub fn write_csv(&self, out: impl Write) -> Result<()> {
        let mut out = out;
        writeln!(out, "# family={},k={},solution={}", self.family, self.k, self.solution)?;
        let mut w = csv::Writer::from_writer(out);
        for r in &self.records {
            w.serialize(r)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn to_csv(&self) -> Result<String> {
        let mut buf = Vec::new();
        self.write_csv(&mut buf)?;
        String::from_utf8(buf).map_err(|e| Error::Parse { what: "csv".into(), detail: e.to_string() })
    }

    pub fn read_csv(mut input: impl Read) -> Result<Self> {
        let mut text = String::new();
        input.read_to_string(&mut text)?;
        let bad = |detail: &str| Error::Parse { what: "report csv".into(), detail: detail.into() };
        let (head, body) = text.split_once('\n').ok_or_else(|| bad("empty input"))?;
        let meta = head.strip_prefix("# ").ok_or_else(|| bad("missing `# family=...` line"))?;
        let mut family = None;
        let mut k = None;
        let mut solution = None;
        for kv in meta.split(',') {
            match kv.split_once('=') {
                Some(("family", v)) => family = Some(v.to_string()),
                Some(("k", v)) => k = Some(v.parse::<usize>().map_err(|e| bad(&e.to_string()))?),
                Some(("solution", v)) => solution = Some(v.to_string()),
                _ => return Err(bad(&format!("unexpected metadata `{kv}`"))),
            }
        }
        let mut rdr = csv::Reader::from_reader(body.as_bytes());
        let records = rdr.deserialize().collect::<std::result::Result<Vec<ErrorRecord>, _>>()?;
        Ok(ConvergenceReport {
            family: family.ok_or_else(|| bad("missing family"))?,
            k: k.ok_or_else(|| bad("missing k"))?,
            solution: solution.ok_or_else(|| bad("missing solution"))?,
            records,
        })
    }
}

/// `0.dddE±xx` with a mantissa in `[0.1, 1)`.
pub fn fortran_sci(v: f64) -> String {
    if !v.is_finite() {
        return "n/a".into();
    }
    if v == 0.0 {
        return "0.000E+00".into();
    }
    let sign = if v < 0.0 { "-" } else { "" };
    let a = v.abs();
    let mut e = a.log10().floor() as i32 + 1;
    let mut digits = (a / 10f64.powi(e) * 1000.0).round() as u32;
    if digits >= 1000 {
        digits /= 10;
        e += 1;
    }
    if digits < 100 {
        // log10 rounding put us one decade too high
        digits = (a / 10f64.powi(e - 1) * 1000.0).round() as u32;
        e -= 1;
    }
    format!("{sign}0.{digits:03}E{e:+03}")
}
