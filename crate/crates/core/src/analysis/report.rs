//! Per-setup coherence summary: readout parameters, T₂ₑ/2T₁ and the
//! photon-number and effective-temperature upper bounds.

use serde::{Deserialize, Serialize};

use crate::dephasing::{photon_bound_from_coherence, CoherenceSet, Interval};
use crate::experiment::DeviceConfig;
use crate::units::{GHZ, MHZ, MK};
use crate::Result;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub label: String,
    /// Hz.
    pub f_ro: f64,
    /// Hz; `None` when the readout mode has no internal loss.
    pub kappa_i: Option<f64>,
    /// Total external coupling, Hz.
    pub kappa_c: f64,
    /// Hz.
    pub chi: f64,
    pub ratio: Interval,
    pub n_th_bound: f64,
    /// Kelvin.
    pub t_eff_bound: f64,
    pub below_sensitivity: bool,
}

/// Builds one row per `(label, device, coherence)`. The photon bound uses
/// the total readout linewidth of the device.
pub fn coherence_report(rows: &[(String, DeviceConfig, CoherenceSet)]) -> Result<Vec<ReportRow>> {
    rows.iter()
        .map(|(label, cfg, coh)| {
            let ro = &cfg.readout;
            let bound = photon_bound_from_coherence(coh.t1.value, coh.t2e.value, ro.f, cfg.kappa(), cfg.transmon.chi)?;
            Ok(ReportRow {
                label: label.clone(),
                f_ro: ro.f,
                kappa_i: (ro.kappa_i > 0.0).then_some(ro.kappa_i),
                kappa_c: ro.coupling_rate(),
                chi: cfg.transmon.chi,
                ratio: coh.ratio,
                n_th_bound: bound.n_bar,
                t_eff_bound: bound.t_eff,
                below_sensitivity: bound.below_sensitivity,
            })
        })
        .collect()
}

/// `x` rounded to `digits` significant digits.
pub fn round_sig(x: f64, digits: usize) -> f64 {
    if !x.is_finite() || x == 0.0 {
        return x;
    }
    format!("{:.*e}", digits.saturating_sub(1), x).parse().unwrap_or(x)
}

const DIGITS: usize = 6;

fn num(x: f64) -> String {
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    round_sig(x, DIGITS).to_string()
}

fn cells(r: &ReportRow) -> [String; 10] {
    [
        r.label.clone(),
        num(r.f_ro / GHZ),
        r.kappa_i.map(|k| num(k / MHZ)).unwrap_or_default(),
        num(r.kappa_c / MHZ),
        num(r.chi / MHZ),
        num(r.ratio.value),
        num(r.ratio.minus()),
        num(r.ratio.plus()),
        num(r.n_th_bound),
        num(r.t_eff_bound / MK),
    ]
}

pub const CSV_HEADER: [&str; 10] = [
    "label",
    "f_ro_ghz",
    "kappa_i_mhz",
    "kappa_c_mhz",
    "chi_mhz",
    "ratio",
    "ratio_minus",
    "ratio_plus",
    "n_th_bound",
    "t_eff_mk",
];

pub fn render_csv(rows: &[ReportRow]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(CSV_HEADER)?;
    for r in rows {
        w.write_record(cells(r))?;
    }
    let bytes = w.into_inner().map_err(|e| crate::Error::Io(e.into_error()))?;
    String::from_utf8(bytes).map_err(|e| crate::Error::invalid(e.to_string()))
}

/// The CSV columns as JSON objects, with the same rounding as the text
/// and CSV renderings. Missing and infinite values become `null`.
pub fn render_json(rows: &[ReportRow]) -> serde_json::Value {
    let objs = rows
        .iter()
        .map(|r| {
            let c = cells(r);
            let mut m = serde_json::Map::new();
            m.insert(CSV_HEADER[0].into(), c[0].clone().into());
            for (k, v) in CSV_HEADER.iter().zip(&c).skip(1) {
                let x = v.parse::<f64>().ok().filter(|x| x.is_finite());
                m.insert((*k).into(), x.map_or(serde_json::Value::Null, Into::into));
            }
            m.insert("below_sensitivity".into(), r.below_sensitivity.into());
            serde_json::Value::Object(m)
        })
        .collect();
    serde_json::Value::Array(objs)
}

/// Aligned plain-text table; bounds print as `<= x`, or `below sensitivity`.
pub fn render_text(rows: &[ReportRow]) -> String {
    let head = [
        "setup", "f_ro/GHz", "ki/MHz", "kc/MHz", "chi/MHz", "T2e/2T1", "n_th", "T_eff/mK",
    ];
    let body: Vec<[String; 8]> = rows
        .iter()
        .map(|r| {
            let c = cells(r);
            let ki = if c[2].is_empty() { "-".to_string() } else { c[2].clone() };
            let ratio = format!("{} (+{}/-{})", c[5], c[7], c[6]);
            let (n, t) = if r.below_sensitivity {
                ("below sensitivity".to_string(), "-".to_string())
            } else {
                (format!("<= {}", c[8]), format!("<= {}", c[9]))
            };
            [c[0].clone(), c[1].clone(), ki, c[3].clone(), c[4].clone(), ratio, n, t]
        })
        .collect();
    let mut widths: Vec<usize> = head.iter().map(|h| h.chars().count()).collect();
    for row in &body {
        for (w, cell) in widths.iter_mut().zip(row) {
            *w = (*w).max(cell.chars().count());
        }
    }
    let line = |cols: Vec<&str>| {
        cols.iter()
            .zip(&widths)
            .map(|(c, w)| format!("{c:<w$}"))
            .collect::<Vec<_>>()
            .join("  ")
            .trim_end()
            .to_string()
    };
    let mut out = line(head.to_vec());
    out.push('\n');
    for row in &body {
        out.push_str(&line(row.iter().map(String::as_str).collect()));
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::reproduce::reference;

    #[test]
    fn empty_report() {
        assert!(coherence_report(&[]).unwrap().is_empty());
        assert_eq!(render_csv(&[]).unwrap().trim(), CSV_HEADER.join(","));
        assert_eq!(render_text(&[]).lines().count(), 1);
    }

    #[test]
    fn reference_rows_reproduce_bounds() {
        let rows = coherence_report(&reference::table_rows().unwrap()).unwrap();
        assert_eq!(rows.len(), 4);
        for (row, want) in rows.iter().zip(reference::READOUT_ROWS) {
            assert!(
                (row.t_eff_bound / MK - want.t_eff_mk).abs() <= 2.0,
                "{}: {} mK",
                row.label,
                row.t_eff_bound / MK
            );
        }
        assert_eq!(rows[0].kappa_i, None);
        let csv = render_csv(&rows).unwrap();
        assert_eq!(csv.lines().count(), 5);
        assert!(csv.lines().nth(1).unwrap().starts_with("None,7.573,,16.5,1.5,"));
        let text = render_text(&rows);
        assert!(text.contains("<= "));
        let json = render_json(&rows);
        assert_eq!(json[3]["chi_mhz"], 1.1);
        assert!(json[0]["kappa_i_mhz"].is_null());
    }

    #[test]
    fn rounding() {
        assert_eq!(round_sig(0.000123456789, 3), 0.000123);
        assert_eq!(round_sig(-98765.0, 2), -99000.0);
        assert_eq!(round_sig(0.0, 3), 0.0);
        assert!(round_sig(f64::INFINITY, 3).is_infinite());
    }
}
