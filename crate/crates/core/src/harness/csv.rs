use std::fs;
use std::io::Write;
use std::path::Path;

use super::adiabatic::AdiabaticResult;
use super::verify::SweepResult;
use crate::error::{Error, Result};
use crate::normalform::NormalFormResult;

pub const VERIFY_HEADER: &str = "epsilon,sup_error,c_eps_bound,term1,term2,kappa0,kappa1,kappa2,c,wall_ms";
pub const ADIABATIC_HEADER: &str = "epsilon,drift,bound,lambda_j,c,wall_ms";
pub const NORMAL_FORM_HEADER: &str = "epsilon,defect,remainder_norm";

/// 17 significant digits, enough to recover the exact double.
pub fn format_float(x: f64) -> String {
    format!("{x:.16e}")
}

/// Writes a header, one line per row and an optional `# slope=` line.
pub fn write_table(out: &mut impl Write, header: &str, rows: &[Vec<f64>], slope: Option<f64>) -> Result<()> {
    writeln!(out, "{header}")?;
    for r in rows {
        let line: Vec<String> = r.iter().map(|&x| format_float(x)).collect();
        writeln!(out, "{}", line.join(","))?;
    }
    if let Some(s) = slope {
        writeln!(out, "# slope={}", format_float(s))?;
    }
    Ok(())
}

fn table_string(header: &str, rows: &[Vec<f64>], slope: Option<f64>) -> String {
    let mut buf = Vec::new();
    write_table(&mut buf, header, rows, slope).expect("writing to memory");
    String::from_utf8(buf).expect("ascii output")
}

pub fn sweep_csv(result: &SweepResult) -> String {
    let k = &result.constants;
    let rows: Vec<Vec<f64>> = result
        .rows
        .iter()
        .map(|r| {
            vec![
                r.epsilon,
                r.sup_error,
                r.c_eps_bound,
                r.term1,
                r.term2,
                k.kappa0,
                k.kappa1,
                k.kappa2,
                k.c,
                r.wall_ms,
            ]
        })
        .collect();
    let slope = (!result.rows.is_empty()).then_some(result.slope);
    table_string(VERIFY_HEADER, &rows, slope)
}

pub fn adiabatic_csv(result: &AdiabaticResult) -> String {
    let rows: Vec<Vec<f64>> = result
        .rows
        .iter()
        .map(|r| vec![r.epsilon, r.drift, r.bound, result.lambda_j, result.constants.c, r.wall_ms])
        .collect();
    let slope = (!result.rows.is_empty()).then_some(result.slope);
    table_string(ADIABATIC_HEADER, &rows, slope)
}

pub fn normal_form_csv(result: &NormalFormResult) -> String {
    let rows: Vec<Vec<f64>> = result
        .defects
        .iter()
        .zip(&result.remainder_norms)
        .map(|(d, r)| vec![d.0, d.1, r.1])
        .collect();
    let slope = (!rows.is_empty()).then_some(result.order2_slope);
    table_string(NORMAL_FORM_HEADER, &rows, slope)
}

/// Writes the verify schema to `path`.
pub fn emit_csv(result: &SweepResult, path: impl AsRef<Path>) -> Result<()> {
    fs::write(path, sweep_csv(result))?;
    Ok(())
}

/// A parsed CSV table.
#[derive(Clone, Debug, PartialEq)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<f64>>,
    pub slope: Option<f64>,
}

pub fn parse_table(text: &str) -> Result<Table> {
    let mut lines = text.lines();
    let header: Vec<String> = lines
        .next()
        .ok_or_else(|| Error::config("<csv>", "missing header"))?
        .split(',')
        .map(str::to_string)
        .collect();
    let mut rows = Vec::new();
    let mut slope = None;
    for (i, line) in lines.enumerate() {
        if let Some(v) = line.strip_prefix("# slope=") {
            slope = Some(v.trim().parse().map_err(|_| Error::config("<csv>", format!("bad slope `{v}`")))?);
            continue;
        }
        let row = line
            .split(',')
            .map(|c| c.trim().parse::<f64>())
            .collect::<std::result::Result<Vec<_>, _>>()
            .map_err(|e| Error::config("<csv>", format!("line {}: {e}", i + 2)))?;
        if row.len() != header.len() {
            return Err(Error::config(
                "<csv>",
                format!("line {}: {} fields, header has {}", i + 2, row.len(), header.len()),
            ));
        }
        rows.push(row);
    }
    Ok(Table { header, rows, slope })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn floats_round_trip() {
        for x in [0.1, 1.0 / 3.0, 6.02214076e23, -2.5e-310, f64::MAX] {
            assert_eq!(format_float(x).parse::<f64>().unwrap(), x);
        }
    }

    #[test]
    fn table_round_trip() {
        let rows = vec![vec![0.1, 2.0 / 3.0], vec![1e-3, 7.0]];
        let text = table_string("a,b", &rows, Some(1.01));
        let t = parse_table(&text).unwrap();
        assert_eq!(t.rows, rows);
        assert_eq!(t.slope, Some(1.01));
        assert_eq!(table_string("a,b", &[], None), "a,b\n");
    }
}
