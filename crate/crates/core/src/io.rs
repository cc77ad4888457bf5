//! CSV and JSON persistence.
//!
//! Every CSV file starts with a `# schema_version: N` comment line followed
//! by a header row; JSON documents carry a top-level `schema_version` key.
//! Floats are written in shortest round-trip form, with an exponent when
//! very small or large.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;
use std::sync::Arc;

use serde::Serialize;

use crate::convex::SampleTable;
use crate::error::{Error, Result};
use crate::radial::{RadialDensity, RadialGrid};

pub const SCHEMA_VERSION: u32 = 1;

/// A header row and numeric rows.
#[derive(Clone, Debug, PartialEq)]
pub struct Table {
    pub headers: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl Table {
    pub fn new(headers: &[&str]) -> Self {
        Self {
            headers: headers.iter().map(|s| s.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn column(&self, name: &str) -> Result<Vec<f64>> {
        let j = self
            .headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::Format(format!("missing column `{name}`")))?;
        Ok(self.rows.iter().map(|row| row[j]).collect())
    }
}

pub fn write_table(path: &Path, table: &Table) -> Result<()> {
    let mut out = BufWriter::new(File::create(path)?);
    writeln!(out, "# schema_version: {SCHEMA_VERSION}")?;
    {
        let mut w = csv::Writer::from_writer(&mut out);
        w.write_record(&table.headers)?;
        for row in &table.rows {
            if row.len() != table.headers.len() {
                return Err(Error::Format(format!(
                    "row has {} fields, header has {}",
                    row.len(),
                    table.headers.len()
                )));
            }
            w.write_record(row.iter().map(|x| format!("{x:?}")))?;
        }
        w.flush()?;
    }
    out.flush()?;
    Ok(())
}

pub fn read_table(path: &Path) -> Result<Table> {
    let text = std::fs::read_to_string(path)?;
    if let Some(first) = text.lines().next() {
        if let Some(rest) = first.strip_prefix("# schema_version:") {
            let v: u32 = rest
                .trim()
                .parse()
                .map_err(|_| Error::Format(format!("bad schema line `{first}`")))?;
            if v > SCHEMA_VERSION {
                return Err(Error::Format(format!("unsupported schema version {v}")));
            }
        }
    }
    let mut r = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let headers = r.headers()?.iter().map(str::to_string).collect::<Vec<_>>();
    let mut rows = Vec::new();
    for (i, rec) in r.records().enumerate() {
        let rec = rec?;
        let row = rec
            .iter()
            .map(|s| {
                s.parse::<f64>()
                    .map_err(|_| Error::Format(format!("data row {}: `{s}` is not a number", i + 1)))
            })
            .collect::<Result<Vec<_>>>()?;
        rows.push(row);
    }
    Ok(Table { headers, rows })
}

/// `abscissa,value,derivative`.
pub fn write_function_table(path: &Path, t: &SampleTable) -> Result<()> {
    let mut table = Table::new(&["abscissa", "value", "derivative"]);
    for i in 0..t.abscissae.len() {
        table.rows.push(vec![t.abscissae[i], t.values[i], t.derivatives[i]]);
    }
    write_table(path, &table)
}

pub fn read_function_table(path: &Path) -> Result<SampleTable> {
    let t = read_table(path)?;
    Ok(SampleTable {
        abscissae: t.column("abscissa")?,
        values: t.column("value")?,
        derivatives: t.column("derivative")?,
    })
}

/// `r,<name>`.
pub fn write_density(path: &Path, rho: &RadialDensity, name: &str) -> Result<()> {
    let mut table = Table::new(&["r", name]);
    for (&r, &v) in rho.grid().nodes().iter().zip(rho.values()) {
        table.rows.push(vec![r, v]);
    }
    write_table(path, &table)
}

/// First column is `r`, the density is taken from the second column.
pub fn read_density(path: &Path) -> Result<RadialDensity> {
    let t = read_table(path)?;
    if t.headers.len() < 2 || t.headers[0] != "r" {
        return Err(Error::Format("density table needs columns r,<value>".into()));
    }
    let r = t.column("r")?;
    let v = t.rows.iter().map(|row| row[1]).collect();
    let grid: Arc<RadialGrid> = RadialGrid::new(r)?;
    RadialDensity::new(grid, v)
}

#[derive(Serialize)]
struct Versioned<'a, T: Serialize> {
    schema_version: u32,
    #[serde(flatten)]
    body: &'a T,
}

/// Pretty JSON with a leading `schema_version`.
pub fn to_json<T: Serialize>(value: &T) -> Result<String> {
    Ok(serde_json::to_string_pretty(&Versioned {
        schema_version: SCHEMA_VERSION,
        body: value,
    })?)
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut s = to_json(value)?;
    s.push('\n');
    std::fs::write(path, s)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::convex::make_polytrope_phi;
    use crate::radial::{potential_energy, reduced_energies};

    #[test]
    fn density_round_trip_is_exact() {
        let dir = tempfile::tempdir().unwrap();
        let grid = RadialGrid::graded(1.0, 2.0, 300).unwrap();
        let rho = RadialDensity::from_fn(grid, |r| (1.0 - r * r).max(0.0) / 3.0).unwrap();
        let p = dir.path().join("rho.csv");
        write_density(&p, &rho, "rho").unwrap();
        let back = read_density(&p).unwrap();
        assert_eq!(back.values(), rho.values());
        assert_eq!(back.grid().nodes(), rho.grid().nodes());
        let phi = make_polytrope_phi(1.5).unwrap();
        let a = reduced_energies(&phi, &rho, None).unwrap();
        let b = reduced_energies(&phi, &back, None).unwrap();
        assert_eq!(a, b);
        assert_eq!(potential_energy(&rho), potential_energy(&back));
    }

    #[test]
    fn function_table_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let t = SampleTable {
            abscissae: vec![0.1, 1.0, 10.0],
            values: vec![0.01, 1.0, 100.0],
            derivatives: vec![0.2, 2.0, 20.0],
        };
        let p = dir.path().join("f.csv");
        write_function_table(&p, &t).unwrap();
        assert!(std::fs::read_to_string(&p)
            .unwrap()
            .starts_with("# schema_version: 1\nabscissa,value,derivative\n"));
        let back = read_function_table(&p).unwrap();
        assert_eq!(back.abscissae, t.abscissae);
        assert_eq!(back.values, t.values);
        assert_eq!(back.derivatives, t.derivatives);
    }

    #[test]
    fn bad_number_reports_row() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("bad.csv");
        std::fs::write(&p, "r,rho\n0,1\n1,x\n").unwrap();
        let err = read_density(&p).unwrap_err();
        assert!(err.to_string().contains("data row 2"), "{err}");
    }

    #[test]
    fn json_carries_schema_version() {
        #[derive(Serialize)]
        struct S {
            a: f64,
        }
        let s = to_json(&S { a: 0.1 }).unwrap();
        let v: serde_json::Value = serde_json::from_str(&s).unwrap();
        assert_eq!(v["schema_version"], 1);
        assert_eq!(v["a"], 0.1);
    }
}
