//! Text formats: versioned CSV with `#` metadata lines, and coordinate-list
//! sparse matrices.
//!
//! A CSV file starts with `# dmkrm-csv v1 kind=<kind>`, followed by any
//! number of `# key=value` lines, one header line, and the records.

use std::io::{BufRead, Write};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::classical::BifurcationColumn;
use crate::error::{Error, Result};
use crate::observables::{HusimiMap, TimeSeries};
use crate::sparse::CscMatrix;
use crate::spectra::SpectrumResult;
use crate::ulam::CellDensity;

pub const CSV_MAGIC: &str = "dmkrm-csv";
pub const COO_MAGIC: &str = "dmkrm-coo";
pub const FORMAT_VERSION: &str = "v1";

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct CsvHeader {
    pub kind: String,
    pub metadata: Vec<(String, String)>,
}

impl CsvHeader {
    pub fn new(kind: &str) -> Self {
        Self {
            kind: kind.into(),
            metadata: Vec::new(),
        }
    }

    pub fn with(mut self, key: &str, value: impl ToString) -> Self {
        self.metadata.push((key.into(), value.to_string()));
        self
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.metadata
            .iter()
            .find(|(k, _)| k == key)
            .map(|(_, v)| v.as_str())
    }
}

fn csv_error(e: csv::Error) -> Error {
    let line = e.position().map(|p| p.line() as usize).unwrap_or(0);
    Error::Parse {
        line,
        message: e.to_string(),
    }
}

fn check_token(s: &str, line: usize) -> Result<()> {
    if s.is_empty()
        || s.chars()
            .any(|c| c.is_whitespace() || c == '=' || c.is_control())
    {
        return Err(Error::Parse {
            line,
            message: format!("bad metadata token {s:?}"),
        });
    }
    Ok(())
}

pub fn write_csv<W: Write, R: Serialize>(mut w: W, header: &CsvHeader, rows: &[R]) -> Result<()> {
    check_token(&header.kind, 1)?;
    writeln!(w, "# {CSV_MAGIC} {FORMAT_VERSION} kind={}", header.kind)?;
    for (i, (k, v)) in header.metadata.iter().enumerate() {
        check_token(k, i + 2)?;
        if v.contains(['\n', '\r']) {
            return Err(Error::InvalidParameter(format!(
                "metadata value for {k} spans lines"
            )));
        }
        writeln!(w, "# {k}={v}")?;
    }
    let mut out = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(w);
    for r in rows {
        out.serialize(r).map_err(csv_error)?;
    }
    out.flush()?;
    Ok(())
}

/// Reads a file written by [`write_csv`]. With `kind` given, a file of
/// another kind is rejected.
pub fn read_csv<R: BufRead, T: DeserializeOwned>(
    mut r: R,
    kind: Option<&str>,
) -> Result<(CsvHeader, Vec<T>)> {
    let mut line = String::new();
    r.read_line(&mut line)?;
    let first = line.trim_end_matches(['\n', '\r']);
    let mut parts = first.strip_prefix("# ").unwrap_or("").split(' ');
    let (magic, version, kind_field) = (parts.next(), parts.next(), parts.next());
    if magic != Some(CSV_MAGIC) || parts.next().is_some() {
        return Err(Error::Parse {
            line: 1,
            message: "missing dmkrm-csv header".into(),
        });
    }
    if version != Some(FORMAT_VERSION) {
        return Err(Error::Parse {
            line: 1,
            message: format!("unsupported version {version:?}"),
        });
    }
    let found = kind_field
        .and_then(|k| k.strip_prefix("kind="))
        .unwrap_or("");
    check_token(found, 1)?;
    if let Some(want) = kind {
        if want != found {
            return Err(Error::Parse {
                line: 1,
                message: format!("expected kind {want}, found {found}"),
            });
        }
    }
    let mut header = CsvHeader::new(found);

    let mut lineno = 1;
    let mut pending = String::new();
    loop {
        line.clear();
        if r.read_line(&mut line)? == 0 {
            break;
        }
        lineno += 1;
        match line.strip_prefix("# ") {
            Some(meta) => {
                let meta = meta.trim_end_matches(['\n', '\r']);
                let (k, v) = meta.split_once('=').ok_or_else(|| Error::Parse {
                    line: lineno,
                    message: "metadata line without '='".into(),
                })?;
                check_token(k, lineno)?;
                header.metadata.push((k.into(), v.into()));
            }
            None => {
                pending = std::mem::take(&mut line);
                break;
            }
        }
    }
    let body = std::io::Read::chain(std::io::Cursor::new(pending.into_bytes()), r);
    let mut reader = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .from_reader(body);
    let mut rows = Vec::new();
    for rec in reader.deserialize() {
        rows.push(rec.map_err(|e| match csv_error(e) {
            Error::Parse { line, message } => Error::Parse {
                line: line + lineno - 1,
                message,
            },
            other => other,
        })?);
    }
    Ok((header, rows))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SeriesRecord {
    pub t: u64,
    pub value: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpectrumRecord {
    pub re: f64,
    pub im: f64,
    pub modulus: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DensityRecord {
    pub q_center: f64,
    pub p_center: f64,
    pub mass: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HusimiRecord {
    pub q: f64,
    pub p: f64,
    pub value: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BifurcationRecord {
    pub k: f64,
    pub trajectory: usize,
    pub p: f64,
}

pub fn series_records(s: &TimeSeries) -> Vec<SeriesRecord> {
    s.times
        .iter()
        .zip(&s.values)
        .map(|(t, v)| SeriesRecord { t: *t, value: *v })
        .collect()
}

pub fn spectrum_records(s: &SpectrumResult) -> Vec<SpectrumRecord> {
    s.eigenvalues
        .iter()
        .map(|z| SpectrumRecord {
            re: z.re,
            im: z.im,
            modulus: z.norm(),
        })
        .collect()
}

pub fn density_records(d: &CellDensity) -> Vec<DensityRecord> {
    d.mass
        .iter()
        .enumerate()
        .map(|(cell, m)| {
            let c = d.grid.center(cell);
            DensityRecord {
                q_center: c.q,
                p_center: c.p,
                mass: *m,
            }
        })
        .collect()
}

pub fn husimi_records(h: &HusimiMap) -> Vec<HusimiRecord> {
    let g = &h.grid;
    (0..g.n_p)
        .flat_map(|ip| {
            (0..g.n_q).map(move |iq| HusimiRecord {
                q: g.q(iq),
                p: g.p(ip),
                value: h.value(iq, ip),
            })
        })
        .collect()
}

pub fn bifurcation_records(columns: &[BifurcationColumn]) -> Vec<BifurcationRecord> {
    columns
        .iter()
        .flat_map(|c| {
            let per = c.samples.len() / c.clusters.len().max(1);
            c.samples
                .iter()
                .enumerate()
                .map(move |(i, p)| BifurcationRecord {
                    k: c.kick,
                    trajectory: i / per.max(1),
                    p: *p,
                })
        })
        .collect()
}

/// `# dmkrm-coo v1 rows=R cols=C nnz=Z`, then one `row col value` line
/// per stored entry.
pub fn write_coo<W: Write>(mut w: W, m: &CscMatrix) -> Result<()> {
    writeln!(
        w,
        "# {COO_MAGIC} {FORMAT_VERSION} rows={} cols={} nnz={}",
        m.rows(),
        m.cols(),
        m.nnz()
    )?;
    for (r, c, v) in m.triplets() {
        writeln!(w, "{r} {c} {v:e}")?;
    }
    Ok(())
}

/// Largest dimension accepted by [`read_coo`].
pub const COO_MAX_DIM: usize = 1 << 24;

pub fn read_coo<R: BufRead>(r: R) -> Result<CscMatrix> {
    let mut lines = r.lines();
    let bad = |line: usize, message: &str| Error::Parse {
        line,
        message: message.into(),
    };
    let first = lines.next().ok_or_else(|| bad(1, "empty input"))??;
    let fields: Vec<&str> = first.split_whitespace().collect();
    if fields.len() != 6
        || fields[0] != "#"
        || fields[1] != COO_MAGIC
        || fields[2] != FORMAT_VERSION
    {
        return Err(bad(1, "missing dmkrm-coo header"));
    }
    let field = |s: &str, key: &str| -> Result<usize> {
        s.strip_prefix(key)
            .and_then(|v| v.parse().ok())
            .ok_or_else(|| bad(1, &format!("bad {key} field")))
    };
    let rows = field(fields[3], "rows=")?;
    let cols = field(fields[4], "cols=")?;
    let nnz = field(fields[5], "nnz=")?;
    if rows > COO_MAX_DIM || cols > COO_MAX_DIM {
        return Err(bad(1, "dimension too large"));
    }
    let mut triplets = Vec::new();
    for (i, line) in lines.enumerate() {
        let lineno = i + 2;
        let line = line?;
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let mut it = line.split_whitespace();
        let (Some(rs), Some(cs), Some(vs), None) = (it.next(), it.next(), it.next(), it.next())
        else {
            return Err(bad(lineno, "expected `row col value`"));
        };
        let r: usize = rs.parse().map_err(|_| bad(lineno, "bad row index"))?;
        let c: usize = cs.parse().map_err(|_| bad(lineno, "bad column index"))?;
        let v: f64 = vs.parse().map_err(|_| bad(lineno, "bad value"))?;
        if r >= rows || c >= cols {
            return Err(bad(lineno, "index out of range"));
        }
        if !v.is_finite() {
            return Err(bad(lineno, "non-finite value"));
        }
        if triplets.len() == nnz {
            return Err(bad(lineno, "more entries than nnz"));
        }
        triplets.push((r, c, v));
    }
    if triplets.len() != nnz {
        return Err(bad(
            0,
            &format!("expected {nnz} entries, found {}", triplets.len()),
        ));
    }
    CscMatrix::from_triplets(rows, cols, &triplets)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analysis::ComparisonRow;
    use proptest::prelude::*;

    #[test]
    fn series_round_trip() {
        let rows = vec![
            SeriesRecord { t: 0, value: 0.1 },
            SeriesRecord {
                t: 1,
                value: 3.5e-200,
            },
        ];
        let header = CsvHeader::new("otoc").with("K", 5.4).with("N", 128);
        let mut buf = Vec::new();
        write_csv(&mut buf, &header, &rows).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("# dmkrm-csv v1 kind=otoc\n# K=5.4\n# N=128\nt,value\n"));
        assert!(!text.contains('\r'));
        let (h, back): (_, Vec<SeriesRecord>) = read_csv(&buf[..], Some("otoc")).unwrap();
        assert_eq!(h, header);
        assert_eq!(back, rows);
        assert!(read_csv::<_, SeriesRecord>(&buf[..], Some("spectrum")).is_err());
    }

    #[test]
    fn comparison_rows_with_gaps() {
        let row = ComparisonRow {
            k: 2.5,
            otoc_decay_rate: Some(0.7),
            otoc_decay_confidence: None,
            fit_shrunk: false,
            otoc_growth_rate: None,
            lyapunov: Some(-0.1),
            rescaled_lyapunov: Some(0.55),
            ipr: None,
            rescaled_ipr: None,
            quantum_gap_rate: None,
            classical_gap_rate_noiseless: None,
            classical_gap_rate_noisy: None,
            max_edge_population: Some(1e-9),
            status: "equilibrium: not converged, residual 1e-3; x".into(),
        };
        let mut buf = Vec::new();
        write_csv(
            &mut buf,
            &CsvHeader::new("sweep"),
            std::slice::from_ref(&row),
        )
        .unwrap();
        let (_, back): (_, Vec<ComparisonRow>) = read_csv(&buf[..], Some("sweep")).unwrap();
        assert_eq!(back, vec![row]);
    }

    #[test]
    fn malformed_csv_is_an_error() {
        for text in [
            "",
            "k,v\n1,2\n",
            "# dmkrm-csv v2 kind=otoc\nt,value\n",
            "# dmkrm-csv v1 kind=otoc\n# novalue\nt,value\n",
            "# dmkrm-csv v1 kind=otoc\nt,value\nx,1\n",
        ] {
            assert!(
                read_csv::<_, SeriesRecord>(text.as_bytes(), None).is_err(),
                "{text:?}"
            );
        }
    }

    #[test]
    fn coo_round_trip_and_rejects() {
        let m = CscMatrix::from_triplets(3, 2, &[(0, 0, 0.25), (2, 1, 1.0 / 3.0), (1, 0, 0.75)])
            .unwrap();
        let mut buf = Vec::new();
        write_coo(&mut buf, &m).unwrap();
        let back = read_coo(&buf[..]).unwrap();
        assert_eq!(
            back.triplets().collect::<Vec<_>>(),
            m.triplets().collect::<Vec<_>>()
        );
        for text in [
            "",
            "# dmkrm-coo v1 rows=2 cols=2 nnz=1\n2 0 1.0\n",
            "# dmkrm-coo v1 rows=2 cols=2 nnz=1\n0 0 NaN\n",
            "# dmkrm-coo v1 rows=2 cols=2 nnz=2\n0 0 1.0\n",
            "# dmkrm-coo v1 rows=2 cols=2 nnz=1\n0 0\n",
            "# dmkrm-coo v1 rows=99999999999 cols=2 nnz=0\n",
        ] {
            assert!(read_coo(text.as_bytes()).is_err(), "{text:?}");
        }
    }

    proptest! {
        #[test]
        fn csv_reader_never_panics(s in "\\PC*") {
            let _ = read_csv::<_, SeriesRecord>(s.as_bytes(), None);
            let _ = read_coo(s.as_bytes());
        }

        #[test]
        fn spectrum_round_trip(v in proptest::collection::vec((-1.0f64..1.0, -1.0f64..1.0), 0..20)) {
            let rows: Vec<SpectrumRecord> = v.iter().map(|(a, b)| SpectrumRecord { re: *a, im: *b, modulus: a.hypot(*b) }).collect();
            let mut buf = Vec::new();
            write_csv(&mut buf, &CsvHeader::new("spectrum"), &rows).unwrap();
            let (_, back): (_, Vec<SpectrumRecord>) = read_csv(&buf[..], Some("spectrum")).unwrap();
            prop_assert_eq!(back, rows);
        }
    }
}
