//! Plain-text dataset formats.
//!
//! * points: one point per line, whitespace-separated decimal coordinates.
//! * dissimilarity: `n` lines of `n` whitespace-separated reals.
//! * bitstring: a single line of `0`/`1` characters.
//! * rbm dataset: one sample per line, `0`/`1` characters of equal length.
//!
//! Blank lines are ignored everywhere. Errors carry the 1-based line number.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use log::warn;
use partial_reinit::hmm::ObsSeq;
use partial_reinit::kmeans::PointSet;
use partial_reinit::kmedoids::{DissimilarityMatrix, ASYMMETRY_TOLERANCE};
use partial_reinit::rbm::BinaryDataset;
use serde::{Deserialize, Serialize};

use crate::error::{BenchError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DatasetKind {
    Points,
    Dissimilarity,
    Bitstring,
    RbmData,
}

/// A loaded, validated problem instance.
#[derive(Debug, Clone, PartialEq)]
pub enum Dataset {
    Points(PointSet),
    Dissimilarity(DissimilarityMatrix),
    Bitstring(ObsSeq),
    RbmData(BinaryDataset),
}

impl Dataset {
    pub fn kind(&self) -> DatasetKind {
        match self {
            Self::Points(_) => DatasetKind::Points,
            Self::Dissimilarity(_) => DatasetKind::Dissimilarity,
            Self::Bitstring(_) => DatasetKind::Bitstring,
            Self::RbmData(_) => DatasetKind::RbmData,
        }
    }
}

fn content_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines().enumerate().map(|(i, l)| (i + 1, l.trim())).filter(|(_, l)| !l.is_empty())
}

fn parse_reals(line_no: usize, line: &str) -> Result<Vec<f64>> {
    line.split_whitespace()
        .map(|tok| match tok.parse::<f64>() {
            Ok(x) if x.is_finite() => Ok(x),
            Ok(_) => Err(BenchError::parse(line_no, format!("non-finite value {tok:?}"))),
            Err(_) => Err(BenchError::parse(line_no, format!("cannot parse {tok:?} as a number"))),
        })
        .collect()
}

pub fn parse_points(text: &str) -> Result<PointSet> {
    let mut dim = None;
    let mut coords = Vec::new();
    let mut n = 0;
    for (line_no, line) in content_lines(text) {
        let row = parse_reals(line_no, line)?;
        match dim {
            None => dim = Some(row.len()),
            Some(d) if d != row.len() => {
                return Err(BenchError::parse(
                    line_no,
                    format!("expected {d} coordinates, found {}", row.len()),
                ))
            }
            Some(_) => {}
        }
        coords.extend(row);
        n += 1;
    }
    let Some(dim) = dim else {
        return Err(BenchError::parse(1, "no points"));
    };
    Ok(PointSet::new(n, dim, coords)?)
}

/// Parses and symmetrises a dissimilarity matrix, warning when the input
/// was asymmetric beyond [`ASYMMETRY_TOLERANCE`].
pub fn parse_dissimilarity(text: &str) -> Result<DissimilarityMatrix> {
    let mut n = None;
    let mut entries = Vec::new();
    let mut rows = 0;
    for (line_no, line) in content_lines(text) {
        let row = parse_reals(line_no, line)?;
        let width = *n.get_or_insert(row.len());
        if row.len() != width {
            return Err(BenchError::parse(line_no, format!("expected {width} entries, found {}", row.len())));
        }
        if rows == width {
            return Err(BenchError::parse(line_no, format!("more than {width} rows")));
        }
        if row[rows] != 0.0 {
            return Err(BenchError::parse(
                line_no,
                format!("diagonal entry {} is {}, expected 0", rows + 1, row[rows]),
            ));
        }
        if let Some(x) = row.iter().find(|x| **x < 0.0) {
            return Err(BenchError::parse(line_no, format!("negative dissimilarity {x}")));
        }
        entries.extend(row);
        rows += 1;
    }
    let Some(n) = n else {
        return Err(BenchError::parse(1, "empty matrix"));
    };
    if rows != n {
        return Err(BenchError::parse(
            text.lines().count().max(1),
            format!("matrix has {rows} rows but {n} columns"),
        ));
    }
    let sym = DissimilarityMatrix::from_raw(n, entries)?;
    if sym.max_relative_asymmetry > ASYMMETRY_TOLERANCE {
        warn!(
            "dissimilarity matrix asymmetric up to {:.3e} relative; symmetrised by averaging",
            sym.max_relative_asymmetry
        );
    }
    Ok(sym.matrix)
}

fn parse_bits(line_no: usize, line: &str) -> Result<Vec<u8>> {
    line.bytes()
        .enumerate()
        .map(|(col, c)| match c {
            b'0' => Ok(0),
            b'1' => Ok(1),
            _ => Err(BenchError::parse(
                line_no,
                format!("column {}: expected '0' or '1', found {:?}", col + 1, char::from(c)),
            )),
        })
        .collect()
}

pub fn parse_bitstring(text: &str) -> Result<ObsSeq> {
    let mut lines = content_lines(text);
    let Some((line_no, line)) = lines.next() else {
        return Err(BenchError::parse(1, "empty bit string"));
    };
    if let Some((extra, _)) = lines.next() {
        return Err(BenchError::parse(extra, "bit-string file must hold a single line"));
    }
    let bits = parse_bits(line_no, line)?;
    Ok(ObsSeq::new(bits.into_iter().map(usize::from).collect(), 2)?)
}

pub fn parse_rbm_data(text: &str) -> Result<BinaryDataset> {
    let mut width = None;
    let mut bits = Vec::new();
    for (line_no, line) in content_lines(text) {
        let row = parse_bits(line_no, line)?;
        let w = *width.get_or_insert(row.len());
        if row.len() != w {
            return Err(BenchError::parse(line_no, format!("expected {w} bits, found {}", row.len())));
        }
        bits.extend(row);
    }
    let Some(width) = width else {
        return Err(BenchError::parse(1, "no samples"));
    };
    Ok(BinaryDataset::new(width, bits)?)
}

pub fn parse_dataset(text: &str, kind: DatasetKind) -> Result<Dataset> {
    Ok(match kind {
        DatasetKind::Points => Dataset::Points(parse_points(text)?),
        DatasetKind::Dissimilarity => Dataset::Dissimilarity(parse_dissimilarity(text)?),
        DatasetKind::Bitstring => Dataset::Bitstring(parse_bitstring(text)?),
        DatasetKind::RbmData => Dataset::RbmData(parse_rbm_data(text)?),
    })
}

pub fn load_dataset(path: &Path, kind: DatasetKind) -> Result<Dataset> {
    let text = fs::read_to_string(path).map_err(|e| BenchError::io(path, e))?;
    parse_dataset(&text, kind)
}

/// Serialises in the loader format; `parse_dataset(&format_dataset(d), d.kind())`
/// reproduces `d` exactly.
pub fn format_dataset(dataset: &Dataset) -> String {
    let mut out = String::new();
    let mut write_row = |row: &mut dyn Iterator<Item = String>| {
        let joined: Vec<String> = row.collect();
        out.push_str(&joined.join(" "));
        out.push('\n');
    };
    match dataset {
        Dataset::Points(p) => {
            for pt in p.iter() {
                write_row(&mut pt.iter().map(|x| format!("{x:?}")));
            }
        }
        Dataset::Dissimilarity(d) => {
            for i in 0..d.len() {
                write_row(&mut d.row(i).iter().map(|x| format!("{x:?}")));
            }
        }
        Dataset::Bitstring(s) => {
            let line: String = s.symbols().iter().map(|&b| char::from(b'0' + b as u8)).collect();
            let _ = writeln!(out, "{line}");
        }
        Dataset::RbmData(data) => {
            for s in data.samples() {
                let line: String = s.iter().map(|&b| char::from(b'0' + b)).collect();
                let _ = writeln!(out, "{line}");
            }
        }
    }
    out
}
