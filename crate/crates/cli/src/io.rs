//! Plain-text wave, covariate and mask files.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use saom_core::{ActorCovariate, Digraph, PanelData, TieMask};

use crate::error::{CliError, CliResult};

fn read(path: &Path) -> CliResult<String> {
    fs::read_to_string(path).map_err(|source| CliError::Read { path: path.to_path_buf(), source })
}

fn data_error(path: &Path, message: impl Into<String>) -> CliError {
    CliError::Data { path: path.to_path_buf(), message: message.into() }
}

/// Parses rows of whitespace-separated 0/1 tokens. Blank lines are skipped.
pub fn parse_matrix(text: &str, path: &Path) -> CliResult<Vec<Vec<u8>>> {
    let mut rows = Vec::new();
    for (line_no, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let mut row = Vec::new();
        for (col, token) in line.split_whitespace().enumerate() {
            match token {
                "0" => row.push(0),
                "1" => row.push(1),
                other => {
                    return Err(data_error(
                        path,
                        format!("line {}, column {}: token {other:?} is not 0 or 1", line_no + 1, col + 1),
                    ))
                }
            }
        }
        rows.push(row);
    }
    let n = rows.len();
    if n == 0 {
        return Err(data_error(path, "empty matrix"));
    }
    if let Some((i, r)) = rows.iter().enumerate().find(|(_, r)| r.len() != n) {
        return Err(data_error(path, format!("row {} has {} entries, expected {n}", i + 1, r.len())));
    }
    Ok(rows)
}

pub fn read_wave(path: &Path) -> CliResult<Digraph> {
    let rows = parse_matrix(&read(path)?, path)?;
    Digraph::from_matrix(&rows).map_err(|e| data_error(path, e.to_string()))
}

pub fn read_mask(path: &Path) -> CliResult<TieMask> {
    let rows = parse_matrix(&read(path)?, path)?;
    TieMask::from_matrix(&rows).map_err(|e| data_error(path, e.to_string()))
}

pub fn read_covariate(name: &str, path: &Path) -> CliResult<ActorCovariate> {
    let mut values = Vec::new();
    for (line_no, line) in read(path)?.lines().enumerate() {
        let t = line.trim();
        if t.is_empty() {
            continue;
        }
        let v: f64 = t
            .parse()
            .ok()
            .filter(|v: &f64| v.is_finite())
            .ok_or_else(|| data_error(path, format!("line {}: {t:?} is not a number", line_no + 1)))?;
        values.push(v);
    }
    ActorCovariate::new(name, values).map_err(|e| data_error(path, e.to_string()))
}

/// Reads the waves, covariates and optional structural-zero mask. Durations
/// are 1 unless `times` is given.
pub fn load_panel(
    waves: &[PathBuf],
    covariates: &[(String, PathBuf)],
    mask: Option<&Path>,
    times: Option<&[f64]>,
) -> CliResult<PanelData> {
    let graphs = waves.iter().map(|p| read_wave(p)).collect::<CliResult<Vec<_>>>()?;
    if let Some(first) = graphs.first() {
        for (g, p) in graphs.iter().zip(waves) {
            if g.n() != first.n() {
                return Err(data_error(p, format!("{} actors, but the first wave has {}", g.n(), first.n())));
            }
        }
        for (name, p) in covariates {
            let c = read_covariate(name, p)?;
            if c.len() != first.n() {
                return Err(data_error(p, format!("{} values for {} actors", c.len(), first.n())));
            }
        }
    }
    let covs = covariates.iter().map(|(name, p)| read_covariate(name, p)).collect::<CliResult<Vec<_>>>()?;
    let panel = match times {
        Some(t) => PanelData::with_times(graphs, t, covs)?,
        None => PanelData::new(graphs, covs)?,
    };
    match mask {
        Some(p) => Ok(panel.with_mask(read_mask(p)?)?),
        None => Ok(panel),
    }
}

pub fn format_wave(x: &Digraph) -> String {
    let mut out = String::with_capacity(2 * x.n() * x.n());
    for row in x.to_matrix() {
        let line: Vec<&str> = row.iter().map(|v| if *v == 1 { "1" } else { "0" }).collect();
        let _ = writeln!(out, "{}", line.join(" "));
    }
    out
}

pub fn write_text(path: &Path, text: &str) -> CliResult<()> {
    fs::write(path, text).map_err(|source| CliError::Write { path: path.to_path_buf(), source })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn wave_round_trip() {
        let x = Digraph::from_arcs(4, [(0, 1), (2, 3), (3, 0)]).unwrap();
        let text = format_wave(&x);
        let rows = parse_matrix(&text, Path::new("mem")).unwrap();
        assert_eq!(Digraph::from_matrix(&rows).unwrap(), x);
    }

    #[test]
    fn bad_tokens_name_their_position() {
        let err = parse_matrix("0 1\n2 0\n", Path::new("w.txt")).unwrap_err();
        assert!(err.to_string().contains("line 2, column 1"), "{err}");
        assert_eq!(err.exit_code(), 3);
        let err = parse_matrix("0 1 0\n1 0\n0 0 0\n", Path::new("w.txt")).unwrap_err();
        assert!(err.to_string().contains("row 2"));
    }
}
