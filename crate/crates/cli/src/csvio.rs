//! Dataset CSV reading and writing.
//!
//! Format: UTF-8, one header row, comma-separated numeric cells with a
//! decimal point and no thousands separators. Concept columns come first in
//! file order, target columns are named by the caller. Values print through
//! Rust's shortest-roundtrip float formatting, so integers stay bare.

use std::path::Path;

use anyhow::{bail, Context, Result};
use entropy_lens_core::dataset::ConceptDataset;
use entropy_lens_core::math::Matrix;

/// Writes concepts then targets under their names; targets as 0/1.
pub fn write_dataset(dataset: &ConceptDataset, path: &Path) -> Result<()> {
    let mut out = String::new();
    let mut header: Vec<&str> = dataset.concept_names.iter().map(|s| s.as_str()).collect();
    header.extend(dataset.class_names.iter().map(|s| s.as_str()));
    out.push_str(&header.join(","));
    out.push('\n');
    for s in 0..dataset.samples() {
        let mut cells: Vec<String> = dataset
            .concepts
            .row(s)
            .iter()
            .map(|v| format!("{v}"))
            .collect();
        cells.extend(
            dataset.targets[s]
                .iter()
                .map(|&t| String::from(if t { "1" } else { "0" })),
        );
        out.push_str(&cells.join(","));
        out.push('\n');
    }
    std::fs::write(path, out).with_context(|| format!("writing {}", path.display()))?;
    Ok(())
}

/// Loads a dataset, mapping `targets` to class columns and tercile-encoding
/// any concept column named in `discretize`.
pub fn read_dataset(path: &Path, targets: &[String], discretize: &[String]) -> Result<ConceptDataset> {
    let text =
        std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let mut lines = text.lines();
    let header_line = match lines.next() {
        Some(line) if !line.trim().is_empty() => line,
        _ => bail!("no samples: {} is empty", path.display()),
    };
    let header: Vec<String> = header_line.split(',').map(|h| h.trim().to_string()).collect();

    for target in targets {
        if !header.iter().any(|h| h == target) {
            bail!("target column '{target}' not found in {}", path.display());
        }
    }
    let is_target: Vec<bool> = header.iter().map(|h| targets.contains(h)).collect();

    // Parse every cell, reporting 1-based data coordinates on failure.
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (li, line) in lines.enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let cells: Vec<&str> = line.split(',').collect();
        if cells.len() != header.len() {
            bail!(
                "row {} has {} cells, header has {}",
                li + 1,
                cells.len(),
                header.len()
            );
        }
        let mut row = Vec::with_capacity(cells.len());
        for (ci, cell) in cells.iter().enumerate() {
            let value: f64 = cell.trim().parse().map_err(|_| {
                anyhow::anyhow!(
                    "non-numeric cell at (row {}, column '{}'): '{}'",
                    li + 1,
                    header[ci],
                    cell.trim()
                )
            })?;
            row.push(value);
        }
        rows.push(row);
    }
    if rows.is_empty() {
        bail!("no samples: {} has a header but no data rows", path.display());
    }

    // Assemble concept columns in file order, expanding discretized ones.
    let mut concept_names: Vec<String> = Vec::new();
    let mut concept_columns: Vec<Vec<f64>> = Vec::new();
    for (ci, name) in header.iter().enumerate() {
        if is_target[ci] {
            continue;
        }
        let raw: Vec<f64> = rows.iter().map(|r| r[ci]).collect();
        if discretize.iter().any(|d| d == name) {
            let (names, columns) = discretize_column(&raw, name)?;
            concept_names.extend(names);
            concept_columns.extend(columns);
        } else {
            for (ri, &v) in raw.iter().enumerate() {
                if !(0.0..=1.0).contains(&v) {
                    bail!(
                        "value {v} outside [0, 1] at (row {}, column '{name}'); \
                         list the column under dataset.discretize to bin it",
                        ri + 1
                    );
                }
            }
            concept_names.push(name.clone());
            concept_columns.push(raw);
        }
    }

    let n = rows.len();
    let k = concept_columns.len();
    let mut data = Vec::with_capacity(n * k);
    for s in 0..n {
        for column in &concept_columns {
            data.push(column[s]);
        }
    }

    let mut class_names: Vec<String> = Vec::new();
    let mut target_cols: Vec<usize> = Vec::new();
    for target in targets {
        let ci = header.iter().position(|h| h == target).unwrap();
        class_names.push(target.clone());
        target_cols.push(ci);
    }
    let mut target_rows: Vec<Vec<bool>> = Vec::with_capacity(n);
    for (ri, row) in rows.iter().enumerate() {
        let mut t = Vec::with_capacity(target_cols.len());
        for (&ci, name) in target_cols.iter().zip(class_names.iter()) {
            let v = row[ci];
            if v == 0.0 {
                t.push(false);
            } else if v == 1.0 {
                t.push(true);
            } else {
                bail!(
                    "target cell at (row {}, column '{name}') must be 0 or 1, got {v}",
                    ri + 1
                );
            }
        }
        target_rows.push(t);
    }

    ConceptDataset::new(
        Matrix::new(n, k, data).map_err(|e| anyhow::anyhow!("{e}"))?,
        concept_names,
        target_rows,
        class_names,
        path.display().to_string(),
    )
    .map_err(|e| anyhow::anyhow!("{e}"))
}

/// Tercile one-hot encoding: three boolean columns split at the empirical
/// 1/3 and 2/3 percentiles (linear interpolation), boundary values falling
/// into the lower bin. A constant column collapses to a single all-true
/// `_NORMAL` column; fewer than three distinct values is an error.
pub fn discretize_column(values: &[f64], name: &str) -> Result<(Vec<String>, Vec<Vec<f64>>)> {
    let mut distinct: Vec<f64> = values.to_vec();
    distinct.sort_by(|a, b| a.total_cmp(b));
    distinct.dedup();
    if distinct.len() == 1 {
        eprintln!("warning: column '{name}' is constant; emitting a single {name}_NORMAL concept");
        return Ok((
            vec![format!("{name}_NORMAL")],
            vec![vec![1.0; values.len()]],
        ));
    }
    if distinct.len() < 3 {
        bail!("column '{name}' has {} distinct values; tercile binning needs at least 3", distinct.len());
    }

    let mut sorted: Vec<f64> = values.to_vec();
    sorted.sort_by(|a, b| a.total_cmp(b));
    let p33 = percentile_linear(&sorted, 1.0 / 3.0);
    let p67 = percentile_linear(&sorted, 2.0 / 3.0);

    let names = vec![
        format!("{name}_LOW"),
        format!("{name}_NORMAL"),
        format!("{name}_HIGH"),
    ];
    let mut low = vec![0.0; values.len()];
    let mut normal = vec![0.0; values.len()];
    let mut high = vec![0.0; values.len()];
    for (i, &v) in values.iter().enumerate() {
        if v <= p33 {
            low[i] = 1.0;
        } else if v <= p67 {
            normal[i] = 1.0;
        } else {
            high[i] = 1.0;
        }
    }
    Ok((names, vec![low, normal, high]))
}

fn percentile_linear(sorted: &[f64], q: f64) -> f64 {
    let position = q * (sorted.len() - 1) as f64;
    let lower = position.floor() as usize;
    let fraction = position - lower as f64;
    if lower + 1 < sorted.len() {
        sorted[lower] + fraction * (sorted[lower + 1] - sorted[lower])
    } else {
        sorted[lower]
    }
}
