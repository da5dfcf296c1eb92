use std::io::BufRead;
use std::path::Path;

use super::{LinearModelData, LossKind};
use crate::error::{Error, Result};
use crate::linalg::SparseRow;

/// Read a libsvm text file. See [`parse_libsvm`].
pub fn load_libsvm(path: impl AsRef<Path>, loss: LossKind, standardize: bool) -> Result<LinearModelData> {
    let f = std::fs::File::open(path.as_ref())
        .map_err(|e| Error::Io(format!("{}: {e}", path.as_ref().display())))?;
    parse_libsvm(std::io::BufReader::new(f), loss, standardize)
}

/// Parse `label idx:val idx:val …` lines with 1-based feature indices.
///
/// Logistic labels map to −1 when `<= 0`, else +1; squared loss keeps the
/// raw label. Blank lines and `#` comments are skipped. With `standardize`,
/// each feature is shifted and scaled to zero mean and unit variance, which
/// densifies rows whose features have nonzero mean.
pub fn parse_libsvm(reader: impl BufRead, loss: LossKind, standardize: bool) -> Result<LinearModelData> {
    let mut rows = Vec::new();
    let mut labels = Vec::new();
    let mut d = 0usize;
    for (lineno, line) in reader.lines().enumerate() {
        let line = line?;
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let perr = |msg: String| Error::Parse { line: lineno + 1, msg };
        let mut tokens = line.split_whitespace();
        let raw = tokens.next().unwrap_or_default().replace('\u{2212}', "-");
        let y: f64 = raw.parse().map_err(|_| perr(format!("bad label `{raw}`")))?;
        let y = match loss {
            LossKind::Logistic if y <= 0.0 => -1.0,
            LossKind::Logistic => 1.0,
            LossKind::Squared => y,
        };
        let mut pairs = Vec::new();
        for tok in tokens {
            let (i, v) = tok
                .split_once(':')
                .ok_or_else(|| perr(format!("expected idx:val, got `{tok}`")))?;
            let i: usize = i.parse().map_err(|_| perr(format!("bad index `{i}`")))?;
            if i == 0 {
                return Err(perr("feature indices are 1-based".into()));
            }
            let v: f64 = v.parse().map_err(|_| perr(format!("bad value `{v}`")))?;
            if !v.is_finite() {
                return Err(perr(format!("non-finite value `{v}`")));
            }
            d = d.max(i);
            pairs.push((i - 1, v));
        }
        rows.push(SparseRow::new(pairs));
        labels.push(y);
    }
    if rows.is_empty() {
        return Err(Error::Parse { line: 0, msg: "no data rows".into() });
    }
    let d = d.max(1);
    if standardize {
        rows = standardize_rows(&rows, d);
    }
    LinearModelData::new(rows, labels, loss, d)
}

fn standardize_rows(rows: &[SparseRow], d: usize) -> Vec<SparseRow> {
    let n = rows.len() as f64;
    let mut mean = vec![0.0; d];
    let mut sq = vec![0.0; d];
    for r in rows {
        for (k, &i) in r.idx.iter().enumerate() {
            mean[i] += r.val[k];
            sq[i] += r.val[k] * r.val[k];
        }
    }
    let sd: Vec<f64> = (0..d)
        .map(|j| {
            mean[j] /= n;
            (sq[j] / n - mean[j] * mean[j]).max(0.0).sqrt()
        })
        .collect();
    rows.iter()
        .map(|r| {
            let mut dense = r.to_dense(d);
            for j in 0..d {
                dense[j] = if sd[j] > 0.0 { (dense[j] - mean[j]) / sd[j] } else { 0.0 };
            }
            SparseRow::from_dense(&dense)
        })
        .collect()
}
