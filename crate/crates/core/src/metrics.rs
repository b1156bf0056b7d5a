//! PCC, SCC and RMSE between ground-truth and predicted mean scores.

use std::collections::HashMap;
use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::score_dist::ScoreDistribution;
use crate::{Dimension, NUM_TASKS};

fn check_pair(a: &[f64], b: &[f64], min_len: usize) -> Result<()> {
    if a.len() != b.len() {
        return Err(Error::invalid(format!(
            "length mismatch: {} vs {}",
            a.len(),
            b.len()
        )));
    }
    if a.len() < min_len {
        return Err(Error::invalid(format!("need at least {min_len} values")));
    }
    if a.iter().chain(b).any(|v| !v.is_finite()) {
        return Err(Error::invalid("non-finite value"));
    }
    Ok(())
}

/// Sample Pearson correlation. Constant inputs are an error.
pub fn pcc(a: &[f64], b: &[f64]) -> Result<f64> {
    check_pair(a, b, 2)?;
    let n = a.len() as f64;
    let ma = a.iter().sum::<f64>() / n;
    let mb = b.iter().sum::<f64>() / n;
    let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        let (dx, dy) = (x - ma, y - mb);
        sab += dx * dy;
        saa += dx * dx;
        sbb += dy * dy;
    }
    if saa == 0.0 || sbb == 0.0 {
        return Err(Error::Degenerate("correlation of a constant vector".into()));
    }
    Ok((sab / (saa * sbb).sqrt()).clamp(-1.0, 1.0))
}

/// 1-based ranks; tied values share the average of their positions.
pub fn average_ranks(v: &[f64]) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..v.len()).collect();
    idx.sort_by(|&i, &j| v[i].total_cmp(&v[j]));
    let mut ranks = vec![0.0; v.len()];
    let mut start = 0;
    while start < idx.len() {
        let mut end = start + 1;
        while end < idx.len() && v[idx[end]] == v[idx[start]] {
            end += 1;
        }
        // positions start+1 ..= end
        let avg = (start + 1 + end) as f64 / 2.0;
        for &i in &idx[start..end] {
            ranks[i] = avg;
        }
        start = end;
    }
    ranks
}

/// Spearman correlation: Pearson correlation of average ranks.
pub fn scc(a: &[f64], b: &[f64]) -> Result<f64> {
    check_pair(a, b, 2)?;
    pcc(&average_ranks(a), &average_ranks(b))
}

pub fn rmse(a: &[f64], b: &[f64]) -> Result<f64> {
    check_pair(a, b, 1)?;
    let ss: f64 = a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum();
    Ok((ss / a.len() as f64).sqrt())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DimensionScores {
    pub pcc: f64,
    pub scc: f64,
    pub rmse: f64,
}

/// Per-dimension PCC/SCC/RMSE over `n` images.
#[derive(Debug, Clone, PartialEq)]
pub struct EvalReport {
    pub dims: [DimensionScores; NUM_TASKS],
    pub n: usize,
}

/// Per-image predicted (or true) distributions, keyed by image id.
pub type Predictions = Vec<(String, [ScoreDistribution; NUM_TASKS])>;

/// Scores every dimension on distribution means. The id sets must match.
pub fn evaluate(predictions: &Predictions, truth: &Predictions) -> Result<EvalReport> {
    if predictions.len() != truth.len() {
        return Err(Error::invalid(format!(
            "{} predictions for {} ground-truth images",
            predictions.len(),
            truth.len()
        )));
    }
    let by_id: HashMap<&str, &[ScoreDistribution; NUM_TASKS]> =
        predictions.iter().map(|(id, d)| (id.as_str(), d)).collect();
    if by_id.len() != predictions.len() {
        return Err(Error::invalid("duplicate prediction ids"));
    }
    let mut pred_means = vec![Vec::with_capacity(truth.len()); NUM_TASKS];
    let mut true_means = vec![Vec::with_capacity(truth.len()); NUM_TASKS];
    for (id, t) in truth {
        let p = by_id
            .get(id.as_str())
            .ok_or_else(|| Error::invalid(format!("no prediction for image '{id}'")))?;
        for d in 0..NUM_TASKS {
            pred_means[d].push(p[d].mean_score());
            true_means[d].push(t[d].mean_score());
        }
    }
    let mut dims = [DimensionScores {
        pcc: 0.0,
        scc: 0.0,
        rmse: 0.0,
    }; NUM_TASKS];
    for d in 0..NUM_TASKS {
        dims[d] = DimensionScores {
            pcc: pcc(&true_means[d], &pred_means[d])?,
            scc: scc(&true_means[d], &pred_means[d])?,
            rmse: rmse(&true_means[d], &pred_means[d])?,
        };
    }
    Ok(EvalReport {
        dims,
        n: truth.len(),
    })
}

impl EvalReport {
    /// Comma-separated table, one row per measure and one column per
    /// dimension, plus a trailing `n` row. Values are shortest round-trip
    /// decimals.
    pub fn to_table(&self) -> String {
        let mut s = String::from("measure");
        for d in Dimension::ALL {
            let _ = write!(s, ",{}", d.title());
        }
        s.push('\n');
        let rows: [(&str, fn(&DimensionScores) -> f64); 3] = [
            ("PCC", |d| d.pcc),
            ("SCC", |d| d.scc),
            ("RMSE", |d| d.rmse),
        ];
        for (name, get) in rows {
            s.push_str(name);
            for d in &self.dims {
                let _ = write!(s, ",{:?}", get(d));
            }
            s.push('\n');
        }
        s.push('n');
        for _ in 0..NUM_TASKS {
            let _ = write!(s, ",{}", self.n);
        }
        s.push('\n');
        s
    }

    /// Fixed-width rendering for terminals.
    pub fn to_pretty(&self) -> String {
        let mut s = format!("{:<6}", "");
        for d in Dimension::ALL {
            let _ = write!(s, "{:>10}", d.title());
        }
        s.push('\n');
        for (name, i) in [("PCC", 0), ("SCC", 1), ("RMSE", 2)] {
            let _ = write!(s, "{name:<6}");
            for d in &self.dims {
                let v = [d.pcc, d.scc, d.rmse][i];
                let _ = write!(s, "{v:>10.4}");
            }
            s.push('\n');
        }
        let _ = writeln!(s, "n = {}", self.n);
        s
    }

    pub fn parse_table(text: &str) -> Result<Self> {
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        let header = lines.next().ok_or_else(|| Error::invalid("empty report"))?;
        let expected: Vec<&str> = std::iter::once("measure")
            .chain(Dimension::ALL.iter().map(|d| d.title()))
            .collect();
        if header.split(',').map(str::trim).collect::<Vec<_>>() != expected {
            return Err(Error::invalid(format!("bad report header '{header}'")));
        }
        let mut dims = [DimensionScores {
            pcc: f64::NAN,
            scc: f64::NAN,
            rmse: f64::NAN,
        }; NUM_TASKS];
        let mut n = None;
        let mut seen = [false; 3];
        for line in lines {
            let cells: Vec<&str> = line.split(',').map(str::trim).collect();
            if cells.len() != NUM_TASKS + 1 {
                return Err(Error::invalid(format!("bad report row '{line}'")));
            }
            let vals = cells[1..]
                .iter()
                .map(|c| c.parse::<f64>())
                .collect::<std::result::Result<Vec<_>, _>>()
                .map_err(|e| Error::invalid(format!("bad report value in '{line}': {e}")))?;
            let slot = match cells[0] {
                "PCC" => 0,
                "SCC" => 1,
                "RMSE" => 2,
                "n" => {
                    n = Some(cells[1].parse::<usize>().map_err(|e| Error::invalid(e.to_string()))?);
                    continue;
                }
                other => return Err(Error::invalid(format!("unknown measure '{other}'"))),
            };
            seen[slot] = true;
            for (d, v) in dims.iter_mut().zip(vals) {
                match slot {
                    0 => d.pcc = v,
                    1 => d.scc = v,
                    _ => d.rmse = v,
                }
            }
        }
        if !seen.iter().all(|s| *s) {
            return Err(Error::invalid("report is missing a measure row"));
        }
        Ok(Self {
            dims,
            n: n.ok_or_else(|| Error::invalid("report is missing the n row"))?,
        })
    }
}
