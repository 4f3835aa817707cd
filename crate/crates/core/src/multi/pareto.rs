use std::io::{BufRead, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::{Error, Point, Result};

/// Tolerance of the relaxed front.
pub const RELAXED_EPSILON: f64 = 0.01;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FrontPoint {
    pub objectives: Vec<f64>,
    pub input: Option<Point>,
}

/// A set of mutually non-dominated objective vectors (maximization).
///
/// With `tolerance > 0` a point is only removed when another point beats it
/// by more than the tolerance in every objective, so near-optimal points
/// survive.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ParetoFront {
    points: Vec<FrontPoint>,
    tolerance: f64,
}

impl ParetoFront {
    pub fn new(points: Vec<FrontPoint>, tolerance: f64) -> Self {
        Self { points, tolerance }
    }

    /// Wraps raw objective vectors without filtering.
    pub fn from_objectives(objectives: Vec<Vec<f64>>) -> Self {
        Self::new(
            objectives
                .into_iter()
                .map(|o| FrontPoint {
                    objectives: o,
                    input: None,
                })
                .collect(),
            0.0,
        )
    }

    pub fn points(&self) -> &[FrontPoint] {
        &self.points
    }

    pub fn tolerance(&self) -> f64 {
        self.tolerance
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn objectives(&self) -> impl Iterator<Item = &[f64]> {
        self.points.iter().map(|p| p.objectives.as_slice())
    }
}

/// `q` beats `p` by at least `eps` everywhere and by more than `eps` somewhere.
/// With `eps = 0` this is ordinary Pareto dominance.
pub(crate) fn eps_dominates(q: &[f64], p: &[f64], eps: f64) -> bool {
    let mut strict = false;
    for (a, b) in q.iter().zip(p) {
        let t = b + eps;
        if *a < t {
            return false;
        }
        if *a > t {
            strict = true;
        }
    }
    strict
}

fn keep_mask_pairwise(values: &[Vec<f64>], eps: f64) -> Vec<bool> {
    values
        .iter()
        .enumerate()
        .map(|(i, p)| {
            !values
                .iter()
                .enumerate()
                .any(|(j, q)| i != j && eps_dominates(q, p, eps))
        })
        .collect()
}

/// Two-objective sweep, `O(n log n)`.
fn keep_mask_two(values: &[Vec<f64>], eps: f64) -> Vec<bool> {
    let n = values.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| {
        values[b][0]
            .total_cmp(&values[a][0])
            .then(values[b][1].total_cmp(&values[a][1]))
    });
    let s1: Vec<f64> = order.iter().map(|&i| values[i][0]).collect();
    let s2: Vec<f64> = order.iter().map(|&i| values[i][1]).collect();
    let mut prefmax = Vec::with_capacity(n);
    let mut m = f64::NEG_INFINITY;
    for v in &s2 {
        m = m.max(*v);
        prefmax.push(m);
    }
    values
        .iter()
        .map(|p| {
            let t1 = p[0] + eps;
            let t2 = p[1] + eps;
            // s1 is descending
            let gt = s1.partition_point(|v| *v > t1);
            let ge = s1.partition_point(|v| *v >= t1);
            if gt > 0 && prefmax[gt - 1] >= t2 {
                return false;
            }
            // ties on the first objective: the group's first entry has the largest second value
            !(ge > gt && s2[gt] > t2)
        })
        .collect()
}

/// Non-dominated subset of `points`, keeping input order.
pub fn pareto_front(points: &[Vec<f64>], tolerance: f64) -> ParetoFront {
    pareto_front_with_inputs(points, None, tolerance)
}

pub fn pareto_front_with_inputs(
    points: &[Vec<f64>],
    inputs: Option<&[Point]>,
    tolerance: f64,
) -> ParetoFront {
    let tolerance = tolerance.max(0.0);
    let k = points.first().map_or(0, Vec::len);
    let mask = if k == 2 {
        keep_mask_two(points, tolerance)
    } else {
        keep_mask_pairwise(points, tolerance)
    };
    let kept = points
        .iter()
        .enumerate()
        .filter(|(i, _)| mask[*i])
        .map(|(i, p)| FrontPoint {
            objectives: p.clone(),
            input: inputs.map(|xs| xs[i].clone()),
        })
        .collect();
    ParetoFront::new(kept, tolerance)
}

/// Writes `f1..fK` then `x1..xd` columns.
pub fn write_front_csv(front: &ParetoFront, mut w: impl Write) -> Result<()> {
    let Some(first) = front.points.first() else {
        return Err(Error::EmptyFront);
    };
    let k = first.objectives.len();
    let d = first.input.as_ref().map_or(0, Vec::len);
    let mut header: Vec<String> = (1..=k).map(|i| format!("f{i}")).collect();
    header.extend((1..=d).map(|i| format!("x{i}")));
    writeln!(w, "{}", header.join(","))?;
    for p in &front.points {
        let mut row: Vec<String> = p.objectives.iter().map(|v| v.to_string()).collect();
        if let Some(x) = &p.input {
            row.extend(x.iter().map(|v| v.to_string()));
        }
        writeln!(w, "{}", row.join(","))?;
    }
    Ok(())
}

/// Reads a front written by [`write_front_csv`] (or any CSV whose header
/// names objective columns `f*` and input columns `x*`). No filtering is applied.
pub fn read_front_csv(path: impl AsRef<Path>) -> Result<ParetoFront> {
    let file = std::fs::File::open(path.as_ref())?;
    let mut lines = std::io::BufReader::new(file).lines();
    let header = lines
        .next()
        .ok_or_else(|| Error::InvalidInput("front CSV is empty".into()))??;
    let cols: Vec<&str> = header.split(',').map(str::trim).collect();
    let k = cols.iter().filter(|c| c.starts_with('f')).count();
    let d = cols.iter().filter(|c| c.starts_with('x')).count();
    if k == 0 || k + d != cols.len() {
        return Err(Error::InvalidInput(format!(
            "unrecognised front header {header:?}"
        )));
    }
    let mut points = Vec::new();
    for (lineno, line) in lines.enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let vals: Vec<f64> = line
            .split(',')
            .map(|s| s.trim().parse::<f64>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| Error::InvalidInput(format!("line {}: {e}", lineno + 2)))?;
        if vals.len() != k + d {
            return Err(Error::InvalidInput(format!(
                "line {}: expected {} columns, got {}",
                lineno + 2,
                k + d,
                vals.len()
            )));
        }
        points.push(FrontPoint {
            objectives: vals[..k].to_vec(),
            input: (d > 0).then(|| vals[k..].to_vec()),
        });
    }
    Ok(ParetoFront::new(points, 0.0))
}
