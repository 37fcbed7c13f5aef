//! Metric charts: a symmetric 3×3 field of coordinate expressions, the
//! built-in catalog, and the key/value metric document format.

use std::collections::BTreeMap;

use thiserror::Error;

use crate::expr::{parse_expr, Expr, ParseError};
use crate::jets::JetError;
use crate::tensor::{self, Mat3};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MetricError {
    #[error("line {line}: {source}")]
    Expression {
        line: usize,
        #[source]
        source: ParseError,
    },
    #[error("line {line}: malformed entry, expected key = \"expression\"")]
    Malformed { line: usize },
    #[error("line {line}: unknown key `{key}`")]
    UnknownKey { line: usize, key: String },
    #[error("line {line}: duplicate key `{key}`")]
    DuplicateKey { line: usize, key: String },
    #[error("component g{i}{j} disagrees with g{j}{i}")]
    Asymmetric { i: usize, j: usize },
    #[error("unknown catalog metric `{0}`")]
    UnknownMetric(String),
    #[error("warped_template needs a warp function, e.g. `warped_template:1 + x^2`")]
    MissingWarp,
    #[error("warp function: {0}")]
    Warp(ParseError),
    #[error("point {point:?} violates the chart's domain guard")]
    GuardViolation { point: [f64; 3] },
    #[error("metric is not positive definite at {point:?}")]
    NotPositiveDefinite { point: [f64; 3] },
    #[error("metric jets could not be inverted at {point:?}")]
    SingularInverse { point: [f64; 3] },
    #[error(transparent)]
    Jet(#[from] JetError),
}

/// A global coordinate chart carrying the six independent metric components.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricChart {
    pub name: String,
    /// Upper triangle in the order g11, g12, g13, g22, g23, g33.
    upper: [Expr; 6],
    /// Each guard must evaluate strictly positive for a point to be valid.
    pub guards: Vec<Expr>,
}

/// Position of `g_ij` in the packed upper triangle.
pub const fn packed_index(i: usize, j: usize) -> usize {
    let (a, b) = if i <= j { (i, j) } else { (j, i) };
    match (a, b) {
        (0, 0) => 0,
        (0, 1) => 1,
        (0, 2) => 2,
        (1, 1) => 3,
        (1, 2) => 4,
        _ => 5,
    }
}

const KEYS: [(&str, usize, usize); 9] = [
    ("g11", 0, 0),
    ("g12", 0, 1),
    ("g13", 0, 2),
    ("g22", 1, 1),
    ("g23", 1, 2),
    ("g33", 2, 2),
    ("g21", 1, 0),
    ("g31", 2, 0),
    ("g32", 2, 1),
];

impl MetricChart {
    pub fn new(name: impl Into<String>, upper: [Expr; 6], guards: Vec<Expr>) -> Self {
        MetricChart { name: name.into(), upper, guards }
    }

    pub fn flat() -> Self {
        let one = || Expr::Num(1.0);
        let zero = || Expr::Num(0.0);
        Self::new("flat", [one(), zero(), zero(), one(), zero(), one()], Vec::new())
    }

    /// `diag(1, 1, f²)`.
    pub fn warped(name: impl Into<String>, warp: Expr) -> Self {
        let mut chart = Self::flat();
        chart.name = name.into();
        chart.upper[5] = Expr::Pow(Box::new(warp), 2);
        chart
    }

    pub fn component(&self, i: usize, j: usize) -> &Expr {
        &self.upper[packed_index(i, j)]
    }

    pub fn upper(&self) -> &[Expr; 6] {
        &self.upper
    }

    pub fn guard_holds(&self, p: [f64; 3]) -> bool {
        self.guards.iter().all(|g| g.eval(p) > 0.0)
    }

    /// Point values of `g_ij`. Checks the guard and positive definiteness.
    pub fn eval(&self, p: [f64; 3]) -> Result<Mat3, MetricError> {
        if !self.guard_holds(p) {
            return Err(MetricError::GuardViolation { point: p });
        }
        let mut g = [[0.0; 3]; 3];
        for i in 0..3 {
            for j in 0..3 {
                g[i][j] = self.component(i, j).eval(p);
            }
        }
        if !tensor::is_positive_definite(&g) {
            return Err(MetricError::NotPositiveDefinite { point: p });
        }
        Ok(g)
    }
}

/// Built-in charts: `flat`, `gv_example`, `round_sphere`, and
/// `warped_template:<f>` for `diag(1, 1, f²)`.
pub fn catalog_metric(name: &str) -> Result<MetricChart, MetricError> {
    if let Some(rest) = name.strip_prefix("warped_template") {
        let warp = rest.strip_prefix(':').ok_or(MetricError::MissingWarp)?;
        let f = parse_expr(warp).map_err(MetricError::Warp)?;
        return Ok(MetricChart::warped("warped_template", f));
    }
    let parse = |s: &str| parse_expr(s).expect("catalog expression");
    match name {
        "flat" => Ok(MetricChart::flat()),
        "gv_example" => Ok(MetricChart::warped("gv_example", parse("1 + x^2 + y^2"))),
        "round_sphere" => {
            let zero = || Expr::Num(0.0);
            Ok(MetricChart::new(
                "round_sphere",
                [
                    Expr::Num(1.0),
                    zero(),
                    zero(),
                    parse("sin(x)^2"),
                    zero(),
                    parse("sin(x)^2*sin(y)^2"),
                ],
                vec![parse("sin(x) - 0.1"), parse("sin(y) - 0.1")],
            ))
        }
        _ => Err(MetricError::UnknownMetric(name.to_string())),
    }
}

/// Parses a metric document: `key = "expression"` lines, `#` comments.
///
/// Missing diagonal components default to `1`, missing off-diagonal ones to
/// `0`. A lower-triangle key (`g21`) is accepted when it agrees structurally
/// with its mirror.
pub fn load_metric_spec(document: &str) -> Result<MetricChart, MetricError> {
    let mut seen: BTreeMap<String, usize> = BTreeMap::new();
    let mut comps: [Option<(Expr, usize, usize)>; 6] = Default::default();
    let mut name = String::from("custom");
    let mut guards = Vec::new();

    for (idx, raw) in document.lines().enumerate() {
        let line = idx + 1;
        let text = strip_comment(raw).trim();
        if text.is_empty() {
            continue;
        }
        let (key, value) = text.split_once('=').ok_or(MetricError::Malformed { line })?;
        let key = key.trim();
        let value = value.trim();
        let value = value
            .strip_prefix('"')
            .and_then(|v| v.strip_suffix('"'))
            .ok_or(MetricError::Malformed { line })?;
        if seen.insert(key.to_string(), line).is_some() {
            return Err(MetricError::DuplicateKey { line, key: key.to_string() });
        }
        let parse = |s: &str| parse_expr(s).map_err(|source| MetricError::Expression { line, source });
        match key {
            "name" => name = value.to_string(),
            "guard" => guards.push(parse(value)?),
            _ => {
                let Some(&(_, i, j)) = KEYS.iter().find(|(k, _, _)| *k == key) else {
                    return Err(MetricError::UnknownKey { line, key: key.to_string() });
                };
                let e = parse(value)?;
                let slot = &mut comps[packed_index(i, j)];
                match slot {
                    Some((prev, pi, pj)) if *prev != e => {
                        return Err(MetricError::Asymmetric { i: *pi + 1, j: *pj + 1 });
                    }
                    Some(_) => {}
                    None => *slot = Some((e, i, j)),
                }
            }
        }
    }

    let mut chart = MetricChart::flat();
    chart.name = name;
    chart.guards = guards;
    for (k, c) in comps.into_iter().enumerate() {
        if let Some((e, _, _)) = c {
            chart.upper[k] = e;
        }
    }
    Ok(chart)
}

fn strip_comment(line: &str) -> &str {
    // `#` never occurs inside expressions, so the first one starts a comment
    line.split_once('#').map_or(line, |(head, _)| head)
}
