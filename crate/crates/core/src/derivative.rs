//! Program derivative: how far outputs move per unit of input movement.
//! A large value between neighbouring inputs hints at a behavioural boundary.

use std::io;

use thiserror::Error;

use crate::minipy::{CallOutcome, Machine, Program, Value};

#[derive(Debug, Error, PartialEq)]
pub enum DerivativeError {
    #[error("input distance is zero; the two inputs must differ")]
    ZeroInputDistance,
    #[error("distance {kind:?} cannot compare {a} with {b}")]
    Incomparable {
        kind: DistanceKind,
        a: &'static str,
        b: &'static str,
    },
    #[error("vectors differ in length ({0} vs {1})")]
    LengthMismatch(usize, usize),
    #[error("axis {name:?}: {msg}")]
    Axis { name: String, msg: String },
    #[error("both axes vary {0:?}")]
    SameParameter(String),
    #[error("no method {0:?} in class")]
    UnknownMethod(String),
    #[error("method {name:?} takes {expected} argument(s), got {got}")]
    MethodArity {
        name: String,
        expected: usize,
        got: usize,
    },
    #[error("constructor takes {expected} argument(s), got {got}")]
    ConstructorArity { expected: usize, got: usize },
}

/// Levenshtein distance over Unicode scalar values.
pub fn edit_distance(a: &str, b: &str) -> usize {
    let a: Vec<char> = a.chars().collect();
    let b: Vec<char> = b.chars().collect();
    let mut prev: Vec<usize> = (0..=b.len()).collect();
    let mut cur = vec![0; b.len() + 1];
    for (i, ca) in a.iter().enumerate() {
        cur[0] = i + 1;
        for (j, cb) in b.iter().enumerate() {
            let replace = prev[j] + usize::from(ca != cb);
            cur[j + 1] = replace.min(prev[j + 1] + 1).min(cur[j] + 1);
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    prev[b.len()]
}

#[derive(Debug, Clone, PartialEq)]
pub enum Datum {
    Text(String),
    Scalar(f64),
    Vector(Vec<f64>),
}

impl Datum {
    fn kind_name(&self) -> &'static str {
        match self {
            Datum::Text(_) => "text",
            Datum::Scalar(_) => "scalar",
            Datum::Vector(_) => "vector",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DistanceKind {
    EditDistance,
    AbsoluteNumeric,
    Euclidean,
}

impl DistanceKind {
    pub fn distance(self, a: &Datum, b: &Datum) -> Result<f64, DerivativeError> {
        match (self, a, b) {
            (DistanceKind::EditDistance, Datum::Text(x), Datum::Text(y)) => {
                Ok(edit_distance(x, y) as f64)
            }
            (DistanceKind::AbsoluteNumeric, Datum::Scalar(x), Datum::Scalar(y)) => Ok((x - y).abs()),
            (DistanceKind::Euclidean, Datum::Vector(x), Datum::Vector(y)) => {
                if x.len() != y.len() {
                    return Err(DerivativeError::LengthMismatch(x.len(), y.len()));
                }
                Ok(x.iter().zip(y).map(|(p, q)| (p - q).powi(2)).sum::<f64>().sqrt())
            }
            _ => Err(DerivativeError::Incomparable {
                kind: self,
                a: a.kind_name(),
                b: b.kind_name(),
            }),
        }
    }
}

/// Output distance divided by input distance.
pub fn program_derivative(d_in: f64, d_out: f64) -> Result<f64, DerivativeError> {
    if d_in <= 0.0 {
        return Err(DerivativeError::ZeroInputDistance);
    }
    Ok(d_out / d_in)
}

/// One adjacent pair of grid points, as `(x, y)` coordinates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DerivativePoint {
    pub input_a: (i64, i64),
    pub input_b: (i64, i64),
    pub d_in: f64,
    pub d_out: f64,
    pub pd: f64,
}

/// What a scan axis varies.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum AxisTarget {
    /// Positional constructor argument.
    Constructor(usize),
    /// Attribute assigned after construction (through its setter, if any).
    Attribute(String),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Axis {
    pub name: String,
    pub target: AxisTarget,
    pub start: i64,
    /// Inclusive.
    pub end: i64,
    pub step: i64,
}

impl Axis {
    pub fn values(&self) -> Result<Vec<i64>, DerivativeError> {
        let err = |msg: &str| DerivativeError::Axis {
            name: self.name.clone(),
            msg: msg.to_string(),
        };
        if self.step <= 0 {
            return Err(err("step must be positive"));
        }
        if self.end < self.start {
            return Err(err("range end is below its start"));
        }
        let mut out = Vec::new();
        let mut v = self.start;
        while v <= self.end {
            out.push(v);
            match v.checked_add(self.step) {
                Some(n) => v = n,
                None => break,
            }
        }
        if out.len() < 2 {
            return Err(err("needs at least 2 points"));
        }
        Ok(out)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ScanSpec {
    pub method: String,
    pub method_args: Vec<i64>,
    /// Base constructor arguments; axis values override their slot.
    pub constructor_args: Vec<i64>,
    pub x: Axis,
    pub y: Axis,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScanCell {
    pub x: i64,
    pub y: i64,
    pub output: String,
    /// Towards the next x in the same row; `None` on the last column.
    pub pd_right: Option<DerivativePoint>,
    /// Towards the next y in the same column; `None` on the last row.
    pub pd_up: Option<DerivativePoint>,
}

/// Cells in row-major order: y outer, x inner, both ascending.
#[derive(Debug, Clone, PartialEq)]
pub struct ScanGrid {
    pub xs: Vec<i64>,
    pub ys: Vec<i64>,
    pub cells: Vec<ScanCell>,
}

impl ScanGrid {
    pub fn cell(&self, xi: usize, yi: usize) -> &ScanCell {
        &self.cells[yi * self.xs.len() + xi]
    }
}

fn run_point(program: &Program, spec: &ScanSpec, x: i64, y: i64) -> String {
    let mut ctor = spec.constructor_args.clone();
    let mut assigns = Vec::new();
    for (axis, v) in [(&spec.x, x), (&spec.y, y)] {
        match &axis.target {
            AxisTarget::Constructor(i) => ctor[*i] = v,
            AxisTarget::Attribute(attr) => assigns.push((attr.as_str(), v)),
        }
    }
    let mut machine = Machine::new(program);
    let ints = |xs: &[i64]| xs.iter().map(|&v| Value::Int(v)).collect::<Vec<_>>();
    let mut obj = match machine.construct(ints(&ctor)) {
        Ok(o) => o,
        Err(e) => return CallOutcome::Raised(e).render(),
    };
    for (attr, v) in assigns {
        if let Err(e) = machine.assign(&mut obj, attr, Value::Int(v)) {
            return CallOutcome::Raised(e).render();
        }
    }
    match machine.call(&mut obj, &spec.method, ints(&spec.method_args)) {
        Ok(v) => CallOutcome::Returned(v).render(),
        Err(e) => CallOutcome::Raised(e).render(),
    }
}

fn pair(a: (i64, i64), b: (i64, i64), da: i64, db: i64, out_a: &str, out_b: &str) -> DerivativePoint {
    let d_in = DistanceKind::AbsoluteNumeric
        .distance(&Datum::Scalar(da as f64), &Datum::Scalar(db as f64))
        .expect("scalars are comparable");
    let d_out = edit_distance(out_a, out_b) as f64;
    let pd = program_derivative(d_in, d_out).expect("axis values are strictly increasing");
    DerivativePoint {
        input_a: a,
        input_b: b,
        d_in,
        d_out,
        pd,
    }
}

/// Evaluates `spec.method` at every grid point and the derivative between
/// each point and its right and upper neighbours. Outputs are compared as
/// text; a raised error contributes its message.
pub fn boundary_scan(program: &Program, spec: &ScanSpec) -> Result<ScanGrid, DerivativeError> {
    let ctor_len = program.constructor.params.len();
    if spec.constructor_args.len() != ctor_len {
        return Err(DerivativeError::ConstructorArity {
            expected: ctor_len,
            got: spec.constructor_args.len(),
        });
    }
    let method = program
        .method(&spec.method)
        .ok_or_else(|| DerivativeError::UnknownMethod(spec.method.clone()))?;
    if method.params.len() != spec.method_args.len() {
        return Err(DerivativeError::MethodArity {
            name: spec.method.clone(),
            expected: method.params.len(),
            got: spec.method_args.len(),
        });
    }
    if spec.x.target == spec.y.target {
        return Err(DerivativeError::SameParameter(spec.x.name.clone()));
    }
    for axis in [&spec.x, &spec.y] {
        if let AxisTarget::Constructor(i) = axis.target {
            if i >= ctor_len {
                return Err(DerivativeError::Axis {
                    name: axis.name.clone(),
                    msg: format!("constructor has only {ctor_len} parameter(s)"),
                });
            }
        }
    }
    let xs = spec.x.values()?;
    let ys = spec.y.values()?;

    let outputs: Vec<String> = ys
        .iter()
        .flat_map(|&y| xs.iter().map(move |&x| (x, y)))
        .map(|(x, y)| run_point(program, spec, x, y))
        .collect();

    let w = xs.len();
    let mut cells = Vec::with_capacity(outputs.len());
    for (yi, &y) in ys.iter().enumerate() {
        for (xi, &x) in xs.iter().enumerate() {
            let here = &outputs[yi * w + xi];
            let pd_right = xs.get(xi + 1).map(|&nx| {
                pair((x, y), (nx, y), x, nx, here, &outputs[yi * w + xi + 1])
            });
            let pd_up = ys.get(yi + 1).map(|&ny| {
                pair((x, y), (x, ny), y, ny, here, &outputs[(yi + 1) * w + xi])
            });
            cells.push(ScanCell {
                x,
                y,
                output: here.clone(),
                pd_right,
                pd_up,
            });
        }
    }
    Ok(ScanGrid { xs, ys, cells })
}

pub const SCAN_HEADER: &str = "x,y,output,pd_right,pd_up";

pub fn write_scan_csv<W: io::Write>(grid: &ScanGrid, out: W) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(SCAN_HEADER.split(','))?;
    let fmt = |p: &Option<DerivativePoint>| p.map(|p| p.pd.to_string()).unwrap_or_default();
    for c in &grid.cells {
        w.write_record([
            c.x.to_string(),
            c.y.to_string(),
            c.output.clone(),
            fmt(&c.pd_right),
            fmt(&c.pd_up),
        ])?;
    }
    w.flush()?;
    Ok(())
}
