//! File formats: `MatrixDocument` JSON and trajectory CSV.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use serde::Deserialize;
use serde_json::{Map, Number, Value};
use toda_core::{CMatrix, ChartCenter, HierarchyPoly, Trajectory, C64};

use crate::error::CliError;

/// `{"n": 2, "entries": [[re, im], ...]}`, row-major.
#[derive(Debug, Clone, PartialEq, Deserialize)]
pub struct MatrixDocument {
    pub n: usize,
    pub entries: Vec<[f64; 2]>,
}

impl MatrixDocument {
    pub fn from_matrix(m: &CMatrix) -> Self {
        MatrixDocument { n: m.n(), entries: m.row_major().iter().map(|z| [z.re, z.im]).collect() }
    }

    pub fn to_matrix(&self) -> Result<CMatrix, CliError> {
        if self.n == 0 || self.entries.len() != self.n * self.n {
            return Err(CliError::Input(format!(
                "matrix document has n = {} but {} entries",
                self.n,
                self.entries.len()
            )));
        }
        let z: Vec<C64> = self.entries.iter().map(|e| C64::new(e[0], e[1])).collect();
        CMatrix::from_row_slice(self.n, &z).map_err(|e| CliError::Input(e.to_string()))
    }

    pub fn to_value(&self) -> Value {
        let mut m = Map::new();
        m.insert("n".into(), Value::from(self.n));
        m.insert("entries".into(), Value::Array(self.entries.iter().map(|e| pair(e[0], e[1])).collect()));
        Value::Object(m)
    }
}

/// A number with 17 significant digits; `null` when not finite.
pub fn num(x: f64) -> Value {
    if !x.is_finite() {
        return Value::Null;
    }
    format!("{x:.16e}").parse::<Number>().map(Value::Number).unwrap_or(Value::Null)
}

fn pair(re: f64, im: f64) -> Value {
    Value::Array(vec![num(re), num(im)])
}

pub fn complex(z: C64) -> Value {
    pair(z.re, z.im)
}

pub fn complex_list(zs: &[C64]) -> Value {
    Value::Array(zs.iter().map(|z| complex(*z)).collect())
}

pub fn matrix(m: &CMatrix) -> Value {
    MatrixDocument::from_matrix(m).to_value()
}

/// Builds a JSON object preserving key order.
pub fn object<const N: usize>(fields: [(&str, Value); N]) -> Value {
    Value::Object(fields.into_iter().map(|(k, v)| (k.to_string(), v)).collect())
}

pub fn read_json(path: &Path) -> Result<Value, CliError> {
    let text = fs::read_to_string(path).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))
}

pub fn matrix_from_value(v: &Value) -> Result<CMatrix, CliError> {
    let doc: MatrixDocument =
        serde_json::from_value(v.clone()).map_err(|e| CliError::Input(format!("bad matrix document: {e}")))?;
    doc.to_matrix()
}

pub fn read_matrix(path: &Path) -> Result<CMatrix, CliError> {
    matrix_from_value(&read_json(path)?)
}

pub fn complex_list_from_value(v: &Value) -> Result<Vec<C64>, CliError> {
    let pairs: Vec<[f64; 2]> =
        serde_json::from_value(v.clone()).map_err(|e| CliError::Input(format!("bad complex list: {e}")))?;
    Ok(pairs.into_iter().map(|p| C64::new(p[0], p[1])).collect())
}

/// Writes to `out`, or stdout when `None`.
pub fn emit(text: &str, out: Option<&Path>) -> Result<(), CliError> {
    match out {
        Some(p) => fs::write(p, text).map_err(|e| CliError::Input(format!("{}: {e}", p.display()))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

pub fn emit_json(v: &Value, out: Option<&Path>) -> Result<(), CliError> {
    let mut s = serde_json::to_string_pretty(v).expect("JSON values always serialize");
    s.push('\n');
    emit(&s, out)
}

/// Comma-separated complex numbers such as `1,-1` or `1+2i,-1-2i`.
pub fn parse_complex_list(s: &str) -> Result<Vec<C64>, CliError> {
    s.split(',')
        .map(|t| {
            let t = t.trim();
            t.parse::<C64>()
                .ok()
                .filter(|z| z.re.is_finite() && z.im.is_finite())
                .ok_or_else(|| CliError::Input(format!("cannot parse complex number '{t}'")))
        })
        .collect()
}

fn fmt_num(x: f64) -> String {
    format!("{x:.16e}")
}

fn fmt_complex(z: C64) -> String {
    format!("{}{:+.16e}i", fmt_num(z.re), z.im)
}

/// Trajectory CSV: `#` header lines, a label row, then one row per sample.
pub fn trajectory_csv(
    traj: &Trajectory,
    f: &HierarchyPoly,
    center: Option<&ChartCenter>,
    tolerances: &[(&str, f64)],
) -> String {
    let mut s = String::new();
    let n = traj.samples.first().map_or(0, |x| x.n());
    let coeffs: Vec<String> = f.coeffs().iter().map(|z| fmt_complex(*z)).collect();
    let _ = writeln!(s, "# method: {}", traj.method);
    let _ = writeln!(s, "# f: {}", coeffs.join(" "));
    match center {
        Some(ce) => {
            let l: Vec<String> = ce.lambda().iter().map(|z| fmt_complex(*z)).collect();
            let _ = writeln!(s, "# center: {}", l.join(" "));
        }
        None => {
            let _ = writeln!(s, "# center: none");
        }
    }
    let tol: Vec<String> = tolerances.iter().map(|(k, v)| format!("{k}={}", fmt_num(*v))).collect();
    let _ = writeln!(s, "# tolerances: {}", tol.join(" "));
    let mut labels = vec!["t".to_string()];
    for i in 1..=n {
        for j in 1..=n {
            labels.push(format!("re(X_{i}{j})"));
            labels.push(format!("im(X_{i}{j})"));
        }
    }
    labels.push("drift".into());
    let _ = writeln!(s, "{}", labels.join(","));
    for ((t, x), d) in traj.times.iter().zip(&traj.samples).zip(&traj.drift) {
        let mut row = vec![fmt_num(*t)];
        for z in x.row_major() {
            row.push(fmt_num(z.re));
            row.push(fmt_num(z.im));
        }
        row.push(fmt_num(*d));
        let _ = writeln!(s, "{}", row.join(","));
    }
    s
}
