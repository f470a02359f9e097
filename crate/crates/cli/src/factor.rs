use std::path::Path;

use clap::ValueEnum;
use serde_json::Value;
use toda_core::factor::{gram_schmidt_qr, in_cell_c, in_cell_d, ldu, principal_minors, ql_kla, relative_minors};
use toda_core::{CMatrix, Tolerance};

use crate::doc::{complex_list, emit_json, matrix, num, object, read_matrix};
use crate::error::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Kind {
    Qr,
    Kla,
    Ldu,
    Minors,
    #[value(name = "cellC")]
    CellC,
    #[value(name = "cellD")]
    CellD,
}

impl Kind {
    fn name(self) -> &'static str {
        match self {
            Kind::Qr => "qr",
            Kind::Kla => "kla",
            Kind::Ldu => "ldu",
            Kind::Minors => "minors",
            Kind::CellC => "cellC",
            Kind::CellD => "cellD",
        }
    }
}

fn relative_residual(g: &CMatrix, product: &CMatrix) -> f64 {
    g.dist(product) / g.frobenius().max(f64::MIN_POSITIVE)
}

fn factors_doc(kind: Kind, names: &[&str], factors: &[CMatrix], g: &CMatrix, product: &CMatrix, roles: bool) -> Value {
    let f = names.iter().zip(factors).map(|(n, m)| (n.to_string(), matrix(m))).collect();
    object([
        ("kind", Value::from(kind.name())),
        ("factors", Value::Object(f)),
        ("residual", num(relative_residual(g, product))),
        ("roles_hold", Value::from(roles)),
    ])
}

/// Returns `Ok(true)` unless a factorization fails; predicates that come out false still succeed.
pub fn run(kind: Kind, input: &Path, tol: Tolerance, out: Option<&Path>) -> Result<bool, CliError> {
    let g = read_matrix(input)?;
    let doc = match kind {
        Kind::Qr => {
            let fp = gram_schmidt_qr(&g).map_err(CliError::compute)?;
            let roles = fp.roles_hold(&tol);
            factors_doc(kind, &["k", "u"], &fp.factors, &g, &fp.product(), roles)
        }
        Kind::Kla => {
            let ft = ql_kla(&g).map_err(CliError::compute)?;
            let roles = ft.roles_hold(&tol);
            factors_doc(kind, &["k", "l", "a"], &ft.factors, &g, &ft.product(), roles)
        }
        Kind::Ldu => {
            let ft = ldu(&g, &tol).map_err(CliError::compute)?;
            let roles = ft.roles_hold(&tol);
            factors_doc(kind, &["l", "d", "u"], &ft.factors, &g, &ft.product(), roles)
        }
        Kind::Minors => object([
            ("kind", Value::from(kind.name())),
            ("minors", complex_list(&principal_minors(&g))),
            ("relative", Value::Array(relative_minors(&g).into_iter().map(num).collect())),
        ]),
        Kind::CellC => object([("kind", Value::from(kind.name())), ("member", Value::from(in_cell_c(&g, &tol)))]),
        Kind::CellD => {
            let member = in_cell_d(&g, &tol).map_err(CliError::compute)?;
            object([("kind", Value::from(kind.name())), ("member", Value::from(member))])
        }
    };
    emit_json(&doc, out)?;
    Ok(true)
}
