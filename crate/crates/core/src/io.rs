//! JSON operator files and state specifications for the command line.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::bipartite::{BipartiteOperator, Dims};
use crate::error::{Error, Result};
use crate::linalg::{c, CMatrix};
use crate::states;

const ORDERING: &str = "row-major; joint index i*d_B + m with the A index outer";

/// On-disk form of an operator: split real and imaginary parts, row-major.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OperatorFile {
    pub dims: [usize; 2],
    pub re: Vec<Vec<f64>>,
    pub im: Vec<Vec<f64>>,
    #[serde(default)]
    pub meta: BTreeMap<String, Value>,
}

impl OperatorFile {
    pub fn from_operator(op: &BipartiteOperator, meta: BTreeMap<String, Value>) -> Self {
        let n = op.dim();
        let rows = |f: fn(&num_complex::Complex64) -> f64| -> Vec<Vec<f64>> {
            (0..n).map(|i| (0..n).map(|j| f(&op.matrix[(i, j)])).collect()).collect()
        };
        let mut meta = meta;
        meta.entry("ordering".into()).or_insert_with(|| Value::from(ORDERING));
        OperatorFile {
            dims: [op.dims.a, op.dims.b],
            re: rows(|z| z.re),
            im: rows(|z| z.im),
            meta,
        }
    }

    /// Checks shapes and Hermiticity.
    pub fn to_operator(&self) -> Result<BipartiteOperator> {
        let dims = Dims::new(self.dims[0], self.dims[1]);
        let n = dims.total();
        if n == 0 {
            return Err(Error::Parse("dims must be positive".into()));
        }
        for (name, part) in [("re", &self.re), ("im", &self.im)] {
            if part.len() != n || part.iter().any(|r| r.len() != n) {
                return Err(Error::Parse(format!("`{name}` must be a {n}x{n} array for dims {:?}", self.dims)));
            }
        }
        let matrix = CMatrix::from_fn(n, n, |i, j| c(self.re[i][j], self.im[i][j]));
        let op = BipartiteOperator::new(dims, matrix)?;
        op.hermitian().map_err(|e| Error::Parse(e.to_string()))?;
        Ok(op)
    }
}

/// Serializes `op`; the shortest round-trip decimal form of each entry
/// reproduces it bit for bit.
pub fn to_json(op: &BipartiteOperator, meta: BTreeMap<String, Value>) -> Result<String> {
    Ok(serde_json::to_string_pretty(&OperatorFile::from_operator(op, meta))?)
}

pub fn from_json(text: &str) -> Result<(BipartiteOperator, BTreeMap<String, Value>)> {
    let file: OperatorFile = serde_json::from_str(text)?;
    Ok((file.to_operator()?, file.meta))
}

pub fn write_operator(path: &Path, op: &BipartiteOperator, meta: BTreeMap<String, Value>) -> Result<()> {
    fs::write(path, to_json(op, meta)? + "\n").map_err(|e| Error::Io(format!("{}: {e}", path.display())))
}

pub fn read_operator(path: &Path) -> Result<(BipartiteOperator, BTreeMap<String, Value>)> {
    let text = fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    from_json(&text).map_err(|e| match e {
        Error::Parse(m) => Error::Parse(format!("{}: {m}", path.display())),
        other => other,
    })
}

/// Resolves `rho_b:<b>`, `rho_tilde:<b>` or a path to an operator file.
pub fn load_state(spec: &str) -> Result<BipartiteOperator> {
    let family = |prefix: &str| -> Option<Result<f64>> {
        spec.strip_prefix(prefix).map(|v| {
            v.trim()
                .parse::<f64>()
                .map_err(|e| Error::Parse(format!("bad parameter in `{spec}`: {e}")))
        })
    };
    if let Some(b) = family("rho_b:") {
        return states::rho_b(b?);
    }
    if let Some(b) = family("rho_tilde:") {
        return states::rho_tilde(b?);
    }
    Ok(read_operator(Path::new(spec))?.0)
}
