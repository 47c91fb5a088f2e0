//! JSON file formats for matrices, sequences, functionals and decompositions.
//!
//! Matrix: `{"dim": n, "real": [[..]], "imag": [[..]]}`, row-major, `imag`
//! optional. Sequence: `{"prefix": [..], "tail": {..} | null}`. Functional:
//! `{"kind": "matrix" | "sequence", "rep": .., "label": ..}`.

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::ell1::L1Sequence;
use crate::engine::{IterationTrace, LebesgueDecomposition, UniquenessCertificate};
use crate::error::{Error, Result};
use crate::functional::{NormalFunctional, Rep};
use crate::psd::{CMatrix, HermitianMatrix, PsdMatrix, ToleranceConfig, C64};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MatrixJson {
    pub dim: usize,
    pub real: Vec<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub imag: Option<Vec<Vec<f64>>>,
}

fn check_shape(rows: &[Vec<f64>], dim: usize, field: &str) -> Result<()> {
    if rows.len() != dim {
        return Err(Error::Parse(format!(
            "\"{field}\" has {} rows but \"dim\" is {dim}",
            rows.len()
        )));
    }
    let widths: Vec<usize> = rows.iter().map(Vec::len).collect();
    if let Some(&w) = widths.first() {
        if widths.iter().all(|&x| x == w) && w != dim {
            return Err(Error::NotSquare { rows: dim, cols: w });
        }
    }
    if let Some((row, &len)) = widths.iter().enumerate().find(|(_, &x)| x != dim) {
        return Err(Error::Ragged { row, len, expected: dim });
    }
    Ok(())
}

impl MatrixJson {
    pub fn from_matrix(m: &CMatrix) -> Self {
        let n = m.nrows();
        let real = (0..n).map(|i| (0..n).map(|j| m[(i, j)].re).collect()).collect();
        let has_imag = m.iter().any(|z| z.im != 0.0);
        let imag = has_imag.then(|| (0..n).map(|i| (0..n).map(|j| m[(i, j)].im).collect()).collect());
        Self { dim: n, real, imag }
    }

    pub fn to_matrix(&self) -> Result<CMatrix> {
        check_shape(&self.real, self.dim, "real")?;
        if let Some(im) = &self.imag {
            check_shape(im, self.dim, "imag")?;
        }
        Ok(CMatrix::from_fn(self.dim, self.dim, |i, j| {
            C64::new(
                self.real[i][j],
                self.imag.as_ref().map_or(0.0, |im| im[i][j]),
            )
        }))
    }
}

pub fn parse_matrix(text: &str) -> Result<CMatrix> {
    serde_json::from_str::<MatrixJson>(text)?.to_matrix()
}

pub fn parse_hermitian(text: &str) -> Result<HermitianMatrix> {
    HermitianMatrix::new(parse_matrix(text)?)
}

pub fn parse_psd(text: &str, cfg: &ToleranceConfig) -> Result<PsdMatrix> {
    PsdMatrix::from_matrix(parse_matrix(text)?, cfg)
}

pub fn parse_sequence(text: &str) -> Result<L1Sequence> {
    Ok(serde_json::from_str(text)?)
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FunctionalJson {
    pub kind: String,
    pub rep: Value,
    #[serde(default)]
    pub label: Option<String>,
}

impl FunctionalJson {
    pub fn from_functional(f: &NormalFunctional) -> Self {
        let rep = match f.rep() {
            Rep::Matrix(t) => serde_json::to_value(MatrixJson::from_matrix(t.matrix())),
            Rep::Sequence(t) => serde_json::to_value(t),
        }
        .expect("plain data serialises");
        Self {
            kind: f.kind().to_string(),
            rep,
            label: f.label().map(str::to_string),
        }
    }
}

fn rep_from_value(kind: &str, rep: Value, cfg: &ToleranceConfig) -> Result<Rep> {
    match kind {
        "matrix" => {
            let m: MatrixJson = serde_json::from_value(rep)?;
            Ok(Rep::Matrix(PsdMatrix::from_matrix(m.to_matrix()?, cfg)?))
        }
        "sequence" => Ok(Rep::Sequence(serde_json::from_value(rep)?)),
        other => Err(Error::Parse(format!(
            "unknown functional kind \"{other}\" (expected \"matrix\" or \"sequence\")"
        ))),
    }
}

/// Reads a functional file, or a bare matrix or sequence file standing for
/// the functional it represents.
pub fn parse_functional(text: &str, cfg: &ToleranceConfig) -> Result<NormalFunctional> {
    let value: Value = serde_json::from_str(text)?;
    let Value::Object(obj) = &value else {
        return Err(Error::Parse("expected a JSON object".into()));
    };
    if obj.contains_key("kind") {
        let fj: FunctionalJson = serde_json::from_value(value)?;
        let rep = rep_from_value(&fj.kind, fj.rep, cfg)?;
        Ok(NormalFunctional::new(rep, fj.label))
    } else if obj.contains_key("prefix") {
        Ok(NormalFunctional::new(rep_from_value("sequence", value, cfg)?, None))
    } else if obj.contains_key("real") || obj.contains_key("dim") {
        Ok(NormalFunctional::new(rep_from_value("matrix", value, cfg)?, None))
    } else {
        Err(Error::Parse(
            "not a matrix, sequence or functional document (no \"dim\", \"prefix\" or \"kind\" field)".into(),
        ))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IterationJson {
    pub k: u32,
    pub gap: f64,
}

/// Either parts as matrices or, for sequence inputs, as sequences.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum OperatorJson {
    Matrix(MatrixJson),
    Sequence(L1Sequence),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DecompositionJson {
    pub ac: OperatorJson,
    pub sing: OperatorJson,
    pub unique: bool,
    pub c: Option<f64>,
    pub iterations: Vec<IterationJson>,
}

pub fn iterations_json(trace: &IterationTrace) -> Vec<IterationJson> {
    trace
        .steps
        .iter()
        .map(|s| IterationJson { k: s.k, gap: s.gap })
        .collect()
}

impl DecompositionJson {
    pub fn from_matrices(dec: &LebesgueDecomposition, cert: &UniquenessCertificate) -> Self {
        Self {
            ac: OperatorJson::Matrix(MatrixJson::from_matrix(dec.ac.matrix())),
            sing: OperatorJson::Matrix(MatrixJson::from_matrix(dec.sing.matrix())),
            unique: cert.unique,
            c: cert.c,
            iterations: iterations_json(&dec.iteration),
        }
    }

    pub fn from_sequences(ac: &L1Sequence, sing: &L1Sequence, cert: &UniquenessCertificate) -> Self {
        Self {
            ac: OperatorJson::Sequence(ac.clone()),
            sing: OperatorJson::Sequence(sing.clone()),
            unique: cert.unique,
            c: cert.c,
            iterations: Vec::new(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn matrix_round_trip() {
        let text = r#"{"dim": 2, "real": [[1, 0.5], [0.5, 2]], "imag": [[0, 0.25], [-0.25, 0]]}"#;
        let m = parse_matrix(text).unwrap();
        assert_eq!(m[(0, 1)], C64::new(0.5, 0.25));
        let back = MatrixJson::from_matrix(&m);
        assert_eq!(back.to_matrix().unwrap(), m);
        let real_only = MatrixJson::from_matrix(&parse_matrix(r#"{"dim":1,"real":[[3]]}"#).unwrap());
        assert_eq!(serde_json::to_string(&real_only).unwrap(), r#"{"dim":1,"real":[[3.0]]}"#);
    }

    #[test]
    fn shape_errors() {
        assert!(matches!(
            parse_matrix(r#"{"dim": 2, "real": [[1, 2, 3], [4, 5, 6]]}"#),
            Err(Error::NotSquare { rows: 2, cols: 3 })
        ));
        assert!(matches!(
            parse_matrix(r#"{"dim": 2, "real": [[1, 2], [4]]}"#),
            Err(Error::Ragged { row: 1, len: 1, expected: 2 })
        ));
        assert!(matches!(parse_matrix(r#"{"dim": 3, "real": [[1]]}"#), Err(Error::Parse(_))));
        assert!(matches!(parse_matrix("{"), Err(Error::Parse(_))));
        assert!(matches!(
            parse_hermitian(r#"{"dim": 2, "real": [[1, 2], [0, 1]]}"#),
            Err(Error::NotHermitian { .. })
        ));
    }

    #[test]
    fn functional_shapes() {
        let cfg = ToleranceConfig::default();
        let f = parse_functional(r#"{"kind":"matrix","rep":{"dim":1,"real":[[2]]},"label":"f"}"#, &cfg).unwrap();
        assert_eq!(f.label(), Some("f"));
        let g = parse_functional(r#"{"prefix":[1],"tail":null}"#, &cfg).unwrap();
        assert_eq!(g.kind(), "sequence");
        let h = parse_functional(r#"{"dim":1,"real":[[1]]}"#, &cfg).unwrap();
        assert_eq!(h.kind(), "matrix");
        assert!(parse_functional(r#"{"kind":"tensor","rep":{}}"#, &cfg).is_err());
        assert!(parse_functional("[1]", &cfg).is_err());
        let js = FunctionalJson::from_functional(&f);
        assert_eq!(js.kind, "matrix");
    }
}
