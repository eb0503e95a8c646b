//! JSON problem file format.
//!
//! ```json
//! {
//!   "P": {"rows": 2, "cols": 2, "triplets": [[0, 0, 2.0], [1, 1, 2.0]]},
//!   "q": [1.0, -1.0],
//!   "G": {"rows": 0, "cols": 2, "triplets": []}, "h": [],
//!   "A": {"rows": 0, "cols": 2, "triplets": []}, "b": [],
//!   "l": [0, "-inf"], "u": [1, "inf"],
//!   "cones": [{"kind": "Nonnegative", "dim": 3}],
//!   "integer": [{"index": 0, "values": [0, 1]}]
//! }
//! ```
//!
//! `G`, `h`, `A`, `b`, `cones`, `integer` and `offset` may be omitted.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::{symmetric_upper, ConeSpec, ConicData, ConicProgram, IntegerVar, MicpProblem};
use crate::error::{Error, Result};
use crate::sparse::CscMatrix;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SparseJson {
    pub rows: usize,
    pub cols: usize,
    pub triplets: Vec<(usize, usize, f64)>,
}

impl SparseJson {
    fn to_csc(&self, what: &str) -> Result<CscMatrix> {
        if let Some(&(i, j, _)) = self.triplets.iter().find(|&&(i, j, _)| i >= self.rows || j >= self.cols) {
            return Err(Error::Parse(format!("{what} triplet ({i},{j}) outside {}x{}", self.rows, self.cols)));
        }
        Ok(CscMatrix::from_triplets(self.rows, self.cols, &self.triplets))
    }

    fn from_csc(m: &CscMatrix) -> Self {
        Self { rows: m.rows, cols: m.cols, triplets: m.triplets().collect() }
    }
}

/// A bound entry: a number, or `"inf"` / `"-inf"`.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum BoundJson {
    Num(f64),
    Str(String),
}

impl BoundJson {
    fn value(&self) -> Result<f64> {
        match self {
            Self::Num(v) => Ok(*v),
            Self::Str(s) => match s.trim() {
                "inf" | "+inf" | "Inf" | "Infinity" => Ok(f64::INFINITY),
                "-inf" | "-Inf" | "-Infinity" => Ok(f64::NEG_INFINITY),
                other => Err(Error::Parse(format!("bad bound literal {other:?}"))),
            },
        }
    }

    fn from_value(v: f64) -> Self {
        if v == f64::INFINITY {
            Self::Str("inf".into())
        } else if v == f64::NEG_INFINITY {
            Self::Str("-inf".into())
        } else {
            Self::Num(v)
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ProblemFile {
    #[serde(rename = "P")]
    pub p: SparseJson,
    pub q: Vec<f64>,
    #[serde(rename = "G", default, skip_serializing_if = "Option::is_none")]
    pub g: Option<SparseJson>,
    #[serde(default)]
    pub h: Vec<f64>,
    #[serde(rename = "A", default, skip_serializing_if = "Option::is_none")]
    pub a: Option<SparseJson>,
    #[serde(default)]
    pub b: Vec<f64>,
    pub l: Vec<BoundJson>,
    pub u: Vec<BoundJson>,
    #[serde(default)]
    pub cones: Vec<ConeSpec>,
    #[serde(default)]
    pub integer: Vec<IntegerVar>,
    #[serde(default, skip_serializing_if = "is_zero")]
    pub offset: f64,
}

fn is_zero(v: &f64) -> bool {
    *v == 0.0
}

impl ProblemFile {
    pub fn into_problem(self) -> Result<MicpProblem> {
        let n = self.q.len();
        let p = symmetric_upper(&self.p.to_csc("P")?)?;
        let g = match &self.g {
            Some(g) => g.to_csc("G")?,
            None => CscMatrix::zeros(0, n),
        };
        let a = match &self.a {
            Some(a) => a.to_csc("A")?,
            None => CscMatrix::zeros(0, n),
        };
        let l = self.l.iter().map(BoundJson::value).collect::<Result<Vec<_>>>()?;
        let u = self.u.iter().map(BoundJson::value).collect::<Result<Vec<_>>>()?;
        let relaxation = ConicProgram {
            data: Arc::new(ConicData {
                p,
                q: self.q,
                g,
                h: self.h,
                a,
                b: self.b,
                cones: self.cones,
                offset: self.offset,
            }),
            l,
            u,
        };
        let integers = self.integer.into_iter().map(|iv| IntegerVar::new(iv.index, iv.values)).collect();
        Ok(MicpProblem::new(relaxation, integers))
    }

    pub fn from_problem(problem: &MicpProblem) -> Self {
        let prog = &problem.relaxation;
        let d = &prog.data;
        Self {
            p: SparseJson::from_csc(&d.p),
            q: d.q.clone(),
            g: Some(SparseJson::from_csc(&d.g)),
            h: d.h.clone(),
            a: Some(SparseJson::from_csc(&d.a)),
            b: d.b.clone(),
            l: prog.l.iter().map(|&v| BoundJson::from_value(v)).collect(),
            u: prog.u.iter().map(|&v| BoundJson::from_value(v)).collect(),
            cones: d.cones.clone(),
            integer: problem.integers.clone(),
            offset: d.offset,
        }
    }
}

pub fn from_json_str(s: &str) -> Result<MicpProblem> {
    let file: ProblemFile = serde_json::from_str(s)?;
    file.into_problem()
}

pub fn to_json_string(problem: &MicpProblem) -> Result<String> {
    Ok(serde_json::to_string_pretty(&ProblemFile::from_problem(problem))?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problem::{validate, ConeKind};

    const TOY: &str = r#"{
        "P": {"rows": 1, "cols": 1, "triplets": [[0, 0, 2.0]]},
        "q": [-0.8],
        "l": [0], "u": ["inf"],
        "cones": [],
        "integer": [{"index": 0, "values": [1, 0]}]
    }"#;

    #[test]
    fn parses_infinite_bounds_and_sorts_values() {
        let m = from_json_str(TOY).unwrap();
        assert_eq!(m.relaxation.u[0], f64::INFINITY);
        assert_eq!(m.integers[0].values, vec![0.0, 1.0]);
        assert_eq!(m.relaxation.data.g.rows, 0);
        assert!(validate(&m).is_empty());
    }

    #[test]
    fn round_trip_preserves_problem() {
        let m = from_json_str(TOY).unwrap();
        let back = from_json_str(&to_json_string(&m).unwrap()).unwrap();
        assert_eq!(m, back);
    }

    #[test]
    fn cone_kind_aliases() {
        let c: ConeSpec = serde_json::from_str(r#"{"kind": "soc", "dim": 3}"#).unwrap();
        assert_eq!(c.kind, ConeKind::SecondOrder);
    }

    #[test]
    fn malformed_inputs_rejected() {
        assert!(from_json_str("{not json").is_err());
        let bad_bound = TOY.replace("\"inf\"", "\"huge\"");
        assert!(from_json_str(&bad_bound).is_err());
        let bad_triplet = TOY.replace("[[0, 0, 2.0]]", "[[3, 0, 2.0]]");
        assert!(from_json_str(&bad_triplet).is_err());
    }
}
