use lebesgue::formats::{DecompositionJson, IterationJson};
use lebesgue::{L1Sequence, RatioCertificate, ToleranceConfig, UniquenessCertificate};
use serde::{Deserialize, Serialize};

use crate::io::sha256_hex;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InputEcho {
    pub role: String,
    pub kind: String,
    /// Matrix dimension, or the truncation size for truncated sequences.
    pub dim: Option<usize>,
    pub sha256: String,
}

/// Pointwise check of `g = g_r + g_s` on random Hermitian test matrices.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FunctionalCheck {
    pub seed: u64,
    pub panel_size: usize,
    pub dim: usize,
    /// Largest `|g(A) - g_r(A) - g_s(A)| / (‖A‖ tr S)` over the panel.
    pub max_rel_defect: f64,
}

/// Everything in a report except timing; this part is hashed.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Payload {
    pub command: String,
    pub inputs: Vec<InputEcho>,
    pub tolerances: ToleranceConfig,
    pub truncate: Option<usize>,
    pub decomposition: Option<DecompositionJson>,
    pub uniqueness: Option<UniquenessCertificate>,
    pub functional_check: Option<FunctionalCheck>,
    pub error: Option<String>,
    /// Iteration gaps collected before a convergence failure.
    pub trace: Option<Vec<IterationJson>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Timing {
    pub elapsed_ms: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    #[serde(flatten)]
    pub payload: Payload,
    pub payload_sha256: String,
    pub timing: Timing,
}

impl Payload {
    pub fn digest(&self) -> String {
        sha256_hex(serde_json::to_string(self).expect("plain data serialises").as_bytes())
    }
}

impl RunReport {
    pub fn new(payload: Payload, elapsed_ms: f64) -> Self {
        Self {
            payload_sha256: payload.digest(),
            payload,
            timing: Timing { elapsed_ms },
        }
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("plain data serialises");
        s.push('\n');
        s
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Counterexample {
    #[serde(rename = "T")]
    pub t: L1Sequence,
    #[serde(rename = "S")]
    pub s: L1Sequence,
    pub certificate: RatioCertificate,
    /// Closed-form `Σ S_n`.
    pub sum_s: f64,
    pub input_sha256: String,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn report_round_trips_and_hash_ignores_timing() {
        let payload = Payload {
            command: "decompose".into(),
            inputs: vec![InputEcho {
                role: "S".into(),
                kind: "matrix".into(),
                dim: Some(2),
                sha256: "00".into(),
            }],
            tolerances: ToleranceConfig::default(),
            truncate: None,
            decomposition: None,
            uniqueness: None,
            functional_check: None,
            error: Some("x".into()),
            trace: None,
        };
        let a = RunReport::new(payload.clone(), 1.0);
        let b = RunReport::new(payload, 2.0);
        assert_eq!(a.payload_sha256, b.payload_sha256);
        let back: RunReport = serde_json::from_str(&a.to_json()).unwrap();
        assert_eq!(back, a);
        assert_eq!(back.payload.digest(), back.payload_sha256);
    }
}
