//! Typed envelopes for the public artifacts the CLI reads and writes.

use std::path::Path;

use pseudoent_core::circuit::CircuitIR;
use pseudoent_core::lossy::FunctionKey;
use pseudoent_core::phase::{build_statevector, MultiCutKey, PhaseKey, SingleCutKey};
use pseudoent_core::{ComplexState, PhaseState, SparseOperator, C64};
use serde::{Deserialize, Serialize};

use crate::envelope::{self, kind, sha256_hex};
use crate::error::{HarnessError, Result};

/// Public key material of either phase-state construction.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum PublicKey {
    Single(SingleCutKey),
    Multi(MultiCutKey),
}

impl PublicKey {
    pub fn n(&self) -> usize {
        match self {
            PublicKey::Single(k) => k.n(),
            PublicKey::Multi(k) => k.n(),
        }
    }

    pub fn phase_table(&self) -> Result<Vec<bool>> {
        Ok(match self {
            PublicKey::Single(k) => k.phase_table()?,
            PublicKey::Multi(k) => k.phase_table()?,
        })
    }

    pub fn statevector(&self) -> Result<PhaseState> {
        Ok(match self {
            PublicKey::Single(k) => build_statevector(k)?,
            PublicKey::Multi(k) => build_statevector(k)?,
        })
    }

    fn kind(&self) -> &'static str {
        match self {
            PublicKey::Single(_) => kind::SINGLE_CUT_KEY,
            PublicKey::Multi(_) => kind::MULTI_CUT_KEY,
        }
    }

    fn payload(&self) -> Vec<u8> {
        let v = match self {
            PublicKey::Single(k) => k.to_json(),
            PublicKey::Multi(k) => k.to_json(),
        };
        serde_json::to_vec(&v).expect("key JSON serializes")
    }

    /// Content-derived identifier: the first 16 hex digits of the payload hash.
    pub fn id(&self) -> String {
        sha256_hex(&self.payload())[..16].to_string()
    }

    pub fn to_envelope(&self) -> Vec<u8> {
        envelope::encode(self.kind(), &self.payload())
    }

    pub fn from_envelope(bytes: &[u8]) -> Result<Self> {
        let (k, payload) = envelope::decode(bytes)?;
        let v: serde_json::Value = serde_json::from_slice(payload)?;
        match k.as_str() {
            kind::SINGLE_CUT_KEY => Ok(PublicKey::Single(SingleCutKey::from_json(&v)?)),
            kind::MULTI_CUT_KEY => Ok(PublicKey::Multi(MultiCutKey::from_json(&v)?)),
            other => Err(HarnessError::Kind {
                expected: "phase key".into(),
                found: other.into(),
            }),
        }
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        envelope::write(path, self.kind(), &self.payload())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let bytes = std::fs::read(path).map_err(crate::error::io_err(path))?;
        Self::from_envelope(&bytes)
    }
}

pub fn function_key_envelope(key: &FunctionKey) -> Vec<u8> {
    envelope::encode(
        kind::FUNCTION_KEY,
        &serde_json::to_vec(&key.to_json()).expect("key JSON serializes"),
    )
}

pub fn function_key_from_envelope(bytes: &[u8]) -> Result<FunctionKey> {
    let payload = envelope::decode_kind(bytes, kind::FUNCTION_KEY)?;
    Ok(FunctionKey::from_json(&serde_json::from_slice(payload)?)?)
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct StateFile {
    n: usize,
    amps: Vec<[f64; 2]>,
}

pub fn state_envelope(state: &ComplexState) -> Vec<u8> {
    let file = StateFile {
        n: state.n(),
        amps: state.amplitudes().iter().map(|z| [z.re, z.im]).collect(),
    };
    envelope::encode(
        kind::STATE,
        &serde_json::to_vec(&file).expect("state JSON serializes"),
    )
}

pub fn state_from_envelope(bytes: &[u8]) -> Result<ComplexState> {
    let file: StateFile = serde_json::from_slice(envelope::decode_kind(bytes, kind::STATE)?)?;
    Ok(ComplexState::new(
        file.n,
        file.amps
            .into_iter()
            .map(|[re, im]| C64::new(re, im))
            .collect(),
    )?)
}

pub fn circuit_envelope(circuit: &CircuitIR) -> Vec<u8> {
    envelope::encode(kind::CIRCUIT, circuit.to_json().as_bytes())
}

pub fn circuit_from_envelope(bytes: &[u8]) -> Result<CircuitIR> {
    let payload = envelope::decode_kind(bytes, kind::CIRCUIT)?;
    let text = std::str::from_utf8(payload)
        .map_err(|_| HarnessError::Envelope("circuit is not UTF-8".into()))?;
    Ok(CircuitIR::from_json(text)?)
}

/// Reads a circuit either from an envelope or from bare circuit JSON.
pub fn load_circuit(path: &Path) -> Result<CircuitIR> {
    let bytes = std::fs::read(path).map_err(crate::error::io_err(path))?;
    if bytes.starts_with(envelope::MAGIC.as_bytes()) {
        circuit_from_envelope(&bytes)
    } else {
        let text = std::str::from_utf8(&bytes)
            .map_err(|_| HarnessError::Envelope("circuit is not UTF-8".into()))?;
        Ok(CircuitIR::from_json(text)?)
    }
}

pub fn operator_envelope(op: &SparseOperator) -> Vec<u8> {
    envelope::encode(kind::OPERATOR, op.to_triplet_text().as_bytes())
}

pub fn operator_from_envelope(bytes: &[u8]) -> Result<SparseOperator> {
    let payload = envelope::decode_kind(bytes, kind::OPERATOR)?;
    let text = std::str::from_utf8(payload)
        .map_err(|_| HarnessError::Envelope("operator is not UTF-8".into()))?;
    Ok(SparseOperator::from_triplet_text(text)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use pseudoent_core::circuit::{random_circuit, ClockEncoding, PaddedCircuit};
    use pseudoent_core::clock::build_clock_ham;
    use pseudoent_core::phase::{sample_multi_cut_key, sample_single_cut_key, EntanglementMode};
    use pseudoent_core::Seed;

    #[test]
    fn keys_roundtrip_bit_exact() {
        let (s, _) =
            sample_single_cut_key(EntanglementMode::Low, 8, 2, &Seed::from_u64(1)).unwrap();
        let (m, _) =
            sample_multi_cut_key(EntanglementMode::High, 8, 3, &Seed::from_u64(2)).unwrap();
        for key in [PublicKey::Single(s.clone()), PublicKey::Multi(m)] {
            let env = key.to_envelope();
            let back = PublicKey::from_envelope(&env).unwrap();
            assert_eq!(back, key);
            assert_eq!(back.to_envelope(), env);
        }
        let fk = s.rep().clone();
        assert_eq!(
            function_key_from_envelope(&function_key_envelope(&fk)).unwrap(),
            fk
        );
    }

    #[test]
    fn state_circuit_operator_roundtrip() {
        let c = random_circuit(3, 4, Seed::from_u64(4)).unwrap();
        assert_eq!(circuit_from_envelope(&circuit_envelope(&c)).unwrap(), c);
        let out = ComplexState::new(3, c.output_state().unwrap()).unwrap();
        assert_eq!(state_from_envelope(&state_envelope(&out)).unwrap(), out);
        let h = build_clock_ham(&PaddedCircuit::new(c, 2), ClockEncoding::Binary).unwrap();
        assert_eq!(operator_from_envelope(&operator_envelope(&h)).unwrap(), h);
    }

    #[test]
    fn truncated_key_fails_checksum() {
        let (s, _) =
            sample_single_cut_key(EntanglementMode::High, 8, 2, &Seed::from_u64(1)).unwrap();
        let env = PublicKey::Single(s).to_envelope();
        let cut = &env[..env.len() * 2 / 3];
        assert!(matches!(
            PublicKey::from_envelope(cut),
            Err(HarnessError::Checksum { .. })
        ));
    }
}
