//! Binary serialization of trained policies.
//!
//! Layout: magic `FRPN`, format version, architecture header (variant,
//! n_risky, lookback, conv_width, k_maps, horizon), parameter count, then
//! raw little-endian f64 parameters. Reload reproduces forward outputs bit
//! for bit because the exact parameter bits round-trip.

use super::net::PolicyNetwork;
use super::{Architecture, PolicyError, PolicyVariant};
use std::io::{Read, Write};
use std::path::Path;
use thiserror::Error;

const MAGIC: &[u8; 4] = b"FRPN";
const FORMAT_VERSION: u16 = 1;

#[derive(Debug, Error)]
pub enum PolicyIoError {
    #[error("not a policy file (bad magic)")]
    BadMagic,
    #[error("unsupported format version {0}")]
    UnsupportedVersion(u16),
    #[error("unknown variant tag {0}")]
    UnknownVariant(u8),
    #[error("truncated or oversized payload: {0}")]
    BadLength(String),
    #[error("header field {field} out of range: {value}")]
    HeaderRange { field: &'static str, value: u64 },
    #[error(transparent)]
    Policy(#[from] PolicyError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

fn read_u32(bytes: &[u8], pos: &mut usize) -> Result<u32, PolicyIoError> {
    let end = *pos + 4;
    let slice = bytes
        .get(*pos..end)
        .ok_or_else(|| PolicyIoError::BadLength("header".into()))?;
    *pos = end;
    Ok(u32::from_le_bytes(slice.try_into().expect("4 bytes")))
}

impl PolicyNetwork {
    pub fn to_bytes(&self) -> Vec<u8> {
        let arch = self.architecture();
        let mut out = Vec::with_capacity(40 + self.params().len() * 8);
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
        out.push(arch.variant.tag());
        out.push(0); // reserved
        for value in [arch.n_risky, arch.lookback, arch.conv_width, arch.k_maps, arch.horizon] {
            out.extend_from_slice(&(value as u32).to_le_bytes());
        }
        out.extend_from_slice(&(self.params().len() as u64).to_le_bytes());
        for p in self.params() {
            out.extend_from_slice(&p.to_le_bytes());
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self, PolicyIoError> {
        if bytes.len() < 4 || &bytes[..4] != MAGIC {
            return Err(PolicyIoError::BadMagic);
        }
        let mut pos = 4;
        let version = u16::from_le_bytes(
            bytes
                .get(pos..pos + 2)
                .ok_or_else(|| PolicyIoError::BadLength("version".into()))?
                .try_into()
                .expect("2 bytes"),
        );
        pos += 2;
        if version != FORMAT_VERSION {
            return Err(PolicyIoError::UnsupportedVersion(version));
        }
        let tag = *bytes.get(pos).ok_or_else(|| PolicyIoError::BadLength("variant".into()))?;
        let variant = PolicyVariant::from_tag(tag).ok_or(PolicyIoError::UnknownVariant(tag))?;
        pos += 2; // tag + reserved byte

        let mut fields = [0usize; 5];
        for (i, name) in
            ["n_risky", "lookback", "conv_width", "k_maps", "horizon"].iter().enumerate()
        {
            let v = read_u32(bytes, &mut pos)?;
            if v > 1 << 20 {
                return Err(PolicyIoError::HeaderRange { field: name, value: v as u64 });
            }
            fields[i] = v as usize;
        }
        let arch = Architecture {
            variant,
            n_risky: fields[0],
            lookback: fields[1],
            conv_width: fields[2],
            k_maps: fields[3],
            horizon: fields[4],
        };
        arch.validate()?;

        let count = u64::from_le_bytes(
            bytes
                .get(pos..pos + 8)
                .ok_or_else(|| PolicyIoError::BadLength("parameter count".into()))?
                .try_into()
                .expect("8 bytes"),
        );
        pos += 8;
        if count != arch.param_len() as u64 {
            return Err(PolicyIoError::BadLength(format!(
                "parameter count {count} does not match architecture ({})",
                arch.param_len()
            )));
        }
        let expected = pos + count as usize * 8;
        if bytes.len() != expected {
            return Err(PolicyIoError::BadLength(format!(
                "payload is {} bytes, expected {expected}",
                bytes.len()
            )));
        }
        let params: Vec<f64> = bytes[pos..]
            .chunks_exact(8)
            .map(|chunk| f64::from_le_bytes(chunk.try_into().expect("8 bytes")))
            .collect();
        Ok(PolicyNetwork::from_params(arch, params)?)
    }

    pub fn save(&self, path: &Path) -> Result<(), PolicyIoError> {
        let mut file = std::fs::File::create(path)?;
        file.write_all(&self.to_bytes())?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self, PolicyIoError> {
        let mut bytes = Vec::new();
        std::fs::File::open(path)?.read_to_end(&mut bytes)?;
        Self::from_bytes(&bytes)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_preserves_bits() {
        let arch = Architecture::standard(PolicyVariant::AllInputs, 3);
        let mut rng = crate::rng::stream(11, &[1]);
        let net = PolicyNetwork::init_random(arch, 0.05, &mut rng).unwrap();
        let back = PolicyNetwork::from_bytes(&net.to_bytes()).unwrap();
        assert_eq!(net.params(), back.params());
        assert_eq!(net.architecture(), back.architecture());
    }

    #[test]
    fn reload_reproduces_forward_outputs_exactly() {
        let arch = Architecture { variant: PolicyVariant::ForecastOnly, n_risky: 2, lookback: 6, conv_width: 3, k_maps: 2, horizon: 2 };
        let mut rng = crate::rng::stream(11, &[2]);
        let net = PolicyNetwork::init_random(arch, 0.05, &mut rng).unwrap();
        let state = crate::policy::StateInput {
            log_return_window: None,
            forecasts: Some(vec![vec![0.01, -0.02, 0.0001]; 2]),
            weights: vec![0.2, 0.3, 0.5],
            volume_features: vec![1.1, 0.9],
            volatility_features: vec![1.0, 1.3],
        };
        let back = PolicyNetwork::from_bytes(&net.to_bytes()).unwrap();
        let a = net.forward(&state).unwrap();
        let b = back.forward(&state).unwrap();
        assert_eq!(a, b, "bitwise-identical outputs after reload");
    }

    #[test]
    fn rejects_corrupted_payloads() {
        let arch = Architecture::standard(PolicyVariant::LogReturns, 2);
        let net = PolicyNetwork::zeroed(arch).unwrap();
        let bytes = net.to_bytes();

        assert!(matches!(PolicyNetwork::from_bytes(b"nope"), Err(PolicyIoError::BadMagic)));

        let mut truncated = bytes.clone();
        truncated.truncate(bytes.len() - 3);
        assert!(matches!(
            PolicyNetwork::from_bytes(&truncated),
            Err(PolicyIoError::BadLength(_))
        ));

        let mut bad_variant = bytes.clone();
        bad_variant[6] = 9;
        assert!(matches!(
            PolicyNetwork::from_bytes(&bad_variant),
            Err(PolicyIoError::UnknownVariant(9))
        ));

        let mut bad_version = bytes;
        bad_version[4] = 0xff;
        assert!(matches!(
            PolicyNetwork::from_bytes(&bad_version),
            Err(PolicyIoError::UnsupportedVersion(_))
        ));
    }
}
