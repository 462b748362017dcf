use crate::VveError;

pub const MAGIC: [u8; 4] = *b"VVE1";
/// Seven little-endian f64 fields.
pub const PAYLOAD_LEN: usize = 56;
/// Magic, u32 sequence number, payload.
pub const WIRE_LEN: usize = 4 + 4 + PAYLOAD_LEN;

/// Planar vehicle (or road-user) state. Pedestrians and bicyclists send
/// `beta = r = 0`.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct StateMessage {
    pub seq: u32,
    pub t: f64,
    pub x: f64,
    pub y: f64,
    pub psi: f64,
    pub v: f64,
    pub beta: f64,
    pub r: f64,
}

impl StateMessage {
    const NAMES: [&'static str; 7] = ["t", "x", "y", "psi", "v", "beta", "r"];

    fn reals(&self) -> [f64; 7] {
        [self.t, self.x, self.y, self.psi, self.v, self.beta, self.r]
    }

    pub fn encode(&self) -> Result<[u8; WIRE_LEN], VveError> {
        let mut out = [0u8; WIRE_LEN];
        out[..4].copy_from_slice(&MAGIC);
        out[4..8].copy_from_slice(&self.seq.to_le_bytes());
        for (k, (v, name)) in self.reals().iter().zip(Self::NAMES).enumerate() {
            if !v.is_finite() {
                return Err(VveError::NonFinite(name));
            }
            out[8 + 8 * k..16 + 8 * k].copy_from_slice(&v.to_le_bytes());
        }
        Ok(out)
    }

    pub fn decode(bytes: &[u8]) -> Result<Self, VveError> {
        if bytes.len() != WIRE_LEN {
            return Err(VveError::Length { expected: WIRE_LEN, got: bytes.len() });
        }
        let magic: [u8; 4] = bytes[..4].try_into().unwrap();
        if magic != MAGIC {
            return Err(VveError::Magic(magic));
        }
        let f = |k: usize| f64::from_le_bytes(bytes[8 + 8 * k..16 + 8 * k].try_into().unwrap());
        let msg = Self {
            seq: u32::from_le_bytes(bytes[4..8].try_into().unwrap()),
            t: f(0),
            x: f(1),
            y: f(2),
            psi: f(3),
            v: f(4),
            beta: f(5),
            r: f(6),
        };
        if let Some(k) = msg.reals().iter().position(|v| !v.is_finite()) {
            return Err(VveError::NonFinite(Self::NAMES[k]));
        }
        Ok(msg)
    }
}
