//! Binary dump of a band: `WKGS`, format version, JSON header, then little-endian slice arrays.

use super::band::{FieldBand, Slice, SliceField};
use super::{GridSpec, Mode, ModelParams};
use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

pub const MAGIC: &[u8; 4] = b"WKGS";
pub const VERSION: u32 = 1;
const MAX_HEADER: usize = 1 << 20;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SnapshotHeader {
    pub grid: GridSpec,
    pub params: ModelParams,
    pub field_names: Vec<String>,
    pub dt: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub artifact: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub config_sha256: Option<String>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Snapshot {
    pub header: SnapshotHeader,
    pub slices: Vec<Slice>,
}

fn points(grid: &GridSpec) -> Option<usize> {
    let side = grid.n_cells.checked_add(1)?;
    match grid.mode {
        Mode::Radial => Some(side),
        Mode::Cartesian3d => side.checked_mul(side)?.checked_mul(side),
    }
}

impl Snapshot {
    pub fn from_band(band: &FieldBand, grid: &GridSpec, params: &ModelParams, names: &[&str]) -> Self {
        Snapshot {
            header: SnapshotHeader {
                grid: grid.clone(),
                params: params.clone(),
                field_names: names.iter().map(|s| s.to_string()).collect(),
                dt: band.dt(),
                artifact: None,
                config_sha256: None,
            },
            slices: band.slices().cloned().collect(),
        }
    }

    pub fn to_band(&self) -> FieldBand {
        let g = &self.header.grid;
        FieldBand::from_parts(g.mode, g.n_cells, g.h(), self.header.dt, g.band_depth, self.slices.clone())
    }

    pub fn encode(&self) -> Result<Vec<u8>> {
        let head = serde_json::to_vec(&self.header).map_err(|e| Error::Format(e.to_string()))?;
        let mut out = Vec::new();
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&VERSION.to_le_bytes());
        out.extend_from_slice(&(head.len() as u32).to_le_bytes());
        out.extend_from_slice(&head);
        out.extend_from_slice(&(self.slices.len() as u32).to_le_bytes());
        for s in &self.slices {
            out.extend_from_slice(&s.t.to_le_bytes());
            for f in &s.fields {
                for x in f.val.iter().chain(&f.dt) {
                    out.extend_from_slice(&x.to_le_bytes());
                }
            }
        }
        Ok(out)
    }

    pub fn decode(bytes: &[u8]) -> Result<Self> {
        let mut rd = Reader { b: bytes, pos: 0 };
        if rd.take(4)? != MAGIC {
            return Err(Error::Format("bad magic".into()));
        }
        let version = rd.u32()?;
        if version != VERSION {
            return Err(Error::Version { found: version, expected: VERSION });
        }
        let hlen = rd.u32()? as usize;
        if hlen > MAX_HEADER {
            return Err(Error::Format("header too large".into()));
        }
        let header: SnapshotHeader =
            serde_json::from_slice(rd.take(hlen)?).map_err(|e| Error::Format(e.to_string()))?;
        header.grid.validate().map_err(|e| Error::Format(e.to_string()))?;
        if header.field_names.is_empty() || header.field_names.len() > 2 || !(header.dt > 0.0) {
            return Err(Error::Format("header fields or dt invalid".into()));
        }
        let np = points(&header.grid).ok_or_else(|| Error::Format("grid too large".into()))?;
        let nslices = rd.u32()? as usize;
        let per_slice = np
            .checked_mul(2 * header.field_names.len())
            .and_then(|v| v.checked_add(1))
            .and_then(|v| v.checked_mul(8))
            .ok_or_else(|| Error::Format("grid too large".into()))?;
        if per_slice.checked_mul(nslices).map_or(true, |need| need > rd.remaining()) {
            return Err(Error::Truncated);
        }
        let mut slices = Vec::with_capacity(nslices);
        for _ in 0..nslices {
            let t = rd.f64()?;
            let mut fields = Vec::new();
            for _ in &header.field_names {
                let val = rd.f64s(np)?;
                let dt = rd.f64s(np)?;
                fields.push(SliceField { val, dt });
            }
            slices.push(Slice { t, fields });
        }
        if rd.remaining() != 0 {
            return Err(Error::Format("trailing bytes".into()));
        }
        Ok(Snapshot { header, slices })
    }
}

struct Reader<'a> {
    b: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn remaining(&self) -> usize {
        self.b.len() - self.pos
    }

    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        if n > self.remaining() {
            return Err(Error::Truncated);
        }
        let s = &self.b[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().expect("4 bytes")))
    }

    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().expect("8 bytes")))
    }

    fn f64s(&mut self, n: usize) -> Result<Vec<f64>> {
        let raw = self.take(n * 8)?;
        Ok(raw.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes"))).collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> Snapshot {
        let grid = GridSpec { mode: Mode::Radial, extent: 1.0, n_cells: 8, cfl: 0.5, t0: 2.0, t_end: None, band_depth: 5 };
        let params = ModelParams {
            p00: 0.0,
            piso: 0.0,
            r_coupling: 0.0,
            h00: 0.0,
            hiso: 0.0,
            c_mass: 0.0,
            eps_amp: 1.0,
            p_full: None,
            h_full: None,
        };
        let slices = (0..3)
            .map(|k| Slice {
                t: 2.0 + k as f64 * 0.0625,
                fields: vec![SliceField {
                    val: (0..9).map(|i| (i as f64 * 0.1 + k as f64).sin()).collect(),
                    dt: (0..9).map(|i| f64::from_bits(0x3ff0_0000_0000_0001 + i)).collect(),
                }],
            })
            .collect();
        Snapshot {
            header: SnapshotHeader {
                grid,
                params,
                field_names: vec!["phi".into()],
                dt: 0.0625,
                artifact: Some("wkgs-test".into()),
                config_sha256: None,
            },
            slices,
        }
    }

    #[test]
    fn roundtrip_is_bit_exact() {
        let s = sample();
        let bytes = s.encode().unwrap();
        let back = Snapshot::decode(&bytes).unwrap();
        assert_eq!(back, s);
        assert_eq!(back.encode().unwrap(), bytes);
    }

    #[test]
    fn rejects_damage() {
        let bytes = sample().encode().unwrap();
        assert!(matches!(Snapshot::decode(&bytes[..bytes.len() - 3]), Err(Error::Truncated)));
        let mut v = bytes.clone();
        v[4] = 9;
        assert!(matches!(Snapshot::decode(&v), Err(Error::Version { found: 9, .. })));
        let mut m = bytes.clone();
        m[0] = b'X';
        assert!(matches!(Snapshot::decode(&m), Err(Error::Format(_))));
        assert!(matches!(Snapshot::decode(&bytes[..2]), Err(Error::Truncated)));
    }
}
