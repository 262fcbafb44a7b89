use std::io::{Read, Write};
use std::sync::Arc;

use super::domain::{Domain, Region};
use super::energy::EnergyBreakdown;
use super::order::OrderField;
use crate::error::{Error, Result};
use crate::real::Real;

const MAGIC: &[u8; 5] = b"NLLC1";

/// Writes an `NLLC1` dump: magic, `u32` dims and `m`, `f64` `h` and `ε`,
/// one region byte per cell, then cell-major `f64` values. Little-endian.
pub fn write_field<T: Real, W: Write>(w: &mut W, u: &OrderField<T>) -> Result<()> {
    let d = &u.domain;
    w.write_all(MAGIC)?;
    for v in [d.dims[0], d.dims[1], d.dims[2], u.m] {
        let v = u32::try_from(v).map_err(|_| Error::InvalidInput("dimension exceeds u32".into()))?;
        w.write_all(&v.to_le_bytes())?;
    }
    w.write_all(&d.h.as_f64().to_le_bytes())?;
    w.write_all(&u.eps.as_f64().to_le_bytes())?;
    let tags: Vec<u8> = d.regions.iter().map(|&r| r as u8).collect();
    w.write_all(&tags)?;
    let mut buf = Vec::with_capacity(u.values.len() * 8);
    for &x in &u.values {
        buf.extend_from_slice(&x.as_f64().to_le_bytes());
    }
    w.write_all(&buf)?;
    Ok(())
}

/// Raw contents of an `NLLC1` dump.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldDump {
    pub dims: [usize; 3],
    pub m: usize,
    pub h: f64,
    pub eps: f64,
    pub regions: Vec<Region>,
    pub values: Vec<f64>,
}

pub fn read_field<R: Read>(r: &mut R) -> Result<FieldDump> {
    let mut magic = [0u8; 5];
    r.read_exact(&mut magic)?;
    if &magic != MAGIC {
        return Err(Error::Io("not an NLLC1 dump".into()));
    }
    let mut u4 = [0u8; 4];
    let mut dims = [0usize; 4];
    for d in dims.iter_mut() {
        r.read_exact(&mut u4)?;
        *d = u32::from_le_bytes(u4) as usize;
    }
    let mut f8 = [0u8; 8];
    r.read_exact(&mut f8)?;
    let h = f64::from_le_bytes(f8);
    r.read_exact(&mut f8)?;
    let eps = f64::from_le_bytes(f8);
    let n = dims[0] * dims[1] * dims[2];
    let mut tags = vec![0u8; n];
    r.read_exact(&mut tags)?;
    let regions = tags
        .into_iter()
        .map(|t| Region::from_tag(t).ok_or_else(|| Error::Io(format!("bad region tag {t}"))))
        .collect::<Result<Vec<_>>>()?;
    let mut raw = vec![0u8; n * dims[3] * 8];
    r.read_exact(&mut raw)?;
    let values = raw.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().unwrap())).collect();
    Ok(FieldDump { dims: [dims[0], dims[1], dims[2]], m: dims[3], h, eps, regions, values })
}

impl FieldDump {
    /// Rebuilds the field on a matching domain.
    pub fn into_field<T: Real>(self, domain: Arc<Domain<T>>) -> Result<OrderField<T>> {
        if domain.dims != self.dims || domain.regions != self.regions {
            return Err(Error::InvalidInput("dump does not match the domain".into()));
        }
        Ok(OrderField { domain, m: self.m, eps: T::lit(self.eps), values: self.values.into_iter().map(T::lit).collect() })
    }
}

pub const ENERGY_CSV_HEADER: &str = "eps,E_total,E_interaction,E_bulk,C_eps";

pub fn energy_csv_row<T: Real>(eps: T, e: &EnergyBreakdown<T>) -> String {
    format!("{},{},{},{},{}", eps.as_f64(), e.total.as_f64(), e.interaction.as_f64(), e.bulk.as_f64(), e.c_eps.as_f64())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::domain::Geometry;

    #[test]
    fn dump_roundtrip() {
        let d = Arc::new(Domain::<f64>::new(Geometry::Ball, 1.0, 4, 1, 0.2).unwrap());
        let values: Vec<f64> = (0..d.len() * 2).map(|i| i as f64 * 0.001).collect();
        let u = OrderField { domain: d.clone(), m: 2, eps: 0.1, values };
        let mut buf = Vec::new();
        write_field(&mut buf, &u).unwrap();
        assert_eq!(&buf[..5], b"NLLC1");
        assert_eq!(buf.len(), 5 + 16 + 16 + d.len() + d.len() * 16);
        let back = read_field(&mut buf.as_slice()).unwrap().into_field(d).unwrap();
        assert_eq!(back, u);
        assert!(read_field(&mut &b"NLLC2"[..]).is_err());
    }
}
