use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use num_complex::Complex64 as C64;

use super::IsoTns;
use crate::error::{Error, Result};
use crate::tensor::DenseTensor;

const MAGIC: &[u8; 8] = b"ISOTNS\0\0";
const VERSION: u32 = 1;

fn put_u32(w: &mut impl Write, v: usize) -> Result<()> {
    let v = u32::try_from(v).map_err(|_| Error::InvalidArgument(format!("{v} does not fit in u32")))?;
    w.write_all(&v.to_le_bytes())?;
    Ok(())
}

fn get_u32(r: &mut impl Read) -> Result<usize> {
    let mut b = [0u8; 4];
    r.read_exact(&mut b)?;
    Ok(u32::from_le_bytes(b) as usize)
}

fn get_f64(r: &mut impl Read) -> Result<f64> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b)?;
    Ok(f64::from_le_bytes(b))
}

impl IsoTns {
    /// Writes the binary container: magic, version, `Lx Ly D`, center, then
    /// each tensor as its shape followed by little-endian `(re, im)` pairs.
    pub fn write_to(&self, w: &mut impl Write) -> Result<()> {
        w.write_all(MAGIC)?;
        put_u32(w, VERSION as usize)?;
        for v in [self.lx, self.ly, self.d, self.center.0, self.center.1] {
            put_u32(w, v)?;
        }
        for t in &self.tensors {
            put_u32(w, t.ndim())?;
            for &s in t.shape() {
                put_u32(w, s)?;
            }
            for z in t.data() {
                w.write_all(&z.re.to_le_bytes())?;
                w.write_all(&z.im.to_le_bytes())?;
            }
        }
        Ok(())
    }

    pub fn read_from(r: &mut impl Read) -> Result<Self> {
        let mut magic = [0u8; 8];
        r.read_exact(&mut magic)?;
        if &magic != MAGIC {
            return Err(Error::InvalidArgument("not an isoTNS container".into()));
        }
        let version = get_u32(r)?;
        if version != VERSION as usize {
            return Err(Error::InvalidArgument(format!("unsupported container version {version}")));
        }
        let lx = get_u32(r)?;
        let ly = get_u32(r)?;
        let d = get_u32(r)?;
        let center = (get_u32(r)?, get_u32(r)?);
        let n = lx
            .checked_mul(ly)
            .filter(|&n| n <= 1 << 16)
            .ok_or_else(|| Error::InvalidArgument("grid too large".into()))?;
        let mut tensors = Vec::with_capacity(n);
        for _ in 0..n {
            let ndim = get_u32(r)?;
            if ndim > 8 {
                return Err(Error::InvalidShape(format!("{ndim} legs")));
            }
            let shape = (0..ndim).map(|_| get_u32(r)).collect::<Result<Vec<_>>>()?;
            let len = shape
                .iter()
                .try_fold(1usize, |a, &s| a.checked_mul(s))
                .filter(|&l| l <= 1 << 28)
                .ok_or_else(|| Error::InvalidShape(format!("{shape:?} too large")))?;
            let data = (0..len)
                .map(|_| Ok(C64::new(get_f64(r)?, get_f64(r)?)))
                .collect::<Result<Vec<_>>>()?;
            tensors.push(DenseTensor::new(shape, data)?);
        }
        Self::from_parts(lx, ly, d, tensors, center)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut w = BufWriter::new(File::create(path)?);
        self.write_to(&mut w)?;
        w.flush()?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::read_from(&mut BufReader::new(File::open(path)?))
    }
}
