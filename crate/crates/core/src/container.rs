//! Little-endian binary containers for fitted models.
//!
//! Layout mirrors `.featb`: an 8-byte magic followed by `u32` counts and
//! `f64` payloads, all little-endian. Matrices are `rows`, `cols`, then
//! row-major values.

use std::fs;
use std::path::Path;

use nalgebra::DMatrix;

use crate::data::FeatureMatrix;
use crate::error::{Error, Result};
use crate::linalg::Kernel;

pub(crate) struct Writer {
    buf: Vec<u8>,
}

impl Writer {
    pub fn new(magic: &[u8; 8]) -> Self {
        Self { buf: magic.to_vec() }
    }

    pub fn u32(&mut self, v: usize) -> Result<()> {
        let v = u32::try_from(v).map_err(|_| Error::Data(format!("{v} exceeds u32")))?;
        self.buf.extend_from_slice(&v.to_le_bytes());
        Ok(())
    }

    pub fn f64(&mut self, v: f64) {
        self.buf.extend_from_slice(&v.to_le_bytes());
    }

    pub fn f64s(&mut self, v: &[f64]) -> Result<()> {
        self.u32(v.len())?;
        v.iter().for_each(|&x| self.f64(x));
        Ok(())
    }

    pub fn matrix(&mut self, m: &DMatrix<f64>) -> Result<()> {
        self.u32(m.nrows())?;
        self.u32(m.ncols())?;
        for i in 0..m.nrows() {
            for j in 0..m.ncols() {
                self.f64(m[(i, j)]);
            }
        }
        Ok(())
    }

    pub fn features(&mut self, m: &FeatureMatrix) -> Result<()> {
        self.u32(m.rows())?;
        self.u32(m.dims())?;
        m.values().iter().for_each(|&x| self.f64(x));
        Ok(())
    }

    pub fn kernel(&mut self, k: &Kernel) {
        match *k {
            Kernel::Linear => {
                self.buf.push(0);
                self.f64(0.0);
            }
            Kernel::Rbf { gamma } => {
                self.buf.push(1);
                self.f64(gamma);
            }
        }
    }

    pub fn finish(self) -> Vec<u8> {
        self.buf
    }
}

pub(crate) struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    pub fn new(bytes: &'a [u8], magic: &[u8; 8]) -> Result<Self> {
        if bytes.len() < 8 || &bytes[..8] != magic {
            return Err(Error::Format(format!(
                "bad magic, expected {:?}",
                String::from_utf8_lossy(magic).trim_end_matches('\0')
            )));
        }
        Ok(Self { bytes, pos: 8 })
    }

    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self
            .pos
            .checked_add(n)
            .filter(|&e| e <= self.bytes.len())
            .ok_or_else(|| Error::Format(format!("truncated model at byte {}", self.pos)))?;
        let s = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    pub fn u32(&mut self) -> Result<usize> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()) as usize)
    }

    pub fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    pub fn f64s(&mut self) -> Result<Vec<f64>> {
        let n = self.u32()?;
        (0..n).map(|_| self.f64()).collect()
    }

    pub fn matrix(&mut self) -> Result<DMatrix<f64>> {
        let r = self.u32()?;
        let c = self.u32()?;
        let vals = (0..r * c).map(|_| self.f64()).collect::<Result<Vec<_>>>()?;
        Ok(DMatrix::from_row_slice(r, c, &vals))
    }

    pub fn features(&mut self) -> Result<FeatureMatrix> {
        let r = self.u32()?;
        let c = self.u32()?;
        let vals = (0..r * c).map(|_| self.f64()).collect::<Result<Vec<_>>>()?;
        FeatureMatrix::new(r, c, vals)
    }

    pub fn kernel(&mut self) -> Result<Kernel> {
        let tag = self.take(1)?[0];
        let gamma = self.f64()?;
        match tag {
            0 => Ok(Kernel::Linear),
            1 if gamma > 0.0 && gamma.is_finite() => Ok(Kernel::Rbf { gamma }),
            1 => Err(Error::Format(format!("stored rbf gamma {gamma} is invalid"))),
            t => Err(Error::Format(format!("unknown kernel tag {t}"))),
        }
    }

    pub fn finish(self) -> Result<()> {
        if self.pos != self.bytes.len() {
            return Err(Error::Format(format!(
                "{} trailing bytes after model",
                self.bytes.len() - self.pos
            )));
        }
        Ok(())
    }
}

pub(crate) fn write_file(path: &Path, bytes: Vec<u8>) -> Result<()> {
    fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

pub(crate) fn read_file(path: &Path) -> Result<Vec<u8>> {
    fs::read(path).map_err(|e| Error::io(path, e))
}
