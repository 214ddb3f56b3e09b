//! Named-array container used for parameters, checkpoints and optimizer
//! state.
//!
//! Layout (all integers and floats little-endian):
//!
//! ```text
//! magic      8 bytes   "QLSTMARR"
//! version    u32       1
//! header     u32 len + UTF-8 bytes (free-form, JSON for checkpoints)
//! count      u32       number of arrays
//! per array:
//!   name     u32 len + UTF-8 bytes
//!   planes   u32       1 for real arrays, 4 for quaternion arrays
//!   ndim     u32
//!   dims     u64 × ndim
//!   data     f64 × planes·Π dims, plane-major (all a, then all b, c, d)
//! ```

use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::quat::QuaternionTensor;

pub const MAGIC: &[u8; 8] = b"QLSTMARR";
pub const VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq)]
pub struct NamedArray {
    pub name: String,
    pub shape: Vec<usize>,
    pub planes: usize,
    pub data: Vec<f64>,
}

impl NamedArray {
    pub fn real(name: impl Into<String>, shape: &[usize], data: Vec<f64>) -> Self {
        debug_assert_eq!(shape.iter().product::<usize>(), data.len());
        NamedArray {
            name: name.into(),
            shape: shape.to_vec(),
            planes: 1,
            data,
        }
    }

    pub fn from_quaternion_tensor(name: impl Into<String>, t: &QuaternionTensor) -> Self {
        let data = t.planes().iter().flatten().copied().collect();
        NamedArray {
            name: name.into(),
            shape: t.shape().to_vec(),
            planes: 4,
            data,
        }
    }

    pub fn numel(&self) -> usize {
        self.shape.iter().product()
    }

    pub fn to_quaternion_tensor(&self) -> Result<QuaternionTensor> {
        if self.planes != 4 {
            return Err(Error::shape("quaternion array planes", 4, self.planes));
        }
        let n = self.numel();
        let planes = [0, 1, 2, 3].map(|k| self.data[k * n..(k + 1) * n].to_vec());
        QuaternionTensor::pack_components(&self.shape, planes)
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Container {
    pub header: String,
    pub arrays: Vec<NamedArray>,
}

impl Container {
    pub fn get(&self, name: &str) -> Option<&NamedArray> {
        self.arrays.iter().find(|a| a.name == name)
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::new();
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&VERSION.to_le_bytes());
        put_str(&mut out, &self.header);
        out.extend_from_slice(&(self.arrays.len() as u32).to_le_bytes());
        for a in &self.arrays {
            put_str(&mut out, &a.name);
            out.extend_from_slice(&(a.planes as u32).to_le_bytes());
            out.extend_from_slice(&(a.shape.len() as u32).to_le_bytes());
            for &d in &a.shape {
                out.extend_from_slice(&(d as u64).to_le_bytes());
            }
            for v in &a.data {
                out.extend_from_slice(&v.to_le_bytes());
            }
        }
        out
    }

    pub fn from_bytes(bytes: &[u8], path: &Path) -> Result<Self> {
        let mut r = Reader { bytes, pos: 0, path };
        if r.take(8)? != MAGIC {
            return Err(Error::format(path, "bad magic"));
        }
        let version = r.u32()?;
        if version != VERSION {
            return Err(Error::format(path, format!("unsupported version {version}")));
        }
        let header = r.string()?;
        let count = r.u32()? as usize;
        let mut arrays = Vec::with_capacity(count);
        for _ in 0..count {
            let name = r.string()?;
            let planes = r.u32()? as usize;
            let ndim = r.u32()? as usize;
            let shape = (0..ndim).map(|_| r.u64().map(|d| d as usize)).collect::<Result<Vec<_>>>()?;
            let n = planes * shape.iter().product::<usize>();
            let data = (0..n).map(|_| r.f64()).collect::<Result<Vec<_>>>()?;
            arrays.push(NamedArray { name, shape, planes, data });
        }
        if r.pos != bytes.len() {
            return Err(Error::format(path, "trailing bytes"));
        }
        Ok(Container { header, arrays })
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_bytes()).map_err(|e| Error::io(path, e))
    }

    pub fn read(path: &Path) -> Result<Self> {
        let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
        Self::from_bytes(&bytes, path)
    }
}

fn put_str(out: &mut Vec<u8>, s: &str) {
    out.extend_from_slice(&(s.len() as u32).to_le_bytes());
    out.extend_from_slice(s.as_bytes());
}

pub(crate) struct Reader<'a> {
    pub bytes: &'a [u8],
    pub pos: usize,
    pub path: &'a Path,
}

impl<'a> Reader<'a> {
    pub fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.bytes.len());
        let end = end.ok_or_else(|| Error::format(self.path, "unexpected end of file"))?;
        let s = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    pub fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    pub fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    pub fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    pub fn string(&mut self) -> Result<String> {
        let n = self.u32()? as usize;
        let b = self.take(n)?;
        String::from_utf8(b.to_vec()).map_err(|_| Error::format(self.path, "invalid utf-8"))
    }
}
