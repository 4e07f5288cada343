//! Canonical byte layout shared by key files, MAC payloads and message size
//! accounting.
//!
//! * integers of fixed width are big-endian;
//! * variable-length fields (`bytes`, big-integer magnitudes) are prefixed by
//!   their length as a big-endian `u32`;
//! * `Z_{n²}` ciphertext elements are written fixed-width (`⌈|n²|/8⌉` bytes,
//!   big-endian, left-padded) so every ciphertext costs the same.

use alloc::vec::Vec;

use num_bigint::BigUint;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum WireError {
    #[error("truncated input")]
    Truncated,
    #[error("bad magic header")]
    BadMagic,
    #[error("trailing bytes after the last field")]
    Trailing,
    #[error("element wider than its fixed width")]
    Overwide,
    #[error("invalid field: {0}")]
    Invalid(&'static str),
}

#[derive(Debug, Default, Clone)]
pub struct Encoder {
    buf: Vec<u8>,
}

impl Encoder {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn u8(&mut self, v: u8) -> &mut Self {
        self.buf.push(v);
        self
    }

    pub fn u32(&mut self, v: u32) -> &mut Self {
        self.buf.extend_from_slice(&v.to_be_bytes());
        self
    }

    pub fn u64(&mut self, v: u64) -> &mut Self {
        self.buf.extend_from_slice(&v.to_be_bytes());
        self
    }

    pub fn i64(&mut self, v: i64) -> &mut Self {
        self.buf.extend_from_slice(&v.to_be_bytes());
        self
    }

    pub fn raw(&mut self, bytes: &[u8]) -> &mut Self {
        self.buf.extend_from_slice(bytes);
        self
    }

    pub fn bytes(&mut self, bytes: &[u8]) -> &mut Self {
        self.u32(bytes.len() as u32);
        self.raw(bytes)
    }

    /// Length-prefixed minimal big-endian magnitude (zero is the empty string).
    pub fn big(&mut self, v: &BigUint) -> &mut Self {
        if v.bits() == 0 {
            return self.bytes(&[]);
        }
        self.bytes(&v.to_bytes_be())
    }

    /// Fixed-width big-endian element.
    pub fn element(&mut self, v: &BigUint, width: usize) -> &mut Self {
        let b = v.to_bytes_be();
        assert!(b.len() <= width, "element wider than {width} bytes");
        self.buf.extend(core::iter::repeat_n(0u8, width - b.len()));
        self.raw(&b)
    }

    pub fn finish(self) -> Vec<u8> {
        self.buf
    }

    pub fn len(&self) -> usize {
        self.buf.len()
    }

    pub fn is_empty(&self) -> bool {
        self.buf.is_empty()
    }
}

pub struct Decoder<'a> {
    rest: &'a [u8],
}

impl<'a> Decoder<'a> {
    pub fn new(buf: &'a [u8]) -> Self {
        Self { rest: buf }
    }

    fn take(&mut self, n: usize) -> Result<&'a [u8], WireError> {
        if self.rest.len() < n {
            return Err(WireError::Truncated);
        }
        let (head, tail) = self.rest.split_at(n);
        self.rest = tail;
        Ok(head)
    }

    pub fn expect_magic(&mut self, magic: &[u8]) -> Result<(), WireError> {
        if self.take(magic.len())? == magic {
            Ok(())
        } else {
            Err(WireError::BadMagic)
        }
    }

    pub fn u8(&mut self) -> Result<u8, WireError> {
        Ok(self.take(1)?[0])
    }

    pub fn u32(&mut self) -> Result<u32, WireError> {
        Ok(u32::from_be_bytes(self.take(4)?.try_into().unwrap()))
    }

    pub fn u64(&mut self) -> Result<u64, WireError> {
        Ok(u64::from_be_bytes(self.take(8)?.try_into().unwrap()))
    }

    pub fn i64(&mut self) -> Result<i64, WireError> {
        Ok(i64::from_be_bytes(self.take(8)?.try_into().unwrap()))
    }

    pub fn bytes(&mut self) -> Result<&'a [u8], WireError> {
        let len = self.u32()? as usize;
        self.take(len)
    }

    pub fn big(&mut self) -> Result<BigUint, WireError> {
        Ok(BigUint::from_bytes_be(self.bytes()?))
    }

    pub fn element(&mut self, width: usize) -> Result<BigUint, WireError> {
        Ok(BigUint::from_bytes_be(self.take(width)?))
    }

    pub fn finish(self) -> Result<(), WireError> {
        if self.rest.is_empty() {
            Ok(())
        } else {
            Err(WireError::Trailing)
        }
    }
}
