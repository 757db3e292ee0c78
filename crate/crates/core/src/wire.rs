//! Length-prefixed, type-tagged protocol messages.
//!
//! Every frame is `len: u32 BE || type: u8 || body`, where `len` counts the
//! type byte plus the body, so `Local2Card(3)` is `00 00 00 05 03 00 00 00 03`. Group
//! elements are fixed-width big-endian (`element_len` bytes), ciphertexts
//! are two elements, tags are 32 bytes, counts are `u32` BE.
//!
//! | type | message            | body |
//! |------|--------------------|------|
//! | 0x01 | SessionInit        | version u8, params u8, mode u8, x_len u16, x, y_len u16, y |
//! | 0x02 | Halt               | empty |
//! | 0x03 | Local2Card         | count u32 |
//! | 0x04 | PsiClientMasked    | psi_index u8, count u32, elements |
//! | 0x05 | PsiServerResponse  | psi_index u8, count u32, elements, count u32, tags |
//! | 0x06 | Close              | empty |
//! | 0x07 | Abort              | reason_len u16, utf-8 reason |
//! | 0x10 | HeQuerierSets      | pk, count u32, cts (x side), count u32, cts (y side), count u32, cts (local), ct (local count) |
//! | 0x11 | HePooledMatrix     | count u32, cts |
//! | 0x12 | HeIndicatorReturn  | count u32, cts |
//! | 0x13 | HeFinalCn          | local2_bound u32, ct |

use std::io::{self, Read, Write};

use thiserror::Error;

use crate::group::{GroupElement, GroupError, GroupParams, ParamSet, Tag, TAG_LEN};
use crate::he::Ciphertext;

pub const PROTOCOL_VERSION: u8 = 0x01;

/// Upper bound on a frame body; larger length prefixes are rejected before
/// allocating.
pub const MAX_BODY_LEN: usize = 64 * 1024 * 1024;

pub mod msg_type {
    pub const SESSION_INIT: u8 = 0x01;
    pub const HALT: u8 = 0x02;
    pub const LOCAL2_CARD: u8 = 0x03;
    pub const PSI_CLIENT_MASKED: u8 = 0x04;
    pub const PSI_SERVER_RESPONSE: u8 = 0x05;
    pub const CLOSE: u8 = 0x06;
    pub const ABORT: u8 = 0x07;
    pub const HE_QUERIER_SETS: u8 = 0x10;
    pub const HE_POOLED_MATRIX: u8 = 0x11;
    pub const HE_INDICATOR_RETURN: u8 = 0x12;
    pub const HE_FINAL_CN: u8 = 0x13;
}

#[derive(Debug, Error)]
pub enum WireError {
    #[error("truncated frame")]
    Truncated,
    #[error("frame body of {0} bytes exceeds limit")]
    FrameTooLarge(usize),
    #[error("unknown message type 0x{0:02x}")]
    UnknownType(u8),
    #[error("malformed {what}")]
    Malformed { what: &'static str },
    #[error("{0} trailing bytes after message body")]
    TrailingBytes(usize),
    #[error("message carries group elements but no parameter set is agreed yet")]
    MissingParams,
    #[error("invalid group element: {0}")]
    Element(#[from] GroupError),
    #[error("i/o: {0}")]
    Io(#[from] io::Error),
}

/// Computation mode carried in SessionInit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Mode {
    Psi,
    He,
}

impl Mode {
    pub fn code(self) -> u8 {
        match self {
            Mode::Psi => 0,
            Mode::He => 1,
        }
    }

    pub fn from_code(code: u8) -> Option<Self> {
        match code {
            0 => Some(Mode::Psi),
            1 => Some(Mode::He),
            _ => None,
        }
    }
}

impl std::fmt::Display for Mode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Mode::Psi => "psi",
            Mode::He => "he",
        })
    }
}

impl std::str::FromStr for Mode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "psi" => Ok(Mode::Psi),
            "he" => Ok(Mode::He),
            other => Err(format!("unknown mode {other:?} (expected psi or he)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SessionInit {
    pub version: u8,
    pub params: ParamSet,
    pub mode: Mode,
    pub x_id: Vec<u8>,
    pub y_id: Vec<u8>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HeQuerierSets {
    pub public_key: GroupElement,
    pub x_side: Vec<Ciphertext>,
    pub y_side: Vec<Ciphertext>,
    pub local: Vec<Ciphertext>,
    pub local_count: Ciphertext,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Message {
    SessionInit(SessionInit),
    Halt,
    Local2Card(u32),
    PsiClientMasked { psi_index: u8, elements: Vec<GroupElement> },
    PsiServerResponse { psi_index: u8, remasked: Vec<GroupElement>, tags: Vec<Tag> },
    Close,
    Abort(String),
    HeQuerierSets(HeQuerierSets),
    HePooledMatrix(Vec<Ciphertext>),
    HeIndicatorReturn(Vec<Ciphertext>),
    HeFinalCn { local2_bound: u32, ct: Ciphertext },
}

impl Message {
    pub fn type_byte(&self) -> u8 {
        use msg_type::*;
        match self {
            Message::SessionInit(_) => SESSION_INIT,
            Message::Halt => HALT,
            Message::Local2Card(_) => LOCAL2_CARD,
            Message::PsiClientMasked { .. } => PSI_CLIENT_MASKED,
            Message::PsiServerResponse { .. } => PSI_SERVER_RESPONSE,
            Message::Close => CLOSE,
            Message::Abort(_) => ABORT,
            Message::HeQuerierSets(_) => HE_QUERIER_SETS,
            Message::HePooledMatrix(_) => HE_POOLED_MATRIX,
            Message::HeIndicatorReturn(_) => HE_INDICATOR_RETURN,
            Message::HeFinalCn { .. } => HE_FINAL_CN,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Message::SessionInit(_) => "SessionInit",
            Message::Halt => "Halt",
            Message::Local2Card(_) => "Local2Card",
            Message::PsiClientMasked { .. } => "PsiClientMasked",
            Message::PsiServerResponse { .. } => "PsiServerResponse",
            Message::Close => "Close",
            Message::Abort(_) => "Abort",
            Message::HeQuerierSets(_) => "HeQuerierSets",
            Message::HePooledMatrix(_) => "HePooledMatrix",
            Message::HeIndicatorReturn(_) => "HeIndicatorReturn",
            Message::HeFinalCn { .. } => "HeFinalCn",
        }
    }

    pub fn is_psi(&self) -> bool {
        matches!(self, Message::PsiClientMasked { .. } | Message::PsiServerResponse { .. })
    }

    /// Encodes the complete frame, length prefix included.
    ///
    /// Panics if the message carries group elements and `params` is `None`,
    /// or if a field exceeds its length prefix.
    pub fn encode(&self, params: Option<&GroupParams>) -> Vec<u8> {
        let mut body = Vec::new();
        let need = || params.expect("encoding group elements requires parameters");
        match self {
            Message::SessionInit(init) => {
                body.extend([init.version, init.params.code(), init.mode.code()]);
                put_short_bytes(&mut body, &init.x_id);
                put_short_bytes(&mut body, &init.y_id);
            }
            Message::Halt | Message::Close => {}
            Message::Local2Card(n) => body.extend(n.to_be_bytes()),
            Message::PsiClientMasked { psi_index, elements } => {
                body.push(*psi_index);
                put_elements(&mut body, need(), elements);
            }
            Message::PsiServerResponse { psi_index, remasked, tags } => {
                body.push(*psi_index);
                put_elements(&mut body, need(), remasked);
                put_count(&mut body, tags.len());
                for t in tags {
                    body.extend_from_slice(t);
                }
            }
            Message::Abort(reason) => put_short_bytes(&mut body, reason.as_bytes()),
            Message::HeQuerierSets(sets) => {
                let params = need();
                params.encode_element_into(&sets.public_key, &mut body);
                put_ciphertexts(&mut body, params, &sets.x_side);
                put_ciphertexts(&mut body, params, &sets.y_side);
                put_ciphertexts(&mut body, params, &sets.local);
                put_ciphertext(&mut body, params, &sets.local_count);
            }
            Message::HePooledMatrix(cts) | Message::HeIndicatorReturn(cts) => {
                put_ciphertexts(&mut body, need(), cts)
            }
            Message::HeFinalCn { local2_bound, ct } => {
                body.extend(local2_bound.to_be_bytes());
                put_ciphertext(&mut body, need(), ct);
            }
        }
        frame(self.type_byte(), &body)
    }

    /// Decodes one message body. Element-carrying messages require `params`
    /// and every element is checked for subgroup membership.
    pub fn decode(ty: u8, body: &[u8], params: Option<&GroupParams>) -> Result<Message, WireError> {
        use msg_type::*;
        let mut r = Reader { buf: body };
        let msg = match ty {
            SESSION_INIT => {
                let version = r.u8()?;
                let params = ParamSet::from_code(r.u8()?)
                    .ok_or(WireError::Malformed { what: "SessionInit params code" })?;
                let mode = Mode::from_code(r.u8()?)
                    .ok_or(WireError::Malformed { what: "SessionInit mode code" })?;
                let x_id = r.short_bytes()?.to_vec();
                let y_id = r.short_bytes()?.to_vec();
                Message::SessionInit(SessionInit { version, params, mode, x_id, y_id })
            }
            HALT => Message::Halt,
            CLOSE => Message::Close,
            LOCAL2_CARD => Message::Local2Card(r.u32()?),
            PSI_CLIENT_MASKED => {
                let psi_index = r.psi_index()?;
                let params = params.ok_or(WireError::MissingParams)?;
                Message::PsiClientMasked { psi_index, elements: r.elements(params)? }
            }
            PSI_SERVER_RESPONSE => {
                let psi_index = r.psi_index()?;
                let params = params.ok_or(WireError::MissingParams)?;
                let remasked = r.elements(params)?;
                let n = r.count(TAG_LEN)?;
                let mut tags = Vec::with_capacity(n);
                for _ in 0..n {
                    let mut t = [0u8; TAG_LEN];
                    t.copy_from_slice(r.take(TAG_LEN)?);
                    tags.push(t);
                }
                Message::PsiServerResponse { psi_index, remasked, tags }
            }
            ABORT => {
                let reason = r.short_bytes()?;
                let reason = String::from_utf8(reason.to_vec())
                    .map_err(|_| WireError::Malformed { what: "Abort reason utf-8" })?;
                Message::Abort(reason)
            }
            HE_QUERIER_SETS => {
                let params = params.ok_or(WireError::MissingParams)?;
                let public_key = r.element(params)?;
                let x_side = r.ciphertexts(params)?;
                let y_side = r.ciphertexts(params)?;
                let local = r.ciphertexts(params)?;
                let local_count = r.ciphertext(params)?;
                Message::HeQuerierSets(HeQuerierSets { public_key, x_side, y_side, local, local_count })
            }
            HE_POOLED_MATRIX => {
                Message::HePooledMatrix(r.ciphertexts(params.ok_or(WireError::MissingParams)?)?)
            }
            HE_INDICATOR_RETURN => {
                Message::HeIndicatorReturn(r.ciphertexts(params.ok_or(WireError::MissingParams)?)?)
            }
            HE_FINAL_CN => {
                let local2_bound = r.u32()?;
                let ct = r.ciphertext(params.ok_or(WireError::MissingParams)?)?;
                Message::HeFinalCn { local2_bound, ct }
            }
            other => return Err(WireError::UnknownType(other)),
        };
        if !r.buf.is_empty() {
            return Err(WireError::TrailingBytes(r.buf.len()));
        }
        Ok(msg)
    }

    /// Decodes a complete frame held in memory.
    pub fn decode_frame(frame: &[u8], params: Option<&GroupParams>) -> Result<Message, WireError> {
        if frame.len() < 5 {
            return Err(WireError::Truncated);
        }
        let len = body_len(frame[..4].try_into().expect("4 bytes"))?;
        let rest = &frame[5..];
        if rest.len() < len {
            return Err(WireError::Truncated);
        }
        if rest.len() > len {
            return Err(WireError::TrailingBytes(rest.len() - len));
        }
        Message::decode(frame[4], rest, params)
    }
}

/// Assembles a frame from its type byte and body.
pub fn frame(ty: u8, body: &[u8]) -> Vec<u8> {
    let mut out = Vec::with_capacity(body.len() + 5);
    out.extend((body.len() as u32 + 1).to_be_bytes());
    out.push(ty);
    out.extend_from_slice(body);
    out
}

/// Body length from a length prefix, which also counts the type byte.
fn body_len(prefix: [u8; 4]) -> Result<usize, WireError> {
    match u32::from_be_bytes(prefix) as usize {
        0 => Err(WireError::Malformed { what: "zero length prefix" }),
        n if n - 1 > MAX_BODY_LEN => Err(WireError::FrameTooLarge(n - 1)),
        n => Ok(n - 1),
    }
}

/// Reads one raw frame: `(type, body)`.
pub fn read_frame<R: Read>(r: &mut R) -> Result<(u8, Vec<u8>), WireError> {
    let mut head = [0u8; 5];
    r.read_exact(&mut head).map_err(eof_as_truncated)?;
    let len = body_len(head[..4].try_into().expect("4 bytes"))?;
    let mut body = vec![0u8; len];
    r.read_exact(&mut body).map_err(eof_as_truncated)?;
    Ok((head[4], body))
}

pub fn write_frame<W: Write>(w: &mut W, frame: &[u8]) -> Result<(), WireError> {
    w.write_all(frame)?;
    w.flush()?;
    Ok(())
}

fn eof_as_truncated(e: io::Error) -> WireError {
    if e.kind() == io::ErrorKind::UnexpectedEof {
        WireError::Truncated
    } else {
        WireError::Io(e)
    }
}

fn put_count(out: &mut Vec<u8>, n: usize) {
    out.extend(u32::try_from(n).expect("count fits in u32").to_be_bytes());
}

fn put_short_bytes(out: &mut Vec<u8>, bytes: &[u8]) {
    out.extend(u16::try_from(bytes.len()).expect("field fits in u16").to_be_bytes());
    out.extend_from_slice(bytes);
}

fn put_elements(out: &mut Vec<u8>, params: &GroupParams, elements: &[GroupElement]) {
    put_count(out, elements.len());
    for e in elements {
        params.encode_element_into(e, out);
    }
}

fn put_ciphertext(out: &mut Vec<u8>, params: &GroupParams, ct: &Ciphertext) {
    params.encode_element_into(&ct.c1, out);
    params.encode_element_into(&ct.c2, out);
}

fn put_ciphertexts(out: &mut Vec<u8>, params: &GroupParams, cts: &[Ciphertext]) {
    put_count(out, cts.len());
    for ct in cts {
        put_ciphertext(out, params, ct);
    }
}

struct Reader<'a> {
    buf: &'a [u8],
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8], WireError> {
        if self.buf.len() < n {
            return Err(WireError::Truncated);
        }
        let (head, tail) = self.buf.split_at(n);
        self.buf = tail;
        Ok(head)
    }

    fn u8(&mut self) -> Result<u8, WireError> {
        Ok(self.take(1)?[0])
    }

    fn u32(&mut self) -> Result<u32, WireError> {
        Ok(u32::from_be_bytes(self.take(4)?.try_into().expect("4 bytes")))
    }

    fn short_bytes(&mut self) -> Result<&'a [u8], WireError> {
        let n = u16::from_be_bytes(self.take(2)?.try_into().expect("2 bytes")) as usize;
        self.take(n)
    }

    fn psi_index(&mut self) -> Result<u8, WireError> {
        match self.u8()? {
            i @ 1..=3 => Ok(i),
            _ => Err(WireError::Malformed { what: "psi_index" }),
        }
    }

    /// Reads a count and checks that `count * item_len` bytes remain.
    fn count(&mut self, item_len: usize) -> Result<usize, WireError> {
        let n = self.u32()? as usize;
        if n.checked_mul(item_len).is_none_or(|total| total > self.buf.len()) {
            return Err(WireError::Truncated);
        }
        Ok(n)
    }

    fn element(&mut self, params: &GroupParams) -> Result<GroupElement, WireError> {
        let bytes = self.take(params.element_len())?;
        Ok(params.decode_element(bytes)?)
    }

    fn elements(&mut self, params: &GroupParams) -> Result<Vec<GroupElement>, WireError> {
        let n = self.count(params.element_len())?;
        (0..n).map(|_| self.element(params)).collect()
    }

    fn ciphertext(&mut self, params: &GroupParams) -> Result<Ciphertext, WireError> {
        Ok(Ciphertext { c1: self.element(params)?, c2: self.element(params)? })
    }

    fn ciphertexts(&mut self, params: &GroupParams) -> Result<Vec<Ciphertext>, WireError> {
        let n = self.count(2 * params.element_len())?;
        (0..n).map(|_| self.ciphertext(params)).collect()
    }
}
