//! Prime-order subgroup of `Z_p^*` and scalar arithmetic modulo `q`.
//!
//! Two parameter sets are embedded: `toy` (|p| = 1024, |q| = 160) for
//! benchmark comparability and `secure` (|p| = 2048, |q| = 224). Both were
//! produced once by `scripts/gen_params.py`:
//!
//! 1. `q` is the first prime at or above a SHA-256-expanded seed of |q| bits
//!    (top bit forced).
//! 2. `p = k*q + 1` where `k` is the first even value at or above
//!    `floor(2^(|p|-1) / q)` plus a SHA-256-expanded offset for which `p` is
//!    prime.
//! 3. `g = h^((p-1)/q) mod p` for the smallest `h >= 2` giving `g != 1`.
//!
//! The two random oracles are SHA-256 based. `hash_to_group` expands
//! `len(label) || "LPP-H1" || id` to `|p|/8 + 16` bytes, reduces modulo `p`
//! and raises to the cofactor `(p-1)/q`; an identity result is retried with
//! an appended counter byte. `tag_hash` is
//! `SHA-256(len(label) || "LPP-H2" || encode(e))`.

use std::cell::Cell;
use std::fmt;
use std::str::FromStr;

use num_bigint::{BigUint, RandBigInt};
use num_integer::Integer;
use num_traits::{One, Zero};
use once_cell::sync::Lazy;
use rand::seq::SliceRandom;
use rand::{CryptoRng, RngCore, SeedableRng};
use sha2::{Digest, Sha256};
use thiserror::Error;

pub const TAG_LEN: usize = 32;

/// Output of the tag oracle.
pub type Tag = [u8; TAG_LEN];

const H1_LABEL: &[u8] = b"LPP-H1";
const H2_LABEL: &[u8] = b"LPP-H2";

const TOY_P: &str = "96938973b1a76a6a8f8a9346cfc2b39e3cd7a83f668bcc2cadd3634ac4c2ad4e885a3455425cae884a86b3b0da087b9933b3d2f113b9ac7ea6737b8345ec470d3411980f67593a289be7a7786dc58b6a9bfe6f65051eab39d98c6161bda7f8255c1f7a978b9489617f97aa541bd9c62daee2414760f00b5069fe335718381835";
const TOY_Q: &str = "8eb2d1df139298f91a3565cfbace08a678d59725";
const TOY_G: &str = "932392d769392ee088e0179c2eccd768da8acf183c805809eae36c9bad0bac861a9c0769c4da8911589be60a26e6f50e09661edfb2fc247cd8467d25dee6a1d1c0598214231511c1d645946f3d97ca13f2dc3eff127682c4e869487e6bf29c6f0a727e5d779ec9b4bccc7075d1363ac276958d94bb3cdaba54fc4b54c0ea4161";

const SECURE_P: &str = "a30db48a3cfb87512e8455315615ca3c89508684e6c2c11f7acaf2b608199244f533028b8a94158ef2defe56cb2f04c04db3c53508be8a56f468a1de71f639fed6d4517d2a3bb33e71628064bda170ff97ba4e8ef0680c199b7d143045584258d7523bd53a37293f467e18f813afa53c668a5d4bd8f1fee143b542fbde0ed3f3c4644ed34fad708ffbda7043425a9bd3897130b0582f7d05b5ad41206a465f86738f39a560829ec40fec5d27c2e6a2d8a04b461bda7839fd0c69e7f21d034363741c2b766cee44c24c8c38f0bf1685966a9c976aa775afcd76dd8aa951ce15960d26fc7b7dc1eec4831818a38e431c1b13e573c56d97ef00fc17c1b8c25cc323";
const SECURE_Q: &str = "a9f15901035fb4ebc77ae6c191885cd79b0271f016f37d34001311b3";
const SECURE_G: &str = "5373910fb3f3424fa5904798f0d5b267c2fa3741444750be8cd75635f413f5edae2b717999fcc4b33ec031b169a362d62b3641d6a36f7a10316c8379b833a22a57131368fd144d41f51feda789650c17fd0dadd5613baded22ebf0687bc78a1fa50c83416c0fa51bd315028a31d704d8d815f187ee8ecfa30e6b653f87ab4bc27ce60786a39a4bf582b1fe1ea4ed2da68f6470bd983e30126d08a3f3ea52dabe61fe2b5fdb58aa1dec1a11a08530774b81855e3fe777ce6284294d2ca7aa0d9b19483023a698fe1c790250b5f3f2bc32afc54fb7873d2a574269be7756d87cd58af99f6120be8d792f9a4d8b94ce957f72449b62f9df4d7d383854c855a3281e";

static TOY: Lazy<GroupParams> = Lazy::new(|| GroupParams::from_hex(ParamSet::Toy, TOY_P, TOY_Q, TOY_G));
static SECURE: Lazy<GroupParams> =
    Lazy::new(|| GroupParams::from_hex(ParamSet::Secure, SECURE_P, SECURE_Q, SECURE_G));

thread_local! {
    static EXPONENTIATIONS: Cell<u64> = const { Cell::new(0) };
}

/// Number of modular exponentiations performed on the calling thread.
pub fn exponentiations() -> u64 {
    EXPONENTIATIONS.with(Cell::get)
}

fn count_exp() {
    EXPONENTIATIONS.with(|c| c.set(c.get() + 1));
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum GroupError {
    #[error("empty identifier")]
    EmptyInput,
    #[error("zero has no inverse modulo q")]
    NoInverse,
    #[error("expected {expected} bytes, got {got}")]
    BadLength { expected: usize, got: usize },
    #[error("value out of range")]
    OutOfRange,
    #[error("value is not a member of the order-q subgroup")]
    NotInSubgroup,
    #[error("unknown parameter set {0:?}")]
    UnknownParamSet(String),
    #[error("hash-to-group exhausted its retry counter")]
    HashExhausted,
}

/// Name of an embedded parameter set.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ParamSet {
    Toy,
    Secure,
}

impl ParamSet {
    pub fn params(self) -> &'static GroupParams {
        match self {
            ParamSet::Toy => &TOY,
            ParamSet::Secure => &SECURE,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            ParamSet::Toy => "toy",
            ParamSet::Secure => "secure",
        }
    }

    /// Single-byte code used on the wire.
    pub fn code(self) -> u8 {
        match self {
            ParamSet::Toy => 0,
            ParamSet::Secure => 1,
        }
    }

    pub fn from_code(code: u8) -> Option<Self> {
        match code {
            0 => Some(ParamSet::Toy),
            1 => Some(ParamSet::Secure),
            _ => None,
        }
    }
}

impl fmt::Display for ParamSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ParamSet {
    type Err = GroupError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "toy" => Ok(ParamSet::Toy),
            "secure" => Ok(ParamSet::Secure),
            other => Err(GroupError::UnknownParamSet(other.to_string())),
        }
    }
}

/// An element of the order-q subgroup, always stored reduced in `[1, p-1]`.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct GroupElement(BigUint);

impl GroupElement {
    pub fn value(&self) -> &BigUint {
        &self.0
    }

    pub fn is_identity(&self) -> bool {
        self.0.is_one()
    }
}

impl fmt::Debug for GroupElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let hex = self.0.to_str_radix(16);
        if hex.len() > 16 {
            write!(f, "GroupElement({}..)", &hex[..16])
        } else {
            write!(f, "GroupElement({hex})")
        }
    }
}

/// An integer modulo `q`.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Scalar(BigUint);

impl Scalar {
    pub fn value(&self) -> &BigUint {
        &self.0
    }

    pub fn is_zero(&self) -> bool {
        self.0.is_zero()
    }
}

impl fmt::Debug for Scalar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Scalar({})", self.0.to_str_radix(16))
    }
}

/// Schnorr group parameters: `q | p - 1` and `g` generates the order-q subgroup.
pub struct GroupParams {
    set: ParamSet,
    p: BigUint,
    q: BigUint,
    g: BigUint,
    cofactor: BigUint,
    element_len: usize,
    scalar_len: usize,
}

impl fmt::Debug for GroupParams {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("GroupParams")
            .field("set", &self.set)
            .field("p_bits", &self.p.bits())
            .field("q_bits", &self.q.bits())
            .finish()
    }
}

impl GroupParams {
    fn from_hex(set: ParamSet, p: &str, q: &str, g: &str) -> Self {
        let parse = |s: &str| BigUint::parse_bytes(s.as_bytes(), 16).expect("embedded constant");
        let (p, q, g) = (parse(p), parse(q), parse(g));
        let cofactor = (&p - 1u32) / &q;
        let element_len = (p.bits() as usize).div_ceil(8);
        let scalar_len = (q.bits() as usize).div_ceil(8);
        GroupParams { set, p, q, g, cofactor, element_len, scalar_len }
    }

    pub fn toy() -> &'static GroupParams {
        &TOY
    }

    pub fn secure() -> &'static GroupParams {
        &SECURE
    }

    pub fn set(&self) -> ParamSet {
        self.set
    }

    pub fn p(&self) -> &BigUint {
        &self.p
    }

    pub fn q(&self) -> &BigUint {
        &self.q
    }

    pub fn element_len(&self) -> usize {
        self.element_len
    }

    pub fn scalar_len(&self) -> usize {
        self.scalar_len
    }

    pub fn generator(&self) -> GroupElement {
        GroupElement(self.g.clone())
    }

    pub fn identity(&self) -> GroupElement {
        GroupElement(BigUint::one())
    }

    /// Checks the structural invariants of the parameter set, including
    /// probabilistic primality of `p` and `q`.
    pub fn validate(&self) -> bool {
        let one = BigUint::one();
        (&self.p - &one).is_multiple_of(&self.q)
            && self.g != one
            && self.g < self.p
            && self.g.modpow(&self.q, &self.p) == one
            && is_probable_prime(&self.q, 32)
            && is_probable_prime(&self.p, 32)
    }

    /// Subgroup membership: `1 <= v < p` and `v^q = 1 mod p`.
    pub fn contains(&self, v: &BigUint) -> bool {
        if v.is_zero() || v >= &self.p {
            return false;
        }
        count_exp();
        v.modpow(&self.q, &self.p).is_one()
    }

    pub fn element_from_biguint(&self, v: BigUint) -> Result<GroupElement, GroupError> {
        if v.is_zero() || v >= self.p {
            return Err(GroupError::OutOfRange);
        }
        if !self.contains(&v) {
            return Err(GroupError::NotInSubgroup);
        }
        Ok(GroupElement(v))
    }

    /// Fixed-width big-endian encoding.
    pub fn encode_element(&self, e: &GroupElement) -> Vec<u8> {
        to_fixed_be(&e.0, self.element_len)
    }

    pub fn encode_element_into(&self, e: &GroupElement, out: &mut Vec<u8>) {
        out.extend_from_slice(&to_fixed_be(&e.0, self.element_len));
    }

    /// Decodes and validates a fixed-width element encoding.
    pub fn decode_element(&self, bytes: &[u8]) -> Result<GroupElement, GroupError> {
        if bytes.len() != self.element_len {
            return Err(GroupError::BadLength { expected: self.element_len, got: bytes.len() });
        }
        self.element_from_biguint(BigUint::from_bytes_be(bytes))
    }

    pub fn scalar(&self, v: BigUint) -> Scalar {
        Scalar(v % &self.q)
    }

    pub fn scalar_from_u64(&self, v: u64) -> Scalar {
        self.scalar(BigUint::from(v))
    }

    pub fn encode_scalar(&self, s: &Scalar) -> Vec<u8> {
        to_fixed_be(&s.0, self.scalar_len)
    }

    pub fn decode_scalar(&self, bytes: &[u8]) -> Result<Scalar, GroupError> {
        if bytes.len() != self.scalar_len {
            return Err(GroupError::BadLength { expected: self.scalar_len, got: bytes.len() });
        }
        let v = BigUint::from_bytes_be(bytes);
        if v >= self.q {
            return Err(GroupError::OutOfRange);
        }
        Ok(Scalar(v))
    }

    pub fn exp(&self, e: &GroupElement, s: &Scalar) -> GroupElement {
        count_exp();
        GroupElement(e.0.modpow(&s.0, &self.p))
    }

    /// `g^s`.
    pub fn exp_g(&self, s: &Scalar) -> GroupElement {
        count_exp();
        GroupElement(self.g.modpow(&s.0, &self.p))
    }

    pub fn mul(&self, a: &GroupElement, b: &GroupElement) -> GroupElement {
        GroupElement((&a.0 * &b.0) % &self.p)
    }

    /// Inverse in the subgroup, computed as `e^(q-1)`.
    pub fn invert(&self, e: &GroupElement) -> GroupElement {
        count_exp();
        GroupElement(e.0.modpow(&(&self.q - 1u32), &self.p))
    }

    pub fn scalar_add(&self, a: &Scalar, b: &Scalar) -> Scalar {
        Scalar((&a.0 + &b.0) % &self.q)
    }

    pub fn scalar_sub(&self, a: &Scalar, b: &Scalar) -> Scalar {
        Scalar((&a.0 + &self.q - &b.0) % &self.q)
    }

    pub fn scalar_mul(&self, a: &Scalar, b: &Scalar) -> Scalar {
        Scalar((&a.0 * &b.0) % &self.q)
    }

    /// Multiplicative inverse modulo the prime `q` (Fermat).
    pub fn scalar_inv(&self, s: &Scalar) -> Result<Scalar, GroupError> {
        if s.0.is_zero() {
            return Err(GroupError::NoInverse);
        }
        Ok(Scalar(s.0.modpow(&(&self.q - 2u32), &self.q)))
    }

    /// Uniform scalar in `[1, q-1]`.
    pub fn rand_scalar<R: RngCore + CryptoRng>(&self, rng: &mut R) -> Scalar {
        Scalar(rng.gen_biguint_range(&BigUint::one(), &self.q))
    }

    /// Random-oracle hash of an identifier into the subgroup, never the identity.
    pub fn hash_to_group(&self, id: &[u8]) -> Result<GroupElement, GroupError> {
        if id.is_empty() {
            return Err(GroupError::EmptyInput);
        }
        let wide_len = self.element_len + 16;
        let mut msg = Vec::with_capacity(id.len() + H1_LABEL.len() + 2);
        msg.push(H1_LABEL.len() as u8);
        msg.extend_from_slice(H1_LABEL);
        msg.extend_from_slice(id);
        for attempt in 0u16..=255 {
            if attempt > 0 {
                msg.push(attempt as u8);
            }
            let mut wide = Vec::with_capacity(wide_len + 32);
            let mut block = 0u32;
            while wide.len() < wide_len {
                let mut h = Sha256::new();
                h.update(block.to_be_bytes());
                h.update(&msg);
                wide.extend_from_slice(&h.finalize());
                block += 1;
            }
            wide.truncate(wide_len);
            if attempt > 0 {
                msg.pop();
            }
            let reduced = BigUint::from_bytes_be(&wide) % &self.p;
            if reduced.is_zero() {
                continue;
            }
            count_exp();
            let e = reduced.modpow(&self.cofactor, &self.p);
            if !e.is_one() {
                return Ok(GroupElement(e));
            }
        }
        Err(GroupError::HashExhausted)
    }

    /// Random-oracle tag of a group element.
    pub fn tag_hash(&self, e: &GroupElement) -> Tag {
        let mut h = Sha256::new();
        h.update([H2_LABEL.len() as u8]);
        h.update(H2_LABEL);
        h.update(self.encode_element(e));
        h.finalize().into()
    }
}

/// Uniformly random permutation of `0..n`.
pub fn rand_permutation<R: RngCore + CryptoRng>(n: usize, rng: &mut R) -> Vec<usize> {
    let mut perm: Vec<usize> = (0..n).collect();
    perm.shuffle(rng);
    perm
}

fn to_fixed_be(v: &BigUint, len: usize) -> Vec<u8> {
    let raw = v.to_bytes_be();
    debug_assert!(raw.len() <= len);
    let mut out = vec![0u8; len - raw.len()];
    out.extend_from_slice(&raw);
    out
}

/// Miller-Rabin with small-prime trial division and `rounds` random bases
/// drawn from a fixed-seed generator.
pub fn is_probable_prime(n: &BigUint, rounds: usize) -> bool {
    const SMALL: [u32; 15] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47];
    let two = BigUint::from(2u32);
    if n < &two {
        return false;
    }
    for p in SMALL {
        let p = BigUint::from(p);
        if n == &p {
            return true;
        }
        if (n % &p).is_zero() {
            return false;
        }
    }
    let n_minus_1 = n - 1u32;
    let s = n_minus_1.trailing_zeros().unwrap_or(0);
    let d = &n_minus_1 >> s;
    let mut rng = rand_chacha::ChaCha20Rng::seed_from_u64(0x5eed);
    'witness: for _ in 0..rounds {
        let a = rng.gen_biguint_range(&two, &n_minus_1);
        let mut x = a.modpow(&d, n);
        if x.is_one() || x == n_minus_1 {
            continue;
        }
        for _ in 1..s {
            x = x.modpow(&two, n);
            if x == n_minus_1 {
                continue 'witness;
            }
        }
        return false;
    }
    true
}
