//! Exponential ElGamal over the order-q subgroup: `E(m) = (g^r, pk^r * g^m)`.
//!
//! Additively homomorphic in `m` modulo `q`. Decryption only recovers small
//! plaintexts (bounded search) or tests for zero.

mod session;

use rand::{CryptoRng, RngCore};
use thiserror::Error;

use crate::group::{GroupElement, GroupError, GroupParams, Scalar};

pub use session::{
    answer_pool, build_pool, encrypt_querier_sets, finish_pool, run_he_querier,
    run_he_responder, Matrix, PoolOrigin, PooledMatrix,
};
pub(crate) use session::serve_he;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum HeError {
    #[error("plaintext is not in [0, {bound}]")]
    OutOfRange { bound: u64 },
    #[error("blinding factor must be non-zero")]
    ZeroBlinding,
    #[error(transparent)]
    Group(#[from] GroupError),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Ciphertext {
    pub c1: GroupElement,
    pub c2: GroupElement,
}

/// Encryption key with its group.
#[derive(Debug, Clone)]
pub struct PublicKey {
    params: &'static GroupParams,
    pk: GroupElement,
}

#[derive(Debug, Clone)]
pub struct HeKeyPair {
    sk: Scalar,
    public: PublicKey,
}

impl HeKeyPair {
    pub fn generate<R: RngCore + CryptoRng>(params: &'static GroupParams, rng: &mut R) -> Self {
        let sk = params.rand_scalar(rng);
        let pk = params.exp_g(&sk);
        HeKeyPair { sk, public: PublicKey { params, pk } }
    }

    pub fn public(&self) -> &PublicKey {
        &self.public
    }

    pub fn secret(&self) -> &Scalar {
        &self.sk
    }

    fn shared_mask(&self, ct: &Ciphertext) -> GroupElement {
        self.public.params.exp(&ct.c1, &self.sk)
    }

    /// True iff the plaintext is 0 mod q.
    pub fn decrypt_is_zero(&self, ct: &Ciphertext) -> bool {
        self.shared_mask(ct) == ct.c2
    }

    /// Recovers `m` when `0 <= m <= bound` by linear search over `g^m`.
    pub fn decrypt_small(&self, ct: &Ciphertext, bound: u64) -> Result<u64, HeError> {
        let params = self.public.params;
        let target = params.mul(&ct.c2, &params.invert(&self.shared_mask(ct)));
        let g = params.generator();
        let mut acc = params.identity();
        for m in 0..=bound {
            if acc == target {
                return Ok(m);
            }
            acc = params.mul(&acc, &g);
        }
        Err(HeError::OutOfRange { bound })
    }
}

impl PublicKey {
    /// Wraps a received key; the element is already subgroup-validated.
    pub fn from_element(params: &'static GroupParams, pk: GroupElement) -> Self {
        PublicKey { params, pk }
    }

    pub fn element(&self) -> &GroupElement {
        &self.pk
    }

    pub fn params(&self) -> &'static GroupParams {
        self.params
    }

    pub fn encrypt<R: RngCore + CryptoRng>(&self, m: &Scalar, rng: &mut R) -> Ciphertext {
        let p = self.params;
        let r = p.rand_scalar(rng);
        Ciphertext { c1: p.exp_g(&r), c2: p.mul(&p.exp(&self.pk, &r), &p.exp_g(m)) }
    }

    pub fn encrypt_u64<R: RngCore + CryptoRng>(&self, m: u64, rng: &mut R) -> Ciphertext {
        self.encrypt(&self.params.scalar_from_u64(m), rng)
    }

    /// Same plaintext under fresh randomness.
    pub fn rerandomize<R: RngCore + CryptoRng>(&self, ct: &Ciphertext, rng: &mut R) -> Ciphertext {
        add(self.params, ct, &self.encrypt_u64(0, rng))
    }

    /// `(ct - E(id_b)) * r`: plaintext is zero iff the identifiers match,
    /// uniformly random otherwise.
    pub fn blinded_difference(
        &self,
        ct_a: &Ciphertext,
        id_b: &[u8],
        r: &Scalar,
    ) -> Result<Ciphertext, HeError> {
        let b = id_plaintext(self.params, id_b)?;
        self.blinded_difference_plain(ct_a, &b, r)
    }

    /// [`blinded_difference`](Self::blinded_difference) with the identifier
    /// already mapped to its plaintext.
    pub fn blinded_difference_plain(
        &self,
        ct_a: &Ciphertext,
        b: &Scalar,
        r: &Scalar,
    ) -> Result<Ciphertext, HeError> {
        if r.is_zero() {
            return Err(HeError::ZeroBlinding);
        }
        let p = self.params;
        let diff = Ciphertext {
            c1: ct_a.c1.clone(),
            c2: p.mul(&ct_a.c2, &p.exp_g(&p.scalar_sub(&p.scalar_from_u64(0), b))),
        };
        Ok(scalar_mul(p, &diff, r))
    }
}

/// Plaintext encoding of an identifier: the first 16 bytes of
/// `tag_hash(hash_to_group(id))` as an integer mod q.
pub fn id_plaintext(params: &GroupParams, id: &[u8]) -> Result<Scalar, GroupError> {
    let tag = params.tag_hash(&params.hash_to_group(id)?);
    Ok(params.scalar(num_bigint::BigUint::from_bytes_be(&tag[..16])))
}

pub fn add(params: &GroupParams, a: &Ciphertext, b: &Ciphertext) -> Ciphertext {
    Ciphertext { c1: params.mul(&a.c1, &b.c1), c2: params.mul(&a.c2, &b.c2) }
}

pub fn sub(params: &GroupParams, a: &Ciphertext, b: &Ciphertext) -> Ciphertext {
    let neg = Ciphertext { c1: params.invert(&b.c1), c2: params.invert(&b.c2) };
    add(params, a, &neg)
}

pub fn scalar_mul(params: &GroupParams, ct: &Ciphertext, s: &Scalar) -> Ciphertext {
    Ciphertext { c1: params.exp(&ct.c1, s), c2: params.exp(&ct.c2, s) }
}

/// `E(0)` with zero randomness; the neutral element for [`add`].
pub fn trivial_zero(params: &GroupParams) -> Ciphertext {
    Ciphertext { c1: params.identity(), c2: params.identity() }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha20Rng;

    fn setup(seed: u64) -> (HeKeyPair, ChaCha20Rng) {
        let mut rng = ChaCha20Rng::seed_from_u64(seed);
        (HeKeyPair::generate(GroupParams::toy(), &mut rng), rng)
    }

    #[test]
    fn keypair_relation() {
        let (kp, _) = setup(1);
        let p = GroupParams::toy();
        assert_eq!(kp.public().element(), &p.exp_g(kp.secret()));
    }

    #[test]
    fn roundtrip_small() {
        let (kp, mut rng) = setup(2);
        let ct = kp.public().encrypt_u64(5, &mut rng);
        assert_eq!(kp.decrypt_small(&ct, 10), Ok(5));
        assert_eq!(kp.decrypt_small(&ct, 5), Ok(5));
        assert!(kp.decrypt_is_zero(&kp.public().encrypt_u64(0, &mut rng)));
        assert!(!kp.decrypt_is_zero(&ct));
    }

    #[test]
    fn decrypt_beyond_bound_fails() {
        let (kp, mut rng) = setup(3);
        let ct = kp.public().encrypt_u64(11, &mut rng);
        assert_eq!(kp.decrypt_small(&ct, 10), Err(HeError::OutOfRange { bound: 10 }));
    }

    #[test]
    fn homomorphic_ops() {
        let (kp, mut rng) = setup(4);
        let p = GroupParams::toy();
        let pk = kp.public();
        let sum = add(p, &pk.encrypt_u64(2, &mut rng), &pk.encrypt_u64(3, &mut rng));
        assert_eq!(kp.decrypt_small(&sum, 100), Ok(5));
        let zero = scalar_mul(p, &pk.encrypt_u64(4, &mut rng), &p.scalar_from_u64(0));
        assert_eq!(kp.decrypt_small(&zero, 100), Ok(0));
        let scaled = scalar_mul(p, &pk.encrypt_u64(4, &mut rng), &p.scalar_from_u64(3));
        assert_eq!(kp.decrypt_small(&scaled, 100), Ok(12));
        let diff = sub(p, &pk.encrypt_u64(9, &mut rng), &pk.encrypt_u64(4, &mut rng));
        assert_eq!(kp.decrypt_small(&diff, 100), Ok(5));
        let seven = pk.encrypt_u64(7, &mut rng);
        let fresh = pk.rerandomize(&seven, &mut rng);
        assert_ne!(fresh, seven);
        assert_eq!(kp.decrypt_small(&fresh, 100), Ok(7));
        assert_eq!(kp.decrypt_small(&add(p, &seven, &trivial_zero(p)), 100), Ok(7));
    }

    #[test]
    fn blinded_difference_detects_equality() {
        let (kp, mut rng) = setup(5);
        let p = GroupParams::toy();
        let pk = kp.public();
        let alice = pk.encrypt(&id_plaintext(p, b"alice").unwrap(), &mut rng);
        let r = p.rand_scalar(&mut rng);
        assert!(kp.decrypt_is_zero(&pk.blinded_difference(&alice, b"alice", &r).unwrap()));
        for other in ["bob", "carol", "alicf"] {
            let d = pk.blinded_difference(&alice, other.as_bytes(), &r).unwrap();
            assert!(!kp.decrypt_is_zero(&d), "{other}");
        }
        assert_eq!(
            pk.blinded_difference(&alice, b"alice", &p.scalar_from_u64(0)),
            Err(HeError::ZeroBlinding)
        );
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(12))]

        #[test]
        fn sum_of_encryptions(ms in proptest::collection::vec(0u64..20, 0..8), seed in any::<u64>()) {
            let (kp, mut rng) = setup(seed);
            let p = GroupParams::toy();
            let total = ms
                .iter()
                .map(|&m| kp.public().encrypt_u64(m, &mut rng))
                .fold(trivial_zero(p), |acc, ct| add(p, &acc, &ct));
            prop_assert_eq!(kp.decrypt_small(&total, 200).unwrap(), ms.iter().sum::<u64>());
        }
    }
}
