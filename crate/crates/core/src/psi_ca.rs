//! DDH-based private set intersection cardinality.
//!
//! The client masks `H(c_i)^{R_c}`. The server publishes shuffled tags
//! `H'(H(s_j)^{R_s})`, re-masks the client's elements with `R_s` and
//! shuffles them. The client strips `R_c` and counts tag matches, learning
//! `|C ∩ S|` and nothing about which of its items matched.

use std::collections::HashSet;

use rand::{CryptoRng, RngCore};
use thiserror::Error;

use crate::group::{rand_permutation, GroupElement, GroupError, GroupParams, Scalar, Tag};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum PsiError {
    #[error("received {got} re-masked elements for {expected} masked items")]
    LengthMismatch { expected: usize, got: usize },
    #[error("received element is not a valid subgroup member")]
    InvalidElement,
    #[error(transparent)]
    Group(#[from] GroupError),
}

/// Client (querier) side of one PSI-CA run.
pub struct PsiClientState {
    params: &'static GroupParams,
    r_c: Scalar,
    items: Vec<Vec<u8>>,
    masked: Vec<GroupElement>,
}

impl std::fmt::Debug for PsiClientState {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("PsiClientState").field("items", &self.items.len()).finish_non_exhaustive()
    }
}

/// Server (responder) side of one PSI-CA run.
pub struct PsiServerState {
    params: &'static GroupParams,
    r_s: Scalar,
    items: Vec<Vec<u8>>,
    server_tags: Vec<Tag>,
}

impl std::fmt::Debug for PsiServerState {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("PsiServerState").field("items", &self.items.len()).finish_non_exhaustive()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PsiResult {
    pub cardinality: usize,
}

fn dedup<I, T>(items: I) -> Vec<Vec<u8>>
where
    I: IntoIterator<Item = T>,
    T: AsRef<[u8]>,
{
    let mut seen = HashSet::new();
    let mut out = Vec::new();
    for item in items {
        let item = item.as_ref();
        if seen.insert(item.to_vec()) {
            out.push(item.to_vec());
        }
    }
    out
}

/// Offline client step: `a_i = H(c_i)^{R_c}` in (deduplicated) input order.
pub fn client_offline<I, T, R>(
    items: I,
    params: &'static GroupParams,
    rng: &mut R,
) -> Result<PsiClientState, PsiError>
where
    I: IntoIterator<Item = T>,
    T: AsRef<[u8]>,
    R: RngCore + CryptoRng,
{
    let items = dedup(items);
    let r_c = params.rand_scalar(rng);
    let masked = items
        .iter()
        .map(|c| Ok(params.exp(&params.hash_to_group(c)?, &r_c)))
        .collect::<Result<Vec<_>, GroupError>>()?;
    Ok(PsiClientState { params, r_c, items, masked })
}

/// Offline server step: shuffled tags `H'(H(s_j)^{R_s})`.
pub fn server_offline<I, T, R>(
    items: I,
    params: &'static GroupParams,
    rng: &mut R,
) -> Result<PsiServerState, PsiError>
where
    I: IntoIterator<Item = T>,
    T: AsRef<[u8]>,
    R: RngCore + CryptoRng,
{
    let items = dedup(items);
    let r_s = params.rand_scalar(rng);
    let tags = items
        .iter()
        .map(|s| Ok(params.tag_hash(&params.exp(&params.hash_to_group(s)?, &r_s))))
        .collect::<Result<Vec<_>, GroupError>>()?;
    let server_tags = apply_permutation(tags, &rand_permutation(items.len(), rng));
    Ok(PsiServerState { params, r_s, items, server_tags })
}

fn apply_permutation<T: Clone>(values: Vec<T>, perm: &[usize]) -> Vec<T> {
    perm.iter().map(|&i| values[i].clone()).collect()
}

impl PsiClientState {
    pub fn params(&self) -> &'static GroupParams {
        self.params
    }

    pub fn items(&self) -> &[Vec<u8>] {
        &self.items
    }

    pub fn masked(&self) -> &[GroupElement] {
        &self.masked
    }

    /// Strips `R_c` from the server's re-masked elements and counts how many
    /// land in the server tag set.
    pub fn finalize(
        &self,
        remasked_shuffled: &[GroupElement],
        server_tags: &[Tag],
    ) -> Result<PsiResult, PsiError> {
        if remasked_shuffled.len() != self.masked.len() {
            return Err(PsiError::LengthMismatch {
                expected: self.masked.len(),
                got: remasked_shuffled.len(),
            });
        }
        if self.masked.is_empty() || server_tags.is_empty() {
            return Ok(PsiResult { cardinality: 0 });
        }
        let params = self.params;
        let unmask = params.scalar_inv(&self.r_c)?;
        let server: HashSet<&Tag> = server_tags.iter().collect();
        let cardinality = remasked_shuffled
            .iter()
            .map(|o| params.tag_hash(&params.exp(o, &unmask)))
            .collect::<HashSet<Tag>>()
            .iter()
            .filter(|t| server.contains(t))
            .count();
        Ok(PsiResult { cardinality })
    }
}

impl PsiServerState {
    pub fn params(&self) -> &'static GroupParams {
        self.params
    }

    pub fn items(&self) -> &[Vec<u8>] {
        &self.items
    }

    pub fn server_tags(&self) -> &[Tag] {
        &self.server_tags
    }

    /// Online server step: re-masks each client element with `R_s` and
    /// shuffles under a fresh permutation.
    pub fn respond<R: RngCore + CryptoRng>(
        &self,
        client_masked: &[GroupElement],
        rng: &mut R,
    ) -> Result<(Vec<GroupElement>, Vec<Tag>), PsiError> {
        let params = self.params;
        if client_masked.iter().any(|a| a.is_identity() || a.value() >= params.p()) {
            return Err(PsiError::InvalidElement);
        }
        let remasked: Vec<GroupElement> =
            client_masked.iter().map(|a| params.exp(a, &self.r_s)).collect();
        let perm = rand_permutation(remasked.len(), rng);
        Ok((apply_permutation(remasked, &perm), self.server_tags.clone()))
    }
}

/// Runs both roles in-process and returns the client's result.
pub fn run_local<C, S, R>(
    client_items: C,
    server_items: S,
    params: &'static GroupParams,
    rng: &mut R,
) -> Result<PsiResult, PsiError>
where
    C: IntoIterator,
    C::Item: AsRef<[u8]>,
    S: IntoIterator,
    S::Item: AsRef<[u8]>,
    R: RngCore + CryptoRng,
{
    let client = client_offline(client_items, params, rng)?;
    let server = server_offline(server_items, params, rng)?;
    let (remasked, tags) = server.respond(client.masked(), rng)?;
    client.finalize(&remasked, &tags)
}
