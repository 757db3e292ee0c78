//! Encrypted-matrix variant of the common-neighbour session.
//!
//! The querier sends encrypted identifiers; the responder evaluates every
//! cell of the crossover and overlap matrices as a blinded difference, hides
//! the cells in a shuffled pool with dummy entries, and has the querier turn
//! each pooled entry into an encrypted equality bit. The responder sums the
//! bits per matrix and returns only `E(cn)`.
//!
//! Residual leakage: the querier sees how many pooled entries decrypt to
//! zero, i.e. `cr1 + cr2 + overlap + zero dummies`.

use std::io::{Read, Write};
use std::time::Instant;

use rand::{CryptoRng, Rng, RngCore};

use super::{add, id_plaintext, sub, trivial_zero, Ciphertext, HeKeyPair, PublicKey};
use crate::graph::{Graph, NeighbourSet, NodeId};
use crate::group::{rand_permutation, Scalar};
use crate::protocol::{
    guarded, open_session, prepare_inputs, unexpected, PreparedSets, ProtocolError, QueryOutcome,
    QueryReport, QuerySpec, ResponderConfig,
};
use crate::transport::{Connection, SessionOutcome, SessionTranscript};
use crate::wire::{HeQuerierSets, Message, Mode};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Matrix {
    /// Querier `nx1` against responder `ny2`.
    Crossover1,
    /// Querier `ny1` against responder `nx2`.
    Crossover2,
    /// Querier `local1` against responder `local2`.
    Overlap,
}

/// Where a pooled entry came from; known to the responder only.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PoolOrigin {
    Cell { matrix: Matrix, row: usize, col: usize },
    Dummy { zero: bool },
}

/// The shuffled pool and the responder's private record of its layout.
#[derive(Debug, Clone)]
pub struct PooledMatrix {
    pub entries: Vec<Ciphertext>,
    pub origins: Vec<PoolOrigin>,
}

impl PooledMatrix {
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn real_cells(&self) -> usize {
        self.origins.iter().filter(|o| matches!(o, PoolOrigin::Cell { .. })).count()
    }
}

fn encrypt_ids<R: RngCore + CryptoRng>(
    pk: &PublicKey,
    set: &NeighbourSet,
    rng: &mut R,
) -> Result<Vec<Ciphertext>, ProtocolError> {
    set.iter()
        .map(|v| Ok(pk.encrypt(&id_plaintext(pk.params(), v.as_bytes())?, rng)))
        .collect()
}

/// The querier's only message: encrypted crossover and local sets plus the
/// encrypted local count.
pub fn encrypt_querier_sets<R: RngCore + CryptoRng>(
    keys: &HeKeyPair,
    sets: &PreparedSets,
    rng: &mut R,
) -> Result<HeQuerierSets, ProtocolError> {
    let pk = keys.public();
    Ok(HeQuerierSets {
        public_key: pk.element().clone(),
        x_side: encrypt_ids(pk, &sets.nx, rng)?,
        y_side: encrypt_ids(pk, &sets.ny, rng)?,
        local: encrypt_ids(pk, &sets.local, rng)?,
        local_count: pk.encrypt_u64(sets.local.len() as u64, rng),
    })
}

fn random_nonzero<R: RngCore + CryptoRng>(pk: &PublicKey, rng: &mut R) -> Scalar {
    pk.params().rand_scalar(rng)
}

/// Responder: every matrix cell as a blinded difference, padded with as many
/// dummies as real cells (a uniform share of them zero), then shuffled.
pub fn build_pool<R: RngCore + CryptoRng>(
    pk: &PublicKey,
    querier: &HeQuerierSets,
    own: &PreparedSets,
    rng: &mut R,
) -> Result<PooledMatrix, ProtocolError> {
    let params = pk.params();
    let mut entries = Vec::new();
    let mut origins = Vec::new();
    let layout = [
        (Matrix::Crossover1, &querier.x_side, &own.ny),
        (Matrix::Crossover2, &querier.y_side, &own.nx),
        (Matrix::Overlap, &querier.local, &own.local),
    ];
    for (matrix, rows, cols) in layout {
        let cols = cols
            .iter()
            .map(|v| id_plaintext(params, v.as_bytes()))
            .collect::<Result<Vec<_>, _>>()?;
        for (row, ct) in rows.iter().enumerate() {
            for (col, b) in cols.iter().enumerate() {
                let r = params.rand_scalar(rng);
                entries.push(pk.blinded_difference_plain(ct, b, &r)?);
                origins.push(PoolOrigin::Cell { matrix, row, col });
            }
        }
    }
    let dummies = entries.len();
    let zeros = rng.gen_range(0..=dummies);
    for i in 0..dummies {
        let zero = i < zeros;
        entries.push(if zero {
            pk.encrypt_u64(0, rng)
        } else {
            pk.encrypt(&random_nonzero(pk, rng), rng)
        });
        origins.push(PoolOrigin::Dummy { zero });
    }
    let perm = rand_permutation(entries.len(), rng);
    Ok(PooledMatrix {
        entries: perm.iter().map(|&i| entries[i].clone()).collect(),
        origins: perm.iter().map(|&i| origins[i]).collect(),
    })
}

/// Querier: `E(1)` for every entry that decrypts to zero, `E(0)` otherwise.
pub fn answer_pool<R: RngCore + CryptoRng>(
    keys: &HeKeyPair,
    entries: &[Ciphertext],
    rng: &mut R,
) -> Vec<Ciphertext> {
    entries
        .iter()
        .map(|ct| keys.public().encrypt_u64(keys.decrypt_is_zero(ct) as u64, rng))
        .collect()
}

/// Responder: sums the indicator bits per matrix and assembles the
/// re-randomized `E(cn)`.
pub fn finish_pool<R: RngCore + CryptoRng>(
    pk: &PublicKey,
    pool: &PooledMatrix,
    indicators: &[Ciphertext],
    local1_count: &Ciphertext,
    local2: u64,
    rng: &mut R,
) -> Result<Ciphertext, ProtocolError> {
    if indicators.len() != pool.len() {
        return Err(ProtocolError::CountMismatch { expected: pool.len(), got: indicators.len() });
    }
    let params = pk.params();
    let mut crossover = trivial_zero(params);
    let mut overlap = trivial_zero(params);
    for (origin, bit) in pool.origins.iter().zip(indicators) {
        match origin {
            PoolOrigin::Cell { matrix: Matrix::Overlap, .. } => overlap = add(params, &overlap, bit),
            PoolOrigin::Cell { .. } => crossover = add(params, &crossover, bit),
            PoolOrigin::Dummy { .. } => {}
        }
    }
    let mut cn = add(params, local1_count, &pk.encrypt_u64(local2, rng));
    cn = add(params, &cn, &crossover);
    cn = sub(params, &cn, &overlap);
    Ok(pk.rerandomize(&cn, rng))
}

/// Public upper bound on `|local2|` sent alongside `E(cn)`.
fn local2_bound(local2: usize) -> u32 {
    (local2 as u32).next_power_of_two()
}

/// Querier role, encrypted-matrix mode.
pub fn run_he_querier<S, R>(
    spec: &QuerySpec,
    graph: &Graph,
    stream: S,
    rng: &mut R,
) -> Result<QueryReport, ProtocolError>
where
    S: Read + Write,
    R: RngCore + CryptoRng,
{
    if spec.mode != Mode::He {
        return Err(ProtocolError::ModeRejected(spec.mode));
    }
    if graph.has_edge(&spec.x, &spec.y) {
        return Ok(QueryReport {
            outcome: QueryOutcome::LocalDirectNeighbour,
            transcript: SessionTranscript::empty(SessionOutcome::HaltedDirectNeighbour),
            phases: vec![("total", Default::default())],
        });
    }
    let start = Instant::now();
    let params = spec.params.params();
    let keys = HeKeyPair::generate(params, rng);
    let sets = prepare_inputs(graph, &spec.x, &spec.y);
    let message = encrypt_querier_sets(&keys, &sets, rng)?;
    let mut phases = vec![("encrypt", start.elapsed())];
    // Largest value E(cn) can hold, before the responder's local2 bound.
    let own_bound = (2 * sets.local.len() + sets.nx.len() + sets.ny.len()) as u64;

    let mut conn = open_session(spec, stream)?;
    let cn = guarded(&mut conn, |conn| {
        conn.send(Message::HeQuerierSets(message))?;
        let entries = match conn.recv()? {
            Message::Halt => return Ok(None),
            Message::HePooledMatrix(entries) => entries,
            other => return Err(unexpected("HePooledMatrix or Halt", &other)),
        };
        let round = Instant::now();
        conn.send(Message::HeIndicatorReturn(answer_pool(&keys, &entries, rng)))?;
        phases.push(("indicators", round.elapsed()));
        let (bound, ct) = match conn.recv()? {
            Message::HeFinalCn { local2_bound, ct } => (local2_bound, ct),
            other => return Err(unexpected("HeFinalCn", &other)),
        };
        let decrypt = Instant::now();
        let cn = keys.decrypt_small(&ct, own_bound + bound as u64)?;
        phases.push(("decrypt", decrypt.elapsed()));
        conn.send(Message::Close)?;
        Ok(Some(cn))
    })?;
    phases.push(("total", start.elapsed()));
    let (outcome, session) = match cn {
        Some(cn) => (QueryOutcome::Cn(cn), SessionOutcome::Completed),
        None => (QueryOutcome::HaltedDirectNeighbour, SessionOutcome::HaltedDirectNeighbour),
    };
    Ok(QueryReport { outcome, transcript: conn.finish(session), phases })
}

/// Responder role restricted to encrypted-matrix sessions.
pub fn run_he_responder<S, R>(
    params: crate::group::ParamSet,
    graph: &Graph,
    stream: S,
    rng: &mut R,
) -> Result<SessionTranscript, ProtocolError>
where
    S: Read + Write,
    R: RngCore + CryptoRng,
{
    crate::protocol::run_responder(ResponderConfig { params, mode: Some(Mode::He) }, graph, stream, rng)
}

/// Session body after a valid HE init frame.
pub(crate) fn serve_he<S, R>(
    conn: &mut Connection<S>,
    graph: &Graph,
    x: &NodeId,
    y: &NodeId,
    rng: &mut R,
) -> Result<SessionOutcome, ProtocolError>
where
    S: Read + Write,
    R: RngCore + CryptoRng,
{
    let querier = match conn.recv()? {
        Message::HeQuerierSets(sets) => sets,
        other => return Err(unexpected("HeQuerierSets", &other)),
    };
    if graph.has_edge(x, y) {
        conn.send(Message::Halt)?;
        return Ok(SessionOutcome::HaltedDirectNeighbour);
    }
    let params = conn.params().expect("params set after init");
    let pk = PublicKey::from_element(params, querier.public_key.clone());
    let own = prepare_inputs(graph, x, y);
    let pool = build_pool(&pk, &querier, &own, rng)?;
    conn.send(Message::HePooledMatrix(pool.entries.clone()))?;
    let indicators = match conn.recv()? {
        Message::HeIndicatorReturn(bits) => bits,
        other => return Err(unexpected("HeIndicatorReturn", &other)),
    };
    let ct = finish_pool(&pk, &pool, &indicators, &querier.local_count, own.local.len() as u64, rng)?;
    conn.send(Message::HeFinalCn { local2_bound: local2_bound(own.local.len()), ct })?;
    match conn.recv()? {
        Message::Close => Ok(SessionOutcome::Completed),
        other => Err(unexpected("Close", &other)),
    }
}
