//! Two-party common-neighbour computation over the framed wire protocol.
//!
//! The querier (graph 1) learns `cn(x, y)` in the union of both graphs. The
//! responder (graph 2) halts if it holds the edge `x–y`, otherwise it sends
//! `|local2|` in the clear and serves three sequential PSI-CA rounds:
//!
//! | round | querier set | responder set | yields     |
//! |-------|-------------|---------------|------------|
//! | 1     | `nx1`       | `ny2`         | crossover1 |
//! | 2     | `ny1`       | `nx2`         | crossover2 |
//! | 3     | `local1`    | `local2`      | overlap    |
//!
//! Both sides strip `x`, `y` and their local common neighbours from the
//! crossover sets first, which makes
//! `cn = local1 + local2 + crossover1 + crossover2 - overlap` exact.

use std::fmt;
use std::io::{Read, Write};
use std::thread;
use std::time::{Duration, Instant};

use rand::{CryptoRng, RngCore, SeedableRng};
use rand_chacha::ChaCha20Rng;
use thiserror::Error;

use crate::graph::{union_graph, Graph, NeighbourSet, NodeId};
use crate::group::{GroupError, ParamSet};
use crate::he::{self, HeError};
use crate::psi_ca::{client_offline, server_offline, PsiError};
use crate::transport::{memory_pair, Connection, SessionOutcome, SessionTranscript};
use crate::wire::{Message, Mode, SessionInit, WireError, PROTOCOL_VERSION};

#[derive(Debug, Error)]
pub enum ProtocolError {
    #[error("x and y must be different nodes")]
    SameEndpoints,
    #[error("identifier must be 1..=65535 bytes, got {0}")]
    BadIdentifier(usize),
    #[error("expected {expected}, got {got}")]
    Unexpected { expected: &'static str, got: &'static str },
    #[error("unsupported protocol version {0}")]
    VersionMismatch(u8),
    #[error("parameter set mismatch: serving {ours}, peer asked for {theirs}")]
    ParamMismatch { ours: ParamSet, theirs: ParamSet },
    #[error("mode {0} is not served here")]
    ModeRejected(Mode),
    #[error("PSI round {got} out of order, expected {expected}")]
    RoundOutOfOrder { expected: u8, got: u8 },
    #[error("count mismatch: expected {expected}, got {got}")]
    CountMismatch { expected: usize, got: usize },
    #[error("peer aborted: {0}")]
    PeerAborted(String),
    #[error(transparent)]
    Wire(#[from] WireError),
    #[error(transparent)]
    Psi(#[from] PsiError),
    #[error(transparent)]
    He(#[from] HeError),
    #[error(transparent)]
    Group(#[from] GroupError),
}

impl ProtocolError {
    /// Whether the peer is still worth an `Abort` frame.
    fn notify_peer(&self) -> bool {
        !matches!(
            self,
            ProtocolError::PeerAborted(_)
                | ProtocolError::Wire(WireError::Io(_) | WireError::Truncated)
        )
    }
}

fn check_id(id: &NodeId) -> Result<(), ProtocolError> {
    let len = id.as_bytes().len();
    if len == 0 || len > u16::MAX as usize {
        return Err(ProtocolError::BadIdentifier(len));
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct QuerySpec {
    pub x: NodeId,
    pub y: NodeId,
    pub mode: Mode,
    pub params: ParamSet,
}

impl QuerySpec {
    pub fn new(
        x: impl Into<NodeId>,
        y: impl Into<NodeId>,
        mode: Mode,
        params: ParamSet,
    ) -> Result<Self, ProtocolError> {
        let (x, y) = (x.into(), y.into());
        check_id(&x)?;
        check_id(&y)?;
        if x == y {
            return Err(ProtocolError::SameEndpoints);
        }
        Ok(QuerySpec { x, y, mode, params })
    }

    fn init(&self) -> SessionInit {
        SessionInit {
            version: PROTOCOL_VERSION,
            params: self.params,
            mode: self.mode,
            x_id: self.x.as_bytes().to_vec(),
            y_id: self.y.as_bytes().to_vec(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct CnBreakdown {
    pub local1: u64,
    pub local2: u64,
    pub crossover1: u64,
    pub crossover2: u64,
    pub overlap: u64,
    pub cn: u64,
}

impl CnBreakdown {
    pub fn from_components(
        local1: u64,
        local2: u64,
        crossover1: u64,
        crossover2: u64,
        overlap: u64,
    ) -> Self {
        let cn = (local1 + local2 + crossover1 + crossover2).saturating_sub(overlap);
        CnBreakdown { local1, local2, crossover1, crossover2, overlap, cn }
    }
}

impl fmt::Display for CnBreakdown {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "cn={} local1={} local2={} cr1={} cr2={} overlap={}",
            self.cn, self.local1, self.local2, self.crossover1, self.crossover2, self.overlap
        )
    }
}

/// One party's protocol inputs for the pair `(x, y)`.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct PreparedSets {
    /// `Γ(x) \ {x, y} \ local`
    pub nx: NeighbourSet,
    /// `Γ(y) \ {x, y} \ local`
    pub ny: NeighbourSet,
    /// `Γ(x) ∩ Γ(y) \ {x, y}`
    pub local: NeighbourSet,
}

impl PreparedSets {
    fn ids(set: &NeighbourSet) -> impl Iterator<Item = &[u8]> {
        set.iter().map(NodeId::as_bytes)
    }
}

/// Splits the neighbourhoods of `x` and `y` into the crossover and local
/// sets. Unknown nodes have no neighbours.
pub fn prepare_inputs(graph: &Graph, x: &NodeId, y: &NodeId) -> PreparedSets {
    let strip = |v: &NodeId| -> NeighbourSet {
        graph.neighbours(v).iter().filter(|w| *w != x && *w != y).cloned().collect()
    };
    let (gx, gy) = (strip(x), strip(y));
    let local: NeighbourSet = gx.intersection(&gy).cloned().collect();
    PreparedSets {
        nx: gx.difference(&local).cloned().collect(),
        ny: gy.difference(&local).cloned().collect(),
        local,
    }
}

/// Plaintext oracle with both graphs visible. `cn` comes straight from the
/// union graph; the components from the per-graph sets.
pub fn brute_force_cn(g1: &Graph, g2: &Graph, x: &NodeId, y: &NodeId) -> CnBreakdown {
    let union = union_graph(g1, g2);
    let cn = union
        .neighbours(x)
        .intersection(union.neighbours(y))
        .filter(|w| *w != x && *w != y)
        .count() as u64;
    let (a, b) = (prepare_inputs(g1, x, y), prepare_inputs(g2, x, y));
    let common = |s: &NeighbourSet, t: &NeighbourSet| s.intersection(t).count() as u64;
    CnBreakdown {
        local1: a.local.len() as u64,
        local2: b.local.len() as u64,
        crossover1: common(&a.nx, &b.ny),
        crossover2: common(&a.ny, &b.nx),
        overlap: common(&a.local, &b.local),
        cn,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum QueryOutcome {
    /// PSI mode: every component is revealed to the querier.
    Breakdown(CnBreakdown),
    /// HE mode: only the count.
    Cn(u64),
    /// The responder holds the edge `x–y`.
    HaltedDirectNeighbour,
    /// The querier itself holds the edge; no session was opened.
    LocalDirectNeighbour,
}

impl QueryOutcome {
    pub fn cn(&self) -> Option<u64> {
        match self {
            QueryOutcome::Breakdown(b) => Some(b.cn),
            QueryOutcome::Cn(cn) => Some(*cn),
            _ => None,
        }
    }

    pub fn is_direct_neighbour(&self) -> bool {
        matches!(self, QueryOutcome::HaltedDirectNeighbour | QueryOutcome::LocalDirectNeighbour)
    }
}

#[derive(Debug, Clone)]
pub struct QueryReport {
    pub outcome: QueryOutcome,
    pub transcript: SessionTranscript,
    /// Wall time per named phase, ending with `total`.
    pub phases: Vec<(&'static str, Duration)>,
}

impl QueryReport {
    pub fn phase(&self, name: &str) -> Option<Duration> {
        self.phases.iter().find(|(n, _)| *n == name).map(|(_, d)| *d)
    }

    fn local_edge() -> Self {
        QueryReport {
            outcome: QueryOutcome::LocalDirectNeighbour,
            transcript: SessionTranscript::empty(SessionOutcome::HaltedDirectNeighbour),
            phases: vec![("total", Duration::ZERO)],
        }
    }
}

/// Runs any fallible session step and notifies the peer if it fails.
pub(crate) fn guarded<S, T>(
    conn: &mut Connection<S>,
    step: impl FnOnce(&mut Connection<S>) -> Result<T, ProtocolError>,
) -> Result<T, ProtocolError>
where
    S: Read + Write,
{
    let result = step(conn);
    if let Err(e) = &result {
        if e.notify_peer() {
            conn.abort(&e.to_string());
        }
    }
    result
}

pub(crate) fn unexpected(expected: &'static str, got: &Message) -> ProtocolError {
    ProtocolError::Unexpected { expected, got: got.name() }
}

/// Opens a session: sends the init frame and switches the connection to
/// the agreed group.
pub(crate) fn open_session<S: Read + Write>(
    spec: &QuerySpec,
    stream: S,
) -> Result<Connection<S>, ProtocolError> {
    let mut conn = Connection::new(stream);
    conn.send(Message::SessionInit(spec.init()))?;
    conn.set_params(spec.params.params());
    Ok(conn)
}

/// Querier role in either mode.
pub fn run_querier<S, R>(
    spec: &QuerySpec,
    graph: &Graph,
    stream: S,
    rng: &mut R,
) -> Result<QueryReport, ProtocolError>
where
    S: Read + Write,
    R: RngCore + CryptoRng,
{
    match spec.mode {
        Mode::Psi => run_psi_querier(spec, graph, stream, rng),
        Mode::He => he::run_he_querier(spec, graph, stream, rng),
    }
}

fn run_psi_querier<S, R>(
    spec: &QuerySpec,
    graph: &Graph,
    stream: S,
    rng: &mut R,
) -> Result<QueryReport, ProtocolError>
where
    S: Read + Write,
    R: RngCore + CryptoRng,
{
    if graph.has_edge(&spec.x, &spec.y) {
        return Ok(QueryReport::local_edge());
    }
    let start = Instant::now();
    let params = spec.params.params();
    let sets = prepare_inputs(graph, &spec.x, &spec.y);
    let clients = [&sets.nx, &sets.ny, &sets.local]
        .into_iter()
        .map(|s| client_offline(PreparedSets::ids(s), params, rng))
        .collect::<Result<Vec<_>, _>>()?;
    let mut phases = vec![("offline", start.elapsed())];

    let mut conn = open_session(spec, stream)?;
    let result = guarded(&mut conn, |conn| {
        let local2 = match conn.recv()? {
            Message::Halt => return Ok(None),
            Message::Local2Card(n) => n as u64,
            other => return Err(unexpected("Local2Card or Halt", &other)),
        };
        let mut counts = [0u64; 3];
        for (i, client) in clients.iter().enumerate() {
            let round = Instant::now();
            let psi_index = i as u8 + 1;
            conn.send(Message::PsiClientMasked { psi_index, elements: client.masked().to_vec() })?;
            let (remasked, tags) = match conn.recv()? {
                Message::PsiServerResponse { psi_index: got, remasked, tags } => {
                    if got != psi_index {
                        return Err(ProtocolError::RoundOutOfOrder { expected: psi_index, got });
                    }
                    (remasked, tags)
                }
                other => return Err(unexpected("PsiServerResponse", &other)),
            };
            counts[i] = client.finalize(&remasked, &tags)?.cardinality as u64;
            phases.push((["psi1", "psi2", "psi3"][i], round.elapsed()));
        }
        conn.send(Message::Close)?;
        Ok(Some(CnBreakdown::from_components(
            sets.local.len() as u64,
            local2,
            counts[0],
            counts[1],
            counts[2],
        )))
    });
    phases.push(("total", start.elapsed()));
    Ok(match result? {
        Some(b) => QueryReport {
            outcome: QueryOutcome::Breakdown(b),
            transcript: conn.finish(SessionOutcome::Completed),
            phases,
        },
        None => QueryReport {
            outcome: QueryOutcome::HaltedDirectNeighbour,
            transcript: conn.finish(SessionOutcome::HaltedDirectNeighbour),
            phases,
        },
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ResponderConfig {
    pub params: ParamSet,
    /// `None` serves both modes.
    pub mode: Option<Mode>,
}

/// Responder role: reads the init frame and serves the requested mode.
pub fn run_responder<S, R>(
    config: ResponderConfig,
    graph: &Graph,
    stream: S,
    rng: &mut R,
) -> Result<SessionTranscript, ProtocolError>
where
    S: Read + Write,
    R: RngCore + CryptoRng,
{
    let mut conn = Connection::new(stream);
    let outcome = guarded(&mut conn, |conn| {
        let init = match conn.recv()? {
            Message::SessionInit(init) => init,
            other => return Err(unexpected("SessionInit", &other)),
        };
        if init.version != PROTOCOL_VERSION {
            return Err(ProtocolError::VersionMismatch(init.version));
        }
        if init.params != config.params {
            return Err(ProtocolError::ParamMismatch { ours: config.params, theirs: init.params });
        }
        if config.mode.is_some_and(|m| m != init.mode) {
            return Err(ProtocolError::ModeRejected(init.mode));
        }
        let (x, y) = (NodeId::new(init.x_id.clone()), NodeId::new(init.y_id.clone()));
        if x == y {
            return Err(ProtocolError::SameEndpoints);
        }
        conn.set_params(config.params.params());
        match init.mode {
            Mode::Psi => serve_psi(conn, graph, &x, &y, rng),
            Mode::He => he::serve_he(conn, graph, &x, &y, rng),
        }
    })?;
    Ok(conn.finish(outcome))
}

fn serve_psi<S, R>(
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
    if graph.has_edge(x, y) {
        conn.send(Message::Halt)?;
        return Ok(SessionOutcome::HaltedDirectNeighbour);
    }
    let params = conn.params().expect("params set after init");
    let sets = prepare_inputs(graph, x, y);
    conn.send(Message::Local2Card(sets.local.len() as u32))?;
    let servers = [&sets.ny, &sets.nx, &sets.local]
        .into_iter()
        .map(|s| server_offline(PreparedSets::ids(s), params, rng))
        .collect::<Result<Vec<_>, _>>()?;
    for (i, server) in servers.iter().enumerate() {
        let expected = i as u8 + 1;
        let elements = match conn.recv()? {
            Message::PsiClientMasked { psi_index, elements } => {
                if psi_index != expected {
                    return Err(ProtocolError::RoundOutOfOrder { expected, got: psi_index });
                }
                elements
            }
            other => return Err(unexpected("PsiClientMasked", &other)),
        };
        let (remasked, tags) = server.respond(&elements, rng)?;
        conn.send(Message::PsiServerResponse { psi_index: expected, remasked, tags })?;
    }
    match conn.recv()? {
        Message::Close => Ok(SessionOutcome::Completed),
        other => Err(unexpected("Close", &other)),
    }
}

/// Both roles in-process over a memory pipe with seeded RNGs. Returns the
/// querier's report and the responder's transcript.
pub fn run_loopback(
    spec: &QuerySpec,
    g1: &Graph,
    g2: &Graph,
    seed: u64,
) -> Result<(QueryReport, SessionTranscript), ProtocolError> {
    let (qs, rs) = memory_pair();
    let config = ResponderConfig { params: spec.params, mode: Some(spec.mode) };
    thread::scope(|scope| {
        let responder = scope.spawn(move || {
            let mut rng = ChaCha20Rng::seed_from_u64(seed ^ 0x5eed_0002);
            run_responder(config, g2, rs, &mut rng)
        });
        let mut rng = ChaCha20Rng::seed_from_u64(seed ^ 0x5eed_0001);
        let report = run_querier(spec, g1, qs, &mut rng);
        let transcript = responder.join().expect("responder thread panicked");
        match (report, transcript) {
            (Ok(r), Ok(t)) => Ok((r, t)),
            // A locally detected edge never opens the pipe.
            (Ok(r), Err(_)) if r.outcome == QueryOutcome::LocalDirectNeighbour => {
                Ok((r, SessionTranscript::empty(SessionOutcome::HaltedDirectNeighbour)))
            }
            (Err(e), _) | (_, Err(e)) => Err(e),
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{ba_generate, load_edge_list, BaConfig};
    use crate::transport::Direction;
    use rand::seq::IteratorRandom;
    use rand::Rng;

    pub(crate) fn fixture() -> (Graph, Graph) {
        let g1 = load_edge_list("x a\nx b\ny a\ny c\n").unwrap();
        let g2 = load_edge_list("x a\nx c\nx d\ny a\ny b\ny d\n").unwrap();
        (g1, g2)
    }

    fn id(s: &str) -> NodeId {
        NodeId::from(s)
    }

    fn set(ids: &[&str]) -> NeighbourSet {
        ids.iter().map(|s| id(s)).collect()
    }

    fn spec(x: &str, y: &str) -> QuerySpec {
        QuerySpec::new(x, y, Mode::Psi, ParamSet::Toy).unwrap()
    }

    #[test]
    fn prepare_splits_local_and_crossover() {
        let (g1, _) = fixture();
        let p = prepare_inputs(&g1, &id("x"), &id("y"));
        assert_eq!(p.local, set(&["a"]));
        assert_eq!(p.nx, set(&["b"]));
        assert_eq!(p.ny, set(&["c"]));
        let empty = prepare_inputs(&Graph::new(), &id("x"), &id("y"));
        assert_eq!(empty, PreparedSets::default());
    }

    #[test]
    fn prepare_drops_the_endpoints() {
        let g = load_edge_list("x y\nx a\ny a\n").unwrap();
        let p = prepare_inputs(&g, &id("x"), &id("y"));
        assert_eq!(p.local, set(&["a"]));
        assert!(p.nx.is_empty() && p.ny.is_empty());
    }

    #[test]
    fn fixture_oracle() {
        let (g1, g2) = fixture();
        let b = brute_force_cn(&g1, &g2, &id("x"), &id("y"));
        assert_eq!(b, CnBreakdown::from_components(1, 2, 1, 1, 1));
        assert_eq!(b.cn, 4);
        // Without removing local sets from the crossover inputs the same
        // formula counts a twice and b, c twice.
        let raw = |g: &Graph, v: &str| -> NeighbourSet {
            g.neighbours(&id(v)).iter().filter(|w| w.as_bytes() != b"x" && w.as_bytes() != b"y").cloned().collect()
        };
        let cr1 = raw(&g1, "x").intersection(&raw(&g2, "y")).count() as u64;
        let cr2 = raw(&g1, "y").intersection(&raw(&g2, "x")).count() as u64;
        assert_eq!(CnBreakdown::from_components(1, 2, cr1, cr2, 1).cn, 6);
    }

    #[test]
    fn oracle_on_disjoint_inputs() {
        let g1 = load_edge_list("x a\ny a\nx b\n").unwrap();
        let g2 = load_edge_list("x c\ny c\ny d\n").unwrap();
        let b = brute_force_cn(&g1, &g2, &id("x"), &id("y"));
        assert_eq!(b.cn, b.local1 + b.local2);
        assert_eq!(b.cn, 2);
    }

    #[test]
    fn ten_node_sample_local2() {
        // Responder graph where x and y share exactly three neighbours.
        let g2 = load_edge_list(
            "1 3\n1 4\n1 5\n6 3\n6 4\n6 5\n1 2\n6 7\n8 9\n9 10\n2 8\n",
        )
        .unwrap();
        assert_eq!(g2.node_count(), 10);
        let b = brute_force_cn(&Graph::new(), &g2, &id("1"), &id("6"));
        assert_eq!(b.local2, 3);
        assert_eq!(b.cn, 3);
    }

    #[test]
    fn spec_validation() {
        assert!(matches!(
            QuerySpec::new("x", "x", Mode::Psi, ParamSet::Toy),
            Err(ProtocolError::SameEndpoints)
        ));
        assert!(matches!(
            QuerySpec::new("", "x", Mode::Psi, ParamSet::Toy),
            Err(ProtocolError::BadIdentifier(0))
        ));
    }

    #[test]
    fn fixture_session() {
        let (g1, g2) = fixture();
        let (report, responder) = run_loopback(&spec("x", "y"), &g1, &g2, 7).unwrap();
        assert_eq!(report.outcome, QueryOutcome::Breakdown(CnBreakdown::from_components(1, 2, 1, 1, 1)));
        let names: Vec<&str> = responder.messages().map(Message::name).collect();
        assert_eq!(
            names,
            [
                "SessionInit",
                "Local2Card",
                "PsiClientMasked",
                "PsiServerResponse",
                "PsiClientMasked",
                "PsiServerResponse",
                "PsiClientMasked",
                "PsiServerResponse",
                "Close"
            ]
        );
        assert_eq!(responder.outcome, SessionOutcome::Completed);
        assert_eq!(report.transcript.bytes(), responder.bytes());
    }

    #[test]
    fn psi_rounds_are_sequential() {
        let (g1, g2) = fixture();
        let (report, _) = run_loopback(&spec("x", "y"), &g1, &g2, 3).unwrap();
        let psi: Vec<_> = report.transcript.entries.iter().filter(|e| e.message.is_psi()).collect();
        assert_eq!(psi.len(), 6);
        for pair in psi.windows(2) {
            assert!(pair[0].at <= pair[1].at);
        }
        for round in psi.chunks(2) {
            assert_eq!(round[0].direction, Direction::Sent);
            assert_eq!(round[1].direction, Direction::Received);
        }
    }

    #[test]
    fn responder_edge_halts_without_psi() {
        let (g1, mut g2) = fixture();
        g2.add_edge(id("x"), id("y"));
        let (report, responder) = run_loopback(&spec("x", "y"), &g1, &g2, 1).unwrap();
        assert_eq!(report.outcome, QueryOutcome::HaltedDirectNeighbour);
        assert_eq!(report.transcript.psi_message_count(), 0);
        assert_eq!(responder.psi_message_count(), 0);
        assert_eq!(responder.outcome, SessionOutcome::HaltedDirectNeighbour);
    }

    #[test]
    fn querier_edge_skips_the_session() {
        let (mut g1, g2) = fixture();
        g1.add_edge(id("y"), id("x"));
        let (report, _) = run_loopback(&spec("x", "y"), &g1, &g2, 1).unwrap();
        assert_eq!(report.outcome, QueryOutcome::LocalDirectNeighbour);
        assert!(report.transcript.entries.is_empty());
    }

    #[test]
    fn empty_responder_graph() {
        let (g1, _) = fixture();
        let (report, _) = run_loopback(&spec("x", "y"), &g1, &Graph::new(), 2).unwrap();
        let QueryOutcome::Breakdown(b) = report.outcome else { panic!() };
        assert_eq!((b.local2, b.cn), (0, b.local1));
    }

    #[test]
    fn identical_graphs_reduce_to_local1() {
        let mut rng = ChaCha20Rng::seed_from_u64(11);
        for seed in 0..20u64 {
            let g = ba_generate(&BaConfig::new(30, 3, seed).unwrap()).unwrap();
            let (x, y) = loop {
                let pick = g.nodes().cloned().choose_multiple(&mut rng, 2);
                if !g.has_edge(&pick[0], &pick[1]) {
                    break (pick[0].clone(), pick[1].clone());
                }
            };
            let q = QuerySpec::new(x.clone(), y.clone(), Mode::Psi, ParamSet::Toy).unwrap();
            let (report, _) = run_loopback(&q, &g, &g, seed).unwrap();
            let QueryOutcome::Breakdown(b) = report.outcome else { panic!() };
            assert_eq!(b, brute_force_cn(&g, &g, &x, &y));
            assert_eq!((b.crossover1, b.crossover2, b.overlap, b.cn), (0, 0, b.local1, b.local1));
        }
    }

    #[test]
    fn responder_rejects_mismatched_params() {
        let (g1, g2) = fixture();
        let (qs, rs) = memory_pair();
        let q = spec("x", "y");
        let res = thread::scope(|s| {
            let h = s.spawn(|| {
                let mut rng = ChaCha20Rng::seed_from_u64(1);
                let cfg = ResponderConfig { params: ParamSet::Secure, mode: None };
                run_responder(cfg, &g2, rs, &mut rng)
            });
            let mut rng = ChaCha20Rng::seed_from_u64(2);
            let r = run_querier(&q, &g1, qs, &mut rng);
            (r, h.join().unwrap())
        });
        assert!(matches!(res.0, Err(ProtocolError::PeerAborted(_))));
        assert!(matches!(res.1, Err(ProtocolError::ParamMismatch { .. })));
    }

    #[test]
    fn random_pairs_match_oracle() {
        let mut rng = ChaCha20Rng::seed_from_u64(5);
        for seed in 0..8u64 {
            let g1 = ba_generate(&BaConfig::new(40, 2, seed).unwrap()).unwrap();
            let g2 = ba_generate(&BaConfig::new(40, 4, seed + 100).unwrap()).unwrap();
            let x = id(&rng.gen_range(0..40).to_string());
            let y = id(&rng.gen_range(0..40).to_string());
            if x == y {
                continue;
            }
            let q = QuerySpec::new(x.clone(), y.clone(), Mode::Psi, ParamSet::Toy).unwrap();
            let (report, _) = run_loopback(&q, &g1, &g2, seed).unwrap();
            let oracle = brute_force_cn(&g1, &g2, &x, &y);
            match report.outcome {
                QueryOutcome::Breakdown(b) => {
                    assert_eq!(b, oracle);
                    assert!(b.cn >= b.local1.max(b.local2));
                    assert!(b.overlap <= b.local1.min(b.local2));
                }
                QueryOutcome::LocalDirectNeighbour => assert!(g1.has_edge(&x, &y)),
                QueryOutcome::HaltedDirectNeighbour => assert!(g2.has_edge(&x, &y)),
                QueryOutcome::Cn(_) => unreachable!(),
            }
        }
    }
}
