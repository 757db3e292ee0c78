//! Python bindings: graphs, the plaintext oracle, in-process sessions in
//! both modes, raw PSI-CA and the leakage counts.

use lpp_core::graph::{self, BaConfig};
use lpp_core::leakage::{self, LeakageQuery};
use lpp_core::protocol::{self, QueryOutcome, QuerySpec};
use lpp_core::psi_ca;
use lpp_core::{Message, Mode, ParamSet};
use num_bigint::BigUint;
use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use pyo3::types::PyBytes;
use rand::rngs::StdRng;
use rand::SeedableRng;

fn value_err(e: impl std::fmt::Display) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn parse<T: std::str::FromStr>(s: &str) -> PyResult<T>
where
    T::Err: std::fmt::Display,
{
    s.parse().map_err(value_err)
}

/// Undirected graph with string node identifiers.
#[pyclass(name = "Graph", module = "lpp", skip_from_py_object)]
#[derive(Clone, Default)]
struct PyGraph {
    inner: graph::Graph,
}

#[pymethods]
impl PyGraph {
    #[new]
    fn new() -> Self {
        Self::default()
    }

    /// Parses whitespace-separated `u v` lines; `#` starts a comment.
    #[staticmethod]
    fn from_edge_list(text: &str) -> PyResult<Self> {
        Ok(PyGraph { inner: graph::load_edge_list(text).map_err(value_err)? })
    }

    /// Barabási–Albert graph on nodes "0".."nodes-1".
    #[staticmethod]
    #[pyo3(signature = (nodes, k, seed = 0))]
    fn barabasi_albert(nodes: usize, k: usize, seed: u64) -> PyResult<Self> {
        let cfg = BaConfig::new(nodes, k, seed).map_err(value_err)?;
        Ok(PyGraph { inner: graph::ba_generate(&cfg).map_err(value_err)? })
    }

    fn add_edge(&mut self, u: &str, v: &str) -> PyResult<bool> {
        if u == v {
            return Err(PyValueError::new_err("self-loops are not allowed"));
        }
        Ok(self.inner.add_edge(u.into(), v.into()))
    }

    fn has_edge(&self, u: &str, v: &str) -> bool {
        self.inner.has_edge(&u.into(), &v.into())
    }

    fn neighbours(&self, v: &str) -> Vec<String> {
        self.inner.neighbours(&v.into()).iter().map(|n| n.to_string()).collect()
    }

    fn node_count(&self) -> usize {
        self.inner.node_count()
    }

    fn edge_count(&self) -> usize {
        self.inner.edge_count()
    }

    fn avg_common_neighbours(&self) -> f64 {
        graph::avg_common_neighbours(&self.inner)
    }

    fn to_edge_list(&self) -> String {
        self.inner.to_edge_list()
    }

    fn __repr__(&self) -> String {
        format!("Graph(nodes={}, edges={})", self.inner.node_count(), self.inner.edge_count())
    }
}

#[pyclass(name = "CnBreakdown", module = "lpp", frozen, eq, skip_from_py_object)]
#[derive(Clone, PartialEq)]
struct PyCnBreakdown {
    #[pyo3(get)]
    cn: u64,
    #[pyo3(get)]
    local1: u64,
    #[pyo3(get)]
    local2: u64,
    #[pyo3(get)]
    crossover1: u64,
    #[pyo3(get)]
    crossover2: u64,
    #[pyo3(get)]
    overlap: u64,
}

impl From<protocol::CnBreakdown> for PyCnBreakdown {
    fn from(b: protocol::CnBreakdown) -> Self {
        PyCnBreakdown {
            cn: b.cn,
            local1: b.local1,
            local2: b.local2,
            crossover1: b.crossover1,
            crossover2: b.crossover2,
            overlap: b.overlap,
        }
    }
}

#[pymethods]
impl PyCnBreakdown {
    fn __repr__(&self) -> String {
        format!(
            "CnBreakdown(cn={}, local1={}, local2={}, crossover1={}, crossover2={}, overlap={})",
            self.cn, self.local1, self.local2, self.crossover1, self.crossover2, self.overlap
        )
    }
}

/// Querier-side result of one session.
#[pyclass(name = "QueryResult", module = "lpp", frozen)]
struct PyQueryResult {
    /// "completed", "halted-direct-neighbour" or "local-direct-neighbour".
    #[pyo3(get)]
    outcome: &'static str,
    #[pyo3(get)]
    cn: Option<u64>,
    /// Only in psi mode.
    #[pyo3(get)]
    breakdown: Option<PyCnBreakdown>,
    /// Frame bytes as seen by the querier.
    #[pyo3(get)]
    transcript_len: usize,
}

#[pymethods]
impl PyQueryResult {
    fn __repr__(&self) -> String {
        let cn = self.cn.map_or_else(|| "None".to_string(), |c| c.to_string());
        format!("QueryResult(outcome={:?}, cn={cn})", self.outcome)
    }
}

/// Plaintext common-neighbour breakdown on the union of both graphs.
#[pyfunction]
fn brute_force_cn(g1: &PyGraph, g2: &PyGraph, x: &str, y: &str) -> PyCnBreakdown {
    protocol::brute_force_cn(&g1.inner, &g2.inner, &x.into(), &y.into()).into()
}

/// Runs querier and responder in-process over a memory pipe.
#[pyfunction]
#[allow(clippy::too_many_arguments)]
#[pyo3(signature = (g1, g2, x, y, mode = "psi", params = "toy", seed = 0))]
fn query_loopback(
    py: Python<'_>,
    g1: &PyGraph,
    g2: &PyGraph,
    x: &str,
    y: &str,
    mode: &str,
    params: &str,
    seed: u64,
) -> PyResult<PyQueryResult> {
    let spec = QuerySpec::new(x, y, parse::<Mode>(mode)?, parse::<ParamSet>(params)?)
        .map_err(value_err)?;
    let (g1, g2) = (g1.inner.clone(), g2.inner.clone());
    let (report, _) = py
        .detach(|| protocol::run_loopback(&spec, &g1, &g2, seed))
        .map_err(value_err)?;
    let (outcome, breakdown) = match report.outcome {
        QueryOutcome::Breakdown(b) => ("completed", Some(b.into())),
        QueryOutcome::Cn(_) => ("completed", None),
        QueryOutcome::HaltedDirectNeighbour => ("halted-direct-neighbour", None),
        QueryOutcome::LocalDirectNeighbour => ("local-direct-neighbour", None),
    };
    Ok(PyQueryResult {
        outcome,
        cn: report.outcome.cn(),
        breakdown,
        transcript_len: report.transcript.bytes().len(),
    })
}

/// `|client ∩ server|` through both PSI-CA roles in-process.
#[pyfunction]
#[pyo3(signature = (client, server, params = "toy"))]
fn psi_cardinality(client: Vec<String>, server: Vec<String>, params: &str) -> PyResult<usize> {
    let params = parse::<ParamSet>(params)?.params();
    let mut rng = StdRng::from_entropy();
    Ok(psi_ca::run_local(client, server, params, &mut rng).map_err(value_err)?.cardinality)
}

/// Exact number of size-`cardinality` subsets of the universe.
#[pyfunction]
fn possibilities(universe: u64, cardinality: u64) -> PyResult<BigUint> {
    let q = LeakageQuery::new(universe, cardinality).map_err(value_err)?;
    leakage::possibilities(q).map_err(value_err)
}

#[pyfunction]
fn log10_possibilities(universe: u64, cardinality: u64) -> PyResult<f64> {
    let q = LeakageQuery::new(universe, cardinality).map_err(value_err)?;
    leakage::log10_possibilities(q).map_err(value_err)
}

/// Encoded `Local2Card` frame, handy for checking wire compatibility.
#[pyfunction]
fn encode_local2_card(py: Python<'_>, count: u32) -> Bound<'_, PyBytes> {
    PyBytes::new(py, &Message::Local2Card(count).encode(None))
}

#[pymodule]
fn lpp(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyGraph>()?;
    m.add_class::<PyCnBreakdown>()?;
    m.add_class::<PyQueryResult>()?;
    m.add_function(wrap_pyfunction!(brute_force_cn, m)?)?;
    m.add_function(wrap_pyfunction!(query_loopback, m)?)?;
    m.add_function(wrap_pyfunction!(psi_cardinality, m)?)?;
    m.add_function(wrap_pyfunction!(possibilities, m)?)?;
    m.add_function(wrap_pyfunction!(log10_possibilities, m)?)?;
    m.add_function(wrap_pyfunction!(encode_local2_card, m)?)?;
    Ok(())
}
