//! Loopback timing of full sessions on synthetic neighbourhoods of chosen
//! sizes.

use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use statrs::statistics::Statistics;

use crate::graph::{Graph, NodeId};
use crate::group::ParamSet;
use crate::protocol::{run_loopback, ProtocolError, QuerySpec};
use crate::wire::Mode;

/// Neighbourhood sizes: `x` and `y` in the querier graph, then in the
/// responder graph.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BenchSizes {
    pub nx1: usize,
    pub ny1: usize,
    pub nx2: usize,
    pub ny2: usize,
}

impl BenchSizes {
    pub fn uniform(n: usize) -> Self {
        BenchSizes { nx1: n, ny1: n, nx2: n, ny2: n }
    }

    pub fn total(&self) -> usize {
        self.nx1 + self.ny1 + self.nx2 + self.ny2
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchRow {
    pub sizes: BenchSizes,
    pub phase: &'static str,
    pub mean_ms: f64,
    pub stddev_ms: f64,
}

pub const CSV_HEADER: &str = "nx1,ny1,nx2,ny2,phase,mean_ms,stddev_ms";

impl BenchRow {
    pub fn csv(&self) -> String {
        let s = self.sizes;
        format!(
            "{},{},{},{},{},{:.3},{:.3}",
            s.nx1, s.ny1, s.nx2, s.ny2, self.phase, self.mean_ms, self.stddev_ms
        )
    }
}

/// Two graphs where `x` and `y` have exactly the requested degrees and are
/// not adjacent. Neighbours are drawn from a shared pool four times the
/// total size, so some coincide across sets.
pub fn synthetic_pair(sizes: BenchSizes, seed: u64) -> (Graph, Graph, NodeId, NodeId) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let pool = (4 * sizes.total()).max(1);
    let (x, y) = (NodeId::from("x"), NodeId::from("y"));
    let mut build = |nx: usize, ny: usize| {
        let mut g = Graph::new();
        for (v, n) in [(&x, nx), (&y, ny)] {
            g.add_node(v.clone());
            for i in sample(&mut rng, pool, n.min(pool)) {
                g.add_edge(v.clone(), NodeId::from(format!("n{i}")));
            }
        }
        g
    };
    let g1 = build(sizes.nx1, sizes.ny1);
    let g2 = build(sizes.nx2, sizes.ny2);
    (g1, g2, x, y)
}

/// Runs `reps` loopback sessions and reports each phase's mean and sample
/// standard deviation in milliseconds.
pub fn bench_sizes(
    params: ParamSet,
    mode: Mode,
    sizes: BenchSizes,
    reps: usize,
    seed: u64,
) -> Result<Vec<BenchRow>, ProtocolError> {
    assert!(reps >= 1, "at least one repetition");
    let (g1, g2, x, y) = synthetic_pair(sizes, seed);
    let spec = QuerySpec::new(x, y, mode, params)?;
    let mut samples: Vec<(&'static str, Vec<f64>)> = Vec::new();
    for rep in 0..reps {
        let (report, _) = run_loopback(&spec, &g1, &g2, seed.wrapping_add(rep as u64))?;
        for (name, d) in report.phases {
            let ms = d.as_secs_f64() * 1e3;
            match samples.iter_mut().find(|(n, _)| *n == name) {
                Some((_, v)) => v.push(ms),
                None => samples.push((name, vec![ms])),
            }
        }
    }
    Ok(samples
        .into_iter()
        .map(|(phase, v)| {
            let stddev_ms = if v.len() > 1 { v.iter().std_dev() } else { 0.0 };
            BenchRow { sizes, phase, mean_ms: v.iter().mean(), stddev_ms }
        })
        .collect())
}
