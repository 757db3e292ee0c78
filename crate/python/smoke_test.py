"""Smoke test for the `lpp` extension module.

Build and install first:
    pip install --no-build-isolation -e crates/py
"""
import lpp


def main() -> None:
    g1 = lpp.Graph.from_edge_list("x a\nx b\ny a\ny c\n")
    g2 = lpp.Graph.from_edge_list("x a\nx c\nx d\ny a\ny b\ny d\n")

    oracle = lpp.brute_force_cn(g1, g2, "x", "y")
    assert (oracle.cn, oracle.local1, oracle.local2) == (4, 1, 2), oracle
    assert (oracle.crossover1, oracle.crossover2, oracle.overlap) == (1, 1, 1), oracle

    psi = lpp.query_loopback(g1, g2, "x", "y", mode="psi", seed=7)
    assert psi.outcome == "completed" and psi.breakdown == oracle, psi

    he = lpp.query_loopback(g1, g2, "x", "y", mode="he", seed=7)
    assert he.cn == 4 and he.breakdown is None, he

    g2.add_edge("x", "y")
    halted = lpp.query_loopback(g1, g2, "x", "y")
    assert halted.outcome == "halted-direct-neighbour" and halted.cn is None, halted

    assert lpp.psi_cardinality(["a", "b", "c"], ["b", "c", "d"]) == 2
    assert lpp.possibilities(8, 3) == 56
    assert lpp.log10_possibilities(37377, 50) > 100
    assert lpp.encode_local2_card(3) == bytes.fromhex("000000050300000003")

    ba = lpp.Graph.barabasi_albert(200, 3, seed=1)
    assert ba.edge_count() == 3 + 197 * 3
    assert ba.avg_common_neighbours() > 0

    try:
        lpp.query_loopback(g1, g2, "x", "x")
    except ValueError:
        pass
    else:
        raise AssertionError("x == y must be rejected")

    print("smoke test ok:", psi.breakdown, he)


if __name__ == "__main__":
    main()
