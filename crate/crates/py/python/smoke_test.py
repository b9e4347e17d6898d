"""Smoke test for the lsrquad extension module.

Build and install first, e.g. `maturin develop --release` in crates/py.
"""

import json
import math

import lsrquad


def main():
    f = lsrquad.Pbf(6, [([1, 2, 3], math.pi), ([2, 4, 5, 6], -13.0), ([1, 3], 7.0)])
    assert f.degree() == 4
    assert abs(f.density(3, 6) - 0.05) < 1e-12
    assert abs(f.evaluate([1, 1, 1, 0, 0, 0]) - (math.pi + 7)) < 1e-12
    assert f.graph_edges()[:3] == [(1, 2, 1), (1, 3, 1), (1, 3, 3)]
    assert lsrquad.Pbf.from_json(f.to_json()) == f

    r = lsrquad.lsr(f, q=1.0, seed=0)
    assert r.substitutions[0] == (7, 1, 3)
    assert r.reduced.degree() <= 2
    report = lsrquad.check_quadratisation(f, r)
    assert report.ok, report.to_json()
    assert json.loads(r.to_json())["algorithm"] == "lsr-q1.0"

    g = lsrquad.Pbf(4, [([1, 2], 1.0), ([1, 2, 3], 1.0), ([1, 2, 3, 4], 1.0)])
    assert lsrquad.lsr(g).introduced == 2
    for variant in ("sparse", "medium", "dense"):
        b = lsrquad.quadratise_baseline(g, variant)
        assert lsrquad.check_quadratisation(g, b).ok

    h = lsrquad.generate(6, 4, 0.4, seed=3)
    for name in ("lsr-q0.0", "lsr-q0.5", "base-dense"):
        assert lsrquad.check_quadratisation(h, lsrquad.quadratise(h, name, seed=1)).ok
    assert lsrquad.check_incremental_graph(h, 0.5, 2).ok
    assert lsrquad.check_penalty_property().passed == 8
    assert lsrquad.reduce_to_degree_k(h, 3).reduced.degree() <= 3
    assert (6, 4, 56) in lsrquad.terms_scaling_report(6, 4)

    try:
        lsrquad.Pbf(3, [([1, 1], 1.0)])
    except lsrquad.LsrquadError:
        pass
    else:
        raise AssertionError("duplicate variable accepted")

    print("smoke test passed")


if __name__ == "__main__":
    main()
