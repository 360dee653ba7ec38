"""Smoke test for the squint_py extension module.

Build and install first, e.g. `maturin develop -m crates/py/Cargo.toml`.
"""

import json
import math
import random
import sys

import squint_py as sq


def close(a, b, tol=1e-9):
    return abs(a - b) <= tol * max(1.0, abs(a), abs(b))


def experts():
    rng = random.Random(7)
    k, t = 4, 300
    for algo, kw in [
        ("squint_improper", {}),
        ("squint_conjugate", {}),
        ("squint_cv", {}),
        ("squint_grid", {"points": 12}),
        ("iprod", {"points": 12}),
        ("hedge", {"eta": 0.1}),
    ]:
        game = sq.ExpertGame(k, algo, **kw)
        last = 0.0
        for _ in range(t):
            w = game.update([rng.random() for _ in range(k)])
            assert close(sum(w), 1.0), (algo, w)
            assert min(w) >= 0.0
            if algo != "hedge":
                phi = game.potential()
                assert phi <= 1e-9 and phi <= last + 1e-9, (algo, phi, last)
                last = phi
        assert game.rounds == t
        r, v = game.regret, game.variance
        if algo == "squint_improper":
            for i in range(k):
                assert r[i] <= sq.bound_theorem3(v[i], 1.0 / k, t) + 1e-9
        if algo == "squint_cv":
            for i in range(k):
                assert r[i] <= sq.bound_theorem2(v[i], 1.0 / k) + 1e-9
    try:
        sq.ExpertGame(3, "no_such_rule")
    except ValueError:
        pass
    else:
        raise AssertionError("unknown algorithm accepted")


def numerics():
    assert math.isfinite(sq.ln_xi(1e6, 1.0))
    assert close(sq.ln_xi(0.0, 1e-30), math.log(0.5))
    assert sq.default_grid(8) == [0.5, 0.25, 0.125, 0.0625]
    b = sq.bound_theorem4(10.0, 1.0, 6, 1000)
    assert math.isfinite(b) and b > 0


def classes():
    c = sq.ConceptClass.k_subsets(5, 2)
    assert c.dim == 5 and len(c.vertices()) == 10
    u = c.project([0.9, 0.8, 0.1, 0.5, 0.3])
    assert close(sum(u), 2.0) and c.hull_residual(u) <= 1e-9
    assert all(close(a, b, 1e-8) for a, b in zip(c.project(u), u))
    concepts, weights = c.decompose(u)
    rebuilt = [sum(w * x[i] for x, w in zip(concepts, weights)) for i in range(5)]
    assert all(close(a, b, 1e-9) for a, b in zip(rebuilt, u))

    d = sq.ConceptClass.dag_paths(4, [(0, 1), (0, 2), (1, 3), (2, 3)], 0, 3)
    assert len(d.vertices()) == 2
    e = sq.ConceptClass.explicit([[1, 0, 0], [0, 1, 1], [1, 1, 0]])
    assert e.hull_residual(e.project([0.5, 0.5, 0.5])) <= 1e-9
    j = sq.ConceptClass.from_json(json.dumps({"kind": "k_subsets", "k": 4, "m": 2}))
    assert len(j.vertices()) == 6


def component_iprod():
    c = sq.ConceptClass.k_subsets(4, 2)
    t = 200
    game = sq.ComponentIProd(c, t)
    idx = [game.register_comparator(v) for v in c.vertices()]
    rng = random.Random(3)
    for _ in range(t):
        u = game.play()
        assert close(sum(u), 2.0, 1e-8)
        game.observe([2 * rng.random() - 1 for _ in range(4)])
        assert game.potential() <= 1e-9
    assert game.rounds == t and game.etas == sq.default_grid(t)
    for i in idx:
        r, v, bound = game.comparator(i)
        assert r <= bound + 1e-9
        for eta in game.etas:
            lhs, rhs = game.lemma4_check(eta, i)
            assert lhs <= rhs + 1e-8


def harness():
    config = {
        "schema_version": 1,
        "horizon": 100,
        "seed": 5,
        "game": {"mode": "experts", "k": 3, "algorithm": {"name": "squint_improper"}},
        "environment": {"generator": "stochastic", "means": [0.2, 0.5, 0.7]},
    }
    summary, csv = sq.run_experiment(json.dumps(config))
    parsed = json.loads(summary)
    assert not parsed["bound_violation"] and not parsed["invariant_failures"]
    failed, rows, checks, problems = sq.audit_csv(csv)
    assert not failed and rows == 100 and checks > 0, problems
    assert sq.run_experiment(json.dumps(config)) == (summary, csv)
    lines = csv.splitlines()
    cells = lines[-1].split(",")
    col = lines[0].split(",").index("bound_e1")
    cells[col] = "-1"
    lines[-1] = ",".join(cells)
    assert sq.audit_csv("\n".join(lines) + "\n")[0]


def main():
    for check in (experts, numerics, classes, component_iprod, harness):
        check()
        print(f"ok {check.__name__}")
    print("smoke test passed")
    return 0


if __name__ == "__main__":
    sys.exit(main())
