"""Smoke test for the fellerdep_py extension.

Build the module first, either with maturin::

    maturin develop -m crates/py/Cargo.toml --release

or by hand::

    cargo build --release -p fellerdep-py --features extension-module
    cp target/release/libfellerdep_py.so python/fellerdep_py.so
"""

import json
import math
import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parent))

import fellerdep_py as fd


def close(a, b, tol):
    return abs(a - b) <= tol


def main():
    names = [p[0] for p in fd.list_presets()]
    assert "ou_poisson_driver" in names and "alpha_stable_subordinated" in names, names

    diag = fd.Spec.preset("diagonal_levy")
    assert diag.dim == 2
    paths = diag.simulate([0.0, 0.0], [0.5, 1.0], 20000, seed=3)
    assert paths.n_paths == 20000 and paths.grid == [0.5, 1.0]
    rows = paths.snapshot(1)
    assert all(r[0] == r[1] for r in rows)
    mean = sum(r[0] for r in rows) / len(rows)
    assert close(mean, 1.0, 0.05), mean
    again = diag.simulate([0.0, 0.0], [0.5, 1.0], 20000, seed=3)
    assert again.to_csv() == paths.to_csv()

    report = fd.dependence_test("PUOD", rows, thresholds=[[0.0, 0.0]])
    p = 1.0 - math.exp(-1.0)
    (_, est, se, _), = report.rows
    assert report.verdict == "consistent"
    assert abs(est - (p - p * p)) <= 4 * se, (est, se)
    assert json.loads(report.to_json())["test"] == "PUOD"

    anti = fd.Spec.preset("antidiagonal_levy")
    puod = fd.dependence_test("PUOD", anti.simulate([0.0, 0.0], [1.0], 20000, seed=1).snapshot(0))
    assert puod.verdict == "violated", puod

    f = fd.TestFunction.coordinate_logistic(2, 0)
    g = fd.TestFunction.coordinate_logistic(2, 1)
    direct, reduced = anti.liggett_gap(f, g, [0.0, 0.0])
    sig = lambda v: 1.0 / (1.0 + math.exp(-v))
    assert close(reduced, (sig(1.0) - 0.5) * (sig(-1.0) - 0.5), 1e-12)
    assert close(direct, reduced, 1e-8)
    mass, _ = anti.offorthant_mass([0.0, 0.0])
    assert close(mass, 1.0, 1e-12)

    two = fd.Spec.preset("pseudo_poisson_2state")
    value, se = two.semigroup(fd.TestFunction.upper_orthant([0.5]), [0.0], 1.0, 50000, seed=2)
    assert abs(value - p) <= 4 * se, (value, se)

    triplet = fd.Spec.from_json(
        '{"triplet": {"d": 1, "drift": [0.0], "nu": {"kind": "finite_activity", "rate": 2.0,'
        ' "atoms": [{"point": [1.0], "weight": 1.0}]}, "symbol_bounded": true}}'
    )
    h = fd.TestFunction.coordinate_logistic(1, 0)
    _, reduced = triplet.liggett_gap(h, h, [0.0])
    assert close(reduced, 2.0 * (sig(1.0) - 0.5) ** 2, 1e-12)

    rows, intercept = diag.smalltime_rate([0.0, 0.0], [0.5, 0.5], [math.inf, math.inf], [0.1, 0.05, 0.02], 2000.0)
    assert len(rows) == 3 and close(intercept, 1.0, 0.15), (rows, intercept)

    try:
        fd.Spec.preset("no_such_preset")
    except ValueError:
        pass
    else:
        raise AssertionError("unknown preset accepted")

    print("python smoke test passed")


if __name__ == "__main__":
    main()
