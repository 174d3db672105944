#!/usr/bin/env python3
"""Smoke test for the greensec_py extension module.

Builds the cdylib if needed, imports it by copying the shared library to a
temporary directory under the importable module name, and replays a few
known results: the two-informant recruitment counterexample, quantal
response basics, the oscillation example, and an informant-aware sweep.

Usage: python3 python/smoke_test.py [--no-build]
"""

import json
import math
import shutil
import subprocess
import sys
import sysconfig
import tempfile
from pathlib import Path

REPO = Path(__file__).resolve().parent.parent


def build_extension() -> Path:
    lib = REPO / "target" / "release" / "libgreensec_py.so"
    if "--no-build" not in sys.argv or not lib.exists():
        subprocess.run(
            ["cargo", "build", "-p", "greensec-py", "--release"],
            cwd=REPO,
            check=True,
        )
    if not lib.exists():
        raise SystemExit(f"missing extension library: {lib}")
    return lib


def import_module(lib: Path):
    tmp = Path(tempfile.mkdtemp(prefix="greensec-py-"))
    suffix = sysconfig.get_config_var("EXT_SUFFIX") or ".so"
    shutil.copy2(lib, tmp / f"greensec_py{suffix}")
    sys.path.insert(0, str(tmp))
    import greensec_py  # noqa: E402

    return greensec_py


COUNTEREXAMPLE = {
    "targets": [
        {"rd": 1.0, "pd": -1e-8, "ra": 1.0, "pa": -1.0},
        {"rd": 2.0, "pd": -1e-8, "ra": 1.0, "pa": -1.0},
    ],
    "informants": ["u1", "u2"],
    "attackers": [
        {"id": "v1", "p": 1.0},
        {"id": "v2", "p": 1.0},
        {"id": "v3", "p": 1.0},
    ],
    "edges": [
        {"u": "u1", "v": "v2", "w": 1.0},
        {"u": "u2", "v": "v3", "w": 1.0},
    ],
    "r": 1,
    "k": 2,
    "lambda": 0.0,
}


def main() -> None:
    gs = import_module(build_extension())

    # Quantal response: zero precision is uniform, responds to coverage.
    q = gs.quantal_response([0.9, 0.1, 0.5], [1.0, 1.0, 1.0], [-1.0, -1.0, -1.0], 0.0)
    assert all(abs(v - 1 / 3) < 1e-12 for v in q), q
    q = gs.quantal_response([1.0, 0.0], [1.0, 1.0], [-1.0, -1.0], 1.0)
    assert abs(q[0] - 1.0 / (1.0 + math.exp(2.0))) < 1e-12, q

    # Recruitment counterexample: 3 / 3 / 3 / 3.375, superadditive pair.
    inst = gs.GameInstance.from_json(json.dumps(COUNTEREXAMPLE))
    assert inst.validate() == []
    values = {
        (): inst.evaluate([])[0],
        ("u1",): inst.evaluate(["u1"])[0],
        ("u2",): inst.evaluate(["u2"])[0],
        ("u1", "u2"): inst.evaluate(["u1", "u2"])[0],
    }
    assert abs(values[()] - 3.0) < 1e-6, values
    assert abs(values[("u1",)] - 3.0) < 1e-6, values
    assert abs(values[("u2",)] - 3.0) < 1e-6, values
    assert abs(values[("u1", "u2")] - 3.375) < 1e-6, values
    chosen, value, _ = inst.select(method="esa", evaluator="exact")
    assert chosen == ["u1", "u2"] and abs(value - 3.375) < 1e-6

    # Strong-intensity route agrees with exact on this instance.
    sisi, _ = inst.evaluate(["u1", "u2"], method="sisi")
    assert abs(sisi - values[("u1", "u2")]) < 1e-9

    # Generation, validation, and a routine solve round-trip.
    gen = gs.GameInstance.generate(seed=7, nx=4, ny=5, n=4, r=2, k=2, sum_pv_cap=3.0)
    assert gen.validate() == []
    coverage, attack, def_eu0 = gen.solve_routine()
    assert len(coverage) == gen.num_targets and abs(sum(attack) - 1.0) < 1e-9
    again = gs.GameInstance.from_json(gen.to_json())
    assert again.to_json() == gen.to_json()

    # Oscillation example: convergence at 2.9, a two-cycle at 3.0, and a
    # certified fixed point under damping.
    setup = dict(
        x0=[0.5, 0.5],
        tips=[[1.0, 0.0], [0.0, 1.0]],
        w=0.5,
        reward_att=[0.6, 0.8],
        penalty_att=[-0.8, -0.6],
    )
    levels, converged, residual, cycle = gs.level_trace(lam=2.9, max_level=100_000, **setup)
    assert converged and abs(levels[-1][0] - 0.4283) < 1e-3
    levels, converged, residual, cycle = gs.level_trace(lam=3.0, max_level=100_000, **setup)
    assert not converged and cycle is not None
    lo, hi = sorted([cycle[0][0], cycle[1][0]])
    assert abs(lo - 0.2924) < 1e-3 and abs(hi - 0.5676) < 1e-3
    q, residual, _, converged = gs.fixed_point(lam=3.0, damping=0.5, **setup)
    assert converged and residual <= 1e-6

    # Informant-aware solver: value never drops as tips get likelier.
    single = gs.GameInstance.generate(seed=3, nx=3, ny=1, n=3, r=1, k=2)
    last = -math.inf
    for w in (0.0, 0.5, 1.0):
        _, _, _, objective = single.solve_qri(w=w)
        assert objective >= last - 1e-6
        last = objective

    # Bi-level optimum dominates the level-0 pair.
    marginal, attack, value, pair_value = single.solve_bilevel(w=0.4, restarts=4)
    assert value >= pair_value - 1e-6
    assert sum(marginal) <= single.resources + 1e-6

    print("smoke test passed")


if __name__ == "__main__":
    main()
