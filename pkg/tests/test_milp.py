"""Solver tests against independent enumeration oracles."""

from __future__ import annotations

import itertools

import numpy as np
import pytest

from ugsopt.milp import (
    EQ,
    GE,
    LE,
    BbOptions,
    LinearProgram,
    MixedProgram,
    MipSolution,
    bb_solve,
    lp_solve,
)


def vertex_enumeration_oracle(lp: LinearProgram) -> float | None:
    """Best objective over all basic feasible points, None if infeasible.

    Works only for fully bounded boxes: every vertex is the solution of n
    linearly independent active constraints drawn from the rows and the
    variable bounds, so trying every size-n subset is exhaustive.
    """
    m, n = lp.A.shape
    assert np.all(np.isfinite(lp.lower)) and np.all(np.isfinite(lp.upper))
    cands: list[tuple[np.ndarray, float]] = []
    for i in range(m):
        cands.append((lp.A[i], lp.rhs[i]))
    for j in range(n):
        e = np.zeros(n)
        e[j] = 1.0
        cands.append((e, lp.lower[j]))
        cands.append((e.copy(), lp.upper[j]))

    def feasible(x: np.ndarray) -> bool:
        if np.any(x < lp.lower - 1e-7) or np.any(x > lp.upper + 1e-7):
            return False
        ax = lp.A @ x
        for i, rel in enumerate(lp.relations):
            if rel == LE and ax[i] > lp.rhs[i] + 1e-7:
                return False
            if rel == GE and ax[i] < lp.rhs[i] - 1e-7:
                return False
            if rel == EQ and abs(ax[i] - lp.rhs[i]) > 1e-7:
                return False
        return True

    best = None
    for subset in itertools.combinations(range(len(cands)), n):
        M = np.array([cands[k][0] for k in subset])
        b = np.array([cands[k][1] for k in subset])
        try:
            x = np.linalg.solve(M, b)
        except np.linalg.LinAlgError:
            continue
        if not np.all(np.isfinite(x)) or np.abs(M @ x - b).max() > 1e-8:
            continue
        if feasible(x):
            val = float(lp.c @ x)
            if best is None or val > best:
                best = val
    return best


def random_box_lp(rng: np.random.Generator) -> LinearProgram:
    n = int(rng.integers(2, 7))
    m = int(rng.integers(1, 7))
    A = rng.integers(-3, 4, size=(m, n)).astype(float)
    A[np.all(A == 0, axis=1), 0] = 1.0
    lower = rng.uniform(-3, 0, size=n)
    upper = lower + rng.uniform(0.5, 4.0, size=n)
    mid = (lower + upper) / 2
    rhs = A @ mid + rng.uniform(-2, 2, size=m)
    relations = [str(rng.choice([LE, GE, EQ], p=[0.5, 0.3, 0.2])) for _ in range(m)]
    c = rng.uniform(-2, 2, size=n)
    return LinearProgram(c, A, relations, rhs, lower, upper)


def test_lp_single_variable_at_bound():
    lp = LinearProgram([1.0], [[1.0]], [LE], [3.0], [0.0], [10.0])
    sol = lp_solve(lp)
    assert sol.status == "optimal"
    assert sol.x[0] == pytest.approx(3.0, abs=1e-9)
    assert sol.objective == pytest.approx(3.0, abs=1e-9)


def test_lp_simplex_face_optimum():
    lp = LinearProgram([1.0, 1.0], [[1.0, 1.0]], [LE], [1.0],
                       [0.0, 0.0], [np.inf, np.inf])
    sol = lp_solve(lp)
    assert sol.status == "optimal"
    assert sol.objective == pytest.approx(1.0, abs=1e-9)


def test_lp_infeasible_and_unbounded():
    bad = LinearProgram([1.0], [[1.0]], [GE], [2.0], [0.0], [1.0])
    assert lp_solve(bad).status == "infeasible"
    crossed = LinearProgram([1.0], [[1.0]], [LE], [5.0], [2.0], [1.0])
    assert lp_solve(crossed).status == "infeasible"
    free = LinearProgram([1.0], [[0.0]], [LE], [1.0], [0.0], [np.inf])
    assert lp_solve(free).status == "unbounded"


def test_lp_equality_rows_and_free_variables():
    # x + y = 2, x - y <= 0, maximize x with y free.
    lp = LinearProgram(
        [1.0, 0.0],
        [[1.0, 1.0], [1.0, -1.0]],
        [EQ, LE],
        [2.0, 0.0],
        [0.0, -np.inf],
        [5.0, np.inf],
    )
    sol = lp_solve(lp)
    assert sol.status == "optimal"
    assert sol.x[0] == pytest.approx(1.0, abs=1e-8)
    assert sol.x[1] == pytest.approx(1.0, abs=1e-8)


def test_lp_random_battery_matches_vertex_oracle():
    rng = np.random.default_rng(20240501)
    solved = 0
    infeasible = 0
    for _ in range(50):
        lp = random_box_lp(rng)
        sol = lp_solve(lp)
        expected = vertex_enumeration_oracle(lp)
        if expected is None:
            assert sol.status == "infeasible"
            infeasible += 1
        else:
            assert sol.status == "optimal"
            assert sol.objective == pytest.approx(expected, abs=1e-6)
            resid = lp.A @ sol.x
            for i, rel in enumerate(lp.relations):
                if rel == LE:
                    assert resid[i] <= lp.rhs[i] + 1e-7
                elif rel == GE:
                    assert resid[i] >= lp.rhs[i] - 1e-7
                else:
                    assert resid[i] == pytest.approx(lp.rhs[i], abs=1e-7)
            solved += 1
    assert solved >= 20 and infeasible >= 1


def test_lp_deterministic():
    rng = np.random.default_rng(7)
    lp = random_box_lp(rng)
    a = lp_solve(lp)
    b = lp_solve(lp)
    assert a.status == b.status == "optimal"
    assert a.iterations == b.iterations
    assert np.array_equal(a.x, b.x)


def knapsack(values, weights, cap) -> MixedProgram:
    n = len(values)
    lp = LinearProgram(
        np.asarray(values, dtype=float),
        np.asarray(weights, dtype=float).reshape(1, n),
        [LE],
        [float(cap)],
        np.zeros(n),
        np.ones(n),
    )
    return MixedProgram(lp, list(range(n)))


def exhaustive_binary_oracle(mp: MixedProgram) -> tuple[float, tuple[int, ...]] | None:
    """Try every binary pattern, solving the continuous rest by LP."""
    lp = mp.lp
    best = None
    for bits in itertools.product((0.0, 1.0), repeat=len(mp.binary)):
        lo = lp.lower.copy()
        hi = lp.upper.copy()
        for j, v in zip(mp.binary, bits):
            lo[j] = hi[j] = v
        sub = lp_solve(LinearProgram(lp.c, lp.A, lp.relations, lp.rhs, lo, hi))
        if sub.status != "optimal":
            continue
        if best is None or sub.objective > best[0]:
            best = (sub.objective, tuple(int(b) for b in bits))
    return best


def test_bb_knapsack_example():
    # Exhaustive 2^3 enumeration: (1, 0, 1) is the only feasible point worth
    # 14; every heavier pattern breaks the capacity row.
    mp = knapsack([10.0, 6.0, 4.0], [5.0, 4.0, 3.0], 8.0)
    oracle = exhaustive_binary_oracle(mp)
    assert oracle == (pytest.approx(14.0, abs=1e-9), (1, 0, 1))
    sol = bb_solve(mp)
    assert sol.status == "optimal"
    assert sol.objective == pytest.approx(14.0, abs=1e-9)
    assert np.round(sol.x).tolist() == [1.0, 0.0, 1.0]
    assert sol.gap <= 1e-6


def test_bb_no_binaries_degenerates_to_lp():
    lp = LinearProgram([1.0, 2.0], [[1.0, 1.0]], [LE], [4.0],
                       [0.0, 0.0], [3.0, 3.0])
    plain = lp_solve(lp)
    sol = bb_solve(MixedProgram(lp, []))
    assert sol.status == "optimal"
    assert sol.objective == pytest.approx(plain.objective, abs=1e-12)


def random_mixed_program(rng: np.random.Generator) -> MixedProgram:
    n_bin = int(rng.integers(1, 9))
    n_cont = int(rng.integers(0, 4))
    n = n_bin + n_cont
    m = int(rng.integers(1, 6))
    A = rng.uniform(-3, 3, size=(m, n))
    lower = np.concatenate([np.zeros(n_bin), rng.uniform(-2, 0, size=n_cont)])
    upper = np.concatenate([np.ones(n_bin), rng.uniform(0.5, 3.0, size=n_cont)])
    mid = (lower + upper) / 2
    rhs = A @ mid + rng.uniform(-1, 1.5, size=m)
    relations = [str(rng.choice([LE, GE], p=[0.7, 0.3])) for _ in range(m)]
    c = rng.uniform(-2, 3, size=n)
    return MixedProgram(LinearProgram(c, A, relations, rhs, lower, upper),
                        list(range(n_bin)))


def test_bb_random_battery_matches_exhaustive_oracle():
    rng = np.random.default_rng(8675309)
    feasible = 0
    for _ in range(100):
        mp = random_mixed_program(rng)
        sol = bb_solve(mp, BbOptions(gap_tol=1e-9))
        expected = exhaustive_binary_oracle(mp)
        if expected is None:
            assert sol.status == "infeasible"
        else:
            assert sol.status == "optimal"
            assert sol.objective == pytest.approx(expected[0], abs=1e-6)
            for j in mp.binary:
                assert abs(sol.x[j] - round(sol.x[j])) <= 1e-6
            feasible += 1
    assert feasible >= 50


def test_bb_incumbent_within_bound_and_deterministic():
    rng = np.random.default_rng(99)
    mp = random_mixed_program(rng)
    a = bb_solve(mp)
    b = bb_solve(mp)
    assert a.status == b.status
    assert a.nodes == b.nodes
    if a.x is not None:
        assert np.array_equal(a.x, b.x)
        assert a.objective <= a.bound + 1e-6 * max(1e-10, abs(a.objective)) + 1e-9


def test_bb_time_limit_status():
    rng = np.random.default_rng(5150)
    mp = random_mixed_program(rng)
    sol = bb_solve(mp, BbOptions(time_limit_s=0.0))
    assert isinstance(sol, MipSolution)
    assert sol.status in ("time-limit", "optimal", "infeasible")
    # A zero budget must not manufacture an unproven "optimal".
    if sol.status == "optimal":
        assert sol.gap <= 1e-6


def test_bb_infeasible_integer_program():
    # x1 + x2 = 1 with both forced up by a second row -> no binary point fits.
    lp = LinearProgram(
        [1.0, 1.0],
        [[1.0, 1.0], [1.0, 1.0]],
        [EQ, GE],
        [1.0, 2.0],
        [0.0, 0.0],
        [1.0, 1.0],
    )
    sol = bb_solve(MixedProgram(lp, [0, 1]))
    assert sol.status == "infeasible"
