"""Dense LP and mixed-binary solvers.

A full-tableau bounded-variable primal simplex (two-phase, Dantzig pricing
with a Bland fallback once the iteration stalls) plus a best-bound branch
and bound built on top of it.  Everything is deterministic and runs on a
single thread; problems here are small and dense, so the tableau form is
the simplest thing that is fast enough.
"""

from __future__ import annotations

import heapq
import math
import time
from dataclasses import dataclass, field

import numpy as np

# Relations accepted for constraint rows.
LE, EQ, GE = "<=", "=", ">="

_RC_TOL = 1e-9        # reduced-cost tolerance for entering candidates
_PIVOT_TOL = 1e-10    # smallest pivot magnitude accepted outright
_FEAS_TOL = 1e-7      # feasibility residual guarantee on returned solutions
_PHASE1_TOL = 1e-7    # residual infeasibility tolerated after phase 1
_STALL_LIMIT = 200    # degenerate pivots in a row before switching to Bland

_BASIC, _AT_LOWER, _AT_UPPER, _FREE, _FIXED = range(5)


@dataclass
class LinearProgram:
    """max c,x  subject to  A x (<=,=,>=) rhs  and  lower <= x <= upper."""

    c: np.ndarray
    A: np.ndarray
    relations: list[str]
    rhs: np.ndarray
    lower: np.ndarray
    upper: np.ndarray
    names: list[str] | None = None

    def __post_init__(self) -> None:
        self.c = np.asarray(self.c, dtype=float)
        self.A = np.atleast_2d(np.asarray(self.A, dtype=float))
        self.rhs = np.asarray(self.rhs, dtype=float)
        self.lower = np.asarray(self.lower, dtype=float)
        self.upper = np.asarray(self.upper, dtype=float)
        m, n = self.A.shape
        if self.c.shape != (n,) or self.rhs.shape != (m,):
            raise ValueError("objective/rhs shapes do not match the matrix")
        if self.lower.shape != (n,) or self.upper.shape != (n,):
            raise ValueError("bound shapes do not match the matrix")
        if len(self.relations) != m:
            raise ValueError("one relation required per row")
        bad = [r for r in self.relations if r not in (LE, EQ, GE)]
        if bad:
            raise ValueError(f"unknown relation {bad[0]!r}")


@dataclass
class MixedProgram:
    """A LinearProgram plus the indices of variables restricted to {0, 1}."""

    lp: LinearProgram
    binary: list[int] = field(default_factory=list)

    def __post_init__(self) -> None:
        for j in self.binary:
            if not (self.lp.lower[j] >= -0.0 and self.lp.upper[j] <= 1.0):
                raise ValueError(f"binary variable {j} must have bounds within [0, 1]")


@dataclass
class LpSolution:
    status: str                 # optimal | infeasible | unbounded | numerical
    x: np.ndarray | None
    objective: float | None
    iterations: int
    message: str = ""


@dataclass
class BbOptions:
    gap_tol: float = 1e-6
    time_limit_s: float | None = None
    node_limit: int | None = None
    int_tol: float = 1e-6


@dataclass
class MipSolution:
    status: str                 # optimal | feasible-gap | infeasible | unbounded | time-limit | numerical
    x: np.ndarray | None
    objective: float | None
    bound: float
    gap: float
    nodes: int
    wall_time: float


class _Tableau:
    """Mutable simplex state over the extended column set."""

    def __init__(self, lp: LinearProgram):
        m, n0 = lp.A.shape
        self.m, self.n0 = m, n0
        relations = lp.relations

        # Column layout: structurals, inequality slacks, artificials.
        slack_rows = [i for i in range(m) if relations[i] != EQ]
        self.slack_of_row = {i: n0 + k for k, i in enumerate(slack_rows)}
        n_slack = len(slack_rows)

        lower = [lp.lower.copy()]
        upper = [lp.upper.copy()]
        s_lo = np.array([0.0 if relations[i] == LE else -np.inf for i in slack_rows])
        s_hi = np.array([np.inf if relations[i] == LE else 0.0 for i in slack_rows])
        lower.append(s_lo)
        upper.append(s_hi)

        # Nonbasic start: finite lower if any, else finite upper, else 0 (free).
        x0 = np.where(np.isfinite(lp.lower), lp.lower,
                      np.where(np.isfinite(lp.upper), lp.upper, 0.0))
        resid = lp.rhs - lp.A @ x0

        basis = np.empty(m, dtype=int)
        art_rows: list[int] = []
        art_sign: list[float] = []
        xval = [x0]
        s0 = np.zeros(n_slack)
        for k, i in enumerate(slack_rows):
            if s_lo[k] <= resid[i] <= s_hi[k]:
                s0[k] = resid[i]
                basis[i] = n0 + k
            else:
                art_rows.append(i)
                art_sign.append(1.0 if resid[i] >= 0 else -1.0)
        for i in range(m):
            if relations[i] == EQ:
                art_rows.append(i)
                art_sign.append(1.0 if resid[i] >= 0 else -1.0)
        xval.append(s0)

        n_art = len(art_rows)
        a_cols = np.zeros((m, n_art))
        a0 = np.zeros(n_art)
        for k, (i, sg) in enumerate(zip(art_rows, art_sign)):
            a_cols[i, k] = sg
            basis[i] = n0 + n_slack + k
            a0[k] = abs(resid[i])
        xval.append(a0)
        lower.append(np.zeros(n_art))
        upper.append(np.full(n_art, np.inf))

        s_cols = np.zeros((m, n_slack))
        for k, i in enumerate(slack_rows):
            s_cols[i, k] = 1.0

        self.cols = np.hstack([lp.A, s_cols, a_cols])
        self.rhs = lp.rhs.copy()
        self.lower = np.concatenate(lower)
        self.upper = np.concatenate(upper)
        self.xval = np.concatenate(xval)
        self.basis = basis
        self.n = self.cols.shape[1]
        self.n_art = n_art
        self.art_start = n0 + n_slack

        # Initial basis matrix is diagonal (+-1), so T is just sign-scaled rows.
        self.T = self.cols.copy()
        for i, sg in zip(art_rows, art_sign):
            if sg < 0:
                self.T[i] *= -1.0

        self.status = np.full(self.n, _AT_LOWER, dtype=int)
        for j in range(self.n):
            lo, hi = self.lower[j], self.upper[j]
            if lo == hi:
                self.status[j] = _FIXED
            elif np.isfinite(lo):
                self.status[j] = _AT_LOWER
            elif np.isfinite(hi):
                self.status[j] = _AT_UPPER
            else:
                self.status[j] = _FREE
        self.status[basis] = _BASIC

    def reduced_costs(self, c_ext: np.ndarray) -> np.ndarray:
        return c_ext - c_ext[self.basis] @ self.T

    def run(self, c_ext: np.ndarray, max_iter: int) -> tuple[str, int]:
        """Pivot until optimal for c_ext.  Returns (status, iterations)."""
        d = self.reduced_costs(c_ext)
        stall = 0
        bland = False
        iters = 0
        while True:
            if iters >= max_iter:
                return "iteration-limit", iters
            if iters and iters % 200 == 0:
                d = self.reduced_costs(c_ext)  # shed incremental drift
            enter_up = (self.status == _AT_LOWER) & (d > _RC_TOL)
            enter_dn = (self.status == _AT_UPPER) & (d < -_RC_TOL)
            free_mv = (self.status == _FREE) & (np.abs(d) > _RC_TOL)
            eligible = enter_up | enter_dn | free_mv
            if not eligible.any():
                return "optimal", iters
            if bland:
                q = int(np.flatnonzero(eligible)[0])
            else:
                scores = np.where(eligible, np.abs(d), -1.0)
                q = int(np.argmax(scores))
            direction = 1.0 if (enter_up[q] or (free_mv[q] and d[q] > 0)) else -1.0

            col = self.T[:, q]
            step = direction * col  # basics move by -step * t
            bvals = self.xval[self.basis]
            blo = self.lower[self.basis]
            bhi = self.upper[self.basis]
            with np.errstate(divide="ignore", invalid="ignore"):
                lim_lo = np.where(step > _PIVOT_TOL, (bvals - blo) / step, np.inf)
                lim_hi = np.where(step < -_PIVOT_TOL, (bvals - bhi) / step, np.inf)
            limits = np.minimum(np.maximum(lim_lo, 0.0), np.maximum(lim_hi, 0.0))

            t_own = self.upper[q] - self.lower[q]
            if not np.isfinite(t_own):
                t_own = np.inf
            t_basic = limits.min() if self.m else np.inf
            if t_own <= t_basic:
                if not np.isfinite(t_own):
                    return "unbounded", iters
                # Bound flip: q runs to its opposite bound, basis unchanged.
                self.xval[self.basis] = bvals - step * t_own
                if self.status[q] == _AT_LOWER:
                    self.xval[q] = self.upper[q]
                    self.status[q] = _AT_UPPER
                else:
                    self.xval[q] = self.lower[q]
                    self.status[q] = _AT_LOWER
                iters += 1
                continue
            if not np.isfinite(t_basic):
                return "unbounded", iters

            near = np.flatnonzero(limits <= t_basic + 1e-12)
            if bland:
                r = int(near[np.argmin(self.basis[near])])
            else:
                r = int(near[np.argmax(np.abs(col[near]))])
            t = max(float(limits[r]), 0.0)

            leaving = self.basis[r]
            hit_upper = step[r] < 0
            self.xval[self.basis] = bvals - step * t
            if self.status[q] == _AT_LOWER:
                self.xval[q] = self.lower[q] + t
            elif self.status[q] == _AT_UPPER:
                self.xval[q] = self.upper[q] - t
            else:
                self.xval[q] = direction * t
            self.xval[leaving] = self.upper[leaving] if hit_upper else self.lower[leaving]
            self.status[leaving] = _AT_UPPER if hit_upper else _AT_LOWER
            if self.lower[leaving] == self.upper[leaving]:
                self.status[leaving] = _FIXED
            self.status[q] = _BASIC

            piv = self.T[r, q]
            row = self.T[r] / piv
            colv = self.T[:, q].copy()
            self.T -= np.outer(colv, row)
            self.T[r] = row
            d = d - d[q] * row
            self.basis[r] = q

            stall = stall + 1 if t <= 1e-12 else 0
            if stall > _STALL_LIMIT:
                bland = True
            iters += 1

    def polish(self) -> bool:
        """Re-solve basic values against the original columns to shed drift."""
        nb = np.flatnonzero(self.status != _BASIC)
        rhs = self.rhs - self.cols[:, nb] @ self.xval[nb]
        B = self.cols[:, self.basis]
        try:
            xb = np.linalg.solve(B, rhs)
        except np.linalg.LinAlgError:
            xb, *_ = np.linalg.lstsq(B, rhs, rcond=None)
        self.xval[self.basis] = xb
        resid = np.abs(self.cols @ self.xval - self.rhs).max() if self.m else 0.0
        lo_viol = np.max(self.lower - self.xval, initial=0.0)
        hi_viol = np.max(self.xval - self.upper, initial=0.0)
        return resid <= _FEAS_TOL and lo_viol <= _FEAS_TOL and hi_viol <= _FEAS_TOL


def lp_solve(lp: LinearProgram, max_iter: int | None = None) -> LpSolution:
    """Solve a bounded LP to optimality.

    Returns status "optimal" with x and objective, or one of "infeasible",
    "unbounded", "numerical".  Feasible answers satisfy row residuals and
    bound violations of at most 1e-7; numerical trouble is reported as its
    own status rather than as a wrong answer.
    """
    if np.any(lp.lower > lp.upper + 1e-12):
        return LpSolution("infeasible", None, None, 0, "crossed variable bounds")
    tab = _Tableau(lp)
    if max_iter is None:
        max_iter = max(2000, 50 * (tab.m + tab.n))

    iters = 0
    if tab.n_art:
        c1 = np.zeros(tab.n)
        c1[tab.art_start:] = -1.0
        status, it1 = tab.run(c1, max_iter)
        iters += it1
        if status == "iteration-limit":
            return LpSolution("numerical", None, None, iters, "phase 1 iteration limit")
        if status != "optimal":
            return LpSolution("numerical", None, None, iters, f"phase 1 ended {status}")
        if tab.xval[tab.art_start:].sum() > _PHASE1_TOL:
            return LpSolution("infeasible", None, None, iters, "phase 1 residual")
        # Pin artificials to zero for phase 2; basic ones stay at value 0.
        tab.lower[tab.art_start:] = 0.0
        tab.upper[tab.art_start:] = 0.0
        for j in range(tab.art_start, tab.n):
            if tab.status[j] != _BASIC:
                tab.status[j] = _FIXED
                tab.xval[j] = 0.0

    c2 = np.zeros(tab.n)
    c2[: tab.n0] = lp.c
    status, it2 = tab.run(c2, max_iter)
    iters += it2
    if status == "unbounded":
        return LpSolution("unbounded", None, None, iters)
    if status == "iteration-limit":
        return LpSolution("numerical", None, None, iters, "phase 2 iteration limit")

    if not tab.polish():
        return LpSolution("numerical", None, None, iters, "residuals exceed tolerance")
    x = tab.xval[: tab.n0].copy()
    return LpSolution("optimal", x, float(lp.c @ x), iters)


def _fractional(x: np.ndarray, binary: list[int], tol: float) -> list[tuple[float, int]]:
    out = []
    for j in binary:
        f = abs(x[j] - round(x[j]))
        if f > tol:
            out.append((f, j))
    return out


def _solve_fixed(lp: LinearProgram, fixed: dict[int, float]) -> LpSolution:
    lo = lp.lower.copy()
    hi = lp.upper.copy()
    for j, v in fixed.items():
        lo[j] = hi[j] = v
    return lp_solve(LinearProgram(lp.c, lp.A, lp.relations, lp.rhs, lo, hi))


def _round_repair(lp: LinearProgram, binary: list[int], x_root: np.ndarray) -> tuple[dict[int, float], LpSolution] | None:
    """Round the root relaxation and flip bits greedily until feasible."""
    fixed = {j: float(round(x_root[j])) for j in binary}
    for _ in range(len(binary) + 1):
        sol = _solve_fixed(lp, fixed)
        if sol.status == "optimal":
            return fixed, sol
        if sol.status != "infeasible":
            return None
        # Flip the single bit that most reduces constraint violation at the
        # root values of the continuous variables.
        base = x_root.copy()
        for j, v in fixed.items():
            base[j] = v
        best_j, best_v = None, _violation(lp, base)
        for j in binary:
            trial = base.copy()
            trial[j] = 1.0 - fixed[j]
            v = _violation(lp, trial)
            if v < best_v - 1e-12:
                best_j, best_v = j, v
        if best_j is None:
            return None
        fixed[best_j] = 1.0 - fixed[best_j]
    return None


def _violation(lp: LinearProgram, x: np.ndarray) -> float:
    ax = lp.A @ x
    total = 0.0
    for i, rel in enumerate(lp.relations):
        if rel == LE:
            total += max(0.0, ax[i] - lp.rhs[i])
        elif rel == GE:
            total += max(0.0, lp.rhs[i] - ax[i])
        else:
            total += abs(ax[i] - lp.rhs[i])
    return total


def bb_solve(mp: MixedProgram, opts: BbOptions | None = None) -> MipSolution:
    """Best-bound branch and bound over the binary variables of mp.

    Branches on the most fractional binary (ties toward the lowest index)
    and dives depth-first from each node taken off the heap.  The reported
    gap is |bound - objective| / max(1e-10, |objective|).
    """
    opts = opts or BbOptions()
    t0 = time.perf_counter()
    lp = mp.lp
    binary = sorted(mp.binary)

    def out_of_time() -> bool:
        return opts.time_limit_s is not None and time.perf_counter() - t0 > opts.time_limit_s

    root = lp_solve(lp)
    if root.status in ("infeasible", "unbounded", "numerical"):
        status = root.status
        return MipSolution(status, None, None, math.inf, math.inf, 1, time.perf_counter() - t0)

    nodes = 1
    incumbent: np.ndarray | None = None
    inc_obj = -math.inf

    if binary:
        seeded = _round_repair(lp, binary, root.x)
        if seeded is not None:
            fixed, sol = seeded
            incumbent, inc_obj = sol.x, sol.objective
    else:
        # Nothing to branch on: the relaxation is the answer.
        return MipSolution("optimal", root.x, root.objective, root.objective, 0.0, 1,
                           time.perf_counter() - t0)

    def rel_gap(bound: float) -> float:
        if incumbent is None:
            return math.inf
        return abs(bound - inc_obj) / max(1e-10, abs(inc_obj))

    counter = 0
    heap: list[tuple[float, int, dict[int, float]]] = []
    heapq.heappush(heap, (-root.objective, counter, {}))
    limit_hit: str | None = None

    while heap:
        neg_bound, cnt, fixed = heapq.heappop(heap)
        node_bound = -neg_bound
        if incumbent is not None and rel_gap(node_bound) <= opts.gap_tol:
            heapq.heappush(heap, (neg_bound, cnt, fixed))
            break
        if out_of_time():
            limit_hit = "time-limit"
            heapq.heappush(heap, (neg_bound, cnt, fixed))
            break
        if opts.node_limit is not None and nodes >= opts.node_limit:
            limit_hit = "node-limit"
            heapq.heappush(heap, (neg_bound, cnt, fixed))
            break

        # Depth-first dive from this node.
        while True:
            sol = _solve_fixed(lp, fixed) if fixed else root
            nodes += 1 if fixed else 0
            if sol.status == "numerical":
                return MipSolution("numerical", None, None, node_bound, math.inf, nodes,
                                   time.perf_counter() - t0)
            if sol.status != "optimal":
                break
            bound = sol.objective
            if incumbent is not None and bound <= inc_obj + opts.gap_tol * max(1e-10, abs(inc_obj)):
                break
            frac = _fractional(sol.x, binary, opts.int_tol)
            if not frac:
                if bound > inc_obj:
                    incumbent, inc_obj = sol.x.copy(), bound
                break
            fmax = max(f for f, _ in frac)
            q = min(j for f, j in frac if f >= fmax - 1e-15)
            near = float(round(sol.x[q]))
            other = dict(fixed)
            other[q] = 1.0 - near
            counter += 1
            heapq.heappush(heap, (-bound, counter, other))
            fixed = dict(fixed)
            fixed[q] = near
            if out_of_time():
                # Keep the unexplored dive child on the open list so the
                # reported bound stays honest.
                counter += 1
                heapq.heappush(heap, (-bound, counter, fixed))
                limit_hit = "time-limit"
                break

    open_bound = max((-h[0] for h in heap), default=-math.inf)
    best_bound = max(open_bound, inc_obj)
    wall = time.perf_counter() - t0
    if incumbent is None:
        if limit_hit:
            return MipSolution("time-limit", None, None, best_bound, math.inf, nodes, wall)
        return MipSolution("infeasible", None, None, -math.inf, math.inf, nodes, wall)
    gap = rel_gap(best_bound)
    if limit_hit:
        status = "time-limit" if limit_hit == "time-limit" else "feasible-gap"
    elif gap <= opts.gap_tol:
        status = "optimal"
    else:
        status = "feasible-gap"
    return MipSolution(status, incumbent, inc_obj, best_bound, gap, nodes, wall)
