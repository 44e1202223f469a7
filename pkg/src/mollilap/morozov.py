"""Discrepancy-principle choice of ``beta`` on a geometric ladder.

Starting from a large ``beta_0``, the ladder ``beta_k = beta_0 q^k`` is walked
down until the residual of the regularized solution first drops to
``tau * delta``. Two search orders are provided:

``"linear"``
    Visit ``k = 0, 1, 2, ...`` in turn (one solve per rung).
``"bisect"``
    Gallop ``k = 0, 1, 3, 7, ...`` until a rung passes, then bisect. The rung
    just above the answer is always evaluated, so the result satisfies the
    same bracket as the linear walk. When the residual is non-increasing
    along the ladder both orders return the same rung.
"""

from dataclasses import dataclass, field
from typing import Any, List, NamedTuple

import numpy as np

from .errors import InputError, SolverError

SEARCHES = ("linear", "bisect")


@dataclass(frozen=True)
class MorozovConfig:
    """Threshold factor, ladder ratio, starting value and step cap."""

    tau: float = 1.01
    q: float = 0.98
    beta0: float = 1e3
    max_steps: int = 2000

    def __post_init__(self):
        if not self.tau > 1:
            raise InputError("tau must exceed 1")
        if not 0 < self.q < 1:
            raise InputError("q must lie in (0, 1)")
        if not self.beta0 > 0:
            raise InputError("beta0 must be positive")
        if int(self.max_steps) != self.max_steps or self.max_steps < 0:
            raise InputError("max_steps must be a non-negative integer")

    def beta(self, k):
        """Rung ``k`` of the ladder, ``beta0 * q**k``."""
        return self.beta0 * self.q ** int(k)

    def threshold(self, delta):
        return self.tau * delta


class LadderStep(NamedTuple):
    """One evaluated rung: ladder index, ``beta`` and residual."""

    index: int
    beta: float
    residual: float


@dataclass
class MorozovResult:
    """Outcome of a successful selection.

    Attributes
    ----------
    beta : float
    index : int
        Ladder index of ``beta``.
    solution : object
        Exactly the object returned by the solve callable at ``beta``.
    residual : float
    trace : list of LadderStep
        Evaluations in the order they were made.
    """

    beta: float
    index: int
    solution: Any
    residual: float
    trace: List[LadderStep] = field(default_factory=list)

    @property
    def solves(self):
        return len(self.trace)


def select_beta(solve, delta, cfg=None, search="linear"):
    """Choose ``beta`` by the discrepancy principle.

    Parameters
    ----------
    solve : callable
        ``solve(beta) -> (solution, residual)``; must be deterministic.
    delta : float
        Noise level, positive.
    cfg : MorozovConfig, optional
    search : {"linear", "bisect"}

    Returns
    -------
    MorozovResult

    Raises
    ------
    SolverError
        When no rung up to ``max_steps`` meets the threshold; ``payload`` is
        the trace.

    Examples
    --------
    >>> res = select_beta(lambda b: (None, b), 1.0, MorozovConfig(beta0=2.0, q=0.5))
    >>> res.index, res.beta
    (1, 1.0)
    """
    cfg = cfg or MorozovConfig()
    if not delta > 0:
        raise InputError("the discrepancy principle needs delta > 0")
    if search not in SEARCHES:
        raise InputError(f"search must be one of {SEARCHES}")
    thr = cfg.threshold(delta)
    trace = []
    best = {}

    def evaluate(k):
        beta = cfg.beta(k)
        sol, res = solve(beta)
        res = float(res)
        trace.append(LadderStep(int(k), beta, res))
        if res <= thr:
            best[k] = sol
        return res <= thr

    if search == "linear":
        for k in range(cfg.max_steps + 1):
            if evaluate(k):
                return MorozovResult(cfg.beta(k), k, best[k], trace[-1].residual, trace)
        raise SolverError(
            f"discrepancy never met: residual stayed above {thr:.3e} over {cfg.max_steps + 1} rungs",
            payload=trace,
        )

    lo, hi = _gallop(evaluate, cfg.max_steps)
    if hi is None:
        raise SolverError(
            f"discrepancy never met: residual above {thr:.3e} on every probed rung up to "
            f"{cfg.max_steps}",
            payload=trace,
        )
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if evaluate(mid):
            best.pop(hi, None)
            hi = mid
        else:
            lo = mid
    res = next(s.residual for s in reversed(trace) if s.index == hi)
    return MorozovResult(cfg.beta(hi), hi, best[hi], res, trace)


def _gallop(evaluate, max_steps):
    """Return ``(lo, hi)`` with rung ``lo`` failing and ``hi`` passing.

    ``lo = -1`` when rung 0 already passes; ``hi = None`` if nothing passes.
    """
    if evaluate(0):
        return -1, 0
    lo, step = 0, 1
    while lo < max_steps:
        k = min(lo + step, max_steps)
        if evaluate(k):
            return lo, k
        lo, step = k, 2 * step
    return lo, None


class _CaseState:
    """Search state of one case inside :func:`select_beta_batch`."""

    def __init__(self, search, max_steps):
        self.search = search
        self.max_steps = max_steps
        self.lo = None
        self.hi = None
        self.step = 1
        self.done = False
        self.failed = False
        self.trace = []
        self.solution = None
        self.hi_residual = None

    def next_probe(self):
        if self.lo is None:
            return 0
        if self.search == "linear":
            return self.lo + 1
        if self.hi is None:
            return min(self.lo + self.step, self.max_steps)
        return (self.lo + self.hi) // 2

    def record(self, k, beta, res, ok, sol):
        self.trace.append(LadderStep(int(k), beta, float(res)))
        if ok:
            self.hi, self.solution, self.hi_residual = k, sol, float(res)
            if k == 0:
                self.lo = -1
        else:
            self.lo = k
            if self.search == "bisect" and self.hi is None:
                self.step = 2 * self.step if k > 0 else 1
        if self.hi is not None and self.hi - (self.lo if self.lo is not None else -1) <= 1:
            self.done = True
        elif self.hi is None and self.lo >= self.max_steps:
            self.done = self.failed = True


def select_beta_batch(solve_many, deltas, cfg=None, search="bisect"):
    """Run :func:`select_beta` for many data sets sharing one ladder.

    Cases that probe the same rung in the same round are solved together,
    which lets a caller reuse one factorization for several right-hand sides.

    Parameters
    ----------
    solve_many : callable
        ``solve_many(beta, cases) -> list of (solution, residual)`` for the
        case indices in ``cases``.
    deltas : sequence of float
    cfg : MorozovConfig, optional
    search : {"linear", "bisect"}

    Returns
    -------
    list
        Per case a :class:`MorozovResult`, or a :class:`SolverError` whose
        payload is the trace when the threshold is never met.
    """
    cfg = cfg or MorozovConfig()
    if search not in SEARCHES:
        raise InputError(f"search must be one of {SEARCHES}")
    deltas = [float(d) for d in deltas]
    if any(not d > 0 for d in deltas):
        raise InputError("the discrepancy principle needs delta > 0")
    states = [_CaseState(search, cfg.max_steps) for _ in deltas]
    while True:
        probes = {}
        for i, st in enumerate(states):
            if not st.done:
                probes.setdefault(st.next_probe(), []).append(i)
        if not probes:
            break
        for k in sorted(probes):
            cases = probes[k]
            beta = cfg.beta(k)
            outs = solve_many(beta, cases)
            for i, (sol, res) in zip(cases, outs):
                ok = float(res) <= cfg.threshold(deltas[i])
                states[i].record(k, beta, res, ok, sol if ok else None)
    results = []
    for d, st in zip(deltas, states):
        if st.failed:
            results.append(SolverError(
                f"discrepancy never met: residual above {cfg.threshold(d):.3e} "
                f"up to rung {cfg.max_steps}", payload=st.trace))
        else:
            results.append(MorozovResult(cfg.beta(st.hi), st.hi, st.solution, st.hi_residual, st.trace))
    return results


def check_bracket(result, delta, cfg=None):
    """Whether ``result`` satisfies ``r(beta*) <= tau delta < r(beta*/q)``.

    Returns ``True`` for ``index == 0`` when only the first half can apply.
    """
    cfg = cfg or MorozovConfig()
    thr = cfg.threshold(delta)
    at = {s.index: s.residual for s in result.trace}
    if result.index not in at or at[result.index] > thr:
        return False
    if result.index == 0:
        return True
    above = at.get(result.index - 1)
    return above is not None and above > thr


def ladder_is_geometric(trace, cfg=None, rtol=1e-14):
    cfg = cfg or MorozovConfig()
    return all(
        abs(s.beta - cfg.beta0 * cfg.q ** s.index) <= rtol * abs(s.beta) for s in trace
    ) and bool(np.all([s.beta > 0 for s in trace]))
