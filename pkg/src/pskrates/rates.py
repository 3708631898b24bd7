"""Finite-size secret-key-rate estimators and their optimization.

Three lower bounds on the extractable key per channel use, all of the form
entropy term + (1 + 2 log2 eps') / n - correction - leak:

* S:   optimized sandwiched Rényi entropy with correction g(eps)/(n (a-1)),
* AEP: von Neumann entropy with correction delta(eps)/sqrt(n),
* B:   second-order continuity bound with the same correction as S.

The leak is the asymptotic error-correction cost H_N(Y|X) in reverse
reconciliation. Rates are reported as computed (possibly negative); the
``key_possible`` flag marks the sign.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import entropies
from .optimize import nelder_mead
from .states import (
    CQEnsemble,
    ProtocolParams,
    SymmetryGroup,
    build_ensemble,
    cond_prob_table,
)

#: Default upper bound of the Rényi-order search for the S estimator. The
#: optimum grows as the block size shrinks, so this is user-adjustable.
A_MAX_S_DEFAULT = 4.0
A_MAX_S_LIMIT = 64.0

#: Rényi-order search floor, as an offset from 1.
A_MIN_OFFSET = 1e-9
_A_GRID_OFFSET_MIN = 1e-5

ALPHA_BOUNDS_DEFAULT = (0.05, 3.0)


@dataclass(frozen=True)
class SecurityParams:
    """Block size, smoothing and hashing failure parameters, Rényi order.

    ``a`` is unused by the AEP estimator and may be None there. The derived
    security parameter of the extracted key is eps + eps_prime.
    """

    n: float
    eps: float = 1e-8
    eps_prime: float = 1e-8
    a: float | None = None

    def __post_init__(self):
        if not self.n >= 1:
            raise ValueError(f"block size must be >= 1, got {self.n}")
        for name, value in (("eps", self.eps), ("eps_prime", self.eps_prime)):
            if not 0.0 < value < 1.0:
                raise ValueError(f"{name} must lie in (0, 1), got {value}")
        if self.eps + self.eps_prime >= 1.0:
            raise ValueError("eps + eps_prime must stay below 1")


def g_eps(eps: float) -> float:
    """Smoothing penalty -log2(1 - sqrt(1 - eps^2)), in bits.

    Evaluated as -log2(eps^2 / (1 + sqrt(1 - eps^2))) to avoid cancellation
    at small eps. Bounded by log2(2/eps^2).
    """
    if not 0.0 < eps <= 1.0:
        raise ValueError(f"eps must lie in (0, 1], got {eps}")
    return -math.log2(eps * eps / (1.0 + math.sqrt(1.0 - eps * eps)))


def delta_eps(eps: float, n_states: int) -> float:
    """Asymptotic-equipartition correction 4 log2(2 + sqrt(N)) sqrt(log2(2/eps^2))."""
    if not 0.0 < eps < 1.0:
        raise ValueError(f"eps must lie in (0, 1), got {eps}")
    if n_states not in (2, 4):
        raise ValueError(f"n_states must be 2 or 4, got {n_states}")
    return 4.0 * math.log2(2.0 + math.sqrt(n_states)) * math.sqrt(math.log2(2.0 / eps**2))


def _binary_entropy(p: float) -> float:
    out = 0.0
    for q in (p, 1.0 - p):
        if q > 0.0:
            out -= q * math.log2(q)
    return out


def leak_bpsk(params: ProtocolParams) -> float:
    """Reconciliation leak h2(p_+) with p_+- = (1 +- erf(sqrt(2 eta) alpha))/2."""
    if params.n_states != 2:
        raise ValueError("leak_bpsk requires n_states == 2")
    r = math.erf(math.sqrt(2.0 * params.eta) * params.alpha)
    return _binary_entropy((1.0 + r) / 2.0)


def leak_qpsk(params: ProtocolParams) -> float:
    """Reconciliation leak -2 (P_+ log2 P_+ + P_- log2 P_-) for N=4."""
    if params.n_states != 4:
        raise ValueError("leak_qpsk requires n_states == 4")
    r = math.erf(math.sqrt(params.eta / 2.0) * params.alpha)
    return 2.0 * _binary_entropy((1.0 + r) / 2.0)


def leak(params: ProtocolParams) -> float:
    """Reconciliation leak H_N(Y|X) for either protocol."""
    return leak_bpsk(params) if params.n_states == 2 else leak_qpsk(params)


def leak_from_table(table: np.ndarray) -> float:
    """H_N(Y|X) from a conditional probability table with uniform inputs.

    Generic column-entropy evaluation, the cross-check for the closed-form
    leaks.
    """
    table = np.asarray(table, dtype=float)
    n = table.shape[1]
    total = 0.0
    for x in range(n):
        col = table[:, x]
        col = col[col > 0.0]
        total -= float((col * np.log2(col)).sum())
    return total / n


def _hash_term(sp: SecurityParams) -> float:
    return (1.0 + 2.0 * math.log2(sp.eps_prime)) / sp.n


def rate_s(ensemble: CQEnsemble, sp: SecurityParams,
           group: SymmetryGroup | None = None) -> float:
    """Key-rate bound from the optimized sandwiched Rényi entropy (a > 1)."""
    if sp.a is None or sp.a <= 1.0:
        raise ValueError("the S estimator needs a Renyi order a > 1")
    h = entropies.sandwiched_up_invariant(ensemble, sp.a, group)
    return float(h + _hash_term(sp) - g_eps(sp.eps) / (sp.n * (sp.a - 1.0))
                 - leak(ensemble.params))


def rate_aep(ensemble: CQEnsemble, sp: SecurityParams) -> float:
    """Key-rate bound from the asymptotic equipartition property."""
    h = entropies.von_neumann_cq(ensemble)
    return float(h + _hash_term(sp)
                 - delta_eps(sp.eps, ensemble.n_states) / math.sqrt(sp.n)
                 - leak(ensemble.params))


def rate_b(ensemble: CQEnsemble, sp: SecurityParams) -> float:
    """Key-rate bound from the von Neumann continuity bound (a in (1, 2))."""
    if sp.a is None:
        raise ValueError("the B estimator needs a Renyi order in (1, 2)")
    b = entropies.continuity_bound(ensemble, sp.a)
    return float(b + _hash_term(sp) - g_eps(sp.eps) / (sp.n * (sp.a - 1.0))
                 - leak(ensemble.params))


@dataclass(frozen=True)
class RateResult:
    """Optimized key-rate bound together with the optimizing parameters."""

    estimator: str
    rate: float
    alpha_opt: float
    a_opt: float | None
    leak: float
    key_possible: bool
    converged: bool = True


class _EnsembleCache:
    """Per-alpha ensemble reuse during the grid scan."""

    def __init__(self, n_states: int, eta: float):
        self.n_states = n_states
        self.eta = eta
        self._store: dict[float, CQEnsemble] = {}

    def get(self, alpha: float) -> CQEnsemble:
        key = float(alpha)
        if key not in self._store:
            self._store[key] = build_ensemble(
                ProtocolParams(n_states=self.n_states, alpha=key, eta=self.eta))
        return self._store[key]


def optimize_rate(
    estimator: str,
    n_states: int,
    eta: float,
    n: float,
    eps: float = 1e-8,
    eps_prime: float = 1e-8,
    alpha_bounds: tuple[float, float] = ALPHA_BOUNDS_DEFAULT,
    a_max: float | None = None,
    grid_points: int = 25,
) -> RateResult:
    """Maximize an estimator over the amplitude and the Rényi order.

    A coarse grid scan (``grid_points`` per axis; the order axis is gridded
    in log(a - 1)) locates the basin, then Nelder-Mead refines from the best
    three grid points. Ties in the scan break toward the lexicographically
    smallest (alpha, a). The AEP estimator has no order parameter and is
    optimized over alpha alone. Negative optima are returned as computed,
    flagged by ``key_possible``.
    """
    estimator = estimator.upper()
    if estimator not in ("S", "AEP", "B"):
        raise ValueError(f"unknown estimator {estimator!r}")
    if a_max is None:
        a_max = A_MAX_S_DEFAULT if estimator == "S" else entropies.CONTINUITY_A_MAX
    if estimator == "S" and not 1.0 < a_max <= A_MAX_S_LIMIT:
        raise ValueError(f"a_max must lie in (1, {A_MAX_S_LIMIT}]")
    if estimator == "B":
        a_max = min(a_max, entropies.CONTINUITY_A_MAX)
    lo, hi = alpha_bounds
    if not 0.0 < lo < hi:
        raise ValueError(f"invalid alpha bounds {alpha_bounds}")

    cache = _EnsembleCache(n_states, eta)
    log_a_lo = math.log(_A_GRID_OFFSET_MIN)
    log_a_hi = math.log(a_max - 1.0)
    base = SecurityParams(n=n, eps=eps, eps_prime=eps_prime)

    def evaluate(alpha: float, log_a: float | None) -> float:
        ensemble = cache.get(alpha)
        if estimator == "AEP":
            return rate_aep(ensemble, base)
        sp = SecurityParams(n=n, eps=eps, eps_prime=eps_prime,
                            a=1.0 + math.exp(log_a))
        return rate_s(ensemble, sp) if estimator == "S" else rate_b(ensemble, sp)

    alphas = np.linspace(lo, hi, grid_points)
    if estimator == "AEP":
        scored = [(evaluate(al, None), (al,)) for al in alphas]
    else:
        log_as = np.linspace(log_a_lo, log_a_hi, grid_points)
        scored = [(evaluate(al, la), (al, la)) for al in alphas for la in log_as]
    # deterministic reduction: max by value, ties to smallest parameters
    scored.sort(key=lambda item: (-item[0], item[1]))

    dim = 1 if estimator == "AEP" else 2
    simplex = [np.array(scored[i][1]) for i in range(dim + 1)]
    if dim == 2:
        span = np.array([simplex[1] - simplex[0], simplex[2] - simplex[0]])
        if abs(np.linalg.det(span)) < 1e-12:  # collinear grid points stall NM
            step_alpha = (hi - lo) / (grid_points - 1)
            step_log_a = (log_a_hi - log_a_lo) / (grid_points - 1)
            if abs(simplex[1][0] - simplex[0][0]) < 1e-12:
                simplex[2] = simplex[0] + np.array([step_alpha, 0.0])
            else:
                simplex[2] = simplex[0] + np.array([0.0, step_log_a])
    elif abs(simplex[1][0] - simplex[0][0]) < 1e-12:
        simplex[1] = simplex[0] + np.array([(hi - lo) / (grid_points - 1)])

    def clip(x: np.ndarray) -> tuple[float, float | None]:
        alpha = float(min(max(x[0], lo), hi))
        if estimator == "AEP":
            return alpha, None
        log_a = float(min(max(x[1], math.log(A_MIN_OFFSET)), log_a_hi))
        return alpha, log_a

    def negated(x: np.ndarray) -> float:
        return -evaluate(*clip(x))

    refined = nelder_mead(negated, simplex, f_tol=1e-9, max_iter=500)
    best_rate = -refined.fun
    alpha_opt, log_a_opt = clip(refined.x)
    if scored[0][0] > best_rate:  # keep the grid winner if refinement regressed
        best_rate = scored[0][0]
        alpha_opt = scored[0][1][0]
        log_a_opt = None if estimator == "AEP" else scored[0][1][1]

    a_opt = None if estimator == "AEP" else 1.0 + math.exp(log_a_opt)
    return RateResult(
        estimator=estimator,
        rate=float(best_rate),
        alpha_opt=float(alpha_opt),
        a_opt=a_opt,
        leak=leak(ProtocolParams(n_states=n_states, alpha=alpha_opt, eta=eta)),
        key_possible=bool(best_rate > 0.0),
        converged=bool(refined.converged),
    )
