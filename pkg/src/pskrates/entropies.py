"""Conditional entropies of classical-quantum ensembles and bipartite states.

All values are in bits (log base 2); natural logs appear only inside the
entropy-variance prefactor and the continuity coefficient, where the
underlying bounds use them. Two evaluation paths exist for the two-state
protocol: the numeric path below, working on the stored ensemble matrices,
and hyperbolic closed forms (``bpsk_closed_forms``) derived from the same
states. They agree to ~1e-12 and cross-validate each other.

Rényi orders: the ``*_cq`` functions accept any a > 0, a != 1. The rate
estimators impose their own narrower ranges (a > 1, or a in (1, 2) for the
continuity bound).
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from . import linalg
from .linalg import matrix_log2, matrix_power, partial_trace
from .optimize import initial_simplex, nelder_mead
from .states import CQEnsemble, ProtocolParams, SymmetryGroup

LN2 = math.log(2.0)


class ConvergenceWarning(RuntimeWarning):
    """An iterative optimization returned its best value without converging."""


#: The continuity coefficient has a pole at a = 2; stay strictly below it.
CONTINUITY_A_MAX = 2.0 - 1e-6

#: Closed forms break down at eta = 1 (artanh(1)); callers fall back to the
#: numeric path beyond this.
CLOSED_FORM_ETA_MAX = 1.0 - 1e-9


def _check_order(a: float) -> float:
    a = float(a)
    if not math.isfinite(a) or a <= 0.0 or a == 1.0:
        raise ValueError(f"Renyi order must be positive and != 1, got {a}")
    return a


def _check_reduction(ensemble: CQEnsemble) -> None:
    """Cheap necessary condition for the one-term symmetry reduction.

    The reduced formulas use only rho_{E|0}; they are valid when all
    conditional states are unitarily equivalent, so matching spectra are
    required. Full reduced-vs-unreduced equality is checked by the oracle
    suite.
    """
    ref = np.linalg.eigvalsh(ensemble.cond_states[0])
    for rho in ensemble.cond_states[1:]:
        if np.abs(np.linalg.eigvalsh(rho) - ref).max() > 1e-9:
            raise ValueError("conditional states are not unitarily equivalent; "
                             "the symmetry reduction does not apply")


def _tr_power(matrix: np.ndarray, a: float) -> float:
    """tr(M^a) for PSD Hermitian M on its support.

    Rounding noise below the relative support cutoff is dropped; for a < 1
    such noise would otherwise be amplified (1e-16 eigenvalues contribute
    1e-8 at a = 1/2).
    """
    lam = np.linalg.eigvalsh(matrix)
    top = max(float(lam[-1]), 0.0)
    lam = lam[lam > linalg.SUPPORT_CUTOFF * top]
    return float((lam**a).sum()) if lam.size else 0.0


def _entropy_bits(matrix: np.ndarray) -> float:
    """Spectral entropy -sum lam log2 lam over the support."""
    lam = np.linalg.eigvalsh(matrix)
    lam = lam[lam > 0.0]
    return float(-(lam * np.log2(lam)).sum()) if lam.size else 0.0


def petz_down_cq(ensemble: CQEnsemble, a: float) -> float:
    """Petz-Rényi conditional entropy of the ensemble, reduced form.

    log2 N + log2 tr(rho_{E|0}^a rho_E^(1-a)) / (1 - a), with powers
    restricted to the support.
    """
    a = _check_order(a)
    _check_reduction(ensemble)
    t = np.trace(matrix_power(ensemble.cond_states[0], a)
                 @ matrix_power(ensemble.avg_state, 1.0 - a)).real
    return math.log2(ensemble.n_states) + math.log2(t) / (1.0 - a)


def petz_up_cq(ensemble: CQEnsemble, a: float) -> float:
    """Optimized Petz-Rényi conditional entropy.

    -(a/(1-a)) (log2 N - log2 tr[(sum_y rho_{E|y}^a)^(1/a)]).
    """
    a = _check_order(a)
    total = sum(matrix_power(rho, a) for rho in ensemble.cond_states)
    t = np.trace(matrix_power(total, 1.0 / a)).real
    return -a / (1.0 - a) * (math.log2(ensemble.n_states) - math.log2(t))


def sandwiched_down_cq(ensemble: CQEnsemble, a: float) -> float:
    """Sandwiched Rényi conditional entropy, reduced form.

    log2 N + log2 tr[(rho_E^c rho_{E|0} rho_E^c)^a] / (1 - a) with
    c = (1 - a) / (2a).
    """
    a = _check_order(a)
    _check_reduction(ensemble)
    c = (1.0 - a) / (2.0 * a)
    x = matrix_power(ensemble.avg_state, c)
    t = _tr_power(x @ ensemble.cond_states[0] @ x, a)
    return math.log2(ensemble.n_states) + math.log2(t) / (1.0 - a)


# ---------------------------------------------------------------------------
# Optimized sandwiched entropy over symmetry-invariant conditioning states.
#
# Invariant states commute with every U_t; the U_t have non-degenerate
# diagonal phases in the stored basis, so the invariant set is exactly the
# diagonal states: a 1-simplex for N=2 and a 3-simplex for N=4. The trace
# functional restricted to that simplex has the stationarity condition
# q proportional to diag(M^a) with M = D rho_{E|0} D, D = diag(q)^((1-a)/2a),
# which drives a damped fixed-point presolve. A Nelder-Mead polish in
# log-odds coordinates verifies the presolve; if either disagrees or fails
# to converge, a five-seed global Nelder-Mead restart takes over.
# ---------------------------------------------------------------------------


def _invariant_objective(rho0: np.ndarray, a: float):
    """Trace functional q -> tr[(D rho0 D)^a], D = diag(q^((1-a)/2a))."""
    c = (1.0 - a) / (2.0 * a)

    def fn(q: np.ndarray) -> float:
        d = np.where(q > 0.0, q, 1.0) ** c * (q > 0.0)
        lam = np.linalg.eigvalsh(d[:, None] * rho0 * d[None, :])
        lam = lam[lam > linalg.SUPPORT_CUTOFF * max(float(lam[-1]), 0.0)]
        with np.errstate(over="ignore"):
            return float((lam**a).sum()) if lam.size else 0.0

    return fn


def _invariant_fixed_point(rho0, q0, a, value_tol=1e-13, max_iter=300):
    """Damped iteration q <- normalize(diag(M^a)); returns (q, value, ok)."""
    c = (1.0 - a) / (2.0 * a)
    sense = 1.0 if a > 1.0 else -1.0  # minimize the trace for a > 1

    def evaluate(q):
        d = np.where(q > 0.0, q, 1.0) ** c * (q > 0.0)
        w, v = np.linalg.eigh(d[:, None] * rho0 * d[None, :])
        w = np.where(w > linalg.SUPPORT_CUTOFF * max(float(w[-1]), 0.0), w, 0.0)
        with np.errstate(over="ignore"):
            wa = np.where(w > 0.0, w, 1.0) ** a * (w > 0.0)
        fp = np.clip(np.einsum("ij,j,ij->i", v, wa, v.conj()).real, 0.0, None)
        return float(wa.sum()), fp

    q = np.clip(np.asarray(q0, dtype=float), 0.0, None)
    q = q / q.sum()
    value, fp = evaluate(q)
    for _ in range(max_iter):
        tau = 1.0
        q_next, v_next, fp_next = q, value, fp
        for _ in range(12):
            total = fp.sum()
            if total <= 0.0:
                break
            cand = q ** (1.0 - tau) * (fp / total) ** tau
            norm = cand.sum()
            if norm <= 0.0 or not np.isfinite(norm):
                tau *= 0.5
                continue
            cand /= norm
            v_cand, fp_cand = evaluate(cand)
            if sense * (v_cand - value) <= 1e-18:
                q_next, v_next, fp_next = cand, v_cand, fp_cand
                break
            tau *= 0.5
        if abs(v_next - value) < value_tol * max(1.0, abs(value)):
            return q_next, v_next, True
        q, value, fp = q_next, v_next, fp_next
    return q, value, False


def _softmax(z: np.ndarray) -> np.ndarray:
    z = np.clip(z, -60.0, 60.0)
    e = np.exp(z - z.max())
    return e / e.sum()


def _logodds(q: np.ndarray) -> np.ndarray:
    safe = np.clip(q, 1e-30, None)
    return np.log(safe[1:] / safe[0])


def sandwiched_up_invariant(
    ensemble: CQEnsemble,
    a: float,
    group: SymmetryGroup | None = None,
) -> float:
    """Optimized sandwiched Rényi entropy over invariant conditioning states.

    Returns log2 N + log2 opt_q tr[(D rho_{E|0} D)^a] / (1 - a) where the
    optimum runs over the probability simplex of diagonal states (infimum
    for a > 1, supremum for a < 1). The result lower-bounds the optimized
    sandwiched entropy over all states; for N=2 the two coincide
    numerically. Non-convergence of the optimizer raises a RuntimeWarning
    and the best value found is returned.
    """
    a = _check_order(a)
    del group  # validated at construction time; the invariant set is diagonal
    rho0 = ensemble.cond_states[0]
    n = ensemble.n_states
    sense = 1.0 if a > 1.0 else -1.0
    objective = _invariant_objective(rho0, a)

    def signed(z):
        return sense * objective(_softmax(np.concatenate(([0.0], np.atleast_1d(z)))))

    q_avg = np.clip(np.diag(ensemble.avg_state).real, 0.0, None)
    q_avg = q_avg / q_avg.sum()

    q_fp, value_fp, fp_ok = _invariant_fixed_point(rho0, q_avg, a)
    polish = nelder_mead(
        signed,
        initial_simplex(_logodds(q_fp), 0.05),
        f_tol=1e-13,
        max_iter=80 * (n - 1),
    )
    best = min(sense * value_fp, polish.fun)
    converged = fp_ok and polish.converged

    improved = sense * value_fp - polish.fun > 1e-10 * max(1.0, abs(best))
    if not fp_ok or improved:
        converged = True
        dim = n - 1
        seeds = [
            _logodds(q_avg),
            np.zeros(dim),
            np.full(dim, 2.0),
            np.full(dim, -2.0),
            np.array([2.0 * (-1.0) ** i for i in range(dim)]),
        ]
        for seed in seeds:
            res = nelder_mead(signed, initial_simplex(seed, 0.8),
                              f_tol=1e-13, max_iter=200 * dim + 100)
            best = min(best, res.fun)
            converged = converged and res.converged
    if not converged:
        warnings.warn("invariant-state optimization did not reach tolerance; "
                      "returning best value found", ConvergenceWarning, stacklevel=2)
    return math.log2(n) + math.log2(sense * best) / (1.0 - a)


def von_neumann_cq(ensemble: CQEnsemble) -> float:
    """Conditional von Neumann entropy H(Y|E) in bits.

    log2 N + mean_y S(rho_{E|y}) - S(rho_E), from the block structure of the
    classical-quantum state.
    """
    avg_term = _entropy_bits(ensemble.avg_state)
    cond_term = sum(p * _entropy_bits(rho)
                    for p, rho in zip(ensemble.probs, ensemble.cond_states))
    return float(math.log2(ensemble.n_states) + cond_term - avg_term)


def entropy_variance_cq(ensemble: CQEnsemble) -> float:
    """Conditional entropy variance V(Y|E) in bits^2.

    tr[rho_YE (log2 rho_YE - log2 I x rho_E)^2] - D(rho_YE || I x rho_E)^2,
    evaluated block by block: block y carries p_y rho_{E|y} against rho_E.
    """
    log_avg = matrix_log2(ensemble.avg_state)
    first = 0.0
    divergence = 0.0
    for p, rho in zip(ensemble.probs, ensemble.cond_states):
        diff = matrix_log2(p * rho) - log_avg
        first += p * np.trace(rho @ diff @ diff).real
        divergence += p * np.trace(rho @ diff).real
    return float(first - divergence**2)


def continuity_coeff(ensemble: CQEnsemble, a: float) -> float:
    """Coefficient K(a) of the quadratic term in the continuity bound.

    2^((a-1)(H(Y|E) - H_a)) ln^3(2^(H(Y|E) - H_2) + e^2) / (6 (2-a)^3 ln 2),
    where H_a and H_2 are Petz-Rényi entropies. Defined for a in (1, 2);
    the pole at a = 2 is excluded.
    """
    a = float(a)
    if not 1.0 < a <= CONTINUITY_A_MAX:
        raise ValueError(f"continuity coefficient needs a in (1, {CONTINUITY_A_MAX}], got {a}")
    h = von_neumann_cq(ensemble)
    h_a = petz_down_cq(ensemble, a)
    h_2 = petz_down_cq(ensemble, 2.0)
    scale = 2.0 ** ((a - 1.0) * (h - h_a)) / (6.0 * (2.0 - a) ** 3 * LN2)
    return scale * math.log(2.0 ** (h - h_2) + math.e**2) ** 3


def continuity_bound(ensemble: CQEnsemble, a: float) -> float:
    """Second-order lower bound B_a(Y|E) on the sandwiched entropy.

    H(Y|E) - (a-1) ln2/2 V(Y|E) - (a-1)^2 K(a), valid for a in (1, 2).
    """
    k = continuity_coeff(ensemble, a)
    h = von_neumann_cq(ensemble)
    v = entropy_variance_cq(ensemble)
    return h - (a - 1.0) * LN2 / 2.0 * v - (a - 1.0) ** 2 * k


@dataclass(frozen=True)
class EntropyReport:
    """All entropy functionals of an ensemble at one Rényi order."""

    petz_down: float
    petz_up: float
    sand_down: float
    sand_up: float
    von_neumann: float
    variance: float
    coeff_k: float
    bound_b: float


def entropy_report(ensemble: CQEnsemble, a: float) -> EntropyReport:
    """Evaluate every functional at once; K and B are NaN outside (1, 2)."""
    in_continuity_range = 1.0 < a <= CONTINUITY_A_MAX
    return EntropyReport(
        petz_down=petz_down_cq(ensemble, a),
        petz_up=petz_up_cq(ensemble, a),
        sand_down=sandwiched_down_cq(ensemble, a),
        sand_up=sandwiched_up_invariant(ensemble, a),
        von_neumann=von_neumann_cq(ensemble),
        variance=entropy_variance_cq(ensemble),
        coeff_k=continuity_coeff(ensemble, a) if in_continuity_range else math.nan,
        bound_b=continuity_bound(ensemble, a) if in_continuity_range else math.nan,
    )


# ---------------------------------------------------------------------------
# Closed forms for the two-state protocol.
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class BpskClosedFormInputs:
    """Scalar inputs shared by the two-state closed forms.

    kappa = exp(2 alpha^2 (eta - 1)) is the overlap of Eve's two states,
    r the discrimination contrast erf(sqrt(2 eta) alpha),
    g = sqrt(1 + (kappa^-2 - 1) r^2), theta = artanh(kappa g) and
    phi = artanh(kappa). Arguments of artanh are clamped to 1 - 1e-15
    against rounding; eta beyond CLOSED_FORM_ETA_MAX is rejected since
    kappa -> 1 makes phi diverge.
    """

    kappa: float
    r: float
    g: float
    theta: float
    phi: float

    @classmethod
    def from_params(cls, params: ProtocolParams) -> "BpskClosedFormInputs":
        if params.n_states != 2:
            raise ValueError("closed forms exist for the two-state protocol only")
        if params.eta > CLOSED_FORM_ETA_MAX:
            raise ValueError("closed forms diverge at eta = 1; use the numeric path")
        kappa = math.exp(2.0 * params.alpha**2 * (params.eta - 1.0))
        r = math.erf(math.sqrt(2.0 * params.eta) * params.alpha)
        g = math.sqrt(1.0 + (kappa**-2 - 1.0) * r * r)
        theta = math.atanh(min(kappa * g, 1.0 - 1e-15))
        phi = math.atanh(min(kappa, 1.0 - 1e-15))
        return cls(kappa=kappa, r=r, g=g, theta=theta, phi=phi)

    def delta(self, a: float) -> float:
        return math.sqrt(self.r**2 + math.sinh(self.phi / a) ** 2)


class BpskClosedForms(NamedTuple):
    petz_down: float
    petz_up: float
    sand_down: float


def bpsk_closed_forms(params: ProtocolParams, a: float) -> BpskClosedForms:
    """Analytic Petz, optimized-Petz and sandwiched entropies for N=2.

    Hyperbolic expressions in theta and phi; each reduces to 1 bit at
    eta -> 0 and matches the numeric ensemble path to ~1e-12.
    """
    a = _check_order(a)
    s = BpskClosedFormInputs.from_params(params)
    sech_theta = 1.0 / math.cosh(s.theta)
    sech_phi = 1.0 / math.cosh(s.phi)

    # cosh(a theta) cosh((1-a) phi) + sinh(a theta) sinh((1-a) phi) / g:
    # rearranged through cosh(x - y) for a > 1, where the printed form
    # subtracts nearly equal large terms.
    x, y = a * s.theta, (a - 1.0) * s.phi
    if a > 1.0:
        bracket = math.cosh(x - y) + (1.0 - 1.0 / s.g) * math.sinh(x) * math.sinh(y)
    else:
        bracket = math.cosh(x) * math.cosh(-y) + math.sinh(x) * math.sinh(-y) / s.g
    petz_down = 1.0 + (math.log2(sech_theta) * a + math.log2(sech_phi) * (1.0 - a)
                       + math.log2(bracket)) / (1.0 - a)

    plus = math.cosh(x) + math.sinh(x) / s.g
    minus = math.exp(-x) + (1.0 - 1.0 / s.g) * math.sinh(x)  # cosh - sinh/g, stable
    petz_up = a / (1.0 - a) * (1.0 / a - 2.0 + math.log2(sech_theta)
                               + math.log2(plus ** (1.0 / a) + minus ** (1.0 / a)))

    delta = s.delta(a)
    big = math.cosh(s.phi / a) + delta
    small = (1.0 - s.r**2) / big  # cosh - delta without cancellation
    sand_down = (-2.0 * a / (1.0 - a)
                 + (a + math.log2(sech_phi) + math.log2(small**a + big**a)) / (1.0 - a))
    return BpskClosedForms(petz_down, petz_up, sand_down)


# ---------------------------------------------------------------------------
# General bipartite conditional entropies (used by the duality identities).
# ---------------------------------------------------------------------------


def _conditioned_on_marginal(rho: np.ndarray, dims: tuple[int, int]) -> np.ndarray:
    rho_b = partial_trace(rho, dims, keep="B")
    return np.kron(np.eye(dims[0]), rho_b)


def _check_support(rho: np.ndarray, sigma: np.ndarray) -> None:
    """Signal if rho has weight outside sigma's support."""
    w, v = linalg.eig(sigma)
    kernel = v[:, w <= linalg.SUPPORT_CUTOFF * max(float(w[-1]), 0.0)]
    if kernel.size:
        leak = float(np.einsum("ij,jk,ki->", kernel.conj().T, rho, kernel).real)
        if leak > 1e-10:
            raise ValueError(f"support violation: weight {leak:.3e} outside the conditioner")


def petz_down_general(rho, dims: tuple[int, int], a: float) -> float:
    """Petz-Rényi conditional entropy H_a(A|B) of a bipartite state.

    log2 tr(rho^a (I x rho_B)^(1-a)) / (1 - a). For a > 1 the state must be
    supported inside I x rho_B.
    """
    a = _check_order(a)
    rho = np.asarray(rho, dtype=complex)
    sigma = _conditioned_on_marginal(rho, dims)
    if a > 1.0:
        _check_support(rho, sigma)
    t = np.trace(matrix_power(rho, a) @ matrix_power(sigma, 1.0 - a)).real
    return math.log2(t) / (1.0 - a)


def petz_up_general(rho, dims: tuple[int, int], a: float) -> float:
    """Optimized Petz-Rényi conditional entropy, in closed form.

    (a/(1-a)) log2 tr{[tr_A(rho^a)]^(1/a)}; the optimizing marginal is known
    explicitly, no search is needed.
    """
    a = _check_order(a)
    rho = np.asarray(rho, dtype=complex)
    reduced = partial_trace(matrix_power(rho, a), dims, keep="B")
    t = np.trace(matrix_power(reduced, 1.0 / a)).real
    return a / (1.0 - a) * math.log2(t)


def sandwiched_down_general(rho, dims: tuple[int, int], a: float) -> float:
    """Sandwiched Rényi conditional entropy of a bipartite state."""
    a = _check_order(a)
    rho = np.asarray(rho, dtype=complex)
    sigma = _conditioned_on_marginal(rho, dims)
    if a > 1.0:
        _check_support(rho, sigma)
    x = matrix_power(sigma, (1.0 - a) / (2.0 * a))
    return math.log2(_tr_power(x @ rho @ x, a)) / (1.0 - a)


def sandwiched_up_general(
    rho,
    dims: tuple[int, int],
    a: float,
    value_tol: float = 1e-11,
    max_iter: int = 500,
) -> float:
    """Optimized sandwiched Rényi conditional entropy over all marginals.

    Runs the fixed-point iteration sigma <- tr_A[(sigma^c rho sigma^c)^a]
    (normalized, geometrically damped on stalls), whose stationary point is
    the optimizer; falls back to a direct parameterized search if the
    iteration fails to settle. Supported for a >= 1/2, a != 1.
    """
    a = _check_order(a)
    if a < 0.5:
        raise ValueError(f"optimized sandwiched entropy needs a >= 1/2, got {a}")
    rho = np.asarray(rho, dtype=complex)
    dim_a, dim_b = dims
    c = (1.0 - a) / (2.0 * a)
    sense = 1.0 if a > 1.0 else -1.0
    eye_a = np.eye(dim_a)

    def evaluate(sigma):
        x = np.kron(eye_a, matrix_power(sigma, c))
        w, v = np.linalg.eigh(x @ rho @ x)
        w = np.where(w > linalg.SUPPORT_CUTOFF * max(float(w[-1]), 0.0), w, 0.0)
        with np.errstate(over="ignore"):
            wa = np.where(w > 0.0, w, 1.0) ** a * (w > 0.0)
        value = float(wa.sum())
        m_a = (v * wa) @ v.conj().T
        nxt = partial_trace(m_a, dims, keep="B")
        nxt = 0.5 * (nxt + nxt.conj().T)
        return value, nxt / np.trace(nxt).real

    sigma = partial_trace(rho, dims, keep="B")
    sigma = 0.5 * (sigma + sigma.conj().T)
    value, proposal = evaluate(sigma)
    converged = False
    for _ in range(max_iter):
        tau = 1.0
        accepted = None
        stalled_gap = None
        for _ in range(10):
            if tau == 1.0:
                cand = proposal
            else:
                log_mix = ((1.0 - tau) * matrix_log2(sigma, 1e-30)
                           + tau * matrix_log2(proposal, 1e-30))
                w, v = np.linalg.eigh(0.5 * (log_mix + log_mix.conj().T))
                cand = (v * 2.0**w) @ v.conj().T
                cand /= np.trace(cand).real
            v_cand, p_cand = evaluate(cand)
            if sense * (v_cand - value) <= 1e-18:
                accepted = (cand, v_cand, p_cand)
                break
            stalled_gap = abs(v_cand - value)
            tau *= 0.5
        if accepted is None:
            # every damped step was worse; a sub-tolerance gap means the
            # iteration is jittering at its stationary point
            converged = (stalled_gap is not None
                         and stalled_gap < value_tol * max(1.0, abs(value)))
            break
        sigma, new_value, proposal = accepted
        if abs(new_value - value) < value_tol * max(1.0, abs(new_value)):
            value = new_value
            converged = True
            break
        value = new_value

    if not converged:
        # direct search over sigma = L L^dag / tr, L complex lower-triangular
        tril = np.tril_indices(dim_b)
        n_par = 2 * len(tril[0])

        def unpack(z):
            low = np.zeros((dim_b, dim_b), dtype=complex)
            half = len(tril[0])
            low[tril] = z[:half] + 1j * z[half:]
            s = low @ low.conj().T
            tr = np.trace(s).real
            return s / tr if tr > 0 else np.eye(dim_b) / dim_b

        def objective(z):
            return sense * evaluate(unpack(z))[0]

        w0, v0 = np.linalg.eigh(sigma)
        l0 = v0 * np.sqrt(np.clip(w0, 1e-12, None))
        z0 = np.concatenate([l0[tril].real, l0[tril].imag])
        res = nelder_mead(objective, initial_simplex(z0, 0.1),
                          f_tol=1e-13, max_iter=400 * n_par)
        value = min(sense * value, res.fun) * sense
        if not res.converged:
            warnings.warn("marginal optimization did not reach tolerance; "
                          "returning best value found", ConvergenceWarning, stacklevel=2)
    return math.log2(value) / (1.0 - a)
