"""Rate-interference-budget function and its closed forms.

``rib(dmc, eps, R_p)`` is the largest mutual information ``I(X;Y)`` over
input laws whose average erasure cost ``sum_x eps_x p(x)`` stays within the
budget ``1 - R_p``.  It is computed by bisection on the Lagrange multiplier
of the cost, with a cost-tilted Blahut-Arimoto iteration inside; when that
stalls (nearly redundant inputs slow Blahut-Arimoto down badly) the best law
found is polished by SLSQP.  Every answer is bracketed: a primal input law of
cost at most the budget gives the lower end and weak duality the upper end.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import minimize
from scipy.special import rel_entr, xlogy

from .channel import Dmc
from .errors import ConfigurationError, DomainError

LN2 = math.log(2.0)


def nats_to_bits(x):
    return x / LN2


def output_law(p: np.ndarray, W: np.ndarray) -> np.ndarray:
    return p @ W


def divergences(W: np.ndarray, q: np.ndarray) -> np.ndarray:
    """``D(W_x || q)`` for every row; zero-probability outputs contribute 0."""
    return rel_entr(W, q[None, :]).sum(axis=1)


def mutual_information(p, W) -> float:
    """``I(X;Y)`` in nats for input law ``p`` and channel matrix ``W``."""
    p = np.asarray(p, dtype=float)
    W = np.asarray(W, dtype=float)
    q = p @ W
    d = divergences(W, q)
    # rounding can leave a tiny negative value on useless channels
    return max(0.0, float(np.dot(p[p > 0], d[p > 0])))


def mutual_information_rows(P: np.ndarray, W: np.ndarray, row_entropy: np.ndarray | None = None):
    """Vectorized ``I(X;Y)`` for many input laws (one per row of ``P``)."""
    if row_entropy is None:
        row_entropy = -xlogy(W, W).sum(axis=1)
    q = P @ W
    return -xlogy(q, q).sum(axis=1) - P @ row_entropy


@dataclass(frozen=True)
class _Tilted:
    p: np.ndarray
    info: float
    cost: float
    upper: float  # max_x (D_x - s eps_x): bounds max_p I(p) - s cost(p)
    iterations: int


def _tilted_blahut(W, cost, s, logp0, tol, max_iter) -> _Tilted:
    """Maximize ``I(p) - s * cost(p)`` by alternating maximization."""
    pos = W > 0
    logW = np.where(pos, np.log(np.where(pos, W, 1.0)), 0.0)
    h = (W * logW).sum(axis=1)
    logp = logp0 - logp0.max()
    p = np.exp(logp)
    p /= p.sum()
    for it in range(1, max_iter + 1):
        q = p @ W
        logq = np.log(np.where(q > 0, q, 1.0))
        d = h - (W * logq).sum(axis=1)
        score = d - s * cost
        lower = float(p @ score)
        upper = float(score.max())
        if upper - lower <= tol:
            break
        logp = np.log(np.maximum(p, 1e-300)) + score
        logp -= logp.max()
        p = np.exp(logp)
        p /= p.sum()
    return _Tilted(p, mutual_information(p, W), float(p @ cost), upper, it)


def _polish(W, p0, cost=None, lam=None) -> np.ndarray:
    """SLSQP refinement of ``max I(p)`` subject to ``p @ cost <= lam``."""

    def grad(p):
        d = divergences(W, np.maximum(p, 0.0) @ W)
        return -(np.where(np.isfinite(d), d, 1e3) - 1.0)

    cons = [{"type": "eq", "fun": lambda p: p.sum() - 1.0, "jac": lambda p: np.ones_like(p)}]
    if cost is not None:
        cons.append({"type": "ineq", "fun": lambda p: lam - p @ cost, "jac": lambda p: -cost})
    res = minimize(lambda p: -mutual_information(np.maximum(p, 0.0), W), p0, jac=grad,
                   bounds=[(0.0, 1.0)] * p0.size, constraints=cons, method="SLSQP",
                   options={"ftol": 1e-16, "maxiter": 500})
    p = np.maximum(res.x, 0.0)
    return p / p.sum()


def _refine(W, cost, lam, p, value, upper, tol):
    """Polish ``p`` when the certified gap exceeds ``tol``; keep whichever law is better."""
    if upper - value <= tol:
        return value, p, upper
    cand = _polish(W, p, cost, lam)
    if cost is not None and cand @ cost > lam + 1e-12:
        # tiny overshoot from the solver: pull back toward the feasible start
        w = (cand @ cost - lam) / (cand @ cost - p @ cost)
        cand = (1 - w) * cand + w * p
    v = mutual_information(cand, W)
    if cost is None:
        up = float(np.max(divergences(W, cand @ W)))
    else:
        up = dual_bound(W, cost, lam, cand @ W)
    upper = min(upper, up)
    if v > value:
        value, p = v, cand
    return value, p, upper


@dataclass(frozen=True)
class RibResult:
    """Outcome of :func:`rib`.

    Attributes
    ----------
    value : float
        RIB value in nats (a certified lower bound within ``gap``).
    optimizer : ndarray
        Input law achieving ``value``.
    budget : float
        ``1 - R_p``.
    slack : float
        ``budget - sum_x eps_x p(x)``.
    iterations : int
        Total inner iterations.
    converged : bool
        Whether the duality gap fell below the tolerance.
    feasible : bool
        False when the budget is below every input's cost.
    gap : float
        Upper bound minus ``value``.
    """

    value: float
    optimizer: np.ndarray
    budget: float
    slack: float
    iterations: int
    converged: bool
    feasible: bool = True
    gap: float = 0.0

    @property
    def bits(self) -> float:
        return nats_to_bits(self.value)


def _as_channel(dmc) -> np.ndarray:
    if isinstance(dmc, Dmc):
        return dmc.transition
    W = np.asarray(dmc, dtype=float)
    if W.ndim != 2 or np.any(W < 0) or np.any(np.abs(W.sum(axis=1) - 1) > 1e-12):
        raise ConfigurationError("channel matrix must be row-stochastic")
    return W


def unconstrained_capacity(dmc, tol: float = 1e-10, max_iter: int = 200_000):
    """Capacity in nats and a capacity-achieving input law.

    Returns
    -------
    value : float
    p : ndarray
    """
    W = _as_channel(dmc)
    res = _tilted_blahut(W, np.zeros(W.shape[0]), 0.0, np.zeros(W.shape[0]), tol, max_iter)
    value, p, _ = _refine(W, None, None, res.p, res.info, res.upper, tol)
    return value, p


def _subchannel_capacity(W, keep, tol, max_iter):
    value, p_sub = unconstrained_capacity(W[keep], tol, max_iter)
    p = np.zeros(W.shape[0])
    p[keep] = p_sub
    return value, p


def rib(dmc, eps, R_p: float, tol: float = 1e-9, max_iter: int = 200_000) -> RibResult:
    """Rate-interference-budget value ``max I(X;Y) s.t. sum eps_x p(x) <= 1 - R_p``.

    Parameters
    ----------
    dmc : Dmc or array_like
        Channel law.
    eps : array_like
        Per-input erasure cost, input 0 being ``x_off``.
    R_p : float
        Primary target rate; the budget is ``1 - R_p``.
    tol : float
        Target duality gap in nats.

    Returns
    -------
    RibResult
        ``feasible`` is False, with value 0, when the budget lies below
        ``min(eps)``.
    """
    W = _as_channel(dmc)
    cost = np.asarray(eps, dtype=float)
    if cost.shape != (W.shape[0],):
        raise ConfigurationError("need one erasure cost per channel input")
    if np.any(cost < 0) or np.any(cost > 1):
        raise DomainError("erasure costs must lie in [0, 1]")
    lam = 1.0 - float(R_p)
    cmin = float(cost.min())
    inner_tol = tol / 4
    if lam < cmin - 1e-12:
        p = np.zeros_like(cost)
        p[int(np.argmin(cost))] = 1.0
        return RibResult(0.0, p, lam, lam - cmin, 0, True, feasible=False)
    if lam <= cmin + 1e-12:
        value, p = _subchannel_capacity(W, cost <= cmin + 1e-12, inner_tol, max_iter)
        return RibResult(value, p, lam, lam - float(p @ cost), 0, True)

    logu = np.zeros(W.shape[0])
    free = _tilted_blahut(W, cost, 0.0, logu, inner_tol, max_iter)
    iters = free.iterations
    if free.cost <= lam:
        value, p, upper = _refine(W, cost, lam, free.p, free.info, free.upper, tol)
        gap = max(upper - value, 0.0)
        return RibResult(value, p, lam, lam - float(p @ cost), iters, gap <= tol, gap=gap)

    # Warm starts sit on the budget line, so the first steps of a short inner
    # run already reveal which side of the budget the tilted optimum lies on;
    # certification comes from the exact dual bound of the best output law.
    inner_cap = min(max_iter, 300)
    best_upper = min(free.upper, dual_bound(W, cost, lam, free.p @ W))
    lo, hi = free, None
    s_lo, s_hi = 0.0, 1.0
    while True:
        t = _tilted_blahut(W, cost, s_hi, _log(lo.p), inner_tol, max_iter)
        iters += t.iterations
        if t.cost <= lam:
            hi = t
            break
        lo, s_lo = t, s_hi
        s_hi *= 2.0
        if s_hi > 1e12:
            raise DomainError("multiplier search diverged")

    def mix(lo_r, hi_r):
        w = (lo_r.cost - lam) / (lo_r.cost - hi_r.cost)
        p = (1 - w) * lo_r.p + w * hi_r.p
        return mutual_information(p, W), p

    value, p = mix(lo, hi)
    if hi.info > value:
        value, p = hi.info, hi.p
    best_upper = min(best_upper, dual_bound(W, cost, lam, p @ W))
    for _ in range(300):
        if best_upper - value <= tol:
            break
        s_mid = 0.5 * (s_lo + s_hi)
        t = _tilted_blahut(W, cost, s_mid, _log(p), inner_tol, inner_cap)
        iters += t.iterations
        if t.cost <= lam:
            hi, s_hi = t, s_mid
            if t.info > value:
                value, p = t.info, t.p
        else:
            lo, s_lo = t, s_mid
        cand, cand_p = mix(lo, hi)
        if cand > value:
            value, p = cand, cand_p
        best_upper = min(best_upper, dual_bound(W, cost, lam, p @ W),
                         dual_bound(W, cost, lam, t.p @ W))
        if s_hi - s_lo <= 1e-13 * max(1.0, s_hi):
            break
    value, p, best_upper = _refine(W, cost, lam, p, value, best_upper, tol)
    gap = max(best_upper - value, 0.0)
    return RibResult(value, p, lam, lam - float(p @ cost), iters, gap <= tol, gap=gap)


def dual_bound(W, cost, lam: float, q) -> float:
    """``min_{s>=0} max_x (D(W_x||q) - s eps_x) + s lam``, an upper bound on the RIB.

    Valid for any output law ``q``; tight at the optimal one.
    """
    d = divergences(W, np.asarray(q, dtype=float))
    ok = np.isfinite(d)
    d, c = d[ok], cost[ok]
    dc = c[:, None] - c[None, :]
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        br = (d[:, None] - d[None, :]) / dc
    cand = np.concatenate(([0.0], br[(dc > 0) & (br > 0) & np.isfinite(br)]))
    vals = (d[None, :] - cand[:, None] * c[None, :]).max(axis=1) + cand * lam
    return float(vals.min())


def _log(p):
    return np.log(np.maximum(p, 1e-300))


def budget_sweep(dmc, eps, R_p_grid, tol: float = 1e-9) -> list[dict]:
    """RIB curve rows ``(lambda, R_p, rib_nats, rib_bits, slack, iterations, feasible)``."""
    rows = []
    for R_p in R_p_grid:
        r = rib(dmc, eps, R_p, tol=tol)
        rows.append({
            "lambda": r.budget,
            "R_p": float(R_p),
            "rib_nats": r.value,
            "rib_bits": r.bits,
            "slack": r.slack,
            "iterations": r.iterations,
            "feasible": r.feasible,
        })
    return rows


# ---------------------------------------------------------------------------
# closed forms


def binary_entropy(p: float) -> float:
    """``h(p)`` in nats."""
    return float(-xlogy(p, p) - xlogy(1 - p, 1 - p))


def rib_example1(P: int, eps0: float, eps1: float, R_p: float) -> float:
    """Noiseless ``(P+1)``-ary channel with costs ``eps0`` (silent) and ``eps1``.

    With ``b = (1 - R_p - eps0) / (eps1 - eps0)`` the value is ``ln(P+1)``
    when ``b >= P/(P+1)``, ``h(b) + b ln P`` otherwise, and 0 for ``b < 0``.
    """
    if not eps1 > eps0:
        raise DomainError("need eps1 > eps0")
    b = (1.0 - R_p - eps0) / (eps1 - eps0)
    if b < 0:
        return 0.0
    if b >= P / (P + 1.0):
        return math.log(P + 1.0)
    return binary_entropy(b) + b * math.log(P)


def rib_example2(P: int, R_p: float) -> float:
    """``(1 - R_p) ln P`` for the scrambling-silent channel with costs 0 / 1."""
    if not 0 <= R_p <= 1:
        raise DomainError("R_p must lie in [0, 1]")
    return (1.0 - R_p) * math.log(P)


def rib_example3(P: int, R_p: float, eps_half: float) -> float:
    """``ln P - R_p ln 2 / (1 - eps_half)`` for the half-scrambling channel.

    Valid when ``eps_half <= 1 - R_p`` and the half symbols beat mixing the
    silent and clean symbols, ``eps_half <= 1 - 1/log2(P)``.

    Raises
    ------
    DomainError
        Outside that region, where the optimum has a different shape.
    """
    if P < 2 or P % 2:
        raise DomainError("P must be even")
    if not 0 <= eps_half <= 1 - R_p:
        raise DomainError("need 0 <= eps_half <= 1 - R_p")
    if eps_half > 1 - 1 / math.log2(P) + 1e-15:
        raise DomainError("need eps_half <= 1 - 1/log2(P)")
    return math.log(P) - R_p * LN2 / (1.0 - eps_half)


def fixed_codebook_lower_bound(eps0: float, R_p: float, C_star: float) -> float:
    """``(1 - R_p / (1 - eps0)) * C_star`` floored at 0."""
    if eps0 >= 1:
        raise DomainError("eps0 must be below 1")
    return max(0.0, (1.0 - R_p / (1.0 - eps0)) * C_star)


def continuity_bound(delta: float, n_inputs: int, n_outputs: int) -> float:
    """``-6 delta ln(2 delta / (|X| |Y|))`` for ``0 < delta <= 1/4``.

    Envelope on the change of the RIB value when the budget moves by
    ``delta`` or the cost vector moves by ``delta`` in l1 norm.
    """
    if not 0 < delta <= 0.25:
        raise DomainError("delta must lie in (0, 1/4]")
    return -6.0 * delta * math.log(2.0 * delta / (n_inputs * n_outputs))
