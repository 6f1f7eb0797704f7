"""Closed forms, envelopes and Monte Carlo diagnostics for the ARQ model.

Information quantities are in nats.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import sparse
from scipy.sparse.linalg import spsolve
from scipy.special import rel_entr

from .errors import DegenerateChainError, DomainError

# ---------------------------------------------------------------------------
# two-symbol threshold chain


def _check_chain_params(eps0: float, eps1: float) -> None:
    if not (0.0 <= eps0 <= 1.0 and 0.0 <= eps1 <= 1.0):
        raise DomainError("erasure probabilities must lie in [0, 1]")
    if eps0 in (0.0, 1.0) or eps1 in (0.0, 1.0):
        raise DegenerateChainError(f"chain is not irreducible at eps0={eps0}, eps1={eps1}")
    if not eps0 < 0.5 < eps1:
        raise DomainError("positive recurrence needs eps0 < 1/2 < eps1")


def _auto_radius(eps0: float, eps1: float, tail: float = 1e-15) -> int:
    r = max((1.0 - eps1) / eps1, eps0 / (1.0 - eps0))
    need = (math.log(tail) + math.log1p(-r)) / math.log(r)
    return max(40, int(math.ceil(need)))


@dataclass(frozen=True, eq=False)
class TruncatedChain:
    """Surplus chain ``S_k = S_{k-1} + A_k - 1/2`` on ``{-L/2, ..., L/2}``.

    The secondary transmits (erasure probability ``eps1``) iff ``S >= 0``,
    otherwise it is silent (``eps0``).  Moves past either end are reflected
    into a self-loop.
    """

    eps0: float
    eps1: float
    L: int
    states: np.ndarray
    transition: sparse.csr_matrix

    @classmethod
    def build(cls, eps0: float, eps1: float, L: int | None = None) -> "TruncatedChain":
        _check_chain_params(eps0, eps1)
        if L is None:
            L = _auto_radius(eps0, eps1)
        if L < 40:
            raise DomainError("truncation radius must be at least 40")
        idx = np.arange(-L, L + 1)
        up = np.where(idx >= 0, 1.0 - eps1, 1.0 - eps0)
        down = 1.0 - up
        size = idx.size
        rows = np.arange(size)
        t = sparse.lil_matrix((size, size))
        t[rows[:-1], rows[:-1] + 1] = up[:-1]
        t[rows[1:], rows[1:] - 1] = down[1:]
        t[size - 1, size - 1] = up[-1]
        t[0, 0] = down[0]
        return cls(eps0, eps1, L, idx / 2.0, t.tocsr())

    def stationary(self) -> np.ndarray:
        size = self.states.size
        a = (self.transition.T - sparse.identity(size)).tolil()
        a[size - 1, :] = np.ones(size)
        b = np.zeros(size)
        b[-1] = 1.0
        pi = spsolve(a.tocsr(), b)
        pi = np.clip(pi, 0.0, None)
        return pi / pi.sum()


def stationary_numeric(eps0: float, eps1: float, L: int | None = None):
    """Stationary law of the truncated surplus chain.

    Parameters
    ----------
    eps0, eps1 : float
        Erasure probabilities when silent / transmitting, ``eps0 < 1/2 < eps1``.
    L : int, optional
        Truncation radius (states ``i/2`` for ``|i| <= L``).  By default it is
        chosen so the discarded geometric tail is below ``1e-15``.

    Returns
    -------
    states, pi : ndarray
    """
    chain = TruncatedChain.build(eps0, eps1, L)
    return chain.states, chain.stationary()


def stationary_closed_form(eps0: float, eps1: float, i) -> np.ndarray:
    """Two-branch closed form for ``pi(i/2)`` in its commonly quoted shape.

    The ``i >= 0`` branch is evaluated for ``i >= 0`` and the ``i <= 0``
    branch for ``i < 0``.  The negative branch carries the exponent
    ``-i + 1`` where detailed balance gives ``-i - 1``, so the left tail
    comes out scaled by ``(eps0 / (1 - eps0))**2``.  Kept for comparison
    against :func:`stationary_numeric`.
    """
    _check_chain_params(eps0, eps1)
    i = np.asarray(i)
    num = (2 * eps1 - 1) * (1 - 2 * eps0)
    right = num / (2 * eps1 * (eps1 - eps0)) * ((1 - eps1) / eps1) ** np.maximum(i, 0)
    left = num / (2 * (1 - eps0) * (eps1 - eps0)) * (eps0 / (1 - eps0)) ** (-np.minimum(i, 0) + 1)
    return np.where(i >= 0, right, left)


def transmit_probability(eps0: float, eps1: float) -> float:
    """Long-run fraction of transmit slots, ``(1/2 - eps0) / (eps1 - eps0)``."""
    if not eps1 > eps0:
        raise DomainError("need eps1 > eps0")
    if not eps0 <= 0.5 <= eps1:
        raise DomainError("need eps0 <= 1/2 <= eps1")
    return (0.5 - eps0) / (eps1 - eps0)


def bernoulli_kl(p, q):
    """``D(Bern(p) || Bern(q))`` in nats; ``inf`` when ``p`` is not dominated."""
    p = np.asarray(p, dtype=float)
    q = np.asarray(q, dtype=float)
    out = rel_entr(p, q) + rel_entr(1.0 - p, 1.0 - q)
    return float(out) if out.ndim == 0 else out


# ---------------------------------------------------------------------------
# validity


@dataclass(frozen=True)
class ValidityConstants:
    """``P(shortfall at time l) <= K1 * exp(-l * K2)``."""

    K1: float
    K2: float


def _check_validity_domain(R_p, gamma, nu, eps0):
    if not 0 < gamma < nu / 2:
        raise DomainError("need 0 < gamma < nu / 2")
    if R_p < 0 or R_p + nu > 1 - eps0 + 1e-15:
        raise DomainError("need R_p >= 0 and R_p + nu <= 1 - eps0")


def log_validity_bound(ell, R_p: float, gamma: float, nu: float, eps0: float = 0.0):
    """Natural log of the shortfall envelope before clamping at 1.

    Equal to 0 at and below the crossover ``2 / (1 - R_p - gamma)``.
    """
    _check_validity_domain(R_p, gamma, nu, eps0)
    ell = np.asarray(ell, dtype=float)
    c = 2.0 / (1.0 - R_p - gamma)
    with np.errstate(divide="ignore"):
        val = (np.log(ell / 2.0) - c * math.log((R_p + gamma) / (R_p + nu))
               - (ell - c) * nu**2 / 8.0)
    out = np.where(ell <= c, 0.0, val)
    return float(out) if out.ndim == 0 else out


def validity_bound(ell, R_p: float, gamma: float, nu: float, eps0: float = 0.0):
    """Envelope on ``P(l^{-1} sum_{i<=l} A_i <= R_p)`` for the threshold protocols.

    Returns 1 for ``l <= 2 / (1 - R_p - gamma)`` and
    ``min(1, (l/2) exp(-c log((R_p+gamma)/(R_p+nu)) - (l-c) nu^2/8))``
    with ``c = 2 / (1 - R_p - gamma)`` beyond.

    Raises
    ------
    DomainError
        Unless ``0 < gamma < nu/2`` and ``R_p + nu <= 1 - eps0``.
    """
    out = np.minimum(1.0, np.exp(np.minimum(log_validity_bound(ell, R_p, gamma, nu, eps0), 0.0)))
    return float(out) if np.ndim(out) == 0 else out


def validity_constants(ell: float, R_p: float, gamma: float, nu: float,
                       eps0: float = 0.0) -> ValidityConstants:
    """Split the envelope at ``ell`` into prefactor and exponential rate."""
    K2 = nu**2 / 8.0
    log_b = log_validity_bound(ell, R_p, gamma, nu, eps0)
    return ValidityConstants(K1=math.exp(log_b + ell * K2), K2=K2)


def log_stopping_tail_bound(t, r: int, s: float, R_p: float, gamma: float, eps0: float):
    """Log of :func:`stopping_tail_bound`; ``inf`` when ``eps0 == 0``."""
    if not R_p + gamma <= 1 - eps0:
        raise DomainError("need R_p + gamma <= 1 - eps0")
    if s > 0:
        raise DomainError("start state must be <= 0")
    if eps0 == 0.0:
        return math.inf
    u = 1.0 - R_p - gamma
    log_pref = math.log(u * (1 - eps0) / ((R_p + gamma) * eps0))
    out = (2 * r - s) * log_pref - np.asarray(t, dtype=float) * bernoulli_kl(u, eps0)
    return float(out) if np.ndim(out) == 0 else out


def stopping_tail_bound(t, r: int, s: float, R_p: float, gamma: float, eps0: float):
    """Bound on ``P(N >= t | S_0 = s)`` for the first frame-aligned crossing.

    ``N = r * inf{i > 0 : S_{ir} - i r gamma - r >= 0}`` while silent.  The
    bound is ``(u (1-eps0) / ((R_p+gamma) eps0))^(2r-s) exp(-t D(u || eps0))``
    with ``u = 1 - R_p - gamma``.  With ``eps0 = 0`` the prefactor is infinite
    and ``inf`` (bound unavailable) is returned.
    """
    log_b = log_stopping_tail_bound(t, r, s, R_p, gamma, eps0)
    with np.errstate(over="ignore"):
        out = np.exp(log_b)
    return float(out) if np.ndim(out) == 0 else out


# ---------------------------------------------------------------------------
# coding envelopes


def gallager_exponent(C: float, R: float, Y_size: int) -> float:
    """Per-symbol exponent ``(C - R)^2 / (8/e^2 + 4 (ln |Y|)^2)``."""
    if not R < C:
        raise DomainError("need R < C")
    return (C - R) ** 2 / (8.0 / math.e**2 + 4.0 * math.log(Y_size) ** 2)


def gallager_error_bound(ell, C: float, R: float, Y_size: int):
    """Random-coding ML block error envelope ``exp(-l (C-R)^2 / (8/e^2 + 4 ln^2|Y|))``."""
    out = np.exp(-np.asarray(ell, dtype=float) * gallager_exponent(C, R, Y_size))
    return float(out) if np.ndim(out) == 0 else out


def smoothed_rows(p1, p2, lam: float, Y_size: int | None = None):
    p1 = np.asarray(p1, dtype=float)
    p2 = np.asarray(p2, dtype=float)
    Y_size = p1.size if Y_size is None else Y_size
    return (1 - lam) * p1 + lam / Y_size, (1 - lam) * p2 + lam / Y_size


def hypothesis_test_exponent(p1, p2, lam: float = 0.01) -> float:
    """Error exponent ``r`` of the bounded-LLR test between two output laws.

    ``r = (min(D(q1||q2), D(q2||q1)) / ln(|Y|/lam))^2 / 2`` with smoothed
    laws ``q = (1-lam) p + lam/|Y|``; per-hypothesis error is at most
    ``exp(-kappa r)`` after ``kappa`` observations.
    """
    if not 0 < lam < 1:
        raise DomainError("smoothing weight must lie in (0, 1)")
    q1, q2 = smoothed_rows(p1, p2, lam)
    d = min(rel_entr(q1, q2).sum(), rel_entr(q2, q1).sum())
    return 0.5 * (d / math.log(q1.size / lam)) ** 2


def frame_error_union_bound(n: int, K: int, kappa: int, r: float, delta: float,
                            Y_size: int) -> float:
    """Union bound on any frame-role or codeword error over ``n / K`` frames."""
    frames = n / K
    e1 = frames * math.exp(-kappa * r)
    e2 = frames * math.exp(-(K - kappa) * delta**2 / (8.0 / math.e**2 + 4.0 * math.log(Y_size) ** 2))
    return min(1.0, e1 + e2)


def estimate_deviation_bound(mu: int, delta: float, n_inputs: int) -> float:
    """``min(1, 2 |X| exp(-mu delta^2 / 2))`` for pilot-based erasure estimates."""
    return min(1.0, 2.0 * n_inputs * math.exp(-mu * delta**2 / 2.0))


def duty_cycle_limit(eps0: float, R_p: float) -> float:
    """Asymptotic duty-cycle floor ``(1 - R_p - eps0) / (1 - eps0)``."""
    if eps0 >= 1:
        raise DomainError("eps0 must be below 1")
    return (1.0 - R_p - eps0) / (1.0 - eps0)


def duty_cycle_tail_bound(n: int, K: int, delta: float) -> float:
    """``exp(-n D((1 + delta/2)/2 - K/n || 1/2))`` for the duty-cycle shortfall."""
    p = (1 + delta / 2) / 2 - K / n
    return math.exp(-n * bernoulli_kl(p, 0.5)) if 0 <= p <= 1 else 1.0


# ---------------------------------------------------------------------------
# martingale diagnostic


def f_lambda(lam: float, eps):
    """Log moment generating function ``log((1-eps) e^lam + eps)`` of one ARQ."""
    eps = np.asarray(eps, dtype=float)
    out = np.log1p((1.0 - eps) * math.expm1(lam))
    return float(out) if out.ndim == 0 else out


@dataclass(frozen=True)
class MartingaleResiduals:
    """Per-step means of ``M_k / M_{k-1} - 1`` split by ``tau_k``.

    Arrays have shape ``(steps, 2)``; column ``j`` collects steps with
    ``tau_k = j``.  Cells with no samples hold ``nan``.
    """

    residual: np.ndarray
    stderr: np.ndarray
    count: np.ndarray

    def max_z(self) -> float:
        with np.errstate(invalid="ignore", divide="ignore"):
            z = np.abs(self.residual) / self.stderr
        z = np.where(self.residual == 0, 0.0, z)
        return float(np.nanmax(z)) if np.any(np.isfinite(z)) else 0.0


def martingale_residuals(x, a, lam: float, scenario, start: int = 1) -> MartingaleResiduals:
    """Check the exponential martingale increments across many traces.

    Parameters
    ----------
    x, a : array_like, shape (traces, steps)
        Inputs and ARQ outcomes; a single trace may be passed as 1-D.
    lam : float
        Exponent.
    scenario : Scenario
        Supplies the erasure law; the increment ratio is
        ``exp(lam a_k - f_lam(eps[x_k, k]))``.
    """
    x = np.atleast_2d(np.asarray(x))
    a = np.atleast_2d(np.asarray(a, dtype=float))
    eps = scenario.profile.eps_block(x, start)
    ratio = np.exp(lam * a - f_lambda(lam, eps)) - 1.0
    tau = (x != 0).astype(int)
    steps = x.shape[1]
    res = np.full((steps, 2), np.nan)
    se = np.full((steps, 2), np.nan)
    cnt = np.zeros((steps, 2), dtype=np.int64)
    for j in (0, 1):
        mask = tau == j
        c = mask.sum(axis=0)
        s1 = np.where(mask, ratio, 0.0).sum(axis=0)
        s2 = np.where(mask, ratio**2, 0.0).sum(axis=0)
        with np.errstate(invalid="ignore", divide="ignore"):
            mean = s1 / c
            var = (s2 - c * mean**2) / (c - 1)
            se[:, j] = np.sqrt(np.maximum(var, 0.0) / c)
        res[:, j] = np.where(c > 0, mean, np.nan)
        cnt[:, j] = c
    return MartingaleResiduals(res, se, cnt)
