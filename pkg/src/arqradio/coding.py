"""Random codebooks over input types, ML decoding and the frame-role test.

Codebooks are generated from a shared seed so encoder and decoder agree
without exchanging codewords.  A codebook whose codeword table fits under a
memory cap is stored explicitly and decoded by exhaustive maximum
likelihood.  Larger codebooks are *lazy*: codeword ``m`` is regenerated on
demand from ``(seed, key, m)``, and decoding samples the exact law of the
ML outcome instead of scanning ``M`` competitors (see
:func:`emulate_ml_decode`).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from decimal import Decimal, localcontext
from functools import lru_cache
from typing import Iterable, Iterator

import numpy as np
from scipy.special import xlogy

from .channel import X_OFF, Dmc
from .errors import ConfigurationError, DomainError, PlanningError
from .rib import mutual_information, mutual_information_rows, unconstrained_capacity

DEFAULT_MEMORY_CAP = 1 << 24
TIE_TOL = 1e-12

# ---------------------------------------------------------------------------
# types


@dataclass(frozen=True)
class InputType:
    """Empirical distribution with denominator ``C_n``: ``p(x) = counts[x] / C_n``."""

    counts: tuple

    def __post_init__(self):
        c = tuple(int(v) for v in self.counts)
        if not c or any(v < 0 for v in c) or sum(c) == 0:
            raise ConfigurationError("type counts must be nonnegative with positive total")
        object.__setattr__(self, "counts", c)

    @property
    def denominator(self) -> int:
        return sum(self.counts)

    @property
    def distribution(self) -> np.ndarray:
        return np.array(self.counts, dtype=float) / self.denominator

    @classmethod
    def point_mass(cls, size: int, x: int, denominator: int = 1) -> "InputType":
        c = [0] * size
        c[x] = denominator
        return cls(tuple(c))


def count_types(alphabet_size: int, C_n: int) -> int:
    """Number of length-``C_n`` types on ``alphabet_size`` symbols."""
    return math.comb(C_n + alphabet_size - 1, alphabet_size - 1)


def _iter_compositions(total: int, parts: int):
    if parts == 1:
        yield (total,)
        return
    for v in range(total, -1, -1):
        for rest in _iter_compositions(total - v, parts - 1):
            yield (v,) + rest


def enumerate_types(alphabet_size: int, C_n: int) -> list[InputType]:
    """All types in descending lexicographic order of their counts.

    ``enumerate_types(2, 2)`` gives ``(2,0), (1,1), (0,2)``.
    """
    if alphabet_size < 1 or C_n < 1:
        raise DomainError("need alphabet_size >= 1 and C_n >= 1")
    return [InputType(c) for c in _iter_compositions(C_n, alphabet_size)]


def type_rank(t: InputType | Iterable[int]) -> int:
    """Position of a type in :func:`enumerate_types` order."""
    counts = t.counts if isinstance(t, InputType) else tuple(int(v) for v in t)
    k = len(counts)
    remaining = sum(counts)
    rank = 0
    for j in range(k - 1):
        parts_after = k - j - 1
        # compositions with a larger value at position j
        larger = remaining - counts[j]
        if larger > 0:
            rank += math.comb(larger - 1 + parts_after, parts_after)
        remaining -= counts[j]
    return rank


def type_unrank(rank: int, alphabet_size: int, C_n: int) -> InputType:
    """Inverse of :func:`type_rank`."""
    if not 0 <= rank < count_types(alphabet_size, C_n):
        raise DomainError("rank out of range")
    counts = []
    remaining = C_n
    for j in range(alphabet_size - 1):
        parts_after = alphabet_size - j - 1
        for v in range(remaining, -1, -1):
            block = math.comb(remaining - v + parts_after - 1, parts_after - 1)
            if rank < block:
                counts.append(v)
                remaining -= v
                break
            rank -= block
    counts.append(remaining)
    return InputType(tuple(counts))


@lru_cache(maxsize=256)
def _composition_array(total: int, parts: int) -> np.ndarray:
    if parts == 1:
        out = np.array([[total]], dtype=np.int16)
    else:
        out = np.concatenate([
            np.hstack([np.full((sub.shape[0], 1), v, dtype=np.int16), sub])
            for v in range(total, -1, -1)
            for sub in (_composition_array(total - v, parts - 1),)
        ])
    out.setflags(write=False)
    return out


def type_blocks(alphabet_size: int, C_n: int, max_rows: int = 1 << 20) -> Iterator[np.ndarray]:
    """Yield arrays of type counts covering all types in enumeration order."""
    if count_types(alphabet_size, C_n) <= max_rows or alphabet_size == 1:
        yield _composition_array(C_n, alphabet_size)
        return
    for v in range(C_n, -1, -1):
        for block in type_blocks(alphabet_size - 1, C_n - v, max_rows):
            yield np.hstack([np.full((block.shape[0], 1), v, dtype=np.int16), block])


# ---------------------------------------------------------------------------
# codebooks


def floor_exp(x: float) -> int:
    """``floor(exp(x))`` as an exact integer, for arbitrarily large ``x``."""
    if x < 0:
        return 0
    if x < 600:
        return int(math.floor(math.exp(x)))
    with localcontext() as ctx:
        ctx.prec = int(x / 2.3) + 40
        return int(Decimal(x).exp().to_integral_value(rounding="ROUND_FLOOR"))


def fragment_width(blocklength: int, rate_nats: float, message_count: int) -> int:
    """Bits carried per codeword: ``floor(blocklength * rate * log2 e)``, capped by ``M``."""
    b = int(math.floor(blocklength * rate_nats / math.log(2.0)))
    while b > 0 and (1 << b) > message_count:
        b -= 1
    return max(b, 0)


@dataclass(frozen=True, eq=False)
class Codebook:
    """I.i.d. random codebook.

    Attributes
    ----------
    blocklength : int
    distribution : ndarray
        Symbol law used to draw codewords.
    rate_nats : float
        ``(I(p; W) - delta_tilde)^+``.
    message_count : int
        ``floor(exp(blocklength * rate_nats))``.
    seed : int
        Common-randomness seed.
    key : tuple
        Identifies the codebook within a seed (``("fixed",)`` or
        ``("type", counts)``).
    codewords : ndarray or None
        ``(message_count, blocklength)`` table when explicit.
    """

    blocklength: int
    distribution: np.ndarray
    rate_nats: float
    message_count: int
    seed: int
    key: tuple
    codewords: np.ndarray | None = None

    @property
    def explicit(self) -> bool:
        return self.codewords is not None

    @property
    def fragment_bits(self) -> int:
        return fragment_width(self.blocklength, self.rate_nats, self.message_count)

    def codeword(self, m: int) -> np.ndarray:
        m = int(m)
        if not 0 <= m < self.message_count:
            raise DomainError("message index out of range")
        if self.codewords is not None:
            return self.codewords[m]
        rng = np.random.default_rng(np.random.SeedSequence([self.seed, *_key_prefix(self.key, self.blocklength), m]))
        return _draw(rng, self.distribution, self.blocklength)

    def codeword_rows(self, ms) -> np.ndarray:
        ms = np.asarray(ms)
        if self.codewords is not None:
            return self.codewords[ms]
        return np.stack([self.codeword(int(m)) for m in ms])


def _draw(rng: np.random.Generator, p: np.ndarray, size) -> np.ndarray:
    support = np.flatnonzero(p > 0)
    if support.size == 1:
        return np.full(size, support[0], dtype=np.uint8)
    cdf = np.cumsum(p)
    cdf[-1] = 1.0
    u = rng.random(size)
    return np.minimum(np.searchsorted(cdf, u, side="right"), p.size - 1).astype(np.uint8)


@lru_cache(maxsize=64)
def _capacity_input(dmc: Dmc) -> tuple[float, tuple]:
    c, p = unconstrained_capacity(dmc, tol=1e-12)
    return c, tuple(p.tolist())


def capacity_input(dmc: Dmc) -> tuple[float, np.ndarray]:
    """Capacity and the capacity-achieving law reached from a uniform start."""
    c, p = _capacity_input(dmc)
    return c, np.array(p)


def build_codebook(input_type, blocklength: int, delta_tilde: float, dmc: Dmc, seed: int,
                   memory_cap: int = DEFAULT_MEMORY_CAP, lazy: str = "auto") -> Codebook:
    """Draw a codebook of rate ``(I(p; W) - delta_tilde)^+``.

    Parameters
    ----------
    input_type : InputType, "fixed" or array_like
        ``"fixed"`` uses the capacity-achieving law.
    blocklength : int
    delta_tilde : float
        Rate back-off in nats.
    dmc : Dmc
    seed : int
    memory_cap : int
        Largest codeword table (in symbols) stored explicitly.
    lazy : {"auto", "never"}
        With ``"auto"`` an over-cap codebook is generated on demand when the
        channel admits exact decode emulation.

    Raises
    ------
    PlanningError
        When the table exceeds ``memory_cap`` and a lazy codebook is not
        allowed or not decodable.
    """
    if blocklength < 1:
        raise DomainError("blocklength must be positive")
    if isinstance(input_type, str):
        if input_type != "fixed":
            raise ConfigurationError(f"unknown codebook kind {input_type!r}")
        info, p = capacity_input(dmc)
        key: tuple = ("fixed",)
    elif isinstance(input_type, InputType):
        if len(input_type.counts) != dmc.input_size:
            raise ConfigurationError("type length differs from channel input count")
        p = input_type.distribution
        info = mutual_information(p, dmc.transition)
        key = ("type", input_type.counts)
    else:
        p = np.asarray(input_type, dtype=float)
        if p.shape != (dmc.input_size,) or abs(p.sum() - 1) > 1e-12 or np.any(p < 0):
            raise ConfigurationError("distribution must be a probability vector over inputs")
        info = mutual_information(p, dmc.transition)
        key = ("dist", tuple(int(v) for v in np.round(p * 2**40)))
    rate = max(info - delta_tilde, 0.0)
    if rate < 1e-13:
        rate = 0.0
    M = max(floor_exp(blocklength * rate), 1)
    need = M * blocklength
    if need <= memory_cap:
        rng = np.random.default_rng(np.random.SeedSequence([seed, *_key_prefix(key, blocklength)]))
        words = _draw(rng, p, (M, blocklength))
        words.setflags(write=False)
        return Codebook(blocklength, p, rate, M, seed, key, words)
    if lazy != "auto":
        raise PlanningError(f"codebook needs {need} symbols, memory cap is {memory_cap}")
    if lattice_base(dmc) is None:
        raise PlanningError(
            f"codebook needs {need} symbols (cap {memory_cap}) and the channel does not "
            "admit exact decode emulation"
        )
    return Codebook(blocklength, p, rate, M, seed, key, None)


def _key_prefix(key: tuple, blocklength: int) -> list[int]:
    if key[0] == "fixed":
        return [0, blocklength]
    if key[0] == "type":
        return [1, blocklength, *key[1]]
    return [2, blocklength, *key[1]]


# ---------------------------------------------------------------------------
# decoding


def _log_channel(dmc: Dmc) -> np.ndarray:
    with np.errstate(divide="ignore"):
        return np.log(dmc.transition)


def ml_decode(codebook: Codebook, dmc: Dmc, y_block, candidates: int | None = None,
              *, sent: int | None = None, rng: np.random.Generator | None = None) -> int:
    """Maximum-likelihood message index, ties resolved to the smallest index.

    Explicit codebooks are decoded exhaustively over the first
    ``candidates`` messages (all by default).  Lazy codebooks need the
    transmitted index ``sent`` (``None`` when the block carried no codeword
    of this codebook) and a generator; see :func:`emulate_ml_decode`.
    """
    y = np.asarray(y_block)
    if y.shape != (codebook.blocklength,):
        raise DomainError("received block has the wrong length")
    M = codebook.message_count if candidates is None else min(int(candidates), codebook.message_count)
    if codebook.explicit:
        logw = _log_channel(dmc)
        ll = logw[codebook.codewords[:M], y[None, :]].sum(axis=1)
        return int(np.argmax(ll))
    if rng is None:
        raise DomainError("lazy codebooks need a generator for emulated decoding")
    return emulate_ml_decode(codebook, dmc, y, sent, rng, M)


def ml_decode_many(codebook: Codebook, dmc: Dmc, y_blocks: np.ndarray,
                   candidates: int | None = None) -> np.ndarray:
    """Exhaustive ML over several blocks of an explicit codebook."""
    if not codebook.explicit:
        raise DomainError("batch decoding needs an explicit codebook")
    M = codebook.message_count if candidates is None else min(int(candidates), codebook.message_count)
    logw = _log_channel(dmc)
    words = codebook.codewords[:M]
    out = np.empty(len(y_blocks), dtype=np.int64)
    chunk = max(1, (1 << 22) // max(1, M * codebook.blocklength))
    for s in range(0, len(y_blocks), chunk):
        yb = np.asarray(y_blocks[s : s + chunk])
        ll = logw[words[None, :, :], yb[:, None, :]].sum(axis=2)
        out[s : s + chunk] = np.argmax(ll, axis=1)
    return out


@lru_cache(maxsize=64)
def lattice_base(dmc: Dmc) -> float | None:
    """Base ``b`` with every nonzero ``p(y|x)`` equal to ``b**-k``, or None."""
    w = dmc.transition
    vals = np.unique(w[(w > 0) & (w < 1)])
    if vals.size == 0:
        return 2.0
    top = 1.0 / vals.max()
    for j in range(1, 7):
        b = top ** (1.0 / j)
        k = -np.log(vals) / math.log(b)
        if np.all(np.abs(k - np.round(k)) < 1e-9):
            return b
    return None


def _uniform_index(rng: np.random.Generator, n: int) -> int:
    """Uniform integer in ``[0, n)`` for arbitrarily large ``n``."""
    if n <= (1 << 62):
        return int(rng.integers(n))
    nbytes = (n.bit_length() + 7) // 8
    excess = nbytes * 8 - n.bit_length()
    while True:
        v = int.from_bytes(rng.bytes(nbytes), "big") >> excess
        if v < n:
            return v


def _uniform_other(rng: np.random.Generator, n: int, avoid: int) -> int:
    v = _uniform_index(rng, n - 1)
    return v + 1 if v >= avoid else v


def _log_tail_le(pmfs: list[np.ndarray], counts: list[int], target: int) -> tuple[float, float]:
    """``log P(K <= target)`` and ``log P(K < target)`` for ``K`` a sum of
    independent integer draws, ``counts[g]`` draws from ``pmfs[g]``.

    Uses exponential tilting so the evaluated region sits in the bulk of the
    tilted law, which keeps FFT round-off from swamping tiny tail masses.
    """
    support_max = sum(c * (len(p) - 1) for p, c in zip(pmfs, counts))
    support_min = sum(c * int(np.flatnonzero(p > 0)[0]) for p, c in zip(pmfs, counts))
    if target < support_min:
        return -math.inf, -math.inf
    if target >= support_max:
        if target > support_max:
            return 0.0, 0.0
        log_top = sum(c * math.log(p[-1]) for p, c in zip(pmfs, counts))
        return 0.0, (math.log(-math.expm1(log_top)) if log_top < 0 else -math.inf)
    if target == support_min:
        le = sum(c * math.log(p[np.flatnonzero(p > 0)[0]]) for p, c in zip(pmfs, counts))
        return le, -math.inf

    ks = [np.arange(len(p)) for p in pmfs]

    def tilted_mean(theta):
        m = 0.0
        for p, k, c in zip(pmfs, ks, counts):
            lw = np.where(p > 0, np.log(np.where(p > 0, p, 1.0)) - theta * k, -np.inf)
            lw -= lw.max()
            w = np.exp(lw)
            m += c * float((w * k).sum() / w.sum())
        return m

    mean0 = tilted_mean(0.0)
    if target >= mean0:
        theta = 0.0
    else:
        lo_t, hi_t = 0.0, 1.0
        while tilted_mean(hi_t) > target:
            hi_t *= 2.0
            if hi_t > 1e6:
                break
        for _ in range(200):
            mid = 0.5 * (lo_t + hi_t)
            if tilted_mean(mid) > target:
                lo_t = mid
            else:
                hi_t = mid
            if hi_t - lo_t < 1e-12:
                break
        theta = 0.5 * (lo_t + hi_t)

    size = 1 << int(math.ceil(math.log2(support_max + 1)))
    log_norm = 0.0
    spectrum = np.ones(size // 2 + 1, dtype=complex)
    for p, k, c in zip(pmfs, ks, counts):
        lw = np.where(p > 0, np.log(np.where(p > 0, p, 1.0)) - theta * k, -np.inf)
        shift = lw.max()
        w = np.exp(lw - shift)
        z = w.sum()
        log_norm += c * (shift + math.log(z))
        spectrum *= np.fft.rfft(w / z, size) ** c
    dens = np.clip(np.fft.irfft(spectrum, size)[: support_max + 1], 0.0, None)
    kk = np.arange(support_max + 1)
    # P(K = k) = exp(log_norm + theta k) * dens[k]
    def logsum(mask):
        sel = dens[mask]
        if sel.size == 0 or sel.max() <= 0:
            return -math.inf
        expo = theta * kk[mask]
        top = expo.max()
        return log_norm + top + math.log(float((sel * np.exp(expo - top)).sum()))

    return logsum(kk <= target), logsum(kk < target)


def _log_neg_log1m(log_q: float) -> float:
    """``log(-log(1 - q))`` from ``log q``."""
    if log_q == -math.inf:
        return -math.inf
    if log_q < -20:
        return log_q
    q = math.exp(log_q)
    if q >= 1.0:
        return math.inf
    return math.log(-math.log1p(-q))


def ml_success_log_probability(codebook: Codebook, dmc: Dmc, y_block, sent: int,
                               candidates: int | None = None) -> float:
    """``log P(ML returns sent | y, codeword(sent))`` over the other codewords' draws.

    Requires a lattice channel (all nonzero ``p(y|x)`` are powers of one base).
    """
    b = lattice_base(dmc)
    if b is None:
        raise PlanningError("channel does not admit exact decode emulation")
    M = codebook.message_count if candidates is None else min(int(candidates), codebook.message_count)
    if M <= 1:
        return 0.0
    y = np.asarray(y_block)
    x = codebook.codeword(sent)
    w = dmc.transition
    lik = w[x, y]
    if np.any(lik == 0):
        return -math.inf
    logb = math.log(b)
    k_sent = int(np.round(-np.log(lik) / logb).sum())

    p = codebook.distribution
    pmfs, counts = [], []
    log_alive = 0.0
    for yy, c in zip(*np.unique(y, return_counts=True)):
        col = w[:, yy]
        nz = col > 0
        alive = float(p[nz].sum())
        if alive <= 0:
            return 0.0
        log_alive += int(c) * math.log(alive)
        kx = np.round(-np.log(col[nz]) / logb).astype(int)
        pmf = np.bincount(kx, weights=p[nz], minlength=kx.max() + 1) / alive
        pmfs.append(pmf)
        counts.append(int(c))
    le, lt = _log_tail_le(pmfs, counts, k_sent)
    log_q_ge = log_alive + le
    log_q_gt = log_alive + lt
    below, above = sent, M - 1 - sent
    total = 0.0
    for cnt, lq in ((below, log_q_ge), (above, log_q_gt)):
        if cnt == 0:
            continue
        a = _log_neg_log1m(lq)
        if a == -math.inf:
            continue
        total += math.exp(min(a + math.log(cnt), 700.0))
    return -total


def emulate_ml_decode(codebook: Codebook, dmc: Dmc, y_block, sent: int | None,
                      rng: np.random.Generator, candidates: int | None = None) -> int:
    """Sample the ML decoder's output over a lazy codebook.

    When ``sent`` is a valid index, the decoder is correct with exactly the
    probability that no other codeword, drawn i.i.d. from the codebook law,
    beats (or ties from a smaller index) the transmitted one; otherwise a
    uniformly chosen wrong index is returned.  When ``sent`` is None the
    block carried no codeword of this codebook and a uniform index is
    returned.
    """
    M = codebook.message_count if candidates is None else min(int(candidates), codebook.message_count)
    if M <= 1:
        return 0
    if sent is None or not 0 <= sent < M:
        return _uniform_index(rng, M)
    logp = ml_success_log_probability(codebook, dmc, y_block, sent, M)
    if logp == 0.0 or math.log(rng.random() + 1e-300) < logp:
        return sent
    return _uniform_other(rng, M, sent)


# ---------------------------------------------------------------------------
# frame-role test


def _smoothed_llr(dmc: Dmc, lambda_smooth: float, x_rep: int | None = None) -> np.ndarray:
    if not 0 < lambda_smooth < 1:
        raise DomainError("lambda_smooth must lie in (0, 1)")
    x_rep = dmc.x_rep if x_rep is None else x_rep
    Y = dmc.output_size
    off = (1 - lambda_smooth) * dmc.transition[X_OFF] + lambda_smooth / Y
    rep = (1 - lambda_smooth) * dmc.transition[x_rep] + lambda_smooth / Y
    z = np.log(off / rep) / math.log(Y / lambda_smooth) if Y > 1 else np.zeros(Y)
    if not np.any(off != rep):
        raise ConfigurationError("silent and repetition symbols are indistinguishable")
    return z


def frame_activity_statistic(dmc: Dmc, y_prefix, lambda_smooth: float = 0.01,
                             x_rep: int | None = None) -> np.ndarray:
    """Sum of normalized smoothed log-likelihood ratios (silent over active).

    Works on the last axis, so a ``(frames, kappa)`` array gives one value
    per frame.  Each term lies in ``[-1, 1]``.
    """
    z = _smoothed_llr(dmc, lambda_smooth, x_rep)
    return z[np.asarray(y_prefix)].sum(axis=-1)


def frame_activity_test(dmc: Dmc, y_prefix, lambda_smooth: float = 0.01,
                        x_rep: int | None = None) -> str:
    """Decide ``"active"`` or ``"silent"`` from a frame's repetition prefix.

    The frame is declared silent when the normalized smoothed LLR sum is
    nonnegative.
    """
    s = frame_activity_statistic(dmc, y_prefix, lambda_smooth, x_rep)
    return "silent" if float(s) >= 0 else "active"


# ---------------------------------------------------------------------------
# codebook selection


def selection_budget(R_p: float, gamma: float, delta_tilde: float) -> float:
    return 1.0 - R_p - 2.0 * gamma - delta_tilde


def select_codebook(estimates, types, R_p: float, gamma: float, delta_tilde: float,
                    dmc: Dmc) -> InputType:
    """Pick the type of largest backed-off rate within the estimated budget.

    Feasible types satisfy ``sum_x eps_hat_x p(x) <= 1 - R_p - 2 gamma -
    delta_tilde``.  Among them the largest ``(I(p; W) - delta_tilde)^+``
    wins.  Ties go to the smallest estimated cost, then to the type listed
    first by :func:`enumerate_types`.  With no feasible type the point mass
    on ``x_off`` is returned.

    Parameters
    ----------
    estimates : array_like
        Estimated erasure probability per input.
    types : int or iterable of InputType
        A denominator ``C_n`` (all types enumerated in blocks) or an
        explicit list.
    """
    eps_hat = np.asarray(estimates, dtype=float)
    if eps_hat.shape != (dmc.input_size,):
        raise ConfigurationError("need one estimate per channel input")
    budget = selection_budget(R_p, gamma, delta_tilde)
    W = dmc.transition
    h = -xlogy(W, W).sum(axis=1)

    if isinstance(types, (int, np.integer)):
        C_n = int(types)
        blocks: Iterable[np.ndarray] = type_blocks(dmc.input_size, C_n)
    else:
        tl = list(types)
        if not tl:
            raise ConfigurationError("empty type list")
        C_n = tl[0].denominator
        blocks = [np.array([t.counts for t in tl], dtype=np.int64)]

    best_rate = -math.inf
    best: tuple | None = None
    for block in blocks:
        counts = np.asarray(block)
        den = counts.sum(axis=1, keepdims=True).astype(float)
        P = counts / den
        cost = P @ eps_hat
        feas = cost <= budget + 1e-12
        if not np.any(feas):
            continue
        Pf = P[feas]
        cf = counts[feas]
        costf = cost[feas]
        rate = np.maximum(mutual_information_rows(Pf, W, h) - delta_tilde, 0.0)
        rate = np.where(rate < 1e-13, 0.0, rate)
        top = float(rate.max())
        if top > best_rate + TIE_TOL:
            best_rate = top
            best = None
        if top >= best_rate - TIE_TOL:
            sel = rate >= best_rate - TIE_TOL
            near, near_cost = cf[sel], costf[sel]
            cheap = near[near_cost <= near_cost.min() + TIE_TOL]
            # earliest in enumeration order, which is descending lexicographic
            order = np.lexsort((-cheap).T[::-1])
            cand = (float(near_cost.min()), tuple(-int(v) for v in cheap[order[0]]))
            if best is None or cand[0] < best[0] - TIE_TOL or (
                cand[0] <= best[0] + TIE_TOL and cand[1] < best[1]
            ):
                best = cand
    if best is None:
        return InputType.point_mass(dmc.input_size, X_OFF, C_n)
    best = tuple(-v for v in best[1])
    return InputType(best)


# ---------------------------------------------------------------------------
# bit helpers


def bits_to_int(bits) -> int:
    """Big-endian bit array to integer."""
    bits = np.asarray(bits, dtype=np.uint8)
    if bits.size == 0:
        return 0
    pad = (-bits.size) % 8
    packed = np.packbits(np.concatenate([np.zeros(pad, dtype=np.uint8), bits]))
    return int.from_bytes(packed.tobytes(), "big")


def int_to_bits(value: int, width: int) -> np.ndarray:
    """Integer to a big-endian bit array of the given width."""
    if width == 0:
        return np.zeros(0, dtype=np.uint8)
    nbytes = (width + 7) // 8
    raw = np.frombuffer(int(value).to_bytes(nbytes, "big"), dtype=np.uint8)
    return np.unpackbits(raw)[nbytes * 8 - width :]


def bits_to_ints(bits: np.ndarray, width: int) -> np.ndarray:
    """Rows of a ``(n, width)`` bit array to integers, for ``width <= 62``."""
    if width == 0:
        return np.zeros(len(bits), dtype=np.int64)
    weights = (1 << np.arange(width - 1, -1, -1, dtype=np.int64))
    return np.asarray(bits, dtype=np.int64) @ weights


def ints_to_bits(values: np.ndarray, width: int) -> np.ndarray:
    values = np.asarray(values, dtype=np.int64)
    shifts = np.arange(width - 1, -1, -1, dtype=np.int64)
    return ((values[:, None] >> shifts[None, :]) & 1).astype(np.uint8)
