"""Monte Carlo engine: episodes, metrics, validity estimates and aggregation."""

from __future__ import annotations

import csv
import io
import math
from dataclasses import asdict, dataclass
from fractions import Fraction
from typing import Callable, Iterable, Sequence

import numpy as np
from scipy.stats import norm

from .analysis import validity_bound
from .channel import X_OFF, Scenario, as_fraction, require_valid
from .coding import bits_to_ints
from .errors import ConfigurationError, DomainError, PlanningError
from .protocols import (
    PHASE_THRESHOLD,
    ROLE_NAMES,
    ROLE_PAYLOAD,
    ROLE_SILENT,
    PHASE_NAMES,
    AdaptiveEncoder,
    FixedEncoder,
    ProtocolParams,
    _Gate,
    adaptive_decoder,
    fixed_decoder,
    threshold_decoder,
)
from .rib import fixed_codebook_lower_bound, rib, unconstrained_capacity

STRATEGIES = ("threshold", "fixed", "adaptive")

# stream identifiers for the seed splitter
STREAM_MESSAGE, STREAM_Y, STREAM_A, STREAM_DECODER, STREAM_BATCH = range(5)


def episode_rng(seed: int, replication: int, stream: int) -> np.random.Generator:
    """Counter-based generator: the same ``(seed, replication, stream)`` always gives the same draws."""
    return np.random.default_rng(np.random.SeedSequence(int(seed), spawn_key=(int(replication), int(stream))))


def message_length(scenario: Scenario, n: int) -> int:
    """``ceil(n * log2 min(|X|, |Y|))`` message bits."""
    c = min(scenario.dmc.input_size, scenario.dmc.output_size)
    return int(math.ceil(n * math.log2(c))) if c > 1 else 0


def draw_message(scenario: Scenario, n: int, seed: int, replication: int = 0) -> np.ndarray:
    rng = episode_rng(seed, replication, STREAM_MESSAGE)
    return rng.integers(0, 2, size=message_length(scenario, n), dtype=np.uint8)


# ---------------------------------------------------------------------------
# episode records


@dataclass
class EpisodeTrace:
    """Per-symbol record of one episode.

    ``frame_role`` and ``phase`` hold codes indexing
    :data:`arqradio.protocols.ROLE_NAMES` and :data:`arqradio.protocols.PHASE_NAMES`.
    """

    x: np.ndarray
    y: np.ndarray
    a: np.ndarray
    tau: np.ndarray
    frame_role: np.ndarray
    phase: np.ndarray
    true_bits: np.ndarray
    decoded_bits: np.ndarray
    strategy: str
    params: ProtocolParams | None
    scenario_name: str
    seed: int
    replication: int = 0

    @property
    def n(self) -> int:
        return int(self.x.size)

    def to_csv(self, stream=None) -> str:
        """CSV with columns ``i, x, y, a, tau, frame_role, phase`` (``i`` from 1)."""
        out = stream if stream is not None else io.StringIO()
        out.write("# arqradio.trace/1\n")
        w = csv.writer(out, lineterminator="\n")
        w.writerow(["i", "x", "y", "a", "tau", "frame_role", "phase"])
        for k in range(self.n):
            w.writerow([k + 1, int(self.x[k]), int(self.y[k]), int(self.a[k]), int(self.tau[k]),
                        ROLE_NAMES[self.frame_role[k]], PHASE_NAMES[self.phase[k]]])
        return out.getvalue() if stream is None else ""


@dataclass(frozen=True)
class MetricsReport:
    """Scalar summary of one episode.

    Attributes
    ----------
    primary_rate : float
        ``n^-1 sum A_i``.
    min_running_rate : float
        Smallest ``k^-1 sum_{i<=k} A_i`` over ``k >= K``.
    min_windowed_rate : float
        Smallest delivery fraction over windows of ``K`` uses.
    cognitive_rate : float
        Correctly decoded message prefix in bits per use.
    duty_cycle : float
        Fraction of uses in active frames (or transmit uses).
    frame_misdetections : int
        Complete frames whose role the decoder judged wrongly.
    phase2_failure : bool
        Adaptive only: the announced type was decoded wrongly.
    episode_error : bool
        Any of the first ``scored_bits`` decoded bits is wrong or missing.
    scored_bits : int
    correct_prefix : int
    bits_committed : int
        Message bits carried by complete active frames.
    first_silent_after : int
        Index of the last silent use plus one (0 when never silent).
    phase12_length : int
        Adaptive only: uses up to the end of the announcement frame
        (``-1`` when it was never sent).
    """

    n: int
    strategy: str
    primary_rate: float
    min_running_rate: float
    min_windowed_rate: float
    cognitive_rate: float
    duty_cycle: float
    frame_misdetections: int
    phase2_failure: bool
    episode_error: bool
    scored_bits: int
    correct_prefix: int
    bits_committed: int
    first_silent_after: int
    phase12_length: int = -1
    chosen_type: tuple | None = None
    seed: int = 0
    replication: int = 0

    def to_dict(self) -> dict:
        d = asdict(self)
        d["chosen_type"] = None if self.chosen_type is None else list(self.chosen_type)
        return d


NUMERIC_FIELDS = ("primary_rate", "min_running_rate", "min_windowed_rate", "cognitive_rate",
                  "duty_cycle", "frame_misdetections")
FLAG_FIELDS = ("phase2_failure", "episode_error")


def _correct_prefix(decoded: np.ndarray, truth: np.ndarray, limit: int) -> int:
    m = min(decoded.size, truth.size, limit)
    if m == 0:
        return 0
    bad = np.flatnonzero(decoded[:m] != truth[:m])
    return int(bad[0]) if bad.size else m


def _running_stats(a: np.ndarray, K: int) -> tuple[float, float]:
    c = np.cumsum(a, dtype=np.int64)
    k = np.arange(1, a.size + 1)
    tail = slice(min(K, a.size) - 1, None)
    running = float(np.min(c[tail] / k[tail]))
    if a.size >= K:
        csum = np.concatenate([[0], c])
        windowed = float(np.min(csum[K:] - csum[:-K]) / K)
    else:
        windowed = float(c[-1] / a.size)
    return running, windowed


def _report(trace: EpisodeTrace, K: int, scored: int, bits_committed: int, misdetections: int,
            phase2_failure: bool, phase12: int, chosen) -> MetricsReport:
    n = trace.n
    correct = _correct_prefix(trace.decoded_bits, trace.true_bits, bits_committed)
    running, windowed = _running_stats(trace.a, K)
    silent = np.flatnonzero(trace.tau == 0)
    return MetricsReport(
        n=n,
        strategy=trace.strategy,
        primary_rate=float(trace.a.sum() / n),
        min_running_rate=running,
        min_windowed_rate=windowed,
        cognitive_rate=correct / n,
        duty_cycle=float(trace.tau.mean()),
        frame_misdetections=int(misdetections),
        phase2_failure=bool(phase2_failure),
        episode_error=bool(correct < min(scored, trace.true_bits.size)),
        scored_bits=int(scored),
        correct_prefix=int(correct),
        bits_committed=int(bits_committed),
        first_silent_after=int(silent[-1] + 1) if silent.size else 0,
        phase12_length=int(phase12),
        chosen_type=chosen,
        seed=trace.seed,
        replication=trace.replication,
    )


# ---------------------------------------------------------------------------
# episodes


def _eps_table(scenario: Scenario, start: int, length: int) -> np.ndarray:
    X = scenario.dmc.input_size
    x = np.broadcast_to(np.arange(X, dtype=np.uint8)[:, None], (X, length))
    return scenario.profile.eps_block(x, start)


def _run_threshold(scenario: Scenario, n: int, bits: np.ndarray, rng_y, rng_a):
    rp = as_fraction(scenario.R_p)
    D, RP = rp.denominator, rp.numerator
    P = scenario.dmc.input_size - 1
    b = int(math.floor(math.log2(P))) if P >= 1 else 0
    if b:
        usable = (bits.size // b) * b
        syms = (1 + bits_to_ints(bits[:usable].reshape(-1, b), b)).tolist()
        if len(syms) < n:
            syms += [1] * (n - len(syms))
    else:
        syms = [1] * n
    u_y = rng_y.random(n)
    u_a = rng_a.random(n)
    x = np.zeros(n, dtype=np.uint8)
    margin = 0
    used = 0
    chunk = 1 << 16
    for s in range(0, n, chunk):
        e = min(n, s + chunk)
        succ = (1.0 - _eps_table(scenario, s + 1, e - s)).T.tolist()
        ua = u_a[s:e].tolist()
        xs = [0] * (e - s)
        for j in range(e - s):
            if margin >= 0:
                xv = syms[used]
                used += 1
            else:
                xv = 0
            xs[j] = xv
            margin += (D if ua[j] < succ[j][xv] else 0) - RP
        x[s:e] = xs
    y = scenario.dmc.sample_outputs(x, u_y)
    a = u_a < 1.0 - np.take_along_axis(_eps_table(scenario, 1, n), x[None, :].astype(np.intp), 0)[0]
    tau = (x != X_OFF).astype(np.uint8)
    return x, y, a.astype(np.uint8), tau, b * used


def _run_framed(scenario: Scenario, encoder, n: int, rng_y, rng_a):
    K = encoder.params.K
    x = np.empty(n, dtype=np.uint8)
    role = np.empty(n, dtype=np.uint8)
    phase = np.empty(n, dtype=np.uint8)
    y = np.empty(n, dtype=np.int64)
    a = np.empty(n, dtype=np.uint8)
    i = 0
    while i < n:
        _, run = encoder.plan()
        frames = min(run, -(-(n - i) // K))
        xs, rs, ps = encoder.emit(frames)
        m = min(xs.size, n - i)
        xs, rs, ps = xs[:m], rs[:m], ps[:m]
        yb, ab = _sample(scenario, xs, i + 1, rng_y, rng_a)
        encoder.observe(ab)
        x[i : i + m], role[i : i + m], phase[i : i + m] = xs, rs, ps
        y[i : i + m], a[i : i + m] = yb, ab
        i += m
    tau = (role != ROLE_SILENT).astype(np.uint8)
    return x, y, a, tau, role, phase


def _sample(scenario, xs, start, rng_y, rng_a):
    yb = scenario.dmc.sample_outputs(xs, rng_y.random(xs.shape))
    ab = rng_a.random(xs.shape) < 1.0 - scenario.profile.eps_block(xs, start)
    return yb, ab.astype(np.uint8)


def run_episode(scenario: Scenario, strategy: str, params: ProtocolParams | None = None,
                seed: int = 0, replication: int = 0, n: int | None = None,
                scored_rate_bits: float | None = None) -> tuple[EpisodeTrace, MetricsReport]:
    """Simulate one episode and score it.

    Parameters
    ----------
    scenario : Scenario
    strategy : {"threshold", "fixed", "adaptive"}
    params : ProtocolParams, optional
        Required for framed strategies; its ``n`` is the horizon.
    seed, replication : int
        Master seed and replication counter (see :func:`episode_rng`).
    n : int, optional
        Horizon for the threshold strategy (defaults to ``params.n``).
    scored_rate_bits : float, optional
        Target rate ``R - delta`` in bits per use; the episode errs when any
        of the first ``floor(n * scored_rate_bits)`` bits is wrong.  Defaults
        to the bits the encoder committed.
    """
    require_valid(scenario)
    if strategy not in STRATEGIES:
        raise ConfigurationError(f"strategy must be one of {STRATEGIES}")
    if strategy != "threshold" and params is None:
        raise ConfigurationError(f"strategy {strategy!r} needs protocol parameters")
    if n is None:
        if params is None:
            raise ConfigurationError("horizon n is required")
        n = params.n
    if params is not None and strategy != "threshold":
        if abs(float(params.R_p) - float(scenario.R_p)) > 0:
            raise ConfigurationError("params.R_p differs from scenario.R_p")
        params.check_slack(scenario.nu)
    bits = draw_message(scenario, n, seed, replication)
    rng_y = episode_rng(seed, replication, STREAM_Y)
    rng_a = episode_rng(seed, replication, STREAM_A)
    rng_d = episode_rng(seed, replication, STREAM_DECODER)

    if strategy == "threshold":
        x, y, a, tau, committed = _run_threshold(scenario, n, bits, rng_y, rng_a)
        decoded = threshold_decoder(y, scenario.dmc)
        role = np.where(tau == 1, ROLE_PAYLOAD, ROLE_SILENT).astype(np.uint8)
        phase = np.full(n, PHASE_THRESHOLD, dtype=np.uint8)
        trace = EpisodeTrace(x, y, a, tau, role, phase, bits, decoded, strategy, params,
                             scenario.name, seed, replication)
        scored = committed if scored_rate_bits is None else int(math.floor(n * scored_rate_bits))
        K = params.K if params is not None else 1
        return trace, _report(trace, K, scored, committed, 0, False, -1, None)

    enc_cls = FixedEncoder if strategy == "fixed" else AdaptiveEncoder
    encoder = enc_cls(params, scenario.dmc, bits)
    x, y, a, tau, role, phase = _run_framed(scenario, encoder, n, rng_y, rng_a)
    if strategy == "fixed":
        state = fixed_decoder(y, params, scenario.dmc, genie=encoder.sent, rng=rng_d)
    else:
        state = adaptive_decoder(y, params, scenario.dmc, genie=encoder.sent, rng=rng_d)
    K = params.K
    frames = n // K
    truth = tau[: frames * K].reshape(frames, K)[:, 0].astype(bool)
    misdetections = int(np.count_nonzero(truth != state.verdicts[:frames]))
    p2_fail, phase12, chosen = False, -1, None
    if strategy == "adaptive":
        chosen = None if encoder.chosen_type is None else encoder.chosen_type.counts
        p2 = np.flatnonzero(role == 3)
        if p2.size:
            phase12 = int(p2[-1] + 1)
            p2_fail = state.chosen_type is None or state.chosen_type != encoder.chosen_type
    trace = EpisodeTrace(x, y, a, tau, role, phase, bits, state.bits, strategy, params,
                         scenario.name, seed, replication)
    committed = encoder.bits_committed
    scored = committed if scored_rate_bits is None else int(math.floor(n * scored_rate_bits))
    return trace, _report(trace, K, scored, committed, misdetections, p2_fail, phase12, chosen)


def run_episodes(scenario, strategy, params, seed, replications, n=None, jobs: int = 1,
                 first_replication: int = 0) -> list[MetricsReport]:
    """Reports for replications ``first_replication, ..., first_replication + replications - 1``."""
    reps = range(first_replication, first_replication + replications)
    if jobs <= 1:
        return [run_episode(scenario, strategy, params, seed, r, n)[1] for r in reps]
    from concurrent.futures import ProcessPoolExecutor

    with ProcessPoolExecutor(max_workers=jobs) as pool:
        futs = [pool.submit(_report_only, scenario, strategy, params, seed, r, n) for r in reps]
        return [f.result() for f in futs]


def _report_only(scenario, strategy, params, seed, r, n):
    return run_episode(scenario, strategy, params, seed, r, n)[1]


# ---------------------------------------------------------------------------
# batched validity engines


def _grid_hits(k_grid: np.ndarray, lo: int, hi: int) -> tuple[np.ndarray, np.ndarray]:
    """Grid entries in ``(lo, hi]`` and their offsets ``k - lo - 1``."""
    s = np.searchsorted(k_grid, lo, side="right")
    e = np.searchsorted(k_grid, hi, side="right")
    ks = k_grid[s:e]
    return ks, ks - lo - 1


def batch_fixed_arqs(scenario: Scenario, params: ProtocolParams, replications: int,
                     k_grid: Sequence[int], rng: np.random.Generator, strategy: str = "fixed"):
    """Count replications with ``k^-1 sum A_i <= R_p`` at each ``k`` of the grid.

    Runs the encoder only, vectorized across replications.  Payload symbols
    of an explicit codebook are codewords of uniform fragment indices (the
    message is uniform); over a lazy codebook they are drawn i.i.d. from the
    codebook law.  ``strategy="adaptive"`` is not batched here.
    """
    if strategy != "fixed":
        raise ConfigurationError("batched engine supports the fixed strategy")
    from .coding import build_codebook

    n, K, kappa = params.n, params.K, params.kappa
    gate = _Gate(params)
    rp = as_fraction(scenario.R_p)
    if gate.D * (n + K) * 4 > (1 << 62) or rp.denominator * n > (1 << 62):
        raise PlanningError("rate denominators too large for exact integer arithmetic")
    cb = build_codebook("fixed", K - kappa, params.delta_tilde, scenario.dmc, params.seed,
                        memory_cap=params.memory_cap)
    width = cb.fragment_bits
    x_rep = scenario.dmc.x_rep
    grid = np.unique(np.asarray(k_grid, dtype=np.int64))
    if grid.size and (grid[0] < 1 or grid[-1] > n):
        raise ConfigurationError("grid points must lie in [1, n]")
    hits = np.zeros(grid.size, dtype=np.int64)
    delivered = np.zeros(replications, dtype=np.int64)
    active_frames = np.zeros(replications, dtype=np.int64)
    i = 0
    x = np.empty((replications, K), dtype=np.uint8)
    while i < n:
        L = min(K, n - i)
        margin = delivered * gate.D - (gate.RP + gate.G) * i
        active = margin >= K * gate.D if params.rule == "budget" else margin > 0
        x[:] = X_OFF
        na = int(active.sum())
        if na:
            body = np.empty((na, K - kappa), dtype=np.uint8)
            if cb.explicit:
                idx = rng.integers(0, 1 << width, size=na) if width else np.zeros(na, dtype=np.int64)
                body[:] = cb.codewords[idx]
            else:
                cdf = np.cumsum(cb.distribution)
                cdf[-1] = 1.0
                body[:] = np.searchsorted(cdf, rng.random(body.shape), side="right")
            x[active, :kappa] = x_rep
            x[active, kappa:] = body
        xs = x[:, :L]
        a = rng.random(xs.shape) < 1.0 - scenario.profile.eps_block(xs, i + 1)
        cum = delivered[:, None] + np.cumsum(a, axis=1)
        ks, off = _grid_hits(grid, i, i + L)
        if ks.size:
            sel = np.searchsorted(grid, ks)
            hits[sel] += np.count_nonzero(cum[:, off] * rp.denominator <= rp.numerator * ks[None, :], axis=0)
        delivered = cum[:, -1]
        active_frames += active
        i += L
    return grid, hits, delivered, active_frames


def simulate_threshold_batch(scenario: Scenario, replications: int, steps: int,
                             rng: np.random.Generator, k_grid: Sequence[int] | None = None,
                             record: bool = True):
    """Threshold strategy vectorized across replications.

    Returns ``(x, a, grid, hits)`` where ``x`` and ``a`` are
    ``(replications, steps)`` arrays (None unless ``record``) and ``hits``
    counts replications with ``k^-1 sum A_i <= R_p`` at each grid point.
    Transmit symbols are uniform over the ``2**floor(log2 P)`` used ones.
    """
    rp = as_fraction(scenario.R_p)
    D, RP = rp.denominator, rp.numerator
    P = scenario.dmc.input_size - 1
    b = int(math.floor(math.log2(P))) if P >= 1 else 0
    grid = np.unique(np.asarray([] if k_grid is None else k_grid, dtype=np.int64))
    hits = np.zeros(grid.size, dtype=np.int64)
    xs = np.zeros((replications, steps), dtype=np.uint8) if record else None
    as_ = np.zeros((replications, steps), dtype=np.uint8) if record else None
    margin = np.zeros(replications, dtype=np.int64)
    delivered = np.zeros(replications, dtype=np.int64)
    gpos = 0
    for k in range(1, steps + 1):
        tau = margin >= 0
        x = np.where(tau, 1 + rng.integers(0, 1 << b, size=replications), X_OFF).astype(np.uint8)
        a = rng.random(replications) < 1.0 - scenario.profile.eps_block(x[:, None], k)[:, 0]
        margin += a.astype(np.int64) * D - RP
        delivered += a
        if record:
            xs[:, k - 1] = x
            as_[:, k - 1] = a
        while gpos < grid.size and grid[gpos] == k:
            hits[gpos] = np.count_nonzero(delivered * D <= RP * k)
            gpos += 1
    return xs, as_, grid, hits


# ---------------------------------------------------------------------------
# statistics


def wilson_interval(successes: int, trials: int, confidence: float = 0.95) -> tuple[float, float]:
    """Wilson score interval for a binomial proportion."""
    if trials <= 0:
        raise DomainError("need at least one trial")
    if not 0 <= successes <= trials:
        raise DomainError("successes must lie in [0, trials]")
    z = float(norm.ppf(0.5 + confidence / 2))
    p = successes / trials
    den = 1 + z * z / trials
    mid = (p + z * z / (2 * trials)) / den
    half = z * math.sqrt(p * (1 - p) / trials + z * z / (4 * trials * trials)) / den
    # the endpoints are exact at the boundaries; rounding would leave ~1e-18
    lo = 0.0 if successes == 0 else max(0.0, mid - half)
    hi = 1.0 if successes == trials else min(1.0, mid + half)
    return lo, hi


@dataclass(frozen=True)
class ValidityRow:
    k: int
    exceed: int
    replications: int
    p_hat: float
    ci_lo: float
    ci_hi: float
    bound: float


def empirical_validity(scenario: Scenario, strategy: str, params: ProtocolParams | None,
                       k_grid: Sequence[int], replications: int, seed: int = 0,
                       confidence: float = 0.99, n: int | None = None) -> list[ValidityRow]:
    """Estimate ``P(k^-1 sum_{i<=k} A_i <= R_p)`` at each grid point.

    The companion ``bound`` column is :func:`arqradio.analysis.validity_bound`
    evaluated at ``k`` with the scenario's ``nu`` and ``eps_off`` (NaN for the
    threshold strategy, which has no slack ``gamma``).

    Raises
    ------
    DomainError
        With fewer than 1000 replications.
    """
    if replications < 1000:
        raise DomainError("need at least 1000 replications")
    require_valid(scenario)
    rng = episode_rng(seed, 0, STREAM_BATCH)
    if strategy == "threshold":
        steps = int(n if n is not None else (params.n if params else max(k_grid)))
        _, _, grid, hits = simulate_threshold_batch(scenario, replications, steps, rng, k_grid, record=False)
    elif strategy == "fixed":
        params.check_slack(scenario.nu)
        grid, hits, _, _ = batch_fixed_arqs(scenario, params, replications, k_grid, rng)
    elif strategy == "adaptive":
        grid = np.unique(np.asarray(k_grid, dtype=np.int64))
        hits = np.zeros(grid.size, dtype=np.int64)
        rp = as_fraction(scenario.R_p)
        for r in range(replications):
            tr, _ = run_episode(scenario, "adaptive", params, seed, r)
            c = np.cumsum(tr.a, dtype=np.int64)[grid - 1]
            hits += c * rp.denominator <= rp.numerator * grid
    else:
        raise ConfigurationError(f"strategy must be one of {STRATEGIES}")
    rows = []
    for k, h in zip(grid.tolist(), hits.tolist()):
        lo, hi = wilson_interval(h, replications, confidence)
        if strategy == "threshold":
            bound = float("nan")
        else:
            bound = validity_bound(k, float(scenario.R_p), params.gamma, float(scenario.nu), scenario.eps_off)
        rows.append(ValidityRow(k, h, replications, h / replications, lo, hi, bound))
    return rows


def simulate_stopping_times(r: int, s: float, R_p: float, gamma: float, eps0: float,
                            replications: int, t_max: int, rng: np.random.Generator) -> np.ndarray:
    """Sample ``N = r * inf{i > 0 : S_{ir} - i r gamma - r >= 0}`` under silence.

    ``S`` starts at ``s`` and moves by ``A - R_p`` with ``A ~ Bernoulli(1 - eps0)``.
    Paths not stopped by ``t_max`` report ``t_max + r`` (censored).
    """
    if r < 1 or t_max < r:
        raise DomainError("need r >= 1 and t_max >= r")
    S = np.full(replications, float(s))
    N = np.full(replications, t_max + r, dtype=np.int64)
    alive = np.ones(replications, dtype=bool)
    for i in range(1, t_max // r + 1):
        idx = np.flatnonzero(alive)
        if idx.size == 0:
            break
        S[idx] += rng.binomial(r, 1.0 - eps0, size=idx.size) - r * R_p
        hit = S[idx] - i * r * gamma - r >= -1e-12
        N[idx[hit]] = i * r
        alive[idx[hit]] = False
    return N


# ---------------------------------------------------------------------------
# aggregation


@dataclass(frozen=True)
class Summary:
    """Exact sufficient statistics over reports; merge is associative and commutative."""

    count: int
    sums: dict
    sumsq: dict
    flags: dict

    def mean(self, name: str) -> float:
        return float(self.sums[name] / self.count)

    def variance(self, name: str) -> float:
        if self.count < 2:
            return 0.0
        m = self.sums[name] / self.count
        return float((self.sumsq[name] - self.count * m * m) / (self.count - 1))

    def ci_half_width(self, name: str, confidence: float = 0.95) -> float:
        z = float(norm.ppf(0.5 + confidence / 2))
        return z * math.sqrt(max(self.variance(name), 0.0) / self.count)

    def flag_rate(self, name: str) -> float:
        return self.flags[name] / self.count

    def flag_interval(self, name: str, confidence: float = 0.95) -> tuple[float, float]:
        return wilson_interval(self.flags[name], self.count, confidence)

    def as_row(self, confidence: float = 0.95) -> dict:
        row = {"count": self.count}
        for f in NUMERIC_FIELDS:
            row[f"{f}_mean"] = self.mean(f)
            row[f"{f}_ci"] = self.ci_half_width(f, confidence)
        for f in FLAG_FIELDS:
            lo, hi = self.flag_interval(f, confidence)
            row[f"{f}_rate"] = self.flag_rate(f)
            row[f"{f}_lo"], row[f"{f}_hi"] = lo, hi
        return row


def aggregate(reports: Iterable[MetricsReport]) -> Summary:
    """Fold reports into a :class:`Summary`.

    Raises
    ------
    DomainError
        On an empty input.
    """
    reports = list(reports)
    if not reports:
        raise DomainError("cannot aggregate zero reports")
    sums = {f: Fraction(0) for f in NUMERIC_FIELDS}
    sumsq = {f: Fraction(0) for f in NUMERIC_FIELDS}
    flags = {f: 0 for f in FLAG_FIELDS}
    for r in reports:
        for f in NUMERIC_FIELDS:
            v = Fraction(getattr(r, f))
            sums[f] += v
            sumsq[f] += v * v
        for f in FLAG_FIELDS:
            flags[f] += int(bool(getattr(r, f)))
    return Summary(len(reports), sums, sumsq, flags)


def merge(a: Summary, b: Summary) -> Summary:
    return Summary(
        a.count + b.count,
        {f: a.sums[f] + b.sums[f] for f in a.sums},
        {f: a.sumsq[f] + b.sumsq[f] for f in a.sumsq},
        {f: a.flags[f] + b.flags[f] for f in a.flags},
    )


# ---------------------------------------------------------------------------
# sweeps


@dataclass(frozen=True)
class SweepRow:
    R_p: float
    lam: float
    rate_mean: float
    rate_ci: float
    rib: float
    fixed_lower_bound: float
    replications: int


def rate_vs_budget_sweep(scenario_for: Callable[[float], Scenario], R_p_grid: Iterable[float],
                         strategy: str, params_for: Callable[[Scenario], ProtocolParams | None],
                         replications: int, seed: int = 0, n: int | None = None,
                         jobs: int = 1) -> list[SweepRow]:
    """Empirical cognitive rate against the RIB curve, in bits per use.

    ``scenario_for(R_p)`` builds the scenario at each grid point and
    ``params_for(scenario)`` its protocol parameters.
    """
    rows = []
    for R_p in R_p_grid:
        sc = scenario_for(R_p)
        params = params_for(sc)
        reports = run_episodes(sc, strategy, params, seed, replications, n=n, jobs=jobs)
        summ = aggregate(reports)
        eps = sc.profile.eps_block(np.arange(sc.dmc.input_size), 1)
        value = rib(sc.dmc, eps, float(R_p)).bits
        c_star, _ = unconstrained_capacity(sc.dmc)
        lb = fixed_codebook_lower_bound(sc.eps_off, float(R_p), c_star) / math.log(2)
        rows.append(SweepRow(float(R_p), 1.0 - float(R_p), summ.mean("cognitive_rate"),
                             summ.ci_half_width("cognitive_rate") if replications > 1 else 0.0,
                             value, lb, replications))
    return rows
