"""Cognitive-radio strategies: encoder state machines and matching decoders.

Three strategies are provided:

* ``threshold``: per-symbol rule, transmit iff the primary's surplus is
  nonnegative; each transmit symbol carries ``floor(log2 P)`` raw bits.
* ``fixed``: frames of ``K`` uses.  A frame is active iff at its start
  ``S - i*gamma >= K``; active frames send ``kappa`` copies of ``x_rep``
  followed by a codeword of a capacity-achieving random codebook.
* ``adaptive``: like ``fixed``, but the first active frame carries pilots
  used to estimate the erasure vector, the second announces the chosen input
  type through the fixed codebook, and later frames use a codebook drawn
  from that type.

Frame-level encoders expose ``plan``/``emit``/``observe`` so a simulator can
process runs of frames whose roles are already determined in one vectorized
step, plus ``next_input``/``observe_arq`` for symbol-by-symbol driving.
Both paths produce identical input sequences.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from fractions import Fraction

import numpy as np

from .channel import X_OFF, Dmc, as_fraction
from .coding import (
    DEFAULT_MEMORY_CAP,
    Codebook,
    InputType,
    bits_to_int,
    bits_to_ints,
    build_codebook,
    count_types,
    emulate_ml_decode,
    frame_activity_statistic,
    int_to_bits,
    ints_to_bits,
    ml_decode_many,
    select_codebook,
    type_rank,
    type_unrank,
)
from .errors import ConfigurationError, DomainError, PlanningError

# per-symbol role codes
ROLE_SILENT, ROLE_REP, ROLE_PILOT, ROLE_PHASE2, ROLE_PAYLOAD = 0, 1, 2, 3, 4
ROLE_NAMES = ("silent", "rep", "pilot", "phase2", "payload")

# phase codes
PHASE_THRESHOLD, PHASE_FIXED, PHASE_I, PHASE_II, PHASE_III = 0, 1, 2, 3, 4
PHASE_NAMES = ("threshold", "fixed", "adaptive-I", "adaptive-II", "adaptive-III")

RULES = ("budget", "surplus")


def iroot(n: int, k: int) -> int:
    """Largest integer ``r`` with ``r**k <= n``."""
    if n < 0 or k < 1:
        raise DomainError("need n >= 0 and k >= 1")
    r = int(round(n ** (1.0 / k)))
    while r > 0 and r**k > n:
        r -= 1
    while (r + 1) ** k <= n:
        r += 1
    return r


@dataclass(frozen=True)
class ProtocolParams:
    """Frame, threshold and codebook parameters.

    Attributes
    ----------
    n : int
        Horizon.
    K : int
        Frame length.
    kappa : int
        Repetition-prefix length, ``0 < kappa < K``.
    gamma : float
        Threshold slack per use.
    delta_tilde : float
        Rate back-off in nats.
    R_p : float
        Primary target rate.
    C_n : int
        Type denominator of the adaptive codebook menu.
    seed : int
        Common randomness shared by encoder and decoder.
    rule : {"budget", "surplus"}
        Frame activation rule.  ``"budget"`` activates iff
        ``S - i*gamma >= K`` at the frame start; ``"surplus"`` iff ``S > 0``.
    lambda_smooth : float
        Smoothing weight of the frame-role test.
    memory_cap : int
        Largest explicit codeword table in symbols.
    """

    n: int
    K: int
    kappa: int
    gamma: float
    delta_tilde: float
    R_p: float
    C_n: int = 1
    seed: int = 0
    rule: str = "budget"
    lambda_smooth: float = 0.01
    memory_cap: int = DEFAULT_MEMORY_CAP

    def __post_init__(self):
        if not 0 < self.kappa < self.K <= self.n:
            raise ConfigurationError(
                f"need 0 < kappa < K <= n (kappa={self.kappa}, K={self.K}, n={self.n})"
            )
        if self.rule not in RULES:
            raise ConfigurationError(f"rule must be one of {RULES}")
        if self.rule == "budget" and not 0 < self.gamma < self.delta_tilde / 2:
            raise ConfigurationError("need 0 < gamma < delta_tilde / 2")
        if self.gamma < 0 or self.delta_tilde < 0:
            raise ConfigurationError("gamma and delta_tilde must be nonnegative")
        if not 0 <= self.R_p < 1:
            raise ConfigurationError("R_p must lie in [0, 1)")
        if self.C_n < 1:
            raise ConfigurationError("C_n must be positive")

    def with_overrides(self, **kw) -> "ProtocolParams":
        return replace(self, **kw)

    def check_slack(self, nu: float) -> None:
        """Raise unless ``gamma < nu / 2``."""
        if self.rule == "budget" and not self.gamma < nu / 2:
            raise DomainError(f"need gamma < nu / 2 (gamma={self.gamma}, nu={nu})")


def default_params(n: int, R_p: float, nu: float, delta_tilde: float, **overrides) -> ProtocolParams:
    """Asymptotic schedule ``K = floor(n^(1/8))``, ``kappa = floor(n^(1/16))``, ``C_n = floor(n^(1/32))``.

    ``gamma`` defaults to ``min(delta_tilde, nu) / 4``.  Keyword overrides are
    applied verbatim.

    Raises
    ------
    DomainError
        When ``gamma`` does not satisfy ``0 < gamma < min(delta_tilde, nu) / 2``.
    """
    base = dict(
        n=n,
        K=iroot(n, 8),
        kappa=iroot(n, 16),
        C_n=max(1, iroot(n, 32)),
        gamma=min(delta_tilde, nu) / 4,
        delta_tilde=delta_tilde,
        R_p=R_p,
    )
    base.update(overrides)
    g = base["gamma"]
    if not 0 < g < min(base["delta_tilde"], nu) / 2:
        raise DomainError(f"gamma={g} violates 0 < gamma < min(delta_tilde, nu) / 2")
    try:
        return ProtocolParams(**base)
    except ConfigurationError as exc:
        raise DomainError(str(exc)) from exc


class _Gate:
    """Exact frame-activation arithmetic on integers.

    Rates are scaled by a common denominator ``D`` so that
    ``S * D = delivered * D - RP * i`` is an integer.
    """

    def __init__(self, params: ProtocolParams):
        rp = as_fraction(params.R_p)
        g = as_fraction(params.gamma) if params.rule == "budget" else Fraction(0)
        D = math.lcm(rp.denominator, g.denominator)
        self.D = D
        self.RP = int(rp * D)
        self.G = int(g * D)
        self.K = params.K
        self.rule = params.rule

    def margin(self, delivered: int, i: int) -> int:
        """Scaled ``S_i - i*gamma`` (budget) or ``S_i`` (surplus)."""
        return delivered * self.D - (self.RP + self.G) * i

    def active(self, delivered: int, i: int) -> bool:
        m = self.margin(delivered, i)
        if self.rule == "budget":
            return m >= self.K * self.D
        return m > 0

    def run_length(self, delivered: int, i: int) -> int:
        """Frames from ``i`` on whose role is fixed whatever the ARQs are."""
        m = self.margin(delivered, i)
        K, D, drop = self.K, self.D, self.RP + self.G
        rise = D - drop
        big = 1 << 62
        if self.rule == "budget":
            if m >= K * D:
                return big if drop == 0 else (m - K * D) // (drop * K) + 1
            return big if rise <= 0 else -(-(K * D - m) // (rise * K))
        if m > 0:
            return big if drop == 0 else -(-m // (drop * K))
        return big if rise <= 0 else (-m) // (rise * K) + 1


# ---------------------------------------------------------------------------
# threshold strategy


class ThresholdEncoder:
    """Transmit iff the exact surplus ``S_{k-1} >= 0``.

    Transmit symbols are ``1..2**b`` with ``b = floor(log2 P)`` message bits
    per transmission, ``P = |X| - 1``.
    """

    def __init__(self, R_p, dmc: Dmc, message_bits: np.ndarray):
        rp = as_fraction(R_p)
        self.D = rp.denominator
        self.RP = rp.numerator
        self.P = dmc.input_size - 1
        self.bits_per_symbol = int(math.floor(math.log2(self.P))) if self.P >= 1 else 0
        self.message = np.asarray(message_bits, dtype=np.uint8)
        self.delivered = 0
        self.i = 0
        self.cursor = 0
        self.tau_last = 0

    @property
    def S(self) -> Fraction:
        return Fraction(self.delivered * self.D - self.RP * self.i, self.D)

    def next_input(self) -> int:
        if self.delivered * self.D - self.RP * self.i >= 0:
            self.tau_last = 1
            b = self.bits_per_symbol
            chunk = self.message[self.cursor : self.cursor + b]
            if chunk.size < b:
                chunk = np.concatenate([chunk, np.zeros(b - chunk.size, dtype=np.uint8)])
            self.cursor += b
            return 1 + bits_to_int(chunk)
        self.tau_last = 0
        return X_OFF

    def observe_arq(self, a: int) -> None:
        self.delivered += int(a)
        self.i += 1


def threshold_encoder_step(state: ThresholdEncoder, a_prev: int | None) -> int:
    """Feed the previous ARQ (None at the first use) and return the next input."""
    if a_prev is not None:
        state.observe_arq(a_prev)
    return state.next_input()


def threshold_decoder(y_sequence, dmc: Dmc) -> np.ndarray:
    """Symbol-wise ML estimate of each input; transmit symbols yield their bits."""
    y = np.asarray(y_sequence)
    P = dmc.input_size - 1
    b = int(math.floor(math.log2(P))) if P >= 1 else 0
    xhat = np.argmax(dmc.transition[:, y], axis=0)
    keep = (xhat != X_OFF) & (xhat - 1 < (1 << b))
    if b == 0:
        return np.zeros(0, dtype=np.uint8)
    return ints_to_bits(xhat[keep] - 1, b).ravel()


# ---------------------------------------------------------------------------
# framed strategies


@dataclass
class SentFrame:
    """Genie record of a transmitted codeword."""

    key: tuple
    index: int


class _FramedEncoder:
    phase_code = PHASE_FIXED

    def __init__(self, params: ProtocolParams, dmc: Dmc, message_bits: np.ndarray):
        self.params = params
        self.dmc = dmc
        self.gate = _Gate(params)
        self.message = np.asarray(message_bits, dtype=np.uint8)
        self.x_rep = dmc.x_rep
        self.delivered = 0
        self.i = 0
        self.frame_index = 0
        self.active_count = 0
        self.cursor = 0
        self.sent: dict[int, SentFrame] = {}
        self.bits_committed = 0
        self._pending: list[tuple[int, bool]] = []
        self._buf = np.zeros(0, dtype=np.uint8)
        self._buf_pos = 0
        self._a_buf: list[int] = []
        self.c_fixed = build_codebook("fixed", params.K - params.kappa, params.delta_tilde, dmc,
                                      params.seed, memory_cap=params.memory_cap)

    # -- frame-level API ------------------------------------------------------

    @property
    def S(self) -> Fraction:
        return Fraction(self.delivered * self.gate.D - self.gate.RP * self.i, self.gate.D)

    def plan(self) -> tuple[bool, int]:
        """Role of the next frame and how many frames certainly share it."""
        if self.i % self.params.K:
            raise DomainError("plan() called mid-frame")
        active = self.gate.active(self.delivered, self.i)
        run = self.gate.run_length(self.delivered, self.i)
        if active:
            run = min(run, self._active_run_cap())
        return active, max(1, run)

    def _active_run_cap(self) -> int:
        return 1 << 62

    def emit(self, frames: int):
        """Inputs, per-symbol roles and phases for the next ``frames`` frames."""
        active, run = self.plan()
        if frames > run:
            raise DomainError("cannot emit past the determined run")
        K = self.params.K
        if not active:
            size = frames * K
            x = np.zeros(size, dtype=np.uint8)
            role = np.zeros(size, dtype=np.uint8)
            phase = np.full(size, self._silent_phase(), dtype=np.uint8)
            for f in range(frames):
                self._pending.append((self.i + f * K, False))
            self.frame_index += frames
            return x, role, phase
        x, role, phase = self._emit_active(frames)
        self.frame_index += frames
        return x, role, phase

    def _silent_phase(self) -> int:
        return self.phase_code

    def observe(self, a_block) -> None:
        """Consume ARQs for the emitted symbols, in order."""
        a_block = np.asarray(a_block)
        K = self.params.K
        pos = 0
        while pos < a_block.size:
            if not self._pending:
                raise DomainError("observed more ARQs than emitted symbols")
            start, active = self._pending[0]
            offset = self.i - start
            take = min(K - offset, a_block.size - pos)
            chunk = a_block[pos : pos + take]
            self._frame_arqs(start, active, offset, chunk)
            self.delivered += int(chunk.sum())
            self.i += take
            pos += take
            if self.i - start == K:
                self._pending.pop(0)

    def _frame_arqs(self, start: int, active: bool, offset: int, chunk: np.ndarray) -> None:
        pass

    # -- symbol-level API -----------------------------------------------------

    def next_input(self) -> int:
        if self._buf_pos >= self._buf.size:
            self._buf, _, _ = self.emit(1)
            self._buf_pos = 0
        v = int(self._buf[self._buf_pos])
        self._buf_pos += 1
        return v

    def observe_arq(self, a: int) -> None:
        self.observe(np.array([int(a)], dtype=np.uint8))

    # -- helpers --------------------------------------------------------------

    def _fragments(self, count: int, width: int) -> list:
        """Next ``count`` fragments of ``width`` bits, zero-padded past the message."""
        total = count * width
        chunk = self.message[self.cursor : self.cursor + total]
        if chunk.size < total:
            chunk = np.concatenate([chunk, np.zeros(total - chunk.size, dtype=np.uint8)])
        self.cursor += total
        rows = chunk.reshape(count, width) if width else np.zeros((count, 0), dtype=np.uint8)
        if width <= 62:
            return list(bits_to_ints(rows, width))
        return [bits_to_int(r) for r in rows]

    def _payload(self, codebook: Codebook, frames: int, role_code: int, phase_code: int,
                 indices: list | None = None):
        K, kappa = self.params.K, self.params.kappa
        width = codebook.fragment_bits
        if indices is None:
            indices = self._fragments(frames, width)
            complete = [self.i_of_frame(f) + K <= self.params.n for f in range(frames)]
            self.bits_committed += width * sum(complete)
        x = np.empty((frames, K), dtype=np.uint8)
        x[:, :kappa] = self.x_rep
        if codebook.explicit:
            x[:, kappa:] = codebook.codewords[np.asarray(indices, dtype=np.int64)]
        else:
            for f, m in enumerate(indices):
                x[f, kappa:] = codebook.codeword(int(m))
        role = np.empty((frames, K), dtype=np.uint8)
        role[:, :kappa] = ROLE_REP
        role[:, kappa:] = role_code
        for f, m in enumerate(indices):
            start = self.i_of_frame(f)
            self.sent[start] = SentFrame(codebook.key, int(m))
            self._pending.append((start, True))
        self.active_count += frames
        return x.ravel(), role.ravel(), np.full(frames * K, phase_code, dtype=np.uint8)

    def i_of_frame(self, f: int) -> int:
        """Start index of the ``f``-th frame after the current one."""
        return (self.frame_index + f) * self.params.K


class FixedEncoder(_FramedEncoder):
    """Fixed-codebook protocol encoder."""

    phase_code = PHASE_FIXED

    def _emit_active(self, frames: int):
        return self._payload(self.c_fixed, frames, ROLE_PAYLOAD, PHASE_FIXED)


def fixed_encoder_step(state: FixedEncoder, a_prev: int | None) -> int:
    if a_prev is not None:
        state.observe_arq(a_prev)
    return state.next_input()


class AdaptiveEncoder(_FramedEncoder):
    """Codebook-adaptive protocol encoder.

    Raises
    ------
    PlanningError
        When the fixed codebook cannot index every type.
    """

    def __init__(self, params: ProtocolParams, dmc: Dmc, message_bits: np.ndarray):
        super().__init__(params, dmc, message_bits)
        X = dmc.input_size
        self.mu = (params.K - params.kappa) // X
        if self.mu < 1:
            raise ConfigurationError("frame too short for one pilot per input")
        self.n_types = count_types(X, params.C_n)
        if self.c_fixed.message_count < self.n_types:
            raise PlanningError(
                f"fixed codebook has {self.c_fixed.message_count} messages, "
                f"{self.n_types} types must be indexed"
            )
        self.pilot_sums = np.zeros(X, dtype=np.int64)
        self.pilot_frame_start: int | None = None
        self.estimates: np.ndarray | None = None
        self.chosen_type: InputType | None = None
        self.c_type: Codebook | None = None

    @property
    def phase(self) -> int:
        if self.active_count == 0:
            return PHASE_I
        if self.active_count == 1:
            return PHASE_II
        return PHASE_III

    def _silent_phase(self) -> int:
        return self.phase

    def _active_run_cap(self) -> int:
        return 1 if self.active_count < 2 else 1 << 62

    def pilot_block(self) -> np.ndarray:
        """Inputs after the prefix in the pilot frame: ``mu`` of each symbol, then ``x_off``."""
        K, kappa, X = self.params.K, self.params.kappa, self.dmc.input_size
        body = np.full(K - kappa, X_OFF, dtype=np.uint8)
        body[: self.mu * X] = np.repeat(np.arange(X, dtype=np.uint8), self.mu)
        return body

    def _emit_active(self, frames: int):
        K, kappa = self.params.K, self.params.kappa
        if self.active_count == 0:
            start = self.i_of_frame(0)
            x = np.concatenate([np.full(kappa, self.x_rep, dtype=np.uint8), self.pilot_block()])
            role = np.full(K, ROLE_PILOT, dtype=np.uint8)
            role[:kappa] = ROLE_REP
            self._pending.append((start, True))
            self.pilot_frame_start = start
            self.active_count += 1
            return x, role, np.full(K, PHASE_I, dtype=np.uint8)
        if self.active_count == 1:
            if self.chosen_type is None:
                raise DomainError("pilot ARQs must be observed before the announcement frame")
            return self._payload(self.c_fixed, 1, ROLE_PHASE2, PHASE_II,
                                 indices=[type_rank(self.chosen_type)])
        return self._payload(self.c_type, frames, ROLE_PAYLOAD, PHASE_III)

    def _frame_arqs(self, start, active, offset, chunk):
        if not active or start != self.pilot_frame_start:
            return
        kappa, X, mu = self.params.kappa, self.dmc.input_size, self.mu
        pos = offset + np.arange(chunk.size) - kappa
        sel = (pos >= 0) & (pos < mu * X)
        if np.any(sel):
            np.add.at(self.pilot_sums, pos[sel] // mu, chunk[sel].astype(np.int64))
        if offset + chunk.size == self.params.K:
            self._select()

    def _select(self) -> None:
        self.estimates = 1.0 - self.pilot_sums / self.mu
        p = self.params
        self.chosen_type = select_codebook(self.estimates, p.C_n, p.R_p, p.gamma, p.delta_tilde,
                                           self.dmc)
        self.c_type = build_codebook(self.chosen_type, p.K - p.kappa, p.delta_tilde, self.dmc,
                                     p.seed, memory_cap=p.memory_cap)


def adaptive_encoder_step(state: AdaptiveEncoder, a_prev: int | None) -> int:
    if a_prev is not None:
        state.observe_arq(a_prev)
    return state.next_input()


# ---------------------------------------------------------------------------
# decoders


@dataclass
class DecoderState:
    """Decoder output.

    Attributes
    ----------
    verdicts : ndarray of bool
        Per complete frame, True when judged active.
    bits : ndarray of uint8
        Reassembled message estimate.
    chosen_type : InputType or None
        Decoded codebook choice (adaptive only).
    """

    verdicts: np.ndarray
    bits: np.ndarray
    chosen_type: InputType | None = None
    fragments: list = field(default_factory=list)


def _frame_view(y: np.ndarray, K: int) -> np.ndarray:
    frames = y.size // K
    return y[: frames * K].reshape(frames, K)


def _decode_payloads(codebook: Codebook, dmc: Dmc, blocks: np.ndarray, starts: list[int],
                     genie: dict | None, rng, candidates: int | None = None) -> list[int]:
    if not len(blocks):
        return []
    if codebook.explicit:
        return [int(v) for v in ml_decode_many(codebook, dmc, blocks, candidates)]
    if rng is None:
        raise DomainError("lazy codebooks need a generator for emulated decoding")
    out = []
    for block, start in zip(blocks, starts):
        rec = None if genie is None else genie.get(start)
        sent = rec.index if rec is not None and rec.key == codebook.key else None
        out.append(emulate_ml_decode(codebook, dmc, block, sent, rng, candidates))
    return out


def _verdicts(frames: np.ndarray, params: ProtocolParams, dmc: Dmc) -> np.ndarray:
    stat = frame_activity_statistic(dmc, frames[:, : params.kappa], params.lambda_smooth)
    return stat < 0


def _assemble(indices: list[int], width: int) -> np.ndarray:
    if width == 0 or not indices:
        return np.zeros(0, dtype=np.uint8)
    # indices beyond the fragment range carry no fragment; keep the low bits
    mask = (1 << width) - 1
    indices = [m & mask for m in indices]
    if width <= 62:
        return ints_to_bits(np.asarray(indices, dtype=np.int64), width).ravel()
    return np.concatenate([int_to_bits(m, width) for m in indices])


def fixed_decoder(y_sequence, params: ProtocolParams, dmc: Dmc, *, genie: dict | None = None,
                  rng: np.random.Generator | None = None) -> DecoderState:
    """Frame-role test on each prefix, then ML decoding of active payloads.

    ``genie`` maps frame start to the encoder's :class:`SentFrame`; it is used
    only to sample the ML outcome over lazy codebooks.
    """
    y = np.asarray(y_sequence)
    frames = _frame_view(y, params.K)
    verdict = _verdicts(frames, params, dmc)
    cb = build_codebook("fixed", params.K - params.kappa, params.delta_tilde, dmc, params.seed,
                        memory_cap=params.memory_cap)
    act = np.flatnonzero(verdict)
    idx = _decode_payloads(cb, dmc, frames[act, params.kappa :], [int(f) * params.K for f in act],
                           genie, rng)
    return DecoderState(verdict, _assemble(idx, cb.fragment_bits), None, idx)


def adaptive_decoder(y_sequence, params: ProtocolParams, dmc: Dmc, *, genie: dict | None = None,
                     rng: np.random.Generator | None = None) -> DecoderState:
    """Decoder for the adaptive protocol, counting active frames itself.

    Its first active frame is skipped, the second is decoded with the fixed
    codebook restricted to the type indices, and later ones with the codebook
    of the decoded type.  A wrong announcement is not detected.
    """
    y = np.asarray(y_sequence)
    K, kappa = params.K, params.kappa
    frames = _frame_view(y, K)
    verdict = _verdicts(frames, params, dmc)
    act = np.flatnonzero(verdict)
    if act.size < 2:
        return DecoderState(verdict, np.zeros(0, dtype=np.uint8), None, [])
    c_fixed = build_codebook("fixed", K - kappa, params.delta_tilde, dmc, params.seed,
                             memory_cap=params.memory_cap)
    n_types = count_types(dmc.input_size, params.C_n)
    f2 = int(act[1])
    rank = _decode_payloads(c_fixed, dmc, frames[[f2], kappa:], [f2 * K], genie, rng,
                            candidates=n_types)[0]
    chi = type_unrank(rank, dmc.input_size, params.C_n)
    c_type = build_codebook(chi, K - kappa, params.delta_tilde, dmc, params.seed,
                            memory_cap=params.memory_cap)
    rest = act[2:]
    idx = _decode_payloads(c_type, dmc, frames[rest, kappa:], [int(f) * K for f in rest], genie, rng)
    return DecoderState(verdict, _assemble(idx, c_type.fragment_bits), chi, idx)
