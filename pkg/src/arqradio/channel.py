"""Channel law, primary ARQ process and interference profiles.

The cognitive radio picks an input ``x`` from ``{0, ..., |X|-1}``; input 0 is
the silent symbol.  Given ``x`` the secondary's output ``Y`` is drawn from row
``x`` of a row-stochastic matrix and, independently, the primary's ARQ bit
``A`` is 1 with probability ``1 - eps[x, i]``.
"""

from __future__ import annotations

import json
import math
from abc import ABC, abstractmethod
from dataclasses import dataclass
from fractions import Fraction
from functools import cached_property
from pathlib import Path

import numpy as np

from .errors import ConfigurationError

SCHEMA_VERSION = "arqradio.scenario/1"

X_OFF = 0

_ROW_TOL = 1e-12


def as_fraction(value) -> Fraction:
    """Exact rational for a rate given as float, int, str or Fraction.

    Floats are read through their shortest decimal representation so that
    ``0.1`` becomes ``1/10`` rather than its binary expansion.
    """
    if isinstance(value, Fraction):
        return value
    if isinstance(value, float):
        if not math.isfinite(value):
            raise ConfigurationError(f"non-finite rate {value!r}")
        return Fraction(repr(value))
    return Fraction(value)


@dataclass(frozen=True, eq=False)
class Dmc:
    """Discrete memoryless channel ``p(y|x)``.

    Parameters
    ----------
    transition : array_like, shape (|X|, |Y|)
        Row ``x`` is the output law for input ``x``.  Input 0 is ``x_off``.

    Raises
    ------
    ConfigurationError
        If a row is not a probability vector, or every input has the same
        output law as the silent symbol.
    """

    transition: np.ndarray

    def __post_init__(self):
        w = np.array(self.transition, dtype=float)
        if w.ndim != 2 or w.shape[0] < 2 or w.shape[1] < 1:
            raise ConfigurationError("transition must be a matrix with at least two rows")
        if not np.all(np.isfinite(w)) or np.any(w < 0) or np.any(w > 1):
            raise ConfigurationError("transition entries must lie in [0, 1]")
        bad = np.flatnonzero(np.abs(w.sum(axis=1) - 1.0) > _ROW_TOL)
        if bad.size:
            raise ConfigurationError(f"transition rows {bad.tolist()} do not sum to 1")
        w.setflags(write=False)
        object.__setattr__(self, "transition", w)
        if self.x_rep is None:
            raise ConfigurationError("every input has the same output law as x_off")

    @property
    def input_size(self) -> int:
        return self.transition.shape[0]

    @property
    def output_size(self) -> int:
        return self.transition.shape[1]

    @cached_property
    def x_rep(self) -> int | None:
        """Smallest non-silent input whose output law differs from ``x_off``'s."""
        w = self.transition
        for x in range(1, w.shape[0]):
            if np.any(w[x] != w[X_OFF]):
                return x
        return None

    @cached_property
    def cdf(self) -> np.ndarray:
        c = np.cumsum(self.transition, axis=1)
        c[:, -1] = 1.0
        c.setflags(write=False)
        return c

    @cached_property
    def is_noiseless(self) -> bool:
        """True when every row is a point mass on a distinct output."""
        w = self.transition
        if not np.all((w == 0) | (w == 1)):
            return False
        return len(set(np.argmax(w, axis=1).tolist())) == w.shape[0]

    def sample_outputs(self, x: np.ndarray, u: np.ndarray) -> np.ndarray:
        """Map uniforms ``u`` to outputs of inputs ``x`` by inverse CDF."""
        c = self.cdf[x]
        y = (u[..., None] >= c).sum(axis=-1)
        return np.minimum(y, self.output_size - 1)

    def __eq__(self, other):
        return isinstance(other, Dmc) and np.array_equal(self.transition, other.transition)

    def __hash__(self):
        return hash(self.transition.tobytes())


def noiseless_channel(size: int) -> Dmc:
    """Identity channel on ``size`` inputs."""
    return Dmc(np.eye(size))


def example1_channel(P: int) -> Dmc:
    """Noiseless channel with the silent symbol and ``P`` transmit symbols."""
    if P < 1:
        raise ConfigurationError("P must be at least 1")
    return noiseless_channel(P + 1)


def example2_channel(P: int) -> Dmc:
    """``P`` clean inputs plus a silent symbol that scrambles uniformly."""
    if P < 2:
        raise ConfigurationError("P must be at least 2")
    w = np.zeros((P + 1, P))
    w[0] = 1.0 / P
    w[1:] = np.eye(P)
    return Dmc(w)


def example3_channel(P: int) -> Dmc:
    """Example-2 channel extended with ``P/2`` half-scrambling inputs.

    Input ``P + j`` (``j = 1..P/2``) lands on outputs ``2j-2`` and ``2j-1``
    with probability one half each.
    """
    if P < 2 or P % 2:
        raise ConfigurationError("P must be an even integer >= 2")
    w = np.zeros((1 + 3 * P // 2, P))
    w[0] = 1.0 / P
    w[1 : P + 1] = np.eye(P)
    for j in range(1, P // 2 + 1):
        w[P + j, 2 * j - 2] = 0.5
        w[P + j, 2 * j - 1] = 0.5
    return Dmc(w)


def binary_symmetric_channel(p: float) -> Dmc:
    return Dmc(np.array([[1 - p, p], [p, 1 - p]]))


# ---------------------------------------------------------------------------
# interference profiles


class InterferenceProfile(ABC):
    """Erasure probabilities ``eps[x, i]`` with ``eps[0, i] = eps_off``.

    Times are 1-based.  Subclasses provide a vectorized lookup that accepts
    an array of inputs laid out along the last axis in consecutive time.
    """

    eps_off: float
    n_inputs: int

    @abstractmethod
    def eps_block(self, x: np.ndarray, start: int) -> np.ndarray:
        """Erasure probabilities for inputs ``x[..., j]`` at time ``start + j``."""

    @abstractmethod
    def schedule_dict(self) -> dict:
        """JSON-ready description of the non-silent schedule."""

    @abstractmethod
    def _on_values(self) -> np.ndarray:
        """Every erasure probability a non-silent input can see."""

    @property
    def is_constant(self) -> bool:
        return False

    def eps(self, x: int, i: int) -> float:
        return float(self.eps_block(np.array([x]), i)[0])

    def violations(self) -> list[str]:
        out = []
        if not 0.0 <= self.eps_off <= 1.0:
            out.append("eps-range: eps_off outside [0, 1]")
        on = self._on_values()
        if np.any((on < 0) | (on > 1)) or not np.all(np.isfinite(on)):
            out.append("eps-range: an erasure probability lies outside [0, 1]")
        if np.any(on <= self.eps_off):
            out.append("eps-above-silent: some eps[x, i] <= eps_off")
        return out


def _check_on_vector(values, n_inputs: int, where: str) -> np.ndarray:
    v = np.asarray(values, dtype=float)
    if v.shape != (n_inputs - 1,):
        raise ConfigurationError(f"{where}: expected {n_inputs - 1} values, got shape {v.shape}")
    return v


@dataclass(frozen=True, eq=False)
class ConstantProfile(InterferenceProfile):
    """Time-invariant erasure vector ``(eps_off, eps_1, ..., eps_{|X|-1})``."""

    eps_off: float
    eps_on: tuple

    def __post_init__(self):
        object.__setattr__(self, "eps_on", tuple(float(e) for e in self.eps_on))
        object.__setattr__(self, "eps_off", float(self.eps_off))

    @property
    def n_inputs(self) -> int:
        return len(self.eps_on) + 1

    @cached_property
    def table(self) -> np.ndarray:
        t = np.array((self.eps_off,) + self.eps_on)
        t.setflags(write=False)
        return t

    @property
    def is_constant(self) -> bool:
        return True

    def eps_block(self, x, start):
        return self.table[x]

    def _on_values(self):
        return np.array(self.eps_on)

    def schedule_dict(self):
        return {"kind": "constant", "eps": list(self.eps_on)}


@dataclass(frozen=True, eq=False)
class PiecewiseProfile(InterferenceProfile):
    """Erasure vectors switching at given start times.

    ``segments`` is a sequence of ``(start, eps_on)`` pairs with strictly
    increasing starts, the first equal to 1; each vector applies until the
    next start.
    """

    eps_off: float
    segments: tuple

    def __post_init__(self):
        segs = tuple((int(s), tuple(float(e) for e in v)) for s, v in self.segments)
        if not segs or segs[0][0] != 1:
            raise ConfigurationError("schedule.segments: first segment must start at time 1")
        starts = [s for s, _ in segs]
        if any(b <= a for a, b in zip(starts, starts[1:])):
            raise ConfigurationError("schedule.segments: starts must be strictly increasing")
        if len({len(v) for _, v in segs}) != 1:
            raise ConfigurationError("schedule.segments: vectors differ in length")
        object.__setattr__(self, "segments", segs)
        object.__setattr__(self, "eps_off", float(self.eps_off))

    @property
    def n_inputs(self) -> int:
        return len(self.segments[0][1]) + 1

    @cached_property
    def _starts(self) -> np.ndarray:
        return np.array([s for s, _ in self.segments])

    @cached_property
    def _tables(self) -> np.ndarray:
        return np.array([(self.eps_off,) + v for _, v in self.segments])

    def eps_block(self, x, start):
        x = np.asarray(x)
        t = start + np.arange(x.shape[-1])
        seg = np.searchsorted(self._starts, t, side="right") - 1
        return self._tables[seg, x]

    def _on_values(self):
        return self._tables[:, 1:].ravel()

    def schedule_dict(self):
        return {
            "kind": "piecewise",
            "segments": [{"start": s, "eps": list(v)} for s, v in self.segments],
        }


@dataclass(frozen=True, eq=False)
class AdversarialProfile(InterferenceProfile):
    """Named adversarial schedule.

    ``"fig7"``: every non-silent input sees ``high`` up to and including time
    ``switch`` and ``low`` afterwards.  An adaptive encoder that estimates
    early is thereby lured into a conservative codebook.
    """

    eps_off: float
    n_inputs: int
    switch: int
    high: float = 0.99
    low: float = 0.3
    name: str = "fig7"

    def __post_init__(self):
        if self.name != "fig7":
            raise ConfigurationError(f"schedule.name: unknown adversarial profile {self.name!r}")
        if self.n_inputs < 2 or self.switch < 0:
            raise ConfigurationError("schedule: n_inputs >= 2 and switch >= 0 required")

    def eps_block(self, x, start):
        x = np.asarray(x)
        t = start + np.arange(x.shape[-1])
        on = np.where(t <= self.switch, self.high, self.low)
        return np.where(x == X_OFF, self.eps_off, on)

    def _on_values(self):
        return np.array([self.high, self.low])

    def schedule_dict(self):
        return {
            "kind": "adversarial",
            "name": self.name,
            "switch": self.switch,
            "high": self.high,
            "low": self.low,
        }


def fig7_profile(n_inputs: int, eps_off: float, n: int, high: float = 0.99,
                 low: float | None = None) -> AdversarialProfile:
    """Adversarial schedule switching at ``floor(sqrt(n))``."""
    if low is None:
        low = min(1.0, eps_off + 0.2)
    return AdversarialProfile(eps_off=eps_off, n_inputs=n_inputs, switch=math.isqrt(n),
                              high=high, low=low)


# ---------------------------------------------------------------------------
# primary state


@dataclass(frozen=True)
class PrimaryState:
    """Primary ARQ counters with the exact surplus ``S = delivered - R_p * sent``."""

    packets_delivered: int = 0
    transmissions: int = 0
    S: Fraction = Fraction(0)


def step_primary(state: PrimaryState, a: int, R_p) -> PrimaryState:
    """Advance the primary by one transmission with ARQ outcome ``a``."""
    a = int(a)
    if a not in (0, 1):
        raise ConfigurationError("ARQ outcome must be 0 or 1")
    return PrimaryState(
        packets_delivered=state.packets_delivered + a,
        transmissions=state.transmissions + 1,
        S=state.S + a - as_fraction(R_p),
    )


# ---------------------------------------------------------------------------
# scenario


@dataclass(frozen=True, eq=False)
class Scenario:
    """A channel, an interference profile and the primary's rate target."""

    dmc: Dmc
    profile: InterferenceProfile
    R_p: float
    nu: float
    name: str = ""

    @property
    def eps_off(self) -> float:
        return self.profile.eps_off


def validate_scenario(scenario: Scenario) -> list[str]:
    """Return a list of violated invariants; empty when the scenario is sound.

    Each entry starts with a short tag: ``profile-size``, ``eps-range``,
    ``eps-above-silent``, ``rate-range`` or ``rate-slack``.
    """
    out = []
    if scenario.profile.n_inputs != scenario.dmc.input_size:
        out.append(
            f"profile-size: profile covers {scenario.profile.n_inputs} inputs, "
            f"channel has {scenario.dmc.input_size}"
        )
    out.extend(scenario.profile.violations())
    R_p, nu = float(scenario.R_p), float(scenario.nu)
    if not 0.0 <= R_p < 1.0:
        out.append("rate-range: R_p must lie in [0, 1)")
    if not nu > 0 or not R_p < 1.0 - scenario.eps_off - nu:
        out.append(f"rate-slack: need nu > 0 and R_p < 1 - eps_off - nu (R_p={R_p}, nu={nu})")
    return out


def require_valid(scenario: Scenario) -> None:
    problems = validate_scenario(scenario)
    if problems:
        raise ConfigurationError("; ".join(problems))


def sample_step(scenario: Scenario, x: int, i: int, rng: np.random.Generator) -> tuple[int, int]:
    """Draw ``(y, a)`` for input ``x`` at time ``i``.

    ``y`` and ``a`` come from two separate uniforms, so they are independent
    given ``x``.
    """
    if not 0 <= x < scenario.dmc.input_size:
        raise ConfigurationError(f"input {x} out of range")
    if i < 1:
        raise ConfigurationError("time index starts at 1")
    if scenario.profile.n_inputs != scenario.dmc.input_size:
        raise ConfigurationError("profile does not match channel input count")
    u_y, u_a = rng.random(2)
    y = int(scenario.dmc.sample_outputs(np.array([x]), np.array([u_y]))[0])
    eps = scenario.profile.eps(x, i)
    return y, int(u_a < 1.0 - eps)


def sample_block(scenario: Scenario, x: np.ndarray, start: int,
                 rng_y: np.random.Generator, rng_a: np.random.Generator):
    """Vectorized :func:`sample_step` over consecutive times along the last axis."""
    x = np.asarray(x)
    y = scenario.dmc.sample_outputs(x, rng_y.random(x.shape))
    a = rng_a.random(x.shape) < 1.0 - scenario.profile.eps_block(x, start)
    return y, a


# ---------------------------------------------------------------------------
# JSON


def scenario_to_dict(scenario: Scenario) -> dict:
    return {
        "schema": SCHEMA_VERSION,
        "name": scenario.name,
        "transition": scenario.dmc.transition.tolist(),
        "eps_off": scenario.eps_off,
        "schedule": scenario.profile.schedule_dict(),
        "R_p": float(scenario.R_p),
        "nu": float(scenario.nu),
    }


def _field(d: dict, key: str, where: str = ""):
    if not isinstance(d, dict) or key not in d:
        raise ConfigurationError(f"missing field '{where}{key}'")
    return d[key]


def profile_from_dict(schedule: dict, eps_off: float, n_inputs: int) -> InterferenceProfile:
    kind = _field(schedule, "kind", "schedule.")
    try:
        if kind == "constant":
            eps = _check_on_vector(_field(schedule, "eps", "schedule."), n_inputs, "schedule.eps")
            return ConstantProfile(eps_off, tuple(eps))
        if kind == "piecewise":
            segs = []
            for k, seg in enumerate(_field(schedule, "segments", "schedule.")):
                where = f"schedule.segments[{k}]."
                v = _check_on_vector(_field(seg, "eps", where), n_inputs, where + "eps")
                segs.append((int(_field(seg, "start", where)), tuple(v)))
            return PiecewiseProfile(eps_off, tuple(segs))
        if kind == "adversarial":
            return AdversarialProfile(
                eps_off=eps_off,
                n_inputs=n_inputs,
                switch=int(_field(schedule, "switch", "schedule.")),
                high=float(schedule.get("high", 0.99)),
                low=float(_field(schedule, "low", "schedule.")),
                name=str(schedule.get("name", "fig7")),
            )
    except (TypeError, ValueError) as exc:
        if isinstance(exc, ConfigurationError):
            raise
        raise ConfigurationError(f"schedule: {exc}") from exc
    raise ConfigurationError(f"schedule.kind: unknown kind {kind!r}")


def scenario_from_dict(d: dict) -> Scenario:
    """Build a :class:`Scenario` from its JSON form.

    Raises
    ------
    ConfigurationError
        Naming the offending field when the document is malformed.
    """
    if not isinstance(d, dict):
        raise ConfigurationError("scenario document must be a JSON object")
    schema = d.get("schema", SCHEMA_VERSION)
    if schema != SCHEMA_VERSION:
        raise ConfigurationError(f"schema: unsupported version {schema!r}")
    try:
        dmc = Dmc(np.asarray(_field(d, "transition"), dtype=float))
    except (TypeError, ValueError) as exc:
        raise ConfigurationError(f"transition: {exc}") from exc
    try:
        eps_off = float(_field(d, "eps_off"))
        R_p = float(_field(d, "R_p"))
        nu = float(_field(d, "nu"))
    except (TypeError, ValueError) as exc:
        raise ConfigurationError(f"numeric field malformed: {exc}") from exc
    profile = profile_from_dict(_field(d, "schedule"), eps_off, dmc.input_size)
    return Scenario(dmc, profile, R_p, nu, name=str(d.get("name", "")))


def load_scenario(path: str | Path) -> Scenario:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigurationError(f"cannot read scenario file {path}: {exc}") from exc
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigurationError(f"scenario file {path} is not valid JSON: {exc}") from exc
    return scenario_from_dict(doc)


def save_scenario(scenario: Scenario, path: str | Path) -> None:
    Path(path).write_text(json.dumps(scenario_to_dict(scenario), indent=2) + "\n")


# ---------------------------------------------------------------------------
# built-ins


def _parse_kv(text: str) -> dict[str, str]:
    out = {}
    for part in filter(None, text.split(",")):
        if "=" not in part:
            raise ConfigurationError(f"builtin option {part!r} is not key=value")
        k, v = part.split("=", 1)
        out[k.strip()] = v.strip()
    return out


_BUILTIN_KEYS = {
    "example1": {"P", "eps0", "eps1", "rp", "nu", "schedule", "n", "switch", "high", "low"},
    "example2": {"P", "eps0", "eps1", "rp", "nu", "schedule", "n", "switch", "high", "low"},
    "example3": {"P", "eps0", "eps1", "eps_half", "rp", "nu", "schedule", "n", "switch", "high", "low"},
}


def builtin_scenario(text: str) -> Scenario:
    """Parse ``name:key=value,...`` into a scenario.

    Names are ``example1`` (noiseless, keys ``P, eps0, eps1``), ``example2``
    (keys ``P, eps0, eps1``) and ``example3`` (keys ``P, eps0, eps1,
    eps_half``).  Common keys: ``rp`` (default 0.5), ``nu`` (default half
    the remaining slack, at most 0.2) and ``schedule=fig7`` together with
    ``n`` or ``switch``, ``high``, ``low``.
    """
    name, _, rest = text.partition(":")
    name = name.strip()
    if name not in _BUILTIN_KEYS:
        raise ConfigurationError(f"unknown builtin {name!r}; choose from {sorted(_BUILTIN_KEYS)}")
    kv = _parse_kv(rest)
    unknown = set(kv) - _BUILTIN_KEYS[name]
    if unknown:
        raise ConfigurationError(f"builtin {name}: unknown keys {sorted(unknown)}")
    try:
        P = int(kv.get("P", 1 if name == "example1" else 4))
        eps0 = float(kv.get("eps0", 0.0))
        eps1 = float(kv.get("eps1", 1.0))
        R_p = float(kv.get("rp", 0.5))
    except ValueError as exc:
        raise ConfigurationError(f"builtin {name}: {exc}") from exc
    if name == "example1":
        dmc = example1_channel(P)
        eps_on = [eps1] * P
    elif name == "example2":
        dmc = example2_channel(P)
        eps_on = [eps1] * P
    else:
        dmc = example3_channel(P)
        eps_half = float(kv.get("eps_half", 0.25))
        eps_on = [eps1] * P + [eps_half] * (P // 2)
    nu = float(kv["nu"]) if "nu" in kv else min(0.2, max(1.0 - eps0 - R_p, 0.0) / 2)
    schedule = kv.get("schedule", "constant")
    if schedule == "constant":
        profile: InterferenceProfile = ConstantProfile(eps0, tuple(eps_on))
    elif schedule == "fig7":
        if "switch" in kv:
            switch = int(kv["switch"])
        elif "n" in kv:
            switch = math.isqrt(int(kv["n"]))
        else:
            raise ConfigurationError("schedule=fig7 needs n or switch")
        profile = AdversarialProfile(
            eps_off=eps0, n_inputs=dmc.input_size, switch=switch,
            high=float(kv.get("high", 0.99)), low=float(kv.get("low", min(1.0, eps0 + 0.2))),
        )
    else:
        raise ConfigurationError(f"builtin schedule {schedule!r} unknown")
    return Scenario(dmc, profile, R_p, nu, name=text)

