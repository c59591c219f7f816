"""Piecewise model of the characteristic function g(k) = 1/|F(k)|^2 - 1.

A model is an ordered list of contiguous wavenumber segments, each carrying
one analytic form:

* ``flat``             g = -1
* ``gaussian_sum``     g = -1 + sum_j a_j exp(-(k - kt_j)^2 / (2 b_j^2))
* ``exponential_sum``  g = sign * sum_j a_j exp(-b_j (k - kt_j))
* ``asymptotic_tail``  g = sign * (b1/k^2 + b2/k^4 + b3/k^6), unbounded
* ``lorentzian``       g = sum_j a_j / (k^2 + b_j^2) on the whole half-line

``sign`` lets a configuration transcribe tables that list -g verbatim.
Wavenumbers are in 1/A.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np

from .errors import ContinuityError, SchemaError

try:  # Python >= 3.11
    import tomllib as _toml
except ModuleNotFoundError:  # pragma: no cover - depends on interpreter
    import tomli as _toml

FLAT = "flat"
GAUSSIAN_SUM = "gaussian_sum"
EXPONENTIAL_SUM = "exponential_sum"
ASYMPTOTIC_TAIL = "asymptotic_tail"
LORENTZIAN = "lorentzian"

SEGMENT_KINDS = (FLAT, GAUSSIAN_SUM, EXPONENTIAL_SUM, ASYMPTOTIC_TAIL, LORENTZIAN)

# unit tag expected for the b column of each component kind
B_UNITS = {GAUSSIAN_SUM: "1/A", EXPONENTIAL_SUM: "A", LORENTZIAN: "1/A"}
TAIL_UNITS = ("1/A^2", "1/A^4", "1/A^6")


@dataclass(frozen=True)
class Component:
    """One term of a Gaussian, exponential or Lorentzian sum."""

    a: float
    b: float
    k_tilde: float = 0.0


@dataclass(frozen=True)
class TailCoefficients:
    """Large-k expansion coefficients.

    ``ln|F| = a2/k^2 + a4/k^4 + a6/k^6 + ...`` and
    ``g = b1/k^2 + b2/k^4 + b3/k^6 + ...`` with the b-values fixed by the
    a-values (see :meth:`from_a`).
    """

    a2: float
    a4: float
    a6: float
    b1: float
    b2: float
    b3: float

    @classmethod
    def from_a(cls, a2: float, a4: float, a6: float) -> "TailCoefficients":
        b1 = -2.0 * a2
        b2 = -2.0 * (a4 - a2 * a2)
        b3 = -2.0 * (a6 - 2.0 * a2 * a4 + (2.0 / 3.0) * a2 ** 3)
        return cls(a2, a4, a6, b1, b2, b3)

    @classmethod
    def from_b(cls, b1: float, b2: float, b3: float) -> "TailCoefficients":
        a2 = -b1 / 2.0
        a4 = a2 * a2 - b2 / 2.0
        a6 = a6_from_b3(b3, a2, a4)
        return cls(a2, a4, a6, b1, b2, b3)


def a6_from_b3(b3: float, a2: float, a4: float) -> float:
    """Invert the b3 relation: a6 = -b3/2 + 2 a2 a4 - (2/3) a2^3."""
    return -b3 / 2.0 + 2.0 * a2 * a4 - (2.0 / 3.0) * a2 ** 3


def tail_from_potential(V0: float, Vpp0: float, a6: float, C: float) -> TailCoefficients:
    """Tail coefficients from the potential and its curvature at the origin.

    Parameters
    ----------
    V0, Vpp0 : float
        V(0) in meV and V''(0) in meV/A^2.
    a6 : float
        Sixth-order coefficient of ln|F| in 1/A^6 (not fixed by V alone).
    C : float
        hbar^2/2m in meV A^2.
    """
    if not C > 0:
        raise ValueError("C must be positive")
    a2 = V0 / (4.0 * C)
    a4 = (2.0 * V0 * V0 - C * Vpp0) / (16.0 * C * C)
    return TailCoefficients.from_a(a2, a4, a6)


@dataclass(frozen=True)
class GkSegment:
    """One wavenumber interval of the piecewise g(k) model.

    Attributes
    ----------
    k_start, k_end : float
        Interval in 1/A; ``k_end`` is ``inf`` for the tail and Lorentzians.
    kind : str
        One of :data:`SEGMENT_KINDS`.
    components : tuple of Component
        Sum terms for Gaussian, exponential and Lorentzian kinds.
    sign : float
        +1 or -1 multiplier applied to exponential sums and the tail.
    tail_b : tuple of float
        (b1, b2, b3) as written in the configuration, before ``sign``.
    k1 : float or None
        Lower edge of the Gaussian correction window; defaults to k_start.
    """

    k_start: float
    k_end: float
    kind: str
    components: tuple = ()
    sign: float = 1.0
    tail_b: tuple = (0.0, 0.0, 0.0)
    k1: float | None = None

    def __post_init__(self) -> None:
        if self.kind not in SEGMENT_KINDS:
            raise SchemaError(f"unknown segment kind {self.kind!r}")
        if not self.k_start < self.k_end:
            raise SchemaError(f"segment needs k_start < k_end, got {self.k_start}, {self.k_end}")
        if self.sign not in (1.0, -1.0):
            raise SchemaError("sign must be +1 or -1")
        if self.kind in (ASYMPTOTIC_TAIL, LORENTZIAN) and math.isfinite(self.k_end):
            raise SchemaError(f"{self.kind} segment must be unbounded")
        if self.kind == LORENTZIAN and self.k_start != 0.0:
            raise SchemaError("lorentzian segment must cover the whole half-line")
        if self.kind == ASYMPTOTIC_TAIL and not self.k_start > 0:
            raise SchemaError("asymptotic tail needs k_a > 0")
        for c in self.components:
            if self.kind in (GAUSSIAN_SUM, EXPONENTIAL_SUM, LORENTZIAN) and not c.b > 0:
                raise SchemaError(f"component b must be positive, got {c.b}")

    @property
    def window_start(self) -> float:
        return self.k_start if self.k1 is None else self.k1

    @property
    def tail(self) -> TailCoefficients:
        """Tail coefficients in the g convention (``sign`` applied)."""
        b1, b2, b3 = (self.sign * b for b in self.tail_b)
        return TailCoefficients.from_b(b1, b2, b3)

    def evaluate(self, k: np.ndarray) -> np.ndarray:
        k = np.asarray(k, dtype=float)
        if self.kind == FLAT:
            return np.full_like(k, -1.0)
        if self.kind == GAUSSIAN_SUM:
            out = np.full_like(k, -1.0)
            inside = k >= self.window_start
            for c in self.components:
                out += np.where(inside, c.a * np.exp(-0.5 * ((k - c.k_tilde) / c.b) ** 2), 0.0)
            return out
        if self.kind == EXPONENTIAL_SUM:
            out = np.zeros_like(k)
            for c in self.components:
                out += c.a * np.exp(-c.b * (k - c.k_tilde))
            return self.sign * out
        if self.kind == ASYMPTOTIC_TAIL:
            t = self.tail
            with np.errstate(divide="ignore"):
                inv2 = 1.0 / (k * k)
            return ((t.b3 * inv2 + t.b2) * inv2 + t.b1) * inv2
        out = np.zeros_like(k)
        for c in self.components:
            out += c.a / (k * k + c.b * c.b)
        return out


@dataclass(frozen=True)
class GkModel:
    """Ordered, contiguous list of segments; g = 0 beyond the last one."""

    segments: tuple = field(default_factory=tuple)

    def __post_init__(self) -> None:
        object.__setattr__(self, "segments", tuple(self.segments))
        for seg in self.segments[:-1]:
            if seg.kind in (ASYMPTOTIC_TAIL, LORENTZIAN):
                raise SchemaError(f"{seg.kind} segment must be last")
        for left, right in zip(self.segments, self.segments[1:]):
            if left.k_end != right.k_start:
                raise ContinuityError(
                    f"segments not contiguous: k_end={left.k_end} vs next k_start={right.k_start}")

    @property
    def tail_segment(self) -> GkSegment | None:
        if self.segments and self.segments[-1].kind == ASYMPTOTIC_TAIL:
            return self.segments[-1]
        return None

    def with_tail_b3(self, b3: float) -> "GkModel":
        """Copy with the configured (pre-sign) tail b3 replaced."""
        tail = self.tail_segment
        if tail is None:
            raise SchemaError("model has no asymptotic tail")
        b1, b2, _ = tail.tail_b
        return GkModel(self.segments[:-1] + (replace(tail, tail_b=(b1, b2, b3)),))

    def scaled(self, factor: float) -> "GkModel":
        """Model whose g is multiplied by ``factor``; only for Lorentzian sums."""
        segs = []
        for seg in self.segments:
            if seg.kind != LORENTZIAN:
                raise SchemaError("scaling is only supported for lorentzian models")
            comps = tuple(replace(c, a=factor * c.a) for c in seg.components)
            segs.append(replace(seg, components=comps))
        return GkModel(tuple(segs))


def eval_gk(model: GkModel, k):
    """Evaluate g(k) for scalar or array k >= 0."""
    k_arr = np.asarray(k, dtype=float)
    if np.any(k_arr < 0):
        raise ValueError("k must be non-negative")
    out = np.zeros_like(k_arr)
    for i, seg in enumerate(model.segments):
        last = i == len(model.segments) - 1
        mask = (k_arr >= seg.k_start) & ((k_arr < seg.k_end) | (last & (k_arr == seg.k_end)))
        if np.any(mask):
            out[mask] = seg.evaluate(k_arr[mask])
    if np.ndim(k) == 0:
        return float(out)
    return out


@dataclass(frozen=True)
class BoundaryMismatch:
    k: float
    left: float
    right: float

    @property
    def jump(self) -> float:
        return abs(self.left - self.right)


def validate_continuity(model: GkModel, tol: float = 1e-3) -> list[BoundaryMismatch]:
    """List internal boundaries where |g(k-) - g(k+)| exceeds ``tol``."""
    out = []
    for left, right in zip(model.segments, model.segments[1:]):
        k = left.k_end
        gl = float(left.evaluate(np.array([k]))[0])
        gr = float(right.evaluate(np.array([k]))[0])
        if abs(gl - gr) > tol:
            out.append(BoundaryMismatch(k, gl, gr))
    return out


# ---------------------------------------------------------------------------
# configuration documents
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ModelConfig:
    """Parsed configuration: g(k) model, constants and reference potential."""

    model: GkModel
    constants: dict
    refpot: dict | None
    source: str = ""

    @property
    def C(self) -> float:
        return float(self.constants["C_meV_A2"])


def _require(table: dict, key: str, where: str):
    if key not in table:
        raise SchemaError(f"missing field {key!r} in {where}")
    return table[key]


def _number(table: dict, key: str, where: str) -> float:
    val = _require(table, key, where)
    if isinstance(val, bool) or not isinstance(val, (int, float)):
        raise SchemaError(f"field {key!r} in {where} must be a number")
    return float(val)


def _parse_segment(raw: dict, idx: int) -> GkSegment:
    where = f"segments[{idx}]"
    kind = _require(raw, "kind", where)
    if kind not in SEGMENT_KINDS or kind == ASYMPTOTIC_TAIL:
        raise SchemaError(f"{where}: unsupported kind {kind!r}")
    k_start = _number(raw, "k_start", where)
    k_end = float(raw.get("k_end", math.inf)) if kind == LORENTZIAN else _number(raw, "k_end", where)
    sign = float(raw.get("sign", 1.0))
    comps = ()
    if kind != FLAT:
        unit = _require(raw, "b_unit", where)
        if unit != B_UNITS[kind]:
            raise SchemaError(f"{where}: b_unit {unit!r}, expected {B_UNITS[kind]!r}")
        rows = _require(raw, "components", where)
        if not rows:
            raise SchemaError(f"{where}: empty component list")
        comps = tuple(
            Component(_number(c, "a", f"{where}.components[{j}]"),
                      _number(c, "b", f"{where}.components[{j}]"),
                      float(c.get("k_tilde", 0.0)))
            for j, c in enumerate(rows))
    k1 = float(raw["k1"]) if "k1" in raw else None
    return GkSegment(k_start, k_end, kind, comps, sign=sign, k1=k1)


def _parse_tail(raw: dict) -> GkSegment:
    units = tuple(_require(raw, "b_units", "tail"))
    if units != TAIL_UNITS:
        raise SchemaError(f"tail b_units {units}, expected {TAIL_UNITS}")
    b = tuple(_number(raw, key, "tail") for key in ("b1", "b2", "b3"))
    k_a = _number(raw, "k_a", "tail")
    return GkSegment(k_a, math.inf, ASYMPTOTIC_TAIL, sign=float(raw.get("sign", 1.0)), tail_b=b)


def parse_config(text: str, continuity_tol: float = 1e-3) -> ModelConfig:
    """Parse a TOML configuration document.

    Raises
    ------
    SchemaError
        Missing fields, unknown kinds or wrong unit tags.
    ContinuityError
        Gaps between segments or jumps of g above ``continuity_tol``.
    """
    try:
        doc = _toml.loads(text)
    except _toml.TOMLDecodeError as exc:
        raise SchemaError(f"malformed configuration: {exc}") from exc
    constants = dict(_require(doc, "constants", "document"))
    if _number(constants, "C_meV_A2", "constants") <= 0:
        raise SchemaError("C_meV_A2 must be positive")
    raw_segments = doc.get("segments", [])
    if not raw_segments:
        raise SchemaError("configuration has no segments")
    segments = [_parse_segment(raw, i) for i, raw in enumerate(raw_segments)]
    if "tail" in doc:
        segments.append(_parse_tail(doc["tail"]))
    model = GkModel(tuple(segments))
    bad = validate_continuity(model, continuity_tol)
    if bad:
        desc = ", ".join(f"k={m.k}: {m.left:.6g} vs {m.right:.6g}" for m in bad)
        raise ContinuityError(f"g(k) jumps at {desc}")
    refpot = doc.get("refpot")
    if refpot is not None:
        for key in ("V0", "D0", "alpha0", "r0"):
            _number(refpot, key, "refpot")
    return ModelConfig(model, constants, refpot, text)


def parse_gk_config(text: str, continuity_tol: float = 1e-3) -> GkModel:
    """Parse a configuration document and return its validated g(k) model."""
    return parse_config(text, continuity_tol).model


def load_config(path, continuity_tol: float = 1e-3) -> ModelConfig:
    with open(path, encoding="utf-8") as fh:
        return parse_config(fh.read(), continuity_tol)


def zero_model() -> GkModel:
    """Model with g identically zero (free particle)."""
    return GkModel(())


def lorentzian_model(amplitudes: Sequence[float], widths: Sequence[float]) -> GkModel:
    """g(k) = sum_j A_j / (k^2 + w_j^2) on [0, inf)."""
    comps = tuple(Component(float(a), float(w)) for a, w in zip(amplitudes, widths))
    return GkModel((GkSegment(0.0, math.inf, LORENTZIAN, comps),))
