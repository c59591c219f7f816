"""Krein H-function H(r) = (1/pi) int_0^inf g(k) cos(kr) dk.

The production path sums closed-form cosine transforms of every g(k)
segment.  :func:`h_quadrature` is an independent numerical oracle built on
QUADPACK and on scipy's sine/cosine integrals.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy import integrate, special

from . import gk_model as gk
from .errors import DivergentTail, ToleranceNotMet
from .specfun import SI_CONTROL, SeriesControl, erf_shifted_scaled, sine_integral

_SQRT2 = math.sqrt(2.0)
_SQRT_2PI = math.sqrt(2.0 * math.pi)

# x_a = k_a r above which the large-argument tail formula is used
ASYMPTOTIC_SWITCH = 40.0


def _scalar_or_array(func, r):
    """Apply a scalar function elementwise over ``r``, preserving shape."""
    if np.ndim(r) == 0:
        return func(abs(float(r)))
    arr = np.abs(np.asarray(r, dtype=float))
    return np.array([func(x) for x in arr.ravel()]).reshape(arr.shape)


def h_flat(k_cut: float, r):
    """Transform of g = -1 on [0, k_cut]: -sin(k_cut r) / (pi r)."""
    r = np.abs(np.asarray(r, dtype=float))
    with np.errstate(invalid="ignore", divide="ignore"):
        out = np.where(r > 0, -np.sin(k_cut * r) / (math.pi * r), -k_cut / math.pi)
    return float(out) if out.ndim == 0 else out


def h_gaussian(comp: gk.Component, k1: float, k2: float, r):
    """Transform of a exp(-(k - kt)^2 / 2b^2) over [k1, k2].

    Uses the complex error function at y = x - i b r / sqrt(2),
    x = (k - kt) / (sqrt(2) b), with the Gaussian damping exp(-b^2 r^2 / 2)
    folded into the error-function evaluation so large r cannot overflow.
    """
    if not comp.b > 0 or not k1 < k2:
        raise ValueError("h_gaussian needs b > 0 and k1 < k2")
    if comp.a == 0:
        return 0.0 if np.ndim(r) == 0 else np.zeros(np.shape(r))
    scale = comp.a * comp.b / _SQRT_2PI
    x1 = (k1 - comp.k_tilde) / (_SQRT2 * comp.b)
    x2 = (k2 - comp.k_tilde) / (_SQRT2 * comp.b)

    def one(rr: float) -> float:
        beta = comp.b * rr / _SQRT2
        diff = erf_shifted_scaled(x2, beta) - erf_shifted_scaled(x1, beta)
        ph = comp.k_tilde * rr
        return scale * (math.cos(ph) * diff.real - math.sin(ph) * diff.imag)

    return _scalar_or_array(one, r)


def h_exponential(comp: gk.Component, k_lo: float, k_hi: float, r):
    """Transform of a exp(-b (k - kt)) over [k_lo, k_hi]."""
    if not comp.b > 0 or not k_lo < k_hi:
        raise ValueError("h_exponential needs b > 0 and k_lo < k_hi")
    r = np.abs(np.asarray(r, dtype=float))
    b = comp.b
    e_lo = math.exp(-b * (k_lo - comp.k_tilde))
    e_hi = math.exp(-b * (k_hi - comp.k_tilde))
    edge_hi = e_hi * (r * np.sin(k_hi * r) - b * np.cos(k_hi * r))
    edge_lo = e_lo * (r * np.sin(k_lo * r) - b * np.cos(k_lo * r))
    out = comp.a * (edge_hi - edge_lo) / (math.pi * (b * b + r * r))
    return float(out) if out.ndim == 0 else out


def h_lorentzian(comp: gk.Component, r):
    """Transform of A / (k^2 + w^2) over [0, inf): A exp(-w r) / (2 w)."""
    r = np.abs(np.asarray(r, dtype=float))
    out = comp.a * np.exp(-comp.b * r) / (2.0 * comp.b)
    return float(out) if out.ndim == 0 else out


def _optimal_sum(first: float, ratio, max_terms: int) -> float:
    """Sum an asymptotic series given its first term and term ratios.

    Stops before the first term that grows, or once terms drop below
    double precision relative to the partial sum.
    """
    term = first
    total = first
    for j in range(1, max_terms):
        nxt = term * ratio(j)
        if abs(nxt) > abs(term):
            if j == 1:
                raise DivergentTail("tail series grows from its first correction")
            break
        term = nxt
        total += term
        if abs(term) <= 1e-17 * abs(total):
            break
    return total


def _tail_large(tail: gk.TailCoefficients, k_a: float, r: float, max_terms: int) -> float:
    x = k_a * r
    inv2 = 1.0 / (x * x)
    # A_i = sum_j (-1)^(i+j) (2(i+j)-1)! / x^(2j),  B_i = sum_j (-1)^(i+j) (2(i+j))! / x^(2j)
    A = [_optimal_sum((-1) ** i * math.factorial(2 * i - 1),
                      lambda j, i=i: -(2 * (i + j) - 1) * (2 * (i + j) - 2) * inv2, max_terms)
         for i in (1, 2, 3)]
    B = [_optimal_sum((-1) ** i * math.factorial(2 * i),
                      lambda j, i=i: -(2 * (i + j)) * (2 * (i + j) - 1) * inv2, max_terms)
         for i in (1, 2, 3)]
    p1 = tail.b1 / k_a
    p2 = tail.b2 / (6.0 * k_a ** 3)
    p3 = tail.b3 / (120.0 * k_a ** 5)
    sin_part = p1 * A[0] - p2 * A[1] + p3 * A[2]
    cos_part = p1 * B[0] - p2 * B[1] + p3 * B[2]
    return (sin_part * math.sin(x) / x - cos_part * math.cos(x) * inv2) / math.pi


def _tail_small(tail: gk.TailCoefficients, k_a: float, r: float, ctrl: SeriesControl) -> float:
    x = k_a * r
    x2 = x * x

    def poly(i: int, shift: int) -> float:
        return sum((-1) ** (i - j) * math.factorial(2 * (i - j) + shift) * x2 ** j
                   for j in range(i + 1))

    si_part = (tail.b1 * r - tail.b2 * r ** 3 / 6.0 + tail.b3 * r ** 5 / 120.0) \
        * (sine_integral(x, ctrl) - math.pi / 2)
    cos_part = (tail.b1 * poly(0, 0) / k_a
                - tail.b2 * poly(1, 0) / (6.0 * k_a ** 3)
                + tail.b3 * poly(2, 0) / (120.0 * k_a ** 5)) * math.cos(x)
    sin_part = -r * (tail.b2 * poly(0, 1) / (6.0 * k_a ** 2)
                     - tail.b3 * poly(1, 1) / (120.0 * k_a ** 4)) * math.sin(x)
    return (si_part + cos_part + sin_part) / math.pi


def h_asymptotic(tail: gk.TailCoefficients, k_a: float, r, *, switch: float = ASYMPTOTIC_SWITCH,
                 branch: str | None = None, ctrl: SeriesControl | None = None, max_terms: int = 200):
    """Transform of the large-k tail b1/k^2 + b2/k^4 + b3/k^6 over [k_a, inf).

    Parameters
    ----------
    tail : TailCoefficients
        Coefficients in the g convention.
    k_a : float
        Start of the tail (1/A).
    r : float or array
        Distance(s) in A.
    switch : float
        Value of k_a r above which the large-argument form is used.
    branch : {"small", "large"}, optional
        Force one representation (for cross-checks).
    """
    if not k_a > 0:
        raise ValueError("k_a must be positive")
    ctrl = ctrl or SI_CONTROL

    def one(rr: float) -> float:
        use_large = (k_a * rr >= switch) if branch is None else branch == "large"
        if use_large:
            return _tail_large(tail, k_a, rr, max_terms)
        return _tail_small(tail, k_a, rr, ctrl)

    return _scalar_or_array(one, r)


def segment_h(seg: gk.GkSegment, r):
    """Contribution of one segment to H(r)."""
    if seg.kind in (gk.FLAT, gk.GAUSSIAN_SUM):
        out = h_flat(seg.k_end, r) - (h_flat(seg.k_start, r) if seg.k_start > 0 else 0.0)
        if seg.kind == gk.GAUSSIAN_SUM:
            for c in seg.components:
                out = out + h_gaussian(c, seg.window_start, seg.k_end, r)
        return out
    if seg.kind == gk.EXPONENTIAL_SUM:
        out = 0.0
        for c in seg.components:
            out = out + h_exponential(c, seg.k_start, seg.k_end, r)
        return seg.sign * out
    if seg.kind == gk.ASYMPTOTIC_TAIL:
        return h_asymptotic(seg.tail, seg.k_start, r)
    out = 0.0
    for c in seg.components:
        out = out + h_lorentzian(c, r)
    return out


def h_total(model: gk.GkModel, r):
    """H(r) as the sum of closed-form segment contributions."""
    out = 0.0 if np.ndim(r) == 0 else np.zeros(np.shape(r))
    for seg in model.segments:
        out = out + segment_h(seg, r)
    return out


def h_zero_terms(model: gk.GkModel) -> list[float]:
    """Per-segment values of (1/pi) int g dk from elementary antiderivatives.

    Used to cross-check h_total(0); shares no code with the transforms.
    """
    out = []
    for seg in model.segments:
        ks, ke = seg.k_start, seg.k_end
        if seg.kind in (gk.FLAT, gk.GAUSSIAN_SUM):
            val = -(ke - ks)
            if seg.kind == gk.GAUSSIAN_SUM:
                for c in seg.components:
                    s = _SQRT2 * c.b
                    val += c.a * c.b * math.sqrt(math.pi / 2) * (
                        math.erf((ke - c.k_tilde) / s) - math.erf((seg.window_start - c.k_tilde) / s))
        elif seg.kind == gk.EXPONENTIAL_SUM:
            val = seg.sign * sum(c.a / c.b * (math.exp(-c.b * (ks - c.k_tilde)) - math.exp(-c.b * (ke - c.k_tilde)))
                                 for c in seg.components)
        elif seg.kind == gk.ASYMPTOTIC_TAIL:
            t = seg.tail
            val = t.b1 / ks + t.b2 / (3 * ks ** 3) + t.b3 / (5 * ks ** 5)
        else:
            val = sum(c.a * math.pi / (2 * c.b) for c in seg.components)
        out.append(val / math.pi)
    return out


# ---------------------------------------------------------------------------
# quadrature oracle
# ---------------------------------------------------------------------------


def _tail_cos_moments(x: float, n_max: int) -> list[float]:
    """C_n(x) = int_x^inf cos(t) / t^n dt for n = 1..n_max (from scipy sici)."""
    si, ci = special.sici(x)
    c = [0.0, -ci]
    s = [0.0, math.pi / 2 - si]
    for n in range(2, n_max + 1):
        c.append(math.cos(x) / ((n - 1) * x ** (n - 1)) - s[n - 1] / (n - 1))
        s.append(math.sin(x) / ((n - 1) * x ** (n - 1)) + c[n - 1] / (n - 1))
    return c


def _tail_oracle(tail: gk.TailCoefficients, k_a: float, r: float) -> float:
    bs = (tail.b1, tail.b2, tail.b3)
    if r == 0:
        return sum(b / ((2 * n - 1) * k_a ** (2 * n - 1)) for n, b in enumerate(bs, 1)) / math.pi
    x = k_a * r
    if x <= 5.0:
        c = _tail_cos_moments(x, 6)
        return sum(b * r ** (2 * n - 1) * c[2 * n] for n, b in enumerate(bs, 1)) / math.pi
    # the upward recursion loses accuracy once x exceeds the moment order
    val, _ = integrate.quad(lambda k: ((bs[2] / (k * k) + bs[1]) / (k * k) + bs[0]) / (k * k),
                            k_a, math.inf, weight="cos", wvar=r, limlst=200)
    return val / math.pi


def _panels(seg: gk.GkSegment, k_hi: float) -> list[float]:
    """Breakpoints that isolate Gaussian peaks and exponential decay scales."""
    pts = {seg.k_start, k_hi}
    if seg.kind == gk.GAUSSIAN_SUM:
        pts.add(seg.window_start)
        for c in seg.components:
            for m in range(-12, 13, 2):
                pts.add(c.k_tilde + m * c.b)
    elif seg.kind == gk.EXPONENTIAL_SUM:
        for c in seg.components:
            for m in (1, 3, 10, 30):
                pts.add(seg.k_start + m / c.b)
    return sorted(p for p in pts if seg.k_start <= p <= k_hi)


def _quad_segments(model: gk.GkModel, r: float, k_max: float) -> tuple[float, float, float]:
    """Integrate g(k) cos(kr) over [0, k_max]; returns (sum, error, scale)."""
    total = err = scale = 0.0
    for seg in model.segments:
        lo = seg.k_start
        if lo >= k_max:
            break
        hi = min(seg.k_end, k_max)

        def f(k, seg=seg):
            return float(seg.evaluate(np.array([k]))[0])

        if math.isinf(hi):
            width = max((c.b for c in seg.components), default=1.0)
            pts = [lo] + [lo + m * width for m in (1, 4, 16, 64)]
            pieces = list(zip(pts[:-1], pts[1:])) + [(pts[-1], math.inf)]
        else:
            pts = _panels(seg, hi)
            pieces = list(zip(pts[:-1], pts[1:]))
        for a, b in pieces:
            if r > 0 and math.isinf(b):
                val, e = integrate.quad(f, a, b, weight="cos", wvar=r, epsabs=1e-15, limlst=200)
            elif r > 0:
                val, e = integrate.quad(f, a, b, weight="cos", wvar=r, epsabs=0, epsrel=1e-13, limit=200)
            else:
                val, e = integrate.quad(f, a, b, epsabs=0, epsrel=1e-13, limit=500)
            total += val
            err += e
            scale += abs(val)
    return total, err, scale


def h_quadrature(model: gk.GkModel, r: float, k_max: float | None = None, tol: float = 1e-11) -> float:
    """Numerical oracle for H(r).

    Integrates g(k) cos(kr) with QUADPACK's oscillatory rules on panels split
    at segment boundaries, Gaussian peaks and exponential decay lengths, up
    to ``k_max`` (default: start of the tail).  The tail beyond is added in
    closed form via scipy's Si/Ci, or by QUADPACK's Fourier-integral rule
    when k_a r is large.

    Raises
    ------
    ToleranceNotMet
        If the summed error estimates exceed ``tol`` times the summed
        magnitudes of the panel integrals (H itself may cancel to near zero).
    """
    r = abs(float(r))
    tail = model.tail_segment
    if k_max is None:
        k_max = tail.k_start if tail is not None else math.inf
    if tail is not None and k_max > tail.k_start:
        raise ValueError("k_max beyond the tail start is not supported")
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", integrate.IntegrationWarning)
        total, err, scale = _quad_segments(model, r, k_max)
        if tail is not None and k_max == tail.k_start:
            t_val = math.pi * _tail_oracle(tail.tail, tail.k_start, r)
            total += t_val
            scale += abs(t_val)
    if err > tol * max(scale, 1e-300):
        raise ToleranceNotMet(f"quadrature error {err / math.pi:.3g} at r={r}")
    return total / math.pi


# ---------------------------------------------------------------------------
# sampled tables
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class HTable:
    """H sampled at r = k h, k = 0..3n (negative indices mirror by evenness)."""

    h: float
    values: np.ndarray

    def __post_init__(self) -> None:
        vals = np.asarray(self.values, dtype=float)
        if vals.ndim != 1 or vals.size < 1 or not np.isfinite(vals).all():
            raise ValueError("HTable values must be a finite 1-D array")
        object.__setattr__(self, "values", vals)

    @property
    def count(self) -> int:
        return self.values.size

    @property
    def r(self) -> np.ndarray:
        return self.h * np.arange(self.count)

    def __getitem__(self, k: int) -> float:
        return float(self.values[abs(k)])

    def scaled(self, eps: float) -> "HTable":
        return HTable(self.h, eps * self.values)


def build_h_table(model: gk.GkModel, h: float, n: int) -> HTable:
    """Tabulate H(k h) for k = 0..3n."""
    if not h > 0 or n < 1:
        raise ValueError("build_h_table needs h > 0 and n >= 1")
    r = h * np.arange(3 * n + 1)
    return HTable(h, np.asarray(h_total(model, r), dtype=float))


def table_from_function(func, h: float, n: int) -> HTable:
    """Tabulate an arbitrary even kernel func(r) on the Krein grid."""
    r = h * np.arange(3 * n + 1)
    return HTable(h, np.asarray(func(r), dtype=float))
