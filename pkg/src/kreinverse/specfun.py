"""Special functions: complex error function, sine integral, Tricomi Psi.

The error function is summed from confluent hypergeometric series inside a
switch radius and from its asymptotic expansion outside.  The sine integral
uses its power series below a switch point and the Tricomi Psi asymptotic
representation above it.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass
from fractions import Fraction

from .errors import DivergentTail, NonConvergence, Overflow

_TWO_OVER_SQRT_PI = 2.0 / math.sqrt(math.pi)
_SQRT_PI = math.sqrt(math.pi)


@dataclass(frozen=True)
class SeriesControl:
    """Controls for series evaluation.

    Attributes
    ----------
    max_terms : int
        Largest number of terms summed before giving up.
    rel_tol : float
        Relative size of the last term at which a convergent series stops.
    switch_radius : float
        Argument modulus at which the asymptotic representation takes over.
    """

    max_terms: int = 400
    rel_tol: float = 1e-17
    switch_radius: float = 4.0

    def __post_init__(self) -> None:
        if self.max_terms < 1:
            raise ValueError("max_terms must be >= 1")
        if not self.rel_tol > 0:
            raise ValueError("rel_tol must be positive")
        if not self.switch_radius > 0:
            raise ValueError("switch_radius must be positive")


ERF_CONTROL = SeriesControl(switch_radius=4.0)
# Above 30 the optimally truncated asymptotic series is accurate to ~1e-14;
# below it the power series is summed exactly in rationals.
SI_CONTROL = SeriesControl(switch_radius=30.0)


def pochhammer(a: float, n: int) -> float:
    """Rising factorial (a)_n = a (a+1) ... (a+n-1), with (a)_0 = 1."""
    if n < 0:
        raise ValueError("n must be non-negative")
    out = 1.0
    for i in range(n):
        out *= a + i
    return out


# ---------------------------------------------------------------------------
# error function
# ---------------------------------------------------------------------------
#
# Every branch returns a triple (c0, gauss, m) meaning
#     erf(z) = c0 + gauss * exp(-z^2) * m,
# with gauss in {0, 1}.  Keeping exp(-z^2) symbolic lets callers fold an
# external Gaussian factor into the exponent before exponentiating.


def _erf_parts_series(z: complex, ctrl: SeriesControl) -> tuple[float, int, complex]:
    z2 = z * z
    if z2.real >= 0.0:
        # Kummer form: erf z = (2z/sqrt(pi)) exp(-z^2) M(1, 3/2, z^2)
        term = 1.0 + 0j
        total = term
        for n in range(ctrl.max_terms):
            term = term * z2 / (n + 1.5)
            total += term
            if abs(term) <= ctrl.rel_tol * abs(total):
                return 0.0, 1, _TWO_OVER_SQRT_PI * z * total
        raise NonConvergence(f"erf Kummer series at z={z}")
    # erf z = (2z/sqrt(pi)) M(1/2, 3/2, -z^2)
    w = -z2
    power = 1.0 + 0j
    total = power
    for n in range(1, ctrl.max_terms + 1):
        power = power * w / n
        term = power / (2 * n + 1)
        total += term
        if abs(term) <= ctrl.rel_tol * abs(total):
            return 0.0, 0, _TWO_OVER_SQRT_PI * z * total
    raise NonConvergence(f"erf series at z={z}")


def _erfc_asymptotic_sum(w: complex, ctrl: SeriesControl) -> complex:
    """Optimally truncated sum_n (-1)^n (2n-1)!! / (2 w^2)^n."""
    inv = 1.0 / (2.0 * w * w)
    term = 1.0 + 0j
    total = term
    for n in range(1, ctrl.max_terms + 1):
        nxt = -term * (2 * n - 1) * inv
        if abs(nxt) > abs(term):
            if n == 1:
                raise DivergentTail(f"erfc asymptotic series diverges at w={w}")
            break
        term = nxt
        total += term
        if abs(term) <= ctrl.rel_tol * abs(total):
            break
    return total


def _erf_parts_asymptotic(z: complex, ctrl: SeriesControl) -> tuple[float, int, complex]:
    # erfc(w) ~ exp(-w^2)/(sqrt(pi) w) * S(w) for Re w >= 0; erf is odd and
    # S depends on w^2 only, so the left half-plane reuses the same sum.
    sign = 1.0 if z.real >= 0.0 else -1.0
    s = _erfc_asymptotic_sum(z, ctrl)
    return sign, 1, -s / (_SQRT_PI * z)


def _erf_parts(z: complex, ctrl: SeriesControl) -> tuple[float, int, complex]:
    if abs(z) < ctrl.switch_radius:
        return _erf_parts_series(z, ctrl)
    return _erf_parts_asymptotic(z, ctrl)


def _as_complex(z) -> complex:
    z = complex(z)
    if not (math.isfinite(z.real) and math.isfinite(z.imag)):
        raise ValueError(f"argument must be finite, got {z}")
    return z


def _assemble(c0: float, gauss: int, m: complex, z: complex) -> complex:
    if not gauss:
        return c0 + m
    expo = -(z * z)
    if expo.real > 700.0:
        raise Overflow(f"erf({z}) exceeds double range")
    return c0 + cmath.exp(expo) * m


def erf_complex(z, ctrl: SeriesControl | None = None) -> complex:
    """Complex error function.

    Parameters
    ----------
    z : complex
        Finite argument.
    ctrl : SeriesControl, optional
        Branch switch and tolerances, default ``ERF_CONTROL``.

    Returns
    -------
    complex
        erf(z).  Odd symmetry is exact because both branches are odd by
        construction.
    """
    ctrl = ctrl or ERF_CONTROL
    z = _as_complex(z)
    if z == 0:
        return 0j
    return _assemble(*_erf_parts(z, ctrl), z)


def erf_series(z, ctrl: SeriesControl | None = None) -> complex:
    """erf(z) from the hypergeometric series regardless of |z|."""
    ctrl = ctrl or ERF_CONTROL
    z = _as_complex(z)
    if z == 0:
        return 0j
    return _assemble(*_erf_parts_series(z, ctrl), z)


def erf_asymptotic(z, ctrl: SeriesControl | None = None) -> complex:
    """erf(z) from the optimally truncated asymptotic expansion."""
    ctrl = ctrl or ERF_CONTROL
    z = _as_complex(z)
    return _assemble(*_erf_parts_asymptotic(z, ctrl), z)


def erf_shifted_scaled(x: float, beta: float, ctrl: SeriesControl | None = None) -> complex:
    """Return exp(-beta^2) * erf(x - i beta) without intermediate overflow.

    With z = x - i beta the Gaussian factor combines as
    exp(-beta^2) exp(-z^2) = exp(-x^2 + 2 i x beta), which stays bounded.
    """
    ctrl = ctrl or ERF_CONTROL
    z = complex(x, -beta)
    if z == 0:
        return 0j
    c0, gauss, m = _erf_parts(z, ctrl)
    damp = math.exp(-beta * beta)
    if not gauss:
        return damp * (c0 + m)
    return c0 * damp + cmath.exp(complex(-x * x, 2.0 * x * beta)) * m


# ---------------------------------------------------------------------------
# Tricomi Psi and the sine integral
# ---------------------------------------------------------------------------


def _psi_terms(a: float, c: float, z: complex, n_max: int):
    """Yield successive terms (a)_n (a-c+1)_n / (n! (-z)^n), n = 0..n_max."""
    term = 1.0 + 0j
    yield term
    b = a - c + 1.0
    for n in range(n_max):
        term = term * (a + n) * (b + n) / ((n + 1) * (-z))
        yield term


def tricomi_psi_asymptotic(a: float, c: float, z, N: int) -> complex:
    """Asymptotic series for the Tricomi function Psi(a, c; z).

    Sums ``z**-a * sum_{n<=N} (a)_n (a-c+1)_n / (n! (-z)^n)``, stopping before
    the first term that is larger in magnitude than its predecessor.

    Raises
    ------
    DivergentTail
        If the first correction already exceeds the leading term.
    """
    z = _as_complex(z)
    if z == 0:
        raise DivergentTail("Psi asymptotic series undefined at z = 0")
    total = 0j
    prev = math.inf
    for n, term in enumerate(_psi_terms(a, c, z, N)):
        mag = abs(term)
        if mag > prev:
            if n == 1:
                raise DivergentTail(f"Psi asymptotic series diverges at z={z}")
            break
        total += term
        prev = mag
        if mag == 0.0:
            break
    return z ** (-a) * total


def psi_truncation_bound(a: float, c: float, z, N: int) -> float:
    """Magnitude of the first term omitted by :func:`tricomi_psi_asymptotic`."""
    z = _as_complex(z)
    prev = math.inf
    for term in _psi_terms(a, c, z, N + 1):
        mag = abs(term)
        if mag > prev:
            return prev * abs(z ** (-a))
        prev = mag
    return prev * abs(z ** (-a))


def sine_integral_series(x: float, ctrl: SeriesControl | None = None) -> float:
    """Si(x) from its power series, summed exactly in rational arithmetic.

    The alternating terms grow to about e^x / x^1.5 before decaying, so a
    floating-point sum loses that many digits near x = 20.  Summing the
    exact rational terms leaves only the final rounding.
    """
    ctrl = ctrl or SI_CONTROL
    if x == 0:
        return 0.0
    xf = Fraction(x)
    x2 = xf * xf
    power = xf
    total = xf
    for n in range(1, ctrl.max_terms + 1):
        power = -power * x2 / ((2 * n) * (2 * n + 1))
        term = power / (2 * n + 1)
        total += term
        if abs(float(term)) <= ctrl.rel_tol * abs(float(total)):
            return float(total)
    raise NonConvergence(f"Si power series at x={x}")


def sine_integral_asymptotic(x: float, ctrl: SeriesControl | None = None) -> float:
    """Si(x) from the Tricomi Psi representation with optimal truncation."""
    ctrl = ctrl or SI_CONTROL
    iz = complex(0.0, x)
    p_plus = tricomi_psi_asymptotic(1.0, 1.0, iz, ctrl.max_terms)
    p_minus = tricomi_psi_asymptotic(1.0, 1.0, -iz, ctrl.max_terms)
    val = (math.pi / 2
           - 0.5j * cmath.exp(-iz) * p_plus
           + 0.5j * cmath.exp(iz) * p_minus)
    return val.real


def sine_integral(x: float, ctrl: SeriesControl | None = None) -> float:
    """Sine integral Si(x) = int_0^x sin(t)/t dt for x >= 0.

    Parameters
    ----------
    x : float
        Non-negative argument.
    ctrl : SeriesControl, optional
        Default ``SI_CONTROL``; the power series is used below
        ``switch_radius`` and the asymptotic form above it.
    """
    ctrl = ctrl or SI_CONTROL
    x = float(x)
    if not math.isfinite(x) or x < 0:
        raise ValueError(f"sine_integral needs finite x >= 0, got {x}")
    if x < ctrl.switch_radius:
        return sine_integral_series(x, ctrl)
    return sine_integral_asymptotic(x, ctrl)
