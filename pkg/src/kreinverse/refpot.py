"""Reference-potential services near the origin.

A pseudo-Morse model of the reference potential, the quadratic seed
G(x) = a + b x + c x^2 it implies for the Krein G-function, the Riccati
equation dG/dx = G^2 - V(x/2)/4C as an independent route to G, and the
calibration of the sixth-order tail coefficient against the seed.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy import optimize

from . import gk_model as gk
from .errors import BlowUp, NoRootInBracket, NoSignChange, ToleranceNotMet
from .hfun import h_total
from .krein import PotentialCurve

BLOWUP_FACTOR = 1e6


@dataclass(frozen=True)
class PseudoMorseParams:
    """Pseudo-Morse parameters.

    V(r) = V0 + A0 exp(-2 alpha0 r) - sqrt(A0 eps0) exp(-alpha0 r) with
    A0 = D0 exp(2 alpha0 r0) and eps0 = D0 / 4.  Energies in meV, lengths in A.
    """

    V0: float
    D0: float
    alpha0: float
    r0: float

    def __post_init__(self) -> None:
        if not self.D0 > 0:
            raise ValueError("D0 must be positive")
        if not self.alpha0 > 0:
            raise ValueError("alpha0 must be positive")

    @property
    def A0(self) -> float:
        return self.D0 * math.exp(2.0 * self.alpha0 * self.r0)

    @property
    def eps0(self) -> float:
        return self.D0 / 4.0

    @property
    def attraction(self) -> float:
        """sqrt(A0 eps0), the amplitude of the attractive exponential."""
        return math.sqrt(self.A0 * self.eps0)

    @classmethod
    def from_mapping(cls, raw: dict) -> "PseudoMorseParams":
        return cls(float(raw["V0"]), float(raw["D0"]), float(raw["alpha0"]), float(raw["r0"]))


def pseudo_morse_eval(p: PseudoMorseParams, r):
    """Pseudo-Morse potential V(r) in meV for r >= 0."""
    r = np.asarray(r, dtype=float)
    if np.any(r < 0):
        raise ValueError("r must be non-negative")
    out = p.V0 + p.A0 * np.exp(-2.0 * p.alpha0 * r) - p.attraction * np.exp(-p.alpha0 * r)
    return float(out) if out.ndim == 0 else out


def pseudo_morse_derivatives(p: PseudoMorseParams) -> tuple[float, float, float]:
    """V(0), V'(0) and V''(0) with respect to r."""
    A, S, al = p.A0, p.attraction, p.alpha0
    return (p.V0 + A - S, -2.0 * al * A + al * S, 4.0 * al * al * A - al * al * S)


@dataclass(frozen=True)
class QuadraticSeed:
    """G(x) = a + b x + c x^2 near x = 0 (x = 2r).

    Units: a in 1/A, b in 1/A^2, c in 1/A^3.
    """

    a: float
    b: float
    c: float

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        return self.a + self.b * x + self.c * x * x


def seed_constants(p: PseudoMorseParams, C: float) -> tuple[float, float, float]:
    """N1 = a^2 - b, N2 = c - ab and N3 = b^2 + 2ac fixed by the potential.

    Matching G' = G^2 - V(x/2)/4C order by order in x gives
    N1 = V/4C, N2 = -V'/16C and N3 = V''/32C with derivatives in r at 0.
    """
    if not C > 0:
        raise ValueError("C must be positive")
    v, dv, d2v = pseudo_morse_derivatives(p)
    return v / (4.0 * C), -dv / (16.0 * C), d2v / (32.0 * C)


def seed_residual(a: float, n1: float, n2: float, n3: float) -> float:
    """(a^2 - N1)^2 + 2a [a (a^2 - N1) + N2] - N3."""
    b = a * a - n1
    return b * b + 2.0 * a * (a * b + n2) - n3


def quadratic_seed(p: PseudoMorseParams, C: float, h0_hint: float) -> QuadraticSeed:
    """Solve for the quadratic seed whose constant term is nearest -h0_hint.

    The scalar equation is the quartic 3a^4 - 4N1 a^2 + 2N2 a + N1^2 - N3 = 0.
    Its real roots come from the companion matrix and the selected one is
    polished by Newton steps.

    Raises
    ------
    NoRootInBracket
        If the quartic has no real root.
    """
    n1, n2, n3 = seed_constants(p, C)
    coeffs = [3.0, 0.0, -4.0 * n1, 2.0 * n2, n1 * n1 - n3]
    if all(c == 0.0 for c in coeffs[1:]):
        return QuadraticSeed(0.0, 0.0, 0.0)
    roots = np.roots(coeffs)
    scale = max(1.0, float(np.max(np.abs(roots))))
    real = [float(z.real) for z in roots if abs(z.imag) <= 1e-7 * scale]
    if not real:
        raise NoRootInBracket("seed equation has no real root")
    target = -h0_hint
    a = min(real, key=lambda z: abs(z - target))
    for _ in range(8):
        f = seed_residual(a, n1, n2, n3)
        df = 12.0 * a ** 3 - 8.0 * n1 * a + 2.0 * n2
        if df == 0.0:
            break
        step = f / df
        a -= step
        if abs(step) <= 1e-16 * abs(a):
            break
    b = a * a - n1
    return QuadraticSeed(a, b, n2 + a * b)


def _potential_callable(pot) -> Callable[[float], float]:
    if isinstance(pot, PotentialCurve):
        r, v = pot.r, pot.v
        return lambda rr: float(np.interp(rr, r, v))
    if isinstance(pot, PseudoMorseParams):
        return lambda rr: pseudo_morse_eval(pot, rr)
    return lambda rr: float(pot(rr))


def riccati_integrate(pot, G0: float, x_grid, C: float) -> np.ndarray:
    """Integrate dG/dx = G^2 - V(x/2) / 4C from G(x_0) = G0 by classical RK4.

    Parameters
    ----------
    pot : PotentialCurve, PseudoMorseParams or callable
        Potential in meV as a function of r.  A curve is interpolated
        linearly between its nodes.
    G0 : float
        Initial value, normally -H(0).
    x_grid : array
        Uniform grid in x = 2r.
    C : float
        hbar^2/2m in meV A^2.

    Raises
    ------
    BlowUp
        If |G| exceeds 1e6 |G0| (a pole of the Riccati solution).
    """
    x = np.asarray(x_grid, dtype=float)
    if x.ndim != 1 or x.size < 2:
        raise ValueError("x_grid needs at least two points")
    v = _potential_callable(pot)
    inv = 1.0 / (4.0 * C)
    cap = BLOWUP_FACTOR * max(abs(G0), 1.0)

    def rhs(xx: float, g: float) -> float:
        return g * g - v(0.5 * xx) * inv

    out = np.empty_like(x)
    g = float(G0)
    out[0] = g
    for i in range(x.size - 1):
        x0, dx = x[i], x[i + 1] - x[i]
        k1 = rhs(x0, g)
        k2 = rhs(x0 + 0.5 * dx, g + 0.5 * dx * k1)
        k3 = rhs(x0 + 0.5 * dx, g + 0.5 * dx * k2)
        k4 = rhs(x0 + dx, g + dx * k3)
        g = g + dx / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        if not math.isfinite(g) or abs(g) > cap:
            raise BlowUp(f"G reached {g:.3g} at x = {x[i + 1]:.6g}")
        out[i + 1] = g
    return out


def h_zero(model: gk.GkModel) -> float:
    return float(h_total(model, 0.0))


def calibrate_b3(model: gk.GkModel, seed_a: float, bracket: tuple[float, float],
                 rtol: float = 1e-6) -> float:
    """Tail coefficient b3 for which H(0) = -seed_a.

    ``b3`` and the bracket are given in the convention of the configured
    tail (before its sign is applied).  H(0) is affine in b3, so Brent's
    method converges in a couple of steps; it is run to full precision.

    Raises
    ------
    NoSignChange
        If H(0) + seed_a has the same sign at both bracket ends.
    """
    if model.tail_segment is None:
        raise ValueError("model has no asymptotic tail")
    lo, hi = float(bracket[0]), float(bracket[1])

    def resid(b3: float) -> float:
        return h_zero(model.with_tail_b3(b3)) + seed_a

    f_lo, f_hi = resid(lo), resid(hi)
    if f_lo == 0.0:
        return lo
    if f_hi == 0.0:
        return hi
    if f_lo * f_hi > 0:
        raise NoSignChange(f"H(0) + a has the same sign at b3 = {lo:.6g} and {hi:.6g}")
    b3 = optimize.brentq(resid, lo, hi, xtol=1e-12 * max(abs(lo), abs(hi)), rtol=1e-15)
    final = resid(b3)
    if abs(final) > rtol * abs(seed_a):
        raise ToleranceNotMet(f"calibration residual {final:.3g} exceeds tolerance")
    return b3
