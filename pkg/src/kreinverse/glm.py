"""Bound-state ladder: adding, removing and deforming bound states.

All radial equations are written in reduced units, phi'' = (V/C + q) phi,
with q = gamma^2 for the bound-state energy -C gamma^2 and q = -k^2 for the
scattering energy C k^2.  Integration is classical RK4 on the potential's
own uniform grid; the potential at half steps comes from four-point cubic
interpolation so the scheme stays fourth order.  Second logarithmic
derivatives are expanded analytically in terms of phi, phi' and cumulative
integrals rather than by numerical differentiation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy import optimize

from .errors import (DegenerateGammas, DegenerateParameters, NoAsymptoticRegion,
                     NonPositiveDenominator, Overflow, TailTooShort)
from .krein import PotentialCurve

LOG_OVERFLOW = 690.0


@dataclass(frozen=True)
class BoundStateSpec:
    """Bound state with energy -C gamma^2 and norming constant C_n.

    The norming constant is defined by int_0^inf C_n phi_n^2 dr = 1 for the
    regular solution phi_n (phi ~ r at the origin).
    """

    gamma: float
    norm_const: float

    def __post_init__(self) -> None:
        if not self.gamma > 0:
            raise ValueError("gamma must be positive")
        if not self.norm_const >= 0:
            raise ValueError("norm_const must be non-negative")


@dataclass(frozen=True)
class RegularSolution:
    """Solution phi on a radial grid together with phi'.

    ``energy_param`` is the complex wavenumber label: i*gamma for bound-state
    energies, k for scattering energies.
    """

    r: np.ndarray
    phi: np.ndarray
    dphi: np.ndarray
    energy_param: complex
    integral: np.ndarray | None = field(default=None, repr=False)

    def scaled(self, factor: float) -> "RegularSolution":
        integ = None if self.integral is None else factor * factor * self.integral
        return RegularSolution(self.r, factor * self.phi, factor * self.dphi, self.energy_param, integ)


# ---------------------------------------------------------------------------
# grid utilities
# ---------------------------------------------------------------------------


def midpoint_values(u: np.ndarray) -> np.ndarray:
    """Cubic-interpolated values of ``u`` halfway between grid nodes."""
    u = np.asarray(u, dtype=float)
    n = u.size
    if n < 4:
        return 0.5 * (u[:-1] + u[1:])
    mid = np.empty(n - 1)
    mid[1:-1] = (-u[:-3] + 9.0 * u[1:-2] + 9.0 * u[2:-1] - u[3:]) / 16.0
    mid[0] = (5.0 * u[0] + 15.0 * u[1] - 5.0 * u[2] + u[3]) / 16.0
    mid[-1] = (u[-4] - 5.0 * u[-3] + 15.0 * u[-2] + 5.0 * u[-1]) / 16.0
    return mid


def cumulative_integral(f: np.ndarray, h: float) -> np.ndarray:
    """Running integral int_0^{r_i} f on a uniform grid, exact for cubics."""
    f = np.asarray(f, dtype=float)
    n = f.shape[0]
    if n < 4:
        raise ValueError("cumulative_integral needs at least 4 samples")
    seg = np.empty((n - 1,) + f.shape[1:])
    seg[1:-1] = (-f[:-3] + 13.0 * f[1:-2] + 13.0 * f[2:-1] - f[3:]) * (h / 24.0)
    seg[0] = (9.0 * f[0] + 19.0 * f[1] - 5.0 * f[2] + f[3]) * (h / 24.0)
    seg[-1] = (f[-4] - 5.0 * f[-3] + 19.0 * f[-2] + 9.0 * f[-1]) * (h / 24.0)
    out = np.zeros_like(f)
    out[1:] = np.cumsum(seg, axis=0)
    return out


def tail_integral(f: np.ndarray, h: float) -> np.ndarray:
    """int_{r_i}^{R} f accumulated from the far end (no cancellation)."""
    return cumulative_integral(np.asarray(f)[::-1], h)[::-1]


def _check_overflow(u: np.ndarray, q, span: float) -> None:
    growth = math.sqrt(max(0.0, float(np.max(u)) + float(np.max(np.atleast_1d(q)))))
    if growth * span > LOG_OVERFLOW:
        raise Overflow(f"solution grows like exp({growth * span:.0f}); shorten the grid")


def _rk4(u: np.ndarray, umid: np.ndarray, h: float, q, y0, dy0, reverse: bool = False):
    """Integrate phi'' = (u + q) phi over the whole grid.

    ``q``, ``y0`` and ``dy0`` may be arrays (one column per energy).  With
    ``reverse`` the initial data are imposed at the last node.
    """
    q = np.asarray(q, dtype=float)
    n = u.size
    phi = np.empty((n,) + q.shape)
    dphi = np.empty_like(phi)
    y = np.array(y0, dtype=float) * np.ones(q.shape)
    p = np.array(dy0, dtype=float) * np.ones(q.shape)
    if reverse:
        order = range(n - 1, 0, -1)
        step = -h
    else:
        order = range(0, n - 1)
        step = h
    i0 = n - 1 if reverse else 0
    phi[i0], dphi[i0] = y, p
    for i in order:
        j = i - 1 if reverse else i + 1
        um = umid[min(i, j)] + q
        ua = u[i] + q
        ub = u[j] + q
        k1y, k1p = p, ua * y
        y2 = y + 0.5 * step * k1y
        p2 = p + 0.5 * step * k1p
        k2y, k2p = p2, um * y2
        y3 = y + 0.5 * step * k2y
        p3 = p + 0.5 * step * k2p
        k3y, k3p = p3, um * y3
        y4 = y + step * k3y
        p4 = p + step * k3p
        k4y, k4p = p4, ub * y4
        y = y + step / 6.0 * (k1y + 2 * k2y + 2 * k3y + k4y)
        p = p + step / 6.0 * (k1p + 2 * k2p + 2 * k3p + k4p)
        phi[j], dphi[j] = y, p
    return phi, dphi


def _reduced(pot: PotentialCurve) -> tuple[np.ndarray, np.ndarray, float]:
    r = pot.r
    if r[0] != 0.0:
        raise ValueError("potential grid must start at r = 0")
    h = pot.step
    if not np.allclose(np.diff(r), h, rtol=1e-9, atol=0):
        raise ValueError("potential grid must be uniform")
    u = pot.u
    return u, midpoint_values(u), h


# ---------------------------------------------------------------------------
# solutions of the radial equation
# ---------------------------------------------------------------------------


def regular_solution(pot: PotentialCurve, gamma: float) -> RegularSolution:
    """Regular solution at energy -C gamma^2: phi(0) = 0, phi'(0) = 1."""
    u, umid, h = _reduced(pot)
    _check_overflow(u, gamma * gamma, pot.r[-1])
    phi, dphi = _rk4(u, umid, h, gamma * gamma, 0.0, 1.0)
    return RegularSolution(pot.r, phi, dphi, 1j * gamma, cumulative_integral(phi * phi, h))


def jost_solution(pot: PotentialCurve, gamma: float) -> RegularSolution:
    """Jost solution at energy -C gamma^2, f ~ exp(-gamma r) at the grid end."""
    u, umid, h = _reduced(pot)
    R = pot.r[-1]
    _check_overflow(u, gamma * gamma, R)
    scale = math.exp(-gamma * R) if gamma * R < 700 else 1.0
    f, df = _rk4(u, umid, h, gamma * gamma, scale, -gamma * scale, reverse=True)
    return RegularSolution(pot.r, f, df, -1j * gamma)


def _scattering(pot: PotentialCurve, k: np.ndarray):
    u, umid, h = _reduced(pot)
    return _rk4(u, umid, h, -(k * k), 0.0, 1.0)


# ---------------------------------------------------------------------------
# adding bound states
# ---------------------------------------------------------------------------


def _log_second_derivative_add(c: float, phi, dphi, integ):
    d = 1.0 + c * integ
    if np.any(d <= 0):
        raise NonPositiveDenominator("1 + C int(phi^2) <= 0; invalid norming constant")
    ratio = c * phi * phi / d
    return 2.0 * c * phi * dphi / d - ratio * ratio, d


def add_bound_state(pot_prev: PotentialCurve, state: BoundStateSpec):
    """Introduce a bound state at -C gamma^2 with norming constant C_k.

    Returns
    -------
    (PotentialCurve, RegularSolution)
        New potential V_k = V_{k-1} - 2C [ln(1 + C_k int_0^r phi^2)]'' and
        its regular eigenfunction phi / (1 + C_k int_0^r phi^2).
    """
    sol = regular_solution(pot_prev, state.gamma)
    c = state.norm_const
    lsd, d = _log_second_derivative_add(c, sol.phi, sol.dphi, sol.integral)
    v_new = pot_prev.v - 2.0 * pot_prev.C * lsd
    phi_n = sol.phi / d
    dphi_n = sol.dphi / d - sol.phi * (c * sol.phi * sol.phi) / (d * d)
    integ = (1.0 - 1.0 / d) / c if c > 0 else sol.integral
    eig = RegularSolution(pot_prev.r, phi_n, dphi_n, 1j * state.gamma, integ)
    return pot_prev.with_v(v_new), eig


def add_states_sequential(pot0: PotentialCurve, states: Sequence[BoundStateSpec]):
    """Apply :func:`add_bound_state` for each state in order."""
    pot = pot0
    eigs = []
    for s in states:
        pot, eig = add_bound_state(pot, s)
        eigs.append(eig)
    return pot, eigs


def add_two_states_det(pot0: PotentialCurve, s1: BoundStateSpec, s2: BoundStateSpec) -> PotentialCurve:
    """Two bound states at once from the 2x2 determinant.

    det = (1 + C1 I11)(1 + C2 I22) - C1 C2 I12^2 with I_jk = int_0^r phi_j phi_k,
    and V2 = V0 - 2C (ln det)''.
    """
    if s1.gamma == s2.gamma:
        raise DegenerateGammas("the two states share the same gamma")
    u, umid, h = _reduced(pot0)
    q = np.array([s1.gamma ** 2, s2.gamma ** 2])
    _check_overflow(u, q, pot0.r[-1])
    phi, dphi = _rk4(u, umid, h, q, 0.0, 1.0)
    pa, pb = phi[:, 0], phi[:, 1]
    da, db = dphi[:, 0], dphi[:, 1]
    iaa = cumulative_integral(pa * pa, h)
    ibb = cumulative_integral(pb * pb, h)
    iab = cumulative_integral(pa * pb, h)
    c1, c2 = s1.norm_const, s2.norm_const
    ea = 1.0 + c1 * iaa
    eb = 1.0 + c2 * ibb
    det = ea * eb - c1 * c2 * iab * iab
    if np.any(det <= 0):
        raise NonPositiveDenominator("determinant is not positive")
    d1 = c1 * pa * pa * eb + c2 * pb * pb * ea - 2.0 * c1 * c2 * iab * pa * pb
    d2 = (2.0 * c1 * pa * da * eb + 2.0 * c2 * pb * db * ea
          + 2.0 * c1 * c2 * pa * pa * pb * pb
          - 2.0 * c1 * c2 * (pa * pb) ** 2
          - 2.0 * c1 * c2 * iab * (da * pb + pa * db))
    lsd = d2 / det - (d1 / det) ** 2
    return pot0.with_v(pot0.v - 2.0 * pot0.C * lsd)


# ---------------------------------------------------------------------------
# removing the lowest bound state
# ---------------------------------------------------------------------------


def remove_top_bound_state(pot: PotentialCurve, psi0: RegularSolution,
                           decay_tol: float = 1e-12) -> PotentialCurve:
    """Remove the lowest bound state given its (unnormalized) eigenfunction.

    V_{k-1} = V_k - 2C [ln T]'' with T(r) = int_r^inf psi0^2.  The integral
    beyond the grid end R is closed with psi0(R)^2 / (2 kappa),
    kappa = -psi0'(R) / psi0(R).

    Raises
    ------
    TailTooShort
        If psi0^2 at R exceeds ``decay_tol`` times its maximum.
    """
    psi = np.asarray(psi0.phi, dtype=float)
    dpsi = np.asarray(psi0.dphi, dtype=float)
    h = pot.step
    p2 = psi * psi
    peak = float(np.max(p2))
    if not peak > 0:
        raise ValueError("eigenfunction vanishes identically")
    if p2[-1] > decay_tol * peak:
        raise TailTooShort(f"psi^2 at the grid end is {p2[-1] / peak:.2e} of its maximum")
    kappa = -dpsi[-1] / psi[-1] if psi[-1] != 0 else math.inf
    closing = p2[-1] / (2.0 * kappa) if (math.isfinite(kappa) and kappa > 0) else 0.0
    T = tail_integral(p2, h) + closing
    ratio = p2 / T
    lsd = -2.0 * psi * dpsi / T - ratio * ratio
    return pot.with_v(pot.v - 2.0 * pot.C * lsd)


# ---------------------------------------------------------------------------
# shooting
# ---------------------------------------------------------------------------


def _node_count(phi: np.ndarray) -> int:
    s = np.sign(phi[1:])
    s = s[s != 0]
    return int(np.count_nonzero(s[1:] != s[:-1]))


def _nodes_at(pot: PotentialCurve, gamma: float) -> int:
    return _node_count(regular_solution(pot, gamma).phi)


def _match_index(u: np.ndarray, gamma: float) -> int:
    allowed = np.nonzero(u + gamma * gamma < 0)[0]
    if allowed.size == 0:
        raise ValueError("no classically allowed region at this energy")
    return int(allowed[-1])


def _mismatch(pot: PotentialCurve, gamma: float, idx: int) -> float:
    reg = regular_solution(pot, gamma)
    jost = jost_solution(pot, gamma)
    w = reg.phi[idx] * jost.dphi[idx] - reg.dphi[idx] * jost.phi[idx]
    norm = abs(reg.phi[idx] * jost.dphi[idx]) + abs(reg.dphi[idx] * jost.phi[idx])
    return w / norm


def bound_state_gammas(pot: PotentialCurve, max_states: int | None = None,
                       rtol: float = 1e-13) -> list[float]:
    """Decay wavenumbers of all bound states, deepest first.

    Node counting brackets each level; the bracket is then refined on the
    normalized Wronskian of the outward regular and inward Jost solutions at
    the outer turning point.
    """
    u = pot.u
    depth = -float(np.min(u))
    if depth <= 0:
        return []
    g_top = math.sqrt(depth)
    g_floor = max(1e-6 * g_top, 2.0 / pot.r[-1])
    total = _nodes_at(pot, g_floor)
    if max_states is not None:
        total = min(total, max_states)
    out = []
    hi = g_top
    for level in range(total):
        # largest gamma with at least level + 1 states below it
        lo = g_floor
        a, b = lo, hi
        while b - a > 1e-6 * b:
            mid = 0.5 * (a + b)
            if _nodes_at(pot, mid) >= level + 1:
                a = mid
            else:
                b = mid
        idx = _match_index(u, b)
        fa = _mismatch(pot, a, idx)
        fb = _mismatch(pot, b, idx)
        if fa * fb < 0:
            g = optimize.brentq(lambda x: _mismatch(pot, x, idx), a, b, xtol=1e-15, rtol=rtol)
        else:
            g = 0.5 * (a + b)
        out.append(g)
        hi = g * (1 - 1e-9)
    return out


def eigenfunction(pot: PotentialCurve, gamma: float) -> RegularSolution:
    """Bound-state eigenfunction built from outward and inward solutions.

    The outward regular solution is kept up to the outer turning point and
    the inward Jost solution, rescaled to match there, beyond it; this avoids
    the exponentially growing contamination of pure outward shooting.
    """
    u, _, h = _reduced(pot)
    idx = _match_index(u, gamma)
    reg = regular_solution(pot, gamma)
    jost = jost_solution(pot, gamma)
    scale = reg.phi[idx] / jost.phi[idx]
    phi = np.where(np.arange(u.size) <= idx, reg.phi, scale * jost.phi)
    dphi = np.where(np.arange(u.size) <= idx, reg.dphi, scale * jost.dphi)
    return RegularSolution(pot.r, phi, dphi, 1j * gamma, cumulative_integral(phi * phi, h))


def ground_state(pot: PotentialCurve) -> tuple[float, RegularSolution]:
    """Decay wavenumber and eigenfunction of the lowest bound state."""
    gammas = bound_state_gammas(pot, max_states=1)
    if not gammas:
        raise ValueError("potential has no bound state")
    return gammas[0], eigenfunction(pot, gammas[0])


def norming_constant(eig: RegularSolution) -> float:
    """1 / int phi^2 for an eigenfunction with phi'(0) = 1, tail closed analytically."""
    phi, dphi = eig.phi, eig.dphi
    h = float(eig.r[1] - eig.r[0])
    total = float(cumulative_integral(phi * phi, h)[-1])
    kappa = -dphi[-1] / phi[-1] if phi[-1] != 0 else math.inf
    if math.isfinite(kappa) and kappa > 0:
        total += phi[-1] ** 2 / (2.0 * kappa)
    return 1.0 / total


# ---------------------------------------------------------------------------
# Jost modulus
# ---------------------------------------------------------------------------


def jost_modulus_forward(pot: PotentialCurve, k_grid, energy_tol: float | None = None) -> np.ndarray:
    """|F(k)| from the amplitude of the regular solution at the grid end.

    Beyond the range of the potential phi(k, r) = |F(k)| sin(kr + delta) / k,
    so |F| = k sqrt(phi^2 + (phi'/k)^2) at r = R.

    Raises
    ------
    NoAsymptoticRegion
        If |V/C| over the last tenth of the grid exceeds ``energy_tol``
        (default 1e-6 of the smallest k^2).
    """
    k = np.atleast_1d(np.asarray(k_grid, dtype=float))
    if np.any(k <= 0):
        raise ValueError("k must be positive")
    u = pot.u
    tol = 1e-6 * float(np.min(k)) ** 2 if energy_tol is None else energy_tol
    tail = u[int(0.9 * u.size):]
    if np.max(np.abs(tail)) > tol:
        raise NoAsymptoticRegion(f"|V/C| = {np.max(np.abs(tail)):.3g} near the grid end")
    phi, dphi = _scattering(pot, k)
    return k * np.sqrt(phi[-1] ** 2 + (dphi[-1] / k) ** 2)


# ---------------------------------------------------------------------------
# Bargmann deformation
# ---------------------------------------------------------------------------


def _is_bound(pot: PotentialCurve, gamma: float, tol: float = 1e-6) -> bool:
    u = pot.u
    try:
        idx = _match_index(u, gamma)
    except ValueError:
        return False
    return abs(_mismatch(pot, gamma, idx)) < tol


def bargmann_deform(pot1: PotentialCurve, a: float, b: float) -> PotentialCurve:
    """Deformation by the Wronskian of f1(ia, r) and phi1(ib, r).

    Delta V = -2C { ln( W[f1(ia), phi1(ib)] / (b^2 - a^2) ) }'' with the
    Jost solution f1 ~ exp(-a r) integrated inward and phi1 the regular
    solution at energy -C b^2.  When -C b^2 is a level of ``pot1`` the
    eigenfunction is assembled from outward and inward pieces so that its
    decaying tail is accurate.  Using W' = (b^2 - a^2) f1 phi1, the second
    log-derivative is (f1' phi1 + f1 phi1')/Q - (f1 phi1/Q)^2, Q = W/(b^2 - a^2).
    """
    if not (a > 0 and b > 0):
        raise ValueError("a and b must be positive")
    if a == b:
        raise DegenerateParameters("a == b makes the deformation singular")
    u = pot1.u
    tail = u[int(0.9 * u.size):]
    if np.max(np.abs(tail)) > 1e-8 * min(a, b) ** 2:
        raise NoAsymptoticRegion("potential has not decayed at the grid end")
    f = jost_solution(pot1, a)
    phi = eigenfunction(pot1, b) if _is_bound(pot1, b) else regular_solution(pot1, b)
    w = f.phi * phi.dphi - f.dphi * phi.phi
    Q = w / (b * b - a * a)
    if np.any(Q <= 0) and np.any(Q >= 0):
        raise DegenerateParameters("Wronskian changes sign; deformation undefined")
    prod = f.phi * phi.phi
    lsd = (f.dphi * phi.phi + f.phi * phi.dphi) / Q - (prod / Q) ** 2
    return pot1.with_v(pot1.v - 2.0 * pot1.C * lsd)


def bargmann_replace_level(pot1: PotentialCurve, a: float, b: float, norm_const: float) -> PotentialCurve:
    """Replace the level -C b^2 of ``pot1`` by -C a^2.

    The Jost-function factor (k - ia)/(k + ib) splits into a bound-state
    insertion at -C a^2 and the Wronskian deformation; the deformation is
    applied first (it is defined with solutions of ``pot1``), then the new
    level is added with norming constant ``norm_const``.
    """
    deformed = bargmann_deform(pot1, a, b)
    out, _ = add_bound_state(deformed, BoundStateSpec(a, norm_const))
    return out


# ---------------------------------------------------------------------------
# asymptotic checks
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class AsymptoticsReport:
    slope: float
    slope_predicted: float
    rate: float
    rate_predicted: float
    amplitude: float
    amplitude_predicted: float

    @property
    def slope_ratio(self) -> float:
        return self.slope / self.slope_predicted if self.slope_predicted else math.nan

    @property
    def rate_ratio(self) -> float:
        return self.rate / self.rate_predicted if self.rate_predicted else math.nan


def check_asymptotics(v_n: PotentialCurve, v_0: PotentialCurve, states: Sequence[BoundStateSpec],
                      small_window: tuple[float, float] | None = None,
                      large_window: tuple[float, float] | None = None) -> AsymptoticsReport:
    """Compare V_n - V_0 with its small-r line and large-r exponential.

    Near the origin V_n - V_0 ~ -4C (sum C_j) r; far out it decays like
    -(2C/C_1)(2 gamma_1)^5 exp(-2 gamma_1 r), gamma_1 the shallowest level.
    Windows default to r < 0.02/gamma_max and the last third of the range
    where |dV| is still above 1e-6 of its maximum.
    """
    if not np.array_equal(v_n.r, v_0.r):
        raise ValueError("potentials must share a grid")
    r = v_n.r
    dv = v_n.v - v_0.v
    C = v_n.C
    if not states:
        return AsymptoticsReport(0.0, 0.0, 0.0, 0.0, 0.0, 0.0)
    g_max = max(s.gamma for s in states)
    shallow = min(states, key=lambda s: s.gamma)
    if small_window is None:
        small_window = (0.0, 0.02 / g_max)
    sel = (r > small_window[0]) & (r <= small_window[1])
    slope = float(np.dot(r[sel], dv[sel]) / np.dot(r[sel], r[sel]))
    slope_pred = -4.0 * C * sum(s.norm_const for s in states)
    if large_window is None:
        # stay well above the round-off floor of the reconstructed difference
        ok = np.abs(dv) > 1e-6 * np.max(np.abs(dv))
        r_hi = float(r[ok][-1])
        large_window = (max(r_hi * 0.5, 3.0 / shallow.gamma), r_hi)
    sel = (r >= large_window[0]) & (r <= large_window[1]) & (dv != 0)
    coef = np.polyfit(r[sel], np.log(np.abs(dv[sel])), 1)
    rate = -float(coef[0])
    amp = -float(np.exp(coef[1]))
    g1 = shallow.gamma
    amp_pred = -(2.0 * C / shallow.norm_const) * (2.0 * g1) ** 5
    return AsymptoticsReport(slope, slope_pred, rate, 2.0 * g1, amp, amp_pred)
