"""Discretized Krein equation and recovery of the no-bound-state potential.

For each x = 3n h the Krein equation

    Gamma_x(s) + int_0^x H(s - t) Gamma_x(t) dt = -H(s),   0 <= s <= x,

is discretized with the composite 3/8 rule on m = 3n panels, giving the
dense system (I + Delta U) Gamma = -H with U[k, j] = g_j H_|j-k| and
Delta = 3h/8.  G(x) = Gamma_x(x) then yields the potential

    V0(r) = 4C (G(x)^2 - dG/dx),   x = 2r.
"""

from __future__ import annotations

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy import linalg

from . import gk_model as gk
from .errors import GridTooCoarse, NotMultipleOfThree, OffGrid, SingularMatrix
from .hfun import HTable, h_total

log = logging.getLogger(__name__)

PIVOT_THRESHOLD = 1e-14


@dataclass(frozen=True)
class PotentialCurve:
    """Potential V(r) in meV sampled on a uniform radial grid starting at 0.

    Attributes
    ----------
    r : ndarray
        Radii in A.
    v : ndarray
        Potential in meV.
    C : float
        hbar^2/2m in meV A^2.
    """

    r: np.ndarray
    v: np.ndarray
    C: float

    def __post_init__(self) -> None:
        r = np.asarray(self.r, dtype=float)
        v = np.asarray(self.v, dtype=float)
        if r.shape != v.shape or r.ndim != 1:
            raise ValueError("r and v must be 1-D arrays of equal length")
        if not self.C > 0:
            raise ValueError("C must be positive")
        object.__setattr__(self, "r", r)
        object.__setattr__(self, "v", v)

    @property
    def step(self) -> float:
        return float(self.r[1] - self.r[0])

    @property
    def u(self) -> np.ndarray:
        """Reduced potential V/C in 1/A^2."""
        return self.v / self.C

    @classmethod
    def from_function(cls, func, r_max: float, h: float, C: float) -> "PotentialCurve":
        n = int(round(r_max / h))
        r = h * np.arange(n + 1)
        return cls(r, np.asarray(func(r), dtype=float), C)

    @classmethod
    def free(cls, r_max: float, h: float, C: float) -> "PotentialCurve":
        return cls.from_function(np.zeros_like, r_max, h, C)

    def with_v(self, v) -> "PotentialCurve":
        return PotentialCurve(self.r, v, self.C)


@dataclass(frozen=True)
class KreinSolution:
    """G(x) on the Krein grid x = 3 n h.

    ``gamma_first`` holds Gamma_x(0) and ``gammas`` the full solution vectors
    when requested.
    """

    h: float
    x: np.ndarray
    G: np.ndarray
    gamma_first: np.ndarray | None = None
    gammas: dict = field(default_factory=dict)


def quadrature_pattern(m: int) -> np.ndarray:
    """Integer 3/8-rule coefficients g_i: 1, 3, 3, 2, 3, 3, 2, ..., 3, 3, 1."""
    if m < 3 or m % 3:
        raise NotMultipleOfThree(f"m = {m} is not a positive multiple of 3")
    g = np.full(m + 1, 3.0)
    g[0] = g[m] = 1.0
    g[3:m:3] = 2.0
    return g


def quadrature_weights(m: int, h: float = 1.0) -> np.ndarray:
    """Composite 3/8-rule weights Delta g_i with Delta = 3h/8."""
    return 0.375 * h * quadrature_pattern(m)


def krein_matrix(table: HTable, n: int) -> np.ndarray:
    """Assemble I + Delta U for m = 3n, U[k, j] = g_j H_|j-k|."""
    m = 3 * n
    if table.count < m + 1:
        raise ValueError(f"table has {table.count} samples, need {m + 1}")
    hv = table.values[: m + 1]
    toe = linalg.toeplitz(hv)
    w = quadrature_weights(m, table.h)
    mat = toe * w[np.newaxis, :]
    mat[np.diag_indices_from(mat)] += 1.0
    return mat


def solve_gamma_full(table: HTable, n: int) -> np.ndarray:
    """Solve the discretized Krein system for x = 3 n h.

    Returns
    -------
    ndarray
        Gamma_x(k h), k = 0..3n.  The last entry is G(x).

    Raises
    ------
    SingularMatrix
        If an LU pivot is below 1e-14 of its row scale.
    """
    if n == 0:
        return np.array([-table[0]])
    mat = krein_matrix(table, n)
    rhs = -table.values[: 3 * n + 1]
    row_scale = np.abs(mat).max(axis=1)
    lu, piv = linalg.lu_factor(mat, check_finite=True)
    pivots = np.abs(np.diag(lu))
    ratio = float(np.min(pivots) / np.max(row_scale))
    if ratio < PIVOT_THRESHOLD:
        raise SingularMatrix(f"relative pivot {ratio:.3g} at n = {n}")
    gamma = linalg.lu_solve((lu, piv), rhs)
    if log.isEnabledFor(logging.DEBUG):
        res = np.linalg.norm(mat @ gamma - rhs, np.inf)
        log.debug("krein n=%d min_pivot=%.3e residual=%.3e", n, ratio, res)
    return gamma


def g_function(table: HTable, n_list: Sequence[int], *, keep_gammas: bool = False,
               workers: int = 1) -> KreinSolution:
    """G(x) = Gamma_x(x) for x = 3 n h, n in ``n_list`` (x = 0 always included)."""
    ns = sorted(set(int(n) for n in n_list) | {0})
    if 3 * ns[-1] + 1 > table.count:
        raise ValueError("n_list exceeds the H table")
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            gammas = list(pool.map(lambda n: solve_gamma_full(table, n), ns))
    else:
        gammas = [solve_gamma_full(table, n) for n in ns]
    x = 3.0 * table.h * np.array(ns, dtype=float)
    G = np.array([g[-1] for g in gammas])
    first = np.array([g[0] for g in gammas])
    kept = dict(zip(ns, gammas)) if keep_gammas else {}
    return KreinSolution(table.h, x, G, first, kept)


def _s_term(hv: np.ndarray, m: int) -> float:
    """Second-order increment S_m of the first-element recurrence, m >= 3."""
    g = quadrature_pattern(m)
    j = np.arange(m)
    lead = g[:m] * hv[j] * (hv[m] * hv[m - j] + 3 * hv[m + 1] * hv[m + 1 - j]
                             + 3 * hv[m + 2] * hv[m + 2 - j] + hv[m + 3] * hv[m + 3 - j])
    h0, h1, h2, h3 = hv[0], hv[1], hv[2], hv[3]
    a, b, c, d = hv[m], hv[m + 1], hv[m + 2], hv[m + 3]
    return (2.0 * float(np.sum(lead))
            + h0 * (3 * a * a + 9 * b * b + 9 * c * c + d * d)
            + 6 * h1 * (d * c + 3 * c * b + 2 * b * a)
            + 6 * h2 * (d * b + 2 * c * a)
            + 4 * h3 * d * a)


def _second_order_sum(hv: np.ndarray, m: int) -> float:
    """sum_ij g_i g_j H_i H_|i-j| H_j on the m-grid (zero for m = 0)."""
    if m == 0:
        return 0.0
    g = quadrature_pattern(m)
    v = g * hv[: m + 1]
    return float(v @ linalg.toeplitz(hv[: m + 1]) @ v)


def _step_terms(hv: np.ndarray, m: int) -> tuple[float, float]:
    """First- and second-order increments from m to m + 3."""
    first = hv[m] ** 2 + 3 * hv[m + 1] ** 2 + 3 * hv[m + 2] ** 2 + hv[m + 3] ** 2
    if m == 0:
        # the m = 0 grid carries no quadrature, so the step is the m = 3 sum itself
        second = _second_order_sum(hv, 3)
    else:
        second = _s_term(hv, m)
    return first, second


def gamma_first_series(table: HTable, m: int, order: int = 2) -> float:
    """Gamma_{m,0} from the incremental Neumann recurrence.

    Starts from Gamma_{0,0} = -H_0 and adds, per step of three panels,
    Delta (H_m^2 + 3H_{m+1}^2 + 3H_{m+2}^2 + H_{m+3}^2) and, for order 2,
    -Delta^2 S_m.
    """
    if m < 0 or m % 3:
        raise NotMultipleOfThree(f"m = {m} is not a multiple of 3")
    if order not in (0, 1, 2):
        raise ValueError("order must be 0, 1 or 2")
    hv = table.values
    if hv.size < m + 1:
        raise ValueError("table too short")
    delta = 0.375 * table.h
    val = -hv[0]
    if order == 0:
        return float(val)
    for k in range(0, m, 3):
        first, second = _step_terms(hv, k)
        val += delta * first
        if order == 2:
            val -= delta * delta * second
    return float(val)


def g_squared_series(table: HTable, m: int) -> float:
    """[G]^2 over the panel [m h, (m+3) h] from one recurrence step.

    8 G^2 = H_m^2 + 3H_{m+1}^2 + 3H_{m+2}^2 + H_{m+3}^2 - Delta S_m; the
    estimate is centred on the panel (a difference quotient over it).
    """
    if m < 0 or m % 3:
        raise NotMultipleOfThree(f"m = {m} is not a multiple of 3")
    hv = table.values
    if hv.size < m + 4:
        raise ValueError("table too short")
    first, second = _step_terms(hv, m)
    return float((first - 0.375 * table.h * second) / 8.0)


def potential_from_g(sol: KreinSolution, C: float) -> PotentialCurve:
    """V0(r) = 4C (G^2 - dG/dx) at x = 2r, centred differences in x."""
    x = np.asarray(sol.x, dtype=float)
    G = np.asarray(sol.G, dtype=float)
    if x.size < 3:
        raise GridTooCoarse("need at least 3 G samples")
    dx = np.diff(x)
    if not np.allclose(dx, dx[0], rtol=1e-9, atol=0):
        raise ValueError("G samples must lie on a uniform x grid")
    dG = np.gradient(G, dx[0], edge_order=2)
    return PotentialCurve(x / 2.0, 4.0 * C * (G * G - dG), C)


def gl_kernel_nobound(source, r: float, rp: float) -> float:
    """No-bound-state Gelfand-Levitan kernel H(r - r') - H(r + r').

    ``source`` is a GkModel (closed-form H) or an HTable (r +- r' on nodes).
    """
    if r < 0 or rp < 0:
        raise ValueError("r and r' must be non-negative")
    if isinstance(source, gk.GkModel):
        return float(h_total(source, abs(r - rp)) - h_total(source, r + rp))
    return source[_node(source.h, abs(r - rp))] - source[_node(source.h, r + rp)]


def _node(h: float, r: float) -> int:
    k = int(round(r / h))
    if abs(k * h - r) > 1e-9 * max(h, abs(r)):
        raise OffGrid(f"r = {r} is not a multiple of h = {h}")
    return k


def kernel_from_gamma(table: HTable, r: float, rp: float) -> float:
    """K(r, r') = Gamma_{2r}(r - r') - Gamma_{2r}(r + r') from a full solve."""
    if not 0 <= rp <= r:
        raise ValueError("need 0 <= r' <= r")
    m = _node(table.h, 2.0 * r)
    if m % 3:
        raise OffGrid(f"2r = {2 * r} is not on the 3h Krein grid")
    if m == 0:
        return 0.0
    gamma = solve_gamma_full(table, m // 3)
    return float(gamma[_node(table.h, r - rp)] - gamma[_node(table.h, r + rp)])
