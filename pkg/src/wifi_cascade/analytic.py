"""Stylized utilization dynamics of a chain of hidden-node pairs.

Node ``i+1`` sees node ``i`` as a hidden interferer. With utilization ``u`` at
node ``i`` the per-attempt collision probability at node ``i+1`` is
``1 - exp(-u) * (1 - u)`` and the next utilization is
``min(rho * sum_{r=1..R} p**(r-1), 1)``. Fixed points of that map are the
roots of ``h_R(omega) = rho`` (plus ``omega = 1`` once ``rho >= 1/R``).

``R`` may be ``math.inf``; the geometric sums are then taken in closed form.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

OMEGA_BAR = (3.0 - math.sqrt(5.0)) / 2.0

FIXED_POINT_GRID = 10_000
BISECTION_TOL = 1e-9
RESIDUAL_TOL = 1e-6
MARGINAL_EPS = 1e-8
ITERATION_TOL = 1e-10
MAX_STEPS = 1_000_000
RECIPROCAL_BOUNDARY_TOL = 1e-9
MAXIMUM_BOUNDARY_TOL = 1e-6


class Stability(str, enum.Enum):
    STABLE = "Stable"
    UNSTABLE = "Unstable"
    MARGINAL = "Marginal"


class Regime(str, enum.Enum):
    ALWAYS_UNCONGESTED = "AlwaysUncongested"
    ALWAYS_CONGESTED = "AlwaysCongested"
    PHASE_TRANSITION = "PhaseTransition"
    # rho sits on 1/R or on h_R^max within tolerance; left unclassified
    BOUNDARY = "Boundary"


@dataclass(frozen=True)
class ModelParams:
    retry_limit: float
    load: float | tuple[float, ...]
    attacker_load: float = 0.0

    def __post_init__(self):
        _check_retry_limit(self.retry_limit)
        loads = self.load if isinstance(self.load, tuple) else (self.load,)
        if not loads:
            raise ValueError("at least one load is required")
        for rho in loads:
            _check_load(rho)
        if not 0.0 <= self.attacker_load <= 1.0:
            raise ValueError(f"attacker_load must lie in [0, 1], got {self.attacker_load}")

    @property
    def loads(self) -> tuple[float, ...]:
        return self.load if isinstance(self.load, tuple) else (self.load,)


@dataclass
class UtilizationSequence:
    values: list[float]
    converged: bool
    limit: float | None = None


@dataclass(frozen=True)
class FixedPoint:
    omega: float
    stability: Stability

    @property
    def is_congested_point(self) -> bool:
        return self.omega == 1.0


@dataclass(frozen=True)
class FixedPointSet:
    points: tuple[FixedPoint, ...]

    def __post_init__(self):
        if not self.points:
            raise ValueError("a fixed-point set is never empty")
        omegas = self.omegas
        if any(b <= a for a, b in zip(omegas, omegas[1:])):
            raise ValueError(f"fixed points must be strictly increasing: {omegas}")

    @property
    def count(self) -> int:
        return len(self.points)

    @property
    def omegas(self) -> list[float]:
        return [p.omega for p in self.points]

    def __iter__(self):
        return iter(self.points)

    def __len__(self):
        return len(self.points)

    def __getitem__(self, k):
        return self.points[k]


@dataclass(frozen=True)
class RegimeReport:
    regime: Regime
    fixed_points: FixedPointSet
    transition_point: float | None = None
    boundary: bool = False

    def __post_init__(self):
        if self.regime is Regime.PHASE_TRANSITION:
            omegas = self.fixed_points.omegas
            if self.fixed_points.count < 2 or omegas[-1] != 1.0:
                raise ValueError("a phase transition needs at least two fixed points ending at 1")
            if self.transition_point != omegas[-2]:
                raise ValueError("transition point must be the second-largest fixed point")
        elif self.transition_point is not None:
            raise ValueError("transition_point is only defined for a phase transition")


@dataclass(frozen=True)
class PhaseBounds:
    retry_limit: float
    lower: float
    upper: float
    upper_argmax: float
    guaranteed_upper: float
    omega_bar: float = OMEGA_BAR
    asymptotic_bound: float = field(default=0.0)

    @property
    def has_phase_transition(self) -> bool:
        return self.upper > self.lower

    @property
    def guaranteed_interval(self) -> tuple[float, float] | None:
        """Load range where a transition is certain from h_R(omega_bar) alone."""
        if self.guaranteed_upper > self.lower:
            return (self.lower, self.guaranteed_upper)
        return None


def _check_retry_limit(R):
    if R == math.inf:
        return
    if isinstance(R, bool) or int(R) != R or R < 1:
        raise ValueError(f"retry limit must be an integer >= 1 or math.inf, got {R!r}")


def _check_unit(name, x):
    if not 0.0 <= x <= 1.0 or math.isnan(x):
        raise ValueError(f"{name} must lie in [0, 1], got {x}")


def _check_load(rho):
    if not 0.0 < rho < 1.0:
        raise ValueError(f"load must lie in (0, 1), got {rho}")


# -- elementary maps -------------------------------------------------------

def collision_probability(u: float) -> float:
    """Probability that an attempt collides when the hidden neighbour has utilization ``u``."""
    _check_unit("utilization", u)
    return 1.0 - math.exp(-u) * (1.0 - u)


def mean_retry_count(p: float, R: float) -> float:
    """Expected attempts per packet, ``sum_{r=1..R} p**(r-1)``, with ``0**0 == 1``."""
    _check_unit("collision probability", p)
    _check_retry_limit(R)
    if R == math.inf:
        return math.inf if p == 1.0 else 1.0 / (1.0 - p)
    total = 0.0
    term = 1.0
    for _ in range(int(R)):
        total += term
        term *= p
    return total


def next_utilization(u: float, rho: float, R: float) -> float:
    _check_unit("utilization", u)
    _check_load(rho)
    return min(rho * mean_retry_count(collision_probability(u), R), 1.0)


def utilization_sequence(
    u0: float,
    loads: Sequence[float],
    R: float,
    max_steps: int = MAX_STEPS,
    tol: float = ITERATION_TOL,
    cycle: bool = True,
) -> UtilizationSequence:
    """Iterate the node-to-node map starting at the attacker's utilization ``u0``.

    Step ``i`` uses ``loads[i % len(loads)]``. With ``cycle=False`` the run stops
    after ``len(loads)`` steps. Convergence is declared on the first step whose
    change is below ``tol``; otherwise ``converged`` is False and ``limit`` None.
    """
    _check_unit("u0", u0)
    loads = list(loads)
    if not loads:
        raise ValueError("loads must be nonempty")
    for rho in loads:
        _check_load(rho)
    _check_retry_limit(R)
    steps = max_steps if cycle else min(max_steps, len(loads))
    values = [u0]
    u = u0
    n = len(loads)
    for i in range(steps):
        nxt = next_utilization(u, loads[i % n], R)
        values.append(nxt)
        if abs(nxt - u) < tol:
            return UtilizationSequence(values, True, nxt)
        u = nxt
    return UtilizationSequence(values, False, None)


# -- h_R and its derivative ------------------------------------------------

def _gamma(omega, R):
    """Gamma(omega) = sum_{r=1..R} q**(r-1) and its omega-derivative, vectorised."""
    w = np.asarray(omega, dtype=float)
    q = 1.0 - np.exp(-w) * (1.0 - w)
    dq = np.exp(-w) * (2.0 - w)
    if R == math.inf:
        s = np.exp(-w) * (1.0 - w)
        with np.errstate(divide="ignore"):
            return 1.0 / s, dq / s**2
    gamma = np.zeros_like(w)
    dgamma = np.zeros_like(w)
    power = np.ones_like(w)      # q**(r-1)
    prev_power = np.zeros_like(w)  # q**(r-2), zero for r = 1
    for r in range(1, int(R) + 1):
        gamma += power
        dgamma += (r - 1) * prev_power
        prev_power = power
        power = power * q
    return gamma, dgamma * dq


def h_values(omega, R) -> np.ndarray:
    """Vectorised ``h_R`` on an array of utilizations in [0, 1]."""
    w = np.asarray(omega, dtype=float)
    if R == math.inf:
        return np.exp(-w) * (1.0 - w) * w
    gamma, _ = _gamma(w, R)
    return w / gamma


def h_of_omega(omega: float, R: float) -> float:
    _check_unit("omega", omega)
    _check_retry_limit(R)
    return float(h_values(omega, R))


def h_derivative(omega: float, R: float) -> float:
    if not 0.0 < omega <= 1.0:
        raise ValueError(f"h_derivative needs omega in (0, 1], got {omega}")
    _check_retry_limit(R)
    if R == math.inf:
        return math.exp(-omega) * (1.0 - 3.0 * omega + omega * omega)
    gamma, dgamma = _gamma(omega, R)
    return float(1.0 / gamma - omega * dgamma / gamma**2)


def _golden_max(fn, lo, hi, tol=1e-12, max_iter=200):
    inv_phi = (math.sqrt(5.0) - 1.0) / 2.0
    a, b = lo, hi
    c = b - inv_phi * (b - a)
    d = a + inv_phi * (b - a)
    fc, fd = fn(c), fn(d)
    for _ in range(max_iter):
        if b - a < tol:
            break
        if fc > fd:
            b, d, fd = d, c, fc
            c = b - inv_phi * (b - a)
            fc = fn(c)
        else:
            a, c, fc = c, d, fd
            d = a + inv_phi * (b - a)
            fd = fn(d)
    x = (a + b) / 2.0
    return x, fn(x)


def h_max(R: float, grid: int = FIXED_POINT_GRID) -> tuple[float, float]:
    """Global maximum ``(omega_star, h_R(omega_star))`` of h_R on [0, 1]."""
    _check_retry_limit(R)
    if grid < 1000:
        raise ValueError("grid must have at least 1000 intervals")
    omegas = np.linspace(0.0, 1.0, grid + 1)
    values = h_values(omegas, R)
    k = int(np.argmax(values))
    lo = omegas[max(k - 1, 0)]
    hi = omegas[min(k + 1, grid)]
    candidates = [(float(values[k]), float(omegas[k]))]
    x, fx = _golden_max(lambda w: float(h_values(w, R)), lo, hi)
    candidates.append((fx, x))
    # endpoints and omega_bar are exact lower bounds of the maximum
    for w in (0.0, 1.0, OMEGA_BAR):
        candidates.append((float(h_values(w, R)), w))
    value, omega_star = max(candidates)
    return float(omega_star), float(value)


# -- fixed points ----------------------------------------------------------

def _bisect(fn, lo, hi, tol):
    flo = fn(lo)
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        fmid = fn(mid)
        if fmid == 0.0:
            return mid
        if (fmid < 0.0) == (flo < 0.0):
            lo, flo = mid, fmid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def _fixed_point_residual(omega, rho, R):
    return abs(min(rho * float(_gamma(omega, R)[0]), 1.0) - omega)


def _label(omega, rho, R, eps):
    if omega == 1.0 and rho * R > 1.0:
        return Stability.STABLE
    slope = h_derivative(omega, R)
    if slope > eps:
        return Stability.STABLE
    if slope < -eps:
        return Stability.UNSTABLE
    return Stability.MARGINAL


def fixed_point_omegas(rho: float, R: float, tol: float = BISECTION_TOL,
                       grid: int = FIXED_POINT_GRID) -> list[float]:
    """Sorted fixed points of ``u -> min(f(u), 1)`` without stability labels."""
    _check_load(rho)
    _check_retry_limit(R)
    omegas = np.linspace(0.0, 1.0, grid + 1)
    g = h_values(omegas, R) - rho

    def gap(w):
        return float(h_values(w, R)) - rho

    roots = []
    for i in range(grid):
        if i > 0 and g[i] == 0.0:
            roots.append(float(omegas[i]))
        elif g[i] * g[i + 1] < 0.0:
            roots.append(_bisect(gap, float(omegas[i]), float(omegas[i + 1]), tol))
    includes_one = rho * R >= 1.0
    if includes_one:
        roots = [w for w in roots if w < 1.0 - tol]
        roots.append(1.0)
    elif not roots:
        raise RuntimeError(
            f"no interior fixed point for rho={rho} < 1/R={1 / R}; h_R is not continuous?")
    for w in roots:
        res = _fixed_point_residual(w, rho, R)
        if res >= RESIDUAL_TOL:
            raise RuntimeError(f"fixed point {w} has residual {res}")
    return roots


def find_fixed_points(rho: float, R: float, tol: float = BISECTION_TOL,
                      eps: float = MARGINAL_EPS) -> FixedPointSet:
    omegas = fixed_point_omegas(rho, R, tol)
    return FixedPointSet(tuple(FixedPoint(w, _label(w, rho, R, eps)) for w in omegas))


def classify_stability(omega: float, rho: float, R: float, eps: float = MARGINAL_EPS) -> Stability:
    """Stability of a fixed point from the sign of h_R' (omega = 1 is stable once rho > 1/R)."""
    _check_unit("omega", omega)
    _check_load(rho)
    _check_retry_limit(R)
    if omega == 0.0 or _fixed_point_residual(omega, rho, R) >= RESIDUAL_TOL:
        raise ValueError(f"{omega} is not a fixed point for rho={rho}, R={R}")
    return _label(omega, rho, R, eps)


def classify_regime(rho: float, R: float) -> RegimeReport:
    _check_load(rho)
    _check_retry_limit(R)
    points = find_fixed_points(rho, R)
    lower = 1.0 / R
    _, upper = h_max(R)
    near_lower = abs(rho - lower) < RECIPROCAL_BOUNDARY_TOL
    near_upper = upper > lower and abs(rho - upper) < MAXIMUM_BOUNDARY_TOL
    if near_lower or near_upper:
        return RegimeReport(Regime.BOUNDARY, points, boundary=True)
    if rho < lower:
        return RegimeReport(Regime.ALWAYS_UNCONGESTED, points)
    if rho < upper:
        return RegimeReport(Regime.PHASE_TRANSITION, points, points.omegas[-2])
    return RegimeReport(Regime.ALWAYS_CONGESTED, points)


def limit_of_sequence(u0: float, rho: float, R: float) -> float:
    """Limit of the utilization sequence predicted from the fixed-point bracket of ``u0``."""
    _check_unit("u0", u0)
    omegas = fixed_point_omegas(rho, R)
    for w in omegas:
        if u0 == w:
            return w
    if u0 < omegas[0]:
        return omegas[0]
    if u0 > omegas[-1]:
        return omegas[-1]
    k = int(np.searchsorted(omegas, u0)) - 1
    step = next_utilization(u0, rho, R) - u0
    return omegas[k + 1] if step > 0.0 else omegas[k]


def phase_transition_bounds(R: float) -> PhaseBounds:
    _check_retry_limit(R)
    omega_star, upper = h_max(R)
    return PhaseBounds(
        retry_limit=R,
        lower=1.0 / R,
        upper=upper,
        upper_argmax=omega_star,
        guaranteed_upper=float(h_values(OMEGA_BAR, R)),
        asymptotic_bound=float(h_values(OMEGA_BAR, math.inf)),
    )


def backoff_success_probability(tx_time: float, slot: float, cw_max: int) -> float:
    """Chance a neighbour fits a whole frame into one maximal-window backoff.

    The backoff lasts ``slot * n`` with ``n`` uniform on ``0..cw_max``; the
    neighbour's start is uniform over ``[0, slot * n + tx_time]`` and succeeds
    only when it starts and ends inside the backoff.
    """
    if tx_time < 0 or slot <= 0 or cw_max < 0:
        raise ValueError("durations must be positive and cw_max >= 0")
    if tx_time >= slot * cw_max:
        return 0.0
    window = slot * np.arange(cw_max + 1, dtype=float)
    window = window[window > tx_time]
    terms = (window - tx_time) / (window + tx_time) / (cw_max + 1)
    return math.fsum(terms.tolist())


def model_record(rho: float, R: float) -> dict:
    """JSON-ready summary of fixed points, regime and bounds for one (rho, R)."""
    report = classify_regime(rho, R)
    bounds = phase_transition_bounds(R)
    return {
        "rho": rho,
        "R": R,
        "fixed_points": [{"omega": p.omega, "stability": p.stability.value}
                         for p in report.fixed_points],
        "regime": report.regime.value,
        "transition_point": report.transition_point,
        "boundary": report.boundary,
        "bounds": {
            "lower": bounds.lower,
            "upper": bounds.upper,
            "upper_argmax": bounds.upper_argmax,
            "guaranteed_upper": bounds.guaranteed_upper,
            "omega_bar": bounds.omega_bar,
            "asymptotic_bound": bounds.asymptotic_bound,
        },
    }
