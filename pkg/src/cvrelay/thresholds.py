"""Security thresholds ``R(omega) = 0`` and modulation optimisation.

Roots are found by a coarse scan over ``[1, omega_max]`` followed by
bisection of every bracketed sign change, so non-monotone rate curves (the
positive EPR attack, whose rate grows with thermal noise) get every crossing
reported together with its sign pattern.
"""

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import List, Optional

import numpy as np
from scipy.optimize import bisect

from .attacks import AttackParams, named_attack
from .errors import InvalidParameterError, SolverError
from .rates import RateConfig, key_rate

DB_PER_KM = 0.2
DEFAULT_OMEGA_MAX = 10.0
DEFAULT_SCAN_POINTS = 400
ROOT_XTOL = 1e-10


def tau_from_distance(d_km):
    """Fibre transmissivity over ``d_km`` at 0.2 dB/km."""
    if not d_km >= 0.0:
        raise InvalidParameterError(f"distance must be >= 0 km, got {d_km}")
    return 10.0 ** (-DB_PER_KM * d_km / 10.0)


def distance_from_tau(tau):
    if not 0.0 < tau <= 1.0:
        raise InvalidParameterError(f"tau must be in (0, 1], got {tau}")
    return -10.0 * math.log10(tau) / DB_PER_KM


@dataclass(frozen=True)
class Root:
    omega: float
    sign_below: int
    sign_above: int

    @property
    def inverted(self):
        """Rate is positive above the root rather than below it."""
        return self.sign_below < 0 < self.sign_above


@dataclass(frozen=True)
class ThresholdPoint:
    tau: float
    distance_km: float
    roots: List[Root]
    attack: str
    cfg: RateConfig
    omega_max: float = DEFAULT_OMEGA_MAX
    diagnostic: Optional[str] = None

    @property
    def max_tolerable_omega(self):
        """Largest noise such that ``R > 0`` on ``[1, omega]``.

        ``None`` when the rate is already non-positive at ``omega = 1``;
        ``inf`` when it stays positive over the whole scanned interval.
        """
        if not self.roots:
            return math.inf if self.diagnostic == "positive" else None
        first = self.roots[0]
        return first.omega if first.sign_below > 0 else None


@dataclass(frozen=True)
class ThresholdCurve:
    attack: str
    cfg: RateConfig
    points: List[ThresholdPoint] = field(default_factory=list)


def _rate_fn(tau, attack, cfg, eta, etap):
    def f(omega):
        g, gp = named_attack(attack, omega)
        return key_rate(AttackParams(tau, omega, g, gp, eta, etap), cfg).rate
    return f


def threshold_omega(tau, attack, cfg=RateConfig(), omega_max=DEFAULT_OMEGA_MAX,
                    eta=1.0, etap=1.0, scan_points=DEFAULT_SCAN_POINTS, xtol=ROOT_XTOL):
    """All roots of ``R(omega)`` on ``[1, omega_max]`` for a named attack.

    Each root carries the sign of the rate just below and just above it.  If
    no sign change is found, ``diagnostic`` says whether the rate was
    ``"positive"`` or ``"negative"`` everywhere on the scan.
    """
    if not 0.0 < tau <= 1.0:
        raise InvalidParameterError(f"tau must be in (0, 1], got {tau}")
    if not omega_max > 1.0:
        raise InvalidParameterError(f"omega_max must exceed 1, got {omega_max}")
    if scan_points < 2:
        raise InvalidParameterError("need at least two scan points")
    named_attack(attack, 1.0)
    f = _rate_fn(tau, attack, cfg, eta, etap)
    grid = np.linspace(1.0, omega_max, int(scan_points))
    vals = np.array([f(w) for w in grid])
    signs = np.sign(vals).astype(int)
    roots = []
    for i in range(len(grid) - 1):
        s0, s1 = signs[i], signs[i + 1]
        if s0 == 0:
            below = signs[i - 1] if i > 0 else s1
            roots.append(Root(float(grid[i]), int(below), int(s1)))
            continue
        if s1 == 0 or s0 == s1:
            continue
        try:
            r = bisect(f, grid[i], grid[i + 1], xtol=xtol, maxiter=200)
        except (RuntimeError, ValueError) as exc:
            raise SolverError(f"bisection failed on [{grid[i]}, {grid[i + 1]}]: {exc}") from exc
        roots.append(Root(float(r), int(s0), int(s1)))
    if signs[-1] == 0:
        roots.append(Root(float(grid[-1]), int(signs[-2]), int(signs[-2])))
    diagnostic = None
    if not roots:
        diagnostic = "positive" if signs[0] > 0 else "negative"
    return ThresholdPoint(float(tau), distance_from_tau(tau), roots, str(attack).replace("-", "_"),
                          cfg, float(omega_max), diagnostic)


def resolve_workers(workers=None):
    """Explicit count, else ``CVRELAY_THREADS``, else 1."""
    if workers is not None:
        return max(1, int(workers))
    try:
        return max(1, int(os.environ.get("CVRELAY_THREADS", "1")))
    except ValueError:
        return 1


def threshold_curve(attack, cfg=RateConfig(), taus=None, distances=None,
                    omega_max=DEFAULT_OMEGA_MAX, eta=1.0, etap=1.0,
                    scan_points=DEFAULT_SCAN_POINTS, workers=None):
    """Thresholds over a transmissivity grid or a distance grid (km).

    Points are solved independently (optionally on a thread pool sized by
    ``workers`` or ``CVRELAY_THREADS``) and returned in grid order.
    """
    if (taus is None) == (distances is None):
        raise InvalidParameterError("give exactly one of taus or distances")
    grid = np.asarray(taus if taus is not None else distances, dtype=float)
    if grid.size > 1 and not (np.all(np.diff(grid) > 0) or np.all(np.diff(grid) < 0)):
        raise InvalidParameterError("grid must be strictly monotone")
    tau_grid = grid if taus is not None else [tau_from_distance(d) for d in grid]

    def solve(tau):
        return threshold_omega(float(tau), attack, cfg, omega_max, eta, etap, scan_points)

    n = resolve_workers(workers)
    if n == 1:
        points = [solve(t) for t in tau_grid]
    else:
        with ThreadPoolExecutor(max_workers=n) as pool:
            points = list(pool.map(solve, tau_grid))
    return ThresholdCurve(str(attack).replace("-", "_"), cfg, points)


@dataclass(frozen=True)
class ModulationOptimum:
    mu_star: float
    rate_star: float
    mu_grid: np.ndarray
    rates: np.ndarray

    @property
    def all_negative(self):
        return bool(np.all(self.rates < 0.0))


def optimal_modulation(tau, omega, attack, beta=1.0, eta=1.0, etap=1.0, mu_grid=None):
    """Modulation on ``mu_grid`` that maximises the finite-modulation rate.

    The argmax is returned even when every rate is negative; check
    :attr:`ModulationOptimum.all_negative`.
    """
    if mu_grid is None:
        mu_grid = np.arange(10.0, 1001.0, 10.0)
    mu_grid = np.asarray(mu_grid, dtype=float)
    if mu_grid.size == 0 or np.any(mu_grid <= 1.0) or np.any(np.diff(mu_grid) <= 0):
        raise InvalidParameterError("mu grid must be ascending with every value > 1")
    p = AttackParams.named(attack, tau, omega, eta, etap)
    rates = np.array([key_rate(p, RateConfig(mu=float(m), beta=beta)).rate for m in mu_grid])
    k = int(np.argmax(rates))
    return ModulationOptimum(float(mu_grid[k]), float(rates[k]), mu_grid, rates)
