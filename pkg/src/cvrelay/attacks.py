"""Symmetric two-mode Gaussian attacks on the two relay links.

An attack is fixed by the link transmissivity ``tau``, Eve's thermal
variance ``omega`` and the ancilla correlations ``(g, gp)``.  The detector
efficiencies ``eta``, ``etap`` ride along because Eve is granted the
detector loss as well.
"""

import enum
import math
from dataclasses import dataclass

import numpy as np

from .errors import InvalidParameterError

BOUNDARY_ATOL = 1e-12

ATTACK_KINDS = (
    "collective",
    "sep_plus",
    "sep_minus",
    "sep_qcorr",
    "sep_pcorr",
    "epr_positive",
    "epr_negative",
)


class AttackClass(enum.IntEnum):
    NONPHYSICAL = 0
    SEPARABLE = 1
    ENTANGLED = 2

    @property
    def label(self):
        return self.name.lower()


@dataclass(frozen=True)
class NoisePair:
    """Effective q/p channel noises (SNU) seen through the Bell detection."""

    lam: float
    lamp: float

    def swapped(self):
        return NoisePair(self.lamp, self.lam)


@dataclass(frozen=True)
class AttackParams:
    tau: float
    omega: float
    g: float = 0.0
    gp: float = 0.0
    eta: float = 1.0
    etap: float = 1.0

    def __post_init__(self):
        if not 0.0 < self.tau <= 1.0:
            raise InvalidParameterError(f"tau must be in (0, 1], got {self.tau}")
        for name in ("eta", "etap"):
            v = getattr(self, name)
            if not 0.0 < v <= 1.0:
                raise InvalidParameterError(f"{name} must be in (0, 1], got {v}")
        if not validate(self.omega, self.g, self.gp):
            raise InvalidParameterError(
                f"unphysical attack (omega={self.omega}, g={self.g}, gp={self.gp})"
            )

    @classmethod
    def named(cls, kind, tau, omega, eta=1.0, etap=1.0):
        g, gp = named_attack(kind, omega)
        return cls(tau, omega, g, gp, eta, etap)

    def mirrored(self):
        """Swap the roles of the q and p quadratures (``lam <-> lamp``)."""
        return AttackParams(self.tau, self.omega, -self.gp, -self.g, self.etap, self.eta)


def _check_omega(omega):
    if not omega >= 1.0:
        raise InvalidParameterError(f"omega must be >= 1, got {omega}")


def _valid_mask(omega, g, gp):
    g = np.asarray(g, dtype=float)
    gp = np.asarray(gp, dtype=float)
    strict = (np.abs(g) < omega) & (np.abs(gp) < omega)
    bound = omega * np.abs(g + gp) <= omega * omega + g * gp - 1.0 + BOUNDARY_ATOL
    return strict & bound


def _separable_mask(omega, g, gp):
    g = np.asarray(g, dtype=float)
    gp = np.asarray(gp, dtype=float)
    return omega * omega - g * gp - 1.0 + BOUNDARY_ATOL >= omega * np.abs(g - gp)


def validate(omega, g, gp):
    """True iff ``(g, gp)`` is an accessible attack at thermal variance ``omega``.

    Requires ``|g|, |gp| < omega`` and ``omega |g + gp| <= omega^2 + g gp - 1``;
    the second constraint admits equality (the EPR attacks sit on it).
    """
    _check_omega(omega)
    return bool(_valid_mask(omega, g, gp))


def is_separable(omega, g, gp):
    """True iff Eve's ancillas are in a separable state."""
    if not validate(omega, g, gp):
        raise InvalidParameterError(f"unphysical attack (omega={omega}, g={g}, gp={gp})")
    return bool(_separable_mask(omega, g, gp))


def classify(omega, g, gp):
    _check_omega(omega)
    if not _valid_mask(omega, g, gp):
        return AttackClass.NONPHYSICAL
    return AttackClass.SEPARABLE if _separable_mask(omega, g, gp) else AttackClass.ENTANGLED


def named_attack(kind, omega):
    """Correlations ``(g, gp)`` of a named attack at thermal variance ``omega``.

    ``kind`` accepts snake_case or kebab-case names from :data:`ATTACK_KINDS`.
    At ``omega == 1`` every kind degenerates to ``(0, 0)``.
    """
    _check_omega(omega)
    key = str(kind).replace("-", "_")
    one = omega - 1.0
    a = math.sqrt(omega * omega - 1.0)
    table = {
        "collective": (0.0, 0.0),
        "sep_plus": (one, one),
        "sep_minus": (-one, -one),
        "sep_qcorr": (one, -one),
        "sep_pcorr": (-one, one),
        "epr_positive": (a, -a),
        "epr_negative": (-a, a),
    }
    try:
        return table[key]
    except KeyError:
        raise InvalidParameterError(
            f"unknown attack {kind!r}; expected one of {', '.join(ATTACK_KINDS)}"
        ) from None


def noise_params(p):
    """Effective noises including detector loss.

    ``lam = (1 - tau)(omega - g) + (1 - eta)/eta`` and
    ``lamp = (1 - tau)(omega + gp) + (1 - etap)/etap``.
    """
    loss = 1.0 - p.tau
    lam = loss * (p.omega - p.g) + (1.0 - p.eta) / p.eta
    lamp = loss * (p.omega + p.gp) + (1.0 - p.etap) / p.etap
    return NoisePair(lam, lamp)


@dataclass(frozen=True)
class PlaneGrid:
    """Classification of the correlation plane on a uniform grid.

    ``classes[i, j]`` holds the :class:`AttackClass` code of the point
    ``(g[i], gp[j])``.
    """

    omega: float
    g: np.ndarray
    gp: np.ndarray
    classes: np.ndarray

    def cells(self):
        for i, gv in enumerate(self.g):
            for j, gpv in enumerate(self.gp):
                yield float(gv), float(gpv), AttackClass(int(self.classes[i, j]))

    def counts(self):
        return {c: int(np.count_nonzero(self.classes == c)) for c in AttackClass}


def classify_plane(omega, grid_resolution):
    """Classify a ``grid_resolution``-square grid of points on ``[-omega, omega]^2``."""
    _check_omega(omega)
    if int(grid_resolution) != grid_resolution or grid_resolution < 3:
        raise InvalidParameterError(f"grid resolution must be an integer >= 3, got {grid_resolution}")
    axis = np.linspace(-omega, omega, int(grid_resolution))
    G, GP = np.meshgrid(axis, axis, indexing="ij")
    valid = _valid_mask(omega, G, GP)
    sep = _separable_mask(omega, G, GP)
    classes = np.full(G.shape, AttackClass.NONPHYSICAL, dtype=np.int8)
    classes[valid & sep] = AttackClass.SEPARABLE
    classes[valid & ~sep] = AttackClass.ENTANGLED
    return PlaneGrid(float(omega), axis, axis.copy(), classes)
