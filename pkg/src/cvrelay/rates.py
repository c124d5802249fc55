"""Post-relay covariance matrices, Holevo bound, mutual information and key rates.

Two evaluation modes share one entry point, :func:`key_rate`:

* asymptotic (``RateConfig(mu=None)``): the large-modulation closed forms;
* finite (``RateConfig(mu=...)``): numerical symplectic spectra of the
  post-relay and doubly-conditioned CMs, and the Gaussian mutual information
  of the heterodyne outcomes.

CMs are ordered ``(q_a, p_a, q_b, p_b)`` for Alice's and Bob's remote modes.
"""

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .attacks import AttackParams, NoisePair, _valid_mask, noise_params
from .errors import InvalidParameterError
from .gaussian import (
    I2,
    Z2,
    entropy_h,
    entropy_h_array,
    symplectic_spectrum,
)

MU_MAX = 1e8
LOG2E2 = 2.0 * math.log2(math.e)

# Bell detection reads q_- = (q_A' - q_B')/sqrt2 and p_+ = (p_A' + p_B')/sqrt2
_BELL = np.array([[1.0, 0.0, -1.0, 0.0], [0.0, 1.0, 0.0, 1.0]]) / math.sqrt(2.0)
_X1 = np.array([[0.0, 1.0], [1.0, 0.0]])
_X2 = np.array([[0.0, 1.0], [-1.0, 0.0]])


@dataclass(frozen=True)
class RateConfig:
    """Modulation regime and reconciliation efficiency.

    ``mu=None`` selects the asymptotic (infinite-modulation) formulas; the
    breakdown then reports ``i_ab`` and ``i_e`` at ``reference_mu``.
    """

    mu: Optional[float] = None
    beta: float = 1.0
    reference_mu: float = 1e6

    def __post_init__(self):
        if self.mu is not None and not 1.0 < self.mu <= MU_MAX:
            raise InvalidParameterError(f"finite modulation needs 1 < mu <= {MU_MAX:g}, got {self.mu}")
        if not 0.0 < self.beta <= 1.0:
            raise InvalidParameterError(f"beta must be in (0, 1], got {self.beta}")
        if not 1.0 < self.reference_mu <= MU_MAX:
            raise InvalidParameterError(f"reference_mu out of range: {self.reference_mu}")

    @property
    def asymptotic(self):
        return self.mu is None

    @property
    def effective_mu(self):
        return self.reference_mu if self.mu is None else self.mu


@dataclass(frozen=True)
class RateBreakdown:
    noise: NoisePair
    spectrum_ab: np.ndarray
    nu_cond: float
    i_ab: float
    i_e: float
    rate: float
    mu: float
    asymptotic: bool
    eve_decoupled: bool = False
    params: Optional[AttackParams] = field(default=None, compare=False)


def _check_mu(mu):
    if not 1.0 <= mu <= MU_MAX:
        raise InvalidParameterError(f"mu must be in [1, {MU_MAX:g}], got {mu}")


def _diag_and_corr(mu, tau, lam):
    # mu - tau(mu^2-1)/(2(tau mu + lam)) without the large-number cancellation
    den = 2.0 * (tau * mu + lam)
    return (tau * mu * mu + 2.0 * lam * mu + tau) / den, tau * (mu * mu - 1.0) / den


def post_relay_cm(mu, p):
    """CM of the remote modes ``a, b`` after the relay broadcasts ``gamma``.

    Detector efficiencies enter only through the noises of
    :func:`~cvrelay.attacks.noise_params`.
    """
    _check_mu(mu)
    n = noise_params(p)
    dq, cq = _diag_and_corr(mu, p.tau, n.lam)
    dp, cp = _diag_and_corr(mu, p.tau, n.lamp)
    return np.array([
        [dq, 0.0, cq, 0.0],
        [0.0, dp, 0.0, -cp],
        [cq, 0.0, dq, 0.0],
        [0.0, -cp, 0.0, dp],
    ])


def relay_input_blocks(mu, p):
    """Blocks ``(B1, B2, D)`` of the CM of the modes entering the relay."""
    _check_mu(mu)
    loss = 1.0 - p.tau
    b = (p.tau * mu + loss * p.omega) * I2
    return b, b.copy(), loss * np.diag([p.g, p.gp])


def bell_outcome_cm(mu, p):
    """CM of the Bell outcomes ``(q_-, p_+)`` rescaled by the detector efficiencies.

    A detector of efficiency ``eta`` adds ``(1 - eta)/eta`` to the variance of
    the rescaled outcome.
    """
    b1, b2, d = relay_input_blocks(mu, p)
    relay = np.block([[b1, d], [d.T, b2]])
    gam = _BELL @ relay @ _BELL.T
    gam += np.diag([(1.0 - p.eta) / p.eta, (1.0 - p.etap) / p.etap])
    return gam


def bell_condition_blocks(mu, p):
    """Post-relay CM assembled from the full block CM of remote and relay modes.

    Applies the Bell-conditioning sum over the cross blocks ``C1, C2`` and
    the reflection matrices ``X1, X2``.  Independent of :func:`post_relay_cm`,
    which it must reproduce.
    """
    gam = bell_outcome_cm(mu, p)
    s = math.sqrt(p.tau * (mu * mu - 1.0))
    zero = np.zeros((2, 2))
    C = (np.vstack([s * Z2, zero]), np.vstack([zero, s * Z2]))
    X = (_X1, _X2)
    det = gam[0, 0] * gam[1, 1] - gam[0, 1] * gam[1, 0]
    acc = np.zeros((4, 4))
    for i in range(2):
        for j in range(2):
            acc += C[i] @ (X[i].T @ gam @ X[j]) @ C[j].T
    V_ab = mu * np.eye(4)
    return V_ab - acc / (2.0 * det)


def bob_conditional_cm(mu, p):
    """Bob's CM conditioned on the relay outcome and Alice's heterodyne.

    Diagonal entries ``mu - tau(mu^2-1)/(tau(mu+1) + 2 lam)`` (and the
    ``lamp`` analogue), evaluated in the cancellation-free form
    ``(tau(mu+1) + 2 lam mu)/(tau(mu+1) + 2 lam)``.
    """
    _check_mu(mu)
    n = noise_params(p)
    t1 = p.tau * (mu + 1.0)
    return np.diag([
        (t1 + 2.0 * n.lam * mu) / (t1 + 2.0 * n.lam),
        (t1 + 2.0 * n.lamp * mu) / (t1 + 2.0 * n.lamp),
    ])


def classical_mutual_information(V):
    """Gaussian mutual information (bits) between heterodyne outcomes on ``a`` and ``b``.

    Uses the outcome CM ``(V + I)/2``; q and p are treated as independent
    channels and their informations summed.
    """
    Vc = 0.5 * (np.asarray(V, dtype=float) + np.eye(4))
    total = 0.0
    for k in (0, 1):
        va, vb, c = Vc[k, k], Vc[k + 2, k + 2], Vc[k, k + 2]
        total += 0.5 * math.log2(va * vb / (va * vb - c * c))
    return total


def _asymptotic_terms(tau, lam, lamp, mu):
    """Closed-form ``(i_ab, i_e, nu1, nu2, nu)`` at large modulation."""
    nu = math.sqrt((tau + 2.0 * lam) * (tau + 2.0 * lamp)) / tau
    i_ab = math.log2(tau * mu / (4.0 * math.sqrt((tau + lam) * (tau + lamp))))
    if lam * lamp == 0.0:
        return i_ab, 0.0, 1.0, 1.0, nu
    i_e = LOG2E2 + math.log2(math.sqrt(lam * lamp) * mu / (4.0 * tau)) - entropy_h(nu)
    return i_ab, i_e, math.sqrt(lam * mu / tau), math.sqrt(lamp * mu / tau), nu


def rate_sym(tau, lam, lamp):
    """Asymptotic rate (bits) at unit reconciliation efficiency, mu-free."""
    nu = math.sqrt((tau + 2.0 * lam) * (tau + 2.0 * lamp)) / tau
    prod = lam * lamp * (tau + lam) * (tau + lamp)
    return math.log2(tau * tau / math.sqrt(prod)) - LOG2E2 + entropy_h(nu)


def _finite(mu, p):
    V = post_relay_cm(mu, p)
    spec = symplectic_spectrum(V)
    Vb = bob_conditional_cm(mu, p)
    nu = math.sqrt(Vb[0, 0] * Vb[1, 1])
    i_e = max(sum(entropy_h(x) for x in spec) - entropy_h(nu), 0.0)
    return V, spec, nu, classical_mutual_information(V), i_e


def holevo_information(p, cfg=RateConfig()):
    """Eve's Holevo information (bits) on Alice's variable."""
    return key_rate(p, cfg).i_e


def mutual_information(p, cfg=RateConfig()):
    """Alice-Bob conditional mutual information (bits)."""
    return key_rate(p, cfg).i_ab


def key_rate(p, cfg=RateConfig()):
    """Secret-key rate ``beta * I_AB - I_E`` with all intermediates.

    In asymptotic mode ``rate`` uses the mu-free closed form (exact for
    ``beta = 1``) shifted by ``(beta - 1) * i_ab``; with zero noise on either
    quadrature Eve holds nothing and ``i_e`` is reported as 0.
    """
    noise = noise_params(p)
    if cfg.asymptotic:
        mu = cfg.reference_mu
        i_ab, i_e, nu1, nu2, nu = _asymptotic_terms(p.tau, noise.lam, noise.lamp, mu)
        decoupled = noise.lam * noise.lamp == 0.0
        if decoupled:
            rate = cfg.beta * i_ab
        else:
            rate = rate_sym(p.tau, noise.lam, noise.lamp) + (cfg.beta - 1.0) * i_ab
        spec = np.sort(np.array([nu1, nu2]))[::-1]
        return RateBreakdown(noise, spec, nu, i_ab, i_e, rate, mu, True, decoupled, p)
    mu = cfg.mu
    _, spec, nu, i_ab, i_e = _finite(mu, p)
    return RateBreakdown(noise, spec, nu, i_ab, i_e, cfg.beta * i_ab - i_e, mu, False,
                         noise.lam * noise.lamp == 0.0, p)


def _check_tau_omega(tau, omega):
    if not 0.0 < tau <= 1.0:
        raise InvalidParameterError(f"tau must be in (0, 1], got {tau}")
    if not omega >= 1.0:
        raise InvalidParameterError(f"omega must be >= 1, got {omega}")


def _closed_rate(tau, lam):
    if lam == 0.0:
        return math.inf
    return entropy_h((tau + 2.0 * lam) / tau) + math.log2(tau * tau / (lam * (tau + lam))) - LOG2E2


def rate_min_closed(tau, omega):
    """Asymptotic rate under the negative EPR attack (the minimum over attacks)."""
    _check_tau_omega(tau, omega)
    return _closed_rate(tau, (1.0 - tau) * (omega + math.sqrt(omega * omega - 1.0)))


def rate_collective_closed(tau, omega):
    """Asymptotic rate under two independent entangling cloners."""
    _check_tau_omega(tau, omega)
    return _closed_rate(tau, (1.0 - tau) * omega)


def rate_surface(tau, omega, g, gp, eta=1.0, etap=1.0, beta=1.0, reference_mu=1e6):
    """Vectorised asymptotic rate over arrays of ``(g, gp)``; invalid points are ``nan``."""
    g = np.asarray(g, dtype=float)
    gp = np.asarray(gp, dtype=float)
    loss = 1.0 - tau
    lam = loss * (omega - g) + (1.0 - eta) / eta
    lamp = loss * (omega + gp) + (1.0 - etap) / etap
    with np.errstate(divide="ignore", invalid="ignore"):
        nu = np.sqrt((tau + 2.0 * lam) * (tau + 2.0 * lamp)) / tau
        r = (np.log2(tau * tau / np.sqrt(lam * lamp * (tau + lam) * (tau + lamp)))
             - LOG2E2 + entropy_h_array(nu))
        if beta != 1.0:
            i_ab = np.log2(tau * reference_mu / (4.0 * np.sqrt((tau + lam) * (tau + lamp))))
            r = r + (beta - 1.0) * i_ab
    return np.where(_valid_mask(omega, g, gp), r, np.nan)


@dataclass(frozen=True)
class GridMinimum:
    """Result of a brute-force rate minimisation over the correlation plane."""

    grid_g: float
    grid_gp: float
    grid_rate: float
    cell: float
    g: float
    gp: float
    rate: float


def minimize_rate_grid(tau, omega, resolution=201, refine_steps=40, eta=1.0, etap=1.0):
    """Brute-force minimum of the asymptotic rate over valid ``(g, gp)``.

    Evaluates a ``resolution``-square grid on ``[-omega, omega]^2``, then
    repeatedly re-grids a window of two cells around the incumbent (zooming by
    ~10x per step) to pin down the minimiser, which generally sits on the
    boundary of the accessible region.
    """
    _check_tau_omega(tau, omega)
    axis = np.linspace(-omega, omega, resolution)
    G, GP = np.meshgrid(axis, axis, indexing="ij")
    R = rate_surface(tau, omega, G, GP, eta, etap)
    k = np.nanargmin(R)
    gi, gpi, ri = G.flat[k], GP.flat[k], R.flat[k]
    cell = axis[1] - axis[0]
    g0, gp0, r0, half = gi, gpi, ri, 2.0 * cell
    for _ in range(refine_steps):
        sub_g = np.linspace(g0 - half, g0 + half, 41)
        sub_gp = np.linspace(gp0 - half, gp0 + half, 41)
        SG, SGP = np.meshgrid(sub_g, sub_gp, indexing="ij")
        SR = rate_surface(tau, omega, SG, SGP, eta, etap)
        if np.all(np.isnan(SR)):
            break
        j = np.nanargmin(SR)
        if SR.flat[j] <= r0:
            g0, gp0, r0 = SG.flat[j], SGP.flat[j], SR.flat[j]
        half /= 10.0
        if half < 1e-15:
            break
    return GridMinimum(float(gi), float(gpi), float(ri), float(cell),
                       float(g0), float(gp0), float(r0))


def named_rate(kind, tau, omega, cfg=RateConfig(), eta=1.0, etap=1.0):
    """Shortcut: ``key_rate`` of a named attack."""
    return key_rate(AttackParams.named(kind, tau, omega, eta, etap), cfg)

