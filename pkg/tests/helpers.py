"""Independent reference routes shared by several test modules."""

import numpy as np

from cvrelay.attacks import AttackParams, validate
from cvrelay.gaussian import symplectic_spectrum, two_mode_attack_cm


def ppt_separable(omega, g, gp):
    """Independent route: partial transpose flips the sign of p on E2."""
    V = two_mode_attack_cm(omega, g, gp)
    P = np.diag([1.0, 1.0, 1.0, -1.0])
    return symplectic_spectrum(P @ V @ P).min() >= 1.0 - 1e-9


def literal_post_relay(mu, tau, lam, lamp):
    """The post-relay CM typed in directly, no cancellation control."""
    k = tau * (mu * mu - 1) / 2
    x, y = 1 / (tau * mu + lam), 1 / (tau * mu + lamp)
    M = np.array([[x, 0, -x, 0], [0, y, 0, y], [-x, 0, x, 0], [0, y, 0, y]])
    return mu * np.eye(4) - k * M


def random_params(rng, eta_range=(0.5, 1.0)):
    while True:
        omega = rng.uniform(1.0, 4.0)
        g, gp = rng.uniform(-omega, omega, size=2)
        if validate(omega, g, gp):
            return AttackParams(rng.uniform(0.05, 1.0), omega, g, gp,
                                rng.uniform(*eta_range), rng.uniform(*eta_range))
