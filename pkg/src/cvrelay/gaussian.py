"""Covariance-matrix algebra for Gaussian states in shot-noise units.

Matrices are plain ``numpy`` arrays with interleaved quadrature ordering
``(q1, p1, ..., qn, pn)`` and vacuum variance 1.  The symplectic form is the
direct sum of ``[[0, 1], [-1, 0]]`` blocks.
"""

import math

import numpy as np

from .attacks import validate
from .errors import InvalidParameterError, NumericFailureError

SYMMETRY_RTOL = 1e-12
# spectrum values in [1 - CLAMP_SOFT, 1) are snapped to 1; below 1 - CLAMP_HARD
# the state is unphysical
CLAMP_SOFT = 1e-9
CLAMP_HARD = 1e-6

I2 = np.eye(2)
Z2 = np.diag([1.0, -1.0])


def symplectic_form(n):
    """Return the 2n x 2n symplectic form for ``n`` modes."""
    return np.kron(np.eye(n), np.array([[0.0, 1.0], [-1.0, 0.0]]))


def _as_cm(V):
    V = np.asarray(V, dtype=float)
    if V.ndim != 2 or V.shape[0] != V.shape[1] or V.shape[0] % 2:
        raise InvalidParameterError(f"covariance matrix must be 2n x 2n, got {V.shape}")
    scale = max(np.max(np.abs(V)), 1.0)
    if np.max(np.abs(V - V.T)) > SYMMETRY_RTOL * scale:
        raise InvalidParameterError("covariance matrix is not symmetric")
    return V


def epr_cm(mu):
    """Two-mode squeezed vacuum with local variance ``mu``.

    Diagonal blocks ``mu * I``, off-diagonal blocks ``sqrt(mu^2 - 1) * Z``.
    """
    if not mu >= 1:
        raise InvalidParameterError(f"mu must be >= 1, got {mu}")
    c = math.sqrt(mu * mu - 1.0)
    return np.block([[mu * I2, c * Z2], [c * Z2, mu * I2]])


def two_mode_attack_cm(omega, g, gp):
    """CM of Eve's ancillas in symmetric normal form.

    Diagonal blocks ``omega * I``, off-diagonal block ``diag(g, gp)``.
    """
    if not validate(omega, g, gp):
        raise InvalidParameterError(
            f"unphysical attack correlations (omega={omega}, g={g}, gp={gp})"
        )
    G = np.diag([g, gp]).astype(float)
    return np.block([[omega * I2, G], [G, omega * I2]])


def symplectic_spectrum(V):
    """Symplectic eigenvalues of ``V``, sorted in descending order.

    Computed as the moduli of the eigenvalues of ``i * Omega @ V``; each
    appears twice (as ``+nu`` and ``-nu``) and is reported once.
    """
    V = _as_cm(V)
    n = V.shape[0] // 2
    try:
        ev = np.linalg.eigvals(1j * symplectic_form(n) @ V)
    except np.linalg.LinAlgError as exc:
        raise NumericFailureError(f"eigen-solver failed: {exc}") from exc
    if not np.all(np.isfinite(ev)):
        raise NumericFailureError("non-finite eigenvalues")
    mods = np.sort(np.abs(ev))[::-1]
    return mods[::2].copy()


def is_physical(V):
    """True iff every symplectic eigenvalue is at least ``1 - 1e-9``."""
    return bool(np.all(symplectic_spectrum(V) >= 1.0 - CLAMP_SOFT))


def entropy_h(x):
    """Entropy in bits of a thermal mode with symplectic eigenvalue ``x``.

    ``h(x) = (x+1)/2 log2((x+1)/2) - (x-1)/2 log2((x-1)/2)``, with ``h(1) = 0``.
    Inputs within 1e-6 below 1 are treated as rounding noise and clamped.
    """
    x = float(x)
    if not x >= 1.0 - CLAMP_HARD:
        raise InvalidParameterError(f"symplectic eigenvalue {x} < 1 (unphysical)")
    if x <= 1.0:
        return 0.0
    u = 0.5 * (x + 1.0)
    v = 0.5 * (x - 1.0)
    return u * math.log2(u) - v * math.log2(v)


def entropy_h_array(x):
    """Vectorised :func:`entropy_h` for ``numpy`` input (no range checks)."""
    x = np.maximum(np.asarray(x, dtype=float), 1.0)
    u = 0.5 * (x + 1.0)
    v = 0.5 * (x - 1.0)
    with np.errstate(divide="ignore", invalid="ignore"):
        vlog = np.where(v > 0.0, v * np.log2(np.where(v > 0.0, v, 1.0)), 0.0)
    return u * np.log2(u) - vlog


def von_neumann_entropy(V):
    """Von Neumann entropy (bits) of the Gaussian state with CM ``V``."""
    return float(sum(entropy_h(nu) for nu in symplectic_spectrum(V)))


def _inv2(M):
    a, b, c, d = M[0, 0], M[0, 1], M[1, 0], M[1, 1]
    det = a * d - b * c
    if not np.isfinite(det) or det == 0.0:
        raise NumericFailureError("singular 2x2 block in conditioning")
    return np.array([[d, -b], [-c, a]]) / det


def condition_on_heterodyne(V, measured_mode=0):
    """Condition ``V`` on a heterodyne measurement of one mode.

    With ``A`` the measured mode's block, ``B`` the rest and ``C`` their
    cross-correlations, returns ``B - C^T (A + I)^{-1} C``.
    """
    V = _as_cm(V)
    n = V.shape[0] // 2
    if not 0 <= measured_mode < n:
        raise InvalidParameterError(f"mode index {measured_mode} out of range for {n} modes")
    if n < 2:
        raise InvalidParameterError("need at least two modes to condition")
    m = slice(2 * measured_mode, 2 * measured_mode + 2)
    rest = [i for i in range(2 * n) if i not in (2 * measured_mode, 2 * measured_mode + 1)]
    A = V[m, m]
    B = V[np.ix_(rest, rest)]
    C = V[m][:, rest]
    out = B - C.T @ _inv2(A + I2) @ C
    return 0.5 * (out + out.T)
