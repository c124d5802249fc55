"""Monte Carlo phase-space simulation of the prepare / attack / relay chain.

Every quantum fluctuation is an explicit unit-variance Gaussian term, which is
exact here because states, channels and measurements are all Gaussian.  The
recorded amplitudes ``alpha``, ``beta`` are scaled like heterodyne outcomes
on the remote EPR modes, so their CM conditioned on ``gamma`` is
``(V_ab|gamma + I) / 2``.

Rounds are generated in fixed-size chunks, chunk ``k`` drawing from its own
Philox stream keyed by ``(seed, k)``; accumulators are merged in chunk order,
so results are bit-identical for any worker count.
"""

import csv
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .attacks import AttackParams, noise_params
from .errors import InvalidParameterError, NumericFailureError
from .thresholds import resolve_workers

CHUNK = 1 << 16
MIN_ROUNDS_FOR_ESTIMATES = 10_000

# accumulator column order
COLUMNS = ("alpha_q", "alpha_p", "beta_q", "beta_p", "gamma_q", "gamma_p",
           "a_out_q", "a_out_p", "b_out_q", "b_out_p")
RECORD_COLUMNS = COLUMNS[:6]
_AB = slice(0, 4)
_G = slice(4, 6)


@dataclass(frozen=True)
class SimConfig:
    params: AttackParams
    mu: float
    rounds: int
    seed: int = 0
    chunk_size: int = CHUNK
    keep_samples: bool = False

    def __post_init__(self):
        if int(self.rounds) != self.rounds or self.rounds < 1:
            raise InvalidParameterError(f"rounds must be a positive integer, got {self.rounds}")
        if not self.mu > 1.0:
            raise InvalidParameterError(f"mu must be > 1, got {self.mu}")
        if self.chunk_size < 1:
            raise InvalidParameterError("chunk_size must be positive")
        if not 0 <= int(self.seed) < 2 ** 64:
            raise InvalidParameterError("seed must be an unsigned 64-bit integer")


@dataclass
class SampleBatch:
    """Streaming first/second moments of the recorded variables.

    ``samples`` holds the raw ``RECORD_COLUMNS`` rows when the run kept them.
    """

    count: int
    sums: np.ndarray
    outer: np.ndarray
    samples: Optional[np.ndarray] = None

    @classmethod
    def empty(cls):
        k = len(COLUMNS)
        return cls(0, np.zeros(k), np.zeros((k, k)))

    def merge(self, other):
        samples = None
        if self.samples is not None or other.samples is not None:
            parts = [s for s in (self.samples, other.samples) if s is not None]
            samples = np.concatenate(parts)
        return SampleBatch(self.count + other.count, self.sums + other.sums,
                           self.outer + other.outer, samples)

    def mean(self):
        return self.sums / self.count

    def covariance(self):
        m = self.mean()
        return self.outer / self.count - np.outer(m, m)

    def write_csv(self, path_or_file):
        if self.samples is None:
            raise InvalidParameterError("batch was simulated without keep_samples")
        own = isinstance(path_or_file, (str, bytes)) or hasattr(path_or_file, "__fspath__")
        fh = open(path_or_file, "w", newline="") if own else path_or_file
        try:
            w = csv.writer(fh)
            w.writerow(("round",) + RECORD_COLUMNS)
            for i, row in enumerate(self.samples):
                w.writerow([i] + [f"{v:.12g}" for v in row])
        finally:
            if own:
                fh.close()


def _sqrt2x2(M):
    w, U = np.linalg.eigh(M)
    return U @ np.diag(np.sqrt(np.clip(w, 0.0, None))) @ U.T


def _chunk(cfg, index, size):
    p = cfg.params
    ss = np.random.SeedSequence(int(cfg.seed), spawn_key=(index,))
    rng = np.random.Generator(np.random.Philox(ss))
    mu = cfg.mu
    amp = rng.standard_normal((size, 4)) * math.sqrt(0.5 * (mu + 1.0))
    vac = rng.standard_normal((size, 4))
    eq = rng.standard_normal((size, 2)) @ _sqrt2x2(np.array([[p.omega, p.g], [p.g, p.omega]])).T
    ep = rng.standard_normal((size, 2)) @ _sqrt2x2(np.array([[p.omega, p.gp], [p.gp, p.omega]])).T
    det = rng.standard_normal((size, 2))

    # coherent-state displacement = c * recorded amplitude, c fixed by the EB picture
    c = math.sqrt(2.0 * (mu - 1.0) / (mu + 1.0))
    modes = c * amp + vac  # q_A, p_A, q_B, p_B
    st, sl = math.sqrt(p.tau), math.sqrt(1.0 - p.tau)
    a_q = st * modes[:, 0] + sl * eq[:, 0]
    a_p = st * modes[:, 1] + sl * ep[:, 0]
    b_q = st * modes[:, 2] + sl * eq[:, 1]
    b_p = st * modes[:, 3] + sl * ep[:, 1]
    q_minus = (a_q - b_q) / math.sqrt(2.0)
    p_plus = (a_p + b_p) / math.sqrt(2.0)
    # inefficient detectors, outcomes rescaled by 1/sqrt(eta)
    q_meas = q_minus + math.sqrt((1.0 - p.eta) / p.eta) * det[:, 0]
    p_meas = p_plus + math.sqrt((1.0 - p.etap) / p.etap) * det[:, 1]
    gam = np.column_stack([q_meas, p_meas]) / math.sqrt(2.0)

    X = np.column_stack([amp, gam, a_q, a_p, b_q, b_p])
    batch = SampleBatch(size, X.sum(axis=0), X.T @ X)
    if cfg.keep_samples:
        batch.samples = X[:, :6].copy()
    return batch


def simulate(cfg, workers=None):
    """Run ``cfg.rounds`` protocol rounds and accumulate their moments.

    The result does not depend on ``workers`` (default: ``CVRELAY_THREADS``).
    """
    workers = resolve_workers(workers)
    sizes = [cfg.chunk_size] * (cfg.rounds // cfg.chunk_size)
    if cfg.rounds % cfg.chunk_size:
        sizes.append(cfg.rounds % cfg.chunk_size)
    jobs = list(enumerate(sizes))
    if workers > 1 and len(jobs) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(lambda j: _chunk(cfg, *j), jobs))
    else:
        parts = [_chunk(cfg, i, n) for i, n in jobs]
    out = SampleBatch.empty()
    for part in parts:
        out = out.merge(part)
    return out


@dataclass(frozen=True)
class ConditionalCM:
    """Residual CM of ``(alpha_q, alpha_p, beta_q, beta_p)`` given ``gamma``."""

    cm: np.ndarray
    stderr: np.ndarray
    count: int


def _check_rounds(batch):
    if batch.count < MIN_ROUNDS_FOR_ESTIMATES:
        raise InvalidParameterError(
            f"need at least {MIN_ROUNDS_FOR_ESTIMATES} rounds, batch has {batch.count}"
        )


def empirical_conditional_cm(batch):
    """Linear-regression residual covariance of Alice/Bob records on ``gamma``.

    Standard errors use the Gaussian large-sample variance of a covariance
    estimate, ``(S_ii S_jj + S_ij^2) / N``.
    """
    _check_rounds(batch)
    S = batch.covariance()
    Sgg = S[_G, _G]
    if np.linalg.det(Sgg) <= 0.0:
        raise NumericFailureError("degenerate relay outcome covariance")
    cm = S[_AB, _AB] - S[_AB, _G] @ np.linalg.solve(Sgg, S[_G, _AB])
    d = np.diag(cm)
    se = np.sqrt((np.outer(d, d) + cm * cm) / batch.count)
    return ConditionalCM(cm, se, batch.count)


@dataclass(frozen=True)
class MIEstimate:
    bits: float
    stderr: float


def _quadrature_mi(rhos, n):
    rhos = np.asarray(rhos)
    bits = float(np.sum(-0.5 * np.log2(1.0 - rhos ** 2)))
    se = float(np.sqrt(np.sum(rhos ** 2)) / (math.log(2.0) * math.sqrt(n)))
    return MIEstimate(bits, se)


def empirical_mutual_information(batch):
    """Gaussian plug-in estimates of ``I(alpha; beta | gamma)`` and ``I(alpha; gamma)``.

    Returns ``(conditional, alpha_gamma)``; each is the sum of independent q
    and p contributions, with a delta-method standard error.
    """
    ccm = empirical_conditional_cm(batch).cm
    cond = [ccm[k, k + 2] / math.sqrt(ccm[k, k] * ccm[k + 2, k + 2]) for k in (0, 1)]
    S = batch.covariance()
    ag = [S[k, 4 + k] / math.sqrt(S[k, k] * S[4 + k, 4 + k]) for k in (0, 1)]
    return _quadrature_mi(cond, batch.count), _quadrature_mi(ag, batch.count)


def analytic_alpha_gamma_mi(mu, p):
    """Exact ``I(alpha; gamma)`` in bits for the simulated model.

    Per quadrature the squared correlation is ``tau (mu - 1) / (2 (tau mu + lam))``,
    which tends to 1/2 (half a bit) at large ``mu`` and ``tau = 1``.
    """
    n = noise_params(p)
    total = 0.0
    for lam in (n.lam, n.lamp):
        rho2 = p.tau * (mu - 1.0) / (2.0 * (p.tau * mu + lam))
        total += -0.5 * math.log2(1.0 - rho2)
    return total
