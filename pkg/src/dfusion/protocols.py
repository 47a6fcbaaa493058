"""Frame geometry, scaling and equivalent-channel construction.

Four reporting-channel protocols are supported:

* MAC   -- all users transmit simultaneously (interfering, non-cooperative),
* PAC   -- one user per time slot (orthogonal, non-cooperative),
* CMAC  -- MAC plus decode-and-forward relaying of the partners' decisions,
* CPAC  -- PAC plus decode-and-forward relaying.

Everything downstream (both the Monte Carlo and the analytic engine)
operates on the normalized model: the per-protocol scaling factor is folded
into an effective noise variance ``sigma_eff2 = sigma_w2 / alpha**2`` so the
signal part always has unit gain.  Rescaling the statistic by the (positive)
scaling factor is a monotone threshold reparametrization and leaves the
CROC unchanged.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from fractions import Fraction

import numpy as np


class ProtocolKind(str, Enum):
    MAC = "MAC"
    PAC = "PAC"
    CMAC = "CMAC"
    CPAC = "CPAC"

    @property
    def cooperative(self) -> bool:
        return self in (ProtocolKind.CMAC, ProtocolKind.CPAC)

    @property
    def orthogonal(self) -> bool:
        return self in (ProtocolKind.PAC, ProtocolKind.CPAC)


class PowerConstraint(str, Enum):
    UNIT_POWER = "power"
    UNIT_ENERGY = "energy"


@dataclass(frozen=True)
class FrameGeometry:
    """Per-frame dimensions of a protocol: K users, N receive antennas,
    L phases, q transmitting phases per user, model size M = L*N and
    spectral efficiency eta = K/L (kept exact as a Fraction)."""

    K: int
    N: int
    L: int
    q: int
    M: int
    eta: Fraction


@dataclass(frozen=True)
class NoiseBudget:
    """Noise bookkeeping for one scenario (all linear quantities)."""

    N_o: float        # effective noise variance
    sigma_w2: float   # equivalent noise variance N_o / eta
    T: float          # single-phase duration
    snr: float        # linear SNR
    snr_eq: float     # equivalent SNR, eta * snr


@dataclass(frozen=True)
class LocalSensor:
    """Local sensing quality: per-user false-alarm and detection
    probabilities, plus hypothesis priors (used only by Bayes
    threshold selection)."""

    p_f: float = 0.05
    p_d: float = 0.5
    p_0: float = 0.5
    p_1: float = 0.5

    def __post_init__(self):
        for name in ("p_f", "p_d", "p_0", "p_1"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise ValueError(f"{name}={v} outside [0, 1]")
        if abs(self.p_0 + self.p_1 - 1.0) > 1e-12:
            raise ValueError("priors p_0 + p_1 must sum to 1")

    def plus_one_probability(self, hypothesis: int) -> float:
        return self.p_d if hypothesis == 1 else self.p_f


@dataclass(frozen=True)
class ProtocolScenario:
    """One fully-specified experiment: protocol + geometry + noise + sensor.

    ``sigma_eff2`` is the noise variance of the normalized (unit-gain)
    model actually consumed by both engines."""

    kind: ProtocolKind
    geometry: FrameGeometry
    constraint: PowerConstraint
    noise: NoiseBudget
    sensor: LocalSensor
    alpha: float
    sigma_eff2: float


def frame_geometry(kind: ProtocolKind, K: int, N: int) -> FrameGeometry:
    """Frame geometry table: L/q per protocol, M = L*N, eta = K/L."""
    if K < 1 or N < 1:
        raise ValueError(f"K and N must be positive (got K={K}, N={N})")
    if kind is ProtocolKind.MAC:
        L, q = 1, 1
    elif kind is ProtocolKind.PAC:
        L, q = K, 1
    elif kind is ProtocolKind.CMAC:
        L, q = 2 * K - 1, K
    else:
        L, q = K * K, K
    return FrameGeometry(K=K, N=N, L=L, q=q, M=L * N, eta=Fraction(K, L))


def scaling_factor(kind: ProtocolKind, constraint: PowerConstraint,
                   K: int, T: float = 1.0) -> float:
    """Per-protocol amplitude scaling enforcing unit average power
    (alpha_p) or unit transmitted energy (alpha_e) per user."""
    if K < 1 or T <= 0:
        raise ValueError(f"need K >= 1 and T > 0 (got K={K}, T={T})")
    if constraint is PowerConstraint.UNIT_POWER:
        table = {
            ProtocolKind.MAC: T,
            ProtocolKind.PAC: K * T,
            ProtocolKind.CMAC: (2 * K - 1) / K * T,
            ProtocolKind.CPAC: K * T,
        }
    else:
        table = {
            ProtocolKind.MAC: 1.0,
            ProtocolKind.PAC: 1.0,
            ProtocolKind.CMAC: 1.0 / K,
            ProtocolKind.CPAC: 1.0 / K,
        }
    return float(np.sqrt(table[kind]))


def equivalent_noise_variance(kind: ProtocolKind, K: int, N_o: float) -> float:
    """Noise variance after the spectral-efficiency normalization,
    sigma_w2 = N_o / eta."""
    if N_o <= 0:
        raise ValueError(f"N_o must be positive (got {N_o})")
    eta = frame_geometry(kind, K, 1).eta
    return float(N_o / eta)


def snr_to_noise(constraint: PowerConstraint, K: int, T: float,
                 snr: float) -> float:
    """Effective noise variance N_o realizing a target linear SNR:
    SNR_p = K*T/N_o under the power constraint, SNR_e = K/N_o under the
    energy constraint."""
    if snr <= 0:
        raise ValueError(f"snr must be positive (got {snr})")
    if constraint is PowerConstraint.UNIT_POWER:
        return K * T / snr
    return K / snr


def placement_map(kind: ProtocolKind, K: int) -> np.ndarray:
    """Symbol placement map, shape (L, K) of ints in 0..K.

    Entry (l, k) = j > 0 means user j's channel vector carries symbol k in
    phase l; 0 means an all-zero block.  Cyclic index arithmetic maps onto
    {1, ..., K} (modulo with 0 replaced by K)."""
    if K < 1:
        raise ValueError(f"K must be positive (got {K})")
    if kind is ProtocolKind.MAC:
        return np.arange(1, K + 1, dtype=int)[None, :]
    if kind is ProtocolKind.PAC:
        return np.diag(np.arange(1, K + 1, dtype=int))
    if kind is ProtocolKind.CMAC:
        rows = [np.diag(np.arange(1, K + 1, dtype=int))]
        relay = np.zeros((K - 1, K), dtype=int)
        for i in range(1, K):
            for k in range(K):
                relay[i - 1, k] = (k + i) % K + 1
        rows.append(relay)
        return np.vstack(rows)
    # CPAC: K super-blocks of K orthogonal phases; super-block i carries
    # the cyclically shifted coefficients.
    m = np.zeros((K * K, K), dtype=int)
    for i in range(K):
        for r in range(K):
            m[i * K + r, r] = (r + i) % K + 1
    return m


def draw_channel(K: int, N: int, rng: np.random.Generator,
                 size: int | None = None) -> np.ndarray:
    """Unit-power Rayleigh channel coefficients, shape (K, N) or
    (size, K, N): independent circularly symmetric standard complex
    Gaussians."""
    if K < 1 or N < 1:
        raise ValueError(f"K and N must be positive (got K={K}, N={N})")
    shape = (K, N) if size is None else (size, K, N)
    g = rng.standard_normal(shape + (2,))
    return (g[..., 0] + 1j * g[..., 1]) / np.sqrt(2.0)


def build_equivalent_channel(pmap: np.ndarray, h: np.ndarray,
                             N: int) -> np.ndarray:
    """Equivalent channel matrix H_eq (M x K) from a placement map and a
    (K, N) array of per-user channel vectors."""
    L, K = pmap.shape
    h = np.asarray(h)
    if h.shape != (K, N):
        raise ValueError(f"channel shape {h.shape} incompatible with "
                         f"K={K}, N={N}")
    hpad = np.concatenate([np.zeros((1, N), dtype=complex), h], axis=0)
    blocks = hpad[pmap]                       # (L, K, N)
    return np.transpose(blocks, (0, 2, 1)).reshape(L * N, K)


def make_scenario(kind: ProtocolKind, K: int, N: int, snr: float,
                  constraint: PowerConstraint,
                  sensor: LocalSensor = LocalSensor(),
                  T: float = 1.0) -> ProtocolScenario:
    """Assemble a scenario from a linear SNR, resolving the full noise
    chain N_o -> sigma_w2 -> sigma_eff2."""
    geom = frame_geometry(kind, K, N)
    N_o = snr_to_noise(constraint, K, T, snr)
    sigma_w2 = equivalent_noise_variance(kind, K, N_o)
    alpha = scaling_factor(kind, constraint, K, T)
    noise = NoiseBudget(N_o=N_o, sigma_w2=sigma_w2, T=T, snr=snr,
                        snr_eq=float(geom.eta * snr))
    return ProtocolScenario(kind=kind, geometry=geom, constraint=constraint,
                            noise=noise, sensor=sensor, alpha=alpha,
                            sigma_eff2=sigma_w2 / alpha ** 2)
