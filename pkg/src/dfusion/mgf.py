"""Analytic engine: MGF evaluation and numerical Laplace inversion.

The fusion statistic conditioned on the decision vector x is (minus) a sum
of Hermitian quadratic forms of complex Gaussian vectors, so its MGF is
``det(I + s Q(x))**(-N)`` with ``Q(x) = R(x) (I_L (x) F)``, where R(x) is
the conditional covariance of the stacked per-antenna observation/channel
pairs and F couples the two entries of each pair.  Averaging over the
decision statistics gives the unconditional MGF; a Gauss-Chebyshev rule on
a vertical Bromwich line inverts it into tail probabilities.

Two interchangeable backends are provided: closed-form determinant
polynomials (MAC/PAC/CPAC for any K, CMAC for K in {2, 3}) and a general
numeric determinant over the enumerated decision vectors.

The inversion is hybrid.  The unconditional MGF is a finite mixture of
rational functions with known poles (the reciprocal eigenvalues of each
Q(x)).  Components with distant determinant roots make the integrand
oscillate faster than an n-node rule can resolve under the tangent map, so
any component whose estimated aliasing error exceeds a small budget is
inverted exactly by residues and only the benign remainder goes through
the quadrature.  Thresholds left of the mean are handled through the
mirrored statistic so the exponential factor always decays along the
contour.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field, replace

import numpy as np

from .croc import CrocCurve
from .protocols import ProtocolKind, ProtocolScenario, placement_map

# 2x2 coupling matrix of the quadratic-form decomposition.
F2 = np.array([[0.0, -0.5], [-0.5, 0.0]])


class UnsupportedClosedFormError(Exception):
    """No closed-form determinant for this protocol/K combination."""


class PoleEvaluationError(Exception):
    """MGF evaluated at (numerically) a pole of the determinant."""


class QuadratureDivergenceError(Exception):
    """Raw inversion result outside [0, 1] beyond tolerance; the contour
    abscissa or node count is inadequate."""


# ---------------------------------------------------------------------------
# Quadratic-form construction and determinant backend
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class QuadraticFormSpec:
    """Conditional covariance R(x) and kernel Q(x) = R(x) (I_L (x) F)."""

    R: np.ndarray
    Q: np.ndarray
    L: int


def build_quadratic_form(pmap: np.ndarray, x: np.ndarray,
                         sigma2: float) -> QuadraticFormSpec:
    """R(x) from the coefficient-sharing pattern of the placement map.

    S_{ll'}[k,k'] = 1 when phases l and l' carry the same user coefficient
    in symbol slots k and k'; the (l,l') 2x2 block of R is then
    [[x'Sx + sigma2*delta_{ll'}, x'S1], [1'Sx, 1'S1]]."""
    pmap = np.asarray(pmap)
    L, K = pmap.shape
    x = np.asarray(x, dtype=float)
    if x.shape != (K,):
        raise ValueError(f"x length {x.shape} incompatible with K={K}")
    share = ((pmap[:, None, :, None] == pmap[None, :, None, :])
             & (pmap[:, None, :, None] > 0)).astype(float)
    xSx = np.einsum("abkj,k,j->ab", share, x, x)
    xS1 = np.einsum("abkj,k->ab", share, x)
    oSx = np.einsum("abkj,j->ab", share, x)
    oS1 = share.sum(axis=(2, 3))
    R = np.zeros((2 * L, 2 * L))
    R[0::2, 0::2] = xSx + sigma2 * np.eye(L)
    R[0::2, 1::2] = xS1
    R[1::2, 0::2] = oSx
    R[1::2, 1::2] = oS1
    Q = R @ np.kron(np.eye(L), F2)
    return QuadraticFormSpec(R=R, Q=Q, L=L)


def _det_batch(Q: np.ndarray, s: np.ndarray) -> np.ndarray:
    """det(I + s*Q) for an array of s values (batched LU)."""
    dim = Q.shape[0]
    mats = np.eye(dim) + s.reshape(-1, 1, 1) * Q
    return np.linalg.det(mats).reshape(s.shape)


def conditional_mgf_det(qf: QuadraticFormSpec, s, N: int):
    """Conditional MGF det(I + s Q(x))**(-N), determinant backend."""
    s = np.asarray(s, dtype=complex)
    d = _det_batch(qf.Q, s)
    if np.any(np.abs(d) < 1e-300):
        bad = np.asarray(s).ravel()[np.argmin(np.abs(d).ravel())]
        raise PoleEvaluationError(f"det(I + sQ) vanishes at s={bad}")
    out = d ** (-N)
    return out if out.shape else complex(out)


# ---------------------------------------------------------------------------
# Closed-form determinants
# ---------------------------------------------------------------------------

def _closed_det(kind: ProtocolKind, K: int, nu: int, sigma2: float, s):
    """det(I + s Q(x)) for a decision vector with nu entries equal to +1."""
    s = np.asarray(s, dtype=complex)
    s2 = s * s
    if kind is ProtocolKind.MAC:
        return 1 + (K - 2 * nu) * s + (nu * (nu - K) - K * sigma2 / 4) * s2
    if kind is ProtocolKind.PAC:
        minus = 1 + s - (sigma2 / 4) * s2
        plus = 1 - s - (sigma2 / 4) * s2
        return minus ** (K - nu) * plus ** nu
    if kind is ProtocolKind.CPAC:
        return (1 + (K - 2 * nu) * s - (K * sigma2 / 4) * s2) ** K
    if kind is ProtocolKind.CMAC and K == 2:
        return (1 + 4 * (1 - nu) * s
                + (3 * (nu - 1) ** 2 - sigma2) * s2
                + 1.5 * (nu - 1) * sigma2 * s ** 3
                + (3.0 / 16) * sigma2 ** 2 * s ** 4)
    if kind is ProtocolKind.CMAC and K == 3:
        # s^3 carries a (-1)^nu term and s^4 is sigma2/4 * (...): both
        # confirmed against the numeric determinant backend.
        c1 = 3 * (3 - 2 * nu)
        c2 = 7 * nu ** 2 - 21 * nu + 15 - 2.25 * sigma2
        c3 = ((5 * sigma2 - 3) / 2) * (2 * nu - 3) + 2.5 * (-1) ** nu
        c4 = (sigma2 / 4) * (3.75 * sigma2 - 21 - 11 * nu ** 2 + 33 * nu)
        c5 = -(7.0 / 16) * sigma2 ** 2 * (2 * nu - 3)
        c6 = -(7.0 / 64) * sigma2 ** 3
        return (1 + c1 * s + c2 * s2 + c3 * s ** 3 + c4 * s ** 4
                + c5 * s ** 5 + c6 * s ** 6)
    raise UnsupportedClosedFormError(
        f"no closed form for {kind.value} with K={K}")


def conditional_mgf_closed(kind: ProtocolKind, nu: int, s, sigma2: float,
                           K: int, N: int):
    """Conditional MGF via the closed-form determinant polynomials."""
    if not 0 <= nu <= K:
        raise ValueError(f"nu={nu} outside 0..{K}")
    out = np.asarray(_closed_det(kind, K, nu, sigma2, s)) ** (-N)
    return out if out.shape else complex(out)


def has_closed_form(kind: ProtocolKind, K: int) -> bool:
    return kind is not ProtocolKind.CMAC or K in (2, 3)


# ---------------------------------------------------------------------------
# Unconditional MGF
# ---------------------------------------------------------------------------

def _nu_collapses(kind: ProtocolKind, K: int) -> bool:
    """True when the conditional determinant depends on x only through nu
    (not the case for CMAC with K >= 4, whose relay cross terms depend on
    the cyclic autocorrelation of x)."""
    return kind is not ProtocolKind.CMAC or K <= 3


def unconditional_mgf(kind: ProtocolKind, K: int, N: int, sigma2: float,
                      p: float, s, backend: str = "closed"):
    """Total-probability average of the conditional MGF, with +1
    probability p (p_f under H0, p_d under H1)."""
    ev = MgfEvaluator(kind=kind, K=K, N=N, sigma2=sigma2, p=p,
                      backend=backend)
    return ev(s)


@dataclass(frozen=True)
class RationalTerm:
    """One mixture component of the unconditional MGF:
    weight * prod_j (1 - s/p_j)**(-N*orders_j)."""

    weight: float
    poles: np.ndarray
    orders: np.ndarray

    def __call__(self, s, N: int):
        out = np.full(np.asarray(s, dtype=complex).shape, self.weight,
                      dtype=complex)
        for p, order in zip(self.poles, self.orders):
            out = out * (1.0 - s / p) ** (-N * int(order))
        return out


@dataclass
class MgfEvaluator:
    """Callable s -> Phi_{-Lambda}(s | hypothesis) for one scenario.

    backend "closed" uses the determinant polynomials (nu-binomial sum);
    backend "det" enumerates all 2**K decision vectors with the numeric
    determinant.  "auto" picks closed where available."""

    kind: ProtocolKind
    K: int
    N: int
    sigma2: float
    p: float
    backend: str = "auto"
    _forms: list = field(default_factory=list, repr=False)
    _weights: np.ndarray | None = field(default=None, repr=False)
    _terms: dict = field(default_factory=dict, repr=False)

    def __post_init__(self):
        if not 0.0 <= self.p <= 1.0:
            raise ValueError(f"p={self.p} outside [0, 1]")
        if self.backend == "auto":
            self.backend = ("closed" if has_closed_form(self.kind, self.K)
                            else "det")
        if self.backend not in ("closed", "det"):
            raise ValueError(f"unknown backend {self.backend!r}")
        if self.backend == "closed" and not has_closed_form(self.kind, self.K):
            raise UnsupportedClosedFormError(
                f"no closed form for {self.kind.value} with K={self.K}")
        if self.backend == "det":
            pmap = placement_map(self.kind, self.K)
            weights = []
            for bits in itertools.product((-1.0, 1.0), repeat=self.K):
                x = np.array(bits)
                nplus = int((x > 0).sum())
                weights.append(self.p ** nplus
                               * (1 - self.p) ** (self.K - nplus))
                self._forms.append(build_quadratic_form(pmap, x, self.sigma2))
            self._weights = np.array(weights)

    def __call__(self, s):
        s = np.asarray(s, dtype=complex)
        out = np.zeros(s.shape, dtype=complex)
        if self.backend == "closed":
            for nu in range(self.K + 1):
                w = (math.comb(self.K, nu) * (1 - self.p) ** (self.K - nu)
                     * self.p ** nu)
                if w == 0.0:
                    continue
                out += w * np.asarray(
                    conditional_mgf_closed(self.kind, nu, s, self.sigma2,
                                           self.K, self.N))
        else:
            for w, qf in zip(self._weights, self._forms):
                if w == 0.0:
                    continue
                out += w * np.asarray(conditional_mgf_det(qf, s, self.N))
        return out if out.shape else complex(out)

    def rational_terms(self, mirror: bool = False) -> list:
        """Mixture decomposition: one RationalTerm (weight, clustered pole
        locations, multiplicities) per decision vector, independent of
        backend.  mirror=True gives the terms of s -> Phi(-s)."""
        if mirror not in self._terms:
            pmap = placement_map(self.kind, self.K)
            terms = []
            for bits in itertools.product((-1.0, 1.0), repeat=self.K):
                x = np.array(bits)
                nplus = int((x > 0).sum())
                w = self.p ** nplus * (1 - self.p) ** (self.K - nplus)
                qf = build_quadratic_form(pmap, x, self.sigma2)
                lam = np.linalg.eigvals(qf.Q)
                lam = lam[np.abs(lam) > 1e-8 * np.abs(lam).max()]
                poles = -1.0 / lam
                if mirror:
                    poles = -poles
                # cluster numerically coincident roots into multiplicities
                clusters: list[list] = []
                for pole in sorted(poles, key=lambda z: (z.real, z.imag)):
                    if clusters and abs(pole - clusters[-1][0]) < \
                            1e-6 * max(1.0, abs(pole)):
                        clusters[-1][1] += 1
                    else:
                        clusters.append([pole, 1])
                terms.append(RationalTerm(
                    weight=w,
                    poles=np.array([c[0] for c in clusters]),
                    orders=np.array([c[1] for c in clusters])))
            self._terms[mirror] = terms
        return self._terms[mirror]

    def poles(self) -> np.ndarray:
        """Pole locations s = -1/lambda over the eigenvalues of every
        Q(x) (used for contour placement, independent of backend)."""
        return np.concatenate([t.poles for t in self.rational_terms()])

    def bromwich_c(self) -> float:
        """Half the smallest positive real singularity of the conditional
        determinants; always inside the convergence strip."""
        s = self.poles()
        real_pos = s[(s.real > 1e-12)
                     & (np.abs(s.imag) <= 1e-9 * np.maximum(1.0, s.real))]
        if real_pos.size:
            return 0.5 * float(real_pos.real.min())
        any_pos = s[s.real > 1e-12]
        if any_pos.size:
            return 0.5 * float(any_pos.real.min())
        raise PoleEvaluationError("no singularity with positive real part")


def hypothesis_mgf(scenario: ProtocolScenario, hypothesis: int,
                   backend: str = "auto") -> MgfEvaluator:
    return MgfEvaluator(kind=scenario.kind, K=scenario.geometry.K,
                        N=scenario.geometry.N, sigma2=scenario.sigma_eff2,
                        p=scenario.sensor.plus_one_probability(hypothesis),
                        backend=backend)


# ---------------------------------------------------------------------------
# Numerical Laplace inversion
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class QuadratureConfig:
    """Gauss-Chebyshev inversion settings.

    nodes      total node count of the rule (even).
    c          explicit abscissa of the vertical integration line; None
               places it automatically at c_scale * 0.85 * (smallest
               positive real part over the active branch's poles).
    c_scale    multiplier on the automatic abscissa (stability checks
               compare c against 0.5 c).
    tol        tolerance for out-of-range / non-monotone results.
    split_budget  target residual quadrature error; mixture components are
               moved to exact residue inversion, largest estimated error
               first, until the remainder fits the budget.  math.inf
               disables the split (pure rule); 0 inverts everything
               exactly."""

    nodes: int = 500
    c: float | None = None
    c_scale: float = 1.0
    tol: float = 1e-6
    split_budget: float = 2e-8

    def __post_init__(self):
        if self.nodes < 2 or self.nodes % 2:
            raise ValueError(f"nodes must be even and >= 2 (got {self.nodes})")
        if self.c is not None and self.c <= 0:
            raise ValueError(f"c must be positive (got {self.c})")
        if self.c_scale <= 0:
            raise ValueError(f"c_scale must be positive (got {self.c_scale})")
        if self.split_budget < 0:
            raise ValueError("split_budget must be >= 0 "
                             f"(got {self.split_budget})")


def _chebyshev_nodes(c: float, nodes: int):
    k = np.arange(1, nodes // 2 + 1)
    tau = np.tan((2 * k - 1) * np.pi / (2 * nodes))
    return c * (1.0 + 1j * tau), tau


def gauss_chebyshev_tail(mgf, gammas, c: float, nodes: int) -> np.ndarray:
    """Plain Gauss-Chebyshev estimate of (1/2 pi j) int Phi(s) e^(-gamma s)
    / s ds along Re s = c, vectorized over the threshold grid."""
    gammas = np.atleast_1d(np.asarray(gammas, dtype=float))
    s, tau = _chebyshev_nodes(c, nodes)
    phi = np.asarray(mgf(s))
    psi = phi[None, :] * np.exp(-gammas[:, None] * s[None, :])
    return (psi.real + tau[None, :] * psi.imag).sum(axis=1) / nodes


def _term_exact_tail(term: RationalTerm, N: int, gamma: float,
                     c: float) -> float:
    """Exact (1/2 pi j) int F(s) e^(-gamma s) / s ds along Re s = c for one
    rational mixture component, as minus the sum of residues right of the
    contour (the exponential decays when the contour closes rightward for
    gamma >= 0)."""
    total = 0.0 + 0.0j
    for idx, (p, order) in enumerate(zip(term.poles, term.orders)):
        if p.real <= c:
            continue
        M = N * int(order)
        # Taylor series of (s-p)^M F(s) e^(-gamma s) / s about p; the
        # residue is its coefficient of (s-p)^(M-1).
        series = np.zeros(M, dtype=complex)
        series[0] = term.weight * (-p) ** M
        for j, (pj, oj) in enumerate(zip(term.poles, term.orders)):
            if j == idx:
                continue
            Mj = N * int(oj)
            base = (1.0 - p / pj) ** (-Mj)
            fac = np.array([base * math.comb(Mj + k - 1, k)
                            * (pj - p) ** (-float(k)) for k in range(M)],
                           dtype=complex)
            series = np.convolve(series, fac)[:M]
        fac = np.array([np.exp(-gamma * p) * (-gamma) ** k
                        / math.factorial(k) for k in range(M)], dtype=complex)
        series = np.convolve(series, fac)[:M]
        fac = np.array([(1.0 / p) * (-1.0 / p) ** k for k in range(M)],
                       dtype=complex)
        series = np.convolve(series, fac)[:M]
        total += series[M - 1]
    return float(-total.real)


def _aliasing_estimates(terms, N: int, gamma_max: float, c: float,
                        nodes: int) -> np.ndarray:
    """Per-component estimate of the quadrature's unresolved-tail error:
    the tangent map resolves oscillations only out to
    tau* ~ sqrt(nodes / (gamma c)); beyond that the component contributes
    roughly the integral of its algebraic tail."""
    tau_star = 2.0 * nodes / np.pi
    if gamma_max * c > 0:
        tau_star = min(tau_star, math.sqrt(nodes / (gamma_max * c)))
    ests = []
    for t in terms:
        m = N * int(t.orders.sum())
        lead = t.weight * float(np.prod(np.abs(t.poles) ** (N * t.orders)))
        ex = max(m - 2, 1)
        ests.append(lead * c ** (-float(m)) * tau_star ** (-float(ex))
                    / (ex * np.pi))
    return np.asarray(ests)


def _branch_abscissa(terms, quad: QuadratureConfig) -> float:
    if quad.c is not None:
        return quad.c * quad.c_scale
    re = np.concatenate([t.poles for t in terms]).real
    pos = re[re > 1e-9]
    if not pos.size:
        raise PoleEvaluationError("no singularity with positive real part")
    return quad.c_scale * 0.85 * float(pos.min())


def _branch_tail(evaluator: MgfEvaluator, gammas: np.ndarray, mirror: bool,
                 quad: QuadratureConfig) -> np.ndarray:
    """Hybrid tail integral for thresholds of one sign: exact residues for
    stiff components, Gauss-Chebyshev for the remainder."""
    terms = evaluator.rational_terms(mirror=mirror)
    c = _branch_abscissa(terms, quad)
    phi = (lambda s: evaluator(-s)) if mirror else evaluator
    ests = _aliasing_estimates(terms, evaluator.N, float(gammas.max()), c,
                               quad.nodes)
    order = np.argsort(ests)[::-1]
    stiff = []
    remaining = float(ests.sum())
    for i in order:
        if remaining <= quad.split_budget:
            break
        stiff.append(int(i))
        remaining -= float(ests[i])

    exact = np.zeros(gammas.shape)
    kept = []
    for i in stiff:
        term = terms[i]
        vals = np.array([_term_exact_tail(term, evaluator.N, g, c)
                         for g in gammas])
        # fall back to quadrature if the residue arithmetic misbehaves
        if (np.all(np.isfinite(vals)) and np.all(vals >= -1e-9)
                and np.all(vals <= term.weight + 1e-9)):
            kept.append(i)
            exact += vals
    if kept:
        subtracted = phi
        phi = lambda s, _inner=subtracted: (
            np.asarray(_inner(s))
            - sum(terms[i](s, evaluator.N) for i in kept))
    return gauss_chebyshev_tail(phi, gammas, c, quad.nodes) + exact


def tail_probabilities(mgf, gammas, quad: QuadratureConfig = QuadratureConfig()
                       ) -> np.ndarray:
    """Pr(Lambda > gamma) for an array of thresholds.

    An MgfEvaluator goes through the hybrid residue/quadrature path with a
    per-sign branch: thresholds left of zero are mapped to lower-tail
    integrals of the mirrored statistic so the Bromwich exponential decays
    on the contour.  A bare MGF callable (no pole information) is
    integrated with the plain rule and requires an explicit abscissa."""
    gammas = np.atleast_1d(np.asarray(gammas, dtype=float))
    raw = np.empty(gammas.shape)
    if isinstance(mgf, MgfEvaluator):
        upper = gammas >= 0.0
        if np.any(upper):
            raw[upper] = _branch_tail(mgf, gammas[upper], False, quad)
        if np.any(~upper):
            raw[~upper] = 1.0 - _branch_tail(mgf, -gammas[~upper], True,
                                             quad)
    else:
        if quad.c is None:
            raise ValueError("quad.c required for a bare MGF callable")
        raw = gauss_chebyshev_tail(mgf, gammas, quad.c * quad.c_scale,
                                   quad.nodes)
    if np.any(raw < -quad.tol) or np.any(raw > 1.0 + quad.tol):
        worst = raw[np.argmax(np.maximum(-raw, raw - 1.0))]
        raise QuadratureDivergenceError(
            f"raw tail probability {worst} outside [0, 1] "
            f"(nodes={quad.nodes})")
    return np.clip(raw, 0.0, 1.0)


def tail_probability(mgf, gamma: float,
                     quad: QuadratureConfig = QuadratureConfig()) -> float:
    return float(tail_probabilities(mgf, [gamma], quad)[0])


def _isotonic_decreasing(q: np.ndarray, tol: float) -> np.ndarray:
    """Clamp quadrature-level monotonicity violations; anything larger is
    a genuine failure and raises."""
    out = q.copy()
    for i in range(1, out.size):
        if out[i] > out[i - 1]:
            if out[i] - out[i - 1] > tol:
                raise QuadratureDivergenceError(
                    f"non-monotone tail probabilities beyond tolerance: "
                    f"{out[i - 1]} -> {out[i]}")
            out[i] = out[i - 1]
    return out


def analytic_croc(scenario: ProtocolScenario, thresholds,
                  quad: QuadratureConfig = QuadratureConfig(),
                  backend: str = "auto") -> CrocCurve:
    """CROC from the analytic engine: tail probabilities of the fusion
    statistic under both hypotheses over a threshold grid."""
    thresholds = np.asarray(thresholds, dtype=float)
    if thresholds.size == 0:
        raise ValueError("empty threshold grid")
    qs = []
    for hyp in (0, 1):
        ev = hypothesis_mgf(scenario, hyp, backend=backend)
        q = tail_probabilities(ev, thresholds, quad)
        qs.append(_isotonic_decreasing(q, quad.tol))
    meta = {"scenario": scenario, "nodes": quad.nodes,
            "c": quad.c, "backend": backend}
    return CrocCurve(thresholds=thresholds, q_f=qs[0], q_d=qs[1],
                     engine="analytic", meta=meta)


# ---------------------------------------------------------------------------
# Observation bound
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ObservationBoundPoints:
    """Counting-rule performance over a perfect reporting channel, one
    point per discrete vote threshold g in 0..K+1."""

    g: np.ndarray
    q_f: np.ndarray
    q_m: np.ndarray


def observation_bound(K: int, p_f: float, p_d: float) -> ObservationBoundPoints:
    """Binomial tail pairs of the perfect-channel counting rule."""
    if not (0.0 <= p_f <= 1.0 and 0.0 <= p_d <= 1.0):
        raise ValueError("probabilities must lie in [0, 1]")
    gs = np.arange(K + 2)
    qf = np.array([
        sum(math.comb(K, nu) * p_f ** nu * (1 - p_f) ** (K - nu)
            for nu in range(g, K + 1))
        for g in gs])
    qm = np.array([
        sum(math.comb(K, nu) * p_d ** nu * (1 - p_d) ** (K - nu)
            for nu in range(0, g))
        for g in gs])
    return ObservationBoundPoints(g=gs, q_f=qf, q_m=qm)


def with_nodes(quad: QuadratureConfig, nodes: int) -> QuadratureConfig:
    return replace(quad, nodes=nodes)
