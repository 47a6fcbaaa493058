"""MGF construction: quadratic forms, closed forms vs determinant backend,
mixture decomposition and the observation bound."""

import itertools

import numpy as np
import pytest
from scipy.stats import binom

from dfusion import (MgfEvaluator, PoleEvaluationError, ProtocolKind,
                     RationalTerm, UnsupportedClosedFormError,
                     build_quadratic_form, conditional_mgf_closed,
                     conditional_mgf_det, observation_bound,
                     unconditional_mgf)
from dfusion.protocols import placement_map

ALL_KINDS = list(ProtocolKind)


def closed_cases():
    for kind in (ProtocolKind.MAC, ProtocolKind.PAC, ProtocolKind.CPAC):
        for K in range(1, 7):
            yield kind, K
    for K in (2, 3):
        yield ProtocolKind.CMAC, K


def test_closed_matches_det_backend():
    rng = np.random.default_rng(0)
    for kind, K in closed_cases():
        pmap = placement_map(kind, K)
        for sigma2 in (0.1, 1.0, 10.0):
            s = (rng.uniform(-0.3, 0.3, 8)
                 + 1j * rng.uniform(-3.0, 3.0, 8))
            for bits in itertools.product((-1.0, 1.0), repeat=K):
                x = np.array(bits)
                nu = int((x > 0).sum())
                qf = build_quadratic_form(pmap, x, sigma2)
                det_val = conditional_mgf_det(qf, s, 2)
                closed_val = conditional_mgf_closed(kind, nu, s, sigma2,
                                                    K, 2)
                np.testing.assert_allclose(closed_val, det_val,
                                           rtol=5e-9, atol=1e-12)


def test_unconditional_mgf_backends_agree():
    rng = np.random.default_rng(1)
    s = rng.uniform(0.0, 0.2, 6) + 1j * rng.uniform(-2.0, 2.0, 6)
    for kind, K in ((ProtocolKind.MAC, 3), (ProtocolKind.CMAC, 2),
                    (ProtocolKind.CPAC, 2)):
        a = unconditional_mgf(kind, K, 2, 0.5, 0.3, s, backend="closed")
        b = unconditional_mgf(kind, K, 2, 0.5, 0.3, s, backend="det")
        np.testing.assert_allclose(a, b, rtol=1e-9)


def test_mgf_at_zero_is_one():
    for kind in ALL_KINDS:
        for K in (2, 3):
            for backend in ("closed", "det"):
                if backend == "closed" and kind is ProtocolKind.CMAC \
                        and K not in (2, 3):
                    continue
                ev = MgfEvaluator(kind=kind, K=K, N=2, sigma2=0.7, p=0.4,
                                  backend=backend)
                assert abs(ev(0.0) - 1.0) < 1e-12


def test_cmac_large_K_closed_form_unavailable():
    with pytest.raises(UnsupportedClosedFormError):
        conditional_mgf_closed(ProtocolKind.CMAC, 1, 0.1, 1.0, 4, 2)
    with pytest.raises(UnsupportedClosedFormError):
        MgfEvaluator(kind=ProtocolKind.CMAC, K=4, N=2, sigma2=1.0, p=0.5,
                     backend="closed")
    # auto silently falls back to the determinant backend
    ev = MgfEvaluator(kind=ProtocolKind.CMAC, K=4, N=2, sigma2=1.0, p=0.5,
                      backend="auto")
    assert ev.backend == "det"
    assert abs(ev(0.0) - 1.0) < 1e-12


def test_evaluator_input_validation():
    with pytest.raises(ValueError):
        MgfEvaluator(kind=ProtocolKind.MAC, K=2, N=2, sigma2=1.0, p=1.5)
    with pytest.raises(ValueError):
        MgfEvaluator(kind=ProtocolKind.MAC, K=2, N=2, sigma2=1.0, p=0.5,
                     backend="magic")
    with pytest.raises(ValueError):
        conditional_mgf_closed(ProtocolKind.MAC, 3, 0.1, 1.0, 2, 2)


def test_rational_terms_reconstruct_mgf():
    rng = np.random.default_rng(2)
    s = rng.uniform(0.0, 0.15, 10) + 1j * rng.uniform(-5.0, 5.0, 10)
    for kind, K in ((ProtocolKind.MAC, 2), (ProtocolKind.PAC, 3),
                    (ProtocolKind.CMAC, 3), (ProtocolKind.CPAC, 2)):
        ev = MgfEvaluator(kind=kind, K=K, N=2, sigma2=0.8, p=0.35)
        terms = ev.rational_terms()
        assert all(isinstance(t, RationalTerm) for t in terms)
        assert len(terms) == 2 ** K
        total = sum(t(s, ev.N) for t in terms)
        np.testing.assert_allclose(total, ev(s), rtol=1e-8, atol=1e-12)
        # weights of the decision-vector mixture sum to one
        assert sum(t.weight for t in terms) == pytest.approx(1.0)
        # mirrored terms have negated poles
        mirrored = ev.rational_terms(mirror=True)
        for t, tm in zip(terms, mirrored):
            np.testing.assert_allclose(np.sort_complex(tm.poles),
                                       np.sort_complex(-t.poles),
                                       rtol=1e-5, atol=1e-8)


def test_bromwich_c_inside_strip():
    ev = MgfEvaluator(kind=ProtocolKind.MAC, K=2, N=2, sigma2=0.5, p=0.5)
    c = ev.bromwich_c()
    poles = ev.poles()
    pos = poles.real[poles.real > 0]
    assert 0 < c < pos.min()


def test_det_backend_pole_detection():
    # an exactly singular I + sQ must be flagged, not silently inverted
    from dfusion import QuadraticFormSpec
    Q = np.array([[-1.0, 0.0], [0.0, 0.0]])
    qf = QuadraticFormSpec(R=np.eye(2), Q=Q, L=1)
    with pytest.raises(PoleEvaluationError):
        conditional_mgf_det(qf, np.array([1.0 + 0.0j]), 2)


def test_quadratic_form_structure():
    pmap = placement_map(ProtocolKind.MAC, 2)
    x = np.array([1.0, -1.0])
    sigma2 = 0.5
    qf = build_quadratic_form(pmap, x, sigma2)
    # MAC, L=1: each slot carries a distinct user, so the sharing matrix
    # is the identity and R = [[x'x + sigma2, x'1], [1'x, 1'1]]
    sx = x.sum()
    np.testing.assert_allclose(qf.R, [[2.0 + sigma2, sx], [sx, 2.0]])
    with pytest.raises(ValueError):
        build_quadratic_form(pmap, np.ones(3), sigma2)


def test_observation_bound_matches_binomial_tails():
    for K, p_f, p_d in ((2, 0.05, 0.5), (3, 0.05, 0.5), (5, 0.2, 0.8)):
        b = observation_bound(K, p_f, p_d)
        np.testing.assert_array_equal(b.g, np.arange(K + 2))
        np.testing.assert_allclose(b.q_f, binom.sf(b.g - 1, K, p_f),
                                   atol=1e-14)
        np.testing.assert_allclose(b.q_m, binom.cdf(b.g - 1, K, p_d),
                                   atol=1e-14)
        # endpoints: always-declare and never-declare rules
        assert b.q_f[0] == pytest.approx(1.0, abs=1e-12)
        assert b.q_m[0] == 0.0
        assert b.q_f[K + 1] == 0.0
        assert b.q_m[K + 1] == pytest.approx(1.0, abs=1e-12)
    with pytest.raises(ValueError):
        observation_bound(2, -0.1, 0.5)
