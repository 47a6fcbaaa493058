"""Acceptance suite: eight end-to-end criteria for the two CROC engines.

Each test prints exactly one ``criterion N: PASS/FAIL`` line with the
measured figure of merit before asserting at the stated tolerance.
"""

import itertools
import math

import numpy as np
import pytest

from dfusion import (MgfEvaluator, PowerConstraint, ProtocolKind,
                     QuadratureConfig, SeedSpec, analytic_croc,
                     build_quadratic_form, conditional_mgf_closed,
                     estimate_croc, frame_geometry, hypothesis_mgf,
                     make_scenario, observation_bound, qm_at_qf,
                     simulate_statistics, tail_probabilities, threshold_grid)
from dfusion.protocols import placement_map

SEED = 12345
TRIALS = 100_000
GRID_POINTS = 31
P_F, P_D = 0.05, 0.5

KINDS = list(ProtocolKind)
CONSTRAINTS = [PowerConstraint.UNIT_POWER, PowerConstraint.UNIT_ENERGY]
C1_CONFIGS = [(kind, K, 2, snr_db, con)
              for kind in KINDS
              for K in (2, 3)
              for snr_db in (0.0, 10.0)
              for con in CONSTRAINTS]


def _make(kind, K, N, snr_db, con):
    return make_scenario(kind, K, N, 10.0 ** (snr_db / 10.0), con)


def _cfg_id(cfg):
    kind, K, N, snr_db, con = cfg
    return f"{kind.value}_K{K}_N{N}_snr{snr_db:g}dB_{con.value}"


def _mc_tolerance(q):
    return 4.0 * np.sqrt(q * (1.0 - q) / TRIALS) + 1e-4


def _report(n, ok, detail):
    print(f"criterion {n}: {'PASS' if ok else 'FAIL'} ({detail})")


@pytest.fixture(scope="module")
def c1_data():
    data = {}
    for cfg in C1_CONFIGS:
        sc = _make(*cfg)
        seed = SeedSpec(SEED)
        grid = threshold_grid(sc, seed, points=GRID_POINTS)
        mc = estimate_croc(sc, grid, TRIALS, seed)
        analytic = {}
        for label, quad in (
                ("n500", QuadratureConfig(nodes=500)),
                ("n1000", QuadratureConfig(nodes=1000)),
                ("chalf", QuadratureConfig(nodes=500, c_scale=0.5))):
            analytic[label] = [
                tail_probabilities(hypothesis_mgf(sc, hyp), grid, quad)
                for hyp in (0, 1)]
        data[cfg] = {"scenario": sc, "grid": grid, "mc": mc,
                     "analytic": analytic}
    return data


def test_criterion_1_engine_agreement(c1_data):
    worst, where = 0.0, ""
    for cfg, d in c1_data.items():
        mc_q = [d["mc"].q_f, d["mc"].q_d]
        for hyp in (0, 1):
            an = d["analytic"]["n500"][hyp]
            ratio = np.abs(mc_q[hyp] - an) / _mc_tolerance(an)
            i = int(np.argmax(ratio))
            if ratio[i] > worst:
                worst, where = float(ratio[i]), f"{_cfg_id(cfg)} H{hyp}"
    ok = worst <= 1.0
    _report(1, ok, f"max |q_mc - q_an|/tol = {worst:.3f} at {where}")
    assert ok


def test_criterion_2_closed_vs_det_backend():
    cases = [(kind, K)
             for kind in (ProtocolKind.MAC, ProtocolKind.PAC,
                          ProtocolKind.CPAC)
             for K in range(1, 7)] + [(ProtocolKind.CMAC, 2),
                                      (ProtocolKind.CMAC, 3)]
    rng = np.random.default_rng(2024)
    worst, where = 0.0, ""
    for kind, K in cases:
        for sigma2 in (0.1, 1.0, 10.0):
            det_ev = MgfEvaluator(kind=kind, K=K, N=2, sigma2=sigma2,
                                  p=0.5, backend="det")
            c = det_ev.bromwich_c()
            s = c * (1.0 + 1j * rng.uniform(-30.0, 30.0, 100))
            closed_sum = np.zeros(s.shape, dtype=complex)
            scale = np.zeros(s.shape)
            for nu in range(K + 1):
                w = math.comb(K, nu) * 0.5 ** K
                val = w * np.asarray(
                    conditional_mgf_closed(kind, nu, s, sigma2, K, 2))
                closed_sum += val
                scale += np.abs(val)
            err = np.abs(closed_sum - det_ev(s)) / scale
            i = int(np.argmax(err))
            if err[i] > worst:
                worst = float(err[i])
                where = f"{kind.value} K={K} sigma2={sigma2}"
    ok = worst <= 1e-9
    _report(2, ok, f"max backend rel. deviation = {worst:.3e} at {where}")
    assert ok


def test_criterion_3_quadrature_stability(c1_data):
    worst_nodes = worst_contour = 0.0
    for d in c1_data.values():
        for hyp in (0, 1):
            a = d["analytic"]["n500"][hyp]
            worst_nodes = max(worst_nodes, float(
                np.max(np.abs(a - d["analytic"]["n1000"][hyp]))))
            worst_contour = max(worst_contour, float(
                np.max(np.abs(a - d["analytic"]["chalf"][hyp]))))
    ok = worst_nodes <= 1e-6 and worst_contour <= 1e-6
    _report(3, ok, f"max |q500-q1000| = {worst_nodes:.2e}, "
                   f"max |q(c)-q(c/2)| = {worst_contour:.2e}")
    assert ok


def test_criterion_4_reference_operating_points():
    targets = [(ProtocolKind.MAC, 0.0), (ProtocolKind.CMAC, 10.0)]
    measured, ok = [], True
    for kind, snr_db in targets:
        sc = _make(kind, 2, 2, snr_db, PowerConstraint.UNIT_POWER)
        grid = threshold_grid(sc, SeedSpec(SEED), points=201)
        qm = qm_at_qf(analytic_croc(sc, grid), 0.1)
        measured.append(f"{kind.value}@{snr_db:g}dB: q_m(0.1)={qm:.3f}")
        ok = ok and abs(qm - 0.4) <= 0.05
    _report(4, ok, "target 0.40+-0.05; " + ", ".join(measured))
    assert ok


def _dense_curve(kind, K, N, snr_db):
    sc = _make(kind, K, N, snr_db, PowerConstraint.UNIT_POWER)
    grid = threshold_grid(sc, SeedSpec(SEED), points=201)
    return analytic_croc(sc, grid)


def _intersection(curve_a, curve_b, target):
    lo = max(1e-4, float(np.min(curve_a.q_f)), float(np.min(curve_b.q_f)))
    hi = min(0.9, float(np.max(curve_a.q_f)), float(np.max(curve_b.q_f)))
    qf = np.logspace(np.log10(lo), np.log10(hi), 400)
    diff = np.array([qm_at_qf(curve_a, v) - qm_at_qf(curve_b, v)
                     for v in qf])
    hits = []
    for i in np.nonzero(np.diff(np.sign(diff)) != 0)[0]:
        t = diff[i] / (diff[i] - diff[i + 1])
        x = qf[i] + t * (qf[i + 1] - qf[i])
        hits.append((x, qm_at_qf(curve_a, x)))
    if not hits:
        return None
    return min(hits, key=lambda h: abs(h[0] - target[0])
               + abs(h[1] - target[1]))


def test_criterion_5_cooperation_crossovers():
    pairs = [
        ((ProtocolKind.MAC, 2, 4, 10.0), (ProtocolKind.CMAC, 2, 1, 10.0),
         (0.11, 0.33), lambda h: 0.06 <= h[0] <= 0.16
         and abs(h[1] - 0.33) <= 0.07),
        ((ProtocolKind.PAC, 2, 4, 10.0), (ProtocolKind.CPAC, 2, 1, 10.0),
         (0.21, 0.24), lambda h: abs(h[0] - 0.21) <= 0.07
         and abs(h[1] - 0.24) <= 0.07),
    ]
    ok, details = True, []
    for spec_a, spec_b, target, accept in pairs:
        hit = _intersection(_dense_curve(*spec_a), _dense_curve(*spec_b),
                            target)
        if hit is None:
            ok = False
            details.append(f"{spec_a[0].value}x{spec_b[0].value}: none")
        else:
            ok = ok and accept(hit)
            details.append(f"{spec_a[0].value}x{spec_b[0].value}: "
                           f"({hit[0]:.3f}, {hit[1]:.3f})")
    _report(5, ok, "crossovers " + "; ".join(details))
    assert ok


def test_criterion_6_observation_bound(c1_data):
    worst, where = -np.inf, ""
    for cfg, d in c1_data.items():
        K = cfg[1]
        bound = observation_bound(K, P_F, P_D)
        qf_an = d["analytic"]["n500"][0]
        qm_an = 1.0 - d["analytic"]["n500"][1]
        order = np.argsort(qf_an)
        qf_s, qm_s = qf_an[order], qm_an[order]
        for g in range(1, K + 1):
            qm_curve = float(np.interp(bound.q_f[g], qf_s, qm_s))
            violation = float(bound.q_m[g]) - qm_curve
            if violation > worst:
                worst, where = violation, f"{_cfg_id(cfg)} g={g}"
    ok = worst <= 1e-3
    _report(6, ok, f"max bound violation = {worst:.2e} at {where}")
    assert ok


def test_criterion_7_property_suite(c1_data):
    passed, total, notes = 0, 5, []

    # (a) MGF normalization at s = 0
    ok = True
    for kind in KINDS:
        for K in (2, 3):
            backends = ["det"]
            if kind is not ProtocolKind.CMAC or K in (2, 3):
                backends.append("closed")
            for backend, p in itertools.product(backends, (P_F, P_D)):
                ev = MgfEvaluator(kind=kind, K=K, N=2, sigma2=0.7, p=p,
                                  backend=backend)
                ok = ok and abs(ev(0.0) - 1.0) <= 1e-12
    ev = MgfEvaluator(kind=ProtocolKind.CMAC, K=4, N=2, sigma2=0.7, p=P_D,
                      backend="det")
    ok = ok and abs(ev(0.0) - 1.0) <= 1e-12
    passed += ok
    notes.append(f"phi(0)=1 {'ok' if ok else 'FAIL'}")

    # (b) CROC monotonicity: exact for the empirical curve, quadrature
    # slack 1e-6 for the analytic one
    ok = True
    for d in c1_data.values():
        ok = ok and np.all(np.diff(d["mc"].q_f) <= 0)
        ok = ok and np.all(np.diff(d["mc"].q_d) <= 0)
        for hyp in (0, 1):
            ok = ok and np.all(np.diff(d["analytic"]["n500"][hyp]) <= 1e-6)
    passed += ok
    notes.append(f"monotone {'ok' if ok else 'FAIL'}")

    # (c) scaling invariance: the unnormalized statistic is exactly
    # alpha * (normalized statistic) trial by trial, so matched thresholds
    # give identical CROC points
    sc = _make(ProtocolKind.CMAC, 2, 2, 10.0, PowerConstraint.UNIT_POWER)
    seed = SeedSpec(777)
    lam_norm = simulate_statistics(sc, 1, 20000, seed)
    lam_raw = simulate_statistics(sc, 1, 20000, seed, alpha=sc.alpha,
                                  sigma2=sc.noise.sigma_w2)
    ok = np.allclose(lam_raw, sc.alpha * lam_norm, rtol=1e-10, atol=1e-10)
    grid = threshold_grid(sc, seed, points=11)
    counts_norm = [(lam_norm > g).sum() for g in grid]
    counts_raw = [(lam_raw > sc.alpha * g).sum() for g in grid]
    ok = ok and counts_norm == counts_raw
    passed += ok
    notes.append(f"scaling {'ok' if ok else 'FAIL'}")

    # (d) decision-flip symmetry of the conditional determinant:
    # det(I + s Q(-x)) = det(I - s Q(x))
    ok = True
    rng = np.random.default_rng(5)
    for kind in KINDS:
        for K in (2, 3):
            pmap = placement_map(kind, K)
            for bits in itertools.product((-1.0, 1.0), repeat=K):
                x = np.array(bits)
                Qp = build_quadratic_form(pmap, x, 0.8).Q
                Qm = build_quadratic_form(pmap, -x, 0.8).Q
                for s in rng.uniform(-0.4, 0.4, 4) + \
                        1j * rng.uniform(-2, 2, 4):
                    dim = Qp.shape[0]
                    a = np.linalg.det(np.eye(dim) + s * Qm)
                    b = np.linalg.det(np.eye(dim) - s * Qp)
                    ok = ok and abs(a - b) <= 1e-10 * max(1.0, abs(b))
    passed += ok
    notes.append(f"flip-symmetry {'ok' if ok else 'FAIL'}")

    # (e) frame geometry table, exact for K = 1..8
    ok = True
    for K in range(1, 9):
        g = frame_geometry(ProtocolKind.MAC, K, 3)
        ok = ok and (g.L, g.q, g.M, g.eta) == (1, 1, 3, K)
        g = frame_geometry(ProtocolKind.PAC, K, 3)
        ok = ok and (g.L, g.q, g.M, g.eta) == (K, 1, 3 * K, 1)
        g = frame_geometry(ProtocolKind.CMAC, K, 3)
        ok = ok and (g.L, g.q, g.M) == (2 * K - 1, K, 3 * (2 * K - 1))
        ok = ok and g.eta * (2 * K - 1) == K
        g = frame_geometry(ProtocolKind.CPAC, K, 3)
        ok = ok and (g.L, g.q, g.M) == (K * K, K, 3 * K * K)
        ok = ok and g.eta * K == 1
    passed += ok
    notes.append(f"geometry {'ok' if ok else 'FAIL'}")

    ok_all = passed == total
    _report(7, ok_all, f"{passed}/{total} properties: " + ", ".join(notes))
    assert ok_all


def test_criterion_8_det_backend_end_to_end():
    worst, where = 0.0, ""
    for snr_db in (0.0, 10.0):
        sc = _make(ProtocolKind.CMAC, 4, 2, snr_db,
                   PowerConstraint.UNIT_POWER)
        seed = SeedSpec(SEED)
        grid = threshold_grid(sc, seed, points=GRID_POINTS)
        mc = estimate_croc(sc, grid, TRIALS, seed)
        mc_q = [mc.q_f, mc.q_d]
        for hyp in (0, 1):
            an = tail_probabilities(hypothesis_mgf(sc, hyp, backend="det"),
                                    grid, QuadratureConfig(nodes=500))
            ratio = np.abs(mc_q[hyp] - an) / _mc_tolerance(an)
            i = int(np.argmax(ratio))
            if ratio[i] > worst:
                worst, where = float(ratio[i]), f"snr={snr_db:g}dB H{hyp}"
    ok = worst <= 1.0
    _report(8, ok, f"CMAC K=4 det backend: max |q_mc - q_an|/tol = "
                   f"{worst:.3f} at {where}")
    assert ok
