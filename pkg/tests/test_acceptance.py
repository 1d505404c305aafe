"""Acceptance criteria, one test each, at the stated tolerances."""

import math
import time
from itertools import combinations

import numpy as np
import pytest
from scipy.optimize import linear_sum_assignment

from swarm_spectral.classify import classify, is_gathering_general
from swarm_spectral.configuration import Configuration, random_cloud
from swarm_spectral.decompose import decompose, evolve, reconstruct, reconstruct_many
from swarm_spectral.dynamics import (
    Normalizer,
    jacobian_at_zero,
    linear_rhs,
    simulate,
    undirected_edges,
    visibility_monitor,
)
from swarm_spectral.eigen import eig, is_non_defective_real
from swarm_spectral.spectral import closed_form_spectrum
from swarm_spectral.topology import (
    connected_by_gcd,
    dense_matrix,
    go_to_the_average,
    go_to_the_middle,
    is_consistent,
    make_circulant,
    n_bug,
)
from swarm_spectral.classify import strongly_connected, weakly_connected

pytestmark = pytest.mark.acceptance

S5 = Configuration(np.array([[0.0, 0.0], [-1.0, 3.0], [-2.0, 2.0]]) / np.sqrt(10))


def multiset_distance(a, b):
    d = np.abs(np.subtract.outer(np.asarray(a), np.asarray(b)))
    r, c = linear_sum_assignment(d)
    return float(d[r, c].max())


def diameter(p):
    return float(np.max(np.linalg.norm(p[:, None, :] - p[None, :, :], axis=-1)))


def test_c01_closed_form_vs_oracle(acceptance_line):
    rng = np.random.default_rng(1)
    start = time.perf_counter()
    worst = 0.0
    for _ in range(200):
        n = int(rng.integers(2, 33))
        top = make_circulant(rng.normal(size=n))
        worst = max(worst, multiset_distance(closed_form_spectrum(top).eigenvalues, eig(dense_matrix(top)).eigenvalues))
    elapsed = time.perf_counter() - start
    ok = acceptance_line(worst < 1e-9 and elapsed < 10, f"worst multiset distance {worst:.3g}", elapsed)
    assert ok


def test_c02_rate_tables(acceptance_line):
    start = time.perf_counter()
    worst = 0.0
    for n in range(3, 9):
        for top in (n_bug(n), go_to_the_middle(n)):
            for sub in closed_form_spectrum(top).subspaces:
                worst = max(worst, abs(sub.rate - math.cos(2 * math.pi * sub.index / n)))
        for sub in closed_form_spectrum(go_to_the_average(n)).subspaces[1:]:
            worst = max(worst, abs(sub.rate))
    elapsed = time.perf_counter() - start
    assert acceptance_line(worst < 1e-12, f"worst rate error {worst:.3g}", elapsed)


def test_c03_dimension_bookkeeping(acceptance_line):
    start = time.perf_counter()
    bad = []
    for n in range(2, 65):
        subs = closed_form_spectrum(n_bug(n)).subspaces
        dims = [s.dim for s in subs]
        if sum(dims) != 2 * n:
            bad.append((n, "sum"))
        if n % 2 and any(d != 4 for d in dims[1:]):
            bad.append((n, "odd"))
        if n % 2 == 0 and dims[-1] != 2:
            bad.append((n, "even"))
    elapsed = time.perf_counter() - start
    assert acceptance_line(not bad, f"violations {bad}", elapsed)


def test_c04_decomposition_exactness(acceptance_line):
    start = time.perf_counter()
    z0 = random_cloud(7, 4)
    top = go_to_the_middle(7)
    dec = decompose(z0, closed_form_spectrum(top))
    err0 = float(np.abs(reconstruct(dec, 0.0).positions - z0.positions).max())
    traj = simulate(dense_matrix(top), z0, dt=1e-3, T=10.0)
    exact = reconstruct_many(dec, traj.times)
    gap = float(np.abs(exact - traj.states).max())
    elapsed = time.perf_counter() - start
    ok = err0 < 1e-10 and gap < 1e-7 and elapsed < 5
    assert acceptance_line(ok, f"reconstruct(0) error {err0:.3g}, sup gap to RK4 {gap:.3g}", elapsed)


def test_c05_rate_fitting(acceptance_line):
    start = time.perf_counter()
    n = 7
    spec = closed_form_spectrum(n_bug(n))
    worst = 0.0
    for sub in spec.subspaces[1:]:
        z0 = Configuration(np.array(sub.generating_config))
        traj = simulate(dense_matrix(n_bug(n)), z0, dt=1e-3, T=5.0, stride=10)
        zstar = z0.positions.mean(axis=0)
        dist = np.linalg.norm((traj.states - zstar).reshape(len(traj.times), -1), axis=1)
        slope = np.polyfit(traj.times, np.log(dist), 1)[0]
        expected = -1 + math.cos(2 * math.pi * sub.index / n)
        worst = max(worst, abs(slope - expected) / abs(expected))
    elapsed = time.perf_counter() - start
    assert acceptance_line(worst < 1e-3 and elapsed < 10, f"worst relative slope error {worst:.3g}", elapsed)


def test_c06_coefficient_conservation(acceptance_line):
    start = time.perf_counter()
    worst = 0.0
    for seed in range(10):
        for top in (n_bug(7), go_to_the_middle(7)):
            dec = decompose(random_cloud(7, seed), closed_form_spectrum(top))
            norms0 = [np.linalg.norm(b) for b in dec.beta0]
            for t in np.linspace(0.0, 10.0, 1001):
                comp = evolve(dec, t)
                worst = max(worst, max(abs(np.linalg.norm(b) - m) for b, m in zip(comp.beta, norms0)))
    elapsed = time.perf_counter() - start
    assert acceptance_line(worst < 1e-8, f"max |norm beta_j(t) - norm beta_j(0)| {worst:.3g}", elapsed)


def test_c07_gathering_point_is_average(acceptance_line):
    start = time.perf_counter()
    z0 = random_cloud(7, 0)
    traj = simulate(dense_matrix(go_to_the_middle(7)), z0, dt=1e-3, T=30.0)
    mean = z0.positions.mean(axis=0)
    gap = float(np.linalg.norm(traj.final.positions - mean, axis=1).max())
    drift = float(np.abs(traj.states.mean(axis=1) - mean).max())
    elapsed = time.perf_counter() - start
    ok = gap < 1e-6 and drift < 1e-9 and elapsed < 5
    assert acceptance_line(ok, f"final distance to mean {gap:.3g} (limit 1e-6), center drift {drift:.3g}", elapsed)


def test_c08_counterexample(acceptance_line):
    start = time.perf_counter()
    top = make_circulant([0, 5, -4])
    W = dense_matrix(top)
    rep = classify(top)
    complex_spectrum = not is_non_defective_real(W)
    traj = simulate(W, S5, dt=1e-4, T=0.1)
    vis = visibility_monitor(traj, top, 1.0)
    exceeded = vis.first_violation is not None and vis.first_violation[1] == (0, 1)
    t_exceed = vis.first_violation[0] if exceeded else float("nan")

    def d2(p):
        return float(np.sum((p[0] - p[1]) ** 2))

    h = 1e-6
    v = linear_rhs(S5, W)
    fd = (d2(S5.positions + h * v) - d2(S5.positions - h * v)) / (2 * h)
    analytic = 2 * float((S5.positions[0] - S5.positions[1]) @ (v[0] - v[1]))
    elapsed = time.perf_counter() - start
    ok = (rep.gathering and complex_spectrum and exceeded and abs(fd - 2.4) < 1e-4
          and abs(analytic - 2.4) < 1e-12 and elapsed < 2)
    assert acceptance_line(ok, f"gathering={rep.gathering}, complex={complex_spectrum}, |z0-z1|>1 first at "
                               f"t={t_exceed:.4g}, d/dt|z0-z1|^2 fd={fd:.8f} analytic={analytic:.8f}", elapsed)


def test_c09_visibility_preservation(acceptance_line):
    rng = np.random.default_rng(9)
    start = time.perf_counter()
    worst = -np.inf
    violations = 0
    for k in range(50):
        n = int(rng.integers(2, 13))
        w = rng.random(n) * (rng.random(n) < 0.5)
        if not w[1:].any():
            w[int(rng.integers(1, n))] = 1.0
        top = make_circulant(w / w.sum())
        z0 = random_cloud(n, 1000 + k)
        edges = undirected_edges(top)
        radius = max(np.linalg.norm(z0.positions[i] - z0.positions[j]) for i, j in edges)
        rep = visibility_monitor(simulate(dense_matrix(top), z0, dt=1e-3, T=20.0), top, radius)
        worst = max(worst, float(np.diff(rep.max_edge_distance_series).max()))
        violations += not rep.preserved
    elapsed = time.perf_counter() - start
    ok = worst <= 1e-9 and violations == 0 and elapsed < 60
    assert acceptance_line(ok, f"largest step increase of max edge distance {worst:.3g}, "
                               f"violations {violations}", elapsed)


def test_c10_nonlinear_normalizer(acceptance_line):
    start = time.perf_counter()
    jac_err = max(float(np.abs(jacobian_at_zero(Normalizer("smooth_eps", eps)) - np.eye(2)).max())
                  for eps in (0.01, 0.1))
    p = random_cloud(7, 10).positions
    p = (p - p.mean(axis=0)) / diameter(p)
    traj = simulate(dense_matrix(go_to_the_middle(7)), Configuration(p), dt=1e-3, T=50.0,
                    normalizer=Normalizer("smooth_eps", 0.01), stride=100)
    diam = np.array([diameter(s) for s in traj.states])
    hit = np.flatnonzero(diam < 1e-3)
    t_hit = float(traj.times[hit[0]]) if hit.size else float("inf")
    elapsed = time.perf_counter() - start
    ok = jac_err < 1e-6 and t_hit <= 50 and elapsed < 10
    assert acceptance_line(ok, f"Jacobian error {jac_err:.3g}, diameter < 1e-3 at t={t_hit:.4g}", elapsed)


def test_c11_classification_equivalences(acceptance_line):
    start = time.perf_counter()
    cases = mismatches = 0
    for n in range(2, 11):
        for r in range(n):
            for jumps in combinations(range(1, n), r):
                for self_loop in (False, True):
                    support = list(jumps) + ([0] if self_loop or not jumps else [])
                    w = np.zeros(n)
                    w[support] = 1.0 / len(support)
                    top = make_circulant(w)
                    W = dense_matrix(top)
                    combinatorial = is_consistent(W) and connected_by_gcd(top)
                    cases += 1
                    mismatches += bool(is_gathering_general(W)) != combinatorial
    a = np.array([[0, 0.5, 0.5], [0.5, 0, 0.5], [0, 0, 1.0]])
    spec = eig(a)
    app_ok = (classify(a).gathering and multiset_distance(spec.eigenvalues, [1, 0.5, -0.5]) < 1e-12
              and weakly_connected(a) and not strongly_connected(a))
    elapsed = time.perf_counter() - start
    ok = mismatches == 0 and app_ok and elapsed < 30
    assert acceptance_line(ok, f"{cases} circulant cases, {mismatches} mismatches; 3x3 example ok={app_ok}", elapsed)
