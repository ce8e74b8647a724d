"""Acceptance suite.

Each criterion test records a PASS/FAIL line (printed immediately and again in
the terminal summary). The experiment-backed criteria share one session
fixture that runs the ``table`` and ``phase-diagram`` commands at full size.
"""

import csv
import math
import time

import numpy as np
import pytest
from conftest import record

from edgcomplete.basis import (
    ObservationSet,
    all_pairs,
    apply_A,
    apply_A_star,
    apply_A_star_times_P,
    v_matrix,
    w_matrix,
)
from edgcomplete.coherence import (
    coherence_exact,
    coherence_simplified,
    project_tangent,
    sample_complexity,
    tangent_space,
)
from edgcomplete.experiments import count_inversions, sphere_points
from edgcomplete.geometry import (
    center_gram_from_points,
    distance_matrix_from_points,
    relative_gram_error,
)
from edgcomplete.sampling import sample_observations, sample_pairs
from edgcomplete.solver import (
    SolverConfig,
    augmented_lagrangian,
    penalized_objective,
    recover_gram,
    solve_exact,
)
from edgcomplete.verify import run_identity_suite


def read_rows(path):
    lines = [ln for ln in path.read_text().splitlines() if ln and not ln.startswith("#")]
    return list(csv.DictReader(lines))


def medians(path):
    return {float(r["rate"]): float(r["median"]) for r in read_rows(path)}


# -- 1. operator algebra ------------------------------------------------------

def test_criterion_1_operator_algebra():
    start = time.perf_counter()
    checks = run_identity_suite(range(3, 13), n_random=100)
    elapsed = time.perf_counter() - start
    failed = [f"{c.name} (n={c.n}, value={c.value:.3g})" for c in checks if not c.passed]
    ok = not failed and elapsed < 10
    record("1", ok, f"{len(checks) - len(failed)}/{len(checks)} identities, {elapsed:.2f}s")
    assert not failed, failed
    assert elapsed < 10


# -- 2. gradients and operator oracles ----------------------------------------

def _central_diff(f, P, h=1e-6):
    G = np.zeros_like(P)
    for idx in np.ndindex(P.shape):
        E = np.zeros_like(P)
        E[idx] = h
        G[idx] = (f(P + E)[0] - f(P - E)[0]) / (2 * h)
    return G


def test_criterion_2_gradients_and_adjoint():
    start = time.perf_counter()
    rng = np.random.default_rng(2024)
    grad_err = 0.0
    adj_err = 0.0
    for _ in range(10):
        n = int(rng.integers(4, 16))
        m = int(rng.integers(5, 31))
        obs = ObservationSet(n, sample_pairs(n, m, seed=rng), rng.uniform(0, 4, m))
        P = rng.standard_normal((n, 3))
        mult = rng.standard_normal(m)
        for f in (lambda x: augmented_lagrangian(x, obs, mult, 1.0),  # noqa: B023
                  lambda x: penalized_objective(x, obs, 25.0)):  # noqa: B023
            g, fd = f(P)[1], _central_diff(f, P)
            # componentwise relative error; components below one are judged absolutely
            grad_err = max(grad_err, float((np.abs(g - fd) / np.maximum(np.abs(g), 1.0)).max()))
        X = rng.standard_normal((n, n))
        X = X + X.T
        y = rng.standard_normal(m)
        lhs, rhs = apply_A(X, obs) @ y, np.sum(X * apply_A_star(y, obs))
        adj_err = max(adj_err, abs(lhs - rhs) / max(1.0, abs(lhs)))

    n = 50
    obs = ObservationSet(n, sample_pairs(n, 400, seed=rng), np.zeros(400))
    y = rng.standard_normal(400)
    P = rng.standard_normal((n, 6))
    dense = apply_A_star(y, obs) @ P
    mf_err = float(np.abs(apply_A_star_times_P(y, obs, P) - dense).max() / np.abs(dense).max())
    elapsed = time.perf_counter() - start

    ok = grad_err <= 1e-5 and adj_err <= 1e-10 and mf_err <= 1e-12 and elapsed < 5
    record("2", ok, f"gradient {grad_err:.1e}, adjoint {adj_err:.1e}, "
                    f"matrix-free {mf_err:.1e}, {elapsed:.2f}s")
    assert grad_err <= 1e-5
    assert adj_err <= 1e-10
    assert mf_err <= 1e-12
    assert elapsed < 5


# -- 3 and 4. sphere tables ---------------------------------------------------

def test_criterion_3_exact_table(experiment_runs):
    run = experiment_runs[1]
    med = medians(run["table_exact"] / "table.csv")
    elapsed = run["timings"]["table_exact"]
    ok = med[0.05] <= 3e-3 and med[0.03] <= 1e-2 and med[0.01] > 1e-1 and elapsed < 900
    record("3", ok, "medians " + ", ".join(f"{100 * r:g}%={v:.2e}" for r, v in sorted(med.items()))
           + f", {elapsed:.0f}s")
    assert med[0.05] <= 3e-3
    assert med[0.03] <= 1e-2
    assert med[0.01] > 1e-1
    assert elapsed < 900


def test_criterion_4_noisy_table(experiment_runs):
    run = experiment_runs[1]
    med = medians(run["table_noisy"] / "table.csv")
    elapsed = run["timings"]["table_noisy"]
    ok = med[0.05] <= 5e-2 and elapsed < 900
    record("4", ok, f"median at 5% = {med[0.05]:.2e}, {elapsed:.0f}s")
    assert med[0.05] <= 5e-2
    assert elapsed < 900


@pytest.mark.parametrize("name", ["table_exact", "table_noisy"])
def test_table_medians_decrease(experiment_runs, name):
    med = medians(experiment_runs[1][name] / "table.csv")
    values = [med[r] for r in sorted(med)]
    assert all(a > b for a, b in zip(values, values[1:])), values


def test_noise_does_not_help(experiment_runs):
    run = experiment_runs[1]
    exact = medians(run["table_exact"] / "table.csv")
    noisy = medians(run["table_noisy"] / "table.csv")
    assert all(noisy[r] >= exact[r] for r in (0.03, 0.05))


def test_desk_scale_timing():
    """Record the n=1002, 5% solve time; the 90 s budget is reported, not enforced."""
    X = sphere_points(1002, seed=0)
    obs = sample_observations(distance_matrix_from_points(X), 0.05, seed=1)
    start = time.perf_counter()
    P, _ = solve_exact(obs, SolverConfig())
    elapsed = time.perf_counter() - start
    err = relative_gram_error(recover_gram(P), center_gram_from_points(X))
    print(f"solve_exact n=1002 rate=5%: {elapsed:.1f}s, relative error {err:.2e}")
    if elapsed >= 90:
        pytest.xfail(f"took {elapsed:.1f}s (budget 90 s is advisory)")


# -- 5. phase transition ------------------------------------------------------

def test_criterion_5_phase_transition(experiment_runs):
    run = experiment_runs[1]
    cells = read_rows(run["phase"] / "phase.csv")
    inversions = {}
    for rank in sorted({int(c["rank"]) for c in cells}):
        probs = [float(c["probability"]) for c in
                 sorted((c for c in cells if int(c["rank"]) == rank), key=lambda c: float(c["rate"]))]
        inversions[rank] = count_inversions(probs)
    spot = {int(c["rank"]): float(c["probability"]) for c in read_rows(run["spot"] / "phase.csv")}
    elapsed = run["timings"]["phase"] + run["timings"]["spot"]
    ok = max(inversions.values()) <= 1 and min(spot.values()) == 1.0 and elapsed < 1200
    record("5", ok, f"inversions per rank {inversions}, 100% cell {spot}, {elapsed:.0f}s")
    assert max(inversions.values()) <= 1, inversions
    assert spot[2] == 1.0 and min(spot.values()) == 1.0, spot
    assert elapsed < 1200


# -- 6. coherence and sample complexity ---------------------------------------

def _hand_sample_complexity(n, r, nu, beta):
    L = n * (n - 1) / 2
    first = math.log(4 * n * math.sqrt(8 * L * r)) / math.log(2)
    inner = math.log(4 * L * math.sqrt(r)) / math.log(2)
    return math.ceil(first * n * r * 96 * (nu + 1 / (n * r))
                     * (beta * math.log(n) + math.log(4 * inner)))


FROZEN = [
    ((1000, 3, 2.0, 2.0), 249833361),
    ((50, 2, 1.5, 1.5), 2098798),
    ((200, 5, 10.0, 3.0), 375997964),
    ((30, 1, 0.7, 1.1), 202689),
    ((5000, 10, 4.0, 2.5), 14585724143),
]


def _certification_slack(M, r):
    rep = coherence_exact(M, r)
    T = tangent_space(M, r)
    n, nu = M.shape[0], rep.nu
    pairs = all_pairs(n)
    W = np.stack([w_matrix(p, n) for p in pairs]).reshape(len(pairs), -1)
    worst = np.inf
    for p in pairs:
        PTw = project_tangent(w_matrix(p, n), T).ravel()
        PTv = project_tangent(v_matrix(p, n), T).ravel()
        sj = np.sum(w_matrix(p, n) * T.projector) ** 2
        worst = min(worst,
                    2 * nu * r / n - np.sum((W @ PTw) ** 2),
                    4 * nu * r / n - np.sum((W @ PTv) ** 2),
                    nu * r / (4 * n * n) - sj)
    return rep, worst


def test_criterion_6_coherence():
    start = time.perf_counter()
    rng = np.random.default_rng(6)
    worst = np.inf
    chain_ok = True
    for k in range(5):
        n = int(rng.integers(8, 31))
        r = int(rng.integers(1, 5))
        M = center_gram_from_points(rng.standard_normal((n, r)))
        rep, slack = _certification_slack(M, r)
        worst = min(worst, slack)
        simp = coherence_simplified(M, r)
        chain_ok &= max(simp.nu_w, simp.nu_v, simp.nu_joint) <= rep.nu * (1 + 1e-12)
    frozen_ok = all(sample_complexity(*a) == e == _hand_sample_complexity(*a) for a, e in FROZEN)
    elapsed = time.perf_counter() - start
    ok = worst >= -1e-12 and chain_ok and frozen_ok and elapsed < 120
    record("6", ok, f"min slack {worst:.2e}, simplified chain {chain_ok}, "
                    f"frozen sample_complexity {frozen_ok}, {elapsed:.1f}s")
    assert worst >= -1e-12
    assert chain_ok
    assert frozen_ok
    assert elapsed < 120


# -- 7. determinism -----------------------------------------------------------

def test_criterion_7_determinism(experiment_runs):
    serial, threaded = experiment_runs[1], experiment_runs[2]
    compared, differ = 0, []
    for name in ("table_exact", "table_noisy", "phase", "spot"):
        for path in sorted(serial[name].glob("*.csv")):
            compared += 1
            if path.read_bytes() != (threaded[name] / path.name).read_bytes():
                differ.append(f"{name}/{path.name}")
    ok = compared > 0 and not differ
    record("7", ok, f"{compared} CSV files identical across --threads 1/2"
           if ok else f"differing: {differ}")
    assert compared >= 8
    assert not differ
