"""Acceptance criteria, one test per criterion.

Each test prints a single ``[n] <name>: PASS|FAIL (<details>)`` line and then
asserts. Run ``pytest tests/test_acceptance.py -v -s`` to see the lines, or
``python tests/test_acceptance.py`` for the summary alone.
"""
import math
import sys
import time
from pathlib import Path

import numpy as np
import pytest

from barron.cli import main as cli_main
from barron.nn_approx import DensityDescriptor, mise_experiment
from barron.pdo import (
    BracketPower,
    Resolvent,
    SmoothnessClass,
    conditional_stability_check,
    link_constants,
    schroedinger_dense_solve,
    schroedinger_forward,
)
from barron.radon import default_family, identity_check
from barron.rates import make_rng
from barron.spectral import (
    InterpolationTriple,
    SpectralFunction,
    apply_resolvent,
    barron_norm,
    interpolation_gap,
    random_function,
)
from barron.tikhonov import InverseProblemSpec, rate_experiment, solve_tikhonov

sys.path.insert(0, str(Path(__file__).parent))
from oracles import grid_min, reduced_instance  # noqa: E402

FIXTURES = Path(__file__).parent / "fixtures"


def report(n, name, ok, detail):
    line = f"[{n}] {name}: {'PASS' if ok else 'FAIL'} ({detail})"
    sys.__stdout__.write(line + "\n")
    sys.__stdout__.flush()
    return ok


def test_01_interpolation():
    t0 = time.perf_counter()
    triples = [InterpolationTriple(0, 1, 2), InterpolationTriple(-2, 0, 2), InterpolationTriple(-1, 0.5, 3)]
    worst, shell_dev = 0.0, 0.0
    for i in range(1000):
        rng = make_rng(101, i)
        u = random_function(rng, int(rng.integers(1, 4)), int(rng.integers(1, 9)), 8)
        k = tuple(int(v) for v in rng.integers(1, 8, size=2))
        shell = SpectralFunction.from_half(2, {k: complex(rng.normal(), rng.normal()), (k[1], -k[0]): rng.normal()})
        for trip in triples:
            worst = max(worst, interpolation_gap(u, trip))
            shell_dev = max(shell_dev, abs(interpolation_gap(shell, trip) - 1))
    dt = time.perf_counter() - t0
    ok = worst <= 1 + 1e-12 and shell_dev <= 1e-12 and dt < 10
    report(1, "interpolation suite", ok, f"max gap {worst:.15f}, shell deviation {shell_dev:.1e}, {dt:.2f}s")
    assert ok


def test_02_resolvent():
    violations = 0
    for i in range(500):
        rng = make_rng(102, i)
        u = random_function(rng, int(rng.integers(1, 4)), int(rng.integers(1, 9)), 8)
        t = float(10 ** rng.uniform(-2, 2))
        n = int(rng.integers(1, 4))
        violations += barron_norm(apply_resolvent(u, t, n), 0.0) > barron_norm(u, 0.0) / t
    ok = violations == 0
    report(2, "resolvent bound", ok, f"{violations} violations in 500 draws")
    assert ok


def test_03_link():
    t0 = time.perf_counter()
    exact = [link_constants(phi, 2.0, trials=200, seed=103) for phi in (BracketPower(-2.0), Resolvent(1.0))]
    dev = max(max(abs(r.m - 1), abs(r.M - 1)) for r in exact)
    res2 = link_constants(Resolvent(2.0), 2.0, trials=200, seed=104)
    dt = time.perf_counter() - t0
    ok = dev <= 1e-12 and res2.contained and dt < 5
    report(3, "link constants", ok,
           f"exact deviation {dev:.1e}, Resolvent(2) [{res2.m:.6f}, {res2.M:.6f}] "
           f"in [{res2.scan_c:.6f}, {res2.scan_C:.6f}], {dt:.2f}s")
    assert ok


def test_04_conditional_stability():
    rep = conditional_stability_check(BracketPower(-2.0), 2.0, SmoothnessClass(2.0, 1.0), trials=500, seed=105)
    limit = 2.0 ** 0.5 * (1 + 1e-9)
    ok = rep.num_pairs == 500 and rep.max_ratio <= limit
    report(4, "conditional stability", ok, f"max ratio {rep.max_ratio:.6f} vs {limit:.6f} over {rep.num_pairs} pairs")
    assert ok


def test_05_schroedinger():
    tol = 1e-10
    t0 = time.perf_counter()
    worst, n_trials = 0.0, 0
    for i, q in enumerate([0.1, 0.2, 0.3, 0.3, 0.25]):
        rng = make_rng(106, i)
        alpha = float(rng.uniform(0.5, 3))
        W = random_function(rng, 2, 8, 2)
        W = W * (q * alpha / barron_norm(W, 0.0))
        u = random_function(rng, 2, 12, 3)
        assert len(W) <= 25 and len(u) <= 25
        y = schroedinger_forward(alpha, W, u, tol)
        worst = max(worst, barron_norm(y - schroedinger_dense_solve(alpha, W, u, 12), 0.0))
        n_trials += 1
    dt = time.perf_counter() - t0
    ok = worst <= 10 * tol and dt < 5
    report(5, "Schroedinger forward map", ok, f"max B0 gap to dense solve {worst:.2e} over {n_trials} trials, {dt:.2f}s")
    assert ok


def test_06_mc_rate():
    t0 = time.perf_counter()
    rep = mise_experiment(DensityDescriptor(d=2), 2, [2**k for k in range(4, 13)], reps=30, seed=107)
    dt = time.perf_counter() - t0
    below = bool(np.all(rep.errors < rep.bound))
    ok = -0.65 <= rep.slope <= -0.35 and below and dt < 120
    report(6, "Monte Carlo approximation rate", ok,
           f"slope {rep.slope:.4f}, max rms/bound {np.max(rep.errors / rep.bound):.4f}, {dt:.1f}s")
    assert ok


def test_07_tikhonov_exactness():
    worst_gap = -math.inf
    for i in range(200):
        rng = make_rng(108, i)
        y = random_function(rng, int(rng.integers(1, 3)), int(rng.integers(1, 4)), 10, include_zero=False)
        if len(y.half_atoms()) > 6:
            continue
        phi = BracketPower(-rng.uniform(0.5, 3)) if rng.uniform() < 0.5 else Resolvent(rng.uniform(0.5, 3))
        lam, p = float(10 ** rng.uniform(-3, 0.5)), float(rng.uniform(0.5, 3))
        mass, ratio = reduced_instance(phi, y, p)
        g, _ = grid_min(mass, ratio, lam)
        worst_gap = max(worst_gap, solve_tikhonov(phi, y, lam, p).objective - g)
    worst_cf = 0.0
    for i in range(200):
        rng = make_rng(109, i)
        k = int(rng.integers(0, 30))
        yk = complex(rng.normal(), rng.normal()) if k else float(rng.normal())
        y = SpectralFunction.from_half(1, {(k,): yk})
        alpha, p, lam = rng.uniform(0.5, 3), rng.uniform(0.5, 3), float(10 ** rng.uniform(-3, 1))
        ph = 1.0 / (alpha + k * k)
        mass = (2.0 if k else 1.0) * abs(yk)
        t = min(1.0, max(0.0, 1 - lam * (1 + k * k) ** (p / 2) / (2 * mass * ph)))
        got = solve_tikhonov(Resolvent(alpha), y, lam, p).u_delta.atoms().get((k,), 0.0)
        worst_cf = max(worst_cf, abs(got - t * yk / ph) / max(1.0, abs(yk / ph)))
    ok = worst_gap <= 1e-6 and worst_cf <= 1e-9
    report(7, "Tikhonov solver exactness", ok, f"greedy - grid <= {worst_gap:.1e}, closed-form deviation {worst_cf:.1e}")
    assert ok


@pytest.mark.parametrize("p,a", [(2.0, 2.0), (4.0, 2.0), (2.0, 4.0)])
def test_08_tikhonov_rate(p, a):
    t0 = time.perf_counter()
    spec = InverseProblemSpec(BracketPower(-a), a, p, SmoothnessClass(p, 1e10))
    rep = rate_experiment(spec, [2.0**-k for k in range(2, 10)], reps=20, seed=110)
    dt = time.perf_counter() - t0
    worst = max(s.error / s.bound for s in rep.samples)
    ok = abs(rep.slope - spec.rate) <= 0.1 and worst <= 1.01 and dt < 120
    report(8, f"Tikhonov rate p={p:g} a={a:g}", ok,
           f"slope {rep.slope:.4f} vs {spec.rate:.4f}, max error/bound {worst:.3e}, {dt:.1f}s")
    assert ok


def test_09_radon_identity():
    t0 = time.perf_counter()
    rep = identity_check(default_family())
    dt = time.perf_counter() - t0
    ok = len(rep.ratios) == 6 and rep.cv < 0.01 and bool(np.all(rep.monotone)) and dt < 60
    report(9, "Radon identity", ok, f"cv {rep.cv:.1e}, mean ratio {rep.ratios.mean():.12f}, {dt:.2f}s")
    assert ok


def test_10_determinism(tmp_path):
    cases = sorted(p.stem for p in FIXTURES.glob("*.cfg"))
    mismatched = []
    for case in cases:
        outs = []
        for run, workers in enumerate((1, 1, 2)):
            out = tmp_path / f"{case}-{run}"
            assert cli_main([str(FIXTURES / f"{case}.cfg"), "--out", str(out), "--workers", str(workers)]) in (0, 2)
            outs.append({f.name: f.read_bytes() for f in out.iterdir()})
        if not outs[0] == outs[1] == outs[2]:
            mismatched.append(case)
    ok = not mismatched
    report(10, "determinism", ok, f"{len(cases)} experiments, 3 runs each (workers 1, 1, 2); mismatched: {mismatched or 'none'}")
    assert ok


if __name__ == "__main__":
    sys.exit(pytest.main([__file__, "-q", "-p", "no:cacheprovider"]))
