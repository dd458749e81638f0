"""Barron-penalized Tikhonov regularization for multiplier forward maps.

The data misfit is measured in B0, so the functional

    J(u) = ||F u - y||_B0^2 + lam * ||u||_B^p

is minimized exactly: each optimal coefficient is phase-aligned with the
data, ``c_k = t_k y_k / phi(k)`` with ``t_k`` in ``[0, 1]``, and the
reduced problem in ``t`` is a fractional knapsack solved greedily in
ascending order of the cost ratio ``<k>^p / phi(k)``.
"""
from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .pdo import SmoothnessClass, SymbolDescriptor, _symbol_range, apply_symbol, modulus_bound
from .rates import RateReport, fit_rate, make_rng
from .spectral import SpectralFunction, _is_canonical, barron_norm, bracket, l2_norm, zero


@dataclass(frozen=True)
class InverseProblemSpec:
    phi: SymbolDescriptor
    a: float
    p: float
    cls: SmoothnessClass
    d: int = 1
    K_max: int = 4096
    k_min: int = 4
    n_scales: int = 32

    @property
    def rate(self) -> float:
        return self.p / (self.a + self.p)


@dataclass(frozen=True)
class NoisyData:
    y_delta: SpectralFunction
    delta: float
    true_y: SpectralFunction | None = None


@dataclass(frozen=True)
class TikhonovSolution:
    u_delta: SpectralFunction
    objective: float
    active_set: frozenset
    fractional_index: tuple | None


def make_truth(
    p: float,
    R: float,
    d: int,
    K_max: int,
    seed,
    n_orbits: int = 3,
    radii=None,
) -> SpectralFunction:
    """Random sparse function with ``||u||_B^p = R``.

    Frequencies are uniform in the cube ``|k_i| <= K_max``. If ``radii`` is
    given, one orbit is placed at the lattice point nearest a random
    direction scaled to each radius, and every orbit carries the same share
    of the ``B^p`` norm.
    """
    if R == 0:
        return zero(d)
    if R < 0 or p <= 0:
        raise ValueError("need R >= 0 and p > 0")
    if n_orbits < 1 or K_max < 1:
        raise ValueError("empty support requested")
    rng = make_rng(*np.atleast_1d(seed))
    if radii is not None:
        atoms = {}
        for r in radii:
            v = rng.normal(size=d)
            k = np.rint(r * v / np.linalg.norm(v)).astype(np.int64)
            if not k.any():
                continue
            if not _is_canonical(tuple(k)):
                k = -k
            k = tuple(int(x) for x in k)
            c = np.exp(2j * np.pi * rng.uniform()) / (2.0 * float(bracket(k)) ** p)
            atoms[k] = atoms.get(k, 0.0) + c
        if not atoms:
            raise ValueError("empty support requested")
        u = SpectralFunction.from_half(d, atoms)
        return u * (R / barron_norm(u, p))
    atoms = {}
    while len(atoms) < n_orbits:
        k = rng.integers(-K_max, K_max + 1, size=d)
        if not k.any():
            continue
        if not _is_canonical(tuple(k)):
            k = -k
        atoms.setdefault(tuple(int(v) for v in k), complex(rng.normal(), rng.normal()))
    u = SpectralFunction.from_half(d, atoms)
    return u * (R / barron_norm(u, p))


def add_noise(
    y: SpectralFunction,
    delta: float,
    seed,
    k_max: int | None = None,
    n_fresh: int | None = None,
) -> NoisyData:
    """Perturb ``y`` by a real-valued ``eta`` with ``||eta||_B0 = delta``.

    ``eta`` lives on the support of ``y`` plus 1 to 3 fresh frequencies
    drawn from the cube ``|k_i| <= k_max``; the B0 mass is split over
    conjugate orbits by a flat Dirichlet draw and phases are uniform.
    """
    if delta < 0:
        raise ValueError("noise level must be nonnegative")
    if delta == 0:
        return NoisyData(y, 0.0, y)
    rng = make_rng(*np.atleast_1d(seed))
    d = y.d
    half = set(y.half_atoms())
    if k_max is None:
        k_max = int(np.abs(y.freqs).max()) + 2 if len(y) else 2
    if n_fresh is None:
        n_fresh = int(rng.integers(1, 4))
    fresh = set()
    while len(fresh) < n_fresh:
        k = rng.integers(-k_max, k_max + 1, size=d)
        if not _is_canonical(tuple(k)):
            k = -k
        k = tuple(int(v) for v in k)
        if k not in half:
            fresh.add(k)
    orbits = sorted(half) + sorted(fresh)
    weights = rng.dirichlet(np.ones(len(orbits)))
    atoms = {}
    for k, w in zip(orbits, weights):
        if any(k):
            atoms[k] = 0.5 * delta * w * np.exp(2j * np.pi * rng.uniform())
        else:
            atoms[k] = delta * w * rng.choice([-1.0, 1.0])
    eta = SpectralFunction.from_half(d, atoms)
    eta = eta * (delta / barron_norm(eta, 0.0))
    return NoisyData(y + eta, float(delta), y)


def tikhonov_objective(
    phi: SymbolDescriptor, y_delta: SpectralFunction, u: SpectralFunction, lam: float, p: float
) -> float:
    return barron_norm(apply_symbol(phi, u) - y_delta, 0.0) ** 2 + lam * barron_norm(u, p)


def _orbits(phi, y, p):
    """Per conjugate orbit: representative, data mass, cost ratio, symbol value."""
    half = y.half_atoms()
    keys = sorted(half)
    if not keys:
        return [], np.zeros(0), np.zeros(0), np.zeros(0)
    k = np.array(keys, dtype=np.int64).reshape(-1, y.d)
    mult = np.where(np.any(k != 0, axis=1), 2.0, 1.0)
    mass = mult * np.abs([half[kk] for kk in keys])
    ph = phi(k)
    if np.any(~(ph > 0)):
        raise ValueError("symbol vanishes on the data support")
    ratio = bracket(k) ** p / ph
    return keys, mass, ratio, ph


def _greedy(mass, ratio, lam):
    t = np.zeros(len(mass))
    order = np.lexsort((np.arange(len(mass)), ratio))
    resid = float(mass.sum())
    frac = None
    for i in order:
        thresh = 0.5 * lam * ratio[i]
        if thresh >= resid:
            break
        if resid - mass[i] >= thresh:
            t[i] = 1.0
            resid -= mass[i]
        else:
            t[i] = (resid - thresh) / mass[i]
            frac = int(i)
            break
    return t, frac


def _reduced_objective(t, mass, ratio, lam):
    return (mass.sum() - mass @ t) ** 2 + lam * (ratio * mass) @ t


def solve_tikhonov(
    phi: SymbolDescriptor, y_delta: SpectralFunction | NoisyData, lam: float, p: float
) -> TikhonovSolution:
    """Exact global minimizer of ``J_lam`` over all real trigonometric polynomials."""
    if isinstance(y_delta, NoisyData):
        y_delta = y_delta.y_delta
    if lam < 0:
        raise ValueError("regularization parameter must be nonnegative")
    keys, mass, ratio, ph = _orbits(phi, y_delta, p)
    if not keys:
        return TikhonovSolution(zero(y_delta.d), 0.0, frozenset(), None)
    t, frac = _greedy(mass, ratio, lam)
    half = y_delta.half_atoms()
    atoms = {k: t[i] * half[k] / ph[i] for i, k in enumerate(keys) if t[i] > 0}
    u = SpectralFunction.from_half(y_delta.d, atoms) if atoms else zero(y_delta.d)
    return TikhonovSolution(
        u_delta=u,
        objective=tikhonov_objective(phi, y_delta, u, lam, p),
        active_set=frozenset(u.support()),
        fractional_index=keys[frac] if frac is not None else None,
    )


def solve_tikhonov_projected(
    phi: SymbolDescriptor,
    y_delta: SpectralFunction,
    lam: float,
    p: float,
    iters: int = 20_000,
) -> TikhonovSolution:
    """Projected-gradient minimizer of the reduced problem; slow reference solver."""
    keys, mass, ratio, ph = _orbits(phi, y_delta, p)
    if not keys:
        return TikhonovSolution(zero(y_delta.d), 0.0, frozenset(), None)
    t = np.full(len(mass), 0.5)
    step = 1.0 / (2.0 * float(mass @ mass))
    for _ in range(iters):
        g = -2.0 * (mass.sum() - mass @ t) * mass + lam * ratio * mass
        t = np.clip(t - step * g, 0.0, 1.0)
    half = y_delta.half_atoms()
    u = SpectralFunction.from_half(y_delta.d, {k: t[i] * half[k] / ph[i] for i, k in enumerate(keys)})
    return TikhonovSolution(u, tikhonov_objective(phi, y_delta, u, lam, p), frozenset(u.support()), None)


def neuron_budget(delta: float, a: float, p: float) -> int:
    """Neuron count ``ceil((1/delta)^{2p/(a+p)})`` that balances the two error terms."""
    if not 0 < delta < 1:
        raise ValueError("noise level must lie in (0, 1)")
    # guard against ceil(10.000000000000002) for exact powers
    v = (1.0 / delta) ** (2 * p / (a + p))
    r = round(v)
    return int(r) if abs(v - r) <= 1e-9 * v else math.ceil(v)


# -- rate experiment ------------------------------------------------------------

@dataclass
class TikhonovSample:
    delta: float
    rep: int
    error: float
    bound: float
    lam: float
    shift: float
    residual: float
    penalty: float
    beats_truth: bool


def _truth_radii(spec: InverseProblemSpec, rng) -> np.ndarray:
    # log-spaced scales across the band with one random common shift
    lo, hi = math.log(spec.k_min), math.log(spec.K_max)
    h = (hi - lo) / spec.n_scales
    return np.exp(lo + h * (np.arange(spec.n_scales) + rng.uniform()))


def _tikhonov_task(args):
    spec, delta, i, rep, reps, seed = args
    rng = make_rng(seed, i, rep, 0)
    radii = _truth_radii(spec, rng)
    truth = spec.cls.ref(spec.d) + make_truth(
        spec.p, spec.cls.R, spec.d, spec.K_max, (seed, i, rep, 1), radii=radii
    )
    y = apply_symbol(spec.phi, truth)
    data = add_noise(y, delta, (seed, i, rep, 2), k_max=spec.K_max)
    lam = delta**2
    sol = solve_tikhonov(spec.phi, data.y_delta, lam, spec.p)
    R = spec.cls.R
    # lower link constant on the only frequencies the error can occupy
    m, _ = _symbol_range(spec.phi, spec.a, np.concatenate([truth.freqs, data.y_delta.freqs]))
    bound = modulus_bound(R + 1, spec.a, spec.p, (math.sqrt(1 + R) + 1) * delta / m)
    j_truth = tikhonov_objective(spec.phi, data.y_delta, truth, lam, spec.p)
    return TikhonovSample(
        delta=delta,
        rep=rep,
        error=l2_norm(truth - sol.u_delta),
        bound=bound,
        lam=lam,
        shift=float(radii[0]),
        residual=barron_norm(apply_symbol(spec.phi, sol.u_delta) - data.y_delta, 0.0),
        penalty=barron_norm(sol.u_delta, spec.p),
        beats_truth=sol.objective <= j_truth * (1 + 1e-12),
    )


def rate_experiment(
    spec: InverseProblemSpec,
    delta_grid,
    reps: int,
    seed: int,
    workers: int = 1,
) -> RateReport:
    """Error of the ``lam = delta^2`` Tikhonov solution as the noise level shrinks.

    Per ``(delta, rep)`` a fresh truth on the sphere of ``B^p`` radius ``R``
    is drawn with ``n_scales`` orbits at log-spaced radii across
    ``[k_min, K_max]`` (random common shift), its data are perturbed by
    noise of B0 size ``delta``, and the L2 reconstruction error is
    recorded. The slope is fitted to the median error per level.
    """
    deltas = [float(v) for v in delta_grid]
    if any(not 0 < v < 1 for v in deltas) or any(b >= a for a, b in zip(deltas, deltas[1:])):
        raise ValueError("delta grid must be strictly decreasing inside (0, 1)")
    if reps < 10:
        raise ValueError("need at least 10 replications")
    tasks = [(spec, dl, i, r, reps, seed) for i, dl in enumerate(deltas) for r in range(reps)]
    if workers > 1:
        with ProcessPoolExecutor(workers) as ex:
            samples = list(ex.map(_tikhonov_task, tasks, chunksize=max(1, len(tasks) // (4 * workers))))
    else:
        samples = [_tikhonov_task(t) for t in tasks]
    samples.sort(key=lambda s: (-s.delta, s.rep))
    med, iqr, bnd = [], [], []
    for dl in deltas:
        errs = np.array([s.error for s in samples if s.delta == dl])
        med.append(float(np.median(errs)))
        q1, q3 = np.percentile(errs, [25, 75])
        iqr.append(float(q3 - q1))
        bnd.append(max(s.bound for s in samples if s.delta == dl))
    fit = fit_rate(list(zip(deltas, med)))
    return RateReport(
        levels=np.array(deltas),
        errors=np.array(med),
        spread=np.array(iqr),
        bound=np.array(bnd),
        fit=fit,
        samples=samples,
        meta={"theory_slope": spec.rate},
    )

