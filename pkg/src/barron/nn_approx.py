"""Two-layer RePU networks built by importance-sampled Monte Carlo.

A density ``rho`` over neuron parameters ``theta = (z, t, omega)`` defines
the target ``u(x) = int g(x, theta) rho(theta) dtheta`` with kernel
``g(x, theta) = (z <omega, x> - t |omega|)_+^s``. Drawing ``n`` parameters
from ``mu ~ |theta|^s |rho|`` and averaging ``g / |theta|^s * sgn(rho)``
gives a network with ``n`` neurons and mean squared error ``O(1/n)``.

The domain is the box ``[-1, 1]^d`` and ``t`` ranges over ``[0, sqrt(d)]``.
"""
from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy import stats

from .rates import RateReport, fit_rate, make_rng

SIGNS = ("positive", "z-odd", "z-omega1")


class QuadratureError(RuntimeError):
    """Node doubling did not settle the quadrature to the requested tolerance."""


class EnvelopeError(RuntimeError):
    """Rejection sampling accepted too few proposals."""


def repu(s: int, tau):
    """Rectified power unit ``max(0, tau)^s``."""
    if s < 1:
        raise ValueError("RePU order must be a positive integer")
    return np.maximum(tau, 0.0) ** s


# -- parameters -------------------------------------------------------------

@dataclass(frozen=True)
class RePUParam:
    z: int
    t: float
    omega: np.ndarray

    @property
    def norm(self) -> float:
        # |omega| + t + 1, which stays within |omega| + T + 1 on G
        return float(np.linalg.norm(self.omega)) + self.t + 1.0


@dataclass(frozen=True)
class GenericParam:
    omega: np.ndarray
    b: float
    beta: float

    @property
    def norm(self) -> float:
        return float(np.linalg.norm(self.omega)) + abs(self.b) + abs(self.beta)


def kernel_eval(theta, x, s: int):
    """Neuron output at ``x`` (shape ``(d,)`` or ``(N, d)``)."""
    x = np.asarray(x, dtype=float)
    omega = np.asarray(theta.omega, dtype=float)
    if x.shape[-1] != omega.shape[-1]:
        raise ValueError(f"point dimension {x.shape[-1]} != parameter dimension {omega.shape[-1]}")
    if isinstance(theta, GenericParam):
        return theta.beta * repu(s, x @ omega + theta.b)
    return repu(s, theta.z * (x @ omega) - theta.t * np.linalg.norm(omega))


@dataclass(frozen=True)
class NeuronDraws:
    """Struct-of-arrays view of sampled RePU parameters."""

    z: np.ndarray
    t: np.ndarray
    omega: np.ndarray

    def __len__(self) -> int:
        return len(self.z)

    def __getitem__(self, i) -> RePUParam:
        return RePUParam(int(self.z[i]), float(self.t[i]), self.omega[i])

    def __iter__(self):
        return (self[i] for i in range(len(self)))

    @property
    def norms(self) -> np.ndarray:
        return np.linalg.norm(self.omega, axis=1) + self.t + 1.0


# -- densities --------------------------------------------------------------

@dataclass(frozen=True)
class DensityDescriptor:
    """Factorized density ``mass * (1/2) * U(t; [0, T]) * N_trunc(omega; 0, sigma^2 I, |omega| <= cutoff*sigma)``.

    ``sign`` picks ``sgn(rho)``: ``"positive"``, ``"z-odd"`` (``z``) or
    ``"z-omega1"`` (``z * sgn(omega_1)``).
    """

    d: int = 2
    sigma: float = 1.0
    cutoff: float = 3.0
    sign: str = "positive"
    mass: float = 1.0

    def __post_init__(self):
        if self.sign not in SIGNS:
            raise ValueError(f"sign must be one of {SIGNS}")
        if self.d not in (1, 2):
            raise ValueError("quadrature is implemented for d = 1 and d = 2")

    @property
    def T(self) -> float:
        return math.sqrt(self.d)

    @property
    def r_max(self) -> float:
        return self.cutoff * self.sigma

    @property
    def _radial_norm(self) -> float:
        # normalizer of the truncated Gaussian in polar form
        return (2.0 * math.pi * self.sigma**2) ** (self.d / 2) * float(stats.chi(self.d).cdf(self.cutoff))

    def radial(self, r):
        """``rho_omega`` as a function of ``|omega|`` (zero beyond the cutoff)."""
        r = np.asarray(r, dtype=float)
        val = np.exp(-0.5 * (r / self.sigma) ** 2) / self._radial_norm
        return np.where(r <= self.r_max, val, 0.0)

    def sgn(self, z, omega):
        z = np.asarray(z, dtype=float)
        if self.sign == "positive":
            return np.ones_like(z)
        if self.sign == "z-odd":
            return z
        return z * np.where(np.asarray(omega)[..., 0] >= 0, 1.0, -1.0)

    def __call__(self, theta: RePUParam) -> float:
        if not 0 <= theta.t <= self.T:
            return 0.0
        r = float(np.linalg.norm(theta.omega))
        return float(self.mass * 0.5 / self.T * self.radial(r) * self.sgn(theta.z, theta.omega))


def _gl(n, a, b):
    x, w = np.polynomial.legendre.leggauss(n)
    return 0.5 * (b - a) * x + 0.5 * (b + a), 0.5 * (b - a) * w


def _directions(rho, nodes, x=None):
    """Quadrature over unit directions ``kappa`` with breakpoints at sign and kernel kinks."""
    if rho.d == 1:
        return np.array([[1.0], [-1.0]]), np.ones(2)
    breaks = [0.5 * math.pi, 1.5 * math.pi]
    if x is not None and np.linalg.norm(x) > 0:
        psi = math.atan2(x[1], x[0])
        breaks += [(psi + 0.5 * math.pi) % (2 * math.pi), (psi - 0.5 * math.pi) % (2 * math.pi)]
    breaks = np.unique(np.concatenate([[0.0, 2 * math.pi], breaks]))
    phis, ws = [], []
    for a, b in zip(breaks[:-1], breaks[1:]):
        if b - a > 1e-14:
            p, w = _gl(nodes, a, b)
            phis.append(p)
            ws.append(w)
    phi = np.concatenate(phis)
    return np.column_stack([np.cos(phi), np.sin(phi)]), np.concatenate(ws)


def hs1_norm_with_delta(rho: DensityDescriptor, s: float, nodes: int = 48) -> tuple[float, float]:
    """``int |theta|^s |rho|`` with the relative change under node doubling."""

    def quad(n):
        r, wr = _gl(n, 0.0, rho.r_max)
        t, wt = _gl(n, 0.0, rho.T)
        surf = 2.0 if rho.d == 1 else 2.0 * math.pi
        radial = wr * r ** (rho.d - 1) * rho.radial(r) * surf
        integrand = (r[:, None] + t[None, :] + 1.0) ** s
        # z sum contributes 2 * (1/2); t density is 1/T
        return rho.mass * float(radial @ integrand @ wt) / rho.T

    v1, v2 = quad(nodes), quad(2 * nodes)
    return v2, abs(v2 - v1) / max(abs(v2), 1e-300)


def hs1_norm(rho: DensityDescriptor, s: float, nodes: int = 48, rtol: float = 1e-8) -> float:
    if rho.mass == 0:
        return 0.0
    val, delta = hs1_norm_with_delta(rho, s, nodes)
    if delta > rtol:
        raise QuadratureError(f"hs1 quadrature refinement delta {delta:.3e} > {rtol:.1e}")
    return val


def _oracle_points(rho, s, X, nodes):
    s = int(s)
    r, wr = _gl(nodes, 0.0, rho.r_max)
    radial = float(wr @ (r ** (rho.d - 1 + s) * rho.radial(r)))
    tq, wq = np.polynomial.legendre.leggauss(max(2, s // 2 + 2))
    out = np.empty(len(X))
    for j, x in enumerate(X):
        kap, wk = _directions(rho, nodes, x)
        acc = 0.0
        for z in (1, -1):
            proj = z * (kap @ x)
            upper = np.clip(proj, 0.0, rho.T)
            # Gauss-Legendre on [0, upper] is exact for the polynomial (proj - t)^s
            tt = 0.5 * upper[:, None] * (tq[None, :] + 1.0)
            inner = 0.5 * upper * (repu(s, proj[:, None] - tt) @ wq)
            acc += 0.5 * float(wk @ (rho.sgn(z, kap) * inner))
        out[j] = acc
    return rho.mass * radial / rho.T * out


def oracle_integral(rho: DensityDescriptor, s: int, x, nodes: int = 32, check: bool = False, rtol: float = 1e-8):
    """``(T_g rho)(x)`` by quadrature; ``x`` has shape ``(d,)`` or ``(N, d)``.

    The kernel factorizes as ``|omega|^s (z <kappa, x> - t)_+^s`` so the
    radial part is a single Gauss-Legendre sum; directions are split at the
    kinks of the integrand and ``t`` at the kink of the ramp.
    """
    X = np.atleast_2d(np.asarray(x, dtype=float))
    if X.shape[-1] != rho.d:
        raise ValueError("point dimension does not match the density")
    vals = _oracle_points(rho, s, X, nodes)
    if check:
        fine = _oracle_points(rho, s, X, 2 * nodes)
        scale = max(np.max(np.abs(fine)), 1e-300)
        if np.max(np.abs(fine - vals)) > rtol * scale:
            raise QuadratureError("oracle quadrature did not settle under node doubling")
        vals = fine
    return float(vals[0]) if np.asarray(x).ndim == 1 else vals


def sample_mu(rho: DensityDescriptor, s: float, n: int, seed) -> NeuronDraws:
    """``n`` independent draws from ``mu ~ |theta|^s |rho(theta)|`` by rejection.

    Proposals come from ``|rho|`` itself; acceptance probability is
    ``(|theta| / (r_max + T + 1))^s``.
    """
    d = rho.d
    if n == 0:
        return NeuronDraws(np.zeros(0, dtype=np.int64), np.zeros(0), np.zeros((0, d)))
    rng = make_rng(*np.atleast_1d(seed))
    cap = rho.r_max + rho.T + 1.0
    zs, ts, oms = [], [], []
    have, proposed = 0, 0
    batch = max(64, 2 * n)
    while have < n:
        z = rng.choice(np.array([-1, 1]), size=batch)
        t = rng.uniform(0.0, rho.T, size=batch)
        om = rng.normal(scale=rho.sigma, size=(batch, d))
        r = np.linalg.norm(om, axis=1)
        inside = r <= rho.r_max
        z, t, om, r = z[inside], t[inside], om[inside], r[inside]
        acc = rng.uniform(size=len(z)) < ((r + t + 1.0) / cap) ** s
        proposed += len(inside)
        zs.append(z[acc])
        ts.append(t[acc])
        oms.append(om[acc])
        have += int(acc.sum())
        if proposed >= 10_000 and have / proposed < 1e-3:
            raise EnvelopeError(f"acceptance rate {have / proposed:.2e} below 1e-3")
    return NeuronDraws(np.concatenate(zs)[:n], np.concatenate(ts)[:n], np.concatenate(oms)[:n])


@dataclass(frozen=True)
class TwoLayerNetwork:
    """``x -> sum_i a_i sigma_s(<w_i, x> + b_i) + a_0`` with RePU activation."""

    outer: np.ndarray
    inner: np.ndarray
    bias: np.ndarray
    a0: float = 0.0
    order: int = 2
    excluded: int = 0

    def __len__(self) -> int:
        return len(self.outer)

    def __call__(self, x, chunk: int = 4096):
        X = np.atleast_2d(np.asarray(x, dtype=float))
        out = np.empty(len(X))
        for i in range(0, len(X), chunk):
            pre = X[i:i + chunk] @ self.inner.T + self.bias
            out[i:i + chunk] = repu(self.order, pre) @ self.outer + self.a0
        return float(out[0]) if np.asarray(x).ndim == 1 else out


def build_mc_network(rho: DensityDescriptor, s: int, draws: NeuronDraws, norm: float | None = None) -> TwoLayerNetwork:
    """Network form of ``(|rho|_{H^s_1} / n) sum_i g(x, theta_i) / |theta_i|^s sgn(rho(theta_i))``.

    ``(z <omega, x> - t |omega|)_+^s`` is the neuron with inner weight
    ``z omega`` and bias ``-t |omega|``.
    """
    if len(draws) == 0:
        raise ValueError("need at least one draw")
    if norm is None:
        norm = hs1_norm(rho, s)
    nrm = draws.norms
    keep = nrm > 0
    n = len(draws)
    sg = rho.sgn(draws.z, draws.omega)
    return TwoLayerNetwork(
        outer=(norm / n) * sg[keep] / nrm[keep] ** s,
        inner=draws.z[keep, None] * draws.omega[keep],
        bias=-draws.t[keep] * np.linalg.norm(draws.omega[keep], axis=1),
        a0=0.0,
        order=int(s),
        excluded=int((~keep).sum()),
    )


def growth_constant(rho: DensityDescriptor, s: int) -> float:
    """``C_s = (1 + T)^s`` with ``sup_Omega |g(x, theta)| <= C_s |theta|^s``."""
    return (1.0 + rho.T) ** s


def box_grid(d: int, points: int = 33):
    """Tensor trapezoid nodes and weights on ``[-1, 1]^d``."""
    x = np.linspace(-1.0, 1.0, points)
    w = np.full(points, x[1] - x[0])
    w[[0, -1]] *= 0.5
    X = np.array(np.meshgrid(*([x] * d), indexing="ij")).reshape(d, -1).T
    W = np.prod(np.array(np.meshgrid(*([w] * d), indexing="ij")).reshape(d, -1), axis=0)
    return X, W


@dataclass
class MCSample:
    n: int
    rep: int
    error: float


def _mc_task(args):
    rho, s, n, i, rep, seed, norm, X, W, target = args
    draws = sample_mu(rho, s, n, (seed, i, rep))
    net = build_mc_network(rho, s, draws, norm)
    err = math.sqrt(float(W @ (net(X) - target) ** 2))
    return MCSample(n, rep, err)


def mise_experiment(
    rho: DensityDescriptor,
    s: int,
    n_grid,
    reps: int,
    grid_points: int = 33,
    seed: int = 0,
    workers: int = 1,
) -> RateReport:
    """Root mean integrated squared error of Monte Carlo networks per neuron count."""
    n_grid = [int(n) for n in n_grid]
    if any(b <= a for a, b in zip(n_grid, n_grid[1:])) or n_grid[0] < 1:
        raise ValueError("neuron counts must be positive and strictly increasing")
    if reps < 10:
        raise ValueError("need at least 10 replications")
    if grid_points < 33:
        raise ValueError("grid needs at least 33 points per axis")
    norm = hs1_norm(rho, s)
    X, W = box_grid(rho.d, grid_points)
    target = oracle_integral(rho, s, X)
    tasks = [(rho, s, n, i, r, seed, norm, X, W, target) for i, n in enumerate(n_grid) for r in range(reps)]
    if workers > 1:
        with ProcessPoolExecutor(workers) as ex:
            samples = list(ex.map(_mc_task, tasks, chunksize=max(1, len(tasks) // (4 * workers))))
    else:
        samples = [_mc_task(t) for t in tasks]
    samples.sort(key=lambda m: (m.n, m.rep))
    vol = 2.0**rho.d
    cs = growth_constant(rho, s)
    rms, se, bound = [], [], []
    for n in n_grid:
        sq = np.array([m.error**2 for m in samples if m.n == n])
        mse = float(sq.mean())
        rms.append(math.sqrt(mse))
        # delta method for the standard error of sqrt(mean)
        se.append(float(sq.std(ddof=1) / math.sqrt(len(sq)) / (2 * math.sqrt(mse))))
        bound.append(cs * norm * math.sqrt(vol / n))
    return RateReport(
        levels=np.array(n_grid, dtype=float),
        errors=np.array(rms),
        spread=np.array(se),
        bound=np.array(bound),
        fit=fit_rate(list(zip(n_grid, rms))),
        samples=samples,
        meta={"hs1_norm": norm, "C_s": cs, "volume": vol, "target_l2": math.sqrt(float(W @ target**2))},
    )
