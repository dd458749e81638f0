"""Fourier-multiplier forward maps, link constants and the Schroedinger composition."""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np

from .rates import fmt, make_rng
from .spectral import (
    SpectralFunction,
    barron_norm,
    bracket,
    l2_norm,
    multiply,
    random_function,
    zero,
)


class ContractionError(ValueError):
    """Neumann series requested with ``||W||_B0 / alpha >= 1``."""


# -- symbols ---------------------------------------------------------------

@dataclass(frozen=True)
class BracketPower:
    """Symbol ``<k>^s``."""

    s: float

    def __call__(self, freqs) -> np.ndarray:
        return bracket(freqs) ** self.s


@dataclass(frozen=True)
class Resolvent:
    """Symbol ``1 / (alpha + |k|^2)`` of ``(alpha - Laplacian)^{-1}``."""

    alpha: float

    def __post_init__(self):
        if not self.alpha > 0:
            raise ValueError(f"alpha must be positive, got {self.alpha}")

    def __call__(self, freqs) -> np.ndarray:
        k = np.asarray(freqs, dtype=float)
        return 1.0 / (self.alpha + np.sum(k * k, axis=-1))


@dataclass(frozen=True)
class Product:
    parts: tuple

    def __init__(self, parts):
        object.__setattr__(self, "parts", tuple(parts))

    def __call__(self, freqs) -> np.ndarray:
        out = np.ones(np.asarray(freqs).shape[:-1])
        for p in self.parts:
            out = out * p(freqs)
        return out


SymbolDescriptor = BracketPower | Resolvent | Product


def apply_symbol(phi: SymbolDescriptor, u: SpectralFunction) -> SpectralFunction:
    if u.is_zero():
        return u
    return u.with_coeffs(u.coeffs * phi(u.freqs))


def lattice_ball(K: float, d: int) -> np.ndarray:
    """All integer points with ``|k| <= K``."""
    r = int(math.floor(K))
    axes = [np.arange(-r, r + 1)] * d
    pts = np.array(list(itertools.product(*axes)), dtype=np.int64).reshape(-1, d)
    return pts[np.sum(pts * pts, axis=1) <= K * K + 1e-9]


def _symbol_range(phi, a, freqs):
    vals = phi(freqs) * bracket(freqs) ** a
    return float(vals.min()), float(vals.max())


def ellipticity_bounds(phi: SymbolDescriptor, a: float, K: float, d: int = 2) -> tuple[float, float]:
    """Exhaustive inf and sup of ``phi(k) <k>^a`` over the lattice ball ``|k| <= K``."""
    if K < 1:
        raise ValueError("cutoff radius must be at least 1")
    c, C = _symbol_range(phi, a, lattice_ball(K, d))
    if not (c > 0 and np.isfinite(C)):
        raise ValueError(f"symbol is not elliptic of order {a} on the ball: ({c}, {C})")
    return c, C


@dataclass
class LinkReport:
    a: float
    m: float
    M: float
    num_pairs: int
    worst_pair_ids: tuple
    scan_c: float = float("nan")
    scan_C: float = float("nan")
    skipped: int = 0

    @property
    def contained(self) -> bool:
        """Randomized constants lie inside the exhaustive scan over the trial supports."""
        tol = 1e-12
        return self.scan_c * (1 - tol) <= self.m and self.M <= self.scan_C * (1 + tol)

    def to_kv(self) -> str:
        rows = [
            ("a", self.a), ("m", self.m), ("M", self.M), ("num_pairs", self.num_pairs),
            ("skipped", self.skipped), ("argmin_pair", self.worst_pair_ids[0]),
            ("argmax_pair", self.worst_pair_ids[1]), ("scan_c", self.scan_c),
            ("scan_C", self.scan_C), ("contained", self.contained),
        ]
        return "".join(f"{k}={fmt(v)}\n" for k, v in rows)


def link_constants(
    phi: SymbolDescriptor,
    a: float,
    trials: int,
    seed: int,
    d: int = 2,
    k_max: int = 8,
    n_orbits: int = 6,
) -> LinkReport:
    """Randomized two-sided link constants of ``F = apply_symbol(phi, .)``.

    Each trial draws an independent pair on its own stream ``(seed, trial)``
    and records ``||F u1 - F u2||_B0 / ||u1 - u2||_B^{-a}``.
    """
    if trials < 1:
        raise ValueError("need at least one trial")
    ratios, ids, supports = [], [], []
    skipped = 0
    for i in range(trials):
        rng = make_rng(seed, i)
        u1 = random_function(rng, d, n_orbits, k_max)
        u2 = random_function(rng, d, n_orbits, k_max)
        w = u1 - u2
        if w.is_zero():
            skipped += 1
            continue
        num = barron_norm(apply_symbol(phi, u1) - apply_symbol(phi, u2), 0.0)
        ratios.append(num / barron_norm(w, -a))
        ids.append(i)
        supports.append(w.freqs)
    if not ratios:
        raise ValueError("all trial pairs were degenerate")
    ratios = np.asarray(ratios)
    sc, sC = _symbol_range(phi, a, np.concatenate(supports))
    return LinkReport(
        a=a,
        m=float(ratios.min()),
        M=float(ratios.max()),
        num_pairs=len(ratios),
        worst_pair_ids=(ids[int(ratios.argmin())], ids[int(ratios.argmax())]),
        scan_c=sc,
        scan_C=sC,
        skipped=skipped,
    )


@dataclass(frozen=True)
class SmoothnessClass:
    """Ball ``{z : ||z - u*||_B^p <= R}``; the reference defaults to zero."""

    p: float
    R: float
    reference: SpectralFunction | None = None

    def ref(self, d: int) -> SpectralFunction:
        return self.reference if self.reference is not None else zero(d)

    def contains(self, z: SpectralFunction, rtol: float = 1e-12) -> bool:
        return barron_norm(z - self.ref(z.d), self.p) <= self.R * (1 + rtol)

    def sample(self, rng, d: int, k_max: int, n_orbits: int) -> SpectralFunction:
        w = random_function(rng, d, n_orbits, k_max)
        radius = self.R * rng.uniform()
        return self.ref(d) + w * (radius / barron_norm(w, self.p))


@dataclass
class StabilityReport:
    max_ratio: float
    bound: float
    m: float
    num_pairs: int
    skipped: int
    ratios: np.ndarray = field(repr=False, default=None)

    @property
    def ok(self) -> bool:
        return self.max_ratio <= self.bound * (1 + 1e-9)

    def to_kv(self) -> str:
        rows = [("max_ratio", self.max_ratio), ("bound", self.bound), ("m", self.m),
                ("num_pairs", self.num_pairs), ("skipped", self.skipped), ("ok", self.ok)]
        return "".join(f"{k}={fmt(v)}\n" for k, v in rows)


def conditional_stability_check(
    phi: SymbolDescriptor,
    a: float,
    cls: SmoothnessClass,
    trials: int,
    seed: int,
    d: int = 2,
    k_max: int = 6,
    n_orbits: int = 5,
) -> StabilityReport:
    """Worst observed ``||u1-u2||_L2 / ||F u1 - F u2||_B0^{p/(p+a)}`` over pairs in the class.

    The reported bound is ``m^{-p/(p+a)} (2R)^{a/(p+a)}`` where ``m`` is the
    lower symbol constant on the cube that contains every sampled support.
    """
    p, R = cls.p, cls.R
    e = p / (p + a)
    m, _ = ellipticity_bounds(phi, a, max(1.0, k_max * math.sqrt(d)), d)
    ratios, skipped = [], 0
    for i in range(trials):
        rng = make_rng(seed, i)
        u1 = cls.sample(rng, d, k_max, n_orbits)
        u2 = cls.sample(rng, d, k_max, n_orbits)
        den = barron_norm(apply_symbol(phi, u1) - apply_symbol(phi, u2), 0.0)
        if den == 0.0:
            skipped += 1
            continue
        ratios.append(l2_norm(u1 - u2) / den**e)
    ratios = np.asarray(ratios)
    return StabilityReport(
        max_ratio=float(ratios.max()) if len(ratios) else 0.0,
        bound=m ** (-e) * (2 * R) ** (a / (p + a)),
        m=m,
        num_pairs=len(ratios),
        skipped=skipped,
        ratios=ratios,
    )


def modulus_bound(R: float, a: float, p: float, delta: float) -> float:
    """Upper bound ``(2R)^{a/(p+a)} delta^{p/(p+a)}`` on the modulus of continuity."""
    if min(R, a, p, delta) <= 0:
        raise ValueError("R, a, p and delta must be positive")
    return (2 * R) ** (a / (p + a)) * delta ** (p / (p + a))


# -- Schroedinger ----------------------------------------------------------

def schroedinger_apply_T(alpha: float, W: SpectralFunction, y: SpectralFunction) -> SpectralFunction:
    """``(alpha - Laplacian)^{-1} (W y)``."""
    return apply_symbol(Resolvent(alpha), multiply(W, y))


def schroedinger_forward(
    alpha: float,
    W: SpectralFunction,
    u: SpectralFunction,
    tol: float = 1e-10,
    max_terms: int = 10_000,
) -> SpectralFunction:
    """Solve ``(alpha - Laplacian)(I + T) y = u`` by a truncated Neumann series.

    Terms ``(-T)^j v0`` with ``v0 = (alpha - Laplacian)^{-1} u`` are summed
    until one has B0 norm below ``tol (1 - q)``, ``q = ||W||_B0 / alpha``,
    which bounds the discarded tail by ``tol``.
    """
    q = barron_norm(W, 0.0) / alpha
    if q >= 1:
        raise ContractionError(f"contraction factor q = {q:.6g} >= 1")
    term = apply_symbol(Resolvent(alpha), u)
    total = term
    for _ in range(max_terms):
        if barron_norm(term, 0.0) < tol * (1 - q):
            return total
        term = -schroedinger_apply_T(alpha, W, term)
        total = total + term
    raise RuntimeError(f"Neumann series did not reach tol={tol} in {max_terms} terms")


def schroedinger_residual(alpha: float, W: SpectralFunction, u: SpectralFunction, y: SpectralFunction) -> float:
    """B0 norm of ``(alpha - Laplacian)(I + T) y - u = (alpha - Laplacian) y + W y - u``."""
    lhs = y.with_coeffs(y.coeffs / Resolvent(alpha)(y.freqs)) if not y.is_zero() else y
    return barron_norm(lhs + multiply(W, y) - u, 0.0)


def schroedinger_dense_solve(
    alpha: float, W: SpectralFunction, u: SpectralFunction, K: int
) -> SpectralFunction:
    """Direct solve of ``(alpha + |k|^2) y_k + sum_j W_{k-j} y_j = u_k`` on the box ``|k_i| <= K``."""
    d = u.d
    box = np.array(list(itertools.product(range(-K, K + 1), repeat=d)), dtype=np.int64)
    index = {tuple(k): i for i, k in enumerate(box)}
    n = len(box)
    A = np.zeros((n, n), dtype=np.complex128)
    A[np.arange(n), np.arange(n)] = alpha + np.sum(box * box, axis=1)
    for kw, cw in W:
        for j, kj in enumerate(box):
            i = index.get(tuple(int(v) for v in kj + np.asarray(kw)))
            if i is not None:
                A[i, j] += cw
    rhs = np.zeros(n, dtype=np.complex128)
    for k, c in u:
        if k not in index:
            raise ValueError(f"source frequency {k} outside the solve box")
        rhs[index[k]] = c
    return SpectralFunction._build(d, box, np.linalg.solve(A, rhs))
