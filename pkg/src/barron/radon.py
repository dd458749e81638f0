"""Radon transform of planar Gaussian mixtures and sinogram norms.

Fourier convention: ``u_hat(xi) = (2 pi)^{-2} int u(x) exp(-i <xi, x>) dx``
in the plane and ``(2 pi)^{-1} int ... d zeta`` along the offset variable,
so the projection-slice relation reads ``F_1 Ru(xi, kappa) = 2 pi u_hat(xi kappa)``.
With these conventions the sinogram norm with indices ``(0, 1)`` is exactly
``4 pi`` times the ``B^{-1}`` norm.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

SLICE_CONSTANT = 2.0 * math.pi
#: sinogram norm / B^{-1} norm under the conventions above
RATIO_CONSTANT = 4.0 * math.pi


class QuadratureError(RuntimeError):
    pass


@dataclass(frozen=True)
class GaussianTerm:
    A: float
    m: tuple
    sigma: float

    def __post_init__(self):
        if not self.sigma > 0:
            raise ValueError("Gaussian width must be positive")


@dataclass(frozen=True)
class GaussianMixture:
    """``u(x) = sum_j A_j exp(-|x - m_j|^2 / (2 sigma_j^2))`` on the plane."""

    terms: tuple

    def __init__(self, terms):
        terms = tuple(t if isinstance(t, GaussianTerm) else GaussianTerm(float(t[0]), tuple(map(float, t[1])), float(t[2]))
                      for t in terms)
        object.__setattr__(self, "terms", terms)

    @property
    def sigma_min(self) -> float:
        return min(t.sigma for t in self.terms)

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        out = np.zeros(x.shape[:-1])
        for t in self.terms:
            dx = x - np.asarray(t.m)
            out = out + t.A * np.exp(-np.sum(dx * dx, axis=-1) / (2 * t.sigma**2))
        return out

    def fourier(self, xi):
        """``u_hat`` at frequencies of shape ``(..., 2)``."""
        xi = np.asarray(xi, dtype=float)
        out = np.zeros(xi.shape[:-1], dtype=np.complex128)
        r2 = np.sum(xi * xi, axis=-1)
        for t in self.terms:
            out = out + (t.A * t.sigma**2 / (2 * math.pi)) * np.exp(-0.5 * t.sigma**2 * r2) * np.exp(
                -1j * (xi @ np.asarray(t.m))
            )
        return out


@dataclass(frozen=True)
class SinogramPoint:
    zeta: float
    kappa: float

    def __post_init__(self):
        if not 0 <= self.kappa < 2 * math.pi:
            raise ValueError("angle must lie in [0, 2 pi)")


def unit(kappa):
    kappa = np.asarray(kappa, dtype=float)
    return np.stack([np.cos(kappa), np.sin(kappa)], axis=-1)


def radon_transform(u: GaussianMixture, zeta, kappa=None):
    """Integral of ``u`` over the line ``<x, (cos kappa, sin kappa)> = zeta``.

    ``zeta`` may be a :class:`SinogramPoint`; otherwise offsets and angles
    broadcast against each other.
    """
    if isinstance(zeta, SinogramPoint):
        zeta, kappa = zeta.zeta, zeta.kappa
    zeta = np.asarray(zeta, dtype=float)
    e = unit(kappa)
    out = np.zeros(np.broadcast(zeta, np.asarray(kappa)).shape)
    for t in u.terms:
        c = e @ np.asarray(t.m)
        out = out + t.A * math.sqrt(2 * math.pi) * t.sigma * np.exp(-((zeta - c) ** 2) / (2 * t.sigma**2))
    return float(out) if out.ndim == 0 else out


def _panels(n_panels, nodes, a, b):
    x, w = np.polynomial.legendre.leggauss(nodes)
    edges = np.linspace(a, b, n_panels + 1)
    h = np.diff(edges)
    xs = (edges[:-1, None] + 0.5 * h[:, None] * (x[None, :] + 1.0)).ravel()
    ws = (0.5 * h[:, None] * w[None, :]).ravel()
    return xs, ws


def _polar_rule(u, level):
    """Radial Gauss-Legendre panels on ``[0, r_max]`` times a periodic angular trapezoid."""
    r_max = math.sqrt(80.0) / u.sigma_min
    r, wr = _panels(8 * level, 16, 0.0, r_max)
    n_ang = 64 * level
    kap = 2 * math.pi * np.arange(n_ang) / n_ang
    return r, wr, kap, np.full(n_ang, 2 * math.pi / n_ang)


def _refined(f, level, rtol):
    v1, v2 = f(level), f(2 * level)
    scale = max(abs(v2), 1e-300)
    if abs(v2 - v1) > rtol * scale:
        raise QuadratureError(f"refinement changed the value by {abs(v2 - v1) / scale:.2e}")
    return v2


def sinogram_norm(u: GaussianMixture, s_sino: float, t: float, level: int = 2, rtol: float = 1e-6) -> float:
    """``int_{S^1} int_R |F_1 Ru(xi, kappa)| <xi>^s (|xi| / <xi>)^t dxi dkappa``.

    ``F_1 Ru`` is taken from the projection-slice relation. The offset
    frequency runs over the whole line, so every plane frequency is visited
    twice.
    """

    def q(lv):
        r, wr, kap, wk = _polar_rule(u, lv)
        # xi over R = both signs of the radial variable
        xi = np.concatenate([-r[::-1], r])
        wx = np.concatenate([wr[::-1], wr])
        pts = xi[None, :, None] * unit(kap)[:, None, :]
        F1 = SLICE_CONSTANT * np.abs(u.fourier(pts))
        br = np.sqrt(1 + xi**2)
        weight = br**s_sino * (np.abs(xi) / br) ** t
        return float(wk @ (F1 @ (wx * weight)))

    return _refined(q, level, rtol)


def barron_norm_radial(u: GaussianMixture, s: float, level: int = 2, rtol: float = 1e-6) -> float:
    """``int |u_hat(xi)| <xi>^s dxi`` in polar coordinates."""

    def q(lv):
        r, wr, kap, wk = _polar_rule(u, lv)
        pts = r[None, :, None] * unit(kap)[:, None, :]
        vals = np.abs(u.fourier(pts))
        return float(wk @ (vals @ (wr * r * (1 + r**2) ** (s / 2))))

    return _refined(q, level, rtol)


@dataclass
class IdentityReport:
    barron: np.ndarray
    sinogram: np.ndarray
    ratios: np.ndarray
    cv: float
    monotone: np.ndarray
    skipped: list

    @property
    def passed(self) -> bool:
        return bool(self.cv < 0.01 and np.all(self.monotone))

    def to_csv(self) -> str:
        from .rates import fmt

        rows = ["member_id,barron_norm,sinogram_norm,ratio"]
        ids = [i for i in range(len(self.ratios) + len(self.skipped)) if i not in self.skipped]
        for i, b, sn, r in zip(ids, self.barron, self.sinogram, self.ratios):
            rows.append(",".join([str(i), fmt(b), fmt(sn), fmt(r)]))
        return "\n".join(rows) + "\n"


def identity_check(family: Sequence[GaussianMixture], level: int = 2) -> IdentityReport:
    """Ratio of the ``(0, 1)`` sinogram norm to the ``B^{-1}`` norm across a family.

    Passes when the coefficient of variation of the ratios is below 1% and
    dropping the ``t`` weight never decreases the sinogram norm.
    """
    if not family:
        raise ValueError("empty family")
    bs, ss, mono, skipped = [], [], [], []
    for i, u in enumerate(family):
        b = barron_norm_radial(u, -1.0, level)
        if b == 0.0:
            skipped.append(i)
            continue
        s1 = sinogram_norm(u, 0.0, 1.0, level)
        s0 = sinogram_norm(u, 0.0, 0.0, level)
        bs.append(b)
        ss.append(s1)
        mono.append(s1 <= s0)
    bs, ss = np.array(bs), np.array(ss)
    ratios = ss / bs
    cv = float(ratios.std() / ratios.mean()) if len(ratios) > 1 else 0.0
    return IdentityReport(bs, ss, ratios, cv, np.array(mono), skipped)


def default_family() -> list[GaussianMixture]:
    """Six mixtures: centered, shifted, narrow, wide, and two two-term mixtures."""
    return [
        GaussianMixture([(1.0, (0.0, 0.0), 1.0)]),
        GaussianMixture([(1.0, (0.7, -0.4), 1.0)]),
        GaussianMixture([(2.0, (0.0, 0.0), 0.5)]),
        GaussianMixture([(0.5, (-0.3, 0.2), 1.6)]),
        GaussianMixture([(1.0, (0.0, 0.0), 0.6), (0.8, (0.5, 0.5), 1.2)]),
        GaussianMixture([(1.0, (-0.2, 0.0), 0.8), (0.6, (0.1, 0.15), 0.5)]),
    ]
