"""Independent reference computations used by the test suite.

Nothing here calls the library's numerical kernels; each oracle recomputes
its quantity by a different route (plain loops, scipy quadrature, brute
force search).
"""
from __future__ import annotations

import cmath
import itertools
import math

import numpy as np
from scipy import integrate, optimize, special

# Values computed once by scipy.integrate.dblquad (epsrel 1e-13) and frozen.
# Default density: d=2, sigma=1, cutoff=3, t uniform on [0, sqrt 2].
HS1_FROZEN = {0: 1.0, 1: 2.9373773073293905, 2: 9.18018241046217, 3: 30.31172874849525}
# sinogram (0, 1) norm over the B^{-1} norm under the library's Fourier conventions
RADON_RATIO = 4.0 * math.pi


# -- spectral ---------------------------------------------------------------

def atom_list(u):
    return [(tuple(int(v) for v in k), complex(c)) for k, c in zip(u.freqs, u.coeffs)]


def trig_sum(u, x):
    """Direct sum of ``c_k (cos <k,x> + i sin <k,x>)`` with scalar loops."""
    acc = 0j
    for k, c in atom_list(u):
        ang = sum(ki * xi for ki, xi in zip(k, x))
        acc += c * complex(math.cos(ang), math.sin(ang))
    return acc


def norm_loop(u, s):
    """B^s norm summed in descending order of the frequency key."""
    total = 0.0
    for k, c in sorted(atom_list(u), reverse=True):
        total += abs(c) * math.pow(1.0 + sum(v * v for v in k), s / 2.0)
    return total


# -- tikhonov -----------------------------------------------------------------

def reduced_instance(phi, y, p):
    """Per canonical atom: (multiplicity * |y_k|, <k>^p / phi(k))."""
    mass, ratio = [], []
    for k, c in atom_list(y):
        if any(v < 0 for v in k[: next((i for i, v in enumerate(k) if v != 0), len(k)) + 1]):
            continue
        mult = 1.0 if not any(k) else 2.0
        kk = np.array([k], dtype=float)
        mass.append(mult * abs(c))
        ratio.append(math.pow(1.0 + sum(v * v for v in k), p / 2.0) / float(phi(kk)[0]))
    return np.array(mass), np.array(ratio)


def _reduced(T, mass, ratio, lam):
    return (mass.sum() - T @ mass) ** 2 + lam * (T @ (ratio * mass))


def grid_min(mass, ratio, lam, refine_rounds=60):
    """Dense grid over ``[0,1]^n`` followed by shrinking coordinate pattern search."""
    n = len(mass)
    h = {1: 1e-3, 2: 1e-3, 3: 1 / 50, 4: 1 / 25}.get(n, 1 / 8)
    axis = np.linspace(0.0, 1.0, int(round(1 / h)) + 1)
    T = np.array(list(itertools.product(axis, repeat=n)))
    vals = _reduced(T, mass, ratio, lam)
    best = T[int(np.argmin(vals))].copy()
    fbest = float(vals.min())
    step = h
    for _ in range(refine_rounds):
        improved = True
        while improved:
            improved = False
            for i in range(n):
                for sgn in (1.0, -1.0):
                    cand = best.copy()
                    cand[i] = min(1.0, max(0.0, cand[i] + sgn * step))
                    f = float(_reduced(cand[None, :], mass, ratio, lam)[0])
                    if f < fbest - 1e-16:
                        best, fbest, improved = cand, f, True
        step *= 0.5
    return fbest, best


def enumerate_min(mass, ratio, lam):
    """Exhaustive search over 0/1 patterns with at most one free coordinate.

    The reduced objective depends on ``t`` only through two linear forms,
    so some minimizer has at most one coordinate strictly inside (0, 1).
    """
    n = len(mass)
    M = mass.sum()
    best = math.inf
    for pattern in itertools.product((0.0, 1.0), repeat=n):
        t = np.array(pattern)
        best = min(best, float(_reduced(t[None, :], mass, ratio, lam)[0]))
        for j in range(n):
            base = t.copy()
            base[j] = 0.0
            r0 = M - base @ mass
            # minimize (r0 - m_j x)^2 + lam ratio_j m_j x over x in [0, 1]
            x = (r0 - 0.5 * lam * ratio[j]) / mass[j]
            base[j] = min(1.0, max(0.0, x))
            best = min(best, float(_reduced(base[None, :], mass, ratio, lam)[0]))
    return best


def full_complex_min(phi, y, lam, p, starts=4, seed=0):
    """Minimize the functional over unconstrained complex coefficients on supp(y).

    Works directly with real and imaginary parts of each canonical atom, so
    it does not assume phase alignment.
    """
    keys = [k for k, _ in atom_list(y) if _canonical(k)]
    ys = dict(atom_list(y))
    d = len(keys[0])
    ph = [float(phi(np.array([k], dtype=float))[0]) for k in keys]
    w = [math.pow(1.0 + sum(v * v for v in k), p / 2.0) for k in keys]
    mult = [1.0 if not any(k) else 2.0 for k in keys]

    def J(v):
        res, pen = 0.0, 0.0
        for i, k in enumerate(keys):
            c = complex(v[2 * i], v[2 * i + 1] if any(k) else 0.0)
            res += mult[i] * abs(ph[i] * c - ys[k])
            pen += mult[i] * w[i] * abs(c)
        return res * res + lam * pen

    rng = np.random.default_rng(seed)
    best = math.inf
    for _ in range(starts):
        v0 = rng.normal(size=2 * len(keys)) * 0.1
        r = optimize.minimize(J, v0, method="Powell", options={"xtol": 1e-12, "ftol": 1e-14, "maxiter": 200_000})
        best = min(best, float(r.fun))
    return best, d


def _canonical(k):
    for v in k:
        if v != 0:
            return v > 0
    return True


# -- radon ---------------------------------------------------------------------

def line_integral(mix, zeta, kappa):
    """Integral of the mixture along ``<x, e(kappa)> = zeta`` by adaptive quadrature."""
    e = np.array([math.cos(kappa), math.sin(kappa)])
    n = np.array([-e[1], e[0]])

    def f(s):
        x = zeta * e + s * n
        return float(mix(x))

    val, _ = integrate.quad(f, -np.inf, np.inf, epsabs=1e-14, epsrel=1e-12, limit=400)
    return val


def offset_fourier(mix, xi, kappa):
    """``(2 pi)^{-1} int Ru(zeta, kappa) exp(-i xi zeta) dzeta`` by adaptive quadrature."""
    from barron.radon import radon_transform

    re, _ = integrate.quad(lambda z: radon_transform(mix, z, kappa) * math.cos(xi * z), -60, 60,
                           epsabs=1e-14, epsrel=1e-12, limit=400)
    im, _ = integrate.quad(lambda z: -radon_transform(mix, z, kappa) * math.sin(xi * z), -60, 60,
                           epsabs=1e-14, epsrel=1e-12, limit=400)
    return complex(re, im) / (2 * math.pi)


def gauss_hat(mix, xi):
    """Closed-form Fourier transform under ``(2 pi)^{-2} int u e^{-i<xi,x>} dx``."""
    acc = 0j
    for t in mix.terms:
        acc += (t.A * t.sigma**2 / (2 * math.pi)) * math.exp(-0.5 * t.sigma**2 * (xi[0] ** 2 + xi[1] ** 2)) * cmath.exp(
            -1j * (xi[0] * t.m[0] + xi[1] * t.m[1])
        )
    return acc


def cartesian_barron(mix, s, L=None, n=400):
    """``int |u_hat| <xi>^s`` over a square by tensor Gauss-Legendre panels."""
    L = L or math.sqrt(80.0) / min(t.sigma for t in mix.terms)
    x, w = np.polynomial.legendre.leggauss(20)
    edges = np.linspace(-L, L, n // 20 + 1)
    xs = np.concatenate([0.5 * (b - a) * x + 0.5 * (a + b) for a, b in zip(edges[:-1], edges[1:])])
    ws = np.concatenate([0.5 * (b - a) * w for a, b in zip(edges[:-1], edges[1:])])
    X, Y = np.meshgrid(xs, xs, indexing="ij")
    acc = np.zeros_like(X, dtype=complex)
    for t in mix.terms:
        acc += (t.A * t.sigma**2 / (2 * math.pi)) * np.exp(-0.5 * t.sigma**2 * (X**2 + Y**2)) * np.exp(
            -1j * (X * t.m[0] + Y * t.m[1])
        )
    return float(ws @ (np.abs(acc) * (1 + X**2 + Y**2) ** (s / 2)) @ ws)


# -- networks ------------------------------------------------------------------

def positive_target(x, s, sigma=1.0, cutoff=3.0, d=2):
    """Closed form of the target for the all-positive default density in d = 2.

    With ``u(x) = |x|^{s+1} R_s / (T (s+1)) * E_kappa[(cos)_+^{s+1}]`` where
    ``R_s`` is the truncated radial moment of order ``s+1`` (with the polar
    Jacobian) and the angular mean is a Beta integral.
    """
    assert d == 2
    T = math.sqrt(2.0)
    Z = 2 * math.pi * sigma**2 * (1 - math.exp(-0.5 * cutoff**2))
    a = (s + 2) / 2.0
    R = (2 * sigma**2) ** a / 2.0 * special.gamma(a) * special.gammainc(a, 0.5 * cutoff**2) / Z
    # (1/2pi) int_0^{2pi} (cos)_+^{s+1} = Gamma((s+2)/2) / (2 sqrt(pi) Gamma((s+3)/2))
    ang = special.gamma((s + 2) / 2.0) / (2 * math.sqrt(math.pi) * special.gamma((s + 3) / 2.0))
    r = math.hypot(*x)
    # both z = +1 and z = -1 contribute a half; together one full angular mean
    return 2 * math.pi * R * ang * r ** (s + 1) / (T * (s + 1))
