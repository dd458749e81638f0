"""Finite Fourier-atom functions on the torus and the spectral Barron scale.

Functions live on ``[-pi, pi]^d`` with the normalized measure, so a function
is a finite sum ``u(x) = sum_k c_k exp(i <k, x>)`` over integer frequencies.
Real-valuedness is enforced through Hermitian symmetry ``c_{-k} = conj(c_k)``.
"""
from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np

#: coefficients below this modulus are dropped after arithmetic
PRUNE_TOL = 1e-15
#: imaginary residue tolerated by :func:`evaluate`, relative to max(1, ||u||_B0)
IMAG_TOL = 1e-10
#: maximum number of pairwise products formed by :func:`multiply`
ATOM_BUDGET = 4_000_000


class AtomBudgetError(RuntimeError):
    """Raised when a product would exceed the configured atom budget."""


class SymmetryError(ValueError):
    """Raised when coefficients do not describe a real-valued function."""


def _merge(d, freqs, coeffs):
    freqs = np.asarray(freqs, dtype=np.int64).reshape(-1, d)
    coeffs = np.asarray(coeffs, dtype=np.complex128).reshape(-1)
    if freqs.shape[0] == 0:
        return np.zeros((0, d), dtype=np.int64), np.zeros(0, dtype=np.complex128)
    # symmetrize by averaging each atom with the conjugate of its mirror
    allf = np.concatenate([freqs, -freqs])
    allc = np.concatenate([coeffs, np.conj(coeffs)]) * 0.5
    uniq, inv = np.unique(allf, axis=0, return_inverse=True)
    inv = inv.reshape(-1)
    out = np.zeros(uniq.shape[0], dtype=np.complex128)
    np.add.at(out, inv, allc)
    keep = np.abs(out) >= PRUNE_TOL
    return uniq[keep], out[keep]


@dataclass(frozen=True, eq=False)
class SpectralFunction:
    """Immutable real-valued trigonometric polynomial.

    ``freqs`` is an ``(N, d)`` integer array sorted lexicographically and
    ``coeffs`` the matching complex coefficients. Use :meth:`from_atoms`,
    :meth:`from_half` or :func:`zero` rather than the raw constructor.
    """

    d: int
    freqs: np.ndarray
    coeffs: np.ndarray

    def __post_init__(self):
        self.freqs.flags.writeable = False
        self.coeffs.flags.writeable = False

    @classmethod
    def _build(cls, d, freqs, coeffs) -> "SpectralFunction":
        f, c = _merge(d, freqs, coeffs)
        return cls(d, f, c)

    @classmethod
    def from_atoms(cls, d: int, atoms: Mapping[Sequence[int], complex]) -> "SpectralFunction":
        """Build from a full Hermitian-symmetric map ``frequency -> coefficient``."""
        atoms = {tuple(int(v) for v in k): complex(c) for k, c in atoms.items()}
        for k, c in atoms.items():
            if len(k) != d:
                raise ValueError(f"frequency {k} does not have dimension {d}")
            mk = tuple(-v for v in k)
            if mk not in atoms:
                if abs(c) < PRUNE_TOL:
                    continue
                raise SymmetryError(f"missing mirror atom {mk}")
            if abs(atoms[mk] - c.conjugate()) > 1e-12 * max(1.0, abs(c)):
                raise SymmetryError(f"atoms {k} and {mk} are not conjugate")
        if not atoms:
            return zero(d)
        return cls._build(d, list(atoms), list(atoms.values()))

    @classmethod
    def from_half(cls, d: int, atoms: Mapping[Sequence[int], complex]) -> "SpectralFunction":
        """Build from canonical half-lattice atoms; mirrors are implied."""
        freqs, coeffs = [], []
        for k, c in atoms.items():
            k = tuple(int(v) for v in k)
            if len(k) != d:
                raise ValueError(f"frequency {k} does not have dimension {d}")
            if not _is_canonical(k):
                raise ValueError(f"{k} is not in the canonical half lattice")
            c = complex(c)
            if not any(k) and c.imag != 0.0:
                raise SymmetryError("zero-frequency coefficient must be real")
            freqs += [k, tuple(-v for v in k)] if any(k) else [k]
            coeffs += [c, c.conjugate()] if any(k) else [c]
        return cls._build(d, np.array(freqs, dtype=np.int64).reshape(-1, d), coeffs)

    # -- arithmetic ------------------------------------------------------
    def __add__(self, other: "SpectralFunction") -> "SpectralFunction":
        _check_dim(self, other)
        return SpectralFunction._build(
            self.d,
            np.concatenate([self.freqs, other.freqs]),
            np.concatenate([self.coeffs, other.coeffs]),
        )

    def __neg__(self) -> "SpectralFunction":
        return SpectralFunction(self.d, self.freqs.copy(), -self.coeffs)

    def __sub__(self, other: "SpectralFunction") -> "SpectralFunction":
        return self + (-other)

    def __mul__(self, scalar: float) -> "SpectralFunction":
        if isinstance(scalar, SpectralFunction):
            return multiply(self, scalar)
        return SpectralFunction._build(self.d, self.freqs, self.coeffs * float(scalar))

    __rmul__ = __mul__

    def with_coeffs(self, coeffs) -> "SpectralFunction":
        """Same support, new coefficients (re-symmetrized and pruned)."""
        return SpectralFunction._build(self.d, self.freqs, coeffs)

    # -- inspection -------------------------------------------------------
    def __len__(self) -> int:
        return self.freqs.shape[0]

    def __iter__(self):
        for k, c in zip(self.freqs, self.coeffs):
            yield tuple(int(v) for v in k), complex(c)

    def atoms(self) -> dict:
        return dict(iter(self))

    def support(self) -> set:
        return {tuple(int(v) for v in k) for k in self.freqs}

    def is_zero(self) -> bool:
        return len(self) == 0

    def half_atoms(self) -> dict:
        """Atoms on the canonical half lattice (k = 0 or lexicographically positive)."""
        return {k: c for k, c in self if _is_canonical(k)}

    def __eq__(self, other) -> bool:
        if not isinstance(other, SpectralFunction):
            return NotImplemented
        return (
            self.d == other.d
            and np.array_equal(self.freqs, other.freqs)
            and np.array_equal(self.coeffs, other.coeffs)
        )

    __hash__ = None

    def __repr__(self) -> str:
        return f"SpectralFunction(d={self.d}, atoms={len(self)})"


def _is_canonical(k) -> bool:
    for v in k:
        if v != 0:
            return v > 0
    return True


def _check_dim(u, v):
    if u.d != v.d:
        raise ValueError(f"dimension mismatch: {u.d} != {v.d}")


def zero(d: int) -> SpectralFunction:
    return SpectralFunction(d, np.zeros((0, d), dtype=np.int64), np.zeros(0, dtype=np.complex128))


def constant(d: int, value: float) -> SpectralFunction:
    return SpectralFunction.from_half(d, {(0,) * d: float(value)})


def bracket(k) -> float | np.ndarray:
    """Japanese bracket ``sqrt(1 + |k|^2)``; vectorized over the last axis."""
    k = np.asarray(k, dtype=float)
    out = np.sqrt(1.0 + np.sum(k * k, axis=-1))
    return float(out) if out.ndim == 0 else out


def barron_norm(u: SpectralFunction, s: float) -> float:
    """``sum_k |c_k| <k>^s``, the B^s norm on the torus."""
    if u.is_zero():
        return 0.0
    return float(np.sum(np.abs(u.coeffs) * bracket(u.freqs) ** s))


def apply_bracket_power(u: SpectralFunction, s: float) -> SpectralFunction:
    """Fourier multiplier ``<k>^s``, i.e. the fractional power ``L^{s/2}`` of ``I - Laplacian``."""
    if u.is_zero():
        return u
    return u.with_coeffs(u.coeffs * bracket(u.freqs) ** s)


def apply_resolvent(u: SpectralFunction, t: float, n: int = 1) -> SpectralFunction:
    """``(t I + L^n)^{-1} u``: divides the coefficient at k by ``t + <k>^{2n}``."""
    if not t > 0:
        raise ValueError(f"resolvent parameter must be positive, got {t}")
    if int(n) != n or n < 1:
        raise ValueError(f"power must be a positive integer, got {n}")
    if u.is_zero():
        return u
    return u.with_coeffs(u.coeffs / (t + bracket(u.freqs) ** (2 * int(n))))


def evaluate(u: SpectralFunction, x) -> float | np.ndarray:
    """Point values of ``u``; ``x`` has shape ``(d,)`` or ``(N, d)``."""
    x = np.asarray(x, dtype=float)
    single = x.ndim == 1
    x = np.atleast_2d(x)
    if x.shape[-1] != u.d:
        raise ValueError(f"point dimension {x.shape[-1]} != function dimension {u.d}")
    if u.is_zero():
        vals = np.zeros(x.shape[0])
        return float(vals[0]) if single else vals
    vals = np.exp(1j * (x @ u.freqs.T)) @ u.coeffs
    scale = max(1.0, barron_norm(u, 0.0))
    if np.max(np.abs(vals.imag)) > IMAG_TOL * scale:
        raise SymmetryError("imaginary residue exceeds tolerance; coefficients not Hermitian")
    return float(vals.real[0]) if single else vals.real


def l2_norm(u: SpectralFunction) -> float:
    """L2 norm under the normalized torus measure (Parseval)."""
    return float(np.sqrt(np.sum(np.abs(u.coeffs) ** 2)))


def multiply(u: SpectralFunction, v: SpectralFunction, budget: int = ATOM_BUDGET) -> SpectralFunction:
    """Pointwise product, computed exactly as a convolution of coefficients."""
    _check_dim(u, v)
    if u.is_zero() or v.is_zero():
        return zero(u.d)
    if len(u) * len(v) > budget:
        raise AtomBudgetError(f"product of {len(u)} x {len(v)} atoms exceeds budget {budget}")
    freqs = (u.freqs[:, None, :] + v.freqs[None, :, :]).reshape(-1, u.d)
    coeffs = (u.coeffs[:, None] * v.coeffs[None, :]).reshape(-1)
    return SpectralFunction._build(u.d, freqs, coeffs)


@dataclass(frozen=True)
class InterpolationTriple:
    r: float
    s: float
    t: float

    def __post_init__(self):
        if not self.r < self.s < self.t:
            raise ValueError(f"need r < s < t, got {self.r}, {self.s}, {self.t}")

    @property
    def theta(self) -> float:
        return (self.t - self.s) / (self.t - self.r)


def interpolation_gap(u: SpectralFunction, trip: InterpolationTriple) -> float:
    """Ratio ``||u||_s / (||u||_r^theta ||u||_t^(1-theta))``; at most one by Hoelder."""
    if u.is_zero():
        raise ValueError("interpolation gap undefined for the zero function")
    th = trip.theta
    # log-domain keeps extreme indices from overflowing
    w = np.abs(u.coeffs)
    lb = np.log(bracket(u.freqs))
    lw = np.log(w)

    def lognorm(s):
        z = lw + s * lb
        zmax = z.max()
        return zmax + np.log(np.sum(np.exp(z - zmax)))

    return float(np.exp(lognorm(trip.s) - th * lognorm(trip.r) - (1.0 - th) * lognorm(trip.t)))


def random_function(
    rng: np.random.Generator,
    d: int,
    n_orbits: int,
    k_max: int,
    include_zero: bool | None = None,
) -> SpectralFunction:
    """Random function with ``n_orbits`` conjugate pairs drawn from the cube ``|k_i| <= k_max``."""
    freqs = {}
    tries = 0
    while len(freqs) < n_orbits and tries < 100 * n_orbits + 100:
        tries += 1
        k = rng.integers(-k_max, k_max + 1, size=d)
        if not any(k):
            continue
        if not _is_canonical(tuple(k)):
            k = -k
        freqs.setdefault(tuple(int(v) for v in k), complex(rng.normal(), rng.normal()))
    if include_zero is None:
        include_zero = bool(rng.integers(2))
    if include_zero:
        freqs[(0,) * d] = float(rng.normal())
    return SpectralFunction.from_half(d, freqs)


# -- serialization -----------------------------------------------------------

def dumps(u: SpectralFunction) -> str:
    """Text form: header ``d=<d>`` then ``k_1 ... k_d re im`` per canonical atom."""
    lines = [f"d={u.d}"]
    for k, c in sorted(u.half_atoms().items()):
        lines.append(" ".join([*(str(v) for v in k), repr(c.real), repr(c.imag)]))
    return "\n".join(lines) + "\n"


def loads(text: str) -> SpectralFunction:
    lines = [ln.strip() for ln in text.splitlines()]
    lines = [ln for ln in lines if ln and not ln.startswith("#")]
    if not lines or not lines[0].startswith("d="):
        raise ValueError("missing 'd=<d>' header")
    d = int(lines[0][2:])
    atoms = {}
    for ln in lines[1:]:
        parts = ln.split()
        if len(parts) != d + 2:
            raise ValueError(f"expected {d + 2} fields, got {len(parts)}: {ln!r}")
        k = tuple(int(v) for v in parts[:d])
        if k in atoms:
            raise ValueError(f"duplicate frequency {k}")
        atoms[k] = complex(float(parts[d]), float(parts[d + 1]))
    return SpectralFunction.from_half(d, atoms)


def save(u: SpectralFunction, path) -> None:
    Path(path).write_text(dumps(u))


def load(path) -> SpectralFunction:
    return loads(Path(path).read_text())
