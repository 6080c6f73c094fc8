"""Dense operator algebra on finite tensor-product spin registers.

Conventions
-----------
* Sites of a :class:`Volume` are enumerated in lexicographic order; the first
  site is the leftmost Kronecker factor, so ``embed(sz on {0}, {0,1})`` is
  ``diag(1, 1, -1, -1)``.
* Traces are unnormalised matrix traces (``Tr 1 = dim**n``).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from itertools import product
from typing import Iterable, Sequence

import numpy as np

from . import _kernels
from ._settings import current_cap
from .errors import (
    InvalidState,
    NonPositiveSpectrum,
    NotHermitian,
    SupportNotContained,
    VolumeMismatch,
    VolumeTooLarge,
)

HERMITIAN_TOL = 1e-12
PSD_CLAMP = 1e-12
TRACE_TOL = 1e-12
LOG_FLOOR = 1e-300

Site = tuple[int, ...]

SX = np.array([[0, 1], [1, 0]], dtype=np.complex128)
SY = np.array([[0, -1j], [1j, 0]], dtype=np.complex128)
SZ = np.array([[1, 0], [0, -1]], dtype=np.complex128)
ID2 = np.eye(2, dtype=np.complex128)
PAULI = {"x": SX, "y": SY, "z": SZ}


@dataclass(frozen=True)
class SiteSpace:
    dim: int = 2

    def __post_init__(self):
        if int(self.dim) != self.dim or self.dim < 2:
            raise ValueError(f"local dimension must be an integer >= 2, got {self.dim}")


@dataclass(frozen=True)
class Volume:
    """Finite set of lattice points of Z^d in lexicographic order."""

    sites: tuple[Site, ...]
    side: int | None = field(default=None, compare=False)

    def __post_init__(self):
        sites = tuple(sorted({tuple(int(c) for c in s) for s in self.sites}))
        if len(sites) != len(self.sites):
            raise ValueError("volume sites must be distinct")
        if not sites:
            raise ValueError("volume must contain at least one site")
        if len({len(s) for s in sites}) != 1:
            raise ValueError("all sites must have the same dimension")
        object.__setattr__(self, "sites", sites)
        if self.side is not None and self.side ** len(sites[0]) != len(sites):
            raise ValueError("side length inconsistent with number of sites")

    @classmethod
    def cube(cls, L: int, d: int = 1, start: Sequence[int] | int | None = None) -> "Volume":
        """Cube of side ``L``; by default centred so that it runs over ``-(L//2) .. L-1-L//2``."""
        if L < 1 or d < 1:
            raise ValueError("L and d must be positive")
        if start is None:
            start = [-(L // 2)] * d
        elif isinstance(start, int):
            start = [start] * d
        ranges = [range(s, s + L) for s in start]
        return cls(tuple(product(*ranges)), side=L)

    @classmethod
    def interval(cls, start: int, L: int) -> "Volume":
        return cls.cube(L, 1, start=[start])

    @classmethod
    def from_sites(cls, sites: Iterable[Sequence[int] | int]) -> "Volume":
        pts = tuple(tuple(s) if not isinstance(s, (int, np.integer)) else (int(s),) for s in sites)
        return cls(pts)

    @property
    def d(self) -> int:
        return len(self.sites[0])

    @property
    def n(self) -> int:
        return len(self.sites)

    def __len__(self) -> int:
        return len(self.sites)

    def __contains__(self, site) -> bool:
        return tuple(site) in self._index

    @cached_property
    def _index(self) -> dict[Site, int]:
        return {s: i for i, s in enumerate(self.sites)}

    def index(self, site: Site) -> int:
        return self._index[tuple(site)]

    def positions(self, sites: Iterable[Site]) -> np.ndarray:
        try:
            return np.array([self._index[tuple(s)] for s in sites], dtype=np.int64)
        except KeyError as exc:
            raise SupportNotContained(f"site {exc.args[0]} not in volume") from None

    def issubset(self, other: "Volume") -> bool:
        return all(s in other for s in self.sites)

    def shifted(self, x: Sequence[int]) -> "Volume":
        return Volume(tuple(tuple(a + b for a, b in zip(s, x)) for s in self.sites), side=self.side)

    def hilbert_dim(self, dim: int) -> int:
        return dim**self.n

    def __repr__(self) -> str:
        if self.d == 1 and self.side is not None:
            return f"Volume([{self.sites[0][0]}..{self.sites[-1][0]}])"
        return f"Volume({self.n} sites, d={self.d})"


def check_cap(vol: Volume, dim: int, cap: int | None = None) -> int:
    D = vol.hilbert_dim(dim)
    cap = current_cap() if cap is None else cap
    if D > cap:
        raise VolumeTooLarge(f"Hilbert dimension {D} exceeds cap {cap}")
    return D


@dataclass(frozen=True, eq=False)
class LatticeOperator:
    volume: Volume
    matrix: np.ndarray
    dim: int = 2
    hermitian: bool = False

    def __post_init__(self):
        m = np.asarray(self.matrix, dtype=np.complex128)
        D = self.volume.hilbert_dim(self.dim)
        if m.shape != (D, D):
            raise ValueError(f"matrix shape {m.shape} does not match {self.volume!r} with dim {self.dim}")
        if self.hermitian:
            scale = max(np.linalg.norm(m), 1.0)
            if np.linalg.norm(m - m.conj().T) > HERMITIAN_TOL * scale:
                raise NotHermitian("matrix flagged hermitian is not")
            m = 0.5 * (m + m.conj().T)
        m.setflags(write=False)
        object.__setattr__(self, "matrix", m)

    @classmethod
    def identity(cls, volume: Volume, dim: int = 2) -> "LatticeOperator":
        return cls(volume, np.eye(volume.hilbert_dim(dim)), dim, True)

    @classmethod
    def zeros(cls, volume: Volume, dim: int = 2) -> "LatticeOperator":
        D = volume.hilbert_dim(dim)
        return cls(volume, np.zeros((D, D)), dim, True)

    @classmethod
    def local(cls, matrix, sites: Iterable, dim: int = 2) -> "LatticeOperator":
        """Operator on ``sites``; the matrix factors follow lexicographic site order."""
        vol = Volume.from_sites(sites)
        m = np.asarray(matrix, dtype=np.complex128)
        herm = bool(np.allclose(m, m.conj().T, atol=HERMITIAN_TOL * max(1.0, np.abs(m).max())))
        return cls(vol, m, dim, herm)

    @property
    def shape(self):
        return self.matrix.shape

    def _same(self, other: "LatticeOperator"):
        if self.volume != other.volume or self.dim != other.dim:
            raise VolumeMismatch(f"{self.volume!r} vs {other.volume!r}")

    def __add__(self, other):
        if isinstance(other, LatticeOperator):
            self._same(other)
            return LatticeOperator(self.volume, self.matrix + other.matrix, self.dim, self.hermitian and other.hermitian)
        return NotImplemented

    def __sub__(self, other):
        if isinstance(other, LatticeOperator):
            self._same(other)
            return LatticeOperator(self.volume, self.matrix - other.matrix, self.dim, self.hermitian and other.hermitian)
        return NotImplemented

    def __neg__(self):
        return LatticeOperator(self.volume, -self.matrix, self.dim, self.hermitian)

    def __mul__(self, c):
        if np.isscalar(c):
            return LatticeOperator(self.volume, c * self.matrix, self.dim, self.hermitian and np.isreal(c))
        return NotImplemented

    __rmul__ = __mul__

    def __matmul__(self, other: "LatticeOperator"):
        self._same(other)
        return LatticeOperator(self.volume, self.matrix @ other.matrix, self.dim, False)

    def dagger(self) -> "LatticeOperator":
        return LatticeOperator(self.volume, self.matrix.conj().T, self.dim, self.hermitian)

    def trace(self) -> complex:
        return complex(np.trace(self.matrix))

    def translated(self, x: Sequence[int]) -> "LatticeOperator":
        """Same operator moved by the lattice vector ``x``."""
        return LatticeOperator(self.volume.shifted(x), self.matrix, self.dim, self.hermitian)

    @cached_property
    def eigh(self) -> tuple[np.ndarray, np.ndarray]:
        if not self.hermitian:
            raise NotHermitian("eigh requires a hermitian operator")
        if not np.any(self.matrix.imag):
            w, v = np.linalg.eigh(self.matrix.real)
            return w, v.astype(np.complex128)
        return np.linalg.eigh(self.matrix)


class DensityMatrix:
    """Positive unit-trace operator with its spectral decomposition.

    Eigenvalues are stored in descending order. Values in ``[-1e-12, 0)`` are
    clamped to zero; anything more negative is rejected.
    """

    __slots__ = ("op", "eigvals", "eigvecs")

    def __init__(self, op: LatticeOperator, eigensystem: tuple[np.ndarray, np.ndarray] | None = None):
        if not op.hermitian:
            op = LatticeOperator(op.volume, op.matrix, op.dim, True)
        w, v = eigensystem if eigensystem is not None else np.linalg.eigh(op.matrix)
        order = np.argsort(w)[::-1]
        w = np.array(w[order], dtype=np.float64)
        v = np.array(v[:, order], dtype=np.complex128)
        if w[-1] < -PSD_CLAMP:
            raise InvalidState(f"negative eigenvalue {w[-1]:.3e}")
        w[w < 0] = 0.0
        tr = float(np.sum(w))
        if abs(tr - 1.0) > TRACE_TOL:
            raise InvalidState(f"trace {tr!r} differs from 1")
        w.setflags(write=False)
        v.setflags(write=False)
        self.op = op
        self.eigvals = w
        self.eigvecs = v

    @classmethod
    def from_matrix(cls, matrix, volume: Volume, dim: int = 2, normalize: bool = False) -> "DensityMatrix":
        m = np.asarray(matrix, dtype=np.complex128)
        m = 0.5 * (m + m.conj().T)
        if normalize:
            m = m / np.trace(m).real
        return cls(LatticeOperator(volume, m, dim, True))

    @classmethod
    def from_spectrum(cls, eigvals, eigvecs, volume: Volume, dim: int = 2) -> "DensityMatrix":
        """Build from a known spectral decomposition (no extra diagonalisation)."""
        w = np.asarray(eigvals, dtype=np.float64)
        v = np.asarray(eigvecs, dtype=np.complex128)
        m = (v * w) @ v.conj().T
        return cls(LatticeOperator(volume, 0.5 * (m + m.conj().T), dim, True), (w, v))

    @classmethod
    def pure(cls, vector, volume: Volume, dim: int = 2) -> "DensityMatrix":
        psi = np.asarray(vector, dtype=np.complex128)
        psi = psi / np.linalg.norm(psi)
        return cls.from_matrix(np.outer(psi, psi.conj()), volume, dim)

    @classmethod
    def maximally_mixed(cls, volume: Volume, dim: int = 2) -> "DensityMatrix":
        D = volume.hilbert_dim(dim)
        return cls(LatticeOperator(volume, np.eye(D) / D, dim, True), (np.full(D, 1.0 / D), np.eye(D)))

    @property
    def volume(self) -> Volume:
        return self.op.volume

    @property
    def dim(self) -> int:
        return self.op.dim

    @property
    def matrix(self) -> np.ndarray:
        return self.op.matrix

    def expect(self, obs: LatticeOperator) -> complex:
        if obs.volume != self.volume:
            raise VolumeMismatch(f"{obs.volume!r} vs {self.volume!r}")
        return complex(np.einsum("ij,ji->", self.matrix, obs.matrix))

    def __repr__(self) -> str:
        return f"DensityMatrix({self.volume!r}, rank={int(np.sum(self.eigvals > PSD_CLAMP))})"


def embed(local: LatticeOperator, target: Volume) -> LatticeOperator:
    """Return ``local`` tensored with the identity on the rest of ``target``."""
    if not local.volume.issubset(target):
        raise SupportNotContained(f"{local.volume!r} is not inside {target!r}")
    check_cap(target, local.dim)
    D = target.hilbert_dim(local.dim)
    out = np.zeros((D, D), dtype=np.complex128)
    _kernels.accumulate_local(out, local.matrix, target.positions(local.volume.sites), local.dim, target.n, 1.0)
    return LatticeOperator(target, out, local.dim, local.hermitian)


def embed_sum(terms: Iterable[tuple[np.ndarray, Sequence[Site]]], target: Volume, dim: int) -> np.ndarray:
    """Accumulate many local matrices into one dense matrix on ``target``."""
    check_cap(target, dim)
    D = target.hilbert_dim(dim)
    out = np.zeros((D, D), dtype=np.complex128)
    for mat, sites in terms:
        _kernels.accumulate_local(out, np.asarray(mat, dtype=np.complex128), target.positions(sites), dim, target.n, 1.0)
    return out


def partial_trace(rho, keep: Volume):
    """Trace out every site of ``rho.volume`` not in ``keep``.

    Accepts a :class:`DensityMatrix` (result is again a density matrix) or a
    :class:`LatticeOperator`.
    """
    op = rho.op if isinstance(rho, DensityMatrix) else rho
    if not keep.issubset(op.volume):
        raise SupportNotContained(f"{keep!r} is not inside {op.volume!r}")
    reduced = _kernels.partial_trace_matrix(op.matrix, op.volume.positions(keep.sites), op.dim, op.volume.n)
    if isinstance(rho, DensityMatrix):
        return DensityMatrix.from_matrix(reduced, keep, op.dim)
    return LatticeOperator(keep, reduced, op.dim, op.hermitian)


def matrix_function(op, f: str, power: float | None = None) -> LatticeOperator:
    """Spectral calculus ``U f(D) U^dagger`` for ``f`` in ``exp``, ``log``, ``power``."""
    if isinstance(op, DensityMatrix):
        w, v, vol, dim = op.eigvals, op.eigvecs, op.volume, op.dim
    else:
        if not op.hermitian:
            raise NotHermitian("matrix_function requires a hermitian operator")
        (w, v), vol, dim = op.eigh, op.volume, op.dim
    if f == "exp":
        fw = np.exp(w)
    elif f == "log":
        if np.min(w) <= LOG_FLOOR:
            raise NonPositiveSpectrum(f"log of operator with eigenvalue {np.min(w):.3e}")
        fw = np.log(w)
    elif f == "power":
        if power is None:
            raise ValueError("power requires an exponent")
        if np.min(w) < 0 and power != int(power):
            raise NonPositiveSpectrum("fractional power of operator with negative spectrum")
        if np.min(w) <= 0 and power < 0:
            raise NonPositiveSpectrum("negative power of singular operator")
        fw = np.power(w.astype(np.complex128) if np.min(w) < 0 else w, power)
    else:
        raise ValueError(f"unknown matrix function {f!r}")
    m = (v * fw) @ v.conj().T
    real_f = np.isrealobj(fw) or np.allclose(np.imag(fw), 0)
    return LatticeOperator(vol, m, dim, bool(real_f))


def operator_norm(op) -> float:
    """Largest singular value."""
    m = op.matrix if isinstance(op, (LatticeOperator, DensityMatrix)) else np.asarray(op)
    if isinstance(op, DensityMatrix):
        return float(op.eigvals[0])
    if isinstance(op, LatticeOperator) and op.hermitian:
        w = np.linalg.eigvalsh(m)
        return float(max(abs(w[0]), abs(w[-1])))
    return float(np.linalg.norm(m, 2))


def trace_distance(a, b) -> float:
    """Half the trace norm of ``a - b``."""
    ma = a.matrix if hasattr(a, "matrix") else np.asarray(a)
    mb = b.matrix if hasattr(b, "matrix") else np.asarray(b)
    return 0.5 * float(np.sum(np.abs(np.linalg.eigvalsh(ma - mb))))


def product_state(factors: Sequence[np.ndarray], volume: Volume) -> DensityMatrix:
    """Tensor product of single-site density matrices in site order."""
    if len(factors) != volume.n:
        raise VolumeMismatch("one factor per site required")
    m = np.array([[1.0 + 0j]])
    for f in factors:
        m = np.kron(m, np.asarray(f, dtype=np.complex128))
    return DensityMatrix.from_matrix(m, volume, len(factors[0]))


def random_density_matrix(volume: Volume, dim: int = 2, rng=None, rank: int | None = None) -> DensityMatrix:
    """Ginibre-distributed random state (full rank unless ``rank`` is given)."""
    rng = np.random.default_rng(rng)
    D = volume.hilbert_dim(dim)
    k = D if rank is None else rank
    g = rng.standard_normal((D, k)) + 1j * rng.standard_normal((D, k))
    m = g @ g.conj().T
    return DensityMatrix.from_matrix(m / np.trace(m).real, volume, dim)


def random_hermitian(D: int, rng=None, scale: float = 1.0) -> np.ndarray:
    rng = np.random.default_rng(rng)
    g = rng.standard_normal((D, D)) + 1j * rng.standard_normal((D, D))
    return scale * 0.5 * (g + g.conj().T)


def commutator(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    return a @ b - b @ a
