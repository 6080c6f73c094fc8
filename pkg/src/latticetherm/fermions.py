"""Spinless lattice fermions on 1D intervals via the Jordan-Wigner map.

Occupation convention: ``n_x = (1 - sz_x)/2``, so spin-down is the occupied
state, and ``a_x = (prod_{y<x} sz_y) s_x`` with ``s = [[0, 1], [0, 0]]``.
With this choice ``t(a+_0 a_1 + h.c.) = (t/2)(sx sx + sy sy)``.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations
from typing import Sequence

import numpy as np

from .errors import DimensionNotSupported, VolumeMismatch
from .interactions import Interaction, local_hamiltonian
from .operator_core import (
    ID2,
    SZ,
    DensityMatrix,
    LatticeOperator,
    Volume,
    check_cap,
    commutator,
    operator_norm,
)

LOWER = np.array([[0, 1], [0, 0]], dtype=np.complex128)
OCC = np.array([[0, 0], [0, 1]], dtype=np.complex128)


def _as_tuple(x) -> tuple[float, ...]:
    if x is None:
        return ()
    if np.isscalar(x):
        return (float(x),) if x != 0 else ()
    return tuple(float(v) for v in x)


@dataclass(frozen=True)
class FermionInteraction:
    """Hopping ``t[k-1]`` and density coupling ``V[k-1]`` at distance ``k``; onsite ``-mu n``.

    ``pairing`` adds ``D[k-1](a+_x a+_{x+k} + h.c.)``; it breaks gauge invariance
    and exists only to exercise the conservation diagnostics.
    """

    t: tuple[float, ...] = (1.0,)
    mu: float = 0.0
    V: tuple[float, ...] = ()
    pairing: tuple[float, ...] = ()

    @classmethod
    def build(cls, t=1.0, mu: float = 0.0, V=0.0, pairing=None) -> "FermionInteraction":
        return cls(_as_tuple(t), float(mu), _as_tuple(V), _as_tuple(pairing))

    @classmethod
    def from_config(cls, block: dict) -> "FermionInteraction":
        return cls.build(t=block.get("t", 1.0), mu=block.get("mu", 0.0), V=block.get("V", 0.0), pairing=block.get("pairing"))

    @property
    def gauge_invariant(self) -> bool:
        return not any(self.pairing)

    @property
    def range(self) -> int:
        return max(len(self.t), len(self.V), len(self.pairing), 0)

    def to_interaction(self) -> Interaction:
        terms = []
        if self.mu:
            terms.append(([0], -self.mu * OCC))
        for k, tk in enumerate(self.t, start=1):
            if tk:
                a = [annihilation(x, k + 1) for x in range(k + 1)]
                hop = a[0].conj().T @ a[k]
                terms.append((list(range(k + 1)), tk * (hop + hop.conj().T)))
        for k, vk in enumerate(self.V, start=1):
            if vk:
                terms.append(([0, k], vk * np.kron(OCC, OCC)))
        for k, dk in enumerate(self.pairing, start=1):
            if dk:
                a = [annihilation(x, k + 1) for x in range(k + 1)]
                pair = a[0].conj().T @ a[k].conj().T
                terms.append((list(range(k + 1)), dk * (pair + pair.conj().T)))
        return Interaction.from_terms(2, terms)


def annihilation(x: int, n: int) -> np.ndarray:
    """Jordan-Wigner ``a_x`` on an ``n``-site register (position ``x`` counted from the left)."""
    factors = [SZ] * x + [LOWER] + [ID2] * (n - x - 1)
    out = np.array([[1.0 + 0j]])
    for f in factors:
        out = np.kron(out, f)
    return out


def _require_1d(vol: Volume):
    if vol.d != 1:
        raise DimensionNotSupported("fermions are only supported on 1D intervals")


def jordan_wigner(fint: FermionInteraction, vol: Volume, cap: int | None = None) -> LatticeOperator:
    """``H_vol`` of the fermion interaction as a spin operator."""
    _require_1d(vol)
    return local_hamiltonian(fint.to_interaction(), vol, cap)


def jordan_wigner_direct(fint: FermionInteraction, vol: Volume, cap: int | None = None) -> LatticeOperator:
    """Same Hamiltonian assembled from global ``a_x`` matrices; independent of the interaction path."""
    _require_1d(vol)
    check_cap(vol, 2, cap)
    n = vol.n
    a = [annihilation(x, n) for x in range(n)]
    ad = [m.conj().T for m in a]
    num = [ad[x] @ a[x] for x in range(n)]
    H = np.zeros((2**n, 2**n), dtype=np.complex128)
    for x in range(n):
        H -= fint.mu * num[x]
        for k, tk in enumerate(fint.t, start=1):
            if x + k < n:
                H += tk * (ad[x] @ a[x + k] + ad[x + k] @ a[x])
        for k, vk in enumerate(fint.V, start=1):
            if x + k < n:
                H += vk * num[x] @ num[x + k]
        for k, dk in enumerate(fint.pairing, start=1):
            if x + k < n:
                H += dk * (ad[x] @ ad[x + k] + a[x + k] @ a[x])
    return LatticeOperator(vol, H, 2, True)


def number_operator(vol: Volume) -> LatticeOperator:
    """``N_vol = sum_x a+_x a_x``."""
    _require_1d(vol)
    return local_hamiltonian(Interaction.from_terms(2, [([0], OCC)]), vol)


def number_density_observable() -> LatticeOperator:
    """``E_N = a+_0 a_0``."""
    return LatticeOperator.local(OCC, [0])


def hopping_matrix(fint: FermionInteraction, L: int) -> np.ndarray:
    """One-body matrix of a quadratic, gauge-invariant chain of ``L`` sites."""
    if any(fint.V) or not fint.gauge_invariant:
        raise ValueError("one-body matrix only exists for V = 0 and no pairing")
    h = -fint.mu * np.eye(L)
    for k, tk in enumerate(fint.t, start=1):
        idx = np.arange(L - k)
        h[idx, idx + k] += tk
        h[idx + k, idx] += tk
    return h


def free_fermion_spectrum(fint: FermionInteraction, L: int) -> np.ndarray:
    """All subset sums of the one-body eigenvalues, sorted."""
    eps = np.linalg.eigvalsh(hopping_matrix(fint, L))
    sums = [0.0]
    for e in eps:
        sums = sums + [s + e for s in sums]
    return np.sort(np.array(sums))


def anticommutator_defect(n: int) -> float:
    """``max |{a_x, a+_y} - delta_xy|`` and ``max |{a_x, a_y}|`` over an ``n``-site register."""
    a = [annihilation(x, n) for x in range(n)]
    eye = np.eye(2**n)
    worst = 0.0
    for x, y in combinations(range(n), 2):
        worst = max(worst, np.abs(a[x] @ a[y] + a[y] @ a[x]).max())
    for x in range(n):
        for y in range(n):
            ac = a[x] @ a[y].conj().T + a[y].conj().T @ a[x]
            worst = max(worst, np.abs(ac - (eye if x == y else 0.0)).max())
    return float(worst)


@dataclass(frozen=True)
class NumberAudit:
    commutator_norm: float
    gauge_invariant: bool
    times: tuple[float, ...]
    numbers: tuple[float, ...]

    @property
    def drifts(self) -> tuple[float, ...]:
        return tuple(abs(n - self.numbers[0]) for n in self.numbers)

    @property
    def max_drift(self) -> float:
        return max(self.drifts)

    def rows(self):
        return [(t, n, d) for t, n, d in zip(self.times, self.numbers, self.drifts)]


def number_conservation_audit(
    fint: FermionInteraction, vol: Volume, rho0: DensityMatrix, times: Sequence[float]
) -> NumberAudit:
    """Track ``Tr(rho_t N)`` under the Jordan-Wigner Hamiltonian and report ``||[H, N]||``."""
    from .dynamics import EvolutionContext, evolve_state

    if rho0.volume != vol:
        raise VolumeMismatch("initial state lives on a different volume")
    H = jordan_wigner(fint, vol)
    N = number_operator(vol)
    comm = operator_norm(LatticeOperator(vol, commutator(H.matrix, N.matrix), 2, False))
    ctx = EvolutionContext(H)
    numbers = tuple(float(evolve_state(rho0, ctx, t).expect(N).real) for t in times)
    return NumberAudit(comm, fint.gauge_invariant, tuple(float(t) for t in times), numbers)
