"""Finite-volume Gibbs states, pressures, entropies and weak-Gibbs diagnostics."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Mapping, Sequence

import numpy as np
from scipy.linalg import eigh as generalized_eigh
from scipy.special import logsumexp

from .errors import StateNotFaithful, TooFewPoints, VolumeMismatch
from .interactions import Interaction, local_hamiltonian, padded, surface_energy
from .operator_core import (
    LOG_FLOOR,
    PSD_CLAMP,
    DensityMatrix,
    LatticeOperator,
    Volume,
    operator_norm,
    partial_trace,
)

SUPPORT_TOL = 1e-12


@dataclass(frozen=True)
class ThermoPoint:
    L: int
    sites: int
    pressure_per_site: float
    entropy_per_site: float
    energy_per_site: float


def gibbs_from_hamiltonian(H: LatticeOperator, beta: float = 1.0) -> DensityMatrix:
    """``exp(-beta H)/Tr exp(-beta H)`` with a max-exponent shift."""
    w, v = H.eigh
    x = -beta * w
    p = np.exp(x - x.max())
    p /= p.sum()
    return DensityMatrix.from_spectrum(p, v, H.volume, H.dim)


def gibbs_state(phi: Interaction, vol: Volume, beta: float = 1.0, cap: int | None = None) -> DensityMatrix:
    return gibbs_from_hamiltonian(local_hamiltonian(phi, vol, cap), beta)


def log_partition(H: LatticeOperator, beta: float = 1.0) -> float:
    return float(logsumexp(-beta * H.eigh[0]))


def pressure(phi: Interaction, vol: Volume, beta: float = 1.0, cap: int | None = None) -> float:
    """``log Tr exp(-beta H_vol)`` (not divided by the number of sites)."""
    return log_partition(local_hamiltonian(phi, vol, cap), beta)


def _plogp(p: np.ndarray) -> float:
    p = p[p > 0]
    return float(-np.sum(p * np.log(p)))


def von_neumann_entropy(rho: DensityMatrix) -> float:
    """``-sum p log p`` over the spectrum with ``0 log 0 = 0``."""
    return max(_plogp(np.asarray(rho.eigvals)), 0.0)


def relative_entropy(rho: DensityMatrix, sigma: DensityMatrix) -> float:
    """``Tr rho (log rho - log sigma)``; ``inf`` when supp rho is not inside supp sigma."""
    if rho.volume != sigma.volume or rho.dim != sigma.dim:
        raise VolumeMismatch("relative entropy of states on different volumes")
    q, u = np.asarray(sigma.eigvals), sigma.eigvecs
    # rho in the eigenbasis of sigma
    r = u.conj().T @ rho.matrix @ u
    null = q <= SUPPORT_TOL
    if np.any(null):
        leak = float(np.real(np.trace(r[np.ix_(null, null)])))
        if leak > SUPPORT_TOL:
            return float("inf")
    diag = np.real(np.diag(r))[~null]
    cross = float(np.sum(diag * np.log(q[~null])))
    return max(-von_neumann_entropy(rho) - cross, 0.0)


def variational_gap(
    rho: DensityMatrix, phi: Interaction, vol: Volume, beta: float = 1.0, H: LatticeOperator | None = None
) -> float:
    """``P_vol - (S(rho) - beta Tr rho H_vol)``."""
    if rho.volume != vol:
        raise VolumeMismatch("state lives on a different volume")
    H = local_hamiltonian(phi, vol) if H is None else H
    energy = float(rho.expect(H).real)
    return log_partition(H, beta) - (von_neumann_entropy(rho) - beta * energy)


def thermo_point(phi: Interaction, vol: Volume, beta: float = 1.0) -> ThermoPoint:
    H = local_hamiltonian(phi, vol)
    rho = gibbs_from_hamiltonian(H, beta)
    n = vol.n
    return ThermoPoint(
        L=vol.side if vol.side is not None else n,
        sites=n,
        pressure_per_site=log_partition(H, beta) / n,
        entropy_per_site=von_neumann_entropy(rho) / n,
        energy_per_site=float(rho.expect(H).real) / n,
    )


# ---------------------------------------------------------------- weak Gibbs

StateProvider = Callable[[Volume], DensityMatrix] | Mapping[Volume, DensityMatrix]


def _provide(provider: StateProvider, vol: Volume) -> DensityMatrix:
    return provider[vol] if isinstance(provider, Mapping) else provider(vol)


def _log_state(rho: DensityMatrix) -> np.ndarray:
    if rho.eigvals[-1] <= LOG_FLOOR:
        raise StateNotFaithful(f"state on {rho.volume!r} has eigenvalue {rho.eigvals[-1]:.3e}")
    return (rho.eigvecs * np.log(rho.eigvals)) @ rho.eigvecs.conj().T


def _herm_extremes(m: np.ndarray) -> tuple[float, float]:
    w = np.linalg.eigvalsh(0.5 * (m + m.conj().T))
    return float(w[0]), float(w[-1])


@dataclass(frozen=True)
class CertificateRecord:
    L: int
    sites: int
    c: float
    d_low: float
    d_high: float
    D: float
    hiai_petz_bound: float
    min_log_ratio: float

    @property
    def c_per_site(self) -> float:
        return self.c / self.sites

    @property
    def hiai_petz_margin(self) -> float:
        """``min-eig(log omega - log omega^c) + 2||W||``; nonnegative when the bound holds."""
        return self.min_log_ratio + self.hiai_petz_bound


@dataclass(frozen=True)
class WeakGibbsCertificate:
    records: tuple[CertificateRecord, ...]
    trend: "ExtrapolationReport | None" = None

    @property
    def c_per_site(self) -> list[float]:
        return [r.c_per_site for r in self.records]

    @property
    def strictly_decreasing(self) -> bool:
        c = self.c_per_site
        return all(b < a for a, b in zip(c, c[1:]))


def certificate_record(
    phi: Interaction, rho: DensityMatrix, vol: Volume, ambient: Volume | None = None, beta: float = 1.0
) -> CertificateRecord:
    if rho.volume != vol:
        raise VolumeMismatch("state lives on a different volume")
    H = local_hamiltonian(phi, vol)
    ref = gibbs_from_hamiltonian(H, beta)
    if ref.eigvals[-1] <= LOG_FLOOR:
        raise StateNotFaithful(f"Gibbs state on {vol!r} underflows at beta={beta}")
    log_rho = _log_state(rho)
    # log of the Gibbs state directly from H, without going through its eigenvalues
    log_ref = -beta * H.matrix - log_partition(H, beta) * np.eye(H.shape[0])
    diff = log_rho - log_ref
    lo, hi = _herm_extremes(diff)
    c = max(abs(lo), abs(hi))
    ratio = generalized_eigh(rho.matrix, ref.matrix, eigvals_only=True)
    ambient = padded(vol, max(phi.range, 1)) if ambient is None else ambient
    W = surface_energy(phi, vol, ambient) if phi.range > 0 else None
    w_norm = operator_norm(W) if W is not None else 0.0
    return CertificateRecord(
        L=vol.side if vol.side is not None else vol.n,
        sites=vol.n,
        c=c,
        d_low=float(ratio[0]),
        d_high=float(ratio[-1]),
        D=-hi,
        hiai_petz_bound=2.0 * w_norm,
        min_log_ratio=lo,
    )


def weak_gibbs_certificate(
    phi: Interaction,
    state_family: StateProvider,
    vols: Sequence[Volume],
    ambient: Volume | None = None,
    beta: float = 1.0,
) -> WeakGibbsCertificate:
    """Sandwich constants of each provided state against the finite-volume Gibbs state of ``phi``.

    ``c`` is ``||log omega - log omega^c||``, ``d_low``/``d_high`` the extreme
    eigenvalues of the pencil ``(omega, omega^c)``, ``D`` the minimum eigenvalue
    of ``log omega^c - log omega`` and ``hiai_petz_bound`` is ``2||W||`` with
    ``W`` the surface energy of the volume (inside ``ambient`` if given).
    """
    records = tuple(certificate_record(phi, _provide(state_family, v), v, ambient, beta) for v in vols)
    trend = None
    if len(records) >= 3:
        trend = extrapolate([(r.L, r.c_per_site) for r in records])
    return WeakGibbsCertificate(records, trend)


def window_states(
    phi: Interaction, ambient: Volume, windows: Sequence[Volume], beta: float = 1.0
) -> dict[Volume, DensityMatrix]:
    """Restrictions of the ambient Gibbs state of ``phi`` to each window."""
    omega = gibbs_state(phi, ambient, beta)
    return {w: partial_trace(omega, w) for w in windows}


def centered_windows(ambient: Volume, sizes: Sequence[int]) -> list[Volume]:
    """1D windows of the given sizes placed in the middle of ``ambient``."""
    lo, n = ambient.sites[0][0], ambient.n
    return [Volume.interval(lo + (n - L) // 2, L) for L in sizes]


def regularity_defect(
    nu_family: StateProvider,
    omega_family: StateProvider,
    phi: Interaction,
    vols: Sequence[Volume],
    beta: float = 1.0,
) -> list[tuple[int, float]]:
    """``|S(nu|omega)/n - (-S(nu) + beta Tr nu H + P)/n|`` per volume."""
    out = []
    for vol in vols:
        nu, omega = _provide(nu_family, vol), _provide(omega_family, vol)
        if omega.eigvals[-1] <= LOG_FLOOR:
            raise StateNotFaithful(f"reference state on {vol!r} is not faithful")
        H = local_hamiltonian(phi, vol)
        free = -von_neumann_entropy(nu) + beta * float(nu.expect(H).real) + log_partition(H, beta)
        out.append((vol.n, abs(relative_entropy(nu, omega) - free) / vol.n))
    return out


# ---------------------------------------------------------------- extrapolation


@dataclass(frozen=True)
class ExtrapolationReport:
    Ls: tuple[float, ...]
    values: tuple[float, ...]
    limit: float
    slope: float
    residual: float
    monotone: str = field(default="none")

    def predict(self, L: float) -> float:
        return self.limit + self.slope / L


def extrapolate(points: Sequence[tuple[float, float]]) -> ExtrapolationReport:
    """Least-squares fit of ``value = a + b/L``; ``residual`` is the rms misfit."""
    if len(points) < 3:
        raise TooFewPoints(f"need at least 3 volumes, got {len(points)}")
    Ls = np.array([p[0] for p in points], dtype=float)
    vals = np.array([p[1] for p in points], dtype=float)
    A = np.column_stack([np.ones_like(Ls), 1.0 / Ls])
    (a, b), *_ = np.linalg.lstsq(A, vals, rcond=None)
    resid = float(np.sqrt(np.mean((A @ np.array([a, b]) - vals) ** 2)))
    order = np.argsort(Ls)
    steps = np.diff(vals[order])
    if np.all(steps < 0):
        mono = "decreasing"
    elif np.all(steps > 0):
        mono = "increasing"
    elif np.all(steps == 0):
        mono = "constant"
    else:
        mono = "none"
    return ExtrapolationReport(tuple(Ls.tolist()), tuple(vals.tolist()), float(a), float(b), resid, mono)
