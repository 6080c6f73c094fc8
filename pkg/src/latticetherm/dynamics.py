"""Finite-volume dynamics, time averages, perturbed Gibbs states and the quench engine."""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from typing import Sequence

import numpy as np
from numpy.polynomial import chebyshev as cheb
from scipy.linalg import expm

from . import _kernels
from .errors import MarginTooSmall, OverflowRisk, TruncationNotConverged, VolumeMismatch
from .interactions import Interaction, local_hamiltonian, specific_energy_observable, surface_energy
from .operator_core import (
    DensityMatrix,
    LatticeOperator,
    Volume,
    embed_sum,
    operator_norm,
    partial_trace,
)
from .thermodynamics import centered_windows, gibbs_from_hamiltonian, gibbs_state, von_neumann_entropy

IM_Z_BOUND = 2.0
OVERFLOW_CAP = 200.0


class EvolutionContext:
    """A Hamiltonian together with its eigensystem, computed once."""

    def __init__(self, hamiltonian: LatticeOperator):
        self.hamiltonian = hamiltonian
        self.eigvals, self.eigvecs = hamiltonian.eigh

    @property
    def volume(self) -> Volume:
        return self.hamiltonian.volume

    @property
    def norm(self) -> float:
        return float(max(abs(self.eigvals[0]), abs(self.eigvals[-1])))

    @property
    def width(self) -> float:
        return float(self.eigvals[-1] - self.eigvals[0])

    @cached_property
    def degeneracy_tol(self) -> float:
        return 1e-10 * max(1.0, self.norm)

    def to_eigenbasis(self, m: np.ndarray) -> np.ndarray:
        return self.eigvecs.conj().T @ m @ self.eigvecs

    def from_eigenbasis(self, m: np.ndarray) -> np.ndarray:
        return self.eigvecs @ m @ self.eigvecs.conj().T

    def propagator(self, t: complex) -> np.ndarray:
        """``exp(-i t H)``."""
        return (self.eigvecs * np.exp(-1j * t * self.eigvals)) @ self.eigvecs.conj().T


def _check_volume(rho, ctx: EvolutionContext):
    if rho.volume != ctx.volume:
        raise VolumeMismatch(f"{rho.volume!r} vs {ctx.volume!r}")


def evolve_state(rho: DensityMatrix, ctx: EvolutionContext, t: float) -> DensityMatrix:
    """``exp(-itH) rho exp(itH)``; the spectrum of ``rho`` is carried over exactly."""
    _check_volume(rho, ctx)
    if t == 0:
        return rho
    vecs = ctx.propagator(t) @ rho.eigvecs
    return DensityMatrix.from_spectrum(rho.eigvals, vecs, rho.volume, rho.dim)


def evolve_observable_complex(
    a: LatticeOperator, ctx: EvolutionContext, z: complex, im_bound: float = IM_Z_BOUND
) -> LatticeOperator:
    """``exp(izH) A exp(-izH)`` for complex ``z``."""
    _check_volume(a, ctx)
    z = complex(z)
    if abs(z.imag) > im_bound:
        raise OverflowRisk(f"|Im z| = {abs(z.imag)} exceeds bound {im_bound}")
    if ctx.width * abs(z.imag) > OVERFLOW_CAP:
        raise OverflowRisk("spectrum width times |Im z| exceeds the overflow cap")
    w = ctx.eigvals
    phase = np.exp(1j * z * (w[:, None] - w[None, :]))
    out = ctx.from_eigenbasis(ctx.to_eigenbasis(a.matrix) * phase)
    return LatticeOperator(a.volume, out, a.dim, a.hermitian and z.imag == 0)


# ---------------------------------------------------------------- time averages


def trapezoid_steps(ctx: EvolutionContext, T: float) -> int:
    return max(2, int(np.ceil(ctx.norm * T / 0.1)))


def cesaro_eigenbasis(rho_eig: np.ndarray, ctx: EvolutionContext, T: float, method: str = "exact", n: int | None = None):
    """Time average of ``rho`` over ``[0, T]`` with both input and output in the eigenbasis of H."""
    if method == "exact":
        factors = _kernels.dephasing_factors(ctx.eigvals, T, ctx.degeneracy_tol)
    elif method == "trapezoid":
        factors = _kernels.trapezoid_phase_average(ctx.eigvals, T, n or trapezoid_steps(ctx, T))
    else:
        raise ValueError(f"unknown averaging method {method!r}")
    return rho_eig * factors


def cesaro_average(
    rho0: DensityMatrix, ctx: EvolutionContext, T: float, n: int | None = None, method: str = "exact"
) -> DensityMatrix:
    """``(1/T) int_0^T rho_t dt``.

    ``method="exact"`` multiplies eigenbasis coherences by
    ``(1 - exp(-i delta T))/(i delta T)``; ``method="trapezoid"`` sums the
    evolved state on ``n`` steps (default: ``||H|| T / n <= 0.1``).
    """
    _check_volume(rho0, ctx)
    if not T > 0:
        raise ValueError("horizon must be positive")
    if method == "trapezoid" and n is not None and n < 2:
        raise ValueError("trapezoid needs n >= 2")
    avg = cesaro_eigenbasis(ctx.to_eigenbasis(rho0.matrix), ctx, T, method, n)
    return DensityMatrix.from_matrix(ctx.from_eigenbasis(avg), rho0.volume, rho0.dim)


def diagonal_ensemble(rho0: DensityMatrix, ctx: EvolutionContext) -> DensityMatrix:
    """Infinite-time average: projection onto the degenerate blocks of H."""
    _check_volume(rho0, ctx)
    avg = cesaro_eigenbasis(ctx.to_eigenbasis(rho0.matrix), ctx, np.inf)
    return DensityMatrix.from_matrix(ctx.from_eigenbasis(avg), rho0.volume, rho0.dim)


# ---------------------------------------------------------------- perturbations


def perturbed_gibbs(h: LatticeOperator, v: LatticeOperator, beta: float = 1.0) -> DensityMatrix:
    """Gibbs state of ``H + V``."""
    if h.volume != v.volume:
        raise VolumeMismatch("H and V live on different volumes")
    return gibbs_from_hamiltonian(h + v, beta)


def _cheb_integration(m: int) -> tuple[np.ndarray, np.ndarray]:
    """Lobatto nodes on [0, 1] and the matrix mapping samples to running integrals from 0."""
    x = np.cos(np.pi * np.arange(m)[::-1] / (m - 1))
    vander_inv = np.linalg.inv(cheb.chebvander(x, m - 1))
    Q = np.empty((m, m))
    for j in range(m):
        coeffs = cheb.chebint(vander_inv[:, j], lbnd=-1)
        Q[:, j] = cheb.chebval(x, coeffs) * 0.5
    return 0.5 * (x + 1.0), Q


_NODES, _QMAT = _cheb_integration(24)


def expansional(
    h: LatticeOperator, v: LatticeOperator, z: complex, n_max: int = 40, tol: float = 1e-12
) -> LatticeOperator:
    """Time-ordered series ``sum_n (iz)^n int_{s_n<...<s_1} alpha^{z s_n}(V) ... alpha^{z s_1}(V)``.

    ``[0, 1]`` is split into equal pieces short enough that the series on one
    piece converges within ``n_max`` terms; the pieces are chained with the
    cocycle ``E(a+b) = E(a) alpha^a(E(b))``. Nested integrals on a piece use
    Chebyshev-Lobatto collocation.
    """
    if h.volume != v.volume:
        raise VolumeMismatch("H and V live on different volumes")
    z = complex(z)
    D = h.shape[0]
    if z == 0 or not np.any(v.matrix):
        return LatticeOperator(h.volume, np.eye(D), h.dim, False)
    ctx = EvolutionContext(h)
    w = ctx.eigvals
    delta = w[:, None] - w[None, :]
    vt = ctx.to_eigenbasis(v.matrix)
    vnorm = operator_norm(v)
    growth = np.exp(abs(z.imag) * ctx.width)
    pieces = max(1, int(np.ceil(abs(z) * max(vnorm * growth, ctx.width, 1.0))))
    hstep = 1.0 / pieces
    nodes = _NODES * hstep
    A = vt[None, :, :] * np.exp(1j * z * nodes[:, None, None] * delta[None, :, :])
    bound = abs(z) * hstep * max(np.linalg.norm(a, 2) for a in A)
    tail = bound**n_max / np.prod(np.arange(1, n_max + 1, dtype=float))
    if tail >= tol:
        raise TruncationNotConverged(f"tail estimate {tail:.2e} after {n_max} terms")
    Q = _QMAT * hstep
    term = np.broadcast_to(np.eye(D, dtype=np.complex128), (len(nodes), D, D))
    piece = np.eye(D, dtype=np.complex128)
    for _ in range(n_max):
        prod = term @ A
        term = 1j * z * np.einsum("ij,jab->iab", Q, prod)
        piece = piece + term[-1]
        if np.linalg.norm(term[-1]) <= 1e-17 * np.linalg.norm(piece):
            break
    total = piece
    for k in range(1, pieces):
        total = total @ (piece * np.exp(1j * z * k * hstep * delta))
    return LatticeOperator(h.volume, ctx.from_eigenbasis(total), h.dim, False)


def expansional_closed_form(h: LatticeOperator, v: LatticeOperator, z: complex) -> LatticeOperator:
    """``exp(iz(H+V)) exp(-izH)`` by dense matrix exponentials."""
    m = expm(1j * z * (h.matrix + v.matrix)) @ expm(-1j * z * h.matrix)
    return LatticeOperator(h.volume, m, h.dim, False)


@dataclass(frozen=True)
class SandwichBounds:
    C: float
    D: float
    upper_margin: float
    lower_margin: float


def sandwich_bounds(h: LatticeOperator, v: LatticeOperator, lower_generator: str = "perturbed") -> SandwichBounds:
    """Constants with ``D omega <= omega_V <= C omega``.

    ``C = exp(||V|| + ||alpha^{i/2}(V)||)`` with ``alpha`` generated by ``H``.
    ``D = exp(-||V|| - ||alpha'^{i/2}(V)||)`` where ``alpha'`` is generated by
    ``H + V`` (``lower_generator="perturbed"``, obtained by applying the upper
    bound to ``omega = (omega_V)_{-V}``) or by ``H - V``
    (``lower_generator="reversed"``). The margins are the minimum eigenvalues
    of ``C omega - omega_V`` and ``omega_V - D omega``.
    """
    if h.volume != v.volume:
        raise VolumeMismatch("H and V live on different volumes")
    if lower_generator == "perturbed":
        lower_ctx = EvolutionContext(h + v)
    elif lower_generator == "reversed":
        lower_ctx = EvolutionContext(h - v)
    else:
        raise ValueError(f"unknown lower_generator {lower_generator!r}")
    vnorm = operator_norm(v)
    a_half = evolve_observable_complex(v, EvolutionContext(h), 0.5j)
    a_half_lower = evolve_observable_complex(v, lower_ctx, 0.5j)
    C = float(np.exp(vnorm + operator_norm(a_half)))
    Dv = float(np.exp(-vnorm - operator_norm(a_half_lower)))
    omega = gibbs_from_hamiltonian(h)
    omega_v = perturbed_gibbs(h, v)
    upper = np.linalg.eigvalsh(C * omega.matrix - omega_v.matrix)[0]
    lower = np.linalg.eigvalsh(omega_v.matrix - Dv * omega.matrix)[0]
    return SandwichBounds(C, Dv, float(upper), float(lower))


def analyticity_bound(a_norm: float, support: int, phi_norm_r: float, r: float, im_z: float) -> float:
    """Right-hand side ``||A|| e^{r|supp A|} r / (r - 2||Phi||_r |Im z|)``."""
    denom = r - 2.0 * phi_norm_r * abs(im_z)
    if denom <= 0:
        return float("inf")
    return a_norm * np.exp(r * support) * r / denom


# ---------------------------------------------------------------- quench engine


@dataclass(frozen=True)
class QuenchExperiment:
    psi: Interaction
    phi: Interaction
    L_amb: int
    L_obs: int
    beta: float = 1.0
    times: tuple[float, ...] = ()
    horizons: tuple[float, ...] = (1.0, 2.0, 5.0, 10.0, 20.0)
    fermionic: bool = False
    method: str = "exact"

    def __post_init__(self):
        if list(self.times) != sorted(self.times):
            raise ValueError("time grid must be ascending")
        if any(T <= 0 for T in self.horizons):
            raise ValueError("horizons must be positive")

    @property
    def margin(self) -> int:
        return max(self.phi.range, self.psi.range, 1)

    @property
    def ambient(self) -> Volume:
        return Volume.cube(self.L_amb)

    @property
    def window(self) -> Volume:
        return centered_windows(self.ambient, [self.L_obs])[0]


@dataclass
class QuenchReport:
    experiment: QuenchExperiment
    initial: dict[str, float]
    horizon_series: dict[str, tuple[float, ...]]
    time_series: dict[str, tuple[float, ...]]
    plus: dict[str, float]
    horizon_states: list[DensityMatrix] = field(default_factory=list, repr=False)
    time_states: list[DensityMatrix] = field(default_factory=list, repr=False)

    def delta(self, name: str = "E_psi") -> tuple[float, ...]:
        """Cesaro value minus initial value, per horizon."""
        return tuple(v - self.initial[name] for v in self.horizon_series[name])

    def rows(self):
        """``(kind, T or t, observable, value)`` in deterministic order."""
        out = [("initial", 0.0, k, v) for k, v in self.initial.items()]
        for k, vals in self.horizon_series.items():
            out += [("horizon", T, k, v) for T, v in zip(self.experiment.horizons, vals)]
        for k, vals in self.time_series.items():
            out += [("time", t, k, v) for t, v in zip(self.experiment.times, vals)]
        out += [("plus", float("inf"), k, v) for k, v in self.plus.items()]
        return out


def window_average_observable(obs: LatticeOperator, window: Volume, margin: int) -> LatticeOperator:
    """Mean of the translates of ``obs`` whose support fits inside ``window``.

    ``obs`` must be centred at the origin; its support radius is ``margin``.
    """
    terms = []
    for x in window.sites:
        moved = obs.translated(x)
        if moved.volume.issubset(window):
            terms.append((obs.matrix, moved.volume.sites))
    if not terms:
        raise MarginTooSmall(f"window {window!r} too small for an observable of radius {margin}")
    m = embed_sum(terms, window, obs.dim) / len(terms)
    return LatticeOperator(window, m, obs.dim, True)


def _observables(exp: QuenchExperiment, window: Volume) -> dict[str, LatticeOperator]:
    obs = {
        "E_psi": window_average_observable(specific_energy_observable(exp.psi), window, exp.psi.range),
        "E_phi": window_average_observable(specific_energy_observable(exp.phi), window, exp.phi.range),
    }
    if exp.fermionic:
        from .fermions import number_density_observable

        obs["E_N"] = window_average_observable(number_density_observable(), window, 0)
    return obs


def _measure(rho_win: DensityMatrix, obs: dict[str, LatticeOperator]) -> dict[str, float]:
    out = {k: float(rho_win.expect(o).real) for k, o in obs.items()}
    out["entropy_density"] = von_neumann_entropy(rho_win) / rho_win.volume.n
    return out


def _validate(exp: QuenchExperiment):
    if exp.L_obs + 2 * exp.margin > exp.L_amb:
        raise MarginTooSmall(f"window {exp.L_obs} plus margins {exp.margin} exceed ambient {exp.L_amb}")


def run_quench(exp: QuenchExperiment, keep_states: bool = False) -> QuenchReport:
    """Prepare the Gibbs state of ``psi`` on the ambient chain and evolve it under ``phi``.

    For each horizon the Cesaro average is restricted to the centred window and
    the window averages of ``E_psi``, ``E_phi`` (and ``E_N``) and the window
    entropy density are recorded. ``plus`` holds the same quantities for the
    infinite-time (dephased) state.
    """
    _validate(exp)
    ambient, window = exp.ambient, exp.window
    omega = gibbs_state(exp.psi, ambient, exp.beta)
    ctx = EvolutionContext(local_hamiltonian(exp.phi, ambient))
    obs = _observables(exp, window)
    rho_eig = ctx.to_eigenbasis(omega.matrix)

    def window_state(full: np.ndarray) -> DensityMatrix:
        reduced = partial_trace(LatticeOperator(ambient, full, omega.dim, True), window)
        return DensityMatrix.from_matrix(reduced.matrix, window, omega.dim)

    initial = _measure(window_state(omega.matrix), obs)
    keys = list(initial)
    hseries = {k: [] for k in keys}
    hstates = []
    for T in exp.horizons:
        st = window_state(ctx.from_eigenbasis(cesaro_eigenbasis(rho_eig, ctx, T, exp.method)))
        for k, v in _measure(st, obs).items():
            hseries[k].append(v)
        if keep_states:
            hstates.append(st)
    tseries = {k: [] for k in keys}
    tstates = []
    for t in exp.times:
        st = window_state(evolve_state(omega, ctx, t).matrix)
        for k, v in _measure(st, obs).items():
            tseries[k].append(v)
        if keep_states:
            tstates.append(st)
    plus = _measure(window_state(ctx.from_eigenbasis(cesaro_eigenbasis(rho_eig, ctx, np.inf))), obs)
    return QuenchReport(
        exp,
        initial,
        {k: tuple(v) for k, v in hseries.items()},
        {k: tuple(v) for k, v in tseries.items()},
        plus,
        hstates,
        tstates,
    )


@dataclass(frozen=True)
class AuditRow:
    t: float
    energy_drift: float
    entropy_drift: float
    window_energy_drift: float
    window_entropy_drift: float
    boundary_budget: float


def conservation_audit(exp: QuenchExperiment, times: Sequence[float] | None = None) -> list[AuditRow]:
    """Drift of global energy and entropy, and of window ``E_phi`` and entropy density, along the quench."""
    _validate(exp)
    ambient, window = exp.ambient, exp.window
    omega = gibbs_state(exp.psi, ambient, exp.beta)
    H = local_hamiltonian(exp.phi, ambient)
    ctx = EvolutionContext(H)
    e_phi = window_average_observable(specific_energy_observable(exp.phi), window, exp.phi.range)
    w_norm = operator_norm(surface_energy(exp.phi, window, ambient)) if exp.phi.range > 0 else 0.0

    def snapshot(rho: DensityMatrix):
        energy = float(np.einsum("ij,ji->", rho.matrix, H.matrix).real)
        p = np.clip(np.linalg.eigvalsh(rho.matrix), 0.0, None)
        p = p[p > 0]
        entropy = float(-np.sum(p * np.log(p)))
        win = partial_trace(rho, window)
        return energy, entropy, float(win.expect(e_phi).real), von_neumann_entropy(win) / window.n

    ref = snapshot(omega)
    rows = []
    for t in exp.times if times is None else times:
        cur = snapshot(evolve_state(omega, ctx, t))
        rows.append(
            AuditRow(
                float(t),
                abs(cur[0] - ref[0]),
                abs(cur[1] - ref[1]),
                abs(cur[2] - ref[2]),
                abs(cur[3] - ref[3]),
                w_norm * abs(t) / window.n,
            )
        )
    return rows
