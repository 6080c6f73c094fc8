"""Translation-invariant finite-range interactions.

An :class:`Interaction` stores one Hermitian matrix per subset shape. Shapes
are kept in normal form: points sorted lexicographically with the smallest
point at the origin. Every translate ``X + x`` carries the same matrix, whose
tensor factors follow the lexicographic order of the points.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from itertools import product
from typing import Callable, Iterable, Iterator, Mapping, Sequence

import numpy as np

from .errors import MarginTooSmall, NotHermitian
from .operator_core import (
    HERMITIAN_TOL,
    ID2,
    SX,
    SY,
    SZ,
    LatticeOperator,
    SiteSpace,
    Site,
    Volume,
    check_cap,
    commutator,
    embed_sum,
)


def _add(a: Site, b: Site) -> Site:
    return tuple(x + y for x, y in zip(a, b))


def _sub(a: Site, b: Site) -> Site:
    return tuple(x - y for x, y in zip(a, b))


@dataclass(frozen=True)
class SubsetShape:
    points: tuple[Site, ...]

    def __post_init__(self):
        pts = sorted({tuple(int(c) for c in p) for p in self.points})
        if not pts:
            raise ValueError("empty shape")
        if any(c != 0 for c in pts[0]):
            raise ValueError("shape not in normal form: lexicographic minimum must be the origin")
        object.__setattr__(self, "points", tuple(pts))

    @classmethod
    def normalize(cls, points: Iterable) -> tuple["SubsetShape", Site]:
        """Shift ``points`` into normal form; also return the removed offset."""
        pts = sorted(tuple(p) if not isinstance(p, (int, np.integer)) else (int(p),) for p in points)
        origin = pts[0]
        return cls(tuple(_sub(p, origin) for p in pts)), origin

    @property
    def size(self) -> int:
        return len(self.points)

    @property
    def d(self) -> int:
        return len(self.points[0])

    @property
    def diameter(self) -> int:
        return max(sum(abs(a - b) for a, b in zip(p, q)) for p in self.points for q in self.points)

    def translate(self, x: Site) -> tuple[Site, ...]:
        return tuple(_add(p, x) for p in self.points)


@dataclass(frozen=True, eq=False)
class Interaction:
    site: SiteSpace
    terms: Mapping[SubsetShape, np.ndarray] = field(default_factory=dict)

    def __post_init__(self):
        clean = {}
        for shape, mat in self.terms.items():
            m = np.array(mat, dtype=np.complex128)
            D = self.site.dim**shape.size
            if m.shape != (D, D):
                raise ValueError(f"term on {shape.points} has shape {m.shape}, expected {(D, D)}")
            if np.abs(m - m.conj().T).max(initial=0.0) > HERMITIAN_TOL * max(1.0, np.abs(m).max()):
                raise NotHermitian(f"term on {shape.points} is not hermitian")
            m = 0.5 * (m + m.conj().T)
            m.setflags(write=False)
            clean[shape] = m
        if len({s.d for s in clean}) > 1:
            raise ValueError("shapes of mixed lattice dimension")
        object.__setattr__(self, "terms", dict(sorted(clean.items(), key=lambda kv: (kv[0].size, kv[0].points))))

    @classmethod
    def from_terms(cls, dim: int, terms: Iterable[tuple[Iterable, np.ndarray]]) -> "Interaction":
        """Build from ``(points, matrix)`` pairs; same-shape terms are summed."""
        acc: dict[SubsetShape, np.ndarray] = {}
        for pts, mat in terms:
            shape, _ = SubsetShape.normalize(pts)
            m = np.asarray(mat, dtype=np.complex128)
            acc[shape] = acc[shape] + m if shape in acc else m.copy()
        return cls(SiteSpace(dim), acc)

    @classmethod
    def zero(cls, dim: int = 2) -> "Interaction":
        return cls(SiteSpace(dim), {})

    @property
    def dim(self) -> int:
        return self.site.dim

    @property
    def d(self) -> int:
        return next(iter(self.terms)).d if self.terms else 1

    @property
    def range(self) -> int:
        """Largest diameter carrying a nonzero term."""
        return max((s.diameter for s, m in self.terms.items() if np.any(m)), default=0)

    def _combine(self, other: "Interaction", a: float, b: float) -> "Interaction":
        if other.dim != self.dim:
            raise ValueError("interactions on different local spaces")
        acc = {s: a * m for s, m in self.terms.items()}
        for s, m in other.terms.items():
            acc[s] = acc[s] + b * m if s in acc else b * m
        return Interaction(self.site, acc)

    def __add__(self, other: "Interaction") -> "Interaction":
        return self._combine(other, 1.0, 1.0)

    def __sub__(self, other: "Interaction") -> "Interaction":
        return self._combine(other, 1.0, -1.0)

    def __mul__(self, c: float) -> "Interaction":
        return Interaction(self.site, {s: c * m for s, m in self.terms.items()})

    __rmul__ = __mul__

    def __neg__(self) -> "Interaction":
        return self * -1.0

    def to_dict(self) -> dict:
        return {
            "site_dim": self.dim,
            "terms": [
                {
                    "shape": [list(p) for p in s.points],
                    "matrix": [[[float(z.real), float(z.imag)] for z in row] for row in m],
                }
                for s, m in self.terms.items()
            ],
        }

    @classmethod
    def from_dict(cls, data: Mapping) -> "Interaction":
        terms = []
        for t in data["terms"]:
            m = np.array([[complex(re, im) for re, im in row] for row in t["matrix"]], dtype=np.complex128)
            terms.append(([tuple(p) for p in t["shape"]], m))
        return cls.from_terms(int(data["site_dim"]), terms)

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def from_json(cls, text: str) -> "Interaction":
        return cls.from_dict(json.loads(text))


def same_terms(phi: Interaction, psi: Interaction) -> bool:
    """Bit-exact equality of two interactions."""
    if phi.dim != psi.dim or phi.terms.keys() != psi.terms.keys():
        return False
    return all(np.array_equal(phi.terms[s], psi.terms[s]) for s in phi.terms)


# ---------------------------------------------------------------- built-ins


def _unit_vectors(d: int) -> list[Site]:
    return [tuple(1 if i == k else 0 for i in range(d)) for k in range(d)]


def _nn_interaction(d: int, bond: np.ndarray, onsite: np.ndarray | None, dim: int = 2) -> Interaction:
    origin = (0,) * d
    terms = [((origin, e), bond) for e in _unit_vectors(d)]
    if onsite is not None:
        terms.append(((origin,), onsite))
    return Interaction.from_terms(dim, terms)


def ising_transverse(J: float = 1.0, h: float = 1.0, d: int = 1) -> Interaction:
    """``J sz sz`` on nearest-neighbour bonds plus ``h sx`` on every site."""
    return _nn_interaction(d, J * np.kron(SZ, SZ), h * SX)


def xy(J: float = 1.0, h: float = 0.0, d: int = 1) -> Interaction:
    return _nn_interaction(d, J * (np.kron(SX, SX) + np.kron(SY, SY)), h * SZ)


def xxz(J: float = 1.0, delta: float = 1.0, h: float = 0.0, d: int = 1) -> Interaction:
    return _nn_interaction(d, J * (np.kron(SX, SX) + np.kron(SY, SY) + delta * np.kron(SZ, SZ)), h * SZ)


def heisenberg(J: float = 1.0, h: float = 0.0, d: int = 1) -> Interaction:
    return xxz(J, 1.0, h, d)


def onsite_field(h: float = 1.0, axis: str = "x", d: int = 1, c: float = 0.0) -> Interaction:
    """``h`` times a Pauli matrix on every site, plus ``c`` times the identity."""
    pauli = {"x": SX, "y": SY, "z": SZ}[axis]
    return Interaction.from_terms(2, [(((0,) * d,), h * pauli + c * ID2)])


def identity_shift(c: float, dim: int = 2, d: int = 1) -> Interaction:
    return Interaction.from_terms(dim, [(((0,) * d,), c * np.eye(dim))])


def _fermion_hopping(t=1.0, mu: float = 0.0, V=0.0) -> Interaction:
    from .fermions import FermionInteraction

    return FermionInteraction.build(t=t, mu=mu, V=V).to_interaction()


BUILTINS: dict[str, Callable[..., Interaction]] = {
    "ising_transverse": ising_transverse,
    "xy": xy,
    "xxz": xxz,
    "heisenberg": heisenberg,
    "onsite_field": onsite_field,
    "fermion_hopping": _fermion_hopping,
}


def builtin(name: str, **params) -> Interaction:
    try:
        factory = BUILTINS[name]
    except KeyError:
        raise ValueError(f"unknown interaction family {name!r}; choose from {sorted(BUILTINS)}") from None
    return factory(**params)


# ---------------------------------------------------------------- geometry


def translates_in(phi: Interaction, vol: Volume) -> Iterator[tuple[np.ndarray, tuple[Site, ...]]]:
    """All translated terms ``Phi(X)`` with ``X`` inside ``vol``."""
    for shape, mat in phi.terms.items():
        for s in vol.sites:
            pts = shape.translate(s)
            if all(p in vol for p in pts):
                yield mat, pts


def translates_meeting(phi: Interaction, sites: Iterable[Site]) -> Iterator[tuple[np.ndarray, tuple[Site, ...]]]:
    """All translated terms whose support meets ``sites`` (each once)."""
    sites = list(sites)
    for shape, mat in phi.terms.items():
        seen = set()
        for s in sites:
            for p in shape.points:
                x = _sub(s, p)
                if x not in seen:
                    seen.add(x)
                    yield mat, shape.translate(x)


def local_hamiltonian(phi: Interaction, vol: Volume, cap: int | None = None) -> LatticeOperator:
    """Open-boundary ``H_vol = sum of Phi(X) over X inside vol``."""
    check_cap(vol, phi.dim, cap)
    return LatticeOperator(vol, embed_sum(translates_in(phi, vol), vol, phi.dim), phi.dim, True)


def surface_terms(phi: Interaction, vol: Volume, ambient: Volume) -> list[tuple[np.ndarray, tuple[Site, ...]]]:
    if not vol.issubset(ambient):
        raise MarginTooSmall("volume is not inside the ambient volume")
    out = []
    for mat, pts in translates_meeting(phi, vol.sites):
        if not np.any(mat):
            continue
        if any(p not in ambient for p in pts):
            raise MarginTooSmall(f"term on {pts} leaves the ambient volume")
        if any(p not in vol for p in pts):
            out.append((mat, pts))
    return out


def surface_energy(phi: Interaction, vol: Volume, ambient: Volume, cap: int | None = None) -> LatticeOperator:
    """Sum of terms meeting both ``vol`` and ``ambient \\ vol``, as an operator on ``ambient``."""
    check_cap(ambient, phi.dim, cap)
    terms = surface_terms(phi, vol, ambient)
    return LatticeOperator(ambient, embed_sum(terms, ambient, phi.dim), phi.dim, True)


def padded(vol: Volume, margin: int) -> Volume:
    """``vol`` enlarged by every site within l1-distance ``margin``."""
    steps = [v for v in product(range(-margin, margin + 1), repeat=vol.d) if sum(map(abs, v)) <= margin]
    grown = Volume(tuple({_add(s, v) for s in vol.sites for v in steps}))
    if vol.d == 1 and grown.sites[-1][0] - grown.sites[0][0] + 1 == grown.n:
        return Volume.interval(grown.sites[0][0], grown.n)
    return grown


def ball(radius: int, d: int = 1) -> Volume:
    """l1-ball of the given radius around the origin."""
    return padded(Volume(((0,) * d,)), radius)


def specific_energy_observable(phi: Interaction) -> LatticeOperator:
    """``E_Phi = sum over X containing 0 of Phi(X)/|X|`` on the l1-ball of radius ``range``."""
    d = phi.d
    support = ball(phi.range, d)
    origin = (0,) * d
    terms = []
    for mat, pts in translates_meeting(phi, [origin]):
        if not np.any(mat):
            continue
        terms.append((mat / len(pts), pts))
    return LatticeOperator(support, embed_sum(terms, support, phi.dim), phi.dim, True)


def br_norm(phi: Interaction, r: float) -> float:
    """``sum over X containing 0 of exp(r(|X|-1)) ||Phi(X)||``."""
    if r <= 0:
        raise ValueError("r must be positive")
    total = 0.0
    for shape, mat in phi.terms.items():
        norm = float(np.linalg.norm(mat, 2)) if mat.size else 0.0
        # each shape has exactly |X| translates containing the origin
        total += shape.size * np.exp(r * (shape.size - 1)) * norm
    return total


# ---------------------------------------------------------------- equivalence


@dataclass(frozen=True)
class EquivalenceResult:
    equivalent: bool
    witness: str | None = None
    witness_norm: float = 0.0
    max_norm: float = 0.0

    @property
    def verdict(self) -> str:
        return "equivalent" if self.equivalent else "inequivalent"


def hermitian_basis(dim: int) -> list[tuple[str, np.ndarray]]:
    """Traceless Hermitian basis of M_dim: diagonal generators first, then symmetric/antisymmetric pairs.

    For ``dim == 2`` this is ``sz, sx, sy``.
    """
    if dim == 2:
        return [("sz", SZ), ("sx", SX), ("sy", SY)]
    out = []
    for k in range(1, dim):
        m = np.zeros((dim, dim), dtype=np.complex128)
        m[np.arange(k), np.arange(k)] = 1.0
        m[k, k] = -k
        out.append((f"diag{k}", m * np.sqrt(2.0 / (k * (k + 1)))))
    for a in range(dim):
        for b in range(a + 1, dim):
            s = np.zeros((dim, dim), dtype=np.complex128)
            s[a, b] = s[b, a] = 1.0
            y = np.zeros((dim, dim), dtype=np.complex128)
            y[a, b], y[b, a] = -1j, 1j
            out.append((f"sym{a}{b}", s))
            out.append((f"asym{a}{b}", y))
    return out


def default_probes(phi: Interaction, d: int | None = None) -> list[tuple[str, LatticeOperator]]:
    """Single-site Hermitian generators at the origin, then two-site products across range-m supports."""
    d = phi.d if d is None else d
    origin = (0,) * d
    basis = hermitian_basis(phi.dim)
    probes = [(f"{name}@{origin}", LatticeOperator.local(m, [origin], phi.dim)) for name, m in basis]
    m = phi.range
    for e in _unit_vectors(d):
        for step in range(1, m + 1):
            other = tuple(step * c for c in e)
            for (na, a), (nb, b) in product(basis, basis):
                probes.append(
                    (f"{na}@{origin}*{nb}@{other}", LatticeOperator.local(np.kron(a, b), [origin, other], phi.dim))
                )
    return probes


def _probe_commutator(delta: Interaction, probe: LatticeOperator) -> float:
    terms = [(mat, pts) for mat, pts in translates_meeting(delta, probe.volume.sites) if np.any(mat)]
    if not terms:
        return 0.0
    sites = set(probe.volume.sites)
    for _, pts in terms:
        sites.update(pts)
    vol = Volume(tuple(sites))
    h = embed_sum(terms, vol, delta.dim)
    a = embed_sum([(probe.matrix, probe.volume.sites)], vol, delta.dim)
    return float(np.linalg.norm(commutator(h, a), 2))


def physically_equivalent(
    phi: Interaction,
    psi: Interaction,
    probes: Sequence[tuple[str, LatticeOperator]] | None = None,
    tol: float = 1e-12,
) -> EquivalenceResult:
    """Test whether ``sum_X [Phi(X) - Psi(X), A]`` vanishes for every probe ``A``."""
    delta = phi - psi
    if probes is None:
        probes = default_probes(phi + psi, d=phi.d if phi.terms else psi.d)
    if not probes:
        raise ValueError("probe set must be nonempty")
    worst = 0.0
    for name, probe in probes:
        norm = _probe_commutator(delta, probe)
        worst = max(worst, norm)
        if norm > tol:
            return EquivalenceResult(False, name, norm, worst)
    return EquivalenceResult(True, None, 0.0, worst)


def normalized_trace(op: LatticeOperator) -> float:
    return float(np.trace(op.matrix).real) / op.matrix.shape[0]


def hamiltonian_density_difference(
    phi: Interaction, psi: Interaction, vols: Sequence[Volume], cap: int | None = None
) -> list[tuple[int, float]]:
    """``||(H(Phi) - H(Psi))/|vol| - c 1||`` per volume, ``c`` the normalised trace of ``E_{Phi-Psi}``."""
    c = normalized_trace(specific_energy_observable(phi - psi))
    out = []
    for vol in vols:
        diff = local_hamiltonian(phi - psi, vol, cap).matrix / vol.n
        diff = diff - c * np.eye(diff.shape[0])
        w = np.linalg.eigvalsh(0.5 * (diff + diff.conj().T))
        out.append((vol.n, float(max(abs(w[0]), abs(w[-1])))))
    return out
