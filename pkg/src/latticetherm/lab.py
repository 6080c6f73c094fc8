"""Experiment configuration, orchestration and reporting behind the command line."""

from __future__ import annotations

import hashlib
import json
import math
import time
from concurrent.futures import ThreadPoolExecutor
from datetime import datetime, timezone
from pathlib import Path
from typing import Any, Callable, Sequence

import jsonschema
import numpy as np

from . import __version__
from ._settings import current_cap
from .csvio import (
    CERTIFICATE_DETAIL_COLUMNS,
    THERMO_COLUMNS,
    certificate_detail_rows,
    certificate_rows,
    read_csv,
    write_csv,
)
from .dynamics import (
    EvolutionContext,
    QuenchExperiment,
    conservation_audit,
    expansional,
    expansional_closed_form,
    run_quench,
    sandwich_bounds,
)
from .errors import ConfigInvalid, LatticeThermError, ManifestMissing, VolumeTooLarge
from .fermions import FermionInteraction, number_conservation_audit
from .interactions import (
    BUILTINS,
    Interaction,
    builtin,
    hamiltonian_density_difference,
    identity_shift,
    local_hamiltonian,
    physically_equivalent,
)
from .operator_core import (
    LatticeOperator,
    Volume,
    embed,
    random_density_matrix,
    random_hermitian,
)
from .thermodynamics import (
    ThermoPoint,
    centered_windows,
    extrapolate,
    gibbs_from_hamiltonian,
    log_partition,
    relative_entropy,
    variational_gap,
    von_neumann_entropy,
    weak_gibbs_certificate,
    window_states,
)

EXPERIMENTS = ("pressure", "gibbs", "weakgibbs", "equiv", "quench", "fermion-quench", "bounds")

_NUMBER = {"type": "number"}
_POS_INT = {"type": "integer", "minimum": 1}
_SIDES = {"type": "array", "items": _POS_INT, "minItems": 1}
_NUMBERS = {"type": "array", "items": _NUMBER}

INTERACTION_SCHEMA = {
    "oneOf": [
        {
            "type": "object",
            "properties": {
                "builtin": {"enum": sorted(BUILTINS)},
                "params": {"type": "object", "additionalProperties": {"type": ["number", "string", "array"]}},
                "identity_shift": _NUMBER,
            },
            "required": ["builtin"],
            "additionalProperties": False,
        },
        {
            "type": "object",
            "properties": {
                "site_dim": {"type": "integer", "minimum": 2},
                "terms": {
                    "type": "array",
                    "items": {
                        "type": "object",
                        "properties": {
                            "shape": {"type": "array", "minItems": 1, "items": {"type": "array", "items": {"type": "integer"}}},
                            "matrix": {
                                "type": "array",
                                "items": {"type": "array", "items": {"type": "array", "items": _NUMBER, "minItems": 2, "maxItems": 2}},
                            },
                        },
                        "required": ["shape", "matrix"],
                        "additionalProperties": False,
                    },
                },
                "identity_shift": _NUMBER,
            },
            "required": ["site_dim", "terms"],
            "additionalProperties": False,
        },
        {
            "type": "object",
            "properties": {
                "type": {"const": "fermion"},
                "t": {"oneOf": [_NUMBER, _NUMBERS]},
                "mu": _NUMBER,
                "V": {"oneOf": [_NUMBER, _NUMBERS]},
                "pairing": {"oneOf": [_NUMBER, _NUMBERS]},
            },
            "required": ["type"],
            "additionalProperties": False,
        },
    ]
}


def _requires(kind: str, fields: Sequence[str]) -> dict:
    return {"if": {"properties": {"experiment": {"const": kind}}}, "then": {"required": list(fields)}}


CONFIG_SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "title": "latticetherm experiment",
    "type": "object",
    "properties": {
        "experiment": {"enum": list(EXPERIMENTS)},
        "phi": INTERACTION_SCHEMA,
        "psi": INTERACTION_SCHEMA,
        "state": INTERACTION_SCHEMA,
        "volumes": _SIDES,
        "d": {"type": "integer", "minimum": 1, "maximum": 3},
        "beta": _NUMBER,
        "ambient": _POS_INT,
        "windows": _SIDES,
        "L": _POS_INT,
        "L_amb": _POS_INT,
        "L_obs": _POS_INT,
        "times": {"type": "array", "items": {"type": "number", "minimum": 0}},
        "horizons": {"type": "array", "items": {"type": "number", "exclusiveMinimum": 0}, "minItems": 1},
        "samples": _POS_INT,
        "seed": {"type": "integer", "minimum": 0},
        "tol": {"type": "number", "exclusiveMinimum": 0},
        "output": {"type": "string"},
        "description": {"type": "string"},
    },
    "required": ["experiment"],
    "additionalProperties": False,
    "allOf": [
        _requires("pressure", ["phi", "volumes"]),
        _requires("gibbs", ["phi", "volumes"]),
        _requires("weakgibbs", ["phi", "ambient", "windows"]),
        _requires("equiv", ["phi", "psi"]),
        _requires("quench", ["phi", "psi", "L_amb", "L_obs", "horizons"]),
        _requires("fermion-quench", ["phi", "psi", "L_amb", "L_obs", "horizons"]),
        _requires("bounds", ["phi"]),
    ],
}


# ---------------------------------------------------------------- parsing


def _reject_constant(name: str):
    raise ValueError(f"non-finite number {name} is not allowed")


def _finite_float(text: str) -> float:
    x = float(text)
    if not math.isfinite(x):
        raise ValueError(f"number {text} overflows to a non-finite value")
    return x


def parse_config(text: str, source: str = "<config>") -> dict:
    """Parse and validate a config document; raise ConfigInvalid with a line or field diagnostic."""
    try:
        cfg = json.loads(text, parse_constant=_reject_constant, parse_float=_finite_float)
    except json.JSONDecodeError as exc:
        raise ConfigInvalid(f"{source}:{exc.lineno}:{exc.colno}: {exc.msg}") from None
    except ValueError as exc:
        raise ConfigInvalid(f"{source}: {exc}") from None
    validator = jsonschema.Draft202012Validator(CONFIG_SCHEMA)
    error = jsonschema.exceptions.best_match(validator.iter_errors(cfg))
    if error is not None:
        where = "/".join(str(p) for p in error.absolute_path) or "<root>"
        raise ConfigInvalid(f"{source}: field '{where}': {error.message}")
    _semantic_checks(cfg, source)
    return cfg


def _semantic_checks(cfg: dict, source: str):
    def bad(field: str, msg: str):
        raise ConfigInvalid(f"{source}: field '{field}': {msg}")

    times = cfg.get("times", [])
    if list(times) != sorted(times):
        bad("times", "time grid must be ascending")
    if "windows" in cfg and max(cfg["windows"]) + 2 > cfg["ambient"]:
        bad("windows", "every window needs a margin of at least one site inside the ambient volume")
    if "L_obs" in cfg and cfg["L_obs"] + 2 > cfg.get("L_amb", 0):
        bad("L_obs", "window plus margins exceeds L_amb")
    for name in ("phi", "psi", "state"):
        if name in cfg:
            try:
                build_interaction(cfg[name], cfg.get("d", 1))
            except (TypeError, ValueError, LatticeThermError) as exc:
                bad(name, str(exc))


def load_config(path: Path | str) -> dict:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigInvalid(f"{path}: cannot read config ({exc.strerror})") from None
    return parse_config(text, str(path))


def canonical_json(obj: Any) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"), ensure_ascii=True)


def config_hash(cfg: dict) -> str:
    return hashlib.sha256(canonical_json(cfg).encode()).hexdigest()


def build_interaction(block: dict, d: int = 1) -> Interaction:
    if block.get("type") == "fermion":
        return FermionInteraction.from_config(block).to_interaction()
    if "builtin" in block:
        params = dict(block.get("params", {}))
        if block["builtin"] not in ("fermion_hopping",) and d != 1:
            params.setdefault("d", d)
        phi = builtin(block["builtin"], **params)
    else:
        phi = Interaction.from_dict(block)
    if block.get("identity_shift"):
        phi = phi + identity_shift(block["identity_shift"], phi.dim, phi.d)
    return phi


def check_resources(cfg: dict, cap: int | None = None):
    """Raise VolumeTooLarge if any requested volume exceeds the Hilbert-dimension cap."""
    cap = current_cap() if cap is None else cap
    d = cfg.get("d", 1)
    dim = build_interaction(cfg["phi"], d).dim if "phi" in cfg else 2
    # ``volumes`` are d-dimensional cubes; the chain experiments are one-dimensional
    sizes = [L**d for L in cfg.get("volumes", [])]
    sizes += [cfg[k] for k in ("ambient", "L_amb", "L") if k in cfg]
    for n in sizes:
        if dim**n > cap:
            raise VolumeTooLarge(f"{n} sites need Hilbert dimension {dim**n} > cap {cap}")


# ---------------------------------------------------------------- experiments


class RunContext:
    def __init__(self, cfg: dict, out: Path, threads: int = 1):
        self.cfg = cfg
        self.out = out
        self.threads = max(1, threads)
        self.files: list[str] = []
        self.timings: dict[str, float] = {}
        self.results: dict[str, Any] = {}

    def timed(self, name: str, fn: Callable, *args, **kw):
        t0 = time.perf_counter()
        try:
            return fn(*args, **kw)
        finally:
            self.timings[name] = self.timings.get(name, 0.0) + time.perf_counter() - t0

    def map(self, fn: Callable, items: Sequence):
        if self.threads == 1 or len(items) < 2:
            return [fn(x) for x in items]
        with ThreadPoolExecutor(self.threads) as pool:
            return list(pool.map(fn, items))

    def write(self, name: str, header, rows):
        write_csv(self.out / name, header, rows)
        self.files.append(name)

    def write_json(self, name: str, obj):
        (self.out / name).write_text(json.dumps(obj, indent=2, sort_keys=True) + "\n", encoding="utf-8")
        self.files.append(name)

    @property
    def d(self) -> int:
        return self.cfg.get("d", 1)

    @property
    def beta(self) -> float:
        return float(self.cfg.get("beta", 1.0))

    def interaction(self, key: str) -> Interaction:
        return build_interaction(self.cfg[key], self.d)


def _thermo(phi: Interaction, vol: Volume, beta: float) -> tuple[ThermoPoint, float, LatticeOperator]:
    H = local_hamiltonian(phi, vol)
    rho = gibbs_from_hamiltonian(H, beta)
    w = H.eigh[0]
    n = vol.n
    point = ThermoPoint(
        L=vol.side or n,
        sites=n,
        pressure_per_site=log_partition(H, beta) / n,
        entropy_per_site=von_neumann_entropy(rho) / n,
        energy_per_site=float(rho.expect(H).real) / n,
    )
    return point, float(max(abs(w[0]), abs(w[-1]))), H


def _fit(points: Sequence[tuple[float, float]]) -> dict | None:
    if len(points) < 3:
        return None
    rep = extrapolate(points)
    return {"limit": rep.limit, "slope": rep.slope, "residual": rep.residual, "monotone": rep.monotone}


def _exp_thermo(ctx: RunContext, with_variational: bool):
    phi = ctx.interaction("phi")
    vols = [Volume.cube(L, ctx.d) for L in ctx.cfg["volumes"]]
    data = ctx.timed("thermo", ctx.map, lambda v: _thermo(phi, v, ctx.beta), vols)
    log_dim = math.log(phi.dim)
    points = [p for p, _, _ in data]
    ctx.write(
        "pressure.csv",
        THERMO_COLUMNS,
        [(p.L, p.sites, p.pressure_per_site, log_dim + abs(ctx.beta) * hn / p.sites) for p, hn, _ in data],
    )
    ctx.write("entropy.csv", THERMO_COLUMNS, [(p.L, p.sites, p.entropy_per_site, log_dim) for p in points])
    ctx.write("energy.csv", THERMO_COLUMNS, [(p.L, p.sites, p.energy_per_site, hn / p.sites) for p, hn, _ in data])
    ctx.results["pressure_per_site"] = [p.pressure_per_site for p in points]
    ctx.results["pressure_fit"] = _fit([(p.L, p.pressure_per_site) for p in points])
    if not with_variational:
        return
    samples = ctx.cfg.get("samples", 100)
    rng = np.random.default_rng(ctx.cfg.get("seed", 0))
    rows = []
    for (p, _, H), vol in zip(data, vols):
        gaps, mismatch = [], 0.0
        omega = gibbs_from_hamiltonian(H, ctx.beta)
        for _ in range(samples):
            rho = random_density_matrix(vol, phi.dim, rng)
            g = variational_gap(rho, phi, vol, ctx.beta, H=H)
            gaps.append(g)
            mismatch = max(mismatch, abs(g - relative_entropy(rho, omega)))
        rows.append((p.L, p.sites, min(gaps), mismatch))
    ctx.write("variational.csv", THERMO_COLUMNS, rows)
    ctx.results["min_variational_gap"] = min(r[2] for r in rows)
    ctx.results["max_gap_relative_entropy_mismatch"] = max(r[3] for r in rows)


def _exp_weakgibbs(ctx: RunContext):
    phi = ctx.interaction("phi")
    state = ctx.interaction("state") if "state" in ctx.cfg else phi
    ambient = Volume.cube(ctx.cfg["ambient"])
    wins = centered_windows(ambient, ctx.cfg["windows"])
    states = ctx.timed("window_states", window_states, state, ambient, wins, ctx.beta)
    cert = ctx.timed("certificate", weak_gibbs_certificate, phi, states, wins, ambient, ctx.beta)
    ctx.write("certificate.csv", THERMO_COLUMNS, certificate_rows(cert))
    ctx.write("certificate_detail.csv", CERTIFICATE_DETAIL_COLUMNS, certificate_detail_rows(cert))
    ctx.results["c_per_site"] = cert.c_per_site
    ctx.results["strictly_decreasing"] = cert.strictly_decreasing
    ctx.results["c_fit"] = _fit([(r.L, r.c_per_site) for r in cert.records])
    ctx.results["min_hiai_petz_margin"] = min(r.hiai_petz_margin for r in cert.records)


def _exp_equiv(ctx: RunContext):
    phi, psi = ctx.interaction("phi"), ctx.interaction("psi")
    tol = ctx.cfg.get("tol", 1e-12)
    res = ctx.timed("physically_equivalent", physically_equivalent, phi, psi, None, tol)
    ctx.results.update(verdict=res.verdict, witness=res.witness, witness_norm=res.witness_norm)
    vols = [Volume.cube(L, ctx.d) for L in ctx.cfg.get("volumes", [])]
    if vols:
        seq = ctx.timed("density_difference", hamiltonian_density_difference, phi, psi, vols)
        ctx.write("equiv.csv", THERMO_COLUMNS, [(v.side or n, n, val, tol) for v, (n, val) in zip(vols, seq)])
        ctx.results["density_difference"] = [val for _, val in seq]


def _exp_quench(ctx: RunContext, fermionic: bool):
    cfg = ctx.cfg
    exp = QuenchExperiment(
        psi=ctx.interaction("psi"),
        phi=ctx.interaction("phi"),
        L_amb=cfg["L_amb"],
        L_obs=cfg["L_obs"],
        beta=ctx.beta,
        times=tuple(float(t) for t in cfg.get("times", [])),
        horizons=tuple(float(T) for T in cfg["horizons"]),
        fermionic=fermionic,
    )
    rep = ctx.timed("run_quench", run_quench, exp)
    rows = [(0.0, k, v) for k, v in rep.initial.items()]
    for k, vals in rep.horizon_series.items():
        rows += [(T, k, v) for T, v in zip(exp.horizons, vals)]
    rows += [(math.inf, k, v) for k, v in rep.plus.items()]
    ctx.write("quench.csv", ("T", "observable", "value"), rows)
    if exp.times:
        trows = []
        for k, vals in rep.time_series.items():
            trows += [(t, k, v) for t, v in zip(exp.times, vals)]
        ctx.write("quench_times.csv", ("t", "observable", "value"), trows)
        audit = ctx.timed("conservation_audit", conservation_audit, exp)
        arows = []
        for a in audit:
            arows += [
                (a.t, "energy_drift", a.energy_drift),
                (a.t, "entropy_drift", a.entropy_drift),
                (a.t, "window_E_phi_drift", a.window_energy_drift),
                (a.t, "window_entropy_drift", a.window_entropy_drift),
                (a.t, "boundary_budget", a.boundary_budget),
            ]
        ctx.write("audit.csv", ("t", "observable", "value"), arows)
    if fermionic and exp.times:
        fint = FermionInteraction.from_config(cfg["phi"]) if cfg["phi"].get("type") == "fermion" else None
        if fint is not None:
            from .thermodynamics import gibbs_state

            rho0 = gibbs_state(exp.psi, exp.ambient, exp.beta)
            na = ctx.timed("number_audit", number_conservation_audit, fint, exp.ambient, rho0, exp.times)
            ctx.write("number_audit.csv", ("t", "observable", "value"), [(t, "N_drift", dd) for t, _, dd in na.rows()])
            ctx.results["number_commutator_norm"] = na.commutator_norm
            ctx.results["max_number_drift"] = na.max_drift
    summary = {"observables": {}, "delta_E_psi": list(rep.delta("E_psi"))}
    for k, vals in rep.horizon_series.items():
        entry = {"initial": rep.initial[k], "plus": rep.plus[k], "values": list(vals)}
        entry["fit_in_inverse_T"] = _fit(list(zip(exp.horizons, vals)))
        summary["observables"][k] = entry
    summary["sign_verdict"] = "increase" if all(x > 0 for x in rep.delta("E_psi")) else "no strict increase"
    ctx.write_json("summary.json", summary)
    ctx.results["delta_E_psi"] = list(rep.delta("E_psi"))
    ctx.results["sign_verdict"] = summary["sign_verdict"]


def _exp_bounds(ctx: RunContext):
    phi = ctx.interaction("phi")
    L = ctx.cfg.get("L", 6)
    vol = Volume.cube(L)
    H = local_hamiltonian(phi, vol)
    rng = np.random.default_rng(ctx.cfg.get("seed", 0))
    rows = []
    for k in range(ctx.cfg.get("samples", 10)):
        V = random_local_perturbation(vol, rng, phi.dim)
        b = ctx.timed("sandwich_bounds", sandwich_bounds, H, V)
        rows.append((k, b.C, b.D, b.upper_margin, b.lower_margin))
    ctx.write("bounds.csv", ("sample", "C", "D", "upper_margin", "lower_margin"), rows)
    ctx.results["min_psd_margin"] = min(min(r[3], r[4]) for r in rows)
    small = Volume.cube(min(L, 4))
    Hs = local_hamiltonian(phi, small)
    Vs = random_local_perturbation(small, rng, phi.dim)
    vn = float(np.linalg.norm(Vs.matrix, 2))
    erows = []
    for z in sample_z(rng, vn, ctx.cfg.get("samples", 10)):
        e = ctx.timed("expansional", expansional, Hs, Vs, z)
        c = expansional_closed_form(Hs, Vs, z)
        erows.append((z.real, z.imag, float(np.linalg.norm(e.matrix - c.matrix, 2))))
    ctx.write("expansional.csv", ("z_re", "z_im", "error"), erows)
    ctx.results["max_expansional_error"] = max(r[2] for r in erows)


def random_local_perturbation(vol: Volume, rng, dim: int = 2, max_sites: int = 2, amplitude=(0.2, 1.0)) -> LatticeOperator:
    """Random Hermitian operator on 1-2 adjacent sites, rescaled to a random norm."""
    k = int(rng.integers(1, max_sites + 1))
    start = int(rng.integers(0, vol.n - k + 1))
    sites = vol.sites[start : start + k]
    m = random_hermitian(dim**k, rng)
    m *= rng.uniform(*amplitude) / np.linalg.norm(m, 2)
    return embed(LatticeOperator(Volume(sites), m, dim, True), vol)


def sample_z(rng, v_norm: float, count: int, max_product: float = 5.0, max_imag: float = 0.5) -> list[complex]:
    """Points with ``||V|| |z| <= max_product`` and ``|Im z| <= max_imag``."""
    out = []
    while len(out) < count:
        r = rng.uniform(0, max_product / v_norm)
        theta = rng.uniform(0, 2 * np.pi)
        z = complex(r * np.cos(theta), r * np.sin(theta))
        if abs(z.imag) <= max_imag:
            out.append(z)
    return out


_DISPATCH = {
    "pressure": lambda c: _exp_thermo(c, False),
    "gibbs": lambda c: _exp_thermo(c, True),
    "weakgibbs": _exp_weakgibbs,
    "equiv": _exp_equiv,
    "quench": lambda c: _exp_quench(c, False),
    "fermion-quench": lambda c: _exp_quench(c, True),
    "bounds": _exp_bounds,
}


def run_experiment(cfg: dict, out: Path | str, threads: int = 1) -> Path:
    """Execute a validated config, write CSVs and ``manifest.json`` into ``out``; return the manifest path."""
    out = Path(out)
    out.mkdir(parents=True, exist_ok=True)
    check_resources(cfg)
    ctx = RunContext(cfg, out, threads)
    started = datetime.now(timezone.utc).isoformat()
    _DISPATCH[cfg["experiment"]](ctx)
    manifest = {
        "experiment": cfg["experiment"],
        "config": cfg,
        "config_hash": config_hash(cfg),
        "version": __version__,
        "started": started,
        "finished": datetime.now(timezone.utc).isoformat(),
        "timings": ctx.timings,
        "outputs": ctx.files,
        "results": ctx.results,
    }
    path = out / "manifest.json"
    path.write_text(json.dumps(manifest, indent=2, sort_keys=True, default=_json_default) + "\n", encoding="utf-8")
    return path


def _json_default(obj):
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    if isinstance(obj, np.bool_):
        return bool(obj)
    raise TypeError(f"cannot serialise {type(obj).__name__}")


# ---------------------------------------------------------------- report


def _table(header: Sequence[str], rows: Sequence[Sequence[str]]) -> str:
    widths = [max(len(h), *(len(r[i]) for r in rows)) if rows else len(h) for i, h in enumerate(header)]
    lines = ["  ".join(h.rjust(w) for h, w in zip(header, widths))]
    lines += ["  ".join(c.rjust(w) for c, w in zip(r, widths)) for r in rows]
    return "\n".join(lines)


def _short(x: str) -> str:
    try:
        return f"{float(x):.6g}"
    except ValueError:
        return x


def report(manifest_path: Path | str) -> str:
    """Plain-text summary of a finished run: tables, fitted limits and trend verdicts."""
    manifest_path = Path(manifest_path)
    if manifest_path.is_dir():
        manifest_path = manifest_path / "manifest.json"
    if not manifest_path.exists():
        raise ManifestMissing(f"{manifest_path} does not exist")
    manifest = json.loads(manifest_path.read_text(encoding="utf-8"))
    base = manifest_path.parent
    missing = [f for f in manifest["outputs"] if not (base / f).exists()]
    if missing:
        raise ManifestMissing(f"outputs missing: {', '.join(missing)}")
    kind = manifest["experiment"]
    res = manifest.get("results", {})
    out = [f"experiment: {kind}", f"config hash: {manifest['config_hash']}", f"version: {manifest['version']}", ""]
    for name in manifest["outputs"]:
        if not name.endswith(".csv"):
            continue
        header, rows = read_csv(base / name)
        out += [f"[{name}]", _table(header, [[_short(c) for c in r] for r in rows]), ""]
    if kind in ("pressure", "gibbs"):
        fit = res.get("pressure_fit")
        if fit:
            out.append(f"fitted pressure P = {fit['limit']:.10g} (slope {fit['slope']:.4g}, rms residual {fit['residual']:.2e})")
        else:
            out.append("fitted pressure: fewer than 3 volumes, no extrapolation")
        if "min_variational_gap" in res:
            out.append(f"min variational gap over random states: {res['min_variational_gap']:.3e}")
    elif kind == "weakgibbs":
        verdict = "decreasing" if res["strictly_decreasing"] else "not decreasing"
        out.append(f"c_L/|L| trend: {verdict}")
        if res.get("c_fit"):
            out.append(f"extrapolated c per site: {res['c_fit']['limit']:.6g}")
        out.append(f"min Hiai-Petz margin: {res['min_hiai_petz_margin']:.6g}")
    elif kind == "equiv":
        out.append(f"verdict: {res['verdict']}" + (f" (witness {res['witness']}, norm {res['witness_norm']:.3g})" if res.get("witness") else ""))
    elif kind in ("quench", "fermion-quench"):
        horizons = manifest["config"]["horizons"]
        out.append(_table(["T", "dE_psi"], [[_short(str(T)), f"{d:.6g}"] for T, d in zip(horizons, res["delta_E_psi"])]))
        out.append(f"sign verdict: {res['sign_verdict']}")
        if "max_number_drift" in res:
            out.append(f"max particle-number drift: {res['max_number_drift']:.3e}")
    elif kind == "bounds":
        out.append(f"min PSD margin: {res['min_psd_margin']:.3e}")
        out.append(f"max expansional error: {res['max_expansional_error']:.3e}")
    return "\n".join(out).rstrip() + "\n"
