"""Hot inner loops, each in two flavours.

The numba versions are used by default. Setting ``LATTICETHERM_DISABLE_NUMBA=1``
(or running without numba installed) selects the pure-numpy versions, which are
the reference the numba kernels are tested against.

Index convention for every kernel: a basis index of an ``n``-site register is
``sum_p digit_p * dim**(n - 1 - p)``, i.e. site position 0 is the leftmost
Kronecker factor.
"""

from __future__ import annotations

import numpy as np

from ._settings import numba_disabled

__all__ = [
    "BACKEND",
    "accumulate_local",
    "partial_trace_matrix",
    "dephasing_factors",
    "trapezoid_phase_average",
    "numpy_impl",
    "numba_impl",
]


def _offsets(positions: np.ndarray, dim: int, nsites: int) -> tuple[np.ndarray, np.ndarray]:
    k = positions.shape[0]
    strides = dim ** (nsites - 1 - positions.astype(np.int64))
    local = np.arange(dim**k, dtype=np.int64)
    local_strides = dim ** (k - 1 - np.arange(k, dtype=np.int64))
    digits = (local[:, None] // local_strides[None, :]) % dim
    return strides, digits @ strides


class numpy_impl:
    """Vectorised numpy kernels."""

    @staticmethod
    def accumulate_local(out, term, positions, dim, nsites, coef=1.0):
        positions = np.asarray(positions, dtype=np.int64)
        k = positions.shape[0]
        strides, off = _offsets(positions, dim, nsites)
        idx = np.arange(dim**nsites, dtype=np.int64)
        digits = (idx[:, None] // strides[None, :]) % dim
        a = digits @ (dim ** (k - 1 - np.arange(k, dtype=np.int64)))
        base = idx - digits @ strides
        cols = base[:, None] + off[None, :]
        out[idx[:, None], cols] += coef * term[a[:, None], np.arange(dim**k)[None, :]]

    @staticmethod
    def partial_trace_matrix(mat, keep, dim, nsites):
        keep = [int(p) for p in keep]
        rest = [p for p in range(nsites) if p not in keep]
        dk, dr = dim ** len(keep), dim ** len(rest)
        t = mat.reshape([dim] * (2 * nsites))
        perm = keep + rest + [nsites + p for p in keep] + [nsites + p for p in rest]
        t = t.transpose(perm).reshape(dk, dr, dk, dr)
        return np.einsum("ajbj->ab", t)

    @staticmethod
    def dephasing_factors(evals, T, tol):
        delta = evals[:, None] - evals[None, :]
        out = np.zeros(delta.shape, dtype=np.complex128)
        degenerate = np.abs(delta) <= tol
        if np.isinf(T):
            out[degenerate] = 1.0
            return out
        half = 0.5 * delta * T
        with np.errstate(invalid="ignore", divide="ignore"):
            sinc = np.where(degenerate, 1.0, np.sin(half) / np.where(degenerate, 1.0, half))
        out[:] = np.exp(-1j * half) * sinc
        out[degenerate] = 1.0
        return out

    @staticmethod
    def trapezoid_phase_average(evals, T, n):
        delta = evals[:, None] - evals[None, :]
        h = T / n
        step = np.exp(-1j * delta * h)
        phase = np.ones(delta.shape, dtype=np.complex128)
        acc = 0.5 * phase
        for _ in range(1, n):
            phase = phase * step
            acc += phase
        phase = phase * step
        acc += 0.5 * phase
        return acc * (h / T)


try:
    from numba import njit
except ImportError:  # pragma: no cover
    njit = None


if njit is not None:

    @njit(cache=True)
    def _nb_accumulate_local(out, term, positions, dim, nsites, coef):
        k = positions.shape[0]
        strides = np.empty(k, dtype=np.int64)
        for q in range(k):
            s = 1
            for _ in range(nsites - 1 - positions[q]):
                s *= dim
            strides[q] = s
        dl = 1
        for _ in range(k):
            dl *= dim
        off = np.zeros(dl, dtype=np.int64)
        for b in range(dl):
            rem = b
            for q in range(k - 1, -1, -1):
                off[b] += (rem % dim) * strides[q]
                rem //= dim
        D = out.shape[0]
        for i in range(D):
            a = 0
            base = i
            for q in range(k):
                digit = (i // strides[q]) % dim
                a = a * dim + digit
                base -= digit * strides[q]
            for b in range(dl):
                val = term[a, b]
                if val != 0:
                    out[i, base + off[b]] += coef * val

    @njit(cache=True)
    def _nb_partial_trace(mat, keep_off, rest_off):
        dk = keep_off.shape[0]
        dr = rest_off.shape[0]
        out = np.zeros((dk, dk), dtype=mat.dtype)
        for a in range(dk):
            for b in range(dk):
                s = 0.0 + 0.0j
                for r in range(dr):
                    s += mat[keep_off[a] + rest_off[r], keep_off[b] + rest_off[r]]
                out[a, b] = s
        return out

    @njit(cache=True)
    def _nb_dephasing(evals, T, tol):
        D = evals.shape[0]
        out = np.zeros((D, D), dtype=np.complex128)
        inf = np.isinf(T)
        for j in range(D):
            for k in range(D):
                delta = evals[j] - evals[k]
                if abs(delta) <= tol:
                    out[j, k] = 1.0
                elif not inf:
                    half = 0.5 * delta * T
                    out[j, k] = np.exp(-1j * half) * (np.sin(half) / half)
        return out

    @njit(cache=True)
    def _nb_trapezoid(evals, T, n):
        D = evals.shape[0]
        h = T / n
        out = np.empty((D, D), dtype=np.complex128)
        for j in range(D):
            for k in range(D):
                step = np.exp(-1j * (evals[j] - evals[k]) * h)
                phase = 1.0 + 0.0j
                acc = 0.5 + 0.0j
                for _ in range(1, n):
                    phase *= step
                    acc += phase
                phase *= step
                acc += 0.5 * phase
                out[j, k] = acc * (h / T)
        return out

    class numba_impl:
        """numba-compiled kernels with the numpy_impl signatures."""

        @staticmethod
        def accumulate_local(out, term, positions, dim, nsites, coef=1.0):
            positions = np.ascontiguousarray(positions, dtype=np.int64)
            term = np.ascontiguousarray(term, dtype=out.dtype)
            _nb_accumulate_local(out, term, positions, int(dim), int(nsites), out.dtype.type(coef))

        @staticmethod
        def partial_trace_matrix(mat, keep, dim, nsites):
            keep = np.asarray(keep, dtype=np.int64)
            rest = np.array([p for p in range(nsites) if p not in set(keep.tolist())], dtype=np.int64)
            _, keep_off = _offsets(keep, dim, nsites)
            _, rest_off = _offsets(rest, dim, nsites)
            out = _nb_partial_trace(np.ascontiguousarray(mat, dtype=np.complex128), keep_off, rest_off)
            return out

        @staticmethod
        def dephasing_factors(evals, T, tol):
            return _nb_dephasing(np.ascontiguousarray(evals, dtype=np.float64), float(T), float(tol))

        @staticmethod
        def trapezoid_phase_average(evals, T, n):
            return _nb_trapezoid(np.ascontiguousarray(evals, dtype=np.float64), float(T), int(n))

else:  # pragma: no cover
    numba_impl = None


_impl = numpy_impl if (numba_impl is None or numba_disabled()) else numba_impl
BACKEND = "numpy" if _impl is numpy_impl else "numba"

accumulate_local = _impl.accumulate_local
partial_trace_matrix = _impl.partial_trace_matrix
dephasing_factors = _impl.dephasing_factors
trapezoid_phase_average = _impl.trapezoid_phase_average
