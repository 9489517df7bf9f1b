"""Per-channel update kernels: upwind advection, explicit diffusion, and
closed-form reaction substeps.

The kernels are compiled with numba when it is available; setting the
environment variable ``FLUIDIC_PURE_NUMPY=1`` (or a failed numba import)
selects the vectorized pure-numpy implementations instead. Both backends
implement identical arithmetic and are parity-tested against each other;
``benchmarks/bench_kernels.py`` compares their speed.

Kernel state is a C-contiguous float64 array ``conc[species, cell]``. The
``audit`` array has one row per species with columns
``[influx, outflux, reaction_delta, clamped_mass, min_before_clamp]``, all in
summed-concentration units (multiply by cell volume for moles).

Boundary conditions: the inlet value enters through the upwind advective flux
only, which keeps channel-to-channel coupling exactly conservative; the outlet
is zero-diffusive-gradient outflow.
"""

from __future__ import annotations

import math
import os

import numpy as np

__all__ = [
    "HAS_NUMBA",
    "active_backend",
    "use_backend",
    "get_kernels",
    "AUDIT_COLS",
]

AUDIT_COLS = 5  # influx, outflux, reaction delta, clamped mass, min pre-clamp

KIND_ANNIHILATION = 0
KIND_CATALYTIC = 1


# --------------------------------------------------------------------------
# pure-numpy backend
# --------------------------------------------------------------------------

def _transport_channel_np(conc, inlet, u, deff, dx, dt, audit):
    ns, nc = conc.shape
    r = dt / dx
    g = deff[:, None] / dx
    flux = np.empty((ns, nc))
    # flux[s, i] is the flux through the right face of cell i (u >= 0 upwind)
    flux[:, :-1] = u * conc[:, :-1] - g * (conc[:, 1:] - conc[:, :-1])
    flux[:, -1] = u * conc[:, -1]
    fin = u * inlet
    new = np.empty_like(conc)
    new[:, 0] = conc[:, 0] + r * (fin - flux[:, 0])
    if nc > 1:
        new[:, 1:] = conc[:, 1:] + r * (flux[:, :-1] - flux[:, 1:])
    audit[:, 0] += r * fin
    audit[:, 1] += r * flux[:, -1]
    np.minimum(audit[:, 4], new.min(axis=1), out=audit[:, 4])
    neg = new < 0.0
    if neg.any():
        audit[:, 3] += np.where(neg, -new, 0.0).sum(axis=1)
        np.maximum(new, 0.0, out=new)
    conc[:] = new


def _react_channel_np(conc, kinds, ia, ib, ip, ks, dt, audit):
    for m in range(kinds.shape[0]):
        k = ks[m]
        A, B, P = ia[m], ib[m], ip[m]
        a = conc[A]
        b = conc[B]
        if kinds[m] == KIND_ANNIHILATION:
            lo = np.minimum(a, b)
            hi = np.maximum(a, b)
            d = hi - lo
            em = -np.expm1(-k * dt * d)
            den = d + lo * em
            with np.errstate(invalid="ignore", divide="ignore"):
                x = np.where(den > 0.0, hi * lo * em / np.where(den > 0.0, den, 1.0), 0.0)
            equal = d == 0.0
            if equal.any():
                kdt = k * dt
                x = np.where(equal, lo * lo * kdt / (1.0 + lo * kdt), x)
            np.minimum(x, lo, out=x)
            conc[A] = a - x
            conc[B] = b - x
            sx = x.sum()
            audit[A, 2] -= sx
            audit[B, 2] -= sx
            if P >= 0:
                conc[P] += x
                audit[P, 2] += sx
        else:
            amp2 = b * np.exp(-k * dt * a)
            gain = b - amp2
            conc[B] = amp2
            sg = gain.sum()
            audit[B, 2] -= sg
            if P >= 0:
                conc[P] += gain
                audit[P, 2] += sg


_NUMPY_BACKEND = ("numpy", _transport_channel_np, _react_channel_np)


# --------------------------------------------------------------------------
# numba backend
# --------------------------------------------------------------------------

try:  # pragma: no cover - environment dependent
    from numba import njit

    HAS_NUMBA = True
except ImportError:  # pragma: no cover
    njit = None
    HAS_NUMBA = False

if HAS_NUMBA:

    @njit(cache=True, nogil=True)
    def _transport_channel_nb(conc, inlet, u, deff, dx, dt, audit):
        ns, nc = conc.shape
        r = dt / dx
        for s in range(ns):
            g = deff[s] / dx
            fin = u * inlet[s]
            fl = fin
            for i in range(nc):
                ci = conc[s, i]
                if i + 1 < nc:
                    fr = u * ci - g * (conc[s, i + 1] - ci)
                else:
                    fr = u * ci
                # in-place is safe: the right-face flux reads only old values
                # of cells i and i+1, and cell i+1 is still untouched here
                conc[s, i] = ci + r * (fl - fr)
                fl = fr
            audit[s, 0] += r * fin
            audit[s, 1] += r * fl
            mn = audit[s, 4]
            clamped = 0.0
            for i in range(nc):
                v = conc[s, i]
                if v < mn:
                    mn = v
                if v < 0.0:
                    clamped -= v
                    conc[s, i] = 0.0
            audit[s, 4] = mn
            audit[s, 3] += clamped

    @njit(cache=True, nogil=True)
    def _react_channel_nb(conc, kinds, ia, ib, ip, ks, dt, audit):
        nr = kinds.shape[0]
        nc = conc.shape[1]
        for m in range(nr):
            k = ks[m]
            A = ia[m]
            B = ib[m]
            P = ip[m]
            if kinds[m] == 0:
                for i in range(nc):
                    a = conc[A, i]
                    b = conc[B, i]
                    lo = a if a < b else b
                    if lo <= 0.0:
                        continue
                    hi = a if a >= b else b
                    kdt = k * dt
                    if kdt <= 0.0:
                        continue
                    d = hi - lo
                    if d > 0.0:
                        em = -math.expm1(-kdt * d)
                        x = hi * lo * em / (d + lo * em)
                    else:
                        x = lo * lo * kdt / (1.0 + lo * kdt)
                    if x > lo:
                        x = lo
                    conc[A, i] = a - x
                    conc[B, i] = b - x
                    audit[A, 2] -= x
                    audit[B, 2] -= x
                    if P >= 0:
                        conc[P, i] += x
                        audit[P, 2] += x
            else:
                for i in range(nc):
                    cat = conc[A, i]
                    amp = conc[B, i]
                    if amp <= 0.0:
                        continue
                    amp2 = amp * math.exp(-k * dt * cat)
                    gain = amp - amp2
                    conc[B, i] = amp2
                    audit[B, 2] -= gain
                    if P >= 0:
                        conc[P, i] += gain
                        audit[P, 2] += gain

    _NUMBA_BACKEND = ("numba", _transport_channel_nb, _react_channel_nb)
else:
    _NUMBA_BACKEND = None


def _env_wants_numpy() -> bool:
    return os.environ.get("FLUIDIC_PURE_NUMPY", "").strip() not in ("", "0")


_active = _NUMPY_BACKEND if (_env_wants_numpy() or not HAS_NUMBA) else _NUMBA_BACKEND


def active_backend() -> str:
    """Name of the backend currently in use ('numba' or 'numpy')."""
    return _active[0]


def use_backend(name: str) -> str:
    """Select a backend by name; returns the previously active name."""
    global _active
    previous = _active[0]
    if name == "numpy":
        _active = _NUMPY_BACKEND
    elif name == "numba":
        if _NUMBA_BACKEND is None:
            raise RuntimeError("numba is not available in this environment")
        _active = _NUMBA_BACKEND
    else:
        raise ValueError(f"unknown backend {name!r}")
    return previous


def get_kernels():
    """Return (transport_kernel, reaction_kernel) for the active backend."""
    return _active[1], _active[2]
