"""Hot loops: Maxwell-Bloch time stepping and pair-delay histogramming.

Each kernel has a numba implementation and a pure-numpy twin with the same
signature. ``QSLP_DISABLE_NUMBA=1`` in the environment (or numba missing)
selects the numpy path; callers may also pass ``backend=`` explicitly.

Maxwell-Bloch variables are dimensionless here: time in 1/Gamma, z in units
of the medium length, rates divided by Gamma, fields E/Gamma. Row order of
the atomic state ``y`` is rho_eg+, rho_eg-, rho_sg+-, rho_sg-+, rho_sg0.
"""

from __future__ import annotations

import os

import numpy as np

try:
    import numba
except ImportError:  # pragma: no cover
    numba = None

VARIABLES = ("rho_eg_plus", "rho_eg_minus", "rho_sg_pm", "rho_sg_mp", "rho_sg_0")

NUMBA_AVAILABLE = numba is not None
NUMBA_ENABLED = NUMBA_AVAILABLE and os.environ.get("QSLP_DISABLE_NUMBA", "0") in ("", "0")


def resolve_backend(backend=None) -> str:
    if backend is None:
        return "numba" if NUMBA_ENABLED else "numpy"
    if backend not in ("numba", "numpy"):
        raise ValueError(f"unknown backend {backend!r}")
    if backend == "numba" and not NUMBA_AVAILABLE:
        raise RuntimeError("numba backend requested but numba is not installed")
    return backend


def _njit(fn):
    if numba is None:
        return fn
    return numba.njit(cache=True, nogil=True)(fn)


# --------------------------------------------------------------------------
# Maxwell-Bloch: numba path
# --------------------------------------------------------------------------


@_njit
def _fields_nb(y, e_in, kappa, dz, ph, ep, em):
    n = y.shape[1]
    c = 0.5j * kappa * dz
    ep[0] = e_in
    for j in range(1, n):
        ep[j] = ep[j - 1] + c * (y[0, j - 1] + y[0, j])
    em[n - 1] = 0.0
    for j in range(n - 2, -1, -1):
        em[j] = ph * em[j + 1] + c * (y[1, j] + ph * y[1, j + 1])


@_njit
def _derivs_nb(y, e_in, wf, wb, kappa, dz, ph, g0, g1, d, out, ep, em):
    _fields_nb(y, e_in, kappa, dz, ph, ep, em)
    n = y.shape[1]
    a1 = 0.5 - 1j * d
    a2 = g1 - 1j * d
    a3 = g1 + 1j * d
    for j in range(n):
        rp = y[0, j]
        rm = y[1, j]
        pm = y[2, j]
        mp = y[3, j]
        r0 = y[4, j]
        out[0, j] = 0.5j * ep[j] + 0.5j * (r0 * wf + mp * wb) - 0.5 * rp
        out[1, j] = 0.5j * em[j] + 0.5j * (r0 * wb + pm * wf) - a1 * rm
        out[2, j] = 0.5j * wf * rm - a2 * pm
        out[3, j] = 0.5j * wb * rp - a3 * mp
        out[4, j] = 0.5j * (wf * rp + wb * rm) - g0 * r0


@_njit
def _record_nb(y, e_in, kappa, dz, ph, ep, em, rec, k):
    _fields_nb(y, e_in, kappa, dz, ph, ep, em)
    n = y.shape[1]
    phot = 0.0
    spin = 0.0
    high = 0.0
    for j in range(n):
        phot += ep[j].real ** 2 + ep[j].imag ** 2 + em[j].real ** 2 + em[j].imag ** 2
        spin += y[4, j].real ** 2 + y[4, j].imag ** 2
        high += (
            y[2, j].real ** 2 + y[2, j].imag ** 2 + y[3, j].real ** 2 + y[3, j].imag ** 2
        )
    rec[k, 0] = ep[n - 1]
    rec[k, 1] = em[0]
    rec[k, 2] = phot * dz
    rec[k, 3] = spin * dz
    rec[k, 4] = high * dz


@_njit
def _integrate_nb(y, e_in, qf, qb, params, n_steps, rec_every, rec, fail):
    kappa = params[0]
    dz = params[1]
    ph = params[2] + 1j * params[3]
    wf0 = params[4]
    wb0 = params[5]
    g0 = params[6]
    g1 = params[7]
    d = params[8]
    h = params[9]
    nv, n = y.shape
    ep = np.empty(n, np.complex128)
    em = np.empty(n, np.complex128)
    k1 = np.empty_like(y)
    k2 = np.empty_like(y)
    k3 = np.empty_like(y)
    k4 = np.empty_like(y)
    tmp = np.empty_like(y)
    ynew = np.empty_like(y)
    _record_nb(y, e_in[0], kappa, dz, ph, ep, em, rec, 0)
    for s in range(n_steps):
        i0 = 2 * s
        _derivs_nb(y, e_in[i0], wf0 * qf[i0], wb0 * qb[i0], kappa, dz, ph, g0, g1, d, k1, ep, em)
        for v in range(nv):
            for j in range(n):
                tmp[v, j] = y[v, j] + 0.5 * h * k1[v, j]
        _derivs_nb(tmp, e_in[i0 + 1], wf0 * qf[i0 + 1], wb0 * qb[i0 + 1], kappa, dz, ph, g0, g1, d, k2, ep, em)
        for v in range(nv):
            for j in range(n):
                tmp[v, j] = y[v, j] + 0.5 * h * k2[v, j]
        _derivs_nb(tmp, e_in[i0 + 1], wf0 * qf[i0 + 1], wb0 * qb[i0 + 1], kappa, dz, ph, g0, g1, d, k3, ep, em)
        for v in range(nv):
            for j in range(n):
                tmp[v, j] = y[v, j] + h * k3[v, j]
        _derivs_nb(tmp, e_in[i0 + 2], wf0 * qf[i0 + 2], wb0 * qb[i0 + 2], kappa, dz, ph, g0, g1, d, k4, ep, em)
        for v in range(nv):
            for j in range(n):
                val = y[v, j] + (h / 6.0) * (
                    k1[v, j] + 2.0 * k2[v, j] + 2.0 * k3[v, j] + k4[v, j]
                )
                if not (np.isfinite(val.real) and np.isfinite(val.imag)):
                    fail[0] = s
                    fail[1] = v
                    fail[2] = j
                    return s
                ynew[v, j] = val
        y[:, :] = ynew
        if (s + 1) % rec_every == 0:
            _record_nb(y, e_in[i0 + 2], kappa, dz, ph, ep, em, rec, (s + 1) // rec_every)
    return n_steps


# --------------------------------------------------------------------------
# Maxwell-Bloch: numpy path
# --------------------------------------------------------------------------


def _fields_np(y, e_in, kappa, dz, ph):
    n = y.shape[1]
    c = 0.5j * kappa * dz
    ep = np.empty(n, np.complex128)
    ep[0] = e_in
    ep[1:] = e_in + np.cumsum(c * (y[0, :-1] + y[0, 1:]))
    # backward sweep in the rotating frame G_j = E_j ph^j, so G_j = G_{j+1} + src_j
    phj = ph ** np.arange(n)
    src = c * (y[1, :-1] + ph * y[1, 1:]) * phj[:-1]
    g = np.zeros(n, np.complex128)
    g[:-1] = np.cumsum(src[::-1])[::-1]
    em = g / phj
    return ep, em


def _derivs_np(y, e_in, wf, wb, kappa, dz, ph, g0, g1, d):
    ep, em = _fields_np(y, e_in, kappa, dz, ph)
    rp, rm, pm, mp, r0 = y
    out = np.empty_like(y)
    out[0] = 0.5j * ep + 0.5j * (r0 * wf + mp * wb) - 0.5 * rp
    out[1] = 0.5j * em + 0.5j * (r0 * wb + pm * wf) - (0.5 - 1j * d) * rm
    out[2] = 0.5j * wf * rm - (g1 - 1j * d) * pm
    out[3] = 0.5j * wb * rp - (g1 + 1j * d) * mp
    out[4] = 0.5j * (wf * rp + wb * rm) - g0 * r0
    return out


def _record_np(y, e_in, kappa, dz, ph, rec, k):
    ep, em = _fields_np(y, e_in, kappa, dz, ph)
    rec[k, 0] = ep[-1]
    rec[k, 1] = em[0]
    rec[k, 2] = (np.sum(np.abs(ep) ** 2) + np.sum(np.abs(em) ** 2)) * dz
    rec[k, 3] = np.sum(np.abs(y[4]) ** 2) * dz
    rec[k, 4] = (np.sum(np.abs(y[2]) ** 2) + np.sum(np.abs(y[3]) ** 2)) * dz


def _integrate_np(y, e_in, qf, qb, params, n_steps, rec_every, rec, fail):
    kappa, dz, ph_re, ph_im, wf0, wb0, g0, g1, d, h = params
    ph = complex(ph_re, ph_im)
    common = (kappa, dz, ph, g0, g1, d)
    _record_np(y, e_in[0], kappa, dz, ph, rec, 0)
    for s in range(n_steps):
        i0 = 2 * s
        k1 = _derivs_np(y, e_in[i0], wf0 * qf[i0], wb0 * qb[i0], *common)
        k2 = _derivs_np(y + 0.5 * h * k1, e_in[i0 + 1], wf0 * qf[i0 + 1], wb0 * qb[i0 + 1], *common)
        k3 = _derivs_np(y + 0.5 * h * k2, e_in[i0 + 1], wf0 * qf[i0 + 1], wb0 * qb[i0 + 1], *common)
        k4 = _derivs_np(y + h * k3, e_in[i0 + 2], wf0 * qf[i0 + 2], wb0 * qb[i0 + 2], *common)
        ynew = y + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        bad = ~np.isfinite(ynew)
        if bad.any():
            v, j = np.argwhere(bad)[0]
            fail[:] = (s, v, j)
            return s
        y[:, :] = ynew
        if (s + 1) % rec_every == 0:
            _record_np(y, e_in[i0 + 2], kappa, dz, ph, rec, (s + 1) // rec_every)
    return n_steps


def integrate(y, e_in, qf, qb, params, n_steps, rec_every, rec, fail, backend=None):
    """Advance ``y`` in place by ``n_steps`` RK4 steps.

    ``e_in``, ``qf``, ``qb`` are sampled at half-step resolution (length
    ``2 * n_steps + 1``). The fields are re-solved along z at every stage.
    Returns the number of completed steps; on a non-finite value ``fail``
    holds (step, variable row, z index) and ``y`` the last finite state.
    """
    fn = _integrate_nb if resolve_backend(backend) == "numba" else _integrate_np
    return fn(y, e_in, qf, qb, params, n_steps, rec_every, rec, fail)


def solve_fields(y, e_in, kappa, dz, ph, backend=None):
    if resolve_backend(backend) == "numba":
        n = y.shape[1]
        ep = np.empty(n, np.complex128)
        em = np.empty(n, np.complex128)
        _fields_nb(y, complex(e_in), kappa, dz, complex(ph), ep, em)
        return ep, em
    return _fields_np(y, e_in, kappa, dz, ph)


# --------------------------------------------------------------------------
# Pair-delay histogramming
# --------------------------------------------------------------------------


@_njit
def _pair_hist_nb(heralds, signals, bin_width, nbins, blocks, nblocks):
    out = np.zeros((nblocks, nbins), np.int64)
    span = nbins * bin_width
    lo = 0
    ns = signals.shape[0]
    for i in range(heralds.shape[0]):
        h = heralds[i]
        while lo < ns and signals[lo] < h:
            lo += 1
        j = lo
        while j < ns:
            dt = signals[j] - h
            if dt >= span:
                break
            b = int(dt / bin_width)
            if b < nbins:
                out[blocks[i], b] += 1
            j += 1
    return out


def _pair_hist_np(heralds, signals, bin_width, nbins, blocks, nblocks):
    span = nbins * bin_width
    lo = np.searchsorted(signals, heralds, side="left")
    hi = np.searchsorted(signals, heralds + span, side="left")
    n = hi - lo
    idx_h = np.repeat(np.arange(heralds.size), n)
    offs = np.arange(idx_h.size) - np.repeat(np.cumsum(n) - n, n)
    dt = signals[lo[idx_h] + offs] - heralds[idx_h]
    b = (dt / bin_width).astype(np.int64)
    keep = (dt >= 0) & (b < nbins)
    flat = blocks[idx_h[keep]] * nbins + b[keep]
    return np.bincount(flat, minlength=nblocks * nbins).reshape(nblocks, nbins)


def pair_histogram(heralds, signals, bin_width, nbins, blocks=None, nblocks=1, backend=None):
    """Counts of (herald, signal) pairs by delay bin, split by herald block.

    Both time arrays must be sorted. Returns an ``(nblocks, nbins)`` int array.
    """
    heralds = np.ascontiguousarray(heralds, dtype=np.float64)
    signals = np.ascontiguousarray(signals, dtype=np.float64)
    if blocks is None:
        blocks = np.zeros(heralds.size, np.int64)
    blocks = np.ascontiguousarray(blocks, dtype=np.int64)
    fn = _pair_hist_nb if resolve_backend(backend) == "numba" else _pair_hist_np
    return fn(heralds, signals, float(bin_width), int(nbins), blocks, int(nblocks))
