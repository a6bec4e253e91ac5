"""Compact approximate Taylor interface fluxes and the global Taylor variant.

The order-2p compact flux at one interface is built from the 2p surrounding
states by a recursion that alternates offset-evaluation space derivatives,
Taylor predictions of the flux at neighbouring time levels, and time
differentiation, so no symbolic replacement of time derivatives is needed.
All heavy paths are batched over interfaces.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from math import factorial, ceil

import numpy as np

from .diffops import centered_coeffs, interface_kernel, interpolatory_coeffs
from .errors import FluxFailure
from .models import FluxModel


@lru_cache(maxsize=None)
def _cat_tables(p: int):
    """Coefficient tables used by the order-2p flux recursion.

    space_d1[j, r]: first-derivative weights evaluated at stencil offset j.
    time_d[k-1][r]: k-th derivative weights at the current time level.
    kernel[j]:      conservative interface kernel; its one-cell difference
                    telescopes to the centered first-derivative formula, which
                    is what makes the assembled update match the classical
                    high-order one-step scheme on linear problems.
    """
    offs = range(-p + 1, p + 1)
    space_d1 = np.array([interpolatory_coeffs(p, 1, Fraction(j)).coeffs for j in offs])
    time_d = [interpolatory_coeffs(p, k, Fraction(0)).coeffs for k in range(1, 2 * p)]
    kernel = interface_kernel(p, 0).coeffs
    return space_d1, time_d, kernel


@dataclass
class TaylorScratch:
    """Reusable per-batch workspace for the flux recursion.

    Buffers grow on demand and are fully overwritten on every use, so results
    are identical whether a scratch is reused or freshly allocated.
    """

    _arrays: dict = field(default_factory=dict)

    def get(self, key: str, shape: tuple) -> np.ndarray:
        buf = self._arrays.get(key)
        if buf is None or buf.shape[1:] != shape[1:] or buf.shape[0] < shape[0]:
            buf = np.empty(shape)
            self._arrays[key] = buf
        return buf[: shape[0]]


def _taylor_matrix(p: int, dt: float) -> np.ndarray:
    """C[r_idx, l-1] = (r*dt)**l / l! for time offsets r = -p+1..p, l = 1..2p-1."""
    r = np.arange(-p + 1, p + 1, dtype=float) * dt
    ls = np.arange(1, 2 * p)
    return r[:, None] ** ls[None, :] / np.array([factorial(l) for l in ls])


def cat_flux_batch(p: int, stencils: np.ndarray, model: FluxModel, dx: float,
                   dt: float, scratch: TaylorScratch | None = None):
    """Order-2p interface fluxes for a batch of stencils.

    Parameters
    ----------
    stencils : (N, 2p, m) array
        States at the 2p cells around each interface.

    Returns
    -------
    F : (N, m) array of numerical fluxes.
    ok : (N,) bool array, False where the recursion hit a non-finite value or
        an inadmissible Taylor-predicted state (those rows of F are invalid).
    fail_level : (N,) int array, recursion level k of the first failure (0 if ok).
    """
    S = np.asarray(stencils, dtype=float)
    n, width, m = S.shape
    if width != 2 * p or m != model.m:
        raise ValueError(f"stencil batch shape {S.shape} incompatible with p={p}, m={model.m}")
    space_d1, time_d, kernel = _cat_tables(p)
    C = _taylor_matrix(p, dt)
    if scratch is None:
        scratch = TaylorScratch()

    ok = np.ones(n, dtype=bool)
    fail_level = np.zeros(n, dtype=np.int64)

    f_cur = model.flux_x(S)  # time-derivative level 0 of the flux
    F = np.einsum("j,njm->nm", kernel, f_cur)

    utab = scratch.get("utab", (2 * p - 1, n, 2 * p, m))
    fk = scratch.get("fk", (n, 2 * p, m))
    for k in range(2, 2 * p + 1):
        lvl = k - 1
        utab[lvl - 1] = np.einsum("jr,nrm->njm", space_d1, f_cur) / (-dx)
        fk[:] = 0.0
        for ridx in range(2 * p):
            pred = S + np.tensordot(C[ridx, :lvl], utab[:lvl], axes=1)
            if model.has_admissibility:
                bad = ~model.admissible(pred).all(axis=1)
                if bad.any():
                    fail_level[bad & ok] = k
                    ok &= ~bad
                    pred[bad] = S[bad]
            fk += time_d[lvl - 1][ridx] * model.flux_x(pred)
        bad = ~np.isfinite(fk).all(axis=(1, 2))
        if bad.any():
            fail_level[bad & ok] = k
            ok &= ~bad
            fk[bad] = f_cur[bad] * dt**lvl  # keep later levels finite; rows discarded
        f_cur = fk / dt**lvl
        F += dt**lvl / factorial(k) * np.einsum("j,njm->nm", kernel, f_cur)

    bad = ~np.isfinite(F).all(axis=1)
    if bad.any():
        fail_level[bad & ok] = 2 * p
        ok &= ~bad
    return F, ok, fail_level


def cat_flux(p: int, stencil, model: FluxModel, dx: float, dt: float,
             scratch: TaylorScratch | None = None):
    """Order-2p flux at a single interface from the 2p surrounding states.

    Raises FluxFailure if a Taylor-predicted state is inadmissible or an
    intermediate turns non-finite (the adaptive driver catches this and falls
    back to a safer flux). Scalar models may pass a flat (2p,) stencil and get
    a float back.
    """
    arr = np.asarray(stencil, dtype=float)
    scalar_in = arr.ndim == 1 and model.m == 1
    if scalar_in:
        arr = arr[:, None]
    F, ok, fail_level = cat_flux_batch(p, arr[None], model, dx, dt, scratch)
    if not ok[0]:
        raise FluxFailure(
            f"order-{2 * p} flux recursion failed at level {fail_level[0]}",
            interface=0, level=int(fail_level[0]),
        )
    return float(F[0, 0]) if scalar_in else F[0]


def _cat2_closed_batch(u_l: np.ndarray, u_r: np.ndarray, model: FluxModel,
                       dx: float, dt: float):
    """Two-point second-order flux in closed form, batched over interfaces.

    F = (f(u_l*) + f(u_r*) + f(u_l) + f(u_r)) / 4 with both starred states
    predicted by u - (dt/dx) * (f(u_r) - f(u_l)).
    """
    f_l = model.flux_x(u_l)
    f_r = model.flux_x(u_r)
    shift = (dt / dx) * (f_r - f_l)
    pred_l = u_l - shift
    pred_r = u_r - shift
    ok = np.ones(u_l.shape[0], dtype=bool)
    if model.has_admissibility:
        good = model.admissible(pred_l) & model.admissible(pred_r)
        if not good.all():
            ok &= good
            pred_l[~good] = u_l[~good]
            pred_r[~good] = u_r[~good]
    F = 0.25 * (model.flux_x(pred_l) + model.flux_x(pred_r) + f_l + f_r)
    ok &= np.isfinite(F).all(axis=1)
    return F, ok


def cat2_flux_closed_form(u_l, u_r, model: FluxModel, dx: float, dt: float):
    """Second-order compact flux from its explicit two-stage formula."""
    u_l = np.atleast_1d(np.asarray(u_l, dtype=float))
    u_r = np.atleast_1d(np.asarray(u_r, dtype=float))
    scalar_in = u_l.shape == (1,) and model.m == 1
    F, ok = _cat2_closed_batch(u_l[None], u_r[None], model, dx, dt)
    if not ok[0]:
        raise FluxFailure("second-order flux hit an inadmissible predicted state",
                          interface=0, level=2)
    return float(F[0, 0]) if scalar_in else F[0]


# ---------------------------------------------------------------------------
# Global (non-compact) approximate Taylor step
# ---------------------------------------------------------------------------


def _roll_apply(coeffs: np.ndarray, half: int, arr: np.ndarray) -> np.ndarray:
    """Apply centered weights along the last axis of (m, n) data via rolls."""
    out = np.zeros_like(arr)
    for j, c in zip(range(-half, half + 1), coeffs):
        if c != 0.0:
            out += c * np.roll(arr, -j, axis=-1)
    return out


def lat_step(states: np.ndarray, model: FluxModel, p: int, order: int,
             dx: float, dt: float, bc: str = "periodic") -> np.ndarray:
    """One global approximate Taylor step of accuracy min(order, 2p).

    ``states`` is the (m, n) interior row; ghost handling is internal (pad by
    the total stencil reach with the requested boundary mode). Space
    derivatives at recursion level k use half-width min(p, ceil((order+1-k)/2))
    and time differentiation uses half-width ceil((order-1)/2). The update is
    assembled in conservative flux form, which is algebraically identical to
    the direct Taylor update and conserves exactly.
    """
    u = np.asarray(states, dtype=float)
    if u.ndim != 2 or u.shape[0] != model.m:
        raise ValueError(f"expected (m, n) row with m={model.m}, got {u.shape}")
    if order < 1:
        raise ValueError("order must be >= 1")
    p_levels = [min(p, ceil((order + 1 - k) / 2)) for k in range(1, order + 1)]
    p_levels = [max(pk, 1) for pk in p_levels]
    p_time = max(ceil((order - 1) / 2), 1)
    pad = sum(p_levels) + max(p_levels)

    mode = "wrap" if bc == "periodic" else "edge"
    up = np.pad(u, ((0, 0), (pad, pad)), mode=mode)
    n_pad = up.shape[1]

    def flux_of(rows: np.ndarray) -> np.ndarray:
        f = model.flux_x(np.moveaxis(rows, 0, -1))
        return np.moveaxis(f, -1, 0)

    f_levels = [flux_of(up)]  # time-derivative levels of the flux, (m, n_pad)
    u_levels = []
    taylor_r = np.arange(-p_time, p_time + 1, dtype=float) * dt
    for k in range(1, order):
        d1 = centered_coeffs(p_levels[k - 1], 1)
        u_levels.append(-_roll_apply(d1.coeffs, p_levels[k - 1], f_levels[k - 1]) / dx)
        dk = centered_coeffs(p_time, k)
        fk = np.zeros((model.m, n_pad))
        for ridx, r_dt in enumerate(taylor_r):
            if dk.coeffs[ridx] == 0.0:
                continue
            pred = up.copy()
            for l, ul in enumerate(u_levels, start=1):
                pred += r_dt**l / factorial(l) * ul
            predT = np.moveaxis(pred, 0, -1)
            if model.has_admissibility and not model.admissible(predT).all():
                bad = tuple(np.argwhere(~model.admissible(predT))[0])
                raise FluxFailure(
                    f"global Taylor step predicted an inadmissible state at level {k + 1}",
                    interface=bad, level=k + 1,
                )
            fk += dk.coeffs[ridx] * flux_of(pred)
        f_levels.append(fk / dt**k)
        if not np.isfinite(f_levels[-1]).all():
            raise FluxFailure("global Taylor step produced non-finite values",
                              level=k + 1)

    # Interface flux at i+1/2 for all i. Each level's interface kernel
    # telescopes exactly to its centered first derivative, so this flux-form
    # update is algebraically identical to the direct Taylor update while
    # conserving exactly.
    F = np.zeros((model.m, n_pad))
    for k in range(1, order + 1):
        pk = p_levels[k - 1]
        kern = interface_kernel(pk, 0)
        term = np.zeros((model.m, n_pad))
        for j, c in zip(range(-pk + 1, pk + 1), kern.coeffs):
            term += c * np.roll(f_levels[k - 1], -j, axis=-1)
        F += dt ** (k - 1) / factorial(k) * term
    new = up + (dt / dx) * (np.roll(F, 1, axis=-1) - F)
    return new[:, pad:pad + u.shape[1]]
