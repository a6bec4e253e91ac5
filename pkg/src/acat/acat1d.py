"""1D time-marching driver: adaptive flux assembly, robust first-order fluxes,
CFL control, boundary conditions, and the conservative update."""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from . import catcore, smooth
from .errors import FluxFailure
from .models import FluxModel
from .smooth import IndicatorConfig, SmoothnessReport

_SCHEME_KINDS = ("first_order", "flcat2", "acat", "cat_fixed", "lat")
_LOW_ORDER_KINDS = ("rusanov", "lax_friedrichs", "hll")


@dataclass
class SchemeSpec:
    """Which flux family to run and its parameters.

    P is the maximal stencil half-width (the adaptive scheme reaches order 2P
    where the data is smooth). lat_order is the Taylor degree of the global
    variant and defaults to 2P.
    """

    kind: str = "acat"
    P: int = 3
    low_order: str = "rusanov"
    indicator: IndicatorConfig = field(default_factory=IndicatorConfig)
    lat_order: int | None = None

    def __post_init__(self):
        if self.kind not in _SCHEME_KINDS:
            raise ValueError(f"unknown scheme kind {self.kind!r}; use one of {_SCHEME_KINDS}")
        if self.low_order not in _LOW_ORDER_KINDS:
            raise ValueError(f"unknown low-order flux {self.low_order!r}")
        if self.P < 1:
            raise ValueError("P must be >= 1")
        if self.kind == "acat" and self.P < 2:
            raise ValueError("the adaptive scheme needs P >= 2; use kind='flcat2' for order 2")

    @property
    def order(self) -> int:
        if self.kind == "first_order":
            return 1
        if self.kind == "flcat2":
            return 2
        if self.kind == "lat":
            return self.lat_order or 2 * self.P
        return 2 * self.P

    def label(self) -> str:
        return {
            "first_order": f"LO-{self.low_order}",
            "flcat2": "ACAT2",
            "acat": f"ACAT{2 * self.P}",
            "cat_fixed": f"CAT{2 * self.P}",
            "lat": f"LAT{self.order}",
        }[self.kind]


@dataclass
class Grid1D:
    """Point values of the m-component state on a uniform mesh with ghosts."""

    m: int
    n: int
    dx: float
    x0: float
    halo: int
    bc: str
    u: np.ndarray
    t: float = 0.0

    @classmethod
    def create(cls, m: int, n: int, x0: float, x1: float, bc: str, halo: int) -> "Grid1D":
        if bc not in ("periodic", "outflow"):
            raise ValueError(f"unknown boundary condition {bc!r}")
        dx = (x1 - x0) / n
        return cls(m=m, n=n, dx=dx, x0=x0, halo=halo, bc=bc,
                   u=np.zeros((m, n + 2 * halo)))

    @property
    def interior(self) -> np.ndarray:
        return self.u[:, self.halo:self.halo + self.n]

    @property
    def x(self) -> np.ndarray:
        return self.x0 + (np.arange(self.n) + 0.5) * self.dx

    @property
    def x_interfaces(self) -> np.ndarray:
        return self.x0 + np.arange(self.n + 1) * self.dx

    def fill_ghosts(self) -> None:
        h, n = self.halo, self.n
        if self.bc == "periodic":
            self.u[:, :h] = self.u[:, n:n + h]
            self.u[:, h + n:] = self.u[:, h:2 * h]
        else:  # outflow: zeroth-order extrapolation
            self.u[:, :h] = self.u[:, h:h + 1]
            self.u[:, h + n:] = self.u[:, h + n - 1:h + n]


def _low_order_batch(kind: str, u_l: np.ndarray, u_r: np.ndarray,
                     model: FluxModel, dx: float, dt: float) -> np.ndarray:
    f_l = model.flux_x(u_l)
    f_r = model.flux_x(u_r)
    if kind == "rusanov":
        s = np.maximum(model.max_wave_speed_x(u_l), model.max_wave_speed_x(u_r))
        return 0.5 * (f_l + f_r) - 0.5 * s[..., None] * (u_r - u_l)
    if kind == "lax_friedrichs":
        return 0.5 * (f_l + f_r) - 0.5 * (dx / dt) * (u_r - u_l)
    # hll with two-sided characteristic speed estimates
    lo_l, hi_l = model.wave_speed_range_x(u_l)
    lo_r, hi_r = model.wave_speed_range_x(u_r)
    s_l = np.minimum(lo_l, lo_r)[..., None]
    s_r = np.maximum(hi_l, hi_r)[..., None]
    middle = (s_r * f_l - s_l * f_r + s_l * s_r * (u_r - u_l)) / (s_r - s_l)
    return np.where(s_l >= 0.0, f_l, np.where(s_r <= 0.0, f_r, middle))


def low_order_flux(kind: str, u_l, u_r, model: FluxModel, dx: float, dt: float):
    """Robust monotone first-order flux at one interface."""
    if kind not in _LOW_ORDER_KINDS:
        raise ValueError(f"unknown low-order flux {kind!r}")
    u_l = np.atleast_1d(np.asarray(u_l, dtype=float))
    u_r = np.atleast_1d(np.asarray(u_r, dtype=float))
    scalar_in = u_l.shape == (1,) and model.m == 1
    F = _low_order_batch(kind, u_l[None], u_r[None], model, dx, dt)
    return float(F[0, 0]) if scalar_in else F[0]


def _flcat2_batch(win4: np.ndarray, model: FluxModel, dx: float, dt: float,
                  cfg: IndicatorConfig, low_order: str):
    """Limiter-blended second-order flux on (N, 4, m) windows.

    Returns the fluxes and the count of interfaces demoted to the first-order
    flux because the second-order prediction was inadmissible.
    """
    n = win4.shape[0]
    psi1 = smooth._limiter_batch(
        win4.transpose(0, 2, 1).reshape(n * model.m, 4), cfg
    ).reshape(n, model.m).min(axis=1)
    f_lo = _low_order_batch(low_order, win4[:, 1], win4[:, 2], model, dx, dt)
    f_hi, ok = catcore._cat2_closed_batch(win4[:, 1].copy(), win4[:, 2].copy(),
                                          model, dx, dt)
    blend = np.where(ok, psi1, 0.0)[:, None]
    F = blend * np.where(ok[:, None], f_hi, 0.0) + (1.0 - blend) * f_lo
    return F, int((~ok & (psi1 > 0.0)).sum())


def flcat2_flux(window, model: FluxModel, dx: float, dt: float,
                cfg: IndicatorConfig | None = None, low_order: str = "rusanov"):
    """Flux-limited second-order flux from a 4-cell window around the interface."""
    cfg = cfg or IndicatorConfig()
    w = np.asarray(window, dtype=float)
    scalar_in = w.ndim == 1 and model.m == 1
    if scalar_in:
        w = w[:, None]
    if w.shape != (4, model.m):
        raise ValueError(f"expected (4, m) window, got {w.shape}")
    F, _ = _flcat2_batch(w[None], model, dx, dt, cfg, low_order)
    return float(F[0, 0]) if scalar_in else F[0]


def _acat_fluxes_batch(windows: np.ndarray, model: FluxModel, dx: float, dt: float,
                       scheme: SchemeSpec, scratch: catcore.TaylorScratch | None = None):
    """Adaptive fluxes for (N, 2P, m) windows.

    Returns (F, psi, selected, demoted) where selected is the indicator choice
    per interface and demoted counts interfaces whose chosen high-order flux
    failed and fell down the ladder (order 2p_s -> blended 2 -> first order).
    """
    P = scheme.P
    n = windows.shape[0]
    psi, selected = smooth.select_stencil_batch(
        P, windows.transpose(0, 2, 1), scheme.indicator
    )
    F = np.empty((n, model.m))
    use_fl = selected == 0
    demoted = 0
    for p in range(P, 1, -1):
        idx = np.flatnonzero(selected == p)
        if idx.size == 0:
            continue
        sub = windows[idx][:, P - p:P + p]
        Fp, ok, _ = catcore.cat_flux_batch(p, sub, model, dx, dt, scratch)
        F[idx[ok]] = Fp[ok]
        if not ok.all():
            use_fl[idx[~ok]] = True
            demoted += int((~ok).sum())
    if use_fl.any():
        idx = np.flatnonzero(use_fl)
        Ffl, dem2 = _flcat2_batch(windows[idx][:, P - 2:P + 2], model, dx, dt,
                                  scheme.indicator, scheme.low_order)
        F[idx] = Ffl
        demoted += dem2
    return F, psi, selected, demoted


def acat_flux(window, model: FluxModel, dx: float, dt: float,
              scheme: SchemeSpec | None = None):
    """Adaptive flux at one interface from its 2P-cell window.

    Returns the flux together with the smoothness report used to choose it.
    """
    scheme = scheme or SchemeSpec()
    w = np.asarray(window, dtype=float)
    scalar_in = w.ndim == 1 and model.m == 1
    if scalar_in:
        w = w[:, None]
    if w.shape != (2 * scheme.P, model.m):
        raise ValueError(f"expected (2P, m) = ({2 * scheme.P}, {model.m}) window, got {w.shape}")
    F, psi, selected, _ = _acat_fluxes_batch(w[None], model, dx, dt, scheme)
    report = SmoothnessReport(psi=psi[0], selected_p=int(selected[0]))
    return (float(F[0, 0]) if scalar_in else F[0]), report


@dataclass
class StepInfo:
    t: float
    dt: float
    state_min: np.ndarray
    state_max: np.ndarray
    selected_hist: dict
    demoted: int = 0
    psi: np.ndarray | None = None
    selected: np.ndarray | None = None


def _interface_windows(grid: Grid1D, width: int) -> np.ndarray:
    """(n+1, width, m) windows centered at every interface of the interior."""
    h = grid.halo
    start = h - width // 2
    sl = grid.u[:, start:start + grid.n + width]
    win = sliding_window_view(sl, width, axis=1)  # (m, n+1, width)
    return win.transpose(1, 2, 0)


def max_wave_speed(grid: Grid1D, model: FluxModel) -> float:
    return float(model.max_wave_speed_x(np.moveaxis(grid.interior, 0, -1)).max())


def step(grid: Grid1D, scheme: SchemeSpec, model: FluxModel, cfl: float,
         t_final: float | None = None, dt: float | None = None,
         scratch: catcore.TaylorScratch | None = None,
         want_report: bool = False) -> StepInfo:
    """Advance the grid by one time step and return per-step diagnostics.

    dt defaults to cfl * dx / (global maximal wave speed), clamped so the grid
    never steps past t_final.
    """
    if not 0.0 < cfl <= 1.0:
        raise ValueError("cfl must be in (0, 1]")
    grid.fill_ghosts()
    if dt is None:
        smax = max_wave_speed(grid, model)
        if smax > 0.0:
            dt = cfl * grid.dx / smax
        elif t_final is not None:
            dt = t_final - grid.t
        else:
            raise ValueError("zero wave speed and no t_final to step towards")
        if t_final is not None:
            dt = min(dt, t_final - grid.t)
    if dt <= 0.0:
        raise ValueError(f"non-positive time step {dt}")

    psi = selected = None
    hist: dict = {}
    demoted = 0
    if scheme.kind == "lat":
        new = catcore.lat_step(grid.interior, model, scheme.P, scheme.order,
                               grid.dx, dt, bc=grid.bc)
        grid.interior[:] = new
    else:
        if scheme.kind == "first_order":
            win = _interface_windows(grid, 2)
            F = _low_order_batch(scheme.low_order, win[:, 0], win[:, 1],
                                 model, grid.dx, dt)
        elif scheme.kind == "flcat2":
            win = _interface_windows(grid, 4)
            F, demoted = _flcat2_batch(win, model, grid.dx, dt,
                                       scheme.indicator, scheme.low_order)
        elif scheme.kind == "cat_fixed":
            win = _interface_windows(grid, 2 * scheme.P)
            F, ok, levels = catcore.cat_flux_batch(scheme.P, win, model,
                                                   grid.dx, dt, scratch)
            if not ok.all():
                bad = int(np.flatnonzero(~ok)[0])
                raise FluxFailure(
                    f"fixed order-{2 * scheme.P} flux failed at interface {bad}",
                    interface=bad, level=int(levels[bad]),
                )
        else:  # acat
            win = _interface_windows(grid, 2 * scheme.P)
            F, psi, selected, demoted = _acat_fluxes_batch(
                win, model, grid.dx, dt, scheme, scratch)
            counts = np.bincount(selected, minlength=scheme.P + 1)
            hist = {0: int(counts[0])}
            hist.update({p: int(counts[p]) for p in range(2, scheme.P + 1)})
        grid.interior[:] += (dt / grid.dx) * (F[:-1] - F[1:]).T

    grid.t += dt
    inner = grid.interior
    info = StepInfo(t=grid.t, dt=dt, state_min=inner.min(axis=1),
                    state_max=inner.max(axis=1), selected_hist=hist,
                    demoted=demoted)
    if want_report:
        info.psi = psi
        info.selected = selected
    return info


@dataclass
class RunResult:
    """Final state plus per-step diagnostics of one 1D run."""

    x: np.ndarray
    u: np.ndarray
    t: float
    steps: list
    wall_time: float
    model: FluxModel
    scheme: SchemeSpec
    dx: float
    history: list = field(default_factory=list)
    psi_final: np.ndarray | None = None
    selected_final: np.ndarray | None = None

    @property
    def n_steps(self) -> int:
        return len(self.steps)

    def selected_history(self) -> list:
        return [s.selected for s in self.steps]


def run(config) -> RunResult:
    """March a 1D problem described by a run configuration to its final time.

    The configuration provides the model, initial state, mesh, boundary
    condition, scheme and CFL number (see the harness module for presets).
    """
    model = config.build_model()
    scheme = config.scheme
    halo = max(scheme.P, 2)
    x0, x1 = config.domain
    grid = Grid1D.create(model.m, config.cells, x0, x1, config.bc, halo)
    grid.interior[:] = config.initial_state(grid.x)

    want_report = config.dump_psi or config.collect_reports
    scratch = catcore.TaylorScratch()
    steps: list[StepInfo] = []
    history = []
    t_final = config.t_final
    tic = time.perf_counter()
    guard = 0
    while grid.t < t_final * (1.0 - 1e-14):
        info = step(grid, scheme, model, config.cfl, t_final=t_final,
                    scratch=scratch, want_report=want_report)
        if not config.collect_reports:
            info.psi = info.psi if config.dump_psi else None
            info.selected = info.selected if config.dump_psi else None
        steps.append(info)
        if config.history_every and len(steps) % config.history_every == 0:
            history.append((grid.t, grid.interior.copy()))
        guard += 1
        if guard > 10_000_000:
            raise RuntimeError("step-count guard tripped; check the configuration")
    wall = time.perf_counter() - tic
    result = RunResult(x=grid.x, u=grid.interior.copy(), t=grid.t, steps=steps,
                       wall_time=wall, model=model, scheme=scheme, dx=grid.dx,
                       history=history)
    if steps and steps[-1].psi is not None:
        result.psi_final = steps[-1].psi
        result.selected_final = steps[-1].selected
    if not config.collect_reports and not config.dump_psi:
        for s in steps:
            s.psi = s.selected = None
    return result
