"""Problem presets, reference wiring, error norms, convergence studies, CSV
emission and the timing table. Every preset defaults to its published setup
and is fully overridable from the command line or a key=value config file."""

from __future__ import annotations

import os
import time
from dataclasses import dataclass, field, replace

import numpy as np

from . import acat1d, acat2d, models
from .acat1d import RunResult, SchemeSpec
from .acat2d import RunResult2D
from .smooth import IndicatorConfig

PRESET_NAMES = (
    "transport_sine", "transport_sine2", "transport_square", "burgers_sine",
    "sod", "einfeldt123", "blast_right",
    "transport2d_step", "euler2d_cfg4", "euler2d_cfg6", "euler2d_cfg8",
)

# Quadrant primitives (rho, vx, vy, p); quadrant 1 is x > cx, y > cy and the
# numbering proceeds counter-clockwise.
_QUADRANTS = {
    "euler2d_cfg4": (
        (1.1, 0.0, 0.0, 1.1),
        (0.5065, 0.8939, 0.0, 0.35),
        (1.1, 0.8939, 0.8939, 1.1),
        (0.5065, 0.0, 0.8939, 0.35),
    ),
    "euler2d_cfg6": (
        (1.0, 0.75, -0.5, 1.0),
        (2.0, 0.75, 0.5, 1.0),
        (1.0, -0.75, 0.5, 1.0),
        (3.0, -0.75, -0.5, 1.0),
    ),
    "euler2d_cfg8": (
        (0.5197, 0.1, 0.1, 0.4),
        (1.0, -0.6259, 0.1, 1.0),
        (0.8, 0.1, 0.1, 1.0),
        (1.0, 0.1, -0.6259, 1.0),
    ),
}

_RIEMANN_1D = {
    # (rho, v, p) left / right of x = 1/2
    "sod": ((1.0, 0.0, 1.0), (0.125, 0.0, 0.1)),
    "einfeldt123": ((1.0, -2.0, 0.4), (1.0, 2.0, 0.4)),
    "blast_right": ((1.0, 0.0, 1000.0), (1.0, 0.0, 0.01)),
}


def _square_profile(x):
    x = np.asarray(x)
    u = np.zeros_like(x)
    u[(x >= 0.5) & (x <= 1.0)] = 1.0
    u[(x > 1.0) & (x <= 1.5)] = -1.0
    return u


@dataclass
class RunConfig:
    """One fully-specified run: problem, scheme, mesh and output controls."""

    preset: str
    dim: int
    scheme: SchemeSpec
    cells: int | tuple
    cfl: float
    t_final: float
    bc: str | tuple
    domain: tuple
    gamma: float = 1.4
    dump_psi: bool = False
    history_every: int = 0
    collect_reports: bool = False
    out_dir: str | None = None

    def build_model(self) -> models.FluxModel:
        name = self.preset
        if name.startswith("transport_sine") or name == "transport_square":
            return models.linear_advection(1.0)
        if name == "burgers_sine":
            return models.burgers()
        if name in _RIEMANN_1D:
            return models.euler1d(self.gamma)
        if name == "transport2d_step":
            return models.linear_advection(1.0, 1.0)
        if name in _QUADRANTS:
            return models.euler2d(self.gamma)
        raise ValueError(f"unknown preset {name!r}")

    def initial_state(self, x, y=None) -> np.ndarray:
        name = self.preset
        if name == "transport_sine":
            return 0.5 * np.sin(np.pi * x)[None]
        if name == "transport_sine2":
            return 0.5 * np.sin(2.0 * np.pi * x)[None]
        if name == "transport_square":
            return _square_profile(x)[None]
        if name == "burgers_sine":
            return 0.5 * np.sin(np.pi * x)[None]
        if name in _RIEMANN_1D:
            (rl, vl, pl), (rr, vr, pr) = _RIEMANN_1D[name]
            model = models.euler1d(self.gamma)
            left = model.conserved(rl, vl, pl)
            right = model.conserved(rr, vr, pr)
            return np.where((x < 0.5)[None, :], left[:, None], right[:, None])
        if name == "transport2d_step":
            return np.where(x + y <= 0.25, 1.0, 0.0)[None]
        if name in _QUADRANTS:
            model = models.euler2d(self.gamma)
            (x0, x1), (y0, y1) = self.domain
            cx, cy = 0.5 * (x0 + x1), 0.5 * (y0 + y1)
            q1, q2, q3, q4 = (model.conserved(*q) for q in _QUADRANTS[name])
            right = x >= cx
            top = y >= cy
            u = np.empty((model.m,) + x.shape)
            for mask, q in ((right & top, q1), (~right & top, q2),
                            (~right & ~top, q3), (right & ~top, q4)):
                u[:, mask] = q[:, None]
            return u
        raise ValueError(f"unknown preset {name!r}")


def preset(name: str, **overrides) -> RunConfig:
    """Configuration of a named experiment with its published parameters."""
    if name.startswith("transport_sine"):
        cfg = RunConfig(preset=name, dim=1, scheme=SchemeSpec(kind="acat", P=3),
                        cells=160, cfl=0.9, t_final=4.0, bc="periodic",
                        domain=(0.0, 2.0))
    elif name == "transport_square":
        cfg = RunConfig(preset=name, dim=1, scheme=SchemeSpec(kind="acat", P=3),
                        cells=160, cfl=0.9, t_final=2.0, bc="periodic",
                        domain=(0.0, 2.0))
    elif name == "burgers_sine":
        cfg = RunConfig(preset=name, dim=1, scheme=SchemeSpec(kind="acat", P=3),
                        cells=160, cfl=0.9, t_final=1.0, bc="periodic",
                        domain=(0.0, 2.0))
    elif name == "sod":
        cfg = RunConfig(preset=name, dim=1, scheme=SchemeSpec(kind="acat", P=3),
                        cells=200, cfl=0.8, t_final=0.25, bc="outflow",
                        domain=(0.0, 1.0))
    elif name == "einfeldt123":
        cfg = RunConfig(preset=name, dim=1, scheme=SchemeSpec(kind="acat", P=3),
                        cells=200, cfl=0.8, t_final=0.15, bc="outflow",
                        domain=(0.0, 1.0))
    elif name == "blast_right":
        cfg = RunConfig(preset=name, dim=1, scheme=SchemeSpec(kind="acat", P=3),
                        cells=450, cfl=0.8, t_final=0.012, bc="outflow",
                        domain=(0.0, 1.0))
    elif name == "transport2d_step":
        cfg = RunConfig(preset=name, dim=2, scheme=SchemeSpec(kind="acat", P=2),
                        cells=(100, 100), cfl=0.5, t_final=1.0, bc="outflow",
                        domain=((0.0, 2.0), (0.0, 2.0)))
    elif name in _QUADRANTS:
        t_final = 0.3 if name == "euler2d_cfg6" else 0.25
        cfg = RunConfig(preset=name, dim=2, scheme=SchemeSpec(kind="acat", P=2),
                        cells=(100, 100), cfl=0.475, t_final=t_final,
                        bc="outflow", domain=((0.0, 1.0), (0.0, 1.0)))
    else:
        raise ValueError(f"unknown preset {name!r}; available: {PRESET_NAMES}")
    return replace(cfg, **overrides) if overrides else cfg


def run(config: RunConfig):
    """Run a configuration with the driver matching its dimension."""
    return acat1d.run(config) if config.dim == 1 else acat2d.run_2d(config)


# ---------------------------------------------------------------------------
# References
# ---------------------------------------------------------------------------


def reference_solution(config: RunConfig, x: np.ndarray) -> np.ndarray:
    """Reference field on the given 1D mesh at the configured final time.

    Transport presets use the characteristics solution, the shock tubes the
    exact Riemann solution; Burgers and the blast wave use a fine-mesh
    first-order self-run (1400 cells with the classical two-point dissipation
    for Burgers, 4x cells with the two-speed flux for the blast).
    """
    name, t = config.preset, config.t_final
    if name in ("transport_sine", "transport_sine2", "transport_square",
                "transport2d_step"):
        profiles = {
            "transport_sine": lambda z: 0.5 * np.sin(np.pi * z),
            "transport_sine2": lambda z: 0.5 * np.sin(2.0 * np.pi * z),
            "transport_square": _square_profile,
        }
        if name == "transport2d_step":
            raise ValueError("2D reference is sampled via exact_transport directly")
        return models.exact_transport(profiles[name], 1.0, x, t,
                                      domain=config.domain)[None]
    if name in ("sod", "einfeldt123"):
        (rl, vl, pl), (rr, vr, pr) = _RIEMANN_1D[name]
        g = config.gamma
        sol = models.RiemannSolution(models.EulerState(rl, vl, pl, gamma=g),
                                     models.EulerState(rr, vr, pr, gamma=g))
        rho, v, p = sol.sample_primitives((x - 0.5) / t)
        return models.euler1d(g).conserved(rho, v, p).T
    if name == "burgers_sine":
        fine = replace(config, cells=1400, dump_psi=False, collect_reports=False,
                       history_every=0,
                       scheme=SchemeSpec(kind="first_order",
                                         low_order="lax_friedrichs"))
        res = acat1d.run(fine)
        return np.stack([np.interp(x, res.x, res.u[c], period=None)
                         for c in range(res.u.shape[0])])
    if name == "blast_right":
        fine = replace(config, cells=4 * config.cells, dump_psi=False,
                       collect_reports=False, history_every=0,
                       scheme=SchemeSpec(kind="first_order", low_order="hll"))
        res = acat1d.run(fine)
        return np.stack([np.interp(x, res.x, res.u[c])
                         for c in range(res.u.shape[0])])
    raise ValueError(f"no 1D reference available for preset {name!r}")


# ---------------------------------------------------------------------------
# Norms, convergence, timing
# ---------------------------------------------------------------------------


def error_norms(numeric: np.ndarray, reference: np.ndarray, dx: float,
                dy: float | None = None) -> dict:
    """Per-component discrete L1 and Linf errors of a (m, ...) field pair."""
    if numeric.shape != reference.shape:
        raise ValueError(f"shape mismatch {numeric.shape} vs {reference.shape}")
    e = np.abs(numeric - reference)
    cell = dx if dy is None else dx * dy
    axes = tuple(range(1, e.ndim))
    return {"l1": e.sum(axis=axes) * cell, "linf": e.max(axis=axes)}


@dataclass
class ErrorReport:
    """Mesh-refinement errors and the observed orders between halvings."""

    preset: str
    scheme_label: str
    cells: list = field(default_factory=list)
    l1: list = field(default_factory=list)
    linf: list = field(default_factory=list)
    wall: list = field(default_factory=list)

    def orders(self, norm: str = "l1") -> list:
        errs = getattr(self, norm)
        out = []
        for i in range(1, len(errs)):
            if self.cells[i] != 2 * self.cells[i - 1]:
                out.append(float("nan"))
            else:
                out.append(float(np.log2(errs[i - 1] / errs[i])))
        return out


def convergence_study(config: RunConfig, cells_list, component: int = 0) -> ErrorReport:
    """Errors against the configured reference over a mesh sequence."""
    report = ErrorReport(preset=config.preset, scheme_label=config.scheme.label())
    for cells in cells_list:
        cfg = replace(config, cells=int(cells), dump_psi=False,
                      collect_reports=False, history_every=0)
        result = acat1d.run(cfg)
        ref = reference_solution(cfg, result.x)
        norms = error_norms(result.u, ref, result.dx)
        report.cells.append(int(cells))
        report.l1.append(float(norms["l1"][component]))
        report.linf.append(float(norms["linf"][component]))
        report.wall.append(result.wall_time)
    return report


def timing_table(configs: list) -> list:
    """Wall-clock ratios of a list of configurations, first entry = 1.00."""
    rows = []
    for cfg in configs:
        tic = time.perf_counter()
        run(cfg)
        rows.append((cfg.scheme.label(), time.perf_counter() - tic))
    base = rows[0][1] if rows and rows[0][1] > 0 else 1.0
    return [(label, wall, wall / base) for label, wall in rows]


# ---------------------------------------------------------------------------
# Config serialization (plain key=value) and CSV emission
# ---------------------------------------------------------------------------


def _fmt(x) -> str:
    if isinstance(x, float):
        return f"{x:.17g}"
    return str(x)


def to_keyvalues(config: RunConfig) -> str:
    """Serialize a configuration to newline-separated key=value text."""
    ind = config.scheme.indicator
    cells = (f"{config.cells[0]}x{config.cells[1]}"
             if isinstance(config.cells, (tuple, list)) else str(config.cells))
    bc = (",".join(config.bc) if isinstance(config.bc, (tuple, list))
          else config.bc)
    if config.dim == 1:
        domain = f"{_fmt(config.domain[0])},{_fmt(config.domain[1])}"
    else:
        (a, b), (c, d) = config.domain
        domain = f"{_fmt(a)},{_fmt(b)};{_fmt(c)},{_fmt(d)}"
    pairs = [
        ("preset", config.preset),
        ("kind", config.scheme.kind),
        ("P", config.scheme.P),
        ("low_order", config.scheme.low_order),
        ("lat_order", config.scheme.lat_order if config.scheme.lat_order else ""),
        ("eps_scale", _fmt(ind.eps_scale)),
        ("limiter", ind.limiter),
        ("use_modified_p2", int(ind.use_modified_p2)),
        ("select_threshold", _fmt(ind.select_threshold)),
        ("cells", cells),
        ("cfl", _fmt(config.cfl)),
        ("t_final", _fmt(config.t_final)),
        ("bc", bc),
        ("domain", domain),
        ("gamma", _fmt(config.gamma)),
        ("dump_psi", int(config.dump_psi)),
        ("history_every", config.history_every),
        ("collect_reports", int(config.collect_reports)),
        ("out_dir", config.out_dir or ""),
    ]
    return "\n".join(f"{k}={v}" for k, v in pairs) + "\n"


def parse_keyvalues(text: str) -> RunConfig:
    """Rebuild a configuration from key=value text (inverse of to_keyvalues)."""
    kv = {}
    for line in text.splitlines():
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        key, _, value = line.partition("=")
        kv[key.strip()] = value.strip()
    cfg = preset(kv["preset"])
    ind = IndicatorConfig(
        eps_scale=float(kv.get("eps_scale", 1e-14)),
        limiter=kv.get("limiter", "superbee"),
        use_modified_p2=bool(int(kv.get("use_modified_p2", 0))),
        select_threshold=float(kv.get("select_threshold", 0.5)),
    )
    scheme = SchemeSpec(
        kind=kv.get("kind", cfg.scheme.kind),
        P=int(kv.get("P", cfg.scheme.P)),
        low_order=kv.get("low_order", cfg.scheme.low_order),
        indicator=ind,
        lat_order=int(kv["lat_order"]) if kv.get("lat_order") else None,
    )
    cells_s = kv.get("cells", "")
    if "x" in cells_s:
        a, b = cells_s.split("x")
        cells = (int(a), int(b))
    else:
        cells = int(cells_s) if cells_s else cfg.cells
    bc_s = kv.get("bc", "")
    bc = tuple(bc_s.split(",")) if "," in bc_s else (bc_s or cfg.bc)
    dom_s = kv.get("domain", "")
    if dom_s:
        if ";" in dom_s:
            xs, ys = dom_s.split(";")
            domain = (tuple(float(v) for v in xs.split(",")),
                      tuple(float(v) for v in ys.split(",")))
        else:
            domain = tuple(float(v) for v in dom_s.split(","))
    else:
        domain = cfg.domain
    return replace(
        cfg, scheme=scheme, cells=cells, bc=bc, domain=domain,
        cfl=float(kv.get("cfl", cfg.cfl)),
        t_final=float(kv.get("t_final", cfg.t_final)),
        gamma=float(kv.get("gamma", cfg.gamma)),
        dump_psi=bool(int(kv.get("dump_psi", 0))),
        history_every=int(kv.get("history_every", 0)),
        collect_reports=bool(int(kv.get("collect_reports", 0))),
        out_dir=kv.get("out_dir") or None,
    )


def _write_csv(path: str, header: list, columns: list) -> None:
    rows = np.column_stack([np.asarray(c, dtype=float) for c in columns])
    with open(path, "w") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(f"{v:.17g}" for v in row) + "\n")


def _euler_extra_columns(model, u: np.ndarray):
    """Derived primitive columns appended to Euler solution files."""
    ucl = np.moveaxis(u, 0, -1)
    if model.name == "euler1d":
        rho, v, p = model.primitive(ucl)
        return ["rho", "v", "p", "e"], [rho, v, p, p / ((model.gamma - 1) * rho)]
    if model.name == "euler2d":
        rho, v, w, p = model.primitive(ucl)
        return ["rho", "v", "w", "p"], [rho, v, w, p]
    return [], []


def write_solution_1d(result: RunResult, out_dir: str) -> str:
    path = os.path.join(out_dir, "solution.csv")
    header = ["x"] + [f"u{c}" for c in range(result.u.shape[0])]
    cols = [result.x] + [result.u[c] for c in range(result.u.shape[0])]
    names, extra = _euler_extra_columns(result.model, result.u)
    _write_csv(path, header + names, cols + extra)
    return path


def write_diagnostics(result, out_dir: str) -> str:
    path = os.path.join(out_dir, "diagnostics.csv")
    m = result.u.shape[0]
    P = result.scheme.P
    hist_ps = [0] + list(range(2, P + 1)) if result.scheme.kind == "acat" else []
    header = (["step", "t", "dt"]
              + [f"min{c}" for c in range(m)] + [f"max{c}" for c in range(m)]
              + [f"n_p{p}" for p in hist_ps] + ["demoted"])
    cols: list = [[], [], []] + [[] for _ in range(2 * m)] \
        + [[] for _ in hist_ps] + [[]]
    for i, s in enumerate(result.steps):
        vals = ([i, s.t, s.dt] + list(s.state_min) + list(s.state_max)
                + [s.selected_hist.get(p, 0) for p in hist_ps] + [s.demoted])
        for col, v in zip(cols, vals):
            col.append(v)
    _write_csv(path, header, cols)
    return path


def write_psi_1d(result: RunResult, out_dir: str) -> str:
    if result.psi_final is None:
        raise ValueError("run was not configured with dump_psi")
    path = os.path.join(out_dir, "psi.csv")
    n_if, P = result.psi_final.shape
    x_if = result.x[0] - 0.5 * result.dx + np.arange(n_if) * result.dx
    header = (["interface", "x"] + [f"psi{p}" for p in range(1, P + 1)]
              + ["selected_p"])
    cols = ([np.arange(n_if), x_if]
            + [result.psi_final[:, p] for p in range(P)]
            + [result.selected_final])
    _write_csv(path, header, cols)
    return path


def write_field_2d(result: RunResult2D, out_dir: str) -> str:
    path = os.path.join(out_dir, "field.csv")
    m = result.u.shape[0]
    X, Y = np.meshgrid(result.x, result.y, indexing="ij")
    header = ["x", "y"] + [f"u{c}" for c in range(m)]
    cols = [X.ravel(), Y.ravel()] + [result.u[c].ravel() for c in range(m)]
    names, extra = _euler_extra_columns(result.model, result.u)
    _write_csv(path, header + names, cols + [e.ravel() for e in extra])
    return path


def write_psi_2d(result: RunResult2D, out_dir: str) -> list:
    if result.psi_x is None:
        raise ValueError("run was not configured with dump_psi")
    paths = []
    for tag, psi, sel in (("x", result.psi_x, result.selected_x),
                          ("y", result.psi_y, result.selected_y)):
        path = os.path.join(out_dir, f"psi_{tag}.csv")
        nf, nr, P = psi.shape
        I, J = np.meshgrid(np.arange(nf), np.arange(nr), indexing="ij")
        header = (["face", "row"] + [f"psi{p}" for p in range(1, P + 1)]
                  + ["selected_p"])
        cols = ([I.ravel(), J.ravel()]
                + [psi[:, :, p].ravel() for p in range(P)] + [sel.ravel()])
        _write_csv(path, header, cols)
        paths.append(path)
    return paths


def write_cut_2d(result: RunResult2D, out_dir: str) -> str:
    path = os.path.join(out_dir, "cut.csv")
    x, vals = result.diagonal_cut()
    header = ["x"] + [f"u{c}" for c in range(vals.shape[0])]
    _write_csv(path, header, [x] + [vals[c] for c in range(vals.shape[0])])
    return path


def write_gnuplot_stub(out_dir: str, dim: int) -> str:
    """Emit a ready-to-plot data file plus a minimal gnuplot script."""
    src = "solution.csv" if dim == 1 else "field.csv"
    dat = os.path.join(out_dir, "plot.dat")
    with open(os.path.join(out_dir, src)) as fh:
        lines = fh.read().splitlines()
    with open(dat, "w") as fh:
        fh.write("# " + lines[0].replace(",", " ") + "\n")
        fh.write("\n".join(line.replace(",", " ") for line in lines[1:]) + "\n")
    script = os.path.join(out_dir, "plot.gp")
    with open(script, "w") as fh:
        if dim == 1:
            fh.write('set key top right\nplot "plot.dat" using 1:2 with linespoints title "u0"\n')
        else:
            fh.write('set view map\nsplot "plot.dat" using 1:2:3 with points palette title "u0"\n')
    return script
