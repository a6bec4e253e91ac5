"""Conservation-law systems and the exact reference solutions used in tests.

States are arrays whose last axis holds the m conserved components, so every
model evaluates on arbitrarily batched inputs.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import AdmissibilityError, ConvergenceFailure


class FluxModel:
    """Base class for an m-component conservation law u_t + f(u)_x (+ g(u)_y) = 0."""

    m: int = 1
    name: str = "model"
    dim: int = 1
    # Models whose flux is defined for every finite state can skip the
    # per-entry admissibility masking in the flux recursions.
    has_admissibility: bool = False

    def flux_x(self, u: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def flux_y(self, u: np.ndarray) -> np.ndarray:
        raise NotImplementedError(f"{self.name} is one-dimensional")

    def max_wave_speed_x(self, u: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def max_wave_speed_y(self, u: np.ndarray) -> np.ndarray:
        raise NotImplementedError(f"{self.name} is one-dimensional")

    def wave_speed_range_x(self, u: np.ndarray):
        """Signed (slowest, fastest) characteristic speeds, for two-speed fluxes."""
        raise NotImplementedError

    def admissible(self, u: np.ndarray) -> np.ndarray:
        """Boolean mask over the cell axes: True where the state is valid."""
        return np.isfinite(u).all(axis=-1)

    def swap_xy_state(self, u: np.ndarray) -> np.ndarray:
        """Map a state of the (x, y) problem to the transposed (y, x) problem."""
        return u

    def transposed(self) -> "FluxModel":
        """Model of the transposed problem; with swap_xy_state this lets the
        y-direction reuse the x-direction machinery verbatim."""
        raise NotImplementedError(f"{self.name} is one-dimensional")


class LinearAdvection(FluxModel):
    """Scalar transport u_t + a u_x (+ b u_y) = 0."""

    m = 1
    has_admissibility = False

    def __init__(self, a: float, b: float | None = None):
        self.a = float(a)
        self.b = None if b is None else float(b)
        self.dim = 1 if b is None else 2
        self.name = "advection" if b is None else "advection2d"

    def flux_x(self, u):
        return self.a * u

    def flux_y(self, u):
        if self.b is None:
            return super().flux_y(u)
        return self.b * u

    def max_wave_speed_x(self, u):
        return np.full(u.shape[:-1], abs(self.a))

    def max_wave_speed_y(self, u):
        if self.b is None:
            return super().max_wave_speed_y(u)
        return np.full(u.shape[:-1], abs(self.b))

    def wave_speed_range_x(self, u):
        s = np.full(u.shape[:-1], self.a)
        return s, s.copy()

    def transposed(self):
        if self.b is None:
            return super().transposed()
        return LinearAdvection(self.b, self.a)


class Burgers(FluxModel):
    """Scalar Burgers equation u_t + (u^2 / 2)_x = 0."""

    m = 1
    name = "burgers"
    has_admissibility = False

    def flux_x(self, u):
        return 0.5 * u * u

    def max_wave_speed_x(self, u):
        return np.abs(u[..., 0])

    def wave_speed_range_x(self, u):
        return u[..., 0].copy(), u[..., 0].copy()


def _check_euler(rho, p, what: str):
    bad = ~((rho > 0.0) & (p > 0.0) & np.isfinite(rho) & np.isfinite(p))
    if np.any(bad):
        where = tuple(np.argwhere(bad)[0])
        raise AdmissibilityError(
            f"inadmissible state in {what}: rho={np.asarray(rho)[where]!r}, "
            f"p={np.asarray(p)[where]!r} at cell {where}",
            where=where,
        )


class Euler1D(FluxModel):
    """Ideal-gas Euler equations, conserved state (rho, rho*v, E)."""

    m = 3
    name = "euler1d"
    has_admissibility = True

    def __init__(self, gamma: float = 1.4):
        self.gamma = float(gamma)

    def primitive(self, u):
        """(rho, v, p) from conserved variables; raises on invalid states."""
        rho = u[..., 0]
        v = u[..., 1] / rho
        p = (self.gamma - 1.0) * (u[..., 2] - 0.5 * rho * v * v)
        _check_euler(rho, p, self.name)
        return rho, v, p

    def conserved(self, rho, v, p):
        rho = np.asarray(rho, dtype=float)
        E = p / (self.gamma - 1.0) + 0.5 * rho * v * v
        return np.stack([rho, rho * v, E], axis=-1)

    def sound_speed(self, rho, p):
        return np.sqrt(self.gamma * p / rho)

    def flux_x(self, u):
        rho, v, p = self.primitive(u)
        return np.stack([rho * v, p + rho * v * v, v * (u[..., 2] + p)], axis=-1)

    def max_wave_speed_x(self, u):
        rho, v, p = self.primitive(u)
        return np.abs(v) + self.sound_speed(rho, p)

    def wave_speed_range_x(self, u):
        rho, v, p = self.primitive(u)
        c = self.sound_speed(rho, p)
        return v - c, v + c

    def admissible(self, u):
        rho = u[..., 0]
        with np.errstate(all="ignore"):
            p = (self.gamma - 1.0) * (u[..., 2] - 0.5 * u[..., 1] ** 2 / rho)
        return np.isfinite(u).all(axis=-1) & (rho > 0.0) & (p > 0.0)


class Euler2D(FluxModel):
    """Ideal-gas Euler equations, conserved state (rho, rho*v, rho*w, E)."""

    m = 4
    name = "euler2d"
    dim = 2
    has_admissibility = True

    def __init__(self, gamma: float = 1.4):
        self.gamma = float(gamma)

    def primitive(self, u):
        """(rho, v, w, p) from conserved variables; raises on invalid states."""
        rho = u[..., 0]
        v = u[..., 1] / rho
        w = u[..., 2] / rho
        p = (self.gamma - 1.0) * (u[..., 3] - 0.5 * rho * (v * v + w * w))
        _check_euler(rho, p, self.name)
        return rho, v, w, p

    def conserved(self, rho, v, w, p):
        rho = np.asarray(rho, dtype=float)
        E = p / (self.gamma - 1.0) + 0.5 * rho * (v * v + w * w)
        return np.stack([rho, rho * v, rho * w, E], axis=-1)

    def sound_speed(self, rho, p):
        return np.sqrt(self.gamma * p / rho)

    def flux_x(self, u):
        rho, v, w, p = self.primitive(u)
        return np.stack(
            [rho * v, rho * v * v + p, rho * v * w, v * (u[..., 3] + p)], axis=-1
        )

    def flux_y(self, u):
        rho, v, w, p = self.primitive(u)
        return np.stack(
            [rho * w, rho * v * w, rho * w * w + p, w * (u[..., 3] + p)], axis=-1
        )

    def max_wave_speed_x(self, u):
        rho, v, w, p = self.primitive(u)
        return np.abs(v) + self.sound_speed(rho, p)

    def max_wave_speed_y(self, u):
        rho, v, w, p = self.primitive(u)
        return np.abs(w) + self.sound_speed(rho, p)

    def wave_speed_range_x(self, u):
        rho, v, w, p = self.primitive(u)
        c = self.sound_speed(rho, p)
        return v - c, v + c

    def admissible(self, u):
        rho = u[..., 0]
        with np.errstate(all="ignore"):
            ke = 0.5 * (u[..., 1] ** 2 + u[..., 2] ** 2) / rho
            p = (self.gamma - 1.0) * (u[..., 3] - ke)
        return np.isfinite(u).all(axis=-1) & (rho > 0.0) & (p > 0.0)

    def swap_xy_state(self, u):
        return u[..., [0, 2, 1, 3]]

    def transposed(self):
        return self


def linear_advection(a: float, b: float | None = None) -> LinearAdvection:
    return LinearAdvection(a, b)


def burgers() -> Burgers:
    return Burgers()


def euler1d(gamma: float = 1.4) -> Euler1D:
    return Euler1D(gamma)


def euler2d(gamma: float = 1.4) -> Euler2D:
    return Euler2D(gamma)


# ---------------------------------------------------------------------------
# Exact solutions
# ---------------------------------------------------------------------------


@dataclass
class EulerState:
    """Pointwise gas state; ``w`` is the tangential velocity (0 in 1D)."""

    rho: float
    v: float
    p: float
    w: float = 0.0
    gamma: float = 1.4

    @property
    def e(self) -> float:
        return self.p / ((self.gamma - 1.0) * self.rho)

    @property
    def E(self) -> float:
        return self.rho * (self.e + 0.5 * (self.v**2 + self.w**2))

    @property
    def sound_speed(self) -> float:
        return float(np.sqrt(self.gamma * self.p / self.rho))

    def conserved(self) -> np.ndarray:
        return np.array([self.rho, self.rho * self.v, self.E])


def _pressure_fn(p, rho_k, p_k, c_k, gamma):
    """Toro's f_K(p) and its derivative across one nonlinear wave."""
    if p > p_k:  # shock branch
        a = 2.0 / ((gamma + 1.0) * rho_k)
        b = (gamma - 1.0) / (gamma + 1.0) * p_k
        root = np.sqrt(a / (p + b))
        f = (p - p_k) * root
        df = root * (1.0 - 0.5 * (p - p_k) / (p + b))
    else:  # rarefaction branch
        f = 2.0 * c_k / (gamma - 1.0) * ((p / p_k) ** ((gamma - 1.0) / (2 * gamma)) - 1.0)
        df = (p / p_k) ** (-(gamma + 1.0) / (2 * gamma)) / (rho_k * c_k)
    return f, df


def _initial_pressure_guess(left, right, c_l, c_r, gamma):
    """Toro's adaptive starting value for the star-pressure iteration."""
    p_lin = 0.5 * (left.p + right.p) - 0.125 * (right.v - left.v) * (
        left.rho + right.rho
    ) * (c_l + c_r)
    p_min, p_max = min(left.p, right.p), max(left.p, right.p)
    p_lin = max(p_lin, 1e-12 * p_min)
    if p_max / p_min <= 2.0 and p_min <= p_lin <= p_max:
        return p_lin
    if p_lin < p_min:  # two-rarefaction approximation
        z = (gamma - 1.0) / (2.0 * gamma)
        num = c_l + c_r - 0.5 * (gamma - 1.0) * (right.v - left.v)
        den = c_l / left.p**z + c_r / right.p**z
        return (num / den) ** (1.0 / z)
    # two-shock approximation
    g_l = np.sqrt(2.0 / ((gamma + 1.0) * left.rho) / (p_lin + (gamma - 1.0) / (gamma + 1.0) * left.p))
    g_r = np.sqrt(2.0 / ((gamma + 1.0) * right.rho) / (p_lin + (gamma - 1.0) / (gamma + 1.0) * right.p))
    return max(
        (g_l * left.p + g_r * right.p - (right.v - left.v)) / (g_l + g_r),
        1e-12 * p_min,
    )


class RiemannSolution:
    """Self-similar solution of one Euler Riemann problem.

    Solves for the star region once at construction (Newton on the pressure
    function, relative tolerance ``tol``) and then samples pointwise at any
    similarity coordinate xi = x/t. Degenerates to the two-rarefaction vacuum
    structure when the pressure positivity condition fails.
    """

    def __init__(self, left: EulerState, right: EulerState, tol: float = 1e-12,
                 max_iter: int = 100):
        if left.gamma != right.gamma:
            raise ValueError("left/right states must share gamma")
        self.left = left
        self.right = right
        self.gamma = left.gamma
        g = self.gamma
        self.c_l = left.sound_speed
        self.c_r = right.sound_speed

        self.vacuum = (2.0 * self.c_l / (g - 1.0) + 2.0 * self.c_r / (g - 1.0)
                       <= right.v - left.v)
        if self.vacuum:
            self.p_star = 0.0
            self.v_star = 0.0
            self.left_wave = ("rarefaction", left.v - self.c_l,
                              left.v + 2.0 * self.c_l / (g - 1.0))
            self.right_wave = ("rarefaction", right.v + self.c_r,
                               right.v - 2.0 * self.c_r / (g - 1.0))
            return

        p = _initial_pressure_guess(left, right, self.c_l, self.c_r, g)
        dv = right.v - left.v
        for _ in range(max_iter):
            f_l, df_l = _pressure_fn(p, left.rho, left.p, self.c_l, g)
            f_r, df_r = _pressure_fn(p, right.rho, right.p, self.c_r, g)
            dp = (f_l + f_r + dv) / (df_l + df_r)
            p_new = p - dp
            if p_new <= 0.0:
                p_new = 0.5 * p
            if abs(p_new - p) <= tol * 0.5 * abs(p_new + p):
                p = p_new
                break
            p = p_new
        else:
            raise ConvergenceFailure(
                f"star-pressure Newton did not reach rtol={tol} in {max_iter} iterations"
            )
        self.p_star = p
        f_l, _ = _pressure_fn(p, left.rho, left.p, self.c_l, g)
        f_r, _ = _pressure_fn(p, right.rho, right.p, self.c_r, g)
        self.v_star = 0.5 * (left.v + right.v) + 0.5 * (f_r - f_l)
        self.left_wave = self._wave(left, self.c_l, -1)
        self.right_wave = self._wave(right, self.c_r, +1)

    def pressure_residual(self, p: float) -> float:
        f_l, _ = _pressure_fn(p, self.left.rho, self.left.p, self.c_l, self.gamma)
        f_r, _ = _pressure_fn(p, self.right.rho, self.right.p, self.c_r, self.gamma)
        return f_l + f_r + (self.right.v - self.left.v)

    def _wave(self, state, c, sign):
        g = self.gamma
        ratio = self.p_star / state.p
        if self.p_star > state.p:
            s = state.v + sign * c * np.sqrt(
                (g + 1.0) / (2.0 * g) * ratio + (g - 1.0) / (2.0 * g)
            )
            return ("shock", float(s))
        c_star = c * ratio ** ((g - 1.0) / (2.0 * g))
        head = state.v + sign * c
        tail = self.v_star + sign * c_star
        return ("rarefaction", float(head), float(tail))

    def star_density(self, side: str) -> float:
        g = self.gamma
        state = self.left if side == "left" else self.right
        ratio = self.p_star / state.p
        if self.p_star > state.p:  # Rankine-Hugoniot density jump
            gm = (g - 1.0) / (g + 1.0)
            return state.rho * (ratio + gm) / (gm * ratio + 1.0)
        return state.rho * ratio ** (1.0 / g)

    def sample(self, xi: float) -> EulerState:
        g = self.gamma
        if self.vacuum:
            return self._sample_vacuum(xi)
        if xi <= self.v_star:
            state, c, sign, wave = self.left, self.c_l, -1, self.left_wave
        else:
            state, c, sign, wave = self.right, self.c_r, +1, self.right_wave
        if wave[0] == "shock":
            s = wave[1]
            if sign * (xi - s) >= 0.0:
                return EulerState(state.rho, state.v, state.p, gamma=g)
            side = "left" if sign < 0 else "right"
            return EulerState(self.star_density(side), self.v_star, self.p_star, gamma=g)
        head, tail = wave[1], wave[2]
        if sign * (xi - head) >= 0.0:
            return EulerState(state.rho, state.v, state.p, gamma=g)
        if sign * (xi - tail) <= 0.0:
            side = "left" if sign < 0 else "right"
            return EulerState(self.star_density(side), self.v_star, self.p_star, gamma=g)
        # inside the fan
        v = 2.0 / (g + 1.0) * (-sign * c + 0.5 * (g - 1.0) * state.v + xi)
        cf = 2.0 / (g + 1.0) * (c - sign * 0.5 * (g - 1.0) * (state.v - xi))
        rho = state.rho * (cf / c) ** (2.0 / (g - 1.0))
        p = state.p * (cf / c) ** (2.0 * g / (g - 1.0))
        return EulerState(rho, v, p, gamma=g)

    def _sample_vacuum(self, xi: float) -> EulerState:
        g = self.gamma
        left, right = self.left, self.right
        s_star_l = left.v + 2.0 * self.c_l / (g - 1.0)
        s_star_r = right.v - 2.0 * self.c_r / (g - 1.0)
        if xi <= left.v - self.c_l:
            return EulerState(left.rho, left.v, left.p, gamma=g)
        if xi < s_star_l:
            v = 2.0 / (g + 1.0) * (self.c_l + 0.5 * (g - 1.0) * left.v + xi)
            cf = 2.0 / (g + 1.0) * (self.c_l - 0.5 * (g - 1.0) * (left.v - xi))
            return EulerState(
                left.rho * (cf / self.c_l) ** (2.0 / (g - 1.0)), v,
                left.p * (cf / self.c_l) ** (2.0 * g / (g - 1.0)), gamma=g,
            )
        if xi <= s_star_r:
            return EulerState(0.0, 0.5 * (s_star_l + s_star_r), 0.0, gamma=g)
        if xi <= right.v + self.c_r:
            v = 2.0 / (g + 1.0) * (-self.c_r + 0.5 * (g - 1.0) * right.v + xi)
            cf = 2.0 / (g + 1.0) * (self.c_r + 0.5 * (g - 1.0) * (right.v - xi))
            return EulerState(
                right.rho * (cf / self.c_r) ** (2.0 / (g - 1.0)), v,
                right.p * (cf / self.c_r) ** (2.0 * g / (g - 1.0)), gamma=g,
            )
        return EulerState(right.rho, right.v, right.p, gamma=g)

    def sample_primitives(self, xi: np.ndarray):
        """(rho, v, p) arrays over an array of similarity coordinates."""
        xi = np.asarray(xi, dtype=float)
        rho = np.empty_like(xi)
        v = np.empty_like(xi)
        p = np.empty_like(xi)
        for idx, x in np.ndenumerate(xi):
            s = self.sample(float(x))
            rho[idx], v[idx], p[idx] = s.rho, s.v, s.p
        return rho, v, p


def exact_riemann_euler(left: EulerState, right: EulerState, x_over_t: float,
                        tol: float = 1e-12, max_iter: int = 100) -> EulerState:
    """Exact self-similar Euler Riemann solution sampled at xi = x/t."""
    return RiemannSolution(left, right, tol=tol, max_iter=max_iter).sample(x_over_t)


def exact_transport(u0, a: float, x, t: float, *, domain=None, b=None, y=None):
    """Method-of-characteristics solution of linear transport.

    ``u0`` is the initial profile, evaluated at the foot of the characteristic
    x - a t (and y - b t in 2D). With ``domain=(lo, hi)`` the foot is wrapped
    periodically; the same interval is used for both axes in 2D.
    """
    x = np.asarray(x, dtype=float)
    x0 = x - a * t
    if domain is not None:
        lo, hi = domain
        x0 = lo + np.mod(x0 - lo, hi - lo)
    if b is None:
        return u0(x0)
    y0 = np.asarray(y, dtype=float) - b * t
    if domain is not None:
        lo, hi = domain
        y0 = lo + np.mod(y0 - lo, hi - lo)
    return u0(x0, y0)
