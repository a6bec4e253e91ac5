"""Centered and offset-evaluation differentiation formulas on uniform stencils.

All weights are generated once per (half-width, derivative order, offset) by an
exact rational solve of the moment system and cached, so no table is ever
transcribed by hand.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from math import factorial

import numpy as np

# Largest half-width generated by default (order 8). Factorials and moment
# matrix conditioning stay benign up to here; raise deliberately if needed.
MAX_HALF_WIDTH = 4


@dataclass(frozen=True, eq=False)
class DiffFormula:
    """Weights of one differentiation/interpolation formula on a uniform stencil.

    A centered formula of half-width ``p`` has ``2p + 1`` weights on the node
    offsets ``-p..p`` and approximates the ``deriv_order``-th derivative at the
    stencil center. An interpolatory formula has ``2p`` weights on offsets
    ``-p+1..p`` and approximates the derivative at ``eval_offset`` mesh steps
    from the center node. Applying either means forming the weighted sample sum
    divided by ``h**scale_power``.
    """

    half_width: int
    deriv_order: int
    kind: str  # "centered" | "interpolatory"
    eval_offset: Fraction | None
    exact_coeffs: tuple[Fraction, ...]
    coeffs: np.ndarray

    @property
    def stencil_size(self) -> int:
        return len(self.exact_coeffs)

    @property
    def offsets(self) -> np.ndarray:
        p = self.half_width
        if self.kind == "centered":
            return np.arange(-p, p + 1)
        return np.arange(-p + 1, p + 1)

    @property
    def scale_power(self) -> int:
        return self.deriv_order


def _solve_moment_system(offsets: list[Fraction], k: int, q: Fraction) -> tuple[Fraction, ...]:
    """Solve sum_j c_j * off_j**s = s!/(s-k)! * q**(s-k) for s = 0..n-1, exactly."""
    n = len(offsets)
    rows = []
    rhs = []
    for s in range(n):
        rows.append([off**s for off in offsets])
        if s < k:
            rhs.append(Fraction(0))
        else:
            rhs.append(Fraction(factorial(s), factorial(s - k)) * q ** (s - k))
    # Gaussian elimination with partial pivoting over the rationals.
    aug = [row + [b] for row, b in zip(rows, rhs)]
    for col in range(n):
        piv = next(r for r in range(col, n) if aug[r][col] != 0)
        aug[col], aug[piv] = aug[piv], aug[col]
        inv = 1 / aug[col][col]
        aug[col] = [x * inv for x in aug[col]]
        for r in range(n):
            if r != col and aug[r][col] != 0:
                f = aug[r][col]
                aug[r] = [x - f * y for x, y in zip(aug[r], aug[col])]
    return tuple(aug[r][n] for r in range(n))


def _check_half_width(p: int) -> None:
    if not isinstance(p, (int, np.integer)) or p < 1:
        raise ValueError(f"half-width must be a positive integer, got {p!r}")
    if p > MAX_HALF_WIDTH:
        raise ValueError(
            f"half-width {p} exceeds MAX_HALF_WIDTH={MAX_HALF_WIDTH}; "
            "raise acat.diffops.MAX_HALF_WIDTH to enable wider stencils"
        )


def _as_offset(q, p: int) -> Fraction:
    """Normalize an evaluation offset to an exact Fraction and validate it."""
    qf = Fraction(q)
    if qf.denominator == 1:
        if not (-p + 1 <= qf <= p):
            raise ValueError(f"integer offset q={qf} outside stencil -{p - 1}..{p}")
        return qf
    if qf == Fraction(1, 2):
        return qf
    raise ValueError(f"offset q={q!r} unsupported; use a stencil integer or 1/2")


@lru_cache(maxsize=None)
def _centered_cached(p: int, k: int) -> DiffFormula:
    offsets = [Fraction(j) for j in range(-p, p + 1)]
    exact = _solve_moment_system(offsets, k, Fraction(0))
    return DiffFormula(
        half_width=p,
        deriv_order=k,
        kind="centered",
        eval_offset=None,
        exact_coeffs=exact,
        coeffs=np.array([float(c) for c in exact]),
    )


@lru_cache(maxsize=None)
def _interpolatory_cached(p: int, k: int, q: Fraction) -> DiffFormula:
    offsets = [Fraction(j) for j in range(-p + 1, p + 1)]
    exact = _solve_moment_system(offsets, k, q)
    return DiffFormula(
        half_width=p,
        deriv_order=k,
        kind="interpolatory",
        eval_offset=q,
        exact_coeffs=exact,
        coeffs=np.array([float(c) for c in exact]),
    )


@lru_cache(maxsize=None)
def _interface_cached(p: int, k: int) -> DiffFormula:
    centered = _centered_cached(p, k + 1)
    d = centered.exact_coeffs  # offsets -p..p
    kernel = [-d[0]]
    for idx in range(1, 2 * p):
        kernel.append(kernel[-1] - d[idx])
    # Telescoping closes because the centered weights of a derivative sum to 0.
    assert kernel[-1] == d[2 * p]
    exact = tuple(kernel)
    return DiffFormula(
        half_width=p,
        deriv_order=k,
        kind="interface",
        eval_offset=Fraction(1, 2),
        exact_coeffs=exact,
        coeffs=np.array([float(c) for c in exact]),
    )


def centered_coeffs(p: int, k: int) -> DiffFormula:
    """Weights of the (2p+1)-point centered formula for the k-th derivative.

    Exact on polynomials up to degree 2p; the approximation order at the
    stencil center is at least 2p + 1 - k.
    """
    _check_half_width(p)
    if not 0 <= k <= 2 * p:
        raise ValueError(f"derivative order k={k} outside [0, {2 * p}] for p={p}")
    return _centered_cached(int(p), int(k))


def interpolatory_coeffs(p: int, k: int, q) -> DiffFormula:
    """Weights of the 2p-point formula for the k-th derivative at offset q.

    The stencil covers node offsets -p+1..p and the formula evaluates at q mesh
    steps right of the center node. Exact on polynomials up to degree 2p - 1.
    """
    _check_half_width(p)
    if not 0 <= k <= 2 * p - 1:
        raise ValueError(f"derivative order k={k} outside [0, {2 * p - 1}] for p={p}")
    return _interpolatory_cached(int(p), int(k), _as_offset(q, int(p)))


def interface_kernel(p: int, k: int) -> DiffFormula:
    """Conservative interface kernel of the centered (k+1)-derivative formula.

    The 2p weights B on offsets -p+1..p are defined by exact telescoping: the
    centered (2p+1)-point formula for the (k+1)-th derivative at node i equals
    (B applied at i minus B applied at i-1) divided by the mesh step. This is
    the kernel that turns a step built from centered derivatives into an
    equivalent flux-difference form. For p = 1, and for the top order
    k = 2p - 1, it coincides with the midpoint-evaluation formula; for
    intermediate orders it does not (it trades pointwise exactness for exact
    telescoping).
    """
    _check_half_width(p)
    if not 0 <= k <= 2 * p - 1:
        raise ValueError(f"derivative order k={k} outside [0, {2 * p - 1}] for p={p}")
    return _interface_cached(int(p), int(k))


def apply(formula: DiffFormula, samples, h: float) -> float:
    """Evaluate a formula: (1/h**k) * sum_j coeff_j * sample_j."""
    samples = np.asarray(samples, dtype=float)
    if samples.shape != (formula.stencil_size,):
        raise ValueError(
            f"expected {formula.stencil_size} samples, got shape {samples.shape}"
        )
    if not h > 0:
        raise ValueError(f"mesh step must be positive, got {h}")
    return float(np.dot(formula.coeffs, samples)) / h**formula.scale_power


def undivided_difference(p: int, samples) -> float:
    """Highest undivided difference of 2p samples (no mesh-step division).

    Annihilates polynomials of degree <= 2p - 2 and equals the classical
    forward-difference pattern of order 2p - 1; on smooth data it scales like
    h**(2p-1), across a jump it stays O(1). Since the derivative order pins all
    2p weights, the evaluation offset is immaterial.
    """
    samples = np.asarray(samples, dtype=float)
    if samples.shape != (2 * p,):
        raise ValueError(f"expected {2 * p} samples, got shape {samples.shape}")
    formula = interpolatory_coeffs(p, 2 * p - 1, Fraction(1, 2))
    return float(np.dot(formula.coeffs, samples))
