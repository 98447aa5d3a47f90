"""Fractional Riemann-Liouville integrals, Weyl (Marchaud-form) derivatives,
and the driver-strength functional built from the right-sided derivative.

All operators are real-valued: the complex phases carried by the
right-sided definitions cancel in every pairing used here (the Young
module's cross-validation pins the resulting sign).  Singular kernels are
integrated per grid cell against the piecewise-linear interpolant, with
the cell adjacent to the singularity handled in closed form.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Sequence, Union

import numpy as np

from .errors import RegularityError
from .paths import FracOrder, GridPath, _alpha_value, estimate_holder_order, w_one_minus_alpha_norm
from .quadrature import increment_profile, kernel_profile

__all__ = [
    "FracOrder",
    "left_frac_integral",
    "right_frac_integral",
    "left_weyl_derivative",
    "right_weyl_derivative",
    "lambda_alpha",
    "lambda_alpha_report",
    "LambdaReport",
]


def left_frac_integral(f: GridPath, alpha: Union[FracOrder, float]) -> GridPath:
    """Convolution of f against (x-y)^{alpha-1}/Gamma(alpha) from the left endpoint."""
    a = _alpha_value(alpha)
    out = kernel_profile(f.values, a - 1.0, f.step) / math.gamma(a)
    return GridPath(f.times, out)


def right_frac_integral(f: GridPath, alpha: Union[FracOrder, float]) -> GridPath:
    """Mirror of the left integral under time reversal (real-valued convention)."""
    a = _alpha_value(alpha)
    out = kernel_profile(f.values[::-1], a - 1.0, f.step) / math.gamma(a)
    return GridPath(f.times, out[::-1])


def _marchaud_values(values: np.ndarray, a: float, h: float, rel_times: np.ndarray) -> np.ndarray:
    """Boundary term plus increment tail of the left Weyl derivative, all grid nodes."""
    tail = increment_profile(values, -a - 1.0, h)
    out = np.empty_like(tail)
    with np.errstate(divide="ignore", invalid="ignore"):
        out[1:] = values[1:] / rel_times[1:, None] ** a
    out[1:] += a * tail[1:]
    out /= math.gamma(1.0 - a)
    # singular endpoint: exact limit 0 where f vanishes, else report the first interior value
    out[0] = np.where(values[0] == 0.0, 0.0, out[1])
    if not np.isfinite(out).all():
        raise RegularityError("Weyl derivative diverged; the path is too rough for this order")
    return out


def _warn_if_too_rough(f: GridPath, a: float, side: str) -> None:
    est = estimate_holder_order(f)
    if est <= a:
        warnings.warn(
            f"{side} Weyl derivative of order {a:.3g} on a path with estimated "
            f"Holder order {est:.3g}; the singular integral may be unstable",
            stacklevel=3,
        )


def left_weyl_derivative(f: GridPath, alpha: Union[FracOrder, float]) -> GridPath:
    """Marchaud-form derivative: boundary decay term plus the singular increment integral."""
    a = _alpha_value(alpha)
    _warn_if_too_rough(f, a, "left")
    rel = f.times - f.times[0]
    return GridPath(f.times, _marchaud_values(f.values, a, f.step, rel))


def right_weyl_derivative(f: GridPath, alpha: Union[FracOrder, float], pin_endpoint: bool = False) -> GridPath:
    """Mirror derivative from the right endpoint; ``pin_endpoint`` subtracts f(T) first.

    Real-valued convention: the (-1)^alpha phase of the right-sided
    definition is dropped; pairings that need it reinstate the sign.
    """
    a = _alpha_value(alpha)
    _warn_if_too_rough(f, a, "right")
    vals = f.values - f.values[-1] if pin_endpoint else f.values
    rel = f.times - f.times[0]
    out = _marchaud_values(vals[::-1], a, f.step, rel)
    return GridPath(f.times, out[::-1])


def _pinned_right_derivative_magnitude(values: np.ndarray, a: float, h: float) -> np.ndarray:
    """|D^{1-alpha}_{t-} g_{t-}|(s_i) for the right endpoint t = last node of ``values``.

    Index k of the result corresponds to s = t - k*h (reversed positions);
    entries 0 (s = t) and the last (s = path start) are not interior.
    """
    w = values[::-1]
    j = w.shape[0] - 1
    tau = np.arange(j + 1) * h
    prof = increment_profile(w, a - 2.0, h)
    out = np.zeros((j + 1, w.shape[1]))
    with np.errstate(divide="ignore", invalid="ignore"):
        out[1:] = (w[1:] - w[0]) / tau[1:, None] ** (1.0 - a)
    out[1:] += (1.0 - a) * prof[1:]
    out /= math.gamma(a)
    return np.linalg.norm(out, axis=1)


def _endpoint_indices(n: int, endpoints: Union[str, Sequence[int]]) -> np.ndarray:
    if isinstance(endpoints, str):
        if endpoints == "all":
            return np.arange(2, n + 1)
        if endpoints == "decimated":
            count = int(np.ceil(np.sqrt(n)))
            idx = np.unique(np.linspace(2, n, count).round().astype(int))
            return idx
        raise ValueError(f"unknown endpoint mode {endpoints!r}")
    idx = np.unique(np.asarray(list(endpoints), dtype=int))
    if idx.size == 0 or idx[0] < 2 or idx[-1] > n:
        raise ValueError("endpoint indices must lie in [2, n]")
    return idx


@dataclass(frozen=True)
class LambdaReport:
    """Diagnostic companion to ``lambda_alpha``."""

    value: float
    attained_s: float
    attained_t: float
    endpoint_mode: str
    upper_bound: float


def lambda_alpha(
    g: GridPath,
    alpha: Union[FracOrder, float],
    endpoints: Union[str, Sequence[int]] = "decimated",
) -> float:
    """sup over (s, t) of the pinned right-sided derivative, scaled by Gamma(1-alpha).

    The supremum over right endpoints t runs over ``endpoints``: the
    default decimated mode uses ceil(sqrt(n)) grid times plus the horizon
    (a lower bound on the full supremum); pass "all" for every grid time.
    """
    value, _, _ = _lambda_alpha_impl(g, alpha, endpoints)
    return value


def _lambda_alpha_impl(g, alpha, endpoints) -> tuple[float, int, int]:
    a = _alpha_value(alpha, upper=0.5)
    n = g.n_steps
    idx = _endpoint_indices(n, endpoints)
    scale = 1.0 / math.gamma(1.0 - a)
    best = 0.0
    best_pair = (0, int(idx[-1]))
    for j in idx:
        mags = _pinned_right_derivative_magnitude(g.values[: j + 1], a, g.step)
        interior = mags[1:j]  # k = j (s = start) and k = 0 (s = t) are excluded
        if interior.size == 0:
            continue
        k = int(np.argmax(interior)) + 1
        peak = scale * interior[k - 1]
        if peak > best:
            best = peak
            best_pair = (j - k, j)
    if not np.isfinite(best):
        raise RegularityError("right-sided derivative diverged; the driver is too rough for this order")
    return float(best), best_pair[0], best_pair[1]


def lambda_alpha_report(
    g: GridPath,
    alpha: Union[FracOrder, float],
    endpoints: Union[str, Sequence[int]] = "decimated",
) -> LambdaReport:
    """Value plus the attaining pair and the norm-based upper bound.

    The attaining (s, t) pair is diagnostic only; nothing is claimed about
    its behaviour under refinement.
    """
    a = _alpha_value(alpha, upper=0.5)
    value, s_idx, t_idx = _lambda_alpha_impl(g, alpha, endpoints)
    bound = w_one_minus_alpha_norm(g, a) / (math.gamma(1.0 - a) * math.gamma(a))
    mode = endpoints if isinstance(endpoints, str) else "explicit"
    return LambdaReport(
        value=value,
        attained_s=float(g.times[s_idx]),
        attained_t=float(g.times[t_idx]),
        endpoint_mode=mode,
        upper_bound=float(bound),
    )
