"""Product-integration rules for power-law kernels on uniform grids.

Every singular integral in this package has the shape

    integral of  phi(y) * u(y)**p  dy

where ``u`` is the distance to the singular point and ``phi`` is known at
the grid nodes.  The rules below integrate the kernel exactly against the
piecewise-linear interpolant of ``phi``, which keeps Riemann sums from
diverging near the singularity and is exact whenever ``phi`` is affine.

Cell moments, for the cell at distance ``g`` steps from the singularity
(``u`` in ``[(g-1)h, g*h]``):

    I0(g) = integral u**p du
    I1(g) = integral u**p (u - (g-1)h) du

Node weights inside one cell: the node nearer the singularity gets
``gamma(g) = I0(g) - I1(g)/h`` and the farther node gets
``beta(g) = I1(g)/h``.  For p <= -1 the first cell's ``gamma(1)`` is
infinite, so those rules require ``phi`` to vanish at the singular node
(always true for increment integrands).
"""

from __future__ import annotations

import numpy as np
from scipy.signal import fftconvolve


def cell_weights(p: float, h: float, gmax: int) -> tuple[np.ndarray, np.ndarray]:
    """Per-cell node weights (beta, gamma) for the kernel u**p, cells g = 1..gmax.

    Returned arrays are indexed by g; entry 0 is unused and set to 0.
    ``gamma[1]`` is +inf when p <= -1 (callers must pair it with a zero
    node value).  Requires p > -2 and p != -1.
    """
    if p <= -2.0 or p == -1.0:
        raise ValueError(f"kernel exponent p={p} outside the supported range (-2, -1) U (-1, inf)")
    g = np.arange(gmax + 1, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        gp1 = g ** (p + 1.0)
        gp2 = g ** (p + 2.0)
        d0 = (gp1[1:] - gp1[:-1]) / (p + 1.0)
        d1 = (gp2[1:] - gp2[:-1]) / (p + 2.0) - g[:-1] * d0
    # 0**(p+1) = inf for p < -1: first cell's constant moment diverges
    beta = np.zeros(gmax + 1)
    gamma = np.zeros(gmax + 1)
    scale = h ** (p + 1.0)
    beta[1:] = scale * d1
    gamma[1:] = scale * (d0 - d1)
    if p < -1.0:
        gamma[1] = np.inf
        beta[1] = scale / (p + 2.0)
    return beta, gamma


def weighted_integral(phi: np.ndarray, p: float, h: float) -> float:
    """Integral of phi(u) * u**p over [0, n*h], singularity at u = 0.

    ``phi`` holds node values on the uniform grid.  For p <= -1 the value
    at the singular node must be exactly 0.
    """
    phi = np.asarray(phi, dtype=float)
    n = phi.shape[0] - 1
    if n < 1:
        raise ValueError("need at least one cell")
    beta, gamma = cell_weights(p, h, n)
    if p <= -1.0:
        if phi[0] != 0.0:
            raise ValueError("kernel u**p with p <= -1 requires phi(0) = 0")
        first = phi[1] * beta[1]
    else:
        first = phi[0] * gamma[1] + phi[1] * beta[1]
    rest = phi[1:-1] @ gamma[2:] + phi[2:] @ beta[2:] if n > 1 else 0.0
    return float(first + rest)


def kernel_profile(values: np.ndarray, p: float, h: float) -> np.ndarray:
    """All prefix integrals  I[k] = integral_0^{t_k} f(y) (t_k - y)**p dy.

    Exact for piecewise-linear f; computed as one FFT convolution.
    Requires p > -1.  ``values`` may be (n+1,) or (n+1, d); the result has
    the same shape.
    """
    if p <= -1.0:
        raise ValueError("kernel_profile requires p > -1; use increment_profile for stronger singularities")
    vals = np.asarray(values, dtype=float)
    scalar = vals.ndim == 1
    f = vals[:, None] if scalar else vals
    n = f.shape[0] - 1
    beta, gamma = cell_weights(p, h, n + 1)
    c = np.zeros(n + 1)
    c[0] = gamma[1]
    c[1:] = beta[1:-1] + gamma[2:]
    out = fftconvolve(f, c[:, None], axes=0)[: n + 1]
    out -= f[0] * gamma[np.arange(1, n + 2)][:, None]
    out[0] = 0.0  # empty integral; clears FFT residue
    return out[:, 0] if scalar else out


def increment_profile(values: np.ndarray, p: float, h: float) -> np.ndarray:
    """All prefix integrals  I[k] = integral_0^{t_k} (f(t_k) - f(y)) (t_k - y)**p dy.

    Signed increments, p in (-2, -1); the integrand vanishes at the
    singular endpoint y = t_k, which keeps the first cell finite.
    """
    if not (-2.0 < p < -1.0):
        raise ValueError(f"increment_profile requires p in (-2, -1), got {p}")
    vals = np.asarray(values, dtype=float)
    scalar = vals.ndim == 1
    f = vals[:, None] if scalar else vals
    n = f.shape[0] - 1
    beta, gamma = cell_weights(p, h, n + 1)
    k = np.arange(n + 1, dtype=float)
    t = k * h
    with np.errstate(divide="ignore", invalid="ignore"):
        w_total = (t ** (p + 1.0) - h ** (p + 1.0)) / (p + 1.0) + beta[1]
    w_total[0] = 0.0
    cp = np.zeros(n + 1)
    cp[1:] = beta[1:-1] + gamma[2:]
    s = fftconvolve(f, cp[:, None], axes=0)[: n + 1]
    corr = np.zeros(n + 1)
    corr[1:] = gamma[2:]  # row k subtracts f(0) * gamma(k+1); row 0 is zeroed below
    s[1:] -= f[0] * corr[1:, None]
    out = f * w_total[:, None] - s
    out[0] = 0.0
    return out[:, 0] if scalar else out


def abs_increment_profile(values: np.ndarray, p: float, h: float, chunk: int = 256) -> np.ndarray:
    """All prefix integrals  I[k] = integral_0^{t_k} |f(t_k) - f(y)| (t_k - y)**p dy.

    The absolute value (Euclidean over components) breaks the convolution
    structure, so this runs the O(n^2) product-integration sum in row
    chunks.  p in (-2, -1).
    """
    if not (-2.0 < p < -1.0):
        raise ValueError(f"abs_increment_profile requires p in (-2, -1), got {p}")
    vals = np.asarray(values, dtype=float)
    f = vals[:, None] if vals.ndim == 1 else vals
    n = f.shape[0] - 1
    beta, gamma = cell_weights(p, h, n + 1)
    cp = np.zeros(n + 2)
    cp[1:-1] = beta[1:-1] + gamma[2:]
    out = np.zeros(n + 1)
    j = np.arange(n + 1)
    for k0 in range(1, n + 1, chunk):
        k1 = min(k0 + chunk, n + 1)
        rows = np.arange(k0, k1)
        d = np.linalg.norm(f[rows, None, :] - f[None, :k1, :], axis=-1)
        gap = rows[:, None] - j[None, :k1]
        w = np.where(gap >= 1, cp[np.clip(gap, 0, n + 1)], 0.0)
        # node j = 0 carries beta(k) only, not beta(k)+gamma(k+1)
        w[:, 0] = beta[np.clip(rows, 0, n)]
        out[k0:k1] = np.einsum("kj,kj->k", d, w)
    return out
