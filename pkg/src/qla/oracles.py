"""Independent reference solvers used to check the lattice schemes.

Both are pseudo-spectral on a periodic grid with an integrating factor for the
linear part and classical RK4 for the rest; they share no code with the lattice.
"""
from __future__ import annotations

from typing import Callable, Optional

import numpy as np

__all__ = ["kdv_spectral", "maxwell_1d_spectral", "wavenumbers"]


def wavenumbers(n: int, length: float) -> np.ndarray:
    return 2.0 * np.pi * np.fft.rfftfreq(n, d=length / n)


def kdv_spectral(
    psi0: np.ndarray,
    length: float,
    a: float,
    b: float,
    t_end: float,
    dt: float,
    forcing: Optional[Callable[[np.ndarray, np.ndarray], np.ndarray]] = None,
) -> np.ndarray:
    """Integrate ``psi_t + a psi psi_x + b psi_xxx = 0`` (or ``psi_t + b psi_xxx = -forcing``).

    ``forcing(psi, psi_x)`` replaces the ``a psi psi_x`` term when given, so
    variable-coefficient forms such as ``m(x) psi`` can be checked too.
    """
    n = psi0.size
    k = wavenumbers(n, length)
    lin = 1j * b * k ** 3  # exact solution of psi_t = -b psi_xxx is exp(i b k^3 t)
    dealias = np.abs(k) < (2.0 / 3.0) * np.max(np.abs(k)) if forcing is None else np.ones_like(k, dtype=bool)

    def nonlinear(vhat, t):
        uhat = vhat * np.exp(lin * t)
        u = np.fft.irfft(uhat, n)
        ux = np.fft.irfft(1j * k * uhat, n)
        term = forcing(u, ux) if forcing is not None else a * u * ux
        return -np.fft.rfft(term) * dealias * np.exp(-lin * t)

    steps = max(1, int(np.ceil(t_end / dt - 1e-12)))
    h = t_end / steps
    v = np.fft.rfft(psi0)
    t = 0.0
    for _ in range(steps):
        k1 = nonlinear(v, t)
        k2 = nonlinear(v + 0.5 * h * k1, t + 0.5 * h)
        k3 = nonlinear(v + 0.5 * h * k2, t + 0.5 * h)
        k4 = nonlinear(v + h * k3, t + h)
        v = v + (h / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)
        t += h
    return np.fft.irfft(v * np.exp(lin * t), n)


def maxwell_1d_spectral(q: np.ndarray, length: float, t_end: float, n_y: float = 1.0, n_z: float = 1.0) -> np.ndarray:
    """Exact spectral solution of the x-only uniform-medium system on ``q`` (shape ``(6, N)``).

    With no y dependence and constant n the equations decouple into the pairs
    ``q1_t = -q5_x / n_y, q5_t = -q1_x / n_y`` and ``q2_t = q4_x / n_z,
    q4_t = q2_x / n_z``; ``q0`` and ``q3`` are constant.
    """
    n = q.shape[1]
    k = wavenumbers(n, length)
    out = q.copy()

    def pair(u, v, sign):
        # u_t = sign v_x, v_t = sign u_x (sign carries the speed): r = u + v, l = u - v
        r = np.fft.rfft(u + v)
        l = np.fft.rfft(u - v)
        r = r * np.exp(1j * k * sign * t_end)
        l = l * np.exp(-1j * k * sign * t_end)
        rr = np.fft.irfft(r, n)
        ll = np.fft.irfft(l, n)
        return 0.5 * (rr + ll), 0.5 * (rr - ll)

    out[1], out[5] = pair(q[1], q[5], -1.0 / n_y)
    out[2], out[4] = pair(q[2], q[4], 1.0 / n_z)
    return out
