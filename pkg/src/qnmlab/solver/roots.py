"""Small complex-plane root utilities for the pole searches."""

import numpy as np

from ..core import PoleSearchError


def secant_root(f, z0, rel_tol=1e-10, max_iter=40, basin_radius=None,
                first_step=1e-4):
    """Secant iteration for a root of ``f`` near ``z0`` in the complex plane.

    Stops when the step falls below ``rel_tol * |z|``.  Iterates leaving the
    disk of ``basin_radius`` around ``z0`` abort the search.
    """
    if basin_radius is None:
        basin_radius = 0.5 * abs(z0)
    z_prev = z0
    z = z0 * (1.0 + first_step * (1.0 + 0.5j))
    f_prev = f(z_prev)
    f_cur = f(z)
    history = [z_prev, z]
    for _ in range(max_iter):
        denom = f_cur - f_prev
        if denom == 0:
            raise PoleSearchError(f"secant stalled at {z}")
        step = f_cur * (z - z_prev) / denom
        z_prev, f_prev = z, f_cur
        z = z - step
        history.append(z)
        if abs(z - z0) > basin_radius:
            raise PoleSearchError(
                f"iterate {z} left the search basin of radius "
                f"{basin_radius:.3g} around {z0}; trajectory: {history}")
        if abs(step) <= rel_tol * abs(z):
            return z, history
        f_cur = f(z)
    raise PoleSearchError(
        f"no root found within {max_iter} iterations near {z0}; "
        f"trajectory: {history}")


def winding_number(f, center, radius, n_samples=64):
    """Winding of ``f`` around a circle: zeros minus poles inside (argument
    principle, assuming none sit on the contour)."""
    th = 2 * np.pi * (np.arange(n_samples) + 0.5) / n_samples
    vals = np.array([f(center + radius * np.exp(1j * t)) for t in th])
    dphase = np.angle(vals[np.r_[1:n_samples, 0]] / vals)
    return int(round(np.sum(dphase) / (2 * np.pi)))


def distinct_roots(f, seeds, rel_tol=1e-9, merge_tol=1e-6, basin_radius=None,
                   center=None):
    """Run secant from several seeds and merge the distinct converged roots."""
    roots = []
    for s in seeds:
        try:
            z, _ = secant_root(f, s, rel_tol=rel_tol,
                               basin_radius=basin_radius or 10 * abs(s))
        except PoleSearchError:
            continue
        if center is not None and basin_radius is not None \
                and abs(z - center) > basin_radius:
            continue
        if not any(abs(z - r) <= merge_tol * abs(z) for r in roots):
            roots.append(z)
    return roots
