"""
Quadrature utility functions for the insulation laboratory.
"""

import logging
import typing as t
from functools import lru_cache

import numpy as np

logger = logging.getLogger(__name__)


@lru_cache(maxsize=None)
def gauss_legendre_unit(order: int) -> t.Tuple[np.ndarray, np.ndarray]:
    """
    Gauss-Legendre nodes and weights mapped to [0, 1].

    Args:
        order: Number of points

    Returns:
        (nodes, weights), each of shape (order,)
    """
    x, w = np.polynomial.legendre.leggauss(order)
    return 0.5 * (x + 1.0), 0.5 * w


def integrate_unit_segments(integrand: t.Callable[[np.ndarray], np.ndarray],
                            rtol: float = 1e-13,
                            start_order: int = 4,
                            max_order: int = 1024) -> np.ndarray:
    """
    Integrate a batch of functions over [0, 1] with Gauss-Legendre rules of
    doubling order until the relative increment drops below rtol.

    Args:
        integrand: Maps reference points of shape (1, q) to values of shape
            (n, q) or (n, q, k) for n independent integrands
        rtol: Relative increment that stops the doubling
        start_order: First rule order
        max_order: Largest rule order tried

    Returns:
        Integrals of shape (n,) or (n, k)
    """
    def rule(order):
        x, w = gauss_legendre_unit(order)
        vals = integrand(x[None, :])
        return np.tensordot(vals, w, axes=([1], [0])) if vals.ndim == 2 \
            else np.einsum("nqk,q->nk", vals, w)

    order = start_order
    previous = rule(order)
    while order < max_order:
        order *= 2
        current = rule(order)
        increment = np.abs(current - previous)
        scale = np.maximum(np.abs(current), np.finfo(float).tiny)
        if np.all(increment <= rtol * scale + 1e-300):
            return current
        previous = current
    logger.warning(f"Gauss-Legendre doubling stopped at order {max_order} "
                   f"with relative increment {float(np.max(increment / scale)):.2e}")
    return previous
