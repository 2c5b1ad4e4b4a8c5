"""Stieltjes transform of the semicircle law and the kernel building block."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = ["MIN_IMAG", "KPoint", "g_sc", "g_sc_prime", "k_point"]

# points closer to the real axis than this are rejected: the limit process
# lives off the real line and quadrature degrades near the branch cut
MIN_IMAG = 1e-8


def _check_z(z: complex) -> complex:
    z = complex(z)
    if abs(z.imag) < MIN_IMAG:
        raise ValueError(f"z must satisfy |Im z| >= {MIN_IMAG}, got {z}")
    return z


def g_sc(z: complex) -> complex:
    """Stieltjes transform of the semicircle law on [-2, 2].

    Returns the root of G^2 - z G + 1 = 0 with |G| < 1, i.e. the branch
    behaving like 1/z at infinity.  The two roots multiply to 1, so the
    selection is unambiguous off the real axis, and sign(Im G) = -sign(Im z).
    """
    z = _check_z(z)
    r = np.sqrt(z * z - 4.0 + 0j)
    g = (z - r) / 2.0
    if abs(g) >= 1.0:
        g = (z + r) / 2.0
    return complex(g)


def g_sc_prime(z: complex) -> complex:
    """Derivative of g_sc, from differentiating G^2 - z G + 1 = 0: G/(2G - z)."""
    z = _check_z(z)
    G = g_sc(z)
    return G / (2.0 * G - z)


@dataclass(frozen=True)
class KPoint:
    """Exponent building block K(z, t) = sign(Im z) * i * t * g_sc(z).

    Re K > 0 for every t > 0, which keeps all fractional powers taken of K
    (and of sums of two such values) away from the branch cut.  K is exactly
    linear in t.
    """

    z: complex
    t: float
    K: complex
    K_dz: complex

    def __post_init__(self):
        if self.K.real <= 0.0:
            raise ValueError(f"Re K must be positive, got {self.K}")


def k_point(z: complex, t: float) -> KPoint:
    """Evaluate K(z, t) and its z-derivative."""
    z = _check_z(z)
    if t <= 0.0:
        raise ValueError("t must be positive")
    sz = 1.0 if z.imag > 0 else -1.0
    K = sz * 1j * t * g_sc(z)
    K_dz = sz * 1j * t * g_sc_prime(z)
    return KPoint(z=z, t=float(t), K=complex(K), K_dz=complex(K_dz))
