"""Eigenvalues, resolvent traces, and the minor/quadratic-form diagnostics."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import lu_factor, lu_solve

from wignerlab.ensemble import MatrixSample
from wignerlab.heavytail import (
    DistSpec,
    sample_array,
    truncated_fourth_moment,
    truncation_params,
)
from wignerlab.semicircle import g_sc

__all__ = [
    "SpectralTrace",
    "LeaveOneOut",
    "eigenvalues",
    "trace_resolvent",
    "trace_over_grid",
    "resolvent_diag",
    "leave_one_out",
    "fk_statistic",
    "quadratic_form_stats",
    "diag_concentration",
    "TRACE_CSV_HEADER",
    "trace_csv_rows",
]


@dataclass
class SpectralTrace:
    """Per-replicate resolvent traces over a z grid."""

    z_grid: np.ndarray
    traces: np.ndarray
    replicate_index: int
    N: int
    diag: np.ndarray | None = None


def _check_im(z: complex) -> complex:
    z = complex(z)
    if z.imag == 0.0:
        raise ValueError("resolvent quantities need Im z != 0")
    return z


def eigenvalues(sample: MatrixSample) -> np.ndarray:
    """Ascending real spectrum of the Hermitian sample."""
    A = sample.entries
    if not np.isfinite(A).all():
        raise ValueError("matrix contains non-finite entries")
    return np.linalg.eigvalsh(A)


def trace_resolvent(eigs: np.ndarray, z: complex) -> complex:
    """Tr (z - A)^{-1} = sum_i 1/(z - lambda_i)."""
    z = _check_im(z)
    return complex(np.sum(1.0 / (z - np.asarray(eigs))))


def trace_over_grid(eigs: np.ndarray, z_grid) -> np.ndarray:
    """Vector of resolvent traces over a grid of complex points."""
    eigs = np.asarray(eigs)
    out = np.empty(len(z_grid), dtype=complex)
    for k, z in enumerate(z_grid):
        out[k] = trace_resolvent(eigs, z)
    return out


def resolvent_diag(sample: MatrixSample, z: complex) -> np.ndarray:
    """Diagonal of (z - A)^{-1} by direct factorization and solve."""
    z = _check_im(z)
    A = sample.entries
    N = A.shape[0]
    M = z * np.eye(N, dtype=complex) - A
    G = np.linalg.solve(M, np.eye(N, dtype=complex))
    return G.diagonal().copy()


@dataclass(frozen=True)
class LeaveOneOut:
    """Trace difference against its closed rank-one form."""

    lhs: complex            # Tr G - Tr G^{(k)} from two spectra
    rhs: complex            # (1 + a* G_k^2 a) / (z - h_kk - a* G_k a)
    bound_ok: bool          # |lhs| <= pi / |Im z|
    denom_sign_ok: bool     # Im of the denominator keeps the sign of Im z
    denom_mag_ok: bool      # ... and has magnitude >= |Im z|


def leave_one_out(sample: MatrixSample, z: complex, k: int) -> LeaveOneOut:
    """Compare Tr G - Tr G^{(k)} with the closed form through the minor.

    The left side comes from two independent eigensolves (full matrix and
    the k-th principal minor); the right side from factorizing z - A^{(k)}
    once and solving twice.  Index k is 0-based.
    """
    z = _check_im(z)
    A = sample.entries
    N = A.shape[0]
    if not 0 <= k < N:
        raise IndexError("row index out of range")
    idx = np.arange(N) != k
    Ak = A[np.ix_(idx, idx)]
    a = A[idx, k]

    lhs = trace_resolvent(np.linalg.eigvalsh(A), z) - trace_resolvent(np.linalg.eigvalsh(Ak), z)

    M = z * np.eye(N - 1, dtype=complex) - Ak
    lu = lu_factor(M)
    w1 = lu_solve(lu, a.astype(complex))
    w2 = lu_solve(lu, w1)
    aGa = np.vdot(a, w1)
    aG2a = np.vdot(a, w2)
    denom = z - A[k, k] - aGa
    rhs = (1.0 + aG2a) / denom

    tol = 1e-12 * abs(z.imag)
    bound_ok = bool(abs(lhs) <= np.pi / abs(z.imag) * (1.0 + 1e-9))
    denom_sign_ok = bool(np.sign(denom.imag) == np.sign(z.imag))
    denom_mag_ok = bool(abs(denom.imag) >= abs(z.imag) - tol)
    return LeaveOneOut(lhs=complex(lhs), rhs=complex(rhs), bound_ok=bound_ok,
                       denom_sign_ok=denom_sign_ok, denom_mag_ok=denom_mag_ok)


def fk_statistic(sample: MatrixSample, z: complex, k: int):
    """Full versus diagonal-only minor quadratic-form statistic.

    full      = (1 + a*(G_k^2)a) / (z - a_kk - a* G_k a)
    diag_only = (1 + sum_j |a_j|^2 (G_k^2)_jj) / (z - sum_j |a_j|^2 (G_k)_jj)

    Both come from a single eigendecomposition of the minor.  Their gap
    shrinking with N is the observable trace of the off-diagonal terms
    becoming negligible.
    """
    z = _check_im(z)
    A = sample.entries
    N = A.shape[0]
    if not 0 <= k < N:
        raise IndexError("row index out of range")
    idx = np.arange(N) != k
    Ak = A[np.ix_(idx, idx)]
    a = A[idx, k]

    lam, V = np.linalg.eigh(Ak)
    w1 = 1.0 / (z - lam)
    coeff = V.conj().T @ a
    aGa = np.sum(np.abs(coeff) ** 2 * w1)
    aG2a = np.sum(np.abs(coeff) ** 2 * w1**2)
    full = (1.0 + aG2a) / (z - A[k, k] - aGa)

    absV2 = np.abs(V) ** 2
    G_jj = absV2 @ w1
    G2_jj = absV2 @ w1**2
    p = np.abs(a) ** 2
    diag_only = (1.0 + np.sum(p * G2_jj)) / (z - np.sum(p * G_jj))
    return {"full": complex(full), "diag_only": complex(diag_only)}


def quadratic_form_stats(G: np.ndarray, dist: DistSpec, N_draws: int,
                         rng: np.random.Generator, epsilon: float = 0.01):
    """Monte Carlo moments of the off-diagonal and diagonal quadratic forms.

    Draws vectors with i.i.d. entries from the cut, centered, rescaled law
    (variance 1/N) and estimates E|X|^2 and E|E|^2 for

        X = sum_{i != j} G_ij conj(a_i) a_j
        E = sum_i G_ii |a_i|^2 - Tr G / N,

    together with the deterministic bounds they are expected to respect:
    boundX = 2 Tr(G G*) / N^2 exactly, and boundE = 10 C ||G||^2 N^(-alpha^2/16
    + eps (4 - alpha)) with C calibrated from the exact fourth moment of the
    cut law (the check is self-consistent, not absolute).
    """
    G = np.asarray(G)
    N = G.shape[0]
    trunc = truncation_params(dist, N, epsilon)
    raw = sample_array(dist, rng, N_draws * N).reshape(N_draws, N)
    cut = np.where(np.abs(raw) <= trunc.threshold, raw, 0.0)
    a = (cut - trunc.muN) / (trunc.sigmaN * np.sqrt(N))

    diagG = G.diagonal()
    G_off = G - np.diag(diagG)
    X = np.einsum("mi,ij,mj->m", a.conj(), G_off, a)
    E = (np.abs(a) ** 2) @ diagG - np.trace(G) / N

    a_exp = -dist.alpha**2 / 16.0 + epsilon * (4.0 - dist.alpha)
    fourth = truncated_fourth_moment(dist, trunc.threshold)
    e_abs4 = fourth / (trunc.sigmaN**4 * N**2)
    C_meas = N**2 * e_abs4 / float(N) ** (1.0 + a_exp)
    norm2 = np.linalg.norm(G, 2)
    return {
        "EX2_hat": float(np.mean(np.abs(X) ** 2)),
        "EE2_hat": float(np.mean(np.abs(E) ** 2)),
        "boundX": float(2.0 / N**2 * np.real(np.trace(G @ G.conj().T))),
        "boundE": float(10.0 * C_meas * norm2**2 * float(N) ** a_exp),
    }


def diag_concentration(samples, z: complex):
    """Ensemble mean of max_j |G_jj - g_sc(z)|, grouped by dimension."""
    z = _check_im(z)
    ref = g_sc(z)
    sums: dict[int, float] = {}
    counts: dict[int, int] = {}
    for sample in samples:
        dev = float(np.abs(resolvent_diag(sample, z) - ref).max())
        N = sample.config.N
        sums[N] = sums.get(N, 0.0) + dev
        counts[N] = counts.get(N, 0) + 1
    return {N: sums[N] / counts[N] for N in sorted(sums)}


TRACE_CSV_HEADER = "replicate,N,alpha,mode,re_z,im_z,re_trg,im_trg"


def trace_csv_rows(trace: SpectralTrace, alpha: float, mode: str):
    """Format one trace record as CSV rows (full double precision)."""
    rows = []
    for z, t in zip(trace.z_grid, trace.traces):
        z, t = complex(z), complex(t)
        rows.append(f"{trace.replicate_index},{trace.N},{alpha!r},{mode},"
                    f"{z.real!r},{z.imag!r},{t.real!r},{t.imag!r}")
    return rows
