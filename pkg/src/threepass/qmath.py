"""Entropy functions and Bell-mixture algebra shared by the analysis modules.

Channel noise is parameterized by a symmetric QBER ``e`` acting identically in
both mutually unbiased bases.  A two-qubit state subjected to that noise is
Bell diagonal with weights (mu1, mu2, mu3, mu4); the linear constraints

    mu3 + mu4 = e,   mu2 + mu4 = e,   mu1 + mu2 = 1 - e,   mu1 + mu3 = 1 - e

leave one free parameter, conventionally mu4 in [0, e].  The eavesdropper's
conditional states sigma_E^k derived from a purification of that mixture are
4x4 and block diagonal in the ancilla basis; their spectral entropies drive
the collective-attack bounds in :mod:`threepass.secrate`.

All entropies are in bits (base-2 logarithms) and 0*log(0) is taken to be 0.
Every function here is pure; concurrent use is safe.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

# Eigenvalues of a density matrix may drift slightly negative under finite
# precision.  Values in [-PSD_DRIFT, 0) are clamped to 0; anything more
# negative is treated as a genuine invariant violation.
PSD_DRIFT = 1e-10
# Eigenvalues below this are treated as exact zeros in the entropy sum.
EIGENVALUE_FLOOR = 1e-12

_SUM_TOL = 1e-12


def binary_entropy(p: float) -> float:
    """Shannon entropy, in bits, of a {p, 1-p} distribution."""
    if not 0.0 <= p <= 1.0:
        raise ValueError(f"binary_entropy requires p in [0, 1], got {p}")
    if p == 0.0 or p == 1.0:
        return 0.0
    return -p * math.log2(p) - (1.0 - p) * math.log2(1.0 - p)


def validate_qber(e: float) -> float:
    """Check that ``e`` is a valid symmetric QBER, i.e. lies in [0, 1/2]."""
    if not 0.0 <= e <= 0.5:
        raise ValueError(f"QBER must lie in [0, 0.5], got {e}")
    return float(e)


@dataclass(frozen=True)
class BellMixture:
    """Probabilities of the four Bell projectors in a Bell-diagonal state.

    Components must be nonnegative and sum to one (within 1e-12).
    """

    mu1: float
    mu2: float
    mu3: float
    mu4: float

    def __post_init__(self) -> None:
        mus = (self.mu1, self.mu2, self.mu3, self.mu4)
        if any(m < -_SUM_TOL for m in mus):
            raise ValueError(f"Bell mixture components must be >= 0, got {mus}")
        total = sum(mus)
        if abs(total - 1.0) > 1e-12:
            raise ValueError(f"Bell mixture must sum to 1 within 1e-12, got {total!r}")

    def as_array(self) -> np.ndarray:
        return np.array([self.mu1, self.mu2, self.mu3, self.mu4], dtype=float)


@dataclass(frozen=True)
class DensityMatrix4:
    """A 4x4 Hermitian, unit-trace, positive-semidefinite matrix."""

    matrix: np.ndarray

    def __post_init__(self) -> None:
        m = np.asarray(self.matrix, dtype=complex)
        if m.shape != (4, 4):
            raise ValueError(f"expected a 4x4 matrix, got shape {m.shape}")
        if not np.allclose(m, m.conj().T, atol=1e-12, rtol=0.0):
            raise ValueError("density matrix must be Hermitian within 1e-12")
        tr = float(np.trace(m).real)
        if abs(tr - 1.0) > 1e-12:
            raise ValueError(f"density matrix trace must be 1 within 1e-12, got {tr!r}")
        if np.linalg.eigvalsh(m).min() < -PSD_DRIFT:
            raise ValueError("density matrix has an eigenvalue below -1e-10")
        object.__setattr__(self, "matrix", m)


def mixture_from_qber(e: float, mu4: float) -> BellMixture:
    """Bell mixture (1-2e+mu4, e-mu4, e-mu4, mu4) for symmetric QBER ``e``.

    ``mu4`` is the free parameter of the constraint system and must lie in
    [0, e].
    """
    e = validate_qber(e)
    if not 0.0 <= mu4 <= e:
        raise ValueError(f"mu4 must lie in [0, e={e}], got {mu4}")
    return BellMixture(1.0 - 2.0 * e + mu4, e - mu4, e - mu4, mu4)


def hv_entropy(mix: BellMixture) -> float:
    """Shannon entropy, in bits, of the four-outcome Bell-projector distribution."""
    total = 0.0
    for m in mix.as_array():
        if m > 0.0:
            total -= m * math.log2(m)
    return total


def maximizing_mu4(e: float) -> float:
    """The mu4 in [0, e] that maximizes :func:`hv_entropy`, namely e**2.

    At this choice the mixture entropy equals ``2 * binary_entropy(e)``.
    """
    e = validate_qber(e)
    return e * e


def von_neumann_entropy(rho: DensityMatrix4 | np.ndarray) -> float:
    """Spectral entropy -sum(lam * log2(lam)) of a density matrix, in bits.

    Eigenvalues below 1e-12 are treated as exact zeros; eigenvalues in
    [-1e-10, 0) are clamped to zero.  A matrix with an eigenvalue below
    -1e-10 violates the PSD invariant and raises ValueError.
    """
    m = rho.matrix if isinstance(rho, DensityMatrix4) else np.asarray(rho, dtype=complex)
    eigs = np.linalg.eigvalsh(m)
    if eigs.min() < -PSD_DRIFT:
        raise ValueError(f"matrix is not PSD: min eigenvalue {eigs.min()}")
    out = 0.0
    for lam in eigs:
        if lam > EIGENVALUE_FLOOR:
            out -= lam * math.log2(lam)
    return out


def eve_state(mix: BellMixture, k: int) -> DensityMatrix4:
    """Eavesdropper's conditional 4x4 state for sifted-key bit ``k``.

    Constructed from the subnormalized ancilla-register states accepted by
    the sifting rule, mixed with weights 1/3, 1/3, 1/6, 1/6 and renormalized
    to unit trace.  The result is block diagonal in the ancilla basis:

        [[mu1, s*sqrt(mu1*mu2)], [s*sqrt(mu1*mu2), mu2]]  (upper block)
        [[mu3, s*sqrt(mu3*mu4)], [s*sqrt(mu3*mu4), mu4]]  (lower block)

    with s = (-1)**k.  Note the lower block couples mu3 and mu4; the two
    conditional states are isospectral and related by diag(1, -1, 1, -1).
    """
    if k not in (0, 1):
        raise ValueError(f"k must be 0 or 1, got {k}")
    mu = np.maximum(mix.as_array(), 0.0)
    r = np.sqrt(mu)
    s = -1.0 if k else 1.0
    # Subnormalized register states conditioned on bit k; squared norms are
    # the branch probabilities, so the weighted mixture has trace 1/4.
    v_same = np.array([r[0], s * r[1], 0.0, 0.0]) / math.sqrt(2.0)
    v_flip = np.array([0.0, 0.0, r[2], s * r[3]]) / math.sqrt(2.0)
    v_plus = np.array([r[0], s * r[1], r[2], s * r[3]]) / 2.0
    v_minus = np.array([r[0], s * r[1], -r[2], -s * r[3]]) / 2.0
    m = (np.outer(v_same, v_same) + np.outer(v_flip, v_flip)) / 3.0
    m += (np.outer(v_plus, v_plus) + np.outer(v_minus, v_minus)) / 6.0
    m *= 4.0
    return DensityMatrix4(m.astype(complex))


def reconditioned_entropy(e: float, mu4: float) -> float:
    """Mixture entropy after conditioning on the error indicator.

    Returns ``(1-e) h((1-2e+mu4)/(1-e)) + e h((e-mu4)/e)`` which equals
    ``hv_entropy(mixture_from_qber(e, mu4)) - binary_entropy(e)``.
    Boundary values mu4 in {0, e} and e in {0} are handled by continuity.
    """
    e = validate_qber(e)
    if not 0.0 <= mu4 <= e:
        raise ValueError(f"mu4 must lie in [0, e={e}], got {mu4}")
    out = 0.0
    if e < 1.0:
        out += (1.0 - e) * binary_entropy((1.0 - 2.0 * e + mu4) / (1.0 - e))
    if e > 0.0:
        out += e * binary_entropy((e - mu4) / e)
    return out
