"""Exact solution of the quadratic fermion problem in the Majorana basis.

Any Hermitian-closed quadratic term list maps to H = (i/4) gamma^T A gamma
+ offset with A real and antisymmetric.  Majorana ordering per site j:

    4(j-1) + 0: gamma_{j,A}   4(j-1) + 1: gamma_{j,B}
    4(j-1) + 2: gbar_{j,A}    4(j-1) + 3: gbar_{j,B}

Eigenvalues of A come in pairs +-(i lambda); lambda is the fermion-mode
energy (excitation cost), and the symmetric single-particle spectrum is
the eigenvalue set of iA/2, i.e. +-lambda/2.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .chain import MINUS, PLUS, ChainSpec, FermionTermList, build_diii_terms

DEFAULT_ZERO_FACTOR = 1e-10


def majorana_index(j: int, leg: str, part: str) -> int:
    """Index of the Majorana (part in {'A','B'}) of site j on the given leg."""
    base = 4 * (j - 1)
    if leg == PLUS:
        return base + (0 if part == "A" else 1)
    if leg == MINUS:
        return base + (2 if part == "A" else 3)
    raise ValueError(f"unknown leg {leg!r}")


def _mode_decomposition(j: int, leg: str) -> dict[int, complex]:
    """Coefficients U with f = sum_m U[m] gamma_m for the (j, leg) mode.

    '+' leg: a = (gamma_B - i gamma_A)/2
    '-' leg: abar = (gbar_A + i gbar_B)/2
    """
    if leg == PLUS:
        return {
            majorana_index(j, leg, "B"): 0.5,
            majorana_index(j, leg, "A"): -0.5j,
        }
    return {
        majorana_index(j, leg, "A"): 0.5,
        majorana_index(j, leg, "B"): 0.5j,
    }


@dataclass
class MajoranaMatrix:
    """Real antisymmetric quadratic form plus the scalar offset."""

    a: np.ndarray
    offset: float
    n_sites: int

    def __post_init__(self):
        asym = 0.5 * (self.a - self.a.T)
        if not np.allclose(self.a, asym, atol=1e-12):
            raise ValueError("Majorana matrix must be antisymmetric")
        self.a = asym  # enforce exactly


def build_majorana_matrix(terms: FermionTermList) -> MajoranaMatrix:
    """Assemble A and the offset from a Hermitian-closed term list."""
    if not terms.check_hermitian():
        raise ValueError("term list is not Hermitian-closed")
    n = terms.n_sites
    dim = 4 * n
    c = np.zeros((dim, dim), dtype=complex)
    offset = terms.offset
    for t in terms.quadratic_terms():
        modes = t.modes()
        if t.kind == "chem":
            u = _mode_decomposition(*modes[0])
            for m, um in u.items():
                for nn, un in u.items():
                    c[m, nn] += t.coeff * np.conj(um) * un
        elif t.kind == "hop":
            ux = _mode_decomposition(*modes[0])
            uy = _mode_decomposition(*modes[1])
            for m, um in ux.items():
                for nn, un in uy.items():
                    c[m, nn] += t.coeff * np.conj(um) * un
        elif t.kind == "pair":
            ux = _mode_decomposition(*modes[0])
            uy = _mode_decomposition(*modes[1])
            if t.dag:
                for m, um in ux.items():
                    for nn, un in uy.items():
                        c[m, nn] += t.coeff * np.conj(um) * np.conj(un)
            else:
                for m, um in ux.items():
                    for nn, un in uy.items():
                        c[m, nn] += t.coeff * um * un
        else:
            raise ValueError(f"unknown term kind {t.kind!r}")
    offset += float(np.trace(c).real)
    a = -2j * (c - c.T)
    if np.abs(a.imag).max() > 1e-12 * max(1.0, np.abs(a.real).max()):
        raise ValueError("quadratic form is not Hermitian (complex A)")
    return MajoranaMatrix(a.real.copy(), offset, n)


def diii_majorana_matrix(spec: ChainSpec) -> MajoranaMatrix:
    return build_majorana_matrix(build_diii_terms(spec))


def mode_energies(mm: MajoranaMatrix) -> np.ndarray:
    """Fermion-mode excitation energies lambda_k >= 0 (2N of them)."""
    evs = np.linalg.eigvalsh(1j * mm.a)
    n_modes = 2 * mm.n_sites
    return np.sort(evs)[n_modes:]


def symmetric_spectrum(mm: MajoranaMatrix) -> np.ndarray:
    """Eigenvalues of iA/2: the symmetric +-lambda/2 single-particle levels."""
    return np.sort(np.linalg.eigvalsh(0.5j * mm.a))


def singular_values(mm: MajoranaMatrix) -> np.ndarray:
    """Singular values of A, ascending (each mode energy appears twice)."""
    return np.sort(np.linalg.svd(mm.a, compute_uv=False))


def reconstruct_many_body_spectrum(mm: MajoranaMatrix) -> np.ndarray:
    """All 2^(2N) occupation sums offset + sum lambda_k (n_k - 1/2)."""
    lam = mode_energies(mm)
    n_modes = lam.size
    if n_modes > 20:
        raise ValueError("reconstruction is exponential; keep N small")
    energies = np.array([mm.offset - lam.sum() / 2.0])
    for l in lam:
        energies = np.concatenate([energies, energies + l])
    return np.sort(energies)


@dataclass
class ZeroModeSet:
    """Near-zero Majorana modes: real orthonormal vectors with energies."""

    vectors: np.ndarray  # columns, shape (4N, n_zero)
    energies: np.ndarray  # singular values below threshold
    threshold: float
    gap: float  # first singular value above threshold (inf if none)

    @property
    def count(self) -> int:
        return self.vectors.shape[1]

    def end_weight(self, n_sites: int) -> np.ndarray:
        """Per-mode weight on the Majorana components of sites 1 and N."""
        idx = list(range(4)) + list(range(4 * (n_sites - 1), 4 * n_sites))
        return (np.abs(self.vectors[idx, :]) ** 2).sum(axis=0)


def _rotate_to_low_positions(basis: np.ndarray) -> np.ndarray:
    """Deterministic rotation of a degenerate space: greedily concentrate
    weight on the lowest Majorana index, then Gram-Schmidt the remainder."""
    if basis.shape[1] <= 1:
        return basis
    remaining = basis.copy()
    out = []
    for pos in range(basis.shape[0]):
        if remaining.shape[1] == 0:
            break
        row = remaining[pos, :]
        if np.linalg.norm(row) < 1e-12:
            continue
        direction = remaining @ (row / np.linalg.norm(row))
        direction /= np.linalg.norm(direction)
        out.append(direction)
        # deflate
        overlaps = remaining.T @ direction
        remaining = remaining - np.outer(direction, overlaps)
        q, _ = np.linalg.qr(remaining)
        keep = [k for k in range(remaining.shape[1]) if np.linalg.norm(remaining[:, k]) > 1e-12]
        if keep:
            remaining, _ = np.linalg.qr(remaining[:, keep])
        else:
            remaining = np.zeros((basis.shape[0], 0))
    result = np.column_stack(out) if out else np.zeros((basis.shape[0], 0))
    # fix signs: largest component positive
    for k in range(result.shape[1]):
        i = int(np.argmax(np.abs(result[:, k])))
        if result[i, k] < 0:
            result[:, k] = -result[:, k]
    return result


def zero_modes(mm: MajoranaMatrix, threshold: float | None = None) -> ZeroModeSet:
    """Majorana modes with |lambda| below the threshold.

    Default threshold: DEFAULT_ZERO_FACTOR times the bulk gap read off the
    singular-value ladder (relative, so it survives unit rescaling).
    """
    if threshold is not None and threshold <= 0:
        raise ValueError("threshold must be positive")
    u, s, vt = np.linalg.svd(mm.a)
    s_asc = s[::-1]
    if threshold is None:
        # bulk scale: first singular value clearly above the numerical floor
        floor = 1e-13 * max(1.0, s.max() if s.size else 1.0)
        above = s_asc[s_asc > floor]
        scale = above[0] if above.size else 1.0
        threshold = DEFAULT_ZERO_FACTOR * scale
    mask = s_asc < threshold
    n_zero = int(mask.sum())
    vecs = vt[::-1][:n_zero].T  # ascending order rows -> columns
    vecs = _rotate_to_low_positions(np.real(vecs)) if n_zero else np.zeros((mm.a.shape[0], 0))
    gap = float(s_asc[n_zero]) if n_zero < s_asc.size else float("inf")
    return ZeroModeSet(vecs, s_asc[:n_zero].copy(), float(threshold), gap)


def phase_scan(
    w_values,
    delta_values,
    mu_values,
    n_sites: int,
    zero_threshold: float | None = None,
) -> list[dict]:
    """One row per grid point, in (w, delta, mu) lexicographic order.

    splitting = 4th-smallest singular value of A (the larger of the two
    near-zero Kramers-pair energies); gap = 5th smallest (first bulk mode).
    """
    if n_sites < 2:
        raise ValueError("phase_scan needs n_sites >= 2")
    rows = []
    for w in np.atleast_1d(w_values):
        for dlt in np.atleast_1d(delta_values):
            for mu in np.atleast_1d(mu_values):
                spec = ChainSpec(n_sites, float(w), float(dlt), float(mu))
                mm = diii_majorana_matrix(spec)
                s = singular_values(mm)
                zm = zero_modes(mm, zero_threshold)
                rows.append(
                    {
                        "w": float(w),
                        "delta": float(dlt),
                        "mu": float(mu),
                        "N": n_sites,
                        "n_zero": zm.count,
                        "splitting": float(s[3]),
                        "gap": float(s[4]) if s.size > 4 else float("nan"),
                    }
                )
    return rows


def ideal_point_check(n_sites: int, w: float) -> dict:
    """Verify the exactly-solvable point w = Delta, mu = 0.

    Expects the symmetric single-particle spectrum {+-w, each 2(N-1) times}
    plus a 4-fold zero level, many-body ground energy -2(N-1)w relative to
    the offset, ground degeneracy 4 and bulk gap 2w.
    """
    if w <= 0:
        raise ValueError("w must be positive")
    spec = ChainSpec(n_sites, w, w, 0.0)
    mm = diii_majorana_matrix(spec)
    spect = symmetric_spectrum(mm)
    expected = np.sort(
        np.concatenate(
            [
                np.full(2 * (n_sites - 1), -w),
                np.zeros(4),
                np.full(2 * (n_sites - 1), +w),
            ]
        )
    )
    spectrum_dev = float(np.abs(spect - expected).max())
    lam = mode_energies(mm)
    ground_energy = mm.offset - lam.sum() / 2.0
    zm = zero_modes(mm)
    return {
        "n_sites": n_sites,
        "w": w,
        "spectrum_deviation": spectrum_dev,
        "ground_energy": float(ground_energy),
        "expected_ground_energy": -2.0 * (n_sites - 1) * w + mm.offset,
        "ground_degeneracy": 4,
        "n_zero_modes": zm.count,
        "bulk_gap": float(zm.gap) if n_sites > 1 else float("inf"),
        "expected_bulk_gap": 2.0 * w if n_sites > 1 else float("inf"),
    }
