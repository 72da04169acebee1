"""Exact many-body engine on the 2^M hard-core-boson Hilbert space.

Basis convention: basis index i encodes occupations bit-wise in zig-zag
linear order, bit (p-1) of i = occupation of position p (little-endian).
States are plain complex numpy vectors, operators scipy CSR matrices.

Two independent assembly routes exist for the same Hamiltonian:

* assemble_bosonized builds the HCB model directly from its local terms,
  with the single-site parity factors written explicitly;
* assemble_fermionic_oracle builds the fermionic model through full
  Jordan-Wigner strings in zig-zag order.

Their agreement (as matrices, hence spectra) is the central consistency
check of the whole package.
"""

from __future__ import annotations

import struct

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .chain import (
    PLUS,
    MINUS,
    ChainSpec,
    FermionTerm,
    FermionTermList,
    build_diii_terms,
    build_spin_terms,
    linear_position,
)

DEFAULT_MAX_POSITIONS = 14

# dense eigensolves below this dimension, iterative above
DENSE_DIM_LIMIT = 1 << 12


class DimensionGuardError(ValueError):
    """Requested Hilbert space exceeds the desk-scale guard."""


class EigensolverError(RuntimeError):
    """Iterative eigensolver failed to converge; carries residual norms."""

    def __init__(self, message, residuals=None):
        super().__init__(message)
        self.residuals = residuals


def hilbert_dim(n_positions: int, max_positions: int = DEFAULT_MAX_POSITIONS) -> int:
    if n_positions > max_positions:
        raise DimensionGuardError(
            f"{n_positions} HCB positions exceed the guard of {max_positions}"
        )
    return 1 << n_positions


def _indices(dim: int) -> np.ndarray:
    return np.arange(dim, dtype=np.int64)


def op_identity(n_positions: int) -> sp.csr_matrix:
    dim = hilbert_dim(n_positions)
    return sp.identity(dim, dtype=complex, format="csr")


def op_number(n_positions: int, p: int) -> sp.csr_matrix:
    """n_p, diagonal."""
    dim = hilbert_dim(n_positions)
    idx = _indices(dim)
    bit = (idx >> (p - 1)) & 1
    return sp.diags(bit.astype(complex), format="csr")


def op_parity(n_positions: int, positions) -> sp.csr_matrix:
    """Product over positions of (1 - 2 n_p): diagonal, entries +-1."""
    dim = hilbert_dim(n_positions)
    idx = _indices(dim)
    mask = 0
    for p in positions:
        mask |= 1 << (p - 1)
    # parity of the number of occupied positions inside the mask
    bits = idx & mask
    count = np.zeros(dim, dtype=np.int64)
    b = bits.copy()
    while np.any(b):
        count += b & 1
        b >>= 1
    sign = 1.0 - 2.0 * (count % 2)
    return sp.diags(sign.astype(complex), format="csr")


def op_total_parity(n_positions: int) -> sp.csr_matrix:
    return op_parity(n_positions, range(1, n_positions + 1))


def op_annihilate(n_positions: int, p: int) -> sp.csr_matrix:
    """Hard-core boson b_p (no strings)."""
    dim = hilbert_dim(n_positions)
    idx = _indices(dim)
    bit = 1 << (p - 1)
    src = idx[(idx & bit) != 0]
    dst = src & ~bit
    data = np.ones(len(src), dtype=complex)
    return sp.csr_matrix((data, (dst, src)), shape=(dim, dim))


def op_create(n_positions: int, p: int) -> sp.csr_matrix:
    return op_annihilate(n_positions, p).conjugate().transpose().tocsr()


def fermion_annihilate(n_positions: int, p: int) -> sp.csr_matrix:
    """Jordan-Wigner fermion f_p = (prod_{s<p} P_s) b_p in zig-zag order."""
    string = op_parity(n_positions, range(1, p))
    return (string @ op_annihilate(n_positions, p)).tocsr()


def _hermitian_close(h: sp.csr_matrix) -> sp.csr_matrix:
    h = h.tocsr()
    h.sum_duplicates()
    return h


def assemble_from_terms(terms: FermionTermList, max_positions: int = DEFAULT_MAX_POSITIONS) -> sp.csr_matrix:
    """Many-body matrix of a fermionic term list via Jordan-Wigner operators."""
    m = 2 * terms.n_sites
    dim = hilbert_dim(m, max_positions)
    f = {p: fermion_annihilate(m, p) for p in range(1, m + 1)}
    fdag = {p: f[p].conjugate().transpose().tocsr() for p in f}
    h = sp.csr_matrix((dim, dim), dtype=complex)
    for t in terms.terms:
        if t.kind == "const":
            h = h + t.coeff.real * sp.identity(dim, dtype=complex, format="csr")
            continue
        pos = t.positions()
        if t.kind == "chem":
            h = h + t.coeff * (fdag[pos[0]] @ f[pos[0]])
        elif t.kind == "hop":
            h = h + t.coeff * (fdag[pos[0]] @ f[pos[1]])
        elif t.kind == "pair":
            if t.dag:
                h = h + t.coeff * (fdag[pos[0]] @ fdag[pos[1]])
            else:
                h = h + t.coeff * (f[pos[0]] @ f[pos[1]])
        else:
            raise ValueError(f"unknown term kind {t.kind!r}")
    return _hermitian_close(h)


def assemble_fermionic_oracle(spec: ChainSpec, max_positions: int = DEFAULT_MAX_POSITIONS) -> sp.csr_matrix:
    """Ground-truth many-body matrix of the decoupled-leg fermionic model."""
    return assemble_from_terms(build_diii_terms(spec), max_positions)


def assemble_spin_oracle(spec: ChainSpec, max_positions: int = DEFAULT_MAX_POSITIONS) -> sp.csr_matrix:
    """Many-body matrix of the spinful (up/down basis) form of the model."""
    return assemble_from_terms(build_spin_terms(spec), max_positions)


def op_transfer(n_positions: int, p_to: int, p_from: int, parity_positions=(), coeff: complex = 1.0) -> sp.csr_matrix:
    """coeff * b+_{p_to} b_{p_from} * prod_{s in parity_positions} P_s.

    The parity positions must be distinct from p_to and p_from (the factors
    then commute with the transfer and are evaluated on the source state).
    """
    if p_to == p_from:
        raise ValueError("use op_number for diagonal transfers")
    dim = hilbert_dim(n_positions)
    idx = _indices(dim)
    b_from = 1 << (p_from - 1)
    b_to = 1 << (p_to - 1)
    mask = 0
    for s in parity_positions:
        if s in (p_to, p_from):
            raise ValueError("parity factor collides with transfer positions")
        mask |= 1 << (s - 1)
    src = idx[((idx & b_from) != 0) & ((idx & b_to) == 0)]
    dst = (src & ~b_from) | b_to
    if mask:
        bits = src & mask
        count = np.zeros(len(src), dtype=np.int64)
        b = bits.copy()
        while np.any(b):
            count += b & 1
            b >>= 1
        sign = 1.0 - 2.0 * (count % 2)
    else:
        sign = np.ones(len(src))
    data = coeff * sign.astype(complex)
    return sp.csr_matrix((data, (dst, src)), shape=(dim, dim))


def op_pair_create(n_positions: int, p1: int, p2: int, parity_positions=(), coeff: complex = 1.0) -> sp.csr_matrix:
    """coeff * b+_{p1} b+_{p2} * prod P_s  (p1 != p2; HCB operators commute)."""
    if p1 == p2:
        raise ValueError("hard-core double creation vanishes")
    dim = hilbert_dim(n_positions)
    idx = _indices(dim)
    b1 = 1 << (p1 - 1)
    b2 = 1 << (p2 - 1)
    mask = 0
    for s in parity_positions:
        if s in (p1, p2):
            raise ValueError("parity factor collides with pair positions")
        mask |= 1 << (s - 1)
    src = idx[((idx & b1) == 0) & ((idx & b2) == 0)]
    dst = src | b1 | b2
    if mask:
        bits = src & mask
        count = np.zeros(len(src), dtype=np.int64)
        b = bits.copy()
        while np.any(b):
            count += b & 1
            b >>= 1
        sign = 1.0 - 2.0 * (count % 2)
    else:
        sign = np.ones(len(src))
    data = coeff * sign.astype(complex)
    return sp.csr_matrix((data, (dst, src)), shape=(dim, dim))


def assemble_bosonized(spec: ChainSpec, max_positions: int = DEFAULT_MAX_POSITIONS) -> sp.csr_matrix:
    """HCB model with explicit parity factors, assembled term by term.

    '+' leg bond j:  -w P-bar_j b+_j b_{j+1} + Delta P-bar_j b_{j+1} b_j + h.c.
    '-' leg bond j:  -w P_{j+1} bbar+_j bbar_{j+1} - Delta P_{j+1} bbar_{j+1} bbar_j + h.c.
    chemical:        -mu (n - 1/2) on every position.

    P-bar_j is the parity of position (j,-); P_{j+1} the parity of (j+1,+).
    No periodic wrap: bonds run j = 1 .. N-1.
    """
    m = spec.n_positions
    dim = hilbert_dim(m, max_positions)
    w, dlt, mu = spec.w, spec.delta_pair, spec.mu
    h = sp.csr_matrix((dim, dim), dtype=complex)
    for j in range(1, spec.n_sites):
        pj = linear_position(j, PLUS)
        pj1 = linear_position(j + 1, PLUS)
        qj = linear_position(j, MINUS)
        qj1 = linear_position(j + 1, MINUS)
        # '+' leg: string site is (j,-)
        hop = op_transfer(m, pj, pj1, (qj,), -w)
        pair = op_pair_create(m, pj, pj1, (qj,), dlt)  # h.c. of Delta b_{j+1} b_j P-bar_j
        # '-' leg: string site is (j+1,+)
        hop_bar = op_transfer(m, qj, qj1, (pj1,), -w)
        pair_bar = op_pair_create(m, qj, qj1, (pj1,), -dlt)
        for o in (hop, pair, hop_bar, pair_bar):
            h = h + o + o.conjugate().transpose().tocsr()
    for p in range(1, m + 1):
        h = h - mu * op_number(m, p)
        h = h + (mu / 2.0) * sp.identity(dim, dtype=complex, format="csr")
    return _hermitian_close(h)


def check_hermitian(op: sp.spmatrix, tol: float = 1e-14) -> bool:
    d = op - op.conjugate().transpose()
    if d.nnz == 0:
        return True
    scale = max(1.0, abs(op).max())
    return abs(d).max() <= tol * scale


def normalize(psi: np.ndarray) -> np.ndarray:
    return psi / np.linalg.norm(psi)


def expectation(op: sp.spmatrix, psi: np.ndarray) -> complex:
    return complex(np.vdot(psi, op @ psi))


def commutator_norm(a: sp.spmatrix, b: sp.spmatrix) -> float:
    c = a @ b - b @ a
    return 0.0 if c.nnz == 0 else float(abs(c).max())


def _rotate_block_to_eigenstates(block: np.ndarray, op: sp.spmatrix, tol: float = 1e-9):
    """Rotate a degenerate block (columns) to eigenstates of op; returns
    rotated columns and their eigenvalues."""
    small = block.conjugate().T @ (op @ block)
    small = 0.5 * (small + small.conjugate().T)
    vals, vecs = np.linalg.eigh(small)
    return block @ vecs, vals


def _fix_phases(states: np.ndarray) -> np.ndarray:
    """Make the largest-magnitude component of each column real positive."""
    out = states.copy()
    for k in range(out.shape[1]):
        i = int(np.argmax(np.abs(out[:, k])))
        ph = out[i, k] / abs(out[i, k])
        out[:, k] = out[:, k] / ph
    return out


def ground_manifold(
    h: sp.spmatrix,
    k: int,
    parity_op: sp.spmatrix | None = None,
    secondary_ops: tuple = (),
    degeneracy_tol: float = 1e-9,
    residual_tol: float = 1e-9,
):
    """Lowest k eigenpairs with deterministic ordering.

    Ordering: energy, then parity eigenvalue (if parity_op given), then
    eigenvalues of any secondary operators, then a deterministic phase fix.
    Degenerate blocks are rotated to simultaneous eigenstates of the
    supplied operators.  Returns (energies, states-as-columns).
    """
    dim = h.shape[0]
    if k < 1:
        raise ValueError("k must be >= 1")
    if dim <= DENSE_DIM_LIMIT:
        dense = h.toarray()
        dense = 0.5 * (dense + dense.conjugate().T)
        vals, vecs = np.linalg.eigh(dense)
        vals, vecs = vals[:k], vecs[:, :k]
    else:
        rng = np.random.default_rng(7)
        v0 = rng.standard_normal(dim)
        try:
            vals, vecs = spla.eigsh(h, k=k, which="SA", v0=v0)
        except spla.ArpackNoConvergence as exc:
            res = None
            if exc.eigenvectors is not None and exc.eigenvectors.size:
                res = [
                    float(np.linalg.norm(h @ v - e * v))
                    for e, v in zip(exc.eigenvalues, exc.eigenvectors.T)
                ]
            raise EigensolverError("eigsh failed to converge", residuals=res)
        order = np.argsort(vals)
        vals, vecs = vals[order], vecs[:, order]

    scale = max(1.0, float(abs(h).max()))
    # split into degenerate blocks and rotate each
    ops = ([] if parity_op is None else [parity_op]) + list(secondary_ops)
    out_states = []
    out_vals = []
    i = 0
    while i < k:
        jmax = i + 1
        while jmax < k and vals[jmax] - vals[i] <= degeneracy_tol * scale:
            jmax += 1
        block = vecs[:, i:jmax]
        sort_keys = [np.full(block.shape[1], vals[i:jmax].mean())]
        for op in ops:
            block, ev = _rotate_block_to_eigenstates(block, op)
            sort_keys.append(ev)
        order = np.lexsort(tuple(np.round(kk, 9) for kk in reversed(sort_keys)))
        block = block[:, order]
        out_states.append(block)
        out_vals.extend(vals[i:jmax])
        i = jmax
    states = _fix_phases(np.hstack(out_states))
    energies = np.array(out_vals)

    for e, v in zip(energies, states.T):
        r = float(np.linalg.norm(h @ v - e * v))
        if r > residual_tol * scale:
            raise EigensolverError(
                f"eigenpair residual {r:.3e} above tolerance", residuals=[r]
            )
    return energies, states


def majorana_site_operators(spec: ChainSpec, j: int, max_positions: int = DEFAULT_MAX_POSITIONS):
    """Many-body Majorana operators of site j:
    gamma_{j,A} = i(a_j - a+_j),  gamma_{j,B} = a_j + a+_j,
    gbar_{j,A} = abar_j + abar+_j,  gbar_{j,B} = -i(abar_j - abar+_j),
    with a/abar the Jordan-Wigner fermions of the two legs.
    """
    m = spec.n_positions
    hilbert_dim(m, max_positions)
    a = fermion_annihilate(m, linear_position(j, PLUS))
    abar = fermion_annihilate(m, linear_position(j, MINUS))
    adag = a.conjugate().transpose().tocsr()
    abardag = abar.conjugate().transpose().tocsr()
    gamma_a = (1j * (a - adag)).tocsr()
    gamma_b = (a + adag).tocsr()
    gbar_a = (abar + abardag).tocsr()
    gbar_b = (-1j * (abar - abardag)).tocsr()
    return gamma_a, gamma_b, gbar_a, gbar_b


def majorana_end_operators(spec: ChainSpec, first: int | None = None, last: int | None = None, max_positions: int = DEFAULT_MAX_POSITIONS):
    """The four end-mode Majoranas (gamma_A, gbar_A, gamma_B, gbar_B).

    gamma_A / gbar_A live on the first site, gamma_B / gbar_B on the last.
    first/last default to the whole chain; pass subchain bounds to get the
    end operators of an L/R piece of a cut chain.
    """
    first = 1 if first is None else first
    last = spec.n_sites if last is None else last
    ga, _, gba, _ = majorana_site_operators(spec, first, max_positions)
    _, gb, _, gbb = majorana_site_operators(spec, last, max_positions)
    return ga, gba, gb, gbb


def save_state(path, psi: np.ndarray):
    """Binary dump: 8-byte little-endian dimension header + complex doubles."""
    arr = np.ascontiguousarray(psi, dtype=np.complex128)
    with open(path, "wb") as fh:
        fh.write(struct.pack("<Q", arr.size))
        fh.write(arr.astype("<c16").tobytes())


def load_state(path) -> np.ndarray:
    with open(path, "rb") as fh:
        (dim,) = struct.unpack("<Q", fh.read(8))
        data = np.frombuffer(fh.read(), dtype="<c16")
    if data.size != dim:
        raise ValueError("state file length does not match header")
    return data.astype(np.complex128)
