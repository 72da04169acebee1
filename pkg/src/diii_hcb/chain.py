"""Lattice geometry, parameter sets and symbolic term lists for the two-leg chain.

The chain has N fermionic sites, each carrying two species ("+" and "-" legs).
All string conventions in the package derive from a single zig-zag linear
order of the 2N hard-core-boson positions:

    (1,+), (1,-), (2,+), (2,-), ...   ->   p(j,+) = 2j-1,  p(j,-) = 2j

Sites are 1-based.  The linear position is the single source of truth for
every Jordan-Wigner / parity string built elsewhere.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
import cmath

import numpy as np

PLUS = "+"
MINUS = "-"
SPECIES = (PLUS, MINUS)

# spin labels for the original (up/down) basis; they share the zig-zag slots
UP = "up"
DOWN = "down"


def linear_position(j: int, species: str) -> int:
    """1-based zig-zag position of HCB (j, species)."""
    if species in (PLUS, UP):
        return 2 * j - 1
    if species in (MINUS, DOWN):
        return 2 * j
    raise ValueError(f"unknown species {species!r}")


def position_site(p: int) -> tuple[int, str]:
    """Inverse of linear_position."""
    if p < 1:
        raise ValueError("positions are 1-based")
    j, r = divmod(p - 1, 2)
    return j + 1, PLUS if r == 0 else MINUS


@dataclass(frozen=True)
class ChainSpec:
    """Geometry and (w, delta_pair, mu) parameters of the chain.

    n_sites is the number of fermionic sites N; the HCB lattice has M = 2N
    positions.  cut_after_site, when set, marks the bond after which the
    chain is split into L/R subchains by pulse-amplitude zeroing (the cut is
    a property of the synthesis, not of the geometry).
    """

    n_sites: int
    w: float = 1.0
    delta_pair: float = 1.0
    mu: float = 0.0
    cut_after_site: int | None = None

    def __post_init__(self):
        if self.n_sites < 1:
            raise ValueError("n_sites must be >= 1")
        if self.cut_after_site is not None:
            if not 1 <= self.cut_after_site < self.n_sites:
                raise ValueError(
                    f"cut_after_site must lie in [1, {self.n_sites - 1}]"
                )

    @property
    def n_positions(self) -> int:
        return 2 * self.n_sites

    def to_dict(self) -> dict:
        d = {
            "n_sites": self.n_sites,
            "w": self.w,
            "delta_pair": self.delta_pair,
            "mu": self.mu,
        }
        if self.cut_after_site is not None:
            d["cut_after_site"] = self.cut_after_site
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "ChainSpec":
        allowed = {"n_sites", "w", "delta_pair", "mu", "cut_after_site"}
        unknown = set(d) - allowed
        if unknown:
            raise ValueError(f"unknown ChainSpec fields: {sorted(unknown)}")
        return cls(**d)


@dataclass(frozen=True)
class FermionTerm:
    """One quadratic term of a fermionic Hamiltonian.

    kind 'hop':  coeff * f+(x1) f(x2)        (x1 != x2)
    kind 'pair': coeff * f(x1) f(x2)         if dag is False
                 coeff * f+(x1) f+(x2)       if dag is True
    kind 'chem': coeff * f+(x) f(x)          (real coeff)
    kind 'const': scalar offset (sites empty)

    x = (site, species).  Hermiticity is kept explicit: every hop term has a
    conjugate partner with swapped modes, and every annihilation pair term
    has a dagger partner.
    """

    kind: str
    sites: tuple[int, ...]
    species: tuple[str, ...]
    coeff: complex
    dag: bool = False

    def modes(self) -> tuple[tuple[int, str], ...]:
        return tuple(zip(self.sites, self.species))

    def positions(self) -> tuple[int, ...]:
        return tuple(linear_position(j, s) for j, s in self.modes())

    def conjugate_partner(self) -> "FermionTerm":
        c = complex(self.coeff).conjugate()
        if self.kind == "hop":
            return FermionTerm("hop", self.sites[::-1], self.species[::-1], c)
        if self.kind == "pair":
            return FermionTerm(
                "pair", self.sites[::-1], self.species[::-1], c, dag=not self.dag
            )
        return replace(self, coeff=c)


@dataclass
class FermionTermList:
    """Hermitian-closed list of quadratic terms plus a scalar offset."""

    n_sites: int
    terms: list[FermionTerm] = field(default_factory=list)

    @property
    def offset(self) -> float:
        return float(
            sum(t.coeff.real for t in self.terms if t.kind == "const")
        )

    def quadratic_terms(self) -> list[FermionTerm]:
        return [t for t in self.terms if t.kind != "const"]

    def add(self, term: FermionTerm):
        self.terms.append(term)

    def add_with_conjugate(self, term: FermionTerm):
        self.terms.append(term)
        self.terms.append(term.conjugate_partner())

    def check_hermitian(self, tol: float = 1e-13) -> bool:
        """Every non-diagonal term must have its conjugate partner present."""
        def key(t: FermionTerm):
            return (t.kind, t.sites, t.species, t.dag)

        unmatched = {}
        for t in self.quadratic_terms():
            if t.kind == "chem":
                if abs(complex(t.coeff).imag) > tol:
                    return False
                continue
            k = key(t)
            pk = key(t.conjugate_partner())
            if pk in unmatched and abs(unmatched[pk] - complex(t.coeff).conjugate()) <= tol:
                del unmatched[pk]
            else:
                unmatched[k] = complex(t.coeff)
        # self-conjugate hops (real coeff, x1 == x2 impossible for hop) aside,
        # anything left over breaks Hermiticity
        return not unmatched

    def counts(self) -> dict:
        out: dict = {}
        for t in self.terms:
            out[t.kind] = out.get(t.kind, 0) + 1
        return out


def build_diii_terms(spec: ChainSpec) -> FermionTermList:
    """Terms of the decoupled pair of Kitaev legs.

    Per leg:  -w a+_j a_{j+1} + (sigma * Delta) a_{j+1} a_j + h.c.
              - mu (a+_j a_j - 1/2)
    with sigma = +1 on the '+' leg and -1 on the '-' leg (the pairing sign is
    the only asymmetry between the legs).
    """
    w, dlt, mu = spec.w, spec.delta_pair, spec.mu
    tl = FermionTermList(spec.n_sites)
    for s, sign in ((PLUS, +1.0), (MINUS, -1.0)):
        for j in range(1, spec.n_sites):
            tl.add_with_conjugate(
                FermionTerm("hop", (j, j + 1), (s, s), -w + 0j)
            )
            tl.add_with_conjugate(
                FermionTerm("pair", (j + 1, j), (s, s), sign * dlt + 0j)
            )
        for j in range(1, spec.n_sites + 1):
            tl.add(FermionTerm("chem", (j,), (s,), -mu + 0j))
            tl.add(FermionTerm("const", (), (), mu / 2.0 + 0j))
    return tl


def build_spin_terms(spec: ChainSpec) -> FermionTermList:
    """Terms of the spinful form: the same model in the (up, down) basis.

    -w c+_{j,alpha} c_{j+1,alpha} - i Delta c_{j+1,alpha} c_{j,alpha-bar} + h.c.
    - mu (n_up + n_down - 1) per site.

    The up/down modes occupy the same zig-zag slots as the +/- legs, so both
    forms live on an identical Hilbert space and their spectra can be
    compared directly.
    """
    w, dlt, mu = spec.w, spec.delta_pair, spec.mu
    tl = FermionTermList(spec.n_sites)
    for j in range(1, spec.n_sites):
        for a in (UP, DOWN):
            tl.add_with_conjugate(FermionTerm("hop", (j, j + 1), (a, a), -w + 0j))
        # pairing couples opposite spins: c_{j+1,up} c_{j,down} and vice versa
        tl.add_with_conjugate(
            FermionTerm("pair", (j + 1, j), (UP, DOWN), -1j * dlt)
        )
        tl.add_with_conjugate(
            FermionTerm("pair", (j + 1, j), (DOWN, UP), -1j * dlt)
        )
    for j in range(1, spec.n_sites + 1):
        for a in (UP, DOWN):
            tl.add(FermionTerm("chem", (j,), (a,), -mu + 0j))
            tl.add(FermionTerm("const", (), (), mu / 2.0 + 0j))
    return tl


def spin_basis_transform() -> np.ndarray:
    """Per-site unitary mapping (c_up, c_down) to the leg modes (a, a-bar)."""
    return cmath.exp(-1j * np.pi / 4) / np.sqrt(2.0) * np.array(
        [[1.0, 1.0], [1.0, -1.0]], dtype=complex
    )


def apply_cut(spec: ChainSpec, synthesis):
    """Zero the tone amplitudes that decouple the chain at the cut bond.

    Thin forwarder; the amplitude table lives in the ddm module.
    """
    from .ddm import apply_cut as _apply_cut

    return _apply_cut(spec, synthesis)
