"""Code states, product states and the effective-state machinery.

Labels are 2g-bit integers.  Bit ``k`` belongs to encoded qubit ``k+1``
(cocycle ``C'_{k+1}``); handle ``j`` owns bits ``2j`` and ``2j+1``.  In the
C basis the pair (delta_j, eps_j) sits on (bit 2j, bit 2j+1), and in the X
basis the pair (gamma_j, rho_j) does.  Label strings list bit 0 first.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Mapping

import numpy as np

from . import gf2
from .homology import EncodingScheme

TAU_Z = 1e-9
NORM_TOL = 1e-10


class StateError(ValueError):
    pass


# -- labels --------------------------------------------------------------------


def label_to_str(label: int, n_bits: int) -> str:
    return "".join(str((label >> k) & 1) for k in range(n_bits))


def str_to_label(text: str) -> int:
    if any(ch not in "01" for ch in text):
        raise StateError(f"bad label {text!r}")
    return sum(1 << k for k, ch in enumerate(text) if ch == "1")


def pair_label(delta: int, eps: int, genus: int) -> int:
    """Interleave g-bit integers: delta_j -> bit 2j, eps_j -> bit 2j+1."""
    out = 0
    for j in range(genus):
        out |= ((delta >> j) & 1) << (2 * j)
        out |= ((eps >> j) & 1) << (2 * j + 1)
    return out


def split_label(label: int, genus: int) -> tuple[int, int]:
    a = b = 0
    for j in range(genus):
        a |= ((label >> (2 * j)) & 1) << j
        b |= ((label >> (2 * j + 1)) & 1) << j
    return a, b


def pair_parity(label: int, genus: int) -> int:
    """delta . eps of an interleaved label."""
    a, b = split_label(label, genus)
    return gf2.dot(a, b)


def swap_pairs(label: int, genus: int) -> int:
    """Exchange bits 2j and 2j+1 for every handle."""
    even = sum(1 << (2 * j) for j in range(genus))
    return ((label & even) << 1) | ((label >> 1) & even)


# -- product states ------------------------------------------------------------


class ProductState:
    """Per-edge single-qubit states a_e|0> + b_e|1>."""

    def __init__(self, amps, check: bool = True) -> None:
        a = np.array(amps, dtype=complex)
        if a.ndim != 2 or a.shape[1] != 2:
            raise StateError("amps must have shape (n_edges, 2)")
        self.amps = a
        if check:
            norms = np.abs(a[:, 0]) ** 2 + np.abs(a[:, 1]) ** 2
            bad = np.nonzero(np.abs(norms - 1) > 1e-12)[0]
            if bad.size:
                raise StateError(f"edge {int(bad[0])} is not normalized")

    @property
    def n_edges(self) -> int:
        return self.amps.shape[0]

    @property
    def a(self) -> np.ndarray:
        return self.amps[:, 0]

    @property
    def b(self) -> np.ndarray:
        return self.amps[:, 1]

    def z_like(self) -> np.ndarray:
        """Edges whose state is a Z eigenstate within TAU_Z."""
        return np.minimum(np.abs(self.a), np.abs(self.b)) <= TAU_Z

    def conj(self) -> "ProductState":
        return ProductState(self.amps.conj(), check=False)

    @classmethod
    def uniform(cls, n_edges: int, a: complex, b: complex) -> "ProductState":
        return cls(np.tile([a, b], (n_edges, 1)))

    @classmethod
    def zeros(cls, n_edges: int) -> "ProductState":
        return cls.uniform(n_edges, 1, 0)

    @classmethod
    def plus(cls, n_edges: int) -> "ProductState":
        s = 1 / math.sqrt(2)
        return cls.uniform(n_edges, s, s)

    @classmethod
    def random(cls, n_edges: int, rng: np.random.Generator) -> "ProductState":
        v = rng.normal(size=(n_edges, 2)) + 1j * rng.normal(size=(n_edges, 2))
        return cls(v / np.linalg.norm(v, axis=1, keepdims=True))

    def format(self) -> str:
        return "".join(
            f"amp {e} {float(a.real)!r} {float(a.imag)!r} {float(b.real)!r} {float(b.imag)!r}\n"
            for e, (a, b) in enumerate(self.amps)
        )

    @classmethod
    def parse(cls, text: str, n_edges: int | None = None) -> "ProductState":
        rows: dict[int, tuple[complex, complex]] = {}
        for lineno, raw in enumerate(text.splitlines(), 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            tok = line.split()
            if tok[0] != "amp" or len(tok) != 6:
                raise StateError(f"line {lineno}: expected 'amp <edge> re_a im_a re_b im_b'")
            vals = [float(t) for t in tok[2:]]
            rows[int(tok[1])] = (complex(vals[0], vals[1]), complex(vals[2], vals[3]))
        n = n_edges if n_edges is not None else len(rows)
        if sorted(rows) != list(range(n)):
            raise StateError("product state must list every edge exactly once")
        return cls([rows[e] for e in range(n)])


# -- code states ---------------------------------------------------------------


def _handle_matrix() -> np.ndarray:
    """U[(gamma rho), (delta eps)] = (-1)^(delta rho + eps gamma + gamma rho) / 2, index 2*lo + hi."""
    u = np.empty((4, 4))
    for gamma in (0, 1):
        for rho in (0, 1):
            for delta in (0, 1):
                for eps in (0, 1):
                    u[2 * gamma + rho, 2 * delta + eps] = 0.5 * (-1) ** (delta * rho + eps * gamma + gamma * rho)
    return u


HANDLE_U = _handle_matrix()


def apply_handles(vec: np.ndarray, genus: int, mat: np.ndarray) -> np.ndarray:
    """Apply a 4x4 matrix to every handle's bit pair of a length-4^g vector."""
    n = 2 * genus
    if n == 0:
        return vec.copy()
    t = np.asarray(vec, dtype=complex).reshape((2,) * n)
    for j in range(genus):
        lo, hi = n - 1 - 2 * j, n - 2 - 2 * j  # axes of bits 2j, 2j+1
        t = np.moveaxis(t, (lo, hi), (-2, -1))
        shape = t.shape
        t = (t.reshape(-1, 4) @ mat.T).reshape(shape)
        t = np.moveaxis(t, (-2, -1), (lo, hi))
    return t.reshape(-1)


@dataclass
class CodeState:
    """Sparse coefficients of an encoded state.

    ``basis`` is ``"X"`` (|X_alpha>, alpha = label) or ``"C"``
    (|C^{delta,eps}>, interleaved label).  The C basis needs a canonical
    scheme whenever it is used against a graph.
    """

    basis: str
    genus: int
    coeffs: dict[int, complex] = field(default_factory=dict)
    scheme: EncodingScheme | None = None

    def __post_init__(self) -> None:
        if self.basis not in ("X", "C"):
            raise StateError(f"unknown basis {self.basis!r}")
        n = 1 << (2 * self.genus)
        self.coeffs = {int(k): complex(v) for k, v in self.coeffs.items() if v != 0}
        for k in self.coeffs:
            if not 0 <= k < n:
                raise StateError(f"label {k} out of range for genus {self.genus}")
        if self.scheme is not None:
            if self.scheme.genus != self.genus:
                raise StateError("scheme genus does not match state genus")
            if self.basis == "C" and not self.scheme.canonical:
                raise StateError("C basis requires a canonical encoding scheme")

    @property
    def n_labels(self) -> int:
        return 1 << (2 * self.genus)

    def norm(self) -> float:
        return math.sqrt(sum(abs(v) ** 2 for v in self.coeffs.values()))

    def check_normalized(self, tol: float = NORM_TOL) -> None:
        if abs(self.norm() - 1) > tol:
            raise StateError(f"state norm {self.norm():.12g} differs from 1")

    def vector(self) -> np.ndarray:
        v = np.zeros(self.n_labels, dtype=complex)
        for k, c in self.coeffs.items():
            v[k] = c
        return v

    @classmethod
    def from_vector(cls, basis: str, genus: int, vec, scheme=None, tol: float = 1e-14) -> "CodeState":
        vec = np.asarray(vec, dtype=complex)
        scale = float(np.max(np.abs(vec))) if vec.size else 0.0
        coeffs = {int(k): complex(vec[k]) for k in np.nonzero(np.abs(vec) > tol * max(scale, 1e-300))[0]}
        return cls(basis, genus, coeffs, scheme)

    @property
    def term_count(self) -> int:
        return len(self.coeffs)

    def with_scheme(self, scheme: EncodingScheme) -> "CodeState":
        return CodeState(self.basis, self.genus, dict(self.coeffs), scheme)

    def format(self) -> str:
        lines = [f"basis {self.basis}", f"genus {self.genus}"]
        for k in sorted(self.coeffs):
            c = self.coeffs[k]
            lines.append(f"coeff {label_to_str(k, 2 * self.genus)} {float(c.real)!r} {float(c.imag)!r}")
        return "\n".join(lines) + "\n"

    @classmethod
    def parse(cls, text: str) -> "CodeState":
        basis = genus = None
        coeffs: dict[int, complex] = {}
        for lineno, raw in enumerate(text.splitlines(), 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            tok = line.split()
            try:
                if tok[0] == "basis":
                    basis = tok[1]
                elif tok[0] == "genus":
                    genus = int(tok[1])
                elif tok[0] == "coeff":
                    if genus is None or len(tok[1]) != 2 * genus:
                        raise StateError(f"line {lineno}: label length must be 2g")
                    k = str_to_label(tok[1])
                    coeffs[k] = coeffs.get(k, 0) + complex(float(tok[2]), float(tok[3]))
                else:
                    raise StateError(f"line {lineno}: unknown record {tok[0]!r}")
            except (IndexError, ValueError) as exc:
                if isinstance(exc, StateError):
                    raise
                raise StateError(f"line {lineno}: malformed {raw!r}") from exc
        if basis is None or genus is None:
            raise StateError("state file needs 'basis' and 'genus' lines")
        return cls(basis, genus, coeffs)


def _need_canonical(scheme: EncodingScheme | None) -> None:
    if scheme is not None and not scheme.canonical:
        raise StateError("C basis requires a canonical encoding scheme")


def x_to_c(s: CodeState) -> CodeState:
    """psi = U^T c, applied per handle."""
    if s.basis == "C":
        return s
    _need_canonical(s.scheme)
    return CodeState.from_vector("C", s.genus, apply_handles(s.vector(), s.genus, HANDLE_U.T), s.scheme)


def c_to_x(s: CodeState) -> CodeState:
    """c = U psi, applied per handle."""
    if s.basis == "X":
        return s
    _need_canonical(s.scheme)
    return CodeState.from_vector("X", s.genus, apply_handles(s.vector(), s.genus, HANDLE_U), s.scheme)


def plus_state(genus: int, scheme: EncodingScheme | None = None) -> CodeState:
    return CodeState("X", genus, {0: 1.0}, scheme)


def special_state(delta: int, eps: int, genus: int, scheme: EncodingScheme | None = None) -> CodeState:
    """|C^{delta,eps}> with delta, eps given as g-bit integers."""
    _need_canonical(scheme)
    return CodeState("C", genus, {pair_label(delta, eps, genus): 1.0}, scheme)


def random_state(genus: int, rng: np.random.Generator, basis: str = "X", nnz: int | None = None, scheme=None) -> CodeState:
    n = 1 << (2 * genus)
    nnz = n if nnz is None else min(nnz, n)
    labels = rng.choice(n, size=nnz, replace=False)
    vals = rng.normal(size=nnz) + 1j * rng.normal(size=nnz)
    vals /= np.linalg.norm(vals)
    return CodeState(basis, genus, dict(zip((int(k) for k in labels), vals)), scheme)


# -- effective state and the Schmidt condition ---------------------------------


@dataclass(frozen=True)
class EffectiveState:
    """Terms (label, Psi, Z-flip mask) of the effective state, one per nonzero psi."""

    terms: tuple[tuple[int, complex, int], ...]
    genus: int

    @property
    def D(self) -> int:
        return len(self.terms)


def effective_state(s: CodeState, phi: ProductState | None, scheme: EncodingScheme) -> EffectiveState:
    """Psi_{alpha,beta} = (-1)^(alpha.beta) psi*_{alpha,beta}; mask = sum of chosen cocycles."""
    if not scheme.canonical:
        raise StateError("effective state needs a canonical scheme")
    if phi is not None:
        n_edges = max((c.bit_length() for c in scheme.cocycles), default=0)
        if phi.n_edges < n_edges:
            raise StateError("product state does not cover every edge")
    c = x_to_c(s.with_scheme(scheme)) if s.basis == "X" else s
    terms = []
    for label in sorted(c.coeffs):
        psi = c.coeffs[label]
        sign = -1 if pair_parity(label, s.genus) else 1
        terms.append((label, sign * psi.conjugate(), scheme.flip_set(label)))
    return EffectiveState(tuple(terms), s.genus)


@dataclass(frozen=True)
class SchmidtReport:
    holds: bool
    D: int
    e_sch: float
    set_a: tuple[int, ...] = ()
    set_b: tuple[int, ...] = ()
    method: str = "greedy"

    @property
    def bound_only(self) -> bool:
        return not self.holds


def _greedy_basis(rows: Mapping[int, int], candidates: Iterable[int], target: int) -> list[int]:
    basis = gf2.Basis()
    picked = []
    for e in candidates:
        if basis.add(rows[e]):
            picked.append(e)
            if len(picked) == target:
                break
    return picked


def _independent(rows: Mapping[int, int], elems: Iterable[int]) -> bool:
    vs = [rows[e] for e in elems]
    return gf2.rank(vs) == len(vs)


def two_disjoint_bases(rows: Mapping[int, int], elements: list[int], rank: int) -> tuple[list[int], list[int]] | None:
    """Exact matroid partition into two independent sets of size ``rank``.

    Elements are inserted one at a time; when neither set accepts one, a
    breadth-first search over exchanges (swap ``y`` out of set i to make room)
    finds a shortest augmenting chain.  Returns None when no pair exists.
    """
    sets: list[list[int]] = [[], []]
    where: dict[int, int] = {}
    for s in elements:
        if len(sets[0]) == rank and len(sets[1]) == rank:
            break
        parent: dict[int, tuple[int, int] | None] = {s: None}
        queue = [s]
        found = None
        while queue and found is None:
            nxt = []
            for x in queue:
                for i in (0, 1):
                    if where.get(x) == i or len(sets[i]) > rank:
                        continue
                    if len(sets[i]) < rank and _independent(rows, sets[i] + [x]):
                        found = (x, i)
                        break
                    # circuit of sets[i] + x: elements whose removal restores independence
                    for y in sets[i]:
                        if y in parent:
                            continue
                        trial = [z for z in sets[i] if z != y] + [x]
                        if _independent(rows, trial):
                            parent[y] = (x, i)
                            nxt.append(y)
                if found:
                    break
            queue = nxt
        if found is None:
            continue
        x, i = found
        while True:
            old = where.get(x)
            if old is not None:
                sets[old].remove(x)
            sets[i].append(x)
            where[x] = i
            link = parent[x]
            if link is None:
                break
            # x was displaced from set i to make room for link[0]
            x, i = link
    if len(sets[0]) == rank and len(sets[1]) == rank:
        return sets[0], sets[1]
    return None


def schmidt_rank_condition(s: CodeState, phi: ProductState, scheme: EncodingScheme) -> SchmidtReport:
    """Look for two disjoint full-rank edge sets outside the Z-eigenstate edges.

    Rows of the cocycle incidence matrix are restricted to edges whose state
    is not a Z eigenstate.  Greedy extraction is tried first; on failure an
    exact matroid partition decides.  When the condition holds,
    E_Sch = log2 D; otherwise log2 D is only an upper bound.
    """
    n = 2 * scheme.genus
    if s.genus != scheme.genus:
        raise StateError("state genus does not match scheme")
    d = effective_state(s, phi, scheme).D if n else 1
    if n == 0:
        return SchmidtReport(True, 1, 0.0, method="trivial")
    e_sch = math.log2(d) if d else 0.0
    zmask = phi.z_like()
    usable = [e for e in range(phi.n_edges) if not zmask[e]]
    rows = {e: scheme.incidence(e) for e in usable}
    usable = [e for e in usable if rows[e]]
    a = _greedy_basis(rows, usable, n)
    if len(a) == n:
        rest = [e for e in usable if e not in set(a)]
        b = _greedy_basis(rows, rest, n)
        if len(b) == n:
            return SchmidtReport(True, d, e_sch, tuple(a), tuple(b), "greedy")
    found = two_disjoint_bases(rows, usable, n)
    if found is None:
        return SchmidtReport(False, d, e_sch, method="partition")
    return SchmidtReport(True, d, e_sch, tuple(sorted(found[0])), tuple(sorted(found[1])), "partition")
