"""Pfaffians of complex skew-symmetric matrices.

Two routes: a dense Parlett-Reid style elimination for explicit matrices and
a frontal variant for sparse banded matrices that keeps only the active
window dense.  Both pivot on the largest entry of the pivot row and return
results in log scale as ``(phase, log|Pf|)`` so huge cycle counts stay
representable.
"""

from __future__ import annotations

import math
from typing import Sequence

import numpy as np


class PfaffianError(ValueError):
    pass


def _check_skew(m: np.ndarray) -> None:
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise PfaffianError("matrix must be square")
    if m.shape[0] % 2:
        raise PfaffianError("odd dimension")
    scale = float(np.max(np.abs(m))) if m.size else 0.0
    if scale and float(np.max(np.abs(m + m.T))) > 1e-12 * scale:
        raise PfaffianError("matrix is not antisymmetric")


def pfaffian_log(m) -> tuple[complex, float]:
    """Dense elimination; returns (phase, log|Pf|) with phase 0 for Pf = 0."""
    a = np.array(m, dtype=complex)
    _check_skew(a)
    n = a.shape[0]
    phase = 1.0 + 0j
    logabs = 0.0
    for k in range(0, n - 1, 2):
        row = np.abs(a[k, k + 1 :])
        j = int(np.argmax(row)) + k + 1
        if row[j - k - 1] == 0.0:
            return 0j, -math.inf
        if j != k + 1:
            a[[k + 1, j], :] = a[[j, k + 1], :]
            a[:, [k + 1, j]] = a[:, [j, k + 1]]
            phase = -phase
        piv = a[k, k + 1]
        logabs += math.log(abs(piv))
        phase *= piv / abs(piv)
        if k + 2 < n:
            u = a[k + 2 :, k]
            v = a[k + 2 :, k + 1]
            a[k + 2 :, k + 2 :] -= (np.outer(u, v) - np.outer(v, u)) / piv
    return phase, logabs


def pfaffian(m) -> complex:
    phase, logabs = pfaffian_log(m)
    if phase == 0:
        return 0j
    return phase * math.exp(logabs)


class SparseSkew:
    """Skew-symmetric matrix stored as per-row neighbor maps (upper and lower)."""

    def __init__(self, n: int) -> None:
        if n % 2:
            raise PfaffianError("odd dimension")
        self.n = n
        self.rows: list[dict[int, complex]] = [dict() for _ in range(n)]

    def add(self, i: int, j: int, value: complex) -> None:
        """A[i][j] += value and A[j][i] -= value."""
        if i == j:
            raise PfaffianError("diagonal entry in skew matrix")
        self.rows[i][j] = self.rows[i].get(j, 0) + value
        self.rows[j][i] = self.rows[j].get(i, 0) - value

    def dense(self) -> np.ndarray:
        out = np.zeros((self.n, self.n), dtype=complex)
        for i, r in enumerate(self.rows):
            for j, v in r.items():
                out[i, j] = v
        return out

    def dump(self) -> str:
        """Text debug format: header then one ``i j re im`` line per i<j entry."""
        lines = [f"pfdump {self.n}"]
        for i, r in enumerate(self.rows):
            for j in sorted(r):
                if i < j and r[j] != 0:
                    lines.append(f"{i} {j} {r[j].real!r} {r[j].imag!r}")
        return "\n".join(lines) + "\n"


def parse_dump(text: str) -> SparseSkew:
    lines = [ln.split() for ln in text.splitlines() if ln.strip()]
    if not lines or lines[0][0] != "pfdump":
        raise PfaffianError("missing pfdump header")
    m = SparseSkew(int(lines[0][1]))
    for tok in lines[1:]:
        m.add(int(tok[0]), int(tok[1]), complex(float(tok[2]), float(tok[3])))
    return m


def _parity(perm: Sequence[int]) -> int:
    seen = [False] * len(perm)
    odd = 0
    for i in range(len(perm)):
        if not seen[i]:
            j, length = i, 0
            while not seen[j]:
                seen[j] = True
                j = perm[j]
                length += 1
            odd ^= (length - 1) & 1
    return odd


def pfaffian_frontal(
    rows: Sequence[dict[int, complex]], order: Sequence[int] | None = None
) -> tuple[complex, float]:
    """Frontal elimination in the given vertex order; returns (phase, log|Pf|).

    A vertex enters the dense window just before some pivot needs it.  Every
    pivot and its partner have all their original neighbors inside the
    window, so entries between the window and vertices that have not entered
    yet are never touched by a Schur update.
    """
    n = len(rows)
    if n % 2:
        raise PfaffianError("odd dimension")
    if n == 0:
        return 1 + 0j, 0.0
    order = list(range(n)) if order is None else list(order)
    if sorted(order) != list(range(n)):
        raise PfaffianError("order is not a permutation")
    pos = [0] * n
    for i, v in enumerate(order):
        pos[v] = i
    reach = [max((pos[u] for u in rows[v]), default=-1) for v in range(n)]

    cap = 64
    buf = np.zeros((cap, cap), dtype=complex)
    ids: list[int] = [-1] * cap  # buffer slot -> vertex
    slot = [-1] * n  # vertex -> buffer slot, -1 when absent or eliminated
    s = t = 0
    nxt = 0
    phase = 1.0 + 0j if _parity(order) == 0 else -1.0 + 0j  # Pf(P A P^T) = det(P) Pf(A)
    logabs = 0.0

    def enter() -> None:
        nonlocal buf, ids, cap, s, t, nxt
        if t == cap:
            width = t - s
            if width * 2 > cap:
                cap *= 2
            fresh = np.zeros((cap, cap), dtype=complex)
            fresh[:width, :width] = buf[s:t, s:t]
            buf = fresh
            new_ids = [-1] * cap
            new_ids[:width] = ids[s:t]
            ids = new_ids
            for k in range(width):
                slot[ids[k]] = k
            s, t = 0, width
        q = order[nxt]
        nxt += 1
        buf[t, s:t] = 0
        buf[s:t, t] = 0
        buf[t, t] = 0
        for u, val in rows[q].items():
            k = slot[u]
            if k >= 0:
                buf[t, k] = val
                buf[k, t] = -val
        ids[t] = q
        slot[q] = t
        t += 1

    while s < t or nxt < n:
        if s == t:
            enter()
        p = ids[s]
        while nxt <= reach[p]:
            enter()
        if t - s < 2:
            enter()
            continue
        row = np.abs(buf[s, s + 1 : t])
        j = int(np.argmax(row)) + s + 1
        if row[j - s - 1] == 0.0:
            return 0j, -math.inf
        partner = ids[j]
        while nxt <= reach[partner]:
            enter()
        j = slot[partner]
        if j != s + 1:
            k = s + 1
            buf[[k, j], s:t] = buf[[j, k], s:t]
            buf[s:t, [k, j]] = buf[s:t, [j, k]]
            ids[k], ids[j] = ids[j], ids[k]
            slot[ids[k]] = k
            slot[ids[j]] = j
            phase = -phase
        piv = buf[s, s + 1]
        logabs += math.log(abs(piv))
        phase *= piv / abs(piv)
        if t > s + 2:
            u = buf[s + 2 : t, s]
            v = buf[s + 2 : t, s + 1]
            buf[s + 2 : t, s + 2 : t] -= (np.outer(u, v) - np.outer(v, u)) / piv
        slot[ids[s]] = -1
        slot[ids[s + 1]] = -1
        s += 2
    return phase, logabs


def from_log(phase: complex, logabs: float, shift: float = 0.0) -> complex:
    """phase * exp(logabs - shift), with 0 for a vanishing Pfaffian."""
    if phase == 0:
        return 0j
    return phase * math.exp(logabs - shift)
