"""Parity-check matrix handling for the 2048x384 regular code class.

This covers the sparse matrix container, alist text I/O, a Reed-Solomon
style algebraic construction that reproduces the (6, 32)-regular
10GBASE-T code family, and small GF(2) utilities (syndrome, rank,
4-cycle count) used for validation.
"""

from __future__ import annotations

import io
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np


class AlistFormatError(ValueError):
    """Raised for malformed alist text; carries the 1-based line number."""

    def __init__(self, line: int, message: str):
        super().__init__(f"line {line}: {message}")
        self.line = line


@dataclass(eq=False)
class ParityCheckMatrix:
    """Sparse binary parity-check matrix stored as adjacency lists.

    ``row_nbrs[i]`` lists the symbol (column) indices of check ``i``;
    ``col_nbrs[j]`` lists the check (row) indices of symbol ``j``.  Both
    views are kept consistent and the arrays are frozen after construction.
    """

    m: int
    n: int
    row_nbrs: list[np.ndarray]
    col_nbrs: list[np.ndarray]

    def __post_init__(self) -> None:
        if self.m < 1 or self.n < 1:
            raise ValueError("matrix dimensions must be positive")
        if len(self.row_nbrs) != self.m or len(self.col_nbrs) != self.n:
            raise ValueError("adjacency list count does not match dimensions")
        edges = set()
        for i, nbr in enumerate(self.row_nbrs):
            a = np.asarray(nbr, dtype=np.int32)
            if a.size and (a.min() < 0 or a.max() >= self.n):
                raise ValueError(f"check {i} references a symbol out of range")
            if len(set(a.tolist())) != a.size:
                raise ValueError(f"check {i} lists a symbol twice")
            a.flags.writeable = False
            self.row_nbrs[i] = a
            edges.update((i, int(j)) for j in a)
        col_edges = set()
        for j, nbr in enumerate(self.col_nbrs):
            a = np.asarray(nbr, dtype=np.int32)
            if a.size and (a.min() < 0 or a.max() >= self.m):
                raise ValueError(f"symbol {j} references a check out of range")
            if len(set(a.tolist())) != a.size:
                raise ValueError(f"symbol {j} lists a check twice")
            a.flags.writeable = False
            self.col_nbrs[j] = a
            col_edges.update((int(i), j) for i in a)
        if edges != col_edges:
            raise ValueError("row and column adjacency views disagree")
        self._finalize()

    def _finalize(self) -> None:
        self.check_degrees = np.array([a.size for a in self.row_nbrs], dtype=np.int32)
        self.symbol_degrees = np.array([a.size for a in self.col_nbrs], dtype=np.int32)
        # Flat concatenations with segment starts, for reduceat-style folds.
        self.row_flat = (np.concatenate(self.row_nbrs) if self.m else
                         np.empty(0, dtype=np.int32))
        self.row_starts = np.concatenate(
            ([0], np.cumsum(self.check_degrees[:-1]))).astype(np.int64)
        self.col_flat = (np.concatenate(self.col_nbrs) if self.n else
                         np.empty(0, dtype=np.int32))
        self.col_starts = np.concatenate(
            ([0], np.cumsum(self.symbol_degrees[:-1]))).astype(np.int64)
        # Rectangular index tables exist only for regular codes; the decoders
        # use them for fast gathers and fall back to flat indexing otherwise.
        self.row_rect = None
        self.col_rect = None
        if self.check_degrees.size and self.check_degrees.min() == self.check_degrees.max():
            self.row_rect = np.vstack(self.row_nbrs)
            self.row_rect.flags.writeable = False
        if self.symbol_degrees.size and self.symbol_degrees.min() == self.symbol_degrees.max():
            self.col_rect = np.vstack(self.col_nbrs)
            self.col_rect.flags.writeable = False

    @classmethod
    def from_columns(cls, m: int, n: int, col_nbrs: list) -> "ParityCheckMatrix":
        """Build from column adjacency only, deriving the row view."""
        rows: list[list[int]] = [[] for _ in range(m)]
        for j, nbr in enumerate(col_nbrs):
            for i in nbr:
                if not 0 <= int(i) < m:
                    raise ValueError(f"symbol {j} references a check out of range")
                rows[int(i)].append(j)
        return cls(m, n, [np.array(r, dtype=np.int32) for r in rows],
                   [np.asarray(c, dtype=np.int32) for c in col_nbrs])

    def is_regular(self, dv: int, dc: int) -> bool:
        return bool(np.all(self.symbol_degrees == dv) and np.all(self.check_degrees == dc))

    def to_dense(self) -> np.ndarray:
        """Dense 0/1 matrix; intended for small codes and tests."""
        H = np.zeros((self.m, self.n), dtype=np.uint8)
        for i, nbr in enumerate(self.row_nbrs):
            H[i, nbr] = 1
        return H

    def syndrome_bits(self, xbits: np.ndarray) -> np.ndarray:
        """Per-check parity (0 = satisfied) of a 0/1 decision vector."""
        xbits = np.asarray(xbits, dtype=np.uint8)
        if xbits.shape != (self.n,):
            raise ValueError(f"expected {self.n} decisions, got shape {xbits.shape}")
        if self.row_rect is not None:
            return np.bitwise_xor.reduce(xbits[self.row_rect], axis=1)
        return np.array([np.bitwise_xor.reduce(xbits[nbr]) for nbr in self.row_nbrs],
                        dtype=np.uint8)


def syndrome(H: ParityCheckMatrix, x: np.ndarray) -> np.ndarray:
    """Bipolar syndrome: s_i = prod of x_k over checks' neighbors, +1 = satisfied."""
    x = np.asarray(x)
    if x.shape != (H.n,):
        raise ValueError(f"expected {H.n} decisions, got shape {x.shape}")
    if not np.all(np.abs(x) == 1):
        raise ValueError("decisions must be +/-1")
    bits = ((1 - x.astype(np.int8)) // 2).astype(np.uint8)
    return (1 - 2 * H.syndrome_bits(bits).astype(np.int8)).astype(np.int8)


def is_codeword(H: ParityCheckMatrix, x: np.ndarray) -> bool:
    return not np.any(syndrome(H, x) == -1)


# ---------------------------------------------------------------------------
# alist I/O


def _tokens(lines: list[str], idx: int) -> list[str]:
    if idx >= len(lines):
        raise AlistFormatError(idx + 1, "file ends before all sections are present")
    return lines[idx].split()


def _ints(lines: list[str], idx: int, what: str) -> list[int]:
    out = []
    for tok in _tokens(lines, idx):
        try:
            out.append(int(tok))
        except ValueError:
            raise AlistFormatError(idx + 1, f"{what}: {tok!r} is not an integer") from None
    return out


def _neighbor_list(lines: list[str], idx: int, deg: int, max_deg: int,
                   limit: int, what: str) -> list[int]:
    vals = _ints(lines, idx, what)
    if len(vals) not in (deg, max_deg):
        raise AlistFormatError(
            idx + 1, f"{what}: expected {deg} entries (or {max_deg} zero-padded), got {len(vals)}")
    nbr = []
    for pos, v in enumerate(vals):
        if pos < deg:
            if not 1 <= v <= limit:
                raise AlistFormatError(idx + 1, f"{what}: index {v} outside 1..{limit}")
            nbr.append(v - 1)
        elif v != 0:
            raise AlistFormatError(idx + 1, f"{what}: padding entry {pos + 1} must be 0, got {v}")
    if len(set(nbr)) != len(nbr):
        raise AlistFormatError(idx + 1, f"{what}: duplicate index")
    return nbr


def parse_alist(source) -> ParityCheckMatrix:
    """Parse alist text (string or readable file object) into a matrix.

    The format is the usual one: ``n m`` header, max column/row degrees,
    per-column then per-row degree lines, then one neighbor line per column
    and per row using 1-based indices, optionally zero-padded to the max
    degree.  Errors report the offending 1-based line.
    """
    if hasattr(source, "read"):
        text = source.read()
    else:
        text = source
    lines = text.splitlines()
    while lines and not lines[-1].split():
        lines.pop()

    head = _ints(lines, 0, "header")
    if len(head) != 2:
        raise AlistFormatError(1, f"header must be 'n m', got {len(head)} values")
    n, m = head
    if n < 1 or m < 1:
        raise AlistFormatError(1, "dimensions must be positive")
    maxdeg = _ints(lines, 1, "max degrees")
    if len(maxdeg) != 2:
        raise AlistFormatError(2, "expected max column and row degree")
    dv_max, dc_max = maxdeg

    col_deg = _ints(lines, 2, "column degrees")
    if len(col_deg) != n:
        raise AlistFormatError(3, f"expected {n} column degrees, got {len(col_deg)}")
    row_deg = _ints(lines, 3, "row degrees")
    if len(row_deg) != m:
        raise AlistFormatError(4, f"expected {m} row degrees, got {len(row_deg)}")
    for j, d in enumerate(col_deg):
        if not 1 <= d <= dv_max:
            raise AlistFormatError(3, f"column {j + 1} degree {d} outside 1..{dv_max}")
    for i, d in enumerate(row_deg):
        if not 1 <= d <= dc_max:
            raise AlistFormatError(4, f"row {i + 1} degree {d} outside 1..{dc_max}")

    cols = []
    for j in range(n):
        cols.append(_neighbor_list(lines, 4 + j, col_deg[j], dv_max, m, f"column {j + 1}"))
    rows = []
    for i in range(m):
        rows.append(_neighbor_list(lines, 4 + n + i, row_deg[i], dc_max, n, f"row {i + 1}"))
    if len(lines) > 4 + n + m:
        raise AlistFormatError(4 + n + m + 1, "unexpected trailing content")

    try:
        return ParityCheckMatrix(m, n, [np.array(r, dtype=np.int32) for r in rows],
                                 [np.array(c, dtype=np.int32) for c in cols])
    except ValueError as e:
        raise AlistFormatError(4 + n + m, str(e)) from None


def serialize_alist(H: ParityCheckMatrix) -> str:
    """Render a matrix in canonical zero-padded alist text."""
    if H.symbol_degrees.min() < 1 or H.check_degrees.min() < 1:
        raise ValueError("alist cannot represent degree-0 rows or columns")
    dv_max = int(H.symbol_degrees.max())
    dc_max = int(H.check_degrees.max())
    out = io.StringIO()
    out.write(f"{H.n} {H.m}\n")
    out.write(f"{dv_max} {dc_max}\n")
    out.write(" ".join(str(int(d)) for d in H.symbol_degrees) + "\n")
    out.write(" ".join(str(int(d)) for d in H.check_degrees) + "\n")
    for nbr in H.col_nbrs:
        vals = [str(int(i) + 1) for i in nbr] + ["0"] * (dv_max - nbr.size)
        out.write(" ".join(vals) + "\n")
    for nbr in H.row_nbrs:
        vals = [str(int(j) + 1) for j in nbr] + ["0"] * (dc_max - nbr.size)
        out.write(" ".join(vals) + "\n")
    return out.getvalue()


# ---------------------------------------------------------------------------
# Algebraic construction


def _gf_tables(field_bits: int, primitive_poly: int) -> tuple[np.ndarray, np.ndarray]:
    """Exp/log tables for GF(2^field_bits) under the given primitive polynomial."""
    q = 1 << field_bits
    exp = np.zeros(q - 1, dtype=np.int64)
    log = np.full(q, -1, dtype=np.int64)
    v = 1
    for k in range(q - 1):
        if log[v] != -1:
            raise ValueError(f"polynomial {primitive_poly:#x} is not primitive for GF({q})")
        exp[k] = v
        log[v] = k
        v <<= 1
        if v & q:
            v ^= primitive_poly
    if v != 1:
        raise ValueError(f"polynomial {primitive_poly:#x} is not primitive for GF({q})")
    return exp, log


def _gf_mul(a: int, b: int, exp: np.ndarray, log: np.ndarray) -> int:
    if a == 0 or b == 0:
        return 0
    order = exp.size
    return int(exp[(log[a] + log[b]) % order])


@lru_cache(maxsize=4)
def build_rs_ldpc(row_blocks: int = 6, col_blocks: int = 32, field_bits: int = 6,
                  primitive_poly: int = 0b1000011) -> ParityCheckMatrix:
    """Build a (row_blocks, col_blocks)-regular LDPC matrix from GF(2^field_bits).

    Checks form ``row_blocks`` blocks of ``q = 2**field_bits`` rows and
    symbols form ``col_blocks`` blocks of ``q`` columns.  Block row ``i``
    evaluates the point ``alpha**i`` and block column ``j`` applies the
    multiplier ``alpha**j``; symbol ``(j, v)`` meets check ``(i, v + alpha**i *
    alpha**j)`` with field addition (XOR).  Because every pairwise collision
    condition is a degree-1 equation in the row point, two distinct columns
    share at most one check, so the graph has no 4-cycles.

    The defaults give the 2048x384 (6, 32)-regular 10GBASE-T code class
    (rank 325, rate 1723/2048).
    """
    q = 1 << field_bits
    if not 1 <= row_blocks <= q - 1 or not 1 <= col_blocks <= q - 1:
        raise ValueError(f"block counts must lie in 1..{q - 1}")
    exp, log = _gf_tables(field_bits, primitive_poly)
    points = [int(exp[i]) for i in range(row_blocks)]
    mults = [int(exp[j]) for j in range(col_blocks)]
    if len(set(points)) != row_blocks or len(set(mults)) != col_blocks:
        raise ValueError("construction requires distinct points and multipliers")

    n = col_blocks * q
    m = row_blocks * q
    cols = np.empty((n, row_blocks), dtype=np.int32)
    for j, b in enumerate(mults):
        prods = [_gf_mul(a, b, exp, log) for a in points]
        for v in range(q):
            c = j * q + v
            cols[c] = [i * q + (v ^ prods[i]) for i in range(row_blocks)]
    H = ParityCheckMatrix.from_columns(m, n, list(cols))
    if not H.is_regular(row_blocks, col_blocks):
        raise ValueError("construction produced an irregular matrix")
    if count_four_cycles(H) != 0:
        raise ValueError("construction produced 4-cycles")
    return H


# ---------------------------------------------------------------------------
# Validation utilities


@dataclass
class RegularityReport:
    """Outcome of checking a matrix against expected regular degrees."""

    n: int
    m: int
    expected_symbol_degree: int
    expected_check_degree: int
    bad_symbols: list = field(default_factory=list)
    bad_checks: list = field(default_factory=list)
    four_cycles: int = 0

    @property
    def ok(self) -> bool:
        return not self.bad_symbols and not self.bad_checks and self.four_cycles == 0

    def to_dict(self) -> dict:
        return {
            "n": self.n,
            "m": self.m,
            "expected_symbol_degree": self.expected_symbol_degree,
            "expected_check_degree": self.expected_check_degree,
            "bad_symbols": [list(map(int, t)) for t in self.bad_symbols],
            "bad_checks": [list(map(int, t)) for t in self.bad_checks],
            "four_cycles": int(self.four_cycles),
            "ok": self.ok,
        }


def validate_regular(H: ParityCheckMatrix, dv: int, dc: int,
                     count_cycles: bool = True) -> RegularityReport:
    """Check degrees (and optionally 4-cycle freedom) against a regular profile."""
    rep = RegularityReport(H.n, H.m, dv, dc)
    for j, d in enumerate(H.symbol_degrees):
        if d != dv:
            rep.bad_symbols.append((j, int(d)))
    for i, d in enumerate(H.check_degrees):
        if d != dc:
            rep.bad_checks.append((i, int(d)))
    if count_cycles:
        rep.four_cycles = count_four_cycles(H)
    return rep


def count_four_cycles(H: ParityCheckMatrix) -> int:
    """Number of 4-cycles: column pairs sharing two or more checks, summed."""
    A = H.to_dense().astype(np.float32)
    S = A @ A.T  # S[i,i'] = columns shared by checks i and i'
    iu = np.triu_indices(H.m, k=1)
    shared = S[iu].astype(np.int64)
    return int(np.sum(shared * (shared - 1) // 2))


def gf2_rank(H: ParityCheckMatrix) -> int:
    """Rank over GF(2) via bitset row elimination."""
    rows = []
    for nbr in H.row_nbrs:
        r = 0
        for j in nbr:
            r |= 1 << int(j)
        rows.append(r)
    pivots: dict[int, int] = {}
    rank = 0
    for r in rows:
        while r:
            msb = r.bit_length() - 1
            if msb not in pivots:
                pivots[msb] = r
                rank += 1
                break
            r ^= pivots[msb]
    return rank
