"""Matrix Market and right-hand-side file I/O.

Only the ``matrix`` object is supported, in ``coordinate`` or ``array``
layout, with ``real``, ``integer`` or ``complex`` fields and ``general``,
``symmetric``, ``skew-symmetric`` or ``hermitian`` symmetry. ``pattern``
files are rejected.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np

from .errors import MatrixMarketError

__all__ = ["read_matrix_market", "write_matrix_market", "read_rhs", "write_rhs"]

_FIELDS = {"real", "integer", "complex"}
_SYMMETRIES = {"general", "symmetric", "skew-symmetric", "hermitian"}


def _tokens(lines):
    """Yield ``(lineno, tokens)`` for non-comment, non-blank lines."""
    for no, line in lines:
        s = line.strip()
        if not s or s.startswith("%"):
            continue
        yield no, s.split()


def _value(tok, field, no):
    try:
        if field == "complex":
            return complex(float(tok[0]), float(tok[1]))
        if field == "integer":
            return complex(int(tok[0]))
        return complex(float(tok[0]))
    except (ValueError, IndexError):
        raise MatrixMarketError(f"bad {field} value {' '.join(tok)!r}", no) from None


def read_matrix_market(path) -> np.ndarray:
    """Read a Matrix Market file into a dense complex array.

    Duplicate coordinate entries are summed, symmetric storage is expanded.
    Errors carry the offending line number.
    """
    text = Path(path).read_text().splitlines()
    if not text:
        raise MatrixMarketError("empty file", 1)
    head = text[0].split()
    if len(head) != 5 or head[0] != "%%MatrixMarket":
        raise MatrixMarketError("missing '%%MatrixMarket' banner", 1)
    obj, fmt, field, sym = (h.lower() for h in head[1:])
    if obj != "matrix":
        raise MatrixMarketError(f"unsupported object {obj!r}", 1)
    if fmt not in ("coordinate", "array"):
        raise MatrixMarketError(f"unsupported format {fmt!r}", 1)
    if field == "pattern":
        raise MatrixMarketError("pattern matrices are not supported (no numeric values)", 1)
    if field not in _FIELDS:
        raise MatrixMarketError(f"unsupported field {field!r}", 1)
    if sym not in _SYMMETRIES:
        raise MatrixMarketError(f"unsupported symmetry {sym!r}", 1)
    if sym == "hermitian" and field != "complex":
        sym = "symmetric"

    body = _tokens(enumerate(text[1:], start=2))
    try:
        no, size = next(body)
    except StopIteration:
        raise MatrixMarketError("missing size line", len(text)) from None
    want = 3 if fmt == "coordinate" else 2
    try:
        dims = [int(t) for t in size]
    except ValueError:
        raise MatrixMarketError(f"bad size line {' '.join(size)!r}", no) from None
    if len(dims) != want or min(dims) < 0:
        raise MatrixMarketError(f"bad size line {' '.join(size)!r}", no)
    rows, cols = dims[:2]
    if sym != "general" and rows != cols:
        raise MatrixMarketError(f"{sym} matrix must be square", no)
    A = np.zeros((rows, cols), dtype=complex)
    nval = 2 if field == "complex" else 1

    def put(i, j, v):
        A[i, j] += v
        if i != j:
            if sym == "symmetric":
                A[j, i] += v
            elif sym == "skew-symmetric":
                A[j, i] -= v
            elif sym == "hermitian":
                A[j, i] += np.conj(v)

    if fmt == "coordinate":
        nnz = dims[2]
        count = 0
        for no, tok in body:
            if len(tok) != 2 + nval:
                raise MatrixMarketError(f"expected {2 + nval} tokens, got {len(tok)}", no)
            try:
                i, j = int(tok[0]) - 1, int(tok[1]) - 1
            except ValueError:
                raise MatrixMarketError(f"bad index in {' '.join(tok)!r}", no) from None
            if not (0 <= i < rows and 0 <= j < cols):
                raise MatrixMarketError(f"index ({i + 1}, {j + 1}) outside {rows} x {cols}", no)
            if sym != "general" and j > i:
                raise MatrixMarketError(f"entry above the diagonal in {sym} storage", no)
            put(i, j, _value(tok[2:], field, no))
            count += 1
        if count != nnz:
            raise MatrixMarketError(f"expected {nnz} entries, found {count}", len(text))
    else:
        if sym == "general":
            slots = [(i, j) for j in range(cols) for i in range(rows)]
        else:
            lo = 1 if sym == "skew-symmetric" else 0
            slots = [(i, j) for j in range(cols) for i in range(j + lo, rows)]
        k = 0
        for no, tok in body:
            if len(tok) != nval:
                raise MatrixMarketError(f"expected {nval} tokens, got {len(tok)}", no)
            if k >= len(slots):
                raise MatrixMarketError("too many values", no)
            put(*slots[k], _value(tok, field, no))
            k += 1
        if k != len(slots):
            raise MatrixMarketError(f"expected {len(slots)} values, found {k}", len(text))
    return A


def write_matrix_market(path, A, comment=None) -> None:
    """Write ``A`` as ``coordinate complex general`` (nonzeros only)."""
    A = np.asarray(A, dtype=complex)
    rows, cols = A.shape
    nz = np.argwhere(A.T != 0)[:, ::-1]  # column-major order
    out = ["%%MatrixMarket matrix coordinate complex general"]
    if comment:
        out += [f"% {line}" for line in comment.splitlines()]
    out.append(f"{rows} {cols} {len(nz)}")
    for i, j in nz:
        v = A[i, j]
        out.append(f"{i + 1} {j + 1} {float(v.real)!r} {float(v.imag)!r}")
    Path(path).write_text("\n".join(out) + "\n")


def read_rhs(path) -> np.ndarray:
    """One complex entry per line as ``re im`` (a lone ``re`` is accepted)."""
    vals = []
    for no, tok in _tokens(enumerate(Path(path).read_text().splitlines(), start=1)):
        if len(tok) > 2:
            raise MatrixMarketError(f"expected 're im', got {' '.join(tok)!r}", no)
        try:
            vals.append(complex(float(tok[0]), float(tok[1]) if len(tok) == 2 else 0.0))
        except ValueError:
            raise MatrixMarketError(f"non-numeric entry {' '.join(tok)!r}", no) from None
    if not vals:
        raise MatrixMarketError("right-hand side file is empty", 1)
    return np.array(vals, dtype=complex)


def write_rhs(path, b) -> None:
    b = np.asarray(b, dtype=complex)
    Path(path).write_text("".join(f"{float(v.real)!r} {float(v.imag)!r}\n" for v in b))
