"""Runge-Kutta and MRI coefficient records.

Coefficient files are plain text, one record per line::

    type butcher
    name heun_euler_2_1
    kind explicit
    order 2
    embedding 1
    c  0.0000000000000000e+00 1.0000000000000000e+00
    A  0.0000000000000000e+00 0.0000000000000000e+00
    A  1.0000000000000000e+00 0.0000000000000000e+00
    b  5.0000000000000000e-01 5.0000000000000000e-01
    bt 1.0000000000000000e+00 0.0000000000000000e+00

MRI couplings use ``type mri``, a ``degree K`` record and rows tagged
``W<k>`` / ``G<k>`` for the explicit and implicit coupling matrices.
Lines starting with ``#`` are comments.
"""

import enum
import io
import os
import warnings
from dataclasses import dataclass, field
from fractions import Fraction
from typing import List, Optional

import numpy as np

from . import catalog_data


class TableError(ValueError):
    """Malformed coefficient file or violated structural invariant."""


ROW_SUM_TOL = 1e-12


def _arr(x, ndim):
    a = np.array(x, dtype=np.float64)
    if a.ndim != ndim:
        raise TableError(f"expected {ndim}-d coefficients, got shape {a.shape}")
    return a


@dataclass
class ButcherTable:
    A: np.ndarray
    b: np.ndarray
    c: np.ndarray
    bt: Optional[np.ndarray] = None
    q: int = 1
    p: Optional[int] = None
    kind: str = "explicit"
    name: str = ""

    def __post_init__(self):
        self.A = _arr(self.A, 2)
        self.b = _arr(self.b, 1)
        self.c = _arr(self.c, 1)
        s = self.b.shape[0]
        if self.A.shape != (s, s) or self.c.shape != (s,):
            raise TableError(f"{self.name}: inconsistent shapes A{self.A.shape}, "
                             f"b({s},), c{self.c.shape}")
        if self.bt is not None:
            self.bt = _arr(self.bt, 1)
            if self.bt.shape != (s,):
                raise TableError(f"{self.name}: embedding has wrong length")
        else:
            self.p = None
        if self.kind not in ("explicit", "dirk"):
            raise TableError(f"{self.name}: unknown kind {self.kind!r}")
        if self.kind == "explicit" and np.any(np.triu(self.A) != 0):
            raise TableError(f"{self.name}: explicit table must have strictly "
                             "lower triangular A")
        if self.kind == "dirk" and np.any(np.triu(self.A, 1) != 0):
            raise TableError(f"{self.name}: dirk table must have lower triangular A")
        rowsum = np.abs(self.c - self.A.sum(axis=1))
        if np.any(rowsum > ROW_SUM_TOL):
            warnings.warn(f"{self.name}: row sums of A differ from c by up to "
                          f"{rowsum.max():.3e}", stacklevel=3)

    @property
    def s(self):
        return self.b.shape[0]

    @property
    def adaptive(self):
        return self.bt is not None

    @property
    def stiffly_accurate(self):
        return bool(np.array_equal(self.A[-1], self.b) and self.c[-1] == 1.0)

    @property
    def d(self):
        """``b - bt``, the error-estimate weights."""
        return None if self.bt is None else self.b - self.bt


@dataclass
class MriCoupling:
    """Slow-to-fast coupling: ``W[k]`` holds Omega^{k}, ``G[k]`` Gamma^{k}."""

    c: np.ndarray
    W: np.ndarray
    G: np.ndarray
    q: int = 2
    name: str = ""

    def __post_init__(self):
        self.c = _arr(self.c, 1)
        s = self.c.shape[0]
        self.W = np.zeros((1, s, s)) if self.W is None else _arr(self.W, 3)
        self.G = np.zeros_like(self.W) if self.G is None else _arr(self.G, 3)
        if self.W.shape[1:] != (s, s) or self.G.shape[1:] != (s, s):
            raise TableError(f"{self.name}: coupling matrices must be {s}x{s}")
        K = max(self.W.shape[0], self.G.shape[0])
        if K > 3:
            raise TableError(f"{self.name}: polynomial degree K={K - 1} exceeds 2")
        self.W = _pad_k(self.W, K)
        self.G = _pad_k(self.G, K)
        if s < 2 or self.c[0] != 0.0 or self.c[-1] != 1.0:
            raise TableError(f"{self.name}: abscissae must start at 0 and end at 1")
        if np.any(np.diff(self.c) < 0):
            raise TableError(f"{self.name}: abscissae must be nondecreasing")
        if np.any(np.triu(self.W, 0) != 0):
            raise TableError(f"{self.name}: solve-decoupled structure requires "
                             "omega_ij = 0 for j >= i")
        if np.any(np.triu(self.G, 1) != 0):
            raise TableError(f"{self.name}: solve-decoupled structure requires "
                             "gamma_ij = 0 for j > i")
        dc = np.diff(self.c)
        diag = np.any(np.diagonal(self.G, axis1=1, axis2=2) != 0, axis=0)
        if np.any(diag[1:] & (dc != 0)) or diag[0]:
            raise TableError(f"{self.name}: solve-decoupled structure requires "
                             "dc_i = 0 whenever gamma_ii != 0")

    @property
    def s(self):
        return self.c.shape[0]

    @property
    def K(self):
        return self.W.shape[0] - 1

    @property
    def has_explicit(self):
        return bool(np.any(self.W != 0))

    @property
    def has_implicit(self):
        return bool(np.any(self.G != 0))

    def ark_rows(self, i):
        """Effective ARK rows ``(A^E_i, A^I_i)`` for 0-based stage ``i``."""
        scale = 1.0 / np.arange(1, self.K + 2)
        return (np.tensordot(scale, self.W[:, i, :], axes=1),
                np.tensordot(scale, self.G[:, i, :], axes=1))


def _pad_k(M, K):
    if M.shape[0] == K:
        return M
    out = np.zeros((K,) + M.shape[1:])
    out[: M.shape[0]] = M
    return out


class StageKind(enum.Enum):
    FAST = "fast-IVP"
    EXPLICIT = "explicit-ark"
    IMPLICIT = "implicit-ark"


def mri_stage_kind(coupling: MriCoupling, i: int) -> StageKind:
    """Classify 1-based stage ``i`` (2 <= i <= s)."""
    if not 2 <= i <= coupling.s:
        raise ValueError(f"stage index {i} outside 2..{coupling.s}")
    if coupling.c[i - 1] - coupling.c[i - 2] > 0:
        return StageKind.FAST
    _, ai = coupling.ark_rows(i - 1)
    return StageKind.IMPLICIT if ai[i - 1] != 0 else StageKind.EXPLICIT


# ---------------------------------------------------------------------------
# order conditions
# ---------------------------------------------------------------------------

def _conditions(b, A, c, up_to):
    one = b.dtype.type(1) if hasattr(b, "dtype") else 1
    Ac = A @ c
    out = []
    if up_to >= 1:
        out.append(("1", sum(b), Fraction(1)))
    if up_to >= 2:
        out.append(("2", b @ c, Fraction(1, 2)))
    if up_to >= 3:
        out.append(("3a", b @ (c * c), Fraction(1, 3)))
        out.append(("3b", b @ Ac, Fraction(1, 6)))
    if up_to >= 4:
        out.append(("4a", b @ (c * c * c), Fraction(1, 4)))
        out.append(("4b", b @ (c * Ac), Fraction(1, 8)))
        out.append(("4c", b @ (A @ (c * c)), Fraction(1, 12)))
        out.append(("4d", b @ (A @ Ac), Fraction(1, 24)))
    del one
    return out


def order_condition_residuals(table: ButcherTable, up_to: int, exact=False):
    """Absolute residuals of the rooted-tree conditions through ``up_to`` (<= 4).

    Returns ``[(id, residual), ...]``; ids are prefixed ``b:`` for the main
    weights and ``bt:`` for the embedding. With ``exact=True`` the table's
    coefficients must be :class:`fractions.Fraction` object arrays and the
    residuals are exact.
    """
    if up_to > 4:
        raise ValueError("order conditions are only tabulated through order 4")
    out = []
    weights = [("b", table.b)] + ([("bt", table.bt)] if table.bt is not None else [])
    for tag, w in weights:
        for cid, val, target in _conditions(w, table.A, table.c, up_to):
            res = abs(val - target) if exact else abs(float(val) - float(target))
            out.append((f"{tag}:{cid}", res))
    return out


def ark_coupling_residuals(explicit: ButcherTable, implicit: ButcherTable, up_to: int):
    """Mixed-partition order conditions for an ARK pair with shared b and c."""
    b, c = implicit.b, implicit.c
    mats = {"E": explicit.A, "I": implicit.A}
    out = []
    for X, AX in mats.items():
        if up_to >= 3:
            out.append((f"3b[{X}]", abs(b @ (AX @ c) - 1 / 6)))
        if up_to >= 4:
            out.append((f"4b[{X}]", abs(b @ (c * (AX @ c)) - 1 / 8)))
            out.append((f"4c[{X}]", abs(b @ (AX @ (c * c)) - 1 / 12)))
            for Y, AY in mats.items():
                out.append((f"4d[{X}{Y}]", abs(b @ (AX @ (AY @ c)) - 1 / 24)))
    return out


# ---------------------------------------------------------------------------
# MIS conversion
# ---------------------------------------------------------------------------

def _check_mis_slow(slow: ButcherTable):
    if slow.kind != "explicit":
        raise TableError("MIS slow table must be explicit")
    if np.any(np.diff(slow.c) < 0):
        raise TableError("MIS slow table needs sorted abscissae")


def mis_to_mri(slow: ButcherTable) -> MriCoupling:
    """MRI coupling of the multirate infinitesimal step method built on ``slow``."""
    _check_mis_slow(slow)
    sh = slow.s
    s = sh + 1
    c = np.append(slow.c, 1.0)
    W = np.zeros((1, s, s))
    A = np.zeros((s, s))
    A[:sh, :sh] = slow.A
    for i in range(1, s - 1):
        W[0, i] = A[i] - A[i - 1]
    W[0, s - 1, :sh] = slow.b - slow.A[sh - 1]
    return MriCoupling(c=c, W=W, G=None, q=min(slow.q, 2),
                       name=f"mis({slow.name})" if slow.name else "mis")


def compose_mri(base: MriCoupling, m: int, name=None) -> MriCoupling:
    """Coupling whose single step equals ``m`` steps of ``base`` with ``H / m``."""
    if m < 1:
        raise TableError("composition count must be positive")
    sb = base.s
    s = m * (sb - 1) + 1
    K1 = base.K + 1
    c = np.zeros(s)
    W = np.zeros((K1, s, s))
    G = np.zeros((K1, s, s))
    for k in range(m):
        off = k * (sb - 1)
        c[off:off + sb] = (k + base.c) / m
        W[:, off:off + sb, off:off + sb] += np.where(
            np.arange(sb)[:, None] > 0, base.W, 0.0) / m
        G[:, off:off + sb, off:off + sb] += np.where(
            np.arange(sb)[:, None] > 0, base.G, 0.0) / m
    c[-1] = 1.0
    return MriCoupling(c=c, W=W, G=G, q=base.q,
                       name=name or f"{base.name}x{m}")


def mis_third_order_residual(slow: ButcherTable) -> float:
    """Left side minus 1/3 of the third-order MIS coupling condition."""
    _check_mis_slow(slow)
    A, c = slow.A, slow.c
    Ac = A @ c
    sh = slow.s
    total = 0.0
    for i in range(1, sh):
        total += (c[i] - c[i - 1]) * (Ac[i] + Ac[i - 1])
    total += (1.0 - c[sh - 1]) * (0.5 + Ac[sh - 1])
    return total - 1.0 / 3.0


# ---------------------------------------------------------------------------
# files and catalog
# ---------------------------------------------------------------------------

def _fmt(row):
    return " ".join(f"{float(x):.16e}" for x in row)


def serialize(table) -> str:
    """Text form accepted by :func:`load_table`."""
    buf = io.StringIO()
    if isinstance(table, ButcherTable):
        buf.write("type butcher\n")
        if table.name:
            buf.write(f"name {table.name}\n")
        buf.write(f"kind {table.kind}\norder {table.q}\n")
        if table.bt is not None and table.p is not None:
            buf.write(f"embedding {table.p}\n")
        buf.write(f"c {_fmt(table.c)}\n")
        for row in table.A:
            buf.write(f"A {_fmt(row)}\n")
        buf.write(f"b {_fmt(table.b)}\n")
        if table.bt is not None:
            buf.write(f"bt {_fmt(table.bt)}\n")
    elif isinstance(table, MriCoupling):
        buf.write("type mri\n")
        if table.name:
            buf.write(f"name {table.name}\n")
        buf.write(f"order {table.q}\ndegree {table.K}\n")
        buf.write(f"c {_fmt(table.c)}\n")
        for tag, mats in (("W", table.W), ("G", table.G)):
            for k, M in enumerate(mats):
                if np.any(M != 0):
                    for row in M:
                        buf.write(f"{tag}{k} {_fmt(row)}\n")
    else:
        raise TypeError(f"cannot serialize {type(table).__name__}")
    return buf.getvalue()


def save_table(table, path):
    with open(path, "w") as fh:
        fh.write(serialize(table))


def _parse_floats(tokens, lineno):
    try:
        return [float(t) for t in tokens]
    except ValueError as exc:
        raise TableError(f"line {lineno}: {exc}") from None


def parse_table(text: str):
    """Parse coefficient-file text into a :class:`ButcherTable` or :class:`MriCoupling`."""
    meta, rows = {}, {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        key, *rest = line.split()
        if key in ("type", "name", "kind"):
            if len(rest) != 1:
                raise TableError(f"line {lineno}: {key} takes one value")
            meta[key] = rest[0]
        elif key in ("order", "embedding", "degree", "stages"):
            try:
                meta[key] = int(rest[0])
            except (IndexError, ValueError):
                raise TableError(f"line {lineno}: {key} needs an integer") from None
        elif key in ("c", "b", "bt", "A") or key[:1] in ("W", "G") and key[1:].isdigit():
            rows.setdefault(key, []).append(_parse_floats(rest, lineno))
        else:
            raise TableError(f"line {lineno}: unknown record {key!r}")

    def single(key, required=True):
        if key not in rows:
            if required:
                raise TableError(f"missing {key!r} record")
            return None
        if len(rows[key]) != 1:
            raise TableError(f"record {key!r} repeated")
        return rows[key][0]

    kind = meta.get("type", "butcher")
    c = single("c")
    s = len(c)
    if "stages" in meta and meta["stages"] != s:
        raise TableError(f"stages={meta['stages']} but c has {s} entries")
    if kind == "butcher":
        A = rows.get("A", [])
        if len(A) != s or any(len(r) != s for r in A):
            raise TableError(f"A must be {s}x{s}")
        b = single("b")
        bt = single("bt", required=False)
        if len(b) != s or (bt is not None and len(bt) != s):
            raise TableError(f"b/bt must have {s} entries")
        return ButcherTable(A=A, b=b, c=c, bt=bt, q=meta.get("order", 1),
                            p=meta.get("embedding"), kind=meta.get("kind", "explicit"),
                            name=meta.get("name", ""))
    if kind == "mri":
        K = meta.get("degree", 0)
        if not 0 <= K <= 2:
            raise TableError("degree K must satisfy 0 <= K <= 2")
        mats = {"W": np.zeros((K + 1, s, s)), "G": np.zeros((K + 1, s, s))}
        for key, val in rows.items():
            if key[:1] in ("W", "G") and key[1:].isdigit():
                k = int(key[1:])
                if k > K:
                    raise TableError(f"{key} exceeds declared degree {K}")
                if len(val) != s or any(len(r) != s for r in val):
                    raise TableError(f"{key} must be {s}x{s}")
                mats[key[0]][k] = val
        return MriCoupling(c=c, W=mats["W"], G=mats["G"], q=meta.get("order", 2),
                           name=meta.get("name", ""))
    raise TableError(f"unknown table type {kind!r}")


def load_table(source):
    """Load from a path, an open file, or a catalog name."""
    if hasattr(source, "read"):
        return parse_table(source.read())
    source = str(source)
    if os.path.exists(source):
        with open(source) as fh:
            return parse_table(fh.read())
    if source in available():
        return get(source)
    if "\n" in source:
        return parse_table(source)
    raise TableError(f"no such file or catalog entry: {source!r}")


def _rat(x):
    return Fraction(x)


def _square(rows, s, conv):
    out = [[conv("0")] * s for _ in range(s)]
    for i, row in enumerate(rows):
        for j, v in enumerate(row):
            out[i][j] = conv(v)
    return out


def exact_table(name):
    """Catalog entry with :class:`~fractions.Fraction` coefficients."""
    entry = catalog_data.ERK.get(name) or catalog_data.DIRK.get(name)
    if entry is None:
        raise KeyError(name)
    s = len(entry["b"])
    A = np.array(_square(entry["A"], s, _rat), dtype=object)
    b = np.array([_rat(x) for x in entry["b"]], dtype=object)
    c = np.array([_rat(x) for x in entry["c"]], dtype=object)
    bt = None if "bt" not in entry else np.array([_rat(x) for x in entry["bt"]], dtype=object)
    return A, b, c, bt


def _build_butcher(name, entry, kind):
    s = len(entry["b"])
    to_f = lambda v: float(Fraction(v))  # noqa: E731
    bt = entry.get("bt")
    return ButcherTable(
        A=_square(entry["A"], s, to_f),
        b=[to_f(x) for x in entry["b"]],
        c=[to_f(x) for x in entry["c"]],
        bt=None if bt is None else [to_f(x) for x in bt],
        q=entry["q"], p=entry.get("p"), kind=kind, name=name)


def _build_mri(name, entry):
    to_f = lambda v: float(Fraction(v))  # noqa: E731
    s = len(entry["c"])
    W = None if entry["W"] is None else [_square(m, s, to_f) for m in entry["W"]]
    G = None if entry["G"] is None else [_square(m, s, to_f) for m in entry["G"]]
    return MriCoupling(c=[to_f(x) for x in entry["c"]], W=W, G=G,
                       q=entry["q"], name=name)


_CACHE = {}


def available() -> List[str]:
    names = list(catalog_data.ERK) + list(catalog_data.DIRK) + list(catalog_data.MRI)
    names += list(catalog_data.ARK_PAIRS) + ["mis_knoth_wolke_3"] + list(_COMPOSED)
    return names


_COMPOSED = {"imex_mri_heun_trap_2x3": ("imex_mri_heun_trap_2", 3)}


def get(name):
    """Catalog lookup; ARK pair names return ``(explicit, implicit)``."""
    if name in _CACHE:
        return _CACHE[name]
    if name in catalog_data.ERK:
        out = _build_butcher(name, catalog_data.ERK[name], "explicit")
    elif name in catalog_data.DIRK:
        out = _build_butcher(name, catalog_data.DIRK[name], "dirk")
    elif name in catalog_data.ARK_PAIRS:
        e, i = catalog_data.ARK_PAIRS[name]
        out = (get(e), get(i))
    elif name in catalog_data.MRI:
        out = _build_mri(name, catalog_data.MRI[name])
    elif name in _COMPOSED:
        base, m = _COMPOSED[name]
        out = compose_mri(get(base), m, name)
    elif name == "mis_knoth_wolke_3":
        out = mis_to_mri(get("knoth_wolke_3_3"))
        out.q = 3
        out.name = name
    else:
        raise KeyError(f"unknown method {name!r}; available: {', '.join(available())}")
    _CACHE[name] = out
    return out


def erk_names():
    return [n for n, e in catalog_data.ERK.items() if "bt" in e and "ark" not in n]


def dirk_names():
    return list(catalog_data.DIRK)


def ark_names():
    return list(catalog_data.ARK_PAIRS)
