"""Exact dense linear algebra over the rationals.

Everything downstream (gradings, prolongations, Grassmannian checks) reduces
to kernels, intersections and membership tests of rational matrices, so this
module insists on exactness: no floats anywhere, canonical echelon bases,
equality of subspaces by plain ``==`` on their basis matrices.

The elimination core works on integer rows (denominators cleared, rows kept
gcd-reduced) so that pivoting never divides; Fractions appear only at the
API boundary.
"""

from __future__ import annotations

from fractions import Fraction
from math import gcd

# Scalars are arbitrary-precision rationals, always stored in lowest terms
# with positive denominator; fractions.Fraction guarantees both.
Scalar = Fraction

ZERO = Fraction(0)
ONE = Fraction(1)


def _coerce(x) -> Fraction:
    if isinstance(x, Fraction):
        return x
    if isinstance(x, int):
        return Fraction(x)
    if isinstance(x, str):
        return Fraction(x)
    raise TypeError(f"expected rational scalar, got {type(x).__name__}")


class Matrix:
    """Immutable dense matrix with Fraction entries."""

    __slots__ = ("rows", "cols", "_entries")

    def __init__(self, entries, rows=None, cols=None):
        data = tuple(tuple(_coerce(x) for x in row) for row in entries)
        if data:
            ncols = len(data[0])
            if any(len(row) != ncols for row in data):
                raise ValueError("ragged rows")
        else:
            ncols = cols if cols is not None else 0
        object.__setattr__(self, "rows", rows if rows is not None else len(data))
        object.__setattr__(self, "cols", ncols)
        object.__setattr__(self, "_entries", data)
        if self.rows != len(data):
            raise ValueError("row count mismatch")

    def __setattr__(self, *a):
        raise AttributeError("Matrix is immutable")

    # -- constructors -------------------------------------------------

    @classmethod
    def zero(cls, rows: int, cols: int) -> "Matrix":
        return cls([[ZERO] * cols for _ in range(rows)], rows=rows, cols=cols)

    @classmethod
    def identity(cls, n: int) -> "Matrix":
        return cls([[ONE if i == j else ZERO for j in range(n)] for i in range(n)])

    @classmethod
    def from_columns(cls, columns, ambient_dim=None) -> "Matrix":
        cols = [list(c) for c in columns]
        if cols:
            n = len(cols[0])
        else:
            if ambient_dim is None:
                raise ValueError("ambient_dim required for empty column list")
            n = ambient_dim
        return cls([[cols[j][i] for j in range(len(cols))] for i in range(n)],
                   rows=n, cols=len(cols))

    @classmethod
    def diagonal(cls, diag) -> "Matrix":
        d = [_coerce(x) for x in diag]
        n = len(d)
        return cls([[d[i] if i == j else ZERO for j in range(n)] for i in range(n)])

    # -- access -------------------------------------------------------

    def __getitem__(self, ij):
        i, j = ij
        return self._entries[i][j]

    def row(self, i):
        return self._entries[i]

    def column(self, j):
        return tuple(self._entries[i][j] for i in range(self.rows))

    def columns(self):
        return [self.column(j) for j in range(self.cols)]

    def entries(self):
        return self._entries

    # -- arithmetic ---------------------------------------------------

    def __add__(self, other: "Matrix") -> "Matrix":
        if (self.rows, self.cols) != (other.rows, other.cols):
            raise ValueError("shape mismatch")
        return Matrix([[a + b for a, b in zip(r1, r2)]
                       for r1, r2 in zip(self._entries, other._entries)])

    def __sub__(self, other: "Matrix") -> "Matrix":
        if (self.rows, self.cols) != (other.rows, other.cols):
            raise ValueError("shape mismatch")
        return Matrix([[a - b for a, b in zip(r1, r2)]
                       for r1, r2 in zip(self._entries, other._entries)])

    def __neg__(self) -> "Matrix":
        return Matrix([[-a for a in row] for row in self._entries])

    def scale(self, c) -> "Matrix":
        c = _coerce(c)
        return Matrix([[c * a for a in row] for row in self._entries])

    def __matmul__(self, other: "Matrix") -> "Matrix":
        if self.cols != other.rows:
            raise ValueError("shape mismatch")
        ocols = other.cols
        out = []
        for i in range(self.rows):
            ri = self._entries[i]
            row = [ZERO] * ocols
            for k, a in enumerate(ri):
                if a:
                    ok = other._entries[k]
                    for j in range(ocols):
                        b = ok[j]
                        if b:
                            row[j] += a * b
            out.append(row)
        return Matrix(out, rows=self.rows, cols=ocols)

    def apply(self, vec):
        """Matrix-vector product as a tuple."""
        if len(vec) != self.cols:
            raise ValueError("shape mismatch")
        out = []
        for i in range(self.rows):
            s = ZERO
            ri = self._entries[i]
            for a, x in zip(ri, vec):
                if a and x:
                    s += a * x
            out.append(s)
        return tuple(out)

    def transpose(self) -> "Matrix":
        return Matrix([[self._entries[i][j] for i in range(self.rows)]
                       for j in range(self.cols)], rows=self.cols, cols=self.rows)

    def commutator(self, other: "Matrix") -> "Matrix":
        return self @ other - other @ self

    def is_zero(self) -> bool:
        return all(not x for row in self._entries for x in row)

    def is_antisymmetric(self) -> bool:
        if self.rows != self.cols:
            return False
        return all(self._entries[i][j] == -self._entries[j][i]
                   for i in range(self.rows) for j in range(i, self.cols))

    def flatten(self):
        """Row-major coordinates, the canonical identification End(V) = Q^(n*n)."""
        return tuple(x for row in self._entries for x in row)

    @classmethod
    def from_flat(cls, flat, rows: int, cols: int) -> "Matrix":
        if len(flat) != rows * cols:
            raise ValueError("length mismatch")
        return cls([flat[i * cols:(i + 1) * cols] for i in range(rows)],
                   rows=rows, cols=cols)

    def __eq__(self, other):
        if not isinstance(other, Matrix):
            return NotImplemented
        return (self.rows, self.cols) == (other.rows, other.cols) \
            and self._entries == other._entries

    def __hash__(self):
        return hash((self.rows, self.cols, self._entries))

    def __repr__(self):
        if self.rows * self.cols > 64:
            return f"Matrix({self.rows}x{self.cols})"
        body = "; ".join(" ".join(str(x) for x in row) for row in self._entries)
        return f"Matrix[{body}]"


# ----------------------------------------------------------------------
# Integer elimination core.
#
# Rows are dicts {column: nonzero int}.  A row set in "insertion echelon"
# form maps pivot column -> row whose minimal column is that pivot.  New
# rows are reduced against existing pivots by integer cross-multiplication
# and kept gcd-normalized, so no divisions occur until back-substitution.
# ----------------------------------------------------------------------


def _row_from_fractions(vec):
    den = 1
    for x in vec:
        if x:
            den = den * x.denominator // gcd(den, x.denominator)
    row = {}
    for j, x in enumerate(vec):
        if x:
            row[j] = x.numerator * (den // x.denominator)
    return row


def _normalize_row(row):
    g = 0
    for v in row.values():
        g = gcd(g, v)
        if g == 1:
            break
    lead = row[min(row)]
    if lead < 0:
        g = -g
    if g not in (0, 1):
        for k in row:
            row[k] //= g
    return row


class _Echelon:
    """Insertion echelon of integer rows; supports rank, kernel, solving."""

    def __init__(self, ncols):
        self.ncols = ncols
        self.pivots = {}  # pivot column -> row dict

    def reduce(self, row):
        """Reduce a row against the current pivots (row is consumed)."""
        while row:
            c = min(row)
            piv = self.pivots.get(c)
            if piv is None:
                return row
            a, b = piv[c], row[c]
            g = gcd(a, b)
            ma, mb = a // g, b // g
            if ma != 1:
                for k in row:
                    row[k] *= ma
            for k, v in piv.items():
                nv = row.get(k, 0) - mb * v
                if nv:
                    row[k] = nv
                else:
                    row.pop(k, None)
            if row:
                _normalize_row(row)
        return row

    def insert(self, row):
        """Reduce and, if independent, install the row. Returns True if installed."""
        row = self.reduce(dict(row))
        if not row:
            return False
        _normalize_row(row)
        self.pivots[min(row)] = row
        return True

    @property
    def rank(self):
        return len(self.pivots)

    def free_columns(self):
        return [j for j in range(self.ncols) if j not in self.pivots]

    def kernel_vector(self, free_col):
        """The kernel vector with 1 at free_col, 0 at other free columns."""
        v = {free_col: ONE}
        for pc in sorted(self.pivots, reverse=True):
            if pc >= free_col:
                continue
            row = self.pivots[pc]
            s = ZERO
            for k, a in row.items():
                if k != pc and k in v:
                    s += a * v[k]
            if s:
                v[pc] = -s / row[pc]
        out = [ZERO] * self.ncols
        for k, x in v.items():
            out[k] = x
        return out

    def kernel_vectors(self):
        return [self.kernel_vector(f) for f in self.free_columns()]


def _echelon_from_rows(rows, ncols):
    ech = _Echelon(ncols)
    for row in rows:
        if row:
            ech.insert(row)
    return ech


def _rows_of_matrix(M: Matrix):
    return [_row_from_fractions(M.row(i)) for i in range(M.rows)]


def rank(M: Matrix) -> int:
    """Rank of a matrix, exactly."""
    return _echelon_from_rows(_rows_of_matrix(M), M.cols).rank


def rref(M: Matrix):
    """Reduced row echelon form, as (Matrix, pivot column tuple)."""
    ech = _echelon_from_rows(_rows_of_matrix(M), M.cols)
    return _rref_of_echelon(ech, M.cols)


def _rref_of_echelon(ech: _Echelon, ncols):
    pcs = sorted(ech.pivots)
    rows = [dict(ech.pivots[pc]) for pc in pcs]
    # Jordan pass: clear pivot columns above, bottom row upward.
    for i in range(len(pcs) - 1, -1, -1):
        pc = pcs[i]
        piv = rows[i]
        for r in rows[:i]:
            b = r.get(pc)
            if b:
                a = piv[pc]
                g = gcd(a, b)
                ma, mb = a // g, b // g
                if ma != 1:
                    for k in r:
                        r[k] *= ma
                for k, v in piv.items():
                    nv = r.get(k, 0) - mb * v
                    if nv:
                        r[k] = nv
                    else:
                        r.pop(k, None)
                _normalize_row(r)
    out = []
    for pc, r in zip(pcs, rows):
        lead = r[pc]
        frow = [ZERO] * ncols
        for k, v in r.items():
            frow[k] = Fraction(v, lead)
        out.append(frow)
    return Matrix(out, rows=len(out), cols=ncols), tuple(pcs)


def kernel_basis(M: Matrix) -> "Subspace":
    """Canonical basis of the right kernel {v : M v = 0}.

    >>> kernel_basis(Matrix([[1, 2], [2, 4]])).basis.column(0)
    (Fraction(1, 1), Fraction(-1, 2))
    """
    ech = _echelon_from_rows(_rows_of_matrix(M), M.cols)
    vecs = ech.kernel_vectors()
    return Subspace.from_columns(M.cols, vecs)


def _int_row_from_dict(row):
    den = 1
    for x in row.values():
        if x:
            den = den * x.denominator // gcd(den, x.denominator)
    return {j: x.numerator * (den // x.denominator) for j, x in row.items() if x}


def kernel_from_sparse_rows(rows, ncols: int) -> "Subspace":
    """Kernel of a linear system given as sparse rows {col: Fraction}.

    Same contract as kernel_basis, but never materializes the dense matrix;
    this is the workhorse for the large cochain systems.
    """
    ech = _Echelon(ncols)
    for r in rows:
        ir = _int_row_from_dict(r)
        if ir:
            ech.insert(ir)
    return Subspace.from_columns(ncols, ech.kernel_vectors())


def rank_of_sparse_rows(rows, ncols: int) -> int:
    ech = _Echelon(ncols)
    for r in rows:
        ir = _int_row_from_dict(r)
        if ir:
            ech.insert(ir)
    return ech.rank


def column_space(M: Matrix) -> "Subspace":
    """Canonical basis of the span of the columns."""
    return Subspace.from_columns(M.rows, M.columns())


def solve(M: Matrix, b) -> "tuple | None":
    """One exact solution x of M x = b, or None if inconsistent."""
    if len(b) != M.rows:
        raise ValueError("shape mismatch")
    aug = Matrix([list(M.row(i)) + [_coerce(b[i])] for i in range(M.rows)],
                 rows=M.rows, cols=M.cols + 1)
    ech = _echelon_from_rows(_rows_of_matrix(aug), aug.cols)
    if M.cols in ech.pivots:
        return None
    # particular solution: free variables 0, last column coefficient -1
    v = {M.cols: Fraction(-1)}
    for pc in sorted(ech.pivots, reverse=True):
        row = ech.pivots[pc]
        s = ZERO
        for k, a in row.items():
            if k != pc and k in v:
                s += a * v[k]
        v[pc] = -s / row[pc] if s else ZERO
    return tuple(v.get(j, ZERO) for j in range(M.cols))


class Subspace:
    """A linear subspace of Q^n with its canonical echelon basis.

    The basis matrix is in reduced column echelon form: each basis column has
    a pivot coordinate equal to 1, pivot rows strictly increase with the
    column index, and every other basis column vanishes at a pivot row.  Two
    Subspace values describe the same subspace iff they compare equal.
    """

    __slots__ = ("ambient_dim", "basis", "_pivots")

    def __init__(self, ambient_dim: int, basis: Matrix, _pivots=None):
        if basis.rows != ambient_dim:
            raise ValueError("basis rows must equal ambient dimension")
        if _pivots is None:
            canon = Subspace.from_columns(ambient_dim, basis.columns())
            if canon.basis != basis:
                raise ValueError("basis is not in canonical column echelon form")
            _pivots = canon._pivots
        object.__setattr__(self, "ambient_dim", ambient_dim)
        object.__setattr__(self, "basis", basis)
        object.__setattr__(self, "_pivots", _pivots)

    def __setattr__(self, *a):
        raise AttributeError("Subspace is immutable")

    @classmethod
    def from_columns(cls, ambient_dim: int, columns) -> "Subspace":
        """Canonicalize an arbitrary spanning set of column vectors."""
        cols = list(columns)
        for c in cols:
            if len(c) != ambient_dim:
                raise ValueError("spanning vector has wrong length")
        rows = [_row_from_fractions([_coerce(x) for x in c]) for c in cols]
        ech = _echelon_from_rows(rows, ambient_dim)
        R, pivots = _rref_of_echelon(ech, ambient_dim)
        basis = R.transpose()
        self = object.__new__(cls)
        object.__setattr__(self, "ambient_dim", ambient_dim)
        object.__setattr__(self, "basis", basis)
        object.__setattr__(self, "_pivots", pivots)
        return self

    @classmethod
    def zero(cls, ambient_dim: int) -> "Subspace":
        return cls.from_columns(ambient_dim, [])

    @classmethod
    def full(cls, ambient_dim: int) -> "Subspace":
        return cls.from_columns(
            ambient_dim,
            [[ONE if i == j else ZERO for i in range(ambient_dim)]
             for j in range(ambient_dim)])

    @property
    def dim(self) -> int:
        return self.basis.cols

    def is_zero(self) -> bool:
        return self.dim == 0

    # -- membership ---------------------------------------------------

    def reduce_vector(self, vec):
        """Residue of vec modulo the subspace (zero iff vec is a member)."""
        v = [_coerce(x) for x in vec]
        if len(v) != self.ambient_dim:
            raise ValueError("vector has wrong length")
        for j, p in enumerate(self._pivots):
            c = v[p]
            if c:
                col = self.basis.column(j)
                for i in range(self.ambient_dim):
                    if col[i]:
                        v[i] -= c * col[i]
        return tuple(v)

    def contains_vector(self, vec) -> bool:
        return all(not x for x in self.reduce_vector(vec))

    def coordinates_of(self, vec):
        """Coordinates of vec in the canonical basis, or None if outside."""
        v = [_coerce(x) for x in vec]
        coords = []
        for j, p in enumerate(self._pivots):
            c = v[p]
            coords.append(c)
            if c:
                col = self.basis.column(j)
                for i in range(self.ambient_dim):
                    if col[i]:
                        v[i] -= c * col[i]
        if any(v):
            return None
        return tuple(coords)

    def contains(self, other: "Subspace") -> bool:
        """True iff other is a subspace of self."""
        self._check_ambient(other)
        return all(self.contains_vector(other.basis.column(j))
                   for j in range(other.dim))

    # -- lattice operations -------------------------------------------

    def intersect(self, other: "Subspace") -> "Subspace":
        self._check_ambient(other)
        if self.is_zero() or other.is_zero():
            return Subspace.zero(self.ambient_dim)
        k1 = self.dim
        stacked = Matrix([list(self.basis.row(i)) + [-x for x in other.basis.row(i)]
                          for i in range(self.ambient_dim)],
                         rows=self.ambient_dim, cols=k1 + other.dim)
        ker = kernel_basis(stacked)
        vecs = [self.basis.apply(ker.basis.column(j)[:k1])
                for j in range(ker.dim)]
        return Subspace.from_columns(self.ambient_dim, vecs)

    def sum(self, other: "Subspace") -> "Subspace":
        self._check_ambient(other)
        return Subspace.from_columns(
            self.ambient_dim, self.basis.columns() + other.basis.columns())

    __add__ = sum

    def complement_in(self, other: "Subspace") -> "Subspace":
        """Canonical representatives of a complement of self inside other.

        Requires self <= other; the result satisfies self + result == other
        and self .intersect. result == 0.
        """
        self._check_ambient(other)
        if not other.contains(self):
            raise ValueError("complement_in requires containment")
        residues = []
        for j in range(other.dim):
            r = self.reduce_vector(other.basis.column(j))
            if any(r):
                residues.append(r)
        return Subspace.from_columns(self.ambient_dim, residues)

    def annihilator(self) -> "Subspace":
        """The annihilator in the dual space, in dual coordinates."""
        if self.dim == 0:
            return Subspace.full(self.ambient_dim)
        return kernel_basis(self.basis.transpose())

    def _check_ambient(self, other: "Subspace"):
        if self.ambient_dim != other.ambient_dim:
            raise ValueError(
                f"ambient dimension mismatch: {self.ambient_dim} vs {other.ambient_dim}")

    def __eq__(self, other):
        if not isinstance(other, Subspace):
            return NotImplemented
        return self.ambient_dim == other.ambient_dim and self.basis == other.basis

    def __hash__(self):
        return hash((self.ambient_dim, self.basis))

    def __repr__(self):
        return f"Subspace(dim {self.dim} of Q^{self.ambient_dim})"


def intersect(s1: Subspace, s2: Subspace) -> Subspace:
    """Module-level alias of Subspace.intersect."""
    return s1.intersect(s2)


def contains(s1: Subspace, s2: Subspace) -> bool:
    """True iff every column of s2's basis lies in s1."""
    return s1.contains(s2)
