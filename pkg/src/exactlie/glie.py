"""Graded vector spaces, graded nilpotent Lie algebras given by structure
constants, presymplectic vector spaces, and the graded presymplectic linear
Lie algebras they carry.

Degrees may be rational (the models with a two-block grading use degrees
+-1/2), but every Lie algebra handled here is integer-graded.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

from .exactq import Matrix, Subspace, kernel_basis, solve, ZERO, ONE, _coerce
from .reporting import Report


class IncompatibleGradingError(ValueError):
    """A grading whose pairing pattern contradicts the presymplectic form."""


def _deg(x):
    return x if isinstance(x, Fraction) else Fraction(x)


class GradedVectorSpace:
    """Finite list of graded components; coordinates are concatenated in
    increasing order of degree."""

    __slots__ = ("components",)

    def __init__(self, components):
        comps = []
        for degree, dim, labels in components:
            labels = tuple(labels)
            if len(labels) != dim:
                raise ValueError("label count must match dimension")
            comps.append((_deg(degree), dim, labels))
        degs = [c[0] for c in comps]
        if any(a >= b for a, b in zip(degs, degs[1:])):
            raise ValueError("degrees must be strictly increasing")
        all_labels = [l for _, _, ls in comps for l in ls]
        if len(set(all_labels)) != len(all_labels):
            raise ValueError("basis labels must be unique")
        object.__setattr__(self, "components", tuple(comps))

    def __setattr__(self, *a):
        raise AttributeError("GradedVectorSpace is immutable")

    @property
    def total_dim(self):
        return sum(dim for _, dim, _ in self.components)

    @property
    def degrees(self):
        return tuple(d for d, _, _ in self.components)

    def dim_of(self, degree):
        degree = _deg(degree)
        for d, dim, _ in self.components:
            if d == degree:
                return dim
        return 0

    def offset_of(self, degree):
        degree = _deg(degree)
        off = 0
        for d, dim, _ in self.components:
            if d == degree:
                return off
            off += dim
        raise KeyError(f"no component of degree {degree}")

    def degree_of_index(self, i):
        off = 0
        for d, dim, _ in self.components:
            if i < off + dim:
                return d
            off += dim
        raise IndexError(i)

    def labels(self):
        return tuple(l for _, _, ls in self.components for l in ls)

    def indices_of(self, degree):
        off = self.offset_of(degree)
        return range(off, off + self.dim_of(degree))

    def __eq__(self, other):
        if not isinstance(other, GradedVectorSpace):
            return NotImplemented
        return self.components == other.components

    def __repr__(self):
        parts = ", ".join(f"{d}:{dim}" for d, dim, _ in self.components)
        return f"GradedVectorSpace({parts})"


class GradedLieAlgebra:
    """A graded Lie algebra over a labeled basis with sparse structure
    constants.

    Structure constants are stored for index pairs a < b only; antisymmetry
    fills in the rest.  Construction does not enforce the axioms - that is
    the job of check_graded_lie, so that deliberately corrupted tables can be
    built and diagnosed.
    """

    __slots__ = ("space", "_table")

    def __init__(self, space: GradedVectorSpace, table):
        n = space.total_dim
        tbl = {}
        for (a, b), vec in table.items():
            if not (0 <= a < n and 0 <= b < n):
                raise ValueError("structure constant index out of range")
            entries = {c: _coerce(x) for c, x in dict(vec).items() if x}
            if not entries:
                continue
            if a == b:
                raise ValueError("diagonal structure constants must be zero")
            if a > b:
                a, b = b, a
                entries = {c: -x for c, x in entries.items()}
            tbl[(a, b)] = entries
        object.__setattr__(self, "space", space)
        object.__setattr__(self, "_table", tbl)

    def __setattr__(self, *a):
        raise AttributeError("GradedLieAlgebra is immutable")

    @property
    def dim(self):
        return self.space.total_dim

    def bracket_indices(self, a: int, b: int) -> dict:
        """[e_a, e_b] as a sparse coordinate dict."""
        if a == b:
            return {}
        if a < b:
            return dict(self._table.get((a, b), {}))
        return {c: -x for c, x in self._table.get((b, a), {}).items()}

    def bracket(self, x, y) -> dict:
        """Bilinear extension of the bracket to sparse coordinate dicts."""
        out = {}
        for a, xa in x.items():
            if not xa:
                continue
            for b, yb in y.items():
                if not yb:
                    continue
                for c, v in self.bracket_indices(a, b).items():
                    nv = out.get(c, ZERO) + xa * yb * v
                    if nv:
                        out[c] = nv
                    else:
                        out.pop(c, None)
        return out

    def adjoint_matrix(self, x: dict) -> Matrix:
        """Matrix of ad(x) acting on the whole algebra."""
        n = self.dim
        cols = []
        for b in range(n):
            col = [ZERO] * n
            for a, xa in x.items():
                for c, v in self.bracket_indices(a, b).items():
                    col[c] += xa * v
            cols.append(col)
        return Matrix.from_columns(cols, ambient_dim=n)

    def corrupt_constant(self, a: int, b: int, c: int, delta=Fraction(1)):
        """A copy with one structure constant shifted; for defect-injection."""
        table = {k: dict(v) for k, v in self._table.items()}
        if a == b:
            raise ValueError("cannot corrupt a diagonal entry")
        key = (a, b) if a < b else (b, a)
        sgn = ONE if a < b else -ONE
        row = table.setdefault(key, {})
        row[c] = row.get(c, ZERO) + sgn * _coerce(delta)
        return GradedLieAlgebra(self.space, table)

    def __repr__(self):
        return f"GradedLieAlgebra(dim {self.dim}, {len(self._table)} bracket entries)"


def check_graded_lie(L: GradedLieAlgebra) -> Report:
    """Certify antisymmetry, degree additivity and the Jacobi identity on all
    basis triples.  Failures become report entries, never exceptions."""
    rep = Report()
    space = L.space
    n = L.dim

    # antisymmetry is structural for a != b; the diagonal is structural too,
    # so the real content is verified on the stored table itself
    anti_ok = all(L.bracket_indices(a, b)
                  == {c: -x for c, x in L.bracket_indices(b, a).items()}
                  for a in range(n) for b in range(a, n))
    rep.check("antisymmetry", anti_ok, source="graded bracket axioms")

    bad_degree = None
    for (a, b), vec in L._table.items():
        d = space.degree_of_index(a) + space.degree_of_index(b)
        for c in vec:
            if space.dim_of(d) == 0 or c not in space.indices_of(d):
                bad_degree = (a, b, c)
                break
        if bad_degree:
            break
    rep.check("degree-additivity", bad_degree is None,
              expected="[g_i, g_j] inside g_(i+j)",
              actual="ok" if bad_degree is None else f"violated at {bad_degree}",
              source="graded bracket axioms")

    bad_jacobi = None
    for a in range(n):
        for b in range(a + 1, n):
            ab = L.bracket_indices(a, b)
            for c in range(b + 1, n):
                acc = dict(L.bracket({a: ONE}, L.bracket_indices(b, c)))
                for k, v in L.bracket({b: ONE}, L.bracket_indices(c, a)).items():
                    acc[k] = acc.get(k, ZERO) + v
                for k, v in L.bracket({c: ONE}, ab).items():
                    acc[k] = acc.get(k, ZERO) + v
                if any(acc.values()):
                    bad_jacobi = (a, b, c)
                    break
            if bad_jacobi:
                break
        if bad_jacobi:
            break
    rep.check("jacobi", bad_jacobi is None,
              expected="zero cyclic sum on all basis triples",
              actual="ok" if bad_jacobi is None else f"violated at {bad_jacobi}",
              source="graded bracket axioms")
    return rep


class PresymplecticSpace:
    """A vector space with a fixed antisymmetric bilinear form."""

    __slots__ = ("dim", "omega", "nullity", "_null")

    def __init__(self, omega: Matrix):
        if omega.rows != omega.cols:
            raise ValueError("omega must be square")
        if not omega.is_antisymmetric():
            raise ValueError("omega must be antisymmetric")
        null = kernel_basis(omega)
        object.__setattr__(self, "dim", omega.rows)
        object.__setattr__(self, "omega", omega)
        object.__setattr__(self, "nullity", null.dim)
        object.__setattr__(self, "_null", null)

    def __setattr__(self, *a):
        raise AttributeError("PresymplecticSpace is immutable")

    @classmethod
    def normal_form(cls, dim: int, nullity: int) -> "PresymplecticSpace":
        """omega = [[0, I_s, 0], [-I_s, 0, 0], [0, 0, 0_r]] with 2s = dim - nullity."""
        r = nullity
        if r < 0 or r > dim or (dim - r) % 2:
            raise ValueError("need 0 <= nullity <= dim with dim - nullity even")
        s = (dim - r) // 2
        rows = [[ZERO] * dim for _ in range(dim)]
        for i in range(s):
            rows[i][s + i] = ONE
            rows[s + i][i] = -ONE
        return cls(Matrix(rows))

    def value(self, u, v) -> Fraction:
        """omega(u, v)."""
        return sum((x * y for x, y in zip(u, self.omega.apply(v)) if x and y),
                   start=ZERO)

    def null_space(self) -> Subspace:
        return self._null

    def rank(self) -> int:
        return self.dim - self.nullity

    def is_isotropic(self, S: Subspace) -> bool:
        cols = S.basis.columns()
        return all(self.value(cols[i], cols[j]) == 0
                   for i in range(len(cols)) for j in range(i + 1, len(cols)))

    def __repr__(self):
        return f"PresymplecticSpace(dim {self.dim}, nullity {self.nullity})"


def null_space(P: PresymplecticSpace) -> Subspace:
    """The radical of the form, as a canonical subspace."""
    return P.null_space()


class MatrixLieAlgebra:
    """A linear Lie algebra given by a basis of endomorphisms.

    Construction verifies linear independence and closure of the span under
    the commutator, so membership questions are meaningful afterwards.
    """

    __slots__ = ("ambient_dim", "basis", "_span")

    def __init__(self, ambient_dim: int, basis, check_closure: bool = True):
        basis = tuple(basis)
        for X in basis:
            if X.rows != ambient_dim or X.cols != ambient_dim:
                raise ValueError("basis entries must be square of the ambient size")
        span = Subspace.from_columns(ambient_dim * ambient_dim,
                                     [X.flatten() for X in basis])
        if span.dim != len(basis):
            raise ValueError("basis is linearly dependent")
        if check_closure:
            for i in range(len(basis)):
                for j in range(i + 1, len(basis)):
                    if not span.contains_vector(basis[i].commutator(basis[j]).flatten()):
                        raise ValueError(
                            f"commutator of basis elements {i}, {j} leaves the span")
        object.__setattr__(self, "ambient_dim", ambient_dim)
        object.__setattr__(self, "basis", basis)
        object.__setattr__(self, "_span", span)

    def __setattr__(self, *a):
        raise AttributeError("MatrixLieAlgebra is immutable")

    @property
    def dim(self):
        return len(self.basis)

    def span(self) -> Subspace:
        return self._span

    def is_member(self, X: Matrix) -> bool:
        return self._span.contains_vector(X.flatten())

    def coordinates_of(self, X: Matrix):
        """Coordinates in the *given* basis (not the canonical span basis)."""
        B = Matrix.from_columns([Y.flatten() for Y in self.basis],
                                ambient_dim=self.ambient_dim ** 2)
        return solve(B, X.flatten())

    def element(self, coords) -> Matrix:
        out = Matrix.zero(self.ambient_dim, self.ambient_dim)
        for c, X in zip(coords, self.basis):
            if c:
                out = out + X.scale(c)
        return out

    def __repr__(self):
        return f"MatrixLieAlgebra(dim {self.dim} in gl({self.ambient_dim}))"


def _sp_condition_rows(P: PresymplecticSpace):
    """Rows of the linear system cutting out the presymplectic Lie algebra
    inside End(V): omega(phi v_i, v_j) = omega(phi v_j, v_i) for i < j."""
    d = P.dim
    Om = P.omega
    rows = []
    for i in range(d):
        for j in range(i + 1, d):
            row = [ZERO] * (d * d)
            for k in range(d):
                # phi[k, i] pairs with Omega[k, j]; phi[k, j] with Omega[k, i]
                if Om[k, j]:
                    row[k * d + i] += Om[k, j]
                if Om[k, i]:
                    row[k * d + j] -= Om[k, i]
            rows.append(row)
    return Matrix(rows, rows=len(rows), cols=d * d)


def sp_subspace(P: PresymplecticSpace) -> Subspace:
    """The presymplectic Lie algebra as a subspace of End(V) coordinates."""
    return kernel_basis(_sp_condition_rows(P))


def sp_dimension_formula(dim: int, nullity: int) -> int:
    """dim sp = (dim - n) n + s (2s + 1) + n^2 with 2s = dim - n; the count
    coming from the semidirect decomposition through the symplectic quotient."""
    n = nullity
    s = (dim - n) // 2
    return (dim - n) * n + s * (2 * s + 1) + n * n


def sp_algebra(P: PresymplecticSpace) -> MatrixLieAlgebra:
    """Basis of {phi : omega(phi q1, q2) = omega(phi q2, q1)} as endomorphisms."""
    sp = sp_subspace(P)
    expected = sp_dimension_formula(P.dim, P.nullity)
    if sp.dim != expected:
        raise AssertionError(
            f"presymplectic algebra dimension {sp.dim} != {expected}")
    mats = [Matrix.from_flat(sp.basis.column(j), P.dim, P.dim)
            for j in range(sp.dim)]
    return MatrixLieAlgebra(P.dim, mats)


def _hom_degree_indices(grading: GradedVectorSpace, k) -> list:
    """Flat End coordinates of the degree-k block: entries (r, c) with
    deg(r) = deg(c) + k."""
    d = grading.total_dim
    degs = [grading.degree_of_index(i) for i in range(d)]
    k = _deg(k)
    return [r * d + c for r in range(d) for c in range(d) if degs[r] - degs[c] == k]


def sp_grading(P: PresymplecticSpace, grading: GradedVectorSpace):
    """Split the presymplectic algebra by the grading of V.

    Returns a list of (degree, Subspace of End(V)) whose pieces sum to the
    whole algebra.  Raises IncompatibleGradingError when the form pairs two
    components whose degrees do not cancel.
    """
    if grading.total_dim != P.dim:
        raise IncompatibleGradingError("grading does not partition the space")
    degs = [grading.degree_of_index(i) for i in range(P.dim)]
    for i in range(P.dim):
        for j in range(P.dim):
            if degs[i] + degs[j] != 0 and P.omega[i, j] != 0:
                raise IncompatibleGradingError(
                    f"omega pairs degree {degs[i]} with degree {degs[j]}")

    sp = sp_subspace(P)
    dvals = sorted(set(grading.degrees))
    kvals = sorted({a - b for a in dvals for b in dvals})
    pieces = []
    total = 0
    n2 = P.dim ** 2
    for k in kvals:
        idx = _hom_degree_indices(grading, k)
        cols = []
        for flat in idx:
            col = [ZERO] * n2
            col[flat] = ONE
            cols.append(col)
        homk = Subspace.from_columns(n2, cols)
        piece = sp.intersect(homk)
        pieces.append((k, piece))
        total += piece.dim
    if total != sp.dim:
        raise AssertionError("graded pieces do not exhaust the algebra")
    return pieces


def acts_by_graded_derivations(g0: MatrixLieAlgebra, L: GradedLieAlgebra) -> bool:
    """True iff every basis element preserves the grading and differentiates
    the bracket."""
    space = L.space
    n = L.dim
    if g0.ambient_dim != n:
        return False
    for X in g0.basis:
        for b in range(n):
            db = space.degree_of_index(b)
            col = X.column(b)
            if any(col[i] and space.degree_of_index(i) != db for i in range(n)):
                return False
        for a in range(n):
            Xa = {i: x for i, x in enumerate(X.column(a)) if x}
            for b in range(a + 1, n):
                Xb = {i: x for i, x in enumerate(X.column(b)) if x}
                lhs = {}
                for c, v in L.bracket_indices(a, b).items():
                    for i, x in enumerate(X.column(c)):
                        if x:
                            lhs[i] = lhs.get(i, ZERO) + v * x
                rhs = L.bracket(Xa, {b: ONE})
                for k, v in L.bracket({a: ONE}, Xb).items():
                    rhs[k] = rhs.get(k, ZERO) + v
                diff = {k: lhs.get(k, ZERO) - rhs.get(k, ZERO)
                        for k in set(lhs) | set(rhs)}
                if any(diff.values()):
                    return False
    return True
