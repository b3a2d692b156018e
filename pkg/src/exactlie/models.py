"""The two concrete graded models and their closed-form prolongations.

Both models live on a pair of spaces U (dim m >= 2) and Q (dim n >= 1):

* the *positive* model carries a nonzero antisymmetric form on Q; its
  negative part is U tensor Q in degree -1 and Sym^2 U in degree -2 with
  [u1 x q1, u2 x q2] = omega(q1, q2) u1.u2, and the degree-zero part is the
  image of gl(U) + sp(Q);

* the *rank-zero* model has an abelian negative part (U tensor Q) + Sym^2 U
  in degree -1 acted on by Hom(U, Q) |x (gl(U) + gl(Q)).

For each model the positive prolongation pieces have closed forms (maps
built out of Hom(U, Q) and Sym^2 U*), and the whole graded algebra is
isomorphic to the form-preserving algebra of an extended space V carrying
an induced grading; build_psi constructs that isomorphism explicitly and
certifies it bracket by bracket.

Basis conventions (fixed so every computation is bit-reproducible):
U has basis e_0..e_{m-1}, Q has basis f_0..f_{n-1} with the form in normal
block shape [[0, I_s, 0], [-I_s, 0, 0], [0, 0, 0_r]]; U tensor Q is ordered
lexicographically (e_i f_a at i*n + a); Sym^2 U by monomials e_i e_j, i <= j,
in lex order, with u.v having coefficient u_i v_j + u_j v_i on e_i e_j (i < j)
and u_i v_i on e_i^2.
"""

from __future__ import annotations

from fractions import Fraction

from .exactq import Matrix, Subspace, kernel_basis, solve, ZERO, ONE
from .glie import (
    GradedLieAlgebra, GradedVectorSpace, MatrixLieAlgebra, PresymplecticSpace,
    sp_grading, sp_subspace,
)
from .prolong import ProlongationEngine, act_on_c1, apply_boundary
from .reporting import Report

HALF = Fraction(1, 2)


class ModelParameterError(ValueError):
    """A model parameter violates its standing constraints."""


class PsiConstructionError(RuntimeError):
    """The intertwining system for a positive-degree component failed; this
    signals a normalization-convention defect and carries the witness."""


# ----------------------------------------------------------------------
# basis helpers shared with the model projective variety
# ----------------------------------------------------------------------

def sym_monomials(m: int):
    return [(i, j) for i in range(m) for j in range(i, m)]


def sym_dim(m: int) -> int:
    return m * (m + 1) // 2


def sym_index(m: int, i: int, j: int) -> int:
    if i > j:
        i, j = j, i
    # position of (i, j) in the lex list of monomials
    return i * m - i * (i - 1) // 2 + (j - i)


def sym_product(m: int, u, v):
    """Coordinates of u.v in the monomial basis."""
    out = [ZERO] * sym_dim(m)
    for i in range(m):
        if not u[i]:
            continue
        for j in range(m):
            if v[j]:
                out[sym_index(m, i, j)] += u[i] * v[j]
    return out


def tensor_index(n: int, i: int, a: int) -> int:
    return i * n + a


def sym_action_matrix(m: int, a: Matrix) -> Matrix:
    """The derivation action of a in gl(U) on the monomial basis."""
    d = sym_dim(m)
    cols = []
    for (i, j) in sym_monomials(m):
        col = [ZERO] * d
        for k in range(m):
            if a[k, i]:
                col[sym_index(m, k, j)] += a[k, i]
            if a[k, j]:
                col[sym_index(m, i, k)] += a[k, j]
        cols.append(col)
    return Matrix.from_columns(cols, ambient_dim=d)


def gl_unit(m: int, k: int, l: int) -> Matrix:
    rows = [[ZERO] * m for _ in range(m)]
    rows[k][l] = ONE
    return Matrix(rows)


def structured_sp_basis(n: int, r: int):
    """Basis of the form-preserving algebra of the normal-form (Q, omega),
    ordered as [symplectic block] + [gl of the radical] + [radical-valued
    maps], so the standard filtrations are spanned by basis suffixes.

    Returns (list of Matrix, list of labels, slices) where slices maps
    'sp_flat', 'gl_null', 'hom_to_null' to index ranges.
    """
    s = (n - r) // 2
    mats, labels = [], []
    if s:
        core = sp_subspace(PresymplecticSpace.normal_form(2 * s, 0))
        for b in range(core.dim):
            flat = core.basis.column(b)
            rows = [[ZERO] * n for _ in range(n)]
            for i in range(2 * s):
                for j in range(2 * s):
                    rows[i][j] = flat[i * 2 * s + j]
            mats.append(Matrix(rows))
            labels.append(f"spQ[{b}]")
    n_sp = len(mats)
    for al in range(r):
        for be in range(r):
            rows = [[ZERO] * n for _ in range(n)]
            rows[2 * s + al][2 * s + be] = ONE
            mats.append(Matrix(rows))
            labels.append(f"glN[{al},{be}]")
    n_gln = r * r
    for be in range(r):
        for al in range(2 * s):
            rows = [[ZERO] * n for _ in range(n)]
            rows[2 * s + be][al] = ONE
            mats.append(Matrix(rows))
            labels.append(f"rQN[{be},{al}]")
    slices = {
        "sp_flat": range(0, n_sp),
        "gl_null": range(n_sp, n_sp + n_gln),
        "hom_to_null": range(n_sp + n_gln, len(mats)),
    }
    return mats, labels, slices


# ----------------------------------------------------------------------
# the positive model
# ----------------------------------------------------------------------

class PositiveModel:
    """Negative part U x Q + Sym^2 U with the form-twisted bracket, plus the
    image of gl(U) + sp(Q) in degree zero."""

    kind = "positive"

    def __init__(self, m, n, r):
        self.m, self.n, self.r = m, n, r
        self.M2 = sym_dim(m)
        self.mn = m * n
        self.q_space = PresymplecticSpace.normal_form(n, r)
        self.sym_labels = tuple(
            f"e{i}e{j}" if i != j else f"e{i}^2" for (i, j) in sym_monomials(m))
        self.uq_labels = tuple(
            f"e{i}*f{a}" for i in range(m) for a in range(n))
        space = GradedVectorSpace([
            (-2, self.M2, self.sym_labels),
            (-1, self.mn, self.uq_labels),
        ])
        # bracket: [e_i f_a, e_j f_b] = omega(f_a, f_b) e_i . e_j
        Om = self.q_space.omega
        table = {}
        off1 = self.M2
        for i in range(m):
            for a in range(n):
                for j in range(m):
                    for b in range(n):
                        p = tensor_index(n, i, a)
                        q = tensor_index(n, j, b)
                        if p >= q or not Om[a, b]:
                            continue
                        table[(off1 + p, off1 + q)] = {
                            sym_index(m, i, j): Om[a, b]}
        self.gminus = GradedLieAlgebra(space, table)

        mats, labels = [], []
        for k in range(m):
            for l in range(m):
                mats.append(self._action(gl_unit(m, k, l), None))
                labels.append(f"glU[{k},{l}]")
        sp_mats, sp_labels, self.sp_slices = structured_sp_basis(n, r)
        self.sp_q = MatrixLieAlgebra(n, sp_mats) if sp_mats else \
            MatrixLieAlgebra(n, [])
        for C, lab in zip(sp_mats, sp_labels):
            mats.append(self._action(None, C))
            labels.append(lab)
        self.g0_labels = tuple(labels)
        self.g0 = MatrixLieAlgebra(self.dim_gminus, mats)
        self._engine = None
        self._result = None

    # -- indexing -------------------------------------------------------

    @property
    def dim_gminus(self):
        return self.M2 + self.mn

    def _action(self, a, c) -> Matrix:
        """Action matrix of (a, c) in gl(U) + sp(Q) on the negative part."""
        m, n = self.m, self.n
        d = self.dim_gminus
        rows = [[ZERO] * d for _ in range(d)]
        if a is not None:
            S = sym_action_matrix(m, a)
            for i in range(self.M2):
                for j in range(self.M2):
                    rows[i][j] = S[i, j]
        off = self.M2
        for i in range(m):
            for aq in range(n):
                col = off + tensor_index(n, i, aq)
                if a is not None:
                    for k in range(m):
                        if a[k, i]:
                            rows[off + tensor_index(n, k, aq)][col] += a[k, i]
                if c is not None:
                    for b in range(n):
                        if c[b, aq]:
                            rows[off + tensor_index(n, i, b)][col] += c[b, aq]
        return Matrix(rows)

    def g0_coords(self, a, c):
        """Coordinates in the degree-zero basis of the pair (a, c)."""
        coords = [ZERO] * self.g0.dim
        if a is not None:
            for k in range(self.m):
                for l in range(self.m):
                    coords[k * self.m + l] = a[k, l]
        if c is not None:
            cc = self.sp_q.coordinates_of(c)
            if cc is None:
                raise ValueError("matrix does not preserve the form on Q")
            off = self.m * self.m
            for i, x in enumerate(cc):
                coords[off + i] = x
        return coords

    # -- prolongation -----------------------------------------------------

    def engine(self) -> ProlongationEngine:
        if self._engine is None:
            self._engine = ProlongationEngine(
                self.g0, self.gminus, g0_labels=self.g0_labels)
        return self._engine

    def prolongation(self, max_degree=10):
        if self._result is None:
            self._result = self.engine().run(max_degree=max_degree)
        return self._result

    def expected_piece_dims(self):
        return (self.mn, self.M2)

    def expected_mu(self):
        return 2

    def __repr__(self):
        return f"PositiveModel(m={self.m}, n={self.n}, r={self.r})"


def build_positive_model(m: int, n: int, r: int) -> PositiveModel:
    if m < 2:
        raise ModelParameterError("m >= 2 violated (dim U >= 2)")
    if n < 1:
        raise ModelParameterError("n >= 1 violated")
    if not (0 <= r <= n):
        raise ModelParameterError("0 <= nullity <= n violated")
    if (n - r) % 2:
        raise ModelParameterError("n - nullity even violated")
    if n - r < 2:
        raise ModelParameterError("n - nullity >= 2 violated (omega must be nonzero)")
    return PositiveModel(m, n, r)


# ----------------------------------------------------------------------
# the rank-zero model
# ----------------------------------------------------------------------

class RankZeroModel:
    """Abelian negative part (U x Q) + Sym^2 U acted on by
    Hom(U, Q) |x (gl(U) + gl(Q))."""

    kind = "rank-zero"

    def __init__(self, m, n):
        self.m, self.n = m, n
        self.M2 = sym_dim(m)
        self.mn = m * n
        self.uq_labels = tuple(
            f"e{i}*f{a}" for i in range(m) for a in range(n))
        self.sym_labels = tuple(
            f"e{i}e{j}" if i != j else f"e{i}^2" for (i, j) in sym_monomials(m))
        space = GradedVectorSpace([
            (-1, self.mn + self.M2, self.uq_labels + self.sym_labels),
        ])
        self.gminus = GradedLieAlgebra(space, {})

        mats, labels = [], []
        for i in range(m):
            for a in range(n):
                mats.append(self._phi_action(i, a))
                labels.append(f"rUQ[{i},{a}]")
        for a in range(n):
            for b in range(n):
                mats.append(self._glq_action(a, b))
                labels.append(f"glQ[{a},{b}]")
        for k in range(m):
            for l in range(m):
                mats.append(self._glu_action(k, l))
                labels.append(f"glU[{k},{l}]")
        self.g0_labels = tuple(labels)
        self.g0 = MatrixLieAlgebra(self.dim_gminus, mats)
        self._engine = None
        self._result = None

    @property
    def dim_gminus(self):
        return self.mn + self.M2

    def _phi_action(self, i, a) -> Matrix:
        """phi = e_i^* x f_a annihilates U x Q and sends u.v to
        (u x phi(v) + v x phi(u)) / 2."""
        m, n = self.m, self.n
        d = self.dim_gminus
        rows = [[ZERO] * d for _ in range(d)]
        for (j, k) in sym_monomials(m):
            col = self.mn + sym_index(m, j, k)
            if k == i:
                rows[tensor_index(n, j, a)][col] += HALF
            if j == i:
                rows[tensor_index(n, k, a)][col] += HALF
        return Matrix(rows)

    def _glq_action(self, a, b) -> Matrix:
        m, n = self.m, self.n
        d = self.dim_gminus
        rows = [[ZERO] * d for _ in range(d)]
        for i in range(m):
            rows[tensor_index(n, i, a)][tensor_index(n, i, b)] = ONE
        return Matrix(rows)

    def _glu_action(self, k, l) -> Matrix:
        m, n = self.m, self.n
        d = self.dim_gminus
        rows = [[ZERO] * d for _ in range(d)]
        for a in range(n):
            rows[tensor_index(n, k, a)][tensor_index(n, l, a)] = ONE
        S = sym_action_matrix(m, gl_unit(m, k, l))
        for i in range(self.M2):
            for j in range(self.M2):
                if S[i, j]:
                    rows[self.mn + i][self.mn + j] = S[i, j]
        return Matrix(rows)

    def g0_coords(self, phi=None, a=None, c=None):
        """Coordinates of (phi, a, c) in the degree-zero basis."""
        m, n = self.m, self.n
        coords = [ZERO] * self.g0.dim
        if phi is not None:
            for i in range(m):
                for aq in range(n):
                    coords[i * n + aq] = phi[aq, i]
        off = m * n
        if c is not None:
            for aq in range(n):
                for b in range(n):
                    coords[off + aq * n + b] = c[aq, b]
        off += n * n
        if a is not None:
            for k in range(m):
                for l in range(m):
                    coords[off + k * m + l] = a[k, l]
        return coords

    def engine(self) -> ProlongationEngine:
        if self._engine is None:
            self._engine = ProlongationEngine(
                self.g0, self.gminus, g0_labels=self.g0_labels)
        return self._engine

    def prolongation(self, max_degree=10):
        if self._result is None:
            self._result = self.engine().run(max_degree=max_degree)
        return self._result

    def expected_piece_dims(self):
        return (self.M2,)

    def expected_mu(self):
        return 1

    def __repr__(self):
        return f"RankZeroModel(m={self.m}, n={self.n})"


def build_rank_zero_model(m: int, n: int) -> RankZeroModel:
    if m < 2:
        raise ModelParameterError("m >= 2 violated (dim U >= 2)")
    if n < 1:
        raise ModelParameterError("n >= 1 violated")
    return RankZeroModel(m, n)


# ----------------------------------------------------------------------
# closed-form prolongation pieces
# ----------------------------------------------------------------------

def _sym_form_units(m):
    """Basis of symmetric bilinear forms on U, stored as symmetric matrices
    with B(u, v) = u^T M v: the unit at (i, j) takes value 1 on (e_i, e_j)."""
    units = []
    for (i, j) in sym_monomials(m):
        rows = [[ZERO] * m for _ in range(m)]
        rows[i][j] += ONE
        if i != j:
            rows[j][i] += ONE
        units.append(Matrix(rows))
    return units


def _positive_pi1_flat(model: PositiveModel, h: Matrix):
    """Flat one-cochain coordinates (level 1) of the closed-form image of
    h in Hom(U, Q): sends v.w to (w x h(v) + v x h(w))/2 and w x p to the
    degree-zero pair (u -> omega(h(u), p) w / 2, the matching sp(Q) part)."""
    eng = model.engine()
    S1 = eng.spencer_spaces(1)
    m, n = model.m, model.n
    Om = model.q_space.omega
    flat = [ZERO] * S1.dim_c1
    hcols = [[h[q, l] for q in range(n)] for l in range(m)]  # h(e_l) in Q
    funit = [[ONE if t == c else ZERO for t in range(n)] for c in range(n)]
    # block j = 1: values in the degree-zero algebra
    for j in range(m):
        for b in range(n):
            s = tensor_index(n, j, b)
            # gl(U) part: u -> omega(h(u), f_b) e_j / 2
            a_mat = [[ZERO] * m for _ in range(m)]
            for l in range(m):
                a_mat[j][l] = HALF * model.q_space.value(hcols[l], funit[b])
            # sp(Q) part: q -> omega(h(e_j), q) f_b / 2 + omega(f_b, q) h(e_j) / 2
            c_rows = [[ZERO] * n for _ in range(n)]
            for cq in range(n):
                w1 = model.q_space.value(hcols[j], funit[cq])
                if w1:
                    c_rows[b][cq] += HALF * w1
                w2 = Om[b, cq]
                if w2:
                    for q2 in range(n):
                        if hcols[j][q2]:
                            c_rows[q2][cq] += HALF * w2 * hcols[j][q2]
            coords = model.g0_coords(Matrix(a_mat), Matrix(c_rows))
            for t, x in enumerate(coords):
                if x:
                    flat[S1.c1_pos(1, s, t)] = x
    # block j = 2: values in the degree -1 block
    for (i, j) in sym_monomials(m):
        s = sym_index(m, i, j)
        vec = [ZERO] * model.mn
        for q in range(n):
            if h[q, i]:
                vec[tensor_index(n, j, q)] += HALF * h[q, i]
            if h[q, j]:
                vec[tensor_index(n, i, q)] += HALF * h[q, j]
        for t, x in enumerate(vec):
            if x:
                flat[S1.c1_pos(2, s, t)] = x
    return flat


def _positive_pi2_flat(model: PositiveModel, B: Matrix, g1_piece: Subspace):
    """Flat two-level cochain coordinates of the closed-form image of a
    symmetric form B: sends v.w to the gl(U) element
    u -> (B(u,v) w + B(u,w) v)/2 and w x p to u -> B(u, w) p inside the
    first piece."""
    eng = model.engine()
    S2 = eng.spencer_spaces(2)
    m, n = model.m, model.n
    flat = [ZERO] * S2.dim_c1
    # block j = 1: values in the first piece, through its computed basis
    for j in range(m):
        for b in range(n):
            s = tensor_index(n, j, b)
            h = [[ZERO] * m for _ in range(n)]
            for u in range(m):
                if B[u, j]:
                    h[b][u] += B[u, j]
            h1_flat = _positive_pi1_flat(model, Matrix(h))
            coords = g1_piece.coordinates_of(h1_flat)
            if coords is None:
                raise AssertionError("closed-form value left the first piece")
            for t, x in enumerate(coords):
                if x:
                    flat[S2.c1_pos(1, s, t)] = x
    # block j = 2: values in the degree-zero algebra (gl(U) part only)
    for (i, j) in sym_monomials(m):
        s = sym_index(m, i, j)
        a_mat = [[ZERO] * m for _ in range(m)]
        for u in range(m):
            if B[u, i]:
                a_mat[j][u] += HALF * B[u, i]
            if B[u, j]:
                a_mat[i][u] += HALF * B[u, j]
        coords = model.g0_coords(Matrix(a_mat), None)
        for t, x in enumerate(coords):
            if x:
                flat[S2.c1_pos(2, s, t)] = x
    return flat


def _rank0_pi_flat(model: RankZeroModel, B: Matrix):
    """Flat one-cochain coordinates of the closed-form image of a symmetric
    form for the rank-zero model; both value types land in degree zero."""
    eng = model.engine()
    S1 = eng.spencer_spaces(1)
    m, n = model.m, model.n
    flat = [ZERO] * S1.dim_c1
    for j in range(m):
        for b in range(n):
            s = tensor_index(n, j, b)
            phi = [[ZERO] * m for _ in range(n)]
            for u in range(m):
                if B[u, j]:
                    phi[b][u] += B[u, j]
            coords = model.g0_coords(phi=Matrix(phi))
            for t, x in enumerate(coords):
                if x:
                    flat[S1.c1_pos(1, s, t)] = x
    for (i, j) in sym_monomials(m):
        s = model.mn + sym_index(m, i, j)
        a_mat = [[ZERO] * m for _ in range(m)]
        for u in range(m):
            if B[u, i]:
                a_mat[j][u] += HALF * B[u, i]
            if B[u, j]:
                a_mat[i][u] += HALF * B[u, j]
        coords = model.g0_coords(a=Matrix(a_mat))
        for t, x in enumerate(coords):
            if x:
                flat[S1.c1_pos(1, s, t)] = x
    return flat


def hom_unit(m, n, i, a):
    """The map U -> Q with e_i -> f_a (as an n x m matrix)."""
    rows = [[ZERO] * m for _ in range(n)]
    rows[a][i] = ONE
    return Matrix(rows)


def closed_form_pi(model):
    """Candidate first and second pieces spanned by the closed-form maps.

    Every generator is checked against the defining coboundary before the
    spans are canonicalized, so the candidates are honest members of the
    inductively defined pieces.
    """
    eng = model.engine()
    if isinstance(model, PositiveModel):
        model.prolongation()
        S1 = eng.spencer_spaces(1)
        cols1 = [_positive_pi1_flat(model, hom_unit(model.m, model.n, i, a))
                 for i in range(model.m) for a in range(model.n)]
        for c in cols1:
            if any(apply_boundary(eng, S1, c)):
                raise AssertionError("closed-form generator violates the "
                                     "prolongation constraint")
        g1 = Subspace.from_columns(S1.dim_c1, cols1)
        S2 = eng.spencer_spaces(2)
        piece1 = eng.piece_subspace(1)
        cols2 = [_positive_pi2_flat(model, Bu, piece1)
                 for Bu in _sym_form_units(model.m)]
        for c in cols2:
            if any(apply_boundary(eng, S2, c)):
                raise AssertionError("closed-form generator violates the "
                                     "prolongation constraint")
        g2 = Subspace.from_columns(S2.dim_c1, cols2)
        return g1, g2
    else:
        model.prolongation()
        S1 = eng.spencer_spaces(1)
        cols1 = [_rank0_pi_flat(model, Bu) for Bu in _sym_form_units(model.m)]
        for c in cols1:
            if any(apply_boundary(eng, S1, c)):
                raise AssertionError("closed-form generator violates the "
                                     "prolongation constraint")
        g1 = Subspace.from_columns(S1.dim_c1, cols1)
        S2 = eng.spencer_spaces(2)
        return g1, Subspace.zero(S2.dim_c1)


# ----------------------------------------------------------------------
# theorem verification
# ----------------------------------------------------------------------

def verify_prolongation_theorem(model, max_degree=10) -> Report:
    """Compare the inductively computed pieces with the closed forms, check
    vanishing above the termination degree and the equivariance of the
    closed-form identifications."""
    rep = Report()
    src = "closed-form prolongation"
    res = model.prolongation(max_degree=max_degree)
    dims = res.piece_dims()
    expect = model.expected_piece_dims()
    expect_full = expect + (0,) * (len(dims) - len(expect))
    rep.check("piece-dimensions", dims == expect_full,
              expected=str(expect_full), actual=str(dims), source=src)
    rep.check("termination-degree", res.mu == model.expected_mu(),
              expected=str(model.expected_mu()), actual=str(res.mu), source=src)
    rep.check("vanishing-above-mu",
              all(p.dim == 0 for k, p in res.pieces if k > model.expected_mu()),
              expected="0", source=src)

    g1_cand, g2_cand = closed_form_pi(model)
    eng = model.engine()
    rep.check("first-piece-closed-form",
              g1_cand == eng.piece_subspace(1),
              expected="exact echelon equality",
              actual="equal" if g1_cand == eng.piece_subspace(1) else "differ",
              source="first-piece identification")
    if isinstance(model, PositiveModel):
        same2 = g2_cand == eng.piece_subspace(2)
        rep.check("second-piece-closed-form", same2,
                  expected="exact echelon equality",
                  actual="equal" if same2 else "differ",
                  source="second-piece identification")

    _check_pi_equivariance(model, rep)
    return rep


def _glu_pairs(model):
    m = model.m
    for k in range(m):
        for l in range(m):
            yield gl_unit(m, k, l), None


def _check_pi_equivariance(model, rep: Report):
    """pi(X.h) = X.pi(h) over the degree-zero basis, in flat cochain
    coordinates; the natural action on the parameter spaces is composition
    on Hom(U, Q) and the derivation action on forms."""
    eng = model.engine()
    m, n = model.m, model.n
    S1 = eng.spencer_spaces(1)
    ok = True
    if isinstance(model, PositiveModel):
        params = [hom_unit(m, n, i, a) for i in range(m) for a in range(n)]
        flats = {id(h): _positive_pi1_flat(model, h) for h in params}
        for Xidx in range(model.g0.dim):
            a, c = _positive_g0_parts(model, Xidx)
            for h in params:
                Xh = _compose_minus(c, h, a)
                lhs = _positive_pi1_flat(model, Xh)
                rhs = act_on_c1(eng, S1, Xidx, flats[id(h)])
                if lhs != rhs:
                    ok = False
                    break
            if not ok:
                break
        rep.check("pi1-equivariance", ok, source="first-piece identification")

        S2 = eng.spencer_spaces(2)
        piece1 = eng.piece_subspace(1)
        units = _sym_form_units(m)
        flats2 = {id(B): _positive_pi2_flat(model, B, piece1) for B in units}
        ok2 = True
        for Xidx in range(model.g0.dim):
            a, _c = _positive_g0_parts(model, Xidx)
            for B in units:
                XB = _form_action(B, a)
                lhs = _positive_pi2_flat(model, XB, piece1)
                rhs = act_on_c1(eng, S2, Xidx, flats2[id(B)])
                if lhs != rhs:
                    ok2 = False
                    break
            if not ok2:
                break
        rep.check("pi2-equivariance", ok2, source="second-piece identification")
    else:
        units = _sym_form_units(m)
        flats = {id(B): _rank0_pi_flat(model, B) for B in units}
        ok = True
        for Xidx in range(model.g0.dim):
            a = _rank0_glu_part(model, Xidx)
            for B in units:
                XB = _form_action(B, a)
                lhs = _rank0_pi_flat(model, XB)
                rhs = act_on_c1(eng, S1, Xidx, flats[id(B)])
                if lhs != rhs:
                    ok = False
                    break
            if not ok:
                break
        rep.check("pi-equivariance", ok, source="first-piece identification")


def _positive_g0_parts(model: PositiveModel, Xidx):
    m = model.m
    if Xidx < m * m:
        return gl_unit(m, Xidx // m, Xidx % m), Matrix.zero(model.n, model.n)
    return Matrix.zero(m, m), model.sp_q.basis[Xidx - m * m]


def _rank0_glu_part(model: RankZeroModel, Xidx):
    m, n = model.m, model.n
    off = m * n + n * n
    if Xidx >= off:
        k, l = divmod(Xidx - off, m)
        return gl_unit(m, k, l)
    return Matrix.zero(m, m)


def _compose_minus(c, h, a):
    """The module action (a, c).h = c h - h a on maps U -> Q."""
    return c @ h - h @ a


def _form_action(B, a):
    """(a . B)(u, v) = -B(au, v) - B(u, av) on symmetric forms."""
    return -(a.transpose() @ B) - (B @ a)


# ----------------------------------------------------------------------
# the graded isomorphism onto the extended presymplectic algebra
# ----------------------------------------------------------------------

class PsiIsomorphism:
    """The certified isomorphism from the universal prolongation onto the
    graded form-preserving algebra of the extended space."""

    def __init__(self, model, target_space, grading, pieces, endo_by_degree,
                 coordinate_matrices, report):
        self.model = model
        self.target_space = target_space      # PresymplecticSpace of V
        self.grading = grading                # GradedVectorSpace of V
        self.pieces = pieces                  # [(degree, Subspace of End V)]
        self.endo_by_degree = endo_by_degree  # degree -> tuple of Matrix
        self.coordinate_matrices = coordinate_matrices  # degree -> Matrix
        self.report = report

    def endo(self, degree, index) -> Matrix:
        return self.endo_by_degree[degree][index]


def _positive_target(model: PositiveModel):
    """V = U + Q + U^* in increasing degree order (-1, 0, +1), with the form
    extending the one on Q by the dual pairing between U and U^*.

    The pairing is omega(v, f) = f(v) for v in U, f in U^*: with the opposite
    sign the two stated value formulas for the degree -1 component contradict
    the form-preservation condition, so this is the sign the construction
    actually uses."""
    m, n = model.m, model.n
    d = 2 * m + n
    rows = [[ZERO] * d for _ in range(d)]
    Om = model.q_space.omega
    for a in range(n):
        for b in range(n):
            rows[m + a][m + b] = Om[a, b]
    for i in range(m):
        rows[i][m + n + i] = ONE     # omega(e_i, e_i^*) = 1
        rows[m + n + i][i] = -ONE
    V = PresymplecticSpace(Matrix(rows))
    grading = GradedVectorSpace([
        (-1, m, tuple(f"e{i}" for i in range(m))),
        (0, n, tuple(f"f{a}" for a in range(n))),
        (1, m, tuple(f"e{i}*" for i in range(m))),
    ])
    return V, grading


def _rank0_target(model: RankZeroModel):
    """V = (U + Q) + U^* with degrees -1/2 and +1/2; Q is the whole radical."""
    m, n = model.m, model.n
    d = 2 * m + n
    rows = [[ZERO] * d for _ in range(d)]
    for i in range(m):
        rows[m + n + i][i] = ONE
        rows[i][m + n + i] = -ONE
    V = PresymplecticSpace(Matrix(rows))
    grading = GradedVectorSpace([
        (Fraction(-1, 2), m + n,
         tuple(f"e{i}" for i in range(m)) + tuple(f"f{a}" for a in range(n))),
        (Fraction(1, 2), m, tuple(f"e{i}*" for i in range(m))),
    ])
    return V, grading


def _psi_negative_positive(model: PositiveModel):
    """Images of the negative basis: degree -1 sends w x q to the map
    (lambda -> lambda(w) q, p -> omega(q, p) w); degree -2 sends u.v to
    lambda -> lambda(u) v + lambda(v) u."""
    m, n = model.m, model.n
    d = 2 * m + n
    Om = model.q_space.omega
    deg_m1 = []
    for i in range(m):
        for a in range(n):
            rows = [[ZERO] * d for _ in range(d)]
            rows[m + a][m + n + i] = ONE          # lambda = e_i^* -> f_a
            for c in range(n):
                if Om[a, c]:
                    rows[i][m + c] = Om[a, c]     # p = f_c -> omega(f_a, f_c) e_i
            deg_m1.append(Matrix(rows))
    deg_m2 = []
    for (i, j) in sym_monomials(m):
        rows = [[ZERO] * d for _ in range(d)]
        rows[j][m + n + i] += ONE
        rows[i][m + n + j] += ONE
        deg_m2.append(Matrix(rows))
    return deg_m1, deg_m2


def _psi_zero_positive(model: PositiveModel):
    m, n = model.m, model.n
    d = 2 * m + n
    out = []
    for Xidx in range(model.g0.dim):
        a, c = _positive_g0_parts(model, Xidx)
        rows = [[ZERO] * d for _ in range(d)]
        for i in range(m):
            for j in range(m):
                rows[i][j] = a[i, j]
                rows[m + n + i][m + n + j] = -a[j, i]
        for p in range(n):
            for q in range(n):
                rows[m + p][m + q] = c[p, q]
        out.append(Matrix(rows))
    return out


def _psi_negative_rank0(model: RankZeroModel):
    m, n = model.m, model.n
    d = 2 * m + n
    out = []
    for i in range(m):
        for a in range(n):
            rows = [[ZERO] * d for _ in range(d)]
            rows[m + a][m + n + i] = ONE
            out.append(Matrix(rows))
    for (i, j) in sym_monomials(m):
        rows = [[ZERO] * d for _ in range(d)]
        rows[j][m + n + i] += HALF
        rows[i][m + n + j] += HALF
        out.append(Matrix(rows))
    return out


def _psi_zero_rank0(model: RankZeroModel):
    m, n = model.m, model.n
    d = 2 * m + n
    out = []
    for Xidx in range(model.g0.dim):
        rows = [[ZERO] * d for _ in range(d)]
        if Xidx < m * n:
            i, a = divmod(Xidx, n)
            rows[m + a][i] = ONE                  # U -> Q component
        elif Xidx < m * n + n * n:
            p, q = divmod(Xidx - m * n, n)
            rows[m + p][m + q] = ONE
        else:
            k, l = divmod(Xidx - m * n - n * n, m)
            rows[k][l] = ONE
            rows[m + n + l][m + n + k] = -ONE
        out.append(Matrix(rows))
    return out


def build_psi(model, max_degree=10) -> PsiIsomorphism:
    """Construct and certify the graded isomorphism onto the form-preserving
    algebra of the extended space.

    The negative and degree-zero components are transcribed; the positive
    components are solved from the intertwining condition
    psi([phi, v]) = [psi(phi), psi(v)], which also certifies uniqueness.
    The final check is bracket preservation on every basis pair.
    """
    rep = Report()
    res = model.prolongation(max_degree=max_degree)
    eng = model.engine()
    if isinstance(model, PositiveModel):
        V, grading = _positive_target(model)
        neg = {-1: _psi_negative_positive(model)[0],
               -2: _psi_negative_positive(model)[1]}
        zero = _psi_zero_positive(model)
    else:
        V, grading = _rank0_target(model)
        neg = {-1: _psi_negative_rank0(model)}
        zero = _psi_zero_rank0(model)

    pieces = sp_grading(V, grading)
    piece_by_deg = {int(k): p for k, p in pieces if k == int(k)}

    endo = {0: tuple(zero)}
    endo.update({d: tuple(v) for d, v in neg.items()})

    # transcription sanity: negative/zero images land in the right pieces
    for dgr, mats in endo.items():
        piece = piece_by_deg.get(dgr)
        ok = piece is not None and len(mats) == piece.dim and all(
            piece.contains_vector(Mx.flatten()) for Mx in mats)
        rep.check(f"component-degree-{dgr}-lands-in-piece", ok,
                  source="graded isomorphism construction")

    # the degree -1 bracket identity fixing the product normalization:
    # [psi(x), psi(y)] = omega-twisted psi of the symmetric product
    if isinstance(model, PositiveModel):
        m, n = model.m, model.n
        Om = model.q_space.omega
        ok = True
        ratio = None
        for i in range(m):
            for a in range(n):
                for j in range(m):
                    for b in range(n):
                        x = endo[-1][tensor_index(n, i, a)]
                        y = endo[-1][tensor_index(n, j, b)]
                        comm = x.commutator(y)
                        target = Matrix.zero(V.dim, V.dim)
                        if Om[a, b]:
                            target = endo[-2][sym_index(m, i, j)].scale(Om[a, b])
                        if comm != target:
                            ok = False
                            if not comm.is_zero() and not target.is_zero():
                                for (u, v) in zip(comm.flatten(), target.flatten()):
                                    if u and v:
                                        ratio = v / u
                                        break
        rep.check("product-normalization", ok,
                  expected="commutators match the twisted symmetric product",
                  actual="ok" if ok else f"uniform mismatch ratio {ratio}",
                  source="degree -1 bracket identity")

    # solve the positive components from the intertwining condition
    for k in range(1, (res.mu or 0) + 1):
        dimk = eng.dim(k)
        if dimk == 0:
            continue
        piece = piece_by_deg.get(k)
        if piece is None or piece.dim != dimk:
            raise PsiConstructionError(
                f"target piece at degree {k} has dimension "
                f"{0 if piece is None else piece.dim}, expected {dimk}")
        sp_mats = [Matrix.from_flat(piece.basis.column(b), V.dim, V.dim)
                   for b in range(piece.dim)]
        images = []
        for idx in range(dimk):
            rows = []
            rhs = []
            for dm in sorted(neg):
                for s in range(eng.dim(dm)):
                    # [Y, psi(v)] = psi([phi, v]) as linear equations on Y
                    target = Matrix.zero(V.dim, V.dim)
                    for c, xv in eng.bkt(k, idx, dm, s).items():
                        target = target + endo[k + dm][c].scale(xv)
                    base = endo[dm][s]
                    coeff_mats = [Sb.commutator(base) for Sb in sp_mats]
                    tflat = target.flatten()
                    cflats = [Mx.flatten() for Mx in coeff_mats]
                    for pos in range(V.dim * V.dim):
                        row = [cf[pos] for cf in cflats]
                        if any(row) or tflat[pos]:
                            rows.append(row)
                            rhs.append(tflat[pos])
            A = Matrix(rows, rows=len(rows), cols=piece.dim)
            sol = solve(A, rhs)
            if sol is None:
                raise PsiConstructionError(
                    f"intertwining system inconsistent at degree {k}, "
                    f"basis element {idx}")
            if not kernel_basis(A).is_zero():
                raise PsiConstructionError(
                    f"intertwining solution not unique at degree {k}")
            img = Matrix.zero(V.dim, V.dim)
            for cb, Sb in zip(sol, sp_mats):
                if cb:
                    img = img + Sb.scale(cb)
            images.append(img)
        endo[k] = tuple(images)

    # global verification: degrees, bijectivity, bracket preservation
    coordinate_matrices = {}
    for dgr, mats in endo.items():
        piece = piece_by_deg[dgr]
        cols = []
        for Mx in mats:
            coords = piece.coordinates_of(Mx.flatten())
            if coords is None:
                raise PsiConstructionError(
                    f"image at degree {dgr} left its target piece")
            cols.append(coords)
        Cmat = Matrix.from_columns(cols, ambient_dim=piece.dim)
        bij = len(cols) == piece.dim and \
            Subspace.from_columns(piece.dim, cols).dim == piece.dim
        rep.check(f"bijective-at-degree-{dgr}", bij,
                  source="graded isomorphism construction")
        coordinate_matrices[dgr] = Cmat

    ok_bracket = _check_bracket_preservation(eng, endo, rep)
    rep.check("degree-coverage",
              set(endo) == set(piece_by_deg) or
              all(piece_by_deg[d].dim == 0 for d in set(piece_by_deg) - set(endo)),
              source="graded isomorphism construction")

    total = eng.gminus.dim + eng.g0.dim + sum(eng.dim(k)
                                              for k in range(1, (res.mu or 0) + 1))
    spdim = sum(p.dim for _, p in pieces)
    rep.check("total-dimension-match", total == spdim,
              expected=str(spdim), actual=str(total),
              source="dimension count of the extended algebra")

    return PsiIsomorphism(model, V, grading, pieces, endo,
                          coordinate_matrices, rep)


def _check_bracket_preservation(eng: ProlongationEngine, endo, rep: Report):
    """psi([x, y]) = [psi(x), psi(y)] on every basis pair of the assembled
    algebra, as exact matrix identities."""
    degrees = sorted(endo)
    ok = True
    witness = ""
    for d1 in degrees:
        for d2 in degrees:
            if d2 < d1:
                continue
            for i1 in range(len(endo[d1])):
                j0 = i1 + 1 if d1 == d2 else 0
                for i2 in range(j0, len(endo[d2])):
                    lhs = endo[d1][i1].commutator(endo[d2][i2])
                    rhs = Matrix.zero(lhs.rows, lhs.cols)
                    for c, x in eng.bkt(d1, i1, d2, i2).items():
                        rhs = rhs + endo[d1 + d2][c].scale(x)
                    if lhs != rhs:
                        ok = False
                        witness = f"degrees ({d1},{d2}) indices ({i1},{i2})"
                        break
                if not ok:
                    break
            if not ok:
                break
        if not ok:
            break
    rep.check("bracket-preservation-all-pairs", ok,
              expected="exact equality", actual=witness or "ok",
              source="graded isomorphism certification")
    return ok
