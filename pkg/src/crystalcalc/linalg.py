"""Exact linear algebra over Z/p^N.

Row spans over Z/p^N admit a unique canonical generating set, the Howell
form: echelon, pivot entries equal to powers of p, entries above a pivot
reduced modulo that pivot, and the span closed under multiplication by the
annihilators p^(N-v) of the pivots.  Everything else here (kernels, solving,
subquotient invariants, cohomology of complexes) reduces to that form.

Vectors are rows; a matrix acts on the right (x -> x*M), so ``kernel(M)``
is the left kernel {x : x*M = 0}.
"""

from .errors import ContainmentViolation
from .ring import ZpN

DENSITY_THRESHOLD = 0.25


class Matrix:
    """Immutable matrix over Z/p^N with sparse or dense backing storage.

    Storage is an implementation detail: below the density threshold entries
    live in a dict keyed by (row, col), otherwise in row lists.  All
    computations extract per-row dicts, so results never depend on which
    backing store was chosen.
    """

    __slots__ = ("ring", "nrows", "ncols", "_sparse", "_dense")

    def __init__(self, ring: ZpN, nrows: int, ncols: int, entries=None,
                 threshold: float = DENSITY_THRESHOLD):
        self.ring = ring
        self.nrows = nrows
        self.ncols = ncols
        cleaned = {}
        if entries:
            for (i, j), v in entries.items():
                if not (0 <= i < nrows and 0 <= j < ncols):
                    raise IndexError(f"entry ({i},{j}) outside {nrows}x{ncols}")
                v %= ring.modulus
                if v:
                    cleaned[(i, j)] = v
        size = nrows * ncols
        if size and len(cleaned) / size > threshold:
            dense = [[0] * ncols for _ in range(nrows)]
            for (i, j), v in cleaned.items():
                dense[i][j] = v
            self._dense = dense
            self._sparse = None
        else:
            self._sparse = cleaned
            self._dense = None

    @classmethod
    def from_rows(cls, ring, rows, ncols=None):
        rows = [list(r) for r in rows]
        if ncols is None:
            ncols = len(rows[0]) if rows else 0
        entries = {}
        for i, r in enumerate(rows):
            if len(r) != ncols:
                raise ValueError("ragged rows")
            for j, v in enumerate(r):
                if v % ring.modulus:
                    entries[(i, j)] = v
        return cls(ring, len(rows), ncols, entries)

    @classmethod
    def from_row_dicts(cls, ring, dicts, ncols):
        entries = {}
        for i, d in enumerate(dicts):
            for j, v in d.items():
                if v % ring.modulus:
                    entries[(i, j)] = v
        return cls(ring, len(dicts), ncols, entries)

    @classmethod
    def identity(cls, ring, n):
        return cls(ring, n, n, {(i, i): 1 for i in range(n)})

    @classmethod
    def zero(cls, ring, nrows, ncols):
        return cls(ring, nrows, ncols, {})

    def get(self, i, j):
        if self._dense is not None:
            return self._dense[i][j]
        return self._sparse.get((i, j), 0)

    def row_dicts(self):
        out = [dict() for _ in range(self.nrows)]
        if self._dense is not None:
            for i, row in enumerate(self._dense):
                d = out[i]
                for j, v in enumerate(row):
                    if v:
                        d[j] = v
        else:
            for (i, j), v in self._sparse.items():
                out[i][j] = v
        return out

    def to_dense(self):
        rows = [[0] * self.ncols for _ in range(self.nrows)]
        if self._dense is not None:
            for i, row in enumerate(self._dense):
                rows[i] = list(row)
        else:
            for (i, j), v in self._sparse.items():
                rows[i][j] = v
        return rows

    def is_zero(self):
        if self._dense is not None:
            return all(v == 0 for row in self._dense for v in row)
        return not self._sparse

    def __eq__(self, other):
        if not isinstance(other, Matrix):
            return NotImplemented
        if (self.ring, self.nrows, self.ncols) != (other.ring, other.nrows, other.ncols):
            return False
        return self.to_dense() == other.to_dense()

    def __hash__(self):
        return hash((self.ring, self.nrows, self.ncols,
                     tuple(tuple(r) for r in self.to_dense())))

    def __repr__(self):
        return f"Matrix({self.ring}, {self.nrows}x{self.ncols})"

    def mul(self, other: "Matrix") -> "Matrix":
        if self.ncols != other.nrows:
            raise ValueError("dimension mismatch")
        mod = self.ring.modulus
        other_rows = other.row_dicts()
        entries = {}
        for i, row in enumerate(self.row_dicts()):
            acc = {}
            for k, a in row.items():
                for j, b in other_rows[k].items():
                    acc[j] = (acc.get(j, 0) + a * b) % mod
            for j, v in acc.items():
                if v:
                    entries[(i, j)] = v
        return Matrix(self.ring, self.nrows, other.ncols, entries)

    def __matmul__(self, other):
        return self.mul(other)

    def add(self, other: "Matrix") -> "Matrix":
        if (self.nrows, self.ncols) != (other.nrows, other.ncols):
            raise ValueError("dimension mismatch")
        mod = self.ring.modulus
        entries = {}
        for d in (self.row_dicts(), other.row_dicts()):
            for i, row in enumerate(d):
                for j, v in row.items():
                    entries[(i, j)] = (entries.get((i, j), 0) + v) % mod
        return Matrix(self.ring, self.nrows, self.ncols, entries)

    def scale(self, c: int) -> "Matrix":
        mod = self.ring.modulus
        entries = {}
        if self._dense is not None:
            it = (((i, j), v) for i, row in enumerate(self._dense)
                  for j, v in enumerate(row) if v)
        else:
            it = self._sparse.items()
        for (i, j), v in it:
            entries[(i, j)] = (v * c) % mod
        return Matrix(self.ring, self.nrows, self.ncols, entries)

    def stack(self, other: "Matrix") -> "Matrix":
        if self.ncols != other.ncols:
            raise ValueError("dimension mismatch")
        entries = {}
        for (i, j), v in self._iter_entries():
            entries[(i, j)] = v
        for (i, j), v in other._iter_entries():
            entries[(i + self.nrows, j)] = v
        return Matrix(self.ring, self.nrows + other.nrows, self.ncols, entries)

    def _iter_entries(self):
        if self._dense is not None:
            for i, row in enumerate(self._dense):
                for j, v in enumerate(row):
                    if v:
                        yield (i, j), v
        else:
            yield from self._sparse.items()


class ElementaryDivisors:
    """Invariants of a finite module over Z/p^N: summands Z/p^e, e desc.

    Full-precision summands (e = N) are the "free" ones at this precision;
    their count is reported separately as ``free_rank``.
    """

    __slots__ = ("p", "N", "exponents")

    def __init__(self, p, N, exponents):
        exps = sorted((e for e in exponents if e > 0), reverse=True)
        if any(e > N for e in exps):
            raise ValueError("exponent exceeds precision")
        self.p = p
        self.N = N
        self.exponents = tuple(exps)

    @property
    def free_rank(self):
        return sum(1 for e in self.exponents if e == self.N)

    def __eq__(self, other):
        if not isinstance(other, ElementaryDivisors):
            return NotImplemented
        return (self.p, self.N, self.exponents) == (other.p, other.N, other.exponents)

    def __hash__(self):
        return hash((self.p, self.N, self.exponents))

    def __repr__(self):
        return f"ElementaryDivisors(p={self.p}, N={self.N}, exponents={list(self.exponents)})"

    def __str__(self):
        if not self.exponents:
            return "0"
        return " x ".join(f"Z/{self.p ** e}" for e in self.exponents)

    def is_trivial(self):
        return not self.exponents


def _leading(row):
    return min(row) if row else None


def _sub_scaled(row, other, q, mod):
    """row -= q * other, in place on dicts."""
    if q % mod == 0:
        return
    for j, v in other.items():
        nv = (row.get(j, 0) - q * v) % mod
        if nv:
            row[j] = nv
        else:
            row.pop(j, None)


def _scale_row(row, c, mod):
    dead = []
    for j in row:
        v = (row[j] * c) % mod
        if v:
            row[j] = v
        else:
            dead.append(j)
    for j in dead:
        del row[j]


def _howell_engine(ring, rows, transforms=None):
    """Shared engine: echelonize with annihilator closure and reduce above.

    Returns (pivot list, zero_transforms).  Each pivot is a triple
    (col, row_dict, transform_dict_or_None); zero_transforms collects the
    transforms of work rows that reduced to zero (these span the left kernel
    when the transforms started as unit vectors).
    """
    mod = ring.modulus
    p, N = ring.p, ring.N
    track = transforms is not None
    work = []
    for i, r in enumerate(rows):
        clean = {j: v % mod for j, v in r.items() if v % mod}
        t = transforms[i] if track else None
        work.append((clean, dict(t) if t is not None else None))

    pivots = {}  # col -> [row, transform, valuation]
    zero_transforms = []

    while work:
        row, trans = work.pop()
        while True:
            c = _leading(row)
            if c is None:
                if track and trans:
                    zero_transforms.append(trans)
                break
            v = ring.val(row[c])
            if c in pivots:
                prow, ptrans, pv = pivots[c]
                if v < pv:
                    # new row becomes the pivot; old one re-enters the loop
                    u = ring.unit_inverse(row[c] // p ** v)
                    _scale_row(row, u, mod)
                    if track:
                        _scale_row(trans, u, mod)
                    pivots[c] = [row, trans, v]
                    if v > 0:
                        ann = p ** (N - v)
                        arow, atrans = dict(row), dict(trans) if track else None
                        _scale_row(arow, ann, mod)
                        if track:
                            _scale_row(atrans, ann, mod)
                        work.append((arow, atrans))
                    row, trans, pv = prow, ptrans, v
                    prow, ptrans = pivots[c][0], pivots[c][1]
                q = row[c] // p ** pivots[c][2]
                _sub_scaled(row, pivots[c][0], q, mod)
                if track:
                    _sub_scaled(trans, pivots[c][1], q, mod)
                # leading entry now eliminated; continue with the remainder
                continue
            # install a fresh pivot
            u = ring.unit_inverse(row[c] // p ** v)
            _scale_row(row, u, mod)
            if track:
                _scale_row(trans, u, mod)
            pivots[c] = [row, trans, v]
            if v > 0:
                ann = p ** (N - v)
                arow, atrans = dict(row), dict(trans) if track else None
                _scale_row(arow, ann, mod)
                if track:
                    _scale_row(atrans, ann, mod)
                work.append((arow, atrans))
            break

    # Howell reduction above the pivots, left to right.
    cols = sorted(pivots)
    for c in cols:
        prow, ptrans, pv = pivots[c]
        pval = p ** pv
        for c2 in cols:
            if c2 >= c:
                break
            row2, trans2, _ = pivots[c2]
            x = row2.get(c, 0)
            if x:
                q = x // pval
                _sub_scaled(row2, prow, q, mod)
                if track:
                    _sub_scaled(trans2, ptrans, q, mod)
    ordered = [(c,) + tuple(pivots[c]) for c in cols]
    return ordered, zero_transforms


def howell_form(M: Matrix):
    """Canonical Howell form H of the row span of M, with U such that U*M = H."""
    rows = M.row_dicts()
    transforms = [{i: 1} for i in range(M.nrows)]
    pivots, _ = _howell_engine(M.ring, rows, transforms)
    h_entries, u_entries = {}, {}
    for i, (_c, row, trans, _v) in enumerate(pivots):
        for j, v in row.items():
            h_entries[(i, j)] = v
        for j, v in trans.items():
            u_entries[(i, j)] = v
    H = Matrix(M.ring, len(pivots), M.ncols, h_entries)
    U = Matrix(M.ring, len(pivots), M.nrows, u_entries)
    return H, U


def kernel(M: Matrix) -> Matrix:
    """Howell basis of the left kernel {x : x*M = 0}."""
    rows = M.row_dicts()
    transforms = [{i: 1} for i in range(M.nrows)]
    _, zeros = _howell_engine(M.ring, rows, transforms)
    if not zeros:
        return Matrix(M.ring, 0, M.nrows, {})
    pivots, _ = _howell_engine(M.ring, zeros)
    entries = {}
    for i, (_c, row, _t, _v) in enumerate(pivots):
        for j, v in row.items():
            entries[(i, j)] = v
    return Matrix(M.ring, len(pivots), M.nrows, entries)


class HowellBasis:
    """A Howell form kept as row dicts, for repeated membership queries."""

    __slots__ = ("ring", "ncols", "pivots")

    def __init__(self, ring, M_or_rows, ncols=None):
        if isinstance(M_or_rows, Matrix):
            rows = M_or_rows.row_dicts()
            ncols = M_or_rows.ncols
        else:
            rows = [dict(r) for r in M_or_rows]
            if ncols is None:
                raise ValueError("ncols required for raw rows")
        self.ring = ring
        self.ncols = ncols
        self.pivots, _ = _howell_engine(ring, rows)

    def __len__(self):
        return len(self.pivots)

    def rows(self):
        return [dict(row) for (_c, row, _t, _v) in self.pivots]

    def matrix(self):
        return Matrix.from_row_dicts(self.ring, self.rows(), self.ncols)

    def reduce(self, vec):
        """Reduce a row dict against the basis.

        Returns (residual, coords) with  vec = coords * basis + residual;
        vec is in the span iff residual is empty.
        """
        ring = self.ring
        mod = ring.modulus
        p = ring.p
        res = {j: v % mod for j, v in vec.items() if v % mod}
        coords = {}
        for idx, (c, row, _t, v) in enumerate(self.pivots):
            x = res.get(c, 0)
            if x:
                q = x // p ** v
                if q % mod:
                    _sub_scaled(res, row, q, mod)
                    coords[idx] = q % mod
        return res, coords

    def contains(self, vec) -> bool:
        res, _ = self.reduce(vec)
        return not res


def solve_in_rowspace(M: Matrix, b: dict):
    """Coordinates x (a dict over row indices) with x*M = b, or None.

    b is a column->value dict.  The particular solution returned is the
    canonical one obtained by reducing b against the Howell form of M.
    """
    ring = M.ring
    H, U = howell_form(M)
    basis = HowellBasis(ring, H)
    res, coords = basis.reduce(b)
    if res:
        return None
    u_rows = U.row_dicts()
    mod = ring.modulus
    x = {}
    for idx, q in coords.items():
        for j, v in u_rows[idx].items():
            nv = (x.get(j, 0) + q * v) % mod
            if nv:
                x[j] = nv
            else:
                x.pop(j, None)
    return x


def smith_valuations(M: Matrix):
    """Valuations of the diagonal of the Smith form of M over Z/p^N.

    Row and column operations are both allowed over this local ring, so the
    form is diag(p^a1, ..., p^as) with a1 <= ... <= as, returned as a list.
    """
    ring = M.ring
    mod, p = ring.modulus, ring.p
    A = M.to_dense()
    nrows, ncols = M.nrows, M.ncols
    vals = []
    top = 0
    while True:
        best = None
        for i in range(top, nrows):
            for j in range(top, ncols):
                a = A[i][j]
                if a:
                    v = ring.val(a)
                    if best is None or v < best[0]:
                        best = (v, i, j)
                        if v == 0:
                            break
            if best is not None and best[0] == 0:
                break
        if best is None:
            break
        v, bi, bj = best
        A[top], A[bi] = A[bi], A[top]
        for row in A:
            row[top], row[bj] = row[bj], row[top]
        u = ring.unit_inverse(A[top][top] // p ** v)
        A[top] = [(x * u) % mod for x in A[top]]
        piv = p ** v
        for i in range(top + 1, nrows):
            x = A[i][top]
            if x:
                q = x // piv
                A[i] = [(a - q * b) % mod for a, b in zip(A[i], A[top])]
        for j in range(top + 1, ncols):
            x = A[top][j]
            if x:
                q = x // piv
                for i in range(top, nrows):
                    A[i][j] = (A[i][j] - q * A[i][top]) % mod
        vals.append(v)
        top += 1
        if top >= nrows or top >= ncols:
            break
    return vals


def subquotient(ker_basis: Matrix, im_basis: Matrix) -> ElementaryDivisors:
    """Elementary divisors of span(ker_basis) / span(im_basis).

    Raises ContainmentViolation when an image row falls outside the kernel
    span, which upstream means a differential whose square is not zero.
    """
    ring = ker_basis.ring
    if ker_basis.ncols != im_basis.ncols:
        raise ValueError("ambient dimension mismatch")
    K = HowellBasis(ring, ker_basis)
    r = len(K)
    coords_rows = []
    for i, row in enumerate(im_basis.row_dicts()):
        res, coords = K.reduce(row)
        if res:
            j = sorted(res)[0]
            raise ContainmentViolation(
                f"image row {i} is not contained in the kernel span "
                f"(residual at column {j})", witness=(i, sorted(res.items())))
        coords_rows.append(coords)
    if r == 0:
        return ElementaryDivisors(ring.p, ring.N, [])
    syz = kernel(K.matrix())
    rel_entries = {}
    nrel = 0
    for row in syz.row_dicts():
        for j, v in row.items():
            rel_entries[(nrel, j)] = v
        nrel += 1
    for coords in coords_rows:
        for j, v in coords.items():
            rel_entries[(nrel, j)] = v
        nrel += 1
    rel = Matrix(ring, nrel, r, rel_entries)
    diag = smith_valuations(rel)
    exps = [min(a, ring.N) for a in diag]
    exps += [ring.N] * (r - len(diag))
    return ElementaryDivisors(ring.p, ring.N, exps)


def complex_cohomology(d_in: Matrix, d_out: Matrix) -> ElementaryDivisors:
    """Cohomology at the middle of  ._ --d_in--> . --d_out--> ._ .

    Asserts d_in * d_out = 0 before taking the subquotient.
    """
    if d_in.ncols != d_out.nrows:
        raise ValueError("complex dimensions do not chain")
    if not d_in.mul(d_out).is_zero():
        raise ContainmentViolation("d after d is not zero", witness=(d_in, d_out))
    return subquotient(kernel(d_out), d_in)
