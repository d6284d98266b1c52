"""The simplicial interval rings and their constructive Kan fillers.

Level m of the basic tower is the truncated polynomial ring on interval
variables T_0, ..., T_m subject (in the "pi" variant) to T_0 + ... + T_m = p.
We keep T_0 .. T_{m-1} as free variables and treat the last one as the
derived expression p - (T_0 + ... + T_{m-1}); with this choice the two faces
of the 1-simplex variable T_0 evaluate to 0 and p.

A monotone map sigma: [n] -> [m] acts by the ring morphism sending T_i to
the sum of T_j over the sigma-preimage of i.  The checks in this module run
in plain truncated polynomial arithmetic; the tower itself also supports
divided-power levels, which is how the de Rham double complex reuses the
same structure maps.

The tower can carry extra geometric variables (a coefficient algebra), which
every structure map fixes; the mapping-space fillers reuse the same code.
"""

from itertools import permutations

from .errors import (
    IdentityViolation,
    IncompatibleFaces,
    KernelMismatch,
    PrecisionExhausted,
    RegularityFailure,
)
from .linalg import HowellBasis, Matrix, kernel, solve_in_rowspace
from .reports import CheckReport, merge_reports
from .ring import ZpN
from .series import PDSeries, VarSpec, pd_substitute


class SimplexMap:
    """A weakly monotone map [n] -> [m], stored as its n+1 values."""

    __slots__ = ("values", "n", "m")

    def __init__(self, values, m):
        values = tuple(values)
        if not values:
            raise ValueError("domain [n] must be nonempty")
        if any(v < 0 or v > m for v in values):
            raise ValueError("values outside codomain")
        if any(a > b for a, b in zip(values, values[1:])):
            raise ValueError("map is not monotone")
        self.values = values
        self.n = len(values) - 1
        self.m = m

    @classmethod
    def identity(cls, m):
        return cls(range(m + 1), m)

    @classmethod
    def coface(cls, m, i):
        """delta_i: [m-1] -> [m], skipping the value i."""
        return cls([j for j in range(m + 1) if j != i], m)

    @classmethod
    def codegeneracy(cls, m, i):
        """sigma_i: [m+1] -> [m], repeating the value i."""
        vals = list(range(i + 1)) + list(range(i, m + 1))
        return cls(vals, m)

    def then(self, other: "SimplexMap") -> "SimplexMap":
        """The composite other o self (self first)."""
        if self.m != other.n:
            raise ValueError("maps do not compose")
        return SimplexMap([other.values[v] for v in self.values], other.m)

    def preimage(self, i):
        return [j for j, v in enumerate(self.values) if v == i]

    def __eq__(self, other):
        return isinstance(other, SimplexMap) and \
            (self.values, self.m) == (other.values, other.m)

    def __repr__(self):
        return f"SimplexMap({list(self.values)} -> [{self.m}])"


def t_monomials(nvars, bound):
    """All exponent tuples of length nvars with total degree <= bound."""
    if nvars == 0:
        return [()]
    out = []

    def rec(prefix, remaining, left):
        if remaining == 1:
            for e in range(left + 1):
                out.append(prefix + (e,))
            return
        for e in range(left + 1):
            rec(prefix + (e,), remaining - 1, left - e)

    rec((), nvars, bound)
    out.sort()
    return out


class LevelTower:
    """Interval-ring levels over a fixed geometric base algebra.

    ``variant`` is "interval" for the quotient tower (T_0+...+T_m = p, last
    variable eliminated) or "free" for the unquotiented tower on T_0..T_m.
    """

    def __init__(self, ring: ZpN, D: int, geom=(), E: int = 0,
                 divided: bool = False, variant: str = "interval"):
        if variant not in ("interval", "free"):
            raise ValueError(f"unknown variant {variant!r}")
        self.ring = ring
        self.D = D
        self.geom = tuple(geom)
        self.E = E
        self.divided = divided
        self.variant = variant
        self._specs = {}

    def nvars(self, m):
        return m if self.variant == "interval" else m + 1

    def spec(self, m) -> VarSpec:
        if m not in self._specs:
            names = tuple(f"T{i}" for i in range(self.nvars(m)))
            self._specs[m] = VarSpec(self.ring, geom=self.geom, pd=names,
                                     E=self.E, D=self.D, divided=self.divided)
        return self._specs[m]

    def var(self, m, i) -> PDSeries:
        return PDSeries.pd_var(self.spec(m), f"T{i}")

    def eliminated_expr(self, m) -> PDSeries:
        """The derived last variable p - (T_0 + ... + T_{m-1}) at level m."""
        spec = self.spec(m)
        out = PDSeries.constant(spec, self.ring.p)
        for i in range(m):
            out = out.sub(self.var(m, i))
        return out

    def var_or_derived(self, m, j) -> PDSeries:
        if self.variant == "free" or j < m:
            return self.var(m, j)
        return self.eliminated_expr(m)

    def structure_images(self, sigma: SimplexMap) -> dict:
        """Images of the free variables of level sigma.m inside level sigma.n."""
        n = sigma.n
        images = {}
        for i in range(self.nvars(sigma.m)):
            img = PDSeries.zero(self.spec(n))
            for j in sigma.preimage(i):
                img = img.add(self.var_or_derived(n, j))
            images[f"T{i}"] = img
        return images

    def apply_map(self, sigma: SimplexMap, f: PDSeries) -> PDSeries:
        return pd_substitute(f, self.structure_images(sigma), self.spec(sigma.n))

    def face(self, m, i, f: PDSeries) -> PDSeries:
        return self.apply_map(SimplexMap.coface(m, i), f)

    def degeneracy(self, m, i, f: PDSeries) -> PDSeries:
        return self.apply_map(SimplexMap.codegeneracy(m, i), f)

    def include(self, f: PDSeries, m_to: int) -> PDSeries:
        """Name-preserving inclusion of a lower level's carrier."""
        spec = self.spec(m_to)
        pad = self.nvars(m_to)
        terms = {}
        for (xe, te), c in f.terms.items():
            terms[(xe, te + (0,) * (pad - len(te)))] = c
        return PDSeries(spec, terms, f.prec)

    def product(self, m) -> PDSeries:
        """The full product T_0 * ... * T_m at level m (interval variant)."""
        out = PDSeries.one(self.spec(m))
        for j in range(m + 1):
            out = out.mul(self.var_or_derived(m, j))
        return out

    def boundary_class(self, m, f: PDSeries) -> PDSeries:
        """Canonical representative of f modulo the full variable product.

        This realizes the boundary quotient ring of level m: elements are
        classes modulo (T_0 * ... * T_m), represented by Howell reduction
        against the expanded product multiples on the window.
        """
        spec = self.spec(m)
        prod = self.product(m)
        basis_idx = {te: k for k, te in enumerate(self.basis(m))}
        rows = []
        for te in t_monomials(self.nvars(m), self.D - (m + 1)):
            mu = PDSeries(spec, {(spec.zero_x(), te): 1})
            img = prod.mul(mu)
            rows.append({basis_idx[t]: c for (_xe, t), c in img.terms.items()})
        hb = HowellBasis(self.ring, rows, len(basis_idx))
        out_terms = {}
        by_xe = {}
        for (xe, te), c in f.terms.items():
            by_xe.setdefault(xe, {})[basis_idx[te]] = c
        basis = self.basis(m)
        for xe in sorted(by_xe):
            res, _ = hb.reduce(by_xe[xe])
            for k, c in res.items():
                out_terms[(xe, basis[k])] = c
        return PDSeries(spec, out_terms, f.prec)

    def reduction(self, m, f: PDSeries) -> PDSeries:
        """Reduce modulo (p, T): kill the interval variables, coefficients mod p."""
        base = VarSpec(self.ring.with_precision(1), geom=self.geom, pd=(),
                       E=self.E, D=self.D, divided=self.divided)
        terms = {}
        for (xe, te), c in f.terms.items():
            if sum(te) == 0 and c % self.ring.p:
                terms[(xe, ())] = c % self.ring.p
        return PDSeries(base, terms, 1)

    # -- linear-algebra views ------------------------------------------

    def basis(self, m):
        return t_monomials(self.nvars(m), self.D)

    def series_to_vector(self, m, f: PDSeries, index=None) -> dict:
        if index is None:
            index = {te: k for k, te in enumerate(self.basis(m))}
        vec = {}
        for (xe, te), c in f.terms.items():
            if any(xe):
                raise ValueError("vectorization expects no geometric part")
            vec[index[te]] = c
        return vec

    def vector_to_series(self, m, vec: dict, prec=None) -> PDSeries:
        basis = self.basis(m)
        terms = {}
        xe = self.spec(m).zero_x()
        for k, c in vec.items():
            terms[(xe, basis[k])] = c
        return PDSeries(self.spec(m), terms, prec)


# -- simplicial identity suite -----------------------------------------


def verify_simplicial_identities(ring: ZpN, D: int, m_max: int,
                                 variant: str = "interval",
                                 tamper=None, strict: bool = False) -> CheckReport:
    """Check the face/degeneracy relations levelwise up to m_max.

    Compares composed structure morphisms on every free generator.  The
    optional ``tamper=(kind, m, i)`` hook corrupts one structure map, as a
    negative control that the comparison actually bites.
    """
    if m_max > 4:
        raise ValueError("m_max above 4 is not certified (cost control)")
    tower = LevelTower(ring, D, variant=variant)

    def images_of(kind, m, i):
        """Structure images plus the level they land in."""
        if kind == "d":
            sigma = SimplexMap.coface(m, i)
        else:
            sigma = SimplexMap.codegeneracy(m, i)
        images = tower.structure_images(sigma)
        if tamper == (kind, m, i) and images:
            # corrupt one image without leaving the ideal (p, T)
            name = sorted(images)[0]
            if tower.nvars(sigma.n) >= 1:
                bump = tower.var(sigma.n, 0)
            else:
                bump = PDSeries.constant(tower.spec(sigma.n), ring.p)
            images[name] = images[name].add(bump)
        return images, sigma.n

    def compose(first, then_):
        """Apply ``first`` then ``then_``; both are (images, target) pairs."""
        first_images, _ = first
        then_images, target_level = then_
        target = tower.spec(target_level)
        out = {name: pd_substitute(img, then_images, target)
               for name, img in first_images.items()}
        return out, target_level

    def maps_equal(a, b):
        (ia, la), (ib, lb) = a, b
        if la != lb or sorted(ia) != sorted(ib):
            return False
        return all(ia[k] == ib[k] for k in ia)

    failures = []
    checked = 0
    for m in range(m_max + 1):
        # d_i d_j = d_{j-1} d_i for i < j, maps from level m (m >= 2)
        if m >= 2:
            for j in range(m + 1):
                for i in range(j):
                    lhs = compose(images_of("d", m, j), images_of("d", m - 1, i))
                    rhs = compose(images_of("d", m, i), images_of("d", m - 1, j - 1))
                    checked += 1
                    if not maps_equal(lhs, rhs):
                        failures.append(f"d{i} d{j} != d{j-1} d{i} at level {m}")
        # s_i s_j = s_{j+1} s_i for i <= j, maps from level m
        for j in range(m + 1):
            for i in range(j + 1):
                lhs = compose(images_of("s", m, j), images_of("s", m + 1, i))
                rhs = compose(images_of("s", m, i), images_of("s", m + 1, j + 1))
                checked += 1
                if not maps_equal(lhs, rhs):
                    failures.append(f"s{i} s{j} != s{j+1} s{i} at level {m}")
        # mixed identities d_i s_j (operators on level m-1)
        if m >= 1:
            for j in range(m):
                for i in range(m + 1):
                    lhs = compose(images_of("s", m - 1, j), images_of("d", m, i))
                    checked += 1
                    if i == j or i == j + 1:
                        ident = ({f"T{k}": tower.var(m - 1, k)
                                  for k in range(tower.nvars(m - 1))}, m - 1)
                        if not maps_equal(lhs, ident):
                            failures.append(f"d{i} s{j} != id at level {m}")
                    elif i < j:
                        rhs = compose(images_of("d", m - 1, i),
                                      images_of("s", m - 2, j - 1))
                        if not maps_equal(lhs, rhs):
                            failures.append(f"d{i} s{j} != s{j-1} d{i} at level {m}")
                    else:
                        rhs = compose(images_of("d", m - 1, i - 1),
                                      images_of("s", m - 2, j))
                        if not maps_equal(lhs, rhs):
                            failures.append(f"d{i} s{j} != s{j} d{i-1} at level {m}")
        # the augmentation (all T -> 0, coefficients mod p) commutes with
        # every face and degeneracy: variable images must have no unit
        # constant term
        for kind, count in (("d", m + 1 if m >= 1 else 0), ("s", m + 1)):
            for i in range(count):
                images, _lvl = images_of(kind, m, i)
                for name, img in images.items():
                    const = img.constant_coefficient()
                    checked += 1
                    if const % ring.p:
                        failures.append(
                            f"augmentation broken by {kind}{i} at level {m} on {name}")

    if failures:
        if strict:
            raise IdentityViolation(failures[0], witness=failures)
        return CheckReport("simplicial-identities", False,
                           witness=failures[0],
                           details={"failures": len(failures),
                                    "checked": checked,
                                    "variant": variant})
    return CheckReport("simplicial-identities", True,
                       details={"checked": checked, "variant": variant,
                                "m_max": m_max})


# -- boundary restriction and its kernel --------------------------------


def boundary_restriction(tower: LevelTower, m: int, f: PDSeries):
    """All faces of f together with its reduction modulo (p, T)."""
    if m < 1:
        raise ValueError("boundary restriction needs m >= 1")
    faces = tuple(tower.face(m, i, f) for i in range(m + 1))
    return faces, tower.reduction(m, f)


def faces_compatible(tower: LevelTower, m: int, faces) -> bool:
    """The simplicial compatibility d_i f_j = d_{j-1} f_i for i < j."""
    if m < 2:
        return len(faces) == m + 1
    for j in range(m + 1):
        for i in range(j):
            if tower.face(m - 1, i, faces[j]) != tower.face(m - 1, j - 1, faces[i]):
                return False
    return True


def verify_boundary_kernel(p: int, N: int, D: int, m: int,
                           strict: bool = False) -> CheckReport:
    """Certify: a level-m element has all faces zero iff the full variable
    product divides it.

    At precision N alone the forward inclusion is polluted by coefficients
    whose faces vanish only because a p-power overflowed the modulus, so the
    kernel is computed with valuation headroom (precision N + D + m + 1) and
    then projected back to precision N, where it must coincide with the span
    of exact product multiples.
    """
    name = "boundary-kernel"

    def out(rep):
        return rep.require(KernelMismatch) if strict else rep

    if m < 1:
        raise ValueError("m >= 1 required")
    if D < m + 1:
        return CheckReport(name, True, inconclusive=True,
                           witness=f"window D={D} cannot hold the degree-{m+1} product",
                           details={"m": m, "D": D})
    buffered = ZpN(p, N + D + m + 1)
    tower = LevelTower(buffered, D)
    basis_m = tower.basis(m)
    basis_f = tower.basis(m - 1)
    idx_f = {te: k for k, te in enumerate(basis_f)}
    nf = len(basis_f)

    entries = {}
    for r, te in enumerate(basis_m):
        elt = tower.vector_to_series(m, {r: 1})
        for i in range(m + 1):
            img = tower.face(m, i, elt)
            for (_xe, te2), c in img.terms.items():
                entries[(r, i * nf + idx_f[te2])] = c
    face_matrix = Matrix(buffered, len(basis_m), (m + 1) * nf, entries)

    # exact product multiples (degrees small enough that nothing truncates)
    prod = tower.product(m)
    ideal_rows = []
    for te in t_monomials(tower.nvars(m), D - (m + 1)):
        mu = PDSeries(tower.spec(m), {(tower.spec(m).zero_x(), te): 1})
        row_series = prod.mul(mu)
        # every face of a product multiple must vanish exactly
        for i in range(m + 1):
            if not tower.face(m, i, row_series).is_zero():
                return out(CheckReport(name, False,
                                       witness=f"product multiple {mu} has "
                                               f"nonzero face {i}",
                                       details={"m": m}))
        ideal_rows.append(tower.series_to_vector(m, row_series))

    ker = kernel(face_matrix)

    # project both modules to precision N and compare canonical forms
    small = ZpN(p, N)
    small_mod = small.modulus

    def project(rows_dicts):
        return [{j: v % small_mod for j, v in r.items() if v % small_mod}
                for r in rows_dicts]

    ker_rows = project(ker.row_dicts())
    ideal_rows_small = project(ideal_rows)
    ncols = len(basis_m)
    hb_ker = HowellBasis(small, ker_rows, ncols)
    hb_ideal = HowellBasis(small, ideal_rows_small, ncols)
    for row in hb_ker.rows():
        if not hb_ideal.contains(row):
            te = basis_m[sorted(row)[0]]
            return out(CheckReport(name, False,
                                   witness=f"kernel element at monomial {te} "
                                           f"is not a product multiple",
                                   details={"m": m, "D": D, "N": N}))
    for row in hb_ideal.rows():
        if not hb_ker.contains(row):
            te = basis_m[sorted(row)[0]]
            return out(CheckReport(name, False,
                                   witness=f"product multiple at monomial {te} "
                                           f"escapes the face kernel",
                                   details={"m": m, "D": D, "N": N}))
    return CheckReport(name, True,
                       details={"m": m, "D": D, "N": N,
                                "buffer": buffered.N - N,
                                "kernel_rank": len(hb_ker)})


# -- regular sequences ---------------------------------------------------


def check_regular_sequence(p: int, N: int, D: int, m: int, perm,
                           boundary_quotient: bool = False,
                           strict: bool = False) -> CheckReport:
    """Windowed regularity of the permuted interval variables at level m.

    Stage j multiplies by the j-th sequence element on the quotient by the
    previous ones; a degree <= D-1 element killed in degree <= D must itself
    lie in the previous ideal, up to terms invisible at precision N.  The
    computation runs with valuation headroom and failures are reported with
    the offending class.  With ``boundary_quotient`` the same test runs in
    the ring modulo the full variable product, where it must fail.
    """
    name = "regular-sequence"

    def out(rep):
        return rep.require(RegularityFailure) if strict else rep

    if m > 3:
        raise ValueError("m above 3 is not certified (cost control)")
    perm = tuple(perm)
    if sorted(perm) != list(range(m + 1)):
        raise ValueError("perm must order the m+1 interval variables")
    buffered = ZpN(p, N + D + 2)
    tower = LevelTower(buffered, D)
    spec = tower.spec(m)
    basis = tower.basis(m)
    index = {te: k for k, te in enumerate(basis)}
    nall = len(basis)
    deg_limit_in = D - 1
    basis_in = [te for te in basis if sum(te) <= deg_limit_in]

    def mono(te):
        return PDSeries(spec, {(spec.zero_x(), te): 1})

    elements = [tower.var_or_derived(m, j) for j in perm]

    prev_rows_full = []   # span of previous elements, degree <= D
    prev_rows_low = []    # same but degree <= D-1 (for the membership target)
    if boundary_quotient:
        prod = tower.product(m)
        for te in t_monomials(tower.nvars(m), D - (m + 1)):
            row = prod.mul(mono(te))
            prev_rows_full.append(tower.series_to_vector(m, row, index))
            if sum(te) + m + 1 <= D - 1:
                prev_rows_low.append(tower.series_to_vector(m, row, index))

    # membership below the reported precision N is invisible: enlarge the
    # target span by p^N times every coordinate vector
    invisible = buffered.p ** N
    in_to_all = {k: index[te] for k, te in enumerate(basis_in)}
    nin = len(basis_in)

    for stage, a in enumerate(elements):
        low_rows = [dict(r) for r in prev_rows_low]
        low_rows += [{j: invisible} for j in range(nall)]
        hb_low = HowellBasis(buffered, low_rows, nall)
        # f*a lies in the previous ideal iff (f, y) kills the stacked matrix
        # [multiplication rows; ideal generator rows]
        entries = {}
        for r, te in enumerate(basis_in):
            img = a.mul(mono(te))
            for j, v in tower.series_to_vector(m, img, index).items():
                entries[(r, j)] = v
        for s, row in enumerate(prev_rows_full):
            for j, v in row.items():
                entries[(nin + s, j)] = v
        stacked = Matrix(buffered, nin + len(prev_rows_full), nall, entries)
        ker = kernel(stacked)
        for row in ker.row_dicts():
            f_part = {in_to_all[k]: v for k, v in row.items() if k < nin}
            if not f_part:
                continue
            if not hb_low.contains(f_part):
                j = sorted(f_part)[0]
                witness = (f"stage {stage} (element T{perm[stage]}): class at "
                           f"monomial {basis[j]} is killed but nonzero")
                return out(CheckReport(name, False, witness=witness,
                                       details={"m": m, "perm": perm,
                                                "stage": stage,
                                                "boundary_quotient": boundary_quotient}))
        # extend the previous ideal with this element's multiples; products
        # with deg <= D-1 inputs never truncate, so the spans are exact
        for te in basis:
            if sum(te) <= D - 1:
                img = a.mul(mono(te))
                prev_rows_full.append(tower.series_to_vector(m, img, index))
                if sum(te) <= D - 2:
                    prev_rows_low.append(tower.series_to_vector(m, img, index))
    return CheckReport(name, True,
                       details={"m": m, "perm": perm,
                                "boundary_quotient": boundary_quotient})


def regular_sequence_suite(p: int, N: int, D: int, m: int) -> CheckReport:
    """All permutations at level m, plus the boundary-ring negative control."""
    reports = []
    for perm in permutations(range(m + 1)):
        reports.append(check_regular_sequence(p, N, D, m, perm))
    neg = check_regular_sequence(p, N, D, m, tuple(range(m + 1)),
                                 boundary_quotient=True)
    ok_neg = not neg.passed
    reports.append(CheckReport("boundary-ring-negative-control", ok_neg,
                               witness="" if ok_neg else
                               "zero divisors went undetected",
                               details={"expected_failure": neg.witness}))
    return merge_reports(f"regular-sequences-m{m}", reports)


# -- boundary fillers -----------------------------------------------------


def divide_by_variable_product(tower: LevelTower, m: int, g: PDSeries):
    """Solve  (T_0 * ... * T_m) * q = g  at level m, or return None.

    The product is free of geometric variables, so the division splits over
    the geometric monomials of g and each piece is a small linear solve in
    the interval-variable coordinates.
    """
    spec = tower.spec(m)
    prod = tower.product(m)
    gen_monos = t_monomials(tower.nvars(m), tower.D - (m + 1))
    basis_idx = {te: k for k, te in enumerate(tower.basis(m))}
    rows = []
    for te in gen_monos:
        mu = PDSeries(spec, {(spec.zero_x(), te): 1})
        img = prod.mul(mu)
        vec = {}
        for (_xe, te2), c in img.terms.items():
            vec[basis_idx[te2]] = c
        rows.append(vec)
    M = Matrix.from_row_dicts(tower.ring, rows, len(basis_idx))

    by_xe = {}
    for (xe, te), c in g.terms.items():
        by_xe.setdefault(xe, {})[basis_idx[te]] = c
    q_terms = {}
    for xe in sorted(by_xe):
        x = solve_in_rowspace(M, by_xe[xe])
        if x is None:
            return None
        for k, v in x.items():
            q_terms[(xe, gen_monos[k])] = v
    return PDSeries(spec, q_terms, g.prec)


def fill_boundary(tower: LevelTower, m: int, faces, base: PDSeries) -> PDSeries:
    """An element of level m with the given faces and reduction.

    Faces are corrected one at a time through degeneracies; the remaining
    defect on the last face has all of its own faces zero and is repaired by
    exact division, by p at m = 1 and by the full variable product of the
    level below at m >= 2 (the quotient re-enters through the carrier
    inclusion, which is a section of the last face).
    """
    if tower.variant != "interval":
        raise ValueError("fillers are defined for the interval variant")
    if m == 0:
        lifted = PDSeries(base.spec.with_ring(tower.ring), base.terms)
        return tower.include(lifted, 0)
    if len(faces) != m + 1:
        raise IncompatibleFaces(f"expected {m+1} faces, got {len(faces)}")
    if not faces_compatible(tower, m, faces):
        raise IncompatibleFaces("faces violate the simplicial compatibility",
                                witness=faces)
    for i, fc in enumerate(faces):
        if tower.reduction(m - 1, fc) != base:
            raise IncompatibleFaces(
                f"face {i} does not reduce to the base datum", witness=fc)

    f = PDSeries.zero(tower.spec(m))
    for i in range(m):
        defect = tower.face(m, i, f).sub(faces[i])
        f = f.sub(tower.degeneracy(m - 1, i, defect))
    g = faces[m].sub(tower.face(m, m, f))
    if m >= 2:
        for i in range(m):
            if not tower.face(m - 1, i, g).is_zero():
                raise IncompatibleFaces("residual defect has a nonzero face",
                                        witness=g)
    if g.is_zero():
        return f
    if m == 1:
        # the divided coefficient is only determined at precision N-1; the
        # canonical representative keeps both face evaluations exact
        q = g.divide_exact(tower.ring.p)
        correction = tower.include(q.lift_precision(f.prec), 1) \
            .mul(tower.var(1, 0))
    else:
        q = divide_by_variable_product(tower, m - 1, g)
        if q is None:
            raise PrecisionExhausted(
                "residual defect is not a product multiple at this precision",
                witness=g)
        correction = tower.include(q, m)
        for i in range(m):
            correction = correction.mul(tower.var(m, i))
    f = f.add(correction)
    for i in range(m + 1):
        if tower.face(m, i, f) != faces[i]:
            raise PrecisionExhausted(f"face {i} not matched after repair",
                                     witness=f)
    return f
