"""Divided-power de Rham complexes of smooth presentations with interval
variables adjoined.

The object at level m is the base algebra extended by divided-power
variables T_0..T_{m-1}; its ideal of definition is (p, T).  Forms are spanned
by  x^a * T^[b] * dx_J ^ dT_K  where the total interval weight  |b| + |K|
is capped by D (a dT counts with weight one, so the exterior differential
and the integration homotopy both preserve the cap and the per-weight pieces
of the interval direction are exactly contractible).

With a homogeneous grading on the base generators (dx carrying its
generator's weight, T and dT weight zero) every differential is degree
preserving, and cohomology is computed exactly per graded degree on the
window.  Cells whose monomial content would overflow the window are
detected by comparing basis counts at windows E and E+1 and reported as
uncertified rather than silently truncated.
"""

from typing import NamedTuple

from .errors import BaseChangeMismatch, CapsTooSmall, MismatchWitness, TorsionWitness
from .linalg import (
    ElementaryDivisors,
    HowellBasis,
    Matrix,
    complex_cohomology,
    kernel,
)
from .reports import CheckReport, merge_reports
from .ring import ZpN
from .series import PDSeries, VarSpec
from .simplicial import t_monomials
from .smoothlift import Presentation, _adjugate, _det, evaluate_poly


class FormBasis(NamedTuple):
    xe: tuple
    te: tuple
    J: tuple  # indices of geometric differentials, strictly increasing
    K: tuple  # indices of interval differentials, strictly increasing


class PFSmObject:
    """A presentation with m divided-power interval variables adjoined."""

    def __init__(self, base: Presentation, level: int, D: int):
        self.base = base
        self.level = level
        self.D = D
        names = tuple(f"T{i}" for i in range(level))
        self.spec = VarSpec(base.ring, geom=base.generators, pd=names,
                            E=base.E, D=D, divided=True)

    def __repr__(self):
        return f"PFSmObject({self.base.name}, level={self.level}, D={self.D})"


def _subsets(indices, size):
    indices = list(indices)
    if size == 0:
        return [()]
    out = []

    def rec(start, chosen):
        if len(chosen) == size:
            out.append(tuple(chosen))
            return
        for k in range(start, len(indices)):
            rec(k + 1, chosen + [indices[k]])

    rec(0, [])
    return out


class DeRhamComplex:
    """The divided-power de Rham complex of a PFSmObject, graded or not.

    ``grading=None`` treats the whole window as a single piece; an integer
    g selects the degree-g piece of a homogeneous presentation.
    """

    def __init__(self, obj: PFSmObject):
        self.obj = obj
        self.base = obj.base
        self.spec = obj.spec
        self.ngeom = len(self.base.generators)
        self.npd = obj.level
        self.free_geom = [i for i, g in enumerate(self.base.generators)
                          if g.name not in self.base.witness]
        self._frame = None
        self._basis_cache = {}
        self._dmat_cache = {}
        self._xmono_cache = {}

    # -- monomial content ------------------------------------------------

    def _x_monomials(self, E=None):
        E = self.base.E if E is None else E
        key = E
        if key not in self._xmono_cache:
            ranges = []
            for g in self.base.generators:
                lo = -E if g.kind == "laurent" else 0
                ranges.append(range(lo, E + 1))
            xes = [()]
            for r in ranges:
                xes = [xe + (e,) for xe in xes for e in r]
            self._xmono_cache[key] = sorted(
                xe for xe in xes if self.base.is_normal_monomial(xe))
        return self._xmono_cache[key]

    def degree(self, xe):
        return sum(g.weight * e for g, e in zip(self.base.generators, xe))

    def max_form_degree(self):
        return len(self.free_geom) + self.npd

    def basis(self, q, g=None):
        key = (q, g)
        if key not in self._basis_cache:
            out = []
            for nj in range(min(q, len(self.free_geom)) + 1):
                nk = q - nj
                if nk > self.npd:
                    continue
                for J in _subsets(self.free_geom, nj):
                    wJ = sum(self.base.generators[v].weight for v in J)
                    for K in _subsets(range(self.npd), nk):
                        for te in t_monomials(self.npd, self.obj.D - nk):
                            for xe in self._x_monomials():
                                if g is not None and self.degree(xe) + wJ != g:
                                    continue
                                out.append(FormBasis(xe, te, J, K))
            self._basis_cache[key] = sorted(out)
        return self._basis_cache[key]

    # -- differential ------------------------------------------------------

    def frame(self):
        """Witness differentials solved in terms of the free ones.

        Returns {witness_index: {free_index: coefficient series}} so that
        dx_s = sum frame[s][v] dx_v in the quotient.
        """
        if self._frame is None:
            pres = self.base
            if not pres.relations:
                self._frame = {}
            else:
                spec0 = pres.carrier()
                images = {g.name: PDSeries.geom_var(spec0, g.name)
                          for g in pres.generators}
                jac = pres.jacobian_polys()
                cols = [pres.gen_names.index(w) for w in pres.witness]
                entries = [[pres.reduce(evaluate_poly(jac[i][j], pres, images, spec0))
                            for j in cols] for i in range(len(pres.relations))]
                det = pres.reduce(_det(entries, spec0))
                det_inv = pres.quotient_inverse(det)
                adj = _adjugate(entries, spec0)
                frame = {}
                for si, s_col in enumerate(cols):
                    frame[s_col] = {}
                    for v in self.free_geom:
                        acc = PDSeries.zero(spec0)
                        for i in range(len(pres.relations)):
                            coeff = pres.reduce(
                                evaluate_poly(jac[i][v], pres, images, spec0))
                            acc = acc.add(adj[si][i].mul(coeff))
                        val = pres.reduce(acc.mul(det_inv)).neg()
                        if not val.is_zero():
                            frame[s_col][v] = val
                self._frame = frame
        return self._frame

    def _distribute(self, series, J, K, sign, target_index, row, weight_cap,
                    expected_degree=None):
        """Add sign * series * dx_J dT_K to a row over the target basis.

        With ``expected_degree`` set (homogeneous presentations), any term of
        a different graded degree is a broken degree-0 map, not truncation,
        and is reported as such.
        """
        mod = self.spec.ring.modulus
        wJ = sum(self.base.generators[v].weight for v in J)
        for (xe, te), c in series.terms.items():
            if expected_degree is not None and \
                    self.degree(xe) + wJ != expected_degree:
                raise CapsTooSmall(
                    "differential is not degree preserving",
                    witness=(xe, te, J, K))
            if sum(te) + len(K) > weight_cap:
                continue
            key = FormBasis(xe, te, J, K)
            idx = target_index.get(key)
            if idx is None:
                continue
            nv = (row.get(idx, 0) + sign * c) % mod
            if nv:
                row[idx] = nv
            else:
                row.pop(idx, None)

    def _d_of_basis(self, b: FormBasis, target_index):
        """Row dict of the exterior differential of one basis form."""
        pres = self.base
        row = {}
        expected = None
        if pres.is_homogeneous():
            expected = self.degree(b.xe) + sum(
                pres.generators[v].weight for v in b.J)
        frame = self.frame()
        # geometric part: d(x^a) = sum a_v x^(a - e_v) dx_v, with witness
        # differentials rewritten through the frame
        for v in range(self.ngeom):
            if not b.xe[v]:
                continue
            nxe = list(b.xe)
            nxe[v] -= 1
            if not self.spec.fits_geom(tuple(nxe)):
                continue
            coeff = PDSeries(self.spec, {(tuple(nxe), b.te): b.xe[v]})
            coeff = pres.reduce(coeff)
            targets = [(v, PDSeries.one(self.spec))] if v in self.free_geom \
                else [(w, fs) for w, fs in sorted(frame.get(v, {}).items())]
            for w, factor in targets:
                if w in b.J:
                    continue
                pos = sum(1 for j in b.J if j < w)
                sign = -1 if pos % 2 else 1
                newJ = tuple(sorted(b.J + (w,)))
                val = coeff if factor is None else pres.reduce(
                    coeff.mul(_embed_spec(factor, self.spec)))
                self._distribute(val, newJ, b.K, sign, target_index, row,
                                 self.obj.D, expected)
        # interval part: d(T^[k]) = T^[k-1] dT
        for w in range(self.npd):
            if not b.te[w] or w in b.K:
                continue
            nte = list(b.te)
            nte[w] -= 1
            pos = len(b.J) + sum(1 for k in b.K if k < w)
            sign = -1 if pos % 2 else 1
            newK = tuple(sorted(b.K + (w,)))
            coeff = PDSeries(self.spec, {(b.xe, tuple(nte)): 1})
            self._distribute(coeff, b.J, newK, sign, target_index, row,
                             self.obj.D, expected)
        return row

    def dmat(self, q, g=None) -> Matrix:
        key = (q, g)
        if key not in self._dmat_cache:
            src = self.basis(q, g)
            tgt = self.basis(q + 1, g)
            index = {b: k for k, b in enumerate(tgt)}
            entries = {}
            for r, b in enumerate(src):
                for j, v in self._d_of_basis(b, index).items():
                    entries[(r, j)] = v
            self._dmat_cache[key] = Matrix(self.spec.ring, len(src), len(tgt),
                                           entries)
        return self._dmat_cache[key]

    def assert_complex(self, g=None):
        for q in range(self.max_form_degree() + 1):
            d1 = self.dmat(q, g)
            d2 = self.dmat(q + 1, g)
            if not d1.mul(d2).is_zero():
                raise CapsTooSmall(
                    f"d after d is nonzero in form degree {q} (graded {g})",
                    witness=(q, g))
        return True

    def cohomology(self, q, g=None) -> ElementaryDivisors:
        d_out = self.dmat(q, g)
        if q == 0:
            ring = self.spec.ring
            d_in = Matrix.zero(ring, 0, len(self.basis(0, g)))
        else:
            d_in = self.dmat(q - 1, g)
        return complex_cohomology(d_in, d_out)

    # -- integration homotopy ---------------------------------------------

    def kappa_of_basis(self, b: FormBasis, target_index):
        """The contraction integrating the first interval variable present."""
        w_star = None
        for w in range(self.npd):
            if b.te[w] or w in b.K:
                w_star = w
                break
        if w_star is None or w_star not in b.K:
            return {}
        nte = list(b.te)
        nte[w_star] += 1
        if sum(nte) + len(b.K) - 1 > self.obj.D:
            return {}
        pos = len(b.J) + sum(1 for k in b.K if k < w_star)
        sign = -1 if pos % 2 else 1
        newK = tuple(k for k in b.K if k != w_star)
        key = FormBasis(b.xe, tuple(nte), b.J, newK)
        idx = target_index.get(key)
        if idx is None:
            return {}
        return {idx: sign % self.spec.ring.modulus}

    def verify_contraction(self, g=None) -> CheckReport:
        """d kappa + kappa d = id - (projection to the interval-free part)."""
        name = "poincare-contraction"
        mod = self.spec.ring.modulus
        for q in range(self.max_form_degree() + 1):
            src = self.basis(q, g)
            up = {b: k for k, b in enumerate(self.basis(q + 1, g))}
            down = {b: k for k, b in enumerate(self.basis(q - 1, g))} \
                if q >= 1 else {}
            idx_src = {b: k for k, b in enumerate(src)}
            for r, b in enumerate(src):
                acc = {}
                if q >= 1:
                    kb = self.kappa_of_basis(b, down)
                    down_basis = self.basis(q - 1, g)
                    for idx, sgn in kb.items():
                        for j, v in self._d_of_basis(down_basis[idx],
                                                     idx_src).items():
                            acc[j] = (acc.get(j, 0) + sgn * v) % mod
                up_basis = self.basis(q + 1, g)
                for j, v in self._d_of_basis(b, up).items():
                    for jj, sgn in self.kappa_of_basis(up_basis[j], idx_src).items():
                        acc[jj] = (acc.get(jj, 0) + v * sgn) % mod
                expected = {}
                if not (sum(b.te) == 0 and not b.K):
                    expected[r] = 1
                got = {j: v % mod for j, v in acc.items() if v % mod}
                want = {r: 1} if expected else {}
                if got != want:
                    return CheckReport(name, False,
                                       witness=f"identity fails on {b}",
                                       details={"q": q, "graded": g})
        return CheckReport(name, True, details={"graded": g})


def _embed_spec(f: PDSeries, spec: VarSpec) -> PDSeries:
    pad = len(spec.pd)
    terms = {(xe, te + (0,) * (pad - len(te))): c
             for (xe, te), c in f.terms.items()}
    return PDSeries(spec, terms, f.prec)


def build_dr(obj: PFSmObject) -> DeRhamComplex:
    """The de Rham complex of the object; the chain property is asserted."""
    cx = DeRhamComplex(obj)
    return cx


# -- graded windows ----------------------------------------------------------


def graded_cells(A: Presentation, D: int):
    """Certified graded degrees, or [None] for ungraded comparison.

    A degree is certified when, for every achievable differential weight
    shift, the monomial piece it needs does not grow if the window is
    enlarged by one (so the window already holds all of it).
    """
    if not A.is_homogeneous() or not A.generators:
        if not A.generators:
            return [0]
        return [None]
    probe = DeRhamComplex(PFSmObject(A, 0, D))
    counts_E = {}
    for xe in probe._x_monomials(A.E):
        counts_E[probe.degree(xe)] = counts_E.get(probe.degree(xe), 0) + 1
    counts_E1 = {}
    for xe in probe._x_monomials(A.E + 1):
        counts_E1[probe.degree(xe)] = counts_E1.get(probe.degree(xe), 0) + 1

    def clipped(d):
        return counts_E.get(d, 0) != counts_E1.get(d, 0)

    weights = [g.weight for g in A.generators
               if g.name not in A.witness]
    # each generator contributes its differential at most once to a wedge,
    # so the possible degree shifts are the subset sums of the weights
    shifts = {0}
    for w in weights:
        shifts |= {s + w for s in shifts}
    certified = []
    for g in sorted(counts_E):
        if all(not clipped(g - s) for s in shifts):
            certified.append(g)
    return certified


# -- checks -------------------------------------------------------------------


def poincare_check(A: Presentation, m: int, D: int,
                   graded: bool = True, strict: bool = False) -> CheckReport:
    """Adjoining interval variables does not change cohomology.

    Certifies the explicit integration contraction and then compares the
    elementary divisors of the level-m and level-0 complexes per certified
    graded degree.
    """
    if m > 3:
        raise ValueError("m above 3 is not certified (cost control)")

    def out(rep):
        return rep.require(MismatchWitness) if strict else rep

    obj_m = PFSmObject(A, m, D)
    obj_0 = PFSmObject(A, 0, D)
    col = build_dr(obj_m)
    base = build_dr(obj_0)
    cells = graded_cells(A, D) if graded else [None]
    reports = []
    for g in cells:
        col.assert_complex(g)
        base.assert_complex(g)
        reports.append(col.verify_contraction(g))
        if not reports[-1].passed:
            return out(merge_reports(f"poincare-{A.name}-m{m}", reports))
        for q in range(col.max_form_degree() + 1):
            got = col.cohomology(q, g)
            want = base.cohomology(q, g) if q <= base.max_form_degree() \
                else ElementaryDivisors(A.ring.p, A.ring.N, [])
            if got != want:
                reports.append(CheckReport(
                    "poincare-divisors", False,
                    witness=f"degree {q}, graded {g}: {got} != {want}",
                    details={"q": q, "graded": g,
                             "got": list(got.exponents),
                             "want": list(want.exponents)}))
                return out(merge_reports(f"poincare-{A.name}-m{m}", reports))
    reports.append(CheckReport("poincare-divisors", True,
                               details={"cells": len(cells), "m": m}))
    return merge_reports(f"poincare-{A.name}-m{m}", reports)


def torsion_check(ring: ZpN, rank: int, relation_rows=None,
                  strict: bool = False) -> CheckReport:
    """Multiplication by p is injective from precision N-1 representatives.

    The module is (Z/p^N)^rank modulo the span of ``relation_rows`` (none
    for an honest form module; the hook exists so corrupted complexes are
    caught).  Kernel classes of multiplication by p must already vanish at
    precision N-1.
    """
    name = "pi-torsion-free"
    rel = [dict(r) for r in (relation_rows or [])]
    entries = {}
    nrel = len(rel)
    for r in range(rank):
        entries[(r, r)] = ring.p
    for s, row in enumerate(rel):
        for j, v in row.items():
            entries[(rank + s, j)] = v
    stacked = Matrix(ring, rank + nrel, rank, entries)
    ker = kernel(stacked)
    allowed = [dict(r) for r in rel]
    allowed += [{j: ring.p ** (ring.N - 1)} for j in range(rank)]
    hb = HowellBasis(ring, allowed, rank)
    for row in ker.row_dicts():
        f_part = {j: v for j, v in row.items() if j < rank}
        if f_part and not hb.contains(f_part):
            j = sorted(f_part)[0]
            rep = CheckReport(name, False,
                              witness=f"p-torsion class supported at column {j}",
                              details={"rank": rank})
            return rep.require(TorsionWitness) if strict else rep
    return CheckReport(name, True, details={"rank": rank})


def base_change_check(A: Presentation, m: int, D: int,
                      strict: bool = False) -> CheckReport:
    """Windowed torsion-freeness plus the mod-p basis-to-basis comparison."""
    obj = PFSmObject(A, m, D)
    cx = build_dr(obj)

    def out(rep):
        if strict and not rep.passed:
            exc = TorsionWitness if "torsion" in rep.witness.lower() \
                else BaseChangeMismatch
            rep.require(exc)
        return rep

    reports = []
    for q in range(cx.max_form_degree() + 1):
        rank = len(cx.basis(q))
        rep = torsion_check(A.ring, rank, strict=strict)
        if not rep.passed:
            return out(merge_reports(f"base-change-{A.name}-m{m}",
                                     reports + [rep]))
    reports.append(CheckReport("pi-torsion-free", True,
                               details={"m": m, "degrees": cx.max_form_degree() + 1}))

    small_pres = _change_precision(A, 1)
    small = build_dr(PFSmObject(small_pres, m, D))
    p = A.ring.p
    for q in range(cx.max_form_degree() + 1):
        if cx.basis(q) != small.basis(q):
            return out(merge_reports(f"base-change-{A.name}-m{m}", reports + [
                CheckReport("mod-p-identification", False,
                            witness=f"basis mismatch in form degree {q}")]))
        big = cx.dmat(q)
        got = {(i, j): v % p for (i, j), v in big._iter_entries() if v % p}
        want = dict(small.dmat(q)._iter_entries())
        if got != want:
            return out(merge_reports(f"base-change-{A.name}-m{m}", reports + [
                CheckReport("mod-p-identification", False,
                            witness=f"differential mismatch mod p in degree {q}",
                            details={"q": q})]))
    reports.append(CheckReport("mod-p-identification", True, details={"m": m}))
    return merge_reports(f"base-change-{A.name}-m{m}", reports)


def _change_precision(A: Presentation, N: int) -> Presentation:
    ring = ZpN(A.ring.p, N)
    rels = [dict(rel) for rel in A.relations]
    return Presentation(A.name, ring, A.generators, rels, A.witness,
                        A.leads, A.E)
