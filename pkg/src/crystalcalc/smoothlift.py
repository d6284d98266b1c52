"""Presentations of smooth algebras and their lifts across p-power precision.

A presentation is standard smooth: free generators (polynomial or Laurent),
finitely many polynomial relations, and a witness subset of generators whose
Jacobian minor is invertible in the quotient.  Tier 1 (no relations) covers
the free and Laurent coordinate rings; Tier 2 adds hypersurface/complete
intersection quotients whose monomial normal form is described by explicit
rewrite rules supplied with the presentation.

Morphisms store generator images in the target's carrier, possibly extended
by interval variables T_0..T_{m-1} (an m-simplex of the mapping space).
Lifting and filling are Newton iterations driven by the witness minor; the
corrections vanish on faces, so boundary data is preserved exactly.
"""

from .errors import (
    IncompatibleFaces,
    NewtonStall,
    NotCongruent,
    NotInvertible,
    PrecisionExhausted,
    WitnessNotInvertible,
)
from .linalg import Matrix, solve_in_rowspace
from .ring import ZpN
from .series import GeomVar, PDSeries, VarSpec, pd_substitute
from .simplicial import LevelTower, fill_boundary, t_monomials


class RewriteRule:
    """Rewrite any monomial divisible by ``lead`` using a relation.

    The relation is solved for its lead monomial: lead -> replacement, where
    the lead coefficient is a unit.  Termination holds because replacement
    monomials carry strictly smaller total degree in the lead's variables.
    """

    __slots__ = ("lead", "replacement")

    def __init__(self, lead, replacement):
        self.lead = tuple(lead)
        self.replacement = dict(replacement)
        lead_deg = sum(self.lead)
        for xe in self.replacement:
            deg = sum(e for e, l in zip(xe, self.lead) if l > 0)
            if deg >= lead_deg:
                raise ValueError("replacement does not decrease the lead degree")

    def applies(self, xe):
        return all(e >= l for e, l in zip(xe, self.lead))

    @classmethod
    def from_relation(cls, rel: dict, lead, ring: ZpN):
        lead = tuple(lead)
        c_lead = rel.get(lead, 0)
        if c_lead % ring.p == 0:
            raise ValueError("lead coefficient must be a unit")
        inv = ring.unit_inverse(c_lead)
        replacement = {xe: (-inv * c) % ring.modulus
                       for xe, c in rel.items() if xe != lead}
        return cls(lead, replacement)


class Presentation:
    """A standard-smooth algebra with carrier window E.

    ``leads`` designates, for each relation, the monomial it is solved for;
    the induced rewrite rules give the quotient's monomial normal form (and
    stay consistent with the relations at every precision).  Tier 1 algebras
    have no relations and need no leads.
    """

    def __init__(self, name, ring: ZpN, generators=(), relations=(),
                 witness=(), leads=(), E=6):
        self.name = name
        self.ring = ring
        self.generators = tuple(GeomVar(*g) if not isinstance(g, GeomVar) else g
                                for g in generators)
        self.gen_names = tuple(g.name for g in self.generators)
        self.relations = tuple({tuple(xe): c % ring.modulus
                                for xe, c in rel.items() if c % ring.modulus}
                               for rel in relations)
        self.witness = tuple(witness)
        self.leads = tuple(tuple(l) for l in leads)
        self.E = E
        if len(self.witness) != len(self.relations):
            raise ValueError("witness must pick one generator per relation")
        if self.relations and len(self.leads) != len(self.relations):
            raise ValueError("each relation needs a lead monomial")
        for w in self.witness:
            if w not in self.gen_names:
                raise ValueError(f"witness generator {w} not present")
        self.rewrites = tuple(
            RewriteRule.from_relation(rel, lead, ring)
            for rel, lead in zip(self.relations, self.leads))

    def __repr__(self):
        return f"Presentation({self.name}, p={self.ring.p}, N={self.ring.N})"

    # -- carriers -------------------------------------------------------

    def carrier(self, D=0, level=0) -> VarSpec:
        names = tuple(f"T{i}" for i in range(level))
        return VarSpec(self.ring, geom=self.generators, pd=names,
                       E=self.E, D=D, divided=False)

    def mapping_tower(self, D) -> LevelTower:
        return LevelTower(self.ring, D, geom=self.generators, E=self.E,
                          divided=False, variant="interval")

    def relation_series(self, idx, spec) -> PDSeries:
        zero_t = spec.zero_t()
        return PDSeries(spec, {(xe, zero_t): c
                               for xe, c in self.relations[idx].items()})

    # -- quotient normal form --------------------------------------------

    def is_normal_monomial(self, xe) -> bool:
        return not any(r.applies(xe) for r in self.rewrites)

    def reduce(self, f: PDSeries) -> PDSeries:
        """Rewrite every monomial of f to quotient normal form."""
        if not self.rewrites:
            return f
        spec = f.spec
        mod = spec.ring.p ** f.prec
        pending = dict(f.terms)
        out = {}
        guard = 0
        while pending:
            guard += 1
            if guard > 200000:
                raise RuntimeError("rewrite loop did not terminate")
            (xe, te), c = pending.popitem()
            rule = next((r for r in self.rewrites if r.applies(xe)), None)
            if rule is None:
                nv = (out.get((xe, te), 0) + c) % mod
                if nv:
                    out[(xe, te)] = nv
                else:
                    out.pop((xe, te), None)
                continue
            new_xe = [e - l for e, l in zip(xe, rule.lead)]
            for rep_xe, rep_c in rule.replacement.items():
                comb = tuple(a + b for a, b in zip(new_xe, rep_xe))
                if not spec.fits_geom(comb):
                    continue
                key = (comb, te)
                nv = (pending.get(key, 0) + c * rep_c) % mod
                if nv:
                    pending[key] = nv
                else:
                    pending.pop(key, None)
        return PDSeries(spec, out, f.prec)

    def quotient_basis(self, spec):
        """Normal-form monomials of the carrier, T-part included."""
        ranges = []
        for g in self.generators:
            lo = -spec.E if g.kind == "laurent" else 0
            ranges.append(range(lo, spec.E + 1))
        xes = [()]
        for r in ranges:
            xes = [xe + (e,) for xe in xes for e in r]
        xes = [xe for xe in xes if self.is_normal_monomial(xe)]
        tes = t_monomials(len(spec.pd), spec.D)
        return sorted((xe, te) for xe in xes for te in tes)

    def quotient_inverse(self, f: PDSeries) -> PDSeries:
        """Inverse of f in the windowed quotient, via a linear solve."""
        try:
            return self.reduce(f.inverse())
        except NotInvertible:
            pass
        spec = f.spec
        basis = self.quotient_basis(spec)
        index = {b: k for k, b in enumerate(basis)}
        rows = []
        for (xe, te) in basis:
            mono = PDSeries(spec, {(xe, te): 1}, f.prec)
            img = self.reduce(f.mul(mono))
            row = {}
            for key, c in img.terms.items():
                if key in index:
                    row[index[key]] = c
            rows.append(row)
        M = Matrix.from_row_dicts(self.ring, rows, len(basis))
        target = {index[(spec.zero_x(), spec.zero_t())]: 1}
        x = solve_in_rowspace(M, target)
        if x is None:
            raise NotInvertible("element is not a unit in the windowed quotient",
                                witness=f)
        terms = {basis[k]: v for k, v in x.items()}
        return PDSeries(spec, terms, f.prec)

    # -- witness ---------------------------------------------------------

    def jacobian_polys(self):
        """d(relation_i)/d(generator_j) as raw polynomial dicts."""
        out = []
        for rel in self.relations:
            row = []
            for j, _g in enumerate(self.generators):
                d = {}
                for xe, c in rel.items():
                    if xe[j]:
                        nxe = list(xe)
                        nxe[j] -= 1
                        d[tuple(nxe)] = d.get(tuple(nxe), 0) + c * xe[j]
                row.append({k: v % self.ring.modulus for k, v in d.items()
                            if v % self.ring.modulus})
            out.append(row)
        return out

    def witness_determinant(self, spec, images=None) -> PDSeries:
        """det of the witness minor of the Jacobian, evaluated at images."""
        c = len(self.relations)
        if c == 0:
            return PDSeries.one(spec)
        if images is None:
            images = {g.name: PDSeries.geom_var(spec, g.name)
                      for g in self.generators}
        cols = [self.gen_names.index(w) for w in self.witness]
        jac = self.jacobian_polys()
        entries = [[evaluate_poly(jac[i][j], self, images, spec)
                    for j in cols] for i in range(c)]
        return self.reduce(_det(entries, spec))

    def check_witness(self):
        """The witness minor must be a unit in the mod-p quotient."""
        small = reduce_presentation(self)
        spec = small.carrier()
        det = small.witness_determinant(spec)
        try:
            small.quotient_inverse(det)
        except NotInvertible as exc:
            raise WitnessNotInvertible(
                f"witness minor of {self.name} is not invertible mod p",
                witness=det) from exc
        return True

    def is_homogeneous(self):
        for rel in self.relations:
            degs = {sum(g.weight * e for g, e in zip(self.generators, xe))
                    for xe in rel}
            if len(degs) > 1:
                return False
        return True


def _det(entries, spec):
    n = len(entries)
    if n == 0:
        return PDSeries.one(spec)
    if n == 1:
        return entries[0][0]
    if n == 2:
        return entries[0][0].mul(entries[1][1]).sub(
            entries[0][1].mul(entries[1][0]))
    acc = PDSeries.zero(spec)
    for j in range(n):
        minor = [[entries[r][c] for c in range(n) if c != j]
                 for r in range(1, n)]
        term = entries[0][j].mul(_det(minor, spec))
        acc = acc.add(term) if j % 2 == 0 else acc.sub(term)
    return acc


def _adjugate(entries, spec):
    n = len(entries)
    if n == 1:
        return [[PDSeries.one(spec)]]
    adj = [[None] * n for _ in range(n)]
    for i in range(n):
        for j in range(n):
            minor = [[entries[r][c] for c in range(n) if c != j]
                     for r in range(n) if r != i]
            cof = _det(minor, spec)
            if (i + j) % 2:
                cof = cof.neg()
            adj[j][i] = cof
    return adj


def evaluate_poly(poly: dict, pres: Presentation, images: dict, spec) -> PDSeries:
    """Evaluate a raw polynomial at generator images inside spec."""
    prec = min([img.prec for img in images.values()] or [spec.ring.N])
    out = PDSeries.zero(spec, prec)
    pow_cache = {}

    def gen_power(name, e):
        key = (name, e)
        if key not in pow_cache:
            base = images[name]
            if e >= 0:
                val = base.power(e)
            else:
                try:
                    inv = base.inverse()
                except NotInvertible:
                    inv = pres.quotient_inverse(base)
                val = inv.power(-e)
            pow_cache[key] = pres.reduce(val)
        return pow_cache[key]

    for xe, c in sorted(poly.items()):
        term = PDSeries.constant(spec, c, prec)
        for name, e in zip(pres.gen_names, xe):
            if e:
                term = term.mul(gen_power(name, e))
        out = out.add(term)
    return pres.reduce(out)


def reduce_presentation(A: Presentation) -> Presentation:
    """The same presentation with coefficients reduced mod p."""
    small = ZpN(A.ring.p, 1)
    rels = [{xe: c % small.p for xe, c in rel.items() if c % small.p}
            for rel in A.relations]
    return Presentation(A.name, small, A.generators, rels, A.witness,
                        A.leads, A.E)


def lift_algebra(Abar: Presentation, N: int) -> Presentation:
    """Lift a mod-p presentation to precision N, coefficients verbatim.

    Any coefficient lift presents a formally smooth algebra; the verbatim one
    is canonical.  Rewrite rules are re-derived from the lifted relations, so
    quotient and relations agree at the new precision.  The witness minor
    stays a unit because unitality only depends on the reduction mod p.
    """
    if Abar.ring.N != 1:
        raise ValueError("lift_algebra expects a mod-p presentation")
    ring = ZpN(Abar.ring.p, N)
    lifted = Presentation(Abar.name, ring, Abar.generators,
                          [dict(rel) for rel in Abar.relations],
                          Abar.witness, Abar.leads, Abar.E)
    lifted.check_witness()
    return lifted


class Morphism:
    """Generator images in the target carrier at simplicial level m."""

    def __init__(self, source: Presentation, target: Presentation,
                 images: dict, level: int = 0, D: int = 0, prec=None,
                 validate: bool = True):
        if source.ring != target.ring:
            raise ValueError("source and target live over different rings")
        self.source = source
        self.target = target
        self.level = level
        self.D = D
        self.spec = target.carrier(D=D, level=level)
        self.images = {}
        for g in source.generators:
            if g.name not in images:
                raise ValueError(f"missing image for generator {g.name}")
            img = images[g.name]
            if img.spec != self.spec:
                raise ValueError(f"image of {g.name} lives in the wrong carrier")
            self.images[g.name] = img
        self.prec = min([img.prec for img in self.images.values()]
                        + ([prec] if prec is not None else [source.ring.N]))
        if validate:
            self.validate()

    def __eq__(self, other):
        if not isinstance(other, Morphism):
            return NotImplemented
        return (self.source.name == other.source.name
                and self.target.name == other.target.name
                and self.level == other.level
                and self.prec == other.prec
                and self.images == other.images)

    def __repr__(self):
        ims = ", ".join(f"{n} -> {s}" for n, s in sorted(self.images.items()))
        return f"Morphism(level={self.level}, {ims})"

    def validate(self):
        """Every source relation must map to zero within precision and caps."""
        for idx in range(len(self.source.relations)):
            val = evaluate_poly(self.source.relations[idx], self.target,
                                self.images, self.spec)
            val = self.target.reduce(val)
            if not val.reduce_precision(self.prec).is_zero():
                raise PrecisionExhausted(
                    f"relation {idx} of {self.source.name} not preserved",
                    witness=val)
        for g in self.source.generators:
            if g.kind == "laurent":
                self.target.quotient_inverse(self.images[g.name])
        return self

    def residuals(self):
        return [self.target.reduce(
                    evaluate_poly(rel, self.target, self.images, self.spec))
                for rel in self.source.relations]

    def face(self, i) -> "Morphism":
        tower = self.target.mapping_tower(self.D)
        images = {n: tower.face(self.level, i, img)
                  for n, img in self.images.items()}
        return Morphism(self.source, self.target, images,
                        level=self.level - 1, D=self.D, prec=self.prec,
                        validate=False)

    def degeneracy(self, i, D=None) -> "Morphism":
        D = self.D if D is None else D
        tower = self.target.mapping_tower(D)
        images = {n: tower.include(img, self.level)
                  if img.spec != tower.spec(self.level) else img
                  for n, img in self.images.items()}
        images = {n: tower.degeneracy(self.level, i, img)
                  for n, img in images.items()}
        return Morphism(self.source, self.target, images,
                        level=self.level + 1, D=D, prec=self.prec,
                        validate=False)

    def reduction(self) -> dict:
        """Images modulo (p, T): the underlying mod-p morphism data."""
        tower = self.target.mapping_tower(self.D)
        return {n: tower.reduction(self.level, img)
                for n, img in sorted(self.images.items())}

    def evaluate_interval(self, value: int) -> "Morphism":
        """Specialize a 1-simplex at T = value (value must be 0 or p-like)."""
        if self.level != 1:
            raise ValueError("interval evaluation needs a level-1 morphism")
        target_spec = self.target.carrier(D=self.D, level=0)
        const = PDSeries.constant(target_spec, value, self.prec)
        images = {n: pd_substitute(img, {"T0": const}, target_spec)
                  for n, img in self.images.items()}
        return Morphism(self.source, self.target, images, level=0,
                        D=self.D, prec=self.prec, validate=False)


def newton_correct(phi: Morphism, max_steps=None) -> Morphism:
    """Drive the relation residuals of phi to zero by witness-minor Newton.

    Corrections are multiples of the current residuals, so they vanish
    wherever the residuals do (mod p, on every interval face); boundary data
    survives the iteration exactly.
    """
    src, tgt = phi.source, phi.target
    c = len(src.relations)
    if c == 0:
        return phi
    spec = phi.spec
    cols = [src.gen_names.index(w) for w in src.witness]
    jac = src.jacobian_polys()
    images = dict(phi.images)
    steps = max_steps if max_steps is not None else \
        (tgt.ring.N.bit_length() + phi.D + 4)

    def residuals(imgs):
        return [tgt.reduce(evaluate_poly(src.relations[i], tgt, imgs, spec))
                for i in range(c)]

    def order(series_list):
        # combined p-adic plus T-adic order; caps count as fully converged
        best = None
        for s in series_list:
            for (xe, te), coeff in s.terms.items():
                o = tgt.ring.val(coeff) + sum(te)
                best = o if best is None else min(best, o)
        return best

    res = residuals(images)
    prev_order = order(res)
    for _ in range(steps):
        if all(r.is_zero() for r in res):
            return Morphism(src, tgt, images, level=phi.level, D=phi.D,
                            prec=phi.prec)
        entries = [[tgt.reduce(evaluate_poly(jac[i][j], tgt, images, spec))
                    for j in cols] for i in range(c)]
        det = tgt.reduce(_det(entries, spec))
        det_inv = tgt.quotient_inverse(det)
        adj = _adjugate(entries, spec)
        deltas = []
        for j in range(c):
            acc = PDSeries.zero(spec, phi.prec)
            for i in range(c):
                acc = acc.add(adj[j][i].mul(res[i]))
            deltas.append(tgt.reduce(acc.mul(det_inv)).neg())
        for j, col in enumerate(cols):
            name = src.gen_names[col]
            images[name] = images[name].add(deltas[j])
        res = residuals(images)
        new_order = order(res)
        if new_order is not None and prev_order is not None \
                and new_order <= prev_order:
            raise NewtonStall(
                "residual order did not improve; witness data is inconsistent",
                witness=res)
        prev_order = new_order
    raise NewtonStall("iteration budget exhausted", witness=res)


def lift_morphism(phibar_images: dict, A: Presentation, B: Presentation,
                  seeds: dict = None) -> Morphism:
    """Lift a mod-p morphism to full precision by Newton iteration.

    ``phibar_images`` give the mod-p generator images (series over B's mod-p
    carrier).  Seeds, when given, are full-precision starting images and must
    reduce to the mod-p data; by default coefficients lift verbatim.
    """
    spec = B.carrier()
    if seeds is None:
        images = {}
        for name, img in phibar_images.items():
            images[name] = PDSeries(spec, dict(img.terms))
    else:
        images = dict(seeds)
    start = Morphism(A, B, images, level=0, validate=False)
    small = reduce_presentation(B)
    small_spec = small.carrier()
    for name, img in phibar_images.items():
        got = start.images[name].change_ring(small.ring)
        want = PDSeries(small_spec, dict(img.terms), 1)
        if got != want:
            raise NotCongruent(f"seed for {name} does not reduce to the "
                               f"mod-p morphism", witness=name)
    lifted = newton_correct(start)
    return lifted.validate()


class Homotopy(Morphism):
    """A 1-simplex of the mapping space, with endpoint accessors."""

    @property
    def at_zero(self) -> Morphism:
        return self.evaluate_interval(0)

    @property
    def at_pi(self) -> Morphism:
        return self.evaluate_interval(self.target.ring.p)


def build_homotopy(phi1: Morphism, phi2: Morphism, D: int) -> Homotopy:
    """An interval morphism restricting to phi1 at T = 0 and phi2 at T = p.

    The first-order interpolation phi1 + T*(phi2 - phi1)/p is already exact
    on both endpoints; for relation-bearing sources it is then Newton
    corrected, which leaves the endpoints untouched.
    """
    if phi1.source is not phi2.source or phi1.target is not phi2.target:
        if (phi1.source.name, phi1.target.name) != (phi2.source.name,
                                                    phi2.target.name):
            raise ValueError("homotopy endpoints must be parallel morphisms")
    src, tgt = phi1.source, phi1.target
    p = tgt.ring.p
    if phi1.reduction() != phi2.reduction():
        raise NotCongruent("endpoint morphisms differ mod p",
                           witness=(phi1, phi2))
    spec1 = tgt.carrier(D=D, level=1)
    T = PDSeries.pd_var(spec1, "T0")
    images = {}
    for name in sorted(phi1.images):
        a = phi1.images[name]
        b = phi2.images[name]
        slope = b.sub(a).divide_exact(p).lift_precision(a.prec)
        images[name] = _embed_level0(a, spec1).add(
            _embed_level0(slope, spec1).mul(T))
    h = Homotopy(src, tgt, images, level=1, D=D, prec=phi1.prec,
                 validate=False)
    if src.relations:
        corrected = newton_correct(h)
        h = Homotopy(src, tgt, corrected.images, level=1, D=D,
                     prec=corrected.prec, validate=False)
    h.validate()
    for name in sorted(phi1.images):
        if h.at_zero.images[name] != phi1.images[name]:
            raise PrecisionExhausted(f"endpoint T=0 mismatch on {name}",
                                     witness=name)
        if h.at_pi.images[name] != phi2.images[name]:
            raise PrecisionExhausted(f"endpoint T=p mismatch on {name}",
                                     witness=name)
    return h


def _embed_level0(f: PDSeries, spec1: VarSpec) -> PDSeries:
    terms = {(xe, (0,)): c for (xe, _te), c in f.terms.items()}
    return PDSeries(spec1, terms, f.prec)


def fill_mapping_boundary(m: int, faces, base: dict, D: int) -> Morphism:
    """An m-simplex of the mapping space with the given boundary.

    ``faces`` are m+1 compatible (m-1)-simplices, ``base`` the common mod-p
    reduction (a dict of reduction series).  Generator images are filled
    additively; relation-bearing sources are then Newton corrected through
    the interval layers, which fixes the boundary pointwise.
    """
    if m < 1 or m > 3:
        raise ValueError("mapping fillers are certified for m in 1..3")
    if len(faces) != m + 1:
        raise IncompatibleFaces(f"expected {m+1} faces, got {len(faces)}")
    first = faces[0]
    src, tgt = first.source, first.target
    if m >= 2:
        for j in range(m + 1):
            for i in range(j):
                if faces[j].face(i).images != faces[i].face(j - 1).images:
                    raise IncompatibleFaces(
                        f"faces {i} and {j} are not simplicially compatible",
                        witness=(i, j))
    for i, fc in enumerate(faces):
        if fc.reduction() != base:
            raise IncompatibleFaces(
                f"face {i} does not reduce to the base morphism", witness=i)
    tower = tgt.mapping_tower(D)
    images = {}
    for name in sorted(first.images):
        face_elts = [fc.images[name] for fc in faces]
        images[name] = fill_boundary(tower, m, face_elts, base[name])
    filler = Morphism(src, tgt, images, level=m, D=D, prec=first.prec,
                      validate=False)
    if src.relations:
        filler = newton_correct(filler)
    filler.validate()
    for i in range(m + 1):
        if filler.face(i).images != faces[i].images:
            raise PrecisionExhausted(f"face {i} not matched by the filler",
                                     witness=i)
    return filler


# -- catalog --------------------------------------------------------------


def catalog(name: str, ring: ZpN, E: int = 6) -> Presentation:
    """Built-in algebras: point, a1, gm, and the sample hypersurface."""
    if name == "point":
        return Presentation("point", ring, (), E=E)
    if name == "a1":
        return Presentation("a1", ring, (GeomVar("x", "poly", 1),), E=E)
    if name == "gm":
        return Presentation("gm", ring, (GeomVar("x", "laurent", 1),), E=E)
    if name == "ell-3-1-2":
        if ring.p != 3:
            raise ValueError("the sample hypersurface is defined over p = 3")
        # y^2 = x^3 + x + 2; the x-partial -(3x^2+1) is a unit everywhere
        rel = {(0, 2): 1, (3, 0): -1, (1, 0): -1, (0, 0): -2}
        pres = Presentation(
            "ell-3-1-2", ring,
            (GeomVar("x", "poly", 1), GeomVar("y", "poly", 1)),
            relations=[rel], witness=("x",), leads=[(0, 2)], E=E)
        pres.check_witness()
        return pres
    raise KeyError(f"unknown catalog algebra {name!r}")


def unit_pair_presentation(ring: ZpN, E: int = 6) -> Presentation:
    """The two-generator torus presentation x*y = 1 (used in tests)."""
    pres = Presentation(
        "gm-pair", ring,
        (GeomVar("x", "poly", 1), GeomVar("y", "poly", -1)),
        relations=[{(1, 1): 1, (0, 0): -1}], witness=("y",),
        leads=[(1, 1)], E=E)
    pres.check_witness()
    return pres
