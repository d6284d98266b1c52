"""Lifting, homotopies and mapping-space fillers on the catalog algebras."""

import random

import pytest

from crystalcalc.errors import (
    IncompatibleFaces,
    NotCongruent,
    WitnessNotInvertible,
)
from crystalcalc.ring import ZpN
from crystalcalc.series import PDSeries
from crystalcalc.smoothlift import (
    Homotopy,
    Morphism,
    Presentation,
    build_homotopy,
    catalog,
    fill_mapping_boundary,
    lift_algebra,
    lift_morphism,
    reduce_presentation,
    unit_pair_presentation,
)


R33 = ZpN(3, 3)


def identity_morphism(A, D=0, level=0):
    spec = A.carrier(D=D, level=level)
    images = {g.name: PDSeries.geom_var(spec, g.name) for g in A.generators}
    return Morphism(A, A, images, level=level, D=D)


# -- lifting algebras -----------------------------------------------------


def test_lift_free_algebra():
    Abar = catalog("a1", ZpN(3, 1))
    A = lift_algebra(Abar, 3)
    assert A.ring.N == 3
    assert not A.relations


def test_lift_unit_pair():
    # coefficients lift verbatim: -1 mod 5 stays the residue 4
    Abar = unit_pair_presentation(ZpN(5, 1))
    A = lift_algebra(Abar, 2)
    assert A.relations[0] == {(1, 1): 1, (0, 0): 4}
    # quotient rewrite derived from the lifted relation: x*y = -4 = 21
    spec = A.carrier()
    x = PDSeries.geom_var(spec, "x")
    y = PDSeries.geom_var(spec, "y")
    assert A.reduce(x.mul(y)) == PDSeries.constant(spec, 21)


def test_lift_hypersurface_verbatim():
    Abar = catalog("ell-3-1-2", ZpN(3, 1))
    A = lift_algebra(Abar, 3)
    # same residues, now read mod 27
    assert A.relations[0][(0, 2)] == 1
    assert A.relations[0][(3, 0)] == 2
    # the relation itself reduces to zero in the lifted quotient
    spec = A.carrier()
    assert A.reduce(A.relation_series(0, spec)).is_zero()


def test_witness_failure_detected():
    ring = ZpN(3, 1)
    # relation y^2 - x with witness y: the minor 2y is a zero divisor
    with pytest.raises(WitnessNotInvertible):
        Presentation("bad", ring,
                     (("x", "poly", 1), ("y", "poly", 1)),
                     relations=[{(0, 2): 1, (1, 0): -1}],
                     witness=("y",), leads=[(0, 2)],
                     E=5).check_witness()


# -- quotient arithmetic ---------------------------------------------------


def test_unit_pair_reduce():
    A = unit_pair_presentation(R33)
    spec = A.carrier()
    x = PDSeries.geom_var(spec, "x")
    y = PDSeries.geom_var(spec, "y")
    assert A.reduce(x.mul(y)) == PDSeries.one(spec)
    assert A.reduce(x.power(2).mul(y)) == x


def test_quotient_inverse_of_generator():
    A = unit_pair_presentation(R33)
    spec = A.carrier()
    x = PDSeries.geom_var(spec, "x")
    inv = A.quotient_inverse(x)
    assert A.reduce(inv.mul(x)) == PDSeries.one(spec)
    assert inv == PDSeries.geom_var(spec, "y")


def test_ell_reduce_power():
    A = catalog("ell-3-1-2", R33)
    spec = A.carrier()
    y = PDSeries.geom_var(spec, "y")
    red = A.reduce(y.power(2))
    x = PDSeries.geom_var(spec, "x")
    expected = x.power(3).add(x).add(PDSeries.constant(spec, 2))
    assert red == expected


# -- lifting morphisms -----------------------------------------------------


def test_lift_identity_on_gm():
    A = catalog("gm", R33)
    Abar = reduce_presentation(A)
    spec1 = Abar.carrier()
    phibar = {"x": PDSeries.geom_var(spec1, "x")}
    phi = lift_morphism(phibar, A, A)
    assert phi.images["x"] == PDSeries.geom_var(A.carrier(), "x")


def test_lift_free_algebra_any_seed_valid():
    A = catalog("a1", R33)
    Abar = reduce_presentation(A)
    spec1 = Abar.carrier()
    spec = A.carrier()
    phibar = {"x": PDSeries.geom_var(spec1, "x")}
    seed = {"x": PDSeries.geom_var(spec, "x").add(
        PDSeries.geom_var(spec, "x", 2).scale(3))}
    phi = lift_morphism(phibar, A, A, seeds=seed)
    assert phi.images["x"] == seed["x"]


def test_lift_morphism_newton_repairs_unit_pair():
    # seed x -> x(1+p), y -> y; the y-image must become y/(1+p)
    A = unit_pair_presentation(R33, E=6)
    Abar = reduce_presentation(A)
    sbar = Abar.carrier()
    phibar = {"x": PDSeries.geom_var(sbar, "x"),
              "y": PDSeries.geom_var(sbar, "y")}
    spec = A.carrier()
    x = PDSeries.geom_var(spec, "x")
    y = PDSeries.geom_var(spec, "y")
    seeds = {"x": x.scale(1 + 3), "y": y}
    phi = lift_morphism(phibar, A, A, seeds=seeds)
    # oracle: the inverse of 1+p mod 27 computed independently
    inv = pow(4, -1, 27)
    assert phi.images["x"] == x.scale(4)
    assert phi.images["y"] == y.scale(inv)
    val = phi.residuals()[0]
    assert val.is_zero()


def test_lift_morphism_rejects_wrong_seed_reduction():
    A = catalog("a1", R33)
    Abar = reduce_presentation(A)
    sbar = Abar.carrier()
    spec = A.carrier()
    phibar = {"x": PDSeries.geom_var(sbar, "x")}
    seeds = {"x": PDSeries.geom_var(spec, "x").add(PDSeries.one(spec))}
    with pytest.raises(NotCongruent):
        lift_morphism(phibar, A, A, seeds=seeds)


# -- homotopies -------------------------------------------------------------


def test_constant_homotopy_is_degenerate():
    A = catalog("gm", R33)
    phi = identity_morphism(A)
    h = build_homotopy(phi, phi, D=4)
    assert h.at_zero.images == phi.images
    assert h.at_pi.images == phi.images
    # T-independent: equal to the degeneracy of the 0-simplex
    s0 = phi.degeneracy(0, D=4)
    assert h.images == s0.images


def test_translation_homotopy_on_a1():
    A = catalog("a1", R33)
    spec = A.carrier()
    x = PDSeries.geom_var(spec, "x")
    phi1 = Morphism(A, A, {"x": x})
    phi2 = Morphism(A, A, {"x": x.add(PDSeries.constant(spec, 3))})
    h = build_homotopy(phi1, phi2, D=4)
    # x -> x + T, checked at both interval ends
    spec1 = A.carrier(D=4, level=1)
    expected = PDSeries.geom_var(spec1, "x").add(PDSeries.pd_var(spec1, "T0"))
    assert h.images["x"] == expected
    assert h.at_zero.images == phi1.images
    assert h.at_pi.images == phi2.images


def test_scaling_homotopy_on_gm():
    A = catalog("gm", R33)
    spec = A.carrier()
    x = PDSeries.geom_var(spec, "x")
    phi1 = Morphism(A, A, {"x": x})
    phi2 = Morphism(A, A, {"x": x.scale(4)})
    h = build_homotopy(phi1, phi2, D=5)
    spec1 = A.carrier(D=5, level=1)
    expected = PDSeries.geom_var(spec1, "x").mul(
        PDSeries.one(spec1).add(PDSeries.pd_var(spec1, "T0")))
    assert h.images["x"] == expected
    assert h.at_zero.images == phi1.images
    assert h.at_pi.images == phi2.images


def test_homotopy_with_relations_unit_pair():
    A = unit_pair_presentation(R33, E=8)
    spec = A.carrier()
    x = PDSeries.geom_var(spec, "x")
    y = PDSeries.geom_var(spec, "y")
    inv4 = pow(4, -1, 27)
    phi1 = Morphism(A, A, {"x": x, "y": y})
    phi2 = Morphism(A, A, {"x": x.scale(4), "y": y.scale(inv4)})
    h = build_homotopy(phi1, phi2, D=6)
    assert h.at_zero.images == phi1.images
    assert h.at_pi.images == phi2.images
    # the relation x*y = 1 holds exactly along the whole interval
    assert h.residuals()[0].is_zero()


def test_homotopy_rejects_incongruent():
    A = catalog("a1", R33)
    spec = A.carrier()
    x = PDSeries.geom_var(spec, "x")
    phi1 = Morphism(A, A, {"x": x})
    phi2 = Morphism(A, A, {"x": x.add(PDSeries.one(spec))})
    with pytest.raises(NotCongruent):
        build_homotopy(phi1, phi2, D=4)


# -- mapping-space fillers ---------------------------------------------------


def random_two_simplex(A, D, rng):
    """A seeded 2-simplex of the self-mapping space of the torus algebra."""
    spec = A.carrier(D=D, level=2)
    x = PDSeries.geom_var(spec, "x")
    small = PDSeries.zero(spec)
    for te in [(1, 0), (0, 1), (1, 1), (2, 0)]:
        if sum(te) <= D and rng.random() < 0.8:
            small = small.add(PDSeries(spec, {((0,), te): rng.randrange(27)}))
    small = small.add(PDSeries.constant(spec, 3 * rng.randrange(9)))
    unit = PDSeries.one(spec).add(small)
    return Morphism(A, A, {"x": x.mul(unit)}, level=2, D=D)


def test_fill_mapping_boundary_m1_matches_homotopy():
    A = catalog("gm", R33)
    spec = A.carrier()
    x = PDSeries.geom_var(spec, "x")
    phi1 = Morphism(A, A, {"x": x})
    phi2 = Morphism(A, A, {"x": x.scale(4)})
    h = build_homotopy(phi1, phi2, D=5)
    # face 0 evaluates at T = 0, face 1 at T = p
    assert h.face(0).images == phi1.images
    assert h.face(1).images == phi2.images
    filled = fill_mapping_boundary(1, [phi1, phi2], phi1.reduction(), D=5)
    assert filled.face(0).images == phi1.images
    assert filled.face(1).images == phi2.images
    assert filled.evaluate_interval(0).images == phi1.images


def test_fill_mapping_roundtrip_m2_gm():
    A = catalog("gm", R33)
    rng = random.Random(77)
    D = 5
    for _ in range(4):
        H = random_two_simplex(A, D, rng)
        faces = [H.face(i) for i in range(3)]
        base = H.reduction()
        F = fill_mapping_boundary(2, faces, base, D=D)
        for i in range(3):
            assert F.face(i).images == faces[i].images


def test_fill_mapping_incompatible_rejected():
    A = catalog("gm", R33)
    rng = random.Random(5)
    D = 5
    H = random_two_simplex(A, D, rng)
    faces = [H.face(i) for i in range(3)]
    spec1 = A.carrier(D=D, level=1)
    bad = dict(faces[1].images)
    bad["x"] = bad["x"].add(PDSeries.pd_var(spec1, "T0"))
    faces[1] = Morphism(A, A, bad, level=1, D=D, validate=False)
    with pytest.raises(IncompatibleFaces):
        fill_mapping_boundary(2, faces, H.reduction(), D=D)


def test_degenerate_simplex_faces():
    # s_0 of a 0-simplex has both faces equal to that 0-simplex
    A = catalog("gm", R33)
    phi = identity_morphism(A, D=4)
    s = Morphism(A, A, {n: im for n, im in
                        identity_morphism(A, D=4, level=0).degeneracy(0).images.items()},
                 level=1, D=4, validate=False)
    assert s.face(0).images == phi.images
    assert s.face(1).images == phi.images
