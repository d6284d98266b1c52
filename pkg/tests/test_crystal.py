"""Double complex, totalization, and the de Rham comparison."""

import pytest

from crystalcalc.crystal import (
    CohomologyReport,
    DoubleComplex,
    build_simplicial_dr,
    compare_dr_cris,
    cris,
    dr_report,
    known_values_check,
    oracle_divisors,
)
from crystalcalc.linalg import ElementaryDivisors
from crystalcalc.ring import ZpN
from crystalcalc.smoothlift import catalog

R33 = ZpN(3, 3)


def test_face_values_level1_forms():
    # level-1 forms: face 0 sends T to 0, face 1 sends T to p and dT to 0
    A = catalog("point", R33)
    dc = DoubleComplex(A, 1, D=4)
    f0 = dc.face_matrix(1, 0, 0)
    f1 = dc.face_matrix(1, 1, 0)
    basis0 = dc.columns[1].basis(0)
    # basis0 = T^[0..4]; face 0 keeps only T^[0]; face 1 maps T^[k] to
    # gamma_k(p) = p^k / k!
    col0_dim = len(dc.columns[0].basis(0))
    assert col0_dim == 1
    d0 = f0.to_dense()
    d1 = f1.to_dense()
    for k, b in enumerate(basis0):
        weight = sum(b.te)
        assert d0[k][0] == (1 if weight == 0 else 0)
        assert d1[k][0] == R33.gamma_p(weight)
    # faces kill dT-forms
    assert dc.face_matrix(1, 0, 1).is_zero()
    assert dc.face_matrix(1, 1, 1).is_zero()


def test_moore_property_m2():
    A = catalog("gm", R33, E=4)
    dc = DoubleComplex(A, 2, D=4)
    rep = dc.verify_moore(0)
    assert rep.passed, rep.witness


def test_commuting_squares():
    A = catalog("gm", R33, E=4)
    dc = DoubleComplex(A, 2, D=4)
    rep = dc.verify_squares(1)
    assert rep.passed, rep.witness


def test_total_complex_squares_to_zero():
    A = catalog("gm", R33, E=4)
    dc = DoubleComplex(A, 2, D=4)
    for g in (-1, 0, 2):
        dc.assert_total_complex(g)


def test_single_column_tot_is_column():
    A = catalog("a1", R33, E=4)
    dc = DoubleComplex(A, 0, D=2)
    for g in (0, 1, 3):
        for i in (0, 1):
            assert dc.total_cohomology(i, g) == dc.columns[0].cohomology(i, g)


def test_point_tot_m1():
    A = catalog("point", R33)
    dc = DoubleComplex(A, 1, D=4)
    dc.assert_total_complex(0)
    assert dc.total_cohomology(0, 0).exponents == (3,)
    assert dc.total_cohomology(1, 0).is_trivial()


def test_cris_point():
    A = catalog("point", R33)
    rep = cris(A, 2, D=4)
    assert rep.cells[(0, 0)].exponents == (3,)
    assert rep.cells[(1, 0)].is_trivial()


def test_oracle_values():
    ring = ZpN(3, 3)
    assert oracle_divisors("gm", 1, 0, ring).exponents == (3,)
    assert oracle_divisors("gm", 0, 9, ring).exponents == (2,)
    assert oracle_divisors("gm", 0, 3, ring).exponents == (1,)
    assert oracle_divisors("gm", 0, 1, ring).is_trivial()
    assert oracle_divisors("a1", 1, 6, ring).exponents == (1,)
    assert oracle_divisors("point", 0, 0, ring).exponents == (3,)


def test_known_values_point_and_small_gm():
    rep = known_values_check(catalog("point", R33), 2, D=3)
    assert rep.passed, rep.witness
    rep = known_values_check(catalog("gm", R33, E=4), 2, D=4)
    assert rep.passed, rep.witness


def test_compare_dr_cris_gm_small():
    A = catalog("gm", R33, E=4)
    rep = compare_dr_cris(A, 2, D=4)
    assert rep.passed, rep.witness


def test_compare_dr_cris_a1_p2():
    A = catalog("a1", ZpN(2, 3), E=5)
    rep = compare_dr_cris(A, 2, D=4)
    assert rep.passed, rep.witness


def test_tracked_free_class_of_gm():
    # the residue class x^{-1} dx stays a full-precision class in degree 1
    A = catalog("gm", R33, E=4)
    rep = cris(A, 2, D=4)
    assert rep.cells[(1, 0)].exponents == (3,)
    assert rep.cells[(1, 0)].free_rank == 1


def test_cap_increase_keeps_certified_cells():
    A = catalog("gm", R33, E=4)
    small = cris(A, 2, D=4)
    big = cris(A, 2, D=5)
    for key in small.cells:
        assert small.cells[key] == big.cells[key]


def test_report_lines_deterministic():
    A = catalog("gm", R33, E=4)
    r1 = cris(A, 1, D=3)
    r2 = cris(A, 1, D=3)
    assert r1.lines() == r2.lines()
    assert "completion: implicit mod p^N" in r1.lines()


def test_totalize_view():
    from crystalcalc.crystal import totalize
    A = catalog("a1", R33, E=4)
    dc = build_simplicial_dr(A, 1, D=3)
    tot = totalize(dc, g=2)
    tot.assert_complex(degrees=(0,))
    assert tot.cohomology(0) == dc.total_cohomology(0, 2)
    assert tot.dimension(0) == sum(len(dc.columns[m].basis(q, 2))
                                   for (m, q) in tot.blocks(0))


def test_strict_comparison_raises():
    import pytest
    from crystalcalc.errors import CatalogMismatch
    with pytest.raises(CatalogMismatch):
        known_values_check(catalog("ell-3-1-2", R33), 1, D=2)


def test_window_increase_keeps_certified_cells():
    # enlarging the geometric window must not change certified divisors
    small = cris(catalog("gm", R33, E=4), 2, D=4)
    big = cris(catalog("gm", R33, E=5), 2, D=4)
    for key, val in small.cells.items():
        assert big.cells[key] == val


def test_pair_torus_full_pipeline():
    # Tier-2 presentation (x*y = 1) with weights (1, -1): the whole
    # comparison runs through the rewrite quotient, and the invariant
    # differential class keeps full precision
    from crystalcalc.smoothlift import unit_pair_presentation
    A = unit_pair_presentation(ZpN(3, 2), E=4)
    rep = compare_dr_cris(A, 2, D=3)
    assert rep.passed, rep.witness
    r = cris(A, 2, D=3, degrees=range(0, 2))
    assert r.cells[(1, 0)].exponents == (2,)


def test_gm_p5_comparison():
    A = catalog("gm", ZpN(5, 2), E=5)
    rep = compare_dr_cris(A, 2, D=4)
    assert rep.passed, rep.witness


def test_divided_tower_face_identities():
    # d_i d_j = d_{j-1} d_i on the divided-power interval tower
    from crystalcalc.series import PDSeries as S
    from crystalcalc.simplicial import LevelTower, SimplexMap
    tw = LevelTower(R33, 4, divided=True)
    f = S.pd_var(tw.spec(3), "T0", 2).mul(S.pd_var(tw.spec(3), "T2"))
    for j in range(4):
        for i in range(j):
            lhs = tw.face(2, i, tw.face(3, j, f))
            rhs = tw.face(2, j - 1, tw.face(3, i, f))
            assert lhs == rhs, (i, j)


def test_cris_ungraded_hypersurface():
    # inhomogeneous presentations run in the single-window mode
    A = catalog("ell-3-1-2", ZpN(3, 2), E=4)
    rep = cris(A, 1, D=2, degrees=range(0, 1))
    assert (0, None) in rep.cells
    assert "H^0 g=all:" in "\n".join(rep.lines())
