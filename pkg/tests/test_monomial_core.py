import math

import numpy as np
import pytest
from hypothesis import given, strategies as st
from numpy.testing import assert_allclose
from scipy import integrate

from monopush import monomial_core as mc
from monopush.errors import DegenerateMapError, DomainError
from monopush.exponents import ExponentData
from monopush.oracle import fibre_density, quadrature_volume

Q_MID = np.linspace(0.1, 0.9, 9)


def ed(A, B):
    return ExponentData(tuple(A), tuple(B))


@st.composite
def integer_exponents(draw, max_n=4, max_entry=6):
    n = draw(st.integers(1, max_n))
    A = draw(st.lists(st.integers(0, max_entry), min_size=n, max_size=n).filter(any))
    B = draw(st.lists(st.integers(0, max_entry), min_size=n, max_size=n))
    return ed(A, B)


def test_exponent_validation():
    with pytest.raises(DegenerateMapError, match="not all a_i equal to zero"):
        ed((0, 0), (1, 1))
    with pytest.raises(DomainError):
        ed((1, -1), (0, 0))
    with pytest.raises(DomainError):
        ed((1,), (0, 0))
    with pytest.raises(DomainError):
        ed((1, math.inf), (0, 0))
    assert ExponentData.parse("2,4", "3, 5") == ed((2, 4), (3, 5))


def test_spectrum_examples():
    s = mc.derive_spectrum(ed((2, 4), (3, 5)))
    assert s.active_nodes == (2.0, 1.5) and s.prefactor == 1 / 8
    s = mc.derive_spectrum(ed((1, 0), (0, 4)))
    assert s.active_nodes == (1.0,) and s.prefactor == pytest.approx(1 / 5, rel=1e-15)
    s = mc.derive_spectrum(ed((1,), (0,)))
    assert s.active_nodes == (1.0,) and s.prefactor == 1.0
    with pytest.raises(DomainError):
        mc.derive_spectrum(ed((1,), (0,)), cluster_tol=0.0)


def test_spectrum_clusters_partition():
    s = mc.derive_spectrum(ed((2, 2, 1, 3), (2, 2, 0, 5)))
    idx = sorted(i for c in s.clusters for i in c.indices)
    assert idx == list(range(4))
    assert [c.multiplicity for c in s.clusters] == [1, 2, 1]


def test_volume_examples():
    assert mc.volume(ed((1,), (0,)), 0.25) == pytest.approx(0.75, rel=1e-15)
    assert mc.volume(ed((1, 1), (0, 0)), 0.5) == pytest.approx(1 - 0.5 + 0.5 * math.log(0.5), rel=1e-13)
    assert mc.volume(ed((2, 1), (3, 0)), 1e-12) == pytest.approx(0.25, rel=1e-9)


def test_volume_matches_quadrature_example():
    q = quadrature_volume(ed((1, 1), (0, 0)), 0.5)
    assert abs(q.value - 0.153426) < 1e-6
    e = ed((2, 1), (3, 0))
    r = quadrature_volume(e, 0.1)
    assert abs(r.value - mc.volume(e, 0.1)) <= r.error


def test_volume_domain():
    for q in (0.0, 1.0, -0.2, 1.5):
        with pytest.raises(DomainError):
            mc.volume(ed((1,), (0,)), q)


def test_density_examples():
    assert_allclose(mc.density_unit_cube(ed((1,), (0,)), Q_MID), 1.0, rtol=1e-15)
    assert mc.density_unit_cube(ed((1, 1), (0, 1)), 0.3) == pytest.approx(0.7, rel=1e-14)
    assert mc.density_unit_cube(ed((1, 1), (0, 0)), 0.3) == pytest.approx(-math.log(0.3), rel=1e-14)
    q = 0.25
    expected = 0.25 * q**0.5 * -math.log(q)
    assert mc.density_unit_cube(ed((2, 2), (2, 2)), q) == pytest.approx(expected, rel=1e-14)
    assert expected == pytest.approx(0.173286, abs=1e-6)


def _first_orthant(x, y):
    return 1.0 if x >= 0 and y >= 0 else 0.0


def test_density_against_fibre_oracle():
    for A, B in [((1, 1), (0, 1)), ((1, 2), (0, 3)), ((1, 3), (2, 1)), ((1, 2), (4, 0))]:
        e = ed(A, B)
        for q in (0.05, 0.3, 0.7):
            assert mc.density_unit_cube(e, q) == pytest.approx(fibre_density(_first_orthant, e, q), rel=1e-10)


def test_density_reports_path():
    _, path = mc.density_unit_cube_with_path(ed((2, 2), (2, 2)), 0.5)
    assert path == "confluent"
    _, path = mc.density_unit_cube_with_path(ed((1, 1), (0, 1)), 0.5)
    assert path == "partial-fraction"
    _, path = mc.density_unit_cube_with_path(ed((20, 21), (20, 21)), 0.5)
    assert path == "series"


@given(integer_exponents(max_n=6), st.floats(1e-6, 1 - 1e-6))
def test_density_nonnegative(e, q):
    assert mc.density_unit_cube(e, q) >= 0


@given(integer_exponents())
def test_normalisation(e):
    # q = exp(-t); the mass beyond t = 600 is below q**min(c) < 1e-40
    total, _ = integrate.quad(
        lambda t: mc.density_unit_cube(e, math.exp(-t)) * math.exp(-t), 0, 600, epsabs=0, epsrel=1e-11, limit=400
    )
    assert total == pytest.approx(e.total_mass(), rel=1e-8)


@given(integer_exponents(max_n=5))
def test_derivative_consistency(e):
    for q in Q_MID:
        h = 1e-6 * q
        fd = -(mc.volume(e, q + h) - mc.volume(e, q - h)) / (2 * h)
        rho = mc.density_unit_cube(e, q)
        assert abs(fd - rho) <= 1e-5 * abs(rho) + 1e-12


@given(integer_exponents())
def test_form_agreement(e):
    # the forced closed form loses digits like (n-1)!/(gap*log(1/q))**(n-1) near q=1,
    # so the check stays where it is well conditioned (n <= 4, q <= 0.9)
    c = np.sort(mc.derive_spectrum(e).active_nodes)
    if len(c) > 1 and np.min(np.diff(c)) < 0.1:
        return
    pf = mc.density_unit_cube(e, Q_MID, path="partial-fraction")
    se = mc.density_unit_cube(e, Q_MID, path="series")
    assert_allclose(pf, se, rtol=1e-9)


@pytest.mark.parametrize("m", [2, 3, 4])
def test_fully_confluent(m):
    e = ed((1,) * m, (0,) * m)
    for q in (0.01, 0.3, 0.9):
        expected = (-math.log(q)) ** (m - 1) / math.factorial(m - 1)
        assert mc.density_unit_cube(e, q) == pytest.approx(expected, rel=1e-13)


def test_confluent_continuity():
    c = 1.5
    devs = []
    for eps in (1e-2, 1e-4, 1e-6):
        e = ed((1, 1, 1), (c - 1, c - 1 + eps, c - 1 + 2 * eps))
        q = 0.3
        target = q ** (c - 1) * math.log(q) ** 2 / 2
        devs.append(abs(mc.density_unit_cube(e, q) / target - 1))
    assert devs[0] > devs[1] > devs[2]


@pytest.mark.parametrize("n", [1, 2, 3])
def test_analytic_single_axis(n):
    a, b = 3, 2 * n
    e = ed((a,), (b,))
    for q in Q_MID:
        assert mc.density_unit_cube(e, q) == pytest.approx(q ** ((b + 1) / a - 1) / a, rel=1e-14)


def test_limit_examples():
    # c = (1, 2), kappa = 1/2: rho(q) = (1 - q)/2 by direct fibre integration
    lim = mc.limit_at_zero(ed((1, 2), (0, 3)))
    assert lim.value == pytest.approx(0.5, rel=1e-15)
    assert mc.density_unit_cube(ed((1, 2), (0, 3)), 1e-9) == pytest.approx(0.5, rel=1e-8)
    assert mc.limit_at_zero(ed((2, 4), (3, 5))).value == 0
    lim = mc.limit_at_zero(ed((1, 1), (0, 0)))
    assert lim.value == math.inf and lim.leading_exponents == (0.0, 1)
    lim = mc.limit_at_zero(ed((2,), (0,)))
    assert lim.value == math.inf and lim.leading_exponents == (-0.5, 0)


def test_unit_interval_boundaries():
    e = ed((1, 2), (0, 3))
    vals, paths = mc.density_unit_interval_with_path(e, np.array([0.0, 0.5, 1.0, 2.0]))
    assert vals[0] == pytest.approx(0.5) and list(paths[[0, 2, 3]]) == ["limit", "outside", "outside"]
    assert vals[2] == 0 and vals[3] == 0


def test_signed_examples():
    assert mc.density_signed_cube(ed((1, 1), (0, 1)), -0.3) == pytest.approx(1.4, rel=1e-14)
    assert mc.density_signed_cube(ed((2,), (4,)), -0.5) == 0.0
    assert mc.density_signed_cube(ed((2,), (4,)), 0.25) == pytest.approx(0.125, rel=1e-14)
    with pytest.raises(DomainError):
        mc.density_signed_cube(ed((1.5,), (0,)), 0.2)
    # read as |x|**1.5 when the parity flag is off
    assert mc.density_signed_cube(ed((1.5,), (0,)), 0.2, require_integer_A=False) == pytest.approx(
        2 * mc.density_unit_cube(ed((1.5,), (0,)), 0.2)
    )


@given(integer_exponents(), st.floats(1e-4, 0.999))
def test_signed_parity(e, q):
    v_pos = mc.density_signed_cube(e, q)
    v_neg = mc.density_signed_cube(e, -q)
    if mc.parity_of(e.A) is mc.Parity.SOME_ODD:
        assert v_pos == v_neg
    else:
        assert v_neg == 0.0


def test_mixed_parity_factor_against_direct_fold():
    # A = (1, 2): the even axis folds onto itself, the odd axis splits sign evenly
    e = ed((1, 2), (0, 1))
    for q in (0.1, 0.4):
        # pushforward of |y| dx dy on [-1,1]^2 under x*y**2, by fibre integration over y
        def integrand(y):
            return abs(y) / y**2 if q < y**2 else 0.0

        direct, _ = integrate.quad(integrand, -1, 1, points=[-math.sqrt(q), 0, math.sqrt(q)])
        assert mc.density_signed_cube(e, q) == pytest.approx(direct, rel=1e-9)
        assert mc.density_signed_cube(e, -q) == pytest.approx(direct, rel=1e-9)


def test_classify_examples():
    v = mc.classify(ed((2, 4), (3, 5)))
    assert (v.frs_case, v.parity, v.limit_at_zero) == (mc.FRSCase.CASE1, mc.Parity.ALL_EVEN, 0.0)
    v = mc.classify(ed((1, 2), (0, 3)))
    assert (v.frs_case, v.parity, v.distinguished_axis) == (mc.FRSCase.CASE2, mc.Parity.SOME_ODD, 0)
    assert v.limit_at_zero == pytest.approx(0.5)
    v = mc.classify(ed((1, 1), (0, 0)))
    assert (v.frs_case, v.parity, v.limit_at_zero) == (mc.FRSCase.OUTSIDE, mc.Parity.SOME_ODD, math.inf)
    assert v.as_record()["limit_at_zero"] == "inf"
    with pytest.raises(DomainError):
        mc.classify(ed((1.5,), (0,)))


def test_case2_any_axis():
    v = mc.classify(ed((2, 1), (3, 0)))
    assert v.frs_case is mc.FRSCase.CASE2 and v.distinguished_axis == 1


@given(integer_exponents(), st.permutations(range(4)))
def test_classification_permutation_invariant(e, perm):
    perm = [p for p in perm if p < e.n]
    a = mc.classify(e)
    b = mc.classify(e.permuted(perm))
    assert (a.frs_case, a.parity, a.leading_exponents) == (b.frs_case, b.parity, b.leading_exponents)
    assert a.limit_at_zero == pytest.approx(b.limit_at_zero, rel=1e-12)


@given(integer_exponents())
def test_admissible_cases_have_finite_limit(e):
    v = mc.classify(e)
    if v.frs_case is mc.FRSCase.CASE1:
        assert v.limit_at_zero == 0
    elif v.frs_case is mc.FRSCase.CASE2:
        assert math.isfinite(v.limit_at_zero)
