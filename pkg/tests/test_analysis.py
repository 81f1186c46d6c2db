import numpy as np
import pytest
from numpy.polynomial.legendre import leggauss

from dgns.analysis import (ConvergenceTable, ErrorTriple, broken_energy_error,
                           discrete_l2_norm, energy_norm, eoc, error_context,
                           interpolant_comparison_errors, l2_error,
                           pressure_l2_error)
from dgns.forms import AssemblyContext
from dgns.mesh import build_uniform_mesh
from dgns.solutions import get_example
from dgns.space import BrokenSpace, project_l2


@pytest.fixture(scope="module")
def ectx8():
    mesh = build_uniform_mesh(8)
    vel = BrokenSpace(mesh, 1, 2)
    pres = BrokenSpace(mesh, 0, 1)
    return mesh, vel, pres, error_context(AssemblyContext(mesh, vel, pres))


def tensor_gauss_integral(f, npts=40):
    """Independent oracle: tensor-product Gauss quadrature on the unit square."""
    x, w = leggauss(npts)
    x = 0.5 * (x + 1.0)
    w = 0.5 * w
    xx, yy = np.meshgrid(x, x, indexing="ij")
    pts = np.column_stack([xx.ravel(), yy.ravel()])
    vals = f(pts)
    return float(np.einsum("i,j,ij->", w, w, vals.reshape(npts, npts)))


def test_energy_error_of_zero_field_matches_seminorm_oracle(ectx8):
    """For u vanishing on the boundary, || u - 0 ||_eps is the H1 seminorm."""
    mesh, vel, pres, ectx = ectx8
    ex = get_example("ex1")
    zero = np.zeros(vel.num_dofs)
    computed = broken_energy_error(ectx, zero, ex, 1.0, 10.0)

    def grad_sq(pts):
        g = ex.velocity_gradient(pts, 1.0)
        return np.einsum("pcd,pcd->p", g, g)

    oracle = np.sqrt(tensor_gauss_integral(grad_sq))
    assert abs(computed - oracle) <= 1e-10 * oracle


def test_energy_error_vanishes_for_reproduced_affine_field(ectx8):
    """An affine exact field is reproduced by its interpolant: zero error."""
    mesh, vel, pres, ectx = ectx8

    class Affine:
        def velocity(self, p, t):
            return np.stack([1.0 + 2 * p[:, 0] - p[:, 1],
                             0.5 * p[:, 0] + 3 * p[:, 1]], axis=1)

        def velocity_gradient(self, p, t):
            g = np.zeros((len(p), 2, 2))
            g[:, 0, 0], g[:, 0, 1] = 2.0, -1.0
            g[:, 1, 0], g[:, 1, 1] = 0.5, 3.0
            return g

    exact = Affine()
    from dgns.space import interpolate_lagrange

    interp = interpolate_lagrange(vel, exact.velocity, t=0.0)
    err = broken_energy_error(ectx, interp.coeffs, exact, 0.0, 10.0)
    assert err <= 1e-11


def test_pressure_error_of_zero_field_matches_closed_form(ectx8):
    """Example with p = 2 pi e^t (cos 2 pi y - cos 2 pi x): ||p(1)|| = 2 pi e."""
    mesh, vel, pres, ectx = ectx8
    ex = get_example("ex2")
    computed = pressure_l2_error(ectx, np.zeros(pres.num_dofs), ex.pressure, 1.0)
    assert abs(computed - 2 * np.pi * np.e) <= 1e-8 * 2 * np.pi * np.e


def test_projection_error_below_function_norm(ectx8):
    mesh, vel, pres, ectx = ectx8
    ex = get_example("ex1")
    proj = project_l2(vel, ex.velocity, t=1.0)
    err = l2_error(ectx, proj.coeffs, ex.velocity, 1.0)
    norm = l2_error(ectx, np.zeros(vel.num_dofs), ex.velocity, 1.0)
    assert 0 < err < norm


def test_norm_homogeneity(ectx8, rng):
    mesh, vel, pres, ectx = ectx8
    v = rng.standard_normal(vel.num_dofs)
    for s in (2.0, -3.5, 0.25):
        scaled_e = energy_norm(ectx, s * v, 10.0)
        base_e = energy_norm(ectx, v, 10.0)
        assert abs(scaled_e - abs(s) * base_e) <= 1e-12 * scaled_e
        zero = lambda p, t: np.zeros((len(p), 2))
        scaled_l = l2_error(ectx, s * v, zero, 0.0)
        base_l = l2_error(ectx, v, zero, 0.0)
        assert abs(scaled_l - abs(s) * base_l) <= 1e-12 * scaled_l


def test_triangle_inequality_spot_checks(ectx8, rng):
    mesh, vel, pres, ectx = ectx8
    for _ in range(10):
        v = rng.standard_normal(vel.num_dofs)
        w = rng.standard_normal(vel.num_dofs)
        assert energy_norm(ectx, v + w, 10.0) <= \
            energy_norm(ectx, v, 10.0) + energy_norm(ectx, w, 10.0) + 1e-12
        assert discrete_l2_norm(mesh, v + w) <= \
            discrete_l2_norm(mesh, v) + discrete_l2_norm(mesh, w) + 1e-12


def test_discrete_l2_norm_matches_quadrature(ectx8, rng):
    mesh, vel, pres, ectx = ectx8
    v = rng.standard_normal(vel.num_dofs)
    direct = l2_error(ectx, v, lambda p, t: np.zeros((len(p), 2)), 0.0)
    assert abs(discrete_l2_norm(mesh, v) - direct) <= 1e-12 * direct


def test_eoc_recovers_synthetic_order():
    for alpha in (0.75, 1.0, 2.0):
        errors = [3.7 * 2.0 ** (-alpha * i) for i in range(5)]
        rates = eoc(errors)
        assert abs(rates - alpha).max() <= 1e-12


def test_eoc_published_pair():
    # first two velocity L2 errors of the mu=1 table give the printed 2.0594
    rate = eoc([6.3073e-3, 1.5131e-3])[0]
    assert abs(rate - 2.0594) <= 1e-3


def test_eoc_edge_cases():
    assert abs(eoc([1.0, 1.0])[0]) == 0.0
    assert abs(eoc([1.0, 0.5])[0] - 1.0) < 1e-14
    with pytest.raises(ValueError):
        eoc([1.0, -0.5])
    with pytest.raises(ValueError):
        eoc([1.0])


def test_error_triple_validation():
    ErrorTriple(h=0.25, dt=0.0625, energy=1.0, l2=0.1, pressure=0.2)
    with pytest.raises(ValueError):
        ErrorTriple(h=0.25, dt=0.0625, energy=-1.0, l2=0.1, pressure=0.2)
    with pytest.raises(ValueError):
        ErrorTriple(h=0.25, dt=0.0625, energy=np.nan, l2=0.1, pressure=0.2)


def test_convergence_table_rates_and_csv():
    rows = [ErrorTriple(h=1 / n, dt=1 / n**2, energy=1.0 / n, l2=1.0 / n**2,
                        pressure=1.0 / np.sqrt(n)) for n in (4, 8, 16)]
    table = ConvergenceTable(rows)
    assert np.allclose(table.energy_rates, 1.0)
    assert np.allclose(table.l2_rates, 2.0)
    assert np.allclose(table.pressure_rates, 0.5)
    lines = table.csv_lines()
    assert lines[0] == "h,energy_err,energy_rate,l2_err,l2_rate,p_err,p_rate"
    assert len(lines) == 4
    first = lines[1].split(",")
    assert first[2] == "" and first[4] == "" and first[6] == ""
    with pytest.raises(ValueError):
        ConvergenceTable(rows[::-1])  # not refining


def test_interpolant_comparison_errors_smoke(ectx8):
    mesh, vel, pres, ectx = ectx8
    ex = get_example("ex1")
    from dgns.space import interpolate_lagrange

    interp = interpolate_lagrange(vel, ex.velocity, t=1.0)
    pproj = project_l2(pres, ex.pressure, t=1.0)
    g, l, p = interpolant_comparison_errors(ectx, interp.coeffs, pproj.coeffs,
                                            ex, 1.0)
    assert g == 0.0 and l == 0.0 and p == 0.0
    g, l, p = interpolant_comparison_errors(
        ectx, np.zeros(vel.num_dofs), np.zeros(pres.num_dofs), ex, 1.0)
    assert g > 0 and l > 0 and p > 0
