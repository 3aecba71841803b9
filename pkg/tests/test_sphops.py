import numpy as np
import pytest

from outflow import sphops as so
from outflow.sphops import AxisDegeneracy


def _sample(chart, n=40, seed=0):
    rng = np.random.default_rng(seed)
    r = rng.uniform(1.2, 4.0, n)
    th = rng.uniform(np.pi / 9 + 0.15, 8 * np.pi / 9 - 0.15, n)
    ph = rng.uniform(0, 2 * np.pi, n)
    return so.from_spherical(r, th, ph, chart)


@pytest.mark.parametrize("chart", ["V", "H"])
def test_orthonormal_frame(chart):
    pts = _sample(chart)
    rhat, that, phat = so.unit_vectors(pts, chart)
    frame = np.stack([rhat, that, phat], axis=1)
    gram = np.einsum("bic,bjc->bij", frame, frame)
    assert np.max(np.abs(gram - np.eye(3))) <= 1e-12


def test_reference_directions():
    _, _, phat = so.unit_vectors(np.array([[2.0, 0.0, 0.0]]), "V")
    assert np.allclose(phat[0], [0.0, 1.0, 0.0])
    rhat, _, _ = so.unit_vectors(np.array([[0.0, 0.4, 2.0]]), "H")
    assert np.allclose(rhat[0], np.array([0.0, 0.4, 2.0]) / np.hypot(0.4, 2.0))


def test_axis_degeneracy_raised():
    near_pole = np.array([[1e-3, 1e-3, 2.0]])
    with pytest.raises(AxisDegeneracy):
        so.unit_vectors(near_pole, "V")
    # same point is comfortably inside the complementary chart
    so.unit_vectors(near_pole, "H")
    with pytest.raises(AxisDegeneracy):
        so.sph_derivative(lambda x: x[..., 0], "theta_V", near_pole)


def test_scaled_derivatives_of_radius():
    pts = _sample("V", 20)
    F = lambda x: np.linalg.norm(x, axis=-1)  # noqa: E731
    assert np.max(np.abs(so.sph_derivative(F, "r", pts) - 1.0)) <= 1e-9
    assert np.max(np.abs(so.sph_derivative(F, "theta_V", pts))) <= 1e-9
    assert np.max(np.abs(so.sph_derivative(F, "phi_V", pts))) <= 1e-9


def test_polar_derivative_of_x3():
    """d_theta x3 carries the -cylindrical-radius factor of the V frame."""
    pts = _sample("V", 30, seed=2)
    F = lambda x: x[..., 2]  # noqa: E731
    got = so.sph_derivative(F, "theta_V", pts)
    want = -np.hypot(pts[:, 0], pts[:, 1])
    assert np.max(np.abs(got - want)) <= 1e-8


@pytest.mark.parametrize("chart", ["V", "H"])
def test_scaled_derivatives_commute(chart):
    pts = _sample(chart, 20, seed=3)
    F = lambda x: np.exp(1 - np.linalg.norm(x, axis=-1)) * x[..., 0] * x[..., 1]  # noqa: E731
    ab = so.sph_partial(F, chart, (1, 1, 0), h=0.005)(pts)
    inner = so.sph_partial(F, chart, (0, 1, 0), h=0.005)
    ba = so.sph_partial(inner, chart, (1, 0, 0), h=0.005)(pts)
    assert np.max(np.abs(ab - ba)) <= 1e-5


def test_harmonic_function():
    pts = _sample("V", 30, seed=4)
    F = lambda x: 1.0 / np.linalg.norm(x, axis=-1)  # noqa: E731
    assert np.max(np.abs(so.make_sph_lap(F, "V", h=0.004)(pts))) <= 1e-7


def test_grad_div_lap_against_closed_forms():
    pts = _sample("V", 40, seed=5)
    F = lambda x: x[..., 0] ** 2 * x[..., 1] - x[..., 2] ** 3  # noqa: E731
    V = lambda x: x + 0.0  # noqa: E731
    grad, div, lap = so.sph_grad_div_lap(F, V, pts, "V", h=0.005)
    grad_exact = np.stack([2 * pts[:, 0] * pts[:, 1], pts[:, 0] ** 2,
                           -3 * pts[:, 2] ** 2], axis=-1)
    lap_exact = 2 * pts[:, 1] - 6 * pts[:, 2]
    assert np.max(np.abs(grad - grad_exact)) <= 1e-5
    assert np.max(np.abs(div - 3.0)) <= 1e-5
    assert np.max(np.abs(lap - lap_exact)) <= 1e-5


@pytest.mark.parametrize("chart", ["V", "H"])
def test_spherical_matches_cartesian_oracles(chart):
    pts = _sample(chart, 50, seed=6)
    F = lambda x: np.exp(-0.5 * np.sum((x - np.array([1.2, 0.7, -0.5])) ** 2,  # noqa: E731
                                       axis=-1))
    V = lambda x: np.stack([x[..., 1] * x[..., 2], x[..., 0] ** 2,  # noqa: E731
                            np.exp(1 - np.linalg.norm(x, axis=-1))], axis=-1)
    assert np.max(np.abs(so.make_sph_grad(F, chart, 0.005)(pts)
                         - so.cart_grad(F, pts))) <= 1e-5
    assert np.max(np.abs(so.make_sph_div(V, chart, 0.005)(pts)
                         - so.cart_div(V, pts))) <= 1e-5
    assert np.max(np.abs(so.make_sph_lap(F, chart, 0.005)(pts)
                         - so.cart_lap(F, pts))) <= 1e-5
    assert np.max(np.abs(so.make_sph_grad_div(V, chart, 0.01)(pts)
                         - so.cart_grad_div(V, pts))) <= 1e-4


def test_frame_derivative_relations():
    """The nine derivative relations of the moving frame, by differencing."""
    for chart in ("V", "H"):
        pts = _sample(chart, 30, seed=7)
        _, th, _ = so.to_spherical(pts, chart)
        s, c = np.sin(th)[:, None], np.cos(th)[:, None]
        rhat, that, phat = so.unit_vectors(pts, chart)
        hat = {
            "r": lambda x, ch=chart: so.unit_vectors(x, ch, guard=False)[0],
            "t": lambda x, ch=chart: so.unit_vectors(x, ch, guard=False)[1],
            "p": lambda x, ch=chart: so.unit_vectors(x, ch, guard=False)[2],
        }

        def D(which, orders):
            return so.sph_partial(hat[which], chart, orders, 0.005,
                                  vector=True)(pts)

        assert np.max(np.abs(D("r", (0, 1, 0)) - that)) <= 1e-6
        assert np.max(np.abs(D("r", (0, 0, 1)) - s * phat)) <= 1e-6
        assert np.max(np.abs(D("t", (0, 1, 0)) + rhat)) <= 1e-6
        assert np.max(np.abs(D("t", (0, 0, 1)) - c * phat)) <= 1e-6
        assert np.max(np.abs(D("p", (0, 1, 0)))) <= 1e-6
        assert np.max(np.abs(D("p", (0, 0, 1)) + s * rhat + c * that)) <= 1e-6
        for which in ("r", "t", "p"):
            assert np.max(np.abs(D(which, (1, 0, 0)))) <= 1e-6
