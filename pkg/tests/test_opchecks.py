import numpy as np
import pytest

from outflow import sphops as so
from outflow.opchecks import (
    TailNotConverged,
    commutator_check,
    default_corpus,
    graddiv_expansion,
    hardy_check,
    hardy_check_radial,
    rr_cancellation,
    rr_insensitivity,
    run_verify_ops,
)


@pytest.fixture(scope="module")
def corpus():
    return default_corpus(seed=0, n_points=60)


@pytest.mark.parametrize("kind", ["grad", "lap", "advect", "graddiv"])
@pytest.mark.parametrize("N", [1, 2, 3])
def test_commutator_equality_and_bound(kind, N, corpus):
    which = ("r", "theta", "phi") if kind == "advect" else ("theta", "phi")
    for chart in ("V", "H"):
        rep = commutator_check(kind, N, corpus, chart=chart, n_points=12,
                               which=which, rng_seed=N)
        assert rep["max_equality_err"] <= 1e-4, rep
        assert np.isfinite(rep["fitted_C"])


def test_commutator_of_constant_vanishes(corpus):
    pts = corpus.points["V"][:10]
    const = lambda x: np.full(x.shape[:-1], 2.5)  # noqa: E731
    from outflow.opchecks import _comm_grad, _comm_lap

    for N in (1, 2, 3):
        lhs, rhs = _comm_grad(const, pts, "V", N, "theta", 0.01)
        assert np.max(np.abs(lhs)) <= 1e-9
        assert np.max(np.abs(rhs)) <= 1e-9
        lhs, rhs = _comm_lap(const, pts, "V", N, "theta", 0.01)
        assert np.max(np.abs(lhs)) <= 1e-9


def test_radial_scalar_single_term_expansion(corpus):
    """For F = g(r) only the frame-derivative term survives at N = 1."""
    from outflow.opchecks import _comm_grad

    pts = corpus.points["V"][:12]
    F = lambda x: np.exp(1.0 - np.linalg.norm(x, axis=-1))  # noqa: E731
    lhs, rhs = _comm_grad(F, pts, "V", 1, "theta", 0.008)
    r = np.linalg.norm(pts, axis=-1)
    _, that, _ = so.unit_vectors(pts, "V")
    # [d_theta, grad] g(r) = theta_hat g'(r): first-order frame correction
    expect = that * (-np.exp(1.0 - r))[:, None]
    assert np.max(np.abs(lhs - expect)) <= 1e-6
    assert np.max(np.abs(rhs - expect)) <= 1e-7


def test_advect_identity_single_term(corpus):
    """[D, (V.grad)]F with V = x, F = r collapses to one expansion term."""
    from outflow.opchecks import _comm_advect

    pts = corpus.points["V"][:12]
    F = lambda x: np.linalg.norm(x, axis=-1)  # noqa: E731
    V = lambda x: x + 0.0  # noqa: E731
    lhs, rhs = _comm_advect(F, V, pts, "V", 1, "r", 0.008)
    # (V . grad)F = r, so [d_r, V.grad]F = d_r r - (V.grad) 1 = ... = 1 - 0
    # direct evaluation: d_r(r) = 1 while (V.grad)(d_r F) = (x.grad)(1) = 0
    assert np.max(np.abs(lhs - 1.0)) <= 1e-6
    assert np.max(np.abs(rhs - 1.0)) <= 1e-6


def test_graddiv_expansion_matches_cartesian(corpus):
    for chart in ("V", "H"):
        pts = corpus.points[chart][:20]
        for V in corpus.vector_fields.values():
            err = np.max(np.abs(graddiv_expansion(V, chart)(pts)
                                - so.cart_grad_div(V, pts)))
            assert err <= 1e-4


def test_rr_cancellation_routes(corpus):
    for chart in ("V", "H"):
        pts = corpus.points[chart]
        for name, V in corpus.vector_fields.items():
            r1, r2 = rr_cancellation(V, pts, chart)
            assert np.max(np.abs(r1 - r2)) <= 1e-4, name


def test_rr_trivial_for_identity(corpus):
    pts = corpus.points["V"][:20]
    V = lambda x: x + 0.0  # noqa: E731
    r1, r2 = rr_cancellation(V, pts, "V")
    assert np.max(np.abs(r1)) <= 1e-6
    assert np.max(np.abs(r2)) <= 1e-6


def test_rr_blind_to_pure_radial_content(corpus):
    pts = corpus.points["V"][:30]
    quad = lambda x: np.linalg.norm(x, axis=-1)[..., None] * x  # noqa: E731
    assert rr_insensitivity(quad, pts, "V") <= 1e-4
    assert rr_insensitivity(corpus.vector_fields["vsmooth"], pts, "V") <= 1e-4


def test_hardy_closed_form():
    r_of = lambda x: np.linalg.norm(x, axis=-1)  # noqa: E731
    lhs, rhs, ratio = hardy_check(lambda x: r_of(x) ** -2.0)
    assert lhs == pytest.approx(16 * np.pi / 3, rel=1e-3)
    assert rhs == pytest.approx(32 * np.pi, rel=1e-3)
    assert ratio == pytest.approx(1.0 / 6.0, rel=1e-3)
    assert lhs <= rhs


def test_hardy_zero_field():
    zero = lambda x: np.zeros(x.shape[:-1])  # noqa: E731
    lhs, rhs, ratio = hardy_check(zero)
    assert lhs == 0.0 and rhs == 0.0 and ratio == 0.0


def test_hardy_exponential_two_resolutions():
    r_of = lambda x: np.linalg.norm(x, axis=-1)  # noqa: E731
    u = lambda x: np.exp(1.0 - r_of(x))  # noqa: E731
    lhs1, rhs1, _ = hardy_check(u, n_r=120, n_theta=16, n_phi=16)
    lhs2, rhs2, _ = hardy_check(u, n_r=240, n_theta=32, n_phi=32)
    assert lhs1 == pytest.approx(lhs2, rel=1e-6)
    assert rhs1 == pytest.approx(rhs2, rel=1e-6)
    assert lhs2 <= rhs2


def test_hardy_tail_guard():
    r_of = lambda x: np.linalg.norm(x, axis=-1)  # noqa: E731
    slow = lambda x: r_of(x) ** -0.6  # not square-integrable against r^-2  # noqa: E731
    with pytest.raises(TailNotConverged):
        hardy_check(slow, r_max=30.0)


def test_hardy_radial_general_dimension():
    for n in (3, 4, 5):
        lhs, rhs, ratio = hardy_check_radial(
            lambda r: np.exp(1.0 - r), lambda r: -np.exp(1.0 - r), n=n)
        assert lhs <= rhs
        assert 0 < ratio < 1
    with pytest.raises(ValueError):
        hardy_check_radial(lambda r: r, lambda r: 1.0, n=2)


def test_full_suite_green():
    rows = run_verify_ops(seed=0, n_points=100, commutator_points=16)
    bad = [r for r in rows if not r.passed]
    assert not bad, bad
