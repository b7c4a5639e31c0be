import numpy as np
import pytest
from sklearn.base import clone
from sklearn.exceptions import NotFittedError

from entroflow.errors import UsageError
from entroflow.estimators import DecayRateEstimator, HermiteProjector, OrnsteinUhlenbeckFlow
from entroflow.field import SpectralField


def test_projector_roundtrip(rng):
    pr = HermiteProjector(dimension=2, max_degree=3).fit()
    C = rng.normal(size=(4, pr.basis_.size))
    np.testing.assert_allclose(pr.transform(pr.inverse_transform(C)), C, atol=1e-12)
    assert pr.nodes_.shape == (pr.rule_.size, 2)


def test_projector_matches_field():
    f = SpectralField.from_modes({(2,): 0.1, (3,): 0.2}, 1, 3)
    pr = HermiteProjector(1, 3).fit()
    vals = f(pr.nodes_)[None, :]
    np.testing.assert_allclose(pr.transform(vals)[0], f.coefficients, atol=1e-13)


def test_projector_validation():
    with pytest.raises(NotFittedError):
        HermiteProjector().transform(np.ones((1, 12)))
    pr = HermiteProjector(1, 4).fit()
    with pytest.raises(UsageError):
        pr.transform(np.ones((1, 5)))
    with pytest.raises(UsageError):
        HermiteProjector(1, 8, quad_order=4).fit()


def test_params_and_clone():
    est = HermiteProjector(dimension=2, max_degree=5, quad_order=20)
    assert est.get_params() == {"dimension": 2, "max_degree": 5, "quad_order": 20}
    assert clone(est).set_params(max_degree=3).max_degree == 3


def test_ou_flow():
    fl = OrnsteinUhlenbeckFlow(t=0.5, dimension=1, max_degree=3).fit()
    out = fl.transform(np.ones((1, 4)))
    np.testing.assert_allclose(out[0], np.exp(-0.5 * np.arange(4)))
    with pytest.raises(UsageError):
        OrnsteinUhlenbeckFlow(t=-1).fit()


def test_decay_rate_estimator():
    t = np.linspace(0, 2, 41)
    y = 3.0 * np.exp(-2.5 * t)
    est = DecayRateEstimator(window=(0.1, 1.0)).fit(t, y)
    assert est.rate_ == pytest.approx(2.5, rel=1e-12)
    assert est.intercept_ == pytest.approx(np.log(3.0))
    assert est.score(t, y) == pytest.approx(1.0)
    np.testing.assert_allclose(est.predict([0.5]), 3 * np.exp(-1.25))


def test_decay_rate_floor_shrinks_window():
    t = np.linspace(0, 1, 21)
    y = np.exp(-40 * t)
    est = DecayRateEstimator(window=(0.0, 1.0), floor=1e-12).fit(t, y)
    assert est.window_shrunk_ and est.window_[1] < 1.0
    with pytest.raises(UsageError):
        DecayRateEstimator(window=(0.9, 1.0), floor=1.0).fit(t, y)


def test_power_law_fit():
    t = np.linspace(1, 50, 60)
    est = DecayRateEstimator(window=None, log_x=True).fit(t, 2 * t ** -1.5)
    assert est.rate_ == pytest.approx(1.5, rel=1e-12)
