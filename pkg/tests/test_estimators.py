"""scikit-learn API conformance for the transformer wrappers."""

import numpy as np
import pytest
from sklearn.base import clone

from helpers import make_dense, make_sparse

from pseudodepth import (
    PredictionFilter,
    PseudoDepthCompleter,
    SparseRectifier,
)

ESTIMATORS = [
    PseudoDepthCompleter(),
    SparseRectifier(),
    PredictionFilter(),
]


@pytest.mark.parametrize("est", ESTIMATORS, ids=lambda e: type(e).__name__)
class TestSklearnApi:
    def test_get_params_set_params_round_trip(self, est):
        params = est.get_params()
        rebuilt = type(est)().set_params(**params)
        assert rebuilt.get_params() == params

    def test_clone_preserves_params(self, est):
        cloned = clone(est)
        assert type(cloned) is type(est)
        assert cloned.get_params(deep=False) == est.get_params(deep=False)

    def test_fit_returns_self(self, est):
        assert clone(est).fit(None) is not est
        fresh = clone(est)
        assert fresh.fit(None) is fresh


class TestParamsAreStoredVerbatim:
    def test_completer_keeps_raw_kernel_specs(self):
        est = PseudoDepthCompleter(dilation_kernel="cross:3")
        assert est.get_params()["dilation_kernel"] == "cross:3"
        # invalid values surface at fit time, not construction time
        bad = PseudoDepthCompleter(inversion_ceiling=-5)
        with pytest.raises(ValueError):
            bad.fit(None)

    def test_rectifier_exposes_nested_completer(self):
        inner = PseudoDepthCompleter(top_crop_rows=3)
        est = SparseRectifier(threshold=0.5, completer=inner)
        params = est.get_params()
        assert params["threshold"] == 0.5
        assert params["completer__top_crop_rows"] == 3
        cloned = clone(est)
        assert cloned.completer is not inner
        assert cloned.completer.top_crop_rows == 3


class TestFitTransform:
    def test_completer_fit_transform(self):
        rng = np.random.default_rng(0)
        img = make_sparse(rng, 10, 12, 0.3)
        est = PseudoDepthCompleter(top_crop_rows=0)
        assert est.fit_transform(img) == est.transform(img)

    def test_filter_fit_transform(self):
        rng = np.random.default_rng(1)
        pair = (make_dense(rng, 8, 8), make_dense(rng, 8, 8))
        est = PredictionFilter()
        assert est.fit_transform(pair) == est.transform(pair)
