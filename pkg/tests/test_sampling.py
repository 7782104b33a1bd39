"""
Tests for random streams and samplers
"""

import numpy as np
import pytest

from core.errors import SamplingError
from core.model import BackgroundSpec, FunctionSpec, KnowledgeParams, TradeParams
from core.sampling import (
    RngStream, StreamRole, derive_stream_id, open_uniform, sample_background,
    sample_disjoint_pairs, sample_eta, sample_kappa, sample_selection,
)


class TestRngStream:
    def test_same_stream_same_draws(self):
        a = RngStream(7).substream(StreamRole.KAPPA, 3, 1).generator().random(5)
        b = RngStream(7).substream(StreamRole.KAPPA, 3, 1).generator().random(5)
        np.testing.assert_array_equal(a, b)

    def test_different_keys_differ(self):
        a = RngStream(7).substream(StreamRole.KAPPA, 3, 1).generator().random(5)
        b = RngStream(7).substream(StreamRole.KAPPA, 3, 2).generator().random(5)
        assert not np.array_equal(a, b)

    def test_different_seeds_differ(self):
        a = RngStream(1).generator().random(5)
        b = RngStream(2).generator().random(5)
        assert not np.array_equal(a, b)

    def test_stream_id_is_stable(self):
        assert derive_stream_id(0, 1, 2) == derive_stream_id(0, 1, 2)
        assert derive_stream_id(0, 1, 2) != derive_stream_id(0, 2, 1)

    def test_open_uniform_excludes_endpoints(self):
        u = open_uniform(RngStream(0).generator(), 100_000)
        assert u.min() > 0.0
        assert u.max() < 1.0

    def test_open_uniform_uses_53_bits(self):
        k = open_uniform(RngStream(0).generator(), 1000) * 2.0 ** 53
        np.testing.assert_array_equal(k, np.floor(k))
        assert np.any(k.astype(np.int64) % 2 == 1)


class TestSamplers:
    def test_uniform_background(self):
        z = sample_background(BackgroundSpec.uniform(2.0), RngStream(0), 200_000)
        assert np.all((z > 0) & (z < 2.0))
        assert z.mean() == pytest.approx(1.0, abs=0.01)

    def test_point_mass_background(self):
        z = sample_background(BackgroundSpec.point_mass(1.5), RngStream(0), 10)
        assert np.all(z == 1.5)
        assert sample_background(BackgroundSpec.point_mass(1.5), RngStream(0)) == 1.5

    def test_kappa_two_point(self):
        kp = KnowledgeParams(FunctionSpec.constant(0.1), FunctionSpec.constant(0.1), 0.04,
                             BackgroundSpec.uniform(2.0))
        kappa = sample_kappa(kp, RngStream(0), 100_000)
        np.testing.assert_allclose(np.abs(kappa), 0.2)
        assert (kappa > 0).any() and (kappa < 0).any()
        assert kappa.mean() == pytest.approx(0.0, abs=0.005)
        assert np.mean(kappa ** 2) == pytest.approx(0.04)

    def test_eta_two_point(self):
        eta = sample_eta(TradeParams(gamma=0.1, risk=0.3), RngStream(1), 100_000)
        assert set(np.unique(eta)) == {-0.3, 0.3}
        assert eta.mean() == pytest.approx(0.0, abs=0.005)

    def test_selection_probability(self):
        mask = sample_selection(0.25, RngStream(4), 200_000)
        assert mask.dtype == bool
        assert mask.mean() == pytest.approx(0.25, abs=0.005)

    def test_selection_certain(self):
        assert sample_selection(1.0, RngStream(4), 10).all()


class TestDisjointPairs:
    def test_two_agents(self):
        pairs = sample_disjoint_pairs(2, 1, RngStream(0))
        assert pairs.shape == (1, 2)
        assert sorted(pairs[0]) == [0, 1]

    def test_pairs_are_disjoint(self):
        pairs = sample_disjoint_pairs(1001, 500, RngStream(9))
        flat = pairs.ravel()
        assert flat.size == 1000
        assert np.unique(flat).size == 1000
        assert flat.min() >= 0 and flat.max() < 1001

    def test_excluded_agent_sits_out(self):
        pairs = sample_disjoint_pairs(5, 2, RngStream(2), exclude=3)
        assert 3 not in pairs

    def test_too_many_pairs(self):
        with pytest.raises(SamplingError):
            sample_disjoint_pairs(5, 3, RngStream(0))

    def test_zero_pairs(self):
        assert sample_disjoint_pairs(5, 0, RngStream(0)).shape == (0, 2)
