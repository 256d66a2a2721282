import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from tracenorm_tucker import SynthSpec, TrialOutcome, add_outliers, gen_tucker, rse
from tracenorm_tucker.datagen import rank_match
from tracenorm_tucker.linalg import numerical_rank
from tracenorm_tucker.tensor import unfold


def test_noise_free_copy():
    clean, noisy, _ = gen_tucker(SynthSpec((8, 9, 7), 3, seed=1))
    assert np.array_equal(clean, noisy)


def test_reproducible():
    spec = SynthSpec((8, 9, 7), 3, 0.1, 0.02, seed=4)
    a, b = gen_tucker(spec), gen_tucker(spec)
    assert np.array_equal(a[0], b[0]) and np.array_equal(a[1], b[1])
    assert not np.array_equal(a[1], gen_tucker(SynthSpec((8, 9, 7), 3, 0.1, 0.02, seed=5))[1])


def test_truth_reconstructs_clean():
    clean, _, truth = gen_tucker(SynthSpec((6, 5, 4), (2, 3, 2), seed=2))
    assert rse(truth.reconstruct(), clean) <= 1e-14


@pytest.mark.parametrize("ranks", [(3, 3, 3), (2, 4, 5), (10, 10, 10)])
def test_clean_n_rank(ranks):
    clean, _, _ = gen_tucker(SynthSpec((20, 20, 20), ranks, seed=3))
    got = tuple(numerical_rank(np.linalg.svd(unfold(clean, n), compute_uv=False)) for n in range(3))
    assert got == ranks


def test_noise_level():
    clean, noisy, _ = gen_tucker(SynthSpec((30, 30, 30), 2, 0.05, seed=0))
    assert np.std(noisy - clean) == pytest.approx(0.05, rel=0.02)


class TestOutliers:
    def test_count_30_cubed(self):
        t = np.random.default_rng(0).standard_normal((30, 30, 30))
        out = add_outliers(t, 0.01, 1.0, 7)
        assert np.count_nonzero(out != t) == 270

    def test_zero_ratio(self):
        t = np.ones((4, 4))
        assert np.array_equal(add_outliers(t, 0.0, 1.0, 0), t)

    def test_zero_range(self):
        t = np.ones((4, 4))
        assert np.array_equal(add_outliers(t, 1.0, 0.0, 0), t)

    def test_magnitudes_bounded(self):
        t = np.zeros((10, 10, 10))
        out = add_outliers(t, 0.3, 0.5, 1)
        assert np.abs(out).max() <= 0.5
        assert np.count_nonzero(out) == 300

    def test_does_not_modify_input(self):
        t = np.zeros(50)
        add_outliers(t, 0.5, 1.0, 1)
        assert np.all(t == 0)

    def test_bad_ratio(self):
        with pytest.raises(ValueError):
            add_outliers(np.zeros(3), 1.5)


class TestRse:
    def test_examples(self, rng):
        t = rng.standard_normal((3, 4))
        assert rse(t, t) == 0.0
        assert rse(np.zeros_like(t), t) == pytest.approx(1.0)
        assert rse(1.1 * t, t) == pytest.approx(0.1, abs=1e-12)

    def test_zero_reference(self):
        with pytest.raises(ValueError):
            rse(np.ones(3), np.zeros(3))

    @settings(max_examples=30, deadline=None)
    @given(seed=st.integers(0, 2**31))
    def test_mode_permutation_invariance(self, seed):
        rng = np.random.default_rng(seed)
        x, t = rng.standard_normal((3, 4, 5)), rng.standard_normal((3, 4, 5))
        perm = rng.permutation(3)
        assert rse(x.transpose(perm), t.transpose(perm)) == pytest.approx(rse(x, t), rel=1e-12)


def test_success_rule():
    assert TrialOutcome(1e-2).success
    assert not TrialOutcome(1.0001e-2).success


def test_rank_match():
    assert rank_match((5, 5, 5), [5, 5, 5])
    assert not rank_match((5, 4, 5), (5, 5, 5))


class TestSpec:
    def test_scalar_rank_broadcast(self):
        assert SynthSpec((4, 5, 6), 2).true_ranks == (2, 2, 2)

    @pytest.mark.parametrize(
        "kw",
        [dict(true_ranks=(5, 5, 5)), dict(noise_delta=-1.0), dict(outlier_ratio=1.5), dict(true_ranks=(1, 1))],
    )
    def test_invalid(self, kw):
        base = dict(dims=(4, 4, 4), true_ranks=2)
        base.update(kw)
        with pytest.raises(ValueError):
            SynthSpec(**base)

    def test_text_round_trip(self):
        spec = SynthSpec((7, 8, 9), (2, 3, 4), 0.02, 0.01, 0.5, 42)
        assert SynthSpec.from_text(spec.to_text()) == spec
