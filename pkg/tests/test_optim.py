"""Adam updates, parameter storage, and the finite-difference oracle."""

import numpy as np
import pytest

from misinfo import autodiff as ad
from misinfo.autodiff import Tensor
from misinfo.errors import ConfigError, NondeterministicLossError, ShapeMismatchError
from misinfo.optim import ParamStore, finite_diff_check


class TestParamStore:
    def test_moments_created_per_parameter_with_matching_shape(self):
        store = ParamStore()
        store.add("w", np.ones((2, 3)))
        store.add("b", 0.0)
        assert store._m["w"].shape == (2, 3) and store._v["w"].shape == (2, 3)
        assert store._m["b"].shape == () and len(store) == 2

    def test_duplicate_name_rejected(self):
        store = ParamStore()
        store.add("w", 1.0)
        with pytest.raises(ConfigError):
            store.add("w", 2.0)

    def test_step_counter_monotone(self):
        store = ParamStore()
        store.add("w", 1.0)
        grads = {"w": np.asarray(1.0)}
        store.adam_step(grads)
        store.adam_step(grads)
        assert store.step_count == 2

    def test_copy_is_independent(self):
        store = ParamStore()
        w = store.add("w", np.array([1.0, 2.0]))
        clone = store.copy()
        w.data[0] = 99.0
        assert clone["w"].data[0] == 1.0


class TestAdam:
    def test_zero_gradients_and_zero_moments_is_noop_on_values(self):
        store = ParamStore()
        store.add("w", np.array([1.5, -2.0]))
        store.adam_step({"w": np.zeros(2)})
        np.testing.assert_array_equal(store["w"].data, [1.5, -2.0])
        assert store.step_count == 1

    def test_first_step_closed_form(self):
        # Bias correction makes m_hat / sqrt(v_hat) = 1 on the first step,
        # so the parameter moves by ~lr regardless of gradient scale.
        store = ParamStore()
        store.add("p", 1.0)
        store.adam_step({"p": np.asarray(1.0)}, lr=0.001)
        assert store["p"].data == pytest.approx(1.0 - 0.001, abs=1e-9)

    def test_shape_mismatch_raises(self):
        store = ParamStore()
        store.add("w", np.ones(3))
        with pytest.raises(ShapeMismatchError):
            store.adam_step({"w": np.ones(4)})

    def test_uses_stored_gradients_by_default(self):
        store = ParamStore()
        w = store.add("w", 2.0)
        loss = ad.mul(w, w)
        loss.backward()
        store.adam_step(lr=0.1)
        assert store["w"].data < 2.0


class TestFiniteDiffCheck:
    def test_quadratic_loss(self):
        store = ParamStore()
        store.add("p", 3.0)
        err = finite_diff_check(lambda s: ad.mul(s["p"], s["p"]), store, epsilon=1e-5)
        assert err < 1e-6

    @pytest.mark.parametrize("epsilon", [1e-8, 1e-2, 0.5])
    def test_epsilon_out_of_range(self, epsilon):
        store = ParamStore()
        store.add("p", 1.0)
        with pytest.raises(ConfigError):
            finite_diff_check(lambda s: s["p"], store, epsilon=epsilon)

    def test_nondeterministic_loss_detected(self):
        store = ParamStore()
        store.add("p", 1.0)
        state = {"calls": 0}

        def flaky(s):
            state["calls"] += 1
            return ad.mul(s["p"], Tensor(float(state["calls"])))

        with pytest.raises(NondeterministicLossError):
            finite_diff_check(flaky, store)

    def test_restores_parameters_exactly(self):
        store = ParamStore()
        store.add("p", np.array([0.1, 0.2, 0.3]))
        before = store["p"].data.copy()
        finite_diff_check(lambda s: ad.tensor_sum(ad.mul(s["p"], s["p"])), store)
        np.testing.assert_array_equal(store["p"].data, before)

    def test_coordinate_sampling(self):
        store = ParamStore()
        store.add("w", np.linspace(0.1, 1.0, 50))
        err = finite_diff_check(
            lambda s: ad.tensor_sum(ad.exp(s["w"])),
            store,
            max_coords_per_param=5,
            rng=np.random.default_rng(0),
        )
        assert err < 1e-6


def test_small_full_model_loss_passes_gradient_check(rng):
    """Whole pipeline on a 2-sentence, 1-tree article: analytic == numeric."""
    from misinfo.forward import article_forward, build_article_cache, initial_params, link_article
    from misinfo.kernels import KernelBank
    from misinfo.trainer import TrainConfig, article_loss, compute_corpus_tau

    from conftest import make_article, make_tree

    dim = 5
    cfg = TrainConfig(num_kernels=3, embedding_dim=dim)
    bank = KernelBank.default(3)
    tree = make_tree("t0", rng.normal(size=(3, dim)))
    article = make_article("a0", rng.normal(size=(2, dim)), [tree], label="fake")
    cache = build_article_cache(article, bank)
    params = initial_params(dim, bank.size, cfg, rng)
    tau = compute_corpus_tau([cache], params, cfg)
    from misinfo.trainer import _tree_values

    links = link_article(cache, _tree_values(cache, params, cfg), tau, cfg)

    def loss_fn(p):
        return article_loss(article_forward(cache, links, p, cfg), 0, cfg)

    err = finite_diff_check(loss_fn, params, epsilon=1e-5)
    assert err < 1e-4
