import numpy as np
import pytest

from streamrec.core import UnknownEntityError, worker_rng
from streamrec.isgd import FactorModel


def closed_form_step(u, iv, eta, lam, sequential=False):
    """Independent plain-float evaluation of one factor update."""
    err = 1.0 - sum(a * b for a, b in zip(u, iv))
    new_u = [a + eta * (err * b - lam * a) for a, b in zip(u, iv)]
    base = new_u if sequential else u
    new_i = [b + eta * (err * a - lam * b) for a, b in zip(base, iv)]
    return new_u, new_i


def make_model(k=1, eta=0.05, lam=0.01, **kwargs):
    return FactorModel(k, eta, lam, **kwargs)


def set_pair(model, user, item, u_values, i_values):
    model.ensure_vectors(worker_rng(0, 0), user, item)
    model.user_vectors[user][:] = u_values
    model.item_vector(item)[:] = i_values


class TestEnsureVectors:
    def test_creates_vectors_with_seeded_normal_draws(self):
        model = make_model(k=10)
        model.ensure_vectors(worker_rng(5, 0), 1, 1)
        assert model.user_vectors[1].shape == (10,)
        assert model.item_vector(1).shape == (10,)
        expected = worker_rng(5, 0).normal(0.0, 0.1, 10)
        assert np.array_equal(model.user_vectors[1], expected)

    def test_idempotent_on_hit(self):
        model = make_model(k=4)
        rng = worker_rng(5, 0)
        model.ensure_vectors(rng, 1, 2)
        before_u = model.user_vectors[1].copy()
        before_i = model.item_vector(2).copy()
        model.ensure_vectors(rng, 1, 2)
        assert np.array_equal(model.user_vectors[1], before_u)
        assert np.array_equal(model.item_vector(2), before_i)

    def test_same_seed_same_draw_order_reproduces_state(self):
        states = []
        for _ in range(2):
            model = make_model(k=6)
            rng = worker_rng(99, 3)
            for user, item in [(1, 10), (2, 10), (1, 11)]:
                model.ensure_vectors(rng, user, item)
            states.append({u: v.copy() for u, v in model.user_vectors.items()})
        assert all(np.array_equal(states[0][u], states[1][u]) for u in states[0])


class TestPredict:
    def test_dot_product(self):
        model = make_model(k=1)
        set_pair(model, 1, 1, [0.5], [0.4])
        assert model.predict(1, 1) == pytest.approx(0.2, abs=1e-15)

    def test_zero_item_vector_scores_zero(self):
        model = make_model(k=3)
        set_pair(model, 1, 1, [0.2, 0.3, 0.4], [0.0, 0.0, 0.0])
        assert model.predict(1, 1) == 0.0

    def test_identity_case(self):
        model = make_model(k=4)
        basis = [1.0, 0.0, 0.0, 0.0]
        set_pair(model, 1, 1, basis, basis)
        assert model.predict(1, 1) == 1.0

    def test_unknown_entity_signals(self):
        model = make_model(k=2)
        with pytest.raises(UnknownEntityError):
            model.predict(1, 1)
        set_pair(model, 1, 1, [0.1, 0.1], [0.1, 0.1])
        with pytest.raises(UnknownEntityError):
            model.predict(1, 99)


class TestTrain:
    def test_worked_single_component_example(self):
        # err = 1 - 0.5*0.4 = 0.8; U' = 0.5 + 0.05*(0.8*0.4 - 0.01*0.5) = 0.51575
        # and I' = 0.4 + 0.05*(0.8*0.5 - 0.01*0.4) = 0.4198 from the same pair.
        model = make_model(k=1, eta=0.05, lam=0.01)
        set_pair(model, 1, 1, [0.5], [0.4])
        model.train(1, 1)
        assert model.user_vectors[1][0] == pytest.approx(0.51575, abs=1e-15)
        assert model.item_vector(1)[0] == pytest.approx(0.4198, abs=1e-15)

    def test_zero_error_is_pure_shrinkage(self):
        model = make_model(k=2, eta=0.05, lam=0.01)
        set_pair(model, 1, 1, [1.0, 0.0], [1.0, 0.0])
        model.train(1, 1)
        shrink = 1 - 0.05 * 0.01
        assert np.allclose(model.user_vectors[1], [shrink, 0.0], atol=1e-15)
        assert np.allclose(model.item_vector(1), [shrink, 0.0], atol=1e-15)

    def test_fixed_point_without_regularization(self):
        model = make_model(k=2, eta=0.05, lam=0.0)
        set_pair(model, 1, 1, [1.0, 0.0], [1.0, 0.0])
        model.train(1, 1)
        assert np.array_equal(model.user_vectors[1], [1.0, 0.0])
        assert np.array_equal(model.item_vector(1), [1.0, 0.0])

    def test_marks_seen_and_usage(self):
        model = make_model(k=2)
        set_pair(model, 7, 3, [0.1, 0.1], [0.1, 0.1])
        model.train(7, 3, timestamp=1234)
        assert model.seen[7] == {3}
        assert model.user_usage[7] == [1, 1234]
        assert model.item_usage[3] == [1, 1234]

    @pytest.mark.parametrize("sequential", [False, True])
    def test_matches_closed_form_on_random_instances(self, sequential):
        rng = np.random.default_rng(314)
        worst = 0.0
        for case in range(10_000):
            k = int(rng.integers(1, 9))
            eta = float(rng.uniform(0.005, 0.3))
            lam = float(rng.uniform(0.0, 0.2))
            model = make_model(k=k, eta=eta, lam=lam, sequential_update=sequential)
            u = rng.uniform(-2, 2, k)
            iv = rng.uniform(-2, 2, k)
            set_pair(model, 0, 0, u, iv)
            model.train(0, 0)
            exp_u, exp_i = closed_form_step(u.tolist(), iv.tolist(), eta, lam, sequential)
            worst = max(worst,
                        np.abs(model.user_vectors[0] - exp_u).max(),
                        np.abs(model.item_vector(0) - exp_i).max())
        assert worst <= 1e-12

    def test_simultaneous_and_sequential_differ(self):
        results = []
        for sequential in (False, True):
            model = make_model(k=1, eta=0.1, lam=0.0, sequential_update=sequential)
            set_pair(model, 1, 1, [0.5], [0.4])
            model.train(1, 1)
            results.append(float(model.item_vector(1)[0]))
        assert results[0] != results[1]

    def test_norm_stays_bounded_under_repeated_training(self):
        model = make_model(k=10, eta=0.05, lam=0.01)
        model.ensure_vectors(worker_rng(1, 0), 1, 1)
        for _ in range(100_000):
            model.train(1, 1)
        norm = float(np.linalg.norm(model.user_vectors[1]))
        assert np.isfinite(norm) and norm < 100.0


class TestRecommend:
    def test_empty_model_and_unknown_user(self):
        model = make_model(k=2)
        assert model.recommend(42, 10) == []

    def test_all_items_seen_yields_empty(self):
        model = make_model(k=2)
        rng = worker_rng(0, 0)
        for item in (1, 2, 3):
            model.ensure_vectors(rng, 5, item)
            model.train(5, item)
        assert model.recommend(5, 10) == []

    def test_scores_sorted_with_id_tiebreak(self):
        model = make_model(k=1)
        rng = worker_rng(0, 0)
        model.ensure_vectors(rng, 9, 0)
        model.user_vectors[9][:] = [1.0]
        for item, score in [(2, 0.9), (1, 0.2), (5, 0.9)]:
            model.ensure_vectors(rng, 9, item)
            model.item_vector(item)[:] = [score]
        model.seen[9].clear()
        assert model.recommend(9, 2) == [2, 5]
        assert model.recommend(9, 10) == [2, 5, 1, 0]

    def test_matches_brute_force_on_random_models(self):
        rng = np.random.default_rng(2718)
        for _ in range(200):
            model = make_model(k=3)
            model_rng = worker_rng(int(rng.integers(0, 2**31)), 0)
            users = list(range(4))
            items = list(range(12))
            for user in users:
                for item in rng.choice(items, size=6, replace=False):
                    model.ensure_vectors(model_rng, user, int(item))
                    if rng.random() < 0.5:
                        model.train(user, int(item))
            user = int(rng.integers(0, 4))
            n = int(rng.integers(1, 6))
            got = model.recommend(user, n)
            seen = model.seen.get(user, set())
            scored = sorted(((-model.predict(user, i), i) for i in model.item_ids()
                             if i not in seen))
            assert got == [i for _, i in scored[:n]]

    def test_never_recommends_seen(self):
        model = make_model(k=2)
        rng = worker_rng(3, 0)
        for item in range(20):
            model.ensure_vectors(rng, 1, item)
        for item in range(0, 20, 2):
            model.train(1, item)
        got = model.recommend(1, 20)
        assert set(got).isdisjoint(model.seen[1])

    def test_rank_by_distance_to_one(self):
        model = make_model(k=1, rank_by_distance_to_one=True)
        rng = worker_rng(0, 0)
        model.ensure_vectors(rng, 9, 0)
        model.user_vectors[9][:] = [1.0]
        for item, score in [(1, 0.7), (2, 1.1), (3, -0.2)]:
            model.ensure_vectors(rng, 9, item)
            model.item_vector(item)[:] = [score]
        model.seen[9].clear()
        # distances to 1: item2 -> 0.1, item1 -> 0.3, item0 -> |1-init|, item3 -> 1.2
        assert model.recommend(9, 2)[0] == 2


class TestEvict:
    def test_cascades_and_preserves_survivors(self):
        model = make_model(k=3)
        rng = worker_rng(11, 0)
        for user in range(3):
            for item in range(4):
                model.ensure_vectors(rng, user, item)
                model.train(user, item)
        survivor_vec = model.item_vector(3).copy()
        model.evict({1}, {0, 2})
        assert 1 not in model.user_vectors and 1 not in model.seen
        assert set(model.item_ids()) == {1, 3}
        assert np.array_equal(model.item_vector(3), survivor_vec)
        for seen in model.seen.values():
            assert seen <= {1, 3}
        assert set(model.item_usage) == {1, 3}
        assert set(model.user_usage) == {0, 2}
