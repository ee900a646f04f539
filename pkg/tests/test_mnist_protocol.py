import numpy as np
import pytest

from latentcl.errors import ConfigError
from latentcl.mnist_latent import (
    gen_successor_task,
    initial_task,
    latent_of_digit,
    make_synthetic_mnist,
    make_target,
    run_mnist_experiment,
    task_targets,
    write_mnist_csv,
)
from latentcl.mnist_latent.protocol import (
    MNIST_CSV_HEADER,
    Profile,
    nearest_target_accuracy,
)
from latentcl.taskgen import substream

MICRO = Profile("micro", n_hidden=32, epochs_task1=4, epochs_task2=4,
                train_subset=None, test_subset=None, batch=100, eta=0.02)


@pytest.fixture(scope="module")
def tiny_data():
    return make_synthetic_mnist(1200, 300, seed=3)


class TestLatentCoding:
    @pytest.mark.parametrize("digit,bits", [
        (0, [0, 0, 0, 0]),
        (9, [1, 0, 0, 1]),
        (5, [0, 1, 0, 1]),
        (1, [0, 0, 0, 1]),
    ])
    def test_binary_codes(self, digit, bits):
        np.testing.assert_array_equal(latent_of_digit(digit), bits)

    def test_out_of_range(self):
        with pytest.raises(ValueError):
            latent_of_digit(10)

    def test_zero_readout_zero_target(self):
        assert np.all(make_target(3, np.zeros((10, 4))) == 0)

    def test_digit_zero_is_negative_half_row_sum(self):
        rng = substream(4, 300)
        b = rng.standard_normal((10, 4))
        np.testing.assert_allclose(make_target(0, b), -0.5 * b.sum(axis=1))

    def test_targets_pairwise_distinct_for_random_readout(self):
        rng = substream(5, 300)
        b = rng.standard_normal((10, 4))
        targets = np.stack([make_target(d, b) for d in range(10)])
        for i in range(10):
            for j in range(i + 1, 10):
                assert np.linalg.norm(targets[i] - targets[j]) > 1e-6

    def test_task_targets_matches_per_digit(self):
        rng = substream(6, 300)
        b = rng.standard_normal((10, 4))
        labels = np.array([0, 3, 9, 9, 5])
        batch = task_targets(labels, b)
        for row, d in zip(batch, labels):
            np.testing.assert_allclose(row, make_target(int(d), b))


class TestTaskGeneration:
    def test_initial_task_identity(self):
        t = initial_task(substream(7, 300))
        np.testing.assert_array_equal(t.permutation, np.arange(784))

    def test_identical_successor(self):
        t1 = initial_task(substream(8, 300))
        t2 = gen_successor_task(t1, 1.0, 1.0, substream(9, 300))
        np.testing.assert_array_equal(t1.permutation, t2.permutation)
        np.testing.assert_array_equal(t1.readout, t2.readout)

    def test_permutation_is_bijection(self):
        t1 = initial_task(substream(10, 300))
        t2 = gen_successor_task(t1, 0.3, 0.5, substream(11, 300))
        assert np.array_equal(np.sort(t2.permutation), np.arange(784))

    def test_fixed_point_fraction_tracks_rho_a(self):
        t1 = initial_task(substream(12, 300))
        fracs = []
        for seed in range(5):
            t2 = gen_successor_task(t1, 0.5, 0.5, substream(13 + seed, 300))
            fracs.append(np.mean(t2.permutation == np.arange(784)))
        assert abs(np.mean(fracs) - 0.5) <= 0.05

    def test_full_permutation_leaves_few_fixed_points(self):
        t1 = initial_task(substream(20, 300))
        fixed = []
        for seed in range(10):
            t2 = gen_successor_task(t1, 0.0, 0.5, substream(21 + seed, 300))
            fixed.append(int(np.sum(t2.permutation == np.arange(784))))
        assert np.mean(fixed) <= 5.0

    def test_readout_keep_count_exact(self):
        t1 = initial_task(substream(31, 300))
        t2 = gen_successor_task(t1, 1.0, 0.5, substream(32, 300))
        shared = np.sum(t2.readout == t1.readout)
        assert shared == 20

    def test_similarity_bounds_checked(self):
        t1 = initial_task(substream(33, 300))
        with pytest.raises(ValueError):
            gen_successor_task(t1, 1.5, 0.5, substream(34, 300))


class TestSyntheticData:
    def test_shapes_and_range(self, tiny_data):
        train, test = tiny_data
        assert train.images.shape == (1200, 784)
        assert test.images.shape == (300, 784)
        assert train.images.min() >= 0.0 and train.images.max() <= 1.0
        assert set(np.unique(train.labels)) <= set(range(10))

    def test_quantized_to_byte_levels(self, tiny_data):
        train, _ = tiny_data
        scaled = train.images * 255.0
        assert np.abs(scaled - np.rint(scaled)).max() <= 1e-9

    def test_deterministic(self):
        a, _ = make_synthetic_mnist(50, 10, seed=5)
        b, _ = make_synthetic_mnist(50, 10, seed=5)
        assert np.array_equal(a.images, b.images)

    def test_classes_are_learnable(self, tiny_data):
        # Nearest-prototype accuracy well above chance after a short fit.
        train, test = tiny_data
        res = run_mnist_experiment(train, test, MICRO, "vanilla", 1.0, 1.0, seed=0)
        assert res.transfer > 0.3


class TestRunExperiment:
    def test_unknown_variant(self, tiny_data):
        with pytest.raises(ConfigError):
            run_mnist_experiment(*tiny_data, MICRO, "mystery", 0.5, 0.5)

    def test_unknown_profile(self, tiny_data):
        with pytest.raises(ConfigError):
            run_mnist_experiment(*tiny_data, "enormous", "vanilla", 0.5, 0.5)

    def test_deterministic_given_seed(self, tiny_data):
        r1 = run_mnist_experiment(*tiny_data, MICRO, "vanilla", 0.5, 0.5, seed=7)
        r2 = run_mnist_experiment(*tiny_data, MICRO, "vanilla", 0.5, 0.5, seed=7)
        assert r1.transfer == r2.transfer and r1.retention == r2.retention

    def test_identical_tasks_transfer_positive(self, tiny_data):
        res = run_mnist_experiment(*tiny_data, MICRO, "vanilla", 1.0, 1.0, seed=0)
        assert res.transfer > 0.5 * res.baseline_task2

    def test_adaptive_gate_reuse_on_identical_tasks(self, tiny_data):
        # Needs enough gated training for the probe to look good; a dense
        # gate plus a longer micro schedule keeps this robust.
        longer = Profile("micro12", n_hidden=32, epochs_task1=12, epochs_task2=4,
                         train_subset=None, test_subset=None, batch=100, eta=0.02)
        res = run_mnist_experiment(*tiny_data, longer, "adaptive_gated", 1.0, 1.0,
                                   alpha=0.7, seed=0)
        assert res.probe_rho_g is not None and res.probe_rho_g > 0.5

    def test_gate_density_within_binomial_bounds(self, tiny_data):
        from latentcl.mnist_latent.protocol import _bernoulli_gate

        rng = substream(35, 300)
        for n, alpha in ((784, 0.3), (200, 0.5)):
            g = _bernoulli_gate(n, alpha, rng)
            sd = np.sqrt(n * alpha * (1 - alpha))
            assert abs(g.sum() - n * alpha) <= 4 * sd

    def test_csv_written_atomically(self, tiny_data, tmp_path):
        res = run_mnist_experiment(*tiny_data, MICRO, "vanilla", 0.5, 0.5, seed=0)
        dest = tmp_path / "mnist.csv"
        write_mnist_csv([res], dest)
        lines = dest.read_text().splitlines()
        assert lines[0] == MNIST_CSV_HEADER
        assert len(lines) == 2
        assert not list(tmp_path.glob("*.tmp*"))

    def test_nearest_target_decoding_accuracy(self, tiny_data):
        train, test = tiny_data
        res = run_mnist_experiment(train, test, MICRO, "vanilla", 1.0, 1.0, seed=1)
        del res  # accuracy checked on a freshly trained net below
        from latentcl.mnist_latent.mlp import init_params, sgd_epoch
        from latentcl.mnist_latent.protocol import initial_task

        task = initial_task(substream(36, 300))
        targets = task_targets(train.labels, task.readout)
        params = init_params(32, substream(37, 300))
        rng = substream(38, 300)
        for _ in range(6):
            sgd_epoch(params, train.images, targets, 100, 0.02, rng)
        acc = nearest_target_accuracy(params, test.images, test.labels, task.readout)
        assert acc > 0.5
