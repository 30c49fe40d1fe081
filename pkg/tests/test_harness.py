import numpy as np
import pytest

from conftest import one_hot, random_params, small_spec
from oracles import counting_accuracy
from test_data import write_idx_images, write_idx_labels

from mlresnet.data import Dataset, gen_circles
from mlresnet.errors import ConfigError
from mlresnet.harness import (
    CSV_HEADER,
    ExperimentConfig,
    accuracy,
    run,
    write_csv,
)
from mlresnet.mgopt import parse_schedule, vcycle_cost
from mlresnet.net import ParamVector, predict


class TestAccuracy:
    def test_perfect_predictions(self, rng):
        spec = small_spec()
        params = random_params(spec, rng)
        inputs = rng.uniform(-2, 2, (40, 2))
        probs = predict(params, spec, inputs)
        labels = np.eye(2)[np.argmax(probs, axis=1)]
        assert accuracy(params, spec, Dataset(inputs, labels)) == 1.0

    def test_uniform_prediction_breaks_ties_to_class_zero(self, rng):
        spec = small_spec()
        params = ParamVector.zeros(spec)  # all logits equal
        labels = one_hot(2, 50, rng)
        ds = Dataset(rng.uniform(-1, 1, (50, 2)), labels)
        assert accuracy(params, spec, ds) == labels[:, 0].mean()

    def test_matches_counting_oracle(self, rng):
        spec = small_spec(classes=3)
        params = random_params(spec, rng)
        ds = Dataset(rng.uniform(-2, 2, (30, 2)), one_hot(3, 30, rng))
        probs = predict(params, spec, ds.inputs)
        expected = counting_accuracy(probs.tolist(), ds.labels.tolist())
        assert accuracy(params, spec, ds) == pytest.approx(expected, abs=1e-15)


class TestConfig:
    def test_dataset_defaults(self):
        circles = ExperimentConfig(dataset="circles")
        assert (circles.width, circles.reg_weight, circles.learning_rate,
                circles.batch_size, circles.target_accuracy) == (3, 1e-4, 0.1, 0, 1.0)
        mnist = ExperimentConfig(dataset="mnist")
        assert (mnist.width, mnist.reg_weight, mnist.learning_rate,
                mnist.batch_size, mnist.target_accuracy) == (10, 1e-5, 0.01, 1000, 0.93)

    def test_explicit_values_kept(self):
        cfg = ExperimentConfig(dataset="circles", width=5, learning_rate=0.3)
        assert cfg.width == 5 and cfg.learning_rate == 0.3

    def test_schedule_defaults_to_level_count(self):
        assert ExperimentConfig(levels=4).schedule == "[(1),1,2,{2}]"
        assert ExperimentConfig(levels=1).schedule == "[{1}]"

    def test_validation(self):
        with pytest.raises(ConfigError):
            ExperimentConfig(dataset="imagenet")
        with pytest.raises(ConfigError):
            ExperimentConfig(target_accuracy=0.0)
        with pytest.raises(ConfigError):
            ExperimentConfig(accounting="amortized")
        with pytest.raises(ConfigError):
            ExperimentConfig(batch_size=-1)
        with pytest.raises(ConfigError):
            run(ExperimentConfig(levels=2, schedule="[(1),1,{2}]"))
        with pytest.raises(ConfigError):
            run(ExperimentConfig(dataset="mnist"))  # no IDX paths


def tiny_run(tmp_path=None, **overrides):
    settings = dict(dataset="circles", levels=2, blocks=8, max_vcycles=3,
                    out=str(tmp_path / "m.csv") if tmp_path else None, seed=2)
    settings.update(overrides)
    return run(ExperimentConfig(**settings))


class TestRun:
    def test_zero_cycles_emits_single_record(self):
        _, records = tiny_run(max_vcycles=0)
        assert len(records) == 1
        assert records[0].v_cycle == 0
        assert records[0].work_units == 0.0

    def test_one_record_per_cycle_and_work_progression(self):
        _, records = tiny_run(max_vcycles=4)
        assert [r.v_cycle for r in records] == [0, 1, 2, 3, 4]
        unit = vcycle_cost(parse_schedule("[(1),{2}]"))
        for i, rec in enumerate(records):
            assert rec.work_units == pytest.approx(i * unit, abs=1e-12)
        work = [r.work_units for r in records]
        assert all(b > a for a, b in zip(work, work[1:]))

    def test_measured_accounting_matches_nominal_on_reference_schedule(self):
        _, nominal = tiny_run(max_vcycles=3, accounting="paper")
        _, measured = tiny_run(max_vcycles=3, accounting="measured")
        for a, b in zip(nominal, measured):
            assert a.work_units == pytest.approx(b.work_units, abs=1e-12)

    def test_csv_written_and_bitwise_reproducible(self, tmp_path):
        path_a = tmp_path / "a.csv"
        path_b = tmp_path / "b.csv"
        tiny_run(max_vcycles=3, out=str(path_a))
        tiny_run(max_vcycles=3, out=str(path_b))
        content = path_a.read_bytes()
        assert content == path_b.read_bytes()
        header = content.decode().splitlines()[0]
        assert header == ",".join(CSV_HEADER)
        assert len(content.decode().splitlines()) == 1 + 4

    def test_wall_clock_suppressed_only_in_deterministic_mode(self):
        _, records = tiny_run(max_vcycles=2)
        assert all(r.wall_time_s == 0.0 for r in records)
        _, timed = tiny_run(max_vcycles=2, deterministic=False)
        assert timed[-1].wall_time_s > 0.0

    def test_minibatch_mode_records_each_cycle(self):
        _, records = tiny_run(levels=1, max_vcycles=6, batch_size=800)
        # 2000 samples in batches of 800 -> 3 cycles per epoch
        assert [r.v_cycle for r in records] == [0, 1, 2, 3, 4, 5, 6]

    def test_stops_at_target_accuracy(self):
        _, records = tiny_run(max_vcycles=50, target_accuracy=0.4)
        assert len(records) <= 51
        assert records[-1].validation_accuracy >= 0.4

    def test_subset_truncates_training_split(self):
        theta_full, _ = tiny_run(max_vcycles=1)
        theta_sub, _ = tiny_run(max_vcycles=1, subset=500)
        assert not theta_full.equals(theta_sub)

    def test_records_flushed_on_numeric_failure(self, tmp_path):
        from mlresnet.errors import NumericOverflowError

        path = tmp_path / "partial.csv"
        with pytest.raises(NumericOverflowError):
            tiny_run(max_vcycles=200, learning_rate=1e12, out=str(path))
        lines = path.read_text().splitlines()
        assert lines[0] == ",".join(CSV_HEADER)
        assert len(lines) >= 2  # header plus at least the initial record


class TestWriteCsv:
    def test_full_precision_roundtrip(self, tmp_path):
        from mlresnet.harness import TrainingRecord

        rec = TrainingRecord(3, 1 / 3, 2 / 3, 5.1875, 0.0)
        path = tmp_path / "x.csv"
        write_csv([rec], path)
        line = path.read_text().splitlines()[1].split(",")
        assert float(line[1]) == 1 / 3
        assert float(line[3]) == 5.1875


class TestMnistPipeline:
    def test_end_to_end_on_synthetic_idx(self, tmp_path):
        rng = np.random.default_rng(0)
        # 10-class blobs on a 4x4 grid, linearly separable enough to learn
        centers = rng.uniform(40, 215, (10, 16))
        counts = 30
        images, labels = [], []
        for digit in range(10):
            pix = centers[digit] + rng.normal(0, 8, (counts, 16))
            images.append(np.clip(pix, 0, 255).reshape(counts, 4, 4))
            labels.extend([digit] * counts)
        images = np.concatenate(images).astype(np.uint8)
        labels = np.array(labels, dtype=np.uint8)
        order = rng.permutation(len(labels))
        split = len(labels) - 60
        write_idx_images(tmp_path / "train-img", images[order[:split]])
        write_idx_labels(tmp_path / "train-lab", labels[order[:split]])
        write_idx_images(tmp_path / "test-img", images[order[split:]])
        write_idx_labels(tmp_path / "test-lab", labels[order[split:]])
        cfg = ExperimentConfig(
            dataset="mnist", levels=2, blocks=8, max_vcycles=40,
            batch_size=120, target_accuracy=0.9, seed=1,
            mnist_train_images=str(tmp_path / "train-img"),
            mnist_train_labels=str(tmp_path / "train-lab"),
            mnist_test_images=str(tmp_path / "test-img"),
            mnist_test_labels=str(tmp_path / "test-lab"),
        )
        _, records = run(cfg)
        assert records[-1].validation_accuracy > records[0].validation_accuracy
