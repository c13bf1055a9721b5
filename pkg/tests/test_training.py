import numpy as np
import pytest

from fltlf import Alphabet, parse_formula
from fltlf.autodiff import Tensor
from fltlf.datasets import (
    SamplingPlan,
    attach_images,
    sample_symbolic_dataset,
    split_image_pools,
)
from fltlf.formulas import FormulaError
from fltlf.mnist import synthetic_digit_store
from fltlf.perception import PerceptionModel
from fltlf.training import (
    BENCH_COLUMNS,
    Metrics,
    TrainConfig,
    evaluate_grounding,
    evaluate_sequence,
    rq1_configurations,
    rq2_configurations,
    run_benchmark,
    train,
)

AB = Alphabet(["p0", "p1"])


class OneHotModel(PerceptionModel):
    """Perception stub that looks each observation up in the store."""

    def __init__(self, store, n_atoms):
        super().__init__(n_atoms, "me", seed=0)
        norm = store.normalized(np.arange(len(store)))
        self.lookup = {img.reshape(-1).tobytes(): int(lab)
                       for img, lab in zip(norm, store.labels)}

    def forward(self, images):
        x = images.data if isinstance(images, Tensor) else np.asarray(images)
        out = np.zeros((x.shape[0], self.n_atoms))
        for i, row in enumerate(x):
            out[i, self.lookup[row.reshape(-1).tobytes()]] = 1.0
        return Tensor(out)


def make_dataset(formula_text, mode="me", max_len=4, copies=2, seed=0):
    phi = parse_formula(formula_text, AB)
    plan = SamplingPlan(alphabet=AB, mode=mode, min_len=1, max_len=max_len,
                        seed=seed)
    split = sample_symbolic_dataset(phi, plan)
    store = synthetic_digit_store(25, split="train", seed=0)
    pools = split_image_pools(store, seed=seed)
    train_recs = attach_images(split.train, phi, AB, mode, pools["train"],
                               copies, seed)
    test_recs = attach_images(split.test, phi, AB, mode, pools["test"],
                              copies, seed + 1)
    return train_recs, test_recs, store


class TestTrainConfig:
    def test_zero_epochs_rejected(self):
        with pytest.raises(FormulaError):
            TrainConfig(formula="p0", alphabet=AB, epochs=0)

    def test_nonpositive_timeout_rejected(self):
        with pytest.raises(FormulaError):
            TrainConfig(formula="p0", alphabet=AB, timeout_minutes=0)

    def test_default_ilr_is_single_pass(self):
        cfg = TrainConfig(formula="p0", alphabet=AB)
        assert cfg.ilr.max_iterations == 1


class TestCrispConsistency:
    @pytest.mark.parametrize("text", ["F p0", "p0 U p1", "G(p0 -> X p1)",
                                      "!(F p0 & F p1)"])
    def test_ground_truth_perception_gives_perfect_accuracy(self, text):
        train_recs, test_recs, store = make_dataset(text, copies=1)
        model = OneHotModel(store, 2)
        cfg = TrainConfig(formula=text, alphabet=AB, mode="me")
        assert evaluate_sequence(model, test_recs, store, cfg) == 100.0
        grounding, exact = evaluate_grounding(model, test_recs, store, "me")
        assert grounding == 100.0 and exact == 100.0


class TestTraining:
    def test_loss_decreases(self):
        train_recs, _, store = make_dataset("F p0")
        cfg = TrainConfig(formula="F p0", alphabet=AB, epochs=5, seed=0)
        _, metrics = train(cfg, train_recs, store)
        assert len(metrics.epoch_losses) == 5
        assert metrics.epoch_losses[-1] < metrics.epoch_losses[0]

    def test_learns_the_grounding(self):
        train_recs, test_recs, store = make_dataset("p0 U p1", copies=3)
        cfg = TrainConfig(formula="p0 U p1", alphabet=AB, epochs=8, seed=1)
        model, _ = train(cfg, train_recs, store)
        grounding, _ = evaluate_grounding(model, test_recs, store, "me")
        assert grounding >= 95.0

    def test_reproducible_given_seed(self):
        train_recs, _, store = make_dataset("F p0")
        cfg = TrainConfig(formula="F p0", alphabet=AB, epochs=2, seed=7)
        _, m1 = train(cfg, train_recs, store)
        _, m2 = train(cfg, train_recs, store)
        assert m1.epoch_losses == m2.epoch_losses

    def test_timeout_path_flags_partial_metrics(self):
        train_recs, _, store = make_dataset("F p0")
        cfg = TrainConfig(formula="F p0", alphabet=AB, epochs=20,
                          timeout_minutes=1e-7)
        _, metrics = train(cfg, train_recs, store)
        assert metrics.timed_out
        assert len(metrics.epoch_losses) < 20

    def test_nme_head_trains(self):
        train_recs, test_recs, store = make_dataset("F p0", mode="nme",
                                                    max_len=3, copies=2)
        cfg = TrainConfig(formula="F p0", alphabet=AB, mode="nme", epochs=6,
                          seed=0)
        model, metrics = train(cfg, train_recs, store)
        assert metrics.epoch_losses[-1] < metrics.epoch_losses[0]
        grounding, _ = evaluate_grounding(model, test_recs, store, "nme")
        assert grounding > 50.0


class TestEvaluation:
    def test_mode_mismatch_rejected(self):
        _, test_recs, store = make_dataset("F p0", copies=1)
        model = PerceptionModel(2, "nme")
        with pytest.raises(FormulaError):
            evaluate_grounding(model, test_recs, store, "me")

    def test_empty_records(self):
        store = synthetic_digit_store(5, seed=0)
        model = PerceptionModel(2, "me")
        assert evaluate_grounding(model, [], store, "me") == (0.0, 0.0)
        cfg = TrainConfig(formula="p0", alphabet=AB)
        assert evaluate_sequence(model, [], store, cfg) == 0.0


class TestBenchmark:
    def test_rq1_shape(self):
        configs = rq1_configurations(("me", "nme"))
        assert len(configs) == 40  # 20 templates x 2 modes
        assert all(c["suite"] == "rq1" for c in configs)

    def test_rq2_shape(self):
        configs = rq2_configurations(("me",))
        assert len(configs) == 45  # 3 atom counts x 5 formulas x 3 lengths
        assert {c["n_atoms"] for c in configs} == {2, 3, 4}
        assert {c["max_len"] for c in configs} == {5, 10, 20}

    def test_empty_selection_rejected(self, tmp_path):
        with pytest.raises(FormulaError):
            run_benchmark("rq1", tmp_path / "out.csv", subset=slice(0, 0))

    def test_unknown_suite_rejected(self, tmp_path):
        with pytest.raises(FormulaError):
            run_benchmark("rq9", tmp_path / "out.csv")

    def test_single_cell_runs_and_emits_csv(self, tmp_path):
        out = tmp_path / "bench.csv"
        rows = run_benchmark("rq1", out, modes=("me",), subset=slice(0, 1),
                             epochs=1, copies=1, timeout_minutes=2.0)
        assert len(rows) == 1
        header = out.read_text().splitlines()[0]
        assert header.split(",") == list(BENCH_COLUMNS)
        assert rows[0]["error"] == ""


class TestMetrics:
    def test_defaults(self):
        m = Metrics()
        assert m.epoch_losses == [] and not m.timed_out
