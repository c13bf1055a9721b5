"""End-to-end weakly supervised symbol grounding.

Only sequence-level accept/reject labels are observed; the perception
network must learn which digit each image shows purely from whether the
whole sequence satisfies the formula.  Pipeline per batch:

    images -> perception -> fuzzy trace lambda
    (lambda, y=0) -> ILR refinement against (phi -> y) & (!phi -> !y)
    BCE(y-hat, sequence label) -> backprop -> Adam

Runs on the bundled synthetic digit images; pass an MNIST directory to
the CLI (`fltlf gen-data --mnist-dir ...`) for the real thing.
"""

from fltlf import Alphabet, parse_formula
from fltlf.datasets import (
    SamplingPlan,
    attach_images,
    sample_symbolic_dataset,
    split_image_pools,
)
from fltlf.mnist import synthetic_digit_store
from fltlf.training import TrainConfig, evaluate_grounding, evaluate_sequence, train

alphabet = Alphabet(["p0", "p1"])
formula = "G(p0 -> X p1)"
phi = parse_formula(formula, alphabet)

print(f"formula: {formula}  (atom p0 -> digit 0, p1 -> digit 1)")

plan = SamplingPlan(alphabet=alphabet, mode="me", protocol="exhaustive",
                    min_len=1, max_len=5)
split = sample_symbolic_dataset(phi, plan)
print(f"symbolic traces: {len(split.train)} "
      f"({sum(l for _, l in split.train)} accepted)")

store = synthetic_digit_store(40, split="train", seed=0)
pools = split_image_pools(store, seed=0)
train_recs = attach_images(split.train, phi, alphabet, "me", pools["train"], 5, 0)
test_recs = attach_images(split.test, phi, alphabet, "me", pools["test"], 5, 1)
print(f"image sequences: {len(train_recs)} train / {len(test_recs)} test "
      "(disjoint image pools)")

cfg = TrainConfig(formula=formula, alphabet=alphabet, mode="me",
                  epochs=10, seed=0)
model, metrics = train(cfg, train_recs, store)
print("\nepoch losses:")
for i, loss in enumerate(metrics.epoch_losses, 1):
    print(f"  epoch {i:2d}: {loss:.4f}")

grounding, _ = evaluate_grounding(model, test_recs, store, "me")
sequence = evaluate_sequence(model, test_recs, store, cfg)
print(f"\ngrounding accuracy (per image): {grounding:.2f}%")
print(f"sequence accuracy (accept/reject): {sequence:.2f}%")
print(f"trained in {metrics.wall_minutes:.2f} min")
