# # Labelling layers and training the paradigm classifier
#
# Each sampled layer is compiled both ways and labelled with the paradigm
# needing fewer PEs. A small grid keeps this demo fast; the full sweep is
# `snnswitch dataset` with the default config.

from collections import Counter

from snnswitch.baselines import train_baselines
from snnswitch.classifier import split_train_test, train_adaboost
from snnswitch.dataset import SweepConfig, generate_sweep, label_sweep, marginal_stats

cfg = SweepConfig(
    source_range=(50, 200, 350, 500),
    target_range=(50, 200, 350, 500),
    density_range=(0.2, 0.5, 0.8, 1.0),
    delay_range=(1, 2, 4, 8, 16),
    base_seed=0,
)
rows = label_sweep(generate_sweep(cfg))
print(len(rows), "rows", Counter(r.label for r in rows))

# Parallel wins at short delays and high density.
for table_name, table in marginal_stats(rows).items():
    print(table_name, table[:3])

train, test = split_train_test(rows, 0.8, seed=0)
model = train_adaboost(train, n_rounds=50, seed=0, test_rows=test)
print(f"{len(model.stumps)} stumps, train {model.train_accuracy:.3f}, test {model.test_accuracy:.3f}")
for stump, alpha in model.stumps[:5]:
    print(f"  {stump}  alpha={alpha:.3f}")

print(train_baselines(rows, seed=0, n_seeds=3, n_rounds=50).table())
