# # Per-layer paradigm switching
#
# The 2048-20-4 gesture network is compiled all serial, all parallel, with
# classifier-driven switching and with the ideal (compile both) choice.
# The classifier is trained on a small grid here for speed.

from snnswitch.classifier import train_adaboost
from snnswitch.dataset import SweepConfig, generate_sweep, label_sweep
from snnswitch.switching import compile_network, delay_range_report, gesture_report
from snnswitch.model import gesture_network

rows = label_sweep(generate_sweep(SweepConfig(
    source_range=(50, 250, 500), target_range=(50, 250, 500),
    density_range=(0.1, 0.5, 1.0), delay_range=(1, 4, 8, 16))))
model = train_adaboost(rows, n_rounds=50)

net = gesture_network()
for mode in ("serial", "parallel", "predicted", "ideal"):
    plan = compile_network(net, mode, model)
    print(f"{mode:<10}{plan.pe_total:>3} PEs", [(lp.paradigm, lp.pe_count) for lp in plan.layers])

rep = gesture_report(model)
print("ordered switching <= parallel <= serial:", rep["ordered"])
for line in rep["explanation"]:
    print(" ", line)

for r in delay_range_report(rows, model):
    print(f"delay {r.delay_range:>2}: serial {r.avg_pe_serial:6.2f} parallel {r.avg_pe_parallel:6.2f} "
          f"predicted {r.avg_pe_predicted:6.2f} ideal {r.avg_pe_ideal:6.2f}")
