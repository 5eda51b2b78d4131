"""Does committee selection actually beat random sampling?  A small replica
of the acceptance experiment: same corpus, one seed, both arms traced.

The full five-seed version runs in the acceptance suite; this one prints a
single comparison in about half a minute.
"""

from spanloop.simulate import simulate_strategy
from spanloop.synthetic import generate_corpus

pool = generate_corpus(1000, seed=100, relevant_fraction=0.3)
heldout = generate_corpus(800, seed=200, relevant_fraction=0.6, trigger_distribution="uniform")

print("strategy       " + "  ".join(f"{n:>4d}" for n in range(20, 221, 25)))
for strategy in ("qbc_density", "random"):
    r = simulate_strategy(pool, heldout, strategy, seed=0, n_seed=20, k=25, iterations=8)
    cells = "  ".join(f"{f1:.2f}" for f1 in r.f1_trace)
    reach = r.labeled_to_reach(0.85)
    print(f"{strategy:12s}   {cells}   reaches 0.85 at {reach:.0f} labeled")
