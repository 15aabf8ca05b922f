"""
Picking a context window by synonym similarity
==============================================

Each pair ``a{i}``/``b{i}`` only shares the word three positions away,
so short windows never see the evidence that they mean the same thing.
"""

import numpy as np

from crtk.embedding import TrainConfig
from crtk.lexicon import SynonymPairList
from crtk.preprocess import TokenStream
from crtk.tuning import grid_search, product_grid

rng = np.random.default_rng(0)
sentences = []
for _ in range(30):
    for i in rng.permutation(30):
        for tok in (f"a{i}", f"b{i}"):
            sentences.append((f"c{i}", f"u{tok}", tok, f"v{tok}", f"c{i}"))
streams = [TokenStream(tuple(sentences))]
pairs = SynonymPairList(tuple((f"a{i}", f"b{i}") for i in range(30)))

base = TrainConfig(vector_size=20, epochs=20, min_count=1, subsample_t=0)
report = grid_search(streams, product_grid(base, window=[1, 2, 3]), pairs)

for row in report.rows:
    print(f"window {row.config.window}: mean synonym similarity {row.objective:.3f}")
print("best window:", report.best_config.window)

# the same report as a table
print(report.to_csv(include_timing=False))
