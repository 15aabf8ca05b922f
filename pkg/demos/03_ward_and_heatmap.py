"""
Clustering term vectors and drawing the relation map
====================================================

Three loose blobs of points stand in for term vectors. Ward linkage
recovers them, and the similarity matrix is reordered so each blob sits
in one band of the heatmap.
"""

import numpy as np

from crtk.cluster import cut, hac_ward, order_matrix, summarize_by_cluster
from crtk.lexicon import SynonymGroup
from crtk.relations import SimilarityMatrix
from crtk.viz import RenderStyle, export_matrix, render_dendrogram, render_heatmap

rng = np.random.default_rng(3)
centres = np.array([[3.0, 0.0], [0.0, 3.0], [-3.0, -3.0]])
rows = [(f"term{i}", centres[i % 3] + rng.normal(scale=0.4, size=2)) for i in range(9)]

dendro = hac_ward(rows)
print("merge heights:", np.round(dendro.heights(), 2))
print("three clusters:", cut(dendro, 3))

# a made-up 9 x 4 similarity matrix whose rows follow the blobs
cols = [SynonymGroup(f"goal{j}", (f"goal{j}",)) for j in range(4)]
values = np.array([[0.8 - 0.3 * ((i % 3) == j % 3) + 0.05 * rng.normal() for j in range(4)] for i in range(9)])
matrix = SimilarityMatrix([SynonymGroup(n, (n,)) for n, _ in rows], cols, values.clip(-1, 1))

ordered = order_matrix(matrix, dendro, None, k_rows=3)
print("row order:", ordered.row_labels)
summary = summarize_by_cluster(ordered)
print("cluster means:\n", np.round(summary.values, 3))

style = RenderStyle(show_values=True)
render_heatmap(ordered, style, "demo_heatmap.svg")
render_dendrogram(dendro, style, "demo_dendrogram.svg")
export_matrix(ordered, "demo_matrix.csv", "delimited")
print("wrote demo_heatmap.svg, demo_dendrogram.svg and demo_matrix.csv")
