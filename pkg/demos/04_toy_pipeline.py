"""
The whole pipeline on the bundled toy corpus
============================================

Runs every stage from raw articles to SVG heatmaps, then runs again to
show the cache at work. Takes a few seconds.
"""

import sys
from importlib import resources
from pathlib import Path

from crtk.pipeline import PipelineConfig, run
from crtk.viz import import_matrix

out = Path(sys.argv[1] if len(sys.argv) > 1 else "toy_out").resolve()
config_path = Path(str(resources.files("crtk").joinpath("data", "toy", "config.json")))
config = PipelineConfig.load(config_path, [(["output"], str(out))])

result = run("all", config)
print(result.status)

# a second run finds nothing to do
run("all", config)

matrix = import_matrix(out / "ordered_input_data__objective.json")
print(matrix.shape, "ordered matrix, rows:", matrix.row_labels)
print("artifacts in", out, ":", len(list(out.iterdir())))
