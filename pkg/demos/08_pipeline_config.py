"""Drive the whole chain from one YAML-style configuration.

``run_pipeline`` writes the matrix, the trace, the images and a JSON
report; running it twice with the same seed produces identical files.
The same run is available as ``spikit run --config file.yaml``.
"""

import json

from _common import OUT
from spikit.pipeline import PipelineConfig, bundled_config, run_pipeline

cfg = PipelineConfig.from_mapping(bundled_config(), [
    f"output.dir={OUT / 'pipeline'}",
    "matrix={degree: 14, rows: 127, cols: 129}",
    "image={source: usaf, pixels: 762, block: 6}",
    "active={width: 127, height: 127}",
    "measurement.noise_sigma=0.002",
    "measurement.adc_bits=14",
    "sampling.stride=2",
])
report = run_pipeline(cfg)
print(json.dumps(report["quality"], indent=2))
print("artifacts:", ", ".join(sorted(report["artifacts"])))
