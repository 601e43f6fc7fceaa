"""Config-driven end-to-end runs: write a fixture, run two pipelines, sweep.

Everything here is also reachable from the command line:
    stclust run --set pipeline=sca_ae --set embeddings=... --out results/
"""

import json
import tempfile
from pathlib import Path

import numpy as np

from stclust import EmbeddingMatrix, LabelVector, PipelineConfig, run_pipeline, run_sweep, write_embeddings
from stclust.io import write_labels

work = Path(tempfile.mkdtemp())
rng = np.random.default_rng(0)
centers = rng.standard_normal((3, 32)) * 4
labels = np.repeat(np.arange(3), 50)
X = (centers[labels] + rng.standard_normal((150, 32))).astype(np.float32)
write_embeddings(EmbeddingMatrix(data=X), work / "emb.stce")
write_labels(LabelVector.from_raw(labels), work / "labels.txt")

common = dict(embeddings=str(work / "emb.stce"), labels=str(work / "labels.txt"),
              runs=3, base_seed=0)

baseline = run_pipeline(PipelineConfig(pipeline="baseline", **common), work / "baseline")
ae = run_pipeline(PipelineConfig(pipeline="ae", ae_layers="d:64:32:10", ae_epochs=10, **common),
                  work / "ae")
print("baseline ACC:", baseline["metrics"]["acc_mean"])
print("AE ACC:      ", ae["metrics"]["acc_mean"])
print("report keys: ", sorted(baseline.keys()))
print("artifacts:   ", sorted(p.name for p in (work / "ae" / "runs" / "seed_0").iterdir()))

rows = run_sweep(PipelineConfig(pipeline="ae", ae_layers="d:32:10", **common),
                 axis="epochs", values=[5, 15], out_dir=work / "sweep")
print("\nsweep over pretraining epochs:")
print((work / "sweep" / "sweep.csv").read_text())
print("full report written to", work / "ae" / "report.json")
print(json.dumps(ae["metrics"], indent=2))
