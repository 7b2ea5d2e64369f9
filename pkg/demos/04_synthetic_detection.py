"""End to end on a small synthetic corpus.

Machine documents favour stereotyped entity values, so replacing entities
costs them more likelihood than it costs human documents. The detector sees
that response; the baseline sees only the original mean log-likelihood.
"""

import tempfile

from privdetect import RunConfig, generate_reference, generate_synthetic
from privdetect.features import read_features_jsonl
from privdetect.pipeline import baseline_features, evaluate_on_split, fit_and_evaluate, fit_scorer, run_pipeline

docs = generate_synthetic(100, seed=0)
reference = generate_reference(600, seed=0)

with tempfile.TemporaryDirectory() as out:
    config = RunConfig(out=out, grid_count=10, seed=0)
    metrics = run_pipeline(config, docs, reference)
    print("trajectory detector:", {k: round(v, 3) for k, v in metrics.items() if isinstance(v, float)})

    rows = read_features_jsonl(f"{out}/features.jsonl")
    _, _, (train_set, test_set) = fit_and_evaluate(rows, config)
    base = evaluate_on_split(baseline_features(docs, fit_scorer(reference), "ll"),
                             train_set.doc_ids, test_set.doc_ids, config)
    print("mean-LL baseline:   ", {k: round(v, 3) for k, v in base.items() if isinstance(v, float)})
