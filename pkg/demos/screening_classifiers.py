"""
Training screening classifiers and scoring update candidates
============================================================

Included studies are positives, excluded studies negatives.  Four models
are trained, each gets a decision threshold tuned on a held-out split, and
the candidates found by one forward snowballing round are ranked.
"""

import numpy as np

from slrupdate.classifiers import HyperParams
from slrupdate.fixtures import update_world
from slrupdate.metrics import EvalReport
from slrupdate.pipeline import build_corpus, evaluate_predictions, predict_records, train_all
from slrupdate.providers import FixtureProvider
from slrupdate.snowball import SnowballRequest, run_snowballing

fixture = update_world()
print(f"training data: {len(fixture.included)} included, {len(fixture.excluded)} excluded")

# Vocabulary and count vectors are built from the whole training corpus.
corpus = build_corpus(fixture.included, fixture.excluded)
print(f"vocabulary: {len(corpus.vocabulary)} tokens; first ten {corpus.vocabulary.tokens[:10]}")

# One forward round from the studies that have a DOI gives the candidates.
seeds = tuple(fixture.seeds)
result = run_snowballing(SnowballRequest(seeds, ("forward",), 1), FixtureProvider(fixture.world))
candidates = result["forward"].records
print(f"{len(seeds)} seeds -> {len(candidates)} candidates")

# Train every model with a 97% recall target on the held-out fifth.
models = train_all(corpus, ("lsvm", "logreg", "mnb", "gbt"), HyperParams(seed=0), target_recall=0.97)

print()
print("model   threshold  flagged  recall  precision  workload reduction")
for kind, model in models.items():
    preds = predict_records(model, candidates)
    rep: EvalReport = evaluate_predictions(preds, fixture.candidate_labels)
    print(f"{kind:<7} {model.threshold:>9.3f}  {rep.n_flagged:>7}  {rep.recall:>6.3f}  {rep.precision:>9.3f}  "
          f"{rep.workload_reduction:>6.2f}x")

# Screening order for the reviewer: highest score first.
top = predict_records(models["lsvm"], candidates)[:5]
print()
print("top five for the linear SVM:")
for p in top:
    print(f"  {p.score:+.3f}  {p.id}  relevant={fixture.candidate_labels[p.id]}")

# Weights with the largest magnitude hint at what the SVM keyed on.
w = models["lsvm"].parameters["weights"]
order = np.argsort(w)[::-1][:8]
print("strongest positive tokens:", [corpus.vocabulary.tokens[i] for i in order])
