"""
Recall target versus screening workload
=======================================

A higher recall target lowers the decision threshold, so more candidates
are flagged for manual reading.  This sweeps the target for the linear SVM
and reports how much reading the classifier saves at each point.
"""

from slrupdate.classifiers import HyperParams
from slrupdate.fixtures import update_world
from slrupdate.metrics import workload_reduction
from slrupdate.pipeline import build_corpus, evaluate_predictions, predict_records, train_tuned
from slrupdate.providers import FixtureProvider
from slrupdate.snowball import SnowballRequest, run_snowballing

fixture = update_world()
corpus = build_corpus(fixture.included, fixture.excluded)
result = run_snowballing(SnowballRequest(tuple(fixture.seeds), ("forward",), 1), FixtureProvider(fixture.world))
candidates = result["forward"].records
n = len(candidates)

print(f"{n} candidates, {sum(fixture.candidate_labels.values())} of them relevant")
print()
print("target  flagged  recall  read instead of all")
for target in (0.5, 0.7, 0.8, 0.9, 0.97, 1.0):
    model = train_tuned(corpus, HyperParams(model_kind="lsvm"), target)
    rep = evaluate_predictions(predict_records(model, candidates), fixture.candidate_labels)
    wr = workload_reduction(rep.n_flagged, n) if rep.n_flagged else float("inf")
    print(f"{target:>6.2f}  {rep.n_flagged:>7}  {rep.recall:>6.3f}  {rep.n_flagged} of {n} ({wr:.2f}x less)")

# For scale: reading 396 of 1012 papers is about 2.56 times less work.
print()
print("396 of 1012 ->", round(workload_reduction(396, 1012), 3))
