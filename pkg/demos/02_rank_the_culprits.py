"""
Which KPIs should the operator read first?
==========================================

Detection says *when*. Feature scoring says *what*: compare each KPI in
the flagged minutes with the rest of the day and sort.
"""

from hurra import (
    DetectorSpec,
    FSPolicy,
    SynthSpec,
    binarize,
    derive_feature_labels,
    feature_scores,
    generate,
    ndcg,
    preprocess,
    rank_features,
    reading_effort,
    run_detector,
)

raw, gt = generate(SynthSpec(F=20, T=2000, n_culprits=4, seed=7))
xhat, _ = preprocess(raw)
truth = derive_feature_labels(gt)
print("culprits:", sorted(truth))

scores = run_detector(xhat, DetectorSpec.lower_bound("LODA"))
a_hat = binarize(scores)  # top 5% of minutes
print("flagged minutes:", a_hat.sum())

for kind in ["fsa", "fsr", "nd", "ndlog", "alpha"]:
    ranking = rank_features(feature_scores(xhat, a_hat, FSPolicy(kind)))
    m, t, e = reading_effort(ranking, truth)
    print(f"{kind:6s} nDCG {ndcg(ranking, truth):.3f}  read {m} KPIs to find all {t}")

ranking = rank_features(feature_scores(xhat, a_hat, FSPolicy("fsa")))
print("top five:", ranking.features[:5])
