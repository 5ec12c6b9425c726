"""
Ranking detectors across a corpus
=================================

Per-dataset Pr-Rec AUC, mean ranks and the Nemenyi critical difference:
detectors whose mean ranks differ by less than the CD are joined.
"""

from hurra import PipelineConfig, SynthSpec, bench, generate_corpus, nemenyi_cd

pool = tuple(f"kpi_{i:02d}" for i in range(24))
spec = SynthSpec(F=12, T=800, n_culprits=3, name_pool=pool)
corpus = [(d, d.timestamps, g) for d, g in generate_corpus(8, spec, 0.5, seed=3)]

report = bench(corpus, PipelineConfig(algorithms=("IF", "RHF", "HST", "LODA", "XSTREAM", "DBSCAN")))
summary = report["summary"]
for algo, rank in sorted(summary["average_ranks"].items(), key=lambda kv: kv[1]):
    print(f"{algo:8s} mean rank {rank:.2f}  median AUC {summary['median_pr_auc'][algo]:.3f}")
print(f"CD = {summary['cd']:.2f} over {summary['ranked_datasets']} datasets")
print("not distinguishable:", summary["links"]["groups"])

# the same formula at the scale of a real campaign: ten algorithms, 64 datasets
print(f"CD(10, 64) = {nemenyi_cd(10, 64):.2f}")
