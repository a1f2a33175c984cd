"""AUC-optimized per-arm rankers versus logistic classifiers as ad
recommendation policies, with offline evaluation on logged bandit data."""

__version__ = "0.1.0"
