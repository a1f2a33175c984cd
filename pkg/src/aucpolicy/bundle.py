"""JSON policy bundles: per-arm weights and thresholds, training settings and
the feature preprocessing that must be replayed before prediction."""
from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from .data import Dataset, Standardizer
from .learn import ArmModel, LinearModel
from .pipeline import FeatureSelection
from .policy import ArmSuitePolicy, StochasticPolicy

FORMAT = "aucpolicy-bundle/1"


class BundleError(ValueError):
    pass


@dataclass
class Preprocessor:
    """Feature selection (on raw columns) followed by standardization."""

    selection: Optional[FeatureSelection] = None
    standardizer: Optional[Standardizer] = None

    def apply(self, data: Dataset) -> Dataset:
        if self.selection is not None:
            data = self.selection.apply(data)
        if self.standardizer is not None:
            data = self.standardizer.apply(data)
        return data

    def to_dict(self) -> dict:
        return {"feature_selection": None if self.selection is None else self.selection.to_dict(),
                "standardizer": None if self.standardizer is None else self.standardizer.to_dict()}

    @classmethod
    def from_dict(cls, d: Optional[dict]) -> "Preprocessor":
        d = d or {}
        sel, std = d.get("feature_selection"), d.get("standardizer")
        return cls(None if sel is None else FeatureSelection.from_dict(sel),
                   None if std is None else Standardizer.from_dict(std))


@dataclass(eq=False)
class PolicyBundle:
    policy: ArmSuitePolicy
    preprocess: Preprocessor = field(default_factory=Preprocessor)
    epsilon: float = 0.0
    arm_names: Optional[Sequence[str]] = None
    settings: dict = field(default_factory=dict)

    def stochastic(self, epsilon: Optional[float] = None) -> StochasticPolicy:
        return StochasticPolicy(self.policy, self.epsilon if epsilon is None else epsilon)

    def to_dict(self) -> dict:
        arms = []
        for a, m in enumerate(self.policy.arms):
            arms.append({
                "arm": a,
                "weights": [float(v) for v in m.model.weights],
                "bias": bool(m.model.bias),
                "trained": bool(m.model.trained),
                "threshold": None if m.threshold is None else float(m.threshold),
                "lambda": m.lam,
                "n_pos": int(m.n_pos),
                "n_neg": int(m.n_neg),
            })
        return {
            "format": FORMAT,
            "kind": self.policy.kind,
            "epsilon": self.epsilon,
            "arm_names": list(self.arm_names) if self.arm_names is not None else None,
            "excluded": sorted(int(a) for a in self.policy.excluded),
            "settings": self.settings,
            "preprocess": self.preprocess.to_dict(),
            "arms": arms,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=1, sort_keys=True)

    @property
    def identifier(self) -> str:
        return hashlib.sha256(self.to_json().encode()).hexdigest()[:16]

    def save(self, path) -> None:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(self.to_json() + "\n")

    @classmethod
    def from_dict(cls, d: dict) -> "PolicyBundle":
        if d.get("format") != FORMAT:
            raise BundleError(f"unsupported bundle format {d.get('format')!r}; expected {FORMAT!r}")
        arms = []
        for entry in sorted(d["arms"], key=lambda e: e["arm"]):
            model = LinearModel(np.asarray(entry["weights"], dtype=np.float64), entry["arm"],
                                trained=entry.get("trained", True), bias=entry["bias"])
            arms.append(ArmModel(model, entry["threshold"], lam=entry.get("lambda"),
                                 n_pos=entry.get("n_pos", 0), n_neg=entry.get("n_neg", 0)))
        policy = ArmSuitePolicy(d["kind"], arms, frozenset(d.get("excluded", ())))
        return cls(policy, Preprocessor.from_dict(d.get("preprocess")), float(d.get("epsilon", 0.0)),
                   d.get("arm_names"), d.get("settings", {}))

    @classmethod
    def load(cls, path) -> "PolicyBundle":
        try:
            d = json.loads(Path(path).read_text())
        except json.JSONDecodeError as exc:
            raise BundleError(f"{path}: not a JSON bundle ({exc})") from None
        return cls.from_dict(d)
