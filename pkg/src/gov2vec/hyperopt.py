"""Tree-of-Parzen-estimators search over (dimension, window).

Sequential trials: each suggestion conditions on every prior objective.
All trained models are persisted regardless of objective; downstream
queries aggregate over the whole ensemble.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Callable, Optional

import numpy as np

from . import trainer
from .trainer import EmbeddingModel, SourceGraph, TrainConfig

N_STARTUP = 5
GOOD_QUANTILE = 0.25
N_CANDIDATES = 24
MIN_BANDWIDTH = 1.0
DEFAULT_TRIALS = 20


@dataclass(frozen=True)
class SearchSpace:
    d_range: tuple[int, int] = (100, 200)
    window_range: tuple[int, int] = (10, 25)

    def __post_init__(self):
        for lo, hi in (self.d_range, self.window_range):
            if not lo < hi:
                raise ValueError("range lower bound must be below upper bound")


@dataclass
class Trial:
    d: int
    window: int
    seed: int
    objective: float
    model_path: Optional[str] = None

    def to_json(self) -> dict:
        return {
            "model": self.model_path,
            "d": self.d,
            "window": self.window,
            "seed": self.seed,
            "objective": self.objective,
        }

    @classmethod
    def from_json(cls, obj: dict) -> "Trial":
        return cls(obj["d"], obj["window"], obj["seed"], obj["objective"], obj["model"])


@dataclass
class Ensemble:
    trials: list[Trial]
    directory: Optional[Path] = None
    _models: list = field(default_factory=list, repr=False)

    def models(self) -> list[EmbeddingModel]:
        if not self._models:
            self._models = [
                trainer.load_model(Path(t.model_path)) for t in self.trials
            ]
        return self._models

    def manifest_json(self) -> dict:
        return {"trials": [t.to_json() for t in self.trials]}

    def save_manifest(self, path) -> None:
        with open(path, "w", encoding="utf-8") as f:
            json.dump(self.manifest_json(), f, indent=1)

    @classmethod
    def load_manifest(cls, path) -> "Ensemble":
        with open(path, encoding="utf-8") as f:
            obj = json.load(f)
        if obj.get("invalid"):
            raise ValueError(f"manifest {path} is flagged invalid (aborted search)")
        return cls([Trial.from_json(t) for t in obj["trials"]], Path(path).parent)


class _Parzen:
    """1-D mixture: a Gaussian kernel per observation plus a uniform prior,
    all weighted 1/(k+1). Bandwidth per kernel is the larger gap to its
    sorted neighbors, clamped to [MIN_BANDWIDTH, range width]."""

    def __init__(self, values, lo: float, hi: float):
        self.lo, self.hi = float(lo), float(hi)
        width = self.hi - self.lo
        centers = np.sort(np.asarray(values, dtype=np.float64))
        k = len(centers)
        bws = np.empty(k)
        for i in range(k):
            left = centers[i] - centers[i - 1] if i > 0 else 0.0
            right = centers[i + 1] - centers[i] if i < k - 1 else 0.0
            bws[i] = max(left, right)
        self.centers = centers
        self.bandwidths = np.clip(bws, MIN_BANDWIDTH, max(width, MIN_BANDWIDTH))

    def pdf(self, x: float) -> float:
        k = len(self.centers)
        z = (x - self.centers) / self.bandwidths
        kernels = np.exp(-0.5 * z * z) / (self.bandwidths * math.sqrt(2 * math.pi))
        uniform = 1.0 / (self.hi - self.lo) if self.lo <= x <= self.hi else 0.0
        return (kernels.sum() + uniform) / (k + 1)

    def sample(self, rng) -> float:
        k = len(self.centers)
        i = int(rng.integers(k + 1))
        if i == k:
            return float(rng.uniform(self.lo, self.hi))
        x = float(rng.normal(self.centers[i], self.bandwidths[i]))
        return min(max(x, self.lo), self.hi)


def _suggest_uniform(space: SearchSpace, rng) -> tuple[int, int]:
    d = int(rng.integers(space.d_range[0], space.d_range[1] + 1))
    w = int(rng.integers(space.window_range[0], space.window_range[1] + 1))
    return d, w


def tpe_suggest(history: list[Trial], space: SearchSpace, rng) -> tuple[int, int]:
    """Suggest (d, window): uniform during startup, then the candidate drawn
    from the good-trial density that maximizes the good/rest density ratio."""
    if len(history) < N_STARTUP:
        return _suggest_uniform(space, rng)
    ranked = sorted(history, key=lambda t: t.objective)
    n_good = max(1, math.ceil(GOOD_QUANTILE * len(ranked)))
    good, rest = ranked[:n_good], ranked[n_good:]
    if not rest:
        return _suggest_uniform(space, rng)

    dims = []
    for attr, (lo, hi) in (("d", space.d_range), ("window", space.window_range)):
        l_est = _Parzen([getattr(t, attr) for t in good], lo, hi)
        g_est = _Parzen([getattr(t, attr) for t in rest], lo, hi)
        dims.append((l_est, g_est, lo, hi))

    best, best_score = None, -math.inf
    for _ in range(N_CANDIDATES):
        cand = [l.sample(rng) for l, _, _, _ in dims]
        score = 0.0
        for x, (l, g, _, _) in zip(cand, dims):
            score += math.log(max(l.pdf(x), 1e-300)) - math.log(max(g.pdf(x), 1e-300))
        if score > best_score:
            best, best_score = cand, score
    d = min(max(round(best[0]), space.d_range[0]), space.d_range[1])
    w = min(max(round(best[1]), space.window_range[0]), space.window_range[1])
    return int(d), int(w)


def run_search(
    docs,
    vocab,
    graph: Optional[SourceGraph],
    base_config: TrainConfig,
    trials: int,
    rng,
    out_dir,
    space: SearchSpace = SearchSpace(),
    objective_fn: Optional[Callable[[int, int], float]] = None,
) -> Ensemble:
    """Run `trials` sequential TPE trials, persisting every trained model.

    objective_fn is a test hook: when given, it replaces training and no
    model files are written.
    """
    if trials < 1:
        raise ValueError("need at least one trial")
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    manifest_path = out_dir / "manifest.json"
    history: list[Trial] = []
    for j in range(trials):
        d, window = tpe_suggest(history, space, rng)
        seed = int(rng.integers(0, 2**31))
        try:
            if objective_fn is not None:
                trial = Trial(d, window, seed, float(objective_fn(d, window)))
            else:
                config = replace(base_config, d=d, window=window, seed=seed)
                model = trainer.train(docs, vocab, graph, config)
                path = out_dir / f"model_{j:03d}.g2v"
                trainer.save_model(model, path)
                trial = Trial(d, window, seed, model.objective, str(path))
        except Exception:
            partial = {"trials": [t.to_json() for t in history], "invalid": True}
            with open(manifest_path, "w", encoding="utf-8") as f:
                json.dump(partial, f, indent=1)
            raise
        history.append(trial)
    ensemble = Ensemble(history, out_dir)
    ensemble.save_manifest(manifest_path)
    return ensemble
