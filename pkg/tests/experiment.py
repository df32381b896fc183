"""The scaled synthetic experiment shared by the acceptance checks."""
from __future__ import annotations

import time
from dataclasses import dataclass
from pathlib import Path

from deeprace.corpus import Manifest, SynthSpec, build_manifest, synth_corpus
from deeprace.dataset import train
from deeprace.model import Hyperparams, ModelParams, TrainReport
from deeprace.mutator import apply_balanced_mutation

N_FILES = 1000
SEED = 42


def experiment_hyperparams() -> Hyperparams:
    return Hyperparams(embed_dim=32, filters=64, epochs=15, seed=SEED)


@dataclass
class Experiment:
    root: Path
    manifest: Manifest
    manifest_path: Path
    params: ModelParams
    report: TrainReport
    train_seconds: float


_CACHE: dict[str, Experiment] = {}


def build_experiment(workdir: Path) -> Experiment:
    key = str(workdir)
    if key in _CACHE:
        return _CACHE[key]
    root = Path(workdir) / "corpus"
    root.mkdir(parents=True, exist_ok=True)
    entries = synth_corpus(SynthSpec(N_FILES, "omp-private", SEED), root)
    manifest = build_manifest(entries, (0.8, 0.2, 0.0), SEED, root)
    manifest = apply_balanced_mutation(manifest, 0.5, SEED)
    manifest_path = root / "manifest.jsonl"
    manifest.write(manifest_path)
    t0 = time.perf_counter()
    params, report = train(manifest, experiment_hyperparams())
    exp = Experiment(root, manifest, manifest_path, params, report, time.perf_counter() - t0)
    _CACHE[key] = exp
    return exp
