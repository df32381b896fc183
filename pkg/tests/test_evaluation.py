import json
import random
import re

import numpy as np
import pytest
from hypothesis import given, strategies as st

from deeprace.corpus import BUGGY, CLEAN, CorpusEntry, Manifest, SynthSpec, synth_corpus
from deeprace.dataset import load_units
from deeprace.evaluation import (ConfusionMatrix, accuracy, confusion, evaluate, iou, precision,
                                 recall, report_from, tally)
from deeprace.frontend import NodeClass, Vocabulary, build_vocab
from deeprace.model import Hyperparams, ModelParams, init_params
from deeprace.mutator import apply_balanced_mutation, mutate_omp_private

from oracles import iou_reference, rates, recount


def test_rate_examples():
    cm = ConfusionMatrix(tp=29, fp=1, tn=28, fn=2)
    assert precision(cm) == pytest.approx(29 / 30)
    assert recall(cm) == pytest.approx(29 / 31)
    assert accuracy(cm) == 0.95
    assert precision(ConfusionMatrix(0, 0, 5, 3)) is None
    assert accuracy(ConfusionMatrix()) is None


def test_grid_orientation():
    rows = ConfusionMatrix(tp=29, fp=1, tn=28, fn=2).grid().splitlines()
    assert rows[2].split()[-2:] == ["29", "1"] and rows[3].split()[-2:] == ["2", "28"]
    assert rows[1].split() == ["buggy", "clean"]


def test_confusion_accepts_labels_or_ints():
    assert confusion([BUGGY, CLEAN, 1, 0], [1, 1, CLEAN, 0]) == ConfusionMatrix(1, 1, 1, 1)
    with pytest.raises(ValueError):
        confusion([1], [1, 0])
    with pytest.raises(ValueError):
        confusion(["maybe"], [1])


def test_brute_force_recount():
    rng = random.Random(0)
    for _ in range(1000):
        n = rng.randint(0, 40)
        p = [rng.randint(0, 1) for _ in range(n)]
        t = [rng.randint(0, 1) for _ in range(n)]
        cm = confusion(p, t)
        assert (cm.tp, cm.fp, cm.fn, cm.tn) == tuple(recount(p, t)[k] for k in ("tp", "fp", "fn", "tn"))
        ref = rates(recount(p, t))
        for got, key in ((precision(cm), "precision"), (recall(cm), "recall"),
                         (accuracy(cm), "accuracy")):
            assert (got is None) == (ref[key] is None)
            if got is not None:
                assert got == float(ref[key])


@pytest.mark.parametrize("flagged,truth,lit,std", [
    ({4, 5, 7, 8}, {4, 5, 7, 8}, 1.0, 1.0),
    ({4, 5, 9}, {4, 5, 7}, 2 / 3.1, 0.5),
    (set(), {4}, 0.0, 0.0),
    (set(), set(), 1.0, 1.0),
])
def test_iou_examples(flagged, truth, lit, std):
    got = iou(flagged, truth, 10)
    assert got[0] == pytest.approx(lit, abs=1e-9) and got[1] == pytest.approx(std, abs=1e-9)


def test_iou_errors():
    with pytest.raises(ValueError):
        iou({11}, {1}, 10)
    with pytest.raises(ValueError):
        iou({0}, set(), 10)
    with pytest.raises(ValueError):
        tally(set(), set(), 0)


@given(st.integers(1, 60).flatmap(lambda n: st.tuples(
    st.just(n), st.frozensets(st.integers(1, n)), st.frozensets(st.integers(1, n)))))
def test_iou_bounds_and_reference(case):
    n, flagged, truth = case
    lit, std = iou(flagged, truth, n)
    assert 0.0 <= std <= lit <= 1.0
    ref = iou_reference(flagged, truth, n)
    assert lit == pytest.approx(ref[0], abs=1e-9) and std == pytest.approx(ref[1], abs=1e-9)
    if flagged:
        assert iou(flagged, flagged, n) == (1.0, 1.0)


def test_report_formats():
    rep = report_from([1, 0, 1], [1, 0, 0], [(1.0, 1.0), (0.5, 0.25)])
    assert rep.mean_iou_paper == 0.75 and rep.mean_iou_standard == 0.625
    data = json.loads(rep.to_json())
    assert data["confusion"] == {"tp": 1, "fp": 1, "tn": 1, "fn": 0}
    text = rep.to_text()
    assert re.search(r"^mean IoU \(standard\) +0\.6250$", text, re.M) and "predicted buggy" in text
    assert "undefined" in report_from([0], [0]).to_text()


def _pragma_detector(vocab, max_len) -> ModelParams:
    """Window-1 one-hot model: buggy iff a parallel region has no private clause."""
    n = vocab.n_rows
    hp = Hyperparams(embed_dim=n, filters=2, window_sizes=(1,), max_len=max_len, dropout=0.0)
    p = init_params(vocab, hp, dtype=np.float64)
    p.E = np.eye(n)
    p.E[0] = 0.0
    p.W = [np.zeros((2, 1, n))]
    for kind in (NodeClass.OmpParallel, NodeClass.OmpParallelFor):
        p.W[0][0, 0, vocab.id_of(kind.value)] = 1.0
    p.W[0][1, 0, vocab.id_of(NodeClass.OmpPrivateClause.value)] = 1.0
    p.b = [np.zeros(2)]
    p.W_out = np.array([[0.0, 0.0], [1.0, -10.0]])
    p.b_out = np.zeros(2)
    return p


def test_perfect_manifest(tmp_path):
    entries = synth_corpus(SynthSpec(2, "omp-private", 31, fillers=0), tmp_path)
    rows = list(entries)
    for e in entries:
        res = mutate_omp_private((tmp_path / e.path).read_text())
        bug = tmp_path / e.path.replace(".c", ".mut.c")
        bug.write_text(res.mutated_source)
        pragma = [i for i, l in enumerate(res.mutated_source.splitlines(), 1)
                  if "#pragma omp parallel" in l]
        rows.append(CorpusEntry(bug.name, "omp-private", BUGGY, tuple(pragma)))
    manifest = Manifest([CorpusEntry(r.path, r.pattern, r.label, r.truth_lines, "val") for r in rows],
                        tmp_path)
    units, _ = load_units(manifest, "val")
    assert sum(u.label for u in units) == 2
    vocab = build_vocab([u.vector for u in units])
    params = _pragma_detector(vocab, max(len(u.vector) for u in units))
    rep = evaluate(params, manifest, "val")
    assert (rep.precision, rep.recall, rep.accuracy) == (1.0, 1.0, 1.0)
    assert (rep.mean_iou_paper, rep.mean_iou_standard) == (1.0, 1.0)
    assert all(t["A"] == 1 and t["C"] == 0 for t in rep.tallies)


def test_untrained_model_is_chance(tmp_path):
    from deeprace.corpus import build_manifest
    entries = synth_corpus(SynthSpec(200, "pthread-mutex", 5), tmp_path)
    manifest = Manifest(build_manifest(entries, (0.0, 1.0, 0.0), 5).entries, tmp_path)
    manifest = apply_balanced_mutation(manifest, 0.5, seed=5)
    units, _ = load_units(manifest, "val")
    assert len(units) == 200 and sum(u.label for u in units) == 100
    vocab = build_vocab([u.vector for u in units])
    for seed in range(3):
        hp = Hyperparams(embed_dim=8, filters=4, max_len=max(len(u.vector) for u in units),
                         seed=seed)
        rep = evaluate(init_params(vocab, hp), manifest, "val")
        assert abs(rep.accuracy - 0.5) <= 0.1


def test_empty_split_is_an_error(tmp_path):
    manifest = Manifest([CorpusEntry("a.c", "omp-private", split="train")], tmp_path)
    params = _pragma_detector(Vocabulary(("OmpParallelFor", "OmpPrivateClause")), 5)
    with pytest.raises(ValueError, match="empty"):
        evaluate(params, manifest, "val")
