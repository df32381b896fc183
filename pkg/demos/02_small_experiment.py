# coding: utf-8

# # A small end-to-end run
#
# Generate clean OpenMP programs, seed races into half of them, train the
# convolutional classifier and see where its activation map lands.
# Sizes are cut down so this finishes in well under a minute.

# In[1]:

import tempfile
from importlib.resources import files
from pathlib import Path

from deeprace import Hyperparams, SynthSpec, apply_balanced_mutation, build_manifest, synth_corpus
from deeprace.cam import localize, merge_results, render_report
from deeprace.dataset import train
from deeprace.evaluation import evaluate

work = Path(tempfile.mkdtemp(prefix="deeprace-demo-"))
entries = synth_corpus(SynthSpec(600, "omp-private", rng_seed=7), work)
manifest = build_manifest(entries, (0.8, 0.2, 0.0), seed=7, root=work)
manifest = apply_balanced_mutation(manifest, 0.5, seed=7)
print(manifest.stats())


# One of the generated programs, after mutation:

# In[2]:

buggy = next(e for e in manifest if e.label == "buggy")
print(buggy.path, "truth", buggy.truth_lines)
print((work / buggy.path).read_text())


# In[3]:

hp = Hyperparams(embed_dim=32, filters=64, epochs=15, seed=7)
params, report = train(manifest, hp, on_epoch=lambda r: print(
    f"epoch {r.epoch}: loss {r.train_loss:.3f} val_acc {r.val_acc:.3f}"))


# Validation metrics.  Both IoU forms are printed; the literal one divides
# false alarms by the unit length, so it is never below the standard one.

# In[4]:

rep = evaluate(params, manifest, "val")
print(rep.to_text())


# In[5]:

racy = (files("deeprace") / "fixtures" / "doall_racy.c").read_text()
merged = merge_results(localize(params, racy, "omp-private"), len(racy.splitlines()))
print(render_report(racy, merged, "ansi"))
