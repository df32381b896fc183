# coding: utf-8

# # One loop, two versions
#
# A doall nest where the inner index is privatized, and the same nest with
# the clause deleted.  We look at the token vector, seed the race with the
# mutator, and score both files with a hand-built detector.

# In[1]:

from importlib.resources import files

import numpy as np

from deeprace import mutate, render_report
from deeprace.cam import explain
from deeprace.dataset import units_from_source
from deeprace.frontend import NodeClass, build_vocab, encode
from deeprace.model import Hyperparams, init_params

fixtures = files("deeprace") / "fixtures"
guarded = (fixtures / "doall_private.c").read_text()
print(guarded)


# The frontend walks the AST in preorder and keeps (node class, line) pairs.
# Line 5 carries the pragma and its clause.

# In[2]:

[unit] = units_from_source(guarded, "omp-private")
for cls, line in unit.vector.items[:20]:
    print(line, cls)


# Deleting `private(j)` gives the racy loop.  Truth lines are the
# declaration of j, the pragma, and the loop that writes it.

# In[3]:

res = mutate(guarded, "omp-private")
racy = res.mutated_source
print(racy)
print("truth lines:", sorted(res.truth_lines))


# A width-1 detector: one filter fires on a parallel region, another on a
# private clause, and the head subtracts the second from the first.

# In[4]:

units = units_from_source(guarded, "omp-private") + units_from_source(racy, "omp-private")
vocab = build_vocab([u.vector for u in units])
n = vocab.n_rows
hp = Hyperparams(embed_dim=n, filters=2, window_sizes=(1,), max_len=64, dropout=0.0)
params = init_params(vocab, hp, dtype=np.float64)
params.E = np.eye(n)
params.E[0] = 0
params.W = [np.zeros((2, 1, n))]
params.W[0][0, 0, vocab.id_of(NodeClass.OmpParallelFor.value)] = 1
params.W[0][1, 0, vocab.id_of(NodeClass.OmpPrivateClause.value)] = 1
params.b = [np.zeros(2)]
params.W_out = np.array([[0.0, 0.0], [2.0, -10.0]])
params.b_out = np.zeros(2)


# In[5]:

for name, src in (("guarded", guarded), ("racy", racy)):
    [u] = units_from_source(src, "omp-private")
    r = explain(params, encode(u.vector, vocab, hp.max_len))
    print(f"{name:8s} p(buggy)={r.prob_buggy:.3f} flags={sorted(r.flagged_lines)}")


# The activation map puts all its weight on the pragma line.

# In[6]:

[u] = units_from_source(racy, "omp-private")
print(render_report(racy, explain(params, encode(u.vector, vocab, hp.max_len)), "ansi"))
