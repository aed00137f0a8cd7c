"""The two training objectives on vectors small enough to check by hand.

Run: python walkthroughs/01_losses_by_hand.py
"""
import math

import numpy as np

from iedr.cied import bi_dis_loss, cicl_loss, sample_other_indices
from iedr.diffcore import Tensor, backward

# Contrastive loss. With the positive equal to the anchor and two orthogonal
# negatives at temperature 0.5, the softmax has logits (2, 0, 0).
anchor = np.array([1.0, 0.0, 0.0])
negatives = np.array([[0.0, 1.0, 0.0], [0.0, 0.0, 1.0]])
print("aligned positive   ", cicl_loss(anchor, anchor, negatives, 0.5).item(),
      "expected", math.log(1 + 2 * math.exp(-2)))

# Swap roles: the positive is orthogonal and the only negative is the anchor.
print("misaligned positive", cicl_loss([1.0, 0.0], [0.0, 1.0], [[1.0, 0.0]], 0.5).item(),
      "expected", math.log(1 + math.exp(2)))

# Cosine similarity makes the loss blind to vector length.
rng = np.random.default_rng(0)
a, p, n = rng.standard_normal(4), rng.standard_normal(4), rng.standard_normal((3, 4))
print("scale 1 vs 100     ", cicl_loss(a, p, n).item(), cicl_loss(100 * a, 100 * p, 100 * n).item())

# Bidirectional disentanglement term. With identity heads and o_in == o_ex,
# the positive error vanishes and the loss is the mean squared distance to
# the sampled in-batch rows, which is large: the factors are fully dependent.
x = rng.standard_normal((6, 3))
ident = lambda t: t
loss = bi_dis_loss(x, x, ident, ident, 4, np.random.default_rng(1)).item()
idx = sample_other_indices(6, 4, np.random.default_rng(1))
by_hand = np.mean([np.mean([np.mean((x[i] - x[r]) ** 2) for r in idx[i]]) for i in range(6)])
print("dependent factors  ", loss, "by hand", by_hand)

# With independent factors and heads that can only predict the mean, the
# positive and negative errors cancel in expectation.
o_in, o_ex = rng.standard_normal((5000, 3)), rng.standard_normal((5000, 3))
mean_ex, mean_in = o_ex.mean(0), o_in.mean(0)
loss = bi_dis_loss(o_in, o_ex, lambda t: t * 0 + mean_ex, lambda t: t * 0 + mean_in, 5, rng).item()
print(f"independent factors {loss:+.5f}")

# Gradients reach the factors and stop at frozen heads.
w = Tensor(rng.standard_normal((3, 3)), requires_grad=True)
h = Tensor(rng.standard_normal((8, 3)))
backward(bi_dis_loss(h @ w, (h @ w) * 0.5, ident, ident, 3, rng))
print("|grad w|           ", float(np.abs(w.grad).sum()))
