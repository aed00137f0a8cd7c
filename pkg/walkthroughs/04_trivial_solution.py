"""Why the factor generator must be non-additive.

A purely linear generator ``W [u, c]`` can satisfy the contrastive and
disentanglement terms by routing the user into the intrinsic half and the
context into the extrinsic half. The weight-block masses expose that routing.

Run: python walkthroughs/04_trivial_solution.py   (a few minutes)
"""
import numpy as np

from iedr.experiment import run_synthetic, synthetic_config
from iedr.factors import weight_block_masses

base = synthetic_config().replace("train", dtype="float32")

print(f"{'variant':11s} {'u->in':>6s} {'u->ex':>6s} {'c->in':>6s} {'c->ex':>6s} {'ratio':>6s} {'NDCG@10':>8s}")
for variant in ("Linear", "LinearReLU"):
    r = run_synthetic(variant, 0, base)
    m = r.block_masses()
    print(f"{variant:11s} {m.user_intrinsic:6.3f} {m.user_extrinsic:6.3f} {m.context_intrinsic:6.3f} "
          f"{m.context_extrinsic:6.3f} {m.user_ratio:6.3f} {r.report.ndcg_at_10:8.4f}")

# A hand-built trivial solution for reference: identity blocks only.
d = 4
w = np.zeros((2 * d, 2 * d))
w[:d, :d] = np.eye(d)    # user -> intrinsic
w[d:, d:] = np.eye(d)    # context -> extrinsic
print("identity blocks", weight_block_masses(w))
