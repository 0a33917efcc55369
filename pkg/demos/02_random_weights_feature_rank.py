# ---
# jupyter:
#   jupytext:
#     formats: py:percent
#     text_representation:
#       extension: .py
#       format_name: percent
# ---

# %% [markdown]
# # Feature rank under random weights
#
# When a hidden layer is *wide* (at least as many units as training
# samples) and the activations up to it are analytic, the feature matrix
# at that layer has full row rank N for almost every weight setting. This
# demo estimates that rank over many Gaussian draws, watches it cap out
# at the layer width when the layer is too narrow, and reports the same
# experiment for ReLU, where no such guarantee is claimed.
#
# Rank is counted from a full SVD: singular values above
# `0.5 * sqrt(m + n + 1) * sigma_max * eps`.

# %%
import numpy as np

from widecnn import estimate_rank
from widecnn.experiments import DatasetConfig, ExperimentConfig, run_rank_genericity

# %% [markdown]
# ## Sigmoid, wide layer: full rank in every trial

# %%
cfg = ExperimentConfig(
    dataset=DatasetConfig(n=64, d=16, m=2, seed=0),
    seeds=tuple(range(100)),
)
result = run_rank_genericity(cfg)
print(f"wide sigmoid layer: rank 64 in {result.fraction_full:.0%} of 100 seeds")
rep = result.reports[0]
print(f"  e.g. seed 0: {rep.rows}x{rep.cols}, rank {rep.estimated_rank}, "
      f"sigma_min {rep.sigma_min:.2e}, threshold {rep.threshold:.2e}")

# %% [markdown]
# ## ReLU: reported, not claimed
#
# ReLU is not analytic, so the almost-everywhere argument does not apply
# to it; empirically the fraction is still high. Its smooth surrogate
# (softplus with large sharpness) is analytic and covered by the claim.

# %%
for act in ("relu", "softplus(10)"):
    res = run_rank_genericity(
        ExperimentConfig(
            dataset=DatasetConfig(n=64, d=16, m=2, seed=0),
            seeds=tuple(range(100)),
            activation=act,
        )
    )
    print(f"{act:14s}: full-rank fraction {res.fraction_full:.2f}")

# %% [markdown]
# ## A too-narrow layer caps the rank
#
# Rank can never exceed the layer width, so with 48 units and 64 samples
# the best possible rank is 48.

# %%
from widecnn import Params, forward
from widecnn.architectures import single_conv_network

narrow = single_conv_network(16, 9, 6)  # (16-9+1) windows x 6 filters = 48
rng = np.random.default_rng(1)
X = rng.standard_normal((64, 16))
ranks = []
for seed in range(20):
    params = Params.gaussian(narrow, np.random.default_rng(seed), up_to=1)
    ranks.append(estimate_rank(forward(narrow, params, X, up_to=1).F[1]).estimated_rank)
print("widths:", narrow.widths, "-> observed ranks:", sorted(set(ranks)))

# %% [markdown]
# ## Width audit of a realistic stack
#
# The classic 28x28 digit architecture with 100 first-layer filters has a
# first hidden layer of width 67600 (wider than a 60000-sample training
# set) and is pyramidal from its second layer on.

# %%
from widecnn import width_audit
from widecnn.architectures import mnist_conv_pool_network

spec = mnist_conv_pool_network(first_filters=100)
audit = width_audit(spec, 60000)
print("widths:        ", spec.widths)
print("max width:     ", audit.max_width, "at layer", audit.arg_layer)
print("wide enough:   ", audit.wide_enough)
print("pyramidal from:", audit.pyramidal_from)
for t1 in (10, 89, 100):
    print(f"  first-layer width with {t1:3d} filters: "
          f"{mnist_conv_pool_network(first_filters=t1).widths[1]}")
