# %% [markdown]
# # A tour of the modReLU primitives
#
# Each building block is a small complex-valued network. We build a few,
# print their sizes and measure their error on a disk.

# %%
import numpy as np

from modrelu_approx import primitives as P
from modrelu_approx.verify_harness import Domain, sup_error

rng = np.random.default_rng(0)

# %% [markdown]
# The real-part extractor: three hidden neurons, error at most eps on the disk.

# %%
for eps in (0.1, 0.01, 0.001):
    net = P.build_re(2.0, eps)
    rep = sup_error(net, lambda z: z[:, 0].real, Domain.disk(2.0), 20_000, 0, eps, "re")
    print(f"eps={eps:<6g} stats={net.stats().hidden_neurons}/{net.stats().weight_count}  "
          f"error={rep.max_error:.2e}")

# %% [markdown]
# The sawtooth square: depth grows with log(1/eps), error tracks 2^(-2m-2).

# %%
for eps in (0.5, 0.2, 0.05):
    net = P.build_square_re(3.0, eps)
    dom = Domain.disk_real_bound(3.0, 1.0)
    rep = sup_error(net, lambda z: z[:, 0].real ** 2, dom, 5_000, 0, eps, "square")
    print(f"eps={eps:<5g} depth={net.stats().depth:<3d} error={rep.max_error:.2e}")

# %% [markdown]
# Products come from the polarisation identity on top of the square.

# %%
prod = P.build_product(3.0, 1.0, 0.1)
z = Domain.disk_real_bound(3.0, 1.0, dim=2, box=True).random(5, rng)
print(np.c_[prod(z), z[:, 0] * z[:, 1]])
