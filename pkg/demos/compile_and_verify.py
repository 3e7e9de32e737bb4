# %% [markdown]
# # Compiling a smooth target
#
# The compiler turns a target on the unit complex cube into one modReLU network
# with a guaranteed sup error. Building is quick; evaluating the deep result is not.

# %%
import time

import numpy as np

from modrelu_approx.structured import architecture_signature
from modrelu_approx.targets import catalog_target
from modrelu_approx.taylor_compiler import build_plan, compile, evaluate_on_cube

# %% [markdown]
# The plan fixes the grid size N, the number of terms and the inner accuracy.

# %%
plan = build_plan(d=1, n=2, eps=0.3)
print(plan)

# %%
t0 = time.perf_counter()
target = catalog_target("quad", 1, 2)
net = compile(target, 0.3)
print(f"compiled in {time.perf_counter() - t0:.1f}s")
print(net.stats())

# %% [markdown]
# Evaluate on a coarse grid of the cube and compare to the target.

# %%
g = np.linspace(0, 1, 9)
x = np.array([[a, b] for a in g for b in g])
approx = evaluate_on_cube(net, x)
g_re, g_im = target
exact = g_re(x) + 1j * g_im(x)
print("sup error on 9x9 grid:", np.abs(approx - exact).max())

# %% [markdown]
# Only the weights depend on the target. The sine target gives the same masks.

# %%
other = compile(catalog_target("sine", 1, 2), 0.3)
print("same architecture:", architecture_signature(net) == architecture_signature(other))
