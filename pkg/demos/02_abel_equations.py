"""Abel-type integral equations.

The classical kernel is inverted in closed form through a half-order
derivative; a Lipschitz kernel is inverted by layer stripping, where each
layer is narrow enough for the Neumann series to contract.
"""
import numpy as np

from herglotz import GridFunction, KernelSpec, abel_forward, c_alpha, invert_classical, invert_neumann

x = np.linspace(0.0, 1.0, 201)
f = lambda y: np.cos(3 * y)

print(f"c_1/2 = {float(c_alpha(0.5))!r} (pi = {np.pi!r})")

g = GridFunction(x, abel_forward(KernelSpec.constant(0.5), f, x))
h = invert_classical(0.5, g)
print(f"classical inversion: sup error on [0, 0.99] = {np.max(np.abs(h.values - f(x))[x <= 0.99]):.2e}")

k = KernelSpec.from_callable(0.5, lambda x, y: np.exp(3 * (y - x)) * (1 + x))
g = GridFunction(x, abel_forward(k, f, x))
h = invert_neumann(k, g)
print(f"layer stripping: {len(h.meta['layers'])} layers, iterations per layer {h.meta['iterations']}")
print(f"  sup error {np.max(np.abs(h.values - f(x))):.2e}")

# Data that vanish above 0.6 give a solution that vanishes there too.
fs = lambda y: np.where(y <= 0.6, f(y), 0.0)
h = invert_neumann(k, GridFunction(x, abel_forward(k, fs, x)))
print(f"  recovered values above 0.65: max |f| = {np.max(np.abs(h.values[x >= 0.65])):.1e}")
