# %% [markdown]
# Mixup losses and their conjugates
#
# A mixup pair produces a fractional label y in [-1, 1].  The loss on such an
# example blends the base loss at s and at -s with weights (1+y)/2, (1-y)/2.

# %%
import numpy as np

from mixsdca import (LossSpec, conjugate_value, mixup_conjugate,
                     mixup_loss_grad, mixup_loss_value)

bce = LossSpec.from_name("bce")
s = np.linspace(-3, 3, 7)
for y in (1.0, 0.5, 0.0):
    print(f"y={y:+.1f}", np.round([mixup_loss_value(bce, v, y) for v in s], 4))

# %% [markdown]
# With y = 0 the loss is symmetric, and its minimum sits at s = 0.

# %%
print(mixup_loss_grad(bce, 0.0, 0.0))

# %% [markdown]
# For |y| = 1 the conjugate is the closed-form base conjugate.  For fractional
# labels it is a one-dimensional infimal convolution, evaluated numerically.

# %%
print(conjugate_value(bce, -0.3), mixup_conjugate(bce, -0.3, 1.0))
for y in (0.9, 0.5, 0.0, -0.5):
    print(y, mixup_conjugate(bce, -0.2 * y, y))

# %% [markdown]
# Fenchel-Young: phi(s) + phi*(a) - a s >= 0, with equality at a = phi'(s).

# %%
for y in (0.3, -0.7):
    for v in (-1.0, 0.4, 2.0):
        a = mixup_loss_grad(bce, v, y)
        fy = mixup_loss_value(bce, v, y) + mixup_conjugate(bce, a, y) - a * v
        print(f"y={y:+.1f} s={v:+.1f} gap={fy:.2e}")
