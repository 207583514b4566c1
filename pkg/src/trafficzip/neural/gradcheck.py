"""Finite-difference validation of the reverse-mode gradients."""

from __future__ import annotations

import numpy as np

from . import autodiff as ad


def grad_check(loss_fn, params: dict[str, np.ndarray], step: float = 1e-4) -> float:
    """Compare reverse-mode gradients against central finite differences.

    ``loss_fn`` maps a dict of Tensors to a scalar Tensor. Checks every entry
    of every weight and returns the maximum relative error
    |fd - ad| / max(|fd|, |ad|, 1). Meant for tiny models: cost is two loss
    evaluations per scalar weight.
    """
    tensors = {k: ad.Tensor(np.array(v, dtype=np.float64), requires_grad=True) for k, v in params.items()}
    loss = loss_fn(tensors)
    loss.backward()
    analytic = {k: (t.grad if t.grad is not None else np.zeros_like(t.data)) for k, t in tensors.items()}

    worst = 0.0
    for name in sorted(tensors):
        base = tensors[name].data
        flat = base.reshape(-1)
        an = analytic[name].reshape(-1)
        for i in range(flat.size):
            keep = flat[i]
            flat[i] = keep + step
            with ad.no_grad():
                hi = float(loss_fn(tensors).data)
            flat[i] = keep - step
            with ad.no_grad():
                lo = float(loss_fn(tensors).data)
            flat[i] = keep
            fd = (hi - lo) / (2.0 * step)
            err = abs(fd - an[i]) / max(abs(fd), abs(an[i]), 1.0)
            worst = max(worst, err)
    return worst
