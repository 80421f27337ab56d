import numpy as np


def generic_gradient_instance(rng, dim=6, num_boxes=6, batch=8, kink_tol=1e-4):
    """Random training instance resampled until no input coordinate sits near
    any box face, so central finite differences are valid at step 1e-5."""
    for _ in range(200):
        xs = rng.uniform(0, 1, (batch, dim))
        centers = rng.uniform(0.2, 0.8, (num_boxes, dim))
        half = rng.uniform(0.05, 0.2, (num_boxes, dim))
        lower, upper = centers - half, centers + half
        labels = rng.integers(0, 3, num_boxes)
        if np.unique(labels).size < 2:
            continue
        gap_lo = np.abs(xs[:, None, :] - lower[None, :, :]).min()
        gap_hi = np.abs(xs[:, None, :] - upper[None, :, :]).min()
        if min(gap_lo, gap_hi) < kink_tol:
            continue
        return xs, rng.integers(0, 3, batch), lower, upper, labels
    raise RuntimeError("could not sample a kink-free instance")
