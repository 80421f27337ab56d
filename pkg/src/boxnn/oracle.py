"""Ground-truth verification machinery.

The central tool is an exhaustive sparse attack that is provably complete
for box models: every box distance depends on the input only through the
per-coordinate interval-membership pattern, and that pattern is constant
between consecutive box endpoints. Searching one representative value per
arrangement cell (the clipped endpoints themselves, the midpoints of the
gaps between them, and the domain bounds 0 and 1) therefore covers every
achievable prediction, making certificate-soundness checks exact at small
scale.

Also here: a brute-force distance oracle, the synthetic two-ball
classification task, the closed-form localization rate of Unif([0, a]^n),
and a Monte Carlo check of the distance-concentration bound on the cube.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np

from .certify import cert, predict, predict_batch
from .core import BoxModel, BoxRegion, _as_vector
from .data import Dataset

__all__ = [
    "AttackBudgetError",
    "SynthSpec",
    "exhaustive_attack",
    "attack_candidate_count",
    "brute_force_l0_distance",
    "synth_two_class",
    "ball_box_model",
    "localization_eps_uniform",
    "ConcentrationCheck",
    "concentration_mc_check",
    "random_box_model",
    "soundness_sweep",
    "SoundnessReport",
    "run_verify_suite",
]


class AttackBudgetError(ValueError):
    """Raised when the exhaustive search space exceeds the configured budget."""


def brute_force_l0_distance(x, box: BoxRegion) -> int:
    """Independent oracle: minimize the coordinate-difference count over a
    per-coordinate candidate grid.

    For each coordinate the only useful values of a witness y inside the box
    are x_i itself (if admissible) or an interval endpoint, so enumerating
    the grid of {x_i, lower_i, upper_i} intersected with the interval is
    exhaustive. Exponential in dimension; intended for small instances.
    """
    x = _as_vector(x, box.dim)
    grids = []
    for i in range(box.dim):
        vals = {float(box.lower[i]), float(box.upper[i])}
        if box.lower[i] <= x[i] <= box.upper[i]:
            vals.add(float(x[i]))
        grids.append(sorted(vals))
    best = box.dim
    for y in itertools.product(*grids):
        best = min(best, int(sum(1 for yi, xi in zip(y, x) if yi != xi)))
        if best == 0:
            break
    return best


def _coordinate_candidates(model: BoxModel) -> list[np.ndarray]:
    """Per-coordinate arrangement representatives within [0, 1]."""
    out = []
    for i in range(model.dim):
        pts = np.concatenate([model.lower[:, i], model.upper[:, i], [0.0, 1.0]])
        pts = np.unique(np.clip(pts, 0.0, 1.0))
        mids = 0.5 * (pts[:-1] + pts[1:])
        out.append(np.unique(np.concatenate([pts, mids])))
    return out


def attack_candidate_count(model: BoxModel, k: int) -> int:
    """Number of perturbed points the exhaustive attack would evaluate."""
    sizes = [c.size for c in _coordinate_candidates(model)]
    total = 0
    for subset_size in range(1, k + 1):
        for subset in itertools.combinations(range(model.dim), subset_size):
            total += math.prod(sizes[i] for i in subset)
    return total


def exhaustive_attack(model: BoxModel, x, k: int, budget: int = 5_000_000):
    """Search every arrangement cell reachable by editing at most k coordinates.

    Returns the first perturbed input in [0, 1]^n whose prediction differs
    from the prediction at x, or None when no such point exists (which, by
    the completeness argument in the module docstring, proves there is none).
    Subsets are visited in size-then-lexicographic order, so the result is
    deterministic. Raises AttackBudgetError when the candidate count exceeds
    budget; shrink the instance or lower k.
    """
    x = _as_vector(x, model.dim)
    if not 0 <= k <= model.dim:
        raise ValueError(f"k must lie in [0, {model.dim}], got {k}")
    if k == 0:
        return None
    total = attack_candidate_count(model, k)
    if total > budget:
        raise AttackBudgetError(
            f"attack would evaluate {total} candidates (budget {budget}); "
            "use a smaller model, dimension, or k"
        )
    base_pred = predict(model, x)
    candidates = _coordinate_candidates(model)
    for subset_size in range(1, k + 1):
        for subset in itertools.combinations(range(model.dim), subset_size):
            grids = np.meshgrid(*[candidates[i] for i in subset], indexing="ij")
            values = np.stack([g.ravel() for g in grids], axis=1)
            batch = np.broadcast_to(x, (values.shape[0], model.dim)).copy()
            batch[:, list(subset)] = values
            hits = np.nonzero(predict_batch(model, batch) != base_pred)[0]
            if hits.size:
                return batch[hits[0]]
    return None


@dataclass(frozen=True)
class SynthSpec:
    """Two-class task: uniform draws from two disjoint sup-norm balls.

    The balls are centered on center0/center1 (scalars broadcast to constant
    vectors; defaults 0.25 and 0.75 place the classic +/- unit centers inside
    the unit cube) with radius eps_inf. Both balls must fit in [0, 1]^n and
    must not intersect.
    """

    dim: int = 8
    eps_inf: float = 0.05
    center0: np.ndarray = 0.25
    center1: np.ndarray = 0.75
    samples_per_class: int = 100
    seed: int = 0

    def __post_init__(self):
        if self.dim < 1:
            raise ValueError("dim must be >= 1")
        if not (math.isfinite(self.eps_inf) and self.eps_inf > 0):
            raise ValueError("eps_inf must be finite and > 0")
        if self.samples_per_class < 1:
            raise ValueError("samples_per_class must be >= 1")
        c0 = np.broadcast_to(np.asarray(self.center0, dtype=np.float64), (self.dim,)).copy()
        c1 = np.broadcast_to(np.asarray(self.center1, dtype=np.float64), (self.dim,)).copy()
        for name, c in (("center0", c0), ("center1", c1)):
            if (c - self.eps_inf).min() < 0.0 or (c + self.eps_inf).max() > 1.0:
                raise ValueError(f"{name} ball leaves [0, 1]^n")
        if np.abs(c0 - c1).max() <= 2 * self.eps_inf:
            raise ValueError("the two balls overlap")
        object.__setattr__(self, "center0", c0)
        object.__setattr__(self, "center1", c1)


def synth_two_class(spec: SynthSpec) -> Dataset:
    """Equal-count samples from the two balls: class 0 block, then class 1."""
    rng = np.random.default_rng(spec.seed)
    shape = (spec.samples_per_class, spec.dim)
    x0 = spec.center0 + rng.uniform(-spec.eps_inf, spec.eps_inf, shape)
    x1 = spec.center1 + rng.uniform(-spec.eps_inf, spec.eps_inf, shape)
    xs = np.concatenate([x0, x1])
    ys = np.repeat(np.array([0, 1], dtype=np.int64), spec.samples_per_class)
    return Dataset(xs=xs, ys=ys, num_classes=2)


def ball_box_model(spec: SynthSpec) -> BoxModel:
    """The ideal two-box model whose boxes are exactly the two balls."""
    return BoxModel(
        lower=np.stack([spec.center0 - spec.eps_inf, spec.center1 - spec.eps_inf]),
        upper=np.stack([spec.center0 + spec.eps_inf, spec.center1 + spec.eps_inf]),
        labels=np.array([0, 1], dtype=np.int64),
        num_classes=2,
    )


def localization_eps_uniform(a: float, n: int, delta: float) -> float:
    """Localization rate of Unif([0, a]^n) on the unit cube.

    The support itself has volume a^n, so keeping mass 1 - delta on a subset
    forces its volume above (1 - delta) * a^n; rearranged, the distribution
    puts mass 1 - delta on a set of volume exp(-rate) with
    rate = log(1/(1 - delta)) + n * log(1/a).
    """
    if not 0.0 < a <= 1.0:
        raise ValueError(f"a must lie in (0, 1], got {a}")
    if not 0.0 <= delta < 1.0:
        raise ValueError(f"delta must lie in [0, 1), got {delta}")
    if n < 1:
        raise ValueError("n must be >= 1")
    return -math.log1p(-delta) - n * math.log(a)


@dataclass(frozen=True)
class ConcentrationCheck:
    lhs_estimate: float
    rhs_bound: float
    stderr: float
    passed: bool


def concentration_mc_check(
    box: BoxRegion, t: int, samples: int, seed: int
) -> ConcentrationCheck:
    """Monte Carlo check of P(dist(x, B) >= t) <= exp(-t^2/n) / vol(B) for
    x uniform on the cube.

    The bound is a theorem, so the check passes unless the implementation is
    broken; a three-sigma slack keeps sampling noise from producing flakes.
    """
    if np.any(box.lower < 0.0) or np.any(box.upper > 1.0):
        raise ValueError("box must lie within [0, 1]^n")
    vol = float(np.prod(box.upper - box.lower))
    if vol <= 0.0:
        raise ValueError("box must have positive volume")
    if t < 0:
        raise ValueError("t must be >= 0")
    if samples < 1:
        raise ValueError("samples must be >= 1")
    rng = np.random.default_rng(seed)
    xs = rng.uniform(0.0, 1.0, (samples, box.dim))
    outside = (xs < box.lower) | (xs > box.upper)
    dists = outside.sum(axis=1)
    lhs = float(np.mean(dists >= t))
    stderr = math.sqrt(lhs * (1.0 - lhs) / samples)
    rhs = math.exp(-t * t / box.dim) / vol
    return ConcentrationCheck(
        lhs_estimate=lhs,
        rhs_bound=rhs,
        stderr=stderr,
        passed=lhs <= rhs + 3.0 * stderr,
    )


def random_box_model(
    rng: np.random.Generator,
    dim: int,
    num_boxes: int,
    num_classes: int,
    separated: bool = False,
) -> BoxModel:
    """Random model for sweep tests; guarantees two distinct labels when
    possible so certificates stay non-degenerate.

    The free-form family scatters boxes anywhere (most certificates come out
    zero); the separated family clusters each class's boxes around its own
    anchor so nonzero radii actually occur and the attack has real work to do.
    """
    while True:
        labels = rng.integers(0, num_classes, num_boxes)
        if num_classes == 1 or num_boxes == 1 or np.unique(labels).size > 1:
            break
    if separated:
        anchors = rng.uniform(0.15, 0.85, (num_classes, dim))
        centers = anchors[labels] + rng.uniform(-0.08, 0.08, (num_boxes, dim))
        half = rng.uniform(0.01, 0.12, (num_boxes, dim))
        lower, upper = centers - half, centers + half
    else:
        lower = rng.uniform(-0.2, 1.0, (num_boxes, dim))
        upper = lower + rng.uniform(0.0, 0.6, (num_boxes, dim))
    return BoxModel(lower=lower, upper=upper, labels=labels, num_classes=num_classes)


@dataclass
class SoundnessReport:
    instances: int
    inputs_checked: int
    attacks_run: int
    violations: list = field(default_factory=list)
    radius_tight_probes: int = 0
    radius_tight_hits: int = 0

    @property
    def passed(self) -> bool:
        return not self.violations


def soundness_sweep(
    num_instances: int,
    inputs_per_instance: int,
    seed: int,
    max_dim: int = 6,
    max_boxes: int = 5,
    max_classes: int = 3,
    probe_tightness: bool = False,
) -> SoundnessReport:
    """Certificate-soundness sweep over random small instances.

    For every random model and input the exhaustive attack runs at k equal to
    the certified radius; any prediction flip is recorded as a violation.
    Half the instances use the separated-cluster family and half the inputs
    sit near box centers, so nonzero radii are well represented. With
    probe_tightness, the attack also runs at radius + 1 and the success count
    is reported (informational only: the certificate is one-sided).
    """
    rng = np.random.default_rng(seed)
    report = SoundnessReport(instances=num_instances, inputs_checked=0, attacks_run=0)
    for instance in range(num_instances):
        dim = int(rng.integers(2, max_dim + 1))
        num_boxes = int(rng.integers(2, max_boxes + 1))
        num_classes = int(rng.integers(2, max_classes + 1))
        model = random_box_model(rng, dim, num_boxes, num_classes, separated=instance % 2 == 0)
        for probe in range(inputs_per_instance):
            if probe % 2 == 0:
                x = rng.uniform(0.0, 1.0, dim)
            else:
                m = int(rng.integers(0, num_boxes))
                center = 0.5 * (model.lower[m] + model.upper[m])
                x = np.clip(center + rng.normal(0.0, 0.05, dim), 0.0, 1.0)
            result = cert(model, x)
            report.inputs_checked += 1
            if result.certified_radius > 0:
                report.attacks_run += 1
                adv = exhaustive_attack(model, x, result.certified_radius)
                if adv is not None:
                    report.violations.append(
                        {
                            "dim": dim,
                            "radius": result.certified_radius,
                            "x": x.tolist(),
                            "adv": adv.tolist(),
                        }
                    )
            if probe_tightness and result.certified_radius < dim:
                report.radius_tight_probes += 1
                adv = exhaustive_attack(model, x, result.certified_radius + 1)
                if adv is not None:
                    report.radius_tight_hits += 1
    return report


def _distance_oracle_sweep(trials: int, seed: int, max_dim: int = 6) -> dict:
    from .core import box_l0_distance

    rng = np.random.default_rng(seed)
    mismatches = 0
    for _ in range(trials):
        dim = int(rng.integers(1, max_dim + 1))
        lower = rng.uniform(-0.25, 1.0, dim)
        upper = lower + rng.uniform(0.0, 0.75, dim)
        box = BoxRegion(lower, upper, 0)
        x = rng.uniform(0.0, 1.0, dim)
        if box_l0_distance(x, box) != brute_force_l0_distance(x, box):
            mismatches += 1
    return {"trials": trials, "mismatches": mismatches, "passed": mismatches == 0}


def _synthetic_robust_risk(seed: int) -> dict:
    spec = SynthSpec(seed=seed)
    dataset = synth_two_class(spec)
    model = ball_box_model(spec)
    failures = 0
    for x, y in zip(dataset.xs, dataset.ys):
        if predict(model, x) != y or exhaustive_attack(model, x, 1) is not None:
            failures += 1
    risk = failures / dataset.num_samples
    return {"samples": dataset.num_samples, "robust_risk_at_1": risk, "passed": risk == 0.0}


def _concentration_sweep(num_boxes: int, samples: int, seed: int, dim: int = 10) -> dict:
    rng = np.random.default_rng(seed)
    checks = 0
    failures = 0
    for b in range(num_boxes):
        lower = rng.uniform(0.0, 0.5, dim)
        upper = lower + rng.uniform(0.1, 0.5, dim)
        upper = np.minimum(upper, 1.0)
        box = BoxRegion(lower, upper, 0)
        for t in (1, 2, 3):
            result = concentration_mc_check(box, t, samples, seed=int(rng.integers(2**32)))
            checks += 1
            if not result.passed:
                failures += 1
    return {"checks": checks, "failures": failures, "passed": failures == 0}


def run_verify_suite(
    seed: int = 0,
    instances: int = 200,
    inputs_per_instance: int = 20,
    distance_trials: int = 1000,
    concentration_boxes: int = 20,
    concentration_samples: int = 100_000,
) -> dict:
    """Full verification suite; returns a JSON-serializable summary."""
    sweep = soundness_sweep(instances, inputs_per_instance, seed, probe_tightness=True)
    sections = {
        "certificate_soundness": {
            "instances": sweep.instances,
            "inputs_checked": sweep.inputs_checked,
            "attacks_run": sweep.attacks_run,
            "violations": len(sweep.violations),
            "radius_plus_one_attack_rate": (
                sweep.radius_tight_hits / sweep.radius_tight_probes
                if sweep.radius_tight_probes
                else None
            ),
            "passed": sweep.passed,
        },
        "distance_oracle": _distance_oracle_sweep(distance_trials, seed + 1),
        "synthetic_two_class": _synthetic_robust_risk(seed + 2),
        "concentration_bound": _concentration_sweep(
            concentration_boxes, concentration_samples, seed + 3
        ),
    }
    return {"passed": all(s["passed"] for s in sections.values()), "sections": sections}
