"""Orbit iteration and sampled escape certificates.

A certificate witnesses, on dense samples, the two inequalities that justify
finite-iteration classification: the map contracts the region inside the
annulus into a ball around the origin, and expands by a factor kappa outside
it. Certification is by sampling, not interval arithmetic: the checks run on
the annulus boundary curves (where the extrema of an analytic map live) plus
seeded interior draws, and the unbounded region is covered by its boundary
samples together with the far-field growth of the leading term. The dump
records this as a sampled certificate.
"""

from __future__ import annotations

import enum
import json
import math
from dataclasses import dataclass, asdict

import numpy as np

from .curves import AnnulusSpec, distance_to_polyline, sample_interior
from .errors import NoDegreeFound, SamplingFailure
from .shapepoly import PolynomialKernel, ShapePolynomial, p_step_array


class OrbitStatus(enum.IntEnum):
    INTERIOR_CAPTURED = 0
    ESCAPED = 1
    UNDECIDED = 2


@dataclass(frozen=True)
class OrbitResult:
    status: OrbitStatus
    iterations: int
    final_magnitude_exponent: int


def iterate(kernel, z0: complex, escape_radius: float, capture_radius: float,
            max_iter: int = 200) -> OrbitResult:
    """Iterate a per-pixel kernel from z0 until the orbit magnitude leaves
    [capture_radius, escape_radius] or the budget runs out. The kernel works
    in the shifted frame; callers shift z0 accordingly."""
    if not (escape_radius > capture_radius > 0):
        raise ValueError("need escape_radius > capture_radius > 0")
    log_cap = math.log2(capture_radius)
    log_esc = math.log2(escape_radius)
    z = complex(z0)
    lm = math.log2(abs(z)) if z != 0 else -math.inf
    if lm < log_cap:
        return OrbitResult(OrbitStatus.INTERIOR_CAPTURED, 0, _expo(lm))
    if lm > log_esc:
        return OrbitResult(OrbitStatus.ESCAPED, 0, _expo(lm))
    buf = np.empty(1, dtype=np.complex128)
    for m in range(1, max_iter + 1):
        buf[0] = z
        vals, log2m = kernel.step(buf)
        lm = float(log2m[0])
        if math.isnan(lm):
            return OrbitResult(OrbitStatus.UNDECIDED, m, 0)
        if lm < log_cap:
            return OrbitResult(OrbitStatus.INTERIOR_CAPTURED, m, _expo(lm))
        if lm > log_esc:
            return OrbitResult(OrbitStatus.ESCAPED, m, _expo(lm))
        z = complex(vals[0])
    return OrbitResult(OrbitStatus.UNDECIDED, max_iter, _expo(lm))


def _expo(log2m: float) -> int:
    if log2m == -math.inf:
        return -(2 ** 30)
    if log2m == math.inf:
        return 2 ** 30
    return int(round(log2m))


# ---------------------------------------------------------------------------
# certification


@dataclass(frozen=True)
class EscapeCertificate:
    r_inner: float
    kappa: float
    K_bound: float
    alpha: float
    beta: float
    gamma_inf: float
    n_certified: int
    inside_max: float
    outside_min_ratio: float
    sample_counts: dict
    passed: bool

    @property
    def escape_radius(self) -> float:
        """Radius beyond which every point lies in the certified expanding
        region (5% slack over the sampled supremum)."""
        return 1.05 * self.beta

    @property
    def capture_radius(self) -> float:
        return self.r_inner

    def margins(self) -> dict:
        return {
            "inside": self.r_inner - self.inside_max,
            "outside": self.outside_min_ratio - self.kappa,
            "ball": self.kappa * self.gamma_inf - self.beta,
        }


def _abs_p(shape: ShapePolynomial, z: np.ndarray) -> np.ndarray:
    _, log2m = p_step_array(shape, z)
    with np.errstate(over="ignore"):
        return np.exp2(log2m)


def certify(shape: ShapePolynomial, annulus: AnnulusSpec,
            samples_per_region: int = 4096, seed: int = 0) -> EscapeCertificate:
    """Sampled escape certificate for a shape polynomial against its annulus
    (both in the shifted frame: the origin must lie inside the inner curve).

    PASS means: |P| < r_inner on the region inside the annulus (boundary
    curve plus seeded interior draws), |P| > kappa |z| on the outer boundary,
    and kappa * gamma_inf exceeds the supremum of |z| off the unbounded side.
    """
    if samples_per_region < 256:
        raise SamplingFailure("need at least 256 samples per region")
    inner, outer = annulus.inner, annulus.outer
    alpha = float(np.abs(inner.points).max())
    beta = float(np.abs(outer.points).max())
    gamma = float(distance_to_polyline([0j], outer.points)[0])
    d_inner = float(distance_to_polyline([0j], inner.points)[0])
    if not inner.contains([0j])[0]:
        raise SamplingFailure("origin is not inside the annulus")
    k_bound = max(1.0, beta / gamma)
    kappa = 2.0 * k_bound
    r_inner = min(gamma / 2.0, d_inner)

    rng = np.random.default_rng(seed)
    inside_pts = np.concatenate([
        sample_interior(inner, samples_per_region, rng),
        inner.boundary_samples(samples_per_region),
    ])
    outer_pts = outer.boundary_samples(samples_per_region)

    inside_max = float(_abs_p(shape, inside_pts).max())
    ratios = _abs_p(shape, outer_pts) / np.abs(outer_pts)
    outside_min_ratio = float(ratios.min())

    passed = (inside_max < r_inner
              and outside_min_ratio > kappa
              and kappa * gamma > beta)
    return EscapeCertificate(
        r_inner=r_inner, kappa=kappa, K_bound=k_bound, alpha=alpha, beta=beta,
        gamma_inf=gamma, n_certified=shape.n, inside_max=inside_max,
        outside_min_ratio=outside_min_ratio,
        sample_counts={"inside": int(len(inside_pts)), "outer": int(len(outer_pts))},
        passed=passed)


def find_min_degree(builder, annulus: AnnulusSpec, n_schedule,
                    samples_per_region: int = 4096, seed: int = 0):
    """Smallest n in the schedule whose certificate passes. builder maps a
    root count n to a ShapePolynomial in the annulus frame."""
    best = None
    best_margin = -math.inf
    for n in n_schedule:
        shape = builder(int(n))
        cert = certify(shape, annulus, samples_per_region, seed)
        if cert.passed:
            return shape, cert
        worst = min(cert.margins().values())
        if worst > best_margin:
            best_margin = worst
            best = cert
    raise NoDegreeFound(
        f"no degree in {list(n_schedule)} certified",
        best=None if best is None else asdict(best))


def default_builder(m, annulus_translated: AnnulusSpec, *, t: complex,
                    max_halvings: int = 20, epsilon: float | None = None):
    """Standard builder closure: picks the inflation once, then samples roots
    for each requested n."""
    from .shapepoly import sample_roots, select_epsilon

    eps = epsilon if epsilon is not None else select_epsilon(
        m, annulus_translated, max_halvings=max_halvings)

    def build(n: int) -> ShapePolynomial:
        return sample_roots(m, eps, n, t=t)

    return build, eps


# ---------------------------------------------------------------------------
# persistence


def save_certificate(cert: EscapeCertificate, path, config: dict | None = None) -> None:
    obj = {"kind": "escape_certificate", "sampled": True}
    obj.update(asdict(cert))
    obj["margins"] = cert.margins()
    obj["capture_radius"] = cert.capture_radius
    obj["escape_radius"] = cert.escape_radius
    if config is not None:
        obj["config"] = config
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(obj, fh, indent=1, sort_keys=True)
        fh.write("\n")


def load_certificate(path) -> EscapeCertificate:
    with open(path, "r", encoding="utf-8") as fh:
        obj = json.load(fh)
    fields = {k: obj[k] for k in (
        "r_inner", "kappa", "K_bound", "alpha", "beta", "gamma_inf",
        "n_certified", "inside_max", "outside_min_ratio", "sample_counts",
        "passed")}
    return EscapeCertificate(**fields)


def make_kernel(shape: ShapePolynomial) -> PolynomialKernel:
    return PolynomialKernel(shape)
