"""Seedable generators for the synthetic benchmark families.

Randomness rule: every draw comes from a PCG64 generator keyed by
``SeedSequence([seed, role])`` where the role ids are fixed module constants
(mu = 0, nu = 1, and separate noise roles). Identical specs therefore produce
bitwise-identical measures on any platform, and noise draws live on their own
substream so the noise-free atoms are unchanged when only ``noise_sigma``
varies.
"""

from dataclasses import dataclass

import numpy as np

from .exceptions import InvalidInput
from .otcore import DiscreteMeasure

__all__ = [
    "GeneratorSpec",
    "generate",
    "hypercube_map",
    "gen_hypercube_pair",
    "gen_disk_annulus_pair",
    "gen_wishart_gaussian_pair",
    "gen_dirac_pair",
    "gen_sphere_vs_dirac",
]

KINDS = (
    "hypercube_pair",
    "disk_annulus_pair",
    "wishart_gaussian_pair",
    "dirac_pair",
    "sphere_vs_dirac",
)

_ROLE_MU = 0
_ROLE_NU = 1
_ROLE_MU_NOISE = 2
_ROLE_NU_NOISE = 3


def _rng(seed: int, role: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence([seed, role]))


@dataclass(frozen=True)
class GeneratorSpec:
    """Parameters of one synthetic measure pair.

    ``kstar`` is the intrinsic displacement dimension (hypercube and
    disk/annulus families), ``degrees_of_freedom`` the Wishart rank,
    ``noise_sigma`` the isotropic noise level (Wishart family only).
    ``coupled`` makes the hypercube target the pushforward of the source
    atoms instead of an independent resample; ``sphere_sampled`` switches
    sphere_vs_dirac from the exact signed-basis atoms to n sampled ones.
    """

    kind: str
    d: int
    n: int = 1
    kstar: int | None = None
    degrees_of_freedom: int | None = None
    noise_sigma: float = 0.0
    seed: int = 0
    coupled: bool = False
    sphere_sampled: bool = False

    def __post_init__(self) -> None:
        if self.kind not in KINDS:
            raise InvalidInput(f"unknown generator kind {self.kind!r}")
        if self.d < 1:
            raise InvalidInput("d must be at least 1")
        if self.n < 1:
            raise InvalidInput("n must be at least 1")
        if self.kstar is not None and not 1 <= self.kstar <= self.d:
            raise InvalidInput("kstar must be in [1, d]")
        if self.degrees_of_freedom is not None and self.degrees_of_freedom < 1:
            raise InvalidInput("degrees_of_freedom must be at least 1")
        if self.noise_sigma < 0:
            raise InvalidInput("noise_sigma must be nonnegative")
        if self.seed < 0:
            raise InvalidInput("seed must be nonnegative")


def _uniform_weights(n: int) -> np.ndarray:
    return np.full(n, 1.0 / n)


def hypercube_map(points: np.ndarray, kstar: int) -> np.ndarray:
    """Apply ``T(x) = x + 2 sign(x) (.) sum_{k <= kstar} e_k`` elementwise.

    ``sign(0)`` is taken as +1 (a measure-zero convention fixed for
    determinism). The displacement ``T(x) - x`` lies in span{e_1..e_kstar},
    and for uniform measures on [-1, 1]^d the population squared Wasserstein
    distance between source and image is ``4 * kstar``.
    """
    pts = np.array(points, dtype=float)
    shift = np.where(pts[:, :kstar] >= 0.0, 2.0, -2.0)
    pts[:, :kstar] += shift
    return pts


def gen_hypercube_pair(spec: GeneratorSpec) -> tuple[DiscreteMeasure, DiscreteMeasure]:
    """Uniform samples on [-1, 1]^d versus samples of the fragmenting map T.

    The target is an independent resample pushed through T (estimation
    setting); with ``spec.coupled`` the source atoms themselves are mapped.
    """
    if spec.kstar is None:
        raise InvalidInput("hypercube_pair requires kstar")
    n, d = spec.n, spec.d
    x = _rng(spec.seed, _ROLE_MU).uniform(-1.0, 1.0, size=(n, d))
    if spec.coupled:
        y = hypercube_map(x, spec.kstar)
    else:
        y = hypercube_map(_rng(spec.seed, _ROLE_NU).uniform(-1.0, 1.0, size=(n, d)), spec.kstar)
    return (
        DiscreteMeasure(x, _uniform_weights(n)),
        DiscreteMeasure(y, _uniform_weights(n)),
    )


def _ball_shell_sample(rng, n, kstar, r_low_pow, r_span_pow):
    # Radius by CDF inversion for the uniform density on a kstar-dimensional
    # shell: r = (r_low^kstar + (r_high^kstar - r_low^kstar) u)^(1/kstar);
    # direction by normalized Gaussians. For kstar=2 this is r = sqrt(u) on
    # the disk and r = sqrt(4 + 5u) on the [2, 3] annulus.
    u = rng.random(n)
    r = (r_low_pow + r_span_pow * u) ** (1.0 / kstar)
    g = rng.standard_normal((n, kstar))
    g /= np.linalg.norm(g, axis=1, keepdims=True)
    return r[:, None] * g


def gen_disk_annulus_pair(spec: GeneratorSpec) -> tuple[DiscreteMeasure, DiscreteMeasure]:
    """Uniform unit disk versus uniform [2, 3] annulus in the first kstar
    coordinates; the remaining d - kstar coordinates are uniform on [0, 1]
    for both measures."""
    if spec.kstar is None:
        raise InvalidInput("disk_annulus_pair requires kstar")
    n, d, ks = spec.n, spec.d, spec.kstar
    rng_mu = _rng(spec.seed, _ROLE_MU)
    rng_nu = _rng(spec.seed, _ROLE_NU)
    x = np.empty((n, d))
    y = np.empty((n, d))
    x[:, :ks] = _ball_shell_sample(rng_mu, n, ks, 0.0, 1.0)
    y[:, :ks] = _ball_shell_sample(rng_nu, n, ks, 2.0**ks, 3.0**ks - 2.0**ks)
    if d > ks:
        x[:, ks:] = rng_mu.random((n, d - ks))
        y[:, ks:] = rng_nu.random((n, d - ks))
    return (
        DiscreteMeasure(x, _uniform_weights(n)),
        DiscreteMeasure(y, _uniform_weights(n)),
    )


def gen_wishart_gaussian_pair(spec: GeneratorSpec) -> tuple[DiscreteMeasure, DiscreteMeasure]:
    """Samples from two centered Gaussians with independent Wishart covariances.

    Each covariance is ``Sigma = A A^T`` with A a d x dof standard-normal
    factor, so its rank is at most ``degrees_of_freedom``; samples are drawn
    as ``z A^T`` directly. Isotropic noise of scale ``noise_sigma`` is added
    from the dedicated noise substreams, leaving the base atoms untouched
    across noise levels.
    """
    if spec.degrees_of_freedom is None:
        raise InvalidInput("wishart_gaussian_pair requires degrees_of_freedom")
    n, d, dof = spec.n, spec.d, spec.degrees_of_freedom
    pts = []
    for role, noise_role in ((_ROLE_MU, _ROLE_MU_NOISE), (_ROLE_NU, _ROLE_NU_NOISE)):
        rng = _rng(spec.seed, role)
        a = rng.standard_normal((d, dof))
        z = rng.standard_normal((n, dof))
        p = z @ a.T
        if spec.noise_sigma > 0:
            p = p + spec.noise_sigma * _rng(spec.seed, noise_role).standard_normal((n, d))
        pts.append(p)
    return (
        DiscreteMeasure(pts[0], _uniform_weights(n)),
        DiscreteMeasure(pts[1], _uniform_weights(n)),
    )


def gen_dirac_pair(spec: GeneratorSpec) -> tuple[DiscreteMeasure, DiscreteMeasure]:
    """Two unit-mass Diracs at independent standard-normal locations."""
    x = _rng(spec.seed, _ROLE_MU).standard_normal(spec.d)
    y = _rng(spec.seed, _ROLE_NU).standard_normal(spec.d)
    return (
        DiscreteMeasure(x[None, :], np.array([1.0])),
        DiscreteMeasure(y[None, :], np.array([1.0])),
    )


def gen_sphere_vs_dirac(spec: GeneratorSpec) -> tuple[DiscreteMeasure, DiscreteMeasure]:
    """A Dirac at the origin versus a measure on the unit sphere.

    Exact variant (default): the 2d signed basis vectors with weights
    1/(2d), which forces the same transport constant as the continuous
    uniform sphere. Sampled variant (``sphere_sampled``): n normalized
    Gaussian directions with uniform weights.
    """
    d = spec.d
    origin = DiscreteMeasure(np.zeros((1, d)), np.array([1.0]))
    if spec.sphere_sampled:
        g = _rng(spec.seed, _ROLE_NU).standard_normal((spec.n, d))
        g /= np.linalg.norm(g, axis=1, keepdims=True)
        sphere = DiscreteMeasure(g, _uniform_weights(spec.n))
    else:
        atoms = np.vstack([np.eye(d), -np.eye(d)])
        sphere = DiscreteMeasure(atoms, _uniform_weights(2 * d))
    return origin, sphere


_GENERATORS = {
    "hypercube_pair": gen_hypercube_pair,
    "disk_annulus_pair": gen_disk_annulus_pair,
    "wishart_gaussian_pair": gen_wishart_gaussian_pair,
    "dirac_pair": gen_dirac_pair,
    "sphere_vs_dirac": gen_sphere_vs_dirac,
}


def generate(spec: GeneratorSpec) -> tuple[DiscreteMeasure, DiscreteMeasure]:
    """Dispatch to the generator selected by ``spec.kind``."""
    return _GENERATORS[spec.kind](spec)
