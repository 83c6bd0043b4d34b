"""Spring laws, Maxwellians, Rouse matrices, response curves, entropy toolkit.

Everything in this module is a pure function of immutable parameter records,
safe to call concurrently.  The solvers build on three ingredient groups:

* finitely extensible (or Hookean) spring potentials and their forces,
* Gauss-type radial quadrature rules that absorb the Maxwellian weight,
* the convex entropy family F, F^L, F^L_delta with the matching cut-off
  functions beta^L, beta^L_delta used by the implicit kinetic step.
"""

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import quad
from scipy.optimize import minimize_scalar
from scipy.special import roots_jacobi, roots_laguerre, roots_legendre

FENE = "fene"
CPAIL = "cpail"
HOOKEAN = "hookean"
INVERSE_LANGEVIN = "inverse_langevin"

FAMILIES = (FENE, CPAIL, HOOKEAN, INVERSE_LANGEVIN)

#: distinguished growth exponent for laws whose configuration ball is all of R^d
UNBOUNDED = math.inf

class AdmissibilityError(ValueError):
    """Raised when spring-law parameters violate the growth hypotheses."""


# ---------------------------------------------------------------------------
# spring laws
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SpringLaw:
    """One spring of a bead-spring chain.

    Parameters
    ----------
    family : str
        One of ``fene``, ``cpail``, ``hookean``, ``inverse_langevin``.
    b : float
        Maximal squared extension (dimensionless).  Ignored for Hookean.
    d : int
        Spatial dimension of the connector vectors (2 or 3).
    """

    family: str
    b: float = 0.0
    d: int = 2

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise AdmissibilityError(f"unknown spring family {self.family!r}")
        if self.d not in (2, 3):
            raise AdmissibilityError(f"spatial dimension must be 2 or 3, got {self.d}")
        if self.family == FENE and not self.b > 2.0:
            raise AdmissibilityError(
                f"FENE requires b > 2 (gamma = b/2 > 1); got b = {self.b}: "
                "gamma <= 1 inadmissible")
        if self.family == CPAIL and not self.b > 3.0:
            raise AdmissibilityError(
                f"CPAIL requires b > 3 (gamma = b/3 > 1); got b = {self.b}: "
                "gamma <= 1 inadmissible")
        if self.family == INVERSE_LANGEVIN and not self.b > 0.0:
            raise AdmissibilityError("inverse_langevin requires b > 0")

    @property
    def bounded(self):
        return self.family != HOOKEAN

    @property
    def radius(self):
        """Radius of the configuration ball (inf for Hookean)."""
        return math.sqrt(self.b) if self.bounded else math.inf

    @property
    def s_max(self):
        """Upper end of the admissible range O of s = |q|^2/2."""
        return self.b / 2.0 if self.bounded else math.inf


def potential_value(law, s):
    """Spring potential U(s) at s = |q|^2/2.  U(0) = 0, U nonnegative."""
    s = np.asarray(s, dtype=float)
    if np.any(s < 0.0):
        raise ValueError("potential argument s must be nonnegative")
    if law.bounded and np.any(s >= law.s_max):
        raise ValueError(
            f"s outside the admissible range [0, b/2) = [0, {law.s_max}) "
            f"of the {law.family} potential")
    if law.family == HOOKEAN:
        out = s
    elif law.family == FENE:
        out = -(law.b / 2.0) * np.log1p(-2.0 * s / law.b)
    elif law.family == CPAIL:
        out = s / 3.0 - (law.b / 3.0) * np.log1p(-2.0 * s / law.b)
    else:  # inverse Langevin, integrated force law
        x = np.sqrt(2.0 * s / law.b)
        ell = inverse_langevin(x)
        # antiderivative of (sqrt(b)/3) L^{-1}(r/sqrt(b)) in r
        with np.errstate(invalid="ignore"):
            core = x * ell + np.log(np.where(ell > 0, ell / np.sinh(ell), 1.0))
        out = (law.b / 3.0) * np.where(ell > 0, core, 0.0)
    return out if out.ndim else float(out)


def potential_derivative(law, s):
    """U'(s); the spring force is F(q) = U'(|q|^2/2) q."""
    s = np.asarray(s, dtype=float)
    if np.any(s < 0.0):
        raise ValueError("potential argument s must be nonnegative")
    if law.bounded and np.any(s >= law.s_max):
        raise ValueError(
            f"s outside the admissible range [0, b/2) = [0, {law.s_max}) "
            f"of the {law.family} potential")
    if law.family == HOOKEAN:
        out = np.ones_like(s)
    elif law.family == FENE:
        out = 1.0 / (1.0 - 2.0 * s / law.b)
    elif law.family == CPAIL:
        out = (1.0 - 2.0 * s / (3.0 * law.b)) / (1.0 - 2.0 * s / law.b)
    else:
        x = np.sqrt(2.0 * s / law.b)
        ell = inverse_langevin(x)
        r = np.sqrt(2.0 * s)
        # U'(s) r = (sqrt(b)/3) L^{-1}(r/sqrt(b)); take the r -> 0 limit 1/3... *1
        out = np.where(r > 0.0,
                       (math.sqrt(law.b) / 3.0) * ell / np.where(r > 0, r, 1.0),
                       1.0)
    return out if out.ndim else float(out)


def spring_force(law, q):
    """Elastic force F(q) = U'(|q|^2/2) q of a single spring; odd in q."""
    q = np.asarray(q, dtype=float)
    s = 0.5 * float(np.dot(q, q))
    if law.bounded and 2.0 * s >= law.b:
        raise ValueError(
            f"|q|^2 = {2 * s} outside the open ball |q|^2 < b = {law.b}")
    return potential_derivative(law, s) * q


def growth_exponent(law):
    """Decay exponent gamma of the Maxwellian at the ball boundary.

    FENE gives b/2, CPAIL gives b/3 (both require gamma > 1); the Hookean
    law has no finite configuration ball and returns ``UNBOUNDED``.
    """
    if law.family == FENE:
        return law.b / 2.0
    if law.family == CPAIL:
        return law.b / 3.0
    if law.family == HOOKEAN:
        return UNBOUNDED
    raise AdmissibilityError(
        "no growth exponent is defined for the inverse Langevin law")


def langevin(t):
    """Langevin function L(t) = coth(t) - 1/t, with L(0) = 0."""
    t = np.asarray(t, dtype=float)
    small = np.abs(t) < 1e-4
    series = t / 3.0 - t ** 3 / 45.0
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        exact = 1.0 / np.tanh(np.where(small, 1.0, t)) - 1.0 / np.where(small, 1.0, t)
    out = np.where(small, series, exact)
    return out if out.ndim else float(out)


def inverse_langevin(x, tol=1e-14, maxit=60):
    """Invert L(t) = coth(t) - 1/t by safeguarded Newton iteration.

    Accepts x in [0, 1); L^-1 has a vertical asymptote at x = 1.
    """
    x = np.asarray(x, dtype=float)
    if np.any(x < 0.0) or np.any(x >= 1.0):
        raise ValueError("inverse Langevin argument must lie in [0, 1)")
    # Pade-type starting guess, exact at both ends
    t = x * (3.0 - x * x) / (1.0 - x * x)
    t = np.where(x > 0, np.maximum(t, 1e-12), 0.0)
    for _ in range(maxit):
        lt = langevin(t)
        # L'(t) = 1/t^2 - 1/sinh^2 t, series 1/3 - t^2/15 near 0
        small = t < 1e-4
        with np.errstate(over="ignore", divide="ignore", invalid="ignore"):
            dl = np.where(small, 1.0 / 3.0 - t * t / 15.0,
                          1.0 / np.where(small, 1.0, t) ** 2
                          - 1.0 / np.sinh(np.where(small, 1.0, t)) ** 2)
        step = (lt - x) / np.maximum(dl, 1e-300)
        t_new = t - step
        t_new = np.where(t_new < 0.0, 0.5 * t, t_new)  # safeguard
        done = np.all(np.abs(t_new - t) <= tol * (1.0 + np.abs(t)))
        t = t_new
        if done:
            break
    return t if t.ndim else float(t)


# ---------------------------------------------------------------------------
# Maxwellian-weighted radial quadrature (single spring, d = 2)
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class RadialRule:
    """Gauss rule in the radial variable of one configuration ball.

    ``w_m[k] ~ int_0^R e^{-U} f r dr`` and ``w_mu[k] ~ int_0^R e^{-U} U' f r dr``
    for nodal samples f(r_k); the Maxwellian is unnormalized here.  For FENE
    the underlying Jacobi rule has exponent gamma - 1, which makes *both*
    weight sets exact on polynomials (the drag and stress integrands carry
    M U' ~ dist^{gamma-1}).
    """

    r: np.ndarray
    w_m: np.ndarray
    w_mu: np.ndarray
    s_max: float


def maxwellian_rule(law, nr, s_max=None):
    """Radial quadrature adapted to the Maxwellian of ``law`` (d = 2).

    Parameters
    ----------
    nr : int
        Number of radial Gauss nodes (all interior; never on the boundary).
    s_max : float, optional
        Truncation of |q|^2/2 for the Hookean family (default 20).
    """
    if nr < 2:
        raise ValueError("need at least 2 radial nodes")
    if law.d != 2:
        raise NotImplementedError("radial rules are implemented for d = 2")
    if law.family == HOOKEAN:
        # substitute s = r^2/2.  The default rule is Gauss-Laguerre, which is
        # exact for polynomials against the full Gaussian; passing s_max
        # switches to a Legendre rule on the truncated range (0, s_max) with
        # the weight e^{-s} folded into the weights (useful when strongly
        # stretched fields must be resolved on few nodes).
        if s_max is None:
            s, w = roots_laguerre(nr)
            return RadialRule(np.sqrt(2.0 * s), w, w.copy(), float(s[-1]))
        smax = float(s_max)
        x, v = roots_legendre(nr)
        s = 0.5 * smax * (x + 1.0)
        w = 0.5 * smax * v * np.exp(-s)
        return RadialRule(np.sqrt(2.0 * s), w, w.copy(), smax)

    b = law.b
    if law.family in (FENE, CPAIL):
        gamma = growth_exponent(law)
        x, v = roots_jacobi(nr, gamma - 1.0, 0.0)
        r = np.sqrt(b * (x + 1.0) / 2.0)
        # int_0^sqrt(b) (1-r^2/b)^(gamma-1) f r dr = (b/4) 2^(1-gamma) sum v f
        base = (b / 4.0) * 2.0 ** (1.0 - gamma) * v
        w_mu = base.copy()
        w_m = base * (1.0 - x) / 2.0  # extra (1 - r^2/b) factor
        if law.family == CPAIL:
            expfac = np.exp(-r * r / 6.0)
            w_m = w_m * expfac
            # M U' = e^{-r^2/6}(1-r^2/b)^{gamma-1}(1 - r^2/(3b))
            w_mu = w_mu * expfac * (1.0 - r * r / (3.0 * b))
        return RadialRule(r, w_m, w_mu, b / 2.0)

    # inverse Langevin: essential decay at the boundary, plain Legendre nodes
    x, v = roots_legendre(nr)
    r = np.sqrt(b * (x + 1.0) / 2.0)
    jac = (b / 4.0) * v  # dx -> r dr
    s = 0.5 * r * r
    w_m = jac * np.exp(-potential_value(law, s))
    w_mu = w_m * potential_derivative(law, s)
    return RadialRule(r, w_m, w_mu, b / 2.0)


def partition_constant(law, rule):
    """Z = int_D e^{-U(|q|^2/2)} dq computed with the given radial rule (d=2)."""
    z = 2.0 * math.pi * float(np.sum(rule.w_m))
    if not math.isfinite(z) or z <= 0.0:
        raise FloatingPointError(f"partition constant quadrature returned {z}")
    return z


@dataclass(frozen=True)
class MaxwellianSpec:
    """A spring law together with its quadrature-normalized partition constant."""

    law: SpringLaw
    z: float

    @classmethod
    def build(cls, law, nr=12, s_max=None):
        return cls(law, partition_constant(law, maxwellian_rule(law, nr, s_max)))

    def density(self, q):
        """Normalized Maxwellian M(q) = e^{-U}/Z for a single spring."""
        q = np.asarray(q, dtype=float)
        s = 0.5 * np.sum(q * q, axis=-1)
        return np.exp(-potential_value(self.law, s)) / self.z


def second_moment_integrals(law, rule):
    """Quadrature values of int M [1, U^2, (U')^2] dq (normalized M).

    Finite values confirm the integrability that the growth conditions
    guarantee for gamma > 1.
    """
    s = 0.5 * rule.r ** 2
    u = potential_value(law, s)
    up = potential_derivative(law, s)
    z = float(np.sum(rule.w_m))
    one = 1.0
    u2 = float(np.sum(rule.w_m * u * u)) / z
    up2 = float(np.sum(rule.w_m * up * up)) / z
    return one, u2, up2


# ---------------------------------------------------------------------------
# Rouse matrix
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class RouseMatrix:
    """Symmetric positive definite connectivity matrix of the chain."""

    a: np.ndarray
    a0: float = field(init=False)

    def __post_init__(self):
        a = np.asarray(self.a, dtype=float)
        if a.ndim != 2 or a.shape[0] != a.shape[1] or a.shape[0] < 1:
            raise ValueError("Rouse matrix must be square and nonempty")
        if not np.allclose(a, a.T, atol=1e-13):
            raise ValueError("Rouse matrix must be symmetric")
        eigs = np.linalg.eigvalsh(a)
        if eigs[0] <= 0.0:
            raise ValueError(f"Rouse matrix must be positive definite; "
                             f"smallest eigenvalue {eigs[0]}")
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "a0", float(eigs[0]))

    @property
    def k(self):
        return self.a.shape[0]


def rouse_linear_chain(k):
    """tridiag[-1, 2, -1] connectivity of a linear chain with K springs."""
    if k < 1:
        raise ValueError("chain length K must be >= 1")
    a = 2.0 * np.eye(k) - np.eye(k, k=1) - np.eye(k, k=-1)
    return RouseMatrix(a)


# ---------------------------------------------------------------------------
# density response curves
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ResponseCurves:
    """Piecewise-linear viscosity and drag response to the solvent density.

    Both curves are tabulated on nodes spanning exactly [rho_min, rho_max];
    evaluation outside that interval is an error (the analysis only
    constrains values on the range of the density).
    """

    rho_nodes: np.ndarray
    mu_values: np.ndarray
    zeta_values: np.ndarray

    def __post_init__(self):
        nodes = np.asarray(self.rho_nodes, dtype=float)
        mu = np.asarray(self.mu_values, dtype=float)
        zeta = np.asarray(self.zeta_values, dtype=float)
        if nodes.ndim != 1 or len(nodes) < 2 or np.any(np.diff(nodes) <= 0):
            raise ValueError("rho_nodes must be strictly increasing, >= 2 entries")
        if mu.shape != nodes.shape or zeta.shape != nodes.shape:
            raise ValueError("curve tables must match the rho_nodes shape")
        if np.any(mu <= 0.0) or np.any(zeta <= 0.0):
            raise ValueError("mu and zeta must be strictly positive")
        object.__setattr__(self, "rho_nodes", nodes)
        object.__setattr__(self, "mu_values", mu)
        object.__setattr__(self, "zeta_values", zeta)

    @classmethod
    def constant(cls, mu=1.0, zeta=1.0, rho_min=0.5, rho_max=2.0):
        nodes = np.array([rho_min, rho_max])
        return cls(nodes, np.array([mu, mu]), np.array([zeta, zeta]))

    @property
    def rho_min(self):
        return float(self.rho_nodes[0])

    @property
    def rho_max(self):
        return float(self.rho_nodes[-1])

    @property
    def mu_min(self):
        return float(self.mu_values.min())

    @property
    def mu_max(self):
        return float(self.mu_values.max())

    @property
    def zeta_min(self):
        return float(self.zeta_values.min())

    @property
    def zeta_max(self):
        return float(self.zeta_values.max())

    def _check_range(self, rho):
        lo, hi = self.rho_min, self.rho_max
        if np.any(rho < lo) or np.any(rho > hi):
            raise ValueError(
                f"density value outside the response range [{lo}, {hi}]")

    def mu(self, rho):
        rho = np.asarray(rho, dtype=float)
        self._check_range(rho)
        out = np.interp(rho, self.rho_nodes, self.mu_values)
        return out if out.ndim else float(out)

    def zeta(self, rho):
        rho = np.asarray(rho, dtype=float)
        self._check_range(rho)
        out = np.interp(rho, self.rho_nodes, self.zeta_values)
        return out if out.ndim else float(out)


# ---------------------------------------------------------------------------
# entropy / cut-off function family
# ---------------------------------------------------------------------------

def _check_L(L):
    if not L > 1.0:
        raise ValueError(f"cut-off parameter L must exceed 1, got {L}")


def _check_delta(delta):
    if not 0.0 < delta < 1.0:
        raise ValueError(f"lower regularization delta must lie in (0,1), got {delta}")


def entropy_F(s):
    """F(s) = s (log s - 1) + 1, extended by continuity with F(0) = 1."""
    s = np.asarray(s, dtype=float)
    if np.any(s < 0.0):
        raise ValueError("entropy argument must be nonnegative")
    with np.errstate(divide="ignore", invalid="ignore"):
        out = np.where(s > 0.0, s * (np.log(np.where(s > 0, s, 1.0)) - 1.0) + 1.0, 1.0)
    return out if out.ndim else float(out)


def entropy_FL(L, s):
    """Cut-off entropy: F below L, quadratic continuation above."""
    _check_L(L)
    s = np.asarray(s, dtype=float)
    if np.any(s < 0.0):
        raise ValueError("entropy argument must be nonnegative")
    high = (s * s - L * L) / (2.0 * L) + s * (math.log(L) - 1.0) + 1.0
    out = np.where(s <= L, entropy_F(np.minimum(s, L)), high)
    return out if out.ndim else float(out)


def entropy_FL_prime(L, s):
    _check_L(L)
    s = np.asarray(s, dtype=float)
    if np.any(s <= 0.0) and np.any(s[np.asarray(s) <= 0.0] < 0.0):
        raise ValueError("entropy argument must be nonnegative")
    with np.errstate(divide="ignore"):
        low = np.log(np.where(s > 0.0, s, 1e-300))
    out = np.where(s <= L, low, s / L + math.log(L) - 1.0)
    return out if out.ndim else float(out)


def entropy_FL_pp(L, s):
    _check_L(L)
    s = np.asarray(s, dtype=float)
    with np.errstate(divide="ignore", over="ignore"):
        out = np.where(s <= L, 1.0 / np.where(s > 0.0, s, np.inf), 1.0 / L)
    out = np.where(s <= 0.0, np.inf, out)
    return out if out.ndim else float(out)


def entropy_FL_delta(L, delta, s):
    """C^{2,1} regularization of F: quadratic below delta and above L."""
    _check_L(L)
    _check_delta(delta)
    s = np.asarray(s, dtype=float)
    low = (s * s - delta * delta) / (2.0 * delta) + s * (math.log(delta) - 1.0) + 1.0
    mid = entropy_F(np.clip(s, delta, L))
    high = (s * s - L * L) / (2.0 * L) + s * (math.log(L) - 1.0) + 1.0
    out = np.where(s <= delta, low, np.where(s <= L, mid, high))
    return out if out.ndim else float(out)


def entropy_FL_delta_prime(L, delta, s):
    _check_L(L)
    _check_delta(delta)
    s = np.asarray(s, dtype=float)
    low = s / delta + math.log(delta) - 1.0
    mid = np.log(np.clip(s, delta, L))
    high = s / L + math.log(L) - 1.0
    out = np.where(s <= delta, low, np.where(s <= L, mid, high))
    return out if out.ndim else float(out)


def entropy_FL_delta_pp(L, delta, s):
    _check_L(L)
    _check_delta(delta)
    s = np.asarray(s, dtype=float)
    out = 1.0 / np.clip(s, delta, L)
    return out if out.ndim else float(out)


def entropy_GL(L, s):
    """Primitive of s [F^L]''(s): s - 1 below L, quadratic above."""
    _check_L(L)
    s = np.asarray(s, dtype=float)
    out = np.where(s <= L, s - 1.0, s * s / (2.0 * L) + L / 2.0 - 1.0)
    return out if out.ndim else float(out)


def entropy_GL_delta(L, delta, s):
    """Primitive of s [F^L_delta]''(s), normalized so s F' - F - G = 0."""
    _check_L(L)
    _check_delta(delta)
    s = np.asarray(s, dtype=float)
    low = (s * s + delta * delta) / (2.0 * delta) - 1.0
    mid = s - 1.0
    high = (s * s + L * L) / (2.0 * L) - 1.0
    out = np.where(s <= delta, low, np.where(s <= L, mid, high))
    return out if out.ndim else float(out)


def beta_L(L, s):
    """Microscopic cut-off beta^L(s) = min(s, L); 1-Lipschitz."""
    _check_L(L)
    s = np.asarray(s, dtype=float)
    out = np.minimum(s, L)
    return out if out.ndim else float(out)


def beta_L_delta(L, delta, s):
    """max(beta^L(s), delta) = ([F^L_delta]'')^{-1}; values in [delta, L]."""
    _check_L(L)
    _check_delta(delta)
    s = np.asarray(s, dtype=float)
    out = np.clip(s, delta, L)
    return out if out.ndim else float(out)


def cFbelow_constant(L, delta=1e-7):
    """C(L) with F^L_delta(s) >= s^2/(4L) - C(L) on s >= 0.

    The constant is not given in closed form; it is recovered as the maximum
    of s^2/(4L) - F^L_delta(s) over s >= 0 by 1-D optimization (the gap
    function tends to -inf quadratically, so the maximizer is interior).
    """
    _check_L(L)

    def neg_gap(s):
        return -(s * s / (4.0 * L) - entropy_FL_delta(L, delta, s))

    best = -math.inf
    # the maximizer sits at moderate s; scan brackets to be safe
    for hi in (2.0 * L, 8.0 * L, 32.0 * L):
        res = minimize_scalar(neg_gap, bounds=(0.0, hi), method="bounded",
                              options={"xatol": 1e-12})
        best = max(best, -float(res.fun))
    return best


@dataclass(frozen=True)
class EntropyPair:
    """Bundle (F, F', F'', G) with G' (s) = s F''(s) for the basic identity."""

    F: object
    Fp: object
    Fpp: object
    G: object
    c0: float = 0.0
    breakpoints: tuple = ()   # kink locations of F'' on the s-axis


def quadratic_pair():
    """F = s^2, G = s^2 (then c0 = 0): the simplest smooth test pair."""
    return EntropyPair(F=lambda s: s * s, Fp=lambda s: 2.0 * s,
                       Fpp=lambda s: 2.0 + 0.0 * s, G=lambda s: s * s, c0=0.0)


def entropy_pair(L, delta):
    """The pair (F^L_delta, G^L_delta); c0 = 0 by construction."""
    return EntropyPair(
        F=lambda s: entropy_FL_delta(L, delta, s),
        Fp=lambda s: entropy_FL_delta_prime(L, delta, s),
        Fpp=lambda s: entropy_FL_delta_pp(L, delta, s),
        G=lambda s: entropy_GL_delta(L, delta, s),
        c0=0.0,
        breakpoints=(delta, L),
    )


def lemma_basic_check(pair, a, b, A, B, quad_tol=1e-12):
    """Residual of the convexity identity used by the entropy estimates.

    For F with G'(s) = s F''(s) and constants a, b, A, B the identity

        (A a - B b) F'(a) - (A - B) G(a)
            = A (F(a) + c0) - B (F(b) + c0)
              + B (b - a)^2 int_0^1 F''(ta + (1-t)b) t dt

    holds; the theta-integral is evaluated by adaptive quadrature.  Returns
    ``(residual, inequality_ok)`` where the flag reports part c)
    (LHS >= A(F(a)+c0) - B(F(b)+c0) + d0 B (b-a)^2 / 2 with
    d0 = inf F'' on the segment) whenever B >= 0, else None.
    """
    lhs = (A * a - B * b) * pair.Fp(a) - (A - B) * pair.G(a)
    if a == b:
        remainder = 0.0
    else:
        # pass the kink locations of piecewise F'' (e.g. s = delta, L) so the
        # adaptive rule resolves them to full accuracy
        breaks = []
        for s_break in getattr(pair, "breakpoints", ()):  # on the s-axis
            t = (s_break - b) / (a - b)
            if 0.0 < t < 1.0:
                breaks.append(t)
        val, err = quad(lambda t: pair.Fpp(t * a + (1.0 - t) * b) * t, 0.0, 1.0,
                        epsabs=quad_tol, epsrel=quad_tol, limit=200,
                        points=sorted(breaks) or None)
        if not math.isfinite(val):
            raise FloatingPointError("theta-integral quadrature failed")
        remainder = B * (b - a) ** 2 * val
    rhs = A * (pair.F(a) + pair.c0) - B * (pair.F(b) + pair.c0) + remainder
    residual = abs(lhs - rhs)

    inequality_ok = None
    if B >= 0.0:
        ts = np.linspace(0.0, 1.0, 513)
        d0 = float(np.min(pair.Fpp(ts * a + (1.0 - ts) * b)))
        bound = (A * (pair.F(a) + pair.c0) - B * (pair.F(b) + pair.c0)
                 + 0.5 * d0 * B * (b - a) ** 2)
        inequality_ok = bool(lhs >= bound - 1e-10 * (1.0 + abs(lhs)))
    return residual, inequality_ok
