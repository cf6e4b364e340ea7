"""Joint and boundary-marginalized likelihoods, in log domain.

Readings are Y = T + noise with i.i.d. N(0, sigma^2) noise at every
observed node and time. The boundary values T_L, T_R at t_1..t_N carry
independent N(mu, sigma_p^2) priors and are integrated out in closed form
by :func:`marginal_parts`.
"""

from __future__ import absolute_import
from __future__ import division
from __future__ import print_function
import logging
import numpy as np
from scipy.linalg import LinAlgError, cho_factor, cho_solve
from parapost.exceptions import DomainError, NumericalError
from parapost.forward_fd import FdSystem, fd_propagators
from parapost.forward_fem import assemble, build_propagators
from parapost.models.coefficients import CoefficientField
from parapost.models.resource import frozen_array

logger = logging.getLogger(__name__)

LOG_2PI = np.log(2 * np.pi)

# Forward solvers for marginal_log_likelihood
FEM = "fem"
FD = "fd"


class ResidualStack(object):
    """Model-minus-data residuals as an affine function of T_L, T_R.

    R_n = deterministic_n + AL_n T_L + AR_n T_R for n = 1..N, restricted
    to the observed interior readings.

    Attributes:
        deterministic (:class:`numpy.ndarray`): (N, I - 1) initial
            response minus interior data.
        mask (:class:`numpy.ndarray`): (N, I - 1) observed flags.
        props (:class:`parapost.forward_fem.PropagatorSet`): The
            propagators.
    """

    def __init__(self, props, obs):
        self.props = props
        self.mask = frozen_array(obs.mask.T, dtype=bool)
        self.deterministic = frozen_array(
            props.initial_response(obs.initial) - obs.interior().T
        )

    def residuals(self, bseries):
        """Return the (N, I - 1) masked residuals for boundary values."""
        full = (
            self.deterministic
            + self.props.AL @ bseries.T_L
            + self.props.AR @ bseries.T_R
        )

        return np.where(self.mask, full, 0.0)


def _validate_sigma(sigma, name="sigma"):
    try:
        assert np.isfinite(sigma) and sigma > 0
    except AssertionError:
        raise DomainError("{} must be positive, got {}".format(name, sigma))


def _validate_dimensions(props, obs):
    expected = (obs.grid.step_count, obs.mesh.node_count - 2)

    if (props.step_count, props.size) != expected:
        raise DomainError(
            "Propagators cover (N, I - 1) = {} but observations need "
            "{}".format((props.step_count, props.size), expected)
        )


def joint_log_likelihood(props, obs, bseries):
    """Log density of the readings given coefficients and boundaries.

    Args:
        props (:class:`parapost.forward_fem.PropagatorSet`): The
            propagators of the coefficients.
        obs (:class:`parapost.models.observations.ObservationSet`): The
            readings.
        bseries (:class:`parapost.models.boundary.BoundarySeries`): The
            boundary values at t_1..t_N.

    Returns:
        float: The log likelihood, normalizing constants included.

    Raises:
        :class:`parapost.exceptions.DomainError`: sigma is not positive
            or dimensions disagree.
    """
    _validate_sigma(obs.sigma)
    _validate_dimensions(props, obs)

    residuals = ResidualStack(props, obs).residuals(bseries)
    misfit = (
        np.sum(residuals ** 2)
        + np.sum((obs.Y_L - bseries.T_L) ** 2)
        + np.sum((obs.Y_R - bseries.T_R) ** 2)
    )

    return float(
        -obs.observed_count * (0.5 * LOG_2PI + np.log(obs.sigma))
        - misfit / (2 * obs.sigma ** 2)
    )


class MarginalLikelihoodParts(object):
    """The blocks of the boundary-marginalized likelihood.

    With D_sigma2 = 1 / sigma^2 and D_sigmap2 = 1 / sigma_p^2 (both
    times the identity),

        Lambda0^-1 = D_sigma2 + D_sigmap2 + Delta_L / sigma^2
        Lambda1^-1 = D_sigma2 + D_sigmap2 + Delta_R / sigma^2
                     - A_LR' Lambda0 A_LR / sigma^4

    Attributes:
        Delta_L (:class:`numpy.ndarray`): Sum of AL_n' AL_n.
        Delta_R (:class:`numpy.ndarray`): Sum of AR_n' AR_n.
        A_LR (:class:`numpy.ndarray`): Sum of AL_n' AR_n.
        Delta_2L (:class:`numpy.ndarray`): Sum of AL_n' (Y_n - det_n).
        Delta_2R (:class:`numpy.ndarray`): Sum of AR_n' (Y_n - det_n).
        D_sigma2 (float): 1 / sigma^2.
        D_sigmap2 (float): 1 / sigma_p^2.
        t_L1 (:class:`numpy.ndarray`): The linear term in T_L.
        t_R2 (:class:`numpy.ndarray`): The direct linear term in T_R.
        t_R3 (:class:`numpy.ndarray`): The linear term in T_R left over
            from integrating out T_L.
        t_R1 (:class:`numpy.ndarray`): t_R2 + t_R3.
        log_value (float): The log marginal likelihood.
    """

    def __init__(self, **blocks):
        self._lambda0_factor = blocks.pop("lambda0_factor")
        self._lambda1_factor = blocks.pop("lambda1_factor")

        for name, value in blocks.items():
            if isinstance(value, np.ndarray):
                value = frozen_array(value)
            setattr(self, name, value)

    def apply_lambda0(self, x):
        """Return Lambda0 @ x."""
        return cho_solve(self._lambda0_factor, x)

    def apply_lambda1(self, x):
        """Return Lambda1 @ x."""
        return cho_solve(self._lambda1_factor, x)

    @property
    def Lambda0(self):
        """:class:`numpy.ndarray`: Lambda0 as a dense matrix."""
        return self.apply_lambda0(np.eye(self.t_L1.size))

    @property
    def Lambda1(self):
        """:class:`numpy.ndarray`: Lambda1 as a dense matrix."""
        return self.apply_lambda1(np.eye(self.t_R1.size))

    @property
    def logdet_lambda0(self):
        """float: log |Lambda0|."""
        return -2.0 * np.sum(np.log(np.diag(self._lambda0_factor[0])))

    @property
    def logdet_lambda1(self):
        """float: log |Lambda1|."""
        return -2.0 * np.sum(np.log(np.diag(self._lambda1_factor[0])))


def _factor(matrix, name):
    try:
        return cho_factor(matrix, lower=True)
    except LinAlgError:
        raise NumericalError(
            "{} is not positive definite; the propagators are "
            "corrupt".format(name)
        )


def marginal_parts(props, obs, prior):
    """Integrate the boundary values out of the joint likelihood.

    The log value is assembled about the prior mean, which keeps every
    quadratic term small when sigma_p is small.

    Args:
        props (:class:`parapost.forward_fem.PropagatorSet`): The
            propagators of the coefficients.
        obs (:class:`parapost.models.observations.ObservationSet`): The
            readings.
        prior (:class:`parapost.models.boundary.BoundaryPrior`): The
            boundary prior.

    Returns:
        :class:`MarginalLikelihoodParts`: All blocks and the log value.

    Raises:
        :class:`parapost.exceptions.DomainError`: Non-positive noise
            levels or mismatched dimensions.
        :class:`parapost.exceptions.NumericalError`: Lambda0^-1 or
            Lambda1^-1 is not positive definite.
    """
    sigma, sigma_p = obs.sigma, prior.sigma_p
    _validate_sigma(sigma)
    _validate_sigma(sigma_p, "sigma_p")
    _validate_dimensions(props, obs)

    if prior.step_count != props.step_count:
        raise DomainError(
            "Prior has {} steps but the propagators have {}".format(
                prior.step_count, props.step_count
            )
        )

    N = props.step_count
    stack = ResidualStack(props, obs)
    weights = stack.mask[:, :, None]

    # Stack the maps so the sums over n become matrix products
    A_L = np.where(weights, props.AL, 0.0).reshape(-1, N)
    A_R = np.where(weights, props.AR, 0.0).reshape(-1, N)
    data = -stack.deterministic.ravel() * stack.mask.ravel()

    Delta_L = A_L.T @ A_L
    Delta_R = A_R.T @ A_R
    A_LR = A_L.T @ A_R
    Delta_2L = A_L.T @ data
    Delta_2R = A_R.T @ data

    s2 = sigma ** 2
    p2 = sigma_p ** 2
    diagonal = (1.0 / s2 + 1.0 / p2) * np.eye(N)

    lambda0_factor = _factor(diagonal + Delta_L / s2, "Lambda0^-1")
    schur = A_LR.T @ cho_solve(lambda0_factor, A_LR) / s2 ** 2
    lambda1_inv = diagonal + Delta_R / s2 - schur
    lambda1_factor = _factor(0.5 * (lambda1_inv + lambda1_inv.T), "Lambda1^-1")

    t_L1 = prior.mu_L / p2 + obs.Y_L / s2 + Delta_2L / s2
    t_R2 = prior.mu_R / p2 + obs.Y_R / s2 + Delta_2R / s2
    t_R3 = -A_LR.T @ cho_solve(lambda0_factor, t_L1) / s2

    # Same integral with the boundary values measured from the prior mean
    centred = data - A_L @ prior.mu_L - A_R @ prior.mu_R
    left = obs.Y_L - prior.mu_L
    right = obs.Y_R - prior.mu_R
    b_L = (A_L.T @ centred + left) / s2
    b_R = (A_R.T @ centred + right) / s2
    t_R = b_R - A_LR.T @ cho_solve(lambda0_factor, b_L) / s2

    parts = MarginalLikelihoodParts(
        Delta_L=Delta_L,
        Delta_R=Delta_R,
        A_LR=A_LR,
        Delta_2L=Delta_2L,
        Delta_2R=Delta_2R,
        D_sigma2=1.0 / s2,
        D_sigmap2=1.0 / p2,
        t_L1=t_L1,
        t_R1=t_R2 + t_R3,
        t_R2=t_R2,
        t_R3=t_R3,
        lambda0_factor=lambda0_factor,
        lambda1_factor=lambda1_factor,
        log_value=None,
    )

    log_value = (
        -obs.observed_count * (0.5 * LOG_2PI + np.log(sigma))
        - 2 * N * (0.5 * LOG_2PI + np.log(sigma_p))
        + N * LOG_2PI
        + 0.5 * parts.logdet_lambda0
        + 0.5 * parts.logdet_lambda1
        - (centred @ centred + left @ left + right @ right) / (2 * s2)
        + 0.5 * b_L @ parts.apply_lambda0(b_L)
        + 0.5 * t_R @ parts.apply_lambda1(t_R)
    )

    if not np.isfinite(log_value):
        raise NumericalError("Marginal log likelihood is not finite")

    parts.log_value = float(log_value)

    return parts


def propagators_for(coeffs, mesh, grid, lumped=False, solver=FEM):
    """Build the propagators of a coefficient input.

    Args:
        coeffs (float or :class:`parapost.models.coefficients.CoefficientField`):
            A constant diffusion coefficient or a coefficient field.
        mesh (:class:`parapost.models.mesh.SpatialMesh`): The mesh.
        grid (:class:`parapost.models.mesh.TimeGrid`): The time grid.
        lumped (bool, optional): Lump the FEM mass matrix.
        solver (str, optional): "fem" or "fd". Defaults to "fem".

    Returns:
        :class:`parapost.forward_fem.PropagatorSet`: The propagators.
    """
    if not isinstance(coeffs, CoefficientField):
        coeffs = CoefficientField.constant(coeffs, mesh)

    if solver == FD:
        if not coeffs.is_constant_diffusion:
            raise DomainError(
                "Finite differences need constant diffusion and no "
                "advection or reaction"
            )
        return fd_propagators(
            FdSystem(mesh, coeffs.a[0], grid.dt), grid.step_count
        )

    if solver != FEM:
        raise DomainError("Unknown solver {!r}".format(solver))

    return build_propagators(
        assemble(mesh, coeffs, grid.dt, lumped=lumped), grid.step_count
    )


def marginal_log_likelihood(
    coeffs, obs, prior, mesh=None, grid=None, lumped=False, solver=FEM
):
    """Log marginal likelihood of coefficients.

    Args:
        coeffs (float or :class:`parapost.models.coefficients.CoefficientField`):
            A constant diffusion coefficient or a coefficient field.
        obs (:class:`parapost.models.observations.ObservationSet`): The
            readings.
        prior (:class:`parapost.models.boundary.BoundaryPrior`): The
            boundary prior.
        mesh (:class:`parapost.models.mesh.SpatialMesh`, optional): The
            mesh. Defaults to the sensor mesh of obs.
        grid (:class:`parapost.models.mesh.TimeGrid`, optional): The
            time grid. Defaults to the grid of obs.
        lumped (bool, optional): Lump the FEM mass matrix.
        solver (str, optional): "fem" or "fd". Defaults to "fem".

    Returns:
        float: The log marginal likelihood.
    """
    mesh = obs.mesh if mesh is None else mesh
    grid = obs.grid if grid is None else grid
    props = propagators_for(coeffs, mesh, grid, lumped=lumped, solver=solver)

    return marginal_parts(props, obs, prior).log_value
