"""Linear finite elements with backward Euler in time.

The solution is split as T = u + T_L(t) l_L(x) + T_R(t) l_R(x), where
l_L and l_R are the affine lifts of the Dirichlet data and u vanishes on
the boundary. Because the scheme is linear, the interior temperatures at
t_n are an affine function of the initial condition and the boundary
values, and :func:`build_propagators` returns the matrices of that map.
"""

from __future__ import absolute_import
from __future__ import division
from __future__ import print_function
import logging
from functools import cached_property
import numpy as np
from scipy.linalg.lapack import dgttrf, dgttrs
from parapost.constants import PARABOLICITY_EPSILON
from parapost.exceptions import AssemblyError, SolveError
from parapost.models.resource import frozen_array

logger = logging.getLogger(__name__)

# solve_full methods
STEP = "step"
PROPAGATORS = "propagators"


class TridiagonalSolver(object):
    """An LU factorization of a tridiagonal matrix, reused across solves.

    Attributes:
        size (int): The matrix dimension.
    """

    def __init__(self, matrix):
        """Factorize a matrix.

        Args:
            matrix (:class:`numpy.ndarray`): A dense square matrix that
                is zero off the three central diagonals.

        Raises:
            :class:`parapost.exceptions.SolveError`: The matrix is
                singular or not finite.
        """
        matrix = np.asarray(matrix, dtype=float)
        self.size = matrix.shape[0]

        if not np.all(np.isfinite(matrix)):
            raise SolveError("Cannot factorize a non-finite matrix")

        if self.size == 1:
            if matrix[0, 0] == 0:
                raise SolveError("Matrix is singular")
            self._scalar = matrix[0, 0]
            return

        dl, d, du, du2, ipiv, info = dgttrf(
            np.diag(matrix, -1).copy(),
            np.diag(matrix).copy(),
            np.diag(matrix, 1).copy(),
        )

        # Validate that the factorization succeeded
        try:
            assert info == 0
        except AssertionError:
            raise SolveError(
                "Tridiagonal factorization failed with info={}: the "
                "matrix is singular".format(info)
            )

        self._factors = (dl, d, du, du2, ipiv)

    def solve(self, rhs):
        """Solve for one or more right hand sides.

        Args:
            rhs (:class:`numpy.ndarray`): A vector of length ``size`` or
                a matrix with ``size`` rows.

        Returns:
            :class:`numpy.ndarray`: The solution, shaped like rhs.
        """
        rhs = np.asarray(rhs, dtype=float)

        if self.size == 1:
            return rhs / self._scalar

        columns = rhs.reshape(self.size, -1)
        x, info = dgttrs(*(self._factors + (np.array(columns, order="F"),)))

        if info != 0:
            raise SolveError(
                "Tridiagonal solve failed with info={}".format(info)
            )

        return x.reshape(rhs.shape)


class FemSystem(object):
    """The assembled interior system for one set of coefficients.

    The backward Euler step reads

        (M + dt S) u_{n+1} = M u_n - F_L1 T_{L,n} + F_L2 T_{L,n+1}
                                   - F_R1 T_{R,n} + F_R2 T_{R,n+1}

    Attributes:
        mesh (:class:`parapost.models.mesh.SpatialMesh`): The mesh.
        dt (float): The time step.
        lumped (bool): Whether M is the row-sum lumped mass matrix.
        M (:class:`numpy.ndarray`): The interior mass matrix.
        S_theta (:class:`numpy.ndarray`): The interior stiffness matrix.
        F_L1 (:class:`numpy.ndarray`): Minus the mass of the left lift
            against each interior hat function.
        F_L2 (:class:`numpy.ndarray`): F_L1 minus dt times the stiffness
            of the left lift.
        F_R1 (:class:`numpy.ndarray`): As F_L1 for the right lift.
        F_R2 (:class:`numpy.ndarray`): As F_L2 for the right lift.
        lift_L (:class:`numpy.ndarray`): The left lift at interior nodes.
        lift_R (:class:`numpy.ndarray`): The right lift at interior
            nodes.
        B (:class:`numpy.ndarray`): The one step map (M + dt S)^-1 M.
    """

    def __init__(self, mesh, dt, lumped, M, S_theta, F_L1, F_L2, F_R1, F_R2):
        self.mesh = mesh
        self.dt = float(dt)
        self.lumped = bool(lumped)
        self.M = frozen_array(M)
        self.S_theta = frozen_array(S_theta)
        self.F_L1 = frozen_array(F_L1)
        self.F_L2 = frozen_array(F_L2)
        self.F_R1 = frozen_array(F_R1)
        self.F_R2 = frozen_array(F_R2)
        self.lift_L = frozen_array(mesh.left_lift(mesh.interior_nodes))
        self.lift_R = frozen_array(mesh.right_lift(mesh.interior_nodes))

        self.solver = TridiagonalSolver(self.M + self.dt * self.S_theta)
        self.B = frozen_array(self.solver.solve(self.M))

    @property
    def size(self):
        """int: The number of interior nodes I - 1."""
        return self.M.shape[0]


def _element_matrix(main_left, main_right, upper, lower):
    """Assemble a full tridiagonal matrix from per-element entries.

    Element e couples nodes e and e + 1; ``main_left[e]`` is added at
    (e, e), ``main_right[e]`` at (e + 1, e + 1), ``upper[e]`` at
    (e, e + 1) and ``lower[e]`` at (e + 1, e).
    """
    n = main_left.size + 1
    main = np.zeros(n)
    main[:-1] += main_left
    main[1:] += main_right

    return np.diag(main) + np.diag(upper, 1) + np.diag(lower, -1)


def assemble(mesh, coeffs, dt, lumped=False):
    """Assemble mass, stiffness and lift forcing on a mesh.

    Hat function integrals are exact for piecewise constant
    coefficients. The lift forcing is computed from the full mass and
    stiffness rows applied to the nodal lift, so lumping also lumps the
    lift mass.

    Args:
        mesh (:class:`parapost.models.mesh.SpatialMesh`): The mesh.
        coeffs (:class:`parapost.models.coefficients.CoefficientField`):
            The coefficients, one value per element.
        dt (float): The time step.
        lumped (bool, optional): Whether to lump the mass matrix.
            Defaults to False.

    Returns:
        :class:`FemSystem`: The assembled system.

    Raises:
        :class:`parapost.exceptions.AssemblyError`: The coefficients do
            not fit the mesh or violate parabolicity.
    """
    a, b, c = coeffs.a, coeffs.b, coeffs.c

    # Validate that the coefficients are admissible
    if coeffs.element_count != mesh.element_count:
        raise AssemblyError(
            "Coefficients have {} elements but the mesh has {}".format(
                coeffs.element_count, mesh.element_count
            )
        )

    if not all(np.all(np.isfinite(v)) for v in (a, b, c)):
        raise AssemblyError("Coefficients must be finite")

    if np.any(a < PARABOLICITY_EPSILON):
        raise AssemblyError(
            "parabolicity: a >= {} fails on elements {}".format(
                PARABOLICITY_EPSILON,
                np.flatnonzero(a < PARABOLICITY_EPSILON).tolist(),
            )
        )

    if not dt > 0:
        raise AssemblyError("Time step must be positive, got {}".format(dt))

    h = mesh.widths

    # Mass: h/6 [[2, 1], [1, 2]] per element
    mass = _element_matrix(h / 3, h / 3, h / 6, h / 6)

    # Diffusion, advection and reaction
    k = a / h
    stiffness = (
        _element_matrix(k, k, -k, -k)
        + _element_matrix(-b / 2, b / 2, b / 2, -b / 2)
        + _element_matrix(c * h / 3, c * h / 3, c * h / 6, c * h / 6)
    )

    if lumped:
        mass = np.diag(mass.sum(axis=1))

    lift_L = mesh.left_lift()
    lift_R = mesh.right_lift()
    interior = slice(1, -1)

    m_L = mass[interior] @ lift_L
    m_R = mass[interior] @ lift_R
    s_L = stiffness[interior] @ lift_L
    s_R = stiffness[interior] @ lift_R

    logger.debug(
        "Assembled %d interior nodes (lumped=%s, dt=%g)",
        mesh.element_count - 1,
        lumped,
        dt,
    )

    return FemSystem(
        mesh=mesh,
        dt=dt,
        lumped=lumped,
        M=mass[interior, interior],
        S_theta=stiffness[interior, interior],
        F_L1=-m_L,
        F_L2=-m_L - dt * s_L,
        F_R1=-m_R,
        F_R2=-m_R - dt * s_R,
    )


def lift_split(g, bseries, mesh):
    """Split the initial condition into lift and homogeneous part.

    Args:
        g (:class:`parapost.models.coefficients.InitialCondition`): The
            initial condition.
        bseries (:class:`parapost.models.boundary.BoundarySeries`): The
            boundary values; only T_L0 and T_R0 are used.
        mesh (:class:`parapost.models.mesh.SpatialMesh`): The mesh.

    Returns:
        tuple: The interior values u0 of g minus the t = 0 lift, and a
        function ``lift_nodal(T_L, T_R, node)`` evaluating the lift at
        node indices.
    """
    left = mesh.left_lift()
    right = mesh.right_lift()

    def lift_nodal(T_L, T_R, node):
        return T_L * left[node] + T_R * right[node]

    u0 = g.interior - lift_nodal(bseries.T_L0, bseries.T_R0, slice(1, -1))

    return u0, lift_nodal


def step(sys, u_n, local_bc):
    """Advance the homogeneous part one backward Euler step.

    Args:
        sys (:class:`FemSystem`): The system.
        u_n (:class:`numpy.ndarray`): The homogeneous part at t_n.
        local_bc (tuple): (T_{L,n}, T_{L,n+1}, T_{R,n}, T_{R,n+1}).

    Returns:
        :class:`numpy.ndarray`: The homogeneous part at t_{n+1}.
    """
    T_Ln, T_Ln1, T_Rn, T_Rn1 = local_bc

    rhs = (
        sys.M @ u_n
        - sys.F_L1 * T_Ln
        + sys.F_L2 * T_Ln1
        - sys.F_R1 * T_Rn
        + sys.F_R2 * T_Rn1
    )

    return sys.solver.solve(rhs)


def toeplitz_stack(responses, diagonal=None):
    """Stack impulse responses into causal boundary maps.

    Args:
        responses (:class:`numpy.ndarray`): Array (N, m) whose row d is
            the response at t_n to a unit boundary value at t_{n-d}.
        diagonal (:class:`numpy.ndarray`, optional): A vector added to
            column n of the map at t_n.

    Returns:
        :class:`numpy.ndarray`: Array (N, m, N) whose entry [n-1, :, k-1]
        multiplies the boundary value at t_k in the state at t_n.
    """
    N = responses.shape[0]
    lag = np.arange(N)[:, None] - np.arange(N)[None, :]
    causal = lag >= 0

    # maps[n, k, :] = responses[n - k] for k <= n
    maps = responses[np.where(causal, lag, 0)] * causal[:, :, None]

    if diagonal is not None:
        maps[np.arange(N), np.arange(N)] += diagonal

    return np.ascontiguousarray(np.transpose(maps, (0, 2, 1)))


class PropagatorSet(object):
    """Matrices expressing interior temperatures in the data.

    For n = 1..N,

        T_n = initial_response(g)[n-1] + AL[n-1] @ T_L + AR[n-1] @ T_R

    where T_L, T_R hold the boundary values at t_1..t_N and the t_0
    values are folded into the initial response.

    Attributes:
        B (:class:`numpy.ndarray`): The one step map.
        AL_tilde (:class:`numpy.ndarray`): (N, I - 1, N) boundary maps
            of the homogeneous part.
        AR_tilde (:class:`numpy.ndarray`): As AL_tilde for the right
            boundary.
        AL (:class:`numpy.ndarray`): (N, I - 1, N) boundary maps of the
            full solution.
        AR (:class:`numpy.ndarray`): As AL for the right boundary.
    """

    def __init__(self, B, AL_tilde, AR_tilde, AL, AR):
        self.B = frozen_array(B)
        self.AL_tilde = frozen_array(AL_tilde)
        self.AR_tilde = frozen_array(AR_tilde)
        self.AL = frozen_array(AL)
        self.AR = frozen_array(AR)

    @property
    def step_count(self):
        """int: The number of time steps N."""
        return self.AL.shape[0]

    @property
    def size(self):
        """int: The number of interior nodes I - 1."""
        return self.AL.shape[1]

    @cached_property
    def powers(self):
        """:class:`numpy.ndarray`: (N + 1, I - 1, I - 1) stack of B^0..B^N."""
        powers = np.empty((self.step_count + 1, self.size, self.size))
        powers[0] = np.eye(self.size)

        for n in range(self.step_count):
            powers[n + 1] = self.B @ powers[n]

        return frozen_array(powers)

    def A(self, n):
        """Return A_n = B^n for 0 <= n <= N."""
        return self.powers[n]

    def initial_response(self, initial):
        """Return the part of T_1..T_N due to t_0 data, as (N, I - 1)."""
        raise NotImplementedError

    def interior_solution(self, initial, bseries):
        """Evaluate T_1..T_N at the interior nodes.

        Args:
            initial (:class:`parapost.models.coefficients.InitialCondition`):
                The initial condition.
            bseries (:class:`parapost.models.boundary.BoundarySeries`):
                The boundary values.

        Returns:
            :class:`numpy.ndarray`: Array (N, I - 1).
        """
        return (
            self.initial_response(initial)
            + self.AL @ bseries.T_L
            + self.AR @ bseries.T_R
        )


class FemPropagators(PropagatorSet):
    """Propagators of the finite element scheme."""

    def __init__(self, sys, AL_tilde, AR_tilde, AL, AR, q_L, q_R):
        super(FemPropagators, self).__init__(
            sys.B, AL_tilde, AR_tilde, AL, AR
        )

        self.system = sys
        self._q_L = frozen_array(q_L)
        self._q_R = frozen_array(q_R)

    def initial_response(self, initial):
        """Return B^n u0 + B^(n-1) (q_L T_L0 + q_R T_R0) for n = 1..N.

        Args:
            initial (:class:`parapost.models.coefficients.InitialCondition`):
                The initial condition; its end values are T_L0, T_R0.

        Returns:
            :class:`numpy.ndarray`: Array (N, I - 1).
        """
        T_L0, T_R0 = initial.left, initial.right
        u0 = (
            initial.interior
            - T_L0 * self.system.lift_L
            - T_R0 * self.system.lift_R
        )

        q = self._q_L * T_L0 + self._q_R * T_R0

        return self.powers[1:] @ u0 + self.powers[:-1] @ q


def _impulse_responses(sys, forcing_now, forcing_next, N):
    """Responses of the homogeneous part to a unit boundary pulse.

    Returns an array (N, I - 1) whose row d is the homogeneous state d
    steps after the pulse time.
    """
    responses = np.empty((N, sys.size))
    responses[0] = sys.solver.solve(forcing_next)

    if N > 1:
        responses[1] = sys.B @ responses[0] + sys.solver.solve(-forcing_now)

    for d in range(2, N):
        responses[d] = sys.B @ responses[d - 1]

    return responses


def build_propagators(sys, N):
    """Build the boundary maps of the first N steps.

    The maps are assembled column by column from the response to unit
    boundary pulses, which is Toeplitz in time.

    Args:
        sys (:class:`FemSystem`): The system.
        N (int): The number of steps.

    Returns:
        :class:`FemPropagators`: The propagators.
    """
    if N < 1:
        raise ValueError("Need at least one step, got {}".format(N))

    r_L = _impulse_responses(sys, sys.F_L1, sys.F_L2, N)
    r_R = _impulse_responses(sys, sys.F_R1, sys.F_R2, N)

    AL_tilde = toeplitz_stack(r_L)
    AR_tilde = toeplitz_stack(r_R)

    return FemPropagators(
        sys,
        AL_tilde,
        AR_tilde,
        toeplitz_stack(r_L, sys.lift_L),
        toeplitz_stack(r_R, sys.lift_R),
        sys.solver.solve(-sys.F_L1),
        sys.solver.solve(-sys.F_R1),
    )


class TemperatureHistory(object):
    """Temperatures at t_1..t_N.

    Attributes:
        interior (:class:`numpy.ndarray`): (I - 1) x N interior values.
        T_L (:class:`numpy.ndarray`): Left boundary values.
        T_R (:class:`numpy.ndarray`): Right boundary values.
    """

    def __init__(self, interior, T_L, T_R):
        self.interior = frozen_array(interior)
        self.T_L = frozen_array(T_L)
        self.T_R = frozen_array(T_R)

    def nodal(self):
        """Return the (I + 1) x N values including the boundaries."""
        return np.vstack([self.T_L, self.interior, self.T_R])


def solve_full(sys, g, bseries, N, method=STEP):
    """Solve the forward problem for N steps.

    Args:
        sys (:class:`FemSystem`): The system.
        g (:class:`parapost.models.coefficients.InitialCondition`): The
            initial condition.
        bseries (:class:`parapost.models.boundary.BoundarySeries`): The
            boundary values, at least N steps of them.
        N (int): The number of steps.
        method (str, optional): "step" for sequential stepping or
            "propagators" for the explicit maps. Defaults to "step".

    Returns:
        :class:`TemperatureHistory`: The solution.
    """
    bseries = bseries.truncated(N)

    if method == PROPAGATORS:
        interior = build_propagators(sys, N).interior_solution(g, bseries)
        return TemperatureHistory(interior.T, bseries.T_L, bseries.T_R)

    if method != STEP:
        raise ValueError("Unknown method {!r}".format(method))

    u, lift_nodal = lift_split(g, bseries, sys.mesh)
    left = bseries.left_history()
    right = bseries.right_history()

    interior = np.empty((sys.size, N))
    for n in range(N):
        u = step(sys, u, (left[n], left[n + 1], right[n], right[n + 1]))
        interior[:, n] = u + lift_nodal(
            left[n + 1], right[n + 1], slice(1, -1)
        )

    return TemperatureHistory(interior, bseries.T_L, bseries.T_R)
