"""Finite differences for constant diffusion, as a cross-check of FEM."""

from __future__ import absolute_import
from __future__ import division
from __future__ import print_function
import numpy as np
from parapost.exceptions import DomainError
from parapost.forward_fem import (
    PropagatorSet,
    TridiagonalSolver,
    toeplitz_stack,
)
from parapost.models.resource import frozen_array


class FdSystem(object):
    """Backward Euler for T_t = theta T_xx on a uniform mesh.

    The step is (I - theta lam A) T_{n+1} = T_n + theta lam (T_{L,n+1} v
    + T_{R,n+1} w) with lam = dt / dx^2.

    Attributes:
        mesh (:class:`parapost.models.mesh.SpatialMesh`): The mesh.
        theta (float): The diffusion coefficient.
        dt (float): The time step.
        lam (float): dt / dx^2.
        A (:class:`numpy.ndarray`): The (1, -2, 1) second difference.
        v (:class:`numpy.ndarray`): Unit vector on the first interior
            node.
        w (:class:`numpy.ndarray`): Unit vector on the last interior
            node.
    """

    def __init__(self, mesh, theta, dt):
        """Set up the system.

        Args:
            mesh (:class:`parapost.models.mesh.SpatialMesh`): A uniform
                mesh.
            theta (float): The diffusion coefficient, positive.
            dt (float): The time step, positive.

        Raises:
            :class:`parapost.exceptions.DomainError`: Non-uniform mesh
                or non-positive theta or dt.
        """
        if not (theta > 0 and dt > 0):
            raise DomainError(
                "Need theta > 0 and dt > 0, got {} and {}".format(theta, dt)
            )

        m = mesh.element_count - 1
        self.mesh = mesh
        self.theta = float(theta)
        self.dt = float(dt)
        self.lam = self.dt / mesh.dx ** 2

        self.A = frozen_array(
            -2.0 * np.eye(m) + np.eye(m, k=1) + np.eye(m, k=-1)
        )
        self.v = frozen_array(np.eye(m)[0])
        self.w = frozen_array(np.eye(m)[-1])
        self.solver = TridiagonalSolver(
            np.eye(m) - self.theta * self.lam * self.A
        )

    @property
    def size(self):
        """int: The number of interior nodes."""
        return self.A.shape[0]

    @property
    def B_fd(self):
        """:class:`numpy.ndarray`: (I - theta lam A)^-1 as a dense matrix."""
        return self.solver.solve(np.eye(self.size))


def fd_step(sys, T_n, T_L_next, T_R_next):
    """Advance the interior temperatures one step.

    Args:
        sys (:class:`FdSystem`): The system.
        T_n (:class:`numpy.ndarray`): Interior values at t_n.
        T_L_next (float): The left value at t_{n+1}.
        T_R_next (float): The right value at t_{n+1}.

    Returns:
        :class:`numpy.ndarray`: Interior values at t_{n+1}.
    """
    coupling = sys.theta * sys.lam
    return sys.solver.solve(
        T_n + coupling * (T_L_next * sys.v + T_R_next * sys.w)
    )


class FdPropagators(PropagatorSet):
    """The maps T_n = B^n T_0 + C_n T_L + D_n T_R.

    Attributes:
        C (:class:`numpy.ndarray`): (N, I - 1, N); C[n-1] has columns
            theta lam B^(n-k+1) v for k <= n.
        D (:class:`numpy.ndarray`): As C with w in place of v.
    """

    def __init__(self, sys, C, D):
        super(FdPropagators, self).__init__(sys.B_fd, C, D, C, D)

        self.system = sys
        self.C = self.AL
        self.D = self.AR

    def initial_response(self, initial):
        """Return B^n T_0 for n = 1..N, as (N, I - 1)."""
        return self.powers[1:] @ initial.interior


def fd_propagators(sys, N):
    """Build C_n and D_n for n = 1..N.

    Args:
        sys (:class:`FdSystem`): The system.
        N (int): The number of steps.

    Returns:
        :class:`FdPropagators`: The propagators; their AL and AR are C
        and D.
    """
    if N < 1:
        raise ValueError("Need at least one step, got {}".format(N))

    coupling = sys.theta * sys.lam
    responses = {}

    for side, unit in (("left", sys.v), ("right", sys.w)):
        r = np.empty((N, sys.size))
        r[0] = sys.solver.solve(coupling * unit)

        for d in range(1, N):
            r[d] = sys.solver.solve(r[d - 1])

        responses[side] = r

    return FdPropagators(
        sys,
        toeplitz_stack(responses["left"]),
        toeplitz_stack(responses["right"]),
    )
