"""Classes for PDE coefficients and initial conditions."""

from __future__ import absolute_import
from __future__ import division
from __future__ import print_function
import numpy as np
from parapost.exceptions import DomainError
from .resource import frozen_array


class CoefficientField(object):
    """Piecewise constant coefficients of u_t - (a u')' + b u' + c u.

    Each coefficient holds one value per mesh element.

    Attributes:
        a (:class:`numpy.ndarray`): Diffusion per element.
        b (:class:`numpy.ndarray`): Advection per element.
        c (:class:`numpy.ndarray`): Reaction per element.
    """

    def __init__(self, a, b=None, c=None):
        """Initialize the coefficients.

        Args:
            a (array-like): Diffusion per element.
            b (array-like, optional): Advection per element. Defaults
                to zero.
            c (array-like, optional): Reaction per element. Defaults to
                zero.

        Raises:
            :class:`parapost.exceptions.DomainError`: The arrays do not
                have matching one dimensional shapes.
        """
        a = np.atleast_1d(np.asarray(a, dtype=float))
        b = np.zeros_like(a) if b is None else np.asarray(b, dtype=float)
        c = np.zeros_like(a) if c is None else np.asarray(c, dtype=float)

        if a.ndim != 1 or b.shape != a.shape or c.shape != a.shape:
            raise DomainError(
                "Coefficients need matching 1D shapes, got {}, {}, {}".format(
                    a.shape, b.shape, c.shape
                )
            )

        self.a = frozen_array(a)
        self.b = frozen_array(b)
        self.c = frozen_array(c)

    @classmethod
    def constant(cls, theta, mesh):
        """Return pure diffusion with a constant coefficient.

        Args:
            theta (float): The diffusion coefficient.
            mesh (:class:`parapost.models.mesh.SpatialMesh`): The mesh.

        Returns:
            :class:`CoefficientField`: a = theta, b = c = 0.
        """
        return cls(np.full(mesh.element_count, float(theta)))

    @property
    def element_count(self):
        """int: The number of elements the field is defined on."""
        return self.a.size

    @property
    def is_constant_diffusion(self):
        """bool: Whether a is constant and b, c vanish."""
        return bool(
            np.all(self.a == self.a[0])
            and not np.any(self.b)
            and not np.any(self.c)
        )

    def mirrored(self):
        """Return the coefficients of the reflected problem.

        Reflecting x reverses the elements and flips the advection
        sign.
        """
        return CoefficientField(self.a[::-1], -self.b[::-1], self.c[::-1])


class InitialCondition(object):
    """Nodal values g(x_0)..g(x_I) of the initial temperature.

    Attributes:
        g (:class:`numpy.ndarray`): The nodal values.
    """

    def __init__(self, g):
        """Initialize the initial condition.

        Args:
            g (array-like): The I + 1 nodal values.
        """
        self.g = frozen_array(np.atleast_1d(g))

    @classmethod
    def constant(cls, value, mesh):
        """Return a constant initial condition on a mesh."""
        return cls(np.full(mesh.node_count, float(value)))

    @property
    def left(self):
        """float: g(x_L)."""
        return float(self.g[0])

    @property
    def right(self):
        """float: g(x_R)."""
        return float(self.g[-1])

    @property
    def interior(self):
        """:class:`numpy.ndarray`: The interior values."""
        return self.g[1:-1]

    def mirrored(self):
        """Return the reflected initial condition."""
        return InitialCondition(self.g[::-1])
