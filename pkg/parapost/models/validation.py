"""Checks that a forward problem is well posed."""

from __future__ import absolute_import
from __future__ import division
from __future__ import print_function
import numpy as np
from parapost.constants import CONSISTENCY_TOLERANCE, PARABOLICITY_EPSILON
from parapost.exceptions import DomainError

# Violation codes
P1 = "P1"
P2 = "P2"
P3 = "P3"
PARABOLICITY = "parabolicity"
POSITIVITY = "positivity"


class Violation(object):
    """A failed well-posedness assumption.

    Attributes:
        code (str): One of P1, P2, P3, parabolicity, positivity.
        message (str): What failed.
    """

    def __init__(self, code, message):
        self.code = code
        self.message = message

    def __str__(self):
        return "{}: {}".format(self.code, self.message)

    def __repr__(self):
        return "Violation({!r}, {!r})".format(self.code, self.message)


class ValidationReport(object):
    """The outcome of :func:`validate_problem`.

    Attributes:
        violations (list): The :class:`Violation` instances found.
    """

    def __init__(self, violations=None):
        self.violations = list(violations or [])

    @property
    def ok(self):
        """bool: Whether no assumption was violated."""
        return not self.violations

    def __bool__(self):
        return self.ok

    __nonzero__ = __bool__

    def codes(self):
        """Return the violated codes in order."""
        return [v.code for v in self.violations]

    def raise_for_violations(self):
        """Raise if any assumption was violated.

        Raises:
            :class:`parapost.exceptions.DomainError`: The message lists
                every violation.
        """
        if not self.ok:
            raise DomainError("Ill-posed problem:\n{}".format(self))

    def __str__(self):
        if self.ok:
            return "ok"

        return "\n".join(str(v) for v in self.violations)


def validate_problem(
    mesh, grid, coeffs, g, bseries=None, epsilon=PARABOLICITY_EPSILON
):
    """Check the assumptions under which the forward problem is solved.

    P1 asks for bounded coefficients on the mesh, P2 for a square
    integrable initial condition and P3 for boundary values consistent
    with it at t = 0. This never raises; every failure is reported.

    Args:
        mesh (:class:`parapost.models.mesh.SpatialMesh`): The mesh.
        grid (:class:`parapost.models.mesh.TimeGrid`): The time grid.
        coeffs (:class:`parapost.models.coefficients.CoefficientField`):
            The coefficients.
        g (:class:`parapost.models.coefficients.InitialCondition`): The
            initial condition.
        bseries (:class:`parapost.models.boundary.BoundarySeries`, optional):
            Boundary values to check for consistency with g.
        epsilon (float, optional): The parabolicity floor on a.

    Returns:
        :class:`ValidationReport`: The report.
    """
    violations = []

    if not grid.dt > 0:
        violations.append(Violation(POSITIVITY, "time step must be > 0"))

    # P1: bounded coefficients, one per element
    if coeffs.element_count != mesh.element_count:
        violations.append(
            Violation(
                P1,
                "coefficients have {} elements, mesh has {}".format(
                    coeffs.element_count, mesh.element_count
                ),
            )
        )

    finite = all(
        np.all(np.isfinite(v)) for v in (coeffs.a, coeffs.b, coeffs.c)
    )
    if not finite:
        violations.append(Violation(P1, "coefficients must be finite"))
    elif np.any(coeffs.a < epsilon):
        bad = np.flatnonzero(coeffs.a < epsilon).tolist()
        violations.append(
            Violation(
                PARABOLICITY,
                "a >= {} fails on elements {}".format(epsilon, bad),
            )
        )

    # P2: initial data on every node
    if g.g.shape != (mesh.node_count,) or not np.all(np.isfinite(g.g)):
        violations.append(
            Violation(
                P2,
                "initial condition needs {} finite nodal values".format(
                    mesh.node_count
                ),
            )
        )
    elif bseries is not None:
        # P3: boundary data agree with the initial condition
        for side, g_end, t0 in (
            ("left", g.left, bseries.T_L0),
            ("right", g.right, bseries.T_R0),
        ):
            scale = max(1.0, abs(g_end))
            if abs(g_end - t0) > CONSISTENCY_TOLERANCE * scale:
                violations.append(
                    Violation(
                        P3,
                        "consistency fails on the {} boundary: g = {} but "
                        "T0 = {}".format(side, g_end, t0),
                    )
                )

    if bseries is not None and bseries.step_count != grid.step_count:
        violations.append(
            Violation(
                POSITIVITY,
                "boundary series has {} steps, grid has {}".format(
                    bseries.step_count, grid.step_count
                ),
            )
        )

    return ValidationReport(violations)
