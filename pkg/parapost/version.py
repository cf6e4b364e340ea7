"""Contains name, version, and description."""

NAME = "parapost"
VERSION = "0.1.0"
DESCRIPTION = (
    "Bayesian inference for 1D parabolic PDEs with marginalized "
    "boundary conditions"
)
