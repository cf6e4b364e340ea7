"""Contains the run configuration."""

from __future__ import absolute_import
from __future__ import division
from __future__ import print_function
import copy
import json
import logging
import os
import numbers
from parapost.constants import (
    DEFAULT_LENGTH_SAMPLES,
    DEFAULT_PRIOR_NU,
    DEFAULT_PRIOR_TAU,
    DEFAULT_REPLICATIONS,
    DEFAULT_SIGMA_P,
    DEFAULT_SPLINE_KNOTS,
    DEFAULT_Z_SAMPLES,
    MARGINAL,
    MIN_REFERENCE_REFINEMENT,
    POSTERIOR_MODES,
    PREDICTIVE_GRID_POINTS,
    SEED_ENVIRONMENT_VARIABLE,
)
from parapost.exceptions import BadEnvironmentError, ConfigError
from parapost.models.boundary import BOUNDARY_MEANS, SPLINE_MEAN
from parapost.synth_data import CONSTANT_THETA, RANDOM_FIELD

logger = logging.getLogger(__name__)

# Experimental setup families accepted by the design block
SETUP_FAMILIES = ("es1", "es2", "es3")

DEFAULTS = {
    "problem": {
        "elements": 6,
        "steps": 60,
        "t_end": 1.0,
        "x_left": 0.0,
        "x_right": 1.0,
        "theta": 1.0,
        "theta_ref": 1.0,
        "dataset": CONSTANT_THETA,
        "h_over_kappa": 1.0,
        "t_out": 20.0,
        "t0": 100.0,
        "refinement": MIN_REFERENCE_REFINEMENT,
        "lumped": False,
        "field_truth": {"mu": 0.0, "eta": 0.1, "length": 5.0},
    },
    "noise": {
        "sigma": None,
        "sigma_p": DEFAULT_SIGMA_P,
        "sigma_d": 0.56,
        "precision": 10,
    },
    "prior": {
        "nu": DEFAULT_PRIOR_NU,
        "tau": DEFAULT_PRIOR_TAU,
        # None: fit runs both modes, other commands use the marginal one
        "mode": None,
        "boundary_mean": SPLINE_MEAN,
        "spline_knots": DEFAULT_SPLINE_KNOTS,
        "bracket": [0.5, 1.5],
        "curve_range": [0.8, 1.2],
        "curve_points": 201,
        "curve_steps": [],
        "curve_sigma": [],
        "curve_sigma_p": [],
    },
    "design": {
        "setups": list(SETUP_FAMILIES),
        "windows": 3,
        "replications": DEFAULT_REPLICATIONS,
    },
    "predict": {
        "history_time": 0.5,
        "steps_ahead": 1,
        "sensors": ["TC2", "TC3", "TC4"],
        "samples": 1000,
        "grid_points": PREDICTIVE_GRID_POINTS,
    },
    "field": {
        "mu_grid": [-0.2, 0.2, 41],
        "eta_grid": [0.005, 0.205, 41],
        "length_samples": DEFAULT_LENGTH_SAMPLES,
        "z_samples": DEFAULT_Z_SAMPLES,
        "max_invalid_fraction": 0.1,
        "prior": {
            "mu_loc": 0.1,
            "mu_scale": 0.1,
            "eta_scale": 0.1,
            "length_low": 0.5,
            "length_high": 5.0,
        },
    },
    "rng": {"seed": 20190501},
    "io": {
        "observations": "observations.csv",
        "truth": "truth.json",
    },
}

# Keys restricted to a fixed set of string values
CHOICES = {
    "problem.dataset": (CONSTANT_THETA, RANDOM_FIELD),
    "prior.mode": POSTERIOR_MODES,
    "prior.boundary_mean": BOUNDARY_MEANS,
}


def _is_number(value):
    return isinstance(value, numbers.Real) and not isinstance(value, bool)


def _check_value(path, default, value):
    """Raise a ConfigError unless value fits the default's type."""
    if isinstance(default, bool):
        ok = isinstance(value, bool)
    elif isinstance(default, int):
        ok = isinstance(value, int) and not isinstance(value, bool)
    elif isinstance(default, float):
        ok = _is_number(value)
    elif isinstance(default, str):
        ok = isinstance(value, str)
    elif isinstance(default, list):
        ok = isinstance(value, list)
    elif path in CHOICES:
        ok = value is None or isinstance(value, str)
    else:
        ok = value is None or _is_number(value)

    if not ok:
        raise ConfigError(
            "{}: expected a value like {!r}, got {!r}".format(
                path, default, value
            )
        )

    if path in CHOICES and value is not None and value not in CHOICES[path]:
        raise ConfigError(
            "{}: {!r} is not one of {}".format(path, value, CHOICES[path])
        )


def merge(defaults, overrides, prefix=""):
    """Merge a user document over defaults.

    Args:
        defaults (dict): The defaults of this level.
        overrides (dict): The user values of this level.
        prefix (str, optional): The dotted path of this level.

    Returns:
        dict: A new, fully resolved document.

    Raises:
        :class:`parapost.exceptions.ConfigError`: An unknown key or a
            badly typed value, named by its dotted path.
    """
    if not isinstance(overrides, dict):
        raise ConfigError(
            "{}: expected an object, got {!r}".format(
                prefix or "<root>", overrides
            )
        )

    resolved = copy.deepcopy(defaults)

    for key, value in overrides.items():
        path = prefix + key

        if key not in defaults:
            raise ConfigError("{}: unknown key".format(path))

        if isinstance(defaults[key], dict):
            resolved[key] = merge(defaults[key], value, path + ".")
        else:
            _check_value(path, defaults[key], value)
            resolved[key] = copy.deepcopy(value)

    return resolved


class RunConfig(object):
    """A fully resolved run configuration.

    Blocks are read by attribute, for example ``config.noise["sigma_p"]``.

    Attributes:
        data (dict): The resolved document.
    """

    def __init__(self, data=None):
        """Resolve a configuration document.

        Args:
            data (dict, optional): User values. Missing keys take their
                defaults.

        Raises:
            :class:`parapost.exceptions.ConfigError`: The document does
                not match the schema.
        """
        self.data = merge(DEFAULTS, data or {})
        self._validate()

    def __getattr__(self, name):
        if name != "data" and name in self.data:
            return self.data[name]

        raise AttributeError(name)

    def _validate(self):
        """Check constraints the type check cannot express."""
        problem = self.data["problem"]
        noise = self.data["noise"]
        prior = self.data["prior"]

        # Validate that the problem is well posed
        try:
            assert problem["elements"] >= 2
            assert problem["steps"] >= 1
            assert problem["t_end"] > 0
            assert problem["x_right"] > problem["x_left"]
            assert problem["theta"] > 0 and problem["theta_ref"] > 0
            assert problem["refinement"] >= MIN_REFERENCE_REFINEMENT
            assert noise["sigma_p"] > 0 and noise["sigma_d"] >= 0
            assert noise["sigma"] is None or noise["sigma"] > 0
            assert prior["tau"] > 0
            assert len(prior["bracket"]) == 2
            assert 0 < prior["bracket"][0] < prior["bracket"][1]
            assert len(prior["curve_range"]) == 2
            assert 0 < prior["curve_range"][0] < prior["curve_range"][1]
        except AssertionError:
            raise ConfigError(
                "Inconsistent problem, noise or prior settings:\n"
                "{}".format(
                    json.dumps(
                        {"problem": problem, "noise": noise, "prior": prior},
                        indent=2,
                        sort_keys=True,
                    )
                )
            )

        steps = prior["curve_steps"]
        if not all(
            isinstance(n, int)
            and not isinstance(n, bool)
            and 1 <= n <= problem["steps"]
            for n in steps
        ):
            raise ConfigError(
                "prior.curve_steps: expected step counts in 1..{}, got "
                "{}".format(problem["steps"], steps)
            )

        for key in ("curve_sigma", "curve_sigma_p"):
            if not all(_is_number(s) and s > 0 for s in prior[key]):
                raise ConfigError(
                    "prior.{}: expected positive numbers, got {}".format(
                        key, prior[key]
                    )
                )

        unknown = [
            s for s in self.data["design"]["setups"] if s not in SETUP_FAMILIES
        ]
        if unknown:
            raise ConfigError(
                "design.setups: unknown setups {}; use {}".format(
                    unknown, SETUP_FAMILIES
                )
            )

        for key in ("mu_grid", "eta_grid"):
            grid = self.data["field"][key]
            if len(grid) != 3 or not grid[0] < grid[1] or int(grid[2]) < 3:
                raise ConfigError(
                    "field.{}: expected [low, high, count], got {}".format(
                        key, grid
                    )
                )

    @property
    def seed(self):
        """int: The master seed."""
        return self.data["rng"]["seed"]

    @property
    def likelihood_sigma(self):
        """float: sigma of the likelihood; sigma_d unless overridden."""
        sigma = self.data["noise"]["sigma"]
        return self.data["noise"]["sigma_d"] if sigma is None else sigma

    @property
    def posterior_mode(self):
        """str: prior.mode, or "marginal" when it is unset."""
        mode = self.data["prior"]["mode"]
        return MARGINAL if mode is None else mode

    @property
    def fit_modes(self):
        """tuple: The modes ``fit`` runs; both unless prior.mode is set."""
        mode = self.data["prior"]["mode"]
        return POSTERIOR_MODES if mode is None else (mode,)

    def with_overrides(self, **blocks):
        """Return a copy with some values replaced.

        Example:

            >>> config.with_overrides(rng={"seed": 7})
        """
        data = copy.deepcopy(self.data)
        for block, values in blocks.items():
            data.setdefault(block, {}).update(values)

        return RunConfig(data)

    def to_dict(self):
        """Return the resolved document, every default included."""
        return copy.deepcopy(self.data)

    @classmethod
    def from_dict(cls, data):
        return cls(data)

    @classmethod
    def from_file(cls, path):
        """Read a JSON configuration.

        Raises:
            :class:`parapost.exceptions.ConfigError`: The file is not
                valid JSON or does not match the schema.
        """
        with open(path) as f:
            try:
                data = json.load(f)
            except ValueError as err:
                raise ConfigError("{}: {}".format(path, err))

        try:
            return cls(data)
        except ConfigError as err:
            raise ConfigError("{}: {}".format(path, err))

    @classmethod
    def from_env(cls, path=None):
        """Return a configuration with the seed taken from the environment.

        The environment variable looked for is the following:

        .. envvar:: PARAPOST_SEED

            An integer overriding ``rng.seed``.

        Example:

            >>> from parapost.config import from_env
            >>> config = from_env("run.json")

        Args:
            path (str, optional): A JSON configuration file. Defaults to
                all defaults.

        Returns:
            :class:`RunConfig`: The configuration.

        Raises:
            :class:`parapost.exceptions.BadEnvironmentError`: The seed
                variable is not an integer.
        """
        config = cls() if path is None else cls.from_file(path)

        try:
            raw = os.environ[SEED_ENVIRONMENT_VARIABLE]
        except KeyError:
            return config

        try:
            seed = int(raw)
        except ValueError:
            raise BadEnvironmentError(
                "{} must be an integer, got {!r}".format(
                    SEED_ENVIRONMENT_VARIABLE, raw
                )
            )

        logger.info("Seed %d taken from %s", seed, SEED_ENVIRONMENT_VARIABLE)

        return config.with_overrides(rng={"seed": seed})


# Allow convenient import access to environment-configured runs
from_env = RunConfig.from_env
