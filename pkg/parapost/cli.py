"""Contains the parapost command line interface."""

from __future__ import absolute_import
from __future__ import division
from __future__ import print_function
import argparse
import itertools
import logging
import os
import sys
import numpy as np
from parapost.config import RunConfig
from parapost.constants import (
    EXIT_CONFIG_ERROR,
    EXIT_IO_ERROR,
    EXIT_NUMERICAL_ERROR,
    EXIT_OK,
    KNOWN_BC,
    POSTERIOR_MODES,
    SPOT_CHECK_GRID_POINTS,
    SPOT_CHECK_WIDTH,
)
from parapost.design import (
    ExperimentalSetup,
    eig_grid,
    information_divergence,
    restrict_observations,
)
from parapost.exceptions import (
    BracketError,
    ConfigError,
    DataFormatError,
    DomainError,
    GridError,
    NumericalError,
    QueryError,
    SampleCountError,
    SetupError,
)
from parapost.field_hyper import HyperPrior, hyper_log_posterior_grid
from parapost.models.boundary import BoundaryPrior, BoundarySeries
from parapost.models.coefficients import CoefficientField, InitialCondition
from parapost.models.mesh import SpatialMesh, TimeGrid
from parapost.models.validation import validate_problem
from parapost.posterior_scalar import (
    LognormalPrior,
    ScalarInference,
    grid_posterior,
)
from parapost.predictive import (
    PredictiveQuery,
    predictive_density,
    predictive_summary,
)
from parapost.synth_data import (
    CONSTANT_THETA,
    DatasetGenerator,
    DatasetSpec,
    RobinProblem,
    random_field_problem,
)
from parapost.version import NAME, VERSION
from parapost.workspace import Workspace

logger = logging.getLogger(__name__)

COMMANDS = ("generate", "fit", "design", "predict", "field-fit")

# Exception families and the exit code each maps to
EXIT_CODES = (
    (
        (ConfigError, SetupError, QueryError, SampleCountError),
        EXIT_CONFIG_ERROR,
    ),
    ((NumericalError, DomainError), EXIT_NUMERICAL_ERROR),
    ((OSError, DataFormatError), EXIT_IO_ERROR),
)


def build_parser():
    """Return the argument parser."""
    parser = argparse.ArgumentParser(
        prog=NAME,
        description="Bayesian inference of 1D parabolic PDE coefficients.",
    )
    parser.add_argument("command", choices=COMMANDS, help="What to run.")
    parser.add_argument("--config", help="A JSON run configuration.")
    parser.add_argument(
        "--data", help="An observation CSV. Defaults to io.observations."
    )
    parser.add_argument(
        "--out", default=".", help="The output directory. Defaults to '.'."
    )
    parser.add_argument(
        "--mode",
        choices=POSTERIOR_MODES,
        help="Posterior mode. fit runs both unless this or prior.mode is set.",
    )
    parser.add_argument(
        "--threads", type=int, default=1, help="Worker process cap."
    )
    parser.add_argument("--seed", type=int, help="Override rng.seed.")
    verbosity = parser.add_mutually_exclusive_group()
    verbosity.add_argument("--verbose", action="store_true")
    verbosity.add_argument("--quiet", action="store_true")
    parser.add_argument(
        "--version", action="version", version="%(prog)s " + VERSION
    )

    return parser


def load_config(args):
    """Resolve the configuration from a file, the environment and flags."""
    config = RunConfig.from_env(args.config)
    overrides = {}

    if args.seed is not None:
        overrides["rng"] = {"seed": args.seed}

    if args.mode is not None:
        overrides["prior"] = {"mode": args.mode}

    return config.with_overrides(**overrides) if overrides else config


def problem_grids(config):
    """The sensor mesh and observation grid of a configuration."""
    problem = config.problem
    mesh = SpatialMesh.uniform(
        problem["elements"], problem["x_left"], problem["x_right"]
    )

    return mesh, TimeGrid(problem["t_end"], problem["steps"])


def dataset_generator(config, kind=None):
    """The generator a configuration describes.

    Returns:
        tuple: The :class:`parapost.synth_data.DatasetGenerator` and the
        true diffusion, one value per element.
    """
    problem = config.problem
    kind = problem["dataset"] if kind is None else kind
    mesh, grid = problem_grids(config)
    settings = dict(
        h_over_kappa=problem["h_over_kappa"],
        t_out=problem["t_out"],
        t0=problem["t0"],
        resolution=problem["refinement"],
    )

    if kind == CONSTANT_THETA:
        theta = problem["theta"] / problem["theta_ref"]
        prob = RobinProblem(
            CoefficientField.constant(theta, mesh), mesh, grid, **settings
        )
        truth = np.full(mesh.element_count, theta)
    else:
        hyper = problem["field_truth"]
        prob, truth = random_field_problem(
            (hyper["mu"], hyper["eta"], hyper["length"]),
            config.seed + 1,
            mesh,
            grid,
            **settings
        )

    # Validate that the problem is well posed before the reference solve
    validate_problem(
        mesh,
        grid,
        prob.theta_field,
        InitialCondition.constant(problem["t0"], mesh),
    ).raise_for_violations()

    spec = DatasetSpec(
        mesh.nodes,
        grid.step_count,
        config.noise["sigma_d"],
        config.seed,
        sigma=config.likelihood_sigma,
        precision=config.noise["precision"],
    )

    return DatasetGenerator(prob, spec), truth


def scalar_inference(config, mode=None):
    prior = config.prior
    return ScalarInference(
        LognormalPrior(prior["nu"], prior["tau"]),
        config.noise["sigma_p"],
        bracket=prior["bracket"],
        mode=config.posterior_mode if mode is None else mode,
        boundary_mean=prior["boundary_mean"],
        knots=prior["spline_knots"],
        lumped=config.problem["lumped"],
    )


def read_observations(config, workspace, data=None):
    """Load the observation set and check the problem it poses.

    Raises:
        :class:`parapost.exceptions.DomainError`: The readings and the
            configured initial condition are not a well posed problem.
    """
    path = data if data is not None else config.io["observations"]
    problem = config.problem

    obs = workspace.observations.get(
        os.path.abspath(path) if data is not None else path,
        sigma=config.likelihood_sigma,
        initial_value=problem["t0"],
        x_left=problem["x_left"],
        x_right=problem["x_right"],
    )
    validate_problem(
        obs.mesh,
        obs.grid,
        CoefficientField.constant(problem["theta"], obs.mesh),
        obs.initial,
        BoundarySeries(obs.Y_L, obs.Y_R, obs.initial.left, obs.initial.right),
    ).raise_for_violations()

    return obs


def cmd_generate(config, workspace, args):
    """Write a synthetic dataset and its truth sidecar."""
    generator, truth = dataset_generator(config)
    obs = generator.draw()
    record = generator.truth_record(config.problem["dataset"], truth)
    if config.problem["dataset"] != CONSTANT_THETA:
        record.metadata["field_truth"] = config.problem["field_truth"]
        record.metadata["field_seed"] = config.seed + 1

    workspace.observations.put(obs, config.io["observations"])
    workspace.truths.put(record, config.io["truth"])


def _known_boundary(config, workspace):
    """The noise-free boundary of the truth sidecar, when there is one."""
    path = workspace.resolve(config.io["truth"])

    if not os.path.exists(path):
        logger.info("No truth sidecar; known-bc uses the boundary readings")
        return None

    return workspace.truths.get(config.io["truth"]).boundary


def sweep_curves(config, workspace, obs, mode, known_boundary, thetas):
    """Write the curves of every (N, sigma, sigma_p) combination.

    An empty prior.curve_* list keeps the value of the main fit.
    """
    prior = config.prior
    combinations = itertools.product(
        prior["curve_steps"] or [obs.step_count],
        prior["curve_sigma"] or [obs.sigma],
        prior["curve_sigma_p"] or [config.noise["sigma_p"]],
    )
    header, columns = ["theta"], [thetas]

    for N, sigma, sigma_p in combinations:
        inference = scalar_inference(
            config.with_overrides(noise={"sigma_p": sigma_p}), mode
        )
        log_post = inference.log_posterior(
            obs.truncate(N).with_sigma(sigma),
            None if known_boundary is None else known_boundary.truncated(N),
        )

        label = "N{}_s{:g}_sp{:g}".format(N, sigma, sigma_p)
        header += ["log_likelihood_" + label, "log_posterior_" + label]
        columns.append([log_post.log_likelihood(t) for t in thetas])
        columns.append([log_post(t) for t in thetas])

    return workspace.write_table(
        "fit-sweep-{}.csv".format(mode), header, zip(*columns)
    )


def fit_mode(config, workspace, obs, mode):
    """Fit one posterior mode and write its report and curve."""
    inference = scalar_inference(config, mode)
    known_boundary = (
        _known_boundary(config, workspace) if mode == KNOWN_BC else None
    )
    if known_boundary is not None:
        known_boundary = known_boundary.truncated(obs.step_count)

    try:
        fit = inference.fit(obs, known_boundary)
    except BracketError as err:
        workspace.write_table(
            "fit-bracket-{}.csv".format(mode),
            ["theta", "log_posterior"],
            zip(err.grid, err.values),
        )
        raise

    laplace = fit.laplace
    grid_mean = grid_sd = tv = None
    try:
        lo = max(
            laplace.theta_hat - SPOT_CHECK_WIDTH * laplace.sd,
            1e-3 * laplace.theta_hat,
        )
        hi = laplace.theta_hat + SPOT_CHECK_WIDTH * laplace.sd
        grid = grid_posterior(
            fit.log_posterior, np.linspace(lo, hi, SPOT_CHECK_GRID_POINTS)
        )
        grid_mean, grid_sd = grid.mean, grid.sd
        tv = grid.tv_distance(laplace)
    except GridError as err:
        logger.warning("No grid posterior for %s: %s", mode, err)

    lo, hi = config.prior["curve_range"]
    thetas = np.linspace(lo, hi, config.prior["curve_points"])
    workspace.write_table(
        "fit-curve-{}.csv".format(mode),
        ["theta", "log_likelihood", "log_posterior"],
        (
            (
                t,
                fit.log_posterior.log_likelihood(t),
                fit.log_posterior(t),
            )
            for t in thetas
        ),
    )

    prior = config.prior
    if prior["curve_steps"] or prior["curve_sigma"] or prior["curve_sigma_p"]:
        sweep_curves(config, workspace, obs, mode, known_boundary, thetas)

    theta_ref = config.problem["theta_ref"]
    report = {
        "mode": mode,
        "theta_hat": fit.theta_hat,
        "laplace_mean": laplace.mean,
        "laplace_sd": laplace.sd,
        "log_evidence": laplace.log_norm_const,
        "grid_mean": grid_mean,
        "grid_sd": grid_sd,
        "tv_distance": tv,
        "theta_ref": theta_ref,
        "physical_mean": laplace.mean * theta_ref,
        "physical_sd": laplace.sd * theta_ref,
        "sigma": obs.sigma,
        "seed": config.seed,
    }
    logger.info(
        "%s: theta = %.6g +/- %.3g", mode, laplace.mean, laplace.sd
    )

    return workspace.write_report(
        "fit-report-{}.json".format(mode), report, schema="fit-report"
    )


def cmd_fit(config, workspace, args):
    """Fit theta in one or both posterior modes."""
    obs = read_observations(config, workspace, args.data)

    for mode in config.fit_modes:
        fit_mode(config, workspace, obs, mode)


def design_setups(config, mesh):
    """The setups of each configured family."""
    labels = mesh.interior_labels
    t_end = config.problem["t_end"]
    windows = config.design["windows"]
    families = {
        "es1": lambda: ExperimentalSetup.es1(t_end, windows),
        "es2": lambda: ExperimentalSetup.es2(labels),
        "es3": lambda: ExperimentalSetup.es3(labels, t_end, windows),
    }

    return [(name, families[name]()) for name in config.design["setups"]]


def cmd_design(config, workspace, args):
    """Tabulate the EIG of each setup and the divergence of the data."""
    generator, _ = dataset_generator(config, kind=CONSTANT_THETA)
    inference = scalar_inference(config)

    data_path = (
        args.data
        if args.data is not None
        else workspace.resolve(config.io["observations"])
    )
    obs = None
    if os.path.exists(data_path):
        obs = read_observations(config, workspace, os.path.abspath(data_path))

    for family, setups in design_setups(config, generator.mesh):
        estimates = eig_grid(
            setups,
            generator,
            config.design["replications"],
            config.seed,
            inference,
            args.threads,
        )
        rows = []

        for setup, estimate in estimates:
            divergence = None
            if obs is not None:
                fit = inference.fit(restrict_observations(obs, setup))
                divergence = information_divergence(
                    inference.prior_theta, fit.laplace
                )

            rows.append(
                (
                    setup.label,
                    setup.kind,
                    "" if divergence is None else divergence,
                    estimate.mean,
                    estimate.std_error,
                    estimate.replications,
                    estimate.dropped,
                )
            )

        workspace.write_table(
            "eig-{}.csv".format(family),
            [
                "setup",
                "kind",
                "dkl_data",
                "eig_mean",
                "eig_std_error",
                "replications",
                "dropped",
            ],
            rows,
        )


def cmd_predict(config, workspace, args):
    """Write predictive densities and their summary."""
    settings = config.predict
    obs = read_observations(config, workspace, args.data)
    query = PredictiveQuery.from_observations(
        obs,
        settings["history_time"],
        settings["steps_ahead"],
        settings["sensors"],
    )
    history = obs.truncate(query.history_horizon)
    inference = scalar_inference(config)
    fit = inference.fit(history)

    tables = predictive_density(
        query,
        obs,
        fit.laplace,
        settings["samples"],
        seed=config.seed,
        prior_b=inference.boundary_prior(history),
        lumped=config.problem["lumped"],
        grid_points=settings["grid_points"],
    )

    header = []
    for table in tables:
        header += [table.sensor + "_value", table.sensor + "_density"]

    columns = []
    for table in tables:
        columns += [table.values, table.density]

    workspace.write_table(
        "predictive-density.csv", header, np.column_stack(columns).tolist()
    )
    workspace.write_report(
        "predictive-summary.json",
        {
            "history_time": settings["history_time"],
            "steps_ahead": settings["steps_ahead"],
            "samples": settings["samples"],
            "seed": config.seed,
            "sensors": [s.to_dict() for s in predictive_summary(tables)],
        },
        schema="predictive-summary",
    )


def cmd_field_fit(config, workspace, args):
    """Tabulate the hyperparameter posterior and fit a Gaussian to it."""
    field = config.field
    obs = read_observations(config, workspace, args.data)
    prior_b = BoundaryPrior.from_observations(
        obs,
        config.noise["sigma_p"],
        mean=config.prior["boundary_mean"],
        knots=config.prior["spline_knots"],
    )
    mu_lo, mu_hi, mu_count = field["mu_grid"]
    eta_lo, eta_hi, eta_count = field["eta_grid"]

    grid = hyper_log_posterior_grid(
        obs,
        HyperPrior(**field["prior"]),
        np.linspace(mu_lo, mu_hi, int(mu_count)),
        np.linspace(eta_lo, eta_hi, int(eta_count)),
        field["length_samples"],
        field["z_samples"],
        seed=config.seed,
        prior_b=prior_b,
        lumped=config.problem["lumped"],
        workers=args.threads,
    )
    workspace.write_table(
        "hyper-grid.csv", ["mu", "eta", "log_density", "log_se"], grid.rows()
    )

    if grid.invalid_fraction > field["max_invalid_fraction"]:
        raise GridError(
            "{:.1%} of hyperposterior cells are invalid (limit {:.1%}); "
            "see hyper-grid.csv".format(
                grid.invalid_fraction, field["max_invalid_fraction"]
            )
        )

    laplace = grid.laplace()
    workspace.write_report(
        "field-laplace.json",
        {
            "map": list(grid.map_pair),
            "mean": laplace.mean.tolist(),
            "covariance": laplace.covariance.tolist(),
            "local_maxima": [
                [float(grid.mu_grid[i]), float(grid.eta_grid[j])]
                for i, j in grid.local_maxima()
            ],
            "invalid_fraction": grid.invalid_fraction,
            "length_samples": field["length_samples"],
            "z_samples": field["z_samples"],
            "seed": config.seed,
        },
        schema="field-laplace",
    )


HANDLERS = {
    "generate": cmd_generate,
    "fit": cmd_fit,
    "design": cmd_design,
    "predict": cmd_predict,
    "field-fit": cmd_field_fit,
}


def configure_logging(args):
    if args.verbose:
        level = logging.DEBUG
    elif args.quiet:
        level = logging.WARNING
    else:
        level = logging.INFO

    logging.basicConfig(
        level=level, format="%(asctime)s %(levelname)s %(name)s: %(message)s"
    )


def exit_code(error):
    """Return the exit code of an exception, or None if it is unexpected."""
    for families, code in EXIT_CODES:
        if isinstance(error, families):
            return code

    return None


def main(argv=None):
    """Run a command and return its exit code."""
    args = build_parser().parse_args(argv)
    configure_logging(args)

    try:
        config = load_config(args)
        workspace = Workspace(args.out)
        workspace.write_config(config)
        logger.info("Running %s with seed %d", args.command, config.seed)

        HANDLERS[args.command](config, workspace, args)
    except Exception as err:
        code = exit_code(err)
        if code is None:
            raise

        logger.error("%s: %s", type(err).__name__, err)
        return code

    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
