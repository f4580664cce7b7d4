"""Shared fixtures: the shipped configurations, loaded through the CLI
config parser so the external interface is exercised on every run."""

from pathlib import Path

import numpy as np
import pytest

from plaplab.cli import load_config

CONFIG_DIR = Path(__file__).resolve().parent.parent / "configs"

SHIPPED = ["connected_1d", "indefinite_1d", "deadcore_1d", "blowup_neumann",
           "disk_2d"]


@pytest.fixture(scope="session")
def configs():
    return {name: load_config(CONFIG_DIR / f"{name}.json") for name in SHIPPED}


@pytest.fixture(scope="session")
def spectra(configs):
    """Threshold trio per shipped config, computed once per session."""
    from plaplab.functionals import weighted_q_mass
    from plaplab.spectrum import lambda_lower_star, lambda_star, principal_eigen

    out = {}
    for name, cfg in configs.items():
        prob = cfg.problem
        eig = principal_eigen(prob, cfg.opts)
        star = lambda_star(prob, opts=cfg.opts)
        lower = lambda_lower_star(prob, cfg.opts)
        out[name] = {
            "eig": eig,
            "star": star,
            "lower": lower,
            "phi1_q_mass": weighted_q_mass(eig.minimizer, prob.weight, prob.q),
        }
    return out


@pytest.fixture(scope="session")
def rng():
    return np.random.default_rng(42)
