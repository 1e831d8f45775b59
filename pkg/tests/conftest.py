"""Shared fixtures and small numerical helpers for the test suite."""

from __future__ import annotations

import warnings

import numpy as np
import pytest

from minkflow import AnglePrescription, DomainSpec, build_domain, build_grid


@pytest.fixture(scope="session")
def unit_disk():
    return build_domain(DomainSpec.disk(1.0), AnglePrescription.constant(0.0),
                        1024)


@pytest.fixture(scope="session")
def ellipse_2_1():
    return build_domain(DomainSpec.ellipse(2.0, 1.0),
                        AnglePrescription.constant(0.0), 1024)


@pytest.fixture(scope="session")
def disk_grid_32(unit_disk):
    return build_grid(unit_disk, 32, 64)


def observed_order(errors, floor=1e-11):
    """Least-squares convergence order from errors on doubling grids.

    Errors at or below the floor count as fully converged (the quantity is
    exact to roundoff and no order can be measured); in that case a large
    sentinel order is returned.
    """
    errors = np.asarray(errors, dtype=float)
    if np.all(errors <= floor):
        return np.inf
    levels = np.arange(errors.size)
    good = errors > floor
    if np.count_nonzero(good) < 2:
        return np.inf
    slope = np.polyfit(levels[good], np.log2(np.maximum(errors[good], 1e-300)),
                       1)[0]
    return -slope


def quiet_run(*args, **kwargs):
    """flow.run with compatibility warnings silenced (incompatible starts
    are intentional in many tests)."""
    from minkflow import run

    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        return run(*args, **kwargs)
