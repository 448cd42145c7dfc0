"""Bohl exponents, dichotomies and perturbation plans for linear difference systems."""
import json as _json

from ._bohlkit import (  # noqa: F401
    BohlkitError,
    System,
    bohl_space,
    bohl_vector,
    constant,
    format_double,
    log_norm_trajectory,
    nu_instance,
    parse_double,
    periodic,
    random_lyapunov,
    run_criterion,
    run_scenario as _run_scenario,
    set_thread_count,
    system_from_json,
    transition,
)
from . import _bohlkit


def search_splitting(system, seed):
    text = _bohlkit.search_splitting(system, seed)
    return None if text is None else _json.loads(text)


def check_ed(system, L1, L2):
    return _json.loads(_bohlkit.check_ed(system, L1, L2))


def check_bd(system, L1, L2, seed):
    return _json.loads(_bohlkit.check_bd(system, L1, L2, seed))


def sample_spectrum(system, start, stop, step, seed):
    return _json.loads(_bohlkit.sample_spectrum(system, start, stop, step, seed))


def run_scenario(doc, out_dir=None):
    """Run a scenario given as a dict or JSON text; returns exit code, error and artifact paths."""
    text = doc if isinstance(doc, str) else _json.dumps(doc)
    return _run_scenario(text, out_dir)
