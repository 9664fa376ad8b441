"""Exact fair division of indivisible and mixed goods.

Randomized allocations that are fair in expectation and approximately fair in
every realization, computed over exact rationals.
"""
from .checkers import (
    PropertyReport, brute_force_property, check_ef, check_ef1, check_efm, check_efx, check_efxm,
    check_property, check_prop,
)
from .core import (
    Bundle, FractionalAllocation, Instance, IntegralAllocation, RandomizedAllocation, ValueTag,
    expected_allocation, merge_divisibles, validate_instance,
)
from .efx_fpo import certify_run, run_efx_fpo, solve_efx_fpo
from .errors import FairDivisionError, InvariantViolation, PreconditionError
from .exante import enumerate_lottery, exact_report, sample_lottery, verify_exante
from .fisher import FisherCertificate, build_fisher_certificate, check_fpo_lp, verify_certificate
from .mixed_bobw import PropEfmPlan, reduce_instance, round_robin, solve_prop_efm, water_fill
from .two_agent import local_search, solve_two_agent_efm, solve_two_agent_efx

__version__ = "0.1.0"

__all__ = [
    "Bundle", "FairDivisionError", "FisherCertificate", "FractionalAllocation", "Instance",
    "IntegralAllocation", "InvariantViolation", "PreconditionError", "PropEfmPlan",
    "PropertyReport", "RandomizedAllocation", "ValueTag", "brute_force_property",
    "build_fisher_certificate", "certify_run", "check_ef", "check_ef1", "check_efm", "check_efx",
    "check_efxm", "check_fpo_lp", "check_prop", "check_property", "enumerate_lottery",
    "exact_report", "expected_allocation", "local_search", "merge_divisibles", "reduce_instance",
    "round_robin", "run_efx_fpo", "sample_lottery", "solve_efx_fpo", "solve_prop_efm",
    "solve_two_agent_efm", "solve_two_agent_efx", "validate_instance", "verify_certificate",
    "verify_exante", "water_fill",
]
