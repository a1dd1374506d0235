"""Loyalty-program analytics, simulation and learning experiments."""

from loyalty_lab._core import (
    Instance,
    LinkKind,
    TypeSpec,
    fit_behavioural,
    gen_k_tiers,
    gen_lower_bound_pair,
    gen_misspec,
    gen_rho_sweep,
    gen_two_type,
    instance_from_json,
    instance_to_json,
    learn,
    long_run_revenue,
    mixture_revenue,
    optimal_personalized,
    optimal_threshold,
    pof_upper_bound,
    price_of_fairness,
    purchase_curve,
    regret_instance,
    rev_gap_closed_form,
    run_study,
    simulate_fixed,
    stationary_distribution,
    tight_instance,
    tmix_upper_bound,
)

__all__ = [
    "Instance",
    "LinkKind",
    "TypeSpec",
    "fit_behavioural",
    "gen_k_tiers",
    "gen_lower_bound_pair",
    "gen_misspec",
    "gen_rho_sweep",
    "gen_two_type",
    "instance_from_json",
    "instance_to_json",
    "learn",
    "long_run_revenue",
    "mixture_revenue",
    "optimal_personalized",
    "optimal_threshold",
    "pof_upper_bound",
    "price_of_fairness",
    "purchase_curve",
    "regret_instance",
    "rev_gap_closed_form",
    "run_study",
    "simulate_fixed",
    "stationary_distribution",
    "tight_instance",
    "tmix_upper_bound",
]
