"""Frozen synthetic job suites used by the acceptance tests and the CLI."""

from __future__ import annotations

from dataclasses import replace

import numpy as np

from .trace import JobTrace, SyntheticConfig, generate_synthetic


def derived_seed(seed: int, k: int) -> int:
    return int(np.random.SeedSequence([seed, k]).generate_state(1)[0])


def synthetic_jobs(base: SyntheticConfig, n_jobs: int, seed: int, prefix: str = "job") -> list[JobTrace]:
    """``n_jobs`` independent jobs sharing ``base`` except for seed and id."""
    width = max(4, len(str(n_jobs - 1)))
    return [
        generate_synthetic(replace(base, seed=derived_seed(seed, k), job_id=f"{prefix}-{k:0{width}d}"))
        for k in range(n_jobs)
    ]


def drift_suite(n_jobs: int = 20) -> list[JobTrace]:
    """Drifted bimodal jobs of 200 to 485 tasks, 10% stragglers, drift 3."""
    return [
        generate_synthetic(
            SyntheticConfig(
                n_tasks=200 + 15 * s,
                feature_drift=3.0,
                straggler_fraction=0.1,
                latency_shape="bimodal",
                seed=1000 + s,
                job_id=f"drift-{s:02d}",
            )
        )
        for s in range(n_jobs)
    ]


def invariant_suite(n_jobs: int = 50) -> list[JobTrace]:
    """Mixed jobs for invariant checks: n in 200..500, both shapes, varied drift."""
    rng = np.random.default_rng(20220901)
    jobs = []
    for s in range(n_jobs):
        jobs.append(
            generate_synthetic(
                SyntheticConfig(
                    n_tasks=int(rng.integers(200, 501)),
                    feature_dim=int(rng.integers(2, 16)),
                    straggler_fraction=float(rng.uniform(0.05, 0.2)),
                    feature_drift=float(rng.uniform(0.0, 4.0)),
                    latency_shape="bimodal" if s % 2 == 0 else "long_tail",
                    usage_scale=float(rng.choice([0.0, 0.5, 1.0])),
                    seed=5000 + s,
                    job_id=f"inv-{s:02d}",
                )
            )
        )
    return jobs

