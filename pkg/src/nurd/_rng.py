import zlib

import numpy as np


def job_seed(seed: int, job_id: str, *extra: int) -> list[int]:
    """Seed sequence entropy for an independent per-job stream."""
    return [int(seed) & 0xFFFFFFFFFFFFFFFF, zlib.crc32(job_id.encode()), *extra]


def job_rng(seed: int, job_id: str, *extra: int) -> np.random.Generator:
    return np.random.default_rng(job_seed(seed, job_id, *extra))
