from pointsplit._core import (
    __version__,
    ball_query,
    biased_fps,
    count_madds,
    count_params,
    count_quant_params,
    derive_params,
    estimate_comm,
    fps,
    preset_stats,
    quant_error,
    quant_roundtrip,
    schedule,
    split_sample,
)

__all__ = [
    "__version__",
    "ball_query",
    "biased_fps",
    "count_madds",
    "count_params",
    "count_quant_params",
    "derive_params",
    "estimate_comm",
    "fps",
    "preset_stats",
    "quant_error",
    "quant_roundtrip",
    "schedule",
    "split_sample",
]
