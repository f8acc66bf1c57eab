"""ABC-PMC for finite Gaussian mixtures (C++ core)."""

from ._core import (
    ConfigError,
    DegenerateSampleError,
    DegenerateSystemError,
    DensitySummary,
    DomainError,
    EngineAbort,
    IterationTelemetry,
    MixtureParams,
    ObservedDataset,
    ParameterSet,
    ParseError,
    Particle,
    ParticleSystem,
    PriorSpec,
    RelabelReport,
    RunConfig,
    RunResult,
    abc_distance,
    data_driven_prior,
    hellinger,
    kde,
    presets,
    read_dataset_csv,
    relabel,
    resample_weights,
    run,
    run_preset,
    sample_prior,
    simulate,
    weighted_kde,
)

__all__ = [name for name in dir() if not name.startswith("_")]
