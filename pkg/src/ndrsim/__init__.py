"""Simulator for noisy deterministic reasoning (NDR) machines."""
from ._kernels import BACKEND
from .errors import *  # noqa: F401,F403
from .formal_system import (
    MODARITH,
    PROP,
    SYNTHU,
    VALENCES,
    Claim,
    FormalSystem,
    Question,
    Valence,
    classify,
    enumerate_strings,
    get_system,
    is_wff,
    load_system_file,
    make_system,
)
from .ndr_machine import (
    AnswerKernel,
    NDRConfig,
    NDRState,
    QuestionPolicy,
    RemovalPolicy,
    attempt_answer,
    generate_questions,
    is_mistake_free,
    is_non_repeating,
    iterate,
    prefix,
    run_replica,
    run_replicas,
)

__version__ = "0.1.0"
