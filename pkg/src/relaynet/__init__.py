"""Two-relay compress-and-forward network toolkit with receiver feedback.

Modules: ``pmf`` (distributions), ``info`` (information measures),
``region`` (rate and constraint evaluation), ``fme`` (exact Fourier-Motzkin
elimination), ``optimizer`` (rate search), ``sim`` (Monte-Carlo scheme
simulation), ``specfile`` and ``cli``.
"""
__version__ = "0.1.0"

from .fme import check_against_theorem1, eliminate, project_max_rate  # noqa: E402
from .info import entropy, mutual_info  # noqa: E402
from .optimizer import OptimizerConfig, maximize_rate, random_dist  # noqa: E402
from .pmf import (Channel, FactoredNetworkDistribution, JointPmf, build_joint,  # noqa: E402
                  marginalize, validate)
from .region import (compare_modes, info_vector, stepwise_system,  # noqa: E402
                     theorem1_verdict)
from .sim import SimParams, estimate_error, is_jointly_typical, run_trial  # noqa: E402
from .specfile import NetworkSpec, load_spec  # noqa: E402

__all__ = [
    "Channel", "FactoredNetworkDistribution", "JointPmf", "NetworkSpec", "OptimizerConfig",
    "SimParams", "build_joint", "check_against_theorem1", "compare_modes", "eliminate",
    "entropy", "estimate_error", "info_vector", "is_jointly_typical", "load_spec",
    "marginalize", "maximize_rate", "mutual_info", "project_max_rate", "random_dist",
    "run_trial", "stepwise_system", "theorem1_verdict", "validate",
]
