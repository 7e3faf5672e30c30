"""Laboratory emulation of fluctuating-loss quantum channels.

Click statistics measured (or simulated) at fixed attenuations are weighted
with a discrete probability distribution of the transmittance (PDT) to
emulate a turbulent channel; nonclassicality of the result is tested with
matrices of normally ordered moments.
"""

from .detector import ClickStatistics, DetectorConfig, click_statistics, moments_from_clicks
from .nonclassicality import NonclassicalityResult, Verdict, classify, moment_matrix, min_eigenvalue
from .pdt import DiscretePDT, LogNormalPDT, discretize, post_select, beta_binomial
from .pipeline import ChannelEnsemble, atmospheric_run, build_ensemble, calibrate_source
from .source import SourceConfig, apply_loss

__all__ = [
    "ChannelEnsemble",
    "ClickStatistics",
    "DetectorConfig",
    "DiscretePDT",
    "LogNormalPDT",
    "NonclassicalityResult",
    "SourceConfig",
    "Verdict",
    "apply_loss",
    "atmospheric_run",
    "beta_binomial",
    "build_ensemble",
    "calibrate_source",
    "classify",
    "click_statistics",
    "discretize",
    "min_eigenvalue",
    "moment_matrix",
    "moments_from_clicks",
    "post_select",
]
