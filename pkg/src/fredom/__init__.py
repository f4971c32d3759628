"""Frequency-domain causal structure learning for multivariate time series."""

from .admm import (
    AdmmConfig,
    AdmmDiagnostics,
    AdmmState,
    CholeskyStack,
    ConsensusFactor,
    chol_ul,
    fredom_fit,
    update_L_row,
    update_Z,
    whittle_negloglik,
)
from .dag import SummaryDag
from .ordering import (
    OrderMatrix,
    TopologicalOrder,
    conditional_variance,
    consensus_order,
    order_per_frequency,
)
from .spectral import (
    FourierStack,
    SpectralStack,
    TimeSeriesMatrix,
    choose_window,
    dft,
    sample_spectral_stack,
)

__version__ = "0.1.0"
