"""Single-pixel imaging with cyclic S-matrix patterns.

Generate maximal-length pattern sequences, simulate a photodiode and ADC
measuring an image through them, and invert the measurements with one FFT
deconvolution.  Around that core: compressed sampling with interpolation,
temporal high-pass edge extraction, a Fourier-plane detector-aperture
model, three-LED colour fusion and image-quality metrics.
"""

__version__ = "0.1.0"

from .errors import (  # noqa: E402
    ConfigError,
    ConfigInvalid,
    IoFailure,
    NumericalError,
    SpiError,
)
from .mls import (  # noqa: E402
    CyclicSMatrix,
    MlsSequence,
    PrimitivePolynomial,
    lfsr_sequence,
    mls,
    polynomial_table,
    smatrix_row,
    tile_pattern,
)
from .forward import (  # noqa: E402
    MeasurementModel,
    SamplingPlan,
    VoltageTrace,
    acquisition_time,
    measure_full,
    measure_planned,
)
from .recon import crop_active, interpolate_trace, reconstruct  # noqa: E402
from .edges import FilterSpec, edge_maps, hpf_trace, spatial_hpf, threshold_edges  # noqa: E402
from .optics import ApertureModel, aperture_filter, fourier_plane_intensity, resolvable_frequency  # noqa: E402
from .color import SpectralChannel, channel_to_xyz, cie1931, fuse_rgb  # noqa: E402
from .metrics import QualityReport, effective_bits, psnr, ssim  # noqa: E402
from .images import load_image, save_image  # noqa: E402
from .fixtures import make_fixtures, silhouette, usaf_target  # noqa: E402
from .pipeline import PipelineConfig, run_pipeline  # noqa: E402
