"""Sampling-pattern-agnostic diffusion-based MRI reconstruction toolkit."""

from .grid import (  # noqa: F401
    ComplexGrid,
    NormParams,
    denormalize,
    from_pseudo_real,
    normalize,
    to_pseudo_real,
)
from .cxg import load_cxg, save_cxg  # noqa: F401
from .masks import (  # noqa: F401
    SamplingMask,
    effective_acceleration,
    gen_gaussian_mask,
    gen_radial_mask,
    gen_uniform_mask,
)
from .encoding import (  # noqa: F401
    CoilSensitivities,
    EncodingOperator,
    KSpaceData,
    adjoint,
    fft2c,
    forward,
    gen_coil_maps,
    ifft2c,
    zero_filled,
)
from .schedule import (  # noqa: F401
    NoiseSchedule,
    TimestepPlan,
    cosine_schedule,
    ddim_sigma,
    linear_schedule,
    uniform_plan,
)
from .denoiser import (  # noqa: F401
    AnalyticGaussianDenoiser,
    CountingDenoiser,
    GaussianPrior,
    TinyDenoiser,
    analytic_gaussian_eps,
    estimate_x0,
    load_weights,
    save_weights,
    score_from_eps,
    tiny_denoiser_eps,
    train_tiny_denoiser,
)
from .consistency import (  # noqa: F401
    ConsistencyState,
    FrequencyWeights,
    adaptive_weight,
    backproject_adaptive,
    ddnm_project,
    dps_gradient,
    freq_decompose,
    residual,
)
from .sampler import (  # noqa: F401
    DivergenceError,
    ReconConfig,
    SampleTrace,
    dai_forward_step,
    ddim_forward_naive,
    ddim_reverse_step,
    ddnm_sample,
    implied_eps,
    invert,
    spa_mri_sample,
)
from .metrics import magnitude_01, psnr, ssim, ssim_global  # noqa: F401
from .evalbench import (  # noqa: F401
    BenchReport,
    Phantom,
    gen_phantom,
    run_benchmark,
    simulate_acquisition,
)

__version__ = "0.1.0"
