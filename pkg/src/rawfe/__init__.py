"""rawfe: raw-waveform feature extraction laboratory.

Fixed front-ends (log mel, gammatone), learnable front-ends (strided conv
stacks and SC features), filter analysis and masking, a minimal autodiff
engine with a distillation trainer, and byte-exact file formats.
"""

from rawfe.analysis import (
    FrequencyResponse,
    ProbeResponse,
    frequency_response,
    model_extractor,
    peak_to_average,
    ranking_for_masking,
    sine_probe,
    sort_filters,
)
from rawfe.autodiff import Tensor, backward
from rawfe.dsp import (
    FilterBank,
    MelMatrix,
    NormalizedWaveform,
    Spectrum,
    Waveform,
    dct_ii,
    dft_magnitude,
    gammatone_kernels,
    mel_matrix,
    normalize_waveform,
    stft_power,
    synthesize_sine,
)
from rawfe.fixed import (
    FeatureMatrix,
    feature_normalize,
    gammatone_envelopes,
    gammatone_extract,
    logmel_extract,
)
from rawfe.formats import (
    load_weights,
    read_feature_binary,
    read_matrix_csv,
    read_wav,
    save_weights,
    write_feature_binary,
    write_matrix_csv,
    write_wav,
)
from rawfe.neural import (
    ConvLayerSpec,
    ConvStackConfig,
    FeModel,
    MaskSpec,
    ScConfig,
    audit_geometry,
    count_params,
    forward,
    init_model,
    mask_filters,
    output_frames,
    preset_config,
    sc_forward,
    w2v_forward,
)
from rawfe.train import (
    Adam,
    TrainConfig,
    TrainResult,
    finite_diff_check,
    one_cycle_lr,
    train_distill,
)

__version__ = "0.1.0"
