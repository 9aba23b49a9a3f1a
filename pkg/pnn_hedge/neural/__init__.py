from .checkpoint import load_checkpoint, save_checkpoint
from .network import (
    FeatureRow,
    Gradients,
    NetworkParams,
    backward,
    embed,
    forward_delta,
    init_params,
    selu,
)
