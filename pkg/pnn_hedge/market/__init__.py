from .bns import bns_cumulant, bns_step
from .family import (
    DEFAULT_SV_RANGES,
    resolve_family,
    sample_gbm_family,
    sample_sv_family,
)
from .gbm import gbm_step
from .heston import heston_step
from .heston_jump import heston_jump_step
from .market_base import PATH_BLOCK, JumpBatch, task_seeds
from .simulator import simulate
