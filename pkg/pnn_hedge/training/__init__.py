from .optimizer import OptimizerState, adam_step, lr_schedule
from .trainer import (
    hedge_with_network,
    hedging_loss,
    recalibrate,
    split_paths,
    train,
    train_single_task,
)
