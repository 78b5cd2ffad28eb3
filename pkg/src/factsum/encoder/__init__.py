from .gradcheck import GradCheckReport, grad_check
from .model import (
    CLASSIFIER_MODES,
    Batch,
    EncoderConfig,
    Encoded,
    Vocab,
    bce_loss,
    classify_facts,
    embed,
    encode,
    forward,
    init_params,
    loss_and_grads,
    make_batch,
    masked_attention,
    predict,
)
from .train import (
    Example,
    TrainingConfig,
    TrainResult,
    load_checkpoint,
    lr_schedule,
    make_example,
    save_checkpoint,
    train,
    write_curve,
)
