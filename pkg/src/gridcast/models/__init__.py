from .base import (MODEL_KINDS, Regressor, default_config, load_model,
                   make_model, model_from_bytes, model_to_bytes, save_model)
from .exact_boosting import GbrtConfig, GbrtModel
from .histogram_boosting import LightGbmConfig, LightGbmModel, goss_select
from .oblivious_boosting import CatBoostConfig, CatBoostModel
from .recurrent import (AwmLstmConfig, AwmLstmModel, LstmConfig, LstmModel,
                        attention_forward, lstm_cell, make_windows)
from .svr import SvrConfig, SvrModel

__all__ = [
    "MODEL_KINDS", "Regressor", "default_config", "make_model",
    "save_model", "load_model", "model_to_bytes", "model_from_bytes",
    "GbrtConfig", "GbrtModel",
    "LightGbmConfig", "LightGbmModel", "goss_select",
    "CatBoostConfig", "CatBoostModel",
    "SvrConfig", "SvrModel",
    "LstmConfig", "LstmModel", "AwmLstmConfig", "AwmLstmModel",
    "lstm_cell", "attention_forward", "make_windows",
]
