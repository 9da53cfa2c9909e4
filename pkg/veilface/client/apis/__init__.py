from veilface.client.apis.base import VeilBaseAPI
from veilface.client.apis.evaluation import EvaluationAPI
from veilface.client.apis.protection import (
    ProtectionAPI,
    load_pipeline,
    resolve_att_b,
)
from veilface.client.apis.surrogates import SurrogateAPI
from veilface.client.apis.training import TrainingAPI

__all__ = [
    "VeilBaseAPI",
    "EvaluationAPI",
    "ProtectionAPI",
    "SurrogateAPI",
    "TrainingAPI",
    "load_pipeline",
    "resolve_att_b",
]
