"""Factor graphs of quantum mass functions.

Named-axis tensor contraction, mirrored Forney factor graphs, certified
quantum mass functions, classicality checks, measurement gadgets and
prebuilt models.
"""

from .classical import (
    ConfigTable,
    classicality_report,
    is_classical,
    is_jointly_classicable,
    valid_configurations,
)
from .graph import FactorGraph, Gadget, GraphError, instantiate, mirror_complete, terminate
from .measure import (
    InteractionFamily,
    KappaMatrix,
    converge,
    copy_gadget,
    interaction_gadget,
    kappa,
    one_shot_family,
    projection_gadget,
    separation_check,
    undo_check,
)
from .modelfile import ModelError, load_model, parse_model, serialize_model
from .models import (
    FrModel,
    classicable_example,
    elementary_system,
    fr_implications,
    fr_model,
    two_measurement_system,
)
from .qmf import Pmf, Sqmf, SqmfError, certify_sqmf, is_psd_kernel, marginalize, measurement_pmf
from .tensor import Axis, NamedTensor, contract, is_unitary

__version__ = "0.1.0"

__all__ = [
    "Axis",
    "ConfigTable",
    "FactorGraph",
    "FrModel",
    "Gadget",
    "GraphError",
    "InteractionFamily",
    "KappaMatrix",
    "ModelError",
    "NamedTensor",
    "Pmf",
    "Sqmf",
    "SqmfError",
    "certify_sqmf",
    "classicable_example",
    "classicality_report",
    "contract",
    "converge",
    "copy_gadget",
    "elementary_system",
    "fr_implications",
    "fr_model",
    "instantiate",
    "interaction_gadget",
    "is_classical",
    "is_jointly_classicable",
    "is_psd_kernel",
    "is_unitary",
    "kappa",
    "load_model",
    "marginalize",
    "measurement_pmf",
    "mirror_complete",
    "one_shot_family",
    "parse_model",
    "projection_gadget",
    "separation_check",
    "serialize_model",
    "terminate",
    "two_measurement_system",
    "undo_check",
    "valid_configurations",
]
