"""LP outer-approximation of the PSD+RLT relaxation of box-bounded QCQPs.

Workflow: build a :class:`~psdcuts.model.QcqpProblem`, lift it with
:func:`~psdcuts.model.lift`, then drive :func:`~psdcuts.engine.run` to
tighten the LP bound with spectral cutting planes.
"""

from .cuts import (Cut, CutPool, SparsifyParams, cut_from_vector, minor_cuts,
                   purge, separate_psd, sparsify1, sparsify2, violation_update)
from .engine import LoopConfig, RunTrace, run, tailing_off
from .harness import (GapRecord, brute_force_opt, compare, gap_closed,
                      gen_boxqp, tune)
from .io import load, parse, save, serialize
from .linalg import EigenPair, lift_vector, principal_minor, sym_eigen
from .lp import DenseSimplexBackend, ScipyLinprogBackend, make_backend
from .model import (ExtendedModel, MomentMatrix, QcqpProblem, lift,
                    mccormick_rows, moment_matrix, product_bounds)

__version__ = "0.1.0"

__all__ = [
    "Cut", "CutPool", "SparsifyParams", "cut_from_vector", "minor_cuts",
    "purge", "separate_psd", "sparsify1", "sparsify2", "violation_update",
    "LoopConfig", "RunTrace", "run", "tailing_off",
    "GapRecord", "brute_force_opt", "compare", "gap_closed", "gen_boxqp",
    "tune",
    "load", "parse", "save", "serialize",
    "EigenPair", "lift_vector", "principal_minor", "sym_eigen",
    "DenseSimplexBackend", "ScipyLinprogBackend", "make_backend",
    "ExtendedModel", "MomentMatrix", "QcqpProblem", "lift", "mccormick_rows",
    "moment_matrix", "product_bounds",
    "__version__",
]
