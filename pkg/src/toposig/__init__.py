"""Persistent-homology signatures of adversarial batches and kernel two-sample tests built on them."""

from .estimators import DirichletMLE, TopologicalFeatures, TopoMMDTest
from .grad import TopoFeatures, batch_features, exact_features, tc_gradient, tc_loss_and_gradient
from .harness import ExperimentConfig, MixtureCurve, detection_study, mixture_curve, monotonicity_table
from .mmdtest import (
    KernelParams,
    TestOutcome,
    mmd_u_statistic,
    optimize_kernel,
    permutation_test,
    sammd_emb_kernel,
    tc_kernel,
)
from .pcp import PcpParams, dirichlet_mle, mst_length_study, sample_pcp, standard_simplex
from .persistence import ESSENTIAL, PersistenceDiagram, PersistencePair, mst_h0, vr_persistence
from .pointcloud import pairwise_distances, sorted_edges
from .tcloss import TCParams, mk_loss, multiscale_kernel, total_persistence, tp_loss

__version__ = "0.1.0"
