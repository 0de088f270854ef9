"""Truncated diamond, Laakso and parasol graphs with exact embeddings and distortion bounds."""
from .dyadic import Dyadic, to_dyadic
from .graphs import (
    BundleGraph,
    BundleSpec,
    VertexCode,
    build_coded,
    build_recursive,
    check_isomorphism,
    count_recursive,
    up_down_edge,
)
from .metric import bfs_all_pairs, closed_form_distance
from .distortion import DistortionReport, Norm, SparseVector, evaluate, evaluate_powered
from .linf_embed import GoodTree, lp_parameter, psi, psi_all
from .l1_embed import build_S, l1_closed_form, l1_embedding_distance
from .lp_transfer import frechet_base, transfer
from .bounds import check_lemma51, compute_rho, lower_bound_curve, self_improve_restrict

__version__ = "0.1.0"
