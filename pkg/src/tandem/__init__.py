"""Hierarchical unsupervised classification with mirroring networks and Forgy clustering."""
from .clustering import Clustering, ForgyParams, averaged_forgy, forgy_converge
from .dataset import Dataset, SyntheticSpec, generate_synthetic, load_vectors, split
from .hierarchy import HierarchyConfig, NodeConfig, TrainedNode, classify, tandem_train
from .mnn import Mnn, MnnConfig, MirrorReport, encode, forward, init_mnn, train_mirror
from .numerics import make_rng, stream_rng

__version__ = "0.1.0"
