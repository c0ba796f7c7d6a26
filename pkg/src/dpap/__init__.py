"""Exemplar-based clustering with explicit priors over cluster sizes."""
from .ap import ApConfig, ap_run, ap_sweep
from .bp import EngineConfig, MessageState, mu_column_messages, phi_row_messages
from .bp import run as dpap_run
from .icm import IcmConfig, best_exemplar, icm_run, one_pass
from .metrics import delta_loglik, histogram_distance, rand_index, size_histogram
from .model import (Assignment, ExemplarNotMember, NonExemplarLabel, RunResult,
                    SimilarityModel, canonicalize, log_joint, validate)
from .priors import CardinalityPrior, ap_prior, dp_prior, get_prior, table_prior
from .segsim import Edge, SegConfig, SuperpixelGraph, compose
from .synth import GenConfig, build_similarity, dataset_similarity, sample_dataset

__version__ = "0.1.0"
