"""Secure list decoding over discrete memoryless channels."""
from .channels import (Channel, bsc, load_channel, make_channel, noiseless, output_dist,
                       product_prob, z_channel)
from .codes import ListCode, ThresholdDecoder, ExplicitDecoder, decode, load_code, save_code
from .info import InfoContext, capacity, context, entropy, mutual_information
from .region import compute_region, kappa, region_contains
from .protocols import bc_security, commit, make_hash, run_auction
from .random_coding import build_secure_code, schedule
from .security import SecurityReport, evaluate, evaluate_mc

__version__ = "0.1.0"
