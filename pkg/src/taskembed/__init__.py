"""Task-oriented heterogeneous social network embedding.

A collective autoencoder trained jointly on attribute reconstruction,
multi-order diffusive-proximity preservation, and an external task
objective (community detection or information diffusion), plus the
synthetic-data generators and evaluation harness needed to run the whole
protocol at desk scale.
"""

__version__ = "0.1.0"
