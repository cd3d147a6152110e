"""Simulation and verification toolkit for quantum time-space tradeoff constructions.

Modules:
    algebra     exact linear algebra over Z_p and Boolean matrices
    qsim        sparse query-circuit simulator with standard and recording oracles
    rigidity    rigidity certification, column partitions, bucketing
    reductions  embeddings between matrix problems and Boolean hard matrices
    coloring    grid-set colorings, OR embeddings, Grover-based algorithms
    bounds      closed-form probability bounds and tradeoff curves
    cli         command-line experiment runner
"""

__version__ = "0.1.0"
