"""Direction transfer ("orienteering") with parallel and antiparallel spin pairs.

Ideal decoding measurements, their five-step quantum-walk realizations,
Monte Carlo estimates of the transfer fidelity, and maximum-likelihood
measurement tomography.
"""

from .bases import (Povm, SchemeId, analytic_povm, antiparallel_basis, guess_for, local_basis,
                    parallel_basis)
from .protocol import (DirectionSampler, RunReport, analytic_mean_fidelity, fidelity, simulate,
                       theta_sweep)
from .schedules import builtin_schedule, load_schedule, save_schedule
from .states import Direction, Encoding, WavePlate, bloch_to_ket, encode, ket_to_bloch
from .tomography import NoiseModel, ProbeSet, collect_statistics, povm_fidelity, reconstruct_ml
from .walk import CoinSchedule, WalkState, extract_povm, run

__version__ = "0.1.0"
