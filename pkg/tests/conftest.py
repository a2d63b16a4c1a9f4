import math

import pytest

from pnr_receiver.model import Alphabet, NoiseModel, PnrResolution, ReceiverConfig


def kennedy_config(alpha_sq=1.0, m=1, **noise):
    alpha = math.sqrt(alpha_sq)
    return ReceiverConfig(Alphabet("BPSK", alpha), alpha, PnrResolution(m), NoiseModel(**noise))


@pytest.fixture
def kennedy():
    return kennedy_config()
