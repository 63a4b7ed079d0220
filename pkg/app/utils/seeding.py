"""1つの64bitシードから用途別の乱数ストリームを作るモジュール

numpyのSeedSequenceのspawn_keyに用途番号を入れて分岐させる.
同じ(seed, purpose)からは常に同じGeneratorが得られる.
"""

import numpy as np

from utils.enum import SeedPurpose


def rng_for(seed: int, purpose: SeedPurpose) -> np.random.Generator:
    """用途別の乱数生成器を返す

    :param seed: 実験全体のシード
    :param purpose: 乱数の用途
    :return numpyのGenerator
    """
    sequence = np.random.SeedSequence(entropy=seed, spawn_key=(int(purpose),))
    return np.random.default_rng(sequence)
