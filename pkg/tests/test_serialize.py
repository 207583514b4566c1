import numpy as np
import pytest

from trafficzip.errors import ModelError
from trafficzip.neural.arch import ArchDescriptor, init_params
from trafficzip.neural.serialize import MAGIC, PredictorModel, weights_checksum


def small_model(seed=0):
    arch = ArchDescriptor(kind="rnn", alphabet_size=64, hidden_dim=4, window=3, mlp_layers=(4,))
    return PredictorModel(arch=arch, weights=init_params(arch, seed=seed))


class TestModelFile:
    def test_save_load_roundtrip(self, tmp_path):
        model = small_model()
        path = tmp_path / "model.tzpm"
        model.save(path)
        loaded = PredictorModel.load(path)
        assert loaded.arch == model.arch
        assert loaded.checksum == model.checksum
        for name in model.weights:
            assert np.array_equal(loaded.weights[name], model.weights[name])

    def test_weights_canonicalized_to_float32(self):
        model = small_model()
        assert all(w.dtype == np.float32 for w in model.weights.values())

    def test_checksum_tracks_weights(self):
        a = small_model(seed=0)
        b = small_model(seed=1)
        assert a.checksum != b.checksum
        assert a.checksum == weights_checksum(a.weights)
        assert a.model_id.startswith("rnn-")

    def test_same_seed_same_checksum(self):
        assert small_model(seed=7).checksum == small_model(seed=7).checksum

    def test_corrupted_file_rejected(self, tmp_path):
        model = small_model()
        data = bytearray(model.to_bytes())
        data[len(data) // 2] ^= 0xFF
        with pytest.raises(ModelError):
            PredictorModel.from_bytes(bytes(data))

    def test_bad_magic_rejected(self):
        with pytest.raises(ModelError):
            PredictorModel.from_bytes(b"NOPE" + b"\x00" * 64)

    def test_truncated_file_rejected(self):
        data = small_model().to_bytes()
        with pytest.raises(ModelError):
            PredictorModel.from_bytes(data[: len(data) // 2])

    def test_wrong_shape_rejected(self):
        model = small_model()
        weights = dict(model.weights)
        weights["gru.wz"] = np.zeros((2, 2), dtype=np.float32)
        with pytest.raises(ModelError):
            PredictorModel(arch=model.arch, weights=weights)

    def test_magic_is_stable(self):
        assert small_model().to_bytes()[:4] == MAGIC

    def test_stated_checksum_must_match(self):
        model = small_model()
        with pytest.raises(ModelError):
            PredictorModel(arch=model.arch, weights=model.weights, checksum="0" * 64)
