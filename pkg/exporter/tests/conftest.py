import pytest

from embexport import pretrain_tiny, write_sample_dataset


@pytest.fixture(scope="session")
def checkpoint(tmp_path_factory):
    """A small pretrained dual-encoder checkpoint, trained once per session."""
    out = tmp_path_factory.mktemp("model") / "tiny-ckpt"
    return pretrain_tiny(out, steps=300, seed=0)


@pytest.fixture(scope="session")
def sample_16(tmp_path_factory):
    """16 rendered caption/image pairs with their manifests."""
    out = tmp_path_factory.mktemp("sample")
    captions, images = write_sample_dataset(out, count=16)
    return out, captions, images
