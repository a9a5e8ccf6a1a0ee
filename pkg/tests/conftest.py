import numpy as np
import pytest

from pointchat.config import EngineConfig
from pointchat.engine import Engine
from pointchat.raster import encode_png


@pytest.fixture
def engine(tmp_path):
    return Engine(EngineConfig(artifact_root=str(tmp_path / "store")))


@pytest.fixture
def scene_array():
    image = np.zeros((256, 256, 3), np.uint8)
    image[:] = (0, 0, 255)
    image[100:160, 100:160] = (255, 0, 0)
    return image


@pytest.fixture
def scene_session(engine, scene_array):
    """Session with the scene uploaded and the red square click-selected."""
    session_id = engine.create_session()
    upload = engine.upload_artifact(session_id, "scene.png", encode_png(scene_array))
    pointer = engine.pointer_turn(session_id, {
        "target": "scene.png",
        "samples": [{"x": 130.5 / 256, "y": 130.5 / 256, "t_ms": 0.0}],
    })
    return {
        "engine": engine,
        "session_id": session_id,
        "image_id": upload["artifact_id"],
        "mask_id": pointer["active_mask"],
    }


def click_samples(px: float, py: float, size: int = 256):
    return [{"x": (px + 0.5) / size, "y": (py + 0.5) / size, "t_ms": 0.0}]
