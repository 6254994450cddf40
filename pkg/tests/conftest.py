import os

import numpy as np
import pytest

from wmcap.imaging import GrayImage, load_pgm, save_pgm

ASSET_DIR = os.path.join(os.path.dirname(__file__), "assets")

# 512x512 test photographs exported from scikit-image's bundled data.
ASSET_SPECS = {
    "camera": "5cb24482a53416f99052258be2b1ee38cd31c559a70c8a8b321cba231b332e21",
    "moon": "a20362266d5b01021f6f0f54bd603c3137f921b741770420deeb5ea0141716c0",
    "astronaut_gray": "7781bbc5fc95448fd4cd78562b32fad999e17ee9c59a062ea3661e853068d528",
}


def _build_asset(name: str) -> np.ndarray:
    import skimage.data

    if name == "camera":
        return skimage.data.camera()
    if name == "moon":
        return skimage.data.moon()
    rgb = skimage.data.astronaut().astype(np.float64)
    gray = 0.2125 * rgb[:, :, 0] + 0.7154 * rgb[:, :, 1] + 0.0721 * rgb[:, :, 2]
    return np.round(gray).clip(0, 255).astype(np.uint8)


def asset_path(name: str) -> str:
    os.makedirs(ASSET_DIR, exist_ok=True)
    path = os.path.join(ASSET_DIR, f"{name}.pgm")
    if not os.path.exists(path):
        save_pgm(GrayImage(512, 512, _build_asset(name)), path)
    return path


@pytest.fixture(scope="session")
def asset_images() -> dict[str, GrayImage]:
    return {name: load_pgm(asset_path(name)) for name in ASSET_SPECS}


@pytest.fixture(scope="session")
def camera(asset_images) -> GrayImage:
    return asset_images["camera"]


@pytest.fixture(scope="session")
def moon(asset_images) -> GrayImage:
    return asset_images["moon"]


@pytest.fixture(scope="session")
def camera_path() -> str:
    return asset_path("camera")
