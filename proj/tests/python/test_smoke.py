"""Smoke tests for the python bindings.

Runs standalone (python test_smoke.py) or under pytest. Needs the built
module on PYTHONPATH; ctest wires that up automatically.
"""

import json
import math
import os
import tempfile

import numpy as np

import mmfusion


def test_version():
    assert mmfusion.__version__ == "0.1.0"


def test_grayscale_oracle():
    rgb = np.zeros((1, 2, 3))
    rgb[0, 0] = [255.0, 0.0, 0.0]
    rgb[0, 1] = [0.0, 255.0, 0.0]
    g = mmfusion.grayscale(rgb)
    assert g.shape == (1, 2)
    assert abs(g[0, 0] - 76.245) < 1e-9
    assert abs(g[0, 1] - 149.685) < 1e-9


def test_bilinear_oracle():
    x = np.arange(16, dtype=float).reshape(4, 4)
    y = mmfusion.bilinear_resize(x, 2, 2)
    assert np.allclose(y, [[2.5, 4.5], [10.5, 12.5]])


def test_softmax():
    p = mmfusion.softmax(np.zeros(10))
    assert p.shape == (10,)
    assert np.allclose(p, 0.1)
    assert abs(p.sum() - 1.0) < 1e-12


def test_decision_fusion():
    fused, predicted = mmfusion.decision_fusion(
        [np.array([0.2, 0.5, 0.3]), np.array([0.6, 0.1, 0.3])]
    )
    assert np.allclose(fused, [0.8, 0.6, 0.6])
    assert predicted == 0


def test_metrics():
    cm = mmfusion.confusion_matrix([0, 0, 1, 2], [0, 1, 1, 1], 3)
    assert cm.shape == (3, 3)
    assert cm[0, 1] == 1
    acc = mmfusion.accuracy(cm)
    precision, recall, f1 = mmfusion.weighted_prf(cm)
    assert acc == 0.5
    assert recall == acc  # exact identity, no tolerance
    assert 0.0 <= precision <= 1.0
    assert 0.0 <= f1 <= 1.0

    report = mmfusion.evaluate_labels([0, 1, 1, 0], [0, 1, 0, 0], 2)
    assert report["accuracy"] == 0.75
    assert report["confusion"].shape == (2, 2)


def test_generate_dataset():
    d = mmfusion.generate_dataset(4, 3, seed=11, complementary=True,
                                  shape_classes=2, depth_classes=2)
    assert d["cam_left"].shape == (12, 32, 32)
    assert d["depth"].shape == (12, 1024)
    assert list(d["labels"]) == sorted(d["labels"])
    assert d["labels"].min() == 0 and d["labels"].max() == 3

    again = mmfusion.generate_dataset(4, 3, seed=11, complementary=True,
                                      shape_classes=2, depth_classes=2)
    assert np.array_equal(d["cam_left"], again["cam_left"])
    assert np.array_equal(d["depth"], again["depth"])

    # Every sample is an independent rendering: equal shape factor but a
    # different depth id still yields different camera pixels.
    # label = shape * depth_classes + depth; sample index = label * views + view.
    views = 3
    s0d0 = d["cam_left"][0 * views + 1]
    s0d1 = d["cam_left"][1 * views + 1]
    assert not np.array_equal(s0d0, s0d1)
    assert not np.array_equal(d["depth"][0 * views + 2], d["depth"][2 * views + 2])


def test_model_wrappers():
    cnn = mmfusion.CnnStream(n_classes=5, seed=3)
    img = np.linspace(0.0, 1.0, 1024).reshape(32, 32)
    p = cnn.predict(img)
    assert p.shape == (1, 5) or p.shape == (5,)
    assert abs(p.sum() - 1.0) < 1e-9
    p2 = mmfusion.CnnStream(n_classes=5, seed=3).predict(img)
    assert np.array_equal(p, p2)

    mlp = mmfusion.DepthMlp(n_classes=4, seed=9)
    q = mlp.predict(np.linspace(0.0, 1.0, 1024))
    assert abs(q.sum() - 1.0) < 1e-9


def test_config_and_experiment_run():
    cfg = json.loads(mmfusion.default_config_json())
    assert cfg["train"]["max_epochs"] == 600
    assert cfg["model"]["conv_filters"] == [32, 64, 64]

    with tempfile.TemporaryDirectory() as tmp:
        cfg["out"] = os.path.join(tmp, "run")
        cfg["seed"] = 5
        cfg["experiments"] = ["unimodal-depth"]
        cfg["data"]["synthetic"].update(
            n_classes=4, views_per_class=6, complementary=True,
            shape_classes=2, depth_classes=2, height=32, width=32)
        cfg["model"].update(conv_filters=[3, 4, 4], cnn_dense=12,
                            mlp_hidden=12, fusion_dense=12)
        cfg["train"].update(batch_size=16, max_epochs=2)
        rows = mmfusion.run_experiment_json(json.dumps(cfg))
        assert len(rows) == 1
        assert rows[0]["model"] == "depth_mlp"
        assert 0.0 <= rows[0]["accuracy"] <= 1.0
        assert os.path.exists(os.path.join(tmp, "run", "metrics.csv"))


def test_errors_translate():
    try:
        mmfusion.run_experiment_json("{\"experiments\": [\"bogus\"]}")
    except ValueError as e:
        assert "bogus" in str(e)
    else:
        raise AssertionError("expected ValueError for a bad config")

    try:
        mmfusion.grayscale(np.zeros((4, 4)))
    except RuntimeError:
        pass
    else:
        raise AssertionError("expected RuntimeError for a bad shape")


if __name__ == "__main__":
    failures = 0
    for name, fn in sorted(globals().items()):
        if name.startswith("test_") and callable(fn):
            try:
                fn()
                print(f"{name}: ok")
            except Exception as exc:  # noqa: BLE001 - report and continue
                failures += 1
                print(f"{name}: FAILED: {exc}")
    raise SystemExit(1 if failures else 0)
