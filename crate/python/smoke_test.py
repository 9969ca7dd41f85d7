#!/usr/bin/env python3
"""End-to-end smoke test of the Python bindings.

Builds nothing itself: expects `cargo build -p openrect-py` (or --release)
to have produced the cdylib, which it copies next to a temp dir as an
importable module.
"""
import math
import shutil
import sys
import tempfile
from pathlib import Path

ROOT = Path(__file__).resolve().parent.parent


def import_bindings():
    candidates = [
        ROOT / "target" / profile / f"{prefix}openrect_py{suffix}"
        for profile in ("release", "debug")
        for prefix, suffix in (("lib", ".so"), ("lib", ".dylib"), ("", ".pyd"))
    ]
    built = next((p for p in candidates if p.exists()), None)
    if built is None:
        sys.exit(
            "bindings not built; run `cargo build -p openrect-py` first "
            f"(looked under {ROOT / 'target'})"
        )
    stage = Path(tempfile.mkdtemp(prefix="openrect_py_"))
    shutil.copy2(built, stage / "openrect_py.so")
    sys.path.insert(0, str(stage))
    import openrect_py

    return openrect_py


def ring_components(n_known, radius, variance, uu):
    total = n_known + len(uu)
    weight = 1.0 / total
    comps = []
    for i in range(n_known):
        angle = 2.0 * math.pi * i / n_known
        comps.append(
            ([radius * math.cos(angle), radius * math.sin(angle)], variance, weight, i)
        )
    for (x, y, var) in uu:
        comps.append(([x, y], var, weight, n_known))
    return comps


def main():
    lib = import_bindings()
    print(f"openrect_py {lib.__version__}")

    data = lib.generate_gaussian(
        ring_components(10, 8.0, 0.5, [(25.0, 25.0, 1.0)]), 200, seed=2024
    )
    assert data.n_classes == 11 and data.dim == 2
    scenario = lib.make_scenario(data, [10], split_fraction=0.5, seed=42)
    print(f"scenario: {scenario.train!r} / {scenario.test!r} openness {scenario.openness:.3f}")
    assert scenario.dummy_label == 10

    outcome = lib.rectify(scenario.train, scenario.test, '{"kind": "gda"}', c=0.1, k=3, seed=42)
    print(f"sampled {outcome.n_sample} rows, {outcome.n_uu} kept the unknown label")
    model = outcome.model
    assert model.n_classes == 11

    # evaluate on the test rows that were not drawn into the sample
    sampled = set(outcome.sample_test_indices)
    features = scenario.test.features()
    labels = scenario.test.labels()
    held = [i for i in range(len(labels)) if i not in sampled]
    preds = model.predict([features[i] for i in held])
    truth = [labels[i] for i in held]

    macro_f = lib.macro_f_measure(truth, preds, scenario.dummy_label + 1)
    detection = lib.detection_accuracy(truth, preds, scenario.dummy_label)
    classification = lib.classification_accuracy(truth, preds, scenario.dummy_label)
    uu_scores = [model.scores(features[i])[scenario.dummy_label] for i in held]
    auroc = lib.auroc(uu_scores, [t == scenario.dummy_label for t in truth])
    print(
        f"macro F {macro_f:.4f}, detection {detection:.4f}, "
        f"classification {classification:.4f}, AUROC {auroc:.4f}"
    )
    assert detection >= 0.95 and classification >= 0.95

    # the pre-rectified baseline cannot emit the unknown label
    pre = lib.fit(scenario.train, '{"kind": "gda"}')
    pre_f = lib.macro_f_measure(truth, pre.predict([features[i] for i in held]),
                                scenario.dummy_label + 1)
    assert macro_f > pre_f
    print(f"pre-rectified macro F {pre_f:.4f} < rectified {macro_f:.4f}")

    # seeded-k-means engine shares the outcome surface
    csi = lib.csi_rectify(scenario.train, scenario.test, '{"kind": "gda"}', c=0.1, seed=42)
    assert csi.model.n_classes == 11

    # model round trip
    with tempfile.TemporaryDirectory() as tmp:
        path = str(Path(tmp) / "model.json")
        model.save(path)
        again = lib.Model.load(path)
        assert again.predict([features[held[0]]]) == model.predict([features[held[0]]])

    # metrics sanity
    assert abs(lib.openness(7, 10, 7) - 0.0925) < 1e-3

    # PCA keeps rank-1 structure
    line = lib.Dataset([[t, 2.0 * t] for t in range(20)], [0] * 20)
    projected, explained = lib.pca_project(line, 1)
    assert explained[0] > 0.999

    print("smoke test: PASS")


if __name__ == "__main__":
    main()
