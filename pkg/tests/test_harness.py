import json

import numpy as np
import pytest

from ecovedge.config import ConfigError
from ecovedge.harness import ExperimentPlan, cell_seed, plan_from_text, read_cells, resume, run_plan
from ecovedge.learning import ArtifactError

PLAN = """
preset = tiny
schemes = brute, dmarl, marl, equal, random
sweep = sinr_min
sweep_values = 2, 8
dmarl_episodes = 20
marl_episodes = 20
test_episodes = 4
seeds = 0
"""


def test_plan_parsing():
    plan = plan_from_text(PLAN + "kappa = 0.2\n")
    assert plan.sweep_values == [2.0, 8.0]
    assert plan.episodes["dmarl"] == 20 and plan.episodes["sarl"] == 100_000
    assert plan.test_episodes == 4 and plan.overrides == {"kappa": 0.2}
    assert plan.config_for(8.0).sinr_min_db == 8.0
    assert len(plan.cells()) == 10
    assert ExperimentPlan().episodes == {"dmarl": 25_000, "sarl": 100_000, "marl": 100_000}
    assert ExperimentPlan().test_episodes == 250


@pytest.mark.parametrize("text", ["schemes = brute, ppo", "sweep = sinr_min", "warp = 3", "sweep = speed"])
def test_plan_errors(text):
    with pytest.raises(ConfigError):
        plan_from_text(text)


def test_cell_seed_stable():
    assert cell_seed(1, "sinr_min", 2.0, "dmarl", 0) == cell_seed(1, "sinr_min", 2.0, "dmarl", 0)
    assert cell_seed(1, "sinr_min", 2.0, "dmarl", 0) != cell_seed(1, "sinr_min", 2.0, "sarl", 0)


@pytest.fixture(scope="module")
def finished(tmp_path_factory):
    out = tmp_path_factory.mktemp("run")
    run_plan(plan_from_text(PLAN), out)
    return out


def test_bundle_layout(finished):
    manifest = json.loads((finished / "manifest.json").read_text())
    assert set(manifest["catalog_hashes"]) == {"2.0", "8.0"}
    assert len(read_cells(finished)) == 10
    assert (finished / "table.txt").exists()
    for metric in ("success", "average_ee", "jain_pooled"):
        assert (finished / "plots" / f"sinr_min_{metric}.csv").exists()
    assert (finished / "cells" / "sinr_min_2" / "dmarl" / "seed0" / "artifact.npz").exists()


def test_oracle_dominates_plot_data(finished):
    lines = (finished / "plots" / "sinr_min_average_ee.csv").read_text().splitlines()
    head = lines[0].split(",")
    for line in lines[1:]:
        vals = dict(zip(head, line.split(",")))
        assert all(float(vals["brute"]) >= float(v) - 1e-12 for k, v in vals.items() if k not in ("sinr_min",))


def test_reproducible_summary(finished, tmp_path):
    run_plan(plan_from_text(PLAN), tmp_path)
    assert (tmp_path / "summary.csv").read_bytes() == (finished / "summary.csv").read_bytes()


def test_resume(tmp_path):
    import shutil

    run_plan(plan_from_text(PLAN), tmp_path)
    summary = (tmp_path / "summary.csv").read_bytes()
    n = len((tmp_path / "cells.jsonl").read_text().splitlines())
    resume(tmp_path)
    assert len((tmp_path / "cells.jsonl").read_text().splitlines()) == n
    shutil.rmtree(tmp_path / "cells" / "sinr_min_8" / "marl")
    resume(tmp_path)
    lines = (tmp_path / "cells.jsonl").read_text().splitlines()
    assert len(lines) == n + 1
    last = json.loads(lines[-1])
    assert (last["scheme"], last["value"]) == ("marl", 8.0)
    assert (tmp_path / "summary.csv").read_bytes() == summary
    art = tmp_path / "cells" / "sinr_min_2" / "dmarl" / "seed0" / "artifact.npz"
    art.write_bytes(b"garbage")
    with pytest.raises(ArtifactError, match="artifact.npz"):
        resume(tmp_path)


def test_resume_hash_mismatch(tmp_path):
    run_plan(plan_from_text(PLAN.replace("sweep_values = 2, 8", "sweep_values = 2")), tmp_path)
    m = json.loads((tmp_path / "manifest.json").read_text())
    m["catalog_hashes"]["2.0"] = "0" * 16
    (tmp_path / "manifest.json").write_text(json.dumps(m))
    with pytest.raises(ArtifactError, match="hash"):
        resume(tmp_path)


def test_parallel_matches_serial(finished, tmp_path):
    run_plan(plan_from_text(PLAN), tmp_path, workers=2)
    assert (tmp_path / "summary.csv").read_bytes() == (finished / "summary.csv").read_bytes()
