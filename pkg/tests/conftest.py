import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from mosaic import assessment, pipeline, report as report_mod
from mosaic.core import load_bundle
from mosaic.synth import SynthConfig, generate_session


@pytest.fixture(scope="session")
def full_bundle_dir(tmp_path_factory):
    """One fully populated synthetic bundle shared across test modules."""
    out = tmp_path_factory.mktemp("synth") / "full42"
    manifest = generate_session(42, out, SynthConfig())
    return out, manifest


@pytest.fixture(scope="session")
def full_bundle(full_bundle_dir):
    path, manifest = full_bundle_dir
    return load_bundle(path), manifest


@pytest.fixture(scope="session")
def full_report(full_bundle):
    bundle, manifest = full_bundle
    schedule, results = pipeline.run_analyses(bundle)
    aggregates = assessment.aggregate_rubric(bundle.evaluations, bundle.rubric)
    metrics = pipeline.metrics_index(results)
    sections = assessment.compose_feedback(aggregates, metrics, bundle.rubric)
    doc = report_mod.assemble_report(bundle, schedule, results, aggregates, sections)
    return doc, bundle, manifest, results
