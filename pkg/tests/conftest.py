import pytest

from affectpipe.corpus import SynthSpec, generate_synthetic_dataset
from affectpipe.learners import ModelKind

#: Fast roster used by orchestration tests (full defaults are exercised
#: in the learner unit tests).
LIGHT_ROSTER = (
    ModelKind("ridge_linear"),
    ModelKind("knn_distance", {"k": 7}),
    ModelKind("extra_trees", {"n_trees": 12, "max_depth": 8}),
)


@pytest.fixture(scope="session")
def small_corpus(tmp_path_factory):
    """2 subjects x 2 videos, across_time, short files."""
    root = tmp_path_factory.mktemp("corpus_small")
    spec = SynthSpec(n_subjects=2, video_ids=(0, 16), duration_s=12.0,
                     train_duration_s=25.0, gap_s=2.0, coupling_gain=1.0)
    index = generate_synthetic_dataset(root, seed=11, spec=spec)
    return root, spec, index
