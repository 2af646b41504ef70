import pytest

from config.schemas import (
    ExperimentConfig,
    ManifoldConfig,
    ProjectionStudyConfig,
    TrainConfig,
    build_experiment_config,
    load_experiment_config,
    parse_vector,
    read_experiment_file,
)
from utils.errors import ConfigError

INI = """\
[general]
seed = 11

[manifold]
kind = sphere
radius = 2.0

[solver]
K = 16
eta_star = auto
omega_star = 1e-7

[training]
sigma = 0.02
layer_dims = 3,64,64,3
learning_rate = 5e-4
"""


class TestExperimentFile:
    def test_sections_are_validated(self, tmp_path):
        path = tmp_path / "exp.ini"
        path.write_text(INI)
        cfg = load_experiment_config(path)
        assert cfg.seed == 11
        assert cfg.manifold.kind == "sphere" and cfg.manifold.radius == 2.0
        assert cfg.solver.K == 16 and cfg.solver.eta_star == "auto" and cfg.solver.omega_star == 1e-7
        assert cfg.training.layer_dims == [3, 64, 64, 3]
        assert cfg.training.optimizer.learning_rate == 5e-4

    def test_raw_file_is_not_validated(self, tmp_path):
        path = tmp_path / "exp.ini"
        path.write_text("[solver]\nK = 4\n")
        assert read_experiment_file(path) == {"solver": {"K": "4"}}

    def test_unknown_section_is_ignored_with_warning(self, tmp_path, caplog):
        path = tmp_path / "exp.ini"
        path.write_text("[study]\nsteps = 10\n\n[projection_study]\nsteps = 20\n")
        with caplog.at_level("WARNING", logger="config.schemas"):
            data = read_experiment_file(path)
        assert data == {"projection_study": {"steps": "20"}}
        assert "[study]" in caplog.text

    def test_overrides(self, tmp_path):
        path = tmp_path / "exp.ini"
        path.write_text(INI)
        assert load_experiment_config(path, {"seed": 5}).seed == 5

    def test_missing_file(self, tmp_path):
        with pytest.raises(ConfigError, match="cannot read"):
            read_experiment_file(tmp_path / "missing.ini")

    def test_error_names_field(self):
        with pytest.raises(ConfigError, match="solver.alpha"):
            build_experiment_config({"manifold": {"kind": "torus"}, "solver": {"alpha": 0.5}})


class TestModels:
    def test_exactly_one_source(self, tmp_path):
        with pytest.raises(ValueError):
            ExperimentConfig()
        with pytest.raises(ValueError):
            ExperimentConfig(manifold=ManifoldConfig(), cloud_path=tmp_path / "c.csv")

    def test_check_files(self, tmp_path):
        cfg = ExperimentConfig(cloud_path=tmp_path / "missing.csv")
        with pytest.raises(ConfigError, match="cloud_path"):
            cfg.check_files()

    def test_torus_radii(self):
        with pytest.raises(ValueError):
            ManifoldConfig(kind="torus", major_radius=0.2, minor_radius=0.5)

    def test_layer_dims_validation(self):
        with pytest.raises(ValueError):
            TrainConfig(layer_dims=[3])

    def test_study_lists_from_strings(self):
        cfg = ProjectionStudyConfig(cloud_sizes="1000,2000", sigmas="0.01, 0.02", axes="noise")
        assert cfg.cloud_sizes == [1000, 2000]
        assert cfg.sigmas == [0.01, 0.02]
        assert cfg.axes == ["noise"]


class TestParseVector:
    def test_parses(self):
        assert parse_vector("1,0,-0.5", "from") == (1.0, 0.0, -0.5)

    def test_names_flag(self):
        with pytest.raises(ConfigError, match="'to'"):
            parse_vector("1,x", "to")
        with pytest.raises(ConfigError, match="empty"):
            parse_vector("", "to")
