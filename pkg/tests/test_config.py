import json
from copy import deepcopy
from pathlib import PurePath

from pnn_hedge.config.config import (
    CONFIG,
    AppConfig,
    experiment_from_mapping,
    experiment_to_mapping,
    model_from_mapping,
    model_to_mapping,
    recalibration_train_config,
)
from pnn_hedge.config.structures import (
    FamilyRule,
    GbmSpec,
    HestonJumpSpec,
    Position,
    TrainMode,
)
from pnn_hedge.exceptions import InvalidConfig, InvalidModelSpec

import pytest

error_type = [list(), dict(), tuple(), int(), set()]

broken_sections = (
    ('path', 'value'),
    (
        (('version',), 2),
        (('grid', 'n_steps'), 0),
        (('grid', 'maturity'), -1.0),
        (('claim', 'strike'), 0.0),
        (('claim', 'position'), 'sideways'),
        (('family', 'rule'), 'unknown'),
        (('family', 'n_tasks'), 0),
        (('arch', 'embed_dim'), 0),
        (('arch', 'hidden'), []),
        (('arch', 'hidden'), [8, 0]),
        (('train', 'lr_final'), 1.0),
        (('train', 'batch_size'), 0),
        (('paths_per_task',), 1),
        (('train_fraction',), 0.0),
        (('report', 'histogram_range'), [0.1, -0.1]),
        (('recalibration', 'train_paths'), []),
    ),
)

model_descriptors = (
    {'kind': 'gbm', 'mu': 0.0, 'sigma': 0.2},
    {'kind': 'heston', 'kappa': 2.0, 'eta': 0.04, 'theta': 0.3, 'rho': -0.5},
    {
        'kind': 'heston_jump',
        'kappa': 2.0,
        'eta': 0.04,
        'theta': 0.3,
        'rho': -0.5,
        'lambda_j': 1.0,
        'mu_j': -0.1,
        'sigma_j': 0.1,
    },
    {
        'kind': 'bns',
        'sigma0_sq': 0.04,
        'lambda_bns': 1.0,
        'a': 2.0,
        'b': 10.0,
        'rho_bns': -1.0,
    },
)

invalid_descriptors = (
    {'kind': 'sabr', 'alpha': 0.2},
    {'kind': 'gbm', 'sigma': 0.2},
    {'kind': 'gbm', 'mu': 0.0, 'sigma': -0.2},
    {'mu': 0.0, 'sigma': 0.2},
)


def default_mapping():
    config = AppConfig()
    config.load_config()
    return deepcopy(config.config)


@pytest.mark.parametrize('path', error_type)
def test_type_path(path):
    with pytest.raises(TypeError):
        CONFIG.config_path = path


def test_type_valid_path():
    config = AppConfig()
    config.config_path = ''
    assert isinstance(config.config_path, PurePath)


def test_missing_config_file(tmp_path):
    config = AppConfig()
    config.config_path = str(tmp_path / 'absent.json')
    with pytest.raises(InvalidConfig):
        config.load_config()


def test_config_file_is_not_json(tmp_path):
    path = tmp_path / 'config.json'
    path.write_text('{not json', encoding='utf-8')
    config = AppConfig()
    config.config_path = path
    with pytest.raises(InvalidConfig):
        config.load_config()


def test_default_experiment():
    experiment = CONFIG.experiment()
    assert experiment.family.rule is FamilyRule.GBM_UNIFORM
    assert experiment.family.size == 32
    assert experiment.grid.n_steps == 30
    assert experiment.claim.position is Position.SHORT
    assert experiment.train.epochs == 1000
    assert experiment.train.lr_initial == 5e-4
    assert experiment.recalibration.model == GbmSpec(0.0, 0.45)
    assert experiment.report.spot_grid.size == 41


def test_experiment_overrides():
    experiment = CONFIG.experiment(output_dir='elsewhere', seed=7)
    assert experiment.output_dir == 'elsewhere'
    assert experiment.seed == 7


def test_experiment_mapping_round_trip():
    experiment = experiment_from_mapping(default_mapping())
    serialized = json.dumps(experiment_to_mapping(experiment))
    again = experiment_from_mapping(json.loads(serialized))
    assert again == experiment


def test_explicit_family_round_trip():
    mapping = default_mapping()
    mapping['family'] = {'rule': 'explicit', 'models': list(model_descriptors)}
    experiment = experiment_from_mapping(mapping)
    assert experiment.family.size == 4
    assert isinstance(experiment.family.models[2], HestonJumpSpec)
    assert experiment_from_mapping(experiment_to_mapping(experiment)) == experiment


@pytest.mark.parametrize(*broken_sections)
def test_broken_config(path, value):
    mapping = default_mapping()
    section = mapping
    for key in path[:-1]:
        section = section[key]
    section[path[-1]] = value
    with pytest.raises(InvalidConfig):
        experiment_from_mapping(mapping)


def test_missing_section():
    mapping = default_mapping()
    del mapping['grid']
    with pytest.raises(InvalidConfig):
        experiment_from_mapping(mapping)


@pytest.mark.parametrize('descriptor', model_descriptors)
def test_model_descriptor_round_trip(descriptor):
    model = model_from_mapping(descriptor)
    assert model_from_mapping(model_to_mapping(model)) == model
    assert model_to_mapping(model)['kind'] == descriptor['kind']


@pytest.mark.parametrize('descriptor', invalid_descriptors)
def test_invalid_model_descriptor(descriptor):
    with pytest.raises(InvalidModelSpec):
        model_from_mapping(descriptor)


def test_recalibration_train_config():
    mapping = default_mapping()
    mapping['recalibration']['epochs'] = 5
    experiment = experiment_from_mapping(mapping)
    config = recalibration_train_config(experiment)
    assert config.mode is TrainMode.EMBEDDING_ONLY
    assert config.new_task_id == 32
    assert config.epochs == 5
    assert config.lr_initial == experiment.train.lr_initial


if __name__ == '__main__':
    pytest.main()
