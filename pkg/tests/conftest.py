import copy

import pytest
import toml

SCENARIO = {
    'scenario': {'seed': 42, 'paths': 2000, 'steps_per_year': 50, 'threads': 1, 'log_level': 'WARNING'},
    'processes': {
        'output': {'kind': 'linear', 'x0': 0.0, 'rate': 10.0},
        'price': {'kind': 'gbm', 'x0': 1.0, 'mu': 0.0, 'sigma': 0.2},
        'unit': {'kind': 'constant', 'x0': 1.0},
        'salary': {'kind': 'constant', 'x0': 100.0},
    },
    'loans': [
        {
            'id': 'plant',
            'principal': 10.0,
            'horizon': 1.0,
            'n_repayments': 2,
            'interest_period': 0.5,
            'productivity': 'output',
            'price_ratio': 'price',
        },
        {
            'id': 'shop',
            'kind': 'service',
            'principal': 10.0,
            'horizon': 1.0,
            'n_repayments': 1,
            'productivity': 'output',
            'price_ratio': 'unit',
            'default': {
                'failure': 'production_stopped',
                'time': 0.5,
                'decision': 'dismantle',
                'salvage_value': 3.0,
                'dismantle_cost': 1.0,
            },
        },
        {
            'id': 'wage',
            'kind': 'private_income',
            'principal': 100.0,
            'horizon': 5.0,
            'n_repayments': 5,
            'income': 'salary',
            'fraction': 0.2,
            'default': {'failure': 'job_loss', 'time': 2.0},
        },
    ],
    'bonds': [
        {
            'id': 'flat',
            't': 0.0,
            'maturities': [1.0, 2.0, 3.0, 4.0, 5.0],
            'tax_level': 100.0,
            'growth_kind': 'constant',
            'growth_rate': 0.02,
            'grid_step': 0.01,
        },
    ],
    'gamma': {
        'law': 'uniform',
        'low': 0.04,
        'high': 0.06,
        'trend': 0.0,
        'maturity': 10.0,
        'times': [0.0, 0.5, 1.0],
        'samples_per_point': 1000,
    },
    'hjm': {
        'ho_lee': {
            'family': 'ho_lee',
            'sigma0': 0.01,
            'horizon': 1.0,
            'steps': 20,
            'initial_rate': 0.02,
            'paths': 500,
            'observe': [0.0, 0.5, 1.0],
            'bond_maturity': 1.0,
        },
        'ho_lee_shifted': {
            'family': 'ho_lee',
            'sigma0': 0.01,
            'alpha_shift': 0.0001,
            'horizon': 1.0,
            'steps': 20,
        },
        'reverting': {
            'family': 'zero',
            'horizon': 1.0,
            'steps': 10,
            'growth_family': 'mean_reversion',
            'growth_speed': 1.0,
            'growth_alpha0': -0.01,
        },
    },
    'banksim': {
        'max_ratio': 1.0,
        'random_events': 200,
        'banks': [
            {'id': 'a', 'deposits': 100.0, 'wealth': 50.0},
            {'id': 'b', 'deposits': 100.0, 'wealth': 50.0},
        ],
        'events': [
            {'kind': 'loan', 'bank': 'a', 'amount': 30.0, 'loan_id': 'l1', 'time': 1.0},
            {'kind': 'interbank_loan', 'bank': 'b', 'to': 'a', 'amount': 10.0, 'time': 2.0},
            {'kind': 'settle_loan', 'bank': 'a', 'loan_id': 'l1', 'total_repaid': 25.0, 'time': 3.0},
        ],
    },
    'output': {'dir': 'out'},
}


@pytest.fixture
def scenario_data():
    return copy.deepcopy(SCENARIO)


@pytest.fixture
def write_scenario(tmp_path):
    def write(data, name='scenario.toml'):
        p = tmp_path / name
        p.write_text(toml.dumps(data))
        return p

    return write
