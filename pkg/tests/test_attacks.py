import numpy as np
import pytest

from foltr_unlearn.attacks import (ATTACK_KINDS, AttackConfig, apply_attack_role,
                                   poison_update, role_for)
from foltr_unlearn.clicks import make_profile
from foltr_unlearn.data import ClientPartition
from foltr_unlearn.errors import ConfigurationError
from foltr_unlearn.federation import ClientState
from foltr_unlearn.ranker import LinearRanker


def test_attack_config_validation():
    AttackConfig("none")
    AttackConfig("data_poison", (0,))
    with pytest.raises(ConfigurationError):
        AttackConfig("ddos", (0,))
    with pytest.raises(ConfigurationError):
        AttackConfig("model_poison", ())


def test_poison_update_sign_flip():
    theta = np.array([1.0, -2.0, 3.0])
    out = poison_update(theta, np.random.default_rng(0), gamma=1.0, mu=np.zeros(3))
    assert np.array_equal(out, -theta)


def test_poison_update_gamma_scaling():
    theta = np.array([2.0, -4.0])
    out = poison_update(theta, np.random.default_rng(0), gamma=1.5, mu=np.zeros(2))
    assert np.array_equal(out, [-3.0, 6.0])


def test_poison_update_draws_gamma_from_range():
    theta = np.array([1.0, 1.0])  # std 0, so mu collapses to the mean
    for seed in range(20):
        out = poison_update(theta, np.random.default_rng(seed), gamma_range=(1.0, 2.0))
        gamma = (1.0 - out[0]) / 1.0
        assert 1.0 <= gamma <= 2.0


def test_poison_update_zero_std_uses_constant_mu():
    theta = np.full(4, 2.5)
    out = poison_update(theta, np.random.default_rng(0), gamma=2.0)
    assert np.array_equal(out, np.full(4, -5.0 + 2.5))


def test_poison_update_mu_statistics():
    rng = np.random.default_rng(1)
    theta = rng.normal(loc=3.0, scale=2.0, size=20000)
    out = poison_update(theta, np.random.default_rng(2), gamma=1.0)
    mu = out + theta
    assert mu.mean() == pytest.approx(theta.mean(), abs=0.05)
    assert mu.std() == pytest.approx(theta.std(), rel=0.05)


def test_poison_update_redraws_every_call():
    theta = np.array([0.3, -1.0, 2.0])
    rng = np.random.default_rng(3)
    assert not np.array_equal(poison_update(theta, rng), poison_update(theta, rng))


def test_role_for_mapping():
    data = AttackConfig("data_poison", (0, 2))
    model = AttackConfig("model_poison", (1,))
    assert role_for(0, data) == "data_poisoner"
    assert role_for(1, data) == "honest"
    assert role_for(1, model) == "model_poisoner"
    assert role_for(0, AttackConfig("none")) == "honest"


def _client(cid):
    return ClientState(cid, ClientPartition(cid, ("q1",)), make_profile("perfect", 3),
                       LinearRanker.zeros(2))


def test_apply_attack_role_data_poisoner_clicks_inversely():
    attacked = apply_attack_role(_client(0), AttackConfig("data_poison", (0,)))
    assert attacked.role == "data_poisoner"
    assert attacked.profile.name == "poison"
    untouched = apply_attack_role(_client(1), AttackConfig("data_poison", (0,)))
    assert untouched.role == "honest" and untouched.profile.name == "perfect"


def test_apply_attack_role_model_poisoner_keeps_honest_clicks():
    attacked = apply_attack_role(_client(0), AttackConfig("model_poison", (0,)))
    assert attacked.role == "model_poisoner"
    assert attacked.profile.name == "perfect"
