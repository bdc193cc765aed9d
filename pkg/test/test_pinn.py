"""Test the physics-informed network losses and training."""
from unittest import TestCase

import numpy as np

from epiforge.dataset import EpiDataset
from epiforge.integrator import integrate
from epiforge.models import (
    COMPARTMENTS,
    AgeGrid,
    EpiParams,
    rhs_siar,
)
from epiforge.network import Checkpoint
from epiforge.pinn import (
    Collocation,
    PhysicsTables,
    PinnConfig,
    PinnModel,
    build_model,
    composite_objective,
    data_loss,
    data_terms,
    physics_loss,
    physics_terms,
    predict,
    resolve_mode,
    residuals,
    train,
)
from epiforge.quadrature import NodeSet

TWO_NODES = NodeSet(np.array([0.2, 0.6]), np.array([0.2, 0.6]), np.array([0.4, 0.6]))


def random_outputs(shape, seed=0):
    return np.random.default_rng(seed).uniform(0.0, 0.5, size=shape + (4,))


def two_class_params():
    return EpiParams(
        np.array([[0.3], [0.4]]),
        np.array([[0.05], [0.08]]),
        np.array([[0.1], [0.16]]),
        np.array([[[0.3], [0.5]], [[0.6], [0.7]]]),
        np.array([[[1.0], [0.6]], [[0.9], [0.5]]]),
        np.array([0.0, 10.0, 20.0]),
    )


class TestDataTerms(TestCase):
    def test_value(self):
        outputs = np.zeros((1, 1, 1, 4))
        targets = np.zeros((1, 1, 1, 4))
        targets[..., 1] = 0.1
        targets[..., 2] = 0.2
        value, grad = data_terms(outputs, targets, np.ones(1), np.ones(1))
        self.assertAlmostEqual(value, 0.05)
        np.testing.assert_allclose(grad[0, 0, 0], [0.0, -0.2, -0.4, 0.0])

    def test_node_means_are_compared(self):
        outputs = np.zeros((1, 1, 2, 4))
        outputs[0, 0, :, 0] = [0.0, 1.0]
        targets = np.full((1, 1, 1, 4), 0.0)
        targets[..., 0] = 0.6
        value, _ = data_terms(outputs, targets, TWO_NODES.weights, np.ones(1))
        self.assertAlmostEqual(value, 0.0)


class TestResiduals(TestCase):
    def setUp(self):
        self.params = two_class_params()
        self.times = np.linspace(0.0, 20.0, 21)
        self.tables = PhysicsTables.build(self.params, self.times)

    def test_disease_free_state(self):
        outputs = np.zeros((21, 2, 1, 4))
        outputs[..., 0] = 0.7
        outputs[..., 3] = 0.3
        value, g_outputs, G = physics_terms(
            outputs, np.zeros_like(outputs), self.tables, np.ones(1)
        )
        self.assertEqual(value, 0.0)
        np.testing.assert_array_equal(G, 0.0)

    def test_sum_of_residuals_is_the_sum_of_rates(self):
        outputs = random_outputs((21, 2, 1))
        rates = random_outputs((21, 2, 1), seed=1) - 0.25
        R = residuals(outputs, rates, self.tables)
        np.testing.assert_allclose(R.sum(axis=-1), rates.sum(axis=-1), atol=1e-15)

    def test_model_trajectory_has_no_residual(self):
        start = np.zeros((4, 2, 1))
        start[0] = [[0.45], [0.5]]
        start[1] = 0.01
        start[2] = 0.02
        start[3] = 0.0
        trajectory = integrate(
            lambda y, t: rhs_siar(y, self.params, t), start, 0.0, 20.0, 0.5
        )
        states = trajectory.sample(self.times)
        rates = np.stack([rhs_siar(y, self.params, t) for y, t in zip(states, self.times)])
        outputs = np.moveaxis(states, 1, -1)
        value, _, _ = physics_terms(
            outputs, np.moveaxis(rates, 1, -1), self.tables, np.ones(1)
        )
        noisy, _, _ = physics_terms(
            random_outputs((21, 2, 1)), np.moveaxis(rates, 1, -1), self.tables, np.ones(1)
        )
        self.assertLess(value, 1e-28)
        self.assertGreater(noisy, 1e-6)

    def test_closed_form_incidence_is_rejected(self):
        params = EpiParams(
            np.full((1, 1), 0.3),
            np.full((1, 1), 0.1),
            np.full((1, 1), 0.2),
            np.full((1, 1, 1), 0.5),
            np.ones((1, 1, 1)),
            np.array([0.0, 10.0]),
            mu=np.ones((1, 1)),
            nu=np.ones((1, 1)),
            incidence_mode="closed_form",
        )
        with self.assertRaises(ValueError):
            PhysicsTables.build(params, np.array([1.0, 2.0]))

    def test_non_finite_residual(self):
        outputs = random_outputs((21, 2, 1))
        outputs[3, 0, 0, 1] = np.inf
        with self.assertRaises(FloatingPointError):
            physics_terms(outputs, np.zeros_like(outputs), self.tables, np.ones(1))


class TestCompositeObjective(TestCase):
    def setUp(self):
        self.config = PinnConfig(
            omega_d=0.7, omega_p=1.3, hidden_layers=2, hidden_units=8, epochs=0
        )
        self.collocation = Collocation(
            np.linspace(2.0, 8.0, 10), AgeGrid.single(), TWO_NODES
        )
        self.model = build_model(self.config, self.collocation, "t_z", seed=0)
        self.params = EpiParams.constant(1, 2, 0.3, 0.1, 0.2, 0.4, H=0.8, edges=(0, 20))
        self.tables = PhysicsTables.build(self.params, self.collocation.times)
        self.targets = random_outputs((10, 1, 2), seed=4)
        self.objective = composite_objective(
            self.model,
            self.config,
            self.collocation,
            self.targets,
            TWO_NODES.weights,
            self.tables,
        )

    def test_architecture(self):
        self.assertEqual(self.model.net.layer_sizes, [2, 8, 8, 4])
        self.assertEqual(self.model.time_column, 0)
        self.assertAlmostEqual(self.model.time_scale, 2.0 / 6.0)
        inputs = self.model.inputs(self.collocation)
        self.assertAlmostEqual(inputs.min(), -1.0)
        self.assertAlmostEqual(inputs.max(), 1.0)

    def test_gradient_matches_finite_differences(self):
        net = self.model.net
        _, grad, _ = self.objective(net)
        flat = net.flatten()
        numeric = np.empty_like(flat)
        eps = 1e-6
        for i in range(len(flat)):
            up, down = flat.copy(), flat.copy()
            up[i] += eps
            down[i] -= eps
            numeric[i] = (
                self.objective(net.unflatten(up))[0]
                - self.objective(net.unflatten(down))[0]
            ) / (2 * eps)
        error = np.linalg.norm(grad.flatten() - numeric) / np.linalg.norm(numeric)
        self.assertLess(error, 1e-5)

    def test_loss_decomposition(self):
        value, _, parts = self.objective(self.model.net)
        self.assertAlmostEqual(
            value, 0.7 * parts["data"] + 1.3 * parts["physics"], delta=1e-12
        )
        self.assertAlmostEqual(
            parts["physics"],
            physics_loss(self.model, self.params, self.collocation),
            delta=1e-12,
        )
        dataset = EpiDataset(
            self.collocation.times,
            AgeGrid.single(),
            {name: self.targets[..., i] for i, name in enumerate(COMPARTMENTS)},
            np.ones(1),
            kind="synthetic",
            nodes=TWO_NODES,
        )
        self.assertAlmostEqual(
            parts["data"], data_loss(self.model, dataset), delta=1e-12
        )


class TestTraining(TestCase):
    def dataset(self):
        times = np.arange(15.0, 20.0)
        ramp = (times - 15.0)[:, None, None]
        series = {
            "S": 0.9 - 0.02 * ramp,
            "I": 0.03 + 0.01 * ramp,
            "A": 0.02 + 0.005 * ramp,
            "R": 0.05 + 0.005 * ramp,
        }
        return EpiDataset(times, AgeGrid.single(), series, np.ones(1))

    def test_zero_epochs_returns_the_initialization(self):
        config = PinnConfig(epochs=0, hidden_layers=2, hidden_units=4)
        params = EpiParams.constant(1, 1, 0.3, 0.1, 0.2, 0.4)
        model, history = train(config, self.dataset(), params, seed=3)
        initial = build_model(
            config, Collocation(self.dataset().times, AgeGrid.single()), "t_only", 3
        )
        np.testing.assert_array_equal(model.net.flatten(), initial.net.flatten())
        self.assertEqual(history.epochs, [0])
        self.assertEqual(model.input_mode, "t_only")

    def test_data_only_fit(self):
        config = PinnConfig(
            omega_p=0.0,
            epochs=2000,
            learning_rate=1e-2,
            hidden_layers=2,
            hidden_units=16,
            record_every=500,
        )
        params = EpiParams.constant(1, 1, 0.3, 0.1, 0.2, 0.4)
        _, history = train(config, self.dataset(), params, seed=0)
        self.assertLessEqual(history.final_loss, history.losses[0] / 100.0)
        self.assertEqual(sorted(history.components), ["data", "physics"])

    def test_physics_only_with_zero_rates_flattens_in_time(self):
        # With no transmission and no recovery every derivative is a residual
        config = PinnConfig(
            omega_d=0.0,
            omega_p=1.0,
            epochs=3000,
            learning_rate=1e-2,
            hidden_layers=2,
            hidden_units=16,
            record_every=1000,
        )
        params = EpiParams.constant(1, 1, 0.0, 0.0, 0.0, 0.4)
        dataset = self.dataset()
        collocation = Collocation(dataset.times, AgeGrid.single())
        initial = build_model(config, collocation, "t_only", 0)
        model, _ = train(config, dataset, params, seed=0)

        _, before = initial.evaluate(collocation, with_time_derivative=True)
        _, after = model.evaluate(collocation, with_time_derivative=True)
        self.assertLessEqual(np.max(np.abs(after)), np.max(np.abs(before)) / 10.0)

    def test_mismatched_parameters(self):
        config = PinnConfig(epochs=0)
        params = EpiParams.constant(1, 2, 0.3, 0.1, 0.2, 0.4)
        with self.assertRaises(ValueError):
            train(config, self.dataset(), params)


class TestPrediction(TestCase):
    def test_mean_and_checkpoint(self):
        config = PinnConfig(hidden_layers=1, hidden_units=6)
        collocation = Collocation(np.linspace(15.0, 30.0, 4), AgeGrid.single(), TWO_NODES)
        model = build_model(config, collocation, "t_z", seed=1)
        ensemble = predict(model, [16.0, 20.0, 25.0])
        self.assertEqual(ensemble.values.shape, (3, 1, 2, 4))
        np.testing.assert_allclose(
            ensemble.mean(),
            0.4 * ensemble.values[:, :, 0] + 0.6 * ensemble.values[:, :, 1],
            rtol=1e-14,
        )
        np.testing.assert_array_equal(ensemble.compartment("I"), ensemble.values[..., 1])

        checkpoint = Checkpoint.from_json(model.to_checkpoint({"seed": 1}).to_json())
        loaded = PinnModel.from_checkpoint(checkpoint)
        self.assertEqual(checkpoint.metadata["seed"], 1)
        self.assertEqual(loaded.input_mode, "t_z")
        np.testing.assert_array_equal(
            predict(loaded, [16.0, 20.0, 25.0]).values, ensemble.values
        )


class TestConfiguration(TestCase):
    def test_resolve_mode(self):
        self.assertEqual(resolve_mode("auto", 1, True), "t_z")
        self.assertEqual(resolve_mode("auto", 6, True), "x_t_z")
        self.assertEqual(resolve_mode("auto", 1, False), "t_only")
        self.assertEqual(resolve_mode("auto", 6, False), "x_t")
        self.assertEqual(resolve_mode("x_t", 6, True), "x_t")

    def test_invalid_config(self):
        with self.assertRaises(ValueError):
            PinnConfig(omega_d=0.0, omega_p=0.0)
        with self.assertRaises(ValueError):
            PinnConfig(input_mode="z_only")
        with self.assertRaises(ValueError):
            PinnConfig(epochs=-1)

    def test_mode_must_separate_classes_and_nodes(self):
        config = PinnConfig(hidden_layers=1, hidden_units=4)
        ages = Collocation(np.arange(3.0), AgeGrid.default())
        with self.assertRaises(ValueError):
            build_model(config, ages, "t_only", 0)
        nodes = Collocation(np.arange(3.0), AgeGrid.single(), TWO_NODES)
        with self.assertRaises(ValueError):
            build_model(config, nodes, "t_only", 0)
        with self.assertRaises(ValueError):
            build_model(config, Collocation(np.zeros(1), AgeGrid.single()), "t_only", 0)
