"""scikit-learn style front end for the variational boson-sampler TSP solver."""

import math

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted

from .encodings import make_formulation, normalize_formulation
from .instances import InstanceFile
from .optimizer import TrainingConfig, train
from .sampler import four_configurations, parity_map, sample_batch
from .tsp import DistanceMatrix, tour_distance


class BosonTSPSolver(BaseEstimator):
    """Train the beam-splitter angles of a simulated time-bin boson sampler.

    ``fit`` takes an N x N distance matrix (array-like, :class:`DistanceMatrix`
    or :class:`InstanceFile`) and records the lowest-energy bit string seen
    during training.

    Parameters
    ----------
    formulation : {'penalty_free', 'binary_penalty', 'qubo'}
    optimizer : {'spsa', 'shift_rule'}
    iterations : int
        Optimizer steps after the initial estimate.
    learning_rate : float
    batch : int
        Samples per configuration per objective estimate.
    spsa_perturbation, shift : float
        Probe sizes in radians.
    shift_mode : {'exact', 'finite_difference'}
    rho : float
        Penalty multiplier of the binary-label formulation.
    qubo_A : float or None
        QUBO constraint weight; ``None`` picks a bound that dominates any tour.
    n_photons : int or None
        Photons of the larger configurations; ``None`` means half the modes, rounded up.
    objective_scale : 'initial', 'none' or float
    early_stop_patience : int or None
    independent_configs : bool
        Train one angle vector per configuration instead of a shared one.
    best_known : float or None
        Reference length for the quality metric; found by exhaustive search for N <= 12.
    random_state : int

    Attributes
    ----------
    formulation_ : fitted formulation transformer
    thetas_ : ndarray of trained angles
    best_ : BestRecord
    best_tour_ : Tour or None
    best_energy_ : float
    quality_ : QualityReport or None
    trace_ : TrainingTrace
    result_ : TrainingResult
    """

    def __init__(
        self,
        formulation="penalty_free",
        optimizer="spsa",
        iterations=100,
        learning_rate=0.01,
        batch=50,
        spsa_perturbation=0.1,
        shift=math.pi / 2,
        shift_mode="exact",
        rho=5.0,
        qubo_A=None,
        n_photons=None,
        objective_scale="initial",
        early_stop_patience=None,
        independent_configs=False,
        best_known=None,
        random_state=0,
    ):
        self.formulation = formulation
        self.optimizer = optimizer
        self.iterations = iterations
        self.learning_rate = learning_rate
        self.batch = batch
        self.spsa_perturbation = spsa_perturbation
        self.shift = shift
        self.shift_mode = shift_mode
        self.rho = rho
        self.qubo_A = qubo_A
        self.n_photons = n_photons
        self.objective_scale = objective_scale
        self.early_stop_patience = early_stop_patience
        self.independent_configs = independent_configs
        self.best_known = best_known
        self.random_state = random_state

    def training_config(self):
        return TrainingConfig(
            iterations=self.iterations,
            learning_rate=self.learning_rate,
            optimizer_kind=self.optimizer,
            samples_per_estimate=self.batch,
            spsa_perturbation=self.spsa_perturbation,
            shift_amount=self.shift,
            shift_mode=self.shift_mode,
            seed=self.random_state,
            early_stop_patience=self.early_stop_patience,
            n_photons=self.n_photons,
            independent_configs=self.independent_configs,
            objective_scale=self.objective_scale,
        )

    @staticmethod
    def _instance(X):
        if isinstance(X, InstanceFile):
            return X.payload, X.best_known
        if isinstance(X, DistanceMatrix):
            return X, None
        return DistanceMatrix(X), None

    def fit(self, X, y=None):
        dm, file_best = self._instance(X)
        best_known = self.best_known if self.best_known is not None else file_best
        form = make_formulation(normalize_formulation(self.formulation), rho=self.rho, qubo_A=self.qubo_A)
        form.fit(dm)
        tc = self.training_config()
        result = train(dm, form, tc, best_known=best_known)
        self.distance_matrix_ = dm
        self.formulation_ = form
        self.n_bits_ = form.n_bits_
        self.result_ = result
        self.thetas_ = result.thetas
        self.trace_ = result.trace
        self.best_ = result.best
        self.best_tour_ = result.best.tour
        self.best_energy_ = result.best.energy
        self.quality_ = result.quality
        return self

    def predict(self, X=None):
        """Order of the best tour found, as an int array (``None`` if none was valid)."""
        check_is_fitted(self, "best_")
        if X is not None:
            dm, _ = self._instance(X)
            if dm != self.distance_matrix_:
                raise ValueError("predict() only answers for the instance the solver was fitted on")
        if self.best_tour_ is None:
            return None
        return np.array(self.best_tour_.order)

    def fit_predict(self, X, y=None):
        return self.fit(X).predict()

    def score(self, X, y=None):
        """Negative length of the best tour under the distances ``X`` (higher is better)."""
        check_is_fitted(self, "best_")
        dm, _ = self._instance(X)
        if self.best_tour_ is None:
            return -np.inf
        return -tour_distance(self.best_tour_, dm)

    def sample(self, n_samples, config_id=0, random_state=None):
        """Bit strings drawn from the trained sampler in one configuration."""
        check_is_fitted(self, "thetas_")
        thetas = self.thetas_[config_id] if self.thetas_.ndim == 2 else self.thetas_
        config = four_configurations(self.n_bits_, thetas, self.n_photons)[config_id]
        seed = self.random_state if random_state is None else random_state
        occ, _ = sample_batch(config, n_samples, np.random.default_rng(seed))
        return parity_map(occ, config.parity_polarity)
