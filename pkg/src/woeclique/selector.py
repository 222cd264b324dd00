"""Feature selection by Information Value and correlation-clique reduction."""

import numpy as np
import pandas as pd
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from .binning import OptimalBinningEncoder, fit_binning, BinningConstraints
from .encoding import DEFAULT_SMOOTHING, WoEEncoder, variance_filter
from .graph_select import (
    CorrelationGraph,
    build_graph,
    correlation_matrix,
    maximal_cliques,
    select_representatives,
)
from .validation import as_frame, check_binary_target, check_columns, check_same_length


class CliqueIVSelector(TransformerMixin, BaseEstimator):
    """Select one high-IV representative per clique of correlated features.

    ``fit`` runs the whole reduction on training data:

    1. WoE-encode every column and drop those with variance below
       ``variance_threshold``.
    2. Score each survivor by IV: optimal-binning IV for categorical columns,
       quantile-prebin IV for numeric ones.
    3. Link features whose encoded correlation exceeds
       ``correlation_threshold`` and enumerate maximal cliques.
    4. Keep each clique's IV winner, dropping winners dominated in another
       clique and winners below ``iv_floor``.
    5. Optimally bin the winners.

    ``transform`` returns the binned WoE encoding of the selected features.
    """

    def __init__(self, categorical_features=None, smoothing=DEFAULT_SMOOTHING, numeric_prebins=10,
                 variance_threshold=0.03, correlation_threshold=0.5, signed_correlation=False,
                 iv_floor=0.1, max_bins=6, min_bin_fraction=0.05, min_class_count=1,
                 monotonic=False, max_prebins=20):
        self.categorical_features = categorical_features
        self.smoothing = smoothing
        self.numeric_prebins = numeric_prebins
        self.variance_threshold = variance_threshold
        self.correlation_threshold = correlation_threshold
        self.signed_correlation = signed_correlation
        self.iv_floor = iv_floor
        self.max_bins = max_bins
        self.min_bin_fraction = min_bin_fraction
        self.min_class_count = min_class_count
        self.monotonic = monotonic
        self.max_prebins = max_prebins

    def fit(self, X, y):
        frame = as_frame(X)
        y = check_binary_target(y)
        check_same_length(frame, y)
        self.feature_names_in_ = np.array(frame.columns, dtype=object)
        self.n_features_in_ = frame.shape[1]

        self.woe_encoder_ = WoEEncoder(self.categorical_features, self.smoothing, self.numeric_prebins).fit(frame, y)
        categorical = set(self.woe_encoder_.categorical_features_)
        encoded = self.woe_encoder_.transform(frame)
        retained, self.variance_report_ = variance_filter(encoded, self.variance_threshold)

        constraints = BinningConstraints(self.max_bins, self.min_bin_fraction, self.min_class_count, self.monotonic)
        self.iv_scores_ = {}
        for name in retained:
            if name in categorical:
                spec = fit_binning(frame[name], y, feature=name, kind="categorical", constraints=constraints,
                                   smoothing=self.smoothing, max_prebins=self.max_prebins)
                self.iv_scores_[name] = spec.iv
            else:
                self.iv_scores_[name] = self.woe_encoder_.woe_maps_[name].iv

        if len(retained) >= 2:
            self.correlation_ = correlation_matrix(encoded[retained])
            self.graph_ = build_graph(self.correlation_, threshold=self.correlation_threshold,
                                      signed=self.signed_correlation)
        else:
            self.correlation_ = pd.DataFrame(np.eye(len(retained)), index=retained, columns=retained)
            self.graph_ = CorrelationGraph(tuple(retained), {}, self.correlation_threshold, self.signed_correlation)
        self.cliques_ = maximal_cliques(self.graph_)
        self.report_ = select_representatives(self.cliques_, self.iv_scores_, self.iv_floor)

        order = {n: i for i, n in enumerate(frame.columns)}
        self.selected_features_ = sorted(self.report_.winners, key=order.get)
        self.binning_ = OptimalBinningEncoder(
            categorical_features=[f for f in self.selected_features_ if f in categorical],
            max_bins=self.max_bins, min_bin_fraction=self.min_bin_fraction,
            min_class_count=self.min_class_count, monotonic=self.monotonic,
            max_prebins=self.max_prebins, smoothing=self.smoothing,
        )
        if self.selected_features_:
            self.binning_.fit(frame[self.selected_features_], y)
        else:
            self.binning_.specs_ = {}
            self.binning_.feature_names_in_ = np.array([], dtype=object)
            self.binning_.n_features_in_ = 0
        return self

    def transform(self, X):
        check_is_fitted(self, "selected_features_")
        frame = as_frame(X)
        if not self.selected_features_:
            return pd.DataFrame(index=frame.index)
        return self.binning_.transform(check_columns(frame, self.selected_features_))

    def get_support(self):
        check_is_fitted(self, "selected_features_")
        chosen = set(self.selected_features_)
        return np.array([n in chosen for n in self.feature_names_in_])

    def get_feature_names_out(self, input_features=None):
        check_is_fitted(self, "selected_features_")
        return np.array(self.selected_features_, dtype=object)
