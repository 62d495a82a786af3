from .ensemble import MajorityVoteClassifier, build_ensemble, majority_vote
from .lbfgs import (LBFGSResult, LineSearchError, NonFiniteError, OptimizationError,
                    lbfgs_minimize)
from .linear import (LinearSVC, LogisticRegression, logistic_objective, train_logistic,
                     train_svm)
from .tree import (DecisionTreeClassifier, RandomForestClassifier, Tree, gini, train_forest,
                   train_tree)


def predict(model, X):
    """Labels for each row of ``X`` from any fitted classifier in this package."""
    return model.predict(X)


__all__ = [
    "DecisionTreeClassifier", "LBFGSResult", "LineSearchError", "LinearSVC",
    "LogisticRegression", "MajorityVoteClassifier", "NonFiniteError", "OptimizationError",
    "RandomForestClassifier",
    "Tree", "build_ensemble", "gini", "lbfgs_minimize", "logistic_objective", "majority_vote",
    "predict", "train_forest", "train_logistic", "train_svm", "train_tree",
]
