from __future__ import annotations

import numpy as np


def fit_multinomial_nb(X, y, smoothing: float = 1.0) -> tuple[np.ndarray, np.ndarray]:
    """Class log-priors from label frequencies and additively smoothed
    per-class feature log-likelihoods.  Row c of the second array is
    ``log((count_cj + a) / (total_c + a * |V|))``."""
    y = np.asarray(y)
    d = X.shape[1]
    log_prior = np.empty(2)
    log_lik = np.empty((2, d))
    for c in (0, 1):
        mask = y == c
        counts = np.asarray(X[mask].sum(axis=0), dtype=np.float64).ravel()
        if counts.min(initial=0.0) < 0:
            raise ValueError("multinomial naive Bayes needs nonnegative counts")
        log_prior[c] = np.log(mask.sum() / y.size)
        log_lik[c] = np.log(counts + smoothing) - np.log(counts.sum() + smoothing * d)
    return log_prior, log_lik


def nb_scores(X, log_prior, log_lik) -> np.ndarray:
    """Log-posterior difference, class 1 minus class 0."""
    delta = log_lik[1] - log_lik[0]
    return np.asarray(X @ delta, dtype=np.float64).ravel() + (log_prior[1] - log_prior[0])
