"""Synthetic stand-in for the SUSY archive, same layout and similar shapes.

The real file is 5M rows and cannot be bundled; this generator emits events
with heavy-tailed momenta, roughly normal pseudorapidities, and a nonlinear
signal/background boundary (including sign-product terms a linear scorer
cannot capture), so the pipeline exercises the same difficulty profile at
desk scale. Labels are sampled from a logistic model of the latent
kinematics, which caps the attainable AUC below 1.
"""

from __future__ import annotations

import csv

import numpy as np

from .data import SUSY_FEATURE_NAMES, Dataset


def generate_susy_like(n_rows: int, seed: int = 0) -> Dataset:
    """Seeded sample of n_rows labeled events in the 18-column archive layout."""
    rng = np.random.default_rng(np.random.SeedSequence((seed, 11)))
    lep1_pt = rng.exponential(1.0, n_rows) + 0.1
    lep2_pt = 0.6 * lep1_pt + 0.4 * (rng.exponential(1.0, n_rows) + 0.1)
    met = rng.exponential(1.0, n_rows) + 0.05
    mtr2 = 0.45 * (lep1_pt + lep2_pt) + 0.55 * rng.exponential(1.0, n_rows)
    mdr = 0.5 * met + 0.5 * rng.exponential(1.0, n_rows)
    eta1 = rng.normal(0.0, 1.1, n_rows)
    eta2 = rng.normal(0.0, 1.1, n_rows)

    # Nonlinear discriminant: momentum excess, missing-energy excess, a
    # pT-product resonance band, and an eta sign correlation.
    score = (
        1.1 * (met - 1.0)
        + 0.9 * (lep1_pt * lep2_pt - 1.0)
        + 1.4 * np.tanh(eta1 * eta2)
        + 0.8 * (mdr - 1.0)
        + 0.7 * np.sin(2.2 * mtr2)
    )
    prob_signal = 1.0 / (1.0 + np.exp(-1.6 * score))
    labels = (rng.uniform(size=n_rows) < prob_signal).astype(np.float64)

    phi1 = rng.uniform(-np.pi, np.pi, n_rows)
    phi2 = rng.uniform(-np.pi, np.pi, n_rows)
    met_phi = rng.uniform(-np.pi, np.pi, n_rows)
    noise = lambda s: rng.normal(0.0, s, n_rows)  # noqa: E731

    columns = {
        "lepton 1 pT": lep1_pt,
        "lepton 1 eta": eta1,
        "lepton 1 phi": phi1,
        "lepton 2 pT": lep2_pt,
        "lepton 2 eta": eta2,
        "lepton 2 phi": phi2,
        "missing energy magnitude": met,
        "missing energy phi": met_phi,
        "MET_rel": met * np.abs(np.sin(met_phi - phi1)) + noise(0.05),
        "axial MET": met * np.cos(met_phi - phi1) + noise(0.05),
        "M_R": lep1_pt + lep2_pt + noise(0.2),
        "M_TR_2": mtr2,
        "R": mtr2 / (lep1_pt + lep2_pt + 0.5) + noise(0.05),
        "MT2": 0.5 * (lep1_pt + lep2_pt) + 0.3 * met + noise(0.1),
        "S_R": lep1_pt + lep2_pt + met + noise(0.2),
        "M_Delta_R": mdr,
        "dPhi_r_b": np.abs(phi1 - phi2) + noise(0.1),
        "cos(theta_r1)": np.tanh(0.5 * (eta1 - eta2)) + noise(0.05),
    }
    features = np.column_stack([columns[name] for name in SUSY_FEATURE_NAMES])
    return Dataset(features, labels, SUSY_FEATURE_NAMES)


def write_susy_csv(path: str, dataset: Dataset, header: bool = False) -> None:
    """Write a dataset in archive layout: label column first."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        if header:
            writer.writerow(["label", *dataset.feature_names])
        for label, row in zip(dataset.labels, dataset.features):
            writer.writerow([f"{label:.1f}", *(f"{v:.6f}" for v in row)])
