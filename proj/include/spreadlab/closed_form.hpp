#pragma once

#include <utility>
#include <vector>

#include "spreadlab/weights.hpp"

namespace spreadlab {

/// Asymptotic spread loss of the class-collapsed configuration (all points of
/// class y on simplex vertex v_y): -(1-alpha) K / ((K-1) tau).
double loss_collapsed(const LossWeights& w, int K);

/// Asymptotic spread loss of the K=2 two-atom family at half-angle theta,
/// theta in [0, pi/2]. Reduces to loss_collapsed(w, 2) at theta = 0.
double loss_mu_theta(double theta, const LossWeights& w);

/// Optimal half-angle of the K=2 two-atom family:
/// arcsin sqrt((tau/2) log((3 alpha - 1)/(3 - 3 alpha))).
/// Throws a below-window error for alpha <= 2/3 and an above-window error
/// when the radicand exceeds 1 (the sine would leave [0,1]).
double theta_star(const LossWeights& w);

/// sin(theta_star): the per-class spread of the optimal two-atom family.
double spread_star(const LossWeights& w);

/// Gaussian-kernel equilibrium energy of the uniform measure on S^{d-1}:
/// the mean of exp(-||u-u'||^2 / (2 tau)) over independent uniform pairs,
/// evaluated by Gauss-Legendre quadrature (256 nodes) on the smooth polar
/// form. Lies in (exp(-2/tau), 1). Requires d >= 2.
double wiener_constant(int d, double tau);
double log_wiener_constant(int d, double tau);

/// Same with an explicit node count; exposed so tests can check that
/// doubling the node count moves the value by less than 1e-10.
double wiener_constant_nodes(int d, double tau, int nodes);

/// Upper edge of the alpha window in which the two-atom optimum beats both
/// the collapsed and the uniform configurations:
/// (2 + 1/tau - sqrt((1/tau)(1/tau - 2) - 2 log W)) / 3.
/// A negative radicand raises an undefined-window error (never clamped).
double c_tau_d(double tau, int d);
double c_tau_d_from_log_wiener(double tau, double log_w);

/// Asymptotic spread loss of per-class uniform measures:
/// log W_{1/2tau}(S^{d-1}) + (1 - alpha)/tau.
double loss_uniform(const LossWeights& w, int d);

/// Asymptotic spread loss of the K=3 two-atom family (simplex mixed with one
/// rotated copy), assembled from the closed-form pairwise distances.
/// theta in [0, pi/2]; reduces to loss_collapsed(w, 3) at theta = 0.
double k3_loss_mu_theta(double theta, const LossWeights& w);

/// log Gamma on (0, inf); thin wrapper over the C library's standard
/// rational approximation, self-tested against factorials.
double log_gamma(double x);

/// Gauss-Legendre nodes and weights on [-1, 1], computed by Newton
/// iteration on the Legendre recurrence.
std::vector<std::pair<double, double>> gauss_legendre(int n);

}  // namespace spreadlab
