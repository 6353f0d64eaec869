#include "spreadlab/closed_form.hpp"

#include <array>
#include <cmath>
#include <stdexcept>

#include "spreadlab/vecmath.hpp"

namespace spreadlab {

namespace {

constexpr double kPi = 3.141592653589793238462643;
constexpr double kHalfPi = 1.5707963267948966;
constexpr int kWienerNodes = 256;

// log(1 + e^x) without overflow for large |x|.
double softplus(double x) {
  if (x > 0.0) return x + std::log1p(std::exp(-x));
  return std::log1p(std::exp(x));
}

void check_theta_domain(double theta) {
  if (!(theta >= 0.0 && theta <= kHalfPi))
    throw std::invalid_argument("domain: theta must lie in [0, pi/2]");
}

}  // namespace

double log_gamma(double x) {
  if (!(x > 0.0)) throw std::invalid_argument("domain: log_gamma needs x > 0");
  return std::lgamma(x);
}

std::vector<std::pair<double, double>> gauss_legendre(int n) {
  if (n < 2) throw std::invalid_argument("domain: quadrature needs >= 2 nodes");
  std::vector<std::pair<double, double>> nw(static_cast<std::size_t>(n));
  int half = (n + 1) / 2;
  for (int i = 0; i < half; ++i) {
    // standard initial guess for the i-th root of P_n
    double x = std::cos(kPi * (i + 0.75) / (n + 0.5));
    double dp = 0.0;
    for (int iter = 0; iter < 100; ++iter) {
      double p0 = 1.0, p1 = x;
      for (int k = 2; k <= n; ++k) {
        double pk = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = pk;
      }
      dp = n * (x * p1 - p0) / (x * x - 1.0);
      double step = p1 / dp;
      x -= step;
      if (std::fabs(step) < 1e-15) break;
    }
    double w = 2.0 / ((1.0 - x * x) * dp * dp);
    nw[static_cast<std::size_t>(i)] = {-x, w};  // ascending order
    nw[static_cast<std::size_t>(n - 1 - i)] = {x, w};
  }
  return nw;
}

double wiener_constant_nodes(int d, double tau, int nodes) {
  if (d < 2) throw std::invalid_argument("domain: wiener_constant needs d >= 2");
  if (!(tau > 0.0)) throw std::invalid_argument("domain: tau must be positive");
  // After u = (1 - cos phi)/2 the kernel mean over uniform pairs becomes
  //   C_d * Int_0^pi exp(-(1 - cos phi)/tau) sin^{d-2}(phi) dphi
  // with C_d = Gamma(d/2) / (sqrt(pi) Gamma((d-1)/2)); smooth for all d >= 2.
  auto nw = gauss_legendre(nodes);
  KahanSum acc;
  for (auto [x, w] : nw) {
    double phi = (x + 1.0) * 0.5 * kPi;
    double s = std::sin(phi);
    double f = std::exp(-(1.0 - std::cos(phi)) / tau);
    if (d > 2) f *= std::pow(s, d - 2);
    acc.add(w * f);
  }
  double integral = acc.value() * 0.5 * kPi;
  double cd = std::exp(log_gamma(0.5 * d) - log_gamma(0.5 * (d - 1))) / std::sqrt(kPi);
  return cd * integral;
}

double wiener_constant(int d, double tau) { return wiener_constant_nodes(d, tau, kWienerNodes); }

double log_wiener_constant(int d, double tau) { return std::log(wiener_constant(d, tau)); }

double loss_collapsed(const LossWeights& w, int K) {
  validate(w);
  if (K < 2) throw std::invalid_argument("domain: loss_collapsed needs K >= 2");
  return -(1.0 - w.alpha) * K / ((K - 1) * w.tau);
}

double loss_mu_theta(double theta, const LossWeights& w) {
  validate(w);
  check_theta_domain(theta);
  double s2 = std::sin(theta) * std::sin(theta);
  double a = w.alpha, t = w.tau;
  return -std::log(2.0) - 2.0 * (1.0 - a) / t + (1.0 - a) * softplus(2.0 * s2 / t) +
         a * softplus(-2.0 * s2 / t) + (1.0 - a) * s2 / t;
}

double theta_star(const LossWeights& w) {
  validate(w);
  if (w.alpha <= 2.0 / 3.0)
    throw std::domain_error("below-window: theta_star needs alpha > 2/3");
  if (w.alpha >= 1.0)
    throw std::domain_error("above-window: theta_star diverges as alpha -> 1");
  double radicand = 0.5 * w.tau * std::log((3.0 * w.alpha - 1.0) / (3.0 - 3.0 * w.alpha));
  if (radicand > 1.0)
    throw std::domain_error("above-window: sin(theta_star) would exceed 1");
  return std::asin(std::sqrt(radicand));
}

double spread_star(const LossWeights& w) { return std::sin(theta_star(w)); }

double c_tau_d_from_log_wiener(double tau, double log_w) {
  if (!(tau > 0.0)) throw std::invalid_argument("domain: tau must be positive");
  double inv = 1.0 / tau;
  double radicand = inv * (inv - 2.0) - 2.0 * log_w;
  if (radicand < 0.0)
    throw std::domain_error("undefined-window: negative radicand in c(tau,d)");
  return (2.0 + inv - std::sqrt(radicand)) / 3.0;
}

double c_tau_d(double tau, int d) {
  return c_tau_d_from_log_wiener(tau, log_wiener_constant(d, tau));
}

double loss_uniform(const LossWeights& w, int d) {
  validate(w);
  return log_wiener_constant(d, w.tau) + (1.0 - w.alpha) / w.tau;
}

double k3_loss_mu_theta(double theta, const LossWeights& w) {
  validate(w);
  check_theta_domain(theta);
  double a = w.alpha, t = w.tau;
  double ct = std::cos(theta);
  double lhalf = -std::log(2.0);
  double lquarter = -std::log(4.0);

  // Pairwise squared distances of the mixed simplex + rotated-copy family:
  // cross-class 3 and 2+cos(theta) from the apex class, plus (7-cos)/2
  // between the two base classes; within-class 2-2cos (apex) and
  // (1-cos)/2 (base).
  std::array<double, 2> diff_apex = {lhalf - 3.0 / (2.0 * t), lhalf - (2.0 + ct) / (2.0 * t)};
  std::array<double, 3> diff_base = {lhalf - 3.0 / (2.0 * t), lquarter - (2.0 + ct) / (2.0 * t),
                                     lquarter - (7.0 - ct) / (4.0 * t)};
  double e_diff = logsumexp(diff_apex) / 3.0 + 2.0 * logsumexp(diff_base) / 3.0;

  std::array<double, 2> same_apex = {lhalf, lhalf - (1.0 - ct) / t};
  std::array<double, 2> same_base = {lhalf, lhalf - (1.0 - ct) / (4.0 * t)};
  double e_same = logsumexp(same_apex) / 3.0 + 2.0 * logsumexp(same_base) / 3.0;

  double e_align = (1.0 - ct) / (4.0 * t);

  return (1.0 - a) * (e_diff + e_align) + a * e_same;
}

}  // namespace spreadlab
