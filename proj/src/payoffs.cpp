#include "accelmc/payoffs.hpp"

#include <cmath>
#include <stdexcept>
#include <utility>

namespace accelmc {

Payoff european_call(double strike) {
  Payoff p;
  p.evaluate = [strike](double x) { return x > strike ? x - strike : 0.0; };
  p.regularity = Payoff::Regularity::Lipschitz;
  p.label = "call";
  p.lipschitz_constant = 1.0;
  return p;
}

Payoff digital(double strike) {
  Payoff p;
  p.evaluate = [strike](double x) { return x >= strike ? 1.0 : 0.0; };
  p.regularity = Payoff::Regularity::Discontinuous;
  p.label = "digital";
  return p;
}

Payoff smoothed_digital(double strike, double h) {
  if (!(h > 0.0))
    throw std::invalid_argument("smoothed_digital: h must be positive");
  Payoff p;
  p.evaluate = [strike, h](double x) {
    const double lo = x - (strike - h);
    const double hi = x - (strike + h);
    const double ramp = (lo > 0.0 ? lo : 0.0) - (hi > 0.0 ? hi : 0.0);
    return ramp / (2.0 * h);
  };
  p.regularity = Payoff::Regularity::Lipschitz;
  p.label = "smoothed_digital";
  p.lipschitz_constant = 1.0 / (2.0 * h);
  return p;
}

Payoff tanh_sigmoid(double center, double width) {
  if (!(width > 0.0))
    throw std::invalid_argument("tanh_sigmoid: width must be positive");
  Payoff p;
  p.evaluate = [center, width](double x) {
    return std::tanh((x - center) / width);
  };
  p.regularity = Payoff::Regularity::C2Bounded;
  p.label = "tanh_sigmoid";
  p.lipschitz_constant = 1.0 / width;
  p.grad_bound = 1.0 / width;
  // sup |d/du 2 sech^2 u tanh u| = 4 / (3 sqrt 3), attained at tanh u = 1/sqrt 3
  p.hess_bound = 4.0 / (3.0 * std::sqrt(3.0) * width * width);
  return p;
}

Payoff c2_payoff(std::string label, std::function<double(double)> fn,
                 double grad_bound, double hess_bound) {
  if (!(grad_bound >= 0.0) || !(hess_bound >= 0.0))
    throw std::invalid_argument("c2_payoff: derivative bounds must be >= 0");
  Payoff p;
  p.evaluate = std::move(fn);
  p.regularity = Payoff::Regularity::C2Bounded;
  p.label = std::move(label);
  p.lipschitz_constant = grad_bound;
  p.grad_bound = grad_bound;
  p.hess_bound = hess_bound;
  return p;
}

LocalizedPayoff localize(const Payoff& f, const Payoff& smooth_part) {
  if (!f.evaluate || !smooth_part.evaluate)
    throw std::invalid_argument("localize: payoffs must be callable");

  LocalizedPayoff split;
  split.smooth_part = smooth_part;
  split.original = f;

  auto whole = f.evaluate;
  auto smooth = smooth_part.evaluate;
  split.irregular_part.evaluate = [whole, smooth](double x) {
    return whole(x) - smooth(x);
  };
  split.irregular_part.regularity = f.regularity;
  split.irregular_part.label = f.label + "_minus_" + smooth_part.label;
  return split;
}

bool second_order_bound_check(const Payoff& f, double x1, double y1, double y2,
                              double x2) {
  if (f.regularity != Payoff::Regularity::C2Bounded || !f.grad_bound ||
      !f.hess_bound)
    throw std::invalid_argument(
        "second_order_bound_check: payoff '" + f.label +
        "' carries no derivative bounds");
  const double lhs = std::abs(f.evaluate(x1) - f.evaluate(y1) +
                              f.evaluate(y2) - f.evaluate(x2));
  const double rhs =
      0.5 * *f.hess_bound * (std::abs(x1 - x2) + std::abs(y1 - y2)) *
          std::abs(x1 - y1) +
      *f.grad_bound * std::abs(x1 - y1 + y2 - x2);
  return lhs <= rhs;
}

}  // namespace accelmc
