#pragma once

#include <functional>
#include <optional>
#include <string>

namespace accelmc {

// Scalar payoff applied to the first state component at the horizon. The
// regularity tag decides which estimators and variance bounds apply; C2
// payoffs carry sup bounds on the first two derivatives so the second-order
// cancellation inequality can be checked on them.
struct Payoff {
  enum class Regularity { C2Bounded, Lipschitz, Discontinuous };

  std::function<double(double)> evaluate;
  Regularity regularity = Regularity::Lipschitz;
  std::string label;
  std::optional<double> lipschitz_constant;
  std::optional<double> grad_bound;  // sup |f'|, C2Bounded only
  std::optional<double> hess_bound;  // sup |f''|, C2Bounded only
};

Payoff european_call(double strike);

// Indicator of x >= strike (closed at the strike).
Payoff digital(double strike);

// Ramp from 0 at strike-h to 1 at strike+h, constant outside; Lipschitz with
// constant 1/(2h). Rejects h <= 0.
Payoff smoothed_digital(double strike, double h);

// tanh((x - center) / width): bounded with bounded derivatives, the stock
// smooth payoff for variance-scaling checks. Carries exact derivative sup
// bounds 1/width and 4 / (3 sqrt(3) width^2).
Payoff tanh_sigmoid(double center, double width);

// Generic C2-bounded payoff with caller-supplied derivative sup bounds.
Payoff c2_payoff(std::string label, std::function<double(double)> fn,
                 double grad_bound, double hess_bound);

// f split as smooth_part + irregular_part with irregular_part defined
// pointwise as f - smooth_part, so the split is exact by construction.
struct LocalizedPayoff {
  Payoff smooth_part;
  Payoff irregular_part;
  Payoff original;
};

LocalizedPayoff localize(const Payoff& f, const Payoff& smooth_part);

// Checks |f(x1) - f(y1) + f(y2) - f(x2)| against the second-order bound
// 0.5 * sup|f''| * (|x1-x2| + |y1-y2|) * |x1-y1| + sup|f'| * |x1-y1+y2-x2|.
// Requires a C2Bounded payoff with both derivative bounds.
bool second_order_bound_check(const Payoff& f, double x1, double y1, double y2,
                              double x2);

}  // namespace accelmc
