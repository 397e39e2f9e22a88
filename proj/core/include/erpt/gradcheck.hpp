// Central finite-difference verification of the analytic gradients of
// the ED, RD, MLM and joint losses through a small encoder.
#pragma once

#include <cstdint>
#include <string>

#include "erpt/encoder.hpp"

namespace erpt {

struct GradCheckOptions {
  std::uint64_t seed = 0;
  int instances = 20;
  int coords_per_param = 3;  // random coordinates checked per tensor
  double fd_step = 1e-5;
  double tolerance = 1e-5;  // max relative error
};

struct GradCheckReport {
  double max_rel_err_ed = 0.0;
  double max_rel_err_rd = 0.0;
  double max_rel_err_mlm = 0.0;
  double max_rel_err_joint = 0.0;
  int instances = 0;
  bool pass(double tol) const {
    return max_rel_err_ed < tol && max_rel_err_rd < tol &&
           max_rel_err_mlm < tol && max_rel_err_joint < tol;
  }
  std::string summary() const;
};

// Runs on a 2-layer, hidden-16 encoder with random instances.
GradCheckReport run_gradcheck(const GradCheckOptions& opts = {});

}  // namespace erpt
