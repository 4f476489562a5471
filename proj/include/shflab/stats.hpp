/*
   Copyright 2026 The shflab Authors

   Licensed under the Apache License, Version 2.0 (the "License");
   you may not use this file except in compliance with the License.
   You may obtain a copy of the License at

       http://www.apache.org/licenses/LICENSE-2.0

   Unless required by applicable law or agreed to in writing, software
   distributed under the License is distributed on an "AS IS" BASIS,
   WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
   See the License for the specific language governing permissions and
   limitations under the License.
*/

#pragma once

#include <span>

namespace shflab {

struct CorrelationEstimate {
  double corr = 0.0;
  double se = 0.0;
};

/// Pearson correlation with a leave-one-out jackknife standard error.
CorrelationEstimate estimate_correlation(std::span<const double> x, std::span<const double> y);

struct MomentEstimate {
  double mean = 0.0;
  double mean_se = 0.0;
  double variance = 0.0;
  double variance_se = 0.0;
  double second_moment = 0.0;
  double second_moment_se = 0.0;
};

/// Sample moments with standard errors from the fourth central moment.
MomentEstimate estimate_moments(std::span<const double> x);

}  // namespace shflab
