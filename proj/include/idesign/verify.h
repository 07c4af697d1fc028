// Copyright 2026 The idesign Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef IDESIGN_VERIFY_H_
#define IDESIGN_VERIFY_H_

// Property suites run by `idesign verify`: exact potential identities,
// shaping telescoping and equilibrium preservation, and GP/EI correctness.

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

namespace idesign {

struct CheckResult {
  std::string name;
  bool passed = false;
  double value = 0.0;      // worst observed error
  double threshold = 0.0;  // pass iff value <= threshold
  std::string detail;
};

// max |dv_i - dPhi| over random unilateral deviations on every exact-Phi
// fixture, with and without a common additive modifier, and under shaping.
std::vector<CheckResult> VerifyPotentialSuite(int pairs = 100,
                                              uint64_t seed = 1);

// Telescoping of the discounted shaping stream over random trajectories and
// equality of pure-NE sets with and without shaping on random potential
// matrix games.
std::vector<CheckResult> VerifyShapingSuite(int trajectories = 1000,
                                            int games = 100,
                                            uint64_t seed = 2);

// Closed-form EI against a Monte-Carlo estimate, and GP interpolation of
// noiseless data.
std::vector<CheckResult> VerifyGpSuite(int tuples = 100,
                                       int mc_samples = 1000000,
                                       uint64_t seed = 3);

// Prints one line per check; returns true iff all passed.
bool PrintChecks(const std::vector<CheckResult>& checks, std::ostream& os);

}  // namespace idesign

#endif  // IDESIGN_VERIFY_H_
