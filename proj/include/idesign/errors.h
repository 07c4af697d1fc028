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

#ifndef IDESIGN_ERRORS_H_
#define IDESIGN_ERRORS_H_

#include <stdexcept>
#include <string>

namespace idesign {

// Invalid or inconsistent configuration (bad shapes, failed schema checks).
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A game would be needed to expose structure it does not have, e.g. an exact
// potential or an enumerable joint action space.
class UnsupportedError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Modifier or feature evaluation outside its declared domain.
class EvaluationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Invalid action supplied to an environment step.
class ActionError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Linear algebra failures (factorization did not succeed).
class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class TrainingError : public std::runtime_error {
 public:
  TrainingError(const std::string& what, int iteration)
      : std::runtime_error(what + " (iteration " + std::to_string(iteration) +
                           ")"),
        iteration_(iteration) {}
  int iteration() const { return iteration_; }

 private:
  int iteration_;
};

}  // namespace idesign

#endif  // IDESIGN_ERRORS_H_
