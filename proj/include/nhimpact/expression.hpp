// Copyright 2026 The nhimpact Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <memory>
#include <string>
#include <vector>

#include "nhimpact/types.hpp"

namespace nhimpact {

// Arithmetic over named coordinates: + - * / ^, unary minus, parentheses,
// sin, cos, sqrt, the constant pi and decimal literals. Exponents must be
// free of variables.
class Expression {
 public:
  struct Node;

  Expression();  // the constant 0

  static Expression parse(const std::string& text,
                          const std::vector<std::string>& variables);
  static Expression constant(double value);

  double operator()(const Vector& q) const;
  Expression derivative(int variable) const;

  bool is_constant() const;
  std::string str() const;

 private:
  explicit Expression(std::shared_ptr<const Node> root);
  std::shared_ptr<const Node> root_;
};

}  // namespace nhimpact
