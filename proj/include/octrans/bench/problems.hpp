/*
 Copyright 2026 The octrans Authors

 Licensed under the Apache License, Version 2.0 (the "License");
 you may not use this file except in compliance with the License.
 You may obtain a copy of the License at

      https://www.apache.org/licenses/LICENSE-2.0

 Unless required by applicable law or agreed to in writing, software
 distributed under the License is distributed on an "AS IS" BASIS,
 WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 See the License for the specific language governing permissions and
 limitations under the License.
*/

#ifndef OCTRANS_BENCH_PROBLEMS_HPP_
#define OCTRANS_BENCH_PROBLEMS_HPP_

#include <string_view>
#include <vector>

namespace octrans::bench {

/// Embedded model sources shipped with the bench tool.
std::string_view double_integrator_source();
std::string_view goddard_source();
std::string_view quadrotor_source();

/// nullptr when unknown.
const char* embedded_source(std::string_view name);

std::vector<std::string_view> embedded_names();

}  // namespace octrans::bench

#endif  // OCTRANS_BENCH_PROBLEMS_HPP_
