#pragma once

#include <string>

#include "grand/model.hpp"
#include "grand/model_io.hpp"

namespace grand::test {

// One customer type, one server type holding up to `slots` customers.
inline std::string single_type(int slots, double lambda, double mu, const std::string& extra) {
  std::string configs;
  for (int k = 1; k <= slots; ++k) configs += " (" + std::to_string(k) + ")";
  return "[types]\ncount = 1\n[servers]\ncount = 1\n[configs]\ns1 =" + configs +
         "\n[rates]\nlambda = " + std::to_string(lambda) + "\nmu = " + std::to_string(mu) +
         "\n" + extra;
}

inline PackingModel single_type_model(int slots, double lambda, double mu,
                                      const std::string& extra) {
  return parse_model(single_type(slots, lambda, mu, extra));
}

inline constexpr const char* kCap3 = R"(
[types]
names = big small
[servers]
names = host
[vector_packing]
resources.host = 3
requirements.big = 2
requirements.small = 1
[rates]
lambda = 0.5 0.5
mu = 1 1
[grand]
a = 0.2
)";

}  // namespace grand::test
