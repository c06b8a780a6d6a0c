#pragma once

#include <filesystem>
#include <string>
#include <string_view>

#include "grand/model.hpp"

namespace grand {

// Model files are line-oriented: `[section]` headers, `key = values` lines
// and `#` comments. Lists are separated by whitespace or commas;
// configurations are written as parenthesized tuples `(k_1 ... k_I)`.
//
//   [types]            names = big small        (or: count = 2)
//   [servers]          names = host             (or: count = 1)
//   [configs]          host = (1 0) (0 1) (1 1) (0 2) (0 3)
//   [vector_packing]   resources.host = 3
//                      requirements.big = 2
//                      requirements.small = 1
//   [rates]            lambda = 0.5 0.5
//                      mu = 1 1
//   [weights]          gamma = 1
//   [grand]            a = 0.2     (or: alpha = 0.1)   p = 0.9
//   [pools]            h = 0.7
//   [limits]           max_configs = 10000
//
// Exactly one of [configs] / [vector_packing] is required. Names may be used
// as keys wherever a server or customer type is referenced; `s<N>` / `t<N>`
// (1-based) always work.
ModelDefinition parse_model_definition(std::string_view text,
                                       std::string_view source = "<string>");
PackingModel parse_model(std::string_view text, std::string_view source = "<string>");
PackingModel load_model(const std::filesystem::path& path);

// Multi-line description: types, servers, configurations, edges and the
// normalization applied at load.
std::string model_summary(const PackingModel& model);

}  // namespace grand
