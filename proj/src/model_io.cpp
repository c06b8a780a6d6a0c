#include "grand/model_io.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <fstream>
#include <map>
#include <sstream>

#include "grand/error.hpp"

namespace grand {

namespace {

struct Line {
  std::size_t number;
  std::string key;
  std::string value;
};

std::string trim(std::string_view s) {
  std::size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return std::string(s.substr(b, e - b));
}

class Parser {
 public:
  Parser(std::string_view text, std::string_view source) : source_(source) {
    std::istringstream in{std::string(text)};
    std::string raw;
    std::string section;
    std::size_t number = 0;
    while (std::getline(in, raw)) {
      ++number;
      if (auto hash = raw.find('#'); hash != std::string::npos) raw.erase(hash);
      const std::string line = trim(raw);
      if (line.empty()) continue;
      if (line.front() == '[') {
        if (line.back() != ']') error(number, "unterminated section header");
        section = trim(std::string_view(line).substr(1, line.size() - 2));
        static const char* known[] = {"types", "servers", "configs", "vector_packing",
                                      "rates", "weights", "grand", "pools", "limits"};
        if (std::find(std::begin(known), std::end(known), section) == std::end(known)) {
          error(number, "unknown section [" + section + "]");
        }
        if (!sections_.emplace(section, std::vector<Line>{}).second) {
          error(number, "duplicate section [" + section + "]");
        }
        continue;
      }
      if (section.empty()) error(number, "key outside of any section");
      const auto eq = line.find('=');
      if (eq == std::string::npos) error(number, "expected `key = value`");
      Line entry{number, trim(std::string_view(line).substr(0, eq)),
                 trim(std::string_view(line).substr(eq + 1))};
      if (entry.key.empty()) error(number, "empty key");
      for (const auto& other : sections_[section]) {
        if (other.key == entry.key) error(number, "duplicate key `" + entry.key + "`");
      }
      sections_[section].push_back(std::move(entry));
    }
  }

  ModelDefinition parse() {
    ModelDefinition def;
    def.type_names = names("types");
    def.server_names = names("servers");
    if (def.type_names.empty()) error(0, "section [types] is required");
    if (def.server_names.empty()) error(0, "section [servers] is required");

    if (const Line* l = find("limits", "max_configs")) {
      const auto v = numbers(*l);
      if (v.size() != 1 || v[0] < 1) error(l->number, "max_configs must be a positive integer");
      def.config_cap = static_cast<std::size_t>(v[0]);
    }
    check_keys("limits", {"max_configs"});

    const bool explicit_configs = sections_.contains("configs");
    const bool packing = sections_.contains("vector_packing");
    if (explicit_configs == packing) {
      error(0, "exactly one of [configs] or [vector_packing] is required");
    }
    if (explicit_configs) {
      for (const auto& l : sections_["configs"]) {
        const int s = lookup(def.server_names, l.key, 's', l.number);
        for (auto& counts : tuples(l, def.type_names.size())) {
          Configuration k{s, std::move(counts)};
          if (!k.is_zero()) def.configs.push_back(std::move(k));
        }
      }
    } else {
      std::vector<std::vector<double>> res(def.server_names.size());
      std::vector<std::vector<double>> req(def.type_names.size());
      for (const auto& l : sections_["vector_packing"]) {
        if (l.key.rfind("resources.", 0) == 0) {
          const int s = lookup(def.server_names, l.key.substr(10), 's', l.number);
          res[static_cast<std::size_t>(s)] = numbers(l);
        } else if (l.key.rfind("requirements.", 0) == 0) {
          const int i = lookup(def.type_names, l.key.substr(13), 't', l.number);
          req[static_cast<std::size_t>(i)] = numbers(l);
        } else {
          error(l.number, "unknown key `" + l.key + "` in [vector_packing]");
        }
      }
      for (std::size_t s = 0; s < res.size(); ++s) {
        if (res[s].empty()) error(0, "missing resources." + def.server_names[s]);
      }
      for (std::size_t i = 0; i < req.size(); ++i) {
        if (req[i].empty()) error(0, "missing requirements." + def.type_names[i]);
      }
      def.configs = enumerate_vector_packing(res, req, def.config_cap);
    }

    def.lambda = required_numbers("rates", "lambda");
    def.mu = required_numbers("rates", "mu");
    check_keys("rates", {"lambda", "mu"});
    if (const Line* l = find("weights", "gamma")) def.gamma = numbers(*l);
    check_keys("weights", {"gamma"});
    if (const Line* l = find("grand", "a")) def.a = numbers(*l);
    if (const Line* l = find("grand", "alpha")) def.alpha = scalar(*l);
    if (const Line* l = find("grand", "p")) def.p = scalar(*l);
    check_keys("grand", {"a", "alpha", "p"});
    if (const Line* l = find("pools", "h")) def.h = numbers(*l);
    check_keys("pools", {"h"});
    return def;
  }

 private:
  [[noreturn]] void error(std::size_t line, const std::string& msg) const {
    std::ostringstream os;
    os << source_;
    if (line) os << ':' << line;
    os << ": " << msg;
    fail(ErrorCode::Parse, os.str());
  }

  const Line* find(const std::string& section, const std::string& key) const {
    auto it = sections_.find(section);
    if (it == sections_.end()) return nullptr;
    for (const auto& l : it->second) {
      if (l.key == key) return &l;
    }
    return nullptr;
  }

  void check_keys(const std::string& section, std::initializer_list<const char*> allowed) const {
    auto it = sections_.find(section);
    if (it == sections_.end()) return;
    for (const auto& l : it->second) {
      if (std::none_of(allowed.begin(), allowed.end(),
                       [&](const char* k) { return l.key == k; })) {
        error(l.number, "unknown key `" + l.key + "` in [" + section + "]");
      }
    }
  }

  std::vector<std::string> words(const std::string& value) const {
    std::vector<std::string> out;
    std::string cur;
    for (char c : value) {
      if (std::isspace(static_cast<unsigned char>(c)) || c == ',') {
        if (!cur.empty()) out.push_back(std::move(cur));
        cur.clear();
      } else {
        cur += c;
      }
    }
    if (!cur.empty()) out.push_back(std::move(cur));
    return out;
  }

  double to_number(const std::string& w, std::size_t line) const {
    double v = 0.0;
    auto [ptr, ec] = std::from_chars(w.data(), w.data() + w.size(), v);
    if (ec != std::errc{} || ptr != w.data() + w.size()) {
      error(line, "expected a number, got `" + w + "`");
    }
    return v;
  }

  std::vector<double> numbers(const Line& l) const {
    std::vector<double> out;
    for (const auto& w : words(l.value)) out.push_back(to_number(w, l.number));
    if (out.empty()) error(l.number, "`" + l.key + "` has no values");
    return out;
  }

  double scalar(const Line& l) const {
    const auto v = numbers(l);
    if (v.size() != 1) error(l.number, "`" + l.key + "` takes a single value");
    return v[0];
  }

  std::vector<double> required_numbers(const std::string& section, const std::string& key) const {
    const Line* l = find(section, key);
    if (!l) error(0, "missing `" + key + "` in [" + section + "]");
    return numbers(*l);
  }

  std::vector<std::string> names(const std::string& section) const {
    std::vector<std::string> out;
    const Line* named = find(section, "names");
    const Line* counted = find(section, "count");
    if (named && counted) error(named->number, "give either names or count");
    if (named) {
      out = words(named->value);
      for (const auto& n : out) {
        if (std::find(out.begin(), out.end(), n) != out.end() &&
            std::count(out.begin(), out.end(), n) > 1) {
          error(named->number, "duplicate name `" + n + "`");
        }
        if (n.find_first_of("()[]=") != std::string::npos) {
          error(named->number, "name `" + n + "` contains reserved characters");
        }
      }
    } else if (counted) {
      const double n = scalar(*counted);
      if (n < 1 || n != static_cast<int>(n)) error(counted->number, "count must be a positive integer");
      const char prefix = section == "types" ? 't' : 's';
      for (int i = 1; i <= static_cast<int>(n); ++i) out.push_back(prefix + std::to_string(i));
    }
    check_keys(section, {"names", "count"});
    return out;
  }

  int lookup(const std::vector<std::string>& names, const std::string& key, char prefix,
             std::size_t line) const {
    auto it = std::find(names.begin(), names.end(), key);
    if (it != names.end()) return static_cast<int>(it - names.begin());
    if (key.size() > 1 && key[0] == prefix) {
      int idx = 0;
      auto [ptr, ec] = std::from_chars(key.data() + 1, key.data() + key.size(), idx);
      if (ec == std::errc{} && ptr == key.data() + key.size() && idx >= 1 &&
          idx <= static_cast<int>(names.size())) {
        return idx - 1;
      }
    }
    error(line, "unknown name `" + key + "`");
  }

  std::vector<std::vector<int>> tuples(const Line& l, std::size_t dim) const {
    std::vector<std::vector<int>> out;
    const std::string& v = l.value;
    std::size_t pos = 0;
    while (true) {
      while (pos < v.size() && (std::isspace(static_cast<unsigned char>(v[pos])) || v[pos] == ';')) ++pos;
      if (pos == v.size()) break;
      if (v[pos] != '(') error(l.number, "expected `(` starting a configuration tuple");
      const auto close = v.find(')', pos);
      if (close == std::string::npos) error(l.number, "unterminated configuration tuple");
      std::vector<int> counts;
      for (const auto& w : words(v.substr(pos + 1, close - pos - 1))) {
        const double x = to_number(w, l.number);
        if (x < 0 || x != static_cast<int>(x)) {
          error(l.number, "configuration counts must be nonnegative integers");
        }
        counts.push_back(static_cast<int>(x));
      }
      if (counts.size() != dim) {
        error(l.number, "configuration tuple has " + std::to_string(counts.size()) +
                            " entries, expected " + std::to_string(dim));
      }
      out.push_back(std::move(counts));
      pos = close + 1;
    }
    if (out.empty()) error(l.number, "no configurations listed for `" + l.key + "`");
    return out;
  }

  std::string source_;
  std::map<std::string, std::vector<Line>> sections_;
};

}  // namespace

ModelDefinition parse_model_definition(std::string_view text, std::string_view source) {
  return Parser(text, source).parse();
}

PackingModel parse_model(std::string_view text, std::string_view source) {
  return PackingModel(parse_model_definition(text, source));
}

PackingModel load_model(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::Io, "cannot open model file " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_model(buf.str(), path.string());
}

std::string model_summary(const PackingModel& model) {
  const auto& set = model.configs();
  std::ostringstream os;
  auto vec = [&](const std::vector<double>& v) {
    std::ostringstream o;
    for (std::size_t j = 0; j < v.size(); ++j) o << (j ? " " : "") << v[j];
    return o.str();
  };
  os << "customer types: " << model.num_types() << "\n";
  os << "server types: " << model.num_server_types() << "\n";
  os << "configurations: " << set.size() << " nonzero, " << set.size_bar() << " with zero\n";
  os << "edges: " << set.edges().size() << "\n";
  for (int s = 0; s < model.num_server_types(); ++s) {
    os << "  " << model.server_names()[static_cast<std::size_t>(s)] << ":";
    for (std::size_t bar : set.nonzero()) {
      if (set.server_type(bar) != s) continue;
      os << " (";
      for (int i = 0; i < model.num_types(); ++i) os << (i ? " " : "") << set.count(bar, i);
      os << ")";
    }
    os << "\n";
  }
  os << "rate scale (sum of rho): " << model.rate_scale() << "\n";
  os << "normalized lambda: " << vec(model.lambda()) << "\n";
  os << "normalized rho: " << vec(model.rho()) << "\n";
  os << "normalized gamma: " << vec(model.gamma()) << "\n";
  if (model.has_a()) os << "a: " << vec(model.a()) << "\n";
  if (model.p()) os << "p: " << *model.p() << "\n";
  if (model.has_pools()) os << "normalized h: " << vec(model.h()) << "\n";
  return os.str();
}

}  // namespace grand
