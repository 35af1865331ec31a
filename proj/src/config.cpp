#include "hydrolimit/config.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <vector>

#include "hydrolimit/error.hpp"
#include "hydrolimit/format.hpp"

namespace hydrolimit {
namespace {

struct Value {
  enum class Kind { number, string, boolean, array } kind = Kind::number;
  std::string text;  // number literal or string contents
  bool flag = false;
  std::vector<Value> items;
  int line = 0;
};

[[noreturn]] void parse_error(int line, const std::string& what) {
  throw Error(Errc::ParseError, "line " + std::to_string(line) + ": " + what);
}

class ValueParser {
 public:
  ValueParser(std::string_view s, int line) : s_(s), line_(line) {}

  Value parse_all() {
    Value v = parse_value(0);
    skip_space();
    if (pos_ != s_.size()) parse_error(line_, "unexpected trailing characters");
    return v;
  }

 private:
  void skip_space() {
    while (pos_ < s_.size() && (s_[pos_] == ' ' || s_[pos_] == '\t')) ++pos_;
  }

  Value parse_value(int depth) {
    if (depth > 8) parse_error(line_, "arrays nested too deeply");
    skip_space();
    if (pos_ >= s_.size()) parse_error(line_, "missing value");
    Value v;
    v.line = line_;
    const char c = s_[pos_];
    if (c == '[') {
      v.kind = Value::Kind::array;
      ++pos_;
      skip_space();
      if (pos_ < s_.size() && s_[pos_] == ']') {
        ++pos_;
        return v;
      }
      while (true) {
        v.items.push_back(parse_value(depth + 1));
        skip_space();
        if (pos_ >= s_.size()) parse_error(line_, "unterminated array");
        if (s_[pos_] == ',') {
          ++pos_;
          continue;
        }
        if (s_[pos_] == ']') {
          ++pos_;
          return v;
        }
        parse_error(line_, "expected ',' or ']' in array");
      }
    }
    if (c == '"') {
      v.kind = Value::Kind::string;
      ++pos_;
      while (true) {
        if (pos_ >= s_.size()) parse_error(line_, "unterminated string");
        const char d = s_[pos_++];
        if (d == '"') return v;
        if (d == '\\') {
          if (pos_ >= s_.size()) parse_error(line_, "unterminated escape");
          const char e = s_[pos_++];
          if (e != '"' && e != '\\') parse_error(line_, "unsupported escape sequence");
          v.text.push_back(e);
        } else {
          v.text.push_back(d);
        }
      }
    }
    const std::size_t start = pos_;
    while (pos_ < s_.size() && (std::isalnum(static_cast<unsigned char>(s_[pos_])) ||
                                s_[pos_] == '.' || s_[pos_] == '-' || s_[pos_] == '+' ||
                                s_[pos_] == '_')) {
      ++pos_;
    }
    const std::string_view word = s_.substr(start, pos_ - start);
    if (word.empty()) parse_error(line_, "unexpected character '" + std::string(1, c) + "'");
    if (word == "true" || word == "false") {
      v.kind = Value::Kind::boolean;
      v.flag = word == "true";
      return v;
    }
    double probe = 0.0;
    const char* first = word.data();
    if (*first == '+') ++first;
    const auto [end, ec] = std::from_chars(first, word.data() + word.size(), probe);
    if (ec != std::errc() || end != word.data() + word.size() || !std::isfinite(probe)) {
      parse_error(line_, "invalid value '" + std::string(word) + "' (strings need quotes)");
    }
    v.kind = Value::Kind::number;
    v.text = std::string(word);
    return v;
  }

  std::string_view s_;
  std::size_t pos_ = 0;
  int line_;
};

struct Entry {
  std::string section;
  std::string key;
  Value value;
};

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

// Cuts a trailing comment, ignoring '#' inside strings.
std::string_view strip_comment(std::string_view s) {
  bool in_string = false;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (in_string && s[i] == '\\') {
      ++i;
    } else if (s[i] == '"') {
      in_string = !in_string;
    } else if (s[i] == '#' && !in_string) {
      return s.substr(0, i);
    }
  }
  return s;
}

bool is_identifier(std::string_view s) {
  if (s.empty()) return false;
  return std::all_of(s.begin(), s.end(), [](char c) {
    return std::isalnum(static_cast<unsigned char>(c)) || c == '_';
  });
}

const std::map<std::string, std::set<std::string>>& schema() {
  static const std::map<std::string, std::set<std::string>> keys{
      {"model", {"type", "species", "sample_mode"}},
      {"scaling", {"lambda", "mu", "alpha", "fold_gamma", "fold_delta"}},
      {"study",
       {"N", "replicas", "bins", "T", "checkpoints", "seed", "drift_sign", "test_functions", "martingale_function",
        "martingale_step", "residual_nodes", "residual_bins"}},
      {"pde", {"M", "cfl_fraction"}},
      {"output", {"profiles", "configurations"}},
  };
  return keys;
}

std::vector<Entry> tokenize(std::string_view text) {
  std::vector<Entry> entries;
  std::set<std::pair<std::string, std::string>> seen;
  std::set<std::string> seen_sections;
  std::string section;
  int line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const std::size_t nl = text.find('\n', pos);
    const std::string_view raw =
        text.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos);
    pos = nl == std::string_view::npos ? text.size() + 1 : nl + 1;
    ++line_no;
    const std::string_view line = trim(strip_comment(raw));
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') parse_error(line_no, "malformed section header");
      const std::string name(trim(line.substr(1, line.size() - 2)));
      if (!schema().contains(name)) {
        throw Error(Errc::UnknownKey,
                    "line " + std::to_string(line_no) + ": unknown section [" + name + "]");
      }
      if (!seen_sections.insert(name).second) {
        parse_error(line_no, "section [" + name + "] appears twice");
      }
      section = name;
      continue;
    }
    const std::size_t eq = line.find('=');
    if (eq == std::string_view::npos) parse_error(line_no, "expected 'key = value'");
    const std::string key(trim(line.substr(0, eq)));
    if (!is_identifier(key)) parse_error(line_no, "invalid key '" + key + "'");
    if (section.empty()) parse_error(line_no, "key '" + key + "' outside any section");
    const bool dynamic = section == "model" && key.starts_with("initial_");
    if (!dynamic && !schema().at(section).contains(key)) {
      throw Error(Errc::UnknownKey, "line " + std::to_string(line_no) + ": unknown key '" + key +
                                        "' in [" + section + "]");
    }
    if (!seen.insert({section, key}).second) {
      parse_error(line_no, "duplicate key '" + key + "'");
    }
    entries.push_back({section, key, ValueParser(trim(line.substr(eq + 1)), line_no).parse_all()});
  }
  return entries;
}

// ---- typed accessors ----

[[noreturn]] void type_error(const Value& v, const std::string& expected) {
  parse_error(v.line, "expected " + expected);
}

double as_real(const Value& v) {
  if (v.kind != Value::Kind::number) type_error(v, "a number");
  double x = 0.0;
  const char* first = v.text.data();
  if (*first == '+') ++first;
  std::from_chars(first, v.text.data() + v.text.size(), x);
  return x;
}

std::uint64_t as_unsigned(const Value& v) {
  if (v.kind != Value::Kind::number) type_error(v, "a nonnegative integer");
  std::uint64_t x = 0;
  const char* first = v.text.data();
  if (*first == '+') ++first;
  const auto [end, ec] = std::from_chars(first, v.text.data() + v.text.size(), x);
  if (ec != std::errc() || end != v.text.data() + v.text.size()) {
    type_error(v, "a nonnegative integer");
  }
  return x;
}

std::size_t as_size(const Value& v) { return static_cast<std::size_t>(as_unsigned(v)); }

std::string as_string(const Value& v) {
  if (v.kind != Value::Kind::string) type_error(v, "a quoted string");
  return v.text;
}

bool as_bool(const Value& v) {
  if (v.kind != Value::Kind::boolean) type_error(v, "true or false");
  return v.flag;
}

const std::vector<Value>& as_array(const Value& v) {
  if (v.kind != Value::Kind::array) type_error(v, "an array");
  return v.items;
}

std::vector<double> as_reals(const Value& v) {
  std::vector<double> out;
  for (const auto& item : as_array(v)) out.push_back(as_real(item));
  return out;
}

FourierSeries normalized(FourierSeries f) {
  const std::size_t m = std::max(f.cos_coeffs.size(), f.sin_coeffs.size());
  f.cos_coeffs.resize(m, 0.0);
  f.sin_coeffs.resize(m, 0.0);
  while (!f.cos_coeffs.empty() && f.cos_coeffs.back() == 0.0 && f.sin_coeffs.back() == 0.0) {
    f.cos_coeffs.pop_back();
    f.sin_coeffs.pop_back();
  }
  // canonical zero: avoid -0.0 surviving a round trip through "1 - sum"
  if (f.constant == 0.0) f.constant = 0.0;
  for (auto& c : f.cos_coeffs) c = c == 0.0 ? 0.0 : c;
  for (auto& c : f.sin_coeffs) c = c == 0.0 ? 0.0 : c;
  return f;
}

FourierSeries as_fourier(const Value& v) {
  const auto coeffs = as_reals(v);
  if (coeffs.empty()) parse_error(v.line, "a profile needs at least the constant coefficient");
  FourierSeries f;
  f.constant = coeffs[0];
  for (std::size_t i = 1; i < coeffs.size(); ++i) {
    (i % 2 == 1 ? f.cos_coeffs : f.sin_coeffs).push_back(coeffs[i]);
  }
  return normalized(std::move(f));
}

std::string format_fourier(const FourierSeries& f) {
  std::string out = "[" + format_real(f.constant);
  for (std::size_t m = 0; m < f.modes(); ++m) {
    out += ", " + format_real(m < f.cos_coeffs.size() ? f.cos_coeffs[m] : 0.0);
    out += ", " + format_real(m < f.sin_coeffs.size() ? f.sin_coeffs[m] : 0.0);
  }
  return out + "]";
}

std::string format_reals(const std::vector<double>& xs) {
  std::string out = "[";
  for (std::size_t i = 0; i < xs.size(); ++i) out += (i ? ", " : "") + format_real(xs[i]);
  return out + "]";
}

std::string quoted(const std::string& s) {
  std::string out = "\"";
  for (char c : s) {
    if (c == '"' || c == '\\') out.push_back('\\');
    out.push_back(c);
  }
  return out + "\"";
}

}  // namespace

ExperimentConfig parse_config(std::string_view text) {
  const auto entries = tokenize(text);
  ExperimentConfig cfg;
  std::map<std::string, const Value*> initial_values;
  std::optional<std::vector<std::string>> species;
  bool checkpoints_given = false;
  std::vector<double> gamma, delta;
  bool gamma_given = false, delta_given = false;
  bool mu_given = false, alpha_given = false;

  for (const auto& [section, key, v] : entries) {
    if (section == "model") {
      if (key == "type") {
        const auto s = as_string(v);
        if (s == "asep") {
          cfg.model = ModelKind::asep;
        } else if (s == "nspecies") {
          cfg.model = ModelKind::nspecies;
        } else {
          parse_error(v.line, "type must be \"asep\" or \"nspecies\"");
        }
      } else if (key == "species") {
        std::vector<std::string> labels;
        for (const auto& item : as_array(v)) {
          labels.push_back(as_string(item));
          if (!is_identifier(labels.back())) {
            parse_error(v.line, "species labels must be alphanumeric");
          }
        }
        species = std::move(labels);
      } else if (key == "sample_mode") {
        const auto s = as_string(v);
        if (s == "random") {
          cfg.sample_mode = SampleMode::random;
        } else if (s == "deterministic") {
          cfg.sample_mode = SampleMode::deterministic;
        } else {
          parse_error(v.line, "sample_mode must be \"random\" or \"deterministic\"");
        }
      } else {  // initial_<label>
        initial_values[key.substr(std::string_view("initial_").size())] = &v;
      }
    } else if (section == "scaling") {
      if (key == "lambda") cfg.lambda = as_real(v);
      if (key == "mu") {
        cfg.mu = as_real(v);
        mu_given = true;
      }
      if (key == "alpha") {
        const auto& rows = as_array(v);
        const auto n = static_cast<Eigen::Index>(rows.size());
        cfg.alpha = Eigen::MatrixXd::Zero(n, n);
        for (Eigen::Index r = 0; r < n; ++r) {
          const auto row = as_reals(rows[static_cast<std::size_t>(r)]);
          if (static_cast<Eigen::Index>(row.size()) != n) parse_error(v.line, "alpha must be square");
          for (Eigen::Index c = 0; c < n; ++c) cfg.alpha(r, c) = row[static_cast<std::size_t>(c)];
        }
        alpha_given = true;
      }
      if (key == "fold_gamma") {
        gamma = as_reals(v);
        gamma_given = true;
      }
      if (key == "fold_delta") {
        delta = as_reals(v);
        delta_given = true;
      }
    } else if (section == "study") {
      if (key == "N") {
        cfg.sizes.clear();
        for (const auto& item : as_array(v)) cfg.sizes.push_back(as_size(item));
      } else if (key == "replicas") {
        cfg.replicas = as_size(v);
      } else if (key == "bins") {
        cfg.bins = as_size(v);
      } else if (key == "T") {
        cfg.horizon = as_real(v);
      } else if (key == "checkpoints") {
        cfg.checkpoints = as_reals(v);
        checkpoints_given = true;
      } else if (key == "seed") {
        cfg.seed = as_unsigned(v);
      } else if (key == "drift_sign") {
        if (v.kind == Value::Kind::string) {
          if (v.text != "auto") parse_error(v.line, "drift_sign must be \"auto\", 1 or -1");
          cfg.drift = DriftPolicy{true, +1};
        } else {
          const double s = as_real(v);
          if (s != 1.0 && s != -1.0) parse_error(v.line, "drift_sign must be \"auto\", 1 or -1");
          cfg.drift = DriftPolicy{false, s > 0 ? +1 : -1};
        }
      } else if (key == "test_functions") {
        cfg.test_functions = as_size(v);
      } else if (key == "martingale_function") {
        cfg.martingale_function = as_size(v);
      } else if (key == "martingale_step") {
        cfg.martingale_step = as_real(v);
      } else if (key == "residual_nodes") {
        cfg.residual_nodes = as_size(v);
      } else if (key == "residual_bins") {
        cfg.residual_bins = as_size(v);
      }
    } else if (section == "pde") {
      if (key == "M") cfg.grid_cells = as_size(v);
      if (key == "cfl_fraction") cfg.cfl_fraction = as_real(v);
    } else if (section == "output") {
      if (key == "profiles") cfg.write_profiles = as_bool(v);
      if (key == "configurations") cfg.write_configurations = as_bool(v);
    }
  }

  // species: explicit list, or A, B (asep) / from the alpha size (nspecies)
  if (species) {
    cfg.species = *species;
  } else if (cfg.model == ModelKind::nspecies && alpha_given) {
    cfg.species = SpeciesAlphabet::letters(static_cast<std::size_t>(cfg.alpha.rows())).labels();
  } else {
    cfg.species = {"A", "B"};
  }
  const std::size_t n = cfg.species.size();
  if (cfg.model == ModelKind::asep && (alpha_given || gamma_given || delta_given)) {
    throw Error(Errc::ConstraintViolation, "alpha and fold rates belong to model nspecies");
  }
  if (cfg.model == ModelKind::nspecies && mu_given) {
    throw Error(Errc::ConstraintViolation, "mu belongs to model asep; use alpha");
  }
  if (cfg.model == ModelKind::nspecies && !alpha_given) {
    cfg.alpha = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
  }
  if (gamma_given != delta_given) {
    throw Error(Errc::ConstraintViolation, "fold_gamma and fold_delta must be given together");
  }
  if (gamma_given) cfg.fold = FoldRates{gamma, delta};

  for (const auto& [label, v] : initial_values) {
    if (std::find(cfg.species.begin(), cfg.species.end(), label) == cfg.species.end()) {
      throw Error(Errc::UnknownKey, "line " + std::to_string(v->line) + ": unknown key 'initial_" +
                                        label + "' (no species '" + label + "')");
    }
  }
  cfg.initial.assign(n, FourierSeries{});
  if (initial_values.empty()) {
    for (auto& f : cfg.initial) f.constant = 1.0 / static_cast<double>(n);
  } else {
    std::optional<std::size_t> missing;
    for (std::size_t k = 0; k < n; ++k) {
      const auto it = initial_values.find(cfg.species[k]);
      if (it != initial_values.end()) {
        cfg.initial[k] = as_fourier(*it->second);
      } else if (missing) {
        throw Error(Errc::ConstraintViolation,
                    "initial profiles missing for both " + cfg.species[*missing] + " and " +
                        cfg.species[k]);
      } else {
        missing = k;
      }
    }
    if (missing) {
      FourierSeries& rest = cfg.initial[*missing];
      rest.constant = 1.0;
      for (std::size_t k = 0; k < n; ++k) {
        if (k == *missing) continue;
        const auto& f = cfg.initial[k];
        rest.constant -= f.constant;
        rest.cos_coeffs.resize(std::max(rest.cos_coeffs.size(), f.cos_coeffs.size()), 0.0);
        rest.sin_coeffs.resize(std::max(rest.sin_coeffs.size(), f.sin_coeffs.size()), 0.0);
        for (std::size_t m = 0; m < f.cos_coeffs.size(); ++m) rest.cos_coeffs[m] -= f.cos_coeffs[m];
        for (std::size_t m = 0; m < f.sin_coeffs.size(); ++m) rest.sin_coeffs[m] -= f.sin_coeffs[m];
      }
      rest = normalized(rest);
    }
  }

  if (cfg.sizes.empty()) throw Error(Errc::ConstraintViolation, "[study] N is required");
  if (!checkpoints_given) cfg.checkpoints = {cfg.horizon};
  cfg.validate();
  return cfg;
}

std::string serialize_config(const ExperimentConfig& c) {
  std::ostringstream out;
  out << "[model]\n";
  out << "type = " << quoted(c.model == ModelKind::asep ? "asep" : "nspecies") << "\n";
  out << "species = [";
  for (std::size_t k = 0; k < c.species.size(); ++k) out << (k ? ", " : "") << quoted(c.species[k]);
  out << "]\n";
  for (std::size_t k = 0; k < c.initial.size(); ++k) {
    out << "initial_" << c.species[k] << " = " << format_fourier(c.initial[k]) << "\n";
  }
  out << "sample_mode = "
      << quoted(c.sample_mode == SampleMode::random ? "random" : "deterministic") << "\n";

  out << "\n[scaling]\n";
  out << "lambda = " << format_real(c.lambda) << "\n";
  if (c.model == ModelKind::asep) {
    out << "mu = " << format_real(c.mu) << "\n";
  } else {
    out << "alpha = [";
    for (Eigen::Index r = 0; r < c.alpha.rows(); ++r) {
      std::vector<double> row;
      for (Eigen::Index col = 0; col < c.alpha.cols(); ++col) row.push_back(c.alpha(r, col));
      out << (r ? ", " : "") << format_reals(row);
    }
    out << "]\n";
    if (c.fold) {
      out << "fold_gamma = " << format_reals(c.fold->gamma) << "\n";
      out << "fold_delta = " << format_reals(c.fold->delta) << "\n";
    }
  }

  out << "\n[study]\n";
  out << "N = [";
  for (std::size_t j = 0; j < c.sizes.size(); ++j) out << (j ? ", " : "") << c.sizes[j];
  out << "]\n";
  out << "replicas = " << c.replicas << "\n";
  out << "bins = " << c.bins << "\n";
  out << "T = " << format_real(c.horizon) << "\n";
  out << "checkpoints = " << format_reals(c.checkpoints) << "\n";
  out << "seed = " << c.seed << "\n";
  out << "drift_sign = "
      << (c.drift.automatic ? std::string("\"auto\"") : std::to_string(c.drift.sign)) << "\n";
  out << "test_functions = " << c.test_functions << "\n";
  out << "martingale_function = " << c.martingale_function << "\n";
  out << "martingale_step = " << format_real(c.martingale_step) << "\n";
  out << "residual_nodes = " << c.residual_nodes << "\n";
  out << "residual_bins = " << c.residual_bins << "\n";

  out << "\n[pde]\n";
  out << "M = " << c.grid_cells << "\n";
  out << "cfl_fraction = " << format_real(c.cfl_fraction) << "\n";

  out << "\n[output]\n";
  out << "profiles = " << (c.write_profiles ? "true" : "false") << "\n";
  out << "configurations = " << (c.write_configurations ? "true" : "false") << "\n";
  return out.str();
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::IoError, "cannot read config file " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_config(buf.str());
}

}  // namespace hydrolimit
