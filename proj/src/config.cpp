#include "beq/config.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>

#include "beq/plugins.hpp"

namespace beq {

namespace {

[[noreturn]] void syntax_error(const std::string& source, int line, int column, const std::string& msg) {
  std::ostringstream os;
  os << source << ":" << line << ":" << column << ": " << msg;
  throw Error(ErrorKind::Config, os.str());
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t");
  return s.substr(b, e - b + 1);
}

bool valid_name(const std::string& s) {
  if (s.empty()) return false;
  for (char c : s) {
    if (!(std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '.')) return false;
  }
  return true;
}

class ValueParser {
 public:
  ValueParser(std::string text, const std::string& source, int line, int column0)
      : text_(std::move(text)), source_(source), line_(line), col0_(column0) {}

  IniValue parse() {
    IniValue v = value();
    skip_ws();
    if (pos_ < text_.size()) fail("unexpected trailing characters");
    return v;
  }

 private:
  IniValue value() {
    skip_ws();
    IniValue v;
    v.line = line_;
    v.column = column();
    if (pos_ >= text_.size()) fail("missing value");
    const char c = text_[pos_];
    if (c == '[' || c == '(') {
      const char close = c == '[' ? ']' : ')';
      ++pos_;
      std::vector<IniValue> items;
      skip_ws();
      if (pos_ < text_.size() && text_[pos_] == close) {
        ++pos_;
        v.data = std::move(items);
        return v;
      }
      for (;;) {
        items.push_back(value());
        skip_ws();
        if (pos_ >= text_.size()) fail(std::string("unterminated list, expected '") + close + "'");
        if (text_[pos_] == ',') {
          ++pos_;
          continue;
        }
        if (text_[pos_] == close) {
          ++pos_;
          break;
        }
        fail(std::string("expected ',' or '") + close + "'");
      }
      v.data = std::move(items);
      return v;
    }
    if (c == '"') {
      const std::size_t end = text_.find('"', pos_ + 1);
      if (end == std::string::npos) fail("unterminated string");
      v.data = text_.substr(pos_ + 1, end - pos_ - 1);
      pos_ = end + 1;
      return v;
    }
    const std::size_t start = pos_;
    while (pos_ < text_.size() && text_[pos_] != ',' && text_[pos_] != ']' && text_[pos_] != ')' &&
           text_[pos_] != '[' && text_[pos_] != '(') {
      ++pos_;
    }
    const std::string token = trim(text_.substr(start, pos_ - start));
    if (token.empty()) fail("empty value");
    double x = 0.0;
    const char* first = token.data();
    const char* last = token.data() + token.size();
    if (*first == '+') ++first;
    const auto [ptr, ec] = std::from_chars(first, last, x);
    if (ec == std::errc() && ptr == last) {
      v.data = x;
    } else {
      v.data = token;
    }
    return v;
  }

  void skip_ws() {
    while (pos_ < text_.size() && (text_[pos_] == ' ' || text_[pos_] == '\t')) ++pos_;
  }
  int column() const { return col0_ + static_cast<int>(pos_); }
  [[noreturn]] void fail(const std::string& msg) const { syntax_error(source_, line_, column(), msg); }

  std::string text_;
  const std::string& source_;
  int line_;
  int col0_;
  std::size_t pos_ = 0;
};

// Position of the first comment character outside a quoted string.
std::size_t comment_start(const std::string& line) {
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    if (line[i] == '"') quoted = !quoted;
    if (!quoted && (line[i] == '#' || line[i] == ';')) return i;
  }
  return std::string::npos;
}

// ---------------------------------------------------------------------------
// Typed access with key-naming errors.

[[noreturn]] void key_error(const std::string& key, const std::string& reason) {
  throw Error(ErrorKind::Config, "key `" + key + "`: " + reason);
}

class Section {
 public:
  Section(IniDocument& doc, std::string name) : name_(std::move(name)) {
    auto it = doc.sections.find(name_);
    if (it != doc.sections.end()) entries_ = &it->second;
  }

  bool present() const { return entries_ != nullptr; }
  const std::string& name() const { return name_; }
  std::string qualified(const std::string& key) const { return name_ + "." + key; }

  bool has(const std::string& key) const { return entries_ && entries_->contains(key); }

  const IniValue& raw(const std::string& key) {
    if (!has(key)) key_error(qualified(key), "required key is missing");
    IniEntry& e = entries_->at(key);
    e.used = true;
    return e.value;
  }

  double number(const std::string& key) {
    const IniValue& v = raw(key);
    if (!v.is_number()) key_error(qualified(key), "expected a number" + at(v));
    const double x = std::get<double>(v.data);
    if (!std::isfinite(x)) key_error(qualified(key), "must be finite" + at(v));
    return x;
  }
  double number(const std::string& key, double fallback) { return has(key) ? number(key) : fallback; }

  long long integer(const std::string& key, long long lo, long long hi) {
    const double x = number(key);
    if (x != std::floor(x) || x < static_cast<double>(lo) || x > static_cast<double>(hi)) {
      key_error(qualified(key), "expected an integer in [" + std::to_string(lo) + ", " + std::to_string(hi) + "]" +
                                    at(raw(key)));
    }
    return static_cast<long long>(x);
  }

  std::string word(const std::string& key) {
    const IniValue& v = raw(key);
    if (!v.is_string()) key_error(qualified(key), "expected a word or quoted string" + at(v));
    return std::get<std::string>(v.data);
  }

  bool boolean(const std::string& key) {
    const std::string w = word(key);
    if (w == "true") return true;
    if (w == "false") return false;
    key_error(qualified(key), "expected true or false");
  }

  std::vector<double> numbers(const std::string& key) { return as_numbers(raw(key), qualified(key)); }

  std::vector<IniValue> list(const std::string& key) {
    const IniValue& v = raw(key);
    if (!v.is_list()) key_error(qualified(key), "expected a list" + at(v));
    return std::get<std::vector<IniValue>>(v.data);
  }

  void reject_unused() const {
    if (!entries_) return;
    for (const auto& [key, e] : *entries_) {
      if (!e.used) key_error(qualified(key), "unknown key (line " + std::to_string(e.line) + ")");
    }
  }

  static std::string at(const IniValue& v) {
    return " (line " + std::to_string(v.line) + ", column " + std::to_string(v.column) + ")";
  }

  static std::vector<double> as_numbers(const IniValue& v, const std::string& key) {
    if (v.is_number()) return {std::get<double>(v.data)};
    if (!v.is_list()) key_error(key, "expected a number or a list of numbers" + at(v));
    std::vector<double> out;
    for (const IniValue& item : std::get<std::vector<IniValue>>(v.data)) {
      if (!item.is_number()) key_error(key, "expected a number" + at(item));
      out.push_back(std::get<double>(item.data));
    }
    return out;
  }

  static Vec as_vec(const IniValue& v, const std::string& key) {
    const std::vector<double> xs = as_numbers(v, key);
    return Eigen::Map<const Vec>(xs.data(), static_cast<Eigen::Index>(xs.size()));
  }

  // A scalar is read as a 1x1 matrix.
  static Mat as_mat(const IniValue& v, const std::string& key) {
    if (v.is_number()) return Mat::Constant(1, 1, std::get<double>(v.data));
    if (!v.is_list()) key_error(key, "expected a matrix as a list of rows" + at(v));
    const auto& rows = std::get<std::vector<IniValue>>(v.data);
    if (rows.empty()) key_error(key, "matrix has no rows" + at(v));
    std::vector<std::vector<double>> r;
    for (const IniValue& row : rows) r.push_back(as_numbers(row, key));
    Mat m(static_cast<Eigen::Index>(r.size()), static_cast<Eigen::Index>(r.front().size()));
    for (std::size_t i = 0; i < r.size(); ++i) {
      if (r[i].size() != r.front().size()) key_error(key, "matrix rows differ in length" + at(v));
      for (std::size_t j = 0; j < r[i].size(); ++j) m(i, j) = r[i][j];
    }
    return m;
  }

 private:
  std::string name_;
  std::map<std::string, IniEntry>* entries_ = nullptr;
};

// ---------------------------------------------------------------------------
// Sections

BetweennessPreference read_preference(Section& s) {
  const std::string family = s.word("family");
  if (family == "weighted") {
    const double rho = s.number("rho");
    const double gamma = s.number("gamma");
    if (!(gamma > -1.0 && gamma <= 0.0)) key_error(s.qualified("gamma"), "weighted utility requires -1 < gamma <= 0");
    if (!(rho >= gamma && rho < gamma + 1.0)) {
      key_error(s.qualified("rho"), "weighted utility requires gamma <= rho < gamma + 1");
    }
    try {
      return BetweennessPreference::weighted(rho, gamma);
    } catch (const Error& e) {
      key_error(s.qualified("rho"), e.what());
    }
  }
  if (family == "mixed_crra") {
    const std::vector<double> gammas = s.numbers("gammas");
    const std::vector<double> weights = s.numbers("weights");
    try {
      return BetweennessPreference::mixed_crra(DiscreteMeasure::make(gammas, weights));
    } catch (const Error& e) {
      const std::string what = e.what();
      key_error(s.qualified(what.find("weight") != std::string::npos ? "weights" : "gammas"), what);
    }
  }
  if (family == "plugin") {
    const std::string name = s.word("name");
    std::map<std::string, double> params;
    try {
      for (const auto& [key, def] : find_generator(name).params) {
        if (s.has(key)) params[key] = s.number(key);
      }
    } catch (const Error& e) {
      key_error(s.qualified("name"), e.what());
    }
    s.reject_unused();
    try {
      return make_plugin_preference(name, params);
    } catch (const Error& e) {
      key_error(s.qualified("name"), e.what());
    }
  }
  key_error(s.qualified("family"), "expected weighted, mixed_crra or plugin, got '" + family + "'");
}

template <typename V, typename Conv>
TimeSeries<V> read_series(Section& s, const std::string& key, Conv conv) {
  const std::string nodes_key = key + ".nodes";
  if (!s.has(nodes_key)) return TimeSeries<V>(conv(s.raw(key), s.qualified(key)));
  const std::vector<double> times = s.numbers(nodes_key);
  const std::vector<IniValue> values = s.list(key);
  if (values.size() != times.size()) {
    key_error(s.qualified(key), "needs one value per entry of " + s.qualified(nodes_key));
  }
  std::vector<V> vs;
  for (const IniValue& v : values) vs.push_back(conv(v, s.qualified(key)));
  try {
    return TimeSeries<V>(times, std::move(vs));
  } catch (const Error& e) {
    key_error(s.qualified(nodes_key), e.what());
  }
}

double as_scalar(const IniValue& v, const std::string& key) {
  if (!v.is_number()) key_error(key, "expected a number" + Section::at(v));
  return std::get<double>(v.data);
}

MarketModel read_market(Section& s) {
  const double T = s.number("T");
  if (!(T > 0.0)) key_error(s.qualified("T"), "must be positive");
  TimeSeries<Vec> mu = read_series<Vec>(s, "mu", Section::as_vec);
  TimeSeries<Mat> sigma = read_series<Mat>(s, "sigma", Section::as_mat);
  const int d_inferred = static_cast<int>(mu.values().front().size());
  const int d = s.has("d") ? static_cast<int>(s.integer("d", 1, 10000)) : d_inferred;
  if (d != d_inferred) key_error(s.qualified("mu"), "has " + std::to_string(d_inferred) + " entries but d = " +
                                                        std::to_string(d));
  TimeSeries<double> r = s.has("r") ? read_series<double>(s, "r", as_scalar) : TimeSeries<double>(0.0);
  TimeSeries<double> R = s.has("R") ? read_series<double>(s, "R", as_scalar) : r;
  for (const auto& [name, series] : {std::pair{"mu", mu.times()}, std::pair{"sigma", sigma.times()},
                                     std::pair{"r", r.times()}, std::pair{"R", R.times()}}) {
    for (double t : series) {
      if (t < 0.0 || t > T) key_error(s.qualified(std::string(name) + ".nodes"), "nodes must lie in [0, T]");
    }
  }
  try {
    return MarketModel(T, d, std::move(mu), std::move(sigma), std::move(r), std::move(R));
  } catch (const Error& e) {
    const std::string what = e.what();
    std::string key = "mu";
    if (what.find("market.R") != std::string::npos) key = "R";
    if (what.find("sigma") != std::string::npos) key = "sigma";
    key_error(s.qualified(key), what);
  }
}

ConvexSet read_set(IniDocument& doc, const std::string& name, int d, std::set<std::string>& visiting,
                   std::set<std::string>& used_sections) {
  if (visiting.contains(name)) key_error(name + ".members", "cyclic member reference");
  visiting.insert(name);
  used_sections.insert(name);
  Section s(doc, name);
  if (!s.present()) throw Error(ErrorKind::Config, "missing section [" + name + "]");
  const std::string type = s.word("type");
  auto vec = [&](const std::string& key) {
    Vec v = Section::as_vec(s.raw(key), s.qualified(key));
    if (v.size() != d) key_error(s.qualified(key), "expected " + std::to_string(d) + " entries");
    return v;
  };
  auto build = [&]() -> ConvexSet {
    if (type == "full") return ConvexSet::full_space(d);
    if (type == "orthant") return ConvexSet::nonneg_orthant(d);
    if (type == "box") return ConvexSet::box(vec("lo"), vec("hi"));
    if (type == "ball") return ConvexSet::ball(vec("center"), s.number("radius"));
    if (type == "halfspace") return ConvexSet::halfspace(vec("normal"), s.number("offset"));
    if (type == "intersection") {
      std::vector<ConvexSet> members;
      for (const IniValue& m : s.list("members")) {
        if (!m.is_string()) key_error(s.qualified("members"), "expected member section names" + Section::at(m));
        members.push_back(read_set(doc, "constraint." + std::get<std::string>(m.data), d, visiting, used_sections));
      }
      return ConvexSet::intersection(members, vec("witness"));
    }
    key_error(s.qualified("type"), "expected full, orthant, box, ball, halfspace or intersection, got '" + type + "'");
  };
  try {
    ConvexSet set = build();
    s.reject_unused();
    visiting.erase(name);
    return set;
  } catch (const Error& e) {
    const std::string what = e.what();
    if (what.rfind("key `", 0) == 0) throw;
    key_error(s.qualified("type"), what);
  }
}

Problem read_problem(Section& s, const std::string& key) {
  const std::string w = s.word(key);
  if (w == "constrained") return Problem::Constrained;
  if (w == "borrowing") return Problem::Borrowing;
  key_error(s.qualified(key), "expected constrained or borrowing, got '" + w + "'");
}

void read_solver(Section& s, SolverSettings& out) {
  if (s.has("problem")) out.problem = read_problem(s, "problem");
  if (s.has("n_steps")) out.n_steps = static_cast<int>(s.integer("n_steps", 1, 100000000));
  if (s.has("y_max")) {
    out.y_max = s.number("y_max");
    if (!(out.y_max > 0.0)) key_error(s.qualified("y_max"), "must be positive");
  }
  if (s.has("table_nodes")) out.table_nodes = static_cast<int>(s.integer("table_nodes", 3, 10000000));
  if (s.has("quad_order")) out.quad_order = static_cast<int>(s.integer("quad_order", 8, 200));
}

std::uint64_t read_seed(Section& s, const std::string& key) {
  const IniValue& v = s.raw(key);
  if (v.is_number()) {
    const double x = std::get<double>(v.data);
    if (x < 0.0 || x != std::floor(x)) key_error(s.qualified(key), "expected a nonnegative integer");
    if (x < 9007199254740992.0) return static_cast<std::uint64_t>(x);
  }
  key_error(s.qualified(key), "seed must be an integer below 2^53 in the config; use --seed for wider values");
}

void read_verify(Section& s, VerifySettings& out, double T) {
  if (s.has("t_values")) out.t_values = s.numbers("t_values");
  for (double t : out.t_values) {
    if (t < 0.0 || t > T) key_error(s.qualified("t_values"), "entries must lie in [0, T]");
  }
  if (s.has("x_values")) out.x_values = s.numbers("x_values");
  for (double x : out.x_values) {
    if (!(x > 0.0)) key_error(s.qualified("x_values"), "entries must be positive");
  }
  if (s.has("n_paths")) out.sim.n_paths = static_cast<int>(s.integer("n_paths", 1000, 100000000));
  if (s.has("seed")) out.sim.seed = read_seed(s, "seed");
  if (s.has("scheme")) {
    try {
      out.sim.scheme = scheme_from_string(s.word("scheme"));
    } catch (const Error& e) {
      key_error(s.qualified("scheme"), e.what());
    }
  }
  if (s.has("n_time_steps")) out.sim.n_time_steps = static_cast<int>(s.integer("n_time_steps", 1, 1000000));
  if (s.has("eps_ladder")) {
    out.eps_ladder = s.numbers("eps_ladder");
    for (std::size_t i = 0; i < out.eps_ladder.size(); ++i) {
      if (!(out.eps_ladder[i] > 0.0) || (i > 0 && !(out.eps_ladder[i] < out.eps_ladder[i - 1]))) {
        key_error(s.qualified("eps_ladder"), "must be positive and strictly decreasing");
      }
    }
    if (out.eps_ladder.empty()) key_error(s.qualified("eps_ladder"), "must not be empty");
  }
  if (s.has("alternatives")) {
    for (const IniValue& a : s.list("alternatives")) out.alternatives.push_back(Section::as_vec(a, s.qualified("alternatives")));
  }
  if (s.has("candidate_scale")) {
    out.candidate_scale = s.number("candidate_scale");
    if (!(out.candidate_scale > 0.0)) key_error(s.qualified("candidate_scale"), "must be positive");
  }
  if (s.has("solution")) out.solution = s.word("solution");
  if (s.has("t")) {
    out.t = s.number("t");
    if (!(out.t >= 0.0 && out.t < T)) key_error(s.qualified("t"), "must lie in [0, T)");
  }
  if (s.has("x")) {
    out.x = s.number("x");
    if (!(out.x > 0.0)) key_error(s.qualified("x"), "must be positive");
  }
}

}  // namespace

IniDocument parse_ini(const std::string& text, const std::string& source) {
  IniDocument doc;
  doc.source = source;
  std::string current;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const std::size_t cut = comment_start(line);
    const std::string body = cut == std::string::npos ? line : line.substr(0, cut);
    const std::string t = trim(body);
    if (t.empty()) continue;
    const int indent = static_cast<int>(body.find_first_not_of(" \t")) + 1;
    if (t.front() == '[') {
      if (t.back() != ']') syntax_error(source, lineno, indent, "section header must end with ']'");
      current = trim(t.substr(1, t.size() - 2));
      if (!valid_name(current)) syntax_error(source, lineno, indent + 1, "invalid section name '" + current + "'");
      if (doc.sections.contains(current)) syntax_error(source, lineno, indent, "duplicate section [" + current + "]");
      doc.sections[current];
      doc.section_lines[current] = lineno;
      continue;
    }
    const std::size_t eq = body.find('=');
    if (eq == std::string::npos) syntax_error(source, lineno, indent, "expected 'key = value'");
    const std::string key = trim(body.substr(0, eq));
    if (!valid_name(key)) syntax_error(source, lineno, indent, "invalid key '" + key + "'");
    if (current.empty()) syntax_error(source, lineno, indent, "key '" + key + "' appears before any section");
    auto& sec = doc.sections[current];
    if (sec.contains(key)) syntax_error(source, lineno, indent, "duplicate key '" + key + "' in [" + current + "]");
    ValueParser vp(body.substr(eq + 1), source, lineno, static_cast<int>(eq) + 2);
    sec[key] = IniEntry{vp.parse(), lineno, false};
  }
  return doc;
}

RunConfig parse_config_string(const std::string& text, const std::string& source,
                              const std::filesystem::path& base_dir) {
  IniDocument doc = parse_ini(text, source);
  RunConfig cfg;
  cfg.source = source;
  cfg.base_dir = base_dir;

  static const std::set<std::string> known{"preference", "market", "constraint", "solver", "verify", "output"};
  for (const auto& [name, entries] : doc.sections) {
    if (!known.contains(name) && name.rfind("constraint.", 0) != 0) {
      throw Error(ErrorKind::Config,
                  source + ":" + std::to_string(doc.section_lines[name]) + ": unknown section [" + name + "]");
    }
  }

  Section pref(doc, "preference");
  if (pref.present()) {
    cfg.preference = read_preference(pref);
    pref.reject_unused();
  }
  Section market(doc, "market");
  if (market.present()) {
    cfg.market = read_market(market);
    market.reject_unused();
  }
  std::set<std::string> used_sections;
  if (doc.sections.contains("constraint")) {
    if (!cfg.market) throw Error(ErrorKind::Config, "section [constraint] needs a [market] section for its dimension");
    std::set<std::string> visiting;
    cfg.constraint = read_set(doc, "constraint", cfg.market->d(), visiting, used_sections);
  }
  for (const auto& [name, entries] : doc.sections) {
    if (name.rfind("constraint.", 0) == 0 && !used_sections.contains(name)) {
      throw Error(ErrorKind::Config, "section [" + name + "] is not referenced by any constraint members list");
    }
  }
  Section solver(doc, "solver");
  read_solver(solver, cfg.solver);
  solver.reject_unused();
  Section verify(doc, "verify");
  read_verify(verify, cfg.verify, cfg.market ? cfg.market->T() : std::numeric_limits<double>::infinity());
  verify.reject_unused();
  Section output(doc, "output");
  if (output.has("directory")) cfg.output.directory = output.word("directory");
  if (output.has("emit_plots")) cfg.output.emit_plots = output.boolean("emit_plots");
  output.reject_unused();
  return cfg;
}

RunConfig parse_config(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::Io, "cannot open config file " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config_string(ss.str(), path.string(), path.parent_path().empty() ? "." : path.parent_path());
}

}  // namespace beq
