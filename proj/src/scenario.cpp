#include "dnes/scenario.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <numbers>
#include <regex>
#include <set>
#include <sstream>

#include "dnes/interval_set.hpp"

namespace dnes {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : s) {
    if (c == sep) {
      out.push_back(trim(cur));
      cur.clear();
    } else {
      cur += c;
    }
  }
  out.push_back(trim(cur));
  return out;
}

std::string join(const std::vector<std::string>& parts, const std::string& sep) {
  std::string out;
  for (std::size_t i = 0; i < parts.size(); ++i) out += (i ? sep : "") + parts[i];
  return out;
}

std::string fmt(double v) { return format_number(v, 17); }

std::string fmt_list(const std::vector<double>& v) {
  std::vector<std::string> parts;
  for (double x : v) parts.push_back(fmt(x));
  return join(parts, ", ");
}

std::string fmt_vec(const Vectord& v) { return fmt_list(std::vector<double>(v.data(), v.data() + v.size())); }

std::string fmt_mat(const Matrixd& m) {
  std::vector<std::string> rows;
  for (Eigen::Index r = 0; r < m.rows(); ++r) rows.push_back(fmt_vec(m.row(r).transpose()));
  return join(rows, "; ");
}

std::string fmt_indices(const std::vector<int>& v) {
  std::vector<std::string> parts;
  for (int i : v) parts.push_back(std::to_string(i + 1));
  return join(parts, ", ");
}

double parse_atom(const std::string& text, const std::string& whole) {
  std::string t = trim(text);
  double sign = 1;
  if (!t.empty() && (t[0] == '-' || t[0] == '+')) {
    if (t[0] == '-') sign = -1;
    t = trim(t.substr(1));
  }
  if (t == "inf") return sign * kInf;
  if (t == "pi") return sign * std::numbers::pi;
  if (t.empty() || t[0] == '-' || t[0] == '+') throw ParseError("bad number '" + whole + "'");
  std::size_t used = 0;
  double v = 0;
  try {
    v = std::stod(t, &used);
  } catch (const std::exception&) {
    throw ParseError("bad number '" + whole + "'");
  }
  if (used != t.size() || std::isnan(v)) throw ParseError("bad number '" + whole + "'");
  return sign * v;
}

struct Entry {
  std::string key;
  std::string value;
  int line = 0;
};

struct Section {
  std::string name;
  int line = 0;
  std::vector<Entry> entries;
};

std::string where(int line) { return line > 0 ? "line " + std::to_string(line) : "override"; }

std::vector<Section> lex(const std::string& text, std::vector<std::string>& errors) {
  std::vector<Section> sections;
  std::istringstream in(text);
  std::string raw;
  int line = 0;
  while (std::getline(in, raw)) {
    ++line;
    const auto hash = raw.find('#');
    const std::string s = trim(hash == std::string::npos ? raw : raw.substr(0, hash));
    if (s.empty()) continue;
    if (s.front() == '[') {
      if (s.back() != ']') {
        errors.push_back(where(line) + ": unterminated section header");
        continue;
      }
      const std::string name = trim(s.substr(1, s.size() - 2));
      const bool dup = std::any_of(sections.begin(), sections.end(), [&](const Section& sec) { return sec.name == name; });
      if (dup) errors.push_back(where(line) + ": section [" + name + "] appears twice");
      sections.push_back({name, line, {}});
      continue;
    }
    const auto eq = s.find('=');
    if (eq == std::string::npos) {
      errors.push_back(where(line) + ": expected 'key = value'");
      continue;
    }
    if (sections.empty()) {
      errors.push_back(where(line) + ": key outside any section");
      continue;
    }
    Entry e{trim(s.substr(0, eq)), trim(s.substr(eq + 1)), line};
    auto& entries = sections.back().entries;
    if (std::any_of(entries.begin(), entries.end(), [&](const Entry& o) { return o.key == e.key; }))
      errors.push_back(where(line) + ": key '" + e.key + "' repeated in [" + sections.back().name + "]");
    entries.push_back(e);
  }
  return sections;
}

void apply_override(std::vector<Section>& sections, const std::string& text, std::vector<std::string>& errors) {
  const auto eq = text.find('=');
  const std::string lhs = trim(text.substr(0, eq));
  const auto dot = lhs.rfind('.');
  if (eq == std::string::npos || dot == std::string::npos || dot == 0 || dot + 1 == lhs.size()) {
    errors.push_back("override '" + text + "': expected section.key=value");
    return;
  }
  const std::string name = lhs.substr(0, dot), key = lhs.substr(dot + 1), value = trim(text.substr(eq + 1));
  auto sec = std::find_if(sections.begin(), sections.end(), [&](const Section& s) { return s.name == name; });
  if (sec == sections.end()) {
    sections.push_back({name, 0, {}});
    sec = sections.end() - 1;
  }
  for (auto& e : sec->entries)
    if (e.key == key) {
      e.value = value;
      e.line = 0;
      return;
    }
  sec->entries.push_back({key, value, 0});
}

// Typed access to one section; every key read is marked as known.
class Reader {
 public:
  Reader(const Section& sec, std::vector<std::string>& errors) : sec_(sec), errors_(errors) {}

  const Entry* find(const std::string& key) {
    for (const auto& e : sec_.entries)
      if (e.key == key) {
        used_.insert(key);
        return &e;
      }
    return nullptr;
  }

  void fail(const Entry& e, const std::string& msg) {
    errors_.push_back("[" + sec_.name + "] " + where(e.line) + ": " + e.key + ": " + msg);
  }
  void fail(const std::string& msg) { errors_.push_back("[" + sec_.name + "] " + msg); }

  template <typename T, typename Fn>
  std::optional<T> get(const std::string& key, Fn parse, bool required = false) {
    const Entry* e = find(key);
    if (!e) {
      if (required) fail("missing required key '" + key + "'");
      return std::nullopt;
    }
    try {
      return parse(e->value);
    } catch (const std::exception& ex) {
      fail(*e, ex.what());
      return std::nullopt;
    }
  }

  std::optional<double> scalar(const std::string& key, bool required = false) {
    return get<double>(key, [](const std::string& v) { return parse_scalar(v); }, required);
  }

  std::optional<int> integer(const std::string& key, bool required = false) {
    return get<int>(key, [](const std::string& v) {
      const double x = parse_scalar(v);
      if (x != std::floor(x) || std::abs(x) > 1e9) throw ParseError("expected an integer, got '" + v + "'");
      return int(x);
    }, required);
  }

  std::optional<std::vector<double>> list(const std::string& key, bool required = false) {
    return get<std::vector<double>>(key, [](const std::string& v) {
      std::vector<double> out;
      if (trim(v).empty()) return out;
      for (const auto& part : split(v, ',')) out.push_back(parse_scalar(part));
      return out;
    }, required);
  }

  std::optional<Matrixd> matrix(const std::string& key, bool required = false) {
    return get<Matrixd>(key, [](const std::string& v) {
      std::vector<std::vector<double>> rows;
      for (const auto& r : split(v, ';')) {
        std::vector<double> row;
        for (const auto& part : split(r, ',')) row.push_back(parse_scalar(part));
        rows.push_back(row);
      }
      Matrixd m(Eigen::Index(rows.size()), Eigen::Index(rows.front().size()));
      for (std::size_t i = 0; i < rows.size(); ++i) {
        if (rows[i].size() != rows.front().size()) throw ParseError("rows have different lengths");
        for (std::size_t j = 0; j < rows[i].size(); ++j) m(Eigen::Index(i), Eigen::Index(j)) = rows[i][j];
      }
      return m;
    }, required);
  }

  std::optional<std::string> word(const std::string& key, const std::vector<std::string>& allowed, bool required = false) {
    return get<std::string>(key, [&](const std::string& v) {
      if (std::find(allowed.begin(), allowed.end(), v) == allowed.end())
        throw ParseError("expected one of " + join(allowed, "|") + ", got '" + v + "'");
      return v;
    }, required);
  }

  // 1-based player list converted to 0-based
  std::optional<std::vector<int>> players(const std::string& key, int n, bool required = false) {
    return get<std::vector<int>>(key, [n](const std::string& v) {
      std::vector<int> out;
      if (trim(v).empty()) return out;
      for (const auto& part : split(v, ',')) {
        const double x = parse_scalar(part);
        if (x != std::floor(x) || x < 1 || x > n)
          throw ParseError("player index '" + part + "' outside 1.." + std::to_string(n));
        out.push_back(int(x) - 1);
      }
      return out;
    }, required);
  }

  void reject_unused(const std::string& reason) {
    for (const auto& e : sec_.entries)
      if (!used_.count(e.key)) fail(e, reason);
  }
  void finish() { reject_unused("unknown key"); }

  const Section& section() const { return sec_; }

 private:
  const Section& sec_;
  std::vector<std::string>& errors_;
  std::set<std::string> used_;
};

std::vector<CostTerm> parse_cost(const std::string& text) {
  std::vector<std::string> pieces;
  std::string cur;
  int depth = 0;
  for (char c : text) {
    if (c == '(') ++depth;
    if (c == ')') --depth;
    if (c == '+' && depth == 0) {
      pieces.push_back(trim(cur));
      cur.clear();
    } else {
      cur += c;
    }
  }
  pieces.push_back(trim(cur));
  std::vector<CostTerm> terms;
  for (const auto& p : pieces) {
    const auto open = p.find('(');
    if (open == std::string::npos || p.back() != ')') throw ParseError("expected poly(...) or exp(...), got '" + p + "'");
    const std::string name = trim(p.substr(0, open));
    CostTerm term;
    for (const auto& a : split(p.substr(open + 1, p.size() - open - 2), ',')) term.args.push_back(parse_scalar(a));
    if (name == "poly") {
      term.kind = CostTerm::Kind::poly;
    } else if (name == "exp") {
      term.kind = CostTerm::Kind::exp;
      if (term.args.size() != 2) throw ParseError("exp takes (scale, rate)");
    } else {
      throw ParseError("unknown cost term '" + name + "'");
    }
    terms.push_back(term);
  }
  return terms;
}

std::string fmt_cost(const std::vector<CostTerm>& terms) {
  std::vector<std::string> parts;
  for (const auto& t : terms)
    parts.push_back(std::string(t.kind == CostTerm::Kind::poly ? "poly(" : "exp(") + fmt_list(t.args) + ")");
  return join(parts, " + ");
}

// keys named prefix<n>, n = 1..count, with no gaps
std::map<int, const Entry*> indexed(const Section& sec, const std::string& prefix) {
  std::map<int, const Entry*> out;
  const std::regex re(prefix + "([0-9]+)");
  std::smatch m;
  for (const auto& e : sec.entries)
    if (std::regex_match(e.key, m, re)) out[std::stoi(m[1])] = &e;
  return out;
}

void read_game(const Section& sec, GameSpec& g, std::vector<std::string>& errors) {
  Reader r(sec, errors);
  const auto type = r.word("type", {"quadratic", "duopoly", "aggregative"}, true);
  if (!type) {
    r.reject_unused("unknown key");
    return;
  }
  if (*type == "duopoly") {
    g.type = GameSpec::Type::duopoly;
    g.players = 2;
    g.demand = r.scalar("demand", true).value_or(0);
    g.preference = r.scalar("preference", true).value_or(0);
    if (auto m = r.list("marginal_costs", true)) {
      if (m->size() != 2) r.fail("marginal_costs needs two entries");
      else g.marginal_costs = Eigen::Map<const Vectord>(m->data(), 2);
    }
    if (!(g.preference > 0)) r.fail("preference must be positive");
    r.finish();
    return;
  }
  if (*type == "quadratic") {
    g.type = GameSpec::Type::quadratic;
    const auto Qs = indexed(sec, "Q");
    g.players = int(Qs.size());
    if (g.players < 2) r.fail("quadratic game needs Q1..QN with N >= 2");
    for (int i = 1; i <= g.players; ++i) {
      const std::string idx = std::to_string(i);
      auto Q = r.matrix("Q" + idx, true);
      auto b = r.list("b" + idx, true);
      auto p = r.scalar("p" + idx);
      if (Q && (Q->rows() != g.players || Q->cols() != g.players))
        r.fail("Q" + idx + " must be " + std::to_string(g.players) + "x" + std::to_string(g.players));
      if (b && int(b->size()) != g.players) r.fail("b" + idx + " needs " + std::to_string(g.players) + " entries");
      g.Q.push_back(Q.value_or(Matrixd::Zero(g.players, g.players)));
      g.b.push_back(b && int(b->size()) == g.players ? Vectord(Eigen::Map<const Vectord>(b->data(), g.players))
                                                    : Vectord::Zero(g.players));
      g.p.push_back(p.value_or(0));
    }
    r.finish();
    return;
  }
  g.type = GameSpec::Type::aggregative;
  const auto cs = indexed(sec, "c");
  g.players = int(cs.size());
  if (g.players < 2) r.fail("aggregative game needs c1..cN with N >= 2");
  for (int i = 1; i <= g.players; ++i)
    g.costs.push_back(r.get<std::vector<CostTerm>>("c" + std::to_string(i), parse_cost, true).value_or(std::vector<CostTerm>{}));
  if (auto a = r.matrix("alpha", true)) {
    if (a->rows() != g.players || a->cols() != g.players) r.fail("alpha must be square with one row per player");
    else g.alpha = *a;
  }
  if (auto k = r.list("kappa", true)) {
    if (int(k->size()) != g.players) r.fail("kappa needs one entry per player");
    else g.kappa = Eigen::Map<const Vectord>(k->data(), g.players);
  }
  r.finish();
}

void read_deceiver(const Section& sec, int player, int n, DeceiverSpec& d, std::vector<std::string>& errors) {
  Reader r(sec, errors);
  d.player = player;
  d.targets = r.players("targets", n, true).value_or(std::vector<int>{});
  if (std::find(d.targets.begin(), d.targets.end(), player) != d.targets.end()) r.fail("a deceiver cannot target itself");
  if (d.targets.empty()) r.fail("targets must name at least one player");
  if (auto ph = r.list("phase_errors")) {
    if (ph->size() != d.targets.size()) r.fail("phase_errors needs one entry per target");
    d.phase_errors = *ph;
  }
  const auto policy = r.word("policy", {"fixed", "integral", "phase_lead", "price_reference"}).value_or("integral");
  d.gain_sign = r.scalar("gain_sign").value_or(1);
  if (!(std::isfinite(d.gain_sign) && d.gain_sign != 0)) r.fail("gain_sign must be finite and nonzero");
  d.reference = r.scalar("reference").value_or(0);
  if (policy == "fixed") {
    d.policy = PolicyKind::fixed;
    d.delta = r.scalar("delta", true).value_or(0);
  } else {
    d.policy = policy == "integral" ? PolicyKind::integral
               : policy == "phase_lead" ? PolicyKind::phase_lead
                                        : PolicyKind::price_reference;
    d.epsilon = r.scalar("epsilon", true).value_or(0);
    d.delta0 = r.scalar("delta0").value_or(0);
    if (d.policy == PolicyKind::phase_lead) {
      d.G1 = r.scalar("G1", true).value_or(1);
      d.G2 = r.scalar("G2", true).value_or(1);
      if (!(d.G2 >= d.G1 && d.G1 > 0)) r.fail("phase lead needs G2 >= G1 > 0");
    }
    if (d.policy == PolicyKind::price_reference) d.u_ref = r.scalar("u_ref", true).value_or(0);
  }
  r.reject_unused("unknown key or not used by policy " + policy);
}

void read_probe(const Section& sec, int n, ProbeConfig& p, std::vector<std::string>& errors) {
  Reader r(sec, errors);
  p.a = r.scalar("a", true).value_or(p.a);
  p.k = r.scalar("k", true).value_or(p.k);
  p.omega = r.scalar("omega", true).value_or(p.omega);
  const auto bars = r.get<std::vector<Rational>>("omega_bar", [](const std::string& v) {
    std::vector<Rational> out;
    for (const auto& part : split(v, ',')) out.push_back(Rational::parse(part));
    return out;
  }, true);
  p.phases = r.list("phases").value_or(std::vector<double>{});
  r.finish();
  if (!(p.a > 0) || !(p.k > 0) || !(p.omega > 0)) r.fail("a, k and omega must be positive");
  if (!bars) return;
  p.omega_bar = *bars;
  if (int(p.omega_bar.size()) != n) {
    r.fail("omega_bar needs one entry per player");
    return;
  }
  try {
    p.validate(n);
  } catch (const std::exception& ex) {
    r.fail(ex.what());
  }
}

void read_sim(const Section& sec, int n, SimSpec& s, std::vector<std::string>& errors) {
  Reader r(sec, errors);
  s.averaged = r.word("mode", {"full", "averaged"}).value_or("full") == "averaged";
  s.t_final = r.scalar("t_final").value_or(s.t_final);
  if (auto u = r.list("u0")) {
    if (int(u->size()) != n) r.fail("u0 needs one entry per player");
    else s.u0 = Vectord(Eigen::Map<const Vectord>(u->data(), n));
  }
  s.output_interval = r.scalar("output_interval").value_or(s.output_interval);
  s.samples_per_period = r.integer("samples_per_period").value_or(s.samples_per_period);
  s.blowup = r.scalar("blowup").value_or(s.blowup);
  s.window_divisions = r.integer("window_divisions").value_or(s.window_divisions);
  s.averaged_step = r.scalar("averaged_step").value_or(s.averaged_step);
  r.finish();
  if (!(s.t_final > 0) || !std::isfinite(s.t_final)) r.fail("t_final must be positive and finite");
  if (s.samples_per_period < 4) r.fail("samples_per_period must be at least 4");
  if (s.window_divisions < 1) r.fail("window_divisions must be positive");
  if (!(s.blowup > 0)) r.fail("blowup must be positive");
  if (!(s.averaged_step > 0)) r.fail("averaged_step must be positive");
}

void read_analysis(const Section& sec, int n, int deceivers, AnalysisSpec& a, std::vector<std::string>& errors) {
  Reader r(sec, errors);
  if (auto box = r.list("delta_box")) {
    if (box->size() != 2 || !((*box)[0] < (*box)[1])) r.fail("delta_box needs two increasing values");
    else {
      a.delta_lower = (*box)[0];
      a.delta_upper = (*box)[1];
    }
  }
  a.benevolence_members = r.players("benevolence_members", n).value_or(std::vector<int>{});
  if (auto m = r.list("mutual_delta")) {
    if (int(m->size()) != deceivers) r.fail("mutual_delta needs one entry per deceiver");
    else a.mutual_delta = Vectord(Eigen::Map<const Vectord>(m->data(), deceivers));
  }
  a.dne_deltas = r.list("dne_deltas").value_or(std::vector<double>{});
  r.finish();
}

void read_sweep(const Section& sec, SweepSpec& s, std::vector<std::string>& errors) {
  Reader r(sec, errors);
  s.parameter = r.get<std::string>("parameter", [](const std::string& v) {
                   const auto dot = v.rfind('.');
                   if (dot == std::string::npos || dot == 0 || dot + 1 == v.size())
                     throw ParseError("expected section.key, got '" + v + "'");
                   return v;
                 }, true).value_or("");
  s.from = r.scalar("from", true).value_or(0);
  s.to = r.scalar("to", true).value_or(0);
  s.step = r.scalar("step", true).value_or(0);
  r.finish();
  if (!(s.step > 0) || !(s.to >= s.from) || !std::isfinite(s.to) || !std::isfinite(s.from))
    r.fail("sweep needs finite from <= to and a positive step");
}

}  // namespace

ScenarioError::ScenarioError(std::vector<std::string> violations)
    : ParseError(join(violations, "\n")), violations_(std::move(violations)) {}

std::string to_string(GameSpec::Type type) {
  switch (type) {
    case GameSpec::Type::quadratic: return "quadratic";
    case GameSpec::Type::duopoly: return "duopoly";
    case GameSpec::Type::aggregative: return "aggregative";
  }
  return "quadratic";
}

std::string to_string(PolicyKind kind) {
  switch (kind) {
    case PolicyKind::fixed: return "fixed";
    case PolicyKind::integral: return "integral";
    case PolicyKind::phase_lead: return "phase_lead";
    case PolicyKind::price_reference: return "price_reference";
  }
  return "integral";
}

double parse_scalar(const std::string& text) {
  const std::string t = trim(text);
  if (t.empty()) throw ParseError("empty number");
  // skip a leading sign and exponent signs when looking for the operator
  for (std::size_t i = 1; i < t.size(); ++i) {
    if (t[i] != '/' && t[i] != '*') continue;
    const double lhs = parse_atom(t.substr(0, i), t), rhs = parse_atom(t.substr(i + 1), t);
    if (t[i] == '*') return lhs * rhs;
    if (rhs == 0) throw ParseError("division by zero in '" + t + "'");
    return lhs / rhs;
  }
  return parse_atom(t, t);
}

std::vector<double> SweepSpec::values() const {
  std::vector<double> out;
  const auto n = static_cast<long>(std::floor((to - from) / step + 1e-9));
  for (long i = 0; i <= n; ++i) out.push_back(from + double(i) * step);
  return out;
}

Scenario parse_scenario(const std::string& text, const std::vector<std::string>& overrides) {
  std::vector<std::string> errors;
  auto sections = lex(text, errors);
  for (const auto& o : overrides) apply_override(sections, o, errors);

  Scenario scn;
  const auto game = std::find_if(sections.begin(), sections.end(), [](const Section& s) { return s.name == "game"; });
  if (game == sections.end()) {
    errors.push_back("missing required section [game]");
    throw ScenarioError(errors);
  }
  read_game(*game, scn.game, errors);
  const int n = scn.game.players;

  const std::regex dec_re("deceiver\\.([0-9]+)");
  std::smatch m;
  for (const auto& sec : sections) {
    if (!std::regex_match(sec.name, m, dec_re)) continue;
    const int player = std::stoi(m[1]);
    if (player < 1 || player > n) {
      errors.push_back(where(sec.line) + ": [" + sec.name + "] names a player outside 1.." + std::to_string(n));
      continue;
    }
    DeceiverSpec d;
    read_deceiver(sec, player - 1, n, d, errors);
    scn.deceivers.push_back(d);
  }
  std::sort(scn.deceivers.begin(), scn.deceivers.end(),
            [](const DeceiverSpec& a, const DeceiverSpec& b) { return a.player < b.player; });
  if (scn.game.type == GameSpec::Type::aggregative && scn.deceivers.size() > 1)
    errors.push_back("aggregative scenarios support one deceiver");

  for (const auto& sec : sections) {
    if (sec.name == "game" || std::regex_match(sec.name, m, dec_re)) continue;
    if (sec.name == "probe") {
      ProbeConfig p;
      read_probe(sec, n, p, errors);
      scn.probe = p;
    } else if (sec.name == "sim") {
      read_sim(sec, n, scn.sim, errors);
    } else if (sec.name == "analysis") {
      read_analysis(sec, n, int(scn.deceivers.size()), scn.analysis, errors);
    } else if (sec.name == "sweep") {
      SweepSpec s;
      read_sweep(sec, s, errors);
      scn.sweep = s;
    } else {
      errors.push_back(where(sec.line) + ": unknown section [" + sec.name + "]");
    }
  }
  for (std::size_t i = 0; i < scn.analysis.benevolence_members.size(); ++i)
    if (scn.deceivers.size() == 1 && scn.analysis.benevolence_members[i] == scn.deceivers[0].player)
      errors.push_back("[analysis] benevolence_members must not include the deceiver");
  if (!errors.empty()) throw ScenarioError(errors);
  return scn;
}

Scenario load_scenario(const std::string& path, const std::vector<std::string>& overrides) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open scenario file '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  Scenario scn = parse_scenario(ss.str(), overrides);
  auto name = path.substr(path.find_last_of('/') == std::string::npos ? 0 : path.find_last_of('/') + 1);
  if (const auto dot = name.rfind('.'); dot != std::string::npos && dot > 0) name = name.substr(0, dot);
  scn.name = name;
  return scn;
}

std::string serialize(const Scenario& scn) {
  std::ostringstream os;
  const auto& g = scn.game;
  os << "[game]\ntype = " << to_string(g.type) << "\n";
  switch (g.type) {
    case GameSpec::Type::quadratic:
      for (int i = 0; i < g.players; ++i) {
        const std::string idx = std::to_string(i + 1);
        os << "Q" << idx << " = " << fmt_mat(g.Q[std::size_t(i)]) << "\n";
        os << "b" << idx << " = " << fmt_vec(g.b[std::size_t(i)]) << "\n";
        os << "p" << idx << " = " << fmt(g.p[std::size_t(i)]) << "\n";
      }
      break;
    case GameSpec::Type::duopoly:
      os << "demand = " << fmt(g.demand) << "\npreference = " << fmt(g.preference)
         << "\nmarginal_costs = " << fmt_vec(g.marginal_costs) << "\n";
      break;
    case GameSpec::Type::aggregative:
      for (int i = 0; i < g.players; ++i) os << "c" << i + 1 << " = " << fmt_cost(g.costs[std::size_t(i)]) << "\n";
      os << "alpha = " << fmt_mat(g.alpha) << "\nkappa = " << fmt_vec(g.kappa) << "\n";
      break;
  }
  for (const auto& d : scn.deceivers) {
    os << "\n[deceiver." << d.player + 1 << "]\ntargets = " << fmt_indices(d.targets) << "\n";
    if (!d.phase_errors.empty()) os << "phase_errors = " << fmt_list(d.phase_errors) << "\n";
    os << "policy = " << to_string(d.policy) << "\ngain_sign = " << fmt(d.gain_sign) << "\nreference = "
       << fmt(d.reference) << "\n";
    if (d.policy == PolicyKind::fixed) {
      os << "delta = " << fmt(d.delta) << "\n";
      continue;
    }
    os << "epsilon = " << fmt(d.epsilon) << "\ndelta0 = " << fmt(d.delta0) << "\n";
    if (d.policy == PolicyKind::phase_lead) os << "G1 = " << fmt(d.G1) << "\nG2 = " << fmt(d.G2) << "\n";
    if (d.policy == PolicyKind::price_reference) os << "u_ref = " << fmt(d.u_ref) << "\n";
  }
  if (scn.probe) {
    const auto& p = *scn.probe;
    std::vector<std::string> bars;
    for (const auto& r : p.omega_bar) bars.push_back(r.to_string());
    os << "\n[probe]\na = " << fmt(p.a) << "\nk = " << fmt(p.k) << "\nomega = " << fmt(p.omega)
       << "\nomega_bar = " << join(bars, ", ") << "\n";
    if (!p.phases.empty()) os << "phases = " << fmt_list(p.phases) << "\n";
  }
  const auto& s = scn.sim;
  os << "\n[sim]\nmode = " << (s.averaged ? "averaged" : "full") << "\nt_final = " << fmt(s.t_final) << "\n";
  if (s.u0) os << "u0 = " << fmt_vec(*s.u0) << "\n";
  os << "output_interval = " << fmt(s.output_interval) << "\nsamples_per_period = " << s.samples_per_period
     << "\nblowup = " << fmt(s.blowup) << "\nwindow_divisions = " << s.window_divisions
     << "\naveraged_step = " << fmt(s.averaged_step) << "\n";
  const auto& a = scn.analysis;
  os << "\n[analysis]\ndelta_box = " << fmt(a.delta_lower) << ", " << fmt(a.delta_upper) << "\n";
  if (!a.benevolence_members.empty()) os << "benevolence_members = " << fmt_indices(a.benevolence_members) << "\n";
  if (a.mutual_delta) os << "mutual_delta = " << fmt_vec(*a.mutual_delta) << "\n";
  if (!a.dne_deltas.empty()) os << "dne_deltas = " << fmt_list(a.dne_deltas) << "\n";
  if (scn.sweep) {
    os << "\n[sweep]\nparameter = " << scn.sweep->parameter << "\nfrom = " << fmt(scn.sweep->from)
       << "\nto = " << fmt(scn.sweep->to) << "\nstep = " << fmt(scn.sweep->step) << "\n";
  }
  return os.str();
}

QuadraticGamed build_quadratic(const Scenario& scn) {
  const auto& g = scn.game;
  if (g.type == GameSpec::Type::aggregative) throw PreconditionError("scenario game is aggregative, not quadratic");
  if (g.type == GameSpec::Type::quadratic) return QuadraticGamed(g.Q, g.b, g.p);
  // J_1 = -(S - (x1 - x2)/p)(x1 - m1), J_2 = -((x1 - x2)/p)(x2 - m2)
  const double p = g.preference, S = g.demand, m1 = g.marginal_costs(0), m2 = g.marginal_costs(1);
  Matrixd Q1(2, 2), Q2(2, 2);
  Q1 << 2 / p, -1 / p, -1 / p, 0;
  Q2 << 0, -1 / p, -1 / p, 2 / p;
  Vectord b1(2), b2(2);
  b1 << -S - m1 / p, m1 / p;
  b2 << m2 / p, -m2 / p;
  return QuadraticGamed({Q1, Q2}, {b1, b2}, {S * m1, 0.0});
}

AggregativeGamed build_aggregative(const Scenario& scn) {
  const auto& g = scn.game;
  if (g.type != GameSpec::Type::aggregative) throw PreconditionError("scenario game is not aggregative");
  std::vector<ConvexCost<double>> own;
  for (const auto& terms : g.costs) {
    // derivative order 0, 1 or 2 of the summed terms
    auto eval = [terms](double x, int order) {
      double v = 0;
      for (const auto& t : terms) {
        if (t.kind == CostTerm::Kind::exp) {
          const double a = t.args[0], r = t.args[1];
          v += a * std::pow(r, order) * std::exp(r * x);
          continue;
        }
        for (std::size_t j = std::size_t(order); j < t.args.size(); ++j) {
          double c = t.args[j];
          for (int o = 0; o < order; ++o) c *= double(j - std::size_t(o));
          v += c * std::pow(x, double(j - std::size_t(order)));
        }
      }
      return v;
    };
    own.push_back({[eval](double x) { return eval(x, 0); }, [eval](double x) { return eval(x, 1); },
                   [eval](double x) { return eval(x, 2); }});
  }
  return AggregativeGamed(own, g.kappa, g.alpha);
}

GameModel build_game(const Scenario& scn) {
  if (scn.game.type == GameSpec::Type::aggregative) return GameModel(build_aggregative(scn));
  return GameModel(build_quadratic(scn));
}

DeceptionStructure build_deception(const Scenario& scn) {
  std::vector<Deceiver> out;
  for (const auto& d : scn.deceivers) {
    Deceiver dec;
    dec.player = d.player;
    dec.targets = d.targets;
    dec.phase_errors = d.phase_errors;
    dec.gain_sign = d.gain_sign;
    dec.reference = d.reference;
    out.push_back(dec);
  }
  return DeceptionStructure(scn.game.players, out);
}

ClosedLoop build_loop(const Scenario& scn) {
  if (!scn.probe) throw PreconditionError("scenario has no [probe] section");
  ClosedLoop loop;
  loop.game = build_game(scn);
  loop.deception = build_deception(scn);
  loop.probe = *scn.probe;
  for (const auto& d : scn.deceivers) {
    switch (d.policy) {
      case PolicyKind::fixed: loop.policies.push_back(FixedDelta{d.delta}); break;
      case PolicyKind::integral: loop.policies.push_back(IntegralDelta{d.epsilon}); break;
      case PolicyKind::phase_lead: loop.policies.push_back(PhaseLeadDelta{d.epsilon, d.G1, d.G2}); break;
      case PolicyKind::price_reference: loop.policies.push_back(PriceReferenceDelta{d.epsilon, d.u_ref}); break;
    }
  }
  loop.validate();
  return loop;
}

SimOptions build_sim_options(const Scenario& scn) {
  SimOptions opt;
  opt.t_final = scn.sim.t_final;
  opt.samples_per_period = scn.sim.samples_per_period;
  opt.output_interval = scn.sim.output_interval;
  opt.blowup = scn.sim.blowup;
  opt.window_divisions = scn.sim.window_divisions;
  opt.averaged_step = scn.sim.averaged_step;
  return opt;
}

Vectord build_initial_state(const Scenario& scn, const ClosedLoop& loop) {
  const Vectord u0 = scn.sim.u0 ? *scn.sim.u0 : loop.game.nash_equilibrium();
  Vectord delta0(Eigen::Index(scn.deceivers.size()));
  for (std::size_t s = 0; s < scn.deceivers.size(); ++s) {
    const auto& d = scn.deceivers[s];
    delta0(Eigen::Index(s)) = d.policy == PolicyKind::fixed ? d.delta : d.delta0;
  }
  return loop.initial_state(u0, delta0);
}

}  // namespace dnes
