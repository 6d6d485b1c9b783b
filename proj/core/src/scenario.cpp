#include "leafwise/scenario.hpp"

#include "leafwise/config.hpp"
#include "leafwise/error.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

namespace leafwise::diffeo {

const CDiffeo& Scenario::diffeo(const std::string& name) const {
  const auto it = diffeos.find(name);
  require(it != diffeos.end(), ErrorKind::Parse, "unknown diffeomorphism '" + name + "'");
  return it->second;
}

namespace {

struct Line {
  int number;
  std::vector<std::string> tokens;

  [[noreturn]] void error(const std::string& what) const {
    fail(ErrorKind::Parse, "scenario line " + std::to_string(number) + ": " + what);
  }
};

double number(const Line& line, const std::string& tok) {
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
  if (ec != std::errc{} || ptr != tok.data() + tok.size()) line.error("bad number '" + tok + "'");
  return v;
}

Vec vector(const Line& line, const std::string& tok, int dim) {
  std::vector<double> vals;
  std::stringstream ss(tok);
  std::string part;
  while (std::getline(ss, part, ',')) vals.push_back(number(line, part));
  if (static_cast<int>(vals.size()) != dim) line.error("expected " + std::to_string(dim) + " components in '" + tok + "'");
  return Eigen::Map<Vec>(vals.data(), dim);
}

// key value pairs after the first `skip` tokens.
std::map<std::string, std::string> options(const Line& line, std::size_t skip) {
  std::map<std::string, std::string> out;
  if ((line.tokens.size() - skip) % 2 != 0) line.error("options must come in key value pairs");
  for (std::size_t i = skip; i < line.tokens.size(); i += 2) out[line.tokens[i]] = line.tokens[i + 1];
  return out;
}

const std::string& need(const Line& line, const std::map<std::string, std::string>& opts, const std::string& key) {
  const auto it = opts.find(key);
  if (it == opts.end()) line.error("missing '" + key + "'");
  return it->second;
}

double optional_number(const Line& line, const std::map<std::string, std::string>& opts, const std::string& key,
                       double fallback) {
  const auto it = opts.find(key);
  return it == opts.end() ? fallback : number(line, it->second);
}

void check_arity(const Line& line, std::size_t n) {
  if (line.tokens.size() != n) line.error("expected " + std::to_string(n - 1) + " arguments");
}

CDiffeo run_program(const Line& line, const Scenario& s) {
  std::vector<CDiffeo> stack;
  auto pop = [&]() {
    if (stack.empty()) line.error("program stack underflow");
    CDiffeo top = stack.back();
    stack.pop_back();
    return top;
  };
  for (std::size_t i = 2; i < line.tokens.size(); ++i) {
    const std::string& tok = line.tokens[i];
    if (tok == "inv") {
      stack.push_back(pop().inverse());
    } else if (tok == "o" || tok == "comm" || tok == "conj") {
      const CDiffeo b = pop();
      const CDiffeo a = pop();
      stack.push_back(tok == "o" ? compose(a, b) : tok == "comm" ? commutator(a, b) : conjugate(a, b));
    } else if (tok == "id") {
      stack.push_back(CDiffeo::identity(s.dim));
    } else {
      const auto it = s.diffeos.find(tok);
      if (it == s.diffeos.end()) line.error("unknown name '" + tok + "' in program");
      stack.push_back(it->second);
    }
  }
  if (stack.size() != 1) line.error("program must leave exactly one element");
  return stack.back();
}

}  // namespace

Scenario parse_scenario(std::istream& in) {
  Scenario s;
  std::string raw;
  int number_of_line = 0;
  while (std::getline(in, raw)) {
    ++number_of_line;
    if (const auto hash = raw.find('#'); hash != std::string::npos) raw.erase(hash);
    Line line{number_of_line, {}};
    std::stringstream ss(raw);
    for (std::string tok; ss >> tok;) line.tokens.push_back(tok);
    if (line.tokens.empty()) continue;
    const std::string& head = line.tokens[0];
    const auto& t = line.tokens;
    if (head == "dim" || head == "seed" || head == "probes" || head == "epsilon" || head == "trials" || head == "q" ||
        head == "tolerance") {
      check_arity(line, 2);
      const double v = number(line, t[1]);
      if (head == "dim") {
        if (!s.diffeos.empty() || !s.boxes.empty()) line.error("dim must precede definitions");
        s.dim = static_cast<int>(v);
      } else if (head == "seed") {
        s.seed = static_cast<std::uint64_t>(v);
      } else if (head == "probes") {
        s.probes = static_cast<std::size_t>(v);
      } else if (head == "epsilon") {
        s.epsilon = v;
      } else if (head == "tolerance") {
        if (!(v > 0.0)) line.error("tolerance must be positive");
        s.tolerance = v;
      } else if (head == "trials") {
        s.trials = static_cast<int>(v);
      } else {
        s.q = static_cast<int>(v);
      }
      if (s.dim < 1) line.error("dim must be positive");
    } else if (head == "box") {
      check_arity(line, 2 + 2 * static_cast<std::size_t>(s.dim));
      Vec lo(s.dim);
      Vec hi(s.dim);
      for (int i = 0; i < s.dim; ++i) {
        lo[i] = number(line, t[2 + i]);
        hi[i] = number(line, t[2 + s.dim + i]);
      }
      s.boxes.insert_or_assign(t[1], Box(lo, hi));
    } else if (head == "bump" || head == "displacement" || head == "field") {
      if (t.size() < 2) line.error("missing name");
      const auto opts = options(line, 2);
      const Vec c = vector(line, need(line, opts, "center"), s.dim);
      const double r = number(line, need(line, opts, "radius"));
      const Vec d = vector(line, need(line, opts, "direction"), s.dim);
      if (head == "bump") {
        FlowOptions fo;
        fo.plateau = optional_number(line, opts, "plateau", 0.0);
        fo.tolerance = s.tolerance;
        s.diffeos.insert_or_assign(t[1], make_bump_flow(c, r, d, number(line, need(line, opts, "time")), fo));
      } else if (head == "displacement") {
        s.diffeos.insert_or_assign(
            t[1], make_displacement(c, r, d, number(line, need(line, opts, "amplitude")),
                                    optional_number(line, opts, "plateau", 0.0)));
      } else {
        s.fields.insert_or_assign(t[1], BumpField{c, r, d});
      }
    } else if (head == "rotation") {
      if (t.size() < 2) line.error("missing name");
      const auto opts = options(line, 2);
      RotationChart chart;
      chart.k = s.dim;
      chart.core = optional_number(line, opts, "core", 1.0);
      chart.width = optional_number(line, opts, "width", 0.5);
      const double peak = number(line, need(line, opts, "peak"));
      PairedPath p = with_time_form(make_rotation_path(disk_bump(peak), chart));
      s.diffeos.insert_or_assign(t[1], p.path.at(1.0));
      s.paths.insert_or_assign(t[1], std::move(p));
    } else if (head == "program") {
      if (t.size() < 3) line.error("program needs a name and tokens");
      s.diffeos.insert_or_assign(t[1], run_program(line, s));
    } else if (head == "tsuboi") {
      check_arity(line, 5);
      s.tsuboi.push_back({t[1], t[2], t[3], t[4]});
    } else if (head == "fragment") {
      check_arity(line, 14);
      Scenario::FragmentLine f;
      f.g = t[1];
      f.sigmas.assign(t.begin() + 2, t.begin() + 8);
      f.fields.assign(t.begin() + 8, t.end());
      s.fragment = f;
    } else if (head == "concat") {
      check_arity(line, 3);
      s.concat = {t[1], t[2]};
    } else if (head == "suspend") {
      check_arity(line, 2);
      s.suspend = t[1];
    } else if (head == "veps") {
      s.veps.assign(t.begin() + 1, t.end());
    } else {
      line.error("unknown directive '" + head + "'");
    }
  }
  return s;
}

Scenario load_scenario(const std::string& path) {
  std::ifstream in(path);
  require(in.good(), ErrorKind::Io, "cannot open scenario " + path);
  return parse_scenario(in);
}

namespace {

const PairedPath& path_named(const Scenario& s, const std::string& name) {
  const auto it = s.paths.find(name);
  require(it != s.paths.end(), ErrorKind::Parse, "unknown path '" + name + "'");
  return it->second;
}

const Box& box_named(const Scenario& s, const std::string& name) {
  const auto it = s.boxes.find(name);
  require(it != s.boxes.end(), ErrorKind::Parse, "unknown box '" + name + "'");
  return it->second;
}

nlohmann::json tsuboi_json(const Scenario& s) {
  require(!s.tsuboi.empty(), ErrorKind::Parse, "scenario has no tsuboi lines");
  const auto& first = s.tsuboi.front();
  std::vector<std::pair<CDiffeo, CDiffeo>> pairs;
  for (const auto& l : s.tsuboi) {
    require(l.h == first.h && l.u == first.u, ErrorKind::Parse, "all tsuboi lines must share h and U");
    pairs.emplace_back(s.diffeo(l.a), s.diffeo(l.b));
  }
  const TsuboiReport r = tsuboi_product_verify(pairs, s.diffeo(first.h), box_named(s, first.u), s.probes, s.seed);
  return {{"preconditions_met", r.preconditions_met()},
          {"supports_in_box", r.supports_in_box},
          {"displaced", r.displaced},
          {"discrepancy", r.discrepancy},
          {"probes", r.probes},
          {"commutators", pairs.size()},
          {"factors", r.factors}};
}

nlohmann::json concat_json(const Scenario& s) {
  require(s.concat.size() == 2, ErrorKind::Parse, "scenario has no concat line");
  const PairedPath p1 = adjust(path_named(s, s.concat[0]));
  const PairedPath p2 = adjust(path_named(s, s.concat[1]));
  const PairedPath joined = concatenate(p1, p2);
  const Box box = p1.path.support.united(p2.path.support);
  const auto probes = probe_points(box, s.probes, s.seed);
  const double endpoint = max_discrepancy(joined.path.at(1.0), compose(p2.path.at(1.0), p1.path.at(1.0)), probes);
  const std::vector<Vec> few(probes.begin(), probes.begin() + static_cast<std::ptrdiff_t>(std::min<std::size_t>(probes.size(), 50)));
  return {{"endpoint_error", endpoint},
          {"alpha_margin", alpha_margin(joined, few)},
          {"horizontality_defect", horizontality_defect(joined.path, few)},
          {"probes", probes.size()}};
}

nlohmann::json suspend_json(const Scenario& s) {
  require(s.suspend.has_value(), ErrorKind::Parse, "scenario has no suspend line");
  const PairedPath& p = path_named(s, *s.suspend);
  const HolonomyReport h = check_suspension(suspend(p), std::min<std::size_t>(s.probes, 500), s.seed);
  std::vector<std::size_t> qs{1, 2, 4, 8};
  nlohmann::json norms = nlohmann::json::array();
  double telescoping = 0.0;
  const auto probes = probe_points(p.path.support, std::min<std::size_t>(s.probes, 1000), s.seed + 3);
  for (std::size_t q : qs) {
    const auto segs = subdivide_path(p, static_cast<int>(q));
    std::vector<CDiffeo> ends;
    for (auto it = segs.rbegin(); it != segs.rend(); ++it) ends.push_back(it->path.at(1.0));
    telescoping = std::max(telescoping, max_discrepancy(product(ends), p.path.at(1.0), probes));
    norms.push_back({{"q", q}, {"norm", segment_norm(segs)}});
  }
  return {{"holonomy_error", h.holonomy_error},
          {"outside_error", h.outside_error},
          {"alpha_min", h.alpha_min},
          {"probes", h.probes},
          {"telescoping_error", telescoping},
          {"segment_norms", norms}};
}

nlohmann::json veps_json(const Scenario& s) {
  nlohmann::json out = nlohmann::json::array();
  for (const auto& name : s.veps) {
    const VEpsEstimate e = v_eps_estimate(s.diffeo(name));
    out.push_back({{"name", name},
                   {"norm", e.norm},
                   {"in_v_eps", in_v_eps(e.norm, s.epsilon)},
                   {"epsilon", s.epsilon}});
  }
  return {{"estimates", out}};
}

nlohmann::json frag72_json(const Scenario& s) {
  nlohmann::json out;
  if (s.fragment) {
    const auto& f = *s.fragment;
    std::vector<CDiffeo> sigmas;
    std::vector<BumpField> fields;
    for (const auto& n : f.sigmas) sigmas.push_back(s.diffeo(n));
    for (const auto& n : f.fields) {
      if (n == "zero") {
        fields.push_back({Vec::Zero(s.dim), 1.0, Vec::Zero(s.dim)});
      } else {
        const auto it = s.fields.find(n);
        require(it != s.fields.end(), ErrorKind::Parse, "unknown field '" + n + "'");
        fields.push_back(it->second);
      }
    }
    FlowOptions flow;
    flow.tolerance = s.tolerance;
    const FragmentationReport r = fragmentation_verify(s.diffeo(f.g), sigmas, fields, s.probes, s.seed, flow);
    out["fragmentation"] = {{"discrepancy", r.discrepancy}, {"probes", r.probes}};
  }
  Compose72Options opt;
  opt.k = s.dim;
  opt.centers = Box::cube(s.dim, -0.5, 0.5);
  const Compose72Report r = compose_72_check(s.epsilon, s.seed, s.trials, opt);
  nlohmann::json trials = nlohmann::json::array();
  for (const auto& t : r.trials) {
    trials.push_back({{"composite_norm", t.composite_norm}, {"worst_factor_norm", t.worst_factor_norm}, {"in_v1", t.in_v1}});
  }
  out["compose72"] = {{"epsilon", r.epsilon},   {"seed", r.seed},          {"pass_rate", r.pass_rate()},
                      {"worst_norm", r.worst_norm}, {"all_in_v1", r.all_in_v1()}, {"trials", trials}};
  return out;
}

}  // namespace

nlohmann::json run_scenario(const std::string& command, const Scenario& s) {
  nlohmann::json body;
  if (command == "tsuboi") {
    body = tsuboi_json(s);
  } else if (command == "concat") {
    body = concat_json(s);
  } else if (command == "suspend") {
    body = suspend_json(s);
  } else if (command == "veps") {
    body = veps_json(s);
  } else if (command == "frag72") {
    body = frag72_json(s);
  } else {
    fail(ErrorKind::Precondition, "unknown diffeo command '" + command + "'");
  }
  return {{"schema", 1}, {"version", std::string(version())}, {"command", command},
          {"dim", s.dim}, {"seed", s.seed}, {"result", body}};
}

}  // namespace leafwise::diffeo
